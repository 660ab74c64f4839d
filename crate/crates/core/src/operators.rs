//! One-dimensional classical operators on step functions over an interval
//! `Ω`: maximal and fractional maximal functions, the Riesz potential, the
//! Hilbert transform, convolution and the Poisson maximal function.
//!
//! Functions vanish outside the partition they are given on. Outputs are
//! sampled at cell midpoints, except for convolution, which returns exact
//! cell averages. Singular kernels are integrated cell by cell in closed form.

use std::fmt;

use crate::error::{Error, Result};
use crate::exponent::{ExponentFunction, Term};
use crate::grid::{rearrange, resample, Partition, Rearranged, StepFunction};
use crate::norms::{ln_lorentz_norm, Assumptions, NormSpec};
use crate::protocol::{self, BoundednessReport, Experiment, FamilySpec, ProtocolSettings, Ratio};
use crate::scalar::{exact_sum, from_usize, lit, ExactSum, Real};

/// `∫_{-∞}^{y} |f|` for a step function extended by zero.
struct Primitive<'a, T> {
    bps: &'a [T],
    vals: Vec<T>,
    cum: Vec<T>,
}

impl<'a, T: Real> Primitive<'a, T> {
    fn new(f: &'a StepFunction<T>) -> Self {
        let bps = f.partition().breakpoints();
        let vals: Vec<T> = f.values().iter().map(|v| v.abs()).collect();
        let mut cum = Vec::with_capacity(bps.len());
        let mut acc = T::zero();
        cum.push(acc);
        for k in 0..vals.len() {
            acc = acc + vals[k] * (bps[k + 1] - bps[k]);
            cum.push(acc);
        }
        Self { bps, vals, cum }
    }

    /// Value at `y` given the index `k` of the cell containing `y` (or
    /// `usize::MAX` / `n` outside on the left / right).
    fn at(&self, y: T, k: usize) -> T {
        let n = self.vals.len();
        if k == usize::MAX || y <= self.bps[0] {
            T::zero()
        } else if k >= n {
            self.cum[n]
        } else {
            self.cum[k] + self.vals[k] * (y - self.bps[k])
        }
    }

    /// Advances `k` so that `y` lies in cell `k` (`n` past the end).
    fn forward(&self, y: T, mut k: usize) -> usize {
        let n = self.vals.len();
        if y < self.bps[0] {
            return usize::MAX;
        }
        if k == usize::MAX {
            k = 0;
        }
        while k < n && y >= self.bps[k + 1] {
            k += 1;
        }
        k
    }

    /// Moves `k` back so that `y` lies in cell `k` (`usize::MAX` before the
    /// start).
    fn backward(&self, y: T, mut k: usize) -> usize {
        let n = self.vals.len();
        if y >= self.bps[n] {
            return n;
        }
        if y < self.bps[0] {
            return usize::MAX;
        }
        if k >= n {
            k = n - 1;
        }
        loop {
            if y >= self.bps[k] {
                return k;
            }
            if k == 0 {
                return usize::MAX;
            }
            k -= 1;
        }
    }
}

/// `sup_r ∫_{B(x,r)} |f| / (2r)^{1-α}` over the radii at which the ball's
/// endpoints meet breakpoints. Between such radii the ball integral is
/// affine in `r`, so the quotient has no interior maximum and the finite
/// sup is exact. For `α = 0` the `r → 0` limit `|f(x)|` is included.
fn ball_sup<T: Real>(prim: &Primitive<T>, x: T, alpha: T) -> T {
    let bps = prim.bps;
    let n = prim.vals.len();
    let one_minus = T::one() - alpha;
    let quot = |r: T, mass: T| -> T {
        if r <= T::zero() {
            return T::zero();
        }
        let den = if alpha == T::zero() {
            r + r
        } else {
            ((r + r).ln() * one_minus).exp()
        };
        mass / den
    };
    let home = if x < bps[0] {
        usize::MAX
    } else if x >= bps[n] {
        n
    } else {
        bps.partition_point(|&b| b <= x) - 1
    };
    let mut best = if alpha == T::zero() && home < n { prim.vals[home] } else { T::zero() };

    // Radii reaching breakpoints on the left; the right end moves forward.
    let mut k_right = home;
    let left_start = if home == usize::MAX { 0 } else { home.min(n) + 1 };
    for j in (0..left_start.min(n + 1)).rev() {
        let r = x - bps[j];
        if r <= T::zero() {
            continue;
        }
        k_right = prim.forward(x + r, k_right);
        let left = if j == 0 { T::zero() } else { prim.cum[j] };
        let mass = prim.at(x + r, k_right) - left;
        best = best.max(quot(r, mass));
    }
    // Radii reaching breakpoints on the right; the left end moves backward.
    let mut k_left = home;
    let right_start = if home == usize::MAX { 0 } else { (home + 1).min(n + 1) };
    for j in right_start..=n {
        let r = bps[j] - x;
        if r <= T::zero() {
            continue;
        }
        k_left = prim.backward(x - r, k_left);
        let mass = prim.cum[j] - prim.at(x - r, k_left);
        best = best.max(quot(r, mass));
    }
    best
}

/// `Mf(x)` for the centered maximal function.
pub fn maximal_at<T: Real>(f: &StepFunction<T>, x: T) -> T {
    ball_sup(&Primitive::new(f), x, T::zero())
}

/// Centered Hardy–Littlewood maximal function at cell midpoints.
pub fn maximal<T: Real>(f: &StepFunction<T>) -> StepFunction<T> {
    let prim = Primitive::new(f);
    let values = f
        .partition()
        .midpoints()
        .into_iter()
        .map(|x| ball_sup(&prim, x, T::zero()))
        .collect();
    StepFunction::new(f.partition().clone(), values).expect("maximal values are finite")
}

fn check_alpha<T: Real>(alpha: T) -> Result<()> {
    if alpha > T::zero() && alpha < T::one() {
        Ok(())
    } else {
        Err(Error::Invalid(format!("order α = {alpha} must lie in (0, 1)")))
    }
}

/// `M^α f(x) = sup_r |B(x,r)|^{α-1} ∫_{B(x,r)} |f|`.
pub fn fractional_maximal_at<T: Real>(f: &StepFunction<T>, alpha: T, x: T) -> Result<T> {
    check_alpha(alpha)?;
    Ok(ball_sup(&Primitive::new(f), x, alpha))
}

/// Fractional maximal function at cell midpoints.
pub fn fractional_maximal<T: Real>(f: &StepFunction<T>, alpha: T) -> Result<StepFunction<T>> {
    check_alpha(alpha)?;
    let prim = Primitive::new(f);
    let values = f
        .partition()
        .midpoints()
        .into_iter()
        .map(|x| ball_sup(&prim, x, alpha))
        .collect();
    StepFunction::new(f.partition().clone(), values)
}

/// `∫_a^b |x - y|^{α-1} dy`.
fn riesz_cell<T: Real>(x: T, a: T, b: T, alpha: T) -> T {
    let pw = |d: T| (alpha * d.ln()).exp();
    if x >= b {
        let near = x - b;
        if near == T::zero() {
            pw(x - a) / alpha
        } else {
            pw(near) * (alpha * ((b - a) / near).ln_1p()).exp_m1() / alpha
        }
    } else if x <= a {
        let near = a - x;
        if near == T::zero() {
            pw(b - x) / alpha
        } else {
            pw(near) * (alpha * ((b - a) / near).ln_1p()).exp_m1() / alpha
        }
    } else {
        (pw(x - a) + pw(b - x)) / alpha
    }
}

/// `I^α f(x) = ∫ f(y) |x - y|^{α-1} dy`.
pub fn riesz_at<T: Real>(f: &StepFunction<T>, alpha: T, x: T) -> Result<T> {
    check_alpha(alpha)?;
    Ok(riesz_sum(f, alpha, x))
}

fn riesz_sum<T: Real>(f: &StepFunction<T>, alpha: T, x: T) -> T {
    let bps = f.partition().breakpoints();
    let mut acc = T::zero();
    for (k, &v) in f.values().iter().enumerate() {
        if v != T::zero() {
            acc = acc + v * riesz_cell(x, bps[k], bps[k + 1], alpha);
        }
    }
    acc
}

/// Riesz potential at cell midpoints.
pub fn riesz_potential<T: Real>(f: &StepFunction<T>, alpha: T) -> Result<StepFunction<T>> {
    check_alpha(alpha)?;
    let values = f
        .partition()
        .midpoints()
        .into_iter()
        .map(|x| riesz_sum(f, alpha, x))
        .collect();
    StepFunction::new(f.partition().clone(), values)
}

/// `PV ∫_a^b dy / (x - y)` for `x` off the endpoints.
pub(crate) fn hilbert_cell<T: Real>(x: T, a: T, b: T) -> T {
    if x > b {
        ((b - a) / (x - b)).ln_1p()
    } else if x < a {
        -((b - a) / (a - x)).ln_1p()
    } else {
        (x - a).ln() - (b - x).ln()
    }
}

/// `Hf(x) = PV ∫ f(y) / (x - y) dy`. At a breakpoint the logarithmic
/// singularities of the two neighbouring cells cancel when `f` is continuous
/// there; otherwise the value is infinite.
pub fn hilbert_at<T: Real>(f: &StepFunction<T>, x: T) -> T {
    let bps = f.partition().breakpoints();
    let vals = f.values();
    let n = vals.len();
    let hit = bps.binary_search_by(|b| b.partial_cmp(&x).unwrap_or(std::cmp::Ordering::Less)).ok();
    let mut acc = T::zero();
    for k in 0..n {
        let v = vals[k];
        if v == T::zero() {
            continue;
        }
        let (a, b) = (bps[k], bps[k + 1]);
        match hit {
            Some(j) if j == k + 1 => acc = acc + v * (x - a).ln(),
            Some(j) if j == k => acc = acc - v * (b - x).ln(),
            _ => acc = acc + v * hilbert_cell(x, a, b),
        }
    }
    if let Some(j) = hit {
        let left = if j > 0 { vals[j - 1] } else { T::zero() };
        let right = if j < n { vals[j] } else { T::zero() };
        // The `ln 0` parts: +left·(-ln 0) and -right·(-ln 0).
        if left != right {
            return if left > right { T::infinity() } else { T::neg_infinity() };
        }
    }
    acc
}

/// Hilbert transform at cell midpoints.
pub fn hilbert<T: Real>(f: &StepFunction<T>) -> StepFunction<T> {
    let values = f
        .partition()
        .midpoints()
        .into_iter()
        .map(|x| hilbert_at(f, x))
        .collect();
    StepFunction::new(f.partition().clone(), values).expect("midpoints avoid breakpoints")
}

/// Relative positions of the sub-cell breakpoints of [`graded_partition`],
/// geometrically graded towards both ends of each cell.
const GRADING: [f64; 11] = [
    0.0,
    1.0 / 256.0,
    1.0 / 64.0,
    1.0 / 16.0,
    0.25,
    0.5,
    0.75,
    1.0 - 1.0 / 16.0,
    1.0 - 1.0 / 64.0,
    1.0 - 1.0 / 256.0,
    1.0,
];

/// Splits every cell into ten sub-cells graded towards its endpoints, where
/// the Hilbert transform of a step function has logarithmic singularities.
pub fn graded_partition<T: Real>(p: &Partition<T>) -> Partition<T> {
    let bps = p.breakpoints();
    let mut out = Vec::with_capacity(p.n_cells() * (GRADING.len() - 1) + 1);
    out.push(bps[0]);
    for k in 0..p.n_cells() {
        let (a, b) = (bps[k], bps[k + 1]);
        let w = b - a;
        for &s in &GRADING[1..GRADING.len() - 1] {
            let s: T = lit(s);
            let x = if s <= lit(0.5) { a + w * s } else { b - w * (T::one() - s) };
            if x > *out.last().expect("nonempty") && x < b {
                out.push(x);
            }
        }
        out.push(b);
    }
    Partition::new(out).expect("graded points increase")
}

/// Hilbert transform at the midpoints of [`graded_partition`].
pub fn hilbert_graded<T: Real>(f: &StepFunction<T>) -> StepFunction<T> {
    graded_singular(f, hilbert_cell, false)
}

/// `Σ_j f_j K(x, a_j, b_j)` at the midpoints of [`graded_partition`], for a
/// cell kernel `K` singular only at the ends of its own cell. Cells within
/// two of the current one (cyclically when `periodic`) are summed exactly at
/// every sub-midpoint; the rest is smooth across the cell and interpolated
/// quadratically from its values at the cell's endpoints and midpoint.
pub(crate) fn graded_singular<T: Real>(
    f: &StepFunction<T>,
    kernel: impl Fn(T, T, T) -> T,
    periodic: bool,
) -> StepFunction<T> {
    const NEAR: usize = 2;
    let p = f.partition();
    let bps = p.breakpoints();
    let vals = f.values();
    let n = vals.len();
    let fine = graded_partition(p);
    let fb = fine.breakpoints();
    let nonzero: Vec<usize> = (0..n).filter(|&j| vals[j] != T::zero()).collect();
    let is_near = |j: usize, k: usize| -> bool {
        let d = if j > k { j - k } else { k - j };
        if d <= NEAR {
            return true;
        }
        if !periodic {
            return false;
        }
        // Across the seam the cells may be far apart in index but close on
        // the circle.
        let seam_gap = if j < k {
            bps[j] - bps[0] + bps[n] - bps[k + 1]
        } else {
            bps[k] - bps[0] + bps[n] - bps[j + 1]
        };
        n - d <= NEAR || seam_gap < (bps[k + 1] - bps[k]) * lit(2.0)
    };
    let mut out = Vec::with_capacity(fine.n_cells());
    let mut i = 0usize;
    let half: T = lit(0.5);
    let two: T = lit(2.0);
    let four: T = lit(4.0);
    for k in 0..n {
        let (a, b) = (bps[k], bps[k + 1]);
        let w = b - a;
        let near: Vec<usize> = nonzero.iter().copied().filter(|&j| is_near(j, k)).collect();
        let far_at = |x: T| -> T {
            let mut acc = T::zero();
            for &j in &nonzero {
                if !is_near(j, k) {
                    acc = acc + vals[j] * kernel(x, bps[j], bps[j + 1]);
                }
            }
            acc
        };
        let (f0, fm, f1) = if near.len() == nonzero.len() {
            (T::zero(), T::zero(), T::zero())
        } else {
            (far_at(a), far_at(a + w * half), far_at(b))
        };
        while i < fine.n_cells() && fb[i + 1] <= b {
            let x = (fb[i] + fb[i + 1]) * half;
            let s = (x - a) / w;
            let far = f0 * (two * s - T::one()) * (s - T::one())
                + fm * four * s * (T::one() - s)
                + f1 * s * (two * s - T::one());
            let mut acc = far;
            for &j in &near {
                acc = acc + vals[j] * kernel(x, bps[j], bps[j + 1]);
            }
            out.push(acc);
            i += 1;
        }
    }
    StepFunction::new(fine, out).expect("sub-midpoints avoid breakpoints")
}

/// `∫_c^d (χ_{[a,b]} * χ_{[e,g]})(x) dx`, from the second antiderivative of
/// the ramp.
fn box_conv_integral<T: Real>(a: T, b: T, e: T, g: T, c: T, d: T) -> T {
    let r2 = |u: T| if u > T::zero() { u * u / lit(2.0) } else { T::zero() };
    let ramp_int = |s: T| r2(d - s) - r2(c - s);
    ramp_int(a + e) - ramp_int(b + e) - ramp_int(a + g) + ramp_int(b + g)
}

/// Breakpoints of `k * f`: all pairwise sums, deduplicated.
pub fn convolution_partition<T: Real>(k: &Partition<T>, f: &Partition<T>) -> Partition<T> {
    let mut pts: Vec<T> = Vec::with_capacity(k.breakpoints().len() * f.breakpoints().len());
    for &a in k.breakpoints() {
        for &b in f.breakpoints() {
            pts.push(a + b);
        }
    }
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    pts.dedup();
    Partition::new(pts).expect("sums of breakpoints form a partition")
}

/// Cell averages of `k * f` over `target` (all pairwise breakpoint sums when
/// `None`, on which the convolution is piecewise linear).
pub fn convolve<T: Real>(k: &StepFunction<T>, f: &StepFunction<T>, target: Option<&Partition<T>>) -> Result<StepFunction<T>> {
    let target = match target {
        Some(t) => t.clone(),
        None => convolution_partition(k.partition(), f.partition()),
    };
    let kb = k.partition().breakpoints();
    let fb = f.partition().breakpoints();
    let (k_lo, k_hi) = (kb[0], kb[kb.len() - 1]);
    let (f_lo, f_hi) = (fb[0], fb[fb.len() - 1]);
    let nz_k: Vec<usize> = (0..k.n_cells()).filter(|&i| k.values()[i] != T::zero()).collect();
    let nz_f: Vec<usize> = (0..f.n_cells()).filter(|&j| f.values()[j] != T::zero()).collect();
    let mut values = Vec::with_capacity(target.n_cells());
    let mut terms = Vec::new();
    for c in 0..target.n_cells() {
        let (lo, hi) = target.cell(c);
        if hi <= k_lo + f_lo || lo >= k_hi + f_hi {
            values.push(T::zero());
            continue;
        }
        terms.clear();
        for &i in &nz_k {
            let (a, b) = (kb[i], kb[i + 1]);
            if a + f_lo >= hi || b + f_hi <= lo {
                continue;
            }
            for &j in &nz_f {
                let (e, g) = (fb[j], fb[j + 1]);
                if a + e >= hi || b + g <= lo {
                    continue;
                }
                terms.push(k.values()[i] * f.values()[j] * box_conv_integral(a, b, e, g, lo, hi));
            }
        }
        values.push(exact_sum(terms.iter().copied()) / (hi - lo));
    }
    StepFunction::new(target, values)
}

/// `P_y f(x) = (1/π) ∫ y / ((x-s)² + y²) f(s) ds`.
pub fn poisson_at<T: Real>(f: &StepFunction<T>, x: T, y: T) -> T {
    let bps = f.partition().breakpoints();
    let mut acc = T::zero();
    for (k, &v) in f.values().iter().enumerate() {
        if v == T::zero() {
            continue;
        }
        let (a, b) = (bps[k], bps[k + 1]);
        // atan((x-a)/y) - atan((x-b)/y), as one angle in (0, π).
        acc = acc + v * ((b - a) * y).atan2(y * y + (x - a) * (x - b));
    }
    acc / T::PI()
}

/// The `y` values of the Poisson supremum: 64 log-spaced values from the
/// smallest cell width to ten times the domain width.
pub fn poisson_heights<T: Real>(p: &Partition<T>) -> Vec<T> {
    let h = p.widths().into_iter().fold(T::infinity(), T::min);
    let top = (p.truncation() - p.start()) * lit(10.0);
    let (lh, lt) = (h.ln(), top.ln());
    (0..64)
        .map(|i| (lh + (lt - lh) * from_usize::<T>(i) / lit(63.0)).exp())
        .collect()
}

/// `sup_y |P_y f|` at cell midpoints over [`poisson_heights`], together with
/// the `y → 0` limit `|f(x)|`.
pub fn poisson_sup<T: Real>(f: &StepFunction<T>) -> StepFunction<T> {
    let ys = poisson_heights(f.partition());
    let values = f
        .partition()
        .midpoints()
        .into_iter()
        .zip(f.values())
        .map(|(x, &v)| ys.iter().map(|&y| poisson_at(f, x, y).abs()).fold(v.abs(), T::max))
        .collect();
    StepFunction::new(f.partition().clone(), values).expect("Poisson values are finite")
}

/// Operators available to the boundedness experiments.
#[derive(Debug, Clone)]
pub enum OperatorKind<T> {
    Maximal,
    FractionalMaximal(T),
    Riesz(T),
    Hilbert,
    /// Convolution with a fixed kernel, restricted to the domain.
    Convolution(StepFunction<T>),
    PoissonSup,
}

impl<T: Real> OperatorKind<T> {
    pub fn name(&self) -> &'static str {
        match self {
            OperatorKind::Maximal => "maximal",
            OperatorKind::FractionalMaximal(_) => "fractional-maximal",
            OperatorKind::Riesz(_) => "riesz",
            OperatorKind::Hilbert => "hilbert",
            OperatorKind::Convolution(_) => "convolution",
            OperatorKind::PoissonSup => "poisson-sup",
        }
    }

    /// Order `α` of the fractional operators.
    pub fn order(&self) -> Option<T> {
        match self {
            OperatorKind::FractionalMaximal(a) | OperatorKind::Riesz(a) => Some(*a),
            _ => None,
        }
    }

    /// Applies the operator. The output lives on `f`'s partition, except for
    /// the Hilbert transform, which is sampled on [`graded_partition`].
    pub fn apply(&self, f: &StepFunction<T>) -> Result<StepFunction<T>> {
        match self {
            OperatorKind::Maximal => Ok(maximal(f)),
            OperatorKind::FractionalMaximal(a) => fractional_maximal(f, *a),
            OperatorKind::Riesz(a) => riesz_potential(f, *a),
            OperatorKind::Hilbert => Ok(hilbert_graded(f)),
            OperatorKind::Convolution(k) => convolve(k, f, Some(f.partition())),
            OperatorKind::PoissonSup => Ok(poisson_sup(f)),
        }
    }
}

impl<T: Real> fmt::Display for OperatorKind<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.order() {
            Some(a) => write!(f, "{}({a})", self.name()),
            None => f.write_str(self.name()),
        }
    }
}

/// Which pointwise rearrangement estimate to test.
#[derive(Debug, Clone)]
pub enum BoundKind<T> {
    /// `(Mf)*(t) <= C f**(t)`.
    Maximal,
    /// `(I^α f)*(t) <= c (t^{α-1} ∫_0^t f* + ∫_t^ℓ f*(s) s^{α-1} ds)`.
    Riesz(T),
    /// `(Hf)*(t) <= c ((1/t) ∫_0^t f* + ∫_t^ℓ f*(s)/s ds)`.
    Singular,
    /// `(k*f)*(t) <= k**(t) ∫_0^t f* + ∫_t^∞ k*(s) f*(s) ds`.
    Convolution(StepFunction<T>),
}

impl<T: Real> BoundKind<T> {
    pub fn name(&self) -> &'static str {
        match self {
            BoundKind::Maximal => "maximal",
            BoundKind::Riesz(_) => "riesz",
            BoundKind::Singular => "singular",
            BoundKind::Convolution(_) => "convolution",
        }
    }

    /// The operator whose rearrangement the estimate bounds.
    pub fn operator(&self) -> OperatorKind<T> {
        match self {
            BoundKind::Maximal => OperatorKind::Maximal,
            BoundKind::Riesz(a) => OperatorKind::Riesz(*a),
            BoundKind::Singular => OperatorKind::Hilbert,
            BoundKind::Convolution(k) => OperatorKind::Convolution(k.clone()),
        }
    }
}

/// Measured constant of a rearrangement estimate.
#[derive(Debug, Clone)]
pub struct RearrangementBoundReport<T> {
    /// `sup_t lhs(t) / rhs(t)`, with the rhs taken without its constant.
    pub measured_constant: T,
    /// `(number of cells, measured constant)` per grid.
    pub refinement_curve: Vec<(usize, T)>,
    /// The constant is finite, and flat within 10% across the curve.
    pub holds: bool,
}

/// `∫_0^t f*`, from the exact cumulative sums.
fn primitive_at<T: Real>(fs: &Rearranged<T>, cum: &[T], t: T) -> T {
    let bps = fs.partition().breakpoints();
    match fs.partition().locate(t) {
        Some(k) => cum[k] + fs.values()[k] * (t - bps[k]),
        None => cum[cum.len() - 1],
    }
}

/// `∫_t^∞ f*(s) w(s) ds`, where `big_w` is an antiderivative of `w`, from
/// suffix sums over the cells of `f*`.
struct WeightedTail<'a, T> {
    fs: &'a Rearranged<T>,
    suffix: Vec<T>,
}

impl<'a, T: Real> WeightedTail<'a, T> {
    fn new(fs: &'a Rearranged<T>, big_w: &impl Fn(T) -> T) -> Self {
        let bps = fs.partition().breakpoints();
        let vals = fs.values();
        let n = vals.len();
        let mut suffix = vec![T::zero(); n + 1];
        let mut acc = ExactSum::new();
        for k in (1..n).rev() {
            if vals[k] != T::zero() {
                acc.add(vals[k] * (big_w(bps[k + 1]) - big_w(bps[k])));
            }
            suffix[k] = acc.value();
        }
        Self { fs, suffix }
    }

    fn at(&self, t: T, big_w: &impl Fn(T) -> T) -> T {
        let bps = self.fs.partition().breakpoints();
        match self.fs.partition().locate(t) {
            Some(k) => {
                let v = self.fs.values()[k];
                let own = if v == T::zero() { T::zero() } else { v * (big_w(bps[k + 1]) - big_w(t)) };
                self.suffix[k + 1] + own
            }
            None => T::zero(),
        }
    }
}

/// `∫_t^∞ k*(s) f*(s) ds` for two rearrangements on different partitions.
fn product_tail<T: Real>(ks: &Rearranged<T>, fs: &Rearranged<T>, t: T) -> T {
    let kb = ks.partition().breakpoints();
    let fb = fs.partition().breakpoints();
    let (kv, fv) = (ks.values(), fs.values());
    let (mut i, mut j) = (0usize, 0usize);
    let mut lo = t;
    while i < kv.len() && kb[i + 1] <= lo {
        i += 1;
    }
    while j < fv.len() && fb[j + 1] <= lo {
        j += 1;
    }
    let mut terms = Vec::new();
    while i < kv.len() && j < fv.len() {
        let hi = kb[i + 1].min(fb[j + 1]);
        if hi > lo {
            terms.push(kv[i] * fv[j] * (hi - lo));
            lo = hi;
        }
        if kb[i + 1] <= lo {
            i += 1;
        }
        if fb[j + 1] <= lo {
            j += 1;
        }
    }
    exact_sum(terms.iter().copied())
}

/// Measures `sup_t (Tf)*(t) / rhs(t)` for the estimate `kind`.
///
/// The cell value of `(Tf)*` on `[τ_i, τ_{i+1})` is compared with the rhs at
/// `τ_i`; every rhs here is non-increasing in `t`.
pub fn check_rearrangement_bound<T: Real>(tf: &StepFunction<T>, f: &StepFunction<T>, kind: &BoundKind<T>) -> Result<RearrangementBoundReport<T>> {
    let lhs = rearrange(tf);
    let fs = rearrange(f);
    let cum = fs.cumulative();
    let ks = match kind {
        BoundKind::Convolution(k) => Some(rearrange(k)),
        _ => None,
    };
    let k_cum = ks.as_ref().map(|k| k.cumulative()).unwrap_or_default();
    let alpha = match kind {
        BoundKind::Riesz(a) => *a,
        _ => T::one(),
    };
    let riesz_w = move |s: T| (alpha * s.ln()).exp() / alpha;
    let log_w = |s: T| s.ln();
    let tail = match kind {
        BoundKind::Riesz(_) => Some(WeightedTail::new(&fs, &riesz_w)),
        BoundKind::Singular => Some(WeightedTail::new(&fs, &log_w)),
        _ => None,
    };
    let rhs = |t: T| -> T {
        let avg = if t > T::zero() {
            primitive_at(&fs, &cum, t) / t
        } else {
            fs.values().first().copied().unwrap_or(T::zero())
        };
        match kind {
            BoundKind::Maximal => avg,
            BoundKind::Riesz(a) => {
                let a = *a;
                let head = if t == T::zero() { T::zero() } else { avg * (a * t.ln()).exp() };
                let tail = tail.as_ref().expect("tail table");
                head + tail.at(t, &riesz_w)
            }
            BoundKind::Singular => {
                if t == T::zero() {
                    T::infinity()
                } else {
                    avg + tail.as_ref().expect("tail table").at(t, &log_w)
                }
            }
            BoundKind::Convolution(_) => {
                let ks = ks.as_ref().expect("kernel rearranged");
                let k_avg = if t > T::zero() {
                    primitive_at(ks, &k_cum, t) / t
                } else {
                    ks.values().first().copied().unwrap_or(T::zero())
                };
                k_avg * primitive_at(&fs, &cum, t) + product_tail(ks, &fs, t)
            }
        }
    };
    let bps = lhs.partition().breakpoints();
    let mut worst = T::zero();
    for (k, &v) in lhs.values().iter().enumerate() {
        if v == T::zero() {
            continue;
        }
        let r = rhs(bps[k]);
        let q = if r > T::zero() { v / r } else { T::infinity() };
        worst = worst.max(q);
    }
    Ok(RearrangementBoundReport {
        measured_constant: worst,
        refinement_curve: vec![(tf.n_cells(), worst)],
        holds: worst.is_finite(),
    })
}

/// Applies the operator of `kind` to `f` on its partition and on the
/// partition refined `refine` times by `factor`, and measures the constant
/// on each.
pub fn rearrangement_bound_protocol<T: Real>(f: &StepFunction<T>, kind: &BoundKind<T>, factor: usize, refine: usize) -> Result<RearrangementBoundReport<T>> {
    let op = kind.operator();
    let mut curve = Vec::with_capacity(refine + 1);
    let mut grid = f.partition().clone();
    for step in 0..=refine {
        if step > 0 {
            grid = grid.refine(factor);
        }
        let g = resample(f, &grid);
        let r = check_rearrangement_bound(&op.apply(&g)?, &g, kind)?;
        curve.push((grid.n_cells(), r.measured_constant));
    }
    let base = curve[0].1;
    let finite = curve.iter().all(|c| c.1.is_finite());
    let flat = curve.iter().all(|c| {
        base == c.1 || (c.1 - base).abs() <= lit::<T>(0.1) * base.max(c.1)
    });
    let measured = curve.iter().map(|c| c.1).fold(T::zero(), T::max);
    Ok(RearrangementBoundReport {
        measured_constant: measured,
        refinement_curve: curve,
        holds: finite && flat,
    })
}

/// Sufficient conditions for boundedness of an operator between weighted
/// Lorentz spaces. Conditions at infinity are `None` when `ℓ < ∞`; the
/// fractional conditions are `None` for the other operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OperatorConditions {
    pub assumptions: Assumptions,
    /// `γ(0) < 1/p'(0)`.
    pub gamma_zero: bool,
    pub gamma_infinity: Option<bool>,
    /// `α - 1/p(0) < γ(0)`.
    pub fractional_zero: Option<bool>,
    pub fractional_infinity: Option<bool>,
    /// `p_+ < 1/α`.
    pub p_plus: Option<bool>,
}

impl OperatorConditions {
    pub fn weights(&self) -> bool {
        let ok = |x: Option<bool>| x.unwrap_or(true);
        self.gamma_zero
            && ok(self.gamma_infinity)
            && ok(self.fractional_zero)
            && ok(self.fractional_infinity)
            && ok(self.p_plus)
    }

    pub fn all(&self) -> bool {
        self.assumptions.all() && self.weights()
    }
}

pub fn operator_conditions<T: Real>(kind: &OperatorKind<T>, spec: &NormSpec<T>) -> OperatorConditions {
    let infinite = !spec.domain_length().is_finite();
    let p0 = spec.p.limit_zero();
    let pi = spec.p.limit_infinity().unwrap_or(p0);
    let (g0, gi) = match &spec.gamma {
        Some(g) => (g.limit_zero(), g.limit_infinity().unwrap_or(g.limit_zero())),
        None => (T::zero(), T::zero()),
    };
    let conj = |p: T| T::one() - p.recip();
    let at_inf = |v: bool| if infinite { Some(v) } else { None };
    let alpha = kind.order();
    OperatorConditions {
        assumptions: spec.assumptions(),
        gamma_zero: g0 < conj(p0),
        gamma_infinity: at_inf(gi < conj(pi)),
        fractional_zero: alpha.map(|a| a - p0.recip() < g0),
        fractional_infinity: alpha.and_then(|a| at_inf(a - pi.recip() < gi)),
        p_plus: alpha.map(|a| spec.p.range().1 < a.recip()),
    }
}

/// `p_α` with `1/p_α = 1/p - α`.
pub fn sobolev_exponent<T: Real>(p: &ExponentFunction<T>, alpha: T) -> ExponentFunction<T> {
    ExponentFunction::combine(-alpha, vec![(T::one(), p.clone(), Term::Reciprocal)], true)
}

/// `‖Tf‖_target / ‖f‖_source` for an operator on `Ω = [0, ℓ)`.
#[derive(Debug, Clone)]
pub struct OperatorExperiment<T> {
    pub kind: OperatorKind<T>,
    pub source: NormSpec<T>,
    pub target: NormSpec<T>,
}

impl<T: Real> OperatorExperiment<T> {
    /// Source space `spec`; the target replaces `p` by `p_α` for the
    /// fractional operators.
    pub fn new(kind: OperatorKind<T>, spec: &NormSpec<T>) -> Result<Self> {
        let mut target = spec.clone();
        if let Some(a) = kind.order() {
            check_alpha(a)?;
            if !(spec.p.range().1 < a.recip()) {
                return Err(Error::Invalid(format!("p_+ must be below 1/α = {}", a.recip())));
            }
            target.p = sobolev_exponent(&spec.p, a);
        }
        let mut source = spec.clone();
        source.use_double_star = false;
        target.use_double_star = false;
        Ok(Self { kind, source, target })
    }
}

impl<T: Real> Experiment<T> for OperatorExperiment<T> {
    type Prepared = ();

    fn prepare(&self, grid: &Partition<T>) -> Result<()> {
        if grid.start() != T::zero() {
            return Err(Error::Domain("operator experiments run on Ω = [0, ℓ)".into()));
        }
        Ok(())
    }

    fn ratio(&self, _: &(), f: &StepFunction<T>) -> Result<Ratio<T>> {
        let den = ln_lorentz_norm(f, &self.source);
        if !matches!(den, Ok(d) if d.is_finite()) {
            return Ratio::from_logs(Ok(T::zero()), den);
        }
        let tf = self.kind.apply(f)?;
        Ratio::from_logs(ln_lorentz_norm(&tf, &self.target), den)
    }

    fn critical_exponents(&self) -> (T, Option<T>) {
        let s = &self.source;
        let (g0, gi) = match &s.gamma {
            Some(g) => (g.limit_zero(), g.limit_infinity().unwrap_or(g.limit_zero())),
            None => (T::zero(), T::zero()),
        };
        let p0 = s.p.limit_zero();
        let pi = s.p.limit_infinity().unwrap_or(p0);
        let k0 = (-(g0 + p0.recip())).max(-T::one());
        let ki = (!s.domain_length().is_finite()).then(|| -(gi + pi.recip()));
        (k0, ki)
    }

    fn domain_length(&self) -> T {
        self.source.domain_length()
    }
}

/// Runs the boundedness protocol for `kind` between the weighted Lorentz
/// spaces of `spec` on `grid` (the default partition of `[0, ℓ)` when
/// `None`), and reports the sufficient conditions alongside.
pub fn boundedness_experiment<T: Real>(
    kind: &OperatorKind<T>,
    spec: &NormSpec<T>,
    family: &FamilySpec<T>,
    settings: &ProtocolSettings<T>,
    grid: Option<&Partition<T>>,
) -> Result<(BoundednessReport<T>, OperatorConditions)> {
    let exp = OperatorExperiment::new(kind.clone(), spec)?;
    let base = grid
        .cloned()
        .unwrap_or_else(|| Partition::t_space(spec.domain_length()));
    let report = protocol::run(&exp, &base, family, settings)?;
    Ok((report, operator_conditions(kind, spec)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use proptest::prelude::*;

    fn uniform(a: f64, b: f64, n: usize) -> Partition<f64> {
        Partition::<f64>::uniform(a, b, n).unwrap()
    }

    fn random_step(seed: u64, n: usize) -> StepFunction<f64> {
        let mut g = SplitMix64::new(seed);
        let mut bps = vec![g.uniform(-2.0, 0.0)];
        for _ in 0..n {
            let w = g.uniform(0.05, 0.5);
            bps.push(bps.last().unwrap() + w);
        }
        let vals = (0..n).map(|_| g.uniform(-1.0, 2.0)).collect();
        StepFunction::new(Partition::new(bps).unwrap(), vals).unwrap()
    }

    /// Brute-force ball average scan.
    fn dense_ball_sup(f: &StepFunction<f64>, x: f64, alpha: f64, r_max: f64) -> f64 {
        let prim = |y: f64| -> f64 {
            let bps = f.partition().breakpoints();
            let mut acc = 0.0;
            for (k, v) in f.values().iter().enumerate() {
                let (a, b) = (bps[k], bps[k + 1]);
                acc += v.abs() * (y.min(b) - a).max(0.0);
            }
            acc
        };
        let mut best: f64 = 0.0;
        let n = 200_000;
        for i in 1..=n {
            let r = r_max * i as f64 / n as f64;
            best = best.max((prim(x + r) - prim(x - r)) / (2.0 * r).powf(1.0 - alpha));
        }
        best
    }

    #[test]
    fn maximal_of_indicator_matches_dense_scan() {
        let f = StepFunction::new(Partition::new(vec![0.0f64, 1.0]).unwrap(), vec![1.0]).unwrap();
        let exact = maximal_at(&f, 3.0);
        assert!((exact - 1.0 / 6.0).abs() < 1e-15);
        let dense = dense_ball_sup(&f, 3.0, 0.0, 10.0);
        assert!((exact - dense).abs() < 1e-9);
        let g = random_step(7, 12);
        for &x in &[-1.7, -0.3, 0.4, 1.1, 2.5] {
            let e = maximal_at(&g, x);
            let d = dense_ball_sup(&g, x, 0.0, 8.0);
            assert!(e >= d - 1e-10 && e - d < 1e-4, "x={x} exact {e} dense {d}");
        }
    }

    #[test]
    fn maximal_of_constant_and_zero() {
        let p = uniform(0.0, 1.0, 10);
        let m = maximal(&StepFunction::constant(p.clone(), 2.5));
        assert!(m.values().iter().all(|&v| (v - 2.5).abs() < 1e-14));
        assert!(maximal(&StepFunction::zero(p)).is_zero());
    }

    #[test]
    fn fractional_constant_on_unit_interval() {
        let p = uniform(0.0, 1.0, 8);
        let f = StepFunction::constant(p, 1.0);
        for &x in &[0.0625, 0.4375, 0.9375] {
            let e = fractional_maximal_at(&f, 0.5, x).unwrap();
            let d = dense_ball_sup(&f, x, 0.5, 4.0);
            assert!(e >= d - 1e-10 && e - d < 1e-4, "x={x} {e} {d}");
        }
        assert!(fractional_maximal_at(&f, 1.5, 0.5).is_err());
    }

    #[test]
    fn riesz_closed_forms() {
        let f = StepFunction::new(Partition::new(vec![0.0, 1.0]).unwrap(), vec![1.0]).unwrap();
        let v = riesz_at(&f, 0.5, 2.0).unwrap();
        assert!((v - 2.0 * (2f64.sqrt() - 1.0)).abs() < 1e-14);
        let v = riesz_at(&f, 0.5, 0.5).unwrap();
        assert!((v - 2.0 * 2f64.sqrt()).abs() < 1e-14);
        assert!(riesz_potential(&StepFunction::zero(uniform(0.0, 1.0, 4)), 0.5).unwrap().is_zero());
    }

    #[test]
    fn hilbert_closed_forms() {
        let f = StepFunction::new(Partition::new(vec![0.0, 1.0]).unwrap(), vec![1.0]).unwrap();
        assert!((hilbert_at(&f, 2.0) - 2f64.ln()).abs() < 1e-15);
        let g = StepFunction::constant(uniform(-1.0, 1.0, 4), 1.0);
        assert_eq!(hilbert_at(&g, 0.0), 0.0);
        assert!(hilbert_at(&f, 1.0).is_infinite());
    }

    /// `∫_{δ <= |x-y|} f(y)/(x-y) dy` by dense midpoint quadrature, away from
    /// the excluded window.
    fn truncated_pv(f: &StepFunction<f64>, x: f64, delta: f64) -> f64 {
        let bps = f.partition().breakpoints();
        let mut acc = 0.0;
        for (k, &v) in f.values().iter().enumerate() {
            let (a, b) = (bps[k], bps[k + 1]);
            for (lo, hi) in [(a, b.min(x - delta)), (a.max(x + delta), b)] {
                if hi <= lo {
                    continue;
                }
                // Composite Simpson in the distance d = |x - y| on octave
                // pieces, integrand 1/d.
                let (d_lo, d_hi) = if hi <= x { (x - hi, x - lo) } else { (lo - x, hi - x) };
                let mut s = 0.0;
                let mut a0 = d_lo;
                while a0 < d_hi {
                    let b0 = (2.0 * a0).min(d_hi);
                    let m = 32;
                    let h = (b0 - a0) / m as f64;
                    let mut piece = 1.0 / a0 + 1.0 / b0;
                    for i in 1..m {
                        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                        piece += w / (a0 + i as f64 * h);
                    }
                    s += piece * h / 3.0;
                    a0 = b0;
                }
                acc += if hi <= x { v * s } else { -v * s };
            }
        }
        acc
    }

    #[test]
    fn hilbert_matches_truncated_pv() {
        let f = random_step(3, 10);
        for x in f.partition().midpoints() {
            let want = truncated_pv(&f, x, 1e-6);
            assert!((hilbert_at(&f, x) - want).abs() < 1e-4, "x={x}");
        }
    }

    #[test]
    fn graded_hilbert_matches_pointwise() {
        let f = random_step(21, 40);
        let h = hilbert_graded(&f);
        assert_eq!(h.n_cells(), 400);
        let mut worst: f64 = 0.0;
        for (x, v) in h.partition().midpoints().into_iter().zip(h.values()) {
            worst = worst.max((v - hilbert_at(&f, x)).abs());
        }
        assert!(worst < 1e-2, "{worst}");
        // L² norm of Hχ_[0,1] over [0, ∞) is π·sqrt(2/3).
        let g = Partition::<f64>::geometric(2f64.powi(-60), 2f64.powi(60), 4).unwrap();
        let h = hilbert_graded(&StepFunction::indicator(g, 0.0, 1.0));
        let l2 = h.integral_abs_pow(2.0).sqrt();
        let want = std::f64::consts::PI * (2.0f64 / 3.0).sqrt();
        assert!((l2 - want).abs() < 0.02 * want, "{l2} vs {want}");
    }

    #[test]
    fn convolution_examples() {
        let one = StepFunction::new(Partition::new(vec![0.0, 1.0]).unwrap(), vec![1.0]).unwrap();
        let target = uniform(0.0, 2.0, 8);
        let hat = convolve(&one, &one, Some(&target)).unwrap();
        for (k, &v) in hat.values().iter().enumerate() {
            let (c, d) = target.cell(k);
            let tri = |x: f64| if x < 1.0 { x * x / 2.0 } else { 1.0 - (2.0 - x) * (2.0 - x) / 2.0 };
            let want = (tri(d) - tri(c)) / (d - c);
            assert!((v - want).abs() < 1e-14);
        }
        let k = random_step(11, 7);
        let f = random_step(12, 9);
        let c = convolve(&k, &f, None).unwrap();
        assert!((c.integral() - k.integral() * f.integral()).abs() < 1e-10);
        // Narrow box kernel of unit mass: close to f away from jumps.
        let h = 1e-4;
        let delta = StepFunction::new(Partition::new(vec![-h / 2.0, h / 2.0]).unwrap(), vec![1.0 / h]).unwrap();
        let g = StepFunction::constant(uniform(0.0, 1.0, 10), 3.0);
        let s = convolve(&delta, &g, Some(g.partition())).unwrap();
        for (a, b) in s.values()[1..9].iter().zip(&g.values()[1..9]) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn poisson_examples() {
        let f = StepFunction::constant(uniform(-1.0, 1.0, 2), 1.0);
        let y = 0.5f64;
        let want = 2.0 / std::f64::consts::PI * (1.0 / y).atan();
        assert!((poisson_at(&f, 0.0, y) - want).abs() < 1e-15);
        let s = poisson_sup(&f);
        assert!(s.values().iter().all(|&v| (v - 1.0).abs() < 1e-12));
        assert!(poisson_sup(&StepFunction::zero(uniform(0.0, 1.0, 3))).is_zero());
    }

    #[test]
    fn poisson_dominated_by_maximal() {
        let mut worst: f64 = 0.0;
        for seed in 0..10 {
            let f = random_step(100 + seed, 16);
            let p = poisson_sup(&f);
            let m = maximal(&f);
            for (a, b) in p.values().iter().zip(m.values()) {
                worst = worst.max(a / b);
            }
        }
        assert!(worst <= 1.0 + 1e-12, "{worst}");
    }

    #[test]
    fn fractional_dominated_by_riesz() {
        for seed in 0..10 {
            let f = random_step(200 + seed, 12);
            let m = fractional_maximal(&f, 0.4).unwrap();
            let r = riesz_potential(&f.abs(), 0.4).unwrap();
            for (a, b) in m.values().iter().zip(r.values()) {
                assert!(*a <= *b * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn rearrangement_estimates_on_indicators() {
        let grid = Partition::<f64>::geometric(2f64.powi(-10), 1.0, 2).unwrap();
        let mut worst: f64 = 0.0;
        for i in -10..0 {
            let f = StepFunction::indicator(grid.clone(), 2f64.powi(i), 2f64.powi(i + 1));
            let r = check_rearrangement_bound(&maximal(&f), &f, &BoundKind::Maximal).unwrap();
            worst = worst.max(r.measured_constant);
        }
        assert!(worst <= 1.0, "{worst}");
        let f = StepFunction::zero(grid);
        let r = check_rearrangement_bound(&maximal(&f), &f, &BoundKind::Maximal).unwrap();
        assert_eq!(r.measured_constant, 0.0);
        assert!(r.holds);
    }

    #[test]
    fn conditions_and_target() {
        let p = ExponentFunction::constant(2.0).with_domain(1.0);
        let spec = NormSpec::new(p.clone(), p.clone());
        let e: OperatorExperiment<f64> = OperatorExperiment::new(OperatorKind::Riesz(0.25), &spec).unwrap();
        assert!((e.target.p.value(0.3) - 4.0).abs() < 1e-12);
        let c = operator_conditions(&OperatorKind::Riesz(0.25), &spec);
        assert!(c.weights());
        let bad = spec.clone().with_gamma(ExponentFunction::constant(0.55).with_domain(1.0));
        assert!(!operator_conditions(&OperatorKind::<f64>::Maximal, &bad).gamma_zero);
        assert!(OperatorExperiment::new(OperatorKind::Riesz(0.6), &spec).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn maximal_sublinear_and_dominating(seed in any::<u64>(), r in 0.01f64..3.0) {
            let f = random_step(seed, 10);
            let g = StepFunction::new(f.partition().clone(), random_step(seed ^ 1, 10).values().to_vec()).unwrap();
            let mf = maximal(&f);
            let mg = maximal(&g);
            let ms = maximal(&f.add(&g).unwrap());
            for k in 0..f.n_cells() {
                prop_assert!(ms.values()[k] <= (mf.values()[k] + mg.values()[k]) * (1.0 + 1e-12));
            }
            let prim = Primitive::new(&f);
            for (k, x) in f.partition().midpoints().into_iter().enumerate() {
                let k_hi = prim.forward(x + r, 0);
                let k_lo = prim.forward(x - r, 0);
                let avg = (prim.at(x + r, k_hi) - prim.at(x - r, k_lo)) / (2.0 * r);
                prop_assert!(mf.values()[k] >= avg * (1.0 - 1e-12));
            }
        }

        #[test]
        fn hilbert_linear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let f = random_step(seed, 10);
            let g = StepFunction::new(f.partition().clone(), random_step(seed ^ 5, 10).values().to_vec()).unwrap();
            let lhs = hilbert(&f.scale(a).add(&g.scale(b)).unwrap());
            let hf = hilbert(&f);
            let hg = hilbert(&g);
            for k in 0..f.n_cells() {
                let want = a * hf.values()[k] + b * hg.values()[k];
                prop_assert!((lhs.values()[k] - want).abs() <= 1e-10 * (1.0 + want.abs()));
            }
        }

        #[test]
        fn riesz_positive_and_monotone(seed in any::<u64>()) {
            let f = random_step(seed, 10).abs();
            let bump = random_step(seed ^ 9, 10).abs();
            let g = StepFunction::new(f.partition().clone(), f.values().iter().zip(bump.values()).map(|(x, y)| x + y).collect()).unwrap();
            let rf = riesz_potential(&f, 0.3).unwrap();
            let rg = riesz_potential(&g, 0.3).unwrap();
            for k in 0..f.n_cells() {
                prop_assert!(rf.values()[k] >= 0.0);
                prop_assert!(rf.values()[k] <= rg.values()[k] * (1.0 + 1e-12));
            }
        }
    }
}
