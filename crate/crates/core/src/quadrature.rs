//! Gauss–Legendre rules in the logarithmic variable and the node sets used to
//! integrate over partitions of `[0, ℓ)`.
//!
//! Integrands here are (products of) powers `t^{a(t)}` with slowly varying
//! `a`, which are smooth in `u = ln t`. A cell `[a, b]` with `a > 0` is split
//! into pieces no wider than one octave and each piece gets an 8-point rule
//! in `u`. A cell starting at `0` is split dyadically down to `δ`, and the
//! remaining `[0, δ]` is closed with a power-law tail fitted through `δ` and
//! `2δ`. Beyond the last breakpoint of an unbounded domain the same fit is
//! used at `T` and `2T`.

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

const GL8_X: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_W: [f64; 4] = [
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];
const GL4_X: [f64; 2] = [0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
const GL4_W: [f64; 2] = [0.652_145_154_862_546_1, 0.347_854_845_137_453_9];

/// Symmetric rule on `[-1, 1]` expanded from its positive half.
fn expand(xs: &[f64], ws: &[f64]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(2 * xs.len());
    for (&x, &w) in xs.iter().zip(ws).rev() {
        out.push((-x, w));
    }
    for (&x, &w) in xs.iter().zip(ws) {
        out.push((x, w));
    }
    out
}

/// 8-point Gauss–Legendre abscissae and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre_8() -> Vec<(f64, f64)> {
    expand(&GL8_X, &GL8_W)
}

/// 4-point Gauss–Legendre abscissae and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre_4() -> Vec<(f64, f64)> {
    expand(&GL4_X, &GL4_W)
}

/// Number of dyadic levels used to resolve a cell that touches `0`.
pub fn dyadic_levels<T: Real>() -> i32 {
    60.min(T::safe_binary_depth() / 2)
}

/// `ln ∫_a^b g(s) ds` by the 4-point rule in `ln s`, where `ln_g` returns
/// `ln g(s)` given `s`. Requires `0 < a < b`.
pub fn ln_integral_log4<T: Real, F: Fn(T) -> T>(a: T, b: T, ln_g: F) -> T {
    let la = a.ln();
    let lb = b.ln();
    let half = (lb - la) / lit(2.0);
    let mid = (lb + la) / lit(2.0);
    let mut terms = [T::neg_infinity(); 4];
    for (slot, (x, w)) in terms.iter_mut().zip(gauss_legendre_4()) {
        let u = mid + half * lit(x);
        let s = u.exp();
        *slot = ln_g(s) + u + (half * lit(w)).ln();
    }
    crate::scalar::log_sum_exp(&terms)
}

/// Quadrature nodes covering a partition of `[0, ℓ)` (or of an interval of
/// the real line for the linear fallback).
#[derive(Debug, Clone)]
pub struct NodeSet<T> {
    /// Node abscissae, ascending.
    pub t: Vec<T>,
    pub ln_t: Vec<T>,
    /// `ln` of the quadrature weight in `dt`.
    pub ln_w: Vec<T>,
    /// Index of the partition cell containing each node.
    pub cell: Vec<usize>,
    /// Index into `pieces` of the interval each node's rule was built on.
    pub piece: Vec<usize>,
    pub pieces: Vec<(T, T)>,
    /// `δ` when the first cell starts at `0`.
    pub left_tail: Option<T>,
    /// `T` when the domain continues past the last breakpoint.
    pub right_tail: Option<T>,
}

impl<T: Real> NodeSet<T> {
    /// Builds nodes for the cells delimited by `breakpoints`.
    ///
    /// Cells starting at `0` are refined dyadically; cells with a negative
    /// left end use a plain 8-point rule in `t`, so integrands there must not
    /// depend on `ln t`.
    pub fn build(breakpoints: &[T], right_tail: bool) -> Self {
        Self::build_split(breakpoints, right_tail, &[])
    }

    /// Like [`NodeSet::build`], with every piece also split at the `knots`
    /// (ascending) that fall inside it.
    pub fn build_split(breakpoints: &[T], right_tail: bool, knots: &[T]) -> Self {
        let rule = gauss_legendre_8();
        let n_cells = breakpoints.len().saturating_sub(1);
        let mut ns = NodeSet {
            t: Vec::with_capacity(8 * n_cells + 8 * 64),
            ln_t: Vec::with_capacity(8 * n_cells + 8 * 64),
            ln_w: Vec::with_capacity(8 * n_cells + 8 * 64),
            cell: Vec::with_capacity(8 * n_cells + 8 * 64),
            piece: Vec::with_capacity(8 * n_cells + 8 * 64),
            pieces: Vec::with_capacity(n_cells + 64),
            left_tail: None,
            right_tail: if right_tail { breakpoints.last().copied() } else { None },
        };
        let two: T = lit(2.0);
        for k in 0..n_cells {
            let a = breakpoints[k];
            let b = breakpoints[k + 1];
            if a == T::zero() {
                let levels = dyadic_levels::<T>();
                let mut hi = b;
                let mut lo_pieces = Vec::with_capacity(levels as usize);
                for _ in 0..levels {
                    let lo = hi / two;
                    lo_pieces.push((lo, hi));
                    hi = lo;
                }
                ns.left_tail = Some(hi);
                for &(lo, hi) in lo_pieces.iter().rev() {
                    for (lo, hi) in split_at(lo, hi, knots) {
                        ns.push_log_piece(&rule, lo, hi, k);
                    }
                }
            } else if a > T::zero() {
                for (a, b) in split_at(a, b, knots) {
                    ns.push_octaves(&rule, a, b, k);
                }
            } else {
                ns.push_linear_piece(&rule, a, b, k);
            }
        }
        ns
    }

    /// `[a, b]` with `a > 0`, in pieces of at most one octave.
    fn push_octaves(&mut self, rule: &[(f64, f64)], a: T, b: T, k: usize) {
        let m = (b / a).log2().ceil().to_usize().unwrap_or(1).clamp(1, 4096);
        let la = a.ln();
        let step = (b.ln() - la) / crate::scalar::from_usize(m);
        let mut lo = a;
        for i in 1..=m {
            let hi = if i == m { b } else { (la + step * crate::scalar::from_usize(i)).exp() };
            self.push_log_piece(rule, lo, hi, k);
            lo = hi;
        }
    }

    fn push_log_piece(&mut self, rule: &[(f64, f64)], lo: T, hi: T, cell: usize) {
        let la = lo.ln();
        let lb = hi.ln();
        let half = (lb - la) / lit(2.0);
        let mid = (lb + la) / lit(2.0);
        let pid = self.pieces.len();
        self.pieces.push((lo, hi));
        for &(x, w) in rule {
            let u = mid + half * lit(x);
            self.t.push(u.exp());
            self.ln_t.push(u);
            self.ln_w.push((half * lit(w)).ln() + u);
            self.cell.push(cell);
            self.piece.push(pid);
        }
    }

    fn push_linear_piece(&mut self, rule: &[(f64, f64)], lo: T, hi: T, cell: usize) {
        let half = (hi - lo) / lit(2.0);
        let mid = (hi + lo) / lit(2.0);
        let pid = self.pieces.len();
        self.pieces.push((lo, hi));
        for &(x, w) in rule {
            let t = mid + half * lit(x);
            self.t.push(t);
            self.ln_t.push(t.abs().ln());
            self.ln_w.push((half * lit(w)).ln());
            self.cell.push(cell);
            self.piece.push(pid);
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// `[lo, hi]` cut at the knots strictly inside it.
fn split_at<T: Real>(lo: T, hi: T, knots: &[T]) -> Vec<(T, T)> {
    let mut out = Vec::new();
    let mut a = lo;
    for &k in knots.iter().filter(|&&k| k > lo && k < hi) {
        out.push((a, k));
        a = k;
    }
    out.push((a, hi));
    out
}

/// `ln ∫_0^δ F` for `F` extrapolated as a power law through `F(δ)` and
/// `F(2δ)` (given as logarithms).
pub fn left_tail_ln<T: Real>(delta: T, ln_f1: T, ln_f2: T) -> Result<T> {
    if ln_f1 == T::neg_infinity() {
        return Ok(T::neg_infinity());
    }
    let kappa = if ln_f2.is_finite() {
        (ln_f2 - ln_f1) / T::LN_2()
    } else {
        T::zero()
    };
    let denom = kappa + T::one();
    if denom <= T::zero() {
        return Err(Error::Divergent(format!(
            "integrand behaves like t^{kappa:.4} near 0"
        )));
    }
    Ok(delta.ln() + ln_f1 - denom.ln())
}

/// `ln ∫_T^∞ F` for `F` extrapolated as a power law through `F(T)` and
/// `F(2T)`.
pub fn right_tail_ln<T: Real>(t: T, ln_f1: T, ln_f2: T) -> Result<T> {
    if ln_f1 == T::neg_infinity() {
        return Ok(T::neg_infinity());
    }
    let kappa = if ln_f2.is_finite() {
        (ln_f2 - ln_f1) / T::LN_2()
    } else {
        return Ok(T::neg_infinity());
    };
    let denom = -kappa - T::one();
    if denom <= T::zero() {
        return Err(Error::Divergent(format!(
            "integrand behaves like t^{kappa:.4} at infinity"
        )));
    }
    Ok(t.ln() + ln_f1 - denom.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::log_sum_exp;

    fn integrate(ns: &NodeSet<f64>, f: impl Fn(f64) -> f64) -> f64 {
        let terms: Vec<f64> = (0..ns.len())
            .map(|j| f(ns.t[j]).ln() + ns.ln_w[j])
            .collect();
        log_sum_exp(&terms).exp()
    }

    #[test]
    fn rules_integrate_polynomials() {
        let r8 = gauss_legendre_8();
        let s: f64 = r8.iter().map(|&(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
        let r4 = gauss_legendre_4();
        let s: f64 = r4.iter().map(|&(x, w)| w * x.powi(6)).sum();
        assert!((s - 2.0 / 7.0).abs() < 1e-14);
    }

    #[test]
    fn power_over_octaves() {
        let bps: Vec<f64> = (0..=20).map(|k| 2f64.powi(k - 10)).collect();
        let ns = NodeSet::build(&bps, false);
        let got = integrate(&ns, |t| t.powf(-0.7));
        let a: f64 = 2f64.powi(-10);
        let b: f64 = 2f64.powi(10);
        let want = (b.powf(0.3) - a.powf(0.3)) / 0.3;
        assert!((got / want - 1.0).abs() < 1e-12);
    }

    #[test]
    fn first_cell_with_tail() {
        let bps = [0.0f64, 1.0];
        let ns = NodeSet::build(&bps, false);
        let delta = ns.left_tail.unwrap();
        let body = integrate(&ns, |t| t.powf(-0.5));
        let tail = left_tail_ln(delta, delta.powf(-0.5).ln(), (2.0 * delta).powf(-0.5).ln())
            .unwrap()
            .exp();
        assert!((body + tail - 2.0).abs() < 1e-12);
    }

    #[test]
    fn tails_detect_divergence() {
        assert!(left_tail_ln(1e-10f64, 10.0, 10.0 - 2f64.ln()).is_err());
        assert!(right_tail_ln(1e10f64, -10.0, -10.0 - 0.5 * 2f64.ln()).is_err());
        let v = right_tail_ln(1.0f64, 0.0, -2.0 * 2f64.ln()).unwrap();
        assert!((v.exp() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn log4_piece() {
        let v = ln_integral_log4(1.0f64, 2.0, |s| -s.ln()).exp();
        assert!((v - 2f64.ln()).abs() < 1e-9);
    }
}
