//! Variable-exponent modulars, Luxemburg norms and Lorentz norms.
//!
//! All integrands are handled in logarithmic form: a sample is stored as
//! `ln |g(t)|` together with the exponent `q(t)` and the log quadrature
//! weight, so `|g/λ|^{q}` becomes `exp(q·(ln|g| - ln λ) + ln w)` and the
//! modular is a log-sum-exp. This keeps functions like `t^{-1+ε}` on
//! `(2^-500, 1)` well inside the floating point range.

use crate::error::{Error, Result};
use crate::exponent::ExponentFunction;
use crate::grid::{rearrange, Partition, Rearranged, StepFunction};
use crate::protocol::{self, BoundednessReport, Experiment, FamilySpec, ProtocolSettings, Ratio};
use crate::quadrature::{left_tail_ln, right_tail_ln, NodeSet};
use crate::scalar::{lit, log_sum_exp, Real};

/// Two-point probe used to close an integral with a power-law tail.
#[derive(Debug, Clone, Copy)]
pub struct TailProbe<T> {
    /// `δ` (left) or `T` (right); the second probe sits at twice this.
    pub at: T,
    pub ln_g: [T; 2],
    pub q: [T; 2],
}

/// A function sampled at quadrature nodes for a `q(·)`-modular.
#[derive(Debug, Clone)]
pub struct LogSamples<T> {
    pub ln_g: Vec<T>,
    pub q: Vec<T>,
    pub ln_w: Vec<T>,
    pub left: Option<TailProbe<T>>,
    pub right: Option<TailProbe<T>>,
}

impl<T: Real> LogSamples<T> {
    /// Samples `ln_g(t)` with exponent `q` on the node set of `breakpoints`.
    /// Tails are attached where the node set has them.
    pub fn from_fn(
        nodes: &NodeSet<T>,
        q: &ExponentFunction<T>,
        ln_g: impl Fn(T) -> T,
    ) -> Self {
        let qv: Vec<T> = nodes.t.iter().map(|&t| q.value(t)).collect();
        let lg: Vec<T> = nodes.t.iter().map(|&t| ln_g(t)).collect();
        let probe = |at: T| TailProbe {
            at,
            ln_g: [ln_g(at), ln_g(at * lit(2.0))],
            q: [q.value(at), q.value(at * lit(2.0))],
        };
        Self {
            ln_g: lg,
            q: qv,
            ln_w: nodes.ln_w.clone(),
            left: nodes.left_tail.map(probe),
            right: nodes.right_tail.map(probe),
        }
    }

    fn is_null(&self) -> bool {
        let probe_null = |p: &Option<TailProbe<T>>| {
            p.map_or(true, |p| p.ln_g[0] == T::neg_infinity())
        };
        self.ln_g.iter().all(|&g| g == T::neg_infinity())
            && probe_null(&self.left)
            && probe_null(&self.right)
    }

    /// `ln ∫ |g/λ|^{q}` at `μ = ln λ`, and `-d/dμ` of it.
    pub fn ln_modular(&self, mu: T) -> Result<(T, T)> {
        let n = self.ln_g.len();
        let mut terms = Vec::with_capacity(n + 2);
        let mut qs = Vec::with_capacity(n + 2);
        for j in 0..n {
            let g = self.ln_g[j];
            if g == T::neg_infinity() {
                continue;
            }
            terms.push(self.q[j] * (g - mu) + self.ln_w[j]);
            qs.push(self.q[j]);
        }
        // Tails are closed with the exponent frozen at the probe, so their
        // power does not drift with λ.
        if let Some(p) = &self.left {
            let f1 = p.q[0] * (p.ln_g[0] - mu);
            let f2 = p.q[0] * (p.ln_g[1] - mu);
            let v = left_tail_ln(p.at, f1, f2)?;
            if v.is_finite() {
                terms.push(v);
                qs.push(p.q[0]);
            }
        }
        if let Some(p) = &self.right {
            let f1 = p.q[0] * (p.ln_g[0] - mu);
            let f2 = p.q[0] * (p.ln_g[1] - mu);
            let v = right_tail_ln(p.at, f1, f2)?;
            if v.is_finite() {
                terms.push(v);
                qs.push(p.q[0]);
            }
        }
        let total = log_sum_exp(&terms);
        if total == T::infinity() || total.is_nan() {
            return Err(Error::Overflow("modular is not finite".into()));
        }
        let mut num = T::zero();
        let mut den = T::zero();
        for (t, q) in terms.iter().zip(&qs) {
            let w = (*t - total).exp();
            num = num + w * *q;
            den = den + w;
        }
        let slope = if den > T::zero() { num / den } else { T::one() };
        Ok((total, slope))
    }

    fn exponent_range(&self) -> (T, T) {
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for (j, &g) in self.ln_g.iter().enumerate() {
            if g != T::neg_infinity() {
                lo = lo.min(self.q[j]);
                hi = hi.max(self.q[j]);
            }
        }
        for p in self.left.iter().chain(self.right.iter()) {
            for i in 0..2 {
                if p.ln_g[i] != T::neg_infinity() {
                    lo = lo.min(p.q[i]);
                    hi = hi.max(p.q[i]);
                }
            }
        }
        (lo, hi)
    }

    fn max_ln_g(&self) -> T {
        let mut m = self.ln_g.iter().copied().fold(T::neg_infinity(), T::max);
        for p in self.left.iter().chain(self.right.iter()) {
            m = m.max(p.ln_g[0]).max(p.ln_g[1]);
        }
        m
    }

    /// `ln` of the Luxemburg norm `inf{λ : ∫|g/λ|^q <= 1}`; `-∞` for `g = 0`.
    ///
    /// The root of the convex, decreasing map `μ ↦ ln ρ(e^μ)` is bracketed
    /// using the slope bounds `-q_max <= d/dμ <= -q_min`, then found by Newton
    /// steps from the left end, falling back to bisection whenever a step
    /// leaves the bracket.
    pub fn ln_luxemburg(&self) -> Result<T> {
        if self.is_null() {
            return Ok(T::neg_infinity());
        }
        let (qmin, qmax) = self.exponent_range();
        if !(qmin > T::zero()) {
            return Err(Error::Invalid(format!("exponent must be positive, got {qmin}")));
        }
        let mu0 = self.max_ln_g();
        let (r0, _) = self.ln_modular(mu0)?;
        if r0 == T::zero() {
            return Ok(mu0);
        }
        let (mut lo, mut hi) = if r0 > T::zero() {
            (mu0 + r0 / qmax, mu0 + r0 / qmin)
        } else {
            (mu0 + r0 / qmin, mu0 + r0 / qmax)
        };
        // Tails can bend the slope bounds slightly; widen until the bracket
        // really straddles the root.
        let mut widen = (hi - lo).abs().max(T::one());
        let mut f_lo = self.ln_modular(lo)?.0;
        for _ in 0..200 {
            if f_lo >= T::zero() {
                break;
            }
            lo = lo - widen;
            widen = widen * lit(2.0);
            f_lo = self.ln_modular(lo)?.0;
        }
        let mut widen = (hi - lo).abs().max(T::one());
        let mut f_hi = self.ln_modular(hi)?.0;
        for _ in 0..200 {
            if f_hi <= T::zero() {
                break;
            }
            hi = hi + widen;
            widen = widen * lit(2.0);
            f_hi = self.ln_modular(hi)?.0;
        }
        if f_lo < T::zero() || f_hi > T::zero() {
            return Err(Error::Overflow("could not bracket the Luxemburg norm".into()));
        }
        let tol = T::epsilon() * lit(8.0);
        let mut mu = lo;
        let mut f = f_lo;
        let mut slope = self.ln_modular(lo)?.1;
        for _ in 0..200 {
            if f == T::zero() || hi - lo <= tol * T::one().max(mu.abs()) {
                break;
            }
            let mut next = mu + f / slope;
            if !(next > lo && next < hi) {
                next = lo + (hi - lo) / lit(2.0);
            }
            let (fn_, sn) = self.ln_modular(next)?;
            if (next - mu).abs() <= tol * T::one().max(mu.abs()) {
                mu = next;
                break;
            }
            mu = next;
            f = fn_;
            slope = sn;
            if f > T::zero() {
                lo = mu;
            } else {
                hi = mu;
            }
            if f.abs() <= T::epsilon() {
                break;
            }
        }
        Ok(mu)
    }

    /// `ln ∫ g^q` with `λ = 1`.
    pub fn ln_integral(&self) -> Result<T> {
        if self.is_null() {
            return Ok(T::neg_infinity());
        }
        Ok(self.ln_modular(T::zero())?.0)
    }
}

/// Samples of a step function `|f|` with exponent `p` on `f`'s own partition.
fn step_samples<T: Real>(f: &StepFunction<T>, p: &ExponentFunction<T>) -> Result<LogSamples<T>> {
    let part = f.partition();
    if part.start() < T::zero() && !p.is_constant() {
        return Err(Error::Domain(
            "variable exponents need a partition of (0, ℓ)".into(),
        ));
    }
    let nodes = NodeSet::build_split(part.breakpoints(), false, &p.knots());
    let lnv: Vec<T> = f.values().iter().map(|v| v.abs().ln()).collect();
    let mut s = LogSamples {
        ln_g: nodes.cell.iter().map(|&k| lnv[k]).collect(),
        q: nodes.t.iter().map(|&t| p.value(t)).collect(),
        ln_w: nodes.ln_w.clone(),
        left: None,
        right: None,
    };
    if let Some(d) = nodes.left_tail {
        s.left = Some(TailProbe {
            at: d,
            ln_g: [lnv[0], lnv[0]],
            q: [p.value(d), p.value(d * lit(2.0))],
        });
    }
    Ok(s)
}

/// `∫ |f(t)|^{p(t)} dt` over the partition of `f`.
pub fn lebesgue_modular<T: Real>(f: &StepFunction<T>, p: &ExponentFunction<T>) -> Result<T> {
    let v = step_samples(f, p)?.ln_integral()?.exp();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow("Lebesgue modular overflows".into()))
    }
}

/// `‖f‖_{L^{p(·)}}`.
pub fn luxemburg_norm<T: Real>(f: &StepFunction<T>, p: &ExponentFunction<T>) -> Result<T> {
    finite_exp(step_samples(f, p)?.ln_luxemburg()?)
}

fn finite_exp<T: Real>(ln: T) -> Result<T> {
    let v = ln.exp();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow(format!("norm e^{ln} overflows")))
    }
}

/// Exponents selecting a Lorentz norm.
#[derive(Debug, Clone)]
pub struct NormSpec<T> {
    pub p: ExponentFunction<T>,
    pub q: ExponentFunction<T>,
    /// Weight power: the weight is `w(t) = t^{γ(t)}`.
    pub gamma: Option<ExponentFunction<T>>,
    /// Use `f**` instead of `f*`.
    pub use_double_star: bool,
}

impl<T: Real> NormSpec<T> {
    pub fn new(p: ExponentFunction<T>, q: ExponentFunction<T>) -> Self {
        Self {
            p,
            q,
            gamma: None,
            use_double_star: false,
        }
    }

    pub fn with_gamma(mut self, gamma: ExponentFunction<T>) -> Self {
        self.gamma = Some(gamma);
        self
    }

    pub fn star(mut self, on: bool) -> Self {
        self.use_double_star = on;
        self
    }

    /// `ℓ`, taken from `p`.
    /// Kinks of `p`, `q` and `γ`, ascending.
    fn knots(&self) -> Vec<T> {
        let mut k = self.p.knots();
        k.extend(self.q.knots());
        if let Some(g) = &self.gamma {
            k.extend(g.knots());
        }
        k.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        k.dedup();
        k
    }

    pub fn domain_length(&self) -> T {
        self.p.domain_length()
    }

    /// Standing assumptions on `p, q` for Lorentz norms. Violations are
    /// allowed (blow-up experiments need them) and only reported.
    pub fn assumptions(&self) -> Assumptions {
        let rp = self.p.classify(&[]);
        let rq = self.q.classify(&[]);
        let infinite = !self.domain_length().is_finite();
        let inf_ok = |e: &ExponentFunction<T>| !infinite || e.limit_infinity().map_or(false, |v| v > T::one());
        Assumptions {
            p_in_class: rp.in_class(T::one()) && rp.decays(),
            q_in_class: rq.in_class(T::one()) && rq.decays(),
            p_zero_above_one: self.p.limit_zero() > T::one(),
            p_infinity_above_one: inf_ok(&self.p),
        }
    }
}

/// Which standing assumptions hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Assumptions {
    pub p_in_class: bool,
    pub q_in_class: bool,
    pub p_zero_above_one: bool,
    pub p_infinity_above_one: bool,
}

impl Assumptions {
    pub fn all(&self) -> bool {
        self.p_in_class && self.q_in_class && self.p_zero_above_one && self.p_infinity_above_one
    }
}

/// Which function of the rearrangement is weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Profile {
    Star,
    DoubleStar,
}

/// Nodes on the rearranged partition, extended to `ℓ` when `ℓ` is finite,
/// together with `ln f*` or `ln f**` at every node and tail probe.
struct RearrangedNodes<T> {
    nodes: NodeSet<T>,
    ln_h: Vec<T>,
    left: Option<(T, [T; 2])>,
    right: Option<(T, [T; 2])>,
}

fn rearranged_nodes<T: Real>(fs: &Rearranged<T>, spec: &NormSpec<T>, profile: Profile) -> Result<RearrangedNodes<T>> {
    let ell = spec.domain_length();
    let mut part: Partition<T> = fs.partition().clone();
    let width = part.truncation();
    if ell.is_finite() {
        if width > ell * (T::one() + lit(1e-9)) {
            return Err(Error::Domain(format!(
                "support of measure {width} does not fit in ℓ = {ell}"
            )));
        }
        if width < ell * (T::one() - lit(1e-12)) {
            part = part.extend_to(ell);
        }
    }
    let nodes = NodeSet::build_split(part.breakpoints(), !ell.is_finite(), &spec.knots());
    let vals = fs.values();
    let n_star = vals.len();
    let bps = part.breakpoints();
    let cum = fs.cumulative();
    let total = cum[cum.len() - 1];
    let ln_h_at = |k: usize, t: T| -> T {
        match profile {
            Profile::Star => {
                if k < n_star {
                    vals[k].ln()
                } else {
                    T::neg_infinity()
                }
            }
            Profile::DoubleStar => {
                let c = if k < n_star {
                    cum[k] + vals[k] * (t - bps[k])
                } else {
                    total
                };
                c.ln() - t.ln()
            }
        }
    };
    let ln_h: Vec<T> = nodes
        .t
        .iter()
        .zip(&nodes.cell)
        .map(|(&t, &k)| ln_h_at(k, t))
        .collect();
    let first = vals.first().map_or(T::neg_infinity(), |v| v.ln());
    let left = nodes.left_tail.map(|d| (d, [first, first]));
    let right = nodes.right_tail.map(|tt| {
        let two = tt * lit(2.0);
        match profile {
            Profile::Star => (tt, [T::neg_infinity(), T::neg_infinity()]),
            Profile::DoubleStar => (tt, [total.ln() - tt.ln(), total.ln() - two.ln()]),
        }
    });
    Ok(RearrangedNodes {
        nodes,
        ln_h,
        left,
        right,
    })
}

/// Builds `ln(t^{γ + 1/p - 1/q} h(t))` samples for the `q`-modular, where
/// `h` is `f*` or `f**`.
fn lorentz_samples<T: Real>(fs: &Rearranged<T>, spec: &NormSpec<T>) -> Result<LogSamples<T>> {
    let profile = if spec.use_double_star {
        Profile::DoubleStar
    } else {
        Profile::Star
    };
    let rn = rearranged_nodes(fs, spec, profile)?;
    let power = |t: T| -> T {
        let g = spec.gamma.as_ref().map_or(T::zero(), |g| g.value(t));
        g + spec.p.value(t).recip() - spec.q.value(t).recip()
    };
    let n = rn.nodes.len();
    let mut ln_g = Vec::with_capacity(n);
    let mut q = Vec::with_capacity(n);
    for j in 0..n {
        let t = rn.nodes.t[j];
        let h = rn.ln_h[j];
        ln_g.push(if h == T::neg_infinity() {
            h
        } else {
            power(t) * rn.nodes.ln_t[j] + h
        });
        q.push(spec.q.value(t));
    }
    let probe = |(at, h): (T, [T; 2])| {
        let pts = [at, at * lit(2.0)];
        let mut lg = [T::neg_infinity(); 2];
        let mut qq = [T::one(); 2];
        for i in 0..2 {
            qq[i] = spec.q.value(pts[i]);
            if h[i] != T::neg_infinity() {
                lg[i] = power(pts[i]) * pts[i].ln() + h[i];
            }
        }
        TailProbe {
            at,
            ln_g: lg,
            q: qq,
        }
    };
    Ok(LogSamples {
        ln_g,
        q,
        ln_w: rn.nodes.ln_w,
        left: rn.left.map(probe),
        right: rn.right.map(probe),
    })
}

/// `∫ t^{q(t)/p(t) - 1} f*(t)^{q(t)} dt`.
pub fn lorentz_modular<T: Real>(f: &StepFunction<T>, spec: &NormSpec<T>) -> Result<T> {
    let fs = rearrange(f);
    let rn = rearranged_nodes(&fs, spec, Profile::Star)?;
    let ln_f = |t: T, h: T| -> T {
        if h == T::neg_infinity() {
            return h;
        }
        let (p, q) = (spec.p.value(t), spec.q.value(t));
        (q / p - T::one()) * t.ln() + q * h
    };
    let s = LogSamples {
        ln_g: rn
            .nodes
            .t
            .iter()
            .zip(&rn.ln_h)
            .map(|(&t, &h)| ln_f(t, h))
            .collect(),
        q: vec![T::one(); rn.nodes.len()],
        ln_w: rn.nodes.ln_w.clone(),
        left: rn.left.map(|(at, h)| TailProbe {
            at,
            ln_g: [ln_f(at, h[0]), ln_f(at * lit(2.0), h[1])],
            q: [T::one(); 2],
        }),
        right: None,
    };
    let v = s.ln_integral()?.exp();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow("Lorentz modular overflows".into()))
    }
}

/// `ln` of the Lorentz norm of an already rearranged function.
pub fn ln_lorentz_norm_rearranged<T: Real>(fs: &Rearranged<T>, spec: &NormSpec<T>) -> Result<T> {
    lorentz_samples(fs, spec)?.ln_luxemburg()
}

/// `ln ‖f‖` in the (weighted) Lorentz norm selected by `spec`.
pub fn ln_lorentz_norm<T: Real>(f: &StepFunction<T>, spec: &NormSpec<T>) -> Result<T> {
    ln_lorentz_norm_rearranged(&rearrange(f), spec)
}

/// `‖t^{γ(t) + 1/p(t) - 1/q(t)} h(t)‖_{L^{q(·)}}` with `h = f*` or `f**`.
pub fn lorentz_norm<T: Real>(f: &StepFunction<T>, spec: &NormSpec<T>) -> Result<T> {
    finite_exp(ln_lorentz_norm(f, spec)?)
}

/// Outcome of comparing the variable Lorentz modular with its two-piece
/// frozen-exponent counterpart.
#[derive(Debug, Clone, Copy)]
pub struct SplitReport<T> {
    /// `None` when the integral diverges.
    pub modular: Option<T>,
    pub split: Option<T>,
}

impl<T: Real> SplitReport<T> {
    /// Finiteness of the two quantities agrees.
    pub fn agrees(&self) -> bool {
        self.modular.is_some() == self.split.is_some()
    }

    pub fn ratio(&self) -> Option<T> {
        match (self.modular, self.split) {
            (Some(a), Some(b)) if b > T::zero() => Some(a / b),
            _ => None,
        }
    }
}

/// Compares `∫ t^{q/p-1}(f*)^q` with the same integral using the frozen
/// exponents `q(0)/p(0)` on `(0, 1)` and `q(∞)/p(∞)` on `(1, ∞)`.
pub fn split_modular_check<T: Real>(f: &StepFunction<T>, spec: &NormSpec<T>) -> Result<SplitReport<T>> {
    let modular = match lorentz_modular(f, spec) {
        Ok(v) => Some(v),
        Err(Error::Divergent(_)) | Err(Error::Overflow(_)) => None,
        Err(e) => return Err(e),
    };
    let (p0, q0) = (spec.p.limit_zero(), spec.q.limit_zero());
    let pi = spec.p.limit_infinity().unwrap_or(p0);
    let qi = spec.q.limit_infinity().unwrap_or(q0);
    let frozen = ExponentFunction::sampled(
        vec![(T::one(), p0), (T::one() + T::epsilon() * lit(4.0), pi)],
        p0,
        Some(pi),
        crate::exponent::Interp::Log,
    )?;
    let frozen_q = ExponentFunction::sampled(
        vec![(T::one(), q0), (T::one() + T::epsilon() * lit(4.0), qi)],
        q0,
        Some(qi),
        crate::exponent::Interp::Log,
    )?;
    let ell = spec.domain_length();
    let fspec = NormSpec::new(frozen.with_domain(ell), frozen_q.with_domain(ell));
    let split = match lorentz_modular(f, &fspec) {
        Ok(v) => Some(v),
        Err(Error::Divergent(_)) | Err(Error::Overflow(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(SplitReport { modular, split })
}

/// Result of a Hölder inequality check.
#[derive(Debug, Clone, Copy)]
pub struct HolderReport<T> {
    pub pairing: T,
    pub norm_u: T,
    pub norm_v: T,
    /// `1/p_- + 1/p'_-`.
    pub constant: T,
    /// `|∫uv| / (‖u‖_p ‖v‖_{p'})`, zero when the pairing vanishes.
    pub ratio: T,
}

impl<T: Real> HolderReport<T> {
    pub fn holds(&self) -> bool {
        self.ratio <= self.constant * (T::one() + lit(1e-9))
    }
}

/// `|∫uv| <= k ‖u‖_{p} ‖v‖_{p'}` with `k = 1/p_- + 1/p'_-`.
pub fn holder_check<T: Real>(
    u: &StepFunction<T>,
    v: &StepFunction<T>,
    p: &ExponentFunction<T>,
) -> Result<HolderReport<T>> {
    let pc = p.conjugate()?;
    let (p_minus, _) = p.range();
    let (pc_minus, _) = pc.range();
    let constant = p_minus.recip() + pc_minus.recip();
    let pairing = u.zip_with(v, |a, b| a * b)?.integral().abs();
    let norm_u = luxemburg_norm(u, p)?;
    let norm_v = luxemburg_norm(v, &pc)?;
    let ratio = if pairing == T::zero() {
        T::zero()
    } else {
        pairing / (norm_u * norm_v)
    };
    Ok(HolderReport {
        pairing,
        norm_u,
        norm_v,
        constant,
        ratio,
    })
}

/// `‖f‖¹ / ‖f‖`: the Lorentz norm built on `f**` against the one built on
/// `f*`, with the weight of `spec` in both.
#[derive(Debug, Clone)]
pub struct NormEquivalence<T> {
    pub spec: NormSpec<T>,
}

impl<T: Real> NormEquivalence<T> {
    pub fn new(spec: &NormSpec<T>) -> Self {
        Self { spec: spec.clone() }
    }
}

impl<T: Real> Experiment<T> for NormEquivalence<T> {
    type Prepared = ();

    fn prepare(&self, _: &Partition<T>) -> Result<()> {
        Ok(())
    }

    fn ratio(&self, _: &(), f: &StepFunction<T>) -> Result<Ratio<T>> {
        let fs = rearrange(f);
        let plain = self.spec.clone().star(false);
        let starred = self.spec.clone().star(true);
        let den = ln_lorentz_norm_rearranged(&fs, &plain);
        if !matches!(den, Ok(d) if d.is_finite()) {
            return Ratio::from_logs(Ok(T::zero()), den);
        }
        Ratio::from_logs(ln_lorentz_norm_rearranged(&fs, &starred), den)
    }

    fn critical_exponents(&self) -> (T, Option<T>) {
        let s = &self.spec;
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
        self.spec.domain_length()
    }
}

/// Runs the boundedness protocol on `‖f‖¹ / ‖f‖` over `grid` (the default
/// partition of `[0, ℓ)` when `None`).
pub fn norm_equivalence_experiment<T: Real>(
    spec: &NormSpec<T>,
    family: &FamilySpec<T>,
    settings: &ProtocolSettings<T>,
    grid: Option<&Partition<T>>,
) -> Result<BoundednessReport<T>> {
    let base = grid
        .cloned()
        .unwrap_or_else(|| Partition::t_space(spec.domain_length()));
    protocol::run(&NormEquivalence::new(spec), &base, family, settings)
}
