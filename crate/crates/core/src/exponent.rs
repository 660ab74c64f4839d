//! Variable exponents `p(t)` on `(0, ℓ)` and the classes they belong to.
//!
//! Only the behaviour at `0` and at `∞` matters for the Lorentz theory: an
//! exponent must have limits there, approached at a logarithmic rate
//!
//! ```text
//! |p(t) - p(0)| <= C / ln(1/t)      (t -> 0)
//! |p(t) - p(∞)| <= C / ln(e + t)    (t -> ∞)
//! ```
//!
//! and nothing at all is asked of it in between. The constructors in this
//! module produce exponents that satisfy these conditions, ones that violate
//! them at `0`, and ones that are wildly irregular in the interior.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, pow2, Real};

/// How samples are joined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interp {
    /// Linear in `u = ln t`.
    Log,
    /// Linear in `t`; allows a sample at `t = 0`.
    Linear,
}

/// Families produced by [`make_test_exponent`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestMode {
    LogDecay,
    LogLogViolation,
    Oscillating,
}

impl TestMode {
    pub fn name(self) -> &'static str {
        match self {
            TestMode::LogDecay => "log-decay",
            TestMode::LogLogViolation => "log-log-violation",
            TestMode::Oscillating => "oscillating",
        }
    }
}

impl FromStr for TestMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "log-decay" => Ok(TestMode::LogDecay),
            "log-log-violation" => Ok(TestMode::LogLogViolation),
            "oscillating" => Ok(TestMode::Oscillating),
            other => Err(Error::Invalid(format!("unknown exponent mode `{other}`"))),
        }
    }
}

/// Whether a combination term enters as `e(t)` or `1/e(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Term {
    Value,
    Reciprocal,
}

#[derive(Debug, Clone)]
enum Shape<T> {
    Constant(T),
    Sampled {
        samples: Vec<(T, T)>,
        interp: Interp,
    },
    Formula {
        mode: TestMode,
        far: T,
        amplitude: T,
    },
    Combination {
        constant: T,
        terms: Vec<(T, ExponentFunction<T>, Term)>,
        reciprocal: bool,
    },
}

/// A variable exponent on `(0, ℓ)`.
#[derive(Debug, Clone)]
pub struct ExponentFunction<T> {
    shape: Shape<T>,
    limit_zero: T,
    limit_infinity: Option<T>,
    domain_length: T,
}

/// `1 / ln(e + 1/t)`: tends to `0` at `0` like `1/ln(1/t)` and to `1` at `∞`.
fn s_weight<T: Real>(t: T) -> T {
    T::one() / (T::E() + t.recip()).ln()
}

impl<T: Real> ExponentFunction<T> {
    /// `p ≡ c` on `(0, ∞)`.
    pub fn constant(c: T) -> Self {
        Self {
            shape: Shape::Constant(c),
            limit_zero: c,
            limit_infinity: Some(c),
            domain_length: T::infinity(),
        }
    }

    /// Interpolated samples with explicit limits.
    ///
    /// Below the first sample the exponent relaxes to `limit_zero` at the rate
    /// `1/ln(e + 1/t)`; above the last one it relaxes to `limit_infinity` at the
    /// rate `1/ln(e + t)`, or stays at the last value when there is no limit.
    pub fn sampled(
        mut samples: Vec<(T, T)>,
        limit_zero: T,
        limit_infinity: Option<T>,
        interp: Interp,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Invalid("exponent needs at least one sample".into()));
        }
        samples.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        for w in samples.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(Error::Invalid("sample abscissae must be distinct".into()));
            }
        }
        for &(t, v) in &samples {
            let bad_t = match interp {
                Interp::Log => !(t > T::zero()),
                Interp::Linear => !(t >= T::zero()),
            };
            if bad_t || !t.is_finite() || !v.is_finite() {
                return Err(Error::Invalid(format!("bad sample ({t}, {v})")));
            }
        }
        let limit_zero = if samples[0].0 == T::zero() {
            samples[0].1
        } else {
            limit_zero
        };
        Ok(Self {
            shape: Shape::Sampled { samples, interp },
            limit_zero,
            limit_infinity,
            domain_length: T::infinity(),
        })
    }

    /// Restricts the exponent to `(0, ℓ)`. The limit at infinity is dropped
    /// for finite `ℓ`.
    pub fn with_domain(mut self, ell: T) -> Self {
        self.domain_length = ell;
        if ell.is_finite() {
            self.limit_infinity = None;
        } else if self.limit_infinity.is_none() {
            self.limit_infinity = self.recompute_limit_infinity();
        }
        if let Shape::Combination { terms, .. } = &mut self.shape {
            for (_, e, _) in terms.iter_mut() {
                *e = e.clone().with_domain(ell);
            }
        }
        self
    }

    fn recompute_limit_infinity(&self) -> Option<T> {
        match &self.shape {
            Shape::Constant(c) => Some(*c),
            Shape::Formula { far, .. } => Some(*far),
            _ => None,
        }
    }

    /// `c + Σ coef_i · e_i(t)^{±1}`, optionally inverted as a whole.
    pub fn combine(constant: T, terms: Vec<(T, ExponentFunction<T>, Term)>, reciprocal: bool) -> Self {
        let apply = |x: Option<T>, k: Term| x.map(|v| if k == Term::Value { v } else { v.recip() });
        let mut z = Some(constant);
        let mut i = Some(constant);
        let mut ell = T::infinity();
        for (c, e, k) in &terms {
            z = z.and_then(|acc| apply(Some(e.limit_zero), *k).map(|v| acc + *c * v));
            i = i.and_then(|acc| apply(e.limit_infinity, *k).map(|v| acc + *c * v));
            ell = ell.min(e.domain_length);
        }
        let fin = |x: Option<T>| x.map(|v| if reciprocal { v.recip() } else { v });
        let limit_infinity = if ell.is_finite() { None } else { fin(i) };
        Self {
            limit_zero: fin(z).unwrap_or(T::nan()),
            limit_infinity,
            domain_length: ell,
            shape: Shape::Combination {
                constant,
                terms,
                reciprocal,
            },
        }
    }

    pub fn limit_zero(&self) -> T {
        self.limit_zero
    }

    pub fn limit_infinity(&self) -> Option<T> {
        self.limit_infinity
    }

    pub fn domain_length(&self) -> T {
        self.domain_length
    }

    /// Abscissae where the exponent may have a kink: the interior samples of
    /// sampled exponents, including those inside combinations.
    pub fn knots(&self) -> Vec<T> {
        let mut out = match &self.shape {
            Shape::Sampled { samples, .. } => samples.iter().map(|s| s.0).filter(|&t| t > T::zero()).collect(),
            Shape::Combination { terms, .. } => terms.iter().flat_map(|(_, e, _)| e.knots()).collect(),
            _ => Vec::new(),
        };
        out.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        out.dedup();
        out
    }

    pub fn is_constant(&self) -> bool {
        match &self.shape {
            Shape::Constant(_) => true,
            Shape::Formula { amplitude, far, .. } => {
                *amplitude == T::zero() && *far == self.limit_zero
            }
            Shape::Combination { terms, .. } => terms.iter().all(|(_, e, _)| e.is_constant()),
            Shape::Sampled { .. } => false,
        }
    }

    /// Value at `t`, checked against the domain.
    pub fn evaluate(&self, t: T) -> Result<T> {
        if !(t > T::zero()) {
            return Err(Error::Domain(format!("exponent evaluated at t = {t}")));
        }
        if t > self.domain_length * (T::one() + lit(1e-9)) {
            return Err(Error::Domain(format!(
                "t = {t} beyond the domain length {}",
                self.domain_length
            )));
        }
        Ok(self.value(t))
    }

    /// Value at `t > 0` without domain checks. Hot paths use this.
    pub fn value(&self, t: T) -> T {
        match &self.shape {
            Shape::Constant(c) => *c,
            Shape::Sampled { samples, interp } => self.sampled_value(samples, *interp, t),
            Shape::Formula {
                mode,
                far,
                amplitude,
            } => formula_value(*mode, self.limit_zero, *far, *amplitude, t),
            Shape::Combination {
                constant,
                terms,
                reciprocal,
            } => {
                let mut v = *constant;
                for (c, e, k) in terms {
                    let x = e.value(t);
                    v = v + *c * if *k == Term::Value { x } else { x.recip() };
                }
                if *reciprocal {
                    v.recip()
                } else {
                    v
                }
            }
        }
    }

    fn sampled_value(&self, samples: &[(T, T)], interp: Interp, t: T) -> T {
        let (t0, v0) = samples[0];
        let (tn, vn) = samples[samples.len() - 1];
        if t < t0 {
            let p0 = self.limit_zero;
            return p0 + (v0 - p0) * (T::E() + t0.recip()).ln() / (T::E() + t.recip()).ln();
        }
        if t > tn {
            return match self.limit_infinity {
                Some(pi) => pi + (vn - pi) * (T::E() + tn).ln() / (T::E() + t).ln(),
                None => vn,
            };
        }
        let k = samples.partition_point(|s| s.0 <= t);
        if k >= samples.len() {
            return vn;
        }
        let (ta, va) = samples[k - 1];
        let (tb, vb) = samples[k];
        let w = match interp {
            Interp::Log => (t / ta).ln() / (tb / ta).ln(),
            Interp::Linear => (t - ta) / (tb - ta),
        };
        va + (vb - va) * w
    }

    /// Smallest and largest value on the classification grid, limits
    /// included.
    pub fn range(&self) -> (T, T) {
        let mut lo = self.limit_zero;
        let mut hi = self.limit_zero;
        if let Some(l) = self.limit_infinity {
            lo = lo.min(l);
            hi = hi.max(l);
        }
        for t in evaluation_grid::<T>(self.domain_length) {
            let v = self.value(t);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// Class membership and decay constants.
    pub fn classify(&self, thresholds: &[T]) -> ClassReport<T> {
        let (p_minus, p_plus) = self.range();
        let in_class = thresholds
            .iter()
            .map(|&a| (a, a < p_minus && p_plus.is_finite()))
            .collect();
        let d = T::safe_binary_depth().min(640);
        let depths = [d / 16, d / 4, d];

        let top = lit::<T>(0.5).min(self.domain_length / lit(2.0));
        let p0 = self.limit_zero;
        let zero_levels: Vec<T> = depths
            .iter()
            .map(|&k| {
                geometric_points(pow2::<T>(-k), top, 8)
                    .into_iter()
                    .map(|t| (self.value(t) - p0).abs() * (-t.ln()))
                    .fold(T::zero(), T::max)
            })
            .collect();
        let decay_constant_zero = decay_from_levels(&zero_levels);

        let decay_constant_infinity = self.limit_infinity.filter(|_| !self.domain_length.is_finite()).map(|pi| {
            let levels: Vec<T> = depths
                .iter()
                .map(|&k| {
                    geometric_points(lit(2.0), pow2::<T>(k), 8)
                        .into_iter()
                        .map(|t| (self.value(t) - pi).abs() * (T::E() + t).ln())
                        .fold(T::zero(), T::max)
                })
                .collect();
            decay_from_levels(&levels)
        });

        ClassReport {
            p_minus,
            p_plus,
            in_class,
            decay_constant_zero,
            decay_constant_infinity,
        }
    }

    /// `p'` with `1/p + 1/p' = 1`.
    pub fn conjugate(&self) -> Result<Self> {
        let (p_minus, _) = self.range();
        if !(p_minus > T::one()) {
            return Err(Error::ConjugateUndefined {
                p_minus: p_minus.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self::combine(
            T::one(),
            vec![(-T::one(), self.clone(), Term::Reciprocal)],
            true,
        ))
    }

    /// Largest jump `|p(t) - p(s)|·ln(1/h)` between neighbours of spacing `h`
    /// in `[center - radius, center + radius]`. Stays bounded as `h -> 0`
    /// exactly when `p` is log-Hölder continuous near `center`.
    pub fn log_holder_modulus(&self, center: T, radius: T, h: T) -> T {
        let n = ((radius * lit(2.0)) / h).to_usize().unwrap_or(0).min(4_000_000);
        let start = center - radius;
        let mut prev = self.value(start);
        let mut worst = T::zero();
        for i in 1..=n {
            let v = self.value(start + h * from_usize(i));
            worst = worst.max((v - prev).abs());
            prev = v;
        }
        worst * (-h.ln())
    }
}

fn formula_value<T: Real>(mode: TestMode, p0: T, far: T, a: T, t: T) -> T {
    let s = s_weight(t);
    let base = p0 + (far - p0) * s;
    if a == T::zero() {
        return base;
    }
    match mode {
        TestMode::LogDecay => base + a * s / (T::E() + t).ln(),
        TestMode::LogLogViolation => {
            let ee = T::E().exp();
            base + a * (T::one() - s) / (ee + t.recip()).ln().ln()
        }
        TestMode::Oscillating => {
            let lt = t.ln();
            if lt == T::zero() {
                base
            } else {
                base + a * s / (T::E() + t).ln() * lt.recip().sin()
            }
        }
    }
}

/// Builds exponents with prescribed limits for experiments.
///
/// `log-decay` satisfies the logarithmic decay conditions at both ends with a
/// constant growing with `amplitude`; `log-log-violation` approaches
/// `limit_zero` only like `1/ln ln(1/t)`; `oscillating` satisfies both decay
/// conditions but oscillates infinitely often near `t = 1`, so it has no
/// log-Hölder modulus there.
pub fn make_test_exponent<T: Real>(
    limit_zero: T,
    limit_infinity: T,
    amplitude: T,
    mode: TestMode,
) -> ExponentFunction<T> {
    let shape = if amplitude == T::zero() && limit_zero == limit_infinity {
        Shape::Constant(limit_zero)
    } else {
        Shape::Formula {
            mode,
            far: limit_infinity,
            amplitude,
        }
    };
    ExponentFunction {
        shape,
        limit_zero,
        limit_infinity: Some(limit_infinity),
        domain_length: T::infinity(),
    }
}

/// Decay estimate at one end of the domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decay<T> {
    /// Measured constant `C`.
    Bounded(T),
    /// The running supremum doubled between successive depths.
    Unbounded,
}

impl<T: Real> Decay<T> {
    pub fn is_bounded(&self) -> bool {
        matches!(self, Decay::Bounded(_))
    }

    pub fn constant(&self) -> Option<T> {
        match self {
            Decay::Bounded(c) => Some(*c),
            Decay::Unbounded => None,
        }
    }
}

fn decay_from_levels<T: Real>(levels: &[T]) -> Decay<T> {
    let mut running = T::zero();
    let mut prev = T::zero();
    for (i, &l) in levels.iter().enumerate() {
        running = running.max(l);
        if i > 0 && running > prev * lit(2.0) + lit(1e-12) {
            return Decay::Unbounded;
        }
        prev = running;
    }
    Decay::Bounded(running)
}

/// Class membership summary.
#[derive(Debug, Clone)]
pub struct ClassReport<T> {
    pub p_minus: T,
    pub p_plus: T,
    /// `(a, p ∈ 𝒫_a)` for each requested threshold.
    pub in_class: Vec<(T, bool)>,
    pub decay_constant_zero: Decay<T>,
    /// `None` on bounded domains.
    pub decay_constant_infinity: Option<Decay<T>>,
}

impl<T: Real> ClassReport<T> {
    pub fn in_class(&self, a: T) -> bool {
        a < self.p_minus && self.p_plus.is_finite()
    }

    /// Both decay conditions hold (the one at infinity only when it applies).
    pub fn decays(&self) -> bool {
        self.decay_constant_zero.is_bounded()
            && self.decay_constant_infinity.map_or(true, |d| d.is_bounded())
    }
}

/// `per_octave` geometric points from `lo` to `hi` inclusive.
fn geometric_points<T: Real>(lo: T, hi: T, per_octave: usize) -> Vec<T> {
    if !(hi > lo) {
        return vec![lo.min(hi)];
    }
    let octaves = (hi / lo).log2();
    let n = (octaves * from_usize(per_octave)).ceil().to_usize().unwrap_or(1).max(1);
    let step = (hi.ln() - lo.ln()) / from_usize(n);
    (0..=n)
        .map(|i| (lo.ln() + step * from_usize(i)).exp())
        .collect()
}

/// The 512-point geometric grid on `(2^-40, 2^40)` used for ranges, cut to
/// `(0, ℓ)`. Very short domains get their own 512 points below `ℓ`.
pub fn evaluation_grid<T: Real>(ell: T) -> Vec<T> {
    let depth = 40.min(T::safe_binary_depth());
    let lo = pow2::<T>(-depth);
    let hi = pow2::<T>(depth);
    let step = (hi.ln() - lo.ln()) / lit(513.0);
    let full: Vec<T> = (1..=512)
        .map(|i| (lo.ln() + step * from_usize(i)).exp())
        .filter(|&t| t < ell)
        .collect();
    if full.len() >= 64 {
        return full;
    }
    let lo = ell * pow2::<T>(-2 * depth);
    let step = (ell.ln() - lo.ln()) / lit(513.0);
    (1..=512)
        .map(|i| (lo.ln() + step * from_usize(i)).exp())
        .collect()
}

impl<T: Real> fmt::Display for ExponentFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ell = |f: &mut fmt::Formatter<'_>| -> fmt::Result {
            if self.domain_length.is_finite() {
                write!(f, ", ell={}", self.domain_length)?;
            }
            Ok(())
        };
        match &self.shape {
            Shape::Constant(c) => {
                write!(f, "limit0={c}, mode=constant")?;
                ell(f)
            }
            Shape::Sampled { samples, interp } => {
                write!(f, "limit0={}", self.limit_zero)?;
                if let Some(l) = self.limit_infinity {
                    write!(f, ", limitInf={l}")?;
                }
                write!(f, ", samples=[")?;
                for (i, (t, v)) in samples.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "({t},{v})")?;
                }
                let interp = match interp {
                    Interp::Log => "log",
                    Interp::Linear => "linear",
                };
                write!(f, "], mode=sampled, interp={interp}")?;
                ell(f)
            }
            Shape::Formula {
                mode,
                far,
                amplitude,
            } => {
                write!(
                    f,
                    "limit0={}, limitInf={far}, amplitude={amplitude}, mode={}",
                    self.limit_zero,
                    mode.name()
                )?;
                ell(f)
            }
            Shape::Combination { .. } => {
                write!(f, "limit0={}", self.limit_zero)?;
                if let Some(l) = self.limit_infinity {
                    write!(f, ", limitInf={l}")?;
                }
                write!(f, ", mode=derived")?;
                ell(f)
            }
        }
    }
}

/// Parses a real number, accepting `inf` and powers of two written `2^k`.
pub fn parse_real(s: &str) -> Result<f64> {
    let s = s.trim();
    if let Some(k) = s.strip_prefix("2^") {
        let k: i32 = k
            .trim()
            .parse()
            .map_err(|_| Error::Invalid(format!("bad exponent in `{s}`")))?;
        return Ok(2f64.powi(k));
    }
    s.parse::<f64>()
        .map_err(|_| Error::Invalid(format!("not a number: `{s}`")))
}

/// Splits on commas that are not nested inside brackets or parentheses.
fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            ',' if depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

fn parse_samples(s: &str) -> Result<Vec<(f64, f64)>> {
    let inner = s
        .trim()
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| Error::Invalid("samples must be written [(t,v),...]".into()))?;
    let mut out = Vec::new();
    for item in split_top_level(inner) {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let pair = item
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| Error::Invalid(format!("bad sample `{item}`")))?;
        let parts: Vec<&str> = pair.split(',').collect();
        if parts.len() != 2 {
            return Err(Error::Invalid(format!("bad sample `{item}`")));
        }
        out.push((parse_real(parts[0])?, parse_real(parts[1])?));
    }
    Ok(out)
}

impl<T: Real> FromStr for ExponentFunction<T> {
    type Err = Error;

    /// Parses `limit0=…, limitInf=…, samples=[(t,v),…], mode=…` blocks. A
    /// bare number is a constant exponent.
    fn from_str(s: &str) -> Result<Self> {
        if let Ok(c) = parse_real(s) {
            return Ok(Self::constant(lit(c)));
        }
        let mut limit0 = None;
        let mut limit_inf = None;
        let mut samples = None;
        let mut mode = None;
        let mut amplitude = 0.0;
        let mut interp = Interp::Log;
        let mut ell = f64::INFINITY;
        for part in split_top_level(s) {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Invalid(format!("expected key=value, got `{part}`")))?;
            let v = v.trim();
            match k.trim() {
                "limit0" => limit0 = Some(parse_real(v)?),
                "limitInf" => limit_inf = Some(parse_real(v)?),
                "samples" => samples = Some(parse_samples(v)?),
                "mode" => mode = Some(v.to_string()),
                "amplitude" => amplitude = parse_real(v)?,
                "ell" => ell = parse_real(v)?,
                "interp" => {
                    interp = match v {
                        "log" => Interp::Log,
                        "linear" => Interp::Linear,
                        other => {
                            return Err(Error::Invalid(format!("unknown interp `{other}`")))
                        }
                    }
                }
                other => return Err(Error::Invalid(format!("unknown exponent key `{other}`"))),
            }
        }
        let mode = mode.unwrap_or_else(|| {
            if samples.is_some() {
                "sampled".into()
            } else {
                "constant".into()
            }
        });
        let need = |x: Option<f64>, name: &str| {
            x.ok_or_else(|| Error::Invalid(format!("exponent mode `{mode}` needs {name}")))
        };
        let e = match mode.as_str() {
            "constant" => Self::constant(lit(need(limit0, "limit0")?)),
            "sampled" => {
                let samples = samples
                    .ok_or_else(|| Error::Invalid("sampled exponent needs samples".into()))?;
                let first = samples.first().map(|s| s.1).unwrap_or(f64::NAN);
                let zero = limit0.unwrap_or(first);
                Self::sampled(
                    samples.into_iter().map(|(t, v)| (lit(t), lit(v))).collect(),
                    lit(zero),
                    limit_inf.map(lit),
                    interp,
                )?
            }
            "derived" => {
                return Err(Error::Invalid(
                    "derived exponents cannot be read back; give samples instead".into(),
                ))
            }
            m => {
                let m: TestMode = m.parse()?;
                let z = need(limit0, "limit0")?;
                let i = limit_inf.unwrap_or(z);
                make_test_exponent(lit(z), lit(i), lit(amplitude), m)
            }
        };
        Ok(if ell.is_finite() {
            e.with_domain(lit(ell))
        } else {
            e
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    type E = ExponentFunction<f64>;

    #[test]
    fn constant_value() {
        assert_eq!(E::constant(2.0).evaluate(0.37).unwrap(), 2.0);
    }

    #[test]
    fn log_linear_midpoint() {
        let p = E::sampled(vec![(1.0, 2.0), (1f64.exp(), 3.0)], 2.0, Some(3.0), Interp::Log).unwrap();
        assert_relative_eq!(p.evaluate(0.5f64.exp()).unwrap(), 2.5, epsilon = 1e-15);
    }

    #[test]
    fn log_decay_formula_at_one() {
        // 2 + 1/ln(e+1), reference value from a 40-digit evaluation.
        let p = make_test_exponent(2.0, 3.0, 0.0, TestMode::LogDecay);
        assert_relative_eq!(p.evaluate(1.0).unwrap(), 2.761_462_859_614_66, epsilon = 1e-14);
    }

    #[test]
    fn nonpositive_argument_rejected() {
        let p = E::constant(2.0);
        assert!(matches!(p.evaluate(0.0), Err(Error::Domain(_))));
        assert!(matches!(p.evaluate(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn conjugates() {
        let q = E::constant(2.0).conjugate().unwrap();
        assert_relative_eq!(q.value(0.3), 2.0, epsilon = 1e-15);
        let q = E::constant(4.0).conjugate().unwrap();
        assert_relative_eq!(q.value(0.3), 4.0 / 3.0, epsilon = 1e-15);
        let p = make_test_exponent(1.5, 2.5, 0.2, TestMode::LogDecay);
        assert_relative_eq!(p.conjugate().unwrap().limit_zero(), 3.0, epsilon = 1e-14);
        assert!(matches!(
            make_test_exponent(1.0, 2.0, 0.0, TestMode::LogDecay).conjugate(),
            Err(Error::ConjugateUndefined { .. })
        ));
    }

    #[test]
    fn classify_constant() {
        let r = E::constant(2.0).classify(&[1.0]);
        assert_eq!(r.p_minus, 2.0);
        assert_eq!(r.p_plus, 2.0);
        assert_eq!(r.decay_constant_zero, Decay::Bounded(0.0));
        assert_eq!(r.decay_constant_infinity, Some(Decay::Bounded(0.0)));
        assert!(r.in_class[0].1);
    }

    #[test]
    fn classify_log_decay_example() {
        // |p(t)-2|·ln(1/t) = ln(1/t)/ln(e+1/t), whose sup on t <= 1/2 is
        // approached at the smallest t and stays below 1.
        let p = make_test_exponent(2.0, 3.0, 0.0, TestMode::LogDecay);
        let r = p.classify(&[]);
        let c = r.decay_constant_zero.constant().unwrap();
        let oracle = (1..=600)
            .map(|k| {
                let t = 2f64.powi(-k);
                (1.0 / (1f64.exp() + 1.0 / t).ln()) * (1.0 / t).ln()
            })
            .fold(0.0, f64::max);
        assert!(c <= 1.1);
        assert_relative_eq!(c, oracle, epsilon = 1e-3);
    }

    #[test]
    fn classify_loglog_fails_at_zero() {
        let p = make_test_exponent(2.0, 2.0, 1.0, TestMode::LogLogViolation);
        let r = p.classify(&[]);
        assert_eq!(r.decay_constant_zero, Decay::Unbounded);
        // The product grows without bound along 2^-k.
        let prod = |k: i32| {
            let t = 2f64.powi(-k);
            (p.value(t) - 2.0).abs() * (1.0 / t).ln()
        };
        for k in 2..60 {
            assert!(prod(k + 1) > prod(k));
        }
        assert!(r.decay_constant_infinity.unwrap().is_bounded());
    }

    #[test]
    fn test_exponent_modes() {
        let p = make_test_exponent(2.0, 2.0, 0.0, TestMode::LogDecay);
        assert!(p.is_constant());
        assert_eq!(p.value(123.0), 2.0);
        let r = make_test_exponent(2.0, 3.0, 0.5, TestMode::LogDecay).classify(&[]);
        assert!(r.decays());
    }

    #[test]
    fn oscillating_is_not_log_holder_but_decays() {
        let p = make_test_exponent(2.0, 2.0, 0.5, TestMode::Oscillating);
        assert!(p.classify(&[]).decays());
        let m: Vec<f64> = [1e-3, 1e-5, 1e-7]
            .iter()
            .map(|&h| p.log_holder_modulus(1.0, 0.01, h))
            .collect();
        assert!(m[0] < m[1] && m[1] < m[2]);
        assert!(m[2] > 5.0);
        let smooth = make_test_exponent(2.0, 3.0, 0.5, TestMode::LogDecay);
        assert!(smooth.log_holder_modulus(1.0, 0.01, 1e-7) < 1e-3);
    }

    #[test]
    fn text_round_trip() {
        let cases = [
            "limit0=2, mode=constant",
            "limit0=2, limitInf=3, amplitude=0.5, mode=oscillating",
            "limit0=1.5, limitInf=2, samples=[(0.5,1.7),(4,1.9)], mode=sampled, interp=log",
            "limit0=2, samples=[(0,2),(1,3)], mode=sampled, interp=linear, ell=1",
        ];
        for c in cases {
            let p: E = c.parse().unwrap();
            let again: E = p.to_string().parse().unwrap();
            for t in [1e-9, 0.3, 0.9, 1.0] {
                assert_eq!(p.value(t), again.value(t), "{c}");
            }
            assert_eq!(p.to_string(), again.to_string());
        }
        let p: E = "2.5".parse().unwrap();
        assert_eq!(p.value(7.0), 2.5);
        assert!("limit0=2, mode=wobbly".parse::<E>().is_err());
        assert!("samples=[(1,2)".parse::<E>().is_err());
    }

    #[test]
    fn limits_are_limits() {
        let p = make_test_exponent(1.7, 2.4, 0.8, TestMode::Oscillating);
        assert!((p.value(2f64.powi(-500)) - 1.7).abs() < 0.01);
        assert!((p.value(2f64.powi(500)) - 2.4).abs() < 0.01);
        let s = E::sampled(vec![(0.5, 3.0), (2.0, 1.0)], 2.0, Some(4.0), Interp::Log).unwrap();
        assert!((s.value(2f64.powi(-500)) - 2.0).abs() < 0.01);
        assert!((s.value(2f64.powi(500)) - 4.0).abs() < 0.02);
    }

    #[test]
    fn f32_works() {
        let p = make_test_exponent(2.0f32, 3.0, 0.5, TestMode::LogDecay);
        let r = p.classify(&[1.0]);
        assert!(r.p_minus >= 2.0 && r.p_plus <= 3.5);
        assert!(r.decays());
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn exponent() -> impl Strategy<Value = ExponentFunction<f64>> {
        (1.1f64..4.0, 1.1f64..4.0, 0.0f64..0.5, 0usize..2).prop_map(|(z, i, a, m)| {
            let mode = [TestMode::LogDecay, TestMode::Oscillating][m];
            make_test_exponent(z, i, a, mode)
        })
        .prop_filter("p_- > 1", |p| p.range().0 > 1.05)
    }

    proptest! {
        #[test]
        fn double_conjugate_is_identity(p in exponent(), t in -30.0f64..30.0) {
            let t = t.exp();
            let pp = p.conjugate().unwrap().conjugate().unwrap();
            prop_assert!((pp.value(t) - p.value(t)).abs() < 1e-12 * p.value(t));
        }

        #[test]
        fn reciprocals_sum_to_one(p in exponent(), t in -30.0f64..30.0) {
            let t = t.exp();
            let q = p.conjugate().unwrap();
            prop_assert!((1.0 / p.value(t) + 1.0 / q.value(t) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn log_decay_in_class(z in 1.1f64..4.0, i in 1.1f64..4.0, a in 0.0f64..0.5) {
            let p = make_test_exponent(z, i, a, TestMode::LogDecay);
            let threshold = z.min(i) - 0.01;
            let r = p.classify(&[threshold]);
            prop_assert!(r.in_class[0].1);
            prop_assert!(r.decays());
            prop_assert!(r.p_minus <= r.p_plus);
        }

        #[test]
        fn loglog_fails(z in 1.1f64..4.0, a in 0.2f64..2.0) {
            let p = make_test_exponent(z, z, a, TestMode::LogLogViolation);
            prop_assert_eq!(p.classify(&[]).decay_constant_zero, Decay::Unbounded);
        }
    }
}
