//! Operator-norm estimation over adversarial families, and the verdict rules.
//!
//! An experiment maps a source function to the ratio `‖Tf‖ / ‖f‖`. The
//! protocol evaluates it on a seeded family (near-extremal power ladders,
//! random dyadic block functions, dyadic indicators) on a base grid, again on
//! a grid refined by a fixed factor, and on an extended family. The verdict
//! is a heuristic:
//!
//! * blow-up: some ratio is infinite, or a power ladder grows monotonically by
//!   at least the blow-up factor;
//! * bounded: no blow-up, and the supremum moves by less than the flatness
//!   margin under both refinement and family extension;
//! * inconclusive otherwise.

use std::fmt;

use crate::error::{Error, Result};
use crate::grid::{resample, Partition, StepFunction};
use crate::rng::SplitMix64;
use crate::scalar::{lit, pow2, Real};

/// Outcome of the protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Bounded,
    BlowUp,
    Inconclusive,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Bounded => "bounded",
            Verdict::BlowUp => "blow-up",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Verdict {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "bounded" => Ok(Verdict::Bounded),
            "blow-up" => Ok(Verdict::BlowUp),
            "inconclusive" => Ok(Verdict::Inconclusive),
            o => Err(Error::Invalid(format!("unknown verdict `{o}`"))),
        }
    }
}

/// A single ratio evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ratio<T> {
    Finite(T),
    /// The image has infinite norm while the source is finite.
    Infinite,
    /// Zero or infinite source norm; excluded from the supremum.
    Skipped,
}

impl<T: Real> Ratio<T> {
    /// Builds a ratio from `ln ‖Tf‖` and `ln ‖f‖`; divergent images count as
    /// infinite, divergent or vanishing sources are skipped.
    pub fn from_logs(ln_num: Result<T>, ln_den: Result<T>) -> Result<Self> {
        let den = match ln_den {
            Ok(d) if d.is_finite() => d,
            Ok(_) => return Ok(Ratio::Skipped),
            Err(Error::Divergent(_)) | Err(Error::Overflow(_)) => return Ok(Ratio::Skipped),
            Err(e) => return Err(e),
        };
        match ln_num {
            Ok(n) if n == T::neg_infinity() => Ok(Ratio::Finite(T::zero())),
            Ok(n) => {
                let r = (n - den).exp();
                Ok(if r.is_finite() { Ratio::Finite(r) } else { Ratio::Infinite })
            }
            Err(Error::Divergent(_)) | Err(Error::Overflow(_)) => Ok(Ratio::Infinite),
            Err(e) => Err(e),
        }
    }

    /// `∞` for infinite ratios, `None` for skipped ones.
    pub fn value(&self) -> Option<T> {
        match self {
            Ratio::Finite(v) => Some(*v),
            Ratio::Infinite => Some(T::infinity()),
            Ratio::Skipped => None,
        }
    }
}

/// A ratio `‖Tf‖ / ‖f‖` evaluated on step functions over a grid.
pub trait Experiment<T: Real> {
    /// Per-grid precomputation.
    type Prepared;

    fn prepare(&self, grid: &Partition<T>) -> Result<Self::Prepared>;

    fn ratio(&self, prepared: &Self::Prepared, f: &StepFunction<T>) -> Result<Ratio<T>>;

    /// Critical power exponents `(κ₀, κ∞)`: ladder members are
    /// `s^{κ₀+ε}` near `0` and `s^{κ∞-ε}` near infinity.
    fn critical_exponents(&self) -> (T, Option<T>);

    /// `ℓ` of the source space.
    fn domain_length(&self) -> T;
}

/// Family parameters.
#[derive(Debug, Clone)]
pub struct FamilySpec<T> {
    pub seed: u64,
    pub ladder: Vec<T>,
    pub random: usize,
    pub indicators: bool,
    /// Extra ladder steps used only for the extension check.
    pub extension_ladder: Vec<T>,
    pub extension_random: usize,
}

impl<T: Real> Default for FamilySpec<T> {
    fn default() -> Self {
        Self {
            seed: 0x5EED,
            ladder: [0.1, 0.03, 0.01, 0.003].iter().map(|&e| lit(e)).collect(),
            random: 6,
            indicators: true,
            extension_ladder: vec![lit(0.001)],
            extension_random: 6,
        }
    }
}

/// Verdict thresholds.
#[derive(Debug, Clone, Copy)]
pub struct ProtocolSettings<T> {
    /// Relative change tolerated under refinement and extension.
    pub flatness: T,
    /// Total ladder growth that counts as blow-up.
    pub blowup_factor: T,
    /// Cells are split into this many pieces for the refinement check.
    pub refine_factor: usize,
}

impl<T: Real> Default for ProtocolSettings<T> {
    fn default() -> Self {
        Self {
            flatness: lit(0.1),
            blowup_factor: lit(10.0),
            refine_factor: 4,
        }
    }
}

/// Which end a power ladder probes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum End {
    Zero,
    Infinity,
}

/// Family member description, realizable on any grid.
#[derive(Debug, Clone)]
pub enum Member<T> {
    /// `s^κ` on `(lo, hi)`; `eps` is the ladder parameter.
    Power { end: End, eps: T, kappa: T, lo: T, hi: T },
    /// Positive dyadic block function, realized on the base grid.
    Random { seed: u64 },
    Indicator { lo: T, hi: T },
}

impl<T: Real> Member<T> {
    pub fn id(&self) -> String {
        match self {
            Member::Power { end, eps, .. } => match end {
                End::Zero => format!("ladder0:eps={eps}"),
                End::Infinity => format!("ladderInf:eps={eps}"),
            },
            Member::Random { seed } => format!("random:{seed}"),
            Member::Indicator { lo, hi } => format!("indicator:[{lo},{hi}]"),
        }
    }
}

/// Cell averages of `s^κ` restricted to `(lo, hi)`.
pub fn power_member<T: Real>(grid: &Partition<T>, kappa: T, lo: T, hi: T) -> StepFunction<T> {
    let e = kappa + T::one();
    StepFunction::from_cells(grid.clone(), |a, b| {
        let a2 = a.max(lo);
        let b2 = b.min(hi);
        if !(b2 > a2) {
            return T::zero();
        }
        // ∫_{a2}^{b2} s^κ ds, written to stay accurate for tiny κ+1 and for
        // a2 = 0.
        let integral = if a2 == T::zero() {
            (e * b2.ln()).exp() / e
        } else {
            let l = (b2 / a2).ln();
            let em = if e == T::zero() { l } else { (e * l).exp_m1() / e };
            (e * a2.ln()).exp() * em
        };
        integral / (b - a)
    })
    .expect("power member values are finite")
}

/// Range of dyadic exponents used for random blocks and indicators.
fn dyadic_range<T: Real>(grid: &Partition<T>, ell: T) -> (i32, i32) {
    let bps = grid.breakpoints();
    let t_min = bps[1].max(T::min_positive_value());
    let lo = (t_min.log2().ceil().to_i32().unwrap_or(-20) + 1).max(-20);
    let top = if ell.is_finite() { ell } else { grid.truncation() };
    let hi = (top.log2().floor().to_i32().unwrap_or(20)).min(20);
    (lo, hi.max(lo + 1))
}

/// Seeded positive dyadic block function on `grid`, as used by the families.
pub fn random_member<T: Real>(grid: &Partition<T>, ell: T, seed: u64) -> StepFunction<T> {
    let (lo, hi) = dyadic_range(grid, ell);
    let mut g = SplitMix64::new(seed);
    let blocks = g.int_range(1, 4);
    let mut values = vec![T::zero(); grid.n_cells()];
    let mids = grid.midpoints();
    for _ in 0..blocks {
        let i = g.int_range(lo as i64, hi as i64 - 1) as i32;
        let j = g.int_range(i as i64 + 1, (i as i64 + 6).min(hi as i64)) as i32;
        let (a, b) = (pow2::<T>(i), pow2::<T>(j));
        let v: T = lit(g.uniform(0.1, 1.0) * 2f64.powi(g.int_range(-3, 3) as i32));
        for (k, &m) in mids.iter().enumerate() {
            if m > a && m < b {
                values[k] = values[k] + v;
            }
        }
    }
    StepFunction::new(grid.clone(), values).expect("block values are finite")
}

/// A realized family on one grid.
pub struct Family<T> {
    pub members: Vec<(Member<T>, StepFunction<T>)>,
}

fn members<T: Real, E: Experiment<T>>(
    exp: &E,
    base: &Partition<T>,
    fam: &FamilySpec<T>,
    extension: bool,
) -> Vec<Member<T>> {
    let ell = exp.domain_length();
    let (k0, kinf) = exp.critical_exponents();
    let ladder = if extension {
        &fam.extension_ladder
    } else {
        &fam.ladder
    };
    let mut out = Vec::new();
    let zero_hi = if ell.is_finite() { ell.min(T::one()) } else { T::one() };
    for &eps in ladder {
        out.push(Member::Power {
            end: End::Zero,
            eps,
            kappa: k0 + eps,
            lo: T::zero(),
            hi: zero_hi,
        });
    }
    if let (Some(ki), false) = (kinf, ell.is_finite()) {
        for &eps in ladder {
            out.push(Member::Power {
                end: End::Infinity,
                eps,
                kappa: ki - eps,
                lo: T::one(),
                hi: base.truncation(),
            });
        }
    }
    let (count, offset) = if extension {
        (fam.extension_random, fam.random)
    } else {
        (fam.random, 0)
    };
    for i in 0..count {
        out.push(Member::Random {
            seed: SplitMix64::derive(fam.seed, (offset + i) as u64).next_u64(),
        });
    }
    if fam.indicators {
        let (lo, hi) = dyadic_range(base, ell);
        let picks: Vec<i32> = if extension {
            vec![lo, (lo + hi) / 2 + 1, hi - 1]
        } else {
            let mut v = vec![lo, (3 * lo + hi) / 4, (lo + hi) / 2, (lo + 3 * hi) / 4, hi - 1];
            v.dedup();
            v
        };
        for i in picks {
            if extension {
                out.push(Member::Indicator {
                    lo: T::zero(),
                    hi: pow2(i + 1),
                });
            } else {
                out.push(Member::Indicator {
                    lo: pow2(i),
                    hi: pow2(i + 1),
                });
                out.push(Member::Indicator {
                    lo: T::zero(),
                    hi: pow2(i),
                });
            }
        }
    }
    out
}

fn realize<T: Real>(m: &Member<T>, base: &Partition<T>, grid: &Partition<T>, ell: T) -> StepFunction<T> {
    match m {
        Member::Power { kappa, lo, hi, .. } => power_member(grid, *kappa, *lo, *hi),
        Member::Random { seed } => resample(&random_member(base, ell, *seed), grid),
        Member::Indicator { lo, hi } => resample(&StepFunction::indicator(base.clone(), *lo, *hi), grid),
    }
}

/// A point of a ladder curve.
#[derive(Debug, Clone, Copy)]
pub struct LadderPoint<T> {
    pub end: End,
    pub eps: T,
    pub ratio: T,
}

/// Everything the protocol measured.
#[derive(Debug, Clone)]
pub struct BoundednessReport<T> {
    /// `(member id, ratio)` on the base grid; infinite ratios are `∞`.
    pub ratios: Vec<(String, T)>,
    pub sup_ratio: T,
    /// `(number of cells, sup ratio)` for the base and refined grids.
    pub refinement_curve: Vec<(usize, T)>,
    /// Ladder ratios on the base grid, including extension steps.
    pub family_curve: Vec<LadderPoint<T>>,
    /// Ratios of the extension members on the base grid.
    pub extension_ratios: Vec<(String, T)>,
    /// Supremum over base and extension members.
    pub extension_sup: T,
    /// `(truncation, sup ratio)` at `T` and `4T` on unbounded domains.
    pub truncation_curve: Vec<(T, T)>,
    pub verdict: Verdict,
    /// Why the verdict was reached.
    pub reason: String,
}

fn sup<T: Real>(xs: &[(String, T)]) -> T {
    xs.iter().map(|x| x.1).fold(T::zero(), T::max)
}

fn evaluate<T: Real, E: Experiment<T>>(
    exp: &E,
    base: &Partition<T>,
    grid: &Partition<T>,
    list: &[Member<T>],
) -> Result<Vec<(Member<T>, Option<T>)>> {
    let prep = exp.prepare(grid)?;
    let ell = exp.domain_length();
    list.iter()
        .map(|m| {
            let f = realize(m, base, grid, ell);
            Ok((m.clone(), exp.ratio(&prep, &f)?.value()))
        })
        .collect()
}

fn ladder_blows_up<T: Real>(points: &[LadderPoint<T>], end: End, factor: T) -> bool {
    let mut r: Vec<(T, T)> = points
        .iter()
        .filter(|p| p.end == end)
        .map(|p| (p.eps, p.ratio))
        .collect();
    if r.len() < 2 {
        return false;
    }
    r.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
    let monotone = r.windows(2).all(|w| w[1].1 >= w[0].1 * (T::one() - lit(1e-9)));
    let first = r[0].1;
    let last = r[r.len() - 1].1;
    monotone && first > T::zero() && last >= first * factor
}

/// Runs the full protocol on `base` and its refinement.
pub fn run<T: Real, E: Experiment<T>>(
    exp: &E,
    base: &Partition<T>,
    family: &FamilySpec<T>,
    settings: &ProtocolSettings<T>,
) -> Result<BoundednessReport<T>> {
    let base_members = members(exp, base, family, false);
    if base_members.is_empty() {
        return Err(Error::Invalid("the test family is empty".into()));
    }
    let ext_members = members(exp, base, family, true);

    let collect = |rs: Vec<(Member<T>, Option<T>)>| -> (Vec<(String, T)>, Vec<LadderPoint<T>>) {
        let mut ratios = Vec::new();
        let mut ladder = Vec::new();
        for (m, r) in rs {
            if let Some(r) = r {
                if let Member::Power { end, eps, .. } = m {
                    ladder.push(LadderPoint { end, eps, ratio: r });
                }
                ratios.push((m.id(), r));
            }
        }
        (ratios, ladder)
    };

    let (ratios, mut ladder) = collect(evaluate(exp, base, base, &base_members)?);
    let sup_ratio = sup(&ratios);
    let (ext_ratios, ext_ladder) = collect(evaluate(exp, base, base, &ext_members)?);
    ladder.extend(ext_ladder);
    let extension_sup = sup_ratio.max(sup(&ext_ratios));

    let fine = base.refine(settings.refine_factor);
    let (fine_ratios, _) = collect(evaluate(exp, base, &fine, &base_members)?);
    let fine_sup = sup(&fine_ratios);
    let refinement_curve = vec![(base.n_cells(), sup_ratio), (fine.n_cells(), fine_sup)];

    let mut truncation_curve = Vec::new();
    if !exp.domain_length().is_finite() {
        let t = base.truncation();
        let wide = base.extend_to(t * lit(4.0));
        let (wide_ratios, _) = collect(evaluate(exp, base, &wide, &base_members)?);
        truncation_curve.push((t, sup_ratio));
        truncation_curve.push((t * lit(4.0), sup(&wide_ratios)));
    }

    let base_ladder: Vec<LadderPoint<T>> = ladder
        .iter()
        .copied()
        .filter(|p| family.ladder.contains(&p.eps))
        .collect();
    let infinite = ratios
        .iter()
        .chain(&ext_ratios)
        .find(|r| r.1 == T::infinity())
        .map(|r| r.0.clone());
    let grows = [End::Zero, End::Infinity]
        .into_iter()
        .find(|&e| ladder_blows_up(&base_ladder, e, settings.blowup_factor));

    let rel = |a: T, b: T| {
        if a == b {
            T::zero()
        } else {
            (a - b).abs() / b.abs().max(T::min_positive_value())
        }
    };
    let flat_refine = sup_ratio.is_finite() && rel(fine_sup, sup_ratio) <= settings.flatness;
    let flat_extend = sup_ratio.is_finite() && rel(extension_sup, sup_ratio) <= settings.flatness;

    let (verdict, reason) = if let Some(id) = infinite {
        (Verdict::BlowUp, format!("infinite ratio for {id}"))
    } else if let Some(end) = grows {
        let which = if end == End::Zero { "zero" } else { "infinity" };
        (
            Verdict::BlowUp,
            format!("ladder at {which} grows monotonically by at least {}", settings.blowup_factor),
        )
    } else if ratios.is_empty() {
        (Verdict::Inconclusive, "every member was skipped".into())
    } else if flat_refine && flat_extend {
        (
            Verdict::Bounded,
            format!(
                "sup {sup_ratio:.6} moves {:.4} under refinement and {:.4} under extension",
                rel(fine_sup, sup_ratio),
                rel(extension_sup, sup_ratio)
            ),
        )
    } else {
        (
            Verdict::Inconclusive,
            format!(
                "sup {sup_ratio:.6} moves {:.4} under refinement and {:.4} under extension",
                rel(fine_sup, sup_ratio),
                rel(extension_sup, sup_ratio)
            ),
        )
    };

    Ok(BoundednessReport {
        ratios,
        sup_ratio,
        refinement_curve,
        family_curve: ladder,
        extension_ratios: ext_ratios,
        extension_sup,
        truncation_curve,
        verdict,
        reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_member_averages() {
        let grid = Partition::<f64>::geometric(2f64.powi(-10), 4.0, 1).unwrap();
        let f = power_member(&grid, -0.5, 0.0, 1.0);
        // ∫ over the support of s^{-1/2} on (0, 1) is 2.
        assert!((f.integral() - 2.0).abs() < 1e-12);
        let g = power_member(&grid, -1.0, 1.0, 4.0);
        assert!((g.integral() - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn ratio_from_logs() {
        let r = Ratio::<f64>::from_logs(Ok(1.0), Ok(0.0)).unwrap();
        assert_eq!(r, Ratio::Finite(1f64.exp()));
        let r = Ratio::<f64>::from_logs(Err(Error::Divergent("x".into())), Ok(0.0)).unwrap();
        assert_eq!(r, Ratio::Infinite);
        let r = Ratio::<f64>::from_logs(Ok(0.0), Ok(f64::NEG_INFINITY)).unwrap();
        assert_eq!(r, Ratio::Skipped);
    }

    #[test]
    fn ladder_rule() {
        let pts = |rs: &[f64]| -> Vec<LadderPoint<f64>> {
            [0.1, 0.03, 0.01, 0.003]
                .iter()
                .zip(rs)
                .map(|(&eps, &ratio)| LadderPoint { end: End::Zero, eps, ratio })
                .collect()
        };
        assert!(ladder_blows_up(&pts(&[1.0, 3.0, 9.0, 30.0]), End::Zero, 10.0));
        assert!(!ladder_blows_up(&pts(&[1.0, 3.0, 2.0, 30.0]), End::Zero, 10.0));
        assert!(!ladder_blows_up(&pts(&[1.0, 1.5, 1.8, 1.9]), End::Zero, 10.0));
        assert!(!ladder_blows_up(&pts(&[1.0, 3.0, 9.0, 30.0]), End::Infinity, 10.0));
    }
}
