//! Hardy-type operators with variable power weights.
//!
//! Lower: `t^{α(t)+ν(t)-1} ∫_0^t f(s) s^{-α(s)} ds`.
//! Upper: `t^{β(t)+ν(t)} ∫_t^ℓ f(s) s^{-β(s)-1} ds`.
//!
//! For a fixed grid the kernel integrals between consecutive quadrature
//! nodes are computed once (4-point rule in `ln s`, in log form), so applying
//! an operator to a step function is a single cumulative pass.

use crate::error::{Error, Result};
use crate::exponent::ExponentFunction;
use crate::grid::{Partition, StepFunction};
use crate::norms::{LogSamples, TailProbe};
use crate::protocol::{self, BoundednessReport, Experiment, FamilySpec, ProtocolSettings, Ratio};
use crate::quadrature::{ln_integral_log4, NodeSet};
use crate::scalar::{lit, ln_add_exp, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Lower,
    Upper,
}

impl Direction {
    pub fn name(self) -> &'static str {
        match self {
            Direction::Lower => "lower",
            Direction::Upper => "upper",
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "lower" => Ok(Direction::Lower),
            "upper" => Ok(Direction::Upper),
            o => Err(Error::Invalid(format!("unknown Hardy direction `{o}`"))),
        }
    }
}

/// Exponents of a Hardy-type inequality `L^{p(·)} → L^{q(·)}` on `(0, ℓ)`.
#[derive(Debug, Clone)]
pub struct HardySpec<T> {
    pub p: ExponentFunction<T>,
    pub q: ExponentFunction<T>,
    pub alpha: ExponentFunction<T>,
    pub beta: ExponentFunction<T>,
    pub nu: ExponentFunction<T>,
    pub direction: Direction,
}

impl<T: Real> HardySpec<T> {
    /// Averaging-type operator with weight `α` and gain `ν`.
    pub fn lower(p: ExponentFunction<T>, q: ExponentFunction<T>, alpha: ExponentFunction<T>, nu: ExponentFunction<T>) -> Self {
        Self {
            p,
            q,
            alpha,
            beta: ExponentFunction::constant(T::zero()),
            nu,
            direction: Direction::Lower,
        }
    }

    /// Dual operator with weight `β` and gain `ν`.
    pub fn upper(p: ExponentFunction<T>, q: ExponentFunction<T>, beta: ExponentFunction<T>, nu: ExponentFunction<T>) -> Self {
        Self {
            p,
            q,
            alpha: ExponentFunction::constant(T::zero()),
            beta,
            nu,
            direction: Direction::Upper,
        }
    }

    /// `ℓ`, taken from `p`.
    pub fn domain_length(&self) -> T {
        self.p.domain_length()
    }

    fn limits(e: &ExponentFunction<T>) -> (T, T) {
        (e.limit_zero(), e.limit_infinity().unwrap_or(e.limit_zero()))
    }
}

/// Which hypotheses of the Hardy inequalities hold. Conditions at infinity
/// are `None` when `ℓ < ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HardyConditions {
    /// `0 <= ν(0) < 1/p(0)`.
    pub nu_zero: bool,
    pub nu_infinity: Option<bool>,
    /// `1/q(0) = 1/p(0) - ν(0)`.
    pub relation_zero: bool,
    pub relation_infinity: Option<bool>,
    /// `α(0) < 1/p'(0)`.
    pub alpha_zero: bool,
    pub alpha_infinity: Option<bool>,
    /// `β(0) > -1/p(0)`.
    pub beta_zero: bool,
    pub beta_infinity: Option<bool>,
}

impl HardyConditions {
    fn ok(x: Option<bool>) -> bool {
        x.unwrap_or(true)
    }

    /// Conditions shared by both operators.
    pub fn common(&self) -> bool {
        self.nu_zero
            && Self::ok(self.nu_infinity)
            && self.relation_zero
            && Self::ok(self.relation_infinity)
    }

    pub fn lower(&self) -> bool {
        self.common() && self.alpha_zero && Self::ok(self.alpha_infinity)
    }

    pub fn upper(&self) -> bool {
        self.common() && self.beta_zero && Self::ok(self.beta_infinity)
    }

    pub fn holds(&self, direction: Direction) -> bool {
        match direction {
            Direction::Lower => self.lower(),
            Direction::Upper => self.upper(),
        }
    }
}

/// Evaluates the hypotheses on the endpoint limits of the exponents.
pub fn hardy_conditions<T: Real>(spec: &HardySpec<T>) -> HardyConditions {
    let infinite = !spec.domain_length().is_finite();
    let (p0, pi) = HardySpec::limits(&spec.p);
    let (q0, qi) = HardySpec::limits(&spec.q);
    let (n0, ni) = HardySpec::limits(&spec.nu);
    let (a0, ai) = HardySpec::limits(&spec.alpha);
    let (b0, bi) = HardySpec::limits(&spec.beta);
    let tol: T = lit(1e-9);
    let nu_ok = |n: T, p: T| n >= T::zero() && n < p.recip();
    let rel_ok = |q: T, p: T, n: T| (q.recip() - (p.recip() - n)).abs() <= tol;
    let alpha_ok = |a: T, p: T| a < T::one() - p.recip();
    let beta_ok = |b: T, p: T| b > -p.recip();
    let at_inf = |v: bool| if infinite { Some(v) } else { None };
    HardyConditions {
        nu_zero: nu_ok(n0, p0),
        nu_infinity: at_inf(nu_ok(ni, pi)),
        relation_zero: rel_ok(q0, p0, n0),
        relation_infinity: at_inf(rel_ok(qi, pi, ni)),
        alpha_zero: alpha_ok(a0, p0),
        alpha_infinity: at_inf(alpha_ok(ai, pi)),
        beta_zero: beta_ok(b0, p0),
        beta_infinity: at_inf(beta_ok(bi, pi)),
    }
}

/// A Hardy operator prepared for step functions on one partition of `(0, ℓ)`.
#[derive(Debug, Clone)]
pub struct HardyOperator<T> {
    spec: HardySpec<T>,
    partition: Partition<T>,
    nodes: NodeSet<T>,
    /// `ln ∫` of the kernel over each whole cell. For the lower operator the
    /// first cell includes `(0, δ)`; `None` when that piece diverges.
    ln_kernel_cell: Vec<Option<T>>,
    /// `ln ∫` of the kernel from the cell start (lower) or up to the cell
    /// end (upper) for every node.
    ln_kernel_node: Vec<Option<T>>,
    /// `ln t^{α+ν-1}` or `ln t^{β+ν}` at every node.
    ln_power_node: Vec<T>,
    q_node: Vec<T>,
    p_node: Vec<T>,
    /// Probes at `δ, 2δ`: partial kernel integrals, powers and `q`.
    left: Option<Probe<T>>,
    /// Probes at `T, 2T` (lower operator, unbounded domain).
    right: Option<Probe<T>>,
    /// `p` at `δ, 2δ` for the source norm.
    p_left: Option<[T; 2]>,
    right_endpoint_power: Vec<T>,
}

#[derive(Debug, Clone, Copy)]
struct Probe<T> {
    at: T,
    ln_kernel: [Option<T>; 2],
    ln_power: [T; 2],
    q: [T; 2],
}

impl<T: Real> HardyOperator<T> {
    pub fn new(spec: &HardySpec<T>, partition: &Partition<T>) -> Result<Self> {
        if partition.start() != T::zero() {
            return Err(Error::Domain("Hardy operators act on partitions of (0, ℓ)".into()));
        }
        let ell = spec.domain_length();
        if ell.is_finite() && partition.truncation() > ell * (T::one() + lit(1e-9)) {
            return Err(Error::Domain(format!(
                "partition ends at {} beyond ℓ = {ell}",
                partition.truncation()
            )));
        }
        let lower = spec.direction == Direction::Lower;
        let unbounded = !ell.is_finite();
        let nodes = NodeSet::build(partition.breakpoints(), unbounded);
        let n_cells = partition.n_cells();

        let weight = |s: T| -> T {
            if lower {
                -spec.alpha.value(s) * s.ln()
            } else {
                -(spec.beta.value(s) + T::one()) * s.ln()
            }
        };
        let power = |t: T| -> T {
            if lower {
                (spec.alpha.value(t) + spec.nu.value(t) - T::one()) * t.ln()
            } else {
                (spec.beta.value(t) + spec.nu.value(t)) * t.ln()
            }
        };
        let gap = |a: T, b: T| ln_integral_log4(a, b, weight);

        let delta = nodes.left_tail.expect("partition starts at 0");
        // ∫_0^δ s^{-α} with α frozen at δ.
        let head: Option<T> = {
            let a = spec.alpha.value(delta);
            let e = T::one() - a;
            if lower && e > T::zero() {
                Some(e * delta.ln() - e.ln())
            } else if lower {
                None
            } else {
                Some(T::neg_infinity())
            }
        };

        let n = nodes.len();
        let mut ln_kernel_node = vec![None; n];
        let mut ln_kernel_cell = vec![Some(T::neg_infinity()); n_cells];
        let mut probe_kernel = [None, None];
        let two_delta = delta * lit(2.0);

        // Marks: piece boundaries and nodes, ascending, each tagged with the
        // node index when it is a node.
        let mut marks: Vec<(T, Option<usize>, usize)> = Vec::with_capacity(n + 2 * nodes.pieces.len());
        {
            let mut j = 0;
            for (pid, &(lo, hi)) in nodes.pieces.iter().enumerate() {
                let cell = if j < n { nodes.cell[j] } else { n_cells - 1 };
                marks.push((lo, None, cell));
                while j < n && nodes.piece[j] == pid {
                    marks.push((nodes.t[j], Some(j), cell));
                    j += 1;
                }
                marks.push((hi, None, cell));
            }
        }

        if lower {
            let mut acc: Option<T> = Some(T::neg_infinity());
            let mut current = usize::MAX;
            let mut prev = T::zero();
            for &(x, node, cell) in &marks {
                if cell != current {
                    if current != usize::MAX {
                        ln_kernel_cell[current] = acc;
                    }
                    current = cell;
                    acc = if cell == 0 { head } else { Some(T::neg_infinity()) };
                    prev = x;
                }
                if x > prev {
                    acc = acc.map(|a| ln_add_exp(a, gap(prev, x)));
                    prev = x;
                }
                if let Some(j) = node {
                    ln_kernel_node[j] = acc;
                }
                if cell == 0 && x == delta {
                    probe_kernel[0] = acc;
                }
                if cell == 0 && x == two_delta {
                    probe_kernel[1] = acc;
                }
            }
            if current != usize::MAX {
                ln_kernel_cell[current] = acc;
            }
        } else {
            let mut acc: Option<T> = Some(T::neg_infinity());
            let mut current = usize::MAX;
            let mut prev = T::zero();
            for &(x, node, cell) in marks.iter().rev() {
                if cell != current {
                    if current != usize::MAX {
                        ln_kernel_cell[current] = acc;
                    }
                    current = cell;
                    acc = Some(T::neg_infinity());
                    prev = x;
                }
                if x < prev {
                    acc = acc.map(|a| ln_add_exp(a, gap(x, prev)));
                    prev = x;
                }
                if let Some(j) = node {
                    ln_kernel_node[j] = acc;
                }
                if cell == 0 && x == delta {
                    probe_kernel[0] = acc;
                }
                if cell == 0 && x == two_delta {
                    probe_kernel[1] = acc;
                }
            }
            if current != usize::MAX {
                ln_kernel_cell[current] = acc;
            }
        }

        let ln_power_node: Vec<T> = nodes.t.iter().map(|&t| power(t)).collect();
        let q_node: Vec<T> = nodes.t.iter().map(|&t| spec.q.value(t)).collect();
        let p_node: Vec<T> = nodes.t.iter().map(|&t| spec.p.value(t)).collect();
        let left = Some(Probe {
            at: delta,
            ln_kernel: probe_kernel,
            ln_power: [power(delta), power(two_delta)],
            q: [spec.q.value(delta), spec.q.value(two_delta)],
        });
        let right = match nodes.right_tail {
            Some(tt) if lower => {
                let t2 = tt * lit(2.0);
                Some(Probe {
                    at: tt,
                    ln_kernel: [None, None],
                    ln_power: [power(tt), power(t2)],
                    q: [spec.q.value(tt), spec.q.value(t2)],
                })
            }
            _ => None,
        };
        let right_endpoint_power = partition.breakpoints()[1..].iter().map(|&b| power(b)).collect();
        Ok(Self {
            spec: spec.clone(),
            partition: partition.clone(),
            p_left: Some([spec.p.value(delta), spec.p.value(two_delta)]),
            nodes,
            ln_kernel_cell,
            ln_kernel_node,
            ln_power_node,
            q_node,
            p_node,
            left,
            right,
            right_endpoint_power,
        })
    }

    pub fn partition(&self) -> &Partition<T> {
        &self.partition
    }

    pub fn spec(&self) -> &HardySpec<T> {
        &self.spec
    }

    fn check(&self, f: &StepFunction<T>) -> Result<Vec<T>> {
        if *f.partition() != self.partition {
            return Err(Error::Invalid("step function lives on another partition".into()));
        }
        Ok(f.values().iter().map(|v| v.abs().ln()).collect())
    }

    /// `ln(v · e^{k})`, treating `v = 0` as an exact zero even when `k`
    /// diverges.
    fn term(lnv: T, k: Option<T>) -> Result<T> {
        if lnv == T::neg_infinity() {
            return Ok(T::neg_infinity());
        }
        k.map(|k| lnv + k)
            .ok_or_else(|| Error::Divergent("s^{-α(s)} is not integrable at 0".into()))
    }

    /// `ln` of the cumulative integral before each cell (lower) or after it
    /// (upper), plus the total.
    fn cumulative(&self, lnv: &[T]) -> Result<(Vec<T>, T)> {
        let n = lnv.len();
        let mut out = vec![T::neg_infinity(); n];
        let mut acc = T::neg_infinity();
        match self.spec.direction {
            Direction::Lower => {
                for k in 0..n {
                    out[k] = acc;
                    acc = ln_add_exp(acc, Self::term(lnv[k], self.ln_kernel_cell[k])?);
                }
            }
            Direction::Upper => {
                for k in (0..n).rev() {
                    out[k] = acc;
                    acc = ln_add_exp(acc, Self::term(lnv[k], self.ln_kernel_cell[k])?);
                }
            }
        }
        Ok((out, acc))
    }

    /// `ln |Hf|` at the quadrature nodes, with tail probes, ready for the
    /// `q(·)`-modular.
    pub fn image_samples(&self, f: &StepFunction<T>) -> Result<LogSamples<T>> {
        let lnv = self.check(f)?;
        let (before, total) = self.cumulative(&lnv)?;
        let n = self.nodes.len();
        let mut ln_g = Vec::with_capacity(n);
        for j in 0..n {
            let k = self.nodes.cell[j];
            let c = ln_add_exp(before[k], Self::term(lnv[k], self.ln_kernel_node[j])?);
            ln_g.push(if c == T::neg_infinity() { c } else { self.ln_power_node[j] + c });
        }
        let left = match self.left {
            Some(pr) => {
                let mut lg = [T::neg_infinity(); 2];
                for i in 0..2 {
                    let c = ln_add_exp(before[0], Self::term(lnv[0], pr.ln_kernel[i])?);
                    if c != T::neg_infinity() {
                        lg[i] = pr.ln_power[i] + c;
                    }
                }
                Some(TailProbe { at: pr.at, ln_g: lg, q: pr.q })
            }
            None => None,
        };
        let right = self.right.map(|pr| TailProbe {
            at: pr.at,
            ln_g: if total == T::neg_infinity() {
                [total; 2]
            } else {
                [pr.ln_power[0] + total, pr.ln_power[1] + total]
            },
            q: pr.q,
        });
        Ok(LogSamples {
            ln_g,
            q: self.q_node.clone(),
            ln_w: self.nodes.ln_w.clone(),
            left,
            right,
        })
    }

    /// `|f|` at the quadrature nodes with exponent `p`.
    pub fn source_samples(&self, f: &StepFunction<T>) -> Result<LogSamples<T>> {
        let lnv = self.check(f)?;
        Ok(LogSamples {
            ln_g: self.nodes.cell.iter().map(|&k| lnv[k]).collect(),
            q: self.p_node.clone(),
            ln_w: self.nodes.ln_w.clone(),
            left: self.p_left.map(|pq| TailProbe {
                at: self.nodes.left_tail.expect("partition starts at 0"),
                ln_g: [lnv[0], lnv[0]],
                q: pq,
            }),
            right: None,
        })
    }

    /// `Hf` at the right endpoint of every cell.
    pub fn apply(&self, f: &StepFunction<T>) -> Result<StepFunction<T>> {
        let lnv = self.check(f)?;
        let (before, total) = self.cumulative(&lnv)?;
        let n = lnv.len();
        let values: Vec<T> = (0..n)
            .map(|k| {
                let c = match self.spec.direction {
                    Direction::Lower => {
                        if k + 1 < n {
                            before[k + 1]
                        } else {
                            total
                        }
                    }
                    Direction::Upper => before[k],
                };
                if c == T::neg_infinity() {
                    T::zero()
                } else {
                    (self.right_endpoint_power[k] + c).exp()
                }
            })
            .collect();
        StepFunction::new(self.partition.clone(), values)
    }

    /// `‖Hf‖_{q(·)} / ‖f‖_{p(·)}`.
    pub fn ratio(&self, f: &StepFunction<T>) -> Result<Ratio<T>> {
        let den = self.source_samples(f)?.ln_luxemburg();
        let num = self.image_samples(f).and_then(|s| s.ln_luxemburg());
        Ratio::from_logs(num, den)
    }
}

/// `t^{α+ν-1} ∫_0^t |f(s)| s^{-α(s)} ds` at the right endpoint of each cell.
pub fn hardy_lower<T: Real>(f: &StepFunction<T>, spec: &HardySpec<T>) -> Result<StepFunction<T>> {
    let mut s = spec.clone();
    s.direction = Direction::Lower;
    HardyOperator::new(&s, f.partition())?.apply(f)
}

/// `t^{β+ν} ∫_t^ℓ |f(s)| s^{-β(s)-1} ds` at the right endpoint of each cell.
pub fn hardy_upper<T: Real>(f: &StepFunction<T>, spec: &HardySpec<T>) -> Result<StepFunction<T>> {
    let mut s = spec.clone();
    s.direction = Direction::Upper;
    HardyOperator::new(&s, f.partition())?.apply(f)
}

impl<T: Real> Experiment<T> for HardySpec<T> {
    type Prepared = HardyOperator<T>;

    fn prepare(&self, grid: &Partition<T>) -> Result<HardyOperator<T>> {
        HardyOperator::new(self, grid)
    }

    fn ratio(&self, op: &HardyOperator<T>, f: &StepFunction<T>) -> Result<Ratio<T>> {
        op.ratio(f)
    }

    fn critical_exponents(&self) -> (T, Option<T>) {
        let (p0, pi) = Self::limits(&self.p);
        let infinite = !self.domain_length().is_finite();
        match self.direction {
            Direction::Lower => {
                let (a0, _) = Self::limits(&self.alpha);
                let k0 = (-p0.recip()).max(a0 - T::one());
                (k0, infinite.then(|| -pi.recip()))
            }
            Direction::Upper => {
                let (_, bi) = Self::limits(&self.beta);
                (-p0.recip(), infinite.then(|| (-pi.recip()).min(bi)))
            }
        }
    }

    fn domain_length(&self) -> T {
        HardySpec::domain_length(self)
    }
}

/// Runs the boundedness protocol for `spec` on `grid` (the default partition
/// of `(0, ℓ)` when `None`).
pub fn estimate_operator_norm<T: Real>(
    spec: &HardySpec<T>,
    family: &FamilySpec<T>,
    settings: &ProtocolSettings<T>,
    grid: Option<&Partition<T>>,
) -> Result<BoundednessReport<T>> {
    let base = grid
        .cloned()
        .unwrap_or_else(|| Partition::t_space(spec.domain_length()));
    protocol::run(spec, &base, family, settings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{double_star, rearrange};
    use crate::protocol::Verdict;
    use proptest::prelude::*;

    fn c(x: f64) -> ExponentFunction<f64> {
        ExponentFunction::constant(x)
    }

    fn grid() -> Partition<f64> {
        Partition::<f64>::geometric(2f64.powi(-20), 2f64.powi(6), 2).unwrap()
    }

    #[test]
    fn averaging_of_indicator() {
        let g = grid();
        let f = StepFunction::indicator(g.clone(), 0.0, 1.0);
        let spec = HardySpec::lower(c(2.0), c(2.0), c(0.0), c(0.0));
        let h = hardy_lower(&f, &spec).unwrap();
        for k in 0..g.n_cells() {
            let t = g.cell(k).1;
            let want = t.min(1.0) / t;
            assert!((h.values()[k] - want).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn zero_maps_to_zero() {
        let g = grid();
        let f = StepFunction::zero(g.clone());
        let spec = HardySpec::lower(c(2.0), c(2.0), c(0.25), c(0.0));
        assert!(hardy_lower(&f, &spec).unwrap().is_zero());
        let spec = HardySpec::upper(c(2.0), c(2.0), c(0.5), c(0.0));
        assert!(hardy_upper(&f, &spec).unwrap().is_zero());
    }

    #[test]
    fn lower_power_weight_matches_cellwise_antiderivative() {
        // Oracle: ∫ v s^{-1/4} over whole cells in closed form.
        let g = grid();
        let f = StepFunction::from_cells(g.clone(), |a, b| {
            if b <= 1.0 {
                (b.powf(1.25) - a.powf(1.25)) / 1.25 / (b - a)
            } else {
                0.0
            }
        })
        .unwrap();
        let spec = HardySpec::lower(c(2.0), c(2.0), c(0.25), c(0.0));
        let h = hardy_lower(&f, &spec).unwrap();
        let mut acc = 0.0;
        for k in 0..g.n_cells() {
            let (a, b) = g.cell(k);
            acc += f.values()[k] * (b.powf(0.75) - a.powf(0.75)) / 0.75;
            let want = b.powf(-0.75) * acc;
            assert!((h.values()[k] / want - 1.0).abs() < 1e-10, "t={b}");
            if b <= 1.0 && a >= 2f64.powi(-18) {
                // Continuum answer t^{1/4}, up to the step approximation.
                assert!((h.values()[k] / b.powf(0.25) - 1.0).abs() < 0.05);
            }
        }
    }

    #[test]
    fn upper_log_profile() {
        let g = Partition::<f64>::new((0..=16).map(|k| k as f64 / 4.0).collect()).unwrap();
        let f = StepFunction::indicator(g.clone(), 1.0, 2.0);
        let spec = HardySpec::upper(c(2.0), c(2.0), c(0.0), c(0.0));
        let h = hardy_upper(&f, &spec).unwrap();
        for k in 0..g.n_cells() {
            let t: f64 = g.cell(k).1;
            let want = if t < 2.0 { (2.0 / t.max(1.0)).ln() } else { 0.0 };
            assert!((h.values()[k] - want).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn upper_half_weight() {
        // β = 1/2, f = s^{1/2} on (0, 1) cellwise: oracle ∫ v s^{-3/2} exactly.
        let g = grid();
        let f = StepFunction::from_cells(g.clone(), |a, b| {
            if b <= 1.0 {
                (b.powf(1.5) - a.powf(1.5)) / 1.5 / (b - a)
            } else {
                0.0
            }
        })
        .unwrap();
        let spec = HardySpec::upper(c(2.0), c(2.0), c(0.5), c(0.0));
        let h = hardy_upper(&f, &spec).unwrap();
        let n = g.n_cells();
        let mut acc = 0.0;
        let mut want = vec![0.0; n];
        for k in (0..n).rev() {
            let b = g.cell(k).1;
            want[k] = b.sqrt() * acc;
            let (a, b) = g.cell(k);
            acc += f.values()[k] * 2.0 * (a.powf(-0.5) - b.powf(-0.5));
        }
        for k in 0..n {
            let t = g.cell(k).1;
            if want[k] == 0.0 {
                assert_eq!(h.values()[k], 0.0);
            } else {
                assert!((h.values()[k] / want[k] - 1.0).abs() < 1e-10, "t={t}");
            }
            if t < 0.5 {
                let cont = t.sqrt() * (1.0 / t).ln();
                assert!((h.values()[k] / cont - 1.0).abs() < 0.05, "t={t}");
            }
        }
    }

    #[test]
    fn averaging_is_double_star_on_rearrangements() {
        let g = grid();
        let f = StepFunction::from_cells(g.clone(), |a, _| (-a).exp()).unwrap();
        let fs = rearrange(&f);
        let ds = double_star(&fs);
        let part = fs.partition().clone();
        let spec = HardySpec::lower(c(2.0), c(2.0), c(0.0), c(0.0));
        let h = hardy_lower(fs.as_step(), &spec).unwrap();
        assert_eq!(part.n_cells(), h.n_cells());
        for (x, y) in h.values().iter().zip(ds.values()) {
            assert!((x / y - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn conditions_examples() {
        let s = HardySpec::lower(c(2.0), c(2.0), c(0.0), c(0.0));
        let h = hardy_conditions(&s);
        assert!(h.lower());
        let s = HardySpec::lower(c(2.0), c(2.0), c(0.5), c(0.0));
        assert!(!hardy_conditions(&s).alpha_zero);
        let s = HardySpec::lower(c(2.0), c(4.0), c(0.0), c(0.25));
        assert!(hardy_conditions(&s).relation_zero);
        let s = HardySpec::upper(c(2.0).with_domain(1.0), c(2.0).with_domain(1.0), c(-0.6), c(0.0));
        let h = hardy_conditions(&s);
        assert!(!h.beta_zero);
        assert_eq!(h.beta_infinity, None);
    }

    #[test]
    fn divergent_kernel_at_zero() {
        let g = grid();
        let f = StepFunction::indicator(g.clone(), 0.0, 1.0);
        let spec = HardySpec::lower(c(2.0), c(2.0), c(1.2), c(0.0));
        assert!(matches!(hardy_lower(&f, &spec), Err(Error::Divergent(_))));
        let f = StepFunction::indicator(g.clone(), 1.0, 2.0);
        assert!(hardy_lower(&f, &spec).is_ok());
    }

    #[test]
    fn classical_constant() {
        let spec = HardySpec::lower(c(2.0), c(2.0), c(0.0), c(0.0));
        let r = estimate_operator_norm(&spec, &FamilySpec::default(), &ProtocolSettings::default(), None).unwrap();
        assert_eq!(r.verdict, Verdict::Bounded, "{}", r.reason);
        assert!(r.sup_ratio > 1.8 && r.sup_ratio <= 2.0, "{}", r.sup_ratio);
        // Along the ladder the exact ratio for s^{-1/2+ε} is 2/√(1+2ε).
        for pt in &r.family_curve {
            if pt.end == protocol::End::Zero && pt.eps >= 0.003 {
                let want = 2.0 / (1.0 + 2.0 * pt.eps).sqrt();
                assert!((pt.ratio / want - 1.0).abs() < 0.02, "eps={} got {} want {want}", pt.eps, pt.ratio);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn monotone_and_homogeneous(
            vals in prop::collection::vec(0.0f64..4.0, 16),
            bump in prop::collection::vec(0.0f64..1.0, 16),
            a in 0.0f64..10.0,
            upper in any::<bool>(),
        ) {
            let g = Partition::<f64>::geometric(2f64.powi(-8), 256.0, 1).unwrap();
            prop_assert_eq!(g.n_cells(), 17);
            let mut v = vec![0.0];
            v.extend(vals.iter().copied());
            let mut w = v.clone();
            for (x, b) in w.iter_mut().skip(1).zip(&bump) {
                *x += b;
            }
            let f = StepFunction::new(g.clone(), v).unwrap();
            let h = StepFunction::new(g.clone(), w).unwrap();
            let spec = if upper {
                HardySpec::upper(c(2.0), c(2.0), c(0.3), c(0.1))
            } else {
                HardySpec::lower(c(2.0), c(2.0), c(0.3), c(0.1))
            };
            let op = HardyOperator::new(&spec, &g).unwrap();
            let hf = op.apply(&f).unwrap();
            let hh = op.apply(&h).unwrap();
            for (x, y) in hf.values().iter().zip(hh.values()) {
                prop_assert!(*x <= *y * (1.0 + 1e-12));
            }
            let haf = op.apply(&f.scale(a)).unwrap();
            for (x, y) in haf.values().iter().zip(hf.values()) {
                prop_assert!((x - a * y).abs() <= 1e-12 * (a * y).abs().max(1e-300));
            }
        }
    }
}
