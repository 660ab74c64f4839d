//! Partitions, step functions, non-increasing rearrangements and maximal
//! averages.
//!
//! Everything downstream works with piecewise-constant functions. Their
//! rearrangements are computed exactly by sorting `(|value|, width)` pairs,
//! which is what makes the rearrangement layer usable as an oracle.

use std::io::{Read, Write};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::{exact_sum, from_usize, lit, pow2, ExactSum, Real};

/// How a partition was laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    /// Logarithmic cells towards `0` and towards the truncation end.
    GeometricTwoSided,
    Uniform,
    General,
}

/// Strictly increasing breakpoints of a 1-D domain.
///
/// Partitions of the rearrangement variable start at `0`; partitions of a
/// spatial domain may start anywhere.
#[derive(Debug, Clone)]
pub struct Partition<T> {
    breakpoints: Arc<Vec<T>>,
    style: Style,
}

impl<T: Real> PartialEq for Partition<T> {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.breakpoints, &other.breakpoints) || self.breakpoints == other.breakpoints
    }
}

impl<T: Real> Partition<T> {
    pub fn new(breakpoints: Vec<T>) -> Result<Self> {
        Self::with_style(breakpoints, Style::General)
    }

    fn with_style(breakpoints: Vec<T>, style: Style) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::Invalid("a partition needs at least one cell".into()));
        }
        if breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(Error::Invalid("breakpoints must be finite".into()));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Invalid("breakpoints must be strictly increasing".into()));
        }
        Ok(Self {
            breakpoints: Arc::new(breakpoints),
            style,
        })
    }

    /// `n` equal cells on `[a, b]`.
    pub fn uniform(a: T, b: T, n: usize) -> Result<Self> {
        if n == 0 || !(b > a) {
            return Err(Error::Invalid(format!("bad uniform partition [{a}, {b}] / {n}")));
        }
        let h = (b - a) / from_usize(n);
        let mut bps: Vec<T> = (0..n).map(|i| a + h * from_usize(i)).collect();
        bps.push(b);
        Self::with_style(bps, Style::Uniform)
    }

    /// `0`, a uniform band on `[0, t_min]`, then `per_octave` geometric cells
    /// per doubling up to `t_max`.
    ///
    /// The band has as many cells as needed to keep neighbouring widths
    /// within a factor 4. When `t_max / t_min` is a power of two and
    /// `per_octave = 1` every breakpoint is an exact power of two times
    /// `t_min`.
    pub fn geometric(t_min: T, t_max: T, per_octave: usize) -> Result<Self> {
        if !(t_min > T::zero()) || !(t_max > t_min) || per_octave == 0 {
            return Err(Error::Invalid(format!(
                "bad geometric partition ({t_min}, {t_max}) x {per_octave}"
            )));
        }
        let m = from_usize::<T>(per_octave);
        let octaves = (t_max / t_min).log2();
        let n = (octaves * m - lit(1e-9)).ceil().to_usize().unwrap_or(1).max(1);
        let ratio = lit::<T>(2.0).powf(m.recip());
        let band = (T::one() / (ratio - T::one()))
            .round()
            .to_usize()
            .unwrap_or(1)
            .max(1);
        let mut bps = Vec::with_capacity(n + band + 1);
        for i in 0..band {
            bps.push(t_min * from_usize(i) / from_usize(band));
        }
        for k in 0..n {
            let whole = (k / per_octave) as i32;
            let frac = from_usize::<T>(k % per_octave) / m;
            bps.push(t_min * pow2::<T>(whole) * lit::<T>(2.0).powf(frac));
        }
        bps.push(t_max);
        if bps[bps.len() - 2] >= t_max {
            bps.remove(bps.len() - 2);
        }
        Self::with_style(bps, Style::GeometricTwoSided)
    }

    /// Default partition of the rearrangement variable on `(0, ℓ)`: one cell
    /// per octave from `2^-K` to `2^K` (or up to `ℓ` when finite), with
    /// `K = 500` in double precision.
    pub fn t_space(ell: T) -> Self {
        let k = default_depth::<T>();
        let p = if ell.is_finite() {
            Self::geometric(ell * pow2::<T>(-k), ell, 1)
        } else {
            Self::geometric(pow2::<T>(-k), pow2::<T>(k), 1)
        };
        p.expect("default partition is valid")
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    pub fn style(&self) -> Style {
        self.style
    }

    pub fn n_cells(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn start(&self) -> T {
        self.breakpoints[0]
    }

    /// Last breakpoint; stands in for `ℓ = ∞`.
    pub fn truncation(&self) -> T {
        self.breakpoints[self.breakpoints.len() - 1]
    }

    pub fn cell(&self, i: usize) -> (T, T) {
        (self.breakpoints[i], self.breakpoints[i + 1])
    }

    pub fn width(&self, i: usize) -> T {
        self.breakpoints[i + 1] - self.breakpoints[i]
    }

    pub fn widths(&self) -> Vec<T> {
        self.breakpoints.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn midpoints(&self) -> Vec<T> {
        self.breakpoints
            .windows(2)
            .map(|w| w[0] + (w[1] - w[0]) / lit(2.0))
            .collect()
    }

    /// Cell containing `t` (cells are closed on the left), or `None` outside.
    pub fn locate(&self, t: T) -> Option<usize> {
        let b = &self.breakpoints;
        if t < b[0] || t > b[b.len() - 1] {
            return None;
        }
        let k = b.partition_point(|&x| x <= t);
        Some(k.saturating_sub(1).min(self.n_cells() - 1))
    }

    /// Splits every cell into `factor` cells: uniformly when the cell touches
    /// `0` or the partition is uniform, geometrically otherwise. The result
    /// contains every original breakpoint.
    pub fn refine(&self, factor: usize) -> Self {
        if factor <= 1 {
            return self.clone();
        }
        let f = from_usize::<T>(factor);
        let mut out = Vec::with_capacity(self.n_cells() * factor + 1);
        for w in self.breakpoints.windows(2) {
            let (a, b) = (w[0], w[1]);
            out.push(a);
            let geometric = a > T::zero() && self.style != Style::Uniform;
            for i in 1..factor {
                let s = from_usize::<T>(i) / f;
                let x = if geometric {
                    a * (b / a).powf(s)
                } else {
                    a + (b - a) * s
                };
                if x > *out.last().unwrap() && x < b {
                    out.push(x);
                }
            }
        }
        out.push(self.truncation());
        Self::with_style(out, self.style).expect("refinement keeps breakpoints increasing")
    }

    /// Appends octave cells until the partition reaches `end`.
    pub fn extend_to(&self, end: T) -> Self {
        let last = self.truncation();
        if !(end > last) {
            return self.clone();
        }
        let mut bps: Vec<T> = self.breakpoints.to_vec();
        let mut x = if last > T::zero() { last } else { end };
        while x * lit(2.0) < end {
            x = x * lit(2.0);
            bps.push(x);
        }
        bps.push(end);
        Self::with_style(bps, self.style).expect("extension keeps breakpoints increasing")
    }
}

/// `K` for the default partitions: `2^-K .. 2^K`.
pub fn default_depth<T: Real>() -> i32 {
    500.min(T::safe_binary_depth() * 5 / 6)
}

/// A piecewise-constant function on a partition.
#[derive(Debug, Clone)]
pub struct StepFunction<T> {
    partition: Partition<T>,
    values: Vec<T>,
}

impl<T: Real> PartialEq for StepFunction<T> {
    fn eq(&self, other: &Self) -> bool {
        self.partition == other.partition && self.values == other.values
    }
}

impl<T: Real> StepFunction<T> {
    pub fn new(partition: Partition<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != partition.n_cells() {
            return Err(Error::Invalid(format!(
                "{} values for {} cells",
                values.len(),
                partition.n_cells()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("step function values must be finite".into()));
        }
        Ok(Self { partition, values })
    }

    pub fn zero(partition: Partition<T>) -> Self {
        let n = partition.n_cells();
        Self {
            partition,
            values: vec![T::zero(); n],
        }
    }

    pub fn constant(partition: Partition<T>, c: T) -> Self {
        let n = partition.n_cells();
        Self {
            partition,
            values: vec![c; n],
        }
    }

    /// Values from a function of each cell's endpoints.
    pub fn from_cells(partition: Partition<T>, f: impl Fn(T, T) -> T) -> Result<Self> {
        let values = partition.breakpoints().windows(2).map(|w| f(w[0], w[1])).collect();
        Self::new(partition, values)
    }

    /// `1` on cells whose midpoint lies in `[lo, hi]`, `0` elsewhere.
    pub fn indicator(partition: Partition<T>, lo: T, hi: T) -> Self {
        let values = partition
            .midpoints()
            .into_iter()
            .map(|m| if m >= lo && m <= hi { T::one() } else { T::zero() })
            .collect();
        Self { partition, values }
    }

    pub fn partition(&self) -> &Partition<T> {
        &self.partition
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn n_cells(&self) -> usize {
        self.values.len()
    }

    /// Value at `t`; zero outside the partition.
    pub fn value_at(&self, t: T) -> T {
        self.partition
            .locate(t)
            .map_or(T::zero(), |k| self.values[k])
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            partition: self.partition.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn abs(&self) -> Self {
        self.map(|v| v.abs())
    }

    pub fn scale(&self, c: T) -> Self {
        self.map(|v| v * c)
    }

    /// Cellwise combination of two functions on the same partition.
    pub fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        if self.partition != other.partition {
            return Err(Error::Invalid("step functions live on different partitions".into()));
        }
        Ok(Self {
            partition: self.partition.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == T::zero())
    }

    /// `∫ f`.
    pub fn integral(&self) -> T {
        let terms: Vec<T> = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| v * self.partition.width(i))
            .collect();
        crate::scalar::pairwise_sum(&terms)
    }

    /// `∫ |f|^r`.
    pub fn integral_abs_pow(&self, r: T) -> T {
        let terms: Vec<T> = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| v.abs().powf(r) * self.partition.width(i))
            .collect();
        crate::scalar::pairwise_sum(&terms)
    }

    pub fn sup_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// `μ{|f| > s}`: total width of the cells where `|f| > s`, correctly rounded.
pub fn distribution<T: Real>(f: &StepFunction<T>, s: T) -> T {
    exact_sum(
        f.values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs() > s)
            .map(|(i, _)| f.partition.width(i)),
    )
}

/// A non-increasing rearrangement `f*`.
///
/// Besides the step function on `[0, |Ω|]` it keeps the sorted source
/// `(value, width)` pairs, so that its distribution function is computed from
/// exactly the same widths as the source's.
#[derive(Debug, Clone)]
pub struct Rearranged<T> {
    step: StepFunction<T>,
    sorted: Vec<(T, T)>,
}

impl<T: Real> Rearranged<T> {
    pub fn as_step(&self) -> &StepFunction<T> {
        &self.step
    }

    pub fn into_step(self) -> StepFunction<T> {
        self.step
    }

    pub fn values(&self) -> &[T] {
        self.step.values()
    }

    pub fn partition(&self) -> &Partition<T> {
        self.step.partition()
    }

    /// `μ{f* > s}`.
    pub fn distribution(&self, s: T) -> T {
        let k = self.sorted.partition_point(|&(v, _)| v > s);
        exact_sum(self.sorted[..k].iter().map(|&(_, w)| w))
    }

    /// Total mass `∫ f*`.
    pub fn mass(&self) -> T {
        exact_sum(self.sorted.iter().map(|&(v, w)| v * w))
    }

    /// `f*(t)`, right-continuous; zero from the measure of the support on.
    pub fn value_at(&self, t: T) -> T {
        if t >= self.step.partition().truncation() {
            return T::zero();
        }
        self.step.value_at(t)
    }

    /// Cumulative integrals `∫_0^{τ_k} f*` at every breakpoint `τ_k`.
    pub fn cumulative(&self) -> Vec<T> {
        let bps = self.step.partition().breakpoints();
        let mut acc = ExactSum::new();
        let mut out = Vec::with_capacity(bps.len());
        out.push(T::zero());
        for (k, &v) in self.step.values().iter().enumerate() {
            acc.add(v * (bps[k + 1] - bps[k]));
            out.push(acc.value());
        }
        out
    }

    /// `f**(t) = (1/t)∫_0^t f*`, exact for every `t >= 0`; `f**(0) = f*(0+)`.
    pub fn double_star_at(&self, t: T) -> T {
        let vals = self.step.values();
        if vals.is_empty() {
            return T::zero();
        }
        if t <= T::zero() {
            return vals[0];
        }
        let bps = self.step.partition().breakpoints();
        let cum = self.cumulative();
        match self.step.partition().locate(t) {
            Some(k) => (cum[k] + vals[k] * (t - bps[k])) / t,
            None => cum[cum.len() - 1] / t,
        }
    }
}

/// Sorts `(|value|, width)` pairs in decreasing order of value and lays them
/// out from `0`. Cells of zero value end up at the end, so `f*` vanishes past
/// the measure of the support.
pub fn rearrange<T: Real>(f: &StepFunction<T>) -> Rearranged<T> {
    let widths = f.partition.widths();
    let mut sorted: Vec<(T, T)> = f
        .values
        .iter()
        .zip(&widths)
        .map(|(&v, &w)| (v.abs(), w))
        .collect();
    sorted.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));

    let mut bps = Vec::with_capacity(sorted.len() + 1);
    let mut vals = Vec::with_capacity(sorted.len());
    bps.push(T::zero());
    let mut acc = ExactSum::new();
    for &(v, w) in &sorted {
        acc.add(w);
        let end = acc.value();
        if end > *bps.last().unwrap() {
            bps.push(end);
            vals.push(v);
        }
        // A width below the rounding of the running total adds no cell.
    }
    let partition = Partition::with_style(bps, f.partition.style).expect("cumulative widths increase");
    Rearranged {
        step: StepFunction {
            partition,
            values: vals,
        },
        sorted,
    }
}

/// `f**` on the cells of `f*`, evaluated at each cell's right endpoint.
pub fn double_star<T: Real>(fstar: &Rearranged<T>) -> StepFunction<T> {
    let bps = fstar.partition().breakpoints();
    let cum = fstar.cumulative();
    let values = (1..bps.len()).map(|k| cum[k] / bps[k]).collect();
    StepFunction {
        partition: fstar.partition().clone(),
        values,
    }
}

/// Cell-average projection onto `target`; `∫ f` is preserved whenever the
/// target covers the support of `f`.
pub fn resample<T: Real>(f: &StepFunction<T>, target: &Partition<T>) -> StepFunction<T> {
    let src = f.partition.breakpoints();
    let dst = target.breakpoints();
    let mut values = Vec::with_capacity(target.n_cells());
    let mut i = 0usize;
    for k in 0..target.n_cells() {
        let (c, d) = (dst[k], dst[k + 1]);
        while i < f.n_cells() && src[i + 1] <= c {
            i += 1;
        }
        let mut terms = Vec::new();
        let mut j = i;
        while j < f.n_cells() && src[j] < d {
            let lo = src[j].max(c);
            let hi = src[j + 1].min(d);
            if hi > lo {
                terms.push(f.values[j] * (hi - lo));
            }
            j += 1;
        }
        values.push(crate::scalar::pairwise_sum(&terms) / (d - c));
    }
    StepFunction {
        partition: target.clone(),
        values,
    }
}

/// Writes `t_left,t_right,value` rows with a header, preceded by an optional
/// `#` comment line.
pub fn write_csv<T: Real, W: Write>(f: &StepFunction<T>, comment: Option<&str>, mut out: W) -> Result<()> {
    if let Some(c) = comment {
        writeln!(out, "# {c}")?;
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(["t_left", "t_right", "value"])?;
    for (k, v) in f.values.iter().enumerate() {
        let (a, b) = f.partition.cell(k);
        w.write_record([a.to_string(), b.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the format produced by [`write_csv`]. Cells must be contiguous.
pub fn read_csv<T: Real, R: Read>(input: R) -> Result<StepFunction<T>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut bps: Vec<T> = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(i + 2, |p| p.line() as usize);
        let parse = |j: usize| -> Result<T> {
            let s = rec.get(j).ok_or_else(|| Error::Parse {
                line,
                msg: "expected 3 columns".into(),
            })?;
            crate::exponent::parse_real(s)
                .map(lit)
                .map_err(|e| Error::Parse {
                    line,
                    msg: e.to_string(),
                })
        };
        let (a, b, v) = (parse(0)?, parse(1)?, parse(2)?);
        match bps.last() {
            None => bps.push(a),
            Some(&last) if last != a => {
                return Err(Error::Parse {
                    line,
                    msg: format!("cell starts at {a} but the previous one ended at {last}"),
                })
            }
            _ => {}
        }
        bps.push(b);
        values.push(v);
    }
    let partition = Partition::new(bps)?;
    StepFunction::new(partition, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn unit_cells(vals: &[f64]) -> StepFunction<f64> {
        let p = Partition::<f64>::uniform(0.0, vals.len() as f64, vals.len()).unwrap();
        StepFunction::new(p, vals.to_vec()).unwrap()
    }

    #[test]
    fn distribution_examples() {
        let p = Partition::<f64>::new(vec![0.0, 0.3, 0.5, 1.0]).unwrap();
        let f = StepFunction::new(p, vec![1.0, 0.0, 1.0]).unwrap();
        assert!((distribution(&f, 0.5) - 0.8).abs() < 1e-15);
        let g = StepFunction::new(Partition::<f64>::new(vec![0.0, 0.7]).unwrap(), vec![1.0]).unwrap();
        assert_eq!(distribution(&g, 0.5), 0.7);
        assert_eq!(distribution(&g, 1.0), 0.0);
        assert_eq!(distribution(&unit_cells(&[3.0, 1.0, 2.0]), 1.5), 2.0);
    }

    #[test]
    fn rearrange_sorts() {
        let r = rearrange(&unit_cells(&[3.0, 1.0, 2.0]));
        assert_eq!(r.values(), &[3.0, 2.0, 1.0]);
        assert_eq!(r.partition().breakpoints(), &[0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn rearrange_increasing_ramp() {
        let n = 1000;
        let p = Partition::<f64>::uniform(0.0, 1.0, n).unwrap();
        let f = StepFunction::<f64>::from_cells(p, |a, b| (a + b) / 2.0).unwrap();
        let r = rearrange(&f);
        let h = 1.0 / n as f64;
        for (k, &v) in r.values().iter().enumerate() {
            let (a, b) = r.partition().cell(k);
            assert!((v - (1.0 - a)).abs() <= h && (v - (1.0 - b)).abs() <= h);
        }
    }

    #[test]
    fn double_star_examples() {
        let r = rearrange(&StepFunction::new(Partition::<f64>::new(vec![0.0, 1.0]).unwrap(), vec![1.0]).unwrap());
        assert_eq!(r.double_star_at(2.0), 0.5);
        assert_eq!(r.double_star_at(0.5), 1.0);
        assert_eq!(r.double_star_at(1.0), 1.0);
        assert_eq!(r.double_star_at(0.0), 1.0);

        let n = 4096;
        let p = Partition::<f64>::uniform(0.0, 1.0, n).unwrap();
        let f = StepFunction::<f64>::from_cells(p, |a, b| 1.0 - (a + b) / 2.0).unwrap();
        let ds = double_star(&rearrange(&f));
        assert!((ds.values()[n - 1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn resample_examples() {
        let p = Partition::<f64>::geometric(1e-3, 1.0, 2).unwrap();
        let one = StepFunction::constant(p.clone(), 1.0);
        let target = Partition::<f64>::uniform(0.0, 1.0, 7).unwrap();
        for v in resample(&one, &target).values() {
            assert!((v - 1.0).abs() < 1e-14);
        }
        let f = unit_cells(&[3.0, -1.0, 2.0]);
        let fine = Partition::<f64>::uniform(0.0, 3.0, 6).unwrap();
        assert_eq!(resample(&f, &fine).values(), &[3.0, 3.0, -1.0, -1.0, 2.0, 2.0]);

        let mut g = SplitMix64::new(3);
        let q = Partition::<f64>::geometric(2f64.powi(-20), 2f64.powi(10), 1).unwrap();
        let vals = (0..q.n_cells()).map(|_| g.uniform(-1.0, 1.0)).collect();
        let h = StepFunction::new(q.clone(), vals).unwrap();
        let back = resample(&resample(&h, &q.refine(4)), &q);
        for (a, b) in h.values().iter().zip(back.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn geometric_partition_shape() {
        for m in 1..=6 {
            let p = Partition::<f64>::geometric(2f64.powi(-30), 2f64.powi(20), m).unwrap();
            assert_eq!(p.start(), 0.0);
            assert_eq!(p.truncation(), 2f64.powi(20));
            let w = p.widths();
            for pair in w.windows(2) {
                let r = pair[1] / pair[0];
                assert!((0.25..=4.0).contains(&r), "m={m} ratio {r}");
            }
            let fine = p.refine(4);
            let w = fine.widths();
            for pair in w.windows(2) {
                let r = pair[1] / pair[0];
                assert!((0.25..=4.0).contains(&r), "refined m={m} ratio {r}");
            }
            for b in p.breakpoints() {
                assert!(fine.breakpoints().contains(b));
            }
        }
        let d = Partition::<f64>::t_space(f64::INFINITY);
        assert_eq!(d.n_cells(), 1001);
        assert!(d.breakpoints()[1..].iter().all(|b| b.log2().fract() == 0.0));
    }

    #[test]
    fn csv_round_trip() {
        let f = unit_cells(&[0.1, -2.5e-300, 7.0]);
        let mut buf = Vec::new();
        write_csv(&f, Some("lorentzx=test"), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# lorentzx=test\nt_left,t_right,value\n"));
        assert!(!text.contains('\r'));
        let g: StepFunction<f64> = read_csv(&buf[..]).unwrap();
        assert_eq!(f, g);
        let bad = "t_left,t_right,value\n0,1,2\n1.5,2,3\n";
        assert!(matches!(read_csv::<f64, _>(bad.as_bytes()), Err(Error::Parse { line: 3, .. })));
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn step() -> impl Strategy<Value = StepFunction<f64>> {
        prop::collection::vec((1u32..64, -5.0f64..5.0), 1..40).prop_map(|cells| {
            let mut bps = vec![0.0f64];
            let mut vals: Vec<f64> = Vec::new();
            for (w, v) in cells {
                let last = *bps.last().unwrap();
                bps.push(last + w as f64 / 64.0);
                vals.push(if v.abs() < 1.0 { 0.0 } else { v.round() / 2.0 });
            }
            StepFunction::new(Partition::<f64>::new(bps).unwrap(), vals).unwrap()
        })
    }

    fn pair() -> impl Strategy<Value = (StepFunction<f64>, StepFunction<f64>)> {
        (1usize..40).prop_flat_map(|n| {
            (
                prop::collection::vec(1u32..64, n),
                prop::collection::vec(-5.0f64..5.0, n),
                prop::collection::vec(-5.0f64..5.0, n),
            )
                .prop_map(|(ws, a, b)| {
                    let mut bps = vec![0.0f64];
                    for w in ws {
                        let last = *bps.last().unwrap();
                        bps.push(last + w as f64 / 64.0);
                    }
                    let p = Partition::<f64>::new(bps).unwrap();
                    (
                        StepFunction::new(p.clone(), a).unwrap(),
                        StepFunction::new(p, b).unwrap(),
                    )
                })
        })
    }

    proptest! {
        #[test]
        fn rearrangement_is_nonincreasing(f in step()) {
            let r = rearrange(&f);
            prop_assert!(r.values().windows(2).all(|w| w[0] >= w[1]));
        }

        #[test]
        fn equimeasurable(f in step(), s in 0.0f64..3.0) {
            let r = rearrange(&f);
            prop_assert_eq!(distribution(&f, s), r.distribution(s));
            prop_assert_eq!(distribution(&f, s), distribution(r.as_step(), s));
            let want = f.integral_abs_pow(2.0);
            prop_assert!((r.as_step().integral_abs_pow(2.0) - want).abs() <= 1e-10 * want.max(1e-300));
        }

        #[test]
        fn double_star_is_subadditive((f, g) in pair()) {
            let sum = f.add(&g).unwrap();
            let (rf, rg, rs) = (rearrange(&f), rearrange(&g), rearrange(&sum));
            for &t in rs.partition().breakpoints().iter().chain(rf.partition().breakpoints()) {
                let lhs = rs.double_star_at(t);
                let rhs = rf.double_star_at(t) + rg.double_star_at(t);
                prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-12);
            }
        }

        #[test]
        fn rearrangement_is_monotone((f, g) in pair()) {
            // f_n = min(|f|, |g|) <= |g| pointwise, so f_n* <= g* everywhere.
            let small = f.zip_with(&g, |a, b| a.abs().min(b.abs())).unwrap();
            let (rs, rg) = (rearrange(&small), rearrange(&g));
            for &t in rs.partition().breakpoints().iter().chain(rg.partition().breakpoints()) {
                prop_assert!(rs.value_at(t) <= rg.value_at(t));
            }
        }

        #[test]
        fn rearrangement_is_idempotent(f in step()) {
            let r = rearrange(&f);
            let rr = rearrange(r.as_step());
            prop_assert_eq!(r.values(), rr.values());
            prop_assert_eq!(r.partition().breakpoints(), rr.partition().breakpoints());
        }

        #[test]
        fn star_dominated_by_double_star(f in step()) {
            let r = rearrange(&f);
            let ds = double_star(&r);
            for (a, b) in r.values().iter().zip(ds.values()) {
                prop_assert!(*a <= *b * (1.0 + 1e-12));
            }
        }
    }
}
