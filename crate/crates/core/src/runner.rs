//! Executes configured experiments and writes their CSV reports.
//!
//! Every CSV starts with a `# lorentzx=<version> config=<hash>` line followed
//! by a header row. Files are named `<name>.<report>.csv` and go to the
//! directory in `LORENTZX_OUT`, else the config's `[experiment] output`,
//! else the working directory.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::config::{Check, Expectation, ExperimentConfig, Kind, OperatorName, RawConfig};
use crate::ergodic::{
    distribution_check, ergodic_boundedness_experiment, ergodic_maximal_star_check, lambda_grid,
    star_bound_check, ArcSet, FlowKind, FlowSpec,
};
use crate::error::{Error, Result};
use crate::grid::{double_star, read_csv, rearrange, Partition, StepFunction};
use crate::hardy::{estimate_operator_norm, hardy_conditions, HardySpec};
use crate::norms::{lorentz_norm, norm_equivalence_experiment, NormSpec};
use crate::operators::{boundedness_experiment, rearrangement_bound_protocol, BoundKind, OperatorKind};
use crate::protocol::{random_member, BoundednessReport, End, Verdict};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const OUT_ENV: &str = "LORENTZX_OUT";

/// One CSV report.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub suffix: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(suffix: &str, header: &[&str]) -> Self {
        Self {
            suffix: suffix.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

/// What one experiment produced, before anything is written.
#[derive(Debug, Clone)]
pub struct Report {
    pub name: String,
    pub kind: Kind,
    /// `bounded`, `blow-up`, `inconclusive`, `holds` or `fails`.
    pub observed: String,
    pub sup_ratio: Option<f64>,
    pub expected: Option<Expectation>,
    pub tables: Vec<Table>,
    pub summary: Vec<(String, String)>,
}

impl Report {
    pub fn matched(&self) -> Option<bool> {
        self.expected.map(|e| e.name() == self.observed)
    }
}

/// Files written for a run and whether it met its expectation.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub observed: String,
    pub expected: Option<String>,
    pub matched: Option<bool>,
    pub summary: Vec<(String, String)>,
}

impl Outcome {
    /// `0` when the expectation is met or absent, `1` otherwise.
    pub fn exit_code(&self) -> i32 {
        match self.matched {
            Some(false) => 1,
            _ => 0,
        }
    }
}

fn fmt(x: f64) -> String {
    x.to_string()
}

fn yes_no(b: bool) -> String {
    if b { "yes" } else { "no" }.to_string()
}

fn verdict_observed(v: Verdict) -> String {
    v.name().to_string()
}

fn holds_observed(ok: bool) -> String {
    if ok { "holds" } else { "fails" }.to_string()
}

fn base_grid(cfg: &ExperimentConfig) -> Result<Option<Partition<f64>>> {
    let g = &cfg.grid;
    if g.cells.is_none() && g.t_min.is_none() && g.truncation.is_none() {
        return Ok(None);
    }
    let t_max = if g.ell.is_finite() {
        g.ell
    } else {
        g.truncation.unwrap_or(2f64.powi(500))
    };
    let t_min = g.t_min.unwrap_or(t_max * 2f64.powi(-1000)).max(2f64.powi(-1000));
    let octaves = (t_max / t_min).log2().max(1.0);
    let per_octave = g
        .cells
        .map_or(1, |n| ((n as f64 / octaves).round() as usize).max(1));
    Partition::geometric(t_min, t_max, per_octave).map(Some)
}

fn norm_spec(cfg: &ExperimentConfig) -> NormSpec<f64> {
    let e = &cfg.exponents;
    let mut spec = NormSpec::new(e.p.clone(), e.q.clone()).star(e.star);
    if let Some(g) = &e.gamma {
        spec = spec.with_gamma(g.clone());
    }
    spec
}

fn read_function(path: &Path) -> Result<StepFunction<f64>> {
    let file = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_csv(file)
}

fn protocol_tables(r: &BoundednessReport<f64>, summary: &mut Vec<(String, String)>) -> Vec<Table> {
    let mut ratios = Table::new("ratios", &["member", "ratio"]);
    for (id, v) in &r.ratios {
        ratios.push(vec![id.clone(), fmt(*v)]);
    }
    for (id, v) in &r.extension_ratios {
        ratios.push(vec![format!("extension:{id}"), fmt(*v)]);
    }
    let mut refinement = Table::new("refinement", &["cells", "sup_ratio"]);
    for (n, v) in &r.refinement_curve {
        refinement.push(vec![n.to_string(), fmt(*v)]);
    }
    let mut ladder = Table::new("ladder", &["end", "eps", "ratio"]);
    for p in &r.family_curve {
        let end = match p.end {
            End::Zero => "zero",
            End::Infinity => "infinity",
        };
        ladder.push(vec![end.to_string(), fmt(p.eps), fmt(p.ratio)]);
    }
    let mut truncation = Table::new("truncation", &["truncation", "sup_ratio"]);
    for (t, v) in &r.truncation_curve {
        truncation.push(vec![fmt(*t), fmt(*v)]);
    }
    summary.push(("sup_ratio".into(), fmt(r.sup_ratio)));
    summary.push(("extension_sup".into(), fmt(r.extension_sup)));
    summary.push(("reason".into(), r.reason.clone()));
    vec![ratios, refinement, ladder, truncation]
}

fn boundedness(
    cfg: &ExperimentConfig,
    r: BoundednessReport<f64>,
    mut summary: Vec<(String, String)>,
) -> Report {
    let tables = protocol_tables(&r, &mut summary);
    Report {
        name: cfg.name.clone(),
        kind: cfg.kind,
        observed: verdict_observed(r.verdict),
        sup_ratio: Some(r.sup_ratio),
        expected: cfg.expected,
        tables,
        summary,
    }
}

fn seeded_functions(cfg: &ExperimentConfig, grid: &Partition<f64>, ell: f64) -> Vec<(u64, StepFunction<f64>)> {
    let mut g = crate::rng::SplitMix64::new(cfg.family.seed);
    (0..cfg.family.random.max(1))
        .map(|_| {
            let seed = g.next_u64();
            (seed, random_member(grid, ell, seed))
        })
        .collect()
}

fn execute_op(cfg: &ExperimentConfig, grid: Option<&Partition<f64>>) -> Result<Report> {
    let spec = norm_spec(cfg);
    let name = cfg.operator.name.expect("validated");
    let order = cfg.operator.order.unwrap_or(0.0);
    let kernel = match &cfg.operator.kernel {
        Some(p) => Some(read_function(p)?),
        None => None,
    };
    let mut summary = vec![("operator".to_string(), format!("{name:?}").to_lowercase())];
    if cfg.operator.check == Check::Rearrangement {
        let bound = match name {
            OperatorName::Maximal => BoundKind::Maximal,
            OperatorName::Riesz => BoundKind::Riesz(order),
            OperatorName::Hilbert => BoundKind::Singular,
            OperatorName::Convolution => BoundKind::Convolution(kernel.expect("validated")),
            other => {
                return Err(Error::Invalid(format!(
                    "no rearrangement estimate is implemented for {other:?}"
                )))
            }
        };
        let grid = match grid {
            Some(g) => g.clone(),
            None => Partition::geometric(2f64.powi(-16), 2f64.powi(16), 8)?,
        };
        let mut table = Table::new("rearrangement", &["seed", "measured_constant", "refined_constant", "holds"]);
        let mut all = true;
        let mut worst: f64 = 0.0;
        for (seed, f) in seeded_functions(cfg, &grid, cfg.grid.ell) {
            let r = rearrangement_bound_protocol(&f, &bound, cfg.protocol.refine_factor, 1)?;
            all &= r.holds;
            worst = worst.max(r.measured_constant);
            let last = r.refinement_curve.last().map_or(f64::NAN, |c| c.1);
            table.push(vec![seed.to_string(), fmt(r.refinement_curve[0].1), fmt(last), yes_no(r.holds)]);
        }
        summary.push(("bound".into(), bound.name().to_string()));
        summary.push(("max_constant".into(), fmt(worst)));
        return Ok(Report {
            name: cfg.name.clone(),
            kind: cfg.kind,
            observed: holds_observed(all),
            sup_ratio: Some(worst),
            expected: cfg.expected,
            tables: vec![table],
            summary,
        });
    }
    if name == OperatorName::NormEquivalence {
        let r = norm_equivalence_experiment(&spec, &cfg.family, &cfg.protocol, grid)?;
        return Ok(boundedness(cfg, r, summary));
    }
    let kind = match name {
        OperatorName::Maximal => OperatorKind::Maximal,
        OperatorName::FractionalMaximal => OperatorKind::FractionalMaximal(order),
        OperatorName::Riesz => OperatorKind::Riesz(order),
        OperatorName::Hilbert => OperatorKind::Hilbert,
        OperatorName::Poisson => OperatorKind::PoissonSup,
        OperatorName::Convolution => OperatorKind::Convolution(kernel.expect("validated")),
        OperatorName::NormEquivalence => unreachable!("handled above"),
    };
    let (r, conditions) = boundedness_experiment(&kind, &spec, &cfg.family, &cfg.protocol, grid)?;
    summary.push(("conditions_hold".into(), yes_no(conditions.all())));
    Ok(boundedness(cfg, r, summary))
}

fn execute_ergodic(cfg: &ExperimentConfig, grid: Option<&Partition<f64>>) -> Result<Report> {
    let kind = cfg.operator.flow.expect("validated");
    let flow = match kind {
        FlowKind::Rotation => FlowSpec::rotation(),
        FlowKind::Translation => FlowSpec::translation(),
    };
    let mut summary = vec![("flow".to_string(), kind.name().to_string())];
    let done = |observed: bool, tables: Vec<Table>, summary: Vec<(String, String)>| Report {
        name: cfg.name.clone(),
        kind: cfg.kind,
        observed: holds_observed(observed),
        sup_ratio: None,
        expected: cfg.expected,
        tables,
        summary,
    };
    match cfg.operator.check {
        Check::Boundedness => {
            let op = cfg.operator.ergodic.expect("validated");
            summary.push(("operator".into(), op.name().to_string()));
            let r = ergodic_boundedness_experiment(op, &flow, &norm_spec(cfg), &cfg.family, &cfg.protocol, grid)?;
            Ok(boundedness(cfg, r, summary))
        }
        Check::Distribution => {
            let e = ArcSet::new(cfg.operator.arcs.clone(), &flow)?;
            let r = distribution_check(&e, &flow, &lambda_grid(), cfg.operator.points)?;
            let mut t = Table::new("distribution", &["lambda", "empirical", "formula", "abs_error"]);
            for (l, a, b, d) in &r.rows {
                t.push(vec![fmt(*l), fmt(*a), fmt(*b), fmt(*d)]);
            }
            summary.push(("measure".into(), fmt(e.measure())));
            summary.push(("sup_error".into(), fmt(r.sup_error)));
            summary.push(("tolerance".into(), fmt(cfg.operator.tolerance)));
            Ok(done(r.sup_error <= cfg.operator.tolerance, vec![t], summary))
        }
        Check::StarBound => {
            let e = ArcSet::new(cfg.operator.arcs.clone(), &flow)?;
            let r = star_bound_check(&e, &flow, cfg.operator.points)?;
            let mut t = Table::new("star_bound", &["t", "h_star", "bound", "ratio"]);
            for (x, h, b) in &r.rows {
                t.push(vec![fmt(*x), fmt(*h), fmt(*b), fmt(h / b)]);
            }
            let mut id = Table::new("identity", &["t", "sorted_samples", "inverse_formula"]);
            for (x, a, b) in &r.identity_rows {
                id.push(vec![fmt(*x), fmt(*a), fmt(*b)]);
            }
            summary.push(("measure".into(), fmt(e.measure())));
            summary.push(("max_ratio".into(), fmt(r.max_ratio)));
            summary.push(("identity_error".into(), fmt(r.identity_error)));
            Ok(done(r.holds, vec![t, id], summary))
        }
        Check::MaximalStar => {
            let grid = match (grid, kind) {
                (Some(g), _) => g.clone(),
                (None, FlowKind::Rotation) => Partition::uniform(0.0, 1.0, 64)?,
                (None, FlowKind::Translation) => Partition::geometric(2f64.powi(-16), 2f64.powi(16), 2)?,
            };
            let mut t = Table::new("maximal_star", &["seed", "measured_constant", "holds"]);
            let mut all = true;
            for (seed, f) in seeded_functions(cfg, &grid, flow.total_mass()) {
                let r = ergodic_maximal_star_check(&f, &flow)?;
                all &= r.holds;
                t.push(vec![seed.to_string(), fmt(r.measured_constant), yes_no(r.holds)]);
            }
            Ok(done(all, vec![t], summary))
        }
        Check::Rearrangement => unreachable!("rejected by validation"),
    }
}

/// Runs one marker-free experiment.
pub fn execute(cfg: &ExperimentConfig) -> Result<Report> {
    let grid = base_grid(cfg)?;
    let grid = grid.as_ref();
    match cfg.kind {
        Kind::Norm => {
            let f = read_function(cfg.input.as_ref().expect("validated"))?;
            let v = lorentz_norm(&f, &norm_spec(cfg))?;
            let summary = vec![
                ("norm".to_string(), fmt(v)),
                ("star".to_string(), yes_no(cfg.exponents.star)),
            ];
            Ok(Report {
                name: cfg.name.clone(),
                kind: cfg.kind,
                observed: holds_observed(v.is_finite()),
                sup_ratio: None,
                expected: cfg.expected,
                tables: Vec::new(),
                summary,
            })
        }
        Kind::Rearrange => {
            let f = read_function(cfg.input.as_ref().expect("validated"))?;
            let fs = rearrange(&f);
            let fss = double_star(&fs);
            let mut t = Table::new("rearranged", &["t_left", "t_right", "f_star", "f_double_star"]);
            for (k, (a, b)) in fs.values().iter().zip(fss.values()).enumerate() {
                let (l, r) = fs.partition().cell(k);
                t.push(vec![fmt(l), fmt(r), fmt(*a), fmt(*b)]);
            }
            let summary = vec![("mass".to_string(), fmt(fs.mass()))];
            Ok(Report {
                name: cfg.name.clone(),
                kind: cfg.kind,
                observed: holds_observed(true),
                sup_ratio: None,
                expected: cfg.expected,
                tables: vec![t],
                summary,
            })
        }
        Kind::HardyVerify => {
            let e = &cfg.exponents;
            let spec = HardySpec {
                p: e.p.clone(),
                q: e.q.clone(),
                alpha: e.alpha.clone(),
                beta: e.beta.clone(),
                nu: e.nu.clone(),
                direction: cfg.operator.direction,
            };
            let r = estimate_operator_norm(&spec, &cfg.family, &cfg.protocol, grid)?;
            let summary = vec![
                ("direction".to_string(), spec.direction.name().to_string()),
                ("conditions_hold".to_string(), yes_no(hardy_conditions(&spec).holds(spec.direction))),
            ];
            Ok(boundedness(cfg, r, summary))
        }
        Kind::OpVerify => execute_op(cfg, grid),
        Kind::ErgodicVerify => execute_ergodic(cfg, grid),
        Kind::Sweep => Err(Error::Invalid("sweep configs run through the sweep command".into())),
    }
}

/// `LORENTZX_OUT`, else the configured output directory, else `.`.
pub fn output_dir(configured: Option<&Path>) -> PathBuf {
    match std::env::var_os(OUT_ENV) {
        Some(d) if !d.is_empty() => PathBuf::from(d),
        _ => configured.map_or_else(|| PathBuf::from("."), Path::to_path_buf),
    }
}

fn write_table(dir: &Path, name: &str, hash: &str, table: &Table) -> Result<PathBuf> {
    let path = dir.join(format!("{name}.{}.csv", table.suffix));
    let file = File::create(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "# lorentzx={VERSION} config={hash}")?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(path)
}

fn summary_table(report: &Report, hash: &str) -> Table {
    let mut t = Table::new("summary", &["key", "value"]);
    t.push(vec!["kind".into(), report.kind.name().into()]);
    t.push(vec!["name".into(), report.name.clone()]);
    t.push(vec!["config".into(), hash.into()]);
    t.push(vec!["observed".into(), report.observed.clone()]);
    let expected = report.expected.map_or("-".to_string(), |e| e.name().to_string());
    t.push(vec!["expected".into(), expected]);
    let matched = report.matched().map_or("-".to_string(), yes_no);
    t.push(vec!["match".into(), matched]);
    for (k, v) in &report.summary {
        t.push(vec![k.clone(), v.clone()]);
    }
    t
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))
}

/// Runs `cfg` and writes its reports into `dir`.
pub fn run(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let report = execute(cfg)?;
    create_dir(dir)?;
    let mut files = Vec::new();
    for t in &report.tables {
        files.push(write_table(dir, &cfg.name, &cfg.hash, t)?);
    }
    let summary = summary_table(&report, &cfg.hash);
    files.push(write_table(dir, &cfg.name, &cfg.hash, &summary)?);
    Ok(Outcome {
        files,
        observed: report.observed.clone(),
        expected: report.expected.map(|e| e.name().to_string()),
        matched: report.matched(),
        summary: summary.rows.into_iter().map(|r| (r[0].clone(), r[1].clone())).collect(),
    })
}

/// What a sweep is expected to show.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepExpectation {
    /// The same outcome at every point.
    All(String),
    /// One outcome per point.
    Each(Vec<String>),
    /// `bounded` at the first point, `blow-up` at the last and a single
    /// change in between.
    Flip,
}

impl SweepExpectation {
    fn parse(text: &str, n: usize) -> Result<Self> {
        let check = |s: &str| -> Result<String> {
            s.parse::<Expectation>().map(|e| e.name().to_string())
        };
        if text.trim() == "flip" {
            return Ok(SweepExpectation::Flip);
        }
        let items: Vec<&str> = text.split(',').map(str::trim).collect();
        if items.len() == 1 {
            return Ok(SweepExpectation::All(check(items[0])?));
        }
        if items.len() != n {
            return Err(Error::Invalid(format!(
                "{} expectations for {n} sweep values",
                items.len()
            )));
        }
        Ok(SweepExpectation::Each(items.into_iter().map(check).collect::<Result<_>>()?))
    }

    fn matches(&self, observed: &[String]) -> bool {
        match self {
            SweepExpectation::All(e) => observed.iter().all(|o| o == e),
            SweepExpectation::Each(es) => es.iter().zip(observed).all(|(e, o)| e == o),
            SweepExpectation::Flip => {
                let changes = observed.windows(2).filter(|w| w[0] != w[1]).count();
                observed.first().map(String::as_str) == Some("bounded")
                    && observed.last().map(String::as_str) == Some("blow-up")
                    && changes == 1
            }
        }
    }
}

/// One row of a sweep.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: String,
    pub observed: String,
    pub sup_ratio: Option<f64>,
}

/// Runs every point of the single swept parameter in `raw` and writes the
/// sweep table and a summary into `dir` (`None` picks [`output_dir`]).
pub fn sweep(raw: &RawConfig, base_dir: &Path, default_name: &str, dir: Option<&Path>) -> Result<(Outcome, Vec<SweepPoint>)> {
    let spec = raw
        .sweep()?
        .ok_or_else(|| Error::Invalid("no swept parameter: mark one value as {v1, v2, …}".into()))?;
    let mut stripped = raw.clone();
    let expected_text = stripped
        .entries
        .iter()
        .position(|e| e.section == "experiment" && e.key == "expected")
        .map(|i| stripped.entries.remove(i).value);
    let expectation = match &expected_text {
        Some(t) => Some(SweepExpectation::parse(t, spec.values.len())?),
        None => None,
    };
    let mut points = Vec::with_capacity(spec.values.len());
    let mut first: Option<ExperimentConfig> = None;
    for (i, v) in spec.values.iter().enumerate() {
        let cfg = ExperimentConfig::from_raw(&stripped.instantiate(&spec, i), base_dir, default_name)?;
        let r = execute(&cfg)?;
        points.push(SweepPoint {
            value: v.clone(),
            observed: r.observed,
            sup_ratio: r.sup_ratio,
        });
        first.get_or_insert(cfg);
    }
    let cfg = first.expect("a sweep has at least one value");
    let dir = dir.map_or_else(|| output_dir(cfg.output.as_deref()), Path::to_path_buf);
    create_dir(&dir)?;
    let parameter = spec.parameter();
    let mut table = Table::new("sweep", &[parameter.as_str(), "sup_ratio", "observed"]);
    for p in &points {
        table.push(vec![
            p.value.clone(),
            p.sup_ratio.map_or("-".to_string(), fmt),
            p.observed.clone(),
        ]);
    }
    let observed: Vec<String> = points.iter().map(|p| p.observed.clone()).collect();
    let matched = expectation.as_ref().map(|e| e.matches(&observed));
    let mut summary = Table::new("summary", &["key", "value"]);
    summary.push(vec!["kind".into(), "sweep".into()]);
    summary.push(vec!["base".into(), cfg.kind.name().into()]);
    summary.push(vec!["name".into(), cfg.name.clone()]);
    summary.push(vec!["config".into(), raw.hash.clone()]);
    summary.push(vec!["parameter".into(), parameter.clone()]);
    summary.push(vec!["observed".into(), observed.join(" ")]);
    summary.push(vec!["expected".into(), expected_text.clone().unwrap_or_else(|| "-".into())]);
    summary.push(vec!["match".into(), matched.map_or("-".to_string(), yes_no)]);
    let files = vec![
        write_table(&dir, &cfg.name, &raw.hash, &table)?,
        write_table(&dir, &cfg.name, &raw.hash, &summary)?,
    ];
    let outcome = Outcome {
        files,
        observed: observed.join(" "),
        expected: expected_text,
        matched,
        summary: summary.rows.into_iter().map(|r| (r[0].clone(), r[1].clone())).collect(),
    };
    Ok((outcome, points))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_ini;

    #[test]
    fn sweep_expectations() {
        let obs = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let flip = SweepExpectation::parse("flip", 3).unwrap();
        assert!(flip.matches(&obs(&["bounded", "bounded", "blow-up"])));
        assert!(!flip.matches(&obs(&["bounded", "blow-up", "bounded"])));
        assert!(!flip.matches(&obs(&["blow-up", "blow-up", "blow-up"])));
        let each = SweepExpectation::parse("bounded, blow-up", 2).unwrap();
        assert!(each.matches(&obs(&["bounded", "blow-up"])));
        assert!(SweepExpectation::parse("bounded, blow-up", 3).is_err());
        assert!(SweepExpectation::parse("maybe", 3).is_err());
    }

    #[test]
    fn distribution_check_through_config() {
        let text = "[experiment]\nkind = ergodic-verify\nexpected = holds\n[exponents]\np = 2\n[operator]\nflow = translation\ncheck = distribution\narcs = (0, 1)\npoints = 20000\ntolerance = 0.02\n";
        let cfg = ExperimentConfig::from_raw(&parse_ini(text).unwrap(), Path::new("."), "d").unwrap();
        let r = execute(&cfg).unwrap();
        assert_eq!(r.observed, "holds");
        assert_eq!(r.matched(), Some(true));
        assert_eq!(r.tables[0].rows.len(), 64);
    }
}
