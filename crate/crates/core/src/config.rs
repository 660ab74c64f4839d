//! Experiment configuration: a flat, sectioned `key = value` text format.
//!
//! ```text
//! # classical Hardy inequality
//! [experiment]
//! kind = hardy-verify
//! expected = bounded
//!
//! [exponents]
//! p = 2
//! q = 2
//! alpha = 0
//! nu = 0
//! ```
//!
//! Lines starting with `#` or `;` are comments. Exactly one value may carry a
//! sweep list, written `{v1, v2, …}` or `{lo:hi:n}` (n evenly spaced values,
//! both ends included); the braces are replaced by each value in turn.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::ergodic::{ErgodicOperator, FlowKind};
use crate::error::{Error, Result};
use crate::exponent::{parse_real, ExponentFunction};
use crate::hardy::Direction;
use crate::protocol::{FamilySpec, ProtocolSettings, Verdict};

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub section: String,
    pub key: String,
    pub value: String,
    pub line: usize,
}

/// The parsed text, before interpretation.
#[derive(Debug, Clone)]
pub struct RawConfig {
    pub entries: Vec<Entry>,
    /// First 16 hex digits of the SHA-256 of the text (LF line endings).
    pub hash: String,
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("experiment", &["kind", "base", "name", "expected", "output"]),
    ("exponents", &["p", "q", "alpha", "beta", "nu", "gamma", "star"]),
    (
        "operator",
        &["direction", "name", "order", "kernel", "flow", "check", "arcs", "points", "tolerance"],
    ),
    ("input", &["f"]),
    ("grid", &["ell", "cells", "t_min", "truncation"]),
    ("family", &["size", "seed", "ladder", "extension", "extension_size", "indicators"]),
    ("protocol", &["flatness", "blowup_factor", "refinement"]),
];

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

pub fn config_hash(text: &str) -> String {
    let normalized = text.replace("\r\n", "\n");
    let digest = Sha256::digest(normalized.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Splits the text into entries, rejecting unknown sections and keys,
/// duplicates and lines that are neither headers nor assignments.
pub fn parse_ini(text: &str) -> Result<RawConfig> {
    let mut entries: Vec<Entry> = Vec::new();
    let mut section: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') || s.starts_with(';') {
            continue;
        }
        if let Some(name) = s.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| parse_err(line, "unterminated section header"))?
                .trim();
            if !SECTIONS.iter().any(|(n, _)| *n == name) {
                return Err(parse_err(line, format!("unknown section [{name}]")));
            }
            section = Some(name.to_string());
            continue;
        }
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| parse_err(line, format!("expected `key = value`, got `{s}`")))?;
        let sec = section
            .clone()
            .ok_or_else(|| parse_err(line, "assignment before any [section]"))?;
        let key = k.trim().to_string();
        let allowed = SECTIONS.iter().find(|(n, _)| *n == sec).map(|x| x.1).unwrap_or(&[]);
        if !allowed.contains(&key.as_str()) {
            return Err(parse_err(line, format!("unknown key `{key}` in [{sec}]")));
        }
        if let Some(prev) = entries.iter().find(|e| e.section == sec && e.key == key) {
            return Err(parse_err(
                line,
                format!("duplicate key `{key}` (first set on line {})", prev.line),
            ));
        }
        let value = v.trim().to_string();
        if value.is_empty() {
            return Err(parse_err(line, format!("empty value for `{key}`")));
        }
        entries.push(Entry {
            section: sec,
            key,
            value,
            line,
        });
    }
    Ok(RawConfig {
        entries,
        hash: config_hash(text),
    })
}

/// A sweep marker found in one entry.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub section: String,
    pub key: String,
    pub line: usize,
    /// Replacement texts, in order.
    pub values: Vec<String>,
}

impl SweepSpec {
    pub fn parameter(&self) -> String {
        format!("{}.{}", self.section, self.key)
    }
}

fn marker(value: &str) -> Option<(usize, usize)> {
    let open = value.find('{')?;
    let close = value[open..].find('}')? + open;
    Some((open, close))
}

fn expand_list(body: &str, line: usize) -> Result<Vec<String>> {
    let parts: Vec<&str> = body.split(':').collect();
    if parts.len() == 3 {
        let lo = parse_real(parts[0]).map_err(|e| parse_err(line, e.to_string()))?;
        let hi = parse_real(parts[1]).map_err(|e| parse_err(line, e.to_string()))?;
        let n: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| parse_err(line, format!("bad sweep count `{}`", parts[2].trim())))?;
        if n == 0 {
            return Err(parse_err(line, "a sweep needs at least one value"));
        }
        return Ok((0..n)
            .map(|i| {
                let v = if n == 1 {
                    lo
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                };
                // Twelve significant digits keep `{0.3:0.7:5}` printing as 0.4.
                let scale = 10f64.powi(11 - v.abs().log10().floor() as i32);
                let v = if v == 0.0 { v } else { (v * scale).round() / scale };
                format!("{v}")
            })
            .collect());
    }
    let values: Vec<String> = body
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    if values.is_empty() {
        return Err(parse_err(line, "a sweep needs at least one value"));
    }
    Ok(values)
}

impl RawConfig {
    /// The sweep marker, if any. More than one marker is an error.
    pub fn sweep(&self) -> Result<Option<SweepSpec>> {
        let mut found: Option<SweepSpec> = None;
        for e in &self.entries {
            let Some((open, close)) = marker(&e.value) else { continue };
            if marker(&e.value[close + 1..]).is_some() {
                return Err(Error::Invalid(format!(
                    "line {}: only one parameter may be swept",
                    e.line
                )));
            }
            if let Some(prev) = &found {
                return Err(Error::Invalid(format!(
                    "line {}: only one parameter may be swept (`{}` is already swept on line {})",
                    e.line,
                    prev.parameter(),
                    prev.line
                )));
            }
            found = Some(SweepSpec {
                section: e.section.clone(),
                key: e.key.clone(),
                line: e.line,
                values: expand_list(&e.value[open + 1..close], e.line)?,
            });
        }
        Ok(found)
    }

    /// A copy with the sweep marker replaced by `values[index]`.
    pub fn instantiate(&self, sweep: &SweepSpec, index: usize) -> RawConfig {
        let mut out = self.clone();
        for e in &mut out.entries {
            if e.section == sweep.section && e.key == sweep.key {
                let (open, close) = marker(&e.value).expect("marker present");
                e.value = format!("{}{}{}", &e.value[..open], sweep.values[index], &e.value[close + 1..]);
            }
        }
        out
    }

    fn get(&self, section: &str, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.section == section && e.key == key)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Norm,
    Rearrange,
    HardyVerify,
    OpVerify,
    ErgodicVerify,
    Sweep,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Norm => "norm",
            Kind::Rearrange => "rearrange",
            Kind::HardyVerify => "hardy-verify",
            Kind::OpVerify => "op-verify",
            Kind::ErgodicVerify => "ergodic-verify",
            Kind::Sweep => "sweep",
        }
    }
}

impl FromStr for Kind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "norm" => Kind::Norm,
            "rearrange" => Kind::Rearrange,
            "hardy-verify" => Kind::HardyVerify,
            "op-verify" => Kind::OpVerify,
            "ergodic-verify" => Kind::ErgodicVerify,
            "sweep" => Kind::Sweep,
            o => return Err(Error::Invalid(format!("unknown experiment kind `{o}`"))),
        })
    }
}

/// What a run is expected to conclude.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expectation {
    Verdict(Verdict),
    /// An inequality or identity check passes.
    Holds,
    /// An inequality or identity check fails.
    Fails,
}

impl Expectation {
    pub fn name(self) -> &'static str {
        match self {
            Expectation::Verdict(v) => v.name(),
            Expectation::Holds => "holds",
            Expectation::Fails => "fails",
        }
    }
}

impl FromStr for Expectation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "holds" => Ok(Expectation::Holds),
            "fails" => Ok(Expectation::Fails),
            other => Ok(Expectation::Verdict(other.parse()?)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorName {
    Maximal,
    FractionalMaximal,
    Riesz,
    Hilbert,
    Poisson,
    Convolution,
    NormEquivalence,
}

impl FromStr for OperatorName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "maximal" => OperatorName::Maximal,
            "fractional-maximal" => OperatorName::FractionalMaximal,
            "riesz" => OperatorName::Riesz,
            "hilbert" | "singular" => OperatorName::Hilbert,
            "poisson" => OperatorName::Poisson,
            "convolution" => OperatorName::Convolution,
            "norm-equivalence" => OperatorName::NormEquivalence,
            o => return Err(Error::Invalid(format!("unknown operator `{o}`"))),
        })
    }
}

/// What an `op-verify` or `ergodic-verify` run measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    /// Norm-ratio protocol with a verdict.
    Boundedness,
    /// `(Tf)* <= C·(rearrangement bound)` on seeded functions.
    Rearrangement,
    /// Empirical distribution of `|ℍ1_E|` against the closed form.
    Distribution,
    /// `(ℍ1_E)*(t) <= sinh⁻¹(2ξ/t)`.
    StarBound,
    /// `(𝐌f)* <= f**` on seeded functions.
    MaximalStar,
}

impl FromStr for Check {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "boundedness" => Check::Boundedness,
            "rearrangement" => Check::Rearrangement,
            "distribution" => Check::Distribution,
            "star-bound" => Check::StarBound,
            "maximal-star" => Check::MaximalStar,
            o => return Err(Error::Invalid(format!("unknown check `{o}`"))),
        })
    }
}

#[derive(Debug, Clone)]
pub struct Exponents {
    pub p: ExponentFunction<f64>,
    pub q: ExponentFunction<f64>,
    pub alpha: ExponentFunction<f64>,
    pub beta: ExponentFunction<f64>,
    pub nu: ExponentFunction<f64>,
    pub gamma: Option<ExponentFunction<f64>>,
    pub star: bool,
}

#[derive(Debug, Clone)]
pub struct GridSpec {
    pub ell: f64,
    /// Approximate number of cells of the geometric grid.
    pub cells: Option<usize>,
    pub t_min: Option<f64>,
    pub truncation: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct OperatorSpec {
    pub direction: Direction,
    pub name: Option<OperatorName>,
    pub order: Option<f64>,
    pub kernel: Option<PathBuf>,
    pub flow: Option<FlowKind>,
    pub ergodic: Option<ErgodicOperator>,
    pub check: Check,
    pub arcs: Vec<(f64, f64)>,
    pub points: usize,
    pub tolerance: f64,
}

/// A validated experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub name: String,
    pub expected: Option<Expectation>,
    pub exponents: Exponents,
    pub operator: OperatorSpec,
    pub input: Option<PathBuf>,
    pub grid: GridSpec,
    pub family: FamilySpec<f64>,
    pub protocol: ProtocolSettings<f64>,
    pub output: Option<PathBuf>,
    pub hash: String,
}

struct Reader<'a> {
    raw: &'a RawConfig,
    base_dir: &'a Path,
}

impl Reader<'_> {
    fn text(&self, sec: &str, key: &str) -> Option<(&str, usize)> {
        self.raw.get(sec, key).map(|e| (e.value.as_str(), e.line))
    }

    fn parse<V>(&self, sec: &str, key: &str, f: impl Fn(&str) -> Result<V>) -> Result<Option<V>> {
        match self.text(sec, key) {
            None => Ok(None),
            Some((v, line)) => f(v)
                .map(Some)
                .map_err(|e| parse_err(line, format!("{sec}.{key}: {}", strip_prefix(&e)))),
        }
    }

    fn real(&self, sec: &str, key: &str) -> Result<Option<f64>> {
        self.parse(sec, key, parse_real)
    }

    fn count(&self, sec: &str, key: &str) -> Result<Option<usize>> {
        self.parse(sec, key, |s| {
            s.parse::<usize>()
                .map_err(|_| Error::Invalid(format!("not a count: `{s}`")))
        })
    }

    fn flag(&self, sec: &str, key: &str) -> Result<Option<bool>> {
        self.parse(sec, key, |s| match s {
            "true" | "yes" | "on" | "1" => Ok(true),
            "false" | "no" | "off" | "0" => Ok(false),
            o => Err(Error::Invalid(format!("not a boolean: `{o}`"))),
        })
    }

    fn list(&self, sec: &str, key: &str) -> Result<Option<Vec<f64>>> {
        self.parse(sec, key, |s| {
            if s == "none" {
                return Ok(Vec::new());
            }
            s.split(',').map(parse_real).collect()
        })
    }

    fn exponent(&self, key: &str, ell: f64) -> Result<Option<ExponentFunction<f64>>> {
        self.parse("exponents", key, |s| {
            let e: ExponentFunction<f64> = s.parse()?;
            Ok(if e.domain_length().is_finite() { e } else { e.with_domain(ell) })
        })
    }

    fn path(&self, sec: &str, key: &str) -> Option<PathBuf> {
        self.text(sec, key).map(|(v, _)| {
            let p = PathBuf::from(v);
            if p.is_absolute() {
                p
            } else {
                self.base_dir.join(p)
            }
        })
    }
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::Invalid(m) | Error::Domain(m) => m.clone(),
        Error::Parse { msg, .. } => msg.clone(),
        other => other.to_string(),
    }
}

fn parse_arcs(s: &str) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    let mut rest = s.trim();
    while !rest.is_empty() {
        let open = rest
            .find('(')
            .ok_or_else(|| Error::Invalid(format!("arcs must be written (a,b),… near `{rest}`")))?;
        let close = rest[open..]
            .find(')')
            .ok_or_else(|| Error::Invalid("unbalanced parenthesis in arcs".into()))?
            + open;
        let (a, b) = rest[open + 1..close]
            .split_once(',')
            .ok_or_else(|| Error::Invalid(format!("bad arc `{}`", &rest[open..=close])))?;
        out.push((parse_real(a)?, parse_real(b)?));
        rest = rest[close + 1..].trim_start_matches([',', ' ']).trim();
    }
    Ok(out)
}

impl ExperimentConfig {
    /// Interprets a marker-free configuration. Relative paths are resolved
    /// against `base_dir`; `default_name` is used when `[experiment] name`
    /// is absent.
    pub fn from_raw(raw: &RawConfig, base_dir: &Path, default_name: &str) -> Result<Self> {
        if let Some(s) = raw.sweep()? {
            return Err(Error::Invalid(format!(
                "line {}: `{}` is swept; use the sweep command",
                s.line,
                s.parameter()
            )));
        }
        let r = Reader { raw, base_dir };
        let kind_text = r
            .text("experiment", "kind")
            .ok_or_else(|| Error::Invalid("[experiment] kind is required".into()))?;
        let mut kind: Kind = r.parse("experiment", "kind", |s| s.parse())?.expect("present");
        if kind == Kind::Sweep {
            kind = r
                .parse("experiment", "base", |s| s.parse())?
                .ok_or_else(|| parse_err(kind_text.1, "a sweep experiment needs `base = <kind>`"))?;
            if kind == Kind::Sweep {
                return Err(parse_err(kind_text.1, "a sweep cannot sweep a sweep"));
            }
        }
        let name = r
            .text("experiment", "name")
            .map(|x| x.0.to_string())
            .unwrap_or_else(|| default_name.to_string());
        if name.is_empty() || name.contains(['/', '\\']) {
            return Err(Error::Invalid(format!("bad experiment name `{name}`")));
        }
        let expected = r.parse("experiment", "expected", |s| s.parse())?;

        let ell = r.real("grid", "ell")?.unwrap_or(f64::INFINITY);
        if !(ell > 0.0) {
            return Err(Error::Invalid("grid.ell must be positive".into()));
        }
        let p = r
            .exponent("p", ell)?
            .ok_or_else(|| Error::Invalid("[exponents] p is required".into()))?;
        let q = r.exponent("q", ell)?.unwrap_or_else(|| p.clone());
        let zero = || ExponentFunction::constant(0.0).with_domain(ell);
        let exponents = Exponents {
            alpha: r.exponent("alpha", ell)?.unwrap_or_else(zero),
            beta: r.exponent("beta", ell)?.unwrap_or_else(zero),
            nu: r.exponent("nu", ell)?.unwrap_or_else(zero),
            gamma: r.exponent("gamma", ell)?,
            star: r.flag("exponents", "star")?.unwrap_or(false),
            p,
            q,
        };

        let operator = OperatorSpec {
            direction: r
                .parse("operator", "direction", |s| s.parse())?
                .unwrap_or(Direction::Lower),
            name: match kind {
                Kind::ErgodicVerify => None,
                _ => r.parse("operator", "name", |s| s.parse())?,
            },
            ergodic: match kind {
                Kind::ErgodicVerify => r.parse("operator", "name", |s| s.parse())?,
                _ => None,
            },
            order: r.real("operator", "order")?,
            kernel: r.path("operator", "kernel"),
            flow: r.parse("operator", "flow", |s| s.parse())?,
            check: r
                .parse("operator", "check", |s| s.parse())?
                .unwrap_or(Check::Boundedness),
            arcs: r.parse("operator", "arcs", parse_arcs)?.unwrap_or_default(),
            points: r.count("operator", "points")?.unwrap_or(100_000),
            tolerance: r.real("operator", "tolerance")?.unwrap_or(0.01),
        };

        let grid = GridSpec {
            ell,
            cells: r.count("grid", "cells")?,
            t_min: r.real("grid", "t_min")?,
            truncation: r.real("grid", "truncation")?,
        };

        let mut family = FamilySpec::default();
        if let Some(n) = r.count("family", "size")? {
            family.random = n;
        }
        if let Some(s) = r.parse("family", "seed", |s| {
            s.parse::<u64>()
                .map_err(|_| Error::Invalid(format!("not a seed: `{s}`")))
        })? {
            family.seed = s;
        }
        if let Some(l) = r.list("family", "ladder")? {
            family.ladder = l;
        }
        if let Some(l) = r.list("family", "extension")? {
            family.extension_ladder = l;
        }
        if let Some(n) = r.count("family", "extension_size")? {
            family.extension_random = n;
        }
        if let Some(b) = r.flag("family", "indicators")? {
            family.indicators = b;
        }
        if family.ladder.iter().chain(&family.extension_ladder).any(|&e| !(e > 0.0)) {
            return Err(Error::Invalid("ladder steps must be positive".into()));
        }

        let mut protocol = ProtocolSettings::default();
        if let Some(pct) = r.real("protocol", "flatness")? {
            protocol.flatness = pct / 100.0;
        }
        if let Some(f) = r.real("protocol", "blowup_factor")? {
            protocol.blowup_factor = f;
        }
        if let Some(n) = r.count("protocol", "refinement")? {
            protocol.refine_factor = n;
        }

        let cfg = Self {
            kind,
            name,
            expected,
            exponents,
            operator,
            input: r.path("input", "f"),
            grid,
            family,
            protocol,
            output: r.path("experiment", "output"),
            hash: raw.hash.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Invalid(m.to_string()));
        match self.kind {
            Kind::Norm | Kind::Rearrange => {
                if self.input.is_none() {
                    return bad("[input] f is required");
                }
            }
            Kind::OpVerify => {
                let Some(name) = self.operator.name else {
                    return bad("[operator] name is required");
                };
                let needs_order = matches!(name, OperatorName::FractionalMaximal | OperatorName::Riesz);
                if needs_order && self.operator.order.is_none() {
                    return bad("[operator] order is required for fractional operators");
                }
                if name == OperatorName::Convolution && self.operator.kernel.is_none() {
                    return bad("[operator] kernel is required for convolution");
                }
                if !matches!(self.operator.check, Check::Boundedness | Check::Rearrangement) {
                    return bad("op-verify supports check = boundedness or rearrangement");
                }
            }
            Kind::ErgodicVerify => {
                if self.operator.flow.is_none() {
                    return bad("[operator] flow is required");
                }
                match self.operator.check {
                    Check::Boundedness => {
                        if self.operator.ergodic.is_none() {
                            return bad("[operator] name is required (maximal or hilbert)");
                        }
                    }
                    Check::Distribution | Check::StarBound => {
                        if self.operator.arcs.is_empty() {
                            return bad("[operator] arcs is required");
                        }
                    }
                    Check::MaximalStar => {}
                    Check::Rearrangement => return bad("ergodic-verify does not support check = rearrangement"),
                }
            }
            Kind::HardyVerify | Kind::Sweep => {}
        }
        let uses_family = matches!(self.kind, Kind::HardyVerify | Kind::OpVerify | Kind::ErgodicVerify);
        let fam = &self.family;
        let empty = fam.ladder.is_empty() && fam.random == 0 && !fam.indicators;
        if uses_family && empty {
            return bad("the test family is empty");
        }
        if !(self.protocol.flatness > 0.0) || !(self.protocol.blowup_factor > 1.0) || self.protocol.refine_factor < 2 {
            return bad("protocol needs flatness > 0, blowup_factor > 1 and refinement >= 2");
        }
        if let (Some(a), Some(b)) = (self.grid.t_min, self.grid.truncation) {
            if !(a > 0.0 && a < b) {
                return bad("grid needs 0 < t_min < truncation");
            }
        }
        Ok(())
    }
}

/// Reads and parses a configuration file.
pub fn load(path: &Path) -> Result<(RawConfig, PathBuf, String)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let raw = parse_ini(&text)?;
    let dir = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("experiment")
        .to_string();
    Ok((raw, dir, stem))
}

#[cfg(test)]
mod tests {
    use super::*;

    const HARDY: &str = "\
# classical Hardy
[experiment]
kind = hardy-verify
expected = bounded

[exponents]
p = 2
q = 2
alpha = 0
nu = 0
";

    fn cfg(text: &str) -> Result<ExperimentConfig> {
        ExperimentConfig::from_raw(&parse_ini(text)?, Path::new("."), "x")
    }

    #[test]
    fn parses_a_minimal_config() {
        let c = cfg(HARDY).unwrap();
        assert_eq!(c.kind, Kind::HardyVerify);
        assert_eq!(c.expected, Some(Expectation::Verdict(Verdict::Bounded)));
        assert_eq!(c.exponents.q.limit_zero(), 2.0);
        assert_eq!(c.name, "x");
        assert_eq!(c.hash.len(), 16);
        assert_eq!(c.hash, config_hash(&HARDY.replace('\n', "\r\n")));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_ini("[experiment]\nkind = norm\nbogus line\n").unwrap_err();
        assert_eq!(e, Error::Parse { line: 3, msg: "expected `key = value`, got `bogus line`".into() });
        let e = parse_ini("[experiment]\nkind = norm\n[nope]\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }));
        let e = parse_ini("[experiment]\nkind = norm\nkind = rearrange\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }));
        let e = cfg("[experiment]\nkind = hardy-verify\n[exponents]\np = limit0=abc\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 4, .. }), "{e}");
        let e = parse_ini("x = 1\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn empty_family_is_rejected() {
        let text = format!("{HARDY}[family]\nsize = 0\nladder = none\nindicators = false\n");
        assert_eq!(cfg(&text).unwrap_err(), Error::Invalid("the test family is empty".into()));
    }

    #[test]
    fn sweep_markers() {
        let text = HARDY.replace("alpha = 0", "alpha = {0.1, 0.2, 0.3}");
        let raw = parse_ini(&text).unwrap();
        let s = raw.sweep().unwrap().unwrap();
        assert_eq!(s.parameter(), "exponents.alpha");
        assert_eq!(s.values, vec!["0.1", "0.2", "0.3"]);
        let one = raw.instantiate(&s, 1);
        let c = ExperimentConfig::from_raw(&one, Path::new("."), "x").unwrap();
        assert_eq!(c.exponents.alpha.limit_zero(), 0.2);
        assert!(ExperimentConfig::from_raw(&raw, Path::new("."), "x").is_err());

        let lin = parse_ini(&HARDY.replace("alpha = 0", "alpha = limit0={0.3:0.7:5}, limitInf=0.5, amplitude=0, mode=constant")).unwrap();
        assert_eq!(lin.sweep().unwrap().unwrap().values, vec!["0.3", "0.4", "0.5", "0.6", "0.7"]);

        let two = HARDY.replace("alpha = 0", "alpha = {0.1, 0.2}").replace("nu = 0", "nu = {0, 0.1}");
        assert!(parse_ini(&two).unwrap().sweep().is_err());
    }

    #[test]
    fn arcs_and_checks() {
        let text = "[experiment]\nkind = ergodic-verify\nexpected = holds\n[exponents]\np = 2\n[operator]\nflow = rotation\ncheck = star-bound\narcs = (0.1, 0.4), (0.5,0.6)\n[grid]\nell = 1\n";
        let c = cfg(text).unwrap();
        assert_eq!(c.operator.arcs, vec![(0.1, 0.4), (0.5, 0.6)]);
        assert_eq!(c.operator.check, Check::StarBound);
        assert_eq!(c.exponents.p.domain_length(), 1.0);
        assert!(cfg(&text.replace("arcs = (0.1, 0.4), (0.5,0.6)\n", "")).is_err());
    }
}
