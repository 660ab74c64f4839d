use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const HARDY: &str = "\
[experiment]
kind = hardy-verify
expected = bounded

[exponents]
p = 2
q = 2
alpha = 0
nu = 0
";

fn lorentzx(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lorentzx"))
        .args(args)
        .env("LORENTZX_OUT", out)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn summary(dir: &Path, name: &str) -> Vec<(String, String)> {
    let text = fs::read_to_string(dir.join(format!("{name}.summary.csv"))).unwrap();
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            (rec[0].to_string(), rec[1].to_string())
        })
        .collect()
}

fn lookup<'a>(s: &'a [(String, String)], key: &str) -> &'a str {
    &s.iter().find(|(k, _)| k == key).unwrap_or_else(|| panic!("no {key}")).1
}

#[test]
fn hardy_run_meets_expectation_and_writes_reports() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "classical.ini", HARDY);
    let out = tmp.path().join("out");
    let o = lorentzx(&["run", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = summary(&out, "classical");
    assert_eq!(lookup(&s, "observed"), "bounded");
    assert_eq!(lookup(&s, "match"), "yes");
    let sup: f64 = lookup(&s, "sup_ratio").parse().unwrap();
    assert!(sup > 1.8 && sup <= 2.0, "{sup}");

    for suffix in ["ratios", "refinement", "ladder", "summary"] {
        let text = fs::read_to_string(out.join(format!("classical.{suffix}.csv"))).unwrap();
        let first = text.lines().next().unwrap();
        assert!(first.starts_with("# lorentzx=0.1.0 config="), "{first}");
        assert_eq!(&first["# lorentzx=0.1.0 config=".len()..], lookup(&s, "config"));
        assert!(!text.contains('\r'));
    }
}

#[test]
fn blow_up_expectation_and_mismatch() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let blow = HARDY
        .replace("expected = bounded", "expected = blow-up")
        .replace("alpha = 0", "alpha = limit0=0.55, limitInf=0.25, amplitude=0, mode=constant");
    let cfg = write(tmp.path(), "alpha.ini", &blow);
    let o = lorentzx(&["run", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));

    let wrong = write(tmp.path(), "wrong.ini", &HARDY.replace("expected = bounded", "expected = blow-up"));
    let o = lorentzx(&["run", wrong.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("expected: blow-up"), "{}", stderr(&o));
    assert_eq!(lookup(&summary(&out, "wrong"), "match"), "no");
}

#[test]
fn malformed_configs_report_line_numbers() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let bad = write(tmp.path(), "bad.ini", &HARDY.replace("nu = 0", "nu 0"));
    let o = lorentzx(&["run", bad.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 9"), "{}", stderr(&o));

    let bad = write(tmp.path(), "bad2.ini", &HARDY.replace("p = 2", "p = limit0=two"));
    let o = lorentzx(&["run", bad.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 6"), "{}", stderr(&o));

    let empty = format!("{HARDY}\n[family]\nsize = 0\nladder = none\nindicators = false\n");
    let empty = write(tmp.path(), "empty.ini", &empty);
    let o = lorentzx(&["run", empty.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("family is empty"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn sweep_validation() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let two = HARDY.replace("alpha = 0", "alpha = {0, 0.1}").replace("nu = 0", "nu = {0, 0.1}");
    let cfg = write(tmp.path(), "two.ini", &two);
    let o = lorentzx(&["sweep", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("only one parameter may be swept"), "{}", stderr(&o));

    let none = write(tmp.path(), "none.ini", HARDY);
    let o = lorentzx(&["sweep", none.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));

    let swept = write(tmp.path(), "swept.ini", &HARDY.replace("alpha = 0", "alpha = {0, 0.1}"));
    let o = lorentzx(&["run", swept.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sweep command"), "{}", stderr(&o));
}

#[test]
fn single_value_sweep_matches_run() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let run = write(tmp.path(), "plain.ini", HARDY);
    assert_eq!(lorentzx(&["run", run.to_str().unwrap()], &out).status.code(), Some(0));
    let sweep = write(tmp.path(), "single.ini", &HARDY.replace("alpha = 0", "alpha = {0}"));
    let o = lorentzx(&["sweep", sweep.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = fs::read_to_string(out.join("single.sweep.csv")).unwrap();
    let row: Vec<&str> = table.lines().nth(2).unwrap().split(',').collect();
    let s = summary(&out, "plain");
    assert_eq!(row[1], lookup(&s, "sup_ratio"));
    assert_eq!(row[2], lookup(&s, "observed"));
}

#[test]
fn riesz_order_sweep_stays_bounded() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let text = "\
[experiment]
kind = sweep
base = op-verify
expected = bounded

[exponents]
p = 2
q = 2

[operator]
name = riesz
order = {0.1, 0.25, 0.4}
";
    let cfg = write(tmp.path(), "riesz.ini", text);
    let o = lorentzx(&["sweep", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let s = summary(&out, "riesz");
    assert_eq!(lookup(&s, "observed"), "bounded bounded bounded");
}

#[test]
fn runs_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let text = "\
[experiment]
kind = op-verify
expected = bounded

[exponents]
p = limit0=2, limitInf=2.5, amplitude=0.3, mode=oscillating
q = 2

[operator]
name = maximal

[grid]
cells = 200
t_min = 2^-60
truncation = 2^60

[family]
seed = 77
size = 4
";
    let cfg = write(tmp.path(), "det.ini", text);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    lorentzx(&["run", cfg.to_str().unwrap()], &a);
    lorentzx(&["run", cfg.to_str().unwrap()], &b);
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 4);
    for n in names {
        assert_eq!(fs::read(a.join(&n)).unwrap(), fs::read(b.join(&n)).unwrap(), "{n:?}");
    }
}

#[test]
fn norm_and_rearrange_commands() {
    let tmp = TempDir::new().unwrap();
    let f = write(tmp.path(), "f.csv", "t_left,t_right,value\n0,1,1\n1,3,3\n3,4,0\n");
    let o = lorentzx(&["norm", "--f", f.to_str().unwrap(), "--p", "2"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v - 19f64.sqrt()).abs() < 1e-6 * 19f64.sqrt(), "{v}");

    let o = lorentzx(&["norm", "--f", f.to_str().unwrap(), "--p", "1", "--q", "1"], tmp.path());
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v - 7.0).abs() < 1e-6 * 7.0, "{v}");

    let o = lorentzx(&["norm", "--f", f.to_str().unwrap(), "--p", "2", "--star"], tmp.path());
    let star: f64 = stdout(&o).trim().parse().unwrap();
    assert!(star > 19f64.sqrt());

    let o = lorentzx(&["rearrange", "--f", f.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(2).collect();
    assert_eq!(rows, vec!["0,2,3,3", "2,3,1,2.3333333333333335", "3,4,0,1.75"]);

    let o = lorentzx(&["norm", "--f", f.to_str().unwrap(), "--p", "nope"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}
