use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lorentzx::config::{load, ExperimentConfig};
use lorentzx::grid::{double_star, read_csv, rearrange};
use lorentzx::norms::lorentz_norm;
use lorentzx::runner::{self, Outcome, VERSION};
use lorentzx::{Error, ExponentFunction, NormSpec, StepFunction};

#[derive(Parser)]
#[command(name = "lorentzx", version, about = "Variable-exponent Lorentz norms and operator boundedness experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment; exits 1 when the result differs from `expected`.
    Run { config: PathBuf },
    /// Run a config with one swept parameter.
    Sweep { config: PathBuf },
    /// Print the Lorentz norm of a step function.
    Norm {
        /// CSV with `t_left,t_right,value` rows.
        #[arg(long = "f")]
        f: PathBuf,
        #[arg(long)]
        p: String,
        /// Defaults to `p`.
        #[arg(long)]
        q: Option<String>,
        #[arg(long)]
        gamma: Option<String>,
        /// Use `f**` in place of `f*`.
        #[arg(long)]
        star: bool,
    },
    /// Print `f*` and `f**` of a step function as CSV.
    Rearrange {
        #[arg(long = "f")]
        f: PathBuf,
    },
}

fn read_function(path: &Path) -> Result<StepFunction<f64>, Error> {
    let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_csv(file)
}

fn exponent(s: &str, what: &str) -> Result<ExponentFunction<f64>, Error> {
    s.parse()
        .map_err(|e: Error| Error::Invalid(format!("--{what}: {e}")))
}

fn report(outcome: &Outcome) {
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    match (&outcome.expected, outcome.matched) {
        (Some(e), Some(true)) => println!("result: {} (expected {e})", outcome.observed),
        (Some(e), _) => {
            println!("result: {} (expected {e})", outcome.observed);
            eprintln!("expectation mismatch:\n- expected: {e}\n+ observed: {}", outcome.observed);
        }
        (None, _) => println!("result: {}", outcome.observed),
    }
}

fn run(cli: Cli) -> Result<i32, Error> {
    match cli.command {
        Command::Run { config } => {
            let (raw, dir, stem) = load(&config)?;
            let cfg = ExperimentConfig::from_raw(&raw, &dir, &stem)?;
            let out = runner::output_dir(cfg.output.as_deref());
            let outcome = runner::run(&cfg, &out)?;
            report(&outcome);
            Ok(outcome.exit_code())
        }
        Command::Sweep { config } => {
            let (raw, dir, stem) = load(&config)?;
            let (outcome, points) = runner::sweep(&raw, &dir, &stem, None)?;
            for p in &points {
                let sup = p.sup_ratio.map_or("-".to_string(), |s| s.to_string());
                println!("{:>12}  {:<12}  sup_ratio={sup}", p.value, p.observed);
            }
            report(&outcome);
            Ok(outcome.exit_code())
        }
        Command::Norm { f, p, q, gamma, star } => {
            let f = read_function(&f)?;
            let p = exponent(&p, "p")?;
            let q = match q {
                Some(q) => exponent(&q, "q")?,
                None => p.clone(),
            };
            let mut spec = NormSpec::new(p, q).star(star);
            if let Some(g) = gamma {
                spec = spec.with_gamma(exponent(&g, "gamma")?);
            }
            println!("{}", lorentz_norm(&f, &spec)?);
            Ok(0)
        }
        Command::Rearrange { f } => {
            let fs = rearrange(&read_function(&f)?);
            let fss = double_star(&fs);
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            writeln!(out, "# lorentzx={VERSION}")?;
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(out);
            w.write_record(["t_left", "t_right", "f_star", "f_double_star"])?;
            for (k, (a, b)) in fs.values().iter().zip(fss.values()).enumerate() {
                let (l, r) = fs.partition().cell(k);
                w.write_record([l.to_string(), r.to_string(), a.to_string(), b.to_string()])?;
            }
            w.flush()?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
