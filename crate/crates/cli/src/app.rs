//! Argument parsing and subcommand dispatch for `friable-sums`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use friable_core::bounds::{self, Bound};
use friable_core::optimizer::{self, regions};
use friable_core::sieve;
use friable_core::sums::SumParams;
use friable_core::Error;

use crate::grid;
use crate::scan::{self, ASelection, ScanError, ScanSpec};
use crate::table::{Cell, Format, Table};
use crate::verify::{self, Suite, VerifyConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "friable-sums", version, about = "Exponential sums over smooth integers")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Output format.
    #[arg(long, value_enum, default_value = "csv", global = true)]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate Psi(x, y) over grids of x and y.
    Sieve {
        #[arg(long, default_value = "1e4")]
        x: String,
        #[arg(long, default_value = "10")]
        y: String,
        #[command(flatten)]
        budget: BudgetArg,
    },
    /// Evaluate one sum and its bound envelopes.
    Sum(SumArgs),
    /// Evaluate sums and envelope ratios over a parameter grid.
    Scan(ScanArgs),
    /// Run the identity suites.
    Verify(VerifyArgs),
    /// Emit the exact non-triviality regions of the power-moduli bounds.
    Regions,
    /// Optimal window exponent for given y = x^alpha, q = x^beta.
    Optimize {
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
    },
}

#[derive(Debug, Clone, Copy, Args)]
pub struct BudgetArg {
    /// Refuse runs whose estimated summed terms exceed this.
    #[arg(long, default_value_t = scan::DEFAULT_BUDGET)]
    pub budget: f64,
}

impl BudgetArg {
    fn check(self, estimate: f64) -> Result<(), (i32, String)> {
        if estimate > self.budget {
            return Err((EXIT_BUDGET, format!("estimated work {estimate:.3e} terms exceeds budget {:.3e}", self.budget)));
        }
        Ok(())
    }
}

#[derive(Debug, Args)]
pub struct EnvelopeArgs {
    /// E4 exponent slack.
    #[arg(long, default_value_t = bounds::DEFAULT_EPS)]
    pub eps: f64,
    /// E4 outer power.
    #[arg(long, default_value_t = bounds::DEFAULT_DELTA)]
    pub delta: f64,
}

#[derive(Debug, Args)]
pub struct SumArgs {
    #[arg(long, default_value_t = 1e4)]
    pub x: f64,
    #[arg(long, default_value_t = 100.0)]
    pub y: f64,
    #[arg(long, default_value_t = 1)]
    pub q: u64,
    #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
    pub a: i64,
    #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
    pub nu: i64,
    /// Real frequency; replaces a/q in the phase.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    #[command(flatten)]
    pub env: EnvelopeArgs,
    #[command(flatten)]
    pub budget: BudgetArg,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// x axis: list, geom:START:STOP:COUNT.
    #[arg(long)]
    pub x: String,
    /// y axis; items may be powers of x such as x^0.3.
    #[arg(long)]
    pub y: String,
    /// q axis; items may be powers of x such as x^0.6.
    #[arg(long)]
    pub q: String,
    /// Fixed residue a.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "random_a")]
    pub a: Option<i64>,
    /// Draw this many residues per (x, y, q) cell from the units mod q.
    #[arg(long)]
    pub random_a: Option<usize>,
    #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
    pub nu: i64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Snap each q up to the next prime.
    #[arg(long)]
    pub next_prime: bool,
    #[command(flatten)]
    pub budget: BudgetArg,
    #[command(flatten)]
    pub env: EnvelopeArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Suites to run (repeatable); all when absent.
    #[arg(long, value_enum)]
    pub suite: Vec<Suite>,
    #[arg(long, default_value_t = 1e4)]
    pub x: f64,
    #[arg(long, default_value_t = 25.0)]
    pub y: f64,
    /// Buchstab depth; defaults to the smallest depth at which the expansion is exact.
    #[arg(long)]
    pub r: Option<u32>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Corrupt one Buchstab term to exercise the failure path.
    #[arg(long)]
    pub sabotage: bool,
    #[command(flatten)]
    pub budget: BudgetArg,
}

/// What a subcommand produced: text for the output sink and an exit code.
struct Done {
    text: String,
    code: i32,
}

fn usage(msg: impl std::fmt::Display) -> Result<Done, (i32, String)> {
    Err((EXIT_USAGE, msg.to_string()))
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    if let Some(n) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: thread pool already configured: {e}");
        }
    }
    let result = match &cli.command {
        Command::Sieve { x, y, budget } => cmd_sieve(x, y, *budget, cli.global.format),
        Command::Sum(a) => cmd_sum(a, cli.global.format),
        Command::Scan(a) => cmd_scan(a, cli.global.format),
        Command::Verify(a) => cmd_verify(a, cli.global.format),
        Command::Regions => cmd_regions(),
        Command::Optimize { alpha, beta } => cmd_optimize(*alpha, *beta, cli.global.format),
    };
    match result {
        Ok(done) => match emit(&cli.global.output, &done.text) {
            Ok(()) => done.code,
            Err(e) => {
                eprintln!("error: cannot write output: {e}");
                EXIT_USAGE
            }
        },
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            code
        }
    }
}

fn emit(path: &Option<PathBuf>, text: &str) -> std::io::Result<()> {
    match path {
        Some(p) => fs::write(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}

fn cmd_sieve(xs: &str, ys: &str, budget: BudgetArg, format: Format) -> Result<Done, (i32, String)> {
    let xs = grid::parse_axis(xs, false).map_err(|e| (EXIT_USAGE, e))?;
    let ys = grid::parse_axis(ys, true).map_err(|e| (EXIT_USAGE, e))?;
    budget.check(xs.iter().map(|x| x.resolve(0.0).floor()).sum::<f64>() * ys.len() as f64)?;
    let mut table = Table::new(vec!["x".into(), "y".into(), "psi".into()]);
    for xi in &xs {
        let x = xi.resolve(0.0);
        if !(x >= 1.0) {
            return usage(format!("x = {x} must be at least 1"));
        }
        for yi in &ys {
            let y = yi.resolve(x);
            table.push(vec![Cell::Float(x), Cell::Float(y), sieve::psi(x, y).into()]);
        }
    }
    Ok(Done { text: table.render(format), code: EXIT_OK })
}

fn check_env(env: &EnvelopeArgs) -> Result<(), (i32, String)> {
    if !(env.eps > 0.0) || !(env.delta > 0.0 && env.delta <= 1.0) {
        return Err((EXIT_USAGE, format!("need eps > 0 and delta in (0, 1], got {} and {}", env.eps, env.delta)));
    }
    Ok(())
}

fn cmd_sum(a: &SumArgs, format: Format) -> Result<Done, (i32, String)> {
    check_env(&a.env)?;
    if !(a.x >= 1.0) || !(a.y >= 1.0) {
        return usage("x and y must be at least 1");
    }
    a.budget.check(a.x.floor())?;
    let mut p = SumParams::new(a.x, a.y, a.q, a.a).and_then(|p| p.with_nu(a.nu)).map_err(|e| (EXIT_USAGE, e.to_string()))?;
    if let Some(t) = a.theta {
        if !t.is_finite() {
            return usage("theta must be finite");
        }
        p = p.with_theta(t);
    }
    let value = match p.theta() {
        Some(_) => friable_core::sums::sum_theta(&p),
        None if p.nu() == 1 => Ok(friable_core::sums::sum_linear(&p)),
        None => Ok(friable_core::sums::sum_power(&p)),
    }
    .map_err(|e| (EXIT_USAGE, e.to_string()))?;
    let report = bounds::report_for(&p, value.abs(), value.terms, a.env.eps, a.env.delta)
        .map_err(|e| (EXIT_USAGE, e.to_string()))?;
    let mut cols: Vec<String> =
        ["x", "y", "q", "a", "nu", "theta", "re_S", "im_S", "abs_S", "psi", "L"].iter().map(|s| s.to_string()).collect();
    cols.extend(Bound::ALL.iter().map(|b| format!("envelope_{b}")));
    cols.extend(Bound::ALL.iter().map(|b| format!("ratio_{b}")));
    let mut row = vec![
        Cell::Float(a.x),
        Cell::Float(a.y),
        a.q.into(),
        a.a.into(),
        a.nu.into(),
        a.theta.map_or(Cell::Text(String::new()), Cell::Float),
        value.value.re.into(),
        value.value.im.into(),
        value.abs().into(),
        value.terms.into(),
        report.l_factor.into(),
    ];
    row.extend(Bound::ALL.iter().map(|b| Cell::Float(report.envelopes[b])));
    row.extend(Bound::ALL.iter().map(|b| Cell::Float(report.ratios[b])));
    let mut table = Table::new(cols);
    table.push(row);
    let trivial: Vec<&str> = report.trivial().iter().map(|b| b.name()).collect();
    if !trivial.is_empty() {
        table.notes.push(format!("trivial (envelope >= 1): {}", trivial.join(" ")));
    }
    Ok(Done { text: table.render(format), code: EXIT_OK })
}

fn cmd_scan(a: &ScanArgs, format: Format) -> Result<Done, (i32, String)> {
    check_env(&a.env)?;
    let parse = |s: &str, rel| grid::parse_axis(s, rel).map_err(|e| (EXIT_USAGE, e));
    let xs: Vec<f64> = parse(&a.x, false)?.iter().map(|g| g.resolve(0.0)).collect();
    let selection = match (a.a, a.random_a) {
        (_, Some(0)) => return usage("--random-a needs a positive count"),
        (_, Some(k)) => ASelection::Random(k),
        (Some(v), None) => ASelection::Fixed(v),
        (None, None) => ASelection::Fixed(1),
    };
    if a.nu == 0 {
        return usage("nu must be nonzero");
    }
    let spec = ScanSpec {
        xs,
        ys: parse(&a.y, true)?,
        qs: parse(&a.q, true)?,
        a: selection,
        nu: a.nu,
        seed: a.seed,
        snap_prime: a.next_prime,
        eps: a.env.eps,
        delta: a.env.delta,
        budget: a.budget.budget,
    };
    match scan::run(&spec) {
        Ok(table) => Ok(Done { text: table.render(format), code: EXIT_OK }),
        Err(e @ ScanError::Budget { .. }) => Err((EXIT_BUDGET, e.to_string())),
        Err(e) => Err((EXIT_USAGE, e.to_string())),
    }
}

fn cmd_verify(a: &VerifyArgs, format: Format) -> Result<Done, (i32, String)> {
    if !(a.x >= 2.0) || !(a.y >= 2.0) {
        return usage("x and y must be at least 2");
    }
    // Ten Buchstab expansions dominate.
    a.budget.check(10.0 * a.x.floor())?;
    let cfg = VerifyConfig { x: a.x, y: a.y, r: a.r, seed: a.seed, sabotage: a.sabotage };
    let suites: Vec<Suite> = if a.suite.is_empty() { Suite::ALL.to_vec() } else { a.suite.clone() };
    let mut table = Table::new(vec!["suite".into(), "status".into(), "checks".into(), "detail".into()]);
    let mut all = true;
    for s in suites {
        let o = verify::run(s, &cfg);
        all &= o.passed;
        let status = if o.passed { "PASS" } else { "FAIL" };
        if !o.passed {
            eprintln!("FAIL {}: {}", s.name(), o.detail);
        }
        table.push(vec![s.name().into(), status.into(), o.checks.into(), csv_safe(&o.detail).into()]);
    }
    Ok(Done { text: table.render(format), code: if all { EXIT_OK } else { EXIT_VERIFY } })
}

fn csv_safe(s: &str) -> String {
    s.replace(',', ";")
}

fn cmd_regions() -> Result<Done, (i32, String)> {
    let r = regions::figure1_regions();
    let mut polygons = serde_json::Map::new();
    for (b, poly) in &r.polygons {
        let verts: Vec<serde_json::Value> = poly
            .iter()
            .map(|v| {
                let (fa, fb) = v.to_f64();
                serde_json::json!({
                    "alpha": regions::render(v.alpha),
                    "beta": regions::render(v.beta),
                    "alpha_f64": fa,
                    "beta_f64": fb,
                })
            })
            .collect();
        polygons.insert(b.name().to_string(), serde_json::Value::Array(verts));
    }
    let doc = serde_json::json!({
        "version": "friable-sums v1",
        "axes": {"alpha": "y = x^alpha", "beta": "q = x^beta"},
        "polygons": polygons,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("regions serialize");
    text.push('\n');
    Ok(Done { text, code: EXIT_OK })
}

fn cmd_optimize(alpha: f64, beta: f64, format: Format) -> Result<Done, (i32, String)> {
    let mut table = Table::new(vec!["alpha".into(), "beta".into(), "omega".into(), "kappa".into(), "regime".into()]);
    match optimizer::optimal_omega(alpha, beta) {
        Ok(p) => {
            let regime = if beta <= 1.0 {
                optimizer::two_peaks_regime(alpha, beta).map(|r| r.name()).unwrap_or("")
            } else {
                "large-modulus"
            };
            table.push(vec![alpha.into(), beta.into(), p.omega.into(), p.kappa.into(), regime.into()]);
        }
        Err(Error::TrivialRegime(msg)) => {
            table.push(vec![alpha.into(), beta.into(), f64::NAN.into(), f64::NAN.into(), "trivial".into()]);
            table.notes.push(msg);
        }
        Err(e) => return usage(e),
    }
    Ok(Done { text: table.render(format), code: EXIT_OK })
}
