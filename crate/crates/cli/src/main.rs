//! `gconv`: simulation, verification suites and formula tables.

use clap::{Args, Parser, Subcommand, ValueEnum};
use gconv::algebra::{Algebra, AlgebraId};
use gconv::formulas::{kendall_fn, kendall_pmf};
use gconv::mc::{self, resolve_seed};
use gconv::measure::{exp_sample, gcf, gcf_mc, GcfTable, StepLaw};
use gconv::numerics::{poisson_pmf, Grid};
use gconv::poisson1::{simulate_type1, Type1Spec};
use gconv::poisson2::{simulate_counts, Type2Spec};
use gconv::report::{rows_to_csv, CheckRow};
use gconv::suite::{proper_step, run_suite, Suite, SuiteReport};
use gconv::walk::{simulate_walk, WalkSpec};
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

/// Two-sided normal tail beyond 4σ.
const FOUR_SIGMA_FALSE_ALARM: f64 = 6.334e-5;

#[derive(Debug, Parser)]
#[command(name = "gconv", version, about = "Generalized convolutions and generalized Poisson processes")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Algebra as `tag[:key=value,...]`, e.g. `kendall:alpha=0.75`.
    #[arg(long, global = true, default_value = "stable:alpha=1")]
    algebra: String,
    /// Root seed; 0 selects the built-in default.
    #[arg(long, global = true, env = "GCONV_SEED", default_value_t = 0)]
    seed: u64,
    /// Monte Carlo draws per statistic.
    #[arg(long, global = true, default_value_t = 100_000, value_parser = parse_budget)]
    budget: usize,
    /// Paths or draws written by `simulate` and `sample-kernel`.
    #[arg(long, global = true, default_value_t = 10)]
    paths: usize,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Registered algebras and their capabilities.
    ListAlgebras,
    /// Draws from the kernel `δ_x ⋄ δ_y`.
    SampleKernel {
        #[arg(long)]
        x: f64,
        #[arg(long)]
        y: f64,
    },
    /// Generalized characteristic function of a law on a grid.
    Gcf {
        /// A step law (`delta:1`, `weibull:2`, ...) or `exp:a` for the
        /// compound-Poisson law with intensity `a`.
        #[arg(long, default_value = "delta:1")]
        law: String,
        /// `lo:hi:n` or a comma-separated list.
        #[arg(long, default_value = "0:5:21", value_parser = parse_grid)]
        grid: Grid,
    },
    /// Simulates walks and type-I or type-II processes.
    Simulate {
        #[command(subcommand)]
        what: Simulate,
    },
    /// Runs verification suites and exits 2 if any check fails.
    Verify {
        #[arg(value_enum)]
        suite: VerifyTarget,
    },
    /// Tabulates closed-form Kendall and stable quantities.
    Table {
        #[command(subcommand)]
        table: Table,
    },
}

#[derive(Debug, Subcommand)]
enum Simulate {
    /// Random walk positions `S_1, …, S_n`.
    Walk {
        /// Step law; defaults to the algebra's memoryless law, else `exponential:1`.
        #[arg(long)]
        step: Option<StepLaw>,
        #[arg(long, default_value_t = 10)]
        steps: usize,
    },
    /// Type-I process on a time grid starting at 0.
    Type1 {
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value = "0,0.5,1,2", value_parser = parse_grid)]
        times: Grid,
    },
    /// Type-II counts at the given times.
    Type2 {
        #[arg(long)]
        step: Option<StepLaw>,
        #[arg(long, default_value = "0.5,1,2", value_parser = parse_grid)]
        times: Grid,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VerifyTarget {
    Axioms,
    Exp,
    Lom,
    Type1,
    Type2,
    All,
}

#[derive(Debug, Subcommand)]
enum Table {
    /// `P{N(t) = n}` for Kendall steps.
    KendallPmf(TableArgs),
    /// `F_n(t) = P{S_n ≤ t}` for Kendall steps.
    KendallFn(TableArgs),
    /// `P{N(t) = n} = t^{αn} e^{-t^α}/n!` for stable steps.
    StablePmf(TableArgs),
}

#[derive(Debug, Args)]
struct TableArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long, value_parser = parse_grid)]
    t: Grid,
    #[arg(long, default_value_t = 8)]
    nmax: u64,
}

fn parse_budget(s: &str) -> Result<usize, String> {
    let n: usize = s.parse().map_err(|e| format!("{e}"))?;
    if n < 1000 {
        return Err(format!("budget must be at least 1000, got {n}"));
    }
    Ok(n)
}

fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let grid = if let [lo, hi, n] = parts.as_slice() {
        let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
        let n: usize = n.trim().parse().map_err(|e| format!("`{n}`: {e}"))?;
        Grid::linspace(num(lo)?, num(hi)?, n)
    } else {
        let pts: Vec<f64> = s
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}")))
            .collect::<Result<_, _>>()?;
        Grid::new(pts)
    };
    grid.map_err(|e| e.to_string())
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Lib(#[from] gconv::Error),
    #[error("{0}")]
    Usage(String),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

/// A rectangular result with typed cells.
struct Frame {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Value>>,
}

impl Frame {
    fn new(columns: Vec<&'static str>) -> Self {
        Frame { columns, rows: vec![] }
    }

    fn csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(csv_cell).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    fn json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Object(self.columns.iter().map(|c| c.to_string()).zip(r.iter().cloned()).collect()))
            .collect();
        Value::Array(rows)
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Number(n) if n.is_f64() => format!("{:.16e}", n.as_f64().unwrap_or(f64::NAN)),
        Value::String(s) if s.contains(',') || s.contains('"') => format!("\"{}\"", s.replace('"', "\"\"")),
        Value::String(s) => s.clone(),
        Value::Null => "NaN".into(),
        other => other.to_string(),
    }
}

fn real(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn parse_algebra(s: &str) -> Result<Algebra, CliError> {
    s.parse::<AlgebraId>().and_then(Algebra::new).map_err(|e| {
        CliError::Usage(format!(
            "{e}\nexpected `tag[:key=value,...]` with tag one of {} and keys alpha, beta",
            AlgebraId::TAGS.join(", ")
        ))
    })
}

fn list_algebras() -> Frame {
    let mut f = Frame::new(vec!["algebra", "regular", "monotonic", "kernel_sampler", "kernel_cdf", "kernel_density"]);
    for a in Algebra::registry() {
        f.rows.push(vec![
            a.name().into(),
            a.regular.into(),
            a.monotonic.into(),
            a.can_sample_kernel.into(),
            a.can_eval_kernel_cdf.into(),
            a.can_eval_kernel_density.into(),
        ]);
    }
    f
}

fn gcf_frame(table: &GcfTable) -> Frame {
    let mut f = Frame::new(vec!["t", "value", "stderr"]);
    for ((t, v), s) in table.grid.iter().zip(&table.values).zip(&table.stderr) {
        f.rows.push(vec![real(t), real(*v), real(*s)]);
    }
    f
}

fn default_step(alg: &Algebra) -> StepLaw {
    proper_step(alg).unwrap_or(StepLaw::Exponential { rate: 1.0 })
}

fn simulate(alg: &Algebra, what: &Simulate, c: &Common, seed: u64) -> Result<Frame, CliError> {
    Ok(match what {
        Simulate::Walk { step, steps } => {
            let spec = WalkSpec::new(*alg, step.unwrap_or_else(|| default_step(alg)), *steps)?;
            let paths = mc::collect(c.paths, seed, |rng| simulate_walk(&spec, rng));
            let mut f = Frame::new(vec!["path", "step", "value"]);
            for (i, p) in paths.iter().enumerate() {
                for (m, v) in p.values.iter().enumerate() {
                    f.rows.push(vec![i.into(), (m + 1).into(), real(*v)]);
                }
            }
            f
        }
        Simulate::Type1 { c: intensity, times } => {
            let spec = Type1Spec::new(*alg, *intensity, times.clone())?;
            let paths = mc::collect(c.paths, seed, |rng| simulate_type1(&spec, rng));
            let mut f = Frame::new(vec!["path", "t", "value"]);
            for (i, p) in paths.iter().enumerate() {
                for (t, v) in times.iter().zip(&p.values) {
                    f.rows.push(vec![i.into(), real(t), real(*v)]);
                }
            }
            f
        }
        Simulate::Type2 { step, times } => {
            let step = step.or_else(|| proper_step(alg)).ok_or_else(|| {
                CliError::Usage(format!("`{}` has no default step law; pass --step", alg.name()))
            })?;
            let spec = Type2Spec::new(*alg, step, times.clone())?;
            let records = mc::collect(c.paths, seed, |rng| simulate_counts(&spec, rng));
            let mut f = Frame::new(vec!["path", "t", "count", "truncated"]);
            for (i, r) in records.iter().enumerate() {
                for (t, n) in times.iter().zip(&r.counts) {
                    f.rows.push(vec![i.into(), real(t), (*n).into(), r.truncated.into()]);
                }
            }
            f
        }
    })
}

fn table(which: &Table) -> Result<Frame, CliError> {
    let (args, eval): (&TableArgs, fn(u64, f64, f64) -> f64) = match which {
        Table::KendallPmf(a) => (a, kendall_pmf),
        Table::KendallFn(a) => (a, kendall_fn),
        Table::StablePmf(a) => (a, |n, t, alpha| poisson_pmf(n, t.powf(alpha))),
    };
    if !(args.alpha.is_finite() && args.alpha > 0.0) {
        return Err(CliError::Usage(format!("alpha must be positive, got {}", args.alpha)));
    }
    let column = if matches!(which, Table::KendallFn(_)) { "cdf" } else { "pmf" };
    let mut f = Frame::new(vec!["t", "n", column]);
    for t in args.t.iter() {
        for n in 0..=args.nmax {
            f.rows.push(vec![real(t), n.into(), real(eval(n, t, args.alpha))]);
        }
    }
    Ok(f)
}

fn suites(target: VerifyTarget) -> Vec<Suite> {
    match target {
        VerifyTarget::Axioms => vec![Suite::Axioms],
        VerifyTarget::Exp => vec![Suite::Exp],
        VerifyTarget::Lom => vec![Suite::Lom],
        VerifyTarget::Type1 => vec![Suite::Type1],
        VerifyTarget::Type2 => vec![Suite::Type2],
        VerifyTarget::All => Suite::ALL.to_vec(),
    }
}

/// The report and whether every check passed.
fn verify(alg: &Algebra, target: VerifyTarget, c: &Common, seed: u64) -> Result<(String, Vec<CheckRow>), CliError> {
    let list = suites(target);
    let mut report = SuiteReport::default();
    for s in &list {
        report = report.merge(run_suite(*s, alg, c.budget, seed)?);
    }
    if target != VerifyTarget::All && report.rows.is_empty() {
        let why = report.skipped.join("; ");
        return Err(CliError::Usage(format!("nothing to verify: {why}")));
    }
    let names: Vec<&str> = list.iter().map(|s| s.name()).collect();
    let failed: Vec<CheckRow> = report.rows.iter().filter(|r| !r.pass).cloned().collect();
    let text = match c.format {
        Format::Csv => {
            let mut out = String::new();
            writeln!(out, "# algebra: {}", alg.name()).ok();
            writeln!(out, "# seed: {seed}").ok();
            writeln!(out, "# budget: {}", c.budget).ok();
            writeln!(out, "# suites: {}", names.join(",")).ok();
            writeln!(out, "# checks: {}", report.check_names().join(";")).ok();
            for s in &report.skipped {
                writeln!(out, "# skipped: {s}").ok();
            }
            writeln!(
                out,
                "# tolerance: 4 sigma per row, no multiplicity correction; expected false alarms {:.4} over {} rows",
                FOUR_SIGMA_FALSE_ALARM * report.rows.len() as f64,
                report.rows.len()
            )
            .ok();
            out.push_str(&rows_to_csv(&report.rows));
            out
        }
        Format::Json => {
            let v = json!({
                "algebra": alg.name(),
                "seed": seed,
                "budget": c.budget,
                "suites": names,
                "checks": report.check_names(),
                "skipped": report.skipped,
                "rows": report.rows,
            });
            format!("{}\n", serde_json::to_string_pretty(&v).unwrap_or_default())
        }
    };
    Ok((text, failed))
}

fn render(frame: &Frame, format: Format) -> String {
    match format {
        Format::Csv => frame.csv(),
        Format::Json => format!("{}\n", serde_json::to_string_pretty(&frame.json()).unwrap_or_default()),
    }
}

fn emit(text: &str, out: &Option<PathBuf>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            use std::io::Write;
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

/// Exit status 0 on success, 2 when verification checks fail.
fn run(cli: Cli) -> Result<u8, CliError> {
    let c = &cli.common;
    if let Some(w) = c.workers {
        if w == 0 {
            return Err(CliError::Usage("--workers must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let seed = resolve_seed(c.seed);
    let frame = match &cli.command {
        Command::ListAlgebras => list_algebras(),
        Command::SampleKernel { x, y } => {
            let alg = parse_algebra(&c.algebra)?;
            if !(*x >= 0.0 && *y >= 0.0 && x.is_finite() && y.is_finite()) {
                return Err(CliError::Usage("x and y must be finite and nonnegative".into()));
            }
            let kernel = alg.sampler()?;
            let draws = mc::collect(c.paths, seed, |rng| kernel.sample(*x, *y, rng));
            let mut f = Frame::new(vec!["draw", "value"]);
            f.rows = draws.into_iter().enumerate().map(|(i, v)| vec![i.into(), real(v)]).collect();
            f
        }
        Command::Gcf { law, grid } => {
            let alg = parse_algebra(&c.algebra)?;
            let table = match law.strip_prefix("exp:") {
                Some(a) => {
                    let a: f64 = a.parse().map_err(|_| CliError::Usage(format!("`{a}` is not a number")))?;
                    let kernel = alg.sampler()?;
                    gcf_mc(&alg, grid, c.budget, seed, |rng| exp_sample(&kernel, a, |_| 1.0, rng))?
                }
                None => {
                    let step: StepLaw = law.parse()?;
                    gcf(&alg, &step.to_measure(), grid, c.budget, seed)?
                }
            };
            gcf_frame(&table)
        }
        Command::Simulate { what } => simulate(&parse_algebra(&c.algebra)?, what, c, seed)?,
        Command::Verify { suite } => {
            let alg = parse_algebra(&c.algebra)?;
            let (text, failed) = verify(&alg, *suite, c, seed)?;
            emit(&text, &c.out)?;
            if failed.is_empty() {
                return Ok(0);
            }
            eprintln!("{} checks failed:", failed.len());
            eprint!("{}", rows_to_csv(&failed));
            return Ok(2);
        }
        Command::Table { table: t } => table(t)?,
    };
    emit(&render(&frame, c.format), &c.out)?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            e.print().ok();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
