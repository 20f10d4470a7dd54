//! `mpclab`: suboptimality bounds for multistep MPC from the command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 numerical error, 3 verification
//! failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mpclab::horizon::linspace;
use mpclab::kl0::BetaSpec;
use mpclab::sim::io::{format_float, run_to_csv, run_to_json, ExperimentConfig};
use mpclab::sim::ScheduleRule;
use mpclab::verify::{all_passed, invariant_suite};
use mpclab::{
    alpha_closed_form_with, alpha_lp, m_sweep, min_stabilizing_horizon, region_area, stability_region,
    AlphaQuery, ClosedFormOptions, Kl0Beta, LpVariant, MRule,
};
use serde_json::json;

/// Largest closed-form/LP gap `oracle` accepts before reporting a failure.
const ORACLE_GAP_TOL: f64 = 1e-8;

#[derive(Parser, Debug)]
#[command(name = "mpclab", version, about = "Suboptimality bounds for multistep model predictive control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-form α for one (β, N, m, ω).
    Alpha {
        #[command(flatten)]
        beta: BetaArgs,
        #[command(flatten)]
        query: QueryArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// LP optimum for every oracle variant and its gap to the closed form.
    Oracle {
        #[command(flatten)]
        beta: BetaArgs,
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long, value_enum, default_value_t = VariantArg::All)]
        variant: VariantArg,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// α for m = 1..N-1.
    SweepM {
        #[command(flatten)]
        beta: BetaArgs,
        #[arg(long = "N")]
        horizon: usize,
        #[arg(long, default_value_t = 1.0)]
        omega: f64,
        #[arg(long)]
        allow_non_submultiplicative: bool,
        #[command(flatten)]
        out: OutputArgs,
        #[command(flatten)]
        plot: PlotArgs,
    },
    /// Stability region of exponential controllability over a (C, σ) grid.
    Region {
        #[arg(long = "N")]
        horizon: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 1.0)]
        omega: f64,
        #[arg(long, default_value_t = 1.0)]
        c_min: f64,
        #[arg(long, default_value_t = 20.0)]
        c_max: f64,
        #[arg(long, default_value_t = 400)]
        c_count: usize,
        #[arg(long, default_value_t = 0.01)]
        sigma_min: f64,
        #[arg(long, default_value_t = 0.99)]
        sigma_max: f64,
        #[arg(long, default_value_t = 400)]
        sigma_count: usize,
        #[command(flatten)]
        out: OutputArgs,
        #[command(flatten)]
        plot: PlotArgs,
    },
    /// Smallest stabilizing N for one-step finite-time controllability.
    MinHorizon {
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value_t = 1.0)]
        omega: f64,
        /// A fixed control horizon, or `half` for m = ⌊N/2⌋.
        #[arg(long = "m", default_value = "1")]
        m_rule: String,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Closed-loop runs from an experiment config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed of a random schedule.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        epsilon: Option<f64>,
        /// Directory for per-run records; the summary goes to stdout otherwise.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Runs the invariant suite and prints a pass/fail table.
    Verify,
}

#[derive(Args, Debug)]
struct BetaArgs {
    #[arg(long, value_enum)]
    beta: Option<BetaKind>,
    /// Overshoot of exponential controllability.
    #[arg(long = "C")]
    overshoot: Option<f64>,
    /// Decay rate of exponential controllability.
    #[arg(long)]
    sigma: Option<f64>,
    /// Finite-time coefficients `c_0,c_1,…`.
    #[arg(long = "c", value_delimiter = ',')]
    coeffs: Vec<f64>,
    /// JSON file holding a controllability function.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct QueryArgs {
    #[arg(long = "N")]
    horizon: usize,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 1.0)]
    omega: f64,
    /// Evaluate the closed form as a lower bound when β is not
    /// submultiplicative.
    #[arg(long)]
    allow_non_submultiplicative: bool,
}

#[derive(Args, Debug)]
struct OutputArgs {
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PlotArgs {
    /// Also write a gnuplot script that plots the CSV output.
    #[arg(long)]
    gnuplot: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum BetaKind {
    Exp,
    Finite,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    All,
    Full,
    Reduced,
    Relaxed,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Core(mpclab::Error),
    Io(PathBuf, std::io::Error),
    Verification(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(..) => 1,
            CliError::Core(e) if e.is_numerical() => 2,
            CliError::Core(_) => 1,
            CliError::Verification(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Core(e @ mpclab::Error::NotSubmultiplicative { .. }) => {
                write!(f, "{e} (--allow-non-submultiplicative evaluates it as a lower bound)")
            }
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(path, e) => write!(f, "{}: {e}", path.display()),
            CliError::Verification(msg) => write!(f, "verification failed: {msg}"),
        }
    }
}

impl From<mpclab::Error> for CliError {
    fn from(e: mpclab::Error) -> Self {
        CliError::Core(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

impl BetaArgs {
    fn resolve(&self) -> CliResult<Kl0Beta> {
        if let Some(path) = &self.config {
            if self.beta.is_some() {
                return Err(CliError::Usage("--config and --beta are mutually exclusive".into()));
            }
            let spec: BetaSpec = serde_json::from_str(&read_file(path)?)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            return Ok(Kl0Beta::try_from(spec)?);
        }
        match self.beta {
            Some(BetaKind::Exp) => {
                let (Some(c), Some(s)) = (self.overshoot, self.sigma) else {
                    return Err(CliError::Usage("--beta exp needs --C and --sigma".into()));
                };
                Ok(Kl0Beta::exponential(c, s)?)
            }
            Some(BetaKind::Finite) => {
                if self.coeffs.is_empty() {
                    return Err(CliError::Usage("--beta finite needs --c".into()));
                }
                Ok(Kl0Beta::try_from(BetaSpec::Finite { c: self.coeffs.clone() })?)
            }
            None => Err(CliError::Usage("give --beta exp|finite or --config".into())),
        }
    }
}

impl QueryArgs {
    fn build(&self, beta: Kl0Beta) -> CliResult<AlphaQuery> {
        Ok(AlphaQuery::new(beta, self.horizon, self.m, self.omega)?)
    }

    fn options(&self) -> ClosedFormOptions {
        ClosedFormOptions {
            allow_non_submultiplicative: self.allow_non_submultiplicative,
        }
    }
}

impl OutputArgs {
    fn emit(&self, text: &str) -> CliResult<()> {
        match &self.output {
            Some(path) => write_file(path, text),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

fn json_string(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values serialize");
    s.push('\n');
    s
}

fn variant_name(v: LpVariant) -> &'static str {
    match v {
        LpVariant::Full => "full",
        LpVariant::Reduced => "reduced",
        LpVariant::Relaxed => "relaxed",
    }
}

fn cmd_alpha(beta: &BetaArgs, query: &QueryArgs, out: &OutputArgs) -> CliResult<()> {
    let q = query.build(beta.resolve()?)?;
    let r = alpha_closed_form_with(&q, query.options())?;
    let text = match out.format {
        None => {
            let mut line = format_float(r.alpha);
            if r.saturated {
                line.push_str(" (saturated)");
            }
            if r.lower_bound_only {
                line.push_str(" (lower bound)");
            }
            line + "\n"
        }
        Some(Format::Csv) => format!(
            "alpha,saturated,lower_bound_only\n{},{},{}\n",
            format_float(r.alpha),
            r.saturated,
            r.lower_bound_only
        ),
        Some(Format::Json) => json_string(&json!({
            "beta": BetaSpec::from(q.beta.clone()),
            "N": q.horizon, "m": q.control_horizon, "omega": q.omega,
            "alpha": r.alpha, "saturated": r.saturated, "lower_bound_only": r.lower_bound_only,
        })),
    };
    out.emit(&text)
}

fn cmd_oracle(beta: &BetaArgs, query: &QueryArgs, variant: VariantArg, out: &OutputArgs) -> CliResult<()> {
    let q = query.build(beta.resolve()?)?;
    let closed = alpha_closed_form_with(&q, query.options())?;
    let variants: Vec<LpVariant> = match variant {
        VariantArg::All => LpVariant::ALL.to_vec(),
        VariantArg::Full => vec![LpVariant::Full],
        VariantArg::Reduced => vec![LpVariant::Reduced],
        VariantArg::Relaxed => vec![LpVariant::Relaxed],
    };
    let mut rows = Vec::new();
    for v in variants {
        let lp = alpha_lp(&q, v)?;
        rows.push((v, lp.alpha, (lp.alpha - closed.alpha).abs()));
    }
    let text = match out.format {
        None => rows.iter().fold(String::new(), |mut s, (v, a, gap)| {
            writeln!(s, "{:<8} {a:.6}  gap {gap:.2e}  (closed form {:.6})", variant_name(*v), closed.alpha).unwrap();
            s
        }),
        Some(Format::Csv) => rows.iter().fold(String::from("variant,alpha_lp,alpha_closed,gap\n"), |mut s, (v, a, gap)| {
            writeln!(
                s,
                "{},{},{},{}",
                variant_name(*v),
                format_float(*a),
                format_float(closed.alpha),
                format_float(*gap)
            )
            .unwrap();
            s
        }),
        Some(Format::Json) => json_string(&json!(rows
            .iter()
            .map(|(v, a, gap)| json!({
                "variant": variant_name(*v), "alpha_lp": a, "alpha_closed": closed.alpha, "gap": gap,
            }))
            .collect::<Vec<_>>())),
    };
    out.emit(&text)?;
    let worst = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    // A lower-bound-only closed form may legitimately sit below the LP.
    if worst > ORACLE_GAP_TOL && !closed.lower_bound_only {
        return Err(CliError::Verification(format!("closed-form gap {worst:.2e} exceeds {ORACLE_GAP_TOL:e}")));
    }
    Ok(())
}

fn plot_script(plot: &PlotArgs, out: &OutputArgs, body: impl FnOnce(&str) -> String) -> CliResult<()> {
    let Some(script) = &plot.gnuplot else {
        return Ok(());
    };
    let data = match (&out.output, out.format) {
        (Some(path), None | Some(Format::Csv)) => path.display().to_string(),
        _ => return Err(CliError::Usage("--gnuplot needs CSV written to --output".into())),
    };
    write_file(script, &body(&data.replace('\'', "''")))
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep_m(
    beta: &BetaArgs,
    horizon: usize,
    omega: f64,
    allow: bool,
    out: &OutputArgs,
    plot: &PlotArgs,
) -> CliResult<()> {
    let beta = beta.resolve()?;
    let opts = ClosedFormOptions {
        allow_non_submultiplicative: allow,
    };
    let rows = m_sweep(&beta, horizon, omega, opts)?;
    let text = match out.format {
        Some(Format::Json) => json_string(&json!({
            "beta": BetaSpec::from(beta), "N": horizon, "omega": omega,
            "rows": rows.iter().map(|(m, a)| json!({"m": m, "alpha": a})).collect::<Vec<_>>(),
        })),
        _ => rows.iter().fold(String::from("m,alpha\n"), |mut s, (m, a)| {
            writeln!(s, "{m},{}", format_float(*a)).unwrap();
            s
        }),
    };
    out.emit(&text)?;
    plot_script(plot, out, |data| {
        format!(
            "set datafile separator ','\nset key autotitle columnhead\nset xlabel 'm'\nset ylabel 'alpha'\n\
             set title 'N = {horizon}, omega = {omega}'\nplot '{data}' using 1:2 with linespoints title 'alpha'\n\
             pause mouse close\n"
        )
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_region(
    horizon: usize,
    m: usize,
    omega: f64,
    c_axis: (f64, f64, usize),
    sigma_axis: (f64, f64, usize),
    out: &OutputArgs,
    plot: &PlotArgs,
) -> CliResult<()> {
    if c_axis.2 == 0 || sigma_axis.2 == 0 {
        return Err(CliError::Usage("grid counts must be positive".into()));
    }
    let cs = linspace(c_axis.0, c_axis.1, c_axis.2);
    let ss = linspace(sigma_axis.0, sigma_axis.1, sigma_axis.2);
    let grid = stability_region(horizon, m, omega, &cs, &ss)?;
    let area = region_area(&grid);
    let text = match out.format {
        Some(Format::Json) => json_string(&json!({ "grid": grid, "area": area, "stable_cells": grid.stable_count() })),
        _ => grid.rows().fold(String::from("C,sigma,alpha,stable\n"), |mut s, (c, sg, a, st)| {
            writeln!(s, "{},{},{},{}", format_float(c), format_float(sg), format_float(a), u8::from(st)).unwrap();
            s
        }),
    };
    out.emit(&text)?;
    let summary = format!(
        "area {} ({} of {} cells stable)",
        format_float(area),
        grid.stable_count(),
        grid.len()
    );
    // Keep stdout parseable when the grid itself goes there.
    if out.output.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    plot_script(plot, out, |data| {
        format!(
            "set datafile separator ','\nset key autotitle columnhead\nset xlabel 'sigma'\nset ylabel 'C'\n\
             set title 'stability region, N = {horizon}, m = {m}, omega = {omega}'\n\
             plot '{data}' using 2:($4 == 1 ? $1 : 1/0) with points pt 5 ps 0.3 title 'alpha >= 0'\n\
             pause mouse close\n"
        )
    })
}

fn parse_m_rule(s: &str) -> CliResult<MRule> {
    if s.eq_ignore_ascii_case("half") {
        return Ok(MRule::HalfN);
    }
    s.parse()
        .map(MRule::Fixed)
        .map_err(|_| CliError::Usage(format!("--m must be a positive integer or `half`, got {s:?}")))
}

fn cmd_min_horizon(gamma: f64, omega: f64, m_rule: &str, out: &OutputArgs) -> CliResult<()> {
    let rule = parse_m_rule(m_rule)?;
    let r = min_stabilizing_horizon(gamma, omega, rule)?;
    let bound = r.bound_value.map_or_else(|| "none".to_string(), format_float);
    let text = match out.format {
        None => format!(
            "N_min = {}\nbound = {bound}\nalpha(N_min) = {}\n",
            r.n_min,
            format_float(r.alpha_at_n_min)
        ),
        Some(Format::Csv) => format!(
            "gamma,omega,m,n_min,bound,alpha_at_n_min\n{},{},{m_rule},{},{},{}\n",
            format_float(gamma),
            format_float(omega),
            r.n_min,
            r.bound_value.map_or_else(String::new, format_float),
            format_float(r.alpha_at_n_min)
        ),
        Some(Format::Json) => json_string(&serde_json::to_value(&r).expect("search result serializes")),
    };
    out.emit(&text)
}

fn cmd_simulate(
    config: &Path,
    seed: Option<u64>,
    epsilon: Option<f64>,
    output: Option<&Path>,
    format: Option<Format>,
) -> CliResult<()> {
    let mut cfg = ExperimentConfig::from_json(&read_file(config)?)?;
    if let Some(s) = seed {
        match &mut cfg.schedule.rule {
            ScheduleRule::Random { seed } => *seed = s,
            _ => return Err(CliError::Usage("--seed applies to random schedules only".into())),
        }
    }
    if let Some(e) = epsilon {
        if !(e >= 0.0) {
            return Err(CliError::Usage(format!("--epsilon must be nonnegative, got {e}")));
        }
        cfg.epsilon = e;
    }
    let runs = cfg.run()?;
    let mut summary = String::from("run,segments,alpha_min,total_cost,final_norm,certified\n");
    for (i, run) in runs.iter().enumerate() {
        let last = run.states.last().map_or(0.0, |x| x.iter().map(|v| v * v).sum::<f64>().sqrt());
        writeln!(
            summary,
            "{i},{},{},{},{},{}",
            run.segments(),
            run.alpha_min.map_or_else(String::new, format_float),
            format_float(run.total_cost()),
            format_float(last),
            run.certified
        )
        .unwrap();
    }
    let Some(dir) = output else {
        print!("{summary}");
        return Ok(());
    };
    fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.to_path_buf(), e))?;
    for (i, run) in runs.iter().enumerate() {
        let (name, body) = match format {
            Some(Format::Json) => (format!("run_{i:04}.json"), run_to_json(run) + "\n"),
            _ => (format!("run_{i:04}.csv"), run_to_csv(run)),
        };
        write_file(&dir.join(name), &body)?;
    }
    write_file(&dir.join("summary.csv"), &summary)?;
    println!("{} runs written to {}", runs.len(), dir.display());
    Ok(())
}

fn cmd_verify() -> CliResult<()> {
    let outcomes = invariant_suite();
    let width = outcomes.iter().map(|o| o.name.chars().count()).max().unwrap_or(0);
    for o in &outcomes {
        let pad = width - o.name.chars().count();
        println!(
            "{}{}  {}  {}",
            o.name,
            " ".repeat(pad),
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    if all_passed(&outcomes) {
        Ok(())
    } else {
        let failed = outcomes.iter().filter(|o| !o.passed).count();
        Err(CliError::Verification(format!("{failed} of {} checks failed", outcomes.len())))
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("MPCLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("MPCLAB_THREADS must be a nonnegative integer, got {raw:?}")))?;
    if n > 0 {
        // Fails only if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match cli.command {
        Command::Alpha { beta, query, out } => cmd_alpha(&beta, &query, &out),
        Command::Oracle {
            beta,
            query,
            variant,
            out,
        } => cmd_oracle(&beta, &query, variant, &out),
        Command::SweepM {
            beta,
            horizon,
            omega,
            allow_non_submultiplicative,
            out,
            plot,
        } => cmd_sweep_m(&beta, horizon, omega, allow_non_submultiplicative, &out, &plot),
        Command::Region {
            horizon,
            m,
            omega,
            c_min,
            c_max,
            c_count,
            sigma_min,
            sigma_max,
            sigma_count,
            out,
            plot,
        } => cmd_region(
            horizon,
            m,
            omega,
            (c_min, c_max, c_count),
            (sigma_min, sigma_max, sigma_count),
            &out,
            &plot,
        ),
        Command::MinHorizon { gamma, omega, m_rule, out } => cmd_min_horizon(gamma, omega, &m_rule, &out),
        Command::Simulate {
            config,
            seed,
            epsilon,
            output,
            format,
        } => cmd_simulate(&config, seed, epsilon, output.as_deref(), format),
        Command::Verify => cmd_verify(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mpclab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
