mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use extraction_game::dynamics::{
    classify_multi, GreedyPopulation, MultiPopulation, OutcomeClass, RateParams, Rk4,
};
use extraction_game::equilibrium::{symmetric_equilibrium, EquilibriumRecord};
use extraction_game::oracles::{
    random_start, run_all, InstanceGenerator, SuiteSizes, DEFAULT_SEED,
};
use extraction_game::sweep::{
    fmt_num, limits_table, render_record, round9, sweep_output, Axis, Format, Param, Params,
    SweepSpec, LIMIT_TABLE_MS,
};
use extraction_game::Error;

use config::Config;

#[derive(Parser)]
#[command(
    name = "extraction",
    version,
    about = "Equilibria, sweeps and simulations of the resource-extraction game"
)]
struct Cli {
    /// Seed for random starts and verification instances.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (stdout if omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format: csv or json.
    #[arg(long, global = true)]
    format: Option<Format>,
    /// Flat key = value file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Symmetric Nash equilibrium of one game instance.
    Equilibrium(InstanceArgs),
    /// Equilibria over a 1-D or 2-D parameter grid.
    Sweep(SweepArgs),
    /// Integrate the population dynamics at fixed extraction rates.
    Simulate(SimulateArgs),
    /// Large-M limits and the finite-M table.
    Limits(InstanceArgs),
    /// Run every numerical oracle; exit 1 if any fails.
    Verify,
}

#[derive(Args, Default)]
struct InstanceArgs {
    #[arg(long = "M")]
    m: Option<usize>,
    #[arg(long = "dSP0", allow_negative_numbers = true)]
    d_sp0: Option<f64>,
    #[arg(long = "dRT0", allow_negative_numbers = true)]
    d_rt0: Option<f64>,
    #[arg(long = "dTR1", allow_negative_numbers = true)]
    d_tr1: Option<f64>,
    #[arg(long = "dPS1", allow_negative_numbers = true)]
    d_ps1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    /// name:min:max:steps with name one of dSP0, dRT0, dTR1, dPS1, alpha, theta, M.
    #[arg(long, allow_hyphen_values = true)]
    axis1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    axis2: Option<String>,
    #[command(flatten)]
    fixed: InstanceArgs,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Total greedy extraction, split evenly over the M greedy populations.
    #[arg(long, allow_negative_numbers = true)]
    abar: Option<f64>,
    /// Comma-separated per-population rates; overrides --abar and --M.
    #[arg(long, allow_hyphen_values = true)]
    rates: Option<String>,
    /// Restoration rate of each greedy population.
    #[arg(long = "theta-i", allow_negative_numbers = true)]
    theta_i: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    eps: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    dt: Option<f64>,
    #[arg(long = "t-end", allow_negative_numbers = true)]
    t_end: Option<f64>,
    /// Keep every k-th step of the trajectory.
    #[arg(long = "record-every")]
    record_every: Option<usize>,
    /// Comma-separated initial state x,x1..xM,n (random interior if omitted).
    #[arg(long)]
    start: Option<String>,
}

/// Failure with its exit code: 1 verification, 2 input, 3 numerics.
#[derive(Debug)]
enum Failure {
    Verify(String),
    Input(String),
    Numeric(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Verify(_) => 1,
            Failure::Input(_) => 2,
            Failure::Numeric(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Verify(m) | Failure::Input(m) | Failure::Numeric(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NegativeRadicand(_) | Error::NonFinite { .. } => Failure::Numeric(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<String> for Failure {
    fn from(s: String) -> Self {
        Failure::Input(s)
    }
}

type CliResult<T> = Result<T, Failure>;

struct Globals {
    seed: u64,
    out: Option<PathBuf>,
    format: Format,
    config: Config,
}

impl Globals {
    fn emit(&self, text: &str) -> CliResult<()> {
        match &self.out {
            Some(path) => std::fs::write(path, text)
                .map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display()))),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout
                    .write_all(text.as_bytes())
                    .and_then(|_| stdout.flush())
                    .map_err(|e| Failure::Input(format!("cannot write to stdout: {e}")))
            }
        }
    }
}

fn resolve_params(args: &InstanceArgs, cfg: &Config) -> CliResult<Params> {
    let mut p = Params::default();
    let flags = [
        (Param::DSp0, args.d_sp0),
        (Param::DRt0, args.d_rt0),
        (Param::DTr1, args.d_tr1),
        (Param::DPs1, args.d_ps1),
        (Param::Alpha, args.alpha),
        (Param::Theta, args.theta),
        (Param::M, args.m.map(|m| m as f64)),
    ];
    for (param, flag) in flags {
        if let Some(v) = cfg.pick(flag, param.as_str())? {
            p.set(param, v)?;
        }
    }
    Ok(p)
}

fn parse_list(s: &str, what: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Failure::Input(format!("bad number '{t}' in --{what}")))
        })
        .collect()
}

fn cmd_equilibrium(g: &Globals, args: &InstanceArgs) -> CliResult<()> {
    let game = resolve_params(args, &g.config)?.game()?;
    let eq = symmetric_equilibrium(&game)?;
    g.emit(&render_record(
        g.format,
        &EquilibriumRecord::new(&game, &eq),
    ))
}

fn cmd_sweep(g: &Globals, args: &SweepArgs) -> CliResult<()> {
    let fixed = resolve_params(&args.fixed, &g.config)?;
    let axis1: String = g
        .config
        .pick(args.axis1.clone(), "axis1")?
        .ok_or_else(|| Failure::Input("sweep needs --axis1 name:min:max:steps".into()))?;
    let axis1: Axis = axis1.parse()?;
    let axis2 = g
        .config
        .pick(args.axis2.clone(), "axis2")?
        .map(|s: String| s.parse::<Axis>())
        .transpose()?;
    let spec = SweepSpec::new(axis1, axis2, fixed)?;
    g.emit(&sweep_output(&spec, g.format)?)
}

fn cmd_limits(g: &Globals, args: &InstanceArgs) -> CliResult<()> {
    let params = resolve_params(args, &g.config)?;
    g.emit(&limits_table(params, &LIMIT_TABLE_MS)?.render(g.format))
}

fn prediction_fields(class: &OutcomeClass) -> String {
    match class {
        OutcomeClass::Sustained { x_star, n_star } => {
            format!(
                "sustained,x_star={},n_star={}",
                fmt_num(*x_star),
                fmt_num(*n_star)
            )
        }
        OutcomeClass::OscillatingToc { closed_orbits } => {
            format!("oscillating_toc,closed_orbits={closed_orbits}")
        }
        OutcomeClass::Collapse => "collapse".to_string(),
        OutcomeClass::LineSegment { n_upper } => {
            format!("line_segment,n_upper={}", fmt_num(*n_upper))
        }
    }
}

fn cmd_simulate(g: &Globals, args: &SimulateArgs) -> CliResult<()> {
    let cfg = &g.config;
    let params = resolve_params(&args.instance, cfg)?;
    let policy = params.policy()?;
    let theta_i = cfg.pick(args.theta_i, "theta-i")?.unwrap_or(1.0);
    let rates: Vec<f64> = match cfg.pick(args.rates.clone(), "rates")? {
        Some(list) => parse_list(&list, "rates")?,
        None => {
            let abar = cfg.pick(args.abar, "abar")?.unwrap_or(0.0);
            vec![abar / params.m.max(1) as f64; params.m]
        }
    };
    let m = rates.len();
    let rate_params = RateParams::new(params.alpha, params.theta)
        .with_eps(cfg.pick(args.eps, "eps")?.unwrap_or(1.0))
        .with_greedy(
            rates
                .iter()
                .map(|&a| GreedyPopulation::new(a, theta_i))
                .collect(),
        );
    let sys = MultiPopulation::new(&policy, &rate_params)?;
    let rk = Rk4::new(
        cfg.pick(args.dt, "dt")?.unwrap_or(0.01),
        cfg.pick(args.t_end, "t-end")?.unwrap_or(2000.0),
    )
    .recording_every(cfg.pick(args.record_every, "record-every")?.unwrap_or(100));
    let start = match cfg.pick(args.start.clone(), "start")? {
        Some(list) => parse_list(&list, "start")?,
        None => random_start(m, InstanceGenerator::new(g.seed).rng()),
    };
    let traj = sys.run(&rk, &start)?;
    let prediction = classify_multi(&rate_params, &policy)?;

    let mut columns = vec!["t".to_string(), "x".to_string()];
    columns.extend((1..=m).map(|i| format!("x{i}")));
    columns.push("n".to_string());
    let final_t = *traj.times().last().unwrap_or(&0.0);
    let final_state = traj.final_state();

    let text = match g.format {
        Format::Csv => {
            let mut out = columns.join(",");
            out.push('\n');
            for (t, s) in traj.times().iter().zip(traj.states()) {
                let row: Vec<String> = std::iter::once(*t)
                    .chain(s.iter().copied())
                    .map(fmt_num)
                    .collect();
                out.push_str(&row.join(","));
                out.push('\n');
            }
            let fin: Vec<String> = columns
                .iter()
                .zip(std::iter::once(final_t).chain(final_state.iter().copied()))
                .map(|(c, v)| format!("{c}={}", fmt_num(v)))
                .collect();
            out.push_str(&format!("# final,{}\n", fin.join(",")));
            out.push_str(&format!("# predicted,{}\n", prediction_fields(&prediction)));
            out
        }
        Format::Json => {
            let rows: Vec<Value> = traj
                .times()
                .iter()
                .zip(traj.states())
                .map(|(t, s)| {
                    json!(std::iter::once(*t)
                        .chain(s.iter().copied())
                        .map(round9)
                        .collect::<Vec<_>>())
                })
                .collect();
            let fin: serde_json::Map<String, Value> = columns
                .iter()
                .zip(std::iter::once(final_t).chain(final_state.iter().copied()))
                .map(|(c, v)| (c.clone(), json!(round9(v))))
                .collect();
            let v = json!({
                "columns": columns,
                "rows": rows,
                "final": fin,
                "prediction": prediction,
            });
            let mut s = serde_json::to_string_pretty(&v).unwrap_or_default();
            s.push('\n');
            s
        }
    };
    g.emit(&text)
}

fn cmd_verify(g: &Globals) -> CliResult<()> {
    let reports = run_all(g.seed, SuiteSizes::default())?;
    let mut out = String::new();
    for r in &reports {
        out.push_str(&serde_json::to_string(r).unwrap_or_default());
        out.push('\n');
    }
    g.emit(&out)?;
    let failed: Vec<&str> = reports
        .iter()
        .filter(|r| !r.pass)
        .map(|r| r.name.as_str())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verify(format!(
            "oracles failed: {}",
            failed.join(", ")
        )))
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let globals = Globals {
        seed: config.pick(cli.seed, "seed")?.unwrap_or(DEFAULT_SEED),
        out: config.pick(cli.out, "out")?,
        format: config.pick(cli.format, "format")?.unwrap_or_default(),
        config,
    };
    match &cli.command {
        Command::Equilibrium(a) => cmd_equilibrium(&globals, a),
        Command::Sweep(a) => cmd_sweep(&globals, a),
        Command::Simulate(a) => cmd_simulate(&globals, a),
        Command::Limits(a) => cmd_limits(&globals, a),
        Command::Verify => cmd_verify(&globals),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
