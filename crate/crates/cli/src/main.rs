use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use specdec::experiments::{
    predictor_eval, processor_report, recovery_eval, sweep_latency, PredictorEvalConfig, RecoveryEvalConfig,
    SweepConfig, PREDICTOR_CSV_HEADER, RECOVERY_CSV_HEADER, SWEEP_CSV_HEADER,
};
use specdec::graph::BufferSpec;
use specdec::program::{builtin_program, parse_program, Builtin, BuiltinParams, Program};
use specdec::sim::{simulate, trace_csv, trace_svg, LatencyModel, Recovery, SimConfig, SpeculationMode};
use specdec::windowing::Strategy;

#[derive(Parser)]
#[command(name = "specdec", version, about = "Windowed decoding pipeline simulator with speculative dependency bits")]
struct Cli {
    /// Worker threads for experiment grids (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate one program and write the result JSON and traces.
    Run(RunArgs),
    /// Mean reaction time of repeated T gates over a latency grid.
    SweepLatency(SweepArgs),
    /// Accuracy of the boundary predictors against the reference matcher.
    PredictorEval(PredictorArgs),
    /// Decoder work of the recovery strategies on a zig-zag chain.
    RecoveryEval(RecoveryArgs),
    /// Decoder pool sizing heuristic and its runtime impact.
    Processors(ProcessorArgs),
}

#[derive(Args, Clone)]
struct ProgramSource {
    /// Program JSON file.
    #[arg(long, conflicts_with = "builtin")]
    program: Option<PathBuf>,
    /// repeated_t, msd_15to1, zigzag_chain or toffoli.
    #[arg(long)]
    builtin: Option<String>,
    /// Code distance for builtins.
    #[arg(long, default_value_t = 7)]
    d: u32,
    /// T gates (repeated_t) or cells (zigzag_chain).
    #[arg(long, default_value_t = 100)]
    count: usize,
}

impl ProgramSource {
    fn load(&self) -> Result<Program> {
        match (&self.program, &self.builtin) {
            (Some(path), _) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                parse_program(&text).with_context(|| format!("invalid program {}", path.display()))
            }
            (None, Some(name)) => {
                let b: Builtin = name.parse()?;
                Ok(builtin_program(b, BuiltinParams::new(self.d, self.count))?)
            }
            (None, None) => bail!("give --program FILE or --builtin NAME"),
        }
    }
}

/// Simulation options. Flags override values from `--config`, which
/// override the defaults.
#[derive(Args, Clone, Default)]
struct SimArgs {
    /// JSON file with any of the long option names (underscores or dashes) as keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    strategy: Option<String>,
    /// off, stochastic (alias on) or integrated.
    #[arg(long)]
    spec: Option<String>,
    #[arg(long)]
    accuracy: Option<f64>,
    #[arg(long)]
    accuracy_adjacent: Option<f64>,
    /// Rounds from a source cell's data to its speculated bits.
    #[arg(long)]
    t_spec: Option<u64>,
    /// fixed:C, fixed:Kd, linear:R or empirical:FILE.
    #[arg(long)]
    latency: Option<String>,
    #[arg(long)]
    recovery: Option<String>,
    /// N, auto or unlimited.
    #[arg(long)]
    processors: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Physical error rate for integrated speculation.
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    max_rounds: Option<u64>,
    /// Probability that a conditional S correction is applied.
    #[arg(long)]
    s_probability: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Processors {
    Unlimited,
    Auto,
    Limit(usize),
}

fn parse_processors(s: &str) -> Result<Processors> {
    match s {
        "unlimited" => Ok(Processors::Unlimited),
        "auto" => Ok(Processors::Auto),
        n => Ok(Processors::Limit(n.parse().with_context(|| format!("bad --processors `{n}`"))?)),
    }
}

fn parse_latency(s: &str, d: u32) -> Result<LatencyModel> {
    if let Some(path) = s.strip_prefix("empirical:") {
        let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
        return Ok(LatencyModel::empirical_from_json(&text)?);
    }
    Ok(LatencyModel::parse(s, d)?)
}

impl SimArgs {
    fn file_config(&self) -> Result<serde_json::Map<String, Value>> {
        let Some(path) = &self.config else { return Ok(Default::default()) };
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let Value::Object(m) = v else { bail!("{}: expected a JSON object", path.display()) };
        Ok(m.into_iter().map(|(k, v)| (k.replace('-', "_"), v)).collect())
    }

    /// Merges flags over the config file into a full set of string options.
    fn merged(&self) -> Result<SimArgs> {
        let file = self.file_config()?;
        let s = |k: &str| -> Result<Option<String>> {
            Ok(match file.get(k) {
                None => None,
                Some(Value::String(x)) => Some(x.clone()),
                Some(Value::Number(n)) => Some(n.to_string()),
                Some(other) => bail!("config key `{k}`: unexpected value {other}"),
            })
        };
        let f = |k: &str| -> Result<Option<f64>> {
            match file.get(k) {
                None => Ok(None),
                Some(v) => v.as_f64().map(Some).with_context(|| format!("config key `{k}` must be a number")),
            }
        };
        let u = |k: &str| -> Result<Option<u64>> {
            match file.get(k) {
                None => Ok(None),
                Some(v) => v.as_u64().map(Some).with_context(|| format!("config key `{k}` must be an integer")),
            }
        };
        Ok(SimArgs {
            config: None,
            strategy: self.strategy.clone().or(s("strategy")?),
            spec: self.spec.clone().or(s("spec")?),
            accuracy: self.accuracy.or(f("accuracy")?),
            accuracy_adjacent: self.accuracy_adjacent.or(f("accuracy_adjacent")?),
            t_spec: self.t_spec.or(u("t_spec")?),
            latency: self.latency.clone().or(s("latency")?),
            recovery: self.recovery.clone().or(s("recovery")?),
            processors: self.processors.clone().or(s("processors")?),
            seed: self.seed.or(u("seed")?),
            p: self.p.or(f("p")?),
            max_rounds: self.max_rounds.or(u("max_rounds")?),
            s_probability: self.s_probability.or(f("s_probability")?),
        })
    }

    fn build(&self, d: u32) -> Result<(SimConfig, Processors)> {
        let m = self.merged()?;
        let mut c = SimConfig { latency: LatencyModel::Linear(1.0), ..SimConfig::default() };
        if let Some(x) = &m.strategy {
            c.strategy = x.parse().map_err(anyhow::Error::msg)?;
        }
        if let Some(x) = &m.spec {
            c.speculation = x.parse::<SpeculationMode>().map_err(anyhow::Error::msg)?;
        }
        if let Some(x) = m.accuracy {
            c.accuracy = x;
            c.accuracy_adjacent = c.accuracy_adjacent.min(x);
        }
        if let Some(x) = m.accuracy_adjacent {
            c.accuracy_adjacent = x;
        }
        if let Some(x) = m.t_spec {
            c.t_spec = x;
        }
        if let Some(x) = &m.latency {
            c.latency = parse_latency(x, d)?;
        }
        if let Some(x) = &m.recovery {
            c.recovery = x.parse::<Recovery>().map_err(anyhow::Error::msg)?;
        }
        if let Some(x) = m.seed {
            c.seed = x;
        }
        if let Some(x) = m.p {
            c.noise_p = x;
        }
        if let Some(x) = m.max_rounds {
            c.max_rounds = x;
        }
        if let Some(x) = m.s_probability {
            c.s_probability = x;
        }
        let procs = match &m.processors {
            None => Processors::Unlimited,
            Some(x) => parse_processors(x)?,
        };
        if let Processors::Limit(n) = procs {
            c.processors = Some(n);
        }
        c.validate()?;
        Ok((c, procs))
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: ProgramSource,
    #[command(flatten)]
    sim: SimArgs,
    /// Output directory for result.json, trace.csv and trace.svg.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 11)]
    d: u32,
    /// T gates per run.
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, value_delimiter = ',', default_value = "sliding,parallel,aligned")]
    strategies: Vec<String>,
    /// Speculation accuracies; `off` disables speculation.
    #[arg(long, value_delimiter = ',', default_value = "off,0.9,1.0")]
    accuracies: Vec<String>,
    /// Linear latency factors r.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.25,0.5,1,2,4")]
    rs: Vec<f64>,
    /// Number of seeds, starting at --seed.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.86)]
    accuracy_adjacent: f64,
    #[arg(long, default_value_t = 200_000)]
    max_rounds: u64,
    /// CSV output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PredictorArgs {
    #[arg(long, value_delimiter = ',', default_value = "13,17,21,25")]
    d: Vec<u32>,
    #[arg(long, default_value_t = 1e-3)]
    p: f64,
    #[arg(long, default_value_t = 10_000)]
    shots: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// future, past, left or right.
    #[arg(long, default_value = "future")]
    boundary: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RecoveryArgs {
    #[arg(long, default_value_t = 5)]
    d: u32,
    #[arg(long, default_value_t = 100)]
    windows: usize,
    /// Decode times in cycles of d rounds.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
    cycles: Vec<u64>,
    #[arg(long, default_value_t = 0.90)]
    accuracy: f64,
    #[arg(long, default_value_t = 0.86)]
    accuracy_adjacent: f64,
    #[arg(long, default_value_t = 10_000)]
    shots: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "sliding")]
    strategy: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProcessorArgs {
    #[command(flatten)]
    source: ProgramSource,
    #[command(flatten)]
    sim: SimArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(a: &RunArgs) -> Result<()> {
    let p = a.source.load()?;
    let (mut cfg, procs) = a.sim.build(p.distance)?;
    if procs == Processors::Auto {
        let report = processor_report(&p, &cfg)?;
        cfg.processors = Some(report.limit);
    }
    let r = simulate(&p, &cfg)?;
    let mut summary = r.summary_json();
    summary["strategy"] = Value::from(cfg.strategy.name());
    summary["latency"] = Value::from(cfg.latency.to_string());
    summary["processors"] = cfg.processors.map_or(Value::from("unlimited"), Value::from);
    let text = serde_json::to_string_pretty(&summary)? + "\n";
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        fs::write(dir.join("result.json"), serde_json::to_string_pretty(&r)? + "\n")?;
        fs::write(dir.join("trace.csv"), trace_csv(&r))?;
        fs::write(dir.join("trace.svg"), trace_svg(&r))?;
    }
    print!("{text}");
    if r.truncated {
        eprintln!("warning: simulation stopped at the round horizon; the decoder backlog did not clear");
    }
    Ok(())
}

fn sweep(a: &SweepArgs) -> Result<()> {
    let strategies = a
        .strategies
        .iter()
        .map(|s| s.parse::<Strategy>().map_err(anyhow::Error::msg))
        .collect::<Result<Vec<_>>>()?;
    let accuracies = a
        .accuracies
        .iter()
        .map(|s| match s.as_str() {
            "off" => Ok(None),
            x => x.parse::<f64>().map(Some).with_context(|| format!("bad accuracy `{x}`")),
        })
        .collect::<Result<Vec<_>>>()?;
    let cfg = SweepConfig {
        d: a.d,
        t_count: a.count,
        strategies,
        accuracies,
        latency_factors: a.rs.clone(),
        seeds: (a.seed..a.seed + a.seeds).collect(),
        base: SimConfig { accuracy_adjacent: a.accuracy_adjacent, max_rounds: a.max_rounds, ..SimConfig::default() },
    };
    let rows = sweep_latency(&cfg)?;
    let mut text = format!("{SWEEP_CSV_HEADER}\n");
    for r in rows {
        text += &r.csv();
        text.push('\n');
    }
    emit(a.out.as_deref(), &text)
}

fn predictors(a: &PredictorArgs) -> Result<()> {
    let boundary = match a.boundary.as_str() {
        "future" => BufferSpec::FUTURE,
        "past" => BufferSpec::PAST,
        "left" => BufferSpec::LEFT,
        "right" => BufferSpec::RIGHT,
        x => bail!("unknown boundary `{x}`"),
    };
    let cfg = PredictorEvalConfig {
        distances: a.d.clone(),
        p: a.p,
        shots: a.shots,
        seed: a.seed,
        boundary,
        ..PredictorEvalConfig::default()
    };
    let mut text = format!("{PREDICTOR_CSV_HEADER}\n");
    for r in predictor_eval(&cfg)? {
        text += &r.csv();
        text.push('\n');
    }
    emit(a.out.as_deref(), &text)
}

fn recovery(a: &RecoveryArgs) -> Result<()> {
    let cfg = RecoveryEvalConfig {
        d: a.d,
        windows: a.windows,
        decode_cycles: a.cycles.clone(),
        accuracy: a.accuracy,
        accuracy_adjacent: a.accuracy_adjacent,
        shots: a.shots,
        seed: a.seed,
        strategy: a.strategy.parse().map_err(anyhow::Error::msg)?,
    };
    let mut text = format!("{RECOVERY_CSV_HEADER}\n");
    for r in recovery_eval(&cfg)? {
        text += &r.csv();
        text.push('\n');
    }
    emit(a.out.as_deref(), &text)
}

fn processors(a: &ProcessorArgs) -> Result<()> {
    let p = a.source.load()?;
    let (cfg, _) = a.sim.build(p.distance)?;
    let report = processor_report(&p, &cfg)?;
    emit(a.out.as_deref(), &(serde_json::to_string_pretty(&report)? + "\n"))
}

fn dispatch(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match &cli.cmd {
        Cmd::Run(a) => run(a),
        Cmd::SweepLatency(a) => sweep(a),
        Cmd::PredictorEval(a) => predictors(a),
        Cmd::RecoveryEval(a) => recovery(a),
        Cmd::Processors(a) => processors(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
