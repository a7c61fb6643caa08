//! Command-line front end.
//!
//! ```text
//! slicesched train      --out DIR [--config FILE] [--set KEY=VALUE]... [--agent a2c|dqn]
//! slicesched compare    --out DIR [--config FILE] [--set KEY=VALUE]... [--policies drastic,rr,pf,dqn]
//!                       [--checkpoint [POLICY=]FILE]...
//! slicesched experiment --out DIR --name two-step-dex|dex-sensitivity|drl-compare
//!                       [--config FILE] [--set KEY=VALUE]...
//! ```
//!
//! Every command writes `config.txt` (the resolved config, loadable with
//! `--config`) and `manifest.json` into `--out`, plus:
//!
//! | command | files |
//! |---|---|
//! | train | `training.csv`, `checkpoint.bin`, `episode_trace.csv`, `<run>-returns.svg`, `<run>-backlog.svg`, `<run>-drift.svg` |
//! | compare | `reliability.csv`, `reliability_by_seed.csv`, `cdf.csv`, `returns.csv`, `<run>-cdf.svg`, `<run>-returns.svg` |
//! | two-step-dex | `training.csv`, `step_response.csv`, `step_profile.csv`, `episode_trace.csv`, `<run>-returns.svg`, `<run>-step.svg` |
//! | dex-sensitivity | `training.csv`, `sensitivity.csv`, `<run>-returns.svg`, `<run>-sensitivity.svg` |
//! | drl-compare | `training_drastic.csv`, `training_dqn.csv`, `returns.csv`, `<run>-returns.svg` |
//!
//! Exit codes: 0 success, 1 usage error, 2 invalid config or checkpoint,
//! 3 runtime failure.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::agents::{build_policy, load_policy, Policy, PolicyKind};
use crate::config::{load_config, ScenarioConfig};
use crate::error::{Error, Result};
use crate::experiments::{
    reliability_by_seed, run_dex_sensitivity, run_drl_compare, run_two_step, Experiment, SeedSweep,
    SENSITIVITY_EVAL_EPISODES, TWO_STEP_EVAL_EPISODES,
};
use crate::metrics::{
    cdf_csv, compare_policies, comparison_returns_csv, moving_average, reliability_csv, sensitivity_csv,
    slot_csv, slot_profile, step_response_csv, training_csv,
};
use crate::plot::{cdf_chart, render_svg, returns_chart, sensitivity_chart, ChartKind, ChartSpec, Series};
use crate::sim::{evaluate, train_policy, EpisodeRecord};

#[derive(Debug, Parser)]
#[command(name = "slicesched", version, about = "PRB slicing simulator: train, compare and run experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a learned scheduler and write its checkpoint and diagnostics.
    Train(TrainArgs),
    /// Evaluate several schedulers on identical traffic and fading.
    Compare(CompareArgs),
    /// Run a preconfigured experiment.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Scenario config file; defaults apply when omitted.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Override one config key, applied after --config.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AgentArg {
    #[value(alias = "drastic")]
    A2c,
    Dqn,
}

impl AgentArg {
    pub fn kind(self) -> PolicyKind {
        match self {
            AgentArg::A2c => PolicyKind::A2c,
            AgentArg::Dqn => PolicyKind::Dqn,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, default_value = "a2c")]
    pub agent: AgentArg,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated policies among drastic, dqn, rr, pf.
    #[arg(long, value_delimiter = ',', default_value = "drastic,rr,pf")]
    pub policies: Vec<String>,
    /// Checkpoint of a learned policy, as POLICY=FILE or a bare FILE that
    /// goes to the first learned policy still without one.
    #[arg(long, value_name = "[POLICY=]FILE")]
    pub checkpoint: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// two-step-dex, dex-sensitivity or drl-compare.
    #[arg(long)]
    pub name: String,
}

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Usage(_) | Error::UnknownExperiment(_) => 1,
        Error::ConfigParse { .. } | Error::ConfigValidation(_) | Error::Checkpoint(_) => 2,
        _ => 3,
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(manifest) => {
            println!("{} -> {}", manifest.run_id, manifest.out_dir);
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// What a command did and where its outputs went.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub run_id: String,
    pub command: String,
    pub arguments: Vec<(String, String)>,
    pub code_version: String,
    pub seed: u64,
    pub out_dir: String,
    /// Resolved config in the config-file format.
    pub config: String,
    /// File names relative to `out_dir`, in write order; the manifest
    /// itself comes last.
    pub outputs: Vec<String>,
}

/// Deterministic id from the command, its arguments and the resolved
/// config. `config` and `set` arguments are left out since the resolved
/// config already reflects them, so a rerun from `config.txt` keeps the id.
pub fn run_id(command: &str, arguments: &[(String, String)], cfg: &ScenarioConfig) -> String {
    let mut h = crc32fast::Hasher::new();
    h.update(command.as_bytes());
    for (k, v) in arguments.iter().filter(|(k, _)| k != "config" && k != "set") {
        h.update(k.as_bytes());
        h.update(b"=");
        h.update(v.as_bytes());
        h.update(b"\n");
    }
    h.update(cfg.to_config_string().as_bytes());
    format!("{command}-{:08x}", h.finalize())
}

struct Bundle {
    dir: PathBuf,
    manifest: RunManifest,
}

impl Bundle {
    fn create(dir: &Path, command: &str, arguments: Vec<(String, String)>, cfg: &ScenarioConfig) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let mut b = Self {
            dir: dir.to_path_buf(),
            manifest: RunManifest {
                run_id: run_id(command, &arguments, cfg),
                command: command.to_string(),
                arguments,
                code_version: env!("CARGO_PKG_VERSION").to_string(),
                seed: cfg.master_seed,
                out_dir: dir.display().to_string(),
                config: cfg.to_config_string(),
                outputs: Vec::new(),
            },
        };
        let text = b.manifest.config.clone();
        b.write("config.txt", &text)?;
        Ok(b)
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        std::fs::write(self.dir.join(name), contents)?;
        self.manifest.outputs.push(name.to_string());
        Ok(())
    }

    fn write_bytes(&mut self, name: &str, contents: &[u8]) -> Result<()> {
        std::fs::write(self.dir.join(name), contents)?;
        self.manifest.outputs.push(name.to_string());
        Ok(())
    }

    fn chart(&mut self, kind: &str, spec: &ChartSpec) -> Result<()> {
        let name = format!("{}-{kind}.svg", self.manifest.run_id);
        self.write(&name, &render_svg(spec)?)
    }

    fn finish(mut self) -> Result<RunManifest> {
        self.manifest.outputs.push("manifest.json".into());
        let json = serde_json::to_string_pretty(&self.manifest)
            .map_err(|e| Error::Invariant(format!("manifest serialization: {e}")))?;
        std::fs::write(self.dir.join("manifest.json"), json + "\n")?;
        Ok(self.manifest)
    }
}

fn resolve_config(common: &CommonArgs) -> Result<ScenarioConfig> {
    let base = match &common.config {
        Some(path) => load_config(path).map_err(|e| match e {
            Error::Io(io) => Error::ConfigValidation(format!("cannot read {}: {io}", path.display())),
            other => other,
        })?,
        None => ScenarioConfig::default(),
    };
    base.with_overrides(&common.set)
}

fn common_arguments(common: &CommonArgs) -> Vec<(String, String)> {
    let mut a = Vec::new();
    if let Some(c) = &common.config {
        a.push(("config".into(), c.display().to_string()));
    }
    for s in &common.set {
        a.push(("set".into(), s.clone()));
    }
    a
}

pub fn run(cli: &Cli) -> Result<RunManifest> {
    match &cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Experiment(a) => cmd_experiment(a),
    }
}

fn progress(label: &str, total: usize) -> impl FnMut(&EpisodeRecord) + '_ {
    move |r: &EpisodeRecord| {
        let done = r.episode as usize + 1;
        if done.is_multiple_of(50) || done == total {
            eprintln!("[{label}] episode {done}/{total} return {:.2}", r.episode_return);
        }
    }
}

fn training_charts(b: &mut Bundle, records: &[EpisodeRecord], window: usize) -> Result<()> {
    if records.is_empty() {
        return Ok(());
    }
    return_chart(b, records, window)?;
    let col = |f: fn(&EpisodeRecord) -> f64| records.iter().map(f).collect::<Vec<f64>>();
    let spec = ChartSpec::new(ChartKind::Line, "Mean backlog per user", "episode", "packets")
        .with_series(Series::indexed("eMBB", &col(|r| r.mean_backlog_embb)))
        .with_series(Series::indexed("HRLLC", &col(|r| r.mean_backlog_hrllc)));
    b.chart("backlog", &spec)?;
    let spec = ChartSpec::new(ChartKind::Line, "Mean Lyapunov drift per slot", "episode", "drift")
        .with_series(Series::indexed("eMBB", &col(|r| r.mean_drift_embb)))
        .with_series(Series::indexed("HRLLC", &col(|r| r.mean_drift_hrllc)))
        .with_ref_y(0.0, "0");
    b.chart("drift", &spec)
}

fn cmd_train(a: &TrainArgs) -> Result<RunManifest> {
    let cfg = resolve_config(&a.common)?;
    let kind = a.agent.kind();
    let mut args = common_arguments(&a.common);
    args.push(("agent".into(), kind.as_str().into()));
    let mut b = Bundle::create(&a.common.out, "train", args, &cfg)?;

    let run = train_policy(&cfg, build_policy(kind, &cfg), false, progress(kind.as_str(), cfg.episodes))?;
    b.write("training.csv", &training_csv(&run.records, cfg.eval.ma_window, kind == PolicyKind::Dqn)?)?;
    let bytes = run
        .policy
        .checkpoint()
        .ok_or_else(|| Error::Invariant("learned policy produced no checkpoint".into()))?;
    b.write_bytes("checkpoint.bin", &bytes)?;
    let mut policy = run.policy;
    let trace = evaluate(&cfg, policy.as_mut(), 0, 1, true)?;
    b.write("episode_trace.csv", &slot_csv(&trace[0], cfg.num_embb))?;
    training_charts(&mut b, &run.records, cfg.eval.ma_window)?;
    b.finish()
}

fn parse_policies(names: &[String]) -> Result<Vec<PolicyKind>> {
    let mut kinds = Vec::new();
    for n in names {
        let k = PolicyKind::parse(n.trim()).ok_or_else(|| Error::Usage(format!("unknown policy `{n}`")))?;
        if kinds.contains(&k) {
            return Err(Error::Usage(format!("policy `{n}` listed twice")));
        }
        kinds.push(k);
    }
    if kinds.is_empty() {
        return Err(Error::Usage("no policies given".into()));
    }
    Ok(kinds)
}

/// Matches `--checkpoint` values to the learned policies in `kinds`.
fn assign_checkpoints(kinds: &[PolicyKind], specs: &[String]) -> Result<Vec<Option<PathBuf>>> {
    let mut out: Vec<Option<PathBuf>> = vec![None; kinds.len()];
    for spec in specs {
        let named = spec
            .split_once('=')
            .and_then(|(name, path)| PolicyKind::parse(name).map(|k| (k, path)));
        let slot = match named {
            Some((k, path)) => {
                let i = kinds
                    .iter()
                    .position(|&x| x == k)
                    .ok_or_else(|| Error::Usage(format!("checkpoint for `{}` which is not compared", k.as_str())))?;
                (i, path)
            }
            None => {
                let i = (0..kinds.len())
                    .find(|&i| kinds[i].is_learned() && out[i].is_none())
                    .ok_or_else(|| Error::Usage(format!("no learned policy left for checkpoint `{spec}`")))?;
                (i, spec.as_str())
            }
        };
        out[slot.0] = Some(PathBuf::from(slot.1));
    }
    for (k, p) in kinds.iter().zip(&out) {
        if k.is_learned() && p.is_none() {
            return Err(Error::Checkpoint(format!("policy `{}` needs --checkpoint", k.as_str())));
        }
    }
    Ok(out)
}

fn seed_sweep_csv(s: &SeedSweep) -> String {
    let mut out = String::from("seed");
    for p in &s.policies {
        write!(out, ",{p}").unwrap();
    }
    out.push('\n');
    for (seed, row) in s.reliability.iter().enumerate() {
        write!(out, "{seed}").unwrap();
        for v in row {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

fn cmd_compare(a: &CompareArgs) -> Result<RunManifest> {
    let cfg = resolve_config(&a.common)?;
    let kinds = parse_policies(&a.policies)?;
    let checkpoints = assign_checkpoints(&kinds, &a.checkpoint)?;
    let mut policies: Vec<(String, Box<dyn Policy>)> = Vec::new();
    let mut args = common_arguments(&a.common);
    args.push((
        "policies".into(),
        kinds.iter().map(|k| k.as_str()).collect::<Vec<_>>().join(","),
    ));
    for (k, path) in kinds.iter().zip(&checkpoints) {
        let policy = match path {
            Some(p) => {
                let bytes = std::fs::read(p)
                    .map_err(|e| Error::Checkpoint(format!("cannot read {}: {e}", p.display())))?;
                args.push(("checkpoint".into(), format!("{}={}", k.as_str(), p.display())));
                load_policy(*k, &cfg, &bytes)?
            }
            None => build_policy(*k, &cfg),
        };
        policies.push((k.as_str().to_string(), policy));
    }
    let mut b = Bundle::create(&a.common.out, "compare", args, &cfg)?;

    let eval = reliability_by_seed(&cfg, &mut policies, cfg.eval.seeds, cfg.eval.episodes)?;
    let cmp = compare_policies(&eval.pooled, cfg.eval.ma_window, cfg.d_max_s)?;
    b.write("reliability.csv", &reliability_csv(&cmp, cfg.d_max_s, cfg.chi_h))?;
    b.write("reliability_by_seed.csv", &seed_sweep_csv(&eval.sweep))?;
    b.write("cdf.csv", &cdf_csv(&cmp))?;
    b.write("returns.csv", &comparison_returns_csv(&cmp))?;
    if cmp.cdfs.iter().any(|c| !c.is_empty()) {
        b.chart("cdf", &cdf_chart(&cmp, cfg.d_max_s, cfg.chi_h))?;
    }
    if !cmp.returns.is_empty() {
        b.chart("returns", &returns_chart(&cmp, "Evaluation return"))?;
    }
    for (p, r) in cmp.policies.iter().zip(&cmp.reliability) {
        eprintln!("{p}: reliability {r:.4}");
    }
    b.finish()
}

fn cmd_experiment(a: &ExperimentArgs) -> Result<RunManifest> {
    let exp = Experiment::parse(&a.name)?;
    let base = resolve_config(&a.common)?;
    let cfg = exp.config(&base);
    cfg.validate()?;
    let mut args = common_arguments(&a.common);
    args.push(("name".into(), exp.as_str().into()));
    let mut b = Bundle::create(&a.common.out, "experiment", args, &cfg)?;
    let window = cfg.eval.ma_window;
    match exp {
        Experiment::TwoStepDex => {
            let o = run_two_step(&cfg, TWO_STEP_EVAL_EPISODES)?;
            b.write("training.csv", &training_csv(&o.run.training.records, window, false)?)?;
            b.write("step_response.csv", &step_response_csv(&o.response))?;
            let profile = slot_profile(&o.run.eval, o.response.user, cfg.num_embb)?;
            let mut csv = String::from("slot,dxi,mean_arrivals,mean_prbs\n");
            for (t, p) in profile.iter().enumerate() {
                writeln!(csv, "{t},{},{},{}", p[0], p[1], p[2]).unwrap();
            }
            b.write("step_profile.csv", &csv)?;
            b.write("episode_trace.csv", &slot_csv(&o.run.eval[0], cfg.num_embb))?;
            return_chart(&mut b, &o.run.training.records, window)?;
            let pick = |i: usize| profile.iter().map(|p| p[i]).collect::<Vec<f64>>();
            let spec = ChartSpec::new(
                ChartKind::Line,
                format!("HRLLC user {} across a DXI step", o.response.user),
                "slot",
                "per-slot mean over evaluation episodes",
            )
            .with_series(Series::indexed("DXI", &pick(0)))
            .with_series(Series::indexed("arrivals", &pick(1)))
            .with_series(Series::indexed("PRBs", &pick(2)))
            .with_ref_x(cfg.dexterity.up_slot as f64, "step up")
            .with_ref_x(cfg.dexterity.down_slot as f64, "step down");
            b.chart("step", &spec)?;
            let r = &o.response;
            eprintln!(
                "arrival drop {:.4} (expected {:.4}), PRB change {:.4}",
                r.measured_drop(),
                r.expected_drop(),
                r.prb_change()
            );
        }
        Experiment::DexSensitivity => {
            let o = run_dex_sensitivity(&cfg, SENSITIVITY_EVAL_EPISODES)?;
            b.write("training.csv", &training_csv(&o.run.training.records, window, false)?)?;
            b.write("sensitivity.csv", &sensitivity_csv(&o.table))?;
            return_chart(&mut b, &o.run.training.records, window)?;
            b.chart("sensitivity", &sensitivity_chart(&o.table))?;
            eprintln!("rank correlation (DXI, PRBs) {:.4}", o.table.rank_correlation);
        }
        Experiment::DrlCompare => {
            let o = run_drl_compare(&cfg)?;
            b.write("training_drastic.csv", &training_csv(&o.a2c.records, window, false)?)?;
            b.write("training_dqn.csv", &training_csv(&o.dqn.records, window, true)?)?;
            b.write("returns.csv", &comparison_returns_csv(&o.comparison))?;
            if !o.comparison.returns.is_empty() {
                b.chart("returns", &returns_chart(&o.comparison, "Training return, A2C vs DQN"))?;
            }
        }
    }
    b.finish()
}

fn return_chart(b: &mut Bundle, records: &[EpisodeRecord], window: usize) -> Result<()> {
    let returns: Vec<f64> = records.iter().map(|r| r.episode_return).collect();
    if returns.is_empty() {
        return Ok(());
    }
    let spec = ChartSpec::new(ChartKind::Line, "Training return", "episode", "return")
        .with_series(Series::indexed("return", &returns))
        .with_series(Series::indexed(format!("moving average ({window})"), &moving_average(&returns, window)?));
    b.chart("returns", &spec)
}
