//! Preconfigured scenarios and the drivers that run them.

use crate::agents::{build_policy, Policy, PolicyKind};
use crate::config::{DexterityKind, DexterityProfile, ScenarioConfig};
use crate::constraint::reliability;
use crate::error::{Error, Result};
use crate::metrics::{compare_policies, dexterity_sensitivity, step_response, Comparison, SensitivityTable, StepResponse};
use crate::sim::{evaluate, run_training, EpisodeRecord, TrainingRun};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    TwoStepDex,
    DexSensitivity,
    DrlCompare,
}

impl Experiment {
    pub const ALL: [Experiment; 3] = [Experiment::TwoStepDex, Experiment::DexSensitivity, Experiment::DrlCompare];

    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::TwoStepDex => "two-step-dex",
            Experiment::DexSensitivity => "dex-sensitivity",
            Experiment::DrlCompare => "drl-compare",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.as_str() == name)
            .ok_or_else(|| Error::UnknownExperiment(name.to_string()))
    }

    /// The experiment's scenario layered over `base`.
    pub fn config(self, base: &ScenarioConfig) -> ScenarioConfig {
        match self {
            Experiment::TwoStepDex => two_step_dex_config(base),
            Experiment::DexSensitivity => dex_sensitivity_config(base),
            Experiment::DrlCompare => base.clone(),
        }
    }
}

/// HRLLC user 0 steps from DXI 2.5 to 7.5 for the middle third of every
/// episode. A two-step profile already present in `base` is kept.
pub fn two_step_dex_config(base: &ScenarioConfig) -> ScenarioConfig {
    let mut cfg = base.clone();
    if cfg.dexterity.kind != DexterityKind::TwoStep {
        let third = cfg.slots_per_episode / 3;
        cfg.dexterity = DexterityProfile::two_step(0, 2.5, 7.5, third, 2 * third);
    }
    cfg
}

/// Evaluation episodes behind the step-response summary.
pub const TWO_STEP_EVAL_EPISODES: usize = 200;

/// Evaluation episodes behind the sensitivity table.
pub const SENSITIVITY_EVAL_EPISODES: usize = 400;

/// DXI levels of the sensitivity scenario, one per HRLLC user.
pub const SENSITIVITY_DXI: [f64; 5] = [0.0, 2.5, 5.0, 7.5, 10.0];

/// Five HRLLC users holding [`SENSITIVITY_DXI`], with a lighter eMBB load so
/// that the wider HRLLC slice still fits.
pub fn dex_sensitivity_config(base: &ScenarioConfig) -> ScenarioConfig {
    let mut cfg = base.clone();
    cfg.num_hrllc = SENSITIVITY_DXI.len();
    cfg.lambda_embb = 2.0;
    cfg.dexterity = DexterityProfile::per_user(SENSITIVITY_DXI.to_vec());
    cfg
}

/// Evaluates every policy on the same evaluation seed; traffic and fading
/// are identical across policies.
pub fn evaluate_policies(
    cfg: &ScenarioConfig,
    policies: &mut [(String, Box<dyn Policy>)],
    seed: u64,
    episodes: usize,
) -> Result<Vec<(String, Vec<EpisodeRecord>)>> {
    policies
        .iter_mut()
        .map(|(name, p)| Ok((name.clone(), evaluate(cfg, p.as_mut(), seed, episodes, false)?)))
        .collect()
}

/// Reliability of each policy under each evaluation seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedSweep {
    pub policies: Vec<String>,
    /// `reliability[seed][policy]`.
    pub reliability: Vec<Vec<f64>>,
}

impl SeedSweep {
    pub fn column(&self, policy: &str) -> Option<Vec<f64>> {
        let p = self.policies.iter().position(|n| n == policy)?;
        Some(self.reliability.iter().map(|row| row[p]).collect())
    }
}

/// Seed sweep plus every policy's records pooled over all seeds.
pub struct SeedEval {
    pub sweep: SeedSweep,
    pub pooled: Vec<(String, Vec<EpisodeRecord>)>,
}

/// Evaluates every policy under seeds `0..seeds`.
pub fn reliability_by_seed(
    cfg: &ScenarioConfig,
    policies: &mut [(String, Box<dyn Policy>)],
    seeds: usize,
    episodes: usize,
) -> Result<SeedEval> {
    let mut rows = Vec::with_capacity(seeds);
    let mut pooled: Vec<(String, Vec<EpisodeRecord>)> = policies.iter().map(|(n, _)| (n.clone(), Vec::new())).collect();
    for seed in 0..seeds as u64 {
        let runs = evaluate_policies(cfg, policies, seed, episodes)?;
        let row = runs
            .iter()
            .map(|(_, recs)| {
                let d: Vec<f64> = recs.iter().flat_map(|r| r.hrllc_delays.iter().copied()).collect();
                reliability(&d, cfg.d_max_s)
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
        for (slot, (_, recs)) in pooled.iter_mut().zip(runs) {
            slot.1.extend(recs);
        }
    }
    Ok(SeedEval {
        sweep: SeedSweep {
            policies: policies.iter().map(|(n, _)| n.clone()).collect(),
            reliability: rows,
        },
        pooled,
    })
}

/// Trained A2C policy, its training records and the evaluation records.
pub struct TrainedEval {
    pub training: TrainingRun,
    pub eval: Vec<EpisodeRecord>,
}

fn train_and_evaluate(cfg: &ScenarioConfig, eval_episodes: usize, keep_slots: bool) -> Result<TrainedEval> {
    let mut training = run_training(cfg, PolicyKind::A2c)?;
    let eval = evaluate(cfg, training.policy.as_mut(), 0, eval_episodes, keep_slots)?;
    Ok(TrainedEval { training, eval })
}

pub struct TwoStepOutcome {
    pub cfg: ScenarioConfig,
    pub run: TrainedEval,
    pub response: StepResponse,
}

/// Trains on the two-step scenario and measures the affected user's
/// response inside versus outside the raised segment. Evaluation records
/// keep their slot traces.
pub fn run_two_step(base: &ScenarioConfig, eval_episodes: usize) -> Result<TwoStepOutcome> {
    let cfg = two_step_dex_config(base);
    let run = train_and_evaluate(&cfg, eval_episodes, true)?;
    let d = &cfg.dexterity;
    let response = step_response(&run.eval, d.user, cfg.num_embb, d.base, d.peak, cfg.beta_dex)?;
    Ok(TwoStepOutcome { cfg, run, response })
}

pub struct SensitivityOutcome {
    pub cfg: ScenarioConfig,
    pub run: TrainedEval,
    pub table: SensitivityTable,
}

pub fn run_dex_sensitivity(base: &ScenarioConfig, eval_episodes: usize) -> Result<SensitivityOutcome> {
    let cfg = dex_sensitivity_config(base);
    let run = train_and_evaluate(&cfg, eval_episodes, false)?;
    let dxi: Vec<f64> = (0..cfg.num_hrllc).map(|h| cfg.dexterity.dxi(h, 0)).collect();
    let table = dexterity_sensitivity(&run.eval, &dxi, cfg.num_embb)?;
    Ok(SensitivityOutcome { cfg, run, table })
}

pub struct DrlOutcome {
    pub a2c: TrainingRun,
    pub dqn: TrainingRun,
    /// Training return curves of both learners side by side.
    pub comparison: Comparison,
}

/// Trains A2C and DQN under identical settings and seeds.
pub fn run_drl_compare(cfg: &ScenarioConfig) -> Result<DrlOutcome> {
    let a2c = run_training(cfg, PolicyKind::A2c)?;
    let dqn = run_training(cfg, PolicyKind::Dqn)?;
    let comparison = compare_policies(
        &[
            (PolicyKind::A2c.as_str().to_string(), a2c.records.clone()),
            (PolicyKind::Dqn.as_str().to_string(), dqn.records.clone()),
        ],
        cfg.eval.ma_window,
        cfg.d_max_s,
    )?;
    Ok(DrlOutcome { a2c, dqn, comparison })
}

/// Fresh baseline policies by name, in the order given.
pub fn baseline_policies(cfg: &ScenarioConfig, kinds: &[PolicyKind]) -> Vec<(String, Box<dyn Policy>)> {
    kinds.iter().map(|&k| (k.as_str().to_string(), build_policy(k, cfg))).collect()
}
