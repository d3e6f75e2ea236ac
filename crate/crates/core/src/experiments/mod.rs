//! Monte Carlo success-rate curves.
//!
//! Each trial samples a hidden permutation and data, observes entries with
//! Gaussian noise, runs a recovery and checks the output's class. Trial
//! `k` at grid point `s` draws every random quantity from
//! `trial_seed(master, s, k)`, so trials can run in any order or in
//! parallel and still reproduce bit for bit.

mod output;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize};

pub use output::{csv_name, emit_outputs, format_g, parse_csv, render_svg, wilson_interval, write_csv, CSV_HEADER};

use crate::error::{Error, Result};
use crate::linalg::RankTolerance;
use crate::oracle::{make_exact_oracle, make_noisy_oracle, make_potts_oracle, EntryOracle, PottsSpec};
use crate::recover::{baseline_tt, recover_ring, recover_train, RankMode, RecoveryConfig};
use crate::seed::{derive_seed, rng_from, stream};
use crate::tensor_core::{
    same_class, sample_cores, BondDims, DenseTensor, Mode, Permutation, PhysicalDims, Profile, DEFAULT_CONTRACT_CAP,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentMode {
    Ring,
    Train,
    Potts,
    BaselineCompare,
}

impl std::str::FromStr for ExperimentMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ring" | "tr" => Ok(Self::Ring),
            "train" | "tt" => Ok(Self::Train),
            "potts" => Ok(Self::Potts),
            "baseline_compare" | "baseline-compare" => Ok(Self::BaselineCompare),
            other => Err(Error::domain(format!("unknown experiment mode {other:?}"))),
        }
    }
}

impl ExperimentMode {
    /// Format of the hidden structure.
    pub fn structure(self) -> Mode {
        match self {
            Self::Ring | Self::Potts => Mode::Ring,
            Self::Train | Self::BaselineCompare => Mode::Train,
        }
    }

    /// Default noise grid: 0..0.1 step 0.01 for loops, 0..1 step 0.1 for paths.
    pub fn default_grid(self) -> Vec<f64> {
        match self.structure() {
            Mode::Ring => (0..=10).map(|k| k as f64 / 100.0).collect(),
            Mode::Train => (0..=10).map(|k| k as f64 / 10.0).collect(),
        }
    }
}

fn scalar_or_list<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<Vec<usize>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(usize),
        Many(Vec<usize>),
    }
    Ok(match OneOrMany::deserialize(de)? {
        OneOrMany::One(n) => vec![n],
        OneOrMany::Many(v) => v,
    })
}

fn default_beta() -> f64 {
    10.0
}

/// Rank rule of the full-tensor baseline in `baseline_compare` mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineTolerance {
    /// Relative Frobenius truncation at a fixed accuracy, blind to the noise level.
    FrobeniusTail(f64),
    /// Threshold at the expected noise singular value; told the true `sigma_e`.
    NoiseFloor,
}

impl Default for BaselineTolerance {
    fn default() -> Self {
        Self::FrobeniusTail(1e-2)
    }
}

impl BaselineTolerance {
    pub fn at(self, sigma: f64) -> RankTolerance {
        match self {
            Self::FrobeniusTail(eps) => RankTolerance::FrobeniusTail(eps),
            Self::NoiseFloor => RankTolerance::NoiseFloor(sigma),
        }
    }
}

impl std::str::FromStr for BaselineTolerance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "noise_floor" || s == "noise-floor" {
            return Ok(Self::NoiseFloor);
        }
        let eps = s.strip_prefix("frobenius_tail:").or_else(|| s.strip_prefix("frobenius-tail:")).unwrap_or(s);
        match eps.parse::<f64>() {
            Ok(e) if e >= 0.0 && e.is_finite() => Ok(Self::FrobeniusTail(e)),
            _ => Err(Error::domain(format!("baseline tolerance {s:?}: expected noise_floor or frobenius_tail:<eps>"))),
        }
    }
}

/// One Monte Carlo study. `n` is either one size for every axis or one per
/// axis; in Potts mode it is the coupling pool size and `r` the spin count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialConfig {
    pub mode: ExperimentMode,
    pub d: usize,
    #[serde(deserialize_with = "scalar_or_list")]
    pub n: Vec<usize>,
    pub r: usize,
    #[serde(rename = "R")]
    pub rank: usize,
    #[serde(default)]
    pub profile: Profile,
    pub sigma: Vec<f64>,
    pub voters: usize,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub rank_mode: RankMode,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default)]
    pub baseline_tol: BaselineTolerance,
}

impl TrialConfig {
    /// Desk-scale defaults: d = 8, n = 4, r = 3, R = 2, 5 voters, 200 trials.
    pub fn desk(mode: ExperimentMode) -> Self {
        let (d, n) = match mode {
            ExperimentMode::Potts => (6, 5),
            ExperimentMode::BaselineCompare => (6, 4),
            _ => (8, 4),
        };
        Self {
            mode,
            d,
            n: vec![n],
            r: 3,
            rank: 2,
            profile: Profile::FullRank,
            sigma: mode.default_grid(),
            voters: 5,
            trials: 200,
            seed: 0,
            rank_mode: RankMode::SingularValue,
            beta: 10.0,
            baseline_tol: BaselineTolerance::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::domain("trials must be at least 1"));
        }
        if self.sigma.is_empty() {
            return Err(Error::domain("noise grid is empty"));
        }
        if let Some(s) = self.sigma.iter().find(|s| !s.is_finite() || **s < 0.0) {
            return Err(Error::domain(format!("noise level {s} must be finite and >= 0")));
        }
        if self.n.len() != 1 && self.n.len() != self.d {
            return Err(Error::domain(format!("n has {} entries, expected 1 or d = {}", self.n.len(), self.d)));
        }
        if self.r == 0 {
            return Err(Error::domain("r must be at least 1"));
        }
        if self.mode == ExperimentMode::Potts && self.n.iter().any(|&n| n != self.n[0]) {
            return Err(Error::domain("potts mode needs one pool size for every site"));
        }
        if self.mode.structure() == Mode::Ring && self.d < 4 {
            return Err(Error::domain(format!("loop recovery needs d >= 4, got {}", self.d)));
        }
        self.dims()?;
        self.recovery(0)?;
        Ok(())
    }

    pub fn dims(&self) -> Result<PhysicalDims> {
        if self.n.len() == 1 {
            PhysicalDims::uniform(self.d, self.n[0])
        } else {
            PhysicalDims::new(self.n.clone())
        }
    }

    pub fn bonds(&self) -> Result<BondDims> {
        BondDims::uniform(self.d, self.r, self.mode.structure())
    }

    fn recovery(&self, seed: u64) -> Result<RecoveryConfig> {
        Ok(RecoveryConfig::new(self.rank, self.voters, seed)?.with_rank_mode(self.rank_mode))
    }

    /// Series produced by [`success_curves`].
    pub fn labels(&self) -> Vec<&'static str> {
        match self.mode {
            ExperimentMode::BaselineCompare => vec!["proposed", "baseline"],
            _ => vec!["proposed"],
        }
    }
}

/// Root seed of trial `trial` at grid index `sigma_index`.
pub fn trial_seed(master: u64, sigma_index: usize, trial: usize) -> u64 {
    derive_seed(derive_seed(master, stream::TRIAL, sigma_index as u64), stream::TRIAL, trial as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrialOutcome {
    pub success: bool,
    pub undecided: bool,
}

impl TrialOutcome {
    fn from_result(r: Result<bool>) -> Result<Self> {
        match r {
            Ok(success) => Ok(Self { success, undecided: false }),
            Err(e) if e.is_undecidable() => Ok(Self { success: false, undecided: true }),
            Err(e) => Err(e),
        }
    }
}

/// One outcome per series in [`TrialConfig::labels`].
pub fn run_trial(cfg: &TrialConfig, sigma_index: usize, trial: usize) -> Result<Vec<TrialOutcome>> {
    let sigma = *cfg
        .sigma
        .get(sigma_index)
        .ok_or_else(|| Error::domain(format!("grid index {sigma_index} outside {} points", cfg.sigma.len())))?;
    let ts = trial_seed(cfg.seed, sigma_index, trial);
    let sub = |s: u64, i: u64| derive_seed(ts, s, i);
    let d = cfg.d;
    let mode = cfg.mode.structure();
    let tau = Permutation::random(d, &mut rng_from(sub(stream::TRIAL_PERM, 0)));
    let rec = cfg.recovery(sub(stream::TRIAL_RECOVERY, 0))?;

    let recover = |oracle: &dyn EntryOracle| -> Result<bool> {
        let out = match mode {
            Mode::Ring => recover_ring(oracle, &rec)?,
            Mode::Train => recover_train(oracle, &rec)?,
        };
        same_class(&out, &tau, mode)
    };

    match cfg.mode {
        ExperimentMode::Potts => {
            let mut rng = rng_from(sub(stream::TRIAL_CORES, 0));
            let pool = PottsSpec::sample_pool(cfg.r, cfg.n[0], &mut rng);
            let spec = PottsSpec::new(cfg.r, cfg.beta, pool, tau.clone())?;
            let oracle = make_noisy_oracle(make_potts_oracle(spec)?, sigma, sub(stream::TRIAL_NOISE, 0))?;
            Ok(vec![TrialOutcome::from_result(recover(&oracle))?])
        }
        _ => {
            let stack =
                sample_cores(&cfg.dims()?, &cfg.bonds()?, &tau, mode, cfg.profile, sub(stream::TRIAL_CORES, 0))?;
            let full = if cfg.mode == ExperimentMode::BaselineCompare { Some(stack.full_contract()?) } else { None };
            let oracle = make_noisy_oracle(make_exact_oracle(stack), sigma, sub(stream::TRIAL_NOISE, 0))?;
            let mut out = vec![TrialOutcome::from_result(recover(&oracle))?];
            if let Some(full) = full {
                let noisy = observe_all(&full, sigma, sub(stream::TRIAL_NOISE, 1))?;
                let guess = baseline_tt(&noisy, cfg.baseline_tol.at(sigma))?;
                out.push(TrialOutcome { success: same_class(&guess, &tau, Mode::Train)?, undecided: false });
            }
            Ok(out)
        }
    }
}

/// Every entry of `full` observed once with `N(0, sigma^2)` noise.
fn observe_all(full: &DenseTensor, sigma: f64, seed: u64) -> Result<DenseTensor> {
    if full.dims().volume() > DEFAULT_CONTRACT_CAP {
        return Err(Error::Resource { what: "full observation", needed: full.dims().volume(), cap: DEFAULT_CONTRACT_CAP });
    }
    if sigma == 0.0 {
        return Ok(full.clone());
    }
    let mut rng = rng_from(seed);
    let values = full
        .values()
        .iter()
        .map(|v| v + sigma * rand_distr::Distribution::<f64>::sample(&rand_distr::StandardNormal, &mut rng))
        .collect();
    DenseTensor::new(full.dims().clone(), values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub sigma: f64,
    pub trials: usize,
    pub successes: usize,
    pub undecided: usize,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl CurvePoint {
    pub fn new(sigma: f64, trials: usize, successes: usize, undecided: usize) -> Result<Self> {
        if trials == 0 || successes > trials || undecided > trials - successes {
            return Err(Error::domain(format!(
                "inconsistent counts: {successes} successes, {undecided} undecided of {trials}"
            )));
        }
        let (ci_low, ci_high) = wilson_interval(successes, trials);
        Ok(Self { sigma, trials, successes, undecided, rate: successes as f64 / trials as f64, ci_low, ci_high })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuccessCurve {
    pub label: String,
    pub points: Vec<CurvePoint>,
}

impl SuccessCurve {
    pub fn rate_at(&self, sigma: f64) -> Option<f64> {
        self.points.iter().find(|p| p.sigma == sigma).map(|p| p.rate)
    }
}

/// Run every grid point of `cfg` and aggregate.
pub fn success_curves(cfg: &TrialConfig) -> Result<Vec<SuccessCurve>> {
    success_curves_with(cfg, &[], |_, _| Ok(()))
}

/// Single-series convenience for [`success_curves`].
pub fn success_curve(cfg: &TrialConfig) -> Result<SuccessCurve> {
    Ok(success_curves(cfg)?.remove(0))
}

/// Like [`success_curves`], reusing grid points already present in `done`
/// (same sigma and trial count in every series) and calling `on_point`
/// with the grid index after each point completes.
pub fn success_curves_with<F>(cfg: &TrialConfig, done: &[SuccessCurve], mut on_point: F) -> Result<Vec<SuccessCurve>>
where
    F: FnMut(usize, &[SuccessCurve]) -> Result<()>,
{
    cfg.validate()?;
    let labels = cfg.labels();
    let mut curves: Vec<SuccessCurve> =
        labels.iter().map(|l| SuccessCurve { label: l.to_string(), points: Vec::new() }).collect();

    for (si, &sigma) in cfg.sigma.iter().enumerate() {
        let reused: Option<Vec<CurvePoint>> = labels
            .iter()
            .map(|l| {
                done.iter()
                    .find(|c| c.label == *l)
                    .and_then(|c| c.points.iter().find(|p| p.sigma == sigma && p.trials == cfg.trials))
                    .copied()
            })
            .collect();
        let points = match reused {
            Some(p) => p,
            None => {
                let outcomes: Vec<Vec<TrialOutcome>> =
                    (0..cfg.trials).into_par_iter().map(|k| run_trial(cfg, si, k)).collect::<Result<_>>()?;
                (0..labels.len())
                    .map(|s| {
                        let wins = outcomes.iter().filter(|o| o[s].success).count();
                        let undecided = outcomes.iter().filter(|o| o[s].undecided).count();
                        CurvePoint::new(sigma, cfg.trials, wins, undecided)
                    })
                    .collect::<Result<_>>()?
            }
        };
        for (c, p) in curves.iter_mut().zip(points) {
            c.points.push(p);
        }
        on_point(si, &curves)?;
    }
    Ok(curves)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn small(mode: ExperimentMode) -> TrialConfig {
        TrialConfig { trials: 10, sigma: vec![0.0], ..TrialConfig::desk(mode) }
    }

    #[test]
    fn noiseless_trials_succeed() {
        for mode in [ExperimentMode::Ring, ExperimentMode::Train, ExperimentMode::BaselineCompare] {
            let c = success_curves(&small(mode)).unwrap();
            for s in &c {
                assert_eq!(s.points[0].rate, 1.0, "{mode:?} {}", s.label);
            }
        }
    }

    #[test]
    fn trials_are_deterministic() {
        let cfg = TrialConfig { sigma: vec![0.0, 0.05], ..small(ExperimentMode::Ring) };
        for k in 0..4 {
            assert_eq!(run_trial(&cfg, 1, k).unwrap(), run_trial(&cfg, 1, k).unwrap());
        }
        assert_eq!(success_curves(&cfg).unwrap(), success_curves(&cfg).unwrap());
    }

    #[test]
    fn huge_noise_is_near_chance() {
        let cfg = TrialConfig { sigma: vec![1e6], trials: 40, voters: 1, ..TrialConfig::desk(ExperimentMode::Ring) };
        let c = success_curve(&cfg).unwrap();
        // chance is 2d/d! = 16/40320
        assert!(c.points[0].successes <= 1, "{:?}", c.points[0]);
    }

    #[test]
    fn seeds_do_not_collide() {
        let mut seen = HashSet::new();
        for s in 0..10 {
            for k in 0..10_000 {
                assert!(seen.insert(trial_seed(42, s, k)));
            }
        }
    }

    #[test]
    fn config_json_round_trip_and_validation() {
        let cfg = TrialConfig::desk(ExperimentMode::Train);
        assert_eq!(TrialConfig::from_json(&cfg.to_json().unwrap()).unwrap(), cfg);
        let scalar = r#"{"mode":"ring","d":8,"n":4,"r":3,"R":2,"sigma":[0.0],"voters":1,"trials":5,"seed":1}"#;
        let c = TrialConfig::from_json(scalar).unwrap();
        assert_eq!(c.n, vec![4]);
        assert_eq!(c.profile, Profile::FullRank);
        assert_eq!(c.baseline_tol, BaselineTolerance::FrobeniusTail(1e-2));
        let nf = TrialConfig::from_json(&scalar.replace("\"seed\":1", "\"seed\":1,\"baseline_tol\":\"noise_floor\"")).unwrap();
        assert_eq!(nf.baseline_tol, BaselineTolerance::NoiseFloor);
        assert_eq!("frobenius_tail:0.001".parse::<BaselineTolerance>().unwrap(), BaselineTolerance::FrobeniusTail(1e-3));
        assert!(TrialConfig::from_json(&scalar.replace("\"trials\":5", "\"trials\":0")).is_err());
        assert!(TrialConfig::from_json(&scalar.replace("[0.0]", "[]")).is_err());
        assert!(TrialConfig::from_json(&scalar.replace("[0.0]", "[-0.1]")).is_err());
        assert!(TrialConfig::from_json(&scalar.replace("\"voters\":1", "\"voters\":2")).is_err());
        let e = TrialConfig::from_json(&scalar.replace("\"seed\":1", "\"seed\":1,\"bogus\":3")).unwrap_err();
        assert!(e.to_string().contains("bogus"), "{e}");
    }

    #[test]
    fn resume_reuses_points() {
        let cfg = TrialConfig { sigma: vec![0.0, 0.02], trials: 6, ..TrialConfig::desk(ExperimentMode::Ring) };
        let full = success_curves(&cfg).unwrap();
        let mut partial = full.clone();
        partial[0].points.truncate(1);
        let mut calls = Vec::new();
        let resumed = success_curves_with(&cfg, &partial, |i, _| {
            calls.push(i);
            Ok(())
        })
        .unwrap();
        assert_eq!(resumed, full);
        assert_eq!(calls, vec![0, 1]);
    }

    #[test]
    fn potts_trial_runs() {
        let cfg = TrialConfig { trials: 4, sigma: vec![0.0], ..TrialConfig::desk(ExperimentMode::Potts) };
        let c = success_curve(&cfg).unwrap();
        assert_eq!(c.points[0].trials, 4);
    }
}
