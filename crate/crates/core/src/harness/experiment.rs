//! Scenario grids, seeded trials and aggregation.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{build_preset, Preset, ResetMode, ScenarioConfig, SteeringKind};
use crate::error::{Error, Result};
use crate::marl::PolicyParams;
use crate::params::SimParams;
use crate::rng::{derive_seed, label_hash, streams};

use super::engine::{run_episode, EpisodeMetrics};
use super::stats::{mann_whitney_u, mean, sd};
use super::with_workers;

/// One row of a grid: room, layout, user count and controller pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    pub width: f64,
    pub height: f64,
    pub preset: Preset,
    pub n_users: usize,
    pub steering: SteeringKind,
    pub reset: ResetMode,
}

impl CellSpec {
    /// Room size label such as `10x10`.
    pub fn space_label(&self) -> String {
        format!("{}x{}", self.width, self.height)
    }

    pub fn scenario(&self, path_waypoints: usize, params: SimParams, seed: u64) -> Result<ScenarioConfig> {
        let mut cfg = ScenarioConfig::new(
            build_preset(self.preset, self.width, self.height)?,
            self.n_users,
            self.steering,
            self.reset,
        )
        .with_waypoints(path_waypoints)
        .with_seed(seed);
        cfg.params = params;
        Ok(cfg)
    }

    /// Seed of trial `t`. Depends only on the room, layout and user count,
    /// so every controller in the same environment sees the same spawns and
    /// virtual paths.
    pub fn trial_seed(&self, master: u64, t: usize) -> u64 {
        derive_seed(
            master,
            &[
                streams::TRIAL,
                self.width.to_bits(),
                self.height.to_bits(),
                label_hash(self.preset.name()),
                self.n_users as u64,
                t as u64,
            ],
        )
    }

    fn same_environment(&self, o: &CellSpec) -> bool {
        self.width == o.width
            && self.height == o.height
            && self.preset == o.preset
            && self.n_users == o.n_users
            && self.steering == o.steering
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub cells: Vec<CellSpec>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Waypoints per user per trial.
    #[serde(default = "default_waypoints")]
    pub path_waypoints: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub params: SimParams,
}

fn default_trials() -> usize {
    100
}

fn default_waypoints() -> usize {
    200
}

impl ExperimentConfig {
    /// Full factorial grid. For every steering controller the cell list
    /// holds its baseline reset controller followed by `resets`.
    pub fn grid(
        name: &str,
        sizes: &[f64],
        presets: &[Preset],
        users: &[usize],
        steerings: &[SteeringKind],
        resets: &[ResetMode],
    ) -> Self {
        let mut cells = Vec::new();
        for &s in sizes {
            for &preset in presets {
                for &n_users in users {
                    for &steering in steerings {
                        let mut modes = vec![steering.baseline_reset()];
                        modes.extend(resets.iter().copied().filter(|m| *m != steering.baseline_reset()));
                        for reset in modes {
                            cells.push(CellSpec {
                                width: s,
                                height: s,
                                preset,
                                n_users,
                                steering,
                                reset,
                            });
                        }
                    }
                }
            }
        }
        Self {
            name: name.to_string(),
            cells,
            trials: default_trials(),
            path_waypoints: default_waypoints(),
            seed: 0,
            params: SimParams::default(),
        }
    }

    /// Reads a grid from JSON (`.json`) or TOML (anything else).
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let cfg: Self = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text)?
        } else {
            toml::from_str(&text)?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Adds a learned-policy cell next to every greedy cell.
    pub fn with_policy_cells(mut self) -> Self {
        let mut cells = Vec::with_capacity(self.cells.len() * 2);
        for c in self.cells {
            let learned = (c.reset == ResetMode::MrcGreedy).then(|| CellSpec {
                reset: ResetMode::MrcPolicy,
                ..c.clone()
            });
            cells.push(c);
            cells.extend(learned);
        }
        self.cells = cells;
        self
    }

    pub fn e1() -> Self {
        Self::grid(
            "E1",
            &[5.0],
            &[Preset::Simple, Preset::Circle, Preset::Complex],
            &[2],
            &SteeringKind::ALL,
            &[ResetMode::MrcGreedy],
        )
    }

    pub fn e2() -> Self {
        Self::grid(
            "E2",
            &[10.0],
            &[Preset::Simple, Preset::Circle, Preset::Complex],
            &[2, 3],
            &SteeringKind::ALL,
            &[ResetMode::MrcGreedy],
        )
    }

    pub fn e3() -> Self {
        Self::grid(
            "E3",
            &[20.0],
            &[Preset::FourSquares],
            &(2..=8).collect::<Vec<_>>(),
            &SteeringKind::ALL,
            &[ResetMode::MrcGreedy],
        )
    }

    pub fn e4() -> Self {
        Self::grid(
            "E4",
            &[10.0],
            &[Preset::Less, Preset::More],
            &[2],
            &SteeringKind::ALL,
            &[ResetMode::MrcGreedy],
        )
    }

    pub fn e5() -> Self {
        Self::grid(
            "E5",
            &[10.0],
            &[Preset::Simple],
            &[2],
            &SteeringKind::ALL,
            &[ResetMode::MrcGreedy],
        )
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name.to_ascii_uppercase().as_str() {
            "E1" => Ok(Self::e1()),
            "E2" => Ok(Self::e2()),
            "E3" => Ok(Self::e3()),
            "E4" => Ok(Self::e4()),
            "E5" => Ok(Self::e5()),
            other => Err(Error::Config(format!("unknown experiment grid {other}"))),
        }
    }

    pub fn with_trials(mut self, trials: usize) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_waypoints(mut self, n: usize) -> Self {
        self.path_waypoints = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.cells.is_empty() {
            return Err(Error::Config("experiment grid is empty".into()));
        }
        for c in &self.cells {
            c.scenario(self.path_waypoints, self.params, 0)?.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub spec: CellSpec,
    pub trials: usize,
    pub resets: Vec<f64>,
    pub mdbr: Vec<f64>,
    pub mean_resets: f64,
    pub sd_resets: f64,
    pub mean_mdbr: f64,
    pub sd_mdbr: f64,
    pub truncated: usize,
    pub escalations: usize,
    /// Set when a trial faulted; the statistics are then zero.
    pub error: Option<String>,
}

impl CellResult {
    pub fn from_metrics(spec: CellSpec, metrics: &[EpisodeMetrics]) -> Self {
        let resets: Vec<f64> = metrics.iter().map(|m| m.total_resets as f64).collect();
        let mdbr: Vec<f64> = metrics.iter().map(|m| m.mean_mdbr).collect();
        Self {
            spec,
            trials: metrics.len(),
            mean_resets: mean(&resets),
            sd_resets: sd(&resets),
            mean_mdbr: mean(&mdbr),
            sd_mdbr: sd(&mdbr),
            truncated: metrics.iter().filter(|m| m.truncated).count(),
            escalations: metrics.iter().map(|m| m.escalations).sum(),
            resets,
            mdbr,
            error: None,
        }
    }

    fn failed(spec: CellSpec, trials: usize, err: &Error) -> Self {
        Self {
            spec,
            trials,
            resets: Vec::new(),
            mdbr: Vec::new(),
            mean_resets: 0.0,
            sd_resets: 0.0,
            mean_mdbr: 0.0,
            sd_mdbr: 0.0,
            truncated: 0,
            escalations: 0,
            error: Some(err.to_string()),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

/// Reset-count comparison of a candidate controller against the baseline
/// of the same environment and steering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTest {
    pub space: String,
    pub preset: Preset,
    pub n_users: usize,
    pub steering: SteeringKind,
    pub baseline: ResetMode,
    pub candidate: ResetMode,
    pub baseline_mean: f64,
    pub candidate_mean: f64,
    /// U statistic of the candidate sample.
    pub u: f64,
    pub p: f64,
}

/// Fixed settings reported with every result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub params: SimParams,
    pub user_reset_counting: String,
    pub seeding: String,
}

impl Constants {
    pub fn new(params: SimParams) -> Self {
        Self {
            params,
            user_reset_counting: "one reset per affected user".into(),
            seeding: "trial seeds depend on room, layout, user count and trial index".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub config: ExperimentConfig,
    pub constants: Constants,
    pub cells: Vec<CellResult>,
    pub tests: Vec<PairTest>,
}

impl ResultTable {
    pub fn cell(&self, spec: &CellSpec) -> Option<&CellResult> {
        self.cells.iter().find(|c| &c.spec == spec)
    }

    pub fn test(&self, steering: SteeringKind, preset: Preset, candidate: ResetMode) -> Option<&PairTest> {
        self.tests
            .iter()
            .find(|t| t.steering == steering && t.preset == preset && t.candidate == candidate)
    }
}

/// Runs every trial of every cell and aggregates. A cell whose trials
/// fault is marked failed; the rest of the grid still runs.
pub fn run_experiment(config: &ExperimentConfig, policy: Option<&PolicyParams>) -> Result<ResultTable> {
    config.validate()?;
    let jobs: Vec<(usize, usize)> = (0..config.cells.len())
        .flat_map(|c| (0..config.trials).map(move |t| (c, t)))
        .collect();
    let outcomes: Vec<Result<EpisodeMetrics>> = with_workers(|| {
        jobs.par_iter()
            .map(|&(c, t)| {
                let spec = &config.cells[c];
                let scenario = spec.scenario(config.path_waypoints, config.params, spec.trial_seed(config.seed, t))?;
                Ok(run_episode(&scenario, policy)?.metrics)
            })
            .collect()
    })?;
    let mut cells = Vec::with_capacity(config.cells.len());
    for (c, chunk) in outcomes.chunks(config.trials).enumerate() {
        let spec = config.cells[c].clone();
        match chunk.iter().find_map(|r| r.as_ref().err()) {
            Some(e) => cells.push(CellResult::failed(spec, config.trials, e)),
            None => {
                let ms: Vec<EpisodeMetrics> = chunk.iter().filter_map(|r| r.as_ref().ok().cloned()).collect();
                cells.push(CellResult::from_metrics(spec, &ms));
            }
        }
    }
    let tests = pair_tests(&cells)?;
    Ok(ResultTable {
        config: config.clone(),
        constants: Constants::new(config.params),
        cells,
        tests,
    })
}

/// Every non-baseline controller against its environment's baseline.
pub fn pair_tests(cells: &[CellResult]) -> Result<Vec<PairTest>> {
    let mut tests = Vec::new();
    for cand in cells.iter().filter(|c| c.is_ok()) {
        let baseline_mode = cand.spec.steering.baseline_reset();
        if cand.spec.reset == baseline_mode {
            continue;
        }
        let Some(base) = cells
            .iter()
            .find(|b| b.is_ok() && b.spec.reset == baseline_mode && b.spec.same_environment(&cand.spec))
        else {
            continue;
        };
        let (u, p) = mann_whitney_u(&cand.resets, &base.resets)?;
        tests.push(PairTest {
            space: cand.spec.space_label(),
            preset: cand.spec.preset,
            n_users: cand.spec.n_users,
            steering: cand.spec.steering,
            baseline: baseline_mode,
            candidate: cand.spec.reset,
            baseline_mean: base.mean_resets,
            candidate_mean: cand.mean_resets,
            u,
            p,
        });
    }
    Ok(tests)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn e1_has_eighteen_cells() {
        let e = ExperimentConfig::e1();
        assert_eq!(e.cells.len(), 18);
        assert_eq!(e.trials, 100);
        assert!(e.cells.iter().all(|c| c.width == 5.0 && c.n_users == 2));
        let apf: Vec<_> = e.cells.iter().filter(|c| c.steering == SteeringKind::Apf).map(|c| c.reset).collect();
        assert_eq!(apf, [ResetMode::R2G, ResetMode::MrcGreedy].repeat(3));
    }

    #[test]
    fn policy_cells_follow_greedy_cells() {
        let e = ExperimentConfig::e5().with_policy_cells();
        let ns: Vec<_> = e.cells.iter().filter(|c| c.steering == SteeringKind::Ns).map(|c| c.reset).collect();
        assert_eq!(ns, [ResetMode::R2C, ResetMode::MrcGreedy, ResetMode::MrcPolicy]);
    }

    #[test]
    fn grid_loads_from_toml_with_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.toml");
        std::fs::write(
            &path,
            "name = \"mini\"\n[[cells]]\nwidth = 10.0\nheight = 10.0\npreset = \"circle\"\nn_users = 2\nsteering = \"ns\"\nreset = \"r2c\"\n",
        )
        .unwrap();
        let e = ExperimentConfig::load(&path).unwrap();
        assert_eq!((e.trials, e.path_waypoints, e.cells.len()), (100, 200, 1));
        assert_eq!(e.cells[0].preset, Preset::Circle);
    }

    #[test]
    fn e3_covers_every_user_count() {
        let e = ExperimentConfig::e3();
        for n in 2..=8 {
            assert!(e.cells.iter().any(|c| c.n_users == n && c.preset == Preset::FourSquares && c.width == 20.0));
        }
        assert_eq!(e.cells.len(), 7 * 3 * 2);
        e.validate().unwrap();
    }

    #[test]
    fn other_grids_validate() {
        for name in ["e1", "E2", "e4", "E5"] {
            ExperimentConfig::by_name(name).unwrap().validate().unwrap();
        }
        assert!(ExperimentConfig::by_name("E9").is_err());
    }

    #[test]
    fn trial_seed_ignores_controllers() {
        let e = ExperimentConfig::e1();
        let a = &e.cells[0];
        let b = e.cells.iter().find(|c| c.preset == a.preset && c.steering != a.steering).unwrap();
        assert_eq!(a.trial_seed(4, 7), b.trial_seed(4, 7));
        assert_ne!(a.trial_seed(4, 7), a.trial_seed(4, 8));
    }

    #[test]
    fn single_trial_has_zero_sd() {
        let mut e = ExperimentConfig::grid("t", &[10.0], &[Preset::Simple], &[2], &[SteeringKind::Ns], &[ResetMode::MrcGreedy])
            .with_trials(1)
            .with_waypoints(10);
        e.seed = 5;
        let t = run_experiment(&e, None).unwrap();
        assert_eq!(t.cells.len(), 2);
        for c in &t.cells {
            assert_eq!(c.sd_resets, 0.0);
            assert_eq!(c.sd_mdbr, 0.0);
        }
        assert_eq!(t.tests.len(), 1);
        assert!((0.0..=1.0).contains(&t.tests[0].p));
    }

    #[test]
    fn faulty_cell_does_not_sink_the_grid() {
        let e = ExperimentConfig::grid("t", &[10.0], &[Preset::Simple], &[2], &[SteeringKind::Ns], &[ResetMode::MrcPolicy])
            .with_trials(2)
            .with_waypoints(5);
        let t = run_experiment(&e, None).unwrap();
        assert!(t.cells[0].is_ok());
        assert!(!t.cells[1].is_ok());
        assert!(t.tests.is_empty());
    }
}
