//! Control design strategies.
//!
//! * [`StrategyKind::OptimalFullInfo`]: the LQR gain of the true plant.
//! * [`StrategyKind::ModifiedCk`]: one adaptive subcontroller per subsystem.
//!   Each estimates the block rows it does not know by cost-biased least
//!   squares on even steps, computes the certainty-equivalent gain of its own
//!   estimate, and applies only its own row block of that gain.
//! * [`StrategyKind::CentralizedCk`]: a single adaptive controller that
//!   estimates every free entry of the family, ignoring local knowledge.
//! * [`StrategyKind::Deadbeat`]: the static nilpotent design for the platoon.

use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{
    cbml_minimize, EstimationProblem, History, LocalEstimate, MuSchedule, SearchOptions, SearchPlan,
};
use crate::matlin::{
    dare_unchecked, gain_from_x, lqr_gain, solve_dare, spectral_norm, DareOptions, Mat,
};
use crate::plantspace::{centralized_mask, known_mask, InfoStructure, PlantFamily, PlantInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    #[serde(rename = "optimal")]
    OptimalFullInfo,
    ModifiedCk,
    CentralizedCk,
    Deadbeat,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] = [
        StrategyKind::OptimalFullInfo,
        StrategyKind::ModifiedCk,
        StrategyKind::CentralizedCk,
        StrategyKind::Deadbeat,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::OptimalFullInfo => "optimal",
            StrategyKind::ModifiedCk => "modified-ck",
            StrategyKind::CentralizedCk => "centralized-ck",
            StrategyKind::Deadbeat => "deadbeat",
        }
    }

    pub fn is_static(self) -> bool {
        matches!(self, StrategyKind::OptimalFullInfo | StrategyKind::Deadbeat)
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "optimal" | "k-star" => Ok(StrategyKind::OptimalFullInfo),
            "modified-ck" | "gamma-star" => Ok(StrategyKind::ModifiedCk),
            "centralized-ck" | "gamma-c" => Ok(StrategyKind::CentralizedCk),
            "deadbeat" => Ok(StrategyKind::Deadbeat),
            other => Err(Error::Config(format!("unknown strategy '{other}'"))),
        }
    }
}

/// Thresholds of the occurrence counters: gain error above `rho`, closed-loop
/// mismatch at least `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WDeltaParams {
    pub delta: f64,
    pub rho: f64,
}

impl Default for WDeltaParams {
    fn default() -> Self {
        WDeltaParams {
            delta: 0.1,
            rho: 0.1,
        }
    }
}

impl WDeltaParams {
    pub fn new(delta: f64, rho: f64) -> Result<Self> {
        if delta > 0.0 && rho > 0.0 {
            Ok(WDeltaParams { delta, rho })
        } else {
            Err(Error::Config("delta and rho must be positive".into()))
        }
    }
}

/// Settings of the adaptive strategies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdaptiveConfig {
    pub mu: MuSchedule,
    /// Estimates are refreshed when `k % update_period == 0`. The default of
    /// 2 is the even-step cadence; other values are an extension.
    pub update_period: usize,
    pub search: SearchOptions,
    /// Update steps `k ≤ full_search_until` use the full multi-start search.
    pub full_search_until: usize,
    /// Later update steps use it when `k % full_search_every == 0`; the rest
    /// refine locally from the warm and least-squares starts.
    pub full_search_every: usize,
    pub seed: u64,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        AdaptiveConfig {
            mu: MuSchedule::SqrtLog,
            update_period: 2,
            search: SearchOptions::default(),
            full_search_until: 64,
            full_search_every: 1000,
            seed: 0,
        }
    }
}

impl AdaptiveConfig {
    fn plan(&self, k: usize) -> SearchPlan {
        if k <= self.full_search_until
            || (self.full_search_every > 0 && k.is_multiple_of(self.full_search_every))
        {
            SearchPlan::Full
        } else {
            SearchPlan::Local
        }
    }
}

/// Row block `i` of an `m × n` gain.
pub fn t_select(gain: &Mat, subsystem: usize, info: &InfoStructure) -> Result<Mat> {
    let n_sub = info.n_subsystems();
    if subsystem >= n_sub {
        return Err(Error::IndexOutOfRange {
            index: subsystem,
            limit: n_sub,
        });
    }
    if gain.rows() != info.m() {
        return Err(Error::DimensionMismatch(format!(
            "gain has {} rows, structure has {} inputs",
            gain.rows(),
            info.m()
        )));
    }
    Ok(gain.block(
        info.input_offset(subsystem),
        0,
        info.input_dims[subsystem],
        gain.cols(),
    ))
}

/// Stacks `T_i K^{(i)}` over the subsystems.
pub fn stack_gains(gains: &[Mat], info: &InfoStructure) -> Result<Mat> {
    if gains.len() == 1 {
        return Ok(gains[0].clone());
    }
    let blocks = gains
        .iter()
        .enumerate()
        .map(|(i, g)| t_select(g, i, info))
        .collect::<Result<Vec<_>>>()?;
    Mat::vstack(&blocks)
}

/// `K*(P) = L(A, B)`.
pub fn optimal_full_info(plant: &PlantInstance) -> Result<Mat> {
    lqr_gain(&plant.a, &plant.b, &plant.q, &plant.r)
}

/// Deadbeat design of the two-vehicle platoon:
/// `[[−a11/b11, 0, 0], [1/b22, 1/b22, −(1 + a22)/b22]]`.
pub fn deadbeat_platoon(plant: &PlantInstance) -> Result<Mat> {
    let (a, b) = (&plant.a, &plant.b);
    if a.shape() != (3, 3) || b.shape() != (3, 2) {
        return Err(Error::WrongFamily(format!(
            "shapes {:?}, {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let zeros_a = [(0, 1), (0, 2), (2, 0), (2, 1)];
    let zeros_b = [(0, 1), (1, 0), (1, 1), (2, 0)];
    if zeros_a.iter().any(|&ij| a[ij] != 0.0) || zeros_b.iter().any(|&ij| b[ij] != 0.0) {
        return Err(Error::WrongFamily("sparsity pattern differs".into()));
    }
    if a.row(1) != [1.0, 1.0, -1.0] {
        return Err(Error::WrongFamily("spacing row must be [1, 1, -1]".into()));
    }
    let (a11, a22, b11, b22) = (a[(0, 0)], a[(2, 2)], b[(0, 0)], b[(2, 1)]);
    if b11 == 0.0 || b22 == 0.0 {
        return Err(Error::WrongFamily("input gains must be nonzero".into()));
    }
    Mat::from_rows(&[
        [-a11 / b11, 0.0, 0.0],
        [1.0 / b22, 1.0 / b22, -(1.0 + a22) / b22],
    ])
}

/// `‖(A + B K) − (Â + B̂ K)‖₂` for a given gain `K`.
pub fn closed_loop_mismatch(est_a: &Mat, est_b: &Mat, gain: &Mat, a: &Mat, b: &Mat) -> f64 {
    let truth = a + &(b * gain);
    let est = est_a + &(est_b * gain);
    spectral_norm(&(&truth - &est))
}

/// Whether the estimate lies in `𝒲_δ(A, B)`: applying its own optimal gain
/// `L(Â, B̂)` to the true plant and to the estimate gives closed loops at
/// least `δ` apart.
pub fn wdelta_membership(
    estimate: (&Mat, &Mat),
    truth: (&Mat, &Mat),
    q: &Mat,
    r: &Mat,
    params: &WDeltaParams,
) -> Result<bool> {
    let gain = solve_dare(estimate.0, estimate.1, q, r, &DareOptions::default())?.gain;
    Ok(closed_loop_mismatch(estimate.0, estimate.1, &gain, truth.0, truth.1) >= params.delta)
}

/// Certainty-equivalent gain of an estimate, or `None` if infeasible.
fn ce_gain(est: &LocalEstimate, problem: &EstimationProblem) -> Option<Mat> {
    let x = dare_unchecked(&est.a_hat, &est.b_hat, problem.q(), problem.r())?;
    gain_from_x(&est.a_hat, &est.b_hat, problem.r(), &x).ok()
}

fn derive_seed(base: u64, k: usize, subsystem: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(subsystem as u64);
    rng.set_word_pos(2 * k as u128);
    rng.next_u64()
}

/// Running state of one strategy on one trajectory.
#[derive(Debug, Clone)]
pub struct Controller {
    kind: StrategyKind,
    info: InfoStructure,
    problems: Vec<EstimationProblem>,
    estimates: Vec<LocalEstimate>,
    gains: Vec<Mat>,
    applied_gain: Mat,
    config: AdaptiveConfig,
    step: usize,
    infeasible_events: usize,
    revision: u64,
}

impl Controller {
    fn fixed(kind: StrategyKind, plant: &PlantInstance, gain: Mat) -> Self {
        Controller {
            kind,
            info: plant.info.clone(),
            problems: Vec::new(),
            estimates: Vec::new(),
            gains: vec![gain.clone()],
            applied_gain: gain,
            config: AdaptiveConfig::default(),
            step: 0,
            infeasible_events: 0,
            revision: 0,
        }
    }

    pub fn optimal(plant: &PlantInstance) -> Result<Self> {
        Ok(Self::fixed(
            StrategyKind::OptimalFullInfo,
            plant,
            optimal_full_info(plant)?,
        ))
    }

    pub fn deadbeat(plant: &PlantInstance) -> Result<Self> {
        Ok(Self::fixed(
            StrategyKind::Deadbeat,
            plant,
            deadbeat_platoon(plant)?,
        ))
    }

    fn adaptive(
        kind: StrategyKind,
        plant: &PlantInstance,
        problems: Vec<EstimationProblem>,
        config: AdaptiveConfig,
    ) -> Result<Self> {
        if config.update_period == 0 {
            return Err(Error::Config("update_period must be at least 1".into()));
        }
        let mut infeasible_events = 0;
        let mut estimates = Vec::with_capacity(problems.len());
        let mut gains = Vec::with_capacity(problems.len());
        for p in &problems {
            let est = LocalEstimate::at(p, p.midpoint());
            let gain = ce_gain(&est, p).unwrap_or_else(|| {
                infeasible_events += 1;
                Mat::zeros(plant.m(), plant.n())
            });
            estimates.push(est);
            gains.push(gain);
        }
        let applied_gain = stack_gains(&gains, &plant.info)?;
        Ok(Controller {
            kind,
            info: plant.info.clone(),
            problems,
            estimates,
            gains,
            applied_gain,
            config,
            step: 0,
            infeasible_events,
            revision: 0,
        })
    }

    /// One subcontroller per subsystem, each with its own knowledge mask.
    pub fn modified_ck(
        family: &PlantFamily,
        plant: &PlantInstance,
        config: AdaptiveConfig,
    ) -> Result<Self> {
        let problems = (0..family.info.n_subsystems())
            .map(|i| EstimationProblem::new(family, &known_mask(family, i)?, plant))
            .collect::<Result<Vec<_>>>()?;
        Self::adaptive(StrategyKind::ModifiedCk, plant, problems, config)
    }

    /// A single learner over every free entry of the family.
    pub fn centralized_ck(
        family: &PlantFamily,
        plant: &PlantInstance,
        config: AdaptiveConfig,
    ) -> Result<Self> {
        let problem = EstimationProblem::new(family, &centralized_mask(family), plant)?;
        Self::adaptive(StrategyKind::CentralizedCk, plant, vec![problem], config)
    }

    pub fn new(
        kind: StrategyKind,
        family: &PlantFamily,
        plant: &PlantInstance,
        config: &AdaptiveConfig,
    ) -> Result<Self> {
        match kind {
            StrategyKind::OptimalFullInfo => Self::optimal(plant),
            StrategyKind::Deadbeat => Self::deadbeat(plant),
            StrategyKind::ModifiedCk => Self::modified_ck(family, plant, config.clone()),
            StrategyKind::CentralizedCk => Self::centralized_ck(family, plant, config.clone()),
        }
    }

    pub fn kind(&self) -> StrategyKind {
        self.kind
    }

    /// Stacked gain applied at the most recent step.
    pub fn applied_gain(&self) -> &Mat {
        &self.applied_gain
    }

    /// Full gains `K^{(i)}` of the subcontrollers (one entry for centralized
    /// and static strategies).
    pub fn gains(&self) -> &[Mat] {
        &self.gains
    }

    /// Current estimates; each one is paired with the gain at the same index
    /// (an infeasible estimate is discarded along with its gain).
    pub fn estimates(&self) -> &[LocalEstimate] {
        &self.estimates
    }

    pub fn problems(&self) -> &[EstimationProblem] {
        &self.problems
    }

    /// Steps at which an estimate or its gain was infeasible and the previous
    /// one was kept.
    pub fn infeasible_events(&self) -> usize {
        self.infeasible_events
    }

    /// Step index of the latest call to [`Controller::step`].
    pub fn current_step(&self) -> usize {
        self.step
    }

    /// Incremented whenever the estimates are refreshed.
    pub fn revision(&self) -> u64 {
        self.revision
    }

    /// Control input `u(k)` for the latest state in `hist` (`k = hist.len()`).
    pub fn step(&mut self, hist: &History) -> Result<Vec<f64>> {
        let k = hist.len();
        if !self.kind.is_static() && k >= 1 && k.is_multiple_of(self.config.update_period) {
            self.update_estimates(k, hist)?;
        }
        self.step = k;
        Ok(self.applied_gain.mul_vec(hist.latest_state()))
    }

    fn update_estimates(&mut self, k: usize, hist: &History) -> Result<()> {
        let mu = self.config.mu.value(k);
        let plan = self.config.plan(k);
        for i in 0..self.problems.len() {
            let problem = &self.problems[i];
            let seed = derive_seed(self.config.seed, k, i);
            let warm = self.estimates[i].theta.clone();
            match cbml_minimize(problem, mu, hist, &warm, seed, plan, &self.config.search) {
                Ok(est) => match ce_gain(&est, problem) {
                    Some(gain) => {
                        self.estimates[i] = est;
                        self.gains[i] = gain;
                    }
                    None => self.infeasible_events += 1,
                },
                Err(Error::AllStartsInfeasible) => self.infeasible_events += 1,
                Err(e) => return Err(e),
            }
        }
        self.applied_gain = stack_gains(&self.gains, &self.info)?;
        self.revision += 1;
        Ok(())
    }
}
