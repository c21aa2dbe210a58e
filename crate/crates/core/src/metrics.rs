//! Monte-Carlo estimates of the average and supremum competitive ratios
//! `J(Γ(P)) / J(K*(P))` over a plant family.
//!
//! The denominator is always the analytic optimum `trace X(A, B)`. The
//! reported supremum is the largest sampled ratio, a lower-bound surrogate
//! of the essential supremum.

use std::fmt::Write as _;

use log::warn;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::controllers::{deadbeat_platoon, optimal_full_info, AdaptiveConfig, StrategyKind};
use crate::error::{Error, Result};
use crate::matlin::{solve_dare, DareOptions, Mat};
use crate::plantspace::{sample_plant, PlantFamily, PlantInstance};
use crate::sim::{lyapunov_cost, simulate_strategy, SimConfig};

/// How the numerator `J_P(Γ(P))` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Numerator {
    /// Seed-averaged tail cost of simulated trajectories.
    #[default]
    Simulated,
    /// Ergodic cost of the strategy's gain; static strategies only.
    Analytic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantRatio {
    pub index: usize,
    /// Free-entry values of the plant in family order.
    pub parameters: Vec<f64>,
    pub weight: f64,
    pub j_strategy: f64,
    pub j_optimal: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedPlant {
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioEstimate {
    pub strategy: StrategyKind,
    pub numerator: Numerator,
    /// Density-weighted mean ratio.
    pub r_ave_hat: f64,
    /// Largest sampled ratio (lower bound of the essential supremum).
    pub r_sup_hat: f64,
    pub per_plant: Vec<PlantRatio>,
    pub skipped: Vec<SkippedPlant>,
    pub n_plants: usize,
    pub horizon: usize,
    pub seeds_per_plant: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioOptions {
    pub n_plants: usize,
    pub seeds_per_plant: usize,
    pub horizon: usize,
    pub master_seed: u64,
    pub numerator: Numerator,
    pub adaptive: AdaptiveConfig,
}

impl Default for RatioOptions {
    fn default() -> Self {
        RatioOptions {
            n_plants: 20,
            seeds_per_plant: 1,
            horizon: 50_000,
            master_seed: 0,
            numerator: Numerator::Simulated,
            adaptive: AdaptiveConfig::default(),
        }
    }
}

/// Seed of the `index`-th sampled plant under `master_seed`.
pub fn plant_seed(master_seed: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(u64::MAX);
    rng.set_word_pos(2 * index as u128);
    rng.next_u64()
}

/// Static gain of a non-adaptive strategy.
pub fn static_gain(kind: StrategyKind, plant: &PlantInstance) -> Result<Mat> {
    match kind {
        StrategyKind::OptimalFullInfo => optimal_full_info(plant),
        StrategyKind::Deadbeat => deadbeat_platoon(plant),
        other => Err(Error::Config(format!("{other} has no static gain"))),
    }
}

/// `trace X(A, B)`, the optimal ergodic cost under unit noise.
pub fn optimal_cost(plant: &PlantInstance) -> Result<f64> {
    Ok(solve_dare(
        &plant.a,
        &plant.b,
        &plant.q,
        &plant.r,
        &DareOptions::default(),
    )?
    .x
    .trace())
}

fn aggregate(
    strategy: StrategyKind,
    numerator: Numerator,
    results: Vec<std::result::Result<PlantRatio, SkippedPlant>>,
    horizon: usize,
    seeds_per_plant: usize,
) -> Result<RatioEstimate> {
    let n_plants = results.len();
    let mut per_plant = Vec::new();
    let mut skipped = Vec::new();
    for r in results {
        match r {
            Ok(p) => per_plant.push(p),
            Err(s) => {
                warn!("plant {} skipped: {}", s.index, s.reason);
                skipped.push(s);
            }
        }
    }
    if per_plant.is_empty() {
        return Err(Error::Config("every sampled plant was skipped".into()));
    }
    let total_w: f64 = per_plant.iter().map(|p| p.weight).sum();
    let r_ave_hat = if total_w > 0.0 {
        per_plant.iter().map(|p| p.weight * p.ratio).sum::<f64>() / total_w
    } else {
        per_plant.iter().map(|p| p.ratio).sum::<f64>() / per_plant.len() as f64
    };
    let r_sup_hat = per_plant
        .iter()
        .map(|p| p.ratio)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(RatioEstimate {
        strategy,
        numerator,
        r_ave_hat,
        r_sup_hat,
        per_plant,
        skipped,
        n_plants,
        horizon,
        seeds_per_plant,
    })
}

fn evaluate_plant(
    family: &PlantFamily,
    plant: &PlantInstance,
    index: usize,
    strategy: StrategyKind,
    opts: &RatioOptions,
) -> Result<PlantRatio> {
    let j_optimal = optimal_cost(plant)?;
    let j_strategy = match opts.numerator {
        Numerator::Analytic => lyapunov_cost(plant, &static_gain(strategy, plant)?)?,
        Numerator::Simulated => {
            let mut total = 0.0;
            for s in 0..opts.seeds_per_plant {
                let cfg = SimConfig {
                    horizon: opts.horizon,
                    seed: opts.master_seed,
                    trajectory: (index * opts.seeds_per_plant + s) as u64,
                    record_stride: opts.horizon,
                    ..Default::default()
                };
                let trace = simulate_strategy(strategy, family, plant, &opts.adaptive, &cfg)?;
                trace.check()?;
                total += trace.tail_cost();
            }
            total / opts.seeds_per_plant as f64
        }
    };
    Ok(PlantRatio {
        index,
        parameters: family.free_values(plant),
        weight: plant.weight,
        j_strategy,
        j_optimal,
        ratio: j_strategy / j_optimal,
    })
}

/// Samples `n_plants` plants from the family density and estimates both
/// ratios for `strategy`. Trajectory `s` of plant `j` uses noise stream
/// `j · seeds_per_plant + s` under `master_seed`, so different strategies
/// see the same disturbances. Plants that fail to sample or whose run fails
/// are skipped and listed.
pub fn estimate_ratios(
    family: &PlantFamily,
    strategy: StrategyKind,
    opts: &RatioOptions,
) -> Result<RatioEstimate> {
    if opts.n_plants == 0 || opts.seeds_per_plant == 0 || opts.horizon == 0 {
        return Err(Error::Config(
            "n_plants, seeds_per_plant and horizon must be positive".into(),
        ));
    }
    family.validate()?;
    let results: Vec<_> = (0..opts.n_plants)
        .into_par_iter()
        .map(|j| {
            let skip = |e: Error| SkippedPlant {
                index: j,
                reason: e.to_string(),
            };
            let plant = sample_plant(family, plant_seed(opts.master_seed, j)).map_err(skip)?;
            evaluate_plant(family, &plant, j, strategy, opts).map_err(skip)
        })
        .collect();
    aggregate(
        strategy,
        opts.numerator,
        results,
        opts.horizon,
        opts.seeds_per_plant,
    )
}

/// Analytic ratios of a static strategy on a regular grid of the family box
/// with `n_grid` points per free entry (the midpoint when `n_grid == 1`).
/// Grid points that are not admissible or give an unstable loop are skipped.
pub fn analytic_ratio_static(
    family: &PlantFamily,
    strategy: StrategyKind,
    n_grid: usize,
) -> Result<RatioEstimate> {
    if !strategy.is_static() {
        return Err(Error::Config(format!(
            "{strategy} is not a static strategy"
        )));
    }
    if n_grid == 0 {
        return Err(Error::Config("n_grid must be positive".into()));
    }
    family.validate()?;
    let free = family.free_entries();
    let total = n_grid
        .checked_pow(free.len() as u32)
        .ok_or_else(|| Error::Config("grid too large".into()))?;
    let results: Vec<_> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let mut rem = idx;
            let values: Vec<f64> = free
                .iter()
                .map(|f| {
                    let i = rem % n_grid;
                    rem /= n_grid;
                    if n_grid == 1 {
                        f.midpoint()
                    } else {
                        f.lo + (f.hi - f.lo) * i as f64 / (n_grid - 1) as f64
                    }
                })
                .collect();
            let skip = |e: Error| SkippedPlant {
                index: idx,
                reason: e.to_string(),
            };
            let plant = family.instance(&values).map_err(skip)?;
            let j_optimal = optimal_cost(&plant).map_err(skip)?;
            let gain = static_gain(strategy, &plant).map_err(skip)?;
            let j_strategy = lyapunov_cost(&plant, &gain).map_err(skip)?;
            Ok(PlantRatio {
                index: idx,
                parameters: values,
                weight: plant.weight,
                j_strategy,
                j_optimal,
                ratio: j_strategy / j_optimal,
            })
        })
        .collect();
    aggregate(strategy, Numerator::Analytic, results, 0, 0)
}

impl RatioEstimate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ratio estimate serializes")
    }

    /// Per-plant table.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# strategy={}", self.strategy);
        let _ = writeln!(s, "# r_ave_hat={}", self.r_ave_hat);
        let _ = writeln!(s, "# r_sup_hat_lower_bound={}", self.r_sup_hat);
        let _ = writeln!(s, "# skipped={}", self.skipped.len());
        let _ = writeln!(s, "index,parameters,weight,j_strategy,j_optimal,ratio");
        for p in &self.per_plant {
            let params = p
                .parameters
                .iter()
                .map(f64::to_string)
                .collect::<Vec<_>>()
                .join(" ");
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                p.index, params, p.weight, p.j_strategy, p.j_optimal, p.ratio
            );
        }
        s
    }
}
