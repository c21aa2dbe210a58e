use std::path::{Path, PathBuf};

use cbml::controllers::{AdaptiveConfig, StrategyKind, WDeltaParams};
use cbml::estimator::MuSchedule;
use cbml::metrics::Numerator;
use cbml::plantspace::{NoiseModel, PlantFamily, PlantInstance};
use cbml::platoon::{build_platoon, platoon_plant, PlatoonParams};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const BUILTIN_PLATOON: &str = "platoon2";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RatioBlock {
    pub n_plants: usize,
    pub seeds_per_plant: usize,
    /// `None` picks analytic numerators for static strategies and simulated
    /// ones for adaptive strategies.
    pub numerator: Option<Numerator>,
    /// Evaluate static strategies on a grid with this many points per free
    /// entry instead of on sampled plants.
    pub grid: Option<usize>,
}

impl Default for RatioBlock {
    fn default() -> Self {
        RatioBlock {
            n_plants: 20,
            seeds_per_plant: 1,
            numerator: None,
            grid: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// `"platoon2"` or a path to a family JSON document, relative to the
    /// config file.
    pub family: String,
    /// Parameters of the builtin platoon.
    pub platoon: PlatoonParams,
    /// Free-entry values of the simulated plant. Defaults to the platoon
    /// parameters for the builtin family and to the box midpoint otherwise.
    pub plant: Option<Vec<f64>>,
    pub strategies: Vec<StrategyKind>,
    pub horizon: usize,
    /// Number of noise realizations per strategy.
    pub seeds: usize,
    pub record_stride: usize,
    pub noise: NoiseModel,
    pub mu: MuSchedule,
    pub adaptive: AdaptiveConfig,
    pub wdelta: WDeltaParams,
    pub ratio: RatioBlock,
    pub out: PathBuf,
    pub plots: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            family: BUILTIN_PLATOON.into(),
            platoon: PlatoonParams::default(),
            plant: None,
            strategies: StrategyKind::ALL.to_vec(),
            horizon: 10_000,
            seeds: 1,
            record_stride: 100,
            noise: NoiseModel::UnitCovariance,
            mu: MuSchedule::SqrtLog,
            adaptive: AdaptiveConfig::default(),
            wdelta: WDeltaParams::default(),
            ratio: RatioBlock::default(),
            out: PathBuf::from("out"),
            plots: true,
        }
    }
}

/// A scenario with its family resolved.
pub struct Scenario {
    pub config: ScenarioConfig,
    pub family: PlantFamily,
    pub plant: PlantInstance,
    pub builtin: bool,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<(Self, PathBuf), CliError> {
        let text = read(path)?;
        let cfg: ScenarioConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((cfg, base))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.horizon == 0 {
            return Err(CliError::Config("horizon must be at least 1".into()));
        }
        if self.seeds == 0 {
            return Err(CliError::Config("seeds must be at least 1".into()));
        }
        if self.record_stride == 0 {
            return Err(CliError::Config("record_stride must be at least 1".into()));
        }
        if self.strategies.is_empty() {
            return Err(CliError::Config("at least one strategy is required".into()));
        }
        Ok(())
    }

    /// Resolves the family (relative paths against `base`) and the plant.
    pub fn resolve(self, base: &Path) -> Result<Scenario, CliError> {
        self.validate()?;
        let builtin = self.family == BUILTIN_PLATOON;
        let family = if builtin {
            build_platoon(&self.platoon)?
        } else {
            let path = base.join(&self.family);
            PlantFamily::from_json(&read(&path)?)?
        };
        let plant = match (&self.plant, builtin) {
            (Some(values), _) => family.instance(values)?,
            (None, true) => platoon_plant(&self.platoon)?,
            (None, false) => {
                let mid: Vec<f64> = family.free_entries().iter().map(|f| f.midpoint()).collect();
                family.instance(&mid)?
            }
        };
        Ok(Scenario {
            config: self,
            family,
            plant,
            builtin,
        })
    }

    pub fn adaptive(&self) -> AdaptiveConfig {
        AdaptiveConfig {
            mu: self.mu.clone(),
            ..self.adaptive.clone()
        }
    }
}

pub fn parse_strategies(list: &str) -> Result<Vec<StrategyKind>, CliError> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse().map_err(CliError::from))
        .collect()
}
