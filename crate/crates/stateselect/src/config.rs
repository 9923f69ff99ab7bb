//! Run configuration (TOML). Every section is optional; command-line flags
//! override file values, and the effective configuration is written next
//! to the results.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stateselect_core::cost::DEFAULT_SCALE_FLOOR;
use stateselect_core::data::SplitSpec;
use stateselect_core::dmdc::TruncationPolicy;
use stateselect_core::ga::GaConfig;
use stateselect_core::prefilter::PrefilterConfig;
use stateselect_core::rfe::RfeConfig;
use stateselect_core::selection::Method;

use crate::error::{Error, Result};

pub const EFFECTIVE_CONFIG_FILE: &str = "effective_config.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MethodChoice {
    Rfe,
    Ga,
    Both,
    RfeNaive,
    All,
}

impl MethodChoice {
    pub fn methods(self) -> Vec<Method> {
        match self {
            MethodChoice::Rfe => vec![Method::RfeDmdc],
            MethodChoice::Ga => vec![Method::GaDmdc],
            MethodChoice::Both => vec![Method::RfeDmdc, Method::GaDmdc],
            MethodChoice::RfeNaive => vec![Method::RfeNaive],
            MethodChoice::All => vec![Method::RfeDmdc, Method::RfeNaive, Method::GaDmdc],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub train_fraction: f64,
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection {
            train_fraction: SplitSpec::default().train_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrefilterSection {
    pub input_corr_threshold: f64,
    pub variance_epsilon: f64,
    pub dedupe_corr_threshold: f64,
    pub dedupe_enabled: bool,
}

impl Default for PrefilterSection {
    fn default() -> Self {
        let d = PrefilterConfig::default();
        PrefilterSection {
            input_corr_threshold: d.input_corr_threshold,
            variance_epsilon: d.variance_epsilon,
            dedupe_corr_threshold: d.dedupe_corr_threshold,
            dedupe_enabled: d.dedupe_enabled,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruncationSection {
    pub max_condition: f64,
}

impl Default for TruncationSection {
    fn default() -> Self {
        TruncationSection {
            max_condition: TruncationPolicy::default().max_condition,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostSection {
    pub scale_floor: f64,
}

impl Default for CostSection {
    fn default() -> Self {
        CostSection {
            scale_floor: DEFAULT_SCALE_FLOOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RfeSection {
    pub block_fraction: f64,
    pub cross_top_k: usize,
    pub search_limit: usize,
    pub weak_threshold: f64,
}

impl Default for RfeSection {
    fn default() -> Self {
        let d = RfeConfig::default();
        RfeSection {
            block_fraction: d.block_fraction,
            cross_top_k: d.cross_top_k,
            search_limit: d.search_limit,
            weak_threshold: d.weak_threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaSection {
    pub population_size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elite_count: Option<usize>,
    pub crossover_fraction: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_generations: Option<usize>,
    pub stall_generations: usize,
    pub stall_tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mutation_rate: Option<f64>,
    pub restarts: usize,
}

impl Default for GaSection {
    fn default() -> Self {
        let d = GaConfig::default();
        GaSection {
            population_size: d.population_size,
            elite_count: d.elite_count,
            crossover_fraction: d.crossover_fraction,
            max_generations: d.max_generations,
            stall_generations: d.stall_generations,
            stall_tolerance: d.stall_tolerance,
            mutation_rate: d.mutation_rate,
            restarts: d.restarts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Dataset manifest.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<PathBuf>,
    /// Realization files overriding the manifest's own list.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub data: Vec<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub method: MethodChoice,
    pub caps: Vec<usize>,
    pub seed: u64,
    /// 0 picks the number of available cores.
    pub workers: usize,
    pub split: SplitSection,
    pub prefilter: PrefilterSection,
    pub truncation: TruncationSection,
    pub cost: CostSection,
    pub rfe: RfeSection,
    pub ga: GaSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            manifest: None,
            data: Vec::new(),
            out: None,
            method: MethodChoice::Both,
            caps: vec![8],
            seed: 0,
            workers: 0,
            split: SplitSection::default(),
            prefilter: PrefilterSection::default(),
            truncation: TruncationSection::default(),
            cost: CostSection::default(),
            rfe: RfeSection::default(),
            ga: GaSection::default(),
        }
    }
}

impl RunConfig {
    /// Parses a config file; relative paths are resolved against its folder.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| Error::format(path, e.message()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.manifest.as_mut().map(resolve);
        cfg.out.as_mut().map(resolve);
        cfg.data.iter_mut().for_each(resolve);
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Invalid(format!("cannot serialize configuration: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.caps.is_empty() {
            return Err(Error::Invalid("the cap list is empty".into()));
        }
        if self.caps.contains(&0) {
            return Err(Error::Invalid("caps must be at least 1".into()));
        }
        match &self.manifest {
            None => return Err(Error::Invalid("no dataset manifest given".into())),
            Some(p) if !p.exists() => return Err(Error::Invalid(format!("manifest {} does not exist", p.display()))),
            _ => {}
        }
        if let Some(missing) = self.data.iter().find(|p| !p.exists()) {
            return Err(Error::Invalid(format!("data file {} does not exist", missing.display())));
        }
        self.split_spec();
        self.prefilter_config().validate()?;
        self.policy().validate()?;
        for &cap in &self.caps {
            self.rfe_config(cap).validate()?;
            self.ga_config(cap).validate()?;
        }
        if !(self.split.train_fraction > 0.0 && self.split.train_fraction < 1.0) {
            return Err(Error::Invalid("train_fraction must lie in (0, 1)".into()));
        }
        Ok(())
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            train_fraction: self.split.train_fraction,
        }
    }

    pub fn prefilter_config(&self) -> PrefilterConfig {
        PrefilterConfig {
            input_corr_threshold: self.prefilter.input_corr_threshold,
            variance_epsilon: self.prefilter.variance_epsilon,
            dedupe_corr_threshold: self.prefilter.dedupe_corr_threshold,
            dedupe_enabled: self.prefilter.dedupe_enabled,
        }
    }

    pub fn policy(&self) -> TruncationPolicy {
        TruncationPolicy {
            max_condition: self.truncation.max_condition,
        }
    }

    pub fn rfe_config(&self, cap: usize) -> RfeConfig {
        RfeConfig {
            max_states: cap,
            block_fraction: self.rfe.block_fraction,
            cross_top_k: self.rfe.cross_top_k,
            search_limit: self.rfe.search_limit,
            weak_threshold: self.rfe.weak_threshold,
            policy: self.policy(),
            scale_floor: self.cost.scale_floor,
        }
    }

    pub fn ga_config(&self, cap: usize) -> GaConfig {
        GaConfig {
            max_states: cap,
            population_size: self.ga.population_size,
            elite_count: self.ga.elite_count,
            crossover_fraction: self.ga.crossover_fraction,
            max_generations: self.ga.max_generations,
            stall_generations: self.ga.stall_generations,
            stall_tolerance: self.ga.stall_tolerance,
            mutation_rate: self.ga.mutation_rate,
            restarts: self.ga.restarts,
            seed: self.seed,
            policy: self.policy(),
            scale_floor: self.cost.scale_floor,
        }
    }
}
