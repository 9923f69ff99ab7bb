//! Binary-mask genetic search over candidate subsets (GA-DMDc).
//!
//! Each restart draws from its own ChaCha8 stream (`seed`, stream = restart
//! number), so results do not depend on how fitness evaluations are spread
//! over workers.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cost::DEFAULT_SCALE_FLOOR;
use crate::data::TimeSeriesDataset;
use crate::dmdc::TruncationPolicy;
use crate::exec::Executor;
use crate::selection::{better, Diagnostics, Method, SelectionResult, SubsetEvaluator};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GaConfig {
    pub max_states: usize,
    pub population_size: usize,
    /// Defaults to 5% of the population.
    pub elite_count: Option<usize>,
    pub crossover_fraction: f64,
    /// Defaults to 100 × genome length.
    pub max_generations: Option<usize>,
    pub stall_generations: usize,
    pub stall_tolerance: f64,
    /// Per-bit flip probability; defaults to 1 / genome length.
    pub mutation_rate: Option<f64>,
    pub restarts: usize,
    pub seed: u64,
    pub policy: TruncationPolicy,
    pub scale_floor: f64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            max_states: 8,
            population_size: 480,
            elite_count: None,
            crossover_fraction: 0.8,
            max_generations: None,
            stall_generations: 50,
            stall_tolerance: 1e-6,
            mutation_rate: None,
            restarts: 10,
            seed: 0,
            policy: TruncationPolicy::default(),
            scale_floor: DEFAULT_SCALE_FLOOR,
        }
    }
}

impl GaConfig {
    pub fn new(max_states: usize, seed: u64) -> Self {
        GaConfig {
            max_states,
            seed,
            ..Default::default()
        }
    }

    pub fn elites(&self) -> usize {
        self.elite_count
            .unwrap_or_else(|| libm::round(0.05 * self.population_size as f64) as usize)
    }

    pub fn generations(&self, genome: usize) -> usize {
        self.max_generations.unwrap_or(100 * genome)
    }

    pub fn mutation(&self, genome: usize) -> f64 {
        self.mutation_rate.unwrap_or(1.0 / genome.max(1) as f64)
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if self.max_states == 0 {
            return Err(Error::Config("max_states must be at least 1".into()));
        }
        if self.population_size < 2 {
            return Err(Error::Config("population must hold at least two individuals".into()));
        }
        if self.elites() >= self.population_size {
            return Err(Error::Config("elite count must be below the population size".into()));
        }
        if !unit(self.crossover_fraction) || !self.mutation_rate.is_none_or(unit) {
            return Err(Error::Config("GA rates must lie in [0, 1]".into()));
        }
        if self.restarts == 0 {
            return Err(Error::Config("at least one GA restart is required".into()));
        }
        if !(self.stall_tolerance >= 0.0) || !(self.scale_floor > 0.0) {
            return Err(Error::Config("invalid GA tolerance or scale floor".into()));
        }
        self.policy.validate()
    }
}

/// One bit per pooled candidate.
pub type Mask = Vec<bool>;

pub fn popcount(mask: &[bool]) -> usize {
    mask.iter().filter(|&&b| b).count()
}

/// Clears random set bits down to `cap`, or sets one random bit in an empty
/// mask.
pub fn repair<R: Rng + ?Sized>(mask: &mut [bool], cap: usize, rng: &mut R) {
    if mask.is_empty() {
        return;
    }
    let mut set: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
    if set.is_empty() {
        let i = rng.random_range(0..mask.len());
        mask[i] = true;
        return;
    }
    let cap = cap.max(1);
    while set.len() > cap {
        let k = rng.random_range(0..set.len());
        mask[set.swap_remove(k)] = false;
    }
}

fn indices(pool: &[usize], mask: &[bool]) -> Vec<usize> {
    pool.iter().zip(mask).filter(|(_, &b)| b).map(|(&c, _)| c).collect()
}

/// Memoized training cost per mask; failed fits score `+∞`.
pub struct FitnessCache<'e, 'a> {
    evaluator: &'e SubsetEvaluator<'a>,
    pool: Vec<usize>,
    values: BTreeMap<Mask, f64>,
    fits: usize,
}

impl<'e, 'a> FitnessCache<'e, 'a> {
    pub fn new(evaluator: &'e SubsetEvaluator<'a>, pool: &[usize]) -> Self {
        FitnessCache {
            evaluator,
            pool: pool.to_vec(),
            values: BTreeMap::new(),
            fits: 0,
        }
    }

    /// Number of DMDc fits performed so far.
    pub fn fits(&self) -> usize {
        self.fits
    }

    pub fn evaluate(&mut self, mask: &[bool]) -> f64 {
        assert!(popcount(mask) > 0, "empty mask must be repaired before evaluation");
        if let Some(&j) = self.values.get(mask) {
            return j;
        }
        let j = self.evaluator.j_train(&indices(&self.pool, mask));
        self.fits += 1;
        self.values.insert(mask.to_vec(), j);
        j
    }

    /// Evaluates every uncached mask of `batch` on the executor.
    pub fn evaluate_batch(&mut self, batch: &[Mask], exec: &Executor) -> Vec<f64> {
        let mut fresh: Vec<Mask> = Vec::new();
        for m in batch {
            assert!(popcount(m) > 0, "empty mask must be repaired before evaluation");
            if !self.values.contains_key(m) && !fresh.contains(m) {
                fresh.push(m.clone());
            }
        }
        let pool = &self.pool;
        let evaluator = self.evaluator;
        let scores = exec.map(&fresh, |m| evaluator.j_train(&indices(pool, m)));
        self.fits += fresh.len();
        for (m, j) in fresh.into_iter().zip(scores) {
            self.values.insert(m, j);
        }
        batch.iter().map(|m| self.values[m]).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestartOutcome {
    pub indices: Vec<usize>,
    pub j: f64,
    pub generations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaTracePoint {
    pub restart: usize,
    pub generation: usize,
    pub best_j: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaDiagnostics {
    pub restarts: Vec<RestartOutcome>,
    pub median_j: f64,
    pub trace: Vec<GaTracePoint>,
    /// Distinct masks fitted across all restarts.
    pub evaluations: usize,
}

struct Individual {
    mask: Mask,
    idx: Vec<usize>,
    j: f64,
}

fn ranked(pool: &[usize], masks: Vec<Mask>, scores: Vec<f64>) -> Vec<Individual> {
    let mut pop: Vec<Individual> = masks
        .into_iter()
        .zip(scores)
        .map(|(mask, j)| Individual {
            idx: indices(pool, &mask),
            mask,
            j,
        })
        .collect();
    pop.sort_by(|a, b| {
        if better(a.j, &a.idx, b.j, &b.idx) {
            core::cmp::Ordering::Less
        } else if better(b.j, &b.idx, a.j, &a.idx) {
            core::cmp::Ordering::Greater
        } else {
            core::cmp::Ordering::Equal
        }
    });
    pop
}

fn tournament<'p>(pop: &'p [Individual], rng: &mut ChaCha8Rng) -> &'p Individual {
    let a = &pop[rng.random_range(0..pop.len())];
    let b = &pop[rng.random_range(0..pop.len())];
    if better(b.j, &b.idx, a.j, &a.idx) {
        b
    } else {
        a
    }
}

fn run_restart(
    restart: usize,
    pool: &[usize],
    cfg: &GaConfig,
    cache: &mut FitnessCache<'_, '_>,
    exec: &Executor,
    trace: &mut Vec<GaTracePoint>,
) -> RestartOutcome {
    let genome = pool.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(restart as u64);
    let p_on = (cfg.max_states as f64 / genome as f64).min(0.5);
    let mutation = cfg.mutation(genome);
    let elites = cfg.elites();
    let children = cfg.population_size - elites;
    let crossover_children = libm::round(cfg.crossover_fraction * children as f64) as usize;

    let mut masks: Vec<Mask> = (0..cfg.population_size)
        .map(|_| {
            let mut m: Mask = (0..genome).map(|_| rng.random_bool(p_on)).collect();
            repair(&mut m, cfg.max_states, &mut rng);
            m
        })
        .collect();
    let scores = cache.evaluate_batch(&masks, exec);
    let mut pop = ranked(pool, masks, scores);
    let mut history = alloc::vec![pop[0].j];
    trace.push(GaTracePoint {
        restart,
        generation: 0,
        best_j: pop[0].j,
    });

    let max_gen = cfg.generations(genome);
    let mut generation = 0;
    while generation < max_gen {
        generation += 1;
        masks = pop[..elites].iter().map(|ind| ind.mask.clone()).collect();
        for k in 0..children {
            let first = tournament(&pop, &mut rng);
            let mut child = if k < crossover_children {
                let second = tournament(&pop, &mut rng);
                first
                    .mask
                    .iter()
                    .zip(&second.mask)
                    .map(|(&a, &b)| if rng.random_bool(0.5) { a } else { b })
                    .collect()
            } else {
                let mut m = first.mask.clone();
                for bit in m.iter_mut() {
                    if rng.random_bool(mutation) {
                        *bit = !*bit;
                    }
                }
                m
            };
            repair(&mut child, cfg.max_states, &mut rng);
            masks.push(child);
        }
        let scores = cache.evaluate_batch(&masks, exec);
        pop = ranked(pool, masks, scores);
        history.push(pop[0].j);
        trace.push(GaTracePoint {
            restart,
            generation,
            best_j: pop[0].j,
        });
        if generation >= cfg.stall_generations {
            let before = history[generation - cfg.stall_generations];
            let gain = before - pop[0].j;
            if !(gain >= cfg.stall_tolerance) {
                break;
            }
        }
    }

    RestartOutcome {
        indices: pop[0].idx.clone(),
        j: pop[0].j,
        generations: generation,
    }
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        let (a, b) = (v[n / 2 - 1], v[n / 2]);
        if a == b {
            a
        } else {
            a + (b - a) / 2.0
        }
    }
}

/// Runs every restart on `pool` and returns the best mask found, scored on
/// both splits.
pub fn ga_select(
    train: &TimeSeriesDataset,
    test: &TimeSeriesDataset,
    pool: &[usize],
    cfg: &GaConfig,
    exec: &Executor,
) -> Result<SelectionResult> {
    cfg.validate()?;
    let mut pool = pool.to_vec();
    pool.sort_unstable();
    pool.dedup();
    if pool.is_empty() {
        return Err(Error::Config("GA pool is empty".into()));
    }
    let evaluator = SubsetEvaluator::new(train, &pool, cfg.policy, cfg.scale_floor);
    let mut cache = FitnessCache::new(&evaluator, &pool);
    let mut trace = Vec::new();
    let outcomes: Vec<RestartOutcome> = (0..cfg.restarts)
        .map(|r| run_restart(r, &pool, cfg, &mut cache, exec, &mut trace))
        .collect();

    let best = outcomes
        .iter()
        .reduce(|a, b| if better(b.j, &b.indices, a.j, &a.indices) { b } else { a })
        .expect("at least one restart");
    let chosen = best.indices.clone();
    let js: Vec<f64> = outcomes.iter().map(|o| o.j).collect();
    let diagnostics = GaDiagnostics {
        median_j: median(&js),
        evaluations: cache.fits(),
        restarts: outcomes,
        trace,
    };
    evaluator.finalize(test, &chosen, Method::GaDmdc, cfg.max_states, Diagnostics::Ga(diagnostics))
}
