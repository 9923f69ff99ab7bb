//! Recursive feature elimination ranked by the fitted output map, with the
//! per-subsystem / cross-influence / merged-sweep workflow layered on top.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::cost::{population_std, DEFAULT_SCALE_FLOOR};
use crate::data::TimeSeriesDataset;
use crate::dmdc::{fit_model_with, TruncationPolicy};
use crate::exec::Executor;
use crate::prefilter::{dot, standardize};
use crate::selection::{better, Diagnostics, Method, SelectionResult, SubsetEvaluator};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RfeConfig {
    pub max_states: usize,
    /// Share of survivors dropped per iteration (at least one).
    pub block_fraction: f64,
    /// Variables imported per ordered subsystem pair.
    pub cross_top_k: usize,
    /// Largest merged pool the exhaustive sweep accepts.
    pub search_limit: usize,
    /// Imports scoring below this are flagged weak.
    pub weak_threshold: f64,
    pub policy: TruncationPolicy,
    pub scale_floor: f64,
}

impl RfeConfig {
    pub fn new(max_states: usize) -> Self {
        RfeConfig {
            max_states,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_states == 0 {
            return Err(Error::Config("max_states must be at least 1".into()));
        }
        if !(self.block_fraction > 0.0 && self.block_fraction < 1.0) {
            return Err(Error::Config("block_fraction must lie in (0, 1)".into()));
        }
        if self.search_limit == 0 || self.search_limit > 63 {
            return Err(Error::Config("search_limit must lie in 1..=63".into()));
        }
        if !(self.scale_floor > 0.0) {
            return Err(Error::Config("scale floor must be positive".into()));
        }
        self.policy.validate()
    }
}

impl Default for RfeConfig {
    fn default() -> Self {
        RfeConfig {
            max_states: 8,
            block_fraction: 0.2,
            cross_top_k: 2,
            search_limit: 24,
            weak_threshold: 0.2,
            policy: TruncationPolicy::default(),
            scale_floor: DEFAULT_SCALE_FLOOR,
        }
    }
}

/// Rowwise min–max scaled output map and its column means.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceMatrix {
    pub scores: DMatrix<f64>,
    pub mean: DVector<f64>,
}

/// `I(i,j) = (C(i,j) − minⱼ C(i,·)) / (maxⱼ C(i,·) − minⱼ C(i,·))` on signed
/// entries; rows with `max == min` become zero.
pub fn importance(cd: &DMatrix<f64>) -> ImportanceMatrix {
    let (p, n) = cd.shape();
    let mut scores = DMatrix::zeros(p, n);
    for i in 0..p {
        let row = cd.row(i);
        let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        if span > 0.0 && span.is_finite() {
            for j in 0..n {
                scores[(i, j)] = (cd[(i, j)] - lo) / span;
            }
        }
    }
    let mean = if p == 0 {
        DVector::zeros(n)
    } else {
        DVector::from_fn(n, |j, _| scores.column(j).sum() / p as f64)
    };
    ImportanceMatrix { scores, mean }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RfeRanking {
    /// Final survivors, ascending.
    pub survivors: Vec<usize>,
    /// Blocks in elimination order; within a block, least important first.
    pub eliminated: Vec<Vec<usize>>,
    /// Survivor set after each iteration, starting with the full pool.
    pub chain: Vec<Vec<usize>>,
    /// Iterations that fell back to variance ranking after a degenerate fit.
    pub fallbacks: usize,
}

impl RfeRanking {
    pub fn elimination_order(&self) -> Vec<usize> {
        self.eliminated.iter().flatten().copied().collect()
    }
}

/// Backward elimination on `pool` until at most `cap` variables survive.
pub fn rfe_rank(
    train: &TimeSeriesDataset,
    pool: &[usize],
    outputs: &[usize],
    cap: usize,
    block_fraction: f64,
    policy: &TruncationPolicy,
) -> Result<RfeRanking> {
    if pool.is_empty() {
        return Err(Error::Config("RFE pool is empty".into()));
    }
    let cap = cap.max(1);
    let mut survivors = pool.to_vec();
    survivors.sort_unstable();
    survivors.dedup();
    let mut chain = alloc::vec![survivors.clone()];
    let mut eliminated = Vec::new();
    let mut fallbacks = 0;

    while survivors.len() > cap {
        let s = survivors.len();
        let block = ((block_fraction * s as f64) as usize).max(1).min(s - cap);
        let scores: Vec<f64> = match fit_model_with(train, &survivors, outputs, policy) {
            Ok(model) => importance(&model.cd).mean.iter().copied().collect(),
            Err(Error::DegenerateSnapshots) => {
                fallbacks += 1;
                survivors.iter().map(|&c| population_std(&train.pooled(c))).collect()
            }
            Err(e) => return Err(e),
        };
        let mut order: Vec<usize> = (0..s).collect();
        // lowest score first; equal scores drop the higher channel index first
        order.sort_by(|&a, &b| {
            scores[a]
                .partial_cmp(&scores[b])
                .unwrap_or(core::cmp::Ordering::Equal)
                .then(survivors[b].cmp(&survivors[a]))
        });
        let dropped: Vec<usize> = order[..block].iter().map(|&k| survivors[k]).collect();
        survivors.retain(|c| !dropped.contains(c));
        eliminated.push(dropped);
        chain.push(survivors.clone());
    }

    Ok(RfeRanking {
        survivors,
        eliminated,
        chain,
        fallbacks,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Shortlist {
    pub subsystem: String,
    pub cap: usize,
    pub ranking: RfeRanking,
}

impl Shortlist {
    pub fn members(&self) -> &[usize] {
        &self.ranking.survivors
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsystemShortlists {
    pub shortlists: Vec<Shortlist>,
    /// Labels present in the manifest but without any pooled candidate.
    pub skipped: Vec<String>,
}

/// Labels of the pooled candidates in first-appearance order.
fn pool_subsystems(train: &TimeSeriesDataset, pool: &[usize]) -> Vec<String> {
    let mut labels: Vec<String> = Vec::new();
    for &c in pool {
        let s = &train.channel(c).subsystem;
        if !labels.contains(s) {
            labels.push(s.clone());
        }
    }
    labels
}

fn members_of(train: &TimeSeriesDataset, pool: &[usize], subsystem: &str) -> Vec<usize> {
    pool.iter().copied().filter(|&c| train.channel(c).subsystem == subsystem).collect()
}

/// Step I: RFE inside every subsystem with an equal share of the cap.
pub fn within_subsystem_rfe(train: &TimeSeriesDataset, pool: &[usize], cfg: &RfeConfig, exec: &Executor) -> Result<SubsystemShortlists> {
    cfg.validate()?;
    let mut pool = pool.to_vec();
    pool.sort_unstable();
    pool.dedup();
    let labels = pool_subsystems(train, &pool);
    let skipped = train.subsystems().into_iter().filter(|s| !labels.contains(s)).collect();
    if labels.is_empty() {
        return Ok(SubsystemShortlists {
            shortlists: Vec::new(),
            skipped,
        });
    }
    let cap = cfg.max_states.div_ceil(labels.len());
    let ranked = exec.map(&labels, |label| {
        let members = members_of(train, &pool, label);
        rfe_rank(train, &members, &train.outputs_of(label), cap, cfg.block_fraction, &cfg.policy)
    });
    let mut shortlists = Vec::with_capacity(labels.len());
    for (label, ranking) in labels.into_iter().zip(ranked) {
        shortlists.push(Shortlist {
            subsystem: label,
            cap,
            ranking: ranking?,
        });
    }
    Ok(SubsystemShortlists { shortlists, skipped })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImportedVariable {
    pub index: usize,
    /// Max |r| against the target subsystem's shortlist and outputs.
    pub score: f64,
    pub weak: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossImport {
    pub from: String,
    pub to: String,
    pub imports: Vec<ImportedVariable>,
}

/// Step II: for each ordered pair (A, B), the `cross_top_k` variables of
/// subsystem A most correlated with B's shortlist and outputs.
pub fn cross_influence(train: &TimeSeriesDataset, pool: &[usize], shortlists: &[Shortlist], cfg: &RfeConfig) -> Vec<CrossImport> {
    let mut out = Vec::new();
    if shortlists.len() < 2 {
        return out;
    }
    for a in shortlists {
        let own: BTreeSet<usize> = a.members().iter().copied().collect();
        let candidates: Vec<usize> = members_of(train, pool, &a.subsystem).into_iter().filter(|c| !own.contains(c)).collect();
        let standardized: Vec<(usize, Vec<f64>)> = candidates.iter().map(|&c| (c, standardize(&train.pooled(c)))).collect();
        for b in shortlists {
            if a.subsystem == b.subsystem {
                continue;
            }
            let mut targets: Vec<usize> = b.members().to_vec();
            targets.extend(train.outputs_of(&b.subsystem));
            let targets: Vec<Vec<f64>> = targets.iter().map(|&t| standardize(&train.pooled(t))).collect();
            let mut scored: Vec<ImportedVariable> = standardized
                .iter()
                .map(|(c, z)| {
                    let score = targets.iter().map(|t| dot(z, t).abs()).fold(0.0, f64::max);
                    ImportedVariable {
                        index: *c,
                        score,
                        weak: score < cfg.weak_threshold,
                    }
                })
                .collect();
            scored.sort_by(|x, y| {
                y.score
                    .partial_cmp(&x.score)
                    .unwrap_or(core::cmp::Ordering::Equal)
                    .then(x.index.cmp(&y.index))
            });
            scored.truncate(cfg.cross_top_k);
            out.push(CrossImport {
                from: a.subsystem.clone(),
                to: b.subsystem.clone(),
                imports: scored,
            });
        }
    }
    out
}

/// Number of non-empty subsets of `n` variables.
pub fn count_subsets(n: u32) -> u128 {
    if n >= 128 {
        u128::MAX
    } else {
        (1u128 << n) - 1
    }
}

/// Non-empty subsets of `n` variables with at most `cap` members.
pub fn count_subsets_capped(n: u32, cap: u32) -> u128 {
    let mut total: u128 = 0;
    let mut binom: u128 = 1;
    for k in 1..=cap.min(n) {
        binom = binom * u128::from(n - k + 1) / u128::from(k);
        total += binom;
    }
    total
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub best: Vec<usize>,
    pub best_j: f64,
    pub subsets_examined: u64,
}

const SWEEP_CHUNK: u64 = 1 << 12;

/// Step III: evaluate every subset of `pool` with at most `cap` members and
/// return the one minimizing training cost. Ties go to fewer variables, then
/// to the lexicographically smaller index list.
pub fn merged_search(
    evaluator: &SubsetEvaluator<'_>,
    pool: &[usize],
    cap: usize,
    search_limit: usize,
    exec: &Executor,
) -> Result<SweepOutcome> {
    let mut pool = pool.to_vec();
    pool.sort_unstable();
    pool.dedup();
    if pool.is_empty() {
        return Err(Error::Config("merged pool is empty".into()));
    }
    if pool.len() > search_limit.min(63) {
        return Err(Error::SearchTooLarge {
            pool: pool.len(),
            limit: search_limit,
        });
    }
    let n = pool.len() as u32;
    let cap = cap.max(1) as u32;
    let end = 1u64 << n;
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut examined = 0u64;
    let mut start = 1u64;
    while start < end {
        let stop = (start + SWEEP_CHUNK).min(end);
        let masks: Vec<u64> = (start..stop).filter(|m| m.count_ones() <= cap).collect();
        let scored = exec.map(&masks, |&m| {
            let subset: Vec<usize> = (0..n).filter(|b| m >> b & 1 == 1).map(|b| pool[b as usize]).collect();
            let j = evaluator.j_train(&subset);
            (j, subset)
        });
        examined += masks.len() as u64;
        for (j, subset) in scored {
            let replace = match &best {
                None => true,
                Some((bj, bs)) => better(j, &subset, *bj, bs),
            };
            if replace {
                best = Some((j, subset));
            }
        }
        start = stop;
    }
    let (best_j, best) = best.expect("at least one subset");
    Ok(SweepOutcome {
        best,
        best_j,
        subsets_examined: examined,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RfeDiagnostics {
    pub shortlists: Vec<Shortlist>,
    pub imports: Vec<CrossImport>,
    /// Union of shortlists and imports (empty for naive RFE).
    pub merged_pool: Vec<usize>,
    pub subsets_examined: u64,
    pub skipped: Vec<String>,
}

impl RfeDiagnostics {
    /// Every channel eliminated during RFE, in elimination order, subsystem
    /// by subsystem.
    pub fn elimination_order(&self) -> Vec<usize> {
        self.shortlists.iter().flat_map(|s| s.ranking.elimination_order()).collect()
    }
}

/// Steps I–III on the candidate `pool` (normally the prefilter's kept set).
pub fn select_rfe(
    train: &TimeSeriesDataset,
    test: &TimeSeriesDataset,
    pool: &[usize],
    cfg: &RfeConfig,
    exec: &Executor,
) -> Result<SelectionResult> {
    let steps = within_subsystem_rfe(train, pool, cfg, exec)?;
    if steps.shortlists.is_empty() {
        return Err(Error::Config("no candidate survives to selection".into()));
    }
    let imports = cross_influence(train, pool, &steps.shortlists, cfg);
    let mut merged: BTreeSet<usize> = steps.shortlists.iter().flat_map(|s| s.members().iter().copied()).collect();
    merged.extend(imports.iter().flat_map(|ci| ci.imports.iter().map(|v| v.index)));
    let merged: Vec<usize> = merged.into_iter().collect();

    let evaluator = SubsetEvaluator::new(train, &merged, cfg.policy, cfg.scale_floor);
    let sweep = merged_search(&evaluator, &merged, cfg.max_states, cfg.search_limit, exec)?;
    let diagnostics = RfeDiagnostics {
        shortlists: steps.shortlists,
        imports,
        merged_pool: merged,
        subsets_examined: sweep.subsets_examined,
        skipped: steps.skipped,
    };
    evaluator.finalize(test, &sweep.best, Method::RfeDmdc, cfg.max_states, Diagnostics::Rfe(diagnostics))
}

/// Whole-pool RFE against every output, ignoring subsystem labels.
pub fn select_rfe_naive(train: &TimeSeriesDataset, test: &TimeSeriesDataset, pool: &[usize], cfg: &RfeConfig) -> Result<SelectionResult> {
    cfg.validate()?;
    let ranking = rfe_rank(train, pool, &train.outputs(), cfg.max_states, cfg.block_fraction, &cfg.policy)?;
    let evaluator = SubsetEvaluator::new(train, &ranking.survivors, cfg.policy, cfg.scale_floor);
    let survivors = ranking.survivors.clone();
    let diagnostics = RfeDiagnostics {
        shortlists: alloc::vec![Shortlist {
            subsystem: String::new(),
            cap: cfg.max_states,
            ranking,
        }],
        imports: Vec::new(),
        merged_pool: Vec::new(),
        subsets_examined: 0,
        skipped: Vec::new(),
    };
    evaluator.finalize(test, &survivors, Method::RfeNaive, cfg.max_states, Diagnostics::Rfe(diagnostics))
}
