//! Automatic pruning of uninformative candidates before selection.
//!
//! Rules run in a fixed order on the training split:
//! 1. near-constants: `Var(z / max|z|) < ε`;
//! 2. input-collinear: `max_inputs |r| > input_corr_threshold`;
//! 3. duplicates (optional): complete-linkage clustering on `|r|`, merging
//!    while every cross pair satisfies `|r| ≥ dedupe_corr_threshold`; the
//!    lowest channel index of each cluster is kept.

use alloc::vec::Vec;

use crate::cost::population_std;
use crate::data::TimeSeriesDataset;
use crate::exec::Executor;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrefilterConfig {
    pub input_corr_threshold: f64,
    pub variance_epsilon: f64,
    pub dedupe_corr_threshold: f64,
    pub dedupe_enabled: bool,
}

impl Default for PrefilterConfig {
    fn default() -> Self {
        PrefilterConfig {
            input_corr_threshold: 0.95,
            variance_epsilon: 1e-12,
            dedupe_corr_threshold: 0.999_999,
            dedupe_enabled: true,
        }
    }
}

impl PrefilterConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v <= 1.0;
        if !unit(self.input_corr_threshold) || !unit(self.dedupe_corr_threshold) || !(self.variance_epsilon >= 0.0) {
            return Err(Error::Config("prefilter thresholds out of range".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RemovalReason {
    NearConstant,
    InputCollinear,
    Duplicate,
}

impl RemovalReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            RemovalReason::NearConstant => "near_constant",
            RemovalReason::InputCollinear => "input_collinear",
            RemovalReason::Duplicate => "duplicate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Removal {
    pub index: usize,
    pub reason: RemovalReason,
    /// Normalized variance, max |r| against inputs, or |r| against the
    /// cluster representative.
    pub evidence: f64,
    /// Most correlated input, or the kept representative of a duplicate.
    pub related: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PrefilterReport {
    pub kept: Vec<usize>,
    pub removed: Vec<Removal>,
}

/// Pearson correlation. Zero when either vector is constant.
pub fn correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            context: "correlation",
            expected: a.len(),
            found: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::Dataset("correlation needs at least two samples".into()));
    }
    Ok(dot(&standardize(a), &standardize(b)))
}

/// Centers and scales to unit Euclidean norm; constants map to all zeros.
pub(crate) fn standardize(a: &[f64]) -> Vec<f64> {
    let n = a.len() as f64;
    let mean = a.iter().sum::<f64>() / n;
    let mut c: Vec<f64> = a.iter().map(|v| v - mean).collect();
    let norm = libm::sqrt(c.iter().map(|v| v * v).sum::<f64>());
    if norm > 0.0 {
        c.iter_mut().for_each(|v| *v /= norm);
    } else {
        c.iter_mut().for_each(|v| *v = 0.0);
    }
    c
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>().clamp(-1.0, 1.0)
}

fn normalized_variance(z: &[f64]) -> f64 {
    let peak = z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return 0.0;
    }
    let s = population_std(z) / peak;
    s * s
}

/// Prefilter every candidate channel of the training split.
pub fn prefilter(train: &TimeSeriesDataset, cfg: &PrefilterConfig) -> Result<PrefilterReport> {
    prefilter_pool(train, &train.candidates(), cfg, &Executor::sequential())
}

/// Prefilter an explicit candidate pool.
pub fn prefilter_pool(train: &TimeSeriesDataset, pool: &[usize], cfg: &PrefilterConfig, exec: &Executor) -> Result<PrefilterReport> {
    cfg.validate()?;
    let mut pool = pool.to_vec();
    pool.sort_unstable();
    pool.dedup();
    let mut removed = Vec::new();

    let mut survivors = Vec::new();
    for &c in &pool {
        let nv = normalized_variance(&train.pooled(c));
        if nv < cfg.variance_epsilon || nv == 0.0 {
            removed.push(Removal {
                index: c,
                reason: RemovalReason::NearConstant,
                evidence: nv,
                related: None,
            });
        } else {
            survivors.push(c);
        }
    }

    let inputs: Vec<(usize, Vec<f64>)> = train
        .inputs()
        .into_iter()
        .map(|i| (i, standardize(&train.pooled(i))))
        .collect();
    let std_vectors: Vec<(usize, Vec<f64>)> = exec.map(&survivors, |&c| (c, standardize(&train.pooled(c))));
    let mut kept: Vec<(usize, Vec<f64>)> = Vec::new();
    for (c, z) in std_vectors {
        let mut best: Option<(usize, f64)> = None;
        for (i, u) in &inputs {
            let r = dot(&z, u).abs();
            if best.is_none_or(|(_, b)| r > b) {
                best = Some((*i, r));
            }
        }
        match best {
            Some((i, r)) if r > cfg.input_corr_threshold => removed.push(Removal {
                index: c,
                reason: RemovalReason::InputCollinear,
                evidence: r,
                related: Some(i),
            }),
            _ => kept.push((c, z)),
        }
    }

    let kept_idx = if cfg.dedupe_enabled && kept.len() > 1 {
        let (reps, dups) = dedupe(&kept, cfg.dedupe_corr_threshold, exec);
        removed.extend(dups);
        reps
    } else {
        kept.iter().map(|(c, _)| *c).collect()
    };

    removed.sort_by_key(|r| r.index);
    Ok(PrefilterReport {
        kept: kept_idx,
        removed,
    })
}

/// Complete-linkage agglomeration on |r|. Returns (kept, removed).
fn dedupe(vectors: &[(usize, Vec<f64>)], threshold: f64, exec: &Executor) -> (Vec<usize>, Vec<Removal>) {
    let k = vectors.len();
    let rows: Vec<usize> = (0..k).collect();
    let sim: Vec<Vec<f64>> = exec.map(&rows, |&i| {
        (0..k)
            .map(|j| if i == j { 1.0 } else { dot(&vectors[i].1, &vectors[j].1).abs() })
            .collect()
    });

    // linkage[a][b]: smallest |r| between members of clusters a and b
    let mut linkage = sim.clone();
    let mut members: Vec<Vec<usize>> = (0..k).map(|i| alloc::vec![i]).collect();
    let mut alive: Vec<bool> = alloc::vec![true; k];
    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        for a in 0..k {
            if !alive[a] {
                continue;
            }
            for b in a + 1..k {
                if !alive[b] {
                    continue;
                }
                let s = linkage[a][b];
                if s >= threshold && best.is_none_or(|(_, _, bs)| s > bs) {
                    best = Some((a, b, s));
                }
            }
        }
        let Some((a, b, _)) = best else { break };
        let moved = core::mem::take(&mut members[b]);
        members[a].extend(moved);
        alive[b] = false;
        for c in 0..k {
            let s = linkage[a][c].min(linkage[b][c]);
            linkage[a][c] = s;
            linkage[c][a] = s;
        }
    }

    let mut kept = Vec::new();
    let mut removed = Vec::new();
    for (a, group) in members.iter().enumerate() {
        if !alive[a] {
            continue;
        }
        // vectors are in ascending channel order, so the smallest position is
        // the lowest channel index
        let rep = *group.iter().min().expect("non-empty cluster");
        kept.push(vectors[rep].0);
        for &m in group {
            if m != rep {
                removed.push(Removal {
                    index: vectors[m].0,
                    reason: RemovalReason::Duplicate,
                    evidence: sim[rep][m],
                    related: Some(vectors[rep].0),
                });
            }
        }
    }
    kept.sort_unstable();
    (kept, removed)
}
