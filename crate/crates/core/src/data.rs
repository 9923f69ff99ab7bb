//! Channel metadata, multi-realization datasets, prefix splitting and DMDc
//! snapshot assembly.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ChannelRole {
    Input,
    Output,
    Candidate,
}

impl ChannelRole {
    pub fn as_str(&self) -> &'static str {
        match self {
            ChannelRole::Input => "input",
            ChannelRole::Output => "output",
            ChannelRole::Candidate => "candidate",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "input" => Some(ChannelRole::Input),
            "output" => Some(ChannelRole::Output),
            "candidate" => Some(ChannelRole::Candidate),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMeta {
    pub name: String,
    pub role: ChannelRole,
    /// Empty for single-subsystem data.
    pub subsystem: String,
    /// Defining expression for generated channels, kept for bookkeeping.
    pub formula: Option<String>,
}

impl ChannelMeta {
    pub fn new(name: impl Into<String>, role: ChannelRole, subsystem: impl Into<String>) -> Self {
        ChannelMeta {
            name: name.into(),
            role,
            subsystem: subsystem.into(),
            formula: None,
        }
    }

    pub fn with_formula(mut self, formula: impl Into<String>) -> Self {
        self.formula = Some(formula.into());
        self
    }
}

/// Uniformly sampled recordings: one `channels × steps` matrix per
/// realization, rows aligned with `manifest`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesDataset {
    dt: f64,
    manifest: Vec<ChannelMeta>,
    realizations: Vec<DMatrix<f64>>,
}

impl TimeSeriesDataset {
    pub fn new(dt: f64, manifest: Vec<ChannelMeta>, realizations: Vec<DMatrix<f64>>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Dataset(format!("dt must be positive and finite, got {dt}")));
        }
        let mut seen = BTreeSet::new();
        for ch in &manifest {
            if !seen.insert(ch.name.as_str()) {
                return Err(Error::DuplicateChannel(ch.name.clone()));
            }
        }
        if !manifest.iter().any(|c| c.role == ChannelRole::Input) {
            return Err(Error::Dataset("no input channel declared".into()));
        }
        if !manifest.iter().any(|c| c.role == ChannelRole::Output) {
            return Err(Error::Dataset("no output channel declared".into()));
        }
        if realizations.is_empty() {
            return Err(Error::Dataset("no realizations".into()));
        }
        for (r, m) in realizations.iter().enumerate() {
            if m.nrows() != manifest.len() {
                return Err(Error::DimensionMismatch {
                    context: "realization channel count",
                    expected: manifest.len(),
                    found: m.nrows(),
                });
            }
            if m.ncols() < 2 {
                return Err(Error::TooShort {
                    realization: r,
                    steps: m.ncols(),
                    required: 2,
                });
            }
            for step in 0..m.ncols() {
                for (row, ch) in manifest.iter().enumerate() {
                    if !m[(row, step)].is_finite() {
                        return Err(Error::NonFinite {
                            channel: ch.name.clone(),
                            realization: r,
                            step,
                        });
                    }
                }
            }
        }
        Ok(TimeSeriesDataset {
            dt,
            manifest,
            realizations,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn manifest(&self) -> &[ChannelMeta] {
        &self.manifest
    }

    pub fn realizations(&self) -> &[DMatrix<f64>] {
        &self.realizations
    }

    pub fn channel_count(&self) -> usize {
        self.manifest.len()
    }

    pub fn channel(&self, index: usize) -> &ChannelMeta {
        &self.manifest[index]
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.manifest.iter().position(|c| c.name == name)
    }

    pub fn names(&self, indices: &[usize]) -> Vec<String> {
        indices.iter().map(|&i| self.manifest[i].name.clone()).collect()
    }

    fn with_role(&self, role: ChannelRole) -> Vec<usize> {
        self.manifest
            .iter()
            .enumerate()
            .filter(|(_, c)| c.role == role)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn inputs(&self) -> Vec<usize> {
        self.with_role(ChannelRole::Input)
    }

    pub fn outputs(&self) -> Vec<usize> {
        self.with_role(ChannelRole::Output)
    }

    pub fn candidates(&self) -> Vec<usize> {
        self.with_role(ChannelRole::Candidate)
    }

    /// Distinct subsystem labels in first-appearance order.
    pub fn subsystems(&self) -> Vec<String> {
        let mut labels: Vec<String> = Vec::new();
        for c in &self.manifest {
            if !labels.contains(&c.subsystem) {
                labels.push(c.subsystem.clone());
            }
        }
        labels
    }

    /// Outputs labelled with `subsystem`, or every output when none are.
    pub fn outputs_of(&self, subsystem: &str) -> Vec<usize> {
        let own: Vec<usize> = self
            .outputs()
            .into_iter()
            .filter(|&i| self.manifest[i].subsystem == subsystem)
            .collect();
        if own.is_empty() {
            self.outputs()
        } else {
            own
        }
    }

    pub fn steps(&self) -> Vec<usize> {
        self.realizations.iter().map(|m| m.ncols()).collect()
    }

    pub fn total_samples(&self) -> usize {
        self.realizations.iter().map(|m| m.ncols()).sum()
    }

    /// All samples of one channel, realizations concatenated in order.
    pub fn pooled(&self, channel: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.total_samples());
        for m in &self.realizations {
            out.extend(m.row(channel).iter().copied());
        }
        out
    }

    /// Rows `channels` of every realization.
    pub fn rows(&self, realization: usize, channels: &[usize]) -> DMatrix<f64> {
        let m = &self.realizations[realization];
        DMatrix::from_fn(channels.len(), m.ncols(), |r, c| m[(channels[r], c)])
    }

    fn check_candidates(&self, state_idx: &[usize]) -> Result<()> {
        if state_idx.is_empty() {
            return Err(Error::Dataset("empty state index set".into()));
        }
        for &i in state_idx {
            let ch = self.manifest.get(i).ok_or(Error::ChannelOutOfRange(i))?;
            if ch.role != ChannelRole::Candidate {
                return Err(Error::NotCandidate {
                    index: i,
                    name: ch.name.clone(),
                });
            }
        }
        Ok(())
    }
}

/// Leading-prefix train fraction applied per realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec { train_fraction: 0.8 }
    }
}

/// Splits every realization into a leading training prefix of
/// `floor(fraction · steps)` samples and the remaining suffix. Both sides must
/// keep at least two samples so they can be rolled out and scored.
pub fn split(ds: &TimeSeriesDataset, spec: SplitSpec) -> Result<(TimeSeriesDataset, TimeSeriesDataset)> {
    let f = spec.train_fraction;
    if !(f > 0.0 && f < 1.0) {
        return Err(Error::Config(format!("train_fraction must lie in (0,1), got {f}")));
    }
    let mut train = Vec::with_capacity(ds.realizations.len());
    let mut test = Vec::with_capacity(ds.realizations.len());
    for (r, m) in ds.realizations.iter().enumerate() {
        let steps = m.ncols();
        let n_train = libm::floor(f * steps as f64) as usize;
        if n_train < 2 {
            return Err(Error::TooShort {
                realization: r,
                steps: n_train,
                required: 2,
            });
        }
        if steps - n_train < 2 {
            return Err(Error::TooShort {
                realization: r,
                steps: steps - n_train,
                required: 2,
            });
        }
        train.push(m.columns(0, n_train).into_owned());
        test.push(m.columns(n_train, steps - n_train).into_owned());
    }
    Ok((
        TimeSeriesDataset {
            dt: ds.dt,
            manifest: ds.manifest.clone(),
            realizations: train,
        },
        TimeSeriesDataset {
            dt: ds.dt,
            manifest: ds.manifest.clone(),
            realizations: test,
        },
    ))
}

/// Column-aligned DMDc regression data. Column `k` pairs a sample with its
/// successor inside the same realization.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    pub x: DMatrix<f64>,
    pub xp: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub y: DMatrix<f64>,
}

impl SnapshotSet {
    pub fn columns(&self) -> usize {
        self.x.ncols()
    }

    /// `Ω = [X; V]`
    pub fn omega(&self) -> DMatrix<f64> {
        let n = self.x.nrows();
        let m = self.v.nrows();
        let mut om = DMatrix::zeros(n + m, self.x.ncols());
        om.view_mut((0, 0), (n, self.x.ncols())).copy_from(&self.x);
        om.view_mut((n, 0), (m, self.x.ncols())).copy_from(&self.v);
        om
    }
}

/// Snapshot matrices for the candidate channels `state_idx`, using every input
/// and output channel of the dataset.
pub fn assemble_snapshots(ds: &TimeSeriesDataset, state_idx: &[usize]) -> Result<SnapshotSet> {
    assemble_snapshots_with(ds, state_idx, &ds.outputs())
}

/// As [`assemble_snapshots`] with an explicit output channel list.
pub fn assemble_snapshots_with(ds: &TimeSeriesDataset, state_idx: &[usize], output_idx: &[usize]) -> Result<SnapshotSet> {
    ds.check_candidates(state_idx)?;
    let inputs = ds.inputs();
    let total: usize = ds.realizations.iter().map(|m| m.ncols() - 1).sum();
    let n = state_idx.len();
    let mut x = DMatrix::zeros(n, total);
    let mut xp = DMatrix::zeros(n, total);
    let mut v = DMatrix::zeros(inputs.len(), total);
    let mut y = DMatrix::zeros(output_idx.len(), total);
    let mut col = 0;
    for m in &ds.realizations {
        let pairs = m.ncols() - 1;
        for k in 0..pairs {
            for (r, &ch) in state_idx.iter().enumerate() {
                x[(r, col + k)] = m[(ch, k)];
                xp[(r, col + k)] = m[(ch, k + 1)];
            }
            for (r, &ch) in inputs.iter().enumerate() {
                v[(r, col + k)] = m[(ch, k)];
            }
            for (r, &ch) in output_idx.iter().enumerate() {
                y[(r, col + k)] = m[(ch, k)];
            }
        }
        col += pairs;
    }
    Ok(SnapshotSet { x, xp, v, y })
}
