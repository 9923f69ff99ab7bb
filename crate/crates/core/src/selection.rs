//! Types shared by the selectors: the subset evaluator and the selection
//! result.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::cost::{channel_scale, score, ChannelScales, CostBreakdown};
use crate::data::TimeSeriesDataset;
use crate::dmdc::{fit_model, StateSpaceModel, TruncationPolicy};
use crate::ga::GaDiagnostics;
use crate::rfe::RfeDiagnostics;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    /// Per-subsystem RFE, cross-influence imports, merged exhaustive sweep.
    RfeDmdc,
    /// RFE over the whole pool with no subsystem awareness.
    RfeNaive,
    GaDmdc,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::RfeDmdc => "rfe",
            Method::RfeNaive => "rfe-naive",
            Method::GaDmdc => "ga",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostics {
    Rfe(RfeDiagnostics),
    Ga(GaDiagnostics),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub method: Method,
    pub max_states: usize,
    /// Channel indices into the dataset, ascending.
    pub indices: Vec<usize>,
    pub names: Vec<String>,
    pub subsystems: Vec<String>,
    pub j_train: CostBreakdown,
    pub j_test: CostBreakdown,
    /// Final model fitted on the training split.
    pub model: StateSpaceModel,
    pub diagnostics: Diagnostics,
}

/// Fits DMDc models for candidate subsets on a fixed training split and
/// scores them with training-set scales computed once per channel.
pub struct SubsetEvaluator<'a> {
    train: &'a TimeSeriesDataset,
    outputs: Vec<usize>,
    policy: TruncationPolicy,
    floor: f64,
    sigma: BTreeMap<usize, f64>,
}

impl<'a> SubsetEvaluator<'a> {
    pub fn new(train: &'a TimeSeriesDataset, pool: &[usize], policy: TruncationPolicy, floor: f64) -> Self {
        let outputs = train.outputs();
        let sigma = pool
            .iter()
            .chain(outputs.iter())
            .map(|&c| (c, channel_scale(train, c, floor)))
            .collect();
        SubsetEvaluator {
            train,
            outputs,
            policy,
            floor,
            sigma,
        }
    }

    pub fn train(&self) -> &TimeSeriesDataset {
        self.train
    }

    pub fn policy(&self) -> &TruncationPolicy {
        &self.policy
    }

    pub fn scales(&self, state_idx: &[usize]) -> ChannelScales {
        let get = |c: &usize| match self.sigma.get(c) {
            Some(s) => *s,
            None => channel_scale(self.train, *c, self.floor),
        };
        ChannelScales {
            sigma_x: state_idx.iter().map(get).collect(),
            sigma_y: self.outputs.iter().map(get).collect(),
            floor: self.floor,
        }
    }

    pub fn fit(&self, state_idx: &[usize]) -> Result<(StateSpaceModel, CostBreakdown)> {
        let model = fit_model(self.train, state_idx, &self.policy)?;
        let c = score(self.train, &model, state_idx, &self.outputs, &self.scales(state_idx))?;
        Ok((model, c))
    }

    /// Training cost, `+∞` when the fit is degenerate or the rollout diverges.
    pub fn j_train(&self, state_idx: &[usize]) -> f64 {
        match self.fit(state_idx) {
            Ok((_, c)) if c.j.is_finite() => c.j,
            _ => f64::INFINITY,
        }
    }

    /// Final fit on the training split and scoring on both splits.
    pub fn finalize(
        &self,
        test: &TimeSeriesDataset,
        indices: &[usize],
        method: Method,
        max_states: usize,
        diagnostics: Diagnostics,
    ) -> Result<SelectionResult> {
        let mut indices = indices.to_vec();
        indices.sort_unstable();
        let (model, j_train) = self.fit(&indices)?;
        let j_test = score(test, &model, &indices, &self.outputs, &self.scales(&indices))?;
        Ok(SelectionResult {
            method,
            max_states,
            names: self.train.names(&indices),
            subsystems: indices.iter().map(|&i| self.train.channel(i).subsystem.clone()).collect(),
            indices,
            j_train,
            j_test,
            model,
            diagnostics,
        })
    }
}

/// Total order used to rank subsets: lower cost, then fewer variables, then
/// the lexicographically smaller ascending index list.
pub fn better(a_cost: f64, a: &[usize], b_cost: f64, b: &[usize]) -> bool {
    match a_cost.partial_cmp(&b_cost) {
        Some(core::cmp::Ordering::Less) => true,
        Some(core::cmp::Ordering::Greater) => false,
        _ => {
            if a_cost.is_nan() != b_cost.is_nan() {
                return b_cost.is_nan();
            }
            (a.len(), a) < (b.len(), b)
        }
    }
}
