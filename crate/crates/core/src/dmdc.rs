//! Dynamic mode decomposition with control.
//!
//! `G = [Ad Bd] = X' Ω†` with `Ω = [X; V]`, the pseudoinverse taken through a
//! condition-capped truncated SVD, and the output map `Cd = Y X†`. The
//! feedthrough `Dd` is identically zero.

use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::data::{assemble_snapshots_with, SnapshotSet, TimeSeriesDataset};
pub use crate::linalg::{c2d_zoh, TruncationPolicy};
use crate::linalg::truncated_svd;
use crate::{Error, Result};

/// Discrete-time `x(k+1) = Ad x(k) + Bd v(k)`, `y(k) = Cd x(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    pub ad: DMatrix<f64>,
    pub bd: DMatrix<f64>,
    pub cd: DMatrix<f64>,
    pub state_names: Vec<String>,
    pub input_names: Vec<String>,
    pub output_names: Vec<String>,
    pub dt: f64,
}

impl StateSpaceModel {
    pub fn new(
        ad: DMatrix<f64>,
        bd: DMatrix<f64>,
        cd: DMatrix<f64>,
        state_names: Vec<String>,
        input_names: Vec<String>,
        output_names: Vec<String>,
        dt: f64,
    ) -> Result<Self> {
        let model = StateSpaceModel {
            ad,
            bd,
            cd,
            state_names,
            input_names,
            output_names,
            dt,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.ad.nrows();
        let checks = [
            ("Ad columns", n, self.ad.ncols()),
            ("Bd rows", n, self.bd.nrows()),
            ("Cd columns", n, self.cd.ncols()),
            ("state names", n, self.state_names.len()),
            ("input names", self.bd.ncols(), self.input_names.len()),
            ("output names", self.cd.nrows(), self.output_names.len()),
        ];
        for (context, expected, found) in checks {
            if expected != found {
                return Err(Error::DimensionMismatch {
                    context,
                    expected,
                    found,
                });
            }
        }
        let finite = self
            .ad
            .iter()
            .chain(self.bd.iter())
            .chain(self.cd.iter())
            .all(|v| v.is_finite());
        if !finite || !(self.dt > 0.0) {
            return Err(Error::Dataset("model has non-finite entries or invalid dt".into()));
        }
        Ok(())
    }

    pub fn states(&self) -> usize {
        self.ad.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.bd.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.cd.nrows()
    }

    /// Always zero: there is no direct feedthrough.
    pub fn dd(&self) -> DMatrix<f64> {
        DMatrix::zeros(self.outputs(), self.inputs())
    }
}

/// Least-squares `(Ad, Bd)` restricted to the truncated right-singular
/// subspace of `Ω`.
pub fn fit_dynamics(s: &SnapshotSet, policy: &TruncationPolicy) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = s.x.nrows();
    let m = s.v.nrows();
    if s.xp.ncols() != s.x.ncols() || s.v.ncols() != s.x.ncols() {
        return Err(Error::DimensionMismatch {
            context: "snapshot columns",
            expected: s.x.ncols(),
            found: s.xp.ncols().min(s.v.ncols()),
        });
    }
    let svd = truncated_svd(&s.omega(), policy)?;
    // X' W Σ⁻¹, then split Uᵀ into the state and input blocks
    let core = svd.right_project(&s.xp);
    let u1 = svd.u.rows(0, n);
    let u2 = svd.u.rows(n, m);
    Ok((&core * u1.transpose(), &core * u2.transpose()))
}

/// Minimum-norm least-squares output map `Cd = Y X†`.
pub fn fit_output_map(x: &DMatrix<f64>, y: &DMatrix<f64>, policy: &TruncationPolicy) -> Result<DMatrix<f64>> {
    if x.ncols() != y.ncols() {
        return Err(Error::DimensionMismatch {
            context: "output map columns",
            expected: x.ncols(),
            found: y.ncols(),
        });
    }
    Ok(truncated_svd(x, policy)?.solve_right(y))
}

/// Open-loop prediction. Column `k-1` of the returned matrices holds
/// `x̂(k)`, `ŷ(k)` for `k = 1..=K`, driven by input columns `v(0..K-1)`.
pub fn rollout(model: &StateSpaceModel, x0: &DVector<f64>, v: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if x0.len() != model.states() {
        return Err(Error::DimensionMismatch {
            context: "rollout initial state",
            expected: model.states(),
            found: x0.len(),
        });
    }
    if v.nrows() != model.inputs() {
        return Err(Error::DimensionMismatch {
            context: "rollout input rows",
            expected: model.inputs(),
            found: v.nrows(),
        });
    }
    let k = v.ncols();
    let mut xs = DMatrix::zeros(model.states(), k);
    let mut x = x0.clone();
    for step in 0..k {
        x = &model.ad * &x + &model.bd * v.column(step);
        xs.set_column(step, &x);
    }
    let ys = &model.cd * &xs;
    Ok((xs, ys))
}

/// Fits a complete model on the training realizations for the candidate
/// channels `state_idx`.
pub fn fit_model(train: &TimeSeriesDataset, state_idx: &[usize], policy: &TruncationPolicy) -> Result<StateSpaceModel> {
    fit_model_with(train, state_idx, &train.outputs(), policy)
}

pub fn fit_model_with(
    train: &TimeSeriesDataset,
    state_idx: &[usize],
    output_idx: &[usize],
    policy: &TruncationPolicy,
) -> Result<StateSpaceModel> {
    let snaps = assemble_snapshots_with(train, state_idx, output_idx)?;
    let (ad, bd) = fit_dynamics(&snaps, policy)?;
    let cd = fit_output_map(&snaps.x, &snaps.y, policy)?;
    let model = StateSpaceModel {
        ad,
        bd,
        cd,
        state_names: train.names(state_idx),
        input_names: train.names(&train.inputs()),
        output_names: train.names(output_idx),
        dt: train.dt(),
    };
    if !model.ad.iter().chain(model.bd.iter()).chain(model.cd.iter()).all(|v| v.is_finite()) {
        return Err(Error::DegenerateSnapshots);
    }
    Ok(model)
}
