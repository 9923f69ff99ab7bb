//! Normalized mean-squared error over rolled-out states and outputs.
//!
//! ```text
//! J = 1/(n L) Σᵢ Σₖ ((x̂ᵢ(k) − xᵢ(k)) / σ(xᵢ))²  +  1/(p L) Σⱼ Σₖ ((ŷⱼ(k) − yⱼ(k)) / σ(yⱼ))²
//! ```
//!
//! Scales come from the training split only and are reused unchanged when
//! scoring held-out data.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::data::TimeSeriesDataset;
use crate::dmdc::{rollout, StateSpaceModel};
use crate::{Error, Result};

pub const DEFAULT_SCALE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelScales {
    pub sigma_x: Vec<f64>,
    pub sigma_y: Vec<f64>,
    pub floor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostBreakdown {
    pub j: f64,
    pub j_state: f64,
    pub j_output: f64,
    pub n: usize,
    pub p: usize,
    pub l: usize,
}

impl CostBreakdown {
    /// Sentinel used for candidates whose fit failed.
    pub fn infeasible(n: usize, p: usize) -> Self {
        CostBreakdown {
            j: f64::INFINITY,
            j_state: f64::INFINITY,
            j_output: f64::INFINITY,
            n,
            p,
            l: 0,
        }
    }
}

/// Population standard deviation of a sample, two-pass.
pub fn population_std(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    libm::sqrt(var)
}

/// Per-channel population std pooled over all training realizations, with
/// values below `floor` replaced by `floor`.
pub fn channel_scale(train: &TimeSeriesDataset, channel: usize, floor: f64) -> f64 {
    population_std(&train.pooled(channel)).max(floor)
}

pub fn compute_scales(train: &TimeSeriesDataset, state_idx: &[usize], floor: f64) -> ChannelScales {
    compute_scales_with(train, state_idx, &train.outputs(), floor)
}

pub fn compute_scales_with(train: &TimeSeriesDataset, state_idx: &[usize], output_idx: &[usize], floor: f64) -> ChannelScales {
    ChannelScales {
        sigma_x: state_idx.iter().map(|&c| channel_scale(train, c, floor)).collect(),
        sigma_y: output_idx.iter().map(|&c| channel_scale(train, c, floor)).collect(),
        floor,
    }
}

fn normalized_sse(pred: &DMatrix<f64>, truth: &DMatrix<f64>, sigma: &[f64]) -> f64 {
    let mut total = 0.0;
    for (i, s) in sigma.iter().enumerate() {
        let mut row = 0.0;
        for k in 0..pred.ncols() {
            let e = (pred[(i, k)] - truth[(i, k)]) / s;
            row += e * e;
        }
        total += row;
    }
    total
}

/// Cost of a prediction against truth over `L` aligned columns.
pub fn cost(
    pred_x: &DMatrix<f64>,
    pred_y: &DMatrix<f64>,
    truth_x: &DMatrix<f64>,
    truth_y: &DMatrix<f64>,
    scales: &ChannelScales,
) -> Result<CostBreakdown> {
    let n = scales.sigma_x.len();
    let p = scales.sigma_y.len();
    let l = pred_x.ncols();
    let shapes = [
        ("predicted states", (n, l), pred_x.shape()),
        ("true states", (n, l), truth_x.shape()),
        ("predicted outputs", (p, l), pred_y.shape()),
        ("true outputs", (p, l), truth_y.shape()),
    ];
    for (context, expected, found) in shapes {
        if expected != found {
            return Err(Error::DimensionMismatch {
                context,
                expected: expected.0 * expected.1,
                found: found.0 * found.1,
            });
        }
    }
    if l == 0 {
        return Err(Error::Dataset("cost needs at least one column".into()));
    }
    let j_state = if n > 0 {
        normalized_sse(pred_x, truth_x, &scales.sigma_x) / (n * l) as f64
    } else {
        0.0
    };
    let j_output = if p > 0 {
        normalized_sse(pred_y, truth_y, &scales.sigma_y) / (p * l) as f64
    } else {
        0.0
    };
    Ok(CostBreakdown {
        j: j_state + j_output,
        j_state,
        j_output,
        n,
        p,
        l,
    })
}

/// Predicted and true trajectories of every realization, concatenated.
#[derive(Debug, Clone)]
pub struct RolloutTrace {
    pub pred_x: DMatrix<f64>,
    pub pred_y: DMatrix<f64>,
    pub true_x: DMatrix<f64>,
    pub true_y: DMatrix<f64>,
    /// Rollout length per realization.
    pub lengths: Vec<usize>,
}

/// Rolls `model` out over every realization of `ds` from its first sample
/// `x̂(0) = x(0)` under the recorded inputs and pairs the predictions with
/// the recorded states and outputs at steps `1..l`.
pub fn rollout_dataset(ds: &TimeSeriesDataset, model: &StateSpaceModel, state_idx: &[usize], output_idx: &[usize]) -> Result<RolloutTrace> {
    let inputs = ds.inputs();
    let lengths: Vec<usize> = ds.steps().iter().map(|s| s - 1).collect();
    let total: usize = lengths.iter().sum();
    let n = state_idx.len();
    let p = output_idx.len();
    let mut trace = RolloutTrace {
        pred_x: DMatrix::zeros(n, total),
        pred_y: DMatrix::zeros(p, total),
        true_x: DMatrix::zeros(n, total),
        true_y: DMatrix::zeros(p, total),
        lengths: lengths.clone(),
    };
    let mut col = 0;
    for (r, &len) in lengths.iter().enumerate() {
        let states = ds.rows(r, state_idx);
        let outs = ds.rows(r, output_idx);
        let v = ds.rows(r, &inputs).columns(0, len).into_owned();
        let x0: DVector<f64> = states.column(0).into_owned();
        let (xs, ys) = rollout(model, &x0, &v)?;
        trace.pred_x.view_mut((0, col), (n, len)).copy_from(&xs);
        trace.pred_y.view_mut((0, col), (p, len)).copy_from(&ys);
        trace.true_x.view_mut((0, col), (n, len)).copy_from(&states.columns(1, len));
        trace.true_y.view_mut((0, col), (p, len)).copy_from(&outs.columns(1, len));
        col += len;
    }
    Ok(trace)
}

/// Rollout plus cost over a whole dataset.
pub fn score(ds: &TimeSeriesDataset, model: &StateSpaceModel, state_idx: &[usize], output_idx: &[usize], scales: &ChannelScales) -> Result<CostBreakdown> {
    let t = rollout_dataset(ds, model, state_idx, output_idx)?;
    cost(&t.pred_x, &t.pred_y, &t.true_x, &t.true_y, scales)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scales(sx: Vec<f64>, sy: Vec<f64>) -> ChannelScales {
        ChannelScales {
            sigma_x: sx,
            sigma_y: sy,
            floor: DEFAULT_SCALE_FLOOR,
        }
    }

    #[test]
    fn perfect_prediction_costs_nothing() {
        let x = DMatrix::from_element(2, 5, 1.5);
        let y = DMatrix::from_element(1, 5, -0.5);
        let c = cost(&x, &y, &x, &y, &scales(vec![1.0, 2.0], vec![3.0])).unwrap();
        assert_eq!(c.j, 0.0);
    }

    #[test]
    fn unit_sigma_errors_cost_two() {
        let sigma = 0.7;
        let truth = DMatrix::from_element(1, 8, 0.0);
        let pred = DMatrix::from_element(1, 8, sigma);
        let c = cost(&pred, &pred, &truth, &truth, &scales(vec![sigma], vec![sigma])).unwrap();
        assert_eq!(c.j, 2.0);
        assert_eq!((c.j_state, c.j_output), (1.0, 1.0));
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let a = DMatrix::zeros(2, 5);
        let b = DMatrix::zeros(1, 5);
        assert!(cost(&a, &b, &a, &DMatrix::zeros(1, 4), &scales(vec![1.0, 1.0], vec![1.0])).is_err());
    }

    #[test]
    fn floor_engages_on_constants() {
        assert_eq!(population_std(&[4.0; 10]).max(1e-9), 1e-9);
        assert_eq!(population_std(&[0.0, 2.0]), 1.0);
    }

    #[test]
    fn std_matches_textbook_two_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let xs: Vec<f64> = (0..1000).map(|_| rng.random_range(-3.0..5.0)).collect();
        let mut mean = 0.0;
        for x in &xs {
            mean += x;
        }
        mean /= 1000.0;
        let mut ss = 0.0;
        for x in &xs {
            ss += (x - mean).powi(2);
        }
        let reference = (ss / 1000.0).sqrt();
        assert_relative_eq!(population_std(&xs), reference, max_relative = 1e-12);
    }

    #[test]
    fn matches_double_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let r = |rows, cols, rng: &mut ChaCha8Rng| DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-2.0..2.0));
        let (px, py, tx, ty) = (r(3, 20, &mut rng), r(2, 20, &mut rng), r(3, 20, &mut rng), r(2, 20, &mut rng));
        let sx = vec![0.5, 1.0, 2.0];
        let sy = vec![0.3, 4.0];
        let c = cost(&px, &py, &tx, &ty, &scales(sx.clone(), sy.clone())).unwrap();
        let mut a = 0.0;
        for i in 0..3 {
            for k in 0..20 {
                a += ((px[(i, k)] - tx[(i, k)]) / sx[i]).powi(2);
            }
        }
        let mut b = 0.0;
        for j in 0..2 {
            for k in 0..20 {
                b += ((py[(j, k)] - ty[(j, k)]) / sy[j]).powi(2);
            }
        }
        let oracle = a / 60.0 + b / 40.0;
        assert_relative_eq!(c.j, oracle, max_relative = 1e-12);
    }

    #[test]
    fn concatenation_is_column_weighted_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let r = |rows, cols, rng: &mut ChaCha8Rng| DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-2.0..2.0));
        let s = scales(vec![1.3, 0.4], vec![2.0]);
        let parts: Vec<_> = [7usize, 13]
            .iter()
            .map(|&l| (r(2, l, &mut rng), r(1, l, &mut rng), r(2, l, &mut rng), r(1, l, &mut rng)))
            .collect();
        let cat = |f: &dyn Fn(&(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)) -> DMatrix<f64>| {
            let a = f(&parts[0]);
            let b = f(&parts[1]);
            let mut m = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
            m.view_mut((0, 0), a.shape()).copy_from(&a);
            m.view_mut((0, a.ncols()), b.shape()).copy_from(&b);
            m
        };
        let whole = cost(&cat(&|p| p.0.clone()), &cat(&|p| p.1.clone()), &cat(&|p| p.2.clone()), &cat(&|p| p.3.clone()), &s).unwrap();
        let per: Vec<_> = parts.iter().map(|p| cost(&p.0, &p.1, &p.2, &p.3, &s).unwrap()).collect();
        let weighted = (per[0].j * 7.0 + per[1].j * 13.0) / 20.0;
        assert_relative_eq!(whole.j, weighted, max_relative = 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use rand::Rng;

        proptest! {
            #[test]
            fn shrinking_errors_scales_cost_quadratically(seed in 0u64..500, lambda in 0.0f64..1.0) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let r = |rows, cols, rng: &mut ChaCha8Rng| DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-2.0..2.0));
                let (tx, ty) = (r(2, 10, &mut rng), r(1, 10, &mut rng));
                let (ex, ey) = (r(2, 10, &mut rng), r(1, 10, &mut rng));
                let s = scales(vec![0.5, 1.5], vec![2.5]);
                let c1 = cost(&(&tx + &ex), &(&ty + &ey), &tx, &ty, &s).unwrap();
                let c2 = cost(&(&tx + &ex * lambda), &(&ty + &ey * lambda), &tx, &ty, &s).unwrap();
                prop_assert!((c2.j - lambda * lambda * c1.j).abs() <= 1e-12 * (1.0 + c1.j));
            }

            #[test]
            fn rescaling_a_channel_leaves_cost_unchanged(seed in 0u64..500, alpha in 0.01f64..100.0) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let r = |rows, cols, rng: &mut ChaCha8Rng| DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-2.0..2.0));
                let (tx, px) = (r(2, 12, &mut rng), r(2, 12, &mut rng));
                let (ty, py) = (r(1, 12, &mut rng), r(1, 12, &mut rng));
                let sig = |m: &DMatrix<f64>, i: usize| population_std(&m.row(i).iter().copied().collect::<Vec<_>>());
                let s = scales(vec![sig(&tx, 0), sig(&tx, 1)], vec![sig(&ty, 0)]);
                let c1 = cost(&px, &py, &tx, &ty, &s).unwrap();
                let (mut tx2, mut px2) = (tx.clone(), px.clone());
                tx2.row_mut(1).scale_mut(alpha);
                px2.row_mut(1).scale_mut(alpha);
                let s2 = scales(vec![sig(&tx2, 0), sig(&tx2, 1)], vec![sig(&ty, 0)]);
                let c2 = cost(&px2, &py, &tx2, &ty, &s2).unwrap();
                prop_assert!((c1.j - c2.j).abs() <= 1e-10 * c1.j.max(1.0));
            }
        }
    }
}
