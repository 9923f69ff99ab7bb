//! Truth-known benchmark datasets: the series RLC circuit and synthetic
//! multi-subsystem LTI systems.

mod formula;
mod rlc;
mod synth;

use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::data::TimeSeriesDataset;
use crate::{Error, Result};

pub use formula::{ar1, ChannelFormula, LinearForm};
pub use rlc::{rlc_default_excitations, simulate_rlc, RlcParams, RLC_INPUT, RLC_OUTPUTS};
pub use synth::{synth_default_excitations, simulate_synth, CouplingSpec, ExtraChannel, SubsystemSpec, SynthSystemSpec};

/// Periodic rectangular pulse train.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct SquareWaveSpec {
    pub offset: f64,
    pub amplitude: f64,
    pub period: f64,
    #[cfg_attr(feature = "serde", serde(default = "default_duty"))]
    pub duty: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub phase: f64,
}

#[cfg(feature = "serde")]
fn default_duty() -> f64 {
    0.5
}

impl SquareWaveSpec {
    pub fn new(offset: f64, amplitude: f64, period: f64) -> Self {
        SquareWaveSpec {
            offset,
            amplitude,
            period,
            duty: 0.5,
            phase: 0.0,
        }
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period > 0.0) || !(self.duty > 0.0 && self.duty < 1.0) {
            return Err(Error::Config("square wave needs period > 0 and 0 < duty < 1".into()));
        }
        if ![self.offset, self.amplitude, self.phase].iter().all(|v| v.is_finite()) {
            return Err(Error::Config("square wave parameters must be finite".into()));
        }
        Ok(())
    }

    pub fn value(&self, t: f64) -> f64 {
        square_wave(self, t)
    }
}

/// `offset + amplitude` while the fractional period position of `t − phase`
/// is below `duty`, `offset` otherwise.
pub fn square_wave(spec: &SquareWaveSpec, t: f64) -> f64 {
    let cycles = (t - spec.phase) / spec.period;
    let frac = cycles - libm::floor(cycles);
    if frac < spec.duty {
        spec.offset + spec.amplitude
    } else {
        spec.offset
    }
}

/// Known generating system behind a benchmark dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorTruth {
    pub kind: String,
    pub dt: f64,
    pub state_names: Vec<String>,
    pub state_subsystems: Vec<String>,
    pub input_names: Vec<String>,
    pub output_names: Vec<String>,
    /// Continuous-time matrices.
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    /// Zero-order-hold discretization used for the simulation.
    pub ad: DMatrix<f64>,
    pub bd: DMatrix<f64>,
    /// Candidate channel that reproduces each true state verbatim.
    pub state_channels: Vec<String>,
    pub couplings: Vec<CouplingSpec>,
    /// Defining formula of every output and candidate channel over the
    /// basis `state_names ++ input_names`.
    pub formulas: Vec<(String, ChannelFormula)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedDataset {
    pub dataset: TimeSeriesDataset,
    /// True state trajectories, one `n × steps` matrix per realization.
    pub states: Vec<DMatrix<f64>>,
    pub truth: GeneratorTruth,
}

/// `x(k+1) = Ad x(k) + Bd v(k)` from `x(0) = x0`; returns `n × steps`.
pub fn simulate_discrete(ad: &DMatrix<f64>, bd: &DMatrix<f64>, x0: &DVector<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
    let steps = v.ncols();
    let mut xs = DMatrix::zeros(ad.nrows(), steps);
    let mut x = x0.clone();
    for k in 0..steps {
        xs.set_column(k, &x);
        if k + 1 < steps {
            x = ad * &x + bd * v.column(k);
        }
    }
    xs
}

/// Every eigenvalue has a strictly negative real part.
pub fn is_hurwitz(a: &DMatrix<f64>) -> bool {
    if a.nrows() == 0 {
        return true;
    }
    if !a.iter().all(|v| v.is_finite()) {
        return false;
    }
    a.clone().complex_eigenvalues().iter().all(|l| l.re < 0.0)
}

pub(crate) fn sample_count(dt: f64, duration: f64) -> Result<usize> {
    if !(dt > 0.0) || !(duration > 0.0) || !dt.is_finite() || !duration.is_finite() {
        return Err(Error::Config("dt and duration must be positive".into()));
    }
    let steps = libm::round(duration / dt) as usize;
    if steps < 2 {
        return Err(Error::Config("duration must cover at least two samples".into()));
    }
    Ok(steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prefilter::correlation;

    #[test]
    fn square_wave_levels() {
        let s = SquareWaveSpec::new(0.0, 1.0, 2.0);
        assert_eq!(square_wave(&s, 0.5), 1.0);
        assert_eq!(square_wave(&s, 1.5), 0.0);
        assert_eq!(square_wave(&s, 0.0), 1.0);
        let shifted = s.with_phase(0.25);
        assert_eq!(square_wave(&shifted, 0.2), 0.0);
        assert_eq!(square_wave(&shifted, 1.2), 1.0);
        assert_eq!(square_wave(&shifted, 1.3), 0.0);
        assert!(SquareWaveSpec { duty: 1.0, ..s }.validate().is_err());
        assert!(SquareWaveSpec { period: 0.0, ..s }.validate().is_err());
    }

    #[test]
    fn staggered_phases_reduce_input_correlation() {
        let period = 7200.0;
        let samples = |phase: f64| -> Vec<f64> {
            let s = SquareWaveSpec::new(1.0, 1.0, period).with_phase(phase);
            (0..720).map(|k| square_wave(&s, k as f64 * 10.0)).collect()
        };
        let aligned = correlation(&samples(0.0), &samples(0.0)).unwrap();
        for (p, q) in [(0.0, 900.0), (900.0, 1800.0), (0.0, 1800.0)] {
            let r = correlation(&samples(p), &samples(q)).unwrap();
            assert!(r < aligned, "{p}/{q}: {r}");
        }
    }

    #[test]
    fn hurwitz_check() {
        assert!(is_hurwitz(&DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, -0.1])));
        assert!(!is_hurwitz(&DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])));
        assert!(!is_hurwitz(&DMatrix::from_row_slice(1, 1, &[0.2])));
    }

    #[test]
    fn discrete_simulation_starts_at_x0() {
        let ad = DMatrix::from_element(1, 1, 0.5);
        let bd = DMatrix::from_element(1, 1, 1.0);
        let xs = simulate_discrete(&ad, &bd, &DVector::from_element(1, 2.0), &DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 9.0]));
        assert_eq!(xs.as_slice(), &[2.0, 2.0, 1.0]);
    }
}
