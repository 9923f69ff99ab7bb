//! Series RLC circuit driven by a square-wave source, recorded through a
//! redundant set of 43 candidate channels.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use super::{sample_count, simulate_discrete, square_wave, ChannelFormula, GeneratedDataset, GeneratorTruth, LinearForm, SquareWaveSpec};
use crate::data::{ChannelMeta, ChannelRole, TimeSeriesDataset};
use crate::linalg::c2d_zoh;
use crate::{Error, Result};

pub const RLC_INPUT: &str = "input.v_S";
pub const RLC_OUTPUTS: [&str; 2] = ["output.v_C", "output.v_R"];

const V_C: &str = "v_C";
const I: &str = "i";
const V_S: &str = RLC_INPUT;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct RlcParams {
    /// Ohms.
    pub r: f64,
    /// Henries.
    pub l: f64,
    /// Farads.
    pub c: f64,
    pub dt: f64,
    pub duration: f64,
}

impl Default for RlcParams {
    fn default() -> Self {
        RlcParams {
            r: 1.0,
            l: 1e-3,
            c: 1e-3,
            dt: 1e-3,
            duration: 8.0,
        }
    }
}

impl RlcParams {
    pub fn validate(&self) -> Result<()> {
        if ![self.r, self.l, self.c, self.dt, self.duration].iter().all(|v| *v > 0.0 && v.is_finite()) {
            return Err(Error::Config("RLC parameters must be positive and finite".into()));
        }
        sample_count(self.dt, self.duration).map(|_| ())
    }

    /// State `(v_C, i)`, input `v_S`; loop law `v_S + v_R + v_L + v_C = 0`.
    pub fn matrices(&self) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0 / self.c, -1.0 / self.l, -self.r / self.l]);
        let b = DMatrix::from_row_slice(2, 1, &[0.0, -1.0 / self.l]);
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, self.r]);
        (a, b, c)
    }

    fn v_l(&self) -> LinearForm {
        LinearForm::new(&[(V_S, -1.0), (I, -self.r), (V_C, -1.0)], 0.0)
    }

    fn candidates(&self) -> Vec<(&'static str, ChannelFormula)> {
        let (r, l, c) = (self.r, self.l, self.c);
        let sig = LinearForm::signal;
        let v_l = self.v_l();
        let scaled_v_l = |g: f64| {
            let mut f = self.v_l();
            f.terms.iter_mut().for_each(|t| t.1 *= g);
            ChannelFormula::Linear(f)
        };
        let prod = |a: LinearForm, b: LinearForm, s: f64| ChannelFormula::product(a, b, s);
        alloc::vec![
            // physical quantities
            ("capacitor.v", ChannelFormula::signal(V_C)),
            ("capacitor.p.i", ChannelFormula::signal(I)),
            ("inductor.v", ChannelFormula::Linear(v_l.clone())),
            ("capacitor.energy", prod(sig(V_C), sig(V_C), 0.5 * c)),
            ("inductor.energy", prod(sig(I), sig(I), 0.5 * l)),
            ("capacitor.power", prod(sig(V_C), sig(I), 1.0)),
            ("inductor.power", prod(v_l.clone(), sig(I), 1.0)),
            ("source.power", prod(sig(V_S), sig(I), 1.0)),
            // aliases of the above
            ("capacitor.q", ChannelFormula::scaled(V_C, c)),
            ("capacitor.p.v", ChannelFormula::signal(V_C)),
            ("sensor_vC.v", ChannelFormula::signal(V_C)),
            ("capacitor.v_kV", ChannelFormula::scaled(V_C, 1e-3)),
            ("resistor.i", ChannelFormula::signal(I)),
            ("inductor.i", ChannelFormula::signal(I)),
            ("inductor.p.i", ChannelFormula::signal(I)),
            ("resistor.p.i", ChannelFormula::signal(I)),
            ("source.i", ChannelFormula::scaled(I, -1.0)),
            ("capacitor.n.i", ChannelFormula::scaled(I, -1.0)),
            ("resistor.v", ChannelFormula::scaled(I, r)),
            ("ammeter.i", ChannelFormula::signal(I)),
            ("inductor.v_rev", scaled_v_l(-1.0)),
            ("inductor.der_i", scaled_v_l(1.0 / l)),
            ("capacitor.energy_mJ", prod(sig(V_C), sig(V_C), 0.5 * c * 1e3)),
            ("resistor.LossPower", prod(sig(I), sig(I), r)),
            ("inductor.energy_mJ", prod(sig(I), sig(I), 0.5 * l * 1e3)),
            ("capacitor.der_energy", prod(sig(V_C), sig(I), 1.0)),
            ("inductor.der_energy", prod(v_l, sig(I), 1.0)),
            ("source.power_delivered", prod(sig(V_S), sig(I), -1.0)),
            // tied to the source voltage
            ("source.v", ChannelFormula::signal(V_S)),
            ("source.p.v", ChannelFormula::signal(V_S)),
            ("source.signal", ChannelFormula::signal(V_S)),
            ("sensor_vS.v", ChannelFormula::signal(V_S)),
            ("source.v_kV", ChannelFormula::scaled(V_S, 1e-3)),
            ("source.v_neg", ChannelFormula::scaled(V_S, -1.0)),
            ("source.gain_out", ChannelFormula::scaled(V_S, 2.0)),
            // parameters and references
            ("resistor.R", ChannelFormula::constant(r)),
            ("inductor.L", ChannelFormula::constant(l)),
            ("capacitor.C", ChannelFormula::constant(c)),
            ("ground.p.v", ChannelFormula::constant(0.0)),
            ("source.n.v", ChannelFormula::constant(0.0)),
            ("resistor.T", ChannelFormula::constant(293.15)),
            ("resistor.alpha", ChannelFormula::constant(0.0)),
            ("resistor.T_ref", ChannelFormula::constant(300.15)),
        ]
    }
}

/// Five excitation levels with fast periods so `v_C` stays clear of the
/// source voltage in correlation.
pub fn rlc_default_excitations() -> Vec<SquareWaveSpec> {
    [(0.5, 1.0, 8e-3), (1.0, 2.0, 12e-3), (-1.0, 1.5, 16e-3), (2.0, -1.0, 10e-3), (0.0, 3.0, 20e-3)]
        .iter()
        .map(|&(o, a, p)| SquareWaveSpec::new(o, a, p))
        .collect()
}

/// Exact zero-order-hold simulation, one realization per excitation, from
/// a discharged circuit.
pub fn simulate_rlc(params: &RlcParams, excitations: &[SquareWaveSpec]) -> Result<GeneratedDataset> {
    params.validate()?;
    if excitations.is_empty() {
        return Err(Error::Config("at least one excitation is required".into()));
    }
    for e in excitations {
        e.validate()?;
    }
    let steps = sample_count(params.dt, params.duration)?;
    let (a, b, c) = params.matrices();
    let (ad, bd) = c2d_zoh(&a, &b, params.dt)?;
    let basis_names: Vec<String> = [V_C, I, V_S].iter().map(|s| s.to_string()).collect();

    let mut channels: Vec<(ChannelMeta, ChannelFormula)> = alloc::vec![
        (ChannelMeta::new(RLC_INPUT, ChannelRole::Input, ""), ChannelFormula::signal(V_S)),
        (ChannelMeta::new(RLC_OUTPUTS[0], ChannelRole::Output, ""), ChannelFormula::signal(V_C)),
        (ChannelMeta::new(RLC_OUTPUTS[1], ChannelRole::Output, ""), ChannelFormula::scaled(I, params.r)),
    ];
    for (name, f) in params.candidates() {
        channels.push((ChannelMeta::new(name, ChannelRole::Candidate, "").with_formula(f.describe()), f));
    }

    let mut realizations = Vec::with_capacity(excitations.len());
    let mut states = Vec::with_capacity(excitations.len());
    for (r, spec) in excitations.iter().enumerate() {
        let v = DMatrix::from_fn(1, steps, |_, k| square_wave(spec, k as f64 * params.dt));
        let xs = simulate_discrete(&ad, &bd, &DVector::zeros(2), &v);
        let basis: Vec<Vec<f64>> = alloc::vec![
            xs.row(0).iter().copied().collect(),
            xs.row(1).iter().copied().collect(),
            v.row(0).iter().copied().collect(),
        ];
        let mut m = DMatrix::zeros(channels.len(), steps);
        for (row, (_, f)) in channels.iter().enumerate() {
            let values = f.evaluate(&basis_names, &basis, r)?;
            m.row_mut(row).iter_mut().zip(values).for_each(|(d, s)| *d = s);
        }
        realizations.push(m);
        states.push(xs);
    }

    let formulas = channels
        .iter()
        .filter(|(meta, _)| meta.role != ChannelRole::Input)
        .map(|(meta, f)| (meta.name.clone(), f.clone()))
        .collect();
    let manifest = channels.into_iter().map(|(meta, _)| meta).collect();
    let dataset = TimeSeriesDataset::new(params.dt, manifest, realizations)?;
    let truth = GeneratorTruth {
        kind: "rlc".into(),
        dt: params.dt,
        state_names: alloc::vec![V_C.into(), I.into()],
        state_subsystems: alloc::vec![String::new(), String::new()],
        input_names: alloc::vec![RLC_INPUT.into()],
        output_names: RLC_OUTPUTS.iter().map(|s| s.to_string()).collect(),
        a,
        b,
        c,
        ad,
        bd,
        state_channels: alloc::vec!["capacitor.v".into(), "capacitor.p.i".into()],
        couplings: Vec::new(),
        formulas,
    };
    Ok(GeneratedDataset { dataset, states, truth })
}
