//! Block-structured continuous LTI systems with labelled subsystems,
//! optional cross-coupling and extra derived channels.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{is_hurwitz, sample_count, simulate_discrete, square_wave, ChannelFormula, GeneratedDataset, GeneratorTruth, LinearForm, SquareWaveSpec};
use crate::data::{ChannelMeta, ChannelRole, TimeSeriesDataset};
use crate::linalg::c2d_zoh;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct SubsystemSpec {
    pub name: String,
    pub states: Vec<String>,
    /// Row-major `n × n`.
    pub a: Vec<Vec<f64>>,
    pub inputs: Vec<String>,
    /// Row-major `n × m` over this subsystem's inputs.
    pub b: Vec<Vec<f64>>,
    pub outputs: Vec<String>,
    /// Row-major `p × n`, multiplied by `output_gain`.
    pub c: Vec<Vec<f64>>,
    #[cfg_attr(feature = "serde", serde(default = "unit"))]
    pub output_gain: f64,
}

#[cfg(feature = "serde")]
fn unit() -> f64 {
    1.0
}

/// Adds `gain` to `A[to, from]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct CouplingSpec {
    pub from: String,
    pub to: String,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct ExtraChannel {
    pub name: String,
    pub subsystem: String,
    pub formula: ChannelFormula,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct SynthSystemSpec {
    pub subsystems: Vec<SubsystemSpec>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub couplings: Vec<CouplingSpec>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub extra_channels: Vec<ExtraChannel>,
    /// Std of white measurement noise added to candidates and outputs.
    #[cfg_attr(feature = "serde", serde(default))]
    pub noise_level: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub noise_seed: u64,
    pub dt: f64,
    pub duration: f64,
}

fn rows(m: &[Vec<f64>], r: usize, c: usize, what: &str) -> Result<DMatrix<f64>> {
    if m.len() != r || m.iter().any(|row| row.len() != c) {
        return Err(Error::Config(format!("{what} must be {r}×{c}")));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| m[i][j]))
}

struct Assembled {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    states: Vec<String>,
    state_subsystems: Vec<String>,
    inputs: Vec<(String, String)>,
    outputs: Vec<(String, String)>,
}

impl SynthSystemSpec {
    /// Two second-order subsystems; A drives B through `coupling`. A has two
    /// outputs at gain 1e4, B one output at unit gain.
    pub fn two_subsystem(coupling: f64) -> Self {
        let (t1, t2, eps) = (2.0, 0.7, 0.05);
        let block = |p: &str, outputs: Vec<String>, c: Vec<Vec<f64>>, gain: f64| SubsystemSpec {
            name: p.to_uppercase(),
            states: alloc::vec![format!("{p}1"), format!("{p}2")],
            a: alloc::vec![alloc::vec![-1.0 / t1, 0.0], alloc::vec![eps, -1.0 / t2]],
            inputs: alloc::vec![format!("u{}", p.to_uppercase())],
            b: alloc::vec![alloc::vec![1.0 / t1], alloc::vec![0.0]],
            outputs,
            c,
            output_gain: gain,
        };
        let a = block(
            "a",
            alloc::vec!["yA1".into(), "yA2".into()],
            alloc::vec![alloc::vec![1.0, 0.5], alloc::vec![0.5, 1.0]],
            1e4,
        );
        let b = block("b", alloc::vec!["yB".into()], alloc::vec![alloc::vec![1.0, 0.5]], 1.0);
        let sig = LinearForm::signal;
        let extra = |name: &str, sub: &str, formula| ExtraChannel {
            name: name.into(),
            subsystem: sub.into(),
            formula,
        };
        SynthSystemSpec {
            subsystems: alloc::vec![a, b],
            couplings: if coupling != 0.0 {
                alloc::vec![CouplingSpec {
                    from: "a1".into(),
                    to: "b1".into(),
                    gain: coupling / t1,
                }]
            } else {
                Vec::new()
            },
            extra_channels: alloc::vec![
                extra("a1sq", "A", ChannelFormula::product(sig("a1"), sig("a1"), 1.0)),
                extra("arA", "A", ChannelFormula::Ar1 { pole: 0.98, std: 0.1, seed: 11 }),
                extra("b1b2", "B", ChannelFormula::product(sig("b1"), sig("b2"), 1.0)),
                extra("arB", "B", ChannelFormula::Ar1 { pole: 0.98, std: 0.1, seed: 12 }),
            ],
            noise_level: 0.0,
            noise_seed: 0,
            dt: 0.05,
            duration: 60.0,
        }
    }

    pub fn coupled() -> Self {
        Self::two_subsystem(0.3)
    }

    pub fn decoupled() -> Self {
        Self::two_subsystem(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        self.assemble().map(|_| ())
    }

    fn assemble(&self) -> Result<Assembled> {
        if self.subsystems.is_empty() {
            return Err(Error::Config("at least one subsystem is required".into()));
        }
        if !(self.noise_level >= 0.0) || !self.noise_level.is_finite() {
            return Err(Error::Config("noise level must be finite and non-negative".into()));
        }
        sample_count(self.dt, self.duration)?;
        let n: usize = self.subsystems.iter().map(|s| s.states.len()).sum();
        let m: usize = self.subsystems.iter().map(|s| s.inputs.len()).sum();
        let p: usize = self.subsystems.iter().map(|s| s.outputs.len()).sum();
        let mut a = DMatrix::zeros(n, n);
        let mut b = DMatrix::zeros(n, m);
        let mut c = DMatrix::zeros(p, n);
        let mut states = Vec::new();
        let mut state_subsystems = Vec::new();
        let mut inputs = Vec::new();
        let mut outputs = Vec::new();
        let (mut i0, mut j0, mut k0) = (0, 0, 0);
        for s in &self.subsystems {
            let (ns, ms, ps) = (s.states.len(), s.inputs.len(), s.outputs.len());
            if ns == 0 {
                return Err(Error::Config(format!("subsystem `{}` has no states", s.name)));
            }
            let sa = rows(&s.a, ns, ns, "subsystem A block")?;
            if !is_hurwitz(&sa) {
                return Err(Error::Unstable);
            }
            a.view_mut((i0, i0), (ns, ns)).copy_from(&sa);
            b.view_mut((i0, j0), (ns, ms)).copy_from(&rows(&s.b, ns, ms, "subsystem B block")?);
            c.view_mut((k0, i0), (ps, ns)).copy_from(&(rows(&s.c, ps, ns, "subsystem C block")? * s.output_gain));
            states.extend(s.states.iter().cloned());
            state_subsystems.extend(core::iter::repeat_n(s.name.clone(), ns));
            inputs.extend(s.inputs.iter().map(|u| (u.clone(), s.name.clone())));
            outputs.extend(s.outputs.iter().map(|y| (y.clone(), s.name.clone())));
            i0 += ns;
            j0 += ms;
            k0 += ps;
        }
        for cp in &self.couplings {
            let find = |name: &str| {
                states
                    .iter()
                    .position(|s| s == name)
                    .ok_or_else(|| Error::Config(format!("coupling references unknown state `{name}`")))
            };
            let (from, to) = (find(&cp.from)?, find(&cp.to)?);
            a[(to, from)] += cp.gain;
        }
        if !is_hurwitz(&a) {
            return Err(Error::Unstable);
        }
        let mut names: Vec<&str> = states.iter().map(String::as_str).collect();
        names.extend(inputs.iter().map(|(u, _)| u.as_str()));
        names.extend(outputs.iter().map(|(y, _)| y.as_str()));
        names.extend(self.extra_channels.iter().map(|e| e.name.as_str()));
        for (k, name) in names.iter().enumerate() {
            if names[..k].contains(name) {
                return Err(Error::DuplicateChannel(name.to_string()));
            }
        }
        for e in &self.extra_channels {
            if !self.subsystems.iter().any(|s| s.name == e.subsystem) {
                return Err(Error::Config(format!("channel `{}` names unknown subsystem `{}`", e.name, e.subsystem)));
            }
        }
        Ok(Assembled {
            a,
            b,
            c,
            states,
            state_subsystems,
            inputs,
            outputs,
        })
    }
}

/// Three realizations with staggered square waves on `uA` and `uB`.
pub fn synth_default_excitations() -> Vec<Vec<SquareWaveSpec>> {
    [(1.0, 1.0, 0.5, 1.0, 8.0), (2.0, -1.0, 1.0, 2.0, 11.0), (0.5, 2.0, -1.0, 1.5, 14.0)]
        .iter()
        .map(|&(oa, aa, ob, ab, per)| {
            alloc::vec![
                SquareWaveSpec::new(oa, aa, per),
                SquareWaveSpec::new(ob, ab, per * 1.3).with_phase(per / 4.0),
            ]
        })
        .collect()
}

/// Zero-order-hold simulation from rest, one realization per excitation
/// set (one wave per input, in subsystem order).
pub fn simulate_synth(spec: &SynthSystemSpec, excitations: &[Vec<SquareWaveSpec>]) -> Result<GeneratedDataset> {
    let sys = spec.assemble()?;
    let steps = sample_count(spec.dt, spec.duration)?;
    if excitations.is_empty() {
        return Err(Error::Config("at least one excitation set is required".into()));
    }
    for set in excitations {
        if set.len() != sys.inputs.len() {
            return Err(Error::DimensionMismatch {
                context: "excitation set",
                expected: sys.inputs.len(),
                found: set.len(),
            });
        }
        for w in set {
            w.validate()?;
        }
    }
    let (ad, bd) = c2d_zoh(&sys.a, &sys.b, spec.dt)?;
    let mut basis_names = sys.states.clone();
    basis_names.extend(sys.inputs.iter().map(|(u, _)| u.clone()));

    let mut channels: Vec<(ChannelMeta, ChannelFormula)> = Vec::new();
    for (u, sub) in &sys.inputs {
        channels.push((ChannelMeta::new(u.clone(), ChannelRole::Input, sub.clone()), ChannelFormula::signal(u)));
    }
    for (k, (y, sub)) in sys.outputs.iter().enumerate() {
        let terms: Vec<(&str, f64)> = sys
            .states
            .iter()
            .enumerate()
            .filter(|(j, _)| sys.c[(k, *j)] != 0.0)
            .map(|(j, s)| (s.as_str(), sys.c[(k, j)]))
            .collect();
        let f = ChannelFormula::linear(&terms, 0.0);
        channels.push((ChannelMeta::new(y.clone(), ChannelRole::Output, sub.clone()).with_formula(f.describe()), f));
    }
    for s in &spec.subsystems {
        for x in &s.states {
            let f = ChannelFormula::signal(x);
            channels.push((ChannelMeta::new(x.clone(), ChannelRole::Candidate, s.name.clone()).with_formula(f.describe()), f));
        }
        for e in spec.extra_channels.iter().filter(|e| e.subsystem == s.name) {
            channels.push((
                ChannelMeta::new(e.name.clone(), ChannelRole::Candidate, s.name.clone()).with_formula(e.formula.describe()),
                e.formula.clone(),
            ));
        }
    }

    let mut realizations = Vec::with_capacity(excitations.len());
    let mut state_traj = Vec::with_capacity(excitations.len());
    for (r, set) in excitations.iter().enumerate() {
        let v = DMatrix::from_fn(set.len(), steps, |i, k| square_wave(&set[i], k as f64 * spec.dt));
        let xs = simulate_discrete(&ad, &bd, &DVector::zeros(sys.states.len()), &v);
        let mut basis: Vec<Vec<f64>> = xs.row_iter().map(|row| row.iter().copied().collect()).collect();
        basis.extend(v.row_iter().map(|row| row.iter().copied().collect::<Vec<f64>>()));
        let mut noise = ChaCha8Rng::seed_from_u64(spec.noise_seed);
        noise.set_stream(r as u64);
        let mut m = DMatrix::zeros(channels.len(), steps);
        for (row, (meta, f)) in channels.iter().enumerate() {
            let values = f.evaluate(&basis_names, &basis, r)?;
            let noisy = spec.noise_level > 0.0 && meta.role != ChannelRole::Input;
            for (k, value) in values.into_iter().enumerate() {
                let e: f64 = if noisy { StandardNormal.sample(&mut noise) } else { 0.0 };
                m[(row, k)] = value + spec.noise_level * e;
            }
        }
        realizations.push(m);
        state_traj.push(xs);
    }

    let formulas = channels
        .iter()
        .filter(|(meta, _)| meta.role != ChannelRole::Input)
        .map(|(meta, f)| (meta.name.clone(), f.clone()))
        .collect();
    let manifest = channels.into_iter().map(|(meta, _)| meta).collect();
    let dataset = TimeSeriesDataset::new(spec.dt, manifest, realizations)?;
    let truth = GeneratorTruth {
        kind: "synth".into(),
        dt: spec.dt,
        state_channels: sys.states.clone(),
        state_names: sys.states,
        state_subsystems: sys.state_subsystems,
        input_names: sys.inputs.into_iter().map(|(u, _)| u).collect(),
        output_names: sys.outputs.into_iter().map(|(y, _)| y).collect(),
        a: sys.a,
        b: sys.b,
        c: sys.c,
        ad,
        bd,
        couplings: spec.couplings.clone(),
        formulas,
    };
    Ok(GeneratedDataset {
        dataset,
        states: state_traj,
        truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::DEFAULT_SCALE_FLOOR;
    use crate::dmdc::TruncationPolicy;
    use crate::selection::SubsetEvaluator;

    fn short(mut spec: SynthSystemSpec) -> SynthSystemSpec {
        spec.duration = 20.0;
        spec
    }

    #[test]
    fn layout() {
        let g = simulate_synth(&short(SynthSystemSpec::coupled()), &synth_default_excitations()).unwrap();
        let ds = &g.dataset;
        assert_eq!(ds.names(&ds.candidates()), ["a1", "a2", "a1sq", "arA", "b1", "b2", "b1b2", "arB"]);
        assert_eq!(ds.subsystems(), ["A", "B"]);
        assert_eq!(ds.outputs_of("A").len(), 2);
        assert_eq!(ds.realizations().len(), 3);
        assert_eq!(g.truth.a[(2, 0)], 0.15);
    }

    #[test]
    fn zoh_exactness() {
        let g = simulate_synth(&short(SynthSystemSpec::coupled()), &synth_default_excitations()).unwrap();
        for (r, xs) in g.states.iter().enumerate() {
            let v = g.dataset.rows(r, &g.dataset.inputs());
            for k in 0..xs.ncols() - 1 {
                let next = &g.truth.ad * xs.column(k) + &g.truth.bd * v.column(k);
                assert!((next - xs.column(k + 1)).amax() <= 1e-12);
            }
        }
    }

    #[test]
    fn decoupled_b_rests_without_its_input() {
        let quiet = alloc::vec![alloc::vec![SquareWaveSpec::new(1.0, 1.0, 8.0), SquareWaveSpec::new(0.0, 0.0, 8.0)]];
        let g = simulate_synth(&short(SynthSystemSpec::decoupled()), &quiet).unwrap();
        let ds = &g.dataset;
        for name in ["b1", "b2", "b1b2", "yB"] {
            let i = ds.channel_index(name).unwrap();
            assert!(ds.pooled(i).iter().all(|v| *v == 0.0), "{name}");
        }
        assert!(ds.pooled(ds.channel_index("a1").unwrap()).iter().any(|v| *v != 0.0));
    }

    #[test]
    fn unstable_blocks_are_rejected() {
        let mut spec = SynthSystemSpec::coupled();
        spec.subsystems[0].a[0][0] = 0.1;
        assert_eq!(spec.validate(), Err(Error::Unstable));
        let mut spec = SynthSystemSpec::coupled();
        spec.couplings.push(CouplingSpec {
            from: "b1".into(),
            to: "a1".into(),
            gain: 10.0,
        });
        assert_eq!(spec.validate(), Err(Error::Unstable));
    }

    #[test]
    fn exact_states_fit_to_machine_precision() {
        let g = simulate_synth(&short(SynthSystemSpec::coupled()), &synth_default_excitations()).unwrap();
        let ds = &g.dataset;
        let idx: Vec<usize> = ["a1", "a2", "b1", "b2"].iter().map(|n| ds.channel_index(n).unwrap()).collect();
        let ev = SubsetEvaluator::new(ds, &idx, TruncationPolicy::default(), DEFAULT_SCALE_FLOOR);
        let (model, c) = ev.fit(&idx).unwrap();
        assert!(c.j < 1e-8, "J = {}", c.j);
        // high-gain rows dominate every entry of the unit-gain row
        let cd = &model.cd;
        let b_row = cd.row(2).abs().max();
        for i in 0..2 {
            assert!(cd.row(i).columns(0, 2).abs().min() > 1e3 * b_row);
        }
    }

    #[test]
    fn noise_is_seeded() {
        let mut spec = short(SynthSystemSpec::coupled());
        spec.noise_level = 0.01;
        spec.noise_seed = 3;
        let a = simulate_synth(&spec, &synth_default_excitations()).unwrap();
        let b = simulate_synth(&spec, &synth_default_excitations()).unwrap();
        assert_eq!(a.dataset, b.dataset);
        spec.noise_seed = 4;
        let c = simulate_synth(&spec, &synth_default_excitations()).unwrap();
        assert_ne!(a.dataset, c.dataset);
    }
}
