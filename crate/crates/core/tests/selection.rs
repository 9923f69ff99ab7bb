use stateselect_core::bench::{
    simulate_synth, synth_default_excitations, CouplingSpec, SquareWaveSpec, SubsystemSpec, SynthSystemSpec,
};
use stateselect_core::data::{split, SplitSpec, TimeSeriesDataset};
use stateselect_core::exec::Executor;
use stateselect_core::ga::{ga_select, GaConfig};
use stateselect_core::prefilter::{prefilter, PrefilterConfig};
use stateselect_core::rfe::{cross_influence, merged_search, select_rfe, within_subsystem_rfe, RfeConfig};
use stateselect_core::selection::{Diagnostics, SubsetEvaluator};

fn prepared(spec: &SynthSystemSpec, excitations: &[Vec<SquareWaveSpec>]) -> (TimeSeriesDataset, TimeSeriesDataset, Vec<usize>) {
    let g = simulate_synth(spec, excitations).unwrap();
    let (train, test) = split(&g.dataset, SplitSpec::default()).unwrap();
    let kept = prefilter(&train, &PrefilterConfig::default()).unwrap().kept;
    (train, test, kept)
}

fn names(ds: &TimeSeriesDataset, idx: &[usize]) -> Vec<String> {
    ds.names(idx)
}

#[test]
fn decoupled_shortlists_recover_each_subsystems_states() {
    let (train, _, kept) = prepared(&SynthSystemSpec::decoupled(), &synth_default_excitations());
    let lists = within_subsystem_rfe(&train, &kept, &RfeConfig::new(4), &Executor::sequential()).unwrap();
    assert!(lists.skipped.is_empty());
    let got: Vec<(String, Vec<String>)> = lists
        .shortlists
        .iter()
        .map(|s| (s.subsystem.clone(), names(&train, s.members())))
        .collect();
    assert_eq!(
        got,
        vec![
            ("A".to_string(), vec!["a1".to_string(), "a2".to_string()]),
            ("B".to_string(), vec!["b1".to_string(), "b2".to_string()]),
        ]
    );
}

/// A's output barely sees `a2`, but `a2` alone drives B.
fn hidden_driver() -> SynthSystemSpec {
    SynthSystemSpec {
        subsystems: vec![
            SubsystemSpec {
                name: "A".into(),
                states: vec!["a1".into(), "a2".into()],
                a: vec![vec![-1.0, 0.0], vec![0.0, -0.5]],
                inputs: vec!["uA1".into(), "uA2".into()],
                b: vec![vec![1.0, 0.0], vec![0.0, 0.5]],
                outputs: vec!["yA".into()],
                c: vec![vec![1.0, 0.01]],
                output_gain: 1.0,
            },
            SubsystemSpec {
                name: "B".into(),
                states: vec!["b1".into()],
                a: vec![vec![-1.0]],
                inputs: vec!["uB".into()],
                b: vec![vec![0.2]],
                outputs: vec!["yB".into()],
                c: vec![vec![1.0]],
                output_gain: 1.0,
            },
        ],
        couplings: vec![CouplingSpec {
            from: "a2".into(),
            to: "b1".into(),
            gain: 2.0,
        }],
        extra_channels: Vec::new(),
        noise_level: 0.0,
        noise_seed: 0,
        dt: 0.05,
        duration: 40.0,
    }
}

fn hidden_driver_excitations() -> Vec<Vec<SquareWaveSpec>> {
    (0..3)
        .map(|r| {
            let p = 6.0 + 2.0 * r as f64;
            vec![
                SquareWaveSpec::new(0.5 * r as f64, 1.0, p),
                SquareWaveSpec::new(-0.5, 1.5, p * 1.37).with_phase(p / 3.0),
                SquareWaveSpec::new(0.2, -1.0, p * 0.71).with_phase(p / 5.0),
            ]
        })
        .collect()
}

#[test]
fn cross_influence_imports_the_hidden_driver() {
    let (train, test, kept) = prepared(&hidden_driver(), &hidden_driver_excitations());
    assert_eq!(names(&train, &kept), vec!["a1", "a2", "b1"]);
    let cfg = RfeConfig::new(2);
    let lists = within_subsystem_rfe(&train, &kept, &cfg, &Executor::sequential()).unwrap();
    let members: Vec<Vec<String>> = lists.shortlists.iter().map(|s| names(&train, s.members())).collect();
    assert_eq!(members, vec![vec!["a1"], vec!["b1"]]);

    let imports = cross_influence(&train, &kept, &lists.shortlists, &cfg);
    let a_to_b = imports.iter().find(|ci| ci.from == "A" && ci.to == "B").unwrap();
    assert_eq!(names(&train, &a_to_b.imports.iter().map(|v| v.index).collect::<Vec<_>>()), vec!["a2"]);
    assert!(!a_to_b.imports[0].weak, "score {}", a_to_b.imports[0].score);

    let res = select_rfe(&train, &test, &kept, &cfg, &Executor::sequential()).unwrap();
    let Diagnostics::Rfe(d) = &res.diagnostics else { panic!() };
    assert_eq!(names(&train, &d.merged_pool), vec!["a1", "a2", "b1"]);
}

#[test]
fn ga_finds_the_true_states() {
    let (train, test, kept) = prepared(&SynthSystemSpec::coupled(), &synth_default_excitations());
    let mut cfg = GaConfig::new(4, 3);
    cfg.population_size = 60;
    cfg.restarts = 3;
    let res = ga_select(&train, &test, &kept, &cfg, &Executor::new(0)).unwrap();
    assert_eq!(res.names, vec!["a1", "a2", "b1", "b2"]);
    assert!(res.j_train.j < 1e-6 && res.j_test.j < 1e-6, "{:?}", res.j_train);
}

#[test]
fn exhaustive_optimum_never_worsens_with_the_cap() {
    let (train, _, kept) = prepared(&SynthSystemSpec::coupled(), &synth_default_excitations());
    let ev = SubsetEvaluator::new(&train, &kept, Default::default(), 1e-9);
    let exec = Executor::new(0);
    let js: Vec<f64> = (1..=5)
        .map(|cap| merged_search(&ev, &kept, cap, 24, &exec).unwrap().best_j)
        .collect();
    assert!(js.windows(2).all(|w| w[1] <= w[0]), "{js:?}");
}
