//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit status
//! when any criterion fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stateselect_core::bench::{
    rlc_default_excitations, simulate_discrete, simulate_rlc, simulate_synth, synth_default_excitations,
    GeneratedDataset, RlcParams, SynthSystemSpec,
};
use stateselect_core::cost::{cost, ChannelScales, DEFAULT_SCALE_FLOOR};
use stateselect_core::data::{split, SnapshotSet, SplitSpec, TimeSeriesDataset};
use stateselect_core::dmdc::{fit_dynamics, fit_output_map, rollout, TruncationPolicy};
use stateselect_core::exec::Executor;
use stateselect_core::ga::{ga_select, GaConfig};
use stateselect_core::prefilter::{correlation, prefilter, PrefilterConfig};
use stateselect_core::rfe::{count_subsets, importance, merged_search, select_rfe, select_rfe_naive, RfeConfig};
use stateselect_core::selection::{Diagnostics, Method, SelectionResult, SubsetEvaluator};
use stateselect_core::{DMatrix, DVector};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    if b == 0.0 {
        a.abs() <= tol
    } else {
        ((a - b) / b).abs() <= tol
    }
}

// 1

fn importance_tables() -> Check {
    let c = DMatrix::from_row_slice(
        2,
        6,
        &[
            1.0e2, 1.0e1, 1.0e0, 1.0e-4, 1.0e-4, 1.0e-4, //
            1.0e-5, 1.0e-5, 1.0e-5, 1.0e-1, 1.0e-3, 1.0e-4,
        ],
    );
    let row_a = [1.0, 1.0e-1, 1.0e-2, 0.0, 0.0, 0.0];
    let row_b = [0.0, 0.0, 0.0, 1.0, 9.9e-3, 9.0e-4];
    let mean = [5.0e-1, 5.0e-2, 5.0e-3, 5.0e-1, 4.95e-3, 4.5e-4];
    let imp = importance(&c);
    for j in 0..6 {
        ensure(rel_close(imp.scores[(0, j)], row_a[j], 1e-3), || format!("I^A[{j}] = {}", imp.scores[(0, j)]))?;
        ensure(rel_close(imp.scores[(1, j)], row_b[j], 1e-3), || format!("I^B[{j}] = {}", imp.scores[(1, j)]))?;
        ensure(rel_close(imp.mean[j], mean[j], 1e-3), || format!("mean[{j}] = {}", imp.mean[j]))?;
    }
    Ok("18 entries within 1e-3 relative".into())
}

// 2

fn pooled(series: &[DMatrix<f64>], row: usize) -> Vec<f64> {
    series.iter().flat_map(|m| m.row(row).iter().copied().collect::<Vec<_>>()).collect()
}

fn population_std(v: &[f64]) -> f64 {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
}

/// Analytic value of every named channel over realization `r`, computed
/// from the generator's state trajectory and recorded input.
fn analytic(g: &GeneratedDataset, r: usize, channel: &str) -> Result<Vec<f64>, String> {
    let t = &g.truth;
    let ds = &g.dataset;
    let mut names = t.state_names.clone();
    names.extend(t.input_names.iter().cloned());
    let mut basis: Vec<Vec<f64>> = g.states[r].row_iter().map(|row| row.iter().copied().collect()).collect();
    for u in &t.input_names {
        let idx = ds.channel_index(u).ok_or("input missing")?;
        basis.push(ds.realizations()[r].row(idx).iter().copied().collect());
    }
    let (_, formula) = t.formulas.iter().find(|(n, _)| n == channel).ok_or(format!("no formula for {channel}"))?;
    formula.evaluate(&names, &basis, r).map_err(e)
}

fn check_rlc_selection(g: &GeneratedDataset, res: &SelectionResult, train_len: usize) -> Result<f64, String> {
    let ds = &g.dataset;
    ensure(res.indices.len() == 2, || format!("{} selected {:?}", res.method.as_str(), res.names))?;
    let states: Vec<Vec<f64>> = (0..2).map(|s| pooled(&g.states, s)).collect();
    let mut matched = Vec::new();
    for &ch in &res.indices {
        let series = ds.pooled(ch);
        let best = (0..2)
            .map(|s| (s, correlation(&series, &states[s]).unwrap().abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        ensure(best.1 >= 0.999999, || format!("{} has max |r| {}", ds.channel(ch).name, best.1))?;
        matched.push(best.0);
    }
    ensure(matched[0] != matched[1], || format!("{:?} track the same state", res.names))?;

    let inputs = ds.inputs();
    let output_names: Vec<String> = ds.names(&ds.outputs());
    let mut worst: f64 = 0.0;
    for r in 0..ds.realizations().len() {
        let steps = ds.realizations()[r].ncols();
        let len = steps - train_len - 1;
        let truth: Vec<Vec<f64>> = res
            .names
            .iter()
            .chain(&output_names)
            .map(|n| analytic(g, r, n))
            .collect::<Result<_, _>>()?;
        let x0 = DVector::from_iterator(2, truth[..2].iter().map(|s| s[train_len]));
        let v = ds.rows(r, &inputs).columns(train_len, len).into_owned();
        let (px, py) = rollout(&res.model, &x0, &v).map_err(e)?;
        let pred: Vec<Vec<f64>> = px.row_iter().chain(py.row_iter()).map(|row| row.iter().copied().collect()).collect();
        for (p, t) in pred.iter().zip(&truth) {
            let t = &t[train_len + 1..];
            let rmse = (p.iter().zip(t).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / len as f64).sqrt();
            worst = worst.max(rmse / population_std(t));
        }
    }
    ensure(worst <= 1e-3, || format!("{} rollout relative RMSE {worst:e}", res.method.as_str()))?;
    Ok(worst)
}

fn rlc_end_to_end() -> Check {
    let g = simulate_rlc(&RlcParams::default(), &rlc_default_excitations()).map_err(e)?;
    let ds = &g.dataset;
    ensure(ds.candidates().len() == 43, || format!("{} candidates", ds.candidates().len()))?;
    ensure(ds.realizations().len() == 5 && ds.steps() == vec![8000; 5] && ds.dt() == 1e-3, || "dataset shape".into())?;
    let spec = SplitSpec::default();
    let (train, test) = split(ds, spec).map_err(e)?;
    let kept = prefilter(&train, &PrefilterConfig::default()).map_err(e)?.kept;
    ensure(kept.len() == 8, || format!("prefilter kept {}", kept.len()))?;
    let exec = Executor::new(0);
    let rfe = select_rfe(&train, &test, &kept, &RfeConfig::new(8), &exec).map_err(e)?;
    let mut cfg = GaConfig::new(8, 1);
    cfg.population_size = 48;
    let ga = ga_select(&train, &test, &kept, &cfg, &exec).map_err(e)?;
    let train_len = train.steps()[0];
    let er = check_rlc_selection(&g, &rfe, train_len)?;
    let eg = check_rlc_selection(&g, &ga, train_len)?;
    ensure(rfe.indices == ga.indices, || format!("rfe {:?} vs ga {:?}", rfe.names, ga.names))?;
    Ok(format!("kept 8/43; both select {:?}; test rel. RMSE rfe {er:.1e}, ga {eg:.1e}", rfe.names))
}

// 3

fn ga_stability() -> Check {
    let g = simulate_rlc(&RlcParams::default(), &rlc_default_excitations()).map_err(e)?;
    let (train, test) = split(&g.dataset, SplitSpec::default()).map_err(e)?;
    let kept = prefilter(&train, &PrefilterConfig::default()).map_err(e)?.kept;
    let mut cfg = GaConfig::new(8, 2024);
    cfg.population_size = 48;
    cfg.restarts = 100;
    let res = ga_select(&train, &test, &kept, &cfg, &Executor::new(0)).map_err(e)?;
    let Diagnostics::Ga(d) = &res.diagnostics else {
        return Err("missing GA diagnostics".into());
    };
    ensure(d.restarts.len() == 100, || format!("{} restarts", d.restarts.len()))?;
    ensure(res.indices.len() == 2, || format!("selected {:?}", res.names))?;
    let differing = d.restarts.iter().filter(|o| o.indices != res.indices).count();
    ensure(differing == 0, || format!("{differing} restarts disagree with {:?}", res.names))?;
    Ok(format!("100/100 restarts return {:?}", res.names))
}

// 4

fn random_stable(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let norm = a.clone().svd(false, false).singular_values.max();
    a * (rng.random_range(0.3..0.95) / norm)
}

fn dmdc_recovery() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let policy = TruncationPolicy::default();
    let mut worst: f64 = 0.0;
    let cases = 60;
    for _ in 0..cases {
        let n = rng.random_range(1..=5);
        let m = rng.random_range(1..=2);
        let p = rng.random_range(1..=3);
        let l = 20 * (n + m) + rng.random_range(0..40);
        let ad = random_stable(n, &mut rng);
        let bd = DMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0));
        let cd = DMatrix::from_fn(p, n, |_, _| rng.random_range(-2.0..2.0));
        let v = DMatrix::from_fn(m, l, |_, _| rng.random_range(-1.0..1.0));
        let x0 = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let xs = simulate_discrete(&ad, &bd, &x0, &v);
        let s = SnapshotSet {
            x: xs.columns(0, l - 1).into_owned(),
            xp: xs.columns(1, l - 1).into_owned(),
            v: v.columns(0, l - 1).into_owned(),
            y: &cd * xs.columns(0, l - 1),
        };
        let (fa, fb) = fit_dynamics(&s, &policy).map_err(e)?;
        let fc = fit_output_map(&s.x, &s.y, &policy).map_err(e)?;
        let err = (&fa - &ad).amax().max((&fb - &bd).amax()).max((&fc - &cd).amax());
        ensure(err <= 1e-6, || format!("n={n} m={m} p={p} L={l}: max error {err:e}"))?;
        worst = worst.max(err);
    }
    Ok(format!("{cases} random systems, max elementwise error {worst:.1e}"))
}

// 5

fn double_loop(px: &DMatrix<f64>, py: &DMatrix<f64>, tx: &DMatrix<f64>, ty: &DMatrix<f64>, sx: &[f64], sy: &[f64]) -> f64 {
    let l = px.ncols();
    let mut js = 0.0;
    for i in 0..sx.len() {
        for k in 0..l {
            let d = (px[(i, k)] - tx[(i, k)]) / sx[i].max(DEFAULT_SCALE_FLOOR);
            js += d * d;
        }
    }
    let mut jy = 0.0;
    for i in 0..sy.len() {
        for k in 0..l {
            let d = (py[(i, k)] - ty[(i, k)]) / sy[i].max(DEFAULT_SCALE_FLOOR);
            jy += d * d;
        }
    }
    let js = if sx.is_empty() { 0.0 } else { js / (sx.len() * l) as f64 };
    let jy = if sy.is_empty() { 0.0 } else { jy / (sy.len() * l) as f64 };
    js + jy
}

fn cost_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(1..=6);
        let p = rng.random_range(0..=4);
        let l = rng.random_range(1..=60);
        let mut r = |rows, cols| DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-3.0..3.0));
        let (px, py, tx, ty) = (r(n, l), r(p, l), r(n, l), r(p, l));
        let sx: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..5.0)).collect();
        let sy: Vec<f64> = (0..p).map(|_| rng.random_range(0.1..5.0)).collect();
        let scales = ChannelScales {
            sigma_x: sx.clone(),
            sigma_y: sy.clone(),
            floor: DEFAULT_SCALE_FLOOR,
        };
        let got = cost(&px, &py, &tx, &ty, &scales).map_err(e)?.j;
        let want = double_loop(&px, &py, &tx, &ty, &sx, &sy);
        let err = (got - want).abs() / want.abs().max(1.0);
        ensure(err <= 1e-12, || format!("cost {got} vs oracle {want}"))?;
        worst = worst.max(err);
    }
    let x = DMatrix::from_fn(3, 9, |i, k| (i * 9 + k) as f64 * 0.37 - 2.0);
    let y = DMatrix::from_fn(2, 9, |i, k| ((i + k) as f64).sin());
    let unit = |n: usize| ChannelScales {
        sigma_x: vec![0.8; n],
        sigma_y: vec![0.8; 2],
        floor: DEFAULT_SCALE_FLOOR,
    };
    let zero = cost(&x, &y, &x, &y, &unit(3)).map_err(e)?.j;
    ensure(zero == 0.0, || format!("perfect prediction costs {zero}"))?;
    let shifted_x = x.map(|v| v + 0.8);
    let shifted_y = y.map(|v| v - 0.8);
    let two = cost(&shifted_x, &shifted_y, &x, &y, &unit(3)).map_err(e)?.j;
    ensure(two == 2.0, || format!("one-sigma errors cost {two}"))?;
    Ok(format!("100 random cases, max relative deviation {worst:.1e}; J=0 and J=2 exact"))
}

// 6

fn subset_counting() -> Check {
    let table = [(3u32, 7u128), (6, 63), (9, 511), (12, 4095), (15, 32767)];
    for (n, want) in table {
        let got = count_subsets(n);
        ensure(got == want, || format!("count_subsets({n}) = {got}, expected {want}"))?;
    }
    let c18 = count_subsets(18);
    ensure(c18 == 262_143 && c18 != 261_971, || format!("count_subsets(18) = {c18}"))?;
    Ok("caps 3-15 match; cap 18 gives 262143 (published 261971 is inconsistent with 2^18-1)".into())
}

// 7

fn coupled_split() -> Result<(TimeSeriesDataset, TimeSeriesDataset, Vec<usize>), String> {
    let g = simulate_synth(&SynthSystemSpec::coupled(), &synth_default_excitations()).map_err(e)?;
    let (train, test) = split(&g.dataset, SplitSpec::default()).map_err(e)?;
    let kept = prefilter(&train, &PrefilterConfig::default()).map_err(e)?.kept;
    Ok((train, test, kept))
}

fn combinations(pool: &[usize], max: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 1u64..(1 << pool.len()) {
        if (mask.count_ones() as usize) <= max {
            out.push((0..pool.len()).filter(|b| mask >> b & 1 == 1).map(|b| pool[b]).collect());
        }
    }
    out
}

/// Exhaustive minimum of training cost over subsets of `pool`, ties to the
/// smaller then lexicographically first subset.
fn brute_force(ev: &SubsetEvaluator<'_>, pool: &[usize], cap: usize) -> (Vec<usize>, f64) {
    let mut best: Option<(Vec<usize>, f64)> = None;
    for s in combinations(pool, cap) {
        let j = ev.j_train(&s);
        let take = match &best {
            None => true,
            Some((bs, bj)) => j < *bj || (j == *bj && (s.len(), &s) < (bs.len(), bs)),
        };
        if take {
            best = Some((s, j));
        }
    }
    best.unwrap()
}

fn overshadowing() -> Check {
    let spec = SynthSystemSpec::coupled();
    let gains: Vec<f64> = spec.subsystems.iter().map(|s| s.output_gain).collect();
    ensure(gains == vec![1e4, 1.0], || format!("output gains {gains:?}"))?;
    ensure(spec.subsystems.iter().all(|s| s.states.len() == 2), || "subsystems need two states".into())?;
    let (train, test, kept) = coupled_split()?;
    let cfg = RfeConfig::new(2);
    let subsystem = |i: usize| train.channel(i).subsystem.clone();

    let naive = select_rfe_naive(&train, &test, &kept, &cfg).map_err(e)?;
    let full = SubsetEvaluator::new(&train, &kept, cfg.policy, cfg.scale_floor);
    let (opt, _) = brute_force(&full, &kept, 2);
    let (model, _) = full.fit(&opt).map_err(e)?;
    let opt_test = stateselect_core::cost::score(&test, &model, &opt, &test.outputs(), &full.scales(&opt))
        .map_err(e)?
        .j;
    ensure(naive.indices.len() == 2 && naive.indices.iter().all(|&i| subsystem(i) == "A"), || {
        format!("naive selected {:?}", naive.names)
    })?;
    ensure(naive.j_test.j > 10.0 * opt_test, || {
        format!("naive J_test {:e} vs optimum {opt_test:e}", naive.j_test.j)
    })?;

    let rfe = select_rfe(&train, &test, &kept, &cfg, &Executor::new(0)).map_err(e)?;
    let Diagnostics::Rfe(d) = &rfe.diagnostics else {
        return Err("missing RFE diagnostics".into());
    };
    ensure(d.merged_pool.len() <= 10, || format!("|Z×| = {}", d.merged_pool.len()))?;
    let merged = SubsetEvaluator::new(&train, &d.merged_pool, cfg.policy, cfg.scale_floor);
    let (bf, bf_j) = brute_force(&merged, &d.merged_pool, 2);
    ensure(["A", "B"].iter().all(|s| rfe.indices.iter().any(|&i| subsystem(i) == *s)), || {
        format!("workflow selected {:?}", rfe.names)
    })?;
    ensure(rfe.j_train.j == bf_j && rfe.indices == bf, || {
        format!("workflow J_train {:e} {:?} vs brute force {bf_j:e} {:?}", rfe.j_train.j, rfe.names, train.names(&bf))
    })?;
    Ok(format!(
        "naive {:?} J_test {:.2e} vs optimum {:.2e}; workflow {:?} J_train {:.2e} = brute force over |Z×| = {}",
        naive.names,
        naive.j_test.j,
        opt_test,
        rfe.names,
        rfe.j_train.j,
        d.merged_pool.len()
    ))
}

// 8

fn determinism() -> Check {
    let (train, test, kept) = coupled_split()?;
    let ev = SubsetEvaluator::new(&train, &kept, TruncationPolicy::default(), DEFAULT_SCALE_FLOOR);
    let mut ga = GaConfig::new(3, 77);
    ga.population_size = 40;
    ga.restarts = 3;
    ga.max_generations = Some(30);
    let mut runs = Vec::new();
    for w in [1, 4, 8] {
        let exec = Executor::new(w);
        let sweep = merged_search(&ev, &kept, 3, 24, &exec).map_err(e)?;
        let rfe = select_rfe(&train, &test, &kept, &RfeConfig::new(3), &exec).map_err(e)?;
        let gar = ga_select(&train, &test, &kept, &ga, &exec).map_err(e)?;
        runs.push((w, format!("{sweep:?}"), format!("{rfe:?}"), format!("{gar:?}")));
    }
    for (w, sweep, rfe, gar) in &runs[1..] {
        ensure(*sweep == runs[0].1, || format!("merged_search differs at {w} workers"))?;
        ensure(*rfe == runs[0].2, || format!("RFE result differs at {w} workers"))?;
        ensure(*gar == runs[0].3, || format!("GA result differs at {w} workers"))?;
    }
    Ok("merged_search, RFE-DMDc and GA-DMDc identical for 1, 4 and 8 workers".into())
}

// 9

fn cost_vs_cap() -> Check {
    let (train, test, kept) = coupled_split()?;
    let exec = Executor::new(0);
    let mut rows = Vec::new();
    for cap in [3, 6, 9, 12] {
        let r = select_rfe(&train, &test, &kept, &RfeConfig::new(cap), &exec).map_err(e)?;
        ensure(r.method == Method::RfeDmdc, || "wrong method".into())?;
        rows.push((cap, r.j_train.j, r.indices.len()));
    }
    for w in rows.windows(2) {
        ensure(w[1].1 <= w[0].1, || format!("J_train rises from cap {} to cap {}: {rows:?}", w[0].0, w[1].0))?;
    }
    ensure(rows[2..].iter().all(|&(cap, _, count)| count < cap), || format!("no saturation: {rows:?}"))?;
    let desc: Vec<String> = rows.iter().map(|(c, j, n)| format!("cap {c}: {n} states, J {j:.1e}")).collect();
    Ok(desc.join("; "))
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Check); 9] = [
        ("importance tables", Duration::from_secs(1), importance_tables),
        ("RLC end-to-end", Duration::from_secs(120), rlc_end_to_end),
        ("GA stability (100 restarts)", Duration::from_secs(600), ga_stability),
        ("DMDc recovery", Duration::from_secs(60), dmdc_recovery),
        ("cost oracle equivalence", Duration::from_secs(60), cost_oracle),
        ("subset counting", Duration::from_secs(1), subset_counting),
        ("overshadowing mitigation", Duration::from_secs(120), overshadowing),
        ("determinism under parallelism", Duration::from_secs(600), determinism),
        ("cost-vs-cap trend", Duration::from_secs(600), cost_vs_cap),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if took > *budget => Err(format!("{detail}; exceeded {budget:?} budget")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS {}: {name}: {detail} ({:.2} s)", i + 1, took.as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("FAIL {}: {name}: {why} ({:.2} s)", i + 1, took.as_secs_f64());
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

