//! Subcommand implementations: generate, prefilter, select, predict and
//! report. Each one reads and writes files only; the command-line layer
//! just assembles their arguments.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stateselect_core::bench::{
    rlc_default_excitations, simulate_rlc, simulate_synth, synth_default_excitations, GeneratedDataset, RlcParams,
    SquareWaveSpec, SynthSystemSpec,
};
use stateselect_core::cost::{rollout_dataset, RolloutTrace};
use stateselect_core::data::{split, SplitSpec, TimeSeriesDataset};
use stateselect_core::dmdc::rollout;
use stateselect_core::exec::Executor;
use stateselect_core::ga::ga_select;
use stateselect_core::prefilter::{prefilter_pool, PrefilterReport};
use stateselect_core::rfe::{select_rfe, select_rfe_naive};
use stateselect_core::selection::{Diagnostics, Method, SelectionResult};
use stateselect_core::DVector;

use crate::config::{RunConfig, EFFECTIVE_CONFIG_FILE};
use crate::csvio::write_realization;
use crate::error::{Error, Result};
use crate::formats::{load_json, save_json, ModelFile, SelectionFile, TruthFile};
use crate::manifest::{ingest_files, prepare_dir, write_dataset};
use crate::report::{
    read_rows, summarize, trace_rows, write_cost_table, write_ga_trace, write_prefilter, write_rows, CostRow,
    TraceRow, COST_TABLE_FILE, PREFILTER_FILE, TRACE_HEADER,
};

pub const TRUTH_FILE: &str = "truth.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum BenchKind {
    Rlc,
    Synth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SynthPreset {
    Coupled,
    Decoupled,
}

/// Optional generator spec file. `rlc` applies to `generate rlc`, `system`
/// to `generate synth`; `excitations` lists one entry per realization with
/// one square wave per input.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSpecFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rlc: Option<RlcParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub system: Option<SynthSystemSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub excitations: Option<Vec<Vec<SquareWaveSpec>>>,
}

impl GeneratorSpecFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::format(path, e.message()))
    }
}

#[derive(Debug, Clone)]
pub struct GenerateArgs {
    pub kind: BenchKind,
    pub spec: Option<PathBuf>,
    pub preset: SynthPreset,
    /// Overrides the synthetic noise seed.
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub overwrite: bool,
}

/// Simulates the benchmark described by `args` without touching the disk.
pub fn build_benchmark(args: &GenerateArgs) -> Result<GeneratedDataset> {
    let spec = match &args.spec {
        Some(p) => GeneratorSpecFile::load(p)?,
        None => GeneratorSpecFile::default(),
    };
    match args.kind {
        BenchKind::Rlc => {
            if spec.system.is_some() {
                return Err(Error::Invalid("`system` does not apply to the RLC benchmark".into()));
            }
            let params = spec.rlc.unwrap_or_default();
            let excitations = match spec.excitations {
                None => rlc_default_excitations(),
                Some(e) => e
                    .into_iter()
                    .map(|per_run| match per_run.as_slice() {
                        [w] => Ok(*w),
                        _ => Err(Error::Invalid("the RLC circuit has one input per realization".into())),
                    })
                    .collect::<Result<_>>()?,
            };
            Ok(simulate_rlc(&params, &excitations)?)
        }
        BenchKind::Synth => {
            if spec.rlc.is_some() {
                return Err(Error::Invalid("`rlc` does not apply to the synthetic benchmark".into()));
            }
            let mut system = spec.system.unwrap_or_else(|| match args.preset {
                SynthPreset::Coupled => SynthSystemSpec::coupled(),
                SynthPreset::Decoupled => SynthSystemSpec::decoupled(),
            });
            if let Some(seed) = args.seed {
                system.noise_seed = seed;
            }
            let excitations = spec.excitations.unwrap_or_else(synth_default_excitations);
            Ok(simulate_synth(&system, &excitations)?)
        }
    }
}

/// Writes the dataset, its manifest, the generator truth and the true state
/// trajectories (`states_NNN.csv`). Returns the manifest path.
pub fn generate(args: &GenerateArgs) -> Result<PathBuf> {
    let generated = build_benchmark(args)?;
    prepare_dir(&args.out, args.overwrite)?;
    let manifest = write_dataset(&args.out, &generated.dataset)?;
    save_json(&args.out.join(TRUTH_FILE), &TruthFile::from(&generated.truth))?;
    for (r, states) in generated.states.iter().enumerate() {
        write_realization(
            &args.out.join(format!("states_{r:03}.csv")),
            &generated.truth.state_names,
            states,
        )?;
    }
    Ok(manifest)
}

/// Dataset plus its train/test split as configured.
pub struct Prepared {
    pub dataset: TimeSeriesDataset,
    pub train: TimeSeriesDataset,
    pub test: TimeSeriesDataset,
    pub names: Vec<String>,
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let manifest = cfg
        .manifest
        .as_ref()
        .ok_or_else(|| Error::Invalid("no dataset manifest given".into()))?;
    let dataset = ingest_files(manifest, &cfg.data)?;
    let (train, test) = split(&dataset, cfg.split_spec())?;
    let names = dataset.manifest().iter().map(|c| c.name.clone()).collect();
    Ok(Prepared {
        dataset,
        train,
        test,
        names,
    })
}

fn output_dir(cfg: &RunConfig) -> Result<&Path> {
    cfg.out
        .as_deref()
        .ok_or_else(|| Error::Invalid("no output directory given".into()))
}

fn run_prefilter_on(cfg: &RunConfig, data: &Prepared, exec: &Executor) -> Result<PrefilterReport> {
    Ok(prefilter_pool(&data.train, &data.train.candidates(), &cfg.prefilter_config(), exec)?)
}

/// Prefilter on the training split; writes `prefilter.csv` and the
/// effective configuration.
pub fn run_prefilter(cfg: &RunConfig, overwrite: bool) -> Result<PrefilterReport> {
    cfg.validate()?;
    let out = output_dir(cfg)?;
    let data = prepare(cfg)?;
    prepare_dir(out, overwrite)?;
    write_effective_config(cfg, out)?;
    let report = run_prefilter_on(cfg, &data, &Executor::new(cfg.workers))?;
    write_prefilter(&out.join(PREFILTER_FILE), &report, &data.names)?;
    Ok(report)
}

fn write_effective_config(cfg: &RunConfig, out: &Path) -> Result<()> {
    let path = out.join(EFFECTIVE_CONFIG_FILE);
    std::fs::write(&path, cfg.to_toml()?).map_err(|e| Error::io(&path, e))
}

/// Runs one selection method at one cap on an already prefiltered pool.
pub fn run_method(
    method: Method,
    cap: usize,
    cfg: &RunConfig,
    data: &Prepared,
    pool: &[usize],
    exec: &Executor,
) -> Result<SelectionResult> {
    Ok(match method {
        Method::RfeDmdc => select_rfe(&data.train, &data.test, pool, &cfg.rfe_config(cap), exec)?,
        Method::RfeNaive => select_rfe_naive(&data.train, &data.test, pool, &cfg.rfe_config(cap))?,
        Method::GaDmdc => ga_select(&data.train, &data.test, pool, &cfg.ga_config(cap), exec)?,
    })
}

/// Per-run file stem, e.g. `rfe_cap08`.
pub fn run_stem(method: Method, cap: usize) -> String {
    format!("{}_cap{cap:02}", method.as_str())
}

/// Prefilter, then every (cap, method) pair of the sweep. Each run writes
/// `selection_*.json`, `model_*.json` and `trace_*.csv` (plus
/// `ga_trace_*.csv` for the GA); the sweep ends with `cost_table.csv`.
pub fn run_select(cfg: &RunConfig, overwrite: bool) -> Result<Vec<SelectionResult>> {
    cfg.validate()?;
    let out = output_dir(cfg)?;
    let data = prepare(cfg)?;
    prepare_dir(out, overwrite)?;
    write_effective_config(cfg, out)?;
    let exec = Executor::new(cfg.workers);
    let report = run_prefilter_on(cfg, &data, &exec)?;
    write_prefilter(&out.join(PREFILTER_FILE), &report, &data.names)?;

    let outputs = data.train.outputs();
    let output_names = data.train.names(&outputs);
    let mut results = Vec::new();
    for &cap in &cfg.caps {
        for method in cfg.method.methods() {
            let res = run_method(method, cap, cfg, &data, &report.kept, &exec)?;
            let stem = run_stem(method, cap);
            save_json(&out.join(format!("selection_{stem}.json")), &SelectionFile::new(&res, &data.names))?;
            save_json(&out.join(format!("model_{stem}.json")), &ModelFile::from(&res.model))?;
            let mut rows = Vec::new();
            for (label, ds) in [("train", &data.train), ("test", &data.test)] {
                let trace = rollout_dataset(ds, &res.model, &res.indices, &outputs)?;
                rows.extend(trace_rows(label, &trace, &res.names, &output_names));
            }
            write_rows(&out.join(format!("trace_{stem}.csv")), &TRACE_HEADER, &rows)?;
            if let Diagnostics::Ga(d) = &res.diagnostics {
                write_ga_trace(&out.join(format!("ga_trace_{stem}.csv")), &d.trace)?;
            }
            results.push(res);
        }
    }
    write_cost_table(&out.join(COST_TABLE_FILE), &results)?;
    Ok(results)
}

#[derive(Debug, Clone)]
pub struct PredictArgs {
    pub model: PathBuf,
    pub manifest: PathBuf,
    pub data: Vec<PathBuf>,
    pub train_fraction: f64,
    /// Steps per realization; `None` runs to the end of the test split.
    pub horizon: Option<usize>,
    pub out: PathBuf,
    pub overwrite: bool,
}

fn lookup(ds: &TimeSeriesDataset, names: &[String]) -> Result<Vec<usize>> {
    names
        .iter()
        .map(|n| ds.channel_index(n).ok_or_else(|| Error::ModelChannel(n.clone())))
        .collect()
}

/// Rolls a saved model out from the first test-split sample of every
/// realization and returns per-step predictions against the recorded data.
pub fn predict_rows(model: &ModelFile, ds: &TimeSeriesDataset, train_fraction: f64, horizon: Option<usize>) -> Result<Vec<TraceRow>> {
    let model = model.to_model()?;
    let states = lookup(ds, &model.state_names)?;
    let inputs = lookup(ds, &model.input_names)?;
    let outputs = lookup(ds, &model.output_names)?;
    let spec = SplitSpec { train_fraction };
    let (_, test) = split(ds, spec)?;
    let mut rows = Vec::new();
    for r in 0..test.realizations().len() {
        let x = test.rows(r, &states);
        let available = x.ncols() - 1;
        let len = horizon.map_or(available, |h| h.min(available));
        if len == 0 {
            continue;
        }
        let v = test.rows(r, &inputs).columns(0, len).into_owned();
        let y = test.rows(r, &outputs);
        let x0: DVector<f64> = x.column(0).into_owned();
        let (px, py) = rollout(&model, &x0, &v)?;
        let trace = RolloutTrace {
            pred_x: px,
            pred_y: py,
            true_x: x.columns(1, len).into_owned(),
            true_y: y.columns(1, len).into_owned(),
            lengths: vec![len],
        };
        let mut part = trace_rows("test", &trace, &model.state_names, &model.output_names);
        part.iter_mut().for_each(|row| row.realization = r);
        rows.extend(part);
    }
    Ok(rows)
}

pub fn predict(args: &PredictArgs) -> Result<usize> {
    if args.out.exists() && !args.overwrite {
        return Err(Error::OutputExists(args.out.clone()));
    }
    let model: ModelFile = load_json(&args.model)?;
    let ds = ingest_files(&args.manifest, &args.data)?;
    let rows = predict_rows(&model, &ds, args.train_fraction, args.horizon)?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    write_rows(&args.out, &TRACE_HEADER, &rows)?;
    Ok(rows.len())
}

/// Text summary of a results directory's cost table.
pub fn report(dir: &Path) -> Result<String> {
    let rows: Vec<CostRow> = read_rows(&dir.join(COST_TABLE_FILE))?;
    Ok(summarize(&rows))
}

/// Max |predicted − truth| over a trace.
pub fn max_abs_error(rows: &[TraceRow]) -> f64 {
    rows.iter().map(|r| (r.predicted - r.truth).abs()).fold(0.0, f64::max)
}
