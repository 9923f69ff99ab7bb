//! JSON documents: fitted models, selection results and generator truth.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use stateselect_core::bench::{ChannelFormula, CouplingSpec, GeneratorTruth};
use stateselect_core::cost::CostBreakdown;
use stateselect_core::dmdc::StateSpaceModel;
use stateselect_core::selection::{Diagnostics, SelectionResult};
use stateselect_core::DMatrix;

use crate::error::{Error, Result};

pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Row-major nested vectors to a matrix with `cols` columns (needed when
/// there are no rows).
pub fn from_rows(rows: &[Vec<f64>], cols: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Invalid(format!("{what}: ragged or mis-sized rows")));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::format(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub dt: f64,
    pub state_names: Vec<String>,
    pub input_names: Vec<String>,
    pub output_names: Vec<String>,
    pub ad: Vec<Vec<f64>>,
    pub bd: Vec<Vec<f64>>,
    pub cd: Vec<Vec<f64>>,
}

impl From<&StateSpaceModel> for ModelFile {
    fn from(m: &StateSpaceModel) -> Self {
        ModelFile {
            dt: m.dt,
            state_names: m.state_names.clone(),
            input_names: m.input_names.clone(),
            output_names: m.output_names.clone(),
            ad: to_rows(&m.ad),
            bd: to_rows(&m.bd),
            cd: to_rows(&m.cd),
        }
    }
}

impl ModelFile {
    pub fn to_model(&self) -> Result<StateSpaceModel> {
        let n = self.state_names.len();
        let ad = from_rows(&self.ad, n, "ad")?;
        let bd = from_rows(&self.bd, self.input_names.len(), "bd")?;
        let cd = from_rows(&self.cd, n, "cd")?;
        Ok(StateSpaceModel::new(
            ad,
            bd,
            cd,
            self.state_names.clone(),
            self.input_names.clone(),
            self.output_names.clone(),
            self.dt,
        )?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRecord {
    pub j: Option<f64>,
    pub j_state: Option<f64>,
    pub j_output: Option<f64>,
    pub n: usize,
    pub p: usize,
    pub l: usize,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl From<&CostBreakdown> for CostRecord {
    fn from(c: &CostBreakdown) -> Self {
        CostRecord {
            j: finite(c.j),
            j_state: finite(c.j_state),
            j_output: finite(c.j_output),
            n: c.n,
            p: c.p,
            l: c.l,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortlistRecord {
    pub subsystem: String,
    pub cap: usize,
    pub survivors: Vec<String>,
    pub elimination_order: Vec<String>,
    pub variance_fallbacks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportRecord {
    pub name: String,
    pub score: f64,
    pub weak: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossImportRecord {
    pub from: String,
    pub to: String,
    pub imports: Vec<ImportRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartRecord {
    pub selected: Vec<String>,
    pub j: Option<f64>,
    pub generations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiagnosticsRecord {
    Rfe {
        shortlists: Vec<ShortlistRecord>,
        cross_imports: Vec<CrossImportRecord>,
        merged_pool: Vec<String>,
        subsets_examined: u64,
        skipped_subsystems: Vec<String>,
    },
    Ga {
        restarts: Vec<RestartRecord>,
        median_j: Option<f64>,
        evaluations: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionFile {
    pub method: String,
    pub max_states: usize,
    pub indices: Vec<usize>,
    pub names: Vec<String>,
    pub subsystems: Vec<String>,
    pub j_train: CostRecord,
    pub j_test: CostRecord,
    pub diagnostics: DiagnosticsRecord,
}

impl SelectionFile {
    /// `names` maps dataset channel indices to channel names.
    pub fn new(res: &SelectionResult, names: &[String]) -> Self {
        let name_list = |idx: &[usize]| idx.iter().map(|&i| names[i].clone()).collect::<Vec<_>>();
        let diagnostics = match &res.diagnostics {
            Diagnostics::Rfe(d) => DiagnosticsRecord::Rfe {
                shortlists: d
                    .shortlists
                    .iter()
                    .map(|s| ShortlistRecord {
                        subsystem: s.subsystem.clone(),
                        cap: s.cap,
                        survivors: name_list(&s.ranking.survivors),
                        elimination_order: name_list(&s.ranking.elimination_order()),
                        variance_fallbacks: s.ranking.fallbacks,
                    })
                    .collect(),
                cross_imports: d
                    .imports
                    .iter()
                    .map(|ci| CrossImportRecord {
                        from: ci.from.clone(),
                        to: ci.to.clone(),
                        imports: ci
                            .imports
                            .iter()
                            .map(|v| ImportRecord {
                                name: names[v.index].clone(),
                                score: v.score,
                                weak: v.weak,
                            })
                            .collect(),
                    })
                    .collect(),
                merged_pool: name_list(&d.merged_pool),
                subsets_examined: d.subsets_examined,
                skipped_subsystems: d.skipped.clone(),
            },
            Diagnostics::Ga(d) => DiagnosticsRecord::Ga {
                restarts: d
                    .restarts
                    .iter()
                    .map(|o| RestartRecord {
                        selected: name_list(&o.indices),
                        j: finite(o.j),
                        generations: o.generations,
                    })
                    .collect(),
                median_j: finite(d.median_j),
                evaluations: d.evaluations,
            },
        };
        SelectionFile {
            method: res.method.as_str().into(),
            max_states: res.max_states,
            indices: res.indices.clone(),
            names: res.names.clone(),
            subsystems: res.subsystems.clone(),
            j_train: (&res.j_train).into(),
            j_test: (&res.j_test).into(),
            diagnostics,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormulaRecord {
    pub name: String,
    pub expression: String,
    pub formula: ChannelFormula,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub kind: String,
    pub dt: f64,
    pub state_names: Vec<String>,
    pub state_subsystems: Vec<String>,
    pub input_names: Vec<String>,
    pub output_names: Vec<String>,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    pub ad: Vec<Vec<f64>>,
    pub bd: Vec<Vec<f64>>,
    pub state_channels: Vec<String>,
    pub couplings: Vec<CouplingSpec>,
    pub formulas: Vec<FormulaRecord>,
}

impl From<&GeneratorTruth> for TruthFile {
    fn from(t: &GeneratorTruth) -> Self {
        TruthFile {
            kind: t.kind.clone(),
            dt: t.dt,
            state_names: t.state_names.clone(),
            state_subsystems: t.state_subsystems.clone(),
            input_names: t.input_names.clone(),
            output_names: t.output_names.clone(),
            a: to_rows(&t.a),
            b: to_rows(&t.b),
            c: to_rows(&t.c),
            ad: to_rows(&t.ad),
            bd: to_rows(&t.bd),
            state_channels: t.state_channels.clone(),
            couplings: t.couplings.clone(),
            formulas: t
                .formulas
                .iter()
                .map(|(name, f)| FormulaRecord {
                    name: name.clone(),
                    expression: f.describe(),
                    formula: f.clone(),
                })
                .collect(),
        }
    }
}
