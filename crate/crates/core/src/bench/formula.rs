//! Symbolic definitions of generated channels in terms of the true states
//! and inputs.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result};

/// `offset + Σ coefficient · signal`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinearForm {
    pub terms: Vec<(String, f64)>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub offset: f64,
}

impl LinearForm {
    pub fn signal(name: &str) -> Self {
        Self::scaled(name, 1.0)
    }

    pub fn scaled(name: &str, gain: f64) -> Self {
        LinearForm {
            terms: alloc::vec![(name.to_string(), gain)],
            offset: 0.0,
        }
    }

    pub fn new(terms: &[(&str, f64)], offset: f64) -> Self {
        LinearForm {
            terms: terms.iter().map(|(n, g)| (n.to_string(), *g)).collect(),
            offset,
        }
    }

    fn describe(&self) -> String {
        let mut out = String::new();
        for (k, (name, g)) in self.terms.iter().enumerate() {
            if k == 0 {
                out.push_str(&format!("{g}*{name}"));
            } else if *g < 0.0 {
                out.push_str(&format!(" - {}*{name}", -g));
            } else {
                out.push_str(&format!(" + {g}*{name}"));
            }
        }
        if self.offset != 0.0 || self.terms.is_empty() {
            if self.terms.is_empty() {
                out.push_str(&format!("{}", self.offset));
            } else if self.offset < 0.0 {
                out.push_str(&format!(" - {}", -self.offset));
            } else {
                out.push_str(&format!(" + {}", self.offset));
            }
        }
        out
    }

    fn compile(&self, basis: &[String]) -> Result<CompiledForm> {
        let terms = self
            .terms
            .iter()
            .map(|(name, g)| {
                basis
                    .iter()
                    .position(|b| b == name)
                    .map(|i| (i, *g))
                    .ok_or_else(|| Error::Config(format!("formula references unknown signal `{name}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CompiledForm {
            terms,
            offset: self.offset,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum ChannelFormula {
    Linear(LinearForm),
    /// `scale · left · right`.
    Product {
        left: LinearForm,
        right: LinearForm,
        scale: f64,
    },
    Constant {
        value: f64,
    },
    /// Zero-started AR(1) noise `z(k) = pole·z(k−1) + std·e(k)`, one
    /// independent stream per realization.
    Ar1 {
        pole: f64,
        std: f64,
        seed: u64,
    },
}

impl ChannelFormula {
    pub fn signal(name: &str) -> Self {
        ChannelFormula::Linear(LinearForm::signal(name))
    }

    pub fn scaled(name: &str, gain: f64) -> Self {
        ChannelFormula::Linear(LinearForm::scaled(name, gain))
    }

    pub fn linear(terms: &[(&str, f64)], offset: f64) -> Self {
        ChannelFormula::Linear(LinearForm::new(terms, offset))
    }

    pub fn product(left: LinearForm, right: LinearForm, scale: f64) -> Self {
        ChannelFormula::Product { left, right, scale }
    }

    pub fn constant(value: f64) -> Self {
        ChannelFormula::Constant { value }
    }

    /// Human-readable expression stored in manifests.
    pub fn describe(&self) -> String {
        match self {
            ChannelFormula::Linear(f) => f.describe(),
            ChannelFormula::Product { left, right, scale } => {
                format!("{scale}*({})*({})", left.describe(), right.describe())
            }
            ChannelFormula::Constant { value } => format!("{value}"),
            ChannelFormula::Ar1 { pole, std, seed } => format!("ar1(pole={pole}, std={std}, seed={seed})"),
        }
    }

    /// True when the channel is an affine function of the basis signals.
    pub fn is_affine(&self) -> bool {
        matches!(self, ChannelFormula::Linear(_) | ChannelFormula::Constant { .. })
    }

    /// Evaluates the channel over a realization. `basis` holds one row per
    /// basis signal, in the order of `names`.
    pub fn evaluate(&self, names: &[String], basis: &[Vec<f64>], realization: usize) -> Result<Vec<f64>> {
        let steps = basis.first().map_or(0, |b| b.len());
        Ok(match self {
            ChannelFormula::Linear(f) => {
                let f = f.compile(names)?;
                (0..steps).map(|k| f.at(basis, k)).collect()
            }
            ChannelFormula::Product { left, right, scale } => {
                let (l, r) = (left.compile(names)?, right.compile(names)?);
                (0..steps).map(|k| scale * l.at(basis, k) * r.at(basis, k)).collect()
            }
            ChannelFormula::Constant { value } => alloc::vec![*value; steps],
            ChannelFormula::Ar1 { pole, std, seed } => ar1(*pole, *std, *seed, realization, steps),
        })
    }
}

struct CompiledForm {
    terms: Vec<(usize, f64)>,
    offset: f64,
}

impl CompiledForm {
    fn at(&self, basis: &[Vec<f64>], k: usize) -> f64 {
        self.terms.iter().fold(self.offset, |acc, &(i, g)| acc + g * basis[i][k])
    }
}

/// Seeded AR(1) sequence; stream `realization` of the ChaCha8 generator.
pub fn ar1(pole: f64, std: f64, seed: u64, realization: usize, steps: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(realization as u64);
    let mut z = 0.0;
    let mut out = Vec::with_capacity(steps);
    for k in 0..steps {
        if k > 0 {
            let e: f64 = StandardNormal.sample(&mut rng);
            z = pole * z + std * e;
        }
        out.push(z);
    }
    out
}
