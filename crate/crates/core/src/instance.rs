//! Serializable problem instances.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::credal::CredalSet;
use crate::error::{domain, Error, Result};
use crate::markov::{StateSpace, TargetSet};

/// Instance family recorded in generator metadata.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Random,
    WorstCase,
    PropagationChain,
    Example1,
    Example2,
    Tiebreak,
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "random" => Self::Random,
            "worst_case" | "worst-case" => Self::WorstCase,
            "propagation_chain" | "propagation-chain" => Self::PropagationChain,
            "example1" => Self::Example1,
            "example2" => Self::Example2,
            "tiebreak" => Self::Tiebreak,
            other => return domain(format!("unknown family '{other}'")),
        })
    }
}

/// How a random instance attaches credal rows to its support graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CredalModel {
    /// ε-contamination of a random base row, contaminating only along graph edges.
    EpsContam,
    /// ε-contamination of a random base row towards every state.
    EpsFull,
    /// Convex hull of `n_x` random points on the simplex over the row's edges.
    VertexHull,
}

impl CredalModel {
    pub fn name(self) -> &'static str {
        match self {
            Self::EpsContam => "eps_contam",
            Self::EpsFull => "eps_full",
            Self::VertexHull => "vertex_hull",
        }
    }

    pub fn uses_epsilon(self) -> bool {
        !matches!(self, Self::VertexHull)
    }
}

impl fmt::Display for CredalModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CredalModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "eps" | "eps_contam" | "eps-contam" => Self::EpsContam,
            "eps_full" | "eps-full" => Self::EpsFull,
            "vertex" | "vertex_hull" | "vertex-hull" | "hull" => Self::VertexHull,
            other => return domain(format!("unknown credal model '{other}'")),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorMeta {
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<CredalModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Number of extreme points (worst-case family).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    /// Upper interval bound (propagation chain).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
}

impl GeneratorMeta {
    pub fn new(family: Family) -> Self {
        Self {
            family,
            lambda: None,
            model: None,
            epsilon: None,
            seed: None,
            m: None,
            b: None,
        }
    }
}

/// A complete problem: state count, target, credal set, and provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub states: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    pub target: Vec<usize>,
    pub credal: CredalSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorMeta>,
}

impl InstanceSpec {
    pub fn new(credal: CredalSet, target: Vec<usize>) -> Result<Self> {
        let spec = Self {
            states: credal.size(),
            labels: None,
            target,
            credal,
            seed: None,
            generator: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_generator(mut self, meta: GeneratorMeta) -> Self {
        self.seed = meta.seed;
        self.generator = Some(meta);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.credal.size() != self.states {
            return domain(format!(
                "credal set has {} rows but the instance declares {} states",
                self.credal.size(),
                self.states
            ));
        }
        self.state_space()?;
        self.target_set()?;
        Ok(())
    }

    pub fn state_space(&self) -> Result<StateSpace> {
        match &self.labels {
            Some(labels) if labels.len() != self.states => {
                domain("label count differs from state count")
            }
            Some(labels) => StateSpace::with_labels(labels.clone()),
            None => StateSpace::new(self.states),
        }
    }

    pub fn target_set(&self) -> Result<TargetSet> {
        TargetSet::new(self.states, self.target.iter().copied())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}
