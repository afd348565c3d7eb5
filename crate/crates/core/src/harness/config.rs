//! JSON experiment configuration. The schema is documented in the README.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::libsvm::PartitionMode;
use crate::harness::reference::DEFAULT_REFERENCE_TOL;
use crate::optimizers::AccelConstants;
use crate::topology::Graph;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub agents: usize,
    pub objective: ObjectiveSpec,
    pub topology: TopologySpec,
    /// Common starting point of every agent; all ones when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    /// Target `‖X_N − X*‖²` for accuracy-driven runs and the budget.
    pub target_eps: f64,
    #[serde(default = "default_reference_tol")]
    pub reference_tol: f64,
    pub methods: Vec<MethodSpec>,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consensus_bench: Option<ConsensusBenchSpec>,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_reference_tol() -> f64 {
    DEFAULT_REFERENCE_TOL
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveSpec {
    /// `f_i(x) = ½ x_i² + (α/2n) ‖x‖²` with `d = dim` (default `n`).
    Quadratic {
        alpha: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dim: Option<usize>,
    },
    /// Logistic regression on a LibSVM file.
    Logistic {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda: Option<f64>,
        /// `λ = lambda_scale · λ_max(ÃᵀÃ)/(4m)` when `lambda` is absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda_scale: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_rows: Option<usize>,
        #[serde(default)]
        partition: PartitionMode,
    },
    /// Logistic regression on seeded Gaussian data with a planted separator.
    SyntheticLogistic {
        samples: usize,
        features: usize,
        data_seed: u64,
        /// Smallest feature scale; scales decay geometrically from 1.
        #[serde(default = "unit")]
        scale_min: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda: Option<f64>,
        /// `λ = lambda_scale · λ_max(ÃᵀÃ)/(4m)` when `lambda` is absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda_scale: Option<f64>,
        #[serde(default)]
        partition: PartitionMode,
    },
}

pub const DEFAULT_LAMBDA_SCALE: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySpec {
    pub window: usize,
    pub seed: u64,
    /// Steps checked when estimating `δ̂`; defaults to `B − 1 + 10B`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    pub graph: GraphSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSpec {
    /// A named graph or an explicit edge list.
    Fixed {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<NamedGraph>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        edges: Option<Vec<(usize, usize)>>,
    },
    /// Cycle through edge lists given inline or in a graph-list file.
    Alternating {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        file: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        graphs: Option<Vec<Vec<(usize, usize)>>>,
    },
    RandomGilbert { p: f64, period: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedGraph {
    Complete,
    Ring,
    Path,
    Empty,
}

impl NamedGraph {
    pub fn build(self, n: usize) -> Graph {
        match self {
            NamedGraph::Complete => Graph::complete(n),
            NamedGraph::Ring => Graph::ring(n),
            NamedGraph::Path => Graph::path(n),
            NamedGraph::Empty => Graph::empty(n),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    Exact,
    ProjGd,
    Accelerated,
    Diging,
    Extra,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InnerSpec {
    FixedRounds(usize),
    /// `eps1` defaults to the value derived from `target_eps`.
    Accuracy {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eps1: Option<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    pub id: String,
    pub method: MethodKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner: Option<InnerSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Candidates tried when `alpha` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_grid: Option<Vec<f64>>,
    /// Grid winner is the first to reach this f-gap; ties and misses fall
    /// back to the final f-gap.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tune_fgap: Option<f64>,
    #[serde(default)]
    pub constants: AccelConstants,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_csv")]
    pub csv: PathBuf,
    #[serde(default = "default_manifest")]
    pub manifest: PathBuf,
}

fn default_csv() -> PathBuf {
    PathBuf::from("metrics.csv")
}

fn default_manifest() -> PathBuf {
    PathBuf::from("manifest.json")
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            csv: default_csv(),
            manifest: default_manifest(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsensusBenchSpec {
    pub rounds: usize,
    #[serde(default = "one")]
    pub dim: usize,
}

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| config_err(format!("invalid config: {e}")))?;
        cfg.base_dir = base_dir.into();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json_str(&text, base)
            .map_err(|e| config_err(format!("{}: {e}", path.display())))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.agents < 2 {
            return Err(config_err(format!("agents must be >= 2, got {}", self.agents)));
        }
        if !(self.target_eps > 0.0) {
            return Err(config_err(format!("target_eps must be positive, got {}", self.target_eps)));
        }
        if !(self.reference_tol > 0.0) {
            return Err(config_err("reference_tol must be positive"));
        }
        if let Some(x0) = &self.x0 {
            if x0.iter().any(|v| !v.is_finite()) {
                return Err(config_err("x0 has non-finite entries"));
            }
        }
        self.validate_objective()?;
        self.validate_topology()?;
        if self.methods.is_empty() {
            return Err(config_err("methods is empty"));
        }
        let mut ids = BTreeSet::new();
        for m in &self.methods {
            m.validate()?;
            if !ids.insert(m.id.as_str()) {
                return Err(config_err(format!("duplicate method id {:?}", m.id)));
            }
        }
        if let Some(b) = &self.consensus_bench {
            if b.dim == 0 {
                return Err(config_err("consensus_bench.dim must be >= 1"));
            }
        }
        Ok(())
    }

    fn validate_objective(&self) -> Result<()> {
        let reg = match &self.objective {
            ObjectiveSpec::Quadratic { alpha, dim } => {
                if !(*alpha > 0.0) {
                    return Err(config_err(format!("alpha must be positive, got {alpha}")));
                }
                if dim.is_some_and(|d| d < self.agents) {
                    return Err(config_err("quadratic dim must be >= agents"));
                }
                return Ok(());
            }
            ObjectiveSpec::Logistic {
                lambda,
                lambda_scale,
                max_rows,
                ..
            } => {
                if max_rows.is_some_and(|m| m < self.agents) {
                    return Err(config_err("max_rows must be >= agents"));
                }
                (lambda, lambda_scale)
            }
            ObjectiveSpec::SyntheticLogistic {
                samples,
                features,
                scale_min,
                lambda,
                lambda_scale,
                ..
            } => {
                if *samples < self.agents || *features == 0 {
                    return Err(config_err("synthetic data needs samples >= agents and features >= 1"));
                }
                if !(*scale_min > 0.0 && *scale_min <= 1.0) {
                    return Err(config_err("scale_min must lie in (0, 1]"));
                }
                (lambda, lambda_scale)
            }
        };
        match (*reg.0, *reg.1) {
            (Some(_), Some(_)) => Err(config_err("give lambda or lambda_scale, not both")),
            (Some(l), None) | (None, Some(l)) if !(l > 0.0) || !l.is_finite() => {
                Err(config_err(format!("regularization must be positive, got {l}")))
            }
            _ => Ok(()),
        }
    }

    fn validate_topology(&self) -> Result<()> {
        let t = &self.topology;
        if t.window == 0 {
            return Err(config_err("topology.window must be >= 1"));
        }
        if t.horizon.is_some_and(|h| h < t.window) {
            return Err(config_err("topology.horizon must be >= window"));
        }
        match &t.graph {
            GraphSpec::Fixed { name, edges } => {
                if name.is_some() == edges.is_some() {
                    return Err(config_err("fixed graph needs exactly one of name, edges"));
                }
            }
            GraphSpec::Alternating { file, graphs } => {
                if file.is_some() == graphs.is_some() {
                    return Err(config_err("alternating graphs need exactly one of file, graphs"));
                }
            }
            GraphSpec::RandomGilbert { p, period } => {
                if !(*p > 0.0 && *p <= 1.0) || *period == 0 {
                    return Err(config_err("random_gilbert needs 0 < p <= 1 and period >= 1"));
                }
            }
        }
        Ok(())
    }
}

impl MethodSpec {
    fn validate(&self) -> Result<()> {
        let id = &self.id;
        if id.is_empty() || id.contains([',', '"', '\n', '\r']) {
            return Err(config_err(format!("method id {id:?} must be non-empty without commas, quotes or newlines")));
        }
        let err = |msg: &str| Err(config_err(format!("method {id:?}: {msg}")));
        let uses_inner = matches!(self.method, MethodKind::ProjGd | MethodKind::Accelerated);
        let uses_alpha = matches!(self.method, MethodKind::Diging | MethodKind::Extra);
        if uses_inner != self.inner.is_some() {
            return err(if uses_inner { "inner is required" } else { "inner is not used" });
        }
        if !uses_alpha && (self.alpha.is_some() || self.alpha_grid.is_some() || self.tune_fgap.is_some()) {
            return err("alpha, alpha_grid and tune_fgap apply to diging and extra only");
        }
        if self.alpha.is_some() && self.alpha_grid.is_some() {
            return err("give alpha or alpha_grid, not both");
        }
        if (uses_alpha || self.method == MethodKind::Exact) && self.gamma.is_some() {
            return err("gamma applies to proj_gd and accelerated only");
        }
        if self.method != MethodKind::Accelerated && self.constants != AccelConstants::Restricted {
            return err("constants applies to accelerated only");
        }
        let accuracy = matches!(self.inner, Some(InnerSpec::Accuracy { .. }));
        if self.iterations.is_none() && !(self.method == MethodKind::ProjGd && accuracy) {
            return err("iterations is required");
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0) || !g.is_finite() {
                return err("gamma must be positive");
            }
        }
        if let Some(a) = self.alpha {
            if !(a >= 0.0) || !a.is_finite() {
                return err("alpha must be >= 0");
            }
        }
        if let Some(grid) = &self.alpha_grid {
            if grid.is_empty() || grid.iter().any(|a| !(*a >= 0.0) || !a.is_finite()) {
                return err("alpha_grid must be non-empty with values >= 0");
            }
        }
        if let Some(InnerSpec::Accuracy { eps1: Some(e) }) = self.inner {
            if !(e > 0.0) {
                return err("eps1 must be positive");
            }
        }
        Ok(())
    }
}
