//! Experiment orchestration: setup, per-method runs, metrics CSV and manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{diging, extra};
use crate::consensus::{consensus_distance, gossip};
use crate::error::{Error, Result};
use crate::harness::config::{
    ExperimentConfig, GraphSpec, InnerSpec, MethodKind, MethodSpec, ObjectiveSpec,
    DEFAULT_LAMBDA_SCALE,
};
use crate::harness::libsvm::{parse_libsvm, partition_dataset, LibsvmDataset, PartitionMode};
use crate::harness::reference::{solve_reference, ReferenceSolution};
use crate::harness::synthetic::synthetic_dataset;
use crate::objectives::{LabelSet, LocalObjective, LogisticObjective, QuadraticFamily, SpectralConstants};
use crate::optimizers::{
    accelerated_projected_gd, decentralized_projected_gd, default_gamma, epsilon1_for_target,
    exact_projected_gd, momentum, theorem2_budget, AccelConstants, AccuracyBudget, InnerMode,
    SolverConfig, Trajectory,
};
use crate::topology::{
    build_schedule, default_horizon, read_graph_list, verify_assumption, AssumptionReport, Graph,
    MixingSchedule, ScheduleKind,
};

pub const CSV_HEADER: &str = "method,k,comms,grads,fgap,dist_sq_to_opt,dist_to_consensus,r_k";

/// Default DIGing/EXTRA step grid: `2^j / L_max` for `j` in this range.
pub const DEFAULT_GRID_EXPONENTS: std::ops::RangeInclusive<i32> = -10..=4;

pub enum BuiltObjective {
    Quadratic(QuadraticFamily),
    Logistic(LogisticObjective),
}

impl BuiltObjective {
    pub fn as_dyn(&self) -> &dyn LocalObjective {
        match self {
            BuiltObjective::Quadratic(q) => q,
            BuiltObjective::Logistic(l) => l,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DataSummary {
    pub samples: usize,
    /// Feature dimension before the bias slot.
    pub raw_features: usize,
    pub label_set: LabelSet,
    pub partition: PartitionMode,
    pub shard_sizes: Vec<usize>,
    /// `λ_max(ÃᵀÃ) / (4m)`.
    pub data_smoothness: f64,
    pub lambda: f64,
}

/// Split a dataset over `n` agents and build the logistic objective. With
/// `lambda = None`, `λ = lambda_scale · data_smoothness`.
pub fn logistic_from_dataset(
    ds: &LibsvmDataset,
    n: usize,
    partition: PartitionMode,
    lambda: Option<f64>,
    lambda_scale: Option<f64>,
) -> Result<(LogisticObjective, DataSummary)> {
    let shards: Vec<_> = partition_dataset(ds.m(), n, partition)?
        .iter()
        .map(|rows| ds.samples(rows))
        .collect();
    let unregularized = LogisticObjective::new(shards.clone(), 0.0, ds.label_set)?;
    let data_smoothness = unregularized.data_smoothness();
    let lambda = lambda.unwrap_or(lambda_scale.unwrap_or(DEFAULT_LAMBDA_SCALE) * data_smoothness);
    let obj = LogisticObjective::new(shards, lambda, ds.label_set)?;
    let summary = DataSummary {
        samples: ds.m(),
        raw_features: ds.dim,
        label_set: ds.label_set,
        partition,
        shard_sizes: obj.shard_sizes(),
        data_smoothness,
        lambda,
    };
    Ok((obj, summary))
}

pub fn build_objective(cfg: &ExperimentConfig) -> Result<(BuiltObjective, Option<DataSummary>)> {
    let n = cfg.agents;
    match &cfg.objective {
        ObjectiveSpec::Quadratic { alpha, dim } => Ok((
            BuiltObjective::Quadratic(QuadraticFamily::with_dim(n, *alpha, dim.unwrap_or(n))?),
            None,
        )),
        ObjectiveSpec::Logistic {
            path,
            lambda,
            lambda_scale,
            max_rows,
            partition,
        } => {
            let mut ds = parse_libsvm(cfg.resolve(path))?;
            if let Some(m) = max_rows {
                ds = ds.truncated(*m);
            }
            let (obj, s) = logistic_from_dataset(&ds, n, *partition, *lambda, *lambda_scale)?;
            Ok((BuiltObjective::Logistic(obj), Some(s)))
        }
        ObjectiveSpec::SyntheticLogistic {
            samples,
            features,
            data_seed,
            scale_min,
            lambda,
            lambda_scale,
            partition,
        } => {
            let ds = synthetic_dataset(*samples, *features, *scale_min, *data_seed)?;
            let (obj, s) = logistic_from_dataset(&ds, n, *partition, *lambda, *lambda_scale)?;
            Ok((BuiltObjective::Logistic(obj), Some(s)))
        }
    }
}

fn edge_list(n: usize, edges: &[(usize, usize)]) -> Result<Graph> {
    Graph::new(n, edges.iter().copied()).map_err(|e| Error::Config(e.to_string()))
}

pub fn build_topology(cfg: &ExperimentConfig) -> Result<MixingSchedule> {
    let n = cfg.agents;
    let t = &cfg.topology;
    let kind = match &t.graph {
        GraphSpec::Fixed { name: Some(name), .. } => ScheduleKind::Fixed(name.build(n)),
        GraphSpec::Fixed { edges: Some(e), .. } => ScheduleKind::Fixed(edge_list(n, e)?),
        GraphSpec::Alternating { file: Some(f), .. } => {
            ScheduleKind::Alternating(read_graph_list(cfg.resolve(f), n)?)
        }
        GraphSpec::Alternating { graphs: Some(gs), .. } => ScheduleKind::Alternating(
            gs.iter().map(|e| edge_list(n, e)).collect::<Result<_>>()?,
        ),
        GraphSpec::RandomGilbert { p, period } => ScheduleKind::RandomGilbert {
            p: *p,
            period: *period,
        },
        _ => return Err(Error::Config("incomplete graph specification".into())),
    };
    build_schedule(kind, n, t.seed, t.window).map_err(|e| Error::Config(e.to_string()))
}

pub fn check_topology(cfg: &ExperimentConfig) -> Result<(MixingSchedule, AssumptionReport)> {
    let schedule = build_topology(cfg)?;
    let window = cfg.topology.window;
    let horizon = cfg.topology.horizon.unwrap_or_else(|| default_horizon(window));
    let report = verify_assumption(&schedule, window, horizon)?;
    Ok((schedule, report))
}

/// Everything the methods share.
pub struct Setup {
    pub objective: BuiltObjective,
    pub data: Option<DataSummary>,
    pub constants: SpectralConstants,
    pub schedule: MixingSchedule,
    pub assumption: AssumptionReport,
    pub reference: ReferenceSolution,
    pub x0: DVector<f64>,
    /// `‖Π₀ − Π*‖_F = √n ‖x0 − x*‖`.
    pub r0: f64,
    pub eps1: f64,
    /// `None` when `r0 = 0` or `δ̂ ≥ 1`.
    pub budget: Option<AccuracyBudget>,
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Setup> {
    let (objective, data) = build_objective(cfg)?;
    let obj = objective.as_dyn();
    let constants = obj.constants()?;
    let (schedule, assumption) = check_topology(cfg)?;
    let reference = solve_reference(obj, &constants, cfg.reference_tol)?;
    let d = obj.dim();
    let x0 = match &cfg.x0 {
        Some(v) if v.len() != d => {
            return Err(Error::Config(format!("x0 has length {}, objective dimension is {d}", v.len())))
        }
        Some(v) => DVector::from_column_slice(v),
        None => DVector::from_element(d, 1.0),
    };
    let r0 = (cfg.agents as f64).sqrt() * (&x0 - &reference.x_star).norm();
    let eps1 = epsilon1_for_target(cfg.target_eps, cfg.agents, constants.mu_f, constants.l_max)?;
    let budget = if r0 > 0.0 {
        theorem2_budget(
            cfg.target_eps,
            r0,
            &constants,
            &assumption.stats(),
            reference.grad_norm_at_star,
        )
        .ok()
    } else {
        None
    };
    Ok(Setup {
        objective,
        data,
        constants,
        schedule,
        assumption,
        reference,
        x0,
        r0,
        eps1,
        budget,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridPoint {
    pub alpha: f64,
    pub final_fgap: f64,
    pub comms_to_tune_fgap: Option<usize>,
    pub diverged: bool,
}

/// Values a method actually ran with, after defaults and tuning.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MethodSettings {
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub momentum: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inner: Option<InnerMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constants: Option<AccelConstants>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub alpha_grid: Vec<GridPoint>,
}

#[derive(Clone, Debug)]
pub struct MethodRun {
    pub settings: MethodSettings,
    pub trajectory: Trajectory,
}

#[derive(Clone, Debug)]
pub struct MethodOutcome {
    pub id: String,
    pub method: MethodKind,
    /// Error message on failure.
    pub result: std::result::Result<MethodRun, String>,
}

fn check_finite(t: &Trajectory) -> Result<()> {
    for r in &t.records {
        let values = [r.fgap, r.dist_sq_to_opt, r.dist_to_consensus, r.r_k];
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { k: r.k });
        }
    }
    Ok(())
}

fn inner_mode(setup: &Setup, spec: &InnerSpec) -> InnerMode {
    match *spec {
        InnerSpec::FixedRounds(m) => InnerMode::FixedRounds(m),
        InnerSpec::Accuracy { eps1 } => InnerMode::AccuracyDriven {
            eps1: eps1.unwrap_or(setup.eps1),
            delta_hat: setup.assumption.delta_hat,
        },
    }
}

fn default_alpha_grid(c: &SpectralConstants) -> Vec<f64> {
    DEFAULT_GRID_EXPONENTS
        .rev()
        .map(|j| 2f64.powi(j) / c.l_max)
        .collect()
}

/// Ranking key of a tuning run: earlier comms to the tuning f-gap first, then
/// smaller final f-gap.
fn grid_key(p: &GridPoint) -> (bool, usize, f64) {
    (
        p.diverged,
        p.comms_to_tune_fgap.unwrap_or(usize::MAX),
        if p.final_fgap.is_finite() { p.final_fgap } else { f64::INFINITY },
    )
}

pub fn run_method(setup: &Setup, spec: &MethodSpec) -> Result<MethodRun> {
    let obj = setup.objective.as_dyn();
    let c = &setup.constants;
    let s = &setup.schedule;
    let x0 = &setup.x0;
    let r = &setup.reference;
    let mut settings = MethodSettings::default();
    let trajectory = match spec.method {
        MethodKind::Exact => {
            settings.iterations = spec.iterations.unwrap_or(0);
            settings.gamma = Some(default_gamma(c));
            exact_projected_gd(obj, c, x0, settings.iterations, r)?
        }
        MethodKind::ProjGd | MethodKind::Accelerated => {
            let inner_spec = spec
                .inner
                .as_ref()
                .ok_or_else(|| Error::Config(format!("method {:?} needs inner", spec.id)))?;
            let inner = inner_mode(setup, inner_spec);
            settings.iterations = spec
                .iterations
                .unwrap_or_else(|| setup.budget.map_or(0, |b| b.n_outer));
            settings.inner = Some(inner);
            let mut cfg = SolverConfig::new(inner, settings.iterations).with_accel(spec.constants);
            if let Some(g) = spec.gamma {
                cfg = cfg.with_gamma(g);
            }
            if spec.method == MethodKind::ProjGd {
                settings.gamma = Some(spec.gamma.unwrap_or_else(|| default_gamma(c)));
                decentralized_projected_gd(obj, c, s, x0, &cfg, r)?
            } else {
                let (l, kappa) = match spec.constants {
                    AccelConstants::Restricted => (c.l_hat(), c.kappa_f()),
                    AccelConstants::Full => (c.l_max, c.kappa_full()),
                };
                settings.gamma = Some(spec.gamma.unwrap_or(1.0 / l));
                settings.momentum = Some(momentum(kappa)?);
                settings.constants = Some(spec.constants);
                accelerated_projected_gd(obj, c, s, x0, &cfg, r)?
            }
        }
        MethodKind::Diging | MethodKind::Extra => {
            settings.iterations = spec.iterations.unwrap_or(0);
            let iters = settings.iterations;
            let run = |alpha: f64| {
                if spec.method == MethodKind::Diging {
                    diging(obj, s, x0, alpha, iters, r)
                } else {
                    extra(obj, s, x0, alpha, iters, r)
                }
            };
            let alpha = match spec.alpha {
                Some(a) => a,
                None => {
                    let grid = spec.alpha_grid.clone().unwrap_or_else(|| default_alpha_grid(c));
                    let points = grid
                        .par_iter()
                        .map(|&alpha| {
                            let t = run(alpha)?;
                            let diverged = check_finite(&t).is_err();
                            Ok(GridPoint {
                                alpha,
                                final_fgap: t.final_record().fgap,
                                comms_to_tune_fgap: spec.tune_fgap.and_then(|f| t.comms_to_fgap(f)),
                                diverged,
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let best = points
                        .iter()
                        .min_by(|a, b| grid_key(a).partial_cmp(&grid_key(b)).unwrap())
                        .map(|p| p.alpha)
                        .expect("grid is non-empty");
                    settings.alpha_grid = points;
                    best
                }
            };
            settings.alpha = Some(alpha);
            run(alpha)?
        }
    };
    check_finite(&trajectory)?;
    let mut trajectory = trajectory;
    trajectory.method = spec.id.clone();
    Ok(MethodRun {
        settings,
        trajectory,
    })
}

pub fn metrics_csv(outcomes: &[MethodOutcome]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for o in outcomes {
        let Ok(run) = &o.result else { continue };
        for r in &run.trajectory.records {
            writeln!(
                out,
                "{},{},{},{},{:e},{:e},{:e},{:e}",
                o.id, r.k, r.comms, r.grads, r.fgap, r.dist_sq_to_opt, r.dist_to_consensus, r.r_k
            )
            .unwrap();
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct Seeds {
    pub global: u64,
    pub topology: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partition: Option<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstantsRecord {
    #[serde(flatten)]
    pub raw: SpectralConstants,
    pub mu_hat: f64,
    pub l_hat: f64,
    pub kappa_f: f64,
    pub kappa_full: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScheduleRecord {
    pub window: usize,
    pub horizon: usize,
    pub delta_hat: f64,
    pub max_residual: f64,
    pub min_entry: f64,
    pub sparsity_violations: usize,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MethodRecord {
    pub id: String,
    pub method: MethodKind,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub settings: Option<MethodSettings>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_comms: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_grads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_fgap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_dist_sq_to_opt: Option<f64>,
}

/// Run manifest: the config echo plus every derived number needed to rerun
/// or audit the experiment.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub seeds: Seeds,
    pub agents: usize,
    pub dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<DataSummary>,
    pub constants: ConstantsRecord,
    pub schedule: ScheduleRecord,
    pub f_star: f64,
    pub grad_norm_at_star: f64,
    pub x_star: Vec<f64>,
    pub x0: Vec<f64>,
    pub r0: f64,
    pub target_eps: f64,
    pub eps1: f64,
    pub default_gamma: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<AccuracyBudget>,
    pub methods: Vec<MethodRecord>,
    pub failures: Vec<String>,
}

fn partition_seed(cfg: &ExperimentConfig) -> Option<u64> {
    match &cfg.objective {
        ObjectiveSpec::Logistic { partition, .. } | ObjectiveSpec::SyntheticLogistic { partition, .. } => {
            match partition {
                PartitionMode::Shuffled(s) => Some(*s),
                PartitionMode::Contiguous => None,
            }
        }
        ObjectiveSpec::Quadratic { .. } => None,
    }
}

pub fn build_manifest(cfg: &ExperimentConfig, setup: &Setup, outcomes: &[MethodOutcome]) -> Manifest {
    let c = setup.constants;
    let a = &setup.assumption;
    let methods = outcomes
        .iter()
        .map(|o| match &o.result {
            Ok(run) => {
                let last = run.trajectory.final_record();
                MethodRecord {
                    id: o.id.clone(),
                    method: o.method,
                    status: "ok",
                    error: None,
                    settings: Some(run.settings.clone()),
                    total_comms: Some(last.comms),
                    total_grads: Some(last.grads),
                    final_fgap: Some(last.fgap),
                    final_dist_sq_to_opt: Some(last.dist_sq_to_opt),
                }
            }
            Err(e) => MethodRecord {
                id: o.id.clone(),
                method: o.method,
                status: "failed",
                error: Some(e.clone()),
                settings: None,
                total_comms: None,
                total_grads: None,
                final_fgap: None,
                final_dist_sq_to_opt: None,
            },
        })
        .collect();
    Manifest {
        config: cfg.clone(),
        seeds: Seeds {
            global: cfg.seed,
            topology: cfg.topology.seed,
            data: match &cfg.objective {
                ObjectiveSpec::SyntheticLogistic { data_seed, .. } => Some(*data_seed),
                _ => None,
            },
            partition: partition_seed(cfg),
        },
        agents: cfg.agents,
        dim: setup.objective.as_dyn().dim(),
        data: setup.data.clone(),
        constants: ConstantsRecord {
            raw: c,
            mu_hat: c.mu_hat(),
            l_hat: c.l_hat(),
            kappa_f: c.kappa_f(),
            kappa_full: c.kappa_full(),
        },
        schedule: ScheduleRecord {
            window: a.window,
            horizon: a.horizon,
            delta_hat: a.delta_hat,
            max_residual: a.max_residual,
            min_entry: a.min_entry,
            sparsity_violations: a.sparsity_violations.len(),
            pass: a.pass,
        },
        f_star: setup.reference.f_star,
        grad_norm_at_star: setup.reference.grad_norm_at_star,
        x_star: setup.reference.x_star.iter().copied().collect(),
        x0: setup.x0.iter().copied().collect(),
        r0: setup.r0,
        target_eps: cfg.target_eps,
        eps1: setup.eps1,
        default_gamma: default_gamma(&c),
        budget: setup.budget,
        methods,
        failures: outcomes
            .iter()
            .filter_map(|o| o.result.as_ref().err().map(|e| format!("{}: {e}", o.id)))
            .collect(),
    }
}

pub struct ExperimentReport {
    pub setup: Setup,
    pub outcomes: Vec<MethodOutcome>,
    pub csv: String,
    pub manifest: Manifest,
}

impl ExperimentReport {
    pub fn all_failed(&self) -> bool {
        self.outcomes.iter().all(|o| o.result.is_err())
    }

    pub fn outcome(&self, id: &str) -> Option<&MethodOutcome> {
        self.outcomes.iter().find(|o| o.id == id)
    }

    pub fn trajectory(&self, id: &str) -> Option<&Trajectory> {
        self.outcome(id)?.result.as_ref().ok().map(|r| &r.trajectory)
    }

    pub fn manifest_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        s.push('\n');
        s
    }

    /// Write the CSV and manifest to the configured paths; returns them.
    pub fn write(&self, cfg: &ExperimentConfig) -> Result<(PathBuf, PathBuf)> {
        let csv = cfg.resolve(&cfg.output.csv);
        let manifest = cfg.resolve(&cfg.output.manifest);
        write_file(&csv, &self.csv)?;
        write_file(&manifest, &self.manifest_json())?;
        Ok((csv, manifest))
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Run every method of `cfg` (in parallel) and assemble outputs in config
/// order. A failing method is recorded and does not stop the others.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let setup = prepare(cfg)?;
    let outcomes: Vec<MethodOutcome> = cfg
        .methods
        .par_iter()
        .map(|spec| MethodOutcome {
            id: spec.id.clone(),
            method: spec.method,
            result: run_method(&setup, spec).map_err(|e| e.to_string()),
        })
        .collect();
    let csv = metrics_csv(&outcomes);
    let manifest = build_manifest(cfg, &setup, &outcomes);
    Ok(ExperimentReport {
        setup,
        outcomes,
        csv,
        manifest,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub round: usize,
    pub dist_to_consensus: f64,
    /// `δ̂^⌊t/B⌋ · ‖X₀ − proj_K(X₀)‖`.
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConsensusBench {
    pub window: usize,
    pub delta_hat: f64,
    pub rows: Vec<BenchRow>,
}

impl ConsensusBench {
    pub fn csv(&self) -> String {
        let mut out = String::from("round,dist_to_consensus,bound\n");
        for r in &self.rows {
            writeln!(out, "{},{:e},{:e}", r.round, r.dist_to_consensus, r.bound).unwrap();
        }
        out
    }
}

/// Gossip decay of a seeded Gaussian `X₀` against the window bound.
pub fn consensus_bench(cfg: &ExperimentConfig) -> Result<ConsensusBench> {
    let (schedule, report) = check_topology(cfg)?;
    let window = report.window;
    let (rounds, d) = cfg
        .consensus_bench
        .map_or((report.horizon, 1), |b| (b.rounds, b.dim));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut x = DMatrix::from_fn(d, cfg.agents, |_, _| StandardNormal.sample(&mut rng));
    let d0 = consensus_distance(&x);
    let mut rows = Vec::with_capacity(rounds + 1);
    for t in 0..=rounds {
        if t > 0 {
            gossip(&mut x, &schedule, t - 1, 1);
        }
        rows.push(BenchRow {
            round: t,
            dist_to_consensus: consensus_distance(&x),
            bound: report.delta_hat.powi((t / window) as i32) * d0,
        });
    }
    Ok(ConsensusBench {
        window,
        delta_hat: report.delta_hat,
        rows,
    })
}
