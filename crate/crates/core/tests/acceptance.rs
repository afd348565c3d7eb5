//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Runs without the libtest harness so the lines always print.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use tvopt::consensus::{distance_to_consensus, rounds_needed, run_consensus, ParameterMatrix};
use tvopt::harness::{
    logistic_from_dataset, run_experiment, solve_reference, synthetic_dataset, ExperimentConfig,
    PartitionMode, ReferenceSolution, DEFAULT_REFERENCE_TOL,
};
use tvopt::objectives::{coercivity_check, LocalObjective, LogisticObjective, QuadraticFamily};
use tvopt::optimizers::{
    contraction_factor, contraction_threshold, decentralized_projected_gd, epsilon1_for_target,
    exact_projected_gd, outer_iteration_count, theorem2_budget, InnerMode, SolverConfig,
};
use tvopt::topology::{
    build_schedule, stochasticity_residual, verify_assumption, window_product, Graph,
    MixingSchedule, ScheduleKind, ScheduleStats,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn gaussian(rng: &mut ChaCha8Rng, d: usize, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(d, n, |_, _| StandardNormal.sample(rng))
}

fn alternating_pair() -> MixingSchedule {
    let g01 = Graph::new(3, [(0, 1)]).unwrap();
    let g12 = Graph::new(3, [(1, 2)]).unwrap();
    build_schedule(ScheduleKind::Alternating(vec![g01, g12]), 3, 0, 2).unwrap()
}

fn random_ten(window: usize, seed: u64) -> MixingSchedule {
    build_schedule(ScheduleKind::RandomGilbert { p: 0.25, period: 1 }, 10, seed, window).unwrap()
}

fn complete(n: usize) -> MixingSchedule {
    build_schedule(ScheduleKind::Fixed(Graph::complete(n)), n, 0, 1).unwrap()
}

fn small_logistic(n: usize) -> LogisticObjective {
    let ds = synthetic_dataset(40 * n, 6, 0.1, 21).unwrap();
    logistic_from_dataset(&ds, n, PartitionMode::Contiguous, None, Some(1e-2))
        .unwrap()
        .0
}

fn reference(obj: &dyn LocalObjective) -> ReferenceSolution {
    solve_reference(obj, &obj.constants().unwrap(), DEFAULT_REFERENCE_TOL).unwrap()
}

/// Gossip contraction per window and sufficiency of the planned round count.
fn consensus_contraction() -> Outcome {
    let mut worst_ratio: f64 = 0.0;
    let mut planned_ok = true;
    let mut deltas = Vec::new();
    for (s, b) in [(alternating_pair(), 2), (random_ten(2, 17), 2)] {
        let horizon = 20 * b;
        let delta = verify_assumption(&s, b, horizon).unwrap().delta_hat;
        deltas.push(delta);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let x0 = ParameterMatrix::new(gaussian(&mut rng, 3, s.n())).unwrap();
            let d0 = distance_to_consensus(&x0);
            let mut x = x0.clone();
            for m in 1..=20 {
                x = run_consensus(&x, &s, (m - 1) * b, b).unwrap().0;
                let bound = delta.powi(m as i32) * d0 * (1.0 + 1e-9);
                worst_ratio = worst_ratio.max(distance_to_consensus(&x) / bound);
            }
            for exponent in [1, 3, 6, 10, 19] {
                let eps = d0 * delta.powi(exponent) * rng.random_range(1.0..1.0 / delta);
                let m = rounds_needed(d0, eps, delta, b).unwrap();
                let reached = distance_to_consensus(&run_consensus(&x0, &s, 0, m).unwrap().0);
                planned_ok &= m <= horizon && reached <= eps;
            }
        }
    }
    outcome(
        worst_ratio <= 1.0 && planned_ok,
        format!(
            "delta_hat = {:.4} (3-node), {:.4} (10-node); worst dist/bound = {worst_ratio:.3}; planned rounds suffice: {planned_ok}",
            deltas[0], deltas[1]
        ),
    )
}

/// Complete-graph gossip equals exact projection equals centralized GD.
fn exact_oracle_equivalence() -> Outcome {
    let quadratic = QuadraticFamily::new(10, 0.1).unwrap();
    let logistic = small_logistic(10);
    let objectives: [(&str, &dyn LocalObjective); 2] =
        [("quadratic", &quadratic), ("logistic", &logistic)];
    let mut worst: f64 = 0.0;
    for (_, obj) in objectives {
        let c = obj.constants().unwrap();
        let r = reference(obj);
        let n = obj.n();
        let x0 = DVector::from_fn(obj.dim(), |i, _| 1.0 - 0.1 * i as f64);
        let iters = 100;
        let exact = exact_projected_gd(obj, &c, &x0, iters, &r).unwrap();
        let cfg = SolverConfig::new(InnerMode::FixedRounds(1), iters).keep_iterates(1);
        let dec = decentralized_projected_gd(obj, &c, &complete(n), &x0, &cfg, &r).unwrap();
        let step = 1.0 / (c.mu_f + c.l_f);
        let mut x = x0.clone();
        for k in 0..=iters {
            if k > 0 {
                x -= obj.total_gradient(&x) * step;
            }
            let r_central = (n as f64).sqrt() * (&x - &r.x_star).norm();
            let iterate = dec.records[k].iterate.as_ref().unwrap();
            let dec_gap = iterate.column_iter().map(|col| (col - &x).amax()).fold(0.0, f64::max);
            worst = worst
                .max(dec_gap)
                .max((exact.records[k].r_k - r_central).abs())
                .max((dec.records[k].r_k - exact.records[k].r_k).abs())
                .max((dec.records[k].fgap - exact.records[k].fgap).abs());
        }
    }
    outcome(
        worst <= 1e-10,
        format!("max deviation over 100 iterations, both families: {worst:.2e}"),
    )
}

fn quadratic_setup() -> (QuadraticFamily, ReferenceSolution, MixingSchedule, ScheduleStats) {
    let q = QuadraticFamily::new(10, 0.1).unwrap();
    let r = reference(&q);
    let s = random_ten(2, 29);
    let stats = verify_assumption(&s, 2, 41).unwrap().stats();
    (q, r, s, stats)
}

/// Per-step contraction of `r_k²` above the threshold and the endpoint.
fn lemma2_contraction() -> Outcome {
    let (q, r, s, stats) = quadratic_setup();
    let c = q.constants().unwrap();
    let eps = 1e-6;
    let eps1 = epsilon1_for_target(eps, 10, c.mu_f, c.l_max).unwrap();
    let threshold = contraction_threshold(eps1, &c);
    let factor = contraction_factor(&c);
    let x0 = DVector::from_element(10, 1.0);
    let r0 = 10f64.sqrt() * x0.norm();
    let n_outer = outer_iteration_count(eps, r0, &c).unwrap();
    let inner = InnerMode::AccuracyDriven {
        eps1,
        delta_hat: stats.delta_hat,
    };
    let t = decentralized_projected_gd(&q, &c, &s, &x0, &SolverConfig::new(inner, n_outer), &r)
        .unwrap();
    let mut checked = 0;
    let mut violations = 0;
    for w in t.records.windows(2) {
        let (rk2, rk12) = (w[0].r_k * w[0].r_k, w[1].r_k * w[1].r_k);
        if rk2 >= threshold {
            checked += 1;
            if rk12 > rk2 * factor + 1e-12 {
                violations += 1;
            }
        }
    }
    let final_sq = t.final_record().dist_sq_to_opt;
    outcome(
        violations == 0 && final_sq <= eps,
        format!(
            "N = {n_outer}, steps checked = {checked}, violations = {violations}, final ||X_N - X*||^2 = {final_sq:.3e} (target {eps:.0e})"
        ),
    )
}

/// Executed communications never exceed the budget; the budget is linear in B.
fn budget_soundness() -> Outcome {
    let (q, r, s, stats) = quadratic_setup();
    let c = q.constants().unwrap();
    let x0 = DVector::from_element(10, 1.0);
    let r0 = 10f64.sqrt() * x0.norm();
    let mut pass = true;
    let mut parts = Vec::new();
    for eps in [1e-4, 1e-6] {
        let b = theorem2_budget(eps, r0, &c, &stats, r.grad_norm_at_star).unwrap();
        let inner = InnerMode::AccuracyDriven {
            eps1: b.eps1,
            delta_hat: stats.delta_hat,
        };
        let t = decentralized_projected_gd(&q, &c, &s, &x0, &SolverConfig::new(inner, b.n_outer), &r)
            .unwrap();
        pass &= t.total_comms() <= b.total_comm;
        parts.push(format!("eps {eps:.0e}: used {} <= budget {}", t.total_comms(), b.total_comm));
    }
    let base = theorem2_budget(1e-6, r0, &c, &stats, 0.0).unwrap();
    let linear = [2, 3, 4, 8].iter().all(|&f| {
        let scaled = ScheduleStats {
            window: stats.window * f,
            ..stats
        };
        let b = theorem2_budget(1e-6, r0, &c, &scaled, 0.0).unwrap();
        b.m_inner == f * base.m_inner && b.total_comm == f * base.total_comm
    });
    pass &= linear;
    parts.push(format!("linear in B: {linear}"));
    outcome(pass, parts.join("; "))
}

/// Conditioning ratios of the quadratic family.
fn remark_ratios() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (n, alpha) in [(4, 1.0), (10, 0.1), (100, 0.01)] {
        let c = QuadraticFamily::new(n, alpha).unwrap().constants().unwrap();
        let nf = n as f64;
        let l_ratio = c.l_sum / c.l_f;
        let mu_ratio = c.mu_f / c.mu_sum;
        let l_expected = (nf + alpha) / (1.0 + alpha);
        let mu_expected = (1.0 + alpha) / alpha;
        pass &= (l_ratio - l_expected).abs() <= 1e-12 * l_expected;
        pass &= (mu_ratio - mu_expected).abs() <= 1e-12 * mu_expected;
        if n == 100 {
            pass &= l_ratio > 50.0 && mu_ratio > 100.0;
        }
        parts.push(format!("(n={n}, a={alpha}): L_sum/L_f = {l_ratio:.4}, mu_f/mu_sum = {mu_ratio:.4}"));
    }
    outcome(pass, parts.join("; "))
}

fn desk_config() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/data/logistic_desk.json")
}

/// Accelerated beats tuned DIGing and the best fixed-round projected GD, and
/// the fixed-round curves are separated.
fn desk_orderings() -> Outcome {
    let cfg = ExperimentConfig::from_path(desk_config()).unwrap();
    let rep = run_experiment(&cfg).unwrap();
    let to = |id: &str, target: f64| rep.trajectory(id).and_then(|t| t.comms_to_fgap(target));
    let show = |v: Option<usize>| v.map_or("never".to_string(), |c| c.to_string());
    let acc = to("accelerated-k5", 1e-4);
    let pgd: Vec<Option<usize>> = ["proj-gd-k1", "proj-gd-k5", "proj-gd-k20"]
        .iter()
        .map(|id| to(id, 1e-4))
        .collect();
    let best_pgd = pgd.iter().flatten().copied().min();
    let dig = to("diging", 1e-4);
    let beats = |other: Option<usize>| match (acc, other) {
        (Some(a), Some(o)) => a < o,
        (Some(_), None) => true,
        _ => false,
    };
    let ordering = beats(best_pgd) && beats(dig);
    let at_1e3: Vec<Option<usize>> = ["proj-gd-k1", "proj-gd-k5", "proj-gd-k20"]
        .iter()
        .map(|id| to(id, 1e-3))
        .collect();
    let distinct = at_1e3.iter().all(Option::is_some)
        && at_1e3[0] != at_1e3[1]
        && at_1e3[1] != at_1e3[2]
        && at_1e3[0] != at_1e3[2];
    outcome(
        ordering && distinct,
        format!(
            "comms to 1e-4: accelerated {}, best proj-gd {}, diging {}; proj-gd k=1/5/20 comms to 1e-3: {}/{}/{}",
            show(acc),
            show(best_pgd),
            show(dig),
            show(at_1e3[0]),
            show(at_1e3[1]),
            show(at_1e3[2]),
        ),
    )
}

/// Inequalities, coercivity, gradients, stochasticity, mean preservation and
/// determinism.
fn property_suites() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut parts = Vec::new();

    let mut lemma_slack = f64::INFINITY;
    for _ in 0..1000 {
        let d = rng.random_range(1..8);
        let u = gaussian(&mut rng, d, 1) * rng.random_range(0.1..10.0);
        let v = gaussian(&mut rng, d, 1) * rng.random_range(0.1..10.0);
        let p: f64 = rng.random_range(1e-3..1.0 - 1e-3);
        let s9 = u.norm_squared() / (2.0 * p) + p * v.norm_squared() / 2.0 - u.dot(&v);
        let s10 = v.norm_squared() - p * u.norm_squared() + p / (1.0 - p) * (&v - &u).norm_squared();
        lemma_slack = lemma_slack.min(s9).min(s10);
    }
    let lemma_ok = lemma_slack >= -1e-9;
    parts.push(format!("vector inequalities min slack {lemma_slack:.2e}"));

    let quadratic = QuadraticFamily::new(10, 0.1).unwrap();
    let logistic = small_logistic(10);
    let objectives: [&dyn LocalObjective; 2] = [&quadratic, &logistic];
    let mut coercive = true;
    let mut fd_worst: f64 = 0.0;
    for (idx, obj) in objectives.iter().enumerate() {
        let c = obj.constants().unwrap();
        coercive &= coercivity_check(*obj, &c, 100, 7 + idx as u64).pass;
        for _ in 0..50 {
            let x = gaussian(&mut rng, obj.dim(), 1).column(0).into_owned();
            let i = rng.random_range(0..obj.n());
            let g = obj.gradient(i, &x);
            let h = 1e-6;
            let fd = DVector::from_fn(obj.dim(), |k, _| {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[k] += h;
                xm[k] -= h;
                (obj.value(i, &xp) - obj.value(i, &xm)) / (2.0 * h)
            });
            fd_worst = fd_worst.max((fd - &g).norm() / (1.0 + g.norm()));
        }
    }
    parts.push(format!("coercivity 100 pairs x2: {coercive}; finite-difference worst rel. error {fd_worst:.2e}"));

    let schedules = [
        (alternating_pair(), 2),
        (random_ten(3, 5), 3),
        (build_schedule(ScheduleKind::Fixed(Graph::ring(7)), 7, 0, 1).unwrap(), 1),
        (build_schedule(ScheduleKind::RandomGilbert { p: 0.5, period: 3 }, 6, 8, 4).unwrap(), 4),
    ];
    let mut stoch_worst: f64 = 0.0;
    let mut mean_worst: f64 = 0.0;
    for (s, b) in &schedules {
        for k in b - 1..60 {
            let p = window_product(s, k, *b).unwrap();
            stoch_worst = stoch_worst.max(stochasticity_residual(&p));
        }
        let x0 = ParameterMatrix::new(gaussian(&mut rng, 4, s.n())).unwrap();
        for m in [1, 7, 40] {
            let (x, _) = run_consensus(&x0, s, 3, m).unwrap();
            mean_worst = mean_worst.max((x.mean() - x0.mean()).amax());
        }
    }
    parts.push(format!("window-product stochasticity residual {stoch_worst:.1e}; mean drift {mean_worst:.1e}"));

    let cfg = ExperimentConfig::from_json_str(
        r#"{
            "seed": 3, "agents": 6,
            "objective": {"kind": "synthetic_logistic", "samples": 120, "features": 4, "data_seed": 2},
            "topology": {"window": 2, "seed": 4, "graph": {"kind": "random_gilbert", "p": 0.3, "period": 1}},
            "target_eps": 1e-4,
            "methods": [
                {"id": "pgd", "method": "proj_gd", "inner": {"accuracy": {}}, "iterations": 40},
                {"id": "acc", "method": "accelerated", "inner": {"fixed_rounds": 3}, "iterations": 40},
                {"id": "dig", "method": "diging", "iterations": 40},
                {"id": "ext", "method": "extra", "iterations": 40, "alpha": 1.0}
            ]
        }"#,
        "",
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let write_read = |cfg: &ExperimentConfig, name: &str| {
        let path = dir.path().join(name);
        std::fs::write(&path, run_experiment(cfg).unwrap().csv).unwrap();
        std::fs::read(&path).unwrap()
    };
    let first = write_read(&cfg, "a.csv");
    let second = write_read(&cfg, "b.csv");
    let deterministic = first == second && !first.is_empty();
    parts.push(format!("rerun CSV byte-identical: {deterministic} ({} bytes)", first.len()));

    outcome(
        lemma_ok && coercive && fd_worst <= 1e-6 && stoch_worst <= 1e-12 && mean_worst <= 1e-12 && deterministic,
        parts.join("; "),
    )
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("consensus contraction", consensus_contraction, Duration::from_secs(1)),
        ("exact-oracle equivalence", exact_oracle_equivalence, Duration::from_secs(5)),
        ("per-step contraction and endpoint", lemma2_contraction, Duration::from_secs(30)),
        ("budget soundness", budget_soundness, Duration::from_secs(30)),
        ("conditioning ratios", remark_ratios, Duration::from_secs(1)),
        ("desk-scale orderings", desk_orderings, Duration::from_secs(300)),
        ("property suites", property_suites, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (i, (name, check, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check);
        let elapsed = start.elapsed();
        let (pass, detail) = match result {
            Ok(o) => (o.pass && elapsed <= *limit, o.detail),
            Err(_) => (false, "panicked".to_string()),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {}: {} [{name}] {detail} ({:.2}s, limit {}s)",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion/criteria failed");
        ExitCode::FAILURE
    }
}
