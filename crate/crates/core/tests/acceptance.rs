//! Acceptance suite: one test per criterion, each printing a single
//! PASS/FAIL line (run with `--nocapture` to see them on success).
//!
//! Criteria 3 and 4 compare the zero-sum solves entrywise against the
//! bundled six-decimal reference tables. Those tables are internally
//! inconsistent with their own model data (they solve the CAREs only
//! under a defective chain coupling that applies regime 1's rates to
//! every regime — pinned in tests/solver_validation.rs, cross-checked
//! by high-precision Monte Carlo), so their table-diff clauses fail by
//! design rather than being loosened; every other clause of those
//! criteria passes.

mod common;

use std::time::Instant;

use common::{ode_zero_sum, scalar_zero_sum_model};
use nalgebra::{DMatrix, DVector};
use regime_riccati::builtin::example_model;
use regime_riccati::care::{
    pinv, solve_closed_nash_cares, solve_open_rep_cares, solve_zero_sum_care, CareSolution,
    SolverOpts, PINV_CUTOFF,
};
use regime_riccati::chain::validate_generator;
use regime_riccati::cli::{reproduce, McBudget};
use regime_riccati::linalg::min_eig_sym;
use regime_riccati::model::RegimeFamily;
use regime_riccati::rng::{derive_key, Stream};
use regime_riccati::sim::{
    check_stationarity_residual, simulate_closed_loop, simulate_closed_loop_with_threads,
    SimConfig,
};
use regime_riccati::stability::{dissipativity_check, is_stabilizer, lyapunov_spectral_check};
use regime_riccati::synthesis::{
    closed_nash_strategy, open_rep_strategy, value_homogeneous, zero_sum_strategy, StrategyPair,
};

fn verdict(criterion: &str, pass: bool, detail: &str) -> bool {
    println!(
        "criterion {criterion}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}

fn reproduce_budget() -> McBudget {
    // Light cross-check budget: criterion 8 runs the precise Monte Carlo
    // separately; this keeps the timed criterion-1 pipeline well under
    // its 5-second budget even with the rest of the suite running on
    // the same cores.
    McBudget {
        paths: 1000,
        dt: 1e-3,
        seed: 2024,
        horizon: 10.0,
    }
}

#[test]
fn acceptance_01_example1_open_rep_reproduced() {
    let started = Instant::now();
    let outcome = reproduce(1, reproduce_budget());
    let elapsed = started.elapsed().as_secs_f64();
    let diffs_ok = ["diff open-rep P1", "diff open-rep P2", "diff open-rep Theta"]
        .iter()
        .all(|name| outcome.stage(name).is_some_and(|s| s.pass));
    let residual_ok = outcome.max_residual <= 1e-8;
    let runtime_ok = elapsed < 5.0;
    let pass = diffs_ok && residual_ok && runtime_ok;
    assert!(
        verdict(
            "1 (example 1 open-loop representation)",
            pass,
            &format!(
                "table diffs ≤ 1e-3: {diffs_ok}, residual {:.2e} ≤ 1e-8: {residual_ok}, \
                 runtime {elapsed:.2}s < 5s: {runtime_ok}",
                outcome.max_residual
            ),
        ),
        "criterion 1 failed"
    );
}

#[test]
fn acceptance_02_example1_closed_nash_reproduced() {
    let outcome = reproduce(1, reproduce_budget());
    let diffs_ok = [
        "diff closed-nash P1",
        "diff closed-nash P2",
        "diff closed-nash Theta",
    ]
    .iter()
    .all(|name| outcome.stage(name).is_some_and(|s| s.pass));
    // Recompute the sign conditions directly at margin −1e-10.
    let model = example_model(1);
    let sol = solve_closed_nash_cares(&model, &SolverOpts::default()).unwrap();
    let sign_ok = (0..3).all(|i| {
        let n11 = model.dynamics.d1[i].transpose() * &sol.p1[i] * &model.dynamics.d1[i]
            + &model.cost1.r11[i];
        let n22 = model.dynamics.d2[i].transpose() * &sol.p2[i] * &model.dynamics.d2[i]
            + &model.cost2.r22[i];
        min_eig_sym(&n11) >= -1e-10 && min_eig_sym(&n22) >= -1e-10
    });
    let residual_ok = outcome.max_residual <= 1e-8;
    let pass = diffs_ok && sign_ok && residual_ok;
    assert!(
        verdict(
            "2 (example 1 closed-loop Nash)",
            pass,
            &format!("table diffs ≤ 1e-3: {diffs_ok}, sign conditions: {sign_ok}, residual ≤ 1e-8: {residual_ok}"),
        ),
        "criterion 2 failed"
    );
}

#[test]
fn acceptance_03_example2_zero_sum_reproduced() {
    let outcome = reproduce(2, reproduce_budget());
    let diffs_ok = ["diff zero-sum P", "diff zero-sum Theta"]
        .iter()
        .all(|name| outcome.stage(name).is_some_and(|s| s.pass));
    let sign_ok = outcome
        .stage("zero-sum sign conditions")
        .is_some_and(|s| s.pass);
    let pass = diffs_ok && sign_ok;
    assert!(
        verdict(
            "3 (example 2 zero-sum closed-loop)",
            pass,
            &format!(
                "table diffs ≤ 1e-3: {diffs_ok} (max diff {:.6}; reference tables carry the \
                 documented defective-coupling inconsistency), sign constraints: {sign_ok}",
                outcome.max_table_diff
            ),
        ),
        "criterion 3 failed (see decisions ledger: reference tables are inconsistent with the stated model)"
    );
}

#[test]
fn acceptance_04_example3_zero_sum_and_proposition_checks() {
    let outcome = reproduce(3, reproduce_budget());
    let diffs_ok = ["diff zero-sum P", "diff zero-sum Theta"]
        .iter()
        .all(|name| outcome.stage(name).is_some_and(|s| s.pass));
    let prop3_ok = outcome
        .stage("convexity-concavity condition")
        .is_some_and(|s| s.pass);
    let outcome2 = reproduce(2, McBudget { paths: 200, ..reproduce_budget() });
    let prop2_fails_as_expected = outcome2
        .stage("convexity-concavity condition")
        .is_some_and(|s| s.pass);
    let pass = diffs_ok && prop3_ok && prop2_fails_as_expected;
    assert!(
        verdict(
            "4 (example 3 zero-sum representation + eigenvalue condition)",
            pass,
            &format!(
                "table diffs ≤ 1e-3: {diffs_ok} (max diff {:.6}; documented reference-table \
                 inconsistency), condition holds at ε=1 for example 3: {prop3_ok}, \
                 fails at ε=1 and over the grid for example 2: {prop2_fails_as_expected}",
                outcome.max_table_diff
            ),
        ),
        "criterion 4 failed (see decisions ledger: reference tables are inconsistent with the stated model)"
    );
}

#[test]
fn acceptance_05_stabilizer_certificates() {
    let mut all_ok = true;
    let mut details = Vec::new();
    let mut check_gain = |name: &str, model: &regime_riccati::model::GameModel, theta: &RegimeFamily| {
        let check = is_stabilizer(&model.dynamics, &model.generator, theta).unwrap();
        let ok = check.spectral.stable && check.dissipativity.stable;
        all_ok &= ok;
        details.push(format!("{name}: {}", if ok { "ok" } else { "FAILED" }));
    };
    let m1 = example_model(1);
    let open = solve_open_rep_cares(&m1, &SolverOpts::default()).unwrap();
    check_gain("ex1 open-rep", &m1, &open.theta);
    let closed = solve_closed_nash_cares(&m1, &SolverOpts::default()).unwrap();
    check_gain("ex1 closed-nash", &m1, &closed.theta_full());
    for id in [2u8, 3u8] {
        let model = example_model(id);
        let sol = solve_zero_sum_care(&model, &SolverOpts::default()).unwrap();
        check_gain(&format!("ex{id} zero-sum"), &model, &sol.theta);
    }
    assert!(
        verdict("5 (stabilizer certificates)", all_ok, &details.join(", ")),
        "criterion 5 failed"
    );
}

#[test]
fn acceptance_06_zero_sum_embedding_consistency() {
    let embedded = example_model(2).as_non_zero_sum();
    let pair = solve_open_rep_cares(&embedded, &SolverOpts::default()).unwrap();
    let anti = pair.p1.max_abs_diff(&pair.p2.neg());
    let pass = anti <= 1e-8;
    assert!(
        verdict(
            "6 (zero-sum / non-zero-sum consistency)",
            pass,
            &format!("‖P₁ + P₂‖_max = {anti:.3e} ≤ 1e-8"),
        ),
        "criterion 6 failed"
    );
}

#[test]
fn acceptance_07_scalar_saddle_oracle() {
    let model = scalar_zero_sum_model();
    let sol = solve_zero_sum_care(&model, &SolverOpts::default()).unwrap();
    let root = 6.0_f64.sqrt() - 2.0;
    let solver_gap = (sol.p[0][(0, 0)] - root).abs();
    let ode = ode_zero_sum(&model, 10.0, 1e-3);
    let ode_gap = (ode[(0, 0)] - root).abs();
    let pass = solver_gap <= 1e-9 && ode_gap <= 1e-9;
    assert!(
        verdict(
            "7 (scalar saddle oracle)",
            pass,
            &format!(
                "P = {:.12} vs −2+√6 (solver gap {solver_gap:.2e}, backward-RDE gap {ode_gap:.2e})",
                sol.p[0][(0, 0)]
            ),
        ),
        "criterion 7 failed"
    );
}

#[test]
fn acceptance_08_monte_carlo_value_checks() {
    let x0 = DVector::from_column_slice(&[1.0, 0.0]);
    let cfg = SimConfig {
        dt: 1e-3,
        horizon: 10.0,
        paths: 10_000,
        seed: 90210,
        antithetic: false,
    };
    let mut all_ok = true;
    let mut details = Vec::new();
    for id in 1..=3u8 {
        let model = example_model(id);
        let (strategy, targets): (StrategyPair, Vec<(usize, f64)>) = match id {
            1 => {
                let sol = solve_closed_nash_cares(&model, &SolverOpts::default()).unwrap();
                let t = vec![
                    (1, value_homogeneous(&sol.p1, &x0, 0)),
                    (2, value_homogeneous(&sol.p2, &x0, 0)),
                ];
                (closed_nash_strategy(&model, &sol).unwrap(), t)
            }
            _ => {
                let sol = solve_zero_sum_care(&model, &SolverOpts::default()).unwrap();
                let t = vec![(1, value_homogeneous(&sol.p, &x0, 0))];
                (zero_sum_strategy(&model, &sol, None).unwrap(), t)
            }
        };
        let started = Instant::now();
        let report = simulate_closed_loop(&model, &strategy, &x0, 0, cfg, false).unwrap();
        let elapsed = started.elapsed().as_secs_f64();
        let runtime_ok = elapsed < 60.0;
        all_ok &= runtime_ok;
        for (player, analytic) in targets {
            let est = report.cost[player - 1];
            let tol = 3.0 * est.std_error + 0.01 * analytic.abs();
            let ok = (est.mean - analytic).abs() <= tol;
            all_ok &= ok;
            details.push(format!(
                "ex{id} J{player}: analytic {analytic:.6}, mc {:.6}±{:.6} ({}; {:.1}s)",
                est.mean,
                est.std_error,
                if ok { "ok" } else { "OFF" },
                elapsed
            ));
        }
    }
    assert!(
        verdict("8 (Monte Carlo value checks)", all_ok, &details.join("; ")),
        "criterion 8 failed"
    );
}

#[test]
fn acceptance_09_stationarity_identity() {
    let x0 = DVector::from_column_slice(&[1.0, 0.0]);
    let cfg = SimConfig {
        dt: 5e-3,
        horizon: 5.0,
        paths: 16,
        seed: 13,
        antithetic: false,
    };
    let mut all_ok = true;
    let mut details = Vec::new();

    let m1 = example_model(1);
    let open = solve_open_rep_cares(&m1, &SolverOpts::default()).unwrap();
    let strat1 = open_rep_strategy(&m1, &open).unwrap();
    let r1 = check_stationarity_residual(
        &m1,
        &CareSolution::OpenRep(open.clone()),
        &strat1,
        None,
        &x0,
        0,
        cfg,
    )
    .unwrap();
    all_ok &= r1 <= 1e-8;
    details.push(format!("ex1 open-rep {r1:.2e}"));

    let closed = solve_closed_nash_cares(&m1, &SolverOpts::default()).unwrap();
    let strat1c = closed_nash_strategy(&m1, &closed).unwrap();
    let r1c = check_stationarity_residual(
        &m1,
        &CareSolution::ClosedNash(closed),
        &strat1c,
        None,
        &x0,
        0,
        cfg,
    )
    .unwrap();
    all_ok &= r1c <= 1e-8;
    details.push(format!("ex1 closed-nash {r1c:.2e}"));

    for id in [2u8, 3u8] {
        let model = example_model(id);
        let sol = solve_zero_sum_care(&model, &SolverOpts::default()).unwrap();
        let strat = zero_sum_strategy(&model, &sol, None).unwrap();
        let r = check_stationarity_residual(
            &model,
            &CareSolution::ZeroSum(sol),
            &strat,
            None,
            &x0,
            0,
            cfg,
        )
        .unwrap();
        all_ok &= r <= 1e-8;
        details.push(format!("ex{id} zero-sum {r:.2e}"));
    }

    // A deliberately perturbed gain must break the identity.
    let mut bumped: Vec<DMatrix<f64>> = strat1.theta.iter().cloned().collect();
    bumped[0][(0, 1)] += 0.1;
    let bumped_strategy = StrategyPair::feedback_only(RegimeFamily::new(bumped).unwrap());
    let r_bump = check_stationarity_residual(
        &m1,
        &CareSolution::OpenRep(open),
        &bumped_strategy,
        None,
        &x0,
        0,
        cfg,
    )
    .unwrap();
    all_ok &= r_bump > 1e-3;
    details.push(format!("perturbed gain {r_bump:.2e} > 1e-3"));

    assert!(
        verdict("9 (stationarity identity)", all_ok, &details.join(", ")),
        "criterion 9 failed"
    );
}

#[test]
fn acceptance_10_property_suites() {
    let mut all_ok = true;
    let mut details = Vec::new();

    // (a) Dissipativity ⇒ spectral stability on 100 randomized systems.
    let mut stream = Stream::new(derive_key(0xACC, &[10]));
    let mut dissipative = 0;
    let mut implication_ok = true;
    for _ in 0..100 {
        let n = 1 + (stream.next_u64() % 3) as usize;
        let l = 1 + (stream.next_u64() % 3) as usize;
        let shift = 0.5 + 2.0 * stream.uniform();
        let a = RegimeFamily::new(
            (0..l)
                .map(|_| {
                    DMatrix::from_fn(n, n, |_, _| stream.normal() * 0.7)
                        - DMatrix::identity(n, n) * shift
                })
                .collect(),
        )
        .unwrap();
        let c = RegimeFamily::new(
            (0..l)
                .map(|_| DMatrix::from_fn(n, n, |_, _| stream.normal() * 0.4))
                .collect(),
        )
        .unwrap();
        let mut pi = DMatrix::zeros(l, l);
        for i in 0..l {
            let mut row_sum = 0.0;
            for j in 0..l {
                if i != j {
                    let r = stream.uniform();
                    pi[(i, j)] = r;
                    row_sum += r;
                }
            }
            pi[(i, i)] = -row_sum;
        }
        let gen = validate_generator(pi).unwrap();
        if dissipativity_check(&a, &c).stable {
            dissipative += 1;
            implication_ok &= lyapunov_spectral_check(&a, &c, &gen).unwrap().stable;
        }
    }
    let part_a = implication_ok && dissipative >= 30;
    all_ok &= part_a;
    details.push(format!(
        "dissipativity⇒spectral on {dissipative}/100 dissipative instances: {part_a}"
    ));

    // (b) Penrose identities on 100 randomized matrices.
    let mut penrose_ok = true;
    for _ in 0..100 {
        let rows = 1 + (stream.next_u64() % 4) as usize;
        let cols = 1 + (stream.next_u64() % 4) as usize;
        let mut m = DMatrix::from_fn(rows, cols, |_, _| stream.normal() * 3.0);
        if stream.uniform() < 0.3 && rows > 1 && cols > 1 {
            let u = m.column(0).into_owned();
            let v = m.row(0).into_owned();
            m = u * v;
        }
        let dag = pinv(&m, PINV_CUTOFF);
        let scale = m.norm().max(1.0);
        penrose_ok &= (&m * &dag * &m - &m).norm() <= 1e-10 * scale
            && (&dag * &m * &dag - &dag).norm() <= 1e-10 * scale.max(dag.norm())
            && ((&m * &dag).transpose() - &m * &dag).norm() <= 1e-10 * scale
            && ((&dag * &m).transpose() - &dag * &m).norm() <= 1e-10 * scale;
    }
    all_ok &= penrose_ok;
    details.push(format!("pinv Penrose ≤ 1e-10 on 100 instances: {penrose_ok}"));

    // (c) Bitwise determinism of solvers and simulations under fixed seeds.
    let model = example_model(2);
    let s1 = solve_zero_sum_care(&model, &SolverOpts::default()).unwrap();
    let s2 = solve_zero_sum_care(&model, &SolverOpts::default()).unwrap();
    let mut det_ok = (0..3).all(|i| {
        s1.p[i].as_slice().iter().map(|v| v.to_bits()).eq(
            s2.p[i].as_slice().iter().map(|v| v.to_bits()),
        )
    });
    let strategy = zero_sum_strategy(&model, &s1, None).unwrap();
    let x0 = DVector::from_column_slice(&[1.0, 0.0]);
    let cfg = SimConfig {
        dt: 2e-3,
        horizon: 2.0,
        paths: 128,
        seed: 3,
        antithetic: true,
    };
    let r1 = simulate_closed_loop_with_threads(&model, &strategy, &x0, 0, cfg, false, 1).unwrap();
    let r2 = simulate_closed_loop_with_threads(&model, &strategy, &x0, 0, cfg, false, 2).unwrap();
    det_ok &= r1.cost[0].mean.to_bits() == r2.cost[0].mean.to_bits()
        && r1.cost[1].std_error.to_bits() == r2.cost[1].std_error.to_bits()
        && r1.l2_norm.mean.to_bits() == r2.l2_norm.mean.to_bits()
        && r1.tail_mass.mean.to_bits() == r2.tail_mass.mean.to_bits();
    all_ok &= det_ok;
    details.push(format!("bitwise determinism (solver + sim across thread counts): {det_ok}"));

    assert!(
        verdict("10 (property suites)", all_ok, &details.join("; ")),
        "criterion 10 failed"
    );
}
