//! Acceptance suite.
//!
//! Each test implements one release criterion end to end and prints a
//! PASS line with the measured numbers (visible with `--nocapture`):
//!
//! 1. every formulation matches the brute-force optimum on random instances,
//! 2. every TSP variant matches the exact tour solver,
//! 3. both lot-sizing models match the dynamic program and the order-network
//!    LP is integral,
//! 4. LP-relaxation dominance of the sequence-variable variants,
//! 5. inequality families never weaken the DL relaxation,
//! 6. solver bound/incumbent/timeout contract,
//! 7. byte-identical verification output across repeated runs,
//! 8. (manual, ignored by default) export recipe for an external solver.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use irpkit::expkit::{verify_matrix, VerifyOptions};
use irpkit::formulations::{
    build_irp, build_tsp, build_wagner_whitin_milp, build_wagner_whitin_sp, CutFamily,
    FormulationSpec, TspBase, TspVariant,
};
use irpkit::instance::{
    dist_from_coords, generate_design2, generate_verify_instance, ScenarioSpec,
};
use irpkit::oracles::{brute_force_irp, held_karp_tsp, wagner_whitin_dp};
use irpkit::solver::{
    compute_gap, lp_gap, solve_lp, solve_mip, solve_mip_traced, LpStatus, MipStatus, SolverConfig,
};

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

/// Criterion 1: for 25 random instances with r in {2,3,4} and N in {2,3},
/// all ten base combinations plus five DL augmentations reproduce the
/// brute-force optimum within 1e-6 relative. Budget: 5 minutes.
#[test]
fn criterion_1_formulation_agreement() {
    let start = Instant::now();
    let opts = VerifyOptions {
        max_r: 4,
        max_n: 3,
        count: 25,
        base_seed: 1,
        time_limit: Duration::from_secs(240),
        include_bektas: true,
        parallel: true,
    };
    let report = verify_matrix(&opts).expect("matrix must run");
    let elapsed = start.elapsed().as_secs_f64();
    let bad: Vec<_> = report.rows.iter().filter(|r| !r.ok).collect();
    assert!(bad.is_empty(), "criterion 1: FAIL — mismatches: {bad:#?}");
    assert!(elapsed < 300.0, "criterion 1: FAIL — took {elapsed:.1}s, budget 300s");
    println!(
        "criterion 1 (formulation agreement): PASS — {} rows, max rel err {:.2e}, {elapsed:.1}s",
        report.rows.len(),
        report.max_rel_err()
    );
}

/// Criterion 2: for 50 random planar instances with 3..=8 nodes, the MIP
/// optimum of every TSP variant equals the exact tour and decodes to one
/// Hamiltonian cycle. Budget: 2 minutes.
#[test]
fn criterion_2_tsp_exactness() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2000);
    let config = SolverConfig::default();
    let mut checked = 0usize;
    for round in 0..50 {
        let n = 3 + round % 6;
        let pts: Vec<(i64, i64)> =
            (0..n).map(|_| (rng.random_range(0..=200), rng.random_range(0..=200))).collect();
        let d = dist_from_coords(&pts);
        let exact = held_karp_tsp(&d).unwrap().cost;
        for variant in TspVariant::exact_five() {
            let (model, index) = build_tsp(&d, &variant).unwrap();
            let res = solve_mip(&model, &config).unwrap();
            assert_eq!(res.status, MipStatus::Optimal, "criterion 2: FAIL — {variant} n={n}");
            let got = res.incumbent.unwrap();
            assert!(
                rel_err(got, exact) <= 1e-6,
                "criterion 2: FAIL — {variant} n={n}: {got} vs {exact}"
            );
            // the arc solution is a single cycle through all nodes
            let values = res.solution.unwrap();
            let mut succ = vec![usize::MAX; n];
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        let id = index.id(irpkit::milp::SemKey::new2(irpkit::milp::Sym::X, i, j));
                        if values[id] > 0.5 {
                            assert_eq!(succ[i], usize::MAX);
                            succ[i] = j;
                        }
                    }
                }
            }
            let mut seen = 1usize;
            let mut cur = succ[0];
            while cur != 0 {
                assert_ne!(cur, usize::MAX, "criterion 2: FAIL — broken cycle");
                seen += 1;
                cur = succ[cur];
            }
            assert_eq!(seen, n, "criterion 2: FAIL — subtour survived in {variant}");
            checked += 1;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 120.0, "criterion 2: FAIL — took {elapsed:.1}s, budget 120s");
    println!("criterion 2 (TSP exactness): PASS — {checked} solves, {elapsed:.1}s");
}

/// Criterion 3: for 200 random demand series with N in 1..=10, the classical
/// MILP optimum, the order-network LP optimum and the dynamic program agree,
/// and the LP solution is integral. Budget: 1 minute.
#[test]
fn criterion_3_inventory_exactness() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3000);
    let config = SolverConfig::default();
    let mut max_err = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(1..=10usize);
        let d: Vec<u64> = (0..n).map(|_| rng.random_range(0..=40u64)).collect();
        let k = [0.0, 8.0, 60.0][rng.random_range(0..3usize)];
        let h = [0.0, 0.3, 1.2][rng.random_range(0..3usize)];
        let v = [0.0, 2.0][rng.random_range(0..2usize)];

        let dp = wagner_whitin_dp(&d, k, h, v).unwrap().cost;

        let (milp, _) = build_wagner_whitin_milp(&d, k, h, v).unwrap();
        let res = solve_mip(&milp, &config).unwrap();
        assert_eq!(res.status, MipStatus::Optimal);
        let cmilp = res.incumbent.unwrap();

        let (sp, _) = build_wagner_whitin_sp(&d, k, h, v).unwrap();
        let lp = solve_lp(&sp).unwrap();
        assert_eq!(lp.status, LpStatus::Optimal);

        max_err = max_err.max(rel_err(cmilp, dp)).max(rel_err(lp.objective, dp));
        assert!(
            rel_err(cmilp, dp) <= 1e-6,
            "criterion 3: FAIL — CMILP {cmilp} vs DP {dp} on d={d:?} k={k} h={h} v={v}"
        );
        assert!(
            rel_err(lp.objective, dp) <= 1e-6,
            "criterion 3: FAIL — SP {} vs DP {dp} on d={d:?} k={k} h={h} v={v}",
            lp.objective
        );
        for w in &lp.values {
            assert!(
                (w - w.round()).abs() <= 1e-6 && (0.0..=1.0 + 1e-6).contains(w),
                "criterion 3: FAIL — fractional order arc {w}"
            );
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "criterion 3: FAIL — took {elapsed:.1}s, budget 60s");
    println!("criterion 3 (inventory exactness): PASS — 200 series, max rel err {max_err:.2e}, {elapsed:.1}s");
}

fn dominance_instances() -> Vec<irpkit::instance::IrpInstance> {
    // 30 instances, r <= 5, N <= 3, brute-force solvable (r*N <= 15)
    (0..30u64)
        .map(|k| {
            let r = 2 + (k % 4) as usize; // 2..=5
            let n = 2 + ((k / 4) % 2) as usize; // 2..=3
            generate_verify_instance(4000 + k, r, n).unwrap()
        })
        .collect()
}

/// Criterion 4: on 30 random instances the MTZ relaxation gap dominates
/// both the 2CLQ-strengthened and the DL gap; whether the latter two agree
/// is reported, not asserted.
#[test]
fn criterion_4_lp_dominance() {
    let start = Instant::now();
    let mut equal_2clq_dl = 0usize;
    let instances = dominance_instances();
    for inst in &instances {
        let optimum = brute_force_irp(inst).unwrap().total_cost;
        let gap = |tsp: TspVariant| {
            let spec = FormulationSpec::new(irpkit::formulations::InventoryVariant::Cmilp, tsp);
            let (model, _) = build_irp(inst, &spec).unwrap();
            lp_gap(&model, optimum).unwrap()
        };
        let mtz = gap(TspVariant::mtz());
        let mtz2 = gap(TspVariant::mtz_2clq());
        let dl = gap(TspVariant::dl());
        assert!(
            mtz >= mtz2 - 1e-9,
            "criterion 4: FAIL — {}: gap(MTZ)={mtz} < gap(MTZ+2CLQ)={mtz2}",
            inst.name
        );
        assert!(
            mtz >= dl - 1e-9,
            "criterion 4: FAIL — {}: gap(MTZ)={mtz} < gap(DL)={dl}",
            inst.name
        );
        if (mtz2 - dl).abs() <= 1e-9 {
            equal_2clq_dl += 1;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    println!(
        "criterion 4 (LP dominance): PASS — 30 instances, gap(MTZ+2CLQ) == gap(DL) on {equal_2clq_dl}/30, {elapsed:.1}s"
    );
}

/// Criterion 5: adding any single inequality family to DL never lowers the
/// LP bound on the criterion-4 instances.
#[test]
fn criterion_5_bektas_tightening() {
    let start = Instant::now();
    let instances = dominance_instances();
    let mut strict = 0usize;
    for inst in &instances {
        let bound = |tsp: TspVariant| {
            let spec = FormulationSpec::new(irpkit::formulations::InventoryVariant::Cmilp, tsp);
            let (model, _) = build_irp(inst, &spec).unwrap();
            let sol = solve_lp(&model.lp_relaxation()).unwrap();
            assert_eq!(sol.status, LpStatus::Optimal);
            sol.objective
        };
        let dl = bound(TspVariant::dl());
        for family in CutFamily::ALL {
            let augmented = bound(TspVariant::with_cuts(TspBase::Dl, [family]));
            assert!(
                augmented >= dl - 1e-9,
                "criterion 5: FAIL — {} on {}: {augmented} < {dl}",
                family.name(),
                inst.name
            );
            if augmented > dl + 1e-9 {
                strict += 1;
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    println!(
        "criterion 5 (inequality tightening): PASS — 150 comparisons, {strict} strictly tighter, {elapsed:.1}s"
    );
}

/// Criterion 6: weak duality holds at every node, timeouts return a sound
/// incumbent/bound pair, and the gap formula is exact on (100, 90).
#[test]
fn criterion_6_solver_contract() {
    let start = Instant::now();
    assert_eq!(compute_gap(100.0, 90.0), 10.0, "criterion 6: FAIL — gap formula");
    assert_eq!(compute_gap(0.0, 0.0), 0.0);

    // weak duality throughout, on models from criteria 1-3
    let inst = generate_verify_instance(1, 4, 3).unwrap();
    for name in ["CMILP+MTZ", "SP+SC", "CMILP+2C"] {
        let spec = FormulationSpec::parse(name).unwrap();
        let (model, _) = build_irp(&inst, &spec).unwrap();
        let mut events = 0usize;
        let res = solve_mip_traced(&model, &SolverConfig::default(), |ev| {
            events += 1;
            if let Some(inc) = ev.incumbent {
                assert!(
                    ev.global_bound <= inc + 1e-6,
                    "criterion 6: FAIL — node {}: bound {} above incumbent {inc}",
                    ev.node,
                    ev.global_bound
                );
            }
        })
        .unwrap();
        assert!(events as u64 >= res.nodes);
        assert_eq!(res.status, MipStatus::Optimal);
        assert!(res.bound <= res.incumbent.unwrap() + 1e-6);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(6000);
    let d: Vec<u64> = (0..8).map(|_| rng.random_range(1..=40u64)).collect();
    let (ww, _) = build_wagner_whitin_milp(&d, 45.0, 0.8, 0.0).unwrap();
    let res = solve_mip(&ww, &SolverConfig::default()).unwrap();
    assert!(res.bound <= res.incumbent.unwrap() + 1e-6);

    // timeout on a criterion-1 instance
    let spec = FormulationSpec::parse("CMILP+MTZ").unwrap();
    let (model, _) = build_irp(&inst, &spec).unwrap();
    let cfg = SolverConfig::default().with_time_limit(Duration::from_secs_f64(0.01));
    let res = solve_mip(&model, &cfg).unwrap();
    assert_eq!(res.status, MipStatus::TimeLimit, "criterion 6: FAIL — expected a timeout");
    assert!(res.nodes >= 1);
    assert!(res.bound.is_finite());
    match res.incumbent {
        Some(inc) => {
            assert!(res.bound <= inc + 1e-6);
            assert_eq!(res.gap_percent, compute_gap(inc, res.bound));
            assert!(res.gap_percent >= 0.0);
        }
        None => assert!(res.gap_percent.is_infinite()),
    }
    let elapsed = start.elapsed().as_secs_f64();
    println!("criterion 6 (solver contract): PASS — {elapsed:.1}s");
}

/// Criterion 7: repeating the criterion-1 matrix with identical seeds
/// produces byte-identical CSV output.
#[test]
fn criterion_7_determinism() {
    let start = Instant::now();
    let opts = VerifyOptions {
        max_r: 4,
        max_n: 3,
        count: 25,
        base_seed: 1,
        time_limit: Duration::from_secs(240),
        include_bektas: true,
        parallel: true,
    };
    let first = verify_matrix(&opts).unwrap().to_csv();
    let second = verify_matrix(&opts).unwrap().to_csv();
    assert_eq!(first, second, "criterion 7: FAIL — runs differ");
    let elapsed = start.elapsed().as_secs_f64();
    println!(
        "criterion 7 (determinism): PASS — {} bytes of CSV identical across runs, {elapsed:.1}s",
        first.len()
    );
}

/// Criterion 8 (manual, not CI-gating): export the scenario-4 and
/// scenario-13 models for an external MILP solver. The expected optima are
/// 103020 and 145080; see the README for the step-by-step recipe.
#[test]
#[ignore = "manual external-solver reproduction; see README"]
fn criterion_8_external_export() {
    let dir = std::env::temp_dir().join("irpkit-external-check");
    std::fs::create_dir_all(&dir).unwrap();
    for (scenario, expected) in [(4u8, 103020.0), (13u8, 145080.0)] {
        let inst = generate_design2(ScenarioSpec::new(scenario).unwrap(), 1).unwrap();
        let spec = FormulationSpec::parse("CMILP+SC").unwrap();
        let (model, _) = build_irp(&inst, &spec).unwrap();
        let lp = dir.join(format!("scenario{scenario}-cmilp-sc.lp"));
        let mps = dir.join(format!("scenario{scenario}-cmilp-sc.mps"));
        model.export_lp(&lp).unwrap();
        model.export_mps(&mps).unwrap();
        println!(
            "criterion 8: wrote {} and {} — external optimum should be {expected}",
            lp.display(),
            mps.display()
        );
    }
    println!("criterion 8 (external check): exported; solve with any MILP solver to compare");
}
