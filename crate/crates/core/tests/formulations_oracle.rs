//! Cross-checks between the MILP formulations, the exact oracles and the
//! solver: every subtour variant must reproduce the exact tour, every
//! lot-sizing variant the dynamic program, and the combined models the
//! brute-force plan enumerator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use irpkit::formulations::{
    add_bektas_inequalities, build_irp, build_tsp, build_wagner_whitin_milp,
    build_wagner_whitin_sp, decode_solution, CutFamily, FormulationSpec, TspBase, TspVariant,
};
use irpkit::instance::{dist_from_coords, generate_verify_instance, IrpInstance};
use irpkit::oracles::{brute_force_irp, held_karp_tsp, wagner_whitin_dp};
use irpkit::solver::{solve_lp, solve_mip, LpStatus, MipStatus, SolverConfig};

fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<(i64, i64)> {
    (0..n).map(|_| (rng.random_range(0..=100), rng.random_range(0..=100))).collect()
}

fn mip_optimum(model: &irpkit::milp::Model) -> f64 {
    let res = solve_mip(model, &SolverConfig::default()).unwrap();
    assert_eq!(res.status, MipStatus::Optimal, "solve must finish");
    res.incumbent.unwrap()
}

fn rel_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-6 * (1.0 + a.abs().max(b.abs()))
}

#[test]
fn three_node_tour_is_forced() {
    let d = dist_from_coords(&[(0, 0), (30, 40), (60, 0)]);
    let expect = d[0][1] + d[1][2] + d[2][0];
    for variant in TspVariant::exact_five() {
        let (model, _) = build_tsp(&d, &variant).unwrap();
        assert!(
            rel_close(mip_optimum(&model), expect),
            "variant {variant} missed the unique 3-node tour"
        );
    }
}

#[test]
fn tsp_variants_match_held_karp() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for round in 0..8 {
        let n = 4 + round % 4; // 4..=7
        let d = dist_from_coords(&random_points(&mut rng, n));
        let exact = held_karp_tsp(&d).unwrap().cost;
        for variant in TspVariant::exact_five() {
            let (model, _) = build_tsp(&d, &variant).unwrap();
            let got = mip_optimum(&model);
            assert!(rel_close(got, exact), "n={n} {variant}: {got} vs {exact}");
        }
    }
}

#[test]
fn tsp_asymmetric_matrix_used_as_given() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let n = 5;
    let d: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 0.0 } else { rng.random_range(1.0..20.0) }).collect())
        .collect();
    let exact = held_karp_tsp(&d).unwrap().cost;
    for variant in TspVariant::exact_five() {
        let (model, _) = build_tsp(&d, &variant).unwrap();
        assert!(rel_close(mip_optimum(&model), exact), "{variant} broke on asymmetric data");
    }
}

#[test]
fn cut_augmented_variants_stay_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let d = dist_from_coords(&random_points(&mut rng, 6));
    let exact = held_karp_tsp(&d).unwrap().cost;
    use CutFamily::*;
    for cuts in [
        vec![ThreeClq],
        vec![NonRadical],
        vec![Radical],
        vec![LiftedCircuit],
        vec![TwoPath],
        vec![NonRadical, Radical, TwoPath],
    ] {
        let variant = TspVariant::with_cuts(TspBase::Dl, cuts.iter().copied());
        let (model, _) = build_tsp(&d, &variant).unwrap();
        assert!(rel_close(mip_optimum(&model), exact), "{variant} cut off the optimum");
    }
    // pure inequality-set variants (no DL rows)
    for cuts in [vec![Radical, TwoPath], vec![NonRadical, TwoPath], vec![TwoPath]] {
        let variant = TspVariant::with_cuts(TspBase::Sequencing, cuts.iter().copied());
        let (model, _) = build_tsp(&d, &variant).unwrap();
        assert!(rel_close(mip_optimum(&model), exact), "{variant} is not exact");
    }
}

/// Every integral tour, with sequence values set to the visit positions,
/// satisfies every inequality family.
#[test]
fn all_tours_satisfy_every_family() {
    fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
        if items.len() <= 1 {
            return vec![items.to_vec()];
        }
        let mut out = Vec::new();
        for (k, &head) in items.iter().enumerate() {
            let rest: Vec<usize> = items.iter().enumerate().filter(|&(i, _)| i != k).map(|(_, &v)| v).collect();
            for mut tail in permutations(&rest) {
                tail.insert(0, head);
                out.push(tail);
            }
        }
        out
    }

    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for n in [4usize, 5, 6] {
        let d = dist_from_coords(&random_points(&mut rng, n));
        let variant = TspVariant::with_cuts(
            TspBase::Dl,
            [CutFamily::ThreeClq, CutFamily::NonRadical, CutFamily::Radical, CutFamily::LiftedCircuit, CutFamily::TwoPath],
        );
        let (mut model, index) = build_tsp(&d, &variant).unwrap();
        // 2CLQ rows live in the MTZ+2CLQ base; layer them manually via MTZ
        let (model2, _) = build_tsp(&d, &TspVariant::mtz_2clq()).unwrap();
        assert!(model2.num_constraints() > 0);

        let extra = add_bektas_inequalities(
            &mut model,
            &index,
            &[CutFamily::TwoPath].into_iter().collect(),
            n,
        )
        .unwrap();
        assert!(!extra.is_empty());

        for perm in permutations(&(1..n).collect::<Vec<_>>()) {
            let mut x = vec![0.0; model.num_vars()];
            let key = |i: usize, j: usize| {
                index.id(irpkit::milp::SemKey::new2(irpkit::milp::Sym::X, i, j))
            };
            let ukey = |i: usize| index.id(irpkit::milp::SemKey::new1(irpkit::milp::Sym::U, i));
            let mut prev = 0usize;
            for (pos, &node) in perm.iter().enumerate() {
                x[key(prev, node)] = 1.0;
                x[ukey(node)] = (pos + 1) as f64;
                prev = node;
            }
            x[key(prev, 0)] = 1.0;
            let report = model.check_feasible(&x, 1e-6).unwrap();
            assert!(report.is_feasible(), "tour {perm:?} on n={n}: {report}");
        }
    }
}

#[test]
fn three_node_dl_relaxation_is_already_integral() {
    // symmetric 3-node matrix: both orientations cost the same, so the
    // assignment relaxation with DL rows lands on the tour value directly
    let d = dist_from_coords(&[(0, 0), (40, 10), (15, 35)]);
    let (model, _) = build_tsp(&d, &TspVariant::dl()).unwrap();
    let mip = mip_optimum(&model);
    let lp = solve_lp(&model.lp_relaxation()).unwrap();
    assert_eq!(lp.status, LpStatus::Optimal);
    assert!(rel_close(lp.objective, mip), "LP {} vs MIP {mip}", lp.objective);
}

#[test]
fn standalone_order_network_has_zero_lp_gap() {
    let (model, _) = build_wagner_whitin_sp(&[9, 0, 17, 4], 12.0, 0.7, 0.0).unwrap();
    let dp = wagner_whitin_dp(&[9, 0, 17, 4], 12.0, 0.7, 0.0).unwrap().cost;
    let gap = irpkit::solver::lp_gap(&model, dp).unwrap();
    assert!(gap.abs() < 1e-9, "order network LP gap {gap}");
}

#[test]
fn lp_bound_dominance_on_tsp() {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for _ in 0..5 {
        let d = dist_from_coords(&random_points(&mut rng, 6));
        let bound = |variant: &TspVariant| {
            let (model, _) = build_tsp(&d, variant).unwrap();
            let sol = solve_lp(&model.lp_relaxation()).unwrap();
            assert_eq!(sol.status, LpStatus::Optimal);
            sol.objective
        };
        let mtz = bound(&TspVariant::mtz());
        let mtz2 = bound(&TspVariant::mtz_2clq());
        let dl = bound(&TspVariant::dl());
        assert!(mtz2 >= mtz - 1e-9, "2CLQ must not weaken MTZ: {mtz2} < {mtz}");
        assert!(dl >= mtz - 1e-9, "DL must dominate MTZ: {dl} < {mtz}");
        for cuts in [
            [CutFamily::ThreeClq].as_slice(),
            &[CutFamily::NonRadical],
            &[CutFamily::Radical],
            &[CutFamily::LiftedCircuit],
            &[CutFamily::TwoPath],
        ] {
            let augmented = bound(&TspVariant::with_cuts(TspBase::Dl, cuts.iter().copied()));
            assert!(augmented >= dl - 1e-9, "{cuts:?} lowered the DL bound");
        }
    }
}

#[test]
fn ww_milp_examples_and_dp_agreement() {
    let (model, _) = build_wagner_whitin_milp(&[10, 20], 10.0, 1.0, 0.0).unwrap();
    assert!(rel_close(mip_optimum(&model), 20.0));

    let (model, _) = build_wagner_whitin_milp(&[0, 0, 0], 10.0, 1.0, 0.0).unwrap();
    let res = solve_mip(&model, &SolverConfig::default()).unwrap();
    assert!(rel_close(res.incumbent.unwrap(), 0.0));

    let (model, _) = build_wagner_whitin_milp(&[10, 20], 100.0, 1.0, 0.0).unwrap();
    assert!(rel_close(mip_optimum(&model), 120.0));

    let mut rng = ChaCha8Rng::seed_from_u64(606);
    for _ in 0..30 {
        let n = rng.random_range(1..=8usize);
        let d: Vec<u64> = (0..n).map(|_| rng.random_range(0..=25u64)).collect();
        let k = [0.0, 5.0, 40.0][rng.random_range(0..3usize)];
        let h = [0.0, 0.4, 1.5][rng.random_range(0..3usize)];
        let dp = wagner_whitin_dp(&d, k, h, 0.0).unwrap().cost;
        let (model, _) = build_wagner_whitin_milp(&d, k, h, 0.0).unwrap();
        let got = mip_optimum(&model);
        assert!(rel_close(got, dp), "d={d:?} k={k} h={h}: milp {got} vs dp {dp}");
    }
}

#[test]
fn sp_lp_equals_dp_and_is_integral() {
    let (model, index) = build_wagner_whitin_sp(&[10, 20], 10.0, 1.0, 0.0).unwrap();
    let sol = solve_lp(&model).unwrap();
    assert!(rel_close(sol.objective, 20.0));
    let w12 = index.value(&sol.values, irpkit::milp::SemKey::new2(irpkit::milp::Sym::W, 1, 2));
    let w23 = index.value(&sol.values, irpkit::milp::SemKey::new2(irpkit::milp::Sym::W, 2, 3));
    assert!((w12.unwrap() - 1.0).abs() < 1e-9);
    assert!((w23.unwrap() - 1.0).abs() < 1e-9);

    let (model, index) = build_wagner_whitin_sp(&[5], 7.0, 1.0, 0.0).unwrap();
    let sol = solve_lp(&model).unwrap();
    assert!(rel_close(sol.objective, 7.0));
    assert!(
        (index.value(&sol.values, irpkit::milp::SemKey::new2(irpkit::milp::Sym::W, 1, 2)).unwrap()
            - 1.0)
            .abs()
            < 1e-9
    );

    let mut rng = ChaCha8Rng::seed_from_u64(707);
    for _ in 0..60 {
        let n = rng.random_range(1..=8usize);
        let d: Vec<u64> = (0..n).map(|_| rng.random_range(0..=25u64)).collect();
        let k = [0.0, 5.0, 40.0][rng.random_range(0..3usize)];
        let h = [0.0, 0.4, 1.5][rng.random_range(0..3usize)];
        let v = [0.0, 2.0][rng.random_range(0..2usize)];
        let dp = wagner_whitin_dp(&d, k, h, v).unwrap().cost;
        let (model, _) = build_wagner_whitin_sp(&d, k, h, v).unwrap();
        let sol = solve_lp(&model).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!(rel_close(sol.objective, dp), "d={d:?} k={k} h={h} v={v}: sp {} vs dp {dp}", sol.objective);
        for value in &sol.values {
            assert!(
                (value - value.round()).abs() < 1e-6,
                "fractional arc {value} in the order-network optimum"
            );
        }
    }
}

#[test]
fn irp_single_retailer_reduces_to_lot_sizing() {
    // per-order trip cost folds into the fixed ordering cost
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    for dispatch in [0.0, 12.0] {
        let mut inst = generate_verify_instance(rng.random_range(0..1000), 1, 3).unwrap();
        inst.dispatch = dispatch;
        let k_eff = inst.ordering[0] + 2.0 * inst.dist[0][1] + dispatch;
        let dp = wagner_whitin_dp(&inst.demand_series(1), k_eff, inst.holding[0], 0.0)
            .unwrap()
            .cost;
        for spec in ["CMILP+SC", "SP+SC", "CMILP+MTZ"] {
            let spec = FormulationSpec::parse(spec).unwrap();
            let (model, _) = build_irp(&inst, &spec).unwrap();
            let got = mip_optimum(&model);
            assert!(rel_close(got, dp), "{spec} D={dispatch}: {got} vs {dp}");
        }
    }
}

#[test]
fn irp_zero_demand_costs_nothing() {
    let mut inst = generate_verify_instance(4, 3, 2).unwrap();
    inst.demand = vec![vec![0; 3]; 2];
    for spec in FormulationSpec::base_ten() {
        let (model, _) = build_irp(&inst, &spec).unwrap();
        let res = solve_mip(&model, &SolverConfig::default()).unwrap();
        assert_eq!(res.status, MipStatus::Optimal);
        assert!(res.incumbent.unwrap().abs() < 1e-9, "{spec} charged for an empty plan");
    }
}

#[test]
fn irp_all_specs_agree_with_brute_force() {
    let mut seeds = 9000u64..;
    for (r, n) in [(3usize, 2usize), (2, 3)] {
        let inst = generate_verify_instance(seeds.next().unwrap(), r, n).unwrap();
        let oracle = brute_force_irp(&inst).unwrap().total_cost;
        for spec in FormulationSpec::base_ten() {
            let (model, index) = build_irp(&inst, &spec).unwrap();
            let res = solve_mip(&model, &SolverConfig::default()).unwrap();
            let got = res.incumbent.unwrap();
            assert!(rel_close(got, oracle), "{spec} on r={r},N={n}: {got} vs {oracle}");

            // decoded plan reprices to the incumbent
            let plan = decode_solution(&inst, &spec, &index, res.solution.as_ref().unwrap()).unwrap();
            assert!(
                rel_close(plan.total_cost, got),
                "{spec}: decoded {} vs incumbent {got}",
                plan.total_cost
            );
            check_plan_consistency(&inst, &plan);
        }
    }
}

fn check_plan_consistency(inst: &IrpInstance, plan: &irpkit::oracles::PlanResult) {
    let r = inst.num_retailers;
    let n = inst.num_periods;
    for t in 1..=n {
        let visited: Vec<usize> = (1..=r).filter(|&i| plan.delta[t - 1][i - 1]).collect();
        let route = &plan.routes[t - 1];
        if visited.is_empty() {
            assert!(route.is_empty());
        } else {
            assert_eq!(route[0], 0);
            let mut on_route: Vec<usize> = route[1..].to_vec();
            on_route.sort_unstable();
            assert_eq!(on_route, visited, "period {t} route misses a visited retailer");
        }
    }
    // inventory balance and cost re-addition
    let mut holding = 0.0;
    for i in 1..=r {
        let mut inv = 0.0;
        for t in 1..=n {
            inv += plan.quantities[t - 1][i - 1];
            inv -= inst.demand_at(t, i) as f64;
            assert!(inv >= -1e-6, "stockout at ({t},{i})");
            holding += inst.holding[i - 1] * inv;
        }
        assert!(inv.abs() < 1e-6, "nonzero final inventory for retailer {i}");
    }
    assert!((holding - plan.breakdown.holding).abs() < 1e-6);
    assert!((plan.breakdown.total() - plan.total_cost).abs() < 1e-9);
}

#[test]
fn lp_relaxation_never_exceeds_mip_on_irp() {
    let inst = generate_verify_instance(31, 3, 2).unwrap();
    for spec in FormulationSpec::base_ten() {
        let (model, _) = build_irp(&inst, &spec).unwrap();
        let mip = mip_optimum(&model);
        let lp = solve_lp(&model.lp_relaxation()).unwrap();
        assert!(lp.objective <= mip + 1e-6, "{spec}: LP {} above MIP {mip}", lp.objective);
        let gap = irpkit::solver::lp_gap(&model, mip).unwrap();
        assert!(gap >= -1e-9);
    }
}
