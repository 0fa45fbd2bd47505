use afv_core::allocator::{
    allocate, baseline_all, baseline_manual, fap_exact, fap_greedy, Assignment, FapInstance,
};
use afv_core::model::FunctionType;
use proptest::prelude::*;
use std::collections::BTreeMap;

const EPS: f64 = 1e-9;

fn arb_instance(max_devices: usize, max_requests: usize) -> impl Strategy<Value = FapInstance> {
    (1..=max_devices, 1..=max_requests).prop_flat_map(|(nd, nr)| {
        (
            prop::collection::vec(0.0..50.0f64, nd),
            prop::collection::vec(prop::collection::vec(0.0..20.0f64, nd), nr),
            prop::collection::vec(prop::collection::vec(prop::bool::weighted(0.7), nd), nr),
            prop::collection::vec(0..nd, nr),
            prop::collection::vec(any::<bool>(), nr),
        )
            .prop_map(move |(f, mut c, mut m, origins, local_free)| {
                for r in 0..nr {
                    // Every request keeps at least its origin.
                    m[r][origins[r]] = true;
                    if local_free[r] {
                        c[r][origins[r]] = 0.0;
                    }
                }
                let mut inst = FapInstance::dense(f, c);
                inst.mappable = m;
                inst.origins = origins.iter().map(|&d| Some(d as u64)).collect();
                inst
            })
    })
}

/// Cheapest of all |D|^|R| feasible mappings.
fn brute_force(inst: &FapInstance) -> f64 {
    let (nd, nr) = (inst.n_devices(), inst.n_requests());
    let mut best = f64::INFINITY;
    let mut mapping = vec![0usize; nr];
    loop {
        if (0..nr).all(|r| inst.mappable[r][mapping[r]]) {
            best = best.min(inst.cost_of(&mapping));
        }
        let mut i = 0;
        loop {
            if i == nr {
                return best;
            }
            mapping[i] += 1;
            if mapping[i] < nd {
                break;
            }
            mapping[i] = 0;
            i += 1;
        }
    }
}

fn block_diagonal(a: &FapInstance, b: &FapInstance) -> FapInstance {
    let (na, nb) = (a.n_devices(), b.n_devices());
    let mut impl_cost = a.impl_cost.clone();
    impl_cost.extend(&b.impl_cost);
    let mut comm = Vec::new();
    let mut mappable = Vec::new();
    for r in 0..a.n_requests() {
        let mut row = a.comm_cost[r].clone();
        row.extend(std::iter::repeat_n(0.0, nb));
        comm.push(row);
        let mut m = a.mappable[r].clone();
        m.extend(std::iter::repeat_n(false, nb));
        mappable.push(m);
    }
    for r in 0..b.n_requests() {
        let mut row = vec![0.0; na];
        row.extend(&b.comm_cost[r]);
        comm.push(row);
        let mut m = vec![false; na];
        m.extend(&b.mappable[r]);
        mappable.push(m);
    }
    let mut inst = FapInstance::dense(impl_cost, comm);
    inst.mappable = mappable;
    inst
}

fn check(inst: &FapInstance, a: &Assignment) {
    a.check_feasible(inst)
        .unwrap_or_else(|v| panic!("infeasible {v:?} for {inst:?}"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn every_strategy_is_feasible_and_exact_is_lowest(
        inst in arb_instance(6, 10),
        seed in any::<u64>(),
    ) {
        let exact = fap_exact(&inst).unwrap();
        let greedy = fap_greedy(&inst).unwrap();
        let all = baseline_all(&inst).unwrap();
        let manual = baseline_manual(&inst, seed).unwrap();
        for a in [&exact, &greedy, &all, &manual] {
            check(&inst, a);
        }
        let tol = EPS * exact.total_cost.max(1.0);
        prop_assert!(exact.total_cost <= greedy.total_cost + tol);
        prop_assert!(exact.total_cost <= all.total_cost + tol);
        prop_assert!(exact.total_cost <= manual.total_cost + tol);
    }

    #[test]
    fn exact_matches_exhaustive_mapping_search(inst in arb_instance(4, 5)) {
        let exact = fap_exact(&inst).unwrap();
        let oracle = brute_force(&inst);
        prop_assert!((exact.total_cost - oracle).abs() <= EPS * oracle.max(1.0));
    }

    #[test]
    fn greedy_choice_is_scale_invariant(inst in arb_instance(6, 10), k in 0.01..1000.0f64) {
        let base = fap_greedy(&inst).unwrap();
        let scaled = fap_greedy(&inst.scaled(k)).unwrap();
        prop_assert_eq!(&base.assigned, &scaled.assigned);
        prop_assert_eq!(&base.open, &scaled.open);
    }

    #[test]
    fn greedy_is_deterministic(inst in arb_instance(6, 10)) {
        prop_assert_eq!(fap_greedy(&inst).unwrap(), fap_greedy(&inst.clone()).unwrap());
    }

    #[test]
    fn per_type_solutions_compose(a in arb_instance(4, 6), b in arb_instance(4, 6)) {
        let mut map = BTreeMap::new();
        map.insert(FunctionType::Accelerometer, a.clone());
        map.insert(FunctionType::Gyroscope, b.clone());
        let split = allocate(&map).unwrap();
        let joint = fap_greedy(&block_diagonal(&a, &b)).unwrap();
        let tol = EPS * joint.total_cost.max(1.0);
        prop_assert!((split.total_cost() - joint.total_cost).abs() <= tol);
        let ga = fap_greedy(&a).unwrap();
        prop_assert_eq!(&joint.assigned[..a.n_requests()], &ga.assigned[..]);
    }
}

#[test]
fn worked_example_reaches_the_optimum() {
    let inst = FapInstance::dense(
        vec![10.0, 12.0],
        vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![1.0, 5.0]],
    );
    let greedy = fap_greedy(&inst).unwrap();
    assert_eq!(greedy.assigned, vec![0, 0, 0]);
    assert_eq!(greedy.total_cost, 13.0);
    assert_eq!(fap_exact(&inst).unwrap().total_cost, 13.0);
}

#[test]
fn local_execution_opens_every_origin() {
    let mut inst = FapInstance::dense(
        vec![10.0; 3],
        vec![
            vec![0.0, 4.0, 4.0],
            vec![4.0, 0.0, 4.0],
            vec![4.0, 4.0, 0.0],
        ],
    );
    inst.origins = vec![Some(0), Some(1), Some(2)];
    assert_eq!(baseline_all(&inst).unwrap().total_cost, 30.0);

    let mut shared = FapInstance::dense(vec![10.0, 10.0], vec![vec![0.0, 3.0], vec![0.0, 3.0]]);
    shared.origins = vec![Some(0), Some(0)];
    assert_eq!(baseline_all(&shared).unwrap().total_cost, 10.0);
}

#[test]
fn unmappable_origin_falls_back_to_cheapest() {
    let mut inst = FapInstance::dense(vec![1.0, 2.0, 3.0], vec![vec![0.0, 5.0, 2.0]]);
    inst.origins = vec![Some(0)];
    inst.mappable = vec![vec![false, true, true]];
    let all = baseline_all(&inst).unwrap();
    assert_eq!(all.assigned, vec![2]);
    assert!(all.total_cost >= fap_exact(&inst).unwrap().total_cost);
}

#[test]
fn manual_spreads_over_devices_and_never_beats_exact() {
    let inst = FapInstance::dense(
        vec![3.0, 8.0, 13.0, 21.0, 34.0],
        vec![vec![1.0, 2.0, 3.0, 4.0, 5.0]; 4],
    );
    let exact = fap_exact(&inst).unwrap().total_cost;
    let costs: Vec<f64> = (0..1000)
        .map(|s| baseline_manual(&inst, s).unwrap().total_cost)
        .collect();
    let mean = costs.iter().sum::<f64>() / costs.len() as f64;
    let var = costs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (costs.len() - 1) as f64;
    assert!(mean >= exact);
    assert!(var.sqrt() > 0.0);
    assert!(costs.iter().all(|&c| c >= exact));
    for s in 0..50 {
        let a = baseline_manual(&inst, s).unwrap();
        assert_eq!(a.open.iter().filter(|&&o| o).count(), 1);
        assert_eq!(a, baseline_manual(&inst, s).unwrap());
    }
}

#[test]
fn single_device_strategies_agree() {
    let inst = FapInstance::dense(vec![7.0], vec![vec![1.0], vec![2.0]]);
    let exact = fap_exact(&inst).unwrap();
    assert_eq!(fap_greedy(&inst).unwrap(), exact);
    assert_eq!(baseline_manual(&inst, 9).unwrap(), exact);
    assert_eq!(exact.total_cost, 10.0);
}

#[test]
fn instances_round_trip_through_json() {
    let inst = FapInstance::dense(vec![1.5, 2.0], vec![vec![0.0, 1.0]]);
    let text = serde_json::to_string(&inst).unwrap();
    assert_eq!(serde_json::from_str::<FapInstance>(&text).unwrap(), inst);
}
