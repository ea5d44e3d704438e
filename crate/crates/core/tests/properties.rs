use proptest::prelude::*;
use qscale_core::circuit::{
    cancel_adjacent_cnots, cancel_first_layer, closed_form_counts, count_gates, expand_swaps, synthesize_qaoa, Circuit, QaoaAngles,
};
use qscale_core::estimator::{log_fidelity, measurements_upper_bound, NoiseModel};
use qscale_core::fitlab::{design_from_rows, fit_linear_model};
use qscale_core::graphs::{gen_random_regular, parse_graph6, IsingInstance, ProblemGraph};
use qscale_core::hardware::{grid_for, LatticeKind};
use qscale_core::router::{mirror_layers, optimize, swap_lower_bound, verify_routed, RoutingConfig, ROUTING_ANGLES};

fn graph_strategy() -> impl Strategy<Value = ProblemGraph> {
    (2usize..10).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let len = pairs.len();
        proptest::collection::vec(any::<bool>(), len)
            .prop_map(move |keep| ProblemGraph::new(n, pairs.iter().zip(&keep).filter(|(_, &k)| k).map(|(&e, _)| e)).unwrap())
    })
}

fn lattice_strategy() -> impl Strategy<Value = LatticeKind> {
    prop::sample::select(LatticeKind::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn graph6_round_trip(g in graph_strategy()) {
        prop_assert_eq!(parse_graph6(&g.to_graph6().unwrap()).unwrap(), g);
    }

    #[test]
    fn synthesized_counts_match_closed_forms(g in graph_strategy(), p in 0usize..4, field in prop::sample::select(vec![0.0, 0.7])) {
        let inst = IsingInstance::from_graph(&g, 1.0, field);
        let (c, n0) = cancel_first_layer(&synthesize_qaoa(&inst, &QaoaAngles::uniform(p, 0.3, 0.4)));
        let n = g.num_vertices();
        let want = closed_form_counts(n, p, 2.0 * g.num_edges() as f64 / n as f64, inst.eta(), n0).unwrap();
        let got = count_gates(&c);
        prop_assert_eq!((got.n_h, got.n_r, got.n_cnot), (want.n_h, want.n_r, want.n_cnot));
        prop_assert!(n0 <= n / 2);
    }

    #[test]
    fn cancellation_is_idempotent(g in graph_strategy()) {
        let inst = IsingInstance::from_graph(&g, 1.0, 0.0);
        let c = synthesize_qaoa(&inst, &QaoaAngles::uniform(2, 0.3, 0.4));
        let once = cancel_adjacent_cnots(&c);
        prop_assert_eq!(cancel_adjacent_cnots(&once), once.clone());
        let text = once.to_text();
        prop_assert_eq!(Circuit::from_text(&text).unwrap(), once);
    }

    #[test]
    fn fidelity_monotone(n_cnot in 0u32..10_000, extra in 0u32..1000, eps in 0.0f64..0.01) {
        let nm = NoiseModel::from_cnot(eps).unwrap();
        let a = log_fidelity(n_cnot as f64, 10.0, 10.0, &nm).unwrap();
        let b = log_fidelity((n_cnot + extra) as f64, 10.0, 10.0, &nm).unwrap();
        prop_assert!(b <= a);
        let worse = NoiseModel::from_cnot(eps * 1.5).unwrap();
        prop_assert!(log_fidelity(n_cnot as f64, 10.0, 10.0, &worse).unwrap() <= a);
    }

    #[test]
    fn measurements_monotone(f in 0.01f64..0.99, g in 0.01f64..0.99, p in 0.5f64..0.999) {
        let (lo, hi) = if f < g { (f, g) } else { (g, f) };
        prop_assert!(measurements_upper_bound(hi, p).unwrap() <= measurements_upper_bound(lo, p).unwrap());
        prop_assert!(measurements_upper_bound(lo, p).unwrap() >= 1.0);
    }

    #[test]
    fn noiseless_fits_are_exact(a in -5.0f64..5.0, b in -5.0f64..5.0) {
        let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64 * 0.37, 1.0]).collect();
        let y: Vec<f64> = rows.iter().map(|r| a * r[0] + b).collect();
        let f = fit_linear_model(&design_from_rows(&rows).unwrap(), &y).unwrap();
        prop_assert!((f.params[0] - a).abs() < 1e-9 && (f.params[1] - b).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn routing_is_valid(seed in 0u64..1000, half_n in 4usize..10, kind in lattice_strategy()) {
        let n = 2 * half_n;
        let g = gen_random_regular(n, 3, seed).unwrap();
        let hw = grid_for(n, kind);
        let inst = IsingInstance::from_graph(&g, 1.0, 0.0);
        let cfg = RoutingConfig { shuffles: 2, iterations: 3, lookahead: 20, seed, decay: 0.999 };
        let r = optimize(&inst, &hw, &cfg).unwrap();
        let logical = synthesize_qaoa(&inst, &QaoaAngles::uniform(1, ROUTING_ANGLES.0, ROUTING_ANGLES.1));
        prop_assert!(verify_routed(&logical, &r, &hw));
        prop_assert!(r.stats.counts.n_swap >= swap_lower_bound(&g, &hw).unwrap());
        if let Some(sigma) = r.stats.counts.sigma {
            prop_assert!((1.0..=3.0).contains(&sigma));
        }
        prop_assert_eq!(optimize(&inst, &hw, &cfg).unwrap(), r.clone());
        prop_assert_eq!(mirror_layers(&r, 1).n_cnot, r.stats.counts.n_cnot);
    }
}

#[test]
fn single_edge_never_needs_swaps() {
    let g = ProblemGraph::new(2, [(0, 1)]).unwrap();
    let inst = IsingInstance::from_graph(&g, 1.0, 0.0);
    for kind in LatticeKind::ALL {
        let r = optimize(&inst, &grid_for(2, kind), &RoutingConfig { shuffles: 2, iterations: 2, ..RoutingConfig::default() }).unwrap();
        assert_eq!(r.stats.counts.n_swap, 0, "{kind}");
    }
}

#[test]
fn expansion_then_cancellation_keeps_sigma_in_range() {
    let g = gen_random_regular(16, 3, 3).unwrap();
    let hw = grid_for(16, LatticeKind::HeavyHex);
    let inst = IsingInstance::from_graph(&g, 1.0, 0.0);
    let r = optimize(&inst, &hw, &RoutingConfig { shuffles: 3, iterations: 3, ..RoutingConfig::default() }).unwrap();
    let again = cancel_adjacent_cnots(&expand_swaps(&r.circuit));
    assert_eq!(count_gates(&again).n_cnot, r.stats.counts.n_cnot);
    let sigma = r.stats.counts.sigma.unwrap();
    assert!((1.0..=3.0).contains(&sigma), "{sigma}");
}
