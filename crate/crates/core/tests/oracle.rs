use kawasaki_core::geometry::{summarize, RectBox};
use kawasaki_core::landscape::{in_b, in_p1, in_p2};
use kawasaki_core::model::{derive_constants, hamiltonian, rational_to_f64, Configuration, DerivedConstants, ModelParams};
use kawasaki_core::moves::{apply, enumerate_moves};
use kawasaki_core::oracle::{
    communication_height, gate_witnesses, minimax_by_paths, minimax_by_threshold, scan_boundary_of_b,
    stability_level, verify_gate_structure, FullSpace, ScanLimits, StateSpace, SubSpace, WeightedGraph,
};
use kawasaki_core::refpath::phi_upper_bound;
use kawasaki_core::simulator::transition_probability;
use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small() -> (ModelParams, DerivedConstants) {
    let p = ModelParams::small(1.0);
    let dc = derive_constants(&p, true).unwrap();
    (p, dc)
}

fn scan_window() -> (RectBox, ScanLimits) {
    (RectBox { x0: 4, y0: 4, w: 6, h: 4 }, ScanLimits { max_particles: 14, max_free: 1 })
}

#[test]
fn bottleneck_search_matches_path_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let n = rng.random_range(2..=8);
        let energies: Vec<i64> = (0..n).map(|_| rng.random_range(-5..=5)).collect();
        let edges: Vec<(usize, usize)> =
            (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).filter(|_| rng.random_bool(0.35)).collect();
        let g = WeightedGraph::new(energies.clone(), &edges);
        for a in 0..n {
            for b in 0..n {
                let brute = minimax_by_paths(&g, a, b);
                assert_eq!(communication_height(&g, &a, &b).ok(), brute, "{energies:?} {edges:?} {a}->{b}");
                assert_eq!(minimax_by_threshold(&energies, |u| g.adj[u].clone(), a, b), brute);
            }
        }
    }
}

#[test]
fn full_tiny_box_agrees_with_the_threshold_oracle() {
    let p = ModelParams::small(1.0).with_l0(2);
    let fs = FullSpace::new(&p).unwrap();
    assert_eq!(fs.len(), 1 << 16);
    let zero = fs.encode(&Configuration::empty(2));
    let one = fs.encode(&Configuration::full(2));
    let best = communication_height(&fs, &zero, &one).unwrap();
    let adj = |u: usize| fs.neighbour_codes(u as u32).into_iter().map(|c| c as usize).collect();
    assert_eq!(minimax_by_threshold(fs.energies(), adj, zero as usize, one as usize), Some(best));
    assert_eq!(communication_height(&fs, &zero, &zero).unwrap(), fs.energy(&zero));
}

#[test]
fn stability_levels_on_the_tiny_box() {
    let p = ModelParams::small(1.0).with_l0(2);
    let fs = FullSpace::new(&p).unwrap();
    let s = &fs.scale;
    let mut single = Configuration::empty(2);
    single.set(1, 1, true);
    assert_eq!(stability_level(&fs, &fs.encode(&single)), Some(0));
    assert_eq!(stability_level(&fs, &fs.encode(&Configuration::empty(2))), None);

    let mut max_v = 0;
    for code in 0..fs.len() as u32 {
        let Some(v) = stability_level(&fs, &code) else { continue };
        max_v = max_v.max(v);
        if v >= s.u1 + s.u2 {
            let g = summarize(&fs.decode(code));
            assert_eq!(g.n, 0);
            assert!(g.monotone && g.v == 0 && g.p_min() >= 2, "{}", fs.decode(code).to_grid());
        }
    }
    assert!(max_v <= 2 * s.delta - s.u1);
}

#[test]
fn detailed_balance_on_the_tiny_box() {
    let p = ModelParams::small(1.3).with_l0(2);
    let fs = FullSpace::new(&p).unwrap();
    let report = fs.detailed_balance(p.beta);
    assert!(report.holds(1e-12), "{report:?}");

    // The simulator's transition probabilities satisfy the same identity.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let a = rng.random_range(0..fs.len() as u32);
        let nb = fs.neighbour_codes(a);
        let b = nb[rng.random_range(0..nb.len())];
        let (ca, cb) = (fs.decode(a), fs.decode(b));
        let lhs = transition_probability(&ca, &cb, &p).ln() - transition_probability(&cb, &ca, &p).ln();
        let dh = rational_to_f64(hamiltonian(&cb, &p) - hamiltonian(&ca, &p));
        assert!((lhs + p.beta * dh).abs() < 1e-9);
    }
}

#[test]
fn restricted_height_reaches_gamma() {
    let (p, dc) = small();
    let sub = SubSpace::new(&p, RectBox { x0: 1, y0: 1, w: 5, h: 3 }, 200, 1).with_nucleation();
    let target = Configuration::rectangle(12, 1, 1, 5, 3);
    let phi = communication_height(&sub, &Configuration::empty(12), &target).unwrap();
    assert_eq!(sub.scale.to_rational(phi), dc.gamma);
    assert_eq!(phi_upper_bound(&dc, 12).unwrap(), dc.gamma);
}

#[test]
fn enlarging_the_subspace_never_raises_the_height() {
    let p = ModelParams::small(1.0).with_l0(3);
    let target = Configuration::rectangle(3, 1, 1, 2, 2);
    let empty = Configuration::empty(3);
    let mut last = i64::MAX;
    for (w, h, free) in [(2, 2, 1), (3, 2, 1), (3, 3, 1), (3, 3, 2)] {
        let sub = SubSpace::new(&p, RectBox { x0: 1, y0: 1, w, h }, 9, free).with_nucleation();
        let phi = communication_height(&sub, &empty, &target).unwrap();
        assert!(phi <= last, "{w}x{h}/{free}: {phi} > {last}");
        last = phi;
    }
    let fs = FullSpace::new(&ModelParams::small(1.0).with_l0(2)).unwrap();
    let sub = SubSpace::new(&ModelParams::small(1.0).with_l0(2), RectBox { x0: 1, y0: 1, w: 2, h: 2 }, 4, 1).with_nucleation();
    let (z, f) = (Configuration::empty(2), Configuration::full(2));
    let full = communication_height(&fs, &fs.encode(&z), &fs.encode(&f)).unwrap();
    assert!(full <= communication_height(&sub, &z, &f).unwrap());
}

#[test]
fn boundary_scan_meets_the_reference_bound() {
    let (p, dc) = small();
    let (window, limits) = scan_window();
    let report = scan_boundary_of_b(&p, &dc, window, limits).unwrap();
    assert!(report.passed(), "{report:?}");
    assert_eq!(report.h_min, Some(Rational64::new(63, 5)));
    assert_eq!(report.h_min, Some(phi_upper_bound(&dc, 12).unwrap()));
    assert!(report.minimizers > 0);
    assert_eq!(report.minimizers_not_in_p2, 0);
    assert_eq!(report.minimizers_energy_order_violated, 0);
    assert_eq!(report.clause1_min, None);
    assert_eq!(report.p1_without_continuation, 0);
}

#[test]
fn gate_structure_and_witnesses() {
    let (p, dc) = small();
    let (window, limits) = scan_window();
    let verdict = verify_gate_structure(&p, &dc, window, limits).unwrap();
    assert!(verdict.passed && verdict.witness_p1_ok && verdict.witness_p2_ok);

    let (w1, w2) = gate_witnesses(&dc, 12);
    let g1 = summarize(&w1);
    assert_eq!((g1.p1, g1.p2, g1.v, g1.g1p, g1.g2p, g1.n), (5, 3, 4, 0, 1, 0));
    assert!(in_p1(&w1, &dc).member && in_p2(&w2, &dc).member);
    for m in enumerate_moves(&w1, &p) {
        let next = apply(&w1, &m.bond).unwrap();
        let h = hamiltonian(&next, &p);
        assert!(h > dc.gamma || in_b(&next, &dc).member || next == w1, "{}", next.to_grid());
    }
    let exits_at_gamma = enumerate_moves(&w2, &p).into_iter().any(|m| {
        let next = apply(&w2, &m.bond).unwrap();
        !in_b(&next, &dc).member && hamiltonian(&next, &p).max(dc.gamma) == dc.gamma
    });
    assert!(exits_at_gamma);
}
