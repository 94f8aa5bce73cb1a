use kawasaki_core::geometry::{lemma7_energy, summarize};
use kawasaki_core::landscape::{barrier, in_b, in_p, in_p1, in_p2, BarrierKind};
use kawasaki_core::model::{derive_constants, gamma_forms, hamiltonian, Configuration, DerivedConstants, ModelParams};
use kawasaki_core::moves::{all_bonds, apply, delta_h, delta_h_by_recomputation, line_activity, Bond};
use num_rational::Rational64;
use proptest::prelude::*;

fn config_strategy(min_l0: usize, max_l0: usize) -> impl Strategy<Value = Configuration> {
    (min_l0..=max_l0, 1u32..=9).prop_flat_map(|(l0, density)| {
        let side = l0 + 2;
        prop::collection::vec(prop::bool::weighted(density as f64 / 10.0), side * side).prop_map(move |bits| {
            let mut c = Configuration::empty(l0);
            for (i, b) in bits.into_iter().enumerate() {
                c.set_idx(i, b);
            }
            c
        })
    })
}

fn small() -> (ModelParams, DerivedConstants) {
    let p = ModelParams::small(1.0);
    let dc = derive_constants(&p, true).unwrap();
    (p, dc)
}

/// Strict, strongly anisotropic parameter sets drawn from a rational grid.
fn strong_params() -> impl Strategy<Value = ModelParams> {
    (1i64..=20, 1i64..=20, 1i64..=99, 4usize..=30).prop_filter_map("not strict strong", |(u2n, extra, frac, l0)| {
        let u2 = Rational64::new(u2n, 4);
        let u1 = u2 * 2 + Rational64::new(extra, 7);
        let delta = u1 + u2 * Rational64::new(frac, 100);
        let p = ModelParams::new(u1, u2, delta, 1.0, l0).ok()?;
        let dc = derive_constants(&p, true).ok()?;
        dc.is_strong().then_some(p)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn delta_h_matches_recomputation(cfg in config_strategy(2, 7), pick in any::<prop::sample::Index>()) {
        let (p, _) = small();
        let p = p.with_l0(cfg.l0());
        let bonds = all_bonds(cfg.l0());
        let b = bonds[pick.index(bonds.len())];
        prop_assert_eq!(delta_h(&cfg, &b, &p), delta_h_by_recomputation(&cfg, &b, &p).unwrap());
    }

    #[test]
    fn particle_number_changes_only_at_the_ring(cfg in config_strategy(2, 7), pick in any::<prop::sample::Index>()) {
        let bonds = all_bonds(cfg.l0());
        let b = bonds[pick.index(bonds.len())];
        let next = apply(&cfg, &b).unwrap();
        if next.particles() != cfg.particles() {
            match b {
                Bond::Exchange { .. } => prop_assert!(false, "exchange changed the particle number"),
                Bond::Create { site, .. } | Bond::Annihilate { site, .. } => prop_assert!(cfg.is_ring(site.0, site.1)),
            }
        }
    }

    #[test]
    fn ds_bookkeeping(cfg in config_strategy(3, 8), pick in any::<prop::sample::Index>()) {
        let exchanges: Vec<Bond> = all_bonds(cfg.l0())
            .into_iter()
            .filter(|b| match *b {
                Bond::Exchange { from, to } => {
                    cfg.is_interior(from.0, from.1)
                        && cfg.is_interior(to.0, to.1)
                        && cfg.get(from.0, from.1) != cfg.get(to.0, to.1)
                }
                _ => false,
            })
            .collect();
        prop_assume!(!exchanges.is_empty());
        let b = exchanges[pick.index(exchanges.len())];
        let report = line_activity(&cfg, &b).unwrap();
        let after = apply(&cfg, &b).unwrap();
        prop_assert_eq!(report.ds(), summarize(&after).s - summarize(&cfg).s);
    }

    #[test]
    fn lemma7_identity(cfg in config_strategy(2, 14)) {
        let (p, _) = small();
        let p = p.with_l0(cfg.l0());
        prop_assert_eq!(lemma7_energy(&cfg, &p), hamiltonian(&cfg, &p));
    }

    #[test]
    fn descriptors_are_consistent(cfg in config_strategy(2, 10)) {
        let g = summarize(&cfg);
        prop_assert!(g.g1p >= 0 && g.g2p >= 0 && g.v >= 0 && g.n >= 0);
        prop_assert_eq!(g.s, g.p1 + g.p2);
        prop_assert_eq!(g.monotone, g.g1p + g.g2p == 0);
    }

    #[test]
    fn transposition_swaps_axes(cfg in config_strategy(2, 10)) {
        let (p, _) = small();
        let p = p.with_l0(cfg.l0());
        let t = cfg.transpose();
        prop_assert_eq!(hamiltonian(&t, &p.transposed()), hamiltonian(&cfg, &p));
        let (g, gt) = (summarize(&cfg), summarize(&t));
        prop_assert_eq!((g.p1, g.g1, g.g1p), (gt.p2, gt.g2, gt.g2p));
        prop_assert_eq!((g.p2, g.g2, g.g2p), (gt.p1, gt.g1, gt.g1p));
        prop_assert_eq!((g.v, g.s, g.n), (gt.v, gt.s, gt.n));
    }

    #[test]
    fn gamma_forms_agree(p in strong_params()) {
        let dc = derive_constants(&p, true).unwrap();
        let (a, b) = gamma_forms(p.u1, p.u2, p.delta, dc.l2star);
        prop_assert_eq!(a, b);
        prop_assert_eq!(a, dc.gamma);
        prop_assert!(dc.vstar < dc.gamma);
    }

    #[test]
    fn full_box_is_below_empty_box(p in strong_params()) {
        let l0 = p.l0.max((((p.u1 + p.u2) / p.eps()).floor().to_integer() + 1) as usize);
        let p = p.with_l0(l0);
        prop_assert!(hamiltonian(&Configuration::full(l0), &p) < Rational64::from(0));
    }
}

#[test]
fn barrier_comparisons_match_their_thresholds() {
    let sets = [
        ModelParams::small(1.0),
        ModelParams::paperlike(1.0),
        ModelParams::new(7.into(), 2.into(), Rational64::new(81, 10), 1.0, 30).unwrap(),
        ModelParams::new(Rational64::new(11, 2), Rational64::new(3, 2), Rational64::new(691, 100), 1.0, 30).unwrap(),
    ];
    for p in sets {
        let dc = derive_constants(&p, true).unwrap();
        let ls = dc.l2star;
        let b = |k, l1, l2| barrier(k, l1, l2, &dc).unwrap();
        for l1 in 2..=30 {
            for l2 in 1..l1 {
                let add_col = b(BarrierKind::AddColumn, l1, l2);
                let rem_col = b(BarrierKind::RemoveColumn, l1, l2);
                let r2c = b(BarrierKind::RowToColumn, l1, l2);
                assert_eq!(rem_col < add_col, l2 < ls, "({l1},{l2})");
                assert_eq!(r2c < add_col, l1 < l2 + ls - 2, "({l1},{l2})");
                assert_eq!(rem_col <= r2c, 2 * l2 - 2 <= l1, "({l1},{l2})");
                assert!(add_col < b(BarrierKind::AddRow, l1, l2));
                assert!(add_col < b(BarrierKind::ColumnToRow, l1, l2));
            }
        }
    }
}

/// Every configuration whose occupied sites lie in a `w x h` block at a fixed
/// corner, optionally with one extra particle at one of `extras`.
fn block_family(l0: usize, x0: usize, y0: usize, w: usize, h: usize, extras: &[(usize, usize)]) -> Vec<Configuration> {
    let mut out = Vec::new();
    for mask in 0u32..1 << (w * h) {
        let mut c = Configuration::empty(l0);
        for k in 0..w * h {
            if mask >> k & 1 == 1 {
                c.set(x0 + k % w, y0 + k / w, true);
            }
        }
        out.push(c.clone());
        for &(x, y) in extras {
            let mut d = c.clone();
            d.set(x, y, true);
            out.push(d);
        }
    }
    out
}

#[test]
fn gate_members_sit_at_the_critical_energy() {
    let (p, dc) = small();
    let (x0, y0) = (4, 4);
    let extras = [(x0 + 2, y0 + 5), (x0 - 2, y0 + 1), (x0 + 7, y0), (1, 1), (0, 6)];
    let mut seen = [0usize; 2];
    for (w, h) in [(5, 3), (4, 3)] {
        for c in block_family(12, x0, y0, w, h, &extras) {
            let p1 = in_p1(&c, &dc).member;
            let p2 = in_p2(&c, &dc).member;
            assert_eq!(in_p(&c, &dc).member, p1 || p2);
            if p1 || p2 {
                assert_eq!(hamiltonian(&c, &p), dc.gamma, "{}", c.to_grid());
            }
            let g = summarize(&c);
            if p1 {
                seen[0] += 1;
                assert_eq!(g.s, dc.sstar);
            }
            if p2 {
                seen[1] += 1;
                assert_eq!(g.s, dc.sstar - 1);
                assert!(in_b(&c, &dc).member, "{}", c.to_grid());
            }
        }
    }
    assert!(seen[0] > 0 && seen[1] > 0, "{seen:?}");
}
