use proptest::prelude::*;

use brokenline::ext::{q, qi, Ext};
use brokenline::family::{extract_alpha, fiber_iso, shift_marks};
use brokenline::fiber_product::{config_from_rep, k_of, u_membership};
use brokenline::line::fiber_over;
use brokenline::linalg::{Matrix, NonunitalAlgebra};
use brokenline::order::{enumerate_amalgams, LinOrder, OrderMorphism};
use brokenline::rep::RepPoint;
use brokenline::sheaf::{Factorization, GlobalSheaf};

fn gap() -> impl Strategy<Value = Ext> {
    prop_oneof![3 => (0i64..16).prop_map(|k| Ext::Fin(q(k, 4))), 1 => Just(Ext::PosInf)]
}

fn point(max_len: usize) -> impl Strategy<Value = RepPoint> {
    prop::collection::vec(gap(), 0..max_len).prop_map(|g| RepPoint::from_gaps(g).unwrap())
}

/// A monotone surjection `[n] → [m]` from its step pattern.
fn surjection(n: usize) -> impl Strategy<Value = OrderMorphism> {
    prop::collection::vec(any::<bool>(), n.saturating_sub(1)).prop_map(move |steps| {
        let mut map = vec![0];
        for s in steps {
            map.push(map.last().unwrap() + usize::from(s));
        }
        let m = map.last().unwrap() + 1;
        OrderMorphism::new(LinOrder::standard(n).as_preorder().clone(), LinOrder::standard(m).as_preorder().clone(), map)
            .unwrap()
    })
}

fn small_matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec((-3i64..=3, 1i64..=3), rows * cols).prop_map(move |v| {
        let data = v.chunks(cols).map(|r| r.iter().map(|&(a, b)| q(a, b)).collect()).collect();
        Matrix::from_rows(data).unwrap()
    })
}

proptest! {
    #[test]
    fn gaps_roundtrip(gaps in prop::collection::vec(gap(), 0..6)) {
        let p = RepPoint::from_gaps(gaps.clone()).unwrap();
        prop_assert_eq!(p.gaps(), gaps);
        prop_assert!(p.validate().is_ok());
    }

    #[test]
    fn pullback_is_functorial((f, g, alpha) in (1usize..6).prop_flat_map(surjection).prop_flat_map(|f| {
        let m = f.target().len();
        (Just(f), surjection(m))
    }).prop_flat_map(|(f, g)| {
        let k = g.target().len();
        (Just(f), Just(g), prop::collection::vec(gap(), k - 1).prop_map(|gs| RepPoint::from_gaps(gs).unwrap()))
    })) {
        let two_steps = alpha.pullback(&g).unwrap().pullback(&f).unwrap();
        let one_step = alpha.pullback(&f.then(&g).unwrap()).unwrap();
        prop_assert_eq!(&two_steps, &one_step);
        prop_assert!(one_step.validate().is_ok());
        let id = OrderMorphism::identity(alpha.base());
        prop_assert_eq!(alpha.pullback(&id).unwrap(), alpha);
    }

    #[test]
    fn fiber_then_extract(alpha in point(6)) {
        let fiber = fiber_over(&alpha).unwrap();
        prop_assert_eq!(fiber.line.components(), alpha.stratum_of().unwrap().num_classes());
        prop_assert_eq!(extract_alpha(alpha.base(), &fiber).unwrap(), alpha);
    }

    #[test]
    fn translation_equivariance(alpha in point(6), shifts in prop::collection::vec(-10i64..10, 6)) {
        let fiber = fiber_over(&alpha).unwrap();
        let m = fiber.line.components();
        let s: Vec<_> = shifts[..m].iter().map(|&k| qi(k)).collect();
        let moved = shift_marks(&fiber, &s);
        prop_assert_eq!(extract_alpha(alpha.base(), &moved).unwrap(), alpha);
        let iso = fiber_iso(&fiber, &moved).unwrap();
        prop_assert_eq!(iso.shifts(), &s[..]);
    }

    #[test]
    fn glue_restricts(a in point(4), b in point(4)) {
        let g = a.glue(&b);
        prop_assert!(g.validate().is_ok());
        let mut expected = a.gaps();
        expected.push(Ext::PosInf);
        expected.extend(b.gaps());
        prop_assert_eq!(g.gaps(), expected);
        prop_assert_eq!(fiber_over(&g).unwrap().line.components(),
            fiber_over(&a).unwrap().line.components() + fiber_over(&b).unwrap().line.components());
    }

    #[test]
    fn u_sets_shrink_upward(p in 1usize..4, q_ in 1usize..4, seed in any::<u64>()) {
        use rand::{SeedableRng, seq::SliceRandom};
        let (left, right) = (LinOrder::standard(p), LinOrder::standard(q_));
        let poset = enumerate_amalgams(&left, &right);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let k = poset.elements.choose(&mut rng).unwrap();
        let gaps: Vec<Ext> = k.preorder().enumeration().windows(2)
            .map(|w| if k.preorder().equiv(w[0], w[1]) { Ext::Fin(qi(1)) } else { Ext::PosInf })
            .collect();
        let alpha = RepPoint::from_gaps_on(k.preorder().clone(), gaps).unwrap();
        let config = config_from_rep(k, &alpha).unwrap();
        let ks = k_of(&left, &right, &config).unwrap();
        for (a, ka) in poset.elements.iter().enumerate() {
            for (b, kb) in poset.elements.iter().enumerate() {
                if poset.le[a][b] && u_membership(&ks, kb).unwrap() {
                    prop_assert!(u_membership(&ks, ka).unwrap());
                }
            }
        }
    }

    #[test]
    fn amalgam_join_laws(p in 1usize..4, q_ in 1usize..4, i in any::<prop::sample::Index>(), j in any::<prop::sample::Index>()) {
        let poset = enumerate_amalgams(&LinOrder::standard(p), &LinOrder::standard(q_));
        let (a, b) = (i.index(poset.len()), j.index(poset.len()));
        prop_assert_eq!(poset.join(a, b), poset.join(b, a));
        prop_assert_eq!(poset.join(a, a), a);
        let c = poset.join(a, b);
        prop_assert!(poset.le[a][c] && poset.le[b][c]);
    }

    #[test]
    fn mul_kron_matches_kron(
        (m, a, b) in (1usize..4, 1usize..4, 1usize..3, 1usize..3, 1usize..4).prop_flat_map(|(ar, br, ac, bc, r)| {
            (small_matrix(r, ar * br), small_matrix(ar, ac), small_matrix(br, bc))
        })
    ) {
        prop_assert_eq!(m.mul_kron(&a, &b), m.mul(&a.kron(&b)));
    }

    #[test]
    fn kron_mixed_product(a in small_matrix(2, 2), b in small_matrix(2, 3), c in small_matrix(2, 2), d in small_matrix(3, 2)) {
        prop_assert_eq!(a.kron(&b).mul(&c.kron(&d)), a.mul(&c).kron(&b.mul(&d)));
    }

    #[test]
    fn inverse_when_invertible(a in small_matrix(3, 3)) {
        match a.inverse() {
            Ok(inv) => {
                prop_assert!(a.is_invertible());
                prop_assert!(a.mul(&inv).is_identity());
            }
            Err(_) => prop_assert!(!a.is_invertible()),
        }
    }

    #[test]
    fn sheaf_maps_compose(n in 2usize..6, f in any::<prop::sample::Index>(), g in any::<prop::sample::Index>()) {
        use brokenline::order::enumerate_surjections;
        let sheaf = GlobalSheaf::from_algebra(&NonunitalAlgebra::nilpotent3(), 4);
        let src = LinOrder::standard(n);
        let all: Vec<OrderMorphism> = (1..=n).flat_map(|m| enumerate_surjections(&src, &LinOrder::standard(m))).collect();
        let f = &all[f.index(all.len())];
        let tgt = LinOrder::from_preorder(f.target().clone()).unwrap();
        let next: Vec<OrderMorphism> = (1..=tgt.len()).flat_map(|m| enumerate_surjections(&tgt, &LinOrder::standard(m))).collect();
        let g = &next[g.index(next.len())];
        let fg = f.then(g).unwrap();
        let lhs = sheaf.apply_map(g.map(), Factorization::Rightmost).unwrap()
            .mul(&sheaf.apply_map(f.map(), Factorization::Leftmost).unwrap());
        prop_assert_eq!(lhs, sheaf.apply_map(fg.map(), Factorization::Rightmost).unwrap());
    }
}

#[test]
fn wide_entries_fall_back_to_exact_arithmetic() {
    let big = Matrix::from_rows(vec![vec![qi(1 << 62), q(1, 3)], vec![qi(-(1 << 62)), q(5, 7)]]).unwrap();
    let sq = big.mul(&big);
    assert_eq!(sq.get(0, 0), &(qi(1 << 62) * qi(1 << 62) - qi(1 << 62) * q(1, 3)));
    assert_eq!(big.mul_kron(&Matrix::identity(2), &Matrix::identity(1)), big);
}
