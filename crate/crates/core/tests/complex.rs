mod common;

use common::{braid, closure, fixtures_upto};
use kh_core::complex::*;
use kh_core::polynomials::{jones_bracket, unnormalized_from_jones};
use kh_core::resolution::all_zero;
use kh_core::{fixtures, Diagram, Laurent};
use proptest::prelude::*;

fn euler_from_chains(d: &Diagram) -> Laurent {
    let mut l = Laurent::zero();
    for h in 0..=d.n_crossings() {
        for g in generators(d, h).unwrap() {
            let b = g.bigrading(d);
            l.add_term(2 * b.q, if b.t.rem_euclid(2) == 0 { 1 } else { -1 });
        }
    }
    l
}

#[test]
fn gradings_of_extreme_generators() {
    let d = fixtures::diagram("9_42").unwrap();
    assert_eq!(d.counts(), (5, 4));
    // all-zero state, all minus: t = -n_-, q = -loops + n_+ - 2 n_-
    let g = EnhancedState::from_gen(&d, Gen { state: all_zero(&d).bits, plus: 0 }).unwrap();
    let b = g.bigrading(&d);
    assert_eq!((b.t, b.q), (-4, -7));
    assert_eq!(grading(&d, 0, 0, 4), b);
    assert_eq!(plus_count_for(&d, 0, -7, 4), Some(0));
    assert_eq!(plus_count_for(&d, 0, -6, 4), None);
    assert_eq!(plus_count_for(&d, 0, 3, 4), None);
}

#[test]
fn chain_bookkeeping() {
    let g = Gen { state: 0b101, plus: 0b1 };
    let mut c = Chain::from_gen(3, g);
    c.add(g, -1);
    assert!(c.is_zero());
    c.add(g, 2);
    assert_eq!(c.scaled(-3).terms[&g], -6);
    assert_eq!(c.height(), Some(2));
    let mut e = c.clone();
    e.add_chain(&c, -1);
    assert!(e.is_empty());
}

#[test]
fn states_by_height_are_complete() {
    for n in 0..=8 {
        let mut total = 0;
        for h in 0..=n {
            let v = states_of_height(n, h);
            assert!(v.windows(2).all(|w| w[0] < w[1]));
            assert!(v.iter().all(|s| s.count_ones() as usize == h && *s < 1 << n));
            total += v.len();
        }
        assert_eq!(total, 1 << n);
    }
}

#[test]
fn matrices_match_chain_level_maps() {
    for (name, d) in fixtures_upto(6) {
        for r in 0..d.n_crossings() {
            let src = generator_order(&d, r);
            let tgt = generator_order(&d, r + 1);
            let m = differential_matrix(&d, r).unwrap();
            let p = phi_matrix(&d, r).unwrap();
            assert_eq!((m.n_rows(), m.n_cols), (src.len(), tgt.len()), "{name} r={r}");
            assert_eq!(Level::build(&d, r).dimension() as usize, src.len());
            for (i, g) in src.iter().enumerate() {
                let c = Chain::from_gen(d.n_crossings(), *g);
                for (mat, img) in [(&m, apply_d(&c, &d)), (&p, apply_phi(&c, &d))] {
                    let row: Vec<(Gen, i64)> = mat.rows[i].iter().filter(|e| e.1 != 0).map(|&(j, v)| (tgt[j as usize], v)).collect();
                    let want: Vec<(Gen, i64)> = img.terms.into_iter().collect();
                    let mut row = row;
                    row.sort();
                    assert_eq!(row, want, "{name} r={r} gen {g:?}");
                }
            }
        }
    }
}

#[test]
fn euler_characteristic_is_the_jones_polynomial() {
    for (name, d) in fixtures_upto(8) {
        assert_eq!(euler_from_chains(&d), unnormalized_from_jones(&jones_bracket(&d)), "{name}");
    }
}

#[test]
fn edge_signs_anticommute_on_squares() {
    for s in 0..1u64 << 6 {
        for i in 0..6 {
            for j in i + 1..6 {
                if s >> i & 1 == 0 && s >> j & 1 == 0 {
                    let a = edge_sign(s, i) * edge_sign(s | 1 << i, j);
                    let b = edge_sign(s, j) * edge_sign(s | 1 << j, i);
                    assert_eq!(a, -b);
                }
            }
        }
    }
}

fn gens() -> impl Strategy<Value = (kh_core::BraidWord, u64, u64)> {
    braid(4, 7).prop_flat_map(|w| {
        let n = w.letters.len();
        (Just(w), 0..1u64 << n, any::<u64>())
    })
}

fn pick(d: &Diagram, state: u64, plus: u64) -> EnhancedState {
    let g = EnhancedState::from_gen(d, Gen { state, plus: 0 }).unwrap();
    let mask = (1u64 << g.marks.len()) - 1;
    EnhancedState::from_gen(d, Gen { state, plus: plus & mask }).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn d_and_phi_square_to_zero((w, s, p) in gens()) {
        let d = closure(&w);
        let c = pick(&d, s, p).chain();
        prop_assert!(apply_d(&apply_d(&c, &d), &d).is_zero());
        prop_assert!(apply_phi(&apply_phi(&c, &d), &d).is_zero());
        let mut anti = apply_d(&apply_phi(&c, &d), &d);
        anti.add_chain(&apply_phi(&apply_d(&c, &d), &d), 1);
        prop_assert!(anti.is_zero());
        prop_assert!(apply_lee(&apply_lee(&c, &d), &d).is_zero());
    }

    #[test]
    fn maps_shift_bigrading((w, s, p) in gens()) {
        let d = closure(&w);
        let g = pick(&d, s, p);
        let b = g.bigrading(&d);
        for x in apply_d(&g.chain(), &d).gradings(&d) {
            prop_assert_eq!((x.t, x.q), (b.t + 1, b.q));
        }
        for x in apply_phi(&g.chain(), &d).gradings(&d) {
            prop_assert_eq!((x.t, x.q), (b.t + 1, b.q + 4));
        }
    }

    #[test]
    fn q_dims_count_every_generator(w in braid(4, 7), h in 0usize..8) {
        let d = closure(&w);
        let h = h.min(d.n_crossings());
        let lv = Level::build(&d, h);
        let dims = lv.q_dims(&d);
        prop_assert_eq!(dims.values().sum::<u64>(), lv.dimension());
        prop_assert_eq!(generators(&d, h).unwrap().count() as u64, lv.dimension());
        for (&q, &n) in &dims {
            let off = lv.offsets(&d, q);
            prop_assert_eq!(*off.last().unwrap(), n);
        }
    }

    #[test]
    fn euler_matches_bracket_on_closures(w in braid(3, 6)) {
        let d = closure(&w);
        prop_assert_eq!(euler_from_chains(&d), unnormalized_from_jones(&jones_bracket(&d)));
    }
}
