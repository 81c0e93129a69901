mod common;

use common::{braid, closure, fixtures_upto};
use kh_core::cobordism::*;
use kh_core::complex::{generator_order, Chain};
use kh_core::{fixtures, Diagram};
use proptest::prelude::*;

fn is_identity(f: &ChainMap) -> bool {
    let d = &f.source;
    (0..=d.n_crossings()).all(|h| {
        generator_order(d, h).into_iter().all(|g| {
            let c = Chain::from_gen(d.n_crossings(), g);
            f.apply(&c) == c
        })
    })
}

fn is_zero(f: &ChainMap) -> bool {
    let d = &f.source;
    (0..=d.n_crossings()).all(|h| generator_order(d, h).into_iter().all(|g| f.apply(&Chain::from_gen(d.n_crossings(), g)).is_zero()))
}

fn same_action(f: &ChainMap, g: &ChainMap) -> bool {
    let d = &f.source;
    (0..=d.n_crossings()).all(|h| {
        generator_order(d, h).into_iter().all(|x| {
            let c = Chain::from_gen(d.n_crossings(), x);
            f.apply(&c) == g.apply(&c)
        })
    })
}

/// Every move constructible on `d` from arc and crossing ids.
fn moves(d: &Diagram) -> Vec<ElementaryMove> {
    let arcs = d.n_arcs() as u32;
    let n = d.n_crossings();
    let mut out = Vec::new();
    if let Ok(m) = birth(d) {
        let circle = *m.target.free_loops().last().unwrap();
        out.push(death(&m.target, circle).unwrap());
        out.push(m);
    }
    for &a in d.free_loops() {
        out.push(death(d, a).unwrap());
    }
    for a in 0..arcs {
        for sign in [1, -1] {
            for side in [false, true] {
                if let Ok(m) = r1_intro(d, a, sign, side) {
                    out.push(r1_remove(&m.target, n).unwrap());
                    out.push(m);
                }
            }
        }
        for b in 0..arcs {
            if let Ok(m) = saddle(d, a, b) {
                out.push(m);
            }
            for over in [true, false] {
                if let Ok(m) = r2_intro_parallel(d, a, b, over) {
                    out.push(r2_cancel(&m.target, n, n + 1).unwrap());
                    out.push(m);
                }
            }
        }
    }
    for p in 0..n {
        if let Ok(m) = r1_remove(d, p) {
            out.push(m);
        }
        for q in 0..n {
            if let Ok(m) = r2_cancel(d, p, q) {
                out.push(m);
            }
        }
    }
    out
}

#[test]
fn every_elementary_map_commutes_with_d() {
    let mut kinds = std::collections::BTreeSet::new();
    for (name, d) in fixtures_upto(5) {
        for m in moves(&d) {
            let line = m.script_line().to_string();
            kinds.insert(m.kind.to_string());
            let expect = match m.kind {
                MoveKind::Birth | MoveKind::Death => 1,
                MoveKind::Saddle => -1,
                _ => 0,
            };
            assert_eq!(m.q_shift(), expect);
            let f = elementary_map(m);
            assert!(f.commutes_with_d().unwrap(), "{name}: {line}");
        }
    }
    for k in ["birth", "death", "saddle", "r1+intro", "r1-intro", "r1+remove", "r1-remove", "r2intro", "r2cancel"] {
        assert!(kinds.contains(k), "no {k} move exercised");
    }
}

#[test]
fn kink_intro_then_removal_is_identity() {
    for (name, d) in fixtures_upto(5) {
        for a in 0..d.n_arcs() as u32 {
            for sign in [1, -1] {
                for side in [false, true] {
                    let Ok(m) = r1_intro(&d, a, sign, side) else { continue };
                    let back = r1_remove(&m.target, d.n_crossings()).unwrap();
                    assert_eq!(back.target, d, "{name}");
                    let f = compose(vec![elementary_map(m), elementary_map(back)]).unwrap();
                    assert!(is_identity(&f), "{name} arc {a} sign {sign} side {side}");
                }
            }
        }
    }
}

#[test]
fn r2_intro_then_cancel_is_identity() {
    for (name, d) in fixtures_upto(4) {
        let n = d.n_crossings();
        for a in 0..d.n_arcs() as u32 {
            for b in 0..d.n_arcs() as u32 {
                for over in [true, false] {
                    let Ok(m) = r2_intro_parallel(&d, a, b, over) else { continue };
                    let back = r2_cancel(&m.target, n, n + 1).unwrap();
                    assert_eq!(back.target, d, "{name}");
                    let f = compose(vec![elementary_map(m), elementary_map(back)]).unwrap();
                    assert!(is_identity(&f), "{name} {a} {b} {over}");
                }
            }
        }
    }
}

#[test]
fn birth_then_death_is_a_sphere() {
    for (_, d) in fixtures_upto(4) {
        let b = birth(&d).unwrap();
        let circle = *b.target.free_loops().last().unwrap();
        let k = death(&b.target, circle).unwrap();
        let f = compose(vec![elementary_map(b), elementary_map(k)]).unwrap();
        assert_eq!(f.q_shift, 2);
        // a closed sphere evaluates to zero
        assert!(is_zero(&f));
    }
}

#[test]
fn script_round_trip() {
    let d = fixtures::diagram("4_1").unwrap();
    let mut maps = Vec::new();
    let mut cur = d.clone();
    let m = r1_intro(&cur, 1, 1, false).unwrap();
    cur = m.target.clone();
    maps.push(elementary_map(m));
    let m = birth(&cur).unwrap();
    cur = m.target.clone();
    maps.push(elementary_map(m));
    let c = *cur.free_loops().last().unwrap();
    let m = death(&cur, c).unwrap();
    cur = m.target.clone();
    maps.push(elementary_map(m));
    let m = r1_remove(&cur, cur.n_crossings() - 1).unwrap();
    maps.push(elementary_map(m));
    let f = compose(maps).unwrap();
    let text = f.script();
    let g = run_script(&d, &text).unwrap();
    assert_eq!(g.target, f.target);
    assert_eq!(g.q_shift, f.q_shift);
    assert!(same_action(&f, &g));
    assert!(is_zero(&g));
}

#[test]
fn script_syntax() {
    let d = fixtures::diagram("3_1").unwrap();
    let id = run_script(&d, "# nothing\n\n").unwrap();
    assert!(is_identity(&id));
    assert!(run_script(&d, "frobnicate 1").is_err());
    assert!(run_script(&d, "death 0").is_err());
    assert!(run_script(&d, "r1remove 0").is_err());
    let g = run_script(&d, "unkink 0").unwrap();
    assert_eq!(g.target.n_crossings(), 2);
    assert_eq!(g.q_shift, -1);
}

#[test]
fn compose_checks_endpoints() {
    let d = fixtures::diagram("3_1").unwrap();
    assert!(compose(Vec::new()).is_err());
    let a = elementary_map(birth(&d).unwrap());
    let b = elementary_map(birth(&d).unwrap());
    assert!(compose(vec![a, b]).is_err());
}

#[test]
fn crossing_removal_needs_a_positive_crossing() {
    let d = fixtures::diagram("4_1").unwrap();
    let (pos, neg): (Vec<usize>, Vec<usize>) = (0..4).partition(|&i| d.crossing(i).sign > 0);
    for c in pos {
        let f = positive_crossing_removal(&d, c).unwrap();
        assert_eq!(f.target.n_crossings(), 3);
        assert!(f.commutes_with_d().unwrap());
    }
    for c in neg {
        assert!(positive_crossing_removal(&d, c).is_err());
    }
}

#[test]
fn projection_verdicts() {
    let d = fixtures::diagram("3_1").unwrap();
    let id = ChainMap::identity(&d);
    let a = kh_core::statecycle::alpha_zero(&d).unwrap().chain();
    assert_eq!(verify_projection(&id, &a, &a).unwrap(), Projection::Plus);
    assert_eq!(verify_projection(&id, &a, &a.scaled(-1)).unwrap(), Projection::Minus);
    let mut other = a.clone();
    other.add_chain(&a, 1);
    assert_eq!(verify_projection(&id, &a, &other).unwrap(), Projection::Fail);
    assert!(verify_projection(&id, &a, &Chain::zero(3)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn maps_on_closures_commute(w in braid(3, 5), pick in any::<prop::sample::Index>()) {
        let d = closure(&w);
        let all = moves(&d);
        prop_assume!(!all.is_empty());
        let m = all[pick.index(all.len())].clone();
        let line = m.script_line().to_string();
        prop_assert!(elementary_map(m).commutes_with_d().unwrap(), "{}", line);
    }

    #[test]
    fn scripts_replay(w in braid(3, 5), a in any::<prop::sample::Index>(), sign in any::<bool>(), side in any::<bool>()) {
        let d = closure(&w);
        let arc = a.index(d.n_arcs()) as u32;
        let m = r1_intro(&d, arc, if sign { 1 } else { -1 }, side).unwrap();
        let f = compose(vec![elementary_map(m.clone()), elementary_map(r1_remove(&m.target, d.n_crossings()).unwrap())]).unwrap();
        let g = run_script(&d, &f.script()).unwrap();
        prop_assert!(same_action(&f, &g));
        prop_assert!(is_identity(&g));
    }
}
