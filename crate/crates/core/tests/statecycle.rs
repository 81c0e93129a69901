mod common;

use common::{braid, closure, fixtures_upto};
use kh_core::complex::{apply_d, generators, EnhancedState, Mark};
use kh_core::homology::{is_nontrivial_class, s_invariant};
use kh_core::resolution::{resolve, seifert_state};
use kh_core::statecycle::*;
use kh_core::{fixtures, Error, State};
use proptest::prelude::*;

fn brute_force_cycles(d: &kh_core::Diagram) -> Vec<EnhancedState> {
    let mut out = Vec::new();
    for h in 0..=d.n_crossings() {
        for g in generators(d, h).unwrap() {
            if apply_d(&g.chain(), d).is_zero() {
                out.push(g);
            }
        }
    }
    out.sort_by_key(|a| a.gen());
    out
}

#[test]
fn enumeration_matches_brute_force() {
    for (name, d) in fixtures_upto(6) {
        let mut got = enumerate_state_cycles(&d, 0..=d.n_crossings(), false, u64::MAX).unwrap();
        got.sort_by_key(|a| a.gen());
        let want = brute_force_cycles(&d);
        assert_eq!(got.iter().map(|a| a.gen()).collect::<Vec<_>>(), want.iter().map(|a| a.gen()).collect::<Vec<_>>(), "{name}");
        for a in &got {
            assert!(is_state_cycle(a));
        }
    }
}

#[test]
fn classified_enumeration_is_the_passing_subset() {
    for (name, d) in fixtures_upto(7) {
        let all = enumerate_state_cycles(&d, 0..=d.n_crossings(), false, u64::MAX).unwrap();
        let mut want: Vec<_> = all.into_iter().filter(|a| classify(a).unwrap().overall).map(|a| a.gen()).collect();
        want.sort();
        let mut got: Vec<_> = enumerate_state_cycles(&d, 0..=d.n_crossings(), true, u64::MAX).unwrap().into_iter().map(|a| a.gen()).collect();
        got.sort();
        assert_eq!(got, want, "{name}");
    }
}

#[test]
fn classification_soundness_by_exhaustion() {
    let mut fails = 0;
    for (name, d) in fixtures_upto(7) {
        for a in enumerate_state_cycles(&d, 0..=d.n_crossings(), false, u64::MAX).unwrap() {
            let rep = classify(&a).unwrap();
            assert_eq!(rep.overall, rep.failed().is_empty());
            if !rep.overall {
                fails += 1;
                assert!(!is_nontrivial_class(&a.chain(), &d).unwrap(), "{name} {} {} fails {:?}", a.traced.state, a.marks_string(), rep.failed());
            }
        }
    }
    assert!(fails > 0);
}

#[test]
fn witnesses_name_the_failure() {
    for (_, d) in fixtures_upto(6) {
        for a in enumerate_state_cycles(&d, 0..=d.n_crossings(), false, u64::MAX).unwrap() {
            let rep = classify(&a).unwrap();
            for f in &rep.flags {
                assert_eq!(f.pass, f.witness.is_none());
            }
            assert_eq!(rep.flags.len(), Rule::ALL.len());
        }
    }
}

#[test]
fn nine_42_cycles() {
    let d = fixtures::diagram("9_42").unwrap();
    let a0 = alpha_zero(&d).unwrap();
    assert!(classify(&a0).unwrap().overall);
    let s = seifert_cycle(&d).unwrap();
    assert!(classify(&s).unwrap().overall);
    assert_eq!(s.marks_string().matches('+').count(), 1);
    assert!(s_singleloop_criterion(&s, &d).unwrap());
    assert!(is_nontrivial_class(&cycle_chain(&s, &d).unwrap(), &d).unwrap());
    let found = enumerate_state_cycles(&d, 0..=9, true, 1 << 20).unwrap();
    assert!(found.iter().any(|a| a.gen() == a0.gen()));
    assert!(found.iter().any(|a| a.gen() == s.gen()));
}

#[test]
fn non_cycles_are_rejected() {
    let d = fixtures::diagram("3_1").unwrap();
    let ts = resolve(&d, State::new(0, 3)).unwrap();
    let plus = EnhancedState::new(ts.clone(), vec![Mark::Plus; ts.n_loops]).unwrap();
    assert!(!is_state_cycle(&plus));
    assert!(matches!(classify(&plus), Err(Error::NotCycle)));
    assert!(matches!(cycle_chain(&plus, &d), Err(Error::NotCycle)));
    assert!(EnhancedState::new(ts, vec![Mark::Minus]).is_err());
}

#[test]
fn budget_stops_enumeration() {
    let d = fixtures::diagram("7_4").unwrap();
    assert!(matches!(enumerate_state_cycles(&d, 0..=7, false, 1), Err(Error::Budget { .. })));
}

#[test]
fn sign_change_on_even_components() {
    let mut cases = 0;
    for (name, d) in fixtures_upto(7) {
        for a in enumerate_state_cycles(&d, 0..=d.n_crossings(), true, u64::MAX).unwrap() {
            for comp in a.traced.one_block().components.iter().filter(|c| c.even && c.loops.len() > 1) {
                let minus: Vec<u32> = comp.loops.iter().copied().filter(|&l| a.marks[l as usize] == Mark::Minus).collect();
                let [m] = minus[..] else { continue };
                for &l in comp.loops.iter().filter(|&&l| l != m) {
                    let mut marks = a.marks.clone();
                    marks.swap(l as usize, m as usize);
                    let b = EnhancedState::new(a.traced.clone(), marks).unwrap();
                    let rel = sign_change_equivalence(&a, &b, &d).unwrap();
                    assert!(matches!(rel, SignRelation::Equal | SignRelation::Negated), "{name}: {rel}");
                    cases += 1;
                }
            }
        }
    }
    assert!(cases > 0);
}

#[test]
fn sign_change_shape_errors() {
    let d = fixtures::diagram("9_42").unwrap();
    let a0 = alpha_zero(&d).unwrap();
    let s = seifert_cycle(&d).unwrap();
    assert!(matches!(sign_change_equivalence(&a0, &s, &d), Err(Error::Incompatible(_))));
    assert_eq!(sign_change_equivalence(&a0, &a0, &d).unwrap(), SignRelation::Equal);
}

#[test]
fn single_loop_criterion_needs_the_seifert_state() {
    let d = fixtures::diagram("9_42").unwrap();
    let a0 = alpha_zero(&d).unwrap();
    assert_ne!(a0.traced.state, seifert_state(&d));
    assert!(s_singleloop_criterion(&a0, &d).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn plamenevskaya_class_is_a_cycle(w in braid(4, 8)) {
        let d = closure(&w);
        let p = plamenevskaya_class(&d).unwrap();
        prop_assert!(is_state_cycle(&p));
        prop_assert!(apply_d(&p.chain(), &d).is_zero());
        let b = p.bigrading(&d);
        // self-linking number sl = writhe - strands
        prop_assert_eq!(b.q, d.writhe() - w.strands as i64);
        prop_assert_eq!(b.t, 0);
    }

    #[test]
    fn seifert_cycle_grading(w in braid(4, 8)) {
        let d = closure(&w);
        let s = seifert_cycle(&d).unwrap();
        prop_assert!(is_state_cycle(&s));
        prop_assert_eq!(s.bigrading(&d).t, 0);
        if d.n_components() == 1 && s_singleloop_criterion(&s, &d).unwrap() {
            prop_assert!(is_nontrivial_class(&s.chain(), &d).unwrap());
            prop_assert_eq!(s.bigrading(&d).q, s_invariant(&d).unwrap() - 1);
        }
    }

    #[test]
    fn enumerated_cycles_are_cycles(w in braid(3, 6)) {
        let d = closure(&w);
        for a in enumerate_state_cycles(&d, 0..=d.n_crossings(), false, u64::MAX).unwrap() {
            prop_assert!(apply_d(&a.chain(), &d).is_zero());
        }
    }
}
