//! Shared generators for the property suites.
#![allow(dead_code)]

use kh_core::{fixtures, BraidWord, Diagram};
use proptest::prelude::*;

/// Braid words on 2..=`max_strands` strands with 1..=`max_len` letters.
pub fn braid(max_strands: usize, max_len: usize) -> impl Strategy<Value = BraidWord> {
    (2..=max_strands).prop_flat_map(move |s| {
        let letter = (1..s as i32, any::<bool>()).prop_map(|(l, neg)| if neg { -l } else { l });
        proptest::collection::vec(letter, 1..=max_len).prop_map(move |ls| BraidWord::new(s, ls).unwrap())
    })
}

pub fn closure(w: &BraidWord) -> Diagram {
    Diagram::from_braid(w).unwrap()
}

/// Bundled diagrams with at most `max` crossings.
pub fn fixtures_upto(max: usize) -> Vec<(&'static str, Diagram)> {
    fixtures::names().map(|n| (n, fixtures::diagram(n).unwrap())).filter(|(_, d)| d.n_crossings() <= max).collect()
}

/// Number of cycles of a permutation.
pub fn cycles(p: &[usize]) -> usize {
    let mut seen = vec![false; p.len()];
    let mut n = 0;
    for i in 0..p.len() {
        if !seen[i] {
            n += 1;
            let mut j = i;
            while !seen[j] {
                seen[j] = true;
                j = p[j];
            }
        }
    }
    n
}
