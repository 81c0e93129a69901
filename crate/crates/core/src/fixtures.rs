//! Bundled knot fixtures: PD codes, reference Jones data, braid words.

use crate::diagram::{BraidWord, Diagram};
use crate::error::{Error, Result};
use crate::polynomials::Laurent;

macro_rules! pd {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../../../fixtures/", $name, ".pd")))),*]
    };
}

/// `(name, PD text)` for every bundled diagram.
pub const PD_FIXTURES: &[(&str, &str)] = pd!(
    "unknot", "3_1", "4_1", "5_1", "5_2", "6_1", "6_2", "6_3", "7_1", "7_2", "7_3", "7_4", "7_5", "7_6", "7_7", "8_19",
    "8_20", "9_41", "9_42",
);

pub const JONES_TABLE: &str = include_str!("../../../fixtures/knotinfo_jones.tsv");

pub fn names() -> impl Iterator<Item = &'static str> {
    PD_FIXTURES.iter().map(|(n, _)| *n)
}

pub fn pd_text(name: &str) -> Result<&'static str> {
    PD_FIXTURES.iter().find(|(n, _)| *n == name).map(|(_, t)| *t).ok_or_else(|| Error::Invalid(format!("unknown fixture {name}")))
}

pub fn diagram(name: &str) -> Result<Diagram> {
    Diagram::parse_pd(pd_text(name)?)
}

/// Reference `(s, V)` for a tabulated knot; V in the same variable and
/// doubled-exponent storage as [`crate::polynomials::jones_bracket`].
pub fn reference(name: &str) -> Option<(i64, Laurent)> {
    for line in JONES_TABLE.lines() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() == 3 && f[0] == name {
            let s = f[1].parse().ok()?;
            let mut v = Laurent::zero();
            for pair in f[2].split(',') {
                let (e, c) = pair.split_once(':')?;
                v.add_term(2 * e.parse::<i64>().ok()?, c.parse().ok()?);
            }
            return Some((s, v));
        }
    }
    None
}

/// Braid words used for Reidemeister-equivalent diagram pairs.
pub fn braid(name: &str) -> Result<BraidWord> {
    match name {
        "3_1" => BraidWord::new(2, vec![1, 1, 1]),
        "4_1" => BraidWord::new(3, vec![1, -2, 1, -2]),
        "6_3" => BraidWord::new(3, vec![1, 1, -2, 1, -2, -2]),
        "unknot" => BraidWord::new(2, vec![1]),
        "hopf" => BraidWord::new(2, vec![1, 1]),
        "t24" => BraidWord::new(2, vec![1, 1, 1, 1]),
        "neg_trefoil" => BraidWord::new(2, vec![-1, -1, -1]),
        _ => Err(Error::Invalid(format!("no braid word for {name}"))),
    }
}
