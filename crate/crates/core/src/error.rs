use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("arc {label} appears {count} times (expected 2)")]
    ArcCount { label: i64, count: usize },
    #[error("inconsistent orientation: {0}")]
    Orientation(String),
    #[error("diagram is not planar: {0}")]
    NonPlanar(String),
    #[error("braid letter {letter} out of range for {strands} strands")]
    BraidIndex { letter: i32, strands: usize },
    #[error("state has {got} bits, diagram has {expected} crossings")]
    StateLength { got: usize, expected: usize },
    #[error("budget exceeded: {needed} generators, budget {budget}")]
    Budget { needed: u64, budget: u64 },
    #[error("chain is not a cycle")]
    NotCycle,
    #[error("diagram is not a knot ({0} components)")]
    NotKnot(usize),
    #[error("incompatible input: {0}")]
    Incompatible(String),
    #[error("internal consistency failure: {0}")]
    Inconsistent(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
