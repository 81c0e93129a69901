//! State cycles: detection, the classification conditions for nontrivial
//! classes, enumeration, and the sign relation between cycles that differ in
//! one even 1-block component.

use std::fmt;
use std::ops::RangeInclusive;

use crate::complex::{Chain, EnhancedState, Mark};
use crate::diagram::Diagram;
use crate::error::{Error, Result};
use crate::homology::{is_boundary, s_invariant};
use crate::par;
use crate::resolution::{is_zero_merging, resolve, seifert_state, BlockComponent, State, TracedState};

/// A state cycle needs a 0-merging state with every 0-tracing loop marked minus.
pub fn is_state_cycle(a: &EnhancedState) -> bool {
    let ts = &a.traced;
    if !is_zero_merging(ts) {
        return false;
    }
    let z = ts.zero_tracing();
    (0..ts.n_loops).all(|l| !z[l] || a.marks[l] == Mark::Minus)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    S1,
    S2,
    L1,
    L2,
    L3,
    L4,
}

impl Rule {
    pub const ALL: [Rule; 6] = [Rule::S1, Rule::S2, Rule::L1, Rule::L2, Rule::L3, Rule::L4];
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// What made a rule fail.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    /// Crossing index of the offending trace.
    Trace(usize),
    Loop(u32),
    LoopPair(u32, u32),
    /// Loops of the offending 1-block component.
    Component(Vec<u32>),
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Trace(i) => write!(f, "trace {i}"),
            Witness::Loop(l) => write!(f, "loop {l}"),
            Witness::LoopPair(a, b) => write!(f, "loops {a},{b}"),
            Witness::Component(ls) => {
                let s: Vec<String> = ls.iter().map(|l| l.to_string()).collect();
                write!(f, "component {{{}}}", s.join(","))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Flag {
    pub rule: Rule,
    pub pass: bool,
    pub witness: Option<Witness>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassificationReport {
    pub flags: Vec<Flag>,
    pub overall: bool,
}

impl ClassificationReport {
    pub fn flag(&self, r: Rule) -> &Flag {
        self.flags.iter().find(|f| f.rule == r).expect("every rule is reported")
    }
    pub fn passes(&self, r: Rule) -> bool {
        self.flag(r).pass
    }
    pub fn failed(&self) -> Vec<Rule> {
        self.flags.iter().filter(|f| !f.pass).map(|f| f.rule).collect()
    }
}

fn flag(rule: Rule, witness: Option<Witness>) -> Flag {
    Flag { rule, pass: witness.is_none(), witness }
}

/// Evaluates S1 through L4 on a state cycle.
pub fn classify(a: &EnhancedState) -> Result<ClassificationReport> {
    if !is_state_cycle(a) {
        return Err(Error::NotCycle);
    }
    let ts = &a.traced;
    let minus = |l: u32| a.marks[l as usize] == Mark::Minus;
    let block = ts.one_block();
    let mut in_block = vec![false; ts.n_loops];
    for &l in &block.loops {
        in_block[l as usize] = true;
    }

    let s1 = ts.traces.iter().position(|t| t.bit == 0 && !t.is_merge()).map(Witness::Trace);
    let s2 = ts
        .traces
        .iter()
        .position(|t| t.bit == 1 && !t.is_merge() && in_block[t.loops.0 as usize])
        .map(Witness::Trace);
    let z = ts.zero_tracing();
    let l1 = (0..ts.n_loops as u32).find(|&l| z[l as usize] && !minus(l)).map(Witness::Loop);
    let l2 = one_trace_only_pair(ts, &minus).map(|(x, y)| Witness::LoopPair(x, y));
    let l3 = block
        .components
        .iter()
        .find(|c| !c.even && c.loops.iter().any(|&l| minus(l)))
        .map(|c| Witness::Component(c.loops.clone()));
    let l4 = block
        .components
        .iter()
        .find(|c| c.even && c.loops.iter().filter(|&&l| minus(l)).count() > 1)
        .map(|c| Witness::Component(c.loops.clone()));

    let flags = vec![flag(Rule::S1, s1), flag(Rule::S2, s2), flag(Rule::L1, l1), flag(Rule::L2, l2), flag(Rule::L3, l3), flag(Rule::L4, l4)];
    let overall = flags.iter().all(|f| f.pass);
    Ok(ClassificationReport { flags, overall })
}

/// First pair of distinct minus loops joined by at least one trace, all of
/// them 1-traces.
fn one_trace_only_pair(ts: &TracedState, minus: &impl Fn(u32) -> bool) -> Option<(u32, u32)> {
    let mut seen: std::collections::BTreeMap<(u32, u32), (bool, bool)> = Default::default();
    for t in ts.traces.iter().filter(|t| t.is_merge()) {
        let key = (t.loops.0.min(t.loops.1), t.loops.0.max(t.loops.1));
        let e = seen.entry(key).or_default();
        if t.bit == 0 {
            e.0 = true;
        } else {
            e.1 = true;
        }
    }
    seen.into_iter().find(|&((x, y), (zero, one))| one && !zero && minus(x) && minus(y)).map(|(k, _)| k)
}

/// Markings of a 0-merging state allowed by the classification: 0-tracing
/// loops minus, odd components all plus, even components all plus or one
/// minus, untraced loops free. S2 and L2 are left to `classify`.
fn classified_markings(ts: &TracedState) -> Vec<Vec<Mark>> {
    let z = ts.zero_tracing();
    let o = ts.one_tracing();
    let block = ts.one_block();
    let mut base = vec![Mark::Plus; ts.n_loops];
    for l in 0..ts.n_loops {
        if z[l] {
            base[l] = Mark::Minus;
        }
    }
    let untraced: Vec<usize> = (0..ts.n_loops).filter(|&l| !z[l] && !o[l]).collect();
    let mut out = vec![base];
    for BlockComponent { loops, even } in &block.components {
        if !even {
            continue;
        }
        let mut next = Vec::with_capacity(out.len() * (loops.len() + 1));
        for m in &out {
            next.push(m.clone());
            for &l in loops {
                let mut v = m.clone();
                v[l as usize] = Mark::Minus;
                next.push(v);
            }
        }
        out = next;
    }
    for &l in &untraced {
        let mut next = Vec::with_capacity(out.len() * 2);
        for m in out {
            let mut v = m.clone();
            v[l] = Mark::Minus;
            next.push(m);
            next.push(v);
        }
        out = next;
    }
    out
}

fn all_markings(ts: &TracedState) -> Vec<Vec<Mark>> {
    let z = ts.zero_tracing();
    let free: Vec<usize> = (0..ts.n_loops).filter(|&l| !z[l]).collect();
    (0..1u64 << free.len())
        .map(|m| {
            let mut v = vec![Mark::Minus; ts.n_loops];
            for (k, &l) in free.iter().enumerate() {
                if m >> k & 1 == 1 {
                    v[l] = Mark::Plus;
                }
            }
            v
        })
        .collect()
}

/// All state cycles on states whose height lies in `heights`, ordered by
/// state then marking. With `only_classified`, keeps those passing every rule.
/// Fails once more than `budget` cycles would be produced.
pub fn enumerate_state_cycles(d: &Diagram, heights: RangeInclusive<usize>, only_classified: bool, budget: u64) -> Result<Vec<EnhancedState>> {
    let n = d.n_crossings();
    if n > 30 {
        return Err(Error::Budget { needed: 1 << n.min(63), budget });
    }
    let states: Vec<u64> = (0..1u64 << n).filter(|s| heights.contains(&(s.count_ones() as usize))).collect();
    let per_state: Vec<Result<Vec<EnhancedState>>> = par::map(&states, |&s| {
        let ts = resolve(d, State::new(s, n))?;
        if !is_zero_merging(&ts) {
            return Ok(Vec::new());
        }
        let free = ts.zero_tracing().iter().filter(|z| !**z).count();
        if free > 24 {
            return Err(Error::Budget { needed: 1 << free, budget });
        }
        let marks = if only_classified { classified_markings(&ts) } else { all_markings(&ts) };
        let mut out = Vec::with_capacity(marks.len());
        for m in marks {
            let a = EnhancedState::new(ts.clone(), m)?;
            if !only_classified || classify(&a)?.overall {
                out.push(a);
            }
        }
        out.sort_by_key(|a| a.gen());
        Ok(out)
    });
    let mut out = Vec::new();
    for r in per_state {
        out.extend(r?);
        if out.len() as u64 > budget {
            return Err(Error::Budget { needed: out.len() as u64, budget });
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SignRelation {
    Equal,
    Negated,
    Inequivalent,
}

impl fmt::Display for SignRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SignRelation::Equal => "equal",
            SignRelation::Negated => "negated",
            SignRelation::Inequivalent => "inequivalent",
        })
    }
}

/// Compares two state cycles on one state whose markings differ only in
/// which loop of a single even 1-block component is minus.
pub fn sign_change_equivalence(ai: &EnhancedState, aj: &EnhancedState, d: &Diagram) -> Result<SignRelation> {
    let shape = |msg: &str| Error::Incompatible(msg.to_string());
    if ai.traced.state != aj.traced.state || ai.marks.len() != aj.marks.len() {
        return Err(shape("cycles live on different states"));
    }
    if !is_state_cycle(ai) || !is_state_cycle(aj) {
        return Err(Error::NotCycle);
    }
    if ai.marks == aj.marks {
        return Ok(SignRelation::Equal);
    }
    let diff: Vec<u32> = (0..ai.marks.len() as u32).filter(|&l| ai.marks[l as usize] != aj.marks[l as usize]).collect();
    let [x, y] = diff[..] else {
        return Err(shape("markings must differ in exactly two loops"));
    };
    let block = ai.traced.one_block();
    let comp = block
        .components
        .iter()
        .find(|c| c.loops.contains(&x))
        .filter(|c| c.even && c.loops.contains(&y))
        .ok_or_else(|| shape("loops are not in one even 1-block component"))?;
    for a in [ai, aj] {
        if comp.loops.iter().filter(|&&l| a.marks[l as usize] == Mark::Minus).count() != 1 {
            return Err(shape("component must carry exactly one minus loop"));
        }
    }
    let (ci, cj) = (ai.chain(), aj.chain());
    let mut diff = ci.clone();
    diff.add_chain(&cj, -1);
    if is_boundary(&diff, d)? {
        return Ok(SignRelation::Equal);
    }
    let mut sum = ci;
    sum.add_chain(&cj, 1);
    if is_boundary(&sum, d)? {
        return Ok(SignRelation::Negated);
    }
    Ok(SignRelation::Inequivalent)
}

/// Oriented resolution of a braid closure with every loop marked minus.
pub fn plamenevskaya_class(d: &Diagram) -> Result<EnhancedState> {
    if d.braid().is_none() {
        return Err(Error::Invalid("diagram is not a braid closure".into()));
    }
    let ts = resolve(d, seifert_state(d))?;
    let marks = vec![Mark::Minus; ts.n_loops];
    EnhancedState::new(ts, marks)
}

/// Nontriviality shortcut for Seifert-state cycles: the 1-block is empty or a
/// single plus loop, and the quantum grading equals `s - 1`.
pub fn s_singleloop_criterion(a: &EnhancedState, d: &Diagram) -> Result<bool> {
    if a.traced.state != seifert_state(d) {
        return Err(Error::Incompatible("cycle is not on the Seifert state".into()));
    }
    if !is_state_cycle(a) {
        return Err(Error::NotCycle);
    }
    let block = a.traced.one_block();
    let shape_ok = match block.loops[..] {
        [] => true,
        [l] => a.marks[l as usize] == Mark::Plus,
        _ => false,
    };
    if !shape_ok {
        return Ok(false);
    }
    let s = s_invariant(d)?;
    Ok(a.bigrading(d).q == s - 1)
}

/// The Seifert-state cycle with 0-tracing loops minus and all others plus.
pub fn seifert_cycle(d: &Diagram) -> Result<EnhancedState> {
    let ts = resolve(d, seifert_state(d))?;
    let z = ts.zero_tracing();
    let marks = z.iter().map(|&b| if b { Mark::Minus } else { Mark::Plus }).collect();
    EnhancedState::new(ts, marks)
}

/// The all-0 state with every loop minus.
pub fn alpha_zero(d: &Diagram) -> Result<EnhancedState> {
    let ts = resolve(d, crate::resolution::all_zero(d))?;
    let marks = vec![Mark::Minus; ts.n_loops];
    EnhancedState::new(ts, marks)
}

/// Chain of a state cycle, checked to be a cycle.
pub fn cycle_chain(a: &EnhancedState, d: &Diagram) -> Result<Chain> {
    let c = a.chain();
    if !crate::complex::apply_d(&c, d).is_zero() {
        return Err(Error::NotCycle);
    }
    Ok(c)
}
