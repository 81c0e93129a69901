//! States, loop tracing and trace classification.

use std::fmt;

use crate::diagram::{ArcId, Diagram};
use crate::error::{Error, Result};
use crate::uf::UnionFind;

/// One smoothing choice per crossing; bit i belongs to crossing i.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State {
    pub bits: u64,
    pub n: u8,
}

impl State {
    pub fn new(bits: u64, n: usize) -> State {
        assert!(n <= 64, "states support at most 64 crossings");
        let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        assert!(bits & !mask == 0, "bits beyond crossing count");
        State { bits, n: n as u8 }
    }

    pub fn parse(s: &str) -> Result<State> {
        let s = s.trim();
        if s.len() > 64 {
            return Err(Error::Parse("state longer than 64 bits".into()));
        }
        let mut bits = 0u64;
        for (i, ch) in s.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => bits |= 1 << i,
                _ => return Err(Error::Parse(format!("bad state character '{ch}'"))),
            }
        }
        Ok(State::new(bits, s.len()))
    }

    #[inline]
    pub fn bit(&self, i: usize) -> u8 {
        ((self.bits >> i) & 1) as u8
    }
    pub fn height(&self) -> usize {
        self.bits.count_ones() as usize
    }
    pub fn len(&self) -> usize {
        self.n as usize
    }
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n as usize {
            f.write_str(if self.bit(i) == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TraceKind {
    Merge,
    Pinch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Trace {
    pub loops: (u32, u32),
    pub bit: u8,
}

impl Trace {
    pub fn kind(&self) -> TraceKind {
        if self.loops.0 == self.loops.1 {
            TraceKind::Pinch
        } else {
            TraceKind::Merge
        }
    }
    pub fn is_merge(&self) -> bool {
        self.loops.0 != self.loops.1
    }
    pub fn touches(&self, l: u32) -> bool {
        self.loops.0 == l || self.loops.1 == l
    }
}

/// Arcs joined by the smoothing of a crossing: bit 0 joins slots (0,1),(2,3);
/// bit 1 joins (0,3),(1,2).
#[inline]
pub fn smoothing_pairs(slots: &[ArcId; 4], bit: u8) -> [(ArcId, ArcId); 2] {
    if bit == 0 {
        [(slots[0], slots[1]), (slots[2], slots[3])]
    } else {
        [(slots[0], slots[3]), (slots[1], slots[2])]
    }
}

/// Labels arcs by loop, loops numbered in order of their least arc.
/// Returns the loop count. `out` is resized to the arc count.
pub fn label_loops(d: &Diagram, bits: u64, uf: &mut UnionFind, out: &mut Vec<u32>) -> usize {
    let n = d.n_arcs();
    uf.reset(n);
    for (i, c) in d.crossings().iter().enumerate() {
        for (a, b) in smoothing_pairs(&c.slots, ((bits >> i) & 1) as u8) {
            uf.union(a as usize, b as usize);
        }
    }
    out.clear();
    out.resize(n, u32::MAX);
    let mut root_label = vec![u32::MAX; n];
    let mut next = 0u32;
    for a in 0..n {
        let r = uf.find(a);
        if root_label[r] == u32::MAX {
            root_label[r] = next;
            next += 1;
        }
        out[a] = root_label[r];
    }
    next as usize
}

/// A state with its loops and the trace of every crossing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TracedState {
    pub state: State,
    pub arc_loop: Vec<u32>,
    pub n_loops: usize,
    pub traces: Vec<Trace>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockComponent {
    pub loops: Vec<u32>,
    pub even: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OneBlock {
    pub loops: Vec<u32>,
    pub components: Vec<BlockComponent>,
}

pub fn resolve(d: &Diagram, s: State) -> Result<TracedState> {
    if s.len() != d.n_crossings() {
        return Err(Error::StateLength { got: s.len(), expected: d.n_crossings() });
    }
    let mut uf = UnionFind::new(d.n_arcs());
    let mut lab = Vec::new();
    let n_loops = label_loops(d, s.bits, &mut uf, &mut lab);
    let traces = d
        .crossings()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let b = s.bit(i);
            let [(x, _), (y, _)] = smoothing_pairs(&c.slots, b);
            Trace { loops: (lab[x as usize], lab[y as usize]), bit: b }
        })
        .collect();
    Ok(TracedState { state: s, arc_loop: lab, n_loops, traces })
}

pub fn all_zero(d: &Diagram) -> State {
    State::new(0, d.n_crossings())
}

pub fn all_one(d: &Diagram) -> State {
    let n = d.n_crossings();
    State::new(if n == 64 { u64::MAX } else { (1u64 << n) - 1 }, n)
}

/// Oriented smoothing: positive crossings 0-smoothed, negative 1-smoothed.
pub fn seifert_state(d: &Diagram) -> State {
    let mut bits = 0u64;
    for (i, c) in d.crossings().iter().enumerate() {
        if c.sign < 0 {
            bits |= 1 << i;
        }
    }
    State::new(bits, d.n_crossings())
}

impl TracedState {
    pub fn loops(&self) -> Vec<Vec<ArcId>> {
        let mut out = vec![Vec::new(); self.n_loops];
        for (a, &l) in self.arc_loop.iter().enumerate() {
            out[l as usize].push(a as ArcId);
        }
        out
    }

    pub fn loop_of(&self, a: ArcId) -> u32 {
        self.arc_loop[a as usize]
    }

    pub fn zero_tracing(&self) -> Vec<bool> {
        self.tracing(0)
    }

    pub fn one_tracing(&self) -> Vec<bool> {
        self.tracing(1)
    }

    fn tracing(&self, bit: u8) -> Vec<bool> {
        let mut v = vec![false; self.n_loops];
        for t in self.traces.iter().filter(|t| t.bit == bit) {
            v[t.loops.0 as usize] = true;
            v[t.loops.1 as usize] = true;
        }
        v
    }

    /// Edges of the state graph: (loop, loop, bit) per crossing.
    pub fn state_graph(&self) -> Vec<(u32, u32, u8)> {
        self.traces.iter().map(|t| (t.loops.0, t.loops.1, t.bit)).collect()
    }

    pub fn one_block(&self) -> OneBlock {
        let z = self.zero_tracing();
        let o = self.one_tracing();
        let in_block: Vec<bool> = (0..self.n_loops).map(|l| o[l] && !z[l]).collect();
        let loops: Vec<u32> = (0..self.n_loops as u32).filter(|&l| in_block[l as usize]).collect();
        let edges: Vec<(u32, u32)> = self
            .traces
            .iter()
            .filter(|t| t.bit == 1 && in_block[t.loops.0 as usize] && in_block[t.loops.1 as usize])
            .map(|t| t.loops)
            .collect();
        let components = components_with_parity(self.n_loops, &loops, &edges);
        OneBlock { loops, components }
    }
}

/// Connected components of a graph restricted to `verts`, each flagged even
/// when 2-colorable (a self-loop makes a component odd).
pub fn components_with_parity(n: usize, verts: &[u32], edges: &[(u32, u32)]) -> Vec<BlockComponent> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a as usize].push(b);
        adj[b as usize].push(a);
    }
    let mut color = vec![u8::MAX; n];
    let mut out = Vec::new();
    for &v in verts {
        if color[v as usize] != u8::MAX {
            continue;
        }
        let mut comp = vec![v];
        let mut even = true;
        color[v as usize] = 0;
        let mut stack = vec![v];
        while let Some(x) = stack.pop() {
            for &y in &adj[x as usize] {
                if color[y as usize] == u8::MAX {
                    color[y as usize] = 1 - color[x as usize];
                    comp.push(y);
                    stack.push(y);
                } else if color[y as usize] == color[x as usize] {
                    even = false;
                }
            }
        }
        comp.sort_unstable();
        out.push(BlockComponent { loops: comp, even });
    }
    out
}

/// 2-coloring of the full state graph, if one exists.
pub fn two_coloring(ts: &TracedState) -> Option<Vec<u8>> {
    let verts: Vec<u32> = (0..ts.n_loops as u32).collect();
    let edges: Vec<(u32, u32)> = ts.traces.iter().map(|t| t.loops).collect();
    let comps = components_with_parity(ts.n_loops, &verts, &edges);
    if comps.iter().any(|c| !c.even) {
        return None;
    }
    let mut adj = vec![Vec::new(); ts.n_loops];
    for &(a, b) in &edges {
        adj[a as usize].push(b);
        adj[b as usize].push(a);
    }
    let mut color = vec![u8::MAX; ts.n_loops];
    for s in 0..ts.n_loops {
        if color[s] != u8::MAX {
            continue;
        }
        color[s] = 0;
        let mut stack = vec![s];
        while let Some(x) = stack.pop() {
            for &y in &adj[x] {
                if color[y as usize] == u8::MAX {
                    color[y as usize] = 1 - color[x];
                    stack.push(y as usize);
                }
            }
        }
    }
    Some(color)
}

pub fn is_zero_merging(ts: &TracedState) -> bool {
    ts.traces.iter().filter(|t| t.bit == 0).all(|t| t.is_merge())
}

pub fn is_one_merging(ts: &TracedState) -> bool {
    ts.traces.iter().filter(|t| t.bit == 1).all(|t| t.is_merge())
}

pub fn is_adequate_state(ts: &TracedState) -> bool {
    ts.traces.iter().all(|t| t.is_merge())
}

pub fn is_even_state(ts: &TracedState) -> bool {
    two_coloring(ts).is_some()
}

pub fn is_plus_adequate(d: &Diagram) -> bool {
    is_adequate_state(&resolve(d, all_zero(d)).unwrap())
}

pub fn is_minus_adequate(d: &Diagram) -> bool {
    is_adequate_state(&resolve(d, all_one(d)).unwrap())
}
