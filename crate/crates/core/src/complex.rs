//! The Khovanov cube: enhanced states, gradings, the differential and the
//! Lee map, both chain-level and as per-bigrading sparse blocks.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::diagram::Diagram;
use crate::error::{Error, Result};
use crate::linalg::SparseMat;
use crate::resolution::{label_loops, resolve, State, TracedState};
use crate::uf::UnionFind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mark {
    Plus,
    Minus,
}

impl Mark {
    pub fn symbol(&self) -> char {
        match self {
            Mark::Plus => '+',
            Mark::Minus => '-',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bigrading {
    pub t: i64,
    pub q: i64,
}

impl fmt::Display for Bigrading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.t, self.q)
    }
}

/// A generator: state bits plus a mask of plus-marked loops (bit j is loop j
/// in canonical numbering).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Gen {
    pub state: u64,
    pub plus: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnhancedState {
    pub traced: TracedState,
    pub marks: Vec<Mark>,
}

impl EnhancedState {
    pub fn new(traced: TracedState, marks: Vec<Mark>) -> Result<EnhancedState> {
        if marks.len() != traced.n_loops {
            return Err(Error::Invalid(format!("{} marks for {} loops", marks.len(), traced.n_loops)));
        }
        Ok(EnhancedState { traced, marks })
    }

    pub fn from_gen(d: &Diagram, g: Gen) -> Result<EnhancedState> {
        let ts = resolve(d, State::new(g.state, d.n_crossings()))?;
        let marks = (0..ts.n_loops).map(|j| if g.plus >> j & 1 == 1 { Mark::Plus } else { Mark::Minus }).collect();
        EnhancedState::new(ts, marks)
    }

    pub fn gen(&self) -> Gen {
        let mut plus = 0u64;
        for (j, m) in self.marks.iter().enumerate() {
            if *m == Mark::Plus {
                plus |= 1 << j;
            }
        }
        Gen { state: self.traced.state.bits, plus }
    }

    pub fn n_plus(&self) -> usize {
        self.marks.iter().filter(|m| **m == Mark::Plus).count()
    }

    pub fn bigrading(&self, d: &Diagram) -> Bigrading {
        grading(d, self.traced.state.height(), self.n_plus(), self.marks.len())
    }

    pub fn marks_string(&self) -> String {
        self.marks.iter().map(|m| m.symbol()).collect()
    }

    pub fn chain(&self) -> Chain {
        Chain::from_gen(self.traced.state.n as usize, self.gen())
    }
}

/// `t = h - n_-`, `q = #plus - #minus + h + n_+ - 2 n_-`.
pub fn grading(d: &Diagram, h: usize, n_plus: usize, n_loops: usize) -> Bigrading {
    let (np, nm) = d.counts();
    let (np, nm, h) = (np as i64, nm as i64, h as i64);
    let p = n_plus as i64;
    let m = n_loops as i64 - p;
    Bigrading { t: h - nm, q: p - m + h + np - 2 * nm }
}

/// Number of plus marks a generator with `n_loops` loops at height `h`
/// needs to sit in quantum grading `q`.
pub fn plus_count_for(d: &Diagram, h: usize, q: i64, n_loops: usize) -> Option<usize> {
    let (np, nm) = d.counts();
    let twice = q - h as i64 - np as i64 + 2 * nm as i64 + n_loops as i64;
    if twice < 0 || twice % 2 != 0 || twice / 2 > n_loops as i64 {
        return None;
    }
    Some((twice / 2) as usize)
}

/// Sparse integer combination of generators.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Chain {
    pub n: usize,
    pub terms: BTreeMap<Gen, i64>,
}

impl Chain {
    pub fn zero(n: usize) -> Chain {
        Chain { n, terms: BTreeMap::new() }
    }
    pub fn from_gen(n: usize, g: Gen) -> Chain {
        let mut c = Chain::zero(n);
        c.add(g, 1);
        c
    }
    pub fn add(&mut self, g: Gen, v: i64) {
        if v == 0 {
            return;
        }
        let e = self.terms.entry(g).or_insert(0);
        *e += v;
        if *e == 0 {
            self.terms.remove(&g);
        }
    }
    pub fn add_chain(&mut self, o: &Chain, scale: i64) {
        for (&g, &v) in &o.terms {
            self.add(g, v * scale);
        }
    }
    pub fn scaled(&self, k: i64) -> Chain {
        let mut c = Chain::zero(self.n);
        c.add_chain(self, k);
        c
    }
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    pub fn len(&self) -> usize {
        self.terms.len()
    }
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
    /// Homological height shared by all terms, if homogeneous.
    pub fn height(&self) -> Option<usize> {
        let mut it = self.terms.keys().map(|g| g.state.count_ones() as usize);
        let h = it.next()?;
        it.all(|x| x == h).then_some(h)
    }
    /// Bigradings of the terms.
    pub fn gradings(&self, d: &Diagram) -> Vec<Bigrading> {
        let mut cache = LoopCache::new(d);
        let mut v: Vec<Bigrading> = self
            .terms
            .keys()
            .map(|g| {
                let l = cache.get(g.state).1;
                grading(d, g.state.count_ones() as usize, g.plus.count_ones() as usize, l)
            })
            .collect();
        v.sort();
        v.dedup();
        v
    }
    pub fn restrict(&self, keep: impl Fn(&Gen) -> bool) -> Chain {
        Chain { n: self.n, terms: self.terms.iter().filter(|(g, _)| keep(g)).map(|(&g, &v)| (g, v)).collect() }
    }
}

/// Per-state loop labels, memoized.
pub(crate) struct LoopCache<'a> {
    d: &'a Diagram,
    uf: UnionFind,
    map: HashMap<u64, (Vec<u8>, usize)>,
}

impl<'a> LoopCache<'a> {
    pub(crate) fn new(d: &'a Diagram) -> LoopCache<'a> {
        LoopCache { d, uf: UnionFind::new(d.n_arcs()), map: HashMap::new() }
    }
    pub(crate) fn get(&mut self, s: u64) -> (&[u8], usize) {
        if !self.map.contains_key(&s) {
            let mut lab = Vec::new();
            let l = label_loops(self.d, s, &mut self.uf, &mut lab);
            self.map.insert(s, (lab.iter().map(|&x| x as u8).collect(), l));
        }
        let e = &self.map[&s];
        (&e.0, e.1)
    }
}

/// Which edge maps to apply.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeKind {
    /// Khovanov differential.
    D,
    /// Lee perturbation.
    Phi,
}

/// Image of one generator's plus-mask under the edge map of `slots` from a
/// state with labels `src` to the state with labels `tgt`. Up to two terms.
#[inline]
pub(crate) fn edge_map(slots: &[u32; 4], src: &[u8], reps: &[u32], tgt: &[u8], plus: u64, kind: EdgeKind, out: &mut Vec<u64>) {
    out.clear();
    let a = src[slots[0] as usize] as usize;
    let b = src[slots[2] as usize] as usize;
    let mut base = 0u64;
    for (j, &r) in reps.iter().enumerate() {
        if j != a && j != b && plus >> j & 1 == 1 {
            base |= 1 << tgt[r as usize];
        }
    }
    let pa = plus >> a & 1 == 1;
    if a != b {
        let pb = plus >> b & 1 == 1;
        let c = 1u64 << tgt[slots[0] as usize];
        match (kind, pa, pb) {
            (EdgeKind::D, true, true) => out.push(base | c),
            (EdgeKind::D, true, false) | (EdgeKind::D, false, true) => out.push(base),
            (EdgeKind::Phi, false, false) => out.push(base | c),
            _ => {}
        }
    } else {
        let c1 = 1u64 << tgt[slots[0] as usize];
        let c2 = 1u64 << tgt[slots[1] as usize];
        match (kind, pa) {
            (EdgeKind::D, true) => {
                out.push(base | c1);
                out.push(base | c2);
            }
            (EdgeKind::D, false) => out.push(base),
            (EdgeKind::Phi, false) => out.push(base | c1 | c2),
            _ => {}
        }
    }
}

/// Representative (least) arc of each loop.
pub(crate) fn loop_reps(lab: &[u8], n_loops: usize) -> Vec<u32> {
    let mut reps = vec![u32::MAX; n_loops];
    for (a, &l) in lab.iter().enumerate() {
        if reps[l as usize] == u32::MAX {
            reps[l as usize] = a as u32;
        }
    }
    reps
}

/// Sign of the edge at crossing `i` out of state `s`.
#[inline]
pub fn edge_sign(s: u64, i: usize) -> i64 {
    if (s & ((1u64 << i) - 1)).count_ones().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

fn apply_edges(c: &Chain, d: &Diagram, kind: EdgeKind) -> Chain {
    let mut out = Chain::zero(c.n);
    let mut cache = LoopCache::new(d);
    let mut buf = Vec::new();
    for (&g, &v) in &c.terms {
        let (src, l) = {
            let (s, l) = cache.get(g.state);
            (s.to_vec(), l)
        };
        let reps = loop_reps(&src, l);
        for i in 0..d.n_crossings() {
            if g.state >> i & 1 == 1 {
                continue;
            }
            let t = g.state | 1 << i;
            let tgt = cache.get(t).0.to_vec();
            edge_map(&d.crossing(i).slots, &src, &reps, &tgt, g.plus, kind, &mut buf);
            let sg = edge_sign(g.state, i);
            for &m in &buf {
                out.add(Gen { state: t, plus: m }, sg * v);
            }
        }
    }
    out
}

/// Khovanov differential of a chain.
pub fn apply_d(c: &Chain, d: &Diagram) -> Chain {
    apply_edges(c, d, EdgeKind::D)
}

/// Lee map of a chain; raises q by 4.
pub fn apply_phi(c: &Chain, d: &Diagram) -> Chain {
    apply_edges(c, d, EdgeKind::Phi)
}

/// `d + Phi`.
pub fn apply_lee(c: &Chain, d: &Diagram) -> Chain {
    let mut r = apply_d(c, d);
    r.add_chain(&apply_phi(c, d), 1);
    r
}

/// All states of a given height, in increasing numeric order.
pub fn states_of_height(n: usize, h: usize) -> Vec<u64> {
    if h > n {
        return Vec::new();
    }
    if h == 0 {
        return vec![0];
    }
    let mut v = Vec::new();
    let limit: u128 = 1u128 << n;
    let mut x: u64 = (1u64 << h) - 1;
    loop {
        v.push(x);
        let c = x & x.wrapping_neg();
        let r = x.wrapping_add(c);
        if r == 0 {
            break;
        }
        let nx = (((r ^ x) >> 2) / c) | r;
        if (nx as u128) >= limit || nx < x {
            break;
        }
        x = nx;
    }
    v
}

/// Lazily enumerates the enhanced states at height `r`.
pub fn generators(d: &Diagram, r: usize) -> Result<impl Iterator<Item = EnhancedState> + '_> {
    let n = d.n_crossings();
    if r > n {
        return Err(Error::Invalid(format!("height {r} out of range 0..={n}")));
    }
    Ok(states_of_height(n, r).into_iter().flat_map(move |s| {
        let ts = resolve(d, State::new(s, n)).expect("state length matches");
        let l = ts.n_loops;
        (0..1u64 << l).map(move |m| {
            let marks = (0..l).map(|j| if m >> j & 1 == 1 { Mark::Plus } else { Mark::Minus }).collect();
            EnhancedState { traced: ts.clone(), marks }
        })
    }))
}

pub(crate) fn binom(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u64 = 1;
    for i in 0..k {
        r = r * (n - i) as u64 / (i + 1) as u64;
    }
    r
}

/// Colex rank of a mask among masks of the same popcount.
#[inline]
pub(crate) fn colex_rank(mut m: u64, table: &[[u64; 65]; 65]) -> u64 {
    let mut r = 0;
    let mut i = 1;
    while m != 0 {
        let p = m.trailing_zeros() as usize;
        r += table[p][i];
        i += 1;
        m &= m - 1;
    }
    r
}

pub(crate) fn binom_table() -> Box<[[u64; 65]; 65]> {
    let mut t = Box::new([[0u64; 65]; 65]);
    for n in 0..65 {
        t[n][0] = 1;
        for k in 1..=n {
            t[n][k] = t[n - 1][k - 1].saturating_add(if k < n { t[n - 1][k] } else { 0 });
        }
    }
    t
}

/// Masks of `l` bits with `k` set, increasing.
pub(crate) fn masks(l: usize, k: usize) -> impl Iterator<Item = u64> {
    let mut cur = if k == 0 { Some(0u64) } else if k > l { None } else { Some((1u64 << k) - 1) };
    let limit = 1u128 << l;
    std::iter::from_fn(move || {
        let x = cur?;
        cur = if x == 0 {
            None
        } else {
            let c = x & x.wrapping_neg();
            let r = x.wrapping_add(c);
            let nx = (((r ^ x) >> 2) / c) | r;
            if r == 0 || (nx as u128) >= limit {
                None
            } else {
                Some(nx)
            }
        };
        Some(x)
    })
}

/// One height of the cube: states with their loop labels.
pub struct Level {
    pub h: usize,
    pub states: Vec<u64>,
    pub n_arcs: usize,
    pub labels: Vec<u8>,
    pub n_loops: Vec<u8>,
}

impl Level {
    pub fn build(d: &Diagram, h: usize) -> Level {
        let n = d.n_crossings();
        let states = states_of_height(n, h);
        let n_arcs = d.n_arcs();
        const CHUNK: usize = 4096;
        let n_chunks = states.len().div_ceil(CHUNK);
        let parts = crate::par::map_range(n_chunks, |ci| {
            let mut uf = UnionFind::new(n_arcs);
            let mut lab = Vec::new();
            let lo = ci * CHUNK;
            let hi = (lo + CHUNK).min(states.len());
            let mut labels = Vec::with_capacity((hi - lo) * n_arcs);
            let mut loops = Vec::with_capacity(hi - lo);
            for &s in &states[lo..hi] {
                let l = label_loops(d, s, &mut uf, &mut lab);
                labels.extend(lab.iter().map(|&x| x as u8));
                loops.push(l as u8);
            }
            (labels, loops)
        });
        let mut labels = Vec::with_capacity(states.len() * n_arcs);
        let mut n_loops = Vec::with_capacity(states.len());
        for (l, c) in parts {
            labels.extend(l);
            n_loops.extend(c);
        }
        Level { h, states, n_arcs, labels, n_loops }
    }

    pub fn labels_of(&self, i: usize) -> &[u8] {
        &self.labels[i * self.n_arcs..(i + 1) * self.n_arcs]
    }

    pub fn index_of(&self, s: u64) -> Option<usize> {
        self.states.binary_search(&s).ok()
    }

    /// Total generator count `sum 2^loops`.
    pub fn dimension(&self) -> u64 {
        self.n_loops.iter().map(|&l| 1u64 << l).sum()
    }

    /// Generator counts per quantum grading.
    pub fn q_dims(&self, d: &Diagram) -> BTreeMap<i64, u64> {
        let mut m = BTreeMap::new();
        for &l in &self.n_loops {
            let l = l as usize;
            for k in 0..=l {
                let q = grading(d, self.h, k, l).q;
                *m.entry(q).or_insert(0) += binom(l, k);
            }
        }
        m
    }

    /// Per-state starting offsets of block `q` (last entry = block size).
    pub fn offsets(&self, d: &Diagram, q: i64) -> Vec<u64> {
        let mut off = Vec::with_capacity(self.states.len() + 1);
        let mut acc = 0u64;
        for &l in &self.n_loops {
            off.push(acc);
            if let Some(k) = plus_count_for(d, self.h, q, l as usize) {
                acc += binom(l as usize, k);
            }
        }
        off.push(acc);
        off
    }
}

/// Target column indexing for block-matrix assembly.
pub(crate) struct Target<'a> {
    pub level: &'a Level,
    /// Per target quantum grading: column offset of that block, and the
    /// per-state offsets inside it.
    pub blocks: BTreeMap<i64, (u64, Vec<u64>)>,
}

impl<'a> Target<'a> {
    pub(crate) fn new(d: &Diagram, level: &'a Level, qs: &[i64]) -> Target<'a> {
        let mut blocks = BTreeMap::new();
        let mut base = 0u64;
        for &q in qs {
            let off = level.offsets(d, q);
            let size = *off.last().unwrap();
            blocks.insert(q, (base, off));
            base += size;
        }
        Target { level, blocks }
    }
    pub(crate) fn n_cols(&self) -> u64 {
        self.blocks.values().map(|(b, off)| b + off.last().unwrap()).max().unwrap_or(0)
    }
}

/// Rows of the map out of the blocks `src_qs` at `src` (generator order:
/// blocks in the order given, then states, then masks). Each row lists
/// target columns within `tgt`; entries whose target grading is not in
/// `tgt` are dropped.
pub(crate) fn assemble_rows(d: &Diagram, src: &Level, src_qs: &[i64], tgt: &Target, kinds: &[EdgeKind]) -> Vec<Vec<(u32, i64)>> {
    let n = d.n_crossings();
    let table = binom_table();
    let mut out = Vec::new();
    for &q in src_qs {
        let per_state = crate::par::map_range(src.states.len(), |si| {
            let s = src.states[si];
            let l = src.n_loops[si] as usize;
            let Some(k) = plus_count_for(d, src.h, q, l) else { return Vec::new() };
            let lab = src.labels_of(si);
            let reps = loop_reps(lab, l);
            let mut rows: Vec<Vec<(u32, i64)>> = masks(l, k).map(|_| Vec::new()).collect();
            let mut buf = Vec::new();
            for i in 0..n {
                if s >> i & 1 == 1 {
                    continue;
                }
                let t = s | 1 << i;
                let ti = tgt.level.index_of(t).expect("target state present");
                let tl = tgt.level.n_loops[ti] as usize;
                let tlab = tgt.level.labels_of(ti);
                let sg = edge_sign(s, i);
                for &kind in kinds {
                    let dq = if kind == EdgeKind::Phi { 4 } else { 0 };
                    let Some((base, off)) = tgt.blocks.get(&(q + dq)) else { continue };
                    for (r, m) in masks(l, k).enumerate() {
                        edge_map(&d.crossing(i).slots, lab, &reps, tlab, m, kind, &mut buf);
                        for &tm in &buf {
                            debug_assert_eq!(grading(d, src.h + 1, tm.count_ones() as usize, tl).q, q + dq);
                            let col = base + off[ti] + colex_rank(tm, &table);
                            rows[r].push((col as u32, sg));
                        }
                    }
                }
            }
            rows
        });
        for rows in per_state {
            out.extend(rows);
        }
    }
    out
}

/// Differential `C^r -> C^{r+1}` on the whole height, all quantum gradings;
/// rows are source generators in canonical order, columns target ones.
pub fn differential_matrix(d: &Diagram, r: usize) -> Result<SparseMat> {
    edge_matrix(d, r, &[EdgeKind::D])
}

/// Lee map `C^r -> C^{r+1}` in the same indexing as [`differential_matrix`].
pub fn phi_matrix(d: &Diagram, r: usize) -> Result<SparseMat> {
    edge_matrix(d, r, &[EdgeKind::Phi])
}

fn edge_matrix(d: &Diagram, r: usize, kinds: &[EdgeKind]) -> Result<SparseMat> {
    let n = d.n_crossings();
    if r > n {
        return Err(Error::Invalid(format!("height {r} out of range 0..={n}")));
    }
    let src = Level::build(d, r);
    let src_qs: Vec<i64> = src.q_dims(d).keys().copied().collect();
    if r == n {
        let rows = src.dimension() as usize;
        return Ok(SparseMat { n_cols: 0, rows: vec![Vec::new(); rows] });
    }
    let tl = Level::build(d, r + 1);
    let tgt_qs: Vec<i64> = tl.q_dims(d).keys().copied().collect();
    let tgt = Target::new(d, &tl, &tgt_qs);
    let rows = assemble_rows(d, &src, &src_qs, &tgt, kinds);
    let mut m = SparseMat::new(tgt.n_cols() as usize);
    for row in rows {
        m.push_row(row);
    }
    Ok(m)
}

/// Generators of height `r` in the order used by [`differential_matrix`].
pub fn generator_order(d: &Diagram, r: usize) -> Vec<Gen> {
    let lv = Level::build(d, r);
    let mut out = Vec::new();
    for q in lv.q_dims(d).keys() {
        for (si, &s) in lv.states.iter().enumerate() {
            let l = lv.n_loops[si] as usize;
            if let Some(k) = plus_count_for(d, r, *q, l) {
                out.extend(masks(l, k).map(|m| Gen { state: s, plus: m }));
            }
        }
    }
    out
}
