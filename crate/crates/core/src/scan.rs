//! Local elimination engine for diagrams whose full cube does not fit in
//! memory. Crossings are tensored in one at a time onto a complex whose
//! objects are crossingless matchings of the partial tangle; closed loops are
//! split off (v+ / v- summands) and every isomorphism in the differential is
//! cancelled after each step. Morphisms between matchings `a` and `b` are
//! stored in the disc basis: one disc per loop of `a ∪ b`, with a bit per
//! loop saying whether that disc carries a dot.

use std::collections::{BTreeMap, HashMap, HashSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::diagram::Diagram;
use crate::error::{Error, Result};
use crate::linalg::Coeffs;

pub(crate) trait Field: Sync {
    type E: Clone + PartialEq + Send + Sync;
    fn from_i64(&self, v: i64) -> Self::E;
    fn is_zero(&self, a: &Self::E) -> bool;
    fn add(&self, a: &Self::E, b: &Self::E) -> Self::E;
    fn mul(&self, a: &Self::E, b: &Self::E) -> Self::E;
    fn neg(&self, a: &Self::E) -> Self::E;
    fn inv(&self, a: &Self::E) -> Self::E;
}

pub(crate) struct Zp(pub u64);

impl Field for Zp {
    type E = u64;
    fn from_i64(&self, v: i64) -> u64 {
        v.rem_euclid(self.0 as i64) as u64
    }
    fn is_zero(&self, a: &u64) -> bool {
        *a == 0
    }
    fn add(&self, a: &u64, b: &u64) -> u64 {
        ((*a as u128 + *b as u128) % self.0 as u128) as u64
    }
    fn mul(&self, a: &u64, b: &u64) -> u64 {
        ((*a as u128 * *b as u128) % self.0 as u128) as u64
    }
    fn neg(&self, a: &u64) -> u64 {
        if *a == 0 {
            0
        } else {
            self.0 - a
        }
    }
    fn inv(&self, a: &u64) -> u64 {
        let (mut e, mut base, mut r) = (self.0 - 2, *a, 1u64);
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(&r, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        r
    }
}

pub(crate) struct Q;

impl Field for Q {
    type E = BigRational;
    fn from_i64(&self, v: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(v))
    }
    fn is_zero(&self, a: &BigRational) -> bool {
        a.is_zero()
    }
    fn add(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a + b
    }
    fn mul(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a * b
    }
    fn neg(&self, a: &BigRational) -> BigRational {
        -a
    }
    fn inv(&self, a: &BigRational) -> BigRational {
        BigRational::one() / a
    }
}

type Mor<E> = Vec<(u32, E)>;

/// Loop index of every point of `a ∪ b`, numbered by least point.
fn loops(a: &[u8], b: &[u8]) -> (Vec<u8>, usize) {
    let mut id = vec![u8::MAX; a.len()];
    let mut n = 0;
    for s in 0..a.len() {
        if id[s] != u8::MAX {
            continue;
        }
        let mut cur = s;
        loop {
            id[cur] = n as u8;
            let j = a[cur] as usize;
            id[j] = n as u8;
            cur = b[j] as usize;
            if cur == s {
                break;
            }
        }
        n += 1;
    }
    (id, n)
}

struct Uf(Vec<u32>);

impl Uf {
    fn new(n: usize) -> Uf {
        Uf((0..n as u32).collect())
    }
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] as usize != x {
            let p = self.0[x] as usize;
            self.0[x] = self.0[p];
            x = p;
        }
        x
    }
    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.0[a.max(b)] = a.min(b) as u32;
        }
    }
}

/// One connected piece of a cobordism before neck cutting.
#[derive(Clone, Default)]
struct Comp {
    chi: i32,
    /// Boundary loops of the result lying on this piece.
    bmask: u32,
    nb: u32,
}

/// Expands a product of connected pieces into the disc basis. `dots[i]` is
/// the number of dots on piece `i`.
fn expand<F: Field>(f: &F, comps: &[Comp], dots: &[u32], coeff: &F::E, out: &mut HashMap<u32, F::E>) {
    let mut terms: Vec<(u32, F::E)> = vec![(0, coeff.clone())];
    for (c, &d) in comps.iter().zip(dots) {
        let g2 = 2 - c.chi - c.nb as i32;
        debug_assert!(g2 >= 0 && g2 % 2 == 0, "bad surface piece");
        let genus = (g2 / 2) as u32;
        let tot = d + genus;
        if tot >= 2 {
            return;
        }
        if genus > 0 {
            let two = f.from_i64(2);
            for t in &mut terms {
                t.1 = f.mul(&t.1, &two);
            }
        }
        if tot == 1 {
            for t in &mut terms {
                t.0 |= c.bmask;
            }
        } else {
            if c.nb == 0 {
                return;
            }
            let mut next = Vec::with_capacity(terms.len() * c.nb as usize);
            for t in &terms {
                let mut m = c.bmask;
                while m != 0 {
                    let l = m.trailing_zeros();
                    m &= m - 1;
                    next.push((t.0 | (c.bmask & !(1 << l)), t.1.clone()));
                }
            }
            terms = next;
        }
    }
    for (m, v) in terms {
        let e = out.entry(m).or_insert_with(|| f.from_i64(0));
        *e = f.add(e, &v);
    }
}

fn finish<F: Field>(f: &F, acc: HashMap<u32, F::E>) -> Mor<F::E> {
    let mut v: Mor<F::E> = acc.into_iter().filter(|(_, x)| !f.is_zero(x)).collect();
    v.sort_unstable_by_key(|t| t.0);
    v
}

/// `g ∘ f` for `f: a → b`, `g: b → c`, scaled by `s`.
fn compose<F: Field>(fl: &F, a: &[u8], b: &[u8], c: &[u8], f: &Mor<F::E>, g: &Mor<F::E>, s: &F::E) -> Mor<F::E> {
    let k = a.len();
    let mut uf = Uf::new(k);
    for i in 0..k {
        uf.union(i, a[i] as usize);
        uf.union(i, b[i] as usize);
        uf.union(i, c[i] as usize);
    }
    let (lab, nab) = loops(a, b);
    let (lbc, nbc) = loops(b, c);
    let (lac, nac) = loops(a, c);
    let mut idx = vec![usize::MAX; k];
    let mut comps: Vec<Comp> = Vec::new();
    let mut comp_of = |uf: &mut Uf, p: usize, comps: &mut Vec<Comp>| {
        let r = uf.find(p);
        if idx[r] == usize::MAX {
            idx[r] = comps.len();
            comps.push(Comp::default());
        }
        idx[r]
    };
    let mut ab_comp = vec![0usize; nab];
    let mut bc_comp = vec![0usize; nbc];
    let mut seen_ab = vec![false; nab];
    let mut seen_bc = vec![false; nbc];
    let mut seen_ac = vec![false; nac];
    for i in 0..k {
        let ci = comp_of(&mut uf, i, &mut comps);
        let (x, y, z) = (lab[i] as usize, lbc[i] as usize, lac[i] as usize);
        if !seen_ab[x] {
            seen_ab[x] = true;
            ab_comp[x] = ci;
            comps[ci].chi += 1;
        }
        if !seen_bc[y] {
            seen_bc[y] = true;
            bc_comp[y] = ci;
            comps[ci].chi += 1;
        }
        if !seen_ac[z] {
            seen_ac[z] = true;
            comps[ci].bmask |= 1 << z;
            comps[ci].nb += 1;
        }
        if i < b[i] as usize {
            comps[ci].chi -= 1;
        }
    }
    let mut acc = HashMap::new();
    let mut dots = vec![0u32; comps.len()];
    for (mf, cf) in f {
        for (mg, cg) in g {
            dots.iter_mut().for_each(|d| *d = 0);
            let mut m = *mf;
            while m != 0 {
                dots[ab_comp[m.trailing_zeros() as usize]] += 1;
                m &= m - 1;
            }
            let mut m = *mg;
            while m != 0 {
                dots[bc_comp[m.trailing_zeros() as usize]] += 1;
                m &= m - 1;
            }
            let coeff = fl.mul(&fl.mul(cf, cg), s);
            expand(fl, &comps, &dots, &coeff, &mut acc);
        }
    }
    finish(fl, acc)
}

#[derive(Clone, Copy, Debug)]
struct Obj {
    t: i32,
    q: i32,
    m: u32,
}

struct Cx<E> {
    objs: Vec<Obj>,
    alive: Vec<bool>,
    out: Vec<HashMap<u32, Mor<E>>>,
    inn: Vec<HashSet<u32>>,
    mats: Vec<Vec<u8>>,
}

impl<E: Clone> Cx<E> {
    fn new(mats: Vec<Vec<u8>>) -> Cx<E> {
        Cx { objs: Vec::new(), alive: Vec::new(), out: Vec::new(), inn: Vec::new(), mats }
    }
    fn push(&mut self, o: Obj) -> u32 {
        self.objs.push(o);
        self.alive.push(true);
        self.out.push(HashMap::new());
        self.inn.push(HashSet::new());
        (self.objs.len() - 1) as u32
    }
    fn set(&mut self, x: u32, y: u32, m: Mor<E>) {
        if m.is_empty() {
            self.out[x as usize].remove(&y);
            self.inn[y as usize].remove(&x);
        } else {
            self.out[x as usize].insert(y, m);
            self.inn[y as usize].insert(x);
        }
    }
    fn kill(&mut self, x: u32) {
        self.alive[x as usize] = false;
        for y in std::mem::take(&mut self.out[x as usize]).into_keys() {
            self.inn[y as usize].remove(&x);
        }
        for w in std::mem::take(&mut self.inn[x as usize]) {
            self.out[w as usize].remove(&x);
        }
    }
    fn live(&self) -> usize {
        self.alive.iter().filter(|&&a| a).count()
    }
}

fn iso_coeff<F: Field>(f: &F, cx: &Cx<F::E>, x: u32, y: u32) -> Option<F::E> {
    let (ox, oy) = (cx.objs[x as usize], cx.objs[y as usize]);
    if ox.m != oy.m || ox.q != oy.q {
        return None;
    }
    match cx.out[x as usize][&y].as_slice() {
        [(0, c)] if !f.is_zero(c) => Some(c.clone()),
        _ => None,
    }
}

/// Cancels isomorphisms until none remain.
fn eliminate<F: Field>(f: &F, cx: &mut Cx<F::E>) {
    let mut work: Vec<u32> = (0..cx.objs.len() as u32).filter(|&x| cx.alive[x as usize]).collect();
    while let Some(x) = work.pop() {
        if !cx.alive[x as usize] {
            continue;
        }
        let mut best: Option<(usize, u32, F::E)> = None;
        for &y in cx.out[x as usize].keys() {
            if let Some(c) = iso_coeff(f, cx, x, y) {
                let cost = cx.inn[y as usize].len() * cx.out[x as usize].len();
                if best.as_ref().is_none_or(|b| cost < b.0) {
                    best = Some((cost, y, c));
                }
            }
        }
        let Some((_, y, c)) = best else { continue };
        let scale = f.neg(&f.inv(&c));
        let ws: Vec<u32> = cx.inn[y as usize].iter().copied().filter(|&w| w != x).collect();
        let us: Vec<(u32, Mor<F::E>)> = cx.out[x as usize].iter().filter(|(&u, _)| u != y).map(|(&u, m)| (u, m.clone())).collect();
        let my = cx.objs[y as usize].m as usize;
        for &w in &ws {
            let beta = cx.out[w as usize][&y].clone();
            let mw = cx.objs[w as usize].m as usize;
            for (u, gamma) in &us {
                let mu = cx.objs[*u as usize].m as usize;
                let upd = compose(f, &cx.mats[mw], &cx.mats[my], &cx.mats[mu], &beta, gamma, &scale);
                if upd.is_empty() {
                    continue;
                }
                let mut acc: HashMap<u32, F::E> = HashMap::new();
                if let Some(old) = cx.out[w as usize].get(u) {
                    acc.extend(old.iter().cloned());
                }
                for (m, v) in upd {
                    let e = acc.entry(m).or_insert_with(|| f.from_i64(0));
                    *e = f.add(e, &v);
                }
                cx.set(w, *u, finish(f, acc));
            }
        }
        cx.kill(x);
        cx.kill(y);
        work.extend(ws);
    }
}

/// Boundary bookkeeping for tensoring one crossing onto the tangle.
struct Step {
    k: usize,
    /// Partner node across a glued arc end, or `usize::MAX` for new boundary.
    glue: Vec<usize>,
    new_nodes: Vec<usize>,
    new_bd: Vec<u32>,
}

fn pair(sigma: u8, j: usize) -> usize {
    match (sigma, j) {
        (0, 0) => 1,
        (0, 1) => 0,
        (0, 2) => 3,
        (0, 3) => 2,
        (_, 0) => 3,
        (_, 3) => 0,
        (_, 1) => 2,
        _ => 1,
    }
}

fn smoothing(sigma: u8) -> [u8; 4] {
    [pair(sigma, 0) as u8, pair(sigma, 1) as u8, pair(sigma, 2) as u8, pair(sigma, 3) as u8]
}

struct Glued {
    m: Vec<u8>,
    closed: Vec<usize>,
    n_closed: usize,
}

impl Step {
    fn new(bd: &[u32], slots: [u32; 4]) -> Step {
        let k = bd.len();
        let mut glue = vec![usize::MAX; k + 4];
        for j in 0..4 {
            if let Some(i) = bd.iter().position(|&e| e == slots[j]) {
                glue[k + j] = i;
                glue[i] = k + j;
            } else if let Some(j2) = (0..4).find(|&j2| j2 != j && slots[j2] == slots[j]) {
                glue[k + j] = k + j2;
            }
        }
        let new_nodes: Vec<usize> = (0..k + 4).filter(|&i| glue[i] == usize::MAX).collect();
        let new_bd = new_nodes.iter().map(|&i| if i < k { bd[i] } else { slots[i - k] }).collect();
        Step { k, glue, new_nodes, new_bd }
    }

    fn matched(&self, a: &[u8], sigma: u8, i: usize) -> usize {
        if i < self.k {
            a[i] as usize
        } else {
            self.k + pair(sigma, i - self.k)
        }
    }

    fn glue_obj(&self, a: &[u8], sigma: u8) -> Glued {
        let n = self.k + 4;
        let mut pos = vec![usize::MAX; n];
        for (p, &i) in self.new_nodes.iter().enumerate() {
            pos[i] = p;
        }
        let mut m = vec![0u8; self.new_nodes.len()];
        let mut seen = vec![false; n];
        for &s in &self.new_nodes {
            if seen[s] {
                continue;
            }
            let mut cur = s;
            loop {
                seen[cur] = true;
                let nx = self.matched(a, sigma, cur);
                seen[nx] = true;
                if self.glue[nx] == usize::MAX {
                    m[pos[s]] = pos[nx] as u8;
                    m[pos[nx]] = pos[s] as u8;
                    break;
                }
                cur = self.glue[nx];
            }
        }
        let mut closed = vec![usize::MAX; n];
        let mut n_closed = 0;
        for s in 0..n {
            if seen[s] {
                continue;
            }
            let mut cur = s;
            while !seen[cur] {
                seen[cur] = true;
                closed[cur] = n_closed;
                let nx = self.matched(a, sigma, cur);
                seen[nx] = true;
                closed[nx] = n_closed;
                cur = self.glue[nx];
            }
            n_closed += 1;
        }
        Glued { m, closed, n_closed }
    }
}

/// Components of the cobordism `f ⊗ g` where `f: a → b` lives on the old
/// tangle and `g: ss → st` on the crossing, after gluing and capping the
/// closed loops of source and target.
struct Tensor {
    comps: Vec<Comp>,
    ab_comp: Vec<usize>,
    src_comp: Vec<usize>,
    tgt_comp: Vec<usize>,
}

fn tensor_shape(step: &Step, a: &[u8], b: &[u8], ss: u8, st: u8, gs: &Glued, gt: &Glued) -> Tensor {
    let k = step.k;
    let n = k + 4;
    let mut uf = Uf::new(n);
    for i in 0..k {
        uf.union(i, a[i] as usize);
        uf.union(i, b[i] as usize);
    }
    for j in 0..4 {
        uf.union(k + j, k + pair(ss, j));
        uf.union(k + j, k + pair(st, j));
    }
    for i in 0..n {
        if step.glue[i] != usize::MAX {
            uf.union(i, step.glue[i]);
        }
    }
    let mut idx = vec![usize::MAX; n];
    let mut comps: Vec<Comp> = Vec::new();
    let mut comp_of = |uf: &mut Uf, p: usize, comps: &mut Vec<Comp>| {
        let r = uf.find(p);
        if idx[r] == usize::MAX {
            idx[r] = comps.len();
            comps.push(Comp::default());
        }
        idx[r]
    };
    let (lab, nab) = loops(a, b);
    let mut ab_comp = vec![usize::MAX; nab];
    for i in 0..k {
        let c = comp_of(&mut uf, i, &mut comps);
        if ab_comp[lab[i] as usize] == usize::MAX {
            ab_comp[lab[i] as usize] = c;
            comps[c].chi += 1;
        }
    }
    let (ls, ns) = loops(&smoothing(ss), &smoothing(st));
    let mut seen = vec![false; ns];
    for j in 0..4 {
        if !seen[ls[j] as usize] {
            seen[ls[j] as usize] = true;
            let c = comp_of(&mut uf, k + j, &mut comps);
            comps[c].chi += 1;
        }
    }
    for i in 0..n {
        if step.glue[i] != usize::MAX && i < step.glue[i] {
            let c = comp_of(&mut uf, i, &mut comps);
            comps[c].chi -= 1;
        }
    }
    let mut src_comp = vec![usize::MAX; gs.n_closed];
    let mut tgt_comp = vec![usize::MAX; gt.n_closed];
    for i in 0..n {
        if gs.closed[i] != usize::MAX && src_comp[gs.closed[i]] == usize::MAX {
            let c = comp_of(&mut uf, i, &mut comps);
            src_comp[gs.closed[i]] = c;
            comps[c].chi += 1;
        }
        if gt.closed[i] != usize::MAX && tgt_comp[gt.closed[i]] == usize::MAX {
            let c = comp_of(&mut uf, i, &mut comps);
            tgt_comp[gt.closed[i]] = c;
            comps[c].chi += 1;
        }
    }
    let (lnew, nnew) = loops(&gs.m, &gt.m);
    let mut seen = vec![false; nnew];
    for (p, &node) in step.new_nodes.iter().enumerate() {
        let l = lnew[p] as usize;
        if !seen[l] {
            seen[l] = true;
            let c = comp_of(&mut uf, node, &mut comps);
            comps[c].bmask |= 1 << l;
            comps[c].nb += 1;
        }
    }
    Tensor { comps, ab_comp, src_comp, tgt_comp }
}

/// Entries of `f ⊗ g` between all delooped summands. Source labels set
/// (bit 1 = v-) put a dot on the capping disc; target labels clear do.
fn tensor_entries<F: Field>(fl: &F, sh: &Tensor, f: &Mor<F::E>, sign: &F::E, ns: usize, nt: usize) -> Vec<(u32, u32, Mor<F::E>)> {
    let mut out = Vec::new();
    let mut dots = vec![0u32; sh.comps.len()];
    for ls in 0..1u32 << ns {
        for lt in 0..1u32 << nt {
            let mut acc = HashMap::new();
            for (mf, cf) in f {
                dots.iter_mut().for_each(|d| *d = 0);
                let mut m = *mf;
                while m != 0 {
                    dots[sh.ab_comp[m.trailing_zeros() as usize]] += 1;
                    m &= m - 1;
                }
                for (l, &c) in sh.src_comp.iter().enumerate() {
                    dots[c] += ls >> l & 1;
                }
                for (l, &c) in sh.tgt_comp.iter().enumerate() {
                    dots[c] += 1 - (lt >> l & 1);
                }
                expand(fl, &sh.comps, &dots, &fl.mul(cf, sign), &mut acc);
            }
            let m = finish(fl, acc);
            if !m.is_empty() {
                out.push((ls, lt, m));
            }
        }
    }
    out
}

fn crossing_order(d: &Diagram) -> Vec<usize> {
    let n = d.n_crossings();
    let mut done = vec![false; n];
    let mut ends: HashMap<u32, u32> = HashMap::new();
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let mut best = (i64::MIN, usize::MAX);
        for c in (0..n).filter(|&c| !done[c]) {
            let slots = d.crossing(c).slots;
            let glued = (0..4).filter(|&j| ends.contains_key(&slots[j]) || (0..4).any(|i| i != j && slots[i] == slots[j])).count() as i64;
            if glued > best.0 {
                best = (glued, c);
            }
        }
        let c = best.1;
        done[c] = true;
        order.push(c);
        for &e in &d.crossing(c).slots {
            *ends.entry(e).or_insert(0) += 1;
        }
        ends.retain(|_, v| *v < 2);
    }
    order
}

fn run<F: Field>(fl: &F, d: &Diagram, budget: u64) -> Result<BTreeMap<(i64, i64), u64>> {
    let mut cx: Cx<F::E> = Cx::new(vec![Vec::new()]);
    cx.push(Obj { t: 0, q: 0, m: 0 });
    let mut bd: Vec<u32> = Vec::new();
    for c in crossing_order(d) {
        let x = d.crossing(c);
        let step = Step::new(&bd, x.slots);
        let (t_off, q_off): ([i32; 2], [i32; 2]) = if x.sign > 0 { ([0, 1], [1, 2]) } else { ([-1, 0], [-2, -1]) };
        let alive: Vec<u32> = (0..cx.objs.len() as u32).filter(|&o| cx.alive[o as usize]).collect();
        let mut old_m: Vec<u32> = alive.iter().map(|&o| cx.objs[o as usize].m).collect();
        old_m.sort_unstable();
        old_m.dedup();
        let glued: HashMap<(u32, u8), Glued> = old_m
            .iter()
            .flat_map(|&m| [0u8, 1].map(|s| ((m, s), step.glue_obj(&cx.mats[m as usize], s))))
            .collect();
        let mut mats: Vec<Vec<u8>> = Vec::new();
        let mut intern: HashMap<Vec<u8>, u32> = HashMap::new();
        let mut next: Cx<F::E> = Cx::new(Vec::new());
        let mut base: HashMap<(u32, u8), u32> = HashMap::new();
        for &o in &alive {
            let ob = cx.objs[o as usize];
            for s in 0..2u8 {
                let g = &glued[&(ob.m, s)];
                let len = intern.len() as u32;
                let mid = *intern.entry(g.m.clone()).or_insert_with(|| {
                    mats.push(g.m.clone());
                    len
                });
                let first = next.objs.len() as u32;
                for lab in 0..1u32 << g.n_closed {
                    let q = ob.q + q_off[s as usize] + g.n_closed as i32 - 2 * lab.count_ones() as i32;
                    next.push(Obj { t: ob.t + t_off[s as usize], q, m: mid });
                }
                base.insert((o, s), first);
            }
        }
        if next.objs.len() as u64 > budget {
            return Err(Error::Budget { needed: next.objs.len() as u64, budget });
        }
        next.mats = mats;
        let saddle_id: Mor<F::E> = vec![(0, fl.from_i64(1))];
        let jobs: Vec<(u32, u32, u8, u8, Mor<F::E>, F::E)> = alive
            .iter()
            .flat_map(|&o| {
                let sign = if cx.objs[o as usize].t.rem_euclid(2) == 0 { fl.from_i64(1) } else { fl.from_i64(-1) };
                let mut v = vec![(o, o, 0u8, 1u8, saddle_id.clone(), sign)];
                for (&y, f) in &cx.out[o as usize] {
                    for s in 0..2u8 {
                        v.push((o, y, s, s, f.clone(), fl.from_i64(1)));
                    }
                }
                v
            })
            .collect();
        let entries = crate::par::map(&jobs, |(x, y, ss, st, f, sign)| {
            let (ma, mb) = (cx.objs[*x as usize].m, cx.objs[*y as usize].m);
            let (gs, gt) = (&glued[&(ma, *ss)], &glued[&(mb, *st)]);
            let sh = tensor_shape(&step, &cx.mats[ma as usize], &cx.mats[mb as usize], *ss, *st, gs, gt);
            let (bs, bt) = (base[&(*x, *ss)], base[&(*y, *st)]);
            tensor_entries(fl, &sh, f, sign, gs.n_closed, gt.n_closed)
                .into_iter()
                .map(|(ls, lt, m)| (bs + ls, bt + lt, m))
                .collect::<Vec<_>>()
        });
        for (src, tgt, m) in entries.into_iter().flatten() {
            next.set(src, tgt, m);
        }
        bd = step.new_bd;
        cx = next;
        eliminate(fl, &mut cx);
    }
    debug_assert!(bd.is_empty());
    let free = d.free_loops().len();
    let mut ranks = BTreeMap::new();
    let live = cx.live();
    if live as u64 > budget {
        return Err(Error::Budget { needed: live as u64, budget });
    }
    for o in 0..cx.objs.len() {
        if !cx.alive[o] {
            continue;
        }
        if !cx.out[o].is_empty() {
            return Err(Error::Inconsistent("local elimination left a nonzero differential".into()));
        }
        let ob = cx.objs[o];
        for j in 0..=free {
            let mult = crate::complex::binom(free, j);
            *ranks.entry((ob.t as i64, (ob.q + free as i32 - 2 * j as i32) as i64)).or_insert(0) += mult;
        }
    }
    Ok(ranks)
}

/// Bigraded Betti numbers `(t, q) -> rank` by local elimination.
pub(crate) fn table(d: &Diagram, coeffs: Coeffs, budget: u64) -> Result<BTreeMap<(i64, i64), u64>> {
    match coeffs {
        Coeffs::ModP(p) => run(&Zp(p), d, budget),
        Coeffs::Rational => run(&Q, d, budget),
    }
}
