//! Chain maps induced by elementary cobordisms (births, deaths, saddles and
//! Reidemeister I/II moves) and their composites.
//!
//! Conventions: the unit puts `v+` on a new circle, the counit keeps `v-`;
//! saddles act by the Frobenius multiplication and comultiplication. The
//! Reidemeister maps are the projections and inclusions of Gaussian
//! elimination on the cube, so they commute with the differential by
//! construction. Removing crossings from a state renumbers the remaining
//! crossings; the sign of that renumbering keeps edge signs compatible.

use std::collections::HashMap;
use std::fmt;

use crate::complex::{apply_d, edge_map, edge_sign, generator_order, loop_reps, Bigrading, Chain, EdgeKind, Gen};
use crate::diagram::{ArcId, Crossing, Diagram};
use crate::error::{Error, Result};
use crate::linalg::SparseMat;
use crate::resolution::label_loops;
use crate::uf::UnionFind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MoveKind {
    Birth,
    Death,
    Saddle,
    R1PlusIntro,
    R1PlusRemove,
    R1MinusIntro,
    R1MinusRemove,
    R2Intro,
    R2Cancel,
}

impl fmt::Display for MoveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MoveKind::Birth => "birth",
            MoveKind::Death => "death",
            MoveKind::Saddle => "saddle",
            MoveKind::R1PlusIntro => "r1+intro",
            MoveKind::R1PlusRemove => "r1+remove",
            MoveKind::R1MinusIntro => "r1-intro",
            MoveKind::R1MinusRemove => "r1-remove",
            MoveKind::R2Intro => "r2intro",
            MoveKind::R2Cancel => "r2cancel",
        })
    }
}

/// Move-specific data, in terms of arcs and crossings of the side that
/// carries the local picture.
#[derive(Clone, Debug)]
enum Local {
    Birth { circle: ArcId },
    Death { circle: ArcId },
    Saddle { x: ArcId, y: ArcId },
    /// Kink crossing `p` with small loop arc `small` and strand arc `strand`.
    R1 { p: usize, small: ArcId, strand: ArcId },
    /// `a` is 1 and `b` is 0 in the state where `u`, `v` close into a circle.
    R2 { a: usize, b: usize, u: ArcId },
}

/// A single move between two diagrams with the data its chain map needs.
#[derive(Clone, Debug)]
pub struct ElementaryMove {
    pub kind: MoveKind,
    /// Arc or crossing ids locating the move, on the side carrying the local picture.
    pub site: Vec<u32>,
    pub source: Diagram,
    pub target: Diagram,
    local: Local,
    /// Arc correspondence from source to target arcs, outside the local picture.
    pairs: Vec<(ArcId, ArcId)>,
    script: String,
}

impl ElementaryMove {
    /// The move as a line of a move script.
    pub fn script_line(&self) -> &str {
        &self.script
    }

    pub fn q_shift(&self) -> i64 {
        match self.kind {
            MoveKind::Birth | MoveKind::Death => 1,
            MoveKind::Saddle => -1,
            _ => 0,
        }
    }
}

/// Deletes crossings and joins the strands straight through them. Returns
/// the new diagram and, for every old arc, the new arc its strand became.
fn splice_out(d: &Diagram, remove: &[usize]) -> Result<(Diagram, Vec<ArcId>)> {
    let n = d.n_arcs();
    let gone = |c: u32| remove.contains(&(c as usize));
    // walk back to the first arc of each chain
    let mut rep = vec![u32::MAX; n];
    let mut cyclic = vec![false; n];
    for a in 0..n as ArcId {
        if rep[a as usize] != u32::MAX {
            continue;
        }
        let mut chain = vec![a];
        let mut x = a;
        let mut cycle = false;
        while let Some(t) = d.tail(x).filter(|t| gone(t.crossing)) {
            x = d.crossing(t.crossing as usize).slots[(t.slot as usize + 2) % 4];
            if x == a {
                cycle = true;
                break;
            }
            chain.push(x);
        }
        let r = if cycle { *chain.iter().min().unwrap() } else { x };
        for &c in &chain {
            rep[c as usize] = r;
            cyclic[c as usize] = cycle;
        }
    }
    // forward members reached from reps are covered when walking from them
    for a in 0..n {
        if rep[a] == u32::MAX {
            rep[a] = a as u32;
        }
    }
    let mut is_rep = vec![false; n];
    for a in 0..n {
        is_rep[rep[a] as usize] = true;
    }
    let mut new_id = vec![u32::MAX; n];
    let mut m = 0u32;
    for a in 0..n {
        if is_rep[a] {
            new_id[a] = m;
            m += 1;
        }
    }
    let map: Vec<ArcId> = (0..n).map(|a| new_id[rep[a] as usize]).collect();
    let cs: Vec<Crossing> = d
        .crossings()
        .iter()
        .enumerate()
        .filter(|(i, _)| !remove.contains(i))
        .map(|(_, c)| Crossing::new(c.slots.map(|s| map[s as usize]), c.sign))
        .collect();
    let mut free: Vec<ArcId> = d.free_loops().iter().map(|&a| map[a as usize]).collect();
    for a in 0..n {
        if cyclic[a] && is_rep[a] {
            free.push(new_id[a]);
        }
    }
    free.sort_unstable();
    free.dedup();
    Ok((Diagram::from_parts(cs, m, free)?, map))
}

/// Removes the bits at `del` (sorted) from `s`, returning the shorter state
/// and the sign of the renumbering.
fn delete_bits(s: u64, n: usize, del: &[usize]) -> (u64, i64) {
    let mut sign = 1;
    for &p in del {
        if s >> p & 1 == 1 {
            let after = (p + 1..n).filter(|i| !del.contains(i) && s >> i & 1 == 1).count();
            if after % 2 == 1 {
                sign = -sign;
            }
        }
    }
    let mut out = 0u64;
    let mut j = 0;
    for i in 0..n {
        if del.contains(&i) {
            continue;
        }
        if s >> i & 1 == 1 {
            out |= 1 << j;
        }
        j += 1;
    }
    (out, sign)
}

/// Inverse of `delete_bits`: spreads `s` over `n` positions, filling `ins`
/// (sorted positions) with the given bits.
fn insert_bits(s: u64, n: usize, ins: &[(usize, u8)]) -> (u64, i64) {
    let mut out = 0u64;
    let mut j = 0;
    for i in 0..n {
        if let Some(&(_, b)) = ins.iter().find(|(p, _)| *p == i) {
            if b == 1 {
                out |= 1 << i;
            }
        } else {
            if s >> j & 1 == 1 {
                out |= 1 << i;
            }
            j += 1;
        }
    }
    let del: Vec<usize> = ins.iter().map(|(p, _)| *p).collect();
    (out, delete_bits(out, n, &del).1)
}

fn labels(d: &Diagram, s: u64) -> Vec<u32> {
    let mut uf = UnionFind::new(d.n_arcs());
    let mut lab = Vec::new();
    label_loops(d, s, &mut uf, &mut lab);
    lab
}

/// Carries plus marks across an arc correspondence, skipping source loops in
/// `skip`.
fn transfer(from: &[u32], to: &[u32], pairs: &[(ArcId, ArcId)], plus: u64, skip: u64) -> u64 {
    let mut out = 0u64;
    for &(a, b) in pairs {
        let l = from[a as usize];
        if plus >> l & 1 == 1 && skip >> l & 1 == 0 {
            out |= 1 << to[b as usize];
        }
    }
    out
}

fn bit(l: u32) -> u64 {
    1u64 << l
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Incompatible(msg.into())
}

/// A new crossingless circle.
pub fn birth(d: &Diagram) -> Result<ElementaryMove> {
    let circle = d.n_arcs() as ArcId;
    let mut free = d.free_loops().to_vec();
    free.push(circle);
    let target = Diagram::from_parts(d.crossings().to_vec(), circle + 1, free)?;
    let pairs = (0..circle).map(|a| (a, a)).collect();
    Ok(ElementaryMove { kind: MoveKind::Birth, site: vec![circle], source: d.clone(), target, local: Local::Birth { circle }, pairs, script: "birth".into() })
}

/// Caps off the crossingless circle `arc`.
pub fn death(d: &Diagram, arc: ArcId) -> Result<ElementaryMove> {
    if !d.free_loops().contains(&arc) {
        return Err(invalid(format!("arc {arc} is not a crossingless circle")));
    }
    let (target, map) = splice_out(d, &[])?;
    // splice_out with nothing removed is the identity; drop the circle by hand
    debug_assert_eq!(target, *d);
    let n = d.n_arcs() as ArcId;
    let shift = |a: ArcId| if a > arc { a - 1 } else { a };
    let cs = d.crossings().iter().map(|c| Crossing::new(c.slots.map(shift), c.sign)).collect();
    let free = d.free_loops().iter().filter(|&&a| a != arc).map(|&a| shift(a)).collect();
    let target = Diagram::from_parts(cs, n - 1, free)?;
    let pairs = (0..n).filter(|&a| a != arc).map(|a| (a, shift(map[a as usize]))).collect();
    Ok(ElementaryMove { kind: MoveKind::Death, site: vec![arc], source: d.clone(), target, local: Local::Death { circle: arc }, pairs, script: format!("death {arc}") })
}

/// Oriented saddle between arcs `x` and `y` bounding a common face; the two
/// arcs exchange their heads.
pub fn saddle(d: &Diagram, x: ArcId, y: ArcId) -> Result<ElementaryMove> {
    if x == y || x as usize >= d.n_arcs() || y as usize >= d.n_arcs() {
        return Err(invalid("saddle needs two distinct arcs"));
    }
    let (hx, hy) = match (d.head(x), d.head(y)) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(invalid("saddle arcs must meet crossings")),
    };
    if d.left_face(x) != d.left_face(y) && d.right_face(x) != d.right_face(y) {
        return Err(invalid(format!("arcs {x} and {y} share no face with matching orientation")));
    }
    let mut cs = d.crossings().to_vec();
    cs[hx.crossing as usize].slots[hx.slot as usize] = y;
    cs[hy.crossing as usize].slots[hy.slot as usize] = x;
    let target = Diagram::from_parts(cs, d.n_arcs() as u32, d.free_loops().to_vec())?;
    let pairs = (0..d.n_arcs() as ArcId).map(|a| (a, a)).collect();
    Ok(ElementaryMove { kind: MoveKind::Saddle, site: vec![x, y], source: d.clone(), target, local: Local::Saddle { x, y }, pairs, script: format!("saddle {x} {y}") })
}

/// Small loop and strand arcs of a kink at crossing `p`, and whether the
/// small loop is cut off by the 0-smoothing.
fn kink(d: &Diagram, p: usize) -> Result<(ArcId, ArcId, bool)> {
    let c = d.crossing(p);
    let at_p = |a: ArcId| d.head(a).map(|e| e.crossing) == Some(p as u32) && d.tail(a).map(|e| e.crossing) == Some(p as u32);
    for (i, j, zero) in [(2, 3, true), (0, 1, true), (1, 2, false), (3, 0, false)] {
        let a = c.slots[i];
        if a == c.slots[j] && at_p(a) {
            let other = c.slots[(i + 2) % 4];
            if zero != (c.sign > 0) {
                return Err(invalid(format!("crossing {p} has an inconsistent kink")));
            }
            return Ok((a, other, zero));
        }
    }
    Err(invalid(format!("crossing {p} is not a kink")))
}

/// Undoes the kink at crossing `p`.
pub fn r1_remove(d: &Diagram, p: usize) -> Result<ElementaryMove> {
    if p >= d.n_crossings() {
        return Err(invalid(format!("no crossing {p}")));
    }
    let (small, strand, plus) = kink(d, p)?;
    let (target, map) = splice_out(d, &[p])?;
    let pairs = (0..d.n_arcs() as ArcId).filter(|&a| a != small).map(|a| (a, map[a as usize])).collect();
    let kind = if plus { MoveKind::R1PlusRemove } else { MoveKind::R1MinusRemove };
    Ok(ElementaryMove { kind, site: vec![p as u32], source: d.clone(), target, local: Local::R1 { p, small, strand }, pairs, script: format!("r1remove {p}") })
}

/// Adds a kink of the given sign on `arc`, appended as the last crossing.
/// `side` picks which side of the strand the small loop sits on.
pub fn r1_intro(d: &Diagram, arc: ArcId, sign: i8, side: bool) -> Result<ElementaryMove> {
    if arc as usize >= d.n_arcs() || (sign != 1 && sign != -1) {
        return Err(invalid("bad kink site"));
    }
    let n = d.n_arcs() as ArcId;
    let small = n;
    let is_free = d.free_loops().contains(&arc);
    let (w, n_new) = if is_free { (arc, n + 1) } else { (n + 1, n + 2) };
    let mut cs = d.crossings().to_vec();
    if let Some(h) = d.head(arc) {
        cs[h.crossing as usize].slots[h.slot as usize] = w;
    }
    let slots = match (sign > 0, side) {
        (true, false) => [arc, w, small, small],
        (true, true) => [small, small, w, arc],
        (false, false) => [arc, small, small, w],
        (false, true) => [small, arc, w, small],
    };
    cs.push(Crossing::new(slots, sign));
    let free: Vec<ArcId> = d.free_loops().iter().copied().filter(|&a| a != arc).collect();
    let k = Diagram::from_parts(cs, n_new, free)?;
    let p = k.n_crossings() - 1;
    let mut m = r1_remove(&k, p)?;
    let (target, source) = (m.source.clone(), m.target.clone());
    m.kind = if sign > 0 { MoveKind::R1PlusIntro } else { MoveKind::R1MinusIntro };
    m.script = format!("r1intro {arc} {} {}", if sign > 0 { '+' } else { '-' }, side as u8);
    m.pairs = m.pairs.iter().map(|&(a, b)| (b, a)).collect();
    m.source = source;
    m.target = target;
    debug_assert_eq!(m.source, *d);
    Ok(m)
}

/// Circle-state data for crossings `p1`, `p2` forming a Reidemeister II
/// bigon: (crossing that is 1 in the circle state, crossing that is 0, u, v).
fn bigon(d: &Diagram, p1: usize, p2: usize) -> Result<(usize, usize, ArcId, ArcId)> {
    if p1 == p2 || p1 >= d.n_crossings() || p2 >= d.n_crossings() {
        return Err(invalid("R2 needs two distinct crossings"));
    }
    let (c1, c2) = (d.crossing(p1), d.crossing(p2));
    if c1.sign == c2.sign {
        return Err(invalid("R2 crossings must have opposite signs"));
    }
    let ends = |a: ArcId| (d.tail(a).map(|e| e.crossing as usize), d.head(a).map(|e| e.crossing as usize));
    let mut shared: Vec<ArcId> = (0..d.n_arcs() as ArcId)
        .filter(|&a| {
            let (t, h) = ends(a);
            (t == Some(p1) && h == Some(p2)) || (t == Some(p2) && h == Some(p1))
        })
        .collect();
    shared.dedup();
    let over = |a: ArcId| -> bool {
        let t = d.tail(a).unwrap();
        let c = d.crossing(t.crossing as usize);
        t.slot as usize % 2 == 1 && c.slots[t.slot as usize] == a
    };
    let paired = |c: &Crossing, b: u8, u: ArcId, v: ArcId| {
        crate::resolution::smoothing_pairs(&c.slots, b).iter().any(|&(x, y)| (x == u && y == v) || (x == v && y == u))
    };
    for i in 0..shared.len() {
        for j in i + 1..shared.len() {
            let (u, v) = (shared[i], shared[j]);
            let over_u = over(u) && d.head(u).is_some_and(|e| e.slot % 2 == 1);
            let under_u = !over(u) && d.head(u).is_some_and(|e| e.slot % 2 == 0);
            let over_v = over(v) && d.head(v).is_some_and(|e| e.slot % 2 == 1);
            let under_v = !over(v) && d.head(v).is_some_and(|e| e.slot % 2 == 0);
            if !((over_u && under_v) || (under_u && over_v)) {
                continue;
            }
            for b1 in 0..2u8 {
                let b2 = 1 - b1;
                if paired(c1, b1, u, v) && paired(c2, b2, u, v) {
                    return Ok(if b1 == 1 { (p1, p2, u, v) } else { (p2, p1, u, v) });
                }
            }
        }
    }
    Err(invalid(format!("crossings {p1} and {p2} do not form a Reidemeister II bigon")))
}

/// Cancels the Reidemeister II pair `p1`, `p2`.
pub fn r2_cancel(d: &Diagram, p1: usize, p2: usize) -> Result<ElementaryMove> {
    let (a, b, u, v) = bigon(d, p1, p2)?;
    let mut rm = [p1, p2];
    rm.sort_unstable();
    let (target, map) = splice_out(d, &rm)?;
    let pairs = (0..d.n_arcs() as ArcId).filter(|&x| x != u && x != v).map(|x| (x, map[x as usize])).collect();
    Ok(ElementaryMove {
        kind: MoveKind::R2Cancel,
        site: vec![p1 as u32, p2 as u32],
        source: d.clone(),
        target,
        local: Local::R2 { a, b, u },
        pairs,
        script: format!("r2cancel {p1} {p2}"),
    })
}

/// Reidemeister II introduction whose result is `k`, with `p1`, `p2` the
/// new pair.
pub fn r2_intro(k: &Diagram, p1: usize, p2: usize) -> Result<ElementaryMove> {
    let mut m = r2_cancel(k, p1, p2)?;
    let (target, source) = (m.source.clone(), m.target.clone());
    m.kind = MoveKind::R2Intro;
    m.script = format!("# r2intro producing pair {p1} {p2}");
    m.pairs = m.pairs.iter().map(|&(a, b)| (b, a)).collect();
    m.source = source;
    m.target = target;
    Ok(m)
}

/// Pushes arc `x` across the parallel arc `y` (y to the right of x), with
/// `x` passing over when `x_over`. The new pair is appended.
pub fn r2_intro_parallel(d: &Diagram, x: ArcId, y: ArcId, x_over: bool) -> Result<ElementaryMove> {
    let letters = if x_over { [-1, 1] } else { [1, -1] };
    let k = d.insert_braid(&[x, y], &letters)?;
    let n = k.n_crossings();
    let mut m = r2_intro(&k, n - 2, n - 1)?;
    m.script = format!("r2intro {x} {y} {}", if x_over { "over" } else { "under" });
    Ok(m)
}

/// Builds the composite of a move script applied to `d`, one move per line:
/// `birth`, `death A`, `saddle X Y`, `r1remove P`, `r1intro A +|- 0|1`,
/// `r2cancel P Q`, `r2intro X Y over|under`, and `unkink P` (a positive
/// crossing removed by a saddle and a kink removal). `#` starts a comment.
pub fn run_script(d: &Diagram, text: &str) -> Result<ChainMap> {
    let mut maps = Vec::new();
    let mut cur = d.clone();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |m: &str| Error::Parse(format!("move script line {}: {m}", ln + 1));
        let toks: Vec<&str> = line.split_whitespace().collect();
        let num = |i: usize| -> Result<u32> {
            toks.get(i).ok_or_else(|| bad("missing argument"))?.parse::<u32>().map_err(|e| bad(&e.to_string()))
        };
        let m = match toks[0] {
            "birth" => elementary_map(birth(&cur)?),
            "death" => elementary_map(death(&cur, num(1)?)?),
            "saddle" => elementary_map(saddle(&cur, num(1)?, num(2)?)?),
            "r1remove" => elementary_map(r1_remove(&cur, num(1)? as usize)?),
            "r1intro" => {
                let sign = match toks.get(2) {
                    Some(&"+") => 1,
                    Some(&"-") => -1,
                    _ => return Err(bad("r1intro sign must be + or -")),
                };
                elementary_map(r1_intro(&cur, num(1)?, sign, num(3)? != 0)?)
            }
            "r2cancel" => elementary_map(r2_cancel(&cur, num(1)? as usize, num(2)? as usize)?),
            "r2intro" => {
                let over = match toks.get(3) {
                    Some(&"over") => true,
                    Some(&"under") => false,
                    _ => return Err(bad("r2intro needs over or under")),
                };
                elementary_map(r2_intro_parallel(&cur, num(1)?, num(2)?, over)?)
            }
            "unkink" => positive_crossing_removal(&cur, num(1)? as usize)?,
            other => return Err(bad(&format!("unknown move '{other}'"))),
        };
        cur = m.target.clone();
        maps.push(m);
    }
    if maps.is_empty() {
        return Ok(ChainMap::identity(d));
    }
    compose(maps)
}

impl ElementaryMove {
    /// Image of one generator.
    fn image(&self, g: Gen, out: &mut Vec<(Gen, i64)>) {
        out.clear();
        let (sd, td) = (&self.source, &self.target);
        let (ns, nt) = (sd.n_crossings(), td.n_crossings());
        match self.local {
            Local::Birth { circle } => {
                let (sl, tl) = (labels(sd, g.state), labels(td, g.state));
                let p = transfer(&sl, &tl, &self.pairs, g.plus, 0) | bit(tl[circle as usize]);
                out.push((Gen { state: g.state, plus: p }, 1));
            }
            Local::Death { circle } => {
                let (sl, tl) = (labels(sd, g.state), labels(td, g.state));
                let o = sl[circle as usize];
                if g.plus & bit(o) == 0 {
                    out.push((Gen { state: g.state, plus: transfer(&sl, &tl, &self.pairs, g.plus, 0) }, 1));
                }
            }
            Local::Saddle { x, y } => {
                let (sl, tl) = (labels(sd, g.state), labels(td, g.state));
                let (lx, ly) = (sl[x as usize], sl[y as usize]);
                let base = transfer(&sl, &tl, &self.pairs, g.plus, bit(lx) | bit(ly));
                let px = g.plus & bit(lx) != 0;
                let st = g.state;
                if lx != ly {
                    let py = g.plus & bit(ly) != 0;
                    let c = bit(tl[x as usize]);
                    match (px, py) {
                        (true, true) => out.push((Gen { state: st, plus: base | c }, 1)),
                        (true, false) | (false, true) => out.push((Gen { state: st, plus: base }, 1)),
                        (false, false) => {}
                    }
                } else {
                    let (c1, c2) = (bit(tl[x as usize]), bit(tl[y as usize]));
                    if px {
                        out.push((Gen { state: st, plus: base | c1 }, 1));
                        out.push((Gen { state: st, plus: base | c2 }, 1));
                    } else {
                        out.push((Gen { state: st, plus: base }, 1));
                    }
                }
            }
            Local::R1 { p, small, strand } => match self.kind {
                MoveKind::R1PlusRemove | MoveKind::R1MinusRemove => {
                    let b = (g.state >> p & 1) as u8;
                    let want = if self.kind == MoveKind::R1PlusRemove { 0 } else { 1 };
                    if b != want {
                        return;
                    }
                    let sl = labels(sd, g.state);
                    let (ts, eps) = delete_bits(g.state, ns, &[p]);
                    let tl = labels(td, ts);
                    let o = sl[small as usize];
                    let m = sl[strand as usize];
                    let o_plus = g.plus & bit(o) != 0;
                    if self.kind == MoveKind::R1PlusRemove {
                        if !o_plus {
                            out.push((Gen { state: ts, plus: transfer(&sl, &tl, &self.pairs, g.plus, 0) }, eps));
                        }
                    } else if o_plus {
                        out.push((Gen { state: ts, plus: transfer(&sl, &tl, &self.pairs, g.plus, 0) }, eps));
                    } else if g.plus & bit(m) != 0 {
                        out.push((Gen { state: ts, plus: transfer(&sl, &tl, &self.pairs, g.plus, bit(m)) }, -eps));
                    }
                }
                _ => {
                    let b = if self.kind == MoveKind::R1PlusIntro { 0 } else { 1 };
                    let (ts, eps) = insert_bits(g.state, nt, &[(p, b)]);
                    let sl = labels(sd, g.state);
                    let tl = labels(td, ts);
                    let base = transfer(&sl, &tl, &self.pairs, g.plus, 0);
                    let o = bit(tl[small as usize]);
                    let m = bit(tl[strand as usize]);
                    if b == 1 {
                        out.push((Gen { state: ts, plus: base | o }, eps));
                    } else {
                        out.push((Gen { state: ts, plus: base & !o }, eps));
                        if base & m != 0 {
                            out.push((Gen { state: ts, plus: (base & !m) | o }, -eps));
                        }
                    }
                }
            },
            Local::R2 { a, b, u } => {
                let mut buf = Vec::new();
                if self.kind == MoveKind::R2Cancel {
                    let la = g.state >> a & 1;
                    let lb = g.state >> b & 1;
                    let mut del = [a, b];
                    del.sort_unstable();
                    match (la, lb) {
                        (0, 1) => {
                            let sl = labels(sd, g.state);
                            let (ts, eps) = delete_bits(g.state, ns, &del);
                            let tl = labels(td, ts);
                            out.push((Gen { state: ts, plus: transfer(&sl, &tl, &self.pairs, g.plus, 0) }, eps));
                        }
                        (1, 0) => {
                            let sc = labels(sd, g.state);
                            let o = sc[u as usize];
                            if g.plus & bit(o) != 0 {
                                return;
                            }
                            let s00 = g.state & !(1 << a);
                            let l00 = labels(sd, s00);
                            let same: Vec<(ArcId, ArcId)> = self.pairs.iter().map(|&(x, _)| (x, x)).collect();
                            let xplus = transfer(&sc, &l00, &same, g.plus, bit(o));
                            let s01 = s00 | 1 << b;
                            let l01 = labels(sd, s01);
                            let n00 = l00.iter().copied().max().map_or(0, |m| m as usize + 1);
                            let l00b: Vec<u8> = l00.iter().map(|&x| x as u8).collect();
                            let l01b: Vec<u8> = l01.iter().map(|&x| x as u8).collect();
                            let reps = loop_reps(&l00b, n00);
                            edge_map(&sd.crossing(b).slots, &l00b, &reps, &l01b, xplus, EdgeKind::D, &mut buf);
                            let sig = edge_sign(s00, a) * edge_sign(s00, b);
                            let (ts, eps) = delete_bits(s01, ns, &del);
                            let tl = labels(td, ts);
                            for &m in &buf {
                                out.push((Gen { state: ts, plus: transfer(&l01, &tl, &self.pairs, m, 0) }, -sig * eps));
                            }
                        }
                        _ => {}
                    }
                } else {
                    let mut ins = [(a, 0u8), (b, 1u8)];
                    ins.sort_unstable();
                    let (s_par, eps) = insert_bits(g.state, nt, &ins);
                    let sl = labels(sd, g.state);
                    let lp = labels(td, s_par);
                    let wplus = transfer(&sl, &lp, &self.pairs, g.plus, 0);
                    out.push((Gen { state: s_par, plus: wplus }, eps));
                    let s11 = s_par | 1 << a;
                    let l11 = labels(td, s11);
                    let np = lp.iter().copied().max().map_or(0, |m| m as usize + 1);
                    let lpb: Vec<u8> = lp.iter().map(|&x| x as u8).collect();
                    let l11b: Vec<u8> = l11.iter().map(|&x| x as u8).collect();
                    let reps = loop_reps(&lpb, np);
                    edge_map(&td.crossing(a).slots, &lpb, &reps, &l11b, wplus, EdgeKind::D, &mut buf);
                    let s_c = s11 & !(1 << b);
                    let lc = labels(td, s_c);
                    let o = bit(lc[u as usize]);
                    let same: Vec<(ArcId, ArcId)> = self.pairs.iter().map(|&(_, y)| (y, y)).collect();
                    let sig = edge_sign(s_par, a) * edge_sign(s_c, b);
                    for &m in &buf {
                        let zc = transfer(&l11, &lc, &same, m, 0) | o;
                        out.push((Gen { state: s_c, plus: zc }, -sig * eps));
                    }
                }
            }
        }
    }

    pub fn apply(&self, c: &Chain) -> Chain {
        let mut out = Chain::zero(self.target.n_crossings());
        let mut buf = Vec::new();
        for (&g, &v) in &c.terms {
            self.image(g, &mut buf);
            for &(h, k) in &buf {
                out.add(h, k * v);
            }
        }
        out
    }
}

/// A chain map between the complexes of two diagrams, stored as the list of
/// elementary moves it is composed of.
#[derive(Clone, Debug)]
pub struct ChainMap {
    pub source: Diagram,
    pub target: Diagram,
    pub q_shift: i64,
    moves: Vec<ElementaryMove>,
}

pub fn elementary_map(m: ElementaryMove) -> ChainMap {
    ChainMap { source: m.source.clone(), target: m.target.clone(), q_shift: m.q_shift(), moves: vec![m] }
}

/// Composite applying `maps` in order, first to last.
pub fn compose(maps: Vec<ChainMap>) -> Result<ChainMap> {
    let mut it = maps.into_iter();
    let Some(mut acc) = it.next() else {
        return Err(invalid("empty composition has no diagram; use ChainMap::identity"));
    };
    for m in it {
        if m.source != acc.target {
            return Err(invalid("composed maps do not share a complex"));
        }
        acc.target = m.target;
        acc.q_shift += m.q_shift;
        acc.moves.extend(m.moves);
    }
    Ok(acc)
}

impl ChainMap {
    pub fn identity(d: &Diagram) -> ChainMap {
        ChainMap { source: d.clone(), target: d.clone(), q_shift: 0, moves: Vec::new() }
    }

    pub fn moves(&self) -> &[ElementaryMove] {
        &self.moves
    }

    /// The composite as a move script, one elementary move per line.
    pub fn script(&self) -> String {
        self.moves.iter().map(|m| format!("{}\n", m.script)).collect()
    }

    /// Height change: homological degree is preserved, so heights move by
    /// the change in negative crossings.
    pub fn height_shift(&self) -> i64 {
        self.target.counts().1 as i64 - self.source.counts().1 as i64
    }

    pub fn apply(&self, c: &Chain) -> Chain {
        let mut cur = c.clone();
        for m in &self.moves {
            cur = m.apply(&cur);
        }
        cur
    }

    /// Matrix from height `h` of the source to the matching target height,
    /// rows and columns in `generator_order`.
    pub fn matrix(&self, h: usize) -> Result<SparseMat> {
        let th = h as i64 + self.height_shift();
        let rows = generator_order(&self.source, h);
        if th < 0 || th as usize > self.target.n_crossings() {
            return Ok(SparseMat::from_triplets(rows.len(), 0, std::iter::empty()));
        }
        let cols = generator_order(&self.target, th as usize);
        let index: HashMap<Gen, u32> = cols.iter().enumerate().map(|(i, &g)| (g, i as u32)).collect();
        let mut trip = Vec::new();
        for (r, &g) in rows.iter().enumerate() {
            let img = self.apply(&Chain::from_gen(self.source.n_crossings(), g));
            for (h, v) in img.terms {
                let c = *index.get(&h).ok_or_else(|| Error::Inconsistent("image outside the target complex".into()))?;
                trip.push((r as u32, c, v));
            }
        }
        Ok(SparseMat::from_triplets(rows.len(), cols.len(), trip))
    }

    /// Checks `f d = d f` and the quantum shift on every source generator.
    pub fn commutes_with_d(&self) -> Result<bool> {
        let n = self.source.n_crossings();
        for h in 0..=n {
            for g in generator_order(&self.source, h) {
                let c = Chain::from_gen(n, g);
                let lhs = self.apply(&apply_d(&c, &self.source));
                let img = self.apply(&c);
                let rhs = apply_d(&img, &self.target);
                if lhs != rhs {
                    return Ok(false);
                }
                let want = grading_of(&self.source, g);
                for b in img.gradings(&self.target) {
                    if b.t != want.t || b.q != want.q + self.q_shift {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }
}

fn grading_of(d: &Diagram, g: Gen) -> Bigrading {
    Chain::from_gen(d.n_crossings(), g).gradings(d)[0]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Projection {
    Plus,
    Minus,
    Fail,
}

impl fmt::Display for Projection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Projection::Plus => "plus",
            Projection::Minus => "minus",
            Projection::Fail => "fail",
        })
    }
}

/// Applies `psi` to `lifted` and compares with `base` up to sign.
pub fn verify_projection(psi: &ChainMap, lifted: &Chain, base: &Chain) -> Result<Projection> {
    let gl = lifted.gradings(&psi.source);
    let gb = base.gradings(&psi.target);
    if let ([x], [y]) = (gl.as_slice(), gb.as_slice()) {
        if x.t != y.t || x.q + psi.q_shift != y.q {
            return Err(invalid(format!("grading mismatch: {x} shifted by {} vs {y}", psi.q_shift)));
        }
    } else {
        return Err(invalid("chains must be nonzero and homogeneous"));
    }
    let img = psi.apply(lifted);
    Ok(if img == *base {
        Projection::Plus
    } else if img == base.scaled(-1) {
        Projection::Minus
    } else {
        Projection::Fail
    })
}

/// Map undoing a positive crossing `c`: a saddle between its two western
/// arms turns it into a kink, which is then removed.
pub fn positive_crossing_removal(d: &Diagram, c: usize) -> Result<ChainMap> {
    let x = d.crossing(c);
    if x.sign < 0 {
        return Err(invalid(format!("crossing {c} is negative")));
    }
    let s = saddle(d, x.slots[2], x.slots[3])?;
    let r = r1_remove(&s.target, c)?;
    compose(vec![elementary_map(s), elementary_map(r)])
}
