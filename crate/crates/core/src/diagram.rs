//! Oriented planar link diagrams.
//!
//! A crossing stores its four arcs counterclockwise starting at the incoming
//! under-strand. Slot 0 is always incoming and slot 2 outgoing; the over-strand
//! enters at slot 3 for a positive crossing and at slot 1 for a negative one.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::error::{Error, Result};

pub type ArcId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Crossing {
    pub slots: [ArcId; 4],
    pub sign: i8,
}

impl Crossing {
    pub fn new(slots: [ArcId; 4], sign: i8) -> Crossing {
        assert!(sign == 1 || sign == -1);
        Crossing { slots, sign }
    }

    /// Whether slot `s` is an incoming end.
    #[inline]
    pub fn incoming(&self, s: usize) -> bool {
        match s {
            0 => true,
            2 => false,
            1 => self.sign < 0,
            _ => self.sign > 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BraidWord {
    pub strands: usize,
    pub letters: Vec<i32>,
}

impl BraidWord {
    pub fn new(strands: usize, letters: Vec<i32>) -> Result<BraidWord> {
        if strands == 0 {
            return Err(Error::Invalid("braid needs at least one strand".into()));
        }
        for &l in &letters {
            if l == 0 || l.unsigned_abs() as usize >= strands {
                return Err(Error::BraidIndex { letter: l, strands });
            }
        }
        Ok(BraidWord { strands, letters })
    }

    /// Parses `s=<strands> l1 l2 ...` (commas allowed as separators).
    pub fn parse(text: &str) -> Result<BraidWord> {
        let mut strands = None;
        let mut letters = Vec::new();
        for tok in text.split(|c: char| c.is_whitespace() || c == ',') {
            if tok.is_empty() {
                continue;
            }
            if let Some(v) = tok.strip_prefix("s=") {
                strands = Some(v.parse::<usize>().map_err(|e| Error::Parse(format!("{tok}: {e}")))?);
            } else {
                letters.push(tok.parse::<i32>().map_err(|e| Error::Parse(format!("{tok}: {e}")))?);
            }
        }
        let strands = match strands {
            Some(s) => s,
            None => letters.iter().map(|l| l.unsigned_abs() as usize + 1).max().unwrap_or(1),
        };
        BraidWord::new(strands, letters)
    }

    /// Strand permutation: `perm[i]` is the bottom position that ends at top position `i`.
    pub fn permutation(&self) -> Vec<usize> {
        let mut at: Vec<usize> = (0..self.strands).collect();
        for &l in &self.letters {
            let j = l.unsigned_abs() as usize - 1;
            at.swap(j, j + 1);
        }
        at
    }

    pub fn inverse(&self) -> BraidWord {
        BraidWord { strands: self.strands, letters: self.letters.iter().rev().map(|l| -l).collect() }
    }
}

impl fmt::Display for BraidWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s={}", self.strands)?;
        for l in &self.letters {
            write!(f, " {l}")?;
        }
        Ok(())
    }
}

/// Where an arc end sits: crossing index and slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct End {
    pub crossing: u32,
    pub slot: u8,
}

#[derive(Clone, Debug)]
pub struct Diagram {
    crossings: Vec<Crossing>,
    n_arcs: u32,
    free: Vec<ArcId>,
    head: Vec<Option<End>>,
    tail: Vec<Option<End>>,
    components: Vec<Vec<ArcId>>,
    right_face: Vec<u32>,
    left_face: Vec<u32>,
    n_faces: u32,
    braid: Option<BraidWord>,
}

impl PartialEq for Diagram {
    fn eq(&self, other: &Self) -> bool {
        self.crossings == other.crossings && self.n_arcs == other.n_arcs && self.free == other.free
    }
}
impl Eq for Diagram {}

impl Diagram {
    /// Builds a diagram from crossings whose slots already follow the
    /// convention. Arc ids must be `0..n_arcs`; `free` lists crossingless loops.
    pub fn from_parts(crossings: Vec<Crossing>, n_arcs: u32, free: Vec<ArcId>) -> Result<Diagram> {
        let n = n_arcs as usize;
        let mut head = vec![None; n];
        let mut tail = vec![None; n];
        for (ci, c) in crossings.iter().enumerate() {
            for s in 0..4 {
                let a = c.slots[s] as usize;
                if a >= n {
                    return Err(Error::Invalid(format!("arc id {a} out of range")));
                }
                let end = End { crossing: ci as u32, slot: s as u8 };
                let slot = if c.incoming(s) { &mut head[a] } else { &mut tail[a] };
                if slot.is_some() {
                    return Err(Error::Orientation(format!("arc {a} has two {} ends", if c.incoming(s) { "incoming" } else { "outgoing" })));
                }
                *slot = Some(end);
            }
        }
        let mut is_free = vec![false; n];
        for &a in &free {
            if a as usize >= n || is_free[a as usize] {
                return Err(Error::Invalid(format!("bad free loop arc {a}")));
            }
            is_free[a as usize] = true;
        }
        for a in 0..n {
            let used = head[a].is_some() as u8 + tail[a].is_some() as u8;
            if is_free[a] {
                if used != 0 {
                    return Err(Error::Invalid(format!("free loop arc {a} also meets a crossing")));
                }
            } else if used != 2 {
                return Err(Error::ArcCount { label: a as i64 + 1, count: used as usize });
            }
        }
        let mut d = Diagram {
            crossings,
            n_arcs,
            free,
            head,
            tail,
            components: Vec::new(),
            right_face: vec![u32::MAX; n],
            left_face: vec![u32::MAX; n],
            n_faces: 0,
            braid: None,
        };
        d.trace_components();
        d.trace_faces()?;
        Ok(d)
    }

    fn trace_components(&mut self) {
        let n = self.n_arcs as usize;
        let mut seen = vec![false; n];
        let mut comps = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut comp = Vec::new();
            let mut a = start;
            loop {
                seen[a] = true;
                comp.push(a as ArcId);
                match self.head[a] {
                    None => break,
                    Some(e) => {
                        let c = &self.crossings[e.crossing as usize];
                        a = c.slots[(e.slot as usize + 2) % 4] as usize;
                        if a == start {
                            break;
                        }
                    }
                }
            }
            comps.push(comp);
        }
        self.components = comps;
    }

    /// Dart walk: arrive at slot s, leave through slot s+1. The face traced
    /// lies to the right of each dart.
    fn trace_faces(&mut self) -> Result<()> {
        let n = self.n_arcs as usize;
        let mut nf = 0u32;
        let mut right = vec![u32::MAX; n];
        let mut left = vec![u32::MAX; n];
        for a0 in 0..n {
            if self.head[a0].is_none() {
                continue;
            }
            for fwd0 in [true, false] {
                let done = if fwd0 { right[a0] != u32::MAX } else { left[a0] != u32::MAX };
                if done {
                    continue;
                }
                let (mut a, mut fwd) = (a0, fwd0);
                loop {
                    let cell = if fwd { &mut right[a] } else { &mut left[a] };
                    if *cell != u32::MAX {
                        break;
                    }
                    *cell = nf;
                    let e = if fwd { self.head[a] } else { self.tail[a] }.unwrap();
                    let s2 = (e.slot as usize + 1) % 4;
                    let c = &self.crossings[e.crossing as usize];
                    a = c.slots[s2] as usize;
                    fwd = !c.incoming(s2);
                }
                nf += 1;
            }
        }
        self.right_face = right;
        self.left_face = left;
        self.n_faces = nf;
        // Euler characteristic per connected piece of the 4-valent graph.
        let nc = self.crossings.len();
        if nc > 0 {
            let mut uf = crate::uf::UnionFind::new(nc);
            for a in 0..n {
                if let (Some(h), Some(t)) = (self.head[a], self.tail[a]) {
                    uf.union(h.crossing as usize, t.crossing as usize);
                }
            }
            let mut verts: HashMap<usize, usize> = HashMap::new();
            let mut faces: HashMap<usize, std::collections::HashSet<u32>> = HashMap::new();
            for ci in 0..nc {
                *verts.entry(uf.find(ci)).or_default() += 1;
            }
            for a in 0..n {
                if let Some(h) = self.head[a] {
                    let r = uf.find(h.crossing as usize);
                    let fs = faces.entry(r).or_default();
                    fs.insert(self.right_face[a]);
                    fs.insert(self.left_face[a]);
                }
            }
            for (r, v) in verts {
                let f = faces.get(&r).map_or(0, |s| s.len());
                if f != v + 2 {
                    return Err(Error::NonPlanar(format!("{v} crossings bound {f} faces, expected {}", v + 2)));
                }
            }
        }
        Ok(())
    }

    pub fn unknot() -> Diagram {
        Diagram::from_parts(Vec::new(), 1, vec![0]).unwrap()
    }

    pub fn crossings(&self) -> &[Crossing] {
        &self.crossings
    }
    pub fn crossing(&self, i: usize) -> &Crossing {
        &self.crossings[i]
    }
    pub fn n_crossings(&self) -> usize {
        self.crossings.len()
    }
    pub fn n_arcs(&self) -> usize {
        self.n_arcs as usize
    }
    pub fn free_loops(&self) -> &[ArcId] {
        &self.free
    }
    pub fn head(&self, a: ArcId) -> Option<End> {
        self.head[a as usize]
    }
    pub fn tail(&self, a: ArcId) -> Option<End> {
        self.tail[a as usize]
    }
    /// Arc following `a` along its component.
    pub fn successor(&self, a: ArcId) -> ArcId {
        match self.head[a as usize] {
            None => a,
            Some(e) => self.crossings[e.crossing as usize].slots[(e.slot as usize + 2) % 4],
        }
    }
    pub fn components(&self) -> &[Vec<ArcId>] {
        &self.components
    }
    pub fn n_components(&self) -> usize {
        self.components.len()
    }
    pub fn component_of(&self, a: ArcId) -> usize {
        self.components.iter().position(|c| c.contains(&a)).unwrap()
    }
    /// Face to the right of `a`; `u32::MAX` on a free loop.
    pub fn right_face(&self, a: ArcId) -> u32 {
        self.right_face[a as usize]
    }
    /// Face to the left of `a`; `u32::MAX` on a free loop.
    pub fn left_face(&self, a: ArcId) -> u32 {
        self.left_face[a as usize]
    }
    pub fn n_faces(&self) -> usize {
        self.n_faces as usize
    }
    pub fn braid(&self) -> Option<&BraidWord> {
        self.braid.as_ref()
    }
    pub fn with_braid(mut self, b: BraidWord) -> Diagram {
        self.braid = Some(b);
        self
    }

    pub fn counts(&self) -> (usize, usize) {
        let p = self.crossings.iter().filter(|c| c.sign > 0).count();
        (p, self.crossings.len() - p)
    }
    pub fn writhe(&self) -> i64 {
        self.crossings.iter().map(|c| c.sign as i64).sum()
    }

    pub fn mirror(&self) -> Diagram {
        let cs = self
            .crossings
            .iter()
            .map(|c| {
                let [a, b, cc, d] = c.slots;
                if c.sign > 0 {
                    Crossing::new([d, a, b, cc], -1)
                } else {
                    Crossing::new([b, cc, d, a], 1)
                }
            })
            .collect();
        let mut m = Diagram::from_parts(cs, self.n_arcs, self.free.clone()).expect("mirror of a valid diagram");
        m.braid = self.braid.as_ref().map(|b| BraidWord { strands: b.strands, letters: b.letters.iter().map(|l| -l).collect() });
        m
    }

    /// Closure of a braid. Strand positions run west to east, the braid runs
    /// north, letter `+i` is a positive crossing between positions i and i+1.
    pub fn from_braid(w: &BraidWord) -> Result<Diagram> {
        let w = BraidWord::new(w.strands, w.letters.clone())?;
        let k = w.strands;
        let mut next: u32 = k as u32;
        let mut cur: Vec<u32> = (0..k as u32).collect();
        let mut cs = Vec::with_capacity(w.letters.len());
        for &l in &w.letters {
            let (c, ol, or) = braid_crossing(&mut next, &cur, l);
            let j = l.unsigned_abs() as usize - 1;
            cur[j] = ol;
            cur[j + 1] = or;
            cs.push(c);
        }
        // close up: top of position i continues as bottom arc i
        let mut rename: Vec<u32> = (0..next).collect();
        let mut free = Vec::new();
        for i in 0..k {
            if cur[i] == i as u32 {
                free.push(i as u32);
            } else {
                rename[i] = cur[i];
            }
        }
        for c in &mut cs {
            for s in &mut c.slots {
                *s = rename[*s as usize];
            }
        }
        let (cs, n, free) = compact(cs, next, free);
        Ok(Diagram::from_parts(cs, n, free)?.with_braid(w))
    }

    /// Relabels arcs consecutively along each component (components in order
    /// of their least arc), keeping crossing order.
    pub fn canonical(&self) -> Diagram {
        let n = self.n_arcs as usize;
        let mut lab = vec![u32::MAX; n];
        let mut next = 0;
        for a in 0..n {
            if lab[a] != u32::MAX {
                continue;
            }
            let mut b = a as ArcId;
            loop {
                lab[b as usize] = next;
                next += 1;
                b = self.successor(b);
                if b as usize == a {
                    break;
                }
            }
        }
        let cs = self
            .crossings
            .iter()
            .map(|c| Crossing::new(c.slots.map(|s| lab[s as usize]), c.sign))
            .collect();
        let free = self.free.iter().map(|&a| lab[a as usize]).collect();
        let mut d = Diagram::from_parts(cs, self.n_arcs, free).unwrap();
        d.braid = self.braid.clone();
        d
    }

    /// KnotTheory-style PD text with 1-based labels, canonical numbering.
    pub fn to_pd(&self) -> String {
        let d = self.canonical();
        let mut parts: Vec<String> = d
            .crossings
            .iter()
            .map(|c| format!("X[{},{},{},{}]", c.slots[0] + 1, c.slots[1] + 1, c.slots[2] + 1, c.slots[3] + 1))
            .collect();
        for &a in &d.free {
            parts.push(format!("Loop[{}]", a + 1));
        }
        let s = format!("PD[{}]", parts.join(", "));
        // Components that never pass under rely on the numbering rule, which
        // cannot orient every two-arc component; flag those explicitly.
        match parse_pd(&s) {
            Ok(p) if p == d => s,
            _ => {
                // free loops carry no flag
                let flags: Vec<String> = d
                    .components()
                    .iter()
                    .filter(|comp| d.head(comp[0]).is_some())
                    .map(|comp| {
                        let a = comp[0];
                        let reparsed = parse_pd(&s).ok();
                        let same = reparsed.is_none_or(|p| p.head(a) == d.head(a));
                        if same { "1".to_string() } else { "-1".to_string() }
                    })
                    .collect();
                format!("{s} Or[{}]", flags.join(","))
            }
        }
    }

    pub fn parse_pd(text: &str) -> Result<Diagram> {
        parse_pd(text)
    }

    /// Replaces the arcs `arcs` (west to east along a line crossing them, all
    /// pointing the same way) by a braid on `arcs.len()` strands. Every
    /// original arc keeps its id as the part before the braid; new arcs are
    /// numbered from `n_arcs` and braid crossings are appended in letter order.
    pub fn insert_braid(&self, arcs: &[ArcId], letters: &[i32]) -> Result<Diagram> {
        let k = arcs.len();
        BraidWord::new(k.max(1), letters.to_vec())?;
        let mut seen = vec![false; self.n_arcs as usize];
        for &a in arcs {
            if a >= self.n_arcs || std::mem::replace(&mut seen[a as usize], true) {
                return Err(Error::Invalid(format!("bad site arc {a}")));
            }
        }
        let mut next = self.n_arcs;
        let mut cur: Vec<u32> = arcs.to_vec();
        let mut cs = self.crossings.clone();
        let mut added = Vec::with_capacity(letters.len());
        for &l in letters {
            let (c, ol, or) = braid_crossing(&mut next, &cur, l);
            let j = l.unsigned_abs() as usize - 1;
            cur[j] = ol;
            cur[j + 1] = or;
            added.push(c);
        }
        let mut rename: Vec<u32> = (0..next).collect();
        let mut free = self.free.clone();
        for (i, &e) in arcs.iter().enumerate() {
            if cur[i] == e {
                continue;
            }
            match self.head[e as usize] {
                Some(h) => cs[h.crossing as usize].slots[h.slot as usize] = cur[i],
                None => {
                    // a crossingless loop closes up through the braid
                    rename[cur[i] as usize] = e;
                    free.retain(|&f| f != e);
                }
            }
        }
        for c in &mut added {
            for s in &mut c.slots {
                *s = rename[*s as usize];
            }
        }
        cs.extend(added);
        let used: Vec<bool> = {
            let mut u = vec![false; next as usize];
            for c in &cs {
                for &s in &c.slots {
                    u[s as usize] = true;
                }
            }
            for &f in &free {
                u[f as usize] = true;
            }
            u
        };
        // drop ids freed by closing loops, keeping the order of the rest
        let mut map = vec![u32::MAX; next as usize];
        let mut m = 0;
        for a in 0..next as usize {
            if used[a] {
                map[a] = m;
                m += 1;
            }
        }
        for c in &mut cs {
            for s in &mut c.slots {
                *s = map[*s as usize];
            }
        }
        let free = free.iter().map(|&f| map[f as usize]).collect();
        Diagram::from_parts(cs, m, free)
    }
}

impl fmt::Display for Diagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_pd())
    }
}

/// Makes one braid crossing between positions j, j+1 (1-based `l`).
/// Returns the crossing and the new arcs at positions j and j+1.
pub(crate) fn braid_crossing(next: &mut u32, cur: &[u32], l: i32) -> (Crossing, u32, u32) {
    let j = l.unsigned_abs() as usize - 1;
    let (sw, se) = (cur[j], cur[j + 1]);
    let nw = *next;
    let ne = *next + 1;
    *next += 2;
    let c = if l > 0 { Crossing::new([se, ne, nw, sw], 1) } else { Crossing::new([sw, se, ne, nw], -1) };
    (c, nw, ne)
}

/// Renumbers arcs densely in order of first use.
pub(crate) fn compact(mut cs: Vec<Crossing>, n: u32, mut free: Vec<ArcId>) -> (Vec<Crossing>, u32, Vec<ArcId>) {
    let mut map = vec![u32::MAX; n as usize];
    let mut next = 0u32;
    let mut get = |a: u32, map: &mut Vec<u32>| {
        if map[a as usize] == u32::MAX {
            map[a as usize] = next;
            next += 1;
        }
        map[a as usize]
    };
    for c in &mut cs {
        for s in &mut c.slots {
            *s = get(*s, &mut map);
        }
    }
    for a in &mut free {
        *a = get(*a, &mut map);
    }
    (cs, next, free)
}

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

/// Reads the integers of a bracketed list starting right after `[`.
fn read_list(s: &[u8], mut i: usize) -> Result<(Vec<i64>, usize)> {
    let mut out = Vec::new();
    let mut cur = String::new();
    while i < s.len() {
        let ch = s[i] as char;
        match ch {
            ']' => {
                if !cur.trim().is_empty() {
                    out.push(cur.trim().parse().map_err(|_| parse_err(format!("bad integer '{}'", cur.trim())))?);
                }
                return Ok((out, i + 1));
            }
            ',' => {
                out.push(cur.trim().parse().map_err(|_| parse_err(format!("bad integer '{}'", cur.trim())))?);
                cur.clear();
            }
            '0'..='9' | '-' | '+' | ' ' | '\t' | '\n' | '\r' => cur.push(ch),
            _ => return Err(parse_err(format!("unexpected '{ch}' in list"))),
        }
        i += 1;
    }
    Err(parse_err("unterminated list"))
}

struct RawPd {
    xs: Vec<[i64; 4]>,
    loops: Vec<i64>,
    or: Vec<i64>,
}

fn lex_pd(text: &str) -> Result<RawPd> {
    let cleaned: String = text.lines().filter(|l| !l.trim_start().starts_with('#')).collect::<Vec<_>>().join("\n");
    let s = cleaned.trim().as_bytes();
    let mut raw = RawPd { xs: Vec::new(), loops: Vec::new(), or: Vec::new() };
    if s.is_empty() {
        return Err(parse_err("empty input"));
    }
    // bare nested list form [[a,b,c,d],...]
    if s[0] == b'[' {
        let mut i = 1;
        loop {
            while i < s.len() && (s[i] as char).is_whitespace() || (i < s.len() && s[i] == b',') {
                i += 1;
            }
            if i >= s.len() {
                return Err(parse_err("unterminated list"));
            }
            if s[i] == b']' {
                i += 1;
                break;
            }
            if s[i] != b'[' {
                return Err(parse_err("expected '['"));
            }
            let (v, j) = read_list(s, i + 1)?;
            if v.len() != 4 {
                return Err(parse_err(format!("crossing with {} entries", v.len())));
            }
            raw.xs.push([v[0], v[1], v[2], v[3]]);
            i = j;
        }
        if s[i..].iter().any(|c| !(*c as char).is_whitespace()) {
            return Err(parse_err("trailing input"));
        }
        return Ok(raw);
    }
    let mut i = 0;
    let mut depth = 0usize;
    let mut saw_pd = false;
    while i < s.len() {
        let rest = &s[i..];
        if rest.starts_with(b"PD[") {
            if saw_pd {
                return Err(parse_err("nested PD"));
            }
            saw_pd = true;
            depth += 1;
            i += 3;
        } else if rest.starts_with(b"X[") {
            let (v, j) = read_list(s, i + 2)?;
            if v.len() != 4 {
                return Err(parse_err(format!("crossing with {} entries", v.len())));
            }
            raw.xs.push([v[0], v[1], v[2], v[3]]);
            i = j;
        } else if rest.starts_with(b"Loop[") {
            let (v, j) = read_list(s, i + 5)?;
            if v.len() != 1 {
                return Err(parse_err("Loop takes one label"));
            }
            raw.loops.push(v[0]);
            i = j;
        } else if rest.starts_with(b"Or[") {
            let (v, j) = read_list(s, i + 3)?;
            if v.iter().any(|x| *x != 1 && *x != -1) {
                return Err(parse_err("Or flags must be 1 or -1"));
            }
            raw.or = v;
            i = j;
        } else {
            let ch = s[i] as char;
            match ch {
                ']' if depth > 0 => depth -= 1,
                ',' | ' ' | '\t' | '\n' | '\r' => {}
                _ => return Err(parse_err(format!("unexpected '{ch}'"))),
            }
            i += 1;
        }
    }
    if !saw_pd {
        return Err(parse_err("missing PD[...]"));
    }
    if depth != 0 {
        return Err(parse_err("unbalanced brackets"));
    }
    Ok(raw)
}

pub fn parse_pd(text: &str) -> Result<Diagram> {
    let raw = lex_pd(text)?;
    if raw.xs.is_empty() && raw.loops.is_empty() {
        return Ok(Diagram::unknot());
    }
    let mut occ: BTreeMap<i64, Vec<(usize, usize)>> = BTreeMap::new();
    for (ci, x) in raw.xs.iter().enumerate() {
        for (s, &l) in x.iter().enumerate() {
            occ.entry(l).or_default().push((ci, s));
        }
    }
    for (&l, v) in &occ {
        if v.len() != 2 {
            return Err(Error::ArcCount { label: l, count: v.len() });
        }
    }
    for &l in &raw.loops {
        if occ.contains_key(&l) {
            return Err(Error::ArcCount { label: l, count: 3 });
        }
    }
    let labels: Vec<i64> = occ.keys().copied().collect();
    let index: HashMap<i64, usize> = labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    let n = labels.len();
    // partner slot of an occurrence along the strand: (c, s) <-> (c, s+2)
    // head_occ[a]: which of the two occurrences of arc a is its incoming end.
    let mut comp_of = vec![usize::MAX; n];
    let mut comps: Vec<Vec<(usize, usize)>> = Vec::new(); // (arc, head occurrence index)
    for start in 0..n {
        if comp_of[start] != usize::MAX {
            continue;
        }
        let cid = comps.len();
        let mut seq = Vec::new();
        let (mut a, mut h) = (start, 1usize);
        loop {
            comp_of[a] = cid;
            seq.push((a, h));
            let (c, s) = occ[&labels[a]][h];
            let x = raw.xs[c][(s + 2) % 4];
            let b = index[&x];
            let pos = occ[&x].iter().position(|&o| o == (c, (s + 2) % 4)).unwrap();
            // arc b leaves through (c, s+2); its head is the other occurrence
            let hb = 1 - pos;
            if b == start {
                if hb != 1 {
                    return Err(Error::Orientation(format!("arc {} traversed both ways", labels[start])));
                }
                break;
            }
            if comp_of[b] == cid {
                return Err(Error::Orientation(format!("arc {} revisited", x)));
            }
            a = b;
            h = hb;
        }
        comps.push(seq);
    }
    // orient each component from under-strand evidence, else the numbering rule
    let mut head_occ = vec![0usize; n];
    for (cid, seq) in comps.iter().enumerate() {
        let mut votes = (0, 0);
        for &(a, h) in seq {
            for (k, &(_, s)) in occ[&labels[a]].iter().enumerate() {
                let is_head = k == h;
                if s == 0 {
                    if is_head { votes.0 += 1 } else { votes.1 += 1 }
                } else if s == 2 {
                    if is_head { votes.1 += 1 } else { votes.0 += 1 }
                }
            }
        }
        let keep = if votes.0 > 0 && votes.1 > 0 {
            return Err(Error::Orientation(format!("component {cid} has conflicting under-strand directions")));
        } else if votes.0 > 0 {
            true
        } else if votes.1 > 0 {
            false
        } else {
            // over-only component: KnotTheory numbering rule at its first crossing
            let (a, h) = seq[0];
            let (c, s) = occ[&labels[a]][h];
            let x = &raw.xs[c];
            let (j, l) = (x[1], x[3]);
            let l_to_j = j - l == 1 || l - j > 1;
            // our traversal enters at slot s
            (s == 3) == l_to_j
        };
        for &(a, h) in seq {
            head_occ[a] = if keep { h } else { 1 - h };
        }
    }
    // component order by least label, for Or flags
    let mut comp_order: Vec<usize> = (0..comps.len()).collect();
    comp_order.sort_by_key(|&c| comps[c].iter().map(|&(a, _)| a).min().unwrap());
    let mut reversed = vec![false; comps.len()];
    if !raw.or.is_empty() {
        if raw.or.len() != comps.len() {
            return Err(parse_err(format!("Or has {} flags for {} components", raw.or.len(), comps.len())));
        }
        for (k, &c) in comp_order.iter().enumerate() {
            if raw.or[k] < 0 {
                reversed[c] = true;
                for &(a, _) in &comps[c] {
                    head_occ[a] = 1 - head_occ[a];
                }
            }
        }
    }
    let mut cs = Vec::with_capacity(raw.xs.len());
    for (ci, x) in raw.xs.iter().enumerate() {
        let ar: Vec<usize> = x.iter().map(|l| index[l]).collect();
        let is_head = |s: usize| -> bool {
            let a = ar[s];
            occ[&labels[a]][head_occ[a]] == (ci, s)
        };
        let mut slots = [ar[0] as u32, ar[1] as u32, ar[2] as u32, ar[3] as u32];
        let mut rot = 0;
        if !is_head(0) {
            if reversed[comp_of[ar[0]]] && is_head(2) {
                rot = 2;
            } else {
                return Err(Error::Orientation(format!("crossing {} does not start at an incoming under-strand", ci + 1)));
            }
        }
        let inc = |s: usize| is_head((s + rot) % 4);
        if inc(2) {
            return Err(Error::Orientation(format!("crossing {} under-strand enters twice", ci + 1)));
        }
        let sign = match (inc(1), inc(3)) {
            (false, true) => 1,
            (true, false) => -1,
            _ => return Err(Error::Orientation(format!("crossing {} over-strand is not oriented through", ci + 1))),
        };
        if rot == 2 {
            slots = [slots[2], slots[3], slots[0], slots[1]];
        }
        cs.push(Crossing::new(slots, sign));
    }
    let mut free = Vec::new();
    let mut n_arcs = n as u32;
    let mut loops = raw.loops.clone();
    loops.sort();
    for _ in &loops {
        free.push(n_arcs);
        n_arcs += 1;
    }
    Diagram::from_parts(cs, n_arcs, free)
}
