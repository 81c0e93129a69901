//! Quasipositive braids, braid-parallel sites, diagram surgery, lifting of
//! state cycles, and the families built on 9_42.

use std::fmt;

use crate::cobordism::{compose, elementary_map, positive_crossing_removal, r2_cancel, ChainMap};
use crate::complex::{EnhancedState, Mark};
use crate::diagram::{ArcId, Diagram};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::resolution::{resolve, State};
use crate::statecycle::{alpha_zero, seifert_cycle};

/// One factor `w · τ_i · w⁻¹`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QPFactor {
    pub omega: Vec<i32>,
    pub central: i32,
}

impl QPFactor {
    pub fn letters(&self) -> Vec<i32> {
        let mut v = self.omega.clone();
        v.push(self.central);
        v.extend(self.omega.iter().rev().map(|l| -l));
        v
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QPBraid {
    pub strands: usize,
    pub factors: Vec<QPFactor>,
    pub letters: Vec<i32>,
}

impl QPBraid {
    pub fn new(strands: usize, factors: Vec<QPFactor>) -> Result<QPBraid> {
        for f in &factors {
            if f.central <= 0 {
                return Err(Error::Parse(format!("central letter {} is not positive", f.central)));
            }
        }
        let letters: Vec<i32> = factors.iter().flat_map(|f| f.letters()).collect();
        crate::diagram::BraidWord::new(strands, letters.clone())?;
        Ok(QPBraid { strands, factors, letters })
    }

    /// Number of central positive crossings.
    pub fn k(&self) -> usize {
        self.factors.len()
    }

    /// `n` consecutive copies.
    pub fn power(&self, n: usize) -> QPBraid {
        let factors = (0..n).flat_map(|_| self.factors.iter().cloned()).collect();
        QPBraid::new(self.strands, factors).expect("copies of a valid braid")
    }

    /// Index in `letters` of each factor's central crossing.
    pub fn central_positions(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut at = 0;
        for f in &self.factors {
            out.push(at + f.omega.len());
            at += 2 * f.omega.len() + 1;
        }
        out
    }
}

impl fmt::Display for QPBraid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s={} ", self.strands)?;
        for x in &self.factors {
            let w: Vec<String> = x.omega.iter().map(|l| l.to_string()).collect();
            write!(f, "({} ; {})", w.join(" "), x.central)?;
        }
        Ok(())
    }
}

/// Parses `[s=<strands>] (w ; i)(w ; i)...` where `w` is a space separated
/// list of signed generator indices and `i` the positive central generator.
pub fn parse_qp(text: &str) -> Result<QPBraid> {
    let err = |m: String| Error::Parse(m);
    let mut rest = text.trim();
    let mut strands = None;
    if let Some(r) = rest.strip_prefix("s=") {
        let end = r.find(|c: char| !c.is_ascii_digit()).unwrap_or(r.len());
        strands = Some(r[..end].parse::<usize>().map_err(|e| err(format!("strand count: {e}")))?);
        rest = r[end..].trim_start();
    }
    let mut factors = Vec::new();
    while !rest.is_empty() {
        let body = rest.strip_prefix('(').ok_or_else(|| err(format!("expected '(' at '{rest}'")))?;
        let close = body.find(')').ok_or_else(|| err("unclosed factor".into()))?;
        let (inner, after) = (&body[..close], &body[close + 1..]);
        let (w, c) = inner.split_once(';').ok_or_else(|| err(format!("factor '{inner}' lacks ';'")))?;
        let omega = w
            .split(|ch: char| ch.is_whitespace() || ch == ',')
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<i32>().map_err(|e| err(format!("{t}: {e}"))))
            .collect::<Result<Vec<i32>>>()?;
        let central = c.trim().parse::<i32>().map_err(|e| err(format!("central '{}': {e}", c.trim())))?;
        if central <= 0 {
            return Err(err(format!("central letter {central} is not positive")));
        }
        if omega.contains(&0) {
            return Err(err("letter 0".into()));
        }
        factors.push(QPFactor { omega, central });
        rest = after.trim_start();
    }
    if factors.is_empty() {
        return Err(err("no factors".into()));
    }
    let need = factors.iter().flat_map(|f| f.omega.iter().chain([&f.central])).map(|l| l.unsigned_abs() as usize + 1).max().unwrap();
    QPBraid::new(strands.unwrap_or(need), factors)
}

/// Arcs ordered west to east along a line crossing each of them in the same
/// direction, with the state cycles they are compatible with.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModSite {
    pub arcs: Vec<ArcId>,
    /// Whether consecutive arcs were checked to share a face on the correct
    /// sides, which places the transverse line.
    pub verified: bool,
    pub cycles: Vec<EnhancedState>,
}

fn compatible(arcs: &[ArcId], cycles: &[EnhancedState]) -> bool {
    cycles.iter().all(|a| {
        let mut seen = 0u128;
        arcs.iter().all(|&e| {
            let l = a.traced.arc_loop[e as usize];
            let fresh = seen >> l & 1 == 0;
            seen |= 1 << l;
            fresh && a.marks[l as usize] == Mark::Minus
        })
    })
}

/// Braid-parallel arc tuples of the given arity compatible with every cycle.
pub fn find_sites(d: &Diagram, cycles: &[EnhancedState], arity: usize) -> Vec<ModSite> {
    let mut out = Vec::new();
    if arity == 0 {
        return out;
    }
    let free = d.free_loops();
    let arcs: Vec<ArcId> = (0..d.n_arcs() as ArcId).filter(|a| !free.contains(a)).collect();
    fn grow(d: &Diagram, arcs: &[ArcId], cycles: &[EnhancedState], arity: usize, cur: &mut Vec<ArcId>, out: &mut Vec<ModSite>) {
        if cur.len() == arity {
            out.push(ModSite { arcs: cur.clone(), verified: true, cycles: cycles.to_vec() });
            return;
        }
        let last = *cur.last().unwrap();
        for &e in arcs {
            if cur.contains(&e) || d.left_face(e) != d.right_face(last) {
                continue;
            }
            cur.push(e);
            if compatible(cur, cycles) {
                grow(d, arcs, cycles, arity, cur, out);
            }
            cur.pop();
        }
    }
    for &e in &arcs {
        let mut cur = vec![e];
        if compatible(&cur, cycles) {
            grow(d, &arcs, cycles, arity, &mut cur, &mut out);
        }
    }
    out
}

/// Replaces the site arcs by the braid `b`.
pub fn modify(d: &Diagram, site: &ModSite, b: &QPBraid) -> Result<Diagram> {
    if site.arcs.len() != b.strands {
        return Err(Error::Incompatible(format!("site has {} arcs, braid has {} strands", site.arcs.len(), b.strands)));
    }
    if !compatible(&site.arcs, &site.cycles) {
        return Err(Error::Incompatible("site arcs are not on distinct minus loops".into()));
    }
    d.insert_braid(&site.arcs, &b.letters)
}

/// The lift of `a` to the modified diagram: braid crossings take their
/// oriented smoothing and every loop keeps its mark.
pub fn lift(d: &Diagram, a: &EnhancedState, site: &ModSite, b: &QPBraid) -> Result<EnhancedState> {
    if !compatible(&site.arcs, std::slice::from_ref(a)) {
        return Err(Error::Incompatible("cycle is not compatible with the site".into()));
    }
    let dp = modify(d, &ModSite { cycles: vec![a.clone()], ..site.clone() }, b)?;
    let n = d.n_crossings();
    let mut bits = a.traced.state.bits;
    for (j, &l) in b.letters.iter().enumerate() {
        if l < 0 {
            bits |= 1 << (n + j);
        }
    }
    let ts = resolve(&dp, State::new(bits, dp.n_crossings()))?;
    if ts.n_loops != a.traced.n_loops {
        return Err(Error::Inconsistent("lift changed the loop count".into()));
    }
    let mut marks = vec![None; ts.n_loops];
    for (e, &l) in a.traced.arc_loop.iter().enumerate() {
        let nl = ts.arc_loop[e] as usize;
        match marks[nl] {
            None => marks[nl] = Some(a.marks[l as usize]),
            Some(m) if m != a.marks[l as usize] => return Err(Error::Inconsistent("lift merged loops".into())),
            _ => {}
        }
    }
    let marks = marks.into_iter().map(|m| m.ok_or_else(|| Error::Inconsistent("lift created a loop".into()))).collect::<Result<Vec<Mark>>>()?;
    EnhancedState::new(ts, marks)
}

/// The map from the modified diagram back to `d`: each central crossing is
/// removed by a saddle and a kink removal, then the conjugating pairs cancel
/// by Reidemeister II moves from the inside out.
pub fn projection_map(d: &Diagram, site: &ModSite, b: &QPBraid) -> Result<ChainMap> {
    let dp = modify(d, site, b)?;
    let n = d.n_crossings();
    let mut maps = Vec::new();
    let mut cur = dp.clone();
    let mut start = b.letters.len();
    for f in b.factors.iter().rev() {
        let w = f.omega.len();
        start -= 2 * w + 1;
        let c = n + start + w;
        let m = positive_crossing_removal(&cur, c)?;
        cur = m.target.clone();
        maps.push(m);
        for j in 0..w {
            // after removals the innermost remaining pair sits at c-1-j, c-1-j+1
            let p = c - 1 - j;
            let m = elementary_map(r2_cancel(&cur, p, p + 1)?);
            cur = m.target.clone();
            maps.push(m);
        }
    }
    if cur != *d {
        return Err(Error::Inconsistent("projection does not return to the base diagram".into()));
    }
    if maps.is_empty() {
        return Ok(ChainMap::identity(d));
    }
    compose(maps)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FamilyKind {
    Twist,
    Q1,
    Mirror820,
}

impl FamilyKind {
    pub fn parse(s: &str) -> Result<FamilyKind> {
        match s {
            "twist" => Ok(FamilyKind::Twist),
            "q1" => Ok(FamilyKind::Q1),
            "mirror820" | "8_20" => Ok(FamilyKind::Mirror820),
            _ => Err(Error::Invalid(format!("unknown family '{s}'"))),
        }
    }
    pub fn name(&self) -> &'static str {
        match self {
            FamilyKind::Twist => "twist",
            FamilyKind::Q1 => "q1",
            FamilyKind::Mirror820 => "mirror820",
        }
    }
}

/// Pinned data: the twist pair on the 9_42 fixture, and the kink plus trio
/// on its positive stabilization. Chosen by searching the compatible sites
/// for ones reproducing the tabulated Jones polynomials.
pub const TWIST_SITE: [ArcId; 2] = [2, 7];
pub const STABILIZATION: (ArcId, bool) = (2, false);
pub const TRIO_SITE: [ArcId; 3] = [18, 19, 7];

pub const Q1_WORD: &str = "(1 2 -1 ; 2)";
pub const MIRROR_820_WORD: &str = "(1 2 -1 ; 2)(2 ; 1)";

/// The 9_42 fixture with the two cycles every family site must respect.
pub fn base_9_42() -> Result<(Diagram, Vec<EnhancedState>)> {
    let d = fixtures::diagram("9_42")?;
    let cycles = vec![alpha_zero(&d)?, seifert_cycle(&d)?];
    Ok((d, cycles))
}

/// Positive stabilization of 9_42 carrying the trio site.
pub fn stabilized_9_42() -> Result<(Diagram, Vec<EnhancedState>)> {
    let (d, _) = base_9_42()?;
    let m = crate::cobordism::r1_intro(&d, STABILIZATION.0, 1, STABILIZATION.1)?;
    let s = m.target;
    let cycles = vec![alpha_zero(&s)?, seifert_cycle(&s)?];
    Ok((s, cycles))
}

/// Base diagram, site and braid of a family member.
pub fn family_parts(kind: FamilyKind, n: usize) -> Result<(Diagram, ModSite, QPBraid)> {
    match kind {
        FamilyKind::Twist => {
            let (d, cycles) = base_9_42()?;
            let b = parse_qp("s=2 (;1)")?.power(n);
            Ok((d, ModSite { arcs: TWIST_SITE.to_vec(), verified: true, cycles }, b))
        }
        FamilyKind::Q1 | FamilyKind::Mirror820 => {
            let (d, cycles) = stabilized_9_42()?;
            let word = if kind == FamilyKind::Q1 { Q1_WORD } else { MIRROR_820_WORD };
            let b = parse_qp(&format!("s=3 {word}"))?.power(n);
            Ok((d, ModSite { arcs: TRIO_SITE.to_vec(), verified: true, cycles }, b))
        }
    }
}

/// The `n`-th member of a family; `n = 0` is the base diagram.
pub fn family(kind: FamilyKind, n: usize) -> Result<Diagram> {
    let (d, site, b) = family_parts(kind, n)?;
    if n == 0 {
        return Ok(d);
    }
    modify(&d, &site, &b)
}
