//! Bigraded homology tables, diagonals, Euler characteristic, class tests,
//! Lee homology and the s-invariant.

use std::collections::{BTreeMap, BTreeSet};
use std::hash::{Hash, Hasher};

use crate::complex::{
    apply_d, apply_lee, apply_phi, assemble_rows, binom_table, colex_rank, grading, Bigrading, Chain, EdgeKind, Level, Target,
};
use crate::diagram::Diagram;
use crate::error::{Error, Result};
use crate::linalg::{reduce, Coeffs, SparseMat};
use crate::polynomials::{jones_from_unnormalized, Laurent};
use crate::resolution::{resolve, seifert_state, two_coloring};

/// How bigraded tables are computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Engine {
    /// Full cube of resolutions with sparse elimination per block.
    Cube,
    /// Crossing-by-crossing local elimination; memory stays small on
    /// diagrams whose cube has tens of millions of generators.
    Local,
    /// Cube up to `AUTO_CUBE_MAX` crossings, local above.
    Auto,
}

/// Largest crossing count `Engine::Auto` sends to the cube.
pub const AUTO_CUBE_MAX: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HomologyConfig {
    pub coeffs: Coeffs,
    /// Cap on the total generator count of the cube, or on the live object
    /// count of the local engine.
    pub budget: u64,
    pub engine: Engine,
}

impl Default for HomologyConfig {
    fn default() -> Self {
        HomologyConfig { coeffs: Coeffs::Rational, budget: 1 << 30, engine: Engine::Auto }
    }
}

impl HomologyConfig {
    pub fn exact() -> Self {
        Self::default()
    }
    pub fn modp(p: u64) -> Self {
        HomologyConfig { coeffs: Coeffs::ModP(p), ..Self::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BigradedTable {
    pub ranks: BTreeMap<(i64, i64), u64>,
    pub coeffs: Coeffs,
    pub diagram_hash: u64,
    pub n_components: usize,
}

impl BigradedTable {
    pub fn rank(&self, t: i64, q: i64) -> u64 {
        self.ranks.get(&(t, q)).copied().unwrap_or(0)
    }
    pub fn total_rank(&self) -> u64 {
        self.ranks.values().sum()
    }
    pub fn entries(&self) -> impl Iterator<Item = (i64, i64, u64)> + '_ {
        self.ranks.iter().map(|(&(t, q), &r)| (t, q, r))
    }

    /// Rows are q descending, columns t ascending.
    pub fn to_tsv(&self) -> String {
        if self.ranks.is_empty() {
            return "q\\t\n".into();
        }
        let ts: BTreeSet<i64> = self.ranks.keys().map(|k| k.0).collect();
        let qs: BTreeSet<i64> = self.ranks.keys().map(|k| k.1).collect();
        let (tmin, tmax) = (*ts.first().unwrap(), *ts.last().unwrap());
        let (qmin, qmax) = (*qs.first().unwrap(), *qs.last().unwrap());
        let mut s = String::from("q\\t");
        for t in tmin..=tmax {
            s.push_str(&format!("\t{t}"));
        }
        s.push('\n');
        let mut q = qmax;
        while q >= qmin {
            s.push_str(&q.to_string());
            for t in tmin..=tmax {
                let r = self.rank(t, q);
                s.push('\t');
                if r > 0 {
                    s.push_str(&r.to_string());
                }
            }
            s.push('\n');
            q -= 2;
        }
        s
    }
}

/// Hash of the canonical PD form, recorded with tables.
pub fn diagram_hash(d: &Diagram) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    d.canonical().to_pd().hash(&mut h);
    h.finish()
}

fn budget_check(used: &mut u64, add: u64, budget: u64) -> Result<()> {
    *used += add;
    if *used > budget {
        return Err(Error::Budget { needed: *used, budget });
    }
    Ok(())
}

/// Matrix of `d` (or `d + Phi`) from source blocks to target blocks.
fn block_matrix(d: &Diagram, src: &Level, src_qs: &[i64], tgt: &Level, tgt_qs: &[i64], kinds: &[EdgeKind]) -> SparseMat {
    let target = Target::new(d, tgt, tgt_qs);
    let rows = assemble_rows(d, src, src_qs, &target, kinds);
    SparseMat::from_rows(target.n_cols() as usize, rows)
}

/// Rank of every quantum block of `d : C^h -> C^{h+1}`.
fn level_ranks(d: &Diagram, src: &Level, tgt: Option<&Level>, coeffs: Coeffs) -> BTreeMap<i64, u64> {
    let qs: Vec<i64> = src.q_dims(d).keys().copied().collect();
    let Some(tgt) = tgt else { return qs.iter().map(|&q| (q, 0)).collect() };
    let tq = tgt.q_dims(d);
    let ranks = crate::par::map(&qs, |&q| {
        if !tq.contains_key(&q) {
            return 0;
        }
        let m = block_matrix(d, src, &[q], tgt, &[q], &[EdgeKind::D]);
        reduce(&m, &[], coeffs).rank as u64
    });
    qs.into_iter().zip(ranks).collect()
}

pub fn homology_table(d: &Diagram) -> Result<BigradedTable> {
    homology_table_with(d, &HomologyConfig::default())
}

pub fn homology_table_with(d: &Diagram, cfg: &HomologyConfig) -> Result<BigradedTable> {
    let local = match cfg.engine {
        Engine::Cube => false,
        Engine::Local => true,
        Engine::Auto => d.n_crossings() > AUTO_CUBE_MAX,
    };
    if local {
        let ranks = crate::scan::table(d, cfg.coeffs, cfg.budget)?;
        return Ok(BigradedTable { ranks, coeffs: cfg.coeffs, diagram_hash: diagram_hash(d), n_components: d.n_components() });
    }
    let n = d.n_crossings();
    let nm = d.counts().1 as i64;
    let mut used = 0u64;
    let mut cur = Level::build(d, 0);
    budget_check(&mut used, cur.dimension(), cfg.budget)?;
    let mut prev_ranks: BTreeMap<i64, u64> = BTreeMap::new();
    let mut ranks = BTreeMap::new();
    for h in 0..=n {
        let next = if h < n {
            let l = Level::build(d, h + 1);
            budget_check(&mut used, l.dimension(), cfg.budget)?;
            Some(l)
        } else {
            None
        };
        let dims = cur.q_dims(d);
        let r = level_ranks(d, &cur, next.as_ref(), cfg.coeffs);
        for (&q, &dim) in &dims {
            let k = dim - r[&q] - prev_ranks.get(&q).copied().unwrap_or(0);
            if k > 0 {
                ranks.insert((h as i64 - nm, q), k);
            }
        }
        prev_ranks = r;
        if let Some(l) = next {
            cur = l;
        }
    }
    Ok(BigradedTable { ranks, coeffs: cfg.coeffs, diagram_hash: diagram_hash(d), n_components: d.n_components() })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiagonalProfile {
    /// Diagonals `2t - q` carrying homology, with their total rank.
    pub diagonals: BTreeMap<i64, u64>,
}

impl DiagonalProfile {
    pub fn width(&self) -> usize {
        self.diagonals.len()
    }
}

pub fn diagonal_profile(tbl: &BigradedTable) -> Result<DiagonalProfile> {
    if tbl.ranks.is_empty() {
        return Err(Error::Invalid("empty homology table".into()));
    }
    let mut diagonals = BTreeMap::new();
    for (t, q, r) in tbl.entries() {
        *diagonals.entry(2 * t - q).or_insert(0) += r;
    }
    Ok(DiagonalProfile { diagonals })
}

pub fn width(tbl: &BigradedTable) -> Result<usize> {
    Ok(diagonal_profile(tbl)?.width())
}

pub fn is_thick(tbl: &BigradedTable) -> Result<bool> {
    Ok(width(tbl)? >= 3)
}

/// `sum (-1)^t rank q^j`, as a [`Laurent`] in q (doubled exponents).
pub fn graded_euler(tbl: &BigradedTable) -> Laurent {
    let mut l = Laurent::zero();
    for (t, q, r) in tbl.entries() {
        l.add_term(2 * q, if t.rem_euclid(2) == 0 { r as i64 } else { -(r as i64) });
    }
    l
}

pub fn jones_from_homology(tbl: &BigradedTable) -> Result<Laurent> {
    jones_from_unnormalized(&graded_euler(tbl))
        .ok_or_else(|| Error::Inconsistent("Euler characteristic not divisible by q + 1/q".into()))
}

/// Column index of each generator of `c` inside a target block layout.
fn chain_columns(d: &Diagram, lv: &Level, qs: &[i64], c: &Chain) -> Result<Vec<(u32, i64)>> {
    let target = Target::new(d, lv, qs);
    let table = binom_table();
    let mut v = Vec::new();
    for (g, &coef) in &c.terms {
        let si = lv.index_of(g.state).ok_or_else(|| Error::Invalid("generator outside level".into()))?;
        let l = lv.n_loops[si] as usize;
        let q = grading(d, lv.h, g.plus.count_ones() as usize, l).q;
        let Some((base, off)) = target.blocks.get(&q) else { continue };
        v.push(((base + off[si] + colex_rank(g.plus, &table)) as u32, coef));
    }
    Ok(v)
}

/// For each vector (chains at height `h`, projected onto `tgt_qs`), whether it
/// lies in the image of the map from height `h - 1` blocks `src_qs`.
fn image_membership(
    d: &Diagram,
    h: usize,
    tgt_qs: &[i64],
    src_qs: &[i64],
    kinds: &[EdgeKind],
    vecs: &[Chain],
    coeffs: Coeffs,
) -> Result<Vec<bool>> {
    let tl = Level::build(d, h);
    let cols: Vec<Vec<(u32, i64)>> = vecs.iter().map(|c| chain_columns(d, &tl, tgt_qs, c)).collect::<Result<_>>()?;
    if h == 0 {
        return Ok(cols.iter().map(|c| c.is_empty()).collect());
    }
    let sl = Level::build(d, h - 1);
    let m = block_matrix(d, &sl, src_qs, &tl, tgt_qs, kinds);
    // rows = target generators, columns = sources then the protected vectors
    let mut t = m.transpose();
    let base = t.n_cols as u32;
    t.n_cols += vecs.len();
    for (k, col) in cols.iter().enumerate() {
        for &(r, v) in col {
            t.rows[r as usize].push((base + k as u32, v));
        }
    }
    let protected: Vec<u32> = (0..vecs.len() as u32).map(|k| base + k).collect();
    Ok(reduce(&t, &protected, coeffs).in_span)
}

fn homogeneous(c: &Chain, d: &Diagram) -> Result<Bigrading> {
    let g = c.gradings(d);
    match g.as_slice() {
        [b] => Ok(*b),
        [] => Err(Error::Invalid("zero chain".into())),
        _ => Err(Error::Invalid("chain is not homogeneous".into())),
    }
}

/// True iff the cycle `c` is not a boundary (exact over Q).
pub fn is_nontrivial_class(c: &Chain, d: &Diagram) -> Result<bool> {
    is_nontrivial_class_with(c, d, Coeffs::Rational)
}

pub fn is_nontrivial_class_with(c: &Chain, d: &Diagram, coeffs: Coeffs) -> Result<bool> {
    if !apply_d(c, d).is_zero() {
        return Err(Error::NotCycle);
    }
    if c.is_zero() {
        return Ok(false);
    }
    let b = homogeneous(c, d)?;
    let h = (b.t + d.counts().1 as i64) as usize;
    Ok(!image_membership(d, h, &[b.q], &[b.q], &[EdgeKind::D], std::slice::from_ref(c), coeffs)?[0])
}

/// Whether each homogeneous chain difference lies in `im d`.
pub fn is_boundary(c: &Chain, d: &Diagram) -> Result<bool> {
    if c.is_zero() {
        return Ok(true);
    }
    let b = homogeneous(c, d)?;
    let h = (b.t + d.counts().1 as i64) as usize;
    Ok(image_membership(d, h, &[b.q], &[b.q], &[EdgeKind::D], std::slice::from_ref(c), Coeffs::Rational)?[0])
}

/// Total rank of the homology of `d + Phi`.
pub fn lee_homology_rank(d: &Diagram) -> Result<u64> {
    lee_homology_rank_with(d, &HomologyConfig::default())
}

pub fn lee_homology_rank_with(d: &Diagram, cfg: &HomologyConfig) -> Result<u64> {
    let n = d.n_crossings();
    let mut used = 0;
    let levels: Vec<Level> = (0..=n).map(|h| Level::build(d, h)).collect();
    for l in &levels {
        budget_check(&mut used, l.dimension(), cfg.budget)?;
    }
    let class_qs = |l: &Level, c: i64| -> Vec<i64> { l.q_dims(d).keys().copied().filter(|q| q.rem_euclid(4) == c).collect() };
    let mut total = 0u64;
    for c in 0..4 {
        let mut prev = 0u64;
        for h in 0..=n {
            let sq = class_qs(&levels[h], c);
            let dim: u64 = sq.iter().map(|q| levels[h].q_dims(d)[q]).sum();
            let r = if h < n && !sq.is_empty() {
                let tq = class_qs(&levels[h + 1], c);
                let m = block_matrix(d, &levels[h], &sq, &levels[h + 1], &tq, &[EdgeKind::D, EdgeKind::Phi]);
                reduce(&m, &[], cfg.coeffs).rank as u64
            } else {
                0
            };
            total += dim - r - prev;
            prev = r;
        }
    }
    Ok(total)
}

/// The canonical Lee generator on the Seifert state: loops of one color
/// carry `v- + v+`, the other color `v- - v+`.
pub fn lee_generator(d: &Diagram) -> Result<Chain> {
    let ts = resolve(d, seifert_state(d))?;
    let col = two_coloring(&ts).ok_or_else(|| Error::Inconsistent("Seifert state graph not bipartite".into()))?;
    let l = ts.n_loops;
    let mut c = Chain::zero(d.n_crossings());
    for m in 0..1u64 << l {
        let mut sign = 1;
        for (j, &cj) in col.iter().enumerate() {
            if m >> j & 1 == 1 && cj == 1 {
                sign = -sign;
            }
        }
        c.add(crate::complex::Gen { state: ts.state.bits, plus: m }, sign);
    }
    if !apply_lee(&c, d).is_zero() {
        return Err(Error::Inconsistent("canonical Lee generator is not a cycle".into()));
    }
    Ok(c)
}

/// Rasmussen's s from the filtration level of the canonical Lee generator.
pub fn s_invariant(d: &Diagram) -> Result<i64> {
    if d.n_components() != 1 {
        return Err(Error::NotKnot(d.n_components()));
    }
    let s0 = lee_generator(d)?;
    let h = seifert_state(d).height();
    let qmin = s0.gradings(d).first().unwrap().q;
    let here = Level::build(d, h);
    let all_q: Vec<i64> = here.q_dims(d).keys().copied().collect();
    let qmax = *all_q.last().unwrap();
    let below: Vec<i64> = if h > 0 { Level::build(d, h - 1).q_dims(d).keys().copied().collect() } else { Vec::new() };
    // largest j such that s0 is homologous to a chain with all q >= j
    let mut j = qmin;
    loop {
        let next = j + 2;
        if next > qmax + 2 {
            return Err(Error::Inconsistent("canonical Lee class is a boundary".into()));
        }
        let mut ok = true;
        for c in 0..4 {
            let tq: Vec<i64> = all_q.iter().copied().filter(|&q| q < next && q.rem_euclid(4) == c).collect();
            let part = s0.restrict(|g| {
                let l = here.n_loops[here.index_of(g.state).unwrap()] as usize;
                let q = grading(d, h, g.plus.count_ones() as usize, l).q;
                q < next && q.rem_euclid(4) == c
            });
            if part.is_zero() {
                continue;
            }
            let sq: Vec<i64> = below.iter().copied().filter(|&q| q.rem_euclid(4) == c).collect();
            if !image_membership(d, h, &tq, &sq, &[EdgeKind::D, EdgeKind::Phi], &[part], Coeffs::Rational)?[0] {
                ok = false;
                break;
            }
        }
        if !ok {
            break;
        }
        j = next;
    }
    Ok(j + 1)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhiClass {
    pub image: Chain,
    pub nontrivial: bool,
    pub bigrading: Option<Bigrading>,
}

/// `[Phi alpha]`: its nontriviality and bigrading.
pub fn induced_phi_class(alpha: &Chain, d: &Diagram) -> Result<PhiClass> {
    if !apply_d(alpha, d).is_zero() {
        return Err(Error::NotCycle);
    }
    let image = apply_phi(alpha, d);
    if image.is_zero() {
        return Ok(PhiClass { image, nontrivial: false, bigrading: None });
    }
    if !apply_d(&image, d).is_zero() {
        return Err(Error::Inconsistent("Phi of a cycle is not a cycle".into()));
    }
    let b = homogeneous(&image, d)?;
    let nontrivial = is_nontrivial_class(&image, d)?;
    Ok(PhiClass { image, nontrivial, bigrading: Some(b) })
}
