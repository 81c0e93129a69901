//! Sparse elimination for ranks and column-space membership.
//!
//! Rows are eliminated right-looking with column pivots chosen by smallest
//! live count and the shortest candidate row. Exact mode keeps integer
//! entries and only pivots on units; anything left over (or an overflow) is
//! finished with big rationals. Modular mode works in Z/p.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

/// 2^62 - 57, the default modulus for rank-only fast paths.
pub const DEFAULT_PRIME: u64 = 4_611_686_018_427_387_847;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Coeffs {
    /// Exact ranks over the rationals.
    Rational,
    /// Ranks over Z/p; a lower bound for rational ranks.
    ModP(u64),
}

impl Coeffs {
    pub fn label(&self) -> String {
        match self {
            Coeffs::Rational => "exact-Q".into(),
            Coeffs::ModP(p) => format!("mod-{p}"),
        }
    }
}

/// Sparse matrix stored by rows with sorted column indices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SparseMat {
    pub n_cols: usize,
    pub rows: Vec<Vec<(u32, i64)>>,
}

impl SparseMat {
    pub fn new(n_cols: usize) -> SparseMat {
        SparseMat { n_cols, rows: Vec::new() }
    }

    /// Builds from `(row, col, value)` triplets; repeated entries are summed.
    pub fn from_triplets(n_rows: usize, n_cols: usize, trip: impl IntoIterator<Item = (u32, u32, i64)>) -> SparseMat {
        let mut rows: Vec<Vec<(u32, i64)>> = vec![Vec::new(); n_rows];
        for (r, c, v) in trip {
            rows[r as usize].push((c, v));
        }
        for r in &mut rows {
            normalize(r);
        }
        SparseMat { n_cols, rows }
    }

    /// Rows need not be sorted; duplicates are summed.
    pub fn from_rows(n_cols: usize, mut rows: Vec<Vec<(u32, i64)>>) -> SparseMat {
        for r in &mut rows {
            normalize(r);
        }
        SparseMat { n_cols, rows }
    }

    pub fn push_row(&mut self, mut r: Vec<(u32, i64)>) {
        normalize(&mut r);
        self.rows.push(r);
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(|r| r.len()).sum()
    }

    pub fn transpose(&self) -> SparseMat {
        let mut rows: Vec<Vec<(u32, i64)>> = vec![Vec::new(); self.n_cols];
        for (i, r) in self.rows.iter().enumerate() {
            for &(c, v) in r {
                rows[c as usize].push((i as u32, v));
            }
        }
        SparseMat { n_cols: self.rows.len(), rows }
    }

    /// Product `self * other` (exact, i64 entries).
    pub fn mul(&self, other: &SparseMat) -> SparseMat {
        let mut out = SparseMat::new(other.n_cols);
        for r in &self.rows {
            let mut acc: Vec<(u32, i64)> = Vec::new();
            for &(k, v) in r {
                for &(c, w) in &other.rows[k as usize] {
                    acc.push((c, v * w));
                }
            }
            out.push_row(acc);
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(|r| r.is_empty())
    }

    /// Coordinate triplet dump: `row col num/1` per line.
    pub fn to_triplet_text(&self) -> String {
        let mut s = String::new();
        for (i, r) in self.rows.iter().enumerate() {
            for &(c, v) in r {
                s.push_str(&format!("{i} {c} {v}/1\n"));
            }
        }
        s
    }
}

fn normalize(r: &mut Vec<(u32, i64)>) {
    r.sort_unstable_by_key(|e| e.0);
    let mut out: Vec<(u32, i64)> = Vec::with_capacity(r.len());
    for &(c, v) in r.iter() {
        match out.last_mut() {
            Some(l) if l.0 == c => l.1 += v,
            _ => out.push((c, v)),
        }
    }
    out.retain(|e| e.1 != 0);
    *r = out;
}

/// Arithmetic used by the eliminator.
trait Ring: Sync {
    type E: Clone + Send + Sync;
    fn from_i64(&self, v: i64) -> Self::E;
    fn is_zero(&self, a: &Self::E) -> bool;
    fn can_pivot(&self, a: &Self::E) -> bool;
    /// `num / piv`
    fn factor(&self, num: &Self::E, piv: &Self::E) -> Self::E;
    /// `a - f * b`, `None` on overflow.
    fn sub_mul(&self, a: &Self::E, f: &Self::E, b: &Self::E) -> Option<Self::E>;
    fn neg_mul(&self, f: &Self::E, b: &Self::E) -> Option<Self::E>;
}

struct ModP(u64);

impl Ring for ModP {
    type E = u64;
    fn from_i64(&self, v: i64) -> u64 {
        v.rem_euclid(self.0 as i64) as u64
    }
    fn is_zero(&self, a: &u64) -> bool {
        *a == 0
    }
    fn can_pivot(&self, a: &u64) -> bool {
        *a != 0
    }
    fn factor(&self, num: &u64, piv: &u64) -> u64 {
        mulmod(*num, inv_mod(*piv, self.0), self.0)
    }
    fn sub_mul(&self, a: &u64, f: &u64, b: &u64) -> Option<u64> {
        let fb = mulmod(*f, *b, self.0);
        Some(if *a >= fb { a - fb } else { a + (self.0 - fb) })
    }
    fn neg_mul(&self, f: &u64, b: &u64) -> Option<u64> {
        let fb = mulmod(*f, *b, self.0);
        Some(if fb == 0 { 0 } else { self.0 - fb })
    }
}

fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn inv_mod(a: u64, p: u64) -> u64 {
    let (mut e, mut base, mut r) = (p - 2, a % p, 1u64);
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, base, p);
        }
        base = mulmod(base, base, p);
        e >>= 1;
    }
    r
}

/// Integer entries, pivoting only on units so all updates stay integral.
struct IntUnit;

impl Ring for IntUnit {
    type E = i64;
    fn from_i64(&self, v: i64) -> i64 {
        v
    }
    fn is_zero(&self, a: &i64) -> bool {
        *a == 0
    }
    fn can_pivot(&self, a: &i64) -> bool {
        a.abs() == 1
    }
    fn factor(&self, num: &i64, piv: &i64) -> i64 {
        num * piv
    }
    fn sub_mul(&self, a: &i64, f: &i64, b: &i64) -> Option<i64> {
        a.checked_sub(f.checked_mul(*b)?)
    }
    fn neg_mul(&self, f: &i64, b: &i64) -> Option<i64> {
        f.checked_mul(*b)?.checked_neg()
    }
}

struct BigQ;

impl Ring for BigQ {
    type E = BigRational;
    fn from_i64(&self, v: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(v))
    }
    fn is_zero(&self, a: &BigRational) -> bool {
        a.is_zero()
    }
    fn can_pivot(&self, a: &BigRational) -> bool {
        !a.is_zero()
    }
    fn factor(&self, num: &BigRational, piv: &BigRational) -> BigRational {
        num / piv
    }
    fn sub_mul(&self, a: &BigRational, f: &BigRational, b: &BigRational) -> Option<BigRational> {
        Some(a - f * b)
    }
    fn neg_mul(&self, f: &BigRational, b: &BigRational) -> Option<BigRational> {
        Some(-(f * b))
    }
}

/// Outcome of eliminating a matrix with some protected columns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reduction {
    /// Rank of the unprotected columns.
    pub rank: usize,
    /// Per protected column (in the order given): lies in the span of the
    /// unprotected columns.
    pub in_span: Vec<bool>,
}

struct Overflow;

struct Eliminated<E> {
    pivots: usize,
    /// Surviving rows with entries only in non-pivot columns.
    rest: Vec<Vec<(u32, E)>>,
    /// Columns the ring could not pivot on.
    stuck: bool,
}

fn eliminate<R: Ring>(ring: &R, n_cols: usize, rows: Vec<Vec<(u32, R::E)>>, protected: &[bool]) -> Result<Eliminated<R::E>, Overflow> {
    let mut rows = rows;
    let mut active = vec![true; rows.len()];
    let mut col_rows: Vec<Vec<u32>> = vec![Vec::new(); n_cols];
    let mut cnt = vec![0i64; n_cols];
    for (i, r) in rows.iter().enumerate() {
        for &(c, _) in r {
            col_rows[c as usize].push(i as u32);
            cnt[c as usize] += 1;
        }
    }
    let mut heap: BinaryHeap<Reverse<(i64, u32)>> = (0..n_cols as u32)
        .filter(|&c| !protected[c as usize] && cnt[c as usize] > 0)
        .map(|c| Reverse((cnt[c as usize], c)))
        .collect();
    let mut done = vec![false; n_cols];
    let mut pivots = 0;
    let mut stuck = false;
    let mut touched: Vec<u32> = Vec::new();
    while let Some(Reverse((k, c))) = heap.pop() {
        let cu = c as usize;
        if done[cu] || k != cnt[cu] {
            continue;
        }
        let holders: Vec<u32> = {
            let list = &mut col_rows[cu];
            list.sort_unstable();
            list.dedup();
            list.retain(|&r| active[r as usize] && rows[r as usize].binary_search_by_key(&c, |e| e.0).is_ok());
            list.clone()
        };
        if holders.is_empty() {
            done[cu] = true;
            continue;
        }
        let mut best: Option<(usize, u32)> = None;
        for &r in &holders {
            let row = &rows[r as usize];
            let pos = row.binary_search_by_key(&c, |e| e.0).unwrap();
            if ring.can_pivot(&row[pos].1) && best.is_none_or(|(l, _)| row.len() < l) {
                best = Some((row.len(), r));
            }
        }
        let Some((_, pr)) = best else {
            // no usable pivot in this ring; the caller finishes the leftovers
            done[cu] = true;
            stuck = true;
            continue;
        };
        done[cu] = true;
        pivots += 1;
        active[pr as usize] = false;
        let prow = std::mem::take(&mut rows[pr as usize]);
        let ppos = prow.binary_search_by_key(&c, |e| e.0).unwrap();
        let pval = prow[ppos].1.clone();
        touched.clear();
        for &(cc, _) in &prow {
            cnt[cc as usize] -= 1;
            touched.push(cc);
        }
        for &r in &holders {
            if r == pr {
                continue;
            }
            let row = std::mem::take(&mut rows[r as usize]);
            let pos = row.binary_search_by_key(&c, |e| e.0).unwrap();
            let f = ring.factor(&row[pos].1, &pval);
            let mut out = Vec::with_capacity(row.len() + prow.len());
            let (mut i, mut j) = (0, 0);
            while i < row.len() || j < prow.len() {
                if j >= prow.len() || (i < row.len() && row[i].0 < prow[j].0) {
                    out.push(row[i].clone());
                    i += 1;
                } else if i >= row.len() || prow[j].0 < row[i].0 {
                    let v = ring.neg_mul(&f, &prow[j].1).ok_or(Overflow)?;
                    let cc = prow[j].0;
                    if !ring.is_zero(&v) {
                        out.push((cc, v));
                        cnt[cc as usize] += 1;
                        col_rows[cc as usize].push(r);
                    }
                    j += 1;
                } else {
                    let cc = row[i].0;
                    let v = ring.sub_mul(&row[i].1, &f, &prow[j].1).ok_or(Overflow)?;
                    if ring.is_zero(&v) {
                        cnt[cc as usize] -= 1;
                    } else {
                        out.push((cc, v));
                    }
                    i += 1;
                    j += 1;
                }
            }
            rows[r as usize] = out;
        }
        for &cc in &touched {
            let cu = cc as usize;
            if !done[cu] && !protected[cu] && cnt[cu] > 0 {
                heap.push(Reverse((cnt[cu], cc)));
            }
        }
    }
    let rest = rows
        .into_iter()
        .zip(active)
        .filter(|(r, a)| *a && !r.is_empty())
        .map(|(r, _)| r)
        .collect();
    Ok(Eliminated { pivots, rest, stuck })
}

fn finish(rest: &[Vec<(u32, bool)>], protected_cols: &[u32]) -> Vec<bool> {
    let mut hit = std::collections::HashSet::new();
    for r in rest {
        for &(c, _) in r {
            hit.insert(c);
        }
    }
    protected_cols.iter().map(|c| !hit.contains(c)).collect()
}

fn reduce_generic<R: Ring>(ring: &R, m: &SparseMat, protected: &[bool]) -> Result<(usize, Vec<Vec<(u32, bool)>>, bool), Overflow> {
    let rows: Vec<Vec<(u32, R::E)>> =
        m.rows.iter().map(|r| r.iter().map(|&(c, v)| (c, ring.from_i64(v))).filter(|e| !ring.is_zero(&e.1)).collect()).collect();
    let el = eliminate(ring, m.n_cols, rows, protected)?;
    let shape = el.rest.iter().map(|r| r.iter().map(|e| (e.0, true)).collect()).collect();
    Ok((el.pivots, shape, el.stuck))
}

/// Rank of the unprotected columns and span membership of each protected one.
pub fn reduce(m: &SparseMat, protected_cols: &[u32], coeffs: Coeffs) -> Reduction {
    let mut protected = vec![false; m.n_cols];
    for &c in protected_cols {
        protected[c as usize] = true;
    }
    match coeffs {
        Coeffs::ModP(p) => {
            let (rank, rest, _) = reduce_generic(&ModP(p), m, &protected).unwrap_or_else(|_| unreachable!());
            Reduction { rank, in_span: finish(&rest, protected_cols) }
        }
        Coeffs::Rational => {
            let int_pass = {
                let rows: Vec<Vec<(u32, i64)>> = m.rows.clone();
                eliminate(&IntUnit, m.n_cols, rows, &protected)
            };
            match int_pass {
                Ok(el) if !el.stuck => {
                    let shape: Vec<Vec<(u32, bool)>> = el.rest.iter().map(|r| r.iter().map(|e| (e.0, true)).collect()).collect();
                    Reduction { rank: el.pivots, in_span: finish(&shape, protected_cols) }
                }
                Ok(el) => {
                    // finish the non-unit remainder over Q
                    let sub = SparseMat { n_cols: m.n_cols, rows: el.rest };
                    let (r2, rest, _) = reduce_generic(&BigQ, &sub, &protected).unwrap_or_else(|_| unreachable!());
                    Reduction { rank: el.pivots + r2, in_span: finish(&rest, protected_cols) }
                }
                Err(Overflow) => {
                    let (r, rest, _) = reduce_generic(&BigQ, m, &protected).unwrap_or_else(|_| unreachable!());
                    Reduction { rank: r, in_span: finish(&rest, protected_cols) }
                }
            }
        }
    }
}

pub fn rank(m: &SparseMat, coeffs: Coeffs) -> usize {
    reduce(m, &[], coeffs).rank
}

/// Dense exact rank, used as an independent oracle in tests.
pub fn dense_rank_q(m: &SparseMat) -> usize {
    let mut a: Vec<Vec<BigRational>> = m
        .rows
        .iter()
        .map(|r| {
            let mut d = vec![BigRational::zero(); m.n_cols];
            for &(c, v) in r {
                d[c as usize] = BigRational::from_integer(BigInt::from(v));
            }
            d
        })
        .collect();
    let mut rank = 0;
    for c in 0..m.n_cols {
        let Some(p) = (rank..a.len()).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(rank, p);
        let piv = a[rank][c].clone();
        for i in 0..a.len() {
            if i != rank && !a[i][c].is_zero() {
                let f = &a[i][c] / &piv;
                for j in c..m.n_cols {
                    let t = &f * &a[rank][j];
                    a[i][j] -= t;
                }
            }
        }
        rank += 1;
    }
    rank
}
