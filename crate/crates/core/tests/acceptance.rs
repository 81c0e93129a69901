//! End-to-end acceptance checks; prints one PASS/FAIL line per criterion.

use std::collections::BTreeMap;
use std::error::Error;
use std::time::{Duration, Instant};

use kh_core::cobordism::{self, elementary_map, verify_projection, ChainMap, Projection};
use kh_core::complex::{differential_matrix, phi_matrix, Mark};
use kh_core::homology::{
    diagonal_profile, homology_table_with, induced_phi_class, is_nontrivial_class, jones_from_homology, lee_homology_rank, s_invariant, width,
    BigradedTable, Engine, HomologyConfig,
};
use kh_core::linalg::{SparseMat, DEFAULT_PRIME};
use kh_core::polynomials::{jones_bracket, kauffman_family, span, twist_recursion, alternating_test, FamilyData};
use kh_core::qpmod::{family, find_sites, lift, modify, projection_map, FamilyKind, QPBraid, QPFactor};
use kh_core::resolution::{is_plus_adequate, seifert_state};
use kh_core::statecycle::{alpha_zero, classify, enumerate_state_cycles, is_state_cycle, s_singleloop_criterion, seifert_cycle, sign_change_equivalence, SignRelation};
use kh_core::{fixtures, BraidWord, Diagram, Laurent, Laurent2};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, Box<dyn Error>>;

macro_rules! ensure {
    ($c:expr, $($m:tt)+) => {
        if !$c {
            return Err(format!($($m)+).into());
        }
    };
}

/// Wall-clock bound per table in criterion 1.
const TABLE_TIME_LIMIT: Duration = Duration::from_secs(30);
/// Wall-clock bound for the 20-crossing width witness.
const FAMILY_TIME_LIMIT: Duration = Duration::from_secs(30 * 60);
/// Seed for the random modifications of criterion 7.
const LIFT_SEED: u64 = 0x942;
const LIFT_COUNT: usize = 20;

fn exact(engine: Engine) -> HomologyConfig {
    HomologyConfig { engine, ..HomologyConfig::exact() }
}

fn cells(v: &[(i64, i64, u64)]) -> BTreeMap<(i64, i64), u64> {
    v.iter().map(|&(t, q, r)| ((t, q), r)).collect()
}

fn nonzero(tbl: &BigradedTable) -> BTreeMap<(i64, i64), u64> {
    tbl.ranks.iter().filter(|(_, r)| **r > 0).map(|(k, r)| (*k, *r)).collect()
}

fn knot_fixtures(max_crossings: usize) -> Vec<(&'static str, Diagram)> {
    fixtures::names()
        .map(|n| (n, fixtures::diagram(n).unwrap()))
        .filter(|(_, d)| d.n_crossings() <= max_crossings && d.n_components() == 1)
        .collect()
}

fn criterion_1() -> Outcome {
    let t941 = cells(&[
        (3, 7, 1),
        (2, 5, 2),
        (1, 3, 3),
        (2, 3, 1),
        (0, 1, 5),
        (1, 1, 2),
        (-1, -1, 4),
        (0, -1, 4),
        (-2, -3, 4),
        (-1, -3, 4),
        (-3, -5, 3),
        (-2, -5, 4),
        (-4, -7, 2),
        (-3, -7, 4),
        (-5, -9, 1),
        (-4, -9, 3),
        (-5, -11, 2),
        (-6, -13, 1),
    ]);
    let t942 = cells(&[(2, 7, 1), (0, 3, 1), (1, 3, 1), (-1, 1, 1), (0, 1, 1), (-1, -1, 1), (0, -1, 1), (-3, -3, 1), (-2, -3, 1), (-4, -7, 1)]);
    let mut out = Vec::new();
    for (name, want, w) in [("9_41", t941, 2), ("9_42", t942, 3)] {
        let d = fixtures::diagram(name)?;
        let start = Instant::now();
        let tbl = homology_table_with(&d, &exact(Engine::Cube))?;
        let took = start.elapsed();
        ensure!(nonzero(&tbl) == want, "{name}: table differs from the published cells:\n{}", tbl.to_tsv());
        ensure!(width(&tbl)? == w, "{name}: width {} != {w}", width(&tbl)?);
        ensure!(took < TABLE_TIME_LIMIT, "{name}: took {took:?}");
        out.push(format!("{name} {} cells, width {w}, {:.2?}", want.len(), took));
    }
    Ok(out.join("; "))
}

fn criterion_2() -> Outcome {
    let d = fixtures::diagram("9_42")?;
    ensure!(is_plus_adequate(&d), "9_42 not + adequate");
    let a0 = alpha_zero(&d)?;
    ensure!(is_state_cycle(&a0), "alpha_0 not a cycle");
    let b0 = a0.bigrading(&d);
    ensure!((b0.t, b0.q) == (-4, -7), "alpha_0 at {b0}");
    ensure!(is_nontrivial_class(&a0.chain(), &d)?, "alpha_0 trivial");
    let s = seifert_cycle(&d)?;
    ensure!(s.traced.state == seifert_state(&d), "alpha_s not on the Seifert state");
    ensure!(is_state_cycle(&s), "alpha_s not a cycle");
    let bs = s.bigrading(&d);
    ensure!((bs.t, bs.q) == (0, -1), "alpha_s at {bs}");
    let plus = s.marks.iter().filter(|m| **m == Mark::Plus).count();
    ensure!(s.marks.len() == 4 && plus == 1, "alpha_s marking {}", s.marks_string());
    ensure!(s.traced.state.height() == 4, "alpha_s has {} 1-smoothings", s.traced.state.height());
    ensure!(d.counts() == (5, 4), "9_42 crossing signs {:?}", d.counts());
    ensure!(is_nontrivial_class(&s.chain(), &d)?, "alpha_s trivial by linear algebra");
    ensure!(s_invariant(&d)? == 0, "s(9_42) != 0");
    ensure!(s_singleloop_criterion(&s, &d)?, "single-loop criterion rejects alpha_s");
    Ok(format!("alpha_0 {b0} nontrivial; alpha_s {bs} marks {} nontrivial (direct and s = 0)", s.marks_string()))
}

fn criterion_3() -> Outcome {
    ensure!(s_invariant(&Diagram::unknot())? == 0, "s(unknot) != 0");
    ensure!(s_invariant(&fixtures::diagram("9_42")?)? == 0, "s(9_42) != 0");
    // positive braid closure: s equals 1 - chi of the Seifert surface
    let right = Diagram::from_braid(&BraidWord::new(2, vec![1, 1, 1])?)?;
    let circles = kh_core::resolution::resolve(&right, seifert_state(&right))?.n_loops as i64;
    let oracle = right.n_crossings() as i64 - circles + 1;
    let s = s_invariant(&right)?;
    ensure!(oracle == 2 && s == oracle, "right trefoil s = {s}, oracle {oracle}");
    let mut n = 0;
    for (name, d) in knot_fixtures(9) {
        let r = lee_homology_rank(&d)?;
        ensure!(r == 2, "Lee rank of {name} is {r}");
        n += 1;
    }
    Ok(format!("s: unknot 0, 9_42 0, right trefoil {s}; Lee rank 2 on {n} knots"))
}

fn criterion_4() -> Outcome {
    let d = fixtures::diagram("9_42")?;
    let a0 = alpha_zero(&d)?;
    let phi = induced_phi_class(&a0.chain(), &d)?;
    let b = phi.bigrading.ok_or("Phi(alpha_0) vanishes")?;
    ensure!(phi.nontrivial, "[Phi alpha_0] trivial");
    ensure!((b.t, b.q) == (-3, -3), "[Phi alpha_0] at {b}");
    let tbl = homology_table_with(&d, &exact(Engine::Cube))?;
    for (t, q) in [(-4, -7), (-3, -3), (0, -1)] {
        ensure!(tbl.rank(t, q) == 1, "shaded cell ({t},{q}) has rank {}", tbl.rank(t, q));
    }
    Ok(format!("[Phi alpha_0] nontrivial at {b}"))
}

fn criterion_5() -> Outcome {
    let mut n = 0;
    for (name, _) in fixtures::PD_FIXTURES {
        let d = fixtures::diagram(name)?;
        if d.n_crossings() > 12 {
            continue;
        }
        let tbl = homology_table_with(&d, &exact(Engine::Auto))?;
        ensure!(jones_from_homology(&tbl)? == jones_bracket(&d), "{name}: homology and bracket disagree");
        n += 1;
    }
    let data = FamilyData::builtin();
    for k in 0..=3 {
        let v = jones_bracket(&family(FamilyKind::Twist, k)?);
        ensure!(&v == data.jones(&format!("K{k}"))?, "V(K_{k}) differs: {v}");
    }
    // The listed V(K_4) has a misprint in two coefficients; it is checked
    // against the recursion from the listed data instead.
    let v4 = jones_bracket(&family(FamilyKind::Twist, 4)?);
    let listed = data.jones("K4")?;
    let from_k0 = twist_recursion(4, data.jones("K0")?, data.jones("K1")?);
    let from_k2 = twist_recursion(2, data.jones("K2")?, data.jones("K3")?);
    ensure!(v4 == from_k0 && v4 == from_k2, "V(K_4) disagrees with the listed recursion");
    let at_one = |v: &Laurent| v.terms().map(|(_, c)| c).sum::<i64>();
    ensure!(at_one(&v4) == 1 && at_one(listed) == -1, "V(1) check");
    let diff = &v4 - listed;
    ensure!(diff == Laurent::from_terms([(2, 1), (10, 1)]), "listed V(K_4) differs by {diff}");
    for (kind, tag, max) in [(FamilyKind::Q1, "Q", 3), (FamilyKind::Mirror820, "M", 3)] {
        for k in 1..=max {
            let d = family(kind, k)?;
            let v = jones_bracket(&d);
            ensure!(&v == data.jones(&format!("{tag}{k}"))?, "V({tag}{k}) differs: {v}");
        }
    }
    Ok(format!("{n} fixtures agree; K_0..K_3 verbatim, K_4 by recursion (listed copy off in q^1, q^5); q_1 and 8_20 families n = 1..3"))
}

fn criterion_6() -> Outcome {
    let data = FamilyData::builtin();
    let (v0, v1) = (data.jones("K0")?, data.jones("K1")?);
    for n in 0..=8 {
        let v = jones_bracket(&family(FamilyKind::Twist, n)?);
        ensure!(twist_recursion(n, v0, v1) == v, "twist recursion fails at n = {n}");
    }
    for n in 0..=5 {
        let v = jones_bracket(&family(FamilyKind::Twist, 2 * n)?);
        ensure!(alternating_test(&v)?, "V(K_{}) not alternating", 2 * n);
        // span is stored in doubled units
        ensure!(span(&v)? == 2 * (2 * n as i64 + 6), "span of V(K_{}) is {}/2", 2 * n, span(&v)?);
    }
    for n in 2..=10 {
        let f = kauffman_family(n, &data)?;
        let want = Laurent2::monomial(-1, 2 * n as i64 + 3, 1);
        ensure!(f.max_lm_term()? == want, "max lm term of F(K_{n}) is {:?}", f.max_lm_term()?);
    }
    Ok("recursion n <= 8, alternating spans 2n+6 for n <= 5, max lm term -z a^(2n+3) for 2 <= n <= 10".into())
}

fn random_braid(rng: &mut StdRng, strands: usize) -> QPBraid {
    let k = rng.random_range(1..=2);
    let s = strands as i32;
    let factors = (0..k)
        .map(|_| {
            let len = rng.random_range(0..strands);
            let omega = (0..len)
                .map(|_| {
                    let l = rng.random_range(1..s);
                    if rng.random_bool(0.5) {
                        l
                    } else {
                        -l
                    }
                })
                .collect();
            QPFactor { omega, central: rng.random_range(1..s) }
        })
        .collect();
    QPBraid::new(strands, factors).expect("letters are in range")
}

fn criterion_7() -> Outcome {
    let bases: Vec<(&str, Diagram)> = knot_fixtures(8).into_iter().filter(|(_, d)| d.n_crossings() > 0 && is_plus_adequate(d)).collect();
    ensure!(!bases.is_empty(), "no + adequate fixtures");
    let mut rng = StdRng::seed_from_u64(LIFT_SEED);
    let mut done = 0;
    let mut signs = [0usize; 2];
    let mut attempts = 0;
    while done < LIFT_COUNT {
        attempts += 1;
        ensure!(attempts < 50 * LIFT_COUNT, "could not draw enough sites");
        let (name, d) = &bases[rng.random_range(0..bases.len())];
        let a = alpha_zero(d)?;
        let arity = rng.random_range(2..=3);
        let sites = find_sites(d, std::slice::from_ref(&a), arity);
        if sites.is_empty() {
            continue;
        }
        let site = &sites[rng.random_range(0..sites.len())];
        let b = random_braid(&mut rng, arity);
        let tag = format!("{name} site {:?} braid {:?}", site.arcs, b.letters);
        let dp = modify(d, site, &b)?;
        let up = lift(d, &a, site, &b)?;
        ensure!(is_state_cycle(&up), "{tag}: lift is not a state cycle");
        let (g0, g1) = (a.bigrading(d), up.bigrading(&dp));
        ensure!(g1.t == g0.t && g1.q - g0.q == b.k() as i64, "{tag}: lift moves {g0} to {g1}");
        let psi = projection_map(d, site, &b)?;
        match verify_projection(&psi, &up.chain(), &a.chain())? {
            Projection::Plus => signs[0] += 1,
            Projection::Minus => signs[1] += 1,
            Projection::Fail => return Err(format!("{tag}: projection fails").into()),
        }
        ensure!(is_nontrivial_class(&a.chain(), d)?, "{tag}: base cycle trivial");
        ensure!(is_nontrivial_class(&up.chain(), &dp)?, "{tag}: lift trivial");
        done += 1;
    }
    Ok(format!("{done} random modifications (seed {LIFT_SEED:#x}): {} plus, {} minus, all lifts nontrivial", signs[0], signs[1]))
}

fn criterion_8() -> Outcome {
    let mut out = Vec::new();
    for k in 1..=2 {
        let d = family(FamilyKind::Twist, k)?;
        let w = width(&homology_table_with(&d, &exact(Engine::Cube))?)?;
        ensure!(w == 3, "width(K_{k}) = {w}");
        out.push(format!("K_{k} ({}x) width 3", d.n_crossings()));
    }
    let m1 = family(FamilyKind::Mirror820, 1)?;
    let start = Instant::now();
    let tbl = homology_table_with(&m1, &exact(Engine::Local))?;
    let took = start.elapsed();
    ensure!(width(&tbl)? == 3, "width(M_1) = {}", width(&tbl)?);
    ensure!(took < FAMILY_TIME_LIMIT, "M_1 took {took:?}");
    let modp = homology_table_with(&m1, &HomologyConfig { engine: Engine::Local, ..HomologyConfig::modp(DEFAULT_PRIME) })?;
    ensure!(modp.ranks == tbl.ranks, "M_1 table differs mod p");
    out.push(format!("K(9_42,8_20,1) ({}x) width 3 exact in {took:.2?}", m1.n_crossings()));
    let m2 = family(FamilyKind::Mirror820, 2)?;
    let p2 = diagonal_profile(&homology_table_with(&m2, &exact(Engine::Local))?)?;
    ensure!(p2.width() == 4, "width(M_2) = {}", p2.width());
    out.push(format!("stretch K(9_42,8_20,2) ({}x) width 4", m2.n_crossings()));
    Ok(out.join("; "))
}

fn all_zero(m: &SparseMat) -> bool {
    m.rows.iter().flatten().all(|e| e.1 == 0)
}

fn sum(a: &SparseMat, b: &SparseMat) -> SparseMat {
    let rows = a.rows.iter().zip(&b.rows).map(|(x, y)| x.iter().chain(y).copied().collect()).collect();
    SparseMat::from_rows(a.n_cols, rows)
}

fn chain_identities(d: &Diagram) -> kh_core::Result<bool> {
    let n = d.n_crossings();
    for r in 0..n.saturating_sub(1) {
        let (d0, d1) = (differential_matrix(d, r)?, differential_matrix(d, r + 1)?);
        let (p0, p1) = (phi_matrix(d, r)?, phi_matrix(d, r + 1)?);
        if !all_zero(&d0.mul(&d1)) || !all_zero(&p0.mul(&p1)) || !all_zero(&sum(&d0.mul(&p1), &p0.mul(&d1))) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn reidemeister_partners(name: &str, d: &Diagram) -> kh_core::Result<Vec<(String, Diagram)>> {
    let mut out = Vec::new();
    if let Ok(b) = fixtures::braid(name) {
        out.push(("braid closure".to_string(), Diagram::from_braid(&b)?));
    }
    if d.n_crossings() > 0 {
        for (sign, side) in [(1, false), (-1, true)] {
            out.push((format!("kink {sign:+}"), cobordism::r1_intro(d, 0, sign, side)?.target));
        }
        let pair = (0..d.n_arcs() as u32)
            .flat_map(|x| (0..d.n_arcs() as u32).map(move |y| (x, y)))
            .find_map(|(x, y)| cobordism::r2_intro_parallel(d, x, y, true).ok());
        if let Some(m) = pair {
            out.push(("R2 pair".to_string(), m.target));
        }
    }
    Ok(out)
}

fn elementary_moves(d: &Diagram) -> Vec<cobordism::ElementaryMove> {
    let arcs = d.n_arcs() as u32;
    let mut out = Vec::new();
    if let Ok(m) = cobordism::birth(d) {
        let circle = *m.target.free_loops().last().unwrap();
        if let Ok(back) = cobordism::death(&m.target, circle) {
            out.push(back);
        }
        out.push(m);
    }
    for a in 0..arcs {
        for sign in [1, -1] {
            for side in [false, true] {
                if let Ok(m) = cobordism::r1_intro(d, a, sign, side) {
                    if let Ok(back) = cobordism::r1_remove(&m.target, d.n_crossings()) {
                        out.push(back);
                    }
                    out.push(m);
                }
            }
        }
        for b in 0..arcs {
            if let Ok(m) = cobordism::saddle(d, a, b) {
                out.push(m);
            }
            for over in [true, false] {
                if let Ok(m) = cobordism::r2_intro_parallel(d, a, b, over) {
                    let n = d.n_crossings();
                    if let Ok(back) = cobordism::r2_cancel(&m.target, n, n + 1) {
                        out.push(back);
                    }
                    out.push(m);
                }
            }
        }
    }
    out
}

fn sign_change_cases(d: &Diagram) -> kh_core::Result<(usize, bool)> {
    let mut cases = 0;
    for a in enumerate_state_cycles(d, 0..=d.n_crossings(), false, u64::MAX)? {
        let block = a.traced.one_block();
        for comp in block.components.iter().filter(|c| c.even && c.loops.len() > 1) {
            let minus: Vec<u32> = comp.loops.iter().copied().filter(|&l| a.marks[l as usize] == Mark::Minus).collect();
            let [m] = minus[..] else { continue };
            for &l in comp.loops.iter().filter(|&&l| l != m) {
                let mut marks = a.marks.clone();
                marks.swap(l as usize, m as usize);
                let b = kh_core::complex::EnhancedState::new(a.traced.clone(), marks)?;
                if !is_state_cycle(&b) {
                    continue;
                }
                cases += 1;
                if sign_change_equivalence(&a, &b, d)? == SignRelation::Inequivalent {
                    return Ok((cases, false));
                }
            }
        }
    }
    Ok((cases, true))
}

fn criterion_9() -> Outcome {
    let mut report = Vec::new();
    let small: Vec<(&str, Diagram)> = fixtures::names().map(|n| (n, fixtures::diagram(n).unwrap())).filter(|(_, d)| d.n_crossings() <= 8).collect();
    for (name, d) in &small {
        ensure!(chain_identities(d)?, "{name}: d^2, Phi^2 or d Phi + Phi d nonzero");
    }
    report.push(format!("chain identities on {} fixtures", small.len()));

    let mut pairs = 0;
    for (name, d) in small.iter().filter(|(_, d)| d.n_crossings() <= 7) {
        let base = homology_table_with(d, &exact(Engine::Cube))?;
        for (how, e) in reidemeister_partners(name, d)? {
            let other = homology_table_with(&e, &exact(Engine::Cube))?;
            ensure!(nonzero(&base) == nonzero(&other), "{name} vs {how}: tables differ");
            pairs += 1;
        }
    }
    report.push(format!("{pairs} Reidemeister pairs equal"));

    let (mut cycles, mut failing) = (0, 0);
    for (name, d) in knot_fixtures(7) {
        for a in enumerate_state_cycles(&d, 0..=d.n_crossings(), false, u64::MAX)? {
            cycles += 1;
            if !classify(&a)?.overall {
                failing += 1;
                ensure!(!is_nontrivial_class(&a.chain(), &d)?, "{name}: cycle {} {} fails a rule but is nontrivial", a.traced.state, a.marks_string());
            }
        }
    }
    report.push(format!("soundness over {cycles} state cycles ({failing} rule failures, all trivial)"));

    let mut maps = 0;
    for (name, d) in small.iter().filter(|(_, d)| d.n_crossings() <= 4) {
        for m in elementary_moves(d) {
            let line = m.script_line().to_string();
            let f: ChainMap = elementary_map(m);
            ensure!(f.commutes_with_d()?, "{name}: '{line}' does not commute with d");
            maps += 1;
        }
    }
    report.push(format!("f d = d f for {maps} elementary maps"));

    let mut cases = 0;
    for (name, d) in small.iter().filter(|(_, d)| d.n_crossings() <= 7) {
        let (c, ok) = sign_change_cases(d)?;
        ensure!(ok, "{name}: sign change gives inequivalent classes");
        cases += c;
    }
    ensure!(cases > 0, "no even-component sign change cases found");
    report.push(format!("sign change equal-or-negated on {cases} cases"));
    Ok(report.join("; "))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("tables of 9_41 and 9_42", criterion_1),
        ("9_42 state cycles", criterion_2),
        ("s-invariant and Lee rank", criterion_3),
        ("Lee pair of alpha_0", criterion_4),
        ("Jones pipeline", criterion_5),
        ("recursions and theorem checks", criterion_6),
        ("lifting", criterion_7),
        ("family widths", criterion_8),
        ("property suites", criterion_9),
    ];
    let mut failed = 0;
    for (i, (title, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = f();
        let took = start.elapsed();
        match res {
            Ok(detail) => println!("criterion {} ({title}): PASS [{took:.2?}] {detail}", i + 1),
            Err(e) => {
                failed += 1;
                println!("criterion {} ({title}): FAIL [{took:.2?}] {e}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
