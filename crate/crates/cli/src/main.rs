//! `kh`: batch front end for homology tables, state cycles, lifting through
//! quasipositive modification, families and polynomial invariants.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use kh_core::cobordism::{run_script, verify_projection, Projection};
use kh_core::complex::{EnhancedState, Mark};
use kh_core::homology::{self, BigradedTable, Engine, HomologyConfig};
use kh_core::linalg::{Coeffs, DEFAULT_PRIME};
use kh_core::polynomials::{jones_bracket, jones_consistency};
use kh_core::qpmod::{self, FamilyKind, ModSite};
use kh_core::resolution::{resolve, State};
use kh_core::statecycle::{self, ClassificationReport};
use kh_core::{fixtures, BraidWord, Diagram};

const SCHEMA: u32 = 1;

#[derive(Parser)]
#[command(name = "kh", version, about = "Khovanov homology, state cycles and quasipositive modification")]
struct Cli {
    #[command(flatten)]
    run: RunConfig,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Mode {
    Exact,
    Modp,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Tsv,
    Json,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Emit {
    Pd,
    Table,
    Jones,
    Report,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum EngineArg {
    Auto,
    Cube,
    Local,
}

#[derive(Args)]
struct RunConfig {
    /// Coefficients for homology ranks.
    #[arg(long, global = true, value_enum, default_value = "exact")]
    mode: Mode,
    /// Prime for `--mode modp`; must exceed 2^31.
    #[arg(long, global = true)]
    prime: Option<u64>,
    /// Generator budget.
    #[arg(long, global = true, default_value_t = 1 << 30)]
    budget: u64,
    /// Worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value = "tsv")]
    format: Format,
    /// What to print, for commands with several outputs.
    #[arg(long, global = true, value_enum)]
    emit: Option<Emit>,
    /// Homology engine.
    #[arg(long, global = true, value_enum, default_value = "auto")]
    engine: EngineArg,
    /// Directory searched for `<name>.pd` before the built-in fixtures.
    #[arg(long, global = true)]
    fixtures: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Homology table, diagonal profile and width.
    Table { input: String },
    /// All state cycles with bigradings, classification flags and nontriviality.
    Cycles {
        input: String,
        #[arg(long)]
        min_height: Option<usize>,
        #[arg(long)]
        max_height: Option<usize>,
        /// Keep only cycles passing every classification rule.
        #[arg(long)]
        classified_only: bool,
        /// Skip the exact nontriviality check.
        #[arg(long)]
        no_homology: bool,
    },
    /// Classification flags of one state cycle.
    Classify {
        input: String,
        /// `alpha0`, `seifert`, `plamenevskaya` or `BITS:MARKS` (e.g. `0110:+--`).
        #[arg(long, default_value = "alpha0")]
        cycle: String,
    },
    /// Lift a state cycle through a quasipositive modification.
    Lift {
        input: String,
        /// Quasipositive braid, e.g. `(1 2 -1 ; 2)(2 ; 1)`.
        #[arg(long)]
        braid: String,
        /// Comma separated site arcs; the first compatible site if omitted.
        #[arg(long)]
        site: Option<String>,
        #[arg(long, default_value = "alpha0")]
        cycle: String,
        /// Build the projection back to the base and check it hits the cycle.
        #[arg(long)]
        verify: bool,
        /// Move script to use as the projection instead of the built-in one.
        #[arg(long)]
        moves: Option<PathBuf>,
    },
    /// A member of the twist, q1 or mirror820 family.
    Family {
        #[arg(long)]
        name: String,
        #[arg(long)]
        n: usize,
    },
    /// Jones polynomial.
    Jones { input: String },
    /// Rasmussen s-invariant of a knot.
    S { input: String },
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
struct Verification(String);

impl std::fmt::Display for Verification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "verification failed: {}", self.0)
    }
}

impl std::error::Error for Verification {}

impl RunConfig {
    fn homology(&self) -> anyhow::Result<HomologyConfig> {
        if self.budget == 0 {
            bail!("--budget must be positive");
        }
        let coeffs = match self.mode {
            Mode::Exact => {
                if self.prime.is_some() {
                    bail!("--prime needs --mode modp");
                }
                Coeffs::Rational
            }
            Mode::Modp => {
                let p = self.prime.unwrap_or(DEFAULT_PRIME);
                if p <= 1 << 31 || !primal_check::miller_rabin(p) {
                    bail!("--prime must be a prime above 2^31, got {p}");
                }
                Coeffs::ModP(p)
            }
        };
        let engine = match self.engine {
            EngineArg::Auto => Engine::Auto,
            EngineArg::Cube => Engine::Cube,
            EngineArg::Local => Engine::Local,
        };
        Ok(HomologyConfig { coeffs, budget: self.budget, engine })
    }

    fn diagram(&self, input: &str) -> anyhow::Result<Diagram> {
        if let Some(w) = input.strip_prefix("braid:") {
            return Ok(Diagram::from_braid(&BraidWord::parse(w)?)?);
        }
        if let Some(rest) = input.strip_prefix("family:") {
            let (name, n) = rest.split_once(':').context("expected family:<name>:<n>")?;
            return Ok(qpmod::family(FamilyKind::parse(name)?, n.parse()?)?);
        }
        let path = Path::new(input);
        if path.is_file() {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {input}"))?;
            return Ok(kh_core::diagram::parse_pd(&text)?);
        }
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or(input);
        if let Some(dir) = &self.fixtures {
            let p = dir.join(format!("{stem}.pd"));
            if p.is_file() {
                return Ok(kh_core::diagram::parse_pd(&std::fs::read_to_string(&p)?)?);
            }
        }
        fixtures::diagram(stem).with_context(|| format!("'{input}' is not a file, fixture, braid: or family: input"))
    }
}

fn cycle_of(d: &Diagram, spec: &str) -> anyhow::Result<EnhancedState> {
    Ok(match spec {
        "alpha0" => statecycle::alpha_zero(d)?,
        "seifert" => statecycle::seifert_cycle(d)?,
        "plamenevskaya" => statecycle::plamenevskaya_class(d)?,
        _ => {
            let (bits, marks) = spec.split_once(':').context("cycle must be alpha0, seifert, plamenevskaya or BITS:MARKS")?;
            let n = d.n_crossings();
            if bits.len() != n || !bits.chars().all(|c| c == '0' || c == '1') {
                bail!("state needs {n} binary digits, got '{bits}'");
            }
            let b = bits.chars().enumerate().fold(0u64, |acc, (i, c)| acc | (((c == '1') as u64) << i));
            let ts = resolve(d, State::new(b, n))?;
            let marks = marks
                .chars()
                .map(|c| match c {
                    '+' => Ok(Mark::Plus),
                    '-' => Ok(Mark::Minus),
                    _ => Err(anyhow::anyhow!("marks must be + or -")),
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            EnhancedState::new(ts, marks)?
        }
    })
}

fn bits_string(a: &EnhancedState) -> String {
    let s = a.traced.state;
    (0..s.n as usize).map(|i| if s.bits >> i & 1 == 1 { '1' } else { '0' }).collect()
}

fn report_json(r: &ClassificationReport) -> Value {
    let flags: Vec<Value> = r
        .flags
        .iter()
        .map(|f| json!({"rule": f.rule.to_string(), "pass": f.pass, "witness": f.witness.as_ref().map(|w| w.to_string())}))
        .collect();
    json!({"flags": flags, "overall": r.overall})
}

fn flags_compact(r: &ClassificationReport) -> String {
    r.flags.iter().map(|f| format!("{}{}", f.rule, if f.pass { '+' } else { '-' })).collect::<Vec<_>>().join(",")
}

fn table_json(tbl: &BigradedTable) -> anyhow::Result<Value> {
    let prof = homology::diagonal_profile(tbl)?;
    Ok(json!({
        "coeffs": tbl.coeffs.label(),
        "components": tbl.n_components,
        "cells": tbl.entries().map(|(t, q, r)| json!({"t": t, "q": q, "rank": r})).collect::<Vec<_>>(),
        "diagonals": prof.diagonals.iter().map(|(d, r)| json!({"delta": d, "rank": r})).collect::<Vec<_>>(),
        "width": prof.width(),
    }))
}

fn table_tsv(tbl: &BigradedTable) -> anyhow::Result<String> {
    let prof = homology::diagonal_profile(tbl)?;
    let mut s = tbl.to_tsv();
    s.push_str(&format!("# coeffs\t{}\n", tbl.coeffs.label()));
    for (d, r) in &prof.diagonals {
        s.push_str(&format!("# diagonal\t{d}\t{r}\n"));
    }
    s.push_str(&format!("# width\t{}\n", prof.width()));
    Ok(s)
}

struct Out {
    format: Format,
}

impl Out {
    fn emit(&self, command: &str, body: Value, tsv: String) {
        match self.format {
            Format::Json => {
                let mut v = json!({"schema": SCHEMA, "command": command});
                if let (Value::Object(m), Value::Object(b)) = (&mut v, body) {
                    m.extend(b);
                }
                println!("{}", serde_json::to_string_pretty(&v).expect("serializable"));
            }
            Format::Tsv => print!("{tsv}"),
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let rc = &cli.run;
    let cfg = rc.homology()?;
    let out = Out { format: rc.format };
    match &cli.cmd {
        Cmd::Table { input } => {
            let d = rc.diagram(input)?;
            let tbl = homology::homology_table_with(&d, &cfg)?;
            out.emit("table", table_json(&tbl)?, table_tsv(&tbl)?);
        }
        Cmd::Cycles { input, min_height, max_height, classified_only, no_homology } => {
            let d = rc.diagram(input)?;
            let lo = min_height.unwrap_or(0);
            let hi = max_height.unwrap_or(d.n_crossings());
            let cycles = statecycle::enumerate_state_cycles(&d, lo..=hi, *classified_only, rc.budget)?;
            let mut recs = Vec::new();
            let mut tsv = String::from("bits\tmarks\tt\tq\tflags\tclassified\tnontrivial\n");
            for a in &cycles {
                let r = statecycle::classify(a)?;
                let b = a.bigrading(&d);
                let nt = if *no_homology { None } else { Some(homology::is_nontrivial_class_with(&a.chain(), &d, cfg.coeffs)?) };
                let nt_s = nt.map_or("-".to_string(), |x| x.to_string());
                tsv.push_str(&format!("{}\t{}\t{}\t{}\t{}\t{}\t{}\n", bits_string(a), a.marks_string(), b.t, b.q, flags_compact(&r), r.overall, nt_s));
                recs.push(json!({
                    "state": bits_string(a),
                    "marks": a.marks_string(),
                    "bigrading": {"t": b.t, "q": b.q},
                    "classification": report_json(&r),
                    "nontrivial": nt,
                }));
            }
            out.emit("cycles", json!({"count": cycles.len(), "cycles": recs}), tsv);
        }
        Cmd::Classify { input, cycle } => {
            let d = rc.diagram(input)?;
            let a = cycle_of(&d, cycle)?;
            let r = statecycle::classify(&a)?;
            let mut tsv = String::from("rule\tpass\twitness\n");
            for f in &r.flags {
                tsv.push_str(&format!("{}\t{}\t{}\n", f.rule, f.pass, f.witness.as_ref().map_or("-".into(), |w| w.to_string())));
            }
            tsv.push_str(&format!("# overall\t{}\n", r.overall));
            out.emit("classify", json!({"state": bits_string(&a), "marks": a.marks_string(), "report": report_json(&r)}), tsv);
        }
        Cmd::Lift { input, braid, site, cycle, verify, moves } => {
            let d = rc.diagram(input)?;
            let b = qpmod::parse_qp(braid)?;
            let a = cycle_of(&d, cycle)?;
            let site = match site {
                Some(s) => {
                    let arcs = s.split(',').map(|x| x.trim().parse::<u32>()).collect::<Result<Vec<_>, _>>()?;
                    ModSite { arcs, verified: false, cycles: vec![a.clone()] }
                }
                None => qpmod::find_sites(&d, std::slice::from_ref(&a), b.strands)
                    .into_iter()
                    .next()
                    .context("no compatible braid-parallel site")?,
            };
            let dp = qpmod::modify(&d, &site, &b)?;
            let l = qpmod::lift(&d, &a, &site, &b)?;
            let (g0, g1) = (a.bigrading(&d), l.bigrading(&dp));
            let mut body = json!({
                "site": site.arcs,
                "k": b.k(),
                "base": {"state": bits_string(&a), "marks": a.marks_string(), "t": g0.t, "q": g0.q},
                "lift": {"state": bits_string(&l), "marks": l.marks_string(), "t": g1.t, "q": g1.q},
                "is_state_cycle": statecycle::is_state_cycle(&l),
                "pd": dp.to_pd(),
            });
            let mut tsv = format!(
                "site\t{}\nk\t{}\nbase\t{}\t{}\t{}\t{}\nlift\t{}\t{}\t{}\t{}\nis_state_cycle\t{}\n",
                site.arcs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","),
                b.k(),
                bits_string(&a),
                a.marks_string(),
                g0.t,
                g0.q,
                bits_string(&l),
                l.marks_string(),
                g1.t,
                g1.q,
                statecycle::is_state_cycle(&l)
            );
            let mut failed = None;
            if *verify {
                let psi = match moves {
                    Some(p) => run_script(&dp, &std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?,
                    None => qpmod::projection_map(&d, &site, &b)?,
                };
                if psi.target != d {
                    bail!("move script does not end at the base diagram");
                }
                let v = verify_projection(&psi, &l.chain(), &a.chain())?;
                body["projection"] = json!(v.to_string());
                body["moves"] = json!(psi.script().lines().collect::<Vec<_>>());
                tsv.push_str(&format!("projection\t{v}\n"));
                if rc.emit == Some(Emit::Report) {
                    for m in psi.script().lines() {
                        tsv.push_str(&format!("# move\t{m}\n"));
                    }
                }
                if v == Projection::Fail {
                    failed = Some("projection of the lift is not ± the base cycle".to_string());
                }
            }
            if rc.emit == Some(Emit::Pd) {
                tsv = format!("{}\n", dp.to_pd());
            }
            out.emit("lift", body, tsv);
            if let Some(m) = failed {
                return Err(Verification(m).into());
            }
        }
        Cmd::Family { name, n } => {
            let kind = FamilyKind::parse(name)?;
            let d = qpmod::family(kind, *n)?;
            let mut body = json!({"family": kind.name(), "n": n, "crossings": d.n_crossings(), "components": d.n_components(), "writhe": d.writhe()});
            let tsv = match rc.emit.unwrap_or(Emit::Pd) {
                Emit::Pd => {
                    body["pd"] = json!(d.to_pd());
                    format!("{}\n", d.to_pd())
                }
                Emit::Jones => {
                    let v = jones_bracket(&d).pretty("q");
                    body["jones"] = json!(v);
                    format!("{v}\n")
                }
                Emit::Table => {
                    let tbl = homology::homology_table_with(&d, &cfg)?;
                    body["table"] = table_json(&tbl)?;
                    table_tsv(&tbl)?
                }
                Emit::Report => {
                    let tbl = homology::homology_table_with(&d, &cfg)?;
                    let v = jones_bracket(&d).pretty("q");
                    let w = homology::width(&tbl)?;
                    body["jones"] = json!(v);
                    body["width"] = json!(w);
                    body["total_rank"] = json!(tbl.total_rank());
                    format!(
                        "family\t{}\nn\t{n}\ncrossings\t{}\ncomponents\t{}\nwrithe\t{}\njones\t{v}\nwidth\t{w}\ntotal_rank\t{}\n",
                        kind.name(),
                        d.n_crossings(),
                        d.n_components(),
                        d.writhe(),
                        tbl.total_rank()
                    )
                }
            };
            out.emit("family", body, tsv);
        }
        Cmd::Jones { input } => {
            let d = rc.diagram(input)?;
            let v = jones_bracket(&d);
            if rc.emit == Some(Emit::Report) {
                let tbl = homology::homology_table_with(&d, &cfg)?;
                let c = jones_consistency(&d, &tbl)?;
                let body = json!({
                    "jones": v.pretty("q"),
                    "unnormalized_bracket": c.from_bracket.pretty("q"),
                    "euler_characteristic": c.from_homology.pretty("q"),
                    "agree": c.agree,
                });
                let tsv = format!(
                    "jones\t{}\nunnormalized_bracket\t{}\neuler_characteristic\t{}\nagree\t{}\n",
                    v.pretty("q"),
                    c.from_bracket.pretty("q"),
                    c.from_homology.pretty("q"),
                    c.agree
                );
                out.emit("jones", body, tsv);
                if !c.agree {
                    return Err(Verification("Euler characteristic differs from the bracket".into()).into());
                }
            } else {
                out.emit("jones", json!({"jones": v.pretty("q")}), format!("{}\n", v.pretty("q")));
            }
        }
        Cmd::S { input } => {
            let d = rc.diagram(input)?;
            let s = homology::s_invariant(&d)?;
            out.emit("s", json!({"s": s}), format!("{s}\n"));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.run.threads {
        if t == 0 {
            eprintln!("kh: --threads must be positive");
            return ExitCode::from(2);
        }
        #[cfg(feature = "parallel")]
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("kh: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kh: {e:#}");
            if e.downcast_ref::<Verification>().is_some() {
                ExitCode::from(4)
            } else if matches!(e.downcast_ref::<kh_core::Error>(), Some(kh_core::Error::Budget { .. })) {
                ExitCode::from(3)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
