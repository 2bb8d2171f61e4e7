//! Command-line front end: generation, approximation, digraph export,
//! conjugation and dynamical analysis, with every domain object persisted as
//! JSON.
//!
//! Exit codes: `0` success, `1` failed check or other error, `2` resource
//! limit (rule depth, cell or point budget), `3` internal contract
//! violation, `64` usage error. Errors are reported on stderr as a JSON
//! object `{"error": {"kind": ..., "message": ...}}`.

use crate::approx::{approximate, Overrides, QPolicy, ShapeKind};
use crate::conjugacy::{back_and_forth_cont, back_and_forth_hom, commutes_check, conjugator};
use crate::core::partition::Partition;
use crate::core::point::Point;
use crate::core::prefix_map::PrefixMap;
use crate::core::rat::Rat;
use crate::core::word::lower_depth_cap;
use crate::digraph::{build_gr, classify_all, to_dot, Classification};
use crate::dynamics::{
    chain_modulus, equicontinuity_defect, li_yorke_exclusion, omega_covers, recurrence_report, shadow, PseudoOrbit,
    WitnessRef, WitnessSeq,
};
use crate::error::{Error, Result};
use crate::generic::{
    check_property_p, check_property_q, cont_nesting, generic_cont, generic_hom, hom_nesting, ContWitness, HomWitness,
    QSchedule, Verdict,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

/// Exact dynamics on the Cantor space.
#[derive(Parser, Debug)]
#[command(name = "cantor", version, about)]
pub struct Cli {
    /// Lower the rule-depth cap (cannot raise it).
    #[arg(long, global = true)]
    pub depth_cap: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

/// Top-level commands.
#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a homeomorphism with nested property-(P) witnesses.
    GenHom(GenArgs),
    /// Generate a continuous map with nested property-(Q) witnesses.
    GenCont(GenArgs),
    /// Build and classify the transition digraph gr(f, P).
    Gr(GrArgs),
    /// Approximate a map by balloon or dumbbell shapes.
    Approx(ApproxArgs),
    /// Build a conjugacy between two witnessed maps by back and forth.
    Conjugate(ConjugateArgs),
    /// Dynamical analysis of a witnessed map.
    Analyze {
        #[command(subcommand)]
        command: Analyze,
    },
}

/// q-schedule selector.
#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum ScheduleArg {
    /// q = 2, 4, 12, 48, ...
    Strict,
    /// q_m the least multiple of m with q_m ≥ q_{m-1} + m - 1.
    Relaxed,
}

impl From<ScheduleArg> for QSchedule {
    fn from(s: ScheduleArg) -> QSchedule {
        match s {
            ScheduleArg::Strict => QSchedule::Strict,
            ScheduleArg::Relaxed => QSchedule::Relaxed,
        }
    }
}

/// Options of the generators.
#[derive(Args, Debug)]
pub struct GenArgs {
    /// Number of witness stages.
    #[arg(long)]
    pub m: usize,
    /// Seed of the choice stream.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// q-schedule.
    #[arg(long, value_enum, default_value = "strict")]
    pub schedule: ScheduleArg,
    /// Output map.
    #[arg(short = 'o')]
    pub out: PathBuf,
    /// Output witnesses.
    #[arg(short = 'w')]
    pub witnesses: PathBuf,
    /// Optional report.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

/// Options of `gr`.
#[derive(Args, Debug)]
pub struct GrArgs {
    /// The map.
    #[arg(short = 'f')]
    pub map: PathBuf,
    /// The partition.
    #[arg(short = 'p')]
    pub partition: PathBuf,
    /// DOT output with one cluster per component.
    #[arg(long)]
    pub dot: Option<PathBuf>,
    /// JSON output (stdout if absent and no DOT file).
    #[arg(short = 'o')]
    pub out: Option<PathBuf>,
}

/// Shape selector.
#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum ShapeArg {
    /// Balloons.
    Balloon,
    /// Dumbbells.
    Dumbbell,
}

/// Options of `approx`.
#[derive(Args, Debug)]
pub struct ApproxArgs {
    /// The map.
    #[arg(short = 'f')]
    pub map: PathBuf,
    /// Target distance, e.g. "1/4".
    #[arg(long)]
    pub eps: Rat,
    /// Shape of the components.
    #[arg(long, value_enum, default_value = "dumbbell")]
    pub shape: ShapeArg,
    /// Number of components.
    #[arg(long)]
    pub k: Option<usize>,
    /// Bar length.
    #[arg(long)]
    pub s: Option<usize>,
    /// Right loop length.
    #[arg(long)]
    pub m: Option<usize>,
    /// Left loop length.
    #[arg(long)]
    pub n: Option<usize>,
    /// Use mesh(Q), mesh(f(Q)) < ε/2 instead of < ε.
    #[arg(long)]
    pub halved: bool,
    /// Output map.
    #[arg(short = 'o')]
    pub out: PathBuf,
    /// Output partition.
    #[arg(short = 'p')]
    pub partition: PathBuf,
    /// Optional report.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

/// Options of `conjugate`.
#[derive(Args, Debug)]
pub struct ConjugateArgs {
    /// First map.
    pub f: PathBuf,
    /// Second map.
    pub g: PathBuf,
    /// Witness files of f and g.
    #[arg(long, num_args = 2, value_names = ["WF", "WG"])]
    pub witnesses: Vec<PathBuf>,
    /// Number of stages (at least 1).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub stages: u64,
    /// Output conjugator.
    #[arg(short = 'o')]
    pub out: PathBuf,
    /// Optional report.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

/// Map and witness files shared by the analyses.
#[derive(Args, Debug)]
pub struct Witnessed {
    /// The map.
    #[arg(short = 'f')]
    pub map: PathBuf,
    /// Its witnesses.
    #[arg(short = 'w')]
    pub witnesses: PathBuf,
    /// Report output (stdout if absent).
    #[arg(short = 'o', long = "report")]
    pub report: Option<PathBuf>,
}

/// Analyses.
#[derive(Subcommand, Debug)]
pub enum Analyze {
    /// Check property-(P) witnesses stage by stage.
    CheckP(Witnessed),
    /// Check property-(Q) witnesses stage by stage.
    CheckQ(Witnessed),
    /// Shadow a pseudo-orbit.
    Shadow {
        #[command(flatten)]
        common: Witnessed,
        /// Witness stage (1-based; default the last).
        #[arg(long)]
        stage: Option<usize>,
        /// Pseudo-orbit file.
        #[arg(long)]
        po: PathBuf,
    },
    /// Li-Yorke exclusion for a pair of points.
    Liyorke {
        #[command(flatten)]
        common: Witnessed,
        /// Witness stage (1-based; default the last).
        #[arg(long)]
        stage: Option<usize>,
        /// First point, "pre(per)".
        #[arg(long)]
        x: Point,
        /// Second point, "pre(per)".
        #[arg(long)]
        y: Point,
        /// Horizon.
        #[arg(long, default_value_t = 500)]
        n: usize,
    },
    /// Odometer covers of an ω-limit set.
    Omega {
        #[command(flatten)]
        common: Witnessed,
        /// The point, "pre(per)".
        #[arg(long)]
        x: Point,
        /// Number of stages (default all).
        #[arg(long)]
        stages: Option<usize>,
    },
    /// Nonrecurrence certificates and periodic-point search.
    Recurrence {
        #[command(flatten)]
        common: Witnessed,
        /// Witness stage (1-based; default the first).
        #[arg(long, default_value_t = 1)]
        stage: usize,
    },
    /// Chain-continuity modulus at a point.
    Chain {
        #[command(flatten)]
        common: Witnessed,
        /// The point, "pre(per)".
        #[arg(long)]
        x: Point,
        /// Target ε, e.g. "1/2".
        #[arg(long)]
        eps: Rat,
        /// Seed of the sampled chains.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Non-equicontinuity defect certificate.
    Defect {
        #[command(flatten)]
        common: Witnessed,
        /// Witness stage (1-based; default the first).
        #[arg(long, default_value_t = 1)]
        stage: usize,
        /// Component index.
        #[arg(long, default_value_t = 0)]
        component: usize,
        /// Truncation stage N.
        #[arg(long, default_value_t = 3)]
        n: usize,
    },
}

/// Witness files of either kind.
enum Witnesses {
    Hom(Vec<HomWitness>),
    Cont(Vec<ContWitness>),
}

impl Witnesses {
    fn load(path: &Path) -> Result<Witnesses> {
        let text = read(path)?;
        if let Ok(w) = serde_json::from_str::<Vec<HomWitness>>(&text) {
            return Ok(Witnesses::Hom(w));
        }
        serde_json::from_str::<Vec<ContWitness>>(&text)
            .map(Witnesses::Cont)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    fn len(&self) -> usize {
        match self {
            Witnesses::Hom(w) => w.len(),
            Witnesses::Cont(w) => w.len(),
        }
    }

    fn stage(&self, stage: Option<usize>) -> Result<WitnessRef<'_>> {
        let i = stage.unwrap_or(self.len());
        if i == 0 || i > self.len() {
            return Err(Error::Invalid(format!("stage {i} out of 1..={}", self.len())));
        }
        Ok(match self {
            Witnesses::Hom(w) => WitnessRef::Hom(&w[i - 1]),
            Witnesses::Cont(w) => WitnessRef::Cont(&w[i - 1]),
        })
    }

    fn hom(&self) -> Result<&[HomWitness]> {
        match self {
            Witnesses::Hom(w) => Ok(w),
            Witnesses::Cont(_) => Err(Error::Invalid("this analysis needs homeomorphism witnesses".into())),
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
}

fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read(path)?).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Invalid(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
}

fn write<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &to_json(value)?)
}

/// Writes to `path`, or to stdout when absent.
fn emit<T: Serialize>(path: Option<&PathBuf>, value: &T) -> Result<()> {
    match path {
        Some(p) => write(p, value),
        None => {
            print!("{}", to_json(value)?);
            Ok(())
        }
    }
}

/// Exit code of an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::DepthOverflow { .. } | Error::Budget { .. } | Error::PointBudget { .. } => 2,
        Error::Contract(_) => 3,
        _ => 1,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::DepthOverflow { .. } => "depth-overflow",
        Error::Budget { .. } => "budget",
        Error::PointBudget { .. } => "point-budget",
        Error::EmptyClopen => "empty-clopen",
        Error::GapUndefined => "gap-undefined",
        Error::EmptyCollection(_) => "empty-collection",
        Error::Invalid(_) => "invalid",
        Error::Precondition(_) => "precondition",
        Error::NotRefinement(_) => "not-refinement",
        Error::RightEnd(_) => "right-end",
        Error::Shape(_) => "shape",
        Error::WitnessShortage { .. } => "witness-shortage",
        Error::Cardinality { .. } => "cardinality",
        Error::Witness(_) => "witness",
        Error::NotSettled { .. } => "not-settled",
        Error::NotCertified(_) => "not-certified",
        Error::Parse(_) => "parse",
        Error::Contract(_) => "contract",
    }
}

/// Parses the arguments, runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 64 } else { 0 };
        }
    };
    if let Some(cap) = cli.depth_cap {
        lower_depth_cap(cap);
    }
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            let obj = json!({ "error": { "kind": error_kind(&e), "message": e.to_string() } });
            eprintln!("{obj}");
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::GenHom(a) => {
            let g = generic_hom(a.m, a.seed, a.schedule.into())?;
            write(&a.out, &g.h)?;
            write(&a.witnesses, &g.witnesses)?;
            if let Some(r) = &a.report {
                let stages: Vec<_> = g
                    .witnesses
                    .iter()
                    .enumerate()
                    .map(|(i, w)| {
                        json!({ "m": i + 1, "q": w.q, "cells": w.p.len(), "mesh": w.p.mesh(),
                                "property_p": check_property_p(&g.h, w, i + 1) })
                    })
                    .collect();
                let rep = json!({ "seed": a.seed, "stages": stages, "nesting": hom_nesting(&g.witnesses) });
                write(r, &rep)?;
            }
            Ok(0)
        }
        Command::GenCont(a) => {
            let g = generic_cont(a.m, a.seed, a.schedule.into())?;
            write(&a.out, &g.f)?;
            write(&a.witnesses, &g.witnesses)?;
            if let Some(r) = &a.report {
                let stages: Vec<_> = g
                    .witnesses
                    .iter()
                    .enumerate()
                    .map(|(i, w)| {
                        json!({ "m": i + 1, "q": w.q, "cells": w.p.len(), "mesh": w.p.mesh(),
                                "property_q": check_property_q(&g.f, w, i + 1) })
                    })
                    .collect();
                let rep = json!({ "seed": a.seed, "stages": stages, "nesting": cont_nesting(&g.witnesses) });
                write(r, &rep)?;
            }
            Ok(0)
        }
        Command::Gr(a) => {
            let f: PrefixMap = load(&a.map)?;
            let p: Partition = load(&a.partition)?;
            let g = build_gr(&f, &p)?;
            if let Some(d) = &a.dot {
                write_text(d, &to_dot(&g)?)?;
            }
            if a.out.is_some() || a.dot.is_none() {
                let comps: Vec<Classification> = classify_all(&g)?.into_iter().map(|(_, c)| c).collect();
                emit(a.out.as_ref(), &json!({ "digraph": g, "components": comps }))?;
            }
            Ok(0)
        }
        Command::Approx(a) => {
            let f: PrefixMap = load(&a.map)?;
            let kind = match a.shape {
                ShapeArg::Balloon => ShapeKind::Balloon,
                ShapeArg::Dumbbell => ShapeKind::Dumbbell,
            };
            let ov = Overrides {
                k: a.k,
                s: a.s,
                m: a.m,
                n: a.n,
                q_policy: if a.halved { QPolicy::Halved } else { QPolicy::Ultrametric },
            };
            let ap = approximate(&f, a.eps, kind, ov)?;
            write(&a.out, &ap.g)?;
            write(&a.partition, &ap.p)?;
            if let Some(r) = &a.report {
                let rep = ap.report();
                let checks = json!({
                    "sup_dist_below_eps": rep.sup_dist < a.eps,
                    "mesh_below_eps": rep.mesh_p < a.eps,
                    "lift_bound_holds": rep.sup_dist <= rep.lift_bound,
                });
                write(r, &json!({ "eps": a.eps, "report": rep, "checks": checks }))?;
            }
            Ok(0)
        }
        Command::Conjugate(a) => {
            let f: PrefixMap = load(&a.f)?;
            let g: PrefixMap = load(&a.g)?;
            let n = a.stages as usize;
            let s = match (Witnesses::load(&a.witnesses[0])?, Witnesses::load(&a.witnesses[1])?) {
                (Witnesses::Hom(wf), Witnesses::Hom(wg)) => back_and_forth_hom(&f, &wf, &g, &wg, n)?,
                (Witnesses::Cont(wf), Witnesses::Cont(wg)) => back_and_forth_cont(&f, &wf, &g, &wg, n)?,
                _ => return Err(Error::Invalid("witness files are of different kinds".into())),
            };
            let c = conjugator(&s, &f, &g)?;
            write(&a.out, &c.h)?;
            if let Some(r) = &a.report {
                let stages: Vec<_> = c
                    .stages
                    .iter()
                    .map(|st| json!({ "report": st, "residual_within_bound": st.residual <= st.bound }))
                    .collect();
                let nonincreasing = c.stages.windows(2).all(|p| p[1].residual <= p[0].residual);
                let cauchy: Vec<_> = c
                    .cauchy
                    .iter()
                    .map(|b| json!({ "bound": b, "holds": b.dist <= b.bound }))
                    .collect();
                let rep = json!({
                    "commutes": commutes_check(&s),
                    "stages": stages,
                    "residuals_nonincreasing": nonincreasing,
                    "cauchy": cauchy,
                });
                write(r, &rep)?;
            }
            Ok(0)
        }
        Command::Analyze { command } => analyze(command),
    }
}

fn check_all(verdicts: Vec<Verdict>, report: Option<&PathBuf>) -> Result<i32> {
    let ok = verdicts.iter().all(|v| v.ok);
    let stages: Vec<_> = verdicts
        .iter()
        .enumerate()
        .map(|(i, v)| json!({ "m": i + 1, "verdict": v }))
        .collect();
    emit(report, &json!({ "ok": ok, "stages": stages }))?;
    Ok(if ok { 0 } else { 1 })
}

fn analyze(cmd: Analyze) -> Result<i32> {
    match cmd {
        Analyze::CheckP(c) => {
            let h: PrefixMap = load(&c.map)?;
            let ws: Vec<HomWitness> = load(&c.witnesses)?;
            let v = ws.iter().enumerate().map(|(i, w)| check_property_p(&h, w, i + 1)).collect();
            check_all(v, c.report.as_ref())
        }
        Analyze::CheckQ(c) => {
            let f: PrefixMap = load(&c.map)?;
            let ws: Vec<ContWitness> = load(&c.witnesses)?;
            let v = ws.iter().enumerate().map(|(i, w)| check_property_q(&f, w, i + 1)).collect();
            check_all(v, c.report.as_ref())
        }
        Analyze::Shadow { common, stage, po } => {
            let h: PrefixMap = load(&common.map)?;
            let ws = Witnesses::load(&common.witnesses)?;
            let WitnessRef::Hom(w) = ws.stage(stage)? else {
                return Err(Error::Invalid("shadowing needs homeomorphism witnesses".into()));
            };
            let po: PseudoOrbit = load(&po)?;
            emit(common.report.as_ref(), &shadow(&h, w, &po)?)?;
            Ok(0)
        }
        Analyze::Liyorke { common, stage, x, y, n } => {
            let f: PrefixMap = load(&common.map)?;
            let ws = Witnesses::load(&common.witnesses)?;
            let v = li_yorke_exclusion(&f, ws.stage(stage)?, &x, &y, n)?;
            emit(common.report.as_ref(), &v)?;
            Ok(0)
        }
        Analyze::Omega { common, x, stages } => {
            let h: PrefixMap = load(&common.map)?;
            let ws = Witnesses::load(&common.witnesses)?;
            let hw = ws.hom()?;
            let oc = omega_covers(&h, hw, &x, stages.unwrap_or(hw.len()))?;
            let summary = json!({
                "settle": oc.settle,
                "alpha": oc.alpha,
                "cover_sizes": oc.covers.iter().map(|c| c.cells.len()).collect::<Vec<_>>(),
                "cover_meshes": oc.covers.iter().map(|c| c.mesh).collect::<Vec<_>>(),
                "universal": oc.universal,
                "bk": oc.bk,
            });
            emit(common.report.as_ref(), &summary)?;
            Ok(0)
        }
        Analyze::Recurrence { common, stage } => {
            let h: PrefixMap = load(&common.map)?;
            let ws = Witnesses::load(&common.witnesses)?;
            let WitnessRef::Hom(w) = ws.stage(Some(stage))? else {
                return Err(Error::Invalid("recurrence needs homeomorphism witnesses".into()));
            };
            emit(common.report.as_ref(), &recurrence_report(&h, w)?)?;
            Ok(0)
        }
        Analyze::Chain { common, x, eps, seed } => {
            let f: PrefixMap = load(&common.map)?;
            let ws = Witnesses::load(&common.witnesses)?;
            let seq = match &ws {
                Witnesses::Hom(w) => WitnessSeq::Hom(w),
                Witnesses::Cont(w) => WitnessSeq::Cont(w),
            };
            let m = chain_modulus(&f, seq, &x, eps, seed)?;
            emit(common.report.as_ref(), &m)?;
            Ok(if m.violations == 0 { 0 } else { 1 })
        }
        Analyze::Defect { common, stage, component, n } => {
            let h: PrefixMap = load(&common.map)?;
            let ws = Witnesses::load(&common.witnesses)?;
            let WitnessRef::Hom(w) = ws.stage(Some(stage))? else {
                return Err(Error::Invalid("the defect certificate needs homeomorphism witnesses".into()));
            };
            emit(common.report.as_ref(), &equicontinuity_defect(&h, w, component, n)?)?;
            Ok(0)
        }
    }
}
