//! Full pipeline, verdicts and report rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::conservation::{
    find_conservation_relations, reorder_conserved_last, ConservationError, ConservedStructure, DEFAULT_MAX_STATES,
};
use crate::drift::{
    build_drift_system, check_negative_drift, classify_reactions, positivize, verify_certificate,
    witness_violation, DriftOutcome, LyapunovCertificate, ReactionClassification,
};
use crate::irreducibility::{
    check_irreducibility, IrreducibilityCondition, IrreducibilityStatus, IrreducibilityVerdict, LevelDecomposition,
};
use crate::network::{parse_network, NetworkError, ReactionNetwork};
use crate::oracle::{
    batch_means, empirical_irreducibility_probe, gillespie_simulate, truncated_cme_stationary, CmeOptions,
    OracleError, ProbeResult, StationaryEstimate, Trajectory, DEFAULT_TRUNCATION_STATES,
};
use crate::rational::{format_rational, parse_rational, Rational};

pub const TOOL_NAME: &str = "ergocheck";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
/// Overrides the bound on enumerated conserved and truncated states.
pub const MAX_STATES_ENV: &str = "ERGOCHECK_MAX_STATES";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("conservation relations detected; supply --conserved-totals with one value per relation:\n{0}")]
    MissingTotals(String),
    #[error(transparent)]
    Conservation(ConservationError),
    #[error("invalid witness: {0}")]
    WitnessFormat(String),
    #[error("witness rejected: {0}")]
    WitnessRejected(String),
    #[error("invalid value for {MAX_STATES_ENV}: {0}")]
    Environment(String),
    #[error("internal solver failure: {0}")]
    Solver(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

impl ReportError {
    /// Input and parse problems exit with 3; internal failures with 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Solver(_) => 1,
            _ => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    ProvenErgodic,
    IrreducibilityDisproven,
    Inconclusive,
    Unsupported,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Self::ProvenErgodic => 0,
            Self::Inconclusive => 1,
            Self::IrreducibilityDisproven => 2,
            Self::Unsupported => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::ProvenErgodic => "PROVEN_ERGODIC",
            Self::IrreducibilityDisproven => "IRREDUCIBILITY_DISPROVEN",
            Self::Inconclusive => "INCONCLUSIVE",
            Self::Unsupported => "UNSUPPORTED",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleMode {
    Ssa,
    Cme,
    #[default]
    Off,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeOptions {
    pub totals: Option<Vec<u64>>,
    pub max_states: usize,
    pub timings: bool,
    pub oracle: OracleMode,
    pub seed: u64,
    pub t_end: f64,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        Self { totals: None, max_states: DEFAULT_MAX_STATES, timings: true, oracle: OracleMode::Off, seed: 0, t_end: 1000.0 }
    }
}

impl AnalyzeOptions {
    /// Applies [`MAX_STATES_ENV`] when set.
    pub fn with_env(mut self) -> Result<Self, ReportError> {
        if let Ok(v) = std::env::var(MAX_STATES_ENV) {
            self.max_states = v.trim().parse().map_err(|_| ReportError::Environment(v.clone()))?;
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSummary {
    pub species: Vec<String>,
    pub dim: usize,
    pub reactions: usize,
    pub unconserved: Vec<String>,
    pub conserved: Vec<String>,
    /// `|E_c|`, absent when the conserved space was never enumerated.
    pub conserved_states: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConservationReport {
    /// Original species order.
    pub gamma: Vec<i64>,
    pub total: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckReport {
    pub condition: IrreducibilityCondition,
    pub passed: bool,
    pub necessary: bool,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelsReport {
    pub levels: Vec<Vec<String>>,
    pub exhaustive: bool,
    pub uncovered: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub states: usize,
    pub classes: usize,
    pub closed: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IrreducibilityReport {
    pub status: IrreducibilityStatus,
    pub failed_condition: Option<IrreducibilityCondition>,
    pub checks: Vec<CheckReport>,
    pub rank: usize,
    pub hnf_pivots: Option<Vec<String>>,
    /// Strictly positive kernel vector, one entry per reaction.
    pub kernel_witness: Option<Vec<String>>,
    pub conserved_classes: Option<ClassSummary>,
    pub forward_levels: Option<LevelsReport>,
    pub inverse_levels: Option<LevelsReport>,
    pub self_check: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationReport {
    /// One-based reaction indices.
    pub unary_unconserved: Vec<usize>,
    pub binary: Vec<usize>,
    pub remainder: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriftMode {
    Solve,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DriftStatus {
    Certified,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DriftReport {
    pub mode: DriftMode,
    pub status: DriftStatus,
    pub verified: bool,
    /// Vectors over species use the original order.
    pub w: Option<Vec<String>>,
    pub v_positive: Option<Vec<String>>,
    /// One per conservation relation.
    pub alphas: Option<Vec<String>>,
    /// `A w`, one entry per unconserved species.
    pub drift_margin: Option<Vec<String>>,
    pub lyapunov: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesMoment {
    pub species: String,
    pub mean: f64,
    pub standard_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub mode: OracleMode,
    pub seed: Option<u64>,
    pub t_end: Option<f64>,
    pub jumps: Option<usize>,
    pub initial_state: Option<Vec<u64>>,
    /// Per unconserved species upper bound of the truncation box.
    pub box_upper: Option<Vec<u64>>,
    pub states: Option<usize>,
    pub boundary_mass: Option<f64>,
    pub truncation_too_small: Option<bool>,
    pub probe: Option<ProbeResult>,
    pub moments: Vec<SpeciesMoment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgodicityReport {
    pub tool: ToolInfo,
    pub input_sha256: String,
    pub verdict: Verdict,
    pub reason: Option<String>,
    pub network: NetworkSummary,
    pub conservation: Vec<ConservationReport>,
    pub irreducibility: Option<IrreducibilityReport>,
    pub classification: Option<ClassificationReport>,
    pub drift: Option<DriftReport>,
    pub oracle: Option<OracleReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings_ms: Option<BTreeMap<String, f64>>,
}

impl ErgodicityReport {
    pub fn exit_code(&self) -> i32 {
        self.verdict.exit_code()
    }
}

/// Everything a run produces, including raw oracle artifacts for export.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub report: ErgodicityReport,
    pub trajectory: Option<Trajectory>,
    pub stationary: Option<StationaryEstimate>,
}

pub fn analyze(path: &Path, opts: &AnalyzeOptions) -> Result<ErgodicityReport, ReportError> {
    Ok(run(&read(path)?, None, opts)?.report)
}

/// Like [`analyze`], but checks the supplied witness (original species
/// order) instead of solving for one.
pub fn verify(path: &Path, witness: &[Rational], opts: &AnalyzeOptions) -> Result<ErgodicityReport, ReportError> {
    Ok(run(&read(path)?, Some(witness), opts)?.report)
}

fn read(path: &Path) -> Result<String, ReportError> {
    std::fs::read_to_string(path).map_err(|e| ReportError::Io { path: path.display().to_string(), message: e.to_string() })
}

/// Reads a witness: a JSON array, or an object with a `w` or `v` array.
/// Entries are `"p/q"` strings, decimal strings or JSON numbers.
pub fn parse_witness(json: &str) -> Result<Vec<Rational>, ReportError> {
    let value: serde_json::Value = serde_json::from_str(json).map_err(|e| ReportError::WitnessFormat(e.to_string()))?;
    let arr = match &value {
        serde_json::Value::Array(a) => a,
        serde_json::Value::Object(o) => match o.get("w").or_else(|| o.get("v")) {
            Some(serde_json::Value::Array(a)) => a,
            _ => return Err(ReportError::WitnessFormat("expected an array under \"w\" or \"v\"".into())),
        },
        _ => return Err(ReportError::WitnessFormat("expected an array".into())),
    };
    arr.iter()
        .map(|e| {
            let text = match e {
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Number(n) => n.to_string(),
                other => return Err(ReportError::WitnessFormat(format!("unexpected entry {other}"))),
            };
            parse_rational(&text).map_err(|e| ReportError::WitnessFormat(e.to_string()))
        })
        .collect()
}

pub fn load_witness(path: &Path) -> Result<Vec<Rational>, ReportError> {
    parse_witness(&read(path)?)
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn strings(v: &[Rational]) -> Vec<String> {
    v.iter().map(format_rational).collect()
}

fn one_based(v: &[usize]) -> Vec<usize> {
    v.iter().map(|k| k + 1).collect()
}

struct Timer {
    enabled: bool,
    map: BTreeMap<String, f64>,
}

impl Timer {
    fn stage<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        if self.enabled {
            self.map.insert(name.to_string(), start.elapsed().as_secs_f64() * 1e3);
        }
        out
    }
}

/// Runs the pipeline on network text: parse, conservation, reordering,
/// irreducibility and drift (concurrently), verdict, optional oracle.
pub fn run(text: &str, witness: Option<&[Rational]>, opts: &AnalyzeOptions) -> Result<Analysis, ReportError> {
    let mut timer = Timer { enabled: opts.timings, map: BTreeMap::new() };
    let net = timer.stage("parse", || parse_network(text))?;
    let mut report = ErgodicityReport {
        tool: ToolInfo { name: TOOL_NAME.into(), version: TOOL_VERSION.into() },
        input_sha256: sha256_hex(text.as_bytes()),
        verdict: Verdict::Unsupported,
        reason: None,
        network: NetworkSummary {
            species: net.species().to_vec(),
            dim: net.dim(),
            reactions: net.num_reactions(),
            unconserved: Vec::new(),
            conserved: Vec::new(),
            conserved_states: None,
        },
        conservation: Vec::new(),
        irreducibility: None,
        classification: None,
        drift: None,
        oracle: None,
        timings_ms: None,
    };
    let finish = |mut report: ErgodicityReport, timer: Timer| {
        report.timings_ms = opts.timings.then_some(timer.map);
        report
    };

    if let Some((k, r)) = net.reactions().iter().enumerate().find(|(_, r)| r.order() > 2) {
        report.reason = Some(format!(
            "reaction {} ({}) consumes {} molecules; at most 2 are supported",
            k + 1,
            net.describe_reaction(k),
            r.order()
        ));
        return Ok(Analysis { report: finish(report, timer), trajectory: None, stationary: None });
    }
    if let Some(w) = witness {
        if w.len() != net.dim() {
            return Err(ReportError::WitnessFormat(format!("witness has {} entries, expected {}", w.len(), net.dim())));
        }
    }

    let gammas = match timer.stage("conservation", || find_conservation_relations(&net.stoichiometry_matrix())) {
        Ok(g) => g,
        Err(ConservationError::OverlappingConservation { species }) => {
            report.reason = Some(format!(
                "conservation relations overlap on species {}; only disjoint relations are supported",
                species.iter().map(|&i| net.species()[i].as_str()).collect::<Vec<_>>().join(",")
            ));
            return Ok(Analysis { report: finish(report, timer), trajectory: None, stationary: None });
        }
        Err(e) => return Err(ReportError::Solver(e.to_string())),
    };
    let totals = match (&opts.totals, gammas.is_empty()) {
        (Some(t), _) if t.len() != gammas.len() => {
            return Err(ReportError::Conservation(ConservationError::TotalsMismatch {
                expected: gammas.len(),
                got: t.len(),
            }))
        }
        (Some(t), _) => t.clone(),
        (None, true) => Vec::new(),
        (None, false) => return Err(ReportError::MissingTotals(describe_gammas(&net, &gammas))),
    };
    report.conservation =
        gammas.iter().zip(&totals).map(|(g, &t)| ConservationReport { gamma: g.clone(), total: Some(t) }).collect();

    let (rnet, cs) = reorder_conserved_last(&net, &gammas);
    let cs = if cs.has_conservation() {
        timer.stage("enumerate", || cs.with_totals(&totals, opts.max_states)).map_err(ReportError::Conservation)?
    } else {
        cs
    };
    let d_u = cs.unconserved_count;
    report.network.unconserved = rnet.species()[..d_u].to_vec();
    report.network.conserved = rnet.species()[d_u..].to_vec();
    report.network.conserved_states = Some(cs.num_conserved_states());

    let rc = classify_reactions(&rnet, &cs).map_err(|e| ReportError::Solver(e.to_string()))?;
    report.classification = Some(ClassificationReport {
        unary_unconserved: one_based(&rc.unary_unconserved),
        binary: one_based(&rc.binary),
        remainder: one_based(&rc.remainder),
    });

    let started = Instant::now();
    let (irr, drift) = std::thread::scope(|s| {
        let irr = s.spawn(|| {
            let t = Instant::now();
            (check_irreducibility(&rnet, &cs), t.elapsed())
        });
        let t = Instant::now();
        let drift = drift_stage(&rnet, &cs, &rc, witness);
        let drift_time = t.elapsed();
        (irr.join().expect("irreducibility thread panicked"), (drift, drift_time))
    });
    if opts.timings {
        timer.map.insert("irreducibility".into(), irr.1.as_secs_f64() * 1e3);
        timer.map.insert("drift".into(), drift.1.as_secs_f64() * 1e3);
        timer.map.insert("irreducibility_and_drift_wall".into(), started.elapsed().as_secs_f64() * 1e3);
    }
    let irr = irr.0.map_err(|e| ReportError::Solver(e.to_string()))?;
    let (drift_report, cert_ok) = drift.0?;
    let self_check = irr.self_check(&rnet, &cs);
    report.irreducibility = Some(irreducibility_report(&irr, &rnet, self_check));
    report.drift = Some(drift_report);

    let (verdict, reason) = match irr.status {
        IrreducibilityStatus::NecessaryConditionFailed => {
            let c = irr.failed_condition.expect("failed condition recorded");
            (Verdict::IrreducibilityDisproven, Some(format!("necessary condition failed: {}", c.describe())))
        }
        IrreducibilityStatus::Inconclusive => {
            let c = irr.failed_condition.expect("failed condition recorded");
            (Verdict::Inconclusive, Some(format!("sufficient condition not met: {}", c.describe())))
        }
        IrreducibilityStatus::IrreducibleProven if !self_check => {
            (Verdict::Inconclusive, Some("irreducibility certificates failed re-verification".into()))
        }
        IrreducibilityStatus::IrreducibleProven if !cert_ok => (
            Verdict::Inconclusive,
            Some("sufficient condition not met: no linear Lyapunov function with negative drift exists".into()),
        ),
        IrreducibilityStatus::IrreducibleProven => (Verdict::ProvenErgodic, None),
    };
    report.verdict = verdict;
    report.reason = reason;

    let (oracle, trajectory, stationary) = match opts.oracle {
        OracleMode::Off => (None, None, None),
        mode => {
            let (o, t, s) = timer.stage("oracle", || run_oracle(mode, &rnet, &cs, opts))?;
            (Some(o), t, s)
        }
    };
    report.oracle = oracle;
    Ok(Analysis { report: finish(report, timer), trajectory, stationary })
}

fn describe_gammas(net: &ReactionNetwork, gammas: &[Vec<i64>]) -> String {
    gammas
        .iter()
        .enumerate()
        .map(|(r, g)| {
            let terms: Vec<String> = g
                .iter()
                .enumerate()
                .filter(|(_, &c)| c != 0)
                .map(|(i, &c)| if c == 1 { net.species()[i].clone() } else { format!("{c}*{}", net.species()[i]) })
                .collect();
            format!("  relation {}: {} = C{}", r + 1, terms.join(" + "), r + 1)
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn drift_stage(
    net: &ReactionNetwork,
    cs: &ConservedStructure,
    rc: &ReactionClassification,
    witness: Option<&[Rational]>,
) -> Result<(DriftReport, bool), ReportError> {
    let ds = build_drift_system(rc, net, cs);
    let (mode, cert) = match witness {
        Some(w) => {
            let w = cs.from_original(w);
            if let Some(v) = witness_violation(&ds, &w, net.species()) {
                return Err(ReportError::WitnessRejected(v));
            }
            (DriftMode::Verify, Some(positivize(&ds, &w)))
        }
        None => match check_negative_drift(&ds).map_err(|e| ReportError::Solver(e.to_string()))? {
            DriftOutcome::Certified(c) => (DriftMode::Solve, Some(c)),
            DriftOutcome::Infeasible => (DriftMode::Solve, None),
        },
    };
    Ok(match cert {
        Some(c) => {
            let ok = verify_certificate(&c, &ds);
            (certificate_report(mode, &c, cs, net, ok), ok)
        }
        None => (
            DriftReport {
                mode,
                status: DriftStatus::Infeasible,
                verified: false,
                w: None,
                v_positive: None,
                alphas: None,
                drift_margin: None,
                lyapunov: None,
            },
            false,
        ),
    })
}

fn certificate_report(
    mode: DriftMode,
    c: &LyapunovCertificate,
    cs: &ConservedStructure,
    net: &ReactionNetwork,
    verified: bool,
) -> DriftReport {
    let v = cs.to_original(&c.v_positive);
    let names = cs.to_original(net.species());
    let terms: Vec<String> = v
        .iter()
        .zip(&names)
        .map(|(q, n)| if num_traits::One::is_one(q) { n.clone() } else { format!("{}*{n}", format_rational(q)) })
        .collect();
    DriftReport {
        mode,
        status: DriftStatus::Certified,
        verified,
        w: Some(strings(&cs.to_original(&c.w))),
        v_positive: Some(strings(&v)),
        alphas: Some(strings(&c.alphas)),
        drift_margin: Some(strings(&c.drift_margin)),
        lyapunov: Some(format!("V(x) = {}", terms.join(" + "))),
    }
}

fn levels_report(l: &LevelDecomposition, net: &ReactionNetwork) -> LevelsReport {
    let name = |i: &usize| net.species()[*i].clone();
    LevelsReport {
        levels: l.levels.iter().map(|g| g.iter().map(name).collect()).collect(),
        exhaustive: l.exhaustive,
        uncovered: l.uncovered.iter().map(name).collect(),
    }
}

fn irreducibility_report(v: &IrreducibilityVerdict, net: &ReactionNetwork, self_check: bool) -> IrreducibilityReport {
    IrreducibilityReport {
        status: v.status,
        failed_condition: v.failed_condition,
        checks: v
            .checks
            .iter()
            .map(|&(c, passed)| CheckReport {
                condition: c,
                passed,
                necessary: c.is_necessary(),
                description: c.describe().to_string(),
            })
            .collect(),
        rank: v.rank,
        hnf_pivots: v.hnf.as_ref().map(|h| h.pivot_values().map(|p| p.to_string()).collect()),
        kernel_witness: v.kernel.as_ref().and_then(|k| k.witness.as_deref()).map(strings),
        conserved_classes: v.full_availability_classes.as_ref().map(|a| ClassSummary {
            states: a.transitions.len(),
            classes: a.classes.len(),
            closed: a.eta(),
        }),
        forward_levels: v.forward_levels.as_ref().map(|l| levels_report(l, net)),
        inverse_levels: v.inverse_levels.as_ref().map(|l| levels_report(l, net)),
        self_check,
    }
}

/// Largest uniform per-species bound (at most 50) that keeps the truncated
/// space within `limit` states.
fn uniform_box(d_u: usize, conserved: usize, limit: usize) -> Vec<u64> {
    let fits = |b: u64| {
        let mut n = conserved.max(1) as f64;
        for _ in 0..d_u {
            n *= (b + 1) as f64;
        }
        n <= limit as f64
    };
    let b = (0..=50u64).rev().find(|&b| fits(b)).unwrap_or(0);
    vec![b; d_u]
}

fn run_oracle(
    mode: OracleMode,
    net: &ReactionNetwork,
    cs: &ConservedStructure,
    opts: &AnalyzeOptions,
) -> Result<(OracleReport, Option<Trajectory>, Option<StationaryEstimate>), ReportError> {
    let names = cs.to_original(net.species());
    let mut report = OracleReport {
        mode,
        seed: None,
        t_end: None,
        jumps: None,
        initial_state: None,
        box_upper: None,
        states: None,
        boundary_mass: None,
        truncation_too_small: None,
        probe: None,
        moments: Vec::new(),
    };
    match mode {
        OracleMode::Off => Ok((report, None, None)),
        OracleMode::Ssa => {
            let mut x0 = vec![0u64; cs.unconserved_count];
            x0.extend(cs.conserved_states.first().cloned().unwrap_or_default());
            let traj = gillespie_simulate(net, &x0, opts.t_end, opts.seed)?;
            let original = |x: &[u64]| cs.to_original(x);
            let traj = Trajectory {
                states: traj.states.iter().map(|s| original(s)).collect(),
                ..traj
            };
            report.seed = Some(opts.seed);
            report.t_end = Some(opts.t_end);
            report.jumps = Some(traj.num_jumps());
            report.initial_state = Some(traj.initial_state().to_vec());
            report.moments = names
                .iter()
                .enumerate()
                .map(|(i, n)| {
                    let bm = batch_means(&traj, |x| x[i] as f64, 20);
                    SpeciesMoment { species: n.clone(), mean: bm.mean, standard_error: Some(bm.standard_error) }
                })
                .collect();
            Ok((report, Some(traj), None))
        }
        OracleMode::Cme => {
            let limit = opts.max_states.min(DEFAULT_TRUNCATION_STATES);
            let upper = uniform_box(cs.unconserved_count, cs.num_conserved_states(), limit);
            let copts = CmeOptions { max_states: limit, ..CmeOptions::default() };
            let est = truncated_cme_stationary(net, cs, &upper, &copts)?;
            report.probe = Some(empirical_irreducibility_probe(net, cs, &upper, limit)?);
            report.box_upper = Some(upper);
            report.states = Some(est.states.len());
            report.boundary_mass = Some(est.boundary_mass);
            report.truncation_too_small = Some(est.truncation_too_small);
            report.moments = names
                .iter()
                .enumerate()
                .map(|(i, n)| SpeciesMoment { species: n.clone(), mean: est.mean(i), standard_error: None })
                .collect();
            Ok((report, None, Some(est)))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Human,
    Json,
}

pub fn render_report(report: &ErgodicityReport, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        Format::Human => render_human(report),
    }
}

/// Parses a JSON report produced by [`render_report`].
pub fn parse_report(json: &str) -> Result<ErgodicityReport, serde_json::Error> {
    serde_json::from_str(json)
}

fn set(names: &[String]) -> String {
    format!("{{{}}}", names.join(","))
}

fn tuple(v: &[String]) -> String {
    format!("({})", v.join(", "))
}

fn render_levels(label: &str, l: &LevelsReport) -> String {
    let gs: Vec<String> = l.levels.iter().enumerate().map(|(i, g)| format!("G{}={}", i + 1, set(g))).collect();
    let mut line = format!("{label}: {}", if gs.is_empty() { "(none)".to_string() } else { gs.join(" ") });
    if !l.exhaustive {
        let _ = write!(line, "  uncovered={}", set(&l.uncovered));
    }
    line
}

fn render_human(r: &ErgodicityReport) -> String {
    let mut out = String::new();
    let n = &r.network;
    let _ = writeln!(out, "{} {}  input sha256 {}", r.tool.name, r.tool.version, r.input_sha256);
    let _ = writeln!(out, "verdict: {}", r.verdict.as_str());
    if let Some(reason) = &r.reason {
        let _ = writeln!(out, "reason: {reason}");
    }
    let _ = write!(out, "network: d={} K={} d_u={} d_c={}", n.dim, n.reactions, n.unconserved.len(), n.conserved.len());
    if let Some(e) = n.conserved_states {
        let _ = write!(out, " |E_c|={e}");
    }
    out.push('\n');
    for (i, c) in r.conservation.iter().enumerate() {
        let g: Vec<String> = c.gamma.iter().map(i64::to_string).collect();
        let total = c.total.map_or("?".to_string(), |t| t.to_string());
        let _ = writeln!(out, "conservation {}: gamma={} total={total}", i + 1, tuple(&g));
    }
    if let Some(irr) = &r.irreducibility {
        let status = serde_json::to_value(irr.status).expect("status serializes");
        let _ = writeln!(out, "irreducibility: {}", status.as_str().unwrap_or_default());
        for c in &irr.checks {
            let kind = if c.necessary { "necessary" } else { "sufficient" };
            let mark = if c.passed { "ok" } else { "FAILED" };
            let _ = writeln!(out, "  [{mark}] {} ({kind})", c.description);
        }
        let _ = writeln!(out, "  rank: {}", irr.rank);
        if let Some(p) = &irr.hnf_pivots {
            let _ = writeln!(out, "  hnf pivots: {}", p.join(" "));
        }
        if let Some(k) = &irr.kernel_witness {
            let _ = writeln!(out, "  kernel witness: {}", tuple(k));
        }
        if let Some(c) = &irr.conserved_classes {
            let _ = writeln!(
                out,
                "  conserved classes (all species abundant): {} states, {} classes, {} closed",
                c.states, c.classes, c.closed
            );
        }
        if let Some(l) = &irr.forward_levels {
            let _ = writeln!(out, "{}", render_levels("levels", l));
        }
        if let Some(l) = &irr.inverse_levels {
            let _ = writeln!(out, "{}", render_levels("inverse levels", l));
        }
    }
    if let Some(c) = &r.classification {
        let list = |v: &[usize]| set(&v.iter().map(usize::to_string).collect::<Vec<_>>());
        let _ = writeln!(
            out,
            "classification: K_unr={} K_bin={} K'={}",
            list(&c.unary_unconserved),
            list(&c.binary),
            list(&c.remainder)
        );
    }
    if let Some(d) = &r.drift {
        let mode = match d.mode {
            DriftMode::Solve => "solve",
            DriftMode::Verify => "verify",
        };
        match d.status {
            DriftStatus::Infeasible => {
                let _ = writeln!(out, "drift: INFEASIBLE ({mode})");
            }
            DriftStatus::Certified => {
                let _ = writeln!(out, "drift: CERTIFIED ({mode}), verified={}", d.verified);
                if let Some(w) = &d.w {
                    let _ = writeln!(out, "  w = {}", tuple(w));
                }
                if let Some(a) = &d.alphas {
                    if !a.is_empty() {
                        let _ = writeln!(out, "  alphas = {}", tuple(a));
                    }
                }
                if let Some(m) = &d.drift_margin {
                    let _ = writeln!(out, "  A w = {}", tuple(m));
                }
                if let Some(v) = &d.v_positive {
                    let _ = writeln!(out, "lyapunov vector: v = {}", tuple(v));
                }
                if let Some(l) = &d.lyapunov {
                    let _ = writeln!(out, "lyapunov: {l}");
                }
            }
        }
    }
    if let Some(o) = &r.oracle {
        match o.mode {
            OracleMode::Ssa => {
                let _ = writeln!(
                    out,
                    "oracle: ssa seed={} t_end={} jumps={}",
                    o.seed.unwrap_or_default(),
                    o.t_end.unwrap_or_default(),
                    o.jumps.unwrap_or_default()
                );
            }
            OracleMode::Cme => {
                let _ = writeln!(
                    out,
                    "oracle: cme states={} boundary_mass={:.3e}{}",
                    o.states.unwrap_or_default(),
                    o.boundary_mass.unwrap_or_default(),
                    if o.truncation_too_small == Some(true) { " (truncation too small)" } else { "" }
                );
                if let Some(p) = &o.probe {
                    let _ = writeln!(
                        out,
                        "  probe: interior={} components={} strongly_connected={}",
                        p.interior, p.interior_components, p.strongly_connected
                    );
                }
            }
            OracleMode::Off => {}
        }
        for m in &o.moments {
            match m.standard_error {
                Some(se) => {
                    let _ = writeln!(out, "  mean {} = {:.6} (se {:.2e})", m.species, m.mean, se);
                }
                None => {
                    let _ = writeln!(out, "  mean {} = {:.6}", m.species, m.mean);
                }
            }
        }
    }
    if let Some(t) = &r.timings_ms {
        let parts: Vec<String> = t.iter().map(|(k, v)| format!("{k}={v:.2}ms")).collect();
        let _ = writeln!(out, "timings: {}", parts.join(" "));
    }
    out
}
