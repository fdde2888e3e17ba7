//! The certification protocol: per-edge branching measurements, edge scores,
//! the covering average, and the resulting certificate.
//!
//! For every covering edge a measurement plan names the parties to measure
//! and the local bases; each joint outcome leaves a conditional bipartite
//! state on the edge (bystanders are traced out, which can only lower the
//! achievable score and therefore never helps a cheater). An assignment rule
//! turns each branch into a pair of observable sets, the inequality scores
//! the branch, and the edge score is the probability-weighted branch
//! average. Certification compares the covering-averaged score against the
//! min-cut biseparable bound — strictly: ties do not certify.

use crate::bell::{
    chsh_observables_for, default_observables, optimal_chsh, BellInequality, BranchParity, Family,
    ObservablePair,
};
use crate::covering::{biseparable_bound, Covering};
use crate::error::{Error, Result};
use crate::qcore::{measure_parties, CMatrix, LocalBasis, Observable, Register, State};
use crate::states::BiseparableModel;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use std::collections::BTreeMap;
use std::fmt::Write as _;

// ---------------------------------------------------------------------------
// Plans and strategies

/// How a branch outcome picks observables for the edge parties.
#[derive(Debug, Clone)]
pub enum AssignRule {
    /// Parity of the measured outcomes selects the even/odd reference
    /// observables of the inequality family.
    Parity,
    /// Per-branch optimal CHSH observables from the branch state's
    /// correlation matrix; falls back to the trivial deterministic strategy
    /// when the branch cannot beat 2.
    Horodecki,
    /// Explicit outcome-to-observables table.
    Explicit(BTreeMap<Vec<usize>, ObservablePair>),
}

/// Measurement plan for one covering edge: which parties to measure (a
/// subset of the non-edge parties; the rest are traced out as bystanders),
/// in which bases, and how outcomes map to observables.
#[derive(Debug, Clone)]
pub struct EdgePlan {
    pub edge: (usize, usize),
    pub measured: Vec<usize>,
    pub bases: Vec<LocalBasis>,
    pub assign: AssignRule,
}

/// Built-in measurement strategies.
#[derive(Debug, Clone)]
pub enum MeasurementStrategy {
    /// Measure all non-edge parties in the X basis; outcome parity picks the
    /// reference observables. Exact for GHZ-type states under CHSH.
    GhzX,
    /// Same X-and-parity scheme driven by the tilted family's reference
    /// observables. Exact for tilted GHZ states.
    TiltedX,
    /// Chain-aware plan for linear cluster states on a path: measure the
    /// edge's chain neighbors (X at chain endpoints, Z in the interior),
    /// leave farther parties as bystanders, and score each branch with its
    /// own optimal CHSH observables. Non-chain edges fall back to the
    /// exhaustive search.
    ClusterPauli,
    /// Exhaustive deterministic search (CHSH only): try every Pauli-basis
    /// assignment on the non-edge parties, score branches by the CHSH
    /// criterion floored at the deterministic 2, keep the best. All
    /// reported values are attained by explicit observables.
    Auto,
    /// Explicit per-edge plans.
    Plans(Vec<EdgePlan>),
}

impl MeasurementStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            MeasurementStrategy::GhzX => "ghz-x",
            MeasurementStrategy::TiltedX => "tilted-x",
            MeasurementStrategy::ClusterPauli => "cluster-pauli",
            MeasurementStrategy::Auto => "auto",
            MeasurementStrategy::Plans(_) => "plans",
        }
    }
}

// ---------------------------------------------------------------------------
// Reports

/// One scored branch as it appears in a certificate.
#[derive(Debug, Clone, serde::Serialize)]
pub struct BranchReport {
    pub label: String,
    pub probability: f64,
    pub score: f64,
    pub zero_prob: bool,
}

/// One edge of the covering: its branch table and the edge score
/// `beta_e = sum_b p_b * s_b` (zero-probability branches excluded, with
/// their mass reported separately).
#[derive(Debug, Clone, serde::Serialize)]
pub struct EdgeReport {
    /// One-indexed party pair.
    pub edge: [usize; 2],
    pub beta_e: f64,
    pub excluded_probability: f64,
    pub branches: Vec<BranchReport>,
}

/// Lower bound on the genuinely multipartite-entangled weight.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct GmeWeight {
    /// `(beta_bar - bound) / (beta_quantum - bound)`, possibly negative.
    pub raw: f64,
    /// `raw` clamped to `[0, 1]`.
    pub clamped: f64,
}

/// Statistical errors attached when the certificate comes from finite
/// counts rather than exact quantum expectations.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct CertificateStats {
    pub total_shots: u64,
    pub beta_bar_stderr: f64,
    pub gme_weight_stderr: f64,
}

/// Covering facts embedded in a certificate.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CoveringReport {
    pub n_parties: usize,
    pub family: Option<String>,
    /// One-indexed edges.
    pub edges: Vec<[usize; 2]>,
    pub edge_count: usize,
    pub mincut: usize,
}

/// The full output of a certification run. Contains only plain data — no
/// state vectors — and serializes deterministically.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Certificate {
    pub inequality: String,
    pub beta_quantum: f64,
    pub local_bound: crate::bell::LocalBoundReport,
    pub covering: CoveringReport,
    pub strategy: String,
    pub biseparable_bound: f64,
    pub beta_bar: f64,
    /// Strict comparison: `beta_bar > biseparable_bound`.
    pub certified: bool,
    pub gme_weight: GmeWeight,
    /// Present when the configured local bound differs from the
    /// deterministic optimum of the implemented expression.
    pub caveat: Option<String>,
    pub edges: Vec<EdgeReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stats: Option<CertificateStats>,
}

// ---------------------------------------------------------------------------
// Branch preparation and scoring

/// A conditional bipartite state on an edge, together with the outcome that
/// produced it. `pair` is `None` only for zero-probability branches.
#[derive(Debug, Clone)]
pub struct Branch {
    pub outcome: Vec<usize>,
    pub probability: f64,
    pub pair: Option<State>,
    pub zero_prob: bool,
}

fn branch_label(outcome: &[usize]) -> String {
    if outcome.is_empty() {
        "-".to_string()
    } else {
        outcome.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(".")
    }
}

/// Measure the plan's parties and reduce every outcome to the edge pair
/// (side A is the lower-numbered party).
pub fn prepare_branches(state: &State, plan: &EdgePlan) -> Result<Vec<Branch>> {
    let n = state.register().n_parties();
    let (a, b) = plan.edge;
    if a >= b || b >= n {
        return Err(Error::InvalidStrategy(format!("edge ({a}, {b}) is not valid")));
    }
    if plan.measured.iter().any(|p| *p == a || *p == b) {
        return Err(Error::InvalidStrategy("plan measures an edge party".into()));
    }
    let outcomes = measure_parties(state, &plan.measured, &plan.bases)?;
    // positions of the edge parties among the surviving (unmeasured) parties
    let rest: Vec<usize> = (0..n).filter(|p| !plan.measured.contains(p)).collect();
    let pos_a = rest.iter().position(|&p| p == a).unwrap();
    let pos_b = rest.iter().position(|&p| p == b).unwrap();
    let mut branches = Vec::with_capacity(outcomes.len());
    for out in outcomes {
        if out.zero_prob {
            branches.push(Branch {
                outcome: out.outcome,
                probability: out.probability,
                pair: None,
                zero_prob: true,
            });
            continue;
        }
        let pair = if rest.len() == 2 {
            out.post
        } else {
            State::Mixed(out.post.reduced(&[pos_a, pos_b])?)
        };
        branches.push(Branch {
            outcome: out.outcome,
            probability: out.probability,
            pair: Some(pair),
            zero_prob: false,
        });
    }
    Ok(branches)
}

/// Observables for one branch under an assignment rule.
pub fn observables_for_branch(
    ineq: &BellInequality,
    rule: &AssignRule,
    branch: &Branch,
) -> Result<ObservablePair> {
    match rule {
        AssignRule::Parity => {
            let ones: usize = branch.outcome.iter().map(|&d| d % 2).sum();
            let parity = if ones % 2 == 0 { BranchParity::Even } else { BranchParity::Odd };
            default_observables(ineq, parity)
        }
        AssignRule::Horodecki => {
            if !matches!(ineq.family(), Family::Chsh) {
                return Err(Error::InvalidStrategy(
                    "branch-optimal observables are implemented for CHSH only".into(),
                ));
            }
            let pair = branch.pair.as_ref().ok_or_else(|| {
                Error::InvalidStrategy("no state available for a zero-probability branch".into())
            })?;
            let opt = optimal_chsh(pair)?;
            if opt.criterion > 2.0 {
                chsh_observables_for(pair)
            } else {
                let dims = pair.register().dims().to_vec();
                ObservablePair::deterministic_identity(2, 2, dims[0], dims[1])
            }
        }
        AssignRule::Explicit(map) => map.get(&branch.outcome).cloned().ok_or_else(|| {
            Error::InvalidStrategy(format!(
                "no observables assigned to outcome {:?}",
                branch.outcome
            ))
        }),
    }
}

/// Score one edge: `beta_e = sum_b p_b s_b` over branches with
/// non-negligible probability. The retained probabilities must account for
/// everything but the excluded mass.
pub fn edge_score(
    ineq: &BellInequality,
    plan: &EdgePlan,
    branches: &[Branch],
) -> Result<EdgeReport> {
    let mut beta = 0.0;
    let mut kept = 0.0;
    let mut excluded = 0.0;
    let mut reports = Vec::with_capacity(branches.len());
    for br in branches {
        if br.zero_prob {
            excluded += br.probability;
            reports.push(BranchReport {
                label: branch_label(&br.outcome),
                probability: br.probability,
                score: 0.0,
                zero_prob: true,
            });
            continue;
        }
        let obs = observables_for_branch(ineq, &plan.assign, br)?;
        let s = ineq.score(br.pair.as_ref().unwrap(), &obs)?;
        beta += br.probability * s;
        kept += br.probability;
        reports.push(BranchReport {
            label: branch_label(&br.outcome),
            probability: br.probability,
            score: s,
            zero_prob: false,
        });
    }
    if (kept + excluded - 1.0).abs() > 1e-9 {
        return Err(Error::Numerical(format!(
            "edge branch probabilities sum to {}",
            kept + excluded
        )));
    }
    Ok(EdgeReport {
        edge: [plan.edge.0 + 1, plan.edge.1 + 1],
        beta_e: beta,
        excluded_probability: excluded,
        branches: reports,
    })
}

// ---------------------------------------------------------------------------
// Strategy expansion

fn require_qubits(state: &State, what: &str) -> Result<()> {
    if state.register().dims().iter().any(|&d| d != 2) {
        return Err(Error::InvalidStrategy(format!(
            "{what} requires qubit parties, got dims {:?}",
            state.register().dims()
        )));
    }
    Ok(())
}

fn parity_plans(state: &State, covering: &Covering) -> Result<Vec<EdgePlan>> {
    require_qubits(state, "the X-and-parity strategy")?;
    let n = covering.n();
    Ok(covering
        .edges()
        .iter()
        .map(|&(a, b)| {
            let measured: Vec<usize> = (0..n).filter(|&p| p != a && p != b).collect();
            let bases = vec![LocalBasis::pauli_x(); measured.len()];
            EdgePlan { edge: (a, b), measured, bases, assign: AssignRule::Parity }
        })
        .collect())
}

/// Exhaustive Pauli-basis search for one edge (CHSH only). Assignments are
/// enumerated lexicographically in the order X, Y, Z per party and the
/// first maximizer is kept, so the result is deterministic.
fn auto_plan(state: &State, covering: &Covering, edge: (usize, usize)) -> Result<EdgePlan> {
    let n = covering.n();
    let measured: Vec<usize> = (0..n).filter(|&p| p != edge.0 && p != edge.1).collect();
    if measured.len() > 6 {
        return Err(Error::InvalidStrategy(format!(
            "the exhaustive search handles at most 8 parties, got {n}"
        )));
    }
    let palette =
        [LocalBasis::pauli_x(), LocalBasis::pauli_y(), LocalBasis::pauli_z()];
    // advance a base-3 odometer; false once every assignment has been seen
    fn next_assignment(digits: &mut [usize]) -> bool {
        for k in (0..digits.len()).rev() {
            if digits[k] < 2 {
                digits[k] += 1;
                digits[k + 1..].fill(0);
                return true;
            }
        }
        false
    }
    let mut best_score = f64::NEG_INFINITY;
    let mut best: Option<(Vec<LocalBasis>, Vec<Branch>)> = None;
    let mut assignment = vec![0usize; measured.len()];
    loop {
        let bases: Vec<LocalBasis> =
            assignment.iter().map(|&k| palette[k].clone()).collect();
        let plan = EdgePlan {
            edge,
            measured: measured.clone(),
            bases: bases.clone(),
            assign: AssignRule::Horodecki,
        };
        let branches = prepare_branches(state, &plan)?;
        let mut score = 0.0;
        for br in &branches {
            if br.zero_prob {
                continue;
            }
            let opt = optimal_chsh(br.pair.as_ref().unwrap())?;
            score += br.probability * opt.achievable;
        }
        if score > best_score {
            best_score = score;
            best = Some((bases, branches));
        }
        if !next_assignment(&mut assignment) {
            break;
        }
    }
    let (bases, branches) = best.unwrap();
    // freeze the winning observables into an explicit table
    let mut table = BTreeMap::new();
    for br in &branches {
        let obs = if br.zero_prob {
            let dims = state.register().dims();
            ObservablePair::deterministic_identity(2, 2, dims[edge.0], dims[edge.1])?
        } else {
            observables_for_branch(&BellInequality::chsh(), &AssignRule::Horodecki, br)?
        };
        table.insert(br.outcome.clone(), obs);
    }
    Ok(EdgePlan { edge, measured, bases, assign: AssignRule::Explicit(table) })
}

fn auto_plans(state: &State, covering: &Covering, ineq: &BellInequality) -> Result<Vec<EdgePlan>> {
    if !matches!(ineq.family(), Family::Chsh) {
        return Err(Error::InvalidStrategy(
            "the exhaustive search is implemented for the CHSH family only".into(),
        ));
    }
    require_qubits(state, "the exhaustive search")?;
    covering.edges().iter().map(|&e| auto_plan(state, covering, e)).collect()
}

fn cluster_plans(
    state: &State,
    covering: &Covering,
    ineq: &BellInequality,
) -> Result<Vec<EdgePlan>> {
    if !matches!(ineq.family(), Family::Chsh) {
        return Err(Error::InvalidStrategy(
            "the chain strategy scores branches with CHSH observables".into(),
        ));
    }
    require_qubits(state, "the chain strategy")?;
    let n = covering.n();
    covering
        .edges()
        .iter()
        .map(|&(a, b)| {
            if b != a + 1 {
                // chord: no chain pattern applies
                return auto_plan(state, covering, (a, b));
            }
            let mut measured = Vec::new();
            let mut bases = Vec::new();
            for neighbor in [a.checked_sub(1), (b + 1 < n).then_some(b + 1)]
                .into_iter()
                .flatten()
            {
                measured.push(neighbor);
                bases.push(if neighbor == 0 || neighbor == n - 1 {
                    LocalBasis::pauli_x()
                } else {
                    LocalBasis::pauli_z()
                });
            }
            Ok(EdgePlan { edge: (a, b), measured, bases, assign: AssignRule::Horodecki })
        })
        .collect()
}

fn validate_explicit_plans(
    state: &State,
    covering: &Covering,
    plans: &[EdgePlan],
) -> Result<()> {
    let mut needed: BTreeMap<(usize, usize), bool> =
        covering.edges().iter().map(|&e| (e, false)).collect();
    for plan in plans {
        match needed.get_mut(&plan.edge) {
            None => {
                return Err(Error::InvalidStrategy(format!(
                    "plan for ({}, {}) does not match a covering edge",
                    plan.edge.0, plan.edge.1
                )))
            }
            Some(seen @ false) => *seen = true,
            Some(_) => {
                return Err(Error::InvalidStrategy(format!(
                    "duplicate plan for edge ({}, {})",
                    plan.edge.0, plan.edge.1
                )))
            }
        }
        if plan.measured.len() != plan.bases.len() {
            return Err(Error::InvalidStrategy("one basis per measured party".into()));
        }
        for (&p, basis) in plan.measured.iter().zip(&plan.bases) {
            if p >= covering.n() {
                return Err(Error::PartyOutOfRange { party: p, n: covering.n() });
            }
            if basis.len() != state.register().dim(p) {
                return Err(Error::InvalidStrategy(format!(
                    "basis of size {} for party {p} of dimension {}",
                    basis.len(),
                    state.register().dim(p)
                )));
            }
        }
    }
    if let Some((&(a, b), _)) = needed.iter().find(|(_, &seen)| !seen) {
        return Err(Error::InvalidStrategy(format!("no plan for edge ({a}, {b})")));
    }
    Ok(())
}

fn build_plans(
    state: &State,
    covering: &Covering,
    ineq: &BellInequality,
    strategy: &MeasurementStrategy,
) -> Result<Vec<EdgePlan>> {
    match strategy {
        MeasurementStrategy::GhzX => {
            if matches!(ineq.family(), Family::Custom) {
                return Err(Error::InvalidStrategy(
                    "the parity strategy needs a family with reference observables".into(),
                ));
            }
            parity_plans(state, covering)
        }
        MeasurementStrategy::TiltedX => {
            if !matches!(ineq.family(), Family::Tilted { .. }) {
                return Err(Error::InvalidStrategy(
                    "the tilted strategy requires a tilted inequality".into(),
                ));
            }
            parity_plans(state, covering)
        }
        MeasurementStrategy::ClusterPauli => cluster_plans(state, covering, ineq),
        MeasurementStrategy::Auto => auto_plans(state, covering, ineq),
        MeasurementStrategy::Plans(plans) => {
            validate_explicit_plans(state, covering, plans)?;
            Ok(plans.clone())
        }
    }
}

// ---------------------------------------------------------------------------
// The protocol

/// Lower bound on the GME weight from the average score.
pub fn gme_weight(beta_bar: f64, bound: f64, beta_quantum: f64) -> Result<GmeWeight> {
    if bound >= beta_quantum {
        return Err(Error::BoundNotBelowQuantum { bound, quantum: beta_quantum });
    }
    let raw = (beta_bar - bound) / (beta_quantum - bound);
    Ok(GmeWeight { raw, clamped: raw.clamp(0.0, 1.0) })
}

fn certificate_caveat(report: &crate::bell::LocalBoundReport) -> Option<String> {
    report.distinct.then(|| {
        format!(
            "configured local bound {} differs from the deterministic optimum {} of the \
             implemented expression; the certification threshold uses the configured value \
             and is unsound if the true bound is higher",
            report.configured, report.brute_force
        )
    })
}

fn covering_report(covering: &Covering) -> CoveringReport {
    CoveringReport {
        n_parties: covering.n(),
        family: covering.family().map(|f| {
            match f {
                crate::covering::CoveringFamily::Minimal => "minimal",
                crate::covering::CoveringFamily::Full => "full",
                crate::covering::CoveringFamily::Ring => "ring",
            }
            .to_string()
        }),
        edges: covering.edges().iter().map(|&(a, b)| [a + 1, b + 1]).collect(),
        edge_count: covering.edge_count(),
        mincut: covering.mincut(),
    }
}

/// Run the full protocol and assemble a certificate.
pub fn run_ddic(
    state: &State,
    covering: &Covering,
    ineq: &BellInequality,
    strategy: &MeasurementStrategy,
) -> Result<Certificate> {
    if state.register().n_parties() != covering.n() {
        return Err(Error::RegisterMismatch(format!(
            "state has {} parties, covering has {}",
            state.register().n_parties(),
            covering.n()
        )));
    }
    let bound = biseparable_bound(covering, ineq);
    let plans = build_plans(state, covering, ineq, strategy)?;
    let mut edges = Vec::with_capacity(plans.len());
    let mut sum = 0.0;
    for plan in &plans {
        let branches = prepare_branches(state, plan)?;
        let report = edge_score(ineq, plan, &branches)?;
        sum += report.beta_e;
        edges.push(report);
    }
    let beta_bar = sum / edges.len() as f64;
    let gme = gme_weight(beta_bar, bound, ineq.quantum_bound())?;
    let local_bound = ineq.local_bound_report();
    Ok(Certificate {
        inequality: ineq.id().to_string(),
        beta_quantum: ineq.quantum_bound(),
        caveat: certificate_caveat(&local_bound),
        local_bound,
        covering: covering_report(covering),
        strategy: strategy.name().to_string(),
        biseparable_bound: bound,
        beta_bar,
        certified: beta_bar > bound,
        gme_weight: gme,
        edges,
        stats: None,
    })
}

// ---------------------------------------------------------------------------
// Label-aware plans for biseparable models

fn embed_label(m: &CMatrix, label_dim: usize) -> CMatrix {
    m.kronecker(&CMatrix::identity(label_dim, label_dim))
}

/// Measurement plans that extract a biseparable model's full value: every
/// non-edge party is measured in `X (x) label`, matching labels select
/// either the family's reference observables (with the in-group outcome
/// parity) on uncut components or the best deterministic strategy on cut
/// ones. Mismatched-label outcomes never occur and map to the trivial
/// strategy.
pub fn plans_for_model(model: &BiseparableModel) -> Result<Vec<EdgePlan>> {
    let n = model.n();
    let k = model.label_dim();
    let ineq = model.inequality();
    let dim = model.party_dim();
    let reg1 = Register::new(vec![dim])?;
    let (det_a, det_b) = ineq.best_deterministic_assignment();
    let mut plans = Vec::new();
    for &(a, b) in model.covering().edges() {
        let measured: Vec<usize> = (0..n).filter(|&p| p != a && p != b).collect();
        let basis = LocalBasis::pauli_x().tensor(&LocalBasis::computational(k));
        let bases = vec![basis; measured.len()];
        let mut table = BTreeMap::new();
        for outcome in all_outcomes(dim, measured.len()) {
            let labels: Vec<usize> = outcome.iter().map(|&o| o % k).collect();
            let xs: Vec<usize> = outcome.iter().map(|&o| o / k).collect();
            let obs = if !labels.windows(2).all(|w| w[0] == w[1]) {
                // inconsistent labels: zero-probability branch
                ObservablePair::deterministic_identity(
                    ineq.settings().0,
                    ineq.settings().1,
                    dim,
                    dim,
                )?
            } else if labels.first().map_or(true, |&l| {
                !model.components()[l].cuts_edge((a, b))
            }) {
                // uncut: reference observables with the in-group parity,
                // acting trivially on the label register
                let comp_group: &[usize] = labels
                    .first()
                    .map(|&l| model.components()[l].group_of(a))
                    .unwrap_or(&[]);
                let parity: usize = measured
                    .iter()
                    .zip(&xs)
                    .filter(|(p, _)| comp_group.contains(p))
                    .map(|(_, &x)| x)
                    .sum();
                let parity =
                    if parity % 2 == 0 { BranchParity::Even } else { BranchParity::Odd };
                let qubit_obs = default_observables(ineq, parity)?;
                let lift = |o: &Observable| {
                    Observable::new(reg1.clone(), embed_label(o.matrix(), k))
                };
                ObservablePair::new(
                    qubit_obs.a.iter().map(lift).collect::<Result<_>>()?,
                    qubit_obs.b.iter().map(lift).collect::<Result<_>>()?,
                )?
            } else {
                // cut: the branch is a product across the edge; play the
                // deterministic optimum, which scores the brute-force local
                // bound on any state
                ObservablePair::deterministic_signs(&det_a, &det_b, dim, dim)?
            };
            table.insert(outcome, obs);
        }
        plans.push(EdgePlan {
            edge: (a, b),
            measured,
            bases,
            assign: AssignRule::Explicit(table),
        });
    }
    Ok(plans)
}

fn all_outcomes(dim: usize, parties: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..parties {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..dim).map(move |d| {
                    let mut v = prefix.clone();
                    v.push(d);
                    v
                })
            })
            .collect();
    }
    out
}

// ---------------------------------------------------------------------------
// Critical visibility

/// Result of the white-noise robustness search.
#[derive(Debug, Clone, serde::Serialize)]
pub struct VisibilityReport {
    /// Smallest visibility that still certifies, to within 1e-4.
    pub v_critical: f64,
    pub biseparable_bound: f64,
    pub beta_bar_at_full_visibility: f64,
    pub strategy: String,
    pub evaluations: usize,
}

/// Bisect for the visibility threshold of `v * rho + (1-v) * I/d` under the
/// certification protocol. CHSH runs use the exhaustive search (so scores
/// reflect the best achievable observables at every noise level); tilted
/// runs use the X-and-parity strategy. Monotonicity of the score in `v` is
/// checked on a coarse grid first.
pub fn critical_visibility(
    state: &State,
    covering: &Covering,
    ineq: &BellInequality,
) -> Result<VisibilityReport> {
    let strategy = match ineq.family() {
        Family::Chsh => MeasurementStrategy::Auto,
        Family::Tilted { .. } => MeasurementStrategy::TiltedX,
        Family::Custom => {
            return Err(Error::InvalidStrategy(
                "no default measurement strategy for a custom inequality".into(),
            ))
        }
    };
    let bound = biseparable_bound(covering, ineq);
    let mut evaluations = 0usize;
    let mut eval = |v: f64| -> Result<f64> {
        evaluations += 1;
        let noisy = State::Mixed(crate::states::white_noise(state, v)?);
        Ok(run_ddic(&noisy, covering, ineq, &strategy)?.beta_bar)
    };
    // monotonicity pre-check
    let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
    let mut prev = f64::NEG_INFINITY;
    let mut beta_at_one = 0.0;
    for &v in &grid {
        let s = eval(v)?;
        if s < prev - 1e-9 {
            return Err(Error::NonMonotoneVisibility { v });
        }
        prev = s;
        beta_at_one = s;
    }
    if beta_at_one <= bound {
        return Err(Error::NoViolation { beta_bar: beta_at_one, bound });
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        if eval(mid)? > bound {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(VisibilityReport {
        v_critical: 0.5 * (lo + hi),
        biseparable_bound: bound,
        beta_bar_at_full_visibility: beta_at_one,
        strategy: strategy.name().to_string(),
        evaluations,
    })
}

// ---------------------------------------------------------------------------
// Finite counts: synthesis and ingestion

pub const COUNTS_HEADER: &str = "edge,branch_label,setting_a,setting_b,n_pp,n_pm,n_mp,n_mm";

fn draw_multinomial(
    rng: &mut ChaCha8Rng,
    total: u64,
    probs: &[f64],
) -> Result<Vec<u64>> {
    let mut out = vec![0u64; probs.len()];
    let mut remaining = total;
    let mut rem_p: f64 = probs.iter().sum();
    for i in 0..probs.len() {
        if remaining == 0 || rem_p <= 0.0 {
            break;
        }
        if i == probs.len() - 1 {
            out[i] = remaining;
            break;
        }
        let cond = (probs[i] / rem_p).clamp(0.0, 1.0);
        let draw = Binomial::new(remaining, cond)
            .map_err(|e| Error::Numerical(format!("binomial setup: {e}")))?
            .sample(rng);
        out[i] = draw;
        remaining -= draw;
        rem_p -= probs[i];
    }
    Ok(out)
}

/// Simulate a counting experiment: for every edge, branch, and setting pair,
/// `shots_per_cell` trials are split between branches by their quantum
/// probabilities and between outcome pairs by the branch state's POVM
/// statistics. The output is a count table in the format [`ingest_counts`]
/// reads, deterministic for a fixed seed.
pub fn synthesize_counts(
    state: &State,
    covering: &Covering,
    ineq: &BellInequality,
    strategy: &MeasurementStrategy,
    shots_per_cell: u64,
    seed: u64,
) -> Result<String> {
    if shots_per_cell == 0 {
        return Err(Error::Config("shots_per_cell must be positive".into()));
    }
    let plans = build_plans(state, covering, ineq, strategy)?;
    let (sa, sb) = ineq.settings();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::from(COUNTS_HEADER);
    out.push('\n');
    for plan in &plans {
        let branches = prepare_branches(state, plan)?;
        let live: Vec<&Branch> = branches.iter().filter(|b| !b.zero_prob).collect();
        let probs: Vec<f64> = live.iter().map(|b| b.probability).collect();
        for x in 0..sa {
            for y in 0..sb {
                let split = draw_multinomial(&mut rng, shots_per_cell, &probs)?;
                for (br, &n_b) in live.iter().zip(&split) {
                    let obs = observables_for_branch(ineq, &plan.assign, br)?;
                    let pair = br.pair.as_ref().unwrap();
                    let ia = Observable::identity(pair.register().subset(&[0])?);
                    let ib = Observable::identity(pair.register().subset(&[1])?);
                    let e_ab =
                        crate::qcore::expectation(pair, &obs.a[x].tensor(&obs.b[y]))?;
                    let e_a = crate::qcore::expectation(pair, &obs.a[x].tensor(&ib))?;
                    let e_b = crate::qcore::expectation(pair, &ia.tensor(&obs.b[y]))?;
                    // p(s,t) = (1 + s<A> + t<B> + st<AB>)/4 for s,t = +-1
                    let cell = |s: f64, t: f64| {
                        ((1.0 + s * e_a + t * e_b + s * t * e_ab) / 4.0).max(0.0)
                    };
                    let cells =
                        [cell(1.0, 1.0), cell(1.0, -1.0), cell(-1.0, 1.0), cell(-1.0, -1.0)];
                    let counts = draw_multinomial(&mut rng, n_b, &cells)?;
                    writeln!(
                        out,
                        "{}-{},{},{},{},{},{},{},{}",
                        plan.edge.0 + 1,
                        plan.edge.1 + 1,
                        branch_label(&br.outcome),
                        x,
                        y,
                        counts[0],
                        counts[1],
                        counts[2],
                        counts[3]
                    )
                    .unwrap();
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default)]
struct Cell {
    pp: u64,
    pm: u64,
    mp: u64,
    mm: u64,
}

impl Cell {
    fn total(&self) -> u64 {
        self.pp + self.pm + self.mp + self.mm
    }
    fn correlator(&self) -> f64 {
        (self.pp as f64 + self.mm as f64 - self.pm as f64 - self.mp as f64) / self.total() as f64
    }
    fn marginal_a(&self) -> (f64, u64) {
        let n = self.total();
        (((self.pp + self.pm) as f64 - (self.mp + self.mm) as f64) / n as f64, n)
    }
    fn marginal_b(&self) -> (f64, u64) {
        let n = self.total();
        (((self.pp + self.mp) as f64 - (self.pm + self.mm) as f64) / n as f64, n)
    }
}

/// Estimate a certificate from a count table.
///
/// Per branch, correlators are `(n_pp + n_mm - n_pm - n_mp)/N` and branch
/// probabilities are pooled over settings; the edge score is the
/// probability-weighted branch average and the covering average follows.
/// Standard errors propagate to first order treating cells as independent
/// binomials/multinomials: `var(E) = (1 - E^2)/N`, `var(p) = p(1-p)/N`,
/// `var(beta_e) = sum_b [s_b^2 var(p_b) + p_b^2 var(s_b)]`, and the GME
/// weight error divides by `beta_quantum - bound`.
pub fn ingest_counts(
    text: &str,
    covering: &Covering,
    ineq: &BellInequality,
) -> Result<Certificate> {
    let (sa, sb) = ineq.settings();
    let mut lines = text.lines();
    let header = lines.next().map(str::trim).unwrap_or("");
    if header != COUNTS_HEADER {
        return Err(Error::MalformedCounts(format!(
            "expected header {COUNTS_HEADER:?}, got {header:?}"
        )));
    }
    type Grid = BTreeMap<(usize, usize), Cell>;
    let mut data: BTreeMap<(usize, usize), BTreeMap<String, Grid>> = BTreeMap::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 8 {
            return Err(Error::MalformedCounts(format!(
                "line {}: expected 8 fields, got {}",
                lineno + 2,
                fields.len()
            )));
        }
        let edge = parse_edge_label(fields[0], lineno + 2, covering.n())?;
        let label = fields[1].to_string();
        let x: usize = parse_count(fields[2], lineno + 2)? as usize;
        let y: usize = parse_count(fields[3], lineno + 2)? as usize;
        if x >= sa || y >= sb {
            return Err(Error::MalformedCounts(format!(
                "line {}: setting ({x}, {y}) out of range for a {sa}x{sb} inequality",
                lineno + 2
            )));
        }
        let cell = Cell {
            pp: parse_count(fields[4], lineno + 2)?,
            pm: parse_count(fields[5], lineno + 2)?,
            mp: parse_count(fields[6], lineno + 2)?,
            mm: parse_count(fields[7], lineno + 2)?,
        };
        if cell.total() == 0 {
            return Err(Error::MalformedCounts(format!("line {}: empty cell", lineno + 2)));
        }
        let prev = data
            .entry(edge)
            .or_default()
            .entry(label)
            .or_default()
            .insert((x, y), cell);
        if prev.is_some() {
            return Err(Error::MalformedCounts(format!(
                "line {}: duplicate (edge, branch, settings) row",
                lineno + 2
            )));
        }
    }
    let covering_edges: Vec<(usize, usize)> = covering.edges().to_vec();
    for &e in &covering_edges {
        if !data.contains_key(&e) {
            return Err(Error::MalformedCounts(format!(
                "no counts for covering edge {}-{}",
                e.0 + 1,
                e.1 + 1
            )));
        }
    }
    for &e in data.keys() {
        if !covering_edges.contains(&e) {
            return Err(Error::MalformedCounts(format!(
                "counts for edge {}-{} outside the covering",
                e.0 + 1,
                e.1 + 1
            )));
        }
    }

    let bound = biseparable_bound(covering, ineq);
    let bq = ineq.quantum_bound();
    let mut edges = Vec::new();
    let mut beta_sum = 0.0;
    let mut var_sum = 0.0;
    let mut total_shots = 0u64;
    for &e in &covering_edges {
        let branches = &data[&e];
        // completeness: every branch needs the full settings grid
        for (label, grid) in branches {
            for x in 0..sa {
                for y in 0..sb {
                    if !grid.contains_key(&(x, y)) {
                        return Err(Error::MalformedCounts(format!(
                            "edge {}-{} branch {label}: missing settings ({x}, {y})",
                            e.0 + 1,
                            e.1 + 1
                        )));
                    }
                }
            }
        }
        let edge_shots: u64 =
            branches.values().flat_map(|g| g.values()).map(Cell::total).sum();
        total_shots += edge_shots;
        let mut beta_e = 0.0;
        let mut var_e = 0.0;
        let mut reports = Vec::new();
        for (label, grid) in branches {
            let branch_shots: u64 = grid.values().map(Cell::total).sum();
            let p_hat = branch_shots as f64 / edge_shots as f64;
            // correlator table and per-setting marginals (pooled across the
            // other side's settings)
            let mut corr = vec![vec![0.0; sb]; sa];
            let mut var_s = 0.0;
            for x in 0..sa {
                for y in 0..sb {
                    let cell = &grid[&(x, y)];
                    let est = cell.correlator();
                    corr[x][y] = est;
                    let c = ineq.correlator_coefficient(x, y);
                    var_s += c * c * (1.0 - est * est) / cell.total() as f64;
                }
            }
            let mut marg_a = vec![0.0; sa];
            for (x, m) in marg_a.iter_mut().enumerate() {
                let mut num = 0.0;
                let mut den = 0u64;
                for y in 0..sb {
                    let (est, n) = grid[&(x, y)].marginal_a();
                    num += est * n as f64;
                    den += n;
                }
                *m = num / den as f64;
                let ca = ineq.marginal_a(x);
                var_s += ca * ca * (1.0 - *m * *m) / den as f64;
            }
            let mut marg_b = vec![0.0; sb];
            for (y, m) in marg_b.iter_mut().enumerate() {
                let mut num = 0.0;
                let mut den = 0u64;
                for x in 0..sa {
                    let (est, n) = grid[&(x, y)].marginal_b();
                    num += est * n as f64;
                    den += n;
                }
                *m = num / den as f64;
                let cb = ineq.marginal_b(y);
                var_s += cb * cb * (1.0 - *m * *m) / den as f64;
            }
            let s_b = ineq.score_correlators(&corr, &marg_a, &marg_b);
            beta_e += p_hat * s_b;
            var_e += s_b * s_b * p_hat * (1.0 - p_hat) / edge_shots as f64
                + p_hat * p_hat * var_s;
            reports.push(BranchReport {
                label: label.clone(),
                probability: p_hat,
                score: s_b,
                zero_prob: false,
            });
        }
        beta_sum += beta_e;
        var_sum += var_e;
        edges.push(EdgeReport {
            edge: [e.0 + 1, e.1 + 1],
            beta_e,
            excluded_probability: 0.0,
            branches: reports,
        });
    }
    let n_edges = covering_edges.len() as f64;
    let beta_bar = beta_sum / n_edges;
    let beta_var = var_sum / (n_edges * n_edges);
    let gme = gme_weight(beta_bar, bound, bq)?;
    let local_bound = ineq.local_bound_report();
    Ok(Certificate {
        inequality: ineq.id().to_string(),
        beta_quantum: bq,
        caveat: certificate_caveat(&local_bound),
        local_bound,
        covering: covering_report(covering),
        strategy: "ingested-counts".to_string(),
        biseparable_bound: bound,
        beta_bar,
        certified: beta_bar > bound,
        gme_weight: gme,
        edges,
        stats: Some(CertificateStats {
            total_shots,
            beta_bar_stderr: beta_var.sqrt(),
            gme_weight_stderr: beta_var.sqrt() / (bq - bound),
        }),
    })
}

fn parse_edge_label(token: &str, lineno: usize, n: usize) -> Result<(usize, usize)> {
    let parts: Vec<&str> = token.split('-').collect();
    if parts.len() != 2 {
        return Err(Error::MalformedCounts(format!(
            "line {lineno}: edge label {token:?} is not of the form i-j"
        )));
    }
    let a: usize = parts[0]
        .parse()
        .map_err(|_| Error::MalformedCounts(format!("line {lineno}: bad edge index")))?;
    let b: usize = parts[1]
        .parse()
        .map_err(|_| Error::MalformedCounts(format!("line {lineno}: bad edge index")))?;
    if a == 0 || b == 0 || a > n || b > n || a == b {
        return Err(Error::MalformedCounts(format!(
            "line {lineno}: edge {token:?} out of range (one-indexed, {n} parties)"
        )));
    }
    Ok((a.min(b) - 1, a.max(b) - 1))
}

fn parse_count(token: &str, lineno: usize) -> Result<u64> {
    token
        .parse()
        .map_err(|_| Error::MalformedCounts(format!("line {lineno}: bad count {token:?}")))
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::BellInequality;
    use crate::states;
    use approx::assert_abs_diff_eq;

    const ROOT2: f64 = std::f64::consts::SQRT_2;

    #[test]
    fn ghz_reaches_tsirelson_on_path_and_complete_coverings() {
        let ghz4 = State::Pure(states::ghz(4).unwrap());
        let chsh = BellInequality::chsh();
        for cov in [Covering::minimal(4).unwrap(), Covering::full(4).unwrap()] {
            let cert = run_ddic(&ghz4, &cov, &chsh, &MeasurementStrategy::GhzX).unwrap();
            assert_abs_diff_eq!(cert.beta_bar, 2.0 * ROOT2, epsilon = 1e-10);
            assert!(cert.certified);
            assert_abs_diff_eq!(cert.gme_weight.clamped, 1.0, epsilon = 1e-9);
            for e in &cert.edges {
                assert_abs_diff_eq!(e.beta_e, 2.0 * ROOT2, epsilon = 1e-10);
                let recomputed: f64 =
                    e.branches.iter().map(|b| b.probability * b.score).sum();
                assert_abs_diff_eq!(e.beta_e, recomputed, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn cluster_chain_strategy_reaches_tsirelson() {
        let chsh = BellInequality::chsh();
        for n in [3usize, 4, 5] {
            let cluster = State::Pure(states::linear_cluster(n).unwrap());
            let cov = Covering::minimal(n).unwrap();
            let cert =
                run_ddic(&cluster, &cov, &chsh, &MeasurementStrategy::ClusterPauli).unwrap();
            assert_abs_diff_eq!(cert.beta_bar, 2.0 * ROOT2, epsilon = 1e-8);
            assert!(cert.certified);
        }
    }

    #[test]
    fn cluster_branches_have_expected_multiplicity() {
        // interior edge: both chain neighbors measured in suitable bases ->
        // four branches; boundary edge: one neighbor -> two branches
        let cluster = State::Pure(states::linear_cluster(4).unwrap());
        let cov = Covering::minimal(4).unwrap();
        let chsh = BellInequality::chsh();
        let cert =
            run_ddic(&cluster, &cov, &chsh, &MeasurementStrategy::ClusterPauli).unwrap();
        assert_eq!(cert.edges[0].branches.len(), 2); // edge 1-2
        assert_eq!(cert.edges[1].branches.len(), 4); // edge 2-3
        assert_eq!(cert.edges[2].branches.len(), 2); // edge 3-4
        for e in &cert.edges {
            for b in &e.branches {
                assert_abs_diff_eq!(b.score, 2.0 * ROOT2, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn tilted_ghz_scores_one_everywhere() {
        let theta = 15.0_f64.to_radians();
        let ineq = BellInequality::tilted(theta).unwrap();
        let state = State::Pure(states::tilted_ghz(3, theta).unwrap());
        let cov = Covering::minimal(3).unwrap();
        let cert = run_ddic(&state, &cov, &ineq, &MeasurementStrategy::TiltedX).unwrap();
        assert_abs_diff_eq!(cert.beta_bar, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(cert.biseparable_bound, 0.976, epsilon = 1e-12);
        assert!(cert.certified);
        // the configured bound differs from the brute-force optimum: flagged
        assert!(cert.local_bound.distinct);
        assert!(cert.caveat.is_some());
    }

    #[test]
    fn biseparable_product_sits_exactly_on_both_bounds() {
        let chsh = BellInequality::chsh();
        let state = State::Pure(states::biseparable_product(4).unwrap());
        for cov in [Covering::minimal(4).unwrap(), Covering::full(4).unwrap()] {
            let bound = biseparable_bound(&cov, &chsh);
            let cert = run_ddic(&state, &cov, &chsh, &MeasurementStrategy::Auto).unwrap();
            assert_abs_diff_eq!(cert.beta_bar, bound, epsilon = 1e-9);
        }
    }

    #[test]
    fn saturating_model_sits_exactly_on_bound() {
        let chsh = BellInequality::chsh();
        let cov = Covering::full(3).unwrap();
        let model = states::biseparable_adversary(&cov, &chsh).unwrap();
        let state = State::Mixed(model.to_state().unwrap());
        let plans = plans_for_model(&model).unwrap();
        let cert =
            run_ddic(&state, &cov, &chsh, &MeasurementStrategy::Plans(plans)).unwrap();
        let bound = biseparable_bound(&cov, &chsh);
        assert_abs_diff_eq!(cert.beta_bar, bound, epsilon = 1e-9);
        for e in &cert.edges {
            assert_abs_diff_eq!(e.beta_e, 2.0 * ROOT2 / 3.0 + 4.0 / 3.0, epsilon = 1e-9);
        }
        assert!(cert.gme_weight.clamped.abs() < 1e-7);
    }

    #[test]
    fn tilted_adversary_defeats_misconfigured_bound() {
        // when the configured local bound understates the deterministic
        // optimum, a biseparable model scores above the certification
        // threshold; the certificate must carry the caveat
        let theta = 15.0_f64.to_radians();
        let ineq = BellInequality::tilted(theta).unwrap();
        let cov = Covering::minimal(3).unwrap();
        let model = states::biseparable_adversary(&cov, &ineq).unwrap();
        let state = State::Mixed(model.to_state().unwrap());
        let plans = plans_for_model(&model).unwrap();
        let cert = run_ddic(&state, &cov, &ineq, &MeasurementStrategy::Plans(plans)).unwrap();
        assert_abs_diff_eq!(cert.beta_bar, model.expected_average(), epsilon = 1e-9);
        assert!(cert.certified, "spoofed certification against the configured bound");
        assert!(cert.caveat.is_some());
        // against the brute-force bound the same run does not certify
        let honest = BellInequality::tilted_with_local_bound(
            theta,
            ineq.local_bound_bruteforce(),
        )
        .unwrap();
        let honest_bound = biseparable_bound(&cov, &honest);
        assert!(cert.beta_bar <= honest_bound + 1e-9);
    }

    #[test]
    fn white_noise_below_threshold_is_not_certified() {
        let chsh = BellInequality::chsh();
        let ghz4 = State::Pure(states::ghz(4).unwrap());
        let noisy = State::Mixed(states::white_noise(&ghz4, 0.7).unwrap());
        let cov = Covering::full(4).unwrap();
        let cert = run_ddic(&noisy, &cov, &chsh, &MeasurementStrategy::Auto).unwrap();
        // per-branch criterion 2*sqrt(2)*0.7 < 2, so the deterministic floor
        // applies on every branch
        assert_abs_diff_eq!(cert.beta_bar, 2.0, epsilon = 1e-10);
        assert!(!cert.certified);
        assert_eq!(cert.gme_weight.clamped, 0.0);
        assert!(cert.gme_weight.raw < 0.0);
    }

    #[test]
    fn critical_visibility_of_ghz4() {
        let chsh = BellInequality::chsh();
        let ghz4 = State::Pure(states::ghz(4).unwrap());
        let full = critical_visibility(&ghz4, &Covering::full(4).unwrap(), &chsh).unwrap();
        assert_abs_diff_eq!(full.v_critical, 0.853_553_390_593_273_6, epsilon = 1.5e-4);
        let minimal =
            critical_visibility(&ghz4, &Covering::minimal(4).unwrap(), &chsh).unwrap();
        assert_abs_diff_eq!(minimal.v_critical, 0.902_368_927_062_182_5, epsilon = 1.5e-4);
        assert!(full.v_critical < minimal.v_critical);
    }

    #[test]
    fn critical_visibility_rejects_non_violating_states() {
        let chsh = BellInequality::chsh();
        let product = State::Pure(
            crate::qcore::PureState::basis_state(Register::qubits(2).unwrap(), &[0, 0])
                .unwrap(),
        );
        let err =
            critical_visibility(&product, &Covering::minimal(2).unwrap(), &chsh).unwrap_err();
        assert!(matches!(err, Error::NoViolation { .. }));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn strategy_validation_errors() {
        let chsh = BellInequality::chsh();
        let theta = 15.0_f64.to_radians();
        let tilted = BellInequality::tilted(theta).unwrap();
        let ghz3 = State::Pure(states::ghz(3).unwrap());
        let cov = Covering::minimal(3).unwrap();
        // tilted strategy demands a tilted inequality
        assert!(run_ddic(&ghz3, &cov, &chsh, &MeasurementStrategy::TiltedX).is_err());
        // auto search is CHSH-only
        assert!(run_ddic(&ghz3, &cov, &tilted, &MeasurementStrategy::Auto).is_err());
        // party-count mismatch
        let ghz4 = State::Pure(states::ghz(4).unwrap());
        assert!(run_ddic(&ghz4, &cov, &chsh, &MeasurementStrategy::GhzX).is_err());
        // explicit plans must cover every edge exactly once
        let plan = EdgePlan {
            edge: (0, 1),
            measured: vec![2],
            bases: vec![LocalBasis::pauli_x()],
            assign: AssignRule::Parity,
        };
        let err = run_ddic(
            &ghz3,
            &cov,
            &chsh,
            &MeasurementStrategy::Plans(vec![plan.clone()]),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidStrategy(_)));
        // measuring an edge party is invalid
        let bad = EdgePlan {
            edge: (0, 1),
            measured: vec![1],
            bases: vec![LocalBasis::pauli_x()],
            assign: AssignRule::Parity,
        };
        assert!(prepare_branches(&ghz3, &bad).is_err());
        // non-qubit states cannot use the parity strategies
        let sat = State::Mixed(states::saturating_biseparable().unwrap());
        assert!(run_ddic(
            &sat,
            &Covering::full(3).unwrap(),
            &chsh,
            &MeasurementStrategy::GhzX
        )
        .is_err());
    }

    #[test]
    fn two_party_protocol_runs_with_empty_measurement() {
        let chsh = BellInequality::chsh();
        let phi = State::Pure(states::ghz(2).unwrap());
        let cov = Covering::minimal(2).unwrap();
        let cert = run_ddic(&phi, &cov, &chsh, &MeasurementStrategy::GhzX).unwrap();
        assert_abs_diff_eq!(cert.beta_bar, 2.0 * ROOT2, epsilon = 1e-12);
        assert_eq!(cert.edges[0].branches.len(), 1);
        assert_eq!(cert.edges[0].branches[0].label, "-");
        // bound degenerates to the local bound
        assert_eq!(cert.biseparable_bound, 2.0);
        assert!(cert.certified);
    }

    #[test]
    fn gme_weight_known_values() {
        let bq = 2.0 * ROOT2;
        let full4 = biseparable_bound(&Covering::full(4).unwrap(), &BellInequality::chsh());
        let w = gme_weight(2.662, full4, bq).unwrap();
        assert_abs_diff_eq!(w.clamped, 0.598_209_378_290_988_5, epsilon = 1e-12);
        let w = gme_weight(2.620, full4, bq).unwrap();
        assert_abs_diff_eq!(w.clamped, 0.496_812_408_671_319_1, epsilon = 1e-12);
        // tilted three-party numbers: bound 0.968, score 0.987
        let w = gme_weight(0.987, 0.968, 1.0).unwrap();
        assert_abs_diff_eq!(w.clamped, 0.593_75, epsilon = 1e-12);
        // degenerate threshold
        assert!(matches!(
            gme_weight(2.5, 2.83, 2.82),
            Err(Error::BoundNotBelowQuantum { .. })
        ));
        // clamping
        assert_eq!(gme_weight(3.0, 2.0, 2.8).unwrap().clamped, 1.0);
        assert_eq!(gme_weight(1.0, 2.0, 2.8).unwrap().clamped, 0.0);
    }

    #[test]
    fn synthesized_counts_round_trip() {
        let chsh = BellInequality::chsh();
        let ghz3 = State::Pure(states::ghz(3).unwrap());
        let cov = Covering::ring(3).unwrap();
        let table = synthesize_counts(
            &ghz3,
            &cov,
            &chsh,
            &MeasurementStrategy::GhzX,
            200_000,
            7,
        )
        .unwrap();
        let cert = ingest_counts(&table, &cov, &chsh).unwrap();
        let stats = cert.stats.unwrap();
        assert_eq!(stats.total_shots, 3 * 4 * 200_000);
        // within five standard errors of the exact value
        assert!(
            (cert.beta_bar - 2.0 * ROOT2).abs() < 5.0 * stats.beta_bar_stderr,
            "beta_bar {} stderr {}",
            cert.beta_bar,
            stats.beta_bar_stderr
        );
        assert!(stats.beta_bar_stderr > 0.0 && stats.beta_bar_stderr < 0.01);
        assert!(cert.certified);
        // determinism: same seed, same table
        let again = synthesize_counts(
            &ghz3,
            &cov,
            &chsh,
            &MeasurementStrategy::GhzX,
            200_000,
            7,
        )
        .unwrap();
        assert_eq!(table, again);
    }

    #[test]
    fn ingest_rejects_malformed_tables() {
        let cov = Covering::minimal(2).unwrap();
        let chsh = BellInequality::chsh();
        let ok = "edge,branch_label,setting_a,setting_b,n_pp,n_pm,n_mp,n_mm\n\
                  1-2,-,0,0,400,100,100,400\n1-2,-,0,1,400,100,100,400\n\
                  1-2,-,1,0,400,100,100,400\n1-2,-,1,1,100,400,400,100\n";
        assert!(ingest_counts(ok, &cov, &chsh).is_ok());
        // bad header
        assert!(matches!(
            ingest_counts("nope\n", &cov, &chsh),
            Err(Error::MalformedCounts(_))
        ));
        // missing settings cell
        let missing = "edge,branch_label,setting_a,setting_b,n_pp,n_pm,n_mp,n_mm\n\
                       1-2,-,0,0,400,100,100,400\n";
        assert!(matches!(
            ingest_counts(missing, &cov, &chsh),
            Err(Error::MalformedCounts(_))
        ));
        // duplicate row
        let dup = format!("{ok}1-2,-,0,0,1,1,1,1\n");
        assert!(matches!(
            ingest_counts(&dup, &cov, &chsh),
            Err(Error::MalformedCounts(_))
        ));
        // edge outside the covering
        let extra = format!("{ok}1-3,-,0,0,1,1,1,1\n");
        assert!(matches!(
            ingest_counts(&extra, &cov, &chsh),
            Err(Error::MalformedCounts(_))
        ));
        // setting out of range
        let bad_setting = format!("{ok}1-2,-,2,0,1,1,1,1\n");
        assert!(matches!(
            ingest_counts(&bad_setting, &cov, &chsh),
            Err(Error::MalformedCounts(_))
        ));
        // non-integer count
        let bad_count = "edge,branch_label,setting_a,setting_b,n_pp,n_pm,n_mp,n_mm\n\
                         1-2,-,0,0,4.5,1,1,1\n";
        assert!(matches!(
            ingest_counts(bad_count, &cov, &chsh),
            Err(Error::MalformedCounts(_))
        ));
    }

    #[test]
    fn certificate_serialization_is_deterministic_and_stateless() {
        let chsh = BellInequality::chsh();
        let ghz3 = State::Pure(states::ghz(3).unwrap());
        let cov = Covering::ring(3).unwrap();
        let cert = run_ddic(&ghz3, &cov, &chsh, &MeasurementStrategy::GhzX).unwrap();
        let a = serde_json::to_string_pretty(&cert).unwrap();
        let b = serde_json::to_string_pretty(&cert).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("\"beta_bar\""));
        assert!(a.contains("\"certified\": true"));
        // one-indexed edges in the serialized form
        let v: serde_json::Value = serde_json::from_str(&a).unwrap();
        assert_eq!(v["covering"]["edges"][0], serde_json::json!([1, 2]));
        // no amplitude payloads anywhere
        assert!(!a.contains("amplitudes"));
        assert!(!a.contains("matrix"));
    }
}
