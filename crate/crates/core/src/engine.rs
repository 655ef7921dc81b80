//! Three-stroke cycle of the measurement-fuelled engine.
//!
//! Stroke 1 measures the medium (heat in), stroke 2 applies an isentropic measurement
//! of strength `b` (work out), stroke 3 re-thermalizes with the hot bath (heat out).
//! Energies are in units of ε with `H = −εZ`.

use std::f64::consts::LN_2;

use serde::Serialize;

use crate::channels::{apply_channel, switch_decomposition, xi_operator, MeasurementStrength, Outcome};
use crate::error::{Error, Result};
use crate::qmat::{binary_entropy, expectation, hamiltonian, von_neumann_entropy, ComplexMatrix, DensityOperator, C64};
use crate::states::{gibbs_state, initial_state, GibbsParams, InitialStateSpec};

/// Slack applied to every strict inequality of the heat-engine conditions.
pub const CONDITION_SLACK: f64 = 1e-12;
/// Outcomes rarer than this are treated as degenerate.
pub const DEGENERATE_PROBABILITY: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Definite,
    Incoherent,
    Coherent,
}

/// Which way the second stroke rotates the Bloch vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WorkBranch {
    /// Align with the ground state, `b = ½(1 + r)`.
    Extract,
    /// Align with the excited state, `b = ½(1 − r)`.
    Invest,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StrokeKind {
    Heat,
    Work,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StrokeRecord {
    pub index: u8,
    pub u_before: f64,
    pub u_after: f64,
    pub s_before: f64,
    pub s_after: f64,
    pub kind: StrokeKind,
    /// Heat absorbed (`ΔU`) or work extracted (`−ΔU`).
    pub value: f64,
}

impl StrokeRecord {
    fn new(index: u8, kind: StrokeKind, before: (f64, f64), after: (f64, f64)) -> Self {
        let du = after.0 - before.0;
        Self {
            index,
            u_before: before.0,
            u_after: after.0,
            s_before: before.1,
            s_after: after.1,
            kind,
            value: match kind {
                StrokeKind::Heat => du,
                StrokeKind::Work => -du,
            },
        }
    }

    pub fn delta_u(&self) -> f64 {
        self.u_after - self.u_before
    }

    pub fn delta_s(&self) -> f64 {
        self.s_after - self.s_before
    }
}

/// The three heat-engine inequalities on the post-measurement state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct HeatEngineConditions {
    /// `ā > ½(1 − tanh βε)`.
    pub lower: bool,
    /// `ā < ½(1 + tanh βε)`.
    pub upper: bool,
    /// `|ρ₀₁| < ½√(tanh²βε − (1−2ā)²)`.
    pub coherence: bool,
}

impl HeatEngineConditions {
    pub fn evaluate(a_bar: f64, coherence: f64, tanh: f64) -> Self {
        let lower = a_bar > 0.5 * (1.0 - tanh) + CONDITION_SLACK;
        let upper = a_bar < 0.5 * (1.0 + tanh) - CONDITION_SLACK;
        let radicand = tanh * tanh - (1.0 - 2.0 * a_bar).powi(2);
        let coherence = radicand > 0.0 && coherence < 0.5 * radicand.sqrt() - CONDITION_SLACK;
        Self {
            lower,
            upper,
            coherence,
        }
    }

    pub fn all(&self) -> bool {
        self.lower && self.upper && self.coherence
    }

    fn failures(&self) -> impl Iterator<Item = Inequality> {
        [
            (!self.lower).then_some(Inequality::Lower),
            (!self.upper).then_some(Inequality::Upper),
            (!self.coherence).then_some(Inequality::Coherence),
        ]
        .into_iter()
        .flatten()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Inequality {
    Lower,
    Upper,
    Coherence,
    /// The outcome has probability below the degeneracy threshold.
    Degenerate,
}

/// One failed inequality, tagged with the branch it belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub outcome: Option<Outcome>,
    pub inequality: Inequality,
}

/// Cycle quantities of one branch (the only branch outside the coherent mode).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchCycle {
    pub a_bar: f64,
    pub coherence: C64,
    pub b_strength: f64,
    pub q_hot: f64,
    pub w_ext: f64,
    pub q_cold: f64,
    pub strokes: [StrokeRecord; 3],
    pub conditions: HeatEngineConditions,
    /// `W_ext/Q_hot`, zero when a condition fails, absent when `Q_hot ≤ 0`.
    pub efficiency: Option<f64>,
    /// `W_ext/Q_hot` regardless of the conditions.
    pub raw_efficiency: Option<f64>,
}

impl BranchCycle {
    /// Bloch length `√((1−2ā)² + 4|ρ₀₁|²)` of the post-measurement state.
    pub fn bloch_length(&self) -> f64 {
        bloch_length(self.a_bar, self.coherence.norm())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchResult {
    pub outcome: Option<Outcome>,
    pub probability: f64,
    /// `None` for a degenerate outcome.
    pub cycle: Option<BranchCycle>,
}

impl BranchResult {
    pub fn is_degenerate(&self) -> bool {
        self.cycle.is_none()
    }
}

/// Efficiencies before the zero-on-violation convention is applied.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Efficiencies {
    pub eta: f64,
    pub eta_tilde: f64,
    pub delta_eta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CycleReport {
    pub mode: Mode,
    pub beta_eps: f64,
    pub a_bar_inc: f64,
    pub branches: Vec<BranchResult>,
    pub avg_w_ext: f64,
    pub avg_q_hot: f64,
    pub beta_d_inv: f64,
    pub w_cost: f64,
    /// Reported efficiencies: zero whenever `violations` is non-empty.
    pub eta: f64,
    pub eta_tilde: f64,
    pub delta_eta: f64,
    pub eta_cost: f64,
    pub t_d_crit: f64,
    pub violations: Vec<Violation>,
    /// Formula values ignoring the conditions; absent when `⟨Q_hot⟩ ≤ 0`.
    pub unconstrained: Option<Efficiencies>,
}

impl CycleReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn branch(&self, outcome: Outcome) -> Option<&BranchResult> {
        self.branches.iter().find(|b| b.outcome == Some(outcome))
    }
}

fn bloch_length(a_bar: f64, coherence_abs: f64) -> f64 {
    ((1.0 - 2.0 * a_bar).powi(2) + 4.0 * coherence_abs * coherence_abs).sqrt()
}

fn energy_entropy(rho: &DensityOperator) -> (f64, f64) {
    let u = expectation(&hamiltonian(), rho).expect("qubit state");
    (u, von_neumann_entropy(rho))
}

/// Runs the three strokes starting from the post-measurement state `rho1`.
fn run_branch(rho1: &DensityOperator, gibbs: GibbsParams, branch: WorkBranch) -> BranchCycle {
    let t = gibbs.tanh();
    let rho0 = gibbs_state(gibbs);
    let a_bar = rho1.get(0, 0).re;
    let coherence = rho1.get(0, 1);
    let r = bloch_length(a_bar, coherence.norm()).min(1.0);
    let b = match branch {
        WorkBranch::Extract => 0.5 * (1.0 + r),
        WorkBranch::Invest => 0.5 * (1.0 - r),
    };
    let b_strength = MeasurementStrength::new(b).expect("b lies in [0, 1]");
    let rho2 = apply_channel(b_strength, rho1).expect("qubit state");

    let s0 = energy_entropy(&rho0);
    let s1 = energy_entropy(rho1);
    let s2 = energy_entropy(&rho2);
    let strokes = [
        StrokeRecord::new(1, StrokeKind::Heat, s0, s1),
        StrokeRecord::new(2, StrokeKind::Work, s1, s2),
        StrokeRecord::new(3, StrokeKind::Heat, s2, s0),
    ];
    let (q_hot, w_ext, q_cold) = (strokes[0].value, strokes[1].value, strokes[2].value);
    let conditions = HeatEngineConditions::evaluate(a_bar, coherence.norm(), t);
    let raw_efficiency = (q_hot > 0.0).then(|| w_ext / q_hot);
    let efficiency = raw_efficiency.map(|e| if conditions.all() { e } else { 0.0 });
    BranchCycle {
        a_bar,
        coherence,
        b_strength: b,
        q_hot,
        w_ext,
        q_cold,
        strokes,
        conditions,
        efficiency,
        raw_efficiency,
    }
}

fn branch_violations(outcome: Option<Outcome>, cycle: &BranchCycle) -> Vec<Violation> {
    cycle
        .conditions
        .failures()
        .map(|inequality| Violation { outcome, inequality })
        .collect()
}

fn single_branch_report(mode: Mode, a_bar: f64, gibbs: GibbsParams) -> CycleReport {
    let rho1 = DensityOperator::new_unchecked(ComplexMatrix::from_real_diag(&[a_bar, 1.0 - a_bar]));
    let cycle = run_branch(&rho1, gibbs, WorkBranch::Extract);
    let violations = branch_violations(None, &cycle);
    let unconstrained = cycle.raw_efficiency.map(|e| Efficiencies {
        eta: e,
        eta_tilde: e,
        delta_eta: 0.0,
    });
    let eta = cycle.efficiency.unwrap_or(0.0);
    CycleReport {
        mode,
        beta_eps: gibbs.beta_eps(),
        a_bar_inc: a_bar,
        avg_w_ext: cycle.w_ext,
        avg_q_hot: cycle.q_hot,
        branches: vec![BranchResult {
            outcome: None,
            probability: 1.0,
            cycle: Some(cycle),
        }],
        beta_d_inv: 0.0,
        w_cost: 0.0,
        eta,
        eta_tilde: eta,
        delta_eta: 0.0,
        eta_cost: 0.0,
        t_d_crit: 0.0,
        violations,
        unconstrained,
    }
}

/// Cycle with a single measurement of strength `a`.
pub fn definite_cycle(a: MeasurementStrength, beta_eps: f64) -> Result<CycleReport> {
    let gibbs = GibbsParams::new(beta_eps)?;
    Ok(single_branch_report(Mode::Definite, a.value(), gibbs))
}

/// Cycle fuelled by the SWITCH with the control discarded.
pub fn incoherent_cycle(
    a: MeasurementStrength,
    a_prime: MeasurementStrength,
    spec: &InitialStateSpec,
) -> Result<CycleReport> {
    let rho = initial_state(spec)?;
    let dec = switch_decomposition(a, a_prime, &rho)?;
    Ok(single_branch_report(
        Mode::Incoherent,
        dec.incoherent_strength(),
        spec.gibbs,
    ))
}

/// Post-SWITCH quantities shared by both coherent-mode branches.
struct CoherentStage {
    a_bar_inc: f64,
    xi: ComplexMatrix,
}

fn coherent_stage(
    a: MeasurementStrength,
    a_prime: MeasurementStrength,
    phi_prime: f64,
    spec: &InitialStateSpec,
) -> Result<CoherentStage> {
    let rho = initial_state(spec)?;
    let dec = switch_decomposition(a, a_prime, &rho)?;
    Ok(CoherentStage {
        a_bar_inc: dec.incoherent_strength(),
        xi: xi_operator(&dec, phi_prime),
    })
}

fn conditional_branch(stage: &CoherentStage, outcome: Outcome, gibbs: GibbsParams, branch: WorkBranch) -> BranchResult {
    let sign = outcome.sign();
    let probability = (0.5 * (1.0 + sign * stage.xi.trace().re)).clamp(0.0, 1.0);
    if probability < DEGENERATE_PROBABILITY {
        return BranchResult {
            outcome: Some(outcome),
            probability,
            cycle: None,
        };
    }
    let inc = ComplexMatrix::from_real_diag(&[stage.a_bar_inc, 1.0 - stage.a_bar_inc]);
    let rho1 = (&inc + &stage.xi.scale_real(sign))
        .scale_real(0.5 / probability)
        .hermitian_part();
    let rho1 = DensityOperator::new_unchecked(rho1);
    BranchResult {
        outcome: Some(outcome),
        probability,
        cycle: Some(run_branch(&rho1, gibbs, branch)),
    }
}

/// Both post-selected branches of the coherent mode, work-extracting second stroke.
pub fn coherent_branches(
    a: MeasurementStrength,
    a_prime: MeasurementStrength,
    phi_prime: f64,
    spec: &InitialStateSpec,
) -> Result<[BranchResult; 2]> {
    coherent_branches_with(a, a_prime, phi_prime, spec, WorkBranch::Extract)
}

/// As [`coherent_branches`] with an explicit choice of the second-stroke direction.
pub fn coherent_branches_with(
    a: MeasurementStrength,
    a_prime: MeasurementStrength,
    phi_prime: f64,
    spec: &InitialStateSpec,
    branch: WorkBranch,
) -> Result<[BranchResult; 2]> {
    let stage = coherent_stage(a, a_prime, phi_prime, spec)?;
    Ok(Outcome::BOTH.map(|o| conditional_branch(&stage, o, spec.gibbs, branch)))
}

/// Coherent-mode cycle averaged over outcomes, with the erasure cost of the control record.
pub fn coherent_cycle(
    a: MeasurementStrength,
    a_prime: MeasurementStrength,
    phi_prime: f64,
    spec: &InitialStateSpec,
    beta_d_inv: f64,
) -> Result<CycleReport> {
    if !(beta_d_inv.is_finite() && beta_d_inv >= 0.0) {
        return Err(Error::Domain {
            name: "beta_d_inv",
            value: beta_d_inv,
            range: "[0, inf)",
        });
    }
    let stage = coherent_stage(a, a_prime, phi_prime, spec)?;
    let gibbs = spec.gibbs;
    let t = gibbs.tanh();
    let branches: Vec<BranchResult> = Outcome::BOTH
        .iter()
        .map(|&o| conditional_branch(&stage, o, gibbs, WorkBranch::Extract))
        .collect();

    let mut violations = Vec::new();
    let (mut avg_w_ext, mut avg_q_hot, mut weighted_r) = (0.0, 0.0, 0.0);
    for br in &branches {
        match &br.cycle {
            Some(cycle) => {
                avg_w_ext += br.probability * cycle.w_ext;
                avg_q_hot += br.probability * cycle.q_hot;
                weighted_r += br.probability * cycle.bloch_length();
                violations.extend(branch_violations(br.outcome, cycle));
            }
            None => violations.push(Violation {
                outcome: br.outcome,
                inequality: Inequality::Degenerate,
            }),
        }
    }
    // A degenerate outcome carries no weight; it only matters if the other one fails.
    violations.retain(|v| v.inequality != Inequality::Degenerate);

    let population = 1.0 - 2.0 * stage.a_bar_inc;
    let q_inc = population + t;
    let w_cost = -beta_d_inv * LN_2;
    let t_d_crit = (weighted_r - population.abs()) / LN_2;
    let unconstrained = (q_inc > 0.0).then(|| {
        let eta_tilde = avg_w_ext / q_inc;
        Efficiencies {
            eta: eta_tilde + w_cost / q_inc,
            eta_tilde,
            delta_eta: (weighted_r - population.abs()) / q_inc,
        }
    });
    let eta_cost = if q_inc > 0.0 { -w_cost / q_inc } else { 0.0 };
    let valid = violations.is_empty() && unconstrained.is_some();
    let shown = unconstrained.filter(|_| valid);
    Ok(CycleReport {
        mode: Mode::Coherent,
        beta_eps: gibbs.beta_eps(),
        a_bar_inc: stage.a_bar_inc,
        branches,
        avg_w_ext,
        avg_q_hot,
        beta_d_inv,
        w_cost,
        eta: shown.map_or(0.0, |e| e.eta),
        eta_tilde: shown.map_or(0.0, |e| e.eta_tilde),
        delta_eta: shown.map_or(0.0, |e| e.delta_eta),
        eta_cost,
        t_d_crit,
        violations,
        unconstrained,
    })
}

/// Population and coherence components of a work vector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WorkComponents {
    pub diag: f64,
    pub off: f64,
}

impl WorkComponents {
    fn norm(self) -> f64 {
        self.diag.hypot(self.off)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WorkVectors {
    pub w_inc: WorkComponents,
    pub w_sco: WorkComponents,
}

/// `W_inc = (1−2ā, 0)` and `W_SCO = (tr[ΞZ], 2|Ξ₀₁|)`.
pub fn work_vectors(
    a: MeasurementStrength,
    a_prime: MeasurementStrength,
    phi_prime: f64,
    spec: &InitialStateSpec,
) -> Result<WorkVectors> {
    let stage = coherent_stage(a, a_prime, phi_prime, spec)?;
    let xi = &stage.xi;
    Ok(WorkVectors {
        w_inc: WorkComponents {
            diag: 1.0 - 2.0 * stage.a_bar_inc,
            off: 0.0,
        },
        w_sco: WorkComponents {
            diag: (xi.get(0, 0) - xi.get(1, 1)).re,
            off: 2.0 * xi.get(0, 1).norm(),
        },
    })
}

/// SCO efficiency gain from the parallelogram of work vectors.
pub fn delta_eta_from_vectors(v: &WorkVectors, beta_eps: f64) -> Result<f64> {
    let t = GibbsParams::new(beta_eps)?.tanh();
    let denominator = v.w_inc.diag + t;
    if denominator <= 0.0 {
        return Err(Error::Domain {
            name: "1 - 2 a_bar_inc + tanh(beta_eps)",
            value: denominator,
            range: "(0, inf)",
        });
    }
    let sum = WorkComponents {
        diag: v.w_inc.diag + v.w_sco.diag,
        off: v.w_inc.off + v.w_sco.off,
    };
    let difference = WorkComponents {
        diag: v.w_inc.diag - v.w_sco.diag,
        off: v.w_inc.off - v.w_sco.off,
    };
    Ok((0.5 * (sum.norm() + difference.norm()) - v.w_inc.norm()) / denominator)
}

/// Entropy of a qubit state with Bloch length `r`; handy for stroke bookkeeping checks.
pub fn entropy_from_bloch_length(r: f64) -> f64 {
    binary_entropy(0.5 * (1.0 + r.clamp(0.0, 1.0))).expect("argument in [0, 1]")
}
