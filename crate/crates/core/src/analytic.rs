//! Closed-form SWITCH-engine quantities for the three initial-state families,
//! and their optimization over the control state.
//!
//! Notation: `t = tanh βε`, `w = 1 − 2ā_inc`, `Δ = φ − φ′`, and for an outcome `s = ±1`
//! the unnormalized population imbalance `x_s = w − s·tr[ZΞ]`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use crate::channels::{MeasurementStrength, Outcome};
use crate::engine::{coherent_cycle, work_vectors, HeatEngineConditions, DEGENERATE_PROBABILITY};
use crate::error::{Error, Result};
use crate::qmat::C64;
use crate::states::{ControlAngles, Correlations, Family, GibbsParams, InitialStateSpec};

/// Number of grid points used by [`optimize_theta`] before refinement.
pub const THETA_GRID_POINTS: usize = 801;
/// Width of the bracket left by the golden-section refinement.
pub const THETA_TOLERANCE: f64 = 1e-8;
/// Largest closed-form versus brute-force discrepancy accepted by [`cross_check`],
/// relative once the compared value exceeds one.
pub const CONSISTENCY_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DeltaSigma {
    pub delta: f64,
    pub sigma: f64,
}

/// `δ = ½((1−a)(1−a′)(1−t) − aa′(1+t))` and `Σ` with the plus sign.
pub fn delta_sigma(a: MeasurementStrength, a_prime: MeasurementStrength, beta_eps: f64) -> Result<DeltaSigma> {
    let t = GibbsParams::new(beta_eps)?.tanh();
    let (upper, lower) = weighted_products(a.value(), a_prime.value(), t);
    Ok(DeltaSigma {
        delta: lower - upper,
        sigma: lower + upper,
    })
}

/// `(aa′(1+t)/2, (1−a)(1−a′)(1−t)/2)`: the two diagonal weights of `ρ_{a′}ρ⁽⁰⁾ρ_a`.
fn weighted_products(a: f64, a_prime: f64, t: f64) -> (f64, f64) {
    (
        0.5 * a * a_prime * (1.0 + t),
        0.5 * (1.0 - a) * (1.0 - a_prime) * (1.0 - t),
    )
}

/// Effective incoherent strength `½(1 + (2z−1)cos θ)a′ + ½(1 − (2z−1)cos θ)a`,
/// with `z = ζ` (uncorrelated) or `z = ζ₀p₀ + ζ₁p₁` (separable, entangled).
pub fn abar_inc(spec: &InitialStateSpec, a: MeasurementStrength, a_prime: MeasurementStrength) -> f64 {
    let k = (2.0 * spec.zeta_weight() - 1.0) * spec.angles.theta.cos();
    0.5 * (1.0 + k) * a_prime.value() + 0.5 * (1.0 - k) * a.value()
}

/// One point of parameter space: strengths, readout phase and initial state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Setting {
    pub a: MeasurementStrength,
    pub a_prime: MeasurementStrength,
    pub phi_prime: f64,
    pub spec: InitialStateSpec,
}

impl Setting {
    fn tanh(&self) -> f64 {
        self.spec.gibbs.tanh()
    }
}

/// The SWITCH output summarized by the few numbers the efficiencies depend on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClosedForm {
    pub a_bar_inc: f64,
    /// `tr[ZΞ]`.
    pub w_sco_diag: f64,
    /// `2|Ξ₀₁|`.
    pub w_sco_off: f64,
    /// `tr Ξ = p⁺ − p⁻`.
    pub trace_xi: f64,
    pub xi01: C64,
}

pub fn closed_form(s: &Setting) -> ClosedForm {
    let (a, ap) = (s.a.value(), s.a_prime.value());
    let spec = &s.spec;
    let t = s.tanh();
    let theta = spec.angles.theta;
    let delta_phase = spec.angles.phi - s.phi_prime;
    let (upper, lower) = weighted_products(a, ap, t);
    let (z0, z1) = spec.zetas();
    let amplitude = theta.sin() * delta_phase.cos();
    let d0 = (2.0 * z0 - 1.0) * upper;
    let d1 = (2.0 * z1 - 1.0) * lower;
    let xi01 = match spec.correlations {
        Correlations::Entangled { xi, varphi, .. } => {
            let (half_s, half_c) = (0.5 * theta).sin_cos();
            let forward = C64::from_polar(a * (1.0 - ap) * half_s * half_s, delta_phase);
            let backward = C64::from_polar(ap * (1.0 - a) * half_c * half_c, -delta_phase);
            C64::from_polar(xi, -varphi) * (forward - backward)
        }
        _ => C64::new(0.0, 0.0),
    };
    ClosedForm {
        a_bar_inc: abar_inc(spec, s.a, s.a_prime),
        w_sco_diag: amplitude * (d0 - d1),
        w_sco_off: 2.0 * xi01.norm(),
        trace_xi: amplitude * (d0 + d1),
        xi01,
    }
}

/// `(W_SCO^diag, W_SCO^off)`.
pub fn wsco_components(s: &Setting) -> (f64, f64) {
    let cf = closed_form(s);
    (cf.w_sco_diag, cf.w_sco_off)
}

/// Whether the heat-engine inequalities are enforced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Constraints {
    On,
    Off,
}

/// Closed-form view of one post-selected branch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BranchClosedForm {
    pub probability: f64,
    pub a_bar: f64,
    pub coherence: f64,
    pub conditions: HeatEngineConditions,
    /// `W/Q_hot`, absent when the heat input is not positive.
    pub efficiency: Option<f64>,
}

impl BranchClosedForm {
    pub fn is_degenerate(&self) -> bool {
        self.probability < DEGENERATE_PROBABILITY
    }
}

pub fn branch_closed_form(s: &Setting, outcome: Outcome) -> BranchClosedForm {
    branch_from(&closed_form(s), s.tanh(), outcome)
}

fn branch_from(cf: &ClosedForm, t: f64, outcome: Outcome) -> BranchClosedForm {
    let sign = outcome.sign();
    let probability = (0.5 * (1.0 + sign * cf.trace_xi)).clamp(0.0, 1.0);
    if probability < DEGENERATE_PROBABILITY {
        return BranchClosedForm {
            probability,
            a_bar: 0.5,
            coherence: 0.0,
            conditions: HeatEngineConditions {
                lower: false,
                upper: false,
                coherence: false,
            },
            efficiency: None,
        };
    }
    let x = 1.0 - 2.0 * cf.a_bar_inc - sign * cf.w_sco_diag;
    let a_bar = 0.5 * (1.0 - x / (2.0 * probability));
    let coherence = cf.w_sco_off / (4.0 * probability);
    let heat = x + 2.0 * probability * t;
    let efficiency = (heat > 0.0).then(|| (x.hypot(cf.w_sco_off) + x) / heat);
    BranchClosedForm {
        probability,
        a_bar,
        coherence,
        conditions: HeatEngineConditions::evaluate(a_bar, coherence, t),
        efficiency,
    }
}

fn infeasible(what: &str) -> Error {
    Error::Infeasible(format!("heat-engine conditions fail for {what}"))
}

/// Average coherent-mode efficiency before the erasure cost, `η̃ = η_inc + Δη`.
pub fn eta_tilde(s: &Setting, constraints: Constraints) -> Result<f64> {
    eta_tilde_from(&closed_form(s), s.tanh(), constraints).ok_or_else(|| infeasible("eta_tilde"))
}

fn eta_tilde_from(cf: &ClosedForm, t: f64, constraints: Constraints) -> Option<f64> {
    let w = 1.0 - 2.0 * cf.a_bar_inc;
    if w + t <= 0.0 {
        return None;
    }
    if constraints == Constraints::On {
        let ok = Outcome::BOTH.iter().all(|&o| {
            let br = branch_from(cf, t, o);
            br.is_degenerate() || br.conditions.all()
        });
        if !ok {
            return None;
        }
    }
    let plus = (w + cf.w_sco_diag).hypot(cf.w_sco_off);
    let minus = (w - cf.w_sco_diag).hypot(cf.w_sco_off);
    Some((0.5 * (plus + minus) + w) / (w + t))
}

/// `Δη = (½(|W_inc+W_SCO| + |W_inc−W_SCO|) − |W_inc|)/(w + t)`, the gain over the incoherent mode.
pub fn delta_eta(s: &Setting) -> Result<f64> {
    let cf = closed_form(s);
    let w = 1.0 - 2.0 * cf.a_bar_inc;
    let denominator = w + s.tanh();
    if denominator <= 0.0 {
        return Err(infeasible("the incoherent heat input"));
    }
    let plus = (w + cf.w_sco_diag).hypot(cf.w_sco_off);
    let minus = (w - cf.w_sco_diag).hypot(cf.w_sco_off);
    Ok((0.5 * (plus + minus) - w.abs()) / denominator)
}

/// Incoherent-mode efficiency `(w + |w|)/(w + t)`; zero when the conditions fail and constrained.
pub fn eta_incoherent(s: &Setting, constraints: Constraints) -> Result<f64> {
    let w = 1.0 - 2.0 * abar_inc(&s.spec, s.a, s.a_prime);
    let t = s.tanh();
    if w + t <= 0.0 {
        return Err(infeasible("the incoherent heat input"));
    }
    let ok = HeatEngineConditions::evaluate(0.5 * (1.0 - w), 0.0, t).all();
    if constraints == Constraints::On && !ok {
        return Ok(0.0);
    }
    Ok((w + w.abs()) / (w + t))
}

/// Efficiency of the branch post-selected on `outcome`.
pub fn eta_postselected(s: &Setting, outcome: Outcome, constraints: Constraints) -> Result<f64> {
    postselected_from(&closed_form(s), s.tanh(), outcome, constraints).ok_or_else(|| infeasible(outcome.name()))
}

fn postselected_from(cf: &ClosedForm, t: f64, outcome: Outcome, constraints: Constraints) -> Option<f64> {
    let br = branch_from(cf, t, outcome);
    if constraints == Constraints::On && !br.conditions.all() {
        return None;
    }
    br.efficiency
}

/// Which efficiency an optimization targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    EtaTilde,
    Postselected(Outcome),
}

impl Target {
    fn evaluate(self, s: &Setting, constraints: Constraints) -> Option<f64> {
        let cf = closed_form(s);
        match self {
            Target::EtaTilde => eta_tilde_from(&cf, s.tanh(), constraints),
            Target::Postselected(o) => postselected_from(&cf, s.tanh(), o, constraints),
        }
    }
}

/// Everything fixed while the control state is optimized.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Scenario {
    pub family: Family,
    pub a: MeasurementStrength,
    pub a_prime: MeasurementStrength,
    pub gibbs: GibbsParams,
    pub phi_prime: f64,
    /// Entangled family only: `ξ` as a fraction of `sech(βε)/2`.
    pub xi_fraction: f64,
}

impl Scenario {
    pub fn new(family: Family, a: MeasurementStrength, a_prime: MeasurementStrength, gibbs: GibbsParams) -> Self {
        Self {
            family,
            a,
            a_prime,
            gibbs,
            phi_prime: 0.0,
            xi_fraction: 1.0,
        }
    }

    /// Control configurations among which the optimum over `(ζ, φ)` (and `ξ` phases) lies.
    pub fn candidates(&self, theta: f64) -> Result<Vec<InitialStateSpec>> {
        let phases: &[f64] = match self.family {
            Family::Entangled => &[0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2],
            _ => &[0.0, PI],
        };
        let mut out = Vec::new();
        for &offset in phases {
            let angles = ControlAngles::new(theta, (self.phi_prime + offset).rem_euclid(2.0 * PI))?;
            match self.family {
                Family::Uncorrelated => {
                    for zeta in [1.0, 0.0] {
                        out.push(InitialStateSpec::uncorrelated(angles, zeta, self.gibbs)?);
                    }
                }
                Family::Separable => {
                    for (z0, z1) in [(1.0, 0.0), (1.0, 1.0)] {
                        out.push(InitialStateSpec::separable(angles, z0, z1, self.gibbs)?);
                    }
                }
                Family::Entangled => {
                    let xi = self.xi_fraction.clamp(0.0, 1.0) * self.gibbs.xi_max();
                    out.push(InitialStateSpec::entangled(angles, 1.0, 0.0, xi, 0.0, self.gibbs)?);
                }
            }
        }
        Ok(out)
    }

    pub fn setting(&self, spec: InitialStateSpec) -> Setting {
        Setting {
            a: self.a,
            a_prime: self.a_prime,
            phi_prime: self.phi_prime,
            spec,
        }
    }

    /// Best candidate at fixed `θ`, first one winning ties.
    pub fn best_at(
        &self,
        theta: f64,
        target: Target,
        constraints: Constraints,
    ) -> Result<Option<(InitialStateSpec, f64)>> {
        let mut best: Option<(InitialStateSpec, f64)> = None;
        for spec in self.candidates(theta)? {
            if let Some(v) = target.evaluate(&self.setting(spec), constraints) {
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((spec, v));
                }
            }
        }
        Ok(best)
    }
}

/// `max_{ζ,φ} η̃` at the scenario's `θ`.
pub fn eta_closed_form(scenario: &Scenario, theta: f64, constraints: Constraints) -> Result<f64> {
    scenario
        .best_at(theta, Target::EtaTilde, constraints)?
        .map(|(_, v)| v)
        .ok_or_else(|| infeasible("every control configuration"))
}

/// `max_{ζ,φ} η^(±)` at the scenario's `θ`.
pub fn eta_postselected_closed_form(
    scenario: &Scenario,
    outcome: Outcome,
    theta: f64,
    constraints: Constraints,
) -> Result<f64> {
    scenario
        .best_at(theta, Target::Postselected(outcome), constraints)?
        .map(|(_, v)| v)
        .ok_or_else(|| infeasible(outcome.name()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OptResult {
    pub theta_opt: f64,
    pub value: f64,
    /// Some grid angle was excluded by the objective.
    pub constrained: bool,
}

/// Maximizes `objective` over `θ ∈ [0, π]`; `None` marks an infeasible angle.
pub fn optimize_theta<F>(objective: F) -> Result<OptResult>
where
    F: Fn(f64) -> Option<f64>,
{
    let n = THETA_GRID_POINTS;
    let step = PI / (n - 1) as f64;
    let grid_theta = |i: usize| if i == n - 1 { PI } else { i as f64 * step };
    let mut best: Option<(usize, f64)> = None;
    let mut constrained = false;
    for i in 0..n {
        match objective(grid_theta(i)) {
            Some(v) if v.is_finite() => {
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((i, v));
                }
            }
            _ => constrained = true,
        }
    }
    let (i, value) = best.ok_or_else(|| Error::Infeasible("no feasible angle in [0, pi]".into()))?;
    let mut result = OptResult {
        theta_opt: grid_theta(i),
        value,
        constrained,
    };
    let lo = grid_theta(i.saturating_sub(1));
    let hi = grid_theta((i + 1).min(n - 1));
    if let Some((theta, v)) = golden_section(&objective, lo, hi) {
        if v > value {
            result.theta_opt = theta;
            result.value = v;
        }
    }
    Ok(result)
}

fn golden_section<F>(objective: &F, mut lo: f64, mut hi: f64) -> Option<(f64, f64)>
where
    F: Fn(f64) -> Option<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let score = |x: f64| objective(x).filter(|v| v.is_finite()).unwrap_or(f64::NEG_INFINITY);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (score(x1), score(x2));
    while hi - lo > THETA_TOLERANCE {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = score(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = score(x2);
        }
    }
    let x = 0.5 * (lo + hi);
    objective(x).filter(|v| v.is_finite()).map(|v| (x, v))
}

/// Optimum over `θ` and the candidate control configurations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ControlOptimum {
    pub spec: InitialStateSpec,
    pub opt: OptResult,
}

pub fn optimize_control(scenario: &Scenario, target: Target, constraints: Constraints) -> Result<ControlOptimum> {
    let opt = optimize_theta(|theta| {
        scenario
            .best_at(theta, target, constraints)
            .ok()
            .flatten()
            .map(|(_, v)| v)
    })?;
    let (spec, value) = scenario
        .best_at(opt.theta_opt, target, constraints)?
        .ok_or_else(|| infeasible("the optimal angle"))?;
    Ok(ControlOptimum {
        spec,
        opt: OptResult { value, ..opt },
    })
}

/// Compares the closed forms with the density-matrix path at `s`.
pub fn cross_check(s: &Setting) -> Result<()> {
    let cf = closed_form(s);
    let vectors = work_vectors(s.a, s.a_prime, s.phi_prime, &s.spec)?;
    let report = coherent_cycle(s.a, s.a_prime, s.phi_prime, &s.spec, 0.0)?;
    let mut pairs = vec![
        ("a_bar_inc", cf.a_bar_inc, report.a_bar_inc),
        ("w_sco_diag", cf.w_sco_diag, vectors.w_sco.diag),
        ("w_sco_off", cf.w_sco_off, vectors.w_sco.off),
    ];
    if let (Some(closed), Some(brute)) = (
        eta_tilde_from(&cf, s.tanh(), Constraints::Off),
        report.unconstrained.map(|e| e.eta_tilde),
    ) {
        pairs.push(("eta_tilde", closed, brute));
    }
    for br in &report.branches {
        let outcome = br.outcome.expect("coherent branches carry an outcome");
        let closed = branch_from(&cf, s.tanh(), outcome);
        pairs.push(("probability", closed.probability, br.probability));
        if let (Some(closed), Some(brute)) = (closed.efficiency, br.cycle.as_ref().and_then(|c| c.raw_efficiency)) {
            pairs.push((outcome.name(), closed, brute));
        }
    }
    for (name, closed, brute) in pairs {
        let diff = (closed - brute).abs();
        if diff.is_nan() || diff > CONSISTENCY_TOLERANCE * closed.abs().max(1.0) {
            return Err(Error::Consistency(format!(
                "{name}: closed form {closed:.12e}, brute force {brute:.12e}"
            )));
        }
    }
    Ok(())
}
