use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use super::{reduced_matrix, Circuit, Gate};
use crate::channels::{switch_decomposition, MeasurementStrength, Outcome};
use crate::engine::{coherent_branches, Mode, WorkBranch};
use crate::error::{Error, Result};
use crate::qmat::{eig_hermitian, ComplexMatrix, DensityOperator, C64};
use crate::states::{initial_state, ControlAngles, Correlations, InitialStateSpec};

pub const CONTROL: usize = 0;
pub const MEDIUM: usize = 1;
pub const METER_A: usize = 2;
pub const METER_B: usize = 3;
const AUX_A: usize = 4;
const AUX_B: usize = 5;
/// Purifies the medium when its initial state is mixed.
pub const PURIFIER: usize = 6;
pub const WIDTH: usize = 7;

/// Coherence below this is treated as zero when choosing the work-stroke gate.
const ZERO_COHERENCE: f64 = 1e-12;

/// How the initial state and meters are prepared.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PrepMode {
    /// Purification-based preparation valid for every strength in `[0, 1]`.
    Dilation,
    /// Fixed angle list of the experimental figure; requires `a, a′ ≥ ½` and uses
    /// `θ = π/2` and a control phase of `φ/4`.
    Caption,
}

/// Angles of the experimental preparation as printed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CaptionAngles {
    pub medium: f64,
    pub meter_a: f64,
    pub meter_b: f64,
    pub control_y: f64,
    pub control_z: f64,
}

fn arccos_sqrt(name: &'static str, radicand: f64) -> Result<f64> {
    if !(0.0..=1.0 + 1e-12).contains(&radicand) {
        return Err(Error::AngleDomain { name, radicand });
    }
    Ok(radicand.min(1.0).sqrt().acos())
}

/// `arccos√tanh βε`, `arccos√(2a−1)`, `arccos√(2a′−1)`, `π/2`, `φ/4`.
pub fn caption_angles(beta_eps: f64, a: f64, a_prime: f64, phi: f64) -> Result<CaptionAngles> {
    Ok(CaptionAngles {
        medium: arccos_sqrt("theta_y1", beta_eps.tanh())?,
        meter_a: arccos_sqrt("theta_y2", 2.0 * a - 1.0)?,
        meter_b: arccos_sqrt("theta_y3", 2.0 * a_prime - 1.0)?,
        control_y: FRAC_PI_2,
        control_z: phi / 4.0,
    })
}

/// `RotY` angle leaving `|0⟩` with probability `λ` when the printed angle obeys `cos²γ = 2λ−1`.
fn caption_rotation(angle: f64) -> f64 {
    angle.cos().powi(2).clamp(-1.0, 1.0).acos()
}

fn population_rotation(p0: f64) -> f64 {
    2.0 * p0.clamp(0.0, 1.0).sqrt().acos()
}

/// Gates that leave `target` in the mixed state `tau`, purified by `purifier`.
fn mixed_state_gates(tau: &ComplexMatrix, target: usize, purifier: usize, p_angle: Option<f64>) -> Vec<Gate> {
    let x = 2.0 * tau.get(0, 1).re;
    let y = -2.0 * tau.get(0, 1).im;
    let z = (tau.get(0, 0) - tau.get(1, 1)).re;
    let r = (x * x + y * y + z * z).sqrt().min(1.0);
    let angle = p_angle.unwrap_or_else(|| population_rotation(0.5 * (1.0 + r)));
    let mut gates = vec![Gate::ry(purifier, angle), Gate::cx(purifier, target)];
    if r > 1e-15 {
        let polar = (z / r).clamp(-1.0, 1.0).acos();
        if polar != 0.0 {
            gates.push(Gate::ry(target, polar));
        }
        let azimuth = y.atan2(x);
        if polar != 0.0 && azimuth != 0.0 {
            gates.push(Gate::rz(target, azimuth));
        }
    }
    gates
}

/// The prepared circuit together with the state it actually realizes.
pub(crate) struct Prepared {
    pub circuit: Circuit,
    pub spec: InitialStateSpec,
}

pub(crate) fn prepare(
    spec: &InitialStateSpec,
    a: MeasurementStrength,
    a_prime: MeasurementStrength,
    mode: PrepMode,
) -> Result<Prepared> {
    spec.validate()?;
    let g = spec.gibbs;
    let caption = match mode {
        PrepMode::Caption => Some(caption_angles(
            g.beta_eps(),
            a.value(),
            a_prime.value(),
            spec.angles.phi,
        )?),
        PrepMode::Dilation => None,
    };
    let mut realized = *spec;
    let angles = match caption {
        Some(ca) => {
            let phi = ca.control_z.rem_euclid(2.0 * PI);
            realized.angles = ControlAngles::new(ca.control_y, phi)?;
            realized.angles
        }
        None => spec.angles,
    };

    let (z0, z1) = spec.zetas();
    let [p0, p1] = g.populations();
    enum Layout {
        Product { flip: bool },
        Correlated,
    }
    let layout = match spec.correlations {
        Correlations::Uncorrelated { zeta: 1.0 } => Layout::Product { flip: false },
        Correlations::Uncorrelated { zeta: 0.0 } => Layout::Product { flip: true },
        _ if z0 == 1.0 && z1 == 1.0 && spec.xi() == 0.0 => Layout::Product { flip: false },
        _ if z0 == 1.0 && z1 == 0.0 => Layout::Correlated,
        _ => {
            return Err(Error::Unsupported(format!(
                "a {WIDTH}-qubit preparation needs a pure control per medium level (zetas {z0}, {z1})"
            )))
        }
    };

    let mut tau = ComplexMatrix::from_real_diag(&[p0, p1]);
    if let Correlations::Entangled { xi, varphi, .. } = spec.correlations {
        let coupling = C64::from_polar(xi, -varphi);
        tau.set(0, 1, coupling);
        tau.set(1, 0, coupling.conj());
    }
    let medium_angle = match caption {
        Some(ca) if spec.xi() == 0.0 => Some(caption_rotation(ca.medium)),
        _ => None,
    };

    let mut c = Circuit::new(WIDTH)?;
    c.extend(mixed_state_gates(&tau, MEDIUM, PURIFIER, medium_angle))?;
    match layout {
        Layout::Product { flip: true } => c.push(Gate::x(CONTROL))?,
        Layout::Product { flip: false } => {}
        Layout::Correlated => c.push(Gate::cry(MEDIUM, CONTROL, -PI))?,
    }
    c.push(Gate::ry(CONTROL, angles.theta))?;
    c.push(Gate::rz(CONTROL, angles.phi))?;

    let (ra, rb) = match caption {
        Some(ca) => (caption_rotation(ca.meter_a), caption_rotation(ca.meter_b)),
        None => (population_rotation(a.value()), population_rotation(a_prime.value())),
    };
    c.extend([
        Gate::ry(METER_A, ra),
        Gate::cx(METER_A, AUX_A),
        Gate::ry(METER_B, rb),
        Gate::cx(METER_B, AUX_B),
    ])?;
    Ok(Prepared {
        circuit: c,
        spec: realized,
    })
}

/// Initial state on `(medium, control)` plus meters in `ρ_a` and `ρ_{a′}`.
pub fn prep_circuit(
    spec: &InitialStateSpec,
    a: MeasurementStrength,
    a_prime: MeasurementStrength,
    mode: PrepMode,
) -> Result<Circuit> {
    Ok(prepare(spec, a, a_prime, mode)?.circuit)
}

fn switch_gates() -> [Gate; 4] {
    [
        Gate::cswap(CONTROL, METER_A, METER_B),
        Gate::swap(MEDIUM, METER_A),
        Gate::swap(MEDIUM, METER_B),
        Gate::cswap(CONTROL, METER_A, METER_B),
    ]
}

/// Angles of `R = R_z(α₃)R_y(α₂)R_z(α₁)R_y(−α₂)R_z(−α₃)`, a π rotation about the axis
/// with polar angle `α₂` and azimuth `α₃`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RotationAngles {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
}

impl RotationAngles {
    /// Gates in application order.
    pub fn gates(&self, target: usize) -> [Gate; 5] {
        [
            Gate::rz(target, -self.alpha3),
            Gate::ry(target, -self.alpha2),
            Gate::rz(target, self.alpha1),
            Gate::ry(target, self.alpha2),
            Gate::rz(target, self.alpha3),
        ]
    }

    pub fn matrix(&self) -> ComplexMatrix {
        self.gates(0)
            .iter()
            .fold(ComplexMatrix::identity(2), |acc, g| &g.local_matrix() * &acc)
    }
}

/// Rotation taking the Bloch vector of `[[ā, c], [c*, 1−ā]]` onto `+z` (Extract) or `−z` (Invest).
pub fn generalized_rotation_angles(a_bar: f64, coherence: C64, branch: WorkBranch) -> RotationAngles {
    let z = 2.0 * a_bar - 1.0;
    let (polar, azimuth) = if coherence.norm() < ZERO_COHERENCE {
        (if z < 0.0 { PI } else { 0.0 }, 0.0)
    } else {
        let x = 2.0 * coherence.re;
        let y = -2.0 * coherence.im;
        let r = (x * x + y * y + z * z).sqrt();
        ((z / r).clamp(-1.0, 1.0).acos(), y.atan2(x))
    };
    let alpha2 = match branch {
        WorkBranch::Extract => 0.5 * polar,
        WorkBranch::Invest => 0.5 * (PI + polar),
    };
    RotationAngles {
        alpha1: -PI,
        alpha2,
        alpha3: azimuth,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EngineCircuit {
    pub mode: Mode,
    pub circuit: Circuit,
    /// Index of the first work-stroke gate; earlier gates prepare, switch and read out.
    pub stroke_start: usize,
    /// The joint initial state the circuit prepares.
    pub realized: InitialStateSpec,
}

/// Full circuit: preparation, SWITCH, control readout (coherent mode) and work stroke.
pub fn engine_circuit(
    mode: Mode,
    spec: &InitialStateSpec,
    a: MeasurementStrength,
    a_prime: MeasurementStrength,
    phi_prime: f64,
    prep: PrepMode,
) -> Result<EngineCircuit> {
    let Prepared {
        mut circuit,
        spec: realized,
    } = prepare(spec, a, a_prime, prep)?;
    circuit.extend(switch_gates())?;
    match mode {
        Mode::Definite => Err(Error::Unsupported("the definite mode has no SWITCH circuit".into())),
        Mode::Incoherent => {
            let stroke_start = circuit.gates().len();
            let dec = switch_decomposition(a, a_prime, &initial_state(&realized)?)?;
            if dec.incoherent_strength() < 0.5 {
                circuit.push(Gate::x(MEDIUM))?;
            }
            Ok(EngineCircuit {
                mode,
                circuit,
                stroke_start,
                realized,
            })
        }
        Mode::Coherent => {
            circuit.extend([Gate::rz(CONTROL, -phi_prime), Gate::h(CONTROL)])?;
            let stroke_start = circuit.gates().len();
            let branches = coherent_branches(a, a_prime, phi_prime, &realized)?;
            for (outcome, branch) in Outcome::BOTH.into_iter().zip(branches) {
                let Some(cycle) = branch.cycle else { continue };
                let (a_bar, coherence) = (cycle.a_bar, cycle.coherence);
                let gates: Vec<Gate> = if coherence.norm() < ZERO_COHERENCE {
                    if a_bar < 0.5 {
                        vec![Gate::x(MEDIUM)]
                    } else {
                        vec![]
                    }
                } else {
                    generalized_rotation_angles(a_bar, coherence, WorkBranch::Extract)
                        .gates(MEDIUM)
                        .to_vec()
                };
                if gates.is_empty() {
                    continue;
                }
                // Outcome + reads 0 on the control, so conjugate by X to condition on it.
                let flip = outcome == Outcome::Plus;
                if flip {
                    circuit.push(Gate::x(CONTROL))?;
                }
                circuit.extend(gates.into_iter().map(|g| g.controlled_by(CONTROL)))?;
                if flip {
                    circuit.push(Gate::x(CONTROL))?;
                }
            }
            Ok(EngineCircuit {
                mode,
                circuit,
                stroke_start,
                realized,
            })
        }
    }
}

/// Probability of `outcome` on the read-out control and the normalized medium state it heralds.
pub fn conditional_medium(psi: &[C64], outcome: Outcome) -> Result<(f64, Option<DensityOperator>)> {
    let joint = reduced_matrix(psi, &[MEDIUM, CONTROL])?;
    let bit = match outcome {
        Outcome::Plus => 0,
        Outcome::Minus => 1,
    };
    let mut block = ComplexMatrix::zeros(2);
    for q in 0..2 {
        for qp in 0..2 {
            block.set(q, qp, joint.get(2 * q + bit, 2 * qp + bit));
        }
    }
    let p = block.trace().re;
    if p < crate::engine::DEGENERATE_PROBABILITY {
        return Ok((p, None));
    }
    let state = DensityOperator::try_new(block.scale_real(1.0 / p))?;
    Ok((p, Some(state)))
}

/// Eigenvalues of a Hermitian matrix clipped at zero and renormalized.
pub(crate) fn project_to_state(m: &ComplexMatrix) -> Result<DensityOperator> {
    let e = eig_hermitian(m)?;
    let n = m.dim();
    let positive: Vec<f64> = e.values.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = positive.iter().sum();
    if total <= 0.0 {
        return DensityOperator::try_new(ComplexMatrix::identity(n).scale_real(1.0 / n as f64));
    }
    let mut out = ComplexMatrix::zeros(n);
    for (k, &w) in positive.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let v: Vec<C64> = (0..n).map(|r| e.vectors.get(r, k)).collect();
        out = &out + &ComplexMatrix::projector(&v).scale_real(w / total);
    }
    DensityOperator::try_new(out.hermitian_part())
}
