//! Non-selective measurement channels and the quantum SWITCH built from two of them.
//!
//! Joint operators are medium ⊗ control (index `2q + c`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmat::{c, partial_trace_matrix, tensor, ComplexMatrix, DensityOperator, Subsystem, C64};

/// Strength λ ∈ [0, 1] of a measurement channel.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MeasurementStrength(f64);

impl MeasurementStrength {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && (-1e-12..=1.0 + 1e-12).contains(&value) {
            Ok(Self(value.clamp(0.0, 1.0)))
        } else {
            Err(Error::Domain {
                name: "measurement strength",
                value,
                range: "[0, 1]",
            })
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// The strength `1 − λ`.
    pub fn complement(self) -> Self {
        Self(1.0 - self.0)
    }

    /// `diag(λ, 1−λ)`, the fixed output of the channel.
    pub fn output_state(self) -> DensityOperator {
        DensityOperator::new_unchecked(self.output_matrix())
    }

    pub(crate) fn output_matrix(self) -> ComplexMatrix {
        ComplexMatrix::from_real_diag(&[self.0, 1.0 - self.0])
    }
}

/// Kraus representation of a channel.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausSet {
    operators: Vec<ComplexMatrix>,
}

impl KrausSet {
    pub fn new(operators: Vec<ComplexMatrix>) -> Result<Self> {
        let dim = operators.first().map(ComplexMatrix::dim).unwrap_or(0);
        if operators.is_empty() || operators.iter().any(|k| k.dim() != dim) {
            return Err(Error::DimensionMismatch(
                "Kraus operators must be non-empty and share one dimension".into(),
            ));
        }
        Ok(Self { operators })
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    pub fn dim(&self) -> usize {
        self.operators[0].dim()
    }

    /// `‖Σ K†K − I‖∞`.
    pub fn completeness_residual(&self) -> f64 {
        let n = self.dim();
        let sum = self
            .operators
            .iter()
            .fold(ComplexMatrix::zeros(n), |acc, k| &acc + &(&k.adjoint() * k));
        sum.max_abs_diff(&ComplexMatrix::identity(n))
    }

    /// `Σ K ρ K†`.
    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if rho.dim() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "channel on dimension {} applied to dimension {}",
                self.dim(),
                rho.dim()
            )));
        }
        Ok(self
            .operators
            .iter()
            .fold(ComplexMatrix::zeros(rho.dim()), |acc, k| &acc + &k.conjugate(rho)))
    }
}

/// `{√λ|0⟩⟨0|, √λ|0⟩⟨1|, √(1−λ)|1⟩⟨0|, √(1−λ)|1⟩⟨1|}`.
pub fn measurement_kraus(s: MeasurementStrength) -> KrausSet {
    let (up, down) = (s.0.sqrt(), (1.0 - s.0).sqrt());
    KrausSet {
        operators: vec![
            ComplexMatrix::ket_bra(2, 0, 0).scale_real(up),
            ComplexMatrix::ket_bra(2, 0, 1).scale_real(up),
            ComplexMatrix::ket_bra(2, 1, 0).scale_real(down),
            ComplexMatrix::ket_bra(2, 1, 1).scale_real(down),
        ],
    }
}

/// The channel output `diag(λ, 1−λ)`; the input only has to be a valid qubit state.
pub fn apply_channel(s: MeasurementStrength, rho: &DensityOperator) -> Result<DensityOperator> {
    if rho.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "measurement channel acts on a qubit, got dimension {}",
            rho.dim()
        )));
    }
    Ok(s.output_state())
}

/// Sixteen Kraus operators `K_ij = M_j^{a′}M_i^a ⊗ |0⟩⟨0| + M_i^a M_j^{a′} ⊗ |1⟩⟨1|`.
pub fn switch_kraus(a: MeasurementStrength, a_prime: MeasurementStrength) -> KrausSet {
    let ma = measurement_kraus(a);
    let mb = measurement_kraus(a_prime);
    let p0 = ComplexMatrix::ket_bra(2, 0, 0);
    let p1 = ComplexMatrix::ket_bra(2, 1, 1);
    let mut operators = Vec::with_capacity(16);
    for mi in ma.operators() {
        for mj in mb.operators() {
            let k = &tensor(&(mj * mi), &p0) + &tensor(&(mi * mj), &p1);
            operators.push(k);
        }
    }
    KrausSet { operators }
}

/// SWITCH output by explicit Kraus summation.
pub fn apply_switch(
    a: MeasurementStrength,
    a_prime: MeasurementStrength,
    rho_in: &DensityOperator,
) -> Result<DensityOperator> {
    check_joint(rho_in)?;
    let out = switch_kraus(a, a_prime).apply(rho_in.matrix())?;
    Ok(DensityOperator::new_unchecked(out.hermitian_part()))
}

fn check_joint(rho: &DensityOperator) -> Result<()> {
    if rho.dim() == 4 {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "SWITCH acts on medium and control, got dimension {}",
            rho.dim()
        )))
    }
}

/// Parts of the SWITCH output: `λ ρ_{a′}⊗|0⟩⟨0| + (1−λ) ρ_a⊗|1⟩⟨1| + Λ_X⊗X + Λ_Y⊗Y`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SwitchDecomposition {
    pub a: MeasurementStrength,
    pub a_prime: MeasurementStrength,
    pub lambda_weight: f64,
    pub lambda_x: ComplexMatrix,
    pub lambda_y: ComplexMatrix,
}

impl SwitchDecomposition {
    /// Effective strength `λa′ + (1−λ)a` seen by the medium when the control is ignored.
    pub fn incoherent_strength(&self) -> f64 {
        self.lambda_weight * self.a_prime.value() + (1.0 - self.lambda_weight) * self.a.value()
    }

    /// Reassembles the full medium ⊗ control output.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let first = tensor(
            &self.a_prime.output_matrix().scale_real(self.lambda_weight),
            &ComplexMatrix::ket_bra(2, 0, 0),
        );
        let second = tensor(
            &self.a.output_matrix().scale_real(1.0 - self.lambda_weight),
            &ComplexMatrix::ket_bra(2, 1, 1),
        );
        let x = tensor(&self.lambda_x, &ComplexMatrix::pauli_x());
        let y = tensor(&self.lambda_y, &ComplexMatrix::pauli_y());
        &(&(&first + &second) + &x) + &y
    }
}

/// Medium block `⟨0|_c ϱ |1⟩_c`, equal to `tr_c[ϱ (I ⊗ |1⟩⟨0|)]`.
pub(crate) fn control_coherence_block(rho: &ComplexMatrix) -> ComplexMatrix {
    let mut block = ComplexMatrix::zeros(2);
    for q in 0..2 {
        for qp in 0..2 {
            block.set(q, qp, rho.get(2 * q, 2 * qp + 1));
        }
    }
    block
}

pub fn switch_decomposition(
    a: MeasurementStrength,
    a_prime: MeasurementStrength,
    rho_in: &DensityOperator,
) -> Result<SwitchDecomposition> {
    check_joint(rho_in)?;
    let m = rho_in.matrix();
    let lambda_weight = (m.get(0, 0) + m.get(2, 2)).re.clamp(0.0, 1.0);
    let block = control_coherence_block(m);
    let b = &(&a_prime.output_matrix() * &block) * &a.output_matrix();
    let bd = b.adjoint();
    let lambda_x = (&b + &bd).scale_real(0.5);
    let lambda_y = (&b - &bd).scale(c(0.0, 0.5));
    Ok(SwitchDecomposition {
        a,
        a_prime,
        lambda_weight,
        lambda_x,
        lambda_y,
    })
}

/// `Ξ_{φ′} = 2(cos φ′ Λ_X + sin φ′ Λ_Y)`.
pub fn xi_operator(dec: &SwitchDecomposition, phi_prime: f64) -> ComplexMatrix {
    let (s, co) = phi_prime.sin_cos();
    (&dec.lambda_x.scale_real(2.0 * co) + &dec.lambda_y.scale_real(2.0 * s)).hermitian_part()
}

/// Outcome of measuring the control in `|±⟩ = (|0⟩ ± e^{iφ′}|1⟩)/√2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Outcome::Plus => 1.0,
            Outcome::Minus => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Outcome::Plus => "plus",
            Outcome::Minus => "minus",
        }
    }
}

/// Control basis vector for `outcome`.
pub fn control_basis_vector(outcome: Outcome, phi_prime: f64) -> [C64; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    [c(h, 0.0), C64::from_polar(outcome.sign() * h, phi_prime)]
}

/// Unnormalized medium state `tr_c[ϱ (I ⊗ |±⟩⟨±|)]`; its trace is the outcome probability.
pub fn project_control(joint: &ComplexMatrix, outcome: Outcome, phi_prime: f64) -> Result<ComplexMatrix> {
    let proj = ComplexMatrix::projector(&control_basis_vector(outcome, phi_prime));
    let lifted = joint.matmul(&tensor(&ComplexMatrix::identity(2), &proj))?;
    partial_trace_matrix(&lifted, (2, 2), Subsystem::First)
}
