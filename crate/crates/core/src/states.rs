//! Thermal state of the working medium and the joint medium–control families.
//!
//! Joint operators are ordered medium ⊗ control, so basis index `2q + c`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmat::{c, partial_trace, tensor, ComplexMatrix, DensityOperator, Subsystem, C64, STATE_TOL};

const RANGE_TOL: f64 = 1e-12;

fn check_range(name: &'static str, value: f64, lo: f64, hi: f64, range: &'static str) -> Result<()> {
    if value.is_finite() && value >= lo - RANGE_TOL && value <= hi + RANGE_TOL {
        Ok(())
    } else {
        Err(Error::Domain { name, value, range })
    }
}

/// Inverse temperature of the hot bath in units of 1/ε.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsParams {
    beta_eps: f64,
}

impl GibbsParams {
    pub fn new(beta_eps: f64) -> Result<Self> {
        check_range("beta_eps", beta_eps, 0.0, f64::MAX, "[0, inf)")?;
        Ok(Self {
            beta_eps: beta_eps.max(0.0),
        })
    }

    /// From the temperature `k_B T / ε`.
    pub fn from_temperature(t: f64) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::Domain {
                name: "beta_eps_inv",
                value: t,
                range: "(0, inf)",
            });
        }
        Self::new(1.0 / t)
    }

    pub fn beta_eps(&self) -> f64 {
        self.beta_eps
    }

    pub fn tanh(&self) -> f64 {
        self.beta_eps.tanh()
    }

    pub fn sech(&self) -> f64 {
        1.0 / self.beta_eps.cosh()
    }

    /// Largest correlation amplitude of the entangled family.
    pub fn xi_max(&self) -> f64 {
        0.5 * self.sech()
    }

    /// Ground and excited populations.
    pub fn populations(&self) -> [f64; 2] {
        let t = self.tanh();
        [0.5 * (1.0 + t), 0.5 * (1.0 - t)]
    }
}

pub fn gibbs_state(g: GibbsParams) -> DensityOperator {
    DensityOperator::new_unchecked(ComplexMatrix::from_real_diag(&g.populations()))
}

/// Bloch angles of the pure control state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlAngles {
    pub theta: f64,
    pub phi: f64,
}

impl ControlAngles {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        check_range("theta", theta, 0.0, PI, "[0, pi]")?;
        check_range("phi", phi, 0.0, 2.0 * PI, "[0, 2pi]")?;
        Ok(Self { theta, phi })
    }

    /// Amplitudes of `cos(θ/2)|0⟩ + sin(θ/2)e^{iφ}|1⟩`.
    pub fn ket(&self) -> [C64; 2] {
        amplitudes(self.theta, self.phi)
    }

    /// The orthogonal partner, same formula evaluated at θ − π.
    pub fn ket_orthogonal(&self) -> [C64; 2] {
        amplitudes(self.theta - PI, self.phi)
    }
}

fn amplitudes(theta: f64, phi: f64) -> [C64; 2] {
    let (s, co) = (0.5 * theta).sin_cos();
    [c(co, 0.0), C64::from_polar(s, phi)]
}

pub fn control_pure(angles: ControlAngles) -> DensityOperator {
    DensityOperator::new_unchecked(ComplexMatrix::projector(&angles.ket()))
}

/// `ζ|ψ_θ⟩⟨ψ_θ| + (1−ζ)|ψ_{θ−π}⟩⟨ψ_{θ−π}|`.
pub fn omega_mix(zeta: f64, angles: ControlAngles) -> Result<DensityOperator> {
    check_range("zeta", zeta, 0.0, 1.0, "[0, 1]")?;
    Ok(DensityOperator::new_unchecked(omega_matrix(zeta, angles)))
}

fn omega_matrix(zeta: f64, angles: ControlAngles) -> ComplexMatrix {
    let p = ComplexMatrix::projector(&angles.ket());
    let q = ComplexMatrix::projector(&angles.ket_orthogonal());
    &p.scale_real(zeta) + &q.scale_real(1.0 - zeta)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Uncorrelated,
    Separable,
    Entangled,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Uncorrelated, Family::Separable, Family::Entangled];

    pub fn name(&self) -> &'static str {
        match self {
            Family::Uncorrelated => "uncorrelated",
            Family::Separable => "separable",
            Family::Entangled => "entangled",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uncorrelated" | "unc" => Ok(Family::Uncorrelated),
            "separable" | "sep" => Ok(Family::Separable),
            "entangled" | "qe" | "ent" => Ok(Family::Entangled),
            other => Err(format!(
                "unknown family '{other}' (expected uncorrelated, separable or entangled)"
            )),
        }
    }
}

/// Family-specific correlation parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Correlations {
    Uncorrelated {
        zeta: f64,
    },
    Separable {
        zeta0: f64,
        zeta1: f64,
    },
    Entangled {
        zeta0: f64,
        zeta1: f64,
        xi: f64,
        varphi: f64,
    },
}

/// Everything needed to build the joint initial state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialStateSpec {
    pub angles: ControlAngles,
    pub correlations: Correlations,
    pub gibbs: GibbsParams,
}

impl InitialStateSpec {
    pub fn uncorrelated(angles: ControlAngles, zeta: f64, gibbs: GibbsParams) -> Result<Self> {
        let spec = Self {
            angles,
            correlations: Correlations::Uncorrelated { zeta },
            gibbs,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn separable(angles: ControlAngles, zeta0: f64, zeta1: f64, gibbs: GibbsParams) -> Result<Self> {
        let spec = Self {
            angles,
            correlations: Correlations::Separable { zeta0, zeta1 },
            gibbs,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn entangled(
        angles: ControlAngles,
        zeta0: f64,
        zeta1: f64,
        xi: f64,
        varphi: f64,
        gibbs: GibbsParams,
    ) -> Result<Self> {
        let spec = Self {
            angles,
            correlations: Correlations::Entangled {
                zeta0,
                zeta1,
                xi,
                varphi,
            },
            gibbs,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn family(&self) -> Family {
        match self.correlations {
            Correlations::Uncorrelated { .. } => Family::Uncorrelated,
            Correlations::Separable { .. } => Family::Separable,
            Correlations::Entangled { .. } => Family::Entangled,
        }
    }

    /// Checks ranges and the ordering convention `ζ₁ ≤ ζ₀`, `ζ₀ ≥ ½`.
    pub fn validate(&self) -> Result<()> {
        ControlAngles::new(self.angles.theta, self.angles.phi)?;
        GibbsParams::new(self.gibbs.beta_eps)?;
        match self.correlations {
            Correlations::Uncorrelated { zeta } => check_range("zeta", zeta, 0.0, 1.0, "[0, 1]"),
            Correlations::Separable { zeta0, zeta1 } => check_zetas(zeta0, zeta1),
            Correlations::Entangled {
                zeta0,
                zeta1,
                xi,
                varphi,
            } => {
                check_zetas(zeta0, zeta1)?;
                check_range("xi", xi, 0.0, self.gibbs.xi_max(), "[0, sech(beta_eps)/2]")?;
                check_range("varphi", varphi, 0.0, 2.0 * PI, "[0, 2pi]")
            }
        }
    }

    /// Weights `(ζ₀, ζ₁)` of the control state conditioned on the medium level.
    pub fn zetas(&self) -> (f64, f64) {
        match self.correlations {
            Correlations::Uncorrelated { zeta } => (zeta, zeta),
            Correlations::Separable { zeta0, zeta1 } | Correlations::Entangled { zeta0, zeta1, .. } => (zeta0, zeta1),
        }
    }

    /// Correlation amplitude ξ (zero outside the entangled family).
    pub fn xi(&self) -> f64 {
        match self.correlations {
            Correlations::Entangled { xi, .. } => xi,
            _ => 0.0,
        }
    }

    /// Effective control purity `tr[𝔷ρ⁽⁰⁾]`; plain ζ when uncorrelated.
    pub fn zeta_weight(&self) -> f64 {
        let (z0, z1) = self.zetas();
        let [p0, p1] = self.gibbs.populations();
        match self.correlations {
            Correlations::Uncorrelated { zeta } => zeta,
            _ => z0 * p0 + z1 * p1,
        }
    }

    pub fn with_angles(mut self, angles: ControlAngles) -> Self {
        self.angles = angles;
        self
    }
}

fn check_zetas(zeta0: f64, zeta1: f64) -> Result<()> {
    check_range("zeta0", zeta0, 0.5, 1.0, "[1/2, 1]")?;
    check_range("zeta1", zeta1, 0.0, zeta0, "[0, zeta0]")
}

/// The joint medium ⊗ control state described by `spec`.
pub fn initial_state(spec: &InitialStateSpec) -> Result<DensityOperator> {
    spec.validate()?;
    let rho0 = gibbs_state(spec.gibbs);
    let m = match spec.correlations {
        Correlations::Uncorrelated { zeta } => tensor(rho0.matrix(), &omega_matrix(zeta, spec.angles)),
        Correlations::Separable { zeta0, zeta1 } => block_diagonal(spec, zeta0, zeta1),
        Correlations::Entangled {
            zeta0,
            zeta1,
            xi,
            varphi,
        } => {
            let diag = block_diagonal(spec, zeta0, zeta1);
            let coupling = tensor(
                &ComplexMatrix::ket_bra(2, 0, 1),
                &ComplexMatrix::outer(&spec.angles.ket(), &spec.angles.ket_orthogonal()),
            )
            .scale(C64::from_polar(xi, -varphi));
            &(&diag + &coupling) + &coupling.adjoint()
        }
    };
    DensityOperator::try_new(m)
}

fn block_diagonal(spec: &InitialStateSpec, zeta0: f64, zeta1: f64) -> ComplexMatrix {
    let [p0, p1] = spec.gibbs.populations();
    let omega0 = omega_matrix(zeta0, spec.angles);
    let omega1 = omega_matrix(zeta1, spec.angles);
    &tensor(&ComplexMatrix::ket_bra(2, 0, 0).scale_real(p0), &omega0)
        + &tensor(&ComplexMatrix::ket_bra(2, 1, 1).scale_real(p1), &omega1)
}

/// True when the medium marginal of `rho` is the Gibbs state of `g`.
pub fn check_local_thermality(rho: &DensityOperator, g: GibbsParams) -> bool {
    match partial_trace(rho, Subsystem::First) {
        Ok(local) => local.matrix().max_abs_diff(gibbs_state(g).matrix()) < STATE_TOL,
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::{eig_hermitian, expectation};

    fn gibbs(be: f64) -> GibbsParams {
        GibbsParams::new(be).unwrap()
    }

    #[test]
    fn gibbs_limits() {
        let g0 = gibbs_state(gibbs(0.0));
        assert!(g0.matrix().max_abs_diff(&ComplexMatrix::identity(2).scale_real(0.5)) < 1e-16);
        let cold = gibbs_state(gibbs(50.0));
        assert!(cold.matrix().max_abs_diff(&ComplexMatrix::ket_bra(2, 0, 0)) < 1e-15);
    }

    #[test]
    fn gibbs_matches_exponential_oracle() {
        // exp(−βH)/Z with H = −Z, evaluated through the spectral decomposition.
        let g = GibbsParams::from_temperature(1.65).unwrap();
        let h = crate::qmat::hamiltonian();
        let e = eig_hermitian(&h).unwrap();
        let weights: Vec<f64> = e.values.iter().map(|v| (-g.beta_eps() * v).exp()).collect();
        let z: f64 = weights.iter().sum();
        let mut oracle = ComplexMatrix::zeros(2);
        for (k, w) in weights.iter().enumerate() {
            let col = [e.vectors.get(0, k), e.vectors.get(1, k)];
            oracle = &oracle + &ComplexMatrix::projector(&col).scale_real(w / z);
        }
        let rho = gibbs_state(g);
        assert!(rho.matrix().max_abs_diff(&oracle) < 1e-14);
        assert!((rho.get(0, 0).re - 0.77059).abs() < 1e-4);
        assert!((rho.get(1, 1).re - 0.22941).abs() < 1e-4);
    }

    #[test]
    fn pure_control_examples() {
        for phi in [0.0, 1.0, 5.0] {
            let a = control_pure(ControlAngles::new(0.0, phi).unwrap());
            assert!(a.matrix().max_abs_diff(&ComplexMatrix::ket_bra(2, 0, 0)) < 1e-15);
            let b = control_pure(ControlAngles::new(PI, phi).unwrap());
            assert!(b.matrix().max_abs_diff(&ComplexMatrix::ket_bra(2, 1, 1)) < 1e-15);
        }
        let plus = control_pure(ControlAngles::new(PI / 2.0, 0.0).unwrap());
        let expected = ComplexMatrix::from_rows([[c(0.5, 0.0), c(0.5, 0.0)], [c(0.5, 0.0), c(0.5, 0.0)]]);
        assert!(plus.matrix().max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn omega_examples() {
        let angles = ControlAngles::new(1.1, 2.3).unwrap();
        let pure = omega_mix(1.0, angles).unwrap();
        assert!(pure.matrix().max_abs_diff(control_pure(angles).matrix()) < 1e-15);
        let half = omega_mix(0.5, angles).unwrap();
        assert!(half.matrix().max_abs_diff(&ComplexMatrix::identity(2).scale_real(0.5)) < 1e-15);
        let w = omega_mix(0.8, ControlAngles::new(PI / 2.0, 0.0).unwrap()).unwrap();
        let bloch = [
            expectation(&ComplexMatrix::pauli_x(), &w).unwrap(),
            expectation(&ComplexMatrix::pauli_y(), &w).unwrap(),
            expectation(&ComplexMatrix::pauli_z(), &w).unwrap(),
        ];
        assert!((bloch[0] - 0.6).abs() < 1e-15);
        assert!(bloch[1].abs() < 1e-15 && bloch[2].abs() < 1e-15);
        assert!(omega_mix(1.5, angles).is_err());
    }

    #[test]
    fn uncorrelated_product() {
        let spec = InitialStateSpec::uncorrelated(ControlAngles::new(0.0, 0.0).unwrap(), 1.0, gibbs(1.0)).unwrap();
        let rho = initial_state(&spec).unwrap();
        let expected = tensor(gibbs_state(gibbs(1.0)).matrix(), &ComplexMatrix::ket_bra(2, 0, 0));
        assert!(rho.matrix().max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn maximal_entanglement_is_pure() {
        let g = gibbs(1.0);
        let angles = ControlAngles::new(1.0, 0.7).unwrap();
        let spec = InitialStateSpec::entangled(angles, 1.0, 0.0, g.xi_max(), 0.0, g).unwrap();
        let rho = initial_state(&spec).unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-12);
        let local = partial_trace(&rho, Subsystem::First).unwrap();
        assert!(local.matrix().max_abs_diff(gibbs_state(g).matrix()) < 1e-12);
        assert!(check_local_thermality(&rho, g));
    }

    #[test]
    fn separable_with_equal_weights_is_uncorrelated() {
        let g = gibbs(0.7);
        let angles = ControlAngles::new(0.9, 1.3).unwrap();
        let sep = initial_state(&InitialStateSpec::separable(angles, 0.8, 0.8, g).unwrap()).unwrap();
        let unc = initial_state(&InitialStateSpec::uncorrelated(angles, 0.8, g).unwrap()).unwrap();
        assert!(sep.matrix().max_abs_diff(unc.matrix()) < 1e-15);
    }

    #[test]
    fn entangled_without_xi_is_separable_bitwise() {
        let g = gibbs(0.4);
        let angles = ControlAngles::new(2.0, 4.0).unwrap();
        let sep = initial_state(&InitialStateSpec::separable(angles, 0.9, 0.2, g).unwrap()).unwrap();
        let ent = initial_state(&InitialStateSpec::entangled(angles, 0.9, 0.2, 0.0, 1.0, g).unwrap()).unwrap();
        assert_eq!(sep, ent);
    }

    #[test]
    fn thermality_checks() {
        let g1 = gibbs(1.0);
        let omega = omega_mix(0.7, ControlAngles::new(0.4, 0.2).unwrap()).unwrap();
        let rho = crate::qmat::tensor_states(&gibbs_state(g1), &omega);
        assert!(check_local_thermality(&rho, g1));
        assert!(!check_local_thermality(&rho, gibbs(2.0)));
        let mixed = DensityOperator::from_diag(&[0.25; 4]).unwrap();
        assert!(check_local_thermality(&mixed, gibbs(0.0)));
    }

    #[test]
    fn xi_beyond_bound_is_rejected() {
        let g = gibbs(1.0);
        let angles = ControlAngles::new(1.0, 0.0).unwrap();
        assert!(InitialStateSpec::entangled(angles, 1.0, 0.0, 1.01 * g.xi_max(), 0.0, g).is_err());
    }

    #[test]
    fn xi_with_mixed_weights_fails_positivity() {
        // ξ² ≤ p₀p₁ζ₀(1−ζ₁) is the exact admissible region.
        let g = gibbs(1.0);
        let angles = ControlAngles::new(1.0, 0.0).unwrap();
        let spec = InitialStateSpec::entangled(angles, 1.0, 0.5, g.xi_max(), 0.0, g).unwrap();
        assert!(matches!(initial_state(&spec), Err(Error::NotPositive(_))));
        let edge = g.xi_max() * (0.5f64).sqrt();
        let spec = InitialStateSpec::entangled(angles, 1.0, 0.5, edge, 0.0, g).unwrap();
        assert!(initial_state(&spec).is_ok());
    }

    #[test]
    fn convention_is_enforced() {
        let g = gibbs(1.0);
        let angles = ControlAngles::new(1.0, 0.0).unwrap();
        assert!(InitialStateSpec::separable(angles, 0.4, 0.1, g).is_err());
        assert!(InitialStateSpec::separable(angles, 0.6, 0.7, g).is_err());
        assert!(ControlAngles::new(4.0, 0.0).is_err());
    }
}
