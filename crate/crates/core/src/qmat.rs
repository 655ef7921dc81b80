//! Dense complex matrices for qubit-sized problems.
//!
//! Everything here is small (2×2, 4×4, at most 128×128 for reduced states of a
//! seven-qubit register), so matrices are plain row-major vectors and products are
//! the textbook triple loop. Eigendecomposition is delegated to `nalgebra`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance used when validating density operators.
pub const STATE_TOL: f64 = 1e-10;
/// Eigenvalues below this are treated as zero inside entropies.
pub const ENTROPY_CUTOFF: f64 = 1e-14;

pub const fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Square complex matrix stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    dim: usize,
    entries: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.entries[i * dim + i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_vec(dim: usize, entries: Vec<C64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {dim}x{dim} matrix",
                entries.len()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain {
                name: "matrix entry",
                value: f64::NAN,
                range: "finite numbers",
            });
        }
        Ok(Self { dim, entries })
    }

    /// Builds a matrix from rows; panics if the rows are ragged.
    pub fn from_rows<const N: usize>(rows: [[C64; N]; N]) -> Self {
        Self {
            dim: N,
            entries: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.entries[i * diag.len() + i] = C64::new(d, 0.0);
        }
        m
    }

    /// `|i⟩⟨j|` in dimension `dim`.
    pub fn ket_bra(dim: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(dim);
        m.entries[i * dim + j] = C64::new(1.0, 0.0);
        m
    }

    /// `|u⟩⟨v|`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        assert_eq!(u.len(), v.len(), "outer product of vectors of unequal length");
        let dim = u.len();
        let mut m = Self::zeros(dim);
        for (i, ui) in u.iter().enumerate() {
            for (j, vj) in v.iter().enumerate() {
                m.entries[i * dim + j] = ui * vj.conj();
            }
        }
        m
    }

    pub fn projector(v: &[C64]) -> Self {
        Self::outer(v, v)
    }

    pub fn pauli_x() -> Self {
        let (o, l) = (c(0.0, 0.0), c(1.0, 0.0));
        Self::from_rows([[o, l], [l, o]])
    }

    pub fn pauli_y() -> Self {
        let o = c(0.0, 0.0);
        Self::from_rows([[o, c(0.0, -1.0)], [c(0.0, 1.0), o]])
    }

    pub fn pauli_z() -> Self {
        Self::from_real_diag(&[1.0, -1.0])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.entries[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: C64) {
        self.entries[i * self.dim + j] = value;
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.entries[j * n + i] = self.entries[i * n + j].conj();
            }
        }
        m
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(C64::new(factor, 0.0))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.dim, self.dim, other.dim, other.dim
            )));
        }
        let n = self.dim;
        let mut m = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.entries[i * n + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    m.entries[i * n + j] += a * other.entries[k * n + j];
                }
            }
        }
        Ok(m)
    }

    /// `self · other · self†`.
    pub fn conjugate(&self, other: &Self) -> Self {
        &(self * other) * &self.adjoint()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "comparing matrices of unequal size");
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest modulus of `m − m†`.
    pub fn hermitian_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_defect() <= tol
    }

    /// `(m + m†)/2`.
    pub fn hermitian_part(&self) -> Self {
        (self + &self.adjoint()).scale_real(0.5)
    }
}

impl fmt::Display for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = self.get(i, j);
                    format!("{:+.6}{:+.6}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "adding matrices of unequal size");
        ComplexMatrix {
            dim: self.dim,
            entries: self.entries.iter().zip(&rhs.entries).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "subtracting matrices of unequal size");
        ComplexMatrix {
            dim: self.dim,
            entries: self.entries.iter().zip(&rhs.entries).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("multiplying matrices of unequal size")
    }
}

/// Kronecker product `a ⊗ b`.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (na, nb) = (a.dim, b.dim);
    let n = na * nb;
    let mut m = ComplexMatrix::zeros(n);
    for i in 0..na {
        for j in 0..na {
            let aij = a.get(i, j);
            if aij == C64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..nb {
                for l in 0..nb {
                    m.entries[(i * nb + k) * n + (j * nb + l)] = aij * b.get(k, l);
                }
            }
        }
    }
    m
}

/// Which factor of a bipartite `d₁ ⊗ d₂` operator to keep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Second,
}

/// Partial trace of a `d₁d₂`-dimensional operator.
pub fn partial_trace_matrix(m: &ComplexMatrix, dims: (usize, usize), keep: Subsystem) -> Result<ComplexMatrix> {
    let (d1, d2) = dims;
    if m.dim != d1 * d2 {
        return Err(Error::DimensionMismatch(format!(
            "operator of dimension {} is not {d1}x{d2}",
            m.dim
        )));
    }
    let out = match keep {
        Subsystem::First => {
            let mut r = ComplexMatrix::zeros(d1);
            for i in 0..d1 {
                for j in 0..d1 {
                    let s: C64 = (0..d2).map(|k| m.get(i * d2 + k, j * d2 + k)).sum();
                    r.set(i, j, s);
                }
            }
            r
        }
        Subsystem::Second => {
            let mut r = ComplexMatrix::zeros(d2);
            for k in 0..d2 {
                for l in 0..d2 {
                    let s: C64 = (0..d1).map(|i| m.get(i * d2 + k, i * d2 + l)).sum();
                    r.set(k, l, s);
                }
            }
            r
        }
    };
    Ok(out)
}

/// Reduced state of one qubit of a two-qubit density operator.
pub fn partial_trace(rho: &DensityOperator, keep: Subsystem) -> Result<DensityOperator> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch(format!(
            "partial trace expects a two-qubit state, got dimension {}",
            rho.dim()
        )));
    }
    let m = partial_trace_matrix(rho.matrix(), (2, 2), keep)?;
    Ok(DensityOperator::new_unchecked(m))
}

/// Spectral decomposition of a Hermitian matrix, eigenvalues in descending order.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    /// Eigenvectors as columns, matching `values`.
    pub vectors: ComplexMatrix,
}

pub fn eig_hermitian(m: &ComplexMatrix) -> Result<Eigen> {
    let defect = m.hermitian_defect();
    if defect > 1e-8 {
        return Err(Error::NotHermitian(defect));
    }
    let n = m.dim;
    let sym = m.hermitian_part();
    let dm = DMatrix::from_row_slice(n, n, &sym.entries);
    let eig = SymmetricEigen::new(dm);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = ComplexMatrix::zeros(n);
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vectors.set(row, col, eig.eigenvectors[(row, src)]);
        }
    }
    Ok(Eigen { values, vectors })
}

/// Unit-trace, Hermitian, positive semidefinite matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DensityOperator(ComplexMatrix);

impl DensityOperator {
    /// Validates and symmetrizes `m`.
    pub fn try_new(m: ComplexMatrix) -> Result<Self> {
        let defect = m.hermitian_defect();
        if defect > STATE_TOL {
            return Err(Error::NotHermitian(defect));
        }
        let m = m.hermitian_part();
        let tr = m.trace().re;
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(Error::NotNormalized(tr));
        }
        let min = eig_hermitian(&m)?.values.last().copied().unwrap_or(0.0);
        if min < -STATE_TOL {
            return Err(Error::NotPositive(min));
        }
        Ok(Self(m))
    }

    /// Skips validation; callers guarantee the invariants by construction.
    pub(crate) fn new_unchecked(m: ComplexMatrix) -> Self {
        Self(m)
    }

    pub fn from_diag(p: &[f64]) -> Result<Self> {
        Self::try_new(ComplexMatrix::from_real_diag(p))
    }

    pub fn pure(v: &[C64]) -> Result<Self> {
        Self::try_new(ComplexMatrix::projector(v))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0.get(i, j)
    }

    pub fn purity(&self) -> f64 {
        (&self.0 * &self.0).trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eig_hermitian(&self.0)
            .map(|e| e.values)
            .expect("density operators are Hermitian")
    }
}

pub fn tensor_states(a: &DensityOperator, b: &DensityOperator) -> DensityOperator {
    DensityOperator::new_unchecked(tensor(a.matrix(), b.matrix()))
}

fn xlogx(p: f64) -> f64 {
    if p < ENTROPY_CUTOFF {
        0.0
    } else {
        p * p.ln()
    }
}

/// `−tr ρ ln ρ` in nats.
pub fn von_neumann_entropy(rho: &DensityOperator) -> f64 {
    -rho.eigenvalues()
        .into_iter()
        .map(|p| xlogx(p.clamp(0.0, 1.0)))
        .sum::<f64>()
}

/// `−x ln x − (1−x) ln(1−x)` in nats.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(-1e-12..=1.0 + 1e-12).contains(&x) || !x.is_finite() {
        return Err(Error::Domain {
            name: "x",
            value: x,
            range: "[0, 1]",
        });
    }
    let x = x.clamp(0.0, 1.0);
    Ok(-xlogx(x) - xlogx(1.0 - x))
}

/// `Re tr[obs ρ]`.
pub fn expectation(obs: &ComplexMatrix, rho: &DensityOperator) -> Result<f64> {
    let product = obs.matmul(rho.matrix())?;
    let tr = product.trace();
    debug_assert!(
        tr.im.abs() < 1e-10 * (1.0 + obs.max_abs()),
        "expectation of a non-Hermitian observable"
    );
    Ok(tr.re)
}

/// `½ ‖a − b‖₁`.
pub fn trace_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch(format!(
            "trace distance between dimensions {} and {}",
            a.dim, b.dim
        )));
    }
    let e = eig_hermitian(&(a - b))?;
    Ok(0.5 * e.values.iter().map(|v| v.abs()).sum::<f64>())
}

/// Energy operator `H = −εZ` with ε = 1.
pub fn hamiltonian() -> ComplexMatrix {
    ComplexMatrix::pauli_z().scale_real(-1.0)
}
