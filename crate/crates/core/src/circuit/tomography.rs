//! Simulated Pauli tomography with multinomial shot noise.
//!
//! Every repetition draws from its own ChaCha8 stream `(seed, repetition)`; resample `k`
//! of the error analysis uses stream `BOOTSTRAP_STREAM_OFFSET + k`. Serial and parallel
//! runs therefore agree bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use super::build::project_to_state;
use super::{reduced_matrix, statevector_run, Circuit};
use crate::error::{Error, Result};
use crate::qmat::{c, tensor, ComplexMatrix, DensityOperator};

pub const BOOTSTRAP_STREAM_OFFSET: u64 = 1 << 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TomographyOptions {
    pub shots: u64,
    pub repetitions: u32,
    pub seed: u64,
    pub resamples: usize,
}

impl Default for TomographyOptions {
    fn default() -> Self {
        Self {
            shots: 8000,
            repetitions: 10,
            seed: 1,
            resamples: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TomographyEstimate {
    pub qubits: Vec<usize>,
    pub rho_hat: DensityOperator,
    /// `√(var Re + var Im)` of each element over the resamples, row-major.
    pub std_errors: Vec<Vec<f64>>,
    /// Noise-free reduced state of the circuit.
    pub exact: DensityOperator,
    pub shots: u64,
    pub repetitions: u32,
    pub seed: u64,
    pub resamples: usize,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn matrix(self) -> ComplexMatrix {
        match self {
            Pauli::I => ComplexMatrix::identity(2),
            Pauli::X => ComplexMatrix::pauli_x(),
            Pauli::Y => ComplexMatrix::pauli_y(),
            Pauli::Z => ComplexMatrix::pauli_z(),
        }
    }

    /// Unitary mapping the eigenbasis of this Pauli onto the computational basis.
    fn basis_change(self) -> ComplexMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Pauli::X => ComplexMatrix::from_rows([[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]]),
            Pauli::Y => ComplexMatrix::from_rows([[c(h, 0.0), c(0.0, -h)], [c(h, 0.0), c(0.0, h)]]),
            Pauli::I | Pauli::Z => ComplexMatrix::identity(2),
        }
    }
}

/// `digits[k]` of `index` in base `base`, most significant first.
fn digits(mut index: usize, base: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for k in (0..n).rev() {
        out[k] = index % base;
        index /= base;
    }
    out
}

const MEASURED: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];
const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

fn kron(ms: impl Iterator<Item = ComplexMatrix>) -> ComplexMatrix {
    ms.fold(ComplexMatrix::identity(1), |acc, m| tensor(&acc, &m))
}

/// Linear inversion from per-setting outcome frequencies.
struct Inverter {
    n: usize,
    /// For each Pauli string: its matrix, compatible settings and outcome signs.
    terms: Vec<(ComplexMatrix, Vec<usize>, Vec<f64>)>,
}

impl Inverter {
    fn new(n: usize) -> Self {
        let settings: Vec<Vec<Pauli>> = (0..3usize.pow(n as u32))
            .map(|s| digits(s, 3, n).into_iter().map(|d| MEASURED[d]).collect())
            .collect();
        let terms = (0..4usize.pow(n as u32))
            .map(|p| {
                let string: Vec<Pauli> = digits(p, 4, n).into_iter().map(|d| ALL[d]).collect();
                let compatible = settings
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| string.iter().zip(s.iter()).all(|(a, b)| *a == Pauli::I || a == b))
                    .map(|(i, _)| i)
                    .collect();
                let signs = (0..1usize << n)
                    .map(|o| {
                        let bits = digits(o, 2, n);
                        string
                            .iter()
                            .zip(bits)
                            .filter(|(p, _)| **p != Pauli::I)
                            .fold(1.0, |acc, (_, b)| if b == 1 { -acc } else { acc })
                    })
                    .collect();
                (kron(string.iter().map(|p| p.matrix())), compatible, signs)
            })
            .collect();
        Self { n, terms }
    }

    fn invert(&self, freqs: &[Vec<f64>]) -> ComplexMatrix {
        let dim = 1 << self.n;
        let mut rho = ComplexMatrix::zeros(dim);
        for (matrix, compatible, signs) in &self.terms {
            let mean = compatible
                .iter()
                .map(|&s| freqs[s].iter().zip(signs).map(|(f, sg)| f * sg).sum::<f64>())
                .sum::<f64>()
                / compatible.len() as f64;
            rho = &rho + &matrix.scale_real(mean / dim as f64);
        }
        rho
    }
}

/// Outcome probabilities of every measurement setting, in setting order.
fn setting_probabilities(rho: &ComplexMatrix, n: usize) -> Vec<Vec<f64>> {
    (0..3usize.pow(n as u32))
        .map(|s| {
            let u = kron(digits(s, 3, n).into_iter().map(|d| MEASURED[d].basis_change()));
            let rotated = u.conjugate(rho);
            (0..1 << n).map(|o| rotated.get(o, o).re.max(0.0)).collect()
        })
        .collect()
}

fn multinomial(rng: &mut ChaCha8Rng, shots: u64, probs: &[f64]) -> Vec<u64> {
    let mut remaining = shots;
    let mut mass: f64 = probs.iter().sum();
    let mut counts = Vec::with_capacity(probs.len());
    for (k, &p) in probs.iter().enumerate() {
        if k + 1 == probs.len() {
            counts.push(remaining);
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let draw = if remaining == 0 || q == 0.0 {
            0
        } else {
            Binomial::new(remaining, q).expect("probability in [0, 1]").sample(rng)
        };
        counts.push(draw);
        remaining -= draw;
        mass -= p;
    }
    counts
}

fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Counts per repetition, then per setting.
fn sample(rng: &mut ChaCha8Rng, shots: u64, probs: &[Vec<f64>]) -> Vec<Vec<u64>> {
    probs.iter().map(|p| multinomial(rng, shots, p)).collect()
}

fn pooled(counts: &[Vec<Vec<u64>>], shots: u64) -> Vec<Vec<f64>> {
    let total = (shots * counts.len() as u64) as f64;
    let settings = counts[0].len();
    (0..settings)
        .map(|s| {
            let outcomes = counts[0][s].len();
            (0..outcomes)
                .map(|o| counts.iter().map(|rep| rep[s][o]).sum::<u64>() as f64 / total)
                .collect()
        })
        .collect()
}

/// Tomographs the reduced state of `qubits` after running `circuit`.
pub fn sample_and_tomograph(
    circuit: &Circuit,
    qubits: &[usize],
    options: TomographyOptions,
) -> Result<TomographyEstimate> {
    if options.shots == 0 || options.repetitions == 0 {
        return Err(Error::Domain {
            name: "shots x repetitions",
            value: (options.shots * options.repetitions as u64) as f64,
            range: "[1, inf)",
        });
    }
    if qubits.is_empty() {
        return Err(Error::DimensionMismatch("no qubits to tomograph".into()));
    }
    let n = qubits.len();
    let exact = reduced_matrix(&statevector_run(circuit), qubits)?;
    let probs = setting_probabilities(&exact, n);
    let inverter = Inverter::new(n);

    let counts: Vec<Vec<Vec<u64>>> = (0..options.repetitions)
        .into_par_iter()
        .map(|r| sample(&mut stream(options.seed, r as u64), options.shots, &probs))
        .collect();
    let rho_hat = project_to_state(&inverter.invert(&pooled(&counts, options.shots)))?;

    let per_rep: Vec<Vec<Vec<f64>>> = counts
        .iter()
        .map(|rep| {
            rep.iter()
                .map(|cs| cs.iter().map(|&k| k as f64 / options.shots as f64).collect())
                .collect()
        })
        .collect();
    let resampled: Vec<ComplexMatrix> = (0..options.resamples)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(options.seed, BOOTSTRAP_STREAM_OFFSET + k as u64);
            let draws: Vec<Vec<Vec<u64>>> = per_rep.iter().map(|f| sample(&mut rng, options.shots, f)).collect();
            project_to_state(&inverter.invert(&pooled(&draws, options.shots))).map(DensityOperator::into_matrix)
        })
        .collect::<Result<_>>()?;

    let dim = 1 << n;
    let m = resampled.len().max(2) as f64;
    let mut std_errors = vec![vec![0.0; dim]; dim];
    if resampled.len() >= 2 {
        for (i, row) in std_errors.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                let vals: Vec<_> = resampled.iter().map(|r| r.get(i, j)).collect();
                let mean = vals.iter().sum::<crate::qmat::C64>() / resampled.len() as f64;
                let var = vals.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / (m - 1.0);
                *cell = var.sqrt();
            }
        }
    }

    Ok(TomographyEstimate {
        qubits: qubits.to_vec(),
        rho_hat,
        std_errors,
        exact: DensityOperator::try_new(exact)?,
        shots: options.shots,
        repetitions: options.repetitions,
        seed: options.seed,
        resamples: options.resamples,
    })
}
