//! Statevector simulation of the engine circuits.
//!
//! Qubit `k` is bit `k` of the basis index. Circuits act on at most [`MAX_WIDTH`] qubits
//! and always start from `|0…0⟩`.

mod build;
mod tomography;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmat::{c, ComplexMatrix, DensityOperator, C64};

pub use build::{
    caption_angles, conditional_medium, engine_circuit, generalized_rotation_angles, prep_circuit, CaptionAngles,
    EngineCircuit, PrepMode, RotationAngles, CONTROL, MEDIUM, METER_A, METER_B, PURIFIER, WIDTH,
};
pub use tomography::{sample_and_tomograph, TomographyEstimate, TomographyOptions, BOOTSTRAP_STREAM_OFFSET};

pub const MAX_WIDTH: usize = 7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    RotY,
    RotZ,
    Hadamard,
    NotGate,
    CNot,
    CSwap,
    ControlledRotY,
}

impl GateKind {
    fn token(self) -> &'static str {
        match self {
            GateKind::RotY => "RY",
            GateKind::RotZ => "RZ",
            GateKind::Hadamard => "H",
            GateKind::NotGate => "X",
            GateKind::CNot => "CX",
            GateKind::CSwap => "CSWAP",
            GateKind::ControlledRotY => "CRY",
        }
    }

    fn has_angle(self) -> bool {
        matches!(self, GateKind::RotY | GateKind::RotZ | GateKind::ControlledRotY)
    }

    fn target_count(self) -> usize {
        if self == GateKind::CSwap {
            2
        } else {
            1
        }
    }

    fn needs_control(self) -> bool {
        matches!(self, GateKind::CNot | GateKind::ControlledRotY)
    }
}

impl FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "RY" => GateKind::RotY,
            "RZ" => GateKind::RotZ,
            "H" => GateKind::Hadamard,
            "X" => GateKind::NotGate,
            "CX" => GateKind::CNot,
            "CSWAP" => GateKind::CSwap,
            "CRY" => GateKind::ControlledRotY,
            other => return Err(Error::InvalidGate(format!("unknown gate kind {other:?}"))),
        })
    }
}

/// A gate with any number of extra controls (all must read 1 for it to act).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub angle: f64,
    pub targets: Vec<usize>,
    pub controls: Vec<usize>,
}

impl Gate {
    pub fn new(kind: GateKind, angle: f64, targets: Vec<usize>, controls: Vec<usize>) -> Result<Self> {
        let gate = Self {
            kind,
            angle: if kind.has_angle() { angle } else { 0.0 },
            targets,
            controls,
        };
        gate.check_shape()?;
        Ok(gate)
    }

    pub fn ry(target: usize, angle: f64) -> Self {
        Self::raw(GateKind::RotY, angle, vec![target], vec![])
    }

    pub fn rz(target: usize, angle: f64) -> Self {
        Self::raw(GateKind::RotZ, angle, vec![target], vec![])
    }

    pub fn h(target: usize) -> Self {
        Self::raw(GateKind::Hadamard, 0.0, vec![target], vec![])
    }

    pub fn x(target: usize) -> Self {
        Self::raw(GateKind::NotGate, 0.0, vec![target], vec![])
    }

    pub fn cx(control: usize, target: usize) -> Self {
        Self::raw(GateKind::CNot, 0.0, vec![target], vec![control])
    }

    pub fn cry(control: usize, target: usize, angle: f64) -> Self {
        Self::raw(GateKind::ControlledRotY, angle, vec![target], vec![control])
    }

    pub fn swap(q1: usize, q2: usize) -> Self {
        Self::raw(GateKind::CSwap, 0.0, vec![q1, q2], vec![])
    }

    pub fn cswap(control: usize, q1: usize, q2: usize) -> Self {
        Self::raw(GateKind::CSwap, 0.0, vec![q1, q2], vec![control])
    }

    /// Adds one more control qubit.
    pub fn controlled_by(mut self, control: usize) -> Self {
        self.controls.push(control);
        self
    }

    fn raw(kind: GateKind, angle: f64, targets: Vec<usize>, controls: Vec<usize>) -> Self {
        Self {
            kind,
            angle,
            targets,
            controls,
        }
    }

    fn check_shape(&self) -> Result<()> {
        if self.targets.len() != self.kind.target_count() {
            return Err(Error::InvalidGate(format!(
                "{} takes {} target(s), got {}",
                self.kind.token(),
                self.kind.target_count(),
                self.targets.len()
            )));
        }
        if self.kind.needs_control() && self.controls.is_empty() {
            return Err(Error::InvalidGate(format!("{} needs a control", self.kind.token())));
        }
        if !self.angle.is_finite() {
            return Err(Error::InvalidGate("angle is not finite".into()));
        }
        let mut all: Vec<usize> = self.targets.iter().chain(&self.controls).copied().collect();
        all.sort_unstable();
        if all.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidGate(format!("repeated qubit in {self}")));
        }
        Ok(())
    }

    fn check(&self, width: usize) -> Result<()> {
        self.check_shape()?;
        if let Some(&q) = self.targets.iter().chain(&self.controls).find(|&&q| q >= width) {
            return Err(Error::InvalidGate(format!("qubit {q} outside width {width} in {self}")));
        }
        Ok(())
    }

    /// Matrix on the target qubit(s), ignoring controls. Two-qubit order is `(t0, t1)`.
    pub fn local_matrix(&self) -> ComplexMatrix {
        let (s, co) = (0.5 * self.angle).sin_cos();
        let z = c(0.0, 0.0);
        let one = c(1.0, 0.0);
        match self.kind {
            GateKind::RotY | GateKind::ControlledRotY => {
                ComplexMatrix::from_rows([[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]])
            }
            GateKind::RotZ => ComplexMatrix::from_rows([
                [C64::from_polar(1.0, -0.5 * self.angle), z],
                [z, C64::from_polar(1.0, 0.5 * self.angle)],
            ]),
            GateKind::Hadamard => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                ComplexMatrix::from_rows([[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]])
            }
            GateKind::NotGate | GateKind::CNot => ComplexMatrix::pauli_x(),
            GateKind::CSwap => {
                ComplexMatrix::from_rows([[one, z, z, z], [z, z, one, z], [z, one, z, z], [z, z, z, one]])
            }
        }
    }

    fn apply(&self, psi: &mut [C64]) {
        let control_mask: usize = self.controls.iter().map(|&q| 1 << q).sum();
        if self.kind == GateKind::CSwap {
            let (b0, b1) = (1 << self.targets[0], 1 << self.targets[1]);
            for i in 0..psi.len() {
                if i & control_mask == control_mask && i & b0 != 0 && i & b1 == 0 {
                    psi.swap(i, (i & !b0) | b1);
                }
            }
            return;
        }
        let u = self.local_matrix();
        let (u00, u01, u10, u11) = (u.get(0, 0), u.get(0, 1), u.get(1, 0), u.get(1, 1));
        let bit = 1 << self.targets[0];
        for i in 0..psi.len() {
            if i & bit == 0 && i & control_mask == control_mask {
                let (x0, x1) = (psi[i], psi[i | bit]);
                psi[i] = u00 * x0 + u01 * x1;
                psi[i | bit] = u10 * x0 + u11 * x1;
            }
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind.token())?;
        if self.kind.has_angle() {
            write!(f, " {}", self.angle)?;
        }
        for t in &self.targets {
            write!(f, " {t}")?;
        }
        if !self.controls.is_empty() {
            write!(f, " |")?;
            for q in &self.controls {
                write!(f, " {q}")?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    width: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(width: usize) -> Result<Self> {
        if width == 0 || width > MAX_WIDTH {
            return Err(Error::InvalidGate(format!("width {width} outside 1..={MAX_WIDTH}")));
        }
        Ok(Self {
            width,
            gates: Vec::new(),
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.check(self.width)?;
        self.gates.push(gate);
        Ok(())
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) -> Result<()> {
        for g in gates {
            self.push(g)?;
        }
        Ok(())
    }

    /// The first `n` gates.
    pub fn prefix(&self, n: usize) -> Self {
        Self {
            width: self.width,
            gates: self.gates[..n.min(self.gates.len())].to_vec(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("qubits {}\n", self.width);
        for g in &self.gates {
            out.push_str(&g.to_string());
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut circuit: Option<Circuit> = None;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse { line: n + 1, message };
            let mut words = line.split_whitespace();
            let head = words.next().expect("line is not empty");
            let Some(c) = circuit.as_mut() else {
                if !head.eq_ignore_ascii_case("qubits") {
                    return Err(err("expected `qubits N` header".into()));
                }
                let width = words
                    .next()
                    .and_then(|w| w.parse().ok())
                    .ok_or_else(|| err("missing qubit count".into()))?;
                if words.next().is_some() {
                    return Err(err("trailing tokens after qubit count".into()));
                }
                circuit = Some(Circuit::new(width).map_err(|e| err(e.to_string()))?);
                continue;
            };
            let kind: GateKind = head.parse().map_err(|e: Error| err(e.to_string()))?;
            let angle = if kind.has_angle() {
                words
                    .next()
                    .and_then(|w| w.parse::<f64>().ok())
                    .ok_or_else(|| err("missing or malformed angle".into()))?
            } else {
                0.0
            };
            let rest: Vec<&str> = words.collect();
            let split = rest.iter().position(|&w| w == "|").unwrap_or(rest.len());
            let indices = |ws: &[&str]| -> Result<Vec<usize>> {
                ws.iter()
                    .map(|w| w.parse().map_err(|_| err(format!("bad qubit index {w:?}"))))
                    .collect()
            };
            let targets = indices(&rest[..split])?;
            let controls = indices(rest.get(split + 1..).unwrap_or(&[]))?;
            let gate = Gate::new(kind, angle, targets, controls).map_err(|e| err(e.to_string()))?;
            c.push(gate).map_err(|e| err(e.to_string()))?;
        }
        circuit.ok_or(Error::Parse {
            line: 0,
            message: "empty circuit text".into(),
        })
    }
}

/// Runs `c` on `|0…0⟩`.
pub fn statevector_run(c: &Circuit) -> Vec<C64> {
    let mut psi = vec![C64::new(0.0, 0.0); 1 << c.width];
    psi[0] = C64::new(1.0, 0.0);
    for g in &c.gates {
        g.apply(&mut psi);
    }
    psi
}

/// Reduced state on `keep`, with `keep[0]` the most significant tensor factor.
pub fn reduced_density(psi: &[C64], keep: &[usize]) -> Result<DensityOperator> {
    Ok(DensityOperator::new_unchecked(reduced_matrix(psi, keep)?))
}

pub(crate) fn reduced_matrix(psi: &[C64], keep: &[usize]) -> Result<ComplexMatrix> {
    let n = psi.len().trailing_zeros() as usize;
    if !psi.len().is_power_of_two() || keep.iter().any(|&q| q >= n) {
        return Err(Error::DimensionMismatch(format!(
            "cannot keep qubits {keep:?} of a {}-amplitude state",
            psi.len()
        )));
    }
    let mut sorted = keep.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != keep.len() {
        return Err(Error::DimensionMismatch(format!("repeated qubit in {keep:?}")));
    }
    let k = keep.len();
    let keep_mask: usize = keep.iter().map(|&q| 1 << q).sum();
    let local = |i: usize| {
        keep.iter()
            .enumerate()
            .fold(0, |acc, (m, &q)| acc | (((i >> q) & 1) << (k - 1 - m)))
    };
    let mut rho = ComplexMatrix::zeros(1 << k);
    // Group amplitudes by environment configuration.
    let mut by_env: std::collections::BTreeMap<usize, Vec<(usize, C64)>> = Default::default();
    for (i, &amp) in psi.iter().enumerate() {
        if amp.norm_sqr() > 0.0 {
            by_env.entry(i & !keep_mask).or_default().push((local(i), amp));
        }
    }
    for group in by_env.values() {
        for &(r, x) in group {
            for &(s, y) in group {
                rho.set(r, s, rho.get(r, s) + x * y.conj());
            }
        }
    }
    Ok(rho.hermitian_part())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn run(width: usize, gates: Vec<Gate>) -> Vec<C64> {
        let mut c = Circuit::new(width).unwrap();
        c.extend(gates).unwrap();
        statevector_run(&c)
    }

    #[test]
    fn trivial_runs() {
        assert_eq!(run(1, vec![]), vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let h = run(1, vec![Gate::h(0)]);
        assert!((h[0].re - FRAC_1_SQRT_2).abs() < 1e-15 && (h[1].re - FRAC_1_SQRT_2).abs() < 1e-15);
        let y = run(1, vec![Gate::ry(0, PI)]);
        assert!(y[0].norm() < 1e-15 && (y[1].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gates_are_unitary() {
        let gates = [
            Gate::ry(0, 0.7),
            Gate::rz(0, -1.3),
            Gate::h(0),
            Gate::x(0),
            Gate::cx(1, 0),
            Gate::cry(1, 0, 2.1),
            Gate::swap(0, 1),
        ];
        for g in gates {
            let u = g.local_matrix();
            let defect = (&u.adjoint() * &u).max_abs_diff(&ComplexMatrix::identity(u.dim()));
            assert!(defect < 1e-12, "{g}");
        }
    }

    #[test]
    fn malformed_gates_are_rejected() {
        let mut c = Circuit::new(2).unwrap();
        assert!(c.push(Gate::x(2)).is_err());
        assert!(c.push(Gate::cx(1, 1)).is_err());
        assert!(Gate::new(GateKind::CNot, 0.0, vec![0], vec![]).is_err());
        assert!(Gate::new(GateKind::CSwap, 0.0, vec![0], vec![]).is_err());
        assert!(Circuit::new(8).is_err());
    }

    #[test]
    fn controls_and_swaps() {
        let psi = run(3, vec![Gate::x(2), Gate::x(0), Gate::cswap(2, 0, 1)]);
        assert_eq!(psi[0b110].re, 1.0);
        let psi = run(3, vec![Gate::x(0), Gate::x(1).controlled_by(0).controlled_by(2)]);
        assert_eq!(psi[0b001].re, 1.0);
        let psi = run(2, vec![Gate::x(0), Gate::cx(0, 1)]);
        assert_eq!(psi[0b11].re, 1.0);
    }

    #[test]
    fn reductions() {
        let psi = run(2, vec![Gate::ry(0, 1.0), Gate::x(1)]);
        let first = reduced_density(&psi, &[0]).unwrap();
        let expected = ComplexMatrix::projector(&[c(0.5f64.cos(), 0.0), c(0.5f64.sin(), 0.0)]);
        assert!(first.matrix().max_abs_diff(&expected) < 1e-15);
        let bell = run(2, vec![Gate::h(0), Gate::cx(0, 1)]);
        let half = reduced_density(&bell, &[1]).unwrap();
        assert!(half.matrix().max_abs_diff(&ComplexMatrix::identity(2).scale_real(0.5)) < 1e-15);
        let ordered = reduced_density(&psi, &[1, 0]).unwrap();
        assert!((ordered.get(2, 2).re - 0.5f64.cos().powi(2)).abs() < 1e-15);
    }

    #[test]
    fn text_round_trip() {
        let mut c = Circuit::new(3).unwrap();
        c.extend([
            Gate::ry(0, 0.123456789),
            Gate::cswap(2, 0, 1),
            Gate::rz(1, -PI).controlled_by(0),
        ])
        .unwrap();
        let text = c.to_text();
        assert_eq!(Circuit::from_text(&text).unwrap(), c);
        let parsed = Circuit::from_text("# demo\nqubits 2\nH 0  # comment\nCX 1 | 0\n").unwrap();
        assert_eq!(parsed.gates()[1], Gate::cx(0, 1));
        assert!(matches!(
            Circuit::from_text("qubits 2\nRY 0\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(Circuit::from_text("H 0\n"), Err(Error::Parse { line: 1, .. })));
    }
}
