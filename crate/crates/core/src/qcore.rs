//! State vectors, single-qubit operators and the two entangling operators.
//!
//! Basis convention: for an `m`-qubit register, qubit 0 is the most
//! significant bit of the basis index, so `|q0 q1 ... q(m-1)>` has index
//! `q0·2^(m-1) + ... + q(m-1)`.
//!
//! The entanglers are never materialized. The full entangler
//! `(I ± i X⊗…⊗X)/√2` pairs every index with its bitwise complement; a
//! two-qubit entangler pairs an index with the index that has both of the
//! pair's bits flipped.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ComplexAmplitude = Complex64;

/// Amplitudes with smaller magnitude are treated as exact zeros when building
/// outcome distributions.
pub const PRUNE_AMPLITUDE: f64 = 1e-15;

/// Largest register the simulator will index with a `u64`.
pub const MAX_QUBITS: usize = 40;

const NORM_TOLERANCE: f64 = 1e-9;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Adjoint,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Adjoint => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0>` on `num_qubits` qubits.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        Self::basis(num_qubits, 0)
    }

    pub fn basis(num_qubits: usize, index: u64) -> Result<Self> {
        check_register(num_qubits)?;
        let dim = 1usize << num_qubits;
        if index >= dim as u64 {
            return Err(Error::invalid(format!(
                "basis index {index} out of range for {num_qubits} qubits"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index as usize] = Complex64::new(1.0, 0.0);
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    /// Wraps raw amplitudes. The length must be a power of two and every
    /// entry finite; the vector must be normalized within 1e-9.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::invalid(format!(
                "amplitude count {len} is not a power of two >= 2"
            )));
        }
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite amplitude".into()));
        }
        let state = Self {
            num_qubits: len.trailing_zeros() as usize,
            amplitudes,
        };
        check_register(state.num_qubits)?;
        state.check_normalized()?;
        Ok(state)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: u64) -> Complex64 {
        self.amplitudes[index as usize]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    fn check_normalized(&self) -> Result<()> {
        let norm = self.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidState(format!(
                "squared norm {norm} differs from 1"
            )));
        }
        Ok(())
    }

    fn bit_mask(&self, qubit: usize) -> usize {
        1usize << (self.num_qubits - 1 - qubit)
    }

    pub(crate) fn apply_local_in_place(&mut self, op: &SingleQubitOp, qubit: usize) -> Result<()> {
        if qubit >= self.num_qubits {
            return Err(Error::invalid(format!(
                "qubit {qubit} out of range for {} qubits",
                self.num_qubits
            )));
        }
        let mask = self.bit_mask(qubit);
        let [[m00, m01], [m10, m11]] = op.matrix;
        for i in 0..self.amplitudes.len() {
            if i & mask != 0 {
                continue;
            }
            let j = i | mask;
            let a0 = self.amplitudes[i];
            let a1 = self.amplitudes[j];
            self.amplitudes[i] = m00 * a0 + m01 * a1;
            self.amplitudes[j] = m10 * a0 + m11 * a1;
        }
        Ok(())
    }

    /// `out[i] = (ψ[i] ± i·ψ[i ^ flip]) / √2`, the shared kernel of both entanglers.
    fn entangle_in_place(&mut self, flip: usize, direction: Direction) {
        let coeff = I * direction.sign();
        for i in 0..self.amplitudes.len() {
            let j = i ^ flip;
            if j < i {
                continue;
            }
            let a = self.amplitudes[i];
            let b = self.amplitudes[j];
            self.amplitudes[i] = (a + coeff * b) * FRAC_1_SQRT_2;
            self.amplitudes[j] = (b + coeff * a) * FRAC_1_SQRT_2;
        }
    }

    pub(crate) fn apply_full_entangler_in_place(&mut self, direction: Direction) {
        let all = self.amplitudes.len() - 1;
        self.entangle_in_place(all, direction);
    }

    pub(crate) fn apply_pair_entanglers_in_place(
        &mut self,
        pairs: &[(usize, usize)],
        direction: Direction,
    ) -> Result<()> {
        validate_pairs(pairs, self.num_qubits)?;
        for &(p, q) in pairs {
            let flip = self.bit_mask(p) | self.bit_mask(q);
            self.entangle_in_place(flip, direction);
        }
        Ok(())
    }
}

fn check_register(num_qubits: usize) -> Result<()> {
    if num_qubits == 0 || num_qubits > MAX_QUBITS {
        return Err(Error::invalid(format!(
            "register size {num_qubits} outside 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

pub(crate) fn validate_pairs(pairs: &[(usize, usize)], num_qubits: usize) -> Result<()> {
    let mut seen = vec![false; num_qubits];
    for &(p, q) in pairs {
        for idx in [p, q] {
            if idx >= num_qubits {
                return Err(Error::invalid(format!(
                    "pair qubit {idx} out of range for {num_qubits} qubits"
                )));
            }
            if seen[idx] {
                return Err(Error::invalid(format!("qubit {idx} appears in more than one pair")));
            }
            seen[idx] = true;
        }
    }
    Ok(())
}

/// The single-qubit operator family
///
/// ```text
/// U(θ, φ, α) = [  e^{-iφ} cos(θ/2)    e^{iα} sin(θ/2) ]
///              [ -e^{-iα} sin(θ/2)    e^{iφ} cos(θ/2) ]
/// ```
///
/// with `θ ∈ [0, π]` and `φ, α` reduced to `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleQubitOp {
    theta: f64,
    phi: f64,
    alpha: f64,
    matrix: [[Complex64; 2]; 2],
}

impl SingleQubitOp {
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn params(&self) -> (f64, f64, f64) {
        (self.theta, self.phi, self.alpha)
    }

    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        self.matrix
    }

    pub fn identity() -> Self {
        build_operator(0.0, 0.0, 0.0).expect("finite parameters")
    }

    /// `max |(U†U − I)_ij|`.
    pub fn unitarity_error(&self) -> f64 {
        let m = &self.matrix;
        let mut worst = 0.0f64;
        for r in 0..2 {
            for c in 0..2 {
                let v = m[0][r].conj() * m[0][c] + m[1][r].conj() * m[1][c];
                let target = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((v - Complex64::new(target, 0.0)).norm());
            }
        }
        worst
    }
}

pub fn build_operator(theta: f64, phi: f64, alpha: f64) -> Result<SingleQubitOp> {
    if !(theta.is_finite() && phi.is_finite() && alpha.is_finite()) {
        return Err(Error::invalid(format!(
            "operator parameters must be finite, got ({theta}, {phi}, {alpha})"
        )));
    }
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::invalid(format!("theta {theta} outside [0, π]")));
    }
    let phi = reduce_angle(phi);
    let alpha = reduce_angle(alpha);
    let (s, c) = (theta / 2.0).sin_cos();
    let e_phi = Complex64::from_polar(1.0, phi);
    let e_alpha = Complex64::from_polar(1.0, alpha);
    let matrix = [
        [e_phi.conj() * c, e_alpha * s],
        [-e_alpha.conj() * s, e_phi * c],
    ];
    Ok(SingleQubitOp {
        theta,
        phi,
        alpha,
        matrix,
    })
}

fn reduce_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

pub fn apply_local(state: &StateVector, op: &SingleQubitOp, qubit: usize) -> Result<StateVector> {
    let mut out = state.clone();
    out.apply_local_in_place(op, qubit)?;
    Ok(out)
}

/// Applies `J_m = (I + i X^{⊗m})/√2` (forward) or its adjoint to the whole register.
pub fn apply_full_entangler(state: &StateVector, direction: Direction) -> StateVector {
    let mut out = state.clone();
    out.apply_full_entangler_in_place(direction);
    out
}

/// Applies `J_2` (or `J_2†`) to every listed qubit pair. Pairs must be disjoint.
pub fn apply_pair_entanglers(
    state: &StateVector,
    pairs: &[(usize, usize)],
    direction: Direction,
) -> Result<StateVector> {
    let mut out = state.clone();
    out.apply_pair_entanglers_in_place(pairs, direction)?;
    Ok(out)
}

/// A measured bitstring, one entry (0 or 1) per qubit in register order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bits(Vec<u8>);

impl Bits {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::invalid("bit values must be 0 or 1"));
        }
        Ok(Bits(bits))
    }

    pub fn zeros(len: usize) -> Self {
        Bits(vec![0; len])
    }

    /// Expands a basis index of an `len`-qubit register (qubit 0 = MSB).
    pub fn from_index(index: u64, len: usize) -> Self {
        Bits(
            (0..len)
                .map(|q| ((index >> (len - 1 - q)) & 1) as u8)
                .collect(),
        )
    }

    pub fn to_index(&self) -> u64 {
        self.0.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }
}

impl From<Bits> for Vec<u8> {
    fn from(bits: Bits) -> Self {
        bits.0
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b == 0 { "0" } else { "1" })?;
        }
        Ok(())
    }
}

impl FromStr for Bits {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::invalid(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<u8>>>()
            .map(Bits)
    }
}

/// Measurement outcomes with nonzero probability.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutcomeDistribution {
    entries: BTreeMap<Bits, f64>,
}

impl OutcomeDistribution {
    pub(crate) fn from_entries(entries: BTreeMap<Bits, f64>) -> Self {
        Self { entries }
    }

    pub fn probability(&self, bits: &Bits) -> f64 {
        self.entries.get(bits).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Bits, f64)> {
        self.entries.iter().map(|(b, &p)| (b, p))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }

    /// The single outcome when the distribution is a point mass.
    pub fn certain_outcome(&self, tol: f64) -> Option<&Bits> {
        let (bits, &p) = self.entries.iter().find(|(_, &p)| p > 0.5)?;
        ((1.0 - p).abs() <= tol).then_some(bits)
    }
}

pub fn measurement_distribution(state: &StateVector) -> Result<OutcomeDistribution> {
    state.check_normalized()?;
    let m = state.num_qubits;
    let entries = state
        .amplitudes
        .iter()
        .enumerate()
        .filter(|(_, z)| z.norm() >= PRUNE_AMPLITUDE)
        .map(|(i, z)| (Bits::from_index(i as u64, m), z.norm_sqr()))
        .collect();
    Ok(OutcomeDistribution { entries })
}
