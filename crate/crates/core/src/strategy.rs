//! Pure and finite mixed strategies.
//!
//! A pure strategy assigns one operator to every qubit a player owns. A mixed
//! strategy is a finite lottery over pure strategies; players randomize
//! independently of each other.
//!
//! Randomness comes from ChaCha20 (`rand_chacha::ChaCha20Rng`) seeded with
//! `seed_from_u64` and split into independent substreams with `set_stream`,
//! which makes every draw reproducible across platforms.

use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::layout::QubitLayout;
use crate::qcore::{build_operator, SingleQubitOp};

const PROBABILITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PureStrategy {
    ops: Vec<SingleQubitOp>,
}

impl PureStrategy {
    pub fn new(ops: Vec<SingleQubitOp>) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::invalid("a pure strategy needs at least one operator"));
        }
        Ok(Self { ops })
    }

    /// The same operator on each of `count` owned qubits.
    pub fn uniform(op: SingleQubitOp, count: usize) -> Result<Self> {
        Self::new(vec![op; count])
    }

    pub fn ops(&self) -> &[SingleQubitOp] {
        &self.ops
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixedStrategy {
    support: Vec<PureStrategy>,
    probabilities: Vec<f64>,
}

impl MixedStrategy {
    pub fn new(support: Vec<PureStrategy>, probabilities: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::invalid("mixed strategy support is empty"));
        }
        if support.len() != probabilities.len() {
            return Err(Error::invalid(format!(
                "{} support entries but {} probabilities",
                support.len(),
                probabilities.len()
            )));
        }
        if probabilities.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::invalid("probabilities must be nonnegative"));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(Error::invalid(format!("probabilities sum to {total}, not 1")));
        }
        let width = support[0].ops.len();
        if support.iter().any(|s| s.ops.len() != width) {
            return Err(Error::invalid("support entries cover different numbers of qubits"));
        }
        Ok(Self {
            support,
            probabilities,
        })
    }

    pub fn pure(strategy: PureStrategy) -> Self {
        Self {
            support: vec![strategy],
            probabilities: vec![1.0],
        }
    }

    pub fn support(&self) -> &[PureStrategy] {
        &self.support
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// Number of qubits each support entry covers.
    pub fn width(&self) -> usize {
        self.support[0].ops.len()
    }
}

/// `u(0)` is the identity (cooperate); `u(1) = diag(i, −i)`.
///
/// `diag(i, −i)` is `U(0, 3π/2, 0)`, i.e. `U(0, π/2, 0)` up to the global
/// phase −1. The phase is irrelevant for probabilities but fixes the signs of
/// the final pair states.
pub fn canonical_u(defect: bool) -> SingleQubitOp {
    let phi = if defect { 3.0 * FRAC_PI_2 } else { 0.0 };
    build_operator(0.0, phi, 0.0).expect("finite parameters")
}

/// The classical defect operator `U(π, 0, π/2) = iσ_x`.
pub fn classical_flip() -> SingleQubitOp {
    build_operator(std::f64::consts::PI, 0.0, FRAC_PI_2).expect("finite parameters")
}

/// Every player picks `u(0)` on all owned qubits or `u(1)` on all owned
/// qubits, each with probability 1/2.
pub fn paper_mixture(layout: &QubitLayout) -> Vec<MixedStrategy> {
    layout
        .ownership()
        .iter()
        .map(|owned| MixedStrategy {
            support: vec![
                PureStrategy {
                    ops: vec![canonical_u(false); owned.len()],
                },
                PureStrategy {
                    ops: vec![canonical_u(true); owned.len()],
                },
            ],
            probabilities: vec![0.5, 0.5],
        })
        .collect()
}

/// Index of the support entry drawn from `rng`.
pub fn sample_index<R: Rng + ?Sized>(mixed: &MixedStrategy, rng: &mut R) -> usize {
    if mixed.support.len() == 1 {
        return 0;
    }
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in mixed.probabilities.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // u landed in the rounding gap above the last partial sum
    mixed
        .probabilities
        .iter()
        .rposition(|&p| p > 0.0)
        .unwrap_or(mixed.support.len() - 1)
}

pub fn sample<'a, R: Rng + ?Sized>(mixed: &'a MixedStrategy, rng: &mut R) -> &'a PureStrategy {
    &mixed.support[sample_index(mixed, rng)]
}

/// Independent, reproducible substream `stream` of the generator for `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{build_layout, EntanglementScheme};
    use num_complex::Complex64;

    #[test]
    fn canonical_operators() {
        assert_eq!(canonical_u(false), build_operator(0.0, 0.0, 0.0).unwrap());
        let m = canonical_u(true).matrix();
        assert!((m[0][0] - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        assert!((m[1][1] - Complex64::new(0.0, -1.0)).norm() < 1e-15);
        // same operator as U(0, π/2, 0) up to the global phase −1
        let reference = build_operator(0.0, FRAC_PI_2, 0.0).unwrap().matrix();
        for r in 0..2 {
            for c in 0..2 {
                assert!((m[r][c] + reference[r][c]).norm() < 1e-15);
            }
        }
        // diag(i, −i)² = −I
        assert!((m[0][0] * m[0][0] - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        assert!((m[1][1] * m[1][1] - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        assert!(m[0][1].norm() < 1e-15 && m[1][0].norm() < 1e-15);
    }

    #[test]
    fn mixture_shapes() {
        let full = paper_mixture(&build_layout(EntanglementScheme::Full, 2).unwrap());
        assert_eq!(full.len(), 2);
        for m in &full {
            assert_eq!(m.support()[0].ops(), &[canonical_u(false)]);
            assert_eq!(m.support()[1].ops(), &[canonical_u(true)]);
            assert_eq!(m.probabilities(), &[0.5, 0.5]);
        }
        let pairs = paper_mixture(&build_layout(EntanglementScheme::AllPairs, 3).unwrap());
        for m in &pairs {
            assert_eq!(m.width(), 2);
            assert_eq!(m.support()[1].ops(), &[canonical_u(true), canonical_u(true)]);
            assert!((m.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn mixed_strategy_validation() {
        let p = PureStrategy::uniform(canonical_u(false), 1).unwrap();
        assert!(MixedStrategy::new(vec![], vec![]).is_err());
        assert!(MixedStrategy::new(vec![p.clone()], vec![0.5]).is_err());
        assert!(MixedStrategy::new(vec![p.clone(), p.clone()], vec![1.5, -0.5]).is_err());
        let wide = PureStrategy::uniform(canonical_u(false), 2).unwrap();
        assert!(MixedStrategy::new(vec![p.clone(), wide], vec![0.5, 0.5]).is_err());
        assert!(PureStrategy::new(vec![]).is_err());
    }

    #[test]
    fn single_support_always_drawn() {
        let p = PureStrategy::uniform(classical_flip(), 3).unwrap();
        let m = MixedStrategy::pure(p.clone());
        let mut rng = substream(1, 0);
        for _ in 0..100 {
            assert_eq!(sample(&m, &mut rng), &p);
        }
    }

    #[test]
    fn mixture_frequency_within_three_sigma() {
        let m = &paper_mixture(&build_layout(EntanglementScheme::Full, 2).unwrap())[0];
        let draws = 100_000;
        let mut rng = substream(2024, 0);
        let cooperate = (0..draws).filter(|_| sample_index(m, &mut rng) == 0).count();
        let freq = cooperate as f64 / draws as f64;
        let sigma = (0.25 / draws as f64).sqrt();
        assert!((freq - 0.5).abs() < 3.0 * sigma, "frequency {freq}");
    }

    #[test]
    fn identical_seeds_give_identical_draws() {
        let m = &paper_mixture(&build_layout(EntanglementScheme::Full, 2).unwrap())[0];
        let draw = |seed, stream| {
            let mut rng = substream(seed, stream);
            (0..256).map(|_| sample_index(m, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(5, 3), draw(5, 3));
        assert_ne!(draw(5, 3), draw(5, 4));
    }
}
