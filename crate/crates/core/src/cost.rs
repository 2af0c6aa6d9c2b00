//! Expected number of attempts needed to distribute the entangled resources
//! of each scheme, when a single attempt succeeds with probability `beta`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::EntanglementScheme;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostQuery {
    pub scheme: EntanglementScheme,
    pub n: usize,
    pub beta: f64,
}

/// Full entanglement scales as `β^{-n}`, which is a best case rather than an
/// exact expectation. Pair-based schemes need one success per pair:
/// `n(n−1)/(2β)` for all pairs, `n/β` for the ring.
pub fn expected_trials(query: CostQuery) -> Result<f64> {
    let CostQuery { scheme, n, beta } = query;
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::invalid(format!("beta must lie in (0, 1], got {beta}")));
    }
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 players, got {n}")));
    }
    let nf = n as f64;
    Ok(match scheme {
        EntanglementScheme::Full => beta.powi(-(n as i32)),
        EntanglementScheme::AllPairs => nf * (nf - 1.0) / (2.0 * beta),
        EntanglementScheme::NeighborRing => nf / beta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use EntanglementScheme::*;

    fn trials(scheme: EntanglementScheme, n: usize, beta: f64) -> f64 {
        expected_trials(CostQuery { scheme, n, beta }).unwrap()
    }

    #[test]
    fn examples() {
        assert_eq!(trials(Full, 3, 0.5), 8.0);
        assert_eq!(trials(AllPairs, 4, 0.5), 12.0);
        for n in 2..10 {
            assert_eq!(trials(Full, n, 1.0), 1.0);
            assert_eq!(trials(AllPairs, n, 1.0), (n * (n - 1) / 2) as f64);
            assert_eq!(trials(NeighborRing, n, 1.0), n as f64);
        }
    }

    #[test]
    fn rejects_bad_beta() {
        for beta in [0.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(
                expected_trials(CostQuery { scheme: Full, n: 3, beta }),
                Err(Error::InvalidArgument(_))
            ));
        }
    }

    #[test]
    fn pair_schemes_are_cheaper_at_realistic_success_rates() {
        for n in 4..30 {
            for beta in [0.01, 0.1, 0.3, 0.5] {
                assert!(trials(Full, n, beta) > trials(AllPairs, n, beta));
                assert!(trials(AllPairs, n, beta) > trials(NeighborRing, n, beta));
            }
        }
    }

    #[test]
    fn full_entanglement_only_loses_once_pairs_outnumber_its_penalty() {
        // Full > AllPairs exactly when β^{-(n-1)} > n(n-1)/2; near β = 1 the order flips.
        assert!(trials(Full, 4, 0.99) < trials(AllPairs, 4, 0.99));
        for n in 4..12 {
            for beta in [0.2f64, 0.5, 0.7, 0.9, 0.99] {
                let full_wins = beta.powi(-(n as i32 - 1)) > (n * (n - 1) / 2) as f64;
                assert_eq!(trials(Full, n, beta) > trials(AllPairs, n, beta), full_wins);
                assert!(trials(AllPairs, n, beta) > trials(NeighborRing, n, beta));
            }
        }
    }
}
