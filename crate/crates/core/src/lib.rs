//! Simulator for a quantum mechanism that addresses the free-rider problem in
//! public-goods games.
//!
//! Players share entangled qubits, each applies single-qubit operators to the
//! qubits it owns, the entanglement is undone and the register is measured.
//! Measured bits decide who contributes. The crate computes the resulting
//! outcome distributions and expected payoffs exactly or by Monte Carlo,
//! checks mixed-strategy equilibria numerically, plans contributions for
//! unequal endowments and models the cost of distributing entanglement.

pub mod cost;
pub mod engine;
pub mod equilibrium;
pub mod error;
pub mod layout;
pub mod payoff;
pub mod qcore;
pub mod strategy;

#[cfg(test)]
mod test_oracle;

pub use cost::{expected_trials, CostQuery};
pub use engine::{pair_final_state, Engine, Estimate, Limits, Method, PayoffReport, SimulationPath};
pub use equilibrium::{
    best_response_gap, closed_form_payoff, deviation_search, verify_deviation_independence, DeviationReport,
    DeviationSearch, DeviationSet,
};
pub use error::{Error, Result};
pub use layout::{build_layout, neighbor_ring_with_order, EntanglementScheme, QubitLayout};
pub use payoff::{
    check_voluntary, classical_payoff_table, classify_classical, contribution_of, payoff_vector, plan_heterogeneous,
    Classification, ContributionPlan, GameSpec, Interpretation, VoluntaryCheck,
};
pub use qcore::{
    apply_full_entangler, apply_local, apply_pair_entanglers, build_operator, measurement_distribution, Bits,
    Direction, OutcomeDistribution, SingleQubitOp, StateVector,
};
pub use strategy::{canonical_u, classical_flip, paper_mixture, sample, MixedStrategy, PureStrategy};
