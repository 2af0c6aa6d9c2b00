//! Closed-form equilibrium payoffs and numerical deviation searches.
//!
//! A deviation search fixes every other player's mixed strategy and scans
//! pure deviations of one player: a grid over `(θ, φ, α)` for each owned
//! qubit, a few classical anchor operators, and seeded random operators.
//! Pure deviations suffice because a deviator's expected payoff is affine in
//! their own mixture weights.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{Engine, Method};
use crate::error::{Error, Result};
use crate::layout::{EntanglementScheme, QubitLayout};
use crate::payoff::{GameSpec, Interpretation};
use crate::qcore::{build_operator, SingleQubitOp};
use crate::strategy::{canonical_u, classical_flip, paper_mixture, substream, MixedStrategy, PureStrategy};

/// Expected payoff of the canonical mixture, where one is known in closed form.
pub fn closed_form_payoff(
    scheme: EntanglementScheme,
    interpretation: Interpretation,
    n: usize,
    a: f64,
) -> Result<f64> {
    if n < 2 || (scheme == EntanglementScheme::NeighborRing && n < 3) {
        return Err(Error::invalid(format!("{n} players is too few for {}", scheme.name())));
    }
    if !(a > 1.0 && a < n as f64) {
        return Err(Error::invalid(format!("closed forms assume 1 < a < {n}, got {a}")));
    }
    use EntanglementScheme::*;
    use Interpretation::*;
    match (scheme, interpretation) {
        (Full, Direct) | (AllPairs, Partial) | (NeighborRing, Partial) => Ok((1.0 + a) / 2.0),
        (AllPairs, AllOrNone) => Ok(a - (a - 1.0) * 0.5f64.powi(n as i32 - 1)),
        (NeighborRing, AllOrNone) => Ok((1.0 + 3.0 * a) / 4.0),
        _ => Err(Error::NoClosedForm(format!(
            "{} entanglement with the {} interpretation",
            scheme.name(),
            interpretation.name()
        ))),
    }
}

/// Which operators a deviator may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviationSet {
    /// The whole `U(θ, φ, α)` family, independently per owned qubit.
    #[default]
    General,
    /// Only the classical choices: identity or `U(π, 0, π/2)` on each owned qubit.
    Classical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviationSearch {
    #[serde(default)]
    pub set: DeviationSet,
    /// Points per angle.
    pub grid: usize,
    /// Cap on grid combinations across the deviator's qubits; beyond it an
    /// evenly spaced subset of the combinations is evaluated.
    pub max_grid_points: usize,
    /// Random deviations, each drawing an independent operator per qubit.
    pub random_samples: usize,
    pub seed: u64,
}

impl Default for DeviationSearch {
    fn default() -> Self {
        Self {
            set: DeviationSet::General,
            grid: 9,
            max_grid_points: 4096,
            random_samples: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub player: usize,
    pub baseline: f64,
    /// Largest `deviation payoff − baseline` found.
    pub max_gain: f64,
    /// Smallest `deviation payoff − baseline` found.
    pub min_gain: f64,
    /// `(θ, φ, α)` per owned qubit for the deviation achieving `max_gain`.
    pub argmax_ops: Vec<(f64, f64, f64)>,
    pub evaluated: usize,
    pub search: DeviationSearch,
}

impl DeviationReport {
    pub fn max_abs_deviation(&self) -> f64 {
        self.max_gain.abs().max(self.min_gain.abs())
    }

    /// The deviator's payoff stayed within `tol` of the baseline everywhere.
    pub fn is_constant(&self, tol: f64) -> bool {
        self.max_abs_deviation() < tol
    }
}

fn grid_operator(search: &DeviationSearch, index: usize) -> Result<SingleQubitOp> {
    let g = search.grid;
    let (t, rest) = (index / (g * g), index % (g * g));
    let (p, q) = (rest / g, rest % g);
    let theta = if g == 1 { 0.0 } else { PI * t as f64 / (g - 1) as f64 };
    build_operator(theta, TAU * p as f64 / g as f64, TAU * q as f64 / g as f64)
}

fn random_operator(rng: &mut impl Rng) -> Result<SingleQubitOp> {
    build_operator(rng.random::<f64>() * PI, rng.random::<f64>() * TAU, rng.random::<f64>() * TAU)
}

/// Every deviation the search evaluates, in a fixed order.
fn candidate_deviations(search: &DeviationSearch, width: usize, player: usize) -> Result<Vec<PureStrategy>> {
    if search.set == DeviationSet::Classical {
        if width >= 20 {
            return Err(Error::Capacity(format!("2^{width} classical deviations")));
        }
        return (0..1usize << width)
            .map(|mask| {
                let ops = (0..width)
                    .map(|q| if mask >> q & 1 == 1 { classical_flip() } else { SingleQubitOp::identity() })
                    .collect();
                PureStrategy::new(ops)
            })
            .collect();
    }
    if search.grid == 0 {
        return Err(Error::invalid("grid needs at least one point per angle"));
    }
    let mut out = Vec::new();
    for anchor in [SingleQubitOp::identity(), canonical_u(true), classical_flip()] {
        out.push(PureStrategy::uniform(anchor, width)?);
    }

    let per_qubit = search.grid.pow(3) as u128;
    let total = per_qubit.checked_pow(width as u32).unwrap_or(u128::MAX);
    let cap = search.max_grid_points as u128;
    let points = total.min(cap);
    for i in 0..points {
        let mut index = if total <= cap { i } else { i * (total / cap) };
        let mut ops = Vec::with_capacity(width);
        for _ in 0..width {
            ops.push(grid_operator(search, (index % per_qubit) as usize)?);
            index /= per_qubit;
        }
        out.push(PureStrategy::new(ops)?);
    }

    let mut rng = substream(search.seed, player as u64);
    for _ in 0..search.random_samples {
        let ops = (0..width).map(|_| random_operator(&mut rng)).collect::<Result<_>>()?;
        out.push(PureStrategy::new(ops)?);
    }
    Ok(out)
}

/// Scans unilateral pure deviations of `player` against `profile`.
pub fn deviation_search(
    engine: &Engine,
    spec: &GameSpec,
    layout: &QubitLayout,
    profile: &[MixedStrategy],
    player: usize,
    search: &DeviationSearch,
) -> Result<DeviationReport> {
    if player >= spec.n() {
        return Err(Error::invalid(format!("player {player} out of range")));
    }
    let baseline = engine.expected_payoffs(profile, spec, layout, Method::Exact)?.expected[player];
    let candidates = candidate_deviations(search, layout.owned(player).len(), player)?;
    let gains: Vec<f64> = candidates
        .par_iter()
        .map(|dev| {
            let mut trial = profile.to_vec();
            trial[player] = MixedStrategy::pure(dev.clone());
            Ok(engine.expected_payoffs(&trial, spec, layout, Method::Exact)?.expected[player] - baseline)
        })
        .collect::<Result<_>>()?;

    let (best, &max_gain) = gains
        .iter()
        .enumerate()
        .fold((0, &f64::NEG_INFINITY), |acc, (i, g)| if *g > *acc.1 { (i, g) } else { acc });
    let min_gain = gains.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(DeviationReport {
        player,
        baseline,
        max_gain,
        min_gain,
        argmax_ops: candidates[best].ops().iter().map(SingleQubitOp::params).collect(),
        evaluated: candidates.len(),
        search: *search,
    })
}

/// Deviation search against everyone else playing the canonical mixture.
pub fn verify_deviation_independence(
    engine: &Engine,
    spec: &GameSpec,
    layout: &QubitLayout,
    player: usize,
    search: &DeviationSearch,
) -> Result<DeviationReport> {
    deviation_search(engine, spec, layout, &paper_mixture(layout), player, search)
}

/// Largest improvement a single deviation achieves over `profile`, clipped at zero.
pub fn best_response_gap(
    engine: &Engine,
    spec: &GameSpec,
    layout: &QubitLayout,
    profile: &[MixedStrategy],
    player: usize,
    search: &DeviationSearch,
) -> Result<f64> {
    Ok(deviation_search(engine, spec, layout, profile, player, search)?.max_gain.max(0.0))
}
