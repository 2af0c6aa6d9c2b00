//! Runs the protocol `J† (U_1 ⊗ … ⊗ U_n) J |0…0>` and turns the measured
//! bits into expected payoffs.
//!
//! Two simulation paths exist. The dense path evolves the whole register and
//! is the only option for full entanglement. Pair-based schemes factor into
//! independent two-qubit systems, so the factorized path evolves one
//! 4-vector per pair and enumerates the product distribution.

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::QubitLayout;
use crate::payoff::GameSpec;
use crate::qcore::{measurement_distribution, Bits, Direction, SingleQubitOp, StateVector, PRUNE_AMPLITUDE};
use crate::strategy::{sample_index, substream, MixedStrategy, PureStrategy};

pub use crate::qcore::OutcomeDistribution;

/// Samples drawn from one RNG substream set. Fixed so that results do not
/// depend on the number of worker threads.
const MC_CHUNK: u64 = 4096;

/// Largest number of support combinations whose pure runs are cached during
/// Monte Carlo sampling.
const MC_CACHE_COMBOS: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    /// Largest dense register, in amplitudes.
    pub max_amplitudes: u64,
    /// Largest exact enumeration, in weighted outcomes.
    pub max_work: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            max_amplitudes: 1 << 22,
            max_work: 1 << 24,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    Exact,
    MonteCarlo { samples: u64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimulationPath {
    /// Factorized for pair-based schemes, dense otherwise.
    Auto,
    Dense,
    Factorized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Estimate {
    Exact,
    MonteCarlo {
        samples: u64,
        seed: u64,
        std_error: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayoffReport {
    pub expected: Vec<f64>,
    #[serde(flatten)]
    pub estimate: Estimate,
}

/// `J_2† (A ⊗ B) (1, 0, 0, i)/√2`, amplitudes in the order `|00>, |01>, |10>, |11>`.
pub fn pair_final_state(op_a: &SingleQubitOp, op_b: &SingleQubitOp) -> [Complex64; 4] {
    let h = FRAC_1_SQRT_2;
    let v = [Complex64::new(h, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, h)];
    let (a, b) = (op_a.matrix(), op_b.matrix());
    let mut w = [Complex64::new(0.0, 0.0); 4];
    for r in 0..2 {
        for s in 0..2 {
            w[2 * r + s] = (0..2)
                .flat_map(|r2| (0..2).map(move |s2| (r2, s2)))
                .map(|(r2, s2)| a[r][r2] * b[s][s2] * v[2 * r2 + s2])
                .sum();
        }
    }
    let minus_i = Complex64::new(0.0, -1.0);
    std::array::from_fn(|k| (w[k] + minus_i * w[3 - k]) * h)
}

/// First qubit, second qubit, and the pair's outcomes as (two-bit value, probability).
type PairOutcomes = (usize, usize, Vec<(u8, f64)>);

/// The outcome distribution of one pure profile, in whichever form the path produced.
#[derive(Debug, Clone)]
enum PureRun {
    Dense {
        num_qubits: usize,
        /// (basis index, probability), ascending by index
        outcomes: Vec<(u64, f64)>,
        cumulative: Vec<f64>,
    },
    Factorized {
        num_qubits: usize,
        pairs: Vec<PairOutcomes>,
    },
}

impl PureRun {
    fn num_outcomes(&self) -> u64 {
        match self {
            PureRun::Dense { outcomes, .. } => outcomes.len() as u64,
            PureRun::Factorized { pairs, .. } => pairs
                .iter()
                .fold(1u64, |acc, (_, _, o)| acc.saturating_mul(o.len() as u64)),
        }
    }

    fn for_each_outcome(&self, mut f: impl FnMut(&[u8], f64)) {
        match self {
            PureRun::Dense { num_qubits, outcomes, .. } => {
                let mut bits = vec![0u8; *num_qubits];
                for &(index, p) in outcomes {
                    fill_bits(index, &mut bits);
                    f(&bits, p);
                }
            }
            PureRun::Factorized { num_qubits, pairs } => {
                let mut bits = vec![0u8; *num_qubits];
                let mut choice = vec![0usize; pairs.len()];
                // probability prefix products; prefix[i] covers pairs[..i]
                let mut prefix = vec![1.0; pairs.len() + 1];
                for (i, (q0, q1, o)) in pairs.iter().enumerate() {
                    set_pair_bits(&mut bits, *q0, *q1, o[0].0);
                    prefix[i + 1] = prefix[i] * o[0].1;
                }
                loop {
                    f(&bits, prefix[pairs.len()]);
                    // odometer step, last pair fastest
                    let mut i = pairs.len();
                    loop {
                        if i == 0 {
                            return;
                        }
                        i -= 1;
                        choice[i] += 1;
                        if choice[i] < pairs[i].2.len() {
                            break;
                        }
                        choice[i] = 0;
                    }
                    for j in i..pairs.len() {
                        let (q0, q1, o) = &pairs[j];
                        let (value, p) = o[choice[j]];
                        set_pair_bits(&mut bits, *q0, *q1, value);
                        prefix[j + 1] = prefix[j] * p;
                    }
                }
            }
        }
    }

    fn sample_into<R: rand::Rng + ?Sized>(&self, rng: &mut R, bits: &mut [u8]) {
        match self {
            PureRun::Dense { outcomes, cumulative, .. } => {
                let u = rng.random::<f64>() * cumulative[cumulative.len() - 1];
                let i = cumulative.partition_point(|&c| c <= u).min(outcomes.len() - 1);
                fill_bits(outcomes[i].0, bits);
            }
            PureRun::Factorized { pairs, .. } => {
                for (q0, q1, o) in pairs {
                    let value = if o.len() == 1 {
                        o[0].0
                    } else {
                        let total: f64 = o.iter().map(|e| e.1).sum();
                        let u = rng.random::<f64>() * total;
                        let mut acc = 0.0;
                        let mut pick = o[o.len() - 1].0;
                        for &(v, p) in o {
                            acc += p;
                            if u < acc {
                                pick = v;
                                break;
                            }
                        }
                        pick
                    };
                    set_pair_bits(bits, *q0, *q1, value);
                }
            }
        }
    }
}

fn fill_bits(index: u64, bits: &mut [u8]) {
    let m = bits.len();
    for (q, b) in bits.iter_mut().enumerate() {
        *b = ((index >> (m - 1 - q)) & 1) as u8;
    }
}

fn set_pair_bits(bits: &mut [u8], q0: usize, q1: usize, value: u8) {
    bits[q0] = value >> 1;
    bits[q1] = value & 1;
}

#[derive(Debug, Clone, Default)]
pub struct Engine {
    limits: Limits,
}

impl Engine {
    pub fn new(limits: Limits) -> Self {
        Self { limits }
    }

    pub fn limits(&self) -> Limits {
        self.limits
    }

    /// Outcome distribution of a pure profile, using the factorized path for
    /// pair-based schemes.
    pub fn run_pure(&self, profile: &[PureStrategy], spec: &GameSpec, layout: &QubitLayout) -> Result<OutcomeDistribution> {
        self.run_pure_with(profile, spec, layout, SimulationPath::Auto)
    }

    pub fn run_pure_with(
        &self,
        profile: &[PureStrategy],
        spec: &GameSpec,
        layout: &QubitLayout,
        path: SimulationPath,
    ) -> Result<OutcomeDistribution> {
        spec.check_layout(layout)?;
        check_profile_shape(profile.iter().map(|p| p.ops().len()), layout)?;
        let ops: Vec<&[SingleQubitOp]> = profile.iter().map(|p| p.ops()).collect();
        match path {
            SimulationPath::Dense => self.dense_state(&ops, layout).and_then(|s| measurement_distribution(&s)),
            _ => {
                let run = self.prepare(&ops, layout, path)?;
                if run.num_outcomes() > self.limits.max_work {
                    return Err(Error::Capacity(format!(
                        "{} outcomes exceed the work limit {}",
                        run.num_outcomes(),
                        self.limits.max_work
                    )));
                }
                let mut entries = std::collections::BTreeMap::new();
                run.for_each_outcome(|bits, p| {
                    entries.insert(Bits::new(bits.to_vec()).expect("binary"), p);
                });
                Ok(OutcomeDistribution::from_entries(entries))
            }
        }
    }

    fn dense_state(&self, ops: &[&[SingleQubitOp]], layout: &QubitLayout) -> Result<StateVector> {
        let m = layout.total_qubits();
        if m >= 63 || (1u64 << m) > self.limits.max_amplitudes {
            return Err(Error::Capacity(format!(
                "a dense register of {m} qubits exceeds the limit of {} amplitudes{}",
                self.limits.max_amplitudes,
                if layout.scheme().is_pair_based() {
                    ""
                } else {
                    "; full entanglement cannot be factorized"
                }
            )));
        }
        let mut state = StateVector::zero(m)?;
        if layout.scheme().is_pair_based() {
            state.apply_pair_entanglers_in_place(layout.pairs(), Direction::Forward)?;
        } else {
            state.apply_full_entangler_in_place(Direction::Forward);
        }
        for (player, player_ops) in ops.iter().enumerate() {
            for (&q, op) in layout.owned(player).iter().zip(player_ops.iter()) {
                state.apply_local_in_place(op, q)?;
            }
        }
        if layout.scheme().is_pair_based() {
            state.apply_pair_entanglers_in_place(layout.pairs(), Direction::Adjoint)?;
        } else {
            state.apply_full_entangler_in_place(Direction::Adjoint);
        }
        Ok(state)
    }

    fn prepare(&self, ops: &[&[SingleQubitOp]], layout: &QubitLayout, path: SimulationPath) -> Result<PureRun> {
        let factorize = match path {
            SimulationPath::Dense => false,
            SimulationPath::Auto => layout.scheme().is_pair_based(),
            SimulationPath::Factorized => {
                if !layout.scheme().is_pair_based() {
                    return Err(Error::Unsupported("full entanglement cannot be factorized".into()));
                }
                true
            }
        };
        if factorize {
            let op_for = |player: usize, qubit: usize| {
                let slot = layout.owned(player).binary_search(&qubit).expect("owned qubit");
                &ops[player][slot]
            };
            let pairs = layout
                .pairs()
                .iter()
                .zip(layout.pair_players())
                .map(|(&(q0, q1), &(j, k))| {
                    let amps = pair_final_state(op_for(j, q0), op_for(k, q1));
                    let outcomes = amps
                        .iter()
                        .enumerate()
                        .filter(|(_, z)| z.norm() >= PRUNE_AMPLITUDE)
                        .map(|(v, z)| (v as u8, z.norm_sqr()))
                        .collect();
                    (q0, q1, outcomes)
                })
                .collect();
            Ok(PureRun::Factorized {
                num_qubits: layout.total_qubits(),
                pairs,
            })
        } else {
            let state = self.dense_state(ops, layout)?;
            let outcomes: Vec<(u64, f64)> = state
                .amplitudes()
                .iter()
                .enumerate()
                .filter(|(_, z)| z.norm() >= PRUNE_AMPLITUDE)
                .map(|(i, z)| (i as u64, z.norm_sqr()))
                .collect();
            let cumulative = outcomes
                .iter()
                .scan(0.0, |acc, &(_, p)| {
                    *acc += p;
                    Some(*acc)
                })
                .collect();
            Ok(PureRun::Dense {
                num_qubits: layout.total_qubits(),
                outcomes,
                cumulative,
            })
        }
    }

    /// Expected payoff of every player when each plays an independent mixture.
    pub fn expected_payoffs(
        &self,
        profile: &[MixedStrategy],
        spec: &GameSpec,
        layout: &QubitLayout,
        method: Method,
    ) -> Result<PayoffReport> {
        self.expected_payoffs_with(profile, spec, layout, method, SimulationPath::Auto)
    }

    pub fn expected_payoffs_with(
        &self,
        profile: &[MixedStrategy],
        spec: &GameSpec,
        layout: &QubitLayout,
        method: Method,
        path: SimulationPath,
    ) -> Result<PayoffReport> {
        spec.check_layout(layout)?;
        check_profile_shape(profile.iter().map(|m| m.width()), layout)?;
        let combos = Combos::new(profile);
        match method {
            Method::Exact => self.exact(profile, spec, layout, &combos, path),
            Method::MonteCarlo { samples, seed } => self.monte_carlo(profile, spec, layout, &combos, path, samples, seed),
        }
    }

    fn exact(
        &self,
        profile: &[MixedStrategy],
        spec: &GameSpec,
        layout: &QubitLayout,
        combos: &Combos,
        path: SimulationPath,
    ) -> Result<PayoffReport> {
        if combos.total > self.limits.max_work {
            return Err(Error::Capacity(format!(
                "{} strategy combinations exceed the work limit {}; use Monte Carlo",
                combos.total, self.limits.max_work
            )));
        }
        let n = spec.n();
        let work = AtomicU64::new(0);
        let partials: Vec<Option<Vec<f64>>> = (0..combos.total)
            .into_par_iter()
            .map(|index| -> Result<Option<Vec<f64>>> {
                let choice = combos.decode(index);
                let weight: f64 = choice.iter().zip(profile).map(|(&c, m)| m.probabilities()[c]).product();
                if weight == 0.0 {
                    return Ok(None);
                }
                let ops: Vec<&[SingleQubitOp]> = choice.iter().zip(profile).map(|(&c, m)| m.support()[c].ops()).collect();
                let run = self.prepare(&ops, layout, path)?;
                let done = work.fetch_add(run.num_outcomes(), Ordering::Relaxed).saturating_add(run.num_outcomes());
                if done > self.limits.max_work {
                    return Err(Error::Capacity(format!(
                        "exact enumeration exceeds the work limit of {} weighted outcomes; use Monte Carlo",
                        self.limits.max_work
                    )));
                }
                let mut acc = vec![0.0; n];
                let mut buf = vec![0.0; n];
                run.for_each_outcome(|bits, p| {
                    spec.payoffs_raw(bits, layout, &mut buf);
                    for (a, b) in acc.iter_mut().zip(&buf) {
                        *a += p * b;
                    }
                });
                acc.iter_mut().for_each(|a| *a *= weight);
                Ok(Some(acc))
            })
            .collect::<Result<_>>()?;
        let mut expected = vec![0.0; n];
        for partial in partials.into_iter().flatten() {
            for (e, p) in expected.iter_mut().zip(partial) {
                *e += p;
            }
        }
        Ok(PayoffReport {
            expected,
            estimate: Estimate::Exact,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn monte_carlo(
        &self,
        profile: &[MixedStrategy],
        spec: &GameSpec,
        layout: &QubitLayout,
        combos: &Combos,
        path: SimulationPath,
        samples: u64,
        seed: u64,
    ) -> Result<PayoffReport> {
        if samples < 2 {
            return Err(Error::invalid("Monte Carlo needs at least 2 samples"));
        }
        let n = spec.n();
        let cache: Option<Vec<OnceLock<PureRun>>> =
            (combos.total <= MC_CACHE_COMBOS).then(|| (0..combos.total).map(|_| OnceLock::new()).collect());
        let run_for = |index: u64, choice: &[usize]| -> Result<std::borrow::Cow<'_, PureRun>> {
            let build = || {
                let ops: Vec<&[SingleQubitOp]> = choice.iter().zip(profile).map(|(&c, m)| m.support()[c].ops()).collect();
                self.prepare(&ops, layout, path)
            };
            match &cache {
                Some(cache) => {
                    let slot = &cache[index as usize];
                    if let Some(run) = slot.get() {
                        return Ok(std::borrow::Cow::Borrowed(run));
                    }
                    let run = build()?;
                    Ok(std::borrow::Cow::Borrowed(slot.get_or_init(|| run)))
                }
                None => build().map(std::borrow::Cow::Owned),
            }
        };

        let chunks = samples.div_ceil(MC_CHUNK);
        let streams_per_chunk = n as u64 + 1;
        let partials: Vec<(Vec<f64>, Vec<f64>)> = (0..chunks)
            .into_par_iter()
            .map(|chunk| -> Result<(Vec<f64>, Vec<f64>)> {
                let count = MC_CHUNK.min(samples - chunk * MC_CHUNK);
                let mut player_rngs: Vec<_> = (0..n as u64)
                    .map(|k| substream(seed, chunk * streams_per_chunk + k))
                    .collect();
                let mut outcome_rng = substream(seed, chunk * streams_per_chunk + n as u64);
                let mut sum = vec![0.0; n];
                let mut sum_sq = vec![0.0; n];
                let mut choice = vec![0usize; n];
                let mut bits = vec![0u8; layout.total_qubits()];
                let mut buf = vec![0.0; n];
                for _ in 0..count {
                    for (k, rng) in player_rngs.iter_mut().enumerate() {
                        choice[k] = sample_index(&profile[k], rng);
                    }
                    let run = run_for(combos.encode(&choice), &choice)?;
                    run.sample_into(&mut outcome_rng, &mut bits);
                    spec.payoffs_raw(&bits, layout, &mut buf);
                    for k in 0..n {
                        sum[k] += buf[k];
                        sum_sq[k] += buf[k] * buf[k];
                    }
                }
                Ok((sum, sum_sq))
            })
            .collect::<Result<_>>()?;

        let mut sum = vec![0.0; n];
        let mut sum_sq = vec![0.0; n];
        for (s, q) in partials {
            for k in 0..n {
                sum[k] += s[k];
                sum_sq[k] += q[k];
            }
        }
        let count = samples as f64;
        let expected: Vec<f64> = sum.iter().map(|s| s / count).collect();
        let std_error = sum
            .iter()
            .zip(&sum_sq)
            .map(|(s, q)| {
                let var = ((q - s * s / count) / (count - 1.0)).max(0.0);
                (var / count).sqrt()
            })
            .collect();
        Ok(PayoffReport {
            expected,
            estimate: Estimate::MonteCarlo {
                samples,
                seed,
                std_error,
            },
        })
    }
}

fn check_profile_shape(widths: impl ExactSizeIterator<Item = usize>, layout: &QubitLayout) -> Result<()> {
    if widths.len() != layout.n() {
        return Err(Error::invalid(format!(
            "profile has {} players, layout has {}",
            widths.len(),
            layout.n()
        )));
    }
    for (k, w) in widths.enumerate() {
        if w != layout.owned(k).len() {
            return Err(Error::invalid(format!(
                "player {k} supplies {w} operators for {} owned qubits",
                layout.owned(k).len()
            )));
        }
    }
    Ok(())
}

/// Mixed-radix indexing of support combinations, player 0 most significant.
struct Combos {
    radix: Vec<u64>,
    total: u64,
}

impl Combos {
    fn new(profile: &[MixedStrategy]) -> Self {
        let radix: Vec<u64> = profile.iter().map(|m| m.support().len() as u64).collect();
        let total = radix.iter().fold(1u64, |acc, &r| acc.saturating_mul(r));
        Self { radix, total }
    }

    fn decode(&self, mut index: u64) -> Vec<usize> {
        let mut out = vec![0; self.radix.len()];
        for (slot, &r) in out.iter_mut().zip(&self.radix).rev() {
            *slot = (index % r) as usize;
            index /= r;
        }
        out
    }

    fn encode(&self, choice: &[usize]) -> u64 {
        choice
            .iter()
            .zip(&self.radix)
            .fold(0u64, |acc, (&c, &r)| acc.wrapping_mul(r).wrapping_add(c as u64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{build_layout, EntanglementScheme};
    use crate::payoff::{payoff_vector, Interpretation};
    use crate::qcore::build_operator;
    use crate::strategy::{canonical_u, classical_flip, paper_mixture};
    use std::f64::consts::{PI, TAU};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn game(n: usize, a: f64, scheme: EntanglementScheme, interp: Interpretation) -> (GameSpec, QubitLayout) {
        (
            GameSpec::homogeneous(n, a, scheme, interp).unwrap(),
            build_layout(scheme, n).unwrap(),
        )
    }

    fn uniform_profile(layout: &QubitLayout, op: SingleQubitOp) -> Vec<PureStrategy> {
        layout
            .ownership()
            .iter()
            .map(|o| PureStrategy::uniform(op, o.len()).unwrap())
            .collect()
    }

    fn random_op(rng: &mut impl rand::Rng) -> SingleQubitOp {
        build_operator(rng.random::<f64>() * PI, rng.random::<f64>() * TAU, rng.random::<f64>() * TAU).unwrap()
    }

    #[test]
    fn pair_states_for_canonical_choices() {
        let (u0, u1) = (canonical_u(false), canonical_u(true));
        let cases = [
            (u0, u0, [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]),
            (u0, u1, [c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]),
            (u1, u0, [c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]),
            (u1, u1, [c(-1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]),
        ];
        for (a, b, expected) in cases {
            let got = pair_final_state(&a, &b);
            for k in 0..4 {
                assert!((got[k] - expected[k]).norm() < 1e-15, "{got:?} vs {expected:?}");
            }
        }
    }

    #[test]
    fn pair_state_matches_dense_register() {
        let mut rng = substream(3, 0);
        for _ in 0..50 {
            let (a, b) = (random_op(&mut rng), random_op(&mut rng));
            let (spec, layout) = game(2, 1.5, EntanglementScheme::AllPairs, Interpretation::Partial);
            let profile = vec![PureStrategy::new(vec![a]).unwrap(), PureStrategy::new(vec![b]).unwrap()];
            let dense = Engine::default().run_pure_with(&profile, &spec, &layout, SimulationPath::Dense).unwrap();
            let amps = pair_final_state(&a, &b);
            for (i, z) in amps.iter().enumerate() {
                let bits = Bits::from_index(i as u64, 2);
                assert!((dense.probability(&bits) - z.norm_sqr()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identity_profile_gives_all_cooperate() {
        for (scheme, interp) in [
            (EntanglementScheme::Full, Interpretation::Direct),
            (EntanglementScheme::AllPairs, Interpretation::AllOrNone),
            (EntanglementScheme::NeighborRing, Interpretation::Partial),
        ] {
            let (spec, layout) = game(4, 2.0, scheme, interp);
            let d = Engine::default()
                .run_pure(&uniform_profile(&layout, SingleQubitOp::identity()), &spec, &layout)
                .unwrap();
            let zero = Bits::zeros(layout.total_qubits());
            assert_eq!(d.len(), 1);
            assert!((d.probability(&zero) - 1.0).abs() < 1e-12);
            assert_eq!(payoff_vector(&zero, &spec, &layout).unwrap(), vec![2.0; 4]);
        }
    }

    #[test]
    fn two_player_full_entanglement_against_dense_oracle() {
        use crate::test_oracle::{dense_apply, full_entangler_matrix, kron_mat, op_matrix};
        let (spec, layout) = game(2, 1.5, EntanglementScheme::Full, Interpretation::Direct);
        let (u0, u1) = (canonical_u(false), canonical_u(true));
        let profile = vec![PureStrategy::new(vec![u0]).unwrap(), PureStrategy::new(vec![u1]).unwrap()];
        let d = Engine::default().run_pure(&profile, &spec, &layout).unwrap();

        let mut v = vec![c(0.0, 0.0); 4];
        v[0] = c(1.0, 0.0);
        let v = dense_apply(&full_entangler_matrix(2, Direction::Forward), &v);
        let v = dense_apply(&kron_mat(&op_matrix(&u0), &op_matrix(&u1)), &v);
        let v = dense_apply(&full_entangler_matrix(2, Direction::Adjoint), &v);
        for (i, z) in v.iter().enumerate() {
            assert!((d.probability(&Bits::from_index(i as u64, 2)) - z.norm_sqr()).abs() < 1e-12);
        }
        // deterministic: an odd number of u(1) turns everyone into defectors
        let outcome = d.certain_outcome(1e-12).unwrap();
        assert_eq!(outcome.to_string(), "11");
        assert_eq!(payoff_vector(outcome, &spec, &layout).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn all_defect_mixture_choice_cooperates_on_pairs() {
        let (spec, layout) = game(3, 2.0, EntanglementScheme::AllPairs, Interpretation::AllOrNone);
        let d = Engine::default()
            .run_pure(&uniform_profile(&layout, canonical_u(true)), &spec, &layout)
            .unwrap();
        assert!((d.probability(&Bits::zeros(6)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn factorized_matches_dense_on_random_profiles() {
        let mut rng = substream(11, 0);
        for scheme in [EntanglementScheme::AllPairs, EntanglementScheme::NeighborRing] {
            let (spec, layout) = game(3, 2.0, scheme, Interpretation::Partial);
            for _ in 0..50 {
                let profile: Vec<PureStrategy> = layout
                    .ownership()
                    .iter()
                    .map(|o| PureStrategy::new((0..o.len()).map(|_| random_op(&mut rng)).collect()).unwrap())
                    .collect();
                let engine = Engine::default();
                let dense = engine.run_pure_with(&profile, &spec, &layout, SimulationPath::Dense).unwrap();
                let fact = engine.run_pure_with(&profile, &spec, &layout, SimulationPath::Factorized).unwrap();
                for i in 0..64 {
                    let b = Bits::from_index(i, 6);
                    assert!((dense.probability(&b) - fact.probability(&b)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn classical_profiles_reproduce_classical_payoffs() {
        let (spec, layout) = game(3, 2.0, EntanglementScheme::Full, Interpretation::Direct);
        for mask in 0..8u64 {
            let profile: Vec<_> = (0..3)
                .map(|k| {
                    let defect = mask >> (2 - k) & 1 == 1;
                    PureStrategy::new(vec![if defect { classical_flip() } else { canonical_u(false) }]).unwrap()
                })
                .collect();
            let d = Engine::default().run_pure(&profile, &spec, &layout).unwrap();
            assert_eq!(d.certain_outcome(1e-12).unwrap(), &Bits::from_index(mask, 3));
        }
    }

    #[test]
    fn shape_and_capacity_errors() {
        let (spec, layout) = game(3, 2.0, EntanglementScheme::AllPairs, Interpretation::Partial);
        let bad = vec![PureStrategy::uniform(canonical_u(false), 1).unwrap(); 3];
        assert!(matches!(Engine::default().run_pure(&bad, &spec, &layout), Err(Error::InvalidArgument(_))));

        let tight = Engine::new(Limits { max_amplitudes: 16, max_work: 1 << 20 });
        let (spec, layout) = game(5, 2.0, EntanglementScheme::Full, Interpretation::Direct);
        let profile = uniform_profile(&layout, SingleQubitOp::identity());
        assert!(matches!(tight.run_pure(&profile, &spec, &layout), Err(Error::Capacity(_))));

        let tiny_work = Engine::new(Limits { max_amplitudes: 1 << 20, max_work: 4 });
        let mixture = paper_mixture(&layout);
        assert!(matches!(
            tiny_work.expected_payoffs(&mixture, &spec, &layout, Method::Exact),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn exact_mixture_payoffs() {
        let engine = Engine::default();
        let a = 2.0;
        let cases = [
            (EntanglementScheme::Full, Interpretation::Direct, 4, (1.0 + a) / 2.0),
            (EntanglementScheme::AllPairs, Interpretation::AllOrNone, 3, (1.0 + 3.0 * a) / 4.0),
            (EntanglementScheme::AllPairs, Interpretation::Partial, 3, (1.0 + a) / 2.0),
        ];
        for (scheme, interp, n, expected) in cases {
            let (spec, layout) = game(n, a, scheme, interp);
            let report = engine.expected_payoffs(&paper_mixture(&layout), &spec, &layout, Method::Exact).unwrap();
            assert_eq!(report.estimate, Estimate::Exact);
            for p in report.expected {
                assert!((p - expected).abs() < 1e-12, "{scheme:?}/{interp:?}: {p} vs {expected}");
            }
        }
    }

    #[test]
    fn dense_and_factorized_expectations_agree() {
        let engine = Engine::default();
        let (spec, layout) = game(3, 2.0, EntanglementScheme::NeighborRing, Interpretation::AllOrNone);
        let mix = paper_mixture(&layout);
        let d = engine.expected_payoffs_with(&mix, &spec, &layout, Method::Exact, SimulationPath::Dense).unwrap();
        let f = engine.expected_payoffs_with(&mix, &spec, &layout, Method::Exact, SimulationPath::Factorized).unwrap();
        for (x, y) in d.expected.iter().zip(&f.expected) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn monte_carlo_is_seed_deterministic_and_close() {
        let engine = Engine::default();
        let (spec, layout) = game(3, 2.0, EntanglementScheme::AllPairs, Interpretation::AllOrNone);
        let mix = paper_mixture(&layout);
        let method = Method::MonteCarlo { samples: 20_000, seed: 99 };
        let r1 = engine.expected_payoffs(&mix, &spec, &layout, method).unwrap();
        let r2 = engine.expected_payoffs(&mix, &spec, &layout, method).unwrap();
        assert_eq!(r1, r2);
        let Estimate::MonteCarlo { std_error, samples, seed } = &r1.estimate else {
            panic!("expected a Monte Carlo report");
        };
        assert_eq!((*samples, *seed), (20_000, 99));
        for (p, se) in r1.expected.iter().zip(std_error) {
            assert!(*se > 0.0);
            assert!((p - 1.75).abs() < 4.0 * se);
        }
        let other = engine
            .expected_payoffs(&mix, &spec, &layout, Method::MonteCarlo { samples: 20_000, seed: 100 })
            .unwrap();
        assert_ne!(r1, other);
    }

    #[test]
    fn monte_carlo_does_not_depend_on_thread_count() {
        let (spec, layout) = game(4, 2.0, EntanglementScheme::Full, Interpretation::Direct);
        let mix = paper_mixture(&layout);
        let method = Method::MonteCarlo { samples: 30_000, seed: 5 };
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| Engine::default().expected_payoffs(&mix, &spec, &layout, method).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn pruning_does_not_move_expectations() {
        // pruned factorized enumeration against the unpruned dense amplitudes
        let mut rng = substream(77, 0);
        let engine = Engine::default();
        let (spec, layout) = game(3, 2.0, EntanglementScheme::AllPairs, Interpretation::AllOrNone);
        for _ in 0..20 {
            let mut profile = paper_mixture(&layout);
            profile[0] = MixedStrategy::pure(PureStrategy::new(vec![random_op(&mut rng), canonical_u(true)]).unwrap());
            let fact = engine.expected_payoffs(&profile, &spec, &layout, Method::Exact).unwrap();
            let mut expected = vec![0.0; 3];
            let combos = Combos::new(&profile);
            for index in 0..combos.total {
                let choice = combos.decode(index);
                let weight: f64 = choice.iter().zip(&profile).map(|(&c, m)| m.probabilities()[c]).product();
                let ops: Vec<&[SingleQubitOp]> = choice.iter().zip(&profile).map(|(&c, m)| m.support()[c].ops()).collect();
                let state = engine.dense_state(&ops, &layout).unwrap();
                for (i, z) in state.amplitudes().iter().enumerate() {
                    let p = payoff_vector(&Bits::from_index(i as u64, 6), &spec, &layout).unwrap();
                    for k in 0..3 {
                        expected[k] += weight * z.norm_sqr() * p[k];
                    }
                }
            }
            for (x, y) in fact.expected.iter().zip(&expected) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn combos_round_trip() {
        let layout = build_layout(EntanglementScheme::Full, 3).unwrap();
        let mut profile = paper_mixture(&layout);
        profile[1] = MixedStrategy::new(
            vec![PureStrategy::uniform(canonical_u(false), 1).unwrap(); 3],
            vec![0.2, 0.3, 0.5],
        )
        .unwrap();
        let combos = Combos::new(&profile);
        assert_eq!(combos.total, 12);
        for i in 0..12 {
            assert_eq!(combos.encode(&combos.decode(i)), i);
        }
    }
}
