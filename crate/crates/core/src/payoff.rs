//! The classical public-goods model behind the quantum mechanism.
//!
//! Every player `k` holds `y_k` units of private good and contributes `c_k`
//! of it. With total contribution `C`, player `k` receives
//! `P_k = (a/n)·C + y_k − c_k`. Measured bits are turned into contributions
//! by an [`Interpretation`]; bit value 0 means "cooperate".

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::{EntanglementScheme, QubitLayout};
use crate::qcore::Bits;

const VOLUNTARY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpretation {
    /// One bit per player: 0 contributes everything, 1 contributes nothing.
    Direct,
    /// Contribution proportional to the fraction of owned bits equal to 0.
    Partial,
    /// Full contribution if any owned bit is 0.
    AllOrNone,
    /// Full contribution if strictly more than half of the owned bits are 0.
    Majority,
}

impl Interpretation {
    pub fn name(self) -> &'static str {
        match self {
            Interpretation::Direct => "direct",
            Interpretation::Partial => "partial",
            Interpretation::AllOrNone => "all_or_none",
            Interpretation::Majority => "majority",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSpec {
    n: usize,
    a: f64,
    endowments: Vec<f64>,
    interpretation: Interpretation,
    scheme: EntanglementScheme,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    contribution_caps: Option<Vec<f64>>,
}

impl GameSpec {
    pub fn new(
        a: f64,
        endowments: Vec<f64>,
        interpretation: Interpretation,
        scheme: EntanglementScheme,
        contribution_caps: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = endowments.len();
        if n < 2 {
            return Err(Error::invalid(format!("need at least 2 players, got {n}")));
        }
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::invalid(format!("multiplier must be positive and finite, got {a}")));
        }
        if let Some(k) = endowments.iter().position(|y| !(y.is_finite() && *y > 0.0)) {
            return Err(Error::invalid(format!(
                "endowment of player {k} must be positive, got {}",
                endowments[k]
            )));
        }
        match (interpretation, scheme) {
            (Interpretation::Direct, EntanglementScheme::Full) => {}
            (Interpretation::Direct, _) => {
                return Err(Error::Unsupported(
                    "the direct interpretation needs one qubit per player (full scheme)".into(),
                ))
            }
            (_, EntanglementScheme::Full) => {
                return Err(Error::Unsupported(format!(
                    "the {} interpretation needs a pair-based scheme",
                    interpretation.name()
                )))
            }
            _ => {}
        }
        if let Some(caps) = &contribution_caps {
            if interpretation != Interpretation::AllOrNone {
                return Err(Error::Unsupported(
                    "contribution caps are only defined for the all-or-none interpretation".into(),
                ));
            }
            if caps.len() != n {
                return Err(Error::invalid(format!("{} caps for {n} players", caps.len())));
            }
            for (k, (&cap, &y)) in caps.iter().zip(&endowments).enumerate() {
                if !(cap.is_finite() && (0.0..=y).contains(&cap)) {
                    return Err(Error::invalid(format!(
                        "cap {cap} of player {k} outside [0, {y}]"
                    )));
                }
            }
        }
        Ok(Self {
            n,
            a,
            endowments,
            interpretation,
            scheme,
            contribution_caps,
        })
    }

    /// Every player holds one unit of private good.
    pub fn homogeneous(
        n: usize,
        a: f64,
        scheme: EntanglementScheme,
        interpretation: Interpretation,
    ) -> Result<Self> {
        Self::new(a, vec![1.0; n], interpretation, scheme, None)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn endowments(&self) -> &[f64] {
        &self.endowments
    }

    pub fn interpretation(&self) -> Interpretation {
        self.interpretation
    }

    pub fn scheme(&self) -> EntanglementScheme {
        self.scheme
    }

    pub fn contribution_caps(&self) -> Option<&[f64]> {
        self.contribution_caps.as_deref()
    }

    /// Re-runs validation, e.g. after deserializing.
    pub fn validated(self) -> Result<Self> {
        Self::new(
            self.a,
            self.endowments,
            self.interpretation,
            self.scheme,
            self.contribution_caps,
        )
    }

    pub(crate) fn check_layout(&self, layout: &QubitLayout) -> Result<()> {
        if layout.n() != self.n || layout.scheme() != self.scheme {
            return Err(Error::invalid(format!(
                "layout ({}, n={}) does not match game ({}, n={})",
                layout.scheme().name(),
                layout.n(),
                self.scheme.name(),
                self.n
            )));
        }
        Ok(())
    }

    /// Contribution of `player` given the measured register, without bounds checks.
    pub(crate) fn contribution_raw(&self, player: usize, bits: &[u8], layout: &QubitLayout) -> f64 {
        let owned = layout.owned(player);
        let zeros = owned.iter().filter(|&&q| bits[q] == 0).count();
        let y = self.endowments[player];
        match self.interpretation {
            Interpretation::Direct => y * (1 - bits[owned[0]]) as f64,
            Interpretation::Partial => y * zeros as f64 / owned.len() as f64,
            Interpretation::AllOrNone => {
                if zeros > 0 {
                    self.contribution_caps.as_ref().map_or(y, |caps| caps[player])
                } else {
                    0.0
                }
            }
            Interpretation::Majority => {
                if 2 * zeros > owned.len() {
                    y
                } else {
                    0.0
                }
            }
        }
    }

    pub(crate) fn payoffs_raw(&self, bits: &[u8], layout: &QubitLayout, out: &mut [f64]) {
        let mut total = 0.0;
        for (k, slot) in out.iter_mut().enumerate() {
            let c = self.contribution_raw(k, bits, layout);
            total += c;
            *slot = self.endowments[k] - c;
        }
        let share = self.a / self.n as f64 * total;
        out.iter_mut().for_each(|p| *p += share);
    }

    fn check_bits(&self, bits: &Bits, layout: &QubitLayout) -> Result<()> {
        self.check_layout(layout)?;
        if bits.len() != layout.total_qubits() {
            return Err(Error::invalid(format!(
                "bitstring has {} bits, register has {}",
                bits.len(),
                layout.total_qubits()
            )));
        }
        Ok(())
    }
}

pub fn contribution_of(player: usize, bits: &Bits, spec: &GameSpec, layout: &QubitLayout) -> Result<f64> {
    spec.check_bits(bits, layout)?;
    if player >= spec.n {
        return Err(Error::invalid(format!("player {player} out of range")));
    }
    Ok(spec.contribution_raw(player, bits.as_slice(), layout))
}

pub fn payoff_vector(bits: &Bits, spec: &GameSpec, layout: &QubitLayout) -> Result<Vec<f64>> {
    spec.check_bits(bits, layout)?;
    let mut out = vec![0.0; spec.n];
    spec.payoffs_raw(bits.as_slice(), layout, &mut out);
    Ok(out)
}

/// Payoffs for every classical outcome of a one-bit-per-player game, in
/// ascending bitstring order.
pub fn classical_payoff_table(spec: &GameSpec, layout: &QubitLayout) -> Result<Vec<(Bits, Vec<f64>)>> {
    if spec.interpretation != Interpretation::Direct {
        return Err(Error::Unsupported("the classical table uses the direct interpretation".into()));
    }
    spec.check_layout(layout)?;
    if spec.n > 20 {
        return Err(Error::Capacity(format!("2^{} table rows", spec.n)));
    }
    (0..1u64 << spec.n)
        .map(|i| {
            let bits = Bits::from_index(i, spec.n);
            let p = payoff_vector(&bits, spec, layout)?;
            Ok((bits, p))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    /// `a < 1`: nobody contributes and that is efficient.
    NoContributionEfficient,
    /// `1 < a < n`: nobody contributes in equilibrium, full contribution is efficient.
    SocialDilemma,
    /// `a > n`: everyone contributes and that is efficient.
    FullContributionEfficient,
    /// `a = 1` or `a = n`.
    Boundary,
}

pub fn classify_classical(a: f64, n: usize) -> Classification {
    let n = n as f64;
    if a == 1.0 || a == n {
        Classification::Boundary
    } else if a < 1.0 {
        Classification::NoContributionEfficient
    } else if a < n {
        Classification::SocialDilemma
    } else {
        Classification::FullContributionEfficient
    }
}

/// Contributions that are efficient and leave every player at least as well
/// off as universal non-contribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContributionPlan {
    /// `C*`; `None` when wealth is narrow enough that everyone gives everything.
    pub cutoff: Option<f64>,
    /// Number of players contributing their whole endowment.
    pub m: usize,
    /// `c_k` in the caller's player order.
    pub contributions: Vec<f64>,
    /// `sorted_order[i]` is the original index of the i-th poorest player.
    pub sorted_order: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoluntaryCheck {
    pub satisfied: bool,
    /// `(a/n)·Σc_j − c_k` per player.
    pub margins: Vec<f64>,
}

/// Plans contributions for heterogeneous endowments with `1 < a < n`.
///
/// Narrow wealth (`a·ȳ ≥ y_k` for all k) gets full contribution. Otherwise,
/// with endowments sorted ascending, `m` is scanned down from `n − 1` and the
/// first `m` whose cutoff `C* = a·Σ_{j≤m} y_j / (n − an + am)` has a positive
/// denominator and covers `y_m` is taken; ties count as covered. Each player
/// then gives `min(y_k, C*)`.
pub fn plan_heterogeneous(endowments: &[f64], a: f64) -> Result<ContributionPlan> {
    let n = endowments.len();
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 players, got {n}")));
    }
    if !(a.is_finite() && a > 1.0 && a < n as f64) {
        return Err(Error::invalid(format!("planner needs 1 < a < {n}, got {a}")));
    }
    if let Some(y) = endowments.iter().find(|y| !(y.is_finite() && **y > 0.0)) {
        return Err(Error::invalid(format!("endowments must be positive, got {y}")));
    }

    let mut sorted_order: Vec<usize> = (0..n).collect();
    sorted_order.sort_by(|&i, &j| endowments[i].total_cmp(&endowments[j]).then(i.cmp(&j)));

    let mean = endowments.iter().sum::<f64>() / n as f64;
    if endowments.iter().all(|&y| a * mean >= y) {
        return Ok(ContributionPlan {
            cutoff: None,
            m: n,
            contributions: endowments.to_vec(),
            sorted_order,
        });
    }

    let sorted: Vec<f64> = sorted_order.iter().map(|&i| endowments[i]).collect();
    let nf = n as f64;
    let mut trail = Vec::new();
    for m in (1..n).rev() {
        let denominator = nf - a * nf + a * m as f64;
        if denominator <= 0.0 {
            trail.push(format!("m={m}: denominator {denominator} <= 0"));
            continue;
        }
        let head: f64 = sorted[..m].iter().sum();
        let cutoff = a / denominator * head;
        if cutoff < sorted[m - 1] {
            trail.push(format!("m={m}: C*={cutoff} below y={}", sorted[m - 1]));
            continue;
        }
        let contributions = endowments.iter().map(|&y| y.min(cutoff)).collect();
        return Ok(ContributionPlan {
            cutoff: Some(cutoff),
            m,
            contributions,
            sorted_order,
        });
    }
    Err(Error::InfeasiblePlan(trail.join("; ")))
}

pub fn voluntary_margins(contributions: &[f64], a: f64) -> Vec<f64> {
    let share = a / contributions.len() as f64 * contributions.iter().sum::<f64>();
    contributions.iter().map(|c| share - c).collect()
}

pub fn check_voluntary(plan: &ContributionPlan, spec: &GameSpec) -> Result<VoluntaryCheck> {
    if plan.contributions.len() != spec.n {
        return Err(Error::invalid(format!(
            "plan has {} players, game has {}",
            plan.contributions.len(),
            spec.n
        )));
    }
    let margins = voluntary_margins(&plan.contributions, spec.a);
    Ok(VoluntaryCheck {
        satisfied: margins.iter().all(|&m| m >= -VOLUNTARY_TOLERANCE),
        margins,
    })
}
