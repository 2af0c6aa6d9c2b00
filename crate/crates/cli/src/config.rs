//! The JSON run configuration and its translation into core types.
//!
//! Angles are given in units of π, so `{"theta": 0, "phi": 1.5, "alpha": 0}`
//! is the canonical defect operator `diag(i, −i)`.

use std::f64::consts::PI;

use qpg_core::{
    build_layout, build_operator, classical_flip, paper_mixture, DeviationSearch, DeviationSet, EntanglementScheme,
    Error, GameSpec, Interpretation, Limits, Method, MixedStrategy, PureStrategy, QubitLayout, Result, SingleQubitOp,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Angles {
    pub theta: f64,
    #[serde(default)]
    pub phi: f64,
    #[serde(default)]
    pub alpha: f64,
}

impl Angles {
    fn operator(&self) -> Result<SingleQubitOp> {
        build_operator(self.theta * PI, self.phi * PI, self.alpha * PI)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixedConfig {
    /// Each entry lists operators for the player's qubits.
    pub support: Vec<Vec<Angles>>,
    pub probabilities: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StrategyConfig {
    /// Every player picks u(0) or u(1) on all owned qubits with probability 1/2.
    #[default]
    PaperMixture,
    /// One bit per player: 0 keeps the identity, 1 applies the classical flip
    /// on every owned qubit.
    Classical { bits: String },
    /// One pure strategy per player. A single operator is reused on every
    /// owned qubit.
    Operators { players: Vec<Vec<Angles>> },
    Mixed { players: Vec<MixedConfig> },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MethodConfig {
    #[default]
    Exact,
    MonteCarlo { samples: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviationConfig {
    /// Deviating player; all players when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub player: Option<usize>,
    #[serde(default)]
    pub set: DeviationSet,
    pub grid: usize,
    pub max_grid_points: usize,
    pub random_samples: usize,
}

impl Default for DeviationConfig {
    fn default() -> Self {
        let d = DeviationSearch::default();
        Self {
            player: None,
            set: d.set,
            grid: d.grid,
            max_grid_points: d.max_grid_points,
            random_samples: d.random_samples,
        }
    }
}

fn default_scheme() -> EntanglementScheme {
    EntanglementScheme::Full
}

/// Everything a run needs. Reports echo this back with defaults filled in, so
/// the echo re-runs to the same result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub a: f64,
    /// Defaults to one unit per player.
    #[serde(default)]
    pub endowments: Option<Vec<f64>>,
    #[serde(default = "default_scheme")]
    pub scheme: EntanglementScheme,
    /// Defaults to direct for full entanglement and partial otherwise.
    #[serde(default)]
    pub interpretation: Option<Interpretation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contribution_caps: Option<Vec<f64>>,
    #[serde(default)]
    pub strategy: StrategyConfig,
    #[serde(default)]
    pub method: MethodConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub format: Format,
    #[serde(default)]
    pub limits: Limits,
    #[serde(default)]
    pub deviation: DeviationConfig,
    /// Per-attempt success probability for the cost model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut config: Self =
            serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("config: {e}")))?;
        if config.endowments.is_none() {
            config.endowments = Some(vec![1.0; config.n]);
        }
        if config.interpretation.is_none() {
            config.interpretation = Some(match config.scheme {
                EntanglementScheme::Full => Interpretation::Direct,
                _ => Interpretation::Partial,
            });
        }
        Ok(config)
    }

    pub fn endowments(&self) -> Vec<f64> {
        self.endowments.clone().unwrap_or_else(|| vec![1.0; self.n])
    }

    pub fn interpretation(&self) -> Interpretation {
        self.interpretation.unwrap_or(Interpretation::Direct)
    }

    pub fn game(&self) -> Result<(GameSpec, QubitLayout)> {
        let endowments = self.endowments();
        if endowments.len() != self.n {
            return Err(Error::InvalidArgument(format!(
                "n = {} but {} endowments given",
                self.n,
                endowments.len()
            )));
        }
        let spec = GameSpec::new(
            self.a,
            endowments,
            self.interpretation(),
            self.scheme,
            self.contribution_caps.clone(),
        )?;
        let layout = build_layout(self.scheme, self.n)?;
        Ok((spec, layout))
    }

    pub fn method(&self) -> Method {
        match self.method {
            MethodConfig::Exact => Method::Exact,
            MethodConfig::MonteCarlo { samples } => Method::MonteCarlo {
                samples,
                seed: self.seed,
            },
        }
    }

    pub fn search(&self) -> DeviationSearch {
        DeviationSearch {
            set: self.deviation.set,
            grid: self.deviation.grid,
            max_grid_points: self.deviation.max_grid_points,
            random_samples: self.deviation.random_samples,
            seed: self.seed,
        }
    }

    pub fn profile(&self, layout: &QubitLayout) -> Result<Vec<MixedStrategy>> {
        let n = layout.n();
        let check_len = |got: usize| {
            if got == n {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("strategy lists {got} players, game has {n}")))
            }
        };
        match &self.strategy {
            StrategyConfig::PaperMixture => Ok(paper_mixture(layout)),
            StrategyConfig::Classical { bits } => {
                check_len(bits.chars().count())?;
                bits.chars()
                    .enumerate()
                    .map(|(k, c)| {
                        let op = match c {
                            '0' => SingleQubitOp::identity(),
                            '1' => classical_flip(),
                            _ => return Err(Error::InvalidArgument(format!("bad classical bit {c:?}"))),
                        };
                        Ok(MixedStrategy::pure(PureStrategy::uniform(op, layout.owned(k).len())?))
                    })
                    .collect()
            }
            StrategyConfig::Operators { players } => {
                check_len(players.len())?;
                players
                    .iter()
                    .enumerate()
                    .map(|(k, ops)| Ok(MixedStrategy::pure(pure(ops, layout.owned(k).len(), k)?)))
                    .collect()
            }
            StrategyConfig::Mixed { players } => {
                check_len(players.len())?;
                players
                    .iter()
                    .enumerate()
                    .map(|(k, m)| {
                        let width = layout.owned(k).len();
                        let support = m.support.iter().map(|ops| pure(ops, width, k)).collect::<Result<_>>()?;
                        MixedStrategy::new(support, m.probabilities.clone())
                    })
                    .collect()
            }
        }
    }
}

fn pure(ops: &[Angles], width: usize, player: usize) -> Result<PureStrategy> {
    let ops = ops.iter().map(Angles::operator).collect::<Result<Vec<_>>>()?;
    match ops.len() {
        1 => PureStrategy::uniform(ops[0], width),
        len if len == width => PureStrategy::new(ops),
        len => Err(Error::InvalidArgument(format!(
            "player {player} owns {width} qubits but {len} operators were given"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_filled_in() {
        let c = RunConfig::parse(r#"{"n": 3, "a": 2}"#).unwrap();
        assert_eq!(c.endowments, Some(vec![1.0; 3]));
        assert_eq!(c.scheme, EntanglementScheme::Full);
        assert_eq!(c.interpretation, Some(Interpretation::Direct));
        let ring = RunConfig::parse(r#"{"n": 3, "a": 2, "scheme": "neighbor_ring"}"#).unwrap();
        assert_eq!(ring.interpretation, Some(Interpretation::Partial));
        assert_eq!(c.strategy, StrategyConfig::PaperMixture);
        assert_eq!(c.method(), Method::Exact);
        let echoed = RunConfig::parse(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(echoed, c);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(RunConfig::parse(r#"{"n": 3, "a": 2, "sheme": "full"}"#).is_err());
        assert!(RunConfig::parse(r#"{"n": 3}"#).is_err());
    }

    #[test]
    fn angles_are_in_units_of_pi() {
        let op = Angles {
            theta: 0.0,
            phi: 1.5,
            alpha: 0.0,
        }
        .operator()
        .unwrap();
        assert_eq!(op, qpg_core::canonical_u(true));
        let flip = Angles {
            theta: 1.0,
            phi: 0.0,
            alpha: 0.5,
        }
        .operator()
        .unwrap();
        assert_eq!(flip, classical_flip());
    }

    #[test]
    fn operator_lists_broadcast_or_match_width() {
        let c = RunConfig::parse(
            r#"{"n": 3, "a": 2, "scheme": "all_pairs", "interpretation": "partial",
                "strategy": {"kind": "operators", "players": [[{"theta": 1}], [{"theta": 0}, {"theta": 1}], [{"theta": 0.5}]]}}"#,
        )
        .unwrap();
        let (_, layout) = c.game().unwrap();
        let profile = c.profile(&layout).unwrap();
        assert_eq!(profile[0].width(), 2);
        let bad = RunConfig {
            strategy: StrategyConfig::Operators {
                players: vec![vec![Angles { theta: 0.0, phi: 0.0, alpha: 0.0 }; 3]; 3],
            },
            ..c
        };
        assert!(bad.profile(&layout).is_err());
    }

    #[test]
    fn classical_profile_length_checked() {
        let c = RunConfig::parse(r#"{"n": 3, "a": 2, "strategy": {"kind": "classical", "bits": "01"}}"#).unwrap();
        let (_, layout) = c.game().unwrap();
        assert!(c.profile(&layout).is_err());
    }
}
