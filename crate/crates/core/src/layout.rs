//! Qubit registers and ownership maps for the three entanglement schemes.
//!
//! Pair-based registers are laid out pair-major: pair `p` occupies qubits
//! `2p` and `2p + 1`, and the first player named in the pair owns qubit `2p`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntanglementScheme {
    /// One qubit per player, all entangled by `J_n`.
    Full,
    /// One entangled pair for every pair of players.
    AllPairs,
    /// Pairs between successive players, closed into a ring.
    NeighborRing,
}

impl EntanglementScheme {
    pub fn is_pair_based(self) -> bool {
        !matches!(self, EntanglementScheme::Full)
    }

    pub fn name(self) -> &'static str {
        match self {
            EntanglementScheme::Full => "full",
            EntanglementScheme::AllPairs => "all_pairs",
            EntanglementScheme::NeighborRing => "neighbor_ring",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QubitLayout {
    scheme: EntanglementScheme,
    n: usize,
    total_qubits: usize,
    /// Register positions of each entangled pair.
    pairs: Vec<(usize, usize)>,
    /// Players sharing each pair, in the same order as `pairs`.
    pair_players: Vec<(usize, usize)>,
    ownership: Vec<Vec<usize>>,
    owner: Vec<usize>,
}

impl QubitLayout {
    pub fn scheme(&self) -> EntanglementScheme {
        self.scheme
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn total_qubits(&self) -> usize {
        self.total_qubits
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn pair_players(&self) -> &[(usize, usize)] {
        &self.pair_players
    }

    /// Owned qubit indices of every player, ascending.
    pub fn ownership(&self) -> &[Vec<usize>] {
        &self.ownership
    }

    pub fn owned(&self, player: usize) -> &[usize] {
        &self.ownership[player]
    }

    pub fn owner_of(&self, qubit: usize) -> usize {
        self.owner[qubit]
    }

    fn from_player_pairs(scheme: EntanglementScheme, n: usize, pair_players: Vec<(usize, usize)>) -> Self {
        let total_qubits = 2 * pair_players.len();
        let mut ownership = vec![Vec::new(); n];
        let mut owner = vec![0; total_qubits];
        let mut pairs = Vec::with_capacity(pair_players.len());
        for (p, &(first, second)) in pair_players.iter().enumerate() {
            let (q0, q1) = (2 * p, 2 * p + 1);
            pairs.push((q0, q1));
            ownership[first].push(q0);
            ownership[second].push(q1);
            owner[q0] = first;
            owner[q1] = second;
        }
        for owned in &mut ownership {
            owned.sort_unstable();
        }
        Self {
            scheme,
            n,
            total_qubits,
            pairs,
            pair_players,
            ownership,
            owner,
        }
    }
}

pub fn build_layout(scheme: EntanglementScheme, n: usize) -> Result<QubitLayout> {
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 players, got {n}")));
    }
    match scheme {
        EntanglementScheme::Full => Ok(QubitLayout {
            scheme,
            n,
            total_qubits: n,
            pairs: Vec::new(),
            pair_players: Vec::new(),
            ownership: (0..n).map(|k| vec![k]).collect(),
            owner: (0..n).collect(),
        }),
        EntanglementScheme::AllPairs => {
            let pair_players = (0..n)
                .flat_map(|j| (j + 1..n).map(move |k| (j, k)))
                .collect();
            Ok(QubitLayout::from_player_pairs(scheme, n, pair_players))
        }
        EntanglementScheme::NeighborRing => {
            let order: Vec<usize> = (0..n).collect();
            neighbor_ring_with_order(&order)
        }
    }
}

/// A neighbor ring visiting players in `order`, closing back to `order[0]`.
pub fn neighbor_ring_with_order(order: &[usize]) -> Result<QubitLayout> {
    let n = order.len();
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 players, got {n}")));
    }
    if n == 2 {
        return Err(Error::Unsupported(
            "a neighbor ring of 2 players degenerates to a doubled pair".into(),
        ));
    }
    let mut seen = vec![false; n];
    for &k in order {
        if k >= n || std::mem::replace(&mut seen[k], true) {
            return Err(Error::invalid("ring order must be a permutation of the players"));
        }
    }
    let pair_players = (0..n).map(|i| (order[i], order[(i + 1) % n])).collect();
    Ok(QubitLayout::from_player_pairs(EntanglementScheme::NeighborRing, n, pair_players))
}
