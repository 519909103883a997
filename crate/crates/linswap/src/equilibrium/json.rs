use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::eah::{CorrelatedSolution, EahStats};
use super::game::{ConvexGame, NormalForm, PolymatrixPair};
use crate::error::{Error, Result};
use crate::geometry::{BodySpec, Shape};

/// One term `x_iᵀ M x_j` of a polymatrix game, with `M` given by rows.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub player: usize,
    pub opponent: usize,
    pub matrix: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum UtilitySpec {
    /// One payoff tensor per player, flattened with the first player's
    /// action varying slowest.
    NormalForm {
        tensors: Vec<Vec<f64>>,
    },
    Polymatrix {
        pairs: Vec<PairSpec>,
    },
}

/// Serialized form of a [`ConvexGame`].
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GameSpec {
    pub players: usize,
    pub bodies: Vec<BodySpec>,
    pub utilities: UtilitySpec,
}

impl GameSpec {
    pub fn build(&self) -> Result<ConvexGame> {
        if self.players != self.bodies.len() {
            return Err(Error::InvalidGame(format!(
                "{} players but {} bodies",
                self.players,
                self.bodies.len()
            )));
        }
        let bodies = self
            .bodies
            .iter()
            .map(|b| b.build())
            .collect::<Result<Vec<_>>>()?;
        match &self.utilities {
            UtilitySpec::NormalForm { tensors } => {
                if let Some(i) = bodies
                    .iter()
                    .position(|b| !matches!(b.shape(), Shape::Simplex))
                {
                    return Err(Error::InvalidGame(format!(
                        "normal-form utilities need simplex bodies; player {i} has another shape"
                    )));
                }
                let actions = bodies.iter().map(|b| b.dim()).collect();
                let nf = NormalForm::new(actions, tensors.clone())?;
                ConvexGame::new(bodies, Arc::new(nf))
            }
            UtilitySpec::Polymatrix { pairs } => {
                let pairs = pairs
                    .iter()
                    .map(|p| {
                        let rows = p.matrix.len();
                        let cols = p.matrix.first().map_or(0, Vec::len);
                        if p.matrix.iter().any(|r| r.len() != cols) {
                            return Err(Error::InvalidGame("ragged polymatrix matrix".into()));
                        }
                        Ok(PolymatrixPair {
                            player: p.player,
                            opponent: p.opponent,
                            matrix: DMatrix::from_fn(rows, cols, |r, c| p.matrix[r][c]),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                ConvexGame::polymatrix(bodies, pairs)
            }
        }
    }
}

/// Serialized form of a [`CorrelatedSolution`] with optional per-player gaps.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SolutionSpec {
    pub atoms: Vec<Vec<Vec<f64>>>,
    pub weights: Vec<f64>,
    #[serde(default)]
    pub gaps: Vec<f64>,
}

impl SolutionSpec {
    pub fn of(solution: &CorrelatedSolution, gaps: Vec<f64>) -> Self {
        SolutionSpec {
            atoms: solution
                .atoms
                .iter()
                .map(|a| a.iter().map(|x| x.iter().copied().collect()).collect())
                .collect(),
            weights: solution.weights.clone(),
            gaps,
        }
    }

    pub fn solution(&self) -> Result<CorrelatedSolution> {
        if self.atoms.len() != self.weights.len() || self.atoms.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "{} atoms with {} weights",
                self.atoms.len(),
                self.weights.len()
            )));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0))
            || (self.weights.iter().sum::<f64>() - 1.0).abs() > 1e-10
        {
            return Err(Error::InvalidArgument(
                "weights must be a probability vector".into(),
            ));
        }
        Ok(CorrelatedSolution {
            atoms: self
                .atoms
                .iter()
                .map(|a| a.iter().map(|x| DVector::from_column_slice(x)).collect())
                .collect(),
            weights: self.weights.clone(),
            ger_indices: (0..self.atoms.len()).collect(),
            stats: EahStats::default(),
        })
    }
}
