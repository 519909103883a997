use nalgebra::DVector;

use super::eah::CorrelatedSolution;
use super::game::ConvexGame;
use crate::endo::{minimize_over_endomorphisms, pairing};
use crate::error::{check_dim, Error, Result};

/// Tolerance of the linear program behind [`lce_gap`].
pub const GAP_TOL: f64 = 1e-9;

/// Largest expected gain of player `i` from an affine deviation of their own
/// strategy under `solution`:
/// `max_φ Σ_k λ_k ⟨g_i(x^k), φ(x_i^k) − x_i^k⟩`.
///
/// This is a linear program over the endomorphisms of the player's body,
/// solved exactly for simplices and polytopes. The identity gives 0, so the
/// result is clamped at 0 against round-off.
pub fn lce_gap(solution: &CorrelatedSolution, game: &ConvexGame, i: usize) -> Result<f64> {
    if i >= game.players() {
        return Err(Error::InvalidArgument(format!("player {i} out of range")));
    }
    check_dim(solution.atoms.len(), solution.weights.len())?;
    let body = game.body(i);
    let d = body.dim();
    let mut c = DVector::zeros(d * (d + 1));
    let mut base = 0.0;
    for (atom, &w) in solution.atoms.iter().zip(&solution.weights) {
        let g = game.gradient(i, atom)?;
        base += w * g.dot(&atom[i]);
        c += pairing(&g, &atom[i]) * w;
    }
    let best = -minimize_over_endomorphisms(body, &-c, GAP_TOL)?.value;
    Ok((best - base).max(0.0))
}

/// [`lce_gap`] for every player.
pub fn lce_gaps(solution: &CorrelatedSolution, game: &ConvexGame) -> Result<Vec<f64>> {
    (0..game.players())
        .map(|i| lce_gap(solution, game, i))
        .collect()
}

/// Running deviation gains of an empirical distribution that grows one
/// profile at a time, for gap curves over rounds.
#[derive(Clone, Debug)]
pub struct RunningGap {
    c: Vec<DVector<f64>>,
    base: Vec<f64>,
    count: usize,
}

impl RunningGap {
    pub fn new(game: &ConvexGame) -> Self {
        RunningGap {
            c: game
                .bodies()
                .iter()
                .map(|b| DVector::zeros(b.dim() * (b.dim() + 1)))
                .collect(),
            base: vec![0.0; game.players()],
            count: 0,
        }
    }

    pub fn push(&mut self, game: &ConvexGame, profile: &[DVector<f64>]) -> Result<()> {
        for i in 0..game.players() {
            let g = game.gradient(i, profile)?;
            self.base[i] += g.dot(&profile[i]);
            self.c[i] += pairing(&g, &profile[i]);
        }
        self.count += 1;
        Ok(())
    }

    /// Gaps of the uniform mixture over the profiles pushed so far.
    pub fn gaps(&self, game: &ConvexGame) -> Result<Vec<f64>> {
        if self.count == 0 {
            return Err(Error::InvalidArgument("no profiles pushed".into()));
        }
        let t = self.count as f64;
        (0..game.players())
            .map(|i| {
                let best = -minimize_over_endomorphisms(game.body(i), &-&self.c[i], GAP_TOL)?.value;
                Ok(((best - self.base[i]) / t).max(0.0))
            })
            .collect()
    }
}
