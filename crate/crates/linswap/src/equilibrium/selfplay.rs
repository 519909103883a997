use nalgebra::DVector;

use super::eah::CorrelatedSolution;
use super::game::ConvexGame;
use crate::error::Result;
use crate::regret::{
    exact_linswap_regret, LearnerConfig, LinSwapLearner, OgdLearner, RegretReport, Round, Start,
};

#[derive(Clone, Copy, Debug)]
pub struct SelfplayConfig {
    pub rounds: usize,
    /// Player `i` starts at a random point drawn with seed `seed + i`.
    pub seed: u64,
    /// Also run projected gradient descent learners on the same game.
    pub baseline: bool,
}

#[derive(Clone, Debug)]
pub struct SelfplayOutcome {
    /// Uniform mixture over the profiles played.
    pub solution: CorrelatedSolution,
    pub reports: Vec<RegretReport>,
    /// Profiles played by the gradient descent learners, when requested.
    pub baseline: Option<CorrelatedSolution>,
}

/// Every player runs its own linear-swap learner, with loss `−g_i/G_i` at
/// the profile played, where `G_i` bounds the entries of the gradient.
pub fn selfplay(game: &ConvexGame, cfg: &SelfplayConfig) -> Result<SelfplayOutcome> {
    let n = game.players();
    let mut learners = (0..n)
        .map(|i| {
            let lc = LearnerConfig {
                start: Start::Random(cfg.seed.wrapping_add(i as u64)),
                ..LearnerConfig::default()
            };
            LinSwapLearner::new(game.body(i), Some(cfg.rounds), lc)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut profiles = Vec::with_capacity(cfg.rounds);
    for _ in 0..cfg.rounds {
        let x: Vec<_> = learners.iter().map(|l| l.next()).collect();
        for (i, l) in learners.iter_mut().enumerate() {
            l.observe(&loss(game, i, &x)?)?;
        }
        profiles.push(x);
    }
    let reports = learners
        .iter()
        .enumerate()
        .map(|(i, l)| exact_linswap_regret(l.history(), game.body(i)))
        .collect::<Result<Vec<_>>>()?;
    let baseline = if cfg.baseline {
        Some(ogd_selfplay(game, cfg.rounds)?)
    } else {
        None
    };
    Ok(SelfplayOutcome {
        solution: CorrelatedSolution::empirical(profiles)?,
        reports,
        baseline,
    })
}

fn loss(game: &ConvexGame, i: usize, x: &[DVector<f64>]) -> Result<DVector<f64>> {
    Ok(-game.gradient(i, x)? / game.oracle().gradient_bound(i))
}

fn ogd_selfplay(game: &ConvexGame, rounds: usize) -> Result<CorrelatedSolution> {
    let mut learners: Vec<_> = game
        .bodies()
        .iter()
        .map(|b| OgdLearner::new(b, rounds))
        .collect();
    let mut profiles = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        let x: Vec<_> = learners.iter().map(|l| l.next()).collect();
        for (i, l) in learners.iter_mut().enumerate() {
            l.observe(&loss(game, i, &x)?)?;
        }
        profiles.push(x);
    }
    CorrelatedSolution::empirical(profiles)
}

/// The rounds of one player's learner as seen by the regret evaluator.
pub fn player_history(
    solution: &CorrelatedSolution,
    game: &ConvexGame,
    i: usize,
) -> Result<Vec<Round>> {
    solution
        .atoms
        .iter()
        .map(|x| {
            Ok(Round {
                action: x[i].clone(),
                loss: loss(game, i, x)?,
            })
        })
        .collect()
}
