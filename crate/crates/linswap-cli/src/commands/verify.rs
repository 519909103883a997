use std::path::Path;

use linswap::equilibrium::{lce_gaps, GameSpec, SolutionSpec};
use serde::{Deserialize, Serialize};

use crate::config::{build_game, load_solution, CliError, CliResult, Source};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub game: Source<GameSpec>,
    pub solution: Source<SolutionSpec>,
    /// When given, the report says whether every gap is at most `eps`.
    #[serde(default)]
    pub eps: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub gaps: Vec<f64>,
    pub max_gap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub within_eps: Option<bool>,
}

pub fn run(cfg: &VerifyConfig, base: &Path) -> CliResult<VerifyReport> {
    let game = build_game(&cfg.game, base)?;
    let sol = load_solution(&cfg.solution, base)?
        .solution()
        .map_err(|e| CliError::Config(format!("solution: {e}")))?;
    for atom in &sol.atoms {
        if atom.len() != game.players() {
            return Err(CliError::Config(format!(
                "an atom has {} strategies for {} players",
                atom.len(),
                game.players()
            )));
        }
        for (b, x) in game.bodies().iter().zip(atom) {
            if x.len() != b.dim() {
                return Err(CliError::Config(
                    "atom strategy has the wrong dimension".into(),
                ));
            }
        }
    }
    let gaps = lce_gaps(&sol, &game)?;
    let max_gap = gaps.iter().copied().fold(0.0, f64::max);
    Ok(VerifyReport {
        within_eps: cfg.eps.map(|e| max_gap <= e),
        gaps,
        max_gap,
    })
}
