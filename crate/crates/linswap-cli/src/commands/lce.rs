use std::path::Path;

use linswap::equilibrium::{compute_lce, lce_gaps, GameSpec, SolutionSpec};
use serde::Deserialize;

use crate::config::{build_game, require, CliResult, Source};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LceConfig {
    pub game: Source<GameSpec>,
    pub eps: f64,
}

/// Solves for an `eps`-approximate linear correlated equilibrium and
/// verifies every player's gap.
pub fn run(cfg: &LceConfig, base: &Path) -> CliResult<SolutionSpec> {
    require(cfg.eps > 0.0, "eps must be positive")?;
    let game = build_game(&cfg.game, base)?;
    let sol = compute_lce(&game, cfg.eps)?;
    log::info!(
        "lce: {} atoms from {} responses (bound {:.1}), {} separations",
        sol.atoms.len(),
        sol.stats.responses,
        sol.stats.response_bound,
        sol.stats.separations
    );
    let gaps = lce_gaps(&sol, &game)?;
    Ok(SolutionSpec::of(&sol, gaps))
}
