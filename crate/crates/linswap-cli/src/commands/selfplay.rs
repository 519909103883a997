use std::path::Path;

use linswap::equilibrium::{selfplay, GameSpec, RunningGap, SelfplayConfig};
use serde::{Deserialize, Serialize};

use crate::config::{build_game, require, CliError, CliResult, Source};
use crate::output::{sink, Cell, Table};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelfplayFile {
    pub game: Source<GameSpec>,
    pub rounds: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Also run projected gradient descent learners for comparison.
    #[serde(default = "yes")]
    pub baseline: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Serialize)]
pub struct SelfplaySummary {
    pub rounds: usize,
    pub final_gaps: Vec<f64>,
    pub final_max_gap: f64,
    pub baseline_final_max_gap: Option<f64>,
    /// Each player's exact linear-swap regret over the run.
    pub linswap_regret: Vec<f64>,
}

/// Runs linear-swap self-play and writes one CSV row per round with the
/// gaps of the empirical distribution so far.
pub fn run(
    cfg: &SelfplayFile,
    base: &Path,
    seed: Option<u64>,
    out: Option<&Path>,
) -> CliResult<SelfplaySummary> {
    require(cfg.rounds >= 1, "rounds must be at least 1")?;
    let seed = seed
        .or(cfg.seed)
        .ok_or_else(|| CliError::Config("a seed is required for self-play".into()))?;
    let game = build_game(&cfg.game, base)?;
    let outcome = selfplay(
        &game,
        &SelfplayConfig {
            rounds: cfg.rounds,
            seed,
            baseline: cfg.baseline,
        },
    )?;
    let n = game.players();
    let mut header = vec!["round".to_string()];
    header.extend((0..n).map(|i| format!("gap_{i}")));
    header.push("max_gap".into());
    if cfg.baseline {
        header.push("baseline_max_gap".into());
    }
    let mut table = Table::new(sink(out)?, &header)?;
    let mut run = RunningGap::new(&game);
    let mut base_run = RunningGap::new(&game);
    let mut last = (Vec::new(), 0.0, None);
    for t in 0..cfg.rounds {
        run.push(&game, &outcome.solution.atoms[t])?;
        let gaps = run.gaps(&game)?;
        let max = gaps.iter().copied().fold(0.0, f64::max);
        let mut cells: Vec<Cell> = vec![(t + 1).into()];
        cells.extend(gaps.iter().map(|g| Cell::from(*g)));
        cells.push(max.into());
        let mut base_max = None;
        if let Some(b) = &outcome.baseline {
            base_run.push(&game, &b.atoms[t])?;
            let m = base_run.gaps(&game)?.into_iter().fold(0.0, f64::max);
            cells.push(m.into());
            base_max = Some(m);
        }
        table.row(cells)?;
        last = (gaps, max, base_max);
    }
    table.finish()?;
    Ok(SelfplaySummary {
        rounds: cfg.rounds,
        final_gaps: last.0,
        final_max_gap: last.1,
        baseline_final_max_gap: last.2,
        linswap_regret: outcome.reports.iter().map(|r| r.linswap_regret).collect(),
    })
}
