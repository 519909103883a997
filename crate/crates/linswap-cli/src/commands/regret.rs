use std::path::Path;

use linswap::geometry::{BodySpec, Shape};
use linswap::regret::{
    exact_linswap_regret, running_external_regret, simplex_running_regret, ConstantsMode,
    LearnerConfig, LinSwapLearner,
};
use linswap::Error;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{build_body, require, CliError, CliResult, Source};
use crate::output::{sink, to_json, Cell, Table};

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Adversary {
    /// Independent entries uniform in `[0, 1]`.
    Uniform,
    /// One loss vector drawn uniformly once and repeated.
    Constant,
    /// Loss 1 on the largest coordinate of the current action, 0 elsewhere.
    AdaptiveWorstColumn,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Generalized,
    Isotropic,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegretConfig {
    pub body: Source<BodySpec>,
    pub rounds: usize,
    pub adversary: Adversary,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub step_scale: Option<f64>,
    #[serde(default)]
    pub fp_tol: Option<f64>,
    /// Run with doubling restarts instead of telling the learner `rounds`.
    #[serde(default)]
    pub unknown_horizon: bool,
}

#[derive(Debug, Serialize)]
pub struct RegretSummary {
    pub rounds: usize,
    /// `null` when the body has no exact evaluator.
    pub final_regret_exact: Option<f64>,
    pub best_deviation_lower: Option<f64>,
    pub realized_loss: f64,
    /// Shell gradient-descent bound `(2R_φ)²/(2β) + βTG²/2`, in the
    /// caller's loss units.
    pub bound_value: f64,
    pub r_phi: f64,
    pub beta: f64,
    pub eps: f64,
    pub cut_rounds: usize,
    pub ellipsoid_calls: usize,
    pub max_increments: u64,
}

pub fn run(
    cfg: &RegretConfig,
    base: &Path,
    seed: Option<u64>,
    out: Option<&Path>,
) -> CliResult<RegretSummary> {
    require(cfg.rounds >= 1, "rounds must be at least 1")?;
    if let Some(s) = cfg.step_scale {
        require(s > 0.0, "step_scale must be positive")?;
    }
    if let Some(t) = cfg.fp_tol {
        require(t > 0.0, "fp_tol must be positive")?;
    }
    let seed = seed.or(cfg.seed);
    require(
        seed.is_some() || cfg.adversary == Adversary::AdaptiveWorstColumn,
        "a seed is required for a randomized adversary",
    )?;
    let body = build_body(&cfg.body, base)?;
    let mut lc = LearnerConfig {
        mode: match cfg.mode {
            Mode::Generalized => ConstantsMode::Generalized,
            Mode::Isotropic => ConstantsMode::Isotropic,
        },
        ..LearnerConfig::default()
    };
    if let Some(s) = cfg.step_scale {
        lc.step_scale = s;
    }
    if let Some(t) = cfg.fp_tol {
        lc.proj.fp_tol = t;
    }
    let horizon = (!cfg.unknown_horizon).then_some(cfg.rounds);
    let mut learner = LinSwapLearner::new(&body, horizon, lc)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(0));
    let d = body.dim();
    let fixed = DVector::from_fn(d, |_, _| rng.random_range(0.0..1.0));
    for _ in 0..cfg.rounds {
        let loss = match cfg.adversary {
            Adversary::Uniform => DVector::from_fn(d, |_, _| rng.random_range(0.0..1.0)),
            Adversary::Constant => fixed.clone(),
            Adversary::AdaptiveWorstColumn => {
                let mut l = DVector::zeros(d);
                l[learner.next().imax()] = 1.0;
                l
            }
        };
        learner.observe(&loss)?;
    }
    let history = learner.history();
    let simplex = matches!(body.shape(), Shape::Simplex);
    let running = if simplex {
        simplex_running_regret(history)?
    } else {
        running_external_regret(history, &body)?
    };
    let mut header = vec!["round".to_string()];
    header.extend((0..d).map(|j| format!("action_{j}")));
    header.extend((0..d).map(|j| format!("loss_{j}")));
    header.push("cumulative_loss".into());
    header.push(
        if simplex {
            "running_swap_regret"
        } else {
            "running_external_regret"
        }
        .into(),
    );
    let mut table = Table::new(sink(out)?, &header)?;
    let mut cumulative = 0.0;
    for (t, (r, reg)) in history.iter().zip(&running).enumerate() {
        cumulative += r.loss.dot(&r.action);
        let mut cells: Vec<Cell> = vec![(t + 1).into()];
        cells.extend(r.action.iter().map(|v| Cell::from(*v)));
        cells.extend(r.loss.iter().map(|v| Cell::from(*v)));
        cells.push(cumulative.into());
        cells.push((*reg).into());
        table.row(cells)?;
    }
    table.finish()?;
    let exact = match exact_linswap_regret(history, &body) {
        Ok(rep) => Some(rep),
        Err(Error::UnsupportedBody(_)) => None,
        Err(e) => return Err(CliError::Solver(e)),
    };
    let c = *learner.constants();
    let scale = learner.coordinates().loss_scale;
    let t = cfg.rounds as f64;
    Ok(RegretSummary {
        rounds: cfg.rounds,
        final_regret_exact: exact.as_ref().map(|r| r.linswap_regret),
        best_deviation_lower: exact.as_ref().map(|r| r.best_deviation_lower),
        realized_loss: cumulative,
        bound_value: (2.0 * c.r_phi * c.r_phi / c.beta + c.beta * t * c.g * c.g / 2.0) / scale,
        r_phi: c.r_phi,
        beta: c.beta,
        eps: c.eps,
        cut_rounds: learner.stats().cut_rounds,
        ellipsoid_calls: learner.stats().ellipsoid_calls,
        max_increments: learner.stats().max_increments,
    })
}

pub fn summary_json(s: &RegretSummary) -> String {
    to_json(s)
}
