use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::shell::{shell_proj, ShellProjConfig, ShellSet};
use super::Round;
use crate::endo::{pairing, AffineMap};
use crate::error::{check_dim, Error, Result};
use crate::geometry::BoundedBody;

/// How the step size, shell radius and projection precision are chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstantsMode {
    /// `R_φ = 4d²`, `β = 4/√T`, `ε = 1/(16d⁴T²)`, the values for a body in
    /// isotropic position.
    Isotropic,
    /// Constants derived from the working body's outer radius `R` with the
    /// inner ball at the origin: `R_φ = R·√(4d+1)`, `G = √d·(R+1)·ℓ_max`,
    /// `β = R_φ/(G√T)` and `ε = 1/(R_φ²T²)`.
    Generalized,
}

/// Where the first action comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Start {
    InnerCenter,
    Random(u64),
}

#[derive(Clone, Copy, Debug)]
pub struct LearnerConfig {
    pub mode: ConstantsMode,
    pub start: Start,
    pub proj: ShellProjConfig,
    /// Multiplier on the step size `β`.
    pub step_scale: f64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            mode: ConstantsMode::Generalized,
            start: Start::InnerCenter,
            proj: ShellProjConfig::default(),
            step_scale: 1.0,
        }
    }
}

/// Step size, shell radius, precision and the loss-matrix norm bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Constants {
    pub r_phi: f64,
    pub beta: f64,
    pub eps: f64,
    pub g: f64,
}

impl Constants {
    pub fn new(
        mode: ConstantsMode,
        d: usize,
        outer_radius: f64,
        loss_bound: f64,
        horizon: usize,
    ) -> Self {
        let df = d as f64;
        let t = horizon.max(1) as f64;
        let g = df.sqrt() * (outer_radius + 1.0) * loss_bound;
        match mode {
            ConstantsMode::Isotropic => Constants {
                r_phi: 4.0 * df * df,
                beta: 4.0 / t.sqrt(),
                eps: 1.0 / (16.0 * df.powi(4) * t * t),
                g,
            },
            ConstantsMode::Generalized => {
                let r_phi = outer_radius * (4.0 * df + 1.0).sqrt();
                Constants {
                    r_phi,
                    beta: r_phi / (g * t.sqrt()),
                    eps: 1.0 / (r_phi * r_phi * t * t),
                    g,
                }
            }
        }
    }
}

/// Affine change of coordinates between the caller's space and the body
/// the learner works on.
#[derive(Clone, Debug)]
pub struct Coordinates {
    /// Working point to caller point; rectangular for the simplex chart.
    pub to_natural: AffineMap,
    /// Losses are transported as `loss_scale · Aᵀℓ` with `A` the linear part
    /// of `to_natural`.
    pub loss_scale: f64,
}

impl Coordinates {
    pub fn loss(&self, l: &DVector<f64>) -> DVector<f64> {
        self.to_natural.matrix().transpose() * l * self.loss_scale
    }

    /// Bound on `|loss(ℓ)|_∞` for `|ℓ|_∞ ≤ 1`.
    pub fn loss_bound(&self) -> f64 {
        let a = self.to_natural.matrix();
        let worst = (0..a.ncols())
            .map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        worst * self.loss_scale
    }
}

/// The working body of a learner on `body` and the coordinates to reach it.
///
/// The flat probability simplex `Δ_d` is first charted onto the corner
/// simplex `{z ≥ 0, Σz ≤ 1}` of `R^{d−1}` by dropping the last coordinate.
/// The result is then preconditioned so that its inner ball is `B(0, 1)`.
pub fn working_body(body: &BoundedBody) -> Result<(BoundedBody, Coordinates)> {
    let (chart_body, chart) = body.chart()?;
    let (pre, work) = chart_body.precondition();
    let to_natural = chart.compose(&pre.inverse)?;
    Ok((
        work,
        Coordinates {
            to_natural,
            loss_scale: 1.0 / pre.scale_bound,
        },
    ))
}

/// Counters describing the work done by the shell projections.
#[derive(Clone, Copy, Debug, Default)]
pub struct LearnerStats {
    pub cut_rounds: usize,
    pub ellipsoid_calls: usize,
    pub max_increments: u64,
    pub restarts: usize,
}

/// Linear-swap regret minimizer: online gradient descent over affine maps
/// of the body, playing a fixed point of the current map.
///
/// Each round the loss `ℓ` at the played point `p` becomes the matrix
/// `L = (ℓpᵀ | ℓ)` with `⟨L, φ⟩ = ⟨ℓ, φ(p)⟩`. The map moves to
/// `φ − βL` and is brought back by [`shell_proj`] to a map with a fixed
/// point, which becomes the next action.
#[derive(Clone, Debug)]
pub struct LinSwapLearner {
    work: BoundedBody,
    coords: Coordinates,
    cfg: LearnerConfig,
    horizon: Option<usize>,
    epoch_len: usize,
    epoch_start: usize,
    constants: Constants,
    base: ShellSet,
    phi: AffineMap,
    p: DVector<f64>,
    t: usize,
    history: Vec<Round>,
    stats: LearnerStats,
    last_shell_cuts: usize,
}

impl LinSwapLearner {
    /// A learner for `horizon` rounds, or for an unknown horizon (doubling
    /// restarts with the epoch length `1, 2, 4, …`) when `None`.
    pub fn new(body: &BoundedBody, horizon: Option<usize>, cfg: LearnerConfig) -> Result<Self> {
        if horizon == Some(0) {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        let (work, coords) = working_body(body)?;
        let d = work.dim();
        let p = match cfg.start {
            Start::InnerCenter => work.inner_center().clone(),
            Start::Random(seed) => work.sample(&mut ChaCha8Rng::seed_from_u64(seed))?,
        };
        let epoch_len = horizon.unwrap_or(1);
        let constants = Constants::new(
            cfg.mode,
            d,
            work.outer_radius(),
            coords.loss_bound(),
            epoch_len,
        );
        let base = ShellSet::ball(DVector::zeros(d * (d + 1)), constants.r_phi);
        log::info!(
            "learner: working dim {d}, r = {}, R = {:.6e}, R_phi = {:.6e}, beta = {:.6e}, eps = {:.6e}",
            work.inner_radius(),
            work.outer_radius(),
            constants.r_phi,
            constants.beta,
            constants.eps
        );
        Ok(LinSwapLearner {
            phi: AffineMap::identity(d),
            work,
            coords,
            cfg,
            horizon,
            epoch_len,
            epoch_start: 0,
            constants,
            base,
            p,
            t: 0,
            history: Vec::new(),
            stats: LearnerStats::default(),
            last_shell_cuts: 0,
        })
    }

    /// The action for the current round, in the caller's coordinates.
    pub fn next(&self) -> DVector<f64> {
        self.coords.to_natural.apply_unchecked(&self.p)
    }

    /// Feeds the loss of the current round. Entries are clipped to
    /// `[−1, 1]`.
    pub fn observe(&mut self, loss: &DVector<f64>) -> Result<()> {
        check_dim(self.coords.to_natural.output_dim(), loss.len())?;
        let clipped = loss.map(|v| v.clamp(-1.0, 1.0));
        if clipped != *loss {
            log::warn!("round {}: loss entries clipped to [-1, 1]", self.t + 1);
        }
        self.history.push(Round {
            action: self.next(),
            loss: clipped.clone(),
        });
        let lw = self.coords.loss(&clipped);
        let lm = pairing(&lw, &self.p);
        let target = self.phi.flatten() - lm * (self.constants.beta * self.cfg.step_scale);
        let out = shell_proj(
            &self.work,
            &self.base,
            &target,
            self.constants.eps,
            &self.cfg.proj,
        )?;
        let residual = (out.map.apply(&out.fixed_point)? - &out.fixed_point).norm();
        if !(residual <= self.cfg.proj.fp_tol) {
            return Err(Error::FixedPointMissing { residual });
        }
        self.stats.cut_rounds += out.cut_rounds;
        self.stats.ellipsoid_calls += out.ellipsoid_calls;
        self.stats.max_increments = self.stats.max_increments.max(out.increments);
        self.last_shell_cuts = out.shell.cuts().len();
        self.phi = out.map;
        self.p = out.fixed_point;
        self.t += 1;
        if self.horizon.is_none() && self.t - self.epoch_start == self.epoch_len {
            self.restart();
        }
        Ok(())
    }

    fn restart(&mut self) {
        self.epoch_start = self.t;
        self.epoch_len *= 2;
        let d = self.work.dim();
        self.constants = Constants::new(
            self.cfg.mode,
            d,
            self.work.outer_radius(),
            self.coords.loss_bound(),
            self.epoch_len,
        );
        self.base = ShellSet::ball(DVector::zeros(d * (d + 1)), self.constants.r_phi);
        self.phi = AffineMap::identity(d);
        self.stats.restarts += 1;
    }

    pub fn round(&self) -> usize {
        self.t
    }

    pub fn constants(&self) -> &Constants {
        &self.constants
    }

    pub fn coordinates(&self) -> &Coordinates {
        &self.coords
    }

    pub fn working_body(&self) -> &BoundedBody {
        &self.work
    }

    /// Current map, in working coordinates.
    pub fn map(&self) -> &AffineMap {
        &self.phi
    }

    /// Current action, in working coordinates.
    pub fn working_action(&self) -> &DVector<f64> {
        &self.p
    }

    pub fn history(&self) -> &[Round] {
        &self.history
    }

    pub fn stats(&self) -> &LearnerStats {
        &self.stats
    }

    /// Number of cuts in the shell built during the last round.
    pub fn last_shell_cuts(&self) -> usize {
        self.last_shell_cuts
    }
}
