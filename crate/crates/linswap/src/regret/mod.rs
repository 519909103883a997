//! Online learning with linear-swap regret.
//!
//! A learner repeatedly plays a point `x_t` of a body and then sees a loss
//! vector `ℓ_t`. Its linear-swap regret after `T` rounds is
//! `Σ⟨ℓ_t, x_t⟩ − min_φ Σ⟨ℓ_t, φ(x_t)⟩`, the minimum ranging over affine
//! endomorphisms of the body. [`LinSwapLearner`] runs gradient descent on
//! the maps themselves and plays their fixed points. [`shell_proj`]
//! replaces the intractable projection onto the endomorphism set.
//!
//! ```
//! use linswap::geometry::BoundedBody;
//! use linswap::regret::{exact_linswap_regret, LearnerConfig, LinSwapLearner};
//! use nalgebra::dvector;
//!
//! let body = BoundedBody::simplex(2).unwrap();
//! let mut learner = LinSwapLearner::new(&body, Some(20), LearnerConfig::default()).unwrap();
//! for t in 0..20 {
//!     let loss = if t % 2 == 0 { dvector![1.0, 0.0] } else { dvector![0.0, 1.0] };
//!     learner.observe(&loss).unwrap();
//! }
//! let report = exact_linswap_regret(learner.history(), &body).unwrap();
//! assert!(report.linswap_regret <= 20.0);
//! ```

mod evaluate;
mod learner;
mod ogd;
mod shell;

use nalgebra::DVector;

pub use evaluate::{
    exact_linswap_regret, loss_matrix, running_external_regret, simplex_running_regret,
    RegretReport, EVAL_TOL,
};
pub use learner::{
    working_body, Constants, ConstantsMode, Coordinates, LearnerConfig, LearnerStats,
    LinSwapLearner, Start,
};
pub use ogd::OgdLearner;
pub use shell::{shell_gd_step, shell_proj, ShellProjConfig, ShellProjection, ShellSet};

/// One round of play: the action and the loss it was charged.
#[derive(Clone, Debug, PartialEq)]
pub struct Round {
    pub action: DVector<f64>,
    pub loss: DVector<f64>,
}
