//! Correlated solutions of convex games.
//!
//! A [`ConvexGame`] gives each player a body and a utility that is linear in
//! the player's own strategy, exposed through its gradient. A linear
//! correlated equilibrium is a distribution over strategy profiles under
//! which no player gains more than `ε` in expectation by applying an affine
//! endomorphism of their body to the recommended strategy.
//!
//! [`compute_lce`] finds one as a mixture of polynomially many product
//! profiles. It plays a Correlator, who picks profiles, against a Deviator,
//! who picks one affine deviation per player. Every Deviator point is
//! answered either by a separating halfspace or by a product of fixed points
//! of the deviation maps ([`cd_oracle`]), which the Deviator cannot profit
//! against. An ellipsoid run over Deviator points collects such responses,
//! and a small linear program mixes them. [`lce_gap`] checks any mixture
//! exactly, and [`selfplay`] reaches one by letting every player run a
//! linear-swap learner.
//!
//! ```
//! use linswap::equilibrium::{compute_lce, lce_gap, ConvexGame, NormalForm};
//!
//! // Matching pennies.
//! let nf = NormalForm::new(
//!     vec![2, 2],
//!     vec![vec![1.0, -1.0, -1.0, 1.0], vec![-1.0, 1.0, 1.0, -1.0]],
//! )
//! .unwrap();
//! let game = ConvexGame::normal_form(nf).unwrap();
//! let sol = compute_lce(&game, 1e-3).unwrap();
//! for i in 0..2 {
//!     assert!(lce_gap(&sol, &game, i).unwrap() <= 1e-3 + 1e-6);
//! }
//! ```

mod eah;
mod game;
mod json;
mod lp;
mod selfplay;
mod verify;

pub use eah::{
    cd_oracle, compute_lce, correlator_value, eah_solve, ger_row, CorrelatedSolution, EahProblem,
    EahStats, GerOrSep, EAH_FP_TOL,
};
pub use game::{
    ConvexGame, DeviationProfile, GradientOracle, NormalForm, Polymatrix, PolymatrixPair,
};
pub use json::{GameSpec, PairSpec, SolutionSpec, UtilitySpec};
pub use lp::DeviationOuter;
pub use selfplay::{player_history, selfplay, SelfplayConfig, SelfplayOutcome};
pub use verify::{lce_gap, lce_gaps, RunningGap, GAP_TOL};
