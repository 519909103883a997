use nalgebra::DVector;

use super::Round;
use crate::error::{check_dim, Result};
use crate::geometry::{BoundedBody, DEFAULT_TOL};

/// Projected online gradient descent over the body itself, a
/// no-external-regret baseline.
#[derive(Clone, Debug)]
pub struct OgdLearner {
    body: BoundedBody,
    x: DVector<f64>,
    eta: f64,
    history: Vec<Round>,
}

impl OgdLearner {
    /// Step size `D/(G√T)` with `D = 2R` and `G = √d`, starting at the inner
    /// center.
    pub fn new(body: &BoundedBody, horizon: usize) -> Self {
        let d = body.dim() as f64;
        let eta = 2.0 * body.outer_radius() / (d.sqrt() * (horizon.max(1) as f64).sqrt());
        OgdLearner {
            x: body.inner_center().clone(),
            body: body.clone(),
            eta,
            history: Vec::new(),
        }
    }

    pub fn next(&self) -> DVector<f64> {
        self.x.clone()
    }

    pub fn observe(&mut self, loss: &DVector<f64>) -> Result<()> {
        check_dim(self.body.dim(), loss.len())?;
        self.history.push(Round {
            action: self.x.clone(),
            loss: loss.clone(),
        });
        self.x = self
            .body
            .project(&(&self.x - loss * self.eta), DEFAULT_TOL)?;
        Ok(())
    }

    pub fn history(&self) -> &[Round] {
        &self.history
    }
}
