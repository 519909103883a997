use nalgebra::{DMatrix, DVector};

use super::Round;
use crate::endo::{minimize_over_endomorphisms, pairing, AffineMap};
use crate::error::{Error, Result};
use crate::geometry::{BoundedBody, Shape};

/// The flattened loss matrix `L = (ℓpᵀ | ℓ)` of one round, which satisfies
/// `⟨L, φ⟩ = ⟨ℓ, φ(p)⟩`.
pub fn loss_matrix(action: &DVector<f64>, loss: &DVector<f64>) -> DVector<f64> {
    pairing(loss, action)
}

/// Linear-swap regret of a history, computed exactly.
#[derive(Clone, Debug)]
pub struct RegretReport {
    pub realized_loss: f64,
    /// `Σ⟨ℓ_t, φ*(p_t)⟩` for the best endomorphism `φ*` found.
    pub best_deviation_value: f64,
    /// Certified lower bound on the best deviation value.
    pub best_deviation_lower: f64,
    /// `realized_loss − best_deviation_value`.
    pub linswap_regret: f64,
    pub best_map: AffineMap,
    /// Cumulative realized loss after each round.
    pub cumulative_loss: Vec<f64>,
}

/// Evaluator tolerance on the best deviation value.
pub const EVAL_TOL: f64 = 1e-7;

/// Exact linear-swap regret of `history` on `body`.
///
/// The best deviation minimizes `⟨Σ_t L_t, φ⟩` over `Φ(body)`, which is a
/// closed form on the simplex and an ellipsoid-method linear program on
/// inequality or vertex descriptions. Other shapes are rejected.
pub fn exact_linswap_regret(history: &[Round], body: &BoundedBody) -> Result<RegretReport> {
    let d = body.dim();
    let mut c = DVector::zeros(d * (d + 1));
    let mut cumulative_loss = Vec::with_capacity(history.len());
    let mut realized = 0.0;
    for r in history {
        if r.action.len() != d || r.loss.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: r.action.len(),
            });
        }
        c += loss_matrix(&r.action, &r.loss);
        realized += r.loss.dot(&r.action);
        cumulative_loss.push(realized);
    }
    let opt = minimize_over_endomorphisms(body, &c, EVAL_TOL)?;
    Ok(RegretReport {
        realized_loss: realized,
        best_deviation_value: opt.value,
        best_deviation_lower: opt.lower,
        linswap_regret: realized - opt.value,
        best_map: opt.map,
        cumulative_loss,
    })
}

/// Running linear-swap regret after every round of a history on the
/// probability simplex (where it equals swap regret).
pub fn simplex_running_regret(history: &[Round]) -> Result<Vec<f64>> {
    let Some(first) = history.first() else {
        return Ok(Vec::new());
    };
    let d = first.action.len();
    let mut k = DMatrix::zeros(d, d);
    let mut realized = 0.0;
    let mut out = Vec::with_capacity(history.len());
    for r in history {
        if r.action.len() != d || r.loss.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: r.action.len(),
            });
        }
        k.ger(1.0, &r.loss, &r.action, 1.0);
        realized += r.loss.dot(&r.action);
        let best: f64 = (0..d).map(|j| k.column(j).min()).sum();
        out.push(realized - best);
    }
    Ok(out)
}

/// Running external regret (against the best fixed point of the body) after
/// every round; a lower bound on linear-swap regret for any body.
pub fn running_external_regret(history: &[Round], body: &BoundedBody) -> Result<Vec<f64>> {
    let mut total = DVector::zeros(body.dim());
    let mut realized = 0.0;
    let mut out = Vec::with_capacity(history.len());
    let simplex = matches!(body.shape(), Shape::Simplex);
    for r in history {
        total += &r.loss;
        realized += r.loss.dot(&r.action);
        let best = if simplex {
            total.min()
        } else {
            -body.linopt(&-&total, crate::geometry::DEFAULT_TOL)?.value
        };
        out.push(realized - best);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    fn round(p: DVector<f64>, l: DVector<f64>) -> Round {
        Round { action: p, loss: l }
    }

    #[test]
    fn loss_matrix_identity() {
        let p = dvector![0.2, 0.3, 0.5];
        let l = dvector![1.0, -0.5, 0.25];
        let phi = AffineMap::new(
            DMatrix::from_fn(3, 3, |i, j| (i as f64 + 1.0) * 0.1 - j as f64 * 0.2),
            dvector![0.1, 0.0, -0.3],
        )
        .unwrap();
        let lhs = loss_matrix(&p, &l).dot(&phi.flatten());
        assert!((lhs - l.dot(&phi.apply(&p).unwrap())).abs() < 1e-12);
    }

    #[test]
    fn single_round_swap() {
        let s3 = BoundedBody::simplex(3).unwrap();
        let h = vec![round(dvector![1.0, 0.0, 0.0], dvector![1.0, 0.0, 0.0])];
        let rep = exact_linswap_regret(&h, &s3).unwrap();
        assert_eq!(rep.best_deviation_value, 0.0);
        assert_eq!(rep.linswap_regret, 1.0);
        assert_eq!(simplex_running_regret(&h).unwrap(), vec![1.0]);
    }

    #[test]
    fn zero_losses_have_zero_regret() {
        let s3 = BoundedBody::simplex(3).unwrap();
        let h = vec![round(dvector![0.2, 0.3, 0.5], DVector::zeros(3)); 4];
        assert_eq!(exact_linswap_regret(&h, &s3).unwrap().linswap_regret, 0.0);
        let sq = BoundedBody::cube(dvector![0.0, 0.0], dvector![1.0, 1.0]).unwrap();
        let h = vec![round(dvector![0.2, 0.3], DVector::zeros(2)); 4];
        assert_eq!(exact_linswap_regret(&h, &sq).unwrap().linswap_regret, 0.0);
    }

    #[test]
    fn swap_regret_dominates_external_regret() {
        // Alternating play against a swapping adversary.
        let s2 = BoundedBody::simplex(2).unwrap();
        let h: Vec<Round> = (0..10)
            .map(|t| {
                if t % 2 == 0 {
                    round(dvector![1.0, 0.0], dvector![1.0, 0.0])
                } else {
                    round(dvector![0.0, 1.0], dvector![0.0, 1.0])
                }
            })
            .collect();
        let swap = exact_linswap_regret(&h, &s2).unwrap().linswap_regret;
        let ext = *running_external_regret(&h, &s2).unwrap().last().unwrap();
        assert_eq!(ext, 5.0);
        assert_eq!(swap, 10.0);
        assert!(swap >= ext);
    }

    #[test]
    fn oracle_only_body_is_rejected() {
        let disk = BoundedBody::ball(dvector![0.0, 0.0], 1.0).unwrap();
        let h = vec![round(dvector![0.0, 0.0], dvector![1.0, 0.0])];
        assert!(matches!(
            exact_linswap_regret(&h, &disk),
            Err(Error::UnsupportedBody(_))
        ));
    }
}
