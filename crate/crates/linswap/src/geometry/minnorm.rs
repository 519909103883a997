//! Wolfe's minimum-norm-point algorithm over a set known through a linear
//! minimization oracle.
//!
//! The set is `K = {Mx + b : x ∈ P}`. The oracle returns an image point
//! together with its preimage in `P`, so the final answer comes with an
//! explicit convex combination of preimages and therefore lies in `P`.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;

pub(crate) struct MinNorm {
    /// Minimum-norm point of `K` found.
    pub image: DVector<f64>,
    /// Matching convex combination of preimages.
    pub preimage: DVector<f64>,
    /// Frank-Wolfe gap `‖x‖² − min_{q∈K} ⟨x, q⟩` at the answer.
    pub gap: f64,
}

const WEIGHT_EPS: f64 = 1e-12;

/// `lmo(x)` must return `argmin_{q ∈ K} ⟨x, q⟩` and its preimage.
pub(crate) fn wolfe<F>(
    mut lmo: F,
    start: (DVector<f64>, DVector<f64>),
    gap_tol: f64,
    max_major: usize,
) -> Result<MinNorm>
where
    F: FnMut(&DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)>,
{
    let mut pts = vec![start.0];
    let mut pre = vec![start.1];
    let mut lam = vec![1.0];
    let mut x = pts[0].clone();
    let mut gap = f64::INFINITY;

    for _ in 0..max_major {
        let (q, v) = lmo(&x)?;
        let xx = x.norm_squared();
        gap = xx - x.dot(&q);
        if gap <= gap_tol {
            break;
        }
        let scale = 1.0 + q.norm_squared();
        if pts.iter().any(|p| (p - &q).norm_squared() <= 1e-26 * scale) {
            // The oracle answer is already in the corral: numerical floor.
            break;
        }
        pts.push(q);
        pre.push(v);
        lam.push(0.0);

        let mut stalled = false;
        loop {
            let alpha = affine_minimizer(&pts);
            if alpha.iter().all(|&a| a > WEIGHT_EPS) {
                lam = alpha;
                break;
            }
            // Move from the current weights toward alpha until a weight hits zero.
            let mut theta = 1.0f64;
            for i in 0..pts.len() {
                if alpha[i] <= WEIGHT_EPS && lam[i] > alpha[i] {
                    theta = theta.min(lam[i] / (lam[i] - alpha[i]));
                }
            }
            if theta <= 0.0 {
                // Only the point just added would be dropped: numerical floor.
                stalled = true;
            }
            for i in 0..pts.len() {
                lam[i] = (1.0 - theta) * lam[i] + theta * alpha[i];
            }
            let keep: Vec<bool> = lam.iter().map(|&l| l > WEIGHT_EPS).collect();
            if !keep.iter().any(|&k| k) {
                stalled = true;
                lam = vec![1.0; pts.len()];
                break;
            }
            let mut it = keep.iter();
            pts.retain(|_| *it.next().unwrap());
            let mut it = keep.iter();
            pre.retain(|_| *it.next().unwrap());
            lam.retain(|&l| l > WEIGHT_EPS);
            let s: f64 = lam.iter().sum();
            lam.iter_mut().for_each(|l| *l /= s);
            if stalled || pts.len() == 1 {
                break;
            }
        }
        let mut nx = DVector::zeros(x.len());
        for (p, l) in pts.iter().zip(&lam) {
            nx += p * *l;
        }
        let improved = nx.norm_squared() < xx * (1.0 - 1e-15);
        x = nx;
        if stalled || !improved {
            let (q, _) = lmo(&x)?;
            gap = x.norm_squared() - x.dot(&q);
            break;
        }
    }

    let mut preimage = DVector::zeros(pre[0].len());
    for (p, l) in pre.iter().zip(&lam) {
        preimage += p * *l;
    }
    Ok(MinNorm {
        image: x,
        preimage,
        gap,
    })
}

/// Weights `α` (summing to one) of the minimum-norm point of the affine hull.
fn affine_minimizer(pts: &[DVector<f64>]) -> Vec<f64> {
    let k = pts.len();
    if k == 1 {
        return vec![1.0];
    }
    let m = pts[0].len();
    let d = DMatrix::from_fn(m, k - 1, |r, c| pts[c + 1][r] - pts[0][r]);
    let rhs = -&pts[0];
    let svd = d.svd(true, true);
    let smax = svd.singular_values.max();
    let beta = svd
        .solve(&rhs, smax * 1e-12)
        .unwrap_or_else(|_| DVector::zeros(k - 1));
    let mut alpha = Vec::with_capacity(k);
    alpha.push(1.0 - beta.sum());
    alpha.extend(beta.iter().copied());
    alpha
}
