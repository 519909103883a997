//! Random generators of maps and bodies used by tests and experiments.
//!
//! [`verified_endomorphism`] only produces maps that are endomorphisms by
//! construction, so it can be used to test soundness of cuts without
//! deciding membership in `Φ(P)`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use super::AffineMap;
use crate::error::Result;
use crate::geometry::{BoundedBody, Shape};

fn normal_vec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

/// A uniform sample from the ball of the given radius around `center` in
/// flattened coordinates.
pub fn map_in_ball<R: Rng + ?Sized>(
    center: &AffineMap,
    radius: f64,
    rng: &mut R,
) -> Result<AffineMap> {
    let c = center.flatten();
    let n = c.len();
    let g = normal_vec(rng, n);
    let s: f64 = rng.random::<f64>().powf(1.0 / n as f64) * radius;
    AffineMap::from_flat_rect(
        center.output_dim(),
        center.input_dim(),
        &(c + &g * (s / g.norm())),
    )
}

/// One of a few families of maps that send `body` into itself:
/// constants onto sampled points, `λI + (1 − λ)·const`, contractions of
/// the inner ball, column-stochastic matrices on the simplex, and convex
/// combinations of those.
pub fn verified_endomorphism<R: Rng + ?Sized>(
    body: &BoundedBody,
    rng: &mut R,
) -> Result<AffineMap> {
    let k = rng.random_range(1..=3);
    let weights: Vec<f64> = (0..k).map(|_| -> f64 { Exp1.sample(rng) }).collect();
    let total: f64 = weights.iter().sum();
    let d = body.dim();
    let mut m = DMatrix::zeros(d, d);
    let mut b = DVector::zeros(d);
    for w in weights {
        let phi = component(body, rng)?;
        m += phi.matrix() * (w / total);
        b += phi.offset() * (w / total);
    }
    AffineMap::new(m, b)
}

fn component<R: Rng + ?Sized>(body: &BoundedBody, rng: &mut R) -> Result<AffineMap> {
    let d = body.dim();
    let simplex = matches!(body.shape(), Shape::Simplex);
    match rng.random_range(0..4) {
        0 => Ok(AffineMap::constant(&body.sample(rng)?)),
        1 => {
            let lambda: f64 = rng.random();
            let y = body.sample(rng)?;
            AffineMap::new(DMatrix::identity(d, d) * lambda, y * (1.0 - lambda))
        }
        2 if simplex => {
            let m = DMatrix::from_fn(d, d, |_, _| -> f64 { Exp1.sample(rng) });
            let sums = m.row_sum();
            let m = DMatrix::from_fn(d, d, |i, j| m[(i, j)] / sums[j]);
            AffineMap::new(m, DVector::zeros(d))
        }
        _ => {
            // x ↦ a + A(x − a) with ‖A‖₂ ≤ r/(2R) maps the body, which lies
            // within 2R of a, into the inner ball.
            let a = body.inner_center().clone();
            let mut g = DMatrix::from_fn(d, d, |_, _| StandardNormal.sample(rng));
            if simplex {
                let p = DMatrix::identity(d, d) - DMatrix::from_element(d, d, 1.0 / d as f64);
                g = &p * g * &p;
            }
            let norm = g.norm().max(1e-300);
            let s = rng.random::<f64>() * body.inner_radius() / (2.0 * body.outer_radius());
            let am = g * (s / norm);
            let off = &a - &am * &a;
            AffineMap::new(am, off)
        }
    }
}

/// A random bounded polytope in `R^d` containing `B(0, 1/2)` and inside
/// `B(0, 2√d)`: random facets at distance in `[1/2, 3/2]` from the origin,
/// intersected with the cube `[−2, 2]^d`.
pub fn random_hpolytope<R: Rng + ?Sized>(
    d: usize,
    facets: usize,
    rng: &mut R,
) -> Result<BoundedBody> {
    let mut rows = Vec::with_capacity(facets + 2 * d);
    for _ in 0..facets {
        let n = normal_vec(rng, d);
        let n = &n / n.norm();
        rows.push((n, 0.5 + rng.random::<f64>()));
    }
    for i in 0..d {
        for s in [1.0, -1.0] {
            let mut e = DVector::zeros(d);
            e[i] = s;
            rows.push((e, 2.0));
        }
    }
    BoundedBody::hpolytope(rows, DVector::zeros(d), 0.5, 2.0 * (d as f64).sqrt())
}
