//! Affine endomorphisms of convex bodies.
//!
//! `Φ(P)` is the set of affine maps sending `P` into itself, viewed as a
//! convex subset of `R^{d(d+1)}` through [`AffineMap::flatten`]. Deciding
//! membership in `Φ(P)` is tractable for polytopes given by vertices or by
//! inequalities, and hard in general. For arbitrary bodies this module
//! offers the weaker semi-separation oracle: given `φ`, either a fixed point
//! of `φ` inside `P` or a halfspace that contains `Φ(P)` and excludes `φ`.

mod fixed;
mod map;
mod optimize;
pub mod sample;

use nalgebra::DVector;

use crate::error::{check_dim, Result};
use crate::geometry::{BoundedBody, Halfspace, Separation};

pub use fixed::{
    find_fixed_point, semi_separate, FixedPointResult, SemiSeparation, DEFAULT_FP_TOL,
};
pub use map::{pairing, AffineMap};
pub use optimize::{minimize_over_endomorphisms, EndoOptimum};

/// Inner and outer balls of `Φ(P)` in flattened coordinates.
#[derive(Clone, Debug)]
pub struct EndoBounds {
    /// The constant map onto the inner center `a` of `P`.
    pub center_map: AffineMap,
    /// `r/(2R)`.
    pub inner_radius: f64,
    /// `(3R/r)·√(R² + d)`.
    pub outer_radius: f64,
}

impl EndoBounds {
    pub fn of(body: &BoundedBody) -> Self {
        let r = body.inner_radius();
        let big_r = body.outer_radius();
        let d = body.dim() as f64;
        EndoBounds {
            center_map: AffineMap::constant(body.inner_center()),
            inner_radius: r / (2.0 * big_r),
            outer_radius: 3.0 * big_r / r * (big_r * big_r + d).sqrt(),
        }
    }
}

/// Where a [`TransformHalfspace`] came from.
#[derive(Clone, Debug, PartialEq)]
pub enum Provenance {
    /// Semi-separation with residual direction `u` and maximizer `p_u`.
    SemiSeparation { u: DVector<f64>, p_u: DVector<f64> },
    /// Row `row` of an inequality description fails at `witness`.
    HRepViolation { row: usize, witness: DVector<f64> },
    /// The image of vertex `vertex` is cut off by `halfspace`.
    VRepViolation { vertex: usize, halfspace: Halfspace },
}

/// A halfspace over flattened maps, normalized to unit Frobenius norm.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformHalfspace {
    pub halfspace: Halfspace,
    pub provenance: Provenance,
}

impl TransformHalfspace {
    /// Builds the halfspace `⟨u, φ'(p)⟩ ≤ offset` over maps `φ'`.
    pub fn from_pairing(
        u: &DVector<f64>,
        p: &DVector<f64>,
        offset: f64,
        provenance: Provenance,
    ) -> Result<Self> {
        Ok(TransformHalfspace {
            halfspace: Halfspace::new(pairing(u, p), offset)?,
            provenance,
        })
    }

    pub fn violation(&self, phi: &AffineMap) -> f64 {
        self.halfspace.violation(&phi.flatten())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum EndoMembership {
    Member,
    Violated(TransformHalfspace),
}

/// Membership of `φ` in `Φ(P)` for `P = conv(vertices)`: every vertex image
/// must lie in `target`.
pub fn endo_membership_vrep(
    vertices: &[DVector<f64>],
    target: &BoundedBody,
    phi: &AffineMap,
    tol: f64,
) -> Result<EndoMembership> {
    check_dim(target.dim(), phi.output_dim())?;
    for (i, v) in vertices.iter().enumerate() {
        let y = phi.apply(v)?;
        if let Separation::Separated(h) = target.separate(&y, tol)? {
            let t = TransformHalfspace::from_pairing(
                &h.normal,
                v,
                h.offset,
                Provenance::VRepViolation {
                    vertex: i,
                    halfspace: h.clone(),
                },
            )?;
            return Ok(EndoMembership::Violated(t));
        }
    }
    Ok(EndoMembership::Member)
}

/// Membership of `φ` in `Φ(P)` where the target is `{⟨a_i, x⟩ ≤ b_i}`: one
/// linear optimization over `source` per row.
pub fn endo_membership_hrep(
    rows: &[Halfspace],
    source: &BoundedBody,
    phi: &AffineMap,
    tol: f64,
) -> Result<EndoMembership> {
    check_dim(source.dim(), phi.input_dim())?;
    for (i, h) in rows.iter().enumerate() {
        check_dim(phi.output_dim(), h.normal.len())?;
        let pulled = phi.matrix().transpose() * &h.normal;
        let v = source.linopt(&pulled, tol * 1e-3)?.point;
        let image = phi.apply(&v)?;
        if h.normal.dot(&image) > h.offset + tol {
            let t = TransformHalfspace::from_pairing(
                &h.normal,
                &v,
                h.offset,
                Provenance::HRepViolation {
                    row: i,
                    witness: v.clone(),
                },
            )?;
            return Ok(EndoMembership::Violated(t));
        }
    }
    Ok(EndoMembership::Member)
}

/// Inequalities of the probability simplex, including the two halves of
/// `Σx = 1`.
pub fn simplex_rows(d: usize) -> Vec<Halfspace> {
    let mut rows = Vec::with_capacity(d + 2);
    for i in 0..d {
        let mut e = DVector::zeros(d);
        e[i] = -1.0;
        rows.push(Halfspace {
            normal: e,
            offset: 0.0,
        });
    }
    let s = 1.0 / (d as f64).sqrt();
    rows.push(Halfspace {
        normal: DVector::from_element(d, s),
        offset: s,
    });
    rows.push(Halfspace {
        normal: DVector::from_element(d, -s),
        offset: -s,
    });
    rows
}

/// Vertex list of a body when it has one at hand: vertex polytopes,
/// simplices, boxes in low dimension, and affine images of those.
pub fn vertices_of(body: &BoundedBody) -> Option<Vec<DVector<f64>>> {
    use crate::geometry::Shape;
    match body.shape() {
        Shape::VPolytope { vertices } => Some(vertices.clone()),
        Shape::Simplex => Some(
            (0..body.dim())
                .map(|i| {
                    let mut e = DVector::zeros(body.dim());
                    e[i] = 1.0;
                    e
                })
                .collect(),
        ),
        Shape::Box { lo, hi } if lo.len() <= 10 => {
            let d = lo.len();
            Some(
                (0..1usize << d)
                    .map(|mask| {
                        DVector::from_fn(d, |i, _| if mask >> i & 1 == 1 { hi[i] } else { lo[i] })
                    })
                    .collect(),
            )
        }
        Shape::AffineImage { base, map, .. } => {
            vertices_of(base).map(|vs| vs.iter().map(|v| map.apply_unchecked(v)).collect())
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests;
