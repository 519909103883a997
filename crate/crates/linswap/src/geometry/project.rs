use nalgebra::{DMatrix, DVector};

use super::minnorm::wolfe;
use super::qp::{project_ball_polyhedron, project_polyhedron};
use super::{BoundedBody, Halfspace, Shape};
use crate::error::{check_dim, Error, Result};

/// Result of [`BoundedBody::quadmin`].
#[derive(Clone, Debug)]
pub struct QuadMin {
    /// Minimizer found, a point of the body.
    pub point: DVector<f64>,
    /// `½‖M·point + b‖²`.
    pub value: f64,
    /// Frank-Wolfe gap `⟨g, x − x'⟩` with `g = Mᵀ(Mx + b)` and `x'` the
    /// oracle minimizer of `⟨g, ·⟩`; it bounds `value − min`.
    pub gap: f64,
}

/// Euclidean projection onto the probability simplex (sort-based).
pub fn project_simplex(y: &DVector<f64>) -> DVector<f64> {
    let mut u: Vec<f64> = y.iter().copied().collect();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - 1.0) / (i as f64 + 1.0);
        if ui - t > 0.0 {
            theta = t;
        }
    }
    y.map(|v| (v - theta).max(0.0))
}

const WOLFE_MAJOR: usize = 5000;

impl BoundedBody {
    /// Euclidean projection.
    ///
    /// Closed forms are used for balls, boxes and simplices. Polyhedral
    /// shapes, capped balls and balls cut by halfspaces go through an exact
    /// active-set quadratic program. Remaining shapes fall back on
    /// [`quadmin`](Self::quadmin) with `M = I`, `b = −y`.
    pub fn project(&self, y: &DVector<f64>, tol: f64) -> Result<DVector<f64>> {
        check_dim(self.dim, y.len())?;
        let qtol = (tol * 1e-3).max(1e-15);
        match &self.shape {
            Shape::Ball { center, radius } => {
                let d = y - center;
                let n = d.norm();
                Ok(if n <= *radius {
                    y.clone()
                } else {
                    center + d * (radius / n)
                })
            }
            Shape::Box { lo, hi } => Ok(DVector::from_fn(y.len(), |i, _| y[i].clamp(lo[i], hi[i]))),
            Shape::Simplex => Ok(project_simplex(y)),
            Shape::HPolytope { rows } => project_polyhedron(y, rows, qtol),
            Shape::CappedBall {
                radius,
                direction,
                cap,
            } => {
                let rows = [Halfspace {
                    normal: direction.clone(),
                    offset: *cap,
                }];
                project_ball_polyhedron(&DVector::zeros(self.dim), *radius, &rows, y, qtol)
            }
            Shape::Intersection { body, halfspaces } => match body.shape() {
                Shape::Ball { center, radius } => {
                    project_ball_polyhedron(center, *radius, halfspaces, y, qtol)
                }
                Shape::CappedBall {
                    radius,
                    direction,
                    cap,
                } => {
                    let mut rows = halfspaces.clone();
                    rows.push(Halfspace {
                        normal: direction.clone(),
                        offset: *cap,
                    });
                    project_ball_polyhedron(&DVector::zeros(self.dim), *radius, &rows, y, qtol)
                }
                _ => match body.hrep_rows() {
                    Some(mut rows) => {
                        rows.extend(halfspaces.iter().cloned());
                        project_polyhedron(y, &rows, qtol)
                    }
                    None => self.project_generic(y, tol),
                },
            },
            Shape::VPolytope { .. } | Shape::AffineImage { .. } => self.project_generic(y, tol),
        }
    }

    fn project_generic(&self, y: &DVector<f64>, tol: f64) -> Result<DVector<f64>> {
        let id = DMatrix::identity(self.dim, self.dim);
        Ok(self.quadmin(&id, &(-y), 0.5 * tol * tol)?.point)
    }

    /// Minimizes `½‖Mx + b‖²` over the body with Wolfe's minimum-norm-point
    /// method on the image `M·body + b`, driven by [`linopt`](Self::linopt).
    ///
    /// Stops when the Frank-Wolfe gap drops below `tol` or no further
    /// progress is numerically possible.
    pub fn quadmin(&self, m: &DMatrix<f64>, b: &DVector<f64>, tol: f64) -> Result<QuadMin> {
        check_dim(self.dim, m.ncols())?;
        check_dim(m.nrows(), b.len())?;
        let ltol = super::DEFAULT_TOL * 1e-3;
        let a = &self.inner_center;
        let start_pre = self.linopt(&-(m.transpose() * (m * a + b)), ltol)?.point;
        let start = (m * &start_pre + b, start_pre);
        let out = wolfe(
            |x| {
                let c = -(m.transpose() * x);
                let v = self.linopt(&c, ltol)?.point;
                Ok((m * &v + b, v))
            },
            start,
            tol,
            WOLFE_MAJOR,
        )?;
        if !out.image.iter().all(|v| v.is_finite()) {
            return Err(Error::NumericalStall("quadmin".into()));
        }
        Ok(QuadMin {
            value: 0.5 * out.image.norm_squared(),
            point: out.preimage,
            gap: out.gap,
        })
    }
}
