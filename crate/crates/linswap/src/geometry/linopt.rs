use nalgebra::{DMatrix, DVector};

use super::{BoundedBody, Halfspace, Separation, Shape};
use crate::ellipsoid::{log_ball_volume, maximize, Ellipsoid, EngineLimits};
use crate::error::{check_dim, Error, Result};

/// Answer of the linear optimization oracle.
#[derive(Clone, Debug)]
pub struct LinOpt {
    /// A point of the body (up to tolerance) with large objective value.
    pub point: DVector<f64>,
    /// `⟨c, point⟩`.
    pub value: f64,
    /// Certified upper bound on the maximum; equals `value` for the
    /// closed-form shapes.
    pub upper: f64,
}

impl LinOpt {
    fn exact(point: DVector<f64>, c: &DVector<f64>) -> Self {
        let value = c.dot(&point);
        LinOpt {
            point,
            value,
            upper: value,
        }
    }
}

impl BoundedBody {
    /// Maximizes `⟨c, x⟩` over the body.
    ///
    /// Closed forms cover balls, boxes, simplices, vertex lists, capped balls
    /// and affine images of those. Inequality descriptions and intersections
    /// go through [`linopt_cutting_plane`](Self::linopt_cutting_plane). A
    /// zero objective returns the inner center.
    pub fn linopt(&self, c: &DVector<f64>, tol: f64) -> Result<LinOpt> {
        check_dim(self.dim, c.len())?;
        let cn = c.norm();
        if cn == 0.0 {
            return Ok(LinOpt::exact(self.inner_center.clone(), c));
        }
        match &self.shape {
            Shape::Ball { center, radius } => Ok(LinOpt::exact(center + c * (radius / cn), c)),
            Shape::Box { lo, hi } => {
                // Ties (c_i = 0) go to `lo`, the lowest-index vertex.
                let x = DVector::from_fn(lo.len(), |i, _| if c[i] > 0.0 { hi[i] } else { lo[i] });
                Ok(LinOpt::exact(x, c))
            }
            Shape::Simplex => {
                let i = argmax_first(c.iter().copied());
                let mut x = DVector::zeros(self.dim);
                x[i] = 1.0;
                Ok(LinOpt::exact(x, c))
            }
            Shape::VPolytope { vertices } => {
                let i = argmax_first(vertices.iter().map(|v| c.dot(v)));
                Ok(LinOpt::exact(vertices[i].clone(), c))
            }
            Shape::CappedBall {
                radius,
                direction,
                cap,
            } => {
                let radial = c * (radius / cn);
                if direction.dot(&radial) <= *cap {
                    return Ok(LinOpt::exact(radial, c));
                }
                let along = direction * *cap;
                let perp = c - direction * direction.dot(c);
                let pn = perp.norm();
                let x = if pn <= 1e-15 * cn {
                    along
                } else {
                    let s = (radius * radius - cap * cap).max(0.0).sqrt();
                    along + perp * (s / pn)
                };
                Ok(LinOpt::exact(x, c))
            }
            Shape::AffineImage { base, map, .. } => {
                let pulled = map.matrix().transpose() * c;
                let inner = base.linopt(&pulled, tol)?;
                let point = map.apply_unchecked(&inner.point);
                let shift = c.dot(map.offset());
                Ok(LinOpt {
                    value: c.dot(&point),
                    upper: inner.upper + shift,
                    point,
                })
            }
            Shape::HPolytope { rows } => {
                let raw = self.linopt_cutting_plane(c, tol)?;
                Ok(polish_vertex(rows, c, raw, tol))
            }
            Shape::Intersection { .. } => self.linopt_cutting_plane(c, tol),
        }
    }

    /// Maximizes `⟨c, x⟩` with the ellipsoid method driven by the separation
    /// oracle, cutting with the objective whenever the center is feasible.
    ///
    /// Stops once the certified upper bound is within `tol·‖c‖` of the best
    /// feasible value.
    pub fn linopt_cutting_plane(&self, c: &DVector<f64>, tol: f64) -> Result<LinOpt> {
        check_dim(self.dim, c.len())?;
        let cn = c.norm();
        if cn == 0.0 {
            return Ok(LinOpt::exact(self.inner_center.clone(), c));
        }
        let chat = c / cn;
        let n = self.dim;
        let big_r = self.outer_radius * (1.0 + 1e-9) + tol;
        let floor = log_ball_volume(n, (tol * 1e-3).min(self.inner_radius * 1e-3));
        let cap = 40 * (n + 1) * n * ((big_r / (tol * 1e-3)).ln().max(1.0) as usize + 1);
        let found = maximize(
            Ellipsoid::ball(DVector::zeros(n), big_r),
            &chat,
            tol,
            EngineLimits {
                log_volume_floor: floor,
                cap,
            },
            |z| {
                Ok(match self.separate_unchecked(z, tol * 1e-3)? {
                    Separation::Separated(h) => Some(h.normal),
                    Separation::Inside => None,
                })
            },
        )?;
        let best = found.ok_or_else(|| {
            Error::NumericalStall("cutting-plane linopt found no feasible center".into())
        })?;
        Ok(LinOpt {
            value: best.value * cn,
            upper: best.upper * cn,
            point: best.point,
        })
    }
}

fn argmax_first<I: Iterator<Item = f64>>(it: I) -> usize {
    let mut best = 0;
    let mut bv = f64::NEG_INFINITY;
    for (i, v) in it.enumerate() {
        if v > bv {
            bv = v;
            best = i;
        }
    }
    best
}

/// Snaps an approximate maximizer onto the vertex defined by its tightest
/// independent rows and certifies optimality through the row multipliers.
fn polish_vertex(rows: &[Halfspace], c: &DVector<f64>, raw: LinOpt, tol: f64) -> LinOpt {
    let n = c.len();
    let x = &raw.point;
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&i, &j| {
        let si = rows[i].offset - rows[i].normal.dot(x);
        let sj = rows[j].offset - rows[j].normal.dot(x);
        si.partial_cmp(&sj).unwrap_or(std::cmp::Ordering::Equal)
    });
    // Greedy independent selection via Gram-Schmidt.
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut chosen = Vec::new();
    for &i in &order {
        if chosen.len() == n {
            break;
        }
        let mut v = rows[i].normal.clone();
        for b in &basis {
            let p = v.dot(b);
            v -= b * p;
        }
        let vn = v.norm();
        if vn > 1e-8 {
            basis.push(v / vn);
            chosen.push(i);
        }
    }
    if chosen.len() < n {
        return raw;
    }
    let a = DMatrix::from_fn(n, n, |r, k| rows[chosen[r]].normal[k]);
    let b = DVector::from_fn(n, |r, _| rows[chosen[r]].offset);
    let Some(v) = a.clone().lu().solve(&b) else {
        return raw;
    };
    let feasible = rows.iter().all(|h| h.violation(&v) <= tol);
    let val = c.dot(&v);
    if !feasible || val < raw.value - tol * c.norm() {
        return raw;
    }
    // Multipliers y with Aᵀy = c; all nonnegative certifies optimality.
    let upper = match a.transpose().lu().solve(c) {
        Some(y) if y.iter().all(|&yi| yi >= -1e-12 * c.norm()) => val,
        _ => raw.upper.max(val),
    };
    LinOpt {
        point: v,
        value: val,
        upper,
    }
}
