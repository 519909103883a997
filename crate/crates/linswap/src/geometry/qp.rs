//! Euclidean projection onto `{x : ⟨a_i, x⟩ ≤ b_i}`, optionally intersected
//! with a ball, by the dual active-set method of Goldfarb and Idnani
//! specialised to an identity Hessian.

use nalgebra::{DMatrix, DVector};

use super::Halfspace;
use crate::error::{Error, Result};

/// Projection of `y` onto the polyhedron described by unit-normal rows.
pub(crate) fn project_polyhedron(
    y: &DVector<f64>,
    rows: &[Halfspace],
    tol: f64,
) -> Result<DVector<f64>> {
    let n = y.len();
    let mut x = y.clone();
    let mut active: Vec<usize> = Vec::new();
    let mut u: Vec<f64> = Vec::new();
    let cap = 50 * (rows.len() + n) + 100;
    let mut iters = 0;

    loop {
        // Most violated constraint.
        let mut p = usize::MAX;
        let mut worst = tol;
        for (i, h) in rows.iter().enumerate() {
            let v = h.violation(&x);
            if v > worst && !active.contains(&i) {
                worst = v;
                p = i;
            }
        }
        if p == usize::MAX {
            return Ok(x);
        }
        let ap = &rows[p].normal;
        let mut up = 0.0;
        loop {
            iters += 1;
            if iters > cap {
                return Err(Error::NumericalStall("polyhedral projection".into()));
            }
            let (z, r) = step_direction(rows, &active, ap);
            let zz = z.norm_squared();
            let viol = rows[p].violation(&x);
            let t2 = if zz > 1e-20 { viol / zz } else { f64::INFINITY };
            let mut t1 = f64::INFINITY;
            let mut k = usize::MAX;
            for (j, &rj) in r.iter().enumerate() {
                if rj > 1e-14 {
                    let t = u[j] / rj;
                    if t < t1 {
                        t1 = t;
                        k = j;
                    }
                }
            }
            let t = t1.min(t2);
            if !t.is_finite() {
                return Err(Error::InvalidBody("polyhedron is empty".into()));
            }
            if t2.is_finite() {
                x -= &z * t;
            }
            for (j, rj) in r.iter().enumerate() {
                u[j] -= t * rj;
            }
            up += t;
            if t2 <= t1 {
                active.push(p);
                u.push(up);
                break;
            }
            active.remove(k);
            u.remove(k);
        }
    }
}

/// `r = (NᵀN)⁻¹Nᵀa` and `z = a − N r` for the active normals `N`.
fn step_direction(
    rows: &[Halfspace],
    active: &[usize],
    a: &DVector<f64>,
) -> (DVector<f64>, Vec<f64>) {
    if active.is_empty() {
        return (a.clone(), Vec::new());
    }
    let n = a.len();
    let k = active.len();
    let nm = DMatrix::from_fn(n, k, |i, j| rows[active[j]].normal[i]);
    let gram = nm.transpose() * &nm;
    let rhs = nm.transpose() * a;
    let r = match gram.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => {
            let svd = gram.svd(true, true);
            svd.solve(&rhs, 1e-12).unwrap_or_else(|_| DVector::zeros(k))
        }
    };
    let z = a - &nm * &r;
    (z, r.iter().copied().collect())
}

/// Projection onto `B(center, radius) ∩ polyhedron`.
///
/// With multiplier `μ` on the ball, the projection equals the polyhedral
/// projection of `center + θ(y − center)` for `θ = 1/(1+μ)`; `θ` is found by
/// bisection on the ball constraint.
pub(crate) fn project_ball_polyhedron(
    center: &DVector<f64>,
    radius: f64,
    rows: &[Halfspace],
    y: &DVector<f64>,
    tol: f64,
) -> Result<DVector<f64>> {
    let inside_ball = |x: &DVector<f64>| (x - center).norm() <= radius + tol;
    let x1 = project_polyhedron(y, rows, tol)?;
    if inside_ball(&x1) {
        return Ok(x1);
    }
    if rows.is_empty() {
        let d = y - center;
        return Ok(center + &d * (radius / d.norm()));
    }
    let x0 = project_polyhedron(center, rows, tol)?;
    if (&x0 - center).norm() > radius + tol {
        return Err(Error::InvalidBody(
            "ball and polyhedron do not intersect".into(),
        ));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut best = x0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let z = center + (y - center) * mid;
        let x = project_polyhedron(&z, rows, tol)?;
        if (&x - center).norm() <= radius {
            lo = mid;
            best = x;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 {
            break;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    fn hs(n: DVector<f64>, b: f64) -> Halfspace {
        Halfspace::new(n, b).unwrap()
    }

    #[test]
    fn box_clamp() {
        let rows = vec![
            hs(dvector![1.0, 0.0], 1.0),
            hs(dvector![-1.0, 0.0], 0.0),
            hs(dvector![0.0, 1.0], 1.0),
            hs(dvector![0.0, -1.0], 0.0),
        ];
        let x = project_polyhedron(&dvector![2.0, -3.0], &rows, 1e-12).unwrap();
        assert!((x - dvector![1.0, 0.0]).norm() < 1e-12);
        let x = project_polyhedron(&dvector![0.3, 0.4], &rows, 1e-12).unwrap();
        assert!((x - dvector![0.3, 0.4]).norm() < 1e-15);
    }

    #[test]
    fn wedge_vertex() {
        // x + y ≤ 1 and x − y ≤ 1; (5, 0) projects to the apex (1, 0).
        let rows = vec![hs(dvector![1.0, 1.0], 1.0), hs(dvector![1.0, -1.0], 1.0)];
        let x = project_polyhedron(&dvector![5.0, 0.0], &rows, 1e-12).unwrap();
        assert!((x - dvector![1.0, 0.0]).norm() < 1e-12);
        // (2, 2) projects onto the face x + y = 1.
        let x = project_polyhedron(&dvector![2.0, 2.0], &rows, 1e-12).unwrap();
        assert!((x - dvector![0.5, 0.5]).norm() < 1e-12);
    }

    #[test]
    fn capped_disk() {
        let rows = vec![hs(dvector![1.0, 0.0], 0.75)];
        let c = DVector::zeros(2);
        let x = project_ball_polyhedron(&c, 1.0, &rows, &dvector![3.0, 3.0], 1e-12).unwrap();
        // The cap is inactive at the radial projection.
        let h = 0.5f64.sqrt();
        assert!((x - dvector![h, h]).norm() < 1e-9);
        let x = project_ball_polyhedron(&c, 1.0, &rows, &dvector![3.0, 0.5], 1e-12).unwrap();
        assert!((x - dvector![0.75, 0.5]).norm() < 1e-9);
        let x = project_ball_polyhedron(&c, 1.0, &rows, &dvector![0.0, 3.0], 1e-12).unwrap();
        assert!((x - dvector![0.0, 1.0]).norm() < 1e-12);
    }
}
