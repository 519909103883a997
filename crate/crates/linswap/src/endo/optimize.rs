use nalgebra::{DMatrix, DVector};

use super::{
    endo_membership_hrep, endo_membership_vrep, vertices_of, AffineMap, EndoBounds, EndoMembership,
};
use crate::ellipsoid::{log_ball_volume, maximize, Ellipsoid, EngineLimits};
use crate::error::{check_dim, Error, Result};
use crate::geometry::{BoundedBody, Shape};

/// Minimizer of a linear objective over `Φ(P)`.
#[derive(Clone, Debug)]
pub struct EndoOptimum {
    pub map: AffineMap,
    /// Objective at `map`.
    pub value: f64,
    /// Certified lower bound on the minimum.
    pub lower: f64,
}

/// Minimizes `⟨c, φ⟩` over endomorphisms `φ` of `body`, with `c` in the
/// flattened layout of [`AffineMap::flatten`].
///
/// The probability simplex has a closed form: each column of the optimal
/// matrix is the vertex minimizing the matching column of `c`. Inequality
/// descriptions and vertex lists run the ellipsoid method over the exact
/// membership oracles. `tol` bounds `value − lower`. Other shapes have no
/// tractable membership oracle and are rejected.
pub fn minimize_over_endomorphisms(
    body: &BoundedBody,
    c: &DVector<f64>,
    tol: f64,
) -> Result<EndoOptimum> {
    let d = body.dim();
    check_dim(d * (d + 1), c.len())?;
    let cn = c.norm();
    if cn == 0.0 {
        return Ok(EndoOptimum {
            map: AffineMap::identity(d),
            value: 0.0,
            lower: 0.0,
        });
    }
    if let Shape::Simplex = body.shape() {
        return simplex_closed_form(c, d);
    }
    let mtol = 0.1 * tol / cn;
    if let Some(rows) = body.hrep_rows() {
        return by_ellipsoid(body, c, tol, |phi| {
            endo_membership_hrep(&rows, body, phi, mtol)
        });
    }
    if let Some(vertices) = vertices_of(body) {
        return by_ellipsoid(body, c, tol, |phi| {
            endo_membership_vrep(&vertices, body, phi, mtol)
        });
    }
    Err(Error::UnsupportedBody(
        "linear optimization over endomorphisms needs a simplex, inequalities or vertices".into(),
    ))
}

fn simplex_closed_form(c: &DVector<f64>, d: usize) -> Result<EndoOptimum> {
    let k = DMatrix::from_column_slice(d, d, &c.as_slice()[..d * d]);
    let off = c.rows(d * d, d);
    // Maps of the simplex are only pinned down on its affine hull, so the
    // objective must be constant along the ambiguous directions.
    let drift = (k.column_sum() - off).norm();
    if drift > 1e-9 * c.norm().max(1.0) {
        return Err(Error::InvalidArgument(
            "objective is unbounded over simplex endomorphisms (offset part inconsistent)".into(),
        ));
    }
    let mut m = DMatrix::zeros(d, d);
    let mut value = 0.0;
    for j in 0..d {
        let col = k.column(j);
        let mut best = 0;
        for i in 1..d {
            if col[i] < col[best] {
                best = i;
            }
        }
        m[(best, j)] = 1.0;
        value += col[best];
    }
    Ok(EndoOptimum {
        map: AffineMap::new(m, DVector::zeros(d))?,
        value,
        lower: value,
    })
}

fn by_ellipsoid<F>(
    body: &BoundedBody,
    c: &DVector<f64>,
    tol: f64,
    mut member: F,
) -> Result<EndoOptimum>
where
    F: FnMut(&AffineMap) -> Result<EndoMembership>,
{
    let d = body.dim();
    let n = d * (d + 1);
    let cn = c.norm();
    let chat = -c / cn;
    let bounds = EndoBounds::of(body);
    let big_r = bounds.outer_radius * (1.0 + 1e-9);
    let ntol = tol / cn;
    let floor = log_ball_volume(n, (ntol * 1e-3).min(bounds.inner_radius * 1e-3));
    let cap = 40 * (n + 1) * n * ((big_r / (ntol * 1e-3)).ln().max(1.0) as usize + 1);
    let found = maximize(
        Ellipsoid::ball(DVector::zeros(n), big_r),
        &chat,
        ntol,
        EngineLimits {
            log_volume_floor: floor,
            cap,
        },
        |z| {
            let phi = AffineMap::from_flat(d, z)?;
            Ok(match member(&phi)? {
                EndoMembership::Member => None,
                EndoMembership::Violated(t) => Some(t.halfspace.normal),
            })
        },
    )?
    .ok_or_else(|| Error::NumericalStall("no endomorphism met during optimization".into()))?;
    Ok(EndoOptimum {
        map: AffineMap::from_flat(d, &found.point)?,
        value: -found.value * cn,
        lower: -found.upper * cn,
    })
}
