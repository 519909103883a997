use itertools::Itertools;
use nalgebra::{DMatrix, DVector};

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use super::{
    endo_membership_hrep, vertices_of, AffineMap, EndoMembership, Provenance, TransformHalfspace,
};
use crate::error::{check_dim, Error, Result};
use crate::geometry::{BoundedBody, Halfspace};

/// Default fixed-point tolerance.
pub const DEFAULT_FP_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub enum FixedPointResult {
    /// `point` lies in the body and `‖φ(point) − point‖ = residual ≤ fp_tol`.
    Found { point: DVector<f64>, residual: f64 },
    /// No approximate fixed point; `witness` minimizes the squared residual
    /// `min_residual_sq` over the body.
    NotFound {
        min_residual_sq: f64,
        witness: DVector<f64>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum SemiSeparation {
    FixedPoint(DVector<f64>),
    Cut(TransformHalfspace),
}

/// Looks for `p` in the body with `‖φ(p) − p‖ ≤ fp_tol`.
///
/// A well-conditioned `I − M` gives the unique fixed point through one
/// linear solve; it is accepted when it lies in the body. Otherwise the
/// squared residual is minimized over the body with
/// [`quadmin`](BoundedBody::quadmin).
pub fn find_fixed_point(
    body: &BoundedBody,
    phi: &AffineMap,
    fp_tol: f64,
) -> Result<FixedPointResult> {
    if !(fp_tol > 0.0) {
        return Err(Error::InvalidArgument("fp_tol must be positive".into()));
    }
    let d = body.dim();
    check_dim(d, phi.input_dim())?;
    check_dim(d, phi.output_dim())?;
    let a = phi.matrix() - DMatrix::identity(d, d);
    let b = phi.offset();

    if let Some(x) = linear_fixed_point(&a, b) {
        let residual = (&a * &x + b).norm();
        if residual <= fp_tol && body.membership(&x, fp_tol * 1e-2)? {
            return Ok(FixedPointResult::Found { point: x, residual });
        }
    }

    let tol_sq = fp_tol * fp_tol;
    let mut q = body.quadmin(&a, b, tol_sq / 4.0)?;
    let mut res_sq = 2.0 * q.value;
    if res_sq > tol_sq / 2.0 && res_sq <= tol_sq {
        let again = body.quadmin(&a, b, tol_sq / 40.0)?;
        if again.value < q.value {
            q = again;
            res_sq = 2.0 * q.value;
        }
    }
    Ok(if res_sq <= tol_sq {
        FixedPointResult::Found {
            residual: res_sq.max(0.0).sqrt(),
            point: q.point,
        }
    } else {
        FixedPointResult::NotFound {
            min_residual_sq: res_sq,
            witness: q.point,
        }
    })
}

/// Solution of `(M − I)x + b = 0` when `M − I` is comfortably invertible.
fn linear_fixed_point(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let sv = a.clone().svd(true, true);
    let smax = sv.singular_values.max();
    let smin = sv.singular_values.min();
    if !(smin > 1e-10 * smax.max(1.0)) {
        return None;
    }
    let x = sv.solve(&-b, 0.0).ok()?;
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Either a fixed point of `φ` in the body or a halfspace over maps that
/// contains every endomorphism of the body and excludes `φ`.
///
/// With `p*` minimizing `‖φ(p) − p‖` and `u = φ(p*) − p*`, every `p` in the
/// body has `⟨φ(p) − p, u⟩ ≥ ‖u‖²` up to the minimization gap. Taking `p_u`
/// to maximize `⟨u, ·⟩` gives the cut `⟨u, φ'(p_u)⟩ ≤ max⟨u, ·⟩`, which `φ`
/// violates by about `‖u‖²`. The offset is the certified upper bound of the
/// linear optimization, so the cut stays valid when `p_u` is approximate.
pub fn semi_separate(body: &BoundedBody, phi: &AffineMap, fp_tol: f64) -> Result<SemiSeparation> {
    check_dim(body.dim(), phi.input_dim())?;
    check_dim(body.dim(), phi.output_dim())?;
    let mut witness = match find_fixed_point(body, phi, fp_tol)? {
        FixedPointResult::Found { point, .. } => return Ok(SemiSeparation::FixedPoint(point)),
        FixedPointResult::NotFound { witness, .. } => witness,
    };
    if let Some(answer) = simplex_stage(body, phi, fp_tol)? {
        return Ok(answer);
    }
    let mut margin = cut_margin(body, phi, &witness)?.0;
    if margin < fp_tol * fp_tol / 4.0 {
        // The minimizer is only accurate to the floor of the quadratic
        // solver, which can be above fp_tol² for large maps. Polish it with
        // Frank-Wolfe steps evaluated directly on the residual.
        match polish(body, phi, witness, fp_tol)? {
            FixedPointResult::Found { point, .. } => return Ok(SemiSeparation::FixedPoint(point)),
            FixedPointResult::NotFound { witness: w, .. } => witness = w,
        }
        margin = cut_margin(body, phi, &witness)?.0;
    }
    if margin < fp_tol * fp_tol / 4.0 {
        if let Some(p) = body.hrep_rows().and_then(|rows| face_minimizer(&rows, phi)) {
            if (phi.apply(&p)? - &p).norm() <= fp_tol && body.membership(&p, fp_tol)? {
                return Ok(SemiSeparation::FixedPoint(p));
            }
            witness = p;
            margin = cut_margin(body, phi, &witness)?.0;
        }
    }
    if margin < fp_tol * fp_tol / 4.0 {
        // The residual cut is below what f64 can certify for this map. An
        // inequality description gives an exact test of Φ(P) instead: some
        // row fails at the image of some point of the body.
        if let Some(rows) = body.hrep_rows() {
            if let EndoMembership::Violated(t) = endo_membership_hrep(&rows, body, phi, 1e-10)? {
                return Ok(SemiSeparation::Cut(t));
            }
        }
    }
    log::debug!("semi-separation margin {margin:e}");
    if margin < fp_tol * fp_tol / 4.0 {
        return Err(Error::InconsistentOracle { margin });
    }
    let (_, u, lo) = cut_margin(body, phi, &witness)?;
    let t = TransformHalfspace::from_pairing(
        &u,
        &lo.point,
        lo.upper,
        Provenance::SemiSeparation {
            u: u.clone(),
            p_u: lo.point.clone(),
        },
    )?;
    Ok(SemiSeparation::Cut(t))
}

/// Violation by `φ` of the cut built from `witness`, with the residual
/// direction and the linear maximizer.
fn cut_margin(
    body: &BoundedBody,
    phi: &AffineMap,
    witness: &DVector<f64>,
) -> Result<(f64, DVector<f64>, crate::geometry::LinOpt)> {
    let u = phi.apply(witness)? - witness;
    let lo = body.linopt(&u, crate::geometry::DEFAULT_TOL * 1e-3)?;
    let margin = u.dot(&phi.apply(&lo.point)?) - lo.upper;
    Ok((margin, u, lo))
}

/// Frank-Wolfe on `½‖φ(p) − p‖²` from `start`, stopping at a fixed point or
/// once the duality gap is below `fp_tol²/8`.
fn polish(
    body: &BoundedBody,
    phi: &AffineMap,
    start: DVector<f64>,
    fp_tol: f64,
) -> Result<FixedPointResult> {
    let d = body.dim();
    let a = phi.matrix() - DMatrix::identity(d, d);
    let b = phi.offset();
    let mut p = start;
    for _ in 0..2000 {
        let r = &a * &p + b;
        if r.norm() <= fp_tol {
            return Ok(FixedPointResult::Found {
                residual: r.norm(),
                point: p,
            });
        }
        let grad = a.transpose() * &r;
        let v = body
            .linopt(&-&grad, crate::geometry::DEFAULT_TOL * 1e-3)?
            .point;
        let dir = &v - &p;
        let gap = -grad.dot(&dir);
        if gap <= fp_tol * fp_tol / 8.0 {
            break;
        }
        let ad = &a * &dir;
        let step = (-r.dot(&ad) / ad.norm_squared()).clamp(0.0, 1.0);
        if !(step > 0.0) {
            break;
        }
        p += dir * step;
    }
    let res_sq = (&a * &p + b).norm_squared();
    Ok(FixedPointResult::NotFound {
        min_residual_sq: res_sq,
        witness: p,
    })
}

/// Largest number of candidate active sets [`face_minimizer`] will try.
const FACE_BUDGET: usize = 20_000;

/// Exact minimizer of `‖φ(p) − p‖²` over `{p : ⟨n_j, p⟩ ≤ h_j}`.
///
/// Every face of the polytope is the solution set of some independent
/// active rows, and on that set the residual is a least-squares problem.
/// The best feasible face minimizer is the global minimizer. Returns `None`
/// when the number of candidate row sets exceeds [`FACE_BUDGET`].
fn face_minimizer(rows: &[Halfspace], phi: &AffineMap) -> Option<DVector<f64>> {
    let d = phi.input_dim();
    let m = rows.len();
    let mut count = 0usize;
    let mut c = 1usize;
    for k in 0..=d.min(m) {
        count = count.saturating_add(c);
        c = c.saturating_mul(m - k) / (k + 1);
    }
    if count > FACE_BUDGET {
        return None;
    }
    let a = phi.matrix() - DMatrix::identity(d, d);
    let b = phi.offset();
    let scale = 1.0 + rows.iter().map(|h| h.offset.abs()).fold(0.0, f64::max);
    let mut best: Option<(f64, DVector<f64>)> = None;
    for k in 0..=d.min(m) {
        for set in (0..m).combinations(k) {
            let n = DMatrix::from_fn(k, d, |r, c| rows[set[r]].normal[c]);
            let h = DVector::from_fn(k, |r, _| rows[set[r]].offset);
            let (p0, z) = if k == 0 {
                (DVector::zeros(d), DMatrix::identity(d, d))
            } else {
                let svd = n.clone().svd(true, true);
                let smax = svd.singular_values.max();
                if !(svd.singular_values.min() > 1e-10 * smax) {
                    continue;
                }
                let p0 = svd.solve(&h, 1e-12 * smax).ok()?;
                // Null space of the active rows: the trailing right singular
                // vectors of the square completion.
                let full = n.clone().insert_rows(k, d - k, 0.0).svd(false, true);
                let vt = full.v_t?;
                let order = full
                    .singular_values
                    .iter()
                    .enumerate()
                    .sorted_by(|x, y| y.1.total_cmp(x.1))
                    .map(|(i, _)| i)
                    .collect::<Vec<_>>();
                let z = DMatrix::from_fn(d, d - k, |r, c| vt[(order[k + c], r)]);
                (p0, z)
            };
            let p = if z.ncols() == 0 {
                p0
            } else {
                let az = &a * &z;
                let rhs = -(&a * &p0 + b);
                let w = az.svd(true, true).solve(&rhs, 1e-13).ok()?;
                p0 + z * w
            };
            if rows.iter().any(|r| r.violation(&p) > 1e-12 * scale) {
                continue;
            }
            let val = (&a * &p + b).norm_squared();
            if best.as_ref().is_none_or(|(v, _)| val < *v) {
                best = Some((val, p));
            }
        }
    }
    best.map(|(_, p)| p)
}

/// Exact treatment of a full-dimensional simplex `conv(v_0, …, v_d)`.
///
/// The barycentric coordinates of the vertex images form a matrix `μ`.
/// A negative entry `μ_kl` gives the cut `λ_l(φ'(v_k)) ≥ 0`, which every
/// endomorphism satisfies. When `μ` is row-stochastic up to round-off, a
/// stationary distribution `λ` of it yields the fixed point `Σ λ_k v_k`,
/// which lies in the simplex by construction. Returns `None` for other
/// bodies or when the stationary point misses the tolerance.
fn simplex_stage(
    body: &BoundedBody,
    phi: &AffineMap,
    fp_tol: f64,
) -> Result<Option<SemiSeparation>> {
    let d = body.dim();
    let Some(vs) = vertices_of(body).filter(|vs| vs.len() == d + 1) else {
        return Ok(None);
    };
    let hom = DMatrix::from_fn(d + 1, d + 1, |r, c| if r < d { vs[c][r] } else { 1.0 });
    let sv = hom.clone().svd(true, true);
    if !(sv.singular_values.min() > 1e-10 * sv.singular_values.max()) {
        return Ok(None);
    }
    let Some(w) = hom.try_inverse() else {
        return Ok(None);
    };
    let bary = |x: &DVector<f64>| -> DVector<f64> {
        let mut h = x.clone().insert_row(d, 1.0);
        h = &w * h;
        h
    };
    let mut mu = DMatrix::zeros(d + 1, d + 1);
    let mut worst = (0.0, 0, 0);
    for (k, v) in vs.iter().enumerate() {
        let b = bary(&phi.apply_unchecked(v));
        for l in 0..=d {
            if b[l] < worst.0 {
                worst = (b[l], k, l);
            }
        }
        mu.row_mut(k).copy_from(&b.transpose());
    }
    let (min, k, l) = worst;
    if min < -fp_tol * 1e-3 {
        let u: DVector<f64> = -w.row(l).columns(0, d).transpose();
        let offset = w[(l, d)];
        let t = TransformHalfspace::from_pairing(
            &u,
            &vs[k],
            offset,
            Provenance::VRepViolation {
                vertex: k,
                halfspace: Halfspace {
                    normal: u.clone(),
                    offset,
                },
            },
        )?;
        return Ok(Some(SemiSeparation::Cut(t)));
    }
    for k in 0..=d {
        let mut row = mu.row(k).map(|v| v.max(0.0));
        let s = row.sum();
        row /= s;
        mu.row_mut(k).copy_from(&row);
    }
    let Some(lambda) = stationary(&mu) else {
        return Ok(None);
    };
    let p = vs
        .iter()
        .zip(lambda.iter())
        .fold(DVector::zeros(d), |acc, (v, l)| acc + v * *l);
    let residual = (phi.apply_unchecked(&p) - &p).norm();
    Ok((residual <= fp_tol).then_some(SemiSeparation::FixedPoint(p)))
}

/// A stationary distribution of the row-stochastic matrix `mu`.
fn stationary(mu: &DMatrix<f64>) -> Option<DVector<f64>> {
    let m = mu.nrows();
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = (0..m).map(|_| lp.add_var(0.0, (0.0, 1.0))).collect();
    for j in 0..m {
        let terms: Vec<_> = (0..m)
            .map(|k| (vars[k], mu[(k, j)] - if k == j { 1.0 } else { 0.0 }))
            .collect();
        lp.add_constraint(terms.as_slice(), ComparisonOp::Eq, 0.0);
    }
    let ones: Vec<_> = vars.iter().map(|v| (*v, 1.0)).collect();
    lp.add_constraint(ones.as_slice(), ComparisonOp::Eq, 1.0);
    let sol = lp.solve().ok()?.into_solution().ok()?;
    let mut lambda = DVector::from_fn(m, |k, _| sol.var_value(vars[k]).max(0.0));
    let s = lambda.sum();
    if !(s > 0.0) {
        return None;
    }
    lambda /= s;
    Some(lambda)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::endo::sample::{map_in_ball, random_hpolytope};

    #[test]
    fn face_minimizer_beats_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for trial in 0..30 {
            let d = 2 + trial % 2;
            let body = random_hpolytope(d, 4, &mut rng).unwrap();
            let rows = body.hrep_rows().unwrap();
            let phi =
                map_in_ball(&AffineMap::constant(&DVector::zeros(d)), 30.0, &mut rng).unwrap();
            let p = face_minimizer(&rows, &phi).unwrap();
            assert!(body.membership(&p, 1e-9).unwrap());
            let res = |x: &DVector<f64>| (phi.apply(x).unwrap() - x).norm_squared();
            let best = res(&p);
            for _ in 0..2000 {
                let x = body.sample(&mut rng).unwrap();
                assert!(best <= res(&x) + 1e-12);
            }
            // Optimality: no direction toward another point of the body
            // decreases the residual.
            let grad = (phi.matrix() - DMatrix::identity(d, d)).transpose()
                * (phi.apply(&p).unwrap() - &p);
            let lo = body.linopt(&-&grad, 1e-12).unwrap();
            assert!(grad.dot(&(&lo.point - &p)) >= -1e-9 * (1.0 + grad.norm()));
        }
    }
}
