//! Convex bodies described by oracles.
//!
//! A [`BoundedBody`] couples a concrete shape with certified bounding data:
//! an inner ball `B(a, r)` contained in the body and an outer radius `R`
//! with the body inside `B(0, R)`. Every algorithm downstream only talks to
//! bodies through the oracles defined here: membership, separation, linear
//! optimization, Euclidean projection and convex quadratic minimization.
//!
//! All oracles take an explicit tolerance. A point "within tol" of a body is
//! treated as a member.

mod json;
mod linopt;
mod minnorm;
mod precondition;
mod project;
pub(crate) mod qp;

use nalgebra::DVector;

use crate::endo::AffineMap;
use crate::error::{check_dim, Error, Result};

pub use json::BodySpec;
pub use linopt::LinOpt;
pub use precondition::Preconditioner;
pub use project::{project_simplex, QuadMin};

/// Default tolerance of the geometry oracles.
pub const DEFAULT_TOL: f64 = 1e-9;

/// `{x : ⟨normal, x⟩ ≤ offset}` with a unit normal.
#[derive(Clone, Debug, PartialEq)]
pub struct Halfspace {
    pub normal: DVector<f64>,
    pub offset: f64,
}

impl Halfspace {
    /// Builds a halfspace, rescaling so that the normal has unit length.
    pub fn new(normal: DVector<f64>, offset: f64) -> Result<Self> {
        let n = normal.norm();
        if !(n > 1e-300) || !n.is_finite() || !offset.is_finite() {
            return Err(Error::InvalidArgument(
                "halfspace normal must be finite and nonzero".into(),
            ));
        }
        Ok(Halfspace {
            normal: normal / n,
            offset: offset / n,
        })
    }

    /// `⟨normal, x⟩ − offset`; positive means outside.
    pub fn violation(&self, x: &DVector<f64>) -> f64 {
        self.normal.dot(x) - self.offset
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.violation(x) <= tol
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Separation {
    Inside,
    Separated(Halfspace),
}

#[derive(Clone, Debug)]
pub enum Shape {
    Ball {
        center: DVector<f64>,
        radius: f64,
    },
    Box {
        lo: DVector<f64>,
        hi: DVector<f64>,
    },
    /// The probability simplex `{x ≥ 0, Σx = 1}`. It is flat, so its inner
    /// ball is taken relative to the hyperplane `Σx = 1`.
    Simplex,
    HPolytope {
        rows: Vec<Halfspace>,
    },
    VPolytope {
        vertices: Vec<DVector<f64>>,
    },
    /// `{‖x‖ ≤ radius, ⟨direction, x⟩ ≤ cap}` with a unit direction.
    CappedBall {
        radius: f64,
        direction: DVector<f64>,
        cap: f64,
    },
    /// The image of `base` under an invertible affine map.
    AffineImage {
        base: Box<BoundedBody>,
        map: AffineMap,
        inverse: AffineMap,
    },
    Intersection {
        body: Box<BoundedBody>,
        halfspaces: Vec<Halfspace>,
    },
}

/// A convex body with certified inner and outer balls.
#[derive(Clone, Debug)]
pub struct BoundedBody {
    dim: usize,
    inner_center: DVector<f64>,
    inner_radius: f64,
    outer_radius: f64,
    shape: Shape,
}

fn validate_bounds(dim: usize, a: &DVector<f64>, r: f64, big_r: f64) -> Result<()> {
    check_dim(dim, a.len())?;
    if !(r > 0.0) || !(big_r >= r) || a.norm() > big_r * (1.0 + 1e-12) {
        return Err(Error::InvalidBody(format!(
            "bounding data must satisfy 0 < r <= R and |a| <= R (r = {r}, R = {big_r})"
        )));
    }
    Ok(())
}

impl BoundedBody {
    pub fn ball(center: DVector<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidBody("ball radius must be positive".into()));
        }
        Ok(BoundedBody {
            dim: center.len(),
            inner_center: center.clone(),
            inner_radius: radius,
            outer_radius: center.norm() + radius,
            shape: Shape::Ball { center, radius },
        })
    }

    pub fn cube(lo: DVector<f64>, hi: DVector<f64>) -> Result<Self> {
        check_dim(lo.len(), hi.len())?;
        if lo.iter().zip(hi.iter()).any(|(l, h)| !(h > l)) {
            return Err(Error::InvalidBody(
                "box needs lo < hi in every coordinate".into(),
            ));
        }
        let center = (&lo + &hi) * 0.5;
        let r = lo
            .iter()
            .zip(hi.iter())
            .map(|(l, h)| 0.5 * (h - l))
            .fold(f64::INFINITY, f64::min);
        let far = DVector::from_iterator(
            lo.len(),
            lo.iter().zip(hi.iter()).map(|(l, h)| l.abs().max(h.abs())),
        );
        Ok(BoundedBody {
            dim: lo.len(),
            inner_center: center,
            inner_radius: r,
            outer_radius: far.norm(),
            shape: Shape::Box { lo, hi },
        })
    }

    /// The probability simplex in `R^d`, `d ≥ 2`.
    pub fn simplex(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidBody("simplex needs d >= 2".into()));
        }
        let df = d as f64;
        Ok(BoundedBody {
            dim: d,
            inner_center: DVector::from_element(d, 1.0 / df),
            inner_radius: 1.0 / (df * (df - 1.0)).sqrt(),
            outer_radius: 1.0,
            shape: Shape::Simplex,
        })
    }

    /// Polytope `{x : ⟨a_i, x⟩ ≤ b_i}` with user-supplied bounding data.
    /// Rows are rescaled to unit normals.
    pub fn hpolytope(
        rows: Vec<(DVector<f64>, f64)>,
        inner_center: DVector<f64>,
        inner_radius: f64,
        outer_radius: f64,
    ) -> Result<Self> {
        let dim = inner_center.len();
        validate_bounds(dim, &inner_center, inner_radius, outer_radius)?;
        let mut hs = Vec::with_capacity(rows.len());
        for (a, b) in rows {
            check_dim(dim, a.len())?;
            let h = Halfspace::new(a, b)?;
            if h.violation(&inner_center) + inner_radius > 1e-9 * (1.0 + h.offset.abs()) {
                return Err(Error::InvalidBody(
                    "inner ball is not contained in every row".into(),
                ));
            }
            hs.push(h);
        }
        Ok(BoundedBody {
            dim,
            inner_center,
            inner_radius,
            outer_radius,
            shape: Shape::HPolytope { rows: hs },
        })
    }

    /// Convex hull of the given vertices. The outer radius is the largest
    /// vertex norm; the inner ball has to be supplied.
    pub fn vpolytope(
        vertices: Vec<DVector<f64>>,
        inner_center: DVector<f64>,
        inner_radius: f64,
    ) -> Result<Self> {
        let dim = inner_center.len();
        if vertices.is_empty() {
            return Err(Error::InvalidBody("vertex list is empty".into()));
        }
        for v in &vertices {
            check_dim(dim, v.len())?;
        }
        let outer = vertices.iter().map(|v| v.norm()).fold(0.0, f64::max);
        validate_bounds(dim, &inner_center, inner_radius, outer)?;
        Ok(BoundedBody {
            dim,
            inner_center,
            inner_radius,
            outer_radius: outer,
            shape: Shape::VPolytope { vertices },
        })
    }

    /// `{‖x‖ ≤ radius, ⟨u, x⟩ ≤ cap}` for a direction `u` (normalized here)
    /// and `−radius < cap`.
    pub fn capped_ball(radius: f64, direction: DVector<f64>, cap: f64) -> Result<Self> {
        let n = direction.norm();
        if !(radius > 0.0) || !(n > 0.0) || !(cap > -radius) {
            return Err(Error::InvalidBody(
                "capped ball needs radius > 0, u != 0, cap > -radius".into(),
            ));
        }
        let u = direction / n;
        let cap = cap.min(radius);
        // Largest inscribed ball sits on the axis, tangent to the sphere and the cap.
        let inner_radius = 0.5 * (radius + cap);
        let inner_center = &u * (-0.5 * (radius - cap));
        Ok(BoundedBody {
            dim: u.len(),
            inner_center,
            inner_radius,
            outer_radius: radius,
            shape: Shape::CappedBall {
                radius,
                direction: u,
                cap,
            },
        })
    }

    /// Image of `base` under an invertible square map.
    pub fn affine_image(base: BoundedBody, map: AffineMap) -> Result<Self> {
        check_dim(base.dim, map.input_dim())?;
        let inverse = map
            .inverse()
            .ok_or_else(|| Error::InvalidBody("affine image needs an invertible map".into()))?;
        let sv = map.matrix().clone().singular_values();
        let smax = sv.max();
        let smin = sv.min();
        let inner_center = map.apply_unchecked(&base.inner_center);
        let inner_radius = base.inner_radius * smin;
        let outer = map.offset().norm() + smax * base.outer_radius;
        Ok(BoundedBody {
            dim: map.output_dim(),
            inner_center,
            inner_radius,
            outer_radius: outer.max(inner_radius),
            shape: Shape::AffineImage {
                base: Box::new(base),
                map,
                inverse,
            },
        })
    }

    /// `body ∩ halfspaces`. When the body's own inner ball violates one of
    /// the halfspaces a replacement inner ball must be supplied.
    pub fn intersection(
        body: BoundedBody,
        halfspaces: Vec<Halfspace>,
        inner: Option<(DVector<f64>, f64)>,
    ) -> Result<Self> {
        for h in &halfspaces {
            check_dim(body.dim, h.normal.len())?;
        }
        let (a, r) = match inner {
            Some(v) => v,
            None => {
                let ok = halfspaces
                    .iter()
                    .all(|h| h.violation(&body.inner_center) + body.inner_radius <= 1e-12);
                if !ok {
                    return Err(Error::InvalidBody(
                        "intersection cuts the inner ball; supply a replacement".into(),
                    ));
                }
                (body.inner_center.clone(), body.inner_radius)
            }
        };
        validate_bounds(body.dim, &a, r, body.outer_radius)?;
        Ok(BoundedBody {
            dim: body.dim,
            inner_center: a,
            inner_radius: r,
            outer_radius: body.outer_radius,
            shape: Shape::Intersection {
                body: Box::new(body),
                halfspaces,
            },
        })
    }

    /// A full-dimensional chart of the body and the affine map from chart
    /// coordinates back to the body's own. The flat simplex `Δ_d` is
    /// charted onto the corner simplex of `R^{d−1}` by dropping the last
    /// coordinate. Every other shape is its own chart.
    pub fn chart(&self) -> Result<(BoundedBody, AffineMap)> {
        match self.shape {
            Shape::Simplex => {
                let d = self.dim;
                let e = nalgebra::DMatrix::from_fn(d, d - 1, |i, j| {
                    if i == j {
                        1.0
                    } else if i == d - 1 {
                        -1.0
                    } else {
                        0.0
                    }
                });
                let mut o = DVector::zeros(d);
                o[d - 1] = 1.0;
                Ok((BoundedBody::corner_simplex(d - 1)?, AffineMap::new(e, o)?))
            }
            _ => Ok((self.clone(), AffineMap::identity(self.dim))),
        }
    }

    /// The corner simplex `{z ≥ 0, Σz ≤ 1}` in `R^d` as a vertex list.
    pub fn corner_simplex(d: usize) -> Result<Self> {
        let (a, r) = corner_simplex_inner(d)?;
        let mut vertices = vec![DVector::zeros(d)];
        for i in 0..d {
            let mut e = DVector::zeros(d);
            e[i] = 1.0;
            vertices.push(e);
        }
        Self::vpolytope(vertices, a, r)
    }

    /// The corner simplex `{z ≥ 0, Σz ≤ 1}` as inequalities.
    pub fn corner_simplex_hrep(d: usize) -> Result<Self> {
        let (a, r) = corner_simplex_inner(d)?;
        let mut rows = Vec::with_capacity(d + 1);
        for i in 0..d {
            let mut e = DVector::zeros(d);
            e[i] = -1.0;
            rows.push((e, 0.0));
        }
        rows.push((DVector::from_element(d, 1.0), 1.0));
        Self::hpolytope(rows, a, r, 1.0)
    }

    /// A box written as inequalities.
    pub fn cube_hrep(lo: DVector<f64>, hi: DVector<f64>) -> Result<Self> {
        let cube = Self::cube(lo.clone(), hi.clone())?;
        let d = lo.len();
        let mut rows = Vec::with_capacity(2 * d);
        for i in 0..d {
            let mut e = DVector::zeros(d);
            e[i] = 1.0;
            rows.push((e.clone(), hi[i]));
            rows.push((-e, -lo[i]));
        }
        Self::hpolytope(
            rows,
            cube.inner_center,
            cube.inner_radius,
            cube.outer_radius,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn inner_center(&self) -> &DVector<f64> {
        &self.inner_center
    }

    pub fn inner_radius(&self) -> f64 {
        self.inner_radius
    }

    pub fn outer_radius(&self) -> f64 {
        self.outer_radius
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// True for the probability simplex, whose interior is empty in `R^d`.
    pub fn is_flat(&self) -> bool {
        matches!(self.shape, Shape::Simplex)
    }

    /// Explicit inequality description, when the shape has one.
    pub fn hrep_rows(&self) -> Option<Vec<Halfspace>> {
        match &self.shape {
            Shape::HPolytope { rows } => Some(rows.clone()),
            Shape::Box { lo, hi } => {
                let d = lo.len();
                let mut rows = Vec::with_capacity(2 * d);
                for i in 0..d {
                    let mut e = DVector::zeros(d);
                    e[i] = 1.0;
                    rows.push(Halfspace {
                        normal: e.clone(),
                        offset: hi[i],
                    });
                    rows.push(Halfspace {
                        normal: -e,
                        offset: -lo[i],
                    });
                }
                Some(rows)
            }
            _ => None,
        }
    }

    /// Membership up to distance `tol`.
    pub fn membership(&self, x: &DVector<f64>, tol: f64) -> Result<bool> {
        check_dim(self.dim, x.len())?;
        Ok(self.member_unchecked(x, tol))
    }

    pub(crate) fn member_unchecked(&self, x: &DVector<f64>, tol: f64) -> bool {
        match &self.shape {
            Shape::Ball { center, radius } => (x - center).norm() <= radius + tol,
            Shape::Box { lo, hi } => {
                let mut s = 0.0;
                for i in 0..x.len() {
                    let v = (lo[i] - x[i]).max(x[i] - hi[i]).max(0.0);
                    s += v * v;
                }
                s.sqrt() <= tol
            }
            Shape::Simplex => (project_simplex(x) - x).norm() <= tol,
            Shape::HPolytope { rows } => rows.iter().all(|h| h.violation(x) <= tol),
            Shape::VPolytope { .. } => match self.project(x, tol * 1e-3) {
                Ok(p) => (p - x).norm() <= tol,
                Err(_) => false,
            },
            Shape::CappedBall {
                radius,
                direction,
                cap,
            } => {
                if direction.dot(x) <= cap + tol && x.norm() <= radius + tol {
                    // Both constraints hold up to tol; near the rim the distance
                    // can exceed tol slightly, so settle it by projection.
                    if direction.dot(x) <= *cap && x.norm() <= *radius {
                        return true;
                    }
                    match self.project(x, tol * 1e-3) {
                        Ok(p) => (p - x).norm() <= tol,
                        Err(_) => false,
                    }
                } else {
                    false
                }
            }
            Shape::AffineImage { base, inverse, .. } => {
                let z = inverse.apply_unchecked(x);
                // A point within tol of the image pulls back to within
                // tol·‖M⁻¹‖ of the base.
                let scale = inverse.matrix().norm().max(1e-300);
                base.member_unchecked(&z, tol * scale)
            }
            Shape::Intersection { body, halfspaces } => {
                body.member_unchecked(x, tol) && halfspaces.iter().all(|h| h.violation(x) <= tol)
            }
        }
    }

    /// Separation oracle. Returns `Inside` exactly when [`membership`]
    /// holds at the same tolerance.
    ///
    /// [`membership`]: BoundedBody::membership
    pub fn separate(&self, x: &DVector<f64>, tol: f64) -> Result<Separation> {
        check_dim(self.dim, x.len())?;
        self.separate_unchecked(x, tol)
    }

    pub(crate) fn separate_unchecked(&self, x: &DVector<f64>, tol: f64) -> Result<Separation> {
        match &self.shape {
            Shape::Ball { center, radius } => {
                let d = x - center;
                let n = d.norm();
                if n <= radius + tol {
                    return Ok(Separation::Inside);
                }
                let normal = d / n;
                let offset = normal.dot(center) + radius;
                Ok(Separation::Separated(Halfspace { normal, offset }))
            }
            Shape::HPolytope { rows } => Ok(most_violated(rows, x, tol)
                .map_or(Separation::Inside, |h| Separation::Separated(h.clone()))),
            Shape::CappedBall {
                radius,
                direction,
                cap,
            } => {
                if self.member_unchecked(x, tol) {
                    return Ok(Separation::Inside);
                }
                if direction.dot(x) > *cap {
                    return Ok(Separation::Separated(Halfspace {
                        normal: direction.clone(),
                        offset: *cap,
                    }));
                }
                let n = x.norm();
                Ok(Separation::Separated(Halfspace {
                    normal: x / n,
                    offset: *radius,
                }))
            }
            Shape::AffineImage { base, map, inverse } => {
                let z = inverse.apply_unchecked(x);
                let scale = inverse.matrix().norm().max(1e-300);
                match base.separate_unchecked(&z, tol * scale)? {
                    Separation::Inside => Ok(Separation::Inside),
                    Separation::Separated(h) => {
                        // ⟨c, M⁻¹(y − t)⟩ ≤ β  ⇔  ⟨M⁻ᵀc, y⟩ ≤ β + ⟨M⁻ᵀc, t⟩
                        let n = inverse.matrix().transpose() * &h.normal;
                        let offset = h.offset + n.dot(map.offset());
                        Ok(Separation::Separated(Halfspace::new(n, offset)?))
                    }
                }
            }
            Shape::Intersection { body, halfspaces } => match body.separate_unchecked(x, tol)? {
                Separation::Separated(h) => Ok(Separation::Separated(h)),
                Separation::Inside => Ok(most_violated(halfspaces, x, tol)
                    .map_or(Separation::Inside, |h| Separation::Separated(h.clone()))),
            },
            Shape::Box { .. } | Shape::Simplex | Shape::VPolytope { .. } => {
                if self.member_unchecked(x, tol) {
                    return Ok(Separation::Inside);
                }
                let p = self.project(x, tol * 1e-3)?;
                let d = x - &p;
                let n = d.norm();
                if n <= tol * 1e-3 {
                    return Err(Error::DegenerateProjection);
                }
                let normal = d / n;
                let offset = self.support(&normal)?;
                Ok(Separation::Separated(Halfspace { normal, offset }))
            }
        }
    }

    /// Certified upper bound on `max ⟨c, y⟩` over the body.
    pub fn support(&self, c: &DVector<f64>) -> Result<f64> {
        Ok(self.linopt(c, DEFAULT_TOL)?.upper)
    }

    /// Samples a point of the body (used by tests and samplers): a random
    /// convex combination of the inner center and linopt answers.
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Result<DVector<f64>> {
        use rand_distr::{Distribution, StandardNormal};
        let k = 1 + self.dim;
        let mut pts = vec![self.inner_center.clone()];
        for _ in 0..k {
            let c = DVector::from_fn(self.dim, |_, _| StandardNormal.sample(rng));
            pts.push(self.linopt(&c, DEFAULT_TOL)?.point);
        }
        let w: Vec<f64> = (0..pts.len()).map(|_| rng.random::<f64>() + 1e-3).collect();
        let s: f64 = w.iter().sum();
        let mut x = DVector::zeros(self.dim);
        for (p, wi) in pts.iter().zip(&w) {
            x += p * (wi / s);
        }
        Ok(x)
    }
}

fn corner_simplex_inner(d: usize) -> Result<(DVector<f64>, f64)> {
    if d < 1 {
        return Err(Error::InvalidBody("corner simplex needs d >= 1".into()));
    }
    let df = d as f64;
    let r = 1.0 / (df + df.sqrt());
    Ok((DVector::from_element(d, r), r))
}

fn most_violated<'a>(rows: &'a [Halfspace], x: &DVector<f64>, tol: f64) -> Option<&'a Halfspace> {
    let mut best: Option<(&Halfspace, f64)> = None;
    for h in rows {
        let v = h.violation(x);
        if v > tol && best.is_none_or(|(_, bv)| v > bv) {
            best = Some((h, v));
        }
    }
    best.map(|(h, _)| h)
}

#[cfg(test)]
mod tests;
