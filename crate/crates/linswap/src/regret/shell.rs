use nalgebra::DVector;

use crate::ellipsoid::{shell_ellipsoid, Region, ShellOutcome};
use crate::endo::{semi_separate, AffineMap, SemiSeparation, TransformHalfspace};
use crate::error::{Error, Result};
use crate::geometry::qp::project_ball_polyhedron;
use crate::geometry::{BoundedBody, Halfspace};

/// Tolerance of the exact projections onto a shell.
const PROJ_TOL: f64 = 1e-12;

/// Outer approximation of `Φ(P)`: a ball in flattened coordinates cut by
/// semi-separation halfspaces.
#[derive(Clone, Debug)]
pub struct ShellSet {
    center: DVector<f64>,
    radius: f64,
    cuts: Vec<TransformHalfspace>,
}

impl ShellSet {
    pub fn ball(center: DVector<f64>, radius: f64) -> Self {
        ShellSet {
            center,
            radius,
            cuts: Vec::new(),
        }
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn cuts(&self) -> &[TransformHalfspace] {
        &self.cuts
    }

    pub fn push(&mut self, cut: TransformHalfspace) {
        self.cuts.push(cut);
    }

    fn halfspaces(&self) -> Vec<Halfspace> {
        self.cuts.iter().map(|c| c.halfspace.clone()).collect()
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        (x - &self.center).norm() <= self.radius + tol
            && self.cuts.iter().all(|c| c.halfspace.violation(x) <= tol)
    }

    /// Euclidean projection onto the shell.
    pub fn project(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        project_ball_polyhedron(&self.center, self.radius, &self.halfspaces(), y, PROJ_TOL)
    }

    fn region(&self, target: &DVector<f64>, q: f64) -> Region {
        Region {
            balls: vec![(target.clone(), q), (self.center.clone(), self.radius)],
            halfspaces: self.halfspaces(),
        }
    }
}

/// One step of gradient descent over a shell: the projection of
/// `x_prev − η·loss_prev` onto `shell`.
pub fn shell_gd_step(
    x_prev: &DVector<f64>,
    loss_prev: &DVector<f64>,
    eta: f64,
    shell: &ShellSet,
) -> Result<DVector<f64>> {
    if !(eta > 0.0) {
        return Err(Error::InvalidArgument("step size must be positive".into()));
    }
    shell.project(&(x_prev - loss_prev * eta))
}

/// Tuning of [`shell_proj`].
#[derive(Clone, Copy, Debug)]
pub struct ShellProjConfig {
    pub fp_tol: f64,
    /// Rounds of the projection-cut loop tried before the radius search.
    pub cut_loop_cap: usize,
    /// Lower bound on the ellipsoid precision, relative to the diameter.
    pub eps_floor: f64,
    /// Lower bound on the radius increment, relative to the diameter.
    pub delta_floor: f64,
}

impl Default for ShellProjConfig {
    fn default() -> Self {
        ShellProjConfig {
            fp_tol: 1e-7,
            cut_loop_cap: 50,
            eps_floor: 1e-7,
            delta_floor: 1e-9,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ShellProjection {
    pub shell: ShellSet,
    pub map: AffineMap,
    pub fixed_point: DVector<f64>,
    /// Final search radius divided by the increment `δ = eps/(4D)`: the
    /// number of radius increments the plain search would have made.
    pub increments: u64,
    /// Calls to [`shell_ellipsoid`] made by the radius search.
    pub ellipsoid_calls: usize,
    /// Rounds of the projection-cut loop.
    pub cut_rounds: usize,
}

/// Projects `target` onto a shell of `body` refined until the projection
/// has a fixed point.
///
/// The shell starts as `base`. First the target is projected onto the
/// current shell and the projection is handed to [`semi_separate`]; a
/// fixed point ends the search with the exact shell projection, a cut
/// refines the shell. After `cut_loop_cap` rounds the radius search takes
/// over: [`shell_ellipsoid`] explores the shell within radius `q` of the
/// target, adding its frontier to the shell on failure. Radii below the
/// current distance from the target to the shell are skipped because the
/// explored region would be empty.
///
/// On return the shell still contains `Φ(body)`, the map has a fixed point
/// in the body, and the map is within `eps` of the projection of `target`
/// onto the returned shell; see [`refine`] for the last part.
pub fn shell_proj(
    body: &BoundedBody,
    base: &ShellSet,
    target: &DVector<f64>,
    eps: f64,
    cfg: &ShellProjConfig,
) -> Result<ShellProjection> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument("eps must be positive".into()));
    }
    let d = body.dim();
    let diam = 2.0 * base.radius;
    let delta = (eps / (4.0 * diam)).max(cfg.delta_floor * diam);
    let r = body.inner_radius();
    let big_r = body.outer_radius();
    let eps_vol = (eps * r / (32.0 * big_r * diam * diam)).max(cfg.eps_floor * diam);
    let mut shell = base.clone();
    let increments = |q: f64| (q / delta).ceil() as u64;

    let mut cut_rounds = 0;
    while cut_rounds < cfg.cut_loop_cap {
        cut_rounds += 1;
        let pi = shell.project(target)?;
        let phi = AffineMap::from_flat(d, &pi)?;
        match semi_separate(body, &phi, cfg.fp_tol)? {
            SemiSeparation::FixedPoint(p) => {
                let q = (target - &pi).norm();
                return Ok(ShellProjection {
                    shell,
                    map: phi,
                    fixed_point: p,
                    increments: increments(q),
                    ellipsoid_calls: 0,
                    cut_rounds,
                });
            }
            SemiSeparation::Cut(t) => shell.push(t),
        }
    }

    let bound = 2.0 * diam + delta;
    let mut q = (target - shell.project(target)?).norm() + delta;
    let mut calls = 0;
    loop {
        if q > bound {
            return Err(Error::QExceededBound { q, bound });
        }
        calls += 1;
        match shell_ellipsoid(body, &shell.region(target, q), eps_vol, cfg.fp_tol)? {
            ShellOutcome::FoundTransform { map, fixed_point } => {
                let found = Candidate { map, fixed_point };
                let (map, fixed_point) = refine(
                    body, &mut shell, target, eps, eps_vol, cfg, found, &mut calls,
                )?;
                return Ok(ShellProjection {
                    shell,
                    map,
                    fixed_point,
                    increments: increments(q),
                    ellipsoid_calls: calls,
                    cut_rounds,
                });
            }
            ShellOutcome::Separated(frontier) => {
                for t in frontier.halfspaces {
                    shell.push(t);
                }
                let s = (target - shell.project(target)?).norm();
                q = (q + delta).max(s + delta);
            }
        }
    }
}

struct Candidate {
    map: AffineMap,
    fixed_point: DVector<f64>,
}

/// Rounds of [`refine`] before the radius search result is returned as is.
const REFINE_ROUNDS: usize = 60;

/// Brings the radius search result within `eps` of the projection onto the
/// final shell.
///
/// The radius search only guarantees `‖φ' − Π‖² ≤ q² − (q − δ)²`, which is
/// of order `eps` rather than `eps²`. Each round measures the distance
/// exactly. A candidate that is too far is replaced either by the
/// projection itself, when it has a fixed point, or by a map from the thin
/// region `{‖φ − target‖ ≤ √(s² + eps²/4)}` around the projection at
/// distance `s`, every point of which is within `eps/2` of it. Failed
/// attempts add their cuts to the shell.
#[allow(clippy::too_many_arguments)]
fn refine(
    body: &BoundedBody,
    shell: &mut ShellSet,
    target: &DVector<f64>,
    eps: f64,
    eps_vol: f64,
    cfg: &ShellProjConfig,
    mut best: Candidate,
    calls: &mut usize,
) -> Result<(AffineMap, DVector<f64>)> {
    let d = body.dim();
    for round in 0..REFINE_ROUNDS {
        let pi = shell.project(target)?;
        let flat = best.map.flatten();
        if shell.contains(&flat, 1e-9) && (&flat - &pi).norm() <= eps {
            return Ok((best.map, best.fixed_point));
        }
        let phi = AffineMap::from_flat(d, &pi)?;
        match semi_separate(body, &phi, cfg.fp_tol)? {
            SemiSeparation::FixedPoint(p) => return Ok((phi, p)),
            SemiSeparation::Cut(t) => shell.push(t),
        }
        if round % 4 == 3 {
            let s = (target - shell.project(target)?).norm();
            let q = (s * s + eps * eps / 4.0).sqrt();
            *calls += 1;
            match shell_ellipsoid(body, &shell.region(target, q), eps_vol, cfg.fp_tol)? {
                ShellOutcome::FoundTransform { map, fixed_point } => {
                    best = Candidate { map, fixed_point }
                }
                ShellOutcome::Separated(frontier) => {
                    for t in frontier.halfspaces {
                        shell.push(t);
                    }
                }
            }
        }
    }
    log::warn!(
        "shell projection left {} from the projection after refinement",
        {
            let pi = shell.project(target)?;
            (best.map.flatten() - pi).norm()
        }
    );
    Ok((best.map, best.fixed_point))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn zero_gradient_keeps_point() {
        let shell = ShellSet::ball(DVector::zeros(3), 2.0);
        let x = dvector![0.1, -0.2, 0.3];
        assert_eq!(
            shell_gd_step(&x, &DVector::zeros(3), 0.5, &shell).unwrap(),
            x
        );
    }

    #[test]
    fn one_dimensional_clamp() {
        // The interval [0, 1] as the ball of radius 1/2 around 1/2.
        let shell = ShellSet::ball(dvector![0.5], 0.5);
        let x = shell_gd_step(&dvector![0.9], &dvector![1.0], 1.0, &shell).unwrap();
        assert!(x[0].abs() < 1e-15);
    }

    #[test]
    fn identity_target_returns_immediately() {
        let body = BoundedBody::corner_simplex(2).unwrap();
        let base = ShellSet::ball(DVector::zeros(6), 10.0);
        let id = AffineMap::identity(2).flatten();
        let out = shell_proj(&body, &base, &id, 0.1, &ShellProjConfig::default()).unwrap();
        assert!((out.map.flatten() - id).norm() < 1e-12);
        assert_eq!(out.increments, 0);
        assert!(out.shell.cuts().is_empty());
    }

    #[test]
    fn far_constant_map_is_pulled_back() {
        let body = BoundedBody::cube(dvector![-1.0, -1.0], dvector![1.0, 1.0]).unwrap();
        let base = ShellSet::ball(DVector::zeros(6), 6.0);
        let target = AffineMap::constant(&dvector![3.0, 0.5]).flatten();
        let out = shell_proj(&body, &base, &target, 0.1, &ShellProjConfig::default()).unwrap();
        let p = &out.fixed_point;
        assert!((out.map.apply(p).unwrap() - p).norm() <= 1e-7);
        let proj = out.shell.project(&target).unwrap();
        assert!((proj - out.map.flatten()).norm() <= 0.1);
    }
}
