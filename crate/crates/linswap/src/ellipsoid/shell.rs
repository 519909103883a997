use nalgebra::DVector;

use super::{default_cap, drive, log_ball_volume, DriveExit, Ellipsoid, EngineLimits, Step};
use crate::endo::{semi_separate, AffineMap, SemiSeparation, TransformHalfspace};
use crate::error::{Error, Result};
use crate::geometry::{BoundedBody, Halfspace};

/// Explicit convex region of flattened maps: an intersection of balls and
/// halfspaces. The first ball seeds the ellipsoid.
#[derive(Clone, Debug)]
pub struct Region {
    pub balls: Vec<(DVector<f64>, f64)>,
    pub halfspaces: Vec<Halfspace>,
}

impl Region {
    pub fn ball(center: DVector<f64>, radius: f64) -> Self {
        Region {
            balls: vec![(center, radius)],
            halfspaces: Vec::new(),
        }
    }

    /// A cut normal at `z` if `z` lies outside the region.
    fn separate(&self, z: &DVector<f64>) -> Option<DVector<f64>> {
        for (c, r) in &self.balls {
            let d = z - c;
            if d.norm() > *r {
                return Some(d);
            }
        }
        let mut worst: Option<&Halfspace> = None;
        let mut wv = 0.0;
        for h in &self.halfspaces {
            let v = h.violation(z);
            if v > wv {
                wv = v;
                worst = Some(h);
            }
        }
        worst.map(|h| h.normal.clone())
    }
}

/// Semi-separation cuts collected by one [`shell_ellipsoid`] run.
#[derive(Clone, Debug, Default)]
pub struct Frontier {
    pub halfspaces: Vec<TransformHalfspace>,
    /// Iteration cap the run was held to, which bounds the frontier size.
    pub cap: usize,
}

#[derive(Clone, Debug)]
pub enum ShellOutcome {
    FoundTransform {
        map: AffineMap,
        fixed_point: DVector<f64>,
    },
    Separated(Frontier),
}

/// Searches `region` for a map with a fixed point in `body`.
///
/// Centers outside the region are cut with the region's own description.
/// Centers inside are sent to [`semi_separate`]; a fixed point ends the
/// search, a halfspace is both applied and stored in the frontier. Once the
/// ellipsoid is smaller than a ball of radius `eps` the frontier is
/// returned. A collapsed ellipsoid is treated the same way.
pub fn shell_ellipsoid(
    body: &BoundedBody,
    region: &Region,
    eps: f64,
    fp_tol: f64,
) -> Result<ShellOutcome> {
    let d = body.dim();
    let n = d * (d + 1);
    let (c0, r0) = region
        .balls
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .cloned()
        .ok_or_else(|| Error::InvalidArgument("region needs a bounding ball".into()))?;
    if c0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: c0.len(),
        });
    }
    let cap = default_cap(n, 2.0 * r0, eps);
    let mut e = Ellipsoid::ball(c0, r0);
    let mut frontier = Frontier {
        halfspaces: Vec::new(),
        cap,
    };
    let mut found = None;
    let exit = drive(
        &mut e,
        EngineLimits {
            log_volume_floor: log_ball_volume(n, eps),
            cap,
        },
        |e| {
            let z = e.center();
            if let Some(normal) = region.separate(z) {
                return Ok(Step::Cut {
                    normal,
                    kind: "region",
                });
            }
            let phi = AffineMap::from_flat(d, z)?;
            match semi_separate(body, &phi, fp_tol)? {
                SemiSeparation::FixedPoint(p) => {
                    found = Some((phi, p));
                    Ok(Step::Stop)
                }
                SemiSeparation::Cut(t) => {
                    let normal = t.halfspace.normal.clone();
                    frontier.halfspaces.push(t);
                    Ok(Step::Cut {
                        normal,
                        kind: "semi-separation",
                    })
                }
            }
        },
        None,
    );
    match exit {
        Ok(DriveExit::Stopped { .. }) => {
            let (map, fixed_point) = found.expect("stopped on a fixed point");
            Ok(ShellOutcome::FoundTransform { map, fixed_point })
        }
        Ok(DriveExit::VolumeFloor { .. }) | Err(Error::ShapeDegenerate) => {
            Ok(ShellOutcome::Separated(frontier))
        }
        Err(err) => Err(err),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::endo::{find_fixed_point, FixedPointResult};
    use nalgebra::dvector;

    #[test]
    fn identity_region_on_simplex_chart() {
        let body = BoundedBody::corner_simplex(2).unwrap();
        let id = AffineMap::identity(2).flatten();
        let out = shell_ellipsoid(&body, &Region::ball(id.clone(), 0.01), 1e-6, 1e-8).unwrap();
        match out {
            ShellOutcome::FoundTransform { map, fixed_point } => {
                assert!((map.flatten() - id).norm() <= 0.01);
                let r = find_fixed_point(&body, &map, 1e-8).unwrap();
                assert!(matches!(r, FixedPointResult::Found { .. }));
                assert!((map.apply(&fixed_point).unwrap() - &fixed_point).norm() <= 1e-8);
            }
            ShellOutcome::Separated(_) => panic!("identity has fixed points"),
        }
    }

    #[test]
    fn far_translation_is_separated() {
        let body = BoundedBody::cube(dvector![0.0, 0.0], dvector![1.0, 1.0]).unwrap();
        let t = AffineMap::translation(&dvector![3.0, 0.0]).flatten();
        let out = shell_ellipsoid(&body, &Region::ball(t, 0.01), 1e-4, 1e-8).unwrap();
        let ShellOutcome::Separated(f) = out else {
            panic!("maps near a far translation have no fixed point in the square");
        };
        assert!(!f.halfspaces.is_empty());
        assert!(f.halfspaces.len() <= f.cap);
        // Every stored cut keeps the true endomorphisms, e.g. the identity
        // and constant maps onto corners.
        for phi in [
            AffineMap::identity(2),
            AffineMap::constant(&dvector![1.0, 1.0]),
            AffineMap::constant(&dvector![0.0, 1.0]),
        ] {
            for h in &f.halfspaces {
                assert!(h.violation(&phi) <= 1e-9);
            }
        }
    }

    #[test]
    fn negated_contraction_on_capped_ball() {
        let body = BoundedBody::capped_ball(1.0, dvector![1.0, 0.0], 0.75).unwrap();
        let phi = AffineMap::scaled_identity(2, -7.0 / 8.0).flatten();
        let out = shell_ellipsoid(&body, &Region::ball(phi, 1e-3), 1e-6, 1e-8).unwrap();
        let ShellOutcome::FoundTransform { fixed_point, .. } = out else {
            panic!("the origin is a fixed point");
        };
        assert!(fixed_point.norm() < 1e-6);
    }
}
