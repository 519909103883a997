use nalgebra::DVector;

use super::{drive, DriveExit, Ellipsoid, EngineLimits, Step};
use crate::error::{Error, Result};

/// Best feasible center found by [`maximize`] and a bound on the optimum,
/// both measured against the unit objective.
#[derive(Clone, Debug)]
pub struct CutMax {
    pub point: DVector<f64>,
    pub value: f64,
    pub upper: f64,
}

/// Maximizes `⟨chat, x⟩` over a convex set given by `sep`, which returns
/// `None` for feasible points and a cut normal otherwise.
///
/// Feasible centers get an objective cut. The bound `upper` is the running
/// minimum of `max(support of the ellipsoid, best value)`, which stays valid
/// because every cut keeps the optimizer of the set inside the ellipsoid.
/// Returns `None` when no feasible center was ever seen.
pub fn maximize<F>(
    mut e: Ellipsoid,
    chat: &DVector<f64>,
    tol: f64,
    limits: EngineLimits,
    mut sep: F,
) -> Result<Option<CutMax>>
where
    F: FnMut(&DVector<f64>) -> Result<Option<DVector<f64>>>,
{
    let mut best: Option<(DVector<f64>, f64)> = None;
    let mut upper = f64::INFINITY;
    let exit = drive(
        &mut e,
        limits,
        |e| {
            let z = e.center();
            let best_val = best.as_ref().map_or(f64::NEG_INFINITY, |b| b.1);
            upper = upper.min(e.support(chat).max(best_val));
            if best.is_some() && upper - best_val <= tol {
                return Ok(Step::Stop);
            }
            match sep(z)? {
                Some(normal) => Ok(Step::Cut {
                    normal,
                    kind: "feasibility",
                }),
                None => {
                    let v = chat.dot(z);
                    if v > best_val {
                        best = Some((z.clone(), v));
                    }
                    Ok(Step::Cut {
                        normal: -chat.clone(),
                        kind: "objective",
                    })
                }
            }
        },
        None,
    );
    match exit {
        Ok(DriveExit::Stopped { .. } | DriveExit::VolumeFloor { .. })
        | Err(Error::ShapeDegenerate) => {}
        Err(err) => return Err(err),
    }
    Ok(best.map(|(point, value)| CutMax {
        point,
        value,
        upper: upper.max(value),
    }))
}
