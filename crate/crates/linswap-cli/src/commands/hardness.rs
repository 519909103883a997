use linswap::endo::{semi_separate, AffineMap, SemiSeparation};
use linswap::geometry::BoundedBody;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::config::{require, CliResult};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardnessConfig {
    pub dim: usize,
}

/// What the negative scaling `−((4d−1)/(4d))·I` does to the unit ball and to
/// the ball with the cap `⟨x, u⟩ > (2d−1)/(2d)` removed, for
/// `u = (1, …, 1)/√d`.
#[derive(Debug, Serialize)]
pub struct HardnessReport {
    pub dim: usize,
    /// `(4d−1)/(4d)`.
    pub scale: f64,
    pub spectral_norm: f64,
    pub ball_endomorphism: bool,
    /// `(2d−1)/(2d)`.
    pub cap: f64,
    pub witness: Vec<f64>,
    pub witness_in_capped_ball: bool,
    /// `⟨φ(−u), u⟩`, which exceeds the cap.
    pub image_cap_value: f64,
    pub image_in_capped_ball: bool,
    pub fixed_point_ball: Option<Vec<f64>>,
    pub fixed_point_capped_ball: Option<Vec<f64>>,
    /// Semi-separation accepts the map on both bodies through the origin.
    pub origin_fixed_on_both: bool,
    /// Number of pairwise disjoint caps from the sign-vector family, `2^d`.
    pub cap_count_bound: f64,
}

fn fixed_point(body: &BoundedBody, phi: &AffineMap) -> CliResult<Option<DVector<f64>>> {
    Ok(match semi_separate(body, phi, 1e-9)? {
        SemiSeparation::FixedPoint(p) => Some(p),
        SemiSeparation::Cut(_) => None,
    })
}

pub fn run(cfg: &HardnessConfig) -> CliResult<HardnessReport> {
    let d = cfg.dim;
    require(d >= 2, "dim must be at least 2")?;
    let df = d as f64;
    let scale = (4.0 * df - 1.0) / (4.0 * df);
    let cap = (2.0 * df - 1.0) / (2.0 * df);
    let u = DVector::from_element(d, 1.0 / df.sqrt());
    let phi = AffineMap::scaled_identity(d, -scale);
    let spectral_norm = phi.matrix().clone().svd(false, false).singular_values.max();
    let ball = BoundedBody::ball(DVector::zeros(d), 1.0)?;
    let capped = BoundedBody::capped_ball(1.0, u.clone(), cap)?;
    let witness = -&u;
    let image = phi.apply(&witness)?;
    let fb = fixed_point(&ball, &phi)?;
    let fc = fixed_point(&capped, &phi)?;
    let at_origin = |p: &Option<DVector<f64>>| p.as_ref().is_some_and(|p| p.norm() <= 1e-9);
    Ok(HardnessReport {
        dim: d,
        scale,
        spectral_norm,
        ball_endomorphism: spectral_norm <= 1.0,
        cap,
        witness_in_capped_ball: capped.membership(&witness, 0.0)?,
        witness: witness.iter().copied().collect(),
        image_cap_value: image.dot(&u),
        image_in_capped_ball: capped.membership(&image, 0.0)?,
        origin_fixed_on_both: at_origin(&fb) && at_origin(&fc),
        fixed_point_ball: fb.map(|p| p.iter().copied().collect()),
        fixed_point_capped_ball: fc.map(|p| p.iter().copied().collect()),
        cap_count_bound: 2f64.powi(d as i32),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_for_two_and_four() {
        let r = run(&HardnessConfig { dim: 2 }).unwrap();
        assert_eq!(r.scale, 7.0 / 8.0);
        assert!((r.spectral_norm - 7.0 / 8.0).abs() < 1e-15);
        assert_eq!(r.cap, 3.0 / 4.0);
        assert!(r.ball_endomorphism && r.witness_in_capped_ball && !r.image_in_capped_ball);
        assert!(r.origin_fixed_on_both);
        let r = run(&HardnessConfig { dim: 4 }).unwrap();
        assert_eq!(
            (r.scale, r.cap, r.cap_count_bound),
            (15.0 / 16.0, 7.0 / 8.0, 16.0)
        );
    }

    #[test]
    fn dimension_one_is_rejected() {
        assert_eq!(run(&HardnessConfig { dim: 1 }).unwrap_err().exit_code(), 2);
    }
}
