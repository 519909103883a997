use nalgebra::DVector;

use super::BoundedBody;
use crate::endo::AffineMap;

/// Affine change of coordinates `ψ(x) = (x − a)/r` moving the inner ball of
/// a body to the unit ball at the origin.
#[derive(Clone, Debug)]
pub struct Preconditioner {
    pub map: AffineMap,
    pub inverse: AffineMap,
    /// `2R` for the original outer radius `R`; losses are divided by it.
    pub scale_bound: f64,
    inner_radius: f64,
}

impl Preconditioner {
    /// Transports a loss vector on the original body to the preconditioned
    /// one: `ℓ' = (A⁻¹)ᵀℓ / scale_bound` with `A = I/r`.
    pub fn transport_loss(&self, loss: &DVector<f64>) -> DVector<f64> {
        loss * (self.inner_radius / self.scale_bound)
    }

    /// True when `ψ` is the identity.
    pub fn is_identity(&self) -> bool {
        self.map == AffineMap::identity(self.map.input_dim())
    }
}

impl BoundedBody {
    /// Returns `ψ` and the body `ψ(P)`, which contains `B(0, 1)` and lies in
    /// `B(0, (‖a‖ + R)/r)`.
    pub fn precondition(&self) -> (Preconditioner, BoundedBody) {
        let d = self.dim();
        let a = self.inner_center();
        let r = self.inner_radius();
        let scale_bound = 2.0 * self.outer_radius();
        if a.iter().all(|v| *v == 0.0) && r == 1.0 {
            let id = AffineMap::identity(d);
            return (
                Preconditioner {
                    map: id.clone(),
                    inverse: id,
                    scale_bound,
                    inner_radius: r,
                },
                self.clone(),
            );
        }
        let map =
            AffineMap::new(nalgebra::DMatrix::identity(d, d) / r, -a / r).expect("square map");
        let inverse =
            AffineMap::new(nalgebra::DMatrix::identity(d, d) * r, a.clone()).expect("square map");
        let mut body = BoundedBody::affine_image(self.clone(), map.clone())
            .expect("scaling map is invertible");
        // The image of B(a, r) is exactly B(0, 1).
        body.inner_center = DVector::zeros(d);
        body.inner_radius = 1.0;
        body.outer_radius = (a.norm() + self.outer_radius()) / r;
        (
            Preconditioner {
                map,
                inverse,
                scale_bound,
                inner_radius: r,
            },
            body,
        )
    }
}
