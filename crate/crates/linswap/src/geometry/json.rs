use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{BoundedBody, Halfspace, Shape};
use crate::endo::AffineMap;
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InnerBall {
    pub center: Vec<f64>,
    pub radius: f64,
}

/// Serialized form of a [`BoundedBody`].
///
/// Closed-form shapes derive their bounding data; inequality and vertex
/// descriptions carry it explicitly.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum BodySpec {
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Simplex {
        dim: usize,
    },
    Hpolytope {
        dim: usize,
        rows: Vec<(Vec<f64>, f64)>,
        inner: InnerBall,
        outer_radius: f64,
    },
    Vpolytope {
        vertices: Vec<Vec<f64>>,
        inner: InnerBall,
    },
    CappedBall {
        radius: f64,
        direction: Vec<f64>,
        cap: f64,
    },
    AffineImage {
        base: Box<BodySpec>,
        map: AffineMap,
    },
    Intersection {
        body: Box<BodySpec>,
        halfspaces: Vec<(Vec<f64>, f64)>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        inner: Option<InnerBall>,
    },
}

fn v(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

fn vec_of(x: &DVector<f64>) -> Vec<f64> {
    x.iter().copied().collect()
}

impl BodySpec {
    pub fn build(&self) -> Result<BoundedBody> {
        match self {
            BodySpec::Ball { center, radius } => BoundedBody::ball(v(center), *radius),
            BodySpec::Box { lo, hi } => BoundedBody::cube(v(lo), v(hi)),
            BodySpec::Simplex { dim } => BoundedBody::simplex(*dim),
            BodySpec::Hpolytope {
                dim,
                rows,
                inner,
                outer_radius,
            } => {
                if inner.center.len() != *dim {
                    return Err(Error::DimensionMismatch {
                        expected: *dim,
                        got: inner.center.len(),
                    });
                }
                let rows = rows.iter().map(|(a, b)| (v(a), *b)).collect();
                BoundedBody::hpolytope(rows, v(&inner.center), inner.radius, *outer_radius)
            }
            BodySpec::Vpolytope { vertices, inner } => BoundedBody::vpolytope(
                vertices.iter().map(|x| v(x)).collect(),
                v(&inner.center),
                inner.radius,
            ),
            BodySpec::CappedBall {
                radius,
                direction,
                cap,
            } => BoundedBody::capped_ball(*radius, v(direction), *cap),
            BodySpec::AffineImage { base, map } => {
                BoundedBody::affine_image(base.build()?, map.clone())
            }
            BodySpec::Intersection {
                body,
                halfspaces,
                inner,
            } => {
                let hs = halfspaces
                    .iter()
                    .map(|(a, b)| Halfspace::new(v(a), *b))
                    .collect::<Result<Vec<_>>>()?;
                BoundedBody::intersection(
                    body.build()?,
                    hs,
                    inner.as_ref().map(|i| (v(&i.center), i.radius)),
                )
            }
        }
    }

    pub fn of(body: &BoundedBody) -> BodySpec {
        let inner = InnerBall {
            center: vec_of(body.inner_center()),
            radius: body.inner_radius(),
        };
        let rows_of = |hs: &[Halfspace]| hs.iter().map(|h| (vec_of(&h.normal), h.offset)).collect();
        match body.shape() {
            Shape::Ball { center, radius } => BodySpec::Ball {
                center: vec_of(center),
                radius: *radius,
            },
            Shape::Box { lo, hi } => BodySpec::Box {
                lo: vec_of(lo),
                hi: vec_of(hi),
            },
            Shape::Simplex => BodySpec::Simplex { dim: body.dim() },
            Shape::HPolytope { rows } => BodySpec::Hpolytope {
                dim: body.dim(),
                rows: rows_of(rows),
                inner,
                outer_radius: body.outer_radius(),
            },
            Shape::VPolytope { vertices } => BodySpec::Vpolytope {
                vertices: vertices.iter().map(vec_of).collect(),
                inner,
            },
            Shape::CappedBall {
                radius,
                direction,
                cap,
            } => BodySpec::CappedBall {
                radius: *radius,
                direction: vec_of(direction),
                cap: *cap,
            },
            Shape::AffineImage { base, map, .. } => BodySpec::AffineImage {
                base: Box::new(BodySpec::of(base)),
                map: map.clone(),
            },
            Shape::Intersection {
                body: b,
                halfspaces,
            } => BodySpec::Intersection {
                body: Box::new(BodySpec::of(b)),
                halfspaces: rows_of(halfspaces),
                inner: Some(inner),
            },
        }
    }
}

impl serde::Serialize for BoundedBody {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        BodySpec::of(self).serialize(s)
    }
}

impl<'de> serde::Deserialize<'de> for BoundedBody {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        BodySpec::deserialize(d)?
            .build()
            .map_err(serde::de::Error::custom)
    }
}
