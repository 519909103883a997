use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{check_dim, Error, Result};

/// An affine map `x ↦ Mx + b`.
///
/// Square maps are the deviations acting on a strategy set. Rectangular maps
/// show up as coordinate charts, for example the embedding of a low
/// dimensional simplex chart into probability coordinates.
///
/// The flattened view concatenates the columns of `M` followed by `b`, so a
/// square map on `R^d` becomes a vector in `R^{d(d+1)}`. Every ellipsoid that
/// runs over maps relies on this ordering.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap {
    matrix: DMatrix<f64>,
    offset: DVector<f64>,
}

impl AffineMap {
    pub fn new(matrix: DMatrix<f64>, offset: DVector<f64>) -> Result<Self> {
        check_dim(matrix.nrows(), offset.len())?;
        Ok(AffineMap { matrix, offset })
    }

    pub fn identity(d: usize) -> Self {
        AffineMap {
            matrix: DMatrix::identity(d, d),
            offset: DVector::zeros(d),
        }
    }

    pub fn scaled_identity(d: usize, s: f64) -> Self {
        AffineMap {
            matrix: DMatrix::identity(d, d) * s,
            offset: DVector::zeros(d),
        }
    }

    /// The constant map `x ↦ a` on `R^d`.
    pub fn constant(a: &DVector<f64>) -> Self {
        let d = a.len();
        AffineMap {
            matrix: DMatrix::zeros(d, d),
            offset: a.clone(),
        }
    }

    pub fn translation(t: &DVector<f64>) -> Self {
        let d = t.len();
        AffineMap {
            matrix: DMatrix::identity(d, d),
            offset: t.clone(),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn offset(&self) -> &DVector<f64> {
        &self.offset
    }

    pub fn input_dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_square(&self) -> bool {
        self.matrix.is_square()
    }

    pub fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.input_dim(), x.len())?;
        Ok(self.apply_unchecked(x))
    }

    pub(crate) fn apply_unchecked(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.matrix * x + &self.offset
    }

    /// Length of the flattened representation.
    pub fn flat_len(&self) -> usize {
        self.output_dim() * (self.input_dim() + 1)
    }

    pub fn flatten(&self) -> DVector<f64> {
        let mut v = DVector::zeros(self.flat_len());
        let m = self.matrix.len();
        v.rows_mut(0, m).copy_from_slice(self.matrix.as_slice());
        v.rows_mut(m, self.offset.len()).copy_from(&self.offset);
        v
    }

    /// Rebuilds a square map on `R^d` from its flattened form.
    pub fn from_flat(d: usize, v: &DVector<f64>) -> Result<Self> {
        Self::from_flat_rect(d, d, v)
    }

    pub fn from_flat_rect(out_dim: usize, in_dim: usize, v: &DVector<f64>) -> Result<Self> {
        check_dim(out_dim * (in_dim + 1), v.len())?;
        let m = out_dim * in_dim;
        let matrix = DMatrix::from_column_slice(out_dim, in_dim, &v.as_slice()[..m]);
        let offset = DVector::from_column_slice(&v.as_slice()[m..]);
        Ok(AffineMap { matrix, offset })
    }

    pub fn frob_norm(&self) -> f64 {
        (self.matrix.norm_squared() + self.offset.norm_squared()).sqrt()
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &AffineMap) -> Result<AffineMap> {
        check_dim(self.input_dim(), inner.output_dim())?;
        Ok(AffineMap {
            matrix: &self.matrix * &inner.matrix,
            offset: &self.matrix * &inner.offset + &self.offset,
        })
    }

    /// Inverse of an invertible square map.
    pub fn inverse(&self) -> Option<AffineMap> {
        if !self.is_square() {
            return None;
        }
        let inv = self.matrix.clone().try_inverse()?;
        let offset = -(&inv * &self.offset);
        Some(AffineMap {
            matrix: inv,
            offset,
        })
    }
}

/// Flattened coefficient vector `e` of the linear functional
/// `φ ↦ ⟨u, φ(p)⟩`, that is the matrix `(u pᵀ | u)` laid out like
/// [`AffineMap::flatten`].
pub fn pairing(u: &DVector<f64>, p: &DVector<f64>) -> DVector<f64> {
    let d_out = u.len();
    let d_in = p.len();
    let mut e = DVector::zeros(d_out * (d_in + 1));
    for j in 0..d_in {
        let pj = p[j];
        for i in 0..d_out {
            e[j * d_out + i] = u[i] * pj;
        }
    }
    e.rows_mut(d_out * d_in, d_out).copy_from(u);
    e
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AffineMapJson {
    #[serde(rename = "M")]
    m: Vec<Vec<f64>>,
    b: Vec<f64>,
}

impl Serialize for AffineMap {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let m = (0..self.output_dim())
            .map(|i| self.matrix.row(i).iter().copied().collect())
            .collect();
        AffineMapJson {
            m,
            b: self.offset.iter().copied().collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for AffineMap {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = AffineMapJson::deserialize(d)?;
        let rows = raw.m.len();
        let cols = raw.m.first().map_or(0, Vec::len);
        if raw.m.iter().any(|r| r.len() != cols) {
            return Err(serde::de::Error::custom("ragged matrix rows"));
        }
        if raw.b.len() != rows {
            return Err(serde::de::Error::custom(
                Error::DimensionMismatch {
                    expected: rows,
                    got: raw.b.len(),
                }
                .to_string(),
            ));
        }
        let matrix = DMatrix::from_fn(rows, cols, |i, j| raw.m[i][j]);
        Ok(AffineMap {
            matrix,
            offset: DVector::from_vec(raw.b),
        })
    }
}
