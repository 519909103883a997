use std::fmt::Debug;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::endo::AffineMap;
use crate::error::{check_dim, Error, Result};
use crate::geometry::{BoundedBody, Shape};

/// Utilities of a game that are linear in each player's own strategy.
///
/// `gradient(i, x)` must return `g_i` with `u_i(x) = ⟨g_i(x_{−i}), x_i⟩`,
/// ignoring `x[i]`. Implementations must be pure functions of their
/// arguments.
pub trait GradientOracle: Debug + Send + Sync {
    fn gradient(&self, player: usize, profile: &[DVector<f64>]) -> DVector<f64>;

    /// Utilities of all players at a product profile.
    fn utilities(&self, profile: &[DVector<f64>]) -> Vec<f64> {
        (0..profile.len())
            .map(|i| self.gradient(i, profile).dot(&profile[i]))
            .collect()
    }

    /// Bound on `‖g_i‖_∞` over the strategy sets.
    fn gradient_bound(&self, player: usize) -> f64;
}

/// Normal-form game with dense payoff tensors over the players' simplices.
///
/// `tensors[i]` lists `u_i(s)` for every pure profile `s` in row-major
/// order, the first player's action being the slowest index.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalForm {
    actions: Vec<usize>,
    tensors: Vec<Vec<f64>>,
}

impl NormalForm {
    pub fn new(actions: Vec<usize>, tensors: Vec<Vec<f64>>) -> Result<Self> {
        let m: usize = actions.iter().product();
        if actions.is_empty() || actions.iter().any(|&a| a < 2) {
            return Err(Error::InvalidGame(
                "every player needs at least two actions".into(),
            ));
        }
        if tensors.len() != actions.len() {
            return Err(Error::InvalidGame(format!(
                "{} payoff tensors for {} players",
                tensors.len(),
                actions.len()
            )));
        }
        for (i, t) in tensors.iter().enumerate() {
            if t.len() != m {
                return Err(Error::InvalidGame(format!(
                    "tensor {i} has {} entries, expected {m}",
                    t.len()
                )));
            }
            if t.iter().any(|v| !(v.abs() <= 1.0)) {
                return Err(Error::InvalidGame(format!(
                    "tensor {i} has entries outside [-1, 1]"
                )));
            }
        }
        Ok(NormalForm { actions, tensors })
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }

    pub fn tensors(&self) -> &[Vec<f64>] {
        &self.tensors
    }

    /// Payoff of player `i` at a pure profile.
    pub fn payoff(&self, i: usize, s: &[usize]) -> f64 {
        self.tensors[i][self.index(s)]
    }

    fn index(&self, s: &[usize]) -> usize {
        s.iter()
            .zip(&self.actions)
            .fold(0, |acc, (si, a)| acc * a + si)
    }

    /// Calls `f(s)` on every pure profile in tensor order.
    pub fn for_each_profile(&self, mut f: impl FnMut(&[usize])) {
        let n = self.actions.len();
        let mut s = vec![0; n];
        loop {
            f(&s);
            let mut k = n;
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                s[k] += 1;
                if s[k] < self.actions[k] {
                    break;
                }
                s[k] = 0;
            }
        }
    }
}

impl GradientOracle for NormalForm {
    fn gradient(&self, player: usize, profile: &[DVector<f64>]) -> DVector<f64> {
        let mut g = DVector::zeros(self.actions[player]);
        let t = &self.tensors[player];
        let mut idx = 0;
        self.for_each_profile(|s| {
            let w: f64 = s
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != player)
                .map(|(j, &sj)| profile[j][sj])
                .product();
            g[s[player]] += w * t[idx];
            idx += 1;
        });
        g
    }

    fn gradient_bound(&self, _player: usize) -> f64 {
        1.0
    }
}

/// One term `x_iᵀ M x_j` of player `i`'s utility in a polymatrix game.
#[derive(Clone, Debug, PartialEq)]
pub struct PolymatrixPair {
    pub player: usize,
    pub opponent: usize,
    pub matrix: DMatrix<f64>,
}

/// Polymatrix game: `u_i(x) = Σ x_iᵀ M x_j` over the pairs owned by `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polymatrix {
    dims: Vec<usize>,
    pairs: Vec<PolymatrixPair>,
    bounds: Vec<f64>,
}

impl Polymatrix {
    /// `outer_radii[j]` bounds the Euclidean norm of player `j`'s points.
    pub fn new(dims: Vec<usize>, outer_radii: &[f64], pairs: Vec<PolymatrixPair>) -> Result<Self> {
        let n = dims.len();
        for p in &pairs {
            if p.player >= n || p.opponent >= n || p.player == p.opponent {
                return Err(Error::InvalidGame(format!(
                    "pair ({}, {}) is not a pair of distinct players",
                    p.player, p.opponent
                )));
            }
            if p.matrix.shape() != (dims[p.player], dims[p.opponent]) {
                return Err(Error::InvalidGame(format!(
                    "pair ({}, {}) has a {:?} matrix",
                    p.player,
                    p.opponent,
                    p.matrix.shape()
                )));
            }
        }
        let bounds = (0..n)
            .map(|i| {
                let mut row = vec![0.0; dims[i]];
                for p in pairs.iter().filter(|p| p.player == i) {
                    for (a, r) in row.iter_mut().enumerate() {
                        *r += p.matrix.row(a).iter().map(|v| v.abs()).sum::<f64>()
                            * outer_radii[p.opponent];
                    }
                }
                row.into_iter().fold(0.0, f64::max)
            })
            .collect();
        Ok(Polymatrix {
            dims,
            pairs,
            bounds,
        })
    }

    pub fn pairs(&self) -> &[PolymatrixPair] {
        &self.pairs
    }
}

impl GradientOracle for Polymatrix {
    fn gradient(&self, player: usize, profile: &[DVector<f64>]) -> DVector<f64> {
        let mut g = DVector::zeros(self.dims[player]);
        for p in self.pairs.iter().filter(|p| p.player == player) {
            g += &p.matrix * &profile[p.opponent];
        }
        g
    }

    fn gradient_bound(&self, player: usize) -> f64 {
        self.bounds[player]
    }
}

/// A game seen through per-player charts `x_i = C_i z_i + o_i`.
///
/// Gradients become `C_iᵀ g_i`. The constant part `⟨g_i, o_i⟩` is dropped:
/// it does not depend on player `i`'s own strategy, so it cancels from every
/// deviation gain.
#[derive(Debug)]
struct Charted {
    inner: Arc<dyn GradientOracle>,
    charts: Vec<AffineMap>,
}

impl Charted {
    fn natural(&self, profile: &[DVector<f64>]) -> Vec<DVector<f64>> {
        profile
            .iter()
            .zip(&self.charts)
            .map(|(z, c)| c.apply_unchecked(z))
            .collect()
    }
}

impl GradientOracle for Charted {
    fn gradient(&self, player: usize, profile: &[DVector<f64>]) -> DVector<f64> {
        let x = self.natural(profile);
        self.charts[player].matrix().transpose() * self.inner.gradient(player, &x)
    }

    fn gradient_bound(&self, player: usize) -> f64 {
        let c = self.charts[player].matrix();
        let worst = (0..c.ncols())
            .map(|j| c.column(j).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        worst * self.inner.gradient_bound(player)
    }
}

/// An `n`-player game with convex strategy sets and utilities linear in
/// each player's own strategy.
#[derive(Clone, Debug)]
pub struct ConvexGame {
    bodies: Vec<BoundedBody>,
    oracle: Arc<dyn GradientOracle>,
}

impl ConvexGame {
    pub fn new(bodies: Vec<BoundedBody>, oracle: Arc<dyn GradientOracle>) -> Result<Self> {
        if bodies.is_empty() {
            return Err(Error::InvalidGame(
                "a game needs at least one player".into(),
            ));
        }
        Ok(ConvexGame { bodies, oracle })
    }

    /// Normal-form game over the players' probability simplices.
    pub fn normal_form(nf: NormalForm) -> Result<Self> {
        let bodies = nf
            .actions()
            .iter()
            .map(|&a| BoundedBody::simplex(a))
            .collect::<Result<Vec<_>>>()?;
        Self::new(bodies, Arc::new(nf))
    }

    pub fn polymatrix(bodies: Vec<BoundedBody>, pairs: Vec<PolymatrixPair>) -> Result<Self> {
        let dims = bodies.iter().map(|b| b.dim()).collect();
        let radii: Vec<f64> = bodies.iter().map(|b| b.outer_radius()).collect();
        let pm = Polymatrix::new(dims, &radii, pairs)?;
        Self::new(bodies, Arc::new(pm))
    }

    pub fn players(&self) -> usize {
        self.bodies.len()
    }

    pub fn bodies(&self) -> &[BoundedBody] {
        &self.bodies
    }

    pub fn body(&self, i: usize) -> &BoundedBody {
        &self.bodies[i]
    }

    pub fn oracle(&self) -> &Arc<dyn GradientOracle> {
        &self.oracle
    }

    /// `N = 1 + Σ d_i(d_i + 1)`.
    pub fn deviation_dim(&self) -> usize {
        1 + self
            .bodies
            .iter()
            .map(|b| b.dim() * (b.dim() + 1))
            .sum::<usize>()
    }

    pub(crate) fn check_profile(&self, profile: &[DVector<f64>]) -> Result<()> {
        check_dim(self.players(), profile.len())?;
        for (b, x) in self.bodies.iter().zip(profile) {
            check_dim(b.dim(), x.len())?;
        }
        Ok(())
    }

    pub fn gradient(&self, player: usize, profile: &[DVector<f64>]) -> Result<DVector<f64>> {
        self.check_profile(profile)?;
        Ok(self.oracle.gradient(player, profile))
    }

    pub fn utilities(&self, profile: &[DVector<f64>]) -> Result<Vec<f64>> {
        self.check_profile(profile)?;
        Ok(self.oracle.utilities(profile))
    }

    /// The same game on full-dimensional charts of the strategy sets,
    /// together with the chart maps.
    pub fn charted(&self) -> Result<(ConvexGame, Vec<AffineMap>)> {
        if self
            .bodies
            .iter()
            .all(|b| !matches!(b.shape(), Shape::Simplex))
        {
            let ids = self
                .bodies
                .iter()
                .map(|b| AffineMap::identity(b.dim()))
                .collect();
            return Ok((self.clone(), ids));
        }
        let (bodies, charts): (Vec<_>, Vec<_>) = self
            .bodies
            .iter()
            .map(|b| b.chart())
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .unzip();
        let oracle = Arc::new(Charted {
            inner: self.oracle.clone(),
            charts: charts.clone(),
        });
        Ok((ConvexGame { bodies, oracle }, charts))
    }

    /// Spot-checks that utilities stay in `[−1, 1]` on sampled profiles.
    pub fn check_utility_bounds<R: Rng + ?Sized>(&self, samples: usize, rng: &mut R) -> Result<()> {
        for _ in 0..samples {
            let x = self
                .bodies
                .iter()
                .map(|b| b.sample(rng))
                .collect::<Result<Vec<_>>>()?;
            for (i, u) in self.oracle.utilities(&x).into_iter().enumerate() {
                if !(u.abs() <= 1.0 + 1e-12) {
                    return Err(Error::InvalidGame(format!(
                        "utility {u} of player {i} is outside [-1, 1]"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Deviation maps of all players, flattened as `y = (1, φ_1, …, φ_n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DeviationProfile {
    pub maps: Vec<AffineMap>,
}

impl DeviationProfile {
    pub fn identity(game: &ConvexGame) -> Self {
        DeviationProfile {
            maps: game
                .bodies()
                .iter()
                .map(|b| AffineMap::identity(b.dim()))
                .collect(),
        }
    }

    pub fn flatten(&self) -> DVector<f64> {
        let mut v = vec![1.0];
        for m in &self.maps {
            v.extend(m.flatten().iter());
        }
        DVector::from_vec(v)
    }

    /// Splits `y` into maps. The leading coordinate must be exactly 1.
    pub fn from_flat(game: &ConvexGame, y: &DVector<f64>) -> Result<Self> {
        check_dim(game.deviation_dim(), y.len())?;
        if y[0] != 1.0 {
            return Err(Error::InvalidArgument(format!(
                "leading coordinate of a deviation profile is {}, not 1",
                y[0]
            )));
        }
        Ok(DeviationProfile {
            maps: split_maps(game, y.rows(1, y.len() - 1).into_owned())?,
        })
    }
}

/// Splits the map part of a deviation vector into per-player maps.
pub(crate) fn split_maps(game: &ConvexGame, v: DVector<f64>) -> Result<Vec<AffineMap>> {
    let mut off = 0;
    game.bodies()
        .iter()
        .map(|b| {
            let d = b.dim();
            let len = d * (d + 1);
            let m = AffineMap::from_flat(d, &v.rows(off, len).into_owned());
            off += len;
            m
        })
        .collect()
}

/// Offsets of each player's block within the map part of a deviation vector.
pub(crate) fn block_offsets(game: &ConvexGame) -> Vec<usize> {
    let mut off = 0;
    game.bodies()
        .iter()
        .map(|b| {
            let o = off;
            off += b.dim() * (b.dim() + 1);
            o
        })
        .collect()
}
