//! The compressed primal: a mixture of good-enough responses that is good
//! against every deviation in a polyhedral outer description of the
//! deviation set.

use microlp::{ComparisonOp, OptimizationDirection, Problem, Variable};
use nalgebra::DVector;

use super::game::{block_offsets, ConvexGame};
use crate::endo::{pairing, vertices_of, EndoBounds};
use crate::error::{Error, Result};
use crate::geometry::Halfspace;

type SparseRow = Vec<(usize, f64)>;

/// A player whose deviation set is only known to lie in a Frobenius ball.
#[derive(Clone, Debug)]
struct BallBlock {
    offset: usize,
    center: DVector<f64>,
    radius: f64,
}

/// Polyhedral set containing every deviation profile, in the coordinates
/// `w = (φ_1, …, φ_n, aux)` with auxiliary variables after the maps.
///
/// For a player with a vertex list `v_1, …, v_m` the constraints say that
/// each `φ(v_k)` is a convex combination `Σ_l μ_kl v_l`. For an inequality
/// description `Ax ≤ b` they say that each row has a dual certificate
/// `ν ≥ 0` with `Aᵀν = Mᵀa_j` and `bᵀν + ⟨a_j, t⟩ ≤ b_j`. Other bodies
/// fall back to a box around their endomorphism ball, which is tightened
/// by tangent cuts when the optimum strays outside the ball.
#[derive(Clone, Debug)]
pub struct DeviationOuter {
    dim: usize,
    aux: usize,
    eq: Vec<(SparseRow, f64)>,
    le: Vec<(SparseRow, f64)>,
    balls: Vec<BallBlock>,
    exact: bool,
}

impl DeviationOuter {
    pub fn of(game: &ConvexGame) -> Result<Self> {
        let dim = game.deviation_dim() - 1;
        let mut out = DeviationOuter {
            dim,
            aux: 0,
            eq: Vec::new(),
            le: Vec::new(),
            balls: Vec::new(),
            exact: true,
        };
        for (body, off) in game.bodies().iter().zip(block_offsets(game)) {
            let d = body.dim();
            if let Some(vs) = vertices_of(body) {
                out.add_vertex_block(off, d, &vs);
            } else if let Some(rows) = body.hrep_rows() {
                out.add_hrep_block(off, d, &rows);
            } else {
                let eb = EndoBounds::of(body);
                let center = eb.center_map.flatten();
                for j in 0..d * (d + 1) {
                    out.le
                        .push((vec![(off + j, 1.0)], center[j] + eb.outer_radius));
                    out.le
                        .push((vec![(off + j, -1.0)], eb.outer_radius - center[j]));
                }
                out.balls.push(BallBlock {
                    offset: off,
                    center,
                    radius: eb.outer_radius,
                });
                out.exact = false;
            }
        }
        Ok(out)
    }

    /// True when the set is exactly the product of endomorphism sets.
    pub fn is_exact(&self) -> bool {
        self.exact
    }

    fn new_aux(&mut self, count: usize) -> usize {
        let first = self.dim + self.aux;
        self.aux += count;
        first
    }

    fn add_vertex_block(&mut self, off: usize, d: usize, vs: &[DVector<f64>]) {
        let m = vs.len();
        let mu = self.new_aux(m * m);
        for (k, vk) in vs.iter().enumerate() {
            for r in 0..d {
                let mut e = DVector::zeros(d);
                e[r] = 1.0;
                let coeff = pairing(&e, vk);
                let mut row: SparseRow = coeff
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| **c != 0.0)
                    .map(|(j, c)| (off + j, *c))
                    .collect();
                for (l, vl) in vs.iter().enumerate() {
                    if vl[r] != 0.0 {
                        row.push((mu + k * m + l, -vl[r]));
                    }
                }
                self.eq.push((row, 0.0));
            }
            self.eq
                .push(((0..m).map(|l| (mu + k * m + l, 1.0)).collect(), 1.0));
            for l in 0..m {
                self.le.push((vec![(mu + k * m + l, -1.0)], 0.0));
            }
        }
    }

    fn add_hrep_block(&mut self, off: usize, d: usize, rows: &[Halfspace]) {
        let m = rows.len();
        for aj in rows {
            let nu = self.new_aux(m);
            for l in 0..m {
                self.le.push((vec![(nu + l, -1.0)], 0.0));
            }
            // Σ_l ν_l a_l[c] − Σ_r M[r,c]·a_j[r] = 0 for every column c.
            for c in 0..d {
                let mut row: SparseRow = (0..m)
                    .filter(|&l| rows[l].normal[c] != 0.0)
                    .map(|l| (nu + l, rows[l].normal[c]))
                    .collect();
                for r in 0..d {
                    if aj.normal[r] != 0.0 {
                        row.push((off + c * d + r, -aj.normal[r]));
                    }
                }
                self.eq.push((row, 0.0));
            }
            // Σ_l ν_l b_l + ⟨a_j, t⟩ ≤ b_j.
            let mut row: SparseRow = (0..m).map(|l| (nu + l, rows[l].offset)).collect();
            for r in 0..d {
                if aj.normal[r] != 0.0 {
                    row.push((off + d * d + r, aj.normal[r]));
                }
            }
            self.le.push((row, aj.offset));
        }
    }

    /// Adds `⟨a, φ⟩ ≤ b` over the map coordinates.
    pub(crate) fn push_cut(&mut self, h: &Halfspace) {
        let row = h
            .normal
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(j, c)| (j, *c))
            .collect();
        self.le.push((row, h.offset));
    }

    /// Membership of the map coordinates `y`, for tests.
    pub fn contains(&self, y: &DVector<f64>, tol: f64) -> bool {
        if self.aux > 0 {
            // Checking requires solving for the auxiliary variables.
            let mut p = Problem::new(OptimizationDirection::Minimize);
            let vars = self.variables(&mut p, |_| 0.0);
            for (j, v) in y.iter().enumerate() {
                p.add_constraint([(vars[j], 1.0)], ComparisonOp::Eq, *v);
            }
            self.add_rows(&mut p, &vars, tol);
            return p.solve().is_ok();
        }
        let eval = |row: &SparseRow| row.iter().map(|(j, c)| c * y[*j]).sum::<f64>();
        self.eq.iter().all(|(r, f)| (eval(r) - f).abs() <= tol)
            && self.le.iter().all(|(r, h)| eval(r) <= h + tol)
    }

    fn variables(&self, p: &mut Problem, obj: impl Fn(usize) -> f64) -> Vec<Variable> {
        (0..self.dim + self.aux)
            .map(|j| p.add_var(obj(j), (f64::NEG_INFINITY, f64::INFINITY)))
            .collect()
    }

    fn add_rows(&self, p: &mut Problem, vars: &[Variable], slack: f64) {
        for (row, f) in &self.eq {
            let terms: Vec<_> = row.iter().map(|(j, c)| (vars[*j], *c)).collect();
            if slack > 0.0 {
                p.add_constraint(terms.as_slice(), ComparisonOp::Le, f + slack);
                p.add_constraint(terms.as_slice(), ComparisonOp::Ge, f - slack);
            } else {
                p.add_constraint(terms.as_slice(), ComparisonOp::Eq, *f);
            }
        }
        for (row, h) in &self.le {
            let terms: Vec<_> = row.iter().map(|(j, c)| (vars[*j], *c)).collect();
            p.add_constraint(terms.as_slice(), ComparisonOp::Le, h + slack);
        }
    }
}

/// A good-enough response reduced to the deviation slice `y₀ = 1`: its
/// value at `(1, φ)` is `row0 + ⟨row, φ⟩`.
#[derive(Clone, Debug)]
pub(crate) struct SliceRow {
    pub row0: f64,
    pub row: DVector<f64>,
}

fn lp_error(e: microlp::Error) -> Error {
    Error::NumericalStall(format!("linear program: {e:?}"))
}

/// `max_λ min_{φ ∈ Q} Σ_k λ_k (row0_k + ⟨row_k, φ⟩)` over the simplex,
/// through the dual of the inner minimization.
fn mixture_lp(rows: &[SliceRow], q: &DeviationOuter) -> Result<(Vec<f64>, f64)> {
    let width = q.dim + q.aux;
    let mut p = Problem::new(OptimizationDirection::Maximize);
    let lambda: Vec<_> = rows
        .iter()
        .map(|r| p.add_var(r.row0, (0.0, f64::INFINITY)))
        .collect();
    let pi: Vec<_> =
        q.eq.iter()
            .map(|(_, f)| p.add_var(*f, (f64::NEG_INFINITY, f64::INFINITY)))
            .collect();
    let sigma: Vec<_> =
        q.le.iter()
            .map(|(_, h)| p.add_var(-h, (0.0, f64::INFINITY)))
            .collect();
    let mut cols: Vec<Vec<(Variable, f64)>> = vec![Vec::new(); width];
    for (k, r) in rows.iter().enumerate() {
        for (j, c) in r.row.iter().enumerate() {
            if *c != 0.0 {
                cols[j].push((lambda[k], -c));
            }
        }
    }
    for (e, (row, _)) in q.eq.iter().enumerate() {
        for (j, c) in row {
            cols[*j].push((pi[e], *c));
        }
    }
    for (g, (row, _)) in q.le.iter().enumerate() {
        for (j, c) in row {
            cols[*j].push((sigma[g], -c));
        }
    }
    for terms in cols.into_iter().filter(|t| !t.is_empty()) {
        p.add_constraint(terms.as_slice(), ComparisonOp::Eq, 0.0);
    }
    let ones: Vec<_> = lambda.iter().map(|v| (*v, 1.0)).collect();
    p.add_constraint(ones.as_slice(), ComparisonOp::Eq, 1.0);
    let sol = p.solve().map_err(lp_error)?.into_solution().map_err(|e| {
        Error::NumericalStall(format!(
            "linear program interrupted: {:?}",
            e.termination_reason()
        ))
    })?;
    let mut w: Vec<f64> = lambda.iter().map(|v| sol.var_value(*v).max(0.0)).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    Ok((w, sol.objective()))
}

/// `argmin_{φ ∈ Q} max_k (row0_k + ⟨row_k, φ⟩)`, the deviator's side.
fn deviator_lp(rows: &[SliceRow], q: &DeviationOuter) -> Result<DVector<f64>> {
    let mut p = Problem::new(OptimizationDirection::Minimize);
    let vars = q.variables(&mut p, |_| 0.0);
    let s = p.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    for r in rows {
        let mut terms: Vec<_> = r
            .row
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(j, c)| (vars[j], *c))
            .collect();
        terms.push((s, -1.0));
        p.add_constraint(terms.as_slice(), ComparisonOp::Le, -r.row0);
    }
    q.add_rows(&mut p, &vars, 0.0);
    let sol = p.solve().map_err(lp_error)?.into_solution().map_err(|e| {
        Error::NumericalStall(format!(
            "linear program interrupted: {:?}",
            e.termination_reason()
        ))
    })?;
    Ok(DVector::from_fn(q.dim, |j, _| sol.var_value(vars[j])))
}

/// Solves the compressed primal to the target `−eps`, tightening the
/// ball-only players with tangent cuts as needed. Returns the weights and
/// the optimal value over the final outer set.
pub(crate) fn compressed_primal(
    rows: &[SliceRow],
    mut q: DeviationOuter,
    eps: f64,
) -> Result<(Vec<f64>, f64)> {
    for _ in 0..500 {
        let (w, value) = mixture_lp(rows, &q)?;
        if value >= -eps || q.balls.is_empty() {
            return if value >= -eps {
                Ok((w, value))
            } else {
                Err(Error::CompressedPrimalInfeasible { value })
            };
        }
        let y = deviator_lp(rows, &q)?;
        let mut added = false;
        for b in q.balls.clone() {
            let len = b.center.len();
            let diff = y.rows(b.offset, len) - &b.center;
            let dist = diff.norm();
            if dist > b.radius * (1.0 + 1e-9) {
                let u = diff / dist;
                let mut normal = DVector::zeros(q.dim);
                normal.rows_mut(b.offset, len).copy_from(&u);
                q.push_cut(&Halfspace {
                    offset: u.dot(&b.center) + b.radius,
                    normal,
                });
                added = true;
            }
        }
        if !added {
            return Err(Error::CompressedPrimalInfeasible { value });
        }
    }
    Err(Error::IterationCapExceeded { cap: 500 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::endo::sample::verified_endomorphism;
    use crate::endo::AffineMap;
    use crate::equilibrium::game::NormalForm;
    use crate::geometry::BoundedBody;
    use nalgebra::dvector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn flat(maps: &[AffineMap]) -> DVector<f64> {
        let v: Vec<f64> = maps
            .iter()
            .flat_map(|m| m.flatten().iter().copied().collect::<Vec<_>>())
            .collect();
        DVector::from_vec(v)
    }

    #[test]
    fn outer_sets_contain_endomorphisms_and_exclude_others() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let bodies = vec![
            BoundedBody::corner_simplex(2).unwrap(),
            BoundedBody::cube_hrep(dvector![0.0, 0.0], dvector![1.0, 2.0]).unwrap(),
        ];
        let game = ConvexGame::new(
            bodies.clone(),
            Arc::new(NormalForm::new(vec![2, 2], vec![vec![0.0; 4], vec![0.0; 4]]).unwrap()),
        )
        .unwrap();
        let q = DeviationOuter::of(&game).unwrap();
        assert!(q.is_exact());
        for _ in 0..20 {
            let maps: Vec<_> = bodies
                .iter()
                .map(|b| verified_endomorphism(b, &mut rng).unwrap())
                .collect();
            assert!(q.contains(&flat(&maps), 1e-9));
        }
        let out = vec![
            AffineMap::translation(&dvector![2.0, 0.0]),
            AffineMap::identity(2),
        ];
        assert!(!q.contains(&flat(&out), 1e-9));
        let out = vec![AffineMap::identity(2), AffineMap::scaled_identity(2, 1.5)];
        assert!(!q.contains(&flat(&out), 1e-9));
    }

    #[test]
    fn matching_pennies_mixture() {
        // Rows of the four pure profiles of matching pennies, in chart
        // coordinates z = probability of the first action.
        let nf = NormalForm::new(
            vec![2, 2],
            vec![vec![1.0, -1.0, -1.0, 1.0], vec![-1.0, 1.0, 1.0, -1.0]],
        )
        .unwrap();
        let game = ConvexGame::normal_form(nf).unwrap();
        let (work, _) = game.charted().unwrap();
        let q = DeviationOuter::of(&work).unwrap();
        let mut rows = Vec::new();
        for a in [0.0, 1.0] {
            for b in [0.0, 1.0] {
                let x = vec![dvector![a], dvector![b]];
                let g: Vec<_> = (0..2).map(|i| work.gradient(i, &x).unwrap()).collect();
                let row0 = g[0].dot(&x[0]) + g[1].dot(&x[1]);
                let mut row = DVector::zeros(4);
                row.rows_mut(0, 2).copy_from(&-pairing(&g[0], &x[0]));
                row.rows_mut(2, 2).copy_from(&-pairing(&g[1], &x[1]));
                rows.push(SliceRow { row0, row });
            }
        }
        let (w, value) = compressed_primal(&rows, q, 1e-9).unwrap();
        assert!(value.abs() < 1e-9, "{value}");
        for wk in w {
            assert!((wk - 0.25).abs() < 1e-9);
        }
    }
}
