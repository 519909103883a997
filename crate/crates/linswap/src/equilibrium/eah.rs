use nalgebra::DVector;

use super::game::{block_offsets, split_maps, ConvexGame, DeviationProfile};
use super::lp::{compressed_primal, DeviationOuter, SliceRow};
use crate::ellipsoid::{
    central_cut_log_ratio, drive, log_ball_volume, DriveExit, Ellipsoid, EngineLimits, Step,
};
use crate::endo::{pairing, semi_separate, EndoBounds, SemiSeparation};
use crate::error::{check_dim, Error, Result};
use crate::geometry::Halfspace;

/// Fixed-point tolerance used by the Correlator–Deviator oracle.
pub const EAH_FP_TOL: f64 = 1e-9;

/// Answer of the Correlator–Deviator oracle at a deviation vector `y`.
#[derive(Clone, Debug)]
pub enum GerOrSep {
    /// A product profile `x` and the row `xᵀA`, with `⟨row, y'⟩` equal to the
    /// Correlator's value of `x` against any `y'`.
    Ger {
        atom: Vec<DVector<f64>>,
        row: DVector<f64>,
    },
    /// A halfspace that holds on every deviation profile but not at `y`.
    Sep(Halfspace),
}

/// Sum over players of the utility lost by switching to `φ_i(x_i)`:
/// `Σ_i ⟨g_i(x_{−i}), x_i − φ_i(x_i)⟩`.
pub fn correlator_value(
    game: &ConvexGame,
    x: &[DVector<f64>],
    y: &DeviationProfile,
) -> Result<f64> {
    game.check_profile(x)?;
    check_dim(game.players(), y.maps.len())?;
    let mut total = 0.0;
    for (i, (xi, phi)) in x.iter().zip(&y.maps).enumerate() {
        let g = game.oracle().gradient(i, x);
        total += g.dot(&(xi - phi.apply(xi)?));
    }
    Ok(total)
}

/// The row `r` with `⟨r, y⟩ = correlator_value(x, y)` for every flattened
/// deviation vector `y = (1, φ_1, …, φ_n)`.
pub fn ger_row(game: &ConvexGame, x: &[DVector<f64>]) -> Result<DVector<f64>> {
    game.check_profile(x)?;
    let mut row = DVector::zeros(game.deviation_dim());
    for (i, (xi, off)) in x.iter().zip(block_offsets(game)).enumerate() {
        let g = game.oracle().gradient(i, x);
        row[0] += g.dot(xi);
        let block = -pairing(&g, xi);
        row.rows_mut(1 + off, block.len()).copy_from(&block);
    }
    Ok(row)
}

/// Correlator–Deviator oracle: a separating halfspace when `y` is not a
/// deviation profile with fixed points, and otherwise the product of those
/// fixed points as a good-enough response.
pub fn cd_oracle(game: &ConvexGame, y: &DVector<f64>, fp_tol: f64) -> Result<GerOrSep> {
    let n = game.deviation_dim();
    check_dim(n, y.len())?;
    if y[0] != 1.0 {
        let mut normal = DVector::zeros(n);
        let (sign, offset) = if y[0] > 1.0 { (1.0, 1.0) } else { (-1.0, -1.0) };
        normal[0] = sign;
        return Ok(GerOrSep::Sep(Halfspace { normal, offset }));
    }
    let maps = split_maps(game, y.rows(1, n - 1).into_owned())?;
    let mut atom = Vec::with_capacity(maps.len());
    for ((body, phi), off) in game.bodies().iter().zip(&maps).zip(block_offsets(game)) {
        // Maps far outside the endomorphism ball are cut by its tangent,
        // which keeps semi-separation queries at the scale of the body.
        let eb = EndoBounds::of(body);
        let diff = phi.flatten() - eb.center_map.flatten();
        let dist = diff.norm();
        if dist > eb.outer_radius {
            let u = diff / dist;
            let mut normal = DVector::zeros(n);
            normal.rows_mut(1 + off, u.len()).copy_from(&u);
            return Ok(GerOrSep::Sep(Halfspace {
                offset: u.dot(&eb.center_map.flatten()) + eb.outer_radius,
                normal,
            }));
        }
        match semi_separate(body, phi, fp_tol)? {
            SemiSeparation::FixedPoint(p) => atom.push(p),
            SemiSeparation::Cut(cut) => {
                let h = cut.halfspace;
                let mut normal = DVector::zeros(n);
                normal
                    .rows_mut(1 + off, h.normal.len())
                    .copy_from(&h.normal);
                return Ok(GerOrSep::Sep(Halfspace {
                    normal,
                    offset: h.offset,
                }));
            }
        }
    }
    let row = ger_row(game, &atom)?;
    Ok(GerOrSep::Ger { atom, row })
}

/// Where the search for an infeasible dual point starts, and the scales
/// that set its stopping volume.
#[derive(Clone, Debug)]
pub struct EahProblem {
    /// Center of the starting ball in the slice `y₀ = 1` (map coordinates).
    pub center: DVector<f64>,
    pub radius: f64,
    /// Bound on the norm of every response row.
    pub row_bound: f64,
    pub eps: f64,
}

impl EahProblem {
    /// `2(N+1)·N·ln(B·R_y/ε)` with `N` the full deviation dimension.
    pub fn response_bound(&self) -> f64 {
        let n = (self.center.len() + 1) as f64;
        2.0 * (n + 1.0) * n * (self.row_bound * self.radius / self.eps).ln().max(1.0)
    }

    /// Iterations after which the volume is guaranteed below the floor.
    fn iteration_cap(&self) -> usize {
        let n = self.center.len();
        let drop = log_ball_volume(n, self.radius) - log_ball_volume(n, self.eps / self.row_bound);
        (drop / -central_cut_log_ratio(n)).ceil().max(0.0) as usize + 10
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EahStats {
    pub iterations: usize,
    pub responses: usize,
    pub separations: usize,
    /// Iteration bound the response count is checked against.
    pub response_bound: f64,
    /// Smallest `⟨row, y⟩` over all responses at their query points.
    pub worst_response_value: f64,
    /// Value of the mixture against the worst deviation of the outer set.
    pub primal_value: f64,
}

/// A finite mixture of product profiles.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelatedSolution {
    pub atoms: Vec<Vec<DVector<f64>>>,
    pub weights: Vec<f64>,
    /// Index of each atom among the responses collected by the solver.
    pub ger_indices: Vec<usize>,
    pub stats: EahStats,
}

impl CorrelatedSolution {
    /// Uniform mixture over the given profiles.
    pub fn empirical(profiles: Vec<Vec<DVector<f64>>>) -> Result<Self> {
        if profiles.is_empty() {
            return Err(Error::InvalidArgument("empty list of profiles".into()));
        }
        let w = 1.0 / profiles.len() as f64;
        Ok(CorrelatedSolution {
            weights: vec![w; profiles.len()],
            ger_indices: (0..profiles.len()).collect(),
            atoms: profiles,
            stats: EahStats::default(),
        })
    }
}

/// Runs the ellipsoid method against the Deviator over the slice `y₀ = 1`,
/// then mixes the collected responses by the compressed primal.
///
/// The oracle is queried at full vectors `(1, φ)`. Responses cut with
/// `⟨row, ·⟩ ≤ 0` and separations cut with their own halfspace; both are
/// applied through the ellipsoid center. Separations also tighten `outer`
/// before the final mix.
pub fn eah_solve<F>(
    mut oracle: F,
    problem: &EahProblem,
    mut outer: DeviationOuter,
) -> Result<CorrelatedSolution>
where
    F: FnMut(&DVector<f64>) -> Result<GerOrSep>,
{
    let n = problem.center.len();
    let mut e = Ellipsoid::ball(problem.center.clone(), problem.radius);
    let limits = EngineLimits {
        log_volume_floor: log_ball_volume(n, problem.eps / problem.row_bound),
        cap: problem.iteration_cap(),
    };
    let mut atoms = Vec::new();
    let mut rows = Vec::new();
    let mut separations = 0;
    let mut worst = f64::INFINITY;
    let mut constant_response = false;
    let exit = drive(
        &mut e,
        limits,
        |e| {
            let mut y = DVector::zeros(n + 1);
            y[0] = 1.0;
            y.rows_mut(1, n).copy_from(e.center());
            match oracle(&y)? {
                GerOrSep::Ger { atom, row } => {
                    let value = row.dot(&y);
                    worst = worst.min(value);
                    let slice = SliceRow {
                        row0: row[0],
                        row: row.rows(1, n).into_owned(),
                    };
                    let normal = slice.row.clone();
                    atoms.push(atom);
                    rows.push(slice);
                    if normal.norm() <= 1e-12 {
                        constant_response = true;
                        return Ok(Step::Stop);
                    }
                    Ok(Step::Cut {
                        normal,
                        kind: "response",
                    })
                }
                GerOrSep::Sep(h) => {
                    separations += 1;
                    let normal = h.normal.rows(1, n).into_owned();
                    outer.push_cut(&Halfspace {
                        offset: h.offset - h.normal[0],
                        normal: normal.clone(),
                    });
                    Ok(Step::Cut {
                        normal,
                        kind: "separation",
                    })
                }
            }
        },
        None,
    )?;
    let iterations = match exit {
        DriveExit::Stopped { iterations } | DriveExit::VolumeFloor { iterations } => iterations,
    };
    log::info!(
        "eah: {iterations} cuts, {} responses, {separations} separations",
        rows.len()
    );
    if rows.is_empty() {
        return Err(Error::CompressedPrimalInfeasible {
            value: f64::NEG_INFINITY,
        });
    }
    let (weights, value) = if constant_response {
        let last = rows.len() - 1;
        let mut w = vec![0.0; rows.len()];
        w[last] = 1.0;
        (w, rows[last].row0)
    } else {
        compressed_primal(&rows, outer, problem.eps)?
    };
    let stats = EahStats {
        iterations,
        responses: rows.len(),
        separations,
        response_bound: problem.response_bound(),
        worst_response_value: worst,
        primal_value: value,
    };
    let keep: Vec<usize> = (0..weights.len()).filter(|&k| weights[k] > 1e-14).collect();
    let total: f64 = keep.iter().map(|&k| weights[k]).sum();
    Ok(CorrelatedSolution {
        weights: keep.iter().map(|&k| weights[k] / total).collect(),
        atoms: keep.iter().map(|&k| atoms[k].clone()).collect(),
        ger_indices: keep,
        stats,
    })
}

/// Bound `B` on the norm of every response row of `game`.
fn row_bound(game: &ConvexGame) -> f64 {
    let mut linear = 0.0;
    let mut quad = 0.0;
    for (i, body) in game.bodies().iter().enumerate() {
        let g = (body.dim() as f64).sqrt() * game.oracle().gradient_bound(i);
        let x = body.outer_radius();
        linear += g * x;
        quad += g * g * (x * x + 1.0);
    }
    let n = game.deviation_dim() as f64;
    n.sqrt().max((linear * linear + quad).sqrt())
}

/// An `eps`-approximate linear correlated equilibrium of `game`.
///
/// The solver runs on full-dimensional charts of the strategy sets, so
/// simplices are handled through their corner form, and returns atoms in
/// the game's own coordinates.
pub fn compute_lce(game: &ConvexGame, eps: f64) -> Result<CorrelatedSolution> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "eps must be positive, got {eps}"
        )));
    }
    let (work, charts) = game.charted()?;
    let mut center = Vec::new();
    let mut radius2 = 0.0;
    for body in work.bodies() {
        let eb = EndoBounds::of(body);
        center.extend(eb.center_map.flatten().iter());
        radius2 += eb.outer_radius * eb.outer_radius;
    }
    let problem = EahProblem {
        center: DVector::from_vec(center),
        radius: radius2.sqrt(),
        row_bound: row_bound(&work),
        eps,
    };
    log::info!(
        "lce: N = {}, R_y = {:.6e}, B = {:.6e}, response bound {:.1}",
        work.deviation_dim(),
        problem.radius,
        problem.row_bound,
        problem.response_bound()
    );
    let outer = DeviationOuter::of(&work)?;
    let mut sol = eah_solve(|y| cd_oracle(&work, y, EAH_FP_TOL), &problem, outer)?;
    for atom in &mut sol.atoms {
        for (x, chart) in atom.iter_mut().zip(&charts) {
            *x = chart.apply(x)?;
        }
    }
    Ok(sol)
}
