use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Mutex;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Halfspace;

/// `{x : (x − z)ᵀ Q⁻¹ (x − z) ≤ 1}` together with its cached log-volume.
///
/// The shape is held as `Q = L·diag(D)·Lᵀ` with `L` unit lower triangular,
/// so `det Q = ∏ D_j` exactly and cuts are rank-one modifications of the
/// factors. Dense factors lose their determinant to round-off once the
/// axes span many orders of magnitude; the diagonal does not.
#[derive(Clone, Debug)]
pub struct Ellipsoid {
    center: DVector<f64>,
    lower: DMatrix<f64>,
    diag: DVector<f64>,
    log_volume: f64,
}

/// Natural log of the volume of the unit ball in `R^n`.
pub fn log_unit_ball_volume(n: usize) -> f64 {
    let nf = n as f64;
    // ln Γ(n/2 + 1), exact for integer and half-integer arguments.
    let log_gamma = if n.is_multiple_of(2) {
        (1..=n / 2).map(|i| (i as f64).ln()).sum::<f64>()
    } else {
        // Γ(k + 1/2) = (2k)! √π / (4^k k!) with k = (n + 1) / 2.
        let k = n.div_ceil(2);
        let log_fact = |m: usize| (1..=m).map(|i| (i as f64).ln()).sum::<f64>();
        log_fact(2 * k) + 0.5 * std::f64::consts::PI.ln() - (k as f64) * 4f64.ln() - log_fact(k)
    };
    0.5 * nf * std::f64::consts::PI.ln() - log_gamma
}

/// Log-volume of a ball of the given radius in `R^n`.
pub fn log_ball_volume(n: usize, radius: f64) -> f64 {
    log_unit_ball_volume(n) + n as f64 * radius.ln()
}

/// Change in log-volume produced by one central cut in dimension `n`.
pub fn central_cut_log_ratio(n: usize) -> f64 {
    if n == 1 {
        return -(2f64.ln());
    }
    let nf = n as f64;
    0.5 * (nf * (nf * nf / (nf * nf - 1.0)).ln() + ((nf - 1.0) / (nf + 1.0)).ln())
}

impl Ellipsoid {
    pub fn ball(center: DVector<f64>, radius: f64) -> Self {
        let n = center.len();
        Ellipsoid {
            lower: DMatrix::identity(n, n),
            diag: DVector::from_element(n, radius * radius),
            log_volume: log_ball_volume(n, radius),
            center,
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    /// The shape matrix `Q`.
    pub fn shape(&self) -> DMatrix<f64> {
        let scaled = &self.lower * DMatrix::from_diagonal(&self.diag);
        scaled * self.lower.transpose()
    }

    pub fn log_volume(&self) -> f64 {
        self.log_volume
    }

    /// Log-volume recomputed from the factors held.
    pub fn log_volume_exact(&self) -> Option<f64> {
        let log_det: f64 = self.diag.iter().map(|v| v.ln()).sum::<f64>() / 2.0;
        log_det
            .is_finite()
            .then(|| log_unit_ball_volume(self.dim()) + log_det)
    }

    /// `√(cᵀQc)` together with `y = Lᵀc`.
    fn width(&self, c: &DVector<f64>) -> (f64, DVector<f64>) {
        let y = self.lower.tr_mul(c);
        let s: f64 = y.iter().zip(self.diag.iter()).map(|(y, d)| d * y * y).sum();
        (s.sqrt(), y)
    }

    /// Largest value of `⟨c, x⟩` over the ellipsoid.
    pub fn support(&self, c: &DVector<f64>) -> f64 {
        c.dot(&self.center) + self.width(c).0
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        let diff = x - &self.center;
        match self.lower.solve_lower_triangular(&diff) {
            Some(w) => {
                w.iter()
                    .zip(self.diag.iter())
                    .map(|(w, d)| w * w / d)
                    .sum::<f64>()
                    <= 1.0 + 1e-12
            }
            None => false,
        }
    }

    /// Replaces the ellipsoid by the minimum-volume ellipsoid containing
    /// its half `{x : ⟨c, x⟩ ≤ ⟨c, z⟩}`.
    ///
    /// With `h = √(cᵀQc)` and `g = Qc/h` the update is `z' = z − g/(n+1)`
    /// and `Q' = n²/(n²−1)·(Q − 2/(n+1)·g gᵀ)`. The rank-one term is folded
    /// into `L` and `D` column by column (Gill, Golub, Murray and Saunders,
    /// method C1). It is driven by `v = L⁻¹g = D·Lᵀc/h`, known without a
    /// triangular solve, and the partial sums of `L v` it needs are formed
    /// from `v` directly so nothing cancels.
    pub fn central_cut(&mut self, c: &DVector<f64>) -> Result<()> {
        let n = self.dim();
        let (h, y) = self.width(c);
        if !(h > 1e-150) || !h.is_finite() {
            return Err(Error::ShapeDegenerate);
        }
        let v = y.component_mul(&self.diag) / h;
        let g = &self.lower * &v;
        let before = audit::exact_before(self);
        if n == 1 {
            self.center -= &g * 0.5;
            self.diag *= 0.25;
        } else {
            let nf = n as f64;
            self.center -= &g / (nf + 1.0);
            // tails[(r, j)] = Σ_{j<i≤r} L_ri v_i, from the factor before the
            // update; column j is the only one changed at step j.
            let mut tails = DMatrix::zeros(n, n);
            for r in 1..n {
                let mut acc = v[r];
                for j in (0..r).rev() {
                    tails[(r, j)] = acc;
                    acc += self.lower[(r, j)] * v[j];
                }
            }
            let mut alpha = -2.0 / (nf + 1.0);
            for j in 0..n {
                let p = v[j];
                let d_new = self.diag[j] + alpha * p * p;
                if !(d_new > 0.0) {
                    return Err(Error::ShapeDegenerate);
                }
                let beta = p * alpha / d_new;
                alpha *= self.diag[j] / d_new;
                self.diag[j] = d_new;
                for r in j + 1..n {
                    self.lower[(r, j)] += beta * tails[(r, j)];
                }
            }
            self.diag *= nf * nf / (nf * nf - 1.0);
        }
        if !self.center.iter().all(|v| v.is_finite()) {
            return Err(Error::ShapeDegenerate);
        }
        self.log_volume += central_cut_log_ratio(n);
        audit::record(self, before);
        Ok(())
    }

    /// Cut with a halfspace that passes through or excludes the center.
    pub fn cut(&mut self, h: &Halfspace) -> Result<()> {
        self.central_cut(&h.normal)
    }
}

/// Optional bookkeeping of every central cut, used to check the volume law
/// across whole test runs. Disabled unless switched on.
pub mod audit {
    use super::*;

    static ENABLED: AtomicBool = AtomicBool::new(false);
    static CUTS: AtomicU64 = AtomicU64::new(0);
    static WORST: Mutex<f64> = Mutex::new(f64::INFINITY);

    /// Turns on the exact log-determinant check around every cut.
    pub fn enable() {
        ENABLED.store(true, Ordering::SeqCst);
    }

    pub fn disable() {
        ENABLED.store(false, Ordering::SeqCst);
    }

    /// Number of audited cuts and the smallest observed value of
    /// `(log-volume drop) − 1/(2(n+1))`.
    pub fn summary() -> (u64, f64) {
        (CUTS.load(Ordering::SeqCst), *WORST.lock().unwrap())
    }

    /// Log-determinant volume before a cut, when auditing.
    pub(super) fn exact_before(e: &Ellipsoid) -> Option<f64> {
        ENABLED
            .load(Ordering::Relaxed)
            .then(|| e.log_volume_exact().unwrap_or(f64::NAN))
    }

    pub(super) fn record(e: &Ellipsoid, before: Option<f64>) {
        let Some(before) = before else {
            return;
        };
        let n = e.dim() as f64;
        // Both volumes come from the factors, so the drop is that of the
        // ellipsoid actually held, whatever the cached value.
        let after = e.log_volume_exact().unwrap_or(f64::NAN);
        let drop = before - after;
        let slack = drop - 1.0 / (2.0 * (n + 1.0));
        CUTS.fetch_add(1, Ordering::Relaxed);
        let mut w = WORST.lock().unwrap();
        if !(slack >= *w) {
            *w = if slack.is_nan() {
                f64::NEG_INFINITY
            } else {
                slack
            };
        }
    }
}

/// One record of the optional iteration trace.
#[derive(Clone, Debug, Serialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub log_volume: f64,
    pub cut_kind: &'static str,
}

/// What the driver should do at the current center.
pub enum Step {
    Stop,
    Cut {
        normal: DVector<f64>,
        kind: &'static str,
    },
}

#[derive(Clone, Copy, Debug)]
pub struct EngineLimits {
    pub log_volume_floor: f64,
    pub cap: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DriveExit {
    Stopped { iterations: usize },
    VolumeFloor { iterations: usize },
}

/// Runs central cuts until the step function stops, the volume drops below
/// the floor, or the cap is hit (an error).
pub fn drive<F>(
    e: &mut Ellipsoid,
    limits: EngineLimits,
    mut step: F,
    mut trace: Option<&mut Vec<TraceRecord>>,
) -> Result<DriveExit>
where
    F: FnMut(&Ellipsoid) -> Result<Step>,
{
    let mut iter = 0;
    loop {
        if e.log_volume() < limits.log_volume_floor {
            return Ok(DriveExit::VolumeFloor { iterations: iter });
        }
        if iter >= limits.cap {
            return Err(Error::IterationCapExceeded { cap: limits.cap });
        }
        match step(e)? {
            Step::Stop => return Ok(DriveExit::Stopped { iterations: iter }),
            Step::Cut { normal, kind } => {
                e.central_cut(&normal)?;
                iter += 1;
                if let Some(t) = trace.as_deref_mut() {
                    t.push(TraceRecord {
                        iter,
                        log_volume: e.log_volume(),
                        cut_kind: kind,
                    });
                }
            }
        }
    }
}

/// Answer of a separation oracle used by [`feasibility_engine`].
pub enum Probe {
    Inside,
    Outside(Halfspace),
}

#[derive(Clone, Debug)]
pub enum Feasibility {
    Found(DVector<f64>),
    Infeasible(Vec<Halfspace>),
}

/// Classic ellipsoid feasibility loop over a separation oracle.
pub fn feasibility_engine<F>(
    mut sep: F,
    init: Ellipsoid,
    log_volume_floor: f64,
    cap: usize,
) -> Result<Feasibility>
where
    F: FnMut(&DVector<f64>) -> Result<Probe>,
{
    let mut e = init;
    let mut cuts = Vec::new();
    let mut found = None;
    let exit = drive(
        &mut e,
        EngineLimits {
            log_volume_floor,
            cap,
        },
        |e| match sep(e.center())? {
            Probe::Inside => {
                found = Some(e.center().clone());
                Ok(Step::Stop)
            }
            Probe::Outside(h) => {
                let normal = h.normal.clone();
                cuts.push(h);
                Ok(Step::Cut {
                    normal,
                    kind: "separation",
                })
            }
        },
        None,
    )?;
    Ok(match exit {
        DriveExit::Stopped { .. } => Feasibility::Found(found.expect("stopped on a member")),
        DriveExit::VolumeFloor { .. } => Feasibility::Infeasible(cuts),
    })
}

/// Default iteration cap `⌈4(n+1)·n·ln(2D/ε)⌉`.
pub fn default_cap(n: usize, d_bound: f64, eps: f64) -> usize {
    let nf = n as f64;
    let v = 4.0 * (nf + 1.0) * nf * (2.0 * d_bound / eps).ln().max(1.0);
    v.ceil() as usize
}
