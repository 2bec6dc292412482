//! Predictor–corrector continuation for the Pareto critical set of
//! `min (L(x), ‖x‖₁)` — the regularization path.
//!
//! The critical set is piecewise smooth: each piece is described by an active
//! set `A` (the indices allowed to be nonzero) and a sign vector σ, on which
//! the first-order conditions reduce to the smooth system
//!
//! ```text
//! ∇_A L(x) + λσ = 0,   x_i = 0 for i ∉ A,   |∇L(x)_i| ≤ λ for i ∉ A.
//! ```
//!
//! The path is parametrized by λ descending from `λ_max = ‖∇L(0)‖_∞` (below
//! which `x = 0` stops being critical). Predictor steps follow the tangent
//! `dx_A/dλ = −(∇²_AA L)⁻¹σ`, corrector steps re-solve the reduced system by
//! Newton's method, and kinks — components of `x_A` crossing zero, or inactive
//! dual constraints becoming tight — are localized by bisection and change the
//! active set by exactly one entry.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::io::fmt_f64;
use crate::problem::central_difference;

/// A twice continuously differentiable loss. `hessian` falls back to central
/// finite differences of the gradient with step `1e-5·(1+|x_i|)`.
pub trait SmoothObjective: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &DVector<f64>) -> f64;
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;

    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dim();
        let mut h = DMatrix::zeros(n, n);
        for j in 0..n {
            let step = 1e-5 * (1.0 + x[j].abs());
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += step;
            xm[j] -= step;
            let col = (self.gradient(&xp) - self.gradient(&xm)) / (2.0 * step);
            h.set_column(j, &col);
        }
        // Symmetrize the finite-difference result.
        let ht = h.transpose();
        (h + ht) * 0.5
    }
}

/// Verifies the [`SmoothObjective`] contract at the given points: gradient
/// matches finite differences of the value (1e-5 relative) and the Hessian is
/// symmetric within 1e-10.
pub fn check_smooth_objective(
    l: &dyn SmoothObjective,
    points: &[DVector<f64>],
) -> Result<(), ContinuationError> {
    for x in points {
        let g = l.gradient(x);
        let fd = central_difference(|y| l.value(y), x);
        let dev = (&g - &fd).norm();
        if dev > 1e-5 * (1.0 + g.norm()) {
            return Err(ContinuationError::GradientMismatch { deviation: dev });
        }
        let h = l.hessian(x);
        if (&h - h.transpose()).norm() > 1e-10 {
            return Err(ContinuationError::AsymmetricHessian);
        }
    }
    Ok(())
}

#[derive(Debug, Error)]
pub enum ContinuationError {
    #[error("Newton corrector did not converge within {0} iterations")]
    NewtonDiverged(usize),
    #[error("corrected point violates the sign pattern at component {index}")]
    SignViolation { index: usize },
    #[error("reduced Hessian is singular")]
    SingularHessian,
    #[error("lambda must be nonnegative, got {0}")]
    NegativeLambda(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("gradient deviates from finite differences by {deviation:.3e}")]
    GradientMismatch { deviation: f64 },
    #[error("hessian is not symmetric")]
    AsymmetricHessian,
    #[error("event bisection failed: {0}")]
    EventLocalization(String),
    #[error("lambda {lambda} is outside the traced range")]
    OutOfRange { lambda: f64 },
}

/// An active-set change on the path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEvent {
    pub lambda: f64,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    /// Component `index` enters the active set with the given sign.
    Activate { index: usize, sign: f64 },
    /// Component `index` leaves the active set (crossed zero).
    Deactivate { index: usize },
}

/// One smooth piece of the path: indices 0-based, λ decreasing along
/// `samples`.
#[derive(Debug, Clone)]
pub struct PathSegment {
    pub active_set: Vec<usize>,
    pub signs: Vec<f64>,
    pub samples: Vec<(f64, DVector<f64>)>,
    pub entry_event: Option<PathEvent>,
    pub exit_event: Option<PathEvent>,
}

impl PathSegment {
    pub fn lambda_hi(&self) -> f64 {
        self.samples.first().map_or(f64::NAN, |s| s.0)
    }

    pub fn lambda_lo(&self) -> f64 {
        self.samples.last().map_or(f64::NAN, |s| s.0)
    }
}

/// The traced regularization path over `(λ_stop, λ_max]`.
#[derive(Debug, Clone)]
pub struct RegPath {
    pub segments: Vec<PathSegment>,
    pub lambda_max: f64,
    pub lambda_stop: f64,
    /// Set when tracing stopped early (stagnation); the path is then partial.
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ContinuationConfig {
    /// Tracing stops once λ falls to this value.
    pub lambda_stop: f64,
    /// Initial predictor step; defaults to `λ_max / 100`.
    pub dlambda_init: Option<f64>,
    /// Cap on the predictor step; defaults to `λ_max / 10`.
    pub dlambda_max: Option<f64>,
    pub max_segments: usize,
    /// Bound on predictor/corrector rounds across the whole trace.
    pub max_steps: usize,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Events are localized to a λ-interval of this width.
    pub event_tol: f64,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        Self {
            lambda_stop: 1e-6,
            dlambda_init: None,
            dlambda_max: None,
            max_segments: 100,
            max_steps: 100_000,
            newton_tol: 1e-10,
            newton_max_iter: 50,
            event_tol: 1e-9,
        }
    }
}

/// `λ_max = ‖∇L(0)‖_∞`: for λ at or above this, `x = 0` is Pareto critical.
pub fn lambda_max(l: &dyn SmoothObjective) -> f64 {
    let g = l.gradient(&DVector::zeros(l.dim()));
    g.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn embed(active: &[usize], xa: &DVector<f64>, n: usize) -> DVector<f64> {
    let mut x = DVector::zeros(n);
    for (slot, &i) in active.iter().enumerate() {
        x[i] = xa[slot];
    }
    x
}

fn restrict(active: &[usize], v: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(active.len(), active.iter().map(|&i| v[i]))
}

fn reduced_hessian(l: &dyn SmoothObjective, active: &[usize], x: &DVector<f64>) -> DMatrix<f64> {
    let h = l.hessian(x);
    let m = active.len();
    DMatrix::from_fn(m, m, |r, c| h[(active[r], active[c])])
}

/// Newton on the reduced stationarity system, ignoring the sign pattern.
/// Returns the full-space solution with `x_i = 0` off the active set.
fn corrector_relaxed(
    l: &dyn SmoothObjective,
    active: &[usize],
    signs: &[f64],
    lambda: f64,
    x_guess: &DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<DVector<f64>, ContinuationError> {
    let n = l.dim();
    if active.is_empty() {
        return Ok(DVector::zeros(n));
    }
    let sigma = DVector::from_iterator(signs.len(), signs.iter().copied());
    let mut xa = restrict(active, x_guess);
    for _ in 0..max_iter {
        let x = embed(active, &xa, n);
        let residual = restrict(active, &l.gradient(&x)) + &sigma * lambda;
        if residual.amax() <= tol {
            return Ok(x);
        }
        let h = reduced_hessian(l, active, &x);
        let delta = h
            .full_piv_lu()
            .solve(&residual)
            .ok_or(ContinuationError::SingularHessian)?;
        xa -= delta;
        if xa.iter().any(|v| !v.is_finite()) {
            return Err(ContinuationError::NewtonDiverged(max_iter));
        }
    }
    // Accept if the final iterate already satisfies the tolerance.
    let x = embed(active, &xa, n);
    let residual = restrict(active, &l.gradient(&x)) + sigma * lambda;
    if residual.amax() <= tol {
        Ok(x)
    } else {
        Err(ContinuationError::NewtonDiverged(max_iter))
    }
}

/// Corrector step: returns the Pareto critical point at `lambda` on the piece
/// `(active, signs)`, started from `x_guess`.
///
/// Converges the reduced stationarity residual to ≤ 1e-10 and requires the
/// corrected signs to match σ; a sign violation signals a missed event.
pub fn corrector(
    l: &dyn SmoothObjective,
    active: &[usize],
    signs: &[f64],
    lambda: f64,
    x_guess: &DVector<f64>,
) -> Result<DVector<f64>, ContinuationError> {
    if lambda < 0.0 {
        return Err(ContinuationError::NegativeLambda(lambda));
    }
    let x = corrector_relaxed(l, active, signs, lambda, x_guess, 1e-10, 50)?;
    for (slot, &i) in active.iter().enumerate() {
        if x[i] * signs[slot] <= 0.0 {
            return Err(ContinuationError::SignViolation { index: i });
        }
    }
    Ok(x)
}

/// Predictor step: first-order extrapolation along the path tangent
/// `dx_A/dλ = −(∇²_AA L)⁻¹ σ`. Returns `(λ − dλ, x_guess)`.
pub fn predictor(
    l: &dyn SmoothObjective,
    active: &[usize],
    signs: &[f64],
    lambda: f64,
    x: &DVector<f64>,
    dlambda: f64,
) -> Result<(f64, DVector<f64>), ContinuationError> {
    if active.is_empty() || dlambda == 0.0 {
        return Ok((lambda - dlambda, x.clone()));
    }
    let h = reduced_hessian(l, active, x);
    let sigma = DVector::from_iterator(signs.len(), signs.iter().copied());
    // tangent = −H⁻¹σ; x(λ−dλ) = x − dλ·tangent = x + dλ·H⁻¹σ.
    let hinv_sigma = h
        .full_piv_lu()
        .solve(&sigma)
        .ok_or(ContinuationError::SingularHessian)?;
    let mut guess = x.clone();
    for (slot, &i) in active.iter().enumerate() {
        guess[i] += dlambda * hinv_sigma[slot];
    }
    Ok((lambda - dlambda, guess))
}

/// First-order validity of a corrected point on the piece `(active, signs)`:
/// sign pattern holds strictly and every inactive dual constraint
/// `|∇L_i| ≤ λ` is satisfied.
fn piece_valid(
    l: &dyn SmoothObjective,
    active: &[usize],
    signs: &[f64],
    lambda: f64,
    x: &DVector<f64>,
) -> bool {
    for (slot, &i) in active.iter().enumerate() {
        if x[i] * signs[slot] <= 0.0 {
            return false;
        }
    }
    let g = l.gradient(x);
    let slack = 1e-12 * (1.0 + lambda);
    for i in 0..l.dim() {
        if !active.contains(&i) && g[i].abs() > lambda + slack {
            return false;
        }
    }
    true
}

/// Classifies the violation at an invalid point; lowest index wins when
/// several components cross simultaneously.
fn classify_event(
    l: &dyn SmoothObjective,
    active: &[usize],
    signs: &[f64],
    lambda: f64,
    x: &DVector<f64>,
) -> Option<EventKind> {
    let g = l.gradient(x);
    let slack = 1e-12 * (1.0 + lambda);
    let mut best: Option<(usize, EventKind)> = None;
    for (slot, &i) in active.iter().enumerate() {
        if x[i] * signs[slot] <= 0.0 && best.as_ref().is_none_or(|(bi, _)| i < *bi) {
            best = Some((i, EventKind::Deactivate { index: i }));
        }
    }
    for i in 0..l.dim() {
        if !active.contains(&i)
            && g[i].abs() > lambda + slack
            && best.as_ref().is_none_or(|(bi, _)| i < *bi)
        {
            best = Some((
                i,
                EventKind::Activate {
                    index: i,
                    sign: -g[i].signum(),
                },
            ));
        }
    }
    best.map(|(_, kind)| kind)
}

/// Localizes the active-set change inside a λ window whose ends straddle
/// validity: one end lies on the piece `(active, signs)`, the other violates
/// it. Returns `None` when the whole window is valid.
///
/// The window may be traversed in either direction; bisection narrows it to
/// `event_tol` (1e-9) and the event λ is the midpoint of the final bracket.
pub fn detect_event(
    l: &dyn SmoothObjective,
    active: &[usize],
    signs: &[f64],
    window: (f64, f64),
    x_start: &DVector<f64>,
) -> Result<Option<PathEvent>, ContinuationError> {
    let correct = |lam: f64, guess: &DVector<f64>| {
        corrector_relaxed(l, active, signs, lam, guess, 1e-10, 50)
    };
    let (la, lb) = window;
    let xa = correct(la, x_start)?;
    let xb = correct(lb, &xa)?;
    let va = piece_valid(l, active, signs, la, &xa);
    let vb = piece_valid(l, active, signs, lb, &xb);
    if va && vb {
        return Ok(None);
    }
    if !va && !vb {
        return Err(ContinuationError::EventLocalization(
            "window has no valid end".into(),
        ));
    }
    let (mut lam_ok, mut x_ok, mut lam_bad, mut x_bad) = if va {
        (la, xa, lb, xb)
    } else {
        (lb, xb, la, xa)
    };
    while (lam_ok - lam_bad).abs() > 1e-9 {
        let mid = 0.5 * (lam_ok + lam_bad);
        let xm = correct(mid, &x_ok)?;
        if piece_valid(l, active, signs, mid, &xm) {
            lam_ok = mid;
            x_ok = xm;
        } else {
            lam_bad = mid;
            x_bad = xm;
        }
    }
    let kind = classify_event(l, active, signs, lam_bad, &x_bad).ok_or_else(|| {
        ContinuationError::EventLocalization("no violated condition at the invalid end".into())
    })?;
    Ok(Some(PathEvent {
        lambda: 0.5 * (lam_ok + lam_bad),
        kind,
    }))
}

/// Traces the regularization path of `(L, ‖·‖₁)` from `(λ_max, 0)` down to
/// `cfg.lambda_stop`.
///
/// Stagnation yields a partial path with a diagnostic instead of an error.
pub fn trace_path(
    l: &dyn SmoothObjective,
    cfg: &ContinuationConfig,
) -> Result<RegPath, ContinuationError> {
    if !(cfg.lambda_stop > 0.0) {
        return Err(ContinuationError::InvalidConfig(
            "lambda_stop must be positive".into(),
        ));
    }
    let n = l.dim();
    let g0 = l.gradient(&DVector::zeros(n));
    let lmax = g0.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    if lmax <= cfg.lambda_stop {
        // ∇L(0) (essentially) vanishes: the path degenerates to the origin.
        return Ok(RegPath {
            segments: vec![PathSegment {
                active_set: vec![],
                signs: vec![],
                samples: vec![(lmax, DVector::zeros(n))],
                entry_event: None,
                exit_event: None,
            }],
            lambda_max: lmax,
            lambda_stop: cfg.lambda_stop,
            diagnostic: None,
        });
    }

    // First activation: the component(s) attaining ‖∇L(0)‖_∞; lowest index.
    let first = (0..n)
        .find(|&i| g0[i].abs() >= lmax - 1e-15 * lmax)
        .expect("some component attains the max");
    let entry = PathEvent {
        lambda: lmax,
        kind: EventKind::Activate {
            index: first,
            sign: -g0[first].signum(),
        },
    };

    let mut active = vec![first];
    let mut signs = vec![-g0[first].signum()];
    let mut lambda = lmax;
    let mut x = DVector::zeros(n);
    let mut segment = PathSegment {
        active_set: active.clone(),
        signs: signs.clone(),
        samples: vec![(lambda, x.clone())],
        entry_event: Some(entry),
        exit_event: None,
    };
    let mut segments: Vec<PathSegment> = Vec::new();
    let mut diagnostic = None;

    let dl_init = cfg.dlambda_init.unwrap_or(lmax / 100.0);
    let dl_max = cfg.dlambda_max.unwrap_or(lmax / 10.0);
    let dl_min = 1e-12 * lmax.max(1.0);
    let mut dl = dl_init.min(dl_max);

    let mut steps = 0usize;
    'trace: while lambda > cfg.lambda_stop {
        steps += 1;
        if steps > cfg.max_steps {
            diagnostic = Some(format!("step budget exhausted at lambda {lambda:.6e}"));
            break;
        }
        if segments.len() + 1 > cfg.max_segments {
            diagnostic = Some(format!("segment budget exhausted at lambda {lambda:.6e}"));
            break;
        }
        let target = (lambda - dl).max(cfg.lambda_stop);
        let step_taken = lambda - target;
        let guess = match predictor(l, &active, &signs, lambda, &x, step_taken) {
            Ok((_, guess)) => guess,
            Err(_) => {
                dl *= 0.5;
                if dl < dl_min {
                    diagnostic = Some(format!("predictor stagnation at lambda {lambda:.6e}"));
                    break 'trace;
                }
                continue;
            }
        };
        let corrected = corrector_relaxed(
            l,
            &active,
            &signs,
            target,
            &guess,
            cfg.newton_tol,
            cfg.newton_max_iter,
        );
        let xc = match corrected {
            Ok(xc) => xc,
            Err(_) => {
                dl *= 0.5;
                if dl < dl_min {
                    diagnostic = Some(format!("corrector stagnation at lambda {lambda:.6e}"));
                    break 'trace;
                }
                continue;
            }
        };
        if piece_valid(l, &active, &signs, target, &xc) {
            segment.samples.push((target, xc.clone()));
            lambda = target;
            x = xc;
            dl = (dl * 1.2).min(dl_max);
            continue;
        }
        // An event lies in (target, lambda]: localize it and switch pieces.
        let event = match detect_event(l, &active, &signs, (lambda, target), &x) {
            Ok(Some(ev)) => ev,
            Ok(None) => {
                diagnostic = Some(format!(
                    "inconsistent validity while bracketing near lambda {target:.6e}"
                ));
                break 'trace;
            }
            Err(e) => {
                diagnostic = Some(format!("event localization failed: {e}"));
                break 'trace;
            }
        };
        let mut x_event =
            match corrector_relaxed(l, &active, &signs, event.lambda, &x, cfg.newton_tol, cfg.newton_max_iter) {
                Ok(v) => v,
                Err(e) => {
                    diagnostic = Some(format!("corrector failed at event: {e}"));
                    break 'trace;
                }
            };
        segment.samples.push((event.lambda, x_event.clone()));
        segment.exit_event = Some(event.clone());
        segments.push(segment);

        match event.kind {
            EventKind::Deactivate { index } => {
                let slot = active.iter().position(|&i| i == index).expect("active index");
                active.remove(slot);
                signs.remove(slot);
                x_event[index] = 0.0;
            }
            EventKind::Activate { index, sign } => {
                let pos = active.iter().position(|&i| i > index).unwrap_or(active.len());
                active.insert(pos, index);
                signs.insert(pos, sign);
                x_event[index] = 0.0;
            }
        }
        segment = PathSegment {
            active_set: active.clone(),
            signs: signs.clone(),
            samples: vec![(event.lambda, x_event.clone())],
            entry_event: Some(event),
            exit_event: None,
        };
        lambda = segment.samples[0].0;
        x = x_event;
    }

    segments.push(segment);
    Ok(RegPath {
        segments,
        lambda_max: lmax,
        lambda_stop: cfg.lambda_stop,
        diagnostic,
    })
}

impl RegPath {
    /// Distinct active-set change events along the path, in trace order.
    pub fn events(&self) -> Vec<&PathEvent> {
        self.segments
            .iter()
            .filter_map(|s| s.entry_event.as_ref())
            .collect()
    }

    /// Evaluates the path at `lambda` by re-correcting on the segment whose
    /// λ-interval contains it. Above `λ_max` the path is the origin.
    pub fn eval(
        &self,
        l: &dyn SmoothObjective,
        lambda: f64,
    ) -> Result<DVector<f64>, ContinuationError> {
        if lambda < 0.0 {
            return Err(ContinuationError::NegativeLambda(lambda));
        }
        if lambda >= self.lambda_max {
            return Ok(DVector::zeros(l.dim()));
        }
        let seg = self
            .segments
            .iter()
            .find(|s| lambda <= s.lambda_hi() && lambda >= s.lambda_lo())
            .or_else(|| self.segments.last())
            .ok_or(ContinuationError::OutOfRange { lambda })?;
        // Warm start from the nearest stored sample.
        let (_, x0) = seg
            .samples
            .iter()
            .min_by(|a, b| {
                (a.0 - lambda)
                    .abs()
                    .partial_cmp(&(b.0 - lambda).abs())
                    .unwrap()
            })
            .ok_or(ContinuationError::OutOfRange { lambda })?;
        corrector(l, &seg.active_set, &seg.signs, lambda, x0)
    }

    /// Path CSV: `lambda, active_set (semicolon-joined, 0-based), x_1..x_n,
    /// L_value, l1_norm`. Consecutive duplicate boundary samples are emitted
    /// once.
    pub fn write_csv(&self, l: &dyn SmoothObjective, w: &mut impl Write) -> std::io::Result<()> {
        let n = l.dim();
        let mut header = vec!["lambda".to_string(), "active_set".to_string()];
        header.extend((1..=n).map(|i| format!("x_{i}")));
        header.push("L_value".into());
        header.push("l1_norm".into());
        writeln!(w, "{}", header.join(","))?;
        let mut last: Option<(f64, DVector<f64>)> = None;
        for seg in &self.segments {
            let aset = seg
                .active_set
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(";");
            for (lam, x) in &seg.samples {
                if let Some((pl, px)) = &last {
                    if pl == lam && px == x {
                        continue;
                    }
                }
                let mut row = vec![fmt_f64(*lam), aset.clone()];
                row.extend(x.iter().map(|v| fmt_f64(*v)));
                row.push(fmt_f64(l.value(x)));
                row.push(fmt_f64(x.iter().map(|v| v.abs()).sum()));
                writeln!(w, "{}", row.join(","))?;
                last = Some((*lam, x.clone()));
            }
        }
        Ok(())
    }

    /// Checks the per-sample first-order conditions: exact complementarity,
    /// stationarity `∇_A L + λσ = 0` within `tol`, and dual feasibility
    /// `|∇L_i| ≤ λ + tol` off the active set.
    pub fn check_kkt(&self, l: &dyn SmoothObjective, tol: f64) -> Result<(), ContinuationError> {
        for seg in &self.segments {
            for (lam, x) in &seg.samples {
                let g = l.gradient(x);
                for i in 0..l.dim() {
                    if let Some(slot) = seg.active_set.iter().position(|&a| a == i) {
                        let r = (g[i] + lam * seg.signs[slot]).abs();
                        if r > tol {
                            return Err(ContinuationError::EventLocalization(format!(
                                "stationarity residual {r:.3e} at lambda {lam:.6e}"
                            )));
                        }
                    } else {
                        if x[i] != 0.0 {
                            return Err(ContinuationError::EventLocalization(format!(
                                "inactive component {i} is nonzero at lambda {lam:.6e}"
                            )));
                        }
                        if g[i].abs() > lam + tol {
                            return Err(ContinuationError::EventLocalization(format!(
                                "dual infeasibility at component {i}, lambda {lam:.6e}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Subgradient-inclusion check for the weighted-sum consistency of a path
/// point: `0 ∈ α₁∇L(x) + α₂∂‖x‖₁` with `α₁ = 1/(1+λ)`, `α₂ = λ/(1+λ)`.
pub fn weighted_sum_consistent(
    l: &dyn SmoothObjective,
    x: &DVector<f64>,
    lambda: f64,
    tol: f64,
) -> bool {
    let a1 = 1.0 / (1.0 + lambda);
    let a2 = lambda / (1.0 + lambda);
    let g = l.gradient(x);
    for i in 0..x.len() {
        if x[i] != 0.0 {
            if (a1 * g[i] + a2 * x[i].signum()).abs() > tol {
                return false;
            }
        } else if (a1 * g[i]).abs() > a2 + tol {
            return false;
        }
    }
    true
}
