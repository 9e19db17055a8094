//! Spectral projected gradient for the group-constrained least-squares
//! subproblem, Newton root-finding on the Pareto curve, and the
//! cross-validation stopping rule.

use std::collections::VecDeque;

use num_complex::Complex64;

use super::groups::{group_norm_inf2, project_group_l1, GroupStructure};
use super::operator::SensingOperator;
use super::trace::{IterationRecord, ParetoRecord, SolveTrace};
use crate::error::{Error, Result};
use crate::CMatrix;

/// Step halvings tried before a line search is declared stalled.
const MAX_BACKTRACKS: usize = 50;
/// Newton updates before giving up on the root.
const MAX_NEWTON_STEPS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub alpha_min: f64,
    pub alpha_max: f64,
    /// Sufficient-descent parameter in `(0, 0.5)`.
    pub gamma: f64,
    /// Nonmonotone line-search memory.
    pub history: usize,
    /// Final duality-gap tolerance, relative to `|Y|_F`.
    pub gap_tol: f64,
    /// First Newton step's gap tolerance, relative to `|Y|_F`; shrinks by
    /// `gap_shrink` per step down to `gap_tol`.
    pub gap_tol_initial: f64,
    pub gap_shrink: f64,
    /// Pareto root tolerance, relative to `|Y|_F`.
    pub root_tol: f64,
    /// CV patience in iterations.
    pub patience: usize,
    /// Cap on SPG iterations summed over all Newton steps.
    pub max_iter: usize,
    /// Residual target; `None` selects CV mode where available.
    pub sigma: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            alpha_min: 1e-16,
            alpha_max: 1e16,
            gamma: 1e-4,
            history: 3,
            gap_tol: 1e-6,
            gap_tol_initial: 1e-2,
            gap_shrink: 0.1,
            root_tol: 1e-5,
            patience: 30,
            max_iter: 600,
            sigma: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha_min > 0.0
            && self.alpha_min < self.alpha_max
            && self.gamma > 0.0
            && self.gamma < 0.5
            && self.history >= 1
            && self.gap_tol > 0.0
            && self.gap_tol_initial >= self.gap_tol
            && self.gap_shrink > 0.0
            && self.gap_shrink < 1.0
            && self.root_tol > 0.0
            && self.max_iter > 0
            && self.sigma.is_none_or(|s| s >= 0.0 && s.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("inconsistent solver configuration {self:?}")))
        }
    }
}

/// How a solve ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Duality gap (SPG) or Pareto root (Newton) reached.
    Converged,
    /// Data already explained by `J = 0`.
    ZeroSolution,
    IterationLimit,
    /// Line search could not decrease the objective further.
    Stalled,
    /// CV residual rose for `patience` iterations after its minimum.
    PatienceTriggered,
    /// CV mode ended before the patience rule fired.
    PatienceNotTriggered,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub j: CMatrix,
    /// `Y - Phi J` on the fitted entries.
    pub residual: CMatrix,
    pub tau: f64,
    pub status: SolveStatus,
    pub trace: SolveTrace,
}

impl SolveResult {
    pub fn residual_norm(&self) -> f64 {
        self.residual.norm()
    }
}

/// What the iteration callback sees after every accepted step.
pub(crate) struct IterationView<'a> {
    pub iteration: usize,
    pub j: &'a CMatrix,
    /// Unmasked `Phi J`.
    pub model: &'a CMatrix,
    pub r_norm: f64,
}

pub(crate) enum Control {
    Continue,
    Stop,
}

struct SpgState {
    j: CMatrix,
    model: CMatrix,
    r: CMatrix,
    g: CMatrix,
    alpha: f64,
    iterations: usize,
}

enum InnerOutcome {
    Converged,
    IterationLimit,
    Stalled,
    Stopped,
}

struct Engine<'o, 'a> {
    op: &'o SensingOperator<'a>,
    y: CMatrix,
    groups: GroupStructure,
    cfg: SolverConfig,
    y_norm: f64,
}

fn re_dot(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

fn finite(m: &CMatrix) -> bool {
    m.iter().all(|v| v.is_finite())
}

impl<'o, 'a> Engine<'o, 'a> {
    fn new(op: &'o SensingOperator<'a>, y: &CMatrix, groups: GroupStructure, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        if op.phi().ncols() != groups.rows() {
            return Err(Error::invalid(format!(
                "sensing matrix has {} columns, groups expect {}",
                op.phi().ncols(),
                groups.rows()
            )));
        }
        if y.nrows() != op.phi().nrows() {
            return Err(Error::invalid("data rows do not match the sensing matrix"));
        }
        if !finite(y) {
            return Err(Error::Data("non-finite entries in the data matrix".into()));
        }
        let mut y = y.clone();
        op.restrict(&mut y);
        let y_norm = y.norm();
        Ok(Self { op, y, groups, cfg, y_norm })
    }

    fn state_at(&self, j: CMatrix, alpha: f64) -> SpgState {
        let model = self.op.apply(&j);
        let r = self.op.residual(&self.y, &model);
        let g = -self.op.adjoint(&r);
        SpgState { j, model, r, g, alpha, iterations: 0 }
    }

    fn gap(&self, s: &SpgState, tau: f64) -> f64 {
        let rn = s.r.norm();
        if rn == 0.0 {
            return 0.0;
        }
        (rn - (re_dot(&self.y, &s.r) - tau * group_norm_inf2(&s.g, self.groups)) / rn).abs()
    }

    /// SPG iterations on `LS_tau` from the current state. `observe` runs after
    /// every accepted step and may stop the run.
    fn spg(
        &self,
        s: &mut SpgState,
        tau: f64,
        gap_tol: f64,
        trace: &mut SolveTrace,
        observe: &mut dyn FnMut(&IterationView) -> Result<Control>,
    ) -> Result<InnerOutcome> {
        let projected = project_group_l1(&s.j, self.groups, tau)?;
        if projected != s.j {
            *s = SpgState { iterations: s.iterations, ..self.state_at(projected, s.alpha) };
        }
        let mut history: VecDeque<f64> = VecDeque::with_capacity(self.cfg.history);
        history.push_back(s.r.norm_squared());
        loop {
            let gap = self.gap(s, tau);
            if gap <= gap_tol {
                return Ok(InnerOutcome::Converged);
            }
            if s.iterations >= self.cfg.max_iter {
                return Ok(InnerOutcome::IterationLimit);
            }
            let reference = history.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut alpha = s.alpha;
            let mut accepted = None;
            for backtracks in 0..MAX_BACKTRACKS {
                let trial = project_group_l1(&(&s.j - &s.g * Complex64::new(alpha, 0.0)), self.groups, tau)?;
                let model = self.op.apply(&trial);
                let r = self.op.residual(&self.y, &model);
                let descent = re_dot(&(&trial - &s.j), &s.g);
                if r.norm_squared() <= reference + self.cfg.gamma * descent {
                    accepted = Some((trial, model, r, backtracks));
                    break;
                }
                alpha *= 0.5;
            }
            let Some((j_new, model, r, backtracks)) = accepted else {
                return Ok(InnerOutcome::Stalled);
            };
            let g_new = -self.op.adjoint(&r);
            if !finite(&j_new) || !finite(&g_new) {
                return Err(Error::Numerical {
                    iteration: s.iterations + 1,
                    message: "non-finite iterate".into(),
                });
            }
            let dj = &j_new - &s.j;
            let dg = &g_new - &s.g;
            let curvature = re_dot(&dj, &dg);
            s.alpha = if curvature <= 0.0 {
                self.cfg.alpha_max
            } else {
                (dj.norm_squared() / curvature).clamp(self.cfg.alpha_min, self.cfg.alpha_max)
            };
            s.j = j_new;
            s.model = model;
            s.r = r;
            s.g = g_new;
            s.iterations += 1;
            if history.len() == self.cfg.history {
                history.pop_front();
            }
            history.push_back(s.r.norm_squared());

            let r_norm = s.r.norm();
            trace.iterations.push(IterationRecord {
                iteration: s.iterations,
                tau,
                r_rec: r_norm,
                r_cv: f64::NAN,
                gap: self.gap(s, tau),
                step: alpha,
                backtracks,
            });
            let view = IterationView { iteration: s.iterations, j: &s.j, model: &s.model, r_norm };
            if let Control::Stop = observe(&view)? {
                return Ok(InnerOutcome::Stopped);
            }
        }
    }

    fn initial_alpha(&self, tau: f64, g0: &CMatrix) -> f64 {
        let dual = group_norm_inf2(g0, self.groups);
        let a = if tau > 0.0 && dual > 0.0 { tau / dual } else { 1.0 };
        a.clamp(self.cfg.alpha_min, self.cfg.alpha_max)
    }

    fn finish(&self, s: SpgState, tau: f64, status: SolveStatus, trace: SolveTrace) -> SolveResult {
        SolveResult { j: s.j, residual: s.r, tau, status, trace }
    }

    /// Newton iteration on `phi(tau) = sigma` with warm-started SPG solves.
    fn newton(
        &self,
        sigma: f64,
        observe: &mut dyn FnMut(&IterationView) -> Result<Control>,
    ) -> Result<(SolveResult, bool)> {
        let n_cols = self.y.ncols();
        let mut trace = SolveTrace::default();
        let zero = CMatrix::zeros(self.groups.rows(), n_cols);
        let mut s = self.state_at(zero, 1.0);
        let root_tol = self.cfg.root_tol * self.y_norm;
        if self.y_norm == 0.0 || sigma >= self.y_norm - root_tol {
            return Ok((self.finish(s, 0.0, SolveStatus::ZeroSolution, trace), false));
        }
        let gap_floor = self.cfg.gap_tol * self.y_norm;
        let mut tau = 0.0;
        let mut first = true;
        let mut stopped = false;
        let mut root_hit = false;
        let mut status = SolveStatus::IterationLimit;
        for h in 0..MAX_NEWTON_STEPS {
            let phi = s.r.norm();
            if (phi - sigma).abs() <= root_tol {
                status = SolveStatus::Converged;
                break;
            }
            let slope = if phi > 0.0 { -group_norm_inf2(&s.g, self.groups) / phi } else { 0.0 };
            trace.pareto.push(ParetoRecord { tau, phi, slope });
            if !(slope < 0.0) {
                return Err(Error::Numerical {
                    iteration: s.iterations,
                    message: format!("Pareto slope {slope:e} is not negative at tau = {tau:e}"),
                });
            }
            tau = (tau + (sigma - phi) / slope).max(0.0);
            if first {
                s.alpha = self.initial_alpha(tau, &s.g);
                first = false;
            }
            let scheduled = self.cfg.gap_tol_initial * self.y_norm * self.cfg.gap_shrink.powi(h as i32);
            let forcing = 0.1 * (phi - sigma).abs();
            let gap_tol = scheduled.min(forcing).max(gap_floor);
            let mut inner = |v: &IterationView| -> Result<Control> {
                if (v.r_norm - sigma).abs() <= root_tol {
                    root_hit = true;
                    return Ok(Control::Stop);
                }
                observe(v)
            };
            match self.spg(&mut s, tau, gap_tol, &mut trace, &mut inner)? {
                InnerOutcome::Converged => {}
                InnerOutcome::Stalled => status = SolveStatus::Stalled,
                InnerOutcome::IterationLimit => {
                    status = SolveStatus::IterationLimit;
                    break;
                }
                InnerOutcome::Stopped => {
                    if root_hit {
                        status = SolveStatus::Converged;
                    } else {
                        stopped = true;
                    }
                    break;
                }
            }
        }
        Ok((self.finish(s, tau, status, trace), stopped))
    }
}

/// Minimises `|Phi J - Y|_F` subject to `group_norm_12(J) <= tau` from `j_init`.
pub fn spg_solve_lstau(
    op: &SensingOperator,
    y: &CMatrix,
    j_init: &CMatrix,
    tau: f64,
    groups: GroupStructure,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    if !(tau >= 0.0) {
        return Err(Error::invalid(format!("tau must be non-negative, got {tau}")));
    }
    let e = Engine::new(op, y, groups, *cfg)?;
    if j_init.shape() != (groups.rows(), y.ncols()) {
        return Err(Error::invalid("initial contrast sources have the wrong shape"));
    }
    let mut s = e.state_at(project_group_l1(j_init, groups, tau)?, 1.0);
    s.alpha = e.initial_alpha(tau, &-op.adjoint(&e.y));
    let mut trace = SolveTrace::default();
    let outcome = e.spg(&mut s, tau, cfg.gap_tol * e.y_norm, &mut trace, &mut |_| Ok(Control::Continue))?;
    let status = match outcome {
        InnerOutcome::Converged | InnerOutcome::Stopped => SolveStatus::Converged,
        InnerOutcome::IterationLimit => SolveStatus::IterationLimit,
        InnerOutcome::Stalled => SolveStatus::Stalled,
    };
    Ok(e.finish(s, tau, status, trace))
}

/// Value and slope of the Pareto curve at an `LS_tau` solution `j`:
/// `phi = |Phi J - Y|_F`, `phi' = -|Phi^H (Phi J - Y)|_{inf,2} / phi`.
/// The slope is `None` when the residual vanishes (root reached).
pub fn pareto_value_and_slope(
    op: &SensingOperator,
    y: &CMatrix,
    j: &CMatrix,
    groups: GroupStructure,
) -> Result<(f64, Option<f64>)> {
    let mut y = y.clone();
    op.restrict(&mut y);
    let r = op.residual(&y, &op.apply(j));
    let phi = r.norm();
    if phi == 0.0 {
        return Ok((0.0, None));
    }
    Ok((phi, Some(-group_norm_inf2(&op.adjoint(&r), groups) / phi)))
}

/// Smallest `group_norm_12(J)` with `|Phi J - Y|_F <= sigma`, by Newton
/// iteration on the Pareto curve.
pub fn newton_root_bpsigma(
    op: &SensingOperator,
    y: &CMatrix,
    sigma: f64,
    groups: GroupStructure,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("sigma must be finite and non-negative, got {sigma}")));
    }
    let e = Engine::new(op, y, groups, *cfg)?;
    Ok(e.newton(sigma, &mut |_| Ok(Control::Continue))?.0)
}

/// Drives the residual toward zero on `fit_mask` entries and keeps the
/// iterate with the smallest residual on `cv_mask` entries. Stops once the
/// CV residual has not improved for `cfg.patience` iterations.
pub fn cv_spgl1(
    phi: &CMatrix,
    y: &CMatrix,
    fit_mask: Vec<bool>,
    cv_mask: &[bool],
    groups: GroupStructure,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    if cv_mask.len() != y.len() || fit_mask.len() != y.len() {
        return Err(Error::invalid("masks must match the data shape"));
    }
    if !cv_mask.iter().any(|&m| m) {
        return Err(Error::invalid("cross-validation set is empty"));
    }
    if fit_mask.iter().zip(cv_mask).any(|(&a, &b)| a && b) {
        return Err(Error::invalid("an entry is both fitted and held out"));
    }
    let op = SensingOperator::new(phi, Some(fit_mask), y.ncols())?;
    let e = Engine::new(&op, y, groups, *cfg)?;
    let patience = cfg.patience;
    let mut best: Option<(f64, usize, CMatrix)> = None;
    let mut cv_values: Vec<f64> = Vec::new();
    let mut observe = |v: &IterationView| -> Result<Control> {
        let mut acc = 0.0;
        for ((yv, mv), &keep) in y.iter().zip(v.model.iter()).zip(cv_mask) {
            if keep {
                acc += (yv - mv).norm_sqr();
            }
        }
        let r_cv = acc.sqrt();
        cv_values.push(r_cv);
        if best.as_ref().is_none_or(|(b, _, _)| r_cv < *b) {
            best = Some((r_cv, v.iteration, v.j.clone()));
        }
        let n_opt = best.as_ref().map_or(0, |b| b.1);
        Ok(if v.iteration > n_opt + patience { Control::Stop } else { Control::Continue })
    };
    let (mut res, stopped) = e.newton(0.0, &mut observe)?;
    for (rec, &cv) in res.trace.iterations.iter_mut().zip(&cv_values) {
        rec.r_cv = cv;
    }
    res.status = if stopped { SolveStatus::PatienceTriggered } else { SolveStatus::PatienceNotTriggered };
    if let Some((_, n_opt, j)) = best {
        res.trace.n_opt = Some(n_opt);
        let model = op.apply(&j);
        res.residual = op.residual(&e.y, &model);
        res.tau = res.trace.iterations.get(n_opt - 1).map_or(0.0, |r| r.tau);
        res.j = j;
    }
    Ok(res)
}
