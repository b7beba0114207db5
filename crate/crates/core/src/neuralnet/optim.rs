//! The three training functions as iteration-level optimizers over a flat
//! parameter vector.
//!
//! Each optimizer keeps its own state and advances one epoch per call to
//! `step`. They only see the loss through [`Objective`], so the same code
//! drives network training and the plain test functions used to check the
//! algorithms.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::NetError;

/// A differentiable scalar function of the parameter vector.
pub trait Objective {
    fn dim(&self) -> usize;

    fn loss(&self, w: &[f64]) -> Result<f64, NetError>;

    /// Loss at `w`, with the gradient written into `grad`.
    fn loss_grad(&self, w: &[f64], grad: &mut [f64]) -> Result<f64, NetError>;
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

fn axpy(out: &mut [f64], w: &[f64], alpha: f64, d: &[f64]) {
    for ((o, wi), di) in out.iter_mut().zip(w).zip(d) {
        *o = wi + alpha * di;
    }
}

/// What happened during one optimizer epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    /// Loss at the (possibly unchanged) current parameters.
    pub loss: f64,
    pub grad_norm: f64,
    /// Whether the parameters moved.
    pub accepted: bool,
}

// ---------------------------------------------------------------------------
// GDX

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GdxParams {
    pub learning_rate: f64,
    pub momentum: f64,
    pub lr_increase: f64,
    pub lr_decrease: f64,
    pub max_perf_increase: f64,
}

impl Default for GdxParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            momentum: 0.9,
            lr_increase: 1.05,
            lr_decrease: 0.7,
            max_perf_increase: 1.04,
        }
    }
}

/// Gradient descent with momentum and an adaptive learning rate.
#[derive(Debug, Clone)]
pub struct Gdx {
    params: GdxParams,
    lr: f64,
    prev_step: Vec<f64>,
    loss: f64,
    grad: Vec<f64>,
    trial_w: Vec<f64>,
    trial_grad: Vec<f64>,
}

impl Gdx {
    pub fn new(params: GdxParams, obj: &impl Objective, w: &[f64]) -> Result<Self, NetError> {
        let mut grad = vec![0.0; w.len()];
        let loss = finite(obj.loss_grad(w, &mut grad)?)?;
        Ok(Self {
            params,
            lr: params.learning_rate,
            prev_step: vec![0.0; w.len()],
            loss,
            trial_w: vec![0.0; w.len()],
            trial_grad: vec![0.0; w.len()],
            grad,
        })
    }

    pub fn learning_rate(&self) -> f64 {
        self.lr
    }

    pub fn loss(&self) -> f64 {
        self.loss
    }

    pub fn grad_norm(&self) -> f64 {
        norm(&self.grad)
    }

    /// Tentative step `Δw = μ·Δw_prev − (1−μ)·η·g`.
    ///
    /// A step raising the loss by more than the allowed ratio is discarded,
    /// the learning rate shrinks and the momentum memory is cleared. Any
    /// strict improvement grows the learning rate.
    pub fn step(&mut self, obj: &impl Objective, w: &mut [f64]) -> Result<StepOutcome, NetError> {
        let mu = self.params.momentum;
        let scale = (1.0 - mu) * self.lr;
        for (s, g) in self.prev_step.iter_mut().zip(&self.grad) {
            *s = mu * *s - scale * g;
        }
        axpy(&mut self.trial_w, w, 1.0, &self.prev_step);
        let trial_loss = obj.loss_grad(&self.trial_w, &mut self.trial_grad)?;

        let rejected = !(trial_loss <= self.params.max_perf_increase * self.loss);
        if rejected {
            self.lr *= self.params.lr_decrease;
            self.prev_step.iter_mut().for_each(|s| *s = 0.0);
        } else {
            if trial_loss < self.loss {
                self.lr *= self.params.lr_increase;
            }
            w.copy_from_slice(&self.trial_w);
            core::mem::swap(&mut self.grad, &mut self.trial_grad);
            self.loss = trial_loss;
        }
        Ok(StepOutcome {
            loss: self.loss,
            grad_norm: norm(&self.grad),
            accepted: !rejected,
        })
    }
}

fn finite(x: f64) -> Result<f64, NetError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(NetError::NonFiniteLoss)
    }
}

// ---------------------------------------------------------------------------
// SCG

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScgParams {
    pub sigma: f64,
    pub lambda: f64,
}

impl Default for ScgParams {
    fn default() -> Self {
        Self {
            sigma: 5e-5,
            lambda: 5e-7,
        }
    }
}

/// Møller's scaled conjugate gradient.
///
/// Curvature along the search direction comes from a finite difference of
/// gradients; a Levenberg-Marquardt style scale `λ` keeps the local quadratic
/// model positive definite and replaces the line search.
#[derive(Debug, Clone)]
pub struct Scg {
    params: ScgParams,
    lambda: f64,
    lambda_bar: f64,
    /// Negative gradient at the current parameters.
    r: Vec<f64>,
    p: Vec<f64>,
    s: Vec<f64>,
    delta: f64,
    success: bool,
    loss: f64,
    iter: usize,
    work_w: Vec<f64>,
    work_g: Vec<f64>,
}

impl Scg {
    pub fn new(params: ScgParams, obj: &impl Objective, w: &[f64]) -> Result<Self, NetError> {
        let n = w.len();
        let mut g = vec![0.0; n];
        let loss = finite(obj.loss_grad(w, &mut g)?)?;
        let r: Vec<f64> = g.iter().map(|x| -x).collect();
        Ok(Self {
            params,
            lambda: params.lambda,
            lambda_bar: 0.0,
            p: r.clone(),
            r,
            s: vec![0.0; n],
            delta: 0.0,
            success: true,
            loss,
            iter: 0,
            work_w: vec![0.0; n],
            work_g: g,
        })
    }

    pub fn loss(&self) -> f64 {
        self.loss
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn grad_norm(&self) -> f64 {
        norm(&self.r)
    }

    pub fn step(&mut self, obj: &impl Objective, w: &mut [f64]) -> Result<StepOutcome, NetError> {
        let n = w.len();
        let p_sq = dot(&self.p, &self.p);
        if p_sq == 0.0 {
            return Ok(StepOutcome {
                loss: self.loss,
                grad_norm: norm(&self.r),
                accepted: false,
            });
        }
        let p_norm = libm::sqrt(p_sq);

        if self.success {
            // second-order information along p
            let sigma_k = self.params.sigma / p_norm;
            axpy(&mut self.work_w, w, sigma_k, &self.p);
            obj.loss_grad(&self.work_w, &mut self.work_g)?;
            for i in 0..n {
                // E'(w + σp) − E'(w), with E'(w) = −r
                self.s[i] = (self.work_g[i] + self.r[i]) / sigma_k;
            }
            self.delta = dot(&self.p, &self.s);
        }

        // scale, then force the curvature positive; the scaled value carries
        // over to a retry after an unsuccessful step
        let mut delta = self.delta + (self.lambda - self.lambda_bar) * p_sq;
        if delta <= 0.0 {
            self.lambda_bar = 2.0 * (self.lambda - delta / p_sq);
            delta = -delta + self.lambda * p_sq;
            self.lambda = self.lambda_bar;
        }
        self.delta = delta;

        let mu = dot(&self.p, &self.r);
        let alpha = mu / delta;
        axpy(&mut self.work_w, w, alpha, &self.p);
        let new_loss = obj.loss_grad(&self.work_w, &mut self.work_g)?;
        let comparison = if new_loss.is_finite() {
            2.0 * delta * (self.loss - new_loss) / (mu * mu)
        } else {
            -1.0
        };

        let accepted = comparison >= 0.0;
        if accepted {
            w.copy_from_slice(&self.work_w);
            self.loss = new_loss;
            self.lambda_bar = 0.0;
            self.success = true;
            self.iter += 1;
            let r_new: Vec<f64> = self.work_g.iter().map(|g| -g).collect();
            if self.iter.is_multiple_of(n) {
                self.p.copy_from_slice(&r_new);
            } else {
                let beta = (dot(&r_new, &r_new) - dot(&r_new, &self.r)) / mu;
                for (pi, ri) in self.p.iter_mut().zip(&r_new) {
                    *pi = ri + beta * *pi;
                }
            }
            self.r = r_new;
            if comparison >= 0.75 {
                self.lambda *= 0.25;
            }
        } else {
            self.lambda_bar = self.lambda;
            self.success = false;
        }
        if comparison < 0.25 {
            self.lambda += delta * (1.0 - comparison) / p_sq;
        }
        if !self.lambda.is_finite() {
            return Err(NetError::NonFiniteLoss);
        }

        Ok(StepOutcome {
            loss: self.loss,
            grad_norm: norm(&self.r),
            accepted,
        })
    }
}

// ---------------------------------------------------------------------------
// CGB

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CgbParams {
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    /// Restart when `|g_prev·g| ≥ restart_ratio·‖g‖²`.
    pub restart_ratio: f64,
    pub max_line_evals: usize,
}

impl Default for CgbParams {
    fn default() -> Self {
        Self {
            c1: 1e-4,
            c2: 0.1,
            restart_ratio: 0.2,
            max_line_evals: 20,
        }
    }
}

/// Powell-Beale restart test: successive gradients have lost orthogonality.
pub fn powell_beale_restart(g_prev: &[f64], g: &[f64], ratio: f64) -> bool {
    dot(g_prev, g).abs() >= ratio * dot(g, g)
}

/// Polak-Ribière direction update with the Powell-Beale restart.
///
/// Returns `true` when the direction was reset to steepest descent.
pub fn next_direction(d: &mut [f64], g_prev: &[f64], g: &[f64], ratio: f64) -> bool {
    let restart = powell_beale_restart(g_prev, g, ratio) || dot(g_prev, g_prev) == 0.0;
    if !restart {
        let beta = (dot(g, g) - dot(g, g_prev)) / dot(g_prev, g_prev);
        for (di, gi) in d.iter_mut().zip(g) {
            *di = -gi + beta * *di;
        }
        if dot(d, g) < 0.0 {
            return false;
        }
    }
    for (di, gi) in d.iter_mut().zip(g) {
        *di = -gi;
    }
    true
}

/// Accepted point of a line search.
#[derive(Debug, Clone, PartialEq)]
pub struct LinePoint {
    pub alpha: f64,
    pub loss: f64,
    pub grad: Vec<f64>,
    pub evals: usize,
}

struct Line<'a, O: Objective> {
    obj: &'a O,
    w: &'a [f64],
    d: &'a [f64],
    trial: Vec<f64>,
    grad: Vec<f64>,
    evals: usize,
    max_evals: usize,
}

impl<O: Objective> Line<'_, O> {
    /// `(φ(α), φ'(α))`, or `None` once the evaluation budget is spent.
    fn eval(&mut self, alpha: f64) -> Result<Option<(f64, f64)>, NetError> {
        if self.evals >= self.max_evals {
            return Ok(None);
        }
        self.evals += 1;
        axpy(&mut self.trial, self.w, alpha, self.d);
        let phi = self.obj.loss_grad(&self.trial, &mut self.grad)?;
        Ok(Some((phi, dot(&self.grad, self.d))))
    }

    fn accept(&self, alpha: f64, loss: f64) -> LinePoint {
        LinePoint {
            alpha,
            loss,
            grad: self.grad.clone(),
            evals: self.evals,
        }
    }
}

/// Minimizer of the quadratic through `φ(lo)`, `φ'(lo)` and `φ(hi)`,
/// kept at least a tenth of the bracket away from either end.
fn interpolate(lo: f64, phi_lo: f64, dphi_lo: f64, hi: f64, phi_hi: f64) -> f64 {
    let span = hi - lo;
    let curvature = phi_hi - phi_lo - dphi_lo * span;
    let (a, b) = if lo < hi { (lo, hi) } else { (hi, lo) };
    let margin = 0.1 * (b - a);
    let candidate = if curvature > 0.0 && phi_hi.is_finite() {
        lo - dphi_lo * span * span / (2.0 * curvature)
    } else {
        0.5 * (lo + hi)
    };
    if !candidate.is_finite() {
        return 0.5 * (lo + hi);
    }
    candidate.clamp(a + margin, b - margin)
}

/// Line search for the strong Wolfe conditions: bracketing by doubling, then
/// sectioning with safeguarded quadratic interpolation.
///
/// `None` means no acceptable step was found within `max_line_evals`
/// evaluations.
pub fn wolfe_line_search(
    obj: &impl Objective,
    w: &[f64],
    loss0: f64,
    g0: &[f64],
    d: &[f64],
    alpha_init: f64,
    params: &CgbParams,
) -> Result<Option<LinePoint>, NetError> {
    let dphi0 = dot(g0, d);
    if !(dphi0 < 0.0) {
        return Ok(None);
    }
    let mut line = Line {
        obj,
        w,
        d,
        trial: vec![0.0; w.len()],
        grad: vec![0.0; w.len()],
        evals: 0,
        max_evals: params.max_line_evals,
    };
    let armijo = |alpha: f64, phi: f64| phi <= loss0 + params.c1 * alpha * dphi0;
    let curvature_ok = |dphi: f64| dphi.abs() <= -params.c2 * dphi0;

    let (mut prev_alpha, mut prev_phi, mut prev_dphi) = (0.0, loss0, dphi0);
    let mut alpha = alpha_init;
    let (mut lo, mut phi_lo, mut dphi_lo, mut hi, mut phi_hi);
    let mut first = true;
    loop {
        let Some((phi, dphi)) = line.eval(alpha)? else {
            return Ok(None);
        };
        if !armijo(alpha, phi) || (!first && phi >= prev_phi) {
            (lo, phi_lo, dphi_lo, hi, phi_hi) = (prev_alpha, prev_phi, prev_dphi, alpha, phi);
            break;
        }
        if curvature_ok(dphi) {
            return Ok(Some(line.accept(alpha, phi)));
        }
        if dphi >= 0.0 {
            (lo, phi_lo, dphi_lo, hi, phi_hi) = (alpha, phi, dphi, prev_alpha, prev_phi);
            break;
        }
        (prev_alpha, prev_phi, prev_dphi) = (alpha, phi, dphi);
        alpha *= 2.0;
        first = false;
    }

    loop {
        let alpha = interpolate(lo, phi_lo, dphi_lo, hi, phi_hi);
        let Some((phi, dphi)) = line.eval(alpha)? else {
            return Ok(None);
        };
        if !armijo(alpha, phi) || phi >= phi_lo {
            (hi, phi_hi) = (alpha, phi);
        } else {
            if curvature_ok(dphi) {
                return Ok(Some(line.accept(alpha, phi)));
            }
            if dphi * (hi - lo) >= 0.0 {
                (hi, phi_hi) = (lo, phi_lo);
            }
            (lo, phi_lo, dphi_lo) = (alpha, phi, dphi);
        }
    }
}

/// Conjugate gradient with Powell-Beale restarts.
#[derive(Debug, Clone)]
pub struct Cgb {
    params: CgbParams,
    loss: f64,
    grad: Vec<f64>,
    dir: Vec<f64>,
    last_alpha: f64,
    last_slope: f64,
    restarts: usize,
}

impl Cgb {
    pub fn new(params: CgbParams, obj: &impl Objective, w: &[f64]) -> Result<Self, NetError> {
        let mut grad = vec![0.0; w.len()];
        let loss = finite(obj.loss_grad(w, &mut grad)?)?;
        let dir = grad.iter().map(|g| -g).collect();
        Ok(Self {
            params,
            loss,
            grad,
            dir,
            last_alpha: 0.0,
            last_slope: 0.0,
            restarts: 0,
        })
    }

    pub fn loss(&self) -> f64 {
        self.loss
    }

    pub fn grad_norm(&self) -> f64 {
        norm(&self.grad)
    }

    /// Number of Powell-Beale restarts taken so far.
    pub fn restarts(&self) -> usize {
        self.restarts
    }

    fn initial_alpha(&self) -> f64 {
        let slope = dot(&self.grad, &self.dir);
        if self.last_alpha > 0.0 && slope < 0.0 {
            self.last_alpha * self.last_slope / slope
        } else {
            1.0 / norm(&self.dir).max(1.0)
        }
    }

    pub fn step(&mut self, obj: &impl Objective, w: &mut [f64]) -> Result<StepOutcome, NetError> {
        if norm(&self.grad) == 0.0 {
            return Ok(StepOutcome {
                loss: self.loss,
                grad_norm: 0.0,
                accepted: false,
            });
        }
        let mut found = wolfe_line_search(
            obj,
            w,
            self.loss,
            &self.grad,
            &self.dir,
            self.initial_alpha(),
            &self.params,
        )?;
        if found.is_none() {
            let steepest: Vec<f64> = self.grad.iter().map(|g| -g).collect();
            if steepest != self.dir {
                self.dir = steepest;
                self.restarts += 1;
                let alpha0 = 1.0 / norm(&self.dir).max(1.0);
                found = wolfe_line_search(obj, w, self.loss, &self.grad, &self.dir, alpha0, &self.params)?;
            }
        }
        let Some(point) = found else {
            return Err(NetError::LineSearchFailure);
        };

        for (wi, di) in w.iter_mut().zip(&self.dir) {
            *wi += point.alpha * di;
        }
        self.last_alpha = point.alpha;
        self.last_slope = dot(&self.grad, &self.dir);
        self.loss = finite(point.loss)?;
        let g_prev = core::mem::replace(&mut self.grad, point.grad);
        if next_direction(&mut self.dir, &g_prev, &self.grad, self.params.restart_ratio) {
            self.restarts += 1;
        }
        Ok(StepOutcome {
            loss: self.loss,
            grad_norm: norm(&self.grad),
            accepted: true,
        })
    }
}
