//! The double root `(z0, eps0)` of `psi = psi_z = 0` and the minimal speed
//! `c* = 1/sqrt(eps0)`.
//!
//! `psi(·, eps)` is strictly convex with `psi_z(0, eps) = -1 - ph < 0`, so it
//! has a unique minimizer `z_min(eps) > 0`. Because `psi_eps > 0` for `z > 0`,
//! `psi_min(eps) = psi(z_min(eps), eps)` is strictly increasing, and `eps0`
//! is its unique zero. The solver brackets that zero with the explicit speed
//! bounds and bisects.

mod continuation;
mod cubic;

pub use continuation::{continue_ode, ode_curve, CurveMethod, CurveSample, SpeedCurve};
pub use cubic::{cardano_w0, heat_cubic_coefficients, real_cubic_roots};

use rayon::prelude::*;

use crate::bounds::theorem1_bounds;
use crate::charfun::{self, psi_eval, ModelParams};
use crate::kernel::Kernel;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    /// Relative width at which the eps bisection stops.
    pub eps_rtol: f64,
    /// Required `|psi|` and `|psi_z|` at the returned point.
    pub residual_tol: f64,
    /// Iteration cap shared by the outer bisection and the inner search.
    pub max_iter: usize,
    /// Stopping tolerance on `psi_z` in the inner minimization, relative to
    /// the size of the cancelling terms.
    pub inner_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eps_rtol: 1e-12,
            residual_tol: 1e-9,
            max_iter: 200,
            inner_tol: 1e-13,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        let ok = self.eps_rtol > 0.0 && self.residual_tol > 0.0 && self.inner_tol > 0.0 && self.max_iter >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid solver config {self:?}")))
        }
    }
}

/// Minimum of `z -> psi(z, eps)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinPsi {
    pub z: f64,
    pub value: f64,
    /// `psi_eps` at the minimizer, i.e. the derivative of `psi_min` in eps.
    pub deps: f64,
}

/// The positive double root and the speed it defines.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticalPoint {
    pub z0: f64,
    pub eps0: f64,
    pub w0: f64,
    pub c_star: f64,
    /// `|psi(z0, eps0)|`
    pub psi_residual: f64,
    /// `|psi_z(z0, eps0)|`
    pub dpsi_residual: f64,
    pub dzz: f64,
    pub deps: f64,
}

impl CriticalPoint {
    fn from_root(z0: f64, eps0: f64, e: charfun::PsiEval) -> Self {
        Self {
            z0,
            eps0,
            w0: eps0.sqrt() * z0,
            c_star: 1.0 / eps0.sqrt(),
            psi_residual: e.value.abs(),
            dpsi_residual: e.dz.abs(),
            dzz: e.dzz,
            deps: e.deps,
        }
    }
}

/// Minimizes the strictly convex `z -> psi(z, eps)` over `z > 0`.
///
/// The sign change of `psi_z` is bracketed by doubling from `z = 1`, then
/// located by Newton on `psi_z` with bisection as the fallback.
pub fn min_psi(eps: f64, params: ModelParams, k: &Kernel, cfg: &SolverConfig) -> Result<MinPsi> {
    // Left of the minimizer psi <= psi(0) = p - 1, which keeps the kernel
    // term bounded, so an overflowing M places z to the right of it.
    let eval = |z: f64| match charfun::psi_eval_scaled(z, eps, params, k) {
        Ok(v) => Ok(Some(v)),
        Err(Error::Overflow { .. }) => Ok(None),
        Err(e) => Err(e),
    };

    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut doublings = 0;
    while let Some((e, _)) = eval(hi)? {
        if e.dz > 0.0 {
            break;
        }
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 1100 {
            return Err(Error::BracketExpansion { eps });
        }
    }

    let mut z = lo + 0.5 * (hi - lo);
    let mut last_step = hi - lo;
    for _ in 0..cfg.max_iter {
        let Some((e, scale)) = eval(z)? else {
            hi = z;
            z = lo + 0.5 * (hi - lo);
            continue;
        };
        if e.dz.abs() <= cfg.inner_tol * scale.max(1.0) {
            return Ok(MinPsi { z, value: e.value, deps: e.deps });
        }
        if e.dz < 0.0 {
            lo = z;
        } else {
            hi = z;
        }
        // Newton only while it at least halves the previous step; on the
        // steep exponential side it would otherwise crawl.
        let newton_step = e.dz / e.dzz;
        let newton = z - newton_step;
        let next = if newton > lo && newton < hi && newton.is_finite() && 2.0 * newton_step.abs() <= last_step {
            newton
        } else {
            lo + 0.5 * (hi - lo)
        };
        last_step = (next - z).abs();
        if (next - z).abs() <= 4.0 * f64::EPSILON * z.abs() || hi - lo <= 4.0 * f64::EPSILON * hi {
            let (e, _) = eval(next)?.ok_or(Error::BracketExpansion { eps })?;
            return Ok(MinPsi { z: next, value: e.value, deps: e.deps });
        }
        z = next;
    }
    Err(Error::NoConvergence {
        what: "minimization of psi in z",
        iterations: cfg.max_iter,
    })
}

/// The two positive zeros `z1 < z2` of `psi(·, eps)` for `eps` strictly
/// below the critical value, where `psi` dips below zero between them.
pub fn positive_roots(eps: f64, params: ModelParams, k: &Kernel, cfg: &SolverConfig) -> Result<(f64, f64)> {
    let m = min_psi(eps, params, k, cfg)?;
    if !(m.value < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "psi(., {eps}) has no sign change; eps must lie below the critical value"
        )));
    }
    let value = |z: f64| match psi_eval(z, eps, params, k) {
        Ok(e) => Ok(e.value),
        Err(Error::Overflow { .. }) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    };
    let mut far = 2.0 * m.z;
    while value(far)? <= 0.0 {
        far *= 2.0;
        if !far.is_finite() {
            return Err(Error::BracketExpansion { eps });
        }
    }
    let bisect = |mut pos: f64, mut neg: f64| -> Result<f64> {
        for _ in 0..cfg.max_iter {
            let mid = 0.5 * (pos + neg);
            if mid == pos || mid == neg {
                break;
            }
            if value(mid)? > 0.0 {
                pos = mid;
            } else {
                neg = mid;
            }
        }
        Ok(0.5 * (pos + neg))
    };
    Ok((bisect(0.0, m.z)?, bisect(far, m.z)?))
}

/// Solves `psi = psi_z = 0` for the positive double root.
pub fn solve_critical(params: ModelParams, k: &Kernel, cfg: &SolverConfig) -> Result<CriticalPoint> {
    cfg.validate()?;
    let bounds = theorem1_bounds(params, k)?;
    if !(bounds.lower > 0.0 && bounds.lower <= bounds.upper) {
        return Err(Error::BracketInvalid {
            lo: bounds.lower,
            hi: bounds.upper,
        });
    }
    // The bounds are strict except in the Dirac limit, where c* may sit
    // exactly on one of them; widen by 1%.
    let mut lo = 0.99 / (bounds.upper * bounds.upper);
    let mut hi = 1.01 / (bounds.lower * bounds.lower);
    let f = |eps: f64| min_psi(eps, params, k, cfg);

    let m_lo = f(lo)?;
    let m_hi = f(hi)?;
    if !(m_lo.value < 0.0 && m_hi.value > 0.0) {
        return Err(Error::BracketInvalid { lo, hi });
    }

    let mut converged = false;
    for _ in 0..cfg.max_iter {
        if hi - lo <= cfg.eps_rtol * hi {
            converged = true;
            break;
        }
        let mid = lo + 0.5 * (hi - lo);
        let m = f(mid)?;
        if m.value == 0.0 {
            lo = mid;
            hi = mid;
            converged = true;
            break;
        }
        if m.value < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            what: "eps bisection",
            iterations: cfg.max_iter,
        });
    }

    // One Newton step on psi_min, using d psi_min / d eps = psi_eps.
    let mut eps0 = lo + 0.5 * (hi - lo);
    let mut m = f(eps0)?;
    if m.value != 0.0 && m.deps > 0.0 {
        let cand = eps0 - m.value / m.deps;
        if cand >= lo && cand <= hi {
            let mc = f(cand)?;
            if mc.value.abs() < m.value.abs() {
                eps0 = cand;
                m = mc;
            }
        }
    }

    let e = psi_eval(m.z, eps0, params, k)?;
    let cp = CriticalPoint::from_root(m.z, eps0, e);
    if cp.psi_residual > cfg.residual_tol || cp.dpsi_residual > cfg.residual_tol {
        return Err(Error::NoConvergence {
            what: "double-root residual",
            iterations: cfg.max_iter,
        });
    }
    Ok(cp)
}

/// [`solve_critical`] at every delay in `hs`, in parallel; results keep the
/// order of `hs`.
pub fn solve_sweep(p: f64, hs: &[f64], k: &Kernel, cfg: &SolverConfig) -> Vec<Result<CriticalPoint>> {
    hs.par_iter()
        .map(|&h| solve_critical(ModelParams::new(p, h)?, k, cfg))
        .collect()
}

/// Positive solution `rho` of `1 + 1/(4 rho) = p exp(-alpha/(4 rho))`.
///
/// For the heat kernel `K_alpha` this is `eps0(h)` at `h = alpha`, where the
/// double root sits at `w0 = 1/(2 sqrt(eps0))`. With `x = 1/(4 rho)` the
/// left side `1 + x` increases from 1 and the right side `p e^{-alpha x}`
/// decreases from `p > 1`, so the crossing in `[0, p - 1]` is unique.
pub fn solve_ivp_rho0(p: f64, alpha: f64) -> Result<f64> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("need p > 1, got {p}")));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("need alpha > 0, got {alpha}")));
    }
    let f = |x: f64| 1.0 + x - p * (-alpha * x).exp();
    let (mut lo, mut hi) = (0.0, p - 1.0);
    for _ in 0..200 {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = if f(lo).abs() < f(hi).abs() { lo } else { hi };
    Ok(1.0 / (4.0 * x))
}
