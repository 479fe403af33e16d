//! The characteristic function
//!
//! ```text
//! psi(z, eps) = eps z² - z - 1 + p e^{-zh} M(sqrt(eps) z)
//! ```
//!
//! of the linearization at `u = 0`, its partial derivatives, and the same
//! double-root system rewritten in `w = sqrt(eps) z`.

use crate::kernel::Kernel;
use crate::{Error, Result};

/// Smallest `eps` accepted by any evaluation.
pub const EPS_FLOOR: f64 = 1e-12;

/// Linearization slope `p = g'(0)` and delay `h`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    p: f64,
    h: f64,
}

impl ModelParams {
    pub fn new(p: f64, h: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "monostable birth function needs p = g'(0) > 1, got p = {p}"
            )));
        }
        if !(h >= 0.0 && h.is_finite()) {
            return Err(Error::InvalidParameter(format!("delay must satisfy h >= 0, got h = {h}")));
        }
        Ok(Self { p, h })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn with_h(&self, h: f64) -> Result<Self> {
        Self::new(self.p, h)
    }
}

/// `psi` and its partials `psi_z`, `psi_zz`, `psi_eps` at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsiEval {
    pub value: f64,
    pub dz: f64,
    pub dzz: f64,
    pub deps: f64,
}

fn check_eps(eps: f64) -> Result<()> {
    if eps >= EPS_FLOOR && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::EpsilonTooSmall(eps))
    }
}

/// Evaluates `psi` and its analytic partials.
pub fn psi_eval(z: f64, eps: f64, params: ModelParams, k: &Kernel) -> Result<PsiEval> {
    psi_eval_scaled(z, eps, params, k).map(|(e, _)| e)
}

/// As [`psi_eval`], plus the magnitude of the terms that cancel in `psi_z`.
pub(crate) fn psi_eval_scaled(
    z: f64,
    eps: f64,
    params: ModelParams,
    k: &Kernel,
) -> Result<(PsiEval, f64)> {
    check_eps(eps)?;
    let (p, h) = (params.p, params.h);
    let se = eps.sqrt();
    let lambda = se * z;
    let (m, m1, m2) = k.mgf_with_derivatives(lambda)?;
    let decay = p * (-z * h).exp();
    let value = eps * z * z - z - 1.0 + decay * m;
    let dz = 2.0 * eps * z - 1.0 + decay * (se * m1 - h * m);
    let dzz = 2.0 * eps + decay * (h * h * m - 2.0 * h * se * m1 + eps * m2);
    let deps = z * z + decay * m1 * z / (2.0 * se);
    let scale = (2.0 * eps * z).abs() + 1.0 + decay * (se * m1.abs() + h * m);
    if !(value.is_finite() && dz.is_finite() && dzz.is_finite() && deps.is_finite()) {
        return Err(Error::Overflow { lambda });
    }
    Ok((PsiEval { value, dz, dzz, deps }, scale))
}

/// Residuals of the double-root system in the variable `w = sqrt(eps) z`:
///
/// ```text
/// rho_ew  = (1 + w/√ε - w²) e^{wh/√ε} - p M(w)
/// rho_eww = (h w²/√ε + (2 - h/ε) w - (1+h)/√ε) e^{wh/√ε} + p M'(w)
/// ```
pub fn wform_residuals(w: f64, eps: f64, params: ModelParams, k: &Kernel) -> Result<(f64, f64)> {
    check_eps(eps)?;
    if !(w >= 0.0) {
        return Err(Error::InvalidParameter(format!("w must be nonnegative, got {w}")));
    }
    let (p, h) = (params.p, params.h);
    let se = eps.sqrt();
    let (m, m1, _) = k.mgf_with_derivatives(w)?;
    let growth = (w * h / se).exp();
    let ew = g_value(w, eps) * growth - p * m;
    let eww = (h * w * w / se + (2.0 - h / eps) * w - (1.0 + h) / se) * growth + p * m1;
    if !(ew.is_finite() && eww.is_finite()) {
        return Err(Error::Overflow { lambda: w });
    }
    Ok((ew, eww))
}

/// `G(w) = 1 + w/√ε - w²`.
pub fn g_value(w: f64, eps: f64) -> f64 {
    1.0 + w / eps.sqrt() - w * w
}

/// `H(w) = G(w) e^{wh/√ε}`.
pub fn h_value(w: f64, eps: f64, h: f64) -> f64 {
    g_value(w, eps) * (w * h / eps.sqrt()).exp()
}

/// `R(w) = p M(w)`.
pub fn r_value(w: f64, p: f64, k: &Kernel) -> Result<f64> {
    Ok(p * k.mgf(w)?)
}
