//! Continuation of `eps0(h)` along the delay.
//!
//! Differentiating the double-root system in `h` gives
//!
//! ```text
//! eps0'(h) = 2 eps0 G(w0) / (1 + h G(w0)),   G(w) = 1 + w/sqrt(eps0) - w²
//! ```
//!
//! which is integrated with fixed-step RK4. `w0` at each stage comes from
//! the heat-kernel cubic when the kernel is Gaussian and from the inner
//! minimization of `psi` otherwise.

use crate::charfun::{g_value, psi_eval, ModelParams};
use crate::kernel::Kernel;
use crate::solver::{cardano_w0, min_psi, solve_critical, solve_ivp_rho0, CriticalPoint, SolverConfig};
use crate::{Error, Result};

/// Largest `|psi_min|` accepted for a continuation seed.
const SEED_RESIDUAL_TOL: f64 = 1e-8;
/// Number of times a failing step is retried with halved substeps.
const MAX_HALVINGS: u32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurveMethod {
    Direct,
    OdeContinuation,
    CardanoContinuation,
}

impl CurveMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            CurveMethod::Direct => "direct",
            CurveMethod::OdeContinuation => "ode-continuation",
            CurveMethod::CardanoContinuation => "cardano-continuation",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveSample {
    pub h: f64,
    pub eps0: f64,
    pub z0: f64,
    pub w0: f64,
    pub c_star: f64,
    pub psi_residual: f64,
    pub dpsi_residual: f64,
}

impl CurveSample {
    pub fn residual(&self) -> f64 {
        self.psi_residual.max(self.dpsi_residual)
    }
}

impl From<(f64, &CriticalPoint)> for CurveSample {
    fn from((h, cp): (f64, &CriticalPoint)) -> Self {
        Self {
            h,
            eps0: cp.eps0,
            z0: cp.z0,
            w0: cp.w0,
            c_star: cp.c_star,
            psi_residual: cp.psi_residual,
            dpsi_residual: cp.dpsi_residual,
        }
    }
}

/// Sampled `c*(h)`, ascending in `h`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpeedCurve {
    pub method: CurveMethod,
    pub samples: Vec<CurveSample>,
    /// `|c*_curve - c*_direct| / c*_direct` at the far end of the curve.
    pub endpoint_rel_error: Option<f64>,
}

impl SpeedCurve {
    /// `h` strictly increasing and `c*` strictly decreasing.
    pub fn is_monotone(&self) -> bool {
        self.samples
            .windows(2)
            .all(|w| w[1].h > w[0].h && w[1].c_star < w[0].c_star)
    }
}

struct Rhs<'a> {
    params: ModelParams,
    kernel: &'a Kernel,
    cfg: &'a SolverConfig,
    alpha: Option<f64>,
}

impl<'a> Rhs<'a> {
    fn new(p: f64, kernel: &'a Kernel, cfg: &'a SolverConfig) -> Result<Self> {
        Ok(Self {
            params: ModelParams::new(p, 0.0)?,
            kernel,
            cfg,
            alpha: kernel.gaussian_alpha(),
        })
    }

    fn method(&self) -> CurveMethod {
        if self.alpha.is_some() {
            CurveMethod::CardanoContinuation
        } else {
            CurveMethod::OdeContinuation
        }
    }

    fn w0(&self, h: f64, eps: f64) -> Result<f64> {
        match self.alpha {
            Some(alpha) => cardano_w0(eps, h, alpha),
            None => {
                let m = min_psi(eps, self.params.with_h(h)?, self.kernel, self.cfg)?;
                Ok(eps.sqrt() * m.z)
            }
        }
    }

    fn slope(&self, h: f64, eps: f64) -> Result<f64> {
        let g = g_value(self.w0(h, eps)?, eps);
        Ok(2.0 * eps * g / (1.0 + h * g))
    }

    fn rk4(&self, h: f64, eps: f64, dh: f64) -> Result<f64> {
        let k1 = self.slope(h, eps)?;
        let k2 = self.slope(h + 0.5 * dh, eps + 0.5 * dh * k1)?;
        let k3 = self.slope(h + 0.5 * dh, eps + 0.5 * dh * k2)?;
        let k4 = self.slope(h + dh, eps + dh * k3)?;
        let next = eps + dh / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if next.is_finite() && next > 0.0 {
            Ok(next)
        } else {
            Err(Error::NoConvergence { what: "rk4 step", iterations: 1 })
        }
    }

    /// One step of size `dh`, retried with 2, 4, 8, 16 substeps on failure.
    fn advance(&self, h: f64, eps: f64, dh: f64) -> Result<f64> {
        let mut last = None;
        for halving in 0..=MAX_HALVINGS {
            let n = 1usize << halving;
            let sub = dh / n as f64;
            let attempt = (0..n).try_fold(eps, |e, i| self.rk4(h + sub * i as f64, e, sub));
            match attempt {
                Ok(e) => return Ok(e),
                Err(err) => last = Some(err),
            }
        }
        Err(Error::StageFailure {
            h,
            source: Box::new(last.expect("at least one attempt")),
        })
    }

    fn sample(&self, h: f64, eps: f64) -> Result<CurveSample> {
        let w0 = self.w0(h, eps).map_err(|e| Error::StageFailure { h, source: Box::new(e) })?;
        let z0 = w0 / eps.sqrt();
        let e = psi_eval(z0, eps, self.params.with_h(h)?, self.kernel)?;
        Ok(CurveSample {
            h,
            eps0: eps,
            z0,
            w0,
            c_star: 1.0 / eps.sqrt(),
            psi_residual: e.value.abs(),
            dpsi_residual: e.dz.abs(),
        })
    }

    fn check_seed(&self, h: f64, eps: f64) -> Result<()> {
        let m = min_psi(eps, self.params.with_h(h)?, self.kernel, self.cfg)?;
        if m.value.abs() > SEED_RESIDUAL_TOL {
            return Err(Error::SeedResidual { eps, residual: m.value });
        }
        Ok(())
    }

    fn endpoint_error(&self, s: &CurveSample) -> Option<f64> {
        let cp = solve_critical(self.params.with_h(s.h).ok()?, self.kernel, self.cfg).ok()?;
        Some((s.c_star - cp.c_star).abs() / cp.c_star)
    }
}

fn finish(method: CurveMethod, mut samples: Vec<CurveSample>, endpoint: Option<f64>) -> Result<SpeedCurve> {
    samples.sort_by(|a, b| a.h.total_cmp(&b.h));
    let curve = SpeedCurve {
        method,
        samples,
        endpoint_rel_error: endpoint,
    };
    if !curve.is_monotone() {
        return Err(Error::NoConvergence {
            what: "monotone continuation",
            iterations: curve.samples.len(),
        });
    }
    Ok(curve)
}

/// Integrates `eps0(h)` from `(h0, eps_init)` to `h_end` in `steps` equal
/// RK4 steps, in either direction. `eps_init` must already be `eps0(h0)`.
pub fn continue_ode(
    p: f64,
    k: &Kernel,
    h0: f64,
    eps_init: f64,
    h_end: f64,
    steps: usize,
    cfg: &SolverConfig,
) -> Result<SpeedCurve> {
    if steps == 0 {
        return Err(Error::InvalidParameter("continuation needs at least one step".into()));
    }
    if !(h0 >= 0.0 && h_end >= 0.0 && eps_init > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "continuation needs h0, h_end >= 0 and eps > 0 (got {h0}, {h_end}, {eps_init})"
        )));
    }
    let rhs = Rhs::new(p, k, cfg)?;
    rhs.check_seed(h0, eps_init)?;

    let mut samples = vec![rhs.sample(h0, eps_init)?];
    if h_end == h0 {
        return finish(rhs.method(), samples, None);
    }
    let dh = (h_end - h0) / steps as f64;
    let mut eps = eps_init;
    for i in 0..steps {
        let h = h0 + dh * i as f64;
        let next = rhs.advance(h, eps, dh)?;
        let forward_ok = if dh > 0.0 { next > eps } else { next < eps };
        if !forward_ok {
            return Err(Error::NoConvergence { what: "monotone continuation", iterations: i + 1 });
        }
        eps = next;
        let h_next = if i + 1 == steps { h_end } else { h0 + dh * (i + 1) as f64 };
        samples.push(rhs.sample(h_next, eps)?);
    }
    let endpoint = rhs.endpoint_error(samples.last().expect("non-empty"));
    finish(rhs.method(), samples, endpoint)
}

/// `c*` on a strictly increasing grid of delays by continuation, with RK4
/// steps no longer than `max_step`.
///
/// Gaussian kernels are seeded at `h = alpha` from [`solve_ivp_rho0`] and
/// integrated outward in both directions; other kernels are seeded at the
/// first grid point by [`solve_critical`].
pub fn ode_curve(p: f64, k: &Kernel, grid: &[f64], max_step: f64, cfg: &SolverConfig) -> Result<SpeedCurve> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty delay grid".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) || !(grid[0] >= 0.0) {
        return Err(Error::InvalidParameter("delay grid must be nonnegative and strictly increasing".into()));
    }
    if !(max_step > 0.0) {
        return Err(Error::InvalidParameter(format!("max_step must be positive, got {max_step}")));
    }
    let rhs = Rhs::new(p, k, cfg)?;
    let (h_seed, eps_seed) = match k.gaussian_alpha() {
        Some(alpha) => (alpha, solve_ivp_rho0(p, alpha)?),
        None => (grid[0], solve_critical(ModelParams::new(p, grid[0])?, k, cfg)?.eps0),
    };
    rhs.check_seed(h_seed, eps_seed)?;

    let march = |targets: &mut dyn Iterator<Item = f64>| -> Result<Vec<CurveSample>> {
        let (mut h, mut eps) = (h_seed, eps_seed);
        let mut out = Vec::new();
        for target in targets {
            let n = ((target - h).abs() / max_step).ceil().max(1.0) as usize;
            if target != h {
                let dh = (target - h) / n as f64;
                for i in 0..n {
                    eps = rhs.advance(h + dh * i as f64, eps, dh)?;
                }
                h = target;
            }
            out.push(rhs.sample(h, eps)?);
        }
        Ok(out)
    };
    let mut samples = march(&mut grid.iter().copied().filter(|&h| h >= h_seed))?;
    samples.extend(march(&mut grid.iter().rev().copied().filter(|&h| h < h_seed))?);
    samples.sort_by(|a, b| a.h.total_cmp(&b.h));
    let far = if (grid[grid.len() - 1] - h_seed).abs() >= (grid[0] - h_seed).abs() {
        samples.last()
    } else {
        samples.first()
    };
    let endpoint = far.and_then(|s| rhs.endpoint_error(s));
    finish(rhs.method(), samples, endpoint)
}
