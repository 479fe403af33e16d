//! Explicit finite-difference simulation of
//!
//! ```text
//! u_t = u_xx - u + ∫ K(x - s) g(u(t - h, s)) ds
//! ```
//!
//! on `[0, L]` with Neumann ends, used to measure how fast a front invades
//! the zero state.
//!
//! The convolution is a direct sum against kernel weights sampled on the
//! grid and renormalized to unit sum, with the field mirrored across both
//! ends. The delayed term is served from a ring of past convolutions; the
//! history on `[-h, 0]` is the initial condition held constant.

use std::collections::VecDeque;

use crate::charfun::ModelParams;
use crate::kernel::{Kernel, KernelKind};
use crate::solver::{solve_critical, SolverConfig};
use crate::{Error, Result};

/// Monostable birth function `g` with `g(0) = 0`, `g'(0) = p` and
/// `g(u) <= p u` on `u >= 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BirthFunction {
    /// `g(u) = p u e^{-u}`; positive equilibrium `ln p`.
    Nicholson { p: f64 },
    /// `g(u) = min(p u, p cap)`; positive equilibrium `p cap`.
    CappedLinear { p: f64, cap: f64 },
}

impl BirthFunction {
    pub fn nicholson(p: f64) -> Result<Self> {
        check_p(p)?;
        Ok(Self::Nicholson { p })
    }

    pub fn capped_linear(p: f64, cap: f64) -> Result<Self> {
        check_p(p)?;
        if !(cap > 0.0 && cap.is_finite()) {
            return Err(Error::InvalidParameter(format!("cap must be positive, got {cap}")));
        }
        Ok(Self::CappedLinear { p, cap })
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            BirthFunction::Nicholson { p } => p * u * (-u).exp(),
            BirthFunction::CappedLinear { p, cap } => p * u.min(cap),
        }
    }

    pub fn slope_at_zero(&self) -> f64 {
        match *self {
            BirthFunction::Nicholson { p } | BirthFunction::CappedLinear { p, .. } => p,
        }
    }

    /// Positive solution of `g(u) = u`.
    pub fn equilibrium(&self) -> f64 {
        match *self {
            BirthFunction::Nicholson { p } => p.ln(),
            BirthFunction::CappedLinear { p, cap } => p * cap,
        }
    }
}

fn check_p(p: f64) -> Result<()> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("birth function needs g'(0) = p > 1, got {p}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimConfig {
    /// Domain length `L`.
    pub length: f64,
    pub dx: f64,
    /// Requested time step; `None` uses `0.45 dx²`. Shrunk so that `h/dt`
    /// is an integer.
    pub dt: Option<f64>,
    /// Final time `T`.
    pub t_end: f64,
    /// Front threshold as a fraction of the positive equilibrium.
    pub theta: f64,
    /// The initial condition is the equilibrium on `[0, initial_width]`.
    pub initial_width: f64,
    /// Kernel truncation half-width; `None` uses the kernel's own.
    pub kernel_half_width: Option<f64>,
    /// Spacing of front-position samples in time.
    pub record_every: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            length: 400.0,
            dx: 0.1,
            dt: None,
            t_end: 100.0,
            theta: 0.5,
            initial_width: 20.0,
            kernel_half_width: None,
            record_every: 0.25,
        }
    }
}

impl SimConfig {
    /// Time step after stability capping and snapping, and the delay in steps.
    pub fn time_step(&self, h: f64) -> Result<(f64, usize)> {
        let limit = 0.45 * self.dx * self.dx;
        let dt = self.dt.unwrap_or(limit);
        if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "dt = {dt} violates the explicit stability limit 0.45 dx² = {limit}"
            )));
        }
        if h == 0.0 {
            return Ok((dt, 0));
        }
        let steps = (h / dt).ceil() as usize;
        Ok((h / steps as f64, steps))
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if !(self.dx > 0.0 && self.length > 0.0 && self.length / self.dx >= 4.0) {
            return bad("need dx > 0 and at least 4 cells");
        }
        if !(self.t_end > 0.0) {
            return bad("end time must be positive");
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return bad("front threshold must lie strictly between 0 and 1");
        }
        if !(self.initial_width > 0.0 && self.initial_width < self.length) {
            return bad("initial step must be inside the domain");
        }
        if !(self.record_every > 0.0) {
            return bad("record interval must be positive");
        }
        Ok(())
    }
}

/// Grid weights `ω_j ≈ K(j dx) dx`, `j = -W..=W`, summing to one.
pub fn discrete_kernel(k: &Kernel, dx: f64, half_width: f64) -> Result<Vec<f64>> {
    let mut w = match k.kind() {
        KernelKind::DiracLimit => vec![1.0],
        KernelKind::TwoPoint { a } => {
            let pos = a / dx;
            let j = pos.floor() as usize;
            let frac = pos - j as f64;
            if a == 0.0 {
                vec![1.0]
            } else {
                let half = j + 1;
                let mut w = vec![0.0; 2 * half + 1];
                for sign in [-1i64, 1] {
                    let lo = (half as i64 + sign * j as i64) as usize;
                    let hi = (half as i64 + sign * (j as i64 + 1)) as usize;
                    w[lo] += 0.5 * (1.0 - frac);
                    w[hi] += 0.5 * frac;
                }
                w
            }
        }
        _ => {
            let half = (half_width / dx).ceil() as usize;
            (0..=2 * half)
                .map(|j| k.density((j as f64 - half as f64) * dx).map(|d| d * dx))
                .collect::<Result<Vec<f64>>>()?
        }
    };
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "kernel has no mass on a grid with dx = {dx}"
        )));
    }
    for x in &mut w {
        *x /= total;
    }
    Ok(w)
}

/// Mirror index for Neumann ends on `0..n`.
fn reflect(i: i64, n: usize) -> usize {
    let period = 2 * (n as i64 - 1);
    let mut m = i.rem_euclid(period);
    if m >= n as i64 {
        m = period - m;
    }
    m as usize
}

/// Simulation state. Owns its buffers; nothing is shared between runs.
pub struct Simulation {
    dx: f64,
    dt: f64,
    delay_steps: usize,
    birth: BirthFunction,
    equilibrium: f64,
    weights: Vec<f64>,
    u: Vec<f64>,
    next: Vec<f64>,
    padded: Vec<f64>,
    history: VecDeque<Vec<f64>>,
    t: f64,
    steps: usize,
    clamp_events: usize,
}

impl Simulation {
    /// Starts from the equilibrium on `[0, initial_width]` and zero elsewhere.
    pub fn new(cfg: &SimConfig, params: ModelParams, k: &Kernel, g: BirthFunction) -> Result<Self> {
        let n = (cfg.length / cfg.dx).round() as usize + 1;
        let eq = g.equilibrium();
        let u0 = (0..n)
            .map(|i| if i as f64 * cfg.dx <= cfg.initial_width { eq } else { 0.0 })
            .collect();
        Self::with_state(cfg, params, k, g, u0)
    }

    /// Starts from an arbitrary nonnegative state, also used as the history.
    pub fn with_state(
        cfg: &SimConfig,
        params: ModelParams,
        k: &Kernel,
        g: BirthFunction,
        u0: Vec<f64>,
    ) -> Result<Self> {
        cfg.validate()?;
        if (g.slope_at_zero() - params.p()).abs() > 1e-12 * params.p() {
            return Err(Error::InvalidParameter(format!(
                "birth function slope {} differs from p = {}",
                g.slope_at_zero(),
                params.p()
            )));
        }
        if u0.len() < 4 || u0.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidParameter("initial state must be nonnegative with at least 4 points".into()));
        }
        let (dt, delay_steps) = cfg.time_step(params.h())?;
        let half_width = cfg.kernel_half_width.unwrap_or_else(|| k.effective_half_width());
        let weights = discrete_kernel(k, cfg.dx, half_width)?;
        let n = u0.len();
        let mut sim = Self {
            dx: cfg.dx,
            dt,
            delay_steps,
            birth: g,
            equilibrium: g.equilibrium(),
            padded: vec![0.0; n + weights.len() - 1],
            weights,
            next: vec![0.0; n],
            u: u0,
            history: VecDeque::with_capacity(delay_steps + 1),
            t: 0.0,
            steps: 0,
            clamp_events: 0,
        };
        let mut c0 = vec![0.0; n];
        sim.convolve_into(&mut c0);
        for _ in 0..delay_steps {
            sim.history.push_back(c0.clone());
        }
        sim.history.push_back(c0);
        Ok(sim)
    }

    /// `out = ω * g(u)`.
    fn convolve_into(&mut self, out: &mut [f64]) {
        let n = self.u.len();
        let half = (self.weights.len() - 1) / 2;
        for (j, slot) in self.padded.iter_mut().enumerate() {
            *slot = self.birth.eval(self.u[reflect(j as i64 - half as i64, n)]);
        }
        // Weights are symmetric: pair the taps at ±j.
        let centre = self.weights[half];
        for (o, g) in out.iter_mut().zip(&self.padded[half..half + n]) {
            *o = centre * g;
        }
        for j in 1..=half {
            let w = self.weights[half + j];
            if w == 0.0 {
                continue;
            }
            let right = &self.padded[half + j..half + j + n];
            let left = &self.padded[half - j..half - j + n];
            for ((o, a), b) in out.iter_mut().zip(right).zip(left) {
                *o += w * (a + b);
            }
        }
    }

    /// Advances one explicit Euler step.
    pub fn step(&mut self) -> Result<()> {
        let mut buf = self.history.pop_front().expect("history is never empty");
        self.convolve_into(&mut buf);
        self.history.push_back(buf);
        let delayed = self.history.front().expect("history is never empty");

        let n = self.u.len();
        let r = 1.0 / (self.dx * self.dx);
        let u = &self.u;
        let limit = 10.0 * self.equilibrium;
        let mut blown = false;
        for i in 0..n {
            let left = if i == 0 { u[1] } else { u[i - 1] };
            let right = if i == n - 1 { u[n - 2] } else { u[i + 1] };
            let lap = (left - 2.0 * u[i] + right) * r;
            let mut v = u[i] + self.dt * (lap - u[i] + delayed[i]);
            if v < 0.0 {
                v = 0.0;
                self.clamp_events += 1;
            }
            if !(v <= limit) {
                blown = true;
            }
            self.next[i] = v;
        }
        std::mem::swap(&mut self.u, &mut self.next);
        self.steps += 1;
        self.t = self.steps as f64 * self.dt;
        if blown {
            return Err(Error::Instability { t: self.t });
        }
        Ok(())
    }

    pub fn state(&self) -> &[f64] {
        &self.u
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn delay_steps(&self) -> usize {
        self.delay_steps
    }

    pub fn clamp_events(&self) -> usize {
        self.clamp_events
    }

    /// Largest `x` with `u(x) >= level`, interpolated linearly between grid
    /// points.
    pub fn front_position(&self, level: f64) -> Option<f64> {
        let i = self.u.iter().rposition(|&v| v >= level)?;
        if i + 1 == self.u.len() {
            return Some(i as f64 * self.dx);
        }
        let (a, b) = (self.u[i], self.u[i + 1]);
        Some((i as f64 + (a - level) / (a - b)) * self.dx)
    }
}

/// Least-squares line through `(t, x)` samples.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpeedFit {
    pub speed: f64,
    pub intercept: f64,
    /// Root-mean-square deviation from the line.
    pub rms_residual: f64,
}

/// Fits a line to the final 40% of the trace.
pub fn fit_speed(trace: &[(f64, f64)]) -> Option<SpeedFit> {
    let start = trace.len() - (trace.len() * 2 / 5).max(2).min(trace.len());
    let tail = &trace[start..];
    if tail.len() < 2 {
        return None;
    }
    let n = tail.len() as f64;
    let mean_t = tail.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_x = tail.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut stt, mut stx) = (0.0, 0.0);
    for &(t, x) in tail {
        stt += (t - mean_t) * (t - mean_t);
        stx += (t - mean_t) * (x - mean_x);
    }
    if stt == 0.0 {
        return None;
    }
    let speed = stx / stt;
    let intercept = mean_x - speed * mean_t;
    let sse: f64 = tail
        .iter()
        .map(|&(t, x)| (x - intercept - speed * t).powi(2))
        .sum();
    Some(SpeedFit {
        speed,
        intercept,
        rms_residual: (sse / n).sqrt(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimResult {
    /// `(t, x_front)` samples.
    pub trace: Vec<(f64, f64)>,
    pub fit: SpeedFit,
    /// `c*` from the double-root solver, when it converges.
    pub reference_c_star: Option<f64>,
    pub clamp_events: usize,
    /// Time at which the front came too close to the right end, if it did.
    pub boundary_hit: Option<f64>,
    pub dt: f64,
    pub steps: usize,
}

/// Evolves the default initial step to `cfg.t_end` and fits the front speed.
pub fn run(cfg: &SimConfig, params: ModelParams, k: &Kernel, g: BirthFunction) -> Result<SimResult> {
    let mut sim = Simulation::new(cfg, params, k, g)?;
    let level = cfg.theta * g.equilibrium();
    let record = ((cfg.record_every / sim.dt()).round() as usize).max(1);
    let half_width = cfg.kernel_half_width.unwrap_or_else(|| k.effective_half_width());
    let stop_at = cfg.length - (0.05 * cfg.length).max(2.0 * half_width);

    let mut trace = Vec::new();
    let mut boundary_hit = None;
    if let Some(x) = sim.front_position(level) {
        trace.push((0.0, x));
    }
    while sim.time() < cfg.t_end - 0.5 * sim.dt() {
        sim.step()?;
        if sim.steps % record == 0 {
            if let Some(x) = sim.front_position(level) {
                trace.push((sim.time(), x));
                if x >= stop_at {
                    boundary_hit = Some(sim.time());
                    break;
                }
            }
        }
    }
    let fit = fit_speed(&trace).ok_or(Error::NoConvergence {
        what: "front tracking",
        iterations: sim.steps,
    })?;
    let reference_c_star = solve_critical(params, k, &SolverConfig::default())
        .ok()
        .map(|cp| cp.c_star);
    Ok(SimResult {
        trace,
        fit,
        reference_c_star,
        clamp_events: sim.clamp_events(),
        boundary_hit,
        dt: sim.dt(),
        steps: sim.steps,
    })
}
