//! Explicit upper and lower bounds for the minimal speed `c*(h)`.
//!
//! With `m2 = ∫ s² K` and `q = sqrt((p-1) / (1 + p m2 / 2))`:
//!
//! ```text
//! k1 = 2q + p M'(q)
//! k2 = ln(p M(sqrt(ln p))) / sqrt(ln p)
//!
//! h in [0, 1]:  max{L(h), 2 sqrt(ln p)/(1+h)} < c* < min{k1/(1+h), k2/h}
//! h >= 1:       max{L(h), sqrt(ln p)/h}      < c* < min{k1/2,     k2/sqrt(h)}
//!
//! L(h) = 2 sqrt((p-1) / (p(2h + h²) + 1))
//! ```
//!
//! For every `h > 0` and `r in (0, 1)` there is also the one-parameter
//! family `c* < ln(p M(r) / (1 - r²)) / (h r)`.

use crate::charfun::ModelParams;
use crate::kernel::Kernel;
use crate::{Error, Result};

/// Which pair of formulas applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// `h ∈ [0, 1]`
    ShortDelay,
    /// `h > 1`
    LongDelay,
}

/// All bound candidates at one delay.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpeedBounds {
    pub h: f64,
    pub regime: Regime,
    /// `L(h)`, valid for every `h >= 0`.
    pub lower_add: f64,
    /// `2 sqrt(ln p)/(1+h)` or `sqrt(ln p)/h` depending on the regime.
    pub lower_log: f64,
    /// `k1/(1+h)` or `k1/2`.
    pub upper_k1: f64,
    /// `k2/h` or `k2/sqrt(h)`; absent at `h = 0`.
    pub upper_k2: Option<f64>,
    /// Optimum of the `r`-family; absent at `h = 0`.
    pub upper_ad_opt: Option<f64>,
    /// Active lower bound.
    pub lower: f64,
    /// Active upper bound.
    pub upper: f64,
}

pub fn k1(p: f64, k: &Kernel) -> Result<f64> {
    check_p(p)?;
    let q = ((p - 1.0) / (1.0 + 0.5 * p * k.second_moment())).sqrt();
    Ok(2.0 * q + p * k.mgf_deriv(q)?)
}

pub fn k2(p: f64, k: &Kernel) -> Result<f64> {
    check_p(p)?;
    let root = p.ln().sqrt();
    Ok((p * k.mgf(root)?).ln() / root)
}

/// `L(h) = 2 sqrt((p-1) / (p(2h + h²) + 1))`.
pub fn lower_add(p: f64, h: f64) -> f64 {
    2.0 * ((p - 1.0) / (p * (2.0 * h + h * h) + 1.0)).sqrt()
}

pub fn theorem1_bounds(params: ModelParams, k: &Kernel) -> Result<SpeedBounds> {
    let (p, h) = (params.p(), params.h());
    let k1 = k1(p, k)?;
    let k2 = k2(p, k)?;
    let log_root = p.ln().sqrt();
    let lower_add = lower_add(p, h);
    let (regime, lower_log, upper_k1, upper_k2) = if h <= 1.0 {
        let k2_term = (h > 0.0).then(|| k2 / h);
        (Regime::ShortDelay, 2.0 * log_root / (1.0 + h), k1 / (1.0 + h), k2_term)
    } else {
        (Regime::LongDelay, log_root / h, k1 / 2.0, Some(k2 / h.sqrt()))
    };
    let upper_ad_opt = if h > 0.0 {
        Some(ad_upper_opt(params, k)?.value)
    } else {
        None
    };
    let lower = lower_add.max(lower_log);
    let upper = upper_k2.map_or(upper_k1, |u| u.min(upper_k1));
    Ok(SpeedBounds {
        h,
        regime,
        lower_add,
        lower_log,
        upper_k1,
        upper_k2,
        upper_ad_opt,
        lower,
        upper,
    })
}

/// `ln(p M(r) / (1 - r²)) / (h r)` for `h > 0`, `r ∈ (0, 1)`.
pub fn ad_upper(params: ModelParams, k: &Kernel, r: f64) -> Result<f64> {
    let h = params.h();
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("the r-family bound needs h > 0, got {h}")));
    }
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidParameter(format!("r must lie in (0, 1), got {r}")));
    }
    Ok((params.p() * k.mgf(r)? / (1.0 - r * r)).ln() / (h * r))
}

/// Minimizer of [`ad_upper`] over `r`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdOptimum {
    pub r: f64,
    pub value: f64,
}

/// Minimizes [`ad_upper`] over `r ∈ [1e-6, 1 - 1e-6]`: coarse scan, then
/// golden-section search on the bracketing cell.
pub fn ad_upper_opt(params: ModelParams, k: &Kernel) -> Result<AdOptimum> {
    const LO: f64 = 1e-6;
    const HI: f64 = 1.0 - 1e-6;
    const SCAN: usize = 64;
    let f = |r: f64| ad_upper(params, k, r);

    let grid: Vec<f64> = (0..=SCAN).map(|i| LO + (HI - LO) * i as f64 / SCAN as f64).collect();
    let mut best = 0;
    let mut best_val = f64::INFINITY;
    for (i, &r) in grid.iter().enumerate() {
        let v = f(r)?;
        if v < best_val {
            best = i;
            best_val = v;
        }
    }
    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(SCAN)];

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > 1e-12 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    let (r, value) = [(c, fc), (d, fd), (grid[best], best_val)]
        .into_iter()
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .expect("non-empty");
    Ok(AdOptimum { r, value })
}

fn check_p(p: f64) -> Result<()> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "monostable birth function needs p = g'(0) > 1, got p = {p}"
        )))
    }
}
