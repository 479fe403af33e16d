use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wavespeed_core::bounds::theorem1_bounds;
use wavespeed_core::charfun::{psi_eval, wform_residuals, ModelParams};
use wavespeed_core::kernel::Kernel;
use wavespeed_core::solver::{
    cardano_w0, continue_ode, min_psi, positive_roots, solve_critical, solve_ivp_rho0, CriticalPoint, SolverConfig,
};

use crate::{CliError, VerifyArgs};

const DELAYS: [f64; 7] = [0.0, 0.5, 1.0, 2.0, 3.5, 5.0, 10.0];

struct Check {
    name: &'static str,
    outcome: Outcome,
    detail: String,
}

enum Outcome {
    Pass,
    Fail,
    Skip,
}

impl Check {
    fn new(name: &'static str, ok: bool, detail: String) -> Self {
        let outcome = if ok { Outcome::Pass } else { Outcome::Fail };
        Self { name, outcome, detail }
    }

    fn error(name: &'static str, e: impl std::fmt::Display) -> Self {
        Self { name, outcome: Outcome::Fail, detail: e.to_string() }
    }

    fn skip(name: &'static str, why: &str) -> Self {
        Self { name, outcome: Outcome::Skip, detail: why.to_string() }
    }
}

pub(crate) fn run(a: &VerifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if !a.perturb_seed.is_finite() {
        return Err(CliError::Usage("seed perturbation must be finite".into()));
    }
    let (p, k) = (a.p, &a.kernel);
    let cfg = SolverConfig::default();
    let critical: Vec<Result<CriticalPoint, String>> = DELAYS
        .iter()
        .map(|&h| {
            ModelParams::new(p, h)
                .and_then(|params| solve_critical(params, k, &cfg))
                .map_err(|e| format!("h = {h}: {e}"))
        })
        .collect();

    let checks = vec![
        seed_check(p, k, &cfg, a.perturb_seed),
        continuation_check(p, k, &cfg, a.perturb_seed),
        cardano_check(p, k, &critical),
        certificate_check(p, k, &critical),
        sandwich_check(p, k, &critical),
        monotone_check(&critical),
        ew_identity_check(k),
        eww_identity_check(p, k, &cfg, &critical),
    ];

    writeln!(out, "kernel = {k}, p = {p}")?;
    writeln!(out, "{:<26} {:<6} detail", "check", "status")?;
    let mut failed = 0;
    for c in &checks {
        let status = match c.outcome {
            Outcome::Pass => "pass",
            Outcome::Fail => {
                failed += 1;
                "FAIL"
            }
            Outcome::Skip => "skip",
        };
        writeln!(out, "{:<26} {status:<6} {}", c.name, c.detail)?;
    }
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("{failed} of {} checks failed", checks.len())))
    }
}

/// The continuation seed: the closed-form value for the heat kernel at
/// `h = alpha`, the direct solve at `h = 1` otherwise.
fn seed(p: f64, k: &Kernel, cfg: &SolverConfig, perturb: f64) -> Result<(f64, f64), String> {
    let (h, eps) = match k.gaussian_alpha() {
        Some(alpha) => (alpha, solve_ivp_rho0(p, alpha).map_err(|e| e.to_string())?),
        None => {
            let params = ModelParams::new(p, 1.0).map_err(|e| e.to_string())?;
            (1.0, solve_critical(params, k, cfg).map_err(|e| e.to_string())?.eps0)
        }
    };
    Ok((h, eps * (1.0 + perturb)))
}

fn seed_check(p: f64, k: &Kernel, cfg: &SolverConfig, perturb: f64) -> Check {
    const NAME: &str = "seed consistency";
    let (h, eps) = match seed(p, k, cfg, perturb) {
        Ok(s) => s,
        Err(e) => return Check::error(NAME, e),
    };
    let params = match ModelParams::new(p, h) {
        Ok(x) => x,
        Err(e) => return Check::error(NAME, e),
    };
    match k.gaussian_alpha() {
        Some(_) => match solve_critical(params, k, cfg) {
            Ok(cp) => {
                let diff = (eps - cp.eps0).abs();
                Check::new(NAME, diff <= 1e-8, format!("closed-form seed vs direct eps0 at h = {h}: {diff:.2e}"))
            }
            Err(e) => Check::error(NAME, e),
        },
        None => match min_psi(eps, params, k, cfg) {
            Ok(m) => Check::new(NAME, m.value.abs() <= 1e-8, format!("psi_min at seed: {:.2e}", m.value)),
            Err(e) => Check::error(NAME, e),
        },
    }
}

fn continuation_check(p: f64, k: &Kernel, cfg: &SolverConfig, perturb: f64) -> Check {
    const NAME: &str = "continuation endpoint";
    let result = seed(p, k, cfg, perturb).and_then(|(h0, eps)| {
        let steps = ((5.0 - h0).abs() / 0.01).ceil().max(1.0) as usize;
        let curve = continue_ode(p, k, h0, eps, 5.0, steps, cfg).map_err(|e| e.to_string())?;
        let end = curve.samples.last().ok_or("empty curve")?.c_star;
        let params = ModelParams::new(p, 5.0).map_err(|e| e.to_string())?;
        let direct = solve_critical(params, k, cfg).map_err(|e| e.to_string())?.c_star;
        Ok((curve.method, (end - direct).abs() / direct))
    });
    match result {
        Ok((method, rel)) => Check::new(NAME, rel <= 1e-6, format!("{} to h = 5, relative error {rel:.2e}", method.as_str())),
        Err(e) => Check::error(NAME, e),
    }
}

fn cardano_check(p: f64, k: &Kernel, critical: &[Result<CriticalPoint, String>]) -> Check {
    const NAME: &str = "cubic vs generic w0";
    let Some(alpha) = k.gaussian_alpha() else {
        return Check::skip(NAME, "heat kernel only");
    };
    let mut worst: f64 = 0.0;
    for (cp, &h) in critical.iter().zip(&DELAYS) {
        let cp = match cp {
            Ok(cp) => cp,
            Err(e) => return Check::error(NAME, e),
        };
        match cardano_w0(cp.eps0, h, alpha) {
            Ok(w) => worst = worst.max((w - cp.w0).abs() / cp.w0),
            Err(e) => return Check::error(NAME, format!("p = {p}, h = {h}: {e}")),
        }
    }
    Check::new(NAME, worst <= 1e-7, format!("max relative difference {worst:.2e}"))
}

fn certificate_check(p: f64, k: &Kernel, critical: &[Result<CriticalPoint, String>]) -> Check {
    const NAME: &str = "residual certificate";
    let mut worst_psi: f64 = 0.0;
    let mut worst_w: f64 = 0.0;
    for (cp, &h) in critical.iter().zip(&DELAYS) {
        let cp = match cp {
            Ok(cp) => cp,
            Err(e) => return Check::error(NAME, e),
        };
        if !(cp.dzz > 0.0 && cp.deps > 0.0) {
            return Check::new(NAME, false, format!("h = {h}: psi_zz or psi_eps not positive"));
        }
        let params = match ModelParams::new(p, h) {
            Ok(x) => x,
            Err(e) => return Check::error(NAME, e),
        };
        match wform_residuals(cp.w0, cp.eps0, params, k) {
            Ok((ew, eww)) => worst_w = worst_w.max(ew.abs()).max(eww.abs()),
            Err(e) => return Check::error(NAME, e),
        }
        worst_psi = worst_psi.max(cp.psi_residual).max(cp.dpsi_residual);
    }
    Check::new(
        NAME,
        worst_psi <= 1e-9 && worst_w <= 1e-8,
        format!("max |psi|,|psi_z| = {worst_psi:.1e}, max w-form = {worst_w:.1e}"),
    )
}

fn sandwich_check(p: f64, k: &Kernel, critical: &[Result<CriticalPoint, String>]) -> Check {
    const NAME: &str = "bound sandwich";
    let slack = if k.is_dirac() { 1e-12 } else { 0.0 };
    let mut tightest = f64::INFINITY;
    for (cp, &h) in critical.iter().zip(&DELAYS) {
        let bounds = ModelParams::new(p, h).and_then(|params| theorem1_bounds(params, k));
        let (cp, b) = match (cp, bounds) {
            (Ok(cp), Ok(b)) => (cp, b),
            (Err(e), _) => return Check::error(NAME, e),
            (_, Err(e)) => return Check::error(NAME, e),
        };
        let c = cp.c_star;
        let ok = if slack > 0.0 {
            c >= b.lower - slack && c <= b.upper + slack
        } else {
            b.lower < c && c < b.upper
        };
        if !ok {
            return Check::new(NAME, false, format!("h = {h}: c* = {c} outside ({}, {})", b.lower, b.upper));
        }
        tightest = tightest.min((c - b.lower).min(b.upper - c) / c);
    }
    Check::new(NAME, true, format!("{} delays, tightest relative gap {tightest:.2e}", DELAYS.len()))
}

fn monotone_check(critical: &[Result<CriticalPoint, String>]) -> Check {
    const NAME: &str = "c* decreasing in h";
    let mut speeds = Vec::new();
    for cp in critical {
        match cp {
            Ok(cp) => speeds.push(cp.c_star),
            Err(e) => return Check::error(NAME, e),
        }
    }
    let ok = speeds.windows(2).all(|w| w[1] < w[0]);
    Check::new(NAME, ok, format!("c*(0) = {:.6}, c*(10) = {:.6}", speeds[0], speeds[speeds.len() - 1]))
}

/// `rho_ew(sqrt(eps) z, eps) = -e^{zh} psi(z, eps)` at random points.
fn ew_identity_check(k: &Kernel) -> Check {
    const NAME: &str = "ew identity";
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let p = rng.gen_range(1.1..5.0);
        let h = rng.gen_range(0.0..4.0);
        let eps: f64 = rng.gen_range(0.05..3.0);
        let z: f64 = rng.gen_range(0.01..4.0);
        let result = ModelParams::new(p, h).and_then(|params| {
            let (ew, _) = wform_residuals(eps.sqrt() * z, eps, params, k)?;
            let psi = psi_eval(z, eps, params, k)?.value;
            Ok((ew, -(z * h).exp() * psi))
        });
        match result {
            Ok((ew, expected)) => worst = worst.max((ew - expected).abs() / expected.abs().max(1.0)),
            Err(e) => return Check::error(NAME, e),
        }
    }
    Check::new(NAME, worst <= 1e-10, format!("100 random points, max relative error {worst:.1e}"))
}

/// `rho_eww = (e^{zh}/sqrt(eps)) psi_z` where `psi = 0`, on roots of
/// `psi(·, eps)` for eps below critical.
fn eww_identity_check(p: f64, k: &Kernel, cfg: &SolverConfig, critical: &[Result<CriticalPoint, String>]) -> Check {
    const NAME: &str = "eww identity";
    let mut worst: f64 = 0.0;
    let mut points = 0;
    for (cp, &h) in critical.iter().zip(&DELAYS) {
        let cp = match cp {
            Ok(cp) => cp,
            Err(e) => return Check::error(NAME, e),
        };
        for frac in [0.5, 0.8, 0.95] {
            let eps = frac * cp.eps0;
            let result = ModelParams::new(p, h).and_then(|params| {
                let (z1, z2) = positive_roots(eps, params, k, cfg)?;
                let mut errs = Vec::new();
                for z in [z1, z2] {
                    let (_, eww) = wform_residuals(eps.sqrt() * z, eps, params, k)?;
                    let expected = (z * h).exp() / eps.sqrt() * psi_eval(z, eps, params, k)?.dz;
                    errs.push((eww - expected).abs() / expected.abs());
                }
                Ok(errs)
            });
            match result {
                Ok(errs) => {
                    points += errs.len();
                    worst = errs.into_iter().fold(worst, f64::max);
                }
                Err(e) => return Check::error(NAME, format!("h = {h}: {e}")),
            }
        }
    }
    Check::new(NAME, worst <= 1e-8, format!("{points} on-curve points, max relative error {worst:.1e}"))
}
