//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wavespeed_core::bounds::{k2, theorem1_bounds};
use wavespeed_core::charfun::{psi_eval, wform_residuals, ModelParams};
use wavespeed_core::front_sim::{run, BirthFunction, SimConfig};
use wavespeed_core::kernel::Kernel;
use wavespeed_core::solver::{
    continue_ode, ode_curve, positive_roots, solve_critical, solve_ivp_rho0, CriticalPoint, SolverConfig,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn critical(p: f64, h: f64, k: &Kernel) -> Result<CriticalPoint, String> {
    let params = ModelParams::new(p, h).map_err(|e| e.to_string())?;
    solve_critical(params, k, &SolverConfig::default()).map_err(|e| format!("p={p} h={h} {k}: {e}"))
}

fn gaussian() -> Kernel {
    Kernel::gaussian(1.0).expect("alpha = 1")
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_time(elapsed: Duration, limit: f64) -> Result<(), String> {
    let secs = elapsed.as_secs_f64();
    ensure(secs < limit, || format!("took {secs:.2} s, limit {limit} s"))
}

fn grid51() -> Vec<f64> {
    (0..=50).map(|i| i as f64 / 10.0).collect()
}

fn kpp_limit() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for p in [1.5, 2.0, 4.0] {
        let c = critical(p, 0.0, &Kernel::dirac())?.c_star;
        worst = worst.max((c - 2.0 * (p - 1.0f64).sqrt()).abs());
    }
    within_time(start.elapsed(), 1.0)?;
    ensure(worst <= 1e-8, || format!("max |c* - 2 sqrt(p-1)| = {worst:.2e}"))?;
    Ok(format!("max error {worst:.1e}"))
}

fn sandwich() -> Outcome {
    let k = gaussian();
    let grid = grid51();
    let mut speeds = Vec::new();
    for &h in &grid {
        let c = critical(2.0, h, &k)?.c_star;
        let params = ModelParams::new(2.0, h).map_err(|e| e.to_string())?;
        let b = theorem1_bounds(params, &k).map_err(|e| e.to_string())?;
        ensure(b.lower < c && c < b.upper, || format!("h={h}: {} < {c} < {} fails", b.lower, b.upper))?;
        speeds.push(c);
    }
    let (c0, c1) = (speeds[0], speeds[10]);
    for (&h, &c) in grid.iter().zip(&speeds).take_while(|(&h, _)| h <= 1.0) {
        let lo = 2.0 * c1 / (1.0 + h);
        let hi = c0 / (1.0 + h);
        ensure(lo - 1e-9 <= c && c <= hi + 1e-9, || format!("h={h}: {lo} <= {c} <= {hi} fails"))?;
    }
    Ok("51 samples strictly inside; short-delay relations hold".into())
}

fn monotone_smooth() -> Outcome {
    let k = gaussian();
    let speeds = grid51()
        .iter()
        .map(|&h| critical(2.0, h, &k).map(|cp| cp.c_star))
        .collect::<Result<Vec<_>, _>>()?;
    ensure(speeds.windows(2).all(|w| w[1] < w[0]), || "c* not strictly decreasing".into())?;
    let d2: Vec<f64> = speeds.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).collect();
    let mut worst: f64 = 0.0;
    for i in 1..d2.len() - 1 {
        let neighbours = d2[i - 1].abs().max(d2[i + 1].abs());
        let ratio = d2[i].abs() / neighbours;
        worst = worst.max(ratio);
        ensure(ratio <= 10.0, || format!("kink at h={}: ratio {ratio:.2}", (i + 1) as f64 / 10.0))?;
    }
    Ok(format!("strictly decreasing; max second-difference ratio {worst:.3}"))
}

fn continuation() -> Outcome {
    let start = Instant::now();
    let cfg = SolverConfig::default();
    let grid: Vec<f64> = (0..=40).map(|i| 1.0 + i as f64 / 10.0).collect();
    let mut report = Vec::new();
    for k in [gaussian(), Kernel::uniform(1.0).expect("a = 1")] {
        let curve = ode_curve(2.0, &k, &grid, 0.01, &cfg).map_err(|e| e.to_string())?;
        let mut worst: f64 = 0.0;
        for s in &curve.samples {
            let direct = critical(2.0, s.h, &k)?.c_star;
            worst = worst.max((s.c_star - direct).abs() / direct);
        }
        // The same comparison from an explicit start at h = 1.
        let eps1 = match k.gaussian_alpha() {
            Some(alpha) => solve_ivp_rho0(2.0, alpha).map_err(|e| e.to_string())?,
            None => critical(2.0, 1.0, &k)?.eps0,
        };
        let run = continue_ode(2.0, &k, 1.0, eps1, 5.0, 400, &cfg).map_err(|e| e.to_string())?;
        let endpoint = run.endpoint_rel_error.ok_or("no endpoint comparison")?;
        worst = worst.max(endpoint);
        ensure(worst <= 1e-6, || format!("{k}: relative difference {worst:.2e}"))?;
        report.push(format!("{} {worst:.1e}", curve.method.as_str()));
    }
    within_time(start.elapsed(), 10.0)?;
    Ok(report.join(", "))
}

fn ivp_seed() -> Outcome {
    let rho = solve_ivp_rho0(2.0, 1.0).map_err(|e| e.to_string())?;
    let x = 1.0 / (4.0 * rho);
    let residual = (1.0 + x - 2.0 * (-x).exp()).abs();
    ensure(residual <= 1e-12, || format!("seed equation residual {residual:.2e}"))?;
    let eps0 = critical(2.0, 1.0, &gaussian())?.eps0;
    let diff = (rho - eps0).abs();
    ensure(diff <= 1e-8, || format!("|rho0 - eps0| = {diff:.2e}"))?;
    Ok(format!("rho0 = {rho:.12}, residual {residual:.1e}, |rho0 - eps0| = {diff:.1e}"))
}

fn kernels() -> Vec<Kernel> {
    vec![
        Kernel::dirac(),
        gaussian(),
        Kernel::gaussian(0.2).expect("alpha"),
        Kernel::uniform(1.0).expect("a"),
        Kernel::two_point(0.7).expect("a"),
        gaussian().tabulated_twin(513).expect("twin"),
    ]
}

fn certificate() -> Outcome {
    let mut count = 0;
    let (mut worst_psi, mut worst_w): (f64, f64) = (0.0, 0.0);
    for k in kernels() {
        for p in [1.5, 2.0, 4.0] {
            for h in [0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0] {
                let cp = critical(p, h, &k)?;
                let params = ModelParams::new(p, h).map_err(|e| e.to_string())?;
                let (ew, eww) = wform_residuals(cp.w0, cp.eps0, params, &k).map_err(|e| e.to_string())?;
                let ok = cp.psi_residual <= 1e-9
                    && cp.dpsi_residual <= 1e-9
                    && cp.dzz > 0.0
                    && cp.deps > 0.0
                    && ew.abs() <= 1e-8
                    && eww.abs() <= 1e-8;
                ensure(ok, || format!("{k} p={p} h={h}: {cp:?}, rho_ew={ew:e}, rho_eww={eww:e}"))?;
                worst_psi = worst_psi.max(cp.psi_residual).max(cp.dpsi_residual);
                worst_w = worst_w.max(ew.abs()).max(eww.abs());
                count += 1;
            }
        }
    }
    Ok(format!("{count} points; max |psi|,|psi_z| {worst_psi:.1e}; max w-form {worst_w:.1e}"))
}

fn identities() -> Outcome {
    let ks = kernels();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_ew: f64 = 0.0;
    for _ in 0..100 {
        let k = &ks[rng.gen_range(0..ks.len())];
        let (p, h): (f64, f64) = (rng.gen_range(1.1..5.0), rng.gen_range(0.0..5.0));
        let (eps, z): (f64, f64) = (rng.gen_range(0.05..3.0), rng.gen_range(0.01..4.0));
        let params = ModelParams::new(p, h).map_err(|e| e.to_string())?;
        let (ew, _) = wform_residuals(eps.sqrt() * z, eps, params, k).map_err(|e| e.to_string())?;
        let expected = -(z * h).exp() * psi_eval(z, eps, params, k).map_err(|e| e.to_string())?.value;
        let rel = (ew - expected).abs() / expected.abs();
        ensure(rel <= 1e-10, || format!("{k} p={p} h={h} eps={eps} z={z}: relative error {rel:.2e}"))?;
        worst_ew = worst_ew.max(rel);
    }

    let cfg = SolverConfig::default();
    let mut worst_eww: f64 = 0.0;
    let mut points = 0;
    for k in &ks[..5] {
        for (p, h) in [(2.0, 0.5), (3.0, 2.0), (1.5, 1.0), (2.0, 4.0)] {
            let params = ModelParams::new(p, h).map_err(|e| e.to_string())?;
            let eps = 0.6 * critical(p, h, k)?.eps0;
            let (z, _) = positive_roots(eps, params, k, &cfg).map_err(|e| e.to_string())?;
            let (_, eww) = wform_residuals(eps.sqrt() * z, eps, params, k).map_err(|e| e.to_string())?;
            let dz = psi_eval(z, eps, params, k).map_err(|e| e.to_string())?.dz;
            let expected = (z * h).exp() / eps.sqrt() * dz;
            let rel = (eww - expected).abs() / expected.abs();
            ensure(rel <= 1e-8, || format!("{k} p={p} h={h}: relative error {rel:.2e}"))?;
            worst_eww = worst_eww.max(rel);
            points += 1;
        }
    }
    ensure(points == 20, || format!("{points} on-curve points"))?;
    Ok(format!("ew: 100 points, max {worst_ew:.1e}; eww: 20 points, max {worst_eww:.1e}"))
}

fn asymptotics() -> Outcome {
    let k = gaussian();
    let k2 = k2(2.0, &k).map_err(|e| e.to_string())?;
    let root = 2f64.ln().sqrt();
    let mut scaled = Vec::new();
    for h in [10.0, 20.0, 50.0, 100.0] {
        let c = critical(2.0, h, &k)?.c_star;
        ensure(root < h * c, || format!("h={h}: h c* = {} <= sqrt(ln 2)", h * c))?;
        ensure(c < k2 / h.sqrt(), || format!("h={h}: c* = {c} >= k2/sqrt(h)"))?;
        if h >= 20.0 {
            scaled.push(h * c);
        }
    }
    let (lo, hi) = scaled.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    let spread = (hi - lo) / lo;
    ensure(spread < 0.2, || format!("h c* spread {spread:.3}"))?;
    Ok(format!("h c* over {{20, 50, 100}} = {scaled:.4?}, spread {spread:.3}"))
}

fn front_speed() -> Outcome {
    let cfg = SimConfig::default();
    ensure(cfg.dx == 0.1 && cfg.length == 400.0, || "unexpected default grid".into())?;
    let mut report = Vec::new();
    for (k, h, tol) in [(Kernel::dirac(), 0.0, 0.05), (gaussian(), 1.0, 0.10)] {
        let start = Instant::now();
        let params = ModelParams::new(2.0, h).map_err(|e| e.to_string())?;
        let birth = BirthFunction::nicholson(2.0).map_err(|e| e.to_string())?;
        let r = run(&cfg, params, &k, birth).map_err(|e| e.to_string())?;
        let elapsed = start.elapsed();
        let reference = if k.is_dirac() { 2.0 } else { critical(2.0, 1.0, &k)?.c_star };
        let rel = r.fit.speed / reference - 1.0;
        ensure(rel.abs() <= tol, || format!("{k} h={h}: speed {} vs {reference}", r.fit.speed))?;
        within_time(elapsed, 60.0)?;
        report.push(format!("{k} h={h}: {:.4} vs {reference:.4} ({rel:+.3}, {:.1} s)", r.fit.speed, elapsed.as_secs_f64()));
    }
    Ok(report.join("; "))
}

fn determinism() -> Outcome {
    let run = || -> Result<Vec<u8>, String> {
        let o = Command::new(env!("CARGO_BIN_EXE_wavespeed"))
            .arg("figure2")
            .output()
            .map_err(|e| e.to_string())?;
        ensure(o.status.success(), || String::from_utf8_lossy(&o.stderr).into_owned())?;
        Ok(o.stdout)
    };
    let (a, b) = (run()?, run()?);
    ensure(!a.is_empty() && a == b, || "figure2 outputs differ".into())?;
    Ok(format!("{} identical bytes", a.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("KPP limit", kpp_limit),
        ("bound sandwich", sandwich),
        ("monotonicity and smoothness", monotone_smooth),
        ("continuation consistency", continuation),
        ("IVP seed", ivp_seed),
        ("residual certificate", certificate),
        ("algebraic identities", identities),
        ("long-delay asymptotics", asymptotics),
        ("front speed", front_speed),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name} [{secs:.2} s]: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name} [{secs:.2} s]: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
