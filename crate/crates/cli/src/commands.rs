use std::fs;
use std::io::Write;

use wavespeed_core::bounds::{ad_upper_opt, k1, k2, theorem1_bounds, Regime, SpeedBounds};
use wavespeed_core::charfun::{g_value, h_value, r_value, ModelParams};
use wavespeed_core::front_sim::{self, BirthFunction, SimConfig};
use wavespeed_core::solver::{ode_curve, solve_critical, solve_sweep, CriticalPoint, CurveSample, SolverConfig};

use crate::format::{fmt_num, fmt_opt, Csv};
use crate::svg::{line_chart, Series};
use crate::{Birth, CliError, CurveArgs, CurvesArgs, Method, PointArgs, SimulateArgs};

const CURVE_HEADER: [&str; 9] = [
    "h",
    "c_star",
    "lower_add",
    "lower_log",
    "upper_k1",
    "upper_k2",
    "lower_active",
    "upper_active",
    "residual",
];

pub(crate) fn speed(a: &PointArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let params = ModelParams::new(a.p, a.h)?;
    let cp = solve_critical(params, &a.kernel, &SolverConfig::default())?;
    let b = theorem1_bounds(params, &a.kernel)?;
    let c = cp.c_star;
    let placement = if b.lower < c && c < b.upper {
        "inside"
    } else if c >= b.lower - 1e-12 && c <= b.upper + 1e-12 {
        "on the boundary of"
    } else {
        "OUTSIDE"
    };
    writeln!(out, "kernel = {}, p = {}, h = {}", a.kernel, a.p, a.h)?;
    writeln!(out, "c* = {c:.9}")?;
    writeln!(out, "z0 = {}", fmt_num(cp.z0))?;
    writeln!(out, "eps0 = {}", fmt_num(cp.eps0))?;
    writeln!(out, "w0 = {}", fmt_num(cp.w0))?;
    writeln!(out, "|psi| = {:.3e}, |psi_z| = {:.3e}", cp.psi_residual, cp.dpsi_residual)?;
    writeln!(out, "c* is {placement} ({:.4}, {:.4})", b.lower, b.upper)?;
    Ok(())
}

pub(crate) fn bounds(a: &PointArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let params = ModelParams::new(a.p, a.h)?;
    let b = theorem1_bounds(params, &a.kernel)?;
    let regime = match b.regime {
        Regime::ShortDelay => "short delay (h <= 1)",
        Regime::LongDelay => "long delay (h > 1)",
    };
    writeln!(out, "kernel = {}, p = {}, h = {}", a.kernel, a.p, a.h)?;
    writeln!(out, "regime = {regime}")?;
    writeln!(out, "k1 = {}", fmt_num(k1(a.p, &a.kernel)?))?;
    writeln!(out, "k2 = {}", fmt_num(k2(a.p, &a.kernel)?))?;
    writeln!(out, "lower_add = {}", fmt_num(b.lower_add))?;
    writeln!(out, "lower_log = {}", fmt_num(b.lower_log))?;
    writeln!(out, "upper_k1 = {}", fmt_num(b.upper_k1))?;
    match b.upper_k2 {
        Some(u) => writeln!(out, "upper_k2 = {}", fmt_num(u))?,
        None => writeln!(out, "upper_k2 = n/a (h = 0)")?,
    }
    if a.h > 0.0 {
        let opt = ad_upper_opt(params, &a.kernel)?;
        writeln!(out, "upper_ad_opt = {} at r = {:.6}", fmt_num(opt.value), opt.r)?;
    }
    writeln!(out, "lower = {}", fmt_num(b.lower))?;
    writeln!(out, "upper = {}", fmt_num(b.upper))?;
    if a.h > 0.0 {
        writeln!(out, "h * lower = {}", fmt_num(a.h * b.lower))?;
    }
    Ok(())
}

/// Equally spaced delays from `lo` to `hi`; a single point when they agree.
pub(crate) fn delay_grid(lo: f64, hi: f64, samples: usize) -> Result<Vec<f64>, CliError> {
    if hi < lo {
        return Err(CliError::Usage(format!("empty delay range: h-max {hi} < h-min {lo}")));
    }
    if hi == lo {
        return Ok(vec![lo]);
    }
    if samples < 2 {
        return Err(CliError::Usage("a non-degenerate range needs at least 2 samples".into()));
    }
    let n = samples - 1;
    Ok((0..=n).map(|i| if i == n { hi } else { lo + (hi - lo) * i as f64 / n as f64 }).collect())
}

/// First failure message seen while filling a table.
#[derive(Default)]
struct FirstFailure(Option<String>);

impl FirstFailure {
    fn note(&mut self, h: f64, msg: impl std::fmt::Display) {
        self.0.get_or_insert_with(|| format!("h = {h}: {msg}"));
    }
}

pub(crate) fn curve(a: &CurveArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let grid = delay_grid(a.h_min, a.h_max, a.samples)?;
    if !(a.max_step > 0.0 && a.max_step.is_finite()) {
        return Err(CliError::Usage(format!("--max-step must be positive, got {}", a.max_step)));
    }
    ModelParams::new(a.p, 0.0)?;
    let cfg = SolverConfig::default();
    let mut failures = FirstFailure::default();
    let mut failed_rows = 0;

    let direct: Option<Vec<Option<CriticalPoint>>> = (a.method != Method::Ode).then(|| {
        solve_sweep(a.p, &grid, &a.kernel, &cfg)
            .into_iter()
            .zip(&grid)
            .map(|(r, &h)| r.map_err(|e| failures.note(h, e)).ok())
            .collect()
    });
    let ode: Option<Vec<Option<CurveSample>>> = (a.method != Method::Direct).then(|| {
        match ode_curve(a.p, &a.kernel, &grid, a.max_step, &cfg) {
            Ok(c) if c.samples.len() == grid.len() => c.samples.into_iter().map(Some).collect(),
            Ok(_) => {
                failures.note(grid[0], "continuation returned a short curve");
                vec![None; grid.len()]
            }
            Err(e) => {
                failures.note(grid[0], format!("continuation: {e}"));
                vec![None; grid.len()]
            }
        }
    });

    let mut header = CURVE_HEADER.to_vec();
    if a.method == Method::Both {
        header.extend(["c_star_ode", "rel_diff"]);
    }
    let mut csv = Csv::new(&header);
    let mut columns: Vec<Vec<Option<f64>>> = vec![Vec::new(); header.len() - 1];
    for (i, &h) in grid.iter().enumerate() {
        let b = ModelParams::new(a.p, h)
            .and_then(|params| theorem1_bounds(params, &a.kernel))
            .map_err(|e| failures.note(h, e))
            .ok();
        let (c_star, residual) = match (&direct, &ode) {
            (Some(d), _) => (d[i].map(|cp| cp.c_star), d[i].map(|cp| cp.psi_residual.max(cp.dpsi_residual))),
            (None, Some(o)) => (o[i].map(|s| s.c_star), o[i].map(|s| s.residual())),
            (None, None) => (None, None),
        };
        let mut values = vec![c_star];
        values.extend(bound_fields(b.as_ref()));
        values.push(residual);
        if a.method == Method::Both {
            let c_ode = ode.as_ref().and_then(|o| o[i].map(|s| s.c_star));
            let rel = c_star.zip(c_ode).map(|(d, o)| (o - d).abs() / d);
            values.extend([c_ode, rel]);
        }
        if values.iter().enumerate().any(|(j, v)| v.is_none() && header[j + 1] != "upper_k2") {
            failed_rows += 1;
        }
        let mut fields = vec![fmt_num(h)];
        fields.extend(values.iter().map(|&v| fmt_opt(v)));
        csv.row(&fields);
        for (col, v) in columns.iter_mut().zip(values) {
            col.push(v);
        }
    }

    csv.emit(a.out.as_deref(), out)?;
    if let Some(path) = &a.svg {
        let series: Vec<Series> = header[1..]
            .iter()
            .zip(&columns)
            .filter(|(name, _)| !matches!(**name, "residual" | "rel_diff"))
            .map(|(name, col)| Series {
                name: name.to_string(),
                points: grid.iter().copied().zip(col.iter().copied()).collect(),
            })
            .collect();
        let title = format!("c*(h) and bounds, p = {}, {}", a.p, a.kernel);
        fs::write(path, line_chart(&title, "h", &series))
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
    }
    match failures.0 {
        None => Ok(()),
        Some(first) => Err(CliError::Numerical(format!(
            "{failed_rows} of {} samples failed; first failure at {first}",
            grid.len()
        ))),
    }
}

fn bound_fields(b: Option<&SpeedBounds>) -> [Option<f64>; 6] {
    match b {
        Some(b) => [
            Some(b.lower_add),
            Some(b.lower_log),
            Some(b.upper_k1),
            b.upper_k2,
            Some(b.lower),
            Some(b.upper),
        ],
        None => [None; 6],
    }
}

pub(crate) fn curves(a: &CurvesArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let params = ModelParams::new(a.p, a.h)?;
    if a.samples < 2 {
        return Err(CliError::Usage("--samples must be at least 2".into()));
    }
    let eps = match a.eps {
        Some(e) => e,
        None => solve_critical(params, &a.kernel, &SolverConfig::default())?.eps0,
    };
    let w_max = 1.5 / eps.sqrt();
    let n = a.samples - 1;
    let mut csv = Csv::new(&["w", "G", "H", "R"]);
    let mut failed = None;
    for i in 0..=n {
        let w = if i == n { w_max } else { w_max * i as f64 / n as f64 };
        let h = Some(h_value(w, eps, a.h)).filter(|v| v.is_finite());
        let r = r_value(w, a.p, &a.kernel).ok().filter(|v| v.is_finite());
        if h.is_none() || r.is_none() {
            failed.get_or_insert(w);
        }
        csv.row(&[fmt_num(w), fmt_num(g_value(w, eps)), fmt_opt(h), fmt_opt(r)]);
    }
    csv.emit(a.out.as_deref(), out)?;
    match failed {
        None => Ok(()),
        Some(w) => Err(CliError::Numerical(format!("H or R overflows from w = {w}"))),
    }
}

pub(crate) fn simulate(a: &SimulateArgs, out: &mut dyn Write, diag: &mut dyn Write) -> Result<(), CliError> {
    let params = ModelParams::new(a.p, a.h)?;
    let birth = match a.birth {
        Birth::Nicholson => BirthFunction::nicholson(a.p)?,
        Birth::Capped => BirthFunction::capped_linear(a.p, a.cap)?,
    };
    let cfg = SimConfig {
        length: a.length,
        dx: a.dx,
        dt: a.dt,
        t_end: a.t_end,
        ..SimConfig::default()
    };
    let r = front_sim::run(&cfg, params, &a.kernel, birth)?;
    let mut csv = Csv::new(&["t", "x_front"]);
    for &(t, x) in &r.trace {
        csv.row(&[fmt_num(t), fmt_num(x)]);
    }
    csv.emit(a.out.as_deref(), out)?;

    writeln!(diag, "fitted speed = {:.6} (rms residual {:.2e})", r.fit.speed, r.fit.rms_residual)?;
    if let Some(c) = r.reference_c_star {
        writeln!(diag, "c* = {c:.6}, relative difference = {:+.4}", r.fit.speed / c - 1.0)?;
    }
    writeln!(diag, "dt = {:.3e}, steps = {}, clamp events = {}", r.dt, r.steps, r.clamp_events)?;
    if let Some(t) = r.boundary_hit {
        writeln!(diag, "front reached the right margin at t = {t:.2}; stopped early")?;
    }
    Ok(())
}
