//! Symmetric probability kernels `K` and their moment-generating functional
//! `M(λ) = ∫ K(s) e^{λs} ds`.
//!
//! Every kernel is even, nonnegative, has unit mass and a finite MGF on the
//! whole real line. `M` is therefore even and convex with `M(0) = 1`, and
//! `∫ s K(s) e^{-ws} ds = -M'(w)`, which is how the rest of the crate reaches
//! the first-moment integrals.
//!
//! Closed forms are used for the Gaussian (heat) kernel, the uniform kernel,
//! the symmetric two-point kernel and the Dirac limit. Any other kernel is
//! [tabulated](Kernel::tabulated) and integrated with a composite
//! Gauss–Legendre rule on `[-S, S]`.
//!
//! The two-point kernel is a pair of atoms. It satisfies every structural
//! hypothesis used here but has no pointwise density.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use crate::quadrature;
use crate::{Error, Result};

/// Panel order of the composite rule used by tabulated kernels.
const PANEL_ORDER: usize = 8;

/// A symmetric probability kernel.
#[derive(Clone)]
pub struct Kernel {
    shape: Shape,
}

#[derive(Clone)]
enum Shape {
    Gaussian { alpha: f64 },
    Uniform { a: f64 },
    TwoPoint { a: f64 },
    Dirac,
    Tabulated(Tabulated),
}

/// Public view of a kernel's variant and parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KernelKind {
    /// Heat kernel `(4πα)^{-1/2} exp(-s²/(4α))`.
    Gaussian { alpha: f64 },
    /// Density `1/(2a)` on `[-a, a]`.
    Uniform { a: f64 },
    /// Mass 1/2 at `±a`.
    TwoPoint { a: f64 },
    /// Point mass at the origin: the `α → 0⁺` limit of the heat kernel.
    DiracLimit,
    /// Quadrature-backed kernel supported on `[-half_width, half_width]`.
    Tabulated { half_width: f64 },
}

/// Quadrature settings for tabulated kernels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TabulatedConfig {
    /// Truncation half-width `S`. `None` picks `10 (1 + sqrt(m2))` for
    /// function-backed kernels and the table support for table-backed ones.
    pub half_width: Option<f64>,
    /// Total number of quadrature nodes on `[-S, S]`, rounded up to a whole
    /// number of panels on each half.
    pub nodes: usize,
}

impl Default for TabulatedConfig {
    fn default() -> Self {
        Self {
            half_width: None,
            nodes: 513,
        }
    }
}

#[derive(Clone)]
struct Tabulated {
    density: DensitySource,
    /// Multiplier turning the raw density into one with unit mass.
    scale: f64,
    half_width: f64,
    /// Positive abscissae.
    nodes: Arc<[f64]>,
    /// Mass carried by the pair `±node`; sums to one.
    weights: Arc<[f64]>,
}

#[derive(Clone)]
enum DensitySource {
    /// Symmetrized half table `(s >= 0, value)`, ascending in `s`.
    Table(Arc<[(f64, f64)]>),
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl DensitySource {
    fn raw(&self, s: f64) -> f64 {
        match self {
            DensitySource::Table(t) => interp_half_table(t, s.abs()),
            DensitySource::Function(f) => 0.5 * (f(s) + f(-s)),
        }
    }
}

fn interp_half_table(t: &[(f64, f64)], s: f64) -> f64 {
    let (first, last) = (t[0], t[t.len() - 1]);
    if s <= first.0 {
        return first.1;
    }
    if s > last.0 {
        return 0.0;
    }
    let i = t.partition_point(|&(x, _)| x < s);
    let (x0, y0) = t[i - 1];
    let (x1, y1) = t[i];
    y0 + (y1 - y0) * (s - x0) / (x1 - x0)
}

fn check_finite(value: f64, lambda: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Overflow { lambda })
    }
}

impl Kernel {
    pub fn gaussian(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gaussian kernel needs alpha > 0, got {alpha}"
            )));
        }
        Ok(Self {
            shape: Shape::Gaussian { alpha },
        })
    }

    pub fn uniform(a: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "uniform kernel needs a > 0, got {a}"
            )));
        }
        Ok(Self {
            shape: Shape::Uniform { a },
        })
    }

    /// Two atoms of mass 1/2 at `±a`; `a = 0` is the Dirac limit.
    pub fn two_point(a: f64) -> Result<Self> {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "two-point kernel needs a >= 0, got {a}"
            )));
        }
        Ok(Self {
            shape: Shape::TwoPoint { a },
        })
    }

    pub fn dirac() -> Self {
        Self { shape: Shape::Dirac }
    }

    /// Kernel from `(s, weight)` samples of an unnormalized density.
    ///
    /// The samples are linearly interpolated, symmetrized, and set to zero
    /// outside the sampled range. A table that only covers `s >= 0` is
    /// mirrored. Mass is renormalized to one.
    pub fn tabulated(points: &[(f64, f64)], cfg: TabulatedConfig) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::KernelTable("need at least two samples".into()));
        }
        let mut raw: Vec<(f64, f64)> = points.to_vec();
        for &(s, w) in &raw {
            if !s.is_finite() || !w.is_finite() {
                return Err(Error::KernelTable(format!("non-finite sample ({s}, {w})")));
            }
            if w < 0.0 {
                return Err(Error::KernelTable(format!("negative weight {w} at s = {s}")));
            }
        }
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        if raw.windows(2).any(|p| p[0].0 == p[1].0) {
            return Err(Error::KernelTable("duplicate abscissa".into()));
        }

        let mirrored = raw[0].0 >= 0.0;
        let lin = |s: f64| -> f64 {
            if s < raw[0].0 || s > raw[raw.len() - 1].0 {
                return 0.0;
            }
            let i = raw.partition_point(|&(x, _)| x < s);
            if i == 0 {
                return raw[0].1;
            }
            let (x0, y0) = raw[i - 1];
            let (x1, y1) = raw[i];
            y0 + (y1 - y0) * (s - x0) / (x1 - x0)
        };
        let mut grid: Vec<f64> = raw.iter().map(|&(s, _)| s.abs()).collect();
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let half: Vec<(f64, f64)> = grid
            .into_iter()
            .map(|s| {
                let v = if mirrored {
                    lin(s)
                } else {
                    0.5 * (lin(s) + lin(-s))
                };
                (s, v)
            })
            .collect();
        let support = half[half.len() - 1].0;
        if support <= 0.0 {
            return Err(Error::KernelTable("table has zero support".into()));
        }
        let half_width = cfg.half_width.unwrap_or(support);
        Self::build_tabulated(DensitySource::Table(half.into()), half_width, cfg.nodes)
    }

    /// Kernel from an arbitrary nonnegative density function; it is
    /// symmetrized and renormalized on `[-S, S]`.
    pub fn tabulated_from_fn<F>(density: F, cfg: TabulatedConfig) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let source = DensitySource::Function(Arc::new(density));
        let half_width = match cfg.half_width {
            Some(s) => s,
            None => {
                // Provisional second moment on a wide window.
                let (x, w) = quadrature::composite(0.0, 64.0, 128, PANEL_ORDER);
                let (mut mass, mut m2) = (0.0, 0.0);
                for (x, w) in x.iter().zip(&w) {
                    let f = source.raw(*x);
                    mass += w * f;
                    m2 += w * f * x * x;
                }
                if !(mass > 0.0) {
                    return Err(Error::KernelTable("density has no mass near the origin".into()));
                }
                10.0 * (1.0 + (m2 / mass).sqrt())
            }
        };
        Self::build_tabulated(source, half_width, cfg.nodes)
    }

    /// Quadrature twin of a closed-form kernel with a density.
    pub fn tabulated_twin(&self, nodes: usize) -> Result<Self> {
        let half_width = match self.shape {
            // Panel edge on the discontinuity.
            Shape::Uniform { a } => Some(a),
            _ => None,
        };
        let me = self.clone();
        me.density(0.0)?;
        Self::tabulated_from_fn(
            move |s| me.density(s).unwrap_or(0.0),
            TabulatedConfig { half_width, nodes },
        )
    }

    /// Reads a two-column `s,weight` CSV, with or without a header row.
    pub fn from_csv_path(path: impl AsRef<Path>, cfg: TabulatedConfig) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::KernelTable(format!("{}: {e}", path.display())))?;
        let mut points = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record =
                record.map_err(|e| Error::KernelTable(format!("{}: {e}", path.display())))?;
            if record.len() != 2 {
                return Err(Error::KernelTable(format!(
                    "{}: line {} has {} fields, expected 2",
                    path.display(),
                    line + 1,
                    record.len()
                )));
            }
            match (record[0].parse::<f64>(), record[1].parse::<f64>()) {
                (Ok(s), Ok(w)) => points.push((s, w)),
                _ if line == 0 => continue,
                _ => {
                    return Err(Error::KernelTable(format!(
                        "{}: line {} is not numeric",
                        path.display(),
                        line + 1
                    )))
                }
            }
        }
        Self::tabulated(&points, cfg)
    }

    fn build_tabulated(density: DensitySource, half_width: f64, nodes: usize) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "truncation half-width must be positive, got {half_width}"
            )));
        }
        if nodes < 2 * PANEL_ORDER {
            return Err(Error::InvalidParameter(format!(
                "tabulated kernel needs at least {} nodes, got {nodes}",
                2 * PANEL_ORDER
            )));
        }
        let panels = nodes.div_ceil(2 * PANEL_ORDER);
        let (x, w) = quadrature::composite(0.0, half_width, panels, PANEL_ORDER);
        let mut pair: Vec<f64> = Vec::with_capacity(x.len());
        for (xi, wi) in x.iter().zip(&w) {
            let f = density.raw(*xi);
            if !(f >= 0.0) || !f.is_finite() {
                return Err(Error::KernelTable(format!("density is {f} at s = {xi}")));
            }
            pair.push(2.0 * wi * f);
        }
        let mass: f64 = pair.iter().sum();
        if !(mass > 0.0) {
            return Err(Error::KernelTable("kernel has zero mass".into()));
        }
        for p in &mut pair {
            *p /= mass;
        }
        Ok(Self {
            shape: Shape::Tabulated(Tabulated {
                density,
                scale: 1.0 / mass,
                half_width,
                nodes: x.into(),
                weights: pair.into(),
            }),
        })
    }

    pub fn kind(&self) -> KernelKind {
        match &self.shape {
            Shape::Gaussian { alpha } => KernelKind::Gaussian { alpha: *alpha },
            Shape::Uniform { a } => KernelKind::Uniform { a: *a },
            Shape::TwoPoint { a } => KernelKind::TwoPoint { a: *a },
            Shape::Dirac => KernelKind::DiracLimit,
            Shape::Tabulated(t) => KernelKind::Tabulated {
                half_width: t.half_width,
            },
        }
    }

    pub fn name(&self) -> &'static str {
        match self.shape {
            Shape::Gaussian { .. } => "gaussian",
            Shape::Uniform { .. } => "uniform",
            Shape::TwoPoint { .. } => "two-point",
            Shape::Dirac => "dirac",
            Shape::Tabulated(_) => "tabulated",
        }
    }

    /// Heat-kernel parameter, if this is the Gaussian kernel.
    pub fn gaussian_alpha(&self) -> Option<f64> {
        match self.shape {
            Shape::Gaussian { alpha } => Some(alpha),
            _ => None,
        }
    }

    pub fn is_dirac(&self) -> bool {
        matches!(self.shape, Shape::Dirac) || matches!(self.shape, Shape::TwoPoint { a } if a == 0.0)
    }

    /// Half-width outside which the kernel is zero or numerically negligible.
    pub fn effective_half_width(&self) -> f64 {
        match &self.shape {
            // exp(-s²/4α) < 1e-15 beyond 12 sqrt(α)
            Shape::Gaussian { alpha } => 12.0 * alpha.sqrt(),
            Shape::Uniform { a } | Shape::TwoPoint { a } => *a,
            Shape::Dirac => 0.0,
            Shape::Tabulated(t) => t.half_width,
        }
    }

    /// Pointwise density `K(s)`.
    pub fn density(&self, s: f64) -> Result<f64> {
        match &self.shape {
            Shape::Gaussian { alpha } => {
                Ok((-s * s / (4.0 * alpha)).exp() / (4.0 * std::f64::consts::PI * alpha).sqrt())
            }
            Shape::Uniform { a } => Ok(if s.abs() <= *a { 0.5 / a } else { 0.0 }),
            Shape::TwoPoint { .. } => Err(Error::UnsupportedVariant {
                op: "density",
                variant: "two-point",
            }),
            Shape::Dirac => Err(Error::UnsupportedVariant {
                op: "density",
                variant: "dirac",
            }),
            Shape::Tabulated(t) => {
                if s.abs() > t.half_width {
                    Ok(0.0)
                } else {
                    Ok(t.density.raw(s) * t.scale)
                }
            }
        }
    }

    /// `M(λ)`.
    pub fn mgf(&self, lambda: f64) -> Result<f64> {
        self.mgf_with_derivatives(lambda).map(|(m, _, _)| m)
    }

    /// `M'(λ)`; odd in `λ`.
    pub fn mgf_deriv(&self, lambda: f64) -> Result<f64> {
        self.mgf_with_derivatives(lambda).map(|(_, d, _)| d)
    }

    /// `M''(λ)`.
    pub fn mgf_deriv2(&self, lambda: f64) -> Result<f64> {
        self.mgf_with_derivatives(lambda).map(|(_, _, d2)| d2)
    }

    /// `(M(λ), M'(λ), M''(λ))` in one pass.
    pub fn mgf_with_derivatives(&self, lambda: f64) -> Result<(f64, f64, f64)> {
        if !lambda.is_finite() {
            return Err(Error::Overflow { lambda });
        }
        let (m, d1, d2) = match &self.shape {
            Shape::Gaussian { alpha } => {
                let e = (alpha * lambda * lambda).exp();
                let d1 = 2.0 * alpha * lambda * e;
                let d2 = (2.0 * alpha + 4.0 * alpha * alpha * lambda * lambda) * e;
                (e, d1, d2)
            }
            Shape::Uniform { a } => {
                let (f0, f1, f2) = sinhc_with_derivatives(a * lambda);
                (f0, a * f1, a * a * f2)
            }
            Shape::TwoPoint { a } => {
                let x = a * lambda;
                (x.cosh(), a * x.sinh(), a * a * x.cosh())
            }
            Shape::Dirac => (1.0, 0.0, 0.0),
            Shape::Tabulated(t) => {
                let (mut m, mut d1, mut d2) = (0.0, 0.0, 0.0);
                for (x, w) in t.nodes.iter().zip(t.weights.iter()) {
                    let (c, s) = ((lambda * x).cosh(), (lambda * x).sinh());
                    m += w * c;
                    d1 += w * x * s;
                    d2 += w * x * x * c;
                }
                (m, d1, d2)
            }
        };
        Ok((
            check_finite(m, lambda)?,
            check_finite(d1, lambda)?,
            check_finite(d2, lambda)?,
        ))
    }

    /// `∫ s² K(s) ds = M''(0)`.
    pub fn second_moment(&self) -> f64 {
        match &self.shape {
            Shape::Gaussian { alpha } => 2.0 * alpha,
            Shape::Uniform { a } => a * a / 3.0,
            Shape::TwoPoint { a } => a * a,
            Shape::Dirac => 0.0,
            Shape::Tabulated(t) => t
                .nodes
                .iter()
                .zip(t.weights.iter())
                .map(|(x, w)| w * x * x)
                .sum(),
        }
    }
}

/// `f(x) = sinh(x)/x` and its first two derivatives.
fn sinhc_with_derivatives(x: f64) -> (f64, f64, f64) {
    if x.abs() < 0.5 {
        // f = Σ x^{2k} / (2k+1)!
        let x2 = x * x;
        let (mut f0, mut f1, mut f2) = (1.0, 0.0, 0.0);
        let mut coeff = 1.0 / 6.0; // 1/(2k+1)! at k = 1
        let mut pow = 1.0; // x^{2k-2}
        for k in 1..14 {
            let n = 2.0 * k as f64;
            f0 += coeff * pow * x2;
            f1 += coeff * n * pow * x;
            f2 += coeff * n * (n - 1.0) * pow;
            coeff /= (n + 2.0) * (n + 3.0);
            pow *= x2;
        }
        (f0, f1, f2)
    } else {
        let (s, c) = (x.sinh(), x.cosh());
        let f0 = s / x;
        let f1 = (x * c - s) / (x * x);
        let f2 = ((x * x + 2.0) * s - 2.0 * x * c) / (x * x * x);
        (f0, f1, f2)
    }
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Kernel({self})")
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.shape {
            Shape::Gaussian { alpha } => write!(f, "gaussian:alpha={alpha}"),
            Shape::Uniform { a } => write!(f, "uniform:a={a}"),
            Shape::TwoPoint { a } => write!(f, "twopoint:a={a}"),
            Shape::Dirac => write!(f, "dirac"),
            Shape::Tabulated(t) => write!(f, "table(S={}, nodes={})", t.half_width, 2 * t.nodes.len()),
        }
    }
}

/// Parses `gaussian:alpha=1`, `uniform:a=1`, `twopoint:a=1`, `dirac` or
/// `table:path.csv`.
impl FromStr for Kernel {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let bad = |reason: &str| Error::KernelSpec {
            spec: spec.to_string(),
            reason: reason.to_string(),
        };
        let (name, rest) = match spec.split_once(':') {
            Some((n, r)) => (n.trim(), Some(r.trim())),
            None => (spec.trim(), None),
        };
        let param = |key: &str| -> Result<f64> {
            let rest = rest.ok_or_else(|| bad(&format!("missing `{key}=<value>`")))?;
            let (k, v) = rest
                .split_once('=')
                .ok_or_else(|| bad(&format!("expected `{key}=<value>`")))?;
            if k.trim() != key {
                return Err(bad(&format!("unknown parameter `{}`, expected `{key}`", k.trim())));
            }
            v.trim()
                .parse::<f64>()
                .map_err(|_| bad(&format!("`{}` is not a number", v.trim())))
        };
        match name.to_ascii_lowercase().as_str() {
            "gaussian" | "heat" => Kernel::gaussian(param("alpha")?),
            "uniform" => Kernel::uniform(param("a")?),
            "twopoint" | "two-point" => Kernel::two_point(param("a")?),
            "dirac" if rest.is_none_or(str::is_empty) => Ok(Kernel::dirac()),
            "dirac" => Err(bad("dirac takes no parameters")),
            "table" => {
                let path = rest.filter(|p| !p.is_empty()).ok_or_else(|| bad("missing path"))?;
                Kernel::from_csv_path(path, TabulatedConfig::default())
            }
            _ => Err(bad("unknown kernel; expected gaussian, uniform, twopoint, dirac or table")),
        }
    }
}
