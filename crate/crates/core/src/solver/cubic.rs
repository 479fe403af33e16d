//! Real roots of cubics, and the heat-kernel cubic for `w0`.

use std::f64::consts::PI;

use crate::{Error, Result};

/// Real roots of `a w³ + b w² + c w + d`, ascending. Three roots (counted
/// with multiplicity) come from the trigonometric form, one from Cardano's
/// formula. Each root is polished by Newton on the original polynomial.
pub fn real_cubic_roots(a: f64, b: f64, c: f64, d: f64) -> Result<Vec<f64>> {
    if a == 0.0 || !a.is_finite() {
        return Err(Error::DegenerateCubic(a));
    }
    let (b, c, d) = (b / a, c / a, d / a);
    // w = t - b/3 gives t³ + P t + Q = 0
    let shift = b / 3.0;
    let pp = c - b * b / 3.0;
    let qq = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let disc = (qq / 2.0).powi(2) + (pp / 3.0).powi(3);
    let size = (qq / 2.0).powi(2) + (pp / 3.0).abs().powi(3);

    let mut roots = if disc <= 1e-12 * size || pp < 0.0 && disc <= 0.0 {
        if pp >= 0.0 {
            // P = Q = 0: triple root.
            vec![-shift; 3]
        } else {
            let r = 2.0 * (-pp / 3.0).sqrt();
            let arg = (3.0 * qq / (2.0 * pp) * (-3.0 / pp).sqrt()).clamp(-1.0, 1.0);
            let phi = arg.acos() / 3.0;
            (0..3)
                .map(|k| r * (phi - 2.0 * PI * k as f64 / 3.0).cos() - shift)
                .collect()
        }
    } else {
        let sq = disc.sqrt();
        let u = (-qq / 2.0 + sq).cbrt();
        let v = (-qq / 2.0 - sq).cbrt();
        vec![u + v - shift]
    };

    let f = |w: f64| ((w + b) * w + c) * w + d;
    let df = |w: f64| (3.0 * w + 2.0 * b) * w + c;
    for root in roots.iter_mut() {
        for _ in 0..3 {
            let slope = df(*root);
            if slope == 0.0 {
                break;
            }
            let next = *root - f(*root) / slope;
            if !next.is_finite() || f(next).abs() >= f(*root).abs() {
                break;
            }
            *root = next;
        }
    }
    roots.sort_by(f64::total_cmp);
    Ok(roots)
}

/// Coefficients `(a3, a2, a1, a0)` of
/// `(w² - w/√ε - 1)(2√ε α w - h) + 1 - 2√ε w`.
pub fn heat_cubic_coefficients(eps: f64, h: f64, alpha: f64) -> [f64; 4] {
    let se = eps.sqrt();
    [
        2.0 * alpha * se,
        -(2.0 * alpha + h),
        h / se - 2.0 * se * (1.0 + alpha),
        1.0 + h,
    ]
}

/// Leftmost positive root `w0` of the heat-kernel cubic: the double root in
/// the `w` variable when `K` is the heat kernel with parameter `alpha`.
///
/// The cubic is expected to have three real roots; a single real root is
/// reported as [`Error::SingleRealRoot`] rather than silently accepted.
pub fn cardano_w0(eps: f64, h: f64, alpha: f64) -> Result<f64> {
    if !(eps > 0.0) || !(h >= 0.0) || !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "cubic needs eps > 0, h >= 0, alpha > 0 (got {eps}, {h}, {alpha})"
        )));
    }
    let [a3, a2, a1, a0] = heat_cubic_coefficients(eps, h, alpha);
    if a3 < 1e-14 {
        return Err(Error::DegenerateCubic(a3));
    }
    let roots = real_cubic_roots(a3, a2, a1, a0)?;
    if roots.len() < 3 {
        let (b, c, d) = (a2 / a3, a1 / a3, a0 / a3);
        let pp = c - b * b / 3.0;
        let qq = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
        return Err(Error::SingleRealRoot((qq / 2.0).powi(2) + (pp / 3.0).powi(3)));
    }
    roots.into_iter().find(|&w| w > 0.0).ok_or(Error::NoPositiveRoot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn companion_real_roots(a: f64, b: f64, c: f64, d: f64) -> Vec<f64> {
        let m = Matrix3::new(-b / a, -c / a, -d / a, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0);
        let mut r: Vec<f64> = m
            .complex_eigenvalues()
            .iter()
            .filter(|z| z.im.abs() < 1e-7)
            .map(|z| z.re)
            .collect();
        r.sort_by(f64::total_cmp);
        r
    }

    #[test]
    fn matches_companion_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..500 {
            let mut r = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
            r.sort_by(f64::total_cmp);
            if r[1] - r[0] < 0.1 || r[2] - r[1] < 0.1 {
                continue;
            }
            let a = rng.gen_range(0.5..3.0);
            let (b, c, d) = (
                -a * (r[0] + r[1] + r[2]),
                a * (r[0] * r[1] + r[0] * r[2] + r[1] * r[2]),
                -a * r[0] * r[1] * r[2],
            );
            let ours = real_cubic_roots(a, b, c, d).unwrap();
            let oracle = companion_real_roots(a, b, c, d);
            assert_eq!(ours.len(), 3);
            for (x, y) in ours.iter().zip(&oracle) {
                assert!((x - y).abs() < 1e-10, "{ours:?} vs {oracle:?}");
            }
        }
    }

    #[test]
    fn single_real_root() {
        // (w - 2)(w² + 1)
        let r = real_cubic_roots(1.0, -2.0, 1.0, -2.0).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn repeated_roots() {
        // (w - 1)² (w + 2)
        let r = real_cubic_roots(1.0, 0.0, -3.0, 2.0).unwrap();
        assert_eq!(r.len(), 3);
        assert!((r[0] + 2.0).abs() < 1e-12 && (r[1] - 1.0).abs() < 1e-7 && (r[2] - 1.0).abs() < 1e-7);
        let r = real_cubic_roots(2.0, -6.0, 6.0, -2.0).unwrap();
        assert!(r.iter().all(|w| (w - 1.0).abs() < 1e-12));
    }

    #[test]
    fn heat_cubic_has_three_real_roots_and_small_residual() {
        for &alpha in &[0.1, 1.0, 3.0] {
            for &h in &[0.0, 0.5, 1.0, 5.0, 50.0] {
                for &eps in &[0.05, 0.3, 1.0, 10.0, 1e3] {
                    let [a3, a2, a1, a0] = heat_cubic_coefficients(eps, h, alpha);
                    let roots = real_cubic_roots(a3, a2, a1, a0).unwrap();
                    assert_eq!(roots.len(), 3, "alpha={alpha} h={h} eps={eps}");
                    let w = cardano_w0(eps, h, alpha).unwrap();
                    let res = ((a3 * w + a2) * w + a1) * w + a0;
                    let scale = a3.abs() * w.powi(3) + a2.abs() * w * w + a1.abs() * w + a0.abs();
                    assert!(res.abs() <= 1e-12 * scale);
                }
            }
        }
    }

    #[test]
    fn heat_cubic_factored_form() {
        let (eps, h, alpha): (f64, f64, f64) = (0.7, 2.0, 1.3);
        let se = eps.sqrt();
        let w = cardano_w0(eps, h, alpha).unwrap();
        let f = (w * w - w / se - 1.0) * (2.0 * se * alpha * w - h) + 1.0 - 2.0 * se * w;
        assert!(f.abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert!(matches!(cardano_w0(1e-40, 1.0, 1.0), Err(Error::DegenerateCubic(_))));
        assert!(cardano_w0(-1.0, 1.0, 1.0).is_err());
        assert!(real_cubic_roots(0.0, 1.0, 1.0, 1.0).is_err());
    }
}
