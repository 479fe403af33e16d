//! Gauss–Legendre rules.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// nodes in ascending order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let pn = if n == 0 { 1.0 } else { p1 };
    let pn_1 = if n == 0 { 0.0 } else { p0 };
    let d = n as f64 * (x * pn - pn_1) / (x * x - 1.0);
    (pn, d)
}

/// Composite rule with `panels` equal panels of `order` nodes on `[a, b]`.
pub fn composite(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (t, w) = gauss_legendre(order);
    let width = (b - a) / panels as f64;
    let mut xs = Vec::with_capacity(panels * order);
    let mut ws = Vec::with_capacity(panels * order);
    for k in 0..panels {
        let lo = a + width * k as f64;
        let mid = lo + 0.5 * width;
        for (ti, wi) in t.iter().zip(&w) {
            xs.push(mid + 0.5 * width * ti);
            ws.push(0.5 * width * wi);
        }
    }
    (xs, ws)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 5, 8, 20, 64] {
            let (_, w) = gauss_legendre(n);
            let s: f64 = w.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n} sum={s}");
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        let n = 8;
        let (x, w) = gauss_legendre(n);
        for deg in 0..(2 * n) {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "deg {deg}: {q} vs {exact}");
        }
    }

    #[test]
    fn three_point_rule_is_textbook() {
        let (x, w) = gauss_legendre(3);
        let r = (0.6f64).sqrt();
        assert!((x[0] + r).abs() < 1e-15 && x[1] == 0.0 && (x[2] - r).abs() < 1e-15);
        assert!((w[0] - 5.0 / 9.0).abs() < 1e-15 && (w[1] - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn composite_integrates_exponential() {
        let (x, w) = composite(0.0, 3.0, 6, 8);
        let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.exp()).sum();
        assert!((q - (3.0f64.exp() - 1.0)).abs() < 1e-12);
    }
}
