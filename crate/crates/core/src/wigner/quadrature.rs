//! Quadrature rules in `x = cos(theta)`.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes descending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = x;
        nodes[n - 1 - i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    (p1, nf * (x * p1 - p0) / (x * x - 1.0))
}

/// Clenshaw-Curtis weights for the nodes `x_j = cos(j pi / (n - 1))`,
/// i.e. equally spaced `theta` including both poles.
pub fn clenshaw_curtis(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2, "Clenshaw-Curtis needs at least the two poles");
    let m = n - 1;
    let mf = m as f64;
    let nodes = (0..n).map(|j| (j as f64 * PI / mf).cos()).collect();
    let weights = (0..n)
        .map(|j| {
            let c = if j == 0 || j == m { 1.0 } else { 2.0 };
            let mut acc = 1.0;
            for k in 1..=m / 2 {
                let b = if 2 * k == m { 1.0 } else { 2.0 };
                let kf = k as f64;
                acc -= b / (4.0 * kf * kf - 1.0) * (2.0 * kf * j as f64 * PI / mf).cos();
            }
            c * acc / mf
        })
        .collect();
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn integrate(rule: &(Vec<f64>, Vec<f64>), f: impl Fn(f64) -> f64) -> f64 {
        rule.0.iter().zip(&rule.1).map(|(&x, &w)| w * f(x)).sum()
    }

    #[test]
    fn gauss_legendre_exact_to_degree() {
        for n in [1usize, 2, 5, 12, 41] {
            let rule = gauss_legendre(n);
            assert_abs_diff_eq!(rule.1.iter().sum::<f64>(), 2.0, epsilon = 1e-13);
            let deg = 2 * n - 1;
            let exact = if deg % 2 == 0 { 2.0 / (deg + 1) as f64 } else { 0.0 };
            assert_abs_diff_eq!(integrate(&rule, |x| x.powi(deg as i32)), exact, epsilon = 1e-13);
            let even = deg - 1;
            assert_abs_diff_eq!(integrate(&rule, |x| x.powi(even as i32)), 2.0 / (even + 1) as f64, epsilon = 1e-13);
        }
    }

    #[test]
    fn clenshaw_curtis_exact_to_degree() {
        for n in [2usize, 3, 9, 61, 121] {
            let rule = clenshaw_curtis(n);
            assert_abs_diff_eq!(rule.1.iter().sum::<f64>(), 2.0, epsilon = 1e-13);
            let deg = if (n - 1) % 2 == 0 { n - 1 } else { n - 2 };
            assert_abs_diff_eq!(integrate(&rule, |x| x.powi(deg as i32)), 2.0 / (deg + 1) as f64, epsilon = 1e-12);
        }
    }
}
