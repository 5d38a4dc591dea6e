//! Gauss-Legendre rules and Legendre polynomials.

use std::f64::consts::PI;

/// Nodes and weights of the `m`-point Gauss-Legendre rule on `[-1, 1]`,
/// nodes ascending.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1, "rule needs at least one node");
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        // Tricomi's initial guess, then Newton on P_m
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(m, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    (nodes, weights)
}

/// `(P_l(x), P_l'(x))` by the three-term recurrence.
pub fn legendre_with_derivative(l: usize, x: f64) -> (f64, f64) {
    if l == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=l {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    // (1 - x²) P_l' = l (P_{l-1} - x P_l); at x = ±1 use P_l'(±1) = (±1)^{l+1} l(l+1)/2
    let d = if (1.0 - x * x).abs() < 1e-300 {
        let s = if x > 0.0 || l % 2 == 1 { 1.0 } else { -1.0 };
        s * (l * (l + 1)) as f64 / 2.0
    } else {
        l as f64 * (p0 - x * p1) / (1.0 - x * x)
    };
    (p1, d)
}

/// `P_0(x), …, P_lmax(x)`.
pub fn legendre_table(lmax: usize, x: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(lmax + 1);
    p.push(1.0);
    if lmax >= 1 {
        p.push(x);
    }
    for k in 2..=lmax {
        let kf = k as f64;
        p.push(((2.0 * kf - 1.0) * x * p[k - 1] - (kf - 1.0) * p[k - 2]) / kf);
    }
    p
}

/// `∫_a^b f` with an `m`-point Gauss-Legendre rule.
pub fn integrate_gl(m: usize, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (x, w) = gauss_legendre(m);
    let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
    r * x.iter().zip(&w).map(|(xi, wi)| wi * f(c + r * xi)).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for m in [1, 2, 5, 64, 129, 512] {
            let (_, w) = gauss_legendre(m);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13, "m = {m}");
        }
    }

    #[test]
    fn exact_for_polynomials() {
        // degree 2m - 1 is integrated exactly
        let v = integrate_gl(5, -1.0, 1.0, |x| x.powi(8) + x.powi(9));
        assert!((v - 2.0 / 9.0).abs() < 1e-15);
        let v = integrate_gl(3, 0.0, 2.0, |x| x.powi(5));
        assert!((v - 64.0 / 6.0).abs() < 1e-13);
    }

    #[test]
    fn legendre_orthogonality() {
        let (x, w) = gauss_legendre(40);
        for l in 0..10 {
            for k in 0..10 {
                let s: f64 = x.iter().zip(&w).map(|(&xi, wi)| wi * legendre_table(10, xi)[l] * legendre_table(10, xi)[k]).sum();
                let expect = if l == k { 2.0 / (2 * l + 1) as f64 } else { 0.0 };
                assert!((s - expect).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn derivative_matches_difference() {
        for l in [1, 2, 7, 16] {
            for &x in &[-0.9, -0.3, 0.2, 0.77] {
                let h = 1e-6;
                let fd = (legendre_with_derivative(l, x + h).0 - legendre_with_derivative(l, x - h).0) / (2.0 * h);
                assert!((fd - legendre_with_derivative(l, x).1).abs() < 1e-6 * (1.0 + fd.abs()));
            }
        }
    }
}
