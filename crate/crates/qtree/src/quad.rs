//! Gauss-Legendre quadrature.

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1], by
/// Newton iteration on the Legendre polynomial from the Chebyshev initial
/// guess.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // p_n(x) and its derivative by the three-term recurrence
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// ∫₀^L f(x) dx with the n-point rule.
pub fn integrate(f: &dyn Fn(f64) -> f64, length: f64, n: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(n);
    let half = 0.5 * length;
    nodes
        .iter()
        .zip(&weights)
        .map(|(x, w)| w * f(half * (x + 1.0)))
        .sum::<f64>()
        * half
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_integrated_exactly() {
        // 32 points are exact through degree 63
        let v = integrate(&|x| x.powi(7) - 3.0 * x.powi(4) + 2.0, 2.0, 32);
        let exact = 2.0f64.powi(8) / 8.0 - 3.0 * 2.0f64.powi(5) / 5.0 + 4.0;
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn oscillatory_converges_with_doubling() {
        let f = |x: f64| (10.0 * x).sin() * (3.0 * x).cos();
        let a = integrate(&f, 1.5, 32);
        let b = integrate(&f, 1.5, 64);
        assert!((a - b).abs() < 1e-12);
    }
}
