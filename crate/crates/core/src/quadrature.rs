//! Gauss–Legendre rules and barycentric interpolation on their nodes.

use std::f64::consts::PI;

/// Gauss–Legendre rule on an interval, nodes in ascending order.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule on `[-1, 1]`, computed by Newton iteration on the
    /// three-term Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let half = n.div_ceil(2);
        for i in 0..half {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
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
            if d.is_finite() {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            weights[i] = w;
            nodes[n - 1 - i] = x;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// `n`-point rule mapped affinely onto `[a, b]`.
    pub fn on_interval(n: usize, a: f64, b: f64) -> Self {
        Self::new(n).mapped(a, b)
    }

    pub fn mapped(&self, a: f64, b: f64) -> Self {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        Self {
            nodes: self.nodes.iter().map(|x| mid + half * x).collect(),
            weights: self.weights.iter().map(|w| half * w).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
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
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, dp)
}

/// Polynomial interpolation through a fixed node set in barycentric form.
#[derive(Debug, Clone)]
pub struct Barycentric {
    nodes: Vec<f64>,
    lambda: Vec<f64>,
}

impl Barycentric {
    /// Barycentric weights for Gauss–Legendre nodes:
    /// `λ_j = (-1)^j sqrt((1 - x_j²) w_j)` on the reference interval. The
    /// affine map to another interval rescales all weights by a common
    /// factor, which cancels.
    pub fn for_gauss_legendre(reference: &GaussLegendre, nodes: &[f64]) -> Self {
        let lambda = reference
            .nodes
            .iter()
            .zip(&reference.weights)
            .enumerate()
            .map(|(j, (&x, &w))| {
                let s = ((1.0 - x * x) * w).sqrt();
                if j % 2 == 0 {
                    s
                } else {
                    -s
                }
            })
            .collect();
        Self {
            nodes: nodes.to_vec(),
            lambda,
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Values of every Lagrange basis polynomial at `x`.
    pub fn basis_at(&self, x: f64) -> Vec<f64> {
        let n = self.nodes.len();
        let mut out = vec![0.0; n];
        if let Some(j) = self.nodes.iter().position(|&xj| xj == x) {
            out[j] = 1.0;
            return out;
        }
        let mut denom = 0.0;
        for j in 0..n {
            let t = self.lambda[j] / (x - self.nodes[j]);
            out[j] = t;
            denom += t;
        }
        for v in &mut out {
            *v /= denom;
        }
        out
    }

    /// Spectral differentiation matrix, row-major `n × n`.
    pub fn differentiation_matrix(&self) -> Vec<f64> {
        let n = self.nodes.len();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            let mut diag = 0.0;
            for j in 0..n {
                if i != j {
                    let v = (self.lambda[j] / self.lambda[i]) / (self.nodes[i] - self.nodes[j]);
                    d[i * n + j] = v;
                    diag -= v;
                }
            }
            d[i * n + i] = diag;
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn weights_sum_to_interval_length() {
        for n in [1, 2, 5, 16, 64, 128] {
            let gl = GaussLegendre::new(n);
            let s: f64 = gl.weights.iter().sum();
            assert_relative_eq!(s, 2.0, max_relative = 1e-13);
            assert!(gl.nodes.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        let gl = GaussLegendre::on_interval(8, 0.0, 1.0);
        for deg in 0..16 {
            let got = gl.integrate(|x| x.powi(deg));
            assert_relative_eq!(got, 1.0 / (deg as f64 + 1.0), max_relative = 1e-13);
        }
    }

    #[test]
    fn barycentric_interpolates_and_differentiates_polynomials() {
        let reference = GaussLegendre::new(12);
        let gl = reference.mapped(0.0, 1.0);
        let bary = Barycentric::for_gauss_legendre(&reference, &gl.nodes);
        let f = |x: f64| 3.0 * x.powi(7) - x.powi(2) + 0.5;
        let df = |x: f64| 21.0 * x.powi(6) - 2.0 * x;
        let vals: Vec<f64> = gl.nodes.iter().map(|&x| f(x)).collect();
        for x in [0.0, 0.123, 0.77, 1.0] {
            let basis = bary.basis_at(x);
            let v: f64 = basis.iter().zip(&vals).map(|(b, v)| b * v).sum();
            assert_relative_eq!(v, f(x), epsilon = 1e-12);
        }
        let d = bary.differentiation_matrix();
        let n = gl.len();
        for i in 0..n {
            let v: f64 = (0..n).map(|j| d[i * n + j] * vals[j]).sum();
            assert_relative_eq!(v, df(gl.nodes[i]), epsilon = 1e-10);
        }
    }
}
