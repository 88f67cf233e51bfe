//! Gauss–Legendre rules on [0,1] and collapsed (Duffy) rules on triangles.

use std::sync::OnceLock;

#[derive(Clone, Debug)]
pub struct Rule1d {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Rule on the reference triangle (0,0),(1,0),(0,1); weights sum to 1/2.
#[derive(Clone, Debug)]
pub struct RuleTri {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

/// `n`-point Gauss–Legendre rule on [0,1].
pub fn gauss_legendre(n: usize) -> Rule1d {
    assert!(n >= 1);
    let mut points = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        points[n - 1 - i] = 0.5 * (x + 1.0);
        weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    Rule1d { points, weights }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Legendre polynomial P_j on [-1,1].
pub fn legendre(j: usize, s: f64) -> f64 {
    match j {
        0 => 1.0,
        1 => s,
        _ => {
            let (mut p0, mut p1) = (1.0, s);
            for k in 2..=j {
                let p2 = ((2 * k - 1) as f64 * s * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            p1
        }
    }
}

const MAX_DEGREE: usize = 40;

/// Rule on [0,1] exact for polynomials of degree `degree`.
pub fn line_rule(degree: usize) -> &'static Rule1d {
    static CACHE: OnceLock<Vec<Rule1d>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| (0..=MAX_DEGREE).map(|d| gauss_legendre(d / 2 + 1)).collect());
    &cache[degree.min(MAX_DEGREE)]
}

/// Collapsed Gauss rule on the reference triangle exact to `degree`.
pub fn triangle_rule(degree: usize) -> &'static RuleTri {
    static CACHE: OnceLock<Vec<RuleTri>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| (0..=MAX_DEGREE).map(build_triangle).collect());
    &cache[degree.min(MAX_DEGREE)]
}

fn build_triangle(degree: usize) -> RuleTri {
    // x = a, y = b(1-a), dx dy = (1-a) da db; the a-integrand has degree d+1.
    let ra = gauss_legendre((degree + 2).div_ceil(2).max(1));
    let rb = gauss_legendre((degree + 1).div_ceil(2).max(1));
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (a, wa) in ra.points.iter().zip(&ra.weights) {
        for (b, wb) in rb.points.iter().zip(&rb.weights) {
            points.push([*a, b * (1.0 - a)]);
            weights.push(wa * wb * (1.0 - a));
        }
    }
    RuleTri { points, weights }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    #[test]
    fn line_rules_integrate_monomials() {
        for d in 0..20 {
            let r = line_rule(d);
            for p in 0..=d {
                let s: f64 = r.points.iter().zip(&r.weights).map(|(x, w)| w * x.powi(p as i32)).sum();
                assert!((s - 1.0 / (p as f64 + 1.0)).abs() < 1e-14, "d={d} p={p}");
            }
        }
    }

    #[test]
    fn triangle_rules_integrate_monomials() {
        // ∫_T x^a y^b = a! b! / (a+b+2)!
        for d in 0..16 {
            let r = triangle_rule(d);
            for a in 0..=d {
                for b in 0..=(d - a) {
                    let s: f64 = r
                        .points
                        .iter()
                        .zip(&r.weights)
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                        .sum();
                    let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                    assert!((s - exact).abs() < 1e-15, "d={d} a={a} b={b}");
                }
            }
        }
    }

    #[test]
    fn legendre_values() {
        assert!((legendre(2, 0.5) - (-0.125)).abs() < 1e-15);
        assert!((legendre(3, 1.0) - 1.0).abs() < 1e-15);
    }
}
