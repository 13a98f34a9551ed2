#![allow(dead_code)]

use charfn::CMatrix;
use num_complex::Complex64;

const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Composite 5-point Gauss-Legendre rule on `[a, b]` with `panels` panels.
pub fn gauss_legendre<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, panels: usize) -> Complex64 {
    let h = (b - a) / panels as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (x, w) in GL5_NODES.iter().zip(GL5_WEIGHTS) {
            sum += f(mid + 0.5 * h * x) * w;
        }
    }
    sum * (0.5 * h)
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// `int_{-L}^{L} e^{i (z - conj(lambda)) t} dt` by quadrature.
pub fn paley_wiener_quadrature(half_length: f64, lambda: Complex64, z: Complex64) -> Complex64 {
    let w = z - lambda.conj();
    gauss_legendre(|t| (I * w * t).exp(), -half_length, half_length, 400)
}

/// Principal square root with the branch cut on the negative axis.
fn sqrt(z: Complex64) -> Complex64 {
    z.sqrt()
}

/// `(u, v) = (cos(k (x - x0)), sin(k (x - x0)) / k)` with `k^2 = z`, for
/// `-u'' = z u`; even in `k`, so the branch does not matter.
pub fn free_solutions(z: Complex64, x: f64, x0: f64) -> [Complex64; 2] {
    let k = sqrt(z);
    let s = x - x0;
    let u = (k * s).cos();
    let v = if k.norm() < 1e-8 { Complex64::new(s, 0.0) } else { (k * s).sin() / k };
    [u, v]
}

/// `K[j][m] = int_a^b gamma_j(x; z) gamma_m(x; conj(lambda)) dx` for
/// `p = 1, q = 0`, by quadrature of the closed-form solutions.
pub fn free_sturm_liouville_kernel(interval: (f64, f64), x0: f64, lambda: Complex64, z: Complex64) -> CMatrix {
    let mut rows = vec![vec![Complex64::new(0.0, 0.0); 2]; 2];
    for j in 0..2 {
        for m in 0..2 {
            rows[j][m] = gauss_legendre(
                |x| free_solutions(z, x, x0)[j] * free_solutions(lambda.conj(), x, x0)[m],
                interval.0,
                interval.1,
                256,
            );
        }
    }
    CMatrix::from_rows(&rows).unwrap()
}

pub fn blaschke(z: Complex64) -> Complex64 {
    (z - I) / (z + I)
}

/// Closed form of the characteristic function of `-d^2/dx^2` on the half-line.
pub fn free_half_line_v(z: Complex64) -> Complex64 {
    let r = 2f64.sqrt();
    let s = z.sqrt();
    blaschke(z) * (s - c(1.0, -1.0) / r) / (s + c(1.0, 1.0) / r)
}

/// Deterministic points in the upper half-plane.
pub fn upper_points(count: usize, seed: u64) -> Vec<Complex64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| c(rng.gen_range(-3.0..3.0), rng.gen_range(0.05..3.0)))
        .collect()
}

#[test]
fn gauss_legendre_is_exact_for_degree_nine() {
    let got = gauss_legendre(|x| c(x.powi(9) + x.powi(8), 0.0), -1.0, 2.0, 1);
    let exact = (2f64.powi(10) - 1.0) / 10.0 + (2f64.powi(9) + 1.0) / 9.0;
    assert!((got.re - exact).abs() < 1e-12 * exact);
}
