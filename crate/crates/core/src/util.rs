//! Shared numerical plumbing: deterministic summation, Gauss-Legendre rules,
//! reproducible RNG streams and dense lookup tables with cubic interpolation.

use num_complex::Complex64;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Fixed-order pairwise summation. The reduction tree depends only on the
/// slice length, so results are identical no matter how the inputs were
/// produced (sequentially or by parallel workers writing into their slots).
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

pub fn pairwise_sum_complex(xs: &[Complex64]) -> Complex64 {
    match xs.len() {
        0 => Complex64::new(0.0, 0.0),
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum_complex(&xs[..mid]) + pairwise_sum_complex(&xs[mid..])
        }
    }
}

/// Counter-based stream RNG: `(seed, stream)` fully determines the sequence,
/// so parallel tasks draw from disjoint, schedule-independent streams.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
/// Newton iteration on P_n with the Tricomi initial guess.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // initial guess for the i-th positive root
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // evaluate P_n(x) and P_n'(x) by the three-term recurrence
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            dp = (n as f64) * (x * p - if n == 1 { 1.0 } else { p0 }) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        // middle node is exactly zero; recompute its weight from P_n'(0)
        let mut p0 = 1.0;
        let mut p1 = 0.0;
        for k in 2..=n {
            let kf = k as f64;
            let p2 = (-(kf - 1.0) * p0) / kf;
            p0 = p1;
            p1 = p2;
        }
        let dp = (n as f64) * p0; // P_n'(0) = n * P_{n-1}(0)
        nodes[n / 2] = 0.0;
        weights[n / 2] = 2.0 / (dp * dp);
    }
    (nodes, weights)
}

/// Integrate `f` over `[a, b]` with an n-point Gauss-Legendre rule.
pub fn gl_integrate<F: FnMut(f64) -> f64>(a: f64, b: f64, n: usize, mut f: F) -> f64 {
    let (nodes, weights) = gauss_legendre(n);
    let c = 0.5 * (b - a);
    let d = 0.5 * (b + a);
    let terms: Vec<f64> = nodes
        .iter()
        .zip(&weights)
        .map(|(&x, &w)| w * f(c * x + d))
        .collect();
    c * pairwise_sum(&terms)
}

pub fn gl_integrate_complex<F: FnMut(f64) -> Complex64>(
    a: f64,
    b: f64,
    n: usize,
    mut f: F,
) -> Complex64 {
    let (nodes, weights) = gauss_legendre(n);
    let c = 0.5 * (b - a);
    let d = 0.5 * (b + a);
    let terms: Vec<Complex64> = nodes
        .iter()
        .zip(&weights)
        .map(|(&x, &w)| f(c * x + d) * w)
        .collect();
    pairwise_sum_complex(&terms) * c
}

/// Dense lookup table on a uniform grid with 4-point (cubic Lagrange)
/// interpolation. Tables are built with a zero margin so evaluation
/// outside the tabulated range returns 0 exactly.
#[derive(Clone)]
pub struct Profile {
    x0: f64,
    h: f64,
    inv_h: f64,
    values: Vec<f64>,
}

impl Profile {
    /// Tabulate `f` on `[a, b]` at step `h`, padding with a zero margin.
    /// `f` must vanish at (and outside) both endpoints.
    pub fn from_fn<F: FnMut(f64) -> f64>(a: f64, b: f64, h: f64, mut f: F) -> Profile {
        let n = ((b - a) / h).round() as usize;
        let pad = 4;
        let mut values = vec![0.0; n + 1 + 2 * pad];
        for i in 0..=n {
            values[i + pad] = f(a + i as f64 * h);
        }
        Profile {
            x0: a - pad as f64 * h,
            h,
            inv_h: 1.0 / h,
            values,
        }
    }

    pub fn from_values(a: f64, h: f64, vals: &[f64]) -> Profile {
        let pad = 4;
        let mut values = vec![0.0; vals.len() + 2 * pad];
        values[pad..pad + vals.len()].copy_from_slice(vals);
        Profile {
            x0: a - pad as f64 * h,
            h,
            inv_h: 1.0 / h,
            values,
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let s = (x - self.x0) * self.inv_h;
        if s < 1.0 || s >= (self.values.len() - 3) as f64 {
            return 0.0;
        }
        let i = s.floor() as usize;
        let t = s - i as f64;
        // cubic Lagrange weights for nodes at offsets -1, 0, 1, 2
        let wm1 = -t * (t - 1.0) * (t - 2.0) / 6.0;
        let w0 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
        let w1 = -(t + 1.0) * t * (t - 2.0) / 2.0;
        let w2 = (t + 1.0) * t * (t - 1.0) / 6.0;
        wm1 * self.values[i - 1] + w0 * self.values[i] + w1 * self.values[i + 1] + w2 * self.values[i + 2]
    }

    pub fn step(&self) -> f64 {
        self.h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_exact_for_polynomials() {
        // n-point rule is exact up to degree 2n-1
        let v = gl_integrate(0.0, 1.0, 5, |x| x.powi(9));
        assert!((v - 0.1).abs() < 1e-14);
        let v = gl_integrate(-1.0, 2.0, 16, |x| (3.0 * x).sin());
        let exact = ((-3.0f64).cos() - 6.0f64.cos()) / 3.0;
        assert!((v - exact).abs() < 1e-13);
    }

    #[test]
    fn pairwise_matches_naive() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-9);
    }

    #[test]
    fn profile_interpolates_smooth_function() {
        let p = Profile::from_fn(-4.0, 4.0, 1.0 / 1024.0, |x| {
            if x.abs() >= 3.9 {
                0.0
            } else {
                (-x * x).exp() * (1.0 - (x / 3.9) * (x / 3.9)).powi(2)
            }
        });
        for i in 0..100 {
            let x = -3.0 + 0.0613 * i as f64;
            let exact = (-x * x).exp() * (1.0 - (x / 3.9) * (x / 3.9)).powi(2);
            assert!((p.eval(x) - exact).abs() < 1e-10, "x={x}");
        }
        assert_eq!(p.eval(5.0), 0.0);
        assert_eq!(p.eval(-5.0), 0.0);
    }

    #[test]
    fn stream_rngs_are_reproducible_and_distinct() {
        use rand::RngCore;
        let a1 = stream_rng(7, 0).next_u64();
        let a2 = stream_rng(7, 0).next_u64();
        let b = stream_rng(7, 1).next_u64();
        assert_eq!(a1, a2);
        assert_ne!(a1, b);
    }
}
