//! Scalar building blocks: Japanese bracket, smooth bump families,
//! Littlewood-Paley windows, symmetry operators and the exponent ledger.

use crate::error::{LgcError, Result};
use crate::util::Profile;
use num_complex::Complex64;
use num_rational::Rational64;
use std::sync::OnceLock;

/// The standard character e(z) = exp(2*pi*i*z).
#[inline]
pub fn character(z: f64) -> Complex64 {
    let (s, c) = (2.0 * std::f64::consts::PI * z).sin_cos();
    Complex64::new(c, s)
}

/// Japanese bracket (1 + x^2)^{1/2}, unchecked fast path for inner loops.
#[inline]
pub fn jap(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

/// Japanese bracket of a vector, (1 + |x|^2)^{1/2}.
#[inline]
pub fn jap_vec(xs: &[f64]) -> f64 {
    (1.0 + xs.iter().map(|x| x * x).sum::<f64>()).sqrt()
}

/// Checked Japanese bracket.
pub fn jap_bracket(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(LgcError::Domain(format!("jap_bracket: non-finite input {x}")));
    }
    Ok(jap(x))
}

/// Smooth transition s(t) = m(t)/(m(t)+m(1-t)) with m(t) = exp(-1/t) for t > 0.
/// s == 0 for t <= 0, s == 1 for t >= 1 and s(t) + s(1-t) = 1.
pub fn transition(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

const TABLE_STEP: f64 = 1.0 / 16384.0; // 2^-14

/// The bump family used throughout: plateau phi, ring psi, the square-root
/// partition-of-unity profile, and the unit-scale cutoff rho.
pub struct BumpLibrary {
    plateau_half: Profile, // plateau on [0, 2], evaluated at |x|
    trans: Vec<f64>,       // symmetric table of `transition` on [0, 1]
    trans_h: f64,
    rho_table: Profile,
}

static BUMPS: OnceLock<BumpLibrary> = OnceLock::new();

impl BumpLibrary {
    /// Shared immutable instance; safe to use from parallel workers.
    pub fn get() -> &'static BumpLibrary {
        BUMPS.get_or_init(BumpLibrary::build)
    }

    fn build() -> BumpLibrary {
        let plateau_half = Profile::from_fn(0.0, 2.0 + 8.0 * TABLE_STEP, TABLE_STEP, |x| {
            if x <= 1.0 {
                1.0
            } else if x >= 2.0 {
                0.0
            } else {
                transition(2.0 - x)
            }
        });
        // symmetric transition table: force s[i] + s[n-i] == 1 exactly so the
        // shifted squares of the unity profile sum to 1 at machine precision
        let n = 16384usize;
        let h = 1.0 / n as f64;
        let mut trans = vec![0.0; n + 1];
        for i in 0..=n / 2 {
            let v = transition(i as f64 * h);
            trans[i] = v;
            trans[n - i] = 1.0 - v;
        }
        let rho_table = Profile::from_fn(0.5, 2.0, TABLE_STEP, |t| {
            transition(4.0 * (t - 0.5)) * transition(2.0 * (2.0 - t))
        });
        BumpLibrary {
            plateau_half,
            trans,
            trans_h: h,
            rho_table,
        }
    }

    /// Symmetric interpolation of the transition table on [0, 1].
    fn trans_eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t >= 1.0 {
            return 1.0;
        }
        let s = t / self.trans_h;
        let i = s.floor() as usize;
        let tau = s - i as f64;
        let n = self.trans.len() - 1;
        let get = |k: isize| -> f64 {
            if k < 0 {
                0.0
            } else if k as usize > n {
                1.0
            } else {
                self.trans[k as usize]
            }
        };
        let i = i as isize;
        let wm1 = -tau * (tau - 1.0) * (tau - 2.0) / 6.0;
        let w0 = (tau + 1.0) * (tau - 1.0) * (tau - 2.0) / 2.0;
        let w1 = -(tau + 1.0) * tau * (tau - 2.0) / 2.0;
        let w2 = (tau + 1.0) * tau * (tau - 1.0) / 6.0;
        wm1 * get(i - 1) + w0 * get(i) + w1 * get(i + 1) + w2 * get(i + 2)
    }

    /// Even plateau: 1 on [-1,1], 0 outside (-2,2), values in [0,1].
    #[inline]
    pub fn plateau(&self, x: f64) -> f64 {
        self.plateau_half.eval(x.abs()).clamp(0.0, 1.0)
    }

    /// Ring psi = plateau - plateau(2 .); supported on 1/2 <= |x| < 2.
    #[inline]
    pub fn ring(&self, x: f64) -> f64 {
        self.plateau(x) - self.plateau(2.0 * x)
    }

    /// Profile u with 0 <= u <= 1_{[-1,1]} whose integer-shifted squares sum
    /// to one: u(x)^2 = s(1-|x|) with s the symmetric transition.
    #[inline]
    pub fn unity(&self, x: f64) -> f64 {
        let t = 1.0 - x.abs();
        if t <= 0.0 {
            0.0
        } else {
            self.trans_eval(t).max(0.0).sqrt()
        }
    }

    /// unity^2 without the square-root round trip.
    #[inline]
    pub fn unity_sq(&self, x: f64) -> f64 {
        let t = 1.0 - x.abs();
        if t <= 0.0 {
            0.0
        } else {
            self.trans_eval(t).max(0.0)
        }
    }

    /// Nonnegative unit-scale cutoff supported in (1/2, 2).
    #[inline]
    pub fn rho(&self, t: f64) -> f64 {
        self.rho_table.eval(t).max(0.0)
    }

    /// Mass of rho, used by unit-scale plumbing tests.
    pub fn rho_mass(&self) -> f64 {
        let mut total = 0.0;
        for p in 0..96 {
            let a = 0.5 + 1.5 * p as f64 / 96.0;
            let b = 0.5 + 1.5 * (p + 1) as f64 / 96.0;
            total += crate::util::gl_integrate(a, b, 16, |t| self.rho(t));
        }
        total
    }
}

/// Littlewood-Paley window phi_{k,j}: the plateau dilated to scale 2^k for
/// j = 0, the ring at scale 2^{k+j} for j >= 1.
pub fn lp_window(k: i32, j: u32, xi: f64) -> f64 {
    let b = BumpLibrary::get();
    if j == 0 {
        b.plateau(xi / (k as f64).exp2())
    } else {
        b.ring(xi / ((k as f64) + (j as f64)).exp2())
    }
}

/// Which L^p normalization a dilation uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DilationNorm {
    L1,
    L2,
    LInf,
}

impl DilationNorm {
    fn factor(self, lambda: f64) -> f64 {
        match self {
            DilationNorm::L1 => 1.0 / lambda,
            DilationNorm::L2 => 1.0 / lambda.sqrt(),
            DilationNorm::LInf => 1.0,
        }
    }
}

/// The symmetry group acting on 1-D profiles.
#[derive(Clone, Copy, Debug)]
pub enum Symmetry {
    /// Tr_x g(z) = g(z - x)
    Translate(f64),
    /// Dil^p_lambda g(z) = lambda^{-1/p} g(z/lambda)
    Dilate { lambda: f64, norm: DilationNorm },
    /// Mod_xi g(z) = e(xi z) g(z)
    Modulate(f64),
}

/// A complex profile sampled on a uniform 1-D grid.
#[derive(Clone)]
pub struct Sampled1D {
    pub x0: f64,
    pub dx: f64,
    pub data: Vec<Complex64>,
}

impl Sampled1D {
    pub fn from_fn<F: FnMut(f64) -> Complex64>(x0: f64, dx: f64, n: usize, mut f: F) -> Sampled1D {
        let data = (0..n).map(|i| f(x0 + i as f64 * dx)).collect();
        Sampled1D { x0, dx, data }
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    /// Cubic interpolation; zero outside the sampled range.
    pub fn eval(&self, x: f64) -> Complex64 {
        let s = (x - self.x0) / self.dx;
        if s < 1.0 || s >= (self.data.len() - 3) as f64 {
            return Complex64::new(0.0, 0.0);
        }
        let i = s.floor() as usize;
        let t = s - i as f64;
        let wm1 = -t * (t - 1.0) * (t - 2.0) / 6.0;
        let w0 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
        let w1 = -(t + 1.0) * t * (t - 2.0) / 2.0;
        let w2 = (t + 1.0) * t * (t - 1.0) / 6.0;
        self.data[i - 1] * wm1 + self.data[i] * w0 + self.data[i + 1] * w1 + self.data[i + 2] * w2
    }

    pub fn sup_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// L^2 norm with the grid measure dx.
    pub fn l2_norm(&self) -> f64 {
        (self.data.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.dx).sqrt()
    }
}

/// Apply a symmetry operator to a sampled profile, resampling on the same grid.
pub fn symmetry_apply(kind: Symmetry, g: &Sampled1D) -> Result<Sampled1D> {
    match kind {
        Symmetry::Translate(x) => Ok(Sampled1D {
            x0: g.x0,
            dx: g.dx,
            data: (0..g.data.len()).map(|i| g.eval(g.x(i) - x)).collect(),
        }),
        Symmetry::Dilate { lambda, norm } => {
            if !(lambda > 0.0) {
                return Err(LgcError::Domain(format!(
                    "dilation requires lambda > 0, got {lambda}"
                )));
            }
            let c = norm.factor(lambda);
            Ok(Sampled1D {
                x0: g.x0,
                dx: g.dx,
                data: (0..g.data.len())
                    .map(|i| g.eval(g.x(i) / lambda) * c)
                    .collect(),
            })
        }
        Symmetry::Modulate(xi) => Ok(Sampled1D {
            x0: g.x0,
            dx: g.dx,
            data: (0..g.data.len())
                .map(|i| g.data[i] * character(xi * g.x(i)))
                .collect(),
        }),
    }
}

/// Exact rational exponent bookkeeping for the level-set estimates.
#[derive(Clone, Debug)]
pub struct ExponentLedger {
    /// level-set decay exponent delta = delta(5) delta(39) / (8 delta(5) + 8 delta(39))
    pub delta: Rational64,
    /// dichotomy parameter epsilon = delta / 152
    pub epsilon: Rational64,
    /// weight exponent for wave packets and correlation weights
    pub n_weight: u32,
    /// reporting slot for a fitted decay exponent
    pub sigma_target: Option<f64>,
}

impl ExponentLedger {
    /// Van der Corput exponent 1/(2d+2) for a degree-d polynomial.
    pub fn delta_of_d(d: i64) -> Rational64 {
        Rational64::new(1, 2 * d + 2)
    }
}

/// Build the ledger in exact rational arithmetic.
pub fn exponent_ledger() -> ExponentLedger {
    let d5 = ExponentLedger::delta_of_d(5);
    let d39 = ExponentLedger::delta_of_d(39);
    let delta = d5 * d39 / ((d5 + d39) * Rational64::from_integer(8));
    let epsilon = delta / Rational64::from_integer(152);
    ExponentLedger {
        delta,
        epsilon,
        n_weight: 10,
        sigma_target: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn jap_bracket_basics() {
        assert_eq!(jap_bracket(0.0).unwrap(), 1.0);
        assert!((jap_bracket(3.0f64.sqrt()).unwrap() - 2.0).abs() < 1e-15);
        assert!(jap_bracket(f64::NAN).is_err());
        assert!(jap_bracket(f64::INFINITY).is_err());
    }

    #[test]
    fn jap_bracket_large_argument() {
        // compare against extended-precision evaluation of (1+x^2)^{1/2}:
        // for x = 1e6, sqrt(1+x^2) = x + 1/(2x) - 1/(8x^3) + O(x^-5)
        let x = 1e6;
        let v = jap_bracket(x).unwrap();
        assert!(v > x && v < x + 1e-6);
        let expected = x + 0.5 / x - 0.125 / (x * x * x);
        assert!((v - expected).abs() < 1e-10);
    }

    #[test]
    fn plateau_sandwich_and_even() {
        let b = BumpLibrary::get();
        let mut rng = crate::util::stream_rng(11, 0);
        for _ in 0..10_000 {
            let x: f64 = rng.gen_range(-3.0..3.0);
            let v = b.plateau(x);
            let lower = if x.abs() <= 1.0 { 1.0 } else { 0.0 };
            let upper = if x.abs() < 2.0 { 1.0 } else { 0.0 };
            assert!(v >= lower - 1e-13 && v <= upper + 1e-13, "x={x} v={v}");
            assert_eq!(v, b.plateau(-x));
        }
    }

    #[test]
    fn unity_squares_partition() {
        let b = BumpLibrary::get();
        let mut rng = crate::util::stream_rng(12, 0);
        for _ in 0..10_000 {
            let x: f64 = rng.gen_range(-10.0..10.0);
            let mut total = 0.0;
            for r in (x.floor() as i64 - 2)..=(x.floor() as i64 + 2) {
                let u = b.unity(x - r as f64);
                total += u * u;
            }
            assert!((total - 1.0).abs() < 1e-12, "x={x} total={total}");
        }
    }

    #[test]
    fn rho_support_and_sign() {
        let b = BumpLibrary::get();
        assert_eq!(b.rho(0.5), 0.0);
        assert_eq!(b.rho(2.0), 0.0);
        assert_eq!(b.rho(0.3), 0.0);
        assert_eq!(b.rho(2.5), 0.0);
        for i in 0..1000 {
            let t = 0.4 + 1.8 * i as f64 / 1000.0;
            assert!(b.rho(t) >= 0.0);
        }
        assert!(b.rho(1.0) > 0.9);
    }

    #[test]
    fn lp_window_values() {
        assert!((lp_window(0, 0, 0.0) - 1.0).abs() < 1e-15);
        assert_eq!(lp_window(0, 1, 0.0), 0.0);
        assert_eq!(lp_window(0, 3, 0.0), 0.0);
        for i in 0..200 {
            let xi = -8.0 + i as f64 * 0.08;
            let v0 = lp_window(0, 0, xi);
            assert!((0.0..=1.0).contains(&v0));
            let v1 = lp_window(0, 2, xi);
            assert!((-1.0..=1.0).contains(&v1));
        }
    }

    #[test]
    fn lp_window_telescopes() {
        let b = BumpLibrary::get();
        let j_top = 6u32;
        let mut rng = crate::util::stream_rng(13, 0);
        for _ in 0..2000 {
            let xi: f64 = rng.gen_range(-128.0..128.0);
            let mut total = b.plateau(xi);
            for j in 1..=j_top {
                total += lp_window(0, j, xi);
            }
            let expect = b.plateau(xi / (j_top as f64).exp2());
            assert!((total - expect).abs() < 1e-12, "xi={xi}");
        }
    }

    #[test]
    fn symmetry_identities() {
        let g = Sampled1D::from_fn(-8.0, 1.0 / 256.0, 4096, |x| {
            Complex64::new((-x * x).exp(), 0.0)
        });
        let t0 = symmetry_apply(Symmetry::Translate(0.0), &g).unwrap();
        let d1 = symmetry_apply(
            Symmetry::Dilate {
                lambda: 1.0,
                norm: DilationNorm::L2,
            },
            &g,
        )
        .unwrap();
        for i in 100..4000 {
            assert!((t0.data[i] - g.data[i]).norm() < 1e-10);
            assert!((d1.data[i] - g.data[i]).norm() < 1e-10);
        }
        assert!(symmetry_apply(
            Symmetry::Dilate {
                lambda: -1.0,
                norm: DilationNorm::L2
            },
            &g
        )
        .is_err());
    }

    #[test]
    fn dilation_norms() {
        // Dil^2_4 of a unit-mass profile halves the sup norm, preserves L^2
        let g = Sampled1D::from_fn(-16.0, 1.0 / 256.0, 8192, |x| {
            Complex64::new((-x * x).exp() / std::f64::consts::PI.sqrt(), 0.0)
        });
        let d = symmetry_apply(
            Symmetry::Dilate {
                lambda: 4.0,
                norm: DilationNorm::L2,
            },
            &g,
        )
        .unwrap();
        assert!((d.sup_norm() - 0.5 * g.sup_norm()).abs() < 1e-10);
        assert!((d.l2_norm() - g.l2_norm()).abs() < 1e-10);
    }

    #[test]
    fn modulation_is_exact() {
        let g = Sampled1D::from_fn(-4.0, 1.0 / 128.0, 1024, |x| {
            Complex64::new((-x * x).exp(), 0.0)
        });
        let m = symmetry_apply(Symmetry::Modulate(3.0), &g).unwrap();
        for i in 0..1024 {
            let x = g.x(i);
            let expect = g.data[i] * character(3.0 * x);
            assert_eq!(m.data[i], expect);
        }
    }

    #[test]
    fn ledger_exact_values() {
        let led = exponent_ledger();
        assert_eq!(ExponentLedger::delta_of_d(5), Rational64::new(1, 12));
        assert_eq!(ExponentLedger::delta_of_d(39), Rational64::new(1, 80));
        assert_eq!(led.delta, Rational64::new(1, 736));
        assert_eq!(led.epsilon, Rational64::new(1, 111_872));
        assert!(led.n_weight >= 10);
    }
}
