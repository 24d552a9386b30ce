//! The maximally modulated singular integral along the moment curve, its
//! oscillatory multiplier, and the three-way frequency decomposition into
//! low / high-nonstationary / high-stationary parts.

use crate::error::{LgcError, Result};
use crate::fields::{spectral_project, ModeField, SampledField2D};
use crate::numerics::{character, lp_window, BumpLibrary};
use crate::util::{gauss_legendre, pairwise_sum_complex};
use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::HashMap;

/// Exponents of the curve t -> (t^a1, t^a2, t^a3).
#[derive(Clone, Copy, Debug)]
pub struct CurveExponents {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub sign_convention: SignConvention,
}

/// Meaning of t^alpha for t < 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignConvention {
    /// |t|^alpha
    Absolute,
    /// sgn(t) |t|^alpha (preserves odd-kernel cancellation)
    Signed,
}

impl CurveExponents {
    pub fn new(a1: f64, a2: f64, a3: f64, sign_convention: SignConvention) -> Result<Self> {
        if !(a1 > 0.0 && a2 > 0.0 && a3 > 0.0) {
            return Err(LgcError::Domain("curve exponents must be positive".into()));
        }
        if (a1 - a2).abs() <= 1e-9 || (a1 - a3).abs() <= 1e-9 || (a2 - a3).abs() <= 1e-9 {
            return Err(LgcError::Config("resonant configuration unsupported".into()));
        }
        Ok(CurveExponents { a1, a2, a3, sign_convention })
    }

    /// the moment curve (1, 2, 3)
    pub fn moment() -> Self {
        CurveExponents { a1: 1.0, a2: 2.0, a3: 3.0, sign_convention: SignConvention::Signed }
    }

    #[inline]
    pub fn power(&self, t: f64, alpha: f64) -> f64 {
        match self.sign_convention {
            SignConvention::Absolute => t.abs().powf(alpha),
            SignConvention::Signed => t.signum() * t.abs().powf(alpha),
        }
    }
}

/// Frequency index (k; j1, j2, j3).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FreqIndex {
    pub k: i32,
    pub j: (u32, u32, u32),
}

impl FreqIndex {
    pub fn j_sup(&self) -> u32 {
        self.j.0.max(self.j.1).max(self.j.2)
    }
}

/// Index classes of the three-way decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IndexClass {
    /// j3 = 0
    J0,
    /// non-stationary: the phase derivative stays large on the window support
    Jns,
    /// stationary remainder
    Js,
}

/// Threshold constant in the non-stationary test 2^{|j|_inf} <= C (1 + inf |phase'|).
pub const C_CLASSIFY: f64 = 8.0;

fn support_interval(j: u32) -> (f64, f64) {
    // closed support of the window factor in normalized frequency; for j >= 1
    // this is the positive half, the caller adds the mirror image
    if j == 0 {
        (-2.0, 2.0)
    } else {
        let lo = ((j - 1) as f64).exp2();
        let hi = ((j + 1) as f64).exp2();
        (lo, hi)
    }
}

fn interval_dist(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    if a1 < b0 {
        b0 - a1
    } else if b1 < a0 {
        a0 - b1
    } else {
        0.0
    }
}

/// inf over the window support of |3 a t^2 - 2 eta t - xi|. The expression is
/// linear in (xi, eta), so for fixed (a, t) the infimum over their support
/// boxes is a distance between intervals in closed form; (a, t) is scanned at
/// resolution 2^-6 per normalized coordinate and polished by local descent.
fn phase_derivative_inf(j: (u32, u32, u32)) -> f64 {
    let (j1, j2, j3) = j;
    let xi_iv = support_interval(j1);
    let eta_iv = support_interval(j2);
    let xi_two_sided = j1 >= 1;
    let eta_two_sided = j2 >= 1;
    let a_lo = (j3 as f64).exp2();
    let a_hi = ((j3 + 1) as f64).exp2();

    let eval = |a: f64, t: f64| -> f64 {
        let base = 3.0 * a * t * t;
        let (elo, ehi) = eta_iv;
        let mut segs: [(f64, f64); 2] = [(0.0, 0.0); 2];
        let mut nseg = 0;
        let mut push_seg = |e0: f64, e1: f64| {
            let v0 = base - 2.0 * e0 * t;
            let v1 = base - 2.0 * e1 * t;
            segs[nseg] = (v0.min(v1), v0.max(v1));
            nseg += 1;
        };
        push_seg(elo, ehi);
        if eta_two_sided {
            push_seg(-ehi, -elo);
        }
        let mut best = f64::INFINITY;
        for &(lo, hi) in &segs[..nseg] {
            let d = if xi_two_sided {
                let (xlo, xhi) = xi_iv;
                interval_dist(lo, hi, xlo, xhi).min(interval_dist(lo, hi, -xhi, -xlo))
            } else {
                interval_dist(lo, hi, xi_iv.0, xi_iv.1)
            };
            best = best.min(d);
        }
        best
    };

    let steps = 1 << 6;
    let mut best = f64::INFINITY;
    let mut best_at = (a_lo, 1.0);
    for ai in 0..=steps {
        let a = a_lo + (a_hi - a_lo) * ai as f64 / steps as f64;
        for sign_a in [1.0f64, -1.0] {
            for ti in 0..=steps {
                let tt = 0.5 + 1.5 * ti as f64 / steps as f64;
                for sign_t in [1.0f64, -1.0] {
                    let v = eval(sign_a * a, sign_t * tt);
                    if v < best {
                        best = v;
                        best_at = (sign_a * a, sign_t * tt);
                    }
                }
            }
        }
    }
    let (mut a, mut t) = best_at;
    let mut da = (a_hi - a_lo) / steps as f64;
    let mut dt = 1.5 / steps as f64;
    for _ in 0..40 {
        let mut improved = false;
        for (na, nt) in [(a + da, t), (a - da, t), (a, t + dt), (a, t - dt)] {
            let na_c = na.signum() * na.abs().clamp(a_lo, a_hi);
            let nt_c = nt.signum() * nt.abs().clamp(0.5, 2.0);
            let v = eval(na_c, nt_c);
            if v < best {
                best = v;
                a = na_c;
                t = nt_c;
                improved = true;
            }
        }
        if !improved {
            da *= 0.5;
            dt *= 0.5;
        }
    }
    best
}

/// Classify a frequency index into J0 / Jns / Js.
pub fn classify_index(j: (u32, u32, u32)) -> IndexClass {
    if j.2 == 0 {
        return IndexClass::J0;
    }
    let j_sup = j.0.max(j.1).max(j.2);
    let cost = (j_sup as f64).exp2();
    let inf = phase_derivative_inf(j);
    if cost <= C_CLASSIFY * (1.0 + inf) {
        IndexClass::Jns
    } else {
        IndexClass::Js
    }
}

/// Adaptive Gauss-Legendre evaluation of an oscillatory t-integral over
/// [1/2, 2] with the +t/-t contributions paired exactly. `term` produces the
/// paired integrand value at t > 0. Panel counts double until the relative
/// change drops below 1e-9.
fn adaptive_paired_integral(
    max_phase_derivative: f64,
    term: &(dyn Fn(f64) -> Complex64 + Sync),
    context: &str,
) -> Result<Complex64> {
    let mut panels = ((8.0 * 1.5 * max_phase_derivative / 16.0).ceil() as usize).clamp(4, 1 << 22);
    let (nodes, weights) = gauss_legendre(16);
    let mut last: Option<Complex64> = None;
    for _ in 0..14 {
        let h = 1.5 / panels as f64;
        let partials: Vec<Complex64> = (0..panels)
            .into_par_iter()
            .map(|p| {
                let t0 = 0.5 + p as f64 * h;
                let mut acc = Complex64::new(0.0, 0.0);
                for (x, w) in nodes.iter().zip(&weights) {
                    let t = t0 + 0.5 * h * (x + 1.0);
                    acc += term(t) * (w * 0.5 * h);
                }
                acc
            })
            .collect();
        let total = pairwise_sum_complex(&partials);
        if let Some(prev) = last {
            if (total - prev).norm() <= 1e-9 * total.norm().max(1e-12) {
                return Ok(total);
            }
        }
        last = Some(total);
        panels *= 2;
    }
    Err(LgcError::Accuracy {
        context: format!("oscillatory integral did not converge ({context})"),
        last_estimate: last.map(|z| z.norm()).unwrap_or(0.0),
    })
}

/// The multiplier symbol m_j(xi, eta, a) for j3 >= 1: window factors times
/// the oscillatory integral of e(a t^3 - eta t^2 - xi t) psi(t)/t.
pub fn symbol_m(j: (u32, u32, u32), xi: f64, eta: f64, a: f64) -> Result<Complex64> {
    if j.2 == 0 {
        return Err(LgcError::Domain(
            "symbol_m requires j3 >= 1 (j3 = 0 is the low-frequency convention)".into(),
        ));
    }
    if !(xi.is_finite() && eta.is_finite() && a.is_finite()) {
        return Err(LgcError::Domain("symbol_m: non-finite argument".into()));
    }
    let w1 = lp_window(0, j.0, xi);
    let w2 = lp_window(0, j.1, eta);
    let lo = (j.2 as f64).exp2();
    let hi = ((j.2 + 1) as f64).exp2();
    let ind = if a >= lo && a < hi { 1.0 } else { 0.0 };
    let window = w1 * w2 * ind;
    if window == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let integral = ring_kernel_integral(xi, eta, a)?;
    Ok(integral * window)
}

/// Bare paired integral of e(a t^3 - eta t^2 - xi t) psi(t)/t over the ring
/// support (no window factors); exposed for the odd-cancellation tests.
pub fn ring_kernel_integral(xi: f64, eta: f64, a: f64) -> Result<Complex64> {
    let b = BumpLibrary::get();
    let dmax = 12.0 * a.abs() + 4.0 * eta.abs() + xi.abs();
    adaptive_paired_integral(
        dmax,
        &move |t: f64| {
            let wt = b.ring(t) / t;
            if wt == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let ph_p = a * t * t * t - eta * t * t - xi * t;
            let ph_m = -a * t * t * t - eta * t * t + xi * t;
            (character(ph_p) - character(ph_m)) * wt
        },
        &format!("ring kernel xi={xi} eta={eta} a={a}"),
    )
}

/// Unit-scale symbol int e(a t^3 - eta t^2 - xi t) rho(t) dt (rho one-sided).
pub fn unit_scale_symbol(xi: f64, eta: f64, a: f64) -> Result<Complex64> {
    let b = BumpLibrary::get();
    let dmax = 12.0 * a.abs() + 4.0 * eta.abs() + xi.abs();
    adaptive_paired_integral(
        dmax,
        &move |t: f64| {
            let wt = b.rho(t);
            if wt == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            character(a * t * t * t - eta * t * t - xi * t) * wt
        },
        &format!("unit-scale symbol xi={xi} eta={eta} a={a}"),
    )
}

/// Quadrature panels on [1/2, 2] aligned with the loci where (x - t) or
/// (y - t^2) crosses grid lines for on-node (x, y): t = m hx and t = sqrt(m hy).
/// The bilinearly interpolated integrand is smooth inside each panel, so
/// composite Gauss-Legendre converges at full order. Panels are further split
/// to keep at least 8 nodes per oscillation of the cubic phase.
fn unit_scale_panels(g: &crate::fields::Grid2D, sup_a: f64) -> Vec<(f64, f64)> {
    let mut cuts = vec![0.5, 2.0];
    let mut m = (0.5 / g.hx).ceil() as i64;
    while (m as f64) * g.hx < 2.0 {
        cuts.push(m as f64 * g.hx);
        m += 1;
    }
    let mut m = (0.25 / g.hy).ceil() as i64;
    while ((m as f64) * g.hy).sqrt() < 2.0 {
        let t = ((m as f64) * g.hy).sqrt();
        if t > 0.5 {
            cuts.push(t);
        }
        m += 1;
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
    // oscillation-limited panel width: phase derivative of a t^3 is <= 12 a,
    // 16 GL nodes cover 2 oscillations at 8 nodes per oscillation
    let max_w = if sup_a > 0.0 { (2.0 / (12.0 * sup_a)).min(1.5) } else { 1.5 };
    let mut panels = vec![];
    for w in cuts.windows(2) {
        let (a0, b0) = (w[0], w[1]);
        if b0 - a0 < 1e-13 {
            continue;
        }
        let parts = ((b0 - a0) / max_w).ceil() as usize;
        let h = (b0 - a0) / parts as f64;
        for p in 0..parts {
            panels.push((a0 + p as f64 * h, a0 + (p + 1) as f64 * h));
        }
    }
    panels
}

/// Unit-scale operator C^(a) f(x,y) = int f(x-t, y-t^2) e(a(x,y) t^3) rho(t) dt
/// over supp rho = (1/2, 2), by composite Gauss-Legendre on grid-kink-aligned
/// panels with at least 8 nodes per oscillation of the cubic phase.
pub fn unit_scale_apply(
    f: &SampledField2D,
    a: &SampledField2D,
    rho: &(dyn Fn(f64) -> f64 + Sync),
) -> Result<SampledField2D> {
    if f.grid != a.grid {
        return Err(LgcError::Config("f and a must share a grid".into()));
    }
    let g = f.grid.clone();
    let sup_a = a.data.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
    let panels = unit_scale_panels(&g, sup_a);
    if panels.len() > (1 << 22) {
        return Err(LgcError::Resource(format!(
            "unit-scale quadrature would need {} panels (sup|a| = {sup_a})",
            panels.len()
        )));
    }
    let (nodes, weights) = gauss_legendre(16);
    let nx = g.nx;
    let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
    out.par_chunks_mut(nx).enumerate().for_each(|(jrow, row)| {
        let y = g.y(jrow);
        for (i, slot) in row.iter_mut().enumerate() {
            let x = g.x(i);
            let av = a.data[jrow * nx + i].re;
            let mut terms = Vec::with_capacity(panels.len());
            for &(t0, t1) in &panels {
                let c = 0.5 * (t1 - t0);
                let d = 0.5 * (t1 + t0);
                let mut acc = Complex64::new(0.0, 0.0);
                for (xn, wn) in nodes.iter().zip(&weights) {
                    let t = c * xn + d;
                    let w = rho(t);
                    if w != 0.0 {
                        let v = f.sample_bilinear(x - t, y - t * t);
                        acc += v * character(av * t * t * t) * (w * wn * c);
                    }
                }
                terms.push(acc);
            }
            *slot = pairwise_sum_complex(&terms);
        }
    });
    Ok(SampledField2D { grid: g, data: out })
}

/// A set E resolved on a cell lattice, with a piecewise-constant linearizer
/// value per cell. Cell (ix, iy) covers [ix dx, (ix+1) dx) x [iy dy, (iy+1) dy).
#[derive(Clone, Debug)]
pub struct CellSet {
    pub dx: f64,
    pub dy: f64,
    pub cells: Vec<(i64, i64, f64)>,
}

impl CellSet {
    pub fn area(&self) -> f64 {
        self.cells.len() as f64 * self.dx * self.dy
    }
}

/// int_a^b e(xi x) dx in closed form.
pub fn character_integral(xi: f64, a: f64, b: f64) -> Complex64 {
    if xi.abs() < 1e-14 {
        return Complex64::new(b - a, 0.0);
    }
    let tp = 2.0 * std::f64::consts::PI * xi;
    (character(xi * b) - character(xi * a)) / Complex64::new(0.0, tp)
}

/// Pairing <C^(a) f, 1_E> for a mode-list f and cell-resolved E: exact in
/// (x, y) (closed-form cell integrals of characters) and adaptive in t, with
/// one oscillatory symbol evaluation per (mode, distinct a-value). This is
/// the evaluator the decay experiments run on; it agrees with the grid path
/// on resolvable instances.
pub fn pair_unit_scale_modes(f: &ModeField, e_set: &CellSet) -> Result<Complex64> {
    let mut bands: HashMap<u64, (f64, Vec<(i64, i64)>)> = HashMap::new();
    for &(ix, iy, av) in &e_set.cells {
        bands.entry(av.to_bits()).or_insert_with(|| (av, vec![])).1.push((ix, iy));
    }
    let mut band_list: Vec<(f64, Vec<(i64, i64)>)> = bands.into_values().collect();
    band_list.sort_by(|p, q| p.0.total_cmp(&q.0));

    let mut total_parts: Vec<Complex64> = Vec::new();
    for (av, cells) in &band_list {
        let per_mode: Vec<Complex64> = f
            .modes
            .iter()
            .map(|&(kx, ky, c)| {
                let (xi, eta) = f.freq(kx, ky);
                let sym = unit_scale_symbol(xi, eta, *av)?;
                let cell_terms: Vec<Complex64> = cells
                    .iter()
                    .map(|&(ix, iy)| {
                        let x0 = ix as f64 * e_set.dx;
                        let y0 = iy as f64 * e_set.dy;
                        character_integral(xi, x0, x0 + e_set.dx)
                            * character_integral(eta, y0, y0 + e_set.dy)
                    })
                    .collect();
                Ok(c * sym * pairwise_sum_complex(&cell_terms))
            })
            .collect::<Result<Vec<_>>>()?;
        total_parts.push(pairwise_sum_complex(&per_mode));
    }
    Ok(pairwise_sum_complex(&total_parts))
}

/// Which part of the decomposition to apply.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecompositionPart {
    Low,
    HighNonStationary,
    HighStationary,
}

/// One dyadic-scale piece C_{j,k} f: a-indicator times the quadrature of the
/// projected field against e(a t^3) psi(2^k t)/t with exact ±t pairing.
/// For j3 = 0 the preimage convention is |a| in [0, 2^{3k+1}).
pub fn single_scale_piece(
    f: &SampledField2D,
    a: &SampledField2D,
    j: (u32, u32, u32),
    k: i32,
) -> Result<SampledField2D> {
    if f.grid != a.grid {
        return Err(LgcError::Config("f and a must share a grid".into()));
    }
    let projected = spectral_project(f, k, j.0, j.1)?;
    let g = f.grid.clone();
    let nx = g.nx;
    let scale = (k as f64).exp2();
    let t_lo = 0.5 / scale;
    let t_hi = 2.0 / scale;
    let ind_lo = if j.2 == 0 { 0.0 } else { ((3 * k) as f64 + j.2 as f64).exp2() };
    let ind_hi = ((3 * k) as f64 + j.2 as f64 + 1.0).exp2();
    // oscillations of a t^3 over the shell are < |a| t_hi^3 <= 2^{j3+4}
    let nodes = ((64.0 + 8.0 * ((j.2 as f64) + 4.0).exp2()).min((1 << 20) as f64)) as usize;
    let b = BumpLibrary::get();
    let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
    out.par_chunks_mut(nx).enumerate().for_each(|(jrow, row)| {
        let y = g.y(jrow);
        for (i, slot) in row.iter_mut().enumerate() {
            let av = a.data[jrow * nx + i].re;
            let fire = if j.2 == 0 {
                av.abs() < ind_hi
            } else {
                av.abs() >= ind_lo && av.abs() < ind_hi
            };
            if !fire {
                continue;
            }
            let x = g.x(i);
            let h = (t_hi - t_lo) / nodes as f64;
            let mut terms = Vec::with_capacity(nodes);
            for m in 0..nodes {
                let t = t_lo + (m as f64 + 0.5) * h;
                let w = b.ring(scale * t);
                if w == 0.0 {
                    terms.push(Complex64::new(0.0, 0.0));
                    continue;
                }
                let plus = projected.sample_bilinear(x - t, y - t * t);
                let minus = projected.sample_bilinear(x + t, y - t * t);
                terms.push(
                    (plus * character(av * t * t * t) - minus * character(-av * t * t * t))
                        * (w * h / t),
                );
            }
            *slot = pairwise_sum_complex(&terms);
        }
    });
    Ok(SampledField2D { grid: g, data: out })
}

/// Sum of C_{j,k} f over the selected index class, with |j|_inf <= j_cap and
/// k in k_range.
pub fn decompose_apply(
    f: &SampledField2D,
    a: &SampledField2D,
    part: DecompositionPart,
    k_range: std::ops::RangeInclusive<i32>,
    j_cap: u32,
) -> Result<SampledField2D> {
    let mut out = SampledField2D::zeros(f.grid.clone());
    for k in k_range {
        for j1 in 0..=j_cap {
            for j2 in 0..=j_cap {
                for j3 in 0..=j_cap {
                    let class = classify_index((j1, j2, j3));
                    let selected = match part {
                        DecompositionPart::Low => class == IndexClass::J0,
                        DecompositionPart::HighNonStationary => class == IndexClass::Jns,
                        DecompositionPart::HighStationary => class == IndexClass::Js,
                    };
                    if !selected {
                        continue;
                    }
                    let piece = single_scale_piece(f, a, (j1, j2, j3), k)?;
                    for (o, p) in out.data.iter_mut().zip(piece.data.iter()) {
                        *o += p;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// The full truncated operator at scales k in k_range without frequency
/// projections: sum_k int f(x-t, y-t^2) e(a t^3) psi(2^k t) dt/t.
/// Reassembly oracle for the part sums.
pub fn truncated_operator_direct(
    f: &SampledField2D,
    a: &SampledField2D,
    k_range: std::ops::RangeInclusive<i32>,
) -> Result<SampledField2D> {
    if f.grid != a.grid {
        return Err(LgcError::Config("f and a must share a grid".into()));
    }
    let g = f.grid.clone();
    let nx = g.nx;
    let ks: Vec<i32> = k_range.collect();
    let b = BumpLibrary::get();
    let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
    out.par_chunks_mut(nx).enumerate().for_each(|(jrow, row)| {
        let y = g.y(jrow);
        for (i, slot) in row.iter_mut().enumerate() {
            let x = g.x(i);
            let av = a.data[jrow * nx + i].re;
            let mut acc = Complex64::new(0.0, 0.0);
            for &k in &ks {
                let scale = (k as f64).exp2();
                let t_lo = 0.5 / scale;
                let t_hi = 2.0 / scale;
                let osc = av.abs() * t_hi * t_hi * t_hi;
                let count = ((64.0 + 8.0 * osc).min((1 << 20) as f64)) as usize;
                let h = (t_hi - t_lo) / count as f64;
                for m in 0..count {
                    let t = t_lo + (m as f64 + 0.5) * h;
                    let w = b.ring(scale * t);
                    if w == 0.0 {
                        continue;
                    }
                    let plus = f.sample_bilinear(x - t, y - t * t);
                    let minus = f.sample_bilinear(x + t, y - t * t);
                    acc += (plus * character(av * t * t * t)
                        - minus * character(-av * t * t * t))
                        * (w * h / t);
                }
            }
            *slot = acc;
        }
    });
    Ok(SampledField2D { grid: g, data: out })
}

/// Maximal transform along the curve: pointwise max over a in a_grid of
/// |p.v. int f(x - t^a1, y - t^a2) e(a t^a3) dt/t| with exact ±t pairing and
/// dyadic truncation determined by the grid.
pub fn carleson_radon_apply(
    f: &SampledField2D,
    alpha: &CurveExponents,
    a_grid: &[f64],
) -> Result<SampledField2D> {
    if a_grid.is_empty() || a_grid.iter().any(|a| !a.is_finite()) {
        return Err(LgcError::Domain("a_grid must be nonempty and finite".into()));
    }
    let g = f.grid.clone();
    let nx = g.nx;
    let t_min = g.hx;
    let t_max = 0.5 * g.lx();
    let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
    out.par_chunks_mut(nx).enumerate().for_each(|(jrow, row)| {
        let y = g.y(jrow);
        for (i, slot) in row.iter_mut().enumerate() {
            let x = g.x(i);
            let mut best = 0.0f64;
            for &av in a_grid {
                let mut acc = Complex64::new(0.0, 0.0);
                let mut lo = t_min;
                while lo < t_max {
                    let hi = (2.0 * lo).min(t_max);
                    let osc = av.abs() * hi.powf(alpha.a3);
                    let count = ((16.0 + 8.0 * osc).min((1 << 16) as f64)) as usize;
                    let h = (hi - lo) / count as f64;
                    for m in 0..count {
                        let t = lo + (m as f64 + 0.5) * h;
                        let plus = f.sample_bilinear(
                            x - alpha.power(t, alpha.a1),
                            y - alpha.power(t, alpha.a2),
                        ) * character(av * alpha.power(t, alpha.a3));
                        let minus = f.sample_bilinear(
                            x - alpha.power(-t, alpha.a1),
                            y - alpha.power(-t, alpha.a2),
                        ) * character(av * alpha.power(-t, alpha.a3));
                        acc += (plus - minus) * (h / t);
                    }
                    lo = hi;
                }
                best = best.max(acc.norm());
            }
            *slot = Complex64::new(best, 0.0);
        }
    });
    Ok(SampledField2D { grid: g, data: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid2D;
    use crate::util::gl_integrate_complex;

    #[test]
    fn symbol_window_annihilation() {
        let v = symbol_m((0, 0, 3), 0.5, 0.5, 4.0).unwrap();
        assert_eq!(v, Complex64::new(0.0, 0.0));
        assert!(symbol_m((0, 0, 0), 0.0, 0.0, 0.0).is_err());
        assert!(symbol_m((0, 0, 1), f64::NAN, 0.0, 2.0).is_err());
    }

    #[test]
    fn symbol_odd_kernel_cancellation() {
        // xi = eta = 0: at a = 0 the paired odd kernel cancels exactly;
        // for small a the integral is linear in a with slope 4 pi int t^2 psi
        let v0 = ring_kernel_integral(0.0, 0.0, 0.0).unwrap();
        assert_eq!(v0, Complex64::new(0.0, 0.0));
        let v6 = ring_kernel_integral(0.0, 0.0, 1e-6).unwrap();
        assert!(v6.norm() < 1e-4, "norm = {}", v6.norm());
        let v8 = ring_kernel_integral(0.0, 0.0, 1e-8).unwrap();
        assert!(v8.norm() < 1e-6, "norm = {}", v8.norm());
        // linear scaling in a
        assert!((v6.norm() / v8.norm() - 100.0).abs() < 1.0);
    }

    #[test]
    fn symbol_matches_high_resolution_oracle() {
        let j = (4u32, 0u32, 3u32);
        let (xi, eta, a) = (20.0, 0.3, 9.0);
        let got = symbol_m(j, xi, eta, a).unwrap();
        let b = BumpLibrary::get();
        let f = |t: f64| {
            let w = b.ring(t);
            if w == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                character(a * t * t * t - eta * t * t - xi * t) * (w / t)
            }
        };
        let pos = gl_integrate_complex(0.5, 2.0, 4000, f);
        let neg = gl_integrate_complex(-2.0, -0.5, 4000, f);
        let window = lp_window(0, j.0, xi) * lp_window(0, j.1, eta);
        let oracle = (pos + neg) * window;
        assert!(
            (got - oracle).norm() < 1e-8 * oracle.norm().max(1e-8),
            "got {got} oracle {oracle}"
        );
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify_index((5, 3, 0)), IndexClass::J0);
        assert_eq!(classify_index((0, 0, 12)), IndexClass::Jns);
        assert_eq!(classify_index((12, 11, 10)), IndexClass::Js);
    }

    #[test]
    fn classify_root_exists_for_balanced_triple() {
        // the root for (12, 11, 10): a = 2^10, t = 2, eta = 2^11 gives
        // xi = 12a - 4 eta = 2^12, inside the ring support for j1 = 12
        let a = (10.0f64).exp2();
        let t = 2.0;
        let eta = (11.0f64).exp2();
        let xi = 3.0 * a * t * t - 2.0 * eta * t;
        assert_eq!(xi, (12.0f64).exp2());
        assert!(lp_window(0, 12, xi) > 0.0);
    }

    #[test]
    fn unit_scale_zero_and_mass() {
        let g = Grid2D::unit(64);
        let z = SampledField2D::zeros(g.clone());
        let a = SampledField2D::zeros(g.clone());
        let b = BumpLibrary::get();
        let out = unit_scale_apply(&z, &a, &|t| b.rho(t)).unwrap();
        assert!(out.sup_norm() == 0.0);

        let one = SampledField2D::constant(g.clone(), Complex64::new(1.0, 0.0));
        let out = unit_scale_apply(&one, &a, &|t| b.rho(t)).unwrap();
        let mass = b.rho_mass();
        for z in &out.data {
            assert!((z.re - mass).abs() < 1e-8 && z.im.abs() < 1e-12);
        }
    }

    #[test]
    fn unit_scale_matches_fine_oracle_on_wave() {
        let g = Grid2D::unit(128);
        let lam = 24.0;
        let f = SampledField2D::from_fn(g.clone(), |x, _y| character(lam * x));
        let a = SampledField2D::constant(g.clone(), Complex64::new(lam, 0.0));
        let b = BumpLibrary::get();
        let out = unit_scale_apply(&f, &a, &|t| b.rho(t)).unwrap();
        let (ix, iy) = (31usize, 77usize);
        let (x, y) = (g.x(ix), g.y(iy));
        // oracle: same aligned panels, each split 10x, GL-16 per sub-panel
        let mut acc = Complex64::new(0.0, 0.0);
        for (t0, t1) in unit_scale_panels(&g, lam) {
            for sp in 0..10 {
                let a0 = t0 + (t1 - t0) * sp as f64 / 10.0;
                let b0 = t0 + (t1 - t0) * (sp + 1) as f64 / 10.0;
                acc += gl_integrate_complex(a0, b0, 16, |t| {
                    let w = b.rho(t);
                    if w == 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        f.sample_bilinear(x - t, y - t * t) * character(lam * t * t * t) * w
                    }
                });
            }
        }
        let got = out.data[iy * 128 + ix];
        assert!(
            (got - acc).norm() <= 1e-6 * acc.norm().max(1e-9),
            "got {got} oracle {acc}"
        );
    }

    #[test]
    fn carleson_radon_basics() {
        let g = Grid2D::unit(64);
        let z = SampledField2D::zeros(g.clone());
        let alpha = CurveExponents::moment();
        let out = carleson_radon_apply(&z, &alpha, &[0.0, 2.0]).unwrap();
        assert!(out.sup_norm() == 0.0);

        assert!(CurveExponents::new(1.0, 2.0, 2.0, SignConvention::Signed).is_err());
        assert!(carleson_radon_apply(&z, &alpha, &[]).is_err());

        let f = SampledField2D::from_fn(g.clone(), |x, y| {
            Complex64::new(
                (-((x - 0.5) / 0.2).powi(2) - ((y - 0.5) / 0.2).powi(2)).exp(),
                0.0,
            )
        });
        let small = carleson_radon_apply(&f, &alpha, &[0.0, 4.0]).unwrap();
        let large = carleson_radon_apply(&f, &alpha, &[0.0, 2.0, 4.0, 8.0]).unwrap();
        for i in 0..small.data.len() {
            assert!(large.data[i].re >= small.data[i].re - 1e-12);
        }
    }

    #[test]
    fn carleson_radon_a_zero_dominated_by_hilbert_star() {
        // a_grid = {0}, moment curve: the full-range pv value is one prefix
        // difference of the shell decomposition, so the maximally truncated
        // transform dominates it
        let g = Grid2D::unit(64);
        let f = SampledField2D::from_fn(g.clone(), |x, y| {
            let w = (-((x - 0.5) / 0.15).powi(2) - ((y - 0.5) / 0.15).powi(2)).exp();
            Complex64::new(w * (x - 0.5), 0.0)
        });
        let alpha = CurveExponents::moment();
        let cr = carleson_radon_apply(&f, &alpha, &[0.0]).unwrap();
        let hs = crate::fields::hilbert_star_parabola(&f);
        for idx in [(32usize, 40usize), (20, 20), (40, 28)] {
            let v_cr = cr.data[idx.1 * 64 + idx.0].re;
            let v_hs = hs.data[idx.1 * 64 + idx.0].re;
            assert!(v_cr <= v_hs * (1.0 + 1e-3) + 1e-6, "cr {v_cr} hs {v_hs}");
        }
    }

    #[test]
    fn character_integral_closed_form() {
        let v = character_integral(0.0, 0.25, 0.75);
        assert!((v.re - 0.5).abs() < 1e-15 && v.im.abs() < 1e-15);
        let xi = 3.0;
        let got = character_integral(xi, 0.1, 0.9);
        let oracle = gl_integrate_complex(0.1, 0.9, 64, |x| character(xi * x));
        assert!((got - oracle).norm() < 1e-12);
    }

    #[test]
    fn mode_pairing_matches_direct_quadrature() {
        // the semi-analytic pairing (symbol x closed-form cell integrals) is
        // cross-checked against direct t-quadrature of the true mode field
        // and a Riemann x,y-sum over the set, with no bilinear resampling
        let mf = ModeField {
            lx: 1.0,
            ly: 1.0,
            modes: vec![
                (3, 2, Complex64::new(0.6, 0.2)),
                (-2, 4, Complex64::new(-0.3, 0.4)),
            ],
        };
        let aval = 4.5;
        let b = BumpLibrary::get();
        let direct_cf = |x: f64, y: f64| -> Complex64 {
            let mut acc = Complex64::new(0.0, 0.0);
            for p in 0..256 {
                let a0 = 0.5 + 1.5 * p as f64 / 256.0;
                let b0 = 0.5 + 1.5 * (p + 1) as f64 / 256.0;
                acc += gl_integrate_complex(a0, b0, 16, |t| {
                    let w = b.rho(t);
                    if w == 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        mf.eval(x - t, y - t * t) * character(aval * t * t * t) * w
                    }
                });
            }
            acc
        };
        // pointwise: sum_j c_j e(xi x + eta y) sym(xi, eta, a)
        for (x, y) in [(0.3, 0.45), (0.71, 0.2), (0.05, 0.9)] {
            let mut analytic_pt = Complex64::new(0.0, 0.0);
            for &(kx, ky, c) in &mf.modes {
                let (xi, eta) = mf.freq(kx, ky);
                analytic_pt += c
                    * character(xi * x + eta * y)
                    * unit_scale_symbol(xi, eta, aval).unwrap();
            }
            let direct = direct_cf(x, y);
            assert!(
                (analytic_pt - direct).norm() < 1e-8 * direct.norm().max(1e-10),
                "pointwise analytic {analytic_pt} direct {direct}"
            );
        }
        // pairing over E = [0.25, 0.5) x [0.375, 0.625): Riemann sum of the
        // direct evaluation over a 64x64 sub-lattice of E vs the closed form
        let mut cells = vec![];
        for ix in 4..8i64 {
            for iy in 6..10i64 {
                cells.push((ix, iy, aval));
            }
        }
        let e_set = CellSet { dx: 1.0 / 16.0, dy: 1.0 / 16.0, cells };
        let analytic = pair_unit_scale_modes(&mf, &e_set).unwrap();
        let n_sub = 64usize;
        let hx = 0.25 / n_sub as f64;
        let hy = 0.25 / n_sub as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..n_sub {
            for i in 0..n_sub {
                let x = 0.25 + (i as f64 + 0.5) * hx;
                let y = 0.375 + (j as f64 + 0.5) * hy;
                acc += direct_cf(x, y) * (hx * hy);
            }
        }
        assert!(
            (analytic - acc).norm() < 1e-3 * acc.norm().max(1e-8),
            "analytic {analytic} riemann {acc}"
        );
    }
}
