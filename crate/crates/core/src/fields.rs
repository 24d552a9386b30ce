//! 2-D sampled fields on periodic grids, spectral projections and the three
//! classical maximal operators, plus a sparse band-limited (mode list)
//! representation used by the large-scale experiments.

use crate::error::{LgcError, Result};
use crate::numerics::{character, lp_window};
use crate::util::pairwise_sum;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use std::io::{Read, Write};

/// Uniform periodic grid; sample counts are powers of two.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    pub x0: f64,
    pub y0: f64,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, hx: f64, hy: f64, x0: f64, y0: f64) -> Result<Grid2D> {
        if !nx.is_power_of_two() || !ny.is_power_of_two() {
            return Err(LgcError::Config(format!(
                "grid sample counts must be powers of two, got {nx} x {ny}"
            )));
        }
        if !(hx > 0.0 && hy > 0.0) {
            return Err(LgcError::Config("grid spacings must be positive".into()));
        }
        Ok(Grid2D { nx, ny, hx, hy, x0, y0 })
    }

    /// Unit box [0,1)^2 at the given resolution.
    pub fn unit(n: usize) -> Grid2D {
        Grid2D::new(n, n, 1.0 / n as f64, 1.0 / n as f64, 0.0, 0.0).unwrap()
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn lx(&self) -> f64 {
        self.nx as f64 * self.hx
    }

    pub fn ly(&self) -> f64 {
        self.ny as f64 * self.hy
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.hx
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.hy
    }

    /// Physical frequency of DFT bin i along x.
    pub fn freq_x(&self, i: usize) -> f64 {
        let n = self.nx as i64;
        let k = if (i as i64) <= n / 2 { i as i64 } else { i as i64 - n };
        k as f64 / self.lx()
    }

    pub fn freq_y(&self, j: usize) -> f64 {
        let n = self.ny as i64;
        let k = if (j as i64) <= n / 2 { j as i64 } else { j as i64 - n };
        k as f64 / self.ly()
    }

    pub fn nyquist_x(&self) -> f64 {
        0.5 / self.hx
    }

    pub fn nyquist_y(&self) -> f64 {
        0.5 / self.hy
    }
}

/// Complex samples on a grid, row-major with y as the slow axis.
#[derive(Clone, Debug)]
pub struct SampledField2D {
    pub grid: Grid2D,
    pub data: Vec<Complex64>,
}

impl SampledField2D {
    pub fn zeros(grid: Grid2D) -> SampledField2D {
        let n = grid.len();
        SampledField2D { grid, data: vec![Complex64::new(0.0, 0.0); n] }
    }

    pub fn constant(grid: Grid2D, c: Complex64) -> SampledField2D {
        let n = grid.len();
        SampledField2D { grid, data: vec![c; n] }
    }

    pub fn from_fn<F: FnMut(f64, f64) -> Complex64>(grid: Grid2D, mut f: F) -> SampledField2D {
        let mut data = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                data.push(f(grid.x(i), grid.y(j)));
            }
        }
        SampledField2D { grid, data }
    }

    #[inline]
    pub fn get(&self, ix: usize, iy: usize) -> Complex64 {
        self.data[iy * self.grid.nx + ix]
    }

    #[inline]
    pub fn set(&mut self, ix: usize, iy: usize, v: Complex64) {
        self.data[iy * self.grid.nx + ix] = v;
    }

    pub fn assert_finite(&self) -> Result<()> {
        if self.data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LgcError::Domain("field contains non-finite samples".into()));
        }
        Ok(())
    }

    /// L^2 norm over the box with the grid measure hx hy.
    pub fn l2_norm(&self) -> f64 {
        let terms: Vec<f64> = self.data.iter().map(|z| z.norm_sqr()).collect();
        (pairwise_sum(&terms) * self.grid.hx * self.grid.hy).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Bilinear interpolation of the complex samples with periodic wrap.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> Complex64 {
        let g = &self.grid;
        let sx = (x - g.x0) / g.hx;
        let sy = (y - g.y0) / g.hy;
        let ix = sx.floor();
        let iy = sy.floor();
        let tx = sx - ix;
        let ty = sy - iy;
        let nx = g.nx as i64;
        let ny = g.ny as i64;
        let i0 = (ix as i64).rem_euclid(nx) as usize;
        let i1 = (ix as i64 + 1).rem_euclid(nx) as usize;
        let j0 = (iy as i64).rem_euclid(ny) as usize;
        let j1 = (iy as i64 + 1).rem_euclid(ny) as usize;
        let f00 = self.data[j0 * g.nx + i0];
        let f10 = self.data[j0 * g.nx + i1];
        let f01 = self.data[j1 * g.nx + i0];
        let f11 = self.data[j1 * g.nx + i1];
        f00 * ((1.0 - tx) * (1.0 - ty))
            + f10 * (tx * (1.0 - ty))
            + f01 * ((1.0 - tx) * ty)
            + f11 * (tx * ty)
    }

    /// Bilinear interpolation of |f| (interpolates the modulus samples).
    pub fn sample_abs_bilinear(&self, x: f64, y: f64) -> f64 {
        let g = &self.grid;
        let sx = (x - g.x0) / g.hx;
        let sy = (y - g.y0) / g.hy;
        let ix = sx.floor();
        let iy = sy.floor();
        let tx = sx - ix;
        let ty = sy - iy;
        let nx = g.nx as i64;
        let ny = g.ny as i64;
        let i0 = (ix as i64).rem_euclid(nx) as usize;
        let i1 = (ix as i64 + 1).rem_euclid(nx) as usize;
        let j0 = (iy as i64).rem_euclid(ny) as usize;
        let j1 = (iy as i64 + 1).rem_euclid(ny) as usize;
        let f00 = self.data[j0 * g.nx + i0].norm();
        let f10 = self.data[j0 * g.nx + i1].norm();
        let f01 = self.data[j1 * g.nx + i0].norm();
        let f11 = self.data[j1 * g.nx + i1].norm();
        f00 * (1.0 - tx) * (1.0 - ty) + f10 * tx * (1.0 - ty) + f01 * (1.0 - tx) * ty + f11 * tx * ty
    }

    /// Forward 2-D DFT, unnormalized (Parseval: sum|f|^2 = sum|fhat|^2 / (nx ny)).
    pub fn fft2(&self) -> SampledField2D {
        let mut out = self.clone();
        fft2_in_place(&mut out, false);
        out
    }

    /// Inverse 2-D DFT, normalized by 1/(nx ny).
    pub fn ifft2(&self) -> SampledField2D {
        let mut out = self.clone();
        fft2_in_place(&mut out, true);
        out
    }
}

fn fft2_in_place(f: &mut SampledField2D, inverse: bool) {
    let nx = f.grid.nx;
    let ny = f.grid.ny;
    let mut planner = FftPlanner::new();
    let row_fft = if inverse { planner.plan_fft_inverse(nx) } else { planner.plan_fft_forward(nx) };
    let col_fft = if inverse { planner.plan_fft_inverse(ny) } else { planner.plan_fft_forward(ny) };
    f.data.par_chunks_mut(nx).for_each(|row| row_fft.process(row));
    // columns via transpose-process-transpose on chunks
    let mut cols = vec![Complex64::new(0.0, 0.0); nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            cols[i * ny + j] = f.data[j * nx + i];
        }
    }
    cols.par_chunks_mut(ny).for_each(|col| col_fft.process(col));
    for j in 0..ny {
        for i in 0..nx {
            f.data[j * nx + i] = cols[i * ny + j];
        }
    }
    if inverse {
        let scale = 1.0 / (nx * ny) as f64;
        f.data.iter_mut().for_each(|z| *z *= scale);
    }
}

/// Frequency projection (P_{k,j1} x P_{2k,j2}) f via forward/inverse FFT:
/// multiplies the spectrum by phi_{k,j1}(xi) phi_{2k,j2}(eta).
pub fn spectral_project(f: &SampledField2D, k: i32, j1: u32, j2: u32) -> Result<SampledField2D> {
    let g = &f.grid;
    let edge_x = ((k + j1 as i32 + 1) as f64).exp2();
    let edge_y = ((2 * k + j2 as i32 + 1) as f64).exp2();
    if edge_x > g.nyquist_x() * (1.0 + 1e-12) {
        return Err(LgcError::Resolution {
            axis: "x",
            message: format!(
                "window support edge 2^{} = {edge_x} exceeds Nyquist {}",
                k + j1 as i32 + 1,
                g.nyquist_x()
            ),
        });
    }
    if edge_y > g.nyquist_y() * (1.0 + 1e-12) {
        return Err(LgcError::Resolution {
            axis: "y",
            message: format!(
                "window support edge 2^{} = {edge_y} exceeds Nyquist {}",
                2 * k + j2 as i32 + 1,
                g.nyquist_y()
            ),
        });
    }
    let mut hat = f.fft2();
    let wx: Vec<f64> = (0..g.nx).map(|i| lp_window(k, j1, g.freq_x(i))).collect();
    let wy: Vec<f64> = (0..g.ny).map(|j| lp_window(2 * k, j2, g.freq_y(j))).collect();
    for j in 0..g.ny {
        for i in 0..g.nx {
            hat.data[j * g.nx + i] *= wx[i] * wy[j];
        }
    }
    Ok(hat.ifft2())
}

fn dyadic_half_widths(n: usize) -> Vec<usize> {
    let mut out = vec![];
    let mut w = 1usize;
    while 2 * w + 1 <= n {
        out.push(w);
        w *= 2;
    }
    out
}

/// Strong maximal operator: pointwise sup of |f|-averages over the dyadic
/// ladder of centered axis-parallel rectangles (degenerate single sample
/// included, so the output dominates |f|).
pub fn maximal_strong(f: &SampledField2D) -> SampledField2D {
    let g = f.grid.clone();
    let nx = g.nx;
    let ny = g.ny;
    let absf: Vec<f64> = f.data.iter().map(|z| z.norm()).collect();
    let mut best = absf.clone();

    let xw = dyadic_half_widths(nx);
    let yw = dyadic_half_widths(ny);

    // rolling periodic box sums along x for each half-width
    let mut row_sums: Vec<Vec<f64>> = Vec::with_capacity(xw.len());
    for &w in &xw {
        let mut rs = vec![0.0; nx * ny];
        rs.par_chunks_mut(nx).enumerate().for_each(|(j, out)| {
            let row = &absf[j * nx..(j + 1) * nx];
            let mut s = 0.0;
            for di in -(w as i64)..=(w as i64) {
                s += row[di.rem_euclid(nx as i64) as usize];
            }
            out[0] = s;
            for i in 1..nx {
                let add = (i as i64 + w as i64).rem_euclid(nx as i64) as usize;
                let sub = (i as i64 - 1 - w as i64).rem_euclid(nx as i64) as usize;
                s += row[add] - row[sub];
                out[i] = s;
            }
        });
        row_sums.push(rs);
    }
    // degenerate x-width (single column) is the abs field itself
    row_sums.insert(0, absf.clone());
    let mut x_widths = vec![0usize];
    x_widths.extend(&xw);

    let mut y_widths = vec![0usize];
    y_widths.extend(&yw);

    for (ai, rs) in row_sums.iter().enumerate() {
        let wa = x_widths[ai];
        for &wb in &y_widths {
            let denom = ((2 * wa + 1) * (2 * wb + 1)) as f64;
            best.par_chunks_mut(nx).enumerate().for_each(|(j, outrow)| {
                for i in 0..nx {
                    let mut s = 0.0;
                    for dj in -(wb as i64)..=(wb as i64) {
                        let jj = (j as i64 + dj).rem_euclid(ny as i64) as usize;
                        s += rs[jj * nx + i];
                    }
                    let avg = s / denom;
                    if avg > outrow[i] {
                        outrow[i] = avg;
                    }
                }
            });
        }
    }
    SampledField2D { grid: g, data: best.into_iter().map(|v| Complex64::new(v, 0.0)).collect() }
}

fn parabola_radii(g: &Grid2D) -> Vec<f64> {
    // dyadic ladder from quarter-cell scale up to half the box width; the
    // degenerate R -> 0 member is handled separately (it is |f| itself)
    let mut out = vec![];
    let mut r = g.hx / 4.0;
    while r <= 0.5 * g.lx() {
        out.push(r);
        r *= 2.0;
    }
    out
}

/// Maximal operator along the parabola: sup over dyadic R of
/// (1/2R) int_{-R}^{R} |f|(x-t, y-t^2) dt, composite midpoint rule.
pub fn maximal_parabola(f: &SampledField2D) -> SampledField2D {
    let g = f.grid.clone();
    let step = (g.hx.min(g.hy.sqrt())) / 32.0;
    let radii = parabola_radii(&g);
    let nx = g.nx;
    let mut out = vec![0.0; g.len()];
    out.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
        let y = g.y(j);
        for (i, slot) in row.iter_mut().enumerate() {
            let x = g.x(i);
            // degenerate R -> 0 average is the sample value itself
            let mut best = f.data[j * nx + i].norm();
            for &r in &radii {
                let count = ((2.0 * r / step).ceil() as usize).max(2);
                let h = 2.0 * r / count as f64;
                let mut s = 0.0;
                for m in 0..count {
                    let t = -r + (m as f64 + 0.5) * h;
                    s += f.sample_abs_bilinear(x - t, y - t * t);
                }
                let avg = s / count as f64;
                if avg > best {
                    best = avg;
                }
            }
            *slot = best;
        }
    });
    SampledField2D { grid: g, data: out.into_iter().map(|v| Complex64::new(v, 0.0)).collect() }
}

/// Maximally truncated Hilbert transform along the parabola: sup over
/// grid-representable dyadic pairs r < R of |int_{r<|t|<=R} f(x-t,y-t^2) dt/t|.
/// Nodes at +t and -t are paired exactly so odd kernels cancel constants.
pub fn hilbert_star_parabola(f: &SampledField2D) -> SampledField2D {
    let g = f.grid.clone();
    let step = (g.hx.min(g.hy.sqrt())) / 32.0;
    // dyadic shell boundaries from hx up to half the box
    let mut bounds = vec![];
    let mut r = g.hx;
    while r <= 0.5 * g.lx() {
        bounds.push(r);
        r *= 2.0;
    }
    let nshell = bounds.len().saturating_sub(1);
    let nx = g.nx;
    let mut out = vec![0.0; g.len()];
    out.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
        let y = g.y(j);
        for (i, slot) in row.iter_mut().enumerate() {
            let x = g.x(i);
            // prefix sums over shells; sup over dyadic pairs is the max
            // modulus of a prefix difference
            let mut prefix = Vec::with_capacity(nshell + 1);
            prefix.push(Complex64::new(0.0, 0.0));
            let mut acc = Complex64::new(0.0, 0.0);
            for s in 0..nshell {
                let (a, b) = (bounds[s], bounds[s + 1]);
                let count = (((b - a) / step).ceil() as usize).max(2);
                let h = (b - a) / count as f64;
                let mut shell = Complex64::new(0.0, 0.0);
                for m in 0..count {
                    let t = a + (m as f64 + 0.5) * h;
                    let plus = f.sample_bilinear(x - t, y - t * t);
                    let minus = f.sample_bilinear(x + t, y - t * t);
                    shell += (plus - minus) * (h / t);
                }
                acc += shell;
                prefix.push(acc);
            }
            let mut best = 0.0f64;
            for a in 0..prefix.len() {
                for b in (a + 1)..prefix.len() {
                    let v = (prefix[b] - prefix[a]).norm();
                    if v > best {
                        best = v;
                    }
                }
            }
            *slot = best;
        }
    });
    SampledField2D { grid: g, data: out.into_iter().map(|v| Complex64::new(v, 0.0)).collect() }
}

const RASTER_MAGIC: &[u8; 4] = b"OSC1";

/// Write the field raster format: magic "OSC1", u32 nx, u32 ny, f64 hx, hy,
/// x0, y0, then nx*ny little-endian (re, im) f64 pairs, row-major.
pub fn write_raster<W: Write>(f: &SampledField2D, w: &mut W) -> Result<()> {
    w.write_all(RASTER_MAGIC)?;
    w.write_all(&(f.grid.nx as u32).to_le_bytes())?;
    w.write_all(&(f.grid.ny as u32).to_le_bytes())?;
    for v in [f.grid.hx, f.grid.hy, f.grid.x0, f.grid.y0] {
        w.write_all(&v.to_le_bytes())?;
    }
    for z in &f.data {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_raster<R: Read>(r: &mut R) -> Result<SampledField2D> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != RASTER_MAGIC {
        return Err(LgcError::Config("bad raster magic, expected OSC1".into()));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let nx = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b4)?;
    let ny = u32::from_le_bytes(b4) as usize;
    let mut b8 = [0u8; 8];
    let mut scalars = [0.0f64; 4];
    for s in scalars.iter_mut() {
        r.read_exact(&mut b8)?;
        *s = f64::from_le_bytes(b8);
    }
    let grid = Grid2D::new(nx, ny, scalars[0], scalars[1], scalars[2], scalars[3])?;
    let mut data = Vec::with_capacity(nx * ny);
    for _ in 0..nx * ny {
        r.read_exact(&mut b8)?;
        let re = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let im = f64::from_le_bytes(b8);
        data.push(Complex64::new(re, im));
    }
    Ok(SampledField2D { grid, data })
}

/// A sparse trigonometric polynomial on the periodic box [0,lx) x [0,ly):
/// f(x,y) = sum_j c_j e(kx_j x / lx + ky_j y / ly). Lattice modes are exactly
/// orthogonal, which makes norms and inner products analytic; this is the
/// representation the large-lambda experiments run on.
#[derive(Clone, Debug)]
pub struct ModeField {
    pub lx: f64,
    pub ly: f64,
    pub modes: Vec<(i64, i64, Complex64)>,
}

impl ModeField {
    pub fn eval(&self, x: f64, y: f64) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for &(kx, ky, c) in &self.modes {
            s += c * character(kx as f64 * x / self.lx + ky as f64 * y / self.ly);
        }
        s
    }

    pub fn freq(&self, kx: i64, ky: i64) -> (f64, f64) {
        (kx as f64 / self.lx, ky as f64 / self.ly)
    }

    /// L^2 norm over one period box (modes are orthogonal).
    pub fn l2_norm(&self) -> f64 {
        (self.lx * self.ly * self.modes.iter().map(|m| m.2.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// Exact sampling through the spectrum (the grid box must match the period).
    pub fn sample_onto(&self, grid: &Grid2D) -> Result<SampledField2D> {
        if (grid.lx() - self.lx).abs() > 1e-9 * self.lx || (grid.ly() - self.ly).abs() > 1e-9 * self.ly {
            return Err(LgcError::Config("grid box does not match mode field period".into()));
        }
        let mut hat = SampledField2D::zeros(grid.clone());
        let n = (grid.nx * grid.ny) as f64;
        for &(kx, ky, c) in &self.modes {
            if 2 * kx.unsigned_abs() as usize >= grid.nx || 2 * ky.unsigned_abs() as usize >= grid.ny {
                return Err(LgcError::Resolution {
                    axis: if 2 * kx.unsigned_abs() as usize >= grid.nx { "x" } else { "y" },
                    message: format!("mode ({kx},{ky}) exceeds grid Nyquist"),
                });
            }
            let i = kx.rem_euclid(grid.nx as i64) as usize;
            let j = ky.rem_euclid(grid.ny as i64) as usize;
            let phase = character(kx as f64 * grid.x0 / self.lx + ky as f64 * grid.y0 / self.ly);
            hat.data[j * grid.nx + i] += c * phase * n;
        }
        Ok(hat.ifft2())
    }
}

/// Random band-limited field with modes in the closed annulus
/// max(|xi|,|eta|) in [lo, hi] (physical frequencies), unit L^2 norm.
pub fn random_annulus_modes(
    lx: f64,
    ly: f64,
    lo: f64,
    hi: f64,
    count: usize,
    seed: u64,
    stream: u64,
) -> ModeField {
    use rand::Rng;
    let mut rng = crate::util::stream_rng(seed, stream);
    let kx_hi = (hi * lx).floor() as i64;
    let ky_hi = (hi * ly).floor() as i64;
    let mut modes = Vec::with_capacity(count);
    let mut seen = std::collections::HashSet::new();
    let mut guard = 0;
    while modes.len() < count && guard < 100 * count {
        guard += 1;
        let kx = rng.gen_range(-kx_hi..=kx_hi);
        let ky = rng.gen_range(-ky_hi..=ky_hi);
        let fx = (kx as f64 / lx).abs();
        let fy = (ky as f64 / ly).abs();
        if fx.max(fy) < lo || fx.max(fy) > hi || !seen.insert((kx, ky)) {
            continue;
        }
        let re: f64 = rng.gen_range(-1.0..1.0);
        let im: f64 = rng.gen_range(-1.0..1.0);
        modes.push((kx, ky, Complex64::new(re, im)));
    }
    let norm = (lx * ly * modes.iter().map(|m| m.2.norm_sqr()).sum::<f64>()).sqrt();
    if norm > 0.0 {
        for m in modes.iter_mut() {
            m.2 /= norm;
        }
    }
    ModeField { lx, ly, modes }
}
