//! Periodic grid geometry and the Fourier-space inverse of the implicit
//! diffusion operator `id − εγΔ` (and its anisotropic counterpart).
//!
//! Transforms are unnormalised forward / `1/N`-normalised inverse complex
//! FFTs from `rustfft`. Spectra are kept in transposed layout
//! (`ix * ny + iy`) so the second pass runs over contiguous rows.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

use crate::field::PhaseField;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("grid needs at least 4 cells per axis, got {nx}x{ny}")]
    TooSmall { nx: usize, ny: usize },
    #[error("domain extents must be finite and positive, got {lx} x {ly}")]
    BadExtent { lx: f64, ly: f64 },
    #[error("cells must be square: lx/nx = {hx} but ly/ny = {hy}")]
    NonSquareCells { hx: f64, hy: f64 },
    #[error("eps*gamma must be finite and > 0, got {0}")]
    BadEpsGamma(f64),
    #[error("anisotropic wavenumber must be finite, got {0}")]
    BadWavenumber(f64),
    #[error("anisotropic operator not invertible at k = ({kx}, {ky}): smallest eigenvalue {min_eig}")]
    Singular { kx: f64, ky: f64, min_eig: f64 },
    #[error("field does not match operator grid")]
    GridMismatch,
    #[error("anisotropic solve needs m = 2, got m = {0}")]
    AnisotropicNeedsPlane(usize),
}

/// Uniform periodic grid with square cells of size `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self, SpectralError> {
        if nx < 4 || ny < 4 {
            return Err(SpectralError::TooSmall { nx, ny });
        }
        if !(lx.is_finite() && ly.is_finite() && lx > 0.0 && ly > 0.0) {
            return Err(SpectralError::BadExtent { lx, ly });
        }
        let hx = lx / nx as f64;
        let hy = ly / ny as f64;
        if (hx - hy).abs() > 1e-12 * hx {
            return Err(SpectralError::NonSquareCells { hx, hy });
        }
        Ok(Self { nx, ny, lx, ly })
    }

    /// Square grid of `n × n` cells on a square of side `l`.
    pub fn square(n: usize, l: f64) -> Result<Self, SpectralError> {
        Self::new(n, n, l, l)
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.lx / self.nx as f64
    }

    #[inline]
    pub fn cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    /// Cell-centre coordinate along x, domain `[0, lx)`.
    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.h()
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.h()
    }

    /// Physical wavenumber of FFT bin `i` along x.
    pub fn kx(&self, i: usize) -> f64 {
        TAU * signed_index(i, self.nx) as f64 / self.lx
    }

    pub fn ky(&self, j: usize) -> f64 {
        TAU * signed_index(j, self.ny) as f64 / self.ly
    }
}

/// FFT bin to signed frequency; the Nyquist bin maps to `+n/2`.
pub fn signed_index(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// How the derivatives inside the implicit operator are discretised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiffStencil {
    /// Symbols of the periodic forward-difference operators: `−Δ` becomes
    /// `4 sin²(kh/2)/h²` per axis and the odd part of `∂ₓ` becomes
    /// `sin(kₓh)/h`. The solve is then the exact proximal map of the
    /// forward-difference Dirichlet energy.
    #[default]
    FiniteDifference,
    /// Exact continuum symbols `|k|²` and `i kₓ`.
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Smoothness {
    Isotropic,
    /// `|∂ₓu − q R₉₀ u|² + |∂ᵧu|²`, favouring rotation of `u` with
    /// wavenumber `q` along x.
    Anisotropic { q: f64 },
}

#[derive(Debug, Clone)]
enum Multipliers {
    /// `1 / (1 + εγ λ(k))`.
    Scalar(Vec<f64>),
    /// Per-k `(a, b)` with `M(k) = a·I + b·iR₉₀`, stored already inverted as
    /// `(a/det, b/det)` where `M⁻¹ = (a·I − b·iR₉₀)/det`, `det = a² − b²`.
    Rotational(Vec<[f64; 2]>),
}

/// Tabulated inverse of the implicit diffusion operator on one grid.
/// Immutable after construction and safe to share between threads.
#[derive(Clone)]
pub struct SpectralOperator {
    grid: GridSpec,
    eps_gamma: f64,
    smoothness: Smoothness,
    stencil: DiffStencil,
    multipliers: Multipliers,
    fft_x: Arc<dyn Fft<f64>>,
    ifft_x: Arc<dyn Fft<f64>>,
    fft_y: Arc<dyn Fft<f64>>,
    ifft_y: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SpectralOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralOperator")
            .field("grid", &self.grid)
            .field("eps_gamma", &self.eps_gamma)
            .field("smoothness", &self.smoothness)
            .field("stencil", &self.stencil)
            .finish_non_exhaustive()
    }
}

/// Scratch buffers reused across solves.
pub struct Workspace {
    a: Vec<Complex64>,
    b: Vec<Complex64>,
    tmp: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl SpectralOperator {
    pub fn build(
        grid: GridSpec,
        eps_gamma: f64,
        smoothness: Smoothness,
        stencil: DiffStencil,
    ) -> Result<Self, SpectralError> {
        if !(eps_gamma.is_finite() && eps_gamma > 0.0) {
            return Err(SpectralError::BadEpsGamma(eps_gamma));
        }
        let (nx, ny) = (grid.nx, grid.ny);
        let h = grid.h();
        // Per-axis symbols: (|δ|², odd part of δ / i) for the chosen stencil.
        let axis = |k: f64, i: usize, n: usize| -> (f64, f64) {
            match stencil {
                DiffStencil::FiniteDifference => {
                    let s = (0.5 * k * h).sin();
                    (4.0 * s * s / (h * h), (k * h).sin() / h)
                }
                DiffStencil::Spectral => {
                    let odd = if n % 2 == 0 && i == n / 2 { 0.0 } else { k };
                    (k * k, odd)
                }
            }
        };
        let multipliers = match smoothness {
            Smoothness::Isotropic => {
                let mut m = vec![0.0; nx * ny];
                for ix in 0..nx {
                    let (lx2, _) = axis(grid.kx(ix), ix, nx);
                    for iy in 0..ny {
                        let (ly2, _) = axis(grid.ky(iy), iy, ny);
                        m[ix * ny + iy] = 1.0 / (1.0 + eps_gamma * (lx2 + ly2));
                    }
                }
                Multipliers::Scalar(m)
            }
            Smoothness::Anisotropic { q } => {
                if !q.is_finite() {
                    return Err(SpectralError::BadWavenumber(q));
                }
                let mut m = vec![[0.0; 2]; nx * ny];
                for ix in 0..nx {
                    let kx = grid.kx(ix);
                    let (lx2, odd) = axis(kx, ix, nx);
                    for iy in 0..ny {
                        let ky = grid.ky(iy);
                        let (ly2, _) = axis(ky, iy, ny);
                        let a = 1.0 + eps_gamma * (q * q + lx2 + ly2);
                        let b = 2.0 * eps_gamma * q * odd;
                        let min_eig = a - b.abs();
                        if min_eig < 1.0 - 1e-9 {
                            return Err(SpectralError::Singular { kx, ky, min_eig });
                        }
                        let det = a * a - b * b;
                        m[ix * ny + iy] = [a / det, b / det];
                    }
                }
                Multipliers::Rotational(m)
            }
        };
        let mut planner = FftPlanner::new();
        Ok(Self {
            grid,
            eps_gamma,
            smoothness,
            stencil,
            multipliers,
            fft_x: planner.plan_fft_forward(nx),
            ifft_x: planner.plan_fft_inverse(nx),
            fft_y: planner.plan_fft_forward(ny),
            ifft_y: planner.plan_fft_inverse(ny),
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn eps_gamma(&self) -> f64 {
        self.eps_gamma
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn stencil(&self) -> DiffStencil {
        self.stencil
    }

    /// The inverse operator at bin `(ix, iy)` as a 2×2 complex matrix acting
    /// on `(û₁, û₂)`. Isotropic operators return a scalar multiple of `I`.
    pub fn inverse_matrix(&self, ix: usize, iy: usize) -> [[Complex64; 2]; 2] {
        let k = ix * self.grid.ny + iy;
        match &self.multipliers {
            Multipliers::Scalar(m) => {
                let s = Complex64::new(m[k], 0.0);
                [[s, Complex64::new(0.0, 0.0)], [Complex64::new(0.0, 0.0), s]]
            }
            Multipliers::Rotational(m) => rotational_matrix(m[k][0], -m[k][1]),
        }
    }

    /// Scalar multiplier at `(ix, iy)`; `None` for anisotropic operators.
    pub fn scalar_multiplier(&self, ix: usize, iy: usize) -> Option<f64> {
        match &self.multipliers {
            Multipliers::Scalar(m) => Some(m[ix * self.grid.ny + iy]),
            Multipliers::Rotational(_) => None,
        }
    }

    pub fn workspace(&self) -> Workspace {
        let n = self.grid.cells();
        let scratch_len = [&self.fft_x, &self.ifft_x, &self.fft_y, &self.ifft_y]
            .iter()
            .map(|f| f.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        let zero = Complex64::new(0.0, 0.0);
        Workspace {
            a: vec![zero; n],
            b: vec![zero; n],
            tmp: vec![zero; n],
            scratch: vec![zero; scratch_len],
        }
    }

    /// Applies the inverse operator to every component of `f`.
    pub fn solve_implicit(&self, f: &PhaseField) -> Result<PhaseField, SpectralError> {
        let mut out = PhaseField::zeros(*f.grid(), f.m());
        let mut ws = self.workspace();
        self.solve_into(f, &mut out, &mut ws)?;
        Ok(out)
    }

    /// Allocation-free variant of [`Self::solve_implicit`].
    pub fn solve_into(
        &self,
        f: &PhaseField,
        out: &mut PhaseField,
        ws: &mut Workspace,
    ) -> Result<(), SpectralError> {
        if *f.grid() != self.grid || !f.same_shape(out) {
            return Err(SpectralError::GridMismatch);
        }
        let m = f.m();
        match &self.multipliers {
            Multipliers::Scalar(mult) => {
                // Real, even multipliers preserve Hermitian symmetry, so two
                // real components can share one complex transform.
                let packed = m == 2;
                for (dst, src) in ws.a.iter_mut().zip(f.component(0)) {
                    *dst = Complex64::new(*src, 0.0);
                }
                if packed {
                    for (dst, src) in ws.a.iter_mut().zip(f.component(1)) {
                        dst.im = *src;
                    }
                }
                self.forward(&mut ws.a, &mut ws.tmp, &mut ws.scratch);
                // Spectrum now lives in ws.tmp (transposed layout).
                for (z, s) in ws.tmp.iter_mut().zip(mult) {
                    *z *= *s;
                }
                self.inverse(&mut ws.tmp, &mut ws.a, &mut ws.scratch);
                for (dst, z) in out.component_mut(0).iter_mut().zip(&ws.a) {
                    *dst = z.re;
                }
                if packed {
                    for (dst, z) in out.component_mut(1).iter_mut().zip(&ws.a) {
                        *dst = z.im;
                    }
                }
            }
            Multipliers::Rotational(mult) => {
                if m != 2 {
                    return Err(SpectralError::AnisotropicNeedsPlane(m));
                }
                for (dst, src) in ws.a.iter_mut().zip(f.component(0)) {
                    *dst = Complex64::new(*src, 0.0);
                }
                self.forward(&mut ws.a, &mut ws.tmp, &mut ws.scratch);
                std::mem::swap(&mut ws.a, &mut ws.tmp);
                for (dst, src) in ws.b.iter_mut().zip(f.component(1)) {
                    *dst = Complex64::new(*src, 0.0);
                }
                self.forward(&mut ws.b, &mut ws.tmp, &mut ws.scratch);
                std::mem::swap(&mut ws.b, &mut ws.tmp);
                // M⁻¹ = (a·I − b·iR)/det with iR = [[0, −i], [i, 0]].
                for ((u1, u2), ab) in ws.a.iter_mut().zip(ws.b.iter_mut()).zip(mult) {
                    let [a, b] = *ab;
                    let v1 = *u1 * a + Complex64::new(0.0, b) * *u2;
                    let v2 = *u2 * a - Complex64::new(0.0, b) * *u1;
                    *u1 = v1;
                    *u2 = v2;
                }
                self.inverse(&mut ws.a, &mut ws.tmp, &mut ws.scratch);
                for (dst, z) in out.component_mut(0).iter_mut().zip(&ws.tmp) {
                    *dst = z.re;
                }
                self.inverse(&mut ws.b, &mut ws.tmp, &mut ws.scratch);
                for (dst, z) in out.component_mut(1).iter_mut().zip(&ws.tmp) {
                    *dst = z.re;
                }
            }
        }
        Ok(())
    }

    /// Row-major physical data in `data` → transposed spectrum in `out`.
    /// `data` is clobbered.
    fn forward(&self, data: &mut [Complex64], out: &mut [Complex64], scratch: &mut [Complex64]) {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        self.fft_x.process_with_scratch(data, scratch);
        transpose(data, out, ny, nx);
        self.fft_y.process_with_scratch(out, scratch);
    }

    /// Transposed spectrum in `spec` → row-major physical data in `out`,
    /// normalised by `1/N`. `spec` is clobbered.
    fn inverse(&self, spec: &mut [Complex64], out: &mut [Complex64], scratch: &mut [Complex64]) {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        self.ifft_y.process_with_scratch(spec, scratch);
        transpose(spec, out, nx, ny);
        self.ifft_x.process_with_scratch(out, scratch);
        let norm = 1.0 / (nx * ny) as f64;
        for z in out.iter_mut() {
            *z *= norm;
        }
    }
}

fn rotational_matrix(a: f64, b: f64) -> [[Complex64; 2]; 2] {
    // a·I + b·iR₉₀ with iR₉₀ = [[0, −i], [i, 0]]
    [
        [Complex64::new(a, 0.0), Complex64::new(0.0, -b)],
        [Complex64::new(0.0, b), Complex64::new(a, 0.0)],
    ]
}

/// `src` is `rows × cols` row-major; `dst` receives `cols × rows`.
fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    const B: usize = 16;
    for rb in (0..rows).step_by(B) {
        for cb in (0..cols).step_by(B) {
            for r in rb..(rb + B).min(rows) {
                for c in cb..(cb + B).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

/// Forward symbol `M(k)` of the implicit operator at bin `(ix, iy)`,
/// recomputed from scratch (used to check the tabulated inverse).
pub fn forward_matrix(op: &SpectralOperator, ix: usize, iy: usize) -> [[Complex64; 2]; 2] {
    let g = op.grid;
    let h = g.h();
    let eg = op.eps_gamma;
    let (kx, ky) = (g.kx(ix), g.ky(iy));
    let (lx2, ly2, odd) = match op.stencil {
        DiffStencil::FiniteDifference => {
            let sx = (0.5 * kx * h).sin();
            let sy = (0.5 * ky * h).sin();
            (4.0 * sx * sx / (h * h), 4.0 * sy * sy / (h * h), (kx * h).sin() / h)
        }
        DiffStencil::Spectral => {
            let odd = if g.nx % 2 == 0 && ix == g.nx / 2 { 0.0 } else { kx };
            (kx * kx, ky * ky, odd)
        }
    };
    match op.smoothness {
        Smoothness::Isotropic => rotational_matrix(1.0 + eg * (lx2 + ly2), 0.0),
        Smoothness::Anisotropic { q } => {
            rotational_matrix(1.0 + eg * (q * q + lx2 + ly2), 2.0 * eg * q * odd)
        }
    }
}

/// Stripe wavenumber giving `periods` full rotations across `lx`.
pub fn stripe_wavenumber(periods: f64, lx: f64) -> f64 {
    2.0 * PI * periods / lx
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn matmul(a: [[Complex64; 2]; 2], b: [[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
        let mut c = [[Complex64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    c[i][j] += a[i][k] * b[k][j];
                }
            }
        }
        c
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(3, 8, 1.0, 1.0).is_err());
        assert!(GridSpec::new(8, 8, 1.0, 2.0).is_err());
        assert!(GridSpec::new(16, 8, 2.0, 1.0).is_ok());
        assert!(GridSpec::new(8, 8, 0.0, 0.0).is_err());
    }

    #[test]
    fn zero_mode_multiplier_is_one() {
        let g = GridSpec::square(8, 1.3).unwrap();
        for stencil in [DiffStencil::FiniteDifference, DiffStencil::Spectral] {
            let op = SpectralOperator::build(g, 0.7, Smoothness::Isotropic, stencil).unwrap();
            assert_eq!(op.scalar_multiplier(0, 0), Some(1.0));
        }
    }

    #[test]
    fn unit_wavenumber_halves_with_spectral_symbol() {
        let g = GridSpec::square(8, TAU).unwrap();
        let op = SpectralOperator::build(g, 1.0, Smoothness::Isotropic, DiffStencil::Spectral).unwrap();
        assert!((op.scalar_multiplier(1, 0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn finite_difference_symbol_matches_stencil() {
        // 1/(1 + εγ·4 sin²(π/8)/h²) with h = π/4
        let g = GridSpec::square(8, TAU).unwrap();
        let op = SpectralOperator::build(g, 1.0, Smoothness::Isotropic, DiffStencil::FiniteDifference).unwrap();
        let h = PI / 4.0;
        let lam = 4.0 * (PI / 8.0).sin().powi(2) / (h * h);
        assert!((op.scalar_multiplier(1, 0).unwrap() - 1.0 / (1.0 + lam)).abs() < 1e-15);
    }

    #[test]
    fn anisotropic_eigenvalues_at_unit_k() {
        let g = GridSpec::square(8, TAU).unwrap();
        let op = SpectralOperator::build(g, 1.0, Smoothness::Anisotropic { q: 1.0 }, DiffStencil::Spectral).unwrap();
        let m = forward_matrix(&op, 1, 0);
        // M = a·I + b·iR has eigenvalues a ± b.
        let a = m[0][0].re;
        let b = m[1][0].im;
        let mut eig = [a - b, a + b];
        eig.sort_by(f64::total_cmp);
        assert!((eig[0] - 1.0).abs() < 1e-14 && (eig[1] - 5.0).abs() < 1e-14);
        let inv = op.inverse_matrix(1, 0);
        let ia = inv[0][0].re;
        let ib = inv[1][0].im;
        let mut ieig = [ia - ib, ia + ib];
        ieig.sort_by(f64::total_cmp);
        assert!((ieig[0] - 0.2).abs() < 1e-14 && (ieig[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn tabulated_inverse_times_symbol_is_identity() {
        let g = GridSpec::new(12, 8, 3.0, 2.0).unwrap();
        for stencil in [DiffStencil::FiniteDifference, DiffStencil::Spectral] {
            for smooth in [Smoothness::Isotropic, Smoothness::Anisotropic { q: 4.0 }] {
                let op = SpectralOperator::build(g, 0.05, smooth, stencil).unwrap();
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
                for ix in 0..g.nx {
                    for iy in 0..g.ny {
                        let prod = matmul(op.inverse_matrix(ix, iy), forward_matrix(&op, ix, iy));
                        let v = [
                            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                        ];
                        for i in 0..2 {
                            let w = prod[i][0] * v[0] + prod[i][1] * v[1];
                            assert!((w - v[i]).norm() < 1e-10);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn bad_eps_gamma() {
        let g = GridSpec::square(8, 1.0).unwrap();
        assert_eq!(
            SpectralOperator::build(g, 0.0, Smoothness::Isotropic, DiffStencil::Spectral).unwrap_err(),
            SpectralError::BadEpsGamma(0.0)
        );
    }

    #[test]
    fn anisotropic_requires_two_components() {
        let g = GridSpec::square(8, 1.0).unwrap();
        let op = SpectralOperator::build(g, 0.1, Smoothness::Anisotropic { q: 1.0 }, DiffStencil::Spectral).unwrap();
        let f = PhaseField::zeros(g, 1);
        assert_eq!(op.solve_implicit(&f).unwrap_err(), SpectralError::AnisotropicNeedsPlane(1));
        let other = PhaseField::zeros(GridSpec::square(16, 2.0).unwrap(), 2);
        assert_eq!(op.solve_implicit(&other).unwrap_err(), SpectralError::GridMismatch);
    }

    #[test]
    fn constant_field_is_fixed() {
        let g = GridSpec::square(16, 2.0).unwrap();
        for smooth in [Smoothness::Isotropic, Smoothness::Anisotropic { q: 0.0 }] {
            let op = SpectralOperator::build(g, 0.3, smooth, DiffStencil::FiniteDifference).unwrap();
            let f = PhaseField::uniform(g, &[0.25, -0.5]);
            let out = op.solve_implicit(&f).unwrap();
            assert!(out.max_abs_difference(&f) < 1e-14);
        }
    }
}
