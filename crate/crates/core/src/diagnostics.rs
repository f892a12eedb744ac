//! Quantitative observables of a field snapshot: interface width and energy,
//! vortex detection, phase fractions and the dominant stripe wavenumber.

use std::collections::VecDeque;
use std::f64::consts::{PI, TAU};

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::convex::ConstraintSet;
use crate::field::PhaseField;
use crate::potential::PotentialSpec;

/// Cells closer than this to a phase point count as "in the phase".
pub const DEFAULT_TOL_PHASE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("scan line must cross exactly one interface, found {0} crossings")]
    Crossings(usize),
    #[error("constraint set has no isolated phase points")]
    NoPhasePoints,
    #[error("vortex detection needs a 2-component field, got m = {0}")]
    NeedsPlane(usize),
    #[error("component {component} out of range for m = {m}")]
    Component { component: usize, m: usize },
    #[error("profile positions and values differ in length")]
    Ragged,
}

/// Field values sampled along a straight scan line.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceProfile {
    /// Arc-length coordinate of each sample.
    pub positions: Vec<f64>,
    pub values: Vec<[f64; 2]>,
}

impl InterfaceProfile {
    pub fn new(positions: Vec<f64>, values: Vec<[f64; 2]>) -> Result<Self, DiagnosticsError> {
        if positions.len() != values.len() {
            return Err(DiagnosticsError::Ragged);
        }
        Ok(Self { positions, values })
    }

    /// Cells `start..start + len` (wrapping) of row `j`.
    pub fn from_row(u: &PhaseField, j: usize, start: usize, len: usize) -> Self {
        let g = u.grid();
        let h = g.h();
        let (positions, values) = (0..len)
            .map(|s| (s as f64 * h, u.get((start + s) % g.nx, j)))
            .unzip();
        Self { positions, values }
    }

    /// Cells `start..start + len` (wrapping) of column `i`.
    pub fn from_column(u: &PhaseField, i: usize, start: usize, len: usize) -> Self {
        let g = u.grid();
        let h = g.h();
        let (positions, values) = (0..len)
            .map(|s| (s as f64 * h, u.get(i, (start + s) % g.ny)))
            .unzip();
        Self { positions, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sample spacing (assumed uniform).
    pub fn spacing(&self) -> f64 {
        if self.positions.len() < 2 {
            0.0
        } else {
            (self.positions[self.positions.len() - 1] - self.positions[0]) / (self.positions.len() - 1) as f64
        }
    }
}

fn nearest_phase(v: [f64; 2], phases: &[[f64; 2]], tol: f64) -> Option<usize> {
    phases.iter().position(|p| {
        let d0 = v[0] - p[0];
        let d1 = v[1] - p[1];
        (d0 * d0 + d1 * d1).sqrt() <= tol
    })
}

/// Compact interface width: `h` times the number of samples farther than
/// `tol_phase` from every phase point. The profile must connect exactly two
/// distinct phases.
pub fn interface_width(
    profile: &InterfaceProfile,
    set: &ConstraintSet,
    tol_phase: f64,
) -> Result<f64, DiagnosticsError> {
    let phases = set.phase_points().points;
    if phases.is_empty() {
        return Err(DiagnosticsError::NoPhasePoints);
    }
    let labels: Vec<Option<usize>> = profile
        .values
        .iter()
        .map(|v| nearest_phase(*v, &phases, tol_phase))
        .collect();
    let mut crossings = 0;
    let mut last = None;
    for l in labels.iter().flatten() {
        if let Some(prev) = last {
            if prev != *l {
                crossings += 1;
            }
        }
        last = Some(*l);
    }
    if crossings != 1 {
        return Err(DiagnosticsError::Crossings(crossings));
    }
    let interior = labels.iter().filter(|l| l.is_none()).count();
    Ok(interior as f64 * profile.spacing())
}

/// Path integral `∫ √(2W(γ(s))) ds` along the piecewise-linear path through
/// the profile values.
pub fn interfacial_energy_1d(profile: &InterfaceProfile, potential: &PotentialSpec) -> f64 {
    let integrand = |p: [f64; 2]| (2.0 * potential.w_point(p)).max(0.0).sqrt();
    profile
        .values
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
            if len == 0.0 {
                return 0.0;
            }
            let f = |t: f64| integrand([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
            len * adaptive_simpson(&f, 0.0, 1.0, 1e-12, 40)
        })
        .sum()
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vortex {
    /// Cluster centroid in physical coordinates.
    pub position: [f64; 2],
    /// Winding number of the cluster: ±1 for a simple vortex.
    pub polarity: i32,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VortexList {
    pub vortices: Vec<Vortex>,
    /// Clusters with `|winding| ≥ 2`.
    pub composites: Vec<Vortex>,
    /// Low-amplitude clusters carrying no net winding.
    pub neutral: usize,
}

impl VortexList {
    /// Sum of all windings; zero on a periodic domain.
    pub fn total_polarity(&self) -> i64 {
        self.vortices
            .iter()
            .chain(&self.composites)
            .map(|v| v.polarity as i64)
            .sum()
    }

    /// Total defect charge `Σ|winding|`.
    pub fn count(&self) -> usize {
        self.vortices
            .iter()
            .chain(&self.composites)
            .map(|v| v.polarity.unsigned_abs() as usize)
            .sum()
    }
}

#[inline]
fn wrap_angle(mut d: f64) -> f64 {
    if d > PI {
        d -= TAU;
    } else if d <= -PI {
        d += TAU;
    }
    d
}

/// Finds point defects of a 2-component field.
///
/// Every elementary plaquette gets an integer winding from the wrapped angle
/// increments around it. Cells with `|u| < amp_threshold` and the corners of
/// plaquettes with nonzero winding are grouped by 4-connectivity (periodic);
/// each group's polarity is the sum of its plaquette windings, which by the
/// discrete Stokes theorem equals the winding around any loop enclosing it.
pub fn detect_vortices(u: &PhaseField, amp_threshold: f64) -> Result<VortexList, DiagnosticsError> {
    if u.m() != 2 {
        return Err(DiagnosticsError::NeedsPlane(u.m()));
    }
    let g = *u.grid();
    let (nx, ny) = (g.nx, g.ny);
    let n = g.cells();
    let idx = |i: usize, j: usize| j * nx + i;
    let theta: Vec<f64> = (0..n).map(|k| {
        let v = u.at(k);
        v[1].atan2(v[0])
    }).collect();
    let mut ex = vec![0.0; n];
    let mut ey = vec![0.0; n];
    for j in 0..ny {
        for i in 0..nx {
            let k = idx(i, j);
            ex[k] = wrap_angle(theta[idx((i + 1) % nx, j)] - theta[k]);
            ey[k] = wrap_angle(theta[idx(i, (j + 1) % ny)] - theta[k]);
        }
    }
    let mut winding = vec![0i32; n];
    let mut core = vec![false; n];
    for j in 0..ny {
        let jn = (j + 1) % ny;
        for i in 0..nx {
            let i_n = (i + 1) % nx;
            let s = ex[idx(i, j)] + ey[idx(i_n, j)] - ex[idx(i, jn)] - ey[idx(i, j)];
            let w = (s / TAU).round() as i32;
            let k = idx(i, j);
            winding[k] = w;
            if w != 0 {
                for c in [k, idx(i_n, j), idx(i_n, jn), idx(i, jn)] {
                    core[c] = true;
                }
            }
        }
    }
    for (k, c) in core.iter_mut().enumerate() {
        let v = u.at(k);
        if (v[0] * v[0] + v[1] * v[1]).sqrt() < amp_threshold {
            *c = true;
        }
    }

    let mut label = vec![usize::MAX; n];
    let mut clusters: Vec<(f64, f64, usize)> = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..n {
        if !core[start] || label[start] != usize::MAX {
            continue;
        }
        let id = clusters.len();
        label[start] = id;
        let (si, sj) = ((start % nx) as i64, (start / nx) as i64);
        queue.push_back((start, si, sj));
        let (mut sx, mut sy, mut cnt) = (0.0, 0.0, 0usize);
        while let Some((k, ui, uj)) = queue.pop_front() {
            sx += ui as f64;
            sy += uj as f64;
            cnt += 1;
            let (i, j) = (k % nx, k / nx);
            let neighbours = [
                ((i + 1) % nx, j, ui + 1, uj),
                ((i + nx - 1) % nx, j, ui - 1, uj),
                (i, (j + 1) % ny, ui, uj + 1),
                (i, (j + ny - 1) % ny, ui, uj - 1),
            ];
            for (a, b, ua, ub) in neighbours {
                let kk = idx(a, b);
                if core[kk] && label[kk] == usize::MAX {
                    label[kk] = id;
                    queue.push_back((kk, ua, ub));
                }
            }
        }
        clusters.push((sx / cnt as f64, sy / cnt as f64, cnt));
    }

    let mut charge = vec![0i32; clusters.len()];
    for k in 0..n {
        if winding[k] != 0 {
            charge[label[k]] += winding[k];
        }
    }

    let mut out = VortexList::default();
    for (id, (cx, cy, _)) in clusters.iter().enumerate() {
        let ci = cx.rem_euclid(nx as f64);
        let cj = cy.rem_euclid(ny as f64);
        let v = Vortex {
            position: [(ci + 0.5) * g.h(), (cj + 0.5) * g.h()],
            polarity: charge[id],
        };
        match charge[id].abs() {
            0 => out.neutral += 1,
            1 => out.vortices.push(v),
            _ => out.composites.push(v),
        }
    }
    Ok(out)
}

/// Fraction of cells sitting on each phase point, plus the remainder.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseFractions {
    pub phases: Vec<f64>,
    pub interface: f64,
    /// Lens sets only: interface cells split by the sign of `u_y`
    /// (upper boundary path / lower boundary path).
    pub upper_lower: Option<(f64, f64)>,
}

impl PhaseFractions {
    /// Phase fractions followed by the interface fraction.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.phases.clone();
        v.push(self.interface);
        v
    }
}

pub fn phase_fractions(
    u: &PhaseField,
    set: &ConstraintSet,
    tol_phase: f64,
) -> Result<PhaseFractions, DiagnosticsError> {
    let phases = set.phase_points().points;
    if phases.is_empty() {
        return Err(DiagnosticsError::NoPhasePoints);
    }
    let n = u.grid().cells();
    let mut counts = vec![0usize; phases.len()];
    let (mut upper, mut lower) = (0usize, 0usize);
    for k in 0..n {
        let v = u.at(k);
        match nearest_phase(v, &phases, tol_phase) {
            Some(p) => counts[p] += 1,
            None if v[1] >= 0.0 => upper += 1,
            None => lower += 1,
        }
    }
    let total = n as f64;
    let interface = (n - counts.iter().sum::<usize>()) as f64 / total;
    Ok(PhaseFractions {
        phases: counts.iter().map(|&c| c as f64 / total).collect(),
        interface,
        upper_lower: matches!(set, ConstraintSet::Lens { .. })
            .then(|| (upper as f64 / total, lower as f64 / total)),
    })
}

/// Row-averaged power spectrum of one component along x, folded onto
/// bins `0..=nx/2`.
pub fn row_power_spectrum(u: &PhaseField, component: usize) -> Result<Vec<f64>, DiagnosticsError> {
    if component >= u.m() {
        return Err(DiagnosticsError::Component { component, m: u.m() });
    }
    let g = u.grid();
    let (nx, ny) = (g.nx, g.ny);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(nx);
    let mut buf: Vec<Complex64> = u.component(component).iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft.process(&mut buf);
    let mut power = vec![0.0; nx / 2 + 1];
    for row in buf.chunks(nx) {
        for (i, c) in row.iter().enumerate() {
            let bin = if i <= nx / 2 { i } else { nx - i };
            power[bin] += c.norm_sqr();
        }
    }
    for p in power.iter_mut() {
        *p /= ny as f64;
    }
    Ok(power)
}

/// Physical `kₓ` of the strongest non-constant bin of the row spectrum.
pub fn dominant_wavenumber_x(u: &PhaseField, component: usize) -> Result<f64, DiagnosticsError> {
    let power = row_power_spectrum(u, component)?;
    let best = power
        .iter()
        .enumerate()
        .skip(1)
        .fold((1, f64::NEG_INFINITY), |acc, (i, &p)| if p > acc.1 { (i, p) } else { acc })
        .0;
    Ok(TAU * best as f64 / u.grid().lx)
}
