//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use phasefield::{ConstraintSet, GridSpec, PhaseField, SolverParams};

/// Nearest point of a closed convex set, by direct search over its boundary
/// (or the point itself when inside). Only the set geometry is used, not
/// the library's projection.
pub fn brute_project(set: &ConstraintSet, p: [f64; 2]) -> [f64; 2] {
    match *set {
        ConstraintSet::Interval { lo, hi } => [p[0].max(lo).min(hi), 0.0],
        ConstraintSet::Disk { radius } => {
            let n = p[0].hypot(p[1]);
            if n <= radius {
                p
            } else {
                arc_search(p, [0.0, 0.0], radius, -0.1, std::f64::consts::TAU + 0.1)
            }
        }
        ConstraintSet::Triangle { vertices } => {
            if inside_triangle(&vertices, p) {
                return p;
            }
            let mut best = vertices[0];
            for e in 0..3 {
                let a = vertices[e];
                let b = vertices[(e + 1) % 3];
                let q = nearest_on_segment_search(p, a, b);
                if dist(q, p) < dist(best, p) {
                    best = q;
                }
            }
            best
        }
        ConstraintSet::Lens { c } => {
            let r = (1.0 + c * c).sqrt();
            let in_a = p[0].hypot(p[1] - c) <= r;
            let in_b = p[0].hypot(p[1] + c) <= r;
            if in_a && in_b {
                return p;
            }
            // Upper arc lies on the circle around (0, -c); lower on (0, c).
            let half = (c / r).acos();
            let top = std::f64::consts::FRAC_PI_2;
            let upper = arc_search(p, [0.0, -c], r, top - half, top + half);
            let lower = arc_search(p, [0.0, c], r, -top - half, -top + half);
            if dist(upper, p) <= dist(lower, p) {
                upper
            } else {
                lower
            }
        }
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn inside_triangle(v: &[[f64; 2]; 3], p: [f64; 2]) -> bool {
    let cross =
        |a: [f64; 2], b: [f64; 2]| (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
    let s = [cross(v[0], v[1]), cross(v[1], v[2]), cross(v[2], v[0])];
    s.iter().all(|&x| x >= 0.0) || s.iter().all(|&x| x <= 0.0)
}

/// Coarse scan then golden-section refinement of `|γ(t) − p|` along a
/// circular arc `t ∈ [t0, t1]`.
fn arc_search(p: [f64; 2], center: [f64; 2], r: f64, t0: f64, t1: f64) -> [f64; 2] {
    let at = |t: f64| [center[0] + r * t.cos(), center[1] + r * t.sin()];
    golden_min(|t| dist(at(t), p), t0, t1, 2000)
        .map(at)
        .unwrap()
}

fn nearest_on_segment_search(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    let at = |t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    golden_min(|t| dist(at(t), p), 0.0, 1.0, 2000)
        .map(at)
        .unwrap()
}

fn golden_min(f: impl Fn(f64) -> f64, t0: f64, t1: f64, samples: usize) -> Option<f64> {
    let step = (t1 - t0) / samples as f64;
    let mut best = 0;
    let mut best_v = f64::INFINITY;
    for i in 0..=samples {
        let v = f(t0 + i as f64 * step);
        if v < best_v {
            best_v = v;
            best = i;
        }
    }
    let mut lo = (t0 + (best as f64 - 1.0) * step).max(t0);
    let mut hi = (t0 + (best as f64 + 1.0) * step).min(t1);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if f(a) <= f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Gradient of the time-step objective
/// `‖u − uᵏ‖²/(2τ) + Σ h²[ε/2 |D⁺u|² + (d² − |u|²)/(2ωε)]`, divided by `h²`,
/// assembled directly from forward differences.
pub fn objective_gradient(
    u: &[f64],
    uk: &[f64],
    nx: usize,
    ny: usize,
    m: usize,
    h: f64,
    p: &SolverParams,
    out: &mut [f64],
) {
    let n = nx * ny;
    for c in 0..m {
        let off = c * n;
        for j in 0..ny {
            let jp = (j + 1) % ny;
            let jm = (j + ny - 1) % ny;
            for i in 0..nx {
                let ip = (i + 1) % nx;
                let im = (i + nx - 1) % nx;
                let k = off + j * nx + i;
                let v = u[k];
                // d/du_k of ε/2 Σ|D⁺u|² is −ε Δ_h u (5-point Laplacian).
                let lap = (u[off + j * nx + ip]
                    + u[off + j * nx + im]
                    + u[off + jp * nx + i]
                    + u[off + jm * nx + i]
                    - 4.0 * v)
                    / (h * h);
                out[k] = (v - uk[k]) / p.tau - p.epsilon * lap - v / (p.epsilon * p.omega);
            }
        }
    }
}

fn project_cells(set: &ConstraintSet, u: &mut [f64], n: usize, m: usize) {
    for k in 0..n {
        let q = [u[k], if m == 2 { u[n + k] } else { 0.0 }];
        let r = brute_project(set, q);
        u[k] = r[0];
        if m == 2 {
            u[n + k] = r[1];
        }
    }
}

/// Projected gradient descent on the time-step objective with step
/// `step_frac·τ`, stopped once the projected-gradient residual
/// `‖u − P(u − τ∇F)‖∞` drops below `residual`. Returns the minimizer and the
/// iteration count.
pub fn pgd_minimizer(
    uk: &PhaseField,
    set: &ConstraintSet,
    p: &SolverParams,
    step_frac: f64,
    residual: f64,
    max_iter: usize,
) -> (PhaseField, usize) {
    let g = *uk.grid();
    let (nx, ny, m, h) = (g.nx, g.ny, uk.m(), g.h());
    let n = nx * ny;
    let base = uk.data().to_vec();
    let mut u = base.clone();
    let mut grad = vec![0.0; u.len()];
    let mut trial = vec![0.0; u.len()];
    let step = step_frac * p.tau;
    let mut it = 0;
    while it < max_iter {
        objective_gradient(&u, &base, nx, ny, m, h, p, &mut grad);
        if it % 1000 == 0 {
            for (t, (a, b)) in trial.iter_mut().zip(u.iter().zip(&grad)) {
                *t = a - p.tau * b;
            }
            project_cells(set, &mut trial, n, m);
            let r = trial
                .iter()
                .zip(&u)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if r < residual {
                break;
            }
        }
        for (a, b) in u.iter_mut().zip(&grad) {
            *a -= step * b;
        }
        project_fast(set, &mut u, n, m);
        it += 1;
    }
    (PhaseField::from_planes(g, m, u).unwrap(), it)
}

/// Closed-form projections for the interval and disk only.
fn project_fast(set: &ConstraintSet, u: &mut [f64], n: usize, m: usize) {
    match *set {
        ConstraintSet::Interval { lo, hi } => {
            for v in u.iter_mut() {
                *v = v.max(lo).min(hi);
            }
        }
        ConstraintSet::Disk { radius } => {
            for k in 0..n {
                let r = u[k].hypot(u[n + k]);
                if r > radius {
                    u[k] *= radius / r;
                    u[n + k] *= radius / r;
                }
            }
        }
        _ => project_cells(set, u, n, m),
    }
}

/// `∫_a^b f` by composite Gauss–Legendre (5 points) on `panels` panels.
pub fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    const X: [f64; 5] = [
        0.0,
        -0.538_469_310_105_683_1,
        0.538_469_310_105_683_1,
        -0.906_179_845_938_664,
        0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let hp = (b - a) / panels as f64;
    let mut s = 0.0;
    for i in 0..panels {
        let mid = a + (i as f64 + 0.5) * hp;
        for (x, w) in X.iter().zip(W) {
            s += w * f(mid + 0.5 * hp * x);
        }
    }
    0.5 * hp * s
}

/// Interfacial energy `∫ √(2W(u)) du` of a straight path from `−1` to `1`
/// for `W = (1 − u²)/(2ω)`.
pub fn straight_path_energy(omega: f64) -> f64 {
    // u = sin t removes the endpoint singularity of the derivative.
    gauss_legendre(
        |t| ((1.0 - t.sin().powi(2)) / omega).max(0.0).sqrt() * t.cos(),
        -std::f64::consts::FRAC_PI_2,
        std::f64::consts::FRAC_PI_2,
        64,
    )
}

/// Compact profile width `∫ (2W)^{-1/2} du` over `(−1, 1)`.
pub fn straight_path_width(omega: f64) -> f64 {
    gauss_legendre(
        |t| t.cos() / ((1.0 - t.sin().powi(2)) / omega).sqrt().max(1e-300),
        -std::f64::consts::FRAC_PI_2 + 1e-12,
        std::f64::consts::FRAC_PI_2 - 1e-12,
        64,
    )
}

pub fn desk_grid() -> GridSpec {
    GridSpec::square(128, 2.0).unwrap()
}
