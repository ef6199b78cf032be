//! Independent brute-force oracles for the two-dimensional test instances.
//!
//! Everything here deliberately avoids the library's solver machinery: grids
//! in polar coordinates, dense boundary sampling, and closed-form 2×2 algebra
//! only. Boundary curves and corner points are enumerated exactly on top of
//! the grids because a grid alone cannot resolve a minimum sitting on a
//! constraint corner to the tolerances the comparisons use.

use nalgebra::{DMatrix, DVector};

use cdt_bounds::lagrangian::{satisfies_cut, CutSet};
use cdt_bounds::model::{CdtInstance, Cut};

/// Two-dimensional reference instance: indefinite objective, axis-aligned
/// ellipsoid, both constraints active at the optimum (value −4).
pub fn example1() -> CdtInstance {
    CdtInstance::new(
        DMatrix::from_row_slice(2, 2, &[-4.0, 1.0, 1.0, -2.0]),
        DVector::from_vec(vec![1.0, 1.0]),
        DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 1.0]),
        DVector::from_vec(vec![0.0, 0.0]),
        2.0,
    )
    .unwrap()
}

fn quad_at(m: &DMatrix<f64>, lin: &DVector<f64>, x: f64, y: f64) -> f64 {
    m[(0, 0)] * x * x + 2.0 * m[(0, 1)] * x * y + m[(1, 1)] * y * y + lin[0] * x + lin[1] * y
}

/// Minimum of `xᵀHx + gᵀx` over the unit disk by polar grid (the outermost
/// ring lies exactly on the circle).
pub fn ball_min_oracle(h: &DMatrix<f64>, g: &DVector<f64>, nr: usize, nt: usize) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..=nr {
        let r = i as f64 / nr as f64;
        let (step_c, step_s) = ((std::f64::consts::TAU / nt as f64).cos(), (std::f64::consts::TAU / nt as f64).sin());
        let (mut c, mut s) = (1.0f64, 0.0f64);
        for _ in 0..nt {
            let v = quad_at(h, g, r * c, r * s);
            if v < best {
                best = v;
            }
            let (nc, ns) = (c * step_c - s * step_s, s * step_c + c * step_s);
            c = nc;
            s = ns;
        }
    }
    best
}

/// Exact sphere ∩ ellipsoid-boundary corner points: finds sign changes of
/// the ellipsoid residual along the unit circle and bisects each bracket.
fn sphere_ellipsoid_corners(inst: &CdtInstance, nt: usize) -> Vec<(f64, f64)> {
    let a0 = inst.a0();
    let ell = |theta: f64| {
        let (c, s) = (theta.cos(), theta.sin());
        quad_at(inst.a_mat(), inst.a_lin(), c, s) - a0
    };
    let mut corners = Vec::new();
    let step = std::f64::consts::TAU / nt as f64;
    let mut prev = ell(0.0);
    for j in 1..=nt {
        let theta = j as f64 * step;
        let cur = ell(theta);
        if (prev <= 0.0) != (cur <= 0.0) {
            let (mut lo, mut hi) = (theta - step, theta);
            let mut flo = prev;
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                let fm = ell(mid);
                if (flo <= 0.0) != (fm <= 0.0) {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            let t = 0.5 * (lo + hi);
            corners.push((t.cos(), t.sin()));
        }
        prev = cur;
    }
    corners
}

/// Minimum of the instance objective over the feasible set (unit disk ∩
/// ellipsoid) by polar grid plus exact boundary treatment: the outer ring,
/// a dense parametrization of the ellipsoid boundary clipped to the disk,
/// and bisection-refined corner points.
pub fn cdt_optimum_oracle(inst: &CdtInstance, nr: usize, nt: usize) -> f64 {
    let a0 = inst.a0();
    let q = inst.q_mat();
    let ql = inst.q_lin();
    let am = inst.a_mat();
    let al = inst.a_lin();
    let mut best = f64::INFINITY;
    let step = std::f64::consts::TAU / nt as f64;
    let (step_c, step_s) = (step.cos(), step.sin());
    for i in 0..=nr {
        let r = i as f64 / nr as f64;
        let (mut c, mut s) = (1.0f64, 0.0f64);
        for _ in 0..nt {
            let (x, y) = (r * c, r * s);
            if quad_at(am, al, x, y) <= a0 {
                let v = quad_at(q, ql, x, y);
                if v < best {
                    best = v;
                }
            }
            let (nc, ns) = (c * step_c - s * step_s, s * step_c + c * step_s);
            c = nc;
            s = ns;
        }
    }

    // Ellipsoid boundary: center-form parametrization clipped to the disk.
    let center = inst.ellipsoid_center();
    let shifted_level = a0 + (center.transpose() * am * &center)[(0, 0)] + al.dot(&center) * 0.0
        + (al.dot(&center)) * 0.0;
    // (x−z)ᵀA(x−z) = xᵀAx + aᵀx + zᵀAz when a = −2Az, so the boundary level
    // in center form is a0 + zᵀAz.
    let level = a0 + (center.transpose() * am * &center)[(0, 0)];
    let _ = shifted_level;
    if level > 0.0 {
        let eig = {
            let sym = (am + am.transpose()) * 0.5;
            sym.symmetric_eigen()
        };
        let v = eig.eigenvectors;
        let d = eig.eigenvalues;
        for j in 0..=(4 * nt) {
            let theta = j as f64 * std::f64::consts::TAU / (4 * nt) as f64;
            let u0 = (level / d[0]).sqrt() * theta.cos();
            let u1 = (level / d[1]).sqrt() * theta.sin();
            let x = &center + v.column(0) * u0 + v.column(1) * u1;
            if x.norm_squared() <= 1.0 {
                let val = quad_at(q, ql, x[0], x[1]);
                if val < best {
                    best = val;
                }
            }
        }
    }

    for (x, y) in sphere_ellipsoid_corners(inst, 4 * nt) {
        let val = quad_at(q, ql, x, y);
        if val < best {
            best = val;
        }
    }
    best
}

/// Minimum of the penalized objective `xᵀ(Q+λA)x + (q+λa)ᵀx − λa0` over the
/// unit disk intersected with the cut halfspaces, by polar grid plus exact
/// chord treatment: dense inclusive sampling of each cut's chord, the
/// closed-form interior minimum along each chord, and the chord–chord
/// intersection point.
pub fn relaxation_min_oracle(
    inst: &CdtInstance,
    lambda: f64,
    cuts: &CutSet,
    nr: usize,
    nt: usize,
) -> f64 {
    let m = (inst.q_mat() + inst.a_mat() * lambda).clone();
    let lin = inst.q_lin() + inst.a_lin() * lambda;
    let shift = -lambda * inst.a0();
    let feasible = |x: &DVector<f64>| cuts.cuts().iter().all(|c| satisfies_cut(c, x));
    let mut best = f64::INFINITY;
    let mut consider = |x: DVector<f64>| {
        if x.norm_squared() <= 1.0 + 1e-12 && feasible(&x) {
            let v = quad_at(&m, &lin, x[0], x[1]) + shift;
            if v < best {
                best = v;
            }
        }
    };

    let step = std::f64::consts::TAU / nt as f64;
    let (step_c, step_s) = (step.cos(), step.sin());
    for i in 0..=nr {
        let r = i as f64 / nr as f64;
        let (mut c, mut s) = (1.0f64, 0.0f64);
        for _ in 0..nt {
            consider(DVector::from_vec(vec![r * c, r * s]));
            let (nc, ns) = (c * step_c - s * step_s, s * step_c + c * step_s);
            c = nc;
            s = ns;
        }
    }

    let chord_frame = |cut: &Cut| -> Option<(DVector<f64>, DVector<f64>, f64)> {
        let n = cut.normal();
        let nn = n.norm();
        if nn == 0.0 {
            return None;
        }
        let nh = n / nn;
        let p = cut.anchor() - &nh * nh.dot(cut.anchor());
        let half = 1.0 - p.norm_squared();
        if half < 0.0 {
            return None;
        }
        let d = DVector::from_vec(vec![-nh[1], nh[0]]);
        Some((p, d, half.sqrt()))
    };

    for cut in cuts.cuts() {
        let Some((p, d, tmax)) = chord_frame(cut) else {
            continue;
        };
        let samples = 4001;
        for k in 0..samples {
            let t = -tmax + 2.0 * tmax * k as f64 / (samples - 1) as f64;
            consider(&p + &d * t);
        }
        // Interior stationary point of the penalized objective on the chord.
        let curv = (d.transpose() * &m * &d)[(0, 0)];
        if curv.abs() > 1e-300 {
            let slope = (d.transpose() * &m * &p)[(0, 0)] * 2.0 + lin.dot(&d);
            let t = (-(slope) / (2.0 * curv)).clamp(-tmax, tmax);
            consider(&p + &d * t);
        }
    }

    if cuts.len() == 2 {
        let (c1, c2) = (&cuts.cuts()[0], &cuts.cuts()[1]);
        let (n1, n2) = (c1.normal(), c2.normal());
        let det = n1[0] * n2[1] - n1[1] * n2[0];
        let scale = n1.norm() * n2.norm();
        if det.abs() > 1e-12 * scale.max(1e-300) {
            let b1 = n1.dot(c1.anchor());
            let b2 = n2.dot(c2.anchor());
            let x = (b1 * n2[1] - b2 * n1[1]) / det;
            let y = (b2 * n1[0] - b1 * n2[0]) / det;
            consider(DVector::from_vec(vec![x, y]));
        }
    }
    best
}

/// A boundary-restricted local minimum of `xᵀHx + gᵀx` on the unit circle.
pub struct SphereLocalMin {
    /// The point.
    pub x: DVector<f64>,
    /// Objective value.
    pub value: f64,
    /// Radial multiplier `−(2Hx+g)ᵀx/2`; positive when the point is a local
    /// minimum of the disk problem (objective increases inward).
    pub mu: f64,
}

/// Dense scan of the unit circle for strict local minima of the quadratic.
pub fn sphere_local_minima(
    h: &DMatrix<f64>,
    g: &DVector<f64>,
    n_angles: usize,
) -> Vec<SphereLocalMin> {
    let step = std::f64::consts::TAU / n_angles as f64;
    let (step_c, step_s) = (step.cos(), step.sin());
    let mut values = Vec::with_capacity(n_angles);
    let (mut c, mut s) = (1.0f64, 0.0f64);
    let mut points = Vec::with_capacity(n_angles);
    for _ in 0..n_angles {
        values.push(quad_at(h, g, c, s));
        points.push((c, s));
        let (nc, ns) = (c * step_c - s * step_s, s * step_c + c * step_s);
        c = nc;
        s = ns;
    }
    let mut out = Vec::new();
    for i in 0..n_angles {
        let prev = values[(i + n_angles - 1) % n_angles];
        let next = values[(i + 1) % n_angles];
        if values[i] < prev && values[i] < next {
            let (cx, cy) = points[i];
            let x = DVector::from_vec(vec![cx, cy]);
            let grad = h * &x * 2.0 + g;
            out.push(SphereLocalMin {
                value: values[i],
                mu: -grad.dot(&x) / 2.0,
                x,
            });
        }
    }
    out
}

/// Smallest eigenvalue of a symmetric 2×2 matrix in closed form.
pub fn min_eig_2x2(m: &DMatrix<f64>) -> f64 {
    let (a, b, c) = (m[(0, 0)], 0.5 * (m[(0, 1)] + m[(1, 0)]), m[(1, 1)]);
    let mean = 0.5 * (a + c);
    let radius = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    mean - radius
}
