//! Small dense linear-algebra helpers shared across modules.

use nalgebra::{DMatrix, DVector};

/// Largest absolute entry of a matrix (zero for an empty matrix).
pub(crate) fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, &v| acc.max(v.abs()))
}

/// True when `m` is square and symmetric to the given relative tolerance
/// (absolute on matrices with entries at or below unit scale).
pub(crate) fn is_symmetric(m: &DMatrix<f64>, rel_tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = 1.0_f64.max(max_abs(m));
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > rel_tol * scale {
                return false;
            }
        }
    }
    true
}

/// Symmetric part `(M + Mᵀ)/2`; used to keep products of symmetric matrices
/// exactly symmetric despite rounding.
pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mt = m.transpose();
    (m + mt) * 0.5
}

/// Like `signum`, but maps `±0.0` to `+1.0`, the sign convention used by
/// Householder reflectors and the cancellation-free quadratic formula.
fn signum_nonzero(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// One Householder reflector, stored by its unit-free vector `v` with the
/// convention `H = I − 2 v vᵀ / (vᵀv)`.
struct Reflector {
    v: DVector<f64>,
}

impl Reflector {
    /// Reflector sending `x` to `∓‖x‖ e₁` (sign chosen to avoid cancellation).
    /// Returns `None` when `x` is numerically zero, which callers treat as
    /// rank deficiency.
    fn annihilating(x: &DVector<f64>) -> Option<Reflector> {
        let norm = x.norm();
        if norm <= f64::EPSILON * (x.len() as f64) {
            return None;
        }
        let mut v = x.clone();
        v[0] += signum_nonzero(x[0]) * norm;
        Some(Reflector { v })
    }

    fn apply(&self, x: &mut DVector<f64>) {
        let vtv = self.v.dot(&self.v);
        if vtv > 0.0 {
            let coeff = 2.0 * self.v.dot(x) / vtv;
            x.axpy(-coeff, &self.v, 1.0);
        }
    }
}

/// Orthonormal basis (as matrix columns) of the orthogonal complement of
/// `span(vs)` in `ℝⁿ`, built from Householder reflectors, so the columns are
/// orthonormal to machine precision.
///
/// Returns `None` when the input vectors are numerically linearly dependent
/// (relative tolerance `1e-10` on the triangularized column) or any of them is
/// numerically zero. With `k` independent inputs the result has `n − k`
/// columns; `n − k = 0` yields an `n × 0` matrix.
pub(crate) fn orthonormal_complement(vs: &[DVector<f64>]) -> Option<DMatrix<f64>> {
    let k = vs.len();
    assert!(k >= 1, "need at least one vector");
    let n = vs[0].len();
    assert!(vs.iter().all(|v| v.len() == n), "dimension mismatch");
    assert!(k <= n, "more vectors than dimensions");

    // Householder QR of the n×k matrix [v₀ … v_{k−1}], reflectors kept.
    let mut cols: Vec<DVector<f64>> = vs.to_vec();
    let scale = cols.iter().map(|c| c.norm()).fold(0.0_f64, f64::max);
    let mut reflectors: Vec<Reflector> = Vec::with_capacity(k);
    for j in 0..k {
        // Reflector `i` acts on the trailing subvector starting at row `i`.
        for (i, refl) in reflectors.iter().enumerate() {
            let mut tail = cols[j].rows(i, n - i).into_owned();
            refl.apply(&mut tail);
            cols[j].rows_mut(i, n - i).copy_from(&tail);
        }
        let tail = cols[j].rows(j, n - j).into_owned();
        if tail.norm() <= 1e-10 * scale.max(1e-300) {
            return None; // dependent or zero column
        }
        let refl = Reflector::annihilating(&tail)?;
        reflectors.push(refl);
    }

    // Complement columns: Q e_j for j = k..n, with Q = H₀ H₁ … H_{k−1}.
    let mut out = DMatrix::<f64>::zeros(n, n - k);
    for (c, j) in (k..n).enumerate() {
        let mut e = DVector::<f64>::zeros(n);
        e[j] = 1.0;
        for (i, refl) in reflectors.iter().enumerate().rev() {
            let mut tail = e.rows(i, n - i).into_owned();
            refl.apply(&mut tail);
            e.rows_mut(i, n - i).copy_from(&tail);
        }
        out.set_column(c, &e);
    }
    Some(out)
}

/// Safeguarded Newton/bisection for a continuous function with a sign change
/// on `[lo, hi]`: `f(lo)` has sign `sign_lo` (`+1` or `-1`) and the opposite
/// sign at `hi`. Bracket endpoints themselves are never evaluated, so poles
/// at the ends are tolerated; a non-finite interior evaluation is treated as
/// that side of the sign change.
pub(crate) fn scalar_root(
    f: &mut dyn FnMut(f64) -> f64,
    df: &mut dyn FnMut(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    sign_lo: f64,
) -> f64 {
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = f(x);
        if fx == 0.0 || !fx.is_finite() {
            if !fx.is_finite() {
                // Landed on a pole: shrink toward the interior and continue.
                if fx.is_infinite() && fx * sign_lo > 0.0 {
                    lo = x;
                } else {
                    hi = x;
                }
                x = 0.5 * (lo + hi);
                continue;
            }
            return x;
        }
        if fx * sign_lo > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = df(x);
        let newton = x - fx / d;
        x = if d != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if !(hi - lo > f64::EPSILON * (lo.abs().max(hi.abs()).max(1.0))) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Real roots of `a·t² + b·t + c = 0`, ascending, using the cancellation-free
/// quadratic formula; degenerate (near-linear, near-constant) cases handled.
pub(crate) fn real_quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    if a.abs() <= 1e-14 * scale {
        if b.abs() <= 1e-14 * scale {
            return Vec::new();
        }
        return vec![-c / b];
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    let q = -0.5 * (b + signum_nonzero(b) * sq);
    let mut roots = if q == 0.0 {
        vec![0.0, 0.0]
    } else {
        vec![q / a, c / q]
    };
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    roots
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn complement_of_axis_vector() {
        let v = DVector::from_vec(vec![0.0, 0.0, 3.0]);
        let q = orthonormal_complement(&[v.clone()]).unwrap();
        assert_eq!(q.shape(), (3, 2));
        let qtq = q.transpose() * &q;
        assert_relative_eq!(qtq, DMatrix::identity(2, 2), epsilon = 1e-14);
        let overlap = q.transpose() * v;
        assert!(overlap.norm() < 1e-14);
    }

    #[test]
    fn complement_of_two_vectors() {
        let v1 = DVector::from_vec(vec![1.0, 2.0, -1.0, 0.5]);
        let v2 = DVector::from_vec(vec![0.0, 1.0, 4.0, -2.0]);
        let q = orthonormal_complement(&[v1.clone(), v2.clone()]).unwrap();
        assert_eq!(q.shape(), (4, 2));
        let qtq = q.transpose() * &q;
        assert_relative_eq!(qtq, DMatrix::identity(2, 2), epsilon = 1e-13);
        assert!((q.transpose() * v1).norm() < 1e-12);
        assert!((q.transpose() * v2).norm() < 1e-12);
    }

    #[test]
    fn dependent_vectors_rejected() {
        let v1 = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let v2 = &v1 * -2.0;
        assert!(orthonormal_complement(&[v1, v2]).is_none());
    }

    #[test]
    fn full_span_gives_empty_basis() {
        let v1 = DVector::from_vec(vec![1.0, 0.0]);
        let v2 = DVector::from_vec(vec![1.0, 1.0]);
        let q = orthonormal_complement(&[v1, v2]).unwrap();
        assert_eq!(q.shape(), (2, 0));
    }

    #[test]
    fn quadratic_roots_match_factors() {
        // (t − 2)(t + 5) = t² + 3t − 10
        let r = real_quadratic_roots(1.0, 3.0, -10.0);
        assert_eq!(r.len(), 2);
        assert_relative_eq!(r[0], -5.0, epsilon = 1e-12);
        assert_relative_eq!(r[1], 2.0, epsilon = 1e-12);
        assert!(real_quadratic_roots(1.0, 0.0, 1.0).is_empty());
        let lin = real_quadratic_roots(0.0, 2.0, -8.0);
        assert_eq!(lin.len(), 1);
        assert_relative_eq!(lin[0], 4.0, epsilon = 1e-12);
    }
}
