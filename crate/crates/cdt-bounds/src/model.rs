//! Problem data and ellipsoid geometry.
//!
//! A problem instance asks for the minimum of `xᵀQx + qᵀx` over the
//! intersection of the unit ball `‖x‖ ≤ 1` and the ellipsoid
//! `E = {x : xᵀAx + aᵀx ≤ a0}` with `A` positive definite. The bound theory
//! additionally assumes `E` has interior points inside the ball:
//! `ℓ_a = min_{‖x‖≤1} xᵀAx + aᵀx < a0`.
//!
//! Besides the instance type this module owns the geometric primitives the
//! bound drivers build on: the multiplier bound `λ̂` for the dual search,
//! Euclidean projection onto `∂E`, supporting-hyperplane cuts of `E`, and the
//! corrected perturbation step that slides a cut anchor along the boundary.

use nalgebra::{DMatrix, DVector};

use crate::linalg;
use crate::trs::{self, TrsProblem};
use crate::{CdtError, Result};

/// Relative symmetry tolerance for instance matrices.
const SYM_TOL: f64 = 1e-10;
/// `A` counts as positive definite when `λ_min(A) > PD_TOL·‖A‖`.
const PD_TOL: f64 = 1e-12;
/// Relative band around `a0` within which a point counts as lying on `∂E`.
const BOUNDARY_TOL: f64 = 1e-8;
/// Relative band within which a slightly-off anchor is silently corrected
/// back onto `∂E` (rounded coordinates from logs land here).
const SNAP_BAND: f64 = 1e-3;
/// Margin in the interior-assumption test `ℓ_a < a0 − 1e-10·(1+|a0|)`.
const INTERIOR_MARGIN: f64 = 1e-10;
/// Relative tolerance of the cut-activity test.
const ACTIVITY_TOL: f64 = 1e-6;

/// One problem instance: objective `(Q, q)`, ellipsoid `(A, a, a0)`.
///
/// Construction validates symmetry, positive definiteness of `A`, and
/// finiteness. It does **not** require the interior assumption, so the
/// assumption check itself can be exercised; file loading and the bound
/// drivers do require it.
#[derive(Debug, Clone)]
pub struct CdtInstance {
    q_mat: DMatrix<f64>,
    q_lin: DVector<f64>,
    a_mat: DMatrix<f64>,
    a_lin: DVector<f64>,
    a0: f64,
    /// Cached eigendecomposition of `A` (needed for validation anyway; reused
    /// by the boundary projection).
    a_eig: trs::Eig,
}

/// Result of the interior-assumption check.
#[derive(Debug, Clone)]
pub struct InteriorCheck {
    /// `ℓ_a = min_{‖x‖≤1} xᵀAx + aᵀx`.
    pub ell_a: f64,
    /// A minimizer attaining `ℓ_a` (a guaranteed feasible point when the
    /// assumption holds).
    pub argmin_z: DVector<f64>,
    /// Whether `ℓ_a < a0 − 1e-10·(1+|a0|)`.
    pub satisfied: bool,
}

/// Ellipsoid summary: `ℓ_a`, its minimizer, and the dual search bound `λ̂`.
#[derive(Debug, Clone)]
pub struct EllipsoidInfo {
    pub ell_a: f64,
    pub argmin_z: DVector<f64>,
    pub lambda_hat: f64,
}

/// A supporting hyperplane of `E`: anchor `x̄ ∈ ∂E` and outward normal
/// `2Ax̄ + a`. Every point of `E` satisfies `normalᵀ(x − anchor) ≤ 0`.
#[derive(Debug, Clone)]
pub struct Cut {
    anchor: DVector<f64>,
    normal: DVector<f64>,
}

impl Cut {
    /// Anchor point on `∂E`.
    pub fn anchor(&self) -> &DVector<f64> {
        &self.anchor
    }

    /// Outward normal `2A·anchor + a` (not normalized).
    pub fn normal(&self) -> &DVector<f64> {
        &self.normal
    }

    /// Signed offset `normalᵀ(x − anchor)`: `≤ 0` on the feasible side.
    pub fn offset(&self, x: &DVector<f64>) -> f64 {
        self.normal.dot(x) - self.normal.dot(&self.anchor)
    }

    /// Whether the cut is active (holds with equality) at `x`, at tolerance
    /// `1e-6·(1 + ‖normal‖·‖x − anchor‖)`.
    pub fn is_active_at(&self, x: &DVector<f64>) -> bool {
        let scale = 1.0 + self.normal.norm() * (x - &self.anchor).norm();
        self.offset(x).abs() <= ACTIVITY_TOL * scale
    }
}

impl CdtInstance {
    /// Validates and wraps instance data.
    pub fn new(
        q_mat: DMatrix<f64>,
        q_lin: DVector<f64>,
        a_mat: DMatrix<f64>,
        a_lin: DVector<f64>,
        a0: f64,
    ) -> Result<Self> {
        let n = q_mat.nrows();
        if n == 0 {
            return Err(CdtError::Validation("dimension must be at least 1".into()));
        }
        if !q_mat.is_square() || !a_mat.is_square() || a_mat.nrows() != n {
            return Err(CdtError::Validation(
                "objective and ellipsoid matrices must be square with equal dimension".into(),
            ));
        }
        if q_lin.len() != n || a_lin.len() != n {
            return Err(CdtError::Validation(
                "linear terms must match the matrix dimension".into(),
            ));
        }
        let finite = q_mat.iter().chain(a_mat.iter()).all(|v| v.is_finite())
            && q_lin.iter().chain(a_lin.iter()).all(|v| v.is_finite())
            && a0.is_finite();
        if !finite {
            return Err(CdtError::Validation("non-finite entry in instance data".into()));
        }
        if !linalg::is_symmetric(&q_mat, SYM_TOL) {
            return Err(CdtError::Validation(
                "objective matrix is not symmetric within 1e-10 relative tolerance".into(),
            ));
        }
        if !linalg::is_symmetric(&a_mat, SYM_TOL) {
            return Err(CdtError::Validation(
                "ellipsoid matrix is not symmetric within 1e-10 relative tolerance".into(),
            ));
        }
        let a_eig = trs::eig_of(&a_mat)?;
        if !(a_eig.vals[0] > PD_TOL * a_eig.scale) {
            return Err(CdtError::Validation(format!(
                "ellipsoid matrix is not positive definite: smallest eigenvalue {:.3e}",
                a_eig.vals[0]
            )));
        }
        Ok(CdtInstance {
            q_mat,
            q_lin,
            a_mat,
            a_lin,
            a0,
            a_eig,
        })
    }

    /// Dimension `n`.
    pub fn dim(&self) -> usize {
        self.q_mat.nrows()
    }

    /// Objective matrix `Q`.
    pub fn q_mat(&self) -> &DMatrix<f64> {
        &self.q_mat
    }

    /// Objective linear term `q`.
    pub fn q_lin(&self) -> &DVector<f64> {
        &self.q_lin
    }

    /// Ellipsoid matrix `A`.
    pub fn a_mat(&self) -> &DMatrix<f64> {
        &self.a_mat
    }

    /// Ellipsoid linear term `a`.
    pub fn a_lin(&self) -> &DVector<f64> {
        &self.a_lin
    }

    /// Ellipsoid level `a0`.
    pub fn a0(&self) -> f64 {
        self.a0
    }

    /// Objective value `xᵀQx + qᵀx`.
    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        (x.transpose() * &self.q_mat * x)[(0, 0)] + self.q_lin.dot(x)
    }

    /// Ellipsoid value `xᵀAx + aᵀx`.
    pub fn ellipsoid_value(&self, x: &DVector<f64>) -> f64 {
        (x.transpose() * &self.a_mat * x)[(0, 0)] + self.a_lin.dot(x)
    }

    /// Ellipsoid gradient `2Ax + a` (the outward normal of `∂E` at boundary
    /// points).
    pub fn ellipsoid_grad(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a_mat * x * 2.0 + &self.a_lin
    }

    /// Whether `x` is feasible for the full problem within the standard
    /// bands: `‖x‖ ≤ 1 + tol` and ellipsoid value `≤ a0 + tol·(1+|a0|)`.
    pub fn is_feasible(&self, x: &DVector<f64>, tol: f64) -> bool {
        x.norm() <= 1.0 + tol && self.ellipsoid_value(x) <= self.a0 + tol * (1.0 + self.a0.abs())
    }

    /// Minimizes the ellipsoid function over the unit ball and compares
    /// against `a0`: the bound theory requires `ℓ_a < a0` strictly.
    pub fn check_interior_assumption(&self) -> Result<InteriorCheck> {
        let p = TrsProblem::new(self.a_mat.clone(), self.a_lin.clone(), 1.0)?;
        let sol = trs::trs_global(&p)?;
        let satisfied = sol.value < self.a0 - INTERIOR_MARGIN * (1.0 + self.a0.abs());
        Ok(InteriorCheck {
            ell_a: sol.value,
            argmin_z: sol.x,
            satisfied,
        })
    }

    /// Upper bound `λ̂` for the dual multiplier search:
    /// `(max_{‖x‖≤1} f − min_{‖x‖≤1} f) / (a0 − ℓ_a)`.
    ///
    /// Errors when the interior assumption fails (the denominator would be
    /// nonpositive).
    pub fn lambda_hat(&self) -> Result<f64> {
        Ok(self.ellipsoid_info()?.lambda_hat)
    }

    /// Interior check plus `λ̂` in one go; errors when the interior
    /// assumption fails.
    pub fn ellipsoid_info(&self) -> Result<EllipsoidInfo> {
        let check = self.check_interior_assumption()?;
        if !check.satisfied {
            return Err(CdtError::InteriorAssumption {
                ell_a: check.ell_a,
                a0: self.a0,
            });
        }
        let pmin = trs::trs_global(&TrsProblem::new(self.q_mat.clone(), self.q_lin.clone(), 1.0)?)?;
        let pmax = trs::trs_global(&TrsProblem::new(-self.q_mat.clone(), -self.q_lin.clone(), 1.0)?)?;
        let spread = -pmax.value - pmin.value;
        let lambda_hat = (spread / (self.a0 - check.ell_a)).max(0.0);
        Ok(EllipsoidInfo {
            ell_a: check.ell_a,
            argmin_z: check.argmin_z,
            lambda_hat,
        })
    }

    /// Center of the ellipsoid, `−A⁻¹a/2` (the unconstrained minimizer of
    /// the ellipsoid function).
    pub fn ellipsoid_center(&self) -> DVector<f64> {
        let at = self.a_eig.vecs.transpose() * &self.a_lin;
        let zt = DVector::from_fn(self.dim(), |i, _| -at[i] / (2.0 * self.a_eig.vals[i]));
        &self.a_eig.vecs * zt
    }

    /// Projection of a point strictly outside `E` onto `∂E`, in the metric
    /// induced by `A`: the result is the point where the ray from the
    /// ellipsoid center through `v` crosses the boundary. (The minimizer of
    /// `(x−v)ᵀA(x−v)` over `E` lies on that ray, so this is the natural
    /// projection for the ellipsoid geometry and it reproduces the reference
    /// anchor trajectories.)
    ///
    /// Closed form: with center `z_c` and `d = v − z_c`, the boundary point
    /// is `z_c + t·d` with `t = √((a0 − ℓ(z_c)) / dᵀAd)`.
    pub fn project_to_boundary(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        if v.len() != self.dim() {
            return Err(CdtError::InvalidParameter("dimension mismatch".into()));
        }
        let start = self.ellipsoid_value(v);
        if !(start > self.a0) {
            return Err(CdtError::InvalidParameter(format!(
                "projection requires a point strictly outside the ellipsoid \
                 (value {start} ≤ a0 {})",
                self.a0
            )));
        }
        let center = self.ellipsoid_center();
        let depth = self.a0 - self.ellipsoid_value(&center);
        if !(depth > 0.0) {
            return Err(CdtError::Validation(
                "ellipsoid has empty interior (a0 below the minimum of the \
                 ellipsoid function)"
                    .into(),
            ));
        }
        let d = v - &center;
        let dad = d.dot(&(&self.a_mat * &d));
        if !(dad > 0.0) {
            return Err(CdtError::Numeric(
                "degenerate projection ray from the ellipsoid center".into(),
            ));
        }
        let t = (depth / dad).sqrt();
        let x = &center + &d * t;
        let resid = (self.ellipsoid_value(&x) - self.a0).abs();
        if resid > BOUNDARY_TOL * (1.0 + self.a0.abs()) {
            return Err(CdtError::Numeric(format!(
                "projection boundary residual {resid:.3e} too large"
            )));
        }
        Ok(x)
    }

    /// Newton-corrects a point within the snap band back onto `∂E` along the
    /// local normal direction; rejects points farther away.
    fn snap_to_boundary(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let band = SNAP_BAND * (1.0 + self.a0.abs());
        let tol = BOUNDARY_TOL * (1.0 + self.a0.abs());
        let mut y = x.clone();
        let mut resid = self.ellipsoid_value(&y) - self.a0;
        if resid.abs() > band {
            return Err(CdtError::InvalidParameter(format!(
                "anchor is not on the ellipsoid boundary (residual {resid:.3e})"
            )));
        }
        for _ in 0..8 {
            if resid.abs() <= tol {
                return Ok(y);
            }
            let c = self.ellipsoid_grad(&y);
            let cc = c.norm_squared();
            if cc <= 0.0 {
                break;
            }
            y -= &c * (resid / cc);
            resid = self.ellipsoid_value(&y) - self.a0;
        }
        if resid.abs() <= tol {
            Ok(y)
        } else {
            Err(CdtError::Numeric(format!(
                "boundary correction stalled at residual {resid:.3e}"
            )))
        }
    }

    /// Supporting-hyperplane cut of `E` anchored at a boundary point.
    ///
    /// Anchors within a small band of `∂E` (rounded coordinates) are first
    /// corrected onto the boundary along the local normal; anchors farther
    /// than `1e-3·(1+|a0|)` are rejected.
    pub fn supporting_cut(&self, xbar: &DVector<f64>) -> Result<Cut> {
        if xbar.len() != self.dim() {
            return Err(CdtError::InvalidParameter("dimension mismatch".into()));
        }
        let anchor = self.snap_to_boundary(xbar)?;
        let normal = self.ellipsoid_grad(&anchor);
        if normal.norm() <= 1e-12 * (1.0 + linalg::max_abs(&self.a_mat)) {
            return Err(CdtError::Numeric(
                "degenerate cut: the ellipsoid gradient vanishes at the anchor".into(),
            ));
        }
        Ok(Cut { anchor, normal })
    }

    /// The smallest `γ > 0` for which `x̄ + η(v − x̄) − γ(2Ax̄ + a)` lands on
    /// `∂E`, from the explicit scalar quadratic; `None` when no positive real
    /// root exists.
    pub fn boundary_correction_gamma(
        &self,
        xbar: &DVector<f64>,
        v: &DVector<f64>,
        eta: f64,
    ) -> Result<Option<f64>> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(CdtError::InvalidParameter(format!(
                "step size must lie in (0, 1], got {eta}"
            )));
        }
        if xbar.len() != self.dim() || v.len() != self.dim() {
            return Err(CdtError::InvalidParameter("dimension mismatch".into()));
        }
        if (v - xbar).norm() == 0.0 {
            return Err(CdtError::InvalidParameter(
                "perturbation target coincides with the anchor".into(),
            ));
        }
        let resid = (self.ellipsoid_value(xbar) - self.a0).abs();
        if resid > 1e-6 * (1.0 + self.a0.abs()) {
            return Err(CdtError::InvalidParameter(format!(
                "anchor is not on the ellipsoid boundary (residual {resid:.3e})"
            )));
        }
        let c = self.ellipsoid_grad(xbar);
        let base = xbar + (v - xbar) * eta;
        // ellipsoid_value(base − γc) = value(base) − γ·(2·baseᵀAc + aᵀc) + γ²·cᵀAc.
        // The constant term is taken relative to the anchor's own value: in
        // exact arithmetic the anchor sits at a0, and anchoring the quadratic
        // this way keeps the η → 0 limit (γ → 0) from being swamped by the
        // anchor's ~1e-16 boundary residual, whose sign is noise.
        let ac = &self.a_mat * &c;
        let alpha = c.dot(&ac);
        let beta = -(2.0 * base.dot(&ac) + self.a_lin.dot(&c));
        let kappa = self.ellipsoid_value(&base) - self.ellipsoid_value(xbar);
        let gamma = linalg::real_quadratic_roots(alpha, beta, kappa)
            .into_iter()
            .find(|&g| g >= 0.0);
        Ok(gamma)
    }

    /// Moves a cut anchor along the boundary: steps toward `v` (which must
    /// lie on the cut hyperplane) by `η` and corrects back onto `∂E` along
    /// the old normal. `None` when the correction step does not exist at
    /// this `η`.
    pub fn perturb_cut(
        &self,
        cut: &Cut,
        v: &DVector<f64>,
        eta: f64,
    ) -> Result<Option<DVector<f64>>> {
        if !cut.is_active_at(v) {
            return Err(CdtError::InvalidParameter(
                "perturbation target does not lie on the cut hyperplane".into(),
            ));
        }
        let gamma = match self.boundary_correction_gamma(&cut.anchor, v, eta)? {
            Some(g) => g,
            None => return Ok(None),
        };
        let x_tilde = &cut.anchor + (v - &cut.anchor) * eta - &cut.normal * gamma;
        // The quadratic root puts the point on ∂E up to rounding; polish and
        // verify so the Cut invariant holds for downstream use.
        let snapped = self.snap_to_boundary(&x_tilde)?;
        Ok(Some(snapped))
    }
}
