//! Trust-region subproblem kernel.
//!
//! Everything in this crate reduces to minimizing a quadratic
//! `f(x) = xᵀHx + gᵀx` (no ½ factor) over a Euclidean ball `‖x‖ ≤ r`,
//! possibly after a change of variables. This module solves that problem
//! globally, finds the *local-nonglobal* minimizer when one exists, and
//! exposes the secular-equation evaluation both rely on.
//!
//! The solver follows the classical eigendecomposition route: with
//! `H = VΛVᵀ`, boundary KKT points are `x(μ) = −V (Λ + μI)⁻¹ Vᵀ g / 2` and
//! the multiplier is located by a safeguarded Newton/bisection iteration on
//! the norm equation `‖x(μ)‖ = r`. The degenerate ("hard") case, where the
//! gradient has no component in the bottom eigenspace and the pseudo-solution
//! falls inside the ball, is detected explicitly and reported as a solution
//! *family* `x = x_part + t·u₁`; callers that enumerate minimizers need the
//! whole family, not one member.

use nalgebra::{DMatrix, DVector};

use crate::linalg;
use crate::{CdtError, Result};

/// Relative symmetry tolerance accepted by [`TrsProblem::new`].
const SYM_TOL: f64 = 1e-10;
/// Relative threshold below which a bottom-eigenspace gradient component is
/// treated as zero when testing for the hard case.
const HARD_CASE_GRAD_TOL: f64 = 1e-10;
/// Relative width of the eigenvalue cluster counted as the bottom eigenspace.
const CLUSTER_TOL: f64 = 1e-10;
/// Tolerance (relative to `‖H‖`) for the tangent-space curvature certificate.
const CERT_TOL: f64 = 1e-8;
/// Minimal relative value separation for a local-nonglobal minimizer to be
/// reported as distinct from the global one.
const VALUE_SEP_TOL: f64 = 1e-10;

/// A trust-region subproblem: minimize `xᵀHx + gᵀx` subject to `‖x‖ ≤ r`.
#[derive(Debug, Clone)]
pub struct TrsProblem {
    h: DMatrix<f64>,
    g: DVector<f64>,
    radius: f64,
}

impl TrsProblem {
    /// Validates and wraps problem data.
    ///
    /// Requires `H` square and symmetric to a `1e-10` relative tolerance,
    /// `g` of matching dimension, `r > 0`, and all entries finite.
    pub fn new(h: DMatrix<f64>, g: DVector<f64>, radius: f64) -> Result<Self> {
        if !h.is_square() {
            return Err(CdtError::Validation(format!(
                "quadratic term must be square, got {}x{}",
                h.nrows(),
                h.ncols()
            )));
        }
        if h.nrows() == 0 {
            return Err(CdtError::Validation("dimension must be at least 1".into()));
        }
        if g.len() != h.nrows() {
            return Err(CdtError::Validation(format!(
                "linear term has length {} but the quadratic term is {}x{}",
                g.len(),
                h.nrows(),
                h.ncols()
            )));
        }
        if h.iter().any(|v| !v.is_finite()) || g.iter().any(|v| !v.is_finite()) {
            return Err(CdtError::Validation("non-finite entry in problem data".into()));
        }
        if !radius.is_finite() || radius <= 0.0 {
            return Err(CdtError::Validation(format!(
                "radius must be positive and finite, got {radius}"
            )));
        }
        if !linalg::is_symmetric(&h, SYM_TOL) {
            return Err(CdtError::Validation(
                "quadratic term is not symmetric within 1e-10 relative tolerance".into(),
            ));
        }
        Ok(TrsProblem { h, g, radius })
    }

    /// Problem dimension.
    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    /// Quadratic term.
    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }

    /// Linear term.
    pub fn g(&self) -> &DVector<f64> {
        &self.g
    }

    /// Ball radius.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Objective value `xᵀHx + gᵀx` at a point.
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        (x.transpose() * &self.h * x)[(0, 0)] + self.g.dot(x)
    }
}

/// A minimizer reported by the kernel.
#[derive(Debug, Clone)]
pub struct TrsSolution {
    /// The minimizer (one member of the family in the hard case).
    pub x: DVector<f64>,
    /// Objective value at `x`.
    pub value: f64,
    /// KKT multiplier of the ball constraint (`≥ 0`).
    pub mu: f64,
    /// Whether `‖x‖ = r` holds at the reported point.
    pub on_boundary: bool,
    /// Whether the degenerate case was detected (solution family, not point).
    pub hard_case: bool,
    /// Unit direction spanning the degenerate subspace in the hard case.
    ///
    /// When `mu > 0` the full solution set is `{x_part ± t̄·u}` with
    /// `x_part = x − (uᵀx)u` and `t̄ = uᵀx`; when `mu = 0` it is the segment
    /// `{x + t·u : t² ≤ r² − ‖x‖²}`.
    pub hard_case_dir: Option<DVector<f64>>,
}

impl TrsSolution {
    /// All extreme members of the solution set: the reported point plus, in
    /// the hard case, its mirror image across the degenerate direction.
    pub fn family_members(&self, radius: f64) -> Vec<DVector<f64>> {
        let mut out = vec![self.x.clone()];
        if let Some(dir) = &self.hard_case_dir {
            if self.mu > 0.0 {
                let t = dir.dot(&self.x);
                out.push(&self.x - dir * (2.0 * t));
            } else {
                let tbar = (radius * radius - self.x.norm_squared()).max(0.0).sqrt();
                out.push(&self.x + dir * tbar);
                out.push(&self.x - dir * tbar);
            }
        }
        out
    }
}

/// Eigendecomposition of a symmetric matrix with eigenvalues ascending.
#[derive(Debug, Clone)]
pub(crate) struct Eig {
    pub vals: DVector<f64>,
    pub vecs: DMatrix<f64>,
    /// `‖H‖₂ = max |λᵢ|`.
    pub scale: f64,
}

/// Full symmetric eigendecomposition with eigenvalues sorted ascending and
/// orthonormal eigenvectors as columns.
///
/// The reconstruction `VΛVᵀ` matches the input to `1e-10·‖H‖`; failure to
/// achieve that (or non-finite output) is reported as an error.
pub fn sym_eig(h: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let eig = eig_of(h)?;
    Ok((eig.vals, eig.vecs))
}

pub(crate) fn eig_of(h: &DMatrix<f64>) -> Result<Eig> {
    if !h.is_square() || h.nrows() == 0 {
        return Err(CdtError::Eigen("matrix must be square and nonempty".into()));
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Err(CdtError::Eigen("non-finite entry".into()));
    }
    if !linalg::is_symmetric(h, SYM_TOL) {
        return Err(CdtError::Eigen("matrix is not symmetric".into()));
    }
    let n = h.nrows();
    let sym = nalgebra::SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sym.eigenvalues[i].partial_cmp(&sym.eigenvalues[j]).unwrap());
    let mut vals = DVector::<f64>::zeros(n);
    let mut vecs = DMatrix::<f64>::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vals[k] = sym.eigenvalues[i];
        vecs.set_column(k, &sym.eigenvectors.column(i));
    }
    if vals.iter().any(|v| !v.is_finite()) || vecs.iter().any(|v| !v.is_finite()) {
        return Err(CdtError::Eigen("non-finite eigendecomposition output".into()));
    }
    let scale = vals.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
    let recon = &vecs * DMatrix::from_diagonal(&vals) * vecs.transpose();
    let err = linalg::max_abs(&(recon - h));
    if err > 1e-10 * scale.max(1.0) {
        return Err(CdtError::Eigen(format!(
            "reconstruction error {err:.3e} exceeds tolerance"
        )));
    }
    Ok(Eig { vals, vecs, scale })
}

/// Squared norm of the stationary point `x(μ)` of the shifted system, i.e.
/// `Σᵢ (gᵢ / (2(λᵢ + μ)))²`, with eigenvalues and the gradient expressed in
/// the eigenbasis.
///
/// Errors with [`CdtError::SecularPole`] when `μ` sits within
/// `1e-14·max(1, ‖H‖)` of a pole `−λᵢ` whose gradient component is nonzero.
/// Terms with an exactly zero gradient component are skipped, so evaluation
/// at their poles is well defined.
pub fn secular_norm_sq(eigvals: &DVector<f64>, g_in_basis: &DVector<f64>, mu: f64) -> Result<f64> {
    if eigvals.len() != g_in_basis.len() {
        return Err(CdtError::InvalidParameter(
            "eigenvalue and gradient vectors must have equal length".into(),
        ));
    }
    let scale = eigvals.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
    let pole_tol = 1e-14 * scale.max(1.0);
    let mut sum = 0.0;
    for i in 0..eigvals.len() {
        let gi = g_in_basis[i];
        if gi == 0.0 {
            continue;
        }
        let d = eigvals[i] + mu;
        if d.abs() < pole_tol {
            return Err(CdtError::SecularPole(format!(
                "mu = {mu} is within {pole_tol:.3e} of pole {} with nonzero gradient component",
                -eigvals[i]
            )));
        }
        let t = gi / (2.0 * d);
        sum += t * t;
    }
    Ok(sum)
}

/// `Σ (cᵢ/(λᵢ+μ))²` with zero coefficients skipped; `+∞` at poles.
fn norm_sq_raw(vals: &[f64], c: &[f64], mu: f64) -> f64 {
    let mut sum = 0.0;
    for (l, ci) in vals.iter().zip(c) {
        if *ci == 0.0 {
            continue;
        }
        let d = l + mu;
        if d == 0.0 {
            return f64::INFINITY;
        }
        let t = ci / d;
        sum += t * t;
    }
    sum
}

/// `d/dμ Σ (cᵢ/(λᵢ+μ))² = −2 Σ cᵢ²/(λᵢ+μ)³`.
fn norm_sq_deriv(vals: &[f64], c: &[f64], mu: f64) -> f64 {
    let mut sum = 0.0;
    for (l, ci) in vals.iter().zip(c) {
        if *ci == 0.0 {
            continue;
        }
        let d = l + mu;
        if d == 0.0 {
            return f64::NEG_INFINITY;
        }
        sum -= 2.0 * ci * ci / (d * d * d);
    }
    sum
}

use crate::linalg::scalar_root;

/// Finds the boundary multiplier `μ ∈ [lo, hi]` with `‖x(μ)‖ = r`, where the
/// norm is strictly decreasing. `lo_closed` states whether `μ = lo` is a
/// valid evaluation point (no pole there).
fn boundary_root(vals: &[f64], c: &[f64], r: f64, lo: f64, mut hi: f64, lo_closed: bool) -> Result<f64> {
    // Norm at the upper bracket must be ≤ r; expand defensively if rounding
    // put the root just beyond.
    let mut expand = 0;
    while norm_sq_raw(vals, c, hi) > r * r && expand < 64 {
        hi = lo + 2.0 * (hi - lo);
        expand += 1;
    }
    if expand == 64 {
        return Err(CdtError::RootFinding(
            "failed to bracket the boundary multiplier from above".into(),
        ));
    }
    if lo_closed {
        let lo_sq = norm_sq_raw(vals, c, lo);
        if lo_sq <= r * r {
            // The root sits at (or numerically below) the closed lower end.
            return Ok(lo);
        }
    }
    // Work on ψ(μ) = ‖x(μ)‖² − r²: +∞ (or positive) at lo, ≤ 0 at hi.
    let mut f = |mu: f64| norm_sq_raw(vals, c, mu) - r * r;
    let mut df = |mu: f64| norm_sq_deriv(vals, c, mu);
    let root = scalar_root(&mut f, &mut df, lo, hi, 1.0);
    let err = (norm_sq_raw(vals, c, root).sqrt() - r).abs();
    if !(err <= 1e-8 * r.max(1.0)) {
        return Err(CdtError::RootFinding(format!(
            "boundary equation residual {err:.3e} after safeguarded iteration"
        )));
    }
    Ok(root)
}

/// Shared solve context: eigendecomposition plus the gradient in that basis.
struct Ctx<'a> {
    p: &'a TrsProblem,
    eig: &'a Eig,
    /// Gradient in the eigenbasis.
    gt: DVector<f64>,
    /// Secular coefficients `g̃ᵢ/2`.
    c: Vec<f64>,
}

impl<'a> Ctx<'a> {
    fn new(p: &'a TrsProblem, eig: &'a Eig) -> Ctx<'a> {
        let gt = eig.vecs.transpose() * &p.g;
        let c: Vec<f64> = gt.iter().map(|v| v * 0.5).collect();
        Ctx { p, eig, gt, c }
    }

    /// Maps eigenbasis coordinates back to the original space.
    fn lift(&self, xt: &DVector<f64>) -> DVector<f64> {
        &self.eig.vecs * xt
    }

    /// Stationary point coordinates at multiplier `mu` with coefficients `c`.
    fn point_at(&self, c: &[f64], mu: f64) -> DVector<f64> {
        let n = c.len();
        let mut xt = DVector::<f64>::zeros(n);
        for i in 0..n {
            if c[i] != 0.0 {
                xt[i] = -c[i] / (self.eig.vals[i] + mu);
            }
        }
        xt
    }
}

/// Global solution of the trust-region subproblem.
///
/// The returned solution satisfies the stationarity system
/// `2(H + μI)x = −g` to `1e-8·(1+‖g‖)`, complementarity `μ·(‖x‖−r) = 0` to
/// `1e-8`, and `H + μI ⪰ −1e-8·‖H‖`. In the ill-conditioned band next to
/// the hard case (bottom-eigenspace gradient component below roughly
/// `1e-7`), the boundary norm is met exactly but the stationarity residual
/// grows to that component's size. In the hard case the full solution set
/// is described by [`TrsSolution::hard_case_dir`].
pub fn trs_global(p: &TrsProblem) -> Result<TrsSolution> {
    let eig = eig_of(&p.h)?;
    trs_global_with(p, &eig)
}

pub(crate) fn trs_global_with(p: &TrsProblem, eig: &Eig) -> Result<TrsSolution> {
    let ctx = Ctx::new(p, eig);
    let r = p.radius;
    let lam1 = eig.vals[0];

    // Positive definite H: try the unconstrained minimizer first.
    if lam1 > 0.0 {
        let xt = ctx.point_at(&ctx.c, 0.0);
        if xt.norm() <= r {
            let x = ctx.lift(&xt);
            let on_boundary = xt.norm() >= r * (1.0 - 1e-10);
            let value = p.value(&x);
            return Ok(TrsSolution {
                x,
                value,
                mu: 0.0,
                on_boundary,
                hard_case: false,
                hard_case_dir: None,
            });
        }
    }

    let mu_low = (-lam1).max(0.0);
    let gnorm = p.g.norm();
    let mu_hi = gnorm / (2.0 * r) + mu_low;
    let vals: Vec<f64> = eig.vals.iter().copied().collect();

    // Bottom eigenspace and the hard-case gate (only meaningful when the
    // boundary multiplier is pinned at −λ₁, i.e. λ₁ ≤ 0).
    if lam1 <= 0.0 {
        let cluster = CLUSTER_TOL * eig.scale.max(1.0);
        let bottom: Vec<bool> = vals.iter().map(|l| l - lam1 <= cluster).collect();
        let gate = bottom
            .iter()
            .zip(ctx.gt.iter())
            .all(|(b, gi)| !b || gi.abs() <= HARD_CASE_GRAD_TOL * gnorm);
        if gate {
            // Drop the (numerically zero) bottom components entirely.
            let mut c_red = ctx.c.clone();
            for (ci, b) in c_red.iter_mut().zip(&bottom) {
                if *b {
                    *ci = 0.0;
                }
            }
            let pseudo_sq = norm_sq_raw(&vals, &c_red, mu_low);
            if pseudo_sq < r * r * (1.0 - 1e-12) {
                // Hard case: family x_part + t·u₁ at μ = −λ₁.
                let xt = ctx.point_at(&c_red, mu_low);
                let x_part = ctx.lift(&xt);
                let dir = normalized_column(&eig.vecs, 0);
                let (x, on_boundary) = if mu_low > 0.0 {
                    let tbar = (r * r - pseudo_sq).max(0.0).sqrt();
                    (&x_part + &dir * tbar, true)
                } else {
                    // Interior-degenerate: report the pure pseudo-solution.
                    (x_part.clone(), false)
                };
                let value = p.value(&x);
                return Ok(TrsSolution {
                    x,
                    value,
                    mu: mu_low,
                    on_boundary,
                    hard_case: true,
                    hard_case_dir: Some(dir),
                });
            }
            // Easy case despite the zero bottom components: the reduced
            // secular equation has its root at or above −λ₁ with no pole.
            let mu = boundary_root(&vals, &c_red, r, mu_low, mu_hi, true)?;
            let xt = ctx.point_at(&c_red, mu);
            let x = ctx.lift(&xt);
            let value = p.value(&x);
            return Ok(TrsSolution {
                x,
                value,
                mu,
                on_boundary: true,
                hard_case: false,
                hard_case_dir: None,
            });
        }
    }

    // Generic boundary solve. For λ₁ > 0 the bracket is closed at μ = 0 (no
    // pole there, and the interior test above already failed, so the norm at
    // 0 exceeds r); otherwise the secular function has a pole at −λ₁.
    let lo_closed = lam1 > 0.0;
    let mu = match boundary_root(&vals, &ctx.c, r, mu_low, mu_hi, lo_closed) {
        Ok(mu) => mu,
        // Ill-conditioned band next to the hard case: the root hugs the
        // bottom pole because the gradient's bottom-eigenspace component is
        // tiny, and no representable μ meets the norm tolerance. Drop that
        // component and restore the boundary norm along the eigenvector;
        // the stationarity error equals the dropped component's size, which
        // is below what the μ-based solve could achieve here anyway.
        Err(err @ CdtError::RootFinding(_)) if lam1 <= 0.0 => {
            match near_degenerate_completion(p, &ctx, &vals, r, mu_low) {
                Some(sol) => return Ok(sol),
                None => return Err(err),
            }
        }
        Err(e) => return Err(e),
    };
    let xt = ctx.point_at(&ctx.c, mu);
    let x = ctx.lift(&xt);
    let value = p.value(&x);
    Ok(TrsSolution {
        x,
        value,
        mu,
        on_boundary: true,
        hard_case: false,
        hard_case_dir: None,
    })
}

/// Boundary solution for the ill-conditioned band next to the hard case.
///
/// Zeroes the gradient components of the bottom eigenvalue cluster, takes
/// the stationary point of the remainder at the pole multiplier, and makes
/// up the boundary norm along the bottom eigenvector, picking the sign that
/// lowers the objective. `None` when the pseudo-solution already fills the
/// radius (then the failure was not the near-degenerate band).
fn near_degenerate_completion(
    p: &TrsProblem,
    ctx: &Ctx<'_>,
    vals: &[f64],
    r: f64,
    mu_low: f64,
) -> Option<TrsSolution> {
    let lam1 = vals[0];
    let cluster = CLUSTER_TOL * ctx.eig.scale.max(1.0);
    let bottom: Vec<bool> = vals.iter().map(|l| l - lam1 <= cluster).collect();
    let mut c_red = ctx.c.clone();
    for (ci, b) in c_red.iter_mut().zip(&bottom) {
        if *b {
            *ci = 0.0;
        }
    }
    let pseudo_sq = norm_sq_raw(vals, &c_red, mu_low);
    if pseudo_sq >= r * r {
        return None;
    }
    let xt = ctx.point_at(&c_red, mu_low);
    let x_part = ctx.lift(&xt);
    let dir = normalized_column(&ctx.eig.vecs, 0);
    let tbar = (r * r - pseudo_sq).sqrt();
    // Along `dir` the quadratic term vanishes (the multiplier sits at the
    // eigenvalue), so the objective is linear in the step: descend.
    let t = if dir.dot(&p.g) > 0.0 { -tbar } else { tbar };
    let x = &x_part + &dir * t;
    let value = p.value(&x);
    Some(TrsSolution {
        x,
        value,
        mu: mu_low,
        on_boundary: true,
        hard_case: true,
        hard_case_dir: Some(dir),
    })
}

/// Column `j` of `m`, sign-normalized so its largest-magnitude entry is
/// positive; gives the degenerate direction a reproducible orientation.
fn normalized_column(m: &DMatrix<f64>, j: usize) -> DVector<f64> {
    let mut v = m.column(j).into_owned();
    let mut idx = 0;
    for (i, val) in v.iter().enumerate() {
        if val.abs() > v[idx].abs() {
            idx = i;
        }
    }
    if v[idx] < 0.0 {
        v.neg_mut();
    }
    let norm = v.norm();
    if norm > 0.0 {
        v /= norm;
    }
    v
}

/// Local-nonglobal minimizer of the trust-region subproblem, if it exists.
///
/// The candidate multipliers are the roots of the boundary norm equation on
/// the open interval `(max(0, −λ₂), −λ₁)`, where the squared-norm function is
/// strictly convex, so there are at most two; each is certified by checking
/// that the Hessian of the Lagrangian is positive semidefinite on the tangent
/// space of the sphere at the candidate (up to `−1e-8·‖H‖`), and that its
/// value sits strictly above the global minimum (`1e-10` relative
/// separation). At most one candidate passes; `None` means no
/// local-nonglobal minimizer exists (including every degenerate case:
/// `λ₁ ≥ 0`, a multiple bottom eigenvalue, or an empty interval).
///
/// For one-dimensional problems the interval is `(0, −λ₁)` and the tangent
/// condition is vacuous.
pub fn trs_local_nonglobal(p: &TrsProblem) -> Result<Option<TrsSolution>> {
    let eig = eig_of(&p.h)?;
    let global = trs_global_with(p, &eig)?;
    trs_local_nonglobal_with(p, &eig, &global)
}

/// Global and local-nonglobal solutions from one shared eigendecomposition.
pub(crate) fn trs_global_and_local(p: &TrsProblem) -> Result<(TrsSolution, Option<TrsSolution>)> {
    let eig = eig_of(&p.h)?;
    let global = trs_global_with(p, &eig)?;
    let local = trs_local_nonglobal_with(p, &eig, &global)?;
    Ok((global, local))
}

pub(crate) fn trs_local_nonglobal_with(
    p: &TrsProblem,
    eig: &Eig,
    global: &TrsSolution,
) -> Result<Option<TrsSolution>> {
    let n = p.dim();
    let r = p.radius;
    let lam1 = eig.vals[0];
    let hi = -lam1;
    let lo = if n == 1 { 0.0 } else { (-eig.vals[1]).max(0.0) };
    if !(hi > lo) {
        return Ok(None);
    }
    let ctx = Ctx::new(p, eig);
    let vals: Vec<f64> = eig.vals.iter().copied().collect();

    let width = hi - lo;
    let a = lo + width * 1e-12;
    let b = hi - width * 1e-12;
    if !(a < b) {
        return Ok(None);
    }
    let r2 = r * r;
    let psi = |mu: f64| norm_sq_raw(&vals, &ctx.c, mu) - r2;
    let dpsi = |mu: f64| norm_sq_deriv(&vals, &ctx.c, mu);

    // The squared norm is strictly convex on (lo, hi); classify by the
    // derivative sign at the interval ends and collect up to two roots.
    let mut candidates: Vec<f64> = Vec::new();
    let da = dpsi(a);
    let db = dpsi(b);
    let mut push_root = |left: f64, right: f64, sign_left: f64| {
        let mut f = |mu: f64| norm_sq_raw(&vals, &ctx.c, mu) - r2;
        let mut df = |mu: f64| norm_sq_deriv(&vals, &ctx.c, mu);
        let root = scalar_root(&mut f, &mut df, left, right, sign_left);
        candidates.push(root);
    };
    if da >= 0.0 {
        // Nondecreasing throughout: at most one root, with ψ < 0 on the left.
        if psi(a) <= 0.0 && psi(b) > 0.0 {
            push_root(a, b, -1.0);
        }
    } else if db <= 0.0 {
        // Nonincreasing throughout: at most one root, with ψ > 0 on the left.
        if psi(a) > 0.0 && psi(b) <= 0.0 {
            push_root(a, b, 1.0);
        }
    } else {
        // Interior minimum: locate it on the increasing derivative.
        let mut f = |mu: f64| norm_sq_deriv(&vals, &ctx.c, mu);
        let mut df = |mu: f64| {
            // Second derivative of the squared norm: 6 Σ cᵢ²/(λᵢ+μ)⁴.
            let mut sum = 0.0;
            for (l, ci) in vals.iter().zip(&ctx.c) {
                if *ci == 0.0 {
                    continue;
                }
                let d = l + mu;
                if d == 0.0 {
                    return f64::INFINITY;
                }
                sum += 6.0 * ci * ci / (d * d * d * d);
            }
            sum
        };
        let mu_min = scalar_root(&mut f, &mut df, a, b, -1.0);
        if psi(mu_min) <= 0.0 {
            if psi(a) > 0.0 {
                push_root(a, mu_min, 1.0);
            }
            if psi(b) > 0.0 {
                push_root(mu_min, b, -1.0);
            }
        }
    }

    // Prefer the rightmost candidate (nearest −λ₁): that is the one the
    // second-order condition singles out when both roots exist.
    candidates.sort_by(|x, y| y.partial_cmp(x).unwrap());
    for mu in candidates {
        let xt = ctx.point_at(&ctx.c, mu);
        let x = ctx.lift(&xt);
        let norm_err = (x.norm() - r).abs();
        if norm_err > 1e-8 * r.max(1.0) {
            continue;
        }
        if n > 1 {
            let tangent = match linalg::orthonormal_complement(&[x.clone()]) {
                Some(t) => t,
                None => continue,
            };
            let shifted = &p.h + DMatrix::<f64>::identity(n, n) * mu;
            let reduced = linalg::symmetrize(&(tangent.transpose() * shifted * &tangent));
            let red_eig = eig_of(&reduced)?;
            if red_eig.vals[0] < -CERT_TOL * eig.scale.max(1.0) {
                continue;
            }
        }
        let value = p.value(&x);
        if value <= global.value + VALUE_SEP_TOL * (1.0 + global.value.abs()) {
            continue;
        }
        return Ok(Some(TrsSolution {
            x,
            value,
            mu,
            on_boundary: true,
            hard_case: false,
            hard_case_dir: None,
        }));
    }
    Ok(None)
}
