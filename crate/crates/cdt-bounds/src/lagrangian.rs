//! Penalized relaxations over the unit ball intersected with up to two
//! halfspace cuts.
//!
//! For a penalty weight `λ ≥ 0` the relaxed objective is
//!
//! ```text
//! x ↦ xᵀ(Q + λA)x + (q + λa)ᵀx − λ·a0,
//! ```
//!
//! whose minimum over the unit ball lower-bounds the ellipsoid-constrained
//! problem for every `λ ≥ 0` (weak duality). This module minimizes that
//! objective exactly over the ball, optionally intersected with one or two
//! halfspaces, by candidate enumeration built on the trust-region kernel:
//! a constrained minimizer either keeps every cut inactive — then it is a
//! local minimizer of the plain ball problem, so it is the global solution
//! (or a member of its degenerate family) or the unique boundary local
//! minimum — or it makes some cut active, in which case it solves the
//! problem restricted to that cut's hyperplane, handled by an explicit
//! null-space reduction to one dimension lower. The same argument applies
//! recursively when two cuts are present, terminating in a problem on the
//! intersection of both hyperplanes.
//!
//! Each solve reports the full set of (near-)minimizers as [`Witness`]
//! values carrying the relaxed objective and the ellipsoid value; the
//! minimum ellipsoid value over the witnesses is the quantity `h(λ)` driving
//! the bound-tightening bisections in [`crate::bounds`].

use nalgebra::{DMatrix, DVector};

use crate::linalg;
use crate::model::{CdtInstance, Cut};
use crate::trs::{self, TrsProblem, TrsSolution};
use crate::{CdtError, Result};

/// Witnesses within `WITNESS_TIE_TOL·(1+|value|)` of the minimum are kept as
/// (near-)minimizers; several surviving witnesses signal a degenerate
/// relaxation whose minimizer is not unique.
pub const WITNESS_TIE_TOL: f64 = 1e-8;

/// Scaled slack tolerance for deciding that a point satisfies a cut.
const CUT_SLACK_TOL: f64 = 1e-9;

/// Witness points closer than `1e-7·(1+‖x‖)` are treated as duplicates.
const DEDUP_TOL: f64 = 1e-7;

/// Band on the reduced squared radius: below `−POINT_BAND` the hyperplane
/// misses the ball, within `±POINT_BAND` it is tangent (single point).
const POINT_BAND: f64 = 1e-12;

/// An ordered collection of at most two halfspace cuts.
#[derive(Debug, Clone, Default)]
pub struct CutSet {
    cuts: Vec<Cut>,
}

impl CutSet {
    /// No cuts: the relaxation is the plain ball problem.
    pub fn empty() -> Self {
        Self { cuts: Vec::new() }
    }

    /// A single cut.
    pub fn one(cut: Cut) -> Self {
        Self { cuts: vec![cut] }
    }

    /// Two cuts, in order.
    pub fn two(first: Cut, second: Cut) -> Self {
        Self {
            cuts: vec![first, second],
        }
    }

    /// Validates the length bound (at most two cuts).
    pub fn new(cuts: Vec<Cut>) -> Result<Self> {
        if cuts.len() > 2 {
            return Err(CdtError::InvalidParameter(
                "at most two cuts are supported".into(),
            ));
        }
        Ok(Self { cuts })
    }

    /// A copy of this set with one more cut appended.
    pub fn with_cut(&self, cut: Cut) -> Result<Self> {
        let mut cuts = self.cuts.clone();
        cuts.push(cut);
        Self::new(cuts)
    }

    /// The cuts in order.
    pub fn cuts(&self) -> &[Cut] {
        &self.cuts
    }

    /// Number of cuts (0, 1, or 2).
    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    /// Whether the set is empty.
    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }
}

/// A (near-)minimizer of a relaxation, with the relaxed objective value and
/// the ellipsoid value at the point.
#[derive(Debug, Clone)]
pub struct Witness {
    /// The point, in the original coordinates.
    pub point: DVector<f64>,
    /// Value of `xᵀ(Q+λA)x + (q+λa)ᵀx − λ·a0` at the point.
    pub objective: f64,
    /// Value of `xᵀAx + aᵀx` at the point.
    pub ellipsoid: f64,
}

/// The minimum of a relaxation together with its witness set.
#[derive(Debug, Clone)]
pub struct RelaxationSolution {
    /// Penalty weight the relaxation was solved at.
    pub lambda: f64,
    /// Minimum value, including the `−λ·a0` constant; `+∞` when infeasible.
    pub value: f64,
    /// All minimizers found, clustered at relative tolerance
    /// [`WITNESS_TIE_TOL`]; empty iff `infeasible`.
    pub witnesses: Vec<Witness>,
    /// Minimum ellipsoid value over the witness set; `+∞` when infeasible.
    pub h: f64,
    /// Set when the ball intersected with the cuts is empty.
    pub infeasible: bool,
}

impl RelaxationSolution {
    fn infeasible_at(lambda: f64) -> Self {
        Self {
            lambda,
            value: f64::INFINITY,
            witnesses: Vec::new(),
            h: f64::INFINITY,
            infeasible: true,
        }
    }
}

/// Minimum value and witnesses of a relaxation restricted to an active set
/// (one cut held at equality, or the best over both choices for two cuts).
#[derive(Debug, Clone)]
pub struct ActiveSolution {
    /// Minimum value over the active set, including the `−λ·a0` constant.
    pub value: f64,
    /// Near-minimizers in the original coordinates.
    pub witnesses: Vec<Witness>,
}

/// A relaxation restricted to one or two active hyperplanes, rewritten as a
/// ball-constrained problem in the complement coordinates.
#[derive(Debug)]
pub enum ReducedProblem {
    /// A genuine lower-dimensional problem.
    Reduced(ReducedTrs),
    /// The hyperplane touches the ball in a single point (or the affine
    /// subspace is zero-dimensional): `value` is the relaxed objective at
    /// that point.
    Point {
        /// The single feasible point, in the original coordinates.
        x: DVector<f64>,
        /// Relaxed objective value at the point.
        value: f64,
    },
    /// The hyperplane (or intersection of hyperplanes) misses the ball.
    Infeasible,
}

/// The reduced ball problem `min uᵀH·u + gᵀu` over `‖u‖ ≤ radius`, together
/// with the affine lift back to the original coordinates. The total relaxed
/// objective at `lift(u)` equals the reduced objective at `u` plus `offset`.
#[derive(Debug)]
pub struct ReducedTrs {
    /// The reduced trust-region problem.
    pub trs: TrsProblem,
    /// Origin of the lift: the point of the affine subspace closest to 0.
    pub origin: DVector<f64>,
    /// Orthonormal basis of the subspace direction (columns).
    pub basis: DMatrix<f64>,
    /// Constant such that `objective(lift(u)) = reduced(u) + offset`.
    pub offset: f64,
}

impl ReducedTrs {
    /// Maps reduced coordinates back to the original space.
    pub fn lift(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.origin + &self.basis * u
    }
}

/// Whether `x` satisfies the cut within a scaled slack tolerance of
/// [`CUT_SLACK_TOL`].
pub fn satisfies_cut(cut: &Cut, x: &DVector<f64>) -> bool {
    cut.offset(x) <= slack_tol(cut, x)
}

fn slack_tol(cut: &Cut, x: &DVector<f64>) -> f64 {
    CUT_SLACK_TOL * (1.0 + cut.normal().norm() * (1.0 + x.norm() + cut.anchor().norm()))
}

/// The relaxed objective `xᵀ(Q+λA)x + (q+λa)ᵀx − λ·a0` at fixed `λ`.
struct RelaxCtx {
    mm: DMatrix<f64>,
    cv: DVector<f64>,
    lam_a0: f64,
}

impl RelaxCtx {
    fn new(inst: &CdtInstance, lambda: f64) -> Self {
        let mm = linalg::symmetrize(&(inst.q_mat() + inst.a_mat() * lambda));
        let cv = inst.q_lin() + inst.a_lin() * lambda;
        Self {
            mm,
            cv,
            lam_a0: lambda * inst.a0(),
        }
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        (x.transpose() * &self.mm * x)[(0, 0)] + self.cv.dot(x) - self.lam_a0
    }

    fn witness_at(&self, inst: &CdtInstance, point: DVector<f64>) -> Witness {
        let objective = self.value(&point);
        let ellipsoid = inst.ellipsoid_value(&point);
        Witness {
            point,
            objective,
            ellipsoid,
        }
    }

    fn ball_problem(&self) -> Result<TrsProblem> {
        TrsProblem::new(self.mm.clone(), self.cv.clone(), 1.0)
    }
}

/// Affine change of coordinates used to lift reduced solutions; identity for
/// the plain ball problem.
struct Lift<'a> {
    origin: Option<&'a DVector<f64>>,
    basis: Option<&'a DMatrix<f64>>,
}

impl Lift<'_> {
    fn identity() -> Self {
        Lift {
            origin: None,
            basis: None,
        }
    }

    fn of(red: &ReducedTrs) -> Lift<'_> {
        Lift {
            origin: Some(&red.origin),
            basis: Some(&red.basis),
        }
    }

    fn point(&self, u: &DVector<f64>) -> DVector<f64> {
        match (self.origin, self.basis) {
            (Some(o), Some(v)) => o + v * u,
            _ => u.clone(),
        }
    }

    fn direction(&self, u: &DVector<f64>) -> DVector<f64> {
        match self.basis {
            Some(v) => v * u,
            None => u.clone(),
        }
    }
}

/// All minimizers of a ball (sub)problem that satisfy every cut in `filter`,
/// lifted to the original coordinates.
///
/// In the degenerate interior case — multiplier 0 with a flat bottom
/// direction — the minimizer set is a segment; its intersection with the
/// cut halfspaces is computed exactly, and the witnesses are the segment
/// endpoints plus the closed-form minimizer of the (strictly convex)
/// ellipsoid value along the segment, so that the minimum ellipsoid value
/// over the witnesses equals the minimum over the whole feasible family.
fn family_witnesses(
    inst: &CdtInstance,
    ctx: &RelaxCtx,
    sol: &TrsSolution,
    radius: f64,
    lift: &Lift<'_>,
    filter: &[&Cut],
) -> Vec<Witness> {
    let mut out = Vec::new();
    if sol.hard_case && !sol.on_boundary {
        let dir = sol
            .hard_case_dir
            .as_ref()
            .expect("degenerate solution carries its flat direction");
        let x0 = lift.point(&sol.x);
        let d = lift.direction(dir);
        let tbar = (radius * radius - sol.x.norm_squared()).max(0.0).sqrt();
        let (mut lo, mut hi) = (-tbar, tbar);
        for cut in filter {
            let off0 = cut.offset(&x0);
            let slope = cut.normal().dot(&d);
            let tol = slack_tol(cut, &x0);
            if slope.abs() <= 1e-14 * (1.0 + cut.normal().norm()) {
                if off0 > tol {
                    return out;
                }
            } else if slope > 0.0 {
                hi = hi.min((tol - off0) / slope);
            } else {
                lo = lo.max((tol - off0) / slope);
            }
        }
        if lo > hi {
            return out;
        }
        let curv = (inst.a_mat() * &d).dot(&d);
        let tstar = if curv > 0.0 {
            (-0.5 * inst.ellipsoid_grad(&x0).dot(&d) / curv).clamp(lo, hi)
        } else {
            lo
        };
        let mut ts = [lo, tstar, hi];
        ts.sort_by(|a, b| a.partial_cmp(b).expect("finite segment parameters"));
        let mut last = f64::NAN;
        for t in ts {
            if (t - last).abs() <= 1e-12 {
                continue;
            }
            last = t;
            out.push(ctx.witness_at(inst, &x0 + &d * t));
        }
        return out;
    }
    for member in sol.family_members(radius) {
        let x = lift.point(&member);
        if filter.iter().all(|c| satisfies_cut(c, &x)) {
            out.push(ctx.witness_at(inst, x));
        }
    }
    out
}

/// Minimizers of the plain ball relaxation at `λ` that satisfy every cut in
/// `cuts` (empty when the whole minimizer family is cut off). Degenerate
/// minimizer segments are intersected with the cuts exactly, so a nonempty
/// result proves the cut relaxation's value equals the plain relaxation's.
pub fn ball_minimizers_satisfying(
    inst: &CdtInstance,
    lambda: f64,
    cuts: &CutSet,
) -> Result<Vec<Witness>> {
    validate_lambda(lambda)?;
    let ctx = RelaxCtx::new(inst, lambda);
    let ball = ctx.ball_problem()?;
    let global = trs::trs_global(&ball)?;
    let filter: Vec<&Cut> = cuts.cuts().iter().collect();
    Ok(family_witnesses(
        inst,
        &ctx,
        &global,
        1.0,
        &Lift::identity(),
        &filter,
    ))
}

/// The plain ball relaxation at `λ` as a trust-region problem (radius 1).
pub fn ball_problem(inst: &CdtInstance, lambda: f64) -> Result<TrsProblem> {
    validate_lambda(lambda)?;
    RelaxCtx::new(inst, lambda).ball_problem()
}

/// The relaxed objective `xᵀ(Q+λA)x + (q+λa)ᵀx − λ·a0` at a point.
pub fn relaxed_value(inst: &CdtInstance, lambda: f64, x: &DVector<f64>) -> f64 {
    RelaxCtx::new(inst, lambda).value(x)
}

fn validate_lambda(lambda: f64) -> Result<()> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(CdtError::InvalidParameter(format!(
            "penalty weight must be finite and nonnegative, got {lambda}"
        )));
    }
    Ok(())
}

/// Reduces the relaxation at `λ` restricted to the cut's hyperplane to a
/// ball problem in `n−1` variables.
///
/// With `V` an orthonormal basis of the normal's null space and `x̄` the
/// anchor, points of the hyperplane are `x̄ + Vw`; completing the square in
/// the ball constraint `‖x̄ + Vw‖ ≤ 1` centers it at `u = w + Vᵀx̄` with
/// `radius² = 1 − ‖x̄‖² + ‖Vᵀx̄‖²`. A negative `radius²` (beyond `−1e-12`)
/// means the hyperplane misses the ball; `radius² ≈ 0` is the tangent case
/// with a single feasible point.
pub fn nullspace_reduce(inst: &CdtInstance, lambda: f64, cut: &Cut) -> Result<ReducedProblem> {
    validate_lambda(lambda)?;
    let basis = linalg::orthonormal_complement(&[cut.normal().clone()]).ok_or_else(|| {
        CdtError::InvalidParameter("cut normal is numerically zero".into())
    })?;
    let ctx = RelaxCtx::new(inst, lambda);
    reduce_with_particular(&ctx, cut.anchor(), basis)
}

/// Shared tail of the null-space reductions: `xpart` is any point of the
/// affine subspace `{x : active cuts hold with equality}` and `basis` an
/// orthonormal basis of its direction space.
fn reduce_with_particular(
    ctx: &RelaxCtx,
    xpart: &DVector<f64>,
    basis: DMatrix<f64>,
) -> Result<ReducedProblem> {
    let s = basis.transpose() * xpart;
    let rsq = 1.0 - xpart.norm_squared() + s.norm_squared();
    if rsq < -POINT_BAND {
        return Ok(ReducedProblem::Infeasible);
    }
    let origin = xpart - &basis * &s;
    let value0 = ctx.value(&origin);
    if basis.ncols() == 0 || rsq <= POINT_BAND {
        return Ok(ReducedProblem::Point {
            x: origin,
            value: value0,
        });
    }
    let hu = linalg::symmetrize(&(basis.transpose() * &ctx.mm * &basis));
    let gu = basis.transpose() * (&ctx.mm * &origin * 2.0 + &ctx.cv);
    let trs = TrsProblem::new(hu, gu, rsq.sqrt())?;
    Ok(ReducedProblem::Reduced(ReducedTrs {
        trs,
        origin,
        basis,
        offset: value0,
    }))
}

/// Affine subspace where both cuts are active: least-squares particular
/// point via the 2×2 Gram system of the stacked normals, direction space via
/// the orthonormal complement. `None` when the normals are (near-)parallel —
/// coincident hyperplanes are already covered by the single-active
/// enumeration, and genuinely parallel distinct ones have empty
/// intersection.
fn reduce_both_active(
    ctx: &RelaxCtx,
    first: &Cut,
    second: &Cut,
) -> Result<Option<ReducedProblem>> {
    let n1 = first.normal();
    let n2 = second.normal();
    let b1 = n1.dot(first.anchor());
    let b2 = n2.dot(second.anchor());
    let g11 = n1.norm_squared();
    let g22 = n2.norm_squared();
    let g12 = n1.dot(n2);
    let det = g11 * g22 - g12 * g12;
    if det <= 1e-12 * g11 * g22 {
        return Ok(None);
    }
    let y1 = (g22 * b1 - g12 * b2) / det;
    let y2 = (g11 * b2 - g12 * b1) / det;
    let xpart = n1 * y1 + n2 * y2;
    let basis = match linalg::orthonormal_complement(&[n1.clone(), n2.clone()]) {
        Some(v) => v,
        None => return Ok(None),
    };
    reduce_with_particular(ctx, &xpart, basis).map(Some)
}

fn assemble_active(candidates: Vec<Witness>) -> Option<ActiveSolution> {
    if candidates.is_empty() {
        return None;
    }
    let value = candidates
        .iter()
        .map(|w| w.objective)
        .fold(f64::INFINITY, f64::min);
    let witnesses = cluster(candidates, value);
    Some(ActiveSolution { value, witnesses })
}

/// Minimum of the relaxation at `λ` over the ball with the cut held active.
/// `None` when the cut's hyperplane misses the ball.
pub fn solve_cut_active(
    inst: &CdtInstance,
    lambda: f64,
    cut: &Cut,
) -> Result<Option<ActiveSolution>> {
    let ctx = RelaxCtx::new(inst, lambda);
    let mut candidates = Vec::new();
    match nullspace_reduce(inst, lambda, cut)? {
        ReducedProblem::Infeasible => {}
        ReducedProblem::Point { x, .. } => candidates.push(ctx.witness_at(inst, x)),
        ReducedProblem::Reduced(red) => {
            let sol = trs::trs_global(&red.trs)?;
            candidates.extend(family_witnesses(
                inst,
                &ctx,
                &sol,
                red.trs.radius(),
                &Lift::of(&red),
                &[],
            ));
        }
    }
    Ok(assemble_active(candidates))
}

/// Minimum of the relaxation at `λ` over the ball with at least one of the
/// two cuts active, subject to the other.
///
/// For each choice of active cut, the reduced ball problem is minimized
/// subject to the remaining cut by candidate enumeration — reduced global
/// family, reduced boundary local minimum, and the problem with both cuts
/// active (a second reduction, to `n−2` dimensions). `None` when every
/// active set misses the ball.
pub fn solve_active_set_problem(
    inst: &CdtInstance,
    lambda: f64,
    cuts: &CutSet,
) -> Result<Option<ActiveSolution>> {
    if cuts.len() != 2 {
        return Err(CdtError::InvalidParameter(
            "the active-set problem requires exactly two cuts".into(),
        ));
    }
    validate_lambda(lambda)?;
    let ctx = RelaxCtx::new(inst, lambda);
    let first = &cuts.cuts()[0];
    let second = &cuts.cuts()[1];
    let mut candidates = Vec::new();
    for (active, other) in [(first, second), (second, first)] {
        match nullspace_reduce(inst, lambda, active)? {
            ReducedProblem::Infeasible => {}
            ReducedProblem::Point { x, .. } => {
                if satisfies_cut(other, &x) {
                    candidates.push(ctx.witness_at(inst, x));
                }
            }
            ReducedProblem::Reduced(red) => {
                let (global, local) = trs::trs_global_and_local(&red.trs)?;
                candidates.extend(family_witnesses(
                    inst,
                    &ctx,
                    &global,
                    red.trs.radius(),
                    &Lift::of(&red),
                    &[other],
                ));
                if let Some(local) = local {
                    let x = red.lift(&local.x);
                    if satisfies_cut(other, &x) {
                        candidates.push(ctx.witness_at(inst, x));
                    }
                }
            }
        }
    }
    match reduce_both_active(&ctx, first, second)? {
        None | Some(ReducedProblem::Infeasible) => {}
        Some(ReducedProblem::Point { x, .. }) => candidates.push(ctx.witness_at(inst, x)),
        Some(ReducedProblem::Reduced(red)) => {
            let sol = trs::trs_global(&red.trs)?;
            candidates.extend(family_witnesses(
                inst,
                &ctx,
                &sol,
                red.trs.radius(),
                &Lift::of(&red),
                &[],
            ));
        }
    }
    Ok(assemble_active(candidates))
}

/// Minimizes the relaxed objective at `λ` over the unit ball intersected
/// with the cuts, returning the minimum and its witness set.
///
/// An empty intersection (possible only with cuts) is reported through the
/// `infeasible` flag with value `+∞`, not as an error.
pub fn solve_relaxation(
    inst: &CdtInstance,
    lambda: f64,
    cuts: &CutSet,
) -> Result<RelaxationSolution> {
    validate_lambda(lambda)?;
    let ctx = RelaxCtx::new(inst, lambda);
    let ball = ctx.ball_problem()?;
    let mut candidates = Vec::new();
    match cuts.cuts() {
        [] => {
            let global = trs::trs_global(&ball)?;
            candidates.extend(family_witnesses(
                inst,
                &ctx,
                &global,
                1.0,
                &Lift::identity(),
                &[],
            ));
        }
        [cut] => {
            let (global, local) = trs::trs_global_and_local(&ball)?;
            candidates.extend(family_witnesses(
                inst,
                &ctx,
                &global,
                1.0,
                &Lift::identity(),
                &[cut],
            ));
            if let Some(local) = local {
                if satisfies_cut(cut, &local.x) {
                    candidates.push(ctx.witness_at(inst, local.x.clone()));
                }
            }
            if let Some(active) = solve_cut_active(inst, lambda, cut)? {
                candidates.extend(active.witnesses);
            }
        }
        [first, second] => {
            let (global, local) = trs::trs_global_and_local(&ball)?;
            candidates.extend(family_witnesses(
                inst,
                &ctx,
                &global,
                1.0,
                &Lift::identity(),
                &[first, second],
            ));
            if let Some(local) = local {
                if satisfies_cut(first, &local.x) && satisfies_cut(second, &local.x) {
                    candidates.push(ctx.witness_at(inst, local.x.clone()));
                }
            }
            if let Some(active) = solve_active_set_problem(inst, lambda, cuts)? {
                candidates.extend(active.witnesses);
            }
        }
        _ => {
            return Err(CdtError::InvalidParameter(
                "at most two cuts are supported".into(),
            ));
        }
    }
    if candidates.is_empty() {
        return Ok(RelaxationSolution::infeasible_at(lambda));
    }
    let value = candidates
        .iter()
        .map(|w| w.objective)
        .fold(f64::INFINITY, f64::min);
    let witnesses = cluster(candidates, value);
    let h = witnesses
        .iter()
        .map(|w| w.ellipsoid)
        .fold(f64::INFINITY, f64::min);
    Ok(RelaxationSolution {
        lambda,
        value,
        witnesses,
        h,
        infeasible: false,
    })
}

/// The minimum ellipsoid value over the relaxation's minimizers.
///
/// Degenerate minimizer segments were already minimized in closed form when
/// the witness set was assembled, so this is a plain minimum. Panics when
/// called on an infeasible relaxation.
pub fn h_value(sol: &RelaxationSolution) -> f64 {
    assert!(
        !sol.infeasible,
        "the ellipsoid level is undefined for an infeasible relaxation"
    );
    sol.h
}

/// Keeps witnesses within the tie band of the minimum, dropping duplicates.
fn cluster(candidates: Vec<Witness>, value: f64) -> Vec<Witness> {
    let tol = WITNESS_TIE_TOL * (1.0 + value.abs());
    let mut kept: Vec<Witness> = Vec::new();
    for w in candidates {
        if w.objective > value + tol {
            continue;
        }
        let dup = kept
            .iter()
            .any(|k| (&k.point - &w.point).norm() <= DEDUP_TOL * (1.0 + w.point.norm()));
        if !dup {
            kept.push(w);
        }
    }
    kept
}
