//! Lower-bound drivers, upper bounds, and gap certification.
//!
//! Five lower bounds of increasing strength are computed from the penalized
//! relaxations in [`crate::lagrangian`]:
//!
//! * **dual** — bisection on the penalty weight `λ` over `[0, λ̂]`, driven by
//!   the nonincreasing ellipsoid level `h(λ)` of the relaxation minimizers;
//! * **onecut** — the bisection rerun with a supporting halfspace cut that
//!   excludes the dual bound's violating minimizer;
//! * **oneopt** — iterative improvement of the cut anchor along the boundary
//!   (step-halving line search on the anchor perturbation);
//! * **twocut** — a second cut anchored at the one-cut stage's violating
//!   minimizer, with the active-set relaxation driving the bisection;
//! * **twoopt** — anchor improvement applied to whichever of the two cuts is
//!   active at the current violating minimizer.
//!
//! Every reported value is a certified lower bound: relaxation minima are
//! lower bounds for any `λ ≥ 0` because the feasible set is contained in the
//! ball and in every supporting halfspace of the ellipsoid. Upper bounds come
//! from feasible local searches; a [`GapCertificate`] combines the two.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::lagrangian::{self, CutSet, RelaxationSolution, Witness};
use crate::model::{CdtInstance, Cut};
use crate::trs::{self, TrsProblem};
use crate::{CdtError, Result};

/// Relative-gap threshold below which an instance counts as solved.
pub const SOLVED_GAP: f64 = 1e-4;

/// Hard cap on anchor-improvement outer iterations (safety net; the
/// tolerance test is the intended termination).
const MAX_OUTER: usize = 1000;

/// Inner step-halving cap for anchor perturbation.
const MAX_HALVINGS: usize = 60;

/// The five bound stages, in pipeline order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundKind {
    /// Plain dual bisection.
    Dual,
    /// One supporting cut.
    OneCut,
    /// One cut with anchor optimization.
    OneOpt,
    /// Two supporting cuts.
    TwoCut,
    /// Two cuts with anchor optimization.
    TwoOpt,
}

impl BoundKind {
    /// All stages, in pipeline order.
    pub const ALL: [BoundKind; 5] = [
        BoundKind::Dual,
        BoundKind::OneCut,
        BoundKind::OneOpt,
        BoundKind::TwoCut,
        BoundKind::TwoOpt,
    ];

    /// Stable lower-case token used by the CLI and CSV output.
    pub fn as_str(self) -> &'static str {
        match self {
            BoundKind::Dual => "dual",
            BoundKind::OneCut => "onecut",
            BoundKind::OneOpt => "oneopt",
            BoundKind::TwoCut => "twocut",
            BoundKind::TwoOpt => "twoopt",
        }
    }
}

impl std::fmt::Display for BoundKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for BoundKind {
    type Err = CdtError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dual" => Ok(BoundKind::Dual),
            "onecut" => Ok(BoundKind::OneCut),
            "oneopt" => Ok(BoundKind::OneOpt),
            "twocut" => Ok(BoundKind::TwoCut),
            "twoopt" => Ok(BoundKind::TwoOpt),
            other => Err(CdtError::InvalidParameter(format!(
                "unknown bound name {other:?}; expected one of dual, onecut, oneopt, twocut, twoopt"
            ))),
        }
    }
}

/// Tunable tolerances for the bound drivers.
#[derive(Debug, Clone, Default)]
pub struct BoundOptions {
    /// λ-bisection interval tolerance; default `1e-8·(1+λ̂)`.
    pub eps: Option<f64>,
    /// Anchor-optimization improvement tolerance; default `1e-6·(1+|lb|)`.
    pub tol: Option<f64>,
    /// Record per-iteration trace rows in the reports.
    pub trace: bool,
}

/// One row of a driver's iteration log.
#[derive(Debug, Clone)]
pub struct TraceRecord {
    /// 1-based iteration number within the driver.
    pub iteration: usize,
    /// Penalty weight evaluated (bisections) or reached (anchor loops).
    pub lambda: f64,
    /// Best lower bound known after the iteration, when one exists.
    pub lb: Option<f64>,
    /// Anchor accepted in this iteration (anchor-optimization loops only).
    pub anchor: Option<DVector<f64>>,
}

/// Outcome of one bound driver.
#[derive(Debug, Clone)]
pub struct BoundReport {
    /// Which stage produced the report.
    pub bound: BoundKind,
    /// Certified lower bound.
    pub lb: f64,
    /// Penalty weight the bound was attained at.
    pub final_lambda: f64,
    /// Cuts in force at the end of the stage.
    pub cuts: CutSet,
    /// A relaxation minimizer violating the ellipsoid constraint, when one
    /// was seen (anchor source for the next stage).
    pub witness_outside: Option<DVector<f64>>,
    /// A relaxation minimizer satisfying the ellipsoid constraint, when one
    /// was seen (seed for the upper-bound search).
    pub witness_inside: Option<DVector<f64>>,
    /// Iterations performed by the driver.
    pub iterations: usize,
    /// Wall-clock seconds spent in the driver.
    pub wall_time: f64,
    /// Iteration log, when requested via [`BoundOptions::trace`].
    pub trace: Option<Vec<TraceRecord>>,
}

/// Lower/upper bound pair with its relative gap.
#[derive(Debug, Clone)]
pub struct GapCertificate {
    /// Lower bound.
    pub lb: f64,
    /// Upper bound (objective at a feasible point).
    pub ub: f64,
    /// `(ub − lb)/|ub|`, or the absolute difference when `|ub| ≤ 1e-12`.
    pub rel_gap: f64,
    /// Whether the gap is at most [`SOLVED_GAP`].
    pub solved: bool,
}

/// Values of the four candidate solution classes of a two-cut relaxation.
#[derive(Debug, Clone)]
pub struct MultiplicityDiagnosis {
    /// Boundary local minimizer of the plain ball problem lying inside the
    /// ellipsoid, when it exists.
    pub interior: Option<f64>,
    /// Minimum with the first cut active (satisfying the second).
    pub first_cut: Option<f64>,
    /// Minimum with the second cut active (satisfying the first).
    pub second_cut: Option<f64>,
    /// Minimum with both cuts active.
    pub both_cuts: Option<f64>,
    /// At least three defined values within `1e-6·(1+|min|)` of the minimum —
    /// the near-tie pattern of the hardest instances.
    pub near_tie: bool,
}

fn resolved_eps(inst: &CdtInstance, opts: &BoundOptions) -> Result<f64> {
    match opts.eps {
        Some(e) if e.is_finite() && e > 0.0 => Ok(e),
        Some(e) => Err(CdtError::InvalidParameter(format!(
            "bisection tolerance must be positive and finite, got {e}"
        ))),
        None => Ok(1e-8 * (1.0 + inst.lambda_hat()?)),
    }
}

fn resolved_tol(lb: f64, opts: &BoundOptions) -> Result<f64> {
    match opts.tol {
        Some(t) if t > 0.0 => Ok(t),
        Some(t) => Err(CdtError::InvalidParameter(format!(
            "improvement tolerance must be positive, got {t}"
        ))),
        None => Ok(1e-6 * (1.0 + lb.abs())),
    }
}

/// Minimum-ellipsoid-value witness of a relaxation.
fn min_ell_witness(witnesses: &[Witness]) -> Option<&Witness> {
    witnesses
        .iter()
        .min_by(|a, b| a.ellipsoid.partial_cmp(&b.ellipsoid).expect("finite"))
}

/// Witness strictly violating the ellipsoid constraint, closest to the
/// boundary, if any; the violation margin keeps boundary-grazing minimizers
/// from being used as projection sources.
fn outside_witness(sol: &RelaxationSolution, a0: f64) -> Option<&Witness> {
    let margin = 1e-6 * (1.0 + a0.abs());
    sol.witnesses
        .iter()
        .filter(|w| w.ellipsoid > a0 + margin)
        .min_by(|a, b| a.ellipsoid.partial_cmp(&b.ellipsoid).expect("finite"))
}

/// Dual lower bound by bisection on the penalty weight.
///
/// Starting interval `[0, λ̂]` with `λ̂` the weight beyond which the
/// relaxation minimizer is guaranteed inside the ellipsoid. At each midpoint
/// the branch follows the minimum ellipsoid level `h` of the relaxation
/// minimizers: `h > a0` moves the lower end, otherwise the upper end, and the
/// best upper-branch relaxation value is the bound. When the unpenalized
/// relaxation already has a minimizer inside the ellipsoid, that value is
/// returned exactly (the minimizer is feasible and optimal).
pub fn lb_dual(inst: &CdtInstance, opts: &BoundOptions) -> Result<BoundReport> {
    let t0 = Instant::now();
    let info = inst.ellipsoid_info()?;
    let lam_hat = info.lambda_hat;
    let eps = resolved_eps(inst, opts)?;
    let a0 = inst.a0();
    let in_tol = 1e-8 * (1.0 + a0.abs());
    let mut trace = Vec::new();
    let mut iterations = 0usize;

    let base = lagrangian::solve_relaxation(inst, 0.0, &CutSet::empty())?;
    iterations += 1;
    if let Some(w) = base
        .witnesses
        .iter()
        .filter(|w| w.ellipsoid <= a0 + in_tol)
        .min_by(|x, y| x.ellipsoid.partial_cmp(&y.ellipsoid).expect("finite"))
    {
        // Feasible and optimal for the original problem: exact bound.
        return Ok(BoundReport {
            bound: BoundKind::Dual,
            lb: base.value,
            final_lambda: 0.0,
            cuts: CutSet::empty(),
            witness_outside: outside_witness(&base, a0).map(|w| w.point.clone()),
            witness_inside: Some(w.point.clone()),
            iterations,
            wall_time: t0.elapsed().as_secs_f64(),
            trace: opts.trace.then_some(trace),
        });
    }

    let mut lam_min = 0.0f64;
    let mut lam_max = lam_hat;
    let mut best: Option<(f64, f64)> = None;
    let mut inside: Option<DVector<f64>> = None;
    let mut outside = outside_witness(&base, a0).map(|w| w.point.clone());

    while lam_max - lam_min > eps {
        let lam = 0.5 * (lam_min + lam_max);
        let sol = lagrangian::solve_relaxation(inst, lam, &CutSet::empty())?;
        iterations += 1;
        if let Some(w) = outside_witness(&sol, a0) {
            outside = Some(w.point.clone());
        }
        if sol.h > a0 {
            lam_min = lam;
        } else {
            lam_max = lam;
            if best.map_or(true, |(v, _)| sol.value > v) {
                best = Some((sol.value, lam));
            }
            if let Some(w) = min_ell_witness(&sol.witnesses) {
                inside = Some(w.point.clone());
            }
        }
        if opts.trace {
            trace.push(TraceRecord {
                iteration: iterations,
                lambda: lam,
                lb: best.map(|(v, _)| v),
                anchor: None,
            });
        }
    }

    let (lb, final_lambda) = match best {
        Some(pair) => pair,
        None => {
            // No midpoint landed on the inside branch; fall back to the
            // upper endpoint, whose relaxation value is a valid bound.
            let sol = lagrangian::solve_relaxation(inst, lam_hat, &CutSet::empty())?;
            iterations += 1;
            if let Some(w) = min_ell_witness(&sol.witnesses) {
                if w.ellipsoid <= a0 + in_tol {
                    inside = Some(w.point.clone());
                }
            }
            if let Some(w) = outside_witness(&sol, a0) {
                outside = Some(w.point.clone());
            }
            (sol.value, lam_hat)
        }
    };

    Ok(BoundReport {
        bound: BoundKind::Dual,
        lb,
        final_lambda,
        cuts: CutSet::empty(),
        witness_outside: outside,
        witness_inside: inside,
        iterations,
        wall_time: t0.elapsed().as_secs_f64(),
        trace: opts.trace.then_some(trace),
    })
}

/// Shared state of the cut-driven bisection.
struct BisectionOutcome {
    lb: f64,
    lb_lambda: f64,
    v: Option<DVector<f64>>,
    inside: Option<DVector<f64>>,
    iterations: usize,
    trace: Vec<TraceRecord>,
}

/// Bisection on `[0, lambda_start]` with one or two cuts in force.
///
/// Per midpoint: when some plain-ball minimizer satisfies every cut, the cut
/// relaxation coincides with the plain one, so the branch follows the plain
/// ellipsoid level exactly as in the dual driver and the bound is left
/// untouched (the relaxed problem cannot improve on the previous stage
/// there). Otherwise the branch compares the boundary local minimizer `z₁`
/// of the plain problem with the cut-active minimizer `z₂`: if the active
/// value is lower or `z₁` violates the ellipsoid, the lower end moves and
/// `z₂` becomes the prospective next anchor source; otherwise the upper end
/// moves and the bound is raised to `min{f₁, f₂}` — sound because with the
/// plain global family cut off, the cut relaxation's minimum is at least
/// that number, and the feasible set lies inside every supporting halfspace.
fn cut_bisection(
    inst: &CdtInstance,
    cuts: &CutSet,
    lambda_start: f64,
    floor_lb: f64,
    eps: f64,
    want_trace: bool,
) -> Result<BisectionOutcome> {
    let a0 = inst.a0();
    let mut lam_min = 0.0f64;
    let mut lam_max = lambda_start.max(0.0);
    let mut lb = floor_lb;
    let mut lb_lambda = lam_max;
    let mut improved = false;
    let mut v: Option<DVector<f64>> = None;
    let mut inside: Option<DVector<f64>> = None;
    let mut iterations = 0usize;
    let mut trace = Vec::new();

    while lam_max - lam_min > eps {
        let lam = 0.5 * (lam_min + lam_max);
        iterations += 1;
        let mut push_trace = |lb_now: f64| {
            if want_trace {
                trace.push(TraceRecord {
                    iteration: iterations,
                    lambda: lam,
                    lb: lb_now.is_finite().then_some(lb_now),
                    anchor: None,
                });
            }
        };

        let guard = lagrangian::ball_minimizers_satisfying(inst, lam, cuts)?;
        if !guard.is_empty() {
            let h = guard
                .iter()
                .map(|w| w.ellipsoid)
                .fold(f64::INFINITY, f64::min);
            if h > a0 {
                lam_min = lam;
            } else {
                lam_max = lam;
                if let Some(w) = min_ell_witness(&guard) {
                    inside = Some(w.point.clone());
                }
            }
            push_trace(lb);
            continue;
        }

        let ball = lagrangian::ball_problem(inst, lam)?;
        let z1 = match trs::trs_local_nonglobal(&ball) {
            Ok(z) => z,
            // A root-finding failure in the degenerate band: treat the
            // local minimizer as absent. This can only weaken the bound
            // (the branch below never raises it), never unsound it.
            Err(CdtError::RootFinding(_) | CdtError::SecularPole(_)) => None,
            Err(e) => return Err(e),
        };
        let Some(z1) = z1 else {
            // No boundary local minimizer: the level function is above the
            // target here, so move the lower end.
            lam_min = lam;
            push_trace(lb);
            continue;
        };
        let f1 = lagrangian::relaxed_value(inst, lam, &z1.x);
        let active = match cuts.cuts() {
            [cut] => lagrangian::solve_cut_active(inst, lam, cut),
            [_, _] => lagrangian::solve_active_set_problem(inst, lam, cuts),
            _ => {
                return Err(CdtError::InvalidParameter(
                    "cut bisection requires one or two cuts".into(),
                ))
            }
        };
        let (f2, z2) = match active {
            Ok(Some(sol)) => (sol.value, Some(sol.witnesses[0].point.clone())),
            Ok(None) => (f64::INFINITY, None),
            // Unknown active-set value: assume the worst (it undercuts the
            // local minimizer), which forces the no-update branch.
            Err(CdtError::RootFinding(_) | CdtError::SecularPole(_)) => {
                (f64::NEG_INFINITY, None)
            }
            Err(e) => return Err(e),
        };
        let z1_in_e = inst.ellipsoid_value(&z1.x) <= a0;
        if f2 < f1 || !z1_in_e {
            lam_min = lam;
            if let Some(p) = z2 {
                v = Some(p);
            }
        } else {
            lam_max = lam;
            let cand = f1.min(f2);
            if cand > lb {
                lb = cand;
                lb_lambda = lam;
                improved = true;
            }
            inside = Some(z1.x.clone());
        }
        push_trace(lb);
    }

    if !improved {
        lb_lambda = lam_max;
    }
    Ok(BisectionOutcome {
        lb,
        lb_lambda,
        v,
        inside,
        iterations,
        trace,
    })
}

/// Reuses a previous stage's numbers under a new stage label, for the cases
/// where the stage has nothing to add (no violating witness to cut off).
/// The runtime is reported as zero since no new work was done.
fn relabeled(report: &BoundReport, kind: BoundKind) -> BoundReport {
    BoundReport {
        bound: kind,
        wall_time: 0.0,
        trace: None,
        ..report.clone()
    }
}

/// One-cut lower bound from an explicit anchor on the ellipsoid boundary.
///
/// `floor_lb` seeds the bound (pass the dual bound, or `−∞`); the bisection
/// runs on `[0, lambda_start]`.
pub fn lb_one_cut(
    inst: &CdtInstance,
    xbar: &DVector<f64>,
    lambda_start: f64,
    floor_lb: f64,
    opts: &BoundOptions,
) -> Result<BoundReport> {
    let t0 = Instant::now();
    let cut = inst.supporting_cut(xbar)?;
    let cuts = CutSet::one(cut);
    let eps = resolved_eps(inst, opts)?;
    let out = cut_bisection(inst, &cuts, lambda_start, floor_lb, eps, opts.trace)?;
    Ok(BoundReport {
        bound: BoundKind::OneCut,
        lb: out.lb,
        final_lambda: out.lb_lambda,
        cuts,
        witness_outside: out.v,
        witness_inside: out.inside,
        iterations: out.iterations,
        wall_time: t0.elapsed().as_secs_f64(),
        trace: opts.trace.then_some(out.trace),
    })
}

/// Whether a point lies strictly outside the ellipsoid (projection source).
fn strictly_outside(inst: &CdtInstance, x: &DVector<f64>) -> bool {
    inst.ellipsoid_value(x) > inst.a0() + 1e-9 * (1.0 + inst.a0().abs())
}

/// One-cut bound anchored at the boundary projection of the dual stage's
/// violating minimizer. Falls back to the dual report when that stage found
/// no violating minimizer (the dual bound is then already exact or no cut
/// can be anchored).
pub fn lb_one_cut_from(
    inst: &CdtInstance,
    dual: &BoundReport,
    opts: &BoundOptions,
) -> Result<BoundReport> {
    match &dual.witness_outside {
        Some(v) if strictly_outside(inst, v) => {
            let xbar = inst.project_to_boundary(v)?;
            lb_one_cut(inst, &xbar, dual.final_lambda, dual.lb, opts)
        }
        _ => Ok(relabeled(dual, BoundKind::OneCut)),
    }
}

/// Result of the inner step-halving search for an acceptable anchor move.
struct AcceptedAnchor {
    anchor: DVector<f64>,
    cut: Cut,
}

/// Halves the step size until the perturbed anchor's active-set value at the
/// current weight exceeds the current bound (so the rerun can improve it).
/// `evaluate` computes that value for a trial cut.
fn anchor_search(
    inst: &CdtInstance,
    cut: &Cut,
    v: &DVector<f64>,
    lb: f64,
    mut evaluate: impl FnMut(&Cut) -> Result<Option<f64>>,
) -> Result<Option<AcceptedAnchor>> {
    let mut eta = 1.0f64;
    for _ in 0..=MAX_HALVINGS {
        match inst.perturb_cut(cut, v, eta) {
            Ok(Some(anchor)) => {
                let trial = inst.supporting_cut(&anchor)?;
                if let Some(val) = evaluate(&trial)? {
                    if val > lb {
                        return Ok(Some(AcceptedAnchor { anchor, cut: trial }));
                    }
                }
            }
            Ok(None) => {}
            // The perturbation target does not sit on this cut's hyperplane
            // (stale witness); no step size can fix that.
            Err(_) => return Ok(None),
        }
        eta *= 0.5;
    }
    Ok(None)
}

/// Anchor-optimized one-cut bound: repeatedly moves the cut anchor toward
/// the current violating minimizer (step-halving until the cut-active value
/// at the current weight exceeds the bound), then reruns the one-cut
/// bisection seeded with the bound so far. Stops when an improvement falls
/// below the tolerance or no acceptable anchor move exists.
pub fn lb_one_opt(
    inst: &CdtInstance,
    initial: &BoundReport,
    opts: &BoundOptions,
) -> Result<BoundReport> {
    let t0 = Instant::now();
    let (Some(first_cut), Some(first_v)) =
        (initial.cuts.cuts().first(), initial.witness_outside.as_ref())
    else {
        return Ok(relabeled(initial, BoundKind::OneOpt));
    };
    let eps = resolved_eps(inst, opts)?;
    let tol = resolved_tol(initial.lb, opts)?;
    let mut cut = first_cut.clone();
    let mut v = first_v.clone();
    let mut lb = initial.lb;
    let mut lam = initial.final_lambda;
    let mut inside = initial.witness_inside.clone();
    let mut iterations = 0usize;
    let mut trace = Vec::new();
    let mut improvement = f64::INFINITY;

    while improvement > tol && iterations < MAX_OUTER {
        let accepted = anchor_search(inst, &cut, &v, lb, |trial| {
            Ok(lagrangian::solve_cut_active(inst, lam, trial)?.map(|a| a.value))
        })?;
        let Some(step) = accepted else { break };
        iterations += 1;
        let rerun = cut_bisection(inst, &CutSet::one(step.cut.clone()), lam, lb, eps, false)?;
        improvement = rerun.lb - lb;
        lb = rerun.lb;
        lam = rerun.lb_lambda;
        cut = step.cut;
        if let Some(nv) = rerun.v {
            v = nv;
        }
        if rerun.inside.is_some() {
            inside = rerun.inside;
        }
        if opts.trace {
            trace.push(TraceRecord {
                iteration: iterations,
                lambda: lam,
                lb: Some(lb),
                anchor: Some(step.anchor),
            });
        }
    }

    Ok(BoundReport {
        bound: BoundKind::OneOpt,
        lb,
        final_lambda: lam,
        cuts: CutSet::one(cut),
        witness_outside: Some(v),
        witness_inside: inside,
        iterations,
        wall_time: t0.elapsed().as_secs_f64(),
        trace: opts.trace.then_some(trace),
    })
}

/// Two-cut lower bound with explicit cuts, bisecting on `[0, lambda_start]`
/// with the bound seeded by `floor_lb`.
pub fn lb_two_cut_anchored(
    inst: &CdtInstance,
    cuts: &CutSet,
    lambda_start: f64,
    floor_lb: f64,
    opts: &BoundOptions,
) -> Result<BoundReport> {
    if cuts.len() != 2 {
        return Err(CdtError::InvalidParameter(
            "the two-cut driver requires exactly two cuts".into(),
        ));
    }
    let t0 = Instant::now();
    let eps = resolved_eps(inst, opts)?;
    let out = cut_bisection(inst, cuts, lambda_start, floor_lb, eps, opts.trace)?;
    Ok(BoundReport {
        bound: BoundKind::TwoCut,
        lb: out.lb,
        final_lambda: out.lb_lambda,
        cuts: cuts.clone(),
        witness_outside: out.v,
        witness_inside: out.inside,
        iterations: out.iterations,
        wall_time: t0.elapsed().as_secs_f64(),
        trace: opts.trace.then_some(out.trace),
    })
}

/// Two-cut bound built on a one-cut report: the second cut is anchored at
/// the boundary projection of that stage's violating minimizer. When no such
/// minimizer exists the first cut is duplicated, which reproduces the
/// one-cut bound exactly (sound, no progress).
pub fn lb_two_cut(
    inst: &CdtInstance,
    onecut: &BoundReport,
    opts: &BoundOptions,
) -> Result<BoundReport> {
    let Some(first) = onecut.cuts.cuts().first() else {
        return Ok(relabeled(onecut, BoundKind::TwoCut));
    };
    let second = match &onecut.witness_outside {
        Some(v) if strictly_outside(inst, v) => {
            let xbar = inst.project_to_boundary(v)?;
            inst.supporting_cut(&xbar)?
        }
        _ => first.clone(),
    };
    let cuts = CutSet::two(first.clone(), second);
    lb_two_cut_anchored(inst, &cuts, onecut.final_lambda, onecut.lb, opts)
}

/// Anchor-optimized two-cut bound: perturbs whichever cut is active at the
/// current violating minimizer (trying the first and falling back to the
/// second when both are active), with the same step-halving acceptance and
/// seeded rerun as the one-cut optimizer.
pub fn lb_two_opt(
    inst: &CdtInstance,
    initial: &BoundReport,
    opts: &BoundOptions,
) -> Result<BoundReport> {
    let t0 = Instant::now();
    let (2, Some(first_v)) = (initial.cuts.len(), initial.witness_outside.as_ref()) else {
        return Ok(relabeled(initial, BoundKind::TwoOpt));
    };
    let eps = resolved_eps(inst, opts)?;
    let tol = resolved_tol(initial.lb, opts)?;
    let mut cuts: Vec<Cut> = initial.cuts.cuts().to_vec();
    let mut v = first_v.clone();
    let mut lb = initial.lb;
    let mut lam = initial.final_lambda;
    let mut inside = initial.witness_inside.clone();
    let mut iterations = 0usize;
    let mut trace = Vec::new();
    let mut improvement = f64::INFINITY;

    while improvement > tol && iterations < MAX_OUTER {
        let active: Vec<usize> = (0..2).filter(|&i| cuts[i].is_active_at(&v)).collect();
        if active.is_empty() {
            break;
        }
        let mut step: Option<(usize, AcceptedAnchor)> = None;
        for &idx in &active {
            let trial_of = |c: &Cut| {
                let mut pair = cuts.clone();
                pair[idx] = c.clone();
                CutSet::two(pair[0].clone(), pair[1].clone())
            };
            let found = anchor_search(inst, &cuts[idx], &v, lb, |trial| {
                Ok(
                    lagrangian::solve_active_set_problem(inst, lam, &trial_of(trial))?
                        .map(|a| a.value),
                )
            })?;
            if let Some(a) = found {
                step = Some((idx, a));
                break;
            }
        }
        let Some((idx, step)) = step else { break };
        iterations += 1;
        cuts[idx] = step.cut;
        let set = CutSet::two(cuts[0].clone(), cuts[1].clone());
        let rerun = cut_bisection(inst, &set, lam, lb, eps, false)?;
        improvement = rerun.lb - lb;
        lb = rerun.lb;
        lam = rerun.lb_lambda;
        if let Some(nv) = rerun.v {
            v = nv;
        }
        if rerun.inside.is_some() {
            inside = rerun.inside;
        }
        if opts.trace {
            trace.push(TraceRecord {
                iteration: iterations,
                lambda: lam,
                lb: Some(lb),
                anchor: Some(step.anchor),
            });
        }
    }

    Ok(BoundReport {
        bound: BoundKind::TwoOpt,
        lb,
        final_lambda: lam,
        cuts: CutSet::two(cuts[0].clone(), cuts[1].clone()),
        witness_outside: Some(v),
        witness_inside: inside,
        iterations,
        wall_time: t0.elapsed().as_secs_f64(),
        trace: opts.trace.then_some(trace),
    })
}

// ---------------------------------------------------------------------------
// Upper bound: feasible local search.
// ---------------------------------------------------------------------------

fn ball_tol() -> f64 {
    1e-8
}

fn ellipsoid_tol(inst: &CdtInstance) -> f64 {
    1e-8 * (1.0 + inst.a0().abs())
}

fn is_feasible_point(inst: &CdtInstance, x: &DVector<f64>) -> bool {
    x.norm() <= 1.0 + ball_tol() && inst.ellipsoid_value(x) <= inst.a0() + ellipsoid_tol(inst)
}

/// Alternates exact ball clamping with the center-ray pull onto the
/// ellipsoid boundary until both constraints hold. `None` when the
/// alternation fails to land feasible.
fn pull_feasible(inst: &CdtInstance, start: &DVector<f64>) -> Option<DVector<f64>> {
    let a0 = inst.a0();
    let etol = ellipsoid_tol(inst);
    let mut x = start.clone();
    for _ in 0..100 {
        let n = x.norm();
        if n > 1.0 {
            x /= n;
        }
        if inst.ellipsoid_value(&x) > a0 + 0.5 * etol {
            match inst.project_to_boundary(&x) {
                Ok(p) => x = p,
                Err(_) => return None,
            }
        }
        if is_feasible_point(inst, &x) {
            return Some(x);
        }
    }
    None
}

/// Projected-gradient descent on the objective over the feasible set.
fn descend(inst: &CdtInstance, start: DVector<f64>) -> DVector<f64> {
    let q = inst.q_mat();
    let scale = 1.0 + q.iter().fold(0.0f64, |m, v| m.max(v.abs())) * q.nrows() as f64;
    let mut x = start;
    let mut fx = inst.objective(&x);
    for _ in 0..500 {
        let grad = q * &x * 2.0 + inst.q_lin();
        if grad.norm() <= 1e-12 * (1.0 + fx.abs()) {
            break;
        }
        let mut alpha = 1.0 / scale;
        let mut moved = false;
        for _ in 0..40 {
            if let Some(cand) = pull_feasible(inst, &(&x - &grad * alpha)) {
                let fc = inst.objective(&cand);
                if fc < fx - 1e-12 * (1.0 + fx.abs()) {
                    x = cand;
                    fx = fc;
                    moved = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !moved {
            break;
        }
    }
    x
}

/// Newton refinement of a stationary point on the ellipsoid boundary
/// (optionally also pinned to the unit sphere). Returns the refined point
/// when the KKT residuals converge.
fn kkt_newton(inst: &CdtInstance, start: &DVector<f64>, pin_ball: bool) -> Option<DVector<f64>> {
    let n = inst.dim();
    if pin_ball && n < 2 {
        return None;
    }
    let m = n + 1 + usize::from(pin_ball);
    let a0 = inst.a0();
    let mut x = start.clone();
    // Least-squares multipliers from the current gradient.
    let g = inst.q_mat() * &x * 2.0 + inst.q_lin();
    let c = inst.ellipsoid_grad(&x);
    let mut lam = -g.dot(&c) / c.norm_squared().max(1e-300);
    let mut mu = 0.0f64;
    if pin_ball {
        // Joint least squares on span{c, 2x}.
        let b = &x * 2.0;
        let (cc, cb, bb) = (c.norm_squared(), c.dot(&b), b.norm_squared());
        let det = cc * bb - cb * cb;
        if det > 1e-12 * cc.max(1.0) * bb.max(1.0) {
            let (gc, gb) = (g.dot(&c), g.dot(&b));
            lam = -(bb * gc - cb * gb) / det;
            mu = -(cc * gb - cb * gc) / det;
        }
    }
    for _ in 0..40 {
        let g = inst.q_mat() * &x * 2.0 + inst.q_lin();
        let c = inst.ellipsoid_grad(&x);
        let mut resid = DVector::zeros(m);
        let mut stat = &g + &c * lam;
        if pin_ball {
            stat += &x * (2.0 * mu);
        }
        resid.rows_mut(0, n).copy_from(&stat);
        resid[n] = inst.ellipsoid_value(&x) - a0;
        if pin_ball {
            resid[n + 1] = x.norm_squared() - 1.0;
        }
        let scale = 1.0 + g.norm() + a0.abs();
        if resid.norm() <= 1e-11 * scale {
            return Some(x);
        }
        let mut jac = DMatrix::zeros(m, m);
        let hess = inst.q_mat() * 2.0 + inst.a_mat() * (2.0 * lam);
        let hess = if pin_ball {
            hess + DMatrix::identity(n, n) * (2.0 * mu)
        } else {
            hess
        };
        jac.view_mut((0, 0), (n, n)).copy_from(&hess);
        jac.view_mut((0, n), (n, 1)).copy_from(&c);
        jac.view_mut((n, 0), (1, n)).copy_from(&c.transpose());
        if pin_ball {
            let bx = &x * 2.0;
            jac.view_mut((0, n + 1), (n, 1)).copy_from(&bx);
            jac.view_mut((n + 1, 0), (1, n)).copy_from(&bx.transpose());
        }
        let delta = jac.lu().solve(&(-resid))?;
        let mut dx = delta.rows(0, n).into_owned();
        let cap = 0.5 * (1.0 + x.norm());
        let dn = dx.norm();
        if dn > cap {
            dx *= cap / dn;
        }
        x += dx;
        lam += delta[n];
        if pin_ball {
            mu += delta[n + 1];
        }
    }
    None
}

/// Upper bound from explicit seed points: each seed is pulled into the
/// feasible set, descended, and polished against the exact stationary
/// points of the ball problem and the Newton-refined boundary candidates;
/// the best feasible value wins. Errors when no seed reaches feasibility.
pub fn upper_bound_from_seeds(
    inst: &CdtInstance,
    seeds: &[DVector<f64>],
) -> Result<(f64, DVector<f64>)> {
    let mut best: Option<(f64, DVector<f64>)> = None;
    let mut consider = |cand: DVector<f64>, best: &mut Option<(f64, DVector<f64>)>| {
        if !is_feasible_point(inst, &cand) {
            return;
        }
        let val = inst.objective(&cand);
        if best.as_ref().map_or(true, |(v, _)| val < *v) {
            *best = Some((val, cand));
        }
    };

    // Exact stationary points of the plain ball problem that happen to be
    // feasible are polish candidates independent of any seed.
    if let Ok(ball) = TrsProblem::new(inst.q_mat().clone(), inst.q_lin().clone(), 1.0) {
        if let Ok((global, local)) = trs::trs_global_and_local(&ball) {
            for member in global.family_members(1.0) {
                consider(member, &mut best);
            }
            if let Some(l) = local {
                consider(l.x, &mut best);
            }
        }
    }

    let mut reached_feasible = best.is_some();
    for seed in seeds {
        let Some(start) = pull_feasible(inst, seed) else {
            continue;
        };
        reached_feasible = true;
        let settled = descend(inst, start);
        consider(settled.clone(), &mut best);
        if let Some(p) = kkt_newton(inst, &settled, false) {
            consider(p, &mut best);
        }
        if let Some(p) = kkt_newton(inst, &settled, true) {
            consider(p, &mut best);
        }
    }
    if !reached_feasible {
        return Err(CdtError::Numeric(
            "no seed reached the feasible set; cannot certify an upper bound".into(),
        ));
    }
    best.ok_or_else(|| {
        CdtError::Numeric("no feasible candidate survived the local search".into())
    })
}

/// Upper bound seeded from a one-cut report's witnesses plus the ellipsoid's
/// interior minimizer.
pub fn upper_bound(inst: &CdtInstance, onecut: &BoundReport) -> Result<(f64, DVector<f64>)> {
    let mut seeds = Vec::new();
    if let Some(w) = &onecut.witness_inside {
        seeds.push(w.clone());
    }
    if let Some(w) = &onecut.witness_outside {
        seeds.push(w.clone());
    }
    seeds.push(inst.ellipsoid_info()?.argmin_z);
    upper_bound_from_seeds(inst, &seeds)
}

/// Relative-gap certificate. For `|ub| ≤ 1e-12` the gap is the absolute
/// difference (the relative measure is undefined at zero).
pub fn relative_gap(lb: f64, ub: f64) -> GapCertificate {
    let rel_gap = if ub.abs() <= 1e-12 {
        ub - lb
    } else {
        (ub - lb) / ub.abs()
    };
    GapCertificate {
        lb,
        ub,
        rel_gap,
        solved: rel_gap <= SOLVED_GAP,
    }
}

/// Values of the four candidate solution classes of the two-cut relaxation
/// at `λ`: the in-ellipsoid boundary local minimizer of the plain problem,
/// each single-cut-active minimum (subject to the other cut), and the
/// both-cuts-active minimum. Near-ties among three or more of them flag the
/// multiple-global-solution pattern.
pub fn diagnose_multiplicity(
    inst: &CdtInstance,
    lambda: f64,
    cuts: &CutSet,
) -> Result<MultiplicityDiagnosis> {
    if cuts.len() != 2 {
        return Err(CdtError::InvalidParameter(
            "the multiplicity diagnostic requires exactly two cuts".into(),
        ));
    }
    let a0 = inst.a0();
    let ball = lagrangian::ball_problem(inst, lambda)?;
    let interior = trs::trs_local_nonglobal(&ball)?
        .filter(|z| inst.ellipsoid_value(&z.x) <= a0 + 1e-6 * (1.0 + a0.abs()))
        .map(|z| lagrangian::relaxed_value(inst, lambda, &z.x));

    let first = &cuts.cuts()[0];
    let second = &cuts.cuts()[1];
    let single = |active: &Cut, other: &Cut| -> Result<Option<f64>> {
        match lagrangian::nullspace_reduce(inst, lambda, active)? {
            lagrangian::ReducedProblem::Infeasible => Ok(None),
            lagrangian::ReducedProblem::Point { x, value } => {
                Ok(lagrangian::satisfies_cut(other, &x).then_some(value))
            }
            lagrangian::ReducedProblem::Reduced(red) => {
                let (global, local) = trs::trs_global_and_local(&red.trs)?;
                for sol in std::iter::once(&global).chain(local.iter()) {
                    let x = red.lift(&sol.x);
                    if lagrangian::satisfies_cut(other, &x) {
                        return Ok(Some(sol.value + red.offset));
                    }
                }
                Ok(None)
            }
        }
    };
    let first_cut = single(first, second)?;
    let second_cut = single(second, first)?;

    let pair = CutSet::two(first.clone(), second.clone());
    let both_cuts = both_active_value(inst, lambda, &pair)?;

    let defined: Vec<f64> = [interior, first_cut, second_cut, both_cuts]
        .into_iter()
        .flatten()
        .collect();
    let near_tie = if defined.len() >= 3 {
        let min = defined.iter().cloned().fold(f64::INFINITY, f64::min);
        let band = 1e-6 * (1.0 + min.abs());
        defined.iter().filter(|v| **v <= min + band).count() >= 3
    } else {
        false
    };
    Ok(MultiplicityDiagnosis {
        interior,
        first_cut,
        second_cut,
        both_cuts,
        near_tie,
    })
}

/// Minimum with both cuts held active, via the rank-2 reduction inside the
/// active-set solver; `None` when that intersection misses the ball or the
/// normals are parallel.
fn both_active_value(inst: &CdtInstance, lambda: f64, cuts: &CutSet) -> Result<Option<f64>> {
    // The two-cut active-set solver enumerates both single-active problems
    // and the both-active one; recover just the both-active piece by
    // restricting each single-active solve to points where the other cut is
    // (numerically) active.
    let sol = lagrangian::solve_active_set_problem(inst, lambda, cuts)?;
    Ok(sol.and_then(|s| {
        s.witnesses
            .iter()
            .filter(|w| {
                cuts.cuts()[0].is_active_at(&w.point) && cuts.cuts()[1].is_active_at(&w.point)
            })
            .map(|w| w.objective)
            .fold(None, |acc: Option<f64>, v| {
                Some(acc.map_or(v, |a| a.min(v)))
            })
    }))
}

// ---------------------------------------------------------------------------
// Pipeline: memoized stage graph for the CLI and benchmarks.
// ---------------------------------------------------------------------------

/// Everything the callers need about one bound of one instance.
#[derive(Debug, Clone)]
pub struct SolveSummary {
    /// The stage report.
    pub report: BoundReport,
    /// Upper bound shared by all stages of this instance.
    pub ub: f64,
    /// Feasible point attaining the upper bound.
    pub ub_witness: DVector<f64>,
    /// Gap certificate for this stage's bound against the shared upper bound.
    pub gap: GapCertificate,
    /// Wall-clock seconds over the stage's dependency closure, including the
    /// upper-bound search.
    pub total_seconds: f64,
}

/// Memoized driver graph over one instance: stages are computed once and
/// reused (the two optimizing stages depend on their base stages, and the
/// upper bound is computed once after the one-cut stage).
pub struct Pipeline<'a> {
    inst: &'a CdtInstance,
    opts: BoundOptions,
    dual: Option<BoundReport>,
    onecut: Option<BoundReport>,
    oneopt: Option<BoundReport>,
    twocut: Option<BoundReport>,
    twoopt: Option<BoundReport>,
    upper: Option<(f64, DVector<f64>, f64)>,
}

impl<'a> Pipeline<'a> {
    /// New pipeline over an instance.
    pub fn new(inst: &'a CdtInstance, opts: BoundOptions) -> Self {
        Self {
            inst,
            opts,
            dual: None,
            onecut: None,
            oneopt: None,
            twocut: None,
            twoopt: None,
            upper: None,
        }
    }

    /// The dual-stage report.
    pub fn dual(&mut self) -> Result<&BoundReport> {
        if self.dual.is_none() {
            self.dual = Some(lb_dual(self.inst, &self.opts)?);
        }
        Ok(self.dual.as_ref().expect("just computed"))
    }

    /// The one-cut report.
    pub fn onecut(&mut self) -> Result<&BoundReport> {
        if self.onecut.is_none() {
            self.dual()?;
            let dual = self.dual.as_ref().expect("computed above");
            self.onecut = Some(lb_one_cut_from(self.inst, dual, &self.opts)?);
        }
        Ok(self.onecut.as_ref().expect("just computed"))
    }

    /// The anchor-optimized one-cut report.
    pub fn oneopt(&mut self) -> Result<&BoundReport> {
        if self.oneopt.is_none() {
            self.onecut()?;
            let base = self.onecut.as_ref().expect("computed above");
            self.oneopt = Some(lb_one_opt(self.inst, base, &self.opts)?);
        }
        Ok(self.oneopt.as_ref().expect("just computed"))
    }

    /// The two-cut report.
    pub fn twocut(&mut self) -> Result<&BoundReport> {
        if self.twocut.is_none() {
            self.onecut()?;
            let base = self.onecut.as_ref().expect("computed above");
            self.twocut = Some(lb_two_cut(self.inst, base, &self.opts)?);
        }
        Ok(self.twocut.as_ref().expect("just computed"))
    }

    /// The anchor-optimized two-cut report.
    pub fn twoopt(&mut self) -> Result<&BoundReport> {
        if self.twoopt.is_none() {
            self.twocut()?;
            let base = self.twocut.as_ref().expect("computed above");
            self.twoopt = Some(lb_two_opt(self.inst, base, &self.opts)?);
        }
        Ok(self.twoopt.as_ref().expect("just computed"))
    }

    /// The shared upper bound (computed once, after the one-cut stage),
    /// seeded from the dual and one-cut witnesses and the ellipsoid's
    /// interior minimizer.
    pub fn upper(&mut self) -> Result<(f64, DVector<f64>)> {
        if self.upper.is_none() {
            self.onecut()?;
            let t0 = Instant::now();
            let mut seeds = Vec::new();
            for report in [self.onecut.as_ref(), self.dual.as_ref()].into_iter().flatten() {
                seeds.extend(report.witness_inside.iter().cloned());
                seeds.extend(report.witness_outside.iter().cloned());
            }
            seeds.push(self.inst.ellipsoid_info()?.argmin_z);
            let (ub, witness) = upper_bound_from_seeds(self.inst, &seeds)?;
            self.upper = Some((ub, witness, t0.elapsed().as_secs_f64()));
        }
        let (ub, w, _) = self.upper.as_ref().expect("just computed");
        Ok((*ub, w.clone()))
    }

    /// Full summary for one stage: report, shared upper bound, gap, and the
    /// cumulative wall time of the dependency closure.
    pub fn summary(&mut self, kind: BoundKind) -> Result<SolveSummary> {
        let report = match kind {
            BoundKind::Dual => self.dual()?.clone(),
            BoundKind::OneCut => self.onecut()?.clone(),
            BoundKind::OneOpt => self.oneopt()?.clone(),
            BoundKind::TwoCut => self.twocut()?.clone(),
            BoundKind::TwoOpt => self.twoopt()?.clone(),
        };
        let (ub, ub_witness) = self.upper()?;
        let ub_secs = self.upper.as_ref().map(|(_, _, s)| *s).unwrap_or(0.0);
        let mut total = ub_secs;
        let closure: &[Option<&BoundReport>] = match kind {
            BoundKind::Dual => &[self.dual.as_ref()],
            BoundKind::OneCut => &[self.dual.as_ref(), self.onecut.as_ref()],
            BoundKind::OneOpt => &[
                self.dual.as_ref(),
                self.onecut.as_ref(),
                self.oneopt.as_ref(),
            ],
            BoundKind::TwoCut => &[
                self.dual.as_ref(),
                self.onecut.as_ref(),
                self.twocut.as_ref(),
            ],
            BoundKind::TwoOpt => &[
                self.dual.as_ref(),
                self.onecut.as_ref(),
                self.twocut.as_ref(),
                self.twoopt.as_ref(),
            ],
        };
        for r in closure.iter().flatten() {
            total += r.wall_time;
        }
        let gap = relative_gap(report.lb, ub);
        Ok(SolveSummary {
            report,
            ub,
            ub_witness,
            gap,
            total_seconds: total,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::test_fixtures::example1;
    use approx::assert_relative_eq;

    fn opts() -> BoundOptions {
        BoundOptions::default()
    }

    #[test]
    fn dual_reference_bound() {
        let inst = example1();
        let report = lb_dual(&inst, &opts()).unwrap();
        assert!((report.final_lambda - 1.0).abs() <= 1e-6, "{}", report.final_lambda);
        assert!((report.lb - (-4.25)).abs() <= 1e-3, "{}", report.lb);
        let out = report.witness_outside.as_ref().expect("violating minimizer");
        let expect = DVector::from_vec(vec![-0.9114378277661476, 0.41143782776614765]);
        assert!((out - &expect).norm() <= 1e-3, "{out:?}");
        let inside = report.witness_inside.as_ref().expect("feasible-side witness");
        assert!(inst.ellipsoid_value(inside) <= 2.0 + 1e-8);
        assert!(report.wall_time < 1.0);
    }

    #[test]
    fn dual_early_exit_when_ball_minimum_feasible() {
        let inst = CdtInstance::new(
            DMatrix::identity(2, 2),
            DVector::from_vec(vec![-0.2, 0.0]),
            DMatrix::identity(2, 2),
            DVector::from_vec(vec![0.0, 0.0]),
            2.0,
        )
        .unwrap();
        let report = lb_dual(&inst, &opts()).unwrap();
        assert_eq!(report.final_lambda, 0.0);
        // Interior minimum (0.1, 0) with value −0.01.
        assert!((report.lb - (-0.01)).abs() <= 1e-15, "{}", report.lb);
        assert!(report.witness_inside.is_some());
        assert_eq!(report.iterations, 1);
    }

    #[test]
    fn onecut_reference_bound() {
        let inst = example1();
        let dual = lb_dual(&inst, &opts()).unwrap();
        let report = lb_one_cut_from(&inst, &dual, &opts()).unwrap();
        assert!((report.lb - (-4.097)).abs() <= 0.01, "{}", report.lb);
        assert!((report.final_lambda - 0.726).abs() <= 0.01, "{}", report.final_lambda);
        let anchor = report.cuts.cuts()[0].anchor();
        let expect = DVector::from_vec(vec![-0.7901, 0.3565]);
        assert!((anchor - &expect).norm() <= 1e-3, "{anchor:?}");
        assert!(report.witness_outside.is_some());
        assert!(report.lb >= dual.lb - 1e-12);
    }

    #[test]
    fn far_side_anchor_reproduces_dual_bound() {
        let inst = example1();
        let dual = lb_dual(&inst, &opts()).unwrap();
        // Anchor on the opposite side of the ellipsoid: its halfspace
        // contains the whole minimizer family, so the cut adds nothing.
        let far = inst
            .project_to_boundary(&DVector::from_vec(vec![0.9114378277661476, -0.41143782776614765]))
            .unwrap();
        let report = lb_one_cut(&inst, &far, dual.final_lambda, dual.lb, &opts()).unwrap();
        assert!((report.lb - dual.lb).abs() <= 1e-6);
    }

    #[test]
    fn oneopt_matches_iteration_table() {
        let inst = example1();
        let mut o = opts();
        o.trace = true;
        let dual = lb_dual(&inst, &o).unwrap();
        let onecut = lb_one_cut_from(&inst, &dual, &o).unwrap();
        let report = lb_one_opt(&inst, &onecut, &o).unwrap();
        assert!((report.lb - (-4.0362)).abs() <= 1e-3, "{}", report.lb);
        assert!((report.final_lambda - 0.557).abs() <= 0.01, "{}", report.final_lambda);
        let trace = report.trace.as_ref().expect("trace requested");
        assert!(!trace.is_empty());
        let first = &trace[0];
        let anchor = first.anchor.as_ref().expect("anchor recorded");
        let expect = DVector::from_vec(vec![-0.7204, 0.6658]);
        assert!((anchor - &expect).norm() <= 1e-2, "{anchor:?}");
        assert!((first.lb.unwrap() - (-4.0850)).abs() <= 1e-2, "{:?}", first.lb);
        assert!(report.lb >= onecut.lb - 1e-8);
    }

    #[test]
    fn oneopt_with_infinite_tolerance_is_identity() {
        let inst = example1();
        let dual = lb_dual(&inst, &opts()).unwrap();
        let onecut = lb_one_cut_from(&inst, &dual, &opts()).unwrap();
        let mut o = opts();
        o.tol = Some(f64::INFINITY);
        let report = lb_one_opt(&inst, &onecut, &o).unwrap();
        assert_eq!(report.bound, BoundKind::OneOpt);
        assert_eq!(report.iterations, 0);
        assert!(report.lb == onecut.lb);
        assert!(report.final_lambda == onecut.final_lambda);
    }

    #[test]
    fn twocut_reference_bound() {
        let inst = example1();
        let dual = lb_dual(&inst, &opts()).unwrap();
        let onecut = lb_one_cut_from(&inst, &dual, &opts()).unwrap();
        let report = lb_two_cut(&inst, &onecut, &opts()).unwrap();
        assert!((report.lb - (-4.005)).abs() <= 0.01, "{}", report.lb);
        assert!((report.final_lambda - 0.39).abs() <= 0.02, "{}", report.final_lambda);
        assert!(report.lb >= onecut.lb - 1e-8);
        assert_eq!(report.cuts.len(), 2);
    }

    #[test]
    fn twoopt_closes_the_gap() {
        let inst = example1();
        let mut pipe = Pipeline::new(&inst, opts());
        let summary = pipe.summary(BoundKind::TwoOpt).unwrap();
        assert!((summary.ub - (-4.0)).abs() <= 1e-6, "ub = {}", summary.ub);
        assert!(summary.gap.solved, "gap = {}", summary.gap.rel_gap);
        assert!(summary.report.lb >= -4.0 - 1e-6);
        assert!(summary.report.lb <= -4.0 + 1e-4);
    }

    #[test]
    fn upper_bound_reference() {
        let inst = example1();
        let dual = lb_dual(&inst, &opts()).unwrap();
        let onecut = lb_one_cut_from(&inst, &dual, &opts()).unwrap();
        let (ub, witness) = upper_bound(&inst, &onecut).unwrap();
        assert!((ub - (-4.0)).abs() <= 1e-6, "ub = {ub}");
        assert!(witness.norm() <= 1.0 + 1e-8);
        assert!(inst.ellipsoid_value(&witness) <= 2.0 + 1e-8 * 3.0);
        assert_relative_eq!(inst.objective(&witness), ub, epsilon = 1e-12);
    }

    #[test]
    fn gap_certificate_arithmetic() {
        let exact = relative_gap(-4.0, -4.0);
        assert!(exact.rel_gap == 0.0 && exact.solved);
        let boundary = relative_gap(-4.0004, -4.0);
        assert!(boundary.solved, "gap = {}", boundary.rel_gap);
        assert!((boundary.rel_gap - 1e-4).abs() <= 1e-9);
        let dual_gap = relative_gap(-4.25, -4.0);
        assert!(!dual_gap.solved);
        assert!((dual_gap.rel_gap - 0.0625).abs() <= 1e-12);
        let zero_ub = relative_gap(-0.5, 0.0);
        assert!(zero_ub.rel_gap == 0.5 && !zero_ub.solved);
    }

    #[test]
    fn bound_chain_on_reference_instance() {
        let inst = example1();
        let mut pipe = Pipeline::new(&inst, opts());
        let dual = pipe.summary(BoundKind::Dual).unwrap();
        let onecut = pipe.summary(BoundKind::OneCut).unwrap();
        let oneopt = pipe.summary(BoundKind::OneOpt).unwrap();
        let twocut = pipe.summary(BoundKind::TwoCut).unwrap();
        let twoopt = pipe.summary(BoundKind::TwoOpt).unwrap();
        let ub = dual.ub;
        assert!(dual.report.lb <= onecut.report.lb + 1e-8);
        assert!(onecut.report.lb <= twocut.report.lb + 1e-8);
        assert!(onecut.report.lb <= oneopt.report.lb + 1e-8);
        assert!(twocut.report.lb <= twoopt.report.lb + 1e-8);
        for s in [&dual, &onecut, &oneopt, &twocut, &twoopt] {
            assert!(s.report.lb <= ub + 1e-6 * (1.0 + ub.abs()));
            assert!(s.total_seconds >= 0.0);
        }
    }

    #[test]
    fn multiplicity_diagnostic_duplicate_cuts() {
        let inst = example1();
        let anchor = inst
            .project_to_boundary(&DVector::from_vec(vec![-0.9114378277661476, 0.41143782776614765]))
            .unwrap();
        let cut = inst.supporting_cut(&anchor).unwrap();
        let cuts = CutSet::two(cut.clone(), cut);
        let diag = diagnose_multiplicity(&inst, 0.5, &cuts).unwrap();
        assert_eq!(diag.first_cut, diag.second_cut);
        assert!(diag.first_cut.is_some());
    }

    #[test]
    fn determinism_across_reruns() {
        let inst = example1();
        let a = lb_dual(&inst, &opts()).unwrap();
        let b = lb_dual(&inst, &opts()).unwrap();
        assert!(a.lb == b.lb && a.final_lambda == b.final_lambda);
        let oa = lb_one_cut_from(&inst, &a, &opts()).unwrap();
        let ob = lb_one_cut_from(&inst, &b, &opts()).unwrap();
        assert!(oa.lb == ob.lb && oa.final_lambda == ob.final_lambda);
    }
}
