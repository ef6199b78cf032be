//! Instance files, random instance generation, and benchmark reporting.
//!
//! The on-disk instance format is a UTF-8 JSON object with fixed key order
//! `n, Q, q, A, a, a0, meta` where matrices are full symmetric row-major
//! arrays. Floats are serialized as 17-significant-digit scientific decimals,
//! which round-trip `f64` exactly, so writing the same instance always
//! produces identical bytes.
//!
//! The generator draws eigenvalue-controlled random instances whose plain
//! ball problem has a local-nonglobal minimizer and whose ball minimum
//! violates the ellipsoid constraint — the regime where the bound hierarchy
//! is interesting. Benchmarks run the bound pipeline over instance batches
//! and emit a CSV with the per-bound aggregate conventions of the report
//! tables (gap averages over each cut bound's own unsolved instances, and
//! the two-cut-optimized timing average over instances the plain two-cut
//! bound left unsolved).

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::bounds::{BoundKind, BoundOptions, Pipeline};
use crate::model::CdtInstance;
use crate::trs::{self, TrsProblem};
use crate::{linalg, CdtError, Result};

/// Optional instance annotations carried in the file's `meta` object.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceMeta {
    /// Human-readable instance name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Generator seed, when the instance was generated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Known optimal value, when available from an external source.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimal_value: Option<f64>,
}

/// The instance document exactly as stored on disk; see the module docs for
/// the format. Validation happens in [`RawInstance::to_instance`], so a file
/// can be inspected even when it fails the mathematical invariants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawInstance {
    /// Dimension.
    pub n: usize,
    /// Objective matrix, row-major `n×n`.
    #[serde(rename = "Q")]
    pub q_mat: Vec<Vec<f64>>,
    /// Objective linear term.
    pub q: Vec<f64>,
    /// Ellipsoid matrix, row-major `n×n`.
    #[serde(rename = "A")]
    pub a_mat: Vec<Vec<f64>>,
    /// Ellipsoid linear term.
    pub a: Vec<f64>,
    /// Ellipsoid level.
    pub a0: f64,
    /// Optional annotations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<InstanceMeta>,
}

impl RawInstance {
    /// Captures an instance (plus optional annotations) for serialization.
    pub fn from_instance(inst: &CdtInstance, meta: Option<InstanceMeta>) -> RawInstance {
        let n = inst.dim();
        let row = |m: &DMatrix<f64>, i: usize| (0..n).map(|j| m[(i, j)]).collect::<Vec<_>>();
        RawInstance {
            n,
            q_mat: (0..n).map(|i| row(inst.q_mat(), i)).collect(),
            q: inst.q_lin().iter().copied().collect(),
            a_mat: (0..n).map(|i| row(inst.a_mat(), i)).collect(),
            a: inst.a_lin().iter().copied().collect(),
            a0: inst.a0(),
            meta,
        }
    }

    /// Validates the document into a usable instance: shape and finiteness,
    /// symmetry within `1e-10`, positive definiteness of the ellipsoid
    /// matrix, and the nonempty-interior assumption, each with its own
    /// error variant.
    pub fn to_instance(&self) -> Result<CdtInstance> {
        let n = self.n;
        if self.q_mat.len() != n || self.q_mat.iter().any(|r| r.len() != n) {
            return Err(CdtError::Validation(format!(
                "Q must be an {n}x{n} row-major matrix"
            )));
        }
        if self.a_mat.len() != n || self.a_mat.iter().any(|r| r.len() != n) {
            return Err(CdtError::Validation(format!(
                "A must be an {n}x{n} row-major matrix"
            )));
        }
        if self.q.len() != n || self.a.len() != n {
            return Err(CdtError::Validation(format!(
                "q and a must have length {n}"
            )));
        }
        let qm = DMatrix::from_row_iterator(n, n, self.q_mat.iter().flatten().copied());
        let am = DMatrix::from_row_iterator(n, n, self.a_mat.iter().flatten().copied());
        let qv = DVector::from_vec(self.q.clone());
        let av = DVector::from_vec(self.a.clone());
        let inst = CdtInstance::new(qm, qv, am, av, self.a0)?;
        let check = inst.check_interior_assumption()?;
        if !check.satisfied {
            return Err(CdtError::InteriorAssumption {
                ell_a: check.ell_a,
                a0: self.a0,
            });
        }
        Ok(inst)
    }
}

/// JSON formatter printing every float as a 17-significant-digit scientific
/// decimal, the shortest width that round-trips all of `f64` exactly.
struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

fn raw_to_string(raw: &RawInstance) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter);
    raw.serialize(&mut ser)
        .map_err(|e| CdtError::Numeric(format!("instance serialization failed: {e}")))?;
    buf.push(b'\n');
    String::from_utf8(buf)
        .map_err(|e| CdtError::Numeric(format!("instance serialization produced non-UTF-8: {e}")))
}

/// Canonical file content for an instance (fixed key order, scientific
/// floats, trailing newline). Equal instances give identical strings.
pub fn instance_to_string(inst: &CdtInstance, meta: Option<InstanceMeta>) -> Result<String> {
    raw_to_string(&RawInstance::from_instance(inst, meta))
}

/// Parses an instance document from a string; `origin` names the source in
/// error messages.
pub fn raw_from_str(text: &str, origin: &str) -> Result<RawInstance> {
    serde_json::from_str(text).map_err(|e| CdtError::Parse {
        path: origin.to_string(),
        message: e.to_string(),
    })
}

/// Parses and validates an instance from a string.
pub fn instance_from_str(text: &str, origin: &str) -> Result<CdtInstance> {
    raw_from_str(text, origin)?.to_instance()
}

/// Reads an instance document without validating the mathematics.
pub fn read_raw(path: &Path) -> Result<RawInstance> {
    let text = std::fs::read_to_string(path).map_err(|e| CdtError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    raw_from_str(&text, &path.display().to_string())
}

/// Reads and fully validates an instance file.
pub fn read_instance(path: &Path) -> Result<CdtInstance> {
    read_raw(path)?.to_instance()
}

/// Writes the canonical serialization of an instance.
pub fn write_instance(inst: &CdtInstance, path: &Path) -> Result<()> {
    write_instance_with_meta(inst, None, path)
}

/// Writes the canonical serialization with annotations.
pub fn write_instance_with_meta(
    inst: &CdtInstance,
    meta: Option<InstanceMeta>,
    path: &Path,
) -> Result<()> {
    let text = instance_to_string(inst, meta)?;
    std::fs::write(path, text).map_err(|e| CdtError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

// ---------------------------------------------------------------------------
// Random instance generation.
// ---------------------------------------------------------------------------

fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    m.qr().q()
}

fn spectral_matrix(rng: &mut ChaCha8Rng, n: usize, eigs: &[f64]) -> DMatrix<f64> {
    let u = random_orthogonal(rng, n);
    let d = DMatrix::from_diagonal(&DVector::from_vec(eigs.to_vec()));
    linalg::symmetrize(&(u.transpose() * d * &u))
}

/// Deterministic random instance for the benchmark regime: the plain ball
/// problem has a local-nonglobal minimizer, the ellipsoid matrix has
/// moderate conditioning (eigenvalues in `[0.5, 3]`), and the ball minimum
/// violates the ellipsoid constraint while the nonempty-interior assumption
/// holds (the level is set halfway between the ellipsoid values of the two
/// ball stationary points).
///
/// Deterministic in `(n, seed)`. Errors after 1000 resampling attempts.
pub fn generate_instance(n: usize, seed: u64) -> Result<CdtInstance> {
    if n < 2 {
        return Err(CdtError::InvalidParameter(
            "generated instances need dimension at least 2".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spread = Uniform::new_inclusive(-5.0, 5.0);
    let shape = Uniform::new_inclusive(0.5, 3.0);

    'attempt: for _ in 0..1000 {
        // Objective spectrum: a clear gap under the second eigenvalue keeps
        // the bottom eigenvector well separated.
        let mut d: Vec<f64> = (0..n).map(|_| rng.sample(spread)).collect();
        d.sort_by(|x, y| x.partial_cmp(y).unwrap());
        if !(d[0] < d[1] - 0.1) {
            continue 'attempt;
        }
        let q_mat = spectral_matrix(&mut rng, n, &d);

        // Shrink the linear term until the ball problem has a
        // local-nonglobal minimizer (possible only when the bottom
        // eigenvalue is negative; otherwise this attempt is discarded).
        let g0 = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut q_lin = None;
        let mut scale = 1.0f64;
        for _ in 0..80 {
            let cand = &g0 * scale;
            if let Ok(p) = TrsProblem::new(q_mat.clone(), cand.clone(), 1.0) {
                if let Ok(Some(_)) = trs::trs_local_nonglobal(&p) {
                    q_lin = Some(cand);
                    break;
                }
            }
            scale *= 0.5;
        }
        let Some(q_lin) = q_lin else {
            continue 'attempt;
        };

        let e: Vec<f64> = (0..n).map(|_| rng.sample(shape)).collect();
        let a_mat = spectral_matrix(&mut rng, n, &e);
        let a_lin = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal)) * 0.5;

        // Ellipsoid level halfway between the two stationary points' values.
        let ball = TrsProblem::new(q_mat.clone(), q_lin.clone(), 1.0)?;
        let Ok(global) = trs::trs_global(&ball) else {
            continue 'attempt;
        };
        let local = match trs::trs_local_nonglobal(&ball) {
            Ok(Some(l)) => l,
            _ => continue 'attempt,
        };
        let ell = |x: &DVector<f64>| (x.transpose() * &a_mat * x)[(0, 0)] + a_lin.dot(x);
        let ell_g = ell(&global.x);
        let ell_l = ell(&local.x);
        let a0 = 0.5 * (ell_g + ell_l);
        // The ball minimum must violate the ellipsoid constraint, so the
        // dual stage has something to do.
        if !(ell_g > a0 + 1e-9 * (1.0 + a0.abs())) {
            continue 'attempt;
        }
        let Ok(inst) = CdtInstance::new(q_mat, q_lin, a_mat, a_lin, a0) else {
            continue 'attempt;
        };
        match inst.check_interior_assumption() {
            Ok(check) if check.satisfied => return Ok(inst),
            _ => continue 'attempt,
        }
    }
    Err(CdtError::Generation(format!(
        "exceeded 1000 resampling attempts for n = {n}, seed = {seed}"
    )))
}

// ---------------------------------------------------------------------------
// Benchmarks.
// ---------------------------------------------------------------------------

/// One benchmark measurement: one bound of one instance. Float fields hold
/// exactly the values printed to the CSV (12 significant digits), so
/// aggregates recompute identically from the file.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    /// Instance name (file stem or meta name).
    pub instance: String,
    /// Bound stage.
    pub bound: BoundKind,
    /// Lower bound.
    pub lb: f64,
    /// Upper bound.
    pub ub: f64,
    /// Relative gap.
    pub rel_gap: f64,
    /// Final penalty weight.
    pub lambda: f64,
    /// Driver iterations.
    pub iterations: usize,
    /// Wall time in milliseconds over the stage's dependency closure.
    pub time_ms: f64,
    /// Whether the relative gap is within the solved threshold.
    pub solved: bool,
}

/// Per-bound aggregate row, following the report-table conventions: gap
/// statistics for the two-cut stages cover only their own unsolved
/// instances, and the optimized-two-cut timing covers only instances the
/// plain two-cut stage left unsolved; everything else averages over all
/// instances. `gap_instances` / `time_instances` record the subset sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundAggregate {
    /// Bound stage.
    pub bound: BoundKind,
    /// Average relative gap over the gap subset (0 when empty).
    pub avg_gap: f64,
    /// Maximum relative gap over the gap subset (0 when empty).
    pub max_gap: f64,
    /// Average time over the time subset in milliseconds (0 when empty).
    pub avg_time_ms: f64,
    /// Maximum time over the time subset in milliseconds (0 when empty).
    pub max_time_ms: f64,
    /// Number of solved instances.
    pub solved: usize,
    /// Size of the gap subset.
    pub gap_instances: usize,
    /// Size of the time subset.
    pub time_instances: usize,
}

/// Benchmark output: records in (instance name, pipeline stage) order, the
/// per-bound aggregates, and per-instance failures (name, error message).
#[derive(Debug, Clone)]
pub struct BenchReport {
    /// Per-(instance, bound) measurements.
    pub records: Vec<BenchRecord>,
    /// Per-bound aggregate rows.
    pub aggregates: Vec<BoundAggregate>,
    /// Instances that failed, with their error messages.
    pub failures: Vec<(String, String)>,
}

/// CSV header for benchmark record rows.
pub const BENCH_CSV_HEADER: &str = "instance,bound,lb,ub,rel_gap,lambda,iterations,time_ms,solved";

/// Header comment naming the aggregate-row columns.
pub const BENCH_CSV_AGGREGATE_HEADER: &str =
    "# aggregate,bound,avg_gap,max_gap,avg_time_ms,max_time_ms,solved,gap_instances,time_instances";

fn fmt12(v: f64) -> String {
    format!("{v:.11e}")
}

fn round12(v: f64) -> f64 {
    fmt12(v).parse().expect("formatted float reparses")
}

fn stage_index(kind: BoundKind) -> usize {
    BoundKind::ALL.iter().position(|k| *k == kind).expect("listed")
}

fn solve_one(
    name: &str,
    inst: &CdtInstance,
    bounds: &[BoundKind],
    opts: &BoundOptions,
) -> Result<Vec<BenchRecord>> {
    let mut pipe = Pipeline::new(inst, opts.clone());
    let mut out = Vec::with_capacity(bounds.len());
    for &kind in bounds {
        let s = pipe.summary(kind)?;
        out.push(BenchRecord {
            instance: name.to_string(),
            bound: kind,
            lb: round12(s.report.lb),
            ub: round12(s.ub),
            rel_gap: round12(s.gap.rel_gap),
            lambda: round12(s.report.final_lambda),
            iterations: s.report.iterations,
            time_ms: round12(s.total_seconds * 1e3),
            solved: s.gap.solved,
        });
    }
    Ok(out)
}

/// Runs the bound pipeline over a batch of named instances.
///
/// `bounds` is deduplicated and reordered into pipeline order. `jobs`
/// selects the worker count (`0` = library default); records are merged in
/// instance-name order regardless of scheduling, so the output is
/// deterministic up to wall-time fields. Per-instance failures are recorded
/// and the run continues.
pub fn benchmark_run(
    instances: &[(String, CdtInstance)],
    bounds: &[BoundKind],
    opts: &BoundOptions,
    jobs: usize,
) -> Result<BenchReport> {
    if instances.is_empty() {
        return Err(CdtError::InvalidParameter(
            "benchmark needs at least one instance".into(),
        ));
    }
    if bounds.is_empty() {
        return Err(CdtError::InvalidParameter(
            "benchmark needs at least one bound selected".into(),
        ));
    }
    let mut selected: Vec<BoundKind> = Vec::new();
    for kind in BoundKind::ALL {
        if bounds.contains(&kind) {
            selected.push(kind);
        }
    }

    let solve = |pair: &(String, CdtInstance)| -> std::result::Result<Vec<BenchRecord>, (String, String)> {
        solve_one(&pair.0, &pair.1, &selected, opts)
            .map_err(|e| (pair.0.clone(), e.to_string()))
    };
    let results: Vec<std::result::Result<Vec<BenchRecord>, (String, String)>> = if jobs == 1 {
        instances.iter().map(solve).collect()
    } else {
        use rayon::prelude::*;
        let run = || instances.par_iter().map(solve).collect();
        if jobs == 0 {
            run()
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(|e| CdtError::Numeric(format!("worker pool construction failed: {e}")))?;
            pool.install(run)
        }
    };

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for result in results {
        match result {
            Ok(rows) => records.extend(rows),
            Err(failure) => failures.push(failure),
        }
    }
    records.sort_by(|x, y| {
        x.instance
            .cmp(&y.instance)
            .then_with(|| stage_index(x.bound).cmp(&stage_index(y.bound)))
    });
    failures.sort();
    let aggregates = recompute_aggregates(&records);
    Ok(BenchReport {
        records,
        aggregates,
        failures,
    })
}

/// Aggregates a record list per bound, in CSV row order, using the
/// report-table subset conventions (see [`BoundAggregate`]). Running this on
/// records parsed back from the CSV reproduces the emitted aggregate rows
/// exactly.
pub fn recompute_aggregates(records: &[BenchRecord]) -> Vec<BoundAggregate> {
    let twocut_solved = |name: &str| {
        records
            .iter()
            .find(|r| r.bound == BoundKind::TwoCut && r.instance == name)
            .map(|r| r.solved)
    };
    let mut out = Vec::new();
    for kind in BoundKind::ALL {
        let rows: Vec<&BenchRecord> = records.iter().filter(|r| r.bound == kind).collect();
        if rows.is_empty() {
            continue;
        }
        let own_unsolved = matches!(kind, BoundKind::TwoCut | BoundKind::TwoOpt);
        let gap_rows: Vec<&BenchRecord> = rows
            .iter()
            .copied()
            .filter(|r| !own_unsolved || !r.solved)
            .collect();
        let time_rows: Vec<&BenchRecord> = rows
            .iter()
            .copied()
            .filter(|r| {
                kind != BoundKind::TwoOpt || !twocut_solved(&r.instance).unwrap_or(false)
            })
            .collect();
        let stats = |values: &[f64]| -> (f64, f64) {
            if values.is_empty() {
                (0.0, 0.0)
            } else {
                let sum: f64 = values.iter().sum();
                let max = values.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
                (sum / values.len() as f64, max)
            }
        };
        let gaps: Vec<f64> = gap_rows.iter().map(|r| r.rel_gap).collect();
        let times: Vec<f64> = time_rows.iter().map(|r| r.time_ms).collect();
        let (avg_gap, max_gap) = stats(&gaps);
        let (avg_time_ms, max_time_ms) = stats(&times);
        out.push(BoundAggregate {
            bound: kind,
            avg_gap,
            max_gap,
            avg_time_ms,
            max_time_ms,
            solved: rows.iter().filter(|r| r.solved).count(),
            gap_instances: gap_rows.len(),
            time_instances: time_rows.len(),
        });
    }
    out
}

fn sanitize_name(name: &str) -> String {
    name.replace([',', '\n', '\r'], "_")
}

/// Renders a benchmark report as CSV: header, one row per record, then the
/// aggregate block as `# aggregate,...` comment lines.
pub fn benchmark_csv(report: &BenchReport) -> String {
    let mut out = String::new();
    out.push_str(BENCH_CSV_HEADER);
    out.push('\n');
    for r in &report.records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            sanitize_name(&r.instance),
            r.bound,
            fmt12(r.lb),
            fmt12(r.ub),
            fmt12(r.rel_gap),
            fmt12(r.lambda),
            r.iterations,
            fmt12(r.time_ms),
            u8::from(r.solved),
        ));
    }
    out.push_str(BENCH_CSV_AGGREGATE_HEADER);
    out.push('\n');
    for a in &report.aggregates {
        out.push_str(&format!(
            "# aggregate,{},{},{},{},{},{},{},{}\n",
            a.bound,
            fmt12(a.avg_gap),
            fmt12(a.max_gap),
            fmt12(a.avg_time_ms),
            fmt12(a.max_time_ms),
            a.solved,
            a.gap_instances,
            a.time_instances,
        ));
    }
    out
}

/// Writes the benchmark CSV to a file.
pub fn write_benchmark_csv(report: &BenchReport, path: &Path) -> Result<()> {
    std::fs::write(path, benchmark_csv(report)).map_err(|e| CdtError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn parse_field<T: std::str::FromStr>(field: &str, what: &str, line: usize) -> Result<T> {
    field.parse().map_err(|_| CdtError::Parse {
        path: "<csv>".into(),
        message: format!("line {line}: cannot parse {what} from {field:?}"),
    })
}

/// Parses a benchmark CSV back into records and aggregate rows.
pub fn parse_benchmark_csv(text: &str) -> Result<(Vec<BenchRecord>, Vec<BoundAggregate>)> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, first)) if first == BENCH_CSV_HEADER => {}
        _ => {
            return Err(CdtError::Parse {
                path: "<csv>".into(),
                message: "missing benchmark CSV header".into(),
            })
        }
    }
    let mut records = Vec::new();
    let mut aggregates = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.is_empty() || line == BENCH_CSV_AGGREGATE_HEADER {
            continue;
        }
        if let Some(rest) = line.strip_prefix("# aggregate,") {
            let f: Vec<&str> = rest.split(',').collect();
            if f.len() != 8 {
                return Err(CdtError::Parse {
                    path: "<csv>".into(),
                    message: format!("line {lineno}: aggregate row needs 8 fields"),
                });
            }
            aggregates.push(BoundAggregate {
                bound: parse_field(f[0], "bound", lineno)?,
                avg_gap: parse_field(f[1], "avg_gap", lineno)?,
                max_gap: parse_field(f[2], "max_gap", lineno)?,
                avg_time_ms: parse_field(f[3], "avg_time_ms", lineno)?,
                max_time_ms: parse_field(f[4], "max_time_ms", lineno)?,
                solved: parse_field(f[5], "solved", lineno)?,
                gap_instances: parse_field(f[6], "gap_instances", lineno)?,
                time_instances: parse_field(f[7], "time_instances", lineno)?,
            });
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(CdtError::Parse {
                path: "<csv>".into(),
                message: format!("line {lineno}: record row needs 9 fields"),
            });
        }
        let solved: u8 = parse_field(f[8], "solved", lineno)?;
        records.push(BenchRecord {
            instance: f[0].to_string(),
            bound: parse_field(f[1], "bound", lineno)?,
            lb: parse_field(f[2], "lb", lineno)?,
            ub: parse_field(f[3], "ub", lineno)?,
            rel_gap: parse_field(f[4], "rel_gap", lineno)?,
            lambda: parse_field(f[5], "lambda", lineno)?,
            iterations: parse_field(f[6], "iterations", lineno)?,
            time_ms: parse_field(f[7], "time_ms", lineno)?,
            solved: solved == 1,
        });
    }
    Ok((records, aggregates))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::test_fixtures::example1;

    #[test]
    fn canonical_roundtrip_is_bit_exact_and_idempotent() {
        let inst = example1();
        let text = instance_to_string(&inst, None).unwrap();
        assert!(text.starts_with("{\"n\":2,\"Q\":[["));
        assert!(text.ends_with("}\n"));
        let back = instance_from_str(&text, "<test>").unwrap();
        assert_eq!(back.q_mat(), inst.q_mat());
        assert_eq!(back.q_lin(), inst.q_lin());
        assert_eq!(back.a_mat(), inst.a_mat());
        assert_eq!(back.a_lin(), inst.a_lin());
        assert!(back.a0() == inst.a0());
        let again = instance_to_string(&back, None).unwrap();
        assert_eq!(text, again);
    }

    #[test]
    fn awkward_floats_roundtrip() {
        let vals = [
            0.1 + 0.2,
            -0.0,
            1.0 / 3.0,
            6.02e23,
            5e-324,
            f64::MIN_POSITIVE,
            -123456.789e-12,
        ];
        for v in vals {
            let s = format!("{v:.16e}");
            let back: f64 = s.parse().unwrap();
            assert!(back == v && back.is_sign_negative() == v.is_sign_negative(), "{v} via {s}");
        }
    }

    #[test]
    fn meta_block_is_preserved() {
        let inst = example1();
        let meta = InstanceMeta {
            name: Some("reference".into()),
            seed: Some(42),
            optimal_value: Some(-4.0),
        };
        let text = instance_to_string(&inst, Some(meta.clone())).unwrap();
        let raw = raw_from_str(&text, "<test>").unwrap();
        assert_eq!(raw.meta, Some(meta));
    }

    #[test]
    fn reader_rejects_bad_documents() {
        // Non-positive-definite ellipsoid matrix.
        let text = r#"{"n":2,"Q":[[1.0,0.0],[0.0,1.0]],"q":[0.0,0.0],"A":[[1.0,0.0],[0.0,-1.0]],"a":[0.0,0.0],"a0":1.0}"#;
        let err = instance_from_str(text, "<test>").unwrap_err();
        assert!(matches!(err, CdtError::Validation(_)), "{err}");

        // Level below the minimum ellipsoid value over the ball.
        let text = r#"{"n":2,"Q":[[1.0,0.0],[0.0,1.0]],"q":[0.0,0.0],"A":[[1.0,0.0],[0.0,1.0]],"a":[0.0,0.0],"a0":-1.0}"#;
        let err = instance_from_str(text, "<test>").unwrap_err();
        assert!(matches!(err, CdtError::InteriorAssumption { .. }), "{err}");

        // Dimension mismatch.
        let text = r#"{"n":3,"Q":[[1.0,0.0],[0.0,1.0]],"q":[0.0,0.0],"A":[[1.0,0.0],[0.0,1.0]],"a":[0.0,0.0],"a0":1.0}"#;
        let err = instance_from_str(text, "<test>").unwrap_err();
        assert!(matches!(err, CdtError::Validation(_)), "{err}");

        // Asymmetric objective.
        let text = r#"{"n":2,"Q":[[1.0,0.5],[0.0,1.0]],"q":[0.0,0.0],"A":[[1.0,0.0],[0.0,1.0]],"a":[0.0,0.0],"a0":1.0}"#;
        let err = instance_from_str(text, "<test>").unwrap_err();
        assert!(matches!(err, CdtError::Validation(_)), "{err}");

        // Not JSON at all.
        let err = instance_from_str("n = 2", "<test>").unwrap_err();
        assert!(matches!(err, CdtError::Parse { .. }), "{err}");

        // Unknown field.
        let text = r#"{"n":2,"Q":[[1.0,0.0],[0.0,1.0]],"q":[0.0,0.0],"A":[[1.0,0.0],[0.0,1.0]],"a":[0.0,0.0],"a0":1.0,"extra":true}"#;
        let err = instance_from_str(text, "<test>").unwrap_err();
        assert!(matches!(err, CdtError::Parse { .. }), "{err}");
    }

    #[test]
    fn generator_is_deterministic_and_valid() {
        let a = generate_instance(2, 1).unwrap();
        let b = generate_instance(2, 1).unwrap();
        assert_eq!(
            instance_to_string(&a, None).unwrap(),
            instance_to_string(&b, None).unwrap()
        );
        let check = a.check_interior_assumption().unwrap();
        assert!(check.satisfied);
        // The ball minimum violates the ellipsoid constraint by construction.
        let ball = TrsProblem::new(a.q_mat().clone(), a.q_lin().clone(), 1.0).unwrap();
        let global = trs::trs_global(&ball).unwrap();
        assert!(a.ellipsoid_value(&global.x) > a.a0());
        // And the local-nonglobal minimizer exists.
        assert!(trs::trs_local_nonglobal(&ball).unwrap().is_some());
    }

    #[test]
    fn generator_rejects_degenerate_dimension() {
        let err = generate_instance(1, 3).unwrap_err();
        assert!(matches!(err, CdtError::InvalidParameter(_)), "{err}");
    }

    #[test]
    fn generator_covers_higher_dimensions() {
        let inst = generate_instance(5, 3).unwrap();
        assert_eq!(inst.dim(), 5);
        assert!(inst.check_interior_assumption().unwrap().satisfied);
    }

    #[test]
    fn benchmark_on_reference_instance() {
        let instances = vec![("ex1".to_string(), example1())];
        let report = benchmark_run(
            &instances,
            &BoundKind::ALL,
            &BoundOptions::default(),
            1,
        )
        .unwrap();
        assert_eq!(report.records.len(), 5);
        assert!(report.failures.is_empty());
        let dual = &report.records[0];
        assert_eq!(dual.bound, BoundKind::Dual);
        assert!((dual.rel_gap - 0.0625).abs() <= 1e-3, "{}", dual.rel_gap);
        assert!(!dual.solved);
        let twoopt = report
            .records
            .iter()
            .find(|r| r.bound == BoundKind::TwoOpt)
            .unwrap();
        assert!(twoopt.solved);

        // The CSV reparses into the same records, and the aggregates
        // recompute exactly from the parsed rows.
        let csv = benchmark_csv(&report);
        let (records, aggregates) = parse_benchmark_csv(&csv).unwrap();
        assert_eq!(records, report.records);
        assert_eq!(aggregates, report.aggregates);
        assert_eq!(recompute_aggregates(&records), aggregates);
    }

    #[test]
    fn benchmark_requires_bounds_and_instances() {
        let instances = vec![("ex1".to_string(), example1())];
        assert!(benchmark_run(&instances, &[], &BoundOptions::default(), 1).is_err());
        assert!(benchmark_run(&[], &BoundKind::ALL, &BoundOptions::default(), 1).is_err());
    }

    #[test]
    fn aggregate_subsets_follow_table_conventions() {
        let mk = |instance: &str, bound, rel_gap: f64, time_ms: f64, solved| BenchRecord {
            instance: instance.into(),
            bound,
            lb: -1.0,
            ub: 0.0,
            rel_gap,
            lambda: 0.5,
            iterations: 3,
            time_ms,
            solved,
        };
        let records = vec![
            mk("a", BoundKind::TwoCut, 0.0, 5.0, true),
            mk("a", BoundKind::TwoOpt, 0.0, 9.0, true),
            mk("b", BoundKind::TwoCut, 0.2, 7.0, false),
            mk("b", BoundKind::TwoOpt, 0.1, 11.0, false),
        ];
        let agg = recompute_aggregates(&records);
        let twocut = agg.iter().find(|a| a.bound == BoundKind::TwoCut).unwrap();
        // Gap subset: only the unsolved instance; time subset: all.
        assert_eq!(twocut.gap_instances, 1);
        assert!(twocut.avg_gap == 0.2 && twocut.max_gap == 0.2);
        assert_eq!(twocut.time_instances, 2);
        assert!(twocut.avg_time_ms == 6.0 && twocut.max_time_ms == 7.0);
        assert_eq!(twocut.solved, 1);
        let twoopt = agg.iter().find(|a| a.bound == BoundKind::TwoOpt).unwrap();
        // Time subset: instances not solved by the plain two-cut bound.
        assert_eq!(twoopt.time_instances, 1);
        assert!(twoopt.avg_time_ms == 11.0 && twoopt.max_time_ms == 11.0);
        assert_eq!(twoopt.gap_instances, 1);
        assert!((twoopt.avg_gap - 0.1).abs() < 1e-15);
    }
}
