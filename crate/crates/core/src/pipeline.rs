//! Configuration-driven pipeline: construct grids, seed coefficients,
//! propagate, apply Darboux chains, verify every invariant, export artifacts.
//!
//! A run produces a [`VerificationReport`] whose `checks` array is the flat
//! list of gates; `pass` is true iff every gate holds. Numeric failure is a
//! report outcome, not an error — callers decide what to do with a red run.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::backlund::{
    dressed_lax_residual, projector_system_residual, run_chain, ChainResult, DarbouxParams,
};
use crate::error::{Error, Result};
use crate::laxpair::{
    compatibility_residual, psi_lambda_fd_residual, verify_lax, CoefficientField,
};
use crate::obj::export_obj_to_path;
use crate::quatalg::{CQuat, Quat};
use crate::rng::SplitMix64;
use crate::surface::{
    curvature_stats, delta_frame, gauss_curvature_dot_with_frame, gauss_curvature_tet,
    net_residuals_with_frame, normal_consistency, shifted_tangent_coplanarity, KNode, SurfaceNet,
};
use crate::timescale::{construct_timescale, GridDomain, GridFunction, TimeScale1D, TimeScaleSpec};
use crate::tolerances as tol;

/// Seed selection: the string `"vacuum"` or `{"file": "<path>"}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum SeedSpec {
    Name(String),
    File { file: PathBuf },
}

impl Default for SeedSpec {
    fn default() -> Self {
        SeedSpec::Name("vacuum".into())
    }
}

/// One Darboux step in config form: `{"kappa": 1.0, "phases": [0.2, 1.9]}`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct DarbouxStep {
    pub kappa: f64,
    #[serde(default)]
    pub phases: [f64; 2],
}

/// Gate overrides. `exact` gates the asymptotic/Chebyshev residuals,
/// `cross` the tetrahedron-vs-dot curvature comparison; everything else is
/// pinned in [`crate::tolerances`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct ToleranceConfig {
    #[serde(default = "default_exact")]
    pub exact: f64,
    #[serde(default = "default_cross")]
    pub cross: f64,
}

fn default_exact() -> f64 {
    tol::NET_RESIDUAL
}

fn default_cross() -> f64 {
    tol::TET_CROSS
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            exact: default_exact(),
            cross: default_cross(),
        }
    }
}

/// Optional artifact paths.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct Outputs {
    /// OBJ mesh of the final surface in the chain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obj: Option<PathBuf>,
    /// Verification report JSON.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    /// Final transformed coefficient field JSON.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fields: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PipelineConfig {
    pub timescale1: TimeScaleSpec,
    pub timescale2: TimeScaleSpec,
    pub lambda: f64,
    #[serde(default)]
    pub seed: SeedSpec,
    #[serde(default)]
    pub darboux: Vec<DarbouxStep>,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    #[serde(default)]
    pub outputs: Outputs,
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: PipelineConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("parse: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda == 0.0 || !self.lambda.is_finite() {
            return Err(Error::Config(format!(
                "lambda: must be finite and nonzero, got {}",
                self.lambda
            )));
        }
        if let SeedSpec::Name(name) = &self.seed {
            if name != "vacuum" {
                return Err(Error::Config(format!(
                    "seed: unknown seed \"{name}\" (expected \"vacuum\" or {{\"file\": ...}})"
                )));
            }
        }
        for (i, step) in self.darboux.iter().enumerate() {
            if step.kappa == 0.0 || !step.kappa.is_finite() {
                return Err(Error::Config(format!(
                    "darboux[{i}].kappa: must be finite and nonzero"
                )));
            }
            for (j, other) in self.darboux.iter().enumerate().skip(i + 1) {
                if other.kappa == step.kappa {
                    return Err(Error::Config(format!(
                        "darboux[{j}].kappa: repeats darboux[{i}].kappa = {}",
                        step.kappa
                    )));
                }
            }
        }
        if self.tolerances.exact <= 0.0
            || self.tolerances.cross <= 0.0
            || self.tolerances.exact.is_nan()
            || self.tolerances.cross.is_nan()
        {
            return Err(Error::Config("tolerances: must be positive".into()));
        }
        Ok(())
    }

    pub fn darboux_params(&self) -> Result<Vec<DarbouxParams>> {
        self.darboux
            .iter()
            .map(|s| DarbouxParams::new(s.kappa, s.phases[0], s.phases[1]))
            .collect()
    }
}

/// Coefficient-field file form: time scales plus eight row-major 2D arrays.
#[derive(Debug, Serialize, Deserialize)]
struct FieldFile {
    domain: DomainFile,
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
    h: Vec<Vec<f64>>,
    p: Vec<Vec<f64>>,
    q: Vec<Vec<f64>>,
    r: Vec<Vec<f64>>,
    s: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DomainFile {
    t1: TimeScale1D,
    t2: TimeScale1D,
}

fn rows_of(g: &GridFunction<f64>) -> Vec<Vec<f64>> {
    let d = g.domain();
    (0..d.n1())
        .map(|i| (0..d.n2()).map(|j| g.get(i, j)).collect())
        .collect()
}

fn grid_of(domain: &Arc<GridDomain>, name: &str, rows: &[Vec<f64>]) -> Result<GridFunction<f64>> {
    if rows.len() != domain.n1() || rows.iter().any(|r| r.len() != domain.n2()) {
        return Err(Error::Config(format!(
            "field {name}: expected {}x{} values",
            domain.n1(),
            domain.n2()
        )));
    }
    Ok(GridFunction::from_fn(Arc::clone(domain), |i, j| rows[i][j]))
}

/// Serialize a coefficient field to its JSON file form.
pub fn field_to_json(cf: &CoefficientField) -> serde_json::Value {
    let file = FieldFile {
        domain: DomainFile {
            t1: cf.domain().t1().clone(),
            t2: cf.domain().t2().clone(),
        },
        a: rows_of(&cf.a),
        b: rows_of(&cf.b),
        c: rows_of(&cf.c),
        h: rows_of(&cf.h),
        p: rows_of(&cf.p),
        q: rows_of(&cf.q),
        r: rows_of(&cf.r),
        s: rows_of(&cf.s),
    };
    serde_json::to_value(file).expect("field serialization cannot fail")
}

/// Read a coefficient field from its JSON file form.
pub fn field_from_json(text: &str) -> Result<CoefficientField> {
    let file: FieldFile =
        serde_json::from_str(text).map_err(|e| Error::Config(format!("field file: {e}")))?;
    let domain = Arc::new(GridDomain::new(file.domain.t1, file.domain.t2));
    CoefficientField::from_parts(
        Arc::clone(&domain),
        grid_of(&domain, "a", &file.a)?,
        grid_of(&domain, "b", &file.b)?,
        grid_of(&domain, "c", &file.c)?,
        grid_of(&domain, "h", &file.h)?,
        grid_of(&domain, "p", &file.p)?,
        grid_of(&domain, "q", &file.q)?,
        grid_of(&domain, "r", &file.r)?,
        grid_of(&domain, "s", &file.s)?,
    )
}

/// One verification gate: measured value against its threshold.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        let pass = value.is_finite() && value <= tolerance;
        Self {
            name: name.into(),
            value,
            tolerance,
            pass,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridInfo {
    pub n1: usize,
    pub n2: usize,
    pub t1_label: String,
    pub t2_label: String,
    /// Steps with graininess below the dense-approximation threshold, per axis.
    pub dense_steps: [usize; 2],
    pub max_graininess: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LaxSection {
    pub compatibility_seed: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compatibility_transformed: Option<f64>,
    pub path_independence: f64,
    pub red1: f64,
    pub red2: f64,
    pub psi_lambda_fd_rel: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlgebraSection {
    pub cases: usize,
    pub norm_multiplicativity: f64,
    pub dagger_antihomomorphism: f64,
    pub leibniz: f64,
    pub projector_invariants: f64,
}

/// Per-surface record; field names match the documented report schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurfaceRecord {
    pub index: usize,
    pub transformed: bool,
    pub lambda: f64,
    #[serde(rename = "K_expected")]
    pub k_expected: f64,
    #[serde(rename = "K_max_abs_err")]
    pub k_max_abs_err: f64,
    #[serde(rename = "K_max_rel_err")]
    pub k_max_rel_err: f64,
    pub asym: [f64; 2],
    pub cheb: [f64; 2],
    pub tet_vs_dot_max_rel: f64,
    pub tors_spread: [f64; 2],
    pub degenerate_nodes: usize,
    pub valid_nodes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub segment: Option<SegmentRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub expected_length: f64,
    pub length_spread_rel: f64,
    pub tangency_max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub pass: bool,
    pub lambda: f64,
    pub grid: GridInfo,
    pub tolerances: ToleranceConfig,
    pub lax: LaxSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub algebra: Option<AlgebraSection>,
    pub surfaces: Vec<SurfaceRecord>,
    pub checks: Vec<Check>,
}

/// Options orthogonal to the config file.
#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    /// Run the verification gates (otherwise only compute and export).
    pub verify: bool,
    /// Write the artifacts named in `outputs`.
    pub export: bool,
    /// Seed for the randomized algebra identities.
    pub rng_seed: u64,
    /// Randomized cases per algebra identity; 0 skips the section.
    pub algebra_cases: usize,
    /// Worker threads for the independent verification jobs.
    pub threads: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            verify: true,
            export: true,
            rng_seed: 0,
            algebra_cases: 2000,
            threads: 1,
        }
    }
}

pub struct PipelineOutcome {
    pub report: VerificationReport,
    pub written: Vec<PathBuf>,
}

/// Run independent closures on up to `threads` workers, preserving result
/// order. Results are deterministic regardless of thread count.
fn run_jobs<T: Send>(jobs: Vec<Box<dyn FnOnce() -> T + Send + '_>>, threads: usize) -> Vec<T> {
    if threads <= 1 || jobs.len() <= 1 {
        return jobs.into_iter().map(|j| j()).collect();
    }
    let mut slots: Vec<Option<T>> = jobs.iter().map(|_| None).collect();
    let queue = std::sync::Mutex::new(jobs.into_iter().enumerate().collect::<Vec<_>>());
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for _ in 0..threads {
            handles.push(scope.spawn(|| {
                let mut done = Vec::new();
                loop {
                    let item = queue.lock().expect("queue poisoned").pop();
                    match item {
                        Some((idx, job)) => done.push((idx, job())),
                        None => break,
                    }
                }
                done
            }));
        }
        for handle in handles {
            for (idx, value) in handle.join().expect("verification worker panicked") {
                slots[idx] = Some(value);
            }
        }
    });
    slots
        .into_iter()
        .map(|s| s.expect("job completed"))
        .collect()
}

fn load_seed(config: &PipelineConfig, domain: &Arc<GridDomain>) -> Result<CoefficientField> {
    match &config.seed {
        SeedSpec::Name(_) => Ok(CoefficientField::vacuum(Arc::clone(domain))),
        SeedSpec::File { file } => {
            let text = std::fs::read_to_string(file)?;
            let cf = field_from_json(&text)?;
            if cf.domain().as_ref() != domain.as_ref() {
                return Err(Error::Config(format!(
                    "seed: field file {} has a different grid than the configured time scales",
                    file.display()
                )));
            }
            Ok(cf)
        }
    }
}

fn is_vacuum(cf: &CoefficientField) -> bool {
    cf.a.values().iter().all(|v| *v == 1.0)
        && cf.p.values().iter().all(|v| *v == 1.0)
        && [&cf.b, &cf.c, &cf.h, &cf.q, &cf.r, &cf.s]
            .iter()
            .all(|g| g.values().iter().all(|v| *v == 0.0))
}

struct SurfaceAnalysis {
    record: SurfaceRecord,
    checks: Vec<Check>,
}

fn analyze_surface(
    index: usize,
    surface: &SurfaceNet,
    previous: Option<&SurfaceNet>,
    kappa: Option<f64>,
    lambda: f64,
    tolerances: &ToleranceConfig,
) -> SurfaceAnalysis {
    let frame = delta_frame(surface);
    let k = gauss_curvature_dot_with_frame(surface, &frame);
    let expected = -4.0 * lambda * lambda;
    let stats = curvature_stats(&k, expected);
    let residuals = net_residuals_with_frame(surface, &frame);

    // tetrahedron cross-validation over cells whose base node carries a
    // well-conditioned dot-formula value
    let d = surface.domain();
    let mut tet_rel: f64 = 0.0;
    let mut tors1: Vec<f64> = Vec::new();
    let mut tors2: Vec<f64> = Vec::new();
    for i in 0..d.n1() - 1 {
        for j in 0..d.n2() - 1 {
            let dot_k = match k.get(i, j) {
                KNode::Value(v) => v,
                _ => continue,
            };
            let tet = match gauss_curvature_tet(surface, (i, j)) {
                Ok(Some(t)) => t,
                _ => continue,
            };
            tet_rel = tet_rel.max((tet.k - dot_k).abs() / dot_k.abs());
            let d1 = (surface.r.get(i + 1, j) - surface.r.get(i, j)).norm();
            let d2 = (surface.r.get(i, j + 1) - surface.r.get(i, j)).norm();
            if d1 > 0.0 && d2 > 0.0 {
                tors1.push(tet.angles.theta1.sin() / d1);
                tors2.push(tet.angles.theta2.sin() / d2);
            }
        }
    }
    let spread = |v: &[f64]| -> f64 {
        if v.is_empty() {
            return 0.0;
        }
        let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        for x in v {
            lo = lo.min(*x);
            hi = hi.max(*x);
            sum += *x;
        }
        let mean = sum / v.len() as f64;
        if mean.abs() == 0.0 {
            0.0
        } else {
            (hi - lo) / mean.abs()
        }
    };
    let tors_spread = [spread(&tors1), spread(&tors2)];

    let segment = match (previous, kappa) {
        (Some(prev), Some(kappa)) => {
            let expected_length = kappa / (lambda * lambda + kappa * kappa);
            let mut lo = f64::INFINITY;
            let mut hi: f64 = 0.0;
            let mut tangency: f64 = 0.0;
            for i in 0..d.n1() {
                for j in 0..d.n2() {
                    let seg = surface.r.get(i, j) - prev.r.get(i, j);
                    let len = seg.norm();
                    lo = lo.min(len);
                    hi = hi.max(len);
                    tangency = tangency.max(seg.dot(prev.n.get(i, j)).abs());
                }
            }
            Some(SegmentRecord {
                expected_length,
                length_spread_rel: (hi - lo) / expected_length,
                tangency_max: tangency,
            })
        }
        _ => None,
    };

    let tag = format!("surface[{index}]");
    let mut checks = Vec::new();
    if stats.valid_nodes > 0 {
        checks.push(Check::new(
            format!("{tag}.curvature_rel"),
            stats.max_rel_err,
            tol::CURVATURE_REL,
        ));
        checks.push(Check::new(
            format!("{tag}.tet_vs_dot_rel"),
            tet_rel,
            tolerances.cross,
        ));
        checks.push(Check::new(
            format!("{tag}.tors_spread"),
            tors_spread[0].max(tors_spread[1]),
            tol::TORS_SPREAD,
        ));
        checks.push(Check::new(
            format!("{tag}.normal_alignment"),
            normal_consistency(surface),
            tol::NORMAL_CONSISTENCY,
        ));
        checks.push(Check::new(
            format!("{tag}.coplanarity"),
            shifted_tangent_coplanarity(surface),
            tol::NET_RESIDUAL,
        ));
    }
    checks.push(Check::new(
        format!("{tag}.asym"),
        residuals.asym[0].max(residuals.asym[1]),
        tolerances.exact,
    ));
    checks.push(Check::new(
        format!("{tag}.cheb"),
        residuals.cheb[0].max(residuals.cheb[1]),
        tolerances.exact,
    ));
    if let Some(seg) = &segment {
        checks.push(Check::new(
            format!("{tag}.segment_spread"),
            seg.length_spread_rel,
            tol::SEGMENT_SPREAD,
        ));
        checks.push(Check::new(
            format!("{tag}.segment_tangency"),
            seg.tangency_max,
            tol::SEGMENT_TANGENCY,
        ));
    }

    SurfaceAnalysis {
        record: SurfaceRecord {
            index,
            transformed: index > 0,
            lambda,
            k_expected: expected,
            k_max_abs_err: stats.max_abs_err,
            k_max_rel_err: stats.max_rel_err,
            asym: residuals.asym,
            cheb: residuals.cheb,
            tet_vs_dot_max_rel: tet_rel,
            tors_spread,
            degenerate_nodes: stats.degenerate_nodes,
            valid_nodes: stats.valid_nodes,
            segment,
        },
        checks,
    }
}

/// Randomized algebra identities with a deterministic seed.
pub fn algebra_checks(seed: u64, cases: usize) -> AlgebraSection {
    let mut rng = SplitMix64::new(seed);
    let mut norm_mult: f64 = 0.0;
    let mut dagger: f64 = 0.0;
    for _ in 0..cases {
        let a = Quat::new(
            rng.uniform(-2.0, 2.0),
            rng.uniform(-2.0, 2.0),
            rng.uniform(-2.0, 2.0),
            rng.uniform(-2.0, 2.0),
        );
        let b = Quat::new(
            rng.uniform(-2.0, 2.0),
            rng.uniform(-2.0, 2.0),
            rng.uniform(-2.0, 2.0),
            rng.uniform(-2.0, 2.0),
        );
        norm_mult = norm_mult.max(((a * b).norm() - a.norm() * b.norm()).abs());
        let (ca, cb) = (CQuat::embed(a), CQuat::embed(b));
        dagger = dagger.max(((ca * cb).dagger() - cb.dagger() * ca.dagger()).norm());
    }

    // Leibniz on random steps of random scales: D(AB) = (DA) B + sigma(A) DB
    let mut leibniz: f64 = 0.0;
    for _ in 0..cases {
        let eps = rng.uniform(1e-3, 1.0);
        let inv_eps = 1.0 / eps;
        let rand_cq = |rng: &mut SplitMix64| {
            CQuat::from_coeffs([
                Complex64::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)),
                Complex64::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)),
                Complex64::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)),
                Complex64::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)),
            ])
        };
        let a = rand_cq(&mut rng);
        let b = rand_cq(&mut rng);
        let a_sig = rand_cq(&mut rng);
        let b_sig = rand_cq(&mut rng);
        let lhs = (a_sig * b_sig - a * b) * inv_eps;
        let rhs = (a_sig - a) * inv_eps * b + a_sig * ((b_sig - b) * inv_eps);
        leibniz = leibniz.max((lhs - rhs).norm() / (1.0 + lhs.norm()));
    }

    // projector invariants for random unit (p1, p2)
    let mut projector: f64 = 0.0;
    let e3_inv = CQuat::E3.inverse().expect("e3 is a unit");
    for _ in 0..cases {
        let angle = rng.uniform(0.0, std::f64::consts::TAU);
        let p = CQuat::E1 * angle.cos() + CQuat::E2 * angle.sin();
        let proj = (CQuat::ONE + p * Complex64::i()) * 0.5;
        projector = projector.max((proj * proj - proj).norm());
        projector = projector.max((proj.dagger() - proj).norm());
        projector = projector.max((CQuat::E3 * (CQuat::ONE - proj) * e3_inv - proj).norm());
    }

    AlgebraSection {
        cases,
        norm_multiplicativity: norm_mult,
        dagger_antihomomorphism: dagger,
        leibniz,
        projector_invariants: projector,
    }
}

/// Execute the pipeline for one config.
pub fn run(config: &PipelineConfig, opts: &RunOptions) -> Result<PipelineOutcome> {
    config.validate()?;
    let t1 = construct_timescale(&config.timescale1)?;
    let t2 = construct_timescale(&config.timescale2)?;
    let domain = Arc::new(GridDomain::new(t1, t2));
    let cf0 = load_seed(config, &domain)?;
    let steps = config.darboux_params()?;
    let chain = run_chain(&cf0, &steps, config.lambda)?;

    let grid = GridInfo {
        n1: domain.n1(),
        n2: domain.n2(),
        t1_label: domain.t1().label().to_string(),
        t2_label: domain.t2().label().to_string(),
        dense_steps: [
            domain
                .t1()
                .dense_step_count(crate::timescale::DENSE_EPSILON),
            domain
                .t2()
                .dense_step_count(crate::timescale::DENSE_EPSILON),
        ],
        max_graininess: [domain.t1().max_graininess(), domain.t2().max_graininess()],
    };

    let mut checks: Vec<Check> = Vec::new();
    let lax = if opts.verify {
        verify_chain(config, opts, &cf0, &chain, &mut checks)?
    } else {
        LaxSection {
            compatibility_seed: 0.0,
            compatibility_transformed: None,
            path_independence: 0.0,
            red1: 0.0,
            red2: 0.0,
            psi_lambda_fd_rel: 0.0,
        }
    };

    let mut surfaces = Vec::new();
    if opts.verify {
        for (idx, surface) in chain.surfaces.iter().enumerate() {
            let previous = if idx > 0 {
                Some(&chain.surfaces[idx - 1])
            } else {
                None
            };
            let kappa = if idx > 0 {
                Some(steps[idx - 1].kappa1)
            } else {
                None
            };
            let analysis = analyze_surface(
                idx,
                surface,
                previous,
                kappa,
                config.lambda,
                &config.tolerances,
            );
            surfaces.push(analysis.record);
            checks.extend(analysis.checks);
        }
    }

    let algebra = if opts.verify && opts.algebra_cases > 0 {
        let section = algebra_checks(opts.rng_seed, opts.algebra_cases);
        checks.push(Check::new(
            "algebra.norm_multiplicativity",
            section.norm_multiplicativity,
            tol::ALGEBRA,
        ));
        checks.push(Check::new(
            "algebra.dagger",
            section.dagger_antihomomorphism,
            tol::ALGEBRA,
        ));
        checks.push(Check::new("algebra.leibniz", section.leibniz, tol::ALGEBRA));
        checks.push(Check::new(
            "algebra.projector",
            section.projector_invariants,
            tol::ALGEBRA,
        ));
        Some(section)
    } else {
        None
    };

    let pass = checks.iter().all(|c| c.pass);
    let report = VerificationReport {
        pass,
        lambda: config.lambda,
        grid,
        tolerances: config.tolerances,
        lax,
        algebra,
        surfaces,
        checks,
    };

    let mut written = Vec::new();
    if opts.export {
        if let Some(path) = &config.outputs.obj {
            let last = chain.surfaces.last().expect("chain never empty");
            export_obj_to_path(last, path)?;
            written.push(path.clone());
        }
        if let Some(path) = &config.outputs.fields {
            let last_cf = chain.fields.last().expect("chain never empty");
            let json = serde_json::to_string_pretty(&field_to_json(last_cf))?;
            std::fs::write(path, json)?;
            written.push(path.clone());
        }
        if let Some(path) = &config.outputs.report {
            let json = serde_json::to_string_pretty(&report)?;
            std::fs::write(path, json)?;
            written.push(path.clone());
        }
    }

    Ok(PipelineOutcome { report, written })
}

fn verify_chain(
    config: &PipelineConfig,
    opts: &RunOptions,
    cf0: &CoefficientField,
    chain: &ChainResult,
    checks: &mut Vec<Check>,
) -> Result<LaxSection> {
    let lambda = Complex64::new(config.lambda, 0.0);
    let seed_gate = if is_vacuum(cf0) {
        tol::VACUUM_COMPATIBILITY
    } else {
        tol::TRANSFORMED_COMPATIBILITY
    };

    // independent residual jobs, parallel when threads allow
    type Job<'a> = Box<dyn FnOnce() -> Result<Vec<(String, f64, f64)>> + Send + 'a>;
    let mut jobs: Vec<Job> = Vec::new();
    jobs.push(Box::new(move || {
        let (_, worst) = compatibility_residual(cf0, lambda)?;
        Ok(vec![("lax.compatibility_seed".into(), worst, seed_gate)])
    }));
    for (k, field) in chain.fields.iter().enumerate().skip(1) {
        jobs.push(Box::new(move || {
            let (_, worst) = compatibility_residual(field, lambda)?;
            Ok(vec![(
                format!("lax.compatibility_transformed[{k}]"),
                worst,
                tol::TRANSFORMED_COMPATIBILITY,
            )])
        }));
    }
    for (k, field) in chain.fields.iter().enumerate() {
        let lam = config.lambda;
        jobs.push(Box::new(move || {
            let rep = verify_lax(field, lam)?;
            Ok(vec![
                (
                    format!("lax.path_independence[{k}]"),
                    rep.path_independence,
                    tol::PATH_INDEPENDENCE,
                ),
                (format!("lax.red1[{k}]"), rep.red1, tol::REDUCTION),
                (format!("lax.red2[{k}]"), rep.red2, tol::REDUCTION),
            ])
        }));
    }
    {
        let lam = config.lambda;
        jobs.push(Box::new(move || {
            let rel = psi_lambda_fd_residual(cf0, lam, tol::PSI_LAMBDA_FD_STEP)?;
            Ok(vec![("lax.psi_lambda_fd".into(), rel, tol::PSI_LAMBDA_FD)])
        }));
    }
    for (k, pf) in chain.projectors.iter().enumerate() {
        let field = &chain.fields[k];
        jobs.push(Box::new(move || {
            let res = projector_system_residual(field, pf)?;
            Ok(vec![(
                format!("backlund.projector_system[{k}]"),
                res,
                tol::DRESSING_RESIDUAL,
            )])
        }));
    }
    for k in 1..chain.wavefields.len() {
        let dressed = &chain.wavefields[k];
        let field = &chain.fields[k];
        jobs.push(Box::new(move || {
            let res = dressed_lax_residual(dressed, field)?;
            Ok(vec![(
                format!("backlund.dressed_lax[{k}]"),
                res,
                tol::DRESSING_RESIDUAL,
            )])
        }));
    }

    let results = run_jobs(jobs, opts.threads.max(1));

    let mut seed_cc = 0.0;
    let mut transformed_cc: Option<f64> = None;
    let mut path = 0.0f64;
    let mut red1 = 0.0f64;
    let mut red2 = 0.0f64;
    let mut fd = 0.0;
    for result in results {
        for (name, value, gate) in result? {
            if name == "lax.compatibility_seed" {
                seed_cc = value;
            } else if name.starts_with("lax.compatibility_transformed") {
                transformed_cc = Some(transformed_cc.unwrap_or(0.0).max(value));
            } else if name.starts_with("lax.path_independence") {
                path = path.max(value);
            } else if name.starts_with("lax.red1") {
                red1 = red1.max(value);
            } else if name.starts_with("lax.red2") {
                red2 = red2.max(value);
            } else if name == "lax.psi_lambda_fd" {
                fd = value;
            }
            checks.push(Check::new(name, value, gate));
        }
    }

    Ok(LaxSection {
        compatibility_seed: seed_cc,
        compatibility_transformed: transformed_cc,
        path_independence: path,
        red1,
        red2,
        psi_lambda_fd_rel: fd,
    })
}

/// The canned example: one Darboux step on a Cantor-by-uniform grid.
/// Exercises a genuinely exotic scale and passes every gate.
pub fn demo_config(out_dir: &Path) -> PipelineConfig {
    PipelineConfig {
        timescale1: TimeScaleSpec::Cantor {
            level: 5,
            a: 0.0,
            b: 1.0,
        },
        timescale2: TimeScaleSpec::Uniform {
            t0: -1.5,
            step: 0.05,
            n: 60,
        },
        lambda: 1.0,
        seed: SeedSpec::default(),
        darboux: vec![DarbouxStep {
            kappa: 1.0,
            phases: [0.25, 2.5],
        }],
        tolerances: ToleranceConfig::default(),
        outputs: Outputs {
            obj: Some(out_dir.join("pseudosphere_cantor.obj")),
            report: Some(out_dir.join("report.json")),
            fields: Some(out_dir.join("soliton_field.json")),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config() -> PipelineConfig {
        PipelineConfig {
            timescale1: TimeScaleSpec::Uniform {
                t0: -1.0,
                step: 0.125,
                n: 16,
            },
            timescale2: TimeScaleSpec::Uniform {
                t0: -1.0,
                step: 0.125,
                n: 16,
            },
            lambda: 1.0,
            seed: SeedSpec::default(),
            darboux: vec![DarbouxStep {
                kappa: 1.0,
                phases: [0.2, 1.9],
            }],
            tolerances: ToleranceConfig::default(),
            outputs: Outputs::default(),
        }
    }

    #[test]
    fn config_json_round_trip() {
        let text = r#"{
            "timescale1": {"kind": "cantor", "level": 3, "a": 0.0, "b": 1.0},
            "timescale2": {"kind": "uniform", "t0": -1.0, "step": 0.1, "n": 20},
            "lambda": 0.5,
            "seed": "vacuum",
            "darboux": [{"kappa": 1.0, "phases": [0.1, 1.4]}],
            "tolerances": {"exact": 1e-9, "cross": 1e-6},
            "outputs": {}
        }"#;
        let cfg = PipelineConfig::from_json(text).unwrap();
        assert_eq!(cfg.lambda, 0.5);
        assert_eq!(cfg.darboux.len(), 1);
        let back = serde_json::to_string(&cfg).unwrap();
        let again = PipelineConfig::from_json(&back).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn zero_lambda_names_the_field() {
        let mut cfg = base_config();
        cfg.lambda = 0.0;
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("lambda"), "{err}");
    }

    #[test]
    fn repeated_kappa_names_the_entry() {
        let mut cfg = base_config();
        cfg.darboux = vec![
            DarbouxStep {
                kappa: 1.0,
                phases: [0.0, 1.0],
            },
            DarbouxStep {
                kappa: 1.0,
                phases: [0.3, 0.4],
            },
        ];
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("darboux[1]"), "{err}");
    }

    #[test]
    fn unknown_seed_rejected() {
        let mut cfg = base_config();
        cfg.seed = SeedSpec::Name("plasma".into());
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn small_run_passes_and_reports() {
        let cfg = base_config();
        let opts = RunOptions {
            algebra_cases: 500,
            ..RunOptions::default()
        };
        let outcome = run(&cfg, &opts).unwrap();
        let report = outcome.report;
        assert!(
            report.pass,
            "failed checks: {:?}",
            report.checks.iter().filter(|c| !c.pass).collect::<Vec<_>>()
        );
        assert_eq!(report.surfaces.len(), 2);
        assert!(report.surfaces[1].valid_nodes > 0);
        assert!(report.surfaces[1].k_max_rel_err <= 1e-8);
        let seg = report.surfaces[1].segment.as_ref().unwrap();
        assert!((seg.expected_length - 0.5).abs() < 1e-15);
    }

    #[test]
    fn threaded_run_matches_serial() {
        let cfg = base_config();
        let serial = run(
            &cfg,
            &RunOptions {
                algebra_cases: 100,
                threads: 1,
                ..RunOptions::default()
            },
        )
        .unwrap();
        let parallel = run(
            &cfg,
            &RunOptions {
                algebra_cases: 100,
                threads: 4,
                ..RunOptions::default()
            },
        )
        .unwrap();
        assert_eq!(serial.report.checks.len(), parallel.report.checks.len());
        for (a, b) in serial.report.checks.iter().zip(&parallel.report.checks) {
            assert_eq!(a.name, b.name);
            assert_eq!(a.value.to_bits(), b.value.to_bits(), "{}", a.name);
        }
    }

    #[test]
    fn field_file_round_trip() {
        let cfg = base_config();
        let t1 = construct_timescale(&cfg.timescale1).unwrap();
        let t2 = construct_timescale(&cfg.timescale2).unwrap();
        let domain = Arc::new(GridDomain::new(t1, t2));
        let cf = CoefficientField::vacuum(domain);
        let json = serde_json::to_string(&field_to_json(&cf)).unwrap();
        let back = field_from_json(&json).unwrap();
        assert_eq!(back.domain().n1(), 16);
        assert!(is_vacuum(&back));
    }

    #[test]
    fn algebra_checks_are_tight_and_deterministic() {
        let a = algebra_checks(7, 1000);
        let b = algebra_checks(7, 1000);
        assert_eq!(
            a.norm_multiplicativity.to_bits(),
            b.norm_multiplicativity.to_bits()
        );
        assert!(a.norm_multiplicativity <= 1e-10);
        assert!(a.dagger_antihomomorphism <= 1e-10);
        assert!(a.leibniz <= 1e-10);
        assert!(a.projector_invariants <= 1e-10);
    }
}
