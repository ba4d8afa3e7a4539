//! Acceptance suite: every certification criterion at its pinned tolerance,
//! one test per criterion, one printed line per criterion.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;

use ksurf::backlund::{run_chain, ChainResult, DarbouxParams};
use ksurf::laxpair::{
    compatibility_residual, lax_equation_residual, propagate, psi_lambda_fd_residual, verify_lax,
    CoefficientField,
};
use ksurf::pipeline::algebra_checks;
use ksurf::quatalg::{geodesic_delta, CQuat};
use ksurf::surface::{
    curvature_stats, gauss_curvature_dot, gauss_curvature_tet, net_residuals, KNode, SurfaceNet,
};
use ksurf::timescale::{GridDomain, TimeScale1D};
use ksurf::tolerances as tol;

const PHASES: [f64; 2] = [0.25, 2.5];
const KAPPA: f64 = 1.0;
const LAMBDAS: [f64; 3] = [0.5, 1.0, 2.0];

fn gate(label: &str, value: f64, tolerance: f64) {
    assert!(
        value.is_finite() && value <= tolerance,
        "[FAIL] {label}: {value:.3e} exceeds {tolerance:.1e}"
    );
}

/// The four time-scale families of the certification matrix.
fn families() -> Vec<(&'static str, Arc<GridDomain>)> {
    let uniform60 = TimeScale1D::uniform(-1.5, 0.05, 60).unwrap();
    let union_scale = TimeScale1D::union(&[
        TimeScale1D::interval(-1.0, 0.0, 25).unwrap(),
        TimeScale1D::uniform(0.0, 0.125, 9).unwrap(),
    ])
    .unwrap();
    vec![
        (
            "uniform 60x60",
            Arc::new(GridDomain::new(uniform60.clone(), uniform60.clone())),
        ),
        (
            "interval 200x50",
            Arc::new(GridDomain::new(
                TimeScale1D::interval(-1.0, 1.0, 200).unwrap(),
                TimeScale1D::interval(-1.0, 1.0, 50).unwrap(),
            )),
        ),
        (
            "cantor(5) x uniform",
            Arc::new(GridDomain::new(
                TimeScale1D::cantor(5, 0.0, 1.0).unwrap(),
                uniform60.clone(),
            )),
        ),
        (
            "union x uniform",
            Arc::new(GridDomain::new(union_scale, uniform60)),
        ),
    ]
}

fn one_soliton(domain: &Arc<GridDomain>, lambda: f64) -> ChainResult {
    let cf = CoefficientField::vacuum(Arc::clone(domain));
    let step = DarbouxParams::new(KAPPA, PHASES[0], PHASES[1]).unwrap();
    run_chain(&cf, &[step], lambda).unwrap()
}

struct TetSummary {
    max_rel_diff: f64,
    tors_spread: [f64; 2],
    cells: usize,
}

/// Tetrahedron curvature vs dot-product curvature over well-conditioned
/// cells, plus the spread of the sin(theta_j) / (eps_j |Delta_j r|) ratios.
fn tet_summary(surface: &SurfaceNet) -> TetSummary {
    let k = gauss_curvature_dot(surface);
    let d = surface.domain();
    let mut max_rel: f64 = 0.0;
    let mut tors: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    let mut cells = 0;
    for i in 0..d.n1() - 1 {
        for j in 0..d.n2() - 1 {
            let dot_k = match k.get(i, j) {
                KNode::Value(v) => v,
                _ => continue,
            };
            let tet = match gauss_curvature_tet(surface, (i, j)).unwrap() {
                Some(t) => t,
                None => continue,
            };
            cells += 1;
            max_rel = max_rel.max((tet.k - dot_k).abs() / dot_k.abs());
            let l1 = (surface.r.get(i + 1, j) - surface.r.get(i, j)).norm();
            let l2 = (surface.r.get(i, j + 1) - surface.r.get(i, j)).norm();
            tors[0].push(tet.angles.theta1.sin() / l1);
            tors[1].push(tet.angles.theta2.sin() / l2);
        }
    }
    let spread = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        (hi - lo) / mean
    };
    TetSummary {
        max_rel_diff: max_rel,
        tors_spread: [spread(&tors[0]), spread(&tors[1])],
        cells,
    }
}

#[test]
fn criterion_1_constant_curvature() {
    let mut worst: f64 = 0.0;
    for (name, domain) in families() {
        for lambda in LAMBDAS {
            let started = Instant::now();
            let chain = one_soliton(&domain, lambda);
            let surface = &chain.surfaces[1];
            let stats = curvature_stats(&gauss_curvature_dot(surface), -4.0 * lambda * lambda);
            assert!(stats.valid_nodes > 0, "{name}: no valid nodes");
            gate(
                &format!("{name} lambda={lambda} curvature"),
                stats.max_rel_err,
                tol::CURVATURE_REL,
            );
            let elapsed = started.elapsed();
            assert!(
                elapsed.as_secs_f64() < 10.0,
                "[FAIL] {name} lambda={lambda}: took {elapsed:?}"
            );
            worst = worst.max(stats.max_rel_err);
        }
    }
    println!(
        "[PASS] criterion 1: |K + 4 lambda^2|/(4 lambda^2) <= {:.0e} on 4 families x 3 lambdas (worst {worst:.2e})",
        tol::CURVATURE_REL
    );
}

#[test]
fn criterion_2_asymptotic_chebyshev_conditions() {
    let mut worst: f64 = 0.0;
    for (name, domain) in families() {
        for lambda in LAMBDAS {
            let chain = one_soliton(&domain, lambda);
            let res = net_residuals(&chain.surfaces[1]);
            for (what, v) in [
                ("asym1", res.asym[0]),
                ("asym2", res.asym[1]),
                ("cheb1", res.cheb[0]),
                ("cheb2", res.cheb[1]),
            ] {
                gate(
                    &format!("{name} lambda={lambda} {what}"),
                    v,
                    tol::NET_RESIDUAL,
                );
                worst = worst.max(v);
            }
        }
    }
    println!(
        "[PASS] criterion 2: asymptotic + Chebyshev residuals <= {:.0e} (worst {worst:.2e})",
        tol::NET_RESIDUAL
    );
}

#[test]
fn criterion_3_curvature_cross_validation() {
    let mut worst_tet: f64 = 0.0;
    let mut worst_tors: f64 = 0.0;
    for (name, domain) in families() {
        for lambda in LAMBDAS {
            let chain = one_soliton(&domain, lambda);
            let summary = tet_summary(&chain.surfaces[1]);
            assert!(summary.cells > 0);
            gate(
                &format!("{name} lambda={lambda} tet-vs-dot"),
                summary.max_rel_diff,
                tol::TET_CROSS,
            );
            gate(
                &format!("{name} lambda={lambda} tors"),
                summary.tors_spread[0].max(summary.tors_spread[1]),
                tol::TORS_SPREAD,
            );
            worst_tet = worst_tet.max(summary.max_rel_diff);
            worst_tors = worst_tors.max(summary.tors_spread[0].max(summary.tors_spread[1]));
        }
    }
    println!(
        "[PASS] criterion 3: |K_tet - K_dot|/|K_dot| <= {:.0e} (worst {worst_tet:.2e}), tors spread <= {:.0e} (worst {worst_tors:.2e})",
        tol::TET_CROSS,
        tol::TORS_SPREAD
    );
}

#[test]
fn criterion_4_backlund_geometry() {
    // segment length and tangency on the single step, every family
    let mut worst_spread: f64 = 0.0;
    let mut worst_tangency: f64 = 0.0;
    for (name, domain) in families() {
        for lambda in LAMBDAS {
            let chain = one_soliton(&domain, lambda);
            let (seed, moved) = (&chain.surfaces[0], &chain.surfaces[1]);
            let expected = KAPPA / (lambda * lambda + KAPPA * KAPPA);
            let mut lo = f64::INFINITY;
            let mut hi: f64 = 0.0;
            let mut tangency: f64 = 0.0;
            let d = seed.domain();
            for i in 0..d.n1() {
                for j in 0..d.n2() {
                    let seg = moved.r.get(i, j) - seed.r.get(i, j);
                    lo = lo.min(seg.norm());
                    hi = hi.max(seg.norm());
                    tangency = tangency.max(seg.dot(seed.n.get(i, j)).abs());
                }
            }
            gate(
                &format!("{name} lambda={lambda} segment spread"),
                (hi - lo) / expected,
                tol::SEGMENT_SPREAD,
            );
            gate(
                &format!("{name} lambda={lambda} tangency"),
                tangency,
                tol::SEGMENT_TANGENCY,
            );
            worst_spread = worst_spread.max((hi - lo) / expected);
            worst_tangency = worst_tangency.max(tangency);
        }
    }

    // two-step chain keeps the curvature invariant on a 40x40 uniform grid
    let t = TimeScale1D::uniform(-1.5, 0.075, 40).unwrap();
    let domain = Arc::new(GridDomain::new(t.clone(), t));
    let cf = CoefficientField::vacuum(Arc::clone(&domain));
    let steps = [
        DarbouxParams::new(1.0, 0.25, 2.5).unwrap(),
        DarbouxParams::new(0.6, 0.9, 2.4).unwrap(),
    ];
    for lambda in LAMBDAS {
        let chain = run_chain(&cf, &steps, lambda).unwrap();
        assert_eq!(chain.surfaces.len(), 3);
        for (idx, surface) in chain.surfaces.iter().enumerate().skip(1) {
            let stats = curvature_stats(&gauss_curvature_dot(surface), -4.0 * lambda * lambda);
            assert!(stats.valid_nodes > 0);
            gate(
                &format!("chain step {idx} lambda={lambda} curvature"),
                stats.max_rel_err,
                tol::CURVATURE_REL,
            );
        }
    }
    println!(
        "[PASS] criterion 4: segment length spread <= {:.0e} (worst {worst_spread:.2e}), tangency <= {:.0e} (worst {worst_tangency:.2e}), 2-step chains keep K = -4 lambda^2",
        tol::SEGMENT_SPREAD,
        tol::SEGMENT_TANGENCY
    );
}

#[test]
fn criterion_5_lax_pair_integrity() {
    let mut worst_cc_vac: f64 = 0.0;
    let mut worst_cc_tr: f64 = 0.0;
    let mut worst_path: f64 = 0.0;
    let mut worst_red: f64 = 0.0;
    let mut worst_fd: f64 = 0.0;
    for (name, domain) in families() {
        let cf = CoefficientField::vacuum(Arc::clone(&domain));
        for lambda in LAMBDAS {
            let lam = Complex64::new(lambda, 0.0);
            let (_, cc) = compatibility_residual(&cf, lam).unwrap();
            gate(&format!("{name} vacuum cc"), cc, tol::VACUUM_COMPATIBILITY);
            worst_cc_vac = worst_cc_vac.max(cc);

            let chain = one_soliton(&domain, lambda);
            let (_, cc_tr) = compatibility_residual(&chain.fields[1], lam).unwrap();
            gate(
                &format!("{name} lambda={lambda} transformed cc"),
                cc_tr,
                tol::TRANSFORMED_COMPATIBILITY,
            );
            worst_cc_tr = worst_cc_tr.max(cc_tr);

            for field in &chain.fields {
                let rep = verify_lax(field, lambda).unwrap();
                gate(
                    &format!("{name} path"),
                    rep.path_independence,
                    tol::PATH_INDEPENDENCE,
                );
                gate(&format!("{name} red1"), rep.red1, tol::REDUCTION);
                gate(&format!("{name} red2"), rep.red2, tol::REDUCTION);
                worst_path = worst_path.max(rep.path_independence);
                worst_red = worst_red.max(rep.red1.max(rep.red2));
            }

            // the transfer recursion solves the system exactly
            let wf = propagate(&cf, lam, CQuat::ONE).unwrap();
            gate(
                &format!("{name} exactness"),
                lax_equation_residual(&cf, &wf).unwrap(),
                1e-12,
            );

            let fd = psi_lambda_fd_residual(&cf, lambda, tol::PSI_LAMBDA_FD_STEP).unwrap();
            gate(
                &format!("{name} lambda={lambda} psi_lambda fd"),
                fd,
                tol::PSI_LAMBDA_FD,
            );
            worst_fd = worst_fd.max(fd);
        }
    }
    println!(
        "[PASS] criterion 5: vacuum cc {worst_cc_vac:.2e} <= {:.0e}, transformed cc {worst_cc_tr:.2e} <= {:.0e}, path {worst_path:.2e} <= {:.0e}, reductions {worst_red:.2e} <= {:.0e}, psi_lambda fd {worst_fd:.2e} <= {:.0e}",
        tol::VACUUM_COMPATIBILITY,
        tol::TRANSFORMED_COMPATIBILITY,
        tol::PATH_INDEPENDENCE,
        tol::REDUCTION,
        tol::PSI_LAMBDA_FD
    );
}

#[test]
fn criterion_6_algebra_property_suite() {
    let cases = 10_000;
    let section = algebra_checks(0xA11CE, cases);
    gate(
        "norm multiplicativity",
        section.norm_multiplicativity,
        tol::ALGEBRA,
    );
    gate(
        "dagger anti-homomorphism",
        section.dagger_antihomomorphism,
        tol::ALGEBRA,
    );
    gate("Leibniz identities", section.leibniz, tol::ALGEBRA);
    gate(
        "projector invariants",
        section.projector_invariants,
        tol::ALGEBRA,
    );
    println!(
        "[PASS] criterion 6: {cases} randomized cases per identity, all residuals <= {:.0e} (worst {:.2e})",
        tol::ALGEBRA,
        section
            .norm_multiplicativity
            .max(section.dagger_antihomomorphism)
            .max(section.leibniz)
            .max(section.projector_invariants)
    );
}

#[test]
fn criterion_7_continuum_limit() {
    // exactness persists under refinement: no drift in the invariants
    for n in [25usize, 50, 100, 200] {
        let t = TimeScale1D::interval(0.0, 1.0, n).unwrap();
        let domain = Arc::new(GridDomain::new(t.clone(), t));
        let chain = one_soliton(&domain, 1.0);
        let surface = &chain.surfaces[1];
        let stats = curvature_stats(&gauss_curvature_dot(surface), -4.0);
        assert!(stats.valid_nodes > 0);
        gate(&format!("n={n} curvature"), stats.max_rel_err, 1e-8);
        let res = net_residuals(surface);
        gate(
            &format!("n={n} residuals"),
            res.asym[0]
                .max(res.asym[1])
                .max(res.cheb[0])
                .max(res.cheb[1]),
            1e-8,
        );
    }

    // geodesic vs chord derivative of the unit-normalized wave function,
    // compared in the algebra (radial chord component projected out):
    // second-order agreement in the step size
    let mut errs = Vec::new();
    for n in [25usize, 50, 100, 200] {
        let t1 = TimeScale1D::interval(0.0, 1.0, n).unwrap();
        let t2 = TimeScale1D::uniform(0.0, 1.0, 2).unwrap();
        let domain = Arc::new(GridDomain::new(t1, t2));
        let cf = CoefficientField::vacuum(Arc::clone(&domain));
        let wf = propagate(&cf, Complex64::new(1.3, 0.0), CQuat::ONE).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..n - 1 {
            let eps = domain.t1().graininess(i);
            let raw = wf.psi.get(i, 0).to_quat(1e-9).unwrap();
            let raw_next = wf.psi.get(i + 1, 0).to_quat(1e-9).unwrap();
            let phi = raw * (1.0 / raw.norm());
            let phi_next = raw_next * (1.0 / raw_next.norm());
            let geo = geodesic_delta(phi, phi_next, eps).unwrap();
            let chord = (phi_next - phi) * (1.0 / eps);
            let inv = phi.inverse().unwrap();
            let diff = (geo * inv - (chord * inv).im_project()).norm();
            worst = worst.max(diff);
        }
        errs.push((n, worst));
    }
    let mut orders = Vec::new();
    for pair in errs.windows(2) {
        let (_, e_coarse) = pair[0];
        let (_, e_fine) = pair[1];
        orders.push((e_coarse / e_fine).log2());
    }
    for (idx, order) in orders.iter().enumerate() {
        assert!(
            *order >= 1.9,
            "[FAIL] refinement step {idx}: observed order {order:.3} < 1.9"
        );
    }
    println!(
        "[PASS] criterion 7: invariants stable under refinement; geodesic-vs-chord observed orders {:?} (all >= 1.9)",
        orders.iter().map(|o| (o * 100.0).round() / 100.0).collect::<Vec<_>>()
    );
}
