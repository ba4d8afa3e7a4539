//! Cross-module invariants on the one-soliton net that do not belong to a
//! single acceptance criterion.

use std::sync::Arc;

use ksurf::backlund::{run_chain, DarbouxParams};
use ksurf::laxpair::CoefficientField;
use ksurf::surface::{
    closed_form_frame_residual, gauss_curvature_dot, normal_consistency,
    shifted_tangent_coplanarity, tangent_plane, KNode,
};
use ksurf::timescale::{GridDomain, TimeScale1D};

fn soliton() -> ksurf::backlund::ChainResult {
    let domain = Arc::new(GridDomain::new(
        TimeScale1D::cantor(4, 0.0, 1.0).unwrap(),
        TimeScale1D::uniform(-1.5, 0.075, 40).unwrap(),
    ));
    let cf = CoefficientField::vacuum(domain);
    let step = DarbouxParams::new(1.0, 0.25, 2.5).unwrap();
    run_chain(&cf, &[step], 1.0).unwrap()
}

#[test]
fn closed_form_tangents_match_differences_on_soliton() {
    let chain = soliton();
    let res =
        closed_form_frame_residual(&chain.surfaces[1], &chain.wavefields[1], &chain.fields[1])
            .unwrap();
    assert!(res <= 1e-12, "{res}");
}

#[test]
fn spectral_normal_matches_cross_product_per_node() {
    let chain = soliton();
    let worst = normal_consistency(&chain.surfaces[1]);
    assert!(worst <= 1e-10, "{worst}");
}

#[test]
fn shifted_tangents_are_coplanar() {
    let chain = soliton();
    let worst = shifted_tangent_coplanarity(&chain.surfaces[1]);
    assert!(worst <= 1e-9, "{worst}");
}

#[test]
fn tangent_plane_normal_aligns_with_spectral_normal() {
    let chain = soliton();
    let s = &chain.surfaces[1];
    let k = gauss_curvature_dot(s);
    let d = s.domain();
    for i in 0..d.n1() - 1 {
        for j in 0..d.n2() - 1 {
            if !matches!(k.get(i, j), KNode::Value(_)) {
                continue;
            }
            let plane = tangent_plane(s, (i, j)).unwrap();
            let n = s.n.get(i, j);
            let aligned = (plane.normal - n).norm().min((plane.normal + n).norm());
            assert!(aligned <= 1e-9, "node ({i},{j}): {aligned}");
        }
    }
}

#[test]
fn transformed_field_keeps_wave_symmetry() {
    // Psi(-lambda) = e3 Psi(lambda) e3^-1 survives the dressing step
    use ksurf::quatalg::CQuat;
    use num_complex::Complex64;
    let chain = soliton();
    let cf = &chain.fields[1];
    let plus = ksurf::laxpair::propagate(cf, Complex64::new(1.0, 0.0), CQuat::ONE).unwrap();
    let minus = ksurf::laxpair::propagate(cf, Complex64::new(-1.0, 0.0), CQuat::ONE).unwrap();
    let e3_inv = CQuat::E3.inverse().unwrap();
    for (pp, pm) in plus.psi.values().iter().zip(minus.psi.values()) {
        assert!((*pm - CQuat::E3 * *pp * e3_inv).op_norm() <= 1e-12);
    }
}

#[test]
fn fundamental_data_is_coherent() {
    let chain = soliton();
    let s = &chain.surfaces[1];
    let frame = ksurf::surface::delta_frame(s);
    let d = s.domain();
    let mut seen = 0;
    for i in 0..d.n1() {
        for j in 0..d.n2() {
            let Some(fd) = ksurf::surface::fundamental_data(&frame, i, j) else {
                continue;
            };
            seen += 1;
            assert!(fd.e > 0.0 && fd.g > 0.0);
            assert!(fd.phi > 0.0 && fd.phi < std::f64::consts::PI);
            let f_from_phi = (fd.e * fd.g).sqrt() * fd.phi.cos();
            assert!((fd.f - f_from_phi).abs() <= 1e-10 * (1.0 + fd.f.abs()));
            // asymptotic net: the mixed second-form entries carry the curvature
            let k = -(fd.m12 * fd.m21) / (fd.e * fd.g - fd.f * fd.f);
            assert!((k + 4.0).abs() <= 1e-6, "K from fundamental data: {k}");
        }
    }
    assert!(seen > 1000);
}

#[test]
fn vacuum_surface_exports_vertices_but_no_faces() {
    let domain = Arc::new(GridDomain::new(
        TimeScale1D::uniform(0.0, 0.2, 6).unwrap(),
        TimeScale1D::uniform(0.0, 0.2, 6).unwrap(),
    ));
    let cf = CoefficientField::vacuum(domain);
    let chain = run_chain(&cf, &[], 1.0).unwrap();
    let mut buf = Vec::new();
    ksurf::obj::export_obj(&chain.surfaces[0], &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 36);
    assert_eq!(text.lines().filter(|l| l.starts_with("f ")).count(), 0);
}

#[test]
fn wavefield_dump_round_trips_coefficients() {
    let chain = soliton();
    let dump = chain.wavefields[0].to_json();
    assert_eq!(dump["lambda"][0], serde_json::json!(1.0));
    let psi00: ksurf::quatalg::CQuat = serde_json::from_value(dump["psi"][0][0].clone()).unwrap();
    assert!((psi00 - chain.wavefields[0].psi.get(0, 0)).norm() < 1e-15);
}
