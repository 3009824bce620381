use nalgebra::{Matrix3, Vector3};
use surfgauge::calculus::*;
use surfgauge::deformation::*;
use surfgauge::random::*;
use surfgauge::verification::*;
use surfgauge::*;

type V3 = Vector3<f64>;
type M3 = Matrix3<f64>;

fn graph_patch(n: usize) -> SurfacePatch {
    let grid = ParameterGrid::periodic(n, n, 1.0, 1.0).unwrap();
    SurfacePatch::graph(&grid, 0.3)
}

fn sphere_patch() -> SurfacePatch {
    let grid = SurfacePatch::sphere_grid(96, 32, 0.5)
        .unwrap()
        .with_fd_order(8)
        .unwrap();
    SurfacePatch::sphere(&grid)
}

fn inputs(geo: &GeometryCache) -> (TangentField, Vec<V3>) {
    (
        fourier_tangent_vector(geo, 7, 2, 1.0),
        fourier_ambient(geo.grid(), 11, 2, 0.5),
    )
}

fn max_v(v: &[V3]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.norm()))
}

fn max_m(v: &[M3]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.norm()))
}

fn diff_v(a: &[V3], b: &[V3]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

fn assert_reports(reports: &[OracleReport]) {
    for r in reports {
        println!("{r}");
    }
    let failed: Vec<_> = reports.iter().filter(|r| !r.passed).collect();
    assert!(failed.is_empty(), "failed: {failed:#?}");
}

#[test]
fn all_sixteen_vector_cells_match_pushforward() {
    let patch = graph_patch(48);
    let geo = build_geometry(&patch).unwrap();
    let (q, w) = inputs(&geo);
    let reports = check_vector_cells_and_algebra(&patch, &q, &w).unwrap();
    assert_eq!(reports.len(), 32);
    assert_reports(&reports);
}

#[test]
fn all_thirty_six_tensor_cells_match_pushforward() {
    let patch = graph_patch(48);
    let geo = build_geometry(&patch).unwrap();
    let q = fourier_tangent_tensor(&geo, 5, 2, 1.0);
    let w = fourier_ambient(geo.grid(), 13, 2, 0.5);
    let reports = check_tensor_table(&patch, &q, &w).unwrap();
    assert_eq!(reports.len(), 36);
    assert_reports(&reports);
}

#[test]
fn geometric_deformations_match_fd() {
    let patch = graph_patch(96);
    let geo = build_geometry(&patch).unwrap();
    let w = fourier_ambient(geo.grid(), 17, 2, 0.5);
    let ctx = FdContext::new(&patch, &w, 1e-4).unwrap();
    assert_reports(&check_geometric_deformations(&ctx, 1e-6));
}

#[test]
fn vector_cell_examples() {
    let geo = build_geometry(&graph_patch(32)).unwrap();
    let (q, w) = inputs(&geo);
    let parts = decompose_deformation(&w, &geo);
    let qa = geo.vector_to_ambient(&q).unwrap();
    let v = GaugeSpec::vector;
    for g in GaugeSpec::all(1) {
        let d = vector_deformation(&q, &geo, &parts, g, g).unwrap();
        assert_eq!(d.max_abs(), 0.0);
    }
    let cell = |g, d| {
        geo.vector_to_ambient(&vector_deformation(&q, &geo, &parts, v(g), v(d)).unwrap())
            .unwrap()
    };
    let gq: Vec<V3> = (0..geo.len()).map(|k| parts.g[k] * qa[k]).collect();
    let gtq: Vec<V3> = (0..geo.len()).map(|k| -parts.g[k].transpose() * qa[k]).collect();
    let sq: Vec<V3> = (0..geo.len()).map(|k| -parts.s[k] * qa[k]).collect();
    assert!(diff_v(&cell(GaugeKind::Upper, GaugeKind::Material), &gq) < 1e-13);
    assert!(diff_v(&cell(GaugeKind::Lower, GaugeKind::Material), &gtq) < 1e-13);
    assert!(diff_v(&cell(GaugeKind::Lower, GaugeKind::Jaumann), &sq) < 1e-13);
}

#[test]
fn jaumann_derivative_is_mean_of_convected() {
    let geo = build_geometry(&graph_patch(32)).unwrap();
    let (q, w) = inputs(&geo);
    let parts = decompose_deformation(&w, &geo);
    for g in GaugeSpec::all(1) {
        let j = vector_deformation(&q, &geo, &parts, g, GaugeSpec::vector(GaugeKind::Jaumann)).unwrap();
        let u = vector_deformation(&q, &geo, &parts, g, GaugeSpec::vector(GaugeKind::Upper)).unwrap();
        let l = vector_deformation(&q, &geo, &parts, g, GaugeSpec::vector(GaugeKind::Lower)).unwrap();
        let mean = u.add(&l).unwrap().scale(0.5);
        assert!(j.add(&mean.scale(-1.0)).unwrap().max_abs() < 1e-12);
    }
}

#[test]
fn translation_has_no_deformation_gradient() {
    let grid = ParameterGrid::periodic(16, 16, 1.0, 1.0).unwrap();
    let geo = build_geometry(&SurfacePatch::flat(&grid)).unwrap();
    let w = vec![V3::new(0.3, -1.0, 2.0); geo.len()];
    let p = decompose_deformation(&w, &geo);
    assert!(max_m(&p.g) < 1e-12 && max_m(&p.s) < 1e-12 && max_m(&p.a) < 1e-12);
    assert!(max_v(&p.b) < 1e-12);
}

#[test]
fn rigid_rotation_of_sphere_is_strain_free() {
    let geo = build_geometry(&sphere_patch()).unwrap();
    let omega = V3::new(0.3, -0.7, 1.1);
    let w: Vec<V3> = geo.x.iter().map(|x| omega.cross(x)).collect();
    let p = decompose_deformation(&w, &geo);
    assert!(max_m(&p.s) < 1e-8, "S = {}", max_m(&p.s));
    assert!(max_m(&p.a) > 0.1);
    // metric does not deform under an isometry
    if let GeomDeformation::Tensor(t) = geometric_deformation(GeomQuantity::Metric, &geo, &p) {
        assert!(t.max_abs() < 1e-8);
    } else {
        panic!("metric deformation is a tensor");
    }
    // convected and Jaumann derivatives coincide when S = 0
    let q = fourier_tangent_vector(&geo, 3, 2, 1.0);
    let m = GaugeSpec::vector(GaugeKind::Material);
    let cells: Vec<TangentField> = [GaugeKind::Upper, GaugeKind::Lower, GaugeKind::Jaumann]
        .iter()
        .map(|&k| vector_deformation(&q, &geo, &p, m, GaugeSpec::vector(k)).unwrap())
        .collect();
    for c in &cells[1..] {
        assert!(c.add(&cells[0].scale(-1.0)).unwrap().max_abs() < 1e-7);
    }
}

#[test]
fn normal_plus_constant_is_rotation_free() {
    let geo = build_geometry(&sphere_patch()).unwrap();
    let w: Vec<V3> = geo.nu.iter().map(|n| n + V3::z()).collect();
    let p = decompose_deformation(&w, &geo);
    assert!(max_m(&p.a) < 1e-8, "A = {}", max_m(&p.a));
    assert!(max_m(&p.s) > 0.1);
    let q = fourier_tangent_vector(&geo, 3, 2, 1.0);
    let up = GaugeSpec::vector(GaugeKind::Upper);
    let a = vector_deformation(&q, &geo, &p, up, GaugeSpec::vector(GaugeKind::Material)).unwrap();
    let b = vector_deformation(&q, &geo, &p, up, GaugeSpec::vector(GaugeKind::Jaumann)).unwrap();
    assert!(a.add(&b.scale(-1.0)).unwrap().max_abs() < 1e-7);
}

#[test]
fn deformation_parts_invariants() {
    let geo = build_geometry(&graph_patch(96)).unwrap();
    let w = fourier_ambient(geo.grid(), 19, 2, 0.5);
    let p = decompose_deformation(&w, &geo);
    for k in 0..geo.len() {
        assert!((p.g[k] - p.s[k] - p.a[k]).norm() < 1e-14);
        assert!((p.s[k] - p.s[k].transpose()).norm() < 1e-14);
        assert!((p.a[k] + p.a[k].transpose()).norm() < 1e-14);
    }
    // A = -(rot w / 2) E
    let wt = geo.vector_from_ambient(&p.wt, Variance::Contra);
    let rot = curl(&wt, &geo).unwrap();
    let e = geo.tensor_to_ambient(&geo.levi_civita_field()).unwrap();
    let a_ref: Vec<M3> = (0..geo.len()).map(|k| e[k] * (-0.5 * rot[k])).collect();
    let err = p.a.iter().zip(&a_ref).fold(0.0f64, |m, (x, y)| m.max((x - y).norm()));
    assert!(err < 1e-8 * max_m(&p.a), "A vs rot: {err}");
    // b = ∇w⊥ + II w
    let gw = grad_scalar(&p.wn, &geo);
    let ii = geo.shape_operator();
    let b_ref: Vec<V3> = (0..geo.len()).map(|k| gw[k] + ii[k] * p.wt[k]).collect();
    assert!(diff_v(&p.b, &b_ref) < 1e-8 * max_v(&p.b));
    // G_ij = w_i|j − w⊥ II_ij
    let gwt = grad_vec(&p.wt, &geo);
    let g_ref: Vec<M3> = (0..geo.len()).map(|k| gwt[k] - ii[k] * p.wn[k]).collect();
    let err = p.g.iter().zip(&g_ref).fold(0.0f64, |m, (x, y)| m.max((x - y).norm()));
    assert!(err < 1e-8 * max_m(&p.g));
}

#[test]
fn shape_operator_deformation_on_flat_plane_with_tangential_w() {
    let grid = ParameterGrid::periodic(32, 32, 1.0, 1.0).unwrap();
    let geo = build_geometry(&SurfacePatch::flat(&grid)).unwrap();
    let w: Vec<V3> = fourier_ambient(&grid, 2, 2, 1.0)
        .iter()
        .map(|v| V3::new(v.x, v.y, 0.0))
        .collect();
    let p = decompose_deformation(&w, &geo);
    match geometric_deformation(GeomQuantity::ShapeOperator, &geo, &p) {
        GeomDeformation::AmbientTensor(m) => assert!(max_m(&m) < 1e-12),
        _ => panic!("shape operator deformation is an ambient tensor"),
    }
    assert!(matches!(
        "curvature".parse::<GeomQuantity>(),
        Err(Error::UnknownQuantity(_))
    ));
}

#[test]
fn adjoints_on_flat_identity_vanish() {
    let grid = ParameterGrid::periodic(16, 16, 1.0, 1.0).unwrap();
    let geo = build_geometry(&SurfacePatch::flat(&grid)).unwrap();
    let id = geo.to_contra(&geo.metric_field());
    for which in [AdjointKind::G, AdjointKind::GT, AdjointKind::S, AdjointKind::A] {
        assert!(max_v(&adjoint_divergence(&id, &geo, which).unwrap()) < 1e-12);
    }
}

#[test]
fn antisymmetric_adjoint_kills_symmetric_input() {
    let geo = build_geometry(&graph_patch(32)).unwrap();
    let r = fourier_tangent_tensor(&geo, 4, 2, 1.0);
    let ra = geo.tensor_to_ambient(&r).unwrap();
    let sym: Vec<M3> = ra.iter().map(|m| m + m.transpose()).collect();
    let rs = geo.tensor_from_ambient(&sym, [Variance::Contra, Variance::Contra]);
    assert!(max_v(&adjoint_divergence(&rs, &geo, AdjointKind::A).unwrap()) < 1e-10);
}

#[test]
fn adjoints_are_l2_adjoint() {
    let geo = build_geometry(&graph_patch(96)).unwrap();
    let r = fourier_tangent_tensor(&geo, 4, 2, 1.0);
    let w = fourier_ambient(geo.grid(), 8, 2, 1.0);
    let p = decompose_deformation(&w, &geo);
    for (which, psi) in [
        (AdjointKind::G, p.g.clone()),
        (AdjointKind::GT, p.g.iter().map(|m| m.transpose()).collect()),
        (AdjointKind::S, p.s.clone()),
        (AdjointKind::A, p.a.clone()),
    ] {
        let lhs = l2_inner(
            FieldRef::Ambient(&adjoint_divergence(&r, &geo, which).unwrap()),
            FieldRef::Ambient(&w),
            &geo,
        )
        .unwrap();
        let rhs = l2_inner(FieldRef::Tangent(&r), FieldRef::AmbientTensor(&psi), &geo).unwrap();
        assert!(
            (lhs - rhs).abs() < 1e-6 * rhs.abs().max(1e-3),
            "{which:?}: {lhs} vs {rhs}"
        );
    }
}

#[test]
fn material_derivative_is_metric_compatible() {
    // q under the upper gauge, r under the material gauge:
    // d<q, r> = <Gq, r> + <q, 0>
    let patch = graph_patch(48);
    let geo = build_geometry(&patch).unwrap();
    let (q, w) = inputs(&geo);
    let r = geo.vector_to_ambient(&fourier_tangent_vector(&geo, 9, 2, 1.0)).unwrap();
    let qa = geo.vector_to_ambient(&q).unwrap();
    let p = decompose_deformation(&w, &geo);
    let gq: Vec<V3> = (0..geo.len()).map(|k| p.g[k] * qa[k]).collect();
    let exact: Vec<f64> = gq.iter().zip(&r).map(|(a, b)| a.dot(b)).collect();
    let ctx = FdContext::new(&patch, &w, 1e-4).unwrap();
    let up = GaugeSpec::vector(GaugeKind::Upper);
    let mat = GaugeSpec::vector(GaugeKind::Material);
    let mut errs = [0.0; 2];
    for s in 0..2 {
        let h = ctx.step(s);
        let [gp, gm] = &ctx.deformed[s];
        let ip = |g: &GeometryCache| -> Vec<f64> {
            push_vector(&qa, &geo, g, up)
                .iter()
                .zip(&push_vector(&r, &geo, g, mat))
                .map(|(a, b)| a.dot(b))
                .collect()
        };
        let (a, b) = (ip(gp), ip(gm));
        let scale = exact.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        errs[s] = (0..geo.len())
            .map(|k| ((a[k] - b[k]) / (2.0 * h) - exact[k]).abs())
            .fold(0.0, f64::max)
            / scale;
    }
    let rep = OracleReport::sweep("metric compatibility", 1e-4, errs, 1e-6, 1e-10);
    assert!(rep.passed, "{rep}");
}

fn stress_pairing(
    geo: &GeometryCache,
    q: &TangentField,
    m: &TangentField,
    p: &DeformationParts,
    gauge: GaugeSpec,
) -> (f64, f64) {
    let sigma = gauge_stress(q, m, geo, gauge, StressConvention::Frame).unwrap();
    let lhs = geo.integrate(&geo.inner(&sigma, &p.field(&p.g, geo)).unwrap());
    let rhs = if gauge.rank == 1 {
        let psi = apply_psi_vec(gauge, p, &geo.vector_to_ambient(q).unwrap());
        l2_inner(FieldRef::Tangent(m), FieldRef::Ambient(&psi), geo).unwrap()
    } else {
        let psi = apply_psi_mat(gauge, p, &geo.tensor_to_ambient(q).unwrap());
        l2_inner(FieldRef::Tangent(m), FieldRef::AmbientTensor(&psi), geo).unwrap()
    };
    (lhs, rhs)
}

#[test]
fn gauge_stress_reproduces_energy_rate_pairing() {
    let geo = build_geometry(&graph_patch(32)).unwrap();
    let w = fourier_ambient(geo.grid(), 21, 2, 0.5);
    let p = decompose_deformation(&w, &geo);
    let q1 = fourier_tangent_vector(&geo, 1, 2, 1.0);
    let m1 = fourier_tangent_vector(&geo, 2, 2, 1.0);
    for g in GaugeSpec::all(1) {
        let (l, r) = stress_pairing(&geo, &q1, &m1, &p, g);
        assert!((l - r).abs() < 1e-12 * (1.0 + r.abs()), "{g}: {l} vs {r}");
    }
    let q2 = fourier_tangent_tensor(&geo, 1, 2, 1.0);
    let m2 = fourier_tangent_tensor(&geo, 2, 2, 1.0);
    for g in GaugeSpec::all(2) {
        let (l, r) = stress_pairing(&geo, &q2, &m2, &p, g);
        assert!((l - r).abs() < 1e-12 * (1.0 + r.abs()), "{g}: {l} vs {r}");
    }
    // contravariant proxy: <σ̃, G> = <m, (Ψ − G) q>
    let qa = geo.vector_to_ambient(&q1).unwrap();
    for g in GaugeSpec::all(1) {
        let st = gauge_stress(&q1, &m1, &geo, g, StressConvention::ContravariantProxy).unwrap();
        let lhs = geo.integrate(&geo.inner(&st, &p.field(&p.g, &geo)).unwrap());
        let psi = apply_psi_vec(g, &p, &qa);
        let v: Vec<V3> = (0..geo.len()).map(|k| psi[k] - p.g[k] * qa[k]).collect();
        let rhs = l2_inner(FieldRef::Tangent(&m1), FieldRef::Ambient(&v), &geo).unwrap();
        assert!((lhs - rhs).abs() < 1e-12 * (1.0 + rhs.abs()));
    }
}

#[test]
fn gauge_stress_special_cases() {
    let geo = build_geometry(&graph_patch(16)).unwrap();
    let q = fourier_tangent_vector(&geo, 1, 2, 1.0);
    let m = fourier_tangent_vector(&geo, 2, 2, 1.0);
    let fr = StressConvention::Frame;
    let mat = gauge_stress(&q, &m, &geo, GaugeSpec::vector(GaugeKind::Material), fr).unwrap();
    assert_eq!(mat.max_abs(), 0.0);
    let zero = m.scale(0.0);
    for g in GaugeSpec::all(1) {
        assert_eq!(gauge_stress(&q, &zero, &geo, g, fr).unwrap().max_abs(), 0.0);
    }
    let j = gauge_stress(&q, &m, &geo, GaugeSpec::vector(GaugeKind::Jaumann), fr).unwrap();
    let u = gauge_stress(&q, &m, &geo, GaugeSpec::vector(GaugeKind::Upper), fr).unwrap();
    let l = gauge_stress(&q, &m, &geo, GaugeSpec::vector(GaugeKind::Lower), fr).unwrap();
    assert!(j.add(&u.add(&l).unwrap().scale(-0.5)).unwrap().max_abs() < 1e-14);

    let q2 = fourier_tangent_tensor(&geo, 1, 2, 1.0);
    let m2 = fourier_tangent_tensor(&geo, 2, 2, 1.0);
    assert!(matches!(
        gauge_stress(&q2, &m2, &geo, GaugeSpec::tensor(GaugeKind::UU), StressConvention::ContravariantProxy),
        Err(Error::UnsupportedConvention(_))
    ));
    assert!(matches!(
        gauge_stress(&q, &m2, &geo, GaugeSpec::vector(GaugeKind::Upper), fr),
        Err(Error::RankMismatch { .. })
    ));
    // both rank-2 Jaumann forms agree
    let qa = geo.tensor_to_ambient(&q2).unwrap();
    let ma = geo.tensor_to_ambient(&m2).unwrap();
    let uu = gauge_stress_ambient_mat(&qa, &ma, GaugeKind::UU);
    let ul = gauge_stress_ambient_mat(&qa, &ma, GaugeKind::UL);
    for k in 0..geo.len() {
        let a = 0.5 * (uu[k] - uu[k].transpose());
        let b = 0.5 * (ul[k] - ul[k].transpose());
        assert!((a - b).norm() < 1e-13);
    }
}

#[test]
fn phi_minus_psi_examples() {
    let geo = build_geometry(&graph_patch(16)).unwrap();
    let w = fourier_ambient(geo.grid(), 3, 2, 0.5);
    let p = decompose_deformation(&w, &geo);
    let v = GaugeSpec::vector;
    for rank in [1, 2] {
        for g in GaugeSpec::all(rank) {
            let (a, b) = phi_minus_psi(g, g, &p).unwrap();
            assert_eq!(max_m(&a) + max_m(&b), 0.0);
        }
    }
    let (f, _) = phi_minus_psi(v(GaugeKind::Upper), v(GaugeKind::Jaumann), &p).unwrap();
    assert!(f.iter().zip(&p.s).all(|(a, s)| (a + s).norm() < 1e-14));
    let (f, _) = phi_minus_psi(v(GaugeKind::Jaumann), v(GaugeKind::Material), &p).unwrap();
    assert!(f.iter().zip(&p.a).all(|(a, s)| (a + s).norm() < 1e-14));
    assert!(phi_minus_psi(v(GaugeKind::Upper), GaugeSpec::tensor(GaugeKind::UU), &p).is_err());
}

#[test]
fn gauge_names_parse() {
    assert_eq!(
        GaugeSpec::parse(1, "upper_convected").unwrap(),
        GaugeSpec::vector(GaugeKind::Upper)
    );
    assert_eq!(GaugeSpec::parse(2, "UL").unwrap().kind, GaugeKind::UL);
    assert!(GaugeSpec::parse(1, "ul").is_err());
    let err = GaugeSpec::parse(1, "sideways").unwrap_err().to_string();
    assert!(err.contains("material") && err.contains("jaumann"), "{err}");
}
