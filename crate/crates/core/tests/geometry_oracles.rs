use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use surfgauge::calculus::*;
use surfgauge::random::*;
use surfgauge::*;

type V3 = Vector3<f64>;

fn graph_geo(n: usize) -> GeometryCache {
    let grid = ParameterGrid::periodic(n, n, 1.0, 1.0).unwrap();
    build_geometry(&SurfacePatch::graph(&grid, 0.3)).unwrap()
}

fn sphere_geo(nt: usize, np: usize) -> GeometryCache {
    sphere_geo_margin(nt, np, 0.3, 6)
}

fn sphere_geo_margin(nt: usize, np: usize, margin: f64, order: usize) -> GeometryCache {
    let grid = SurfacePatch::sphere_grid(nt, np, margin)
        .unwrap()
        .with_fd_order(order)
        .unwrap();
    build_geometry(&SurfacePatch::sphere(&grid)).unwrap()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

#[test]
fn flat_patch_is_trivial() {
    let grid = ParameterGrid::periodic(8, 8, 1.0, 1.0).unwrap();
    let geo = build_geometry(&SurfacePatch::flat(&grid)).unwrap();
    for k in 0..geo.len() {
        assert!((geo.g[k] - nalgebra::Matrix2::identity()).abs().max() < 1e-15);
        assert!(geo.ii[k].abs().max() < 1e-15);
        assert!(geo.gamma2[k].iter().flatten().flatten().all(|v| v.abs() < 1e-15));
        assert_eq!(geo.mean_curvature[k], 0.0);
        assert_eq!(geo.gauss_curvature[k], 0.0);
        assert!((geo.nu[k] - V3::z()).norm() < 1e-15);
    }
}

#[test]
fn unit_sphere_curvatures() {
    let geo = sphere_geo(16, 16);
    for k in 0..geo.len() {
        assert!((geo.ii[k] + geo.g[k]).abs().max() < 1e-14);
        assert!((geo.mean_curvature[k] + 2.0).abs() < 1e-13);
        assert!((geo.gauss_curvature[k] - 1.0).abs() < 1e-13);
        assert!((geo.nu[k] - geo.x[k]).norm() < 1e-14, "normal points outward");
        let e = geo.e[k];
        assert!((e[(0, 1)] - geo.sqrtdetg[k]).abs() < 1e-15 && (e[(1, 0)] + geo.sqrtdetg[k]).abs() < 1e-15);
    }
}

/// Mean curvature of a graph from finite differences of the height function.
fn graph_mean_curvature(z: impl Fn(f64, f64) -> f64, a: f64, b: f64) -> f64 {
    let d = 1e-4;
    let zx = (z(a + d, b) - z(a - d, b)) / (2.0 * d);
    let zy = (z(a, b + d) - z(a, b - d)) / (2.0 * d);
    let zxx = (z(a + d, b) - 2.0 * z(a, b) + z(a - d, b)) / (d * d);
    let zyy = (z(a, b + d) - 2.0 * z(a, b) + z(a, b - d)) / (d * d);
    let zxy = (z(a + d, b + d) - z(a + d, b - d) - z(a - d, b + d) + z(a - d, b - d)) / (4.0 * d * d);
    let w2 = 1.0 + zx * zx + zy * zy;
    ((1.0 + zy * zy) * zxx - 2.0 * zx * zy * zxy + (1.0 + zx * zx) * zyy) / w2.powf(1.5)
}

#[test]
fn graph_mean_curvature_matches_graph_formula() {
    let geo = graph_geo(32);
    let z = |a: f64, b: f64| 0.3 * (2.0 * PI * a).sin() * (2.0 * PI * b).cos();
    let oracle: Vec<f64> = (0..geo.len())
        .map(|k| {
            let (a, b) = geo.grid().coords(k);
            graph_mean_curvature(z, a, b)
        })
        .collect();
    let rel = max_diff(&geo.mean_curvature, &oracle) / max_abs(&oracle);
    assert!(rel < 1e-6, "rel err {rel:e}");
}

#[test]
fn metric_inverse_and_christoffel_identity() {
    let geo = graph_geo(32);
    for k in 0..geo.len() {
        assert!((geo.g[k] * geo.ginv[k] - nalgebra::Matrix2::identity()).abs().max() < 1e-12);
    }
    // ∂_k g_ij = Γ_kij + Γ_kji
    for i in 0..2 {
        for j in 0..2 {
            let gij: Vec<f64> = geo.g.iter().map(|m| m[(i, j)]).collect();
            for kk in 0..2 {
                let d = geo.ops.d(&gij, kk);
                let rhs: Vec<f64> = geo
                    .gamma1
                    .iter()
                    .map(|c| c[kk][i][j] + c[kk][j][i])
                    .collect();
                assert!(max_diff(&d, &rhs) / max_abs(&rhs).max(1.0) < 1e-9);
            }
        }
    }
}

#[test]
fn second_fundamental_form_two_ways() {
    let geo = graph_geo(96);
    let dnu = [geo.ops.d_vec3(&geo.nu, 0), geo.ops.d_vec3(&geo.nu, 1)];
    let mut err = 0.0f64;
    for k in 0..geo.len() {
        for i in 0..2 {
            for j in 0..2 {
                err = err.max((geo.ii[k][(i, j)] + geo.dx[i][k].dot(&dnu[j][k])).abs());
            }
        }
    }
    assert!(err < 1e-8, "{err:e}");
}

#[test]
fn raising_then_lowering_round_trips() {
    let geo = graph_geo(16);
    let t = fourier_tangent_tensor(&geo, 3, 2, 1.0);
    let mixed = geo
        .change_variance(&t, &[Variance::Co, Variance::Contra])
        .unwrap();
    let back = geo.to_contra(&mixed);
    for (a, b) in back.comps.iter().zip(&t.comps) {
        assert!(max_diff(a, b) < 1e-12);
    }
}

#[test]
fn degenerate_metric_is_rejected() {
    let grid = ParameterGrid::periodic(6, 6, 1.0, 1.0).unwrap();
    let p = SurfacePatch::analytic(&grid, |a, b| {
        (
            V3::new(a + b, 0.0, 0.0),
            [V3::x(), V3::x()],
            [[V3::zeros(); 2]; 2],
        )
    });
    assert!(matches!(build_geometry(&p), Err(Error::DegenerateMetric { .. })));
}

#[test]
fn sampled_patch_matches_analytic() {
    let grid = ParameterGrid::periodic(32, 32, 1.0, 1.0).unwrap();
    let ana = SurfacePatch::graph(&grid, 0.3);
    let smp = SurfacePatch::sampled(&grid, ana.x.clone(), [V3::x(), V3::y()]).unwrap();
    let ga = build_geometry(&ana).unwrap();
    let gs = build_geometry(&smp).unwrap();
    assert!(max_diff(&ga.mean_curvature, &gs.mean_curvature) < 1e-8);
    for k in 0..ga.len() {
        assert!((gs.g[k] * gs.ginv[k] - nalgebra::Matrix2::identity()).abs().max() < 1e-8);
    }
}

#[test]
fn projection_examples() {
    let geo = sphere_geo(12, 16);
    let p = project_tangent(AmbientInput::Vector(&geo.nu), &geo, 1).unwrap();
    assert!(p.max_abs() < 1e-14);
    let w = fourier_ambient(geo.grid(), 7, 2, 1.0);
    let t = project_tangent(AmbientInput::Vector(&w), &geo, 1).unwrap();
    let amb = geo.vector_to_ambient(&t).unwrap();
    for k in 0..geo.len() {
        assert!(amb[k].dot(&geo.nu[k]).abs() < 1e-12);
    }
    let t2 = project_tangent(AmbientInput::Vector(&amb), &geo, 1).unwrap();
    for (a, b) in t2.comps.iter().zip(&t.comps) {
        assert!(max_diff(a, b) < 1e-12, "idempotent");
    }
    let m = fourier_ambient_tensor(geo.grid(), 8, 2, 1.0);
    let tm = project_tangent(AmbientInput::Tensor(&m), &geo, 2).unwrap();
    let am = geo.tensor_to_ambient(&tm).unwrap();
    for k in 0..geo.len() {
        assert!((am[k] * geo.nu[k]).norm() < 1e-12);
        assert!((am[k].transpose() * geo.nu[k]).norm() < 1e-12);
    }
    assert!(matches!(
        project_tangent(AmbientInput::Tensor(&m), &geo, 1),
        Err(Error::RankMismatch { .. })
    ));
}

#[test]
fn covariant_derivative_flat_rotation() {
    let grid = ParameterGrid::closed(6, 6, [-1.0, -1.0], [1.0, 1.0]).unwrap();
    let geo = build_geometry(&SurfacePatch::flat(&grid)).unwrap();
    let q = TangentField::vector(
        Variance::Contra,
        grid.sample(|_, b| -b),
        grid.sample(|a, _| a),
    );
    let d = covariant_derivative(&q, &geo).unwrap();
    let expect = [0.0, -1.0, 1.0, 0.0];
    for (c, e) in d.comps.iter().zip(expect) {
        assert!(c.iter().all(|v| (v - e).abs() < 1e-12));
    }
    let rot = curl(&q, &geo).unwrap();
    assert!(rot.iter().all(|v| (v - 2.0).abs() < 1e-12));
    let s = TangentField::scalar(vec![3.5; geo.len()]);
    assert!(covariant_derivative(&s, &geo).unwrap().max_abs() < 1e-12);
}

#[test]
fn covariant_derivative_sphere_symbolic_expansion() {
    let geo = sphere_geo_margin(96, 32, 0.5, 8);
    let c = V3::new(0.3, -0.7, 0.5);
    let q = geo.vector_from_ambient(&vec![c; geo.len()], Variance::Contra);
    let d = covariant_derivative(&q, &geo).unwrap();
    let mut err = 0.0f64;
    let mut scale = 0.0f64;
    for k in 0..geo.len() {
        let (t, p) = geo.grid().coords(k);
        let (st, ct) = t.sin_cos();
        let (sp, cp) = p.sin_cos();
        let x = V3::new(st * cp, st * sp, ct);
        let xt = V3::new(ct * cp, ct * sp, -st);
        let xp = V3::new(-st * sp, st * cp, 0.0);
        let xtp = V3::new(-ct * sp, ct * cp, 0.0);
        let xpp = V3::new(-st * cp, -st * sp, 0.0);
        let qt = c.dot(&xt);
        let qp = c.dot(&xp) / (st * st);
        // partial derivatives of the proxies
        let dqt = [-c.dot(&x), c.dot(&xtp)];
        let dqp = [
            c.dot(&xtp) / (st * st) - 2.0 * ct / (st * st * st) * c.dot(&xp),
            c.dot(&xpp) / (st * st),
        ];
        // Γ^θ_φφ = −sinθ cosθ, Γ^φ_θφ = Γ^φ_φθ = cotθ
        let expansion = [
            dqt[0],
            dqt[1] - st * ct * qp,
            dqp[0] + ct / st * qp,
            dqp[1] + ct / st * qt,
        ];
        // closed form: ∇(P c) = −<c, ν> Id on the unit sphere
        let closed = [-c.dot(&x), 0.0, 0.0, -c.dot(&x)];
        for i in 0..4 {
            err = err.max((d.comps[i][k] - expansion[i]).abs());
            assert!((expansion[i] - closed[i]).abs() < 1e-12);
            scale = scale.max(expansion[i].abs());
        }
    }
    assert!(err / scale < 1e-6, "rel err {:e}", err / scale);
}

#[test]
fn divergence_modes_flat_and_sphere() {
    let grid = ParameterGrid::periodic(8, 8, 1.0, 1.0).unwrap();
    let flat = build_geometry(&SurfacePatch::flat(&grid)).unwrap();
    let id = flat.metric_field();
    let zero_eta = TangentField::zeros(vec![Variance::Contra], flat.len());
    assert!(divergence(&id, &flat).unwrap().max_abs() < 1e-12);
    assert!(divergence_tangential(&id, &flat).unwrap().iter().all(|v| v.norm() < 1e-12));
    assert!(divergence_surface(&id, &zero_eta, &flat).unwrap().iter().all(|v| v.norm() < 1e-12));

    let geo = sphere_geo(32, 32);
    let id = geo.metric_field();
    let dt = divergence_tangential(&id, &geo).unwrap();
    for k in 0..geo.len() {
        assert!((dt[k] + 2.0 * geo.nu[k]).norm() < 1e-8);
    }
}

#[test]
fn surface_divergence_decomposition_on_graph() {
    let geo = graph_geo(96);
    let sigma = fourier_tangent_tensor(&geo, 11, 2, 1.0);
    let eta = fourier_tangent_vector(&geo, 12, 2, 1.0);
    let lhs = divergence_surface(&sigma, &eta, &geo).unwrap();

    // independent route: ambient derivatives of σ + ν ⊗ η contracted with the dual frame
    let sa = geo.tensor_to_ambient(&sigma).unwrap();
    let ea = geo.vector_to_ambient(&eta).unwrap();
    let full: Vec<Matrix3<f64>> = (0..geo.len())
        .map(|k| sa[k] + geo.nu[k] * ea[k].transpose())
        .collect();
    let d: Vec<Vec<Matrix3<f64>>> = (0..2)
        .map(|ax| {
            let comps: Vec<Vec<f64>> = (0..9)
                .map(|c| geo.ops.d(&full.iter().map(|m| m[(c / 3, c % 3)]).collect::<Vec<_>>(), ax))
                .collect();
            (0..geo.len())
                .map(|k| Matrix3::from_fn(|r, s| comps[3 * r + s][k]))
                .collect()
        })
        .collect();
    let mut err = 0.0f64;
    let mut scale = 0.0f64;
    for k in 0..geo.len() {
        let rhs: V3 = (0..2).map(|i| d[i][k] * geo.dual[i][k]).sum();
        err = err.max((lhs[k] - rhs).norm());
        scale = scale.max(rhs.norm());
    }
    assert!(err / scale < 1e-8, "rel err {:e}", err / scale);

    // tangential mode equals surface mode for η = 0
    let zero = TangentField::zeros(vec![Variance::Contra], geo.len());
    let a = divergence_tangential(&sigma, &geo).unwrap();
    let b = divergence_surface(&sigma, &zero, &geo).unwrap();
    assert!(a.iter().zip(&b).all(|(x, y)| (x - y).norm() < 1e-12));
}

#[test]
fn curl_identities() {
    let grid = ParameterGrid::periodic(24, 24, 1.0, 1.0).unwrap();
    let flat = build_geometry(&SurfacePatch::flat(&grid)).unwrap();
    let f = fourier_scalar(&grid, 5, 3, 1.0);
    let [f1, f2] = flat.ops.grad(&f);
    let gradf = TangentField::vector(Variance::Co, f1, f2);
    assert!(max_abs(&curl(&gradf, &flat).unwrap()) < 1e-10);

    let geo = sphere_geo(24, 24);
    let q = geo.to_co(&fourier_tangent_vector(&geo, 9, 2, 1.0));
    let rot = curl(&q, &geo).unwrap();
    let d21 = geo.ops.d(&q.comps[1], 0);
    let d12 = geo.ops.d(&q.comps[0], 1);
    let coord: Vec<f64> = (0..geo.len())
        .map(|k| (d21[k] - d12[k]) / geo.sqrtdetg[k])
        .collect();
    assert!(max_diff(&rot, &coord) / max_abs(&coord) < 1e-6);

    // antisymmetric part of ∇q equals −(rot q / 2) E
    let dq = covariant_derivative(&q, &geo).unwrap();
    for k in 0..geo.len() {
        let anti = 0.5 * (dq.comps[1][k] - dq.comps[2][k]);
        let e12 = geo.e[k][(0, 1)];
        assert!((anti + 0.5 * rot[k] * e12).abs() < 1e-10);
    }
}

#[test]
fn bochner_laplacian_examples() {
    let grid = ParameterGrid::periodic(32, 32, 1.0, 1.0).unwrap();
    let flat = build_geometry(&SurfacePatch::flat(&grid)).unwrap();
    let c = TangentField::vector(Variance::Contra, vec![0.4; grid.len()], vec![-1.0; grid.len()]);
    assert!(bochner_laplacian(&c, &flat).unwrap().max_abs() < 1e-12);
    let q = TangentField::vector(
        Variance::Contra,
        grid.sample(|_, b| (2.0 * PI * b).sin()),
        vec![0.0; grid.len()],
    );
    let lq = bochner_laplacian(&q, &flat).unwrap();
    for k in 0..grid.len() {
        let (_, b) = grid.coords(k);
        assert!((lq.comps[0][k] + 4.0 * PI * PI * (2.0 * PI * b).sin()).abs() < 1e-9);
        assert!(lq.comps[1][k].abs() < 1e-12);
    }
}

#[test]
fn l2_adjointness_on_graph() {
    let geo = graph_geo(48);
    let q = fourier_tangent_vector(&geo, 1, 3, 1.0);
    let r = fourier_tangent_vector(&geo, 2, 3, 1.0);
    let gq = covariant_derivative(&q, &geo).unwrap();
    let gr = covariant_derivative(&r, &geo).unwrap();
    let lq = bochner_laplacian(&q, &geo).unwrap();
    let lhs = l2_inner(FieldRef::Tangent(&gq), FieldRef::Tangent(&gr), &geo).unwrap();
    let rhs = -l2_inner(FieldRef::Tangent(&lq), FieldRef::Tangent(&r), &geo).unwrap();
    assert!((lhs - rhs).abs() / lhs.abs() < 1e-6, "{lhs} vs {rhs}");

    // <∇q, s> = −<q, div s>
    let s = fourier_tangent_tensor(&geo, 3, 3, 1.0);
    let a = l2_inner(FieldRef::Tangent(&gq), FieldRef::Tangent(&s), &geo).unwrap();
    let ds = divergence(&s, &geo).unwrap();
    let b = -l2_inner(FieldRef::Tangent(&q), FieldRef::Tangent(&ds), &geo).unwrap();
    assert!((a - b).abs() / a.abs() < 1e-6, "{a} vs {b}");
}

#[test]
fn l2_inner_examples() {
    let grid = ParameterGrid::periodic(8, 8, 1.0, 1.0).unwrap();
    let flat = build_geometry(&SurfacePatch::flat(&grid)).unwrap();
    let q = TangentField::vector(Variance::Contra, vec![1.0; 64], vec![0.0; 64]);
    let n = l2_inner(FieldRef::Tangent(&q), FieldRef::Tangent(&q), &flat).unwrap();
    assert!((n - 1.0).abs() < 1e-14);

    let geo = graph_geo(24);
    let a = fourier_tangent_vector(&geo, 4, 2, 1.0);
    let amb = geo.vector_to_ambient(&a).unwrap();
    let t = l2_inner(FieldRef::Tangent(&a), FieldRef::Tangent(&a), &geo).unwrap();
    let m = l2_inner(FieldRef::Ambient(&amb), FieldRef::Ambient(&amb), &geo).unwrap();
    let mixed = l2_inner(FieldRef::Tangent(&a), FieldRef::Ambient(&amb), &geo).unwrap();
    assert!(t > 0.0);
    assert!((t - m).abs() < 1e-12 * t && (t - mixed).abs() < 1e-12 * t);
    let s = TangentField::scalar(vec![1.0; geo.len()]);
    assert!(matches!(
        l2_inner(FieldRef::Tangent(&s), FieldRef::Tangent(&a), &geo),
        Err(Error::RankMismatch { .. })
    ));
}
