//! Finite-difference oracles for deformation derivatives, variations and the
//! closed-form identities used by the flow.

use serde::{Deserialize, Serialize};

use crate::calculus::{bochner_laplacian, covariant_derivative, divergence, grad_vec};
use crate::deformation::{
    apply_psi_vec, decompose_deformation, geometric_deformation, phi_minus_psi,
    tensor_deformation, vector_deformation, DeformationParts, GaugeKind, GaugeSpec,
    GeomDeformation, GeomQuantity,
};
use crate::error::Result;
use crate::field::{TangentField, Variance};
use crate::frank_oseen::{
    density_ambient, energy_ambient, molecular_field_ambient, shape_force, FOParams,
};
use crate::geometry::{build_geometry, GeometryCache, M3, V3};
use crate::patch::SurfacePatch;
use crate::random::fourier_ambient;

pub const DEFAULT_EPS: f64 = 1e-4;
pub const MIN_ORDER: f64 = 1.9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub name: String,
    pub epsilons: Vec<f64>,
    /// Observed order in ε; `None` when both errors sit at round-off level or
    /// the check is not a difference quotient.
    pub order: Option<f64>,
    pub max_rel_err: f64,
    pub tol: f64,
    pub passed: bool,
}

impl OracleReport {
    /// Report for a two-point sweep with relative errors at ε and ε/2.
    /// Errors below `floor` are treated as exact.
    pub fn sweep(name: impl Into<String>, eps: f64, errs: [f64; 2], tol: f64, floor: f64) -> Self {
        let exact = errs[0] <= floor && errs[1] <= floor;
        let order = if exact {
            None
        } else {
            Some((errs[0] / errs[1]).log2())
        };
        let order_ok = order.map_or(true, |p| p >= MIN_ORDER) || errs[0] <= floor;
        OracleReport {
            name: name.into(),
            epsilons: vec![eps, eps / 2.0],
            order,
            max_rel_err: errs[0].max(errs[1]),
            tol,
            passed: order_ok && errs[0] < tol && errs[1] < tol,
        }
    }

    /// Report for an identity checked without ε.
    pub fn identity(name: impl Into<String>, rel_err: f64, tol: f64) -> Self {
        OracleReport {
            name: name.into(),
            epsilons: vec![],
            order: None,
            max_rel_err: rel_err,
            tol,
            passed: rel_err < tol,
        }
    }
}

impl std::fmt::Display for OracleReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let order = self
            .order
            .map_or("exact".to_string(), |p| format!("{p:.2}"));
        write!(
            f,
            "{} {} rel_err={:.3e} tol={:.0e} order={}",
            if self.passed { "ok  " } else { "FAIL" },
            self.name,
            self.max_rel_err,
            self.tol,
            order
        )
    }
}

/// Round-off floor for relative errors of difference quotients at ε = 1e-4.
const FLOOR: f64 = 1e-10;
/// Difference quotients of integrated energies cancel more digits.
const SCALAR_FLOOR: f64 = 1e-9;

pub(crate) fn max_norm_v(v: &[V3]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.norm()))
}

pub(crate) fn max_norm_m(v: &[M3]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.norm()))
}

fn max_diff_v(a: &[V3], b: &[V3]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

fn max_diff_m(a: &[M3], b: &[M3]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

fn max_diff_s(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Undeformed geometry plus the geometries of X ± εW and X ± εW/2.
pub struct FdContext {
    pub patch: SurfacePatch,
    pub w: Vec<V3>,
    pub eps: f64,
    pub geo: GeometryCache,
    pub parts: DeformationParts,
    /// `[sweep][sign]`: sweep 0 is ε, sweep 1 is ε/2; sign 0 is +, 1 is −.
    pub deformed: [[GeometryCache; 2]; 2],
}

impl FdContext {
    pub fn new(patch: &SurfacePatch, w: &[V3], eps: f64) -> Result<Self> {
        let geo = build_geometry(patch)?;
        let parts = decompose_deformation(w, &geo);
        let build = |e: f64| build_geometry(&patch.displaced(w, e));
        Ok(FdContext {
            patch: patch.clone(),
            w: w.to_vec(),
            eps,
            parts,
            deformed: [
                [build(eps)?, build(-eps)?],
                [build(eps / 2.0)?, build(-eps / 2.0)?],
            ],
            geo,
        })
    }

    pub fn step(&self, sweep: usize) -> f64 {
        self.eps / (1 << sweep) as f64
    }

    /// Runs `f` on (geo+, geo−, h) for both sweeps and returns the two errors.
    fn sweep<F: Fn(&GeometryCache, &GeometryCache, f64) -> f64>(&self, f: F) -> [f64; 2] {
        [0, 1].map(|s| f(&self.deformed[s][0], &self.deformed[s][1], self.step(s)))
    }
}

fn frozen_vec(q: &[V3], from: &GeometryCache, to: &GeometryCache, v: Variance) -> Vec<V3> {
    to.vector_to_ambient(&from.vector_from_ambient(q, v))
        .expect("rank 1")
}

fn frozen_mat(q: &[M3], from: &GeometryCache, to: &GeometryCache, v: [Variance; 2]) -> Vec<M3> {
    to.tensor_to_ambient(&from.tensor_from_ambient(q, v))
        .expect("rank 2")
}

fn avg_v(a: Vec<V3>, b: Vec<V3>) -> Vec<V3> {
    a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect()
}

fn avg_m(a: Vec<M3>, b: Vec<M3>) -> Vec<M3> {
    a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect()
}

fn variance_pair(kind: GaugeKind) -> [Variance; 2] {
    use Variance::*;
    match kind {
        GaugeKind::UU | GaugeKind::Upper => [Contra, Contra],
        GaugeKind::LL | GaugeKind::Lower => [Co, Co],
        GaugeKind::UL => [Contra, Co],
        GaugeKind::LU => [Co, Contra],
        _ => unreachable!("no frozen proxy for {kind:?}"),
    }
}

/// Ambient q on `to` obtained from ambient q on `from` by the gauge's rule:
/// material projects Cartesian components, convected gauges freeze a proxy,
/// Jaumann averages upper and lower (linear order).
pub fn push_vector(q: &[V3], from: &GeometryCache, to: &GeometryCache, gauge: GaugeSpec) -> Vec<V3> {
    match gauge.kind {
        GaugeKind::Material => to.project_vec(q),
        GaugeKind::Upper => frozen_vec(q, from, to, Variance::Contra),
        GaugeKind::Lower => frozen_vec(q, from, to, Variance::Co),
        GaugeKind::Jaumann => avg_v(
            frozen_vec(q, from, to, Variance::Contra),
            frozen_vec(q, from, to, Variance::Co),
        ),
        k => unreachable!("{k:?} is not a vector gauge"),
    }
}

pub fn push_tensor(q: &[M3], from: &GeometryCache, to: &GeometryCache, gauge: GaugeSpec) -> Vec<M3> {
    match gauge.kind {
        GaugeKind::Material => to.project_mat(q),
        GaugeKind::Jaumann => avg_m(
            frozen_mat(q, from, to, variance_pair(GaugeKind::UU)),
            frozen_mat(q, from, to, variance_pair(GaugeKind::LL)),
        ),
        k => frozen_mat(q, from, to, variance_pair(k)),
    }
}

/// Central difference of the derivative's proxy, expanded in the frame of
/// `geo`.
pub fn proxy_derivative_vec(
    geo: &GeometryCache,
    plus: (&GeometryCache, &[V3]),
    minus: (&GeometryCache, &[V3]),
    h: f64,
    derivative: GaugeSpec,
) -> Vec<V3> {
    let diff = |v: Variance| -> Vec<V3> {
        let p = plus.0.vector_from_ambient(plus.1, v);
        let m = minus.0.vector_from_ambient(minus.1, v);
        let d = p.add(&m.scale(-1.0)).expect("same shape").scale(0.5 / h);
        geo.vector_to_ambient(&d).expect("rank 1")
    };
    match derivative.kind {
        GaugeKind::Material => geo.project_vec(
            &plus
                .1
                .iter()
                .zip(minus.1)
                .map(|(a, b)| (a - b) * (0.5 / h))
                .collect::<Vec<_>>(),
        ),
        GaugeKind::Upper => diff(Variance::Contra),
        GaugeKind::Lower => diff(Variance::Co),
        GaugeKind::Jaumann => avg_v(diff(Variance::Contra), diff(Variance::Co)),
        k => unreachable!("{k:?} is not a vector derivative"),
    }
}

pub fn proxy_derivative_mat(
    geo: &GeometryCache,
    plus: (&GeometryCache, &[M3]),
    minus: (&GeometryCache, &[M3]),
    h: f64,
    derivative: GaugeSpec,
) -> Vec<M3> {
    let diff = |v: [Variance; 2]| -> Vec<M3> {
        let p = plus.0.tensor_from_ambient(plus.1, v);
        let m = minus.0.tensor_from_ambient(minus.1, v);
        let d = p.add(&m.scale(-1.0)).expect("same shape").scale(0.5 / h);
        geo.tensor_to_ambient(&d).expect("rank 2")
    };
    match derivative.kind {
        GaugeKind::Material => geo.project_mat(
            &plus
                .1
                .iter()
                .zip(minus.1)
                .map(|(a, b)| (a - b) * (0.5 / h))
                .collect::<Vec<_>>(),
        ),
        GaugeKind::Jaumann => avg_m(
            diff(variance_pair(GaugeKind::UU)),
            diff(variance_pair(GaugeKind::LL)),
        ),
        k => diff(variance_pair(k)),
    }
}

/// One rank-1 (gauge, derivative) cell against the pushforward oracle.
pub fn check_vector_cell(
    ctx: &FdContext,
    q: &TangentField,
    gauge: GaugeSpec,
    derivative: GaugeSpec,
    tol: f64,
) -> Result<OracleReport> {
    let geo = &ctx.geo;
    let qa = geo.vector_to_ambient(q)?;
    let exact = geo.vector_to_ambient(&vector_deformation(q, geo, &ctx.parts, gauge, derivative)?)?;
    let scale = max_norm_v(&exact).max(max_norm_v(&qa) * max_norm_m(&ctx.parts.g));
    let errs = ctx.sweep(|gp, gm, h| {
        let qp = push_vector(&qa, geo, gp, gauge);
        let qm = push_vector(&qa, geo, gm, gauge);
        let fd = proxy_derivative_vec(geo, (gp, &qp), (gm, &qm), h, derivative);
        max_diff_v(&fd, &exact) / scale
    });
    Ok(OracleReport::sweep(
        format!("vector_cell derivative={derivative} gauge={gauge}"),
        ctx.eps,
        errs,
        tol,
        FLOOR,
    ))
}

/// One rank-2 cell against the pushforward oracle.
pub fn check_tensor_cell(
    ctx: &FdContext,
    q: &TangentField,
    gauge: GaugeSpec,
    derivative: GaugeSpec,
    tol: f64,
) -> Result<OracleReport> {
    let geo = &ctx.geo;
    let qa = geo.tensor_to_ambient(q)?;
    let exact = geo.tensor_to_ambient(&tensor_deformation(q, geo, &ctx.parts, gauge, derivative)?)?;
    let scale = max_norm_m(&exact).max(max_norm_m(&qa) * max_norm_m(&ctx.parts.g));
    let errs = ctx.sweep(|gp, gm, h| {
        let qp = push_tensor(&qa, geo, gp, gauge);
        let qm = push_tensor(&qa, geo, gm, gauge);
        let fd = proxy_derivative_mat(geo, (gp, &qp), (gm, &qm), h, derivative);
        max_diff_m(&fd, &exact) / scale
    });
    Ok(OracleReport::sweep(
        format!("tensor derivative={derivative} gauge={gauge}"),
        ctx.eps,
        errs,
        tol,
        FLOOR,
    ))
}

/// All 16 rank-1 cells plus the algebra (Φ_D − Ψ_Γ) q = −cell(D, Γ).
pub fn check_vector_cells_and_algebra(
    patch: &SurfacePatch,
    q: &TangentField,
    w: &[V3],
) -> Result<Vec<OracleReport>> {
    let ctx = FdContext::new(patch, w, DEFAULT_EPS)?;
    let mut out = Vec::new();
    for gauge in GaugeSpec::all(1) {
        for derivative in GaugeSpec::all(1) {
            out.push(check_vector_cell(&ctx, q, gauge, derivative, 1e-6)?);
        }
    }
    out.extend(check_derivative_algebra(&ctx, q)?);
    Ok(out)
}

pub fn check_derivative_algebra(ctx: &FdContext, q: &TangentField) -> Result<Vec<OracleReport>> {
    let geo = &ctx.geo;
    let qa = geo.vector_to_ambient(q)?;
    let mut out = Vec::new();
    for gauge in GaugeSpec::all(1) {
        for derivative in GaugeSpec::all(1) {
            let (f, _) = phi_minus_psi(gauge, derivative, &ctx.parts)?;
            let cell = geo.vector_to_ambient(&vector_deformation(q, geo, &ctx.parts, gauge, derivative)?)?;
            let lhs: Vec<V3> = f.iter().zip(&qa).map(|(m, v)| m * v).collect();
            let neg: Vec<V3> = cell.iter().map(|v| -v).collect();
            let scale = max_norm_v(&qa) * max_norm_m(&ctx.parts.g);
            out.push(OracleReport::identity(
                format!("derivative_algebra derivative={derivative} gauge={gauge}"),
                max_diff_v(&lhs, &neg) / scale,
                1e-12,
            ));
        }
    }
    Ok(out)
}

/// All 36 rank-2 cells.
pub fn check_tensor_table(patch: &SurfacePatch, q: &TangentField, w: &[V3]) -> Result<Vec<OracleReport>> {
    let ctx = FdContext::new(patch, w, DEFAULT_EPS)?;
    let mut out = Vec::new();
    for gauge in GaugeSpec::all(2) {
        for derivative in GaugeSpec::all(2) {
            out.push(check_tensor_cell(&ctx, q, gauge, derivative, 1e-6)?);
        }
    }
    Ok(out)
}

/// Deformations of geometric quantities against difference
/// quotients of the rebuilt geometry.
pub fn check_geometric_deformations(ctx: &FdContext, tol: f64) -> Vec<OracleReport> {
    use GeomQuantity::*;
    let geo = &ctx.geo;
    let mut out = Vec::new();
    for quantity in [Metric, InverseMetric, Density, Christoffel2, Normal, ShapeOperator] {
        let exact = geometric_deformation(quantity, geo, &ctx.parts);
        let errs = ctx.sweep(|gp, gm, h| {
            let c = 0.5 / h;
            match (&exact, quantity) {
                (GeomDeformation::Tensor(t), Metric | InverseMetric) => {
                    let (a, b) = if quantity == Metric { (&gp.g, &gm.g) } else { (&gp.ginv, &gm.ginv) };
                    let fd: Vec<M3> = (0..geo.len())
                        .map(|k| {
                            let d = (a[k] - b[k]) * c;
                            M3::new(d[(0, 0)], d[(0, 1)], 0.0, d[(1, 0)], d[(1, 1)], 0.0, 0.0, 0.0, 0.0)
                        })
                        .collect();
                    let ex: Vec<M3> = (0..geo.len())
                        .map(|k| {
                            M3::new(
                                t.comps[0][k], t.comps[1][k], 0.0, t.comps[2][k], t.comps[3][k], 0.0, 0.0,
                                0.0, 0.0,
                            )
                        })
                        .collect();
                    max_diff_m(&fd, &ex) / max_norm_m(&ex).max(max_norm_m(&ctx.parts.g))
                }
                (GeomDeformation::Scalar(s), _) => {
                    let fd: Vec<f64> = (0..geo.len())
                        .map(|k| (gp.sqrtdetg[k] - gm.sqrtdetg[k]) * c)
                        .collect();
                    max_diff_s(&fd, s) / s.iter().fold(max_norm_m(&ctx.parts.g), |m, x| m.max(x.abs()))
                }
                (GeomDeformation::Christoffel(ch), _) => {
                    let mut err = 0.0f64;
                    let mut scale = 0.0f64;
                    for k in 0..geo.len() {
                        for i in 0..2 {
                            for j in 0..2 {
                                for l in 0..2 {
                                    let fd = (gp.gamma2[k][i][j][l] - gm.gamma2[k][i][j][l]) * c;
                                    err = err.max((fd - ch[k][i][j][l]).abs());
                                    scale = scale.max(ch[k][i][j][l].abs());
                                }
                            }
                        }
                    }
                    err / scale
                }
                (GeomDeformation::Vector(v), _) => {
                    let fd: Vec<V3> = (0..geo.len()).map(|k| (gp.nu[k] - gm.nu[k]) * c).collect();
                    max_diff_v(&fd, v) / max_norm_v(v)
                }
                (GeomDeformation::AmbientTensor(m), _) => {
                    let sp = gp.shape_operator();
                    let sm = gm.shape_operator();
                    let d: Vec<M3> = (0..geo.len()).map(|k| (sp[k] - sm[k]) * c).collect();
                    let fd = geo.project_mat(&d);
                    max_diff_m(&fd, m) / max_norm_m(m)
                }
                _ => f64::NAN,
            }
        });
        out.push(OracleReport::sweep(
            format!("geometric deformation {quantity:?}"),
            ctx.eps,
            errs,
            tol,
            FLOOR,
        ));
    }
    out
}

/// Central difference (U[X+εW, q+] − U[X−εW, q−]) / 2ε, with q± pushed
/// forward under `gauge`.
pub fn fd_total_variation<F>(
    energy: F,
    patch: &SurfacePatch,
    q: &[V3],
    w: &[V3],
    gauge: GaugeSpec,
    eps: f64,
) -> Result<f64>
where
    F: Fn(&[V3], &GeometryCache) -> f64,
{
    let geo = build_geometry(patch)?;
    let gp = build_geometry(&patch.displaced(w, eps))?;
    let gm = build_geometry(&patch.displaced(w, -eps))?;
    let up = energy(&push_vector(q, &geo, &gp, gauge), &gp);
    let um = energy(&push_vector(q, &geo, &gm, gauge), &gm);
    Ok((up - um) / (2.0 * eps))
}

/// Total FO energy as a functional handle for [`fd_total_variation`].
pub fn fo_energy_functional(p: FOParams) -> impl Fn(&[V3], &GeometryCache) -> f64 {
    move |q, g| energy_ambient(q, g, &p).total
}

fn rel(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale
}

/// ⟨δU/δq, r⟩ against d/dε U[q + εr].
pub fn check_molecular_field(
    geo: &GeometryCache,
    q: &[V3],
    r: &[V3],
    p: &FOParams,
    tol: f64,
) -> OracleReport {
    let m = molecular_field_ambient(q, geo, p);
    let exact = geo.integrate(&m.iter().zip(r).map(|(a, b)| a.dot(b)).collect::<Vec<_>>());
    let u = |e: f64| {
        let qe: Vec<V3> = q.iter().zip(r).map(|(a, b)| a + b * e).collect();
        energy_ambient(&qe, geo, p).total
    };
    let scale = exact.abs().max(energy_ambient(q, geo, p).total);
    let errs = [DEFAULT_EPS, DEFAULT_EPS / 2.0].map(|h| rel((u(h) - u(-h)) / (2.0 * h), exact, scale));
    OracleReport::sweep("molecular field variation", DEFAULT_EPS, errs, tol, SCALAR_FLOOR)
}

/// FD total variation of the FO energy under `gauge` against ⟨−V_full, W⟩.
pub fn check_variation_consistency(
    ctx: &FdContext,
    q: &TangentField,
    p: &FOParams,
    gauge: GaugeSpec,
    tol: f64,
) -> Result<OracleReport> {
    let geo = &ctx.geo;
    let qa = geo.vector_to_ambient(q)?;
    let force = shape_force(q, geo, p, gauge)?;
    let exact = -geo.integrate(
        &force
            .v_full
            .iter()
            .zip(&ctx.w)
            .map(|(a, b)| a.dot(b))
            .collect::<Vec<_>>(),
    );
    let scale = variation_scale(ctx, &qa, p, exact);
    let errs = ctx.sweep(|gp, gm, h| {
        let up = energy_ambient(&push_vector(&qa, geo, gp, gauge), gp, p).total;
        let um = energy_ambient(&push_vector(&qa, geo, gm, gauge), gm, p).total;
        rel((up - um) / (2.0 * h), exact, scale)
    });
    Ok(OracleReport::sweep(
        format!("total variation gauge={gauge}"),
        ctx.eps,
        errs,
        tol,
        SCALAR_FLOOR,
    ))
}

/// Natural size of a first variation: |exact| or U·‖∇W‖.
fn variation_scale(ctx: &FdContext, q: &[V3], p: &FOParams, exact: f64) -> f64 {
    let u = energy_ambient(q, &ctx.geo, p).total;
    exact.abs().max(u * max_norm_m(&ctx.parts.g))
}

/// ⟨δU/δX, W⟩ computed along the syntactic routes of the proxy comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProxyRoutes {
    pub gauge: String,
    /// −⟨V_full, W⟩ from the frame-based strong assembly.
    pub frame: f64,
    /// Partial variation at frozen contravariant proxy plus ⟨m, (Ψ − G)q⟩.
    pub contravariant: f64,
    /// Partial variation at frozen metric plus the metric term ⟨∂Û/∂g, 2S⟩.
    pub metric: f64,
    /// Same as `metric` with the metric term weighted by S instead of 2S.
    pub metric_factor_one: f64,
    /// Difference quotient of the total variation.
    pub fd: f64,
}

pub fn proxy_routes(
    ctx: &FdContext,
    q: &TangentField,
    p: &FOParams,
    gauge: GaugeSpec,
    sweep: usize,
) -> Result<ProxyRoutes> {
    let geo = &ctx.geo;
    let qa = geo.vector_to_ambient(q)?;
    let [gp, gm] = &ctx.deformed[sweep];
    let h = ctx.step(sweep);
    let m = molecular_field_ambient(&qa, geo, p);
    let pair = |v: &[V3]| geo.integrate(&m.iter().zip(v).map(|(a, b)| a.dot(b)).collect::<Vec<_>>());
    let psi_q = apply_psi_vec(gauge, &ctx.parts, &qa);

    let force = shape_force(q, geo, p, gauge)?;
    let frame = -geo.integrate(
        &force
            .v_full
            .iter()
            .zip(&ctx.w)
            .map(|(a, b)| a.dot(b))
            .collect::<Vec<_>>(),
    );

    let up = GaugeSpec::vector(GaugeKind::Upper);
    let partial_contra = (energy_ambient(&push_vector(&qa, geo, gp, up), gp, p).total
        - energy_ambient(&push_vector(&qa, geo, gm, up), gm, p).total)
        / (2.0 * h);
    let gq: Vec<V3> = (0..geo.len())
        .map(|k| psi_q[k] - ctx.parts.g[k] * qa[k])
        .collect();
    let contravariant = partial_contra + pair(&gq);

    // Û(X, g): density evaluated on the deformed surface, measure frozen at
    // the undeformed metric.
    let mat = GaugeSpec::vector(GaugeKind::Material);
    let frozen = |g: &GeometryCache| -> f64 {
        let u = density_ambient(&push_vector(&qa, geo, g, mat), g, p);
        geo.integrate(&u)
    };
    let partial_metric = (frozen(gp) - frozen(gm)) / (2.0 * h);
    let u = density_ambient(&qa, geo, p);
    // ∂Û/∂g_ij = u ½ √g g^ij, so ⟨∂Û/∂g, 2S⟩ = ∫ u Tr S μ
    let metric_term = geo.integrate(
        &u.iter()
            .zip(&ctx.parts.s)
            .map(|(a, s)| a * s.trace())
            .collect::<Vec<_>>(),
    );
    let metric = partial_metric + metric_term + pair(&psi_q);
    let metric_factor_one = partial_metric + 0.5 * metric_term + pair(&psi_q);

    let fd = (energy_ambient(&push_vector(&qa, geo, gp, gauge), gp, p).total
        - energy_ambient(&push_vector(&qa, geo, gm, gauge), gm, p).total)
        / (2.0 * h);

    Ok(ProxyRoutes {
        gauge: gauge.to_string(),
        frame,
        contravariant,
        metric,
        metric_factor_one,
        fd,
    })
}

/// The frame, contravariant-proxy and metric-proxy routes to ⟨δU/δX, W⟩
/// agree with each other and with the difference quotient.
pub fn check_proxy_equivalence_ctx(
    ctx: &FdContext,
    q: &TangentField,
    p: &FOParams,
    gauge: GaugeSpec,
    tol: f64,
) -> Result<OracleReport> {
    let qa = ctx.geo.vector_to_ambient(q)?;
    let mut errs = [0.0; 2];
    for (s, e) in errs.iter_mut().enumerate() {
        let r = proxy_routes(ctx, q, p, gauge, s)?;
        let scale = variation_scale(ctx, &qa, p, r.frame);
        *e = [r.contravariant, r.metric, r.fd]
            .iter()
            .map(|v| rel(*v, r.frame, scale))
            .fold(0.0, f64::max);
    }
    Ok(OracleReport::sweep(
        format!("proxy routes gauge={gauge}"),
        ctx.eps,
        errs,
        tol,
        SCALAR_FLOOR,
    ))
}

pub fn check_proxy_equivalence(
    patch: &SurfacePatch,
    q: &TangentField,
    w: &[V3],
) -> Result<OracleReport> {
    let ctx = FdContext::new(patch, w, DEFAULT_EPS)?;
    check_proxy_equivalence_ctx(
        &ctx,
        q,
        &FOParams::default(),
        GaugeSpec::vector(GaugeKind::Jaumann),
        1e-5,
    )
}

/// (div(q ⊗ ∇q))ᵀ = ∇q ∇qᵀ + Δq ⊗ q nodewise, relative to the largest term.
pub fn grad_q_identity_error(geo: &GeometryCache, q: &TangentField) -> Result<f64> {
    let qc = geo.to_contra(q);
    let dq = geo.to_contra(&covariant_derivative(&qc, geo)?);
    let n = geo.len();
    let mut t = TangentField::zeros(vec![Variance::Contra; 3], n);
    for c in 0..8 {
        let (i, jk) = (c >> 2, c & 3);
        t.comps[c] = (0..n).map(|k| qc.comps[i][k] * dq.comps[jk][k]).collect();
    }
    let lhs: Vec<M3> = geo
        .tensor_to_ambient(&divergence(&t, geo)?)?
        .iter()
        .map(|m| m.transpose())
        .collect();
    let qa = geo.vector_to_ambient(&qc)?;
    let dqa = geo.tensor_to_ambient(&dq)?;
    let lap = geo.vector_to_ambient(&bochner_laplacian(&qc, geo)?)?;
    let rhs: Vec<M3> = (0..n)
        .map(|k| dqa[k] * dqa[k].transpose() + lap[k] * qa[k].transpose())
        .collect();
    let scale = max_norm_m(&rhs).max(max_norm_m(&dqa).powi(2));
    Ok(max_diff_m(&lhs, &rhs) / scale)
}

/// Material deformation of ∇q for an upper-convected q:
/// ∇_q G − IIq ⊗ b + b ⊗ IIq + G∇q − ∇q G, in ambient form.
pub fn material_deformation_of_gradient(
    geo: &GeometryCache,
    parts: &DeformationParts,
    q: &TangentField,
) -> Result<Vec<M3>> {
    let qc = geo.to_contra(q);
    let gm = geo.tensor_from_ambient(&parts.g, [Variance::Contra, Variance::Co]);
    let dg = covariant_derivative(&gm, geo)?;
    let n = geo.len();
    let mut dqg = TangentField::zeros(vec![Variance::Contra, Variance::Co], n);
    for c in 0..4 {
        dqg.comps[c] = (0..n)
            .map(|k| dg.comps[c << 1][k] * qc.comps[0][k] + dg.comps[(c << 1) | 1][k] * qc.comps[1][k])
            .collect();
    }
    let dqg = geo.tensor_to_ambient(&dqg)?;
    let qa = geo.vector_to_ambient(&qc)?;
    let dq = geo.tensor_to_ambient(&covariant_derivative(&qc, geo)?)?;
    let ii = geo.shape_operator();
    Ok((0..n)
        .map(|k| {
            let iiq = ii[k] * qa[k];
            let g = parts.g[k];
            dqg[k] - iiq * parts.b[k].transpose() + parts.b[k] * iiq.transpose() + g * dq[k]
                - dq[k] * g
        })
        .collect())
}

/// The integration-by-parts identity and the material
/// deformation of ∇q under an upper-convected q against the FD oracle.
pub fn check_grad_q_identities_ctx(ctx: &FdContext, q: &TangentField) -> Result<Vec<OracleReport>> {
    let geo = &ctx.geo;
    let ident = grad_q_identity_error(geo, q)?;
    let exact = material_deformation_of_gradient(geo, &ctx.parts, q)?;
    let qa = geo.vector_to_ambient(q)?;
    let up = GaugeSpec::vector(GaugeKind::Upper);
    let scale = max_norm_m(&exact).max(max_norm_m(&geo.tensor_to_ambient(&covariant_derivative(&geo.to_contra(q), geo)?)?) * max_norm_m(&ctx.parts.g));
    let errs = ctx.sweep(|gp, gm, h| {
        let grad = |g: &GeometryCache| grad_vec(&push_vector(&qa, geo, g, up), g);
        let (a, b) = (grad(gp), grad(gm));
        let d: Vec<M3> = a.iter().zip(&b).map(|(x, y)| (x - y) * (0.5 / h)).collect();
        max_diff_m(&geo.project_mat(&d), &exact) / scale
    });
    Ok(vec![
        OracleReport::identity("identities/div(q⊗∇q)", ident, 1e-6),
        OracleReport::sweep("identities/material deformation of ∇q", ctx.eps, errs, 1e-6, FLOOR),
    ])
}

/// Combined report of the ∇q identities; W is a fixed seeded Fourier field.
pub fn check_grad_q_identities(patch: &SurfacePatch, q: &TangentField) -> Result<OracleReport> {
    let w = fourier_ambient(&patch.grid, 29, 2, 0.5);
    let ctx = FdContext::new(patch, &w, DEFAULT_EPS)?;
    let reps = check_grad_q_identities_ctx(&ctx, q)?;
    Ok(OracleReport {
        name: "identities/∇q combined".into(),
        epsilons: reps[1].epsilons.clone(),
        order: reps[1].order,
        max_rel_err: reps[0].max_rel_err.max(reps[1].max_rel_err),
        tol: 1e-6,
        passed: reps.iter().all(|r| r.passed),
    })
}
