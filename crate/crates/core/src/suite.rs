//! Named groups of oracles for the `verify` command and the acceptance run.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::calculus::{bochner_laplacian, covariant_derivative};
use crate::deformation::{GaugeKind, GaugeSpec};
use crate::error::{Error, Result};
use crate::frank_oseen::FOParams;
use crate::geometry::{build_geometry, l2_inner, FieldRef, GeometryCache};
use crate::grid::ParameterGrid;
use crate::patch::SurfacePatch;
use crate::random::{fourier_ambient, fourier_tangent_tensor, fourier_tangent_vector};
use crate::verification::{
    check_grad_q_identities, check_grad_q_identities_ctx, check_geometric_deformations, check_molecular_field,
    check_proxy_equivalence_ctx, check_vector_cells_and_algebra, check_tensor_table,
    check_variation_consistency, proxy_routes, FdContext, OracleReport,
};

/// Amplitude of the graph patch z = a sin(2πy¹) cos(2πy²) used by the suites.
pub const GRAPH_AMPLITUDE: f64 = 0.3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selector {
    Geometry,
    Deformation,
    Energy,
    Appendix,
    All,
}

impl Selector {
    pub const NAMES: [&'static str; 5] = ["geometry", "deformation", "energy", "appendix", "all"];

    pub fn name(self) -> &'static str {
        match self {
            Selector::Geometry => "geometry",
            Selector::Deformation => "deformation",
            Selector::Energy => "energy",
            Selector::Appendix => "appendix",
            Selector::All => "all",
        }
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Selector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "geometry" => Ok(Selector::Geometry),
            "deformation" => Ok(Selector::Deformation),
            "energy" => Ok(Selector::Energy),
            "appendix" => Ok(Selector::Appendix),
            "all" => Ok(Selector::All),
            _ => Err(Error::ValidationError {
                key: "selector".into(),
                message: format!("unknown suite `{s}`; valid: {}", Self::NAMES.join(", ")),
            }),
        }
    }
}

pub fn graph_patch(n: usize) -> Result<SurfacePatch> {
    let grid = ParameterGrid::periodic(n, n, 1.0, 1.0)?;
    Ok(SurfacePatch::graph(&grid, GRAPH_AMPLITUDE))
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Mean curvature of the graph z from difference quotients of the height.
fn graph_mean_curvature(a: f64, b: f64) -> f64 {
    let z = |a: f64, b: f64| GRAPH_AMPLITUDE * (2.0 * PI * a).sin() * (2.0 * PI * b).cos();
    let d = 1e-4;
    let zx = (z(a + d, b) - z(a - d, b)) / (2.0 * d);
    let zy = (z(a, b + d) - z(a, b - d)) / (2.0 * d);
    let zxx = (z(a + d, b) - 2.0 * z(a, b) + z(a - d, b)) / (d * d);
    let zyy = (z(a, b + d) - 2.0 * z(a, b) + z(a, b - d)) / (d * d);
    let zxy = (z(a + d, b + d) - z(a + d, b - d) - z(a - d, b + d) + z(a - d, b - d)) / (4.0 * d * d);
    let w2 = 1.0 + zx * zx + zy * zy;
    ((1.0 + zy * zy) * zxx - 2.0 * zx * zy * zxy + (1.0 + zx * zx) * zyy) / w2.powf(1.5)
}

fn sphere_geo() -> Result<GeometryCache> {
    let grid = SurfacePatch::sphere_grid(16, 16, 0.3)?;
    build_geometry(&SurfacePatch::sphere(&grid))
}

pub fn geometry_reports() -> Result<Vec<OracleReport>> {
    let mut out = Vec::new();

    let flat_grid = ParameterGrid::periodic(8, 8, 1.0, 1.0)?;
    let flat = build_geometry(&SurfacePatch::flat(&flat_grid))?;
    let flat_err = (0..flat.len())
        .map(|k| {
            (flat.g[k] - nalgebra::Matrix2::identity()).abs().max()
                + flat.ii[k].abs().max()
                + flat.mean_curvature[k].abs()
                + flat.gauss_curvature[k].abs()
        })
        .fold(0.0, f64::max);
    out.push(OracleReport::identity("geometry/flat: g=δ, II=0, H=K=0", flat_err, 1e-12));

    let sph = sphere_geo()?;
    let sph_err = (0..sph.len())
        .map(|k| {
            (sph.ii[k] + sph.g[k]).abs().max()
                + (sph.mean_curvature[k] + 2.0).abs()
                + (sph.gauss_curvature[k] - 1.0).abs()
                + (sph.nu[k] - sph.x[k]).norm()
        })
        .fold(0.0, f64::max);
    out.push(OracleReport::identity("geometry/sphere: II=-g, H=-2, K=1, outward ν", sph_err, 1e-12));

    let geo = build_geometry(&graph_patch(32)?)?;
    let oracle: Vec<f64> = (0..geo.len())
        .map(|k| {
            let (a, b) = geo.grid().coords(k);
            graph_mean_curvature(a, b)
        })
        .collect();
    out.push(OracleReport::identity(
        "geometry/graph: H vs graph formula",
        max_diff(&geo.mean_curvature, &oracle) / max_abs(&oracle),
        1e-6,
    ));

    let inv = (0..geo.len())
        .map(|k| (geo.g[k] * geo.ginv[k] - nalgebra::Matrix2::identity()).abs().max())
        .fold(0.0, f64::max);
    out.push(OracleReport::identity("geometry/graph: g·g⁻¹ = Id", inv, 1e-12));

    let mut chr = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            let gij: Vec<f64> = geo.g.iter().map(|m| m[(i, j)]).collect();
            for k in 0..2 {
                let d = geo.ops.d(&gij, k);
                let rhs: Vec<f64> = geo.gamma1.iter().map(|c| c[k][i][j] + c[k][j][i]).collect();
                chr = chr.max(max_diff(&d, &rhs) / max_abs(&rhs).max(1.0));
            }
        }
    }
    out.push(OracleReport::identity("geometry/graph: ∂g = Γ + Γᵀ", chr, 1e-9));

    let fine = build_geometry(&graph_patch(96)?)?;
    let dnu = [fine.ops.d_vec3(&fine.nu, 0), fine.ops.d_vec3(&fine.nu, 1)];
    let mut ii = 0.0f64;
    for k in 0..fine.len() {
        for i in 0..2 {
            for j in 0..2 {
                ii = ii.max((fine.ii[k][(i, j)] + fine.dx[i][k].dot(&dnu[j][k])).abs());
            }
        }
    }
    out.push(OracleReport::identity("geometry/graph: II two ways", ii, 1e-8));

    let geo = build_geometry(&graph_patch(48)?)?;
    let q = fourier_tangent_vector(&geo, 1, 3, 1.0);
    let r = fourier_tangent_vector(&geo, 2, 3, 1.0);
    let gq = covariant_derivative(&q, &geo)?;
    let gr = covariant_derivative(&r, &geo)?;
    let lq = bochner_laplacian(&q, &geo)?;
    let lhs = l2_inner(FieldRef::Tangent(&gq), FieldRef::Tangent(&gr), &geo)?;
    let rhs = -l2_inner(FieldRef::Tangent(&lq), FieldRef::Tangent(&r), &geo)?;
    out.push(OracleReport::identity(
        "geometry/graph: <∇q,∇r> = -<Δq,r>",
        (lhs - rhs).abs() / lhs.abs(),
        1e-6,
    ));
    Ok(out)
}

/// The 16 vector cells with the derivative-difference algebra, and the 36
/// tensor cells.
pub fn vector_table_reports() -> Result<Vec<OracleReport>> {
    let patch = graph_patch(48)?;
    let geo = build_geometry(&patch)?;
    let q = fourier_tangent_vector(&geo, 7, 2, 1.0);
    let w = fourier_ambient(geo.grid(), 11, 2, 0.5);
    check_vector_cells_and_algebra(&patch, &q, &w)
}

pub fn tensor_table_reports() -> Result<Vec<OracleReport>> {
    let patch = graph_patch(48)?;
    let geo = build_geometry(&patch)?;
    let q = fourier_tangent_tensor(&geo, 5, 2, 1.0);
    let w = fourier_ambient(geo.grid(), 13, 2, 0.5);
    check_tensor_table(&patch, &q, &w)
}

pub fn deformation_reports() -> Result<Vec<OracleReport>> {
    let mut out = vector_table_reports()?;
    out.extend(tensor_table_reports()?);
    Ok(out)
}

/// Deformations of g, g⁻¹, μ, Γ, ν and II (A3).
pub fn geometric_deformation_reports() -> Result<Vec<OracleReport>> {
    let patch = graph_patch(96)?;
    let geo = build_geometry(&patch)?;
    let w = fourier_ambient(geo.grid(), 17, 2, 0.5);
    let ctx = FdContext::new(&patch, &w, 1e-4)?;
    Ok(check_geometric_deformations(&ctx, 1e-6))
}

fn fo_params() -> FOParams {
    FOParams::default()
}

/// Molecular field and total-variation consistency under each gauge.
pub fn energy_reports() -> Result<Vec<OracleReport>> {
    let mut out = Vec::new();
    let geo = build_geometry(&graph_patch(128)?)?;
    let q = geo.vector_to_ambient(&fourier_tangent_vector(&geo, 3, 2, 1.0))?;
    let r = geo.vector_to_ambient(&fourier_tangent_vector(&geo, 4, 2, 1.0))?;
    out.push(check_molecular_field(&geo, &q, &r, &fo_params(), 1e-6));

    let patch = graph_patch(96)?;
    let geo = build_geometry(&patch)?;
    let q = fourier_tangent_vector(&geo, 9, 2, 1.0);
    let w = fourier_ambient(geo.grid(), 10, 2, 0.5);
    let ctx = FdContext::new(&patch, &w, 1e-4)?;
    for g in GaugeSpec::all(1) {
        out.push(check_variation_consistency(&ctx, &q, &fo_params(), g, 1e-5)?);
    }
    Ok(out)
}

/// The three routes to the shape variation under each gauge, and the
/// factor-two check on the explicit metric route.
pub fn proxy_route_reports() -> Result<Vec<OracleReport>> {
    let patch = graph_patch(96)?;
    let geo = build_geometry(&patch)?;
    let q = fourier_tangent_vector(&geo, 9, 2, 1.0);
    let w = fourier_ambient(geo.grid(), 10, 2, 0.5);
    let ctx = FdContext::new(&patch, &w, 1e-4)?;
    let mut out = Vec::new();
    for g in GaugeSpec::all(1) {
        out.push(check_proxy_equivalence_ctx(&ctx, &q, &fo_params(), g, 1e-5)?);
    }
    let r = proxy_routes(&ctx, &q, &fo_params(), GaugeSpec::vector(GaugeKind::Material), 0)?;
    let gap = (r.metric_factor_one - r.frame).abs() / r.frame.abs();
    out.push(OracleReport {
        name: "proxy/metric route with unit strain factor differs".into(),
        epsilons: vec![],
        order: None,
        max_rel_err: gap,
        tol: 1e-2,
        passed: gap > 1e-2,
    });
    Ok(out)
}

pub fn grad_q_identity_reports() -> Result<Vec<OracleReport>> {
    let patch = graph_patch(96)?;
    let geo = build_geometry(&patch)?;
    let q = fourier_tangent_vector(&geo, 13, 2, 1.0);
    let w = fourier_ambient(geo.grid(), 14, 2, 0.5);
    let ctx = FdContext::new(&patch, &w, 1e-4)?;
    let mut out = check_grad_q_identities_ctx(&ctx, &q)?;
    out.push(check_grad_q_identities(&patch, &q)?);
    Ok(out)
}

pub fn appendix_reports() -> Result<Vec<OracleReport>> {
    let mut out = geometric_deformation_reports()?;
    out.extend(proxy_route_reports()?);
    out.extend(grad_q_identity_reports()?);
    Ok(out)
}

pub fn run_suite(sel: Selector) -> Result<Vec<OracleReport>> {
    match sel {
        Selector::Geometry => geometry_reports(),
        Selector::Deformation => deformation_reports(),
        Selector::Energy => energy_reports(),
        Selector::Appendix => appendix_reports(),
        Selector::All => {
            let mut out = geometry_reports()?;
            out.extend(deformation_reports()?);
            out.extend(energy_reports()?);
            out.extend(appendix_reports()?);
            Ok(out)
        }
    }
}
