//! Gradient of a deformation direction W, gauges of surface independence,
//! deformation derivatives, L2-adjoints and gauge stresses.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::calculus::{covariant_derivative, divergence, divergence_tangential, grad_vec};
use crate::error::{Error, Result};
use crate::field::{AmbientField, AmbientTensorField, ScalarField, TangentField, Variance};
use crate::geometry::{GeometryCache, Sym3, M3, V3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaugeKind {
    Material,
    #[serde(alias = "upper_convected")]
    Upper,
    #[serde(alias = "lower_convected")]
    Lower,
    Jaumann,
    #[serde(rename = "uu", alias = "upper_upper")]
    UU,
    #[serde(rename = "ll", alias = "lower_lower")]
    LL,
    #[serde(rename = "ul", alias = "upper_lower")]
    UL,
    #[serde(rename = "lu", alias = "lower_upper")]
    LU,
}

impl GaugeKind {
    pub fn name(self) -> &'static str {
        match self {
            GaugeKind::Material => "material",
            GaugeKind::Upper => "upper",
            GaugeKind::Lower => "lower",
            GaugeKind::Jaumann => "jaumann",
            GaugeKind::UU => "uu",
            GaugeKind::LL => "ll",
            GaugeKind::UL => "ul",
            GaugeKind::LU => "lu",
        }
    }
}

/// Gauge of surface independence, or equally the name of a deformation or
/// time derivative.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GaugeSpec {
    pub rank: usize,
    pub kind: GaugeKind,
}

/// Time derivatives are labeled by the same names as gauges.
pub type TimeDerivSpec = GaugeSpec;

pub const VECTOR_KINDS: [GaugeKind; 4] = [
    GaugeKind::Material,
    GaugeKind::Upper,
    GaugeKind::Lower,
    GaugeKind::Jaumann,
];

pub const TENSOR_KINDS: [GaugeKind; 6] = [
    GaugeKind::Material,
    GaugeKind::UU,
    GaugeKind::LL,
    GaugeKind::UL,
    GaugeKind::LU,
    GaugeKind::Jaumann,
];

impl GaugeSpec {
    pub fn new(rank: usize, kind: GaugeKind) -> Result<Self> {
        let ok = match rank {
            1 => VECTOR_KINDS.contains(&kind),
            2 => TENSOR_KINDS.contains(&kind),
            _ => false,
        };
        if !ok {
            return Err(Error::ValidationError {
                key: "gauge".into(),
                message: format!("`{}` is not a rank-{rank} gauge", kind.name()),
            });
        }
        Ok(GaugeSpec { rank, kind })
    }

    pub fn vector(kind: GaugeKind) -> Self {
        Self::new(1, kind).expect("vector gauge")
    }

    pub fn tensor(kind: GaugeKind) -> Self {
        Self::new(2, kind).expect("tensor gauge")
    }

    pub fn all(rank: usize) -> Vec<GaugeSpec> {
        match rank {
            1 => VECTOR_KINDS.iter().map(|&k| Self::vector(k)).collect(),
            2 => TENSOR_KINDS.iter().map(|&k| Self::tensor(k)).collect(),
            _ => vec![],
        }
    }

    pub fn valid_names(rank: usize) -> Vec<&'static str> {
        Self::all(rank).iter().map(|g| g.kind.name()).collect()
    }

    /// Parses a gauge name for the given rank. Accepts long forms such as
    /// `upper_convected`.
    pub fn parse(rank: usize, s: &str) -> Result<Self> {
        let kind = match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "material" => GaugeKind::Material,
            "upper" | "upper_convected" => GaugeKind::Upper,
            "lower" | "lower_convected" => GaugeKind::Lower,
            "jaumann" => GaugeKind::Jaumann,
            "uu" | "upper_upper" => GaugeKind::UU,
            "ll" | "lower_lower" => GaugeKind::LL,
            "ul" | "upper_lower" => GaugeKind::UL,
            "lu" | "lower_upper" => GaugeKind::LU,
            _ => {
                return Err(Error::ValidationError {
                    key: "gauge".into(),
                    message: format!(
                        "unknown name `{s}`; valid names: {}",
                        Self::valid_names(rank).join(", ")
                    ),
                })
            }
        };
        Self::new(rank, kind)
    }
}

impl fmt::Display for GaugeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind.name())
    }
}

impl FromStr for GaugeSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(1, s)
    }
}

/// Which multiple of the deformation gradient a gauge subtracts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PsiFactor {
    Zero,
    G,
    MinusGT,
    A,
}

/// (Ψ1, Ψ2) of a gauge; rank-1 gauges only use the first.
pub fn psi_factors(spec: GaugeSpec) -> (PsiFactor, PsiFactor) {
    use GaugeKind::*;
    use PsiFactor as P;
    match (spec.rank, spec.kind) {
        (_, Material) => (P::Zero, P::Zero),
        (_, Jaumann) => (P::A, P::A),
        (1, Upper) | (2, UU) => (P::G, P::G),
        (1, Lower) | (2, LL) => (P::MinusGT, P::MinusGT),
        (2, UL) => (P::G, P::MinusGT),
        (2, LU) => (P::MinusGT, P::G),
        _ => unreachable!("invalid gauge spec {spec:?}"),
    }
}

/// Tangential and normal parts of the gradient of a deformation direction W.
#[derive(Clone, Debug)]
pub struct DeformationParts {
    /// G_ij = <∂_j W, ∂_i X>, ambient form.
    pub g: AmbientTensorField,
    pub s: AmbientTensorField,
    pub a: AmbientTensorField,
    /// b_i = <∂_i W, ν>.
    pub b: AmbientField,
    pub wt: AmbientField,
    pub wn: ScalarField,
}

impl DeformationParts {
    pub fn factor(&self, f: PsiFactor, k: usize) -> M3 {
        match f {
            PsiFactor::Zero => M3::zeros(),
            PsiFactor::G => self.g[k],
            PsiFactor::MinusGT => -self.g[k].transpose(),
            PsiFactor::A => self.a[k],
        }
    }

    pub fn field(&self, which: &AmbientTensorField, geo: &GeometryCache) -> TangentField {
        geo.tensor_from_ambient(which, [Variance::Contra, Variance::Contra])
    }
}

pub fn decompose_deformation(w: &[V3], geo: &GeometryCache) -> DeformationParts {
    let dw = [geo.ops.d_vec3(w, 0), geo.ops.d_vec3(w, 1)];
    let n = geo.len();
    let mut g = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for k in 0..n {
        let p = geo.projector(k);
        let mut gk = M3::zeros();
        let mut bk = V3::zeros();
        for j in 0..2 {
            gk += p * dw[j][k] * geo.dual[j][k].transpose();
            bk += geo.dual[j][k] * dw[j][k].dot(&geo.nu[k]);
        }
        g.push(gk);
        b.push(bk);
    }
    let s = g.iter().map(|m| 0.5 * (m + m.transpose())).collect();
    let a = g.iter().map(|m| 0.5 * (m - m.transpose())).collect();
    DeformationParts {
        g,
        s,
        a,
        b,
        wt: geo.project_vec(w),
        wn: w.iter().zip(&geo.nu).map(|(v, n)| v.dot(n)).collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeomQuantity {
    Metric,
    InverseMetric,
    Density,
    Christoffel2,
    Normal,
    ShapeOperator,
}

impl FromStr for GeomQuantity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "metric" => GeomQuantity::Metric,
            "inverse_metric" => GeomQuantity::InverseMetric,
            "density" => GeomQuantity::Density,
            "christoffel2" => GeomQuantity::Christoffel2,
            "normal" => GeomQuantity::Normal,
            "shape_operator" => GeomQuantity::ShapeOperator,
            other => return Err(Error::UnknownQuantity(other.into())),
        })
    }
}

#[derive(Clone, Debug)]
pub enum GeomDeformation {
    /// Proxy components (metric: covariant, inverse metric: contravariant).
    Tensor(TangentField),
    Scalar(ScalarField),
    /// 𝔡Γ^i_jk stored `[i][j][k]`.
    Christoffel(Vec<Sym3>),
    Vector(AmbientField),
    AmbientTensor(AmbientTensorField),
}

/// Deformation derivatives of the geometric quantities.
pub fn geometric_deformation(
    quantity: GeomQuantity,
    geo: &GeometryCache,
    parts: &DeformationParts,
) -> GeomDeformation {
    match quantity {
        GeomQuantity::Metric => GeomDeformation::Tensor(
            geo.tensor_from_ambient(&parts.s, [Variance::Co, Variance::Co])
                .scale(2.0),
        ),
        GeomQuantity::InverseMetric => GeomDeformation::Tensor(
            geo.tensor_from_ambient(&parts.s, [Variance::Contra, Variance::Contra])
                .scale(-2.0),
        ),
        GeomQuantity::Density => GeomDeformation::Scalar(
            parts
                .g
                .iter()
                .zip(&geo.sqrtdetg)
                .map(|(m, s)| m.trace() * s)
                .collect(),
        ),
        GeomQuantity::Christoffel2 => {
            let gm = geo.tensor_from_ambient(&parts.g, [Variance::Contra, Variance::Co]);
            let dg = covariant_derivative(&gm, geo).expect("rank 2");
            let bu = geo.vector_from_ambient(&parts.b, Variance::Contra);
            let bd = geo.vector_from_ambient(&parts.b, Variance::Co);
            let out = (0..geo.len())
                .map(|n| {
                    let iim = geo.ginv[n] * geo.ii[n];
                    let mut c = [[[0.0; 2]; 2]; 2];
                    for i in 0..2 {
                        for j in 0..2 {
                            for k in 0..2 {
                                c[i][j][k] = dg.comps[(i << 2) | (k << 1) | j][n]
                                    + bu.comps[i][n] * geo.ii[n][(j, k)]
                                    - bd.comps[k][n] * iim[(i, j)];
                            }
                        }
                    }
                    c
                })
                .collect();
            GeomDeformation::Christoffel(out)
        }
        GeomQuantity::Normal => GeomDeformation::Vector(parts.b.iter().map(|v| -v).collect()),
        GeomQuantity::ShapeOperator => {
            let db = grad_vec(&parts.b, geo);
            let ii = geo.shape_operator();
            GeomDeformation::AmbientTensor(
                (0..geo.len())
                    .map(|k| db[k] - ii[k] * parts.g[k])
                    .collect(),
            )
        }
    }
}

fn ambient_vec(q: &TangentField, geo: &GeometryCache) -> Result<AmbientField> {
    geo.vector_to_ambient(q)
}

/// Deformation derivative `derivative` of a vector field q that fulfills the
/// gauge `assumed_gauge`: (Ψ_gauge − Ψ_derivative) q.
pub fn vector_deformation(
    q: &TangentField,
    geo: &GeometryCache,
    parts: &DeformationParts,
    assumed_gauge: GaugeSpec,
    derivative: GaugeSpec,
) -> Result<TangentField> {
    q.expect_rank(1)?;
    if assumed_gauge.rank != 1 || derivative.rank != 1 {
        return Err(Error::RankMismatch {
            expected: 1,
            got: assumed_gauge.rank.max(derivative.rank),
        });
    }
    let qa = ambient_vec(q, geo)?;
    let (pg, _) = psi_factors(assumed_gauge);
    let (pd, _) = psi_factors(derivative);
    let out: Vec<V3> = (0..geo.len())
        .map(|k| (parts.factor(pg, k) - parts.factor(pd, k)) * qa[k])
        .collect();
    Ok(geo.vector_from_ambient(&out, Variance::Contra))
}

/// Rank-2 analogue: (Ψ1_g − Ψ1_d) q + q (Ψ2_g − Ψ2_d)^T.
pub fn tensor_deformation(
    q: &TangentField,
    geo: &GeometryCache,
    parts: &DeformationParts,
    assumed_gauge: GaugeSpec,
    derivative: GaugeSpec,
) -> Result<TangentField> {
    q.expect_rank(2)?;
    if assumed_gauge.rank != 2 || derivative.rank != 2 {
        return Err(Error::RankMismatch {
            expected: 2,
            got: assumed_gauge.rank.min(derivative.rank),
        });
    }
    let qa = geo.tensor_to_ambient(q)?;
    let (g1, g2) = psi_factors(assumed_gauge);
    let (d1, d2) = psi_factors(derivative);
    let out: Vec<M3> = (0..geo.len())
        .map(|k| {
            let a = parts.factor(g1, k) - parts.factor(d1, k);
            let b = parts.factor(g2, k) - parts.factor(d2, k);
            a * qa[k] + qa[k] * b.transpose()
        })
        .collect();
    Ok(geo.tensor_from_ambient(&out, [Variance::Contra, Variance::Contra]))
}

/// Ψ q (rank 1) or Ψ1 q + q Ψ2^T (rank 2) in ambient form, for ambient q.
pub fn apply_psi_vec(spec: GaugeSpec, parts: &DeformationParts, q: &[V3]) -> AmbientField {
    let (p, _) = psi_factors(spec);
    q.iter()
        .enumerate()
        .map(|(k, v)| parts.factor(p, k) * v)
        .collect()
}

pub fn apply_psi_mat(spec: GaugeSpec, parts: &DeformationParts, q: &[M3]) -> AmbientTensorField {
    let (p1, p2) = psi_factors(spec);
    q.iter()
        .enumerate()
        .map(|(k, m)| parts.factor(p1, k) * m + m * parts.factor(p2, k).transpose())
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdjointKind {
    G,
    GT,
    S,
    A,
}

/// L2-adjoint Ψ‡ of the deformation-gradient parts, applied to r.
pub fn adjoint_divergence(
    r: &TangentField,
    geo: &GeometryCache,
    which: AdjointKind,
) -> Result<AmbientField> {
    r.expect_rank(2)?;
    let ra = geo.tensor_to_ambient(r)?;
    let sel: Vec<M3> = match which {
        AdjointKind::G => ra.clone(),
        AdjointKind::GT => ra.iter().map(|m| m.transpose()).collect(),
        AdjointKind::S => ra.iter().map(|m| 0.5 * (m + m.transpose())).collect(),
        AdjointKind::A => ra.iter().map(|m| 0.5 * (m - m.transpose())).collect(),
    };
    let sp = geo.tensor_from_ambient(&sel, [Variance::Contra, Variance::Contra]);
    match which {
        AdjointKind::A => {
            let d = geo.vector_to_ambient(&divergence(&sp, geo)?)?;
            Ok(d.iter().map(|v| -v).collect())
        }
        // <r, II> is unchanged by transposing or symmetrizing r
        _ => Ok(divergence_tangential(&sp, geo)?
            .iter()
            .map(|v| -v)
            .collect()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StressConvention {
    /// Energy written in terms of the frame-independent field q.
    Frame,
    /// Energy written in terms of the contravariant proxy q^i.
    ContravariantProxy,
}

/// Gauge stress in ambient form for ambient q and molecular field m.
pub fn gauge_stress_ambient_vec(q: &[V3], m: &[V3], gauge: GaugeKind, convention: StressConvention) -> AmbientTensorField {
    q.iter()
        .zip(m)
        .map(|(q, m)| {
            let mq = m * q.transpose();
            let qm = q * m.transpose();
            let frame = match gauge {
                GaugeKind::Material => M3::zeros(),
                GaugeKind::Upper => mq,
                GaugeKind::Lower => -qm,
                GaugeKind::Jaumann => 0.5 * (mq - qm),
                _ => unreachable!("vector gauge"),
            };
            match convention {
                StressConvention::Frame => frame,
                StressConvention::ContravariantProxy => frame - mq,
            }
        })
        .collect()
}

pub fn gauge_stress_ambient_mat(q: &[M3], m: &[M3], gauge: GaugeKind) -> AmbientTensorField {
    q.iter()
        .zip(m)
        .map(|(q, m)| {
            let uu = m * q.transpose() + m.transpose() * q;
            let ul = m * q.transpose() - q.transpose() * m;
            match gauge {
                GaugeKind::Material => M3::zeros(),
                GaugeKind::UU => uu,
                GaugeKind::LL => -uu.transpose(),
                GaugeKind::UL => ul,
                GaugeKind::LU => -ul.transpose(),
                GaugeKind::Jaumann => 0.5 * (uu - uu.transpose()),
                _ => unreachable!("tensor gauge"),
            }
        })
        .collect()
}

/// Gauge stress σ̄ (frame convention) or σ̃ = σ̄ − m ⊗ q (contravariant-proxy
/// convention, rank 1 only). Returns contravariant proxies.
pub fn gauge_stress(
    q: &TangentField,
    molecular: &TangentField,
    geo: &GeometryCache,
    gauge: GaugeSpec,
    convention: StressConvention,
) -> Result<TangentField> {
    if q.rank() != molecular.rank() || q.rank() != gauge.rank {
        return Err(Error::RankMismatch {
            expected: gauge.rank,
            got: q.rank(),
        });
    }
    let out = match q.rank() {
        1 => gauge_stress_ambient_vec(
            &geo.vector_to_ambient(q)?,
            &geo.vector_to_ambient(molecular)?,
            gauge.kind,
            convention,
        ),
        2 => {
            if convention == StressConvention::ContravariantProxy {
                return Err(Error::UnsupportedConvention(
                    "contravariant-proxy gauge stress is only defined for vector fields".into(),
                ));
            }
            gauge_stress_ambient_mat(
                &geo.tensor_to_ambient(q)?,
                &geo.tensor_to_ambient(molecular)?,
                gauge.kind,
            )
        }
        r => {
            return Err(Error::RankMismatch {
                expected: 2,
                got: r,
            })
        }
    };
    Ok(geo.tensor_from_ambient(&out, [Variance::Contra, Variance::Contra]))
}

/// (Φ1 − Ψ1, Φ2 − Ψ2) for a time derivative and a gauge, in ambient form.
/// For rank 1 only the first entry is meaningful; the second is returned as
/// a copy of it.
pub fn phi_minus_psi(
    gauge: GaugeSpec,
    derivative: TimeDerivSpec,
    parts: &DeformationParts,
) -> Result<(AmbientTensorField, AmbientTensorField)> {
    if gauge.rank != derivative.rank {
        return Err(Error::RankMismatch {
            expected: gauge.rank,
            got: derivative.rank,
        });
    }
    let (g1, g2) = psi_factors(gauge);
    let (d1, d2) = psi_factors(derivative);
    let n = parts.g.len();
    let first: Vec<M3> = (0..n)
        .map(|k| parts.factor(d1, k) - parts.factor(g1, k))
        .collect();
    let second = if gauge.rank == 1 {
        first.clone()
    } else {
        (0..n)
            .map(|k| parts.factor(d2, k) - parts.factor(g2, k))
            .collect()
    };
    Ok((first, second))
}
