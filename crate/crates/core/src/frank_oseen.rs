//! One-constant Frank-Oseen energy with a unit-length penalty, its molecular
//! field, stresses and the assembled shape force.

use serde::{Deserialize, Serialize};

use crate::calculus::{div_mat, divergence_surface, grad_vec};
use crate::deformation::{gauge_stress_ambient_vec, GaugeSpec, StressConvention};
use crate::error::{Error, Result};
use crate::field::{AmbientField, AmbientTensorField, ScalarField, TangentField, Variance};
use crate::geometry::{GeometryCache, M3, V3};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FOParams {
    #[serde(rename = "K")]
    pub k: f64,
    pub omega: f64,
    pub lambda: f64,
}

impl Default for FOParams {
    fn default() -> Self {
        FOParams {
            k: 0.1,
            omega: 0.5,
            lambda: 1.0,
        }
    }
}

impl FOParams {
    pub fn new(k: f64, omega: f64, lambda: f64) -> Result<Self> {
        let p = FOParams { k, omega, lambda };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (key, v) in [("K", self.k), ("omega", self.omega), ("lambda", self.lambda)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::ValidationError {
                    key: key.into(),
                    message: format!("must be positive and finite, got {v}"),
                });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyBreakdown {
    pub u_grad: f64,
    pub u_r: f64,
    pub total: f64,
    pub u: ScalarField,
}

/// Nodal quantities shared by the energy and its derivatives.
struct Kinematics {
    q: AmbientField,
    dq: AmbientTensorField,
    ii: AmbientTensorField,
    iiq: AmbientField,
    s: ScalarField,
}

impl Kinematics {
    fn new(q: &[V3], geo: &GeometryCache) -> Self {
        let ii = geo.shape_operator();
        let iiq: Vec<V3> = ii.iter().zip(q).map(|(m, v)| m * v).collect();
        Kinematics {
            q: q.to_vec(),
            dq: grad_vec(q, geo),
            s: q.iter().map(|v| v.norm_squared() - 1.0).collect(),
            ii,
            iiq,
        }
    }

    fn grad_density(&self, p: &FOParams, k: usize) -> f64 {
        0.5 * p.k * self.dq[k].norm_squared()
    }

    fn rest_density(&self, p: &FOParams, k: usize) -> f64 {
        0.5 * p.k * self.iiq[k].norm_squared() + 0.25 * p.omega * self.s[k] * self.s[k]
    }

    fn u(&self, p: &FOParams) -> ScalarField {
        (0..self.q.len())
            .map(|k| {
                0.5 * p.k * (self.dq[k].norm_squared() + self.iiq[k].norm_squared())
                    + 0.25 * p.omega * self.s[k] * self.s[k]
            })
            .collect()
    }
}

fn ambient(q: &TangentField, geo: &GeometryCache) -> Result<AmbientField> {
    q.expect_rank(1)?;
    geo.vector_to_ambient(q)
}

/// Energy density u for an ambient tangential director field.
pub fn density_ambient(q: &[V3], geo: &GeometryCache, p: &FOParams) -> ScalarField {
    Kinematics::new(q, geo).u(p)
}

pub fn energy_ambient(q: &[V3], geo: &GeometryCache, p: &FOParams) -> EnergyBreakdown {
    let kin = Kinematics::new(q, geo);
    let n = q.len();
    let grad: Vec<f64> = (0..n).map(|k| kin.grad_density(p, k)).collect();
    let rest: Vec<f64> = (0..n).map(|k| kin.rest_density(p, k)).collect();
    let u_grad = geo.integrate(&grad);
    let u_r = geo.integrate(&rest);
    EnergyBreakdown {
        u_grad,
        u_r,
        total: u_grad + u_r,
        u: kin.u(p),
    }
}

pub fn energy(q: &TangentField, geo: &GeometryCache, p: &FOParams) -> Result<EnergyBreakdown> {
    Ok(energy_ambient(&ambient(q, geo)?, geo, p))
}

fn molecular_from(kin: &Kinematics, geo: &GeometryCache, p: &FOParams) -> AmbientField {
    let lap = div_mat(&kin.dq, geo);
    (0..kin.q.len())
        .map(|k| {
            let ii2q = kin.ii[k] * kin.iiq[k];
            -p.k * (lap[k] - ii2q) + p.omega * kin.s[k] * kin.q[k]
        })
        .collect()
}

pub fn molecular_field_ambient(q: &[V3], geo: &GeometryCache, p: &FOParams) -> AmbientField {
    molecular_from(&Kinematics::new(q, geo), geo, p)
}

/// δU/δq = −K(Δq − II²q) + ω(|q|² − 1)q, contravariant proxy.
pub fn molecular_field(q: &TangentField, geo: &GeometryCache, p: &FOParams) -> Result<TangentField> {
    let m = molecular_field_ambient(&ambient(q, geo)?, geo, p);
    Ok(geo.vector_from_ambient(&m, Variance::Contra))
}

/// Stress fields in ambient form.
#[derive(Clone, Debug)]
pub struct AmbientStresses {
    pub sigma_fo: AmbientTensorField,
    pub sigma_e_i: AmbientTensorField,
    pub sigma_e: AmbientTensorField,
    pub eta_fo: AmbientField,
    pub u: ScalarField,
}

#[derive(Clone, Debug)]
pub struct Stresses {
    pub sigma_fo: TangentField,
    pub sigma_e_i: TangentField,
    pub sigma_e: TangentField,
    pub eta_fo: TangentField,
    pub u: ScalarField,
}

fn stresses_from(kin: &Kinematics, geo: &GeometryCache, p: &FOParams) -> AmbientStresses {
    let n = kin.q.len();
    let u = kin.u(p);
    let iiq_q: Vec<M3> = (0..n).map(|k| kin.iiq[k] * kin.q[k].transpose()).collect();
    let div_iiq_q = div_mat(&iiq_q, geo);
    let mut out = AmbientStresses {
        sigma_fo: Vec::with_capacity(n),
        sigma_e_i: Vec::with_capacity(n),
        sigma_e: Vec::with_capacity(n),
        eta_fo: Vec::with_capacity(n),
        u,
    };
    for k in 0..n {
        let pr = geo.projector(k);
        let dq = kin.dq[k];
        let dtd = dq.transpose() * dq;
        let ii2q = kin.ii[k] * kin.iiq[k];
        out.sigma_fo
            .push(p.k * (dtd + ii2q * kin.q[k].transpose()) - out.u[k] * pr);
        out.sigma_e_i
            .push(p.k * (dtd - 0.5 * dtd.trace() * pr));
        let x = dtd + kin.iiq[k] * kin.iiq[k].transpose();
        let sym = 0.5 * (x + x.transpose());
        out.sigma_e.push(p.k * (sym - 0.5 * x.trace() * pr));
        out.eta_fo.push(
            p.k * (kin.ii[k].dot(&dq) * kin.q[k] - dq * kin.iiq[k] + div_iiq_q[k]),
        );
    }
    out
}

pub fn stresses_ambient(q: &[V3], geo: &GeometryCache, p: &FOParams) -> AmbientStresses {
    stresses_from(&Kinematics::new(q, geo), geo, p)
}

pub fn stresses(q: &TangentField, geo: &GeometryCache, p: &FOParams) -> Result<Stresses> {
    let s = stresses_ambient(&ambient(q, geo)?, geo, p);
    let t = |m: &AmbientTensorField| geo.tensor_from_ambient(m, [Variance::Contra, Variance::Contra]);
    Ok(Stresses {
        sigma_fo: t(&s.sigma_fo),
        sigma_e_i: t(&s.sigma_e_i),
        sigma_e: t(&s.sigma_e),
        eta_fo: geo.vector_from_ambient(&s.eta_fo, Variance::Contra),
        u: s.u,
    })
}

/// L2-gradient force V = −δU/δX and its tangential/normal split.
#[derive(Clone, Debug)]
pub struct ShapeForce {
    pub v_full: AmbientField,
    pub v_t: TangentField,
    pub v_n: ScalarField,
}

impl ShapeForce {
    /// v_t + v_n ν in ambient form.
    pub fn assembled(&self, geo: &GeometryCache) -> AmbientField {
        let t = geo.vector_to_ambient(&self.v_t).expect("rank 1");
        (0..geo.len())
            .map(|k| t[k] + geo.nu[k] * self.v_n[k])
            .collect()
    }
}

pub fn shape_force(
    q: &TangentField,
    geo: &GeometryCache,
    p: &FOParams,
    gauge: GaugeSpec,
) -> Result<ShapeForce> {
    if gauge.rank != 1 {
        return Err(Error::RankMismatch {
            expected: 1,
            got: gauge.rank,
        });
    }
    let qa = ambient(q, geo)?;
    let kin = Kinematics::new(&qa, geo);
    let m = molecular_from(&kin, geo, p);
    let st = stresses_from(&kin, geo, p);
    let sbar = gauge_stress_ambient_vec(&qa, &m, gauge.kind, StressConvention::Frame);
    let n = qa.len();
    let contra = |x: &Vec<M3>| geo.tensor_from_ambient(x, [Variance::Contra, Variance::Contra]);

    let total: Vec<M3> = (0..n).map(|k| st.sigma_fo[k] - sbar[k]).collect();
    let eta = geo.vector_from_ambient(&st.eta_fo, Variance::Contra);
    let v_full: Vec<V3> = divergence_surface(&contra(&total), &eta, geo)?
        .iter()
        .map(|v| -v)
        .collect();

    let div_sbar = div_mat(&sbar, geo);
    let vt: Vec<V3> = (0..n)
        .map(|k| div_sbar[k] + kin.dq[k].transpose() * m[k])
        .collect();

    let div_eta = crate::calculus::div_vec(&st.eta_fo, geo);
    let v_n: Vec<f64> = (0..n)
        .map(|k| {
            (sbar[k] - st.sigma_e[k]).dot(&kin.ii[k]) - div_eta[k]
                + 0.25 * p.omega * geo.mean_curvature[k] * kin.s[k] * kin.s[k]
        })
        .collect();

    Ok(ShapeForce {
        v_full,
        v_t: geo.vector_from_ambient(&vt, Variance::Contra),
        v_n,
    })
}
