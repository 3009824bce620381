//! Covariant derivative, divergences, curl and the Bochner Laplacian on
//! proxy components.

use crate::error::{Error, Result};
use crate::field::{slot_tuples, AmbientField, AmbientTensorField, ScalarField, TangentField, Variance};
use crate::geometry::{GeometryCache, M3, V3};

/// ∇q with the derivative slot appended last (covariant). Rank ≤ 3.
pub fn covariant_derivative(q: &TangentField, geo: &GeometryCache) -> Result<TangentField> {
    let rank = q.rank();
    if rank > 3 {
        return Err(Error::RankMismatch {
            expected: 3,
            got: rank,
        });
    }
    let n = q.len();
    let partials: Vec<[Vec<f64>; 2]> = q.comps.iter().map(|c| geo.ops.grad(c)).collect();
    let mut variance = q.variance.clone();
    variance.push(Variance::Co);
    let mut out = TangentField::zeros(variance, n);
    for slots in slot_tuples(rank) {
        let src = TangentField::index(&slots);
        for k in 0..2 {
            let dst = (src << 1) | k;
            let col = &mut out.comps[dst];
            col.copy_from_slice(&partials[src][k]);
            for s in 0..rank {
                let a = slots[s];
                let mut alt = slots.clone();
                for j in 0..2 {
                    alt[s] = j;
                    let other = &q.comps[TangentField::index(&alt)];
                    match q.variance[s] {
                        Variance::Contra => {
                            for (node, v) in col.iter_mut().enumerate() {
                                *v += geo.gamma2[node][a][k][j] * other[node];
                            }
                        }
                        Variance::Co => {
                            for (node, v) in col.iter_mut().enumerate() {
                                *v -= geo.gamma2[node][j][k][a] * other[node];
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Covariant divergence: contraction of the last slot with the derivative slot.
pub fn divergence(q: &TangentField, geo: &GeometryCache) -> Result<TangentField> {
    let rank = q.rank();
    if rank == 0 {
        return Err(Error::RankMismatch {
            expected: 1,
            got: 0,
        });
    }
    let mut target = q.variance.clone();
    target[rank - 1] = Variance::Contra;
    let qc = geo.change_variance(q, &target)?;
    let grad = covariant_derivative(&qc, geo)?;
    let mut out = TangentField::zeros(target[..rank - 1].to_vec(), q.len());
    for slots in slot_tuples(rank - 1) {
        let dst = TangentField::index(&slots);
        for i in 0..2 {
            let src = (((dst << 1) | i) << 1) | i;
            for (o, v) in out.comps[dst].iter_mut().zip(&grad.comps[src]) {
                *o += v;
            }
        }
    }
    Ok(out)
}

fn ii_contract(sigma: &TangentField, geo: &GeometryCache) -> Result<ScalarField> {
    geo.inner(&geo.shape_operator_field(), sigma)
}

/// div σ + <II, σ> ν for a tangential 2-tensor field.
pub fn divergence_tangential(sigma: &TangentField, geo: &GeometryCache) -> Result<AmbientField> {
    sigma.expect_rank(2)?;
    let d = geo.vector_to_ambient(&divergence(sigma, geo)?)?;
    let c = ii_contract(sigma, geo)?;
    Ok((0..geo.len()).map(|k| d[k] + geo.nu[k] * c[k]).collect())
}

/// Surface divergence of σ + ν ⊗ η:
/// div σ − II η + (<II, σ> + div η) ν.
pub fn divergence_surface(
    sigma: &TangentField,
    eta: &TangentField,
    geo: &GeometryCache,
) -> Result<AmbientField> {
    sigma.expect_rank(2)?;
    eta.expect_rank(1)?;
    let d = geo.vector_to_ambient(&divergence(sigma, geo)?)?;
    let c = ii_contract(sigma, geo)?;
    let de = divergence(eta, geo)?;
    let ea = geo.vector_to_ambient(eta)?;
    let s = geo.shape_operator();
    Ok((0..geo.len())
        .map(|k| d[k] - s[k] * ea[k] + geo.nu[k] * (c[k] + de.comps[0][k]))
        .collect())
}

/// rot q = −<∇q, E>.
pub fn curl(q: &TangentField, geo: &GeometryCache) -> Result<ScalarField> {
    q.expect_rank(1)?;
    let grad = covariant_derivative(&geo.to_co(q), geo)?;
    // E^{ij} = ε_ij / sqrt|g|
    Ok((0..geo.len())
        .map(|k| -(grad.comps[1][k] - grad.comps[2][k]) / geo.sqrtdetg[k])
        .collect())
}

/// Δq = div ∇q.
pub fn bochner_laplacian(q: &TangentField, geo: &GeometryCache) -> Result<TangentField> {
    q.expect_rank(1)?;
    divergence(&covariant_derivative(q, geo)?, geo)
}

/// Gradient of a scalar field as an ambient tangential vector field.
pub fn grad_scalar(f: &[f64], geo: &GeometryCache) -> AmbientField {
    let [d0, d1] = geo.ops.grad(f);
    (0..geo.len())
        .map(|k| geo.dual[0][k] * d0[k] + geo.dual[1][k] * d1[k])
        .collect()
}

/// ∇q for an ambient tangential vector field, returned in ambient form with
/// the derivative slot as the column index.
pub fn grad_vec(q: &[V3], geo: &GeometryCache) -> AmbientTensorField {
    let p = geo.vector_from_ambient(q, Variance::Contra);
    let g = covariant_derivative(&p, geo).expect("rank 1");
    geo.tensor_to_ambient(&g).expect("rank 2")
}

/// Covariant divergence of an ambient tangential 2-tensor field (contracting
/// the column index).
pub fn div_mat(m: &[M3], geo: &GeometryCache) -> AmbientField {
    let p = geo.tensor_from_ambient(m, [Variance::Contra, Variance::Contra]);
    geo.vector_to_ambient(&divergence(&p, geo).expect("rank 2"))
        .expect("rank 1")
}

/// Divergence of an ambient tangential vector field.
pub fn div_vec(v: &[V3], geo: &GeometryCache) -> ScalarField {
    let p = geo.vector_from_ambient(v, Variance::Contra);
    divergence(&p, geo).expect("rank 1").comps.remove(0)
}
