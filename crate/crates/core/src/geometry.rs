//! Geometric quantities of a patch and conversions between proxy and ambient
//! representations of tangential fields.

use nalgebra::{Matrix2, Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::field::{
    slot_tuples, AmbientField, AmbientTensorField, ScalarField, TangentField, Variance,
};
use crate::grid::{GridOps, ParameterGrid};
use crate::patch::SurfacePatch;

pub type V3 = Vector3<f64>;
pub type M3 = Matrix3<f64>;
pub type Sym3 = [[[f64; 2]; 2]; 2];

#[derive(Clone, Debug)]
pub struct GeometryCache {
    pub ops: GridOps,
    pub x: Vec<V3>,
    pub dx: [Vec<V3>; 2],
    pub ddx: [[Vec<V3>; 2]; 2],
    /// Contravariant frame ∂^i X = g^{ij} ∂_j X.
    pub dual: [Vec<V3>; 2],
    pub g: Vec<Matrix2<f64>>,
    pub ginv: Vec<Matrix2<f64>>,
    pub sqrtdetg: ScalarField,
    pub nu: Vec<V3>,
    /// Γ_ijk = <∂_i ∂_j X, ∂_k X>, stored `[i][j][k]`.
    pub gamma1: Vec<Sym3>,
    /// Γ^k_ij, stored `[k][i][j]`.
    pub gamma2: Vec<Sym3>,
    pub ii: Vec<Matrix2<f64>>,
    pub mean_curvature: ScalarField,
    pub gauss_curvature: ScalarField,
    /// Levi-Civita proxy E_ij = sqrt|g| ε_ij.
    pub e: Vec<Matrix2<f64>>,
    weights: Vec<f64>,
}

pub fn build_geometry(patch: &SurfacePatch) -> Result<GeometryCache> {
    let n = patch.len();
    let grid = &patch.grid;
    let mut g = Vec::with_capacity(n);
    let mut max_g = 0.0f64;
    for k in 0..n {
        let a = &patch.dx[0][k];
        let b = &patch.dx[1][k];
        let m = Matrix2::new(a.dot(a), a.dot(b), b.dot(a), b.dot(b));
        max_g = max_g.max(m.abs().max());
        g.push(m);
    }
    let threshold = 1e-12 * max_g;
    let mut ginv = Vec::with_capacity(n);
    let mut sqrtdetg = Vec::with_capacity(n);
    let mut nu = Vec::with_capacity(n);
    let mut gamma1 = Vec::with_capacity(n);
    let mut gamma2 = Vec::with_capacity(n);
    let mut ii = Vec::with_capacity(n);
    let mut hm = Vec::with_capacity(n);
    let mut kg = Vec::with_capacity(n);
    let mut e = Vec::with_capacity(n);
    let mut dual = [Vec::with_capacity(n), Vec::with_capacity(n)];
    for k in 0..n {
        let det = g[k].determinant();
        if !(det > threshold) {
            return Err(Error::DegenerateMetric {
                node: k,
                det,
                threshold,
            });
        }
        let gi = Matrix2::new(g[k][(1, 1)], -g[k][(0, 1)], -g[k][(1, 0)], g[k][(0, 0)]) / det;
        let s = det.sqrt();
        let normal = patch.dx[0][k].cross(&patch.dx[1][k]) / s;
        let mut c1 = [[[0.0; 2]; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for l in 0..2 {
                    c1[i][j][l] = patch.ddx[i][j][k].dot(&patch.dx[l][k]);
                }
            }
        }
        let mut c2 = [[[0.0; 2]; 2]; 2];
        for m in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    c2[m][i][j] = gi[(m, 0)] * c1[i][j][0] + gi[(m, 1)] * c1[i][j][1];
                }
            }
        }
        let sf = Matrix2::from_fn(|i, j| patch.ddx[i][j][k].dot(&normal));
        hm.push((gi.component_mul(&sf)).sum());
        kg.push(sf.determinant() / det);
        ii.push(sf);
        e.push(Matrix2::new(0.0, s, -s, 0.0));
        for i in 0..2 {
            dual[i].push(patch.dx[0][k] * gi[(i, 0)] + patch.dx[1][k] * gi[(i, 1)]);
        }
        ginv.push(gi);
        sqrtdetg.push(s);
        nu.push(normal);
        gamma1.push(c1);
        gamma2.push(c2);
    }
    Ok(GeometryCache {
        ops: GridOps::new(grid),
        x: patch.x.clone(),
        dx: patch.dx.clone(),
        ddx: patch.ddx.clone(),
        dual,
        g,
        ginv,
        sqrtdetg,
        nu,
        gamma1,
        gamma2,
        ii,
        mean_curvature: hm,
        gauss_curvature: kg,
        e,
        weights: grid.weights(),
    })
}

/// Ambient input to [`project_tangent`].
#[derive(Clone, Copy, Debug)]
pub enum AmbientInput<'a> {
    Vector(&'a [V3]),
    Tensor(&'a [M3]),
}

/// Orthogonal projection of an ambient vector or 2-tensor field onto the
/// tangent bundle. Returns contravariant proxies.
pub fn project_tangent(
    field: AmbientInput<'_>,
    geo: &GeometryCache,
    rank: usize,
) -> Result<TangentField> {
    match (field, rank) {
        (AmbientInput::Vector(v), 1) => Ok(geo.vector_from_ambient(v, Variance::Contra)),
        (AmbientInput::Tensor(m), 2) => {
            Ok(geo.tensor_from_ambient(m, [Variance::Contra, Variance::Contra]))
        }
        (AmbientInput::Vector(_), r) => Err(Error::RankMismatch {
            expected: 1,
            got: r,
        }),
        (AmbientInput::Tensor(_), r) => Err(Error::RankMismatch {
            expected: 2,
            got: r,
        }),
    }
}

impl GeometryCache {
    pub fn grid(&self) -> &ParameterGrid {
        &self.ops.grid
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn projector(&self, k: usize) -> M3 {
        M3::identity() - self.nu[k] * self.nu[k].transpose()
    }

    pub fn projectors(&self) -> AmbientTensorField {
        (0..self.len()).map(|k| self.projector(k)).collect()
    }

    /// Frame vector carrying a slot of the given variance.
    #[inline]
    pub fn basis(&self, v: Variance, i: usize, k: usize) -> V3 {
        match v {
            Variance::Contra => self.dx[i][k],
            Variance::Co => self.dual[i][k],
        }
    }

    /// Frame vector used to extract a proxy component of the given variance.
    #[inline]
    fn cobasis(&self, v: Variance, i: usize, k: usize) -> V3 {
        match v {
            Variance::Contra => self.dual[i][k],
            Variance::Co => self.dx[i][k],
        }
    }

    /// Raise or lower slots to reach `target` variance.
    pub fn change_variance(&self, q: &TangentField, target: &[Variance]) -> Result<TangentField> {
        if target.len() != q.rank() {
            return Err(Error::RankMismatch {
                expected: q.rank(),
                got: target.len(),
            });
        }
        let mut cur = q.clone();
        for s in 0..q.rank() {
            if cur.variance[s] == target[s] {
                continue;
            }
            let lower = target[s] == Variance::Co;
            let mut out = TangentField::zeros(cur.variance.clone(), q.len());
            out.variance[s] = target[s];
            for slots in slot_tuples(q.rank()) {
                let dst = TangentField::index(&slots);
                let mut a = slots.clone();
                for k in 0..q.len() {
                    let m = if lower { &self.g[k] } else { &self.ginv[k] };
                    let mut acc = 0.0;
                    for j in 0..2 {
                        a[s] = j;
                        acc += m[(slots[s], j)] * cur.comps[TangentField::index(&a)][k];
                    }
                    out.comps[dst][k] = acc;
                }
            }
            cur = out;
        }
        Ok(cur)
    }

    pub fn to_contra(&self, q: &TangentField) -> TangentField {
        self.change_variance(q, &vec![Variance::Contra; q.rank()])
            .expect("rank preserved")
    }

    pub fn to_co(&self, q: &TangentField) -> TangentField {
        self.change_variance(q, &vec![Variance::Co; q.rank()])
            .expect("rank preserved")
    }

    pub fn vector_to_ambient(&self, q: &TangentField) -> Result<AmbientField> {
        q.expect_rank(1)?;
        let v = q.variance[0];
        Ok((0..q.len())
            .map(|k| self.basis(v, 0, k) * q.comps[0][k] + self.basis(v, 1, k) * q.comps[1][k])
            .collect())
    }

    pub fn tensor_to_ambient(&self, q: &TangentField) -> Result<AmbientTensorField> {
        q.expect_rank(2)?;
        let (v1, v2) = (q.variance[0], q.variance[1]);
        Ok((0..q.len())
            .map(|k| {
                let mut m = M3::zeros();
                for i in 0..2 {
                    for j in 0..2 {
                        m += self.basis(v1, i, k)
                            * self.basis(v2, j, k).transpose()
                            * q.comps[2 * i + j][k];
                    }
                }
                m
            })
            .collect())
    }

    /// Proxy components of the tangential part of an ambient vector field.
    pub fn vector_from_ambient(&self, v: &[V3], variance: Variance) -> TangentField {
        let c = |i: usize| -> Vec<f64> {
            (0..self.len())
                .map(|k| v[k].dot(&self.cobasis(variance, i, k)))
                .collect()
        };
        TangentField::vector(variance, c(0), c(1))
    }

    /// Proxy components of the tangential part (both slots projected) of an
    /// ambient 2-tensor field.
    pub fn tensor_from_ambient(&self, m: &[M3], variance: [Variance; 2]) -> TangentField {
        let comps = (0..4)
            .map(|c| {
                let (i, j) = (c >> 1, c & 1);
                (0..self.len())
                    .map(|k| {
                        self.cobasis(variance[0], i, k).dot(&(m[k] * self.cobasis(variance[1], j, k)))
                    })
                    .collect()
            })
            .collect();
        TangentField {
            variance: variance.to_vec(),
            comps,
        }
    }

    /// Tangential projection P v.
    pub fn project_vec(&self, v: &[V3]) -> AmbientField {
        v.iter()
            .zip(&self.nu)
            .map(|(a, n)| a - n * n.dot(a))
            .collect()
    }

    /// Tangential projection P m P.
    pub fn project_mat(&self, m: &[M3]) -> AmbientTensorField {
        (0..self.len())
            .map(|k| {
                let p = self.projector(k);
                p * m[k] * p
            })
            .collect()
    }

    /// Shape operator II_ij ∂^i X ⊗ ∂^j X in ambient form.
    pub fn shape_operator(&self) -> AmbientTensorField {
        (0..self.len())
            .map(|k| {
                let mut m = M3::zeros();
                for i in 0..2 {
                    for j in 0..2 {
                        m += self.dual[i][k] * self.dual[j][k].transpose() * self.ii[k][(i, j)];
                    }
                }
                m
            })
            .collect()
    }

    pub fn shape_operator_field(&self) -> TangentField {
        TangentField {
            variance: vec![Variance::Co, Variance::Co],
            comps: (0..4)
                .map(|c| self.ii.iter().map(|m| m[(c >> 1, c & 1)]).collect())
                .collect(),
        }
    }

    pub fn levi_civita_field(&self) -> TangentField {
        TangentField {
            variance: vec![Variance::Co, Variance::Co],
            comps: (0..4)
                .map(|c| self.e.iter().map(|m| m[(c >> 1, c & 1)]).collect())
                .collect(),
        }
    }

    pub fn metric_field(&self) -> TangentField {
        TangentField {
            variance: vec![Variance::Co, Variance::Co],
            comps: (0..4)
                .map(|c| self.g.iter().map(|m| m[(c >> 1, c & 1)]).collect())
                .collect(),
        }
    }

    /// Nodewise full contraction <a, b> of two tangential fields.
    pub fn inner(&self, a: &TangentField, b: &TangentField) -> Result<ScalarField> {
        if a.rank() != b.rank() {
            return Err(Error::RankMismatch {
                expected: a.rank(),
                got: b.rank(),
            });
        }
        let target: Vec<Variance> = a
            .variance
            .iter()
            .map(|v| match v {
                Variance::Contra => Variance::Co,
                Variance::Co => Variance::Contra,
            })
            .collect();
        let bb = self.change_variance(b, &target)?;
        let mut out = vec![0.0; a.len()];
        for (ca, cb) in a.comps.iter().zip(&bb.comps) {
            for k in 0..out.len() {
                out[k] += ca[k] * cb[k];
            }
        }
        Ok(out)
    }

    /// Integral of a scalar density against the surface measure.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(&self.sqrtdetg)
            .zip(f)
            .map(|((w, s), v)| w * s * v)
            .sum()
    }

    pub fn area(&self) -> f64 {
        self.integrate(&vec![1.0; self.len()])
    }

    pub fn quadrature_weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Field argument of [`l2_inner`].
#[derive(Clone, Copy, Debug)]
pub enum FieldRef<'a> {
    Scalar(&'a [f64]),
    Tangent(&'a TangentField),
    Ambient(&'a [V3]),
    AmbientTensor(&'a [M3]),
}

impl FieldRef<'_> {
    fn rank(&self) -> usize {
        match self {
            FieldRef::Scalar(_) => 0,
            FieldRef::Tangent(t) => t.rank(),
            FieldRef::Ambient(_) => 1,
            FieldRef::AmbientTensor(_) => 2,
        }
    }
}

enum Nodal {
    S(Vec<f64>),
    V(Vec<V3>),
    M(Vec<M3>),
}

fn nodal(f: FieldRef<'_>, geo: &GeometryCache) -> Result<Nodal> {
    Ok(match f {
        FieldRef::Scalar(s) => Nodal::S(s.to_vec()),
        FieldRef::Ambient(v) => Nodal::V(v.to_vec()),
        FieldRef::AmbientTensor(m) => Nodal::M(m.to_vec()),
        FieldRef::Tangent(t) => match t.rank() {
            0 => Nodal::S(t.comps[0].clone()),
            1 => Nodal::V(geo.vector_to_ambient(t)?),
            2 => Nodal::M(geo.tensor_to_ambient(t)?),
            r => {
                return Err(Error::RankMismatch {
                    expected: 2,
                    got: r,
                })
            }
        },
    })
}

/// Global inner product ∫ <a, b> μ.
pub fn l2_inner(a: FieldRef<'_>, b: FieldRef<'_>, geo: &GeometryCache) -> Result<f64> {
    if a.rank() != b.rank() {
        return Err(Error::RankMismatch {
            expected: a.rank(),
            got: b.rank(),
        });
    }
    let dens: Vec<f64> = match (nodal(a, geo)?, nodal(b, geo)?) {
        (Nodal::S(x), Nodal::S(y)) => x.iter().zip(&y).map(|(p, q)| p * q).collect(),
        (Nodal::V(x), Nodal::V(y)) => x.iter().zip(&y).map(|(p, q)| p.dot(q)).collect(),
        (Nodal::M(x), Nodal::M(y)) => x.iter().zip(&y).map(|(p, q)| p.dot(q)).collect(),
        _ => unreachable!("ranks checked above"),
    };
    Ok(geo.integrate(&dens))
}
