//! Parameterized surface patches: samples of X and its first and second
//! parameter derivatives.

use std::f64::consts::PI;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::grid::{GridOps, ParameterGrid};

pub type V3 = Vector3<f64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PatchSource {
    /// Derivatives from closed-form expressions.
    Analytic,
    /// Derivatives computed numerically from samples.
    Sampled,
}

#[derive(Clone, Debug)]
pub struct SurfacePatch {
    pub grid: ParameterGrid,
    pub x: Vec<V3>,
    pub dx: [Vec<V3>; 2],
    pub ddx: [[Vec<V3>; 2]; 2],
    pub source: PatchSource,
}

/// Point value, first and second derivatives of a parameterization.
pub type Jet = (V3, [V3; 2], [[V3; 2]; 2]);

impl SurfacePatch {
    /// Builds a patch from a closure returning exact derivatives.
    pub fn analytic<F: Fn(f64, f64) -> Jet>(grid: &ParameterGrid, f: F) -> Self {
        let n = grid.len();
        let mut x = Vec::with_capacity(n);
        let mut dx = [Vec::with_capacity(n), Vec::with_capacity(n)];
        let mut ddx = [
            [Vec::with_capacity(n), Vec::with_capacity(n)],
            [Vec::with_capacity(n), Vec::with_capacity(n)],
        ];
        for k in 0..n {
            let (y1, y2) = grid.coords(k);
            let (p, d, dd) = f(y1, y2);
            x.push(p);
            for i in 0..2 {
                dx[i].push(d[i]);
                for j in 0..2 {
                    ddx[i][j].push(dd[i][j]);
                }
            }
        }
        SurfacePatch {
            grid: grid.clone(),
            x,
            dx,
            ddx,
            source: PatchSource::Analytic,
        }
    }

    /// Builds a patch from samples of X. On periodic directions X may jump by a
    /// lattice vector `periods[i]` across one period; that linear part is
    /// removed before differentiating and added back afterwards.
    pub fn sampled(grid: &ParameterGrid, x: Vec<V3>, periods: [V3; 2]) -> Result<Self> {
        if x.len() != grid.len() {
            return Err(Error::BadConfig(format!(
                "sample count {} does not match grid size {}",
                x.len(),
                grid.len()
            )));
        }
        let ops = GridOps::new(grid);
        let slope = [
            periods[0] / grid.extent(0),
            periods[1] / grid.extent(1),
        ];
        let periodic_part: Vec<V3> = x
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let (y1, y2) = grid.coords(k);
                p - slope[0] * y1 - slope[1] * y2
            })
            .collect();
        let d0 = ops.d_vec3(&periodic_part, 0);
        let d1 = ops.d_vec3(&periodic_part, 1);
        let dd00 = ops.d_vec3(&d0, 0);
        let dd11 = ops.d_vec3(&d1, 1);
        let dd01 = ops.d_vec3(&d0, 1);
        let dx = [
            d0.iter().map(|v| v + slope[0]).collect(),
            d1.iter().map(|v| v + slope[1]).collect(),
        ];
        Ok(SurfacePatch {
            grid: grid.clone(),
            x,
            dx,
            ddx: [[dd00, dd01.clone()], [dd01, dd11]],
            source: PatchSource::Sampled,
        })
    }

    /// X + eps*W with derivatives of W taken numerically on the grid.
    pub fn displaced(&self, w: &[V3], eps: f64) -> Self {
        let ops = GridOps::new(&self.grid);
        let dw = [ops.d_vec3(w, 0), ops.d_vec3(w, 1)];
        let ddw01 = ops.d_vec3(&dw[0], 1);
        let ddw = [
            [ops.d_vec3(&dw[0], 0), ddw01.clone()],
            [ddw01, ops.d_vec3(&dw[1], 1)],
        ];
        self.displaced_with(w, &dw, &ddw, eps)
    }

    /// X + eps*W with supplied derivatives of W.
    pub fn displaced_with(
        &self,
        w: &[V3],
        dw: &[Vec<V3>; 2],
        ddw: &[[Vec<V3>; 2]; 2],
        eps: f64,
    ) -> Self {
        let add = |a: &[V3], b: &[V3]| -> Vec<V3> {
            a.iter().zip(b).map(|(p, q)| p + q * eps).collect()
        };
        SurfacePatch {
            grid: self.grid.clone(),
            x: add(&self.x, w),
            dx: [add(&self.dx[0], &dw[0]), add(&self.dx[1], &dw[1])],
            ddx: [
                [add(&self.ddx[0][0], &ddw[0][0]), add(&self.ddx[0][1], &ddw[0][1])],
                [add(&self.ddx[1][0], &ddw[1][0]), add(&self.ddx[1][1], &ddw[1][1])],
            ],
            source: self.source,
        }
    }

    /// Flat plane X = (y1, y2, 0).
    pub fn flat(grid: &ParameterGrid) -> Self {
        Self::analytic(grid, |a, b| {
            (
                V3::new(a, b, 0.0),
                [V3::x(), V3::y()],
                [[V3::zeros(); 2]; 2],
            )
        })
    }

    /// Unit sphere in (theta, phi) coordinates.
    pub fn sphere(grid: &ParameterGrid) -> Self {
        Self::analytic(grid, |t, p| {
            let (st, ct) = t.sin_cos();
            let (sp, cp) = p.sin_cos();
            let x = V3::new(st * cp, st * sp, ct);
            let xt = V3::new(ct * cp, ct * sp, -st);
            let xp = V3::new(-st * sp, st * cp, 0.0);
            let xtt = -x;
            let xtp = V3::new(-ct * sp, ct * cp, 0.0);
            let xpp = V3::new(-st * cp, -st * sp, 0.0);
            (x, [xt, xp], [[xtt, xtp], [xtp, xpp]])
        })
    }

    /// Sphere grid avoiding the poles: theta in [margin, pi - margin], phi periodic.
    pub fn sphere_grid(n_theta: usize, n_phi: usize, margin: f64) -> Result<ParameterGrid> {
        let h1 = (PI - 2.0 * margin) / (n_theta - 1) as f64;
        ParameterGrid::new(
            [n_theta, n_phi],
            [h1, 2.0 * PI / n_phi as f64],
            [false, true],
            [margin, 0.0],
        )
    }

    /// Graph z = amp * sin(2 pi y1) cos(2 pi y2).
    pub fn graph(grid: &ParameterGrid, amp: f64) -> Self {
        let k = 2.0 * PI;
        Self::analytic(grid, move |a, b| {
            let (sa, ca) = (k * a).sin_cos();
            let (sb, cb) = (k * b).sin_cos();
            let z = amp * sa * cb;
            let za = amp * k * ca * cb;
            let zb = -amp * k * sa * sb;
            let zaa = -amp * k * k * sa * cb;
            let zab = -amp * k * k * ca * sb;
            let zbb = -amp * k * k * sa * cb;
            (
                V3::new(a, b, z),
                [V3::new(1.0, 0.0, za), V3::new(0.0, 1.0, zb)],
                [
                    [V3::new(0.0, 0.0, zaa), V3::new(0.0, 0.0, zab)],
                    [V3::new(0.0, 0.0, zab), V3::new(0.0, 0.0, zbb)],
                ],
            )
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}
