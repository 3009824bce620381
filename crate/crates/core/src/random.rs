//! Seeded smooth random fields built from low-order Fourier series.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::field::{AmbientField, AmbientTensorField, ScalarField, TangentField, Variance};
use crate::geometry::{GeometryCache, M3, V3};
use crate::grid::ParameterGrid;

/// Sum over wave numbers |k1|, |k2| <= `modes` of random cos/sin terms, decaying
/// like 1/(1 + |k|^2). Periodic on periodic directions of the grid.
pub fn fourier_scalar(grid: &ParameterGrid, seed: u64, modes: i32, amplitude: f64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l1 = grid.extent(0);
    let l2 = grid.extent(1);
    let mut terms = Vec::new();
    for k1 in -modes..=modes {
        for k2 in 0..=modes {
            if k2 == 0 && k1 < 0 {
                continue;
            }
            let decay = 1.0 / (1.0 + (k1 * k1 + k2 * k2) as f64);
            let a: f64 = rng.gen_range(-1.0..1.0) * decay;
            let b: f64 = rng.gen_range(-1.0..1.0) * decay;
            terms.push((k1 as f64, k2 as f64, a, b));
        }
    }
    grid.sample(|y1, y2| {
        amplitude
            * terms
                .iter()
                .map(|&(k1, k2, a, b)| {
                    let ph = 2.0 * PI * (k1 * y1 / l1 + k2 * y2 / l2);
                    a * ph.cos() + b * ph.sin()
                })
                .sum::<f64>()
    })
}

pub fn fourier_ambient(grid: &ParameterGrid, seed: u64, modes: i32, amplitude: f64) -> AmbientField {
    let c: Vec<ScalarField> = (0..3)
        .map(|i| fourier_scalar(grid, seed.wrapping_mul(31).wrapping_add(i), modes, amplitude))
        .collect();
    (0..grid.len())
        .map(|k| V3::new(c[0][k], c[1][k], c[2][k]))
        .collect()
}

pub fn fourier_ambient_tensor(
    grid: &ParameterGrid,
    seed: u64,
    modes: i32,
    amplitude: f64,
) -> AmbientTensorField {
    let c: Vec<ScalarField> = (0..9)
        .map(|i| fourier_scalar(grid, seed.wrapping_mul(37).wrapping_add(i), modes, amplitude))
        .collect();
    (0..grid.len())
        .map(|k| M3::from_fn(|r, s| c[3 * r + s][k]))
        .collect()
}

/// Random tangential vector field with contravariant proxy components.
pub fn fourier_tangent_vector(geo: &GeometryCache, seed: u64, modes: i32, amplitude: f64) -> TangentField {
    let g = geo.grid();
    TangentField::vector(
        Variance::Contra,
        fourier_scalar(g, seed.wrapping_mul(41), modes, amplitude),
        fourier_scalar(g, seed.wrapping_mul(41).wrapping_add(1), modes, amplitude),
    )
}

/// Random tangential 2-tensor field with contravariant proxy components.
pub fn fourier_tangent_tensor(geo: &GeometryCache, seed: u64, modes: i32, amplitude: f64) -> TangentField {
    let g = geo.grid();
    TangentField {
        variance: vec![Variance::Contra, Variance::Contra],
        comps: (0..4)
            .map(|i| fourier_scalar(g, seed.wrapping_mul(43).wrapping_add(i), modes, amplitude))
            .collect(),
    }
}
