//! Parameter grid, differentiation and quadrature.
//!
//! Periodic directions are differentiated spectrally (FFT, Nyquist mode
//! dropped). Non-periodic directions use Fornberg finite-difference stencils of
//! configurable order, centered in the interior and shifted at the ends.

use std::fmt;
use std::sync::Arc;

use nalgebra::Vector3;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterGrid {
    pub n1: usize,
    pub n2: usize,
    pub h1: f64,
    pub h2: f64,
    pub periodic1: bool,
    pub periodic2: bool,
    pub origin1: f64,
    pub origin2: f64,
    /// Accuracy order of the stencils on non-periodic directions.
    pub fd_order: usize,
}

impl ParameterGrid {
    pub fn new(
        n: [usize; 2],
        h: [f64; 2],
        periodic: [bool; 2],
        origin: [f64; 2],
    ) -> Result<Self> {
        let g = ParameterGrid {
            n1: n[0],
            n2: n[1],
            h1: h[0],
            h2: h[1],
            periodic1: periodic[0],
            periodic2: periodic[1],
            origin1: origin[0],
            origin2: origin[1],
            fd_order: 6,
        };
        g.validate()?;
        Ok(g)
    }

    /// Doubly periodic grid covering `[0, l1) x [0, l2)`.
    pub fn periodic(n1: usize, n2: usize, l1: f64, l2: f64) -> Result<Self> {
        Self::new(
            [n1, n2],
            [l1 / n1 as f64, l2 / n2 as f64],
            [true, true],
            [0.0, 0.0],
        )
    }

    /// Closed rectangle `[a1, b1] x [a2, b2]` including both end nodes.
    pub fn closed(n1: usize, n2: usize, a: [f64; 2], b: [f64; 2]) -> Result<Self> {
        if n1 < 2 || n2 < 2 {
            return Err(Error::BadConfig("grid needs at least 4 nodes per direction".into()));
        }
        Self::new(
            [n1, n2],
            [(b[0] - a[0]) / (n1 - 1) as f64, (b[1] - a[1]) / (n2 - 1) as f64],
            [false, false],
            a,
        )
    }

    pub fn with_fd_order(mut self, order: usize) -> Result<Self> {
        self.fd_order = order;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n1 < 4 || self.n2 < 4 {
            return Err(Error::BadConfig(format!(
                "grid needs n1, n2 >= 4 (got {} x {})",
                self.n1, self.n2
            )));
        }
        if !(self.h1 > 0.0 && self.h2 > 0.0 && self.h1.is_finite() && self.h2.is_finite()) {
            return Err(Error::BadConfig("grid spacings must be positive".into()));
        }
        if self.fd_order < 2 || self.fd_order % 2 != 0 {
            return Err(Error::BadConfig(format!(
                "fd_order must be even and >= 2 (got {})",
                self.fd_order
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n(&self, axis: usize) -> usize {
        if axis == 0 {
            self.n1
        } else {
            self.n2
        }
    }

    pub fn h(&self, axis: usize) -> f64 {
        if axis == 0 {
            self.h1
        } else {
            self.h2
        }
    }

    pub fn is_periodic(&self, axis: usize) -> bool {
        if axis == 0 {
            self.periodic1
        } else {
            self.periodic2
        }
    }

    /// Extent of the parameter domain along `axis` (period length if periodic).
    pub fn extent(&self, axis: usize) -> f64 {
        let n = self.n(axis) as f64;
        if self.is_periodic(axis) {
            n * self.h(axis)
        } else {
            (n - 1.0) * self.h(axis)
        }
    }

    #[inline]
    pub fn idx(&self, i1: usize, i2: usize) -> usize {
        i1 * self.n2 + i2
    }

    #[inline]
    pub fn coords(&self, k: usize) -> (f64, f64) {
        let i1 = k / self.n2;
        let i2 = k % self.n2;
        (
            self.origin1 + i1 as f64 * self.h1,
            self.origin2 + i2 as f64 * self.h2,
        )
    }

    fn axis_weights(&self, axis: usize) -> Vec<f64> {
        let n = self.n(axis);
        let h = self.h(axis);
        let mut w = vec![h; n];
        if !self.is_periodic(axis) {
            w[0] = 0.5 * h;
            w[n - 1] = 0.5 * h;
        }
        w
    }

    /// Quadrature weights: midpoint on periodic directions, trapezoid otherwise.
    pub fn weights(&self) -> Vec<f64> {
        let w1 = self.axis_weights(0);
        let w2 = self.axis_weights(1);
        let mut w = Vec::with_capacity(self.len());
        for a in &w1 {
            for b in &w2 {
                w.push(a * b);
            }
        }
        w
    }

    pub fn sample<F: Fn(f64, f64) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.len())
            .map(|k| {
                let (y1, y2) = self.coords(k);
                f(y1, y2)
            })
            .collect()
    }
}

/// Finite-difference weights for the first derivative at `x0` on nodes `x`.
pub fn fornberg_first(x0: f64, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    // c[j][m]: weight of node j for derivative order m (m = 0, 1)
    let mut c = vec![[0.0f64; 2]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = x[0] - x0;
    for i in 1..n {
        let mn = i.min(1);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - x0;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for m in (1..=mn).rev() {
                    c[i][m] = c1 * (m as f64 * c[i - 1][m - 1] - c5 * c[i - 1][m]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for m in (1..=mn).rev() {
                c[j][m] = (c4 * c[j][m] - m as f64 * c[j][m - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|w| w[1]).collect()
}

#[derive(Clone)]
enum AxisOp {
    Spectral {
        n: usize,
        fwd: Arc<dyn Fft<f64>>,
        inv: Arc<dyn Fft<f64>>,
        /// i*k per mode, Nyquist zeroed, already divided by n
        ik: Vec<f64>,
    },
    Stencil {
        /// per node: first index and weights
        rows: Vec<(usize, Vec<f64>)>,
    },
}

impl AxisOp {
    fn build(grid: &ParameterGrid, axis: usize) -> AxisOp {
        let n = grid.n(axis);
        let h = grid.h(axis);
        if grid.is_periodic(axis) {
            let mut planner = FftPlanner::new();
            let fwd = planner.plan_fft_forward(n);
            let inv = planner.plan_fft_inverse(n);
            let len = n as f64 * h;
            let ik = (0..n)
                .map(|m| {
                    let mm = if 2 * m < n {
                        m as f64
                    } else if 2 * m == n {
                        0.0
                    } else {
                        m as f64 - n as f64
                    };
                    2.0 * std::f64::consts::PI * mm / len / n as f64
                })
                .collect();
            AxisOp::Spectral { n, fwd, inv, ik }
        } else {
            let width = (grid.fd_order + 1).min(n);
            let half = width / 2;
            let rows = (0..n)
                .map(|i| {
                    let start = i.saturating_sub(half).min(n - width);
                    let nodes: Vec<f64> = (start..start + width).map(|j| j as f64 * h).collect();
                    (start, fornberg_first(i as f64 * h, &nodes))
                })
                .collect();
            AxisOp::Stencil { rows }
        }
    }

    fn apply_line(&self, line: &mut [f64], scratch: &mut Vec<Complex<f64>>) {
        match self {
            AxisOp::Spectral { n, fwd, inv, ik } => {
                scratch.clear();
                scratch.extend(line.iter().map(|&v| Complex::new(v, 0.0)));
                fwd.process(scratch);
                for (c, &k) in scratch.iter_mut().zip(ik) {
                    *c = Complex::new(-c.im * k, c.re * k);
                }
                inv.process(scratch);
                for (v, c) in line.iter_mut().zip(scratch.iter()) {
                    *v = c.re;
                }
                debug_assert_eq!(line.len(), *n);
            }
            AxisOp::Stencil { rows } => {
                let src: Vec<f64> = line.to_vec();
                for (i, (start, w)) in rows.iter().enumerate() {
                    line[i] = w.iter().zip(&src[*start..]).map(|(a, b)| a * b).sum();
                }
            }
        }
    }
}

/// Differentiation operators bound to one grid. Cheap to clone.
#[derive(Clone)]
pub struct GridOps {
    pub grid: ParameterGrid,
    axes: Arc<[AxisOp; 2]>,
}

impl fmt::Debug for GridOps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridOps").field("grid", &self.grid).finish()
    }
}

impl GridOps {
    pub fn new(grid: &ParameterGrid) -> Self {
        GridOps {
            grid: grid.clone(),
            axes: Arc::new([AxisOp::build(grid, 0), AxisOp::build(grid, 1)]),
        }
    }

    /// Partial derivative of a scalar field along `axis`.
    pub fn d(&self, f: &[f64], axis: usize) -> Vec<f64> {
        let g = &self.grid;
        assert_eq!(f.len(), g.len(), "field length does not match grid");
        let op = &self.axes[axis];
        let mut out = f.to_vec();
        let mut scratch = Vec::new();
        if axis == 1 {
            for row in out.chunks_mut(g.n2) {
                op.apply_line(row, &mut scratch);
            }
        } else {
            let mut line = vec![0.0; g.n1];
            for i2 in 0..g.n2 {
                for i1 in 0..g.n1 {
                    line[i1] = out[g.idx(i1, i2)];
                }
                op.apply_line(&mut line, &mut scratch);
                for i1 in 0..g.n1 {
                    out[g.idx(i1, i2)] = line[i1];
                }
            }
        }
        out
    }

    pub fn grad(&self, f: &[f64]) -> [Vec<f64>; 2] {
        [self.d(f, 0), self.d(f, 1)]
    }

    pub fn d_vec3(&self, f: &[Vector3<f64>], axis: usize) -> Vec<Vector3<f64>> {
        let comps: Vec<Vec<f64>> = (0..3)
            .map(|c| self.d(&f.iter().map(|v| v[c]).collect::<Vec<_>>(), axis))
            .collect();
        (0..f.len())
            .map(|k| Vector3::new(comps[0][k], comps[1][k], comps[2][k]))
            .collect()
    }

    /// Integral of a scalar density over the parameter domain.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.grid
            .weights()
            .iter()
            .zip(f)
            .map(|(w, v)| w * v)
            .sum()
    }
}
