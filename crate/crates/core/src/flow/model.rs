//! Semi-discrete reduced model on the periodic y²-line.
//!
//! State layout is node-major, `x[4 i + c]` with c = 0: f¹, 1: f², 2: Q¹,
//! 3: Q², where Q = F q is the Cartesian director and
//! F = [[1, ∂₂f¹], [0, 1 + ∂₂f²]].
//!
//! U_h = Σ h [ K/2 |D⁺Q|² / b_{i+½} + ω/4 (|Q_i|² − 1)² b_i ] with
//! b_{i+½} = 1 + D⁺f², b_i = 1 + D⁰f². The molecular field and the partial
//! force are the exact L²-gradients of U_h for the weight h b_i, and the
//! centered difference D⁰ used for div σ̄ and ∇V is skew, so the discrete
//! energy rate obeys the continuous identity exactly.

use num_dual::{Dual64, DualNum};

use crate::deformation::GaugeKind;
use crate::frank_oseen::FOParams;

pub const VARS: usize = 4;
/// Dependency radius of the right-hand side in nodes.
pub const STENCIL_RADIUS: usize = 3;

type V2<T> = [T; 2];
type M2<T> = [[T; 2]; 2];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlatModel {
    pub n: usize,
    pub h: f64,
    pub params: FOParams,
    pub gauge: GaugeKind,
    pub deriv: GaugeKind,
}

/// Nodal quantities of the model for one state.
#[derive(Clone, Debug)]
pub struct Evaluation<T> {
    pub b: Vec<T>,
    pub b_half: Vec<T>,
    pub m: Vec<V2<T>>,
    pub partial: Vec<V2<T>>,
    pub sbar: Vec<M2<T>>,
    pub v: Vec<V2<T>>,
    pub grad_v: Vec<M2<T>>,
    pub qdot: Vec<V2<T>>,
    pub u_grad: T,
    pub u_r: T,
}

fn factor<T: DualNum<Primitive = f64> + Copy>(kind: GaugeKind, g: &M2<T>) -> M2<T> {
    let z = T::from(0.0);
    match kind {
        GaugeKind::Material => [[z, z], [z, z]],
        GaugeKind::Upper => *g,
        GaugeKind::Lower => [[-g[0][0], -g[1][0]], [-g[0][1], -g[1][1]]],
        GaugeKind::Jaumann => {
            let a = (g[0][1] - g[1][0]) * 0.5;
            [[z, a], [-a, z]]
        }
        k => unreachable!("{k:?} is not a vector gauge"),
    }
}

fn mat_vec<T: DualNum<Primitive = f64> + Copy>(m: &M2<T>, v: &V2<T>) -> V2<T> {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

impl FlatModel {
    pub fn len(&self) -> usize {
        self.n * VARS
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn next(&self, i: usize) -> usize {
        (i + 1) % self.n
    }

    fn prev(&self, i: usize) -> usize {
        (i + self.n - 1) % self.n
    }

    pub fn evaluate<T: DualNum<Primitive = f64> + Copy>(&self, x: &[T]) -> Evaluation<T> {
        let n = self.n;
        let h = self.h;
        let (k, omega, lambda) = (self.params.k, self.params.omega, self.params.lambda);
        let f2 = |i: usize| x[VARS * i + 1];
        let q = |i: usize| -> V2<T> { [x[VARS * i + 2], x[VARS * i + 3]] };
        let z = T::from(0.0);

        let b: Vec<T> = (0..n)
            .map(|i| (f2(self.next(i)) - f2(self.prev(i))) / (2.0 * h) + 1.0)
            .collect();
        let b_half: Vec<T> = (0..n)
            .map(|i| (f2(self.next(i)) - f2(i)) / h + 1.0)
            .collect();
        let s: Vec<T> = (0..n)
            .map(|i| {
                let v = q(i);
                v[0] * v[0] + v[1] * v[1] - 1.0
            })
            .collect();
        let dq: Vec<V2<T>> = (0..n)
            .map(|i| {
                let (a, c) = (q(i), q(self.next(i)));
                [(c[0] - a[0]) / h, (c[1] - a[1]) / h]
            })
            .collect();
        let flux: Vec<V2<T>> = (0..n)
            .map(|i| [dq[i][0] / b_half[i], dq[i][1] / b_half[i]])
            .collect();
        let e: Vec<T> = (0..n)
            .map(|i| (dq[i][0] * dq[i][0] + dq[i][1] * dq[i][1]) * (0.5 * k) / (b_half[i] * b_half[i]))
            .collect();
        let p: Vec<T> = s.iter().map(|&v| v * v * (0.25 * omega)).collect();

        let mut u_grad = z;
        let mut u_r = z;
        for i in 0..n {
            u_grad += (dq[i][0] * dq[i][0] + dq[i][1] * dq[i][1]) * (0.5 * k * h) / b_half[i];
            u_r += p[i] * b[i] * h;
        }

        let m: Vec<V2<T>> = (0..n)
            .map(|i| {
                let j = self.prev(i);
                let qi = q(i);
                let c = -k / h;
                [
                    (flux[i][0] - flux[j][0]) * c / b[i] + s[i] * qi[0] * omega,
                    (flux[i][1] - flux[j][1]) * c / b[i] + s[i] * qi[1] * omega,
                ]
            })
            .collect();
        let partial: Vec<V2<T>> = (0..n)
            .map(|i| {
                let (jm, jp) = (self.prev(i), self.next(i));
                [
                    z,
                    ((e[i] - e[jm]) / h - (p[jp] - p[jm]) / (2.0 * h)) / b[i],
                ]
            })
            .collect();
        let sbar: Vec<M2<T>> = (0..n)
            .map(|i| {
                let (mi, qi) = (m[i], q(i));
                let mq = [[mi[0] * qi[0], mi[0] * qi[1]], [mi[1] * qi[0], mi[1] * qi[1]]];
                match self.gauge {
                    GaugeKind::Material => [[z, z], [z, z]],
                    GaugeKind::Upper => mq,
                    GaugeKind::Lower => [[-mq[0][0], -mq[1][0]], [-mq[0][1], -mq[1][1]]],
                    GaugeKind::Jaumann => {
                        let a = (mq[0][1] - mq[1][0]) * 0.5;
                        [[z, a], [-a, z]]
                    }
                    g => unreachable!("{g:?} is not a vector gauge"),
                }
            })
            .collect();
        let v: Vec<V2<T>> = (0..n)
            .map(|i| {
                let (jm, jp) = (self.prev(i), self.next(i));
                let c = b[i] * (2.0 * h);
                [
                    (sbar[jp][0][1] - sbar[jm][0][1]) / c - partial[i][0],
                    (sbar[jp][1][1] - sbar[jm][1][1]) / c - partial[i][1],
                ]
            })
            .collect();
        let grad_v: Vec<M2<T>> = (0..n)
            .map(|i| {
                let (jm, jp) = (self.prev(i), self.next(i));
                let c = b[i] * (2.0 * h);
                [
                    [z, (v[jp][0] - v[jm][0]) * lambda / c],
                    [z, (v[jp][1] - v[jm][1]) * lambda / c],
                ]
            })
            .collect();
        let qdot: Vec<V2<T>> = (0..n)
            .map(|i| {
                let phi_q = mat_vec(&factor(self.deriv, &grad_v[i]), &q(i));
                [phi_q[0] - m[i][0] * lambda, phi_q[1] - m[i][1] * lambda]
            })
            .collect();

        Evaluation {
            b,
            b_half,
            m,
            partial,
            sbar,
            v,
            grad_v,
            qdot,
            u_grad,
            u_r,
        }
    }

    /// Time derivative of the state: (λ v, Q̇) per node.
    pub fn rhs<T: DualNum<Primitive = f64> + Copy>(&self, x: &[T]) -> Vec<T> {
        let ev = self.evaluate(x);
        let lambda = self.params.lambda;
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.n {
            out.push(ev.v[i][0] * lambda);
            out.push(ev.v[i][1] * lambda);
            out.push(ev.qdot[i][0]);
            out.push(ev.qdot[i][1]);
        }
        out
    }

    pub fn energy<T: DualNum<Primitive = f64> + Copy>(&self, x: &[T]) -> T {
        let ev = self.evaluate(x);
        ev.u_grad + ev.u_r
    }

    /// Directional derivative of U_h at x along d.
    pub fn energy_rate(&self, x: &[f64], d: &[f64]) -> f64 {
        let xd: Vec<Dual64> = x.iter().zip(d).map(|(&a, &b)| Dual64::new(a, b)).collect();
        self.energy(&xd).eps
    }

    /// ‖∇U‖² = Σ h b (|m|² + |v|²).
    pub fn gradient_norm2(&self, ev: &Evaluation<f64>) -> f64 {
        (0..self.n)
            .map(|i| {
                let m = ev.m[i];
                let v = ev.v[i];
                self.h * ev.b[i] * (m[0] * m[0] + m[1] * m[1] + v[0] * v[0] + v[1] * v[1])
            })
            .sum()
    }

    /// ⟨δU/δq, (Φ − Ψ) Q⟩ for the model's time derivative and gauge.
    pub fn cross_term(&self, x: &[f64], ev: &Evaluation<f64>) -> f64 {
        (0..self.n)
            .map(|i| {
                let qi = [x[VARS * i + 2], x[VARS * i + 3]];
                let phi = factor(self.deriv, &ev.grad_v[i]);
                let psi = factor(self.gauge, &ev.grad_v[i]);
                let d = [
                    [phi[0][0] - psi[0][0], phi[0][1] - psi[0][1]],
                    [phi[1][0] - psi[1][0], phi[1][1] - psi[1][1]],
                ];
                let r = mat_vec(&d, &qi);
                self.h * ev.b[i] * (ev.m[i][0] * r[0] + ev.m[i][1] * r[1])
            })
            .sum()
    }

    /// Number of seeding colors: the smallest divisor of n that is at least
    /// 2·radius + 1, so columns of one color never share a row.
    pub fn colors(&self) -> usize {
        let min = 2 * STENCIL_RADIUS + 1;
        (min..=self.n).find(|c| self.n % c == 0).unwrap_or(self.n)
    }

    /// Exact Jacobian of [`FlatModel::rhs`] as a list of (row, col, value),
    /// obtained from forward-mode duals with colored seeding.
    pub fn jacobian(&self, x: &[f64]) -> Vec<(usize, usize, f64)> {
        let n = self.n;
        let colors = self.colors();
        let r = STENCIL_RADIUS;
        let mut out = Vec::new();
        for color in 0..colors {
            for var in 0..VARS {
                let xd: Vec<Dual64> = x
                    .iter()
                    .enumerate()
                    .map(|(idx, &v)| {
                        let seeded = idx % VARS == var && (idx / VARS) % colors == color;
                        Dual64::new(v, if seeded { 1.0 } else { 0.0 })
                    })
                    .collect();
                let f = self.rhs(&xd);
                for i in 0..n {
                    // the seeded node within the stencil of row node i
                    let node = (0..=2 * r)
                        .map(|d| (i + n + d - r) % n)
                        .find(|j| j % colors == color);
                    let Some(j) = node else { continue };
                    for c in 0..VARS {
                        let val = f[VARS * i + c].eps;
                        if val != 0.0 {
                            out.push((VARS * i + c, VARS * j + var, val));
                        }
                    }
                }
            }
        }
        out
    }
}
