//! Banded LU with partial pivoting and iterative refinement.

use crate::error::{Error, Result};

/// Square band matrix with `kl` sub- and `ku` super-diagonals.
#[derive(Clone, Debug)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = kl + ku + 1;
        BandMatrix {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[i * self.width + j + self.kl - i]
        } else {
            0.0
        }
    }

    /// Panics outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside band");
        self.data[i * self.width + j + self.kl - i] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j).abs()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn factor(&self) -> Result<BandLu> {
        BandLu::new(self)
    }
}

/// LU factors; U has `kl + ku` super-diagonals after pivoting.
#[derive(Clone, Debug)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
    piv: Vec<usize>,
}

impl BandLu {
    fn at(&self, i: usize, j: usize) -> usize {
        i * self.width + j + self.kl - i
    }

    fn new(a: &BandMatrix) -> Result<Self> {
        let (n, kl, ku) = (a.n, a.kl, a.ku);
        let uw = kl + ku;
        let width = kl + uw + 1;
        let mut lu = BandLu {
            n,
            kl,
            ku: uw,
            width,
            data: vec![0.0; n * width],
            piv: vec![0; n],
        };
        for i in 0..n {
            let lo = i.saturating_sub(kl);
            let hi = (i + ku).min(n.saturating_sub(1));
            for j in lo..=hi {
                let k = lu.at(i, j);
                lu.data[k] = a.get(i, j);
            }
        }
        let scale = a.norm_inf().max(f64::MIN_POSITIVE);
        for j in 0..n {
            let last = (j + kl).min(n - 1);
            let (mut p, mut best) = (j, 0.0);
            for i in j..=last {
                let v = lu.data[lu.at(i, j)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= 1e-14 * scale {
                return Err(Error::SolverFailure {
                    t: f64::NAN,
                    reason: format!("singular pivot in column {j}"),
                });
            }
            lu.piv[j] = p;
            let right = (j + uw).min(n - 1);
            if p != j {
                for c in j..=right {
                    let (x, y) = (lu.at(j, c), lu.at(p, c));
                    lu.data.swap(x, y);
                }
            }
            let d = lu.data[lu.at(j, j)];
            for i in j + 1..=last {
                let l = lu.data[lu.at(i, j)] / d;
                let li = lu.at(i, j);
                lu.data[li] = l;
                if l != 0.0 {
                    for c in j + 1..=right {
                        let u = lu.data[lu.at(j, c)];
                        let k = lu.at(i, c);
                        lu.data[k] -= l * u;
                    }
                }
            }
        }
        Ok(lu)
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = b.to_vec();
        for j in 0..n {
            x.swap(j, self.piv[j]);
            let last = (j + self.kl).min(n - 1);
            let xj = x[j];
            for i in j + 1..=last {
                x[i] -= self.data[self.at(i, j)] * xj;
            }
        }
        for i in (0..n).rev() {
            let right = (i + self.ku).min(n - 1);
            let mut s = x[i];
            for c in i + 1..=right {
                s -= self.data[self.at(i, c)] * x[c];
            }
            x[i] = s / self.data[self.at(i, i)];
        }
        x
    }
}

/// Solution of A x = b refined until ‖b − Ax‖∞ ≤ tol·(‖A‖‖x‖ + ‖b‖).
/// Returns x and the final relative residual.
pub fn solve_refined(a: &BandMatrix, b: &[f64], tol: f64) -> Result<(Vec<f64>, f64)> {
    let lu = a.factor()?;
    let mut x = lu.solve(b);
    let an = a.norm_inf();
    let bn = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut resid = f64::INFINITY;
    for _ in 0..6 {
        let ax = a.mul_vec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let xn = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let denom = (an * xn + bn).max(f64::MIN_POSITIVE);
        resid = r.iter().fold(0.0f64, |m, v| m.max(v.abs())) / denom;
        if resid <= tol || !resid.is_finite() {
            break;
        }
        let dx = lu.solve(&r);
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += d;
        }
    }
    if !(resid <= tol) {
        return Err(Error::SolverFailure {
            t: f64::NAN,
            reason: format!("linear residual {resid:.3e} above tolerance {tol:.1e}"),
        });
    }
    Ok((x, resid))
}

/// Node order 0, n−1, 1, n−2, ...: periodic neighbors at distance d end up
/// at most 2d positions apart, so a periodic stencil becomes banded.
pub fn folded_order(n: usize) -> Vec<usize> {
    (0..n)
        .map(|k| if k % 2 == 0 { k / 2 } else { n - 1 - k / 2 })
        .collect()
}

/// Inverse of [`folded_order`].
pub fn folded_position(n: usize) -> Vec<usize> {
    let mut pos = vec![0; n];
    for (k, node) in folded_order(n).into_iter().enumerate() {
        pos[node] = k;
    }
    pos
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_band(n: usize, kl: usize, ku: usize, seed: u64) -> BandMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = BandMatrix::zeros(n, kl, ku);
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                a.add(i, j, rng.gen_range(-1.0..1.0));
            }
        }
        a
    }

    #[test]
    fn matches_dense_lu() {
        for (n, kl, ku, seed) in [(40, 3, 5, 1), (60, 7, 2, 2), (25, 0, 0, 3), (30, 29, 29, 4)] {
            let mut a = random_band(n, kl, ku, seed);
            // weak diagonal so pivoting is exercised
            for i in 0..n {
                a.add(i, i, 0.01);
            }
            let dense = DMatrix::from_fn(n, n, |i, j| a.get(i, j));
            let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
            let (x, res) = solve_refined(&a, &b, 1e-13).unwrap();
            let xd = dense.lu().solve(&DVector::from_vec(b.clone())).unwrap();
            let err = x.iter().zip(xd.iter()).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
            let scale = xd.amax();
            assert!(err < 1e-9 * scale, "n={n}: {err}");
            assert!(res <= 1e-13);
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = BandMatrix::zeros(5, 1, 1);
        assert!(matches!(a.factor(), Err(Error::SolverFailure { .. })));
    }

    #[test]
    fn folded_order_bands_periodic_neighbors() {
        for n in [8, 9, 100, 101] {
            let pos = folded_position(n);
            for i in 0..n {
                for d in 1..=3 {
                    let j = (i + d) % n;
                    assert!(pos[i].abs_diff(pos[j]) <= 2 * d, "n={n} i={i} d={d}");
                }
            }
            let order = folded_order(n);
            let mut sorted = order.clone();
            sorted.sort();
            assert_eq!(sorted, (0..n).collect::<Vec<_>>());
        }
    }
}
