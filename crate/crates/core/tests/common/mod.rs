//! Brute-force reference implementations used as test oracles.
//!
//! Everything here enumerates states with explicit loops over spins and pairs
//! and never calls into the library's transform-based evaluation.

#![allow(dead_code)]

use hopfield_md::rng::GaussianSampler;
use hopfield_md::{ModelShape, ParamVector};

pub fn spins_of(state: usize, n: usize) -> Vec<f64> {
    (0..n).map(|i| if (state >> i) & 1 == 1 { 1.0 } else { -1.0 }).collect()
}

/// Operators in slot order, built with nested loops.
pub fn operators(state: usize, n: usize) -> Vec<f64> {
    let s = spins_of(state, n);
    let mut o = s.clone();
    for j in 0..n {
        for k in j + 1..n {
            o.push(s[j] * s[k]);
        }
    }
    o
}

pub fn energy(theta: &[f64], state: usize, n: usize) -> f64 {
    let s = spins_of(state, n);
    let mut e = 0.0;
    for i in 0..n {
        e += theta[i] * s[i];
    }
    let mut slot = n;
    for j in 0..n {
        for k in j + 1..n {
            e += theta[slot] * s[j] * s[k];
            slot += 1;
        }
    }
    e
}

pub fn log_partition(theta: &[f64], n: usize) -> f64 {
    let energies: Vec<f64> = (0..1usize << n).map(|x| energy(theta, x, n)).collect();
    let max = energies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max + energies.iter().map(|e| (e - max).exp()).sum::<f64>().ln()
}

pub fn probs(theta: &[f64], n: usize) -> Vec<f64> {
    let log_z = log_partition(theta, n);
    (0..1usize << n).map(|x| (energy(theta, x, n) - log_z).exp()).collect()
}

pub fn moments_of(p: &[f64], n: usize) -> Vec<f64> {
    let d = ModelShape::dimension_for(n);
    let mut mu = vec![0.0; d];
    for (x, &px) in p.iter().enumerate() {
        for (m, o) in mu.iter_mut().zip(operators(x, n)) {
            *m += px * o;
        }
    }
    mu
}

pub fn covariance_of(p: &[f64], n: usize) -> Vec<Vec<f64>> {
    let d = ModelShape::dimension_for(n);
    let mu = moments_of(p, n);
    let mut c = vec![vec![0.0; d]; d];
    for (x, &px) in p.iter().enumerate() {
        let o = operators(x, n);
        for i in 0..d {
            for j in 0..d {
                c[i][j] += px * o[i] * o[j];
            }
        }
    }
    for i in 0..d {
        for j in 0..d {
            c[i][j] -= mu[i] * mu[j];
        }
    }
    c
}

pub fn kl(p_hat: &[f64], p: &[f64]) -> f64 {
    p_hat
        .iter()
        .zip(p)
        .filter(|(&a, _)| a > 0.0)
        .map(|(&a, &b)| a * (a / b).ln())
        .sum()
}

/// Gauss–Jordan inverse with partial pivoting.
pub fn inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..d).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..d {
        let pivot = (col..d)
            .max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        let p = m[col][col];
        for v in m[col].iter_mut() {
            *v /= p;
        }
        for row in 0..d {
            if row != col {
                let f = m[row][col];
                if f != 0.0 {
                    for k in 0..2 * d {
                        m[row][k] -= f * m[col][k];
                    }
                }
            }
        }
    }
    m.into_iter().map(|r| r[d..].to_vec()).collect()
}

pub fn mat_vec(a: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

pub fn add_diagonal(a: &[Vec<f64>], eps: f64) -> Vec<Vec<f64>> {
    a.iter()
        .enumerate()
        .map(|(i, row)| row.iter().enumerate().map(|(j, &v)| if i == j { v + eps } else { v }).collect())
        .collect()
}

/// Central first difference of `f` at `x` along every coordinate.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut up = x.to_vec();
            let mut down = x.to_vec();
            up[i] += h;
            down[i] -= h;
            (f(&up) - f(&down)) / (2.0 * h)
        })
        .collect()
}

/// Central second differences of `f` at `x`.
pub fn fd_hessian(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<Vec<f64>> {
    let d = x.len();
    let eval = |di: usize, si: f64, dj: usize, sj: f64| {
        let mut y = x.to_vec();
        y[di] += si * h;
        y[dj] += sj * h;
        f(&y)
    };
    let mut hess = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in i..d {
            let v = (eval(i, 1.0, j, 1.0) - eval(i, 1.0, j, -1.0) - eval(i, -1.0, j, 1.0) + eval(i, -1.0, j, -1.0))
                / (4.0 * h * h);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    hess
}

pub fn random_params(n: usize, sigma: f64, seed: u64) -> ParamVector {
    let shape = ModelShape::new(n).unwrap();
    ParamVector::new(shape, GaussianSampler::new(seed).normal_vec(shape.d(), sigma)).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
