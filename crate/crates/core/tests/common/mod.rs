//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use noregret::control::{ModelErrorMixture, PendulumParams};
use noregret::geometry::FeasibleSet;
use noregret::regression::{RbfFeatureMap, RbfPredictor};
use noregret::rng::SeededStream;

/// Smallest `n >= start` whose next `d` samples are within `eps`, by direct rescan.
pub fn brute_force_witness(
    values: &[f64],
    eps: f64,
    d: usize,
    start: usize,
    dist: impl Fn(f64) -> f64,
) -> Option<usize> {
    (start..=values.len().saturating_sub(d)).find(|&n| (n + 1..=n + d).all(|t| dist(values[t - 1]) <= eps))
}

pub fn power_spike_oracle(t: usize) -> f64 {
    if t.is_power_of_two() {
        1.0
    } else {
        1.0 / (t as f64 * t as f64)
    }
}

/// Background noise below 1e-4 plus at most eight spikes of height up to 1.
pub fn sparse_spike_trace(stream: &mut SeededStream, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| stream.uniform(0.0, 1e-4)).collect();
    let spikes = 1 + stream.below(8) as usize;
    for _ in 0..spikes {
        let at = stream.below(n as u64) as usize;
        v[at] = stream.uniform(0.2, 1.0);
    }
    v
}

/// Share of `t in [T/2, T]` (1-based) with `v_t > level`.
pub fn violation_fraction(values: &[f64], level: f64) -> f64 {
    let t_end = values.len();
    let start = (t_end / 2).max(1);
    let bad = (start..=t_end).filter(|&t| values[t - 1] > level).count();
    bad as f64 / (t_end - start + 1) as f64
}

/// Stable 2x2 matrix with complex eigenvalues of modulus sqrt(0.42).
pub fn reference_matrix() -> Vec<Vec<f64>> {
    vec![vec![0.5, 0.4], vec![-0.3, 0.6]]
}

pub fn radius_2x2_oracle(m: &[Vec<f64>]) -> f64 {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = tr * tr - 4.0 * det;
    if disc >= 0.0 {
        ((tr + disc.sqrt()) / 2.0).abs().max(((tr - disc.sqrt()) / 2.0).abs())
    } else {
        det.sqrt()
    }
}

type M2 = [[f64; 2]; 2];

fn mul2(a: &M2, b: &M2) -> M2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

/// Largest singular value from the eigenvalues of `A^T A`.
fn norm2(a: &M2) -> f64 {
    let fro2: f64 = a.iter().flatten().map(|v| v * v).sum();
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0);
    ((fro2 + disc.sqrt()) / 2.0).sqrt()
}

/// `sum_{i < terms} ||M^i||` with closed-form 2x2 spectral norms.
pub fn sigma_oracle_2x2(m: &[Vec<f64>], terms: usize) -> f64 {
    let a: M2 = [[m[0][0], m[0][1]], [m[1][0], m[1][1]]];
    let mut p: M2 = [[1.0, 0.0], [0.0, 1.0]];
    let mut sum = 0.0;
    for _ in 0..terms {
        sum += norm2(&p);
        p = mul2(&p, &a);
    }
    sum
}

/// `sum_t (<a, phi_t> - y_t)^2` in two variables, kept as sufficient statistics.
pub struct Quadratic2 {
    g: [[f64; 2]; 2],
    b: [f64; 2],
    c: f64,
}

impl Quadratic2 {
    pub fn from_stages<'a>(stages: impl Iterator<Item = (&'a [f64], f64)>) -> Self {
        let mut q = Self {
            g: [[0.0; 2]; 2],
            b: [0.0; 2],
            c: 0.0,
        };
        for (phi, y) in stages {
            assert_eq!(phi.len(), 2);
            for i in 0..2 {
                for j in 0..2 {
                    q.g[i][j] += phi[i] * phi[j];
                }
                q.b[i] += y * phi[i];
            }
            q.c += y * y;
        }
        q
    }

    pub fn value(&self, a: &[f64]) -> f64 {
        let mut v = self.c;
        for i in 0..2 {
            v -= 2.0 * self.b[i] * a[i];
            for j in 0..2 {
                v += a[i] * self.g[i][j] * a[j];
            }
        }
        v
    }

    /// Coarse-to-fine grid search over a box; each level zooms onto the best cell.
    pub fn grid_argmin(&self, lo: &[f64], hi: &[f64]) -> Vec<f64> {
        const POINTS: usize = 201;
        const HALF_WIDTH: f64 = 20.0;
        let (mut l, mut h) = (lo.to_vec(), hi.to_vec());
        let mut best = vec![(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
        loop {
            let pitch = [(h[0] - l[0]) / (POINTS - 1) as f64, (h[1] - l[1]) / (POINTS - 1) as f64];
            let mut best_val = f64::INFINITY;
            for i in 0..POINTS {
                for j in 0..POINTS {
                    let a = [l[0] + i as f64 * pitch[0], l[1] + j as f64 * pitch[1]];
                    let v = self.value(&a);
                    if v < best_val {
                        best_val = v;
                        best = a.to_vec();
                    }
                }
            }
            if pitch[0].max(pitch[1]) < 1e-7 {
                return best;
            }
            for k in 0..2 {
                l[k] = (best[k] - HALF_WIDTH * pitch[k]).max(lo[k]);
                h[k] = (best[k] + HALF_WIDTH * pitch[k]).min(hi[k]);
            }
        }
    }
}

fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// `min_theta E[(<theta, phi(x)> - f(x))^2]` for `x ~ U[lo, hi]`, by midpoint quadrature and normal equations.
pub fn quadrature_representational_error(
    map: &RbfFeatureMap,
    f: &dyn Fn(&[f64]) -> f64,
    lo: f64,
    hi: f64,
    points: usize,
) -> f64 {
    let m = map.len();
    let h = (hi - lo) / points as f64;
    let nodes: Vec<f64> = (0..points).map(|i| lo + (i as f64 + 0.5) * h).collect();
    let mut g = vec![vec![0.0; m]; m];
    let mut b = vec![0.0; m];
    for &x in &nodes {
        let phi = map.features(&[x]).unwrap();
        let y = f(&[x]);
        for i in 0..m {
            b[i] += phi[i] * y;
            for j in 0..m {
                g[i][j] += phi[i] * phi[j];
            }
        }
    }
    let theta = solve_dense(g, b);
    nodes
        .iter()
        .map(|&x| {
            let phi = map.features(&[x]).unwrap();
            let r: f64 = phi.iter().zip(&theta).map(|(p, t)| p * t).sum::<f64>() - f(&[x]);
            r * r
        })
        .sum::<f64>()
        / points as f64
}

pub fn central_difference(w: &[f64], h: f64, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    (0..w.len())
        .map(|i| {
            let mut p = w.to_vec();
            let mut m = w.to_vec();
            p[i] += h;
            m[i] -= h;
            (f(&p) - f(&m)) / (2.0 * h)
        })
        .collect()
}

/// `||g - fd||_inf / max(||g||_inf, 1)`.
pub fn relative_error(g: &[f64], fd: &[f64]) -> f64 {
    let diff = g.iter().zip(fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let scale = g.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
    diff / scale
}

pub fn random_regression_case(stream: &mut SeededStream) -> (RbfPredictor, Vec<f64>, f64) {
    let m = 1 + stream.below(6) as usize;
    let centers: Vec<Vec<f64>> = (0..m).map(|_| vec![stream.uniform(-2.0, 2.0)]).collect();
    let scales: Vec<f64> = (0..m)
        .map(|_| {
            let s = stream.uniform(0.3, 2.0);
            if stream.unit() < 0.5 {
                -s
            } else {
                s
            }
        })
        .collect();
    let map = RbfFeatureMap::new(centers, scales).unwrap();
    let weights = stream.uniform_vec(m, -5.0, 5.0);
    let x = vec![stream.uniform(-2.0, 2.0)];
    let y = stream.uniform(-5.0, 5.0);
    (RbfPredictor::new(map, weights).unwrap(), x, y)
}

pub fn random_control_case(
    stream: &mut SeededStream,
) -> (ModelErrorMixture, PendulumParams, Vec<f64>, [f64; 2], f64, f64) {
    let mix = ModelErrorMixture {
        weights: stream.uniform_vec(4, -15.0, 15.0),
        centers: stream.uniform_vec(4, -4.0, 4.0),
        scales: stream.uniform_vec(4, 0.3, 2.0),
        exponent_sign: -1.0,
    };
    let theta = stream.uniform_vec(4, -20.0, 20.0);
    let x = [stream.uniform(-4.0, 4.0), stream.uniform(-5.0, 5.0)];
    let accel = stream.uniform(-50.0, 50.0);
    let u = stream.uniform(-50.0, 50.0);
    (mix, PendulumParams::default(), theta, x, accel, u)
}

pub fn random_set(stream: &mut SeededStream, dim: usize) -> FeasibleSet {
    if stream.unit() < 0.5 {
        let lo = stream.uniform_vec(dim, -10.0, 0.0);
        let hi: Vec<f64> = lo.iter().map(|l| l + stream.uniform(0.0, 10.0)).collect();
        FeasibleSet::new_box(lo, hi).unwrap()
    } else {
        let c = stream.uniform_vec(dim, -5.0, 5.0);
        FeasibleSet::new_ball(c, stream.uniform(0.1, 8.0)).unwrap()
    }
}
