#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use netrecon::matrix::{Matrix, SymMatrix};
use netrecon::netgraph::{laplacian_of, unit_weights, Graph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const STAR_X0: [f64; 4] = [1.0, 0.0, 3.0, 1.0];
pub const STAR_V: [f64; 4] = [0.0, 2.0, 1.0, -3.0];

/// Laplacian of the unweighted four-node star centred on node 1.
pub fn star_laplacian() -> SymMatrix {
    let g = Graph::star(4);
    laplacian_of(&g, &unit_weights(&g)).unwrap()
}

pub fn to_na(m: &SymMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.n(), m.n(), |i, j| m.get(i, j))
}

pub fn full_to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m.row(i)[j])
}

pub fn from_na(m: &DMatrix<f64>) -> SymMatrix {
    SymMatrix::from_fn(m.nrows(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
}

pub fn random_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    a.qr().q()
}

pub fn random_symmetric(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> SymMatrix {
    let mut s = SymMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            s.set(i, j, rng.gen_range(-scale..scale));
        }
    }
    s
}

/// A state matrix with a geometrically spread spectrum and an initial state
/// with known weights in its eigenbasis.
pub struct Instance {
    pub x: SymMatrix,
    pub x0: Vec<f64>,
    /// Eigenvectors as columns.
    pub u: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
}

/// Eigenvalues `-0.05 * 3^i` (jittered), which keeps the exponential modes
/// far enough apart for the Gramian to stay numerically nonsingular up to
/// n = 10. Components of `x0` along the `hidden` eigenvectors are zero.
pub fn spread_instance(n: usize, hidden: &[usize], rng: &mut ChaCha8Rng) -> Instance {
    let u = random_orthogonal(n, rng);
    let eigenvalues: Vec<f64> =
        (0..n).map(|i| -0.05 * 3f64.powi(i as i32) * rng.gen_range(0.85..1.15)).collect();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let mag = rng.gen_range(0.5..1.5);
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            if hidden.contains(&i) {
                0.0
            } else {
                sign * mag
            }
        })
        .collect();
    let lam = DMatrix::from_diagonal(&DVector::from_vec(eigenvalues.clone()));
    let x = from_na(&(&u * lam * u.transpose()));
    let x0 = (&u * DVector::from_vec(y)).as_slice().to_vec();
    Instance { x, x0, u, eigenvalues }
}

/// Dormand–Prince 5(4) with step-size control, for `x' = X x` on `[0, t]`.
pub fn integrate(x: &SymMatrix, x0: &[f64], t: f64, rtol: f64) -> Vec<f64> {
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let n = x0.len();
    let mut y = x0.to_vec();
    let mut now = 0.0;
    let mut h = 1e-3 * t;
    while now < t {
        if now + h > t {
            h = t - now;
        }
        let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
        for s in 0..7 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate() {
                for i in 0..n {
                    ys[i] += h * A[s][j] * kj[i];
                }
            }
            k.push(x.mul_vec(&ys));
        }
        let mut y5 = y.clone();
        let mut err: f64 = 0.0;
        for i in 0..n {
            let (mut d5, mut d4) = (0.0, 0.0);
            for s in 0..7 {
                d5 += B5[s] * k[s][i];
                d4 += B4[s] * k[s][i];
            }
            y5[i] += h * d5;
            let sc = rtol * (1.0 + y[i].abs().max(y5[i].abs()));
            err = err.max((h * (d5 - d4)).abs() / sc);
        }
        if err <= 1.0 {
            now += h;
            y = y5;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    y
}

/// Largest sine of the principal angles between two subspaces given by
/// orthonormal columns; `None` if the dimensions differ.
pub fn subspace_gap(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Option<f64> {
    if a.ncols() != b.ncols() {
        return None;
    }
    if a.ncols() == 0 {
        return Some(0.0);
    }
    let resid = b - a * (a.transpose() * b);
    Some(resid.svd(false, false).singular_values.max())
}

pub fn columns(vecs: &[Vec<f64>], n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, vecs.len(), |i, j| vecs[j][i])
}

/// Every subset of `0..c` of size `k`, in lexicographic order.
pub fn subsets(c: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, c: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..c {
            cur.push(i);
            rec(i + 1, c, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, c, k, &mut Vec::new(), &mut out);
    out
}

/// Basic feasible solutions of `{A s = b, s >= 0}` for `A` of full row rank,
/// deduplicated.
pub fn vertices(a: &DMatrix<f64>, b: &DVector<f64>) -> Vec<DVector<f64>> {
    let (r, c) = a.shape();
    let scale = 1.0 + b.amax();
    let mut out: Vec<DVector<f64>> = Vec::new();
    for cols in subsets(c, r) {
        let sub = a.select_columns(&cols);
        let lu = sub.clone().lu();
        let Some(xb) = lu.solve(b) else { continue };
        if (&sub * &xb - b).amax() > 1e-9 * scale || sub.clone().svd(false, false).singular_values.min() < 1e-9 {
            continue;
        }
        if xb.iter().any(|&v| v < -1e-9 * scale) {
            continue;
        }
        let mut s = DVector::zeros(c);
        for (k, &j) in cols.iter().enumerate() {
            s[j] = xb[k].max(0.0);
        }
        if !out.iter().any(|v| (v - &s).amax() <= 1e-7 * scale) {
            out.push(s);
        }
    }
    out
}

/// `{A s = b, s >= 0}` is a single point.
pub fn is_single_point(a: &DMatrix<f64>, b: &DVector<f64>) -> bool {
    let (r, c) = a.shape();
    if vertices(a, b).len() != 1 {
        return false;
    }
    // A nonempty polyhedron is bounded iff {A d = 0, 1^T d = 1, d >= 0} is empty.
    let mut ray = DMatrix::zeros(r + 1, c);
    ray.view_mut((0, 0), (r, c)).copy_from(a);
    ray.row_mut(r).fill(1.0);
    let mut rhs = DVector::zeros(r + 1);
    rhs[r] = 1.0;
    vertices(&ray, &rhs).is_empty()
}

/// Binary solutions of `M s = b` in depth-first order (index ascending,
/// 0 before 1), i.e. lexicographic order with the first variable most
/// significant.
pub fn binary_solutions(m: &[Vec<i64>], b: &[i64], c: usize) -> Vec<Vec<bool>> {
    let mut out = Vec::new();
    for code in 0u64..(1u64 << c) {
        let s: Vec<bool> = (0..c).map(|i| (code >> (c - 1 - i)) & 1 == 1).collect();
        let ok = m.iter().zip(b).all(|(row, &bi)| {
            row.iter().zip(&s).map(|(&a, &v)| if v { a } else { 0 }).sum::<i64>() == bi
        });
        if ok {
            out.push(s);
        }
    }
    out
}

/// Upper off-diagonal entries in pair order.
pub fn off_diagonal(m: &SymMatrix) -> Vec<f64> {
    netrecon::netgraph::all_pairs(m.n()).map(|(i, j)| m.get(i, j)).collect()
}
