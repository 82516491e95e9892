//! Finite-horizon Gramians `P` and the matching right-hand sides `Q` of the
//! Lyapunov identity `X P + P X = Q`.

use crate::dynsim::{sym_eig, Trajectory};
use crate::error::{dim_check, Error, Result};
use crate::matrix::{dot, norm2, SymMatrix};

/// Where a Gramian pair came from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Horizon {
    /// Continuous measurements over `[0, T]`.
    Continuous(f64),
    /// Discrete samples `z(0..=steps)`.
    Discrete(usize),
    /// Assembled by hand from `P` and `Q`.
    Unspecified,
}

#[derive(Clone, Debug)]
pub struct GramPair {
    pub p: SymMatrix,
    pub q: SymMatrix,
    pub horizon: Horizon,
    /// First and last measured state; empty for [`Horizon::Unspecified`].
    pub x0: Vec<f64>,
    pub x_end: Vec<f64>,
    /// Magnitude of the terms that were summed into `Q`; cancellation can make
    /// `‖Q‖_F` much smaller than the data it was built from.
    pub rhs_scale: f64,
}

impl GramPair {
    pub fn from_parts(p: SymMatrix, q: SymMatrix) -> Result<Self> {
        dim_check("Q vs P", p.n(), q.n())?;
        let rhs_scale = q.frobenius_norm();
        Ok(Self { p, q, horizon: Horizon::Unspecified, x0: vec![], x_end: vec![], rhs_scale })
    }

    pub fn n(&self) -> usize {
        self.p.n()
    }

    /// Scale used for relative tolerances on `Q`.
    pub fn q_scale(&self) -> f64 {
        self.q.frobenius_norm().max(self.rhs_scale)
    }

    fn continuous(p: SymMatrix, horizon: f64, x0: &[f64], x_end: Vec<f64>) -> Self {
        let q = SymMatrix::outer(&x_end).sub(&SymMatrix::outer(x0));
        let rhs_scale = dot(x0, x0) + dot(&x_end, &x_end);
        Self { p, q, horizon: Horizon::Continuous(horizon), x0: x0.to_vec(), x_end, rhs_scale }
    }
}

/// `P` by composite Simpson over the sampled outer products, `Q` from the
/// trajectory endpoints.
pub fn gram_from_trajectory(traj: &Trajectory) -> GramPair {
    let n = traj.n();
    let k = traj.intervals();
    let mut acc = SymMatrix::zeros(n);
    for (i, x) in traj.states().iter().enumerate() {
        let w = if i == 0 || i == k {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc = acc.axpy(w, &SymMatrix::outer(x));
    }
    let p = acc.scale(traj.dt() / 3.0);
    GramPair::continuous(p, traj.horizon(), traj.initial(), traj.terminal().to_vec())
}

/// `∫_0^T (e^{μt})^2 dt`-type weight: `(e^{μT} - 1)/μ`, with the limit `T` at `μ = 0`.
fn phi(mu: f64, horizon: f64) -> f64 {
    if mu == 0.0 {
        horizon
    } else {
        (mu * horizon).exp_m1() / mu
    }
}

/// Closed-form Gramian of `x' = X x`. Needs the true `X`, so it only serves
/// as a reference for tests and experiments.
pub fn gram_exact(x: &SymMatrix, x0: &[f64], horizon: f64) -> Result<GramPair> {
    let n = x.n();
    dim_check("initial state", n, x0.len())?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidInput(format!("horizon must be positive, got {horizon}")));
    }
    let eig = sym_eig(x)?;
    let u = &eig.eigenvectors;
    let lam = &eig.eigenvalues;
    let y: Vec<f64> = (0..n).map(|j| dot(&u.column(j), x0)).collect();
    let p_eig = SymMatrix::from_fn(n, |i, j| y[i] * y[j] * phi(lam[i] + lam[j], horizon));
    let p = p_eig.congruence(u);
    let w: Vec<f64> = (0..n).map(|j| (lam[j] * horizon).exp() * y[j]).collect();
    Ok(GramPair::continuous(p, horizon, x0, u.mul_vec(&w)))
}

/// Discrete-time pair from samples `z(0), z(1), ...`: the sums run over
/// `k = 0..n-1`, so exactly `n + 1` samples are used.
pub fn gram_discrete(samples: &[Vec<f64>]) -> Result<GramPair> {
    let Some(first) = samples.first() else {
        return Err(Error::TooFewSamples { needed: 2, got: 0 });
    };
    let n = first.len();
    if n == 0 {
        return Err(Error::InvalidInput("samples are empty vectors".into()));
    }
    if samples.len() < n + 1 {
        return Err(Error::TooFewSamples { needed: n + 1, got: samples.len() });
    }
    for z in &samples[..=n] {
        dim_check("sample dimension", n, z.len())?;
    }
    let mut p = SymMatrix::zeros(n);
    let mut q = SymMatrix::zeros(n);
    let mut rhs_scale = 0.0;
    for k in 0..n {
        let (a, b) = (&samples[k], &samples[k + 1]);
        p = p.add(&SymMatrix::outer(a));
        q = q.add(&SymMatrix::sym_outer(b, a));
        rhs_scale += 2.0 * norm2(a) * norm2(b);
    }
    Ok(GramPair {
        p,
        q,
        horizon: Horizon::Discrete(n),
        x0: first.clone(),
        x_end: samples[n].clone(),
        rhs_scale,
    })
}

/// `‖S P + P S - Q‖_F`.
pub fn residual(s: &SymMatrix, gp: &GramPair) -> f64 {
    assert_eq!(s.n(), gp.n(), "residual: dimension mismatch");
    s.anticommutator(&gp.p).sub(&gp.q).frobenius_norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynsim::{simulate, simulate_discrete};
    use crate::netgraph::{laplacian_of, unit_weights, Graph};

    fn star_state() -> SymMatrix {
        let g = Graph::star(4);
        laplacian_of(&g, &unit_weights(&g)).unwrap().scale(-1.0)
    }

    #[test]
    fn constant_trajectory() {
        let x0 = [1.0, -2.0];
        let tr = simulate(&SymMatrix::zeros(2), &x0, 3.0, 6).unwrap();
        let gp = gram_from_trajectory(&tr);
        let want = SymMatrix::outer(&x0).scale(3.0);
        assert!(gp.p.sub(&want).max_abs() < 1e-14);
        assert_eq!(gp.q.max_abs(), 0.0);
    }

    #[test]
    fn exact_zero_dynamics() {
        let gp = gram_exact(&SymMatrix::zeros(3), &[1.0, 2.0, 3.0], 2.0).unwrap();
        assert!(gp.p.sub(&SymMatrix::outer(&[1.0, 2.0, 3.0]).scale(2.0)).max_abs() < 1e-14);
    }

    #[test]
    fn exact_scalar_decay() {
        let gp = gram_exact(&SymMatrix::from_diag(&[-1.0]), &[1.0], 1.0).unwrap();
        let want = (1.0 - (-2.0f64).exp()) / 2.0;
        assert!((gp.p.get(0, 0) - want).abs() < 1e-15);
    }

    #[test]
    fn exact_identity_holds() {
        let x = star_state();
        let gp = gram_exact(&x, &[1.0, 0.0, 3.0, 1.0], 1.0).unwrap();
        assert!(residual(&x, &gp) <= 1e-12 * gp.q.frobenius_norm().max(1.0));
        let shifted = x.add(&SymMatrix::identity(4));
        assert!(residual(&shifted, &gp) > 1e-3);
    }

    #[test]
    fn simpson_close_to_exact() {
        let x = star_state();
        let x0 = [1.0, 0.0, 3.0, 1.0];
        let exact = gram_exact(&x, &x0, 1.0).unwrap();
        let tr = simulate(&x, &x0, 1.0, 1000).unwrap();
        let gp = gram_from_trajectory(&tr);
        assert!(gp.p.sub(&exact.p).frobenius_norm() < 1e-12);
        assert!(gp.q.sub(&exact.q).frobenius_norm() < 1e-12);
    }

    #[test]
    fn discrete_identity_case() {
        let z0 = [1.0, 2.0];
        let z = simulate_discrete(&SymMatrix::identity(2), &z0, 2).unwrap();
        let gp = gram_discrete(&z).unwrap();
        assert_eq!(gp.p, SymMatrix::outer(&z0).scale(2.0));
        assert_eq!(gp.q, SymMatrix::outer(&z0).scale(4.0));
    }

    #[test]
    fn discrete_exchange_case() {
        let z = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]];
        let gp = gram_discrete(&z).unwrap();
        assert_eq!(gp.p, SymMatrix::identity(2));
        assert_eq!(gp.q.to_rows(), vec![vec![0.0, 2.0], vec![2.0, 0.0]]);
        let m = SymMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]], 0.0).unwrap();
        assert_eq!(residual(&m, &gp), 0.0);
    }

    #[test]
    fn discrete_too_few() {
        let z = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!(matches!(gram_discrete(&z), Err(Error::TooFewSamples { needed: 3, got: 2 })));
        assert!(gram_discrete(&[]).is_err());
    }
}
