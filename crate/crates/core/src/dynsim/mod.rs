//! Simulation of `x' = X x` and `z(k+1) = M z(k)` for symmetric state matrices.

mod eig;

pub use eig::{sym_eig, SymEig};

use crate::error::{dim_check, Error, Result};
use crate::matrix::{dot, SymMatrix};

/// Relative tolerance on grid uniformity when a trajectory is read back.
const GRID_TOL: f64 = 1e-9;

/// `e^{X t}` through the spectral factorization of `X`.
pub fn expm_sym(x: &SymMatrix, t: f64) -> Result<SymMatrix> {
    if t == 0.0 {
        return Ok(SymMatrix::identity(x.n()));
    }
    Ok(sym_eig(x)?.map(|l| (l * t).exp()))
}

/// Samples of a state trajectory on the uniform grid `t_k = k T / K`, with
/// `K` even so that composite Simpson applies.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
}

impl Trajectory {
    /// Validates the grid: `t_0 = 0`, uniform spacing, `K >= 2` even, and
    /// equal state dimensions.
    pub fn new(times: Vec<f64>, states: Vec<Vec<f64>>) -> Result<Self> {
        dim_check("trajectory states vs times", times.len(), states.len())?;
        if times.len() < 3 {
            return Err(Error::TooFewSamples { needed: 3, got: times.len() });
        }
        let k = times.len() - 1;
        if k % 2 != 0 {
            return Err(Error::InvalidInput(format!(
                "trajectory needs an even number of intervals, got {k}"
            )));
        }
        let n = states[0].len();
        if n == 0 {
            return Err(Error::InvalidInput("trajectory states are empty".into()));
        }
        for s in &states {
            dim_check("trajectory state dimension", n, s.len())?;
        }
        if times.iter().chain(states.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("trajectory contains non-finite values".into()));
        }
        let horizon = times[k];
        if times[0] != 0.0 || horizon <= 0.0 {
            return Err(Error::InvalidInput("trajectory must start at t = 0 and move forward".into()));
        }
        let dt = horizon / k as f64;
        for (i, &t) in times.iter().enumerate() {
            if (t - i as f64 * dt).abs() > GRID_TOL * horizon {
                return Err(Error::InvalidInput(format!(
                    "time grid not uniform at sample {i}: t = {t}, expected {}",
                    i as f64 * dt
                )));
            }
        }
        Ok(Self { times, states })
    }

    pub fn n(&self) -> usize {
        self.states[0].len()
    }

    /// Number of intervals `K`.
    pub fn intervals(&self) -> usize {
        self.times.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.times[self.intervals()]
    }

    pub fn dt(&self) -> f64 {
        self.horizon() / self.intervals() as f64
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn initial(&self) -> &[f64] {
        &self.states[0]
    }

    pub fn terminal(&self) -> &[f64] {
        &self.states[self.intervals()]
    }
}

fn grid(horizon: f64, k: usize) -> Vec<f64> {
    let dt = horizon / k as f64;
    let mut t: Vec<f64> = (0..=k).map(|i| i as f64 * dt).collect();
    t[k] = horizon;
    t
}

/// Exact trajectory of `x' = X x` from one eigendecomposition of `X`.
pub fn simulate(x: &SymMatrix, x0: &[f64], horizon: f64, k: usize) -> Result<Trajectory> {
    let n = x.n();
    dim_check("initial state", n, x0.len())?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidInput(format!("horizon must be positive, got {horizon}")));
    }
    if k < 2 || k % 2 != 0 {
        return Err(Error::InvalidInput(format!("K must be even and at least 2, got {k}")));
    }
    let eig = sym_eig(x)?;
    let u = &eig.eigenvectors;
    let y: Vec<f64> = (0..n).map(|j| dot(&u.column(j), x0)).collect();
    let times = grid(horizon, k);

    let mut states = Vec::with_capacity(k + 1);
    states.push(x0.to_vec());
    for &t in &times[1..] {
        let w: Vec<f64> = (0..n).map(|j| (eig.eigenvalues[j] * t).exp() * y[j]).collect();
        states.push(u.mul_vec(&w));
    }
    Ok(Trajectory { times, states })
}

/// `z(k) = M^k z0` for `k = 0..=steps` by repeated multiplication.
pub fn simulate_discrete(m: &SymMatrix, z0: &[f64], steps: usize) -> Result<Vec<Vec<f64>>> {
    dim_check("initial state", m.n(), z0.len())?;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(z0.to_vec());
    for k in 0..steps {
        let next = m.mul_vec(&out[k]);
        out.push(next);
    }
    Ok(out)
}
