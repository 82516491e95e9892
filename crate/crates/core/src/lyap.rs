//! Spectral solution of `S P + P S = Q` for positive semidefinite `P`,
//! including the affine family of solutions when `P` is singular.

use crate::dynsim::{sym_eig, SymEig};
use crate::error::{Error, Result};
use crate::gramian::GramPair;
use crate::matrix::SymMatrix;

/// Eigenvalues at or below `eps_rank * λ_max` count as zero.
pub const DEFAULT_EPS_RANK: f64 = 1e-8;
/// Bound on the kernel block of `Q` relative to its scale.
pub const DEFAULT_TOL_CONSIST: f64 = 1e-6;

/// `P` diagonalized once, with `Q` expressed in the same basis.
#[derive(Clone, Debug)]
pub struct LyapunovSystem {
    eig: SymEig,
    q_eig: SymMatrix,
    kernel_dim: usize,
    q_scale: f64,
}

impl LyapunovSystem {
    pub fn new(gp: &GramPair, eps_rank: f64) -> Result<Self> {
        if !(eps_rank >= 0.0) {
            return Err(Error::InvalidInput(format!("eps_rank must be nonnegative, got {eps_rank}")));
        }
        let eig = sym_eig(&gp.p)?;
        let lmax = eig.eigenvalues.last().copied().unwrap_or(0.0);
        let kernel_dim = if lmax <= 0.0 {
            eig.n()
        } else {
            eig.eigenvalues.iter().take_while(|&&l| l <= eps_rank * lmax).count()
        };
        let q_eig = gp.q.congruence_t(&eig.eigenvectors);
        Ok(Self { eig, q_eig, kernel_dim, q_scale: gp.q_scale() })
    }

    pub fn n(&self) -> usize {
        self.eig.n()
    }

    pub fn eigen(&self) -> &SymEig {
        &self.eig
    }

    /// `Q` in the eigenbasis of `P`.
    pub fn q_eig(&self) -> &SymMatrix {
        &self.q_eig
    }

    pub fn kernel_dim(&self) -> usize {
        self.kernel_dim
    }

    pub fn rank(&self) -> usize {
        self.n() - self.kernel_dim
    }

    /// Eigenvector indices are sorted ascending, so the kernel is a prefix.
    pub fn in_kernel(&self, i: usize) -> bool {
        i < self.kernel_dim
    }

    pub fn eigenvalue(&self, i: usize) -> f64 {
        self.eig.eigenvalues[i]
    }

    /// Largest `|Q'_ij|` over the kernel block.
    pub fn kernel_violation(&self) -> f64 {
        let m = self.kernel_dim;
        let mut v: f64 = 0.0;
        for i in 0..m {
            for j in 0..=i {
                v = v.max(self.q_eig.get(i, j).abs());
            }
        }
        v
    }

    pub fn check_consistency(&self, tol_consist: f64) -> Result<()> {
        let violation = self.kernel_violation();
        let bound = tol_consist * self.q_scale;
        if violation > bound {
            Err(Error::InconsistentRhs { violation, bound })
        } else {
            Ok(())
        }
    }

    /// Particular solution in the eigenbasis, kernel block set to zero.
    pub fn particular_eig(&self) -> SymMatrix {
        SymMatrix::from_fn(self.n(), |i, j| {
            if self.in_kernel(i) && self.in_kernel(j) {
                0.0
            } else {
                self.q_eig.get(i, j) / (self.eigenvalue(i) + self.eigenvalue(j))
            }
        })
    }

    pub fn particular(&self) -> SymMatrix {
        self.particular_eig().congruence(&self.eig.eigenvectors)
    }

    /// Frobenius-orthonormal basis of the symmetric kernel of `S ↦ SP + PS`.
    pub fn kernel_basis(&self) -> Vec<SymMatrix> {
        let m = self.kernel_dim;
        let mut out = Vec::with_capacity(m * (m + 1) / 2);
        for i in 0..m {
            let ui = self.eig.vector(i);
            for j in i..m {
                if i == j {
                    out.push(SymMatrix::outer(&ui));
                } else {
                    let uj = self.eig.vector(j);
                    out.push(SymMatrix::sym_outer(&ui, &uj).scale(std::f64::consts::FRAC_1_SQRT_2));
                }
            }
        }
        out
    }
}

/// `S_p + span{B_k}`: every symmetric solution of `S P + P S = Q`.
#[derive(Clone, Debug)]
pub struct AffineSolutionSet {
    pub particular: SymMatrix,
    pub basis: Vec<SymMatrix>,
    /// Dimension of `ker P`.
    pub kernel_dim_p: usize,
}

impl AffineSolutionSet {
    pub fn point(&self, coeffs: &[f64]) -> SymMatrix {
        assert_eq!(coeffs.len(), self.basis.len());
        self.basis.iter().zip(coeffs).fold(self.particular.clone(), |s, (b, &a)| s.axpy(a, b))
    }
}

pub fn solve_unique(gp: &GramPair) -> Result<SymMatrix> {
    solve_unique_with(gp, DEFAULT_EPS_RANK)
}

/// The unique solution when `P` is nonsingular under `eps_rank`.
pub fn solve_unique_with(gp: &GramPair, eps_rank: f64) -> Result<SymMatrix> {
    let sys = LyapunovSystem::new(gp, eps_rank)?;
    if sys.kernel_dim() > 0 {
        return Err(Error::SingularP { rank: sys.rank(), n: sys.n() });
    }
    Ok(sys.particular())
}

pub fn solve_affine(gp: &GramPair) -> Result<AffineSolutionSet> {
    solve_affine_with(gp, DEFAULT_EPS_RANK, DEFAULT_TOL_CONSIST)
}

pub fn solve_affine_with(gp: &GramPair, eps_rank: f64, tol_consist: f64) -> Result<AffineSolutionSet> {
    let sys = LyapunovSystem::new(gp, eps_rank)?;
    sys.check_consistency(tol_consist)?;
    Ok(AffineSolutionSet {
        particular: sys.particular(),
        basis: sys.kernel_basis(),
        kernel_dim_p: sys.kernel_dim(),
    })
}

/// `n - rank P` under the default rank tolerance.
pub fn kernel_dim(gp: &GramPair) -> Result<usize> {
    Ok(LyapunovSystem::new(gp, DEFAULT_EPS_RANK)?.kernel_dim())
}
