//! Reconstruction pipelines: unconstrained (qualitative) recovery, the
//! sign-constrained Laplacian and adjacency programs, their binary variants,
//! and the discrete-time and sampled front ends.

use serde::{Deserialize, Serialize};

use crate::dynsim::{expm_sym, sym_eig};
use crate::error::{dim_check, Error, Result};
use crate::gramian::{gram_discrete, residual, GramPair};
use crate::lpsolve::{
    binary_solve, certify_unique, simplex_with, CertificateOptions, LpStatus, SimplexOptions, StandardLp,
    TOL_ZERO,
};
use crate::lyap::{LyapunovSystem, DEFAULT_EPS_RANK, DEFAULT_TOL_CONSIST};
use crate::matrix::{dot, norm2, Matrix, PivotedQr, SymMatrix};
use crate::netgraph::{all_pairs, graph_from_matrix, is_member, Graph, MatrixClass};

/// Eigenvalues of a sampled propagator must exceed this before taking logs.
pub const TOL_PD: f64 = 1e-12;

/// Rows whose component outside the span of earlier rows falls below this
/// are treated as dependent and dropped.
const ROW_DROP_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Relative eigenvalue cut-off for the rank of `P`.
    pub eps_rank: f64,
    /// Kernel block of `Q` relative to its scale.
    pub tol_consist: f64,
    /// Residual gate relative to `max(1, ‖Q‖_F)`.
    pub tol_accept: f64,
    /// Off-diagonal magnitude above which an entry is an edge; also the
    /// membership tolerance of the final gate.
    pub edge_threshold: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eps_rank: DEFAULT_EPS_RANK,
            tol_consist: DEFAULT_TOL_CONSIST,
            tol_accept: 1e-6,
            edge_threshold: 1e-3,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eps_rank", self.eps_rank),
            ("tol_consist", self.tol_consist),
            ("tol_accept", self.tol_accept),
            ("edge_threshold", self.edge_threshold),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Unique,
    NonUnique,
    Infeasible,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certificate {
    /// `P` nonsingular: the Lyapunov equation alone fixes the matrix.
    FullRank,
    /// The auxiliary LP certified the basic solution as the only one.
    UniqueLp,
    /// Exhaustive binary search found exactly one assignment.
    UniqueBinary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    #[serde(rename = "rank_P")]
    pub rank_p: usize,
    pub kernel_dim: usize,
    /// Residual of the returned matrix, or of the particular solution when
    /// nothing was returned.
    pub residual: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionOutcome {
    pub status: Status,
    pub class: MatrixClass,
    pub certificate: Option<Certificate>,
    #[serde(flatten)]
    pub diagnostics: Diagnostics,
    /// Recovered state matrix (`-L` for the Laplacian classes).
    #[serde(rename = "X_hat")]
    pub x_hat: Option<SymMatrix>,
    #[serde(rename = "G_hat")]
    pub g_hat: Option<Graph>,
    /// Another state matrix consistent with the data, when one was found.
    pub second_witness: Option<SymMatrix>,
}

impl ReconstructionOutcome {
    /// The recovered matrix in class form (`L` rather than `-L`).
    pub fn class_matrix(&self) -> Option<SymMatrix> {
        self.x_hat.as_ref().map(|x| self.class.class_form(x))
    }
}

/// How the diagonal of a constrained candidate follows from its off-diagonals.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum DiagonalRule {
    /// `S 1 = 0`.
    ZeroRowSum,
    /// `S_ii = 0`.
    ZeroDiagonal,
}

fn diagonal_rule(class: MatrixClass) -> Option<DiagonalRule> {
    if class.is_laplacian() {
        Some(DiagonalRule::ZeroRowSum)
    } else if class.is_adjacency() {
        Some(DiagonalRule::ZeroDiagonal)
    } else {
        None
    }
}

/// State matrix from the upper off-diagonal entries, in [`all_pairs`] order.
/// In state form the Laplacian classes have nonnegative off-diagonals.
fn assemble(n: usize, s: &[f64], rule: DiagonalRule) -> SymMatrix {
    let mut out = SymMatrix::zeros(n);
    for ((i, j), &v) in all_pairs(n).zip(s) {
        out.set(i, j, v);
    }
    if rule == DiagonalRule::ZeroRowSum {
        for i in 0..n {
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| out.get(i, j)).sum();
            out.set(i, i, -off);
        }
    }
    out
}

/// `M s = b` with orthonormal rows: the off-diagonal parameterization of the
/// class restricted to the affine solution set.
#[derive(Clone, Debug)]
pub struct ConstraintSystem {
    pub m: Matrix,
    pub b: Vec<f64>,
}

/// Each eigen-pair `(a, b)` of `P` outside the kernel block pins the
/// functional `S ↦ u_a^T S u_b` to the value it takes on `reference`.
/// Pairs are processed by decreasing `λ_a + λ_b`, i.e. most accurately
/// determined first, and reduced to an orthonormal set by modified
/// Gram–Schmidt.
fn build_constraints(sys: &LyapunovSystem, reference_eig: &SymMatrix, rule: DiagonalRule) -> ConstraintSystem {
    let n = sys.n();
    let u = &sys.eigen().eigenvectors;
    let pairs: Vec<(usize, usize)> = all_pairs(n).collect();
    let q = pairs.len();

    let mut eig_pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a..n).map(move |b| (a, b)))
        .filter(|&(a, b)| !(sys.in_kernel(a) && sys.in_kernel(b)))
        .collect();
    eig_pairs.sort_by(|&(a1, b1), &(a2, b2)| {
        let w1 = sys.eigenvalue(a1) + sys.eigenvalue(b1);
        let w2 = sys.eigenvalue(a2) + sys.eigenvalue(b2);
        w2.total_cmp(&w1).then((a1, b1).cmp(&(a2, b2)))
    });

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    for (a, b) in eig_pairs {
        let ua = u.column(a);
        let ub = u.column(b);
        let norm = if a == b { 2.0 } else { std::f64::consts::SQRT_2 };
        let c = |i: usize, j: usize| (ua[i] * ub[j] + ub[i] * ua[j]) / norm;
        let mut w: Vec<f64> = pairs
            .iter()
            .map(|&(i, j)| match rule {
                DiagonalRule::ZeroDiagonal => 2.0 * c(i, j),
                DiagonalRule::ZeroRowSum => 2.0 * c(i, j) - c(i, i) - c(j, j),
            })
            .collect();
        let mut beta = 2.0 * reference_eig.get(a, b) / norm;
        let original = norm2(&w);
        if original <= ROW_DROP_TOL {
            continue;
        }
        for _ in 0..2 {
            for (r, &t) in rows.iter().zip(&rhs) {
                let proj = dot(&w, r);
                w.iter_mut().zip(r).for_each(|(x, y)| *x -= proj * y);
                beta -= proj * t;
            }
        }
        let len = norm2(&w);
        if len > ROW_DROP_TOL * original.max(1.0) {
            w.iter_mut().for_each(|x| *x /= len);
            rows.push(w);
            rhs.push(beta / len);
        }
        if rows.len() == q {
            break;
        }
    }
    ConstraintSystem { m: Matrix::from_fn(rows.len(), q, |i, j| rows[i][j]), b: rhs }
}

/// The reduced constraint system a constrained class solves when `P` is
/// singular, over the upper off-diagonal entries of the state matrix in
/// [`all_pairs`] order. `None` for the qualitative class.
pub fn constraint_system(gp: &GramPair, class: MatrixClass, tol: &Tolerances) -> Result<Option<ConstraintSystem>> {
    let Some(rule) = diagonal_rule(class) else { return Ok(None) };
    let ctx = Context::new(gp, class, tol)?;
    Ok(Some(build_constraints(&ctx.sys, &ctx.sys.particular_eig(), rule)))
}

enum Search {
    Found { s: SymMatrix, certificate: Certificate },
    Multiple { candidate: Option<SymMatrix>, witness: Option<SymMatrix> },
    Empty { note: String },
}

/// LP (weighted) or binary (unweighted) search over the constraint system.
fn constrained_search(
    n: usize,
    cs: &ConstraintSystem,
    class: MatrixClass,
    rule: DiagonalRule,
    tol: &Tolerances,
) -> Result<Search> {
    if class.is_unweighted() {
        let sols = binary_solve(&cs.m, &cs.b)?;
        let to_matrix =
            |s: &Vec<bool>| assemble(n, &s.iter().map(|&v| if v { 1.0 } else { 0.0 }).collect::<Vec<_>>(), rule);
        return Ok(match sols.len() {
            0 => Search::Empty { note: "no binary assignment satisfies the constraints".into() },
            1 => Search::Found { s: to_matrix(&sols[0]), certificate: Certificate::UniqueBinary },
            _ => Search::Multiple { candidate: Some(to_matrix(&sols[0])), witness: Some(to_matrix(&sols[1])) },
        });
    }

    let lp = StandardLp::feasibility(cs.m.clone(), cs.b.clone())?;
    let simplex_opts = SimplexOptions {
        feas_tol: tol.tol_accept * (cs.m.rows().max(1) as f64),
        ..SimplexOptions::default()
    };
    let res = simplex_with(&lp, &simplex_opts)?;
    if res.status != LpStatus::Optimal {
        return Ok(Search::Empty {
            note: format!("constraint LP infeasible (phase-one residual {:.3e})", res.infeasibility),
        });
    }
    // The data only determine `b` up to quadrature error, so the vertex is
    // refitted on its support and certified against the right-hand side that
    // the refit satisfies exactly. Entries below the edge threshold are
    // pruned on a second attempt.
    let mut last = None;
    for floor in [TOL_ZERO, tol.edge_threshold] {
        let Some(fit) = polish(&cs.m, &cs.b, &res.solution, floor) else { continue };
        let consistent = StandardLp::feasibility(cs.m.clone(), cs.m.mul_vec(&fit))?;
        let check = certify_unique(&consistent, &fit, &CertificateOptions::default())?;
        if check.unique {
            return Ok(Search::Found { s: assemble(n, &fit, rule), certificate: Certificate::UniqueLp });
        }
        last = Some((fit, check.witness));
    }
    let (candidate, witness) = match last {
        Some((fit, w)) => (fit, w),
        None => {
            let opts = CertificateOptions { simplex: simplex_opts, ..CertificateOptions::default() };
            let check = certify_unique(&lp, &res.solution, &opts)?;
            if check.unique {
                return Ok(Search::Found { s: assemble(n, &res.solution, rule), certificate: Certificate::UniqueLp });
            }
            (res.solution, check.witness)
        }
    };
    Ok(Search::Multiple {
        candidate: Some(assemble(n, &candidate, rule)),
        witness: witness.map(|w| assemble(n, &w, rule)),
    })
}

/// Least squares restricted to the entries of `s` above `floor`; `None` if
/// the support is rank deficient or the refit leaves it.
fn polish(m: &Matrix, b: &[f64], s: &[f64], floor: f64) -> Option<Vec<f64>> {
    let support: Vec<usize> = (0..s.len()).filter(|&i| s[i] > floor).collect();
    if support.is_empty() {
        return Some(vec![0.0; s.len()]);
    }
    if support.len() > m.rows() {
        return None;
    }
    let sub = m.select_columns(&support);
    let qr = PivotedQr::new(&sub);
    if qr.rank(1e-12) < support.len() {
        return None;
    }
    let vals = qr.solve_least_squares(b, support.len());
    if vals.iter().any(|&v| !(v > 0.0)) {
        return None;
    }
    let mut out = vec![0.0; s.len()];
    for (&i, &v) in support.iter().zip(&vals) {
        out[i] = v;
    }
    Some(out)
}

/// Shared state of one reconstruction.
struct Context<'a> {
    gp: &'a GramPair,
    sys: LyapunovSystem,
    class: MatrixClass,
    tol: Tolerances,
}

impl<'a> Context<'a> {
    fn new(gp: &'a GramPair, class: MatrixClass, tol: &Tolerances) -> Result<Self> {
        tol.validate()?;
        let sys = LyapunovSystem::new(gp, tol.eps_rank)?;
        sys.check_consistency(tol.tol_consist)?;
        Ok(Self { gp, sys, class, tol: *tol })
    }

    fn accept_bound(&self) -> f64 {
        self.tol.tol_accept * self.gp.q.frobenius_norm().max(1.0)
    }

    fn diagnostics(&self, residual: f64, note: Option<String>) -> Diagnostics {
        Diagnostics { rank_p: self.sys.rank(), kernel_dim: self.sys.kernel_dim(), residual, note }
    }

    fn outcome(&self, status: Status, residual: f64, note: Option<String>) -> ReconstructionOutcome {
        ReconstructionOutcome {
            status,
            class: self.class,
            certificate: None,
            diagnostics: self.diagnostics(residual, note),
            x_hat: None,
            g_hat: None,
            second_witness: None,
        }
    }

    fn particular_residual(&self) -> f64 {
        residual(&self.sys.particular(), self.gp)
    }

    fn non_unique(&self, residual: f64, witness: Option<SymMatrix>, note: &str) -> ReconstructionOutcome {
        let mut out = self.outcome(Status::NonUnique, residual, Some(note.into()));
        out.second_witness = witness;
        out
    }

    /// Returns `Unique` only if the candidate passes the residual and
    /// membership gates; anything else is reported as infeasible.
    fn gate(&self, x: SymMatrix, res: f64, certificate: Certificate) -> Result<ReconstructionOutcome> {
        let thr = self.tol.edge_threshold;
        let form = self.class.class_form(&x);
        let g = graph_from_matrix(&form, thr);
        if !(res <= self.accept_bound()) {
            return Ok(self.outcome(
                Status::Infeasible,
                res,
                Some(format!("residual {res:.3e} exceeds the acceptance bound {:.3e}", self.accept_bound())),
            ));
        }
        if !is_member(&form, &g, self.class, thr)? {
            let note = if certificate == Certificate::FullRank && self.class != MatrixClass::Qualitative {
                "the unique Lyapunov solution violates the class constraints"
            } else {
                "the recovered matrix fails the class membership test"
            };
            return Ok(self.outcome(Status::Infeasible, res, Some(note.into())));
        }
        Ok(ReconstructionOutcome {
            status: Status::Unique,
            class: self.class,
            certificate: Some(certificate),
            diagnostics: self.diagnostics(res, None),
            x_hat: Some(x),
            g_hat: Some(g),
            second_witness: None,
        })
    }

    /// Degenerate data (`P = 0`) fits every member of every class.
    fn degenerate(&self) -> Option<ReconstructionOutcome> {
        (self.gp.p.max_abs() == 0.0).then(|| {
            self.non_unique(
                self.particular_residual(),
                None,
                "zero Gramian: the data carry no structural information",
            )
        })
    }

    /// Qualitative witness: particular solution moved along a kernel direction.
    fn kernel_witness(&self) -> Option<SymMatrix> {
        let basis = self.sys.kernel_basis();
        let p = self.sys.particular();
        basis.first().map(|b| p.axpy(p.frobenius_norm().max(1.0), b))
    }

    fn run(&self) -> Result<ReconstructionOutcome> {
        if let Some(out) = self.degenerate() {
            return Ok(out);
        }
        if self.sys.kernel_dim() == 0 {
            let s = self.sys.particular();
            let r = residual(&s, self.gp);
            return self.gate(s, r, Certificate::FullRank);
        }
        let Some(rule) = diagonal_rule(self.class) else {
            return Ok(self.non_unique(
                self.particular_residual(),
                self.kernel_witness(),
                "Gramian is singular: the Lyapunov equation has a family of solutions",
            ));
        };
        let cs = build_constraints(&self.sys, &self.sys.particular_eig(), rule);
        match constrained_search(self.sys.n(), &cs, self.class, rule, &self.tol)? {
            Search::Found { s, certificate } => {
                let r = residual(&s, self.gp);
                self.gate(s, r, certificate)
            }
            Search::Multiple { candidate, witness } => {
                let r = candidate.as_ref().map_or_else(|| self.particular_residual(), |c| residual(c, self.gp));
                Ok(self.non_unique(r, witness, "more than one class member fits the data"))
            }
            Search::Empty { note } => Ok(self.outcome(Status::Infeasible, self.particular_residual(), Some(note))),
        }
    }
}

/// Dispatches on the class.
pub fn reconstruct(gp: &GramPair, class: MatrixClass, tol: &Tolerances) -> Result<ReconstructionOutcome> {
    Context::new(gp, class, tol)?.run()
}

/// Unique iff `P` is nonsingular.
pub fn reconstruct_qualitative(gp: &GramPair, tol: &Tolerances) -> Result<ReconstructionOutcome> {
    reconstruct(gp, MatrixClass::Qualitative, tol)
}

pub fn reconstruct_laplacian(gp: &GramPair, tol: &Tolerances) -> Result<ReconstructionOutcome> {
    reconstruct(gp, MatrixClass::Laplacian, tol)
}

pub fn reconstruct_adjacency(gp: &GramPair, tol: &Tolerances) -> Result<ReconstructionOutcome> {
    reconstruct(gp, MatrixClass::Adjacency, tol)
}

pub fn reconstruct_unweighted(gp: &GramPair, class: MatrixClass, tol: &Tolerances) -> Result<ReconstructionOutcome> {
    if !class.is_unweighted() {
        return Err(Error::InvalidInput(format!("{class} is not an unweighted class")));
    }
    reconstruct(gp, class, tol)
}

/// Recovers `M` of `z(k+1) = M z(k)` from at least `n + 1` samples.
pub fn reconstruct_discrete(samples: &[Vec<f64>], class: MatrixClass, tol: &Tolerances) -> Result<ReconstructionOutcome> {
    reconstruct(&gram_discrete(samples)?, class, tol)
}

/// Recovers `X` from samples `x(kτ)`: the propagator `e^{Xτ}` is identified
/// from the discrete-time data and `X` is its logarithm over `τ`.
///
/// When the sampled Gramian is singular the kernel block of the propagator
/// is unknown. The unobservable subspace is invariant under `X`, so filling
/// that block with the identity before taking the logarithm leaves every
/// other block of `log(e^{Xτ})` intact; those blocks then feed the class
/// constraints exactly as in the continuous case.
pub fn reconstruct_sampled(
    samples: &[Vec<f64>],
    tau: f64,
    class: MatrixClass,
    tol: &Tolerances,
) -> Result<ReconstructionOutcome> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidInput(format!("sampling period must be positive, got {tau}")));
    }
    let gp = gram_discrete(samples)?;
    let ctx = Context::new(&gp, class, tol)?;
    if let Some(out) = ctx.degenerate() {
        return Ok(out);
    }
    let sys = &ctx.sys;
    let mut m_fill = sys.particular();
    for i in 0..sys.kernel_dim() {
        m_fill = m_fill.add(&SymMatrix::outer(&sys.eigen().vector(i)));
    }
    let x_fill = log_sym(&m_fill)?.scale(1.0 / tau);
    let sampled_residual = |x: &SymMatrix| -> Result<f64> { Ok(residual(&expm_sym(x, tau)?, &gp)) };

    if sys.kernel_dim() == 0 {
        let r = sampled_residual(&x_fill)?;
        return ctx.gate(x_fill, r, Certificate::FullRank);
    }
    let Some(rule) = diagonal_rule(class) else {
        return Ok(ctx.non_unique(
            ctx.particular_residual(),
            None,
            "sampled Gramian is singular: the propagator is not determined",
        ));
    };
    let reference = x_fill.congruence_t(&sys.eigen().eigenvectors);
    let cs = build_constraints(sys, &reference, rule);
    match constrained_search(sys.n(), &cs, class, rule, tol)? {
        Search::Found { s, certificate } => {
            let r = sampled_residual(&s)?;
            ctx.gate(s, r, certificate)
        }
        Search::Multiple { candidate, witness } => {
            let r = match &candidate {
                Some(c) => sampled_residual(c)?,
                None => ctx.particular_residual(),
            };
            Ok(ctx.non_unique(r, witness, "more than one class member fits the data"))
        }
        Search::Empty { note } => Ok(ctx.outcome(Status::Infeasible, ctx.particular_residual(), Some(note))),
    }
}

/// Spectral logarithm of a symmetric positive definite matrix.
pub fn log_sym(m: &SymMatrix) -> Result<SymMatrix> {
    let eig = sym_eig(m)?;
    if let Some(&l) = eig.eigenvalues.iter().find(|&&l| !(l > TOL_PD)) {
        return Err(Error::NonPositiveEigenvalue { value: l });
    }
    Ok(eig.map(f64::ln))
}

/// Whether `xbar` (a state matrix) explains the measurements and, in class
/// form, belongs to the class on its own support.
pub fn check_solvability_against(gp: &GramPair, xbar: &SymMatrix, class: MatrixClass, tol: &Tolerances) -> bool {
    if xbar.n() != gp.n() {
        return false;
    }
    let bound = tol.tol_accept * gp.q.frobenius_norm().max(1.0);
    if !(residual(xbar, gp) <= bound) {
        return false;
    }
    let form = class.class_form(xbar);
    let g = graph_from_matrix(&form, tol.edge_threshold);
    is_member(&form, &g, class, tol.edge_threshold).unwrap_or(false)
}

/// Orthonormal basis of the unobservable subspace of `(x0^T, X)`: the
/// orthogonal complement of the Krylov space `span{x0, X x0, ...}`.
///
/// For symmetric `X` the Krylov space is spanned by the projections of `x0`
/// onto the eigenspaces of `X`, so it is computed from the eigendecomposition
/// rather than from powers of `X`, which lose small components to the
/// dominant modes. Eigenvalues within `eps_rank * max(1, max |λ|)` of each
/// other form one eigenspace; a projection counts if its norm exceeds
/// `eps_rank * ‖x0‖`.
pub fn unobservable_subspace(x: &SymMatrix, x0: &[f64], eps_rank: f64) -> Result<Vec<Vec<f64>>> {
    let n = x.n();
    dim_check("initial state", n, x0.len())?;
    let eig = sym_eig(x)?;
    let spread = eig.eigenvalues.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let floor = eps_rank * norm2(x0);
    let mut reachable: Vec<Vec<f64>> = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && eig.eigenvalues[end] - eig.eigenvalues[end - 1] <= eps_rank * spread {
            end += 1;
        }
        let mut proj = vec![0.0; n];
        for k in start..end {
            let u = eig.vector(k);
            let c = dot(&u, x0);
            proj.iter_mut().zip(&u).for_each(|(p, v)| *p += c * v);
        }
        let len = norm2(&proj);
        if len > floor && len > 0.0 {
            reachable.push(proj.iter().map(|v| v / len).collect());
        }
        start = end;
    }
    if reachable.len() == n {
        return Ok(vec![]);
    }
    let projector = SymMatrix::from_fn(n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id - reachable.iter().map(|k| k[i] * k[j]).sum::<f64>()
    });
    let eig = sym_eig(&projector)?;
    Ok((0..n).filter(|&k| eig.eigenvalues[k] > 0.5).map(|k| eig.vector(k)).collect())
}
