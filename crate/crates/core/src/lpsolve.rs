//! Dense two-phase simplex for `M s = b, s >= 0`, the auxiliary-LP
//! uniqueness test for a basic solution, and a small binary program solver.

use crate::error::{Error, Result};
use crate::matrix::{dot, least_squares, norm_inf, Matrix, PivotedQr};

/// Feasibility tolerance on pre-scaled rows.
pub const TOL_LP: f64 = 1e-9;
/// Entries of a candidate solution at or below this count as zero.
pub const TOL_ZERO: f64 = 1e-7;
/// Largest binary program accepted by [`binary_solve`].
pub const BINARY_BUDGET: usize = 40;
/// Row residual accepted for a binary assignment (rows at unit ∞-norm).
pub const TOL_BINARY: f64 = 1e-6;

const PIVOT_TOL: f64 = 1e-10;
const COST_TOL: f64 = 1e-10;
/// Degenerate pivots in a row before Bland's rule takes over.
const DEGENERATE_RUN: usize = 50;

/// `{ s : M s = b, s >= 0 }` with an optional objective to maximize.
#[derive(Clone, Debug)]
pub struct StandardLp {
    pub m: Matrix,
    pub b: Vec<f64>,
    pub objective: Option<Vec<f64>>,
}

impl StandardLp {
    pub fn new(m: Matrix, b: Vec<f64>, objective: Option<Vec<f64>>) -> Result<Self> {
        if m.rows() != b.len() {
            return Err(Error::Dimension(format!("LP has {} rows but b has {}", m.rows(), b.len())));
        }
        if let Some(c) = &objective {
            if c.len() != m.cols() {
                return Err(Error::Dimension(format!(
                    "LP has {} columns but the objective has {}",
                    m.cols(),
                    c.len()
                )));
            }
        }
        Ok(Self { m, b, objective })
    }

    pub fn feasibility(m: Matrix, b: Vec<f64>) -> Result<Self> {
        Self::new(m, b, None)
    }

    pub fn with_objective(&self, c: Vec<f64>) -> Result<Self> {
        Self::new(self.m.clone(), self.b.clone(), Some(c))
    }

    pub fn vars(&self) -> usize {
        self.m.cols()
    }

    /// `‖M s - b‖_∞`.
    pub fn violation(&self, s: &[f64]) -> f64 {
        let ms = self.m.mul_vec(s);
        ms.iter().zip(&self.b).fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct LpResult {
    pub status: LpStatus,
    /// Basic solution; empty unless the status is `Optimal`.
    pub solution: Vec<f64>,
    pub objective: f64,
    /// Columns in the final basis, sorted.
    pub basis: Vec<usize>,
    /// Phase-one optimum: summed residual of the working rows.
    pub infeasibility: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct SimplexOptions {
    /// Phase-one optimum accepted as feasible.
    pub feas_tol: f64,
    /// Scale each row of `(M | b)` to unit ∞-norm first.
    pub prescale: bool,
    /// Pivot budget; `None` picks one from the problem size.
    pub max_pivots: Option<usize>,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self { feas_tol: TOL_LP, prescale: true, max_pivots: None }
    }
}

pub fn simplex(lp: &StandardLp) -> Result<LpResult> {
    simplex_with(lp, &SimplexOptions::default())
}

/// Phase one ends as soon as the artificials sum to at most `tol`.
#[derive(Clone, Copy)]
struct Feasible {
    first_artificial: usize,
    tol: f64,
}

struct Tableau {
    cols: usize,
    a: Vec<f64>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    /// Reduced costs `c_j - c_B^T B^{-1} A_j`.
    d: Vec<f64>,
    pivots: usize,
    max_pivots: usize,
}

impl Tableau {
    fn rows(&self) -> usize {
        self.rhs.len()
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.cols + j]
    }

    fn pivot(&mut self, p: usize, q: usize) -> Result<()> {
        self.pivots += 1;
        if self.pivots > self.max_pivots {
            return Err(Error::SimplexIterationLimit(self.max_pivots));
        }
        let cols = self.cols;
        let piv = self.at(p, q);
        for v in &mut self.a[p * cols..(p + 1) * cols] {
            *v /= piv;
        }
        self.rhs[p] /= piv;
        let (prow, prhs) = (self.a[p * cols..(p + 1) * cols].to_vec(), self.rhs[p]);
        for i in 0..self.rows() {
            if i == p {
                continue;
            }
            let f = self.a[i * cols + q];
            if f != 0.0 {
                for (v, pv) in self.a[i * cols..(i + 1) * cols].iter_mut().zip(&prow) {
                    *v -= f * pv;
                }
                self.a[i * cols + q] = 0.0;
                self.rhs[i] = (self.rhs[i] - f * prhs).max(0.0);
            }
        }
        let f = self.d[q];
        if f != 0.0 {
            for (v, pv) in self.d.iter_mut().zip(&prow) {
                *v -= f * pv;
            }
            self.d[q] = 0.0;
        }
        self.basis[p] = q;
        Ok(())
    }

    fn set_costs(&mut self, c: &[f64]) {
        for j in 0..self.cols {
            let mut v = c[j];
            for (i, &bi) in self.basis.iter().enumerate() {
                v -= c[bi] * self.at(i, j);
            }
            self.d[j] = v;
        }
        for &bi in &self.basis {
            self.d[bi] = 0.0;
        }
    }

    /// Maximizes over columns `< allowed`. Returns `false` on unboundedness.
    ///
    /// Entering columns follow the largest reduced cost; after a run of
    /// degenerate pivots the rule switches to Bland's (lowest index enters,
    /// lowest basic index leaves on ties) until the objective moves again,
    /// which rules out cycling.
    fn optimize(&mut self, allowed: usize, stop: Option<Feasible>) -> Result<bool> {
        let mut degenerate_run = 0usize;
        loop {
            if let Some(f) = stop {
                if self.artificial_sum(f.first_artificial) <= f.tol {
                    return Ok(true);
                }
            }
            let bland = degenerate_run >= DEGENERATE_RUN;
            let entering = if bland {
                (0..allowed).find(|&j| self.d[j] > COST_TOL)
            } else {
                let mut best: Option<usize> = None;
                for j in 0..allowed {
                    if self.d[j] > COST_TOL && best.map_or(true, |b| self.d[j] > self.d[b]) {
                        best = Some(j);
                    }
                }
                best
            };
            let Some(q) = entering else {
                return Ok(true);
            };
            let Some(p) = self.leaving_row(q, bland) else {
                return Ok(false);
            };
            let step = self.rhs[p] / self.at(p, q);
            if step * self.d[q] > COST_TOL {
                degenerate_run = 0;
            } else {
                degenerate_run += 1;
            }
            self.pivot(p, q)?;
        }
    }

    /// Two-pass ratio test: the bound is relaxed by `PIVOT_TOL` to find the
    /// step, then the largest pivot within that step is taken (Bland mode:
    /// the lowest basic index among exact ties).
    fn leaving_row(&self, q: usize, bland: bool) -> Option<usize> {
        let mut relaxed = f64::INFINITY;
        for i in 0..self.rows() {
            let aiq = self.at(i, q);
            if aiq > PIVOT_TOL {
                relaxed = relaxed.min((self.rhs[i] + PIVOT_TOL) / aiq);
            }
        }
        if relaxed == f64::INFINITY {
            return None;
        }
        let mut best: Option<usize> = None;
        for i in 0..self.rows() {
            let aiq = self.at(i, q);
            if aiq <= PIVOT_TOL || self.rhs[i] / aiq > relaxed {
                continue;
            }
            best = match best {
                None => Some(i),
                Some(b) => {
                    let better = if bland {
                        let (ri, rb) = (self.rhs[i] / aiq, self.rhs[b] / self.at(b, q));
                        ri < rb || (ri == rb && self.basis[i] < self.basis[b])
                    } else {
                        aiq > self.at(b, q)
                    };
                    Some(if better { i } else { b })
                }
            };
        }
        best
    }

    fn artificial_sum(&self, first_artificial: usize) -> f64 {
        self.basis.iter().zip(&self.rhs).filter(|(&bi, _)| bi >= first_artificial).map(|(_, &v)| v).sum()
    }

    fn remove_row(&mut self, p: usize) {
        let cols = self.cols;
        self.a.drain(p * cols..(p + 1) * cols);
        self.rhs.remove(p);
        self.basis.remove(p);
    }
}

/// Two-phase primal simplex with Bland's rule. Deterministic for identical input.
pub fn simplex_with(lp: &StandardLp, opts: &SimplexOptions) -> Result<LpResult> {
    let n = lp.vars();
    let infeasible = |infeasibility: f64| LpResult {
        status: LpStatus::Infeasible,
        solution: vec![],
        objective: f64::NAN,
        basis: vec![],
        infeasibility,
    };

    // Working rows: scaled, zero rows dropped, signs flipped so b >= 0.
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::with_capacity(lp.b.len());
    for (i, &bi) in lp.b.iter().enumerate() {
        let mut r = lp.m.row(i).to_vec();
        let mut bi = bi;
        let rmax = norm_inf(&r);
        if opts.prescale {
            let s = rmax.max(bi.abs());
            if s == 0.0 {
                continue;
            }
            r.iter_mut().for_each(|v| *v /= s);
            bi /= s;
        }
        if rmax == 0.0 {
            if bi.abs() > opts.feas_tol {
                return Ok(infeasible(bi.abs()));
            }
            continue;
        }
        if bi < 0.0 {
            r.iter_mut().for_each(|v| *v = -*v);
            bi = -bi;
        }
        rows.push((r, bi));
    }
    let work_m = Matrix::from_fn(rows.len(), n, |i, j| rows[i].0[j]);
    let work_b: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let r = rows.len();

    let cols = n + r;
    let mut a = vec![0.0; r * cols];
    for (i, (row, _)) in rows.iter().enumerate() {
        a[i * cols..i * cols + n].copy_from_slice(row);
        a[i * cols + n + i] = 1.0;
    }
    let mut t = Tableau {
        cols,
        a,
        rhs: work_b.clone(),
        basis: (n..n + r).collect(),
        d: vec![0.0; cols],
        pivots: 0,
        max_pivots: opts.max_pivots.unwrap_or(50 * (r + n) + 1000),
    };

    // Phase one: maximize minus the artificial sum.
    let mut c1 = vec![0.0; cols];
    c1[n..].iter_mut().for_each(|v| *v = -1.0);
    t.set_costs(&c1);
    t.optimize(cols, Some(Feasible { first_artificial: n, tol: opts.feas_tol }))?;
    let infeasibility = t.artificial_sum(n);
    if infeasibility > opts.feas_tol {
        return Ok(infeasible(infeasibility));
    }

    // Snap remaining artificials to zero and drive them out of the basis.
    let mut p = 0;
    while p < t.rows() {
        if t.basis[p] < n {
            p += 1;
            continue;
        }
        t.rhs[p] = 0.0;
        let mut best = None;
        let mut best_abs = PIVOT_TOL;
        for j in 0..n {
            let v = t.at(p, j).abs();
            if v > best_abs {
                best_abs = v;
                best = Some(j);
            }
        }
        match best {
            Some(j) => {
                t.pivot(p, j)?;
                p += 1;
            }
            None => t.remove_row(p),
        }
    }

    // Phase two over the original columns only.
    let c = lp.objective.clone().unwrap_or_else(|| vec![0.0; n]);
    let mut c2 = vec![0.0; cols];
    c2[..n].copy_from_slice(&c);
    t.set_costs(&c2);
    let bounded = t.optimize(n, None)?;

    let mut basis = t.basis.clone();
    let mut solution = vec![0.0; n];
    if !basis.is_empty() {
        let sub = work_m.select_columns(&basis);
        let xb = least_squares(&sub, &work_b);
        for (&j, &v) in basis.iter().zip(&xb) {
            solution[j] = v.max(0.0);
        }
    }
    // Report the basis in column order for a stable fingerprint.
    basis.sort_unstable();
    if !bounded {
        return Ok(LpResult {
            status: LpStatus::Unbounded,
            solution: vec![],
            objective: f64::INFINITY,
            basis,
            infeasibility,
        });
    }
    Ok(LpResult {
        status: LpStatus::Optimal,
        objective: dot(&c, &solution),
        solution,
        basis,
        infeasibility,
    })
}

/// Outcome of the auxiliary-LP test.
#[derive(Clone, Debug)]
pub struct UniquenessCheck {
    pub unique: bool,
    /// Optimum of the auxiliary LP; `None` when it was not solved.
    pub objective: Option<f64>,
    /// A feasible point that differs from the candidate, when one was found.
    pub witness: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug)]
pub struct CertificateOptions {
    pub tol_zero: f64,
    /// Auxiliary optimum at or below `tol_obj * max(1, ‖sbar‖_∞)` certifies uniqueness.
    pub tol_obj: f64,
    pub simplex: SimplexOptions,
}

impl Default for CertificateOptions {
    fn default() -> Self {
        Self { tol_zero: TOL_ZERO, tol_obj: 1e-6, simplex: SimplexOptions::default() }
    }
}

/// Whether `sbar` is the only point of `{M s = b, s >= 0}`.
pub fn uniqueness_certificate(lp: &StandardLp, sbar: &[f64]) -> Result<bool> {
    Ok(certify_unique(lp, sbar, &CertificateOptions::default())?.unique)
}

/// Maximizes the mass on the zero entries of `sbar`; zero means no other
/// feasible point exists. A candidate whose support columns are dependent is
/// not basic and is rejected without solving.
pub fn certify_unique(lp: &StandardLp, sbar: &[f64], opts: &CertificateOptions) -> Result<UniquenessCheck> {
    if sbar.len() != lp.vars() {
        return Err(Error::Dimension(format!(
            "candidate has {} entries, LP has {} variables",
            sbar.len(),
            lp.vars()
        )));
    }
    let support: Vec<usize> = (0..sbar.len()).filter(|&i| sbar[i] > opts.tol_zero).collect();
    if !support.is_empty() {
        let sub = lp.m.select_columns(&support);
        let scale = norm_inf(&sub.to_rows().concat()).max(f64::MIN_POSITIVE);
        let qr = PivotedQr::new(&sub);
        let independent = support.len() <= sub.rows()
            && qr.r_diag().iter().all(|v| v.abs() > 1e-10 * scale);
        if !independent {
            return Ok(UniquenessCheck { unique: false, objective: None, witness: None });
        }
    }
    let c: Vec<f64> = sbar.iter().map(|&v| if v > opts.tol_zero { 0.0 } else { 1.0 }).collect();
    let aux = lp.with_objective(c)?;
    let res = simplex_with(&aux, &opts.simplex)?;
    let bound = opts.tol_obj * norm_inf(sbar).max(1.0);
    Ok(match res.status {
        LpStatus::Optimal => {
            let unique = res.objective <= bound;
            UniquenessCheck {
                unique,
                objective: Some(res.objective),
                witness: (!unique).then_some(res.solution),
            }
        }
        LpStatus::Unbounded => UniquenessCheck { unique: false, objective: Some(f64::INFINITY), witness: None },
        LpStatus::Infeasible => UniquenessCheck { unique: false, objective: None, witness: None },
    })
}

/// Depth-first search over `s ∈ {0,1}^c` for `M s = b`, variables fixed in
/// index order with 0 tried before 1. Stops after two solutions.
pub fn binary_solve(m: &Matrix, b: &[f64]) -> Result<Vec<Vec<bool>>> {
    let c = m.cols();
    if c > BINARY_BUDGET {
        return Err(Error::VariableBudgetExceeded { vars: c, budget: BINARY_BUDGET });
    }
    if m.rows() != b.len() {
        return Err(Error::Dimension(format!("system has {} rows but b has {}", m.rows(), b.len())));
    }

    // Rows scaled to unit ∞-norm of (M | b); zero rows dropped.
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for (i, &bi) in b.iter().enumerate() {
        let r = m.row(i);
        let s = norm_inf(r).max(bi.abs());
        if s == 0.0 {
            continue;
        }
        rows.push(r.iter().map(|v| v / s).collect::<Vec<_>>());
        rhs.push(bi / s);
    }
    let r = rows.len();
    let sm = Matrix::from_fn(r, c, |i, j| rows[i][j]);

    // Reachable range of the free suffix per row.
    let mut lo = vec![vec![0.0; c + 1]; r];
    let mut hi = vec![vec![0.0; c + 1]; r];
    for i in 0..r {
        for j in (0..c).rev() {
            let v = sm[(i, j)];
            lo[i][j] = lo[i][j + 1] + v.min(0.0);
            hi[i][j] = hi[i][j + 1] + v.max(0.0);
        }
    }

    let mut search = BinarySearch { m: &sm, rhs: &rhs, lo, hi, found: Vec::new() };
    let mut partial = vec![0.0; r];
    let mut assignment = Vec::with_capacity(c);
    search.descend(&mut assignment, &mut partial)?;
    Ok(search.found)
}

struct BinarySearch<'a> {
    m: &'a Matrix,
    rhs: &'a [f64],
    lo: Vec<Vec<f64>>,
    hi: Vec<Vec<f64>>,
    found: Vec<Vec<bool>>,
}

impl BinarySearch<'_> {
    fn descend(&mut self, assignment: &mut Vec<bool>, partial: &mut [f64]) -> Result<()> {
        let depth = assignment.len();
        let c = self.m.cols();
        for i in 0..partial.len() {
            let need = self.rhs[i] - partial[i];
            if need < self.lo[i][depth] - TOL_BINARY || need > self.hi[i][depth] + TOL_BINARY {
                return Ok(());
            }
        }
        if depth == c {
            self.found.push(assignment.clone());
            return Ok(());
        }
        if depth > 0 && !self.relaxation_feasible(depth, partial)? {
            return Ok(());
        }
        for bit in [false, true] {
            if bit {
                for (i, p) in partial.iter_mut().enumerate() {
                    *p += self.m[(i, depth)];
                }
            }
            assignment.push(bit);
            self.descend(assignment, partial)?;
            assignment.pop();
            if bit {
                for (i, p) in partial.iter_mut().enumerate() {
                    *p -= self.m[(i, depth)];
                }
            }
            if self.found.len() >= 2 {
                break;
            }
        }
        Ok(())
    }

    /// LP relaxation of the free suffix with `0 <= s <= 1` via slack columns.
    fn relaxation_feasible(&self, depth: usize, partial: &[f64]) -> Result<bool> {
        let (r, c) = (partial.len(), self.m.cols());
        let f = c - depth;
        if r == 0 {
            return Ok(true);
        }
        let mut lpm = Matrix::zeros(r + f, 2 * f);
        let mut lpb = vec![0.0; r + f];
        for i in 0..r {
            for k in 0..f {
                lpm[(i, k)] = self.m[(i, depth + k)];
            }
            lpb[i] = self.rhs[i] - partial[i];
        }
        for k in 0..f {
            lpm[(r + k, k)] = 1.0;
            lpm[(r + k, f + k)] = 1.0;
            lpb[r + k] = 1.0;
        }
        // Any assignment meeting every row within TOL_BINARY has summed
        // residual at most r * TOL_BINARY.
        let opts = SimplexOptions { feas_tol: r as f64 * TOL_BINARY + TOL_LP, prescale: false, max_pivots: None };
        let res = simplex_with(&StandardLp::feasibility(lpm, lpb)?, &opts)?;
        Ok(res.status != LpStatus::Infeasible)
    }
}
