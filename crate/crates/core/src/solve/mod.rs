//! Dirichlet constraints and the linear solve contract shared by every
//! deformation solver.
//!
//! Constraints are imposed by row replacement: a constrained row becomes an
//! identity row whose right-hand side is the prescribed value. Internally the
//! solver eliminates those known unknowns and works on the free block, which
//! yields the same solution while keeping symmetric operators symmetric.

mod dense;
mod iterative;
mod skyline;

use crate::sparse::{SparseMatrix, TripletBuilder};
use crate::{Error, Real, Result};

pub use skyline::{reverse_cuthill_mckee, SkylineLdlt};

/// Prescribed values for a subset of unknowns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DirichletSet<T> {
    entries: Vec<(usize, T)>,
}

impl<T: Real> DirichletSet<T> {
    /// Rejects duplicate indices.
    pub fn new(entries: Vec<(usize, T)>) -> Result<Self> {
        let mut idx: Vec<usize> = entries.iter().map(|e| e.0).collect();
        idx.sort_unstable();
        if let Some(w) = idx.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateConstraint(w[0]));
        }
        Ok(Self { entries })
    }

    pub fn empty() -> Self {
        Self { entries: Vec::new() }
    }

    pub fn entries(&self) -> &[(usize, T)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn check_range(&self, dim: usize) -> Result<()> {
        match self.entries.iter().find(|e| e.0 >= dim) {
            Some(&(index, _)) => Err(Error::ConstraintOutOfRange { index, dim }),
            None => Ok(()),
        }
    }

    pub fn mask(&self, dim: usize) -> Result<Vec<bool>> {
        self.check_range(dim)?;
        let mut m = vec![false; dim];
        for &(i, _) in &self.entries {
            m[i] = true;
        }
        Ok(m)
    }
}

/// A square system after row replacement.
#[derive(Debug, Clone)]
pub struct ConstrainedSystem<T> {
    pub matrix: SparseMatrix<T>,
    pub rhs: Vec<T>,
    pub constrained: Vec<bool>,
}

/// Replaces each constrained row with an identity row and sets its
/// right-hand side to the prescribed value. Other rows are untouched.
pub fn apply_dirichlet<T: Real>(
    a: &SparseMatrix<T>,
    rhs: &[T],
    bc: &DirichletSet<T>,
) -> Result<ConstrainedSystem<T>> {
    if !a.is_square() || rhs.len() != a.nrows() {
        return Err(Error::InvalidArgument(format!(
            "system is {}x{} with a right-hand side of length {}",
            a.nrows(),
            a.ncols(),
            rhs.len()
        )));
    }
    let n = a.nrows();
    let constrained = bc.mask(n)?;
    let mut b = TripletBuilder::with_capacity(n, n, a.nnz());
    for i in 0..n {
        if constrained[i] {
            b.push(i, i, T::one());
        } else {
            for (j, v) in a.row(i) {
                b.push(i, j, v);
            }
        }
    }
    let mut rhs = rhs.to_vec();
    for &(i, v) in bc.entries() {
        rhs[i] = v;
    }
    Ok(ConstrainedSystem { matrix: b.build(), rhs, constrained })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    /// Direct factorization when its fill fits the memory budget, otherwise
    /// preconditioned conjugate gradients.
    Auto,
    Direct,
    ConjugateGradient,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveConfig<T> {
    pub method: SolveMethod,
    /// Relative residual target `||Ax - b|| / ||b||` for iterative methods.
    pub tolerance: T,
    /// Defaults to `10 * n` when `None`.
    pub max_iterations: Option<usize>,
    /// Largest skyline profile (stored entries) `Auto` will factor directly.
    pub direct_profile_limit: usize,
}

impl<T: Real> Default for SolveConfig<T> {
    fn default() -> Self {
        Self {
            method: SolveMethod::Auto,
            tolerance: T::lit(1e-10),
            max_iterations: None,
            direct_profile_limit: 40_000_000,
        }
    }
}

impl<T: Real> SolveConfig<T> {
    pub fn direct() -> Self {
        Self { method: SolveMethod::Direct, ..Self::default() }
    }

    pub fn cg(tolerance: T) -> Self {
        Self { method: SolveMethod::ConjugateGradient, tolerance, ..Self::default() }
    }

    pub fn with_tolerance(mut self, tolerance: T) -> Self {
        self.tolerance = tolerance;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.tolerance > T::zero()) {
            return Err(Error::InvalidArgument("solve tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodUsed {
    /// Nothing to solve: every unknown constrained, or a zero right-hand side.
    Trivial,
    SkylineLdlt,
    DenseLu,
    ConjugateGradient,
    BiCgStab,
}

#[derive(Debug, Clone)]
pub struct Solution<T> {
    pub x: Vec<T>,
    pub iterations: usize,
    /// Relative residual of the free block.
    pub relative_residual: T,
    pub method: MethodUsed,
}

/// Solves a row-replaced system.
pub fn solve<T: Real>(system: &ConstrainedSystem<T>, config: &SolveConfig<T>) -> Result<Solution<T>> {
    solve_with_guess(system, config, None)
}

pub fn solve_with_guess<T: Real>(
    system: &ConstrainedSystem<T>,
    config: &SolveConfig<T>,
    guess: Option<&[T]>,
) -> Result<Solution<T>> {
    let solver = ReducedSolver::new(&system.matrix, &system.constrained, config)?;
    // Constrained rows are identity rows, so their rhs are the prescribed values.
    solver.solve(&system.rhs, &system.rhs, guess)
}

enum Backend<T> {
    Trivial,
    Skyline(SkylineLdlt<T>),
    Dense(dense::DenseLu<T>),
    Cg { inv_diag: Vec<T> },
    BiCgStab { inv_diag: Vec<T> },
}

/// Eliminates constrained unknowns once and solves the free block for any
/// number of right-hand sides; the factorization (or preconditioner) is
/// shared between them.
pub struct ReducedSolver<T> {
    n: usize,
    free: Vec<usize>,
    constrained: Vec<bool>,
    a_ff: SparseMatrix<T>,
    /// Free rows, constrained columns (in global numbering).
    a_fc: SparseMatrix<T>,
    /// Set when the free block was negated to make it positive definite.
    negated: bool,
    backend: Backend<T>,
    config: SolveConfig<T>,
}

impl<T: Real> ReducedSolver<T> {
    /// `matrix` rows of constrained unknowns are ignored, so either the
    /// original or the row-replaced operator may be passed.
    pub fn new(matrix: &SparseMatrix<T>, constrained: &[bool], config: &SolveConfig<T>) -> Result<Self> {
        config.validate()?;
        if !matrix.is_square() || constrained.len() != matrix.nrows() {
            return Err(Error::InvalidArgument("constraint mask does not match the system".into()));
        }
        let n = matrix.nrows();
        let mut local = vec![usize::MAX; n];
        let free: Vec<usize> = (0..n).filter(|&i| !constrained[i]).collect();
        for (k, &i) in free.iter().enumerate() {
            local[i] = k;
        }
        let nf = free.len();
        let mut bff = TripletBuilder::with_capacity(nf, nf, matrix.nnz());
        let mut bfc = TripletBuilder::new(nf, n);
        for (k, &i) in free.iter().enumerate() {
            for (j, v) in matrix.row(i) {
                if constrained[j] {
                    bfc.push(k, j, v);
                } else {
                    bff.push(k, local[j], v);
                }
            }
        }
        let mut a_ff = bff.build();
        let mut a_fc = bfc.build();
        // Laplacians are negative semi-definite; CG wants the opposite sign.
        let diag = a_ff.diagonal();
        let negated = !diag.is_empty() && diag.iter().all(|d| *d < T::zero());
        if negated {
            a_ff = a_ff.scale(-T::one());
            a_fc = a_fc.scale(-T::one());
        }
        let backend = Self::choose_backend(&a_ff, config)?;
        Ok(Self { n, free, constrained: constrained.to_vec(), a_ff, a_fc, negated, backend, config: *config })
    }

    fn choose_backend(a: &SparseMatrix<T>, config: &SolveConfig<T>) -> Result<Backend<T>> {
        let nf = a.nrows();
        if nf == 0 {
            return Ok(Backend::Trivial);
        }
        let inv_diag = || -> Result<Vec<T>> {
            a.diagonal()
                .iter()
                .enumerate()
                .map(|(i, &d)| {
                    if d == T::zero() {
                        Err(Error::Singular(format!("zero diagonal in free row {i}")))
                    } else {
                        Ok(T::one() / d)
                    }
                })
                .collect()
        };
        if a.is_symmetric() {
            match config.method {
                SolveMethod::ConjugateGradient => Ok(Backend::Cg { inv_diag: inv_diag()? }),
                SolveMethod::Direct => Ok(Backend::Skyline(SkylineLdlt::factor(a)?)),
                SolveMethod::Auto => {
                    let perm = reverse_cuthill_mckee(a);
                    if SkylineLdlt::profile_size(a, &perm) <= config.direct_profile_limit {
                        Ok(Backend::Skyline(SkylineLdlt::factor_with_ordering(a, perm)?))
                    } else {
                        Ok(Backend::Cg { inv_diag: inv_diag()? })
                    }
                }
            }
        } else if nf <= dense::DENSE_LIMIT && config.method != SolveMethod::ConjugateGradient {
            Ok(Backend::Dense(dense::DenseLu::factor(a)?))
        } else {
            Ok(Backend::BiCgStab { inv_diag: inv_diag()? })
        }
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn free_count(&self) -> usize {
        self.free.len()
    }

    /// `rhs` supplies free-row right-hand sides, `known` the values of the
    /// constrained unknowns; both are indexed globally.
    pub fn solve(&self, rhs: &[T], known: &[T], guess: Option<&[T]>) -> Result<Solution<T>> {
        if rhs.len() != self.n || known.len() != self.n {
            return Err(Error::CountMismatch { expected: self.n, found: rhs.len().min(known.len()) });
        }
        if let Some(i) = rhs.iter().chain(known).position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite right-hand side entry {}", i % self.n)));
        }
        let mut x = vec![T::zero(); self.n];
        for i in 0..self.n {
            if self.constrained[i] {
                x[i] = known[i];
            }
        }
        let correction = self.a_fc.mul_vec(&x);
        let sign = if self.negated { -T::one() } else { T::one() };
        let b: Vec<T> = self.free.iter().zip(&correction).map(|(&i, &c)| sign * rhs[i] - c).collect();
        let x0: Option<Vec<T>> = guess.map(|g| self.free.iter().map(|&i| g[i]).collect());

        let bnorm = norm(&b);
        let max_iter = self.config.max_iterations.unwrap_or(10 * self.free.len().max(1));
        let (xf, iterations, method) = if self.free.is_empty() || (bnorm == T::zero() && x0.is_none()) {
            (vec![T::zero(); self.free.len()], 0, MethodUsed::Trivial)
        } else {
            match &self.backend {
                Backend::Trivial => (Vec::new(), 0, MethodUsed::Trivial),
                Backend::Skyline(f) => (f.solve(&b), 0, MethodUsed::SkylineLdlt),
                Backend::Dense(f) => (f.solve(&b), 0, MethodUsed::DenseLu),
                Backend::Cg { inv_diag } => {
                    let (xf, it) = iterative::pcg(&self.a_ff, &b, inv_diag, x0, self.config.tolerance, max_iter)?;
                    (xf, it, MethodUsed::ConjugateGradient)
                }
                Backend::BiCgStab { inv_diag } => {
                    let (xf, it) =
                        iterative::bicgstab(&self.a_ff, &b, inv_diag, x0, self.config.tolerance, max_iter)?;
                    (xf, it, MethodUsed::BiCgStab)
                }
            }
        };
        if let Some(i) = xf.iter().position(|v| !v.is_finite()) {
            return Err(Error::Singular(format!("non-finite solution at free unknown {i}")));
        }
        let r = self.a_ff.mul_vec(&xf);
        let rnorm = norm(&r.iter().zip(&b).map(|(a, b)| *a - *b).collect::<Vec<_>>());
        let relative_residual = if bnorm > T::zero() { rnorm / bnorm } else { rnorm };
        for (k, &i) in self.free.iter().enumerate() {
            x[i] = xf[k];
        }
        Ok(Solution { x, iterations, relative_residual, method })
    }
}

pub(crate) fn norm<T: Real>(v: &[T]) -> T {
    v.iter().map(|a| *a * *a).sum::<T>().sqrt()
}

pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}
