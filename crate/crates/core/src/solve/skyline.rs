//! Envelope (skyline) LDL^T factorization with reverse Cuthill-McKee ordering.

use std::collections::VecDeque;

use crate::sparse::SparseMatrix;
use crate::{Error, Real, Result};

/// Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee<T: Real>(a: &SparseMatrix<T>) -> Vec<usize> {
    let adj = a.pattern_graph();
    let n = adj.len();
    let deg: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (deg[i], i));
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(&adj, &deg, seed);
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut nbrs = Vec::new();
        while let Some(v) = queue.pop_front() {
            order.push(v);
            nbrs.clear();
            nbrs.extend(adj[v].iter().copied().filter(|&w| !visited[w]));
            nbrs.sort_by_key(|&w| (deg[w], w));
            for &w in &nbrs {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(adj: &[Vec<usize>], start: usize, level: &mut [usize]) -> Vec<usize> {
    let mut comp = vec![start];
    level[start] = 0;
    let mut head = 0;
    while head < comp.len() {
        let v = comp[head];
        head += 1;
        for &w in &adj[v] {
            if level[w] == usize::MAX {
                level[w] = level[v] + 1;
                comp.push(w);
            }
        }
    }
    comp
}

fn pseudo_peripheral(adj: &[Vec<usize>], deg: &[usize], seed: usize) -> usize {
    let mut level = vec![usize::MAX; adj.len()];
    let mut current = seed;
    let mut ecc = 0;
    for _ in 0..8 {
        let comp = bfs_levels(adj, current, &mut level);
        let depth = comp.iter().map(|&v| level[v]).max().unwrap_or(0);
        let candidate = comp
            .iter()
            .copied()
            .filter(|&v| level[v] == depth)
            .min_by_key(|&v| (deg[v], v))
            .unwrap_or(current);
        for &v in &comp {
            level[v] = usize::MAX;
        }
        if depth <= ecc && current != seed {
            break;
        }
        ecc = depth;
        if candidate == current {
            break;
        }
        current = candidate;
    }
    current
}

/// `A = P^T L D L^T P` for a symmetric matrix, stored by rows over each
/// row's envelope.
#[derive(Debug, Clone)]
pub struct SkylineLdlt<T> {
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    values: Vec<T>,
    diag: Vec<T>,
}

fn envelope<T: Real>(a: &SparseMatrix<T>, perm: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let n = a.nrows();
    let mut inv = vec![0; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let mut first: Vec<usize> = (0..n).collect();
    for (i, j, _) in a.triplets() {
        let (pi, pj) = (inv[i], inv[j]);
        let (r, c) = if pi >= pj { (pi, pj) } else { (pj, pi) };
        first[r] = first[r].min(c);
    }
    (inv, first)
}

impl<T: Real> SkylineLdlt<T> {
    /// Stored entries of the factor under the given ordering.
    pub fn profile_size(a: &SparseMatrix<T>, perm: &[usize]) -> usize {
        let (_, first) = envelope(a, perm);
        first.iter().enumerate().map(|(i, &f)| i - f + 1).sum()
    }

    pub fn factor(a: &SparseMatrix<T>) -> Result<Self> {
        Self::factor_with_ordering(a, reverse_cuthill_mckee(a))
    }

    pub fn factor_with_ordering(a: &SparseMatrix<T>, perm: Vec<usize>) -> Result<Self> {
        let n = a.nrows();
        if !a.is_square() || perm.len() != n {
            return Err(Error::InvalidArgument("skyline factorization needs a square matrix".into()));
        }
        let (inv, first) = envelope(a, &perm);
        let mut start = Vec::with_capacity(n + 1);
        let mut total = 0;
        for (i, &f) in first.iter().enumerate() {
            start.push(total);
            total += i - f;
        }
        start.push(total);
        let mut values = vec![T::zero(); total];
        let mut diag = vec![T::zero(); n];
        // Lower triangle of the permuted matrix.
        for (i, j, v) in a.triplets() {
            let (pi, pj) = (inv[i], inv[j]);
            if pi == pj {
                diag[pi] = v;
            } else if pi > pj {
                values[start[pi] + pj - first[pi]] = v;
            }
        }
        let scale: Vec<T> = diag.iter().map(|d| d.abs()).collect();
        for i in 0..n {
            let fi = first[i];
            let si = start[i];
            // Row i holds G_ij = L_ij d_j until converted below.
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let sj = start[j];
                let mut s = values[si + j - fi];
                if k0 < j {
                    let gi = &values[si + k0 - fi..si + j - fi];
                    let lj = &values[sj + k0 - fj..sj + j - fj];
                    let mut acc = T::zero();
                    for (g, l) in gi.iter().zip(lj) {
                        acc += *g * *l;
                    }
                    s -= acc;
                }
                values[si + j - fi] = s;
            }
            let mut d = diag[i];
            for j in fi..i {
                let g = values[si + j - fi];
                let l = g / diag[j];
                values[si + j - fi] = l;
                d -= g * l;
            }
            let tol = T::lit(1e-12) * scale[i].max(T::min_positive_value());
            if !(d.abs() > tol) || !d.is_finite() {
                return Err(Error::Singular(format!("zero pivot at unknown {}", perm[i])));
            }
            diag[i] = d;
        }
        Ok(Self { perm, first, start, values, diag })
    }

    pub fn stored_entries(&self) -> usize {
        self.values.len() + self.diag.len()
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.diag.len();
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.values[self.start[i]..self.start[i + 1]];
            let mut acc = T::zero();
            for (l, y) in row.iter().zip(&x[fi..i]) {
                acc += *l * *y;
            }
            x[i] -= acc;
        }
        for i in 0..n {
            x[i] /= self.diag[i];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let xi = x[i];
            let row = &self.values[self.start[i]..self.start[i + 1]];
            for (l, y) in row.iter().zip(&mut x[fi..i]) {
                *y -= *l * xi;
            }
        }
        let mut out = vec![T::zero(); n];
        for (i, &p) in self.perm.iter().enumerate() {
            out[p] = x[i];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::TripletBuilder;

    fn grid_laplacian(nx: usize, ny: usize) -> SparseMatrix<f64> {
        let id = |i: usize, j: usize| i * ny + j;
        let mut b = TripletBuilder::new(nx * ny, nx * ny);
        for i in 0..nx {
            for j in 0..ny {
                b.push(id(i, j), id(i, j), 4.5);
                if i + 1 < nx {
                    b.push(id(i, j), id(i + 1, j), -1.0);
                    b.push(id(i + 1, j), id(i, j), -1.0);
                }
                if j + 1 < ny {
                    b.push(id(i, j), id(i, j + 1), -1.0);
                    b.push(id(i, j + 1), id(i, j), -1.0);
                }
            }
        }
        b.build()
    }

    #[test]
    fn rcm_is_a_permutation_and_shrinks_profile() {
        let a = grid_laplacian(20, 7);
        let perm = reverse_cuthill_mckee(&a);
        let mut sorted = perm.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..140).collect::<Vec<_>>());
        // Column-major numbering of the grid has bandwidth 20 instead of 7.
        let poor: Vec<usize> = (0..140).map(|k| (k % 20) * 7 + k / 20).collect();
        assert!(SkylineLdlt::profile_size(&a, &perm) < SkylineLdlt::profile_size(&a, &poor));
    }

    #[test]
    fn factor_solves_grid_system() {
        let a = grid_laplacian(9, 11);
        let x_true: Vec<f64> = (0..99).map(|i| (i as f64 * 0.37).cos()).collect();
        let b = a.mul_vec(&x_true);
        let f = SkylineLdlt::factor(&a).unwrap();
        let x = f.solve(&b);
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn indefinite_symmetric_matrix() {
        let a = SparseMatrix::<f64>::from_dense(&[
            vec![1.0, 2.0, 0.0],
            vec![2.0, 1.0, 1.0],
            vec![0.0, 1.0, -3.0],
        ]);
        let f = SkylineLdlt::factor_with_ordering(&a, vec![0, 1, 2]).unwrap();
        let x = f.solve(&[1.0, 0.0, 2.0]);
        let r = a.mul_vec(&x);
        assert!((r[0] - 1.0).abs() < 1e-13 && r[1].abs() < 1e-13 && (r[2] - 2.0).abs() < 1e-13);
    }

    #[test]
    fn disconnected_blocks() {
        let a = SparseMatrix::from_diagonal(&[2.0, 4.0, 8.0]);
        let f = SkylineLdlt::factor(&a).unwrap();
        assert_eq!(f.solve(&[2.0, 4.0, 8.0]), vec![1.0, 1.0, 1.0]);
    }
}
