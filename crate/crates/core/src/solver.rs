//! Direct solver for the complex-symmetric (not Hermitian) systems produced
//! by the variational formulation with modal radiation closures.
//!
//! The matrix is stored as upper-triangle triplets, reordered with reverse
//! Cuthill-McKee to compress the profile, then factored in place as
//! `A = L D L^T` in skyline (active-column) storage. The factorization uses
//! plain transposes, never conjugates, so it is valid for both real and
//! complex symmetric matrices. A vanishing pivot signals an interior
//! resonance or a defective assembly and is reported instead of letting
//! round-off garbage propagate.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Scalar admissible in the symmetric factorization.
pub trait SolveScalar:
    Copy
    + PartialEq
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
    + std::ops::AddAssign
    + std::ops::SubAssign
{
    fn zero() -> Self;
    fn magnitude(self) -> f64;
}

impl SolveScalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl SolveScalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

/// Symmetric sparse matrix accumulated as triplets. Add whole element
/// matrices (both `(i, j)` and `(j, i)` with equal values); entries below
/// the diagonal are discarded so each unordered pair is kept exactly once.
pub struct SparseSymmetric<T> {
    n: usize,
    triplets: Vec<(u32, u32, T)>,
}

impl<T: SolveScalar> SparseSymmetric<T> {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            triplets: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn add(&mut self, i: usize, j: usize, v: T) {
        debug_assert!(i < self.n && j < self.n);
        if i <= j {
            self.triplets.push((i as u32, j as u32, v));
        }
    }

    /// Matrix-vector product using the full symmetry, for residual checks.
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![T::zero(); self.n];
        for &(i, j, v) in &self.triplets {
            let (i, j) = (i as usize, j as usize);
            y[i] += v * x[j];
            if i != j {
                y[j] += v * x[i];
            }
        }
        y
    }

    /// Reorders, builds the skyline, and factors. The matrix is consumed;
    /// keep a clone if residual checks against the original are wanted.
    pub fn factor(&self) -> Result<Factored<T>> {
        let n = self.n;
        let perm = {
            let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
            for &(i, j, _) in &self.triplets {
                let (i, j) = (i as usize, j as usize);
                if i != j {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
            for list in &mut adj {
                list.sort_unstable();
                list.dedup();
            }
            reverse_cuthill_mckee(&adj)
        };
        let mut iperm = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }

        let mut first: Vec<usize> = (0..n).collect();
        for &(i, j, _) in &self.triplets {
            let (a, b) = {
                let (pi, pj) = (iperm[i as usize], iperm[j as usize]);
                (pi.min(pj), pi.max(pj))
            };
            if a < first[b] {
                first[b] = a;
            }
        }
        let mut cols: Vec<Vec<T>> = (0..n).map(|j| vec![T::zero(); j - first[j]]).collect();
        let mut diag = vec![T::zero(); n];
        for &(i, j, v) in &self.triplets {
            let (pi, pj) = (iperm[i as usize], iperm[j as usize]);
            if pi == pj {
                diag[pi] += v;
            } else {
                let (a, b) = (pi.min(pj), pi.max(pj));
                cols[b][a - first[b]] += v;
            }
        }

        let scale = diag
            .iter()
            .map(|d| d.magnitude())
            .fold(0.0f64, f64::max)
            .max(1.0);
        let pivot_tol = 1e-14 * scale;

        for j in 0..n {
            let fj = first[j];
            let (head, tail) = cols.split_at_mut(j);
            let c = &mut tail[0];
            for i in (fj + 1)..j {
                let fi = first[i];
                let lo = fi.max(fj);
                let mut s = T::zero();
                let col_i = &head[i];
                for k in lo..i {
                    s += col_i[k - fi] * c[k - fj];
                }
                c[i - fj] -= s;
            }
            let mut d = diag[j];
            for i in fj..j {
                let g = c[i - fj];
                let l = g / diag[i];
                d -= l * g;
                c[i - fj] = l;
            }
            if d.magnitude() < pivot_tol {
                return Err(Error::SingularSystem {
                    pivot: d.magnitude(),
                    dof: perm[j],
                });
            }
            diag[j] = d;
        }

        Ok(Factored {
            n,
            perm,
            iperm,
            first,
            diag,
            cols,
        })
    }
}

/// Factored system ready for repeated solves.
pub struct Factored<T> {
    n: usize,
    perm: Vec<usize>,
    iperm: Vec<usize>,
    first: Vec<usize>,
    diag: Vec<T>,
    cols: Vec<Vec<T>>,
}

impl<T: SolveScalar> Factored<T> {
    pub fn solve(&self, rhs: &[T]) -> Vec<T> {
        assert_eq!(rhs.len(), self.n);
        let n = self.n;
        let mut b: Vec<T> = (0..n).map(|j| rhs[self.perm[j]]).collect();
        for j in 0..n {
            let fj = self.first[j];
            let mut s = T::zero();
            for i in fj..j {
                s += self.cols[j][i - fj] * b[i];
            }
            b[j] -= s;
        }
        for j in 0..n {
            b[j] = b[j] / self.diag[j];
        }
        for j in (0..n).rev() {
            let fj = self.first[j];
            let bj = b[j];
            for i in fj..j {
                let l = self.cols[j][i - fj];
                b[i] -= l * bj;
            }
        }
        (0..n).map(|i| b[self.iperm[i]]).collect()
    }

    /// Stored factor entries, a cost and conditioning diagnostic.
    pub fn profile(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }
}

/// Reverse Cuthill-McKee ordering; returns `perm` with `perm[new] = old`.
/// Handles disconnected graphs and isolated vertices.
fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let degree = |v: usize| adj[v].len();
    let mut visited = vec![false; n];
    let mut order: Vec<usize> = Vec::with_capacity(n);

    let bfs_layers = |start: usize, visited_scratch: &mut Vec<bool>| -> (usize, usize) {
        visited_scratch.iter_mut().for_each(|v| *v = false);
        let mut frontier = vec![start];
        visited_scratch[start] = true;
        let mut last = start;
        let mut depth = 0usize;
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for &v in &frontier {
                last = v;
                for &w in &adj[v] {
                    if !visited_scratch[w] {
                        visited_scratch[w] = true;
                        next.push(w);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            depth += 1;
            frontier = next;
        }
        (last, depth)
    };

    let mut scratch = vec![false; n];
    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        // Pseudo-peripheral start within this component.
        let mut start = seed;
        let (mut far, mut depth) = bfs_layers(start, &mut scratch);
        loop {
            let (far2, depth2) = bfs_layers(far, &mut scratch);
            if depth2 > depth {
                far = far2;
                depth = depth2;
            } else {
                start = far;
                break;
            }
        }

        let mut queue = std::collections::VecDeque::new();
        // The component containing `seed` also contains `start`.
        if visited[start] {
            start = seed;
        }
        queue.push_back(start);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            nbrs.sort_by_key(|&w| (degree(w), w));
            for w in nbrs {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Deterministic low-quality generator for test fill-in, not used
    /// anywhere in the library itself.
    fn lcg(state: &mut u64) -> f64 {
        *state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
    }

    #[test]
    fn tridiagonal_real_solve_is_exact() {
        // -u'' = 1 on (0,1), u(0)=u(1)=0, standard finite differences.
        let n = 63;
        let h = 1.0 / (n as f64 + 1.0);
        let mut a = SparseSymmetric::<f64>::new(n);
        for i in 0..n {
            a.add(i, i, 2.0 / (h * h));
            if i + 1 < n {
                a.add(i, i + 1, -1.0 / (h * h));
                a.add(i + 1, i, -1.0 / (h * h));
            }
        }
        let f = a.factor().unwrap();
        let rhs = vec![1.0; n];
        let x = f.solve(&rhs);
        for i in 0..n {
            let xi = (i as f64 + 1.0) * h;
            let exact = 0.5 * xi * (1.0 - xi);
            assert!((x[i] - exact).abs() < 1e-12, "node {i}: {} vs {exact}", x[i]);
        }
    }

    #[test]
    fn complex_symmetric_residual_is_tiny() {
        let n = 160;
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut a = SparseSymmetric::<Complex64>::new(n);
        for i in 0..n {
            a.add(i, i, Complex64::new(4.0 + lcg(&mut state), 1.5 + lcg(&mut state)));
            for off in [1usize, 7, 23] {
                if i + off < n {
                    let v = Complex64::new(lcg(&mut state), lcg(&mut state));
                    a.add(i, i + off, v);
                    a.add(i + off, i, v);
                }
            }
        }
        let rhs: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(lcg(&mut state), lcg(&mut state)))
            .collect();
        let f = a.factor().unwrap();
        let x = f.solve(&rhs);
        let ax = a.apply(&x);
        let res: f64 = ax
            .iter()
            .zip(&rhs)
            .map(|(l, r)| (l - r).norm())
            .fold(0.0, f64::max);
        assert!(res < 1e-10, "residual {res}");
    }

    #[test]
    fn singular_matrix_is_reported() {
        let n = 5;
        let mut a = SparseSymmetric::<f64>::new(n);
        for i in 0..n {
            a.add(i, i, 1.0);
        }
        // Make rows 1 and 3 identical: [0,1,1,0,0] each.
        a.triplets.clear();
        for i in 0..n {
            if i != 1 && i != 3 {
                a.add(i, i, 1.0 + i as f64);
            }
        }
        a.add(1, 2, 1.0);
        a.add(3, 2, 1.0);
        match a.factor() {
            Err(Error::SingularSystem { .. }) => {}
            other => panic!("expected singular system, got {:?}", other.map(|_| ()).err()),
        }
    }

    #[test]
    fn rcm_compresses_a_shuffled_path() {
        // Path graph 0-1-...-n-1 relabeled by a stride permutation. With the
        // natural order the profile is n-1; the stride labeling makes it
        // huge; RCM must recover a near-minimal profile.
        let n = 101usize;
        let relabel = |v: usize| (v * 37) % n;
        let mut a = SparseSymmetric::<f64>::new(n);
        for v in 0..n {
            a.add(relabel(v), relabel(v), 4.0);
        }
        for v in 0..n - 1 {
            let (i, j) = (relabel(v), relabel(v + 1));
            a.add(i, j, -1.0);
            a.add(j, i, -1.0);
        }
        let f = a.factor().unwrap();
        assert!(f.profile() <= 2 * n, "profile {} too large", f.profile());
        // And the solve is still correct.
        let mut rhs = vec![0.0; n];
        rhs[relabel(50)] = 1.0;
        let x = f.solve(&rhs);
        let ax = a.apply(&x);
        for i in 0..n {
            assert!((ax[i] - rhs[i]).abs() < 1e-11);
        }
    }

    #[test]
    fn disconnected_blocks_are_handled() {
        let mut a = SparseSymmetric::<f64>::new(4);
        a.add(0, 0, 2.0);
        a.add(1, 1, 3.0);
        a.add(2, 2, 4.0);
        a.add(3, 3, 5.0);
        a.add(0, 1, 1.0);
        a.add(1, 0, 1.0);
        let f = a.factor().unwrap();
        let x = f.solve(&[1.0, 0.0, 4.0, 10.0]);
        assert!((x[2] - 1.0).abs() < 1e-14);
        assert!((x[3] - 2.0).abs() < 1e-14);
        assert!((2.0 * x[0] + x[1] - 1.0).abs() < 1e-14);
        assert!((x[0] + 3.0 * x[1]).abs() < 1e-14);
    }
}
