//! Sparse direct solves backed by faer's supernodal LU.

use faer::col::Col;
use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};

/// Coordinate-format matrix under assembly; duplicate entries are summed.
#[derive(Debug, Clone, Default)]
pub struct TripletMatrix {
    pub n: usize,
    entries: Vec<Triplet<usize, usize, f64>>,
}

impl TripletMatrix {
    pub fn new(n: usize) -> Self {
        Self { n, entries: Vec::new() }
    }

    pub fn with_capacity(n: usize, cap: usize) -> Self {
        Self { n, entries: Vec::with_capacity(cap) }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, val: f64) {
        self.entries.push(Triplet::new(row, col, val));
    }

    pub fn append(&mut self, other: TripletMatrix) {
        self.entries.extend(other.entries);
    }

    pub fn nnz_entries(&self) -> usize {
        self.entries.len()
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for t in &self.entries {
            y[t.row] += t.val * x[t.col];
        }
        y
    }

    /// Solves `A x = b`; `None` when the factorization fails or produces non-finite values.
    pub fn solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(self.n, self.n, &self.entries).ok()?;
        let lu = mat.sp_lu().ok()?;
        let rhs = Col::from_fn(self.n, |i| b[i]);
        let x = lu.solve(&rhs);
        let out: Vec<f64> = (0..self.n).map(|i| x[i]).collect();
        out.iter().all(|v| v.is_finite()).then_some(out)
    }
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_saddle_system() {
        // [[2, 1, 1], [1, 3, 0], [1, 0, 0]] x = [4, 5, 1]  ->  x = (1, 4/3, 2/3)
        let mut a = TripletMatrix::new(3);
        for (r, c, v) in [(0, 0, 1.0), (0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0), (0, 2, 1.0), (2, 0, 1.0)] {
            a.push(r, c, v);
        }
        let x = a.solve(&[4.0, 5.0, 1.0]).unwrap();
        for (xi, e) in x.iter().zip([1.0, 4.0 / 3.0, 2.0 / 3.0]) {
            assert!((xi - e).abs() < 1e-14);
        }
        let r = a.mul_vec(&x);
        assert!((norm2(&r) - norm2(&[4.0, 5.0, 1.0])).abs() < 1e-13);
    }

    #[test]
    fn singular_system_is_reported() {
        let mut a = TripletMatrix::new(2);
        a.push(0, 0, 1.0);
        a.push(1, 0, 1.0);
        assert!(a.solve(&[1.0, 2.0]).is_none());
    }
}
