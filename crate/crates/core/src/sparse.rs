//! Integer sparse symmetric matrices and certified spectral-norm brackets.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Compressed-row integer matrix. Zero entries are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SparseMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<i64>,
}

impl SparseMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            row_ptr: vec![0; dim + 1],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    /// Sums duplicate coordinates and drops entries that cancel to zero.
    pub fn from_entries(dim: usize, entries: &HashMap<(u32, u32), i64>) -> Self {
        let mut triplets: Vec<(u32, u32, i64)> = entries
            .iter()
            .filter(|(_, &v)| v != 0)
            .map(|(&(r, c), &v)| (r, c, v))
            .collect();
        triplets.sort_unstable();
        Self::from_sorted(dim, &triplets)
    }

    /// Builds from triplets, summing duplicates and dropping zeros.
    pub fn from_triplets(dim: usize, triplets: &[(u32, u32, i64)]) -> Self {
        Self::from_triplet_vec(dim, triplets.to_vec())
    }

    pub fn from_triplet_vec(dim: usize, mut triplets: Vec<(u32, u32, i64)>) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(u32, u32, i64)> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|&(_, _, v)| v != 0);
        Self::from_sorted(dim, &merged)
    }

    /// Rows with at least one nonzero entry.
    pub fn nonzero_rows(&self) -> usize {
        (0..self.dim).filter(|&r| self.row_ptr[r + 1] > self.row_ptr[r]).count()
    }

    /// `sum |M[r][c]|`.
    pub fn abs_sum(&self) -> u64 {
        self.vals.iter().map(|v| v.unsigned_abs()).sum()
    }

    fn from_sorted(dim: usize, triplets: &[(u32, u32, i64)]) -> Self {
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals = Vec::with_capacity(triplets.len());
        for &(r, c, v) in triplets {
            assert!((r as usize) < dim && (c as usize) < dim, "entry out of range");
            row_ptr[r as usize + 1] += 1;
            cols.push(c);
            vals.push(v);
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, i64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()]
            .iter()
            .zip(&self.vals[span])
            .map(|(&c, &v)| (c as usize, v))
    }

    pub fn get(&self, r: usize, c: usize) -> i64 {
        self.row(r).find(|&(cc, _)| cc == c).map_or(0, |(_, v)| v)
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, i64)> + '_ {
        (0..self.dim).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn is_symmetric(&self) -> bool {
        self.entries().all(|(r, c, v)| self.get(c, r) == v)
    }

    /// `max_r sum_c |M[r][c]|`; bounds the spectral norm of a symmetric matrix.
    pub fn max_row_abs_sum(&self) -> u64 {
        (0..self.dim)
            .map(|r| self.row(r).map(|(_, v)| v.unsigned_abs()).sum::<u64>())
            .max()
            .unwrap_or(0)
    }

    pub fn frobenius(&self) -> f64 {
        self.vals
            .iter()
            .map(|&v| (v as f64) * (v as f64))
            .sum::<f64>()
            .sqrt()
    }

    /// `a^T M b` in exact arithmetic for `±1`/small integer vectors.
    pub fn bilinear(&self, a: &[i64], b: &[i64]) -> i128 {
        self.entries()
            .map(|(r, c, v)| v as i128 * a[r] as i128 * b[c] as i128)
            .sum()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let row = |r: usize| self.row(r).map(|(c, v)| v as f64 * x[c]).sum::<f64>();
        if self.dim >= 4096 {
            (0..self.dim).into_par_iter().map(row).collect()
        } else {
            (0..self.dim).map(row).collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerIterationConfig {
    pub tol: f64,
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for PowerIterationConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            restarts: 5,
            max_iter: 1000,
            seed: 0,
        }
    }
}

/// `lower <= ||M||_2 <= upper`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralBracket {
    /// Best power-iteration value `||Mv|| / ||v||` over all restarts.
    pub lower: f64,
    /// `min(row-sum bound, Frobenius norm)`.
    pub upper: f64,
    pub row_sum: u64,
    pub frobenius: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Power iteration with random restarts; the returned lower bound never
/// exceeds the true norm, and the upper bound is certified.
pub fn spectral_norm(m: &SparseMatrix, cfg: &PowerIterationConfig) -> SpectralBracket {
    let row_sum = m.max_row_abs_sum();
    let frobenius = m.frobenius();
    let upper = (row_sum as f64).min(frobenius);
    if m.nnz() == 0 {
        return SpectralBracket {
            lower: 0.0,
            upper: 0.0,
            row_sum,
            frobenius,
            converged: true,
            iterations: 0,
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best = 0.0f64;
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..cfg.restarts.max(1) {
        let mut v: Vec<f64> = (0..m.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        normalize(&mut v);
        let mut prev = 0.0;
        for it in 0..cfg.max_iter {
            iterations += 1;
            let mut w = m.matvec(&v);
            let norm = l2(&w);
            if norm == 0.0 {
                break;
            }
            best = best.max(norm);
            w.iter_mut().for_each(|x| *x /= norm);
            v = w;
            if it > 0 && (norm - prev).abs() <= cfg.tol * norm {
                converged = true;
                break;
            }
            prev = norm;
        }
    }
    SpectralBracket {
        lower: best.min(upper),
        upper,
        row_sum,
        frobenius,
        converged,
        iterations,
    }
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn normalize(v: &mut [f64]) {
    let n = l2(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_matrix() {
        let m = SparseMatrix::zeros(5);
        let b = spectral_norm(&m, &PowerIterationConfig::default());
        assert_eq!(b.lower, 0.0);
        assert_eq!(b.upper, 0.0);
    }

    #[test]
    fn perfect_matching_has_norm_one() {
        let t = [(0, 1, 1), (1, 0, 1), (2, 3, -1), (3, 2, -1)];
        let m = SparseMatrix::from_triplets(4, &t);
        assert!(m.is_symmetric());
        let b = spectral_norm(&m, &PowerIterationConfig::default());
        assert!((b.lower - 1.0).abs() < 1e-6);
        assert_eq!(b.row_sum, 1);
        assert!(b.upper >= b.lower);
    }

    #[test]
    fn cancellation_drops_entries() {
        let m = SparseMatrix::from_triplets(2, &[(0, 1, 1), (0, 1, -1), (1, 1, 2)]);
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(1, 1), 2);
        assert_eq!(m.get(0, 1), 0);
    }

    #[test]
    fn bracket_on_dense_block() {
        // all-ones 3x3 has norm 3
        let t: Vec<_> = (0..3).flat_map(|r| (0..3).map(move |c| (r, c, 1))).collect();
        let m = SparseMatrix::from_triplets(3, &t);
        let b = spectral_norm(&m, &PowerIterationConfig::default());
        assert!((b.lower - 3.0).abs() < 1e-6);
        assert_eq!(b.upper, 3.0);
    }
}
