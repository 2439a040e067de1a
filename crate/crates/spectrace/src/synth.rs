//! Seeded synthetic operands: the diagonally dominant SPD recipe, random
//! regular graphs, general sparse matrices, and a matrix-free operator with
//! a prescribed spectrum. Everything is deterministic in the seed.

use crate::linop::{LinearOperator, SparseMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::collections::HashSet;

fn distinct_cols(rng: &mut ChaCha8Rng, d: usize, count: usize, exclude: Option<usize>) -> Vec<usize> {
    let mut cols = Vec::with_capacity(count);
    while cols.len() < count {
        let c = rng.random_range(0..d);
        if Some(c) != exclude && !cols.contains(&c) {
            cols.push(c);
        }
    }
    cols
}

/// Sparse symmetric positive definite matrix: `row_nnz` off-diagonal normal
/// entries per row, mirrored, and the diagonal set to the absolute row sum
/// plus `margin`. Diagonal dominance puts every eigenvalue in
/// `[margin, infinity_norm]`.
pub fn spd_recipe(d: usize, row_nnz: usize, margin: f64, seed: u64) -> SparseMatrix {
    assert!(row_nnz < d, "row_nnz must be below the dimension");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut triplets = Vec::with_capacity(2 * d * row_nnz);
    for i in 0..d {
        for c in distinct_cols(&mut rng, d, row_nnz, Some(i)) {
            let v: f64 = StandardNormal.sample(&mut rng);
            triplets.push((i, c, v));
            triplets.push((c, i, v));
        }
    }
    let off = SparseMatrix::from_triplets(d, d, triplets, false).expect("indices in range");
    let mut row_abs = vec![0.0f64; d];
    for (r, _, v) in off.entries() {
        row_abs[r] += v.abs();
    }
    let full = off
        .entries()
        .chain((0..d).map(|i| (i, i, row_abs[i] + margin)))
        .collect::<Vec<_>>();
    let mut m = SparseMatrix::from_triplets(d, d, full, false).expect("indices in range");
    debug_assert_eq!(m, m.transpose());
    // storage is fully mirrored; mark it so writers emit symmetric files
    m = promote_symmetric(m);
    m
}

fn promote_symmetric(m: SparseMatrix) -> SparseMatrix {
    // Rebuild from the lower triangle with mirroring so the symmetric flag
    // is set through the ordinary constructor.
    let lower: Vec<_> = m.entries().filter(|&(r, c, _)| r >= c).collect();
    SparseMatrix::from_triplets(m.rows(), m.cols(), lower, true).expect("indices in range")
}

/// Random `degree`-regular graph adjacency matrix: a circulant ring
/// rewired by seeded double-edge swaps. Exactly regular, so the spectrum
/// lies in `[-degree, degree]`.
pub fn regular_graph(d: usize, degree: usize, seed: u64) -> SparseMatrix {
    assert!(degree >= 1 && degree < d, "degree must be in [1, d)");
    assert!(d * degree % 2 == 0, "d * degree must be even");
    assert!(degree % 2 == 0 || d % 2 == 0, "odd degree needs an even dimension");

    let key = |a: usize, b: usize| (a.min(b) as u64) * d as u64 + a.max(b) as u64;
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(d * degree / 2);
    let mut present: HashSet<u64> = HashSet::with_capacity(2 * d * degree);
    for i in 0..d {
        for j in 1..=degree / 2 {
            let e = (i, (i + j) % d);
            edges.push(e);
            present.insert(key(e.0, e.1));
        }
    }
    if degree % 2 == 1 {
        for i in 0..d / 2 {
            let e = (i, i + d / 2);
            edges.push(e);
            present.insert(key(e.0, e.1));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let attempts = 10 * edges.len();
    for _ in 0..attempts {
        let e1 = rng.random_range(0..edges.len());
        let e2 = rng.random_range(0..edges.len());
        if e1 == e2 {
            continue;
        }
        let (a, b) = edges[e1];
        let (mut c, mut e) = edges[e2];
        if rng.random::<bool>() {
            std::mem::swap(&mut c, &mut e);
        }
        // propose {a,c}, {b,e}
        if a == c || b == e || a == e || b == c {
            continue;
        }
        if present.contains(&key(a, c)) || present.contains(&key(b, e)) {
            continue;
        }
        present.remove(&key(a, b));
        present.remove(&key(c, e));
        present.insert(key(a, c));
        present.insert(key(b, e));
        edges[e1] = (a, c);
        edges[e2] = (b, e);
    }

    let triplets = edges.into_iter().map(|(i, j)| (i.max(j), i.min(j), 1.0));
    SparseMatrix::from_triplets(d, d, triplets, true).expect("indices in range")
}

/// Random general sparse matrix: `row_nnz` standard normal entries at
/// distinct positions in every row, no symmetrization.
pub fn sparse_general(d: usize, row_nnz: usize, seed: u64) -> SparseMatrix {
    assert!(row_nnz <= d);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut triplets = Vec::with_capacity(d * row_nnz);
    for i in 0..d {
        for c in distinct_cols(&mut rng, d, row_nnz, None) {
            triplets.push((i, c, StandardNormal.sample(&mut rng)));
        }
    }
    SparseMatrix::from_triplets(d, d, triplets, false).expect("indices in range")
}

/// Symmetric operator with an exactly known spectrum: a diagonal conjugated
/// by a palindrome of random Householder reflections,
/// `A = H_1 ... H_k D H_k ... H_1`. Matrix-free, O(k d) per apply.
pub struct SpectrumOperator {
    eigenvalues: Vec<f64>,
    reflectors: Vec<Vec<f64>>,
}

impl SpectrumOperator {
    pub fn new(eigenvalues: Vec<f64>, reflector_count: usize, seed: u64) -> Self {
        let d = eigenvalues.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut reflectors = Vec::with_capacity(reflector_count);
        for _ in 0..reflector_count {
            let mut u: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            for x in u.iter_mut() {
                *x /= norm;
            }
            reflectors.push(u);
        }
        Self { eigenvalues, reflectors }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    fn reflect(u: &[f64], v: &mut [f64]) {
        let c = 2.0 * u.iter().zip(v.iter()).map(|(a, b)| a * b).sum::<f64>();
        for (vi, ui) in v.iter_mut().zip(u) {
            *vi -= c * ui;
        }
    }
}

impl LinearOperator for SpectrumOperator {
    fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
        for u in &self.reflectors {
            Self::reflect(u, out);
        }
        for (o, lam) in out.iter_mut().zip(&self.eigenvalues) {
            *o *= lam;
        }
        for u in self.reflectors.iter().rev() {
            Self::reflect(u, out);
        }
    }
}
