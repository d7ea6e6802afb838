//! Even covers: exact verification, the GF(2) kernel of the incidence
//! matrix, and searches for weak rainbow covers (some color used once).

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decompose::Piece;
use crate::hypergraph::{Color, Hypergraph, MatchingReport, Vertex};
use crate::kikuchi::{binomial_f64, KikuchiError, KikuchiGraph, KikuchiVertex};

/// Largest `|H|` accepted by the dense elimination.
pub const KERNEL_EDGE_CAP: usize = 4096;
/// Largest kernel dimension [`for_each_kernel_vector`] will enumerate.
pub const ENUMERATION_DIM_CAP: usize = 20;

#[derive(Debug, Error, PartialEq)]
pub enum EvenCoverError {
    #[error("edge id {0} is not in the hypergraph")]
    UnknownEdge(usize),
    #[error("{edges} edges exceed the elimination cap {cap}")]
    TooLarge { edges: usize, cap: usize },
    #[error("kernel dimension {dim} exceeds the enumeration cap {cap}")]
    KernelTooLarge { dim: usize, cap: usize },
    #[error("coloring is not proper: {} violation(s), first at color {} vertex {}", .0.violations.len(), .0.violations[0].color, .0.violations[0].vertex)]
    NotProper(MatchingReport),
    #[error(transparent)]
    Kikuchi(#[from] KikuchiError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvenCoverCertificate {
    /// Edge ids, sorted, with repetition.
    pub edge_indices: Vec<usize>,
    pub color_counts: BTreeMap<Color, usize>,
    pub verified: bool,
    /// Smallest color used exactly once.
    pub rainbow_color: Option<Color>,
    /// Vertices covered an odd number of times.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub odd_vertices: Vec<Vertex>,
}

/// Counts vertex multiplicities over the multiset `edge_indices` (edge ids).
pub fn verify_even_cover(h: &Hypergraph, edge_indices: &[usize]) -> Result<EvenCoverCertificate, EvenCoverError> {
    let lookup: HashMap<usize, usize> = h.ids().iter().enumerate().map(|(p, &id)| (id, p)).collect();
    let mut cover = vec![0usize; h.n()];
    let mut color_counts = BTreeMap::new();
    for &id in edge_indices {
        let &p = lookup.get(&id).ok_or(EvenCoverError::UnknownEdge(id))?;
        let e = &h.edges()[p];
        for &v in e.vertices() {
            cover[v as usize] += 1;
        }
        *color_counts.entry(e.color()).or_insert(0) += 1;
    }
    let odd_vertices: Vec<Vertex> = (0..h.n()).filter(|&v| cover[v] % 2 == 1).map(|v| v as Vertex).collect();
    let rainbow_color = color_counts.iter().find(|(_, &c)| c == 1).map(|(&col, _)| col);
    let mut edge_indices = edge_indices.to_vec();
    edge_indices.sort_unstable();
    Ok(EvenCoverCertificate {
        edge_indices,
        color_counts,
        verified: odd_vertices.is_empty(),
        rainbow_color,
        odd_vertices,
    })
}

/// Fixed-width bitset over `u64` words.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitVec {
    words: Vec<u64>,
    len: usize,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }
    pub fn len(&self) -> usize {
        self.len
    }
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }
    pub fn flip(&mut self, i: usize) {
        self.words[i / 64] ^= 1 << (i % 64);
    }
    pub fn xor_with(&mut self, other: &BitVec) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }
    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(|&i| self.get(i))
    }
}

/// Basis of the left kernel of the `|H| x n` incidence matrix over GF(2).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernelBasis {
    pub rank: usize,
    /// Each vector selects edges by storage position.
    pub vectors: Vec<BitVec>,
    /// Storage position to edge id.
    pub ids: Vec<usize>,
}

impl KernelBasis {
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn edge_ids(&self, v: &BitVec) -> Vec<usize> {
        v.ones().map(|p| self.ids[p]).collect()
    }
}

/// Gaussian elimination with bitset rows, column-major, first nonzero row
/// as pivot; the tracking vectors of rows that reduce to zero span the
/// kernel.
pub fn gf2_kernel_basis(h: &Hypergraph) -> Result<KernelBasis, EvenCoverError> {
    let m = h.len();
    if m > KERNEL_EDGE_CAP {
        return Err(EvenCoverError::TooLarge {
            edges: m,
            cap: KERNEL_EDGE_CAP,
        });
    }
    let mut rows: Vec<(BitVec, BitVec)> = h
        .edges()
        .iter()
        .enumerate()
        .map(|(p, e)| {
            let mut inc = BitVec::zeros(h.n());
            for &v in e.vertices() {
                inc.flip(v as usize);
            }
            let mut track = BitVec::zeros(m);
            track.flip(p);
            (inc, track)
        })
        .collect();
    let mut rank = 0;
    for col in 0..h.n() {
        let Some(pivot) = (rank..m).find(|&r| rows[r].0.get(col)) else { continue };
        rows.swap(rank, pivot);
        let (head, tail) = rows.split_at_mut(rank + 1);
        let p = &head[rank];
        for r in tail.iter_mut().filter(|r| r.0.get(col)) {
            r.0.xor_with(&p.0);
            r.1.xor_with(&p.1);
        }
        rank += 1;
    }
    debug_assert!(rows[rank..].iter().all(|r| r.0.is_zero()));
    Ok(KernelBasis {
        rank,
        vectors: rows.into_iter().skip(rank).map(|r| r.1).collect(),
        ids: h.ids().to_vec(),
    })
}

/// Visits every kernel vector (including zero) in Gray-code order.
pub fn for_each_kernel_vector(basis: &KernelBasis, mut f: impl FnMut(&BitVec)) -> Result<(), EvenCoverError> {
    let dim = basis.dim();
    if dim > ENUMERATION_DIM_CAP {
        return Err(EvenCoverError::KernelTooLarge {
            dim,
            cap: ENUMERATION_DIM_CAP,
        });
    }
    let mut cur = BitVec::zeros(basis.ids.len());
    f(&cur);
    for i in 1u64..(1 << dim) {
        cur.xor_with(&basis.vectors[i.trailing_zeros() as usize]);
        f(&cur);
    }
    Ok(())
}

fn colors_of(h: &Hypergraph) -> Vec<Color> {
    h.edges().iter().map(|e| e.color()).collect()
}

fn has_single_color(v: &BitVec, colors: &[Color], k: usize) -> bool {
    let mut counts = vec![0u32; k];
    for p in v.ones() {
        counts[colors[p] as usize] += 1;
    }
    counts.contains(&1)
}

/// A certificate from a successful search, with how it was found.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchHit {
    pub certificate: EvenCoverCertificate,
    /// Basis vector index or random trial number.
    pub trial: u64,
    pub from_basis: bool,
}

const CHUNK: u64 = 4096;

/// Basis vectors first, then up to `budget` random combinations (fair bits
/// per basis vector); the first cover with some color count 1 is returned.
///
/// Random trials run in chunks with independent streams of `seed`, so the
/// result does not depend on the thread count.
pub fn find_weak_rainbow(h: &Hypergraph, budget: u64, seed: u64) -> Result<Option<SearchHit>, EvenCoverError> {
    let report = h.validate_matchings();
    if !report.is_valid() {
        return Err(EvenCoverError::NotProper(report));
    }
    let basis = gf2_kernel_basis(h)?;
    let colors = colors_of(h);
    let k = h.k();
    let hit = |v: &BitVec, trial: u64, from_basis: bool| -> Result<SearchHit, EvenCoverError> {
        let certificate = verify_even_cover(h, &basis.edge_ids(v))?;
        assert!(certificate.verified && certificate.rainbow_color.is_some(), "kernel vector failed verification");
        Ok(SearchHit {
            certificate,
            trial,
            from_basis,
        })
    };
    for (i, v) in basis.vectors.iter().enumerate() {
        if has_single_color(v, &colors, k) {
            return hit(v, i as u64, true).map(Some);
        }
    }
    if basis.dim() == 0 || budget == 0 {
        return Ok(None);
    }
    let chunks = budget.div_ceil(CHUNK);
    let found = (0..chunks).into_par_iter().find_map_first(|c| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c);
        let start = c * CHUNK;
        let end = (start + CHUNK).min(budget);
        let mut cur = BitVec::zeros(basis.ids.len());
        for trial in start..end {
            cur.words.iter_mut().for_each(|w| *w = 0);
            for v in &basis.vectors {
                if rng.gen::<bool>() {
                    cur.xor_with(v);
                }
            }
            if !cur.is_zero() && has_single_color(&cur, &colors, k) {
                return Some((trial, cur));
            }
        }
        None
    });
    found.map(|(trial, v)| hit(&v, trial, false)).transpose()
}

/// Heuristic search through closed walks of the piece's Kikuchi graph.
///
/// Each of `budget` walks starts on a random matching edge and takes up to
/// `2 ceil(log2 N)` steps without immediate backtracking. When it revisits
/// a vertex, the hyperedges labelling the closed segment, reduced mod 2,
/// form an even cover (each step's symmetric differences telescope); it is
/// returned if it verifies and uses some color exactly once.
pub fn kikuchi_walk_search(
    h: &Hypergraph,
    piece: &Piece,
    ell: usize,
    budget: u64,
    seed: u64,
) -> Result<Option<SearchHit>, EvenCoverError> {
    let graph = KikuchiGraph::new(piece, h, ell)?;
    if budget == 0 || graph.pairs.is_empty() {
        return Ok(None);
    }
    let n = h.n();
    let big_n = binomial_f64(2 * n as u64, ell as u64).max(2.0);
    let max_len = 2 * big_n.log2().ceil() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..budget {
        let first = rng.gen_range(0..graph.pairs.len());
        let Some((s0, s1)) = graph.pairs[first].random_edge(n, ell, &mut rng) else { continue };
        let mut walk: Vec<KikuchiVertex> = vec![s0.clone(), s1.clone()];
        let mut labels: Vec<usize> = vec![first];
        let mut seen: HashMap<KikuchiVertex, usize> = HashMap::from([(s0, 0), (s1, 1)]);
        if walk[0] == walk[1] {
            continue;
        }
        while labels.len() < max_len {
            let cur = walk.last().unwrap();
            let prev = &walk[walk.len() - 2];
            let options: Vec<(usize, KikuchiVertex)> =
                graph.neighbors(cur).into_iter().filter(|(_, t)| t != prev).collect();
            if options.is_empty() {
                break;
            }
            let (label, next) = options[rng.gen_range(0..options.len())].clone();
            if let Some(&j) = seen.get(&next) {
                let mut odd: BTreeMap<usize, usize> = BTreeMap::new();
                for &l in labels[j..].iter().chain(std::iter::once(&label)) {
                    let p = &graph.pairs[l];
                    *odd.entry(p.first).or_insert(0) += 1;
                    *odd.entry(p.second).or_insert(0) += 1;
                }
                let edges: Vec<usize> = odd.into_iter().filter(|(_, c)| c % 2 == 1).map(|(e, _)| e).collect();
                if !edges.is_empty() {
                    let cert = verify_even_cover(h, &edges)?;
                    if cert.verified && cert.rainbow_color.is_some() {
                        return Ok(Some(SearchHit {
                            certificate: cert,
                            trial,
                            from_basis: false,
                        }));
                    }
                }
                break;
            }
            seen.insert(next.clone(), walk.len());
            walk.push(next);
            labels.push(label);
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::hadamard;

    #[test]
    fn parallel_copies() {
        let h = Hypergraph::from_lists(3, 4, 1, &[(0, &[0, 1, 2]), (0, &[0, 1, 2])]).unwrap();
        let c = verify_even_cover(&h, &[0, 1]).unwrap();
        assert!(c.verified);
        assert_eq!(c.rainbow_color, None);
        assert_eq!(c.color_counts, BTreeMap::from([(0, 2)]));
        let basis = gf2_kernel_basis(&h).unwrap();
        assert_eq!(basis.dim(), 1);
        assert_eq!(basis.edge_ids(&basis.vectors[0]), vec![0, 1]);
    }

    #[test]
    fn single_edge_is_not_a_cover() {
        let h = Hypergraph::from_lists(3, 4, 1, &[(0, &[0, 1, 2])]).unwrap();
        let c = verify_even_cover(&h, &[0]).unwrap();
        assert!(!c.verified);
        assert_eq!(c.odd_vertices, vec![0, 1, 2]);
        assert!(verify_even_cover(&h, &[3]).is_err());
    }

    #[test]
    fn hadamard_two() {
        let code = hadamard(2).unwrap();
        let h = &code.hypergraph;
        let c = verify_even_cover(h, &[0, 1, 2, 3]).unwrap();
        assert!(c.verified);
        assert_eq!(c.color_counts, BTreeMap::from([(0, 2), (1, 2)]));
        assert_eq!(c.rainbow_color, None);
        let basis = gf2_kernel_basis(h).unwrap();
        assert_eq!(basis.rank, 3);
        assert_eq!(basis.dim(), 1);
        assert_eq!(basis.edge_ids(&basis.vectors[0]), vec![0, 1, 2, 3]);
        assert_eq!(find_weak_rainbow(h, 1000, 0).unwrap(), None);
    }

    #[test]
    fn disjoint_edges_have_trivial_kernel() {
        let h = Hypergraph::from_lists(3, 9, 3, &[(0, &[0, 1, 2]), (1, &[3, 4, 5]), (2, &[6, 7, 8])]).unwrap();
        assert_eq!(gf2_kernel_basis(&h).unwrap().dim(), 0);
    }

    #[test]
    fn parallel_pair_of_two_colors_is_rainbow() {
        let h = Hypergraph::from_lists(3, 3, 2, &[(0, &[0, 1, 2]), (1, &[0, 1, 2])]).unwrap();
        let hit = find_weak_rainbow(&h, 10, 0).unwrap().unwrap();
        assert!(hit.certificate.verified);
        assert_eq!(hit.certificate.edge_indices, vec![0, 1]);
        assert_eq!(hit.certificate.rainbow_color, Some(0));
    }

    #[test]
    fn rejects_improper_coloring() {
        let h = Hypergraph::from_lists(3, 5, 1, &[(0, &[0, 1, 2]), (0, &[2, 3, 4])]).unwrap();
        assert!(matches!(find_weak_rainbow(&h, 10, 0), Err(EvenCoverError::NotProper(_))));
    }

    #[test]
    fn enumeration_visits_whole_kernel() {
        let h = Hypergraph::from_lists(3, 3, 3, &[(0, &[0, 1, 2]), (1, &[0, 1, 2]), (2, &[0, 1, 2])]).unwrap();
        let basis = gf2_kernel_basis(&h).unwrap();
        assert_eq!(basis.dim(), 2);
        let mut seen = Vec::new();
        for_each_kernel_vector(&basis, |v| seen.push(basis.edge_ids(v))).unwrap();
        seen.sort();
        assert_eq!(seen, vec![vec![], vec![0, 1], vec![0, 2], vec![1, 2]]);
    }
}
