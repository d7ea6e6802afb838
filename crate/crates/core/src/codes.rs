//! Normal-form decoding matchings: Hadamard codes, an odd-arity linear code,
//! and seeded random matchings.

use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hypergraph::{Color, Hyperedge, Hypergraph, Vertex};

/// Identifier of the generator behind [`random_matchings`]; bump on any
/// change to the sampling procedure.
pub const RNG_ALGORITHM: &str = "chacha8-v1";

#[derive(Debug, Error, PartialEq)]
pub enum CodeError {
    #[error("{family}: k={k} out of range {range}")]
    KOutOfRange {
        family: &'static str,
        k: usize,
        range: &'static str,
    },
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
    #[error("code has no encoder")]
    NoEncoder,
    #[error("message has length {found}, expected k={expected}")]
    BadMessage { expected: usize, found: usize },
}

pub type EncodeFn = Arc<dyn Fn(&[i8]) -> Vec<i8> + Send + Sync>;

/// `b in {+1,-1}^k -> E(b) in {+1,-1}^n`.
#[derive(Clone)]
pub enum Encoder {
    /// Coordinate `u` is the product of the message bits in `supports[u]`.
    Linear(Vec<Vec<usize>>),
    Custom(EncodeFn),
}

impl fmt::Debug for Encoder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Encoder::Linear(s) => f.debug_tuple("Linear").field(&s.len()).finish(),
            Encoder::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl Encoder {
    pub fn encode(&self, b: &[i8]) -> Vec<i8> {
        match self {
            Encoder::Linear(supports) => supports
                .iter()
                .map(|s| s.iter().map(|&i| b[i]).product())
                .collect(),
            Encoder::Custom(f) => f(b),
        }
    }
}

/// Provenance recorded next to an emitted corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeParams {
    pub family: String,
    pub k: usize,
    pub n: usize,
    pub q: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rng: Option<String>,
}

/// `k` q-uniform matchings on `[n]`, stored as one colored hypergraph
/// (color `i` is matching `H_i`), with an optional encoder.
#[derive(Debug, Clone)]
pub struct NormalLDC {
    pub params: CodeParams,
    pub hypergraph: Hypergraph,
    pub encoder: Option<Encoder>,
}

impl NormalLDC {
    pub fn k(&self) -> usize {
        self.params.k
    }
    pub fn n(&self) -> usize {
        self.params.n
    }
    pub fn q(&self) -> usize {
        self.params.q
    }

    pub fn matching(&self, i: Color) -> Vec<&Hyperedge> {
        self.hypergraph.edges().iter().filter(|e| e.color() == i).collect()
    }

    pub fn encode(&self, b: &[i8]) -> Result<Vec<i8>, CodeError> {
        let enc = self.encoder.as_ref().ok_or(CodeError::NoEncoder)?;
        if b.len() != self.k() {
            return Err(CodeError::BadMessage {
                expected: self.k(),
                found: b.len(),
            });
        }
        Ok(enc.encode(b))
    }

    /// Whether every query set of `H_i` multiplies to `b_i` on `E(b)`.
    pub fn decodes_exactly(&self, b: &[i8]) -> Result<bool, CodeError> {
        let x = self.encode(b)?;
        Ok(self.hypergraph.edges().iter().all(|e| {
            let prod: i8 = e.vertices().iter().map(|&v| x[v as usize]).product();
            prod == b[e.color() as usize]
        }))
    }

    /// Smallest matching size over `n`.
    pub fn delta(&self) -> f64 {
        let min = (0..self.k() as Color).map(|i| self.matching(i).len()).min().unwrap_or(0);
        min as f64 / self.n() as f64
    }
}

fn build(q: usize, n: usize, k: usize, edges: Vec<(Color, Vec<Vertex>)>) -> Hypergraph {
    let mut h = Hypergraph::new(q, n, k);
    for (c, vs) in edges {
        h.push(Hyperedge::new(vs, c).expect("generated edge is valid"))
            .expect("generated edge fits");
    }
    h
}

/// The Hadamard code of dimension `k`: coordinates are subsets `S` of
/// `[k]` (as bitmasks), `E(b)_S = prod_{i in S} b_i`, and `H_i` pairs `S`
/// with `S xor {i}`.
pub fn hadamard(k: usize) -> Result<NormalLDC, CodeError> {
    if !(2..=16).contains(&k) {
        return Err(CodeError::KOutOfRange {
            family: "hadamard",
            k,
            range: "2..=16",
        });
    }
    let n = 1usize << k;
    let mut edges = Vec::with_capacity(k * n / 2);
    for i in 0..k {
        for s in (0..n).filter(|s| s & (1 << i) == 0) {
            edges.push((i as Color, vec![s as Vertex, (s | 1 << i) as Vertex]));
        }
    }
    let supports = (0..n).map(|s| (0..k).filter(|i| s & (1 << i) != 0).collect()).collect();
    Ok(NormalLDC {
        params: CodeParams {
            family: "hadamard".into(),
            k,
            n,
            q: 2,
            size: Some(n / 2),
            seed: None,
            rng: None,
        },
        hypergraph: build(2, n, k, edges),
        encoder: Some(Encoder::Linear(supports)),
    })
}

/// A linear code with odd `q`-query decoding: bit `j` is replicated on
/// `q + 1` coordinates `x_{j,0..=q}`. For `s < (q+1)/2`, `H_i` contains
/// `{x_{i,s}} cup {x_{j,2s}, x_{j,2s+1} : j = i+1, ..., i+(q-1)/2 mod k}`,
/// whose product is `b_i` because each partner bit appears squared.
///
/// With `k = 1` the code is the repetition cube: one edge on `q` copies.
pub fn odd_parity_code(k: usize, q: usize) -> Result<NormalLDC, CodeError> {
    if q < 3 || q % 2 == 0 {
        return Err(CodeError::Infeasible(format!("q={q} must be odd and >= 3")));
    }
    if k == 0 {
        return Err(CodeError::Infeasible("k must be positive".into()));
    }
    let partners = (q - 1) / 2;
    if k == 1 {
        let params = CodeParams {
            family: "odd_parity".into(),
            k,
            n: q,
            q,
            size: Some(1),
            seed: None,
            rng: None,
        };
        return Ok(NormalLDC {
            params,
            hypergraph: build(q, q, 1, vec![(0, (0..q as Vertex).collect())]),
            encoder: Some(Encoder::Linear(vec![vec![0]; q])),
        });
    }
    if k - 1 < partners {
        return Err(CodeError::Infeasible(format!(
            "k={k} leaves fewer than {partners} partner bits per query set"
        )));
    }
    let reps = q + 1;
    let n = k * reps;
    let coord = |j: usize, c: usize| (j * reps + c) as Vertex;
    let mut edges = Vec::new();
    for i in 0..k {
        for s in 0..reps / 2 {
            let mut e = vec![coord(i, s)];
            for p in 0..partners {
                let j = (i + 1 + p) % k;
                e.push(coord(j, 2 * s));
                e.push(coord(j, 2 * s + 1));
            }
            edges.push((i as Color, e));
        }
    }
    let supports = (0..n).map(|u| vec![u / reps]).collect();
    Ok(NormalLDC {
        params: CodeParams {
            family: "odd_parity".into(),
            k,
            n,
            q,
            size: Some(reps / 2),
            seed: None,
            rng: None,
        },
        hypergraph: build(q, n, k, edges),
        encoder: Some(Encoder::Linear(supports)),
    })
}

/// `k` independent uniform partial matchings of `size` disjoint `q`-sets,
/// deterministic per `seed`. No encoder.
pub fn random_matchings(n: usize, k: usize, q: usize, size: usize, seed: u64) -> Result<NormalLDC, CodeError> {
    if q == 0 {
        return Err(CodeError::Infeasible("q must be positive".into()));
    }
    if size * q > n {
        return Err(CodeError::Infeasible(format!("{size} disjoint {q}-sets do not fit in n={n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut verts: Vec<Vertex> = (0..n as Vertex).collect();
    let mut edges = Vec::with_capacity(k * size);
    for i in 0..k {
        verts.shuffle(&mut rng);
        for e in verts[..size * q].chunks(q) {
            edges.push((i as Color, e.to_vec()));
        }
    }
    Ok(NormalLDC {
        params: CodeParams {
            family: "random_matchings".into(),
            k,
            n,
            q,
            size: Some(size),
            seed: Some(seed),
            rng: Some(RNG_ALGORITHM.into()),
        },
        hypergraph: build(q, n, k, edges),
        encoder: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_b(k: usize, rng: &mut impl Rng) -> Vec<i8> {
        (0..k).map(|_| if rng.gen() { 1 } else { -1 }).collect()
    }

    #[test]
    fn hadamard_shape() {
        let c = hadamard(2).unwrap();
        assert_eq!(c.n(), 4);
        assert_eq!(c.matching(0).len(), 2);
        assert_eq!(c.matching(1).len(), 2);
        assert_eq!(c.delta(), 0.5);
        assert!(c.hypergraph.validate_matchings().is_valid());
        assert!(hadamard(1).is_err());
        assert!(hadamard(17).is_err());
    }

    #[test]
    fn hadamard_decodes() {
        let c = hadamard(5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            assert!(c.decodes_exactly(&random_b(5, &mut rng)).unwrap());
        }
    }

    #[test]
    fn repetition_cube() {
        let c = odd_parity_code(1, 3).unwrap();
        assert_eq!(c.hypergraph.len(), 1);
        assert_eq!(c.hypergraph.edges()[0].vertices(), &[0, 1, 2]);
        assert!(c.decodes_exactly(&[-1]).unwrap());
    }

    #[test]
    fn odd_parity_decodes() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for (k, q) in [(2, 3), (3, 3), (4, 5), (3, 5), (6, 7)] {
            let c = odd_parity_code(k, q).unwrap();
            assert!(c.hypergraph.validate_matchings().is_valid(), "k={k} q={q}");
            for _ in 0..100 {
                assert!(c.decodes_exactly(&random_b(k, &mut rng)).unwrap());
            }
        }
    }

    #[test]
    fn odd_parity_infeasible() {
        assert!(odd_parity_code(3, 4).is_err());
        assert!(odd_parity_code(0, 3).is_err());
        assert!(odd_parity_code(2, 5).is_err());
    }

    #[test]
    fn random_matchings_properties() {
        let a = random_matchings(12, 5, 3, 4, 9).unwrap();
        let b = random_matchings(12, 5, 3, 4, 9).unwrap();
        assert_eq!(a.hypergraph, b.hypergraph);
        assert!(a.hypergraph.validate_matchings().is_valid());
        // size * q = n gives perfect matchings
        for i in 0..5 {
            let mut cover: Vec<Vertex> = a.matching(i).iter().flat_map(|e| e.vertices().to_vec()).collect();
            cover.sort_unstable();
            assert_eq!(cover, (0..12).collect::<Vec<_>>());
        }
        assert_eq!(a.encode(&[1; 5]), Err(CodeError::NoEncoder));
        assert!(random_matchings(10, 2, 3, 4, 0).is_err());
    }
}
