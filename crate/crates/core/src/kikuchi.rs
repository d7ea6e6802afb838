//! Level-`ell` Kikuchi graphs for odd-arity hypergraph pieces.
//!
//! Vertices are `ell`-subsets of two copies of `[n]`: copy-1 vertex `u` is
//! encoded as `u`, copy-2 vertex `u` as `u + n`. Every ordered pair of
//! distinct hyperedges `(C, C')` inside one group of a piece contributes a
//! perfect matching between the vertices `S` with `S xor T = X cup Y`, where
//! `X = (C \ Q) x {1}` and `Y = (C' \ Q) x {2}`.

use std::collections::HashMap;
use std::io::{self, Write};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decompose::Piece;
use crate::hypergraph::{for_each_subset, Color, CoDegreeProfile, Hyperedge, Hypergraph, Vertex};
use crate::sparse::SparseMatrix;

/// Largest vertex count materialized by [`build_signed`].
pub const DEFAULT_VERTEX_CAP: u128 = 100_000;

#[derive(Debug, Error, PartialEq)]
pub enum KikuchiError {
    #[error("Kikuchi graph has {vertices} vertices, above the explicit cap {cap}; use the implicit graph instead")]
    CapExceeded { vertices: String, cap: u128 },
    #[error("sign vector has length {found}, expected k={expected}")]
    BadSigns { expected: usize, found: usize },
    #[error("split has length {found}, expected k={expected}")]
    BadSplit { expected: usize, found: usize },
    #[error("signs must be +1 or -1, got {0}")]
    NotASign(i8),
    #[error("piece references edge id {0} missing from the source hypergraph")]
    UnknownEdge(usize),
    #[error("vertex set {0:?} is not a valid Kikuchi vertex")]
    BadVertex(Vec<u32>),
}

/// `C(n, k)`, or `None` on `u128` overflow.
pub fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// `C(n, k)` in floating point, for ratios beyond exact range.
pub fn binomial_f64(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `N = C(2n, ell)`, the number of Kikuchi vertices.
pub fn num_vertices(n: usize, ell: usize) -> Option<u128> {
    binomial(2 * n as u64, ell as u64)
}

/// Size `D` of the matching one hyperedge pair contributes, counted as
/// ordered pairs `(S, T)` (twice the number of undirected edges when
/// `q > t`):
/// `C(m, floor(m/2))^2 * C(2n - 2m, ell - m) * 2^[m odd]` with `m = q - t`.
///
/// # Panics
///
/// On `u128` overflow, or if `t > q`.
pub fn matching_size_d(q: usize, t: usize, n: usize, ell: usize) -> u128 {
    assert!(t <= q, "t={t} exceeds q={q}");
    let m = q - t;
    if ell < m || 2 * m > 2 * n {
        return 0;
    }
    let half = binomial(m as u64, (m / 2) as u64).unwrap();
    let rest = binomial((2 * n - 2 * m) as u64, (ell - m) as u64).expect("D overflows u128");
    let odd = if m % 2 == 1 { 2 } else { 1 };
    half.checked_mul(half)
        .and_then(|v| v.checked_mul(rest))
        .and_then(|v| v.checked_mul(odd))
        .expect("D overflows u128")
}

/// `max(1, round(n^(1 - 2/q) ln n))`.
pub fn default_ell(n: usize, q: usize) -> usize {
    let nf = n as f64;
    let v = nf.powf(1.0 - 2.0 / q as f64) * nf.ln();
    (v.round() as usize).max(1)
}

/// Admissible sizes of `S cap X`: `m/2` when `m` is even, both `ceil(m/2)`
/// and `floor(m/2)` when odd.
fn split_sizes(m: usize) -> Vec<usize> {
    if m % 2 == 0 {
        vec![m / 2]
    } else {
        vec![m / 2 + 1, m / 2]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct KikuchiVertex(Vec<u32>);

impl KikuchiVertex {
    pub fn new(mut elements: Vec<u32>, n: usize, ell: usize) -> Result<Self, KikuchiError> {
        elements.sort_unstable();
        let distinct = elements.windows(2).all(|w| w[0] < w[1]);
        if elements.len() != ell || !distinct || elements.iter().any(|&e| e as usize >= 2 * n) {
            return Err(KikuchiError::BadVertex(elements));
        }
        Ok(Self(elements))
    }

    fn from_sorted(elements: Vec<u32>) -> Self {
        debug_assert!(elements.windows(2).all(|w| w[0] < w[1]));
        Self(elements)
    }

    pub fn elements(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The indicator vectors `(s, s')` of the copy-1 and copy-2 parts.
    pub fn indicators(&self, n: usize) -> (Vec<u8>, Vec<u8>) {
        let mut s = vec![0u8; n];
        let mut s2 = vec![0u8; n];
        for &e in &self.0 {
            let e = e as usize;
            if e < n {
                s[e] = 1;
            } else {
                s2[e - n] = 1;
            }
        }
        (s, s2)
    }

    /// `z_S = prod_{u in S} x_{u mod n}`.
    pub fn sign(&self, x: &[i8], n: usize) -> i8 {
        self.0.iter().map(|&e| x[e as usize % n]).product()
    }

    /// Lexicographic rank among all `ell`-subsets of `[0, 2n)`.
    ///
    /// # Panics
    ///
    /// On `u128` overflow.
    pub fn rank(&self, n: usize) -> u128 {
        let universe = 2 * n as u64;
        let ell = self.0.len() as u64;
        let mut rank = 0u128;
        let mut next = 0u64;
        for (i, &e) in self.0.iter().enumerate() {
            for v in next..e as u64 {
                rank += binomial(universe - 1 - v, ell - 1 - i as u64).expect("rank overflows u128");
            }
            next = e as u64 + 1;
        }
        rank
    }
}

/// An ordered pair of distinct hyperedges from one group, with the copy-1
/// part `x = C \ Q` and copy-2 part `y = C' \ Q` (base vertices).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HyperedgePair {
    pub theta: usize,
    pub first: usize,
    pub second: usize,
    pub colors: (Color, Color),
    pub x: Vec<Vertex>,
    pub y: Vec<Vertex>,
}

impl HyperedgePair {
    pub fn new(
        theta: usize,
        (first, c): (usize, &Hyperedge),
        (second, c2): (usize, &Hyperedge),
        q_set: &[Vertex],
    ) -> Self {
        let minus = |e: &Hyperedge| -> Vec<Vertex> {
            e.vertices().iter().copied().filter(|v| !q_set.contains(v)).collect()
        };
        Self {
            theta,
            first,
            second,
            colors: (c.color(), c2.color()),
            x: minus(c),
            y: minus(c2),
        }
    }

    pub fn m(&self) -> usize {
        self.x.len()
    }

    /// `X cup Y` in the two-copy encoding, sorted.
    pub fn difference_set(&self, n: usize) -> Vec<u32> {
        let mut z: Vec<u32> = self
            .x
            .iter()
            .copied()
            .chain(self.y.iter().map(|&v| v + n as u32))
            .collect();
        z.sort_unstable();
        z
    }

    /// The matching partner of `s`, if `s` is matched by this pair.
    pub fn partner(&self, s: &KikuchiVertex, n: usize) -> Option<KikuchiVertex> {
        let m = self.m();
        if self.y.len() != m {
            return None;
        }
        let nn = n as u32;
        let in_x = self.x.iter().filter(|&&v| s.0.binary_search(&v).is_ok()).count();
        let in_y = self.y.iter().filter(|&&v| s.0.binary_search(&(v + nn)).is_ok()).count();
        if in_x + in_y != m || !split_sizes(m).contains(&in_x) {
            return None;
        }
        Some(KikuchiVertex::from_sorted(sym_diff(&s.0, &self.difference_set(n))))
    }

    /// Calls `f(S, T)` for every ordered pair of the matching.
    pub fn for_each_edge(&self, n: usize, ell: usize, mut f: impl FnMut(&[u32], &[u32])) {
        let m = self.m();
        if self.y.len() != m || ell < m {
            return;
        }
        let xs: Vec<u32> = self.x.clone();
        let ys: Vec<u32> = self.y.iter().map(|&v| v + n as u32).collect();
        let z = self.difference_set(n);
        let rest: Vec<u32> = (0..2 * n as u32).filter(|e| z.binary_search(e).is_err()).collect();
        let mut s = Vec::with_capacity(ell);
        let mut t = Vec::with_capacity(ell);
        for a in split_sizes(m) {
            for_each_subset(&xs, a, |a1| {
                for_each_subset(&ys, m - a, |a2| {
                    let core: Vec<u32> = merge(a1, a2);
                    let other = sym_diff(&z, &core);
                    for_each_subset(&rest, ell - m, |u| {
                        s.clear();
                        s.extend(merge(&core, u));
                        t.clear();
                        t.extend(merge(&other, u));
                        f(&s, &t);
                    });
                });
            });
        }
    }

    /// A uniformly random ordered pair of the matching, if nonempty.
    pub fn random_edge<R: Rng>(&self, n: usize, ell: usize, rng: &mut R) -> Option<(KikuchiVertex, KikuchiVertex)> {
        let m = self.m();
        if self.y.len() != m || ell < m || 2 * n < ell + m {
            return None;
        }
        let sizes = split_sizes(m);
        let a = sizes[rng.gen_range(0..sizes.len())];
        let pick = |items: &[u32], k: usize, rng: &mut R| -> Vec<u32> {
            let mut v: Vec<u32> = sample(rng, items.len(), k).into_iter().map(|i| items[i]).collect();
            v.sort_unstable();
            v
        };
        let ys: Vec<u32> = self.y.iter().map(|&v| v + n as u32).collect();
        let z = self.difference_set(n);
        let rest: Vec<u32> = (0..2 * n as u32).filter(|e| z.binary_search(e).is_err()).collect();
        let core = merge(&pick(&self.x, a, rng), &pick(&ys, m - a, rng));
        let u = pick(&rest, ell - m, rng);
        let s = merge(&core, &u);
        let t = merge(&sym_diff(&z, &core), &u);
        Some((KikuchiVertex::from_sorted(s), KikuchiVertex::from_sorted(t)))
    }
}

fn merge(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut v: Vec<u32> = a.iter().chain(b).copied().collect();
    v.sort_unstable();
    v
}

fn sym_diff(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) if x == y => {
                i += 1;
                j += 1;
            }
            (Some(x), Some(y)) if x < y => {
                out.push(*x);
                i += 1;
            }
            (Some(x), None) => {
                out.push(*x);
                i += 1;
            }
            (_, Some(y)) => {
                out.push(*y);
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    out
}

/// The matching contributed by `(C, C')` relative to `Q`, as ordered pairs.
///
/// Each vertex appears at most once as a first coordinate (and, by
/// symmetry, once as a second).
pub fn pair_matching(
    c: &[Vertex],
    c2: &[Vertex],
    q_set: &[Vertex],
    n: usize,
    ell: usize,
) -> Vec<(KikuchiVertex, KikuchiVertex)> {
    let pair = HyperedgePair {
        theta: 0,
        first: 0,
        second: 1,
        colors: (0, 0),
        x: c.iter().copied().filter(|v| !q_set.contains(v)).collect(),
        y: c2.iter().copied().filter(|v| !q_set.contains(v)).collect(),
    };
    let mut out = Vec::new();
    pair.for_each_edge(n, ell, |s, t| {
        out.push((KikuchiVertex::from_sorted(s.to_vec()), KikuchiVertex::from_sorted(t.to_vec())))
    });
    out
}

/// One Kikuchi edge with its provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KikuchiEdge {
    pub s: KikuchiVertex,
    pub t: KikuchiVertex,
    pub c_idx: usize,
    pub c2_idx: usize,
    pub theta: usize,
    pub colors: (Color, Color),
}

fn edge_lookup(source: &Hypergraph) -> HashMap<usize, &Hyperedge> {
    source.iter().collect()
}

/// Every ordered pair of distinct hyperedges sharing a group of `piece`.
pub fn piece_pairs(piece: &Piece, source: &Hypergraph) -> Result<Vec<HyperedgePair>, KikuchiError> {
    let lookup = edge_lookup(source);
    let mut out = Vec::new();
    for (theta, g) in piece.groups.iter().enumerate() {
        let edges = g
            .edges
            .iter()
            .map(|&id| lookup.get(&id).map(|e| (id, *e)).ok_or(KikuchiError::UnknownEdge(id)))
            .collect::<Result<Vec<_>, _>>()?;
        for (a, &ca) in edges.iter().enumerate() {
            for (b, &cb) in edges.iter().enumerate() {
                if a != b {
                    out.push(HyperedgePair::new(theta, ca, cb, &g.q_set));
                }
            }
        }
    }
    Ok(out)
}

fn check_signs(b: &[i8], left: &[bool], k: usize) -> Result<(), KikuchiError> {
    if b.len() != k {
        return Err(KikuchiError::BadSigns {
            expected: k,
            found: b.len(),
        });
    }
    if left.len() != k {
        return Err(KikuchiError::BadSplit {
            expected: k,
            found: left.len(),
        });
    }
    if let Some(&s) = b.iter().find(|&&s| s != 1 && s != -1) {
        return Err(KikuchiError::NotASign(s));
    }
    Ok(())
}

/// Pairs with the first color in `L` and the second in `R`.
fn split_pairs(pairs: Vec<HyperedgePair>, left: &[bool]) -> Vec<HyperedgePair> {
    pairs
        .into_iter()
        .filter(|p| left[p.colors.0 as usize] && !left[p.colors.1 as usize])
        .collect()
}

/// Per-`L`-color matrix `K_{i,t}` before the `b_i` factor.
#[derive(Debug, Clone)]
struct Component {
    color: Color,
    /// `(S, T, b_j)` for every matching edge, unmerged.
    raw: Vec<(u32, u32, i64)>,
}

/// Every matching edge of every ordered hyperedge pair of a piece, with
/// vertices interned once so that many sign/split choices can share it.
#[derive(Debug, Clone)]
pub struct KikuchiCache {
    pub q: usize,
    pub t: usize,
    pub n: usize,
    pub ell: usize,
    pub d: u128,
    pub num_vertices: u128,
    pub k: usize,
    pub pairs: Vec<HyperedgePair>,
    edges: Vec<Vec<(u32, u32)>>,
    vertices: Arc<Vec<KikuchiVertex>>,
    index: Arc<HashMap<KikuchiVertex, u32>>,
}

impl KikuchiCache {
    /// Fails with [`KikuchiError::CapExceeded`] when `C(2n, ell) > cap`.
    pub fn new(piece: &Piece, source: &Hypergraph, ell: usize, cap: u128) -> Result<Self, KikuchiError> {
        let n = source.n();
        let vertices = num_vertices(n, ell);
        match vertices {
            Some(v) if v <= cap => {}
            _ => {
                return Err(KikuchiError::CapExceeded {
                    vertices: vertices.map_or_else(|| format!("C({}, {ell})", 2 * n), |v| v.to_string()),
                    cap,
                })
            }
        }
        let pairs = piece_pairs(piece, source)?;
        let raw: Vec<Vec<(Vec<u32>, Vec<u32>)>> = pairs
            .par_iter()
            .map(|p| {
                let mut edges = Vec::new();
                p.for_each_edge(n, ell, |s, t| edges.push((s.to_vec(), t.to_vec())));
                edges
            })
            .collect();
        let mut verts = Vec::new();
        let mut index: HashMap<KikuchiVertex, u32> = HashMap::new();
        let mut intern = |s: Vec<u32>| -> u32 {
            let v = KikuchiVertex::from_sorted(s);
            if let Some(&i) = index.get(&v) {
                return i;
            }
            let i = verts.len() as u32;
            verts.push(v.clone());
            index.insert(v, i);
            i
        };
        let edges = raw
            .into_iter()
            .map(|es| es.into_iter().map(|(s, t)| (intern(s), intern(t))).collect())
            .collect();
        Ok(Self {
            q: source.q(),
            t: piece.t,
            n,
            ell,
            d: matching_size_d(source.q(), piece.t, n, ell),
            num_vertices: vertices.unwrap(),
            k: source.k(),
            pairs,
            edges,
            vertices: Arc::new(verts),
            index: Arc::new(index),
        })
    }

    /// Vertices incident to some pair's matching.
    pub fn touched(&self) -> usize {
        self.vertices.len()
    }

    /// `sum_{i in L} b_i K_{i,t}` for one sign vector and split.
    pub fn signed(&self, b: &[i8], left: &[bool]) -> Result<SignedKikuchi, KikuchiError> {
        check_signs(b, left, self.k)?;
        let mut components: Vec<Component> = Vec::new();
        for (p, edges) in self.pairs.iter().zip(&self.edges) {
            let (ci, cj) = (p.colors.0 as usize, p.colors.1 as usize);
            if !left[ci] || left[cj] {
                continue;
            }
            let pos = match components.iter().position(|c| c.color == p.colors.0) {
                Some(pos) => pos,
                None => {
                    components.push(Component {
                        color: p.colors.0,
                        raw: Vec::new(),
                    });
                    components.len() - 1
                }
            };
            let sign = b[cj] as i64;
            components[pos].raw.extend(edges.iter().map(|&(s, t)| (s, t, sign)));
        }
        components.sort_by_key(|c| c.color);
        let mut kb = SignedKikuchi {
            q: self.q,
            t: self.t,
            n: self.n,
            ell: self.ell,
            d: self.d,
            num_vertices: self.num_vertices,
            b: b.to_vec(),
            left: left.to_vec(),
            vertices: Arc::clone(&self.vertices),
            index: Arc::clone(&self.index),
            components,
            matrix: SparseMatrix::zeros(0),
        };
        kb.rebuild();
        Ok(kb)
    }
}

/// The explicit signed matrix `sum_{i in L} b_i K_{i,t}`.
#[derive(Debug, Clone)]
pub struct SignedKikuchi {
    pub q: usize,
    pub t: usize,
    pub n: usize,
    pub ell: usize,
    /// Ordered pairs per hyperedge pair.
    pub d: u128,
    pub num_vertices: u128,
    pub b: Vec<i8>,
    pub left: Vec<bool>,
    vertices: Arc<Vec<KikuchiVertex>>,
    index: Arc<HashMap<KikuchiVertex, u32>>,
    components: Vec<Component>,
    matrix: SparseMatrix,
}

/// Materializes the signed Kikuchi matrix of `piece` over `source`.
///
/// Only vertices incident to some matching edge are indexed; all others
/// are zero rows of the `N x N` matrix.
pub fn build_signed(
    piece: &Piece,
    source: &Hypergraph,
    b: &[i8],
    left: &[bool],
    ell: usize,
    cap: u128,
) -> Result<SignedKikuchi, KikuchiError> {
    check_signs(b, left, source.k())?;
    KikuchiCache::new(piece, source, ell, cap)?.signed(b, left)
}

impl SignedKikuchi {
    fn rebuild(&mut self) {
        let mut triplets = Vec::with_capacity(self.raw_edges());
        for comp in &self.components {
            let bi = self.b[comp.color as usize] as i64;
            triplets.extend(comp.raw.iter().map(|&(s, t, v)| (s, t, bi * v)));
        }
        self.matrix = SparseMatrix::from_triplet_vec(self.vertices.len(), triplets);
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    /// Indexed vertices, in matrix row order.
    pub fn vertices(&self) -> &[KikuchiVertex] {
        &self.vertices
    }

    pub fn vertex_index(&self, s: &KikuchiVertex) -> Option<usize> {
        self.index.get(s).map(|&i| i as usize)
    }

    /// Colors of `L` that contribute at least one edge.
    pub fn component_colors(&self) -> Vec<Color> {
        self.components.iter().map(|c| c.color).collect()
    }

    /// The component `K_{i,t}` (without its `b_i` factor).
    pub fn component(&self, color: Color) -> Option<SparseMatrix> {
        let comp = self.components.iter().find(|c| c.color == color)?;
        Some(SparseMatrix::from_triplets(self.vertices.len(), &comp.raw))
    }

    /// Unsigned degree of `s` in `K_{i,t}`: the number of matching edges
    /// at `s`, regardless of the signs `b_j`.
    pub fn degree(&self, s: &KikuchiVertex, color: Color) -> u64 {
        let Some(&si) = self.index.get(s) else { return 0 };
        self.components
            .iter()
            .filter(|c| c.color == color)
            .flat_map(|c| &c.raw)
            .filter(|&&(r, _, _)| r == si)
            .count() as u64
    }

    /// Unsigned degrees of every indexed vertex in every component.
    pub fn degree_table(&self) -> HashMap<Color, Vec<u64>> {
        self.components
            .iter()
            .map(|c| {
                let mut deg = vec![0u64; self.vertices.len()];
                for &(r, _, _) in &c.raw {
                    deg[r as usize] += 1;
                }
                (c.color, deg)
            })
            .collect()
    }

    /// Number of raw matching edges (ordered), before sign cancellation.
    pub fn raw_edges(&self) -> usize {
        self.components.iter().map(|c| c.raw.len()).sum()
    }

    /// Sparse dump: header, vertex ranking table, then `S_rank T_rank value`.
    pub fn write_dump<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# kikuchi q={} t={} n={} ell={} N={} D={}", self.q, self.t, self.n, self.ell, self.num_vertices, self.d)?;
        let ranks: Vec<u128> = self.vertices.iter().map(|v| v.rank(self.n)).collect();
        writeln!(w, "vertices {}", self.vertices.len())?;
        let mut order: Vec<usize> = (0..self.vertices.len()).collect();
        order.sort_by_key(|&i| ranks[i]);
        for &i in &order {
            let elems: Vec<String> = self.vertices[i].elements().iter().map(u32::to_string).collect();
            writeln!(w, "{} {}", ranks[i], elems.join(" "))?;
        }
        writeln!(w, "entries {}", self.matrix.nnz())?;
        let mut entries: Vec<(u128, u128, i64)> =
            self.matrix.entries().map(|(r, c, v)| (ranks[r], ranks[c], v)).collect();
        entries.sort_unstable();
        for (r, c, v) in entries {
            writeln!(w, "{r} {c} {v}")?;
        }
        Ok(())
    }
}

/// `z^T (sum_{i in L} b_i K_{i,t}) z` with `z_S = prod_{u in S} x_u`.
pub fn quadratic_form(kb: &SignedKikuchi, x: &[i8]) -> i128 {
    let z: Vec<i64> = kb.vertices.iter().map(|v| v.sign(x, kb.n) as i64).collect();
    kb.matrix.bilinear(&z, &z)
}

/// `(ell/n)^(q-t) * n * d_t * W^q`, the heavy-vertex degree threshold.
pub fn heavy_threshold(ell: usize, n: usize, q: usize, t: usize, d_t: usize, w: f64) -> f64 {
    (ell as f64 / n as f64).powi((q - t) as i32) * n as f64 * d_t as f64 * w.powi(q as i32)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneReport {
    pub threshold: f64,
    /// Vertices with some component degree above the threshold.
    pub pruned_vertices: usize,
    pub touched_vertices: usize,
    pub num_vertices: f64,
    /// `pruned_vertices / N`.
    pub fraction: f64,
    /// `n^(-100q) + e^(-ell/4)`.
    pub target: f64,
}

/// Zeroes, in each `K_{i,t}`, the rows and columns of vertices whose
/// unsigned degree exceeds `threshold`, then recombines.
pub fn prune_heavy(kb: &SignedKikuchi, threshold: f64) -> (SignedKikuchi, PruneReport) {
    let table = kb.degree_table();
    let mut out = kb.clone();
    let mut pruned = vec![false; kb.vertices.len()];
    for comp in &mut out.components {
        let deg = &table[&comp.color];
        let heavy = |v: u32| deg[v as usize] as f64 > threshold;
        for &(r, c, _) in &comp.raw {
            pruned[r as usize] |= heavy(r);
            pruned[c as usize] |= heavy(c);
        }
        comp.raw.retain(|&(r, c, _)| !heavy(r) && !heavy(c));
    }
    out.rebuild();
    let pruned_vertices = pruned.iter().filter(|&&p| p).count();
    let nv = kb.num_vertices as f64;
    let report = PruneReport {
        threshold,
        pruned_vertices,
        touched_vertices: kb.vertices.len(),
        num_vertices: nv,
        fraction: pruned_vertices as f64 / nv,
        target: (kb.n as f64).powf(-100.0 * kb.q as f64) + (-(kb.ell as f64) / 4.0).exp(),
    };
    (out, report)
}

/// Kikuchi graph generated on demand from hyperedge pairs; supports
/// neighbor and degree queries and sparse matrix-vector products.
#[derive(Debug, Clone)]
pub struct KikuchiGraph {
    pub n: usize,
    pub ell: usize,
    pub pairs: Vec<HyperedgePair>,
}

impl KikuchiGraph {
    /// All ordered pairs of the piece, any colors.
    pub fn new(piece: &Piece, source: &Hypergraph, ell: usize) -> Result<Self, KikuchiError> {
        Ok(Self {
            n: source.n(),
            ell,
            pairs: piece_pairs(piece, source)?,
        })
    }

    /// `(pair index, T)` for every pair matching `s`.
    pub fn neighbors(&self, s: &KikuchiVertex) -> Vec<(usize, KikuchiVertex)> {
        self.pairs
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.partner(s, self.n).map(|t| (i, t)))
            .collect()
    }
}

/// Implicit signed matrix `sum_{i in L} b_i K_{i,t}` without a vertex cap.
#[derive(Debug, Clone)]
pub struct ImplicitKikuchi {
    pub graph: KikuchiGraph,
    pub b: Vec<i8>,
}

impl ImplicitKikuchi {
    pub fn new(piece: &Piece, source: &Hypergraph, b: &[i8], left: &[bool], ell: usize) -> Result<Self, KikuchiError> {
        check_signs(b, left, source.k())?;
        let pairs = split_pairs(piece_pairs(piece, source)?, left);
        Ok(Self {
            graph: KikuchiGraph {
                n: source.n(),
                ell,
                pairs,
            },
            b: b.to_vec(),
        })
    }

    /// Nonzero entries of row `s`.
    pub fn row(&self, s: &KikuchiVertex) -> HashMap<KikuchiVertex, i64> {
        let mut row = HashMap::new();
        for (i, t) in self.graph.neighbors(s) {
            let p = &self.graph.pairs[i];
            let w = self.b[p.colors.0 as usize] as i64 * self.b[p.colors.1 as usize] as i64;
            *row.entry(t).or_insert(0) += w;
        }
        row.retain(|_, v| *v != 0);
        row
    }

    /// Unsigned degree of `s` in `K_{i,t}`.
    pub fn degree(&self, s: &KikuchiVertex, color: Color) -> u64 {
        self.graph
            .pairs
            .iter()
            .filter(|p| p.colors.0 == color && p.partner(s, self.graph.n).is_some())
            .count() as u64
    }

    /// `M v` for a sparsely supported `v`.
    pub fn apply(&self, v: &HashMap<KikuchiVertex, f64>) -> HashMap<KikuchiVertex, f64> {
        let mut out: HashMap<KikuchiVertex, f64> = HashMap::new();
        for (s, &val) in v {
            // M is symmetric, so (Mv)_T = sum_S M[T][S] v_S = sum_S M[S][T] v_S
            for (t, w) in self.row(s) {
                *out.entry(t).or_insert(0.0) += w as f64 * val;
            }
        }
        out
    }
}

/// `Deg(s, s')` for one color of a piece: one monomial `s_R s'_{R'}` per
/// `(C, C', R, R')` with `C` of the given color.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreePolynomial {
    pub q: usize,
    pub t: usize,
    pub n: usize,
    pub color: Color,
    /// `(R, R')` per monomial, with multiplicity.
    pub monomials: Vec<(Vec<Vertex>, Vec<Vertex>)>,
}

impl DegreePolynomial {
    /// The case split is on the parity of `q - t`: balanced halves when even,
    /// both `ceil`/`floor` assignments when odd.
    pub fn new(piece: &Piece, source: &Hypergraph, color: Color) -> Result<Self, KikuchiError> {
        let m = source.q() - piece.t;
        let mut monomials = Vec::new();
        for p in piece_pairs(piece, source)?.into_iter().filter(|p| p.colors.0 == color) {
            for a in split_sizes(m) {
                for_each_subset(&p.x, a, |r| {
                    for_each_subset(&p.y, m - a, |r2| monomials.push((r.to_vec(), r2.to_vec())));
                });
            }
        }
        Ok(Self {
            q: source.q(),
            t: piece.t,
            n: source.n(),
            color,
            monomials,
        })
    }

    pub fn degree(&self) -> usize {
        self.q - self.t
    }

    pub fn eval(&self, s: &[u8], s2: &[u8]) -> u64 {
        self.monomials
            .iter()
            .filter(|(r, r2)| r.iter().all(|&v| s[v as usize] == 1) && r2.iter().all(|&v| s2[v as usize] == 1))
            .count() as u64
    }

    fn surviving<'a>(&'a self, z1: &'a [Vertex], z2: &'a [Vertex]) -> impl Iterator<Item = &'a (Vec<Vertex>, Vec<Vertex>)> + 'a {
        self.monomials
            .iter()
            .filter(move |(r, r2)| z1.iter().all(|v| r.contains(v)) && z2.iter().all(|v| r2.contains(v)))
    }

    /// `E[(prod_{Z1} d/ds_i)(prod_{Z2} d/ds'_j) Deg]` under i.i.d.
    /// Bernoulli(`p`) coordinates, exactly.
    pub fn expected_derivative(&self, z1: &[Vertex], z2: &[Vertex], p: &BigRational) -> BigRational {
        if has_repeat(z1) || has_repeat(z2) {
            return BigRational::zero();
        }
        let Some(rem) = self.degree().checked_sub(z1.len() + z2.len()) else {
            return BigRational::zero();
        };
        let count = self.surviving(z1, z2).count();
        BigRational::from_integer(BigInt::from(count)) * pow(p, rem)
    }

    /// Monte-Carlo estimate of [`Self::expected_derivative`]: `(mean, stderr)`.
    pub fn sample_derivative<R: Rng>(&self, z1: &[Vertex], z2: &[Vertex], p: f64, samples: usize, rng: &mut R) -> (f64, f64) {
        if has_repeat(z1) || has_repeat(z2) || samples == 0 {
            return (0.0, 0.0);
        }
        let monos: Vec<(Vec<Vertex>, Vec<Vertex>)> = self
            .surviving(z1, z2)
            .map(|(r, r2)| {
                (
                    r.iter().copied().filter(|v| !z1.contains(v)).collect(),
                    r2.iter().copied().filter(|v| !z2.contains(v)).collect(),
                )
            })
            .collect();
        let (mut sum, mut sq) = (0.0, 0.0);
        let mut s = vec![false; self.n];
        let mut s2 = vec![false; self.n];
        for _ in 0..samples {
            s.iter_mut().for_each(|b| *b = rng.gen_bool(p));
            s2.iter_mut().for_each(|b| *b = rng.gen_bool(p));
            let v = monos
                .iter()
                .filter(|(r, r2)| r.iter().all(|&u| s[u as usize]) && r2.iter().all(|&u| s2[u as usize]))
                .count() as f64;
            sum += v;
            sq += v * v;
        }
        let k = samples as f64;
        let mean = sum / k;
        let var = (sq / k - mean * mean).max(0.0);
        (mean, (var / k).sqrt())
    }
}

fn has_repeat(z: &[Vertex]) -> bool {
    let mut v = z.to_vec();
    v.sort_unstable();
    v.windows(2).any(|w| w[0] == w[1])
}

fn pow(p: &BigRational, e: usize) -> BigRational {
    (0..e).fold(BigRational::one(), |acc, _| acc * p)
}

/// `Deg(s, s')` of `piece` for color `i`.
pub fn degree_poly_eval(piece: &Piece, source: &Hypergraph, i: Color, s: &[u8], s2: &[u8]) -> Result<u64, KikuchiError> {
    Ok(DegreePolynomial::new(piece, source, i)?.eval(s, s2))
}

/// Exact expected partial derivative of `Deg` under the `p`-biased product
/// distribution.
pub fn expected_derivative(
    piece: &Piece,
    source: &Hypergraph,
    i: Color,
    z1: &[Vertex],
    z2: &[Vertex],
    p: &BigRational,
) -> Result<BigRational, KikuchiError> {
    Ok(DegreePolynomial::new(piece, source, i)?.expected_derivative(z1, z2, p))
}

/// Upper bounds on expected derivatives in terms of a co-degree profile.
pub mod bounds {
    use super::*;

    fn d(profile: &CoDegreeProfile, r: usize) -> BigRational {
        BigRational::from_integer(BigInt::from(profile.d(r)))
    }

    fn two_pow(e: usize) -> BigRational {
        BigRational::from_integer(BigInt::one() << e)
    }

    /// `2^q p^(q-t-|Z2|) d_{|Z2|}`, for `Z1` empty and `Z2` nonempty.
    pub fn first(q: usize, t: usize, z2: usize, p: &BigRational, profile: &CoDegreeProfile) -> Option<BigRational> {
        let e = (q - t).checked_sub(z2)?;
        (z2 >= 1).then(|| two_pow(q) * pow(p, e) * d(profile, z2))
    }

    /// `2^q p^(q-t-|Z1|-|Z2|) d_{|Z2|+t}`, for `Z1` nonempty.
    pub fn second(q: usize, t: usize, z1: usize, z2: usize, p: &BigRational, profile: &CoDegreeProfile) -> Option<BigRational> {
        let e = (q - t).checked_sub(z1 + z2)?;
        (z1 >= 1 && z2 + t <= q).then(|| two_pow(q) * pow(p, e) * d(profile, z2 + t))
    }

    /// `2^(2q) p^(q-t) n d_t`, bounding `E[Deg]`.
    pub fn expectation(q: usize, t: usize, n: usize, p: &BigRational, profile: &CoDegreeProfile) -> BigRational {
        two_pow(2 * q) * pow(p, q - t) * BigRational::from_integer(BigInt::from(n)) * d(profile, t)
    }
}

/// `p` as a float, for sampling.
pub fn rational_to_f64(p: &BigRational) -> f64 {
    p.to_f64().unwrap_or(f64::NAN)
}
