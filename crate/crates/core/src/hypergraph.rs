//! Colored q-uniform multi-hypergraphs and exact co-degree machinery.
//!
//! Vertices are 0-based ids in `[0, n)`. Edges are identified by their index
//! in input order; sub-hypergraphs produced by [`Hypergraph::restrict`] or
//! [`Hypergraph::subgraph`] carry the original indices along in `ids`.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vertex = u32;
pub type Color = u32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: malformed header, expected `q=<int> n=<int> k=<int>`")]
    MalformedHeader { line: usize },
    #[error("missing header line")]
    MissingHeader,
    #[error("line {line}: invalid header values ({reason})")]
    InvalidHeader { line: usize, reason: String },
    #[error("line {line}: could not parse `{token}` as an integer")]
    BadInteger { line: usize, token: String },
    #[error("line {line}: expected {expected} vertices, found {found}")]
    WrongArity {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: vertex {vertex} out of range [0, {n})")]
    VertexOutOfRange { line: usize, vertex: u64, n: usize },
    #[error("line {line}: color {color} out of range [0, {k})")]
    ColorOutOfRange { line: usize, color: u64, k: usize },
    #[error("line {line}: duplicate vertex {vertex} in edge")]
    DuplicateVertex { line: usize, vertex: Vertex },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EdgeError {
    #[error("edge has {found} vertices, expected {expected}")]
    WrongArity { expected: usize, found: usize },
    #[error("vertex {0} out of range")]
    VertexOutOfRange(Vertex),
    #[error("color {0} out of range")]
    ColorOutOfRange(Color),
    #[error("duplicate vertex {0} in edge")]
    DuplicateVertex(Vertex),
}

/// A hyperedge: `q` distinct vertices kept in increasing order, plus a color.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Hyperedge {
    vertices: Vec<Vertex>,
    color: Color,
}

impl Hyperedge {
    /// Builds an edge, sorting the vertices. Fails on repeated vertices.
    pub fn new(mut vertices: Vec<Vertex>, color: Color) -> Result<Self, EdgeError> {
        vertices.sort_unstable();
        if let Some(w) = vertices.windows(2).find(|w| w[0] == w[1]) {
            return Err(EdgeError::DuplicateVertex(w[0]));
        }
        Ok(Self { vertices, color })
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn color(&self) -> Color {
        self.color
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.vertices.binary_search(&v).is_ok()
    }

    /// `true` if every vertex of the sorted set `q` is in this edge.
    pub fn contains_all(&self, q: &[Vertex]) -> bool {
        q.iter().all(|&v| self.contains(v))
    }
}

/// A q-uniform multi-hypergraph on `[0, n)` with edge colors in `[0, k)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypergraph {
    q: usize,
    n: usize,
    k: usize,
    edges: Vec<Hyperedge>,
    /// Original edge index of each stored edge.
    ids: Vec<usize>,
}

impl Hypergraph {
    pub fn new(q: usize, n: usize, k: usize) -> Self {
        Self {
            q,
            n,
            k,
            edges: Vec::new(),
            ids: Vec::new(),
        }
    }

    /// Builds a hypergraph from edges, assigning ids `0..edges.len()`.
    pub fn from_edges(
        q: usize,
        n: usize,
        k: usize,
        edges: Vec<Hyperedge>,
    ) -> Result<Self, EdgeError> {
        let mut h = Self::new(q, n, k);
        for e in edges {
            h.push(e)?;
        }
        Ok(h)
    }

    /// Convenience constructor used heavily in tests: `(color, vertices)`.
    pub fn from_lists(
        q: usize,
        n: usize,
        k: usize,
        edges: &[(Color, &[Vertex])],
    ) -> Result<Self, EdgeError> {
        let mut h = Self::new(q, n, k);
        for (c, vs) in edges {
            h.push(Hyperedge::new(vs.to_vec(), *c)?)?;
        }
        Ok(h)
    }

    pub fn push(&mut self, e: Hyperedge) -> Result<(), EdgeError> {
        if e.vertices.len() != self.q {
            return Err(EdgeError::WrongArity {
                expected: self.q,
                found: e.vertices.len(),
            });
        }
        if let Some(&v) = e.vertices.iter().find(|&&v| v as usize >= self.n) {
            return Err(EdgeError::VertexOutOfRange(v));
        }
        if e.color as usize >= self.k {
            return Err(EdgeError::ColorOutOfRange(e.color));
        }
        let id = self.ids.last().map_or(0, |&i| i + 1);
        self.edges.push(e);
        self.ids.push(id);
        Ok(())
    }

    pub fn q(&self) -> usize {
        self.q
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn len(&self) -> usize {
        self.edges.len()
    }
    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
    pub fn edges(&self) -> &[Hyperedge] {
        &self.edges
    }
    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    /// Iterates `(original id, edge)`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &Hyperedge)> {
        self.ids.iter().copied().zip(self.edges.iter())
    }

    /// Edges at the given storage positions, keeping their original ids.
    pub fn subgraph(&self, positions: &[usize]) -> Hypergraph {
        Hypergraph {
            q: self.q,
            n: self.n,
            k: self.k,
            edges: positions.iter().map(|&p| self.edges[p].clone()).collect(),
            ids: positions.iter().map(|&p| self.ids[p]).collect(),
        }
    }

    /// Edges with the given original ids, in the order given.
    ///
    /// Returns `None` if an id is not present.
    pub fn select_ids(&self, ids: &[usize]) -> Option<Hypergraph> {
        let pos: HashMap<usize, usize> = self.ids.iter().enumerate().map(|(p, &i)| (i, p)).collect();
        let positions = ids
            .iter()
            .map(|i| pos.get(i).copied())
            .collect::<Option<Vec<_>>>()?;
        Some(self.subgraph(&positions))
    }

    /// Exact number of edges containing `q_set` (with multiplicity).
    /// Sets larger than the uniformity have co-degree 0.
    pub fn co_degree(&self, q_set: &[Vertex]) -> usize {
        if q_set.len() > self.q {
            return 0;
        }
        let mut set = q_set.to_vec();
        set.sort_unstable();
        set.dedup();
        self.edges.iter().filter(|e| e.contains_all(&set)).count()
    }

    /// `H_{|Q}`: all edges containing `Q`, colors and ids preserved.
    pub fn restrict(&self, q_set: &[Vertex]) -> Hypergraph {
        let mut set = q_set.to_vec();
        set.sort_unstable();
        set.dedup();
        let positions: Vec<usize> = if set.len() > self.q {
            Vec::new()
        } else {
            (0..self.edges.len())
                .filter(|&p| self.edges[p].contains_all(&set))
                .collect()
        };
        self.subgraph(&positions)
    }

    /// Map from every `t`-subset occurring in some edge to its co-degree.
    pub fn t_set_counts(&self, t: usize) -> HashMap<Vec<Vertex>, usize> {
        let mut counts = HashMap::new();
        for e in &self.edges {
            for_each_subset(e.vertices(), t, |s| {
                *counts.entry(s.to_vec()).or_insert(0) += 1;
            });
        }
        counts
    }

    /// Exact co-degree profile `d[1..=q]` with lexicographically smallest
    /// witnesses.
    pub fn co_degree_profile(&self) -> CoDegreeProfile {
        let mut d = Vec::with_capacity(self.q);
        let mut witnesses = Vec::with_capacity(self.q);
        for t in 1..=self.q {
            let counts = self.t_set_counts(t);
            match heaviest(&counts) {
                Some((set, c)) => {
                    d.push(c);
                    witnesses.push(Some(set));
                }
                None => {
                    d.push(0);
                    witnesses.push(None);
                }
            }
        }
        CoDegreeProfile { d, witnesses }
    }

    pub fn colors_present(&self) -> Vec<Color> {
        let mut c: Vec<Color> = self.edges.iter().map(|e| e.color).collect();
        c.sort_unstable();
        c.dedup();
        c
    }

    /// Checks that every color class is a matching. Violations are report
    /// content, not errors.
    pub fn validate_matchings(&self) -> MatchingReport {
        let mut by_vertex: HashMap<(Vertex, Color), Vec<usize>> = HashMap::new();
        for (p, e) in self.edges.iter().enumerate() {
            for &v in e.vertices() {
                by_vertex.entry((v, e.color)).or_default().push(p);
            }
        }
        let mut violations = Vec::new();
        for ((v, color), ps) in &by_vertex {
            for a in 0..ps.len() {
                for b in a + 1..ps.len() {
                    violations.push(MatchingViolation {
                        color: *color,
                        first: self.ids[ps[a]],
                        second: self.ids[ps[b]],
                        vertex: *v,
                    });
                }
            }
        }
        violations.sort_by_key(|x| (x.color, x.first, x.second, x.vertex));
        MatchingReport {
            proper_coloring: violations.is_empty(),
            violations,
        }
    }

    /// Text serialization; edges in index order, vertices ascending.
    pub fn to_text(&self) -> String {
        let mut out = format!("q={} n={} k={}\n", self.q, self.n, self.k);
        for e in &self.edges {
            write!(out, "{}", e.color).unwrap();
            for v in &e.vertices {
                write!(out, " {v}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// SHA-256 (hex) of the canonical text serialization.
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }

    /// Parses the line-oriented text format. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());

        let (hline, header) = lines.next().ok_or(ParseError::MissingHeader)?;
        let (q, n, k) = parse_header(hline, header)?;
        let mut h = Hypergraph::new(q, n, k);
        for (line, body) in lines {
            let nums = body
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<u64>().map_err(|_| ParseError::BadInteger {
                        line,
                        token: tok.to_string(),
                    })
                })
                .collect::<Result<Vec<u64>, _>>()?;
            let (&color, verts) = nums.split_first().expect("non-empty line");
            if verts.len() != q {
                return Err(ParseError::WrongArity {
                    line,
                    expected: q,
                    found: verts.len(),
                });
            }
            if color >= k as u64 {
                return Err(ParseError::ColorOutOfRange { line, color, k });
            }
            if let Some(&vertex) = verts.iter().find(|&&v| v >= n as u64) {
                return Err(ParseError::VertexOutOfRange { line, vertex, n });
            }
            let vs: Vec<Vertex> = verts.iter().map(|&v| v as Vertex).collect();
            let e = Hyperedge::new(vs, color as Color).map_err(|e| match e {
                EdgeError::DuplicateVertex(vertex) => ParseError::DuplicateVertex { line, vertex },
                _ => unreachable!("arity and ranges checked above"),
            })?;
            h.edges.push(e);
            h.ids.push(h.ids.len());
        }
        Ok(h)
    }
}

fn parse_header(line: usize, header: &str) -> Result<(usize, usize, usize), ParseError> {
    let mut q = None;
    let mut n = None;
    let mut k = None;
    for tok in header.split_whitespace() {
        let (key, val) = tok
            .split_once('=')
            .ok_or(ParseError::MalformedHeader { line })?;
        let val: usize = val.parse().map_err(|_| ParseError::MalformedHeader { line })?;
        let slot = match key {
            "q" => &mut q,
            "n" => &mut n,
            "k" => &mut k,
            _ => return Err(ParseError::MalformedHeader { line }),
        };
        if slot.replace(val).is_some() {
            return Err(ParseError::MalformedHeader { line });
        }
    }
    match (q, n, k) {
        (Some(q), Some(n), Some(k)) => {
            if q < 2 {
                return Err(ParseError::InvalidHeader {
                    line,
                    reason: format!("q={q} must be at least 2"),
                });
            }
            if q > n {
                return Err(ParseError::InvalidHeader {
                    line,
                    reason: format!("q={q} exceeds n={n}"),
                });
            }
            if n > Vertex::MAX as usize {
                return Err(ParseError::InvalidHeader {
                    line,
                    reason: "n too large".into(),
                });
            }
            Ok((q, n, k))
        }
        _ => Err(ParseError::MalformedHeader { line }),
    }
}

/// Max co-degrees `d[t-1] = d_t` for `t = 1..=q`, each with one witness set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoDegreeProfile {
    d: Vec<usize>,
    witnesses: Vec<Option<Vec<Vertex>>>,
}

impl CoDegreeProfile {
    /// `d_t` for 1-based `t`.
    pub fn d(&self, t: usize) -> usize {
        self.d[t - 1]
    }
    pub fn as_slice(&self) -> &[usize] {
        &self.d
    }
    pub fn witness(&self, t: usize) -> Option<&[Vertex]> {
        self.witnesses[t - 1].as_deref()
    }
    pub fn q(&self) -> usize {
        self.d.len()
    }
    pub fn is_monotone(&self) -> bool {
        self.d.windows(2).all(|w| w[0] >= w[1])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchingViolation {
    pub color: Color,
    pub first: usize,
    pub second: usize,
    pub vertex: Vertex,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchingReport {
    /// Every color class is a matching, equivalently the coloring is proper.
    pub proper_coloring: bool,
    pub violations: Vec<MatchingViolation>,
}

impl MatchingReport {
    pub fn is_valid(&self) -> bool {
        self.proper_coloring
    }
}

/// Entry with the largest count; ties go to the lexicographically smallest key.
pub(crate) fn heaviest(counts: &HashMap<Vec<Vertex>, usize>) -> Option<(Vec<Vertex>, usize)> {
    counts
        .iter()
        .filter(|(_, &c)| c > 0)
        .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
        .map(|(s, &c)| (s.clone(), c))
}

/// Calls `f` on every `t`-subset of the sorted slice `items`, in
/// lexicographic order of positions.
pub fn for_each_subset<T: Copy>(items: &[T], t: usize, mut f: impl FnMut(&[T])) {
    let m = items.len();
    if t > m {
        return;
    }
    let mut idx: Vec<usize> = (0..t).collect();
    let mut buf: Vec<T> = Vec::with_capacity(t);
    loop {
        buf.clear();
        buf.extend(idx.iter().map(|&i| items[i]));
        f(&buf);
        // rightmost position that can still move
        let mut i = t;
        while i > 0 && idx[i - 1] == i - 1 + m - t {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..t {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// All `t`-subsets of `items`.
pub fn subsets<T: Copy>(items: &[T], t: usize) -> Vec<Vec<T>> {
    let mut out = Vec::new();
    for_each_subset(items, t, |s| out.push(s.to_vec()));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_color(edges: &[&[Vertex]]) -> Hypergraph {
        let n = 1 + edges.iter().flat_map(|e| e.iter()).max().copied().unwrap_or(0) as usize;
        let list: Vec<(Color, &[Vertex])> = edges.iter().map(|e| (0, *e)).collect();
        Hypergraph::from_lists(edges[0].len(), n.max(edges[0].len()), 1, &list).unwrap()
    }

    #[test]
    fn parse_basic() {
        let h = Hypergraph::parse("q=3 n=6 k=2\n0 0 1 2\n1 3 4 5").unwrap();
        assert_eq!(h.len(), 2);
        assert_eq!(h.colors_present(), vec![0, 1]);
        assert_eq!(h.edges()[1].vertices(), &[3, 4, 5]);
    }

    #[test]
    fn parse_sorts_and_skips_comments() {
        let h = Hypergraph::parse("# corpus\nq=3 n=6 k=1 # header\n\n0 5 1 3 # edge\n").unwrap();
        assert_eq!(h.edges()[0].vertices(), &[1, 3, 5]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        assert_eq!(
            Hypergraph::parse("q=3 n=6 k=1\n0 0 0 2"),
            Err(ParseError::DuplicateVertex { line: 2, vertex: 0 })
        );
        assert_eq!(
            Hypergraph::parse("q=3 n=6 k=1\n0 0 1 2\n0 1 2 9"),
            Err(ParseError::VertexOutOfRange {
                line: 3,
                vertex: 9,
                n: 6
            })
        );
        assert_eq!(
            Hypergraph::parse("q=3 n=6 k=1\n0 0 1"),
            Err(ParseError::WrongArity {
                line: 2,
                expected: 3,
                found: 2
            })
        );
        assert_eq!(
            Hypergraph::parse("q=3 n=six k=1\n"),
            Err(ParseError::MalformedHeader { line: 1 })
        );
        assert_eq!(
            Hypergraph::parse("q=3 n=6 k=1\n1 0 1 2"),
            Err(ParseError::ColorOutOfRange {
                line: 2,
                color: 1,
                k: 1
            })
        );
        assert_eq!(Hypergraph::parse("# nothing\n"), Err(ParseError::MissingHeader));
    }

    #[test]
    fn parse_empty_body() {
        let h = Hypergraph::parse("q=3 n=6 k=2\n").unwrap();
        assert!(h.is_empty());
        assert_eq!(h.co_degree_profile().as_slice(), &[0, 0, 0]);
        assert_eq!(h.co_degree_profile().witness(1), None);
    }

    #[test]
    fn co_degree_examples() {
        let h = one_color(&[&[1, 2, 3], &[1, 2, 4], &[1, 5, 6]]);
        assert_eq!(h.co_degree(&[1, 2]), 2);
        assert_eq!(h.co_degree(&[1]), 3);
        assert_eq!(h.co_degree(&[2, 5]), 0);
        assert_eq!(h.co_degree(&[1, 2, 3, 4]), 0);
        assert_eq!(h.co_degree(&[]), 3);
    }

    #[test]
    fn profile_examples() {
        let h = one_color(&[
            &[1, 2, 3],
            &[1, 2, 4],
            &[1, 2, 5],
            &[1, 2, 6],
            &[1, 3, 4],
            &[1, 3, 5],
        ]);
        let p = h.co_degree_profile();
        assert_eq!(p.as_slice(), &[6, 4, 1]);
        assert_eq!(p.witness(1), Some(&[1][..]));
        assert_eq!(p.witness(2), Some(&[1, 2][..]));
        assert_eq!(p.witness(3), Some(&[1, 2, 3][..]));

        assert_eq!(one_color(&[&[1, 2, 3]]).co_degree_profile().as_slice(), &[1, 1, 1]);
        assert_eq!(
            one_color(&[&[1, 2, 3], &[1, 2, 3]]).co_degree_profile().as_slice(),
            &[2, 2, 2]
        );
    }

    #[test]
    fn restrict_examples() {
        let h = one_color(&[&[1, 2, 3], &[1, 2, 4], &[1, 5, 6]]);
        let r = h.restrict(&[1, 2]);
        assert_eq!(r.ids(), &[0, 1]);
        assert_eq!(h.restrict(&[]), h);
        assert!(h.restrict(&[9]).is_empty());
        // ids survive a second restriction
        assert_eq!(r.restrict(&[4]).ids(), &[1]);
    }

    #[test]
    fn matching_validation() {
        let h = Hypergraph::parse("q=3 n=6 k=1\n0 1 2 3\n0 3 4 5").unwrap();
        let rep = h.validate_matchings();
        assert!(!rep.proper_coloring);
        assert_eq!(
            rep.violations,
            vec![MatchingViolation {
                color: 0,
                first: 0,
                second: 1,
                vertex: 3
            }]
        );
        assert!(Hypergraph::new(3, 6, 1).validate_matchings().is_valid());
        let ok = Hypergraph::parse("q=3 n=6 k=2\n0 1 2 3\n1 3 4 5").unwrap();
        assert!(ok.validate_matchings().is_valid());
    }

    #[test]
    fn subset_enumeration() {
        assert_eq!(subsets(&[1, 2, 3], 2), vec![vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(subsets(&[1, 2, 3], 0), vec![Vec::<i32>::new()]);
        assert_eq!(subsets(&[1, 2, 3], 3), vec![vec![1, 2, 3]]);
        assert!(subsets(&[1, 2], 3).is_empty());
        assert_eq!(subsets(&[0, 1, 2, 3, 4], 3).len(), 10);
    }
}
