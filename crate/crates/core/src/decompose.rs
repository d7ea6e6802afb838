//! Approximate strong regularity decomposition.
//!
//! [`extract_regular`] peels heaviest `t`-sets off the current hypergraph
//! until its `t`-co-degree drops below half of the starting value;
//! [`decompose`] repeats that with a freshly selected good index until no
//! edge is left. [`certify_piece`] re-checks a piece from scratch.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::goodindex::{find_good_index, is_good_index, GammaError, GammaSequence, TOLERANCE};
use crate::hypergraph::{for_each_subset, heaviest, Hypergraph, Vertex};

#[derive(Debug, Error, PartialEq)]
pub enum DecomposeError {
    #[error("cannot extract a regular part from an empty hypergraph")]
    Empty,
    #[error("index t={t} out of range 1..={q}")]
    BadIndex { t: usize, q: usize },
    #[error("decomposition needs odd q >= 3, got q={0}")]
    EvenQ(usize),
    #[error(transparent)]
    Gamma(#[from] GammaError),
    #[error("eta={0} must lie in (0,1)")]
    BadEta(f64),
}

/// One group `H_theta`: edges (by original id) sharing the set `Q_theta`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Group {
    #[serde(rename = "Q")]
    pub q_set: Vec<Vertex>,
    pub edges: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub t: usize,
    pub groups: Vec<Group>,
    /// Exponents of the hypergraph the piece was peeled from.
    pub gamma_at_creation: GammaSequence,
}

impl Piece {
    pub fn len(&self) -> usize {
        self.groups.iter().map(|g| g.edges.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All edge ids, group by group.
    pub fn edges(&self) -> Vec<usize> {
        self.groups.iter().flat_map(|g| g.edges.iter().copied()).collect()
    }

    /// The piece as a hypergraph over `source`, groups in order.
    ///
    /// # Panics
    ///
    /// If an edge id is not present in `source`.
    pub fn hypergraph(&self, source: &Hypergraph) -> Hypergraph {
        source
            .select_ids(&self.edges())
            .expect("piece references edges of its source")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub q: usize,
    pub n: usize,
    pub pieces: Vec<Piece>,
    pub leftover: Vec<usize>,
    pub eta: Option<f64>,
    pub source_len: usize,
    pub source_hash: String,
}

impl Decomposition {
    /// `q * ceil(log2 |H|) + 1`.
    pub fn piece_bound(q: usize, m: usize) -> usize {
        if m <= 1 {
            return 1;
        }
        let ceil_log2 = (usize::BITS - (m - 1).leading_zeros()) as usize;
        q * ceil_log2 + 1
    }

    pub fn kept_edges(&self) -> usize {
        self.pieces.iter().map(Piece::len).sum()
    }

    /// Checks that pieces and leftover partition `0..source_len` exactly.
    pub fn is_partition(&self) -> bool {
        let mut seen = vec![false; self.source_len];
        let all = self
            .pieces
            .iter()
            .flat_map(|p| p.edges())
            .chain(self.leftover.iter().copied());
        for id in all {
            match seen.get_mut(id) {
                Some(s) if !*s => *s = true,
                _ => return false,
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Output of one peeling run at a fixed `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularPart {
    pub t: usize,
    /// `d_t` of the input hypergraph.
    pub d_start: usize,
    pub groups: Vec<Group>,
}

/// Moves heaviest-`Q` restrictions into the regular part until the residual
/// `t`-co-degree falls below `D/2`, where `D` is the input's `t`-co-degree.
///
/// Ties between equally heavy `Q` go to the lexicographically smallest set.
pub fn extract_regular(
    h: &Hypergraph,
    t: usize,
) -> Result<(RegularPart, Hypergraph), DecomposeError> {
    if h.is_empty() {
        return Err(DecomposeError::Empty);
    }
    if t == 0 || t > h.q() {
        return Err(DecomposeError::BadIndex { t, q: h.q() });
    }

    let mut index: HashMap<Vec<Vertex>, Vec<usize>> = HashMap::new();
    for (p, e) in h.edges().iter().enumerate() {
        for_each_subset(e.vertices(), t, |s| index.entry(s.to_vec()).or_default().push(p));
    }
    let mut counts: HashMap<Vec<Vertex>, usize> =
        index.iter().map(|(s, ps)| (s.clone(), ps.len())).collect();
    let mut alive = vec![true; h.len()];

    let d_start = heaviest(&counts).map(|(_, c)| c).unwrap_or(0);
    let mut groups = Vec::new();
    while let Some((q_set, c)) = heaviest(&counts) {
        if 2 * c < d_start {
            break;
        }
        let members: Vec<usize> = index[&q_set].iter().copied().filter(|&p| alive[p]).collect();
        debug_assert_eq!(members.len(), c);
        for &p in &members {
            alive[p] = false;
            for_each_subset(h.edges()[p].vertices(), t, |s| {
                let slot = counts.get_mut(s).expect("indexed subset");
                *slot -= 1;
                if *slot == 0 {
                    counts.remove(s);
                }
            });
        }
        groups.push(Group {
            q_set,
            edges: members.iter().map(|&p| h.ids()[p]).collect(),
        });
    }

    let rest: Vec<usize> = (0..h.len()).filter(|&p| alive[p]).collect();
    Ok((RegularPart { t, d_start, groups }, h.subgraph(&rest)))
}

/// Runs the full decomposition; every edge ends up in exactly one piece.
pub fn decompose(h: &Hypergraph) -> Result<Decomposition, DecomposeError> {
    let q = h.q();
    if q < 3 || q % 2 == 0 {
        return Err(DecomposeError::EvenQ(q));
    }
    let mut pieces = Vec::new();
    let mut curr = h.clone();
    while !curr.is_empty() {
        let profile = curr.co_degree_profile();
        let gamma = GammaSequence::from_profile(&profile, h.n())?;
        let t = find_good_index(&gamma);
        let (regular, residual) = extract_regular(&curr, t)?;
        let d_after = residual.co_degree_profile().d(t);
        assert!(
            2 * d_after < regular.d_start,
            "residual d_{t}={d_after} did not halve from {}",
            regular.d_start
        );
        pieces.push(Piece {
            t,
            groups: regular.groups,
            gamma_at_creation: gamma,
        });
        curr = residual;
    }
    let bound = Decomposition::piece_bound(q, h.len());
    assert!(
        pieces.len() <= bound,
        "{} pieces exceed the bound {bound}",
        pieces.len()
    );
    Ok(Decomposition {
        q,
        n: h.n(),
        pieces,
        leftover: Vec::new(),
        eta: None,
        source_len: h.len(),
        source_hash: h.content_hash(),
    })
}

/// Keeps pieces with at least `eta * |H| / |T|` edges; the rest go to leftover.
pub fn filter_pieces(d: &Decomposition, eta: f64) -> Result<Decomposition, DecomposeError> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(DecomposeError::BadEta(eta));
    }
    let total = d.pieces.len();
    let threshold = eta * d.source_len as f64 / total.max(1) as f64;
    let mut out = d.clone();
    out.pieces.clear();
    out.eta = Some(eta);
    for p in &d.pieces {
        if p.len() as f64 >= threshold {
            out.pieces.push(p.clone());
        } else {
            out.leftover.extend(p.edges());
        }
    }
    out.leftover.sort_unstable();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PieceReport {
    pub t: usize,
    pub size: usize,
    pub p_t: usize,
    /// The piece's own `d_t`.
    pub d_t: usize,
    pub own_gamma: Option<GammaSequence>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl PieceReport {
    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }
}

/// Re-verifies a piece against its source hypergraph without trusting any
/// stored quantity other than `gamma_at_creation`, which is compared.
pub fn certify_piece(piece: &Piece, source: &Hypergraph) -> PieceReport {
    let mut checks = Vec::new();
    let mut push = |name: &str, pass: bool, detail: String| {
        checks.push(Check {
            name: name.to_string(),
            pass,
            detail,
        })
    };
    let t = piece.t;
    let q = source.q();

    let ids = piece.edges();
    let mut seen = HashSet::new();
    let disjoint = ids.iter().all(|id| seen.insert(*id));
    push(
        "groups_disjoint",
        disjoint,
        format!("{} edge ids, {} distinct", ids.len(), seen.len()),
    );

    let Some(sub) = source.select_ids(&ids) else {
        push("edges_exist", false, "piece references unknown edge ids".into());
        return PieceReport {
            t,
            size: ids.len(),
            p_t: piece.groups.len(),
            d_t: 0,
            own_gamma: None,
            checks,
            pass: false,
        };
    };

    let index_ok = (1..=q).contains(&t);
    push("index_in_range", index_ok, format!("t={t}, q={q}"));

    let mut containment = Vec::new();
    let edge_of: HashMap<usize, usize> = sub.ids().iter().enumerate().map(|(p, &i)| (i, p)).collect();
    for (theta, g) in piece.groups.iter().enumerate() {
        let mut qs = g.q_set.clone();
        qs.sort_unstable();
        qs.dedup();
        if qs.len() != t {
            containment.push(format!("group {theta}: |Q|={} != t", qs.len()));
        }
        for id in &g.edges {
            if !sub.edges()[edge_of[id]].contains_all(&qs) {
                containment.push(format!("group {theta}: edge {id} misses Q={:?}", g.q_set));
            }
        }
    }
    push(
        "groups_contain_q",
        containment.is_empty(),
        containment.join("; "),
    );

    let profile = sub.co_degree_profile();
    let d_t = if index_ok { profile.d(t) } else { 0 };
    let mut sizes = Vec::new();
    for (theta, g) in piece.groups.iter().enumerate() {
        let s = g.edges.len();
        if 2 * s < d_t || s > d_t {
            sizes.push(format!("group {theta}: size {s} outside [{}/2, {}]", d_t, d_t));
        }
    }
    push("group_sizes", sizes.is_empty(), sizes.join("; "));

    let p_t = piece.groups.len();
    push(
        "group_count",
        d_t > 0 && p_t * d_t <= 2 * sub.len(),
        format!("p_t={p_t}, 2|H|/d_t={:.3}", 2.0 * sub.len() as f64 / d_t.max(1) as f64),
    );

    let own_gamma = GammaSequence::from_profile(&profile, source.n()).ok();
    match (&own_gamma, index_ok) {
        (Some(g), true) => {
            let r = is_good_index(g, t);
            push("good_index_own", r.pass, r.failures().join("; "));
            let parent = &piece.gamma_at_creation;
            let same_t = parent.q() == q && (g.get(t) - parent.get(t)).abs() <= TOLERANCE;
            let dominated =
                parent.q() == q && (1..=q).all(|i| g.get(i) <= parent.get(i) + TOLERANCE);
            push(
                "gamma_vs_creation",
                same_t && dominated,
                format!("own {:?} vs creation {:?}", g.values(), parent.values()),
            );
            let rp = is_good_index(parent, t);
            push("good_index_creation", rp.pass, rp.failures().join("; "));
        }
        _ => push("good_index_own", false, "exponents unavailable".into()),
    }

    let pass = checks.iter().all(|c| c.pass);
    PieceReport {
        t,
        size: sub.len(),
        p_t,
        d_t,
        own_gamma,
        checks,
        pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h3(edges: &[&[Vertex]]) -> Hypergraph {
        let list: Vec<(u32, &[Vertex])> =
            edges.iter().enumerate().map(|(i, e)| (i as u32, *e)).collect();
        Hypergraph::from_lists(3, 10, edges.len().max(1), &list).unwrap()
    }

    #[test]
    fn extract_single_edge() {
        let h = h3(&[&[1, 2, 3]]);
        let (reg, res) = extract_regular(&h, 2).unwrap();
        assert_eq!(reg.d_start, 1);
        assert_eq!(reg.groups.len(), 1);
        assert_eq!(reg.groups[0].q_set, vec![1, 2]);
        assert_eq!(reg.groups[0].edges, vec![0]);
        assert!(res.is_empty());
    }

    #[test]
    fn extract_star() {
        let h = h3(&[&[1, 2, 3], &[1, 2, 4], &[1, 2, 5], &[1, 2, 6]]);
        let (reg, res) = extract_regular(&h, 2).unwrap();
        assert_eq!(reg.d_start, 4);
        assert_eq!(
            reg.groups,
            vec![Group {
                q_set: vec![1, 2],
                edges: vec![0, 1, 2, 3]
            }]
        );
        assert!(res.is_empty());
    }

    #[test]
    fn extract_stops_below_half() {
        // {0,1} has co-degree 4; after removing it, {5,6} has 1 < 4/2
        let h = h3(&[&[0, 1, 2], &[0, 1, 3], &[0, 1, 4], &[0, 1, 7], &[5, 6, 8]]);
        let (reg, res) = extract_regular(&h, 2).unwrap();
        assert_eq!(reg.groups.len(), 1);
        assert_eq!(res.ids(), &[4]);
    }

    #[test]
    fn extract_errors() {
        assert_eq!(
            extract_regular(&Hypergraph::new(3, 5, 1), 1),
            Err(DecomposeError::Empty)
        );
        let h = h3(&[&[1, 2, 3]]);
        assert_eq!(
            extract_regular(&h, 4),
            Err(DecomposeError::BadIndex { t: 4, q: 3 })
        );
    }

    #[test]
    fn decompose_empty_and_single() {
        let d = decompose(&Hypergraph::new(3, 5, 1)).unwrap();
        assert!(d.pieces.is_empty());
        assert!(d.is_partition());

        let h = h3(&[&[1, 2, 3]]);
        let d = decompose(&h).unwrap();
        assert_eq!(d.pieces.len(), 1);
        assert_eq!(d.pieces[0].t, 2);
        let rep = certify_piece(&d.pieces[0], &h);
        assert!(rep.pass, "{:?}", rep.failures());
    }

    #[test]
    fn decompose_rejects_even_q() {
        let h = Hypergraph::from_lists(2, 4, 1, &[(0, &[0, 1])]).unwrap();
        assert_eq!(decompose(&h), Err(DecomposeError::EvenQ(2)));
    }

    #[test]
    fn filter_rule() {
        let piece = |ids: std::ops::Range<usize>| Piece {
            t: 1,
            groups: vec![Group {
                q_set: vec![0],
                edges: ids.collect(),
            }],
            gamma_at_creation: GammaSequence::new(3, vec![0.0; 3]).unwrap(),
        };
        let d = Decomposition {
            q: 3,
            n: 10,
            pieces: vec![piece(0..90), piece(90..99), piece(99..100)],
            leftover: vec![],
            eta: None,
            source_len: 100,
            source_hash: String::new(),
        };
        let f = filter_pieces(&d, 0.3).unwrap();
        assert_eq!(f.pieces.len(), 1);
        assert_eq!(f.kept_edges(), 90);
        assert_eq!(f.leftover, (90..100).collect::<Vec<_>>());
        assert!(f.is_partition());

        let all = filter_pieces(&d, 1e-9).unwrap();
        assert_eq!(all.pieces.len(), 3);

        let one = Decomposition {
            pieces: vec![piece(0..100)],
            ..d.clone()
        };
        assert_eq!(filter_pieces(&one, 0.5).unwrap().pieces, one.pieces);
        assert_eq!(filter_pieces(&d, 1.0), Err(DecomposeError::BadEta(1.0)));
    }

    #[test]
    fn certify_flags_small_group() {
        let h = h3(&[&[1, 2, 3], &[1, 2, 4], &[1, 2, 5], &[1, 2, 6], &[1, 7, 8]]);
        let bad = Piece {
            t: 2,
            groups: vec![
                Group {
                    q_set: vec![1, 2],
                    edges: vec![0, 1, 2, 3],
                },
                Group {
                    q_set: vec![1, 7],
                    edges: vec![4],
                },
            ],
            gamma_at_creation: GammaSequence::from_profile(&h.co_degree_profile(), 10).unwrap(),
        };
        let rep = certify_piece(&bad, &h);
        assert!(!rep.pass);
        assert!(rep.failures().iter().any(|c| c.name == "group_sizes"));
    }

    #[test]
    fn piece_bound_values() {
        assert_eq!(Decomposition::piece_bound(3, 500), 28);
        assert_eq!(Decomposition::piece_bound(3, 1), 1);
        assert_eq!(Decomposition::piece_bound(5, 2), 6);
        assert_eq!(Decomposition::piece_bound(3, 1024), 31);
    }
}
