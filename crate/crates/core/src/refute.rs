//! XOR instances from decoding matchings and spectral upper bounds on
//! their value.
//!
//! For a piece with index `t`, squaring the XOR polynomial and averaging
//! over color splits `L, R` gives
//! `val(Psi)^2 <= 2|H|^2/d_t + (8|H|/d_t) E_{L,R}[val f_{L,R,t}]`, and each
//! `val f` is bounded through the signed Kikuchi matrix:
//! `val f <= N_eff * ||M||_2 / D`. Pieces combine by Cauchy-Schwarz,
//! `sum_pi val_pi <= sqrt(|P| sum_pi val_pi^2)`, and leftover edges count
//! at full weight.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codes::{CodeError, NormalLDC};
use crate::decompose::{decompose, filter_pieces, DecomposeError, Decomposition, Piece};
use crate::hypergraph::{Color, Hypergraph, MatchingReport, Vertex};
use crate::kikuchi::{
    default_ell, heavy_threshold, matching_size_d, num_vertices, prune_heavy, KikuchiCache, KikuchiError,
    DEFAULT_VERTEX_CAP,
};
use crate::sparse::{spectral_norm, PowerIterationConfig};

/// Largest `n` for exhaustive maximization.
pub const DEFAULT_BRUTE_FORCE_CAP: usize = 24;
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum RefuteError {
    #[error("n={n} exceeds the brute-force cap {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("sign vector has length {found}, expected k={expected}")]
    BadSigns { expected: usize, found: usize },
    #[error("signs must be +1 or -1")]
    NotASign,
    #[error("coloring is not proper ({} violations)", .0.violations.len())]
    NotProper(MatchingReport),
    #[error("trials must be positive")]
    NoTrials,
    #[error("ell={ell} gives {vertices} Kikuchi vertices, above the cap {cap}")]
    EllTooLarge { ell: usize, vertices: String, cap: u128 },
    #[error("value {0} does not fit the certificate's integer fields")]
    Overflow(u128),
    #[error(transparent)]
    Decompose(#[from] DecomposeError),
    #[error(transparent)]
    Kikuchi(#[from] KikuchiError),
    #[error(transparent)]
    Code(#[from] CodeError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clause {
    pub vertices: Vec<Vertex>,
    pub sign: i8,
    pub color: Color,
}

/// `Psi_b(x) = sum_C b_{color(C)} x_C`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct XorInstance {
    pub n: usize,
    pub clauses: Vec<Clause>,
}

fn check_signs(b: &[i8], k: usize) -> Result<(), RefuteError> {
    if b.len() != k {
        return Err(RefuteError::BadSigns {
            expected: k,
            found: b.len(),
        });
    }
    if b.iter().any(|&s| s != 1 && s != -1) {
        return Err(RefuteError::NotASign);
    }
    Ok(())
}

/// One clause per hyperedge, signed by its color's bit.
pub fn build_xor(h: &Hypergraph, b: &[i8]) -> Result<XorInstance, RefuteError> {
    check_signs(b, h.k())?;
    Ok(XorInstance {
        n: h.n(),
        clauses: h
            .edges()
            .iter()
            .map(|e| Clause {
                vertices: e.vertices().to_vec(),
                sign: b[e.color() as usize],
                color: e.color(),
            })
            .collect(),
    })
}

impl XorInstance {
    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn eval(&self, x: &[i8]) -> i64 {
        self.clauses
            .iter()
            .map(|c| c.sign as i64 * c.vertices.iter().map(|&v| x[v as usize] as i64).product::<i64>())
            .sum()
    }

    pub fn negated(&self) -> Self {
        let mut out = self.clone();
        out.clauses.iter_mut().for_each(|c| c.sign = -c.sign);
        out
    }
}

/// `max_x Psi(x)` over all `2^n` assignments, Gray-code order within
/// parallel chunks of fixed high coordinates.
pub fn brute_force_val(psi: &XorInstance, cap: usize) -> Result<i64, RefuteError> {
    let n = psi.n;
    if n > cap {
        return Err(RefuteError::TooLarge { n, cap });
    }
    if psi.clauses.is_empty() {
        return Ok(0);
    }
    let mut incidence: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (ci, c) in psi.clauses.iter().enumerate() {
        for &v in &c.vertices {
            incidence[v as usize].push(ci);
        }
    }
    let high = n.min(6);
    let low = n - high;
    let best = (0u64..1 << high)
        .into_par_iter()
        .map(|hi| {
            let mut x = vec![1i8; n];
            for j in 0..high {
                if hi >> j & 1 == 1 {
                    x[low + j] = -1;
                }
            }
            let mut cur: Vec<i8> = psi
                .clauses
                .iter()
                .map(|c| c.sign * c.vertices.iter().map(|&v| x[v as usize]).product::<i8>())
                .collect();
            let mut val: i64 = cur.iter().map(|&v| v as i64).sum();
            let mut best = val;
            for g in 1u64..1 << low {
                let v = g.trailing_zeros() as usize;
                for &ci in &incidence[v] {
                    val -= 2 * cur[ci] as i64;
                    cur[ci] = -cur[ci];
                }
                best = best.max(val);
            }
            best
        })
        .max()
        .unwrap();
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvantageEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
}

/// Monte-Carlo mean of `Psi_b(E(b)) / |H|` over uniform `b`.
pub fn decoder_advantage(code: &NormalLDC, trials: usize, seed: u64) -> Result<AdvantageEstimate, RefuteError> {
    if trials == 0 {
        return Err(RefuteError::NoTrials);
    }
    let h = &code.hypergraph;
    let m = h.len().max(1) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sq) = (0.0, 0.0);
    for _ in 0..trials {
        let b: Vec<i8> = (0..code.k()).map(|_| if rng.gen() { 1 } else { -1 }).collect();
        let x = code.encode(&b)?;
        let v = build_xor(h, &b)?.eval(&x) as f64 / m;
        sum += v;
        sq += v * v;
    }
    let t = trials as f64;
    let mean = sum / t;
    let var = (sq / t - mean * mean).max(0.0);
    Ok(AdvantageEstimate {
        mean,
        stderr: (var / t).sqrt(),
        trials,
    })
}

/// `bit u` of the result is set iff `u in C \ Q`.
fn outside_mask(vertices: &[Vertex], q_set: &[Vertex]) -> u64 {
    vertices
        .iter()
        .filter(|v| !q_set.contains(v))
        .fold(0, |m, &v| m | 1 << v)
}

/// Terms `(b_i b_j, x-mask)` of `f_{L,R,t}` for each `(C, C')` with
/// `color(C) in L`, `color(C') in R`, in the same group. Needs `n <= 64`.
fn split_terms(piece: &Piece, source: &Hypergraph, b: &[i8], left: &[bool]) -> Vec<(i64, u64)> {
    let sub = piece.hypergraph(source);
    let mut out = Vec::new();
    let mut offset = 0;
    for g in &piece.groups {
        let edges = &sub.edges()[offset..offset + g.edges.len()];
        offset += g.edges.len();
        for c in edges.iter().filter(|c| left[c.color() as usize]) {
            for c2 in edges.iter().filter(|c| !left[c.color() as usize]) {
                let sign = b[c.color() as usize] as i64 * b[c2.color() as usize] as i64;
                let mask = outside_mask(c.vertices(), &g.q_set) ^ outside_mask(c2.vertices(), &g.q_set);
                out.push((sign, mask));
            }
        }
    }
    out
}

fn eval_terms(terms: &[(i64, u64)], xmask: u64) -> i64 {
    terms
        .iter()
        .map(|&(s, m)| if (xmask & m).count_ones() % 2 == 0 { s } else { -s })
        .sum()
}

fn x_mask(x: &[i8]) -> u64 {
    x.iter().enumerate().filter(|(_, &v)| v == -1).fold(0, |m, (u, _)| m | 1 << u)
}

/// `f_{L,R,t}(x) = sum_theta sum_{C in L, C' in R} b_C b_C' x_{C\Q} x_{C'\Q}`.
///
/// # Panics
///
/// If `n > 64`.
pub fn split_polynomial(piece: &Piece, source: &Hypergraph, b: &[i8], left: &[bool], x: &[i8]) -> i64 {
    assert!(source.n() <= 64, "exact evaluation supports n <= 64");
    eval_terms(&split_terms(piece, source, b, left), x_mask(x))
}

/// `val f_{L,R,t}` by enumeration of all `x`.
pub fn split_value(piece: &Piece, source: &Hypergraph, b: &[i8], left: &[bool], cap: usize) -> Result<i64, RefuteError> {
    let n = source.n();
    if n > cap {
        return Err(RefuteError::TooLarge { n, cap });
    }
    let terms = split_terms(piece, source, b, left);
    Ok((0u64..1 << n).into_par_iter().map(|x| eval_terms(&terms, x)).max().unwrap_or(0))
}

/// The squared-value inequality for one piece with every quantity exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquaredValueCheck {
    pub val_psi: i64,
    pub size: usize,
    pub d_t: usize,
    /// Mean over all splits of the piece's colors of `val f`.
    pub mean_val_f: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Checks `val(Psi)^2 <= 2 s^2 / d_t + (8 s / d_t) E[val f]` by brute force
/// on both sides; needs `n <= cap`.
pub fn squared_value_exact(piece: &Piece, source: &Hypergraph, b: &[i8], cap: usize) -> Result<SquaredValueCheck, RefuteError> {
    check_signs(b, source.k())?;
    let sub = piece.hypergraph(source);
    let val_psi = brute_force_val(&build_xor(&sub, b)?, cap)?;
    let size = sub.len();
    let d_t = sub.co_degree_profile().d(piece.t).max(1);
    let colors = sub.colors_present();
    let splits = 1u64 << colors.len();
    let mut total = 0i64;
    for mask in 0..splits {
        total += split_value(piece, source, b, &split_left(&colors, mask, source.k()), cap)?;
    }
    let mean_val_f = total as f64 / splits as f64;
    let (s, d) = (size as f64, d_t as f64);
    let lhs = (val_psi as f64).powi(2);
    let rhs = 2.0 * s * s / d + 8.0 * s / d * mean_val_f;
    Ok(SquaredValueCheck {
        val_psi,
        size,
        d_t,
        mean_val_f,
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-9,
    })
}

/// `L` as a membership vector over `[k]`: `colors[i]` is in `L` iff bit `i`
/// of `mask` is set. Colors outside the piece go to `R`.
fn split_left(colors: &[Color], mask: u64, k: usize) -> Vec<bool> {
    let mut left = vec![false; k];
    for (i, &c) in colors.iter().enumerate() {
        left[c as usize] = mask >> i & 1 == 1;
    }
    left
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefuteConfig {
    pub eta: f64,
    /// `None` selects the level automatically.
    pub ell: Option<usize>,
    /// Splits sampled per piece when exhaustive enumeration is too large.
    pub samples: usize,
    /// Enumerate all splits of a piece's colors when there are at most
    /// this many.
    pub exact_split_limit: u64,
    pub vertex_cap: u128,
    pub brute_force_cap: usize,
    /// Constant in the heavy-vertex threshold (diagnostic only).
    pub w: f64,
    pub seed: u64,
}

impl Default for RefuteConfig {
    fn default() -> Self {
        Self {
            eta: 0.1,
            ell: None,
            samples: 8,
            exact_split_limit: 256,
            vertex_cap: DEFAULT_VERTEX_CAP,
            brute_force_cap: DEFAULT_BRUTE_FORCE_CAP,
            w: 2.0,
            seed: 0,
        }
    }
}

/// The automatic level `max(1, round(n^(1-2/q) ln n))`, lowered until the
/// Kikuchi graph fits under `cap`; an explicit level must fit as given.
pub fn resolve_ell(n: usize, q: usize, requested: Option<usize>, cap: u128) -> Result<usize, RefuteError> {
    let fits = |ell: usize| num_vertices(n, ell).is_some_and(|v| v <= cap);
    match requested {
        Some(ell) if fits(ell) => Ok(ell),
        Some(ell) => Err(RefuteError::EllTooLarge {
            ell,
            vertices: num_vertices(n, ell).map_or_else(|| "> 2^128".into(), |v| v.to_string()),
            cap,
        }),
        None => {
            let mut ell = default_ell(n, q).min(2 * n).max(1);
            while ell > 1 && !fits(ell) {
                ell -= 1;
            }
            Ok(ell)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    /// Every split of the piece's colors; the mean is exact.
    Exact,
    /// Sampled splits; the maximum is used.
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMethod {
    /// `min(N_eff ||M||_2 / D, #pairs)`.
    Kikuchi,
    /// `t = q`: `f` does not depend on `x`; its value is exact.
    Constant,
    /// `D = 0`: only `|f| <= #pairs` applies.
    Trivial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitBound {
    pub left: Vec<Color>,
    pub method: SplitMethod,
    /// Number of `(C, C')` terms of `f`.
    pub pairs: usize,
    /// Nonzero rows of the signed matrix.
    pub touched: usize,
    pub row_sum: u64,
    pub frobenius: f64,
    pub norm_upper: f64,
    /// `N_eff * ||M||_2`, bounding `||M||_{inf->1}`.
    pub inf1_bound: f64,
    pub val_f_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PieceBound {
    pub index: usize,
    pub t: usize,
    pub size: usize,
    pub groups: usize,
    /// `d_t` of the piece itself.
    pub d_t: usize,
    pub ell: usize,
    pub d: u64,
    pub num_vertices: u64,
    pub split_mode: SplitMode,
    pub splits: Vec<SplitBound>,
    /// Exact mean (exhaustive splits) or sampled maximum of `val_f_bound`.
    pub e_val_f: f64,
    pub val_sq_bound: f64,
    /// Power-iteration lower bound on `||M||_2` for the split with the
    /// largest bound; shows how loose the certified upper bound is.
    pub power_lower: Option<f64>,
    pub heavy_threshold: f64,
    pub heavy_pruned_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefutationCertificate {
    pub schema_version: u32,
    pub kind: String,
    pub source_hash: String,
    pub q: usize,
    pub n: usize,
    pub k: usize,
    pub source_len: usize,
    pub b: Vec<i8>,
    pub config: RefuteConfig,
    pub ell: usize,
    pub decomposition: Decomposition,
    pub pieces: Vec<PieceBound>,
    pub leftover: usize,
    /// Literal constant replacing `O(q log n)` in the aggregation.
    pub aggregation: String,
    pub aggregate: f64,
    pub bound: f64,
    /// `|H|`, the bound every instance satisfies.
    pub trivial_bound: usize,
    pub brute_force_val: Option<i64>,
    pub sound: bool,
}

fn to_u64(v: u128) -> Result<u64, RefuteError> {
    u64::try_from(v).map_err(|_| RefuteError::Overflow(v))
}

/// Bounds `val(Psi)^2` of one piece.
pub fn cauchy_schwarz_bound(
    piece: &Piece,
    index: usize,
    source: &Hypergraph,
    b: &[i8],
    ell: usize,
    cfg: &RefuteConfig,
) -> Result<PieceBound, RefuteError> {
    check_signs(b, source.k())?;
    let sub = piece.hypergraph(source);
    let (q, n, k, t) = (source.q(), source.n(), source.k(), piece.t);
    let size = sub.len();
    let d_t = sub.co_degree_profile().d(t);
    let colors = sub.colors_present();
    let exhaustive = colors.len() < 63 && (1u64 << colors.len()) <= cfg.exact_split_limit;
    let masks: Vec<u64> = if exhaustive {
        (0..1u64 << colors.len()).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(index as u64);
        (0..cfg.samples.max(1)).map(|_| rng.gen::<u64>()).collect()
    };
    let lefts: Vec<Vec<bool>> = masks.iter().map(|&m| split_left(&colors, m, k)).collect();
    let d = matching_size_d(q, t, n, ell);
    let m = q - t;
    let nv = num_vertices(n, ell).unwrap_or(u128::MAX);

    let pair_count = |left: &[bool]| -> usize {
        piece
            .groups
            .iter()
            .map(|g| {
                let cs: Vec<Color> = g.edges.iter().map(|&id| color_of(&sub, id)).collect();
                let l = cs.iter().filter(|&&c| left[c as usize]).count();
                l * (cs.len() - l)
            })
            .sum()
    };
    let empty = |left: &[bool], method, pairs, val| SplitBound {
        left: colors.iter().copied().filter(|&c| left[c as usize]).collect(),
        method,
        pairs,
        touched: 0,
        row_sum: 0,
        frobenius: 0.0,
        norm_upper: 0.0,
        inf1_bound: 0.0,
        val_f_bound: val,
    };

    let mut power_lower = None;
    let mut heavy_pruned_fraction = None;
    let splits: Vec<SplitBound> = if size == 0 {
        Vec::new()
    } else if m == 0 {
        lefts
            .iter()
            .map(|left| {
                let constant: i64 = split_terms(piece, source, b, left).iter().map(|&(s, _)| s).sum();
                empty(left, SplitMethod::Constant, pair_count(left), constant as f64)
            })
            .collect()
    } else if d == 0 {
        lefts
            .iter()
            .map(|left| {
                let p = pair_count(left);
                empty(left, SplitMethod::Trivial, p, p as f64)
            })
            .collect()
    } else {
        let cache = KikuchiCache::new(piece, source, ell, cfg.vertex_cap)?;
        let df = d as f64;
        let splits = lefts
            .par_iter()
            .map(|left| -> Result<SplitBound, RefuteError> {
                let kb = cache.signed(b, left)?;
                let mat = kb.matrix();
                let row_sum = mat.max_row_abs_sum();
                let frobenius = mat.frobenius();
                let norm_upper = (row_sum as f64).min(frobenius);
                let touched = mat.nonzero_rows();
                let inf1_bound = touched as f64 * norm_upper;
                let pairs = pair_count(left);
                Ok(SplitBound {
                    left: colors.iter().copied().filter(|&c| left[c as usize]).collect(),
                    method: SplitMethod::Kikuchi,
                    pairs,
                    touched,
                    row_sum,
                    frobenius,
                    norm_upper,
                    inf1_bound,
                    val_f_bound: (inf1_bound / df).min(pairs as f64),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(worst) = argmax(&splits) {
            let kb = cache.signed(b, &lefts[worst])?;
            let cfg_p = PowerIterationConfig {
                seed: cfg.seed,
                ..PowerIterationConfig::default()
            };
            power_lower = Some(spectral_norm(kb.matrix(), &cfg_p).lower);
            let thr = heavy_threshold(ell, n, q, t, d_t, cfg.w);
            heavy_pruned_fraction = Some(prune_heavy(&kb, thr).1.fraction);
        }
        splits
    };

    let e_val_f = if splits.is_empty() {
        0.0
    } else if exhaustive {
        splits.iter().map(|s| s.val_f_bound).sum::<f64>() / splits.len() as f64
    } else {
        splits.iter().map(|s| s.val_f_bound).fold(f64::NEG_INFINITY, f64::max)
    };
    let (s, dt) = (size as f64, d_t.max(1) as f64);
    let val_sq_bound = if size == 0 {
        0.0
    } else {
        2.0 * s * s / dt + 8.0 * s / dt * e_val_f
    };
    Ok(PieceBound {
        index,
        t,
        size,
        groups: piece.groups.len(),
        d_t,
        ell,
        d: to_u64(d)?,
        num_vertices: to_u64(nv.min(u64::MAX as u128))?,
        split_mode: if exhaustive { SplitMode::Exact } else { SplitMode::Sampled },
        splits,
        e_val_f,
        val_sq_bound,
        power_lower,
        heavy_threshold: heavy_threshold(ell, n, q, t, d_t, cfg.w),
        heavy_pruned_fraction,
    })
}

fn color_of(sub: &Hypergraph, id: usize) -> Color {
    sub.iter().find(|&(i, _)| i == id).map(|(_, e)| e.color()).expect("edge in piece")
}

fn argmax(splits: &[SplitBound]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, s) in splits.iter().enumerate() {
        if s.method == SplitMethod::Kikuchi && best.is_none_or(|b| s.val_f_bound > splits[b].val_f_bound) {
            best = Some(i);
        }
    }
    best
}

/// Decomposes, filters with `eta`, bounds each kept piece, and aggregates.
/// Attaches the exact value when `n` is within the brute-force cap.
pub fn refute(h: &Hypergraph, b: &[i8], cfg: &RefuteConfig) -> Result<RefutationCertificate, RefuteError> {
    check_signs(b, h.k())?;
    let report = h.validate_matchings();
    if !report.is_valid() {
        return Err(RefuteError::NotProper(report));
    }
    let decomposition = filter_pieces(&decompose(h)?, cfg.eta)?;
    let ell = resolve_ell(h.n(), h.q(), cfg.ell, cfg.vertex_cap)?;
    let pieces = decomposition
        .pieces
        .par_iter()
        .enumerate()
        .map(|(i, p)| cauchy_schwarz_bound(p, i, h, b, ell, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let total: f64 = pieces.iter().map(|p| p.val_sq_bound).sum();
    let aggregate = (pieces.len() as f64 * total).sqrt();
    let leftover = decomposition.leftover.len();
    let bound = aggregate + leftover as f64;
    let brute = if h.n() <= cfg.brute_force_cap {
        Some(brute_force_val(&build_xor(h, b)?, cfg.brute_force_cap)?)
    } else {
        None
    };
    let sound = brute.is_none_or(|v| bound >= v as f64);
    Ok(RefutationCertificate {
        schema_version: SCHEMA_VERSION,
        kind: "refutation".into(),
        source_hash: h.content_hash(),
        q: h.q(),
        n: h.n(),
        k: h.k(),
        source_len: h.len(),
        b: b.to_vec(),
        config: cfg.clone(),
        ell,
        decomposition,
        pieces,
        leftover,
        aggregation: "sqrt(|P| * sum_pi val_sq_bound) + |leftover|".into(),
        aggregate,
        bound,
        trivial_bound: h.len(),
        brute_force_val: brute,
        sound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{hadamard, odd_parity_code};
    use crate::decompose::Group;
    use crate::goodindex::GammaSequence;

    #[test]
    fn single_clause() {
        let h = Hypergraph::from_lists(3, 3, 1, &[(0, &[0, 1, 2])]).unwrap();
        let psi = build_xor(&h, &[1]).unwrap();
        assert_eq!(psi.eval(&[1, 1, 1]), 1);
        assert_eq!(psi.eval(&[-1, 1, 1]), -1);
        assert_eq!(brute_force_val(&psi, 24).unwrap(), 1);
        // odd arity: x -> -x negates every clause
        assert_eq!(brute_force_val(&psi.negated(), 24).unwrap(), 1);
    }

    #[test]
    fn flipping_a_sign_negates_its_color() {
        let h = Hypergraph::from_lists(3, 6, 2, &[(0, &[0, 1, 2]), (1, &[3, 4, 5]), (1, &[0, 3, 4])]).unwrap();
        let a = build_xor(&h, &[1, 1]).unwrap();
        let c = build_xor(&h, &[1, -1]).unwrap();
        assert_eq!(a.len(), 3);
        for (x, y) in a.clauses.iter().zip(&c.clauses) {
            assert_eq!(x.sign == y.sign, x.color == 0);
        }
        assert!(build_xor(&h, &[1]).is_err());
    }

    #[test]
    fn brute_force_cap() {
        let h = Hypergraph::new(3, 30, 1);
        assert!(matches!(brute_force_val(&build_xor(&h, &[1]).unwrap(), 24), Err(RefuteError::TooLarge { .. })));
    }

    #[test]
    fn linear_codes_are_satisfiable() {
        let code = odd_parity_code(3, 3).unwrap();
        let b = [1, -1, -1];
        let psi = build_xor(&code.hypergraph, &b).unwrap();
        let x = code.encode(&b).unwrap();
        assert_eq!(psi.eval(&x), psi.len() as i64);
        assert_eq!(brute_force_val(&psi, 24).unwrap(), psi.len() as i64);
    }

    #[test]
    fn advantage() {
        let code = hadamard(3).unwrap();
        let est = decoder_advantage(&code, 50, 1).unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.stderr, 0.0);
        assert!(matches!(decoder_advantage(&code, 0, 1), Err(RefuteError::NoTrials)));
    }

    fn two_edge() -> (Piece, Hypergraph) {
        let h = Hypergraph::from_lists(3, 4, 2, &[(0, &[0, 1, 2]), (1, &[0, 2, 3])]).unwrap();
        let piece = Piece {
            t: 1,
            groups: vec![Group {
                q_set: vec![0],
                edges: vec![0, 1],
            }],
            gamma_at_creation: GammaSequence::new(3, vec![0.5, 0.0, 0.0]).unwrap(),
        };
        (piece, h)
    }

    #[test]
    fn two_edge_chain_by_hand() {
        let (piece, h) = two_edge();
        let cfg = RefuteConfig::default();
        let pb = cauchy_schwarz_bound(&piece, 0, &h, &[1, 1], 2, &cfg).unwrap();
        assert_eq!(pb.split_mode, SplitMode::Exact);
        assert_eq!(pb.splits.len(), 4);
        assert_eq!(pb.d, 4);
        assert_eq!(pb.d_t, 2);
        // the split L={0}, R={1}: 4 unit entries, a perfect matching on 4 vertices
        let s = pb.splits.iter().find(|s| s.left == vec![0]).unwrap();
        assert_eq!((s.pairs, s.touched, s.row_sum), (1, 4, 1));
        assert_eq!(s.val_f_bound, 1.0);
        // every other split has no L x R pair
        let e = 0.25 * 1.0 * 2.0;
        assert_eq!(pb.e_val_f, e);
        assert_eq!(pb.val_sq_bound, 2.0 * 4.0 / 2.0 + 8.0 * 2.0 / 2.0 * e);
    }

    #[test]
    fn split_polynomial_matches_definition() {
        let (piece, h) = two_edge();
        // one monomial x1 x2 * x2 x3 = x1 x3
        let x = [1, -1, 1, 1];
        assert_eq!(split_polynomial(&piece, &h, &[1, -1], &[true, false], &x), 1);
        assert_eq!(split_polynomial(&piece, &h, &[1, 1], &[true, false], &x), -1);
        assert_eq!(split_polynomial(&piece, &h, &[1, 1], &[false, true], &x), -1);
        assert_eq!(split_polynomial(&piece, &h, &[1, 1], &[true, true], &x), 0);
    }

    #[test]
    fn single_edge_refutation() {
        let h = Hypergraph::from_lists(3, 3, 1, &[(0, &[0, 1, 2])]).unwrap();
        let cert = refute(&h, &[1], &RefuteConfig::default()).unwrap();
        assert_eq!(cert.brute_force_val, Some(1));
        assert!(cert.bound >= 1.0);
        assert!(cert.sound);
    }

    #[test]
    fn resolve_levels() {
        assert_eq!(resolve_ell(16, 3, None, DEFAULT_VERTEX_CAP).unwrap(), 4);
        assert_eq!(resolve_ell(16, 3, Some(3), DEFAULT_VERTEX_CAP).unwrap(), 3);
        assert!(resolve_ell(16, 3, Some(6), DEFAULT_VERTEX_CAP).is_err());
    }
}
