use std::collections::HashSet;

use proptest::prelude::*;

use oddq::codes::{odd_parity_code, random_matchings};
use oddq::decompose::{certify_piece, decompose, filter_pieces, Decomposition};
use oddq::evencover::{gf2_kernel_basis, verify_even_cover};
use oddq::goodindex::{find_good_index, is_good_index, GammaSequence, TOLERANCE};
use oddq::hypergraph::{Hyperedge, Hypergraph, Vertex};
use oddq::kikuchi::{build_signed, matching_size_d, piece_pairs, quadratic_form, KikuchiVertex, DEFAULT_VERTEX_CAP};
use oddq::refute::{brute_force_val, build_xor, refute, split_polynomial, RefuteConfig};
use oddq::sparse::{spectral_norm, PowerIterationConfig, SparseMatrix};

fn gamma_strategy() -> impl Strategy<Value = GammaSequence> {
    prop_oneof![Just(3usize), Just(5), Just(7), Just(9)]
        .prop_flat_map(|q| (Just(q), prop::collection::vec(0.0f64..4.0, q)))
        .prop_map(|(q, mut g)| {
            g.sort_by(|a, b| b.partial_cmp(a).unwrap());
            GammaSequence::new(q, g).unwrap()
        })
}

/// Any multiset of `q`-sets with arbitrary colors; not necessarily matchings.
fn hypergraph_strategy() -> impl Strategy<Value = Hypergraph> {
    (prop_oneof![Just(3usize), Just(5)], 6usize..16, 1usize..5)
        .prop_flat_map(|(q, n, k)| {
            let edge = (prop::sample::subsequence((0..n as Vertex).collect::<Vec<_>>(), q), 0..k as u32);
            (Just(q), Just(n), Just(k), prop::collection::vec(edge, 1..60))
        })
        .prop_map(|(q, n, k, edges)| {
            let mut h = Hypergraph::new(q, n, k);
            for (v, c) in edges {
                h.push(Hyperedge::new(v, c).unwrap()).unwrap();
            }
            h
        })
}

/// Proper matchings from the seeded generator.
fn matchings_strategy(max_n: usize) -> impl Strategy<Value = (Hypergraph, Vec<i8>)> {
    (9usize..=max_n, 1usize..6, any::<u64>()).prop_flat_map(|(n, k, seed)| {
        let size = (n / 3).max(1);
        let h = random_matchings(n, k, 3, size, seed).unwrap().hypergraph;
        let b = prop::collection::vec(prop_oneof![Just(1i8), Just(-1)], k);
        (Just(h), b)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn selected_index_is_always_good(g in gamma_strategy()) {
        let t = find_good_index(&g);
        prop_assert!(is_good_index(&g, t).pass, "{:?} -> {}", g.values(), t);
    }

    #[test]
    fn good_index_is_shift_invariant(g in gamma_strategy(), c in 0.0f64..2.0) {
        let shifted = g.shifted(c).unwrap();
        for t in 1..=g.q() {
            let a = is_good_index(&g, t);
            let b = is_good_index(&shifted, t);
            // slacks move by at most rounding
            prop_assert!((a.condition3 - b.condition3).abs() < TOLERANCE);
        }
        prop_assert_eq!(find_good_index(&g), find_good_index(&shifted));
    }

    #[test]
    fn decomposition_partitions_edges(h in hypergraph_strategy()) {
        let d = decompose(&h).unwrap();
        prop_assert!(d.is_partition());
        prop_assert!(d.pieces.len() <= Decomposition::piece_bound(h.q(), h.len()));
        for p in &d.pieces {
            let r = certify_piece(p, &h);
            prop_assert!(r.pass, "{:?}", r.failures());
        }
    }

    #[test]
    fn filtering_only_moves_edges_to_leftover(h in hypergraph_strategy(), eta in 0.01f64..0.99) {
        let d = decompose(&h).unwrap();
        let f = filter_pieces(&d, eta).unwrap();
        prop_assert!(f.is_partition());
        prop_assert_eq!(f.kept_edges() + f.leftover.len(), h.len());
        prop_assert!(f.kept_edges() <= d.kept_edges());
    }

    #[test]
    fn text_format_round_trips(h in hypergraph_strategy()) {
        let back = Hypergraph::parse(&h.to_text()).unwrap();
        prop_assert_eq!(back.content_hash(), h.content_hash());
        prop_assert_eq!(back.edges(), h.edges());
    }

    #[test]
    fn kernel_vectors_are_even_covers(h in hypergraph_strategy()) {
        let basis = gf2_kernel_basis(&h).unwrap();
        prop_assert_eq!(basis.rank + basis.dim(), h.len());
        for v in &basis.vectors {
            let ids = basis.edge_ids(v);
            prop_assert!(verify_even_cover(&h, &ids).unwrap().verified);
        }
    }

    #[test]
    fn kikuchi_matchings_have_size_d((h, b) in matchings_strategy(12), ell in 1usize..4) {
        let d = decompose(&h).unwrap();
        for p in &d.pieces {
            let pairs = piece_pairs(p, &h).unwrap();
            let want = matching_size_d(h.q(), p.t, h.n(), ell);
            for pair in &pairs {
                let mut seen = HashSet::new();
                let mut count = 0u128;
                pair.for_each_edge(h.n(), ell, |s, t| {
                    count += 1;
                    seen.insert(s.to_vec());
                    // the partner of S is T and vice versa
                    let sv = KikuchiVertex::new(s.to_vec(), h.n(), ell).unwrap();
                    assert_eq!(pair.partner(&sv, h.n()).unwrap().elements(), t);
                });
                prop_assert_eq!(count, want);
                prop_assert_eq!(seen.len() as u128, want, "matching repeats a left endpoint");
            }
            let left: Vec<bool> = (0..h.k()).map(|i| i % 2 == 0).collect();
            let kb = build_signed(p, &h, &b, &left, ell, DEFAULT_VERTEX_CAP).unwrap();
            prop_assert!(kb.matrix().is_symmetric());
        }
    }

    #[test]
    fn quadratic_form_is_d_times_split_polynomial(
        (h, b) in matchings_strategy(12),
        ell in 1usize..4,
        seed in any::<u64>(),
    ) {
        let d = decompose(&h).unwrap();
        let x: Vec<i8> = (0..h.n()).map(|i| if (seed >> (i % 64)) & 1 == 1 { 1 } else { -1 }).collect();
        let left: Vec<bool> = (0..h.k()).map(|i| (seed >> (i + 17)) & 1 == 1).collect();
        for p in &d.pieces {
            let kb = build_signed(p, &h, &b, &left, ell, DEFAULT_VERTEX_CAP).unwrap();
            let f = split_polynomial(p, &h, &b, &left, &x);
            prop_assert_eq!(quadratic_form(&kb, &x), kb.d as i128 * f as i128);
        }
    }

    #[test]
    fn refutation_bound_is_sound((h, b) in matchings_strategy(14)) {
        let cfg = RefuteConfig { ell: Some(2), ..RefuteConfig::default() };
        let cert = refute(&h, &b, &cfg).unwrap();
        let exact = brute_force_val(&build_xor(&h, &b).unwrap(), 24).unwrap();
        prop_assert!(cert.bound + 1e-9 >= exact as f64);
        prop_assert_eq!(cert.trivial_bound, h.len());
        prop_assert!(cert.sound);
    }

    #[test]
    fn value_is_invariant_under_global_sign((h, b) in matchings_strategy(14)) {
        let psi = build_xor(&h, &b).unwrap();
        let neg: Vec<i8> = b.iter().map(|s| -s).collect();
        let cfg = RefuteConfig { ell: Some(2), ..RefuteConfig::default() };
        let a = refute(&h, &b, &cfg).unwrap();
        let c = refute(&h, &neg, &cfg).unwrap();
        // only products b_i b_j enter the Kikuchi side
        prop_assert!((a.bound - c.bound).abs() <= 1e-9 * a.bound.max(1.0));
        prop_assert_eq!(brute_force_val(&psi, 24).unwrap(), brute_force_val(&psi.negated(), 24).unwrap());
    }

    #[test]
    fn spectral_bracket_is_ordered(entries in prop::collection::vec((0u32..12, 0u32..12, -3i64..4), 0..40)) {
        let mut sym = Vec::new();
        for (i, j, v) in entries {
            sym.push((i, j, v));
            if i != j {
                sym.push((j, i, v));
            }
        }
        let m = SparseMatrix::from_triplet_vec(12, sym);
        let br = spectral_norm(&m, &PowerIterationConfig::default());
        prop_assert!(br.lower <= br.upper + 1e-9);
        prop_assert!(br.upper <= m.frobenius() + 1e-9);
        prop_assert!(br.upper <= m.max_row_abs_sum() as f64 + 1e-9);
    }
}

#[test]
fn odd_parity_decodes_every_message() {
    for (k, q) in [(1, 3), (3, 3), (3, 5), (4, 7)] {
        let code = odd_parity_code(k, q).unwrap();
        for mask in 0u32..(1 << k) {
            let b: Vec<i8> = (0..k).map(|i| if mask >> i & 1 == 1 { -1 } else { 1 }).collect();
            assert!(code.decodes_exactly(&b).unwrap(), "k={k} q={q} b={b:?}");
        }
    }
}
