//! Worked examples checked end to end through the public API.

use num_rational::BigRational;
use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use oddq::certificate::{decomposition_certificate, verify};
use oddq::codes::{odd_parity_code, random_matchings};
use oddq::decompose::{decompose, Decomposition};
use oddq::hypergraph::{Hyperedge, Hypergraph, Vertex};
use oddq::kikuchi::{matching_size_d, DegreePolynomial};
use oddq::refute::{brute_force_val, build_xor, refute, RefuteConfig};

#[test]
fn five_hundred_random_triples_stay_under_the_piece_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let verts: Vec<Vertex> = (0..30).collect();
    let mut h = Hypergraph::new(3, 30, 1);
    for _ in 0..500 {
        let e = verts.choose_multiple(&mut rng, 3).copied().collect();
        h.push(Hyperedge::new(e, 0).unwrap()).unwrap();
    }
    assert_eq!(Decomposition::piece_bound(3, 500), 28);
    let d = decompose(&h).unwrap();
    assert!(d.pieces.len() <= 28, "{} pieces", d.pieces.len());
    assert!(d.is_partition());
}

#[test]
fn matching_size_vanishes_below_the_difference_size() {
    for (q, t) in [(3, 1), (5, 2), (5, 1)] {
        for ell in 0..q - t {
            assert_eq!(matching_size_d(q, t, 20, ell), 0, "q={q} t={t} ell={ell}");
        }
        assert!(matching_size_d(q, t, 20, q - t) > 0);
    }
}

#[test]
fn degree_polynomial_expectations() {
    let h = random_matchings(12, 4, 3, 4, 5).unwrap().hypergraph;
    let d = decompose(&h).unwrap();
    let p = BigRational::new(1.into(), 3.into());
    for piece in d.pieces.iter().filter(|p| p.len() >= 2) {
        let color = h.edges()[piece.groups[0].edges[0]].color();
        let deg = DegreePolynomial::new(piece, &h, color).unwrap();
        let m = 3 - piece.t;
        let mut want = num_traits::pow(p.clone(), m);
        want *= BigRational::from_integer(deg.monomials.len().into());
        assert_eq!(deg.expected_derivative(&[], &[], &p), want);

        // more derivatives than the degree kills every monomial
        let z: Vec<Vertex> = (0..=m as Vertex).collect();
        assert!(deg.expected_derivative(&z, &[], &p).is_zero());
        assert!(deg.expected_derivative(&[0], &z, &p).is_zero());
    }
}

#[test]
fn satisfiable_instances_are_never_refuted() {
    // codewords satisfy every clause, so the bound must reach |H|
    for (k, q) in [(3, 3), (4, 3), (3, 5)] {
        let code = odd_parity_code(k, q).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
        let b: Vec<i8> = (0..k).map(|_| if rng.gen() { 1 } else { -1 }).collect();
        let cert = refute(&code.hypergraph, &b, &RefuteConfig::default()).unwrap();
        let m = code.hypergraph.len();
        assert_eq!(cert.brute_force_val, Some(m as i64));
        assert!(cert.bound >= m as f64, "k={k} q={q}: {} < {m}", cert.bound);
        assert!(cert.sound);
    }
}

#[test]
fn random_matchings_report_quality_ratio() {
    let cfg = RefuteConfig {
        ell: Some(3),
        ..RefuteConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let (mut bounds, mut vals) = (0.0, 0.0);
    for seed in 0..20 {
        let h = random_matchings(16, 8, 3, 5, seed).unwrap().hypergraph;
        let b: Vec<i8> = (0..8).map(|_| if rng.gen() { 1 } else { -1 }).collect();
        let cert = refute(&h, &b, &cfg).unwrap();
        let exact = brute_force_val(&build_xor(&h, &b).unwrap(), 24).unwrap();
        assert!(cert.bound >= exact as f64);
        bounds += cert.bound;
        vals += exact as f64;
    }
    // a quality metric, not a threshold
    println!("mean bound {:.2}, mean val {:.2}", bounds / 20.0, vals / 20.0);
}

#[test]
fn text_to_audited_certificate() {
    let text = "q=3 n=9 k=3\n0 0 1 2\n0 3 4 5\n1 0 3 6\n1 1 4 7\n2 2 5 8\n2 0 4 6\n";
    let h = Hypergraph::parse(text).unwrap();
    assert!(h.validate_matchings().is_valid());
    let cert = decomposition_certificate(&h, Some(0.2)).unwrap();
    let json = serde_json::to_string_pretty(&cert).unwrap();
    assert!(verify(&json, &h).unwrap().pass());

    let r = refute(&h, &[1, -1, 1], &RefuteConfig::default()).unwrap();
    let json = serde_json::to_string(&r).unwrap();
    assert!(verify(&json, &h).unwrap().pass());

    // the same certificate against a different hypergraph must not pass
    let other = Hypergraph::parse("q=3 n=9 k=3\n0 0 1 2\n").unwrap();
    assert!(!verify(&json, &other).map(|a| a.pass()).unwrap_or(false));
}
