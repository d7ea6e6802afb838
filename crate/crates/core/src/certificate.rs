//! JSON artifacts for decompositions, even covers and refutations, and
//! their audit against the hypergraph they claim to describe.
//!
//! Auditing never trusts stored numbers: every artifact is recomputed from
//! the hypergraph and its recorded parameters and compared field by field,
//! in addition to kind-specific semantic checks.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::decompose::{
    certify_piece, decompose, filter_pieces, Check, DecomposeError, Decomposition, PieceReport,
};
use crate::evencover::{
    find_weak_rainbow, gf2_kernel_basis, kikuchi_walk_search, verify_even_cover, EvenCoverCertificate,
    EvenCoverError,
};
use crate::hypergraph::Hypergraph;
use crate::kikuchi::{num_vertices, DEFAULT_VERTEX_CAP};
use crate::refute::{brute_force_val, build_xor, refute, resolve_ell, RefutationCertificate, RefuteError};

pub use crate::refute::SCHEMA_VERSION;

/// Relative tolerance for comparing recomputed floating-point fields.
pub const FLOAT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum CertificateError {
    #[error("malformed certificate JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown certificate kind {0:?}")]
    UnknownKind(String),
    #[error("unsupported schema version {0}")]
    Schema(u64),
    #[error(transparent)]
    Decompose(#[from] DecomposeError),
    #[error(transparent)]
    EvenCover(#[from] EvenCoverError),
    #[error(transparent)]
    Refute(#[from] RefuteError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionCertificate {
    pub schema_version: u32,
    pub kind: String,
    #[serde(flatten)]
    pub decomposition: Decomposition,
    pub reports: Vec<PieceReport>,
}

/// Decomposes `h` (filtering with `eta` if given) and certifies every piece.
pub fn decomposition_certificate(h: &Hypergraph, eta: Option<f64>) -> Result<DecompositionCertificate, DecomposeError> {
    let mut d = decompose(h)?;
    if let Some(eta) = eta {
        d = filter_pieces(&d, eta)?;
    }
    let reports = d.pieces.iter().map(|p| certify_piece(p, h)).collect();
    Ok(DecompositionCertificate {
        schema_version: SCHEMA_VERSION,
        kind: "decomposition".into(),
        decomposition: d,
        reports,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    Kernel,
    Walk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvenCoverReport {
    pub schema_version: u32,
    pub kind: String,
    pub source_hash: String,
    pub mode: SearchMode,
    pub budget: u64,
    pub seed: u64,
    /// Kikuchi level and piece index, for walk searches.
    pub ell: Option<usize>,
    pub piece: Option<usize>,
    pub kernel_dim: Option<usize>,
    pub found: bool,
    pub trial: Option<u64>,
    pub from_basis: Option<bool>,
    pub certificate: Option<EvenCoverCertificate>,
}

/// Runs a weak-rainbow search and records everything needed to rerun it.
///
/// Walk mode searches the largest piece of the decomposition of `h`; its
/// level defaults to the automatic level capped at [`DEFAULT_VERTEX_CAP`].
pub fn even_cover_search(
    h: &Hypergraph,
    mode: SearchMode,
    budget: u64,
    seed: u64,
    ell: Option<usize>,
) -> Result<EvenCoverReport, CertificateError> {
    let mut report = EvenCoverReport {
        schema_version: SCHEMA_VERSION,
        kind: "even_cover".into(),
        source_hash: h.content_hash(),
        mode,
        budget,
        seed,
        ell: None,
        piece: None,
        kernel_dim: None,
        found: false,
        trial: None,
        from_basis: None,
        certificate: None,
    };
    let hit = match mode {
        SearchMode::Kernel => {
            report.kernel_dim = Some(gf2_kernel_basis(h)?.dim());
            find_weak_rainbow(h, budget, seed)?
        }
        SearchMode::Walk => {
            let d = decompose(h)?;
            let Some((i, piece)) = d.pieces.iter().enumerate().rev().max_by_key(|(_, p)| p.len()) else {
                return Ok(report);
            };
            let ell = match ell {
                Some(l) => l,
                None => resolve_ell(h.n(), h.q(), None, DEFAULT_VERTEX_CAP)?,
            };
            report.ell = Some(ell);
            report.piece = Some(i);
            kikuchi_walk_search(h, piece, ell, budget, seed)?
        }
    };
    if let Some(hit) = hit {
        report.found = true;
        report.trial = Some(hit.trial);
        report.from_basis = Some(hit.from_basis);
        report.certificate = Some(hit.certificate);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Certificate {
    Decomposition(DecompositionCertificate),
    EvenCover(EvenCoverReport),
    Refutation(Box<RefutationCertificate>),
}

impl Certificate {
    pub fn parse(json: &str) -> Result<(Self, Value), CertificateError> {
        let value: Value = serde_json::from_str(json)?;
        let version = value.get("schema_version").and_then(Value::as_u64).unwrap_or(0);
        if version != SCHEMA_VERSION as u64 {
            return Err(CertificateError::Schema(version));
        }
        let kind = value.get("kind").and_then(Value::as_str).unwrap_or("").to_string();
        let cert = match kind.as_str() {
            "decomposition" => Certificate::Decomposition(serde_json::from_value(value.clone())?),
            "even_cover" => Certificate::EvenCover(serde_json::from_value(value.clone())?),
            "refutation" => Certificate::Refutation(Box::new(serde_json::from_value(value.clone())?)),
            _ => return Err(CertificateError::UnknownKind(kind)),
        };
        Ok((cert, value))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Certificate::Decomposition(_) => "decomposition",
            Certificate::EvenCover(_) => "even_cover",
            Certificate::Refutation(_) => "refutation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Audit {
    pub kind: String,
    pub checks: Vec<Check>,
    /// Fields whose stored value differs from the recomputation.
    pub diffs: Vec<String>,
}

impl Audit {
    pub fn pass(&self) -> bool {
        self.diffs.is_empty() && self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| format!("check {} failed: {}", c.name, c.detail))
            .chain(self.diffs.iter().cloned())
            .collect()
    }
}

fn check(name: &str, pass: bool, detail: impl Into<String>) -> Check {
    Check {
        name: name.into(),
        pass,
        detail: detail.into(),
    }
}

/// Lists every path where `found` differs from `expected`. Floats compare
/// with [`FLOAT_TOLERANCE`] relative slack.
pub fn diff_json(path: &str, expected: &Value, found: &Value, out: &mut Vec<String>) {
    match (expected, found) {
        (Value::Object(a), Value::Object(b)) => {
            for (k, va) in a {
                let p = format!("{path}.{k}");
                match b.get(k) {
                    Some(vb) => diff_json(&p, va, vb, out),
                    None => out.push(format!("{p}: missing (expected {va})")),
                }
            }
            for k in b.keys().filter(|k| !a.contains_key(*k)) {
                out.push(format!("{path}.{k}: unexpected field"));
            }
        }
        (Value::Array(a), Value::Array(b)) => {
            if a.len() != b.len() {
                out.push(format!("{path}: length {} != expected {}", b.len(), a.len()));
            }
            for (i, (va, vb)) in a.iter().zip(b).enumerate() {
                diff_json(&format!("{path}[{i}]"), va, vb, out);
            }
        }
        (Value::Number(a), Value::Number(b)) if a != b => {
            let (x, y) = (a.as_f64().unwrap_or(f64::NAN), b.as_f64().unwrap_or(f64::NAN));
            let close = (x - y).abs() <= FLOAT_TOLERANCE * x.abs().max(y.abs()).max(1.0);
            if !(close && (a.is_f64() || b.is_f64())) {
                out.push(format!("{path}: {b} != expected {a}"));
            }
        }
        (a, b) if a != b => out.push(format!("{path}: {b} != expected {a}")),
        _ => {}
    }
}

fn hash_check(h: &Hypergraph, stored: &str) -> Check {
    let actual = h.content_hash();
    check("source_hash", actual == stored, format!("file {actual}, certificate {stored}"))
}

/// Re-validates a certificate against `h` from its JSON alone.
pub fn verify(json: &str, h: &Hypergraph) -> Result<Audit, CertificateError> {
    let (cert, stored) = Certificate::parse(json)?;
    let mut checks = Vec::new();
    let recomputed: Value = match &cert {
        Certificate::Decomposition(c) => {
            let d = &c.decomposition;
            checks.push(hash_check(h, &d.source_hash));
            checks.push(check(
                "partition",
                d.source_len == h.len() && d.is_partition(),
                format!("{} pieces + {} leftover over {} edges", d.pieces.len(), d.leftover.len(), h.len()),
            ));
            let bound = Decomposition::piece_bound(h.q(), h.len());
            checks.push(check("piece_bound", d.pieces.len() <= bound, format!("{} <= {bound}", d.pieces.len())));
            for (i, p) in d.pieces.iter().enumerate() {
                let r = certify_piece(p, h);
                let failed: Vec<String> = r.failures().iter().map(|c| format!("{}: {}", c.name, c.detail)).collect();
                checks.push(check(&format!("piece_{i}"), r.pass, failed.join("; ")));
            }
            if let Some(eta) = d.eta {
                let need = (1.0 - eta) * h.len() as f64;
                checks.push(check("kept_edges", d.kept_edges() as f64 >= need, format!("{} >= {need}", d.kept_edges())));
            }
            serde_json::to_value(decomposition_certificate(h, d.eta)?)?
        }
        Certificate::EvenCover(c) => {
            checks.push(hash_check(h, &c.source_hash));
            if let Some(cert) = &c.certificate {
                let fresh = verify_even_cover(h, &cert.edge_indices)?;
                checks.push(check(
                    "even_cover",
                    fresh.verified && fresh == *cert,
                    format!("verified={}, odd vertices {:?}", fresh.verified, fresh.odd_vertices),
                ));
                checks.push(check(
                    "rainbow",
                    fresh.rainbow_color.is_some(),
                    format!("rainbow color {:?}", fresh.rainbow_color),
                ));
            }
            checks.push(check("found_flag", c.found == c.certificate.is_some(), format!("found={}", c.found)));
            serde_json::to_value(even_cover_search(h, c.mode, c.budget, c.seed, c.ell)?)?
        }
        Certificate::Refutation(c) => {
            checks.push(hash_check(h, &c.source_hash));
            for (i, p) in c.decomposition.pieces.iter().enumerate() {
                let r = certify_piece(p, h);
                checks.push(check(&format!("piece_{i}"), r.pass, format!("{} failed checks", r.failures().len())));
            }
            let finite = c.bound.is_finite()
                && c.bound >= 0.0
                && c.pieces.iter().all(|p| p.val_sq_bound.is_finite() && p.val_sq_bound >= 0.0);
            checks.push(check("finite_bounds", finite, format!("bound {}", c.bound)));
            let nv_ok = num_vertices(h.n(), c.ell).is_some_and(|v| v <= c.config.vertex_cap);
            checks.push(check("level_fits", nv_ok, format!("ell={}", c.ell)));
            if h.n() <= c.config.brute_force_cap {
                let exact = brute_force_val(&build_xor(h, &c.b)?, c.config.brute_force_cap)?;
                checks.push(check(
                    "sound",
                    c.bound >= exact as f64 && c.sound,
                    format!("bound {} vs exact {exact}", c.bound),
                ));
            }
            serde_json::to_value(refute(h, &c.b, &c.config)?)?
        }
    };
    let mut diffs = Vec::new();
    diff_json("$", &recomputed, &stored, &mut diffs);
    Ok(Audit {
        kind: cert.kind().into(),
        checks,
        diffs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{hadamard, random_matchings};
    use crate::refute::RefuteConfig;

    #[test]
    fn json_diff_reports_paths() {
        let a: Value = serde_json::json!({"x": [1, 2.5], "y": "s"});
        let b: Value = serde_json::json!({"x": [1, 2.5000000000001], "y": "s"});
        let mut out = Vec::new();
        diff_json("$", &a, &b, &mut out);
        assert!(out.is_empty(), "{out:?}");
        let c: Value = serde_json::json!({"x": [2, 2.5], "z": 1});
        diff_json("$", &a, &c, &mut out);
        assert_eq!(out.len(), 3, "{out:?}");
        assert!(out[0].starts_with("$.x[0]"));
    }

    #[test]
    fn decomposition_round_trip() {
        let h = random_matchings(15, 6, 3, 4, 3).unwrap().hypergraph;
        let cert = decomposition_certificate(&h, Some(0.1)).unwrap();
        let json = serde_json::to_string(&cert).unwrap();
        let audit = verify(&json, &h).unwrap();
        assert!(audit.pass(), "{:?}", audit.failures());

        let mut v: Value = serde_json::from_str(&json).unwrap();
        v["leftover"] = serde_json::json!([0]);
        let audit = verify(&v.to_string(), &h).unwrap();
        assert!(!audit.pass());
    }

    #[test]
    fn even_cover_round_trip() {
        let h = hadamard(3).unwrap().hypergraph;
        let r = even_cover_search(&h, SearchMode::Kernel, 100, 1, None).unwrap();
        assert!(!r.found);
        let audit = verify(&serde_json::to_string(&r).unwrap(), &h).unwrap();
        assert!(audit.pass(), "{:?}", audit.failures());
    }

    #[test]
    fn refutation_round_trip_and_tamper() {
        let h = random_matchings(10, 4, 3, 3, 5).unwrap().hypergraph;
        let cfg = RefuteConfig {
            ell: Some(3),
            ..RefuteConfig::default()
        };
        let cert = refute(&h, &[1, -1, 1, 1], &cfg).unwrap();
        let json = serde_json::to_string(&cert).unwrap();
        assert!(verify(&json, &h).unwrap().pass());
        let mut v: Value = serde_json::from_str(&json).unwrap();
        v["bound"] = serde_json::json!(cert.bound * 0.5);
        let audit = verify(&v.to_string(), &h).unwrap();
        assert!(!audit.pass());
        assert!(audit.diffs.iter().any(|d| d.starts_with("$.bound")));
    }

    #[test]
    fn rejects_unknown_kind() {
        let h = Hypergraph::new(3, 3, 1);
        let err = verify(r#"{"schema_version":1,"kind":"nope"}"#, &h).unwrap_err();
        assert!(matches!(err, CertificateError::UnknownKind(_)));
    }
}
