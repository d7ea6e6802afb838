//! Good-index conditions on co-degree exponents and the constructive
//! selection rule.
//!
//! Everything is evaluated in log space: `gamma[t] = log_n d_t`, so the ratio
//! conditions `d_r / d_t <= n^e` become `gamma_r - gamma_t <= e`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hypergraph::CoDegreeProfile;

/// Absolute tolerance for every real comparison in this module.
pub const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum GammaError {
    #[error("q={0} must be an odd integer >= 3")]
    BadQ(usize),
    #[error("expected {expected} exponents, got {found}")]
    WrongLength { expected: usize, found: usize },
    #[error("exponents must be finite, non-negative and non-increasing: {0:?}")]
    NotDescending(Vec<f64>),
    #[error("log base n={0} must be at least 2")]
    BadBase(usize),
    #[error("co-degree d_{t} = 0; exponents need a nonempty hypergraph")]
    ZeroCoDegree { t: usize },
}

/// Non-increasing, non-negative exponents `gamma_1 >= ... >= gamma_q >= 0`
/// for odd `q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaSequence {
    q: usize,
    gamma: Vec<f64>,
    /// Log base, when derived from a co-degree profile.
    n: Option<usize>,
}

impl GammaSequence {
    pub fn new(q: usize, gamma: Vec<f64>) -> Result<Self, GammaError> {
        if q < 3 || q % 2 == 0 {
            return Err(GammaError::BadQ(q));
        }
        if gamma.len() != q {
            return Err(GammaError::WrongLength {
                expected: q,
                found: gamma.len(),
            });
        }
        let descending = gamma.iter().all(|g| g.is_finite())
            && gamma.windows(2).all(|w| w[0] >= w[1])
            && gamma[q - 1] >= 0.0;
        if !descending {
            return Err(GammaError::NotDescending(gamma));
        }
        Ok(Self { q, gamma, n: None })
    }

    /// `gamma_t = log_n d_t` from an exact profile. Requires every `d_t >= 1`.
    pub fn from_profile(profile: &CoDegreeProfile, n: usize) -> Result<Self, GammaError> {
        if n < 2 {
            return Err(GammaError::BadBase(n));
        }
        let ln_n = (n as f64).ln();
        let mut gamma = Vec::with_capacity(profile.q());
        for (i, &d) in profile.as_slice().iter().enumerate() {
            if d == 0 {
                return Err(GammaError::ZeroCoDegree { t: i + 1 });
            }
            gamma.push((d as f64).ln() / ln_n);
        }
        let mut g = Self::new(profile.q(), gamma)?;
        g.n = Some(n);
        Ok(g)
    }

    pub fn q(&self) -> usize {
        self.q
    }
    pub fn n(&self) -> Option<usize> {
        self.n
    }
    pub fn values(&self) -> &[f64] {
        &self.gamma
    }
    /// `gamma_t` for 1-based `t`.
    pub fn get(&self, t: usize) -> f64 {
        self.gamma[t - 1]
    }

    /// Adds `c` to every exponent.
    pub fn shifted(&self, c: f64) -> Result<Self, GammaError> {
        let mut g = Self::new(self.q, self.gamma.iter().map(|x| x + c).collect())?;
        g.n = self.n;
        Ok(g)
    }
}

/// One evaluated inequality: `slack = lhs - rhs` in gamma space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slack {
    pub r: usize,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodIndexReport {
    pub t: usize,
    /// `(gamma_r - gamma_t) - (1 - 2r/q)` for `1 <= r <= ceil((q-t)/2)`; pass when `<= 0`.
    pub condition1: Vec<Slack>,
    /// `(gamma_r - gamma_t) - (-(2/q)(r-t) + (t - [t even])/q)` for
    /// `t <= r <= floor((q+t)/2)`; pass when `<= 0`.
    pub condition2: Vec<Slack>,
    /// `gamma_t - lower bound`; pass when `>= 0`.
    pub condition3: f64,
    pub pass: bool,
}

impl GoodIndexReport {
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for s in self.condition1.iter().filter(|s| s.slack > TOLERANCE) {
            out.push(format!("condition 1 at r={} exceeds by {:.3e}", s.r, s.slack));
        }
        for s in self.condition2.iter().filter(|s| s.slack > TOLERANCE) {
            out.push(format!("condition 2 at r={} exceeds by {:.3e}", s.r, s.slack));
        }
        if self.condition3 < -TOLERANCE {
            out.push(format!("condition 3 short by {:.3e}", -self.condition3));
        }
        out
    }
}

fn cond1_exponent(q: usize, r: usize) -> f64 {
    1.0 - 2.0 * r as f64 / q as f64
}

fn cond2_exponent(q: usize, t: usize, r: usize) -> f64 {
    let qf = q as f64;
    let even = usize::from(t % 2 == 0);
    -2.0 / qf * (r as f64 - t as f64) + (t - even) as f64 / qf
}

fn cond2_range(q: usize, t: usize) -> std::ops::RangeInclusive<usize> {
    t..=((q + t) / 2).min(q)
}

fn cond1_range(q: usize, t: usize) -> std::ops::RangeInclusive<usize> {
    1..=(q - t).div_ceil(2)
}

/// Evaluates all three condition families at index `t` (1-based).
///
/// # Panics
///
/// If `t` is outside `1..=q`.
pub fn is_good_index(g: &GammaSequence, t: usize) -> GoodIndexReport {
    let q = g.q;
    assert!((1..=q).contains(&t), "index {t} out of range 1..={q}");
    let gt = g.get(t);

    let condition1: Vec<Slack> = cond1_range(q, t)
        .map(|r| Slack {
            r,
            slack: (g.get(r) - gt) - cond1_exponent(q, r),
        })
        .collect();
    let condition2: Vec<Slack> = cond2_range(q, t)
        .map(|r| Slack {
            r,
            slack: (g.get(r) - gt) - cond2_exponent(q, t, r),
        })
        .collect();

    // condition (2) is the tighter bound wherever both apply above t
    for s2 in condition2.iter().filter(|s| s.r > t && s.slack <= TOLERANCE) {
        if let Some(s1) = condition1.iter().find(|s| s.r == s2.r) {
            debug_assert!(
                s1.slack <= s2.slack + TOLERANCE,
                "condition 2 held but condition 1 failed at r={}",
                s2.r
            );
        }
    }

    let lower = if 2 * t < q {
        g.get(1) - 2.0 * (t as f64 - 1.0) / q as f64
    } else {
        g.get(1) - 1.0 + 2.0 / q as f64
    };
    let condition3 = gt - lower;

    let pass = condition1.iter().all(|s| s.slack <= TOLERANCE)
        && condition2.iter().all(|s| s.slack <= TOLERANCE)
        && condition3 >= -TOLERANCE;
    GoodIndexReport {
        t,
        condition1,
        condition2,
        condition3,
        pass,
    }
}

/// Selects a good index constructively.
///
/// `t0` maximizes `gamma_t + 2t/q` over `t < q/2`. If some `t > q/2` breaks
/// condition (2) relative to `t0`, the violator maximizing `gamma_t + 2t/q`
/// is returned instead. Ties go to the smaller index.
///
/// # Panics
///
/// If the selected index fails [`is_good_index`]; existence is guaranteed for
/// odd `q`, so this indicates a bug.
pub fn find_good_index(g: &GammaSequence) -> usize {
    let q = g.q;
    let score = |t: usize| g.get(t) + 2.0 * t as f64 / q as f64;
    let argmax = |cands: &mut dyn Iterator<Item = usize>| -> Option<usize> {
        let mut best: Option<usize> = None;
        for t in cands {
            match best {
                Some(b) if score(t) <= score(b) => {}
                _ => best = Some(t),
            }
        }
        best
    };

    let t0 = argmax(&mut (1..=q / 2)).expect("q >= 3 has an index below q/2");
    let gt0 = g.get(t0);
    let mut violators = cond2_range(q, t0)
        .filter(|&r| 2 * r > q)
        .filter(|&r| (g.get(r) - gt0) - cond2_exponent(q, t0, r) > TOLERANCE);
    let t = argmax(&mut violators).unwrap_or(t0);

    let report = is_good_index(g, t);
    assert!(
        report.pass,
        "selected index {t} is not good for {:?}: {:?}",
        g.gamma,
        report.failures()
    );
    t
}

/// Every `t` in `1..=q` that passes [`is_good_index`].
pub fn all_good_indices(g: &GammaSequence) -> Vec<usize> {
    (1..=g.q).filter(|&t| is_good_index(g, t).pass).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gs(q: usize, v: &[f64]) -> GammaSequence {
        GammaSequence::new(q, v.to_vec()).unwrap()
    }

    #[test]
    fn q3_flat() {
        let g = gs(3, &[0.0, 0.0, 0.0]);
        let r2 = is_good_index(&g, 2);
        assert!(r2.pass);
        // gamma_1 <= gamma_2 + 1/3
        assert!((r2.condition1[0].slack + 1.0 / 3.0).abs() < 1e-12);
        // gamma_2 >= gamma_1 - 1/3
        assert!((r2.condition3 - 1.0 / 3.0).abs() < 1e-12);

        let r1 = is_good_index(&g, 1);
        assert!(!r1.pass);
        let at2 = r1.condition2.iter().find(|s| s.r == 2).unwrap();
        assert!((at2.slack - 1.0 / 3.0).abs() < 1e-12);

        assert_eq!(find_good_index(&g), 2);
        assert!(all_good_indices(&g).contains(&2));
    }

    #[test]
    fn q3_boundary_passes_with_tolerance() {
        let g = gs(3, &[1.0 / 3.0, 0.0, 0.0]);
        let r = is_good_index(&g, 1);
        assert!(r.pass, "{:?}", r.failures());
        let at2 = r.condition2.iter().find(|s| s.r == 2).unwrap();
        assert!(at2.slack.abs() < 1e-12);
        assert_eq!(find_good_index(&g), 1);
        assert!(all_good_indices(&g).contains(&1));
    }

    #[test]
    fn constant_sequences_q5() {
        for c in [0.0, 0.3, 1.0, 2.5] {
            let g = gs(5, &[c; 5]);
            let t = find_good_index(&g);
            assert!(is_good_index(&g, t).pass);
        }
    }

    #[test]
    fn condition2_includes_r_equal_t() {
        let g = gs(5, &[1.0, 0.8, 0.5, 0.2, 0.0]);
        for t in 1..=5 {
            let r = is_good_index(&g, t);
            assert_eq!(r.condition2[0].r, t);
            assert!(r.condition2[0].slack <= TOLERANCE);
        }
    }

    #[test]
    fn rejects_bad_sequences() {
        assert_eq!(GammaSequence::new(4, vec![0.0; 4]), Err(GammaError::BadQ(4)));
        assert!(matches!(
            GammaSequence::new(3, vec![0.0, 1.0, 0.0]),
            Err(GammaError::NotDescending(_))
        ));
        assert!(matches!(
            GammaSequence::new(3, vec![0.0, 0.0, -0.1]),
            Err(GammaError::NotDescending(_))
        ));
        assert!(matches!(
            GammaSequence::new(3, vec![0.0, 0.0]),
            Err(GammaError::WrongLength { .. })
        ));
    }
}
