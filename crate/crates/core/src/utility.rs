//! α-fair utility over per-customer throughputs.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

/// Floor applied to throughputs inside the utility when α ≥ 1.
pub const UTILITY_FLOOR: f64 = 1e-6;

/// Above this α the scheduler switches to exact leximin comparison.
pub const LEXIMIN_THRESHOLD: f64 = 32.0;

/// Relative slack used when deciding that two utilities tie.
const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fairness {
    Alpha(f64),
    /// The α → ∞ limit: compare sorted-ascending throughput vectors.
    Leximin,
}

impl Fairness {
    /// `alpha > 32` (including infinity) maps to leximin.
    pub fn from_alpha(alpha: f64) -> Self {
        assert!(alpha >= 0.0, "alpha must be non-negative");
        if alpha > LEXIMIN_THRESHOLD {
            Fairness::Leximin
        } else {
            Fairness::Alpha(alpha)
        }
    }

    pub fn is_leximin(&self) -> bool {
        matches!(self, Fairness::Leximin)
    }

    /// Utility value. Leximin has no scalar form; the minimum is returned.
    pub fn value(&self, x: &[f64]) -> f64 {
        match *self {
            Fairness::Alpha(a) => alpha_utility(a, x),
            Fairness::Leximin => x.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }

    /// Total order on allocations under this fairness criterion, with ties
    /// decided up to a tiny relative tolerance.
    pub fn compare(&self, a: &[f64], b: &[f64]) -> Ordering {
        match *self {
            Fairness::Alpha(al) => cmp_tol(alpha_utility(al, a), alpha_utility(al, b)),
            Fairness::Leximin => leximin_cmp(a, b),
        }
    }
}

/// Σ y^(1−α)/(1−α), with Σ ln y at α = 1 and Σ y at α = 0.
pub fn alpha_utility(alpha: f64, x: &[f64]) -> f64 {
    if alpha == 0.0 {
        return x.iter().sum();
    }
    let floor = |y: f64| if alpha >= 1.0 { y.max(UTILITY_FLOOR) } else { y.max(0.0) };
    if alpha == 1.0 {
        return x.iter().map(|&y| floor(y).ln()).sum();
    }
    let e = 1.0 - alpha;
    x.iter().map(|&y| floor(y).powf(e) / e).sum()
}

/// Lexicographic comparison of the sorted-ascending vectors.
pub fn leximin_cmp(a: &[f64], b: &[f64]) -> Ordering {
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    for (x, y) in sa.iter().zip(&sb) {
        match cmp_tol(*x, *y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    sa.len().cmp(&sb.len())
}

pub(crate) fn cmp_tol(a: f64, b: f64) -> Ordering {
    let scale = 1.0f64.max(a.abs()).max(b.abs());
    if (a - b).abs() <= TIE_EPS * scale {
        Ordering::Equal
    } else {
        a.total_cmp(&b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn special_cases() {
        assert_eq!(alpha_utility(0.0, &[1.0, 2.0]), 3.0);
        assert!((alpha_utility(1.0, &[1.0, std::f64::consts::E]) - 1.0).abs() < 1e-12);
        assert!((alpha_utility(2.0, &[1.0, 2.0]) + 1.5).abs() < 1e-12);
        assert!((alpha_utility(0.5, &[4.0, 9.0]) - 10.0).abs() < 1e-12);
        assert!(alpha_utility(1.0, &[0.0]).is_finite());
        assert!(alpha_utility(3.0, &[0.0]).is_finite());
    }

    #[test]
    fn leximin_ordering() {
        assert_eq!(leximin_cmp(&[2.0, 2.5], &[3.5, 1.0]), Ordering::Greater);
        assert_eq!(leximin_cmp(&[4.0, 1.0], &[1.0, 4.0]), Ordering::Equal);
        assert_eq!(leximin_cmp(&[1.0, 3.0], &[1.0, 2.0]), Ordering::Greater);
        assert_eq!(Fairness::from_alpha(100.0), Fairness::Leximin);
        assert_eq!(Fairness::from_alpha(32.0), Fairness::Alpha(32.0));
    }

    proptest! {
        #[test]
        fn utility_is_monotone(
            alpha in 0.0f64..8.0,
            x in prop::collection::vec(0.01f64..100.0, 1..5),
            k in 0usize..5,
            d in 0.001f64..10.0,
        ) {
            let k = k % x.len();
            let mut y = x.clone();
            y[k] += d;
            prop_assert!(alpha_utility(alpha, &y) > alpha_utility(alpha, &x));
        }

        #[test]
        fn leximin_is_permutation_invariant(x in prop::collection::vec(0.0f64..10.0, 1..6)) {
            let mut r = x.clone();
            r.reverse();
            prop_assert_eq!(leximin_cmp(&x, &r), Ordering::Equal);
        }
    }
}
