//! Hyperplanes through corner sets and fair points on them.

use nalgebra::{DMatrix, DVector};

use crate::utility::{alpha_utility, Fairness};

/// Relative tolerance on corners lying on their face.
pub const TOL_FACE: f64 = 1e-9;
/// Relative margin a point must clear to count as above a face.
pub const TOL_EXT: f64 = 1e-6;
/// Slack on barycentric coordinates in the inside test.
pub const TOL_BARY: f64 = 1e-6;
/// α used while searching when the utility is plain total throughput. The
/// closed-form face optimum needs α > 0; a small α keeps the search pointed at
/// the max-total corner without flattening the geometry.
pub const ALPHA_ZERO_SURROGATE: f64 = 0.02;

/// Relative singular-value cutoff for rank decisions.
const RANK_EPS: f64 = 1e-10;
const GOLDEN_ITERS: usize = 96;
const MAX_SWEEPS: usize = 200;

/// `wᵀx = c`, with `Σw = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperplane {
    pub w: Vec<f64>,
    pub c: f64,
    /// The defining points were not affinely independent; `(w, c)` is a
    /// least-squares fit.
    pub degenerate: bool,
}

impl Hyperplane {
    pub fn value(&self, x: &[f64]) -> f64 {
        self.w.iter().zip(x).map(|(w, x)| w * x).sum()
    }

    /// Strictly above, beyond the extension margin.
    pub fn is_above(&self, x: &[f64]) -> bool {
        self.value(x) > self.c + TOL_EXT * self.c.abs().max(f64::MIN_POSITIVE)
    }

    pub fn has_nonnegative_normal(&self) -> bool {
        self.w.iter().all(|&w| w >= -TOL_FACE)
    }
}

/// Solve `wᵀx_i = c` for every point together with `Σw = 1`.
///
/// With `d` points in `d` dimensions and affinely independent points the
/// system is square and nonsingular. Otherwise the minimum-norm least-squares
/// solution is returned and the plane is flagged degenerate.
pub fn face_weights(points: &[Vec<f64>]) -> Hyperplane {
    let d = points.first().map_or(0, Vec::len);
    if d == 0 {
        return Hyperplane {
            w: Vec::new(),
            c: 0.0,
            degenerate: true,
        };
    }
    let m = points.len();
    let mut a = DMatrix::<f64>::zeros(m + 1, d + 1);
    let mut b = DVector::<f64>::zeros(m + 1);
    for (i, p) in points.iter().enumerate() {
        for (j, &v) in p.iter().enumerate() {
            a[(i, j)] = v;
        }
        a[(i, d)] = -1.0;
    }
    for j in 0..d {
        a[(m, j)] = 1.0;
    }
    b[m] = 1.0;

    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > RANK_EPS * smax.max(1.0))
        .count();
    let sol = svd
        .solve(&b, RANK_EPS * smax.max(1.0))
        .expect("svd computed with both factors");
    let w: Vec<f64> = sol.iter().take(d).copied().collect();
    let c = sol[d];
    let residual = (&a * &sol - &b).amax();
    let scale = 1.0f64.max(c.abs());
    Hyperplane {
        w,
        c,
        degenerate: rank < d + 1 || m != d || residual > TOL_FACE * scale,
    }
}

/// Maximizer of the utility over the whole hyperplane and barycentric
/// coordinates of that point with respect to the face corners.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneOptimum {
    pub x: Vec<f64>,
    pub beta: Vec<f64>,
    pub inside: bool,
}

/// Utility-maximizing point of `wᵀx = c` in closed form, and whether it falls
/// within the simplex spanned by `points`.
///
/// For finite α, `x_k = c · w_k^(−1/α) / Σ_j w_j^(1−1/α)`; leximin gives the
/// equal split `c / Σw`. A plane with a non-positive weight or offset has no
/// interior optimum and is reported as not containing it.
pub fn opt_in_face(points: &[Vec<f64>], plane: &Hyperplane, fairness: Fairness) -> PlaneOptimum {
    let d = plane.w.len();
    let usable = d > 0 && plane.c > 0.0 && plane.w.iter().all(|&w| w > 0.0);
    if !usable {
        return PlaneOptimum {
            x: vec![f64::NAN; d],
            beta: vec![f64::NAN; points.len()],
            inside: false,
        };
    }
    let x = match fairness {
        Fairness::Leximin => {
            let s: f64 = plane.w.iter().sum();
            vec![plane.c / s; d]
        }
        Fairness::Alpha(a) => {
            let a = if a > 0.0 { a } else { ALPHA_ZERO_SURROGATE };
            lagrange_point(&plane.w, plane.c, a)
        }
    };
    let beta = barycentric(points, &x);
    let inside = beta
        .iter()
        .all(|&b| b.is_finite() && (-TOL_BARY..=1.0 + TOL_BARY).contains(&b));
    PlaneOptimum { x, beta, inside }
}

/// `x_k = (λ w_k)^(−1/α)` with `λ = (c / Σ w_j^(1−1/α))^(−α)`, evaluated in
/// log space so that small α does not overflow.
pub fn lagrange_point(w: &[f64], c: f64, alpha: f64) -> Vec<f64> {
    let inv = 1.0 / alpha;
    let logs: Vec<f64> = w.iter().map(|&wk| (1.0 - inv) * wk.ln()).collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = top + logs.iter().map(|l| (l - top).exp()).sum::<f64>().ln();
    w.iter()
        .map(|&wk| (c.ln() - inv * wk.ln() - lse).exp())
        .collect()
}

/// Coordinates `β` with `Σ β_i p_i = x` and `Σ β = 1`, least squares when the
/// points are degenerate.
pub fn barycentric(points: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    let d = x.len();
    let m = points.len();
    let mut a = DMatrix::<f64>::zeros(d + 1, m);
    let mut b = DVector::<f64>::zeros(d + 1);
    for (j, p) in points.iter().enumerate() {
        for i in 0..d {
            a[(i, j)] = p[i];
        }
        a[(d, j)] = 1.0;
    }
    for i in 0..d {
        b[i] = x[i];
    }
    b[d] = 1.0;
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    match svd.solve(&b, RANK_EPS * smax.max(1.0)) {
        Ok(beta) => {
            // A least-squares fit that misses x is not a representation of it.
            let back: Vec<f64> = (0..d)
                .map(|i| (0..m).map(|j| beta[j] * points[j][i]).sum())
                .collect();
            let scale = x.iter().fold(1.0f64, |s, v| s.max(v.abs()));
            let miss = back.iter().zip(x).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
            if miss > TOL_BARY * scale {
                vec![f64::NAN; m]
            } else {
                beta.iter().copied().collect()
            }
        }
        Err(_) => vec![f64::NAN; m],
    }
}

/// Convex combination of `points` with the given weights.
pub fn combine(points: &[Vec<f64>], beta: &[f64]) -> Vec<f64> {
    let d = points.first().map_or(0, Vec::len);
    let mut x = vec![0.0; d];
    for (p, &b) in points.iter().zip(beta) {
        for (xi, pi) in x.iter_mut().zip(p) {
            *xi += b * pi;
        }
    }
    x
}

/// Best point of the simplex spanned by `points` under the fairness criterion,
/// with its barycentric weights. Pairwise golden-section ascent from the best
/// vertex; leximin is approximated by α = 32 on rescaled values.
pub fn simplex_max(points: &[Vec<f64>], fairness: Fairness) -> (Vec<f64>, Vec<f64>) {
    let m = points.len();
    if m == 0 {
        return (Vec::new(), Vec::new());
    }
    let scale = points
        .iter()
        .flatten()
        .fold(0.0f64, |s, &v| s.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let f = |beta: &[f64]| -> f64 {
        let x = combine(points, beta);
        match fairness {
            Fairness::Alpha(a) => alpha_utility(a, &x),
            Fairness::Leximin => {
                let y: Vec<f64> = x.iter().map(|v| v / scale).collect();
                alpha_utility(crate::utility::LEXIMIN_THRESHOLD, &y)
            }
        }
    };

    let start = (0..m)
        .max_by(|&i, &j| {
            let cmp = fairness.compare(&points[i], &points[j]);
            // The earliest vertex wins ties.
            cmp.then(j.cmp(&i))
        })
        .expect("nonempty");
    let mut beta = vec![0.0; m];
    beta[start] = 1.0;
    if matches!(fairness, Fairness::Alpha(a) if a == 0.0) || m == 1 {
        return (points[start].clone(), beta);
    }

    let mut cur = f(&beta);
    for _ in 0..MAX_SWEEPS {
        let before = cur;
        for i in 0..m {
            for j in (i + 1)..m {
                let s = beta[i] + beta[j];
                if s <= 0.0 {
                    continue;
                }
                let eval = |t: f64| {
                    let mut b = beta.clone();
                    b[i] = t;
                    b[j] = s - t;
                    f(&b)
                };
                let t = golden_max(eval, 0.0, s);
                let val = eval(t);
                if val > cur {
                    beta[i] = t;
                    beta[j] = s - t;
                    cur = val;
                }
            }
        }
        if cur - before <= 1e-15 * cur.abs().max(1.0) {
            break;
        }
    }
    (combine(points, &beta), beta)
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    for _ in 0..GOLDEN_ITERS {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + r * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - r * (hi - lo);
            fa = f(a);
        }
    }
    // Endpoints matter when the maximum sits on a vertex.
    let mid = 0.5 * (lo + hi);
    [(f(lo), lo), (f(mid), mid), (f(hi), hi)]
        .into_iter()
        .fold((f64::NEG_INFINITY, mid), |best, c| if c.0 > best.0 { c } else { best })
        .1
}
