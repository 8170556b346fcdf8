//! Legendre-Fenchel transforms on one-dimensional grids, with dual variables
//! restricted to `mu >= 0`, and the midpoint condition for half-line
//! concentrations on the real line.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ext::ExtReal;

/// Values of a function on strictly increasing knots.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid1D {
    knots: Vec<f64>,
    values: Vec<ExtReal>,
}

impl Grid1D {
    pub fn new(knots: Vec<f64>, values: Vec<ExtReal>) -> Result<Self> {
        if knots.len() != values.len() {
            return Err(Error::SizeMismatch {
                expected: knots.len(),
                got: values.len(),
            });
        }
        if knots.iter().any(|k| !k.is_finite()) {
            return Err(Error::InvalidGrid("knots must be finite".into()));
        }
        if let Some(w) = knots.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGrid(format!(
                "knots not strictly increasing at index {}",
                w + 1
            )));
        }
        Ok(Grid1D { knots, values })
    }

    /// Samples `f` on `n` equally spaced knots of `[lo, hi]`.
    pub fn linspace(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let knots = linspace(lo, hi, n)?;
        let values = knots.iter().map(|&x| ExtReal::of(f(x))).collect();
        Grid1D::new(knots, values)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[ExtReal] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }
}

/// `n` equally spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 || !(lo < hi) {
        return Err(Error::InvalidGrid(format!("linspace({lo}, {hi}, {n})")));
    }
    let step = (hi - lo) / (n - 1) as f64;
    Ok((0..n)
        .map(|k| if k == n - 1 { hi } else { lo + k as f64 * step })
        .collect())
}

/// `0` followed by `points - 1` geometrically spaced values from
/// `mu_max * 1e-4` up to `mu_max`.
pub fn dual_grid(mu_max: f64, points: usize) -> Result<Vec<f64>> {
    if !(mu_max > 0.0 && mu_max.is_finite()) || points < 2 {
        return Err(Error::InvalidGrid(format!("dual grid ({mu_max}, {points})")));
    }
    let m = points - 1;
    let lo = mu_max * 1e-4;
    let mut out = vec![0.0];
    if m == 1 {
        out.push(mu_max);
        return Ok(out);
    }
    let ratio = (mu_max / lo).ln() / (m - 1) as f64;
    for k in 0..m {
        out.push(if k == m - 1 { mu_max } else { lo * (ratio * k as f64).exp() });
    }
    Ok(out)
}

/// Largest finite positive slope between consecutive finite values, a natural
/// `mu_max`: beyond it the maximiser sits on the right edge of the grid.
pub fn suggested_mu_max(i: &Grid1D) -> Option<f64> {
    let pts: Vec<(f64, f64)> = i
        .knots
        .iter()
        .zip(&i.values)
        .filter(|(_, v)| v.is_finite())
        .map(|(&x, v)| (x, v.get()))
        .collect();
    pts.windows(2)
        .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
        .filter(|s| *s > 0.0)
        .fold(None, |acc: Option<f64>, s| Some(acc.map_or(s, |a| a.max(s))))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjugateResult {
    pub mu_knots: Vec<f64>,
    pub values: Vec<ExtReal>,
    /// Index of the first knot attaining the maximum; `None` if every knot
    /// has `I = +inf`.
    pub argmax: Vec<Option<usize>>,
}

impl ConjugateResult {
    /// Fraction of dual points whose maximiser is the first or last knot.
    pub fn saturation(&self, grid_len: usize) -> f64 {
        if self.argmax.is_empty() {
            return 0.0;
        }
        let hits = self
            .argmax
            .iter()
            .filter(|a| matches!(a, Some(k) if *k == 0 || *k + 1 == grid_len))
            .count();
        hits as f64 / self.argmax.len() as f64
    }

    /// Convexity of `mu -> I*(mu)` on the dual grid.
    pub fn convexity(&self) -> ConvexityReport {
        convexity_on_grid(&self.mu_knots, &self.values)
    }
}

fn conjugate_at(i: &Grid1D, mu: f64) -> (ExtReal, Option<usize>) {
    let mut best = ExtReal::NEG_INF;
    let mut arg = None;
    for (k, (&x, &v)) in i.knots.iter().zip(&i.values).enumerate() {
        if v.is_pos_inf() {
            continue;
        }
        let term = ExtReal::of(mu * x) + (-v);
        if arg.is_none() || term > best {
            best = term;
            arg = Some(k);
        }
    }
    (best, arg)
}

/// `I*(mu) = max_x { mu x - I(x) }` for each `mu >= 0`.
///
/// Knots with `I = +inf` are skipped; a knot with `I = -inf` makes the
/// conjugate `+inf`.
pub fn fenchel_conjugate_nonneg(i: &Grid1D, mu_grid: &[f64]) -> Result<ConjugateResult> {
    if let Some(&mu) = mu_grid.iter().find(|m| !(**m >= 0.0) || !m.is_finite()) {
        return Err(Error::NegativeDual(mu));
    }
    Ok(conjugate_unchecked(i, mu_grid))
}

/// Conjugate over an arbitrary finite dual grid, negative `mu` included.
pub fn fenchel_conjugate_signed(i: &Grid1D, mu_grid: &[f64]) -> Result<ConjugateResult> {
    if let Some(&mu) = mu_grid.iter().find(|m| !m.is_finite()) {
        return Err(Error::InvalidGrid(format!("dual point {mu}")));
    }
    Ok(conjugate_unchecked(i, mu_grid))
}

fn conjugate_unchecked(i: &Grid1D, mu_grid: &[f64]) -> ConjugateResult {
    let (values, argmax) = mu_grid.par_iter().map(|&mu| conjugate_at(i, mu)).unzip();
    ConjugateResult {
        mu_knots: mu_grid.to_vec(),
        values,
        argmax,
    }
}

/// `I**(x) = max_mu { mu x - I*(mu) }` at the knots of `i`, over `mu >= 0`.
pub fn biconjugate(i: &Grid1D, mu_grid: &[f64]) -> Result<Grid1D> {
    let conj = fenchel_conjugate_nonneg(i, mu_grid)?;
    Ok(reconjugate(i.knots(), &conj))
}

/// Biconjugate with a dual grid that may contain negative `mu`.
pub fn biconjugate_signed(i: &Grid1D, mu_grid: &[f64]) -> Result<Grid1D> {
    let conj = fenchel_conjugate_signed(i, mu_grid)?;
    Ok(reconjugate(i.knots(), &conj))
}

fn reconjugate(knots: &[f64], conj: &ConjugateResult) -> Grid1D {
    let values = knots
        .par_iter()
        .map(|&x| {
            conj.mu_knots
                .iter()
                .zip(&conj.values)
                .map(|(&mu, &s)| ExtReal::of(mu * x) + (-s))
                .max()
                .unwrap_or(ExtReal::NEG_INF)
        })
        .collect();
    Grid1D {
        knots: knots.to_vec(),
        values,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityReport {
    pub convex: bool,
    /// Smallest normalised second difference (`>= -1e-9` counts as convex).
    pub worst: f64,
    pub worst_index: Option<usize>,
}

/// Tolerance for discrete convexity checks.
pub const CONVEXITY_TOL: f64 = 1e-9;

/// Discrete convexity on possibly uneven knots: for consecutive finite
/// triples the middle value must lie below the chord. A `+inf` between two
/// finite values is a violation.
pub fn convexity_on_grid(knots: &[f64], values: &[ExtReal]) -> ConvexityReport {
    let mut worst = f64::INFINITY;
    let mut worst_index = None;
    for k in 1..knots.len().saturating_sub(1) {
        let (l, m, r) = (values[k - 1], values[k], values[k + 1]);
        let d = if l.is_pos_inf() || r.is_pos_inf() {
            continue;
        } else if m.is_pos_inf() {
            f64::NEG_INFINITY
        } else if l.is_neg_inf() || m.is_neg_inf() || r.is_neg_inf() {
            continue;
        } else {
            let (x0, x1, x2) = (knots[k - 1], knots[k], knots[k + 1]);
            let t = (x1 - x0) / (x2 - x0);
            let chord = (1.0 - t) * l.get() + t * r.get();
            (chord - m.get()) / (1.0 + chord.abs().max(m.get().abs()))
        };
        if d < worst {
            worst = d;
            worst_index = Some(k);
        }
    }
    ConvexityReport {
        convex: worst >= -CONVEXITY_TOL,
        worst,
        worst_index,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MidpointReport {
    pub passes: bool,
    /// `min J(mid) - (J(a) + J(c)) / 2` over checked pairs.
    pub worst_gap: ExtReal,
    pub witness: Option<(f64, f64)>,
    pub pairs_checked: usize,
    /// Discrete midpoint convexity of `I_min(a) = -J_{(a-, inf)}`.
    pub rate_convex: bool,
    pub rate_worst_gap: ExtReal,
}

/// Midpoint condition `J((a+c)/2) >= (J(a) + J(c)) / 2` for `a -> J_{(a, inf)}`
/// over all knot pairs whose midpoint is a knot.
///
/// `J_{(a-, inf)}` is approximated on the grid by the value at the previous
/// knot, so the reported rate is `I_min(a_k) = -J(a_{k-1})` (and `-J(a_0)` at
/// the first knot).
pub fn midpoint_condition_check(j: &Grid1D) -> Result<MidpointReport> {
    if let Some(w) = j.values.windows(2).position(|w| w[1] > w[0]) {
        return Err(Error::InvalidGrid(format!(
            "half-line concentration increases between knots {} and {}",
            w,
            w + 1
        )));
    }
    let n = j.len();
    let scale = j.knots.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let find = |x: f64| -> Option<usize> {
        let k = j.knots.partition_point(|&y| y < x - 1e-12 * scale);
        (k < n && (j.knots[k] - x).abs() <= 1e-12 * scale).then_some(k)
    };
    let rate: Vec<ExtReal> = (0..n).map(|k| -j.values[k.saturating_sub(1)]).collect();
    let mut worst = ExtReal::POS_INF;
    let mut witness = None;
    let mut rate_worst = ExtReal::POS_INF;
    let mut pairs = 0;
    for a in 0..n {
        for c in a + 2..n {
            let Some(m) = find(0.5 * (j.knots[a] + j.knots[c])) else {
                continue;
            };
            pairs += 1;
            let avg = j.values[a].scale(0.5) + j.values[c].scale(0.5);
            let gap = ExtReal::of(j.values[m].gap(avg));
            if gap < worst {
                worst = gap;
                if gap.get() < -CONVEXITY_TOL {
                    witness = Some((j.knots[a], j.knots[c]));
                }
            }
            let ravg = rate[a].scale(0.5) + rate[c].scale(0.5);
            let rgap = ExtReal::of(ravg.gap(rate[m]));
            rate_worst = rate_worst.min(rgap);
        }
    }
    Ok(MidpointReport {
        passes: witness.is_none(),
        worst_gap: worst,
        witness,
        pairs_checked: pairs,
        rate_convex: rate_worst.get() >= -CONVEXITY_TOL,
        rate_worst_gap: rate_worst,
    })
}

/// Experimental: midpoint condition for `a -> J_{a + (0, inf)^d}` on a
/// rectangular grid in dimension `d <= 3`.
///
/// Half of one translated orthant plus half of another is the orthant at
/// the average corner, so the check is the same inequality on grid pairs
/// whose midpoint is a grid point. `values` is row-major over `axes`.
pub fn midpoint_condition_check_nd(axes: &[Vec<f64>], values: &[ExtReal]) -> Result<MidpointReport> {
    let d = axes.len();
    if d == 0 || d > 3 {
        return Err(Error::InvalidGrid(format!("dimension {d} not in 1..=3")));
    }
    let shape: Vec<usize> = axes.iter().map(Vec::len).collect();
    let total: usize = shape.iter().product();
    if values.len() != total {
        return Err(Error::SizeMismatch {
            expected: total,
            got: values.len(),
        });
    }
    for ax in axes {
        Grid1D::new(ax.clone(), vec![ExtReal::ZERO; ax.len()])?;
    }
    let unravel = |mut flat: usize| -> Vec<usize> {
        let mut idx = vec![0; d];
        for k in (0..d).rev() {
            idx[k] = flat % shape[k];
            flat /= shape[k];
        }
        idx
    };
    let ravel = |idx: &[usize]| idx.iter().zip(&shape).fold(0, |acc, (i, s)| acc * s + i);
    // decreasing along every axis
    for flat in 0..total {
        let idx = unravel(flat);
        for k in 0..d {
            if idx[k] + 1 < shape[k] {
                let mut next = idx.clone();
                next[k] += 1;
                if values[ravel(&next)] > values[flat] {
                    return Err(Error::InvalidGrid(format!(
                        "orthant concentration increases from {idx:?} to {next:?}"
                    )));
                }
            }
        }
    }
    let mid_on_axis = |k: usize, i: usize, j: usize| -> Option<usize> {
        if (i + j) % 2 != 0 {
            return None;
        }
        let m = (i + j) / 2;
        let ax = &axes[k];
        let want = 0.5 * (ax[i] + ax[j]);
        ((ax[m] - want).abs() <= 1e-12 * (1.0 + want.abs())).then_some(m)
    };
    let mut worst = ExtReal::POS_INF;
    let mut witness = None;
    let mut pairs = 0;
    for a in 0..total {
        let ia = unravel(a);
        for c in a + 1..total {
            let ic = unravel(c);
            let mid: Option<Vec<usize>> = (0..d).map(|k| mid_on_axis(k, ia[k], ic[k])).collect();
            let Some(mid) = mid else { continue };
            pairs += 1;
            let avg = values[a].scale(0.5) + values[c].scale(0.5);
            let gap = ExtReal::of(values[ravel(&mid)].gap(avg));
            if gap < worst {
                worst = gap;
                if gap.get() < -CONVEXITY_TOL {
                    witness = Some((a as f64, c as f64));
                }
            }
        }
    }
    let passes = witness.is_none();
    Ok(MidpointReport {
        passes,
        worst_gap: worst,
        witness,
        pairs_checked: pairs,
        rate_convex: passes,
        rate_worst_gap: worst,
    })
}
