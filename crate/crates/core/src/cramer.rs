//! Sample means of i.i.d. real variables: log-moment generating functions,
//! the monotone Cramér rate `sup_{mu >= 0} {mu x - Lambda(mu)}`, exact tails
//! and Monte Carlo estimates.
//!
//! `Lambda` is reported on `(-inf, inf]`: for a negative mean it is negative
//! near `mu = 0`.

use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Gamma, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::numeric::{
    binomial_log_pmf, derive_seed, log_normal_upper_tail, log_sum_exp, log_upper_tails,
};

/// Largest `n` for which a non-lattice finite-support tail is enumerated.
pub const MAX_ENUMERATION_N: u64 = 64;

/// Monte Carlo trials per independently seeded chunk.
pub const MC_CHUNK: u64 = 4096;

const LATTICE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SampleModel {
    Bernoulli { p: f64 },
    Gaussian { mean: f64, variance: f64 },
    Exponential { rate: f64 },
    FiniteSupport { points: Vec<f64>, probs: Vec<f64> },
}

impl SampleModel {
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidModel(format!("bernoulli p = {p} not in (0, 1)")));
        }
        Ok(SampleModel::Bernoulli { p })
    }

    pub fn gaussian(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() || !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "gaussian needs finite mean and positive variance, got ({mean}, {variance})"
            )));
        }
        Ok(SampleModel::Gaussian { mean, variance })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidModel(format!("exponential rate {rate} must be positive")));
        }
        Ok(SampleModel::Exponential { rate })
    }

    /// Points are sorted; repeated points are merged.
    pub fn finite_support(points: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != probs.len() {
            return Err(Error::InvalidModel("finite support needs matching, nonempty points and probs".into()));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidModel("support points must be finite".into()));
        }
        if probs.iter().any(|&q| !(q > 0.0 && q <= 1.0)) {
            return Err(Error::InvalidModel("probabilities must lie in (0, 1]".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidModel(format!("probabilities sum to {total}")));
        }
        let mut pairs: Vec<(f64, f64)> = points.into_iter().zip(probs).collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (x, q) in pairs {
            match merged.last_mut() {
                Some(last) if last.0 == x => last.1 += q,
                _ => merged.push((x, q)),
            }
        }
        let (points, probs) = merged.into_iter().unzip();
        Ok(SampleModel::FiniteSupport { points, probs })
    }

    pub fn name(&self) -> &'static str {
        match self {
            SampleModel::Bernoulli { .. } => "bernoulli",
            SampleModel::Gaussian { .. } => "gaussian",
            SampleModel::Exponential { .. } => "exponential",
            SampleModel::FiniteSupport { .. } => "finite",
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            SampleModel::Bernoulli { p } => *p,
            SampleModel::Gaussian { mean, .. } => *mean,
            SampleModel::Exponential { rate } => 1.0 / rate,
            SampleModel::FiniteSupport { points, probs } => {
                points.iter().zip(probs).map(|(x, q)| x * q).sum()
            }
        }
    }

    pub fn support_min(&self) -> f64 {
        match self {
            SampleModel::Bernoulli { .. } | SampleModel::Exponential { .. } => 0.0,
            SampleModel::Gaussian { .. } => f64::NEG_INFINITY,
            SampleModel::FiniteSupport { points, .. } => points[0],
        }
    }

    pub fn support_max(&self) -> f64 {
        match self {
            SampleModel::Bernoulli { .. } => 1.0,
            SampleModel::Gaussian { .. } | SampleModel::Exponential { .. } => f64::INFINITY,
            SampleModel::FiniteSupport { points, .. } => points[points.len() - 1],
        }
    }

    /// `log P(xi = support_max)`, `-inf` for continuous laws.
    fn log_mass_at_max(&self) -> f64 {
        match self {
            SampleModel::Bernoulli { p } => p.ln(),
            SampleModel::FiniteSupport { probs, .. } => probs[probs.len() - 1].ln(),
            _ => f64::NEG_INFINITY,
        }
    }

    pub fn has_exact_tail(&self) -> bool {
        !matches!(self, SampleModel::Exponential { .. })
    }

    /// Models whose rate has a closed form independent of the numerical route.
    pub fn has_closed_form_rate(&self) -> bool {
        !matches!(self, SampleModel::FiniteSupport { .. })
    }

    /// `Lambda(mu) = log E exp(mu xi)` for `mu >= 0`.
    pub fn log_mgf(&self, mu: f64) -> Result<ExtReal> {
        if !(mu >= 0.0) {
            return Err(Error::NegativeDual(mu));
        }
        Ok(self.lambda(mu))
    }

    /// `Lambda` without the sign restriction on `mu`.
    pub fn lambda(&self, mu: f64) -> ExtReal {
        if mu == 0.0 {
            return ExtReal::ZERO;
        }
        match self {
            SampleModel::Bernoulli { p } => {
                ExtReal::of(crate::numeric::log_add_exp((-p).ln_1p(), p.ln() + mu))
            }
            SampleModel::Gaussian { mean, variance } => {
                ExtReal::of(mean * mu + 0.5 * variance * mu * mu)
            }
            SampleModel::Exponential { rate } => {
                if mu >= *rate {
                    ExtReal::POS_INF
                } else {
                    ExtReal::of(-(-mu / rate).ln_1p())
                }
            }
            SampleModel::FiniteSupport { points, probs } => {
                let terms: Vec<f64> = points.iter().zip(probs).map(|(x, q)| q.ln() + mu * x).collect();
                ExtReal::of(log_sum_exp(&terms))
            }
        }
    }

    /// `Lambda'(mu)`, the mean of the tilted law; `+inf` outside the domain.
    pub fn lambda_prime(&self, mu: f64) -> f64 {
        match self {
            SampleModel::Bernoulli { p } => {
                // p e^mu / (1 - p + p e^mu), written to avoid overflow
                1.0 / (1.0 + (1.0 - p) / p * (-mu).exp())
            }
            SampleModel::Gaussian { mean, variance } => mean + variance * mu,
            SampleModel::Exponential { rate } => {
                if mu >= *rate {
                    f64::INFINITY
                } else {
                    1.0 / (rate - mu)
                }
            }
            SampleModel::FiniteSupport { points, probs } => {
                let logs: Vec<f64> = points.iter().zip(probs).map(|(x, q)| q.ln() + mu * x).collect();
                let z = log_sum_exp(&logs);
                points.iter().zip(&logs).map(|(x, l)| x * (l - z).exp()).sum()
            }
        }
    }

    /// `I(x) = sup_{mu >= 0} {mu x - Lambda(mu)}`.
    ///
    /// Zero up to the mean; above it the stationary point `Lambda'(mu) = x`
    /// is bracketed by doubling and located by bisection. At the top of a
    /// bounded support the value is `-log P(xi = max)`, beyond it `+inf`.
    pub fn monotone_cramer_rate(&self, x: f64) -> ExtReal {
        if x.is_nan() {
            return ExtReal::POS_INF;
        }
        if x <= self.mean() {
            return ExtReal::ZERO;
        }
        let top = self.support_max();
        if x > top {
            return ExtReal::POS_INF;
        }
        if x == top {
            return ExtReal::of(-self.log_mass_at_max());
        }
        let mu = self.stationary_mu(x);
        (ExtReal::of(mu * x) + (-self.lambda(mu))).max(ExtReal::ZERO)
    }

    fn stationary_mu(&self, x: f64) -> f64 {
        let mut lo = 0.0f64;
        let mut hi = match self {
            SampleModel::Exponential { rate } => *rate,
            _ => 1.0,
        };
        if !matches!(self, SampleModel::Exponential { .. }) {
            while self.lambda_prime(hi) < x {
                lo = hi;
                hi *= 2.0;
                if hi > 1e300 {
                    break;
                }
            }
        }
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.lambda_prime(mid) < x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// The same supremum by golden-section search on a log-spaced bracket,
    /// using `Lambda` only. An independent route for cross-checking.
    pub fn monotone_cramer_rate_generic(&self, x: f64) -> ExtReal {
        let g = |mu: f64| self.centered_objective(mu, x);
        let grid: Vec<f64> = std::iter::once(0.0)
            .chain((-30..=60).map(|k| 2f64.powi(k)))
            .collect();
        let vals: Vec<ExtReal> = grid.iter().map(|&m| g(m)).collect();
        let k = (0..grid.len()).max_by_key(|&i| (vals[i], std::cmp::Reverse(i))).expect("nonempty");
        if k + 1 == grid.len() {
            return vals[k];
        }
        let (mut a, mut b) = (grid[k.saturating_sub(1)], grid[k + 1]);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - phi * (b - a);
        let mut d = a + phi * (b - a);
        let (mut gc, mut gd) = (g(c), g(d));
        while b - a > 1e-8 * (1.0 + b) {
            if gc >= gd {
                b = d;
                d = c;
                gd = gc;
                c = b - phi * (b - a);
                gc = g(c);
            } else {
                a = c;
                c = d;
                gc = gd;
                d = a + phi * (b - a);
                gd = g(d);
            }
        }
        gc.max(gd).max(vals[k]).max(ExtReal::ZERO)
    }

    /// `mu x - Lambda(mu)` written as `-log E exp(mu (xi - x))` for discrete
    /// laws, which keeps its precision when `mu` is huge.
    fn centered_objective(&self, mu: f64, x: f64) -> ExtReal {
        let terms: Vec<f64> = match self {
            SampleModel::Bernoulli { p } => vec![(-p).ln_1p() - mu * x, p.ln() + mu * (1.0 - x)],
            SampleModel::FiniteSupport { points, probs } => points
                .iter()
                .zip(probs)
                .map(|(y, q)| q.ln() + mu * (y - x))
                .collect(),
            _ => return ExtReal::of(mu * x) + (-self.lambda(mu)),
        };
        ExtReal::of(-log_sum_exp(&terms))
    }

    /// Textbook rate for `x >= mean` (zero below), where one exists.
    pub fn reference_rate(&self, x: f64) -> Option<ExtReal> {
        if x <= self.mean() {
            return Some(ExtReal::ZERO);
        }
        match self {
            SampleModel::Bernoulli { p } => Some(if x > 1.0 {
                ExtReal::POS_INF
            } else if x == 1.0 {
                ExtReal::of(-p.ln())
            } else {
                ExtReal::of(x * (x / p).ln() + (1.0 - x) * ((1.0 - x) / (1.0 - p)).ln())
            }),
            SampleModel::Gaussian { mean, variance } => {
                Some(ExtReal::of((x - mean).powi(2) / (2.0 * variance)))
            }
            SampleModel::Exponential { rate } => {
                let t = rate * x;
                Some(ExtReal::of(t - 1.0 - t.ln()))
            }
            SampleModel::FiniteSupport { .. } => None,
        }
    }

    fn missing(&self, capability: &'static str) -> Error {
        Error::MissingCapability {
            model: self.to_string(),
            capability,
        }
    }

    /// `log P(X_n >= a)` for the sample mean `X_n`.
    pub fn exact_tail_log(&self, a: f64, n: u64) -> Result<f64> {
        self.tail_log(a, n, false)
    }

    /// `log P(X_n > a)`.
    pub fn exact_tail_log_open(&self, a: f64, n: u64) -> Result<f64> {
        self.tail_log(a, n, true)
    }

    fn tail_log(&self, a: f64, n: u64, open: bool) -> Result<f64> {
        if n == 0 {
            return Err(Error::Invalid("sample size must be positive".into()));
        }
        match self {
            SampleModel::Gaussian { mean, variance } => {
                Ok(log_normal_upper_tail((a - mean) * (n as f64).sqrt() / variance.sqrt()))
            }
            SampleModel::Exponential { .. } => Err(self.missing("exact_tail")),
            SampleModel::Bernoulli { p } => {
                let tails = log_upper_tails(&binomial_log_pmf(n, *p));
                Ok(lattice_tail(&tails, (n as f64) * a, open))
            }
            SampleModel::FiniteSupport { points, probs } => {
                if let Some((step, offsets)) = lattice(points) {
                    let pmf = lattice_log_pmf(&offsets, probs, n);
                    let tails = log_upper_tails(&pmf);
                    let t = n as f64 * (a - points[0]) / step;
                    return Ok(lattice_tail(&tails, t, open));
                }
                if n > MAX_ENUMERATION_N {
                    return Err(self.missing("exact_tail (non-lattice support, n > 64)"));
                }
                Ok(enumerate_tail(points, probs, n, a, open))
            }
        }
    }

    /// `log P(X_n >= a)` for every `n` in `ns`, sharing one convolution pass
    /// for lattice models.
    pub fn exact_tail_trace(&self, a: f64, ns: &[u64], open: bool) -> Result<Vec<f64>> {
        Ok(self.exact_tail_table(&[a], ns, open)?.pop().expect("one row"))
    }

    /// `log P(X_n >= a)` for every threshold (rows) and sample size
    /// (columns). Each law is computed once and read at all thresholds;
    /// lattice supports share a single convolution pass over `n`.
    pub fn exact_tail_table(&self, a_grid: &[f64], ns: &[u64], open: bool) -> Result<Vec<Vec<f64>>> {
        if let Some(slot) = ns.iter().position(|&n| n == 0) {
            return Err(Error::AtIndex {
                n: ns[slot],
                source: Box::new(Error::Invalid("sample size must be positive".into())),
            });
        }
        let columns: Vec<Vec<f64>> = match self {
            SampleModel::Bernoulli { p } => ns
                .par_iter()
                .map(|&n| {
                    let tails = log_upper_tails(&binomial_log_pmf(n, *p));
                    a_grid
                        .iter()
                        .map(|&a| lattice_tail(&tails, n as f64 * a, open))
                        .collect()
                })
                .collect(),
            SampleModel::FiniteSupport { points, probs } if lattice(points).is_some() => {
                let (step, offsets) = lattice(points).expect("checked");
                let n_max = ns.iter().copied().max().unwrap_or(0);
                let mut cols = vec![Vec::new(); ns.len()];
                let mut pmf = vec![0.0];
                for n in 1..=n_max {
                    pmf = convolve_step(&pmf, &offsets, probs);
                    if ns.contains(&n) {
                        let tails = log_upper_tails(&pmf);
                        let col: Vec<f64> = a_grid
                            .iter()
                            .map(|&a| lattice_tail(&tails, n as f64 * (a - points[0]) / step, open))
                            .collect();
                        for (slot, _) in ns.iter().enumerate().filter(|(_, &m)| m == n) {
                            cols[slot] = col.clone();
                        }
                    }
                }
                cols
            }
            _ => ns
                .par_iter()
                .map(|&n| {
                    a_grid
                        .iter()
                        .map(|&a| self.tail_log(a, n, open))
                        .collect::<Result<Vec<f64>>>()
                        .map_err(|e| Error::AtIndex {
                            n,
                            source: Box::new(e),
                        })
                })
                .collect::<Result<_>>()?,
        };
        Ok((0..a_grid.len())
            .map(|i| columns.iter().map(|c| c[i]).collect())
            .collect())
    }

    /// Exact law of `X_n` on its lattice: `(values, log probabilities)` with
    /// values increasing. Bernoulli and lattice finite supports only.
    pub fn lattice_log_law(&self, n: u64) -> Result<(Vec<f64>, Vec<f64>)> {
        if n == 0 {
            return Err(Error::Invalid("sample size must be positive".into()));
        }
        let nf = n as f64;
        match self {
            SampleModel::Bernoulli { p } => {
                let pmf = binomial_log_pmf(n, *p);
                let values = (0..=n).map(|j| j as f64 / nf).collect();
                Ok((values, pmf))
            }
            SampleModel::FiniteSupport { points, probs } => {
                let (step, offsets) = lattice(points).ok_or_else(|| self.missing("lattice_law"))?;
                let pmf = lattice_log_pmf(&offsets, probs, n);
                let values = (0..pmf.len())
                    .map(|k| points[0] + step * k as f64 / nf)
                    .collect();
                Ok((values, pmf))
            }
            _ => Err(self.missing("lattice_law")),
        }
    }

    /// Draws one sample mean of size `n`.
    fn sample_mean(&self, n: u64, rng: &mut ChaCha8Rng, sampler: &Sampler) -> f64 {
        let nf = n as f64;
        match (self, sampler) {
            (SampleModel::Bernoulli { .. }, Sampler::Binomial(b)) => b.sample(rng) as f64 / nf,
            (SampleModel::Gaussian { .. }, Sampler::Normal(d)) => d.sample(rng),
            (SampleModel::Exponential { .. }, Sampler::Gamma(d)) => d.sample(rng) / nf,
            (SampleModel::FiniteSupport { points, .. }, Sampler::Weighted(w)) => {
                (0..n).map(|_| points[w.sample(rng)]).sum::<f64>() / nf
            }
            _ => unreachable!("sampler built for this model"),
        }
    }

    fn sampler(&self, n: u64) -> Result<Sampler> {
        let nf = n as f64;
        let bad = |e: String| Error::InvalidModel(e);
        Ok(match self {
            SampleModel::Bernoulli { p } => {
                Sampler::Binomial(Binomial::new(n, *p).map_err(|e| bad(e.to_string()))?)
            }
            SampleModel::Gaussian { mean, variance } => Sampler::Normal(
                Normal::new(*mean, (variance / nf).sqrt()).map_err(|e| bad(e.to_string()))?,
            ),
            SampleModel::Exponential { rate } => {
                Sampler::Gamma(Gamma::new(nf, 1.0 / rate).map_err(|e| bad(e.to_string()))?)
            }
            SampleModel::FiniteSupport { probs, .. } => {
                Sampler::Weighted(WeightedIndex::new(probs).map_err(|e| bad(e.to_string()))?)
            }
        })
    }

    /// Monte Carlo estimate of `(1/n) log P(X_n >= a)`.
    ///
    /// Trials are split into chunks of [`MC_CHUNK`]; chunk `k` draws from a
    /// ChaCha8 stream seeded with `derive_seed(seed, k)`, so the hit count
    /// does not depend on the number of threads.
    pub fn empirical_j(&self, a: f64, n: u64, trials: u64, seed: u64) -> Result<EmpiricalEstimate> {
        if trials == 0 || n == 0 {
            return Err(Error::Invalid("trials and n must be positive".into()));
        }
        let sampler = self.sampler(n)?;
        let chunks = trials.div_ceil(MC_CHUNK);
        let hits: u64 = (0..chunks)
            .into_par_iter()
            .map(|k| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, k));
                let count = MC_CHUNK.min(trials - k * MC_CHUNK);
                (0..count)
                    .filter(|_| self.sample_mean(n, &mut rng, &sampler) >= a)
                    .count() as u64
            })
            .sum();
        Ok(EmpiricalEstimate::new(hits, trials, n))
    }
}

enum Sampler {
    Binomial(Binomial),
    Normal(Normal<f64>),
    Gamma(Gamma<f64>),
    Weighted(WeightedIndex<f64>),
}

/// Index of the first lattice point `>= t` (or `> t` when `open`), with a
/// relative slack of `1e-9` for thresholds that land on a lattice point.
fn lattice_tail(tails: &[f64], t: f64, open: bool) -> f64 {
    let slack = LATTICE_TOL * t.abs().max(1.0);
    let k = if open {
        (t + slack).floor() + 1.0
    } else {
        (t - slack).ceil()
    };
    if k <= 0.0 {
        0.0
    } else if k >= tails.len() as f64 {
        f64::NEG_INFINITY
    } else {
        tails[k as usize]
    }
}

/// `(step, offsets)` with `points[i] = points[0] + step * offsets[i]` when the
/// support sits on a lattice with at most 64 steps between extremes.
fn lattice(points: &[f64]) -> Option<(f64, Vec<usize>)> {
    if points.len() == 1 {
        return Some((1.0, vec![0]));
    }
    let base = points[0];
    let first_gap = points
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    for div in 1..=64u32 {
        let step = first_gap / div as f64;
        let offsets: Option<Vec<usize>> = points
            .iter()
            .map(|&x| {
                let r = (x - base) / step;
                let k = r.round();
                ((r - k).abs() <= LATTICE_TOL * r.abs().max(1.0) && k <= 64.0).then_some(k as usize)
            })
            .collect();
        if let Some(o) = offsets {
            return Some((step, o));
        }
    }
    None
}

fn convolve_step(pmf: &[f64], offsets: &[usize], probs: &[f64]) -> Vec<f64> {
    let width = offsets.iter().copied().max().unwrap_or(0);
    let len = pmf.len() + width;
    let log_probs: Vec<f64> = probs.iter().map(|q| q.ln()).collect();
    let term = |k: usize, o: usize, lq: f64| {
        if o <= k && k - o < pmf.len() {
            pmf[k - o] + lq
        } else {
            f64::NEG_INFINITY
        }
    };
    (0..len)
        .map(|k| {
            let m = offsets
                .iter()
                .zip(&log_probs)
                .map(|(&o, &lq)| term(k, o, lq))
                .fold(f64::NEG_INFINITY, f64::max);
            if m == f64::NEG_INFINITY {
                return m;
            }
            let s: f64 = offsets
                .iter()
                .zip(&log_probs)
                .map(|(&o, &lq)| (term(k, o, lq) - m).exp())
                .sum();
            m + s.ln()
        })
        .collect()
}

/// Log pmf of `sum_i offset(xi_i)` over `n` draws.
fn lattice_log_pmf(offsets: &[usize], probs: &[f64], n: u64) -> Vec<f64> {
    let mut pmf = vec![0.0];
    for _ in 0..n {
        pmf = convolve_step(&pmf, offsets, probs);
    }
    pmf
}

/// Sum over all compositions `c` of `n` into `K` counts of the multinomial
/// probability, restricted to `sum c_i x_i / n >= a` (or `> a`).
fn enumerate_tail(points: &[f64], probs: &[f64], n: u64, a: f64, open: bool) -> f64 {
    let k = points.len();
    let log_fact: Vec<f64> = (0..=n)
        .scan(0.0, |acc, m| {
            if m > 0 {
                *acc += (m as f64).ln();
            }
            Some(*acc)
        })
        .collect();
    let log_probs: Vec<f64> = probs.iter().map(|q| q.ln()).collect();
    let scale = points.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let slack = LATTICE_TOL * scale;
    let mut terms = Vec::new();
    let mut counts = vec![0u64; k];
    fn rec(
        i: usize,
        left: u64,
        counts: &mut Vec<u64>,
        visit: &mut dyn FnMut(&[u64]),
    ) {
        if i + 1 == counts.len() {
            counts[i] = left;
            visit(counts);
            return;
        }
        for c in 0..=left {
            counts[i] = c;
            rec(i + 1, left - c, counts, visit);
        }
    }
    rec(0, n, &mut counts, &mut |c: &[u64]| {
        let mean = c.iter().zip(points).map(|(&ci, x)| ci as f64 * x).sum::<f64>() / n as f64;
        let hit = if open { mean > a + slack } else { mean >= a - slack };
        if hit {
            let mut t = log_fact[n as usize];
            for (ci, lp) in c.iter().zip(&log_probs) {
                t += ci_term(*ci, *lp) - log_fact[*ci as usize];
            }
            terms.push(t);
        }
    });
    log_sum_exp(&terms)
}

fn ci_term(c: u64, log_p: f64) -> f64 {
    if c == 0 {
        0.0
    } else {
        c as f64 * log_p
    }
}

impl fmt::Display for SampleModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SampleModel::Bernoulli { p } => write!(f, "bernoulli:{p}"),
            SampleModel::Gaussian { mean, variance } => write!(f, "gaussian:{mean},{variance}"),
            SampleModel::Exponential { rate } => write!(f, "exponential:{rate}"),
            SampleModel::FiniteSupport { points, probs } => {
                write!(f, "finite:")?;
                for (i, (x, q)) in points.iter().zip(probs).enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{x}={q}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for SampleModel {
    type Err = Error;

    /// `bernoulli:P`, `gaussian:MEAN,VARIANCE`, `exponential:RATE`,
    /// `finite:X1=P1,X2=P2,...`.
    fn from_str(s: &str) -> Result<Self> {
        let parse_num = |t: &str| -> Result<f64> {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number {t:?} in model {s:?}")))
        };
        let (family, args) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("model {s:?} lacks ':'")))?;
        let parts: Vec<&str> = args.split(',').collect();
        let arity = |k: usize| -> Result<()> {
            if parts.len() == k {
                Ok(())
            } else {
                Err(Error::Parse(format!("model {s:?} expects {k} parameter(s)")))
            }
        };
        match family.trim() {
            "bernoulli" => {
                arity(1)?;
                SampleModel::bernoulli(parse_num(parts[0])?)
            }
            "gaussian" => {
                arity(2)?;
                SampleModel::gaussian(parse_num(parts[0])?, parse_num(parts[1])?)
            }
            "exponential" => {
                arity(1)?;
                SampleModel::exponential(parse_num(parts[0])?)
            }
            "finite" => {
                let mut points = Vec::new();
                let mut probs = Vec::new();
                for p in parts {
                    let (x, q) = p
                        .split_once('=')
                        .ok_or_else(|| Error::Parse(format!("expected x=p, got {p:?}")))?;
                    points.push(parse_num(x)?);
                    probs.push(parse_num(q)?);
                }
                SampleModel::finite_support(points, probs)
            }
            other => Err(Error::Parse(format!("unknown model family {other:?}"))),
        }
    }
}

/// Monte Carlo estimate with a 95% Wilson interval mapped through
/// `p -> (1/n) log p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalEstimate {
    pub hits: u64,
    pub trials: u64,
    pub n: u64,
    pub estimate: ExtReal,
    pub lower: ExtReal,
    pub upper: ExtReal,
    pub zero_hits: bool,
    /// `(1/n) log(3 / trials)`, reported when no trial hit.
    pub one_sided_bound: Option<f64>,
}

impl EmpiricalEstimate {
    fn new(hits: u64, trials: u64, n: u64) -> Self {
        let z = 1.959_963_984_540_054;
        let t = trials as f64;
        let phat = hits as f64 / t;
        let denom = 1.0 + z * z / t;
        let centre = (phat + z * z / (2.0 * t)) / denom;
        let half = z * (phat * (1.0 - phat) / t + z * z / (4.0 * t * t)).sqrt() / denom;
        let nf = n as f64;
        let map = |p: f64| ExtReal::ln(p.clamp(0.0, 1.0)).scale(1.0 / nf);
        let zero_hits = hits == 0;
        EmpiricalEstimate {
            hits,
            trials,
            n,
            estimate: map(phat),
            lower: if zero_hits { ExtReal::NEG_INF } else { map(centre - half) },
            upper: map(centre + half),
            zero_hits,
            one_sided_bound: zero_hits.then(|| (3.0 / t).ln() / nf),
        }
    }

    pub fn contains(&self, value: f64) -> bool {
        let v = ExtReal::of(value);
        self.lower <= v && v <= self.upper
    }
}

/// Tolerance for `|(1/n) log P(X_n >= a) + I(a)|` at sample size `n`.
///
/// Lattice laws lose `(1/2) log n / n` to the Stirling prefactor; the
/// Gaussian tail loses `log(z sqrt(2 pi)) / n` with `z ~ sqrt n`.
pub fn tail_tolerance(model: &SampleModel, n: u64) -> f64 {
    let nf = n as f64;
    match model {
        SampleModel::Gaussian { .. } => 6.0 / nf,
        _ => (nf.ln() + 5.0) / nf,
    }
}

/// `(1/(2n)) log P(X_{2n} >= a) >= (1/n) log P(X_n >= a)` for each `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupermultiplicativityReport {
    pub holds: bool,
    /// `(n, rate at 2n, rate at n)`.
    pub pairs: Vec<(u64, ExtReal, ExtReal)>,
}

pub fn supermultiplicativity_check(
    model: &SampleModel,
    a: f64,
    ns: &[u64],
) -> Result<SupermultiplicativityReport> {
    Ok(supermultiplicativity_grid(model, &[a], ns)?.pop().expect("one threshold"))
}

/// [`supermultiplicativity_check`] for several thresholds from one table of
/// exact tails.
pub fn supermultiplicativity_grid(
    model: &SampleModel,
    a_grid: &[f64],
    ns: &[u64],
) -> Result<Vec<SupermultiplicativityReport>> {
    let mut all: Vec<u64> = ns.iter().flat_map(|&n| [n, 2 * n]).collect();
    all.sort_unstable();
    all.dedup();
    let table = model.exact_tail_table(a_grid, &all, false)?;
    let at = |row: &[f64], n: u64| row[all.binary_search(&n).expect("scheduled")];
    Ok(table
        .iter()
        .map(|row| {
            let mut holds = true;
            let pairs = ns
                .iter()
                .map(|&n| {
                    let lhs = ExtReal::of(at(row, 2 * n) / (2 * n) as f64);
                    let rhs = ExtReal::of(at(row, n) / n as f64);
                    if lhs < rhs && rhs.gap(lhs) > 1e-12 {
                        holds = false;
                    }
                    (n, lhs, rhs)
                })
                .collect();
            SupermultiplicativityReport { holds, pairs }
        })
        .collect())
}

/// Per-threshold outcome of [`verify_monotone_cramer`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatePoint {
    pub a: f64,
    pub rate: ExtReal,
    pub rate_ref: Option<ExtReal>,
    /// `(n, (1/n) log P(X_n >= a))`.
    pub trace: Vec<(u64, ExtReal)>,
    /// `(1/n_max) log P(X_{n_max} > a)`.
    pub open_end: ExtReal,
    pub gap: f64,
    pub limit_ok: bool,
    pub upper_bound_ok: bool,
    pub open_limit_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub model: String,
    pub n_max: u64,
    pub tolerance: f64,
    pub points: Vec<RatePoint>,
    pub worst_abs_error: f64,
    /// Largest `|I_hat - I_ref|` where a reference exists.
    pub reference_error: Option<f64>,
    pub passes: bool,
}

/// Default sample-size schedule: twenty equal steps up to `n_max`.
pub fn default_schedule(n_max: u64) -> Vec<u64> {
    let step = (n_max / 20).max(1);
    let mut ns: Vec<u64> = (1..=20).map(|k| k * step).filter(|&n| n < n_max).collect();
    ns.push(n_max);
    ns
}

/// Exact-tail verification of the monotone Cramér limit on a grid of
/// thresholds.
///
/// For each `a`: the trace end must satisfy `|trace + I(a)| <= tol(n_max)`;
/// every trace value must respect the Chernoff bound `trace <= -I(a)`; the
/// open half-line `(a, inf)` must have the same limit (or be `-inf` when
/// `a` is at or above the top of the support).
pub fn verify_monotone_cramer(model: &SampleModel, a_grid: &[f64], n_max: u64) -> Result<RateReport> {
    if !model.has_exact_tail() {
        return Err(model.missing("exact_tail"));
    }
    let ns = default_schedule(n_max);
    let tol = tail_tolerance(model, n_max);
    let mut points = Vec::new();
    let mut worst = 0.0f64;
    let mut ref_err: Option<f64> = None;
    let table = model.exact_tail_table(a_grid, &ns, false)?;
    let open_ends = model.exact_tail_table(a_grid, &[n_max], true)?;
    for (i, &a) in a_grid.iter().enumerate() {
        let rate = model.monotone_cramer_rate(a);
        let rate_ref = model.reference_rate(a);
        if let Some(r) = rate_ref {
            let e = rate.gap(r).abs();
            ref_err = Some(ref_err.map_or(e, |m: f64| m.max(e)));
        }
        let trace: Vec<(u64, ExtReal)> = ns
            .iter()
            .zip(&table[i])
            .map(|(&n, &l)| (n, ExtReal::of(l / n as f64)))
            .collect();
        let end = trace.last().expect("nonempty schedule").1;
        let gap = end.gap(-rate).abs();
        let limit_ok = gap <= tol || (end.is_neg_inf() && rate.is_pos_inf());
        let upper_bound_ok = trace
            .iter()
            .all(|(_, t)| *t <= -rate || t.gap(-rate) <= 1e-12 * (1.0 + rate.get().abs()));
        let open_end = ExtReal::of(open_ends[i][0] / n_max as f64);
        let open_limit_ok = if a >= model.support_max() {
            open_end.is_neg_inf()
        } else {
            open_end.gap(-rate).abs() <= tol
        };
        if gap.is_finite() {
            worst = worst.max(gap);
        }
        points.push(RatePoint {
            a,
            rate,
            rate_ref,
            trace,
            open_end,
            gap,
            limit_ok,
            upper_bound_ok,
            open_limit_ok,
        });
    }
    let passes = points
        .iter()
        .all(|p| p.limit_ok && p.upper_bound_ok && p.open_limit_ok);
    Ok(RateReport {
        model: model.to_string(),
        n_max,
        tolerance: tol,
        points,
        worst_abs_error: worst,
        reference_error: ref_err,
        passes,
    })
}

/// Experimental: monotone rate of a vector of independent coordinates under
/// the componentwise cone, `sup_{mu in grid^d} {<mu, x> - sum_i Lambda_i(mu_i)}`
/// for `d <= 3`, by brute force over the product dual grid.
pub fn product_rate_grid(models: &[SampleModel], x: &[f64], mu_grid: &[f64]) -> Result<ExtReal> {
    let d = models.len();
    if d == 0 || d > 3 || x.len() != d {
        return Err(Error::Invalid(format!("product rate needs 1..=3 coordinates, got {d}")));
    }
    if let Some(&mu) = mu_grid.iter().find(|m| !(**m >= 0.0)) {
        return Err(Error::NegativeDual(mu));
    }
    let per: Vec<Vec<ExtReal>> = models
        .iter()
        .zip(x)
        .map(|(m, &xi)| mu_grid.iter().map(|&mu| ExtReal::of(mu * xi) + (-m.lambda(mu))).collect())
        .collect();
    let mut best = ExtReal::NEG_INF;
    let g = mu_grid.len();
    let total = g.pow(d as u32);
    for flat in 0..total {
        let mut rest = flat;
        let mut s = ExtReal::ZERO;
        for row in &per {
            s = s + row[rest % g];
            rest /= g;
        }
        best = best.max(s);
    }
    Ok(best)
}
