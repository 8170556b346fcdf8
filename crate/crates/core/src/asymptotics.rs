//! Sequences of capacities `mu_n`, the limsup concentration
//! `J_A = limsup (1/n) log mu_n(A)`, and entropic versus Choquet
//! representations of the associated maxitive integral.
//!
//! The limsup is estimated as the maximum of the trace over the tail half of
//! a finite schedule. A least-squares fit of the trace against `1/n` is
//! reported alongside as an extrapolation diagnostic.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::concentration::{Capacity, Concentration};
use crate::cramer::SampleModel;
use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::numeric::{derive_seed, log_diff_exp, log_sum_exp, log_upper_tails};
use crate::preorder::{FinitePreorder, Subset};

/// Tolerance for analytic sequences.
pub const ANALYTIC_TOL: f64 = 1e-3;

/// Tolerance for exact-tail windows at finite `n`.
pub const WINDOW_TOL: f64 = 1e-2;

/// Event whose capacity is queried.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Query {
    /// `[a, inf)`.
    Closed(f64),
    /// `(a, inf)`.
    Open(f64),
    /// An up-set of a finite space.
    UpSet(Subset),
}

impl Query {
    /// `a=0.75` for `[a, inf)`, `a>0.75` for `(a, inf)`.
    pub fn parse(s: &str) -> Result<Query> {
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad threshold in {s:?}")))
        };
        if let Some(rest) = s.strip_prefix("a>") {
            return Ok(Query::Open(num(rest)?));
        }
        if let Some(rest) = s.strip_prefix("a=").or_else(|| s.strip_prefix("a>=")) {
            return Ok(Query::Closed(num(rest)?));
        }
        Err(Error::Parse(format!("set {s:?}: expected a=VALUE or a>VALUE")))
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Query::Closed(a) => write!(f, "[{a}, inf)"),
            Query::Open(a) => write!(f, "({a}, inf)"),
            Query::UpSet(s) => write!(f, "{s}"),
        }
    }
}

/// `(n, query) -> log mu_n(query)`.
pub type LogCapacityFn = Arc<dyn Fn(u64, &Query) -> Result<f64> + Send + Sync>;

#[derive(Clone)]
pub enum CapacitySequence {
    /// Law of the Bernoulli sample mean.
    ExactBinomial { p: f64 },
    /// Law of the Gaussian sample mean.
    ExactGaussian { mean: f64, variance: f64 },
    /// Hit frequencies of simulated sample means; the seed for `n` is
    /// `derive_seed(seed, n)`.
    MonteCarlo {
        model: SampleModel,
        trials: u64,
        seed: u64,
    },
    /// `mu_n(A) = max_k P_k(X_n in A)` over sample-mean laws.
    MaxOfMeasures { components: Vec<SampleModel> },
    /// `mu_n(A) = max_k P_{k,n}(A)` with `P_{k,n}(x)` proportional to
    /// `exp(-n V_k(x))` on a finite space.
    FiniteGibbs {
        space: FinitePreorder,
        potentials: Vec<Vec<f64>>,
    },
    Custom(LogCapacityFn),
}

impl fmt::Debug for CapacitySequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CapacitySequence::ExactBinomial { p } => write!(f, "ExactBinomial({p})"),
            CapacitySequence::ExactGaussian { mean, variance } => {
                write!(f, "ExactGaussian({mean}, {variance})")
            }
            CapacitySequence::MonteCarlo { model, trials, seed } => {
                write!(f, "MonteCarlo({model}, {trials}, {seed})")
            }
            CapacitySequence::MaxOfMeasures { components } => {
                let names: Vec<String> = components.iter().map(|c| c.to_string()).collect();
                write!(f, "MaxOfMeasures({})", names.join(" | "))
            }
            CapacitySequence::FiniteGibbs { potentials, .. } => {
                write!(f, "FiniteGibbs({} potentials)", potentials.len())
            }
            CapacitySequence::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl CapacitySequence {
    /// Builds the exact sequence of a sample-mean model.
    pub fn exact(model: &SampleModel) -> Result<Self> {
        match model {
            SampleModel::Bernoulli { p } => Ok(CapacitySequence::ExactBinomial { p: *p }),
            SampleModel::Gaussian { mean, variance } => Ok(CapacitySequence::ExactGaussian {
                mean: *mean,
                variance: *variance,
            }),
            m if m.has_exact_tail() => Ok(CapacitySequence::MaxOfMeasures {
                components: vec![m.clone()],
            }),
            m => Err(Error::MissingCapability {
                model: m.to_string(),
                capability: "exact_tail",
            }),
        }
    }

    pub fn finite_gibbs(space: FinitePreorder, potentials: Vec<Vec<f64>>) -> Result<Self> {
        if potentials.is_empty() {
            return Err(Error::InvalidModel("no potentials".into()));
        }
        for v in &potentials {
            if v.len() != space.size() {
                return Err(Error::SizeMismatch {
                    expected: space.size(),
                    got: v.len(),
                });
            }
            if v.iter().any(|x| x.is_nan() || *x == f64::NEG_INFINITY) || v.iter().all(|x| x.is_infinite()) {
                return Err(Error::InvalidModel("potentials must be finite or +inf, not all +inf".into()));
            }
        }
        Ok(CapacitySequence::FiniteGibbs { space, potentials })
    }

    fn unsupported(&self, q: &Query) -> Error {
        Error::Invalid(format!("{self:?} cannot evaluate {q}"))
    }

    /// `log mu_n(query)`; `-inf` marks an event of probability zero.
    pub fn log_mu(&self, n: u64, q: &Query) -> Result<f64> {
        if n == 0 {
            return Err(Error::Invalid("sample size must be positive".into()));
        }
        match (self, q) {
            (CapacitySequence::ExactBinomial { p }, Query::Closed(a)) => {
                SampleModel::Bernoulli { p: *p }.exact_tail_log(*a, n)
            }
            (CapacitySequence::ExactBinomial { p }, Query::Open(a)) => {
                SampleModel::Bernoulli { p: *p }.exact_tail_log_open(*a, n)
            }
            (CapacitySequence::ExactGaussian { mean, variance }, Query::Closed(a) | Query::Open(a)) => {
                SampleModel::Gaussian {
                    mean: *mean,
                    variance: *variance,
                }
                .exact_tail_log(*a, n)
            }
            (CapacitySequence::MonteCarlo { model, trials, seed }, Query::Closed(a)) => {
                let est = model.empirical_j(*a, n, *trials, derive_seed(*seed, n))?;
                Ok(est.estimate.get() * n as f64)
            }
            (CapacitySequence::MaxOfMeasures { components }, Query::Closed(a) | Query::Open(a)) => {
                let open = matches!(q, Query::Open(_));
                let mut best = f64::NEG_INFINITY;
                for c in components {
                    let v = if open {
                        c.exact_tail_log_open(*a, n)?
                    } else {
                        c.exact_tail_log(*a, n)?
                    };
                    best = best.max(v);
                }
                Ok(best)
            }
            (CapacitySequence::FiniteGibbs { space, potentials }, Query::UpSet(s)) => {
                if s.len() != space.size() {
                    return Err(Error::SizeMismatch {
                        expected: space.size(),
                        got: s.len(),
                    });
                }
                if !space.is_up_set(s) {
                    return Err(Error::NotUpSet(*s));
                }
                let nf = n as f64;
                let best = potentials
                    .iter()
                    .map(|v| {
                        let all: Vec<f64> = v.iter().map(|x| -nf * x).collect();
                        let inside: Vec<f64> = s.members().map(|x| -nf * v[x]).collect();
                        log_sum_exp(&inside) - log_sum_exp(&all)
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                Ok(best.min(0.0))
            }
            (CapacitySequence::Custom(f), q) => f(n, q),
            (_, q) => Err(self.unsupported(q)),
        }
    }

    /// Capacity `mu_n` on every up-set of a finite space.
    pub fn capacity_at(&self, n: u64, space: &FinitePreorder) -> Result<Capacity> {
        let family = space.enumerate_up_sets()?;
        let mut values = Vec::with_capacity(family.len());
        for a in family.iter() {
            values.push(self.log_mu(n, &Query::UpSet(*a))?.exp());
        }
        Capacity::from_fn(space.clone(), |a| {
            values[family.position(a).expect("enumerated")]
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimsupEstimate {
    pub value: ExtReal,
    /// First and last `n` of the tail half used for `value`.
    pub n_window: (u64, u64),
    /// `(n, (1/n) log mu_n)` in schedule order.
    pub trace: Vec<(u64, ExtReal)>,
    /// Schedule points where `mu_n` is exactly zero.
    pub zero_probability: Vec<u64>,
    /// Least-squares fit `trace ~ intercept + slope / n` over the finite
    /// tail entries, when at least two exist.
    pub intercept: Option<f64>,
    pub slope: Option<f64>,
    /// Whether the tail of the trace is monotone (either direction).
    pub tail_monotone: bool,
}

impl LimsupEstimate {
    /// Estimate from a trace in schedule order.
    pub fn from_trace(trace: Vec<(u64, ExtReal)>) -> Result<Self> {
        if trace.is_empty() {
            return Err(Error::Invalid("empty schedule".into()));
        }
        if trace.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::Invalid("schedule must be strictly increasing".into()));
        }
        let start = trace.len() / 2;
        let tail = &trace[start..];
        let value = tail.iter().map(|(_, v)| *v).max().expect("nonempty");
        let finite: Vec<(f64, f64)> = tail
            .iter()
            .filter(|(_, v)| v.is_finite())
            .map(|(n, v)| (1.0 / *n as f64, v.get()))
            .collect();
        let (intercept, slope) = least_squares(&finite);
        let up = tail.windows(2).all(|w| w[0].1 <= w[1].1);
        let down = tail.windows(2).all(|w| w[0].1 >= w[1].1);
        Ok(LimsupEstimate {
            value,
            n_window: (tail[0].0, tail[tail.len() - 1].0),
            zero_probability: trace.iter().filter(|(_, v)| v.is_neg_inf()).map(|(n, _)| *n).collect(),
            trace,
            intercept,
            slope,
            tail_monotone: up || down,
        })
    }
}

fn least_squares(pts: &[(f64, f64)]) -> (Option<f64>, Option<f64>) {
    if pts.len() < 2 {
        return (None, None);
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return (Some(my), None);
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    (Some(my - slope * mx), Some(slope))
}

fn attach_n<T>(n: u64, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::AtIndex {
        n,
        source: Box::new(e),
    })
}

/// Estimates `J_A = limsup (1/n) log mu_n(A)` along `schedule`.
pub fn log_rate_estimate(seq: &CapacitySequence, q: &Query, schedule: &[u64]) -> Result<LimsupEstimate> {
    let trace = schedule
        .par_iter()
        .map(|&n| {
            let l = attach_n(n, seq.log_mu(n, q))?;
            Ok((n, ExtReal::of(l / n as f64)))
        })
        .collect::<Result<Vec<_>>>()?;
    LimsupEstimate::from_trace(trace)
}

/// Estimated `J` on every up-set of a finite space.
pub fn estimated_concentration(
    seq: &CapacitySequence,
    space: &FinitePreorder,
    schedule: &[u64],
) -> Result<Concentration> {
    let family = space.enumerate_up_sets()?;
    let mut values = Vec::with_capacity(family.len());
    for a in family.iter() {
        values.push(log_rate_estimate(seq, &Query::UpSet(*a), schedule)?.value);
    }
    Concentration::new(space.clone(), values)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LargestTermReport {
    pub holds: bool,
    pub combined: ExtReal,
    pub components: Vec<ExtReal>,
    pub gap: f64,
}

/// Principle of the largest term on a window: the limsup rate of
/// `sum_i a_n^i` against the largest limsup rate among the components.
///
/// `log_components[i][k]` is `log a^i_{schedule[k]}`.
pub fn largest_term_check(schedule: &[u64], log_components: &[Vec<f64>]) -> Result<LargestTermReport> {
    if log_components.is_empty() {
        return Err(Error::Invalid("no components".into()));
    }
    let mut components = Vec::new();
    for c in log_components {
        if c.len() != schedule.len() {
            return Err(Error::SizeMismatch {
                expected: schedule.len(),
                got: c.len(),
            });
        }
        let trace = schedule.iter().zip(c).map(|(&n, &l)| (n, ExtReal::of(l / n as f64))).collect();
        components.push(LimsupEstimate::from_trace(trace)?.value);
    }
    let combined_trace = schedule
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let terms: Vec<f64> = log_components.iter().map(|c| c[k]).collect();
            (n, ExtReal::of(log_sum_exp(&terms) / n as f64))
        })
        .collect();
    let combined = LimsupEstimate::from_trace(combined_trace)?.value;
    let top = components.iter().copied().max().expect("nonempty");
    let gap = combined.gap(top).abs();
    Ok(LargestTermReport {
        holds: gap <= ANALYTIC_TOL,
        combined,
        components,
        gap,
    })
}

/// `int_0^inf mu({g > x}) dx` by the layer-cake sum
/// `sum_k (v_k - v_{k-1}) mu({g >= v_k})` over the distinct values of `g`.
pub fn choquet_integral(mu: &Capacity, g: &[f64]) -> Result<f64> {
    let n = mu.space().size();
    if g.len() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            got: g.len(),
        });
    }
    if let Some((index, &value)) = g.iter().enumerate().find(|(_, v)| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::Negative { index, value });
    }
    let mut levels: Vec<f64> = g.to_vec();
    levels.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    levels.dedup();
    let mut total = 0.0;
    let mut prev = 0.0;
    for v in levels {
        if v > prev {
            let set = Subset::from_membership(&g.iter().map(|&y| y >= v).collect::<Vec<_>>());
            total += (v - prev) * mu.value(&set)?;
            prev = v;
        }
    }
    Ok(total)
}

/// Lattice laws of the components of a max-of-measures sequence at `n`.
fn component_laws(seq: &CapacitySequence, n: u64) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let comps: Vec<SampleModel> = match seq {
        CapacitySequence::MaxOfMeasures { components } => components.clone(),
        CapacitySequence::ExactBinomial { p } => vec![SampleModel::Bernoulli { p: *p }],
        other => {
            return Err(Error::Invalid(format!(
                "{other:?} has no exact lattice law for entropic evaluation"
            )))
        }
    };
    comps.iter().map(|c| c.lattice_log_law(n)).collect()
}

fn check_increasing_on(values: &[f64], fv: &[f64]) -> Result<()> {
    if let Some(k) = fv.windows(2).position(|w| w[1] < w[0]) {
        return Err(Error::Invalid(format!(
            "function decreases between {} and {}",
            values[k],
            values[k + 1]
        )));
    }
    if fv.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
        return Err(Error::Invalid("function must be bounded above and not NaN".into()));
    }
    Ok(())
}

/// `(1/n) log max_k E_k[exp(n f(X_n))]` and
/// `(1/n) log int_0^inf mu_n(exp(n f(X_n)) > x) dx` at one `n`.
fn entropic_and_choquet(
    laws: &[(Vec<f64>, Vec<f64>)],
    f: &(dyn Fn(f64) -> f64 + Sync),
    n: u64,
) -> Result<(f64, f64)> {
    let nf = n as f64;
    let mut entropic = f64::NEG_INFINITY;
    let mut weighted: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(laws.len());
    let mut levels: Vec<f64> = Vec::new();
    for (values, pmf) in laws {
        let w: Vec<f64> = values.iter().map(|&y| nf * f(y)).collect();
        check_increasing_on(values, &w)?;
        let terms: Vec<f64> = pmf.iter().zip(&w).map(|(p, x)| p + x).collect();
        entropic = entropic.max(log_sum_exp(&terms));
        levels.extend(w.iter().copied().filter(|x| x.is_finite()));
        weighted.push((w, log_upper_tails(pmf)));
    }
    levels.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    levels.dedup();
    // layer cake over the distinct values of exp(n f): the level set
    // {exp(nf) >= e^v} is an upper tail of each lattice law
    let mut terms = Vec::with_capacity(levels.len());
    let mut prev = f64::NEG_INFINITY;
    for &v in &levels {
        let mut cap = f64::NEG_INFINITY;
        for (w, tails) in &weighted {
            let j = w.partition_point(|x| *x < v);
            if j < tails.len() {
                cap = cap.max(tails[j]);
            }
        }
        terms.push(log_diff_exp(v, prev) + cap);
        prev = v;
    }
    Ok((entropic / nf, log_sum_exp(&terms) / nf))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropicChoquet {
    pub entropic: LimsupEstimate,
    pub choquet: LimsupEstimate,
    /// `|entropic.value - choquet.value|`; per-`n` values need not agree.
    pub gap: f64,
}

/// Traces of the entropic and the Choquet functional for an increasing `f`
/// along `schedule`.
pub fn entropic_vs_choquet(
    seq: &CapacitySequence,
    f: &(dyn Fn(f64) -> f64 + Sync),
    schedule: &[u64],
) -> Result<EntropicChoquet> {
    let pairs = schedule
        .par_iter()
        .map(|&n| {
            let laws = attach_n(n, component_laws(seq, n))?;
            let (e, c) = attach_n(n, entropic_and_choquet(&laws, f, n))?;
            Ok(((n, ExtReal::of(e)), (n, ExtReal::of(c))))
        })
        .collect::<Result<Vec<_>>>()?;
    let (left, right): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    let entropic = LimsupEstimate::from_trace(left)?;
    let choquet = LimsupEstimate::from_trace(right)?;
    let gap = entropic.value.gap(choquet.value).abs();
    Ok(EntropicChoquet {
        entropic,
        choquet,
        gap,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestrictedBound {
    pub estimate: LimsupEstimate,
    /// `sup_x {f(x) - I(x)}` over the supplied grid.
    pub bound: ExtReal,
    /// The same supremum restricted to `K`.
    pub bound_on_k: ExtReal,
    pub holds: bool,
}

/// `limsup (1/n) log E_n(exp(n f) 1_K(X_n)) <= sup_x {f(x) - I(x)} + tol`
/// for `K = [lo, hi]`.
pub fn restricted_entropic_bound(
    seq: &CapacitySequence,
    f: &(dyn Fn(f64) -> f64 + Sync),
    k: (f64, f64),
    rate: &(dyn Fn(f64) -> ExtReal + Sync),
    x_grid: &[f64],
    schedule: &[u64],
    tol: f64,
) -> Result<RestrictedBound> {
    let (lo, hi) = k;
    if !(lo <= hi) {
        return Err(Error::InvalidGrid(format!("K = [{lo}, {hi}]")));
    }
    let trace = schedule
        .par_iter()
        .map(|&n| {
            let laws = attach_n(n, component_laws(seq, n))?;
            let nf = n as f64;
            let mut best = f64::NEG_INFINITY;
            for (values, pmf) in &laws {
                let terms: Vec<f64> = values
                    .iter()
                    .zip(pmf)
                    .filter(|(y, _)| lo - 1e-12 <= **y && **y <= hi + 1e-12)
                    .map(|(&y, p)| p + nf * f(y))
                    .collect();
                best = best.max(log_sum_exp(&terms));
            }
            Ok((n, ExtReal::of(best / nf)))
        })
        .collect::<Result<Vec<_>>>()?;
    let estimate = LimsupEstimate::from_trace(trace)?;
    let sup_over = |pred: &dyn Fn(f64) -> bool| {
        x_grid
            .iter()
            .filter(|x| pred(**x))
            .map(|&x| ExtReal::of(f(x)) + (-rate(x)))
            .max()
            .unwrap_or(ExtReal::NEG_INF)
    };
    let bound = sup_over(&|_| true);
    let bound_on_k = sup_over(&|x| lo <= x && x <= hi);
    let holds = estimate.value <= bound || estimate.value.gap(bound) <= tol;
    Ok(RestrictedBound {
        estimate,
        bound,
        bound_on_k,
        holds,
    })
}

/// `start:end:step` with all parts positive; `end` is included when hit.
pub fn parse_schedule(s: &str) -> Result<Vec<u64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Error::Parse(format!("schedule {s:?}: expected START:END:STEP"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<u64> = parts
        .iter()
        .map(|p| p.trim().parse::<u64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let (start, end, step) = (nums[0], nums[1], nums[2]);
    if start == 0 || step == 0 || end < start {
        return Err(bad());
    }
    Ok((start..=end).step_by(step as usize).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{is_weakly_maxitive, principal_criterion_gap};
    use crate::concentration::Capacity;

    fn geometric(rho: f64) -> CapacitySequence {
        CapacitySequence::Custom(Arc::new(move |n, _| Ok(n as f64 * rho.ln())))
    }

    #[test]
    fn geometric_sequence_is_exact() {
        let sched: Vec<u64> = (1..=40).map(|k| 25 * k).collect();
        for rho in [1.0, 0.5, 0.01] {
            let e = log_rate_estimate(&geometric(rho), &Query::Closed(0.0), &sched).unwrap();
            assert!((e.value.get() - rho.ln()).abs() < 1e-15);
            assert!(e.trace.iter().all(|(_, v)| (v.get() - rho.ln()).abs() < 1e-15));
        }
    }

    #[test]
    fn alternating_sequence_gives_limsup() {
        let (rho, sigma) = (0.8f64, 0.3f64);
        let seq = CapacitySequence::Custom(Arc::new(move |n, _| {
            Ok(n as f64 * if n % 2 == 0 { rho.ln() } else { sigma.ln() })
        }));
        let sched: Vec<u64> = (1..=100).collect();
        let e = log_rate_estimate(&seq, &Query::Closed(0.0), &sched).unwrap();
        assert!((e.value.get() - rho.ln()).abs() < 1e-15);
        assert!(!e.tail_monotone);
    }

    #[test]
    fn binomial_tail_rate() {
        let seq = CapacitySequence::ExactBinomial { p: 0.5 };
        let sched = parse_schedule("100:2000:100").unwrap();
        let e = log_rate_estimate(&seq, &Query::Closed(0.75), &sched).unwrap();
        assert!((e.value.get() + 0.130_812_035_941_136_96).abs() < 0.005, "{}", e.value);
        assert_eq!(e.n_window, (1100, 2000));
        // intercept of the 1/n fit extrapolates closer to the limit
        assert!((e.intercept.unwrap() + 0.130_812).abs() < (e.value.get() + 0.130_812).abs());
    }

    #[test]
    fn zero_probability_is_flagged() {
        let seq = CapacitySequence::ExactBinomial { p: 0.5 };
        let e = log_rate_estimate(&seq, &Query::Closed(1.5), &[10, 20]).unwrap();
        assert!(e.value.is_neg_inf());
        assert_eq!(e.zero_probability, [10, 20]);
    }

    #[test]
    fn errors_carry_n() {
        let seq = CapacitySequence::Custom(Arc::new(|n, _| {
            if n == 30 {
                Err(Error::Invalid("boom".into()))
            } else {
                Ok(0.0)
            }
        }));
        let err = log_rate_estimate(&seq, &Query::Closed(0.0), &[10, 20, 30]).unwrap_err();
        assert!(matches!(err, Error::AtIndex { n: 30, .. }));
        assert!(log_rate_estimate(&seq, &Query::Closed(0.0), &[20, 10]).is_err());
    }

    #[test]
    fn scaling_by_n_does_not_move_the_estimate_much() {
        let base = CapacitySequence::ExactBinomial { p: 0.4 };
        let scaled = CapacitySequence::Custom(Arc::new(|n, q| {
            let l = CapacitySequence::ExactBinomial { p: 0.4 }.log_mu(n, q)?;
            Ok(l - (n as f64).ln())
        }));
        let sched = parse_schedule("500:5000:500").unwrap();
        let a = log_rate_estimate(&base, &Query::Closed(0.6), &sched).unwrap();
        let b = log_rate_estimate(&scaled, &Query::Closed(0.6), &sched).unwrap();
        let lo = a.n_window.0 as f64;
        assert!(a.value.gap(b.value).abs() <= lo.ln() / lo);
    }

    #[test]
    fn largest_term_examples() {
        let sched: Vec<u64> = (1..=20).map(|k| 1000 * k).collect();
        let e1: Vec<f64> = sched.iter().map(|&n| -(n as f64)).collect();
        let e2: Vec<f64> = sched.iter().map(|&n| -2.0 * n as f64).collect();
        let r = largest_term_check(&sched, &[e1.clone(), e2]).unwrap();
        assert!(r.holds);
        assert!((r.combined.get() + 1.0).abs() < 1e-3);
        let r = largest_term_check(&sched, &[e1.clone()]).unwrap();
        assert_eq!(r.gap, 0.0);
        let r = largest_term_check(&sched, &[e1.clone(), e1.clone(), e1]).unwrap();
        assert!(r.holds && (r.combined.get() + 1.0).abs() < 1e-3);
    }

    #[test]
    fn choquet_examples() {
        let sp = FinitePreorder::antichain(4).unwrap();
        let uniform = Capacity::from_fn(sp.clone(), |a| a.cardinality() as f64 / 4.0).unwrap();
        let g = [1.0, 2.0, 3.0, 4.0];
        assert!((choquet_integral(&uniform, &g).unwrap() - 2.5).abs() < 1e-15);
        let a = sp.subset(&[0, 2]).unwrap();
        let ind: Vec<f64> = (0..4).map(|x| if a.contains(x) { 1.0 } else { 0.0 }).collect();
        assert_eq!(choquet_integral(&uniform, &ind).unwrap(), 0.5);
        let two_points = Capacity::from_fn(sp.clone(), |s| {
            if s.contains(1) || s.contains(3) {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        // oracle: layer cake by hand, mu({g >= v}) = 1 for every level v <= 4
        let oracle: f64 = [1.0, 2.0, 3.0, 4.0]
            .iter()
            .map(|&v| {
                let s = Subset::from_membership(&g.map(|y| y >= v));
                two_points.value(&s).unwrap()
            })
            .sum();
        assert_eq!(oracle, 4.0);
        assert_eq!(choquet_integral(&two_points, &g).unwrap(), 4.0);
        assert!(choquet_integral(&uniform, &[1.0, -1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn entropic_vs_choquet_two_bernoulli_laws() {
        let seq = CapacitySequence::MaxOfMeasures {
            components: vec![SampleModel::bernoulli(0.3).unwrap(), SampleModel::bernoulli(0.6).unwrap()],
        };
        let sched = parse_schedule("100:2000:100").unwrap();
        let r = entropic_vs_choquet(&seq, &|x| x, &sched).unwrap();
        // mpmath: max(log(0.7 + 0.3 e), log(0.4 + 0.6 e))
        let limit = 0.708_513_066_862_315_2;
        assert!(r.gap < 0.01);
        assert!((r.entropic.value.get() - limit).abs() < 0.01);
        assert!((r.choquet.value.get() - limit).abs() < 0.01);
        // linear f: the entropic trace equals Lambda(1) for every n
        for (_, v) in &r.entropic.trace {
            assert!((v.get() - limit).abs() < 1e-12);
        }
    }

    #[test]
    fn entropic_vs_choquet_single_measure_and_constant() {
        let seq = CapacitySequence::ExactBinomial { p: 0.4 };
        let sched = [5u64, 50, 500];
        let r = entropic_vs_choquet(&seq, &|x| x * x, &sched).unwrap();
        for ((_, a), (_, b)) in r.entropic.trace.iter().zip(&r.choquet.trace) {
            assert!((a.get() - b.get()).abs() < 1e-12);
        }
        let two = CapacitySequence::MaxOfMeasures {
            components: vec![SampleModel::bernoulli(0.3).unwrap(), SampleModel::bernoulli(0.6).unwrap()],
        };
        let r = entropic_vs_choquet(&two, &|_| 0.7, &sched).unwrap();
        for ((_, a), (_, b)) in r.entropic.trace.iter().zip(&r.choquet.trace) {
            assert!((a.get() - 0.7).abs() < 1e-12 && (b.get() - 0.7).abs() < 1e-12);
        }
        assert!(entropic_vs_choquet(&two, &|x| -x, &sched).is_err());
    }

    #[test]
    fn restricted_bound_examples() {
        let model = SampleModel::bernoulli(0.5).unwrap();
        let seq = CapacitySequence::ExactBinomial { p: 0.5 };
        let rate = |x: f64| model.monotone_cramer_rate(x);
        let grid: Vec<f64> = (0..=1000).map(|k| k as f64 / 1000.0).collect();
        let sched = parse_schedule("200:2000:200").unwrap();
        let r = restricted_entropic_bound(&seq, &|x| x, (0.6, 0.9), &rate, &grid, &sched, WINDOW_TOL).unwrap();
        assert!(r.holds);
        // mpmath: log(0.5 + 0.5 e)
        assert!((r.bound.get() - 0.620_114_506_958_277_5).abs() < 1e-6);
        assert!(r.estimate.value.get() <= 0.620_114_506_958_277_5 + 1e-12);

        let full = restricted_entropic_bound(&seq, &|x| x, (0.0, 1.0), &rate, &grid, &sched, WINDOW_TOL).unwrap();
        assert!((full.estimate.value.get() - 0.620_114_506_958_277_5).abs() < 1e-12);

        let zero = restricted_entropic_bound(&seq, &|_| 0.0, (0.7, 1.0), &rate, &grid, &sched, WINDOW_TOL).unwrap();
        let half_line = log_rate_estimate(&seq, &Query::Closed(0.7), &sched).unwrap();
        for ((_, a), (_, b)) in zero.estimate.trace.iter().zip(&half_line.trace) {
            assert!((a.get() - b.get()).abs() < 1e-12);
        }
        assert!((zero.bound_on_k.get() + model.monotone_cramer_rate(0.7).get()).abs() < 1e-12);
    }

    #[test]
    fn gibbs_sequence_is_nearly_weakly_maxitive() {
        let sp = FinitePreorder::v_shape();
        let seq = CapacitySequence::finite_gibbs(
            sp.clone(),
            vec![vec![0.0, 1.0, 2.0], vec![0.5, 0.0, 3.0]],
        )
        .unwrap();
        let sched = parse_schedule("100:2000:100").unwrap();
        let j = estimated_concentration(&seq, &sp, &sched).unwrap();
        assert!(principal_criterion_gap(&j) <= WINDOW_TOL);
        let cap = seq.capacity_at(10, &sp).unwrap();
        assert_eq!(cap.value(&sp.full_set()).unwrap(), 1.0);
        // a non-maxitive example is still caught at the same scale
        assert!(!is_weakly_maxitive(&crate::fixtures::v_violation()).verdict);
    }

    #[test]
    fn query_and_schedule_parsing() {
        assert_eq!(Query::parse("a=0.75").unwrap(), Query::Closed(0.75));
        assert_eq!(Query::parse("a>0.5").unwrap(), Query::Open(0.5));
        assert!(Query::parse("b=1").is_err());
        assert_eq!(parse_schedule("10:30:10").unwrap(), [10, 20, 30]);
        assert!(parse_schedule("0:10:1").is_err());
        assert!(parse_schedule("10:5:1").is_err());
    }

    #[test]
    fn monte_carlo_sequence_is_reproducible() {
        let seq = CapacitySequence::MonteCarlo {
            model: SampleModel::bernoulli(0.5).unwrap(),
            trials: 20_000,
            seed: 7,
        };
        let a = log_rate_estimate(&seq, &Query::Closed(0.6), &[20, 40]).unwrap();
        let b = log_rate_estimate(&seq, &Query::Closed(0.6), &[20, 40]).unwrap();
        assert_eq!(a, b);
        assert!(log_rate_estimate(&seq, &Query::Open(0.6), &[20]).is_err());
    }
}
