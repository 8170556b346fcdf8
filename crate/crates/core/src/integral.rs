//! Shilkret and maxitive integrals on the finite backend.
//!
//! Both integrals are suprema over a continuous threshold `c`. For a function
//! with finitely many values `v_1 < .. < v_m` the level set `{f > c}` is
//! constant on each `[v_{k-1}, v_k)` and equals `{f >= v_k}` there, so the
//! supremum reduces to a maximum over the distinct values.

use crate::concentration::{Capacity, Concentration, IncreasingFn};
use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::preorder::Subset;

/// Distinct finite values of `f`, ascending.
pub(crate) fn distinct_finite_values(f: &[f64]) -> Vec<f64> {
    let mut vs: Vec<f64> = f.iter().copied().filter(|v| v.is_finite()).collect();
    vs.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
    vs.dedup();
    vs
}

/// `{x : f(x) >= v}`.
pub fn level_set_ge(f: &[f64], v: f64) -> Subset {
    let members: Vec<bool> = f.iter().map(|&y| y >= v).collect();
    Subset::from_membership(&members)
}

/// `{x : f(x) > v}`.
pub fn level_set_gt(f: &[f64], v: f64) -> Subset {
    let members: Vec<bool> = f.iter().map(|&y| y > v).collect();
    Subset::from_membership(&members)
}

/// `sup_{c > 0} c * Pi({f > c})` for `f >= 0`.
pub fn shilkret_integral(pi: &Capacity, f: &IncreasingFn) -> Result<f64> {
    if let Some((index, &value)) = f.values().iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(Error::Negative { index, value });
    }
    let mut best = 0.0f64;
    for v in distinct_finite_values(f.values()) {
        if v > 0.0 {
            best = best.max(v * pi.value(&level_set_ge(f.values(), v))?);
        }
    }
    Ok(best)
}

/// `phi_J(f) = sup_c { c + J({f > c}) }`.
///
/// Both the strict branch (`{f > c}`) and the non-strict branch (`{f >= c}`)
/// are evaluated; on a finite space they must agree, and a disagreement is
/// reported as an error.
pub fn maxitive_integral(j: &Concentration, f: &IncreasingFn) -> Result<ExtReal> {
    let (strict, weak) = maxitive_integral_branches(j, f)?;
    if strict != weak {
        return Err(Error::Invalid(format!(
            "maxitive integral branches disagree: {strict} vs {weak}"
        )));
    }
    Ok(strict)
}

/// `(sup_c {c + J({f > c})}, sup_c {c + J({f >= c})})`.
pub fn maxitive_integral_branches(
    j: &Concentration,
    f: &IncreasingFn,
) -> Result<(ExtReal, ExtReal)> {
    let vals = distinct_finite_values(f.values());
    let mut strict = ExtReal::NEG_INF;
    let mut weak = ExtReal::NEG_INF;
    let mut prev = f64::NEG_INFINITY;
    for &v in &vals {
        // c ranges over [prev, v): {f > c} = {f > prev}, and c -> v.
        strict = strict.max(j.value(&level_set_gt(f.values(), prev))? + v);
        // c ranges over (prev, v]: {f >= c} = {f >= v}, attained at c = v.
        weak = weak.max(j.value(&level_set_ge(f.values(), v))? + v);
        prev = v;
    }
    Ok((strict, weak))
}

/// `phi` computed from the extended concentration on an arbitrary `f`:
/// `(sup_c {c + Jbar({f >= c})}, sup_c {c + Jbar({f > c})})`.
pub fn maxitive_integral_extended(j: &Concentration, f: &[f64]) -> Result<(ExtReal, ExtReal)> {
    let n = j.space().size();
    if f.len() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            got: f.len(),
        });
    }
    let mut weak = ExtReal::NEG_INF;
    let mut strict = ExtReal::NEG_INF;
    let mut prev = f64::NEG_INFINITY;
    for v in distinct_finite_values(f) {
        weak = weak.max(extended_concentration(j, &level_set_ge(f, v))? + v);
        strict = strict.max(extended_concentration(j, &level_set_gt(f, prev))? + v);
        prev = v;
    }
    Ok((weak, strict))
}

/// `Jbar(S) = inf { J(B) : B up-set, S subset of B }`.
///
/// On a finite space the infimum is attained at `up(S)`; both the scan and
/// the closure are computed and compared.
pub fn extended_concentration(j: &Concentration, s: &Subset) -> Result<ExtReal> {
    let closure = j.space().up_closure(s)?;
    let via_closure = j.value(&closure)?;
    let via_scan = j
        .iter()
        .filter(|(b, _)| s.is_subset_of(b))
        .map(|(_, v)| v)
        .min()
        .expect("the full set contains every subset");
    if via_closure != via_scan {
        return Err(Error::Invalid(format!(
            "extended concentration mismatch on {s}: {via_closure} vs {via_scan}"
        )));
    }
    Ok(via_scan)
}

/// The two recovery formulas for `J_A` from `phi_J`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndicatorGauge {
    /// `phi_J(-inf * 1_{A^c})`.
    pub via_indicator: ExtReal,
    /// `inf_{r < 0} phi_J(r * 1_{A^c})`.
    pub via_limit: ExtReal,
}

/// Evaluates both recovery formulas for an up-set `a`.
///
/// The infimum over `r < 0` is taken along `r = -10^k`, `k = 0, 10, .., 300`;
/// `phi_J(r 1_{A^c}) = max(r, J_A)` stabilises once `r < J_A`, and a sequence
/// that never stabilises is reported as `-inf`.
pub fn indicator_gauge(j: &Concentration, a: &Subset) -> Result<IndicatorGauge> {
    let sp = j.space();
    j.family().position(a)?;
    let via_indicator = maxitive_integral(j, &IncreasingFn::indicator(sp, a)?)?;
    let mut values = Vec::new();
    for k in (0..=300).step_by(10) {
        let r = -(10f64.powi(k));
        values.push(maxitive_integral(j, &IncreasingFn::step(sp, a, 0.0, r)?)?);
    }
    let last = values[values.len() - 1];
    let before = values[values.len() - 2];
    let via_limit = if last == before {
        values.iter().copied().min().expect("nonempty")
    } else {
        ExtReal::NEG_INF
    };
    Ok(IndicatorGauge {
        via_indicator,
        via_limit,
    })
}
