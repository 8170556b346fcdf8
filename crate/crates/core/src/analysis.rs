//! Weak maxitivity, minimal rate functions and the set/integral bounds that
//! connect a concentration with a rate function.
//!
//! Gap conventions: every reported gap is signed so that `>= 0` means the
//! inequality in question holds.

use serde::Serialize;

use crate::concentration::{inf_over, Concentration, IncreasingFn, RateFunction};
use crate::error::Result;
use crate::ext::ExtReal;
use crate::integral::maxitive_integral;
use crate::preorder::Subset;

/// Tolerance for integral-level comparisons.
pub const INTEGRAL_TOL: f64 = 1e-9;

/// A failed instance of `J_A <= max_i J_{B_i}` with `A` covered by the `B_i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxitivityWitness {
    pub set: Subset,
    pub cover: Vec<Subset>,
    pub lhs: ExtReal,
    pub rhs: ExtReal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxitivityReport {
    pub verdict: bool,
    pub witness: Option<MaxitivityWitness>,
}

impl MaxitivityReport {
    fn from_witness(witness: Option<MaxitivityWitness>) -> Self {
        MaxitivityReport {
            verdict: witness.is_none(),
            witness,
        }
    }
}

/// Weak maxitivity through the principal-cover criterion
/// `J_A <= max_{x in A} J_{up(x)}` for every nonempty up-set `A`.
///
/// Any finite up-set cover of `A` can be refined to the principal up-sets of
/// the points of `A`, so this single cover is the hardest one to satisfy.
pub fn is_weakly_maxitive(j: &Concentration) -> MaxitivityReport {
    let sp = j.space();
    for (a, ja) in j.iter() {
        if a.is_empty() {
            continue;
        }
        let rhs = a
            .members()
            .map(|x| j.principal(x))
            .max()
            .expect("nonempty");
        if ja > rhs {
            let mut cover: Vec<Subset> = a.members().map(|x| sp.principal_up(x)).collect();
            cover.sort_by(Subset::canonical_cmp);
            cover.dedup();
            return MaxitivityReport::from_witness(Some(MaxitivityWitness {
                set: *a,
                cover,
                lhs: ja,
                rhs,
            }));
        }
    }
    MaxitivityReport::from_witness(None)
}

/// `max_A (J_A - max_{x in A} J_{up(x)})` over nonempty up-sets; `<= 0`
/// exactly when the principal-cover criterion holds.
pub fn principal_criterion_gap(j: &Concentration) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for (a, ja) in j.iter() {
        if a.is_empty() {
            continue;
        }
        let rhs = a.members().map(|x| j.principal(x)).max().expect("nonempty");
        worst = worst.max(ja.gap(rhs));
    }
    worst
}

/// Weak maxitivity decided over all up-set covers, independent of the
/// principal criterion.
///
/// For each `A` a violating cover exists iff the up-sets `B` with `J_B < J_A`
/// jointly cover `A` (the union of all admissible members is the largest
/// cover one can build). The witness is a subcover picked greedily in
/// canonical order.
pub fn weakly_maxitive_by_covers(j: &Concentration) -> MaxitivityReport {
    for (a, ja) in j.iter() {
        if a.is_empty() {
            continue;
        }
        let below: Vec<(&Subset, ExtReal)> = j.iter().filter(|(_, jb)| *jb < ja).collect();
        let union = below
            .iter()
            .fold(Subset::empty(a.len()), |acc, (b, _)| acc.union(b));
        if a.is_subset_of(&union) {
            let mut cover: Vec<Subset> = Vec::new();
            let mut rhs = ExtReal::NEG_INF;
            for x in a.members() {
                if cover.iter().any(|c| c.contains(x)) {
                    continue;
                }
                let (b, jb) = below
                    .iter()
                    .find(|(b, _)| b.contains(x))
                    .expect("union covers a");
                cover.push(**b);
                rhs = rhs.max(*jb);
            }
            return MaxitivityReport::from_witness(Some(MaxitivityWitness {
                set: *a,
                cover,
                lhs: ja,
                rhs,
            }));
        }
    }
    MaxitivityReport::from_witness(None)
}

/// `J_{A u B} = max(J_A, J_B)` for all up-sets (finite unions follow by
/// induction, and on a finite space that is complete maxitivity).
pub fn is_completely_maxitive(j: &Concentration) -> Result<bool> {
    for (a, ja) in j.iter() {
        for (b, jb) in j.iter() {
            if j.value(&a.union(b))? != ja.max(jb) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `I_min(x) = -J_{up(x)}` (the base at `x` is `{{x}}`).
pub fn minimal_rate(j: &Concentration) -> RateFunction {
    let values = (0..j.space().size()).map(|x| -j.principal(x).get()).collect();
    RateFunction::new(values).expect("-J is nonnegative")
}

/// Outcome of checking a lower and an upper bound over a family of tests.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport<W> {
    pub lower_ok: bool,
    pub upper_ok: bool,
    pub worst_gap_lower: ExtReal,
    pub worst_gap_upper: ExtReal,
    pub lower_witness: Option<W>,
    pub upper_witness: Option<W>,
}

impl<W: Clone> BoundReport<W> {
    fn new() -> Self {
        BoundReport {
            lower_ok: true,
            upper_ok: true,
            worst_gap_lower: ExtReal::POS_INF,
            worst_gap_upper: ExtReal::POS_INF,
            lower_witness: None,
            upper_witness: None,
        }
    }

    fn record(&mut self, lower: f64, upper: f64, tol: f64, w: &W) {
        let lower = ExtReal::of(lower);
        let upper = ExtReal::of(upper);
        if lower < self.worst_gap_lower {
            self.worst_gap_lower = lower;
            if lower.get() < -tol {
                self.lower_ok = false;
                self.lower_witness = Some(w.clone());
            }
        }
        if upper < self.worst_gap_upper {
            self.worst_gap_upper = upper;
            if upper.get() < -tol {
                self.upper_ok = false;
                self.upper_witness = Some(w.clone());
            }
        }
    }

    pub fn both_ok(&self) -> bool {
        self.lower_ok && self.upper_ok
    }
}

/// Set-level bounds: `-inf_O I <= J_O` (lower) and `J_C <= -inf_C I` (upper)
/// over every nonempty up-set. Exact comparison; witnesses are up-sets.
pub fn check_mldp(j: &Concentration, rate: &RateFunction) -> BoundReport<Subset> {
    let mut report = BoundReport::new();
    for (a, ja) in j.iter() {
        if a.is_empty() {
            continue;
        }
        let neg_inf_rate = -inf_over(rate.values(), a);
        report.record(ja.gap(neg_inf_rate), neg_inf_rate.gap(ja), 0.0, a);
    }
    report
}

/// `sup_x { f(x) - I(x) }`.
pub fn sup_f_minus_rate(f: &[f64], rate: &RateFunction) -> ExtReal {
    f.iter()
        .zip(rate.values())
        .map(|(&fx, &ix)| ExtReal::of(fx) + (-ix))
        .max()
        .unwrap_or(ExtReal::NEG_INF)
}

/// `(phi_J(f) - sup{f - I}, sup{f - I} - phi_J(f))`.
pub fn varadhan_gap(j: &Concentration, rate: &RateFunction, f: &IncreasingFn) -> Result<(f64, f64)> {
    j.space().check_increasing(f.values())?;
    let phi = maxitive_integral(j, f)?;
    let sup = sup_f_minus_rate(f.values(), rate);
    Ok((phi.gap(sup), sup.gap(phi)))
}

/// Integral-level bounds `phi_J(f) >= sup{f - I}` and `phi_J(f) <= sup{f - I}`
/// over the supplied test functions, at tolerance `tol`. Witnesses are
/// indices into `fns`.
pub fn check_mlp_with_tol(
    j: &Concentration,
    rate: &RateFunction,
    fns: &[IncreasingFn],
    tol: f64,
) -> Result<BoundReport<usize>> {
    let mut report = BoundReport::new();
    for (k, f) in fns.iter().enumerate() {
        let (lower, upper) = varadhan_gap(j, rate, f)?;
        report.record(lower, upper, tol, &k);
    }
    Ok(report)
}

/// [`check_mlp_with_tol`] at [`INTEGRAL_TOL`].
pub fn check_mlp(
    j: &Concentration,
    rate: &RateFunction,
    fns: &[IncreasingFn],
) -> Result<BoundReport<usize>> {
    check_mlp_with_tol(j, rate, fns, INTEGRAL_TOL)
}

/// Comparison of a candidate rate `I` with `I_min` through the envelope `I^up`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimalityReport {
    pub lower_bound_holds: bool,
    pub upper_bound_holds: bool,
    /// Set when the lower bound fails: `I` is not in the class where `I_min`
    /// is minimal.
    pub precondition_flagged: bool,
    pub envelope: Vec<ExtReal>,
    pub minimal: Vec<ExtReal>,
    /// `I >= I_min` pointwise.
    pub dominates_minimal: bool,
    /// Upper bound holds, so `I^up <= I_min` must hold; `None` if not applicable.
    pub envelope_below_minimal: Option<bool>,
    /// Lower bound holds, so `I_min <= I^up` must hold; `None` if not applicable.
    pub minimal_below_envelope: Option<bool>,
}

impl MinimalityReport {
    /// Precondition met and every applicable implication verified.
    pub fn holds(&self) -> bool {
        !self.precondition_flagged
            && self.dominates_minimal
            && self.envelope_below_minimal != Some(false)
            && self.minimal_below_envelope != Some(false)
    }
}

pub fn rate_minimality_check(j: &Concentration, rate: &RateFunction) -> Result<MinimalityReport> {
    let bounds = check_mldp(j, rate);
    let env: Vec<ExtReal> = j
        .space()
        .increasing_envelope(&rate.as_f64())?
        .into_iter()
        .map(ExtReal::of)
        .collect();
    let minimal = minimal_rate(j).values().to_vec();
    let le = |a: &[ExtReal], b: &[ExtReal]| a.iter().zip(b).all(|(x, y)| x <= y);
    Ok(MinimalityReport {
        lower_bound_holds: bounds.lower_ok,
        upper_bound_holds: bounds.upper_ok,
        precondition_flagged: !bounds.lower_ok,
        dominates_minimal: le(&minimal, rate.values()),
        envelope_below_minimal: bounds.upper_ok.then(|| le(&env, &minimal)),
        minimal_below_envelope: bounds.lower_ok.then(|| le(&minimal, &env)),
        envelope: env,
        minimal,
    })
}

/// `J_C <= (J_{up(C n K)} + eps) v (-1/eps)`.
pub fn tightness_holds(j: &Concentration, c: &Subset, k: &Subset, eps: f64) -> Result<bool> {
    let jc = j.value(c)?;
    let truncated = j.value(&j.space().up_closure(&c.intersection(k))?)?;
    Ok(jc <= (truncated + eps).max(ExtReal::of(-1.0 / eps)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TightnessReport {
    pub tight: bool,
    /// `(C, eps)` pairs for which no supplied truncation set works.
    pub failures: Vec<(Subset, f64)>,
}

/// Checks the tightness inequality for every up-set `C` and every `eps`,
/// searching only the supplied truncation sets `K`.
pub fn tightness_check(
    j: &Concentration,
    truncation_sets: &[Subset],
    eps_schedule: &[f64],
) -> Result<TightnessReport> {
    let mut failures = Vec::new();
    for (c, _) in j.iter() {
        for &eps in eps_schedule {
            let mut ok = false;
            for k in truncation_sets {
                if tightness_holds(j, c, k, eps)? {
                    ok = true;
                    break;
                }
            }
            if !ok {
                failures.push((*c, eps));
            }
        }
    }
    Ok(TightnessReport {
        tight: failures.is_empty(),
        failures,
    })
}

/// Every concentration on a finite space is tight with `K = E`.
pub fn is_tight(j: &Concentration, eps_schedule: &[f64]) -> Result<TightnessReport> {
    tightness_check(j, &[j.space().full_set()], eps_schedule)
}
