//! Nonlinear expectations on increasing functions and their maxitive-integral
//! representation.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::concentration::{Concentration, IncreasingFn};
use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::generate::random_increasing;
use crate::integral::maxitive_integral;
use crate::numeric::log_sum_exp;
use crate::preorder::FinitePreorder;

/// Largest index accepted by the entropic family.
pub const MAX_ENTROPIC_INDEX: f64 = 1e4;

/// Comparison tolerance for property checks, relative to `1 + |value|`.
pub const PROPERTY_TOL: f64 = 1e-9;

/// Shifts used when checking the translation property.
const SHIFTS: [f64; 3] = [-1.5, 0.5, 2.0];

#[derive(Debug, Clone)]
pub enum FunctionalModel {
    /// `psi = phi_J`.
    WrappedMaxitive(Concentration),
    /// `psi_n(f) = (1/n) log max_k E_{P_k}[exp(n f)]`.
    Entropic {
        space: FinitePreorder,
        measures: Vec<Vec<f64>>,
        n: f64,
    },
    /// Values supplied for a fixed list of functions; anything else is missing.
    Table {
        space: FinitePreorder,
        entries: Vec<(Vec<f64>, ExtReal)>,
    },
}

impl FunctionalModel {
    pub fn entropic(space: FinitePreorder, measures: Vec<Vec<f64>>, n: f64) -> Result<Self> {
        if !(n > 0.0 && n <= MAX_ENTROPIC_INDEX) {
            return Err(Error::InvalidModel(format!(
                "entropic index {n} outside (0, {MAX_ENTROPIC_INDEX}]"
            )));
        }
        if measures.is_empty() {
            return Err(Error::InvalidModel("no measures".into()));
        }
        for (k, p) in measures.iter().enumerate() {
            if p.len() != space.size() {
                return Err(Error::SizeMismatch {
                    expected: space.size(),
                    got: p.len(),
                });
            }
            if p.iter().any(|&q| !(0.0..=1.0).contains(&q)) {
                return Err(Error::InvalidModel(format!("measure {k} has a weight outside [0, 1]")));
            }
            let total: f64 = p.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidModel(format!("measure {k} has total mass {total}")));
            }
        }
        Ok(FunctionalModel::Entropic { space, measures, n })
    }

    pub fn table(space: FinitePreorder, entries: Vec<(Vec<f64>, ExtReal)>) -> Result<Self> {
        for (f, _) in &entries {
            space.check_increasing(f)?;
        }
        Ok(FunctionalModel::Table { space, entries })
    }

    pub fn space(&self) -> &FinitePreorder {
        match self {
            FunctionalModel::WrappedMaxitive(j) => j.space(),
            FunctionalModel::Entropic { space, .. } | FunctionalModel::Table { space, .. } => space,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            FunctionalModel::WrappedMaxitive(_) => "wrapped_maxitive",
            FunctionalModel::Entropic { .. } => "entropic_family",
            FunctionalModel::Table { .. } => "table",
        }
    }

    /// `psi(f)` for an increasing `f` bounded above.
    pub fn evaluate(&self, f: &[f64]) -> Result<ExtReal> {
        let space = self.space();
        space.check_increasing(f)?;
        match self {
            FunctionalModel::WrappedMaxitive(j) => {
                maxitive_integral(j, &IncreasingFn::new(space, f.to_vec())?)
            }
            FunctionalModel::Entropic { measures, n, .. } => {
                let best = measures
                    .iter()
                    .map(|p| {
                        let terms: Vec<f64> = p
                            .iter()
                            .zip(f)
                            .map(|(&q, &v)| if q == 0.0 { f64::NEG_INFINITY } else { q.ln() + n * v })
                            .collect();
                        log_sum_exp(&terms)
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                Ok(ExtReal::of(best / n))
            }
            FunctionalModel::Table { entries, .. } => entries
                .iter()
                .find(|(g, _)| g.as_slice() == f)
                .map(|(_, v)| *v)
                .ok_or_else(|| Error::MissingTableEntry(f.to_vec())),
        }
    }

    /// `psi(-inf 1_{A^c})` on every up-set.
    pub fn induced_concentration(&self) -> Result<Concentration> {
        let space = self.space().clone();
        let mut checked = self.indicator_functions()?;
        if let FunctionalModel::Table { entries, .. } = self {
            checked.extend(entries.iter().map(|(f, _)| f.clone()));
        }
        self.verify_properties(&checked)?;
        let family = space.enumerate_up_sets()?;
        let mut values = Vec::with_capacity(family.len());
        for a in family.iter() {
            let v = self.evaluate(IncreasingFn::indicator(&space, a)?.values())?;
            // psi(0) = 0 has been verified up to rounding; snap the residue so
            // that J_E = 0 and J <= 0 hold exactly.
            let v = if v.is_finite() && v.get() > 0.0 && v.get() <= PROPERTY_TOL {
                ExtReal::ZERO
            } else {
                v
            };
            values.push(v);
        }
        Concentration::new(space, values)
    }

    fn indicator_functions(&self) -> Result<Vec<Vec<f64>>> {
        let space = self.space();
        let mut fns = vec![vec![0.0; space.size()]];
        for a in space.enumerate_up_sets()?.iter() {
            fns.push(IncreasingFn::indicator(space, a)?.into_values());
        }
        Ok(fns)
    }

    /// Checks `psi(0) = 0`, monotonicity and translation on `fns`.
    ///
    /// For models that can evaluate anything, each `f` is also compared with
    /// its shifts. Table models are checked only on pairs they contain.
    pub fn verify_properties(&self, fns: &[Vec<f64>]) -> Result<()> {
        let n = self.space().size();
        let zero = vec![0.0; n];
        match self.evaluate(&zero) {
            Ok(v) if v == ExtReal::ZERO => {}
            Ok(v) if v.is_finite() && v.get().abs() <= PROPERTY_TOL => {}
            Ok(v) => return Err(violation("psi(0) = 0", format!("psi(0) = {v}"))),
            Err(Error::MissingTableEntry(_)) => {}
            Err(e) => return Err(e),
        }
        let mut pool: Vec<Vec<f64>> = fns.to_vec();
        if !matches!(self, FunctionalModel::Table { .. }) {
            for f in fns {
                for c in SHIFTS {
                    pool.push(f.iter().map(|v| v + c).collect());
                }
            }
        }
        let mut evaluated = Vec::with_capacity(pool.len());
        for f in pool {
            match self.evaluate(&f) {
                Ok(v) => evaluated.push((f, v)),
                Err(Error::MissingTableEntry(_)) => {}
                Err(e) => return Err(e),
            }
        }
        for (f, pf) in &evaluated {
            for (g, pg) in &evaluated {
                if f.iter().zip(g).all(|(a, b)| a <= b) && !le_tol(*pf, *pg) {
                    return Err(violation(
                        "monotonicity",
                        format!("f = {f:?} <= g = {g:?} but psi(f) = {pf} > psi(g) = {pg}"),
                    ));
                }
                if let Some(c) = constant_shift(f, g) {
                    if !eq_tol(*pf + c, *pg) {
                        return Err(violation(
                            "translation",
                            format!("g = f + {c} with f = {f:?}: psi(f) + c = {} != psi(g) = {pg}", *pf + c),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// `max |psi(f) - phi_{J^psi}(f)|` over `fns`.
    pub fn representation_gap(&self, fns: &[IncreasingFn]) -> Result<f64> {
        let j = self.induced_concentration()?;
        representation_gap_with(self, &j, fns)
    }
}

/// [`FunctionalModel::representation_gap`] with the induced concentration
/// already computed.
pub fn representation_gap_with(
    psi: &FunctionalModel,
    j: &Concentration,
    fns: &[IncreasingFn],
) -> Result<f64> {
    let gaps = fns
        .par_iter()
        .map(|f| {
            let a = psi.evaluate(f.values())?;
            let b = maxitive_integral(j, f)?;
            Ok(a.gap(b).abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(gaps.into_iter().fold(0.0, f64::max))
}

fn violation(property: &'static str, detail: String) -> Error {
    Error::PropertyViolation { property, detail }
}

fn tol_for(a: ExtReal, b: ExtReal) -> f64 {
    let scale = [a, b]
        .iter()
        .filter(|v| v.is_finite())
        .map(|v| v.get().abs())
        .fold(0.0, f64::max);
    PROPERTY_TOL * (1.0 + scale)
}

fn le_tol(a: ExtReal, b: ExtReal) -> bool {
    a <= b || a.gap(b) <= tol_for(a, b)
}

fn eq_tol(a: ExtReal, b: ExtReal) -> bool {
    a == b || a.gap(b).abs() <= tol_for(a, b)
}

/// `Some(c)` if `g = f + c` with `c != 0` (infinite entries must coincide).
fn constant_shift(f: &[f64], g: &[f64]) -> Option<f64> {
    let mut c = None;
    for (a, b) in f.iter().zip(g) {
        if a.is_infinite() || b.is_infinite() {
            if a != b {
                return None;
            }
            continue;
        }
        let d = b - a;
        match c {
            None => c = Some(d),
            Some(prev) if (prev - d).abs() <= 1e-12 * (1.0 + d.abs()) => {}
            Some(_) => return None,
        }
    }
    c.filter(|&d| d != 0.0)
}

/// Lower and upper staircases of `f` on `N` equal steps of `[a, b]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Staircase {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub levels: Vec<f64>,
}

/// `l_N = max_j a_j` over `{f > a_j}` and `u_N = max_j a_j` over `{f >= a_j}`
/// with `a_j = a + j (b - a) / N`, `j = 0..N-1`.
///
/// Requires `a < f < b`. The sandwich `f - (b-a)/N <= l_N <= u_N <= f` is
/// checked before returning.
pub fn simple_staircase(f: &IncreasingFn, a: f64, b: f64, n: usize) -> Result<Staircase> {
    if n == 0 || !(a < b) || f.values().iter().any(|&v| !(a < v && v < b)) {
        return Err(Error::StaircaseBounds { a, b });
    }
    let step = (b - a) / n as f64;
    let levels: Vec<f64> = (0..n).map(|j| a + j as f64 * step).collect();
    let pick = |strict: bool| -> Vec<f64> {
        f.values()
            .iter()
            .map(|&v| {
                levels
                    .iter()
                    .copied()
                    .filter(|&l| if strict { v > l } else { v >= l })
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect()
    };
    let lower = pick(true);
    let upper = pick(false);
    let slack = 1e-12 * (1.0 + a.abs().max(b.abs()));
    for (k, &v) in f.values().iter().enumerate() {
        let ok = v - step <= lower[k] + slack && lower[k] <= upper[k] && upper[k] <= v;
        if !ok {
            return Err(Error::Invalid(format!(
                "staircase sandwich fails at {k}: f = {v}, l = {}, u = {}",
                lower[k], upper[k]
            )));
        }
    }
    Ok(Staircase { lower, upper, levels })
}

/// The four quantities `phi(l_N) <= psi(l_N) <= psi(u_N) <= (b-a)/N + phi(l_N)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StaircaseChain {
    pub phi_lower: ExtReal,
    pub psi_lower: ExtReal,
    pub psi_upper: ExtReal,
    pub bound: ExtReal,
    pub holds: bool,
}

pub fn staircase_chain(
    psi: &FunctionalModel,
    j: &Concentration,
    f: &IncreasingFn,
    a: f64,
    b: f64,
    n: usize,
) -> Result<StaircaseChain> {
    let st = simple_staircase(f, a, b, n)?;
    let space = psi.space();
    let phi_lower = maxitive_integral(j, &IncreasingFn::new(space, st.lower.clone())?)?;
    let psi_lower = psi.evaluate(&st.lower)?;
    let psi_upper = psi.evaluate(&st.upper)?;
    let bound = phi_lower + (b - a) / n as f64;
    let holds = le_tol(phi_lower, psi_lower) && le_tol(psi_lower, psi_upper) && le_tol(psi_upper, bound);
    Ok(StaircaseChain {
        phi_lower,
        psi_lower,
        psi_upper,
        bound,
        holds,
    })
}

/// A sampled instance with `f <= max_i g_i` and `psi(f) > max_i psi(g_i)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalWitness {
    pub f: Vec<f64>,
    pub gs: Vec<Vec<f64>>,
    pub lhs: ExtReal,
    pub rhs: ExtReal,
}

/// Samples `(f; g_1..g_m)` with `f <= max g_i` and tests
/// `psi(f) <= max psi(g_i)`. Each `f` is the increasing envelope of
/// `max g_i` minus a nonnegative perturbation.
pub fn sampled_weak_maxitivity<R: Rng + ?Sized>(
    psi: &FunctionalModel,
    rng: &mut R,
    samples: usize,
) -> Result<Option<FunctionalWitness>> {
    let space = psi.space();
    for _ in 0..samples {
        let m = rng.random_range(1..=3);
        let gs: Vec<Vec<f64>> = (0..m)
            .map(|_| random_increasing(rng, space).into_values())
            .collect();
        let top: Vec<f64> = (0..space.size())
            .map(|x| gs.iter().map(|g| g[x]).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        let bumped: Vec<f64> = top
            .iter()
            .map(|&v| {
                if rng.random_bool(0.5) {
                    v
                } else {
                    v - 0.5 * rng.random_range(0..=4) as f64
                }
            })
            .collect();
        let f = space.increasing_envelope(&bumped)?;
        let lhs = psi.evaluate(&f)?;
        let mut rhs = ExtReal::NEG_INF;
        for g in &gs {
            rhs = rhs.max(psi.evaluate(g)?);
        }
        if !le_tol(lhs, rhs) {
            return Ok(Some(FunctionalWitness { f, gs, lhs, rhs }));
        }
    }
    Ok(None)
}
