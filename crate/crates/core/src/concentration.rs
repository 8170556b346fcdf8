//! Concentrations, capacities and the function types they act on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::preorder::{FinitePreorder, PreorderDoc, Subset, UpSetFamily};

/// A monotone set function `J` on the up-sets with values in `[-inf, 0]`,
/// `J(empty) = -inf` and `J(E) = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Concentration {
    space: FinitePreorder,
    family: UpSetFamily,
    values: Vec<ExtReal>,
}

impl Concentration {
    /// `values` are given in the canonical up-set order of `space`.
    pub fn new(space: FinitePreorder, values: Vec<ExtReal>) -> Result<Self> {
        let family = space.enumerate_up_sets()?;
        Self::with_family(space, family, values)
    }

    pub fn with_family(
        space: FinitePreorder,
        family: UpSetFamily,
        values: Vec<ExtReal>,
    ) -> Result<Self> {
        if values.len() != family.len() {
            return Err(Error::InvalidConcentration(format!(
                "{} values for {} up-sets",
                values.len(),
                family.len()
            )));
        }
        let j = Concentration {
            space,
            family,
            values,
        };
        j.validate()?;
        Ok(j)
    }

    /// Builds `J` by evaluating `value` on every up-set.
    pub fn from_fn(space: FinitePreorder, mut value: impl FnMut(&Subset) -> ExtReal) -> Result<Self> {
        let family = space.enumerate_up_sets()?;
        let values = family.iter().map(&mut value).collect();
        Self::with_family(space, family, values)
    }

    /// `J_A = -min_{x in A} I(x)`; requires `min_E I = 0`.
    pub fn from_rate(space: FinitePreorder, rate: &RateFunction) -> Result<Self> {
        if rate.len() != space.size() {
            return Err(Error::SizeMismatch {
                expected: space.size(),
                got: rate.len(),
            });
        }
        Self::from_fn(space, |a| -inf_over(rate.values(), a))
    }

    fn validate(&self) -> Result<()> {
        let n = self.space.size();
        for (s, v) in self.family.iter().zip(&self.values) {
            if v.is_pos_inf() || v.get() > 0.0 {
                return Err(Error::InvalidConcentration(format!(
                    "J{s} = {v} is above 0"
                )));
            }
        }
        let empty = self.value(&Subset::empty(n))?;
        if !empty.is_neg_inf() {
            return Err(Error::InvalidConcentration(format!(
                "J of the empty set is {empty}, not -inf"
            )));
        }
        let full = self.value(&Subset::full(n))?;
        if full != ExtReal::ZERO {
            return Err(Error::InvalidConcentration(format!(
                "J of the full set is {full}, not 0"
            )));
        }
        // Any inclusion A of B between up-sets factors through steps
        // A -> A u up(x), so checking those steps covers monotonicity.
        for (a, &ja) in self.family.iter().zip(&self.values) {
            for x in a.complement().members() {
                let b = a.union(&self.space.principal_up(x));
                let jb = self.value(&b)?;
                if ja > jb {
                    return Err(Error::InvalidConcentration(format!(
                        "not monotone: J{a} = {ja} > J{b} = {jb}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn space(&self) -> &FinitePreorder {
        &self.space
    }

    pub fn family(&self) -> &UpSetFamily {
        &self.family
    }

    pub fn values(&self) -> &[ExtReal] {
        &self.values
    }

    /// `J_A` for an up-set `A`.
    pub fn value(&self, a: &Subset) -> Result<ExtReal> {
        Ok(self.values[self.family.position(a)?])
    }

    /// `J_{up(x)}`.
    pub fn principal(&self, x: usize) -> ExtReal {
        self.values[self
            .family
            .position(&self.space.principal_up(x))
            .expect("principal up-sets are up-sets")]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Subset, ExtReal)> {
        self.family.iter().zip(self.values.iter().copied())
    }

    pub fn to_doc(&self) -> ConcentrationDoc {
        ConcentrationDoc {
            poset: PreorderDoc::from(&self.space),
            upsets: self.family.iter().map(Subset::membership_string).collect(),
            values: self.values.clone(),
        }
    }

    pub fn from_doc(doc: &ConcentrationDoc) -> Result<Self> {
        let space = FinitePreorder::try_from(&doc.poset)?;
        let family = space.enumerate_up_sets()?;
        if doc.upsets.len() != doc.values.len() {
            return Err(Error::InvalidConcentration(format!(
                "{} up-sets but {} values",
                doc.upsets.len(),
                doc.values.len()
            )));
        }
        let mut values = vec![None; family.len()];
        for (key, &v) in doc.upsets.iter().zip(&doc.values) {
            let s = Subset::parse_membership(key)?;
            if s.len() != space.size() {
                return Err(Error::SizeMismatch {
                    expected: space.size(),
                    got: s.len(),
                });
            }
            let pos = family.position(&s)?;
            if values[pos].replace(v).is_some() {
                return Err(Error::InvalidConcentration(format!("duplicate up-set {key}")));
            }
        }
        let values = values
            .into_iter()
            .zip(family.iter())
            .map(|(v, s)| {
                v.ok_or_else(|| {
                    Error::InvalidConcentration(format!("missing value for up-set {s}"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::with_family(space, family, values)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("concentration serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: ConcentrationDoc =
            serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_doc(&doc)
    }
}

/// Serialized concentration; up-sets as membership strings in canonical order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationDoc {
    pub poset: PreorderDoc,
    pub upsets: Vec<String>,
    pub values: Vec<ExtReal>,
}

/// A capacity `Pi = e^J`. Stored in the log domain so values such as
/// `e^{-700}` survive.
#[derive(Clone, Debug, PartialEq)]
pub struct Capacity {
    log: Concentration,
}

impl Capacity {
    /// `values` in `[0, 1]`, canonical up-set order.
    pub fn new(space: FinitePreorder, values: &[f64]) -> Result<Self> {
        if let Some((i, &v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::InvalidCapacity(format!(
                "value {v} at position {i} is outside [0, 1]"
            )));
        }
        let logs = values.iter().map(|&v| ExtReal::ln(v)).collect();
        Concentration::new(space, logs)
            .map(|log| Capacity { log })
            .map_err(|e| match e {
                Error::InvalidConcentration(m) => Error::InvalidCapacity(m),
                other => other,
            })
    }

    pub fn from_fn(space: FinitePreorder, mut value: impl FnMut(&Subset) -> f64) -> Result<Self> {
        let family = space.enumerate_up_sets()?;
        let values: Vec<f64> = family.iter().map(&mut value).collect();
        Self::new(space, &values)
    }

    pub fn value(&self, a: &Subset) -> Result<f64> {
        Ok(self.log.value(a)?.exp())
    }

    pub fn log_value(&self, a: &Subset) -> Result<ExtReal> {
        self.log.value(a)
    }

    pub fn space(&self) -> &FinitePreorder {
        self.log.space()
    }

    pub fn family(&self) -> &UpSetFamily {
        self.log.family()
    }

    pub fn as_concentration(&self) -> &Concentration {
        &self.log
    }
}

/// `Pi = e^J`, exact on `-inf <-> 0`.
pub fn capacity_from_concentration(j: &Concentration) -> Capacity {
    Capacity { log: j.clone() }
}

/// `J = log Pi`.
pub fn concentration_from_capacity(pi: &Capacity) -> Concentration {
    pi.log.clone()
}

/// An increasing function on a finite preorder with values in `[-inf, inf)`.
#[derive(Clone, Debug, PartialEq)]
pub struct IncreasingFn {
    values: Vec<f64>,
}

impl IncreasingFn {
    pub fn new(space: &FinitePreorder, values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(Error::Invalid(format!(
                "function value {} at {i} is not in [-inf, inf)",
                values[i]
            )));
        }
        space.check_increasing(&values)?;
        Ok(IncreasingFn { values })
    }

    pub fn constant(space: &FinitePreorder, c: f64) -> Result<Self> {
        Self::new(space, vec![c; space.size()])
    }

    /// `-inf` off `a`, `0` on `a` (the indicator `-inf * 1_{A^c}`).
    pub fn indicator(space: &FinitePreorder, a: &Subset) -> Result<Self> {
        Self::step(space, a, 0.0, f64::NEG_INFINITY)
    }

    /// `on` on `a`, `off` elsewhere; increasing iff `a` is an up-set (for `off < on`).
    pub fn step(space: &FinitePreorder, a: &Subset, on: f64, off: f64) -> Result<Self> {
        let values = (0..space.size())
            .map(|x| if a.contains(x) { on } else { off })
            .collect();
        Self::new(space, values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `f + c` (with `-inf + c = -inf`).
    pub fn shifted(&self, c: f64) -> Self {
        IncreasingFn {
            values: self.values.iter().map(|v| v + c).collect(),
        }
    }

    /// `min(f, cap)`.
    pub fn capped_above(&self, cap: f64) -> Self {
        IncreasingFn {
            values: self.values.iter().map(|v| v.min(cap)).collect(),
        }
    }

    /// `max(f, floor)`.
    pub fn floored(&self, floor: f64) -> Self {
        IncreasingFn {
            values: self.values.iter().map(|v| v.max(floor)).collect(),
        }
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// A function `I : E -> [0, inf]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateFunction {
    values: Vec<ExtReal>,
}

impl RateFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let mut out = Vec::with_capacity(values.len());
        for (i, v) in values.into_iter().enumerate() {
            if v.is_nan() || v < 0.0 {
                return Err(Error::InvalidRate(format!("I({i}) = {v} is not in [0, inf]")));
            }
            out.push(ExtReal::of(v));
        }
        Ok(RateFunction { values: out })
    }

    /// `I = -log pi` for a possibility distribution `pi` with values in `[0, 1]`.
    pub fn from_possibility(pi: &[f64]) -> Result<Self> {
        if let Some(p) = pi.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidRate(format!("possibility {p} outside [0, 1]")));
        }
        Self::new(pi.iter().map(|&p| -ExtReal::ln(p).get()).collect())
    }

    pub fn values(&self) -> &[ExtReal] {
        &self.values
    }

    pub fn get(&self, x: usize) -> f64 {
        self.values[x].get()
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.get()).collect()
    }

    /// `pi = e^{-I}`.
    pub fn possibility(&self) -> Vec<f64> {
        self.values.iter().map(|v| (-v.get()).exp()).collect()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `min_{x in a} values[x]`, `+inf` on the empty set.
pub(crate) fn inf_over(values: &[ExtReal], a: &Subset) -> ExtReal {
    a.members()
        .map(|x| values[x])
        .fold(ExtReal::POS_INF, ExtReal::min)
}
