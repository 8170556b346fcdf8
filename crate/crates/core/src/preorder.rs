//! Finite preordered spaces with the discrete topology.
//!
//! On a finite discrete space every set is open, closed and compact, so the
//! families of open, closed and compactly generated up-sets all coincide with
//! the plain up-sets. Everything in this crate that talks about "up-sets"
//! relies on that collapse. The neighbourhood base of a point `x` is `{{x}}`.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard limit on the element count (subsets are bitmasks).
pub const MAX_ELEMENTS: usize = 64;

/// Default limit for [`FinitePreorder::enumerate_up_sets`]; the family can be
/// exponential in the size.
pub const DEFAULT_UPSET_CAP: usize = 16;

/// A subset of `{0, .., len-1}` stored as a bitmask.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Subset {
    bits: u64,
    len: usize,
}

impl Subset {
    pub fn empty(len: usize) -> Self {
        Subset { bits: 0, len }
    }

    pub fn full(len: usize) -> Self {
        Subset {
            bits: full_mask(len),
            len,
        }
    }

    pub fn from_bits(len: usize, bits: u64) -> Self {
        debug_assert!(bits & !full_mask(len) == 0);
        Subset { bits, len }
    }

    pub fn from_members(len: usize, members: &[usize]) -> Result<Self> {
        let mut bits = 0u64;
        for &m in members {
            if m >= len {
                return Err(Error::SizeMismatch {
                    expected: len,
                    got: m + 1,
                });
            }
            bits |= 1 << m;
        }
        Ok(Subset { bits, len })
    }

    pub fn from_membership(members: &[bool]) -> Self {
        let bits = members
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .fold(0u64, |acc, (i, _)| acc | (1 << i));
        Subset {
            bits,
            len: members.len(),
        }
    }

    /// Parses a membership string such as `"0110"` (character `i` is element `i`).
    pub fn parse_membership(s: &str) -> Result<Self> {
        let mut members = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => members.push(false),
                '1' => members.push(true),
                _ => return Err(Error::Parse(format!("bad membership string {s:?}"))),
            }
        }
        if members.len() > MAX_ELEMENTS {
            return Err(Error::TooLarge {
                size: members.len(),
                max: MAX_ELEMENTS,
            });
        }
        Ok(Self::from_membership(&members))
    }

    pub fn membership_string(&self) -> String {
        (0..self.len)
            .map(|i| if self.contains(i) { '1' } else { '0' })
            .collect()
    }

    #[inline]
    pub fn bits(&self) -> u64 {
        self.bits
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    pub fn is_full(&self) -> bool {
        self.bits == full_mask(self.len)
    }

    pub fn cardinality(&self) -> usize {
        self.bits.count_ones() as usize
    }

    #[inline]
    pub fn contains(&self, x: usize) -> bool {
        x < self.len && self.bits >> x & 1 == 1
    }

    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.contains(i))
    }

    pub fn union(&self, other: &Subset) -> Subset {
        debug_assert_eq!(self.len, other.len);
        Subset {
            bits: self.bits | other.bits,
            len: self.len,
        }
    }

    pub fn intersection(&self, other: &Subset) -> Subset {
        debug_assert_eq!(self.len, other.len);
        Subset {
            bits: self.bits & other.bits,
            len: self.len,
        }
    }

    pub fn complement(&self) -> Subset {
        Subset {
            bits: !self.bits & full_mask(self.len),
            len: self.len,
        }
    }

    pub fn is_subset_of(&self, other: &Subset) -> bool {
        self.bits & !other.bits == 0
    }

    /// Canonical order: cardinality first, then the sorted member lists
    /// lexicographically.
    pub fn canonical_cmp(&self, other: &Subset) -> Ordering {
        self.cardinality()
            .cmp(&other.cardinality())
            .then_with(|| self.members().cmp(other.members()))
    }
}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, m) in self.members().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{m}")?;
        }
        f.write_str("}")
    }
}

/// Serialized as the sorted list of members.
impl Serialize for Subset {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.members())
    }
}

fn full_mask(len: usize) -> u64 {
    if len >= 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

/// A reflexive, transitive relation on `{0, .., size-1}`.
#[derive(Clone, PartialEq, Eq)]
pub struct FinitePreorder {
    size: usize,
    /// `up[x]` is the bitmask of `{y : x <= y}`.
    up: Vec<u64>,
    /// `down[y]` is the bitmask of `{x : x <= y}`.
    down: Vec<u64>,
}

impl fmt::Debug for FinitePreorder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FinitePreorder")
            .field("size", &self.size)
            .field("relations", &self.relations())
            .finish()
    }
}

impl FinitePreorder {
    /// Builds the reflexive-transitive closure of `edges` (`(x, y)` means `x <= y`).
    pub fn from_edges(size: usize, edges: &[(usize, usize)]) -> Result<Self> {
        check_size(size)?;
        let mut up: Vec<u64> = (0..size).map(|x| 1u64 << x).collect();
        for &(x, y) in edges {
            if x >= size || y >= size {
                return Err(Error::SizeMismatch {
                    expected: size,
                    got: x.max(y) + 1,
                });
            }
            up[x] |= 1 << y;
        }
        // Warshall on bit rows.
        for k in 0..size {
            for x in 0..size {
                if up[x] >> k & 1 == 1 {
                    up[x] |= up[k];
                }
            }
        }
        Ok(Self::from_up_rows(size, up))
    }

    /// Validates an explicit relation table (`leq[x][y]` means `x <= y`).
    pub fn from_relation(leq: &[Vec<bool>]) -> Result<Self> {
        let size = leq.len();
        check_size(size)?;
        let mut up = vec![0u64; size];
        for (x, row) in leq.iter().enumerate() {
            if row.len() != size {
                return Err(Error::SizeMismatch {
                    expected: size,
                    got: row.len(),
                });
            }
            for (y, &r) in row.iter().enumerate() {
                if r {
                    up[x] |= 1 << y;
                }
            }
        }
        for x in 0..size {
            if up[x] >> x & 1 == 0 {
                return Err(Error::NotPreorder(format!("not reflexive at {x}")));
            }
        }
        for x in 0..size {
            for y in 0..size {
                if up[x] >> y & 1 == 1 && up[y] & !up[x] != 0 {
                    let z = (up[y] & !up[x]).trailing_zeros();
                    return Err(Error::NotPreorder(format!(
                        "not transitive: {x} <= {y} <= {z} but not {x} <= {z}"
                    )));
                }
            }
        }
        Ok(Self::from_up_rows(size, up))
    }

    fn from_up_rows(size: usize, up: Vec<u64>) -> Self {
        let mut down = vec![0u64; size];
        for x in 0..size {
            for y in 0..size {
                if up[x] >> y & 1 == 1 {
                    down[y] |= 1 << x;
                }
            }
        }
        FinitePreorder { size, up, down }
    }

    /// `0 <= 1 <= .. <= n-1`.
    pub fn chain(n: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::from_edges(n, &edges)
    }

    /// `n` pairwise incomparable elements.
    pub fn antichain(n: usize) -> Result<Self> {
        Self::from_edges(n, &[])
    }

    /// `o=0 <= a=1`, `o <= b=2`.
    pub fn v_shape() -> Self {
        Self::from_edges(3, &[(0, 1), (0, 2)]).expect("static poset")
    }

    /// `o=0 <= a=1, b=2 <= t=3`.
    pub fn diamond() -> Self {
        Self::from_edges(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]).expect("static poset")
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn leq(&self, x: usize, y: usize) -> bool {
        self.up[x] >> y & 1 == 1
    }

    /// All pairs `x <= y` with `x != y`, in row-major order.
    pub fn relations(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for x in 0..self.size {
            for y in 0..self.size {
                if x != y && self.leq(x, y) {
                    out.push((x, y));
                }
            }
        }
        out
    }

    pub fn empty_set(&self) -> Subset {
        Subset::empty(self.size)
    }

    pub fn full_set(&self) -> Subset {
        Subset::full(self.size)
    }

    pub fn subset(&self, members: &[usize]) -> Result<Subset> {
        Subset::from_members(self.size, members)
    }

    fn check_subset(&self, s: &Subset) -> Result<()> {
        if s.len() != self.size {
            Err(Error::SizeMismatch {
                expected: self.size,
                got: s.len(),
            })
        } else {
            Ok(())
        }
    }

    /// `{y : exists x in s, x <= y}`.
    pub fn up_closure(&self, s: &Subset) -> Result<Subset> {
        self.check_subset(s)?;
        Ok(Subset::from_bits(self.size, self.up_bits(s.bits())))
    }

    /// `{y : exists x in s, y <= x}`.
    pub fn down_closure(&self, s: &Subset) -> Result<Subset> {
        self.check_subset(s)?;
        let bits = s.members().fold(0u64, |acc, x| acc | self.down[x]);
        Ok(Subset::from_bits(self.size, bits))
    }

    #[inline]
    fn up_bits(&self, mut bits: u64) -> u64 {
        let mut acc = 0u64;
        while bits != 0 {
            let x = bits.trailing_zeros() as usize;
            acc |= self.up[x];
            bits &= bits - 1;
        }
        acc
    }

    /// Principal up-set `{y : x <= y}`.
    pub fn principal_up(&self, x: usize) -> Subset {
        Subset::from_bits(self.size, self.up[x])
    }

    pub fn is_up_set(&self, s: &Subset) -> bool {
        s.len() == self.size && self.up_bits(s.bits()) == s.bits()
    }

    pub fn is_down_set(&self, s: &Subset) -> bool {
        s.len() == self.size
            && s.members().fold(0u64, |acc, x| acc | self.down[x]) == s.bits()
    }

    /// All up-sets in canonical order, refusing sizes above `cap`.
    pub fn enumerate_up_sets_capped(&self, cap: usize) -> Result<UpSetFamily> {
        if self.size > cap {
            return Err(Error::TooLarge {
                size: self.size,
                max: cap,
            });
        }
        let mut sets: Vec<Subset> = (0..1u64 << self.size)
            .filter(|&bits| self.up_bits(bits) == bits)
            .map(|bits| Subset::from_bits(self.size, bits))
            .collect();
        sets.sort_by(Subset::canonical_cmp);
        Ok(UpSetFamily::from_sorted(self.size, sets))
    }

    /// All up-sets in canonical order (size capped at [`DEFAULT_UPSET_CAP`]).
    pub fn enumerate_up_sets(&self) -> Result<UpSetFamily> {
        self.enumerate_up_sets_capped(DEFAULT_UPSET_CAP)
    }

    /// `x <= y  =>  f(x) <= f(y)`. Length mismatches count as "not increasing".
    pub fn is_increasing(&self, f: &[f64]) -> bool {
        self.first_increase_violation(f).is_none() && f.len() == self.size
    }

    pub(crate) fn first_increase_violation(&self, f: &[f64]) -> Option<(usize, usize)> {
        if f.len() != self.size {
            return None;
        }
        for x in 0..self.size {
            for y in 0..self.size {
                if self.leq(x, y) && !(f[x] <= f[y]) {
                    return Some((x, y));
                }
            }
        }
        None
    }

    pub fn check_increasing(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.size {
            return Err(Error::SizeMismatch {
                expected: self.size,
                got: f.len(),
            });
        }
        match self.first_increase_violation(f) {
            Some((lower, upper)) => Err(Error::NotIncreasing { lower, upper }),
            None => Ok(()),
        }
    }

    /// Greatest increasing function below `f`: `x -> min_{y >= x} f(y)`.
    ///
    /// Lower semicontinuity is vacuous on a discrete space, so this is the
    /// increasing lower semicontinuous envelope.
    pub fn increasing_envelope(&self, f: &[f64]) -> Result<Vec<f64>> {
        if f.len() != self.size {
            return Err(Error::SizeMismatch {
                expected: self.size,
                got: f.len(),
            });
        }
        Ok((0..self.size)
            .map(|x| {
                Subset::from_bits(self.size, self.up[x])
                    .members()
                    .map(|y| f[y])
                    .fold(f64::INFINITY, f64::min)
            })
            .collect())
    }

    /// Parses the text format: first line `n`, then one `x <= y` per line.
    /// Blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());
        let head = lines
            .next()
            .ok_or_else(|| Error::Parse("empty poset file".into()))?;
        let size: usize = head
            .parse()
            .map_err(|_| Error::Parse(format!("bad element count {head:?}")))?;
        if size == 0 {
            return Err(Error::Parse("a poset needs at least one element".into()));
        }
        let mut edges = Vec::new();
        for line in lines {
            let (l, r) = line
                .split_once("<=")
                .ok_or_else(|| Error::Parse(format!("expected `x <= y`, got {line:?}")))?;
            let x: usize = l
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad element {:?}", l.trim())))?;
            let y: usize = r
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad element {:?}", r.trim())))?;
            if x >= size || y >= size {
                return Err(Error::Parse(format!(
                    "element out of range in {line:?} (size {size})"
                )));
            }
            edges.push((x, y));
        }
        Self::from_edges(size, &edges)
    }

    /// Inverse of [`FinitePreorder::parse`], listing every strict relation.
    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n", self.size);
        for (x, y) in self.relations() {
            s.push_str(&format!("{x} <= {y}\n"));
        }
        s
    }
}

fn check_size(size: usize) -> Result<()> {
    if size > MAX_ELEMENTS {
        Err(Error::TooLarge {
            size,
            max: MAX_ELEMENTS,
        })
    } else {
        Ok(())
    }
}

/// JSON form of a preorder: element count plus strict relations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreorderDoc {
    pub size: usize,
    pub relations: Vec<(usize, usize)>,
}

impl From<&FinitePreorder> for PreorderDoc {
    fn from(p: &FinitePreorder) -> Self {
        PreorderDoc {
            size: p.size(),
            relations: p.relations(),
        }
    }
}

impl TryFrom<&PreorderDoc> for FinitePreorder {
    type Error = Error;
    fn try_from(d: &PreorderDoc) -> Result<Self> {
        FinitePreorder::from_edges(d.size, &d.relations)
    }
}

/// The up-sets of a finite preorder in canonical order.
#[derive(Clone, Debug, PartialEq)]
pub struct UpSetFamily {
    size: usize,
    sets: Vec<Subset>,
    index: HashMap<u64, usize>,
}

impl UpSetFamily {
    fn from_sorted(size: usize, sets: Vec<Subset>) -> Self {
        let index = sets
            .iter()
            .enumerate()
            .map(|(i, s)| (s.bits(), i))
            .collect();
        UpSetFamily { size, sets, index }
    }

    pub fn sets(&self) -> &[Subset] {
        &self.sets
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn element_count(&self) -> usize {
        self.size
    }

    /// Position of `s` in the canonical order.
    pub fn position(&self, s: &Subset) -> Result<usize> {
        if s.len() != self.size {
            return Err(Error::SizeMismatch {
                expected: self.size,
                got: s.len(),
            });
        }
        self.index
            .get(&s.bits())
            .copied()
            .ok_or(Error::NotUpSet(*s))
    }

    pub fn contains(&self, s: &Subset) -> bool {
        s.len() == self.size && self.index.contains_key(&s.bits())
    }

    pub fn iter(&self) -> impl Iterator<Item = &Subset> {
        self.sets.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_subsets(p: &FinitePreorder) -> impl Iterator<Item = Subset> + '_ {
        (0..1u64 << p.size()).map(|b| Subset::from_bits(p.size(), b))
    }

    // Brute-force oracle: scan the relation table.
    fn up_closure_oracle(p: &FinitePreorder, s: &Subset) -> Subset {
        let n = p.size();
        let members: Vec<bool> = (0..n)
            .map(|y| (0..n).any(|x| s.contains(x) && p.leq(x, y)))
            .collect();
        Subset::from_membership(&members)
    }

    #[test]
    fn closure_examples() {
        let chain = FinitePreorder::chain(3).unwrap();
        let s = chain.subset(&[1]).unwrap();
        assert_eq!(chain.up_closure(&s).unwrap(), chain.subset(&[1, 2]).unwrap());
        assert_eq!(chain.down_closure(&s).unwrap(), chain.subset(&[0, 1]).unwrap());

        let anti = FinitePreorder::antichain(2).unwrap();
        let s0 = anti.subset(&[0]).unwrap();
        let s1 = anti.subset(&[1]).unwrap();
        assert_eq!(anti.up_closure(&s0).unwrap(), s0);
        assert_eq!(anti.down_closure(&s1).unwrap(), s1);

        let d = FinitePreorder::diamond();
        let full = d.full_set();
        assert_eq!(d.up_closure(&d.subset(&[0]).unwrap()).unwrap(), full);
        assert_eq!(d.down_closure(&d.subset(&[3]).unwrap()).unwrap(), full);
        assert_eq!(
            d.up_closure(&d.subset(&[0]).unwrap()).unwrap(),
            up_closure_oracle(&d, &d.subset(&[0]).unwrap())
        );
    }

    #[test]
    fn closure_rejects_foreign_subset() {
        let chain = FinitePreorder::chain(3).unwrap();
        let s = Subset::from_members(4, &[0]).unwrap();
        assert!(matches!(
            chain.up_closure(&s),
            Err(Error::SizeMismatch { expected: 3, got: 4 })
        ));
    }

    #[test]
    fn enumeration_examples() {
        let chain = FinitePreorder::chain(3).unwrap();
        let fam = chain.enumerate_up_sets().unwrap();
        let got: Vec<String> = fam.iter().map(|s| s.to_string()).collect();
        assert_eq!(got, ["{}", "{2}", "{1,2}", "{0,1,2}"]);

        let anti = FinitePreorder::antichain(2).unwrap();
        assert_eq!(anti.enumerate_up_sets().unwrap().len(), 4);

        let v = FinitePreorder::v_shape();
        let got: Vec<String> = v
            .enumerate_up_sets()
            .unwrap()
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(got, ["{}", "{1}", "{2}", "{1,2}", "{0,1,2}"]);
    }

    #[test]
    fn enumeration_cap() {
        let big = FinitePreorder::antichain(17).unwrap();
        assert!(matches!(
            big.enumerate_up_sets(),
            Err(Error::TooLarge { size: 17, max: 16 })
        ));
    }

    #[test]
    fn enumeration_counts() {
        for n in 1..=8 {
            assert_eq!(FinitePreorder::chain(n).unwrap().enumerate_up_sets().unwrap().len(), n + 1);
            assert_eq!(
                FinitePreorder::antichain(n).unwrap().enumerate_up_sets().unwrap().len(),
                1 << n
            );
        }
    }

    #[test]
    fn enumeration_matches_filter() {
        let d = FinitePreorder::diamond();
        let fam = d.enumerate_up_sets().unwrap();
        let filtered: Vec<Subset> = all_subsets(&d)
            .filter(|s| up_closure_oracle(&d, s) == *s)
            .collect();
        assert_eq!(fam.len(), filtered.len());
        assert!(filtered.iter().all(|s| fam.contains(s)));
    }

    #[test]
    fn increasing_examples() {
        let chain = FinitePreorder::chain(3).unwrap();
        assert!(chain.is_increasing(&[0.0, 1.0, 2.0]));
        assert!(!chain.is_increasing(&[1.0, 0.0, 2.0]));
        assert!(chain.is_increasing(&[f64::NEG_INFINITY, f64::NEG_INFINITY, 0.0]));
        let anti = FinitePreorder::antichain(3).unwrap();
        assert!(anti.is_increasing(&[5.0, -3.0, 1.0]));
    }

    #[test]
    fn envelope_examples() {
        let chain = FinitePreorder::chain(3).unwrap();
        assert_eq!(chain.increasing_envelope(&[5.0, 1.0, 3.0]).unwrap(), [1.0, 1.0, 3.0]);
        assert_eq!(chain.increasing_envelope(&[0.0, 1.0, 2.0]).unwrap(), [0.0, 1.0, 2.0]);
        let anti = FinitePreorder::antichain(2).unwrap();
        assert_eq!(anti.increasing_envelope(&[7.0, 2.0]).unwrap(), [7.0, 2.0]);
    }

    #[test]
    fn relation_validation() {
        let bad = vec![vec![true, true, false], vec![false, true, true], vec![false, false, true]];
        assert!(matches!(FinitePreorder::from_relation(&bad), Err(Error::NotPreorder(_))));
        let irreflexive = vec![vec![false]];
        assert!(FinitePreorder::from_relation(&irreflexive).is_err());
        let ok = vec![vec![true, true], vec![true, true]];
        let p = FinitePreorder::from_relation(&ok).unwrap();
        assert!(p.leq(1, 0) && p.leq(0, 1));
    }

    #[test]
    fn text_format() {
        let p = FinitePreorder::parse("4\n# diamond\n0 <= 1\n0 <= 2\n1 <= 3\n2 <= 3\n").unwrap();
        assert_eq!(p, FinitePreorder::diamond());
        assert!(p.leq(0, 3));
        assert_eq!(FinitePreorder::parse(&p.to_text()).unwrap(), p);
        assert!(FinitePreorder::parse("").is_err());
        assert!(FinitePreorder::parse("3\n0 < 1\n").is_err());
        assert!(FinitePreorder::parse("3\n0 <= 5\n").is_err());
        assert!(FinitePreorder::parse("x\n").is_err());
    }

    #[test]
    fn membership_strings() {
        let s = Subset::parse_membership("0110").unwrap();
        assert_eq!(s.members().collect::<Vec<_>>(), [1, 2]);
        assert_eq!(s.membership_string(), "0110");
        assert!(Subset::parse_membership("01x").is_err());
    }
}
