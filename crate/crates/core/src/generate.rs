//! Random finite preorders, concentrations and test functions.
//!
//! Values are drawn from small half-integer grids so ties and `-inf` plateaus
//! show up often.

use rand::Rng;

use crate::concentration::{Concentration, IncreasingFn, RateFunction};
use crate::ext::ExtReal;
use crate::preorder::{FinitePreorder, Subset};

/// Random preorder on `n` points: each ordered pair `(x, y)` is an edge with
/// probability `density`, then closed reflexively and transitively. Cycles are
/// allowed, so the result need not be antisymmetric.
pub fn random_preorder<R: Rng + ?Sized>(rng: &mut R, n: usize, density: f64) -> FinitePreorder {
    let mut edges = Vec::new();
    for x in 0..n {
        for y in 0..n {
            if x != y && rng.random_bool(density) {
                edges.push((x, y));
            }
        }
    }
    FinitePreorder::from_edges(n, &edges).expect("size within limits")
}

/// Rate with values in `{0, 0.5, .., 4, inf}` and at least one zero.
pub fn random_rate<R: Rng + ?Sized>(rng: &mut R, n: usize) -> RateFunction {
    let mut values: Vec<f64> = (0..n)
        .map(|_| {
            if rng.random_bool(0.1) {
                f64::INFINITY
            } else {
                0.5 * rng.random_range(0..=8) as f64
            }
        })
        .collect();
    if n > 0 {
        values[rng.random_range(0..n)] = 0.0;
    }
    RateFunction::new(values).expect("nonnegative")
}

/// Weakly maxitive concentration `J_A = -min_A I` for a random rate.
pub fn random_maxitive<R: Rng + ?Sized>(rng: &mut R, space: &FinitePreorder) -> Concentration {
    let rate = random_rate(rng, space.size());
    Concentration::from_rate(space.clone(), &rate).expect("rate has a zero")
}

/// General monotone concentration: a random seed value per up-set, closed
/// under `J_A = max_{B subset of A} seed_B`. Usually not weakly maxitive.
pub fn random_concentration<R: Rng + ?Sized>(rng: &mut R, space: &FinitePreorder) -> Concentration {
    let family = space.enumerate_up_sets().expect("small space");
    let seeds: Vec<(Subset, ExtReal)> = family
        .iter()
        .map(|a| {
            let v = if a.is_empty() || rng.random_bool(0.15) {
                ExtReal::NEG_INF
            } else {
                ExtReal::of(-0.5 * rng.random_range(0..=8) as f64)
            };
            (*a, v)
        })
        .collect();
    Concentration::from_fn(space.clone(), |a| {
        if a.is_empty() {
            return ExtReal::NEG_INF;
        }
        if a.is_full() {
            return ExtReal::ZERO;
        }
        seeds
            .iter()
            .filter(|(b, _)| b.is_subset_of(a))
            .map(|(_, v)| *v)
            .max()
            .unwrap_or(ExtReal::NEG_INF)
    })
    .expect("monotone by construction")
}

/// Random increasing function: raw values (some `-inf`) pushed through the
/// increasing envelope. One in four draws is a two-level step on a random
/// up-set instead, with the lower level `-inf` half of the time.
pub fn random_increasing<R: Rng + ?Sized>(rng: &mut R, space: &FinitePreorder) -> IncreasingFn {
    let n = space.size();
    if rng.random_bool(0.25) {
        let family = space.enumerate_up_sets().expect("small space");
        let a = family.sets()[rng.random_range(0..family.len())];
        let on = 0.5 * rng.random_range(-6..=6) as f64;
        let off = if rng.random_bool(0.5) {
            f64::NEG_INFINITY
        } else {
            on - 0.5 * rng.random_range(0..=6) as f64
        };
        return IncreasingFn::step(space, &a, on, off).expect("step is increasing");
    }
    let raw: Vec<f64> = (0..n)
        .map(|_| {
            if rng.random_bool(0.1) {
                f64::NEG_INFINITY
            } else {
                0.5 * rng.random_range(-8..=8) as f64
            }
        })
        .collect();
    let env = space.increasing_envelope(&raw).expect("sizes match");
    IncreasingFn::new(space, env).expect("envelope is increasing")
}

/// Random increasing function with all values finite and inside `(lo, hi)`.
pub fn random_bounded_increasing<R: Rng + ?Sized>(
    rng: &mut R,
    space: &FinitePreorder,
    lo: f64,
    hi: f64,
) -> IncreasingFn {
    let raw: Vec<f64> = (0..space.size())
        .map(|_| {
            let t: f64 = rng.random_range(0.01..0.99);
            lo + t * (hi - lo)
        })
        .collect();
    let env = space.increasing_envelope(&raw).expect("sizes match");
    IncreasingFn::new(space, env).expect("envelope is increasing")
}
