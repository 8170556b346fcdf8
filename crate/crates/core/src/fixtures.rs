//! Small named concentrations that recur in tests and documentation.

use crate::concentration::{Capacity, Concentration};
use crate::ext::ExtReal;
use crate::preorder::FinitePreorder;

/// Chain `0 <= 1 <= 2` with `J: {} -> -inf, {2} -> -2, {1,2} -> -1, E -> 0`.
///
/// Weakly maxitive, minimal rate `(0, 1, 2)`.
pub fn chain_example() -> Concentration {
    let chain = FinitePreorder::chain(3).expect("static poset");
    Concentration::new(
        chain,
        vec![ExtReal::NEG_INF, ExtReal::of(-2.0), ExtReal::of(-1.0), ExtReal::ZERO],
    )
    .expect("static concentration")
}

/// V-shaped poset `o <= a, o <= b` with `J({a}) = J({b}) = -2`, `J({a,b}) = -1`.
///
/// Not weakly maxitive: `{a,b}` is covered by `{a}` and `{b}`.
pub fn v_violation() -> Concentration {
    Concentration::new(
        FinitePreorder::v_shape(),
        vec![
            ExtReal::NEG_INF,
            ExtReal::of(-2.0),
            ExtReal::of(-2.0),
            ExtReal::of(-1.0),
            ExtReal::ZERO,
        ],
    )
    .expect("static concentration")
}

/// V-shaped poset with `Pi: {a} -> 0.3, {b} -> 0.5, {a,b} -> 0.6, E -> 1`.
pub fn v_capacity() -> Capacity {
    Capacity::new(FinitePreorder::v_shape(), &[0.0, 0.3, 0.5, 0.6, 1.0]).expect("static capacity")
}
