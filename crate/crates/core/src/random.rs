//! Seeded random formulas and subsets for property tests and benchmarks.

use rand::Rng;

use crate::formula::Formula;
use crate::party::{PartySet, Universe};

/// A random formula over at most `max_parties` parties named `p0..`, with
/// operators nested at most `max_depth` deep. Literals may repeat across
/// subtrees, and all three operator kinds appear.
pub fn random_formula(rng: &mut impl Rng, max_parties: usize, max_depth: usize) -> Formula {
    assert!(max_parties >= 1);
    let pool = rng.gen_range(1..=max_parties);
    loop {
        let f = random_node(rng, pool, max_depth, true);
        if f.parties().len() <= max_parties {
            return f;
        }
    }
}

fn random_node(rng: &mut impl Rng, pool: usize, depth: usize, root: bool) -> Formula {
    let leaf = depth == 0 || (!root && rng.gen_bool(0.45));
    if leaf {
        return Formula::literal(format!("p{}", rng.gen_range(0..pool)));
    }
    let arity = rng.gen_range(1..=4);
    let of: Vec<Formula> = (0..arity)
        .map(|_| random_node(rng, pool, depth - 1, false))
        .collect();
    match rng.gen_range(0..6) {
        0 => Formula::And(of),
        1 => Formula::Or(of),
        _ => {
            let k = rng.gen_range(1..=of.len());
            Formula::Threshold { k, of }
        }
    }
}

/// A uniformly random subset of the universe.
pub fn random_subset(rng: &mut impl Rng, universe: &Universe) -> PartySet {
    let bits: u128 = rng.gen();
    PartySet::from_bits(bits).intersection(universe.full())
}
