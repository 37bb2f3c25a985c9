//! Randomized invariant checks, 500 cases per property with a fixed generator seed.

mod common;

use common::props::{self, config};
use proptest::prelude::*;

proptest! {
    #![proptest_config(config())]

    #[test]
    fn operator_axioms(seed in any::<u64>(), n in 1usize..7, lambda in 0.01f64..10.0) {
        props::operator_axioms(seed, n, lambda)?;
    }

    #[test]
    fn monotone_and_non_expansive(seed in any::<u64>(), n in 1usize..7) {
        props::monotone_and_non_expansive(seed, n)?;
    }

    #[test]
    fn conjugacy_and_attainment(seed in any::<u64>(), n in 1usize..7) {
        props::conjugacy_and_attainment(seed, n)?;
    }

    #[test]
    fn split_identity(seed in any::<u64>(), n in 2usize..9) {
        props::split_identity(seed, n)?;
    }

    #[test]
    fn substochastic_powers_and_contraction_onset(seed in any::<u64>(), n in 2usize..8) {
        props::substochastic_powers_and_contraction_onset(seed, n)?;
    }

    #[test]
    fn restriction_laws(seed in any::<u64>(), n in 1usize..9) {
        props::restriction_laws(seed, n)?;
    }

    #[test]
    fn reachability_matches_closure(seed in any::<u64>(), n in 1usize..9) {
        props::reachability_matches_closure(seed, n)?;
    }

    #[test]
    fn precise_hitting_is_a_fixed_point(seed in any::<u64>(), n in 1usize..9) {
        props::precise_hitting_is_a_fixed_point(seed, n)?;
    }

    #[test]
    fn monotone_path_certificates(seed in any::<u64>(), n in 2usize..9) {
        props::monotone_path_certificates(seed, n)?;
    }

    #[test]
    fn solver_traces_are_monotone(seed in any::<u64>(), n in 2usize..8) {
        props::solver_traces_are_monotone(seed, n)?;
    }

    #[test]
    fn zero_sets_and_vertex_oracles(seed in any::<u64>(), n in 2usize..6) {
        props::zero_sets_and_vertex_oracles(seed, n)?;
    }

    #[test]
    fn reachability_implication_chain(seed in any::<u64>(), n in 2usize..6) {
        props::reachability_implication_chain(seed, n)?;
    }

    #[test]
    fn closed_targets_make_criteria_coincide(seed in any::<u64>(), n in 2usize..6) {
        props::closed_targets_make_criteria_coincide(seed, n)?;
    }
}
