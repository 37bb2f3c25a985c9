//! Property bodies shared by the `properties` and `acceptance` targets.

use super::*;
use imc_hit::credal::{CredalRow, CredalSet};
use imc_hit::imprecise::{lower_hitting, upper_hitting, SolveOptions};
use imc_hit::markov::{
    cannot_reach_set, extend_function, reaches, restrict_function, restrict_matrix, StateSet,
    TargetSet, ValueFunction,
};
use imc_hit::precise::{hitting_probabilities, monotone_path};
use imc_hit::reachability::{
    closed_set_check, lower_reach_report, lr2_minimal_n, lr3_holds, upper_reach_report,
    DEFAULT_COMBO_LIMIT,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};
use rand::Rng;

pub type Outcome = Result<(), TestCaseError>;

pub const CASES: u32 = 500;

pub fn config() -> Config {
    Config {
        cases: CASES,
        rng_seed: RngSeed::Fixed(0x1dc_4175),
        failure_persistence: None,
        ..Config::default()
    }
}

fn instance(seed: u64, n: usize, max_vertices: usize) -> (CredalSet, TargetSet) {
    let mut r = rng(seed);
    let c = random_mixed_set(&mut r, n, max_vertices);
    let a = random_target(&mut r, n, 2);
    (c, a)
}

pub fn operator_axioms(seed: u64, n: usize, lambda: f64) -> Outcome {
    let mut r = rng(seed);
    let c = random_mixed_set(&mut r, n, 3);
    let f = random_vector(&mut r, n, 5.0);
    let g = random_vector(&mut r, n, 5.0);
    let lo = c.lower_envelope(&f).values;
    let hi = c.upper_envelope(&f, None).values;
    let (fmin, fmax) = f
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    let sum: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a + b).collect();
    let lo_g = c.lower_envelope(&g).values;
    let hi_g = c.upper_envelope(&g, None).values;
    let lo_sum = c.lower_envelope(&sum).values;
    let hi_sum = c.upper_envelope(&sum, None).values;
    let scaled: Vec<f64> = f.iter().map(|v| lambda * v).collect();
    let lo_scaled = c.lower_envelope(&scaled).values;
    for x in 0..n {
        prop_assert!(fmin - 1e-10 <= lo[x] && lo[x] <= hi[x] + 1e-10 && hi[x] <= fmax + 1e-10);
        prop_assert!(lo[x] + lo_g[x] <= lo_sum[x] + 1e-10);
        prop_assert!(hi_sum[x] <= hi[x] + hi_g[x] + 1e-10);
        prop_assert!((lo_scaled[x] - lambda * lo[x]).abs() <= 1e-10 * (1.0 + lambda));
    }
    prop_assert!(sup_dist(&lo, &enumerated_lower(&c, &f)) <= 1e-12);
    prop_assert!(sup_dist(&hi, &enumerated_upper(&c, &f)) <= 1e-12);
    Ok(())
}

pub fn monotone_and_non_expansive(seed: u64, n: usize) -> Outcome {
    let mut r = rng(seed);
    let c = random_mixed_set(&mut r, n, 3);
    let f = random_vector(&mut r, n, 3.0);
    let bump: Vec<f64> = (0..n).map(|_| r.random_range(0.0..2.0)).collect();
    let g: Vec<f64> = f.iter().zip(&bump).map(|(a, b)| a + b).collect();
    prop_assert!(c
        .lower_envelope(&f)
        .values
        .iter()
        .zip(&c.lower_envelope(&g).values)
        .all(|(a, b)| a <= &(b + 1e-12)));
    prop_assert!(c
        .upper_envelope(&f, None)
        .values
        .iter()
        .zip(&c.upper_envelope(&g, None).values)
        .all(|(a, b)| a <= &(b + 1e-12)));

    let h = random_vector(&mut r, n, 3.0);
    let dist = sup_dist(&f, &h);
    let (mut lf, mut lh, mut uf, mut uh) = (f.clone(), h.clone(), f.clone(), h.clone());
    for _ in 1..=3 {
        lf = c.lower_envelope(&lf).values;
        lh = c.lower_envelope(&lh).values;
        uf = c.upper_envelope(&uf, None).values;
        uh = c.upper_envelope(&uh, None).values;
        prop_assert!(sup_dist(&lf, &lh) <= dist + 1e-12);
        prop_assert!(sup_dist(&uf, &uh) <= dist + 1e-12);
    }
    Ok(())
}

pub fn conjugacy_and_attainment(seed: u64, n: usize) -> Outcome {
    let mut r = rng(seed);
    let c = random_mixed_set(&mut r, n, 4);
    let f = random_vector(&mut r, n, 4.0);
    let neg: Vec<f64> = f.iter().map(|v| -v).collect();
    let upper = c.upper_envelope(&f, None);
    let lower_neg = c.lower_envelope(&neg);
    for x in 0..n {
        prop_assert!((upper.values[x] + lower_neg.values[x]).abs() <= 1e-12);
    }
    let lower = c.lower_envelope(&f);
    let t_lo = c.materialize(&lower.witness).unwrap();
    let t_hi = c.materialize(&upper.witness).unwrap();
    prop_assert!(sup_dist(&t_lo.apply(&f), &lower.values) <= 1e-12);
    prop_assert!(sup_dist(&t_hi.apply(&f), &upper.values) <= 1e-12);
    Ok(())
}

pub fn split_identity(seed: u64, n: usize) -> Outcome {
    let mut r = rng(seed);
    let t = random_matrix(&mut r, n, n);
    let a = random_target(&mut r, n, 2);
    let s = StateSet::from_mask(
        (0..n)
            .map(|x| !a.contains(x) && r.random_bool(0.3))
            .collect(),
    );
    let rest = a.complement().difference(&s);
    prop_assume!(!rest.is_empty());
    let f: Vec<f64> = (0..n)
        .map(|x| {
            if a.contains(x) {
                1.0
            } else if s.contains(x) {
                0.0
            } else {
                r.random_range(0.0..1.0)
            }
        })
        .collect();
    let tf = t.apply(&f);
    let t1a = t.apply(&a.indicator());
    let restricted = restrict_matrix(&t, &rest).unwrap();
    let carrier = rest.to_vec();
    let f_rest =
        ValueFunction::new(carrier.clone(), carrier.iter().map(|&x| f[x]).collect()).unwrap();
    let applied = restricted.apply(&f_rest).unwrap();
    for (i, &x) in carrier.iter().enumerate() {
        prop_assert!((tf[x] - (applied.values()[i] + t1a[x])).abs() <= 1e-12);
    }
    Ok(())
}

pub fn substochastic_powers_and_contraction_onset(seed: u64, n: usize) -> Outcome {
    let mut r = rng(seed);
    let t = random_matrix(&mut r, n, 3);
    let a = random_target(&mut r, n, 2);
    let c_t = cannot_reach_set(&t, &a).unwrap();
    let rest = a.complement().difference(&c_t);
    prop_assume!(!rest.is_empty());
    let restricted = restrict_matrix(&t, &rest).unwrap();
    let carrier = rest.to_vec();
    let mut v = ValueFunction::new(carrier.clone(), vec![1.0; carrier.len()]).unwrap();
    let mut onset = None;
    for k in 1..=4 * n {
        v = restricted.apply(&v).unwrap();
        prop_assert!(v
            .values()
            .iter()
            .all(|&x| (-1e-15..=1.0 + 1e-12).contains(&x)));
        if onset.is_none() && v.values().iter().all(|&x| x < 1.0) {
            onset = Some(k);
        }
    }
    prop_assert!(
        onset.is_some(),
        "no strict contraction within {} steps",
        4 * n
    );
    Ok(())
}

pub fn restriction_laws(seed: u64, n: usize) -> Outcome {
    let mut r = rng(seed);
    let values = random_vector(&mut r, n, 2.0);
    let f = ValueFunction::total(values.clone());
    let subset: Vec<usize> = (0..n).filter(|_| r.random_bool(0.5)).collect();
    prop_assume!(!subset.is_empty());
    let g = restrict_function(&f, &subset).unwrap();
    prop_assert_eq!(g.carrier(), subset.as_slice());
    let back = extend_function(&g, f.carrier()).unwrap();
    for x in 0..n {
        let expected = if subset.contains(&x) { values[x] } else { 0.0 };
        prop_assert_eq!(back.get(x), Some(expected));
    }
    prop_assert_eq!(restrict_function(&back, &subset).unwrap(), g);
    let zero = f.try_sub(&f).unwrap();
    prop_assert_eq!(zero.sup_norm(), 0.0);
    Ok(())
}

pub fn reachability_matches_closure(seed: u64, n: usize) -> Outcome {
    let mut r = rng(seed);
    let t = random_matrix(&mut r, n, 3);
    let closure = reach_closure(&t);
    for x in 0..n {
        for y in 0..n {
            prop_assert_eq!(reaches(&t, x, y).unwrap(), closure[x][y]);
        }
    }
    let a = random_target(&mut r, n, 2);
    prop_assert_eq!(
        cannot_reach_set(&t, &a).unwrap(),
        cannot_reach_oracle(&t, &a)
    );
    Ok(())
}

pub fn precise_hitting_is_a_fixed_point(seed: u64, n: usize) -> Outcome {
    let mut r = rng(seed);
    let t = random_matrix(&mut r, n, 3);
    let a = random_target(&mut r, n, 2);
    let p = hitting_probabilities(&t, &a).unwrap();
    prop_assert!(p.residual(&t, &a) <= 1e-9);
    let c_t = cannot_reach_set(&t, &a).unwrap();
    for x in 0..n {
        prop_assert!((0.0..=1.0).contains(&p.get(x)));
        prop_assert_eq!(p.get(x) == 0.0, c_t.contains(x));
    }
    Ok(())
}

pub fn monotone_path_certificates(seed: u64, n: usize) -> Outcome {
    let mut r = rng(seed);
    let t = random_matrix(&mut r, n, 3);
    let a = random_target(&mut r, n, 2);
    let c_t = cannot_reach_set(&t, &a).unwrap();
    let p = hitting_probabilities(&t, &a).unwrap();
    for x in (0..n).filter(|&x| !a.contains(x) && !c_t.contains(x)) {
        let cert = monotone_path(&t, &a, x).unwrap();
        cert.validate(&t, &a).unwrap();
        prop_assert_eq!(cert.states[0], x);
        prop_assert!(a.contains(*cert.states.last().unwrap()));
        for w in cert.states.windows(2) {
            prop_assert!(p.get(w[0]) <= p.get(w[1]) + 1e-12);
        }
    }
    Ok(())
}

pub fn solver_traces_are_monotone(seed: u64, n: usize) -> Outcome {
    let (c, a) = instance(seed, n, 3);
    let opts = SolveOptions::default().with_trace();
    let bound = c.extreme_product() as usize + 1;
    let lower = lower_hitting(&c, &a, &opts).unwrap();
    let upper = upper_hitting(&c, &a, &opts).unwrap();
    for (res, sign) in [(&lower, -1.0), (&upper, 1.0)] {
        prop_assert!(res.residual <= 1e-9);
        prop_assert!(res.iterations <= bound);
        let trace = res.trace.as_ref().unwrap();
        prop_assert_eq!(trace.len(), res.iterations);
        for (i, w) in trace.windows(2).enumerate() {
            for x in 0..n {
                prop_assert!(sign * (w[1].get(x) - w[0].get(x)) >= -1e-12);
            }
            if i + 2 < trace.len() {
                prop_assert!(w[0] != w[1], "no progress before the final iteration");
            }
        }
    }
    for x in 0..n {
        prop_assert!(lower.probabilities.get(x) <= upper.probabilities.get(x) + 1e-12);
    }
    Ok(())
}

pub fn zero_sets_and_vertex_oracles(seed: u64, n: usize) -> Outcome {
    let mut r = rng(seed);
    let c = random_vertex_set(&mut r, n, 3);
    let a = random_target(&mut r, n, 2);
    let lo_report = lower_reach_report(&c, &a).unwrap();
    let up_report = upper_reach_report(&c, &a).unwrap();
    prop_assert_eq!(&lo_report.trivial_zero, &union_of_cannot_reach(&c, &a));
    prop_assert_eq!(
        &up_report.trivial_zero,
        &intersection_of_cannot_reach(&c, &a)
    );
    prop_assert_eq!(
        cannot_reach_set(&lo_report.witness, &a).unwrap(),
        lo_report.trivial_zero.clone()
    );
    prop_assert_eq!(
        cannot_reach_set(&up_report.witness, &a).unwrap(),
        up_report.trivial_zero.clone()
    );

    let opts = SolveOptions::default();
    let lower = lower_hitting(&c, &a, &opts).unwrap();
    let upper = upper_hitting(&c, &a, &opts).unwrap();
    prop_assert_eq!(
        zero_set(lower.probabilities.values(), 1e-12),
        lo_report.trivial_zero.clone()
    );
    prop_assert_eq!(
        zero_set(upper.probabilities.values(), 1e-12),
        up_report.trivial_zero.clone()
    );

    // A state is in the lower fixpoint exactly when every vertex matrix reaches A from it.
    let every_reaches = a.complement().difference(&union_of_cannot_reach(&c, &a));
    let fixpoint = lo_report.fixpoint();
    for x in 0..n {
        prop_assert_eq!(
            fixpoint.contains(x),
            a.contains(x) || every_reaches.contains(x)
        );
    }
    Ok(())
}

pub fn reachability_implication_chain(seed: u64, n: usize) -> Outcome {
    let mut r = rng(seed);
    let c = random_vertex_set(&mut r, n, 2);
    let a = random_target(&mut r, n, 2);
    let d = a.set();
    let fixpoint = lower_reach_report(&c, &a).unwrap().fixpoint().clone();
    for x in 0..n {
        let lr3 = lr3_holds(&c, d, x).unwrap();
        let lr2 = lr2_minimal_n(&c, d, x, 4 * n * n, DEFAULT_COMBO_LIMIT).unwrap();
        if lr3 {
            prop_assert!(lr2.is_some());
        }
        if lr2.is_some() {
            prop_assert!(fixpoint.contains(x));
        }
        // Positivity of the iterated lower operator, computed numerically.
        let mut g = d.indicator();
        let mut numeric = g[x] > 0.0;
        for _ in 0..(1 << n) + 1 {
            g = c.lower_envelope(&g).values;
            numeric |= g[x] > 0.0;
        }
        prop_assert_eq!(lr3, numeric);
    }
    let possible_scan = (0..n).all(|x| {
        !d.contains(x)
            || (0..n).all(|y| {
                d.contains(y)
                    || (0..c.row(x).extreme_count()).all(|i| c.row(x).extreme_point(i)[y] <= 1e-12)
            })
    });
    prop_assert_eq!(closed_set_check(&c, d), possible_scan);
    Ok(())
}

pub fn closed_targets_make_criteria_coincide(seed: u64, n: usize) -> Outcome {
    let mut r = rng(seed);
    let a = random_target(&mut r, n, 2);
    let inside = a.set().to_vec();
    // Rows in the target only move within the target.
    let base = random_vertex_set(&mut r, n, 2);
    let rows = (0..n)
        .map(|x| {
            if a.contains(x) {
                let v: Vec<Vec<f64>> = (0..r.random_range(1..3))
                    .map(|_| {
                        let w = random_row(&mut r, inside.len(), inside.len());
                        let mut row = vec![0.0; n];
                        for (k, &y) in inside.iter().enumerate() {
                            row[y] = w[k];
                        }
                        row
                    })
                    .collect();
                CredalRow::vertices(v).unwrap()
            } else {
                base.row(x).clone()
            }
        })
        .collect();
    let c = CredalSet::new(rows).unwrap();
    prop_assert!(closed_set_check(&c, a.set()));
    let fixpoint = lower_reach_report(&c, &a).unwrap().fixpoint().clone();
    for x in 0..n {
        let lr3 = lr3_holds(&c, a.set(), x).unwrap();
        let lr2 = lr2_minimal_n(&c, a.set(), x, 4 * n * n, DEFAULT_COMBO_LIMIT)
            .unwrap()
            .is_some();
        prop_assert_eq!(lr3, lr2);
        prop_assert_eq!(lr2, fixpoint.contains(x));
    }
    Ok(())
}
