//! Exact rational operator identities on random and fixed Δ fixtures.

use edgeworth_tv::exactmath::CoeffTables;
use edgeworth_tv::moments::MomentTable;
use edgeworth_tv::opalg::{a_op, psi_k_closed_form, psi_k_families, t_op, t_op_by_summation, AMode, DiffOperator};
use edgeworth_tv::scalar::{rat, rint, Rational};
use proptest::prelude::*;

fn planar(seed: i64) -> MomentTable<Rational> {
    MomentTable::from_fn(2, 10, |alpha| {
        let c = alpha.counts(2);
        let (a, b) = (c[0] as i64, c[1] as i64);
        if a + b < 3 {
            rint(0)
        } else {
            rat((seed * a - b * b + 3) % 11, 1 + a + b)
        }
    })
}

#[test]
fn a_modes_agree_on_planar_fixture() {
    let table = planar(5);
    for i in 1..=3 {
        for t in 0..=9 {
            assert_eq!(a_op(&table, i, t, AMode::Recursive), a_op(&table, i, t, AMode::Direct), "i={i} t={t}");
        }
    }
}

#[test]
fn t_is_sum_of_psik_and_of_p_weighted_a() {
    let table = planar(3);
    let families = psi_k_families(&table, 12, 9);
    let mut coeffs = CoeffTables::new();
    for t in 0..=9 {
        for n in 1..=12 {
            let summed = families[..n].iter().fold(DiffOperator::zero(2), |acc, f| acc.add(&f[t]));
            let mut via_a = DiffOperator::zero(2);
            for i in 1..=t / 3 {
                via_a = via_a.add(&a_op(&table, i, t, AMode::Recursive).scale(&coeffs.p_value(i, n)));
            }
            assert_eq!(summed, t_op_by_summation(&table, n, t));
            assert_eq!(summed, via_a, "n={n} t={t}");
            assert_eq!(t_op(&table, n, t), via_a);
        }
    }
}

fn arb_table() -> impl Strategy<Value = MomentTable<Rational>> {
    prop::collection::vec((-9i64..=9, 1i64..=7), 7).prop_map(|v| {
        let d: Vec<Rational> = v.into_iter().map(|(p, q)| rat(p, q)).collect();
        MomentTable::univariate(&d)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn psik_closed_form_on_random_rational_tables(table in arb_table(), k in 1usize..=8) {
        let fam = psi_k_families(&table, k, 9).pop().unwrap();
        for (t, op) in fam.iter().enumerate() {
            prop_assert_eq!(op, &psi_k_closed_form(&table, k, t));
        }
    }

    #[test]
    fn a_modes_agree_on_random_tables(table in arb_table()) {
        for i in 1..=3 {
            for t in 0..=9 {
                prop_assert_eq!(a_op(&table, i, t, AMode::Recursive), a_op(&table, i, t, AMode::Direct));
            }
        }
    }
}
