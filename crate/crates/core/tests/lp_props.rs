use opf_lift::lp::format::{read_lp, write_lp};
use opf_lift::lp::{DenseSimplex, HighsSimplex, LpBackend, LpModel, LpStatus, Row, Sense, SparseSimplex};
use proptest::prelude::*;

fn lp() -> impl Strategy<Value = LpModel> {
    (1usize..7, 1usize..7).prop_flat_map(|(n, m)| {
        let vars = proptest::collection::vec((-3.0f64..3.0, 0.0f64..4.0, -5.0f64..5.0, any::<bool>()), n);
        let rows = proptest::collection::vec(
            (proptest::collection::vec(prop_oneof![Just(0.0), -5.0f64..5.0], n), 0usize..3, -4.0f64..4.0),
            m,
        );
        (vars, rows)
    })
    .prop_map(|(vars, rows)| {
        let mut lp = LpModel::new();
        for (j, (lo, width, cost, open)) in vars.into_iter().enumerate() {
            let hi = if open { f64::INFINITY } else { lo + width };
            lp.add_var(format!("x{j}"), lo, hi, cost);
        }
        for (i, (coefs, sense, rhs)) in rows.into_iter().enumerate() {
            let coefs: Vec<(usize, f64)> = coefs.into_iter().enumerate().filter(|&(_, a)| a != 0.0).collect();
            let sense = [Sense::Le, Sense::Ge, Sense::Eq][sense];
            lp.add_row(format!("r{i}"), Row::new(coefs, sense, rhs));
        }
        lp
    })
}

fn agree(a: &opf_lift::lp::LpSolution, b: &opf_lift::lp::LpSolution) -> bool {
    a.status == b.status && (a.status != LpStatus::Optimal || (a.objective - b.objective).abs() <= 1e-7 * a.objective.abs().max(1.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn backends_agree(lp in lp()) {
        let d = DenseSimplex::new().solve(&lp).unwrap();
        let h = HighsSimplex::new().solve(&lp).unwrap();
        let s = SparseSimplex::new().solve(&lp).unwrap();
        prop_assert!(agree(&d, &h), "dense {:?} {} vs highs {:?} {}", d.status, d.objective, h.status, h.objective);
        if s.status != LpStatus::Unbounded && d.status != LpStatus::Unbounded {
            prop_assert!(agree(&d, &s), "dense {:?} {} vs sparse {:?} {}", d.status, d.objective, s.status, s.objective);
        }
        if d.status == LpStatus::Optimal {
            prop_assert!(lp.max_violation(&d.x) <= 1e-7);
            let bound = lp.dual_bound(d.duals.as_ref().unwrap());
            prop_assert!((bound - d.objective).abs() <= 1e-7 * d.objective.abs().max(1.0));
        }
    }

    #[test]
    fn text_round_trip_preserves_optimum(lp in lp()) {
        let back = read_lp(&write_lp(&lp, &["random".to_string()])).unwrap();
        prop_assert_eq!(&back.names, &lp.names);
        prop_assert_eq!(back.rows.len(), lp.rows.len());
        let a = DenseSimplex::new().solve(&lp).unwrap();
        let b = DenseSimplex::new().solve(&back).unwrap();
        prop_assert!(agree(&a, &b));
    }

    #[test]
    fn warm_start_matches_cold(lp in lp(), split in 0usize..6) {
        let split = split.min(lp.rows.len());
        let mut head = lp.clone();
        head.rows.truncate(split);
        head.row_names.truncate(split);
        for backend in [&mut DenseSimplex::new() as &mut dyn LpBackend, &mut HighsSimplex::new()] {
            let first = backend.solve(&head).unwrap();
            if first.status != LpStatus::Optimal {
                continue;
            }
            let warm = backend.add_rows(&lp.rows[split..]).unwrap();
            let cold = DenseSimplex::new().solve(&lp).unwrap();
            prop_assert!(agree(&warm, &cold), "{}: warm {:?} {} vs cold {:?} {}", backend.name(), warm.status, warm.objective, cold.status, cold.objective);
        }
    }
}
