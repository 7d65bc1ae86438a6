use offload_core::milp::{build_model, linearize_product, LinearRow, Sense, Var};
use offload_core::{ObjectiveWeights, SlotDuration, Task, TaskSet};

const X: Var = Var::Assign { task: 0, cpu: 1 };
const WAIT: Var = Var::Wait { task: 0 };
const A: Var = Var::WaitProduct { task: 0, cpu: 1 };

type Row = LinearRow;

/// Integer values of `product` in `[lo, hi]` that satisfy every row.
fn feasible_products(rows: &[Row], x: i64, w: i64, lo: i64, hi: i64) -> Vec<i64> {
    (lo..=hi)
        .filter(|&a| {
            rows.iter().all(|(terms, sense, rhs)| {
                let lhs: i64 = terms
                    .iter()
                    .map(|&(v, c)| {
                        let val = if v == X {
                            x
                        } else if v == WAIT {
                            w
                        } else {
                            a
                        };
                        c as i64 * val
                    })
                    .sum();
                match sense {
                    Sense::Le => lhs <= *rhs as i64,
                    Sense::Ge => lhs >= *rhs as i64,
                    Sense::Eq => lhs == *rhs as i64,
                }
            })
        })
        .collect()
}

#[test]
fn wait_product_is_exact_at_integer_points() {
    for bound in 0..=20i64 {
        let rows = linearize_product(X, WAIT, A, bound as f64);
        for x in 0..=1 {
            for w in 0..=bound {
                // A is declared non-negative; its upper bound is left open here
                assert_eq!(feasible_products(&rows, x, w, 0, bound + 3), vec![x * w], "W={bound} x={x} w={w}");
            }
        }
    }
}

#[test]
fn occupancy_product_is_exact() {
    let m = Var::Occupy { task: 0, slot: 0, cpu: 1 };
    let t = Var::OccupyProduct { task: 0, slot: 0, cpu: 1 };
    let rows = linearize_product(X, m, t, 1.0);
    for x in 0..=1 {
        for occ in 0..=1 {
            let ok: Vec<i64> = (0..=1)
                .filter(|&tv| {
                    rows.iter().all(|(terms, _, rhs)| {
                        let lhs: i64 = terms
                            .iter()
                            .map(|&(v, c)| {
                                c as i64
                                    * if v == X {
                                        x
                                    } else if v == m {
                                        occ
                                    } else {
                                        tv
                                    }
                            })
                            .sum();
                        lhs <= *rhs as i64
                    })
                })
                .collect();
            assert_eq!(ok, vec![x * occ]);
        }
    }
}

/// The unscaled rows `A - x <= 0`, `A - w <= 0`, `x + w - A <= W` cap `A` at 1.
#[test]
fn unscaled_rows_are_not_exact() {
    let rows: Vec<Row> = vec![
        (vec![(A, 1.0), (X, -1.0)], Sense::Le, 0.0),
        (vec![(A, 1.0), (WAIT, -1.0)], Sense::Le, 0.0),
        (vec![(X, 1.0), (WAIT, 1.0), (A, -1.0)], Sense::Le, 5.0),
    ];
    assert!(!feasible_products(&rows, 1, 4, 0, 5).contains(&4));
    assert_eq!(feasible_products(&rows, 1, 1, 0, 5), vec![0, 1]);
}

#[test]
fn model_uses_the_exact_rows() {
    let task = Task { id: 7, user_id: 0, arrival: 1, proc_time: 2, deadline: 9 };
    let tasks = TaskSet::new(vec![task], SlotDuration::MILLISECOND).unwrap();
    let model = build_model(&tasks, 1, ObjectiveWeights::default()).unwrap();
    let mut rows = Vec::new();
    model.for_each_constraint(|c| {
        if c.name.starts_with("linA") {
            rows.push((c.terms, c.sense, c.rhs));
        }
    });
    let expected: Vec<Row> = linearize_product(X, WAIT, A, 6.0).into_iter().collect();
    assert_eq!(rows, expected);
    assert_eq!(model.var_bounds(A), (0.0, 6.0));
    assert_eq!(model.var_bounds(WAIT), (0.0, 6.0));
}
