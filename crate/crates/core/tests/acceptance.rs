//! One line per acceptance criterion. Run with
//! `cargo test -p mdsw-core --test acceptance -- --nocapture`.

mod common;

use common::Check;

type Criterion = (&'static str, fn() -> Check);

#[test]
fn acceptance() {
    let criteria: [Criterion; 6] = [
        ("corpus verdicts", common::check_corpus),
        ("rule 11 truth table", common::check_rule11),
        ("oracle equivalence", common::check_oracle),
        ("intention properties", || {
            common::check_intention_properties(2000, 0x1d)
        }),
        ("dsl round-trip", || common::check_dsl(100, 0x5eed)),
        ("session replay", common::check_session_replay),
    ];
    println!();
    let mut failed = Vec::new();
    for (name, check) in criteria {
        match check() {
            Ok(summary) => println!("PASS {name}: {summary}"),
            Err(reason) => {
                println!("FAIL {name}: {reason}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
