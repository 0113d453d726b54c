// Within-group audits: order preservation of a regression rule and envy of
// a fair classifier against the Bayes classifier.

use fairbary::audit::{audit_envy, audit_order};
use fairbary::classifier::optimal_fair_classifier;
use fairbary::instance::{derive, RawInstance, Record};
use fairbary::regression::solve_fair_regression;

pub fn run_example() -> fairbary::Result<()> {
    let n = 20;
    let mut records = Vec::new();
    for k in 0..n {
        let u = k as f64 / n as f64;
        let (tilt, eta2) = if k % 2 == 0 {
            (0.4, u)
        } else {
            (-0.3, 0.6 * u)
        };
        records.push(Record::new(
            format!("x{k}"),
            1,
            u,
            (1.0 + tilt) / (2 * n) as f64,
        ));
        records.push(Record::new(
            format!("x{k}"),
            2,
            eta2,
            (1.0 - tilt) / (2 * n) as f64,
        ));
    }
    let inst = derive(&RawInstance::new(records))?;

    let sol = solve_fair_regression(&inst)?;
    let order = audit_order(&inst, &sol.f_det)?;
    println!(
        "order preserved: {}, {} violating pairs (mass {:.4})",
        order.preserves_order, order.violating_pair_count, order.violating_pair_mass
    );
    if let Some(v) = order.violating_pairs.first() {
        println!(
            "  group {}: eta {:.3} < {:.3} but f {:.3} >= {:.3}",
            v.s, v.eta, v.eta_prime, v.f, v.f_prime
        );
    }

    for y in [0.2, 0.4, 0.6] {
        let envy = audit_envy(&inst, &optimal_fair_classifier(&inst, y))?;
        println!(
            "y = {y}: {:?}, {} witnesses",
            envy.case,
            envy.witnesses.len()
        );
    }
    Ok(())
}

fn main() {
    run_example().expect("audit example");
}
