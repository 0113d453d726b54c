// When each point belongs to one group the optimal rule averages group quantiles.

use fairbary::instance::{derive, RawInstance, Record};
use fairbary::regression::{awareness_reference, risk_report, solve_fair_regression, Rule};

pub fn run_example() -> fairbary::Result<()> {
    let n = 100;
    let mut records = Vec::new();
    for k in 0..n {
        let u = (k as f64 + 0.5) / n as f64;
        records.push(Record::new(format!("a{k}"), 1, u, 0.4 / n as f64));
        records.push(Record::new(
            format!("b{k}"),
            2,
            1.0 + 2.0 * u,
            0.6 / n as f64,
        ));
    }
    let inst = derive(&RawInstance::new(records))?;
    assert!(inst.is_awareness());

    let reference = Rule::Deterministic(awareness_reference(&inst)?);
    let sol = solve_fair_regression(&inst)?;
    let report = risk_report(&inst, &reference)?;
    println!(
        "quantile averaging: risk {:.5}, parity gap {:.1e}",
        report.excess_risk, report.parity_gap
    );
    println!("transport solver:   risk {:.5}", sol.ot_value());
    Ok(())
}

fn main() {
    run_example().expect("awareness example");
}
