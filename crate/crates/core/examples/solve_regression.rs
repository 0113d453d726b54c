// Optimal fair regression through the barycenter of the two Ω-measures.

use fairbary::instance::{gen_example, Side};
use fairbary::regression::{barycenter_objective, risk_report, solve_fair_regression, Rule};

pub fn run_example() -> fairbary::Result<()> {
    let inst = gen_example(1, 50)?;
    let sol = solve_fair_regression(&inst)?;
    println!("OT value (minimal excess risk) {:.6}", sol.ot_value());
    println!(
        "randomized rule:    risk {:.6}, parity gap {:.2e}",
        sol.excess_risk_randomized, sol.parity_gap_randomized
    );
    println!(
        "deterministic rule: risk {:.6}, parity gap {:.2e}",
        sol.excess_risk_deterministic, sol.parity_gap_deterministic
    );
    println!(
        "barycenter objective at the solution {:.6}",
        barycenter_objective(&inst, &sol.barycenter)?
    );

    for (a, f) in inst.atoms.iter().zip(&sol.f_det).step_by(20) {
        let side = if a.side == Side::Plus { "+" } else { "-" };
        println!("  {side} eta {:+.3} -> f {:+.3}", a.eta, f);
    }

    let bayes = risk_report(&inst, &Rule::bayes(&inst))?;
    println!(
        "Bayes rule: risk {:.3}, parity gap {:.3}",
        bayes.excess_risk, bayes.parity_gap
    );
    Ok(())
}

fn main() {
    run_example().expect("regression example");
}
