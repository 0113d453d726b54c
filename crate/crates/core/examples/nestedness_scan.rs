// Nestedness scans, the regression rule read off nested classifiers, and
// what goes wrong when the family is not nested.

use fairbary::instance::gen_example;
use fairbary::nestedness::{
    check_nested, equivalence_check, potential_diagnostic, regression_from_classifiers, Grid,
};
use fairbary::regression::solve_fair_regression;

pub fn run_example() -> fairbary::Result<()> {
    let one = gen_example(1, 100)?;
    let grid = Grid::parse("-2:3:0.01")?;
    let report = check_nested(&one, &grid);
    println!(
        "example 1: {:?}, violating mass {}",
        report.verdict, report.violating_mass
    );

    let cr = regression_from_classifiers(&one, &report)?;
    let sol = solve_fair_regression(&one)?;
    println!(
        "  f* excess risk {:.4} vs OT value {:.4}",
        cr.excess_risk,
        sol.ot_value()
    );
    let pot = potential_diagnostic(&one, &report, &sol)?;
    println!(
        "  potential duality gaps {:.1e} / {:.1e}",
        pot.duality_gap_plus, pot.duality_gap_minus
    );

    let two = gen_example(2, 100)?;
    let grid = Grid::parse("-7:3:0.01")?;
    let report = check_nested(&two, &grid);
    println!(
        "example 2: {:?}, violating mass on the plus side {:.3}",
        report.verdict, report.violating_mass_plus
    );
    if let Some(v) = report.violations.first() {
        println!(
            "  e.g. point {} (eta {:.3}) rejected at y = {:.2}, accepted at y = {:.2}",
            v.id.as_str(),
            v.eta,
            v.y,
            v.y_prime
        );
    }
    let sol = solve_fair_regression(&two)?;
    let eq = equivalence_check(&two, &grid, &sol)?;
    if let Some(s) = eq.suboptimality {
        println!("  thresholding the transport rule at y = {:.2} loses {:.4} against the optimal classifier", s.y, s.margin);
    }
    Ok(())
}

fn main() {
    run_example().expect("nestedness example");
}
