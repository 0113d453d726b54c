// Optimal fair threshold classifiers and the slope interval at a level y.

use fairbary::classifier::{kappa_interval, lp_oracle, optimal_fair_classifier, parity_function};
use fairbary::instance::gen_example;

pub fn run_example() -> fairbary::Result<()> {
    let inst = gen_example(2, 50)?;
    for y in [-3.0, 0.0, 1.0] {
        let iv = kappa_interval(&inst, y);
        let g = optimal_fair_classifier(&inst, y);
        println!(
            "y = {y:+.1}: kappa in [{:.4}, {:.4}] (unscaled), chosen {:.4}, parity gap {:.1e} (deterministic {:.1e})",
            inst.kappa_unscaled(iv.kappa_minus),
            inst.kappa_unscaled(iv.kappa_plus),
            inst.kappa_unscaled(g.kappa),
            g.parity_gap,
            g.parity_gap_deterministic,
        );
        println!(
            "  G just below and above: {:+.4} {:+.4}",
            parity_function(&inst, iv.kappa_minus - 0.01, y),
            parity_function(&inst, iv.kappa_plus + 0.01, y)
        );

        let lp = lp_oracle(&inst, y)?;
        println!(
            "  surrogate risk {:.6}, LP optimum {:.6}",
            g.surrogate_risk, lp.optimal_risk
        );
    }
    Ok(())
}

fn main() {
    run_example().expect("classifier example");
}
