// Exact discrete optimal transport, checked against enumeration.

use fairbary::transport::{brute_force_ot, cost_pair, solve_ot, CostMatrix, OmegaPoint};

pub fn run_example() -> fairbary::Result<()> {
    let plus = [
        OmegaPoint::new(0.2, 1.0),
        OmegaPoint::new(0.7, 0.5),
        OmegaPoint::new(1.4, 2.0),
    ];
    let minus = [
        OmegaPoint::new(-0.9, -1.0),
        OmegaPoint::new(-0.1, -0.4),
        OmegaPoint::new(0.5, -1.5),
    ];
    let cost = CostMatrix::from_fn(3, 3, |i, j| {
        cost_pair(plus[i], minus[j]).expect("d is nonzero")
    })?;
    let w = [1.0 / 3.0; 3];

    let plan = solve_ot(&w, &w, &cost)?;
    let check = brute_force_ot(&w, &w, &cost)?;
    println!("simplex cost     {:.12}", plan.cost);
    println!("brute force cost {:.12}", check.cost);
    for (i, j, m) in plan.coupling.nonzeros() {
        println!("  plus {i} -> minus {j}: {m:.4}");
    }
    assert!((plan.cost - check.cost).abs() <= 1e-12);

    // Unequal supports go through the same solver.
    let wide = CostMatrix::new(2, 3, vec![1.0, 2.0, 4.0, 3.0, 1.0, 0.5])?;
    let plan = solve_ot(&[0.5, 0.5], &[0.2, 0.3, 0.5], &wide)?;
    println!("2x3 cost {:.4}", plan.cost);
    Ok(())
}

fn main() {
    run_example().expect("transport example");
}
