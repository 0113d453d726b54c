// SVG figures: the Ω-measures with decision boundaries, and a c.d.f.

use fairbary::classifier::kappa_interval;
use fairbary::files::InstanceSummary;
use fairbary::instance::gen_example;
use fairbary::plot::{boundary_svg, cdf_svg, omega_svg, BoundaryLine};
use fairbary::regression::solve_fair_regression;

pub fn run_example() -> fairbary::Result<()> {
    let dir = std::env::temp_dir().join("fairbary-figures");
    std::fs::create_dir_all(&dir)?;

    let inst = gen_example(2, 60)?;
    let summary = InstanceSummary::of(&inst);
    let lines: Vec<BoundaryLine> = [-3.0, 0.0]
        .iter()
        .map(|&y| BoundaryLine {
            y,
            kappa_unscaled: inst.kappa_unscaled(kappa_interval(&inst, y).kappa_plus),
        })
        .collect();

    let sol = solve_fair_regression(&inst)?;
    for (name, svg) in [
        ("omega.svg", omega_svg(&summary)),
        ("boundary.svg", boundary_svg(&summary, &lines, &[])),
        (
            "barycenter.svg",
            cdf_svg(&sol.barycenter, "fair prediction law"),
        ),
    ] {
        let path = dir.join(name);
        std::fs::write(&path, svg)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() {
    run_example().expect("plot example");
}
