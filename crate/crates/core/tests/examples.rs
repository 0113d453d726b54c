macro_rules! example {
    ($name:ident, $file:literal) => {
        #[allow(dead_code)]
        mod $name {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }
    };
}

example!(transport_solver, "transport_solver.rs");
example!(instance_files, "instance_files.rs");
example!(solve_regression, "solve_regression.rs");
example!(classify_threshold, "classify_threshold.rs");
example!(nestedness_scan, "nestedness_scan.rs");
example!(awareness_rule, "awareness_rule.rs");
example!(audit_rules, "audit_rules.rs");
example!(plot_figures, "plot_figures.rs");

#[test]
fn transport_example_runs() {
    transport_solver::run_example().expect("transport example should run");
}

#[test]
fn instance_example_runs() {
    instance_files::run_example().expect("instance example should run");
}

#[test]
fn regression_example_runs() {
    solve_regression::run_example().expect("regression example should run");
}

#[test]
fn classifier_example_runs() {
    classify_threshold::run_example().expect("classifier example should run");
}

#[test]
fn nestedness_example_runs() {
    nestedness_scan::run_example().expect("nestedness example should run");
}

#[test]
fn awareness_example_runs() {
    awareness_rule::run_example().expect("awareness example should run");
}

#[test]
fn audit_example_runs() {
    audit_rules::run_example().expect("audit example should run");
}

#[test]
fn plot_example_runs() {
    plot_figures::run_example().expect("plot example should run");
}
