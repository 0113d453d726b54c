// Building instances from labelled records or Ω-specs, and their JSON files.

use fairbary::files::InstanceFile;
use fairbary::instance::{derive, example_spec, Metadata, RawInstance, Record, Side};

pub fn run_example() -> fairbary::Result<()> {
    let raw = RawInstance::new(vec![
        Record::new("a", 1, 1.0, 0.20),
        Record::new("a", 2, 0.0, 0.10),
        Record::new("b", 1, 0.0, 0.15),
        Record::new("b", 2, 1.0, 0.25),
        Record::new("c", 1, 1.0, 0.10),
        Record::new("c", 2, 1.0, 0.20),
    ]);
    let inst = derive(&raw)?;
    println!(
        "p1 = {:.2}, p2 = {:.2}, binary labels: {}",
        inst.p1, inst.p2, inst.y_binary
    );
    for a in &inst.atoms {
        let side = match a.side {
            Side::Plus => "+",
            Side::Minus => "-",
            Side::Eq => "=",
        };
        println!(
            "  {:>2} {side} eta = {:.3} delta = {:+.3} mu = {:.2}",
            a.id.as_str(),
            a.eta,
            a.delta,
            a.mu
        );
    }

    let file = InstanceFile::raw(
        raw,
        Metadata::from([("source".to_string(), "toy".to_string())]),
    );
    let text = file.to_json()?;
    let back = InstanceFile::from_json(&text)?;
    assert_eq!(back, file);

    let spec = InstanceFile::omega(example_spec(2, 10)?, Metadata::new());
    let ex = spec.build()?;
    println!(
        "example 2 with 10 atoms per segment: {} support points, scale {:.3}",
        ex.len(),
        ex.d_scale
    );
    Ok(())
}

fn main() {
    run_example().expect("instance example");
}
