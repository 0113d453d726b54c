//! Seeded instance generators shared by the integration and acceptance tests.
#![allow(dead_code)]

use fairbary::instance::{
    derive, instantiate, DScale, FairInstance, OmegaAtom, OmegaSpec, RawInstance, Record,
};
use fairbary::transport::{cost_pair, CostMatrix, OmegaPoint};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn omega_side(rng: &mut ChaCha8Rng, n: usize, sign: f64) -> Vec<OmegaAtom> {
    let raw: Vec<(f64, f64, f64)> = (0..n)
        .map(|_| {
            (
                rng.gen_range(-2.0..2.0),
                sign * rng.gen_range(0.2..2.0),
                rng.gen_range(0.05..1.0),
            )
        })
        .collect();
    let total: f64 = raw.iter().map(|a| a.2).sum();
    raw.into_iter()
        .map(|(h, d, w)| OmegaAtom::new(h, d, w / total))
        .collect()
}

/// Random Ω-spec with up to `max_atoms` atoms per side and automatic scale.
pub fn omega_spec(rng: &mut ChaCha8Rng, max_atoms: usize) -> OmegaSpec {
    let (np, nm) = (rng.gen_range(1..=max_atoms), rng.gen_range(1..=max_atoms));
    let plus = omega_side(rng, np, 1.0);
    let minus = omega_side(rng, nm, -1.0);
    OmegaSpec::new(plus, minus, DScale::Auto)
}

pub fn omega_instance(rng: &mut ChaCha8Rng, max_atoms: usize) -> FairInstance {
    instantiate(&omega_spec(rng, max_atoms)).expect("random Ω-spec is valid")
}

/// Every point in both groups with random weights and labels in `[0, 1]`.
/// Retries until the groups differ, so η is not already fair.
pub fn overlapping_instance(rng: &mut ChaCha8Rng, n: usize) -> FairInstance {
    loop {
        let mut recs = Vec::new();
        let mut total = 0.0;
        let mut raw = Vec::new();
        for k in 0..n {
            let (w1, w2): (f64, f64) = (rng.gen_range(0.05..1.0), rng.gen_range(0.05..1.0));
            let (y1, y2): (f64, f64) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
            total += w1 + w2;
            raw.push((format!("x{k}"), w1, w2, y1, y2));
        }
        for (x, w1, w2, y1, y2) in raw {
            recs.push(Record::new(x.clone(), 1, y1, w1 / total));
            recs.push(Record::new(x, 2, y2, w2 / total));
        }
        if let Ok(inst) = derive(&RawInstance::new(recs)) {
            return inst;
        }
    }
}

/// Overlapping instance with binary labels: each point carries a label-1 and
/// a label-0 record per group, with rates on a coarse grid so ties occur.
pub fn binary_instance(rng: &mut ChaCha8Rng, n: usize) -> FairInstance {
    loop {
        let mut parts = Vec::new();
        let mut total = 0.0;
        for k in 0..n {
            let (w1, w2): (f64, f64) = (rng.gen_range(0.05..1.0), rng.gen_range(0.05..1.0));
            let (r1, r2) = (
                rng.gen_range(0..=8) as f64 / 8.0,
                rng.gen_range(0..=8) as f64 / 8.0,
            );
            total += w1 + w2;
            parts.push((format!("x{k}"), w1, w2, r1, r2));
        }
        let mut recs = Vec::new();
        for (x, w1, w2, r1, r2) in parts {
            for (s, w, r) in [(1u8, w1, r1), (2, w2, r2)] {
                if r > 0.0 {
                    recs.push(Record::new(x.clone(), s, 1.0, w * r / total));
                }
                if r < 1.0 {
                    recs.push(Record::new(x.clone(), s, 0.0, w * (1.0 - r) / total));
                }
            }
        }
        if let Ok(inst) = derive(&RawInstance::new(recs)) {
            return inst;
        }
    }
}

/// Each point belongs to one group; `n` points per group with η drawn from
/// two different shifted and stretched uniform laws.
pub fn awareness_instance(rng: &mut ChaCha8Rng, n: usize) -> FairInstance {
    let (a1, b1) = (rng.gen_range(-1.0..0.5), rng.gen_range(0.5..2.0));
    let (a2, b2) = (rng.gen_range(-0.5..1.0), rng.gen_range(0.5..2.0));
    let p1 = rng.gen_range(0.3..0.7);
    let mut recs = Vec::new();
    for k in 0..n {
        let u1: f64 = rng.gen_range(0.0..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        recs.push(Record::new(format!("a{k}"), 1, a1 + b1 * u1, p1 / n as f64));
        recs.push(Record::new(
            format!("b{k}"),
            2,
            a2 + b2 * u2 * u2,
            (1.0 - p1) / n as f64,
        ));
    }
    derive(&RawInstance::new(recs)).expect("awareness instance is valid")
}

/// Uniform-marginal transport problem of size `n` with costs of the pair form
/// `C` between random Ω-points, or arbitrary nonnegative costs.
pub fn ot_problem(
    rng: &mut ChaCha8Rng,
    n: usize,
    structured: bool,
) -> (Vec<f64>, Vec<f64>, CostMatrix) {
    let w = vec![1.0 / n as f64; n];
    let cost = if structured {
        let p: Vec<OmegaPoint> = (0..n)
            .map(|_| OmegaPoint::new(rng.gen_range(-2.0..2.0), rng.gen_range(0.2..2.0)))
            .collect();
        let m: Vec<OmegaPoint> = (0..n)
            .map(|_| OmegaPoint::new(rng.gen_range(-2.0..2.0), -rng.gen_range(0.2..2.0)))
            .collect();
        CostMatrix::from_fn(n, n, |i, j| cost_pair(p[i], m[j]).expect("nonzero d")).unwrap()
    } else {
        let entries = (0..n * n).map(|_| rng.gen_range(0.0..10.0)).collect();
        CostMatrix::new(n, n, entries).unwrap()
    };
    (w.clone(), w, cost)
}
