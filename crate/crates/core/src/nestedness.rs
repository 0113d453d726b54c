//! Nestedness of the optimal classifiers along a grid of thresholds, and the
//! regression rule they induce when nested.
//!
//! The slope is always `κ⁺(y)`. A point whose decision margin
//! `|η − y − κΔ|` is at most [`BOUNDARY_TOL`] at some grid value carries no
//! information there; that observation is skipped and counted.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{
    accepts, kappa_interval, optimal_fair_classifier, ratio, surrogate_risk, KappaInterval,
};
use crate::error::{Error, Result};
use crate::instance::{FairInstance, Side, SupportAtom};
use crate::measure::{PointId, RealMeasure1D};
use crate::regression::{ot_to_line, risk_report, RegressionSolution, Rule};
use crate::transport::cost_c_unchecked;

pub const BOUNDARY_TOL: f64 = 1e-9;

/// An evenly spaced grid `min, min + step, …` up to `max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Grid {
    pub fn new(min: f64, max: f64, step: f64) -> Result<Grid> {
        if !(min.is_finite() && max.is_finite() && step.is_finite()) {
            return Err(Error::EmptyGrid(format!(
                "non-finite bounds {min}:{max}:{step}"
            )));
        }
        if step <= 0.0 {
            return Err(Error::EmptyGrid(format!(
                "step must be positive, got {step}"
            )));
        }
        if max < min {
            return Err(Error::EmptyGrid(format!("max {max} is below min {min}")));
        }
        Ok(Grid { min, max, step })
    }

    /// Parses `min:max:step`.
    pub fn parse(s: &str) -> Result<Grid> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::EmptyGrid(format!(
                "expected min:max:step, got `{s}`"
            )));
        }
        let num = |p: &str| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::EmptyGrid(format!("bad number `{p}` in `{s}`")))
        };
        Grid::new(num(parts[0])?, num(parts[1])?, num(parts[2])?)
    }

    pub fn len(&self) -> usize {
        ((self.max - self.min) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len())
            .map(|k| self.min + k as f64 * self.step)
            .collect()
    }

    /// Index of the grid point nearest to `y`.
    pub fn nearest(&self, y: f64) -> usize {
        (((y - self.min) / self.step).round().max(0.0) as usize).min(self.len() - 1)
    }

    /// The same range at half the step.
    pub fn refined(&self) -> Grid {
        Grid {
            step: self.step / 2.0,
            ..*self
        }
    }

    /// A grid covering `[min η − margin, max η + margin]`.
    pub fn covering(inst: &FairInstance, margin: f64, step: f64) -> Result<Grid> {
        let (lo, hi) = eta_range(inst);
        Grid::new(lo - margin, hi + margin, step)
    }
}

fn eta_range(inst: &FairInstance) -> (f64, f64) {
    inst.atoms
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), a| {
            (lo.min(a.eta), hi.max(a.eta))
        })
}

/// Decision of `g_y^κ` at one point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Accept,
    Reject,
    Boundary,
}

/// Decision of the parity classifier at the right end of `iv`. When `κ⁺` is
/// not attained the parity set is open on the right and the decision is the
/// limit from below, so minus points exactly at `κ⁺` are rejected.
pub fn accepts_at(a: &SupportAtom, iv: &KappaInterval) -> bool {
    let (y, kappa) = (iv.y, iv.kappa_plus);
    match a.side {
        Side::Minus if !iv.plus_attained => ratio(a, y) < kappa,
        _ => accepts(a, y, kappa),
    }
}

pub fn decision(a: &SupportAtom, iv: &KappaInterval) -> Decision {
    classify_point(a.side, a.eta, a.delta, iv, accepts_at(a, iv))
}

/// [`decision`] for a point given by its coordinates.
pub fn decision_of(side: Side, eta: f64, delta: f64, iv: &KappaInterval) -> Decision {
    let r = (eta - iv.y) / delta;
    let accept = match side {
        Side::Plus => r >= iv.kappa_plus,
        Side::Minus if iv.plus_attained => r <= iv.kappa_plus,
        Side::Minus => r < iv.kappa_plus,
        Side::Eq => eta >= iv.y,
    };
    classify_point(side, eta, delta, iv, accept)
}

fn classify_point(side: Side, eta: f64, delta: f64, iv: &KappaInterval, accept: bool) -> Decision {
    let margin = match side {
        Side::Eq => eta - iv.y,
        _ => eta - iv.y - iv.kappa_plus * delta,
    };
    if margin.abs() <= BOUNDARY_TOL {
        Decision::Boundary
    } else if accept {
        Decision::Accept
    } else {
        Decision::Reject
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Nested,
    NotNested,
}

/// A point rejected at `y` and accepted again at a larger `y_prime`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub id: PointId,
    pub side: Side,
    pub eta: f64,
    pub delta: f64,
    pub y: f64,
    pub y_prime: f64,
    pub mu: f64,
    pub mu_plus: f64,
    pub mu_minus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestednessReport {
    pub grid: Grid,
    pub ys: Vec<f64>,
    pub kappa_table: Vec<KappaInterval>,
    pub verdict: Verdict,
    /// One witness per violating point: its first rejection and the last acceptance after it.
    pub violations: Vec<Violation>,
    pub violating_mass: f64,
    pub violating_mass_plus: f64,
    pub violating_mass_minus: f64,
    /// `(point, y)` observations skipped as boundary-coincident.
    pub excluded_observations: usize,
    /// Points skipped at least once.
    pub boundary_points: usize,
    /// Whether the grid reaches `margin` past the range of η on both ends.
    pub covers_support: bool,
}

impl NestednessReport {
    pub fn kappa(&self, k: usize) -> f64 {
        self.kappa_table[k].kappa_plus
    }

    /// Decision trace of one point along the grid.
    pub fn trace(&self, a: &SupportAtom) -> Vec<Decision> {
        self.kappa_table.iter().map(|iv| decision(a, iv)).collect()
    }
}

/// Points rejected at `y` and accepted at `y_prime` by the `κ⁺` classifiers,
/// boundary points excluded.
pub fn pair_violations(inst: &FairInstance, y: f64, y_prime: f64) -> Vec<usize> {
    let (k, kp) = (kappa_interval(inst, y), kappa_interval(inst, y_prime));
    (0..inst.len())
        .filter(|&i| {
            let a = &inst.atoms[i];
            decision(a, &k) == Decision::Reject && decision(a, &kp) == Decision::Accept
        })
        .collect()
}

/// Scans `grid` and tests whether every decision trace is nonincreasing.
pub fn check_nested(inst: &FairInstance, grid: &Grid) -> NestednessReport {
    let ys = grid.points();
    let kappa_table: Vec<KappaInterval> = ys.par_iter().map(|&y| kappa_interval(inst, y)).collect();

    let per_atom: Vec<(Option<(usize, usize)>, usize)> = inst
        .atoms
        .par_iter()
        .map(|a| {
            let mut first_reject = None;
            let mut witness = None;
            let mut skipped = 0;
            for (k, iv) in kappa_table.iter().enumerate() {
                match decision(a, iv) {
                    Decision::Boundary => skipped += 1,
                    Decision::Reject => {
                        first_reject.get_or_insert(k);
                    }
                    Decision::Accept => {
                        if let Some(r) = first_reject {
                            witness = Some((r, k));
                        }
                    }
                }
            }
            (witness, skipped)
        })
        .collect();

    let mut violations = Vec::new();
    let (mut excluded, mut boundary_points) = (0, 0);
    for (a, &(witness, skipped)) in inst.atoms.iter().zip(&per_atom) {
        excluded += skipped;
        boundary_points += usize::from(skipped > 0);
        if let Some((r, k)) = witness {
            violations.push(Violation {
                id: a.id.clone(),
                side: a.side,
                eta: a.eta,
                delta: a.delta,
                y: ys[r],
                y_prime: ys[k],
                mu: a.mu,
                mu_plus: a.mu_plus,
                mu_minus: a.mu_minus,
            });
        }
    }
    let (lo, hi) = eta_range(inst);
    NestednessReport {
        grid: *grid,
        verdict: if violations.is_empty() {
            Verdict::Nested
        } else {
            Verdict::NotNested
        },
        violating_mass: violations.iter().fold(0.0, |t, v| t + v.mu),
        violating_mass_plus: violations.iter().fold(0.0, |t, v| t + v.mu_plus),
        violating_mass_minus: violations.iter().fold(0.0, |t, v| t + v.mu_minus),
        violations,
        excluded_observations: excluded,
        boundary_points,
        covers_support: ys[0] < lo && *ys.last().expect("grid is never empty") > hi,
        ys,
        kappa_table,
    }
}

/// The regression rule read off nested classifiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierRegression {
    /// `sup{y : g_y(x) = 1}` to grid resolution, aligned with `inst.atoms`.
    pub f_star: Vec<f64>,
    /// Points whose flip lies outside the grid; their value is clipped to an end.
    pub clipped: usize,
    /// Law with c.d.f. `F(y) = μ₊(η < y + κ(y)Δ)` on the grid.
    pub cdf_f: RealMeasure1D,
    pub parity_gap: f64,
    pub excess_risk: f64,
}

impl ClassifierRegression {
    pub fn rule(&self) -> Rule {
        Rule::Deterministic(self.f_star.clone())
    }
}

pub fn regression_from_classifiers(
    inst: &FairInstance,
    report: &NestednessReport,
) -> Result<ClassifierRegression> {
    if report.verdict != Verdict::Nested {
        return Err(Error::NotNested);
    }
    let ys = &report.ys;
    let last = ys.len() - 1;
    let flips: Vec<(f64, bool)> = inst
        .atoms
        .par_iter()
        .map(|a| {
            if a.side == Side::Eq {
                return Ok((a.eta, false));
            }
            // boundary points are accepted under the `≥` convention
            let accepted = report.kappa_table.iter().rposition(|iv| accepts_at(a, iv));
            let trace = report.trace(a);
            match accepted {
                None => Ok((ys[0], true)),
                Some(i) if i == last => Ok((ys[last], true)),
                Some(i) => {
                    if trace[..i].contains(&Decision::Reject) && trace[i] == Decision::Accept {
                        return Err(Error::Internal(format!(
                            "decision trace of `{}` is not monotone",
                            a.id
                        )));
                    }
                    Ok((0.5 * (ys[i] + ys[i + 1]), false))
                }
            }
        })
        .collect::<Result<_>>()?;
    let f_star: Vec<f64> = flips.iter().map(|f| f.0).collect();
    let clipped = flips.iter().filter(|f| f.1).count();

    // F at each grid point, counting rejected mass; a running maximum absorbs
    // boundary ties. Mass of (y_{k−1}, y_k] is put at y_k.
    let cdf: Vec<f64> = ys
        .iter()
        .zip(&report.kappa_table)
        .map(|(_, iv)| {
            inst.side_atoms(Side::Plus)
                .filter(|a| !accepts_at(a, iv))
                .map(|a| a.mu_plus)
                .sum()
        })
        .collect();
    let mut atoms = Vec::with_capacity(ys.len() + 1);
    let mut prev = 0.0;
    for (&y, &f) in ys.iter().zip(&cdf) {
        if f > prev {
            atoms.push((y, f - prev));
            prev = f;
        }
    }
    if prev < 1.0 {
        atoms.push((ys[last], 1.0 - prev));
    }
    let cdf_f = RealMeasure1D::new(atoms)?;

    let risk = risk_report(inst, &Rule::Deterministic(f_star.clone()))?;
    Ok(ClassifierRegression {
        f_star,
        clipped,
        cdf_f,
        parity_gap: risk.parity_gap,
        excess_risk: risk.excess_risk,
    })
}

/// Where thresholding the transport-based rule loses against the optimal fair classifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Suboptimality {
    pub y: f64,
    pub margin: f64,
    pub thresholded_risk: f64,
    pub optimal_risk: f64,
    /// Parity gap of the thresholded rule, randomization included.
    pub thresholded_parity_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub nested: bool,
    /// `|excess risk of f* − OT_C(𝝁₊, 𝝁₋)|`, when nested.
    pub risk_gap: Option<f64>,
    /// Largest `W₁(f*♯μ±, ν*)`, when nested.
    pub pushforward_gap: Option<f64>,
    /// Largest loss of the thresholded transport rule over the grid, when not nested.
    pub suboptimality: Option<Suboptimality>,
}

/// Acceptance probability `ℙ(f(x) ≥ y)` of the thresholded transport rule.
pub fn thresholded_rule(inst: &FairInstance, sol: &RegressionSolution, y: f64) -> Vec<f64> {
    inst.atoms
        .iter()
        .map(|a| {
            let kernel = match (a.side, a.omega) {
                (Side::Plus, Some(i)) => &sol.kernel_plus[i],
                (Side::Minus, Some(j)) => &sol.kernel_minus[j],
                _ => return if a.eta >= y { 1.0 } else { 0.0 },
            };
            kernel
                .atoms()
                .iter()
                .filter(|v| v.0 >= y)
                .map(|v| v.1)
                .sum::<f64>()
                / kernel.total_mass()
        })
        .collect()
}

pub fn equivalence_check(
    inst: &FairInstance,
    grid: &Grid,
    sol: &RegressionSolution,
) -> Result<EquivalenceReport> {
    let report = check_nested(inst, grid);
    if report.verdict == Verdict::Nested {
        let cr = regression_from_classifiers(inst, &report)?;
        let rule = cr.rule();
        let plus = rule.pushforward(inst, |a| a.mu_plus)?;
        let minus = rule.pushforward(inst, |a| a.mu_minus)?;
        return Ok(EquivalenceReport {
            nested: true,
            risk_gap: Some((cr.excess_risk - sol.ot_value()).abs()),
            pushforward_gap: Some(
                plus.wasserstein1(&sol.barycenter)
                    .max(minus.wasserstein1(&sol.barycenter)),
            ),
            suboptimality: None,
        });
    }
    let best = report
        .ys
        .par_iter()
        .map(|&y| {
            let g = thresholded_rule(inst, sol, y);
            let optimal = optimal_fair_classifier(inst, y).surrogate_risk;
            let risk = surrogate_risk(inst, y, &g);
            Suboptimality {
                y,
                margin: risk - optimal,
                thresholded_risk: risk,
                optimal_risk: optimal,
                thresholded_parity_gap: crate::classifier::parity_gap(inst, &g),
            }
        })
        .reduce_with(|a, b| {
            if b.margin > a.margin || (b.margin == a.margin && b.y < a.y) {
                b
            } else {
                a
            }
        });
    Ok(EquivalenceReport {
        nested: false,
        risk_gap: None,
        pushforward_gap: None,
        suboptimality: best,
    })
}

/// Duality gaps of the potential `v(y) = −2∫₀^y κ(t) dt` against both Ω-measures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialDiagnostic {
    pub duality_gap_plus: f64,
    pub duality_gap_minus: f64,
    pub ot_plus: f64,
    pub ot_minus: f64,
}

/// Piecewise-linear `v` through the trapezoid values at the grid points,
/// extended linearly with the end slopes.
struct Potential {
    ys: Vec<f64>,
    values: Vec<f64>,
    slopes: (f64, f64),
}

impl Potential {
    fn new(report: &NestednessReport) -> Potential {
        let ys = report.ys.clone();
        let kappa: Vec<f64> = report.kappa_table.iter().map(|iv| iv.kappa_plus).collect();
        let mut cum = vec![0.0; ys.len()];
        for k in 1..ys.len() {
            cum[k] = cum[k - 1] - (ys[k] - ys[k - 1]) * (kappa[k] + kappa[k - 1]);
        }
        let slopes = (-2.0 * kappa[0], -2.0 * kappa[kappa.len() - 1]);
        let mut p = Potential {
            ys,
            values: cum,
            slopes,
        };
        // anchor v(0) = 0
        let zero = p.eval(0.0);
        p.values.iter_mut().for_each(|v| *v -= zero);
        p
    }

    fn eval(&self, y: f64) -> f64 {
        let n = self.ys.len();
        if y <= self.ys[0] {
            return self.values[0] + self.slopes.0 * (y - self.ys[0]);
        }
        if y >= self.ys[n - 1] {
            return self.values[n - 1] + self.slopes.1 * (y - self.ys[n - 1]);
        }
        let k = self.ys.partition_point(|&t| t <= y).clamp(1, n - 1);
        let t = (y - self.ys[k - 1]) / (self.ys[k] - self.ys[k - 1]);
        self.values[k - 1] + t * (self.values[k] - self.values[k - 1])
    }
}

pub fn potential_diagnostic(
    inst: &FairInstance,
    report: &NestednessReport,
    sol: &RegressionSolution,
) -> Result<PotentialDiagnostic> {
    if report.verdict != Verdict::Nested {
        return Err(Error::NotNested);
    }
    let v = Potential::new(report);
    let nu = &sol.barycenter;
    let v_nu: Vec<f64> = nu.atoms().iter().map(|&(y, _)| v.eval(y)).collect();
    let int_v: f64 = nu.atoms().iter().zip(&v_nu).map(|(a, vy)| a.1 * vy).sum();

    // the minus side is paired with −v
    let gap = |side: Side, sign: f64| -> Result<(f64, f64)> {
        let omega = inst.omega(side);
        let ot = ot_to_line(omega, nu)?.cost;
        // collected before summing so the total does not depend on scheduling
        let terms: Vec<f64> = omega
            .par_iter()
            .map(|x| {
                let w = nu
                    .atoms()
                    .iter()
                    .zip(&v_nu)
                    .map(|(a, vy)| sign * vy - cost_c_unchecked(x.point(), a.0))
                    .fold(f64::NEG_INFINITY, f64::max);
                x.w * w
            })
            .collect();
        let int_w: f64 = terms.iter().sum();
        Ok((ot, (ot - (sign * int_v - int_w)).abs()))
    };
    let (ot_plus, duality_gap_plus) = gap(Side::Plus, 1.0)?;
    let (ot_minus, duality_gap_minus) = gap(Side::Minus, -1.0)?;
    Ok(PotentialDiagnostic {
        duality_gap_plus,
        duality_gap_minus,
        ot_plus,
        ot_minus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{
        derive, example_spec, gen_example, instantiate, DScale, OmegaAtom, OmegaSpec, RawInstance,
        Record,
    };
    use crate::regression::{awareness_reference, solve_fair_regression};

    fn awareness(n: usize) -> FairInstance {
        // group 1 has η uniform on [0, 1], group 2 on [0.5, 2]
        let mut recs = Vec::new();
        for k in 0..n {
            let u = (k as f64 + 0.5) / n as f64;
            let p = 0.5 / n as f64;
            recs.push(Record::new(format!("a{k}"), 1, u, p));
            recs.push(Record::new(format!("b{k}"), 2, 0.5 + 1.5 * u, p));
        }
        derive(&RawInstance::new(recs)).unwrap()
    }

    #[test]
    fn grid_parsing_and_points() {
        let g = Grid::parse("-2:3:0.01").unwrap();
        assert_eq!(g.len(), 501);
        assert!((g.points()[500] - 3.0).abs() < 1e-12);
        assert!(Grid::parse("1:0:0.1").is_err());
        assert!(Grid::parse("0:1:0").is_err());
        assert!(Grid::parse("0:1").is_err());
        assert_eq!(Grid::new(0.0, 0.0, 1.0).unwrap().len(), 1);
    }

    #[test]
    fn example_one_is_nested() {
        let inst = gen_example(1, 200).unwrap();
        let r = check_nested(&inst, &Grid::new(-2.0, 3.0, 0.01).unwrap());
        assert_eq!(r.verdict, Verdict::Nested);
        assert_eq!(r.violating_mass, 0.0);
        for iv in &r.kappa_table {
            assert!(
                (inst.kappa_unscaled(iv.kappa_plus) - 0.5).abs() <= 0.02
                    || iv.distance(0.5 / inst.d_scale) * inst.d_scale <= 0.02
            );
        }
    }

    #[test]
    fn example_two_is_not_nested_on_its_first_segment() {
        let inst = gen_example(2, 200).unwrap();
        let r = check_nested(&inst, &Grid::new(-7.0, 3.0, 0.01).unwrap());
        assert_eq!(r.verdict, Verdict::NotNested);
        let seg = pair_violations(&inst, -3.0, 0.0);
        let mass: f64 = seg.iter().map(|&i| inst.atoms[i].mu_plus).sum();
        assert!((mass - 0.5).abs() <= 0.05, "{mass}");
        assert!(seg.iter().all(|&i| {
            let a = &inst.atoms[i];
            a.side == Side::Plus && (0.0..=1.0).contains(&a.eta)
        }));
        assert!(
            (r.violating_mass_plus - 0.5).abs() <= 0.05,
            "{}",
            r.violating_mass_plus
        );
    }

    #[test]
    fn f_star_on_example_one() {
        let inst = gen_example(1, 200).unwrap();
        let r = check_nested(&inst, &Grid::new(-2.0, 3.0, 0.005).unwrap());
        let cr = regression_from_classifiers(&inst, &r).unwrap();
        for (a, f) in inst.atoms.iter().zip(&cr.f_star) {
            let want = match a.side {
                Side::Plus => a.eta - 0.5,
                Side::Minus => a.eta + 0.5,
                Side::Eq => a.eta,
            };
            assert!((f - want).abs() <= 0.02, "{} {f} {want}", a.id);
        }
        assert!((cr.excess_risk - 0.25).abs() <= 0.01);
        assert_eq!(cr.clipped, 0);
        let push = cr.rule().pushforward(&inst, |a| a.mu_plus).unwrap();
        assert!(push.wasserstein1(&cr.cdf_f) <= 0.01);
    }

    #[test]
    fn constant_eta_gives_constant_f_star() {
        let mut recs = Vec::new();
        for k in 0..5 {
            recs.push(Record::new(format!("x{k}"), 1, 0.3, 0.1 + 0.02 * k as f64));
            recs.push(Record::new(format!("x{k}"), 2, 0.3, 0.1 - 0.02 * k as f64));
        }
        let inst = derive(&RawInstance::new(recs)).unwrap();
        let r = check_nested(&inst, &Grid::new(-1.0, 1.0, 0.01).unwrap());
        let cr = regression_from_classifiers(&inst, &r).unwrap();
        assert!(
            cr.f_star.iter().all(|f| (f - 0.3).abs() <= 0.01),
            "{:?}",
            cr.f_star
        );
    }

    #[test]
    fn awareness_matches_reference() {
        let inst = awareness(100);
        let grid = Grid::covering(&inst, 1.0, 0.005).unwrap();
        let r = check_nested(&inst, &grid);
        assert_eq!(r.verdict, Verdict::Nested);
        let cr = regression_from_classifiers(&inst, &r).unwrap();
        let reference = awareness_reference(&inst).unwrap();
        let worst = cr
            .f_star
            .iter()
            .zip(&reference)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 0.02, "{worst}");
    }

    #[test]
    fn equivalence_on_examples() {
        let inst = gen_example(1, 100).unwrap();
        let sol = solve_fair_regression(&inst).unwrap();
        let e = equivalence_check(&inst, &Grid::new(-2.0, 3.0, 0.005).unwrap(), &sol).unwrap();
        assert!(e.nested);
        assert!(
            e.risk_gap.unwrap() <= 0.01 && e.pushforward_gap.unwrap() <= 0.01,
            "{e:?}"
        );

        let inst = gen_example(2, 100).unwrap();
        let sol = solve_fair_regression(&inst).unwrap();
        let e = equivalence_check(&inst, &Grid::new(-7.0, 3.0, 0.01).unwrap(), &sol).unwrap();
        assert!(!e.nested);
        let s = e.suboptimality.unwrap();
        assert!(s.margin > 0.01, "{s:?}");
    }

    #[test]
    fn not_nested_blocks_the_construction() {
        let inst = gen_example(2, 50).unwrap();
        let r = check_nested(&inst, &Grid::new(-7.0, 3.0, 0.05).unwrap());
        assert!(matches!(
            regression_from_classifiers(&inst, &r),
            Err(Error::NotNested)
        ));
        let sol = solve_fair_regression(&inst).unwrap();
        assert!(matches!(
            potential_diagnostic(&inst, &r, &sol),
            Err(Error::NotNested)
        ));
    }

    #[test]
    fn potential_is_exact_for_two_points() {
        let inst = instantiate(&OmegaSpec::new(
            vec![OmegaAtom::new(1.0, 2.0, 1.0)],
            vec![OmegaAtom::new(-1.0, -2.0, 1.0)],
            DScale::Fixed(1.0),
        ))
        .unwrap();
        let r = check_nested(&inst, &Grid::new(-3.0, 3.0, 0.01).unwrap());
        assert_eq!(r.verdict, Verdict::Nested);
        let sol = solve_fair_regression(&inst).unwrap();
        let d = potential_diagnostic(&inst, &r, &sol).unwrap();
        assert!(
            d.duality_gap_plus <= 1e-9 && d.duality_gap_minus <= 1e-9,
            "{d:?}"
        );
    }

    #[test]
    fn potential_on_example_one() {
        let inst = gen_example(1, 200).unwrap();
        let sol = solve_fair_regression(&inst).unwrap();
        let grid = Grid::new(-2.0, 3.0, 0.005).unwrap();
        let d = potential_diagnostic(&inst, &check_nested(&inst, &grid), &sol).unwrap();
        assert!(
            d.duality_gap_plus <= 0.02 && d.duality_gap_minus <= 0.02,
            "{d:?}"
        );
        let fine =
            potential_diagnostic(&inst, &check_nested(&inst, &grid.refined()), &sol).unwrap();
        assert!(fine.duality_gap_plus <= d.duality_gap_plus + 1e-12);
        assert!(fine.duality_gap_minus <= d.duality_gap_minus + 1e-12);
    }

    #[test]
    fn d_scale_does_not_change_the_verdict() {
        let mut spec = example_spec(2, 40).unwrap();
        let auto = instantiate(&spec).unwrap();
        spec.d_scale = DScale::Fixed(2.0 * auto.d_scale);
        let scaled = instantiate(&spec).unwrap();
        let grid = Grid::new(-7.0, 3.0, 0.05).unwrap();
        let (a, b) = (check_nested(&auto, &grid), check_nested(&scaled, &grid));
        assert_eq!(a.verdict, b.verdict);
        assert_eq!(a.violations.len(), b.violations.len());
        for (x, y) in a.kappa_table.iter().zip(&b.kappa_table) {
            assert!(
                (auto.kappa_unscaled(x.kappa_plus) - scaled.kappa_unscaled(y.kappa_plus)).abs()
                    <= 1e-9
            );
        }
    }

    #[test]
    fn refinement_keeps_kappa_plus() {
        let inst = gen_example(2, 30).unwrap();
        let g = Grid::new(-7.0, 3.0, 0.1).unwrap();
        let (a, b) = (check_nested(&inst, &g), check_nested(&inst, &g.refined()));
        for (k, iv) in a.kappa_table.iter().enumerate() {
            let fine = b.kappa_table[2 * k].kappa_plus;
            assert!((fine - iv.kappa_plus).abs() <= 1e-12);
        }
    }
}
