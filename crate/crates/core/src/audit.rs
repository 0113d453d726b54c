//! Within-group audits of regression and classification rules.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::ThresholdClassifier;
use crate::error::{Error, Result};
use crate::instance::FairInstance;
use crate::measure::PointId;
use crate::regression::{risk_report, Rule};

/// Most witnesses kept per report.
pub const WITNESS_CAP: usize = 100;

/// Masses at or below this count as zero.
pub const MASS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderViolation {
    pub x: PointId,
    pub x_prime: PointId,
    pub s: u8,
    pub eta: f64,
    pub eta_prime: f64,
    pub f: f64,
    pub f_prime: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderAuditReport {
    /// Pairs with `η(x) < η(x′)` in one group and `f(x) ≥ f(x′)`, at most [`WITNESS_CAP`].
    pub violating_pairs: Vec<OrderViolation>,
    pub violating_pair_count: u64,
    /// `Σ_s Σ p_s²·μ_s(x)·μ_s(x′)` over violating pairs.
    pub violating_pair_mass: f64,
    pub preserves_order: bool,
    /// `ℙ(S = s | X = x) ∈ (0, 1)` at every point.
    pub overlap: bool,
    /// Kolmogorov parity gap of `f`, for reading the result against exact parity.
    pub parity_gap: f64,
}

/// Fenwick tree over ranks, holding `(count, mass)`.
struct Fenwick {
    tree: Vec<(u64, f64)>,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        Fenwick {
            tree: vec![(0, 0.0); n + 1],
        }
    }

    fn add(&mut self, rank: usize, w: f64) {
        let mut i = rank + 1;
        while i < self.tree.len() {
            self.tree[i].0 += 1;
            self.tree[i].1 += w;
            i += i & i.wrapping_neg();
        }
    }

    /// Totals over ranks `0..=rank`.
    fn prefix(&self, rank: usize) -> (u64, f64) {
        let (mut c, mut m) = (0, 0.0);
        let mut i = rank + 1;
        while i > 0 {
            c += self.tree[i].0;
            m += self.tree[i].1;
            i -= i & i.wrapping_neg();
        }
        (c, m)
    }
}

struct GroupScan {
    count: u64,
    mass: f64,
    witnesses: Vec<OrderViolation>,
}

fn scan_group(inst: &FairInstance, f: &[f64], s: u8) -> GroupScan {
    let (p, weight): (f64, fn(&crate::instance::SupportAtom) -> f64) = if s == 1 {
        (inst.p1, |a| a.mu1)
    } else {
        (inst.p2, |a| a.mu2)
    };
    let mut pts: Vec<usize> = (0..inst.len())
        .filter(|&i| weight(&inst.atoms[i]) > 0.0)
        .collect();
    pts.sort_by(|&a, &b| inst.atoms[a].eta.total_cmp(&inst.atoms[b].eta));

    let mut fs: Vec<f64> = pts.iter().map(|&i| f[i]).collect();
    fs.sort_by(f64::total_cmp);
    fs.dedup();
    let rank = |v: f64| fs.partition_point(|&u| u < v);

    let mut tree = Fenwick::new(fs.len());
    let (mut total_count, mut total_mass) = (0u64, 0.0);
    let mut inserted = 0usize;
    let mut witnesses = Vec::new();
    let mut k = 0;
    while k < pts.len() {
        // points sharing one η value are not ordered against each other
        let eta = inst.atoms[pts[k]].eta;
        let end = k + pts[k..]
            .iter()
            .take_while(|&&i| inst.atoms[i].eta == eta)
            .count();
        for &j in &pts[k..end] {
            let r = rank(f[j]);
            let below = if r == 0 { (0, 0.0) } else { tree.prefix(r - 1) };
            let (count, mass) = (
                inserted as u64 - below.0,
                tree.prefix(fs.len() - 1).1 - below.1,
            );
            if count > 0 {
                total_count += count;
                total_mass += p * weight(&inst.atoms[j]) * p * mass;
                for &i in pts[..k].iter().filter(|&&i| f[i] >= f[j]) {
                    if witnesses.len() >= WITNESS_CAP {
                        break;
                    }
                    let (a, b) = (&inst.atoms[i], &inst.atoms[j]);
                    witnesses.push(OrderViolation {
                        x: a.id.clone(),
                        x_prime: b.id.clone(),
                        s,
                        eta: a.eta,
                        eta_prime: b.eta,
                        f: f[i],
                        f_prime: f[j],
                    });
                }
            }
        }
        for &j in &pts[k..end] {
            tree.add(rank(f[j]), weight(&inst.atoms[j]));
            inserted += 1;
        }
        k = end;
    }
    GroupScan {
        count: total_count,
        mass: total_mass,
        witnesses,
    }
}

/// Exact order audit of a deterministic rule aligned with `inst.atoms`.
pub fn audit_order(inst: &FairInstance, f: &[f64]) -> Result<OrderAuditReport> {
    if f.len() != inst.len() {
        return Err(Error::UndefinedMap(format!(
            "rule covers {} points but the support has {}",
            f.len(),
            inst.len()
        )));
    }
    let scans: Vec<GroupScan> = [1u8, 2]
        .par_iter()
        .map(|&s| scan_group(inst, f, s))
        .collect();
    let count = scans.iter().map(|g| g.count).sum();
    let mass = scans.iter().map(|g| g.mass).sum();
    let mut violating_pairs: Vec<OrderViolation> =
        scans.into_iter().flat_map(|g| g.witnesses).collect();
    violating_pairs.truncate(WITNESS_CAP);
    Ok(OrderAuditReport {
        violating_pairs,
        violating_pair_count: count,
        violating_pair_mass: mass,
        preserves_order: count == 0,
        overlap: inst.has_overlap(),
        parity_gap: risk_report(inst, &Rule::Deterministic(f.to_vec()))?.parity_gap,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EnvyCase {
    BayesSubsetFair,
    FairSubsetBayes,
    NotEnvyFree,
    /// Neither inclusion holds, but no single group carries both differences.
    /// Impossible under overlap.
    Undetermined,
}

/// Agreement masses between the Bayes and the fair classifier under `μ_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgreementMasses {
    pub s: u8,
    pub both: f64,
    pub bayes_only: f64,
    pub fair_only: f64,
    pub neither: f64,
}

/// A point rejected by the fair classifier while a point of the same group
/// with smaller η is accepted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvyWitness {
    pub s: u8,
    pub rejected: PointId,
    pub accepted: PointId,
    pub eta_rejected: f64,
    pub eta_accepted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvyAuditReport {
    pub y: f64,
    pub case: EnvyCase,
    /// Both inclusions hold: the fair classifier agrees with Bayes.
    pub degenerate: bool,
    pub masses: Vec<AgreementMasses>,
    pub witnesses: Vec<EnvyWitness>,
}

pub fn audit_envy(inst: &FairInstance, g: &ThresholdClassifier) -> Result<EnvyAuditReport> {
    if g.accept.len() != inst.len() {
        return Err(Error::UndefinedMap(format!(
            "classifier covers {} points but the support has {}",
            g.accept.len(),
            inst.len()
        )));
    }
    let y = g.y;
    let q = g.acceptance();
    let bayes: Vec<bool> = inst.atoms.iter().map(|a| a.eta >= y).collect();
    let masses: Vec<AgreementMasses> = [1u8, 2]
        .iter()
        .map(|&s| {
            let mut m = AgreementMasses {
                s,
                both: 0.0,
                bayes_only: 0.0,
                fair_only: 0.0,
                neither: 0.0,
            };
            for ((a, &b), &p) in inst.atoms.iter().zip(&bayes).zip(&q) {
                let w = if s == 1 { a.mu1 } else { a.mu2 };
                if b {
                    m.both += w * p;
                    m.bayes_only += w * (1.0 - p);
                } else {
                    m.fair_only += w * p;
                    m.neither += w * (1.0 - p);
                }
            }
            m
        })
        .collect();

    let bayes_only: f64 = masses.iter().map(|m| m.bayes_only).sum();
    let fair_only: f64 = masses.iter().map(|m| m.fair_only).sum();
    let split = masses
        .iter()
        .any(|m| m.bayes_only > MASS_TOL && m.fair_only > MASS_TOL);
    let (case, degenerate) = match (bayes_only <= MASS_TOL, fair_only <= MASS_TOL) {
        (true, true) => (EnvyCase::BayesSubsetFair, true),
        (true, false) => (EnvyCase::BayesSubsetFair, false),
        (false, true) => (EnvyCase::FairSubsetBayes, false),
        (false, false) if split => (EnvyCase::NotEnvyFree, false),
        (false, false) => (EnvyCase::Undetermined, false),
    };

    let mut witnesses = Vec::new();
    if case == EnvyCase::NotEnvyFree {
        'outer: for s in [1u8, 2] {
            let member =
                |a: &crate::instance::SupportAtom| if s == 1 { a.mu1 > 0.0 } else { a.mu2 > 0.0 };
            let rejected: Vec<usize> = (0..inst.len())
                .filter(|&i| bayes[i] && q[i] < 1.0 && member(&inst.atoms[i]))
                .collect();
            let accepted: Vec<usize> = (0..inst.len())
                .filter(|&i| !bayes[i] && q[i] > 0.0 && member(&inst.atoms[i]))
                .collect();
            for &i in &rejected {
                for &j in &accepted {
                    if witnesses.len() >= WITNESS_CAP {
                        break 'outer;
                    }
                    witnesses.push(EnvyWitness {
                        s,
                        rejected: inst.atoms[i].id.clone(),
                        accepted: inst.atoms[j].id.clone(),
                        eta_rejected: inst.atoms[i].eta,
                        eta_accepted: inst.atoms[j].eta,
                    });
                }
            }
        }
    }
    Ok(EnvyAuditReport {
        y,
        case,
        degenerate,
        masses,
        witnesses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::optimal_fair_classifier;
    use crate::instance::{derive, RawInstance, Record};
    use crate::regression::{awareness_reference, solve_fair_regression};
    use proptest::prelude::*;

    fn awareness(n: usize) -> FairInstance {
        let mut recs = Vec::new();
        for k in 0..n {
            let u = (k as f64 + 0.5) / n as f64;
            recs.push(Record::new(format!("a{k}"), 1, u * u, 0.6 / n as f64));
            recs.push(Record::new(format!("b{k}"), 2, 0.3 + u, 0.4 / n as f64));
        }
        derive(&RawInstance::new(recs)).unwrap()
    }

    /// Every point in both groups; the group imbalance alternates along η so
    /// both Jordan parts cover the whole range, with higher η on `X₊`.
    fn overlapping(n: usize) -> FairInstance {
        let mut recs = Vec::new();
        for k in 0..n {
            let u = (k as f64 + 0.5) / n as f64;
            let (tilt, eta) = if k % 2 == 0 {
                (0.4, u)
            } else {
                (-0.3, 0.6 * u)
            };
            let x = format!("x{k}");
            recs.push(Record::new(
                x.clone(),
                1,
                eta,
                (1.0 + tilt) / (2.0 * n as f64),
            ));
            recs.push(Record::new(x, 2, eta, (1.0 - tilt) / (2.0 * n as f64)));
        }
        derive(&RawInstance::new(recs)).unwrap()
    }

    fn brute(inst: &FairInstance, f: &[f64]) -> (u64, f64) {
        let (mut c, mut m) = (0, 0.0);
        for (s, p) in [(1u8, inst.p1), (2, inst.p2)] {
            for (i, a) in inst.atoms.iter().enumerate() {
                for (j, b) in inst.atoms.iter().enumerate() {
                    let (wa, wb) = if s == 1 {
                        (a.mu1, b.mu1)
                    } else {
                        (a.mu2, b.mu2)
                    };
                    if wa > 0.0 && wb > 0.0 && a.eta < b.eta && f[i] >= f[j] {
                        c += 1;
                        m += p * wa * p * wb;
                    }
                }
            }
        }
        (c, m)
    }

    #[test]
    fn identity_preserves_order() {
        let inst = overlapping(30);
        let eta: Vec<f64> = inst.atoms.iter().map(|a| a.eta).collect();
        let r = audit_order(&inst, &eta).unwrap();
        assert!(r.preserves_order && r.violating_pairs.is_empty() && r.violating_pair_mass == 0.0);
        assert!(r.overlap);
    }

    #[test]
    fn constant_rule_violates() {
        let inst = awareness(10);
        let r = audit_order(&inst, &vec![0.0; inst.len()]).unwrap();
        assert!(!r.preserves_order);
        assert_eq!(r.violating_pair_count, 2 * 45);
        assert!(!r.overlap);
    }

    #[test]
    fn awareness_reference_preserves_order() {
        let inst = awareness(40);
        let f = awareness_reference(&inst).unwrap();
        assert!(audit_order(&inst, &f).unwrap().preserves_order);
    }

    #[test]
    fn transport_rule_breaks_order_under_overlap() {
        let inst = overlapping(30);
        let sol = solve_fair_regression(&inst).unwrap();
        let r = audit_order(&inst, &sol.f_det).unwrap();
        assert!(!r.preserves_order);
        assert!(r.violating_pair_mass > 0.0);
        let (c, m) = brute(&inst, &sol.f_det);
        assert_eq!(c, r.violating_pair_count);
        assert!((m - r.violating_pair_mass).abs() <= 1e-15);
    }

    #[test]
    fn bayes_fair_is_degenerate() {
        // above every η the Bayes rule rejects everything and is fair
        let inst = overlapping(10);
        let g = optimal_fair_classifier(&inst, 2.0);
        assert_eq!(g.kappa, 0.0);
        let r = audit_envy(&inst, &g).unwrap();
        assert!(r.degenerate && r.case == EnvyCase::BayesSubsetFair && r.witnesses.is_empty());
    }

    #[test]
    fn overlapping_instance_is_not_envy_free() {
        // Jordan-positive points rejected and Jordan-negative points accepted in group 1
        let inst = overlapping(40);
        let found = [0.3, 0.4, 0.5, 0.6].iter().any(|&y| {
            let g = optimal_fair_classifier(&inst, y);
            let r = audit_envy(&inst, &g).unwrap();
            if r.case == EnvyCase::NotEnvyFree {
                assert!(!r.witnesses.is_empty());
                let w = &r.witnesses[0];
                assert!(w.eta_rejected >= y && w.eta_accepted < y);
            }
            r.case == EnvyCase::NotEnvyFree
        });
        assert!(found);
    }

    #[test]
    fn awareness_is_never_envious() {
        let inst = awareness(30);
        for k in 0..20 {
            let y = -0.2 + 0.08 * k as f64;
            let r = audit_envy(&inst, &optimal_fair_classifier(&inst, y)).unwrap();
            assert_ne!(r.case, EnvyCase::NotEnvyFree, "y = {y}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn fenwick_matches_pair_scan(
            pts in prop::collection::vec((0.01f64..1.0, 0.01f64..1.0, 0u8..6, 0u8..6, -3i32..3), 2..25),
        ) {
            let total: f64 = pts.iter().map(|p| p.0 + p.1).sum();
            let mut recs = Vec::new();
            for (k, (a, b, e1, e2, _)) in pts.iter().enumerate() {
                let x = format!("x{k}");
                recs.push(Record::new(x.clone(), 1, *e1 as f64 / 5.0, a / total));
                recs.push(Record::new(x, 2, *e2 as f64 / 5.0, b / total));
            }
            let inst = match derive(&RawInstance::new(recs)) {
                Ok(i) => i,
                Err(_) => return Ok(()),
            };
            // a coarse rule with many ties
            let f: Vec<f64> = inst.atoms.iter().enumerate().map(|(i, a)| (a.eta * 2.0).round() + 0.1 * pts[i % pts.len()].4 as f64).collect();
            let r = audit_order(&inst, &f).unwrap();
            let (c, m) = brute(&inst, &f);
            prop_assert_eq!(r.violating_pair_count, c);
            prop_assert!((r.violating_pair_mass - m).abs() <= 1e-12);
            prop_assert_eq!(r.preserves_order, c == 0);
        }

        #[test]
        fn exactly_one_case_under_overlap(n in 3usize..25, y in 0.05f64..0.95) {
            let inst = overlapping(n);
            let r = audit_envy(&inst, &optimal_fair_classifier(&inst, y)).unwrap();
            prop_assert_ne!(r.case, EnvyCase::Undetermined);
        }
    }
}
