//! Fair regression through the barycenter reduction.
//!
//! The optimal randomized rule is read off an optimal plan between the two
//! Ω-measures under the pair cost `C`: every unit of mass moved from `x₊` to
//! `x₋` is predicted at the meeting point `m(x₊, x₋)` on both ends. The law of
//! those meeting points is the barycenter ν*. A deterministic rule is obtained
//! by averaging each kernel (barycentric projection).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{FairInstance, OmegaAtom, Side, SupportAtom};
use crate::measure::{PointId, RealMeasure1D};
use crate::transport::{
    cost_c_unchecked, cost_pair_unchecked, midpoint_unchecked, solve_ot, CostMatrix, TransportPlan,
};

/// A prediction rule evaluated on the support, aligned with `inst.atoms`.
#[derive(Debug, Clone, PartialEq)]
pub enum Rule {
    Deterministic(Vec<f64>),
    /// Per-point conditional law of the prediction.
    Randomized(Vec<RealMeasure1D>),
}

impl Rule {
    /// Deterministic rule from a per-point function; fails on the first point without an image.
    pub fn from_fn<F>(inst: &FairInstance, f: F) -> Result<Rule>
    where
        F: Fn(&SupportAtom) -> Option<f64>,
    {
        inst.atoms
            .iter()
            .map(|a| f(a).ok_or_else(|| Error::UndefinedMap(a.id.to_string())))
            .collect::<Result<Vec<_>>>()
            .map(Rule::Deterministic)
    }

    pub fn bayes(inst: &FairInstance) -> Rule {
        Rule::Deterministic(inst.atoms.iter().map(|a| a.eta).collect())
    }

    /// Law of the prediction under a weighting of the support.
    pub fn pushforward<W>(&self, inst: &FairInstance, weight: W) -> Result<RealMeasure1D>
    where
        W: Fn(&SupportAtom) -> f64,
    {
        match self {
            Rule::Deterministic(v) => RealMeasure1D::new(
                inst.atoms
                    .iter()
                    .zip(v)
                    .map(|(a, &f)| (f, weight(a)))
                    .filter(|p| p.1 > 0.0),
            ),
            Rule::Randomized(k) => RealMeasure1D::new(
                inst.atoms
                    .iter()
                    .zip(k)
                    .filter(|(a, _)| weight(a) > 0.0)
                    .flat_map(|(a, kern)| {
                        let w = weight(a) / kern.total_mass();
                        kern.atoms().iter().map(move |&(v, q)| (v, q * w))
                    }),
            ),
        }
    }

    fn check_len(&self, inst: &FairInstance) -> Result<()> {
        let n = match self {
            Rule::Deterministic(v) => v.len(),
            Rule::Randomized(k) => k.len(),
        };
        if n != inst.len() {
            return Err(Error::UndefinedMap(format!(
                "rule covers {n} points but the support has {}",
                inst.len()
            )));
        }
        Ok(())
    }
}

/// Excess risk and demographic-parity gap of a rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    /// `E_μ[(η(X) − f(X))²]`.
    pub excess_risk: f64,
    /// Kolmogorov distance between `f♯μ₊` and `f♯μ₋`.
    pub parity_gap: f64,
}

pub fn risk_report(inst: &FairInstance, rule: &Rule) -> Result<RiskReport> {
    rule.check_len(inst)?;
    let excess_risk = match rule {
        Rule::Deterministic(v) => inst
            .atoms
            .iter()
            .zip(v)
            .map(|(a, f)| a.mu * (a.eta - f).powi(2))
            .sum(),
        Rule::Randomized(k) => inst
            .atoms
            .iter()
            .zip(k)
            .map(|(a, kern)| {
                let t = kern.total_mass();
                a.mu * kern
                    .atoms()
                    .iter()
                    .map(|&(v, q)| q / t * (a.eta - v).powi(2))
                    .sum::<f64>()
            })
            .sum(),
    };
    let plus = rule.pushforward(inst, |a| a.mu_plus)?;
    let minus = rule.pushforward(inst, |a| a.mu_minus)?;
    Ok(RiskReport {
        excess_risk,
        parity_gap: plus.kolmogorov(&minus),
    })
}

/// Output of [`solve_fair_regression`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionSolution {
    /// Optimal plan between `omega_plus` (rows) and `omega_minus` (columns) under `C`.
    pub plan: TransportPlan,
    pub barycenter: RealMeasure1D,
    /// Conditional law of the prediction at each Ω-atom of `omega_plus`.
    pub kernel_plus: Vec<RealMeasure1D>,
    pub kernel_minus: Vec<RealMeasure1D>,
    /// Barycentric projection on `X₊ ∪ X₋` and η on `X₌`, aligned with `inst.atoms`.
    pub f_det: Vec<f64>,
    pub excess_risk_randomized: f64,
    pub excess_risk_deterministic: f64,
    pub parity_gap_randomized: f64,
    pub parity_gap_deterministic: f64,
}

impl RegressionSolution {
    /// The optimal transport value `OT_C(𝝁₊, 𝝁₋)`.
    pub fn ot_value(&self) -> f64 {
        self.plan.cost
    }

    pub fn randomized_rule(&self, inst: &FairInstance) -> Rule {
        Rule::Randomized(
            inst.atoms
                .iter()
                .map(|a| match (a.side, a.omega) {
                    (Side::Plus, Some(i)) => self.kernel_plus[i].clone(),
                    (Side::Minus, Some(j)) => self.kernel_minus[j].clone(),
                    _ => RealMeasure1D::new([(a.eta, 1.0)]).expect("point mass"),
                })
                .collect(),
        )
    }

    pub fn deterministic_rule(&self) -> Rule {
        Rule::Deterministic(self.f_det.clone())
    }

    pub fn f_det_of(&self, inst: &FairInstance, id: &PointId) -> Option<f64> {
        inst.position(id).map(|k| self.f_det[k])
    }
}

/// Pair-cost matrix `C(x₊, x₋)` between the two Ω-measures.
pub fn pair_cost_matrix(plus: &[OmegaAtom], minus: &[OmegaAtom]) -> Result<CostMatrix> {
    CostMatrix::from_fn(plus.len(), minus.len(), |i, j| {
        cost_pair_unchecked(plus[i].point(), minus[j].point())
    })
}

/// Exact `OT_c(𝝁, ν)` between an Ω-measure and a law on the real line.
pub fn ot_to_line(omega: &[OmegaAtom], nu: &RealMeasure1D) -> Result<TransportPlan> {
    let cost = CostMatrix::from_fn(omega.len(), nu.len(), |i, j| {
        cost_c_unchecked(omega[i].point(), nu.atoms()[j].0)
    })?;
    let src: Vec<f64> = omega.iter().map(|a| a.w).collect();
    let dst: Vec<f64> = nu.atoms().iter().map(|a| a.1).collect();
    solve_ot(&src, &dst, &cost)
}

/// `OT_c(𝝁₊, ν) + OT_c(𝝁₋, ν)`, the barycenter objective at `ν`.
pub fn barycenter_objective(inst: &FairInstance, nu: &RealMeasure1D) -> Result<f64> {
    Ok(ot_to_line(&inst.omega_plus, nu)?.cost + ot_to_line(&inst.omega_minus, nu)?.cost)
}

pub fn solve_fair_regression(inst: &FairInstance) -> Result<RegressionSolution> {
    let (plus, minus) = (&inst.omega_plus, &inst.omega_minus);
    let cost = pair_cost_matrix(plus, minus)?;
    let src: Vec<f64> = plus.iter().map(|a| a.w).collect();
    let dst: Vec<f64> = minus.iter().map(|a| a.w).collect();
    let plan = solve_ot(&src, &dst, &cost)?;

    let cells: Vec<(usize, usize, f64, f64)> = plan
        .coupling
        .nonzeros()
        .into_iter()
        .map(|(i, j, w)| {
            (
                i,
                j,
                w,
                midpoint_unchecked(plus[i].point(), minus[j].point()),
            )
        })
        .collect();
    let barycenter = RealMeasure1D::new(cells.iter().map(|c| (c.3, c.2)))?;

    let mut rows: Vec<Vec<(f64, f64)>> = vec![Vec::new(); plus.len()];
    let mut cols: Vec<Vec<(f64, f64)>> = vec![Vec::new(); minus.len()];
    for &(i, j, w, v) in &cells {
        rows[i].push((v, w));
        cols[j].push((v, w));
    }
    let kernel = |list: Vec<(f64, f64)>| -> Result<RealMeasure1D> {
        let t: f64 = list.iter().map(|a| a.1).sum();
        if t <= 0.0 {
            return Err(Error::Internal(
                "Ω-atom left unmatched by the optimal plan".into(),
            ));
        }
        RealMeasure1D::new(list.into_iter().map(|(v, w)| (v, w / t)))
    };
    let kernel_plus = rows.into_iter().map(kernel).collect::<Result<Vec<_>>>()?;
    let kernel_minus = cols.into_iter().map(kernel).collect::<Result<Vec<_>>>()?;

    let f_det: Vec<f64> = inst
        .atoms
        .iter()
        .map(|a| match (a.side, a.omega) {
            (Side::Plus, Some(i)) => kernel_plus[i].mean(),
            (Side::Minus, Some(j)) => kernel_minus[j].mean(),
            _ => a.eta,
        })
        .collect();

    let mut sol = RegressionSolution {
        plan,
        barycenter,
        kernel_plus,
        kernel_minus,
        f_det,
        excess_risk_randomized: 0.0,
        excess_risk_deterministic: 0.0,
        parity_gap_randomized: 0.0,
        parity_gap_deterministic: 0.0,
    };
    let rand = risk_report(inst, &sol.randomized_rule(inst))?;
    let det = risk_report(inst, &sol.deterministic_rule())?;
    sol.excess_risk_randomized = rand.excess_risk;
    sol.parity_gap_randomized = rand.parity_gap;
    sol.excess_risk_deterministic = det.excess_risk;
    sol.parity_gap_deterministic = det.parity_gap;
    Ok(sol)
}

/// Quantile-averaging rule for instances where each point belongs to one group.
///
/// A point of group `s` sits at the mid-rank level `u = F_s(η) − ν_s({η})/2`
/// of `ν_s = η♯μ_s`, and is sent to `p₁Q₁(u) + p₂Q₂(u)`.
pub fn awareness_reference(inst: &FairInstance) -> Result<Vec<f64>> {
    if !inst.is_awareness() {
        let shared = inst
            .atoms
            .iter()
            .filter(|a| a.mu1 > 0.0 && a.mu2 > 0.0)
            .count();
        return Err(Error::NotAwareness(format!(
            "{shared} support points are observed in both groups"
        )));
    }
    let nu1 = RealMeasure1D::new(
        inst.atoms
            .iter()
            .map(|a| (a.eta, a.mu1))
            .filter(|p| p.1 > 0.0),
    )?;
    let nu2 = RealMeasure1D::new(
        inst.atoms
            .iter()
            .map(|a| (a.eta, a.mu2))
            .filter(|p| p.1 > 0.0),
    )?;
    let weight_at = |nu: &RealMeasure1D, v: f64| -> f64 {
        let k = nu.atoms().partition_point(|a| a.0 < v);
        nu.atoms().get(k).filter(|a| a.0 == v).map_or(0.0, |a| a.1)
    };
    Ok(inst
        .atoms
        .iter()
        .map(|a| {
            let own = if a.mu1 > 0.0 { &nu1 } else { &nu2 };
            let u = own.cdf(a.eta) - 0.5 * weight_at(own, a.eta);
            inst.p1 * nu1.quantile_interior(u) + inst.p2 * nu2.quantile_interior(u)
        })
        .collect())
}
