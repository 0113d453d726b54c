//! Fair cost-sensitive classification.
//!
//! For a threshold `y` the candidates are `g(x) = 1{η(x) ≥ y + κΔ(x)}`. With
//! `r(x) = (η(x) − y)/Δ(x)` a point of `X₊` is accepted iff `r ≥ κ` and a point
//! of `X₋` iff `r ≤ κ`, so the parity function
//! `G(κ) = μ₊(g = 1) − μ₋(g = 1)` is a nonincreasing step function of κ with
//! jumps at the ratios `r`. Everything below scans those ratios in sorted
//! order; no comparison is ever made against `y + κΔ` directly, which keeps
//! decisions and interval ends consistent with each other.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{FairInstance, Side, SupportAtom};

/// `|G| ≤ ZERO_TOL` counts as parity.
pub const ZERO_TOL: f64 = 1e-12;

/// Largest support accepted by [`lp_oracle`].
pub const LP_ORACLE_MAX: usize = 200;

/// Breakpoint ratio of a point with `Δ ≠ 0`.
#[inline]
pub fn ratio(a: &SupportAtom, y: f64) -> f64 {
    (a.eta - y) / a.delta
}

/// Threshold decision at slope κ (the `≥` convention on the boundary).
#[inline]
pub fn accepts(a: &SupportAtom, y: f64, kappa: f64) -> bool {
    match a.side {
        Side::Plus => ratio(a, y) >= kappa,
        Side::Minus => ratio(a, y) <= kappa,
        Side::Eq => a.eta >= y,
    }
}

/// `G(κ, y) = μ₊(η ≥ y + κΔ) − μ₋(η ≥ y + κΔ)`.
pub fn parity_function(inst: &FairInstance, kappa: f64, y: f64) -> f64 {
    let (mut plus, mut minus) = (0.0, 0.0);
    for a in &inst.atoms {
        if accepts(a, y, kappa) {
            plus += a.mu_plus;
            minus += a.mu_minus;
        }
    }
    plus - minus
}

pub fn bayes_classifier(inst: &FairInstance, y: f64) -> Vec<bool> {
    inst.atoms.iter().map(|a| a.eta >= y).collect()
}

/// Deterministic accept map of `g_y^κ`, aligned with `inst.atoms`.
pub fn threshold_map(inst: &FairInstance, y: f64, kappa: f64) -> Vec<bool> {
    inst.atoms.iter().map(|a| accepts(a, y, kappa)).collect()
}

/// Which regime the parity set lies in, when it is degenerate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Saturation {
    /// Parity holds while every point of `X₊ ∪ X₋` is accepted.
    AllAccept,
    /// Parity holds while every point of `X₊ ∪ X₋` is rejected.
    AllReject,
}

/// The set of slopes giving parity at `y`, or the crossing point when there is none.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaInterval {
    pub y: f64,
    pub kappa_minus: f64,
    pub kappa_plus: f64,
    /// Smallest attainable `|G|`; zero when exact parity is reachable.
    pub crossing_gap: f64,
    /// Whether `G(κ⁻) = 0` (the parity set may be half-open).
    pub minus_attained: bool,
    pub plus_attained: bool,
    pub saturation: Option<Saturation>,
}

impl KappaInterval {
    pub fn is_exact(&self) -> bool {
        self.crossing_gap == 0.0
    }

    pub fn contains(&self, kappa: f64) -> bool {
        self.kappa_minus <= kappa && kappa <= self.kappa_plus
    }

    /// Distance from κ to the closed interval.
    pub fn distance(&self, kappa: f64) -> f64 {
        (self.kappa_minus - kappa)
            .max(kappa - self.kappa_plus)
            .max(0.0)
    }
}

/// Sorted breakpoints with the accepted masses needed to evaluate `G` on
/// every piece. Piece `2k` is the open interval `(b[k−1], b[k])`, piece
/// `2k + 1` the point `b[k]`.
struct Scan {
    breaks: Vec<f64>,
    /// `μ₊(r ≥ b[k])`, with a trailing zero.
    plus_ge: Vec<f64>,
    /// `μ₋(r ≤ b[k])`.
    minus_le: Vec<f64>,
}

impl Scan {
    fn new(inst: &FairInstance, y: f64) -> Scan {
        let mut plus: Vec<(f64, f64)> = inst
            .side_atoms(Side::Plus)
            .map(|a| (ratio(a, y), a.mu_plus))
            .collect();
        let mut minus: Vec<(f64, f64)> = inst
            .side_atoms(Side::Minus)
            .map(|a| (ratio(a, y), a.mu_minus))
            .collect();
        plus.sort_by(|a, b| a.0.total_cmp(&b.0));
        minus.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut breaks: Vec<f64> = plus.iter().chain(&minus).map(|a| a.0).collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();

        let k = breaks.len();
        let mut plus_ge = vec![0.0; k + 1];
        let mut idx = plus.len();
        let mut acc = 0.0;
        for b in (0..k).rev() {
            while idx > 0 && plus[idx - 1].0 >= breaks[b] {
                idx -= 1;
                acc += plus[idx].1;
            }
            plus_ge[b] = acc;
        }
        let mut minus_le = vec![0.0; k];
        let mut idx = 0;
        let mut acc = 0.0;
        for b in 0..k {
            while idx < minus.len() && minus[idx].0 <= breaks[b] {
                acc += minus[idx].1;
                idx += 1;
            }
            minus_le[b] = acc;
        }
        Scan {
            breaks,
            plus_ge,
            minus_le,
        }
    }

    fn pieces(&self) -> usize {
        2 * self.breaks.len() + 1
    }

    /// Accepted `(μ₊, μ₋)` masses on a piece.
    fn masses(&self, p: usize) -> (f64, f64) {
        let k = p / 2;
        if p % 2 == 0 {
            (
                self.plus_ge[k],
                if k == 0 { 0.0 } else { self.minus_le[k - 1] },
            )
        } else {
            (self.plus_ge[k], self.minus_le[k])
        }
    }

    fn g(&self, p: usize) -> f64 {
        let (a, b) = self.masses(p);
        a - b
    }

    /// `(left end, right end)` of a piece.
    fn span(&self, p: usize) -> (f64, f64) {
        let k = p / 2;
        if p % 2 == 1 {
            (self.breaks[k], self.breaks[k])
        } else {
            let lo = if k == 0 {
                f64::NEG_INFINITY
            } else {
                self.breaks[k - 1]
            };
            let hi = self.breaks.get(k).copied().unwrap_or(f64::INFINITY);
            (lo, hi)
        }
    }

    /// A representative slope inside a piece.
    fn inside(&self, p: usize) -> f64 {
        let (lo, hi) = self.span(p);
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => 0.5 * (lo + hi),
            (false, true) => hi - 1.0,
            (true, false) => lo + 1.0,
            (false, false) => 0.0,
        }
    }
}

/// Result of the piece scan at one `y`.
struct Located {
    interval: KappaInterval,
    scan: Scan,
    /// Last zero piece, or the piece right of the crossing.
    last: usize,
}

fn locate(inst: &FairInstance, y: f64) -> Located {
    let scan = Scan::new(inst, y);
    let n = scan.pieces();
    let zeros: Vec<usize> = (0..n).filter(|&p| scan.g(p).abs() <= ZERO_TOL).collect();
    if let (Some(&first), Some(&last)) = (zeros.first(), zeros.last()) {
        let saturation = zeros.iter().find_map(|&p| {
            let (a, b) = scan.masses(p);
            if a >= 1.0 - ZERO_TOL && b >= 1.0 - ZERO_TOL {
                Some(Saturation::AllAccept)
            } else if a <= ZERO_TOL && b <= ZERO_TOL {
                Some(Saturation::AllReject)
            } else {
                None
            }
        });
        let interval = KappaInterval {
            y,
            kappa_minus: scan.span(first).0,
            kappa_plus: scan.span(last).1,
            crossing_gap: 0.0,
            minus_attained: first % 2 == 1,
            plus_attained: last % 2 == 1,
            saturation,
        };
        return Located {
            interval,
            scan,
            last,
        };
    }
    // no exact zero: G jumps from positive to negative across one breakpoint
    let right = (0..n)
        .find(|&p| scan.g(p) < 0.0)
        .expect("G is negative on the last piece");
    let left = right - 1;
    let b = if right % 2 == 1 {
        scan.span(right).0
    } else {
        scan.span(left).0
    };
    let gap = scan.g(left).abs().min(scan.g(right).abs());
    let interval = KappaInterval {
        y,
        kappa_minus: b,
        kappa_plus: b,
        crossing_gap: gap,
        minus_attained: false,
        plus_attained: false,
        saturation: None,
    };
    Located {
        interval,
        scan,
        last: right,
    }
}

pub fn kappa_interval(inst: &FairInstance, y: f64) -> KappaInterval {
    locate(inst, y).interval
}

/// An optimal fair classifier at threshold `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdClassifier {
    pub y: f64,
    pub kappa: f64,
    pub interval: KappaInterval,
    /// Deterministic decisions of `g_y^κ`, aligned with `inst.atoms`.
    pub accept: Vec<bool>,
    /// Acceptance probabilities of the randomized boundary points, as `(atom index, probability)`.
    pub boundary_randomization: Option<Vec<(usize, f64)>>,
    /// `|E_{μ₊}[g] − E_{μ₋}[g]|` with randomization applied.
    pub parity_gap: f64,
    /// Same for the deterministic map alone.
    pub parity_gap_deterministic: f64,
    /// `E_μ[g(X)(y − η(X))]` with randomization applied.
    pub surrogate_risk: f64,
    /// Cost-sensitive risk, only for binary labels.
    pub risk: Option<f64>,
}

impl ThresholdClassifier {
    /// Acceptance probability per atom, randomization included.
    pub fn acceptance(&self) -> Vec<f64> {
        let mut p: Vec<f64> = self
            .accept
            .iter()
            .map(|&a| if a { 1.0 } else { 0.0 })
            .collect();
        if let Some(r) = &self.boundary_randomization {
            for &(k, q) in r {
                p[k] = q;
            }
        }
        p
    }
}

/// `E_μ[g(X)(y − η(X))]` for acceptance probabilities `g`.
pub fn surrogate_risk(inst: &FairInstance, y: f64, g: &[f64]) -> f64 {
    inst.atoms
        .iter()
        .zip(g)
        .map(|(a, &p)| a.mu * p * (y - a.eta))
        .sum()
}

/// `y·P(Y=0, g=1) + (1−y)·P(Y=1, g=0)` for binary labels.
pub fn cost_sensitive_risk(inst: &FairInstance, y: f64, g: &[f64]) -> f64 {
    let mean_eta: f64 = inst.atoms.iter().map(|a| a.mu * a.eta).sum();
    surrogate_risk(inst, y, g) + (1.0 - y) * mean_eta
}

/// `|E_{μ₊}[g] − E_{μ₋}[g]|`.
pub fn parity_gap(inst: &FairInstance, g: &[f64]) -> f64 {
    let (p, m) = inst
        .atoms
        .iter()
        .zip(g)
        .fold((0.0, 0.0), |(p, m), (a, &q)| {
            (p + a.mu_plus * q, m + a.mu_minus * q)
        });
    (p - m).abs()
}

fn as_probs(accept: &[bool]) -> Vec<f64> {
    accept.iter().map(|&a| if a { 1.0 } else { 0.0 }).collect()
}

/// Optimal fair classifier at `y`, randomizing the crossing points when no
/// deterministic threshold attains parity.
///
/// Inside the parity set the slope is 0 when that is admissible (the Bayes
/// rule is then fair), otherwise `κ⁺` when attained, otherwise the middle of
/// the rightmost parity piece.
pub fn optimal_fair_classifier(inst: &FairInstance, y: f64) -> ThresholdClassifier {
    let Located {
        interval,
        scan,
        last,
        ..
    } = locate(inst, y);
    let (kappa, randomization) = if interval.is_exact() {
        let kappa = if interval.contains(0.0) && parity_function(inst, 0.0, y).abs() <= ZERO_TOL {
            0.0
        } else if interval.plus_attained {
            interval.kappa_plus
        } else {
            scan.inside(last)
        };
        (kappa, None)
    } else {
        let b = interval.kappa_plus;
        let (mut alpha, mut beta, mut p_open, mut m_open) = (0.0, 0.0, 0.0, 0.0);
        for a in &inst.atoms {
            match a.side {
                Side::Plus => {
                    let r = ratio(a, y);
                    if r == b {
                        alpha += a.mu_plus;
                    } else if r > b {
                        p_open += a.mu_plus;
                    }
                }
                Side::Minus => {
                    let r = ratio(a, y);
                    if r == b {
                        beta += a.mu_minus;
                    } else if r < b {
                        m_open += a.mu_minus;
                    }
                }
                Side::Eq => {}
            }
        }
        let d = m_open - p_open;
        let (tp, tm) = if d >= 0.0 {
            ((d / alpha).min(1.0), 0.0)
        } else {
            (0.0, (-d / beta).min(1.0))
        };
        let rand: Vec<(usize, f64)> = inst
            .atoms
            .iter()
            .enumerate()
            .filter(|(_, a)| a.side != Side::Eq && ratio(a, y) == b)
            .map(|(k, a)| (k, if a.side == Side::Plus { tp } else { tm }))
            .collect();
        (b, Some(rand))
    };

    let accept = threshold_map(inst, y, kappa);
    let det = as_probs(&accept);
    let mut out = ThresholdClassifier {
        y,
        kappa,
        interval,
        accept,
        boundary_randomization: randomization,
        parity_gap: 0.0,
        parity_gap_deterministic: parity_gap(inst, &det),
        surrogate_risk: 0.0,
        risk: None,
    };
    let g = out.acceptance();
    out.parity_gap = parity_gap(inst, &g);
    out.surrogate_risk = surrogate_risk(inst, y, &g);
    out.risk = inst.y_binary.then(|| cost_sensitive_risk(inst, y, &g));
    out
}

/// Optimum of the one-constraint linear program
/// `min E_μ[g(X)(y − η(X))]` subject to `E_{μ₊}[g] = E_{μ₋}[g]`, `0 ≤ g ≤ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpOptimum {
    pub optimal_risk: f64,
    pub acceptance: Vec<f64>,
    /// Optimal multiplier of the parity constraint.
    pub multiplier: f64,
}

/// Solves the linear program through its dual: the maximal gain equals
/// `min_λ Σ₊ μ₊(r − λ)⁺ + Σ₋ μ₋(λ − r)⁺ + Σ₌ μ(η − y)⁺`, a convex piecewise
/// linear function minimized at one of the ratios. The primal is rebuilt by
/// complementary slackness.
pub fn lp_oracle(inst: &FairInstance, y: f64) -> Result<LpOptimum> {
    if inst.len() > LP_ORACLE_MAX {
        return Err(Error::OracleDomain(format!(
            "support has {} points, limit {LP_ORACLE_MAX}",
            inst.len()
        )));
    }
    let eq_gain: f64 = inst
        .side_atoms(Side::Eq)
        .map(|a| a.mu * (a.eta - y).max(0.0))
        .sum();
    let dual = |lambda: f64| -> f64 {
        inst.atoms
            .iter()
            .map(|a| match a.side {
                Side::Plus => a.mu_plus * (ratio(a, y) - lambda).max(0.0),
                Side::Minus => a.mu_minus * (lambda - ratio(a, y)).max(0.0),
                Side::Eq => 0.0,
            })
            .sum::<f64>()
            + eq_gain
    };
    let mut breaks: Vec<f64> = inst
        .atoms
        .iter()
        .filter(|a| a.side != Side::Eq)
        .map(|a| ratio(a, y))
        .collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    if breaks.is_empty() {
        return Err(Error::MeasuresCoincide);
    }
    let values: Vec<f64> = breaks.iter().map(|&l| dual(l)).collect();
    let gain = values.iter().copied().fold(f64::INFINITY, f64::min);

    let plus_above = |t: f64| {
        inst.side_atoms(Side::Plus)
            .filter(|a| ratio(a, y) > t)
            .map(|a| a.mu_plus)
            .sum::<f64>()
    };
    let minus_below = |t: f64| {
        inst.side_atoms(Side::Minus)
            .filter(|a| ratio(a, y) < t)
            .map(|a| a.mu_minus)
            .sum::<f64>()
    };
    let tied = |side: Side, t: f64| {
        inst.side_atoms(side)
            .filter(|a| ratio(a, y) == t)
            .map(|a| a.mu_plus + a.mu_minus)
            .sum::<f64>()
    };

    // Ratios equal in exact arithmetic may differ by rounding, so every
    // near-minimal breakpoint is tried until the tied points can balance.
    let mut order: Vec<usize> = (0..breaks.len())
        .filter(|&k| values[k] <= gain + ZERO_TOL)
        .collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let (lambda, p_open, m_open, alpha, beta) = order
        .iter()
        .map(|&k| {
            let l = breaks[k];
            (
                l,
                plus_above(l),
                minus_below(l),
                tied(Side::Plus, l),
                tied(Side::Minus, l),
            )
        })
        .find(|&(_, p, m, al, be)| m - p <= al + ZERO_TOL && p - m <= be + ZERO_TOL)
        .ok_or_else(|| Error::Internal("no balanced breakpoint at the dual minimum".into()))?;

    let mut g = vec![0.0; inst.len()];
    for (idx, a) in inst.atoms.iter().enumerate() {
        if a.side == Side::Eq && a.eta >= y {
            g[idx] = 1.0;
        }
    }
    // fill the tied points so that both sides accept the same mass
    let d = m_open - p_open;
    let (tp, tm) = if d >= 0.0 {
        let tp = if alpha > 0.0 {
            (d / alpha).min(1.0)
        } else {
            0.0
        };
        let rest = tp * alpha - d;
        (
            tp,
            if beta > 0.0 {
                (rest / beta).clamp(0.0, 1.0)
            } else {
                0.0
            },
        )
    } else {
        let tm = if beta > 0.0 {
            (-d / beta).min(1.0)
        } else {
            0.0
        };
        let rest = tm * beta + d;
        (
            if alpha > 0.0 {
                (rest / alpha).clamp(0.0, 1.0)
            } else {
                0.0
            },
            tm,
        )
    };
    for (idx, a) in inst.atoms.iter().enumerate() {
        let r = ratio(a, y);
        match a.side {
            Side::Plus if r > lambda => g[idx] = 1.0,
            Side::Minus if r < lambda => g[idx] = 1.0,
            Side::Plus if r == lambda => g[idx] = tp,
            Side::Minus if r == lambda => g[idx] = tm,
            _ => {}
        }
    }
    Ok(LpOptimum {
        optimal_risk: -gain,
        acceptance: g,
        multiplier: lambda,
    })
}
