//! Finite fair-learning instances.
//!
//! A [`RawInstance`] lists weighted `(x, s, y)` records. [`derive`] turns it
//! into a [`FairInstance`]: group priors, group marginals, the Bayes function
//! η, the scaled Jordan decomposition of `μ₁ − μ₂`, the signed density Δ and
//! the Ω-measures (laws of `(η, Δ)` under `μ₊` and `μ₋`). [`instantiate`]
//! goes the other way and builds an instance with prescribed Ω-measures.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::measure::{jordan_decompose_tol, DiscreteMeasure, PointId, RENORMALIZE_TOL};
use crate::transport::OmegaPoint;

/// Absolute slack on the Ω mass bound `a₊ + a₋ ≤ 1`.
pub const MASS_BOUND_TOL: f64 = 1e-12;

/// Relative gap below which `μ₁(x)` and `μ₂(x)` count as equal, so that
/// rounding in the group priors cannot move a point off `X₌`.
pub const GROUP_TIE_TOL: f64 = 1e-12;

/// One weighted observation of `(X, S, Y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub x: PointId,
    pub s: u8,
    pub y: f64,
    pub p: f64,
}

impl Record {
    pub fn new(x: impl Into<PointId>, s: u8, y: f64, p: f64) -> Self {
        Record {
            x: x.into(),
            s,
            y,
            p,
        }
    }
}

/// A finite joint law of `(X, S, Y)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RawInstance {
    pub records: Vec<Record>,
}

impl RawInstance {
    pub fn new(records: Vec<Record>) -> Self {
        RawInstance { records }
    }

    pub fn validate(&self) -> Result<()> {
        if self.records.is_empty() {
            return Err(Error::InvalidInstance("no records".into()));
        }
        for r in &self.records {
            if r.s != 1 && r.s != 2 {
                return Err(Error::InvalidInstance(format!(
                    "record for `{}` has group {} (expected 1 or 2)",
                    r.x, r.s
                )));
            }
            if !r.y.is_finite() {
                return Err(Error::InvalidInstance(format!(
                    "record for `{}` has non-finite y",
                    r.x
                )));
            }
            if !r.p.is_finite() || r.p < 0.0 {
                return Err(Error::InvalidInstance(format!(
                    "record for `{}` has weight {}",
                    r.x, r.p
                )));
            }
        }
        let total: f64 = self.records.iter().map(|r| r.p).sum();
        if (total - 1.0).abs() > RENORMALIZE_TOL {
            return Err(Error::InvalidInstance(format!(
                "record weights sum to {total}, expected 1"
            )));
        }
        for s in [1u8, 2] {
            if self
                .records
                .iter()
                .filter(|r| r.s == s)
                .map(|r| r.p)
                .sum::<f64>()
                <= 0.0
            {
                return Err(Error::InvalidInstance(format!("group {s} has zero mass")));
            }
        }
        Ok(())
    }
}

/// Cell of the partition `X₊ / X₋ / X₌`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Plus,
    Minus,
    Eq,
}

/// Everything known about one support point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportAtom {
    pub id: PointId,
    pub mu: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub eta: f64,
    pub delta: f64,
    pub side: Side,
    /// `μ₊({x})`, zero off `X₊`.
    pub mu_plus: f64,
    /// `μ₋({x})`, zero off `X₋`.
    pub mu_minus: f64,
    /// Index into `omega_plus` or `omega_minus` (by side); `None` on `X₌`.
    pub omega: Option<usize>,
}

impl SupportAtom {
    pub fn point(&self) -> OmegaPoint {
        OmegaPoint::new(self.eta, self.delta)
    }

    /// Weight under the measure of its own side (`μ₊` or `μ₋`).
    pub fn side_mass(&self) -> f64 {
        self.mu_plus + self.mu_minus
    }
}

/// An Ω-plane atom `(h, d)` with weight `w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaAtom {
    pub h: f64,
    pub d: f64,
    pub w: f64,
}

impl OmegaAtom {
    pub fn new(h: f64, d: f64, w: f64) -> Self {
        OmegaAtom { h, d, w }
    }

    pub fn point(&self) -> OmegaPoint {
        OmegaPoint::new(self.h, self.d)
    }
}

/// A validated instance with all derived quantities.
#[derive(Debug, Clone)]
pub struct FairInstance {
    pub raw: RawInstance,
    pub atoms: Vec<SupportAtom>,
    pub p1: f64,
    pub p2: f64,
    pub mu: DiscreteMeasure,
    pub mu1: DiscreteMeasure,
    pub mu2: DiscreteMeasure,
    /// Common mass of the two Jordan parts.
    pub jordan_mass: f64,
    pub mu_plus: DiscreteMeasure,
    pub mu_minus: DiscreteMeasure,
    pub omega_plus: Vec<OmegaAtom>,
    pub omega_minus: Vec<OmegaAtom>,
    pub y_binary: bool,
    /// Uniform multiplier applied to the d-coordinate at construction;
    /// unscaled slopes are `ρ · κ`.
    pub d_scale: f64,
    index: HashMap<PointId, usize>,
}

impl FairInstance {
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atom(&self, id: &PointId) -> Option<&SupportAtom> {
        self.index.get(id).map(|&k| &self.atoms[k])
    }

    pub fn position(&self, id: &PointId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn eta(&self, id: &PointId) -> Option<f64> {
        self.atom(id).map(|a| a.eta)
    }

    pub fn delta(&self, id: &PointId) -> Option<f64> {
        self.atom(id).map(|a| a.delta)
    }

    pub fn side_atoms(&self, side: Side) -> impl Iterator<Item = &SupportAtom> + '_ {
        self.atoms.iter().filter(move |a| a.side == side)
    }

    /// `μ(X₊) + μ(X₋)`, equal to `∫|d|⁻¹ d𝝁₊ + ∫|d|⁻¹ d𝝁₋`.
    pub fn mass_bound_total(&self) -> f64 {
        self.atoms
            .iter()
            .filter(|a| a.side != Side::Eq)
            .map(|a| a.mu)
            .sum()
    }

    /// True when every point is observed in exactly one group.
    pub fn is_awareness(&self) -> bool {
        self.atoms.iter().all(|a| (a.mu1 > 0.0) != (a.mu2 > 0.0))
    }

    /// True when `ℙ(S = s | X = x) ∈ (0, 1)` at every support point.
    pub fn has_overlap(&self) -> bool {
        self.atoms.iter().all(|a| a.mu1 > 0.0 && a.mu2 > 0.0)
    }

    /// Converts an instance-coordinate slope to unscaled coordinates.
    pub fn kappa_unscaled(&self, kappa: f64) -> f64 {
        self.d_scale * kappa
    }

    pub fn omega(&self, side: Side) -> &[OmegaAtom] {
        match side {
            Side::Plus => &self.omega_plus,
            Side::Minus => &self.omega_minus,
            Side::Eq => &[],
        }
    }
}

/// Computes every derived field of a raw instance exactly.
pub fn derive(raw: &RawInstance) -> Result<FairInstance> {
    derive_scaled(raw, 1.0)
}

fn derive_scaled(raw: &RawInstance, d_scale: f64) -> Result<FairInstance> {
    raw.validate()?;
    let total: f64 = raw.records.iter().map(|r| r.p).sum();

    // per point: (mass in group 1, mass in group 2, Σ p·y)
    let mut order: Vec<PointId> = Vec::new();
    let mut acc: HashMap<PointId, (f64, f64, f64)> = HashMap::new();
    for r in &raw.records {
        let p = r.p / total;
        let e = acc.entry(r.x.clone()).or_insert_with(|| {
            order.push(r.x.clone());
            (0.0, 0.0, 0.0)
        });
        if r.s == 1 {
            e.0 += p;
        } else {
            e.1 += p;
        }
        e.2 += p * r.y;
    }
    order.retain(|id| {
        let e = acc[id];
        e.0 + e.1 > 0.0
    });
    let p1: f64 = order.iter().map(|id| acc[id].0).sum();
    let p2: f64 = order.iter().map(|id| acc[id].1).sum();

    let mu = DiscreteMeasure::new(order.iter().map(|id| (id.clone(), acc[id].0 + acc[id].1)))?;
    let mu1 = DiscreteMeasure::new(order.iter().map(|id| (id.clone(), acc[id].0 / p1)))?;
    let mu2 = DiscreteMeasure::new(order.iter().map(|id| (id.clone(), acc[id].1 / p2)))?;
    let jordan = jordan_decompose_tol(&mu1, &mu2, GROUP_TIE_TOL)?;

    let mut atoms = Vec::with_capacity(order.len());
    for id in &order {
        let (a1, a2, sy) = acc[id];
        let m = a1 + a2;
        let mp = jordan.plus.weight(id);
        let mm = jordan.minus.weight(id);
        let (side, delta) = if mp > 0.0 {
            (Side::Plus, mp / m)
        } else if mm > 0.0 {
            (Side::Minus, -mm / m)
        } else {
            (Side::Eq, 0.0)
        };
        atoms.push(SupportAtom {
            id: id.clone(),
            mu: m,
            mu1: a1 / p1,
            mu2: a2 / p2,
            eta: sy / m,
            delta,
            side,
            mu_plus: mp,
            mu_minus: mm,
            omega: None,
        });
    }

    let omega_plus = collect_omega(&mut atoms, Side::Plus);
    let omega_minus = collect_omega(&mut atoms, Side::Minus);
    let y_binary = raw
        .records
        .iter()
        .filter(|r| r.p > 0.0)
        .all(|r| r.y == 0.0 || r.y == 1.0);
    let index = atoms
        .iter()
        .enumerate()
        .map(|(k, a)| (a.id.clone(), k))
        .collect();

    Ok(FairInstance {
        raw: raw.clone(),
        atoms,
        p1,
        p2,
        mu,
        mu1,
        mu2,
        jordan_mass: jordan.mass,
        mu_plus: jordan.plus,
        mu_minus: jordan.minus,
        omega_plus,
        omega_minus,
        y_binary,
        d_scale,
        index,
    })
}

fn omega_key(h: f64, d: f64) -> (u64, u64) {
    (h.to_bits(), d.to_bits())
}

/// Merges atoms of one side by exact `(η, Δ)` and sorts the result by `(h, d)`.
fn collect_omega(atoms: &mut [SupportAtom], side: Side) -> Vec<OmegaAtom> {
    let mut merged: Vec<OmegaAtom> = Vec::new();
    let mut slot: HashMap<(u64, u64), usize> = HashMap::new();
    for a in atoms.iter().filter(|a| a.side == side) {
        let k = *slot.entry(omega_key(a.eta, a.delta)).or_insert_with(|| {
            merged.push(OmegaAtom::new(a.eta, a.delta, 0.0));
            merged.len() - 1
        });
        merged[k].w += a.side_mass();
    }
    let mut perm: Vec<usize> = (0..merged.len()).collect();
    perm.sort_by(|&i, &j| cmp_hd(&merged[i], &merged[j]));
    let mut rank = vec![0; merged.len()];
    for (r, &k) in perm.iter().enumerate() {
        rank[k] = r;
    }
    for a in atoms.iter_mut().filter(|a| a.side == side) {
        a.omega = Some(rank[slot[&omega_key(a.eta, a.delta)]]);
    }
    perm.into_iter().map(|k| merged[k]).collect()
}

fn cmp_hd(a: &OmegaAtom, b: &OmegaAtom) -> Ordering {
    a.h.total_cmp(&b.h).then(a.d.total_cmp(&b.d))
}

/// Scaling rule for the d-coordinate of an [`OmegaSpec`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DScale {
    /// `ρ = a₊ + a₋` computed at unit scale, so that the scaled total is 1.
    Auto,
    Fixed(f64),
}

impl Serialize for DScale {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            DScale::Auto => s.serialize_str("auto"),
            DScale::Fixed(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for DScale {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Number(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(DScale::Fixed(v)),
            Repr::Text(t) if t.eq_ignore_ascii_case("auto") => Ok(DScale::Auto),
            Repr::Text(t) => Err(serde::de::Error::custom(format!(
                "d_scale must be a number or \"auto\", got \"{t}\""
            ))),
        }
    }
}

impl Default for DScale {
    fn default() -> Self {
        DScale::Auto
    }
}

/// Prescribed Ω-measures for [`instantiate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaSpec {
    pub mu_plus: Vec<OmegaAtom>,
    pub mu_minus: Vec<OmegaAtom>,
    #[serde(default)]
    pub d_scale: DScale,
}

impl OmegaSpec {
    pub fn new(mu_plus: Vec<OmegaAtom>, mu_minus: Vec<OmegaAtom>, d_scale: DScale) -> Self {
        OmegaSpec {
            mu_plus,
            mu_minus,
            d_scale,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, list, sign) in [
            ("mu_plus", &self.mu_plus, 1.0),
            ("mu_minus", &self.mu_minus, -1.0),
        ] {
            if list.is_empty() {
                return Err(Error::InvalidInstance(format!("{name} has no atoms")));
            }
            for a in list.iter() {
                if !a.h.is_finite() || !a.d.is_finite() || !a.w.is_finite() || a.w < 0.0 {
                    return Err(Error::InvalidInstance(format!(
                        "{name} atom ({}, {}, {}) is not finite",
                        a.h, a.d, a.w
                    )));
                }
                if a.d * sign <= 0.0 {
                    return Err(Error::InvalidInstance(format!(
                        "{name} atom has d = {} of the wrong sign",
                        a.d
                    )));
                }
            }
            let total: f64 = list.iter().map(|a| a.w).sum();
            if (total - 1.0).abs() > RENORMALIZE_TOL {
                return Err(Error::InvalidInstance(format!(
                    "{name} weights sum to {total}, expected 1"
                )));
            }
        }
        if let DScale::Fixed(r) = self.d_scale {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::InvalidInstance(format!(
                    "d_scale {r} is not a positive number"
                )));
            }
        }
        Ok(())
    }

    /// `a₊ + a₋ = Σ w/|d|` over both lists, at unit scale.
    pub fn unit_mass_total(&self) -> f64 {
        [&self.mu_plus, &self.mu_minus]
            .iter()
            .map(|list| {
                let t: f64 = list.iter().map(|a| a.w).sum();
                list.iter().map(|a| a.w / t / a.d.abs()).sum::<f64>()
            })
            .sum()
    }

    /// The scale ρ that [`instantiate`] will apply.
    pub fn resolved_scale(&self) -> f64 {
        match self.d_scale {
            DScale::Auto => self.unit_mass_total(),
            DScale::Fixed(r) => r,
        }
    }
}

/// Builds an instance whose Ω-measures are the (scaled) atoms of `spec`.
///
/// Points carry `μ(x) = w/|d|`, an extra zero-density point takes the
/// remaining mass, `μ₁ = (1 + c·d/2)μ`, `μ₂ = (1 − c·d/2)μ` with
/// `c = 1/max|d|`, both groups have prior ½, and `Y = h` deterministically.
pub fn instantiate(spec: &OmegaSpec) -> Result<FairInstance> {
    spec.validate()?;
    let rho = spec.resolved_scale();
    // duplicates are merged up front: two points with equal (h, d) could
    // otherwise derive slightly different Δ and stay apart
    let renorm = |list: &[OmegaAtom]| -> Vec<OmegaAtom> {
        let t: f64 = list.iter().map(|a| a.w).sum();
        let mut out: Vec<OmegaAtom> = Vec::with_capacity(list.len());
        let mut slot: HashMap<(u64, u64), usize> = HashMap::new();
        for a in list {
            let k = *slot.entry(omega_key(a.h, a.d)).or_insert_with(|| {
                out.push(OmegaAtom::new(a.h, a.d * rho, 0.0));
                out.len() - 1
            });
            out[k].w += a.w / t;
        }
        out
    };
    let plus = renorm(&spec.mu_plus);
    let minus = renorm(&spec.mu_minus);
    let total: f64 = plus.iter().chain(&minus).map(|a| a.w / a.d.abs()).sum();
    if total > 1.0 + MASS_BOUND_TOL {
        return Err(Error::MassBound { total });
    }
    let eq_mass = if total >= 1.0 - MASS_BOUND_TOL {
        0.0
    } else {
        1.0 - total
    };
    let c = 1.0
        / plus
            .iter()
            .chain(&minus)
            .map(|a| a.d.abs())
            .fold(0.0, f64::max);

    let mut records = Vec::with_capacity(2 * (plus.len() + minus.len()) + 2);
    let mut push = |id: String, h: f64, d: f64, mu: f64| {
        let mu1 = (1.0 + c * d / 2.0) * mu;
        let mu2 = (1.0 - c * d / 2.0) * mu;
        records.push(Record::new(id.clone(), 1, h, 0.5 * mu1));
        records.push(Record::new(id, 2, h, 0.5 * mu2));
    };
    for (k, a) in plus.iter().enumerate() {
        push(format!("p{k}"), a.h, a.d, a.w / a.d.abs());
    }
    for (k, a) in minus.iter().enumerate() {
        push(format!("m{k}"), a.h, a.d, a.w / a.d.abs());
    }
    if eq_mass > 0.0 {
        push("eq".to_string(), 0.0, 0.0, eq_mass);
    }
    derive_scaled(&RawInstance::new(records), rho)
}

/// Ω-measure made of `K` horizontal segments `[a, a+1] × {d}`, each
/// discretised into `n` equal atoms at cell midpoints and weighted `1/K`.
pub fn segments(segs: &[(f64, f64)], n: usize) -> Vec<OmegaAtom> {
    let k = segs.len() as f64;
    segs.iter()
        .flat_map(|&(a, d)| {
            (0..n).map(move |i| {
                OmegaAtom::new(a + (i as f64 + 0.5) / n as f64, d, 1.0 / (k * n as f64))
            })
        })
        .collect()
}

/// Segment parameters `(a, d)` of the two worked examples, unscaled.
pub fn example_segments(which: u8) -> Result<(Vec<(f64, f64)>, Vec<(f64, f64)>)> {
    match which {
        1 => Ok((vec![(0.0, 1.0)], vec![(-1.0, -1.0)])),
        2 => Ok((
            vec![(0.0, 1.0), (-1.0, 0.5)],
            vec![(0.0, -1.0), (-6.0, -0.5)],
        )),
        _ => Err(Error::InvalidInstance(format!(
            "unknown example {which} (expected 1 or 2)"
        ))),
    }
}

/// Spec of example 1 or 2 with `n` atoms per segment and automatic scaling.
pub fn example_spec(which: u8, n: usize) -> Result<OmegaSpec> {
    if n < 2 {
        return Err(Error::InvalidInstance(format!(
            "need at least 2 atoms per segment, got {n}"
        )));
    }
    let (p, m) = example_segments(which)?;
    Ok(OmegaSpec::new(
        segments(&p, n),
        segments(&m, n),
        DScale::Auto,
    ))
}

pub fn gen_example(which: u8, n: usize) -> Result<FairInstance> {
    instantiate(&example_spec(which, n)?)
}

/// Free-form string metadata attached to instance files.
pub type Metadata = BTreeMap<String, String>;
