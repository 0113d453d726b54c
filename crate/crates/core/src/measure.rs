//! Discrete measures over opaque points and over the real line.
//!
//! [`DiscreteMeasure`] carries weights on identifiers (feature values, Ω-atoms),
//! [`RealMeasure1D`] carries weights on sorted real values and provides the
//! c.d.f./quantile pair together with the one-dimensional distances used by
//! the reports (Kolmogorov and Wasserstein-1).

use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance within which a probability measure is renormalized
/// instead of rejected.
pub const RENORMALIZE_TOL: f64 = 1e-9;

/// Opaque point identifier.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointId(pub String);

impl PointId {
    pub fn new(id: impl Into<String>) -> Self {
        PointId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for PointId {
    fn from(s: &str) -> Self {
        PointId(s.to_owned())
    }
}

impl From<String> for PointId {
    fn from(s: String) -> Self {
        PointId(s)
    }
}

/// Nonnegative weights on opaque points. Duplicate ids are merged by summing.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiscreteMeasure {
    atoms: IndexMap<PointId, f64>,
    total_mass: f64,
}

impl DiscreteMeasure {
    /// Builds a nonnegative measure; insertion order of first appearance is kept.
    pub fn new<I, P>(atoms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (P, f64)>,
        P: Into<PointId>,
    {
        let mut map: IndexMap<PointId, f64> = IndexMap::new();
        for (id, w) in atoms {
            let id = id.into();
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidMeasure(format!(
                    "weight {w} on `{id}` is not a finite nonnegative number"
                )));
            }
            *map.entry(id).or_insert(0.0) += w;
        }
        let total_mass = map.values().sum();
        Ok(DiscreteMeasure {
            atoms: map,
            total_mass,
        })
    }

    /// Builds a probability measure, renormalizing when the total is within
    /// [`RENORMALIZE_TOL`] of one.
    pub fn probability<I, P>(atoms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (P, f64)>,
        P: Into<PointId>,
    {
        let mut m = Self::new(atoms)?;
        if (m.total_mass - 1.0).abs() > RENORMALIZE_TOL {
            return Err(Error::InvalidMeasure(format!(
                "total mass {} is not 1 (tolerance {RENORMALIZE_TOL})",
                m.total_mass
            )));
        }
        m.rescale(1.0 / m.total_mass);
        Ok(m)
    }

    fn rescale(&mut self, factor: f64) {
        for w in self.atoms.values_mut() {
            *w *= factor;
        }
        self.total_mass = self.atoms.values().sum();
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Weight of `id`, zero when absent.
    pub fn weight(&self, id: &PointId) -> f64 {
        self.atoms.get(id).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PointId, f64)> + '_ {
        self.atoms.iter().map(|(k, &w)| (k, w))
    }

    /// Ids carrying strictly positive weight.
    pub fn support(&self) -> impl Iterator<Item = &PointId> + '_ {
        self.atoms.iter().filter(|(_, &w)| w > 0.0).map(|(k, _)| k)
    }
}

/// Weights on real values, sorted strictly ascending after exact merging.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RealMeasure1D {
    atoms: Vec<(f64, f64)>,
}

impl RealMeasure1D {
    /// Sorts by value and merges exactly equal values. Zero weights are dropped.
    pub fn new<I>(atoms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let mut v: Vec<(f64, f64)> = Vec::new();
        for (x, w) in atoms {
            if !x.is_finite() {
                return Err(Error::InvalidMeasure(format!(
                    "atom value {x} is not finite"
                )));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidMeasure(format!(
                    "weight {w} at {x} is not a finite nonnegative number"
                )));
            }
            if w > 0.0 {
                v.push((x, w));
            }
        }
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(v.len());
        for (x, w) in v {
            match merged.last_mut() {
                Some(last) if last.0 == x => last.1 += w,
                _ => merged.push((x, w)),
            }
        }
        Ok(RealMeasure1D { atoms: merged })
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|(x, w)| x * w).sum::<f64>() / self.total_mass()
    }

    /// Right-continuous c.d.f. `ν((−∞, t])`.
    pub fn cdf(&self, t: f64) -> f64 {
        let k = self.atoms.partition_point(|a| a.0 <= t);
        self.atoms[..k].iter().map(|a| a.1).sum()
    }

    /// Generalized inverse `inf{t : cdf(t) ≥ q}`.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::QuantileLevel(q));
        }
        let first = self
            .atoms
            .first()
            .ok_or_else(|| Error::InvalidMeasure("quantile of an empty measure".into()))?;
        if q == 0.0 {
            return Ok(first.0);
        }
        let mut acc = 0.0;
        for &(x, w) in &self.atoms {
            acc += w;
            if acc >= q {
                return Ok(x);
            }
        }
        // rounding in the cumulative sum can leave acc a hair below q = 1
        Ok(self.atoms[self.atoms.len() - 1].0)
    }

    /// Value whose probability interval contains the level `u`, with `u` taken
    /// strictly inside a jump; avoids the rounding sensitivity of `quantile`
    /// at exact jump heights.
    pub fn quantile_interior(&self, u: f64) -> f64 {
        let mut acc = 0.0;
        for &(x, w) in &self.atoms {
            acc += w;
            if u < acc {
                return x;
            }
        }
        self.atoms[self.atoms.len() - 1].0
    }

    /// Kolmogorov distance `sup_t |F(t) − G(t)|`.
    pub fn kolmogorov(&self, other: &RealMeasure1D) -> f64 {
        let (mut i, mut j) = (0, 0);
        let (mut fa, mut fb) = (0.0f64, 0.0f64);
        let mut best: f64 = 0.0;
        while i < self.atoms.len() || j < other.atoms.len() {
            let xa = self.atoms.get(i).map_or(f64::INFINITY, |a| a.0);
            let xb = other.atoms.get(j).map_or(f64::INFINITY, |a| a.0);
            let x = xa.min(xb);
            if xa == x {
                fa += self.atoms[i].1;
                i += 1;
            }
            if xb == x {
                fb += other.atoms[j].1;
                j += 1;
            }
            best = best.max((fa - fb).abs());
        }
        best
    }

    /// Wasserstein-1 distance `∫ |F − G| dt` between measures of equal mass.
    pub fn wasserstein1(&self, other: &RealMeasure1D) -> f64 {
        let (mut i, mut j) = (0, 0);
        let (mut fa, mut fb) = (0.0f64, 0.0f64);
        let mut prev: Option<f64> = None;
        let mut acc = 0.0;
        while i < self.atoms.len() || j < other.atoms.len() {
            let xa = self.atoms.get(i).map_or(f64::INFINITY, |a| a.0);
            let xb = other.atoms.get(j).map_or(f64::INFINITY, |a| a.0);
            let x = xa.min(xb);
            if let Some(p) = prev {
                acc += (fa - fb).abs() * (x - p);
            }
            if xa == x {
                fa += self.atoms[i].1;
                i += 1;
            }
            if xb == x {
                fb += other.atoms[j].1;
                j += 1;
            }
            prev = Some(x);
        }
        acc
    }
}

/// Image measure of `m` under `f`; atoms landing on the same value are merged.
pub fn pushforward<F>(m: &DiscreteMeasure, f: F) -> Result<RealMeasure1D>
where
    F: Fn(&PointId) -> Option<f64>,
{
    let mut image = Vec::with_capacity(m.len());
    for (id, w) in m.iter() {
        let v = f(id).ok_or_else(|| Error::UndefinedMap(id.to_string()))?;
        image.push((v, w));
    }
    RealMeasure1D::new(image)
}

/// Scaled Jordan decomposition of `μ₁ − μ₂`.
#[derive(Debug, Clone)]
pub struct JordanDecomposition {
    /// `(μ₁ − μ₂)₊ / m`
    pub plus: DiscreteMeasure,
    /// `(μ₁ − μ₂)₋ / m`
    pub minus: DiscreteMeasure,
    /// Common mass of the two parts.
    pub mass: f64,
}

/// Splits `μ₁ − μ₂` atomwise into its positive and negative parts and
/// rescales both to probability measures. Fails when the difference vanishes.
pub fn jordan_decompose(
    mu1: &DiscreteMeasure,
    mu2: &DiscreteMeasure,
) -> Result<JordanDecomposition> {
    jordan_decompose_tol(mu1, mu2, 0.0)
}

/// As [`jordan_decompose`], but atoms with `|μ₁(x) − μ₂(x)| ≤ rel_tol · max(μ₁(x), μ₂(x))`
/// are treated as balanced.
pub fn jordan_decompose_tol(
    mu1: &DiscreteMeasure,
    mu2: &DiscreteMeasure,
    rel_tol: f64,
) -> Result<JordanDecomposition> {
    let mut ids: IndexMap<&PointId, ()> = IndexMap::new();
    for (id, _) in mu1.iter().chain(mu2.iter()) {
        ids.insert(id, ());
    }
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for (id, _) in ids {
        let (a, b) = (mu1.weight(id), mu2.weight(id));
        let diff = a - b;
        if diff.abs() <= rel_tol * a.max(b) {
            continue;
        }
        if diff > 0.0 {
            plus.push((id.clone(), diff));
        } else if diff < 0.0 {
            minus.push((id.clone(), -diff));
        }
    }
    let mass_plus: f64 = plus.iter().map(|a| a.1).sum();
    let mass_minus: f64 = minus.iter().map(|a| a.1).sum();
    if mass_plus <= 0.0 || mass_minus <= 0.0 {
        return Err(Error::MeasuresCoincide);
    }
    // both parts carry the same mass up to rounding; average the two sums
    let mass = 0.5 * (mass_plus + mass_minus);
    let plus = DiscreteMeasure::new(plus.into_iter().map(|(id, w)| (id, w / mass_plus)))?;
    let minus = DiscreteMeasure::new(minus.into_iter().map(|(id, w)| (id, w / mass_minus)))?;
    Ok(JordanDecomposition { plus, minus, mass })
}
