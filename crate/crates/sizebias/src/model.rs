//! Exact finite probability distributions over nonnegative vectors, their
//! moments, and analytic size biasing in a coordinate direction.
//!
//! Everything here is exact rational arithmetic; floats never enter. The
//! defining identity of directional size biasing,
//! `E[W_i f(W)] = mu_i E[f(W^i)]`, therefore holds as rational *equality*
//! for the output of [`Pmf::size_bias`], and tests assert it as such.

use std::collections::BTreeMap;

use num::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid_pmf, Error};
use crate::rational::{self, Rat};

/// Exact finite joint distribution of a nonnegative random vector.
///
/// Atoms are canonicalized at construction: value vectors are sorted
/// lexicographically and duplicates are merged by summing probability, so
/// structural equality decides distributional equality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pmf {
    k: usize,
    atoms: Vec<(Vec<Rat>, Rat)>,
}

/// Exact first and second moments of a [`Pmf`], per coordinate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentSummary {
    /// Coordinate means, all strictly positive.
    pub mu: Vec<Rat>,
    /// Coordinate variances, all strictly positive.
    pub sigma2: Vec<Rat>,
    /// The smallest coordinate variance.
    pub sigma_min2: Rat,
}

impl Pmf {
    /// Builds a pmf from `(value vector, probability)` atoms, canonicalizing
    /// and validating: dimension `k >= 1`, coordinates nonnegative, merged
    /// probabilities strictly positive and summing to exactly 1.
    pub fn new(k: usize, atoms: Vec<(Vec<Rat>, Rat)>) -> Result<Self, Error> {
        if k == 0 {
            return Err(invalid_pmf("dimension k must be at least 1"));
        }
        if atoms.is_empty() {
            return Err(invalid_pmf("pmf needs at least one atom"));
        }
        let mut merged: BTreeMap<Vec<Rat>, Rat> = BTreeMap::new();
        for (x, p) in atoms {
            if x.len() != k {
                return Err(invalid_pmf(format!(
                    "atom has {} coordinates, expected {k}",
                    x.len()
                )));
            }
            if x.iter().any(|c| c < &Rat::zero()) {
                return Err(invalid_pmf("atom coordinates must be nonnegative"));
            }
            if p <= Rat::zero() {
                return Err(invalid_pmf("atom probabilities must be strictly positive"));
            }
            *merged.entry(x).or_insert_with(Rat::zero) += p;
        }
        let total: Rat = merged.values().sum();
        if !total.is_one() {
            return Err(invalid_pmf(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Pmf {
            k,
            atoms: merged.into_iter().collect(),
        })
    }

    /// Univariate convenience constructor.
    pub fn univariate(atoms: Vec<(Rat, Rat)>) -> Result<Self, Error> {
        Pmf::new(1, atoms.into_iter().map(|(x, p)| (vec![x], p)).collect())
    }

    /// Point mass at a single vector.
    pub fn point_mass(x: Vec<Rat>) -> Result<Self, Error> {
        let k = x.len();
        Pmf::new(k, vec![(x, Rat::one())])
    }

    /// A fair Bernoulli-style two-point pmf on {0, value}.
    pub fn bernoulli(p: Rat) -> Result<Self, Error> {
        if p <= Rat::zero() || p >= Rat::one() {
            return Err(invalid_pmf("bernoulli parameter must lie in (0,1)"));
        }
        Pmf::univariate(vec![(Rat::zero(), Rat::one() - p.clone()), (Rat::one(), p)])
    }

    /// Uniform distribution on the given distinct values.
    pub fn uniform(values: &[i64]) -> Result<Self, Error> {
        let n = values.len() as i64;
        Pmf::univariate(
            values
                .iter()
                .map(|&v| (rational::int(v), rational::ratio(1, n)))
                .collect(),
        )
    }

    pub fn dimension(&self) -> usize {
        self.k
    }

    /// Canonically ordered `(value vector, probability)` atoms.
    pub fn atoms(&self) -> &[(Vec<Rat>, Rat)] {
        &self.atoms
    }

    /// Probability of a single vector (zero off the support).
    pub fn prob(&self, x: &[Rat]) -> Rat {
        self.atoms
            .iter()
            .find(|(v, _)| v.as_slice() == x)
            .map(|(_, p)| p.clone())
            .unwrap_or_else(Rat::zero)
    }

    /// Exact expectation `sum_x p(x) f(x)` of a rational-valued test function.
    pub fn expect<F: Fn(&[Rat]) -> Rat>(&self, f: F) -> Rat {
        self.atoms.iter().map(|(x, p)| f(x) * p).sum()
    }

    /// Exact mean of coordinate `i` (1-based).
    pub fn mean(&self, direction: usize) -> Result<Rat, Error> {
        self.check_direction(direction)?;
        Ok(self.expect(|x| x[direction - 1].clone()))
    }

    /// Exact variance of coordinate `i` (1-based).
    pub fn variance(&self, direction: usize) -> Result<Rat, Error> {
        let mu = self.mean(direction)?;
        let second = self.expect(|x| {
            let c = &x[direction - 1];
            c * c
        });
        Ok(second - &mu * &mu)
    }

    /// Exact per-coordinate moments. Fails with
    /// [`Error::DegenerateCoordinate`] if any coordinate has zero mean or
    /// zero variance, since every downstream bound requires both positive.
    pub fn moments(&self) -> Result<MomentSummary, Error> {
        let mut mu = Vec::with_capacity(self.k);
        let mut sigma2 = Vec::with_capacity(self.k);
        for i in 1..=self.k {
            let m = self.mean(i)?;
            let v = self.variance(i)?;
            if m.is_zero() || v.is_zero() {
                return Err(Error::DegenerateCoordinate { direction: i });
            }
            mu.push(m);
            sigma2.push(v);
        }
        let sigma_min2 = sigma2.iter().min().expect("k >= 1").clone();
        Ok(MomentSummary {
            mu,
            sigma2,
            sigma_min2,
        })
    }

    /// The exact size-biased distribution in the given direction:
    /// `p^i(x) = x_i p(x) / mu_i`. Atoms with `x_i = 0` carry no biased mass
    /// and are dropped; `mu_i` already accounts for them, so the result sums
    /// to exactly 1.
    pub fn size_bias(&self, direction: usize) -> Result<Pmf, Error> {
        self.check_direction(direction)?;
        let mu = self.mean(direction)?;
        if mu.is_zero() {
            return Err(Error::DegenerateCoordinate { direction });
        }
        let atoms: Vec<(Vec<Rat>, Rat)> = self
            .atoms
            .iter()
            .filter(|(x, _)| !x[direction - 1].is_zero())
            .map(|(x, p)| (x.clone(), &x[direction - 1] * p / &mu))
            .collect();
        Pmf::new(self.k, atoms)
    }

    fn check_direction(&self, direction: usize) -> Result<(), Error> {
        if direction == 0 || direction > self.k {
            return Err(Error::DirectionOutOfRange {
                direction,
                k: self.k,
            });
        }
        Ok(())
    }

    /// Serializes to the JSON object form
    /// `{"k": ..., "atoms": [{"x": ["num/den", ...], "p": "num/den"}]}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(PmfJson::from(self)).expect("pmf serialization cannot fail")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self, Error> {
        let raw: PmfJson = serde_json::from_value(value.clone())
            .map_err(|e| invalid_pmf(format!("malformed pmf json: {e}")))?;
        raw.try_into()
    }
}

/// Wire form of [`Pmf`]; rationals travel as `"num/den"` strings so no
/// exactness is lost in transit.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct PmfJson {
    pub k: usize,
    pub atoms: Vec<PmfAtomJson>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct PmfAtomJson {
    pub x: Vec<String>,
    pub p: String,
}

impl From<&Pmf> for PmfJson {
    fn from(pmf: &Pmf) -> Self {
        PmfJson {
            k: pmf.k,
            atoms: pmf
                .atoms
                .iter()
                .map(|(x, p)| PmfAtomJson {
                    x: x.iter().map(rational::to_string).collect(),
                    p: rational::to_string(p),
                })
                .collect(),
        }
    }
}

impl TryFrom<PmfJson> for Pmf {
    type Error = Error;

    fn try_from(raw: PmfJson) -> Result<Self, Error> {
        let mut atoms = Vec::with_capacity(raw.atoms.len());
        for atom in raw.atoms {
            let x = atom
                .x
                .iter()
                .map(|s| rational::parse(s))
                .collect::<Result<Vec<_>, _>>()?;
            let p = rational::parse(&atom.p)?;
            atoms.push((x, p));
        }
        Pmf::new(raw.k, atoms)
    }
}
