//! Size-biased coupling constructions: independent coordinates, and
//! statistics of locally dependent collections of independent components.
//!
//! For a collection of independent components `C_v` and statistics
//! `W_i = W_i(C_v, v in V_i)` depending only on a neighborhood `V_i`, a
//! coupling in direction `i` is built by drawing a fresh assignment over
//! `V_i` from the tilted law `dF^i = W_i dF / E[W_i]` (materialized exactly
//! by enumerating the finite neighborhood product space), independent of
//! the original components, and re-evaluating every statistic with the
//! tilted values on `V_j ∩ V_i` and the original values elsewhere. If every
//! `W_i <= M`, the coupling moves at most the `b` statistics whose
//! neighborhoods meet `V_i`, so `||W^i - W||_2 <= sqrt(b) M`.

use num::{One, ToPrimitive, Zero};
use rand::Rng;

use crate::error::{invalid_model, Error};
use crate::model::Pmf;
use crate::rational::{self, Rat};

/// Hard cap on any exactly-enumerated product space.
pub const ENUMERATION_CAP: u128 = 1 << 20;

/// One realization of a coupled pair `(W, W^i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPair {
    pub w: Vec<f64>,
    pub w_biased: Vec<f64>,
    /// The biased direction, 1-based.
    pub direction: usize,
}

impl SampledPair {
    /// Euclidean distance between the coupled vectors.
    pub fn radius(&self) -> f64 {
        self.w
            .iter()
            .zip(&self.w_biased)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// How each statistic maps its neighborhood's component values to a
/// nonnegative rational.
#[derive(Debug, Clone, PartialEq)]
pub enum Statistic {
    /// Product of the neighborhood values.
    WindowProduct,
    /// Sum of the neighborhood values.
    WindowSum,
    /// One explicit lookup table per statistic, keyed by the neighborhood
    /// value tuple in neighborhood order. Tables must cover the full
    /// neighborhood product space.
    Table(Vec<std::collections::BTreeMap<Vec<Rat>, Rat>>),
}

/// Statistics of independent components with overlapping neighborhoods.
#[derive(Debug, Clone)]
pub struct LocalDependenceModel {
    components: Vec<Pmf>,
    neighborhoods: Vec<Vec<usize>>,
    statistic: Statistic,
    bound_m: Rat,
    tilted: Vec<TiltedLaw>,
}

/// The exactly-materialized tilted law over one neighborhood.
#[derive(Debug, Clone)]
struct TiltedLaw {
    /// `E[W_i]`, exact.
    expectation: Rat,
    /// Largest value `W_i` attains on the neighborhood space (diagnostic
    /// for how tight the supplied bound M is).
    max_value: Rat,
    /// `(assignment over V_i, tilted probability)`; empty iff E[W_i] = 0.
    atoms: Vec<(Vec<Rat>, Rat)>,
    /// Float weights aligned with `atoms`, for sampling.
    weights: Vec<f64>,
}

impl LocalDependenceModel {
    /// Validates the structure and materializes every direction's tilted
    /// law by enumerating its neighborhood product space (hard-capped; the
    /// cap is an error, never an approximation).
    pub fn new(
        components: Vec<Pmf>,
        neighborhoods: Vec<Vec<usize>>,
        statistic: Statistic,
        bound_m: Rat,
    ) -> Result<Self, Error> {
        let n = components.len();
        if n == 0 {
            return Err(invalid_model("need at least one component"));
        }
        for (v, pmf) in components.iter().enumerate() {
            if pmf.dimension() != 1 {
                return Err(invalid_model(format!(
                    "component {} must be univariate, has dimension {}",
                    v + 1,
                    pmf.dimension()
                )));
            }
        }
        if neighborhoods.is_empty() {
            return Err(invalid_model("need at least one neighborhood"));
        }
        if bound_m < Rat::zero() {
            return Err(invalid_model("bound M must be nonnegative"));
        }
        for (i, nb) in neighborhoods.iter().enumerate() {
            if nb.is_empty() {
                return Err(invalid_model(format!("neighborhood {} is empty", i + 1)));
            }
            let mut seen = std::collections::BTreeSet::new();
            for &v in nb {
                if v == 0 || v > n {
                    return Err(invalid_model(format!(
                        "neighborhood {} references component {v}, valid range 1..={n}",
                        i + 1
                    )));
                }
                if !seen.insert(v) {
                    return Err(invalid_model(format!(
                        "neighborhood {} lists component {v} twice",
                        i + 1
                    )));
                }
            }
        }
        if let Statistic::Table(tables) = &statistic {
            if tables.len() != neighborhoods.len() {
                return Err(invalid_model(format!(
                    "need one table per statistic: {} tables for {} neighborhoods",
                    tables.len(),
                    neighborhoods.len()
                )));
            }
        }

        let mut model = LocalDependenceModel {
            components,
            neighborhoods,
            statistic,
            bound_m,
            tilted: Vec::new(),
        };
        for i in 1..=model.neighborhoods.len() {
            let law = model.materialize_tilt(i)?;
            model.tilted.push(law);
        }
        Ok(model)
    }

    fn materialize_tilt(&self, direction: usize) -> Result<TiltedLaw, Error> {
        let nb = &self.neighborhoods[direction - 1];
        let space = neighborhood_space(&self.components, nb)?;
        let mut expectation = Rat::zero();
        let mut max_value = Rat::zero();
        let mut weighted = Vec::new();
        for (values, prob) in space {
            let w = self.statistic_value(direction, &values)?;
            if w < Rat::zero() || w > self.bound_m {
                return Err(invalid_model(format!(
                    "statistic {direction} takes value {w} outside [0, {}] on {values:?}",
                    self.bound_m
                )));
            }
            if w > max_value {
                max_value = w.clone();
            }
            expectation += &w * &prob;
            if !w.is_zero() {
                weighted.push((values, w * prob));
            }
        }
        let mut atoms = Vec::with_capacity(weighted.len());
        let mut weights = Vec::with_capacity(weighted.len());
        if !expectation.is_zero() {
            for (values, wp) in weighted {
                let p = wp / &expectation;
                weights.push(rational::to_f64(&p));
                atoms.push((values, p));
            }
        }
        Ok(TiltedLaw {
            expectation,
            max_value,
            atoms,
            weights,
        })
    }

    /// Number of statistics k.
    pub fn dimension(&self) -> usize {
        self.neighborhoods.len()
    }

    /// Number of independent components n.
    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Pmf] {
        &self.components
    }

    pub fn neighborhoods(&self) -> &[Vec<usize>] {
        &self.neighborhoods
    }

    pub fn bound_m(&self) -> &Rat {
        &self.bound_m
    }

    /// `E[W_i]`, exact (computed on the neighborhood marginal).
    pub fn statistic_expectation(&self, direction: usize) -> Result<&Rat, Error> {
        self.check_direction(direction)?;
        Ok(&self.tilted[direction - 1].expectation)
    }

    /// Largest value statistic `i` attains; reported so callers can see how
    /// tight the supplied bound M is.
    pub fn statistic_max(&self, direction: usize) -> Result<&Rat, Error> {
        self.check_direction(direction)?;
        Ok(&self.tilted[direction - 1].max_value)
    }

    /// `Var(W_i)`, exact, from the neighborhood marginal.
    pub fn statistic_variance(&self, direction: usize) -> Result<Rat, Error> {
        self.check_direction(direction)?;
        let space = neighborhood_space(&self.components, &self.neighborhoods[direction - 1])?;
        let mean = &self.tilted[direction - 1].expectation;
        let mut second = Rat::zero();
        for (values, prob) in space {
            let w = self.statistic_value(direction, &values)?;
            second += &w * &w * prob;
        }
        Ok(second - mean * mean)
    }

    /// The exact tilted law over `V_i`, as (assignment, probability) atoms.
    pub fn tilted_atoms(&self, direction: usize) -> Result<&[(Vec<Rat>, Rat)], Error> {
        self.check_direction(direction)?;
        let law = &self.tilted[direction - 1];
        if law.expectation.is_zero() {
            return Err(Error::DegenerateCoordinate { direction });
        }
        Ok(&law.atoms)
    }

    /// `W_i` evaluated on a value tuple in neighborhood order.
    pub fn statistic_value(&self, direction: usize, values: &[Rat]) -> Result<Rat, Error> {
        match &self.statistic {
            Statistic::WindowProduct => Ok(values.iter().product()),
            Statistic::WindowSum => Ok(values.iter().sum()),
            Statistic::Table(tables) => tables[direction - 1]
                .get(values)
                .cloned()
                .ok_or_else(|| {
                    invalid_model(format!(
                        "table for statistic {direction} has no entry for {values:?}"
                    ))
                }),
        }
    }

    /// Every statistic, exactly, from a full component assignment
    /// (1-based positions).
    pub fn evaluate(&self, assignment: &[Rat]) -> Result<Vec<Rat>, Error> {
        (1..=self.dimension())
            .map(|i| {
                let values: Vec<Rat> = self.neighborhoods[i - 1]
                    .iter()
                    .map(|&v| assignment[v - 1].clone())
                    .collect();
                self.statistic_value(i, &values)
            })
            .collect()
    }

    /// Every statistic after substituting a tilted assignment over `V_i`:
    /// statistic `j` reads the tilted value for components in
    /// `V_j ∩ V_i` and the original assignment elsewhere.
    pub fn evaluate_biased(
        &self,
        assignment: &[Rat],
        direction: usize,
        tilt_values: &[Rat],
    ) -> Result<Vec<Rat>, Error> {
        self.check_direction(direction)?;
        let tilt_nb = &self.neighborhoods[direction - 1];
        (1..=self.dimension())
            .map(|j| {
                let values: Vec<Rat> = self.neighborhoods[j - 1]
                    .iter()
                    .map(|&v| match tilt_nb.iter().position(|&u| u == v) {
                        Some(pos) => tilt_values[pos].clone(),
                        None => assignment[v - 1].clone(),
                    })
                    .collect();
                self.statistic_value(j, &values)
            })
            .collect()
    }

    /// `b = max_i |{j : V_j ∩ V_i != empty}|`.
    pub fn overlap_degree(&self) -> usize {
        let k = self.dimension();
        (0..k)
            .map(|i| {
                (0..k)
                    .filter(|&j| {
                        self.neighborhoods[i]
                            .iter()
                            .any(|v| self.neighborhoods[j].contains(v))
                    })
                    .count()
            })
            .max()
            .unwrap_or(0)
    }

    /// Almost-sure coupling radius `sqrt(b) * M`.
    pub fn coupling_radius(&self) -> f64 {
        (self.overlap_degree() as f64).sqrt() * rational::to_f64(&self.bound_m)
    }

    /// Draws a full independent component assignment.
    fn draw_assignment<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Rat> {
        self.components
            .iter()
            .map(|pmf| {
                let atoms = pmf.atoms();
                let weights: Vec<f64> = atoms.iter().map(|(_, p)| rational::to_f64(p)).collect();
                atoms[sample_index(&weights, rng)].0[0].clone()
            })
            .collect()
    }

    /// Draws `(W, W^i)` per the tilted-neighborhood construction; the
    /// tilted assignment is independent of the original components.
    pub fn sample_coupling<R: Rng + ?Sized>(
        &self,
        direction: usize,
        rng: &mut R,
    ) -> Result<SampledPair, Error> {
        self.check_direction(direction)?;
        let law = &self.tilted[direction - 1];
        if law.expectation.is_zero() {
            return Err(Error::DegenerateCoordinate { direction });
        }
        let assignment = self.draw_assignment(rng);
        let tilt_idx = sample_index(&law.weights, rng);
        let tilt_values = &law.atoms[tilt_idx].0;
        let w = self.evaluate(&assignment)?;
        let w_biased = self.evaluate_biased(&assignment, direction, tilt_values)?;
        Ok(SampledPair {
            w: w.iter().map(rational::to_f64).collect(),
            w_biased: w_biased.iter().map(rational::to_f64).collect(),
            direction,
        })
    }

    /// Draws the plain statistic vector `W` (no coupling).
    pub fn sample_statistic<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>, Error> {
        let assignment = self.draw_assignment(rng);
        Ok(self.evaluate(&assignment)?.iter().map(rational::to_f64).collect())
    }

    fn check_direction(&self, direction: usize) -> Result<(), Error> {
        let k = self.dimension();
        if direction == 0 || direction > k {
            return Err(Error::DirectionOutOfRange { direction, k });
        }
        Ok(())
    }
}

/// A vector of independent nonnegative coordinates, coupled by size-biasing
/// one coordinate and copying the rest.
#[derive(Debug, Clone)]
pub struct IndependentModel {
    coordinates: Vec<Pmf>,
    biased: Vec<Option<Pmf>>,
}

impl IndependentModel {
    pub fn new(coordinates: Vec<Pmf>) -> Result<Self, Error> {
        if coordinates.is_empty() {
            return Err(invalid_model("need at least one coordinate"));
        }
        for (i, pmf) in coordinates.iter().enumerate() {
            if pmf.dimension() != 1 {
                return Err(invalid_model(format!(
                    "coordinate {} must be univariate",
                    i + 1
                )));
            }
        }
        let biased = coordinates
            .iter()
            .map(|pmf| pmf.size_bias(1).ok())
            .collect();
        Ok(IndependentModel {
            coordinates,
            biased,
        })
    }

    pub fn dimension(&self) -> usize {
        self.coordinates.len()
    }

    pub fn coordinates(&self) -> &[Pmf] {
        &self.coordinates
    }

    /// Almost-sure coupling radius: only one coordinate moves and both of
    /// its values lie in `[0, max support]`, so the largest coordinate
    /// support value bounds the displacement in every direction.
    pub fn coupling_radius(&self) -> f64 {
        self.coordinates
            .iter()
            .map(|pmf| {
                pmf.atoms()
                    .iter()
                    .map(|(x, _)| x[0].clone())
                    .max()
                    .map(|r| r.to_f64().unwrap_or(f64::NAN))
                    .unwrap_or(0.0)
            })
            .fold(0.0, f64::max)
    }

    /// Draws `(W, W^i)`: all coordinates independently, then the biased
    /// coordinate from its size-biased law as a separate draw on the same
    /// stream (values independent; no quantile coupling).
    pub fn sample_coupling<R: Rng + ?Sized>(
        &self,
        direction: usize,
        rng: &mut R,
    ) -> Result<SampledPair, Error> {
        let k = self.dimension();
        if direction == 0 || direction > k {
            return Err(Error::DirectionOutOfRange { direction, k });
        }
        let biased_pmf = self.biased[direction - 1]
            .as_ref()
            .ok_or(Error::DegenerateCoordinate { direction })?;
        let w: Vec<f64> = self
            .coordinates
            .iter()
            .map(|pmf| draw_univariate(pmf, rng))
            .collect();
        let mut w_biased = w.clone();
        w_biased[direction - 1] = draw_univariate(biased_pmf, rng);
        Ok(SampledPair {
            w,
            w_biased,
            direction,
        })
    }

    pub fn sample_statistic<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.coordinates
            .iter()
            .map(|pmf| draw_univariate(pmf, rng))
            .collect()
    }

    /// The same construction expressed as a local-dependence model with
    /// singleton neighborhoods `V_i = {i}` and identity statistics; the
    /// two coupling laws coincide exactly.
    pub fn as_local(&self) -> Result<LocalDependenceModel, Error> {
        let neighborhoods = (1..=self.dimension()).map(|i| vec![i]).collect();
        let max = self
            .coordinates
            .iter()
            .flat_map(|pmf| pmf.atoms().iter().map(|(x, _)| x[0].clone()))
            .max()
            .unwrap_or_else(Rat::zero);
        LocalDependenceModel::new(
            self.coordinates.clone(),
            neighborhoods,
            Statistic::WindowSum,
            max,
        )
    }
}

fn draw_univariate<R: Rng + ?Sized>(pmf: &Pmf, rng: &mut R) -> f64 {
    let atoms = pmf.atoms();
    let weights: Vec<f64> = atoms.iter().map(|(_, p)| rational::to_f64(p)).collect();
    rational::to_f64(&atoms[sample_index(&weights, rng)].0[0])
}

/// Categorical draw by a single uniform and a cumulative walk; the final
/// index absorbs float round-off.
fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (idx, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return idx;
        }
    }
    weights.len() - 1
}

/// Exact product-space enumeration over the given components (1-based
/// neighborhood positions), as (value tuple, probability) in neighborhood
/// order. Errors past [`ENUMERATION_CAP`].
pub(crate) fn neighborhood_space(
    components: &[Pmf],
    neighborhood: &[usize],
) -> Result<Vec<(Vec<Rat>, Rat)>, Error> {
    let mut size: u128 = 1;
    for &v in neighborhood {
        size = size.saturating_mul(components[v - 1].atoms().len() as u128);
        if size > ENUMERATION_CAP {
            return Err(Error::NeighborhoodTooLarge {
                size,
                cap: ENUMERATION_CAP,
            });
        }
    }
    let mut space: Vec<(Vec<Rat>, Rat)> = vec![(Vec::new(), Rat::one())];
    for &v in neighborhood {
        let atoms = components[v - 1].atoms();
        let mut next = Vec::with_capacity(space.len() * atoms.len());
        for (prefix, prob) in &space {
            for (x, p) in atoms {
                let mut values = prefix.clone();
                values.push(x[0].clone());
                next.push((values, prob * p));
            }
        }
        space = next;
    }
    Ok(space)
}
