//! Brute-force ground truth for small models: exact laws, exact coupling
//! audits, and exact standardized tail probabilities.
//!
//! Everything here enumerates a finite outcome space and reduces with
//! exact rational (or integer-count) arithmetic. Caps are hard errors,
//! never silent sampling fallbacks: an oracle that approximates is not an
//! oracle. Permutation spaces are swept by lexicographic successor in
//! first-element blocks so the reduction parallelizes without changing a
//! single digit of the result.

use std::collections::BTreeMap;

use num::Zero;
use rayon::prelude::*;

use crate::couplings::{neighborhood_space, IndependentModel, LocalDependenceModel, ENUMERATION_CAP};
use crate::error::Error;
use crate::model::Pmf;
use crate::patterns::{count_vector, reorder, PatternModel, Permutation};
use crate::rational::{self, Rat};

/// Largest permutation size the oracle will exhaust (8! = 40320 outcomes).
pub const PATTERN_ENUM_MAX_N: usize = 8;

/// A model small enough to enumerate exactly.
#[derive(Debug, Clone)]
pub enum EnumerableModel {
    Pattern(PatternModel),
    Local(LocalDependenceModel),
    Independent(IndependentModel),
}

impl EnumerableModel {
    pub fn dimension(&self) -> usize {
        match self {
            EnumerableModel::Pattern(m) => m.dimension(),
            EnumerableModel::Local(m) => m.dimension(),
            EnumerableModel::Independent(m) => m.dimension(),
        }
    }
}

/// The exact joint law of the statistic vector `W`.
pub fn enumerate_law(model: &EnumerableModel) -> Result<Pmf, Error> {
    match model {
        EnumerableModel::Pattern(m) => pattern_law(m),
        EnumerableModel::Local(m) => local_law(m),
        EnumerableModel::Independent(m) => {
            // coordinates are the statistics, so the law is the product pmf
            let nb: Vec<usize> = (1..=m.dimension()).collect();
            let space = neighborhood_space(m.coordinates(), &nb)?;
            Pmf::new(m.dimension(), space)
        }
    }
}

/// Result of exhaustively enumerating a coupling in one direction.
#[derive(Debug, Clone)]
pub struct CouplingAudit {
    pub direction: usize,
    /// The exact law of `W^i` under the coupling construction.
    pub biased_law: Pmf,
    /// Exact maximum of `||W^i - W||_2^2` over all coupled outcomes
    /// (squared, so it stays rational).
    pub max_radius_sq: Rat,
    /// Exact maximum of `|W_j^i - W_j|` per coordinate `j`.
    pub per_coordinate_max_gap: Vec<Rat>,
}

impl CouplingAudit {
    /// The audited radius as a float.
    pub fn max_radius(&self) -> f64 {
        rational::to_f64(&self.max_radius_sq).sqrt()
    }
}

/// Enumerates every coupled outcome in the given direction and returns the
/// exact biased law, radius, and per-coordinate gaps.
pub fn exact_coupling_audit(
    model: &EnumerableModel,
    direction: usize,
) -> Result<CouplingAudit, Error> {
    let k = model.dimension();
    if direction == 0 || direction > k {
        return Err(Error::DirectionOutOfRange { direction, k });
    }
    match model {
        EnumerableModel::Pattern(m) => pattern_audit(m, direction),
        EnumerableModel::Local(m) => local_audit(m, direction),
        EnumerableModel::Independent(m) => independent_audit(m, direction),
    }
}

/// Exact standardized tail probabilities of a law on a threshold grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactTailTable {
    pub rows: Vec<ExactTailRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactTailRow {
    pub t: Vec<f64>,
    /// `P((W - mu)/sigma <= -t)` component-wise, exact.
    pub lower: Rat,
    /// `P((W - mu)/sigma >= t)` component-wise, exact.
    pub upper: Rat,
}

/// Exact probability of a single standardized tail event.
pub fn exact_tail(law: &Pmf, query: &crate::bounds::TailQuery) -> Result<Rat, Error> {
    let table = exact_tails(law, std::slice::from_ref(&query.t))?;
    let row = table.rows.into_iter().next().expect("one grid row");
    Ok(match query.side {
        crate::bounds::TailSide::Lower => row.lower,
        crate::bounds::TailSide::Upper => row.upper,
    })
}

/// Computes exact tails `P((W-mu)/sigma <= -t)` and `P((W-mu)/sigma >= t)`
/// for each grid vector. Thresholds are floats (hence exact dyadic
/// rationals); the standardized comparison `|W_i - mu_i| >= t_i sigma_i`
/// is decided by comparing squares, so the irrational `sigma_i` itself is
/// never needed.
pub fn exact_tails(law: &Pmf, grid: &[Vec<f64>]) -> Result<ExactTailTable, Error> {
    let moments = law.moments()?;
    let k = law.dimension();
    let mut rows = Vec::with_capacity(grid.len());
    for t in grid {
        if t.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: t.len(),
            });
        }
        if t.iter().any(|&x| !x.is_finite() || x < 0.0) {
            return Err(Error::NegativeT);
        }
        let t_sq: Vec<Rat> = t
            .iter()
            .map(|&x| {
                let r = rational::from_f64(x).expect("thresholds validated finite");
                &r * &r
            })
            .collect();
        let t_zero: Vec<bool> = t.iter().map(|&x| x == 0.0).collect();

        let mut lower = Rat::zero();
        let mut upper = Rat::zero();
        for (x, p) in law.atoms() {
            let mut in_lower = true;
            let mut in_upper = true;
            for i in 0..k {
                let d = &x[i] - &moments.mu[i];
                // d <= -t sigma  <=>  t = 0 ? d <= 0 : (d < 0 and d^2 >= t^2 sigma^2)
                // d >=  t sigma  <=>  t = 0 ? d >= 0 : (d > 0 and d^2 >= t^2 sigma^2)
                let d_sq = &d * &d;
                let rhs = &t_sq[i] * &moments.sigma2[i];
                if t_zero[i] {
                    in_lower &= d <= Rat::zero();
                    in_upper &= d >= Rat::zero();
                } else {
                    in_lower &= d < Rat::zero() && d_sq >= rhs;
                    in_upper &= d > Rat::zero() && d_sq >= rhs;
                }
                if !in_lower && !in_upper {
                    break;
                }
            }
            if in_lower {
                lower += p;
            }
            if in_upper {
                upper += p;
            }
        }
        rows.push(ExactTailRow {
            t: t.clone(),
            lower,
            upper,
        });
    }
    Ok(ExactTailTable { rows })
}

fn check_pattern_cap(n: usize) -> Result<(), Error> {
    if n > PATTERN_ENUM_MAX_N {
        let size: u128 = (1..=n as u128).product();
        let cap: u128 = (1..=PATTERN_ENUM_MAX_N as u128).product();
        return Err(Error::StateSpaceTooLarge { size, cap });
    }
    Ok(())
}

/// Runs `visit` over every permutation of `S_n`, split into first-element
/// blocks that run in parallel; block results merge in index order, so the
/// outcome is independent of thread count.
fn sweep_permutations<T, F>(n: usize, visit: F) -> Vec<T>
where
    T: Send,
    F: Fn(&Permutation) -> T + Sync,
{
    let block_len: u64 = (1..n as u64).product::<u64>().max(1);
    (0..n as u64)
        .into_par_iter()
        .map(|block| {
            let mut pi = Permutation::from_lex_rank(n, block * block_len);
            let mut out = Vec::with_capacity(block_len as usize);
            for step in 0..block_len {
                out.push(visit(&pi));
                if step + 1 < block_len {
                    pi.next_lex();
                }
            }
            out
        })
        .flatten_iter()
        .collect()
}

fn pattern_law(model: &PatternModel) -> Result<Pmf, Error> {
    check_pattern_cap(model.n())?;
    let n = model.n();
    let counts = sweep_permutations(n, |pi| count_vector(pi, model));
    let mut histogram: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
    for w in counts {
        *histogram.entry(w).or_insert(0) += 1;
    }
    let n_fact = rational::factorial(n);
    let atoms = histogram
        .into_iter()
        .map(|(w, c)| {
            (
                w.into_iter().map(|v| rational::int(v as i64)).collect(),
                Rat::new(c.into(), n_fact.clone()),
            )
        })
        .collect();
    Pmf::new(model.dimension(), atoms)
}

fn pattern_audit(model: &PatternModel, direction: usize) -> Result<CouplingAudit, Error> {
    check_pattern_cap(model.n())?;
    let n = model.n();
    let k = model.dimension();
    let tau = &model.patterns()[direction - 1];

    struct Partial {
        histogram: BTreeMap<Vec<usize>, u64>,
        max_radius_sq: u64,
        max_gap: Vec<u64>,
    }

    let partials = sweep_permutations(n, |pi| {
        let w = count_vector(pi, model);
        let mut histogram = BTreeMap::new();
        let mut max_radius_sq = 0u64;
        let mut max_gap = vec![0u64; k];
        for beta in 1..=n {
            let wb = count_vector(&reorder(pi, tau, beta), model);
            let mut rad2 = 0u64;
            for j in 0..k {
                let gap = wb[j].abs_diff(w[j]) as u64;
                rad2 += gap * gap;
                max_gap[j] = max_gap[j].max(gap);
            }
            max_radius_sq = max_radius_sq.max(rad2);
            *histogram.entry(wb).or_insert(0u64) += 1;
        }
        Partial {
            histogram,
            max_radius_sq,
            max_gap,
        }
    });

    let mut histogram: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
    let mut max_radius_sq = 0u64;
    let mut max_gap = vec![0u64; k];
    for p in partials {
        for (w, c) in p.histogram {
            *histogram.entry(w).or_insert(0) += c;
        }
        max_radius_sq = max_radius_sq.max(p.max_radius_sq);
        for (slot, gap) in max_gap.iter_mut().zip(&p.max_gap) {
            *slot = (*slot).max(*gap);
        }
    }

    let total = Rat::from_integer(rational::factorial(n)) * rational::int(n as i64);
    let atoms = histogram
        .into_iter()
        .map(|(w, c)| {
            (
                w.into_iter().map(|v| rational::int(v as i64)).collect(),
                rational::int(c as i64) / &total,
            )
        })
        .collect();
    Ok(CouplingAudit {
        direction,
        biased_law: Pmf::new(k, atoms)?,
        max_radius_sq: rational::int(max_radius_sq as i64),
        per_coordinate_max_gap: max_gap
            .into_iter()
            .map(|g| rational::int(g as i64))
            .collect(),
    })
}

fn full_component_space(model: &LocalDependenceModel) -> Result<Vec<(Vec<Rat>, Rat)>, Error> {
    let all: Vec<usize> = (1..=model.num_components()).collect();
    match neighborhood_space(model.components(), &all) {
        Ok(space) => Ok(space),
        Err(Error::NeighborhoodTooLarge { size, cap }) => {
            Err(Error::StateSpaceTooLarge { size, cap })
        }
        Err(e) => Err(e),
    }
}

fn local_law(model: &LocalDependenceModel) -> Result<Pmf, Error> {
    let space = full_component_space(model)?;
    let mut histogram: BTreeMap<Vec<Rat>, Rat> = BTreeMap::new();
    for (assignment, prob) in space {
        let w = model.evaluate(&assignment)?;
        *histogram.entry(w).or_insert_with(Rat::zero) += prob;
    }
    Pmf::new(model.dimension(), histogram.into_iter().collect())
}

fn local_audit(model: &LocalDependenceModel, direction: usize) -> Result<CouplingAudit, Error> {
    let space = full_component_space(model)?;
    let tilt = model.tilted_atoms(direction)?;
    let joint = (space.len() as u128) * (tilt.len() as u128);
    if joint > ENUMERATION_CAP {
        return Err(Error::StateSpaceTooLarge {
            size: joint,
            cap: ENUMERATION_CAP,
        });
    }

    let k = model.dimension();
    let mut histogram: BTreeMap<Vec<Rat>, Rat> = BTreeMap::new();
    let mut max_radius_sq = Rat::zero();
    let mut max_gap = vec![Rat::zero(); k];
    for (assignment, p) in &space {
        let w = model.evaluate(assignment)?;
        for (tilt_values, q) in tilt {
            let wb = model.evaluate_biased(assignment, direction, tilt_values)?;
            let mut rad2 = Rat::zero();
            for j in 0..k {
                let gap = if wb[j] >= w[j] {
                    &wb[j] - &w[j]
                } else {
                    &w[j] - &wb[j]
                };
                rad2 += &gap * &gap;
                if gap > max_gap[j] {
                    max_gap[j] = gap;
                }
            }
            if rad2 > max_radius_sq {
                max_radius_sq = rad2;
            }
            *histogram.entry(wb).or_insert_with(Rat::zero) += p * q;
        }
    }
    Ok(CouplingAudit {
        direction,
        biased_law: Pmf::new(k, histogram.into_iter().collect())?,
        max_radius_sq,
        per_coordinate_max_gap: max_gap,
    })
}

fn independent_audit(model: &IndependentModel, direction: usize) -> Result<CouplingAudit, Error> {
    let k = model.dimension();
    let nb: Vec<usize> = (1..=k).collect();
    let space = neighborhood_space(model.coordinates(), &nb)?;
    let biased = model.coordinates()[direction - 1].size_bias(1)?;
    let joint = (space.len() as u128) * (biased.atoms().len() as u128);
    if joint > ENUMERATION_CAP {
        return Err(Error::StateSpaceTooLarge {
            size: joint,
            cap: ENUMERATION_CAP,
        });
    }

    let mut histogram: BTreeMap<Vec<Rat>, Rat> = BTreeMap::new();
    let mut max_radius_sq = Rat::zero();
    let mut max_gap = vec![Rat::zero(); k];
    for (w, p) in &space {
        for (b, q) in biased.atoms() {
            let mut wb = w.clone();
            wb[direction - 1] = b[0].clone();
            let gap = if wb[direction - 1] >= w[direction - 1] {
                &wb[direction - 1] - &w[direction - 1]
            } else {
                &w[direction - 1] - &wb[direction - 1]
            };
            let rad2 = &gap * &gap;
            if rad2 > max_radius_sq {
                max_radius_sq = rad2;
            }
            if gap > max_gap[direction - 1] {
                max_gap[direction - 1] = gap;
            }
            *histogram.entry(wb).or_insert_with(Rat::zero) += p * q;
        }
    }
    Ok(CouplingAudit {
        direction,
        biased_law: Pmf::new(k, histogram.into_iter().collect())?,
        max_radius_sq,
        per_coordinate_max_gap: max_gap,
    })
}
