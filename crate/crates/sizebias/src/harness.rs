//! Seeded, parallel Monte Carlo verification of the size-bias identity,
//! the coupling radius, and the tail bounds, at scales the exact oracle
//! cannot reach.
//!
//! Reproducibility contract: every sample index owns a counter-derived
//! substream (`ChaCha8(seed)` at stream `index`), samples are accumulated
//! in fixed index chunks, and chunk partials reduce in index order. The
//! report is therefore byte-identical for any worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{self, BoundParams};
use crate::couplings::{IndependentModel, LocalDependenceModel, SampledPair};
use crate::error::{invalid_model, Error};
use crate::patterns::PatternModel;

const CHUNK: u64 = 4096;
/// Capped-exponential test functions saturate here; the cap event is
/// counted and reported rather than hidden.
pub const EXP_CAP: f64 = 1e6;

/// Monte Carlo run configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McConfig {
    pub samples: u64,
    pub seed: u64,
    pub workers: usize,
    /// Standard-error multiplier for pass/fail flags (3.0 for exploratory
    /// runs; CI-style assertions use 5.0).
    pub z_tol: f64,
}

impl McConfig {
    pub fn new(samples: u64, seed: u64) -> Result<Self, Error> {
        if samples == 0 {
            return Err(Error::NonPositiveInput { field: "samples" });
        }
        Ok(McConfig {
            samples,
            seed,
            workers: 1,
            z_tol: 3.0,
        })
    }

    pub fn with_workers(mut self, workers: usize) -> Result<Self, Error> {
        if workers == 0 {
            return Err(Error::NonPositiveInput { field: "workers" });
        }
        self.workers = workers;
        Ok(self)
    }

    pub fn with_z_tol(mut self, z_tol: f64) -> Result<Self, Error> {
        if !(z_tol > 0.0) {
            return Err(Error::NonPositiveInput { field: "z_tol" });
        }
        self.z_tol = z_tol;
        Ok(self)
    }
}

/// The per-sample substream: worker count can never affect which random
/// values a given sample index sees.
pub fn sample_stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A coupling a Monte Carlo run can drive: paired `(W, W^i)` draws, plain
/// `W` draws, and the almost-sure radius.
pub trait Coupling: Sync {
    fn dimension(&self) -> usize;
    fn coupling_radius(&self) -> f64;
    fn sample_pair(&self, direction: usize, rng: &mut ChaCha8Rng) -> Result<SampledPair, Error>;
    fn sample_statistic(&self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>, Error>;
}

impl Coupling for PatternModel {
    fn dimension(&self) -> usize {
        self.dimension()
    }
    fn coupling_radius(&self) -> f64 {
        self.coupling_radius()
    }
    fn sample_pair(&self, direction: usize, rng: &mut ChaCha8Rng) -> Result<SampledPair, Error> {
        self.sample_coupling(direction, rng)
    }
    fn sample_statistic(&self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>, Error> {
        Ok(PatternModel::sample_statistic(self, rng))
    }
}

impl Coupling for LocalDependenceModel {
    fn dimension(&self) -> usize {
        self.dimension()
    }
    fn coupling_radius(&self) -> f64 {
        self.coupling_radius()
    }
    fn sample_pair(&self, direction: usize, rng: &mut ChaCha8Rng) -> Result<SampledPair, Error> {
        self.sample_coupling(direction, rng)
    }
    fn sample_statistic(&self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>, Error> {
        LocalDependenceModel::sample_statistic(self, rng)
    }
}

impl Coupling for IndependentModel {
    fn dimension(&self) -> usize {
        self.dimension()
    }
    fn coupling_radius(&self) -> f64 {
        self.coupling_radius()
    }
    fn sample_pair(&self, direction: usize, rng: &mut ChaCha8Rng) -> Result<SampledPair, Error> {
        self.sample_coupling(direction, rng)
    }
    fn sample_statistic(&self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>, Error> {
        Ok(IndependentModel::sample_statistic(self, rng))
    }
}

/// A deliberately broken coupling that returns `W^i := W`. It violates the
/// size-bias identity by exactly `sigma_i^2 / mu_i` at `f = x_i`, so the
/// identity check must flag it; it exists as a self-test fixture.
pub struct BrokenCoupling<C>(pub C);

impl<C: Coupling> Coupling for BrokenCoupling<C> {
    fn dimension(&self) -> usize {
        self.0.dimension()
    }
    fn coupling_radius(&self) -> f64 {
        self.0.coupling_radius()
    }
    fn sample_pair(&self, direction: usize, rng: &mut ChaCha8Rng) -> Result<SampledPair, Error> {
        let mut pair = self.0.sample_pair(direction, rng)?;
        pair.w_biased = pair.w.clone();
        Ok(pair)
    }
    fn sample_statistic(&self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>, Error> {
        self.0.sample_statistic(rng)
    }
}

/// Test functions for the identity check `E[W_i f(W)] = mu_i E[f(W^i)]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum TestFunction {
    /// `f = 1`.
    One,
    /// Coordinate projection `f = x_j` (1-based).
    Coordinate(usize),
    /// Pairwise product `f = x_j x_l`.
    Product(usize, usize),
    /// `f = min(exp(x_j / scale), EXP_CAP)`; `scale` is the coupling
    /// radius so the exponent stays O(1) across the coupled pair.
    CappedExp { coordinate: usize, scale: f64 },
    /// Indicator of the upper orthant `{x : x >= q}` component-wise.
    UpperOrthant(Vec<f64>),
}

impl TestFunction {
    /// Evaluates the function; the flag reports whether a cap bound.
    pub fn eval(&self, x: &[f64]) -> (f64, bool) {
        match self {
            TestFunction::One => (1.0, false),
            TestFunction::Coordinate(j) => (x[j - 1], false),
            TestFunction::Product(j, l) => (x[j - 1] * x[l - 1], false),
            TestFunction::CappedExp { coordinate, scale } => {
                let raw = (x[coordinate - 1] / scale).exp();
                if raw > EXP_CAP {
                    (EXP_CAP, true)
                } else {
                    (raw, false)
                }
            }
            TestFunction::UpperOrthant(q) => {
                let inside = x.iter().zip(q).all(|(xi, qi)| xi >= qi);
                (if inside { 1.0 } else { 0.0 }, false)
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            TestFunction::One => "1".into(),
            TestFunction::Coordinate(j) => format!("x{j}"),
            TestFunction::Product(j, l) => format!("x{j}*x{l}"),
            TestFunction::CappedExp { coordinate, scale } => {
                format!("min(exp(x{coordinate}/{scale:.4}),1e6)")
            }
            TestFunction::UpperOrthant(q) => {
                let qs: Vec<String> = q.iter().map(|v| format!("{v:.4}")).collect();
                format!("1{{x>=({})}}", qs.join(","))
            }
        }
    }
}

/// The default test-function family: the constant, every coordinate,
/// every pairwise product, a capped exponential per coordinate (scaled by
/// the coupling radius), and upper-orthant indicators at the empirical
/// quartiles of `W`.
pub fn canonical_family(k: usize, coupling_radius: f64, quartiles: &[Vec<f64>]) -> Vec<TestFunction> {
    let mut fns = vec![TestFunction::One];
    for j in 1..=k {
        fns.push(TestFunction::Coordinate(j));
    }
    for j in 1..=k {
        for l in j..=k {
            fns.push(TestFunction::Product(j, l));
        }
    }
    for j in 1..=k {
        fns.push(TestFunction::CappedExp {
            coordinate: j,
            scale: coupling_radius,
        });
    }
    for q in quartiles {
        fns.push(TestFunction::UpperOrthant(q.clone()));
    }
    fns
}

/// Per-coordinate empirical quartiles of `W` over a deterministic prefix
/// of the sample streams (nearest-rank).
pub fn empirical_quartiles<C: Coupling>(model: &C, cfg: &McConfig) -> Result<Vec<Vec<f64>>, Error> {
    let n = cfg.samples.min(CHUNK);
    let k = model.dimension();
    let mut per_coord: Vec<Vec<f64>> = vec![Vec::with_capacity(n as usize); k];
    for idx in 0..n {
        let mut rng = sample_stream(cfg.seed, idx);
        let w = model.sample_statistic(&mut rng)?;
        for (j, v) in w.into_iter().enumerate() {
            per_coord[j].push(v);
        }
    }
    for coord in &mut per_coord {
        coord.sort_by(|a, b| a.total_cmp(b));
    }
    let len = n as usize;
    let pick = |p: f64| -> Vec<f64> {
        per_coord
            .iter()
            .map(|sorted| {
                let rank = ((p * len as f64).ceil() as usize).clamp(1, len);
                sorted[rank - 1]
            })
            .collect()
    };
    Ok(vec![pick(0.25), pick(0.5), pick(0.75)])
}

/// One identity line: the paired-gap estimate of
/// `E[W_i f(W)]/mu_i - E[f(W^i)]` for a single test function.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityLine {
    pub function: String,
    /// `mean(W_i f(W)) / mu_i`.
    pub lhs_over_mu: f64,
    /// `mean(f(W^i))`.
    pub rhs: f64,
    /// `|lhs_over_mu - rhs|` computed as a paired mean.
    pub gap: f64,
    /// Standard error of the paired difference.
    pub se: f64,
    /// Samples on which the exponential cap bound.
    pub cap_hits: u64,
    pub pass: bool,
}

/// Monte Carlo check of the defining identity in one direction. `mu_i`
/// must be the exact mean of coordinate `i` (models in this crate all
/// expose exact moments).
pub fn mc_verify_identity<C: Coupling>(
    model: &C,
    mu_i: f64,
    direction: usize,
    functions: &[TestFunction],
    cfg: &McConfig,
) -> Result<Vec<IdentityLine>, Error> {
    if !(mu_i > 0.0) {
        return Err(Error::NonPositiveInput { field: "mu" });
    }
    let nf = functions.len();

    #[derive(Clone)]
    struct Partial {
        sum_d: Vec<f64>,
        sum_d2: Vec<f64>,
        sum_lhs: Vec<f64>,
        sum_rhs: Vec<f64>,
        cap_hits: Vec<u64>,
    }

    let partials = run_chunked(cfg, |range| {
        let mut acc = Partial {
            sum_d: vec![0.0; nf],
            sum_d2: vec![0.0; nf],
            sum_lhs: vec![0.0; nf],
            sum_rhs: vec![0.0; nf],
            cap_hits: vec![0; nf],
        };
        for idx in range {
            let mut rng = sample_stream(cfg.seed, idx);
            let pair = model.sample_pair(direction, &mut rng)?;
            let wi = pair.w[direction - 1];
            for (fi, f) in functions.iter().enumerate() {
                let (fw, cap_a) = f.eval(&pair.w);
                let (fwb, cap_b) = f.eval(&pair.w_biased);
                let lhs = wi * fw / mu_i;
                let d = lhs - fwb;
                acc.sum_d[fi] += d;
                acc.sum_d2[fi] += d * d;
                acc.sum_lhs[fi] += lhs;
                acc.sum_rhs[fi] += fwb;
                if cap_a || cap_b {
                    acc.cap_hits[fi] += 1;
                }
            }
        }
        Ok(acc)
    })?;

    let n = cfg.samples as f64;
    let mut lines = Vec::with_capacity(nf);
    for (fi, function) in functions.iter().enumerate() {
        let sum_d: f64 = partials.iter().map(|p| p.sum_d[fi]).sum();
        let sum_d2: f64 = partials.iter().map(|p| p.sum_d2[fi]).sum();
        let sum_lhs: f64 = partials.iter().map(|p| p.sum_lhs[fi]).sum();
        let sum_rhs: f64 = partials.iter().map(|p| p.sum_rhs[fi]).sum();
        let cap_hits: u64 = partials.iter().map(|p| p.cap_hits[fi]).sum();
        let mean = sum_d / n;
        let var = if cfg.samples > 1 {
            ((sum_d2 - sum_d * sum_d / n) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        let se = (var / n).sqrt();
        let gap = mean.abs();
        lines.push(IdentityLine {
            function: function.name(),
            lhs_over_mu: sum_lhs / n,
            rhs: sum_rhs / n,
            gap,
            se,
            cap_hits,
            pass: gap <= cfg.z_tol * se,
        });
    }
    Ok(lines)
}

/// One row of the empirical-vs-bound tail table.
#[derive(Debug, Clone, Serialize)]
pub struct TailRow {
    pub t: Vec<f64>,
    pub t_norm: f64,
    pub emp_lower: f64,
    pub bound_lower: f64,
    pub emp_upper: f64,
    pub bound_upper: f64,
    pub se_lower: f64,
    pub se_upper: f64,
    pub pass: bool,
}

/// Expands scalar grid norms into equal-coordinate threshold vectors with
/// the requested Euclidean norm.
pub fn equal_coordinate_grid(norms: &[f64], k: usize) -> Vec<Vec<f64>> {
    norms
        .iter()
        .map(|&g| vec![g / (k as f64).sqrt(); k])
        .collect()
}

/// Empirical standardized tail frequencies of `W` against the closed-form
/// bounds, with binomial standard errors. A row passes when each empirical
/// frequency is at most its bound plus `z_tol` standard errors.
pub fn mc_tail_curves<C: Coupling>(
    model: &C,
    params: &BoundParams,
    grid: &[Vec<f64>],
    cfg: &McConfig,
) -> Result<Vec<TailRow>, Error> {
    let k = model.dimension();
    if params.k != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: params.k,
        });
    }
    for t in grid {
        if t.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: t.len(),
            });
        }
        if t.iter().any(|&x| x < 0.0 || x.is_nan()) {
            return Err(Error::NegativeT);
        }
    }
    let rows = grid.len();

    let partials = run_chunked(cfg, |range| {
        let mut lower = vec![0u64; rows];
        let mut upper = vec![0u64; rows];
        for idx in range {
            let mut rng = sample_stream(cfg.seed, idx);
            let w = model.sample_statistic(&mut rng)?;
            for (ri, t) in grid.iter().enumerate() {
                let mut in_lower = true;
                let mut in_upper = true;
                for j in 0..k {
                    let dev = w[j] - params.mu[j];
                    let threshold = t[j] * params.sigma[j];
                    in_lower &= dev <= -threshold;
                    in_upper &= dev >= threshold;
                }
                if in_lower {
                    lower[ri] += 1;
                }
                if in_upper {
                    upper[ri] += 1;
                }
            }
        }
        Ok((lower, upper))
    })?;

    let n = cfg.samples as f64;
    let mut table = Vec::with_capacity(rows);
    for (ri, t) in grid.iter().enumerate() {
        let lower_count: u64 = partials.iter().map(|(l, _)| l[ri]).sum();
        let upper_count: u64 = partials.iter().map(|(_, u)| u[ri]).sum();
        let emp_lower = lower_count as f64 / n;
        let emp_upper = upper_count as f64 / n;
        let se_lower = (emp_lower * (1.0 - emp_lower) / n).sqrt();
        let se_upper = (emp_upper * (1.0 - emp_upper) / n).sqrt();
        let bound_lower = bounds::lower_tail_bound(params, t)?;
        let bound_upper = bounds::upper_tail_bound(params, t)?;
        let pass = emp_lower <= bound_lower + cfg.z_tol * se_lower
            && emp_upper <= bound_upper + cfg.z_tol * se_upper;
        table.push(TailRow {
            t: t.clone(),
            t_norm: t.iter().map(|x| x * x).sum::<f64>().sqrt(),
            emp_lower,
            bound_lower,
            emp_upper,
            bound_upper,
            se_lower,
            se_upper,
            pass,
        });
    }
    Ok(table)
}

/// Observed coupling displacement versus the claimed almost-sure radius.
#[derive(Debug, Clone, Serialize)]
pub struct RadiusReport {
    pub claimed_radius: f64,
    pub max_observed: f64,
    pub violations: u64,
    pub pass: bool,
}

/// Counts samples with `||W^i - W||_2` beyond the claimed radius (with a
/// 1e-12 relative float slack); any violation fails.
pub fn mc_verify_radius<C: Coupling>(
    model: &C,
    direction: usize,
    claimed_radius: f64,
    cfg: &McConfig,
) -> Result<RadiusReport, Error> {
    let partials = run_chunked(cfg, |range| {
        let mut max_observed = 0.0f64;
        let mut violations = 0u64;
        for idx in range {
            let mut rng = sample_stream(cfg.seed, idx);
            let pair = model.sample_pair(direction, &mut rng)?;
            let r = pair.radius();
            max_observed = max_observed.max(r);
            if r > claimed_radius * (1.0 + 1e-12) {
                violations += 1;
            }
        }
        Ok((max_observed, violations))
    })?;
    let max_observed = partials.iter().map(|p| p.0).fold(0.0, f64::max);
    let violations: u64 = partials.iter().map(|p| p.1).sum();
    Ok(RadiusReport {
        claimed_radius,
        max_observed,
        violations,
        pass: violations == 0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Everything one verification run produces. Worker count is deliberately
/// not echoed: the report is byte-identical for any worker count, and the
/// field would be the only thing breaking that.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub model: String,
    pub direction: usize,
    pub samples: u64,
    pub seed: u64,
    pub z_tol: f64,
    pub coupling_radius: f64,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub identity: Vec<IdentityLine>,
    pub radius: RadiusReport,
    pub tails: Vec<TailRow>,
    pub verdict: Verdict,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    /// The tail table as CSV with 17-significant-digit floats, so parsing
    /// recovers every f64 bit-exactly.
    pub fn tail_csv(&self) -> String {
        let mut out = String::from("t_norm,emp_lower,bound_lower,emp_upper,bound_upper,se,pass\n");
        for row in &self.tails {
            let se = row.se_lower.max(row.se_upper);
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
                row.t_norm,
                row.emp_lower,
                row.bound_lower,
                row.emp_upper,
                row.bound_upper,
                se,
                row.pass
            ));
        }
        out
    }
}

/// Runs the full verification: identity over the canonical family, radius,
/// and tail table, against exact moments supplied as floats.
#[allow(clippy::too_many_arguments)]
pub fn verify<C: Coupling>(
    model: &C,
    description: &str,
    mu: &[f64],
    sigma: &[f64],
    direction: usize,
    t_norms: &[f64],
    cfg: &McConfig,
) -> Result<VerificationReport, Error> {
    let k = model.dimension();
    if mu.len() != k || sigma.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: mu.len(),
        });
    }
    if direction == 0 || direction > k {
        return Err(Error::DirectionOutOfRange { direction, k });
    }
    let radius = model.coupling_radius();
    let quartiles = empirical_quartiles(model, cfg)?;
    let family = canonical_family(k, radius, &quartiles);
    let identity = mc_verify_identity(model, mu[direction - 1], direction, &family, cfg)?;
    let radius_report = mc_verify_radius(model, direction, radius, cfg)?;
    let params = bounds::bound_params(mu, sigma, radius)?;
    let grid = equal_coordinate_grid(t_norms, k);
    let tails = mc_tail_curves(model, &params, &grid, cfg)?;

    let verdict = if identity.iter().all(|l| l.pass)
        && radius_report.pass
        && tails.iter().all(|r| r.pass)
    {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(VerificationReport {
        model: description.to_string(),
        direction,
        samples: cfg.samples,
        seed: cfg.seed,
        z_tol: cfg.z_tol,
        coupling_radius: radius,
        mu: mu.to_vec(),
        sigma: sigma.to_vec(),
        identity,
        radius: radius_report,
        tails,
        verdict,
    })
}

/// Maps fixed index chunks in parallel inside a pool of `cfg.workers`
/// threads and returns the partials in chunk order. Chunk boundaries
/// depend only on the sample count, so results never depend on scheduling.
fn run_chunked<T, F>(cfg: &McConfig, work: F) -> Result<Vec<T>, Error>
where
    T: Send,
    F: Fn(std::ops::Range<u64>) -> Result<T, Error> + Sync + Send,
{
    let chunks: Vec<std::ops::Range<u64>> = (0..cfg.samples)
        .step_by(CHUNK as usize)
        .map(|start| start..(start + CHUNK).min(cfg.samples))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| invalid_model(format!("cannot build worker pool: {e}")))?;
    pool.install(|| {
        chunks
            .into_par_iter()
            .map(work)
            .collect::<Result<Vec<T>, Error>>()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::couplings::Statistic;
    use crate::model::Pmf;
    use crate::oracle::{enumerate_law, exact_coupling_audit, EnumerableModel};
    use crate::patterns::Permutation;
    use crate::rational::{self, int, ratio};

    fn small_pattern_model(n: usize) -> PatternModel {
        PatternModel::new(n, vec![Permutation::identity(3)]).unwrap()
    }

    fn exact_pattern_moments(model: &PatternModel) -> (Vec<f64>, Vec<f64>) {
        let k = model.dimension();
        let mu = vec![rational::to_f64(&model.mean()); k];
        let sigma = (1..=k)
            .map(|i| rational::to_f64(&model.variance(i).unwrap()).sqrt())
            .collect();
        (mu, sigma)
    }

    #[test]
    fn identity_passes_on_correct_coupling() {
        let model = small_pattern_model(10);
        let (mu, _) = exact_pattern_moments(&model);
        let cfg = McConfig::new(20_000, 7).unwrap();
        let fns = vec![
            TestFunction::One,
            TestFunction::Coordinate(1),
            TestFunction::Product(1, 1),
        ];
        let lines = mc_verify_identity(&model, mu[0], 1, &fns, &cfg).unwrap();
        for line in &lines {
            assert!(
                line.pass,
                "function {} gap {} exceeds 3 se {}",
                line.function, line.gap, line.se
            );
        }
    }

    #[test]
    fn identity_fails_on_broken_coupling() {
        let model = BrokenCoupling(small_pattern_model(20));
        let mu = rational::to_f64(&model.0.mean());
        let cfg = McConfig::new(100_000, 42).unwrap().with_workers(2).unwrap();
        let fns = vec![TestFunction::Coordinate(1)];
        let lines = mc_verify_identity(&model, mu, 1, &fns, &cfg).unwrap();
        assert!(!lines[0].pass, "broken coupling must fail at f = x_i");
        // the exact gap is sigma_i^2 / mu_i; check we are near it
        let sigma2 = rational::to_f64(&model.0.variance(1).unwrap());
        let expected_gap = sigma2 / mu;
        assert!((lines[0].gap - expected_gap).abs() < 0.1 * expected_gap);
    }

    #[test]
    fn reports_are_worker_count_invariant() {
        let model = small_pattern_model(12);
        let (mu, sigma) = exact_pattern_moments(&model);
        let run = |workers: usize| {
            let cfg = McConfig::new(10_000, 11)
                .unwrap()
                .with_workers(workers)
                .unwrap();
            verify(&model, "pattern", &mu, &sigma, 1, &[0.5, 1.0, 2.0], &cfg)
                .unwrap()
                .to_json()
        };
        let single = run(1);
        assert_eq!(single, run(3));
        assert_eq!(single, run(8));
    }

    #[test]
    fn radius_detects_undersized_claim() {
        let model = small_pattern_model(6);
        let cfg = McConfig::new(20_000, 5).unwrap();
        // exact max radius from the oracle, then claim 10% less
        let audit =
            exact_coupling_audit(&EnumerableModel::Pattern(model.clone()), 1).unwrap();
        let true_max = audit.max_radius();
        let ok = mc_verify_radius(&model, 1, true_max, &cfg).unwrap();
        assert!(ok.pass);
        assert!(ok.max_observed <= true_max);
        let bad = mc_verify_radius(&model, 1, 0.9 * true_max, &cfg).unwrap();
        assert!(!bad.pass, "undersized radius must be flagged");
        assert!(bad.violations > 0);
    }

    #[test]
    fn tail_rows_pass_and_are_monotone() {
        let model = small_pattern_model(12);
        let (mu, sigma) = exact_pattern_moments(&model);
        let params = bounds::bound_params(&mu, &sigma, model.coupling_radius()).unwrap();
        let cfg = McConfig::new(50_000, 3).unwrap().with_z_tol(5.0).unwrap();
        let grid = equal_coordinate_grid(&[0.0, 0.5, 1.0, 2.0, 4.0], 1);
        let rows = mc_tail_curves(&model, &params, &grid, &cfg).unwrap();
        for row in &rows {
            assert!(row.pass, "tail row at |t|={} failed", row.t_norm);
        }
        for pair in rows.windows(2) {
            assert!(pair[1].emp_lower <= pair[0].emp_lower + 1e-12);
            assert!(pair[1].emp_upper <= pair[0].emp_upper + 1e-12);
        }
    }

    #[test]
    fn identity_gap_zero_for_f_one_mean_consistency() {
        // f = 1 reduces the identity to mean(W_i)/mu_i = 1
        let model = small_pattern_model(8);
        let mu = rational::to_f64(&model.mean());
        let cfg = McConfig::new(50_000, 17).unwrap();
        let lines = mc_verify_identity(&model, mu, 1, &[TestFunction::One], &cfg).unwrap();
        assert!(lines[0].pass);
        assert!((lines[0].rhs - 1.0).abs() < 1e-12); // f(W^i) = 1 exactly
    }

    #[test]
    fn local_model_identity_and_radius() {
        let n = 5;
        let neighborhoods = (1..=n).map(|i| vec![i, (i % n) + 1]).collect();
        let model = LocalDependenceModel::new(
            vec![Pmf::bernoulli(ratio(1, 2)).unwrap(); n],
            neighborhoods,
            Statistic::WindowProduct,
            int(1),
        )
        .unwrap();
        let law = enumerate_law(&EnumerableModel::Local(model.clone())).unwrap();
        let mu = rational::to_f64(&law.mean(1).unwrap());
        let cfg = McConfig::new(30_000, 23).unwrap();
        let fns = vec![TestFunction::One, TestFunction::Coordinate(1), TestFunction::Coordinate(2)];
        for line in mc_verify_identity(&model, mu, 1, &fns, &cfg).unwrap() {
            assert!(line.pass, "{} failed: gap {} se {}", line.function, line.gap, line.se);
        }
        let radius = mc_verify_radius(&model, 1, model.coupling_radius(), &cfg).unwrap();
        assert_eq!(radius.violations, 0);
    }

    #[test]
    fn independent_sampler_matches_exact_biased_marginal() {
        // exercises the categorical sampler itself: the biased coordinate's
        // empirical frequencies must sit within 3 binomial SEs of the
        // analytic size-biased pmf, and the identity must hold
        let coords = vec![Pmf::uniform(&[1, 2, 3]).unwrap(), Pmf::bernoulli(ratio(1, 2)).unwrap()];
        let model = crate::couplings::IndependentModel::new(coords.clone()).unwrap();
        let biased = coords[0].size_bias(1).unwrap();
        let cfg = McConfig::new(40_000, 31).unwrap();

        let mut freq = std::collections::BTreeMap::new();
        for idx in 0..cfg.samples {
            let mut rng = sample_stream(cfg.seed, idx);
            let pair = model.sample_coupling(1, &mut rng).unwrap();
            *freq.entry(pair.w_biased[0] as i64).or_insert(0u64) += 1;
        }
        let n = cfg.samples as f64;
        for (x, p) in biased.atoms() {
            let expected = rational::to_f64(p);
            let observed = *freq.get(&(rational::to_f64(&x[0]) as i64)).unwrap_or(&0) as f64 / n;
            let se = (expected * (1.0 - expected) / n).sqrt();
            assert!(
                (observed - expected).abs() <= 3.0 * se,
                "biased marginal at {x:?}: observed {observed}, expected {expected}"
            );
        }

        let mu = rational::to_f64(&coords[0].mean(1).unwrap());
        let fns = vec![
            TestFunction::Coordinate(1),
            TestFunction::Coordinate(2),
            TestFunction::Product(1, 2),
        ];
        for line in mc_verify_identity(&model, mu, 1, &fns, &cfg).unwrap() {
            assert!(line.pass, "{} gap {} se {}", line.function, line.gap, line.se);
        }
    }

    #[test]
    fn local_model_full_verify_passes() {
        let n = 5;
        let neighborhoods = (1..=n).map(|i| vec![i, (i % n) + 1]).collect();
        let model = LocalDependenceModel::new(
            vec![Pmf::bernoulli(ratio(1, 2)).unwrap(); n],
            neighborhoods,
            Statistic::WindowProduct,
            int(1),
        )
        .unwrap();
        let mu = vec![0.25; n];
        let sigma = vec![(3.0f64 / 16.0).sqrt(); n];
        let cfg = McConfig::new(30_000, 77).unwrap().with_z_tol(5.0).unwrap();
        let report = verify(&model, "cycle", &mu, &sigma, 2, &[0.0, 0.5, 1.0, 2.0], &cfg).unwrap();
        assert!(report.passed(), "{}", report.to_json());
        assert_eq!(report.radius.violations, 0);
        assert!(report.radius.max_observed <= model.coupling_radius() + 1e-12);
    }

    #[test]
    fn quartiles_are_deterministic() {
        let model = small_pattern_model(10);
        let cfg = McConfig::new(5_000, 9).unwrap();
        assert_eq!(
            empirical_quartiles(&model, &cfg).unwrap(),
            empirical_quartiles(&model, &cfg).unwrap()
        );
    }

    #[test]
    fn config_validation() {
        assert!(McConfig::new(0, 1).is_err());
        assert!(McConfig::new(10, 1).unwrap().with_workers(0).is_err());
        assert!(McConfig::new(10, 1).unwrap().with_z_tol(0.0).is_err());
    }
}
