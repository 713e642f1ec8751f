//! JSON model files: the single external format the CLI and harness load.
//!
//! Three shapes, discriminated by `"type"`:
//!
//! ```json
//! {"type": "pattern", "n": 100, "patterns": [[1,2,3],[3,2,1]]}
//! {"type": "local", "components": [<pmf>...], "neighborhoods": [[1,2],...],
//!  "statistic": {"kind": "window_product"}, "M": "1"}
//! {"type": "independent", "components": [<pmf>...]}
//! ```
//!
//! Pmfs use the `{"k":1,"atoms":[{"x":["num/den"],"p":"num/den"}]}` form;
//! every rational is a string so nothing is rounded in transit. Unknown
//! keys are rejected everywhere. Pattern models accept an optional
//! `"broken": true` that turns the sampler into the deliberately broken
//! `W^i := W` fixture (the exact oracle always audits the real
//! construction).

use rand_chacha::ChaCha8Rng;
use serde::Deserialize;


use crate::couplings::{IndependentModel, LocalDependenceModel, SampledPair, Statistic};
use crate::error::{invalid_model, Error};
use crate::harness::{BrokenCoupling, Coupling};
use crate::model::{Pmf, PmfJson};
use crate::oracle::EnumerableModel;
use crate::patterns::{PatternModel, Permutation};
use crate::rational::{self, Rat};

/// A fully validated model, ready for sampling or enumeration.
#[derive(Debug, Clone)]
pub enum Model {
    Pattern { model: PatternModel, broken: bool },
    Local(LocalDependenceModel),
    Independent(IndependentModel),
}

impl Model {
    pub fn from_path(path: &std::path::Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid_model(format!("cannot read {}: {e}", path.display())))?;
        Model::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self, Error> {
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| invalid_model(format!("malformed json: {e}")))?;
        let kind = value
            .get("type")
            .and_then(|v| v.as_str())
            .ok_or_else(|| invalid_model("model json needs a string `type` field"))?;
        match kind {
            "pattern" => {
                let raw: PatternSpec = from_value(&value)?;
                let patterns = raw
                    .patterns
                    .into_iter()
                    .map(Permutation::from_one_line)
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Model::Pattern {
                    model: PatternModel::new(raw.n, patterns)?,
                    broken: raw.broken,
                })
            }
            "local" => {
                // serde cannot reject unknown keys inside an internally
                // tagged enum, so check the statistic object by hand
                if let Some(stat) = value.get("statistic").and_then(|s| s.as_object()) {
                    for key in stat.keys() {
                        if key != "kind" && key != "tables" {
                            return Err(invalid_model(format!(
                                "unknown statistic key `{key}`"
                            )));
                        }
                    }
                }
                let raw: LocalSpec = from_value(&value)?;
                let components = raw
                    .components
                    .into_iter()
                    .map(Pmf::try_from)
                    .collect::<Result<Vec<_>, _>>()?;
                let statistic = match raw.statistic {
                    StatisticSpec::WindowProduct => Statistic::WindowProduct,
                    StatisticSpec::WindowSum => Statistic::WindowSum,
                    StatisticSpec::Table { tables } => {
                        let mut parsed = Vec::with_capacity(tables.len());
                        for table in tables {
                            let mut map = std::collections::BTreeMap::new();
                            for entry in table {
                                let inputs = entry
                                    .inputs
                                    .iter()
                                    .map(|s| rational::parse(s))
                                    .collect::<Result<Vec<_>, _>>()?;
                                let value = rational::parse(&entry.value)?;
                                if map.insert(inputs, value).is_some() {
                                    return Err(invalid_model(
                                        "table lists the same input tuple twice",
                                    ));
                                }
                            }
                            parsed.push(map);
                        }
                        Statistic::Table(parsed)
                    }
                };
                Ok(Model::Local(LocalDependenceModel::new(
                    components,
                    raw.neighborhoods,
                    statistic,
                    rational::parse(&raw.bound_m)?,
                )?))
            }
            "independent" => {
                let raw: IndependentSpec = from_value(&value)?;
                let components = raw
                    .components
                    .into_iter()
                    .map(Pmf::try_from)
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Model::Independent(IndependentModel::new(components)?))
            }
            other => Err(invalid_model(format!(
                "unknown model type `{other}` (expected pattern, local, or independent)"
            ))),
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            Model::Pattern { model, .. } => model.dimension(),
            Model::Local(m) => m.dimension(),
            Model::Independent(m) => m.dimension(),
        }
    }

    pub fn description(&self) -> String {
        match self {
            Model::Pattern { model, broken } => {
                let taus: Vec<String> = model
                    .patterns()
                    .iter()
                    .map(|t| {
                        let parts: Vec<String> =
                            t.one_line().iter().map(|v| v.to_string()).collect();
                        format!("({})", parts.join(","))
                    })
                    .collect();
                let suffix = if *broken { ", broken-coupling fixture" } else { "" };
                format!(
                    "pattern counts: n={}, m={}, patterns {}{}",
                    model.n(),
                    model.m(),
                    taus.join(" "),
                    suffix
                )
            }
            Model::Local(m) => format!(
                "local dependence: {} components, {} statistics, b={}",
                m.num_components(),
                m.dimension(),
                m.overlap_degree()
            ),
            Model::Independent(m) => {
                format!("independent coordinates: k={}", m.dimension())
            }
        }
    }

    /// The model as an oracle input. The broken flag is a sampler fixture
    /// only; audits always see the real construction.
    pub fn to_enumerable(&self) -> EnumerableModel {
        match self {
            Model::Pattern { model, .. } => EnumerableModel::Pattern(model.clone()),
            Model::Local(m) => EnumerableModel::Local(m.clone()),
            Model::Independent(m) => EnumerableModel::Independent(m.clone()),
        }
    }

    /// Exact means and standard deviations as floats, for the harness and
    /// the bound constants. Pattern variances come from the exact
    /// joint-occurrence formula (falling back to full enumeration when the
    /// window wraps both ways); local and independent moments come from
    /// their neighborhood marginals.
    pub fn exact_moments(&self) -> Result<(Vec<f64>, Vec<f64>), Error> {
        match self {
            Model::Pattern { model, .. } => {
                let k = model.dimension();
                let mu = vec![rational::to_f64(&model.mean()); k];
                let mut sigma = Vec::with_capacity(k);
                let mut law = None;
                for i in 1..=k {
                    let var = match model.variance(i) {
                        Ok(v) => v,
                        Err(_) => {
                            // n < 2m-1: windows overlap on both sides, so
                            // enumerate the law instead
                            if law.is_none() {
                                law = Some(crate::oracle::enumerate_law(
                                    &EnumerableModel::Pattern(model.clone()),
                                )?);
                            }
                            law.as_ref().unwrap().variance(i)?
                        }
                    };
                    check_positive(&var, i)?;
                    sigma.push(rational::to_f64(&var).sqrt());
                }
                Ok((mu, sigma))
            }
            Model::Local(m) => {
                let k = m.dimension();
                let mut mu = Vec::with_capacity(k);
                let mut sigma = Vec::with_capacity(k);
                for i in 1..=k {
                    let mean = m.statistic_expectation(i)?.clone();
                    check_positive(&mean, i)?;
                    let var = m.statistic_variance(i)?;
                    check_positive(&var, i)?;
                    mu.push(rational::to_f64(&mean));
                    sigma.push(rational::to_f64(&var).sqrt());
                }
                Ok((mu, sigma))
            }
            Model::Independent(m) => {
                let k = m.dimension();
                let mut mu = Vec::with_capacity(k);
                let mut sigma = Vec::with_capacity(k);
                for (i, pmf) in m.coordinates().iter().enumerate() {
                    let mean = pmf.mean(1)?;
                    let var = pmf.variance(1)?;
                    check_positive(&mean, i + 1)?;
                    check_positive(&var, i + 1)?;
                    mu.push(rational::to_f64(&mean));
                    sigma.push(rational::to_f64(&var).sqrt());
                }
                Ok((mu, sigma))
            }
        }
    }
}

fn check_positive(value: &Rat, direction: usize) -> Result<(), Error> {
    if value <= &num::Zero::zero() {
        return Err(Error::DegenerateCoordinate { direction });
    }
    Ok(())
}

impl Coupling for Model {
    fn dimension(&self) -> usize {
        Model::dimension(self)
    }

    fn coupling_radius(&self) -> f64 {
        match self {
            Model::Pattern { model, .. } => model.coupling_radius(),
            Model::Local(m) => m.coupling_radius(),
            Model::Independent(m) => m.coupling_radius(),
        }
    }

    fn sample_pair(&self, direction: usize, rng: &mut ChaCha8Rng) -> Result<SampledPair, Error> {
        match self {
            Model::Pattern { model, broken } => {
                if *broken {
                    BrokenCoupling(model.clone()).sample_pair(direction, rng)
                } else {
                    model.sample_coupling(direction, rng)
                }
            }
            Model::Local(m) => m.sample_coupling(direction, rng),
            Model::Independent(m) => m.sample_coupling(direction, rng),
        }
    }

    fn sample_statistic(&self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>, Error> {
        match self {
            Model::Pattern { model, .. } => Ok(model.sample_statistic(rng)),
            Model::Local(m) => m.sample_statistic(rng),
            Model::Independent(m) => Ok(m.sample_statistic(rng)),
        }
    }
}

fn from_value<T: serde::de::DeserializeOwned>(value: &serde_json::Value) -> Result<T, Error> {
    serde_json::from_value(value.clone())
        .map_err(|e| invalid_model(format!("malformed model json: {e}")))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PatternSpec {
    #[serde(rename = "type")]
    _type: String,
    n: usize,
    patterns: Vec<Vec<usize>>,
    #[serde(default)]
    broken: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LocalSpec {
    #[serde(rename = "type")]
    _type: String,
    components: Vec<PmfJson>,
    neighborhoods: Vec<Vec<usize>>,
    statistic: StatisticSpec,
    #[serde(rename = "M")]
    bound_m: String,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum StatisticSpec {
    WindowProduct,
    WindowSum,
    Table { tables: Vec<Vec<TableEntry>> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableEntry {
    inputs: Vec<String>,
    value: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct IndependentSpec {
    #[serde(rename = "type")]
    _type: String,
    components: Vec<PmfJson>,
}
