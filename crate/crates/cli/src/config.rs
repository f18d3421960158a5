//! Run configuration: JSON schema ingestion and conversion to channel specs.

use anyhow::{anyhow, bail, Context};
use serde::{Deserialize, Serialize};

use runitary::oracle::OracleConfig;
use runitary::rate::{QubitChannelSpec, RateFunction, TimeGrid};
use runitary::weyl::WeylChannelSpec;

pub const DEFAULT_T_MAX: f64 = 10.0;
pub const DEFAULT_POINTS: usize = 2001;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub channel: ChannelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outputs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<InitialState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<PairConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub t_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ChannelConfig {
    Qubit {
        mode: ChannelMode,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rates: Option<QubitRates>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        p: Option<Vec<RateFunction>>,
    },
    Weyl {
        #[serde(rename = "N")]
        n: usize,
        mode: ChannelMode,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rates_matrix: Option<Vec<Vec<RateFunction>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        p: Option<Vec<Vec<RateFunction>>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelMode {
    Rates,
    Probabilities,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    /// Qubit Bloch components (u, a, b) of rho - I/2 in the sigma_3, sigma_1,
    /// sigma_2 basis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bloch: Option<[f64; 3]>,
    /// Computational basis index, any dimension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairConfig {
    pub bloch1: [f64; 3],
    pub bloch2: [f64; 3],
}

pub const SERIES_NAMES: &[&str] = &[
    "report",
    "gamma",
    "lambda",
    "pairwise",
    "entropy",
    "flow",
    "choi-min-eig",
];

/// A parsed channel, either flavor.
#[derive(Debug)]
pub enum BuiltChannel {
    Qubit(QubitChannelSpec),
    Weyl(WeylChannelSpec),
}

pub fn parse_config(text: &str) -> anyhow::Result<RunConfig> {
    let cfg: RunConfig = serde_json::from_str(text).context("invalid config JSON")?;
    for out in &cfg.outputs {
        if !SERIES_NAMES.contains(&out.as_str()) {
            bail!(
                "unknown output '{out}'; expected one of {}",
                SERIES_NAMES.join(", ")
            );
        }
    }
    Ok(cfg)
}

impl RunConfig {
    pub fn grid(&self) -> anyhow::Result<TimeGrid> {
        let (t_max, points) = match &self.grid {
            Some(g) => (g.t_max, g.points),
            None => (DEFAULT_T_MAX, DEFAULT_POINTS),
        };
        TimeGrid::new(t_max, points).map_err(|e| anyhow!("grid: {e}"))
    }

    pub fn build_channel(&self) -> anyhow::Result<BuiltChannel> {
        let grid = self.grid()?;
        match &self.channel {
            ChannelConfig::Qubit { mode, rates, p } => {
                let spec = match (mode, rates, p) {
                    (ChannelMode::Rates, Some(r), None) => QubitChannelSpec::from_rates(
                        r.g1.clone(),
                        r.g2.clone(),
                        r.g3.clone(),
                        grid,
                    ),
                    (ChannelMode::Probabilities, None, Some(ps)) => {
                        let four: [RateFunction; 4] = ps
                            .clone()
                            .try_into()
                            .map_err(|_| anyhow!("channel.p must hold exactly 4 rate functions"))?;
                        QubitChannelSpec::from_probabilities(four, grid)
                    }
                    _ => bail!(
                        "qubit channel needs exactly one of 'rates' (mode=rates) or 'p' \
                         (mode=probabilities)"
                    ),
                };
                spec.validate().map_err(|e| anyhow!("channel: {e}"))?;
                Ok(BuiltChannel::Qubit(spec))
            }
            ChannelConfig::Weyl {
                n,
                mode,
                rates_matrix,
                p,
            } => {
                let flatten = |rows: &Vec<Vec<RateFunction>>| -> anyhow::Result<Vec<RateFunction>> {
                    if rows.len() != *n || rows.iter().any(|r| r.len() != *n) {
                        bail!("channel matrix must be {n} rows of {n} rate functions");
                    }
                    Ok(rows.iter().flatten().cloned().collect())
                };
                let spec = match (mode, rates_matrix, p) {
                    (ChannelMode::Rates, Some(rows), None) => {
                        WeylChannelSpec::from_rates(*n, flatten(rows)?, grid)
                    }
                    (ChannelMode::Probabilities, None, Some(rows)) => {
                        WeylChannelSpec::from_probabilities(*n, flatten(rows)?, grid)
                    }
                    _ => bail!(
                        "weyl channel needs exactly one of 'rates_matrix' (mode=rates) or 'p' \
                         (mode=probabilities)"
                    ),
                };
                Ok(BuiltChannel::Weyl(spec.map_err(|e| anyhow!("channel: {e}"))?))
            }
        }
    }

    pub fn oracle_config(&self, seed_override: Option<u64>) -> OracleConfig {
        let mut cfg = self.oracle.unwrap_or_default();
        if let Some(seed) = seed_override {
            cfg.seed = seed;
        }
        cfg
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitRates {
    pub g1: RateFunction,
    pub g2: RateFunction,
    pub g3: RateFunction,
}

/// Built-in named configurations mirroring the special cases exercised by the
/// test suite.
pub fn preset(name: &str) -> anyhow::Result<RunConfig> {
    let four_pi = 4.0 * std::f64::consts::PI;
    let all = "sin-example, single-channel-k1, single-channel-k2, single-channel-k3, \
               depolarizing, isotropic-N3";
    let qubit_rates = |g1: RateFunction, g2: RateFunction, g3: RateFunction| ChannelConfig::Qubit {
        mode: ChannelMode::Rates,
        rates: Some(QubitRates { g1, g2, g3 }),
        p: None,
    };
    let cfg = match name {
        "sin-example" => RunConfig {
            channel: qubit_rates(
                RateFunction::constant(1.0),
                RateFunction::constant(1.0),
                RateFunction::sin_t(),
            ),
            grid: Some(GridConfig {
                t_max: four_pi,
                points: 2001,
            }),
            oracle: None,
            outputs: default_outputs(),
            initial_state: None,
            pair: None,
        },
        "single-channel-k1" | "single-channel-k2" | "single-channel-k3" => {
            let k: usize = name.rsplit('k').next().unwrap().parse().unwrap();
            // p_0 = (1 + e^{-2t})/2, p_k = (1 - e^{-2t})/2, rest 0
            let mut ps = [
                RateFunction::Exponential {
                    offset: 0.5,
                    amplitude: 0.5,
                    rate: -2.0,
                },
                RateFunction::constant(0.0),
                RateFunction::constant(0.0),
                RateFunction::constant(0.0),
            ];
            ps[k] = RateFunction::Exponential {
                offset: 0.5,
                amplitude: -0.5,
                rate: -2.0,
            };
            RunConfig {
                channel: ChannelConfig::Qubit {
                    mode: ChannelMode::Probabilities,
                    rates: None,
                    p: Some(ps.to_vec()),
                },
                grid: Some(GridConfig {
                    t_max: 5.0,
                    points: 1001,
                }),
                oracle: None,
                outputs: default_outputs(),
                initial_state: None,
                pair: None,
            }
        }
        "depolarizing" => {
            // mixture p(t) = e^{-4t}: p_00 = (1 + 3p)/4, p_kl = (1 - p)/4
            let comp = |offset: f64, amplitude: f64| RateFunction::Exponential {
                offset,
                amplitude,
                rate: -4.0,
            };
            RunConfig {
                channel: ChannelConfig::Qubit {
                    mode: ChannelMode::Probabilities,
                    rates: None,
                    p: Some(vec![
                        comp(0.25, 0.75),
                        comp(0.25, -0.25),
                        comp(0.25, -0.25),
                        comp(0.25, -0.25),
                    ]),
                },
                grid: Some(GridConfig {
                    t_max: 2.0,
                    points: 1001,
                }),
                oracle: None,
                outputs: default_outputs(),
                initial_state: None,
                pair: None,
            }
        }
        "isotropic-N3" => {
            // N = 3 depolarizing mixture, same p(t) = e^{-4t}
            let comp = |offset: f64, amplitude: f64| RateFunction::Exponential {
                offset,
                amplitude,
                rate: -4.0,
            };
            let n = 3usize;
            let n2 = (n * n) as f64;
            let rows: Vec<Vec<RateFunction>> = (0..n)
                .map(|k| {
                    (0..n)
                        .map(|l| {
                            if k == 0 && l == 0 {
                                comp(1.0 / n2, (n2 - 1.0) / n2)
                            } else {
                                comp(1.0 / n2, -1.0 / n2)
                            }
                        })
                        .collect()
                })
                .collect();
            RunConfig {
                channel: ChannelConfig::Weyl {
                    n,
                    mode: ChannelMode::Probabilities,
                    rates_matrix: None,
                    p: Some(rows),
                },
                grid: Some(GridConfig {
                    t_max: 2.0,
                    points: 1001,
                }),
                oracle: None,
                outputs: vec!["report".into(), "gamma".into(), "lambda".into()],
                initial_state: None,
                pair: None,
            }
        }
        _ => bail!("unknown preset '{name}'; available: {all}"),
    };
    Ok(cfg)
}

fn default_outputs() -> Vec<String> {
    SERIES_NAMES.iter().map(|s| s.to_string()).collect()
}
