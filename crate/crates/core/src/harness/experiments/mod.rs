mod coupling;
mod identity;
mod kendall;
mod localization;
mod oracle_eq;
mod predicate;
mod urn;

use super::{Ctx, ExperimentConfig, Outcome, Params, Relation};
use crate::error::{Error, Result};
use crate::weights::{WeightFunction, WeightSpec};

pub(crate) const DEFAULT_SEED: u64 = 20_240_917;

/// Which optional config fields an experiment reads.
pub(crate) struct Accepts {
    pub graph: bool,
    pub weight: bool,
    pub mode: bool,
    pub params: &'static [&'static str],
}

const NOTHING: Accepts = Accepts {
    graph: false,
    weight: false,
    mode: false,
    params: &[],
};

pub(crate) struct Entry {
    pub id: &'static str,
    pub description: &'static str,
    pub defaults: fn() -> ExperimentConfig,
    pub accepts: Accepts,
    pub thresholds: &'static [(&'static str, Relation, f64)],
    pub run: fn(&Ctx) -> Result<Outcome>,
}

impl Entry {
    pub fn validate(&self, c: &ExperimentConfig) -> Result<()> {
        let reject = |what: &str| {
            Err(Error::Config(format!(
                "experiment `{}` does not accept `{what}`",
                self.id
            )))
        };
        if c.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if c.graph.is_some() && !self.accepts.graph {
            return reject("graph");
        }
        if c.weight.is_some() && !self.accepts.weight {
            return reject("weight");
        }
        if c.mode.is_some() && !self.accepts.mode {
            return reject("mode");
        }
        for p in c.params.set_names() {
            if !self.accepts.params.contains(&p) {
                return reject(p);
            }
        }
        for name in c.params.thresholds.keys() {
            if !self.thresholds.iter().any(|t| t.0 == name) {
                return reject(&format!("thresholds.{name}"));
            }
        }
        if let Some(f) = c.params.tail_fraction {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Config(format!("tail_fraction {f} outside (0, 1]")));
            }
        }
        if let Some(w) = &c.weight {
            w.build().map_err(|e| Error::Config(e.to_string()))?;
        }
        if let Some(g) = &c.graph {
            g.build().map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }
}

pub(crate) fn entry(id: &str) -> Result<&'static Entry> {
    CATALOG
        .iter()
        .find(|e| e.id == id)
        .ok_or_else(|| Error::UnknownExperiment(id.to_string()))
}

pub(crate) fn config(id: &str, steps: u64, replications: u64) -> ExperimentConfig {
    ExperimentConfig {
        experiment: id.to_string(),
        graph: None,
        weight: None,
        mode: None,
        x0: 0,
        steps,
        replications,
        seed: DEFAULT_SEED,
        params: Params::default(),
        output: Default::default(),
    }
}

/// The configured weight, or `default`.
pub(crate) fn weight_or(ctx: &Ctx, default: WeightSpec) -> Result<WeightFunction> {
    ctx.config
        .weight
        .clone()
        .unwrap_or(default)
        .build()
        .map_err(|e| Error::Config(e.to_string()))
}

/// Sample mean and standard error; the error is NaN below two samples.
pub(crate) fn mean_se(xs: &[f64]) -> (f64, f64) {
    match super::stats::mean_and_se(xs) {
        Ok(v) => v,
        Err(_) => (xs.iter().sum::<f64>() / xs.len().max(1) as f64, f64::NAN),
    }
}

/// KS p-value, or 0 when there is nothing to test.
pub(crate) fn ks(samples: &[f64], cdf: impl Fn(f64) -> f64) -> (f64, f64) {
    super::stats::ks_statistic(samples, cdf).unwrap_or((f64::NAN, 0.0))
}

pub(crate) static CATALOG: &[Entry] = &[
    Entry {
        id: "identity_suite",
        description: "Exact pathwise identities of the vertex-reinforced walk on the line",
        defaults: || config("identity_suite", 100_000, 50),
        accepts: Accepts {
            weight: true,
            ..NOTHING
        },
        thresholds: identity::THRESHOLDS,
        run: identity::run,
    },
    Entry {
        id: "oracle_equivalence",
        description: "Short-prefix laws of discrete and time-lines simulators against exact enumeration",
        defaults: || config("oracle_equivalence", 4, 100_000),
        accepts: NOTHING,
        thresholds: oracle_eq::THRESHOLDS,
        run: oracle_eq::run,
    },
    Entry {
        id: "polya_beta_limit",
        description: "Terminal colour fraction of the linear urn against its beta limit",
        defaults: || config("polya_beta_limit", 10_000, 2000),
        accepts: Accepts {
            weight: true,
            ..NOTHING
        },
        thresholds: urn::POLYA_THRESHOLDS,
        run: urn::polya,
    },
    Entry {
        id: "weak_reinforcement_ratio",
        description: "Count ratio of sublinear urns against its deterministic limit",
        defaults: || config("weak_reinforcement_ratio", 1_000_000, 20),
        accepts: NOTHING,
        thresholds: urn::WEAK_THRESHOLDS,
        run: urn::weak,
    },
    Entry {
        id: "strong_monopoly",
        description: "Superlinear urns end up drawing a single colour",
        defaults: || {
            let mut c = config("strong_monopoly", 10_000, 1000);
            c.params.tail_fraction = Some(0.5);
            c
        },
        accepts: Accepts {
            weight: true,
            params: &["tail_fraction"],
            ..NOTHING
        },
        thresholds: urn::MONOPOLY_THRESHOLDS,
        run: urn::monopoly,
    },
    Entry {
        id: "vrrw_five_site",
        description: "Vertex-reinforced walk on the line localizes on five sites",
        defaults: || {
            let mut c = config("vrrw_five_site", 1_000_000, 200);
            c.params.tail_fraction = Some(0.1);
            c
        },
        accepts: Accepts {
            weight: true,
            params: &["tail_fraction"],
            ..NOTHING
        },
        thresholds: localization::FIVE_SITE_THRESHOLDS,
        run: localization::five_site,
    },
    Entry {
        id: "volkov_dichotomy",
        description: "Power-weight vertex walks: two sites above linear, spreading below",
        defaults: || {
            let mut c = config("volkov_dichotomy", 100_000, 1000);
            c.params.tail_fraction = Some(0.1);
            c
        },
        accepts: Accepts {
            params: &["tail_fraction"],
            ..NOTHING
        },
        thresholds: localization::VOLKOV_THRESHOLDS,
        run: localization::volkov,
    },
    Entry {
        id: "esirw_attracting_edge",
        description: "Strongly edge-reinforced walks end on one edge or an odd cycle",
        defaults: || {
            let mut c = config("esirw_attracting_edge", 10_000, 1000);
            c.params.tail_fraction = Some(0.1);
            c
        },
        accepts: Accepts {
            weight: true,
            params: &["tail_fraction"],
            ..NOTHING
        },
        thresholds: localization::EDGE_THRESHOLDS,
        run: localization::attracting_edge,
    },
    Entry {
        id: "coupling_monotonicity",
        description: "Coupled directed time-lines walks keep their crossing order",
        defaults: || config("coupling_monotonicity", 10_000, 1000),
        accepts: Accepts {
            weight: true,
            ..NOTHING
        },
        thresholds: coupling::THRESHOLDS,
        run: coupling::run,
    },
    Entry {
        id: "kendall_transform",
        description: "Time-changed birth process against a unit Poisson process",
        defaults: || {
            let mut c = config("kendall_transform", 500, 1000);
            c.params.n0 = Some(50);
            c
        },
        accepts: Accepts {
            params: &["n0"],
            ..NOTHING
        },
        thresholds: kendall::THRESHOLDS,
        run: kendall::run,
    },
    Entry {
        id: "martingale_means",
        description: "Sample means of urn and walk martingales stay at their initial values",
        defaults: || {
            let mut c = config("martingale_means", 1000, 10_000);
            c.params.lambdas = Some(vec![0.5, 1.0, 2.0]);
            c.params.checkpoints = Some(vec![100, 1000]);
            c
        },
        accepts: Accepts {
            weight: true,
            params: &["lambdas", "checkpoints"],
            ..NOTHING
        },
        thresholds: urn::MARTINGALE_THRESHOLDS,
        run: urn::martingales,
    },
    Entry {
        id: "sellke_parity",
        description: "Parity-alternating weights trap the edge walk at its start",
        defaults: || {
            let mut c = config("sellke_parity", 10_000, 10_000);
            c.params.checkpoints = Some(vec![1000, 10_000]);
            c.params.tail_fraction = Some(0.1);
            c.params.contrast_replications = Some(1000);
            c.params.contrast_steps = Some(10_000);
            c
        },
        accepts: Accepts {
            params: &[
                "checkpoints",
                "tail_fraction",
                "contrast_replications",
                "contrast_steps",
            ],
            ..NOTHING
        },
        thresholds: localization::SELLKE_THRESHOLDS,
        run: localization::sellke,
    },
    Entry {
        id: "predicate_suite",
        description: "Stability predicate and multipartite recognizer against exhaustive oracles",
        defaults: || config("predicate_suite", 0, 1000),
        accepts: NOTHING,
        thresholds: predicate::THRESHOLDS,
        run: predicate::run,
    },
];
