//! JSON schema for graphs, rate families, and time scales.
//!
//! A model file bundles the three:
//!
//! ```json
//! {
//!   "graph": {"vertices": 3, "edges": [[0, 1], [1, 2, 2.0], [0, 2]]},
//!   "rates": {"kind": "vrjp"},
//!   "timescale": {"kind": "vrjp"}
//! }
//! ```
//!
//! Edge weights default to 1.0 when omitted. Rate kinds mirror the library
//! constructors: `vrjp` (optional explicit weights), `linear` (ordered
//! `[i, j, slope, offset]` entries), `constant` (uniform `rate` or ordered
//! entries), `power`, and `tabulated`. Scale kinds are `vrjp`, `identity`,
//! `scaled_vrjp` (per-vertex scales), and `numeric` (a parametric base
//! evaluated through the numeric fallbacks).

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dynamics::{NumericScale, RateFamily, TimeScale, VertexScale};
use crate::graph::Graph;
use crate::{Error, Result, Vertex};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EdgeSpec {
    Weighted(Vertex, Vertex, f64),
    Plain(Vertex, Vertex),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphSpec {
    pub vertices: usize,
    pub edges: Vec<EdgeSpec>,
}

impl GraphSpec {
    pub fn build(&self) -> Result<Graph> {
        let weighted: Vec<_> = self
            .edges
            .iter()
            .map(|e| match *e {
                EdgeSpec::Weighted(i, j, w) => (i, j, w),
                EdgeSpec::Plain(i, j) => (i, j, 1.0),
            })
            .collect();
        Graph::new(self.vertices, &weighted)
    }

    pub fn from_graph(g: &Graph) -> Self {
        GraphSpec {
            vertices: g.vertex_count(),
            edges: g
                .edges()
                .map(|(i, j)| EdgeSpec::Weighted(i, j, g.weight(i, j).unwrap_or(1.0)))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateSpec {
    Vrjp {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<(Vertex, Vertex, f64)>>,
    },
    Linear {
        entries: Vec<(Vertex, Vertex, f64, f64)>,
    },
    Constant {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rate: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        entries: Option<Vec<(Vertex, Vertex, f64)>>,
    },
    Power {
        scale: f64,
        exponent: f64,
    },
    Tabulated {
        xs: Vec<f64>,
        values: Vec<f64>,
    },
}

impl RateSpec {
    pub fn build(&self, g: &Graph) -> Result<RateFamily> {
        match self {
            RateSpec::Vrjp { weights: None } => Ok(RateFamily::vrjp_from_graph(g)),
            RateSpec::Vrjp {
                weights: Some(entries),
            } => RateFamily::vrjp(g, entries),
            RateSpec::Linear { entries } => RateFamily::linear(g, entries),
            RateSpec::Constant {
                rate: Some(c),
                entries: None,
            } => RateFamily::constant_uniform(g, *c),
            RateSpec::Constant {
                rate: None,
                entries: Some(entries),
            } => RateFamily::constant(g, entries),
            RateSpec::Constant { .. } => Err(Error::InvalidConfig(
                "constant rates need exactly one of `rate` or `entries`".into(),
            )),
            RateSpec::Power { scale, exponent } => RateFamily::power(g, *scale, *exponent),
            RateSpec::Tabulated { xs, values } => RateFamily::tabulated(g, xs, values),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScaleSpec {
    Vrjp,
    Identity,
    ScaledVrjp { scales: Vec<f64> },
    Numeric { base: Box<ScaleSpec> },
}

impl ScaleSpec {
    pub fn build(&self, vertex_count: usize) -> Result<TimeScale> {
        match self {
            ScaleSpec::Vrjp => Ok(TimeScale::vrjp(vertex_count)),
            ScaleSpec::Identity => Ok(TimeScale::identity(vertex_count)),
            ScaleSpec::ScaledVrjp { scales } => {
                if scales.len() != vertex_count {
                    return Err(Error::InvalidConfig(format!(
                        "{} scales for {} vertices",
                        scales.len(),
                        vertex_count
                    )));
                }
                TimeScale::scaled_vrjp(scales)
            }
            ScaleSpec::Numeric { base } => {
                let inner = base.build(vertex_count)?;
                let wrapped = (0..vertex_count as Vertex)
                    .map(|v| {
                        let vs = inner.vertex(v)?.clone();
                        Ok(VertexScale::Numeric(Arc::new(NumericScale {
                            name: format!("numeric-over-{vs:?}"),
                            h: Box::new(move |x| {
                                vs.h(x).expect("scale evaluated on its domain")
                            }),
                        })))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(TimeScale::from_scales(wrapped))
            }
        }
    }
}

/// A complete model: graph, rates, and time scale.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSpec {
    pub graph: GraphSpec,
    pub rates: RateSpec,
    pub timescale: ScaleSpec,
}

impl ModelSpec {
    pub fn build(&self) -> Result<(Graph, RateFamily, TimeScale)> {
        let g = self.graph.build()?;
        let rates = self.rates.build(&g)?;
        let scale = self.timescale.build(g.vertex_count())?;
        Ok((g, rates, scale))
    }

    pub fn from_json(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| Error::InvalidConfig(format!("bad model JSON: {e}")))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }
}
