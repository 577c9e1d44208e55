//! Parametric jump-rate families `f_{i,j}`.
//!
//! A family assigns to every ordered pair of adjacent vertices a positive
//! continuous function of the target's local time. Families are defined
//! exactly on the ordered adjacent pairs of the graph they were built for.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::graph::Graph;
use crate::{Error, Result, Vertex};

type Pair = (Vertex, Vertex);

#[derive(Debug, Clone)]
enum RateKind {
    /// `f_{i,j}(x) = W_{i,j} (1 + x)` with symmetric edge weights.
    Vrjp { weights: BTreeMap<Pair, f64> },
    /// `f_{i,j}(x) = slope_{i,j} x + offset_{i,j}` per ordered pair.
    Linear { params: BTreeMap<Pair, (f64, f64)> },
    /// `f_{i,j}(x) = c_{i,j}`.
    Constant { rates: BTreeMap<Pair, f64> },
    /// `f(x) = scale (1 + x)^exponent`, the same on every ordered pair.
    Power {
        scale: f64,
        exponent: f64,
        pairs: BTreeSet<Pair>,
    },
    /// Monotone piecewise-linear interpolation of `(x, value)` knots, the
    /// same on every ordered pair; clamped beyond the last knot.
    Tabulated {
        knots: Arc<[f64]>,
        values: Arc<[f64]>,
        pairs: BTreeSet<Pair>,
    },
}

/// A family of jump-rate functions over the ordered adjacent pairs of a
/// graph. Immutable after construction.
#[derive(Debug, Clone)]
pub struct RateFamily {
    kind: RateKind,
}

impl RateFamily {
    /// Linearly reinforced rates `W_{i,j}(1 + x)` using the graph's edge
    /// weights.
    pub fn vrjp_from_graph(g: &Graph) -> Self {
        RateFamily {
            kind: RateKind::Vrjp {
                weights: g.ordered_weights(),
            },
        }
    }

    /// Linearly reinforced rates with explicit symmetric weights; every
    /// graph edge must receive exactly one weight.
    pub fn vrjp(g: &Graph, weights: &[(Vertex, Vertex, f64)]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for &(a, b, w) in weights {
            if !g.is_adjacent(a, b) {
                return Err(Error::NotAdjacent(a, b));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidRates(format!(
                    "weight {w} on edge {{{a},{b}}} is not positive"
                )));
            }
            if map.insert((a.min(b), a.max(b)), w).is_some() {
                return Err(Error::InvalidRates(format!("duplicate weight on {{{a},{b}}}")));
            }
        }
        let mut full = BTreeMap::new();
        for (i, j) in g.edges() {
            let w = map
                .get(&(i, j))
                .copied()
                .ok_or_else(|| Error::InvalidRates(format!("edge {{{i},{j}}} has no weight")))?;
            full.insert((i, j), w);
            full.insert((j, i), w);
        }
        Ok(RateFamily {
            kind: RateKind::Vrjp { weights: full },
        })
    }

    /// Affine rates per ordered pair; entries must cover every ordered
    /// adjacent pair exactly once, with positive slope and offset.
    pub fn linear(g: &Graph, entries: &[(Vertex, Vertex, f64, f64)]) -> Result<Self> {
        let mut params = BTreeMap::new();
        for &(i, j, slope, offset) in entries {
            if !g.is_adjacent(i, j) {
                return Err(Error::NotAdjacent(i, j));
            }
            if !(slope.is_finite() && slope > 0.0 && offset.is_finite() && offset > 0.0) {
                return Err(Error::InvalidRates(format!(
                    "linear rate on ({i},{j}) needs positive slope and offset, got {slope}, {offset}"
                )));
            }
            if params.insert((i, j), (slope, offset)).is_some() {
                return Err(Error::InvalidRates(format!("duplicate entry on ({i},{j})")));
            }
        }
        for pair in g.ordered_pairs() {
            if !params.contains_key(&pair) {
                return Err(Error::InvalidRates(format!(
                    "ordered pair ({},{}) has no linear entry",
                    pair.0, pair.1
                )));
            }
        }
        Ok(RateFamily {
            kind: RateKind::Linear { params },
        })
    }

    /// The same affine rate on every ordered pair.
    pub fn linear_uniform(g: &Graph, slope: f64, offset: f64) -> Result<Self> {
        let entries: Vec<_> = g
            .ordered_pairs()
            .map(|(i, j)| (i, j, slope, offset))
            .collect();
        Self::linear(g, &entries)
    }

    /// Constant rate `c` on every ordered pair.
    pub fn constant_uniform(g: &Graph, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidRates(format!("constant rate {c} is not positive")));
        }
        Ok(RateFamily {
            kind: RateKind::Constant {
                rates: g.ordered_pairs().map(|p| (p, c)).collect(),
            },
        })
    }

    /// Constant rates per ordered pair, full coverage required.
    pub fn constant(g: &Graph, entries: &[(Vertex, Vertex, f64)]) -> Result<Self> {
        let mut rates = BTreeMap::new();
        for &(i, j, c) in entries {
            if !g.is_adjacent(i, j) {
                return Err(Error::NotAdjacent(i, j));
            }
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::InvalidRates(format!("rate {c} on ({i},{j}) is not positive")));
            }
            if rates.insert((i, j), c).is_some() {
                return Err(Error::InvalidRates(format!("duplicate entry on ({i},{j})")));
            }
        }
        for pair in g.ordered_pairs() {
            if !rates.contains_key(&pair) {
                return Err(Error::InvalidRates(format!(
                    "ordered pair ({},{}) has no constant entry",
                    pair.0, pair.1
                )));
            }
        }
        Ok(RateFamily {
            kind: RateKind::Constant { rates },
        })
    }

    /// `scale (1 + x)^exponent` on every ordered pair.
    pub fn power(g: &Graph, scale: f64, exponent: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) || !exponent.is_finite() {
            return Err(Error::InvalidRates(format!(
                "power rate needs positive finite scale and finite exponent, got {scale}, {exponent}"
            )));
        }
        Ok(RateFamily {
            kind: RateKind::Power {
                scale,
                exponent,
                pairs: g.ordered_pairs().collect(),
            },
        })
    }

    /// Piecewise-linear interpolation of `(x, value)` knots on every ordered
    /// pair. Knots must start at 0, increase strictly, and carry positive
    /// values; queries beyond the last knot clamp to the last value.
    pub fn tabulated(g: &Graph, knots: &[f64], values: &[f64]) -> Result<Self> {
        if knots.len() != values.len() || knots.len() < 2 {
            return Err(Error::InvalidRates(
                "tabulated rate needs at least two (x, value) knots".into(),
            ));
        }
        if knots[0] != 0.0 {
            return Err(Error::InvalidRates("tabulated grid must start at x = 0".into()));
        }
        for w in knots.windows(2) {
            if w[1].is_nan() || w[1] <= w[0] {
                return Err(Error::InvalidRates("tabulated grid must be strictly increasing".into()));
            }
        }
        for &v in values {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidRates(format!("tabulated value {v} is not positive")));
            }
        }
        Ok(RateFamily {
            kind: RateKind::Tabulated {
                knots: knots.into(),
                values: values.into(),
                pairs: g.ordered_pairs().collect(),
            },
        })
    }

    /// Sample `f` on a uniform grid `0, step, …, x_max` and tabulate it.
    pub fn tabulated_from_fn(
        g: &Graph,
        f: impl Fn(f64) -> f64,
        x_max: f64,
        step: f64,
    ) -> Result<Self> {
        if !(step > 0.0 && x_max > step) {
            return Err(Error::InvalidRates("tabulation grid is empty".into()));
        }
        let count = (x_max / step).round() as usize + 1;
        let knots: Vec<f64> = (0..count).map(|k| k as f64 * step).collect();
        let values: Vec<f64> = knots.iter().map(|&x| f(x)).collect();
        Self::tabulated(g, &knots, &values)
    }

    /// Evaluate `f_{i,j}(x)`.
    pub fn eval(&self, i: Vertex, j: Vertex, x: f64) -> Result<f64> {
        if x < 0.0 || !x.is_finite() {
            return Err(Error::NegativeLocalTime(x));
        }
        let value = match &self.kind {
            RateKind::Vrjp { weights } => weights
                .get(&(i, j))
                .map(|w| w * (1.0 + x))
                .ok_or(Error::NotAdjacent(i, j))?,
            RateKind::Linear { params } => params
                .get(&(i, j))
                .map(|(slope, offset)| slope * x + offset)
                .ok_or(Error::NotAdjacent(i, j))?,
            RateKind::Constant { rates } => {
                *rates.get(&(i, j)).ok_or(Error::NotAdjacent(i, j))?
            }
            RateKind::Power { scale, exponent, pairs } => {
                if !pairs.contains(&(i, j)) {
                    return Err(Error::NotAdjacent(i, j));
                }
                scale * (1.0 + x).powf(*exponent)
            }
            RateKind::Tabulated { knots, values, pairs } => {
                if !pairs.contains(&(i, j)) {
                    return Err(Error::NotAdjacent(i, j));
                }
                interpolate(knots, values, x)
            }
        };
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::NonPositiveRate { i, j, x, value });
        }
        Ok(value)
    }

    /// Ordered adjacent pairs this family is defined on.
    pub fn pairs(&self) -> Vec<Pair> {
        match &self.kind {
            RateKind::Vrjp { weights } => weights.keys().copied().collect(),
            RateKind::Linear { params } => params.keys().copied().collect(),
            RateKind::Constant { rates } => rates.keys().copied().collect(),
            RateKind::Power { pairs, .. } | RateKind::Tabulated { pairs, .. } => {
                pairs.iter().copied().collect()
            }
        }
    }

    /// Slope/offset map when this is a linear family.
    pub fn linear_params(&self) -> Option<&BTreeMap<Pair, (f64, f64)>> {
        match &self.kind {
            RateKind::Linear { params } => Some(params),
            _ => None,
        }
    }

    /// Symmetric weight map when this is a linearly reinforced family.
    pub fn vrjp_weights(&self) -> Option<&BTreeMap<Pair, f64>> {
        match &self.kind {
            RateKind::Vrjp { weights } => Some(weights),
            _ => None,
        }
    }
}

fn interpolate(knots: &[f64], values: &[f64], x: f64) -> f64 {
    let last = knots.len() - 1;
    if x >= knots[last] {
        return values[last];
    }
    let hi = knots.partition_point(|&k| k <= x).min(last);
    let lo = hi - 1;
    let t = (x - knots[lo]) / (knots[hi] - knots[lo]);
    values[lo] + t * (values[hi] - values[lo])
}
