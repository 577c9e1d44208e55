//! Per-vertex time scales.
//!
//! A vertex scale is an increasing `C¹` homeomorphism `h` of the nonnegative
//! half-line with `h(0) = 0` and positive derivative, together with the
//! derived objects the density formulas need:
//!
//! - `speed(s) = h'(h⁻¹(s))` — the rate at which the reparametrized clock
//!   advances per unit of raw clock while the walker sits at the vertex;
//! - `elapsed_x(s)` — the primitive of `1/speed` vanishing at 0, i.e. the
//!   raw-clock local time spent at the vertex when its reparametrized local
//!   time is `s`.
//!
//! Parametric kinds use closed forms. The numeric kind is given `h` alone
//! and falls back to monotone bisection for the inverse, central differences
//! for the derivative, and adaptive quadrature for `elapsed_x`.

use std::sync::Arc;

use crate::numeric;
use crate::{Error, Result, Vertex};

/// Closed-form scale function.
pub type ScaleFn = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// User-supplied closed forms for all five scale functions.
pub struct GenericScale {
    pub name: String,
    pub h: ScaleFn,
    pub h_prime: ScaleFn,
    pub h_inv: ScaleFn,
    pub speed: ScaleFn,
    pub elapsed_x: ScaleFn,
}

/// User-supplied `h` only; everything else computed numerically.
pub struct NumericScale {
    pub name: String,
    pub h: ScaleFn,
}

/// Time scale of a single vertex.
#[derive(Clone)]
pub enum VertexScale {
    /// `h(x) = x² + 2x`; `speed(s) = 2√(s+1)`, `elapsed_x(s) = √(s+1) − 1`.
    Vrjp,
    /// `h(x) = x`.
    Identity,
    /// `h(x) = (x/c)² + 2(x/c)` — the quadratic scale after dividing the
    /// vertex's local time by `c`.
    ScaledVrjp { c: f64 },
    Generic(Arc<GenericScale>),
    Numeric(Arc<NumericScale>),
}

impl std::fmt::Debug for VertexScale {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VertexScale::Vrjp => write!(f, "VertexScale::Vrjp"),
            VertexScale::Identity => write!(f, "VertexScale::Identity"),
            VertexScale::ScaledVrjp { c } => write!(f, "VertexScale::ScaledVrjp({c})"),
            VertexScale::Generic(g) => write!(f, "VertexScale::Generic({})", g.name),
            VertexScale::Numeric(n) => write!(f, "VertexScale::Numeric({})", n.name),
        }
    }
}

fn check_domain(x: f64) -> Result<()> {
    if x < 0.0 || !x.is_finite() {
        Err(Error::NegativeLocalTime(x))
    } else {
        Ok(())
    }
}

impl VertexScale {
    pub fn h(&self, x: f64) -> Result<f64> {
        check_domain(x)?;
        Ok(match self {
            VertexScale::Vrjp => x * x + 2.0 * x,
            VertexScale::Identity => x,
            VertexScale::ScaledVrjp { c } => {
                let u = x / c;
                u * u + 2.0 * u
            }
            VertexScale::Generic(g) => (g.h)(x),
            VertexScale::Numeric(n) => (n.h)(x),
        })
    }

    pub fn h_prime(&self, x: f64) -> Result<f64> {
        check_domain(x)?;
        Ok(match self {
            VertexScale::Vrjp => 2.0 * (1.0 + x),
            VertexScale::Identity => 1.0,
            VertexScale::ScaledVrjp { c } => 2.0 / c * (x / c + 1.0),
            VertexScale::Generic(g) => (g.h_prime)(x),
            VertexScale::Numeric(n) => numeric::central_diff(&n.h, x),
        })
    }

    pub fn h_inv(&self, s: f64) -> Result<f64> {
        check_domain(s)?;
        Ok(match self {
            VertexScale::Vrjp => (s + 1.0).sqrt() - 1.0,
            VertexScale::Identity => s,
            VertexScale::ScaledVrjp { c } => c * ((s + 1.0).sqrt() - 1.0),
            VertexScale::Generic(g) => (g.h_inv)(s),
            VertexScale::Numeric(n) => numeric::bisect_increasing(&n.h, s)?,
        })
    }

    /// `h'(h⁻¹(s))`.
    pub fn speed(&self, s: f64) -> Result<f64> {
        check_domain(s)?;
        Ok(match self {
            VertexScale::Vrjp => 2.0 * (s + 1.0).sqrt(),
            VertexScale::Identity => 1.0,
            VertexScale::ScaledVrjp { c } => 2.0 / c * (s + 1.0).sqrt(),
            VertexScale::Generic(g) => (g.speed)(s),
            VertexScale::Numeric(_) => self.h_prime(self.h_inv(s)?)?,
        })
    }

    /// Primitive of `1/speed` vanishing at 0.
    pub fn elapsed_x(&self, s: f64) -> Result<f64> {
        check_domain(s)?;
        Ok(match self {
            VertexScale::Vrjp => (s + 1.0).sqrt() - 1.0,
            VertexScale::Identity => s,
            VertexScale::ScaledVrjp { c } => c * ((s + 1.0).sqrt() - 1.0),
            VertexScale::Generic(g) => (g.elapsed_x)(s),
            VertexScale::Numeric(_) => {
                let integrand = |v: f64| {
                    let sp = self.speed(v).unwrap_or(f64::NAN);
                    1.0 / sp
                };
                numeric::adaptive_simpson(&integrand, 0.0, s)?
            }
        })
    }
}

/// Per-vertex assignment of scales for a whole graph.
#[derive(Debug, Clone)]
pub struct TimeScale {
    scales: Vec<VertexScale>,
}

impl TimeScale {
    pub fn uniform(vertex_count: usize, scale: VertexScale) -> Self {
        TimeScale {
            scales: vec![scale; vertex_count],
        }
    }

    pub fn vrjp(vertex_count: usize) -> Self {
        Self::uniform(vertex_count, VertexScale::Vrjp)
    }

    pub fn identity(vertex_count: usize) -> Self {
        Self::uniform(vertex_count, VertexScale::Identity)
    }

    /// Per-vertex `ScaledVrjp` with scales `c`, all positive.
    pub fn scaled_vrjp(c: &[f64]) -> Result<Self> {
        for &ci in c {
            if !(ci.is_finite() && ci > 0.0) {
                return Err(Error::InvalidScale(format!("vertex scale {ci} is not positive")));
            }
        }
        Ok(TimeScale {
            scales: c.iter().map(|&c| VertexScale::ScaledVrjp { c }).collect(),
        })
    }

    pub fn from_scales(scales: Vec<VertexScale>) -> Self {
        TimeScale { scales }
    }

    pub fn vertex_count(&self) -> usize {
        self.scales.len()
    }

    pub fn vertex(&self, v: Vertex) -> Result<&VertexScale> {
        self.scales.get(v as usize).ok_or(Error::VertexOutOfRange {
            vertex: v,
            count: self.scales.len(),
        })
    }
}
