//! Interchangeable time propagators for constant linear generators, registered by name.

use std::collections::HashMap;

use num_complex::Complex64 as C64;

use super::expm::exponential_offset;
use super::ode::{apply_offset, propagate_ode, validate_grid, OdeOptions};
use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

pub trait Propagator: Send + Sync {
    fn name(&self) -> &'static str;

    /// State at every time of `t_grid` (strictly ascending, ps) starting from `y0` at `t_grid[0]`.
    fn propagate(&self, generator: &ComplexMatrix, y0: &[C64], t_grid: &[f64]) -> Result<Vec<Vec<C64>>>;
}

#[derive(Clone, Debug, Default)]
pub struct Rk4Propagator {
    pub options: OdeOptions,
}

impl Propagator for Rk4Propagator {
    fn name(&self) -> &'static str {
        "rk4"
    }

    fn propagate(&self, generator: &ComplexMatrix, y0: &[C64], t_grid: &[f64]) -> Result<Vec<Vec<C64>>> {
        propagate_ode(generator, y0, t_grid, &self.options)
    }
}

/// Exact propagation through `exp(L Δt)`, one exponential per distinct interval length
/// (held as its offset from the identity).
#[derive(Clone, Debug, Default)]
pub struct ExpmPropagator;

impl Propagator for ExpmPropagator {
    fn name(&self) -> &'static str {
        "expm"
    }

    fn propagate(&self, generator: &ComplexMatrix, y0: &[C64], t_grid: &[f64]) -> Result<Vec<Vec<C64>>> {
        validate_grid(generator, y0, t_grid)?;
        let mut cache: HashMap<u64, ComplexMatrix> = HashMap::new();
        let mut out = Vec::with_capacity(t_grid.len());
        out.push(y0.to_vec());
        let mut y = y0.to_vec();
        for w in t_grid.windows(2) {
            let dt = w[1] - w[0];
            let step = match cache.get(&dt.to_bits()) {
                Some(m) => m,
                None => {
                    let m = exponential_offset(&generator.scale_real(dt))?;
                    cache.entry(dt.to_bits()).or_insert(m)
                }
            };
            y = apply_offset(step, &y);
            out.push(y.clone());
        }
        Ok(out)
    }
}

pub struct PropagatorRegistry {
    entries: Vec<Box<dyn Propagator>>,
}

impl PropagatorRegistry {
    pub fn empty() -> Self {
        Self { entries: Vec::new() }
    }

    /// `rk4` (default) and `expm`.
    pub fn standard() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(Rk4Propagator::default()));
        r.register(Box::new(ExpmPropagator));
        r
    }

    /// Later registrations replace earlier ones with the same name.
    pub fn register(&mut self, p: Box<dyn Propagator>) {
        self.entries.retain(|e| e.name() != p.name());
        self.entries.push(p);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Propagator> {
        self.entries
            .iter()
            .find(|e| e.name() == name)
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::InvalidInput(format!("unknown propagator '{name}' (available: {})", self.names().join(", "))))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name()).collect()
    }
}

impl Default for PropagatorRegistry {
    fn default() -> Self {
        Self::standard()
    }
}

pub const DEFAULT_PROPAGATOR: &str = "rk4";
