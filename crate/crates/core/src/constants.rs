//! Units: energies in μeV, times in ps, rates in 1/ps.

/// Reduced Planck constant in μeV·ps.
pub const HBAR_UEV_PS: f64 = 658.211_956_9;
