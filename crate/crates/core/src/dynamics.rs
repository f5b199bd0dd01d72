//! Density-matrix time evolution, steady states and the response to a
//! rectangular laser pulse, with extraction of the two-photon Rabi frequency.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::constants::HBAR_UEV_PS;
use crate::dressed::{dressed_states, line_catalog, LineId};
use crate::error::{Error, Result};
use crate::fit::{compare_models, ModelComparison, MIN_IMPROVEMENT};
use crate::numerics::{hermitian_eigen, solve_linear, ComplexMatrix, Propagator};
use crate::qsystem::{system_liouvillian, BareState, Superoperator, SystemParams, DIM};

pub const HERMITICITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
/// Most negative eigenvalue tolerated.
pub const POSITIVITY_TOL: f64 = 1e-9;

/// Worst-case invariant violations over a set of states.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StateDiagnostics {
    pub states_checked: usize,
    pub max_trace_error: f64,
    pub max_hermiticity_error: f64,
    pub min_eigenvalue: f64,
}

impl Default for StateDiagnostics {
    fn default() -> Self {
        Self { states_checked: 0, max_trace_error: 0.0, max_hermiticity_error: 0.0, min_eigenvalue: f64::INFINITY }
    }
}

impl StateDiagnostics {
    pub fn merge(self, other: StateDiagnostics) -> StateDiagnostics {
        StateDiagnostics {
            states_checked: self.states_checked + other.states_checked,
            max_trace_error: self.max_trace_error.max(other.max_trace_error),
            max_hermiticity_error: self.max_hermiticity_error.max(other.max_hermiticity_error),
            min_eigenvalue: self.min_eigenvalue.min(other.min_eigenvalue),
        }
    }

    /// Trace within `trace_tol`, Hermitian to [`HERMITICITY_TOL`], eigenvalues above `−POSITIVITY_TOL`.
    pub fn check(&self, trace_tol: f64) -> Result<()> {
        if self.max_hermiticity_error > HERMITICITY_TOL {
            return Err(Error::InvalidState(format!("hermiticity error {:.3e}", self.max_hermiticity_error)));
        }
        if self.max_trace_error > trace_tol {
            return Err(Error::InvalidState(format!("trace error {:.3e}", self.max_trace_error)));
        }
        if self.min_eigenvalue < -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {:.3e}", self.min_eigenvalue)));
        }
        Ok(())
    }
}

/// Hermitian, unit-trace, positive semidefinite 4x4 state.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if m.rows() != DIM || m.cols() != DIM {
            return Err(Error::InvalidState(format!("density matrix must be {DIM}x{DIM}, got {}x{}", m.rows(), m.cols())));
        }
        if !m.all_finite() {
            return Err(Error::InvalidState("non-finite entry".into()));
        }
        let rho = Self(m);
        rho.diagnostics()?.check(TRACE_TOL)?;
        Ok(rho)
    }

    pub fn pure(s: BareState) -> Self {
        Self(s.projector())
    }

    /// `|ψ⟩⟨ψ|` for a normalized `ψ`.
    pub fn from_ket(psi: &[C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if psi.len() != DIM || !(norm > 0.0) {
            return Err(Error::InvalidState("state vector must be nonzero with four components".into()));
        }
        Self::new(ComplexMatrix::outer(psi, psi).scale_real(1.0 / norm))
    }

    pub fn from_vectorized(v: &[C64]) -> Result<Self> {
        Self::new(ComplexMatrix::unvectorize(v, DIM)?)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn vectorize(&self) -> Vec<C64> {
        self.0.vectorize()
    }

    /// `tr(op ρ)`
    pub fn expectation(&self, op: &ComplexMatrix) -> C64 {
        (op * &self.0).trace()
    }

    pub fn population(&self, s: BareState) -> f64 {
        self.0[(s.index(), s.index())].re
    }

    pub fn diagnostics(&self) -> Result<StateDiagnostics> {
        diagnose(&self.0)
    }
}

fn diagnose(m: &ComplexMatrix) -> Result<StateDiagnostics> {
    let eig = hermitian_eigen(&m.hermitian_part())?;
    Ok(StateDiagnostics {
        states_checked: 1,
        max_trace_error: (m.trace() - 1.0).norm(),
        max_hermiticity_error: m.hermiticity_error(),
        min_eigenvalue: eig.eigenvalues[0],
    })
}

/// Null vector of `L` normalized to unit trace, from `L` with its first row
/// replaced by the trace functional.
pub fn steady_state(l: &Superoperator) -> Result<DensityMatrix> {
    let n = DIM * DIM;
    if l.dim() != DIM {
        return Err(Error::InvalidInput(format!("steady state expects a {n}x{n} generator")));
    }
    let mut a = l.matrix().clone();
    let trace = l.trace_functional();
    for (j, t) in trace.iter().enumerate() {
        a[(0, j)] = t.conj();
    }
    let mut b = vec![C64::new(0.0, 0.0); n];
    b[0] = C64::new(1.0, 0.0);
    let x = solve_linear(&a, &b).map_err(|e| match e {
        Error::Singular { condition } => Error::NonUniqueSteadyState { condition },
        other => other,
    })?;
    let m = ComplexMatrix::unvectorize(&x, DIM)?;
    DensityMatrix::new(m.hermitian_part())
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub diagnostics: StateDiagnostics,
}

/// Raw propagated vectors to checked states. Trace drift is held to `trace_tol`.
fn collect_states(raw: Vec<Vec<C64>>, trace_tol: f64) -> Result<(Vec<DensityMatrix>, StateDiagnostics)> {
    let mut diag = StateDiagnostics::default();
    let mut states = Vec::with_capacity(raw.len());
    for v in raw {
        let m = ComplexMatrix::unvectorize(&v, DIM)?;
        if !m.all_finite() {
            return Err(Error::Numerical("non-finite density matrix during propagation".into()));
        }
        diag = diag.merge(diagnose(&m)?);
        states.push(DensityMatrix(m));
    }
    diag.check(trace_tol)?;
    Ok((states, diag))
}

/// Trace tolerance for propagated states (round-off accumulates over many steps).
pub const TRAJECTORY_TRACE_TOL: f64 = 1e-9;

/// States at every time of `t_grid`, starting from `rho0` at `t_grid[0]`.
pub fn evolve(l: &Superoperator, rho0: &DensityMatrix, t_grid: &[f64], propagator: &dyn Propagator) -> Result<Trajectory> {
    let raw = propagator.propagate(l.matrix(), &rho0.vectorize(), t_grid)?;
    let (states, diagnostics) = collect_states(raw, TRAJECTORY_TRACE_TOL)?;
    Ok(Trajectory { times: t_grid.to_vec(), states, diagnostics })
}

/// Rectangular excitation pulse, times in ps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PulseShape {
    pub start: f64,
    pub duration: f64,
    pub repetition_period: f64,
}

pub const DEFAULT_PULSE_START: f64 = 1000.0;
pub const DEFAULT_PULSE_DURATION: f64 = 20_000.0;
/// 17 MHz repetition rate.
pub const DEFAULT_REPETITION_PERIOD: f64 = 1e6 / 17.0;

impl Default for PulseShape {
    fn default() -> Self {
        Self { start: DEFAULT_PULSE_START, duration: DEFAULT_PULSE_DURATION, repetition_period: DEFAULT_REPETITION_PERIOD }
    }
}

impl PulseShape {
    pub fn validate(&self) -> Result<()> {
        if ![self.start, self.duration, self.repetition_period].iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidInput("pulse timing must be finite".into()));
        }
        if !(self.duration > 0.0) {
            return Err(Error::InvalidInput(format!("pulse duration must be positive, got {}", self.duration)));
        }
        if self.duration >= self.repetition_period {
            return Err(Error::InvalidInput(format!(
                "pulse duration {} ps must be shorter than the repetition period {} ps",
                self.duration, self.repetition_period
            )));
        }
        Ok(())
    }

    pub fn end(&self) -> f64 {
        self.start + self.duration
    }

    pub fn is_on(&self, t: f64) -> bool {
        t > self.start && t <= self.end()
    }
}

/// The L and R detection windows: each collects its `plus` and `zero` lines on one detector.
pub const L_WINDOW: [LineId; 2] = [LineId::L_PLUS, LineId::L_ZERO];
pub const R_WINDOW: [LineId; 2] = [LineId::R_PLUS, LineId::R_ZERO];

#[derive(Clone, Debug, Serialize)]
pub struct PulseResponse {
    pub times: Vec<f64>,
    /// Emission rate into the L window, 1/ps.
    pub i_l: Vec<f64>,
    pub i_r: Vec<f64>,
    pub diagnostics: StateDiagnostics,
}

/// Intensities in the L and R windows during a rectangular pulse. The system
/// starts in the undriven steady state and evolves with the drive switched on
/// only inside the pulse. The filtered lines follow the instantaneous dressed
/// basis, so outside the pulse they reduce to the bare transitions. Each
/// window's operator is the amplitude sum of its line jumps.
pub fn pulse_response(p: &SystemParams, pulse: &PulseShape, t_grid: &[f64], propagator: &dyn Propagator) -> Result<PulseResponse> {
    pulse.validate()?;
    if t_grid.is_empty() || t_grid.windows(2).any(|w| !(w[1] > w[0])) || t_grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidInput("pulse time grid must be finite and strictly ascending".into()));
    }
    let first = t_grid[0];
    let last = t_grid[t_grid.len() - 1];
    if first > pulse.start || last < pulse.start {
        return Err(Error::InvalidInput(format!("time grid [{first}, {last}] ps must contain the pulse onset at {} ps", pulse.start)));
    }
    let undriven = p.with_hbar_omega(0.0);
    let l_off = system_liouvillian(&undriven)?;
    let l_on = system_liouvillian(p)?;
    let window_ops = |q: &SystemParams| -> Result<(ComplexMatrix, ComplexMatrix)> {
        let catalog = line_catalog(q, &dressed_states(q)?)?;
        let jl = catalog.combined(&L_WINDOW)?;
        let jr = catalog.combined(&R_WINDOW)?;
        Ok((&jl.dagger() * &jl, &jr.dagger() * &jr))
    };
    let ops_off = window_ops(&undriven)?;
    let ops_on = window_ops(p)?;

    // Segments split at the switching times; each grid time belongs to exactly one.
    let mut edges = vec![first];
    for s in [pulse.start, pulse.end()] {
        if s > first && s < last {
            edges.push(s);
        }
    }
    edges.push(last);
    edges.dedup();

    let rho0 = steady_state(&l_off)?;
    let mut y = rho0.vectorize();
    let mut states: Vec<Vec<C64>> = Vec::with_capacity(t_grid.len());
    states.push(y.clone());
    let mut next = 1;
    for seg in edges.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let l = if pulse.is_on(0.5 * (a + b)) { &l_on } else { &l_off };
        let mut times = vec![a];
        let begin = next;
        while next < t_grid.len() && t_grid[next] <= b {
            if t_grid[next] > a {
                times.push(t_grid[next]);
            }
            next += 1;
        }
        let ends_on_grid = times.last() == Some(&b);
        if !ends_on_grid {
            times.push(b);
        }
        let out = propagator.propagate(l.matrix(), &y, &times)?;
        y = out[out.len() - 1].clone();
        let keep = next - begin;
        states.extend(out.into_iter().skip(1).take(keep));
    }
    let (rhos, diagnostics) = collect_states(states, TRAJECTORY_TRACE_TOL)?;
    let mut i_l = Vec::with_capacity(rhos.len());
    let mut i_r = Vec::with_capacity(rhos.len());
    for (t, r) in t_grid.iter().zip(&rhos) {
        let (nl, nr) = if pulse.is_on(*t) { &ops_on } else { &ops_off };
        i_l.push(r.expectation(nl).re);
        i_r.push(r.expectation(nr).re);
    }
    Ok(PulseResponse { times: t_grid.to_vec(), i_l, i_r, diagnostics })
}

/// Length of the record analysed after the first L-window maximum, ps.
pub const FIT_WINDOW: f64 = 8000.0;

/// Indices of the post-rise record: from the first local maximum of `i_l` after
/// the pulse onset, for [`FIT_WINDOW`] ps or until the pulse ends.
pub fn fit_window(response: &PulseResponse, pulse: &PulseShape) -> Result<std::ops::Range<usize>> {
    let t = &response.times;
    let y = &response.i_l;
    let onset = t.iter().position(|&x| x > pulse.start).ok_or_else(|| Error::InvalidInput("no samples after pulse onset".into()))?;
    let peak = (onset.max(1)..t.len().saturating_sub(1))
        .find(|&k| y[k] >= y[k - 1] && y[k] > y[k + 1])
        .ok_or(Error::NoOscillation { improvement: 0.0 })?;
    let stop_time = (t[peak] + FIT_WINDOW).min(pulse.end());
    let stop = t.iter().rposition(|&x| x <= stop_time).unwrap_or(peak) + 1;
    if stop - peak < 8 {
        return Err(Error::InvalidInput("post-rise record is too short to fit".into()));
    }
    Ok(peak..stop)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RabiFit {
    /// Cyclic oscillation frequency, 1/ps.
    pub frequency: f64,
    pub decay_time: f64,
    /// Sum of squared residuals of the oscillatory model.
    pub residual: f64,
    pub monotone_residual: f64,
    pub improvement: f64,
}

impl RabiFit {
    /// `2πf`, rad/ps.
    pub fn angular_frequency(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.frequency
    }
}

impl From<ModelComparison> for RabiFit {
    fn from(c: ModelComparison) -> Self {
        Self {
            frequency: c.oscillatory.frequency,
            decay_time: c.oscillatory.decay_time,
            residual: c.oscillatory.rss,
            monotone_residual: c.monotone_rss,
            improvement: c.improvement,
        }
    }
}

/// Damped-cosine fit of a post-rise intensity record.
pub fn extract_rabi_frequency(times: &[f64], values: &[f64]) -> Result<RabiFit> {
    let cmp = compare_models(times, values)?;
    if cmp.improvement < MIN_IMPROVEMENT {
        return Err(Error::NoOscillation { improvement: cmp.improvement });
    }
    Ok(cmp.into())
}

/// Effective two-photon Rabi angular frequency `(ħΩ)² / (ħ ΔE_b)`, rad/ps.
pub fn predicted_two_photon_rabi(p: &SystemParams) -> f64 {
    p.hbar_omega * p.hbar_omega / (HBAR_UEV_PS * p.delta_eb)
}
