//! Two-time correlations of the filtered lines by the quantum regression
//! theorem: normalized `g²` between lines, `g¹` of a detection window, the
//! emission spectrum obtained from `g¹`, and Gaussian detector response.

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::dressed::{dressed_states, line_catalog, DressedSet, LineCatalog, LineId, Side};
use crate::dynamics::{steady_state, DensityMatrix, StateDiagnostics, TRAJECTORY_TRACE_TOL};
use crate::error::{Error, Result};
use crate::numerics::matrix::max_abs_diff;
use crate::numerics::{hermitian_eigen, ComplexMatrix, Propagator};
use crate::qsystem::{system_liouvillian, Superoperator, SystemParams, DIM};

/// Steady-state intensity below which a line is dark, 1/ps.
pub const DARK_LINE_THRESHOLD: f64 = 1e-15;
/// Tolerated imaginary part of a correlation, relative to its largest magnitude.
pub const IMAGINARY_TOL: f64 = 1e-10;
/// `|g¹|` at the end of the record above which the spectrum is flagged as truncated.
pub const G1_TRUNCATION: f64 = 1e-4;
/// Gaussian kernel half-width in standard deviations.
pub const KERNEL_HALF_WIDTH: f64 = 6.0;
/// Default detector resolution (standard deviation), ps.
pub const DEFAULT_DETECTOR_SIGMA: f64 = 140.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    Normalized,
    Raw,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationTrace<T> {
    /// Delay or time grid, ps.
    pub delays: Vec<f64>,
    pub values: Vec<T>,
    pub normalization: Normalization,
    /// Detector standard deviation applied, ps.
    pub convolved_sigma: Option<f64>,
    pub warnings: Vec<String>,
}

/// Sign rule for cross-line delays: positive delay means the excitonic (R)
/// photon is detected after the biexcitonic (L) photon; negative delay means
/// the L photon follows a triggering R photon.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DelayConvention;

impl DelayConvention {
    /// Orders a pair so that positive delay follows the convention: the L line
    /// goes first for mixed pairs, same-side pairs keep their order.
    pub fn orient(a: LineId, b: LineId) -> (LineId, LineId) {
        if a.side == Side::R && b.side == Side::L {
            (b, a)
        } else {
            (a, b)
        }
    }
}

/// Everything correlation functions need at one parameter point.
#[derive(Clone, Debug)]
pub struct CorrelationSetup {
    pub params: SystemParams,
    pub liouvillian: Superoperator,
    pub dressed: DressedSet,
    pub catalog: LineCatalog,
    pub steady_state: DensityMatrix,
}

impl CorrelationSetup {
    pub fn new(p: &SystemParams) -> Result<Self> {
        let liouvillian = system_liouvillian(p)?;
        let dressed = dressed_states(p)?;
        let catalog = line_catalog(p, &dressed)?;
        let steady_state = steady_state(&liouvillian)?;
        Ok(Self { params: *p, liouvillian, dressed, catalog, steady_state })
    }

    pub fn jump(&self, line: LineId) -> &ComplexMatrix {
        &self.catalog.get(line).operator
    }

    /// `tr(J†J ρ_ss)`, 1/ps.
    pub fn intensity(&self, line: LineId) -> f64 {
        let j = self.jump(line);
        self.steady_state.expectation(&(&j.dagger() * j)).re
    }

    fn bright_intensity(&self, line: LineId) -> Result<f64> {
        let intensity = self.intensity(line);
        if !(intensity >= DARK_LINE_THRESHOLD) {
            return Err(Error::DarkLine { line, intensity });
        }
        Ok(intensity)
    }
}

#[derive(Clone, Debug)]
pub struct QrtResult {
    pub values: Vec<f64>,
    /// Invariants of the normalized conditional state `AρA† / tr(AρA†)`.
    pub diagnostics: StateDiagnostics,
}

fn check_delay_grid(tau: &[f64]) -> Result<()> {
    if tau.is_empty() || tau.iter().any(|t| !t.is_finite()) || tau.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("delay grid must be finite and strictly ascending".into()));
    }
    Ok(())
}

fn conditional_diagnostics(states: &[Vec<C64>], norm: f64) -> Result<StateDiagnostics> {
    let mut diag = StateDiagnostics::default();
    if norm <= 0.0 {
        return Ok(diag);
    }
    for v in states {
        let m = ComplexMatrix::unvectorize(v, DIM)?.scale_real(1.0 / norm);
        let eig = hermitian_eigen(&m.hermitian_part())?;
        diag = diag.merge(StateDiagnostics {
            states_checked: 1,
            max_trace_error: (m.trace() - 1.0).norm(),
            max_hermiticity_error: m.hermiticity_error(),
            min_eigenvalue: eig.eigenvalues[0],
        });
    }
    diag.check(TRAJECTORY_TRACE_TOL)?;
    Ok(diag)
}

/// `G(τ) = tr(B†B e^{Lτ}[A ρ A†])` on a grid starting at 0.
pub fn qrt_two_time(
    l: &Superoperator,
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    rho: &DensityMatrix,
    tau: &[f64],
    propagator: &dyn Propagator,
) -> Result<QrtResult> {
    check_delay_grid(tau)?;
    if tau[0] != 0.0 {
        return Err(Error::InvalidInput(format!("delay grid must start at 0, starts at {}", tau[0])));
    }
    let conditioned = &(a * rho.matrix()) * &a.dagger();
    let states = propagator.propagate(l.matrix(), &conditioned.vectorize(), tau)?;
    let bb = &b.dagger() * b;
    let mut values = Vec::with_capacity(states.len());
    let mut max_mag: f64 = 0.0;
    let mut max_im: f64 = 0.0;
    for v in &states {
        let g = (&bb * &ComplexMatrix::unvectorize(v, DIM)?).trace();
        if !g.re.is_finite() || !g.im.is_finite() {
            return Err(Error::Numerical("non-finite two-time correlation".into()));
        }
        max_mag = max_mag.max(g.norm());
        max_im = max_im.max(g.im.abs());
        values.push(g.re);
    }
    if max_im > IMAGINARY_TOL * max_mag {
        return Err(Error::Numerical(format!("two-time correlation has imaginary part {max_im:.3e} (magnitude {max_mag:.3e})")));
    }
    let diagnostics = conditional_diagnostics(&states, conditioned.trace().re)?;
    Ok(QrtResult { values, diagnostics })
}

#[derive(Clone, Debug)]
pub struct G2Result {
    pub trace: CorrelationTrace<f64>,
    pub intensity_a: f64,
    pub intensity_b: f64,
    pub diagnostics: StateDiagnostics,
}

/// Normalized `g²_ab(τ)`: `τ ≥ 0` detects `a` first, `τ < 0` detects `b` first
/// (the swapped regression). Normalized by steady-state intensities.
pub fn g2_cross(setup: &CorrelationSetup, a: LineId, b: LineId, tau: &[f64], propagator: &dyn Propagator) -> Result<G2Result> {
    check_delay_grid(tau)?;
    let ia = setup.bright_intensity(a)?;
    let ib = setup.bright_intensity(b)?;
    let norm = ia * ib;
    let (ja, jb) = (setup.jump(a), setup.jump(b));
    let l = &setup.liouvillian;
    let rho = &setup.steady_state;

    let mut values = vec![0.0; tau.len()];
    let mut diagnostics = StateDiagnostics::default();
    let split = tau.partition_point(|&t| t < 0.0);
    if split < tau.len() {
        let mut grid: Vec<f64> = tau[split..].to_vec();
        let pad = grid[0] != 0.0;
        if pad {
            grid.insert(0, 0.0);
        }
        let r = qrt_two_time(l, ja, jb, rho, &grid, propagator)?;
        diagnostics = diagnostics.merge(r.diagnostics);
        for (slot, v) in values[split..].iter_mut().zip(r.values.iter().skip(pad as usize)) {
            *slot = v / norm;
        }
    }
    if split > 0 {
        let mut grid: Vec<f64> = tau[..split].iter().rev().map(|t| -t).collect();
        grid.insert(0, 0.0);
        let r = qrt_two_time(l, jb, ja, rho, &grid, propagator)?;
        diagnostics = diagnostics.merge(r.diagnostics);
        for (k, v) in r.values.iter().skip(1).enumerate() {
            values[split - 1 - k] = v / norm;
        }
    }
    Ok(G2Result {
        trace: CorrelationTrace {
            delays: tau.to_vec(),
            values,
            normalization: Normalization::Normalized,
            convolved_sigma: None,
            warnings: Vec::new(),
        },
        intensity_a: ia,
        intensity_b: ib,
        diagnostics,
    })
}

/// `g¹(t) = tr(J† e^{Lt}[J ρ]) / tr(J†J ρ)` with `J` the amplitude sum over `lines`.
pub fn g1(setup: &CorrelationSetup, lines: &[LineId], t: &[f64], propagator: &dyn Propagator) -> Result<CorrelationTrace<C64>> {
    check_delay_grid(t)?;
    if t[0] != 0.0 {
        return Err(Error::InvalidInput(format!("g1 time grid must start at 0, starts at {}", t[0])));
    }
    let j = setup.catalog.combined(lines)?;
    let rho = setup.steady_state.matrix();
    let norm = setup.steady_state.expectation(&(&j.dagger() * &j)).re;
    if !(norm >= DARK_LINE_THRESHOLD) {
        return Err(Error::DarkLine { line: lines[0], intensity: norm });
    }
    let states = propagator.propagate(setup.liouvillian.matrix(), &(&j * rho).vectorize(), t)?;
    let jd = j.dagger();
    let values = states
        .iter()
        .map(|v| Ok((&jd * &ComplexMatrix::unvectorize(v, DIM)?).trace() / norm))
        .collect::<Result<Vec<C64>>>()?;
    if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("non-finite first-order correlation".into()));
    }
    Ok(CorrelationTrace { delays: t.to_vec(), values, normalization: Normalization::Normalized, convolved_sigma: None, warnings: Vec::new() })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Spectrum {
    /// Photon energy relative to the laser, μeV, ascending.
    pub energies: Vec<f64>,
    /// Spectral density, ps.
    pub density: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Minimum zero-padding factor applied before the transform.
const SPECTRUM_PADDING: usize = 4;

/// `S(E) = 2 Re ∫₀^∞ g¹(t) e^{−iEt/ħ} dt` by trapezoidal FFT on a zero-padded
/// record. With this sign a line at rotating-frame energy `E₀` peaks at `E₀`,
/// and `Σ S ΔE = 2πħ Re g¹(0)` holds exactly on the discrete grid.
pub fn spectrum_from_g1(trace: &CorrelationTrace<C64>) -> Result<Spectrum> {
    let t = &trace.delays;
    if t.len() < 2 || t[0] != 0.0 {
        return Err(Error::InvalidInput("g1 record must start at t = 0 with at least two samples".into()));
    }
    let dt = uniform_step(t)?;
    let n = t.len();
    let m = (n * SPECTRUM_PADDING).next_power_of_two();
    let mut buf = vec![C64::new(0.0, 0.0); m];
    for (k, g) in trace.values.iter().enumerate() {
        buf[k] = if k == 0 { g * 0.5 } else { *g } * dt;
    }
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let de = 2.0 * std::f64::consts::PI * crate::constants::HBAR_UEV_PS / (m as f64 * dt);
    let half = (m / 2) as i64;
    let mut energies = Vec::with_capacity(m);
    let mut density = Vec::with_capacity(m);
    for s in -half..half {
        let idx = s.rem_euclid(m as i64) as usize;
        energies.push(s as f64 * de);
        density.push(2.0 * buf[idx].re);
    }
    let mut warnings = trace.warnings.clone();
    let tail = trace.values[n - 1].norm();
    if tail > G1_TRUNCATION {
        warnings.push(format!("g1 truncated: |g1| = {tail:.2e} at t = {} ps exceeds {G1_TRUNCATION:e}", t[n - 1]));
    }
    Ok(Spectrum { energies, density, warnings })
}

fn uniform_step(grid: &[f64]) -> Result<f64> {
    if grid.len() < 2 {
        return Err(Error::InvalidInput("grid needs at least two points".into()));
    }
    let dt = (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64;
    if !(dt > 0.0) || grid.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0)) {
        return Err(Error::InvalidInput("grid is not uniform".into()));
    }
    Ok(dt)
}

/// Standard deviation of a Gaussian with the given full width at half maximum.
pub fn fwhm_to_sigma(fwhm: f64) -> f64 {
    fwhm / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt())
}

/// Convolution with a unit-area Gaussian of standard deviation `sigma`,
/// truncated at ±6σ. Near the grid edges the kernel is renormalized over the
/// samples that exist.
pub fn convolve_detector(trace: &CorrelationTrace<f64>, sigma: f64) -> Result<CorrelationTrace<f64>> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidInput(format!("detector sigma must be finite and non-negative, got {sigma}")));
    }
    let dt = uniform_step(&trace.delays)?;
    let mut out = trace.clone();
    out.convolved_sigma = Some(sigma);
    if sigma == 0.0 {
        return Ok(out);
    }
    let half = (KERNEL_HALF_WIDTH * sigma / dt).floor() as i64;
    let kernel: Vec<f64> = (-half..=half).map(|j| (-0.5 * (j as f64 * dt / sigma).powi(2)).exp()).collect();
    let total: f64 = kernel.iter().sum();
    let kernel: Vec<f64> = kernel.iter().map(|w| w / total).collect();
    let n = trace.values.len() as i64;
    for (i, slot) in out.values.iter_mut().enumerate() {
        let (mut acc, mut weight) = (0.0, 0.0);
        for (k, w) in kernel.iter().enumerate() {
            let j = i as i64 + k as i64 - half;
            if (0..n).contains(&j) {
                acc += w * trace.values[j as usize];
                weight += w;
            }
        }
        *slot = acc / weight;
    }
    Ok(out)
}

/// Largest deviation between two traces on the same grid.
pub fn max_trace_difference(a: &CorrelationTrace<f64>, b: &CorrelationTrace<f64>) -> f64 {
    let to_c = |v: &[f64]| v.iter().map(|x| C64::new(*x, 0.0)).collect::<Vec<_>>();
    max_abs_diff(&to_c(&a.values), &to_c(&b.values))
}
