//! Scenario runners, one per `kind`, registered by name.

use std::collections::BTreeMap;

use cascade_core::constants::HBAR_UEV_PS;
use cascade_core::correlate::{convolve_detector, fwhm_to_sigma, g1, g2_cross, spectrum_from_g1, CorrelationSetup, DelayConvention};
use cascade_core::dressed::{anticrossing_map, power_map, SweepPoint};
use cascade_core::dynamics::{fit_window, predicted_two_photon_rabi, pulse_response, PulseShape, StateDiagnostics};
use cascade_core::fit::compare_models;
use cascade_core::numerics::{Propagator, PropagatorRegistry};
use cascade_core::Error as CoreError;

use crate::error::{Context, SimError};
use crate::scenario::{KeySpec, Scenario, ValueKind};

/// Upper bound on samples per grid, a guard against typos such as a 1e-6 ps step.
pub const MAX_GRID_POINTS: usize = 5_000_000;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

/// One CSV file: a single header row and fixed column order.
#[derive(Clone, Debug)]
pub struct Table {
    /// Appended to the output prefix as `_<suffix>`.
    pub suffix: Option<String>,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Clone, Debug, Default)]
pub struct RunOutput {
    pub tables: Vec<Table>,
    pub diagnostics: StateDiagnostics,
    /// Named scalar checks reported in the manifest.
    pub checks: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

pub trait ScenarioRunner: Send + Sync {
    fn kind(&self) -> &'static str;

    /// Keys this kind accepts beyond the common ones.
    fn keys(&self) -> &'static [KeySpec];

    /// Common keys this kind rejects because it sweeps that parameter.
    fn excluded_keys(&self) -> &'static [&'static str] {
        &[]
    }

    /// Cross-key validation, run at parse time.
    fn check(&self, _sc: &Scenario) -> Result<(), SimError> {
        Ok(())
    }

    fn run(&self, sc: &Scenario, propagator: &dyn Propagator) -> Result<RunOutput, SimError>;
}

pub struct RunnerRegistry {
    runners: Vec<Box<dyn ScenarioRunner>>,
    propagators: PropagatorRegistry,
}

impl RunnerRegistry {
    pub fn standard() -> Self {
        let runners: Vec<Box<dyn ScenarioRunner>> = vec![
            Box::new(SpectrumMapRunner),
            Box::new(DynamicsRunner),
            Box::new(G2Runner),
            Box::new(G1Runner),
            Box::new(SpectrumRunner),
            Box::new(AnticrossingRunner),
        ];
        Self { runners, propagators: PropagatorRegistry::standard() }
    }

    /// Later registrations replace earlier ones of the same kind.
    pub fn register(&mut self, r: Box<dyn ScenarioRunner>) {
        self.runners.retain(|e| e.kind() != r.kind());
        self.runners.push(r);
    }

    pub fn get(&self, kind: &str) -> Option<&dyn ScenarioRunner> {
        self.runners.iter().find(|r| r.kind() == kind).map(|b| b.as_ref())
    }

    pub fn kinds(&self) -> Vec<&'static str> {
        self.runners.iter().map(|r| r.kind()).collect()
    }

    pub fn propagators(&self) -> &PropagatorRegistry {
        &self.propagators
    }
}

impl Default for RunnerRegistry {
    fn default() -> Self {
        Self::standard()
    }
}

fn point(sc: &Scenario) -> String {
    let p = &sc.params;
    format!("ħΩ = {} μeV, Δ_laser = {} μeV", p.hbar_omega, p.delta_laser)
}

/// `0, step, 2 step, …` up to `max` (inclusive within rounding).
fn stepped(max: f64, step: f64) -> Vec<f64> {
    let n = (max / step + 1e-9).floor() as usize;
    (0..=n).map(|k| k as f64 * step).collect()
}

/// `stepped` mirrored to negative delays, zero included once.
fn symmetric(max: f64, step: f64) -> Vec<f64> {
    let half = stepped(max, step);
    half.iter().skip(1).rev().map(|t| -t).chain(half.iter().copied()).collect()
}

fn linspace(min: f64, max: f64, points: usize) -> Vec<f64> {
    (0..points).map(|k| min + (max - min) * k as f64 / (points - 1) as f64).collect()
}

fn check_step(sc: &Scenario, max_key: &str, step_key: &str) -> Result<(), SimError> {
    let (max, step) = (sc.number(max_key), sc.number(step_key));
    if step >= max {
        return Err(sc.error_at(step_key, format!("`{step_key}` ({step}) must be smaller than `{max_key}` ({max})")));
    }
    if max / step > MAX_GRID_POINTS as f64 {
        return Err(sc.error_at(step_key, format!("grid would exceed {MAX_GRID_POINTS} points")));
    }
    Ok(())
}

fn check_range(sc: &Scenario, min_key: &str, max_key: &str) -> Result<(), SimError> {
    if sc.number(min_key) >= sc.number(max_key) {
        return Err(sc.error_at(max_key, format!("`{max_key}` must exceed `{min_key}`")));
    }
    Ok(())
}

pub struct G2Runner;

impl ScenarioRunner for G2Runner {
    fn kind(&self) -> &'static str {
        "g2"
    }

    fn keys(&self) -> &'static [KeySpec] {
        const KEYS: &[KeySpec] = &[
            KeySpec::new("line_a", "lines", ValueKind::Line, None),
            KeySpec::new("line_b", "lines", ValueKind::Line, None),
            KeySpec::new("tau_max_ps", "grid", ValueKind::Positive, Some("15000")),
            KeySpec::new("tau_step_ps", "grid", ValueKind::Positive, Some("10")),
            KeySpec::new("detector_sigma_ps", "", ValueKind::NonNegative, Some("140")),
            KeySpec::new("detector_fwhm_ps", "", ValueKind::NonNegative, Some("")),
        ];
        KEYS
    }

    fn check(&self, sc: &Scenario) -> Result<(), SimError> {
        if sc.is_set("detector_sigma_ps") && sc.is_set("detector_fwhm_ps") {
            return Err(sc.error_at("detector_fwhm_ps", "set either `detector_sigma_ps` or `detector_fwhm_ps`, not both"));
        }
        check_step(sc, "tau_max_ps", "tau_step_ps")
    }

    fn run(&self, sc: &Scenario, propagator: &dyn Propagator) -> Result<RunOutput, SimError> {
        let sigma = if sc.is_set("detector_fwhm_ps") { fwhm_to_sigma(sc.number("detector_fwhm_ps")) } else { sc.number("detector_sigma_ps") };
        let (a, b) = DelayConvention::orient(sc.line("line_a"), sc.line("line_b"));
        let mut out = RunOutput::default();
        if (a, b) != (sc.line("line_a"), sc.line("line_b")) {
            out.notes.push(format!("pair reordered to ({a}, {b}) so that positive delay means the R photon follows the L photon"));
        }
        let tau = symmetric(sc.number("tau_max_ps"), sc.number("tau_step_ps"));
        let ctx = || format!("correlate: g2({a}, {b}) at {}", point(sc));
        let setup = CorrelationSetup::new(&sc.params).context(ctx)?;
        let g = g2_cross(&setup, a, b, &tau, propagator).context(ctx)?;
        let conv = convolve_detector(&g.trace, sigma).context(ctx)?;
        let tail = 0.9 * sc.number("tau_max_ps");
        let tail_dev = g.trace.delays.iter().zip(&g.trace.values).filter(|(t, _)| t.abs() >= tail).map(|(_, v)| (v - 1.0).abs()).fold(0.0, f64::max);
        out.checks.insert(format!("intensity_{a}_per_ps"), g.intensity_a);
        out.checks.insert(format!("intensity_{b}_per_ps"), g.intensity_b);
        out.checks.insert("g2_min".into(), g.trace.values.iter().copied().fold(f64::INFINITY, f64::min));
        out.checks.insert("g2_tail_max_deviation_from_1".into(), tail_dev);
        out.checks.insert("detector_sigma_ps".into(), sigma);
        out.diagnostics = g.diagnostics;
        out.tables.push(Table {
            suffix: None,
            header: vec!["tau_ps", "g2_raw", "g2_convolved"],
            rows: tau.iter().zip(g.trace.values.iter().zip(&conv.values)).map(|(t, (r, c))| vec![Cell::Num(*t), Cell::Num(*r), Cell::Num(*c)]).collect(),
        });
        Ok(out)
    }
}

pub struct G1Runner;

impl ScenarioRunner for G1Runner {
    fn kind(&self) -> &'static str {
        "g1"
    }

    fn keys(&self) -> &'static [KeySpec] {
        const KEYS: &[KeySpec] = &[
            KeySpec::new("lines", "lines", ValueKind::Lines, None),
            KeySpec::new("t_max_ps", "grid", ValueKind::Positive, Some("20000")),
            KeySpec::new("t_step_ps", "grid", ValueKind::Positive, Some("1")),
        ];
        KEYS
    }

    fn check(&self, sc: &Scenario) -> Result<(), SimError> {
        check_step(sc, "t_max_ps", "t_step_ps")
    }

    fn run(&self, sc: &Scenario, propagator: &dyn Propagator) -> Result<RunOutput, SimError> {
        let lines = sc.lines("lines");
        let t = stepped(sc.number("t_max_ps"), sc.number("t_step_ps"));
        let ctx = || format!("correlate: g1 of {lines:?} at {}", point(sc));
        let setup = CorrelationSetup::new(&sc.params).context(ctx)?;
        let g = g1(&setup, &lines, &t, propagator).context(ctx)?;
        let mut out = RunOutput::default();
        out.checks.insert("g1_abs_at_end".into(), g.values[g.values.len() - 1].norm());
        out.tables.push(Table {
            suffix: None,
            header: vec!["t_ps", "g1_re", "g1_im", "g1_abs"],
            rows: t.iter().zip(&g.values).map(|(t, z)| vec![Cell::Num(*t), Cell::Num(z.re), Cell::Num(z.im), Cell::Num(z.norm())]).collect(),
        });
        Ok(out)
    }
}

pub struct SpectrumRunner;

impl ScenarioRunner for SpectrumRunner {
    fn kind(&self) -> &'static str {
        "spectrum"
    }

    fn keys(&self) -> &'static [KeySpec] {
        const KEYS: &[KeySpec] = &[
            KeySpec::new("lines", "lines", ValueKind::Lines, None),
            KeySpec::new("t_max_ps", "grid", ValueKind::Positive, Some("30000")),
            KeySpec::new("t_step_ps", "grid", ValueKind::Positive, Some("0.5")),
            KeySpec::new("energy_min_ueV", "grid", ValueKind::Finite, Some("-2000")),
            KeySpec::new("energy_max_ueV", "grid", ValueKind::Finite, Some("2000")),
        ];
        KEYS
    }

    fn check(&self, sc: &Scenario) -> Result<(), SimError> {
        check_step(sc, "t_max_ps", "t_step_ps")?;
        check_range(sc, "energy_min_ueV", "energy_max_ueV")
    }

    fn run(&self, sc: &Scenario, propagator: &dyn Propagator) -> Result<RunOutput, SimError> {
        let lines = sc.lines("lines");
        let dt = sc.number("t_step_ps");
        let t = stepped(sc.number("t_max_ps"), dt);
        let ctx = || format!("correlate: spectrum of {lines:?} at {}", point(sc));
        let setup = CorrelationSetup::new(&sc.params).context(ctx)?;
        let g = g1(&setup, &lines, &t, propagator).context(ctx)?;
        let s = spectrum_from_g1(&g).context(ctx)?;
        let mut out = RunOutput::default();
        out.notes.extend(s.warnings.iter().cloned());
        let nyquist = std::f64::consts::PI * HBAR_UEV_PS / dt;
        for &line in &lines {
            let e = setup.catalog.get(line).frame_energy;
            if e.abs() >= nyquist {
                out.notes.push(format!("{line} at {e:.1} μeV lies beyond the ±{nyquist:.1} μeV band of t_step_ps = {dt}; it will alias"));
            }
        }
        let (lo, hi) = (sc.number("energy_min_ueV"), sc.number("energy_max_ueV"));
        let laser = sc.params.laser_energy();
        let de = s.energies[1] - s.energies[0];
        let area: f64 = s.density.iter().sum::<f64>() * de;
        out.checks.insert("integral_over_2pi_hbar".into(), area / (2.0 * std::f64::consts::PI * HBAR_UEV_PS));
        out.checks.insert("energy_step_ueV".into(), de);
        out.tables.push(Table {
            suffix: None,
            header: vec!["energy_ueV", "lab_energy_ueV", "spectral_density_ps"],
            rows: s
                .energies
                .iter()
                .zip(&s.density)
                .filter(|(e, _)| **e >= lo && **e <= hi)
                .map(|(e, d)| vec![Cell::Num(*e), Cell::Num(laser + e), Cell::Num(*d)])
                .collect(),
        });
        Ok(out)
    }
}

pub struct DynamicsRunner;

impl DynamicsRunner {
    fn pulse(sc: &Scenario) -> PulseShape {
        PulseShape {
            start: sc.number("pulse_start_ps"),
            duration: sc.number("pulse_duration_ps"),
            repetition_period: sc.number("repetition_period_ps"),
        }
    }
}

impl ScenarioRunner for DynamicsRunner {
    fn kind(&self) -> &'static str {
        "dynamics"
    }

    fn keys(&self) -> &'static [KeySpec] {
        const KEYS: &[KeySpec] = &[
            KeySpec::new("t_max_ps", "grid", ValueKind::Positive, Some("12000")),
            KeySpec::new("t_step_ps", "grid", ValueKind::Positive, Some("5")),
            KeySpec::new("pulse_start_ps", "pulse", ValueKind::NonNegative, Some("1000")),
            KeySpec::new("pulse_duration_ps", "pulse", ValueKind::Positive, Some("20000")),
            KeySpec::new("repetition_period_ps", "pulse", ValueKind::Positive, Some("58823.529411764706")),
        ];
        KEYS
    }

    fn check(&self, sc: &Scenario) -> Result<(), SimError> {
        check_step(sc, "t_max_ps", "t_step_ps")?;
        Self::pulse(sc).validate().map_err(|e| sc.error_at("pulse_duration_ps", e.to_string()))?;
        if sc.number("pulse_start_ps") > sc.number("t_max_ps") {
            return Err(sc.error_at("pulse_start_ps", "the pulse must start within the time grid"));
        }
        Ok(())
    }

    fn run(&self, sc: &Scenario, propagator: &dyn Propagator) -> Result<RunOutput, SimError> {
        let pulse = Self::pulse(sc);
        let t = stepped(sc.number("t_max_ps"), sc.number("t_step_ps"));
        let r = pulse_response(&sc.params, &pulse, &t, propagator).context(|| format!("dynamics: pulse response at {}", point(sc)))?;
        let mut out = RunOutput { diagnostics: r.diagnostics, ..Default::default() };
        match fit_window(&r, &pulse) {
            Ok(w) => {
                let times = &r.times[w.clone()];
                match (compare_models(times, &r.i_l[w.clone()]), compare_models(times, &r.i_r[w])) {
                    (Ok(l), Ok(rr)) => {
                        out.checks.insert("fit_window_start_ps".into(), times[0]);
                        out.checks.insert("I_L_rabi_frequency_per_ps".into(), l.oscillatory.frequency);
                        out.checks.insert("I_L_oscillation_improvement".into(), l.improvement);
                        out.checks.insert("I_R_oscillation_improvement".into(), rr.improvement);
                        out.checks.insert("predicted_rabi_angular_frequency_rad_per_ps".into(), predicted_two_photon_rabi(&sc.params));
                    }
                    (Err(e), _) | (_, Err(e)) => out.notes.push(format!("oscillation fit skipped: {e}")),
                }
            }
            Err(e) => out.notes.push(format!("oscillation fit skipped: {e}")),
        }
        out.tables.push(Table {
            suffix: None,
            header: vec!["t_ps", "I_L", "I_R"],
            rows: t.iter().zip(r.i_l.iter().zip(&r.i_r)).map(|(t, (l, rr))| vec![Cell::Num(*t), Cell::Num(*l), Cell::Num(*rr)]).collect(),
        });
        Ok(out)
    }
}

fn sweep_table(x_header: &'static str, x: impl Fn(&SweepPoint) -> f64, points: &[SweepPoint]) -> Table {
    let mut rows = Vec::with_capacity(points.len() * 6);
    for pt in points {
        for s in &pt.lines {
            rows.push(vec![Cell::Num(x(pt)), Cell::Text(s.line.to_string()), Cell::Num(s.lab_energy), Cell::Num(s.intensity)]);
        }
    }
    Table { suffix: None, header: vec![x_header, "line", "energy_ueV", "intensity_per_ps"], rows }
}

fn sweep_diagnostics(points: &[SweepPoint]) -> Result<StateDiagnostics, CoreError> {
    points.iter().try_fold(StateDiagnostics::default(), |acc, p| Ok(acc.merge(p.steady_state.diagnostics()?)))
}

pub struct AnticrossingRunner;

impl ScenarioRunner for AnticrossingRunner {
    fn kind(&self) -> &'static str {
        "anticrossing"
    }

    fn keys(&self) -> &'static [KeySpec] {
        const KEYS: &[KeySpec] = &[
            KeySpec::new("detuning_min_ueV", "grid", ValueKind::Finite, Some("-100")),
            KeySpec::new("detuning_max_ueV", "grid", ValueKind::Finite, Some("100")),
            KeySpec::new("detuning_points", "grid", ValueKind::Points, Some("201")),
        ];
        KEYS
    }

    fn excluded_keys(&self) -> &'static [&'static str] {
        &["delta_laser_ueV"]
    }

    fn check(&self, sc: &Scenario) -> Result<(), SimError> {
        check_range(sc, "detuning_min_ueV", "detuning_max_ueV")
    }

    fn run(&self, sc: &Scenario, _propagator: &dyn Propagator) -> Result<RunOutput, SimError> {
        let grid = linspace(sc.number("detuning_min_ueV"), sc.number("detuning_max_ueV"), sc.count("detuning_points"));
        let ctx = || format!("dressed: anticrossing sweep at ħΩ = {} μeV", sc.params.hbar_omega);
        let points = anticrossing_map(&sc.params, &grid).context(ctx)?;
        Ok(RunOutput {
            diagnostics: sweep_diagnostics(&points).context(ctx)?,
            tables: vec![sweep_table("detuning_ueV", |p| p.params.delta_laser, &points)],
            ..Default::default()
        })
    }
}

pub struct SpectrumMapRunner;

impl ScenarioRunner for SpectrumMapRunner {
    fn kind(&self) -> &'static str {
        "spectrum-map"
    }

    fn keys(&self) -> &'static [KeySpec] {
        const KEYS: &[KeySpec] = &[
            KeySpec::new("hbar_omega_min_ueV", "grid", ValueKind::NonNegative, Some("0")),
            KeySpec::new("hbar_omega_max_ueV", "grid", ValueKind::Positive, Some("400")),
            KeySpec::new("power_points", "grid", ValueKind::Points, Some("81")),
        ];
        KEYS
    }

    fn excluded_keys(&self) -> &'static [&'static str] {
        &["hbar_omega_ueV", "deb_over_hbar_omega"]
    }

    fn check(&self, sc: &Scenario) -> Result<(), SimError> {
        check_range(sc, "hbar_omega_min_ueV", "hbar_omega_max_ueV")
    }

    fn run(&self, sc: &Scenario, _propagator: &dyn Propagator) -> Result<RunOutput, SimError> {
        let grid = linspace(sc.number("hbar_omega_min_ueV"), sc.number("hbar_omega_max_ueV"), sc.count("power_points"));
        let ctx = || format!("dressed: power sweep at Δ_laser = {} μeV", sc.params.delta_laser);
        let points = power_map(&sc.params, &grid).context(ctx)?;
        Ok(RunOutput {
            diagnostics: sweep_diagnostics(&points).context(ctx)?,
            tables: vec![sweep_table("hbar_omega_ueV", |p| p.params.hbar_omega, &points)],
            ..Default::default()
        })
    }
}
