//! Damped-oscillation least squares by variable projection.
//!
//! The models are linear in their amplitudes once the decay time `τ` and the
//! frequency `f` are fixed:
//!
//! ```text
//! oscillatory: c₀ + c₁ t/T + e^{−t/τ} (c₂ cos 2πft + c₃ sin 2πft)
//! monotone:    c₀ + c₁ t/T + c₂ e^{−t/τ}
//! ```
//!
//! so the amplitudes are eliminated by a QR solve and only `(τ, f)` are searched:
//! a logarithmic grid followed by Nelder-Mead refinement in log space.

use crate::error::{Error, Result};

const FREQ_GRID: usize = 200;
const TAU_GRID_OSC: usize = 20;
const TAU_GRID_MONO: usize = 200;
const MIN_TAU_OSC: f64 = 50.0;
const MIN_TAU_MONO: f64 = 20.0;
/// Highest cyclic frequency searched, 1/ps.
pub const MAX_FREQUENCY: f64 = 0.05;
/// Relative residual improvement the oscillatory model must achieve.
pub const MIN_IMPROVEMENT: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OscillatoryFit {
    /// Cyclic frequency, 1/ps.
    pub frequency: f64,
    pub decay_time: f64,
    /// Sum of squared residuals.
    pub rss: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelComparison {
    pub oscillatory: OscillatoryFit,
    pub monotone_rss: f64,
    /// `(rss_monotone − rss_oscillatory) / rss_monotone`
    pub improvement: f64,
}

fn geomspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    (0..n).map(|k| (la + (lb - la) * k as f64 / (n - 1) as f64).exp()).collect()
}

/// Residual sum of squares of the best linear combination of `columns`
/// (modified Gram-Schmidt; dependent columns are dropped).
fn projected_rss(columns: Vec<Vec<f64>>, y: &[f64]) -> f64 {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(columns.len());
    for mut c in columns {
        let norm0 = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        for q in &basis {
            let d: f64 = q.iter().zip(&c).map(|(a, b)| a * b).sum();
            c.iter_mut().zip(q).for_each(|(x, qi)| *x -= d * qi);
        }
        let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-10 * norm0 && norm > 0.0 {
            c.iter_mut().for_each(|x| *x /= norm);
            basis.push(c);
        }
    }
    let mut r = y.to_vec();
    for q in &basis {
        let d: f64 = q.iter().zip(&r).map(|(a, b)| a * b).sum();
        r.iter_mut().zip(q).for_each(|(x, qi)| *x -= d * qi);
    }
    r.iter().map(|x| x * x).sum()
}

fn baseline(t: &[f64]) -> Vec<Vec<f64>> {
    let span = t[t.len() - 1];
    vec![vec![1.0; t.len()], t.iter().map(|x| x / span).collect()]
}

fn oscillatory_rss(t: &[f64], y: &[f64], tau: f64, f: f64) -> f64 {
    let mut cols = baseline(t);
    let w = 2.0 * std::f64::consts::PI * f;
    cols.push(t.iter().map(|x| (-x / tau).exp() * (w * x).cos()).collect());
    cols.push(t.iter().map(|x| (-x / tau).exp() * (w * x).sin()).collect());
    projected_rss(cols, y)
}

fn monotone_rss(t: &[f64], y: &[f64], tau: f64) -> f64 {
    let mut cols = baseline(t);
    cols.push(t.iter().map(|x| (-x / tau).exp()).collect());
    projected_rss(cols, y)
}

/// Nelder-Mead minimization (standard coefficients) from `x0` with initial simplex offsets `step`.
pub fn nelder_mead(f: impl Fn(&[f64]) -> f64, x0: &[f64], step: f64, max_iter: usize) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        let fx = f(&x);
        simplex.push((x, fx));
    }
    let lerp = |a: &[f64], b: &[f64], s: f64| -> Vec<f64> { a.iter().zip(b).map(|(p, q)| p + s * (q - p)).collect() };
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex.iter().flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs())).fold(0.0, f64::max);
        if spread < 1e-10 {
            break;
        }
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            centroid.iter_mut().zip(x).for_each(|(c, xi)| *c += xi / n as f64);
        }
        let worst = simplex[n].clone();
        let reflected = lerp(&centroid, &worst.0, -1.0);
        let fr = f(&reflected);
        if fr < simplex[0].1 {
            let expanded = lerp(&centroid, &worst.0, -2.0);
            let fe = f(&expanded);
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let contracted = if fr < worst.1 { lerp(&centroid, &reflected, 0.5) } else { lerp(&centroid, &worst.0, 0.5) };
            let fc = f(&contracted);
            if fc < worst.1.min(fr) {
                simplex[n] = (contracted, fc);
            } else {
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let x = lerp(&best, &entry.0, 0.5);
                    let fx = f(&x);
                    *entry = (x, fx);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

fn check_series(times: &[f64], values: &[f64]) -> Result<()> {
    if times.len() != values.len() {
        return Err(Error::InvalidInput(format!("{} times but {} values", times.len(), values.len())));
    }
    if times.len() < 8 {
        return Err(Error::InvalidInput("fit needs at least 8 samples".into()));
    }
    if times.iter().chain(values).any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("fit data contains non-finite values".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("fit times must be strictly ascending".into()));
    }
    Ok(())
}

/// Best damped oscillation with linear baseline. Frequencies between one cycle
/// per record and [`MAX_FREQUENCY`] are searched.
pub fn fit_oscillatory(times: &[f64], values: &[f64]) -> Result<OscillatoryFit> {
    check_series(times, values)?;
    let t: Vec<f64> = times.iter().map(|x| x - times[0]).collect();
    let span = t[t.len() - 1];
    let f_min = 1.0 / span;
    if f_min >= MAX_FREQUENCY {
        return Err(Error::InvalidInput(format!("record of {span} ps is too short to resolve oscillations")));
    }
    let mut best = (f64::INFINITY, f_min, span);
    for &f in &geomspace(f_min, MAX_FREQUENCY, FREQ_GRID) {
        for &tau in &geomspace(MIN_TAU_OSC, span, TAU_GRID_OSC) {
            let r = oscillatory_rss(&t, values, tau, f);
            if r < best.0 {
                best = (r, f, tau);
            }
        }
    }
    let objective = |x: &[f64]| oscillatory_rss(&t, values, x[1].exp(), x[0].exp());
    let (x, rss) = nelder_mead(objective, &[best.1.ln(), best.2.ln()], 0.05, 4000);
    let (frequency, decay_time, rss) = if rss <= best.0 { (x[0].exp(), x[1].exp(), rss) } else { (best.1, best.2, best.0) };
    Ok(OscillatoryFit { frequency, decay_time, rss })
}

/// Best single-exponential approach with linear baseline.
pub fn fit_monotone(times: &[f64], values: &[f64]) -> Result<f64> {
    check_series(times, values)?;
    let t: Vec<f64> = times.iter().map(|x| x - times[0]).collect();
    let span = t[t.len() - 1];
    let (rss0, tau0) = geomspace(MIN_TAU_MONO, span, TAU_GRID_MONO)
        .into_iter()
        .map(|tau| (monotone_rss(&t, values, tau), tau))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("non-empty grid");
    let (_, rss) = nelder_mead(|x: &[f64]| monotone_rss(&t, values, x[0].exp()), &[tau0.ln()], 0.05, 2000);
    Ok(rss.min(rss0))
}

pub fn compare_models(times: &[f64], values: &[f64]) -> Result<ModelComparison> {
    let oscillatory = fit_oscillatory(times, values)?;
    let monotone_rss = fit_monotone(times, values)?;
    let improvement = if monotone_rss > 0.0 { (monotone_rss - oscillatory.rss) / monotone_rss } else { 0.0 };
    Ok(ModelComparison { oscillatory, monotone_rss, improvement })
}
