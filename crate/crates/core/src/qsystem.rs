//! The driven four-level model: parameters, bare basis, rotating-frame
//! Hamiltonian, radiative collapse operators and the Lindblad generator.
//!
//! Basis order is fixed: `|G⟩ = 0`, `|V⟩ = 1`, `|H⟩ = 2`, `|XX⟩ = 3`. The laser is
//! V-polarized and couples `G ↔ V ↔ XX`; the H exciton is only populated by
//! biexciton decay. The frame rotates at the laser energy per absorbed photon.

use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::constants::HBAR_UEV_PS;
use crate::error::{Error, Result};
use crate::numerics::ComplexMatrix;

pub const DIM: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BareState {
    G = 0,
    V = 1,
    H = 2,
    XX = 3,
}

impl BareState {
    pub const ALL: [BareState; 4] = [BareState::G, BareState::V, BareState::H, BareState::XX];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn ket(self) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); DIM];
        v[self.index()] = C64::new(1.0, 0.0);
        v
    }

    /// `|self⟩⟨self|`
    pub fn projector(self) -> ComplexMatrix {
        transition(self, self)
    }
}

impl fmt::Display for BareState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BareState::G => "G",
            BareState::V => "V",
            BareState::H => "H",
            BareState::XX => "XX",
        };
        f.write_str(s)
    }
}

/// `|to⟩⟨from|`
pub fn transition(to: BareState, from: BareState) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(DIM, DIM);
    m[(to.index(), from.index())] = C64::new(1.0, 0.0);
    m
}

/// Physical parameters. Energies in μeV, lifetimes in ps, rates in 1/ps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Biexciton binding energy, `E_XX = 2 E_X − ΔE_b`.
    pub delta_eb: f64,
    /// Fine-structure splitting `E_H − E_V`.
    pub delta_fss: f64,
    /// Single-photon Rabi coupling ħΩ; the drive matrix element is ħΩ/2.
    pub hbar_omega: f64,
    /// Laser detuning from the two-photon resonance, positive when the laser is above it.
    pub delta_laser: f64,
    pub tau_xx: f64,
    /// Applied to both exciton channels.
    pub tau_x: f64,
    pub gamma_deph: f64,
    /// Absolute V-exciton energy; only lab-frame line positions depend on it.
    pub e_x: f64,
}

pub const DEFAULT_DELTA_EB: f64 = 2000.0;
pub const DEFAULT_DELTA_FSS: f64 = 50.0;
pub const DEFAULT_TAU_XX: f64 = 314.0;
pub const DEFAULT_TAU_X: f64 = 742.0;
pub const DEFAULT_E_X: f64 = 1_330_000.0;
/// Default drive strength as a fraction of the binding energy: ħΩ = ΔE_b / 13.
pub const DEFAULT_DEB_OVER_HBAR_OMEGA: f64 = 13.0;

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            delta_eb: DEFAULT_DELTA_EB,
            delta_fss: DEFAULT_DELTA_FSS,
            hbar_omega: DEFAULT_DELTA_EB / DEFAULT_DEB_OVER_HBAR_OMEGA,
            delta_laser: 0.0,
            tau_xx: DEFAULT_TAU_XX,
            tau_x: DEFAULT_TAU_X,
            gamma_deph: 0.0,
            e_x: DEFAULT_E_X,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("delta_eb", self.delta_eb),
            ("delta_fss", self.delta_fss),
            ("hbar_omega", self.hbar_omega),
            ("delta_laser", self.delta_laser),
            ("tau_xx", self.tau_xx),
            ("tau_x", self.tau_x),
            ("gamma_deph", self.gamma_deph),
            ("e_x", self.e_x),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("{name} must be finite")));
        }
        let positive = [("delta_eb", self.delta_eb), ("tau_xx", self.tau_xx), ("tau_x", self.tau_x)];
        if let Some((name, v)) = positive.iter().find(|(_, v)| *v <= 0.0) {
            return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
        }
        let non_negative = [("hbar_omega", self.hbar_omega), ("gamma_deph", self.gamma_deph)];
        if let Some((name, v)) = non_negative.iter().find(|(_, v)| *v < 0.0) {
            return Err(Error::InvalidInput(format!("{name} must be non-negative, got {v}")));
        }
        Ok(())
    }

    pub fn with_hbar_omega(mut self, hbar_omega: f64) -> Self {
        self.hbar_omega = hbar_omega;
        self
    }

    pub fn with_delta_laser(mut self, delta_laser: f64) -> Self {
        self.delta_laser = delta_laser;
        self
    }

    /// `E_XX = 2 E_X − ΔE_b`
    pub fn biexciton_energy(&self) -> f64 {
        2.0 * self.e_x - self.delta_eb
    }

    /// `E_l = E_X − ΔE_b/2 + Δ_laser`
    pub fn laser_energy(&self) -> f64 {
        self.e_x - self.delta_eb / 2.0 + self.delta_laser
    }

    /// Lab-frame energy of the spectator exciton, `E_X + δ_fss`.
    pub fn h_exciton_energy(&self) -> f64 {
        self.e_x + self.delta_fss
    }

    /// Rotating-frame diagonal `(0, δ_V, δ_H, δ_XX)`.
    pub fn detunings(&self) -> [f64; 4] {
        let dv = self.delta_eb / 2.0 - self.delta_laser;
        [0.0, dv, dv + self.delta_fss, -2.0 * self.delta_laser]
    }

    pub fn xx_decay_rate(&self) -> f64 {
        1.0 / self.tau_xx
    }

    pub fn x_decay_rate(&self) -> f64 {
        1.0 / self.tau_x
    }

    /// Slowest radiative rate, the natural unit of "decay times".
    pub fn slowest_rate(&self) -> f64 {
        self.xx_decay_rate().min(self.x_decay_rate())
    }
}

/// Rotating-frame Hamiltonian in μeV.
pub fn hamiltonian_rf(p: &SystemParams) -> Result<ComplexMatrix> {
    p.validate()?;
    let d = p.detunings();
    let mut h = ComplexMatrix::diagonal(&d.map(|x| C64::new(x, 0.0)));
    let c = C64::new(p.hbar_omega / 2.0, 0.0);
    for (a, b) in [(BareState::G, BareState::V), (BareState::V, BareState::XX)] {
        h[(a.index(), b.index())] = c;
        h[(b.index(), a.index())] = c;
    }
    Ok(h)
}

/// A Lindblad channel; `operator` already carries `√rate`.
#[derive(Clone, Debug)]
pub struct Collapse {
    pub name: &'static str,
    pub rate: f64,
    pub operator: ComplexMatrix,
}

impl Collapse {
    fn new(name: &'static str, rate: f64, to: BareState, from: BareState) -> Self {
        Self { name, rate, operator: transition(to, from).scale_real(rate.sqrt()) }
    }
}

/// Radiative channels (biexciton decay split equally between V and H) plus
/// optional pure dephasing of V, H and XX.
pub fn collapse_operators(p: &SystemParams) -> Result<Vec<Collapse>> {
    p.validate()?;
    let xx = p.xx_decay_rate() / 2.0;
    let x = p.x_decay_rate();
    let mut out = vec![
        Collapse::new("XX->V", xx, BareState::V, BareState::XX),
        Collapse::new("XX->H", xx, BareState::H, BareState::XX),
        Collapse::new("V->G", x, BareState::G, BareState::V),
        Collapse::new("H->G", x, BareState::G, BareState::H),
    ];
    if p.gamma_deph > 0.0 {
        for (name, s) in [("dephase V", BareState::V), ("dephase H", BareState::H), ("dephase XX", BareState::XX)] {
            out.push(Collapse::new(name, p.gamma_deph, s, s));
        }
    }
    Ok(out)
}

/// Lindblad generator acting on column-stacked density matrices, in 1/ps.
#[derive(Clone, Debug)]
pub struct Superoperator {
    matrix: ComplexMatrix,
    dim: usize,
}

impl Superoperator {
    pub fn from_matrix(matrix: ComplexMatrix) -> Result<Self> {
        let n2 = matrix.rows();
        let dim = (n2 as f64).sqrt().round() as usize;
        if !matrix.is_square() || dim * dim != n2 {
            return Err(Error::InvalidInput(format!(
                "superoperator must be n²xn², got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        Ok(Self { matrix, dim })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `dρ/dt` for the operator `rho`.
    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix::unvectorize(&self.matrix.matvec(&rho.vectorize()), self.dim).expect("square by construction")
    }

    /// Row vector `vec(I)†`; its product with the generator vanishes for a trace-preserving map.
    pub fn trace_functional(&self) -> Vec<C64> {
        ComplexMatrix::identity(self.dim).vectorize()
    }
}

/// `L vec(ρ) = vec(−(i/ħ)[H, ρ] + Σ_k C_k ρ C_k† − ½{C_k†C_k, ρ})`.
pub fn liouvillian(h: &ComplexMatrix, collapses: &[ComplexMatrix]) -> Result<Superoperator> {
    if !h.is_square() {
        return Err(Error::InvalidInput(format!("Hamiltonian must be square, got {}x{}", h.rows(), h.cols())));
    }
    let n = h.rows();
    if !h.is_hermitian(1e-12) {
        return Err(Error::InvalidInput("Hamiltonian is not Hermitian".into()));
    }
    if let Some(c) = collapses.iter().find(|c| c.rows() != n || c.cols() != n) {
        return Err(Error::InvalidInput(format!("collapse operator is {}x{}, expected {n}x{n}", c.rows(), c.cols())));
    }
    let id = ComplexMatrix::identity(n);
    let coherent = &id.kron(h) - &h.transpose().kron(&id);
    let mut l = coherent.scale(C64::new(0.0, -1.0 / HBAR_UEV_PS));
    for c in collapses {
        let cdc = &c.dagger() * c;
        let jump = c.conj().kron(c);
        let left = id.kron(&cdc);
        let right = cdc.transpose().kron(&id);
        l = &l + &jump;
        l = &l - &(&left + &right).scale_real(0.5);
    }
    Superoperator::from_matrix(l)
}

/// Generator for a parameter point.
pub fn system_liouvillian(p: &SystemParams) -> Result<Superoperator> {
    let h = hamiltonian_rf(p)?;
    let ops: Vec<ComplexMatrix> = collapse_operators(p)?.into_iter().map(|c| c.operator).collect();
    liouvillian(&h, &ops)
}
