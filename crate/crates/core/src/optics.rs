//! Linear mode transformations and the source → beamsplitter → polarizers → detectors pipeline.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{FockState, ModeId, Polarization, Port, Station};

/// Maximum entrywise deviation of `u·u†` from the identity.
pub const UNITARITY_TOLERANCE: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Linear map on creation operators: `inputs[i]† → Σⱼ matrix[i][j]·outputs[j]†`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeTransform {
    inputs: Vec<ModeId>,
    outputs: Vec<ModeId>,
    matrix: Vec<Vec<Complex64>>,
}

impl ModeTransform {
    /// Checked constructor; rejects non-square, duplicated or non-unitary maps.
    pub fn new(
        inputs: Vec<ModeId>,
        outputs: Vec<ModeId>,
        matrix: Vec<Vec<Complex64>>,
    ) -> Result<Self> {
        let n = inputs.len();
        if outputs.len() != n || matrix.len() != n || matrix.iter().any(|row| row.len() != n) {
            return Err(Error::Shape("matrix must be square over inputs × outputs"));
        }
        if has_duplicates(&inputs) || has_duplicates(&outputs) {
            return Err(Error::Shape("mode listed twice"));
        }
        let t = Self {
            inputs,
            outputs,
            matrix,
        };
        let deviation = t.unitarity_deviation();
        if deviation > UNITARITY_TOLERANCE {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(t)
    }

    pub fn identity(modes: &[ModeId]) -> Result<Self> {
        let n = modes.len();
        let matrix = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            Complex64::new(1.0, 0.0)
                        } else {
                            ZERO
                        }
                    })
                    .collect()
            })
            .collect();
        Self::new(modes.to_vec(), modes.to_vec(), matrix)
    }

    pub fn inputs(&self) -> &[ModeId] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[ModeId] {
        &self.outputs
    }

    pub fn matrix(&self) -> &[Vec<Complex64>] {
        &self.matrix
    }

    /// Coefficients of the image of `mode`, if it is an input.
    pub fn image(&self, mode: ModeId) -> Option<&[Complex64]> {
        self.inputs
            .iter()
            .position(|&m| m == mode)
            .map(|i| self.matrix[i].as_slice())
    }

    pub fn unitarity_deviation(&self) -> f64 {
        let n = self.matrix.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let dot: Complex64 = (0..n)
                    .map(|k| self.matrix[i][k] * self.matrix[j][k].conj())
                    .sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).norm());
            }
        }
        worst
    }

    /// The inverse map `outputs → inputs`, with matrix `u†`.
    pub fn adjoint(&self) -> Self {
        let n = self.matrix.len();
        let matrix = (0..n)
            .map(|j| (0..n).map(|i| self.matrix[i][j].conj()).collect())
            .collect();
        Self {
            inputs: self.outputs.clone(),
            outputs: self.inputs.clone(),
            matrix,
        }
    }
}

fn has_duplicates(modes: &[ModeId]) -> bool {
    modes
        .iter()
        .enumerate()
        .any(|(i, m)| modes[..i].contains(m))
}

/// Nonpolarizing 50-50 beamsplitter, `a₁† → (i·c† + d†)/√2`, `a₂† → (c† + i·d†)/√2`,
/// applied to both polarizations so the map is square.
pub fn beamsplitter_5050() -> ModeTransform {
    use Polarization::{X, Y};
    use Station::{One, Two};
    let r = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let t = Complex64::new(0.0, FRAC_1_SQRT_2);
    let inputs = vec![
        ModeId::Source(One, X),
        ModeId::Source(One, Y),
        ModeId::Source(Two, X),
        ModeId::Source(Two, Y),
    ];
    let outputs = vec![
        ModeId::Beam(One, X),
        ModeId::Beam(One, Y),
        ModeId::Beam(Two, X),
        ModeId::Beam(Two, Y),
    ];
    let matrix = vec![
        vec![t, ZERO, r, ZERO],
        vec![ZERO, t, ZERO, r],
        vec![r, ZERO, t, ZERO],
        vec![ZERO, r, ZERO, t],
    ];
    ModeTransform {
        inputs,
        outputs,
        matrix,
    }
}

/// Polarizing beamsplitter at angle `theta` from the x axis:
/// `n_x† → cosθ·n_∥† + sinθ·n_⊥†`, `n_y† → sinθ·n_∥† − cosθ·n_⊥†`.
pub fn polarizer_rotation(station: Station, theta: f64) -> ModeTransform {
    let (s, c) = (libm::sin(theta), libm::cos(theta));
    let re = |v: f64| Complex64::new(v, 0.0);
    ModeTransform {
        inputs: vec![
            ModeId::Beam(station, Polarization::X),
            ModeId::Beam(station, Polarization::Y),
        ],
        outputs: vec![
            ModeId::Detected(station, Port::Parallel),
            ModeId::Detected(station, Port::Perp),
        ],
        matrix: vec![vec![re(c), re(s)], vec![re(s), re(-c)]],
    }
}

/// Detector inefficiency as a beamsplitter: `a† → √η·t† + √(1−η)·r†`.
///
/// The transmitted mode keeps the detector label; `ancilla` is the reflected
/// mode and must be the loss ancilla bound to `mode`.
pub fn loss_channel(mode: ModeId, eta: f64, ancilla: ModeId) -> Result<ModeTransform> {
    check_efficiency(eta)?;
    if ancilla.loss_partner() != Some(mode) {
        return Err(Error::InvalidConfig(
            "loss ancilla must be bound to the detected mode",
        ));
    }
    let keep = Complex64::new(libm::sqrt(eta), 0.0);
    let leak = libm::sqrt(1.0 - eta);
    Ok(ModeTransform {
        inputs: vec![mode, ancilla],
        outputs: vec![mode, ancilla],
        matrix: vec![
            vec![keep, Complex64::new(leak, 0.0)],
            vec![Complex64::new(-leak, 0.0), keep],
        ],
    })
}

pub(crate) fn check_efficiency(eta: f64) -> Result<()> {
    if eta > 0.0 && eta <= 1.0 {
        Ok(())
    } else {
        Err(Error::BadEfficiency(eta))
    }
}

fn factorial(n: u8) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Substitutes every creation operator of `state` by its image under `t`.
///
/// Modes the transform does not mention pass through unchanged. A term that
/// occupies a mode appearing only among the outputs is rejected.
pub fn apply(t: &ModeTransform, state: &FockState) -> Result<FockState> {
    let mut out = FockState::zero();
    for (occ, &amp) in state {
        let mut norm = 1.0;
        let mut partial = FockState::vacuum();
        for (mode, n) in occ.iter() {
            norm *= factorial(n);
            let image = match t.image(mode) {
                Some(row) => Some(row),
                None if t.outputs.contains(&mode) => return Err(Error::UnknownMode(mode)),
                None => None,
            };
            for _ in 0..n {
                partial = match image {
                    Some(row) => {
                        let mut next = FockState::zero();
                        for (&target, &coeff) in t.outputs.iter().zip(row) {
                            if coeff != ZERO {
                                next = next + partial.create(target)?.scaled(coeff);
                            }
                        }
                        next
                    }
                    None => partial.create(mode)?,
                };
            }
        }
        out = out + partial.scaled(amp / libm::sqrt(norm));
    }
    Ok(out)
}

/// Settings of one run of the experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentConfig {
    /// Station-1 polarizer angle from the x axis (radians).
    pub theta1: f64,
    /// Station-2 polarizer angle from the x axis (radians).
    pub theta2: f64,
    /// Detector efficiency in (0, 1].
    pub eta: f64,
    /// Insert a loss channel in front of each of the four detectors.
    pub include_loss: bool,
}

impl ExperimentConfig {
    pub fn ideal(theta1: f64, theta2: f64) -> Self {
        Self {
            theta1,
            theta2,
            eta: 1.0,
            include_loss: false,
        }
    }

    pub fn lossy(theta1: f64, theta2: f64, eta: f64) -> Self {
        Self {
            theta1,
            theta2,
            eta,
            include_loss: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_efficiency(self.eta)?;
        if !self.theta1.is_finite() || !self.theta2.is_finite() {
            return Err(Error::InvalidConfig("polarizer angles must be finite"));
        }
        Ok(())
    }
}

/// `a₁ₓ†a₂ᵧ†|0⟩`: the pair after the wave plate has turned one photon to `y`.
pub fn initial_state() -> FockState {
    FockState::vacuum()
        .create(ModeId::Source(Station::One, Polarization::X))
        .and_then(|s| s.create(ModeId::Source(Station::Two, Polarization::Y)))
        .expect("two photons are within capacity")
}

/// Final state over the four detector modes (plus loss ancillas when enabled).
pub fn build_experiment_state(cfg: &ExperimentConfig) -> Result<FockState> {
    cfg.validate()?;
    let mut state = apply(&beamsplitter_5050(), &initial_state())?;
    state = apply(&polarizer_rotation(Station::One, cfg.theta1), &state)?;
    state = apply(&polarizer_rotation(Station::Two, cfg.theta2), &state)?;
    if cfg.include_loss {
        for mode in ModeId::detectors() {
            let ModeId::Detected(s, p) = mode else {
                unreachable!()
            };
            state = apply(&loss_channel(mode, cfg.eta, ModeId::Lost(s, p))?, &state)?;
        }
    }
    Ok(state)
}
