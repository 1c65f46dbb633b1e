//! Correlation functions and the CHSH statistic under the value assignment.
//!
//! Analyzer settings are expressed as `ψ` angles with `ψ₁ = 2θ₁` and
//! `ψ₂ = −2θ₂`. [`PsiAngles`] is the only place that conversion happens.

use core::f64::consts::{PI, TAU};
use core::fmt;

use crate::detection::{
    apply_alpha_confusion, joint_table, DetectorModel, JointProbabilityTable, StationOutcome,
    ValueAssignment,
};
use crate::error::Result;
use crate::fock::Station;

/// One pair of analyzer settings in `ψ` form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiAngles {
    pub psi1: f64,
    pub psi2: f64,
}

impl PsiAngles {
    pub fn new(psi1: f64, psi2: f64) -> Self {
        Self { psi1, psi2 }
    }

    /// From polarizer angles measured from the x axis.
    pub fn from_thetas(theta1: f64, theta2: f64) -> Self {
        Self {
            psi1: 2.0 * theta1,
            psi2: -2.0 * theta2,
        }
    }

    /// Polarizer angles `(θ₁, θ₂)`.
    pub fn thetas(&self) -> (f64, f64) {
        (0.5 * self.psi1, -0.5 * self.psi2)
    }
}

/// The four terms of the CHSH combination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SettingPair {
    AB,
    APrimeB,
    ABPrime,
    APrimeBPrime,
}

impl SettingPair {
    pub const ALL: [SettingPair; 4] = [
        SettingPair::AB,
        SettingPair::APrimeB,
        SettingPair::ABPrime,
        SettingPair::APrimeBPrime,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SettingPair::AB => "AB",
            SettingPair::APrimeB => "A'B",
            SettingPair::ABPrime => "AB'",
            SettingPair::APrimeBPrime => "A'B'",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.label() == label)
    }

    /// Sign of this term in `E(AB) + E(A′B) + E(AB′) − E(A′B′)`.
    pub fn sign(self) -> f64 {
        match self {
            SettingPair::APrimeBPrime => -1.0,
            _ => 1.0,
        }
    }

    pub fn ordinal(self) -> usize {
        self as usize
    }
}

impl fmt::Display for SettingPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Analyzer angles `(ψ₁, ψ₁′, ψ₂, ψ₂′)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshSettings {
    pub psi1: f64,
    pub psi1_prime: f64,
    pub psi2: f64,
    pub psi2_prime: f64,
}

impl ChshSettings {
    pub fn new(psi1: f64, psi1_prime: f64, psi2: f64, psi2_prime: f64) -> Self {
        Self {
            psi1,
            psi1_prime,
            psi2,
            psi2_prime,
        }
    }

    pub fn from_array(v: [f64; 4]) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.psi1, self.psi1_prime, self.psi2, self.psi2_prime]
    }

    /// Settings for the optimum at full distinguishability and efficiency, `S = 1 + √2`.
    pub fn standard() -> Self {
        Self::new(0.0, PI / 2.0, 3.0 * PI / 4.0, -3.0 * PI / 4.0).canonical()
    }

    pub fn angles(&self, pair: SettingPair) -> PsiAngles {
        match pair {
            SettingPair::AB => PsiAngles::new(self.psi1, self.psi2),
            SettingPair::APrimeB => PsiAngles::new(self.psi1_prime, self.psi2),
            SettingPair::ABPrime => PsiAngles::new(self.psi1, self.psi2_prime),
            SettingPair::APrimeBPrime => PsiAngles::new(self.psi1_prime, self.psi2_prime),
        }
    }

    /// `ψ₂` reduced into `[−π, π)`, the other three into `[0, 2π)`.
    pub fn canonical(&self) -> Self {
        Self::new(
            wrap_positive(self.psi1),
            wrap_positive(self.psi1_prime),
            wrap_positive(self.psi2 + PI) - PI,
            wrap_positive(self.psi2_prime),
        )
    }
}

fn wrap_positive(x: f64) -> f64 {
    let mut r = libm::fmod(x, TAU);
    if r < 0.0 {
        r += TAU;
    }
    // the shift can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Whether a CHSH evaluation uses the closed form or sums the probability tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Evaluation {
    #[default]
    ClosedForm,
    Table,
}

/// `Σᵢⱼ aᵢ bⱼ p[i][j]`.
pub fn correlation_from_table(t: &JointProbabilityTable, v: &ValueAssignment) -> f64 {
    let mut e = 0.0;
    for first in StationOutcome::ALL {
        let a = f64::from(v.value(first, Station::One));
        for second in StationOutcome::ALL {
            e += a * f64::from(v.value(second, Station::Two)) * t.get(first, second);
        }
    }
    e
}

/// `η²·[−½cos(ψ₁+ψ₂) + ½α + ¼(1−α)(cos²ψ₁ + cos²ψ₂)] + (1−η)²`.
pub fn correlation_closed_form(psi: PsiAngles, model: DetectorModel) -> f64 {
    let DetectorModel { alpha, eta } = model;
    let (c1, c2) = (libm::cos(psi.psi1), libm::cos(psi.psi2));
    let ideal = -0.5 * libm::cos(psi.psi1 + psi.psi2)
        + 0.5 * alpha
        + 0.25 * (1.0 - alpha) * (c1 * c1 + c2 * c2);
    eta * eta * ideal + (1.0 - eta) * (1.0 - eta)
}

/// Correlation from the first-principles table with the default value assignment.
pub fn correlation_via_table(psi: PsiAngles, model: DetectorModel) -> Result<f64> {
    let (theta1, theta2) = psi.thetas();
    let table = apply_alpha_confusion(&joint_table(theta1, theta2, model.eta)?, model.alpha)?;
    Ok(correlation_from_table(&table, &ValueAssignment::default()))
}

/// `E(ψ₁,ψ₂) + E(ψ₁′,ψ₂) + E(ψ₁,ψ₂′) − E(ψ₁′,ψ₂′)` from the closed form.
pub fn chsh(s: &ChshSettings, model: DetectorModel) -> f64 {
    SettingPair::ALL
        .iter()
        .map(|&pair| pair.sign() * correlation_closed_form(s.angles(pair), model))
        .sum()
}

pub fn chsh_with(s: &ChshSettings, model: DetectorModel, evaluation: Evaluation) -> Result<f64> {
    match evaluation {
        Evaluation::ClosedForm => Ok(chsh(s, model)),
        Evaluation::Table => SettingPair::ALL
            .iter()
            .map(|&pair| correlation_via_table(s.angles(pair), model).map(|e| pair.sign() * e))
            .sum(),
    }
}

/// Probabilities of both photons reaching one station (ideal detection).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomPortProbabilities {
    pub split_first: f64,
    pub split_second: f64,
    pub double_plus_first: f64,
    pub double_minus_first: f64,
    pub double_plus_second: f64,
    pub double_minus_second: f64,
}

impl HomPortProbabilities {
    pub fn total(&self) -> f64 {
        self.split_first
            + self.split_second
            + self.double_plus_first
            + self.double_minus_first
            + self.double_plus_second
            + self.double_minus_second
    }
}

/// Cells (4,3), (3,4), (5,3), (6,3), (3,5), (3,6) of the ideal table.
///
/// At `θ₁ = π/4` the split outcome (4,3) vanishes: both photons leave
/// station 1's polarizing beamsplitter through the same port.
pub fn hom_port_probabilities(theta1: f64, theta2: f64) -> Result<HomPortProbabilities> {
    use StationOutcome::{DoubleMinus, DoublePlus, Empty, Split};
    let t = joint_table(theta1, theta2, 1.0)?;
    Ok(HomPortProbabilities {
        split_first: t.get(Split, Empty),
        split_second: t.get(Empty, Split),
        double_plus_first: t.get(DoublePlus, Empty),
        double_minus_first: t.get(DoubleMinus, Empty),
        double_plus_second: t.get(Empty, DoublePlus),
        double_minus_second: t.get(Empty, DoubleMinus),
    })
}
