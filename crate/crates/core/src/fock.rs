//! Sparse Fock-state algebra for at most two photons over labeled modes.

use alloc::collections::btree_map::{self, BTreeMap, Entry};
use core::fmt;
use core::ops::{Add, Mul};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest total photon number any term may carry.
pub const MAX_PHOTONS: usize = 2;

/// Amplitudes with modulus below this are dropped from the expansion.
pub const PRUNE_TOLERANCE: f64 = 1e-15;

/// Tolerance on the norm before Born-rule queries are refused.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Station {
    One,
    Two,
}

impl Station {
    pub const BOTH: [Station; 2] = [Station::One, Station::Two];

    pub fn number(self) -> u8 {
        match self {
            Station::One => 1,
            Station::Two => 2,
        }
    }
}

/// Linear polarization before the analyzers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarization {
    X,
    Y,
}

/// Exit port of a polarizing beamsplitter. `Parallel` feeds D⁺, `Perp` feeds D⁻.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Port {
    Parallel,
    Perp,
}

/// One optical mode of the experiment.
///
/// The derived ordering is the canonical order used to key occupation vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModeId {
    /// Source beam entering the 50-50 beamsplitter (`a₁`, `a₂`).
    Source(Station, Polarization),
    /// Beamsplitter output heading to a station (`c` for station 1, `d` for station 2).
    Beam(Station, Polarization),
    /// Polarizer output in front of a detector.
    Detected(Station, Port),
    /// Loss ancilla of the detector `Detected(station, port)`.
    Lost(Station, Port),
}

impl ModeId {
    /// The detector mode a loss ancilla belongs to.
    pub fn loss_partner(self) -> Option<ModeId> {
        match self {
            ModeId::Lost(s, p) => Some(ModeId::Detected(s, p)),
            _ => None,
        }
    }

    pub fn station(self) -> Station {
        match self {
            ModeId::Source(s, _)
            | ModeId::Beam(s, _)
            | ModeId::Detected(s, _)
            | ModeId::Lost(s, _) => s,
        }
    }

    /// All four detector modes in canonical order.
    pub fn detectors() -> [ModeId; 4] {
        [
            ModeId::Detected(Station::One, Port::Parallel),
            ModeId::Detected(Station::One, Port::Perp),
            ModeId::Detected(Station::Two, Port::Parallel),
            ModeId::Detected(Station::Two, Port::Perp),
        ]
    }
}

fn beam_letter(station: Station) -> char {
    match station {
        Station::One => 'c',
        Station::Two => 'd',
    }
}

fn pol_letter(pol: Polarization) -> char {
    match pol {
        Polarization::X => 'x',
        Polarization::Y => 'y',
    }
}

fn port_symbol(port: Port) -> char {
    match port {
        Port::Parallel => '∥',
        Port::Perp => '⊥',
    }
}

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ModeId::Source(s, p) => write!(f, "a{}{}", s.number(), pol_letter(p)),
            ModeId::Beam(s, p) => write!(f, "{}{}", beam_letter(s), pol_letter(p)),
            ModeId::Detected(s, p) => write!(f, "{}{}", beam_letter(s), port_symbol(p)),
            ModeId::Lost(s, p) => write!(f, "r({}{})", beam_letter(s), port_symbol(p)),
        }
    }
}

/// Photon counts per mode. Modes with zero photons are not stored.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OccupationVector {
    counts: BTreeMap<ModeId, u8>,
}

impl OccupationVector {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds an occupation from `(mode, count)` pairs; repeated modes accumulate.
    pub fn from_counts<I: IntoIterator<Item = (ModeId, u8)>>(counts: I) -> Result<Self> {
        let mut occ = Self::empty();
        for (mode, n) in counts {
            if n > 0 {
                *occ.counts.entry(mode).or_insert(0) += n;
            }
        }
        let total = occ.total();
        if total > MAX_PHOTONS {
            return Err(Error::CapacityExceeded {
                photons: total,
                max: MAX_PHOTONS,
            });
        }
        Ok(occ)
    }

    /// One photon in each listed mode (a mode listed twice holds two).
    pub fn of_modes(modes: &[ModeId]) -> Result<Self> {
        Self::from_counts(modes.iter().map(|&m| (m, 1)))
    }

    pub fn count(&self, mode: ModeId) -> u8 {
        self.counts.get(&mode).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.counts.values().map(|&n| n as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ModeId, u8)> + '_ {
        self.counts.iter().map(|(&m, &n)| (m, n))
    }

    fn raised(&self, mode: ModeId) -> (Self, u8) {
        let mut next = self.clone();
        let slot = next.counts.entry(mode).or_insert(0);
        let prior = *slot;
        *slot += 1;
        (next, prior)
    }
}

impl fmt::Display for OccupationVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.counts.is_empty() {
            return f.write_str("0");
        }
        for (k, (mode, n)) in self.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            if n > 1 {
                write!(f, "{n}")?;
            }
            write!(f, "{mode}")?;
        }
        Ok(())
    }
}

/// Sparse complex expansion over occupation vectors.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FockState {
    terms: BTreeMap<OccupationVector, Complex64>,
}

impl FockState {
    /// The expansion with no terms.
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn vacuum() -> Self {
        Self::basis(OccupationVector::empty())
    }

    /// A single normalized basis ket.
    pub fn basis(occ: OccupationVector) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(occ, Complex64::new(1.0, 0.0));
        Self { terms }
    }

    /// Adds `amp` to the coefficient of `occ`, dropping it if it cancels.
    pub fn accumulate(&mut self, occ: OccupationVector, amp: Complex64) {
        match self.terms.entry(occ) {
            Entry::Occupied(mut e) => {
                let sum = *e.get() + amp;
                if sum.norm() < PRUNE_TOLERANCE {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
            Entry::Vacant(e) => {
                if amp.norm() >= PRUNE_TOLERANCE {
                    e.insert(amp);
                }
            }
        }
    }

    /// Raw action of a creation operator: `a†|n⟩ = √(n+1)|n+1⟩`, no renormalization.
    pub fn create(&self, mode: ModeId) -> Result<Self> {
        let mut out = Self::zero();
        for (occ, &amp) in &self.terms {
            let photons = occ.total() + 1;
            if photons > MAX_PHOTONS {
                return Err(Error::CapacityExceeded {
                    photons,
                    max: MAX_PHOTONS,
                });
            }
            let (next, prior) = occ.raised(mode);
            out.accumulate(next, amp * libm::sqrt(f64::from(prior) + 1.0));
        }
        Ok(out)
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.terms.values().map(|a| a.norm_sqr()).sum())
    }

    pub fn amplitude(&self, occ: &OccupationVector) -> Complex64 {
        self.terms.get(occ).copied().unwrap_or_default()
    }

    /// Born-rule probability of a basis ket.
    pub fn probability_of(&self, occ: &OccupationVector) -> Result<f64> {
        self.check_normalized()?;
        Ok(self.amplitude(occ).norm_sqr())
    }

    pub fn check_normalized(&self) -> Result<()> {
        let norm = self.norm();
        if (norm - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::NotNormalized { norm });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in canonical ket order.
    pub fn iter(&self) -> btree_map::Iter<'_, OccupationVector, Complex64> {
        self.terms.iter()
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut out = Self::zero();
        for (occ, &amp) in &self.terms {
            out.accumulate(occ.clone(), amp * factor);
        }
        out
    }
}

impl<'a> IntoIterator for &'a FockState {
    type Item = (&'a OccupationVector, &'a Complex64);
    type IntoIter = btree_map::Iter<'a, OccupationVector, Complex64>;

    fn into_iter(self) -> Self::IntoIter {
        self.terms.iter()
    }
}

impl Add for FockState {
    type Output = FockState;

    fn add(mut self, rhs: FockState) -> FockState {
        for (occ, amp) in rhs.terms {
            self.accumulate(occ, amp);
        }
        self
    }
}

impl Mul<Complex64> for FockState {
    type Output = FockState;

    fn mul(self, rhs: Complex64) -> FockState {
        self.scaled(rhs)
    }
}

/// Sorted ket list, e.g. `(0.5+0i)|c∥,d⊥⟩ + (0-0.5i)|c∥,c⊥⟩`.
impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, (occ, amp)) in self.terms.iter().enumerate() {
            if k > 0 {
                f.write_str(" + ")?;
            }
            // adding +0.0 clears negative zeros
            let amp = Complex64::new(amp.re + 0.0, amp.im + 0.0);
            write!(f, "({amp})|{occ}⟩")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use approx::assert_abs_diff_eq;

    const C_PAR: ModeId = ModeId::Detected(Station::One, Port::Parallel);
    const C_PERP: ModeId = ModeId::Detected(Station::One, Port::Perp);
    const D_PAR: ModeId = ModeId::Detected(Station::Two, Port::Parallel);
    const D_PERP: ModeId = ModeId::Detected(Station::Two, Port::Perp);

    #[test]
    fn vacuum_is_single_unit_term() {
        let v = FockState::vacuum();
        assert_eq!(v.len(), 1);
        assert_eq!(
            v.amplitude(&OccupationVector::empty()),
            Complex64::new(1.0, 0.0)
        );
        assert_eq!(v.norm(), 1.0);
        assert_eq!(v.probability_of(&OccupationVector::empty()).unwrap(), 1.0);
    }

    #[test]
    fn create_on_vacuum() {
        let s = FockState::vacuum().create(C_PAR).unwrap();
        let occ = OccupationVector::of_modes(&[C_PAR]).unwrap();
        assert_eq!(s.amplitude(&occ), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn double_creation_carries_bosonic_factor() {
        let s = FockState::vacuum()
            .create(C_PAR)
            .unwrap()
            .create(C_PAR)
            .unwrap();
        let occ = OccupationVector::from_counts([(C_PAR, 2)]).unwrap();
        assert_abs_diff_eq!(
            s.amplitude(&occ).re,
            core::f64::consts::SQRT_2,
            epsilon = 1e-15
        );
        // normalized two-photon ket carries 1/√2 of the squared operator
        let normalized = s.scaled(Complex64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0));
        assert_abs_diff_eq!(normalized.norm(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn distinct_modes_have_no_bosonic_factor() {
        let s = FockState::vacuum()
            .create(C_PAR)
            .unwrap()
            .create(D_PERP)
            .unwrap();
        let occ = OccupationVector::of_modes(&[C_PAR, D_PERP]).unwrap();
        assert_eq!(s.amplitude(&occ), Complex64::new(1.0, 0.0));
        assert_eq!(s.norm(), 1.0);
    }

    #[test]
    fn third_photon_is_rejected() {
        let s = FockState::vacuum()
            .create(C_PAR)
            .unwrap()
            .create(D_PAR)
            .unwrap();
        assert_eq!(
            s.create(C_PERP),
            Err(Error::CapacityExceeded { photons: 3, max: 2 })
        );
        assert!(OccupationVector::from_counts([(C_PAR, 2), (D_PAR, 1)]).is_err());
    }

    #[test]
    fn zero_expansion_has_zero_norm() {
        assert_eq!(FockState::zero().norm(), 0.0);
    }

    #[test]
    fn absent_ket_has_zero_probability() {
        let s = FockState::vacuum().create(C_PAR).unwrap();
        let occ = OccupationVector::of_modes(&[D_PAR]).unwrap();
        assert_eq!(s.probability_of(&occ).unwrap(), 0.0);
    }

    #[test]
    fn unnormalized_state_refuses_born_rule() {
        let s = FockState::vacuum()
            .create(C_PAR)
            .unwrap()
            .create(C_PAR)
            .unwrap();
        let occ = OccupationVector::from_counts([(C_PAR, 2)]).unwrap();
        assert!(matches!(
            s.probability_of(&occ),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn cancelling_terms_are_pruned() {
        let one = FockState::vacuum().create(C_PAR).unwrap();
        let diff = one.clone() + one * Complex64::new(-1.0, 0.0);
        assert!(diff.is_empty());
    }

    #[test]
    fn rendering_is_sorted_and_stable() {
        let half = Complex64::new(0.5, 0.0);
        let a = FockState::basis(OccupationVector::of_modes(&[C_PAR, D_PERP]).unwrap()) * half;
        let b = FockState::basis(OccupationVector::from_counts([(C_PERP, 2)]).unwrap())
            * Complex64::new(0.0, -0.5);
        let s1 = a.clone() + b.clone();
        let s2 = b + a;
        assert_eq!(s1.to_string(), s2.to_string());
        assert_eq!(s1.to_string(), "(0.5+0i)|c∥,d⊥⟩ + (0-0.5i)|2c⊥⟩");
        assert_eq!(FockState::vacuum().to_string(), "(1+0i)|0⟩");
    }

    #[test]
    fn mode_labels() {
        assert_eq!(
            ModeId::Source(Station::One, Polarization::X).to_string(),
            "a1x"
        );
        assert_eq!(
            ModeId::Beam(Station::Two, Polarization::Y).to_string(),
            "dy"
        );
        assert_eq!(ModeId::Lost(Station::Two, Port::Perp).to_string(), "r(d⊥)");
        assert_eq!(
            ModeId::Lost(Station::One, Port::Perp).loss_partner(),
            Some(C_PERP)
        );
        assert_eq!(C_PERP.loss_partner(), None);
    }
}
