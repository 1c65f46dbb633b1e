//! Per-station outcome classes, joint probability tables and double-click confusion.

use core::fmt;

use crate::error::{Error, Result};
use crate::fock::{ModeId, OccupationVector, Port, Station};
use crate::optics::{build_experiment_state, check_efficiency, ExperimentConfig};

/// What one station registers behind its polarizing beamsplitter.
///
/// D⁺ is the detector on the parallel port, D⁻ the one on the perpendicular port.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum StationOutcome {
    /// One photon in D⁻, none in D⁺.
    SingleMinus = 1,
    /// One photon in D⁺, none in D⁻.
    SinglePlus = 2,
    /// No photons.
    Empty = 3,
    /// One photon in each detector.
    Split = 4,
    /// Two photons in D⁺.
    DoublePlus = 5,
    /// Two photons in D⁻.
    DoubleMinus = 6,
}

impl StationOutcome {
    pub const ALL: [StationOutcome; 6] = [
        StationOutcome::SingleMinus,
        StationOutcome::SinglePlus,
        StationOutcome::Empty,
        StationOutcome::Split,
        StationOutcome::DoublePlus,
        StationOutcome::DoubleMinus,
    ];

    /// Class number, 1 through 6.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i.wrapping_sub(1)).copied()
    }

    /// Classifies photon counts on (D⁺, D⁻).
    pub fn from_counts(plus: u8, minus: u8) -> Result<Self> {
        Ok(match (plus, minus) {
            (0, 1) => StationOutcome::SingleMinus,
            (1, 0) => StationOutcome::SinglePlus,
            (0, 0) => StationOutcome::Empty,
            (1, 1) => StationOutcome::Split,
            (2, 0) => StationOutcome::DoublePlus,
            (0, 2) => StationOutcome::DoubleMinus,
            _ => {
                return Err(Error::ImpossibleCount {
                    photons: plus as usize + minus as usize,
                })
            }
        })
    }

    /// The class a detector that cannot tell double from single clicks reports.
    pub fn confused(self) -> Self {
        match self {
            StationOutcome::DoubleMinus => StationOutcome::SingleMinus,
            StationOutcome::DoublePlus => StationOutcome::SinglePlus,
            other => other,
        }
    }

    pub fn is_double(self) -> bool {
        matches!(
            self,
            StationOutcome::DoublePlus | StationOutcome::DoubleMinus
        )
    }
}

impl fmt::Display for StationOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// Imperfect detection: `alpha` is the probability a double click is recognized
/// as such, `eta` the per-photon detection efficiency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorModel {
    pub alpha: f64,
    pub eta: f64,
}

impl DetectorModel {
    pub fn new(alpha: f64, eta: f64) -> Result<Self> {
        check_alpha(alpha)?;
        check_efficiency(eta)?;
        Ok(Self { alpha, eta })
    }

    pub const IDEAL: DetectorModel = DetectorModel {
        alpha: 1.0,
        eta: 1.0,
    };
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::BadAlpha(alpha))
    }
}

/// `p[i][j]`: station 1 registers class `i`, station 2 class `j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointProbabilityTable {
    p: [[f64; 6]; 6],
    pub theta1: f64,
    pub theta2: f64,
    pub eta: f64,
    pub alpha: f64,
}

impl JointProbabilityTable {
    pub fn get(&self, first: StationOutcome, second: StationOutcome) -> f64 {
        self.p[first.index() - 1][second.index() - 1]
    }

    /// 1-based access. Panics outside 1..=6.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.p[i - 1][j - 1]
    }

    pub fn cells(&self) -> &[[f64; 6]; 6] {
        &self.p
    }

    pub fn total(&self) -> f64 {
        self.p.iter().flatten().sum()
    }

    /// `(i, j, p)` in lexicographic order, 1-based.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..36).map(move |k| (k / 6 + 1, k % 6 + 1, self.p[k / 6][k % 6]))
    }

    fn add(&mut self, first: StationOutcome, second: StationOutcome, prob: f64) {
        self.p[first.index() - 1][second.index() - 1] += prob;
    }

    fn blank(theta1: f64, theta2: f64, eta: f64) -> Self {
        Self {
            p: [[0.0; 6]; 6],
            theta1,
            theta2,
            eta,
            alpha: 1.0,
        }
    }
}

/// Maps outcome classes to ±1 for each observer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValueAssignment {
    first: [i8; 6],
    second: [i8; 6],
}

impl Default for ValueAssignment {
    /// Class 1 (single click in D⁻) is −1 for both observers, every other class +1.
    fn default() -> Self {
        let mut v = [1i8; 6];
        v[0] = -1;
        Self {
            first: v,
            second: v,
        }
    }
}

impl ValueAssignment {
    pub fn new(first: [i8; 6], second: [i8; 6]) -> Result<Self> {
        if first.iter().chain(&second).any(|&v| v != 1 && v != -1) {
            return Err(Error::InvalidConfig("assigned values must be ±1"));
        }
        Ok(Self { first, second })
    }

    pub fn value(&self, outcome: StationOutcome, station: Station) -> i8 {
        let table = match station {
            Station::One => &self.first,
            Station::Two => &self.second,
        };
        table[outcome.index() - 1]
    }
}

pub fn assigned_value(v: &ValueAssignment, outcome: StationOutcome, station: Station) -> i8 {
    v.value(outcome, station)
}

/// Per-station outcome of a detected ket. Loss ancillas count as undetected.
pub fn classify(occ: &OccupationVector) -> Result<(StationOutcome, StationOutcome)> {
    let mut counts = [[0u8; 2]; 2];
    for (mode, n) in occ.iter() {
        match mode {
            ModeId::Detected(s, p) => {
                let si = (s.number() - 1) as usize;
                let pi = match p {
                    Port::Parallel => 0,
                    Port::Perp => 1,
                };
                counts[si][pi] += n;
            }
            ModeId::Lost(..) => {}
            other => return Err(Error::UndetectedMode(other)),
        }
    }
    Ok((
        StationOutcome::from_counts(counts[0][0], counts[0][1])?,
        StationOutcome::from_counts(counts[1][0], counts[1][1])?,
    ))
}

/// Joint outcome distribution computed from the loss-expanded final state.
///
/// The table carries `alpha = 1`; use [`apply_alpha_confusion`] for partial
/// distinguishability.
pub fn joint_table(theta1: f64, theta2: f64, eta: f64) -> Result<JointProbabilityTable> {
    let state = build_experiment_state(&ExperimentConfig::lossy(theta1, theta2, eta))?;
    state.check_normalized()?;
    let mut table = JointProbabilityTable::blank(theta1, theta2, eta);
    for (occ, amp) in &state {
        let (first, second) = classify(occ)?;
        table.add(first, second, amp.norm_sqr());
    }
    Ok(table)
}

/// Each station independently reports a double click as the matching single
/// click with probability `1 − alpha`. The split outcome (4) is never confused.
pub fn apply_alpha_confusion(
    t: &JointProbabilityTable,
    alpha: f64,
) -> Result<JointProbabilityTable> {
    check_alpha(alpha)?;
    if t.alpha != 1.0 {
        return Err(Error::AlphaAlreadyApplied(t.alpha));
    }
    let miss = 1.0 - alpha;
    let relabel = |rows: &[[f64; 6]; 6]| -> [[f64; 6]; 6] {
        let mut out = *rows;
        for (from, to) in [(5, 0), (4, 1)] {
            for col in 0..6 {
                let moved = rows[from][col] * miss;
                out[from][col] = rows[from][col] - moved;
                out[to][col] += moved;
            }
        }
        out
    };
    // relabel station 1 (rows), then station 2 via the transpose
    let first = relabel(&t.p);
    let second = relabel(&transpose(&first));
    Ok(JointProbabilityTable {
        p: transpose(&second),
        alpha,
        ..*t
    })
}

fn transpose(m: &[[f64; 6]; 6]) -> [[f64; 6]; 6] {
    let mut out = [[0.0; 6]; 6];
    for (i, row) in m.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            out[j][i] = v;
        }
    }
    out
}

/// Closed-form joint probabilities at efficiency `eta` (alpha = 1).
///
/// Both-detected cells are the ideal predictions scaled by `η²`. One photon
/// lost leaves a single click on one side with probability `½η(1−η)` per
/// class; both lost gives `(1−η)²`.
pub fn reference_table(theta1: f64, theta2: f64, eta: f64) -> Result<JointProbabilityTable> {
    use StationOutcome::*;
    check_efficiency(eta)?;
    let mut t = JointProbabilityTable::blank(theta1, theta2, eta);
    let e2 = eta * eta;
    let c = libm::cos(2.0 * (theta1 - theta2));
    let (s1, s2) = (libm::sin(2.0 * theta1), libm::sin(2.0 * theta2));
    let (c1, c2) = (libm::cos(2.0 * theta1), libm::cos(2.0 * theta2));
    let same = e2 * (1.0 - c) / 8.0;
    let opposite = e2 * (1.0 + c) / 8.0;
    t.add(SingleMinus, SingleMinus, same);
    t.add(SinglePlus, SinglePlus, same);
    t.add(SinglePlus, SingleMinus, opposite);
    t.add(SingleMinus, SinglePlus, opposite);
    t.add(DoublePlus, Empty, e2 * s1 * s1 / 8.0);
    t.add(DoubleMinus, Empty, e2 * s1 * s1 / 8.0);
    t.add(Empty, DoublePlus, e2 * s2 * s2 / 8.0);
    t.add(Empty, DoubleMinus, e2 * s2 * s2 / 8.0);
    t.add(Split, Empty, e2 * c1 * c1 / 4.0);
    t.add(Empty, Split, e2 * c2 * c2 / 4.0);
    let one_lost = 0.5 * eta * (1.0 - eta);
    for single in [SingleMinus, SinglePlus] {
        t.add(single, Empty, one_lost);
        t.add(Empty, single, one_lost);
    }
    t.add(Empty, Empty, (1.0 - eta) * (1.0 - eta));
    Ok(t)
}
