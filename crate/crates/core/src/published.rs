//! Reported measurement values of the two-photon all-versus-nothing
//! experiment, and arithmetic derived from them alone.

use crate::observables::CorrelationId;

/// A reported correlation value with its quoted error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasuredCorrelation {
    pub id: CorrelationId,
    pub value: f64,
    pub error: f64,
}

const fn row(id: CorrelationId, value: f64, error: f64) -> MeasuredCorrelation {
    MeasuredCorrelation { id, value, error }
}

/// The eight reported non-M correlation values.
pub const MEASURED: [MeasuredCorrelation; 8] = [
    row(CorrelationId::ZZ, -0.98526, 0.00094),
    row(CorrelationId::ZpZp, -0.99571, 0.00032),
    row(CorrelationId::XX, -0.98572, 0.00092),
    row(CorrelationId::XpXp, -0.92999, 0.00200),
    row(CorrelationId::ZZpZZp, 0.98538, 0.00094),
    row(CorrelationId::XXpXXp, 0.88037, 0.00296),
    row(CorrelationId::ZXpZXp, 0.90254, 0.00269),
    row(CorrelationId::XZpXZp, 0.98560, 0.00092),
];

pub const BELL_VALUE: f64 = 8.56904;
pub const BELL_ERROR: f64 = 0.00533;
pub const LOCAL_BOUND: f64 = 7.0;
/// "about 294 standard deviations"
pub const SIGMA_VIOLATION: f64 = 294.0;
/// "fidelity of about 96%" for the M experiment.
pub const M_FIDELITY: f64 = 0.96;
/// Mean |E| over the nine correlations, "visibility of 95%".
pub const VISIBILITY: f64 = 0.95;
/// Doubly entangled pairs per second.
pub const PAIR_RATE: f64 = 3.2e4;
/// Collection time per correlation, seconds.
pub const DURATION: f64 = 1.0;
/// Collection and detection efficiency per detector.
pub const DETECTION_EFFICIENCY: f64 = 0.26;

/// Implied rows below this count are outside the stated pair rate.
pub const COUNT_BAND: (f64, f64) = (2.5e4, 4.0e4);

pub fn measured(id: CorrelationId) -> Option<MeasuredCorrelation> {
    MEASURED.iter().copied().find(|m| m.id == id)
}

/// Fit targets in [`CorrelationId::ALL`] order, with M set to its ideal value.
pub fn targets() -> [f64; 9] {
    CorrelationId::ALL.map(|id| measured(id).map_or(f64::from(id.sign()), |m| m.value))
}

/// Σ|E| of the eight reported rows.
pub fn non_m_magnitude_sum() -> f64 {
    MEASURED.iter().map(|m| m.value.abs()).sum()
}

/// E(M) implied by the Bell value and the eight reported rows.
pub fn implied_m_value() -> f64 {
    // O = Σ|E_k| over the eight + (−E(M)) when every sign matches
    non_m_magnitude_sum() - BELL_VALUE
}

/// Probability of the quantum-allowed M outcome given E(M).
pub fn fidelity_from_m(e_m: f64) -> f64 {
    (1.0 - e_m) / 2.0
}

pub fn implied_sigma_violation() -> f64 {
    (BELL_VALUE - LOCAL_BOUND) / BELL_ERROR
}

pub fn implied_visibility() -> f64 {
    BELL_VALUE / 9.0
}

/// Sample size implied by a binomial standard error: n = (1 − E²)/ΔE².
pub fn implied_count(value: f64, error: f64) -> f64 {
    (1.0 - value * value) / (error * error)
}

/// Error on E(M) left over after the eight reported errors are removed from
/// the Bell error in quadrature.
pub fn implied_m_error() -> f64 {
    let eight: f64 = MEASURED.iter().map(|m| m.error * m.error).sum();
    (BELL_ERROR * BELL_ERROR - eight).sqrt()
}

/// Per-row sample sizes matching the reported errors, M included.
pub fn matched_counts() -> [f64; 9] {
    CorrelationId::ALL.map(|id| match measured(id) {
        Some(m) => implied_count(m.value, m.error),
        None => implied_count(implied_m_value(), implied_m_error()),
    })
}
