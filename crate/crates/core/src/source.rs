//! The doubly entangled source and its imperfections.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{AvnError, Result};
use crate::observables::{correlation_operators, CorrelationId};
use crate::qstate::{c, DensityMatrix, Ket16, Mat16, Observable, StateVector, DIM};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceConfig {
    /// Relative phase between the two pair-creation paths, radians.
    pub phi: f64,
}

impl Default for SourceConfig {
    fn default() -> Self {
        SourceConfig { phi: 0.0 }
    }
}

impl SourceConfig {
    pub fn new(phi: f64) -> Self {
        SourceConfig {
            phi: canonical_angle(phi),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.phi.is_finite() {
            return Err(AvnError::ParameterOutOfRange {
                name: "phi",
                value: self.phi,
            });
        }
        Ok(())
    }
}

/// Wraps an angle into [−π, π).
pub fn canonical_angle(phi: f64) -> f64 {
    let wrapped = (phi + PI).rem_euclid(2.0 * PI) - PI;
    if wrapped >= PI {
        wrapped - 2.0 * PI
    } else {
        wrapped
    }
}

/// ½[(|HV⟩ − |VH⟩) ⊗ (|RL⟩ − e^{iφ}|LR⟩)]
pub fn build_psi(config: &SourceConfig) -> StateVector {
    let phase = c(config.phi.cos(), config.phi.sin());
    let mut v = Ket16::zeros();
    // (pol_A, path_A, pol_B, path_B) → 8·polA + 4·pathA + 2·polB + pathB
    v[3] = c(0.5, 0.0); // H R V L
    v[6] = -phase * 0.5; // H L V R
    v[9] = c(-0.5, 0.0); // V R H L
    v[12] = phase * 0.5; // V L H R
    StateVector::new(v).expect("unit norm by construction")
}

/// Imperfection channels applied to the ideal state.
///
/// Dephasing acts identically on both photons. A visibility `v` scales every
/// coherence that differs in that degree of freedom on both photons by `v`,
/// i.e. each photon is dephased with factor √v.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    /// Weight of the maximally mixed admixture.
    pub white_noise_weight: f64,
    pub pol_visibility: f64,
    pub path_visibility: f64,
    /// Extra path phase, radians.
    pub phase_offset: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel::ideal()
    }
}

impl NoiseModel {
    pub const fn ideal() -> Self {
        NoiseModel {
            white_noise_weight: 0.0,
            pol_visibility: 1.0,
            path_visibility: 1.0,
            phase_offset: 0.0,
        }
    }

    pub fn white(weight: f64) -> Self {
        NoiseModel {
            white_noise_weight: weight,
            ..NoiseModel::ideal()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("white_noise_weight", self.white_noise_weight),
            ("pol_visibility", self.pol_visibility),
            ("path_visibility", self.path_visibility),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(AvnError::ParameterOutOfRange { name, value });
            }
        }
        if !self.phase_offset.is_finite() {
            return Err(AvnError::ParameterOutOfRange {
                name: "phase_offset",
                value: self.phase_offset,
            });
        }
        Ok(())
    }

    fn as_array(&self) -> [f64; 4] {
        [
            self.white_noise_weight,
            self.pol_visibility,
            self.path_visibility,
            self.phase_offset,
        ]
    }

    fn from_array(x: [f64; 4]) -> Self {
        NoiseModel {
            white_noise_weight: x[0],
            pol_visibility: x[1],
            path_visibility: x[2],
            phase_offset: x[3],
        }
    }
}

const POL_BITS: usize = 0b1010;
const PATH_BITS: usize = 0b0101;

/// Multiplies the L_A amplitude by e^{iδ}, shifting the path phase by δ.
fn shift_path_phase(state: &StateVector, delta: f64) -> Ket16 {
    let phase = c(delta.cos(), delta.sin());
    let mut v = *state.amplitudes();
    for (i, amp) in v.iter_mut().enumerate() {
        if (i >> 2) & 1 == 1 {
            *amp *= phase;
        }
    }
    v
}

fn coherence_factor(i: usize, j: usize, pol_visibility: f64, path_visibility: f64) -> f64 {
    let diff = i ^ j;
    let dpol = (diff & POL_BITS).count_ones() as i32;
    let dpath = (diff & PATH_BITS).count_ones() as i32;
    pol_visibility.sqrt().powi(dpol) * path_visibility.sqrt().powi(dpath)
}

/// ρ = (1−w)·D(|ψ⟩⟨ψ|) + w·I/16
pub fn apply_noise(state: &StateVector, model: &NoiseModel) -> Result<DensityMatrix> {
    model.validate()?;
    let psi = shift_path_phase(state, model.phase_offset);
    let pure = psi * psi.adjoint();
    let w = model.white_noise_weight;
    let m = Mat16::from_fn(|i, j| {
        let coherent = pure[(i, j)]
            * coherence_factor(i, j, model.pol_visibility, model.path_visibility)
            * (1.0 - w);
        if i == j {
            coherent + c(w / DIM as f64, 0.0)
        } else {
            coherent
        }
    });
    Ok(DensityMatrix::from_matrix_unchecked(m))
}

/// Correlation predictions for the noisy ideal state, specialised for
/// repeated evaluation during fitting.
///
/// tr(ρO) splits into sums over coherence classes (number of flipped
/// polarization bits, number of flipped path bits); only those sums depend
/// on the phase offset, and the visibilities enter as per-class factors.
struct CorrelationPredictor {
    ops: [Observable; 9],
    traces: [f64; 9],
    psi: StateVector,
}

type ClassSums = [[[f64; 3]; 3]; 9];

impl CorrelationPredictor {
    fn new() -> Self {
        let ops = correlation_operators();
        let traces = std::array::from_fn(|k| ops[k].matrix().trace().re);
        CorrelationPredictor {
            ops,
            traces,
            psi: build_psi(&SourceConfig::default()),
        }
    }

    fn class_sums(&self, phase_offset: f64) -> ClassSums {
        let psi = shift_path_phase(&self.psi, phase_offset);
        let mut sums = [[[0.0; 3]; 3]; 9];
        for (k, op) in self.ops.iter().enumerate() {
            let o = op.matrix();
            for i in 0..DIM {
                if psi[i].norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..DIM {
                    let term = psi[i] * psi[j].conj() * o[(j, i)];
                    let diff = i ^ j;
                    let dp = (diff & POL_BITS).count_ones() as usize;
                    let dx = (diff & PATH_BITS).count_ones() as usize;
                    sums[k][dp][dx] += term.re;
                }
            }
        }
        sums
    }

    fn predict_with(&self, sums: &ClassSums, model: &NoiseModel) -> [f64; 9] {
        let sp = model.pol_visibility.sqrt();
        let sx = model.path_visibility.sqrt();
        let pol = [1.0, sp, sp * sp];
        let path = [1.0, sx, sx * sx];
        let w = model.white_noise_weight;
        std::array::from_fn(|k| {
            let mut coherent = 0.0;
            for dp in 0..3 {
                for dx in 0..3 {
                    coherent += sums[k][dp][dx] * pol[dp] * path[dx];
                }
            }
            (1.0 - w) * coherent + w * self.traces[k] / DIM as f64
        })
    }

    fn predict(&self, model: &NoiseModel) -> [f64; 9] {
        self.predict_with(&self.class_sums(model.phase_offset), model)
    }
}

/// Exact correlations of `apply_noise(build_psi(0), model)` in
/// [`CorrelationId::ALL`] order.
pub fn predicted_correlations(model: &NoiseModel) -> Result<[f64; 9]> {
    model.validate()?;
    Ok(CorrelationPredictor::new().predict(model))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseFit {
    pub model: NoiseModel,
    /// Sum of squared deviations over the eight non-M correlations.
    pub residual: f64,
    pub max_abs_deviation: f64,
    /// Model correlations in [`CorrelationId::ALL`] order.
    pub predicted: [f64; 9],
    pub iterations: usize,
    /// Set when the targets carry no correlation at all.
    pub degenerate: bool,
}

const GRID_STEP: f64 = 0.05;
const PHASE_GRID: [f64; 5] = [0.0, PI / 4.0, -PI / 4.0, PI / 2.0, -PI / 2.0];
const MAX_SWEEPS: usize = 1000;
const CONVERGENCE: f64 = 1e-9;

fn objective(predicted: &[f64; 9], targets: &[f64; 9]) -> f64 {
    CorrelationId::NON_M
        .iter()
        .map(|id| {
            let d = predicted[id.index()] - targets[id.index()];
            d * d
        })
        .sum()
}

/// Finds the noise model whose eight non-M correlations best match `targets`
/// in least squares. `targets` is in [`CorrelationId::ALL`] order; the M
/// entry is ignored.
///
/// Deterministic: a fixed grid, then coordinate descent with step halving.
pub fn fit_noise(targets: &[f64; 9]) -> Result<NoiseFit> {
    for &t in targets {
        if !(-1.0..=1.0).contains(&t) {
            return Err(AvnError::ParameterOutOfRange {
                name: "target",
                value: t,
            });
        }
    }
    let predictor = CorrelationPredictor::new();

    if CorrelationId::NON_M
        .iter()
        .all(|id| targets[id.index()].abs() <= 1e-12)
    {
        let model = NoiseModel::white(1.0);
        let predicted = predictor.predict(&model);
        return Ok(NoiseFit {
            model,
            residual: objective(&predicted, targets),
            max_abs_deviation: max_deviation(&predicted, targets),
            predicted,
            iterations: 0,
            degenerate: true,
        });
    }

    let steps = (1.0 / GRID_STEP).round() as usize;
    let mut best = (f64::INFINITY, NoiseModel::ideal());
    for &delta in &PHASE_GRID {
        let sums = predictor.class_sums(delta);
        for iw in 0..=steps {
            for ip in (0..=steps).rev() {
                for ix in (0..=steps).rev() {
                    let model = NoiseModel {
                        white_noise_weight: iw as f64 * GRID_STEP,
                        pol_visibility: ip as f64 * GRID_STEP,
                        path_visibility: ix as f64 * GRID_STEP,
                        phase_offset: delta,
                    };
                    let f = objective(&predictor.predict_with(&sums, &model), targets);
                    if f < best.0 {
                        best = (f, model);
                    }
                }
            }
        }
    }

    let lower = [0.0, 0.0, 0.0, -PI];
    let upper = [1.0, 1.0, 1.0, PI];
    let mut x = best.1.as_array();
    let mut fx = best.0;
    let mut step = [GRID_STEP, GRID_STEP, GRID_STEP, PI / 8.0];
    let mut iterations = 0;
    while iterations < MAX_SWEEPS && step.iter().cloned().fold(0.0, f64::max) >= CONVERGENCE {
        iterations += 1;
        let mut improved = false;
        for k in 0..4 {
            for dir in [1.0, -1.0] {
                let mut trial = x;
                trial[k] = (x[k] + dir * step[k]).clamp(lower[k], upper[k]);
                if trial[k] == x[k] {
                    continue;
                }
                let f = objective(&predictor.predict(&NoiseModel::from_array(trial)), targets);
                if f < fx {
                    x = trial;
                    fx = f;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            for s in &mut step {
                *s *= 0.5;
            }
        }
    }

    let model = NoiseModel::from_array(x);
    let predicted = predictor.predict(&model);
    Ok(NoiseFit {
        model,
        residual: objective(&predicted, targets),
        max_abs_deviation: max_deviation(&predicted, targets),
        predicted,
        iterations,
        degenerate: false,
    })
}

fn max_deviation(predicted: &[f64; 9], targets: &[f64; 9]) -> f64 {
    CorrelationId::NON_M
        .iter()
        .map(|id| (predicted[id.index()] - targets[id.index()]).abs())
        .fold(0.0, f64::max)
}
