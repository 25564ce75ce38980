//! Linear-optics measurement devices.
//!
//! Each device is a train of optical elements acting on one photon's
//! (polarization ⊗ path) factor, followed by detection at one of two output
//! ports behind a two-outcome polarization analyzer. Pulling the four
//! detector projectors back through the train gives the device's POVM,
//! which must coincide with the joint eigenprojectors of the context it
//! claims to measure.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, FRAC_PI_8};

use serde::{Deserialize, Serialize};

use crate::error::{AvnError, Result};
use crate::observables::{context, Setting};
use crate::qstate::{
    c, kets, lift_party, max_abs_entry, Dof, Mat16, Mat2, Mat4, Party, StateVector, SubsystemSlot,
};
use crate::source::{apply_noise, build_psi, NoiseModel, SourceConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ElementKind {
    BeamSplitter,
    PolarizingBeamSplitter,
    HalfWavePlate { angle: f64 },
    Polarizer { angle: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticalElement {
    pub kind: ElementKind,
    pub party: Party,
}

impl OpticalElement {
    pub fn acts_on(&self) -> Vec<SubsystemSlot> {
        let pol = SubsystemSlot::new(self.party, Dof::Polarization);
        let path = SubsystemSlot::new(self.party, Dof::Path);
        match self.kind {
            ElementKind::BeamSplitter => vec![path],
            ElementKind::HalfWavePlate { .. } | ElementKind::Polarizer { .. } => vec![pol],
            ElementKind::PolarizingBeamSplitter => vec![pol, path],
        }
    }

    /// Matrix on the photon's 4-dimensional factor (local index 2·pol + path).
    pub fn local_matrix(&self) -> Mat4 {
        match self.kind {
            ElementKind::BeamSplitter => kron2(&Mat2::identity(), &bs_transform()),
            ElementKind::HalfWavePlate { angle } => kron2(&hwp_transform(angle), &Mat2::identity()),
            ElementKind::Polarizer { angle } => {
                kron2(&polarizer_projector(angle), &Mat2::identity())
            }
            ElementKind::PolarizingBeamSplitter => pbs_transform(),
        }
    }
}

fn kron2(a: &Mat2, b: &Mat2) -> Mat4 {
    Mat4::from_fn(|i, j| a[(i >> 1, j >> 1)] * b[(i & 1, j & 1)])
}

/// R → (R+L)/√2, L → (R−L)/√2.
pub fn bs_transform() -> Mat2 {
    let s = c(FRAC_1_SQRT_2, 0.0);
    Mat2::new(s, s, s, -s)
}

/// Half-wave plate Jones matrix [[cos2θ, sin2θ], [sin2θ, −cos2θ]] in H/V.
pub fn hwp_transform(angle: f64) -> Mat2 {
    let (s, co) = (2.0 * angle).sin_cos();
    Mat2::new(c(co, 0.0), c(s, 0.0), c(s, 0.0), c(-co, 0.0))
}

/// Rank-1 projector onto linear polarization at `angle`.
pub fn polarizer_projector(angle: f64) -> Mat2 {
    let k = kets::linear(angle);
    k * k.adjoint()
}

/// Transmits H and reflects V. With output ports R″ = 0 and L″ = 1, an H
/// photon from L and a V photon from R both leave through R″.
pub fn pbs_transform() -> Mat4 {
    let one = c(1.0, 0.0);
    let mut m = Mat4::zeros();
    // H: path index swapped
    m[(0, 1)] = one;
    m[(1, 0)] = one;
    // V: path index kept
    m[(2, 2)] = one;
    m[(3, 3)] = one;
    m
}

/// Where a bit is read from, and whether its sign is flipped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BitSource {
    Port { invert: bool },
    Analyzer { invert: bool },
}

impl BitSource {
    fn value(self, port: usize, analyzer: usize) -> i8 {
        let (raw, invert) = match self {
            BitSource::Port { invert } => (port, invert),
            BitSource::Analyzer { invert } => (analyzer, invert),
        };
        let v = if raw == 0 { 1 } else { -1 };
        if invert {
            -v
        } else {
            v
        }
    }
}

/// Optical layout of one device.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApparatusLayout {
    pub party: Party,
    pub setting: Setting,
    /// Applied in order.
    pub elements: Vec<OpticalElement>,
    /// Analyzer outcome 0 passes this angle, outcome 1 the orthogonal one.
    pub analyzer_angle: f64,
    pub port_names: [&'static str; 2],
    pub bit1: BitSource,
    pub bit2: BitSource,
}

pub fn layout(party: Party, setting: Setting) -> ApparatusLayout {
    use BitSource::*;
    let el = |kind| OpticalElement { kind, party };
    let hwp_pair = |angle| {
        // one plate in each path; both act on the photon's polarization
        vec![
            el(ElementKind::HalfWavePlate { angle }),
            el(ElementKind::PolarizingBeamSplitter),
        ]
    };
    let direct = ["R", "L"];
    let after_bs = ["+", "-"];
    let after_pbs = ["R''", "L''"];
    let (elements, analyzer_angle, port_names, bit1, bit2) = match (party, setting) {
        // (z'_A, x_A): path read directly, ± analyzer
        (Party::Alice, Setting::A) => (
            vec![],
            FRAC_PI_4,
            direct,
            Port { invert: false },
            Analyzer { invert: false },
        ),
        // (z_A, x'_A): H/V analyzer, BS on the paths
        (Party::Alice, Setting::B) => (
            vec![el(ElementKind::BeamSplitter)],
            0.0,
            after_bs,
            Analyzer { invert: false },
            Port { invert: false },
        ),
        // (z_Az'_A, x_Ax'_A): the θ=0 plates flip the sign of V, so the ±
        // analyzer reads x_Ax'_A inverted; R'' carries z_Az'_A = −1
        (Party::Alice, Setting::C) => (
            hwp_pair(0.0),
            FRAC_PI_4,
            after_pbs,
            Port { invert: true },
            Analyzer { invert: true },
        ),
        // (z_B, z'_B)
        (Party::Bob, Setting::A) => (
            vec![],
            0.0,
            direct,
            Analyzer { invert: false },
            Port { invert: false },
        ),
        // (x_B, x'_B)
        (Party::Bob, Setting::B) => (
            vec![el(ElementKind::BeamSplitter)],
            FRAC_PI_4,
            after_bs,
            Analyzer { invert: false },
            Port { invert: false },
        ),
        // (z_Bx'_B, x_Bz'_B): after the 22.5° plates the PBS port sorts by
        // x_Bz'_B and the ± analyzer reads z_Bx'_B
        (Party::Bob, Setting::C) => (
            hwp_pair(FRAC_PI_8),
            FRAC_PI_4,
            after_pbs,
            Analyzer { invert: false },
            Port { invert: true },
        ),
    };
    ApparatusLayout {
        party,
        setting,
        elements,
        analyzer_angle,
        port_names,
        bit1,
        bit2,
    }
}

impl ApparatusLayout {
    /// Combined transfer matrix of the element train.
    pub fn transfer(&self) -> Mat4 {
        self.elements
            .iter()
            .fold(Mat4::identity(), |acc, e| e.local_matrix() * acc)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionOutcome {
    pub bit1: i8,
    pub bit2: i8,
    pub port: &'static str,
    /// Polarization angle passed by the analyzer for this outcome.
    pub analyzer_angle: f64,
    /// Projector on the photon's 4-dimensional factor.
    pub local_projector: Mat4,
    /// Same projector on the full two-photon space.
    pub projector: Mat16,
}

/// Four detector projectors of one device, pulled back to its input.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionModel {
    pub party: Party,
    pub setting: Setting,
    /// Ordered (+,+), (+,−), (−,+), (−,−) in (bit1, bit2).
    pub outcomes: [DetectionOutcome; 4],
}

/// Index of a two-bit outcome in [`DetectionModel::outcomes`].
pub fn outcome_index(bit1: i8, bit2: i8) -> usize {
    usize::from(bit1 < 0) * 2 + usize::from(bit2 < 0)
}

impl DetectionModel {
    pub fn outcome(&self, bit1: i8, bit2: i8) -> &DetectionOutcome {
        &self.outcomes[outcome_index(bit1, bit2)]
    }

    /// Outcome probabilities for a single photon in `local` (4 components).
    pub fn local_probabilities(&self, local: &nalgebra::Vector4<crate::qstate::C64>) -> [f64; 4] {
        std::array::from_fn(|k| local.dotc(&(self.outcomes[k].local_projector * local)).re)
    }
}

pub fn build_apparatus(party: Party, setting: Setting) -> DetectionModel {
    let lay = layout(party, setting);
    let u = lay.transfer();
    let mut slots: [Option<DetectionOutcome>; 4] = Default::default();
    for port in 0..2 {
        for analyzer in 0..2 {
            let angle = lay.analyzer_angle + analyzer as f64 * FRAC_PI_2;
            let mut port_proj = Mat2::zeros();
            port_proj[(port, port)] = c(1.0, 0.0);
            let detector = kron2(&polarizer_projector(angle), &port_proj);
            let local = u.adjoint() * detector * u;
            let bit1 = lay.bit1.value(port, analyzer);
            let bit2 = lay.bit2.value(port, analyzer);
            let idx = outcome_index(bit1, bit2);
            assert!(slots[idx].is_none(), "bit labels must be a bijection");
            slots[idx] = Some(DetectionOutcome {
                bit1,
                bit2,
                port: lay.port_names[port],
                analyzer_angle: angle,
                local_projector: local,
                projector: lift_party(&local, party),
            });
        }
    }
    DetectionModel {
        party,
        setting,
        outcomes: slots.map(|s| s.expect("four distinct outcomes")),
    }
}

/// All six devices, Alice's first, settings in a, b, c order.
pub fn all_apparatus() -> Vec<DetectionModel> {
    Party::ALL
        .iter()
        .flat_map(|&p| Setting::ALL.iter().map(move |&s| build_apparatus(p, s)))
        .collect()
}

/// Largest entrywise deviation between the device projectors and the
/// joint eigenprojectors (1 + b₁g₁)(1 + b₂g₂)/4 of the context.
pub fn apparatus_vs_projective(party: Party, setting: Setting) -> f64 {
    let model = build_apparatus(party, setting);
    let ctx = context(party, setting);
    let id = Mat16::identity();
    model
        .outcomes
        .iter()
        .map(|o| {
            let p1 = (id + ctx.generator1.matrix() * c(f64::from(o.bit1), 0.0)) * c(0.5, 0.0);
            let p2 = (id + ctx.generator2.matrix() * c(f64::from(o.bit2), 0.0)) * c(0.5, 0.0);
            max_abs_entry(&(o.projector - p1 * p2))
        })
        .fold(0.0, f64::max)
}

/// Output port of the path-interfering beam splitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BsPort {
    /// Receives |+⟩_path.
    Plus,
    /// Receives |−⟩_path.
    Minus,
}

impl BsPort {
    fn index(self) -> usize {
        match self {
            BsPort::Plus => 0,
            BsPort::Minus => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeConfig {
    /// Polarizer angles (Alice, Bob), radians.
    pub polarizer_angles: (f64, f64),
    pub ports: (BsPort, BsPort),
}

impl Default for FringeConfig {
    /// Crossed ±45° polarizers and opposite ports: for the singlet this is
    /// the combination whose coincidence peaks at φ = 0.
    fn default() -> Self {
        FringeConfig {
            polarizer_angles: (FRAC_PI_4, -FRAC_PI_4),
            ports: (BsPort::Plus, BsPort::Minus),
        }
    }
}

fn fringe_projector(config: &FringeConfig) -> Result<Mat16> {
    let (alpha, beta) = config.polarizer_angles;
    for (name, value) in [("alpha", alpha), ("beta", beta)] {
        if !value.is_finite() {
            return Err(AvnError::ParameterOutOfRange { name, value });
        }
    }
    let bs = bs_transform();
    let port = |p: BsPort| {
        let mut m = Mat2::zeros();
        m[(p.index(), p.index())] = c(1.0, 0.0);
        bs.adjoint() * m * bs
    };
    let a = lift_party(
        &kron2(&polarizer_projector(alpha), &port(config.ports.0)),
        Party::Alice,
    );
    let b = lift_party(
        &kron2(&polarizer_projector(beta), &port(config.ports.1)),
        Party::Bob,
    );
    Ok(a * b)
}

/// Twofold coincidence probability behind the two polarizers and beam
/// splitter ports, for the ideal state at each path phase.
pub fn phase_fringe(phi_values: &[f64], config: &FringeConfig) -> Result<Vec<f64>> {
    let proj = fringe_projector(config)?;
    Ok(phi_values
        .iter()
        .map(|&phi| {
            let psi: StateVector = build_psi(&SourceConfig::new(phi));
            psi.amplitudes().dotc(&(proj * psi.amplitudes())).re
        })
        .collect())
}

/// As [`phase_fringe`], for the state degraded by `noise`.
pub fn phase_fringe_mixed(
    phi_values: &[f64],
    config: &FringeConfig,
    noise: &NoiseModel,
) -> Result<Vec<f64>> {
    let proj = fringe_projector(config)?;
    phi_values
        .iter()
        .map(|&phi| {
            let rho = apply_noise(&build_psi(&SourceConfig::new(phi)), noise)?;
            Ok((rho.matrix() * proj).trace().re)
        })
        .collect()
}

/// (max − min)/(max + min); zero for an empty or all-zero fringe.
pub fn fringe_visibility(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if values.is_empty() || max + min <= 0.0 {
        0.0
    } else {
        (max - min) / (max + min)
    }
}
