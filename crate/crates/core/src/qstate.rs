//! Dense complex linear algebra on the 16-dimensional two-photon space.
//!
//! Each photon carries a polarization qubit (H, V) and a path qubit (R, L).
//! Basis states are ordered `(pol_A, path_A, pol_B, path_B)` with H = R = 0
//! and V = L = 1, so the basis index is `8·pol_A + 4·path_A + 2·pol_B + path_B`.

use nalgebra::{Complex, Matrix2, Matrix4, SMatrix, SVector, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{AvnError, Result};

pub type C64 = Complex<f64>;
pub type Mat2 = Matrix2<C64>;
pub type Mat4 = Matrix4<C64>;
pub type Mat16 = SMatrix<C64, 16, 16>;
pub type Ket2 = Vector2<C64>;
pub type Ket16 = SVector<C64, 16>;

pub const DIM: usize = 16;

/// Tolerance for exact algebraic identities.
pub const ALGEBRAIC_TOL: f64 = 1e-12;
/// Tolerance for spectral and derived checks.
pub const SPECTRAL_TOL: f64 = 1e-10;

const FACTOR_NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Party {
    Alice,
    Bob,
}

impl Party {
    pub const ALL: [Party; 2] = [Party::Alice, Party::Bob];

    /// Single-letter suffix used in symbol names.
    pub fn suffix(self) -> &'static str {
        match self {
            Party::Alice => "A",
            Party::Bob => "B",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dof {
    Polarization,
    Path,
}

/// One of the four qubit factors of the two-photon space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubsystemSlot {
    pub party: Party,
    pub dof: Dof,
}

impl SubsystemSlot {
    pub const fn new(party: Party, dof: Dof) -> Self {
        SubsystemSlot { party, dof }
    }

    /// Bit position of this factor inside the basis index.
    pub fn bit(self) -> usize {
        match (self.party, self.dof) {
            (Party::Alice, Dof::Polarization) => 3,
            (Party::Alice, Dof::Path) => 2,
            (Party::Bob, Dof::Polarization) => 1,
            (Party::Bob, Dof::Path) => 0,
        }
    }
}

pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

fn r(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

/// Single-photon kets in the H/V and R/L bases.
pub mod kets {
    use super::{r, Ket2};
    use std::f64::consts::FRAC_1_SQRT_2;

    pub fn h() -> Ket2 {
        Ket2::new(r(1.0), r(0.0))
    }
    pub fn v() -> Ket2 {
        Ket2::new(r(0.0), r(1.0))
    }
    /// Path R shares the index of H.
    pub fn path_r() -> Ket2 {
        h()
    }
    pub fn path_l() -> Ket2 {
        v()
    }
    pub fn plus() -> Ket2 {
        Ket2::new(r(FRAC_1_SQRT_2), r(FRAC_1_SQRT_2))
    }
    pub fn minus() -> Ket2 {
        Ket2::new(r(FRAC_1_SQRT_2), r(-FRAC_1_SQRT_2))
    }
    /// Linear polarization at `angle` radians from horizontal.
    pub fn linear(angle: f64) -> Ket2 {
        Ket2::new(r(angle.cos()), r(angle.sin()))
    }
}

pub mod pauli {
    use super::{c, r, Mat2};

    pub fn identity() -> Mat2 {
        Mat2::identity()
    }
    pub fn x() -> Mat2 {
        Mat2::new(r(0.0), r(1.0), r(1.0), r(0.0))
    }
    pub fn y() -> Mat2 {
        Mat2::new(r(0.0), c(0.0, -1.0), c(0.0, 1.0), r(0.0))
    }
    pub fn z() -> Mat2 {
        Mat2::new(r(1.0), r(0.0), r(0.0), r(-1.0))
    }
}

pub fn max_abs_entry<const R: usize, const C: usize>(m: &SMatrix<C64, R, C>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn hermitian_deviation<const N: usize>(m: &SMatrix<C64, N, N>) -> f64 {
    max_abs_entry(&(m - m.adjoint()))
}

/// Normalized pure state of the two photons.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(Ket16);

impl StateVector {
    /// Wraps `amplitudes`, rejecting vectors whose squared norm is off by more than 1e-12.
    pub fn new(amplitudes: Ket16) -> Result<Self> {
        let norm_sqr = amplitudes.norm_squared();
        if (norm_sqr - 1.0).abs() > ALGEBRAIC_TOL {
            return Err(AvnError::NotNormalized { index: 0, norm_sqr });
        }
        Ok(StateVector(amplitudes))
    }

    /// Rescales an arbitrary non-zero vector to unit norm.
    pub fn normalized(amplitudes: Ket16) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(AvnError::NotNormalized {
                index: 0,
                norm_sqr: norm * norm,
            });
        }
        Ok(StateVector(amplitudes / r(norm)))
    }

    pub fn basis(index: usize) -> Self {
        let mut v = Ket16::zeros();
        v[index] = r(1.0);
        StateVector(v)
    }

    pub fn amplitudes(&self) -> &Ket16 {
        &self.0
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.0[index]
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.0.dotc(&other.0)
    }

    /// Applies an operator without renormalizing.
    pub fn apply(&self, op: &Observable) -> Ket16 {
        op.matrix() * self.0
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix(self.0 * self.0.adjoint())
    }
}

/// Product state of four single-qubit factors in slot order.
pub fn tensor4(pol_a: &Ket2, path_a: &Ket2, pol_b: &Ket2, path_b: &Ket2) -> Result<StateVector> {
    let factors = [pol_a, path_a, pol_b, path_b];
    for (index, f) in factors.iter().enumerate() {
        let norm_sqr = f.norm_squared();
        if (norm_sqr - 1.0).abs() > FACTOR_NORM_TOL {
            return Err(AvnError::NotNormalized { index, norm_sqr });
        }
    }
    let mut v = Ket16::zeros();
    for (i, amp) in v.iter_mut().enumerate() {
        *amp = pol_a[(i >> 3) & 1] * path_a[(i >> 2) & 1] * pol_b[(i >> 1) & 1] * path_b[i & 1];
    }
    Ok(StateVector(v))
}

/// Mixed state of the two photons.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(Mat16);

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(m: Mat16) -> Result<Self> {
        let dev = hermitian_deviation(&m);
        if dev > ALGEBRAIC_TOL {
            return Err(AvnError::InvalidDensityMatrix(format!(
                "not Hermitian (deviation {dev:e})"
            )));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > ALGEBRAIC_TOL || tr.im.abs() > ALGEBRAIC_TOL {
            return Err(AvnError::InvalidDensityMatrix(format!("trace {tr}")));
        }
        let rho = DensityMatrix(m);
        let min = rho.min_eigenvalue();
        if min < -SPECTRAL_TOL {
            return Err(AvnError::InvalidDensityMatrix(format!(
                "negative eigenvalue {min:e}"
            )));
        }
        Ok(rho)
    }

    /// Caller guarantees validity; used where the construction is a known channel.
    pub(crate) fn from_matrix_unchecked(m: Mat16) -> Self {
        DensityMatrix(m)
    }

    pub fn maximally_mixed() -> Self {
        DensityMatrix(Mat16::identity() / r(DIM as f64))
    }

    pub fn matrix(&self) -> &Mat16 {
        &self.0
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let hermitian = (self.0 + self.0.adjoint()) * r(0.5);
        hermitian
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }

    /// ⟨ψ|ρ|ψ⟩
    pub fn fidelity_with(&self, state: &StateVector) -> f64 {
        state.amplitudes().dotc(&(self.0 * state.amplitudes())).re
    }
}

/// Hermitian operator on the two-photon space.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable(Mat16);

impl Observable {
    pub fn new(m: Mat16) -> Result<Self> {
        let deviation = hermitian_deviation(&m);
        if deviation > ALGEBRAIC_TOL {
            return Err(AvnError::NotHermitian { deviation });
        }
        Ok(Observable(m))
    }

    pub fn identity() -> Self {
        Observable(Mat16::identity())
    }

    pub fn matrix(&self) -> &Mat16 {
        &self.0
    }

    /// Product of the factors, left to right. The factors must commute for
    /// the result to stay Hermitian; anything else is rejected.
    pub fn product<'a, I>(factors: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a Observable>,
    {
        let m = factors
            .into_iter()
            .fold(Mat16::identity(), |acc, f| acc * f.matrix());
        Observable::new(m)
    }

    /// Integer-weighted sum of observables.
    pub fn signed_sum<'a, I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (i32, &'a Observable)>,
    {
        let m = terms.into_iter().fold(Mat16::zeros(), |acc, (w, o)| {
            acc + o.matrix() * r(f64::from(w))
        });
        Observable(m)
    }

    /// Entrywise deviation of the square from the identity.
    pub fn dichotomic_deviation(&self) -> f64 {
        max_abs_entry(&(self.0 * self.0 - Mat16::identity()))
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.0.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Largest eigenvalue and a normalized eigenvector for it.
    pub fn top_eigenpair(&self) -> (f64, StateVector) {
        let eig = self.0.symmetric_eigen();
        let (k, &val) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("16 eigenvalues");
        let vec: Ket16 = eig.eigenvectors.column(k).into_owned();
        let norm = vec.norm();
        (val, StateVector(vec / r(norm)))
    }
}

/// Embeds a single-qubit operator into `slot`, identity elsewhere.
pub fn lift_local(op: &Mat2, slot: SubsystemSlot) -> Result<Observable> {
    let deviation = hermitian_deviation(op);
    if deviation > ALGEBRAIC_TOL {
        return Err(AvnError::NotHermitian { deviation });
    }
    let bit = slot.bit();
    let rest = !(1usize << bit);
    let m = Mat16::from_fn(|i, j| {
        if i & rest == j & rest {
            op[((i >> bit) & 1, (j >> bit) & 1)]
        } else {
            r(0.0)
        }
    });
    Ok(Observable(m))
}

/// Embeds an operator on one photon's 4-dimensional (pol ⊗ path) factor.
///
/// The local index is `2·pol + path`. No Hermiticity requirement, so this
/// also lifts unitaries and projectors.
pub fn lift_party(op: &Mat4, party: Party) -> Mat16 {
    let shift = match party {
        Party::Alice => 2,
        Party::Bob => 0,
    };
    let rest = !(0b11usize << shift);
    Mat16::from_fn(|i, j| {
        if i & rest == j & rest {
            op[((i >> shift) & 0b11, (j >> shift) & 0b11)]
        } else {
            r(0.0)
        }
    })
}

fn real_part(value: C64) -> Result<f64> {
    if value.im.abs() > ALGEBRAIC_TOL {
        return Err(AvnError::ComplexExpectation { imag: value.im });
    }
    Ok(value.re)
}

/// ⟨ψ|O|ψ⟩
pub fn expectation(obs: &Observable, state: &StateVector) -> Result<f64> {
    let psi = state.amplitudes();
    real_part(psi.dotc(&(obs.matrix() * psi)))
}

/// tr(ρ·O)
pub fn mixed_expectation(obs: &Observable, rho: &DensityMatrix) -> Result<f64> {
    let (o, p) = (obs.matrix(), rho.matrix());
    let mut acc = r(0.0);
    for i in 0..DIM {
        for j in 0..DIM {
            acc += p[(i, j)] * o[(j, i)];
        }
    }
    real_part(acc)
}

/// Largest entry magnitude of `ab − ba`.
pub fn commutator_norm(a: &Observable, b: &Observable) -> f64 {
    let (a, b) = (a.matrix(), b.matrix());
    max_abs_entry(&(a * b - b * a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    const ALICE_POL: SubsystemSlot = SubsystemSlot::new(Party::Alice, Dof::Polarization);
    const BOB_PATH: SubsystemSlot = SubsystemSlot::new(Party::Bob, Dof::Path);

    fn all_slots() -> Vec<SubsystemSlot> {
        let mut v = Vec::new();
        for p in Party::ALL {
            for d in [Dof::Polarization, Dof::Path] {
                v.push(SubsystemSlot::new(p, d));
            }
        }
        v
    }

    #[test]
    fn tensor4_basis_cases() {
        use kets::*;
        let s = tensor4(&h(), &path_r(), &h(), &path_r()).unwrap();
        assert_eq!(s, StateVector::basis(0));
        let s = tensor4(&v(), &path_l(), &v(), &path_l()).unwrap();
        assert_eq!(s, StateVector::basis(15));
        let s = tensor4(&plus(), &path_r(), &h(), &path_r()).unwrap();
        for i in 0..DIM {
            let expected = if i == 0 || i == 8 { FRAC_1_SQRT_2 } else { 0.0 };
            assert!((s.amplitude(i) - r(expected)).norm() < 1e-15, "index {i}");
        }
    }

    #[test]
    fn tensor4_rejects_unnormalized_factor() {
        let bad = Ket2::new(r(1.0), r(1.0));
        let h = kets::h();
        let err = tensor4(&h, &h, &bad, &h).unwrap_err();
        assert!(matches!(err, AvnError::NotNormalized { index: 2, .. }));
    }

    #[test]
    fn lift_sigma_z_alice_pol_is_diagonal_sign() {
        let z = lift_local(&pauli::z(), ALICE_POL).unwrap();
        for i in 0..DIM {
            for j in 0..DIM {
                let expected = if i != j {
                    0.0
                } else if i < 8 {
                    1.0
                } else {
                    -1.0
                };
                assert_eq!(z.matrix()[(i, j)], r(expected));
            }
        }
    }

    #[test]
    fn lift_identity_and_commuting_slots() {
        for slot in all_slots() {
            let id = lift_local(&pauli::identity(), slot).unwrap();
            assert_eq!(id, Observable::identity());
        }
        let za = lift_local(&pauli::z(), ALICE_POL).unwrap();
        let xb = lift_local(&pauli::x(), BOB_PATH).unwrap();
        assert_eq!(commutator_norm(&za, &xb), 0.0);
    }

    #[test]
    fn lift_rejects_non_hermitian() {
        let m = Mat2::new(r(0.0), r(1.0), r(0.0), r(0.0));
        assert!(matches!(
            lift_local(&m, ALICE_POL),
            Err(AvnError::NotHermitian { .. })
        ));
    }

    #[test]
    fn lifted_paulis_square_to_identity_and_distinct_slots_commute() {
        let paulis = [pauli::x(), pauli::y(), pauli::z()];
        let slots = all_slots();
        for (si, &s) in slots.iter().enumerate() {
            for p in &paulis {
                let a = lift_local(p, s).unwrap();
                assert!(a.dichotomic_deviation() < ALGEBRAIC_TOL);
                for &t in &slots[si + 1..] {
                    for q in &paulis {
                        let b = lift_local(q, t).unwrap();
                        assert!(commutator_norm(&a, &b) < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn anticommuting_paulis_have_commutator_two() {
        let za = lift_local(&pauli::z(), ALICE_POL).unwrap();
        let xa = lift_local(&pauli::x(), ALICE_POL).unwrap();
        assert!((commutator_norm(&za, &xa) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn identity_expectation_is_one() {
        let s = StateVector::normalized(Ket16::from_fn(|i, _| c(i as f64, -1.0))).unwrap();
        assert!((expectation(&Observable::identity(), &s).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn complex_expectation_is_rejected() {
        // A non-Hermitian matrix slipped in through the unchecked path.
        let mut m = Mat16::zeros();
        m[(0, 0)] = c(0.0, 1.0);
        let obs = Observable(m);
        let err = expectation(&obs, &StateVector::basis(0)).unwrap_err();
        assert!(matches!(err, AvnError::ComplexExpectation { .. }));
    }

    #[test]
    fn density_validation() {
        assert!(DensityMatrix::new(Mat16::identity() / r(16.0)).is_ok());
        assert!(DensityMatrix::new(Mat16::identity()).is_err());
        let mut m = Mat16::zeros();
        m[(0, 0)] = r(1.5);
        m[(1, 1)] = r(-0.5);
        assert!(DensityMatrix::new(m).is_err());
        let mut m = Mat16::identity() / r(16.0);
        m[(0, 1)] = r(0.01);
        assert!(DensityMatrix::new(m).is_err());
    }

    #[test]
    fn maximally_mixed_traceless_expectation_is_zero() {
        let rho = DensityMatrix::maximally_mixed();
        for s in all_slots() {
            let o = lift_local(&pauli::x(), s).unwrap();
            assert!(mixed_expectation(&o, &rho).unwrap().abs() < 1e-15);
        }
    }
}
