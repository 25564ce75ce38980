//! Local observables, the six measurement contexts, the nine perfect
//! correlations and the Bell operator built from them.
//!
//! The symbol table here is shared with the `lhv` and `experiment` modules,
//! so a symbol name always refers to the same local quantity.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::qstate::{
    expectation, lift_local, pauli, Dof, Observable, Party, StateVector, SubsystemSlot,
    SPECTRAL_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Setting {
    A,
    B,
    C,
}

impl Setting {
    pub const ALL: [Setting; 3] = [Setting::A, Setting::B, Setting::C];

    pub fn label(self) -> &'static str {
        match self {
            Setting::A => "a",
            Setting::B => "b",
            Setting::C => "c",
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// The twelve local quantities that carry an element of reality.
///
/// Order matches the enumeration order of LHV assignments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Symbol {
    #[serde(rename = "zA")]
    ZA,
    #[serde(rename = "xA")]
    XA,
    #[serde(rename = "zA'")]
    ZpA,
    #[serde(rename = "xA'")]
    XpA,
    #[serde(rename = "zAzA'")]
    ZAZpA,
    #[serde(rename = "xAxA'")]
    XAXpA,
    #[serde(rename = "zB")]
    ZB,
    #[serde(rename = "xB")]
    XB,
    #[serde(rename = "zB'")]
    ZpB,
    #[serde(rename = "xB'")]
    XpB,
    #[serde(rename = "zBxB'")]
    ZBXpB,
    #[serde(rename = "xBzB'")]
    XBZpB,
}

impl Symbol {
    pub const ALL: [Symbol; 12] = [
        Symbol::ZA,
        Symbol::XA,
        Symbol::ZpA,
        Symbol::XpA,
        Symbol::ZAZpA,
        Symbol::XAXpA,
        Symbol::ZB,
        Symbol::XB,
        Symbol::ZpB,
        Symbol::XpB,
        Symbol::ZBXpB,
        Symbol::XBZpB,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Symbol::ZA => "zA",
            Symbol::XA => "xA",
            Symbol::ZpA => "zA'",
            Symbol::XpA => "xA'",
            Symbol::ZAZpA => "zAzA'",
            Symbol::XAXpA => "xAxA'",
            Symbol::ZB => "zB",
            Symbol::XB => "xB",
            Symbol::ZpB => "zB'",
            Symbol::XpB => "xB'",
            Symbol::ZBXpB => "zBxB'",
            Symbol::XBZpB => "xBzB'",
        }
    }

    /// Position in [`Symbol::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn party(self) -> Party {
        if self.index() < 6 {
            Party::Alice
        } else {
            Party::Bob
        }
    }

    /// The context that reads this symbol out, and whether it is the first
    /// (0) or second (1) generator of that context.
    pub fn readout(self) -> (Setting, usize) {
        match self {
            Symbol::ZpA => (Setting::A, 0),
            Symbol::XA => (Setting::A, 1),
            Symbol::ZA => (Setting::B, 0),
            Symbol::XpA => (Setting::B, 1),
            Symbol::ZAZpA => (Setting::C, 0),
            Symbol::XAXpA => (Setting::C, 1),
            Symbol::ZB => (Setting::A, 0),
            Symbol::ZpB => (Setting::A, 1),
            Symbol::XB => (Setting::B, 0),
            Symbol::XpB => (Setting::B, 1),
            Symbol::ZBXpB => (Setting::C, 0),
            Symbol::XBZpB => (Setting::C, 1),
        }
    }

    /// The 16×16 operator this symbol names.
    pub fn operator(self) -> Observable {
        let party = self.party();
        let pol = SubsystemSlot::new(party, Dof::Polarization);
        let path = SubsystemSlot::new(party, Dof::Path);
        let lift = |m, slot| lift_local(&m, slot).expect("Pauli matrices are Hermitian");
        let pair = |a: Observable, b: Observable| {
            Observable::product([&a, &b]).expect("factors on distinct slots commute")
        };
        match self {
            Symbol::ZA | Symbol::ZB => lift(pauli::z(), pol),
            Symbol::XA | Symbol::XB => lift(pauli::x(), pol),
            Symbol::ZpA | Symbol::ZpB => lift(pauli::z(), path),
            Symbol::XpA | Symbol::XpB => lift(pauli::x(), path),
            Symbol::ZAZpA => pair(lift(pauli::z(), pol), lift(pauli::z(), path)),
            Symbol::XAXpA => pair(lift(pauli::x(), pol), lift(pauli::x(), path)),
            Symbol::ZBXpB => pair(lift(pauli::z(), pol), lift(pauli::x(), path)),
            Symbol::XBZpB => pair(lift(pauli::x(), pol), lift(pauli::z(), path)),
        }
    }

    pub fn from_name(name: &str) -> Option<Symbol> {
        Symbol::ALL.into_iter().find(|s| s.name() == name)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One party's operational situation: two commuting dichotomic generators
/// read out as two bits, and their product.
#[derive(Debug, Clone)]
pub struct MeasurementContext {
    pub party: Party,
    pub setting: Setting,
    pub symbols: [Symbol; 2],
    pub generator1: Observable,
    pub generator2: Observable,
    pub product: Observable,
    pub labels: [String; 3],
}

pub fn context_symbols(party: Party, setting: Setting) -> [Symbol; 2] {
    match (party, setting) {
        (Party::Alice, Setting::A) => [Symbol::ZpA, Symbol::XA],
        (Party::Alice, Setting::B) => [Symbol::ZA, Symbol::XpA],
        (Party::Alice, Setting::C) => [Symbol::ZAZpA, Symbol::XAXpA],
        (Party::Bob, Setting::A) => [Symbol::ZB, Symbol::ZpB],
        (Party::Bob, Setting::B) => [Symbol::XB, Symbol::XpB],
        (Party::Bob, Setting::C) => [Symbol::ZBXpB, Symbol::XBZpB],
    }
}

pub fn context(party: Party, setting: Setting) -> MeasurementContext {
    let symbols = context_symbols(party, setting);
    let generator1 = symbols[0].operator();
    let generator2 = symbols[1].operator();
    let product =
        Observable::product([&generator1, &generator2]).expect("context generators commute");
    let labels = [
        symbols[0].name().to_string(),
        symbols[1].name().to_string(),
        format!("{}·{}", symbols[0], symbols[1]),
    ];
    MeasurementContext {
        party,
        setting,
        symbols,
        generator1,
        generator2,
        product,
        labels,
    }
}

/// The nine perfect correlations, in the order the Bell operator lists them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CorrelationId {
    #[serde(rename = "ZZ")]
    ZZ,
    #[serde(rename = "Z'Z'")]
    ZpZp,
    #[serde(rename = "XX")]
    XX,
    #[serde(rename = "X'X'")]
    XpXp,
    #[serde(rename = "ZZ'-Z-Z'")]
    ZZpZZp,
    #[serde(rename = "XX'-X-X'")]
    XXpXXp,
    #[serde(rename = "Z-X'-ZX'")]
    ZXpZXp,
    #[serde(rename = "X-Z'-XZ'")]
    XZpXZp,
    #[serde(rename = "M")]
    M,
}

impl CorrelationId {
    pub const ALL: [CorrelationId; 9] = [
        CorrelationId::ZZ,
        CorrelationId::ZpZp,
        CorrelationId::XX,
        CorrelationId::XpXp,
        CorrelationId::ZZpZZp,
        CorrelationId::XXpXXp,
        CorrelationId::ZXpZXp,
        CorrelationId::XZpXZp,
        CorrelationId::M,
    ];

    /// Every correlation except `M`.
    pub const NON_M: [CorrelationId; 8] = [
        CorrelationId::ZZ,
        CorrelationId::ZpZp,
        CorrelationId::XX,
        CorrelationId::XpXp,
        CorrelationId::ZZpZZp,
        CorrelationId::XXpXXp,
        CorrelationId::ZXpZXp,
        CorrelationId::XZpXZp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CorrelationId::ZZ => "ZZ",
            CorrelationId::ZpZp => "Z'Z'",
            CorrelationId::XX => "XX",
            CorrelationId::XpXp => "X'X'",
            CorrelationId::ZZpZZp => "ZZ'-Z-Z'",
            CorrelationId::XXpXXp => "XX'-X-X'",
            CorrelationId::ZXpZXp => "Z-X'-ZX'",
            CorrelationId::XZpXZp => "X-Z'-XZ'",
            CorrelationId::M => "M",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_name(name: &str) -> Option<CorrelationId> {
        CorrelationId::ALL.into_iter().find(|c| c.name() == name)
    }

    /// Quantum eigenvalue on the ideal state. Also the weight of this term
    /// in the Bell operator.
    pub fn sign(self) -> i32 {
        match self {
            CorrelationId::ZZ
            | CorrelationId::ZpZp
            | CorrelationId::XX
            | CorrelationId::XpXp
            | CorrelationId::M => -1,
            _ => 1,
        }
    }

    /// Factors as written, each read out by exactly one party's context.
    pub fn factors(self) -> &'static [Symbol] {
        use Symbol::*;
        match self {
            CorrelationId::ZZ => &[ZA, ZB],
            CorrelationId::ZpZp => &[ZpA, ZpB],
            CorrelationId::XX => &[XA, XB],
            CorrelationId::XpXp => &[XpA, XpB],
            CorrelationId::ZZpZZp => &[ZAZpA, ZB, ZpB],
            CorrelationId::XXpXXp => &[XAXpA, XB, XpB],
            CorrelationId::ZXpZXp => &[ZA, XpA, ZBXpB],
            CorrelationId::XZpXZp => &[XA, ZpA, XBZpB],
            CorrelationId::M => &[ZAZpA, XAXpA, ZBXpB, XBZpB],
        }
    }

    /// Alice's and Bob's settings for measuring this correlation.
    pub fn context_pair(self) -> (Setting, Setting) {
        use Setting::*;
        match self {
            CorrelationId::ZZ => (B, A),
            CorrelationId::ZpZp => (A, A),
            CorrelationId::XX => (A, B),
            CorrelationId::XpXp => (B, B),
            CorrelationId::ZZpZZp => (C, A),
            CorrelationId::XXpXXp => (C, B),
            CorrelationId::ZXpZXp => (B, C),
            CorrelationId::XZpXZp => (A, C),
            CorrelationId::M => (C, C),
        }
    }
}

impl fmt::Display for CorrelationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Product of the correlation's factors, formed left to right.
pub fn correlation_operator(id: CorrelationId) -> Observable {
    let ops: Vec<Observable> = id.factors().iter().map(|s| s.operator()).collect();
    Observable::product(&ops).expect("correlation factors commute")
}

pub fn correlation_operators() -> [Observable; 9] {
    CorrelationId::ALL.map(correlation_operator)
}

/// Σ sign·C over the nine correlations.
pub fn bell_operator() -> Observable {
    let ops = correlation_operators();
    Observable::signed_sum(
        CorrelationId::ALL
            .iter()
            .zip(ops.iter())
            .map(|(id, o)| (id.sign(), o)),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenRelationRow {
    pub id: CorrelationId,
    pub value: f64,
    pub predicted_sign: i32,
    /// ‖C·ψ − sign·ψ‖
    pub eigen_residual: f64,
    pub pass: bool,
}

pub fn verify_eigenrelations(state: &StateVector) -> Result<Vec<EigenRelationRow>> {
    CorrelationId::ALL
        .iter()
        .map(|&id| {
            let op = correlation_operator(id);
            let value = expectation(&op, state)?;
            let sign = f64::from(id.sign());
            let residual =
                (state.apply(&op) - state.amplitudes() * crate::qstate::c(sign, 0.0)).norm();
            let pass = (value - sign).abs() < SPECTRAL_TOL && residual < SPECTRAL_TOL;
            Ok(EigenRelationRow {
                id,
                value,
                predicted_sign: id.sign(),
                eigen_residual: residual,
                pass,
            })
        })
        .collect()
}
