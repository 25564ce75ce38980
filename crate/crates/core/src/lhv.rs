//! Deterministic local-realistic models.
//!
//! A model assigns a fixed ±1 value to each of the twelve local symbols;
//! product symbols such as `zAzA'` are independent of their factors. All
//! arithmetic here is over integers.

use rayon::prelude::*;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::observables::{CorrelationId, Symbol};

pub const SYMBOL_COUNT: usize = 12;
pub const ASSIGNMENT_COUNT: usize = 1 << SYMBOL_COUNT;

/// ±1 values for the twelve symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LerAssignment {
    values: [i8; SYMBOL_COUNT],
}

impl LerAssignment {
    /// The `index`-th assignment in lexicographic order over the symbol
    /// table, with +1 before −1.
    pub fn from_index(index: usize) -> Self {
        assert!(index < ASSIGNMENT_COUNT);
        let values = std::array::from_fn(|k| {
            if (index >> (SYMBOL_COUNT - 1 - k)) & 1 == 0 {
                1
            } else {
                -1
            }
        });
        LerAssignment { values }
    }

    pub fn from_values(values: [i8; SYMBOL_COUNT]) -> Option<Self> {
        values
            .iter()
            .all(|v| *v == 1 || *v == -1)
            .then_some(LerAssignment { values })
    }

    pub fn index(&self) -> usize {
        self.values
            .iter()
            .fold(0, |acc, &v| (acc << 1) | usize::from(v < 0))
    }

    pub fn get(&self, symbol: Symbol) -> i8 {
        self.values[symbol.index()]
    }

    pub fn values(&self) -> &[i8; SYMBOL_COUNT] {
        &self.values
    }

    pub fn with(mut self, symbol: Symbol, value: i8) -> Self {
        assert!(value == 1 || value == -1);
        self.values[symbol.index()] = value;
        self
    }

    pub fn product(&self, symbols: &[Symbol]) -> i8 {
        symbols.iter().map(|&s| self.get(s)).product()
    }
}

impl Serialize for LerAssignment {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(SYMBOL_COUNT))?;
        for s in Symbol::ALL {
            map.serialize_entry(s.name(), &self.get(s))?;
        }
        map.end()
    }
}

pub fn enumerate_assignments() -> impl Iterator<Item = LerAssignment> {
    (0..ASSIGNMENT_COUNT).map(LerAssignment::from_index)
}

/// m(s₁)·m(s₂)⋯ = sign
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Constraint {
    pub symbols: Vec<Symbol>,
    pub sign: i8,
}

impl Constraint {
    pub fn holds(&self, a: &LerAssignment) -> bool {
        a.product(&self.symbols) == self.sign
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConstraintSystem {
    pub constraints: Vec<Constraint>,
}

impl ConstraintSystem {
    /// One constraint per perfect correlation, in correlation order: each
    /// product of elements of reality must equal the quantum eigenvalue.
    pub fn standard() -> Self {
        ConstraintSystem {
            constraints: CorrelationId::ALL
                .iter()
                .map(|id| Constraint {
                    symbols: id.factors().to_vec(),
                    sign: id.sign() as i8,
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn with_sign_flipped(mut self, k: usize) -> Self {
        self.constraints[k].sign = -self.constraints[k].sign;
        self
    }

    pub fn without(mut self, k: usize) -> Self {
        self.constraints.remove(k);
        self
    }

    pub fn check(&self, a: &LerAssignment) -> ConstraintReport {
        let satisfied: Vec<bool> = self.constraints.iter().map(|c| c.holds(a)).collect();
        let satisfied_count = satisfied.iter().filter(|&&b| b).count();
        ConstraintReport {
            satisfied,
            satisfied_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConstraintReport {
    pub satisfied: Vec<bool>,
    pub satisfied_count: usize,
}

/// Checks an assignment against the nine standard constraints.
pub fn check_constraints(a: &LerAssignment) -> ConstraintReport {
    ConstraintSystem::standard().check(a)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AvnAudit {
    pub constraint_count: usize,
    /// Assignments satisfying every constraint.
    pub all_satisfied_count: usize,
    pub max_satisfied: usize,
    pub assignments_at_max: usize,
    /// `histogram[k]` = number of assignments satisfying exactly k constraints.
    pub histogram: Vec<usize>,
}

/// Exhaustive audit of `system` over all 4096 assignments.
pub fn audit(system: &ConstraintSystem) -> AvnAudit {
    let n = system.len();
    let histogram = (0..ASSIGNMENT_COUNT)
        .into_par_iter()
        .fold(
            || vec![0usize; n + 1],
            |mut h, idx| {
                h[system
                    .check(&LerAssignment::from_index(idx))
                    .satisfied_count] += 1;
                h
            },
        )
        .reduce(
            || vec![0usize; n + 1],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let max_satisfied = histogram.iter().rposition(|&c| c > 0).unwrap_or(0);
    AvnAudit {
        constraint_count: n,
        all_satisfied_count: histogram[n],
        max_satisfied,
        assignments_at_max: histogram[max_satisfied],
        histogram,
    }
}

pub fn avn_audit() -> AvnAudit {
    audit(&ConstraintSystem::standard())
}

/// Local-realistic value of the Bell expression, written out term by term.
pub fn bell_quantity(a: &LerAssignment) -> i32 {
    use Symbol::*;
    let m = |s| i32::from(a.get(s));
    -m(ZA) * m(ZB) - m(ZpA) * m(ZpB) - m(XA) * m(XB) - m(XpA) * m(XpB)
        + m(ZAZpA) * m(ZB) * m(ZpB)
        + m(XAXpA) * m(XB) * m(XpB)
        + m(ZA) * m(XpA) * m(ZBXpB)
        + m(XA) * m(ZpA) * m(XBZpB)
        - m(ZAZpA) * m(XAXpA) * m(ZBXpB) * m(XBZpB)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LrBound {
    pub max_value: i32,
    pub min_value: i32,
    pub argmax_assignments: Vec<LerAssignment>,
}

pub fn lr_bound() -> LrBound {
    let values: Vec<i32> = enumerate_assignments().map(|a| bell_quantity(&a)).collect();
    let max_value = *values.iter().max().expect("non-empty");
    let min_value = *values.iter().min().expect("non-empty");
    let argmax_assignments = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v == max_value)
        .map(|(i, _)| LerAssignment::from_index(i))
        .collect();
    LrBound {
        max_value,
        min_value,
        argmax_assignments,
    }
}

/// True when some non-empty subset of the constraints has every symbol
/// occurring an even number of times while its signs multiply to −1: the
/// left-hand sides then multiply to +1 identically, so no assignment can
/// satisfy the whole system.
pub fn parity_witness_for(system: &ConstraintSystem) -> bool {
    let n = system.len();
    assert!(n < usize::BITS as usize);
    let masks: Vec<u16> = system
        .constraints
        .iter()
        .map(|c| c.symbols.iter().fold(0u16, |m, s| m ^ (1 << s.index())))
        .collect();
    (1usize..1 << n).any(|subset| {
        let (mask, sign) = (0..n)
            .filter(|k| subset >> k & 1 == 1)
            .fold((0u16, 1i8), |(m, s), k| {
                (m ^ masks[k], s * system.constraints[k].sign)
            });
        mask == 0 && sign == -1
    })
}

pub fn parity_witness() -> bool {
    parity_witness_for(&ConstraintSystem::standard())
}

/// Index of an M-context outcome: 8·b(zAzA') + 4·b(xAxA') + 2·b(zBxB') + b(xBzB'),
/// with b(+1) = 0 and b(−1) = 1.
pub fn m_outcome_index(a: &LerAssignment) -> usize {
    use Symbol::*;
    [ZAZpA, XAXpA, ZBXpB, XBZpB]
        .iter()
        .fold(0, |acc, &s| (acc << 1) | usize::from(a.get(s) < 0))
}

/// Histogram of M-context outcomes predicted by the local models that
/// reproduce the eight non-M perfect correlations.
pub fn lr_m_histogram() -> [usize; 16] {
    let system = ConstraintSystem::standard();
    let mut hist = [0usize; 16];
    for a in enumerate_assignments() {
        let r = system.check(&a);
        if r.satisfied[..8].iter().all(|&b| b) {
            hist[m_outcome_index(&a)] += 1;
        }
    }
    hist
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstraintRow {
    pub index: usize,
    pub correlation: CorrelationId,
    pub symbols: Vec<Symbol>,
    pub required_sign: i8,
}

/// Machine-checked contradiction between the perfect correlations and
/// local realism.
#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub constraints: Vec<ConstraintRow>,
    pub assignment_count: usize,
    pub audit: AvnAudit,
    pub bound: LrBound,
    pub parity_witness: bool,
    /// Bell quantity = 2·satisfied − 9 for every assignment.
    pub bell_identity_holds: bool,
    pub lr_m_histogram: [usize; 16],
}

impl Certificate {
    pub fn build() -> Self {
        let system = ConstraintSystem::standard();
        let constraints = system
            .constraints
            .iter()
            .zip(CorrelationId::ALL)
            .enumerate()
            .map(|(k, (c, id))| ConstraintRow {
                index: k + 1,
                correlation: id,
                symbols: c.symbols.clone(),
                required_sign: c.sign,
            })
            .collect();
        let n = system.len() as i32;
        let bell_identity_holds = enumerate_assignments()
            .all(|a| bell_quantity(&a) == 2 * system.check(&a).satisfied_count as i32 - n);
        Certificate {
            constraints,
            assignment_count: ASSIGNMENT_COUNT,
            audit: audit(&system),
            bound: lr_bound(),
            parity_witness: parity_witness_for(&system),
            bell_identity_holds,
            lr_m_histogram: lr_m_histogram(),
        }
    }

    /// All checks that make the certificate valid.
    pub fn is_valid(&self) -> bool {
        self.audit.all_satisfied_count == 0
            && self.audit.max_satisfied == 8
            && self.bound.max_value == 7
            && self.parity_witness
            && self.bell_identity_holds
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;
    use Symbol::*;

    /// Constraint evaluation written independently of `ConstraintSystem`.
    fn oracle_count(a: &LerAssignment) -> usize {
        let m = |s| a.get(s);
        [
            m(ZA) * m(ZB) == -1,
            m(ZpA) * m(ZpB) == -1,
            m(XA) * m(XB) == -1,
            m(XpA) * m(XpB) == -1,
            m(ZAZpA) * m(ZB) * m(ZpB) == 1,
            m(XAXpA) * m(XB) * m(XpB) == 1,
            m(ZA) * m(XpA) * m(ZBXpB) == 1,
            m(XA) * m(ZpA) * m(XBZpB) == 1,
            m(ZAZpA) * m(XAXpA) * m(ZBXpB) * m(XBZpB) == -1,
        ]
        .iter()
        .filter(|&&b| b)
        .count()
    }

    #[test]
    fn enumeration_is_complete_and_ordered() {
        let all: Vec<_> = enumerate_assignments().collect();
        assert_eq!(all.len(), 4096);
        assert!(all[0].values().iter().all(|&v| v == 1));
        assert!(all[4095].values().iter().all(|&v| v == -1));
        let set: HashSet<_> = all.iter().collect();
        assert_eq!(set.len(), 4096);
        for (i, a) in all.iter().enumerate() {
            assert_eq!(a.index(), i);
        }
        // lexicographic: the last symbol varies fastest
        assert_eq!(all[1].get(XBZpB), -1);
        assert_eq!(all[1].get(ZA), 1);
    }

    #[test]
    fn all_plus_satisfies_four() {
        let r = check_constraints(&LerAssignment::from_index(0));
        assert_eq!(
            r.satisfied,
            vec![false, false, false, false, true, true, true, true, false]
        );
        assert_eq!(r.satisfied_count, 4);
    }

    #[test]
    fn anti_correlated_assignment() {
        let a = LerAssignment::from_values([1, 1, 1, 1, 1, 1, -1, -1, -1, -1, -1, -1]).unwrap();
        assert_eq!(a.get(ZB), -1);
        assert_eq!(a.get(XBZpB), -1);
        let r = check_constraints(&a);
        assert!(r.satisfied[..4].iter().all(|&b| b));
        // constraints 7, 8 and 9 fail: m(zBxB') = m(xBzB') = −1
        assert_eq!(r.satisfied_count, oracle_count(&a));
        assert_eq!(r.satisfied_count, 6);
        // flipping Bob's two product symbols restores 7 and 8
        let b = a.with(ZBXpB, 1).with(XBZpB, 1);
        assert_eq!(check_constraints(&b).satisfied_count, 8);
        assert!(!check_constraints(&b).satisfied[8]);
    }

    #[test]
    fn constraint_report_matches_oracle_everywhere() {
        for a in enumerate_assignments() {
            let r = check_constraints(&a);
            assert_eq!(r.satisfied_count, oracle_count(&a));
            assert!(r.satisfied_count <= 8);
        }
    }

    #[test]
    fn audit_of_standard_system() {
        let audit = avn_audit();
        assert_eq!(audit.all_satisfied_count, 0);
        assert_eq!(audit.max_satisfied, 8);
        // frozen from the exhaustive enumeration: 9 choices of the violated
        // constraint × 2⁴ solutions of the remaining rank-8 system
        assert_eq!(audit.assignments_at_max, 144);
        assert_eq!(audit.histogram.iter().sum::<usize>(), 4096);
        assert_eq!(
            audit.histogram,
            vec![16, 0, 576, 0, 2016, 0, 1344, 0, 144, 0]
        );
    }

    #[test]
    fn bell_bound_and_extremes() {
        let bound = lr_bound();
        assert_eq!(bound.max_value, 7);
        assert_eq!(bound.argmax_assignments.len(), 144);
        for a in &bound.argmax_assignments {
            assert_eq!(check_constraints(a).satisfied_count, 8);
        }
        // every constraint can be violated at once, so the minimum is −9
        assert_eq!(bound.min_value, -9);
        let minimum = enumerate_assignments()
            .map(|a| bell_quantity(&a))
            .min()
            .unwrap();
        assert_eq!(minimum, bound.min_value);
    }

    #[test]
    fn flipping_bob_negates_single_bob_terms() {
        // terms with exactly one Bob factor change sign under a global flip of
        // Bob's symbols; terms 5, 6 carry two Bob factors and do not
        let flip = |a: &LerAssignment| {
            Symbol::ALL
                .iter()
                .filter(|s| s.party() == crate::qstate::Party::Bob)
                .fold(*a, |acc, &s| acc.with(s, -acc.get(s)))
        };
        for a in enumerate_assignments().step_by(37) {
            let b = flip(&a);
            let sys = ConstraintSystem::standard();
            let (ra, rb) = (sys.check(&a), sys.check(&b));
            for k in [0, 1, 2, 3, 6, 7] {
                assert_ne!(ra.satisfied[k], rb.satisfied[k]);
            }
            for k in [4, 5, 8] {
                assert_eq!(ra.satisfied[k], rb.satisfied[k]);
            }
        }
    }

    #[test]
    fn bell_identity_for_every_assignment() {
        for a in enumerate_assignments() {
            assert_eq!(
                bell_quantity(&a),
                2 * check_constraints(&a).satisfied_count as i32 - 9
            );
        }
    }

    #[test]
    fn parity_witness_standard_and_modified() {
        assert!(parity_witness());
        let flipped = ConstraintSystem::standard().with_sign_flipped(8);
        assert!(!parity_witness_for(&flipped));
        let modified = audit(&flipped);
        assert!(modified.all_satisfied_count > 0);
        assert_eq!(modified.max_satisfied, 9);
        for k in 0..9 {
            let reduced = ConstraintSystem::standard().without(k);
            assert!(!parity_witness_for(&reduced), "without {k}");
            let result = audit(&reduced);
            assert_eq!(result.max_satisfied, 8);
            assert!(result.all_satisfied_count > 0);
        }
    }

    #[test]
    fn every_symbol_appears_twice() {
        let sys = ConstraintSystem::standard();
        for s in Symbol::ALL {
            let n: usize = sys
                .constraints
                .iter()
                .map(|c| c.symbols.iter().filter(|&&t| t == s).count())
                .sum();
            assert_eq!(n, 2, "{s}");
        }
    }

    #[test]
    fn lr_m_panel_has_even_parity_only() {
        let hist = lr_m_histogram();
        assert_eq!(hist.iter().sum::<usize>(), 16);
        for (idx, &count) in hist.iter().enumerate() {
            if idx.count_ones() % 2 == 1 {
                assert_eq!(count, 0, "odd outcome {idx:04b}");
            }
        }
    }

    #[test]
    fn certificate_is_valid_and_serializes() {
        let cert = Certificate::build();
        assert!(cert.is_valid());
        let json = serde_json::to_value(&cert).unwrap();
        assert_eq!(json["bound"]["max_value"], 7);
        assert_eq!(json["constraints"][0]["symbols"][0], "zA");
        assert_eq!(
            json["bound"]["argmax_assignments"][0]["zA"]
                .as_i64()
                .unwrap()
                .abs(),
            1
        );
    }
}
