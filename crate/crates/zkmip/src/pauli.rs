//! Phased n-qubit Paulis in symplectic form.
//!
//! The operator is `i^phase` times the letter string, with Y stored as
//! x = z = 1. With this convention X*Z = -iY.
//!
//! Library indices are 0-based. Text labels such as `X1Z3` are 1-based.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gates::{self, Gate};
use crate::ring::Amp;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

impl Letter {
    pub fn bits(self) -> (bool, bool) {
        match self {
            Letter::I => (false, false),
            Letter::X => (true, false),
            Letter::Y => (true, true),
            Letter::Z => (false, true),
        }
    }

    pub fn from_bits(x: bool, z: bool) -> Letter {
        match (x, z) {
            (false, false) => Letter::I,
            (true, false) => Letter::X,
            (true, true) => Letter::Y,
            (false, true) => Letter::Z,
        }
    }

    pub fn from_char(c: char) -> Option<Letter> {
        match c {
            'I' => Some(Letter::I),
            'X' => Some(Letter::X),
            'Y' => Some(Letter::Y),
            'Z' => Some(Letter::Z),
            _ => None,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Letter::I => 'I',
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }

    /// Code used by the local gate tables: x + 2z.
    pub fn code(self) -> usize {
        let (x, z) = self.bits();
        x as usize + 2 * z as usize
    }

    pub fn from_code(c: usize) -> Letter {
        Letter::from_bits(c & 1 == 1, c & 2 == 2)
    }
}

const W: usize = 64;

fn words(n: usize) -> usize {
    n.div_ceil(W).max(1)
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Pauli {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    phase: u8,
}

/// Spec-facing name.
pub type PauliOperator = Pauli;

impl Pauli {
    pub fn identity(n: usize) -> Pauli {
        Pauli { n, x: vec![0; words(n)], z: vec![0; words(n)], phase: 0 }
    }

    pub fn single(n: usize, q: usize, l: Letter) -> Pauli {
        let mut p = Pauli::identity(n);
        p.set(q, l);
        p
    }

    pub fn from_letters(letters: &[Letter]) -> Pauli {
        let mut p = Pauli::identity(letters.len());
        for (q, &l) in letters.iter().enumerate() {
            p.set(q, l);
        }
        p
    }

    /// All-X or all-Z style operators.
    pub fn uniform(n: usize, l: Letter) -> Pauli {
        Pauli::from_letters(&vec![l; n])
    }

    pub fn from_sparse(n: usize, entries: &[(usize, Letter)]) -> Pauli {
        let mut p = Pauli::identity(n);
        for &(q, l) in entries {
            p.set(q, l);
        }
        p
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn phase(&self) -> u8 {
        self.phase
    }

    pub fn with_phase(mut self, phase: u8) -> Pauli {
        self.phase = phase & 3;
        self
    }

    pub fn times_i_pow(mut self, k: u8) -> Pauli {
        self.phase = (self.phase + k) & 3;
        self
    }

    pub fn negate(self) -> Pauli {
        self.times_i_pow(2)
    }

    pub fn x_bit(&self, q: usize) -> bool {
        self.x[q / W] >> (q % W) & 1 == 1
    }

    pub fn z_bit(&self, q: usize) -> bool {
        self.z[q / W] >> (q % W) & 1 == 1
    }

    pub fn letter(&self, q: usize) -> Letter {
        Letter::from_bits(self.x_bit(q), self.z_bit(q))
    }

    pub fn set(&mut self, q: usize, l: Letter) {
        assert!(q < self.n, "qubit {q} out of range for {}", self.n);
        let (xb, zb) = l.bits();
        let m = 1u64 << (q % W);
        if xb {
            self.x[q / W] |= m;
        } else {
            self.x[q / W] &= !m;
        }
        if zb {
            self.z[q / W] |= m;
        } else {
            self.z[q / W] &= !m;
        }
    }

    pub fn is_identity_letters(&self) -> bool {
        self.x.iter().all(|&w| w == 0) && self.z.iter().all(|&w| w == 0)
    }

    /// Letters only (phase dropped).
    pub fn unsigned(&self) -> Pauli {
        Pauli { phase: 0, ..self.clone() }
    }

    pub fn x_words(&self) -> &[u64] {
        &self.x
    }

    pub fn z_words(&self) -> &[u64] {
        &self.z
    }

    pub fn weight(&self) -> usize {
        self.x.iter().zip(&self.z).map(|(a, b)| (a | b).count_ones() as usize).sum()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.n).filter(|&q| self.x_bit(q) || self.z_bit(q)).collect()
    }

    fn check_dim(&self, o: &Pauli) -> Result<()> {
        if self.n != o.n {
            return Err(Error::DimensionMismatch(self.n, o.n));
        }
        Ok(())
    }

    fn y_count(x: &[u64], z: &[u64]) -> u32 {
        x.iter().zip(z).map(|(a, b)| (a & b).count_ones()).sum()
    }

    /// Group product computed from symplectic bits.
    pub fn mul(&self, o: &Pauli) -> Result<Pauli> {
        self.check_dim(o)?;
        Ok(self.mul_unchecked(o))
    }

    pub(crate) fn mul_unchecked(&self, o: &Pauli) -> Pauli {
        // i^{|x∧z|} X^x Z^z form on each side; Z^z1 X^x2 = (-1)^{z1.x2} X^x2 Z^z1
        let mut e = self.phase as u32 + o.phase as u32;
        e += Self::y_count(&self.x, &self.z) + Self::y_count(&o.x, &o.z);
        let swap: u32 = self.z.iter().zip(&o.x).map(|(a, b)| (a & b).count_ones()).sum();
        e += 2 * swap;
        let x: Vec<u64> = self.x.iter().zip(&o.x).map(|(a, b)| a ^ b).collect();
        let z: Vec<u64> = self.z.iter().zip(&o.z).map(|(a, b)| a ^ b).collect();
        e += 4 * 64 * x.len() as u32;
        e -= Self::y_count(&x, &z);
        Pauli { n: self.n, x, z, phase: (e % 4) as u8 }
    }

    pub fn commutes(&self, o: &Pauli) -> Result<bool> {
        self.check_dim(o)?;
        Ok(self.commutes_unchecked(o))
    }

    pub(crate) fn commutes_unchecked(&self, o: &Pauli) -> bool {
        let s: u32 = self
            .x
            .iter()
            .zip(&o.z)
            .zip(self.z.iter().zip(&o.x))
            .map(|((a, b), (c, d))| ((a & b) ^ (c & d)).count_ones())
            .sum();
        s % 2 == 0
    }

    /// Places `self` on the 0-based qubits `q` of an `n_total`-qubit register.
    pub fn embed(&self, q: &[usize], n_total: usize) -> Result<Pauli> {
        if q.len() != self.n {
            return Err(Error::DimensionMismatch(q.len(), self.n));
        }
        let mut seen = vec![false; n_total];
        let mut out = Pauli::identity(n_total);
        for (i, &t) in q.iter().enumerate() {
            if t >= n_total {
                return Err(Error::IndexOutOfRange(t, n_total));
            }
            if seen[t] {
                return Err(Error::RepeatedIndex(t));
            }
            seen[t] = true;
            out.set(t, self.letter(i));
        }
        out.phase = self.phase;
        Ok(out)
    }

    /// Letters on the listed qubits, as a |q|-qubit Pauli with phase 0.
    pub fn restrict(&self, q: &[usize]) -> Pauli {
        let mut out = Pauli::identity(q.len());
        for (i, &t) in q.iter().enumerate() {
            out.set(i, self.letter(t));
        }
        out
    }

    /// Adjoint: i^p L has adjoint i^{-p} L.
    pub fn adjoint(&self) -> Pauli {
        Pauli { phase: (4 - self.phase) & 3, ..self.clone() }
    }

    /// Hermitian iff the phase is real.
    pub fn is_hermitian(&self) -> bool {
        self.phase % 2 == 0
    }

    /// U† P U for a Clifford gate, from generator images.
    pub fn conjugate_by_clifford(&self, g: &Gate) -> Result<Pauli> {
        let qs = g.qubits();
        for &q in &qs {
            if q >= self.n {
                return Err(Error::IndexOutOfRange(q, self.n));
            }
        }
        if !g.is_clifford() {
            return Err(Error::UnsupportedGate(g.name().to_string()));
        }
        if qs.is_empty() {
            return Ok(self.clone());
        }
        let local = self.restrict(&qs);
        let (ph, img) = gates::clifford_local_image(g, &local);
        let mut out = self.clone();
        for (i, &q) in qs.iter().enumerate() {
            out.set(q, img.letter(i));
        }
        out.phase = (self.phase + ph) & 3;
        Ok(out)
    }

    pub fn label(&self) -> PhaseFreePauliLabel {
        PhaseFreePauliLabel {
            support: (0..self.n).filter_map(|q| {
                let l = self.letter(q);
                (l != Letter::I).then_some((q, l))
            }).collect(),
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = ["", "+i", "-", "-i"][self.phase as usize];
        write!(f, "{prefix}")?;
        for q in 0..self.n {
            write!(f, "{}", self.letter(q).to_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for Pauli {
    type Err = Error;
    fn from_str(s: &str) -> Result<Pauli> {
        let s = s.trim();
        let (phase, rest) = if let Some(r) = s.strip_prefix("+i") {
            (1, r)
        } else if let Some(r) = s.strip_prefix("-i") {
            (3, r)
        } else if let Some(r) = s.strip_prefix('+') {
            (0, r)
        } else if let Some(r) = s.strip_prefix('-') {
            (2, r)
        } else if let Some(r) = s.strip_prefix('i') {
            (1, r)
        } else {
            (0, s)
        };
        if rest.is_empty() {
            return Err(Error::Format(format!("empty Pauli string '{s}'")));
        }
        let letters: Option<Vec<Letter>> = rest.chars().map(Letter::from_char).collect();
        let letters = letters.ok_or_else(|| Error::Format(format!("bad Pauli string '{s}'")))?;
        Ok(Pauli::from_letters(&letters).with_phase(phase))
    }
}

/// Support-only label such as `X1Z3` (1-based indices).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PhaseFreePauliLabel {
    pub support: Vec<(usize, Letter)>,
}

impl PhaseFreePauliLabel {
    pub fn to_pauli(&self, n: usize) -> Result<Pauli> {
        let mut p = Pauli::identity(n);
        for &(q, l) in &self.support {
            if q >= n {
                return Err(Error::IndexOutOfRange(q, n));
            }
            p.set(q, l);
        }
        Ok(p)
    }

    /// Parses `X1Z3`, also accepting explicit identities like `I7Z5`.
    pub fn parse(s: &str) -> Result<PhaseFreePauliLabel> {
        let mut support: Vec<(usize, Letter)> = Vec::new();
        let chars: Vec<char> = s.trim().chars().collect();
        let mut i = 0;
        if chars.is_empty() {
            return Err(Error::Format("empty label".into()));
        }
        while i < chars.len() {
            let l = Letter::from_char(chars[i])
                .ok_or_else(|| Error::Format(format!("bad letter in '{s}'")))?;
            i += 1;
            let st = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if st == i {
                return Err(Error::Format(format!("missing index in '{s}'")));
            }
            let idx: usize = chars[st..i].iter().collect::<String>().parse().unwrap();
            if idx == 0 {
                return Err(Error::Format(format!("indices are 1-based in '{s}'")));
            }
            if l != Letter::I {
                if support.iter().any(|&(q, _)| q == idx - 1) {
                    return Err(Error::RepeatedIndex(idx));
                }
                support.push((idx - 1, l));
            }
        }
        support.sort();
        Ok(PhaseFreePauliLabel { support })
    }
}

impl fmt::Display for PhaseFreePauliLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.support.is_empty() {
            return write!(f, "I");
        }
        for &(q, l) in &self.support {
            write!(f, "{}{}", l.to_char(), q + 1)?;
        }
        Ok(())
    }
}

pub fn pauli_mul(a: &Pauli, b: &Pauli) -> Result<Pauli> {
    a.mul(b)
}

pub fn commutes(a: &Pauli, b: &Pauli) -> Result<bool> {
    a.commutes(b)
}

pub fn weight(a: &Pauli) -> usize {
    a.weight()
}

pub fn embed(a: &Pauli, q: &[usize], n_total: usize) -> Result<Pauli> {
    a.embed(q, n_total)
}

pub fn conjugate_by_clifford(a: &Pauli, g: &Gate) -> Result<Pauli> {
    a.conjugate_by_clifford(g)
}

/// Linear combination of Paulis with exact coefficients. Keys carry phase 0.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PauliSum {
    pub terms: HashMap<Pauli, Amp>,
}

impl PauliSum {
    pub fn from_pauli(p: &Pauli) -> PauliSum {
        let mut s = PauliSum::default();
        s.add(Amp::i_pow(p.phase()), p.unsigned());
        s
    }

    pub fn add(&mut self, c: Amp, p: Pauli) {
        if c.is_zero() {
            return;
        }
        let (c, key) = (c * Amp::i_pow(p.phase()), p.unsigned());
        let e = self.terms.entry(key).or_insert(Amp::ZERO);
        *e += c;
        if e.is_zero() {
            let key = p.unsigned();
            self.terms.remove(&key);
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Replaces each term P by U† P U.
    pub fn conjugate(&self, g: &Gate) -> PauliSum {
        let mut out = PauliSum::default();
        let qs = g.qubits();
        for (p, &c) in &self.terms {
            if qs.iter().all(|&q| p.letter(q) == Letter::I) {
                out.add(c, p.clone());
            } else if g.is_clifford() {
                out.add(c, p.conjugate_by_clifford(g).expect("gate in range"));
            } else {
                let local = p.restrict(&qs);
                for (cq, img) in gates::nonclifford_local_image(g, &local) {
                    let mut q2 = p.clone();
                    for (i, &q) in qs.iter().enumerate() {
                        q2.set(q, img.letter(i));
                    }
                    out.add(c * cq, q2);
                }
            }
        }
        out
    }

    /// Left-multiplies every term by `p`.
    pub fn left_mul(&self, p: &Pauli) -> PauliSum {
        let mut out = PauliSum::default();
        for (q, &c) in &self.terms {
            out.add(c, p.mul_unchecked(q));
        }
        out
    }

    /// Product of two sums.
    pub fn mul(&self, o: &PauliSum) -> PauliSum {
        let mut out = PauliSum::default();
        for (p, &c) in &self.terms {
            for (q, &d) in &o.terms {
                out.add(c * d, p.mul_unchecked(q));
            }
        }
        out
    }

    /// Deterministic term order, for reproducible iteration.
    pub fn sorted_terms(&self) -> Vec<(Pauli, Amp)> {
        let mut v: Vec<(Pauli, Amp)> = self.terms.iter().map(|(p, c)| (p.clone(), *c)).collect();
        v.sort_by_key(|a| a.0.to_string());
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use proptest::prelude::*;

    fn p(s: &str) -> Pauli {
        s.parse().unwrap()
    }

    fn letter_strategy() -> impl Strategy<Value = Letter> {
        prop_oneof![Just(Letter::I), Just(Letter::X), Just(Letter::Y), Just(Letter::Z)]
    }

    fn pauli_strategy(n: usize) -> impl Strategy<Value = Pauli> {
        (proptest::collection::vec(letter_strategy(), n), 0u8..4)
            .prop_map(|(l, ph)| Pauli::from_letters(&l).with_phase(ph))
    }

    #[test]
    fn x_times_z_is_minus_i_y() {
        let r = p("X").mul(&p("Z")).unwrap();
        assert_eq!(r, p("-iY"));
        let m = Matrix::pauli(&p("X")).mul(&Matrix::pauli(&p("Z")));
        assert_eq!(m, Matrix::pauli(&r));
    }

    #[test]
    fn two_qubit_product_matches_matrix() {
        let r = p("XZ").mul(&p("ZZ")).unwrap();
        assert_eq!(r, p("-iYI"));
        assert_eq!(Matrix::pauli(&p("XZ")).mul(&Matrix::pauli(&p("ZZ"))), Matrix::pauli(&r));
    }

    #[test]
    fn commutation_examples() {
        assert!(p("X").commutes(&p("X")).unwrap());
        assert!(!p("X").commutes(&p("Z")).unwrap());
        assert!(p("XXXX").commutes(&p("ZIIZ")).unwrap());
        assert!(p("X").commutes(&p("XX")).is_err());
    }

    #[test]
    fn weights() {
        assert_eq!(Pauli::identity(7).weight(), 0);
        assert_eq!(p("XIIX").weight(), 2);
        assert_eq!(p("IIIXXXX").weight(), 4);
    }

    #[test]
    fn embed_places_letters() {
        assert_eq!(p("XZ").embed(&[2, 3], 6).unwrap(), p("IIXZII"));
        assert_eq!(Pauli::identity(2).embed(&[0, 5], 6).unwrap(), Pauli::identity(6));
        assert_eq!(p("XZ").embed(&[2, 2], 6), Err(Error::RepeatedIndex(2)));
        assert_eq!(p("XZ").embed(&[2, 6], 6), Err(Error::IndexOutOfRange(6, 6)));
    }

    #[test]
    fn embed_preserves_weight_exhaustively() {
        for n in 1..=4usize {
            for code in 0..4usize.pow(n as u32) {
                let letters: Vec<Letter> =
                    (0..n).map(|i| Letter::from_code(code >> (2 * i) & 3)).collect();
                let a = Pauli::from_letters(&letters);
                let q: Vec<usize> = (0..n).map(|i| 2 * i + 1).collect();
                assert_eq!(a.embed(&q, 2 * n + 1).unwrap().weight(), a.weight());
            }
        }
    }

    #[test]
    fn clifford_examples() {
        assert_eq!(p("X").conjugate_by_clifford(&Gate::H(0)).unwrap(), p("Z"));
        assert_eq!(p("XI").conjugate_by_clifford(&Gate::Cnot(0, 1)).unwrap(), p("XX"));
        assert_eq!(p("IZ").conjugate_by_clifford(&Gate::Cnot(0, 1)).unwrap(), p("ZZ"));
        assert!(p("XI").conjugate_by_clifford(&Gate::Toffoli(0, 1, 0)).is_err());
        assert!(p("XI").conjugate_by_clifford(&Gate::Ch(0, 1)).is_err());
    }

    #[test]
    fn text_round_trip() {
        for s in ["-iXZIY", "+iZ", "-YY", "XIZ", "-iI"] {
            assert_eq!(p(s).to_string(), s);
        }
        assert_eq!(p("+XZ").to_string(), "XZ");
        assert!("XQ".parse::<Pauli>().is_err());
    }

    #[test]
    fn label_round_trip() {
        let l = PhaseFreePauliLabel::parse("I7Z5").unwrap();
        assert_eq!(l.to_string(), "Z5");
        let q = PhaseFreePauliLabel::parse("X1Z3").unwrap().to_pauli(4).unwrap();
        assert_eq!(q, p("XIZI"));
    }

    #[test]
    fn clifford_conjugation_matches_dense_for_all_gates() {
        let gates = [
            Gate::H(1),
            Gate::S(0),
            Gate::X(2),
            Gate::Z(1),
            Gate::Cnot(2, 0),
            Gate::Cnot(0, 1),
            Gate::Cz(1, 2),
        ];
        for g in gates {
            let u = Matrix::gate(&g, 3);
            for code in 0..64usize {
                let letters: Vec<Letter> =
                    (0..3).map(|i| Letter::from_code(code >> (2 * i) & 3)).collect();
                let a = Pauli::from_letters(&letters);
                let want = u.adjoint().mul(&Matrix::pauli(&a)).mul(&u);
                let got = a.conjugate_by_clifford(&g).unwrap();
                assert_eq!(Matrix::pauli(&got), want, "{g:?} on {a}");
            }
        }
    }

    #[test]
    fn nonclifford_sum_matches_dense() {
        for g in [Gate::Toffoli(0, 2, 1), Gate::Ccz(0, 1, 2), Gate::T(1), Gate::Ch(2, 0)] {
            let u = Matrix::gate(&g, 3);
            for code in 0..64usize {
                let letters: Vec<Letter> =
                    (0..3).map(|i| Letter::from_code(code >> (2 * i) & 3)).collect();
                let a = Pauli::from_letters(&letters);
                let want = u.adjoint().mul(&Matrix::pauli(&a)).mul(&u);
                let s = PauliSum::from_pauli(&a).conjugate(&g);
                let mut got = Matrix::zeros(8);
                for (q, c) in s.sorted_terms() {
                    got = got.add(&Matrix::pauli(&q).scale(c));
                }
                assert_eq!(got, want, "{g:?} on {a}");
            }
        }
    }

    proptest! {
        #[test]
        fn product_matches_matrix(a in pauli_strategy(3), b in pauli_strategy(3)) {
            let r = a.mul(&b).unwrap();
            prop_assert_eq!(Matrix::pauli(&r), Matrix::pauli(&a).mul(&Matrix::pauli(&b)));
        }

        #[test]
        fn product_is_associative(a in pauli_strategy(6), b in pauli_strategy(6), c in pauli_strategy(6)) {
            let l = a.mul(&b).unwrap().mul(&c).unwrap();
            let r = a.mul(&b.mul(&c).unwrap()).unwrap();
            prop_assert_eq!(l, r);
        }

        #[test]
        fn commutation_matches_matrix(a in pauli_strategy(3), b in pauli_strategy(3)) {
            let ab = Matrix::pauli(&a).mul(&Matrix::pauli(&b));
            let ba = Matrix::pauli(&b).mul(&Matrix::pauli(&a));
            prop_assert_eq!(a.commutes(&b).unwrap(), ab == ba);
        }

        #[test]
        fn embed_is_homomorphism(a in pauli_strategy(3), b in pauli_strategy(3)) {
            let q = [4, 0, 2];
            let lhs = a.mul(&b).unwrap().embed(&q, 6).unwrap();
            let rhs = a.embed(&q, 6).unwrap().mul(&b.embed(&q, 6).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn wide_product_phase_is_consistent(a in pauli_strategy(70), b in pauli_strategy(70)) {
            // (ab)(ab)^† = I for any Paulis
            let ab = a.mul(&b).unwrap();
            prop_assert_eq!(ab.mul(&ab.adjoint()).unwrap(), Pauli::identity(70));
        }
    }
}
