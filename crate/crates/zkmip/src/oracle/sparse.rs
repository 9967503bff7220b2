//! Sparse exact states: a map from basis string to amplitude.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::gates::Gate;
use crate::matrix::Matrix;
use crate::pauli::Pauli;
use crate::ring::Amp;

pub const DEFAULT_SPARSE_CAP: usize = 1 << 22;
pub const MAX_SPARSE_QUBITS: usize = 128;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseState {
    n: usize,
    map: HashMap<u128, Amp>,
    cap: usize,
}

#[inline]
fn b(s: u128, q: usize) -> bool {
    s >> q & 1 == 1
}

impl SparseState {
    pub fn basis(n: usize, s: u128) -> Result<SparseState> {
        if n > MAX_SPARSE_QUBITS {
            return Err(Error::CapacityExceeded(format!("{n} qubits in a sparse state")));
        }
        let mut map = HashMap::new();
        map.insert(s, Amp::ONE);
        Ok(SparseState { n, map, cap: DEFAULT_SPARSE_CAP })
    }

    pub fn zero(n: usize) -> Result<SparseState> {
        Self::basis(n, 0)
    }

    pub fn from_map(n: usize, map: HashMap<u128, Amp>) -> SparseState {
        SparseState { n, map, cap: DEFAULT_SPARSE_CAP }
    }

    pub fn with_cap(mut self, cap: usize) -> SparseState {
        self.cap = cap;
        self
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn support_size(&self) -> usize {
        self.map.len()
    }

    pub fn amp(&self, s: u128) -> Amp {
        self.map.get(&s).copied().unwrap_or(Amp::ZERO)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&u128, &Amp)> {
        self.map.iter()
    }

    pub fn apply(&mut self, g: &Gate) -> Result<()> {
        for q in g.qubits() {
            if q >= self.n {
                return Err(Error::IndexOutOfRange(q, self.n));
            }
        }
        match *g {
            Gate::Id => {}
            Gate::H(q) => self.hadamard(q)?,
            Gate::Ch(c, t) => {
                let mut out: HashMap<u128, Amp> = HashMap::with_capacity(self.map.len() * 2);
                let r = Amp::inv_sqrt2_pow(1);
                for (&s, &a) in &self.map {
                    if !b(s, c) {
                        *out.entry(s).or_insert(Amp::ZERO) += a;
                        continue;
                    }
                    let s0 = s & !(1u128 << t);
                    let s1 = s | (1u128 << t);
                    *out.entry(s0).or_insert(Amp::ZERO) += a * r;
                    *out.entry(s1).or_insert(Amp::ZERO) += if b(s, t) { -(a * r) } else { a * r };
                }
                out.retain(|_, a| !a.is_zero());
                self.set_checked(out)?;
            }
            _ => {
                let mut out: HashMap<u128, Amp> = HashMap::with_capacity(self.map.len());
                let qs = g.qubits();
                let mut bits = vec![false; self.n];
                for (&s, &a) in &self.map {
                    for &q in &qs {
                        bits[q] = b(s, q);
                    }
                    let ph = g.basis_action(&mut bits);
                    let mut t = s;
                    for &q in &qs {
                        if bits[q] {
                            t |= 1u128 << q;
                        } else {
                            t &= !(1u128 << q);
                        }
                    }
                    out.insert(t, a * ph);
                }
                self.map = out;
            }
        }
        Ok(())
    }

    fn hadamard(&mut self, q: usize) -> Result<()> {
        let mut out: HashMap<u128, Amp> = HashMap::with_capacity(self.map.len() * 2);
        let r = Amp::inv_sqrt2_pow(1);
        for (&s, &a) in &self.map {
            let s0 = s & !(1u128 << q);
            let s1 = s | (1u128 << q);
            let ar = a * r;
            *out.entry(s0).or_insert(Amp::ZERO) += ar;
            *out.entry(s1).or_insert(Amp::ZERO) += if b(s, q) { -ar } else { ar };
        }
        out.retain(|_, a| !a.is_zero());
        self.set_checked(out)
    }

    fn set_checked(&mut self, out: HashMap<u128, Amp>) -> Result<()> {
        if out.len() > self.cap {
            return Err(Error::CapacityExceeded(format!("sparse support {}", out.len())));
        }
        self.map = out;
        Ok(())
    }

    pub fn run(&mut self, gates: &[Gate]) -> Result<()> {
        for g in gates {
            self.apply(g)?;
        }
        Ok(())
    }

    pub fn norm_sqr(&self) -> Amp {
        self.map.values().map(|a| a.norm_sqr()).sum()
    }

    /// <self|other>
    pub fn inner(&self, other: &SparseState) -> Amp {
        let (small, big, flip) = if self.map.len() <= other.map.len() {
            (self, other, false)
        } else {
            (other, self, true)
        };
        let mut s = Amp::ZERO;
        for (k, a) in &small.map {
            if let Some(bv) = big.map.get(k) {
                s += if flip { bv.conj() * *a } else { a.conj() * *bv };
            }
        }
        s
    }

    pub fn apply_pauli(&self, p: &Pauli) -> SparseState {
        let (mut xm, mut zm, mut ys) = (0u128, 0u128, 0u8);
        for q in 0..self.n {
            let (x, z) = p.letter(q).bits();
            xm |= (x as u128) << q;
            zm |= (z as u128) << q;
            if x && z {
                ys += 1;
            }
        }
        let base = Amp::i_pow(p.phase() + ys);
        let map = self
            .map
            .iter()
            .map(|(&s, &a)| {
                let v = if (s & zm).count_ones() % 2 == 1 { -base } else { base };
                (s ^ xm, v * a)
            })
            .collect();
        SparseState { n: self.n, map, cap: self.cap }
    }

    pub fn expectation(&self, p: &Pauli) -> Amp {
        self.inner(&self.apply_pauli(p))
    }

    /// Reduced density matrix on `keep` (local qubit i is keep[i]).
    pub fn rdm(&self, keep: &[usize]) -> Matrix {
        cross_rdm(self, self, keep)
    }

    pub fn prob_one(&self, q: usize) -> Amp {
        self.map.iter().filter(|(&s, _)| b(s, q)).map(|(_, a)| a.norm_sqr()).sum()
    }

    /// Sorted `bitstring amplitude` lines, qubit 1 leftmost.
    pub fn dump(&self) -> String {
        let mut v: Vec<(String, Amp)> = self
            .map
            .iter()
            .map(|(&s, &a)| ((0..self.n).map(|q| if b(s, q) { '1' } else { '0' }).collect(), a))
            .collect();
        v.sort_by(|x, y| x.0.cmp(&y.0));
        v.iter().map(|(s, a)| format!("{s} {a}\n")).collect()
    }
}

/// Tr_{rest}(|a><b|) on `keep`.
pub fn cross_rdm(a: &SparseState, bstate: &SparseState, keep: &[usize]) -> Matrix {
    let k = keep.len();
    let kmask: u128 = keep.iter().map(|&q| 1u128 << q).sum();
    let local = |s: u128| -> usize {
        keep.iter().enumerate().map(|(i, &q)| ((s >> q & 1) as usize) << i).sum()
    };
    let mut groups: HashMap<u128, Vec<(usize, Amp)>> = HashMap::new();
    for (&s, &amp) in &bstate.map {
        groups.entry(s & !kmask).or_default().push((local(s), amp));
    }
    let mut m = Matrix::zeros(1 << k);
    for (&s, &amp) in &a.map {
        if let Some(entries) = groups.get(&(s & !kmask)) {
            let r = local(s);
            for &(c, bv) in entries {
                m.add_at(r, c, amp * bv.conj());
            }
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::dense::DenseState;

    #[test]
    fn cnot_permutes_basis() {
        let mut s = SparseState::basis(3, 0b001).unwrap();
        s.apply(&Gate::Cnot(0, 2)).unwrap();
        assert_eq!(s.amp(0b101), Amp::ONE);
        assert_eq!(s.support_size(), 1);
    }

    #[test]
    fn cz_keeps_support() {
        let mut s = SparseState::zero(2).unwrap();
        s.run(&[Gate::H(0), Gate::H(1)]).unwrap();
        let before: Vec<u128> = {
            let mut v: Vec<u128> = s.entries().map(|(k, _)| *k).collect();
            v.sort();
            v
        };
        s.apply(&Gate::Cz(0, 1)).unwrap();
        let mut after: Vec<u128> = s.entries().map(|(k, _)| *k).collect();
        after.sort();
        assert_eq!(before, after);
    }

    #[test]
    fn agrees_with_dense() {
        let gates = [
            Gate::H(0),
            Gate::T(0),
            Gate::H(1),
            Gate::Toffoli(0, 1, 2),
            Gate::Ch(2, 3),
            Gate::Ccz(0, 2, 3),
            Gate::S(1),
            Gate::H(0),
        ];
        let mut d = DenseState::zero(4).unwrap();
        let mut s = SparseState::zero(4).unwrap();
        d.run(&gates).unwrap();
        s.run(&gates).unwrap();
        for i in 0..16 {
            assert_eq!(d.amp(i), s.amp(i as u128));
        }
        assert_eq!(d.rdm(&[3, 1]), s.rdm(&[3, 1]));
    }

    #[test]
    fn cap_is_enforced() {
        let mut s = SparseState::zero(4).unwrap().with_cap(4);
        s.run(&[Gate::H(0), Gate::H(1)]).unwrap();
        assert!(s.apply(&Gate::H(2)).is_err());
    }
}
