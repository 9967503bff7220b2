//! Dense exact state vectors.

use crate::error::{Error, Result};
use crate::gates::Gate;
use crate::matrix::Matrix;
use crate::pauli::Pauli;
use crate::ring::Amp;

pub const DEFAULT_DENSE_CAP: usize = 22;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DenseState {
    n: usize,
    amps: Vec<Amp>,
}

impl DenseState {
    pub fn zero(n: usize) -> Result<DenseState> {
        Self::basis(n, 0)
    }

    pub fn basis(n: usize, index: usize) -> Result<DenseState> {
        if n > DEFAULT_DENSE_CAP {
            return Err(Error::CapacityExceeded(format!("{n} qubits in a dense state")));
        }
        let mut amps = vec![Amp::ZERO; 1 << n];
        amps[index] = Amp::ONE;
        Ok(DenseState { n, amps })
    }

    pub fn from_amps(amps: Vec<Amp>) -> DenseState {
        let n = amps.len().trailing_zeros() as usize;
        assert_eq!(1 << n, amps.len());
        DenseState { n, amps }
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn amps(&self) -> &[Amp] {
        &self.amps
    }

    pub fn amp(&self, index: usize) -> Amp {
        self.amps[index]
    }

    pub fn apply(&mut self, g: &Gate) -> Result<()> {
        let qs = g.qubits();
        for &q in &qs {
            if q >= self.n {
                return Err(Error::IndexOutOfRange(q, self.n));
            }
        }
        if qs.is_empty() {
            return Ok(());
        }
        let lm = g.local_matrix();
        let k = qs.len();
        let mask: usize = qs.iter().map(|&q| 1 << q).sum();
        let mut local = vec![Amp::ZERO; 1 << k];
        let mut idx = vec![0usize; 1 << k];
        for base in 0..self.amps.len() {
            if base & mask != 0 {
                continue;
            }
            for l in 0..(1 << k) {
                let i = qs.iter().enumerate().fold(base, |acc, (b, &q)| acc | ((l >> b & 1) << q));
                idx[l] = i;
                local[l] = self.amps[i];
            }
            for r in 0..(1 << k) {
                let mut s = Amp::ZERO;
                for (c, &a) in local.iter().enumerate() {
                    if !a.is_zero() {
                        let m = lm.get(r, c);
                        if !m.is_zero() {
                            s += m * a;
                        }
                    }
                }
                self.amps[idx[r]] = s;
            }
        }
        Ok(())
    }

    pub fn run(&mut self, gates: &[Gate]) -> Result<()> {
        for g in gates {
            self.apply(g)?;
        }
        Ok(())
    }

    pub fn norm_sqr(&self) -> Amp {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// <self|other>
    pub fn inner(&self, other: &DenseState) -> Amp {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * *b).sum()
    }

    /// self ⊗ other with `other` on the higher qubits.
    pub fn tensor(&self, other: &DenseState) -> Result<DenseState> {
        let n = self.n + other.n;
        if n > DEFAULT_DENSE_CAP {
            return Err(Error::CapacityExceeded(format!("{n} qubits in a dense state")));
        }
        let mut amps = vec![Amp::ZERO; 1 << n];
        for (j, b) in other.amps.iter().enumerate() {
            if b.is_zero() {
                continue;
            }
            for (i, a) in self.amps.iter().enumerate() {
                if !a.is_zero() {
                    amps[j << self.n | i] = *a * *b;
                }
            }
        }
        Ok(DenseState { n, amps })
    }

    /// <psi| P |psi>
    pub fn expectation(&self, p: &Pauli) -> Amp {
        let mut ket = self.clone();
        ket.apply_pauli(p);
        self.inner(&ket)
    }

    pub fn apply_pauli(&mut self, p: &Pauli) {
        let (mut xm, mut zm, mut ys) = (0usize, 0usize, 0u8);
        for q in 0..self.n {
            let (x, z) = p.letter(q).bits();
            xm |= (x as usize) << q;
            zm |= (z as usize) << q;
            if x && z {
                ys += 1;
            }
        }
        let base = Amp::i_pow(p.phase() + ys);
        let mut out = vec![Amp::ZERO; self.amps.len()];
        for (c, a) in self.amps.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let v = if (c & zm).count_ones() % 2 == 1 { -base } else { base };
            out[c ^ xm] = v * *a;
        }
        self.amps = out;
    }

    /// Reduced density matrix on `keep` (local qubit i is keep[i]).
    pub fn rdm(&self, keep: &[usize]) -> Matrix {
        let k = keep.len();
        let mut m = Matrix::zeros(1 << k);
        let kmask: usize = keep.iter().map(|&q| 1 << q).sum();
        let local = |i: usize| -> usize {
            keep.iter().enumerate().map(|(b, &q)| (i >> q & 1) << b).sum()
        };
        // group amplitudes by the traced-out bits
        let mut groups: std::collections::HashMap<usize, Vec<(usize, Amp)>> = Default::default();
        for (i, a) in self.amps.iter().enumerate() {
            if !a.is_zero() {
                groups.entry(i & !kmask).or_default().push((local(i), *a));
            }
        }
        for entries in groups.values() {
            for &(r, a) in entries {
                for &(c, b) in entries {
                    m.add_at(r, c, a * b.conj());
                }
            }
        }
        m
    }

    /// Probability that qubit q reads 1.
    pub fn prob_one(&self, q: usize) -> Amp {
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i >> q & 1 == 1)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hadamard_on_zero() {
        let mut s = DenseState::zero(1).unwrap();
        s.apply(&Gate::H(0)).unwrap();
        assert_eq!(s.amps(), &[Amp::inv_sqrt2_pow(1), Amp::inv_sqrt2_pow(1)]);
    }

    #[test]
    fn rdm_of_bell_pair() {
        let mut s = DenseState::zero(2).unwrap();
        s.run(&[Gate::H(0), Gate::Cnot(0, 1)]).unwrap();
        assert_eq!(s.rdm(&[1]), Matrix::identity(2).scale(Amp::half_pow(1)));
        assert_eq!(s.expectation(&"XX".parse().unwrap()), Amp::ONE);
        assert_eq!(s.expectation(&"YY".parse().unwrap()), -Amp::ONE);
    }

    #[test]
    fn cap_is_enforced() {
        assert!(DenseState::zero(23).is_err());
    }
}
