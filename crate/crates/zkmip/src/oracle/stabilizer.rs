//! Stabilizer-state simulation by evolving a generating set.

use crate::error::{Error, Result};
use crate::gates::Gate;
use crate::matrix::Matrix;
use crate::pauli::{Letter, Pauli};
use crate::ring::Amp;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tableau {
    n: usize,
    gens: Vec<Pauli>,
}

impl Tableau {
    /// |0...0>
    pub fn zero(n: usize) -> Tableau {
        Tableau { n, gens: (0..n).map(|q| Pauli::single(n, q, Letter::Z)).collect() }
    }

    /// Computational basis state.
    pub fn basis(bits: &[bool]) -> Tableau {
        let n = bits.len();
        let gens = (0..n)
            .map(|q| {
                let z = Pauli::single(n, q, Letter::Z);
                if bits[q] {
                    z.negate()
                } else {
                    z
                }
            })
            .collect();
        Tableau { n, gens }
    }

    pub fn generators(&self) -> &[Pauli] {
        &self.gens
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    /// g -> U g U†
    pub fn apply(&mut self, g: &Gate) -> Result<()> {
        if !g.is_clifford() {
            return Err(Error::UnsupportedGate(g.name().into()));
        }
        let inv = g.inverse();
        for p in self.gens.iter_mut() {
            *p = p.conjugate_by_clifford(&inv)?;
        }
        Ok(())
    }

    pub fn run(&mut self, gates: &[Gate]) -> Result<()> {
        for g in gates {
            self.apply(g)?;
        }
        Ok(())
    }

    /// Row-reduces so that generators supported inside `keep` come last;
    /// returns those.
    fn subgroup_on(&self, keep: &[usize]) -> Vec<Pauli> {
        let inside: Vec<bool> = (0..self.n).map(|q| keep.contains(&q)).collect();
        let mut rows = self.gens.clone();
        let mut r = 0;
        for q in (0..self.n).filter(|&q| !inside[q]) {
            for want_x in [true, false] {
                let has = |p: &Pauli| if want_x { p.x_bit(q) } else { p.z_bit(q) };
                let Some(pr) = (r..rows.len()).find(|&i| has(&rows[i])) else { continue };
                rows.swap(r, pr);
                for i in 0..rows.len() {
                    if i != r && has(&rows[i]) {
                        rows[i] = rows[i].mul(&rows[r]).expect("same size");
                    }
                }
                r += 1;
            }
        }
        rows.split_off(r)
    }

    /// Reduced density matrix on `keep`: 2^-|Y| sum of the subgroup on Y.
    pub fn rdm(&self, keep: &[usize]) -> Matrix {
        let sub: Vec<Pauli> = self.subgroup_on(keep).iter().map(|p| restrict_signed(p, keep)).collect();
        let k = keep.len();
        let mut m = Matrix::zeros(1 << k);
        for mask in 0u64..(1u64 << sub.len()) {
            let mut acc = Pauli::identity(k);
            for (i, g) in sub.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    acc = acc.mul(g).expect("same size");
                }
            }
            m.add_pauli(&acc, Amp::ONE);
        }
        m.scale(Amp::half_pow(k as u32))
    }

    /// <P> in {0, ±1}.
    pub fn expectation(&self, p: &Pauli) -> Amp {
        if self.gens.iter().any(|g| !g.commutes(p).expect("same size")) {
            return Amp::ZERO;
        }
        // P is ± a product of generators; find it by elimination on copies
        let mut rows: Vec<(Pauli, Vec<bool>)> = self
            .gens
            .iter()
            .enumerate()
            .map(|(i, g)| (g.clone(), (0..self.n).map(|j| j == i).collect()))
            .collect();
        let mut target = p.unsigned();
        let mut used = vec![false; self.n];
        let mut r = 0;
        for q in 0..self.n {
            for want_x in [true, false] {
                let has = |p: &Pauli| if want_x { p.x_bit(q) } else { p.z_bit(q) };
                let Some(pr) = (r..rows.len()).find(|&i| has(&rows[i].0)) else { continue };
                rows.swap(r, pr);
                let (pv, cv) = rows[r].clone();
                for (i, row) in rows.iter_mut().enumerate() {
                    if i != r && has(&row.0) {
                        row.0 = row.0.mul(&pv).unwrap();
                        for (a, b) in row.1.iter_mut().zip(&cv) {
                            *a ^= b;
                        }
                    }
                }
                if has(&target) {
                    target = target.mul(&pv).unwrap();
                    for (a, b) in used.iter_mut().zip(&cv) {
                        *a ^= b;
                    }
                }
                r += 1;
            }
        }
        debug_assert!(target.is_identity_letters());
        let mut acc = Pauli::identity(self.n);
        for (g, &u) in self.gens.iter().zip(&used) {
            if u {
                acc = acc.mul(g).unwrap();
            }
        }
        // p = i^a L and acc = i^b L with <acc> = 1
        Amp::i_pow((p.phase() + 4 - acc.phase()) & 3)
    }
}

fn restrict_signed(p: &Pauli, keep: &[usize]) -> Pauli {
    p.restrict(keep).with_phase(p.phase())
}
