//! Sums of tensor-factorised terms over a register list.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::history::LogicalReg;
use crate::matrix::Matrix;
use crate::pauli::{Letter, Pauli};
use crate::ring::Amp;

/// Largest connected block the trace will materialise.
pub const MAX_COMPONENT: usize = 12;

/// A matrix on some registers; qubit i of the matrix is `regs[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RepBlock {
    pub regs: Vec<usize>,
    pub matrix: Matrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RepTerm {
    pub coef: Amp,
    pub blocks: Vec<RepBlock>,
}

/// (1/denom) sum_i coef_i ⊗_j A_ij, the blocks of each term partitioning
/// the universe.
#[derive(Clone, Debug, PartialEq)]
pub struct EfficientOperatorRep {
    pub denom: u64,
    pub universe: Vec<LogicalReg>,
    pub terms: Vec<RepTerm>,
}

fn gather(x: usize, pos: &[usize]) -> usize {
    pos.iter().enumerate().map(|(i, &p)| (x >> p & 1) << i).sum()
}

impl RepBlock {
    pub fn width(&self) -> usize {
        self.regs.len()
    }
}

impl EfficientOperatorRep {
    pub fn identity(universe: Vec<LogicalReg>) -> EfficientOperatorRep {
        let blocks = (0..universe.len()).map(|i| RepBlock { regs: vec![i], matrix: Matrix::identity(2) }).collect();
        EfficientOperatorRep { denom: 1, universe, terms: vec![RepTerm { coef: Amp::ONE, blocks }] }
    }

    /// i^phase times a Pauli given letter by letter; registers not listed
    /// carry the identity.
    pub fn pauli_product(universe: &[LogicalReg], phase: u8, letters: &BTreeMap<LogicalReg, Letter>) -> Result<EfficientOperatorRep> {
        let mut blocks = Vec::with_capacity(universe.len());
        for (i, r) in universe.iter().enumerate() {
            let l = letters.get(r).copied().unwrap_or(Letter::I);
            blocks.push(RepBlock { regs: vec![i], matrix: Matrix::pauli(&Pauli::from_letters(&[l])) });
        }
        if let Some(r) = letters.keys().find(|r| !universe.contains(r)) {
            return Err(Error::InvalidArgument(format!("register {r} outside the representation")));
        }
        Ok(EfficientOperatorRep {
            denom: 1,
            universe: universe.to_vec(),
            terms: vec![RepTerm { coef: Amp::i_pow(phase), blocks }],
        })
    }

    /// w
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// l
    pub fn width(&self) -> usize {
        self.terms.iter().flat_map(|t| t.blocks.iter().map(RepBlock::width)).max().unwrap_or(0)
    }

    /// Checks that every term's blocks partition the universe.
    pub fn validate(&self) -> Result<()> {
        for (i, t) in self.terms.iter().enumerate() {
            let mut seen = vec![false; self.universe.len()];
            for b in &t.blocks {
                if b.matrix.n_qubits() != b.regs.len() {
                    return Err(Error::Internal(format!("term {i}: block matrix size")));
                }
                for &r in &b.regs {
                    if r >= seen.len() || std::mem::replace(&mut seen[r], true) {
                        return Err(Error::Internal(format!("term {i}: blocks overlap or leave the universe")));
                    }
                }
            }
            if seen.contains(&false) {
                return Err(Error::Internal(format!("term {i}: blocks do not cover the universe")));
            }
        }
        Ok(())
    }

    /// Dense matrix on the whole universe, times `denom`.
    pub fn to_dense(&self) -> Result<Matrix> {
        let n = self.universe.len();
        if n > MAX_COMPONENT {
            return Err(Error::CapacityExceeded(format!("{n} registers")));
        }
        let mut m = Matrix::zeros(1 << n);
        for t in &self.terms {
            for x in 0..(1usize << n) {
                for y in 0..(1usize << n) {
                    let mut v = t.coef;
                    for b in &t.blocks {
                        v *= b.matrix.get(gather(x, &b.regs), gather(y, &b.regs));
                        if v.is_zero() {
                            break;
                        }
                    }
                    if !v.is_zero() {
                        m.add_at(x, y, v);
                    }
                }
            }
        }
        Ok(m)
    }
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    let mut y = x;
    while parent[y] != r {
        let next = parent[y];
        parent[y] = r;
        y = next;
    }
    r
}

/// Tr(A_i B_j) for one pair of terms: blocks sharing a register are merged
/// into components and each component is traced on its own.
fn term_trace(a: &RepTerm, b: &RepTerm, n: usize) -> Result<Amp> {
    let mut parent: Vec<usize> = (0..n).collect();
    for blk in a.blocks.iter().chain(&b.blocks) {
        for w in blk.regs.windows(2) {
            let (x, y) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            parent[x] = y;
        }
    }
    let mut comps: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for r in 0..n {
        let root = find(&mut parent, r);
        comps.entry(root).or_default().push(r);
    }
    let mut total = a.coef * b.coef;
    for regs in comps.values() {
        if regs.len() > MAX_COMPONENT {
            return Err(Error::CapacityExceeded(format!("component of {} registers", regs.len())));
        }
        let local = |blk: &RepBlock| -> Option<Vec<usize>> {
            if !regs.contains(&blk.regs[0]) {
                return None;
            }
            Some(blk.regs.iter().map(|r| regs.iter().position(|x| x == r).expect("same component")).collect())
        };
        let ab: Vec<(&Matrix, Vec<usize>)> = a.blocks.iter().filter_map(|b| local(b).map(|p| (&b.matrix, p))).collect();
        let bb: Vec<(&Matrix, Vec<usize>)> = b.blocks.iter().filter_map(|b| local(b).map(|p| (&b.matrix, p))).collect();
        let dim = 1usize << regs.len();
        let mut s = Amp::ZERO;
        for x in 0..dim {
            for y in 0..dim {
                let mut v = Amp::ONE;
                for (m, p) in &ab {
                    v *= m.get(gather(x, p), gather(y, p));
                    if v.is_zero() {
                        break;
                    }
                }
                if v.is_zero() {
                    continue;
                }
                for (m, p) in &bb {
                    v *= m.get(gather(y, p), gather(x, p));
                    if v.is_zero() {
                        break;
                    }
                }
                s += v;
            }
        }
        total *= s;
        if total.is_zero() {
            break;
        }
    }
    Ok(total)
}

/// Tr(AB) times `a.denom * b.denom`.
pub fn efficient_rep_trace(a: &EfficientOperatorRep, b: &EfficientOperatorRep) -> Result<Amp> {
    if a.universe != b.universe {
        return Err(Error::InvalidArgument("representations on different registers".into()));
    }
    let n = a.universe.len();
    let mut s = Amp::ZERO;
    for ta in &a.terms {
        for tb in &b.terms {
            s += term_trace(ta, tb, n)?;
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn regs(n: usize) -> Vec<LogicalReg> {
        (0..n).map(LogicalReg::Verifier).collect()
    }

    fn random_block(seed: &mut u64, width: usize) -> Matrix {
        let mut m = Matrix::zeros(1 << width);
        for r in 0..(1 << width) {
            for c in 0..(1 << width) {
                *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let v = (*seed >> 60) as i64 - 8;
                let w = (*seed >> 56 & 7) as i64 - 4;
                m.set(r, c, Amp::int(v) + Amp::I * Amp::int(w));
            }
        }
        m
    }

    /// A random term over 6 registers with blocks of width at most 2.
    fn random_term(seed: &mut u64) -> RepTerm {
        *seed = seed.wrapping_mul(2862933555777941757).wrapping_add(3037000493);
        let mut order: Vec<usize> = (0..6).collect();
        for i in (1..6).rev() {
            *seed = seed.wrapping_mul(2862933555777941757).wrapping_add(3037000493);
            order.swap(i, (*seed >> 33) as usize % (i + 1));
        }
        let mut blocks = Vec::new();
        let mut i = 0;
        while i < 6 {
            let w = if i + 1 < 6 && (*seed >> (20 + i)) & 1 == 1 { 2 } else { 1 };
            blocks.push(RepBlock { regs: order[i..i + w].to_vec(), matrix: random_block(seed, w) });
            i += w;
        }
        RepTerm { coef: Amp::ONE, blocks }
    }

    #[test]
    fn identity_against_a_density_has_unit_trace() {
        let u = regs(3);
        let mut rho = EfficientOperatorRep::identity(u.clone());
        rho.terms[0].blocks[1].matrix = Matrix::unit(2, 1, 1);
        rho.terms[0].blocks[0].matrix = Matrix::unit(2, 0, 0);
        rho.terms[0].blocks[2].matrix = Matrix::identity(2).scale(Amp::half_pow(1));
        assert_eq!(efficient_rep_trace(&EfficientOperatorRep::identity(u), &rho).unwrap(), Amp::ONE);
    }

    #[test]
    fn z_on_the_first_of_ten_zero_qubits() {
        let u = regs(10);
        let mut rho = EfficientOperatorRep::identity(u.clone());
        for b in &mut rho.terms[0].blocks {
            b.matrix = Matrix::unit(2, 0, 0);
        }
        let z = EfficientOperatorRep::pauli_product(&u, 0, &[(u[0], Letter::Z)].into_iter().collect()).unwrap();
        assert_eq!(efficient_rep_trace(&z, &rho).unwrap(), Amp::ONE);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn trace_matches_dense(seed in any::<u64>()) {
            let mut s = seed;
            let u = regs(6);
            let a = EfficientOperatorRep { denom: 1, universe: u.clone(), terms: (0..3).map(|_| random_term(&mut s)).collect() };
            let b = EfficientOperatorRep { denom: 1, universe: u, terms: (0..3).map(|_| random_term(&mut s)).collect() };
            a.validate().unwrap();
            b.validate().unwrap();
            prop_assert!(a.width() <= 2);
            let dense = a.to_dense().unwrap().trace_product(&b.to_dense().unwrap());
            prop_assert_eq!(efficient_rep_trace(&a, &b).unwrap(), dense);
        }
    }
}
