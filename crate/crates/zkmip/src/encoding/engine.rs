//! Reduced states of encoded circuits without knowing the logical data.
//!
//! A `Reference` describes the register at the start of a stretch of
//! gates: which qubits form code blocks, which blocks carry unknown logical
//! data and which carry a known logical state, and which unencoded qubits
//! sit in a known basis state. A Pauli observed after the gates is pushed
//! back through them and evaluated against the reference.

use std::sync::Arc;

use crate::codes::{CodewordTrace, StabilizerCode};
use crate::error::{Error, Result};
use crate::gates::Gate;
use crate::matrix::{DensityMatrix, Matrix};
use crate::pauli::{Letter, Pauli, PauliSum};
use crate::ring::Amp;

#[derive(Clone, Debug, PartialEq)]
pub enum BlockState {
    /// Part of the global logical state nobody knows.
    Unknown,
    /// Logical qubit `slot` of known group `group`.
    Known { group: usize, slot: usize },
}

#[derive(Clone, Debug)]
pub struct Reference {
    pub n: usize,
    pub code: Arc<StabilizerCode>,
    /// Global qubits of each block, in physical-position order.
    pub blocks: Vec<Vec<usize>>,
    pub states: Vec<BlockState>,
    /// Logical density matrices of the known groups.
    pub groups: Vec<Matrix>,
    /// Unencoded qubits in a known basis state.
    pub fixed: Vec<Option<bool>>,
    owner: Vec<Option<usize>>,
}

impl Reference {
    pub fn new(n: usize, code: Arc<StabilizerCode>) -> Reference {
        assert_eq!(code.k_logical, 1, "blocks carry one logical qubit");
        Reference {
            n,
            code,
            blocks: vec![],
            states: vec![],
            groups: vec![],
            fixed: vec![None; n],
            owner: vec![None; n],
        }
    }

    pub fn add_block(&mut self, qubits: Vec<usize>, state: BlockState) -> usize {
        assert_eq!(qubits.len(), self.code.n_physical);
        let id = self.blocks.len();
        for &q in &qubits {
            assert!(self.owner[q].is_none() && self.fixed[q].is_none(), "qubit {q} reused");
            self.owner[q] = Some(id);
        }
        self.blocks.push(qubits);
        self.states.push(state);
        id
    }

    /// Registers a known logical state over `blocks.len()` logical qubits.
    pub fn add_known_group(&mut self, blocks: &[usize], rho: Matrix) -> usize {
        let g = self.groups.len();
        assert_eq!(rho.dim(), 1 << blocks.len());
        for (slot, &b) in blocks.iter().enumerate() {
            self.states[b] = BlockState::Known { group: g, slot };
        }
        self.groups.push(rho);
        g
    }

    /// Known computational basis state |b> on one block.
    pub fn set_known_basis(&mut self, block: usize, bit: bool) {
        let mut rho = Matrix::zeros(2);
        rho.set(bit as usize, bit as usize, Amp::ONE);
        self.add_known_group(&[block], rho);
    }

    pub fn set_fixed(&mut self, q: usize, bit: bool) {
        assert!(self.owner[q].is_none(), "qubit {q} belongs to a block");
        self.fixed[q] = Some(bit);
    }

    pub fn block_of(&self, q: usize) -> Option<usize> {
        self.owner[q]
    }

    /// Tr(rho_ref Q).
    pub fn evaluate(&self, q: &Pauli) -> Result<Amp> {
        let mut value = Amp::i_pow(q.phase());
        let mut touched: Vec<usize> = Vec::new();
        for t in q.support() {
            match (self.owner[t], self.fixed[t]) {
                (Some(b), _) => {
                    if !touched.contains(&b) {
                        touched.push(b);
                    }
                }
                (None, Some(bit)) => match q.letter(t) {
                    Letter::Z => {
                        if bit {
                            value = -value;
                        }
                    }
                    _ => return Ok(Amp::ZERO),
                },
                (None, None) => {
                    return Err(Error::BudgetExceeded(format!("qubit {t} has no reference state")))
                }
            }
        }
        let mut logical: Vec<Option<Pauli>> = vec![None; self.groups.len()];
        for b in touched {
            let part = q.restrict(&self.blocks[b]);
            match &self.states[b] {
                BlockState::Unknown => match self.code.codeword_pauli_trace(&part)? {
                    CodewordTrace::Known(v) => value *= v,
                    CodewordTrace::Undefined => {
                        return Err(Error::BudgetExceeded(format!(
                            "block {b} sees the logical operator {part}"
                        )))
                    }
                },
                BlockState::Known { group, slot } => {
                    let Some(dec) = self.code.logical_decomposition(&part)? else {
                        return Ok(Amp::ZERO);
                    };
                    let k = self.groups[*group].n_qubits();
                    let acc = logical[*group].get_or_insert_with(|| Pauli::identity(k));
                    let l = dec.logical_pauli();
                    let mut lifted = Pauli::identity(k).with_phase(l.phase());
                    lifted.set(*slot, l.letter(0));
                    *acc = acc.mul(&lifted)?;
                }
            }
            if value.is_zero() {
                return Ok(Amp::ZERO);
            }
        }
        for (g, l) in logical.iter().enumerate() {
            if let Some(l) = l {
                value *= self.groups[g].pauli_expectation(l);
            }
        }
        Ok(value)
    }

    pub fn evaluate_sum(&self, s: &PauliSum) -> Result<Amp> {
        let mut total = Amp::ZERO;
        for (p, c) in s.sorted_terms() {
            let v = self.evaluate(&p)?;
            if !v.is_zero() {
                total += c * v;
            }
        }
        Ok(total)
    }
}

/// G† w G for G = gates[last] ... gates[0].
pub fn push_back(w: &PauliSum, gates: &[Gate]) -> PauliSum {
    let mut s = w.clone();
    for g in gates.iter().rev() {
        s = s.conjugate(g);
    }
    s
}

/// Exact Pauli expansion of a gate: sum_P Tr(P G)/2^k P.
pub fn gate_pauli_sum(g: &Gate, n: usize) -> PauliSum {
    let qs = g.qubits();
    let k = qs.len();
    let m = g.local_matrix();
    let mut out = PauliSum::default();
    for code in 0..(1usize << (2 * k)) {
        let l: Vec<Letter> = (0..k).map(|i| Letter::from_code(code >> (2 * i) & 3)).collect();
        let p = Pauli::from_letters(&l);
        let c = m.pauli_expectation(&p);
        if !c.is_zero() {
            out.add(c * Amp::half_pow(k as u32), p.embed(&qs, n).expect("gate in range"));
        }
    }
    out
}

/// Gates `controlled(targets[p], control[i])` for p outer, i inner: a
/// transversal Clifford layer controlled qubit-by-qubit by one code block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ControlledLayer {
    /// Index of the branch bit held by the control block.
    pub bit: usize,
    pub control: Vec<usize>,
    pub targets: Vec<Gate>,
}

impl ControlledLayer {
    pub fn len(&self) -> usize {
        self.control.len() * self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn controlled(v: &Gate, c: usize) -> Gate {
        match *v {
            Gate::X(a) => Gate::Cnot(c, a),
            Gate::Z(a) => Gate::Cz(c, a),
            Gate::H(a) => Gate::Ch(c, a),
            Gate::Cnot(a, b) => Gate::Toffoli(c, a, b),
            Gate::Cz(a, b) => Gate::Ccz(c, a, b),
            _ => panic!("no controlled form for {v}"),
        }
    }

    pub fn gates(&self) -> Vec<Gate> {
        let mut out = Vec::with_capacity(self.len());
        for v in &self.targets {
            for &c in &self.control {
                out.push(Self::controlled(v, c));
            }
        }
        out
    }
}

/// After a coherent-measurement gadget has copied its k measured logical
/// bits into s further groups, the state is sum_x 2^{-k/2}|x>^{⊗ s+1}|psi_x>.
#[derive(Clone, Debug)]
pub struct BranchSpec {
    /// s+1 groups of k blocks, each holding Enc|x_j> at the branch point.
    pub groups: Vec<Vec<usize>>,
    /// Blocks holding the branch-dependent output, treated as unknown.
    pub magic: Vec<usize>,
    /// Corrections after the branch point.
    pub layers: Vec<ControlledLayer>,
}

/// A reference, the gates that follow it, and optionally a branch point
/// followed by controlled correction layers.
#[derive(Clone, Debug)]
pub struct Frame {
    pub reference: Reference,
    pub prefix: Vec<Gate>,
    branch: Option<(BranchSpec, Vec<Reference>)>,
}

impl Frame {
    pub fn new(reference: Reference, prefix: Vec<Gate>, branch: Option<BranchSpec>) -> Frame {
        let branch = branch.map(|br| {
            let k = br.groups[0].len();
            let refs = (0..(1usize << k))
                .map(|x| {
                    let mut r = reference.clone();
                    for &m in &br.magic {
                        r.states[m] = BlockState::Unknown;
                    }
                    for grp in &br.groups {
                        for (j, &b) in grp.iter().enumerate() {
                            r.set_known_basis(b, x >> j & 1 == 1);
                        }
                    }
                    r
                })
                .collect();
            (br, refs)
        });
        Frame { reference, prefix, branch }
    }

    pub fn branch(&self) -> Option<&BranchSpec> {
        self.branch.as_ref().map(|(b, _)| b)
    }

    pub fn len(&self) -> usize {
        self.prefix.len() + self.branch().map_or(0, |b| b.layers.iter().map(|l| l.len()).sum())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All gates in order.
    pub fn gates(&self) -> Vec<Gate> {
        let mut out = self.prefix.clone();
        if let Some(b) = self.branch() {
            for l in &b.layers {
                out.extend(l.gates());
            }
        }
        out
    }

    /// Tr(rho_t w) after the first `t` gates of the frame.
    pub fn expectation(&self, t: usize, w: &Pauli) -> Result<Amp> {
        if t > self.len() {
            return Err(Error::InvalidArgument(format!("prefix {t} beyond {}", self.len())));
        }
        match &self.branch {
            Some((br, refs)) if t >= self.prefix.len() => self.branch_expectation(br, refs, t - self.prefix.len(), w),
            _ => self.reference.evaluate_sum(&push_back(&PauliSum::from_pauli(w), &self.prefix[..t])),
        }
    }

    fn branch_expectation(&self, br: &BranchSpec, refs: &[Reference], mut u: usize, w: &Pauli) -> Result<Amp> {
        let untouched = br.groups.iter().any(|grp| {
            grp.iter().all(|&b| self.reference.blocks[b].iter().all(|&q| w.letter(q) == Letter::I))
        });
        if !untouched {
            return Err(Error::BudgetExceeded(format!("{w} touches every copy of the branch bits")));
        }
        // complete layers, then at most one partial layer at (p0, i0)
        let mut full = 0;
        let mut partial = None;
        for l in &br.layers {
            if u >= l.len() {
                u -= l.len();
                full += 1;
            } else {
                if u > 0 {
                    partial = Some((l, u / l.control.len(), u % l.control.len()));
                }
                break;
            }
        }
        let n = self.reference.n;
        let k = br.groups[0].len();
        let mut total = Amp::ZERO;
        for (x, r) in refs.iter().enumerate() {
            let on = |bit: usize| x >> bit & 1 == 1;
            // Clifford gates applied in this branch, in time order
            let mut applied: Vec<Gate> = Vec::new();
            for l in &br.layers[..full] {
                if on(l.bit) {
                    applied.extend(l.targets.iter().cloned());
                }
            }
            let Some((l, p0, i0)) = partial else {
                total += r.evaluate_sum(&push_back(&PauliSum::from_pauli(w), &applied))?;
                continue;
            };
            if on(l.bit) {
                applied.extend(l.targets[..p0].iter().cloned());
            }
            if p0 == l.targets.len() {
                total += r.evaluate_sum(&push_back(&PauliSum::from_pauli(w), &applied))?;
                continue;
            }
            // the next target has been applied iff the first i0 control bits have odd parity
            let block = &self.reference.blocks[br.groups[0][l.bit]];
            let mut w_d = Pauli::identity(n);
            let mut w_rest = w.clone();
            for &q in block {
                w_d.set(q, w.letter(q));
                w_rest.set(q, Letter::I);
            }
            let z_prefix = Pauli::from_sparse(n, &l.control[..i0].iter().map(|&q| (q, Letter::Z)).collect::<Vec<_>>());
            let v = gate_pauli_sum(&l.targets[p0], n);
            let id = PauliSum::from_pauli(&Pauli::identity(n));
            let rest = PauliSum::from_pauli(&w_rest);
            for b in 0..2 {
                for b2 in 0..2 {
                    // Tr(w_D P_b rho P_b2) with P_b = (1 + (-1)^b Z_<)/2
                    let mut m = Amp::ZERO;
                    for uu in 0..2 {
                        for vv in 0..2 {
                            let mut p = w_d.clone();
                            if uu == 1 {
                                p = z_prefix.mul(&p)?;
                            }
                            if vv == 1 {
                                p = p.mul(&z_prefix)?;
                            }
                            let e = r.evaluate(&p)?;
                            if (b2 * uu + b * vv) % 2 == 1 {
                                m -= e;
                            } else {
                                m += e;
                            }
                        }
                    }
                    if m.is_zero() {
                        continue;
                    }
                    let left = if b2 == 1 { &v } else { &id };
                    let right = if b == 1 { &v } else { &id };
                    let y = left.mul(&rest).mul(right);
                    let f = r.evaluate_sum(&push_back(&y, &applied))?;
                    total += m.div_pow2(2) * f;
                }
            }
        }
        Ok(total * Amp::half_pow(k as u32))
    }

    /// Reduced density matrix on `qubits` after `t` gates.
    pub fn reduced_density(&self, t: usize, qubits: &[usize]) -> Result<DensityMatrix> {
        let mut err = None;
        let rho = DensityMatrix::from_pauli_expectations(qubits.len(), |w| {
            if err.is_some() {
                return Amp::ZERO;
            }
            let full = w.embed(qubits, self.reference.n).expect("qubits in range");
            match self.expectation(t, &full) {
                Ok(v) => v,
                Err(e) => {
                    err = Some(e);
                    Amp::ZERO
                }
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(rho),
        }
    }
}
