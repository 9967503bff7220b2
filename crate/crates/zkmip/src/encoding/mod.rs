//! Encoded logical gates: transversal H and CNOT, the Toffoli magic-state
//! gadget in coherent form, and exact reduced states of their prefixes.

pub mod engine;

use std::fmt;
use std::sync::Arc;

use crate::codes::StabilizerCode;
use crate::error::{Error, Result};
use crate::gates::Gate;
use crate::matrix::{DensityMatrix, Matrix};
use crate::oracle::DenseState;
use crate::pauli::Pauli;
use crate::ring::Amp;

use engine::{BlockState, BranchSpec, ControlledLayer, Frame, Reference};

/// A one-logical-qubit code together with an encoding circuit.
#[derive(Clone, Debug)]
pub struct InnerCode {
    code: Arc<StabilizerCode>,
    level: usize,
    encoder: Vec<Gate>,
    data: usize,
}

/// Encoder for one Steane block with the data on qubit 2.
fn steane_block_encoder() -> Vec<Gate> {
    use Gate::*;
    vec![
        Cnot(2, 4),
        Cnot(2, 5),
        H(0),
        H(1),
        H(3),
        Cnot(0, 2),
        Cnot(0, 4),
        Cnot(0, 6),
        Cnot(1, 2),
        Cnot(1, 5),
        Cnot(1, 6),
        Cnot(3, 4),
        Cnot(3, 5),
        Cnot(3, 6),
    ]
}

/// Encoder for Steane_K and the position of its data qubit.
fn steane_encoder(level: usize) -> (Vec<Gate>, usize) {
    if level == 0 {
        return (vec![], 0);
    }
    let (outer, outer_data) = steane_encoder(level - 1);
    let inner = steane_block_encoder();
    let mut gates: Vec<Gate> = outer.iter().map(|g| g.remap(|q| 7 * q + 2)).collect();
    let blocks = 7usize.pow(level as u32 - 1);
    for b in 0..blocks {
        gates.extend(inner.iter().map(|g| g.remap(|q| 7 * b + q)));
    }
    (gates, 7 * outer_data + 2)
}

impl InnerCode {
    pub fn trivial() -> InnerCode {
        InnerCode { code: Arc::new(StabilizerCode::trivial()), level: 0, encoder: vec![], data: 0 }
    }

    /// Steane_K; level 0 is the trivial code.
    pub fn steane(level: usize) -> Result<InnerCode> {
        if level == 0 {
            return Ok(Self::trivial());
        }
        let code = StabilizerCode::concatenated_steane(level)?;
        let (encoder, data) = steane_encoder(level);
        Ok(InnerCode { code: Arc::new(code), level, encoder, data })
    }

    pub fn code(&self) -> &Arc<StabilizerCode> {
        &self.code
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn n(&self) -> usize {
        self.code.n_physical
    }

    pub fn distance(&self) -> usize {
        self.code.distance
    }

    /// Position of the logical input inside a block, before encoding.
    pub fn data_position(&self) -> usize {
        self.data
    }

    /// Encoder acting on the block starting at `offset`.
    pub fn encoder(&self, offset: usize) -> Vec<Gate> {
        self.encoder.iter().map(|g| g.remap(|q| q + offset)).collect()
    }

    pub fn decoder(&self, offset: usize) -> Vec<Gate> {
        self.encoder.iter().rev().map(|g| g.inverse().remap(|q| q + offset)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LogicalGate {
    H,
    Cnot,
    Toffoli,
}

impl LogicalGate {
    pub fn arity(self) -> usize {
        match self {
            LogicalGate::H => 1,
            LogicalGate::Cnot => 2,
            LogicalGate::Toffoli => 3,
        }
    }

    /// The gate on logical qubits 0..arity.
    pub fn unencoded(self) -> Gate {
        match self {
            LogicalGate::H => Gate::H(0),
            LogicalGate::Cnot => Gate::Cnot(0, 1),
            LogicalGate::Toffoli => Gate::Toffoli(0, 1, 2),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MagicKind {
    Toffoli,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MagicState {
    pub kind: MagicKind,
    pub preparation: Vec<Gate>,
}

impl MagicState {
    /// 1/2 sum_{d,e} |d, e, de>
    pub fn toffoli() -> MagicState {
        MagicState {
            kind: MagicKind::Toffoli,
            preparation: vec![Gate::H(0), Gate::H(1), Gate::Toffoli(0, 1, 2)],
        }
    }

    pub fn state(&self) -> DenseState {
        let mut s = DenseState::zero(3).expect("3 qubits");
        s.run(&self.preparation).expect("valid gates");
        s
    }

    pub fn density(&self) -> Matrix {
        let s = self.state();
        let mut m = Matrix::zeros(8);
        for r in 0..8 {
            for c in 0..8 {
                m.set(r, c, s.amp(r) * s.amp(c).conj());
            }
        }
        m
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AncillaState {
    None,
    /// Enc|Toffoli> on the magic blocks, Enc|0> on every copy block.
    ToffoliResource { copies: usize },
    /// sum_x 2^{-3/2} Enc|x>^{⊗ copies+1} on the measured and copy blocks.
    BranchRegisters { copies: usize },
}

/// Block positions of the Toffoli gadget.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GadgetLayout {
    pub copies: usize,
    pub measured: [usize; 3],
    pub magic: [usize; 3],
    pub copy_groups: Vec<[usize; 3]>,
    /// Number of gates in the entangling layer.
    pub entangle_len: usize,
    /// Index of the first correction gate.
    pub corrections_start: usize,
    /// Classically controlled corrections, each controlled qubit-wise by
    /// one measured block.
    pub corrections: Vec<ControlledLayer>,
}

/// Physical gates implementing one logical gate on a local register made of
/// code blocks; block b holds local qubits b*n .. (b+1)*n.
#[derive(Clone, Debug)]
pub struct EncodedGateSequence {
    pub logical_gate: LogicalGate,
    pub targets: Vec<usize>,
    pub inner: InnerCode,
    pub gates: Vec<Gate>,
    pub n_blocks: usize,
    /// Blocks holding the logical inputs, in target order.
    pub input_blocks: Vec<usize>,
    /// Blocks holding the logical outputs after the last gate.
    pub output_blocks: Vec<usize>,
    pub ancilla_in: AncillaState,
    pub ancilla_out: AncillaState,
    pub gadget: Option<GadgetLayout>,
    /// Largest |S| accepted by `simulate_prefix_trace`.
    pub budget: usize,
}

fn check_targets(targets: &[usize], arity: usize) -> Result<()> {
    if targets.len() != arity {
        return Err(Error::InvalidArgument(format!("expected {arity} targets, got {}", targets.len())));
    }
    for (i, a) in targets.iter().enumerate() {
        if targets[..i].contains(a) {
            return Err(Error::RepeatedIndex(*a));
        }
    }
    Ok(())
}

/// U P U† for the gate list U = gates[last] ... gates[0].
fn conjugate_forward(p: &Pauli, gates: &[Gate]) -> Result<Pauli> {
    let mut p = p.clone();
    for g in gates {
        p = p.conjugate_by_clifford(&g.inverse())?;
    }
    Ok(p)
}

/// Whether `gates` on m blocks of `code` implements `logical` (a Clifford on
/// m logical qubits): stabilizers map into the stabilizer and logical Paulis
/// map to the right logical Paulis.
pub fn implements_logical(code: &StabilizerCode, m: usize, gates: &[Gate], logical: &Gate) -> Result<bool> {
    let big = code.product_code(m)?;
    for g in &big.generators {
        let img = conjugate_forward(g, gates)?;
        if big.stabilizer_phase(&img) != Some(0) || !big.in_normalizer(&img) {
            return Ok(false);
        }
    }
    for j in 0..m {
        for (l, letter) in [(&big.logical_x[j], crate::pauli::Letter::X), (&big.logical_z[j], crate::pauli::Letter::Z)] {
            let img = conjugate_forward(l, gates)?;
            let want = conjugate_forward(&Pauli::single(m, j, letter), std::slice::from_ref(logical))?;
            match big.logical_decomposition(&img)? {
                Some(dec) if dec.logical_pauli() == want => {}
                _ => return Ok(false),
            }
        }
    }
    Ok(true)
}

/// Transversal H or CNOT.
pub fn transversal_encoding(inner: &InnerCode, gate: LogicalGate, targets: &[usize]) -> Result<EncodedGateSequence> {
    let n = inner.n();
    let gates: Vec<Gate> = match gate {
        LogicalGate::H => (0..n).map(Gate::H).collect(),
        LogicalGate::Cnot => (0..n).map(|i| Gate::Cnot(i, n + i)).collect(),
        LogicalGate::Toffoli => {
            return Err(Error::UnsupportedGate("TOFFOLI is not transversal".into()));
        }
    };
    check_targets(targets, gate.arity())?;
    if !implements_logical(inner.code(), gate.arity(), &gates, &gate.unencoded())? {
        return Err(Error::UnsupportedGate(format!("{gate:?} is not transversal in {}", inner.code().name)));
    }
    let blocks: Vec<usize> = (0..gate.arity()).collect();
    Ok(EncodedGateSequence {
        logical_gate: gate,
        targets: targets.to_vec(),
        inner: inner.clone(),
        gates,
        n_blocks: gate.arity(),
        input_blocks: blocks.clone(),
        output_blocks: blocks,
        ancilla_in: AncillaState::None,
        ancilla_out: AncillaState::None,
        gadget: None,
        budget: inner.distance() - 1,
    })
}

/// The Toffoli gadget with coherent measurements copied into `copies`
/// further groups and physical-controlled corrections.
pub fn toffoli_gadget_encoding(inner: &InnerCode, targets: &[usize], copies: usize) -> Result<EncodedGateSequence> {
    check_targets(targets, 3)?;
    if !inner.code().order_consistent(2)? {
        return Err(Error::NotOrderConsistent);
    }
    let n = inner.n();
    let q = |block: usize, i: usize| block * n + i;
    let d = [0, 1, 2];
    let m = [3, 4, 5];
    let copy_groups: Vec<[usize; 3]> = (0..copies).map(|c| [6 + 3 * c, 7 + 3 * c, 8 + 3 * c]).collect();
    let mut gates = Vec::new();
    for i in 0..n {
        gates.push(Gate::Cnot(q(m[0], i), q(d[0], i)));
        gates.push(Gate::Cnot(q(m[1], i), q(d[1], i)));
        gates.push(Gate::Cnot(q(d[2], i), q(m[2], i)));
        gates.push(Gate::H(q(d[2], i)));
    }
    let entangle_len = gates.len();
    for grp in &copy_groups {
        for j in 0..3 {
            for i in 0..n {
                gates.push(Gate::Cnot(q(d[j], i), q(grp[j], i)));
            }
        }
    }
    let corrections_start = gates.len();
    let layer = |ctrl: usize, v: &dyn Fn(usize) -> Gate| ControlledLayer {
        bit: ctrl,
        control: (0..n).map(|i| q(d[ctrl], i)).collect(),
        targets: (0..n).map(v).collect(),
    };
    let corrections = vec![
        layer(2, &|p| Gate::Cz(q(m[0], p), q(m[1], p))),
        layer(2, &|p| Gate::Z(q(m[2], p))),
        layer(1, &|p| Gate::Cnot(q(m[0], p), q(m[2], p))),
        layer(1, &|p| Gate::X(q(m[1], p))),
        layer(0, &|p| Gate::X(q(m[0], p))),
        layer(0, &|p| Gate::Cnot(q(m[1], p), q(m[2], p))),
    ];
    for l in &corrections {
        gates.extend(l.gates());
    }
    Ok(EncodedGateSequence {
        logical_gate: LogicalGate::Toffoli,
        targets: targets.to_vec(),
        inner: inner.clone(),
        gates,
        n_blocks: 6 + 3 * copies,
        input_blocks: d.to_vec(),
        output_blocks: m.to_vec(),
        ancilla_in: AncillaState::ToffoliResource { copies },
        ancilla_out: AncillaState::BranchRegisters { copies },
        gadget: Some(GadgetLayout {
            copies,
            measured: d,
            magic: m,
            copy_groups,
            entangle_len,
            corrections_start,
            corrections,
        }),
        budget: copies,
    })
}

/// True iff every codeword string of Enc|b> has weight = b mod r.
pub fn order_consistency_check(code: &StabilizerCode, r: usize) -> Result<bool> {
    code.order_consistent(r)
}

impl EncodedGateSequence {
    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn n_qubits(&self) -> usize {
        self.n_blocks * self.inner.n()
    }

    pub fn block_qubits(&self, b: usize) -> Vec<usize> {
        let n = self.inner.n();
        (b * n..(b + 1) * n).collect()
    }

    /// Whether the budget is below distance minus the number of logical
    /// qubits the gate acts on.
    pub fn guaranteed_simulatable(&self) -> bool {
        match self.logical_gate {
            LogicalGate::Toffoli => self.budget + 3 < self.inner.distance(),
            _ => self.budget < self.inner.distance(),
        }
    }

    /// Gates preparing sigma_U on the ancilla blocks from |0...0>.
    pub fn ancilla_preparation(&self) -> Vec<Gate> {
        let Some(g) = &self.gadget else { return vec![] };
        let n = self.inner.n();
        let dp = |b: usize| b * n + self.inner.data_position();
        let mut out = vec![Gate::H(dp(g.magic[0])), Gate::H(dp(g.magic[1]))];
        out.push(Gate::Toffoli(dp(g.magic[0]), dp(g.magic[1]), dp(g.magic[2])));
        for b in g.magic.iter().chain(g.copy_groups.iter().flatten()) {
            out.extend(self.inner.encoder(b * n));
        }
        out
    }

    /// Reference state before the first gate, with the inputs unknown.
    pub fn frame(&self) -> Frame {
        let n = self.inner.n();
        let mut r = Reference::new(self.n_qubits(), self.inner.code().clone());
        for b in 0..self.n_blocks {
            r.add_block(self.block_qubits(b), BlockState::Unknown);
        }
        let branch = self.gadget.as_ref().map(|g| {
            r.add_known_group(&g.magic, MagicState::toffoli().density());
            for b in g.copy_groups.iter().flatten() {
                r.set_known_basis(*b, false);
            }
            let mut groups = vec![g.measured.to_vec()];
            groups.extend(g.copy_groups.iter().map(|c| c.to_vec()));
            BranchSpec { groups, magic: g.magic.to_vec(), layers: g.corrections.clone() }
        });
        debug_assert_eq!(r.n, self.n_blocks * n);
        let split = self.gadget.as_ref().map_or(self.gates.len(), |g| g.corrections_start);
        Frame::new(r, self.gates[..split].to_vec(), branch)
    }

    /// Reduced state on the local qubits `s` after the first `t` gates,
    /// computed without the logical input.
    pub fn simulate_prefix_trace(&self, t: usize, s: &[usize]) -> Result<DensityMatrix> {
        if s.len() > self.budget {
            return Err(Error::BudgetExceeded(format!("|S| = {} > s = {}", s.len(), self.budget)));
        }
        if t > self.gates.len() {
            return Err(Error::IndexOutOfRange(t, self.gates.len() + 1));
        }
        for (i, &q) in s.iter().enumerate() {
            if q >= self.n_qubits() {
                return Err(Error::IndexOutOfRange(q, self.n_qubits()));
            }
            if s[..i].contains(&q) {
                return Err(Error::RepeatedIndex(q));
            }
        }
        self.frame().reduced_density(t, s)
    }

    /// Timestep-annotated gate listing.
    pub fn listing(&self) -> String {
        let mut out = String::new();
        for (t, g) in self.gates.iter().enumerate() {
            let tag = match &self.gadget {
                Some(l) if t < l.entangle_len => " entangle",
                Some(l) if t < l.corrections_start => " fanout",
                Some(_) => " correct",
                None => "",
            };
            out.push_str(&format!("{:>5}{tag} {g}\n", t + 1));
        }
        out
    }
}

impl fmt::Display for EncodedGateSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:?} on {:?}: {} gates over {} blocks of {}",
            self.logical_gate,
            self.targets,
            self.gates.len(),
            self.n_blocks,
            self.inner.n()
        )
    }
}

/// Places a k-qubit logical state on the data positions of blocks 0..k and
/// encodes those blocks; the remaining blocks stay |0...0>.
pub fn encode_dense(inner: &InnerCode, logical: &DenseState, n_blocks: usize) -> Result<DenseState> {
    let n = inner.n();
    let total = n * n_blocks;
    let k = logical.n_qubits();
    if k > n_blocks {
        return Err(Error::DimensionMismatch(k, n_blocks));
    }
    if total > crate::oracle::dense::DEFAULT_DENSE_CAP {
        return Err(Error::CapacityExceeded(format!("{total} qubits in a dense state")));
    }
    let mut amps = vec![Amp::ZERO; 1usize << total];
    for (i, a) in logical.amps().iter().enumerate() {
        let idx: usize = (0..k).map(|j| (i >> j & 1) << (j * n + inner.data_position())).sum();
        amps[idx] = *a;
    }
    let mut s = DenseState::from_amps(amps);
    for b in 0..k {
        s.run(&inner.encoder(b * n))?;
    }
    Ok(s)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::oracle::Tableau;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Pure state from a random Clifford+T circuit; stays exact.
    pub(crate) fn random_state(k: usize, rng: &mut ChaCha8Rng) -> DenseState {
        let mut s = DenseState::zero(k).unwrap();
        for _ in 0..8 * k + 4 {
            let a = rng.gen_range(0..k);
            let g = match rng.gen_range(0..4) {
                0 => Gate::H(a),
                1 => Gate::T(a),
                2 => Gate::S(a),
                _ if k > 1 => Gate::Cnot(a, (a + rng.gen_range(1..k)) % k),
                _ => Gate::H(a),
            };
            s.apply(&g).unwrap();
        }
        s
    }

    fn prepared(enc: &EncodedGateSequence, psi: &DenseState) -> DenseState {
        let mut s = encode_dense(&enc.inner, psi, enc.n_blocks).unwrap();
        s.run(&enc.ancilla_preparation()).unwrap();
        s
    }

    #[test]
    fn steane_encoder_produces_codewords() {
        for level in [1, 2] {
            let inner = InnerCode::steane(level).unwrap();
            let n = inner.n();
            for bit in [false, true] {
                let mut bits = vec![false; n];
                bits[inner.data_position()] = bit;
                let mut t = Tableau::basis(&bits);
                t.run(&inner.encoder(0)).unwrap();
                for g in &inner.code().generators {
                    assert_eq!(t.expectation(g), Amp::ONE);
                }
                let z = t.expectation(&inner.code().logical_z[0]);
                assert_eq!(z, if bit { -Amp::ONE } else { Amp::ONE });
            }
        }
    }

    #[test]
    fn decoder_inverts_encoder() {
        let inner = InnerCode::steane(1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let psi = random_state(1, &mut rng);
        let mut s = encode_dense(&inner, &psi, 1).unwrap();
        s.run(&inner.decoder(0)).unwrap();
        let back = encode_dense(&InnerCode::trivial(), &psi, 1).unwrap();
        assert_eq!(s.rdm(&[2]), back.rdm(&[0]));
        assert_eq!(s.prob_one(0), Amp::ZERO);
    }

    #[test]
    fn transversal_gate_lists() {
        let inner = InnerCode::steane(1).unwrap();
        let h = transversal_encoding(&inner, LogicalGate::H, &[0]).unwrap();
        assert_eq!(h.gates, (0..7).map(Gate::H).collect::<Vec<_>>());
        let c = transversal_encoding(&inner, LogicalGate::Cnot, &[0, 1]).unwrap();
        assert_eq!(c.len(), 7);
        for (i, g) in c.gates.iter().enumerate() {
            assert_eq!(*g, Gate::Cnot(i, 7 + i));
        }
        assert!(transversal_encoding(&inner, LogicalGate::Cnot, &[1, 1]).is_err());
        assert!(transversal_encoding(&inner, LogicalGate::Toffoli, &[0, 1, 2]).is_err());
    }

    #[test]
    fn non_transversal_pair_is_rejected() {
        // bit-flip repetition code: H on every qubit leaves the code space
        let code = StabilizerCode::new(
            "repetition3",
            1,
            vec!["ZZI".parse().unwrap(), "IZZ".parse().unwrap()],
            vec!["XXX".parse().unwrap()],
            vec!["ZII".parse().unwrap()],
            false,
        )
        .unwrap();
        let gates: Vec<Gate> = (0..3).map(Gate::H).collect();
        assert!(!implements_logical(&code, 1, &gates, &Gate::H(0)).unwrap());
        let steane = StabilizerCode::steane();
        let cnot: Vec<Gate> = (0..7).map(|i| Gate::Cnot(i, 7 + i)).collect();
        assert!(implements_logical(&steane, 2, &cnot, &Gate::Cnot(0, 1)).unwrap());
    }

    #[test]
    fn transversal_h_maps_zero_to_plus() {
        let inner = InnerCode::steane(1).unwrap();
        let h = transversal_encoding(&inner, LogicalGate::H, &[0]).unwrap();
        let zero = DenseState::zero(1).unwrap();
        let mut plus = zero.clone();
        plus.apply(&Gate::H(0)).unwrap();
        let mut s = encode_dense(&inner, &zero, 1).unwrap();
        s.run(&h.gates).unwrap();
        assert_eq!(s, encode_dense(&inner, &plus, 1).unwrap());
    }

    #[test]
    fn transversal_end_to_end_on_random_inputs() {
        let inner = InnerCode::steane(1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for gate in [LogicalGate::H, LogicalGate::Cnot] {
            let k = gate.arity();
            let enc = transversal_encoding(&inner, gate, &(0..k).collect::<Vec<_>>()).unwrap();
            let psi = random_state(k, &mut rng);
            let mut s = prepared(&enc, &psi);
            s.run(&enc.gates).unwrap();
            let mut out = psi.clone();
            out.apply(&gate.unencoded()).unwrap();
            assert_eq!(s, encode_dense(&inner, &out, k).unwrap());
        }
    }

    #[test]
    fn prefix_zero_single_qubit_is_maximally_mixed() {
        let inner = InnerCode::steane(1).unwrap();
        let h = transversal_encoding(&inner, LogicalGate::H, &[0]).unwrap();
        let rho = h.simulate_prefix_trace(0, &[2]).unwrap();
        assert_eq!(rho, Matrix::identity(2).scale(Amp::half_pow(1)));
    }

    #[test]
    fn mid_cnot_prefix_matches_oracle_for_random_inputs() {
        let inner = InnerCode::steane(1).unwrap();
        let enc = transversal_encoding(&inner, LogicalGate::Cnot, &[0, 1]).unwrap();
        let s = [1, 8];
        let engine = enc.simulate_prefix_trace(3, &s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let mut st = prepared(&enc, &random_state(2, &mut rng));
            st.run(&enc.gates[..3]).unwrap();
            assert_eq!(st.rdm(&s), engine);
        }
    }

    #[test]
    fn transversal_prefixes_are_input_independent() {
        let inner = InnerCode::steane(1).unwrap();
        let enc = transversal_encoding(&inner, LogicalGate::Cnot, &[0, 1]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let inputs: Vec<DenseState> = (0..5).map(|_| prepared(&enc, &random_state(2, &mut rng))).collect();
        for t in 0..=enc.len() {
            let states: Vec<DenseState> = inputs
                .iter()
                .map(|s| {
                    let mut s = s.clone();
                    s.run(&enc.gates[..t]).unwrap();
                    s
                })
                .collect();
            for _ in 0..6 {
                let a = rng.gen_range(0..14);
                let b = (a + rng.gen_range(1..14)) % 14;
                let engine = enc.simulate_prefix_trace(t, &[a, b]).unwrap();
                for s in &states {
                    assert_eq!(s.rdm(&[a, b]), engine, "t={t} S={{{a},{b}}}");
                }
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        let inner = InnerCode::steane(1).unwrap();
        let enc = transversal_encoding(&inner, LogicalGate::H, &[0]).unwrap();
        assert!(matches!(enc.simulate_prefix_trace(0, &[0, 1, 2]), Err(Error::BudgetExceeded(_))));
        assert!(enc.simulate_prefix_trace(8, &[0]).is_err());
    }

    #[test]
    fn magic_state_is_exact() {
        let s = MagicState::toffoli().state();
        for i in 0..8usize {
            let (d, e, f) = (i & 1, i >> 1 & 1, i >> 2 & 1);
            let want = if f == d & e { Amp::half_pow(1) } else { Amp::ZERO };
            assert_eq!(s.amp(i), want);
        }
    }

    #[test]
    fn unencoded_gadget_applies_toffoli_to_basis_input() {
        let enc = toffoli_gadget_encoding(&InnerCode::trivial(), &[0, 1, 2], 0).unwrap();
        // |110> with qubit 0 first
        let psi = DenseState::basis(3, 0b011).unwrap();
        let mut s = prepared(&enc, &psi);
        s.run(&enc.gates).unwrap();
        let out = s.rdm(&[3, 4, 5]);
        let mut want = Matrix::zeros(8);
        want.set(7, 7, Amp::ONE);
        assert_eq!(out, want);
    }

    fn gadget_final_state(enc: &EncodedGateSequence, psi: &DenseState) -> DenseState {
        // sum_x 2^{-3/2} |x>^{s+1} on measured and copy lines, Toffoli psi on magic
        let mut logical = DenseState::zero(enc.n_blocks - 3).unwrap();
        for j in 0..3 {
            logical.apply(&Gate::H(j)).unwrap();
        }
        let g = enc.gadget.as_ref().unwrap();
        for grp in &g.copy_groups {
            for j in 0..3 {
                logical.apply(&Gate::Cnot(j, grp[j] - 3)).unwrap();
            }
        }
        let mut out = psi.clone();
        out.apply(&Gate::Toffoli(0, 1, 2)).unwrap();
        // reorder: blocks 0..3 measured, 3..6 magic, then copies
        let mut amps = vec![Amp::ZERO; 1 << enc.n_blocks];
        for (i, a) in logical.amps().iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in out.amps().iter().enumerate() {
                let idx = (i & 7) | (j << 3) | ((i >> 3) << 6);
                amps[idx] = *a * *b;
            }
        }
        DenseState::from_amps(amps)
    }

    #[test]
    fn unencoded_gadget_branch_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for copies in [0, 1] {
            let enc = toffoli_gadget_encoding(&InnerCode::trivial(), &[0, 1, 2], copies).unwrap();
            for _ in 0..3 {
                let psi = random_state(3, &mut rng);
                let mut s = prepared(&enc, &psi);
                s.run(&enc.gates[..enc.gadget.as_ref().unwrap().entangle_len]).unwrap();
                // measured lines are uniformly random after the entangling layer
                assert_eq!(s.rdm(&[0, 1, 2]).trace(), Amp::ONE);
                for x in 0..8 {
                    assert_eq!(s.rdm(&[0, 1, 2]).get(x, x), Amp::half_pow(3));
                }
                let mut s = prepared(&enc, &psi);
                s.run(&enc.gates).unwrap();
                assert_eq!(s, gadget_final_state(&enc, &psi));
            }
        }
    }

    #[test]
    fn unencoded_gadget_prefixes_match_oracle() {
        let enc = toffoli_gadget_encoding(&InnerCode::trivial(), &[0, 1, 2], 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let inputs: Vec<DenseState> = (0..5).map(|_| prepared(&enc, &random_state(3, &mut rng))).collect();
        let mut simulated = 0;
        let mut refused = 0;
        for t in 0..=enc.len() {
            let states: Vec<DenseState> = inputs
                .iter()
                .map(|s| {
                    let mut s = s.clone();
                    s.run(&enc.gates[..t]).unwrap();
                    s
                })
                .collect();
            for q in 0..enc.n_qubits() {
                match enc.simulate_prefix_trace(t, &[q]) {
                    Ok(rho) => {
                        simulated += 1;
                        for s in &states {
                            assert_eq!(s.rdm(&[q]), rho, "t={t} q={q}");
                        }
                    }
                    Err(Error::BudgetExceeded(_)) => refused += 1,
                    Err(e) => panic!("{e}"),
                }
            }
        }
        // every copy qubit inside the correction layer is simulatable
        let start = enc.gadget.as_ref().unwrap().corrections_start;
        for t in start..=enc.len() {
            for q in 6..9 {
                assert!(enc.simulate_prefix_trace(t, &[q]).is_ok());
            }
        }
        assert!(simulated > refused);
    }

    #[test]
    fn unencoded_gadget_pairs_match_oracle() {
        let enc = toffoli_gadget_encoding(&InnerCode::trivial(), &[0, 1, 2], 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let inputs: Vec<DenseState> = (0..5).map(|_| prepared(&enc, &random_state(3, &mut rng))).collect();
        let n = enc.n_qubits();
        let mut simulated = 0;
        for t in 0..=enc.len() {
            let states: Vec<DenseState> = inputs
                .iter()
                .map(|s| {
                    let mut s = s.clone();
                    s.run(&enc.gates[..t]).unwrap();
                    s
                })
                .collect();
            for _ in 0..12 {
                let a = rng.gen_range(0..n);
                let b = (a + rng.gen_range(1..n)) % n;
                if let Ok(rho) = enc.simulate_prefix_trace(t, &[a, b]) {
                    simulated += 1;
                    for s in &states {
                        assert_eq!(s.rdm(&[a, b]), rho, "t={t} S={{{a},{b}}}");
                    }
                }
            }
        }
        assert!(simulated > 40, "{simulated}");
    }

    #[test]
    fn order_consistency() {
        assert!(order_consistency_check(&StabilizerCode::steane(), 2).unwrap());
        assert!(order_consistency_check(&StabilizerCode::trivial(), 2).unwrap());
        let rep = StabilizerCode::new(
            "repetition2",
            1,
            vec!["ZZ".parse().unwrap()],
            vec!["XX".parse().unwrap()],
            vec!["ZI".parse().unwrap()],
            false,
        )
        .unwrap();
        assert!(!order_consistency_check(&rep, 4).unwrap());
    }

    #[test]
    fn concatenated_gadget_is_simulatable_at_budget_two() {
        let inner = InnerCode::steane(2).unwrap();
        let enc = toffoli_gadget_encoding(&inner, &[0, 1, 2], 2).unwrap();
        assert!(enc.guaranteed_simulatable());
        let n = enc.n_qubits();
        let frame = enc.frame();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let g = enc.gadget.as_ref().unwrap();
        for t in [0, g.entangle_len, g.corrections_start, g.corrections_start + 1500, enc.len()] {
            for _ in 0..3 {
                let a = rng.gen_range(0..n);
                let b = (a + rng.gen_range(1..n)) % n;
                let rho = frame.reduced_density(t, &[a, b]).unwrap();
                assert_eq!(rho.trace(), Amp::ONE);
                assert!(rho.is_hermitian() && rho.is_psd());
            }
        }
        // one qubit of a block in Enc|0> reads as I/2
        let q = g.copy_groups[0][0] * inner.n();
        let rho = enc.simulate_prefix_trace(0, &[q]).unwrap();
        assert_eq!(rho, Matrix::identity(2).scale(Amp::half_pow(1)));
    }
}
