//! Robustification: every verifier gate replaced by its encoded sequence,
//! resource states prepared up front, the output decoded at the end.
//!
//! Alongside the circuit we keep, for every micro-phase, a `Frame`: the
//! status of every verifier and message qubit at the start of the
//! micro-phase plus the gates inside it. Reduced states of the honest run
//! at any timestep then follow without the prover.

use std::fmt::Write as _;
use std::sync::Arc;

use super::{Phase, ProtocolCircuit, ProverStrategy, Step};
use crate::codes::StabilizerCode;
use crate::encoding::engine::{BlockState, BranchSpec, ControlledLayer, Frame, Reference};
use crate::encoding::{toffoli_gadget_encoding, transversal_encoding, InnerCode, LogicalGate, MagicState};
use crate::error::{Error, Result};
use crate::gates::Gate;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RobustifyConfig {
    /// Idle steps on each side of a prover gate; None means 4 block lengths.
    pub padding: Option<usize>,
    /// Copies of the measured bits in each Toffoli gadget.
    pub copies: usize,
}

impl Default for RobustifyConfig {
    fn default() -> Self {
        RobustifyConfig { padding: None, copies: 1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResourceKind {
    Zero,
    One,
    Toffoli,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MicroKind {
    Idling,
    Resource(ResourceKind),
    Logical(LogicalGate),
    /// Decoding the output block, assuming it holds Enc|1>.
    Decode,
}

impl MicroKind {
    pub fn label(&self) -> String {
        match self {
            MicroKind::Idling => "IDLE".into(),
            MicroKind::Resource(r) => format!("RESOURCE-{}", format!("{r:?}").to_uppercase()),
            MicroKind::Logical(g) => format!("LOGICAL-{}", format!("{g:?}").to_uppercase()),
            MicroKind::Decode => "DECODE".into(),
        }
    }
}

/// Steps start+1..=end of the robustified circuit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MicroPhase {
    pub kind: MicroKind,
    pub start: usize,
    pub end: usize,
    /// Code blocks the micro-phase acts on.
    pub blocks: Vec<usize>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ResourceCounts {
    pub zero: usize,
    pub one: usize,
    pub toffoli: usize,
}

#[derive(Clone, Debug)]
pub struct Robustified {
    pub circuit: ProtocolCircuit,
    pub source: ProtocolCircuit,
    pub inner: InnerCode,
    pub copies: usize,
    pub padding: usize,
    pub resources: ResourceCounts,
    /// Global qubits of every code block; verifier blocks first, then
    /// message blocks in prover-major order.
    pub blocks: Vec<Vec<usize>>,
    pub micro: Vec<MicroPhase>,
    frames: Vec<Frame>,
    final_frame: Frame,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Status {
    Unknown,
    Basis(bool),
    Magic(usize, usize),
}

struct Tracker {
    total: usize,
    code: Arc<StabilizerCode>,
    blocks: Vec<Vec<usize>>,
    live: Vec<Option<Status>>,
    fixed: Vec<Option<bool>>,
    magic_groups: Vec<[usize; 3]>,
}

impl Tracker {
    /// Reference for the current statuses, and each block's id in it.
    fn reference(&self) -> (Reference, Vec<Option<usize>>) {
        let mut r = Reference::new(self.total, self.code.clone());
        let mut ids = vec![None; self.blocks.len()];
        for (b, st) in self.live.iter().enumerate() {
            if st.is_some() {
                ids[b] = Some(r.add_block(self.blocks[b].clone(), BlockState::Unknown));
            }
        }
        for (b, st) in self.live.iter().enumerate() {
            if let Some(Status::Basis(bit)) = st {
                r.set_known_basis(ids[b].expect("live"), *bit);
            }
        }
        for (g, grp) in self.magic_groups.iter().enumerate() {
            let intact = grp.iter().enumerate().all(|(slot, &b)| self.live[b] == Some(Status::Magic(g, slot)));
            if intact {
                let rid: Vec<usize> = grp.iter().map(|&b| ids[b].expect("live")).collect();
                r.add_known_group(&rid, MagicState::toffoli().density());
            }
        }
        for (q, f) in self.fixed.iter().enumerate() {
            if let Some(bit) = f {
                r.set_fixed(q, *bit);
            }
        }
        (r, ids)
    }

    fn encode(&mut self, b: usize, st: Status) {
        for &q in &self.blocks[b] {
            self.fixed[q] = None;
        }
        self.live[b] = Some(st);
    }

    fn decode(&mut self, b: usize, data: usize, bit: bool) {
        self.live[b] = None;
        for (i, &q) in self.blocks[b].iter().enumerate() {
            self.fixed[q] = Some(i == data && bit);
        }
    }
}

struct Builder {
    out: ProtocolCircuit,
    inner: InnerCode,
    tracker: Tracker,
    micro: Vec<MicroPhase>,
    frames: Vec<Frame>,
}

impl Builder {
    fn emit(&mut self, kind: MicroKind, blocks: Vec<usize>, steps: Vec<Step>, frame: impl FnOnce(Reference, &[Option<usize>]) -> Frame) {
        if steps.is_empty() {
            return;
        }
        let (r, ids) = self.tracker.reference();
        let start = self.out.len();
        self.out.steps.extend(steps);
        self.frames.push(frame(r, &ids));
        self.micro.push(MicroPhase { kind, start, end: self.out.len(), blocks });
    }

    fn idle(&mut self, step: Step, blocks: Vec<usize>) {
        self.emit(MicroKind::Idling, blocks, vec![step], |r, _| Frame::new(r, vec![], None));
    }

    fn block_offset(&self, b: usize) -> usize {
        self.tracker.blocks[b][0]
    }

    fn encode_basis(&mut self, b: usize, bit: bool) {
        let off = self.block_offset(b);
        let mut gates = Vec::new();
        if bit {
            gates.push(Gate::X(off + self.inner.data_position()));
        }
        gates.extend(self.inner.encoder(off));
        let kind = MicroKind::Resource(if bit { ResourceKind::One } else { ResourceKind::Zero });
        let steps = gates.iter().map(|g| Step::Gate(*g)).collect();
        self.emit(kind, vec![b], steps, |r, _| Frame::new(r, gates, None));
        self.tracker.encode(b, Status::Basis(bit));
    }

    fn encode_magic(&mut self, grp: [usize; 3]) {
        let dp = |b: usize| self.block_offset(b) + self.inner.data_position();
        let mut gates = vec![Gate::H(dp(grp[0])), Gate::H(dp(grp[1])), Gate::Toffoli(dp(grp[0]), dp(grp[1]), dp(grp[2]))];
        for &b in &grp {
            gates.extend(self.inner.encoder(self.block_offset(b)));
        }
        let steps = gates.iter().map(|g| Step::Gate(*g)).collect();
        self.emit(MicroKind::Resource(ResourceKind::Toffoli), grp.to_vec(), steps, |r, _| Frame::new(r, gates, None));
        let g = self.tracker.magic_groups.len();
        self.tracker.magic_groups.push(grp);
        for (slot, &b) in grp.iter().enumerate() {
            self.tracker.encode(b, Status::Magic(g, slot));
        }
    }

    fn local_to_global(&self, bs: &[usize]) -> impl Fn(usize) -> usize {
        let nc = self.inner.n();
        let blocks: Vec<Vec<usize>> = bs.iter().map(|&b| self.tracker.blocks[b].clone()).collect();
        move |l| blocks[l / nc][l % nc]
    }

    fn transversal(&mut self, gate: LogicalGate, bs: Vec<usize>) -> Result<()> {
        let targets: Vec<usize> = (0..bs.len()).collect();
        let seq = transversal_encoding(&self.inner, gate, &targets)?;
        let map = self.local_to_global(&bs);
        let gates: Vec<Gate> = seq.gates.iter().map(|g| g.remap(&map)).collect();
        let steps = gates.iter().map(|g| Step::Gate(*g)).collect();
        self.emit(MicroKind::Logical(gate), bs.clone(), steps, |r, _| Frame::new(r, gates, None));
        for b in bs {
            self.tracker.live[b] = Some(Status::Unknown);
        }
        Ok(())
    }

    /// Toffoli on data blocks `data` using the resource blocks `res`
    /// (3 magic blocks then the copy groups). Returns the output blocks.
    fn toffoli(&mut self, data: [usize; 3], res: &[usize], copies: usize) -> Result<[usize; 3]> {
        let seq = toffoli_gadget_encoding(&self.inner, &[0, 1, 2], copies)?;
        let layout = seq.gadget.clone().expect("gadget layout");
        let mut bs = data.to_vec();
        bs.extend_from_slice(res);
        let map = self.local_to_global(&bs);
        let gates: Vec<Gate> = seq.gates.iter().map(|g| g.remap(&map)).collect();
        let layers: Vec<ControlledLayer> = layout
            .corrections
            .iter()
            .map(|l| ControlledLayer {
                bit: l.bit,
                control: l.control.iter().map(|&q| map(q)).collect(),
                targets: l.targets.iter().map(|g| g.remap(&map)).collect(),
            })
            .collect();
        let prefix = gates[..layout.corrections_start].to_vec();
        let steps = gates.iter().map(|g| Step::Gate(*g)).collect();
        let global = |lb: usize| bs[lb];
        let mut groups = vec![layout.measured.map(global)];
        groups.extend(layout.copy_groups.iter().map(|g| g.map(global)));
        let magic = layout.magic.map(global);
        self.emit(MicroKind::Logical(LogicalGate::Toffoli), bs.clone(), steps, |r, ids| {
            let id = |b: usize| ids[b].expect("gadget blocks are live");
            let spec = BranchSpec {
                groups: groups.iter().map(|g| g.iter().map(|&b| id(b)).collect()).collect(),
                magic: magic.iter().map(|&b| id(b)).collect(),
                layers,
            };
            Frame::new(r, prefix, Some(spec))
        });
        for &b in &bs {
            self.tracker.live[b] = Some(Status::Unknown);
        }
        Ok(magic)
    }
}

/// Replaces every gate of `source` by its encoding under `inner`.
pub fn robustify(source: &ProtocolCircuit, inner: &InnerCode, cfg: &RobustifyConfig) -> Result<Robustified> {
    source.validate()?;
    if source.phases.iter().any(|(p, _)| matches!(p, Phase::Resource | Phase::Decode)) {
        return Err(Error::InvalidCircuit { gate: 0, msg: "circuit is already robustified".into() });
    }
    let nc = inner.n();
    let dp = inner.data_position();
    let copies = cfg.copies;
    let padding = cfg.padding.unwrap_or(4 * nc);

    // pre-pass: gate set and resource counts
    let mut res = ResourceCounts { zero: source.n, ..Default::default() };
    for (s, st) in source.steps.iter().enumerate() {
        match st {
            Step::Gate(Gate::Toffoli(..)) => {
                res.toffoli += 1;
                res.zero += 3 * copies;
            }
            Step::Gate(Gate::Id | Gate::H(_) | Gate::Cnot(..)) | Step::Prover { .. } => {}
            Step::Gate(g) => {
                return Err(Error::InvalidCircuit { gate: s + 1, msg: format!("{} is not in the verifier gate set", g.name()) })
            }
        }
    }
    let per_gadget = 3 + 3 * copies;
    let n_vblocks = source.n + res.toffoli * per_gadget;
    let nv = n_vblocks * nc;
    let mv = source.m * nc;
    let total = nv + source.k * mv;
    let mut blocks: Vec<Vec<usize>> = (0..n_vblocks).map(|b| (b * nc..(b + 1) * nc).collect()).collect();
    let msg_base = blocks.len();
    for i in 0..source.k * source.m {
        blocks.push((nv + i * nc..nv + (i + 1) * nc).collect());
    }
    let mut live = vec![None; blocks.len()];
    for l in live.iter_mut().skip(msg_base) {
        *l = Some(Status::Unknown);
    }
    let mut fixed = vec![None; total];
    for f in fixed.iter_mut().take(nv) {
        *f = Some(false);
    }
    let tracker = Tracker { total, code: inner.code().clone(), blocks, live, fixed, magic_groups: vec![] };
    let mut out = ProtocolCircuit::new(nv, mv, source.k);
    out.begin_phase(Phase::Resource);
    let mut b = Builder { out, inner: inner.clone(), tracker, micro: vec![], frames: vec![] };

    // logical qubit of the source -> current block
    let mut lmap: Vec<usize> = (0..source.n).collect();
    lmap.extend((0..source.k * source.m).map(|i| msg_base + i));

    for v in 0..source.n {
        b.encode_basis(v, false);
    }
    let gadget_blocks = |t: usize| -> Vec<usize> { (0..per_gadget).map(|j| source.n + t * per_gadget + j).collect() };
    for t in 0..res.toffoli {
        let g = gadget_blocks(t);
        b.encode_magic([g[0], g[1], g[2]]);
        for &c in &g[3..] {
            b.encode_basis(c, false);
        }
    }

    let mut last = Phase::Resource;
    let mut next_gadget = 0;
    for s in 0..=source.len() {
        for &(p, start) in &source.phases {
            if start == s && p != last {
                b.out.begin_phase(p);
                last = p;
            }
        }
        if s == source.len() {
            break;
        }
        if last == Phase::Resource {
            b.out.begin_phase(Phase::Vop1);
            last = Phase::Vop1;
        }
        match source.steps[s] {
            Step::Prover { prover, round } => {
                let mblocks: Vec<usize> = (0..source.m).map(|j| lmap[source.message_qubit(prover, j)]).collect();
                for _ in 0..padding {
                    b.idle(Step::Gate(Gate::Id), vec![]);
                }
                b.idle(Step::Prover { prover, round }, mblocks);
                for _ in 0..padding {
                    b.idle(Step::Gate(Gate::Id), vec![]);
                }
            }
            Step::Gate(Gate::Id) => b.idle(Step::Gate(Gate::Id), vec![]),
            Step::Gate(Gate::H(a)) => b.transversal(LogicalGate::H, vec![lmap[a]])?,
            Step::Gate(Gate::Cnot(a, c)) => b.transversal(LogicalGate::Cnot, vec![lmap[a], lmap[c]])?,
            Step::Gate(Gate::Toffoli(x, y, z)) => {
                let out = b.toffoli([lmap[x], lmap[y], lmap[z]], &gadget_blocks(next_gadget), copies)?;
                next_gadget += 1;
                lmap[x] = out[0];
                lmap[y] = out[1];
                lmap[z] = out[2];
            }
            Step::Gate(g) => return Err(Error::UnsupportedGate(g.name().into())),
        }
    }

    b.out.begin_phase(Phase::Decode);
    let ob = lmap[source.output];
    b.tracker.live[ob] = Some(Status::Basis(true));
    let off = b.block_offset(ob);
    let dec = inner.decoder(off);
    let steps = dec.iter().map(|g| Step::Gate(*g)).collect();
    b.emit(MicroKind::Decode, vec![ob], steps, |r, _| Frame::new(r, dec, None));
    b.tracker.decode(ob, dp, true);
    b.out.output = off + dp;
    b.out.validate()?;

    let final_frame = Frame::new(b.tracker.reference().0, vec![], None);
    Ok(Robustified {
        circuit: b.out,
        source: source.clone(),
        inner: inner.clone(),
        copies,
        padding,
        resources: res,
        blocks: b.tracker.blocks,
        micro: b.micro,
        frames: b.frames,
        final_frame,
    })
}

impl Robustified {
    /// Frame covering timestep t and the offset of t inside it.
    pub fn frame_at(&self, t: usize) -> Result<(&Frame, usize)> {
        let total = self.circuit.len();
        if t > total {
            return Err(Error::IndexOutOfRange(t, total + 1));
        }
        if t == total {
            return Ok((&self.final_frame, 0));
        }
        let i = self.micro.partition_point(|m| m.end <= t);
        let m = &self.micro[i];
        debug_assert!(m.start <= t && t < m.end);
        Ok((&self.frames[i], t - m.start))
    }

    pub fn micro_at(&self, t: usize) -> Option<&MicroPhase> {
        let i = self.micro.partition_point(|m| m.end <= t);
        self.micro.get(i)
    }

    /// The strategy that decodes its message blocks, runs `s`, and
    /// re-encodes, with an encoded initial state.
    pub fn wrap_strategy(&self, s: &ProverStrategy) -> Result<ProverStrategy> {
        if s.k != self.source.k || s.m != self.source.m {
            return Err(Error::InvalidArgument("strategy does not match the source circuit".into()));
        }
        let nc = self.inner.n();
        let dp = self.inner.data_position();
        let m2 = s.m * nc;
        let km = s.k * s.m;
        let map = |q: usize| if q < km { q * nc + dp } else { s.k * m2 + q - km };
        let block = |i: usize, j: usize| (i * s.m + j) * nc;
        let mut prep: Vec<Gate> = s.prep.iter().map(|g| g.remap(map)).collect();
        for i in 0..s.k {
            for j in 0..s.m {
                prep.extend(self.inner.encoder(block(i, j)));
            }
        }
        let unitaries = (0..s.k)
            .map(|i| {
                let mut u: Vec<Gate> = (0..s.m).flat_map(|j| self.inner.decoder(block(i, j))).collect();
                u.extend(s.unitaries[i].iter().map(|g| g.remap(map)));
                u.extend((0..s.m).flat_map(|j| self.inner.encoder(block(i, j))));
                u
            })
            .collect();
        let w = ProverStrategy { k: s.k, m: m2, private: s.private.clone(), prep, unitaries };
        w.validate()?;
        Ok(w)
    }

    /// Timestep at which each prover acts (first round).
    pub fn t_star(&self) -> Vec<usize> {
        let mut t = vec![0; self.circuit.k];
        for (p, r, at) in self.circuit.prover_times() {
            if r == 1 {
                t[p] = at;
            }
        }
        t
    }

    /// Sidecar text: blocks, micro-phases with qubit status counts, and
    /// prover times.
    pub fn annotations(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# code={} level={} copies={} padding={} T={}",
            self.inner.code().name,
            self.inner.level(),
            self.copies,
            self.padding,
            self.circuit.len()
        );
        let _ = writeln!(
            s,
            "RESOURCES zero={} one={} toffoli={}",
            self.resources.zero, self.resources.one, self.resources.toffoli
        );
        for (b, qs) in self.blocks.iter().enumerate() {
            let _ = writeln!(s, "BLOCK {} {}-{}", b + 1, qs[0] + 1, qs[qs.len() - 1] + 1);
        }
        for (m, f) in self.micro.iter().zip(&self.frames) {
            let r = &f.reference;
            let unknown = r.states.iter().filter(|x| **x == BlockState::Unknown).count();
            let known = r.states.len() - unknown;
            let fixed = r.fixed.iter().filter(|x| x.is_some()).count();
            let blocks: Vec<String> = m.blocks.iter().map(|b| (b + 1).to_string()).collect();
            let _ = writeln!(
                s,
                "MICRO {} {} {} blocks={} encoded_unknown={unknown} encoded_known={known} unencoded={fixed}",
                m.start + 1,
                m.end,
                m.kind.label(),
                if blocks.is_empty() { "-".into() } else { blocks.join(",") },
            );
        }
        for (i, t) in self.t_star().iter().enumerate() {
            let _ = writeln!(s, "TSTAR {} {t}", i + 1);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::sparse::SparseState;
    use crate::pauli::{Letter, Pauli};
    use crate::protocol::tests::{TINY, TINY_STRATEGY};
    use crate::protocol::{circuit_value_fixed_strategy, run_with_strategy};
    use crate::ring::Amp;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn single_h() -> ProtocolCircuit {
        ProtocolCircuit::parse("CIRCUIT n=1 m=1 k=1\nPHASE VOP1\nH v1\n").unwrap()
    }

    #[test]
    fn trivial_code_keeps_the_circuit() {
        let r = robustify(&single_h(), &InnerCode::trivial(), &RobustifyConfig::default()).unwrap();
        assert_eq!(r.circuit.steps, single_h().steps);
        assert_eq!(r.circuit.phase_range(Phase::Resource), Some(0..0));
        assert_eq!(r.circuit.phase_range(Phase::Decode), Some(1..1));
    }

    #[test]
    fn steane_h_is_one_transversal_micro_phase() {
        let r = robustify(&single_h(), &InnerCode::steane(1).unwrap(), &RobustifyConfig::default()).unwrap();
        let vop = r.circuit.phase_range(Phase::Vop1).unwrap();
        assert_eq!(vop.len(), 7);
        assert!(r.circuit.steps[vop.clone()].iter().all(|s| matches!(s, Step::Gate(Gate::H(_)))));
        let ops: Vec<&MicroPhase> = r.micro.iter().filter(|m| matches!(m.kind, MicroKind::Logical(_))).collect();
        assert_eq!(ops.len(), 1);
        assert_eq!((ops[0].start, ops[0].end), (vop.start, vop.end));
    }

    #[test]
    fn micro_phases_tile_the_circuit() {
        let c = ProtocolCircuit::parse(TINY).unwrap();
        let r = robustify(&c, &InnerCode::steane(1).unwrap(), &RobustifyConfig::default()).unwrap();
        let mut t = 0;
        for m in &r.micro {
            assert_eq!(m.start, t);
            assert!(m.end > m.start);
            t = m.end;
        }
        assert_eq!(t, r.circuit.len());
        let ts = r.t_star()[0];
        assert!(matches!(r.circuit.steps[ts - 1], Step::Prover { .. }));
        assert_eq!(r.padding, 28);
        assert!(r.annotations().contains("TSTAR 1"));
    }

    #[test]
    fn robustified_text_round_trip() {
        let c = ProtocolCircuit::parse(TINY).unwrap();
        let r = robustify(&c, &InnerCode::steane(1).unwrap(), &RobustifyConfig::default()).unwrap();
        let text = r.circuit.to_text();
        assert_eq!(ProtocolCircuit::parse(&text).unwrap(), r.circuit);
    }

    #[test]
    fn value_is_preserved_for_several_strategies() {
        let c = ProtocolCircuit::parse(TINY).unwrap();
        let honest = ProverStrategy::parse(TINY_STRATEGY).unwrap();
        let mut hadamard = ProverStrategy::identity(1, 1);
        hadamard.unitaries[0] = vec![Gate::H(0)];
        for inner in [InnerCode::trivial(), InnerCode::steane(1).unwrap()] {
            let r = robustify(&c, &inner, &RobustifyConfig::default()).unwrap();
            for s in [&honest, &hadamard, &ProverStrategy::identity(1, 1)] {
                let before = circuit_value_fixed_strategy(&c, s).unwrap();
                let after = circuit_value_fixed_strategy(&r.circuit, &r.wrap_strategy(s).unwrap()).unwrap();
                assert_eq!(before, after);
            }
        }
    }

    fn toffoli_circuit() -> ProtocolCircuit {
        let t = "CIRCUIT n=3 m=1 k=1\nPHASE VOP1\nH v1\nH v2\nTOFFOLI v1 v2 v3\nPHASE COPYQ\nCNOT n1.1 m1.1\n\
                 PHASE PROVER\nPROVER 1 1\nPHASE COPYA\nCNOT m1.1 n1.1\nPHASE VOP2\nCNOT v1 v3\n";
        ProtocolCircuit::parse(t).unwrap()
    }

    #[test]
    fn toffoli_gadget_preserves_value_on_trivial_code() {
        let c = toffoli_circuit();
        let mut flip = ProverStrategy::identity(1, 1);
        flip.unitaries[0] = vec![Gate::X(0)];
        for copies in [0, 1, 2] {
            let r = robustify(&c, &InnerCode::trivial(), &RobustifyConfig { padding: Some(1), copies }).unwrap();
            assert_eq!(r.resources.toffoli, 1);
            for s in [&flip, &ProverStrategy::identity(1, 1)] {
                let before = circuit_value_fixed_strategy(&c, s).unwrap();
                let after = circuit_value_fixed_strategy(&r.circuit, &r.wrap_strategy(s).unwrap()).unwrap();
                assert_eq!(before, after, "copies={copies}");
            }
        }
    }

    #[test]
    fn rejects_gates_outside_the_verifier_set() {
        let c = ProtocolCircuit::parse("CIRCUIT n=1 m=1 k=1\nPHASE VOP1\nT v1\n").unwrap();
        assert!(matches!(
            robustify(&c, &InnerCode::trivial(), &RobustifyConfig::default()),
            Err(Error::InvalidCircuit { gate: 1, .. })
        ));
    }

    fn oracle_rdm(snap: &SparseState, qs: &[usize]) -> crate::matrix::Matrix {
        snap.rdm(qs)
    }

    #[test]
    fn frames_match_the_honest_run() {
        let c = ProtocolCircuit::parse(TINY).unwrap();
        let r = robustify(&c, &InnerCode::steane(1).unwrap(), &RobustifyConfig::default()).unwrap();
        let s = r.wrap_strategy(&ProverStrategy::parse(TINY_STRATEGY).unwrap()).unwrap();
        let snaps = run_with_strategy(&r.circuit, &s).unwrap();
        let nq = r.circuit.n_qubits();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut checked = 0;
        for t in (0..=r.circuit.len()).step_by(3) {
            let (f, off) = r.frame_at(t).unwrap();
            for _ in 0..4 {
                let mut qs: Vec<usize> = Vec::new();
                while qs.len() < 2 {
                    let q = rng.gen_range(0..nq);
                    if !qs.contains(&q) {
                        qs.push(q);
                    }
                }
                if let Ok(rho) = f.reduced_density(off, &qs) {
                    assert_eq!(rho, oracle_rdm(&snaps[t], &qs), "t={t} {qs:?}");
                    checked += 1;
                }
            }
            // a weight-one Z on every verifier qubit is always simulatable
            let z = Pauli::single(nq, 0, Letter::Z);
            assert_eq!(f.expectation(off, &z).unwrap(), snaps[t].expectation(&z.embed(&(0..nq).collect::<Vec<_>>(), snaps[t].n_qubits()).unwrap()));
        }
        assert!(checked > 100, "{checked}");
        assert_eq!(snaps.last().unwrap().prob_one(r.circuit.output), Amp::ONE);
    }
}
