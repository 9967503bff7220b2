//! History states of a protocol run against a fixed strategy: a unary
//! clock, the snapshot after each timestep, and three flags per prover
//! marking question, prover gate and answer.

use std::fmt;

use crate::error::{Error, Result};
use crate::gates::Gate;
use crate::oracle::sparse::SparseState;
use crate::protocol::{run_with_strategy, ProtocolCircuit, ProverStrategy, Step};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FlagKind {
    Q,
    P,
    A,
}

impl FlagKind {
    pub const ALL: [FlagKind; 3] = [FlagKind::Q, FlagKind::P, FlagKind::A];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Flags of one prover, switching on at t*-1, t* and t*+1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FlagSchedule {
    pub t_star: usize,
}

impl FlagSchedule {
    pub fn get(&self, kind: FlagKind, t: usize) -> bool {
        match kind {
            FlagKind::Q => t + 1 >= self.t_star,
            FlagKind::P => t >= self.t_star,
            FlagKind::A => t > self.t_star,
        }
    }

    pub fn bits(&self, t: usize) -> [bool; 3] {
        FlagKind::ALL.map(|f| self.get(f, t))
    }
}

/// A qubit of the unencoded history state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LogicalReg {
    /// Clock qubit 1..=T; reads 1 at time t iff its index is at most t.
    Clock(usize),
    /// Verifier qubit (0-based) of the circuit.
    Verifier(usize),
    Message { prover: usize, j: usize },
    Flag { prover: usize, kind: FlagKind },
}

impl fmt::Display for LogicalReg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            LogicalReg::Clock(l) => write!(f, "C{l}"),
            LogicalReg::Verifier(v) => write!(f, "V{}", v + 1),
            LogicalReg::Message { prover, j } => write!(f, "M{}.{}", prover + 1, j + 1),
            LogicalReg::Flag { prover, kind } => write!(f, "F{}.{kind:?}", prover + 1),
        }
    }
}

/// Which player holds what. The clock and verifier qubits are encoded in
/// the 4-qubit outer code and verifier player r holds share r of each,
/// clock qubits first; prover player i holds its flags, private register
/// and message register.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RegisterMap {
    pub t: usize,
    pub n: usize,
    pub k: usize,
    pub m: usize,
}

pub const VERIFIER_PLAYERS: usize = 4;

impl RegisterMap {
    /// Number of shares held by each verifier player.
    pub fn shares(&self) -> usize {
        self.t + self.n
    }

    /// Logical register of a verifier player's 0-based local qubit.
    pub fn verifier_local(&self, q: usize) -> Option<LogicalReg> {
        if q < self.t {
            Some(LogicalReg::Clock(q + 1))
        } else if q < self.t + self.n {
            Some(LogicalReg::Verifier(q - self.t))
        } else {
            None
        }
    }

    pub fn local_of(&self, r: LogicalReg) -> Option<usize> {
        match r {
            LogicalReg::Clock(l) if (1..=self.t).contains(&l) => Some(l - 1),
            LogicalReg::Verifier(v) if v < self.n => Some(self.t + v),
            _ => None,
        }
    }
}

impl fmt::Display for RegisterMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 1..=VERIFIER_PLAYERS {
            writeln!(f, "PV{r} qubits 1-{}: share {r} of C1-C{}", self.t, self.t)?;
            writeln!(f, "PV{r} qubits {}-{}: share {r} of V1-V{}", self.t + 1, self.t + self.n, self.n)?;
        }
        for i in 1..=self.k {
            writeln!(f, "PP{i}: F{i}.Q F{i}.P F{i}.A, P{i}, M{i}.1-M{i}.{}", self.m)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct HistoryStateSpec {
    pub circuit: ProtocolCircuit,
    pub strategy: ProverStrategy,
    pub flags: Vec<FlagSchedule>,
    pub map: RegisterMap,
}

impl HistoryStateSpec {
    /// Requires each prover to act exactly once.
    pub fn new(circuit: &ProtocolCircuit, strategy: &ProverStrategy) -> Result<HistoryStateSpec> {
        circuit.validate()?;
        let mut t_star = vec![None; circuit.k];
        for (p, _, t) in circuit.prover_times() {
            if t_star[p].replace(t).is_some() {
                return Err(Error::InvalidCircuit { gate: t, msg: "history states need one round".into() });
            }
        }
        let flags = t_star
            .iter()
            .enumerate()
            .map(|(i, t)| {
                t.map(|t_star| FlagSchedule { t_star })
                    .ok_or_else(|| Error::InvalidCircuit { gate: 0, msg: format!("prover {} never acts", i + 1) })
            })
            .collect::<Result<Vec<_>>>()?;
        let map = RegisterMap { t: circuit.len(), n: circuit.n, k: circuit.k, m: circuit.m };
        Ok(HistoryStateSpec { circuit: circuit.clone(), strategy: strategy.clone(), flags, map })
    }

    /// T
    pub fn len(&self) -> usize {
        self.circuit.len()
    }

    pub fn is_empty(&self) -> bool {
        self.circuit.is_empty()
    }

    pub fn t_star(&self, prover: usize) -> usize {
        self.flags[prover].t_star
    }

    pub fn flags_at(&self, t: usize) -> Vec<[bool; 3]> {
        self.flags.iter().map(|f| f.bits(t)).collect()
    }

    pub fn clock_bit(&self, l: usize, t: usize) -> bool {
        l <= t
    }

    /// Qubits of the snapshot register: verifier, messages, private.
    pub fn snapshot_qubits(&self) -> usize {
        self.circuit.n + self.strategy.n_qubits()
    }

    /// Index in the snapshot register of a verifier or message qubit.
    pub fn snapshot_index(&self, r: LogicalReg) -> Option<usize> {
        match r {
            LogicalReg::Verifier(v) => Some(v),
            LogicalReg::Message { prover, j } => Some(self.circuit.message_qubit(prover, j)),
            _ => None,
        }
    }

    /// Prover i's unitary on the snapshot register.
    pub fn prover_unitary(&self, prover: usize) -> Vec<Gate> {
        self.strategy.unitary_global(prover, self.circuit.n)
    }

    /// Gates of timestep t (1-based) on the snapshot register.
    pub fn step_gates(&self, t: usize) -> Vec<Gate> {
        match self.circuit.steps[t - 1] {
            Step::Gate(Gate::Id) => vec![],
            Step::Gate(g) => vec![g],
            Step::Prover { prover, .. } => self.prover_unitary(prover),
        }
    }

    /// All T+1 snapshots.
    pub fn snapshots(&self) -> Result<Vec<SparseState>> {
        run_with_strategy(&self.circuit, &self.strategy)
    }
}

/// Term t of the history state: |unary(t)> |Delta_t> |f(t)>.
#[derive(Clone, Debug)]
pub struct SnapshotVector {
    pub t: usize,
    pub clock: Vec<bool>,
    pub delta: SparseState,
    pub flags: Vec<[bool; 3]>,
}

pub fn snapshot_vector(spec: &HistoryStateSpec, t: usize) -> Result<SnapshotVector> {
    if t > spec.len() {
        return Err(Error::IndexOutOfRange(t, spec.len() + 1));
    }
    let mut delta = SparseState::zero(spec.snapshot_qubits())?;
    delta.run(&spec.strategy.prep_global(spec.circuit.n))?;
    for s in 1..=t {
        delta.run(&spec.step_gates(s))?;
    }
    Ok(SnapshotVector {
        t,
        clock: (1..=spec.len()).map(|l| spec.clock_bit(l, t)).collect(),
        delta,
        flags: spec.flags_at(t),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::tests::{TINY, TINY_STRATEGY};
    use crate::ring::Amp;

    fn tiny() -> HistoryStateSpec {
        let c = ProtocolCircuit::parse(TINY).unwrap();
        HistoryStateSpec::new(&c, &ProverStrategy::parse(TINY_STRATEGY).unwrap()).unwrap()
    }

    #[test]
    fn flags_switch_around_the_prover_gate() {
        let s = tiny();
        assert_eq!(s.t_star(0), 4);
        let seq: Vec<[bool; 3]> = (0..=s.len()).map(|t| s.flags_at(t)[0]).collect();
        assert_eq!(seq[2], [false, false, false]);
        assert_eq!(seq[3], [true, false, false]);
        assert_eq!(seq[4], [true, true, false]);
        assert_eq!(seq[5], [true, true, true]);
        assert_eq!(seq[9], [true, true, true]);
    }

    #[test]
    fn propagation_identity() {
        let s = tiny();
        for t in 1..=s.len() {
            let mut prev = snapshot_vector(&s, t - 1).unwrap().delta;
            prev.run(&s.step_gates(t)).unwrap();
            let next = snapshot_vector(&s, t).unwrap();
            assert_eq!(prev, next.delta, "t={t}");
            assert_eq!(next.clock.iter().filter(|b| **b).count(), t);
            assert_eq!(prev.norm_sqr(), Amp::ONE);
        }
        let snaps = s.snapshots().unwrap();
        assert_eq!(snaps[6], snapshot_vector(&s, 6).unwrap().delta);
    }

    #[test]
    fn register_map_indexing() {
        let s = tiny();
        let m = s.map;
        assert_eq!(m.shares(), 11);
        assert_eq!(m.verifier_local(0), Some(LogicalReg::Clock(1)));
        assert_eq!(m.verifier_local(10), Some(LogicalReg::Verifier(1)));
        assert_eq!(m.verifier_local(11), None);
        assert_eq!(m.local_of(LogicalReg::Verifier(1)), Some(10));
        assert!(m.to_string().contains("PP1: F1.Q F1.P F1.A, P1, M1.1-M1.1"));
    }

    #[test]
    fn two_rounds_are_rejected() {
        let c = ProtocolCircuit::parse("CIRCUIT n=1 m=1 k=1\nPHASE PROVER\nPROVER 1 1\nPROVER 1 2\n").unwrap();
        assert!(HistoryStateSpec::new(&c, &ProverStrategy::identity(1, 1)).is_err());
    }
}
