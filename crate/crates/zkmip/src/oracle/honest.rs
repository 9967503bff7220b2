//! Honest answer distributions computed directly from the snapshots of an
//! honest run: every correlator is a sum of cross inner products between
//! snapshots, with the outer code handled by its explicit codespace
//! projector and the prover reflection applied to the ket.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::gates::Gate;
use crate::history::{FlagKind, HistoryStateSpec, LogicalReg};
use crate::honest::{AnswerDistribution, ProverQuestion, QuestionTuple, Slot};
use crate::matrix::Matrix;
use crate::oracle::sparse::{cross_rdm, SparseState};
use crate::pauli::{Letter, Pauli};
use crate::ring::Amp;

/// Bound on the number of answer slots of a tuple.
pub const MAX_SLOTS: usize = 16;

pub struct HonestOracle {
    pub spec: HistoryStateSpec,
    snaps: Vec<SparseState>,
    /// |0_L><0_L| of the four-share code.
    zero_proj: Matrix,
    logical_x: Matrix,
}

/// Operator of one correlator, register by register.
#[derive(Default)]
struct Correlator {
    phase: u8,
    /// 2x2 logical matrices of clock and verifier registers.
    logical: BTreeMap<LogicalReg, Matrix>,
    message: BTreeMap<LogicalReg, Letter>,
    flags: Vec<(usize, FlagKind)>,
    stars: Vec<usize>,
}

impl HonestOracle {
    pub fn new(spec: &HistoryStateSpec) -> Result<HonestOracle> {
        let snaps = spec.snapshots()?;
        let mut zero_proj = Matrix::identity(16);
        for g in ["XXXX", "ZIIZ", "IZZI", "ZZII"] {
            let p: Pauli = g.parse()?;
            let half = Matrix::identity(16).add(&Matrix::pauli(&p)).scale(Amp::half_pow(1));
            zero_proj = zero_proj.mul(&half);
        }
        let logical_x = Matrix::pauli(&"XIIX".parse()?);
        Ok(HonestOracle { spec: spec.clone(), snaps, zero_proj, logical_x })
    }

    pub fn snapshot(&self, t: usize) -> &SparseState {
        &self.snaps[t]
    }

    /// <L_a| sigma |L_b> for a Pauli on the four shares.
    fn share_matrix(&self, letters: [Letter; 4]) -> Matrix {
        let s = Matrix::pauli(&Pauli::from_letters(&letters));
        let mut m = Matrix::zeros(2);
        for a in 0..2 {
            for b in 0..2 {
                let mut op = s.clone();
                if a == 1 {
                    op = self.logical_x.mul(&op);
                }
                if b == 1 {
                    op = op.mul(&self.logical_x);
                }
                m.set(a, b, op.trace_product(&self.zero_proj));
            }
        }
        m
    }

    fn correlator(&self, w: &QuestionTuple, slots: &[Slot], u: usize) -> Result<Correlator> {
        let map = &self.spec.map;
        let mut c = Correlator::default();
        let mut shares: BTreeMap<usize, [Letter; 4]> = BTreeMap::new();
        for (_, slot) in slots.iter().enumerate().filter(|(i, _)| u >> i & 1 == 1) {
            match *slot {
                Slot::Verifier(r, j) => {
                    for (q, l) in w.verifier[&r][j].items() {
                        let cur = &mut shares.entry(q).or_insert([Letter::I; 4])[r];
                        let p = Pauli::from_letters(&[*cur]).mul(&Pauli::from_letters(&[l]))?;
                        c.phase = (c.phase + p.phase()) & 3;
                        *cur = p.letter(0);
                    }
                }
                Slot::Prover(prover) => match w.prover[&prover] {
                    ProverQuestion::Q(j) => {
                        c.message.insert(LogicalReg::Message { prover, j }, Letter::X);
                    }
                    ProverQuestion::A(j) => {
                        c.message.insert(LogicalReg::Message { prover, j }, Letter::Z);
                    }
                    ProverQuestion::QF => c.flags.push((prover, FlagKind::Q)),
                    ProverQuestion::AF => c.flags.push((prover, FlagKind::A)),
                    ProverQuestion::Star => c.stars.push(prover),
                },
            }
        }
        for (q, letters) in shares {
            let reg = map
                .verifier_local(q)
                .ok_or_else(|| Error::IndexOutOfRange(q, map.shares()))?;
            c.logical.insert(reg, self.share_matrix(letters));
        }
        Ok(c)
    }

    /// Delta_t with each starred prover's reflection applied: P before the
    /// prover acts, P† after.
    fn star_ket(&self, t: usize, stars: &[usize]) -> Result<SparseState> {
        let mut s = self.snaps[t].clone();
        for &i in stars {
            let u = self.spec.prover_unitary(i);
            if t < self.spec.t_star(i) {
                s.run(&u)?;
            } else {
                let inv: Vec<Gate> = u.iter().rev().map(Gate::inverse).collect();
                s.run(&inv)?;
            }
        }
        Ok(s)
    }

    /// Exact distribution of the honest players' answers to `w`.
    pub fn distribution(&self, w: &QuestionTuple) -> Result<AnswerDistribution> {
        w.check(&self.spec.map)?;
        let slots = w.slots();
        if slots.len() > MAX_SLOTS {
            return Err(Error::CapacityExceeded(format!("{} answer slots", slots.len())));
        }
        let big_t = self.spec.len();
        let k = self.spec.circuit.k;
        // untouched clock qubits: prefix counts over l = 1..=T
        let touched_clock: Vec<bool> = (0..=big_t)
            .map(|l| l >= 1 && w.logical_support(&self.spec.map).contains(&LogicalReg::Clock(l)))
            .collect();
        let mut untouched_before = vec![0usize; big_t + 1];
        for l in 1..=big_t {
            untouched_before[l] = untouched_before[l - 1] + usize::from(!touched_clock[l]);
        }
        // all touched verifier and message qubits, as snapshot indices
        let mut keep_regs: Vec<LogicalReg> = w.logical_support(&self.spec.map).into_iter().collect();
        keep_regs.retain(|r| matches!(r, LogicalReg::Verifier(_) | LogicalReg::Message { .. }));
        let keep: Vec<usize> = keep_regs
            .iter()
            .map(|r| self.spec.snapshot_index(*r).expect("verifier or message"))
            .collect();

        let mut kets: HashMap<(usize, Vec<usize>), SparseState> = HashMap::new();
        let mut rdms: HashMap<(usize, usize, Vec<usize>), Matrix> = HashMap::new();
        let mut e = Vec::with_capacity(1 << slots.len());
        for u in 0..(1usize << slots.len()) {
            let c = self.correlator(w, &slots, u)?;
            // operator on the kept qubits, keep[0] lowest
            let mut op: Option<Matrix> = None;
            for reg in &keep_regs {
                let m = match reg {
                    LogicalReg::Verifier(_) => c.logical.get(reg).cloned().unwrap_or_else(|| Matrix::identity(2)),
                    _ => Matrix::pauli(&Pauli::from_letters(&[c.message.get(reg).copied().unwrap_or(Letter::I)])),
                };
                op = Some(match op {
                    None => m,
                    Some(o) => o.kron_high(&m),
                });
            }
            let op = op.unwrap_or_else(|| Matrix::identity(1));
            let mut stars = c.stars.clone();
            stars.sort_unstable();
            let mut total = Amp::ZERO;
            for t in 0..=big_t {
                let fk: Vec<[bool; 3]> = (0..k)
                    .map(|i| {
                        let mut f = self.spec.flags[i].bits(t);
                        if stars.contains(&i) {
                            f[FlagKind::P.index()] ^= true;
                        }
                        f
                    })
                    .collect();
                for t2 in 0..=big_t {
                    let (lo, hi) = (t.min(t2), t.max(t2));
                    // clock qubits lo+1..=hi differ between the two times
                    if untouched_before[hi] != untouched_before[lo]
                        || (lo + 1..=hi).any(|l| !c.logical.contains_key(&LogicalReg::Clock(l)))
                    {
                        continue;
                    }
                    let fb = self.spec.flags_at(t2);
                    let flags_ok = (0..k).all(|i| {
                        FlagKind::ALL.iter().all(|&kind| {
                            let x = c.flags.contains(&(i, kind));
                            (fk[i][kind.index()] != fb[i][kind.index()]) == x
                        })
                    });
                    if !flags_ok {
                        continue;
                    }
                    let mut factor = Amp::i_pow(c.phase);
                    for (reg, m) in &c.logical {
                        if let LogicalReg::Clock(l) = *reg {
                            factor *= m.get(usize::from(self.spec.clock_bit(l, t2)), usize::from(self.spec.clock_bit(l, t)));
                        }
                    }
                    if factor.is_zero() {
                        continue;
                    }
                    let key = (t, t2, stars.clone());
                    if !rdms.contains_key(&key) {
                        let ket = match kets.get(&(t, stars.clone())) {
                            Some(s) => s,
                            None => {
                                let s = self.star_ket(t, &stars)?;
                                kets.entry((t, stars.clone())).or_insert(s)
                            }
                        };
                        rdms.insert(key.clone(), cross_rdm(ket, &self.snaps[t2], &keep));
                    }
                    // Tr(op R) with R = Tr_rest |ket><Delta_t2|
                    total += factor * op.trace_product(&rdms[&key]);
                }
            }
            e.push(total);
        }
        Ok(AnswerDistribution::from_correlators(slots, big_t as u64 + 1, e))
    }
}

/// The exact answer distribution of the honest players on the history
/// state of `spec`.
pub fn honest_distribution(spec: &HistoryStateSpec, w: &QuestionTuple) -> Result<AnswerDistribution> {
    HonestOracle::new(spec)?.distribution(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::honest::AnswerVector;
    use crate::protocol::tests::{TINY, TINY_STRATEGY};
    use crate::protocol::{ProtocolCircuit, ProverStrategy};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn oracle() -> HonestOracle {
        let c = ProtocolCircuit::parse(TINY).unwrap();
        let s = ProverStrategy::parse(TINY_STRATEGY).unwrap();
        HonestOracle::new(&HistoryStateSpec::new(&c, &s).unwrap()).unwrap()
    }

    #[test]
    fn identity_question_is_a_point_mass() {
        let o = oracle();
        let d = o.distribution(&QuestionTuple::default()).unwrap();
        assert_eq!(d.table, vec![Amp::int(10)]);
        assert_eq!(d.denom, 10);
    }

    #[test]
    fn star_alone_is_a_fair_coin() {
        let o = oracle();
        let w: QuestionTuple = "PP1: STAR".parse().unwrap();
        let d = o.distribution(&w).unwrap();
        assert_eq!(d.table, vec![Amp::int(5), Amp::int(5)]);
    }

    #[test]
    fn output_register_reads_one_at_the_end() {
        // the two answers multiply to the eigenvalue of Z(out) Z(C_T)
        let o = oracle();
        let map = o.spec.map;
        let out = map.local_of(LogicalReg::Verifier(1)).unwrap() + 1;
        let last = map.t;
        let w: QuestionTuple = format!(
            "PV1: Z{out}Z{last},I1I2,I1I2,I1I2,I1I2,I1I2 | PV2: Z{out}Z{last},I1I2,I1I2,I1I2,I1I2,I1I2"
        )
        .parse()
        .unwrap();
        let d = o.distribution(&w).unwrap();
        // product of both answers is the logical Z(out) Z(C_T) eigenvalue
        let mut parity_one = Amp::ZERO;
        for x in 0..4 {
            if x == 1 || x == 2 {
                parity_one += d.table[x];
            }
        }
        // out flips to 1 exactly at the last step, when C_T does
        assert_eq!(parity_one, Amp::ZERO);
        assert_eq!(d.total(), Amp::int(10));
    }

    #[test]
    fn random_tuples_give_distributions() {
        let o = oracle();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..25 {
            let w = QuestionTuple::random(&o.spec.map, &[o.spec.t_star(0)], &mut rng, 8);
            let d = o.distribution(&w).unwrap();
            assert_eq!(d.total(), Amp::int(10), "{w}");
            for (x, p) in d.table.iter().enumerate() {
                assert!(p.is_real() && p.real_sign() != std::cmp::Ordering::Less, "{w} {x} {p}");
            }
            let bits = vec![false; d.slots.len()];
            let a = AnswerVector::from_slots(&w, &d.slots, &bits);
            assert_eq!(d.prob(&w, &a), d.table[0]);
        }
    }
}
