//! The zero-knowledge simulator: reduced states of the robustified
//! history state computed from the circuit alone, never from the prover's
//! strategy.
//!
//! Everything works on the logical registers a question tuple touches.
//! Clock and flag registers are classical functions of t; the verifier and
//! message registers of snapshot t come from the encoding frames of the
//! robustified circuit, and cross terms between t < t' pull the gates in
//! between back onto snapshot t. A prover's gate is skipped: it only ever
//! sits between t and t' when that prover was asked STAR, and after
//! de-starring its reflection is sigma_X on the P flag.

pub mod adaptive;
pub mod rep;

use std::cell::RefCell;

use rand::Rng;

use crate::error::{Error, Result};
use crate::gates::Gate;
use crate::history::{FlagKind, FlagSchedule, LogicalReg, RegisterMap};
use crate::honest::{AnswerDistribution, AnswerVector, QuestionTuple, SUPPORT_LIMIT};
use crate::matrix::{DensityMatrix, Matrix};
use crate::pauli::{Pauli, PauliSum};
use crate::protocol::{Robustified, Step};
use crate::ring::Amp;
use crate::encoding::engine::gate_pauli_sum;

pub use adaptive::{simulate_adaptive, RefereeScript, Transcript};
pub use rep::{efficient_rep_trace, EfficientOperatorRep, RepBlock, RepTerm};

/// L
pub const L: usize = SUPPORT_LIMIT;

/// Counters kept across calls, for checking the size bounds.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SimStats {
    pub snapshots: usize,
    pub cross_terms: usize,
    pub intervals: usize,
    pub densities: usize,
    pub max_interval_terms: usize,
    pub max_density_terms: usize,
    pub max_width: usize,
    /// Reps that broke the 3L^2 / 3(T+1)L^2 / 4L bounds.
    pub bound_violations: usize,
}

pub struct Simulator {
    pub robust: Robustified,
    pub map: RegisterMap,
    pub flags: Vec<FlagSchedule>,
    stats: RefCell<SimStats>,
}

impl Simulator {
    pub fn new(robust: Robustified) -> Result<Simulator> {
        let c = &robust.circuit;
        c.validate()?;
        let mut t_star = vec![None; c.k];
        for (p, _, t) in c.prover_times() {
            if t_star[p].replace(t).is_some() {
                return Err(Error::InvalidCircuit { gate: t, msg: "the simulator needs one round".into() });
            }
        }
        let flags = t_star
            .into_iter()
            .enumerate()
            .map(|(i, t)| {
                t.map(|t_star| FlagSchedule { t_star })
                    .ok_or_else(|| Error::InvalidCircuit { gate: 0, msg: format!("prover {} never acts", i + 1) })
            })
            .collect::<Result<Vec<_>>>()?;
        let map = RegisterMap { t: c.len(), n: c.n, k: c.k, m: c.m };
        Ok(Simulator { robust, map, flags, stats: RefCell::new(SimStats::default()) })
    }

    /// T
    pub fn len(&self) -> usize {
        self.robust.circuit.len()
    }

    pub fn is_empty(&self) -> bool {
        self.robust.circuit.is_empty()
    }

    pub fn stats(&self) -> SimStats {
        self.stats.borrow().clone()
    }

    pub fn reset_stats(&self) {
        *self.stats.borrow_mut() = SimStats::default();
    }

    fn qubit_of(&self, r: LogicalReg) -> Result<usize> {
        let c = &self.robust.circuit;
        match r {
            LogicalReg::Verifier(v) if v < c.n => Ok(v),
            LogicalReg::Message { prover, j } if prover < c.k && j < c.m => Ok(c.message_qubit(prover, j)),
            _ => Err(Error::InvalidArgument(format!("{r} is not a verifier or message register"))),
        }
    }

    fn check_y(&self, y: &[LogicalReg], t: usize) -> Result<Vec<usize>> {
        if y.len() > 4 * L {
            return Err(Error::InvalidArgument(format!("{} registers, at most {}", y.len(), 4 * L)));
        }
        if t > self.len() {
            return Err(Error::IndexOutOfRange(t, self.len() + 1));
        }
        y.iter().map(|&r| self.qubit_of(r)).collect()
    }

    /// Tr_{not Y} |Delta_t><Delta_t| for verifier and message registers Y.
    pub fn sim_snapshot(&self, y: &[LogicalReg], t: usize) -> Result<DensityMatrix> {
        let qs = self.check_y(y, t)?;
        self.stats.borrow_mut().snapshots += 1;
        let (frame, off) = self.robust.frame_at(t)?;
        frame.reduced_density(off, &qs)
    }

    /// Tr_{not Y} |Delta_t><Delta_t'|, with prover gates between t and t'
    /// treated as the identity.
    pub fn cross_density(&self, y: &[LogicalReg], t: usize, t2: usize) -> Result<Matrix> {
        if t == t2 {
            return self.sim_snapshot(y, t);
        }
        if t > t2 {
            return Ok(self.cross_density(y, t2, t)?.adjoint());
        }
        let qs = self.check_y(y, t2)?;
        self.stats.borrow_mut().cross_terms += 1;
        let c = &self.robust.circuit;
        let n = c.n_qubits();
        // G† = g_{t+1}† ... g_{t2}†
        let mut g_dag = PauliSum::from_pauli(&Pauli::identity(n));
        let mut skipped: Option<usize> = None;
        for s in t + 1..=t2 {
            match c.steps[s - 1] {
                Step::Gate(Gate::Id) => {}
                Step::Gate(g) => {
                    if let Some(prover) = skipped {
                        if (0..c.m).any(|j| g.qubits().contains(&c.message_qubit(prover, j))) {
                            return Err(Error::Internal(format!(
                                "steps {}..{t2} reach from prover {} to a gate on its message",
                                t + 1,
                                prover + 1
                            )));
                        }
                    }
                    g_dag = g_dag.mul(&gate_pauli_sum(&g.inverse(), n));
                }
                Step::Prover { prover, .. } => skipped = Some(prover),
            }
        }
        let (frame, off) = self.robust.frame_at(t)?;
        let mut err = None;
        let m = Matrix::from_pauli_expectations(qs.len(), |w| {
            if err.is_some() {
                return Amp::ZERO;
            }
            let w = w.embed(&qs, n).expect("qubits in range");
            let mut v = Amp::ZERO;
            // Tr(R w) = <Delta_t| G† w |Delta_t>
            for (p, coef) in g_dag.mul(&PauliSum::from_pauli(&w)).sorted_terms() {
                match frame.expectation(off, &p) {
                    Ok(e) => v += coef * e,
                    Err(e) => {
                        err = Some(e);
                        return Amp::ZERO;
                    }
                }
            }
            v
        });
        match err {
            Some(e) => Err(e),
            None => Ok(m),
        }
    }

    /// The registers of the representation for `w`: its logical support.
    pub fn universe(&self, w: &QuestionTuple) -> Vec<LogicalReg> {
        w.logical_support(&self.map).into_iter().collect()
    }

    /// The density on the universe of `w` of the history state restricted
    /// to times t1..=t2, as a sum over pairs of times.
    pub fn sim_interval(&self, w: &QuestionTuple, t1: usize, t2: usize) -> Result<EfficientOperatorRep> {
        if t1 > t2 || t2 > self.len() {
            return Err(Error::InvalidArgument(format!("interval {t1}..{t2}")));
        }
        let universe = self.universe(w);
        for l in t1 + 1..=t2 {
            if !universe.contains(&LogicalReg::Clock(l)) {
                return Err(Error::InvalidArgument(format!("clock qubit {l} inside the interval is not asked about")));
            }
        }
        let y_pos: Vec<usize> = (0..universe.len())
            .filter(|&i| matches!(universe[i], LogicalReg::Verifier(_) | LogicalReg::Message { .. }))
            .collect();
        let y: Vec<LogicalReg> = y_pos.iter().map(|&i| universe[i]).collect();
        let mut terms = Vec::new();
        for t in t1..=t2 {
            for t2_ in t1..=t2 {
                let flags_agree = (0..self.map.k).all(|i| {
                    FlagKind::ALL.iter().all(|&kind| {
                        universe.contains(&LogicalReg::Flag { prover: i, kind })
                            || self.flags[i].get(kind, t) == self.flags[i].get(kind, t2_)
                    })
                });
                if !flags_agree {
                    continue;
                }
                let mut blocks = Vec::with_capacity(universe.len());
                for (i, r) in universe.iter().enumerate() {
                    let (a, b) = match *r {
                        LogicalReg::Clock(l) => (l <= t, l <= t2_),
                        LogicalReg::Flag { prover, kind } => (self.flags[prover].get(kind, t), self.flags[prover].get(kind, t2_)),
                        _ => continue,
                    };
                    blocks.push(RepBlock { regs: vec![i], matrix: Matrix::unit(2, usize::from(a), usize::from(b)) });
                }
                let r = self.cross_density(&y, t, t2_)?;
                let mut coef = Amp::ONE;
                if y.is_empty() {
                    // the overlap <Delta_t'|Delta_t>
                    coef = r.get(0, 0);
                    if coef.is_zero() {
                        continue;
                    }
                } else {
                    blocks.push(RepBlock { regs: y_pos.clone(), matrix: r });
                }
                terms.push(RepTerm { coef, blocks });
            }
        }
        let rep = EfficientOperatorRep { denom: (t2 - t1 + 1) as u64, universe, terms };
        let mut st = self.stats.borrow_mut();
        st.intervals += 1;
        st.max_interval_terms = st.max_interval_terms.max(rep.len());
        st.max_width = st.max_width.max(rep.width());
        if rep.len() > 3 * L * L || rep.width() > 4 * L {
            st.bound_violations += 1;
        }
        Ok(rep)
    }

    /// Maximal runs of times linked by asked-about clock qubits.
    pub fn intervals(&self, w: &QuestionTuple) -> Vec<(usize, usize)> {
        let support = w.logical_support(&self.map);
        let mut out = Vec::new();
        let mut start = 0;
        for t in 1..=self.len() + 1 {
            if t > self.len() || !support.contains(&LogicalReg::Clock(t)) {
                out.push((start, t - 1));
                start = t;
            }
        }
        out
    }

    /// A density on the logical support of `w` whose de-starred answer
    /// distribution equals the honest one.
    pub fn sim_density(&self, w: &QuestionTuple) -> Result<EfficientOperatorRep> {
        w.check(&self.map)?;
        let universe = self.universe(w);
        let mut terms = Vec::new();
        // the weight |I|/(T+1) of each interval cancels its own 1/|I|
        for (t1, t2) in self.intervals(w) {
            terms.extend(self.sim_interval(w, t1, t2)?.terms);
        }
        let rep = EfficientOperatorRep { denom: self.len() as u64 + 1, universe, terms };
        let mut st = self.stats.borrow_mut();
        st.densities += 1;
        st.max_density_terms = st.max_density_terms.max(rep.len());
        if rep.len() > 3 * (self.len() + 1) * L * L || rep.width() > 4 * L {
            st.bound_violations += 1;
        }
        Ok(rep)
    }

    /// alpha(a) = Tr(Enc(rho) W~(a)) for every answer vector, from the
    /// correlators of the de-starred observables.
    pub fn distribution_from_rep(&self, w: &QuestionTuple, rho: &EfficientOperatorRep) -> Result<AnswerDistribution> {
        let slots = w.slots();
        let mut e = Vec::with_capacity(1 << slots.len());
        for u in 0..(1usize << slots.len()) {
            let bits: Vec<bool> = (0..slots.len()).map(|i| u >> i & 1 == 1).collect();
            let v = match w.term(&self.map, &slots, &bits, true) {
                None => Amp::ZERO,
                Some(term) => {
                    let op = EfficientOperatorRep::pauli_product(&rho.universe, term.phase, &term.paulis)?;
                    efficient_rep_trace(rho, &op)?
                }
            };
            e.push(v);
        }
        Ok(AnswerDistribution::from_correlators(slots, rho.denom, e))
    }

    pub fn answer_distribution(&self, w: &QuestionTuple) -> Result<AnswerDistribution> {
        let rho = self.sim_density(w)?;
        self.distribution_from_rep(w, &rho)
    }

    /// One answer vector distributed as alpha, sampled one bit at a time.
    pub fn sample_answers(&self, w: &QuestionTuple, rho: &EfficientOperatorRep, rng: &mut impl Rng) -> Result<AnswerVector> {
        let d = self.distribution_from_rep(w, rho)?;
        let n = d.slots.len();
        let free: Vec<usize> = (0..n).collect();
        let bits = d
            .sample_conditional(&vec![false; n], &free, rng)
            .ok_or_else(|| Error::Internal("answer distribution is empty".into()))?;
        Ok(AnswerVector::from_slots(w, &d.slots, &bits))
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::encoding::InnerCode;
    use crate::history::HistoryStateSpec;
    use crate::oracle::HonestOracle;
    use crate::protocol::tests::{TINY, TINY_STRATEGY};
    use crate::protocol::{robustify, ProtocolCircuit, ProverStrategy, RobustifyConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn setup(code: InnerCode) -> (Simulator, HonestOracle) {
        let c = ProtocolCircuit::parse(TINY).unwrap();
        let r = robustify(&c, &code, &RobustifyConfig::default()).unwrap();
        let s = r.wrap_strategy(&ProverStrategy::parse(TINY_STRATEGY).unwrap()).unwrap();
        let spec = HistoryStateSpec::new(&r.circuit, &s).unwrap();
        (Simulator::new(r).unwrap(), HonestOracle::new(&spec).unwrap())
    }

    #[test]
    fn first_snapshot_is_all_zero() {
        let (sim, _) = setup(InnerCode::trivial());
        let rho = sim.sim_snapshot(&[LogicalReg::Verifier(0), LogicalReg::Verifier(1)], 0).unwrap();
        assert_eq!(rho, Matrix::unit(4, 0, 0));
    }

    #[test]
    fn snapshot_rejects_large_or_bad_registers() {
        let (sim, _) = setup(InnerCode::trivial());
        assert!(sim.sim_snapshot(&[LogicalReg::Clock(1)], 0).is_err());
        assert!(sim.sim_snapshot(&[LogicalReg::Verifier(0)], sim.len() + 1).is_err());
        let big: Vec<LogicalReg> = (0..4 * L + 1).map(LogicalReg::Verifier).collect();
        assert!(matches!(sim.sim_snapshot(&big, 0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn intervals_partition_the_times() {
        let (sim, _) = setup(InnerCode::trivial());
        let map = sim.map;
        let w: QuestionTuple = "PV1: Z2X3,I1I2,I1I2,I1I2,I1I2,I1I2".parse().unwrap();
        let iv = sim.intervals(&w);
        assert_eq!(iv[0], (0, 0));
        assert_eq!(iv[1], (1, 3));
        assert_eq!(iv.iter().map(|(a, b)| b - a + 1).sum::<usize>(), map.t + 1);
    }

    #[test]
    fn identity_tuple_gives_zero_answers() {
        let (sim, _) = setup(InnerCode::trivial());
        let w = QuestionTuple::default();
        let rho = sim.sim_density(&w).unwrap();
        assert_eq!(rho.len(), sim.len() + 1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(sim.sample_answers(&w, &rho, &mut rng).unwrap(), AnswerVector::default());
    }

    #[test]
    fn star_answer_is_a_fair_coin() {
        let (sim, oracle) = setup(InnerCode::trivial());
        let w: QuestionTuple = "PP1: STAR".parse().unwrap();
        let d = sim.answer_distribution(&w).unwrap();
        assert_eq!(d.table[0], d.table[1]);
        assert_eq!(d, oracle.distribution(&w).unwrap());
    }

    fn agree_on_random_tuples(code: InnerCode, count: usize, seed: u64) {
        let (sim, oracle) = setup(code);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut done = 0;
        let mut tries = 0;
        while done < count {
            tries += 1;
            assert!(tries < 20 * count, "too many rejections");
            let w = QuestionTuple::random(&sim.map, &[sim.flags[0].t_star], &mut rng, 8);
            let d = match sim.answer_distribution(&w) {
                Ok(d) => d,
                Err(Error::BudgetExceeded(_)) => continue,
                Err(e) => panic!("{w}: {e}"),
            };
            assert_eq!(d, oracle.distribution(&w).unwrap(), "{w}");
            done += 1;
        }
        let st = sim.stats();
        assert_eq!(st.bound_violations, 0);
        assert!(st.max_width <= 4 * L);
    }

    #[test]
    fn simulator_matches_oracle_trivial_code() {
        agree_on_random_tuples(InnerCode::trivial(), 30, 2);
    }

    #[test]
    fn simulator_matches_oracle_steane() {
        agree_on_random_tuples(InnerCode::steane(1).unwrap(), 15, 3);
    }

    #[test]
    fn interval_pieces_are_densities() {
        let (sim, _) = setup(InnerCode::trivial());
        let t_star = sim.flags[0].t_star;
        let w: QuestionTuple = format!(
            "PV1: Z{}I1,X{}I1,I1I2,I1I2,I1I2,I1I2 | PP1: STAR",
            t_star - 1,
            t_star
        )
        .parse()
        .unwrap();
        for (t1, t2) in sim.intervals(&w) {
            let rep = sim.sim_interval(&w, t1, t2).unwrap();
            rep.validate().unwrap();
            let m = rep.to_dense().unwrap();
            assert!(m.is_hermitian());
            assert_eq!(m.trace(), Amp::int(rep.denom as i64));
            assert!(m.is_psd(), "{t1}..{t2}");
        }
    }
}
