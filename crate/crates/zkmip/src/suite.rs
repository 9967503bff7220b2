//! The ten acceptance checks, runnable from tests and from the command line.
//!
//! Every check compares two independently computed quantities and records
//! the largest deviation seen. In exact mode a check passes only on exact
//! equality; in float mode both sides are rounded to `f64` first and must
//! agree within [`FLOAT_TOLERANCE`].

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::codes::{CodewordTrace, StabilizerCode};
use crate::encoding::{encode_dense, order_consistency_check, toffoli_gadget_encoding, transversal_encoding, EncodedGateSequence, InnerCode, LogicalGate};
use crate::error::{Error, Result};
use crate::gap::{anchor, anchored_value, classical_value, parallel_repeat, OneRoundGame};
use crate::gates::Gate;
use crate::history::{HistoryStateSpec, LogicalReg};
use crate::honest::{Player, QuestionTuple, Slot};
use crate::matrix::Matrix;
use crate::oracle::{DenseState, HonestOracle, Tableau};
use crate::pauli::{Letter, Pauli};
use crate::protocol::{circuit_value_fixed_strategy, robustify, ProtocolCircuit, ProverStrategy, RobustifyConfig, Robustified};
use crate::ring::Amp;
use crate::simulator::adaptive::{total_variation, Ending, RefereeScript, ScriptLine, Session};
use crate::simulator::{Simulator, L};

pub const TINY_CIRCUIT: &str = include_str!("../fixtures/tiny.zkp");
pub const TINY_STRATEGY: &str = include_str!("../fixtures/tiny_honest.strategy");
pub const TINY_REFEREE: &str = include_str!("../fixtures/tiny.referee");

pub const FLOAT_TOLERANCE: f64 = 1e-9;
pub const TV_THRESHOLD: f64 = 0.02;
pub const CRITERIA: usize = 10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Arithmetic {
    #[default]
    Exact,
    Float,
}

/// Deliberate corruption used to check that the suite can fail.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// Negates stabilizer generator i of the code under test.
    FlipGeneratorSign(usize),
}

#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub circuit: ProtocolCircuit,
    pub strategy: ProverStrategy,
    pub referee: RefereeScript,
    /// Steane concatenation level used for the robustified fixture.
    pub level: usize,
    pub padding: Option<usize>,
    /// Largest physical subset |S| checked against the prefix engine.
    pub budget: usize,
    pub seed: u64,
    pub arithmetic: Arithmetic,
    pub fault: Option<Fault>,
    pub monte_carlo_runs: usize,
}

impl SuiteConfig {
    pub fn bundled() -> Result<SuiteConfig> {
        Ok(SuiteConfig {
            circuit: ProtocolCircuit::parse(TINY_CIRCUIT)?,
            strategy: ProverStrategy::parse(TINY_STRATEGY)?,
            referee: RefereeScript::parse(TINY_REFEREE)?,
            level: 1,
            padding: None,
            budget: 2,
            seed: 7,
            arithmetic: Arithmetic::Exact,
            fault: None,
            monte_carlo_runs: 100_000,
        })
    }

    fn inner(&self) -> Result<InnerCode> {
        if self.level == 0 {
            Ok(InnerCode::trivial())
        } else {
            InnerCode::steane(self.level)
        }
    }

    fn robustified(&self) -> Result<Robustified> {
        let cfg = RobustifyConfig { padding: self.padding, ..RobustifyConfig::default() };
        robustify(&self.circuit, &self.inner()?, &cfg)
    }

    fn rng(&self, criterion: usize) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed.wrapping_mul(1000).wrapping_add(criterion as u64))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriterionReport {
    pub id: usize,
    pub name: &'static str,
    pub pass: bool,
    pub checks: usize,
    pub max_deviation: f64,
    pub seconds: f64,
    pub detail: String,
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:>2} {:<22} checks={} max_dev={:.3e} time={:.1}s {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.checks,
            self.max_deviation,
            self.seconds,
            self.detail
        )
    }
}

/// Comparison counter for one criterion.
#[derive(Clone, Debug)]
struct Tally {
    arithmetic: Arithmetic,
    checks: usize,
    failures: usize,
    max_dev: f64,
    first_failure: Option<String>,
    notes: Vec<String>,
}

impl Tally {
    fn new(arithmetic: Arithmetic) -> Tally {
        Tally { arithmetic, checks: 0, failures: 0, max_dev: 0.0, first_failure: None, notes: vec![] }
    }

    fn fail(&mut self, what: impl FnOnce() -> String) {
        self.failures += 1;
        if self.first_failure.is_none() {
            self.first_failure = Some(what());
        }
    }

    fn dev(&mut self, d: f64) {
        if d > self.max_dev {
            self.max_dev = d;
        }
    }

    fn amp(&mut self, got: Amp, want: Amp, what: impl FnOnce() -> String) {
        self.checks += 1;
        let (gr, gi) = got.to_f64();
        let (wr, wi) = want.to_f64();
        let d = (gr - wr).hypot(gi - wi);
        self.dev(d);
        let ok = match self.arithmetic {
            Arithmetic::Exact => got == want,
            Arithmetic::Float => d <= FLOAT_TOLERANCE,
        };
        if !ok {
            self.fail(|| format!("{}: {got} vs {want}", what()));
        }
    }

    fn matrix(&mut self, got: &Matrix, want: &Matrix, what: impl Fn() -> String) {
        if got.dim() != want.dim() {
            self.checks += 1;
            self.fail(|| format!("{}: dimensions {} vs {}", what(), got.dim(), want.dim()));
            return;
        }
        let before = self.failures;
        let checks = self.checks;
        for r in 0..got.dim() {
            for c in 0..got.dim() {
                self.amp(got.get(r, c), want.get(r, c), &what);
            }
        }
        // one matrix counts as one check
        self.checks = checks + 1;
        if self.failures > before {
            self.failures = before + 1;
        }
    }

    fn ratio(&mut self, got: &BigRational, want: &BigRational, what: impl FnOnce() -> String) {
        self.checks += 1;
        let d = (got - want).abs().to_f64().unwrap_or(f64::INFINITY);
        self.dev(d);
        let ok = match self.arithmetic {
            Arithmetic::Exact => got == want,
            Arithmetic::Float => d <= FLOAT_TOLERANCE,
        };
        if !ok {
            self.fail(|| format!("{}: {got} vs {want}", what()));
        }
    }

    fn truth(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.fail(what);
        }
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }
}

/// Pure state prepared by a random Clifford+T circuit.
pub fn random_logical_state(k: usize, rng: &mut impl Rng) -> DenseState {
    let mut s = DenseState::zero(k).expect("small");
    for _ in 0..8 * k + 4 {
        let a = rng.gen_range(0..k);
        let g = match rng.gen_range(0..4) {
            0 => Gate::H(a),
            1 => Gate::T(a),
            2 => Gate::S(a),
            _ if k > 1 => Gate::Cnot(a, (a + rng.gen_range(1..k)) % k),
            _ => Gate::H(a),
        };
        s.apply(&g).expect("in range");
    }
    s
}

fn random_pauli(n: usize, max_weight: usize, rng: &mut impl Rng) -> Pauli {
    let w = rng.gen_range(0..=max_weight);
    let mut p = Pauli::identity(n);
    for _ in 0..w {
        p.set(rng.gen_range(0..n), Letter::from_code(rng.gen_range(1..4)));
    }
    if rng.gen_bool(0.5) {
        p = p.negate();
    }
    p
}

fn code_under_test(cfg: &SuiteConfig, inner: &InnerCode) -> StabilizerCode {
    let mut code = (**inner.code()).clone();
    if let Some(Fault::FlipGeneratorSign(i)) = cfg.fault {
        if let Some(g) = code.generators.get_mut(i) {
            *g = g.clone().negate();
        }
    }
    code
}

fn codeword_trace(cfg: &SuiteConfig, t: &mut Tally) -> Result<()> {
    let inner = InnerCode::steane(1)?;
    let code = code_under_test(cfg, &inner);
    let mut rng = cfg.rng(1);
    let states = (0..5)
        .map(|_| {
            let psi = random_logical_state(1, &mut rng);
            Ok((encode_dense(&inner, &psi, 1)?, psi))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut ws: Vec<Pauli> = inner.code().generators.clone();
    ws.extend((0..200).map(|_| random_pauli(7, 2, &mut rng)));
    for w in &ws {
        for (enc, psi) in &states {
            let want = enc.expectation(w);
            let got = match code.codeword_pauli_trace(w)? {
                CodewordTrace::Known(v) => v,
                CodewordTrace::Undefined => {
                    let d = code
                        .logical_decomposition(w)?
                        .ok_or_else(|| Error::Internal(format!("{w} has no logical decomposition")))?;
                    psi.expectation(&d.logical_pauli())
                }
            };
            t.amp(got, want, || format!("Tr(Enc(rho) {w})"));
        }
    }
    t.note(format!("{} Paulis x {} states", ws.len(), states.len()));
    Ok(())
}

fn subsets(n: usize, max: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = vec![vec![]];
    let mut frontier = out.clone();
    for _ in 0..max {
        let mut next = Vec::new();
        for s in &frontier {
            for q in s.last().map_or(0, |&l| l + 1)..n {
                let mut s2 = s.clone();
                s2.push(q);
                next.push(s2);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out.retain(|s| !s.is_empty());
    out
}

fn prefix_states(enc: &EncodedGateSequence, inputs: &[DenseState], t: usize) -> Result<Vec<DenseState>> {
    inputs
        .iter()
        .map(|s| {
            let mut s = s.clone();
            s.run(&enc.gates[..t])?;
            Ok(s)
        })
        .collect()
}

fn prepared(enc: &EncodedGateSequence, psi: &DenseState) -> Result<DenseState> {
    let mut s = encode_dense(&enc.inner, psi, enc.n_blocks)?;
    s.run(&enc.ancilla_preparation())?;
    Ok(s)
}

fn transversal_simulatability(cfg: &SuiteConfig, t: &mut Tally) -> Result<()> {
    let inner = InnerCode::steane(1)?;
    let mut rng = cfg.rng(2);
    for gate in [LogicalGate::H, LogicalGate::Cnot] {
        let k = gate.arity();
        let enc = transversal_encoding(&inner, gate, &(0..k).collect::<Vec<_>>())?;
        let inputs = (0..5).map(|_| prepared(&enc, &random_logical_state(k, &mut rng))).collect::<Result<Vec<_>>>()?;
        let sets = subsets(enc.n_qubits(), cfg.budget);
        for step in 0..=enc.len() {
            let states = prefix_states(&enc, &inputs, step)?;
            for s in &sets {
                let engine = enc.simulate_prefix_trace(step, s)?;
                for st in &states {
                    t.matrix(&engine, &st.rdm(s), || format!("{gate:?} t={step} S={s:?}"));
                }
            }
        }
        t.note(format!("{gate:?}: {} prefixes x {} subsets", enc.len() + 1, sets.len()));
    }
    Ok(())
}

fn order_consistency(_cfg: &SuiteConfig, t: &mut Tally) -> Result<()> {
    let code = StabilizerCode::steane();
    let mut strings = 0;
    for b in [false, true] {
        for s in code.codeword_support(b, 10)?.strings {
            strings += 1;
            let parity = s.iter().filter(|&&x| x).count() % 2 == 1;
            t.truth(parity == b, || format!("string {s:?} has parity {parity} for bit {b}"));
        }
    }
    t.truth(strings == 16, || format!("{strings} codeword strings, expected 16"));
    t.truth(order_consistency_check(&code, 2)?, || "order consistency check returned false".into());
    t.note(format!("{strings} strings"));
    Ok(())
}

/// sum_x 2^{-3/2} |x>^{copies+1} (Toffoli psi) with the gadget's block layout
/// on the trivial code: measured lines, magic lines, then copy groups.
fn gadget_branch_state(enc: &EncodedGateSequence, psi: &DenseState) -> Result<DenseState> {
    let g = enc.gadget.as_ref().ok_or_else(|| Error::Internal("not a gadget".into()))?;
    let mut lines = DenseState::zero(enc.n_blocks - 3)?;
    for j in 0..3 {
        lines.apply(&Gate::H(j))?;
    }
    for grp in &g.copy_groups {
        for j in 0..3 {
            lines.apply(&Gate::Cnot(j, grp[j] - 3))?;
        }
    }
    let mut out = psi.clone();
    out.apply(&Gate::Toffoli(0, 1, 2))?;
    let mut amps = vec![Amp::ZERO; 1 << enc.n_blocks];
    for (i, a) in lines.amps().iter().enumerate() {
        if a.is_zero() {
            continue;
        }
        for (j, b) in out.amps().iter().enumerate() {
            amps[(i & 7) | (j << 3) | ((i >> 3) << 6)] = *a * *b;
        }
    }
    Ok(DenseState::from_amps(amps))
}

fn toffoli_gadget(cfg: &SuiteConfig, t: &mut Tally) -> Result<()> {
    let mut rng = cfg.rng(4);
    let enc = toffoli_gadget_encoding(&InnerCode::trivial(), &[0, 1, 2], 1)?;
    let g = enc.gadget.clone().ok_or_else(|| Error::Internal("not a gadget".into()))?;
    let out_qubits: Vec<usize> = enc.output_blocks.clone();
    for i in 0..20 {
        let psi = random_logical_state(3, &mut rng);
        let start = prepared(&enc, &psi)?;
        let mut s = start.clone();
        s.run(&enc.gates)?;
        let mut want = psi.clone();
        want.apply(&Gate::Toffoli(0, 1, 2))?;
        t.matrix(&s.rdm(&out_qubits), &want.rdm(&[0, 1, 2]), || format!("input {i}: data after the gadget"));
        t.truth(s == gadget_branch_state(&enc, &psi)?, || format!("input {i}: final state is not the branch sum"));
        let mut u0 = start;
        u0.run(&enc.gates[..g.entangle_len])?;
        let m = u0.rdm(&g.measured);
        for x in 0..8 {
            t.amp(m.get(x, x), Amp::half_pow(3), || format!("input {i}: branch {x} after the entangling layer"));
        }
    }
    t.note("20 inputs, one copy of the measured lines");
    Ok(())
}

struct Fixture {
    robust: Robustified,
    spec: HistoryStateSpec,
}

fn fixture(cfg: &SuiteConfig) -> Result<Fixture> {
    let robust = cfg.robustified()?;
    let wrapped = robust.wrap_strategy(&cfg.strategy)?;
    let spec = HistoryStateSpec::new(&robust.circuit, &wrapped)?;
    Ok(Fixture { robust, spec })
}

fn snapshot_simulation(cfg: &SuiteConfig, t: &mut Tally) -> Result<()> {
    let f = fixture(cfg)?;
    let c = &f.robust.circuit;
    let sim = Simulator::new(f.robust.clone())?;
    let regs: Vec<LogicalReg> = (0..c.n)
        .map(LogicalReg::Verifier)
        .chain((0..c.k).flat_map(|p| (0..c.m).map(move |j| LogicalReg::Message { prover: p, j })))
        .collect();
    let mut rng = cfg.rng(5);
    let mut ys: Vec<Vec<LogicalReg>> = Vec::new();
    let mut refused = 0;
    while ys.len() < 50 {
        let size = rng.gen_range(1..=6.min(regs.len()));
        let y: Vec<LogicalReg> = rand::seq::index::sample(&mut rng, regs.len(), size).into_iter().map(|i| regs[i]).collect();
        match sim.sim_snapshot(&y, 0) {
            Ok(_) => ys.push(y),
            Err(Error::BudgetExceeded(_) | Error::InsufficientDistance { .. }) => {
                refused += 1;
                if refused > 10_000 {
                    return Err(Error::Internal("no simulatable register sets".into()));
                }
            }
            Err(e) => return Err(e),
        }
    }
    let idx: Vec<Vec<usize>> =
        ys.iter().map(|y| y.iter().map(|&r| f.spec.snapshot_index(r).expect("verifier or message")).collect()).collect();
    let mut tab = Tableau::zero(f.spec.snapshot_qubits());
    tab.run(&f.spec.strategy.prep_global(c.n))?;
    let mut declined = 0;
    for step in 0..=f.spec.len() {
        if step > 0 {
            tab.run(&f.spec.step_gates(step))?;
        }
        for (y, q) in ys.iter().zip(&idx) {
            match sim.sim_snapshot(y, step) {
                Ok(rho) => t.matrix(&rho, &tab.rdm(q), || format!("t={step} Y={y:?}")),
                // sets above the budget may fan out past the distance inside a gate
                Err(Error::BudgetExceeded(_)) if y.len() > cfg.budget => declined += 1,
                Err(e) => return Err(e),
            }
        }
    }
    t.note(format!(
        "T={} |Y|<=6, {refused} sets resampled, {declined} of {} (t, Y) pairs above the budget declined",
        f.spec.len(),
        ys.len() * (f.spec.len() + 1)
    ));
    Ok(())
}

fn setup(cfg: &SuiteConfig) -> Result<(Simulator, HonestOracle)> {
    let f = fixture(cfg)?;
    Ok((Simulator::new(f.robust)?, HonestOracle::new(&f.spec)?))
}

fn t_stars(sim: &Simulator) -> Vec<usize> {
    sim.flags.iter().map(|f| f.t_star).collect()
}

fn density_simulation(cfg: &SuiteConfig, t: &mut Tally) -> Result<()> {
    let (sim, oracle) = setup(cfg)?;
    let ts = t_stars(&sim);
    let mut rng = cfg.rng(6);
    let (mut done, mut resampled) = (0, 0);
    while done < 100 {
        let w = QuestionTuple::random(&sim.map, &ts, &mut rng, 8);
        let d = match sim.answer_distribution(&w) {
            Ok(d) => d,
            Err(Error::BudgetExceeded(_)) => {
                resampled += 1;
                if resampled > 2000 {
                    return Err(Error::Internal("too many tuples over the budget".into()));
                }
                continue;
            }
            Err(e) => return Err(e),
        };
        let o = oracle.distribution(&w)?;
        t.truth(d.slots == o.slots && d.denom == o.denom, || format!("{w}: layouts differ"));
        for (x, (a, b)) in d.table.iter().zip(&o.table).enumerate() {
            t.amp(*a, *b, || format!("{w}: answer {x}"));
        }
        done += 1;
    }
    let st = sim.stats();
    t.truth(st.bound_violations == 0, || format!("{} term-count bound violations", st.bound_violations));
    t.truth(st.max_width <= 4 * L, || format!("block width {} above {}", st.max_width, 4 * L));
    t.note(format!(
        "100 tuples, {resampled} resampled; max interval terms {}, max density terms {}, max width {}",
        st.max_interval_terms, st.max_density_terms, st.max_width
    ));
    Ok(())
}

fn slot_positions(slots: &[Slot], players: &[Player]) -> Vec<usize> {
    (0..slots.len()).filter(|&i| players.contains(&slots[i].player())).collect()
}

fn non_signalling(cfg: &SuiteConfig, t: &mut Tally) -> Result<()> {
    let (sim, _) = setup(cfg)?;
    let ts = t_stars(&sim);
    let mut rng = cfg.rng(7);
    let (mut done, mut tries) = (0, 0);
    while done < 30 {
        tries += 1;
        if tries > 5000 {
            return Err(Error::Internal("could not build distinct completions".into()));
        }
        let a = QuestionTuple::random(&sim.map, &ts, &mut rng, 8);
        let b = QuestionTuple::random(&sim.map, &ts, &mut rng, 8);
        let players = a.players();
        if players.len() < 2 {
            continue;
        }
        let keep: Vec<Player> = players.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
        if keep.is_empty() || keep.len() == players.len() {
            continue;
        }
        let partial = a.restrict(&keep);
        let others: Vec<Player> = b.players().into_iter().filter(|p| !keep.contains(p)).collect();
        let second = partial.merge(&b.restrict(&others))?;
        if second == a || second.check(&sim.map).is_err() {
            continue;
        }
        let (da, db) = match (sim.answer_distribution(&a), sim.answer_distribution(&second)) {
            (Ok(x), Ok(y)) => (x, y),
            (Err(Error::BudgetExceeded(_)), _) | (_, Err(Error::BudgetExceeded(_))) => continue,
            (Err(e), _) | (_, Err(e)) => return Err(e),
        };
        let ma = da.marginal(&slot_positions(&da.slots, &keep));
        let mb = db.marginal(&slot_positions(&db.slots, &keep));
        t.truth(ma.slots == mb.slots, || format!("{partial}: marginal layouts differ"));
        for (x, (p, q)) in ma.table.iter().zip(&mb.table).enumerate() {
            t.amp(*p, *q, || format!("{partial}: answer {x} under {a} and {second}"));
        }
        done += 1;
    }
    t.note(format!("30 partial tuples from {tries} draws"));
    Ok(())
}

fn adaptive_transcripts(cfg: &SuiteConfig, t: &mut Tally) -> Result<()> {
    let (sim, oracle) = setup(cfg)?;
    let exact = Session::new(&sim, "tiny").transcript_distribution(&cfg.referee)?;
    let total: f64 = exact.values().sum();
    t.truth((total - 1.0).abs() < 1e-12, || format!("simulated transcript probabilities sum to {total}"));
    let runs = cfg.monte_carlo_runs.max(1);
    let mut counts: BTreeMap<String, f64> = BTreeMap::new();
    let mut direct = Session::new(&oracle, "tiny");
    for i in 0..runs {
        let tr = direct.run(&cfg.referee, cfg.seed.wrapping_add(i as u64))?;
        *counts.entry(tr.body()).or_insert(0.0) += 1.0;
    }
    for v in counts.values_mut() {
        *v /= runs as f64;
    }
    let tv = total_variation(&exact, &counts);
    t.checks += 1;
    t.dev(tv);
    if tv > TV_THRESHOLD {
        t.fail(|| format!("total variation {tv:.4} above {TV_THRESHOLD}"));
    }
    let rounds = cfg.referee.lines.iter().filter(|l| !matches!(l, ScriptLine::Halt)).count();
    let mut reuse = cfg.referee.clone();
    reuse.lines.push(ScriptLine::Ask("PP1: QF".into()));
    let tr = Session::new(&sim, "tiny").run(&reuse, cfg.seed)?;
    t.truth(matches!(tr.ending, Ending::Abort(_)), || format!("asking PP1 again ended with {:?}", tr.ending));
    let again = Session::new(&sim, "tiny").run(&cfg.referee, cfg.seed)?;
    let once_more = Session::new(&sim, "tiny").run(&cfg.referee, cfg.seed)?;
    t.truth(again.to_string() == once_more.to_string(), || "transcripts differ under one seed".into());
    t.note(format!("{rounds} script lines, {} transcripts, {runs} direct runs, TV {tv:.4}", exact.len()));
    Ok(())
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// A random game in which the planted deterministic strategy always wins.
fn planted_game(rng: &mut impl Rng) -> OneRoundGame {
    let mut g = OneRoundGame::random(rng, 2, 2, 2);
    let s: Vec<Vec<usize>> = (0..2).map(|_| (0..2).map(|_| rng.gen_range(0..2)).collect()).collect();
    for (q, acc) in g.accept.iter_mut() {
        acc.insert(vec![s[0][q[0]], s[1][q[1]]]);
    }
    g
}

fn anchoring(cfg: &SuiteConfig, t: &mut Tally) -> Result<()> {
    let mut rng = cfg.rng(9);
    let alphas = [rat(1, 4), rat(1, 2)];
    for i in 0..20 {
        let q = rng.gen_range(2..=3);
        let g = OneRoundGame::random(&mut rng, 2, q, 2);
        let v = classical_value(&g)?;
        for a in &alphas {
            let got = classical_value(&anchor(&g, a)?)?;
            t.ratio(&got, &anchored_value(&v, a, 2), || format!("game {i}, alpha {a}"));
        }
    }
    for i in 0..5 {
        let g = planted_game(&mut rng);
        let one = BigRational::one();
        t.ratio(&classical_value(&g)?, &one, || format!("planted game {i}"));
        for a in &alphas {
            t.ratio(&classical_value(&anchor(&g, a)?)?, &one, || format!("planted game {i} anchored at {a}"));
        }
        for m in 1..=3 {
            t.ratio(&classical_value(&parallel_repeat(&g, m)?)?, &one, || format!("planted game {i}, {m} copies"));
        }
    }
    t.note("20 random games, 5 games with value one");
    Ok(())
}

fn robustification(cfg: &SuiteConfig, t: &mut Tally) -> Result<()> {
    let r = cfg.robustified()?;
    let mut strategies = vec![("fixture", cfg.strategy.clone())];
    strategies.push(("identity", ProverStrategy { unitaries: vec![vec![]; cfg.strategy.k], prep: vec![], ..cfg.strategy.clone() }));
    for (name, s) in &strategies {
        let before = circuit_value_fixed_strategy(&cfg.circuit, s)?;
        let after = circuit_value_fixed_strategy(&r.circuit, &r.wrap_strategy(s)?)?;
        t.amp(after, before, || format!("{name} strategy"));
        t.note(format!("{name}: {before}"));
    }
    Ok(())
}

type Check = fn(&SuiteConfig, &mut Tally) -> Result<()>;

const TABLE: [(&str, Check); CRITERIA] = [
    ("codeword-trace", codeword_trace),
    ("transversal-prefix", transversal_simulatability),
    ("order-consistency", order_consistency),
    ("toffoli-gadget", toffoli_gadget),
    ("snapshot-simulation", snapshot_simulation),
    ("density-simulation", density_simulation),
    ("non-signalling", non_signalling),
    ("adaptive-transcripts", adaptive_transcripts),
    ("anchoring", anchoring),
    ("robustify-value", robustification),
];

pub fn criterion_name(id: usize) -> Option<&'static str> {
    TABLE.get(id.wrapping_sub(1)).map(|(n, _)| *n)
}

/// Runs criterion `id` (1-based). Errors inside the check become a FAIL.
pub fn run_criterion(id: usize, cfg: &SuiteConfig) -> Result<CriterionReport> {
    let (name, check) = *TABLE.get(id.wrapping_sub(1)).ok_or(Error::IndexOutOfRange(id, CRITERIA + 1))?;
    let start = Instant::now();
    let mut t = Tally::new(cfg.arithmetic);
    let outcome = check(cfg, &mut t);
    let seconds = start.elapsed().as_secs_f64();
    let (pass, detail) = match outcome {
        Err(e) => (false, format!("error: {e}")),
        Ok(()) if t.failures > 0 => (false, format!("{} failed: {}", t.failures, t.first_failure.unwrap_or_default())),
        Ok(()) if t.checks == 0 => (false, "nothing was checked".into()),
        Ok(()) => (true, t.notes.join("; ")),
    };
    Ok(CriterionReport { id, name, pass, checks: t.checks, max_deviation: t.max_dev, seconds, detail })
}

pub fn run_all(cfg: &SuiteConfig) -> Vec<CriterionReport> {
    (1..=CRITERIA).map(|id| run_criterion(id, cfg).expect("id in range")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_up_to_two() {
        let s = subsets(4, 2);
        assert_eq!(s.len(), 4 + 6);
        assert!(s.contains(&vec![1, 3]));
    }

    #[test]
    fn fault_breaks_the_codeword_trace() {
        let mut cfg = SuiteConfig::bundled().unwrap();
        assert!(run_criterion(1, &cfg).unwrap().pass);
        cfg.fault = Some(Fault::FlipGeneratorSign(2));
        let r = run_criterion(1, &cfg).unwrap();
        assert!(!r.pass);
        assert!(r.max_deviation >= 2.0 - 1e-12);
    }

    #[test]
    fn float_mode_reports_small_deviations() {
        let mut cfg = SuiteConfig::bundled().unwrap();
        cfg.arithmetic = Arithmetic::Float;
        for id in [3, 9, 10] {
            let r = run_criterion(id, &cfg).unwrap();
            assert!(r.pass, "{r}");
            assert!(r.max_deviation <= FLOAT_TOLERANCE);
        }
    }

    #[test]
    fn unknown_criterion() {
        assert!(run_criterion(0, &SuiteConfig::bundled().unwrap()).is_err());
        assert!(run_criterion(11, &SuiteConfig::bundled().unwrap()).is_err());
        assert_eq!(criterion_name(6), Some("density-simulation"));
    }
}
