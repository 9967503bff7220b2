//! Adaptive referees as scripts, and transcripts of a referee talking to
//! either the simulator or the honest players.
//!
//! Script lines, one round each:
//!
//! ```text
//! ASK PV1: Z1I2,I1I2,I1I2,I1I2,I1I2,I1I2 | PP1: STAR
//! BRANCH ON a[3] = 1: ASK PP2: Q1
//! HALT
//! ```
//!
//! `a[i]` is bit i (1-based) of all answers so far, concatenated in the
//! order the players were asked; a verifier player contributes six bits
//! and a prover one. A BRANCH line whose condition fails is skipped.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Simulator;
use crate::error::{parse_err, Error, Result};
use crate::history::RegisterMap;
use crate::honest::{AnswerDistribution, AnswerVector, Player, ProverQuestion, QuestionTuple, Slot, VERIFIER_OBSERVABLES};
use crate::oracle::HonestOracle;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScriptLine {
    /// Question tuple text, parsed when the line runs.
    Ask(String),
    Branch { index: usize, value: bool, ask: String },
    Halt,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RefereeScript {
    pub lines: Vec<ScriptLine>,
}

impl RefereeScript {
    pub fn parse(text: &str) -> Result<RefereeScript> {
        let mut lines = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let ln = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line == "HALT" {
                lines.push(ScriptLine::Halt);
            } else if let Some(t) = line.strip_prefix("ASK") {
                lines.push(ScriptLine::Ask(t.trim().to_string()));
            } else if let Some(rest) = line.strip_prefix("BRANCH ON") {
                let bad = || parse_err(ln, "expected BRANCH ON a[i] = b: ASK <questions>");
                let (cond, ask) = rest.split_once(':').ok_or_else(bad)?;
                let ask = ask.trim().strip_prefix("ASK").ok_or_else(bad)?.trim().to_string();
                let (lhs, rhs) = cond.split_once('=').ok_or_else(bad)?;
                let index: usize = lhs
                    .trim()
                    .strip_prefix("a[")
                    .and_then(|s| s.strip_suffix(']'))
                    .and_then(|s| s.parse().ok())
                    .filter(|&i| i >= 1)
                    .ok_or_else(bad)?;
                let value = match rhs.trim() {
                    "0" => false,
                    "1" => true,
                    _ => return Err(bad()),
                };
                lines.push(ScriptLine::Branch { index: index - 1, value, ask });
            } else {
                return Err(parse_err(ln, format!("unknown referee line {line:?}")));
            }
        }
        Ok(RefereeScript { lines })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Round {
    pub questions: QuestionTuple,
    pub answers: AnswerVector,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ending {
    Halt,
    Abort(String),
}

/// Input, referee randomness, the rounds, and how the run ended.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transcript {
    pub input: String,
    pub seed: u64,
    pub rounds: Vec<Round>,
    pub ending: Ending,
}

impl Transcript {
    /// The rounds and ending, without the header.
    pub fn body(&self) -> String {
        let s = self.to_string();
        s.split_once('\n').map(|(_, b)| b.to_string()).unwrap_or_default()
    }
}

impl fmt::Display for Transcript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "TRANSCRIPT input={} seed={}", self.input, self.seed)?;
        for (i, r) in self.rounds.iter().enumerate() {
            let players: Vec<String> = r.questions.players().iter().map(|p| p.to_string()).collect();
            writeln!(f, "ROUND {} | PLAYERS {} | Q {} | A {}", i + 1, players.join(" "), r.questions, r.answers)?;
        }
        match &self.ending {
            Ending::Halt => writeln!(f, "HALT"),
            Ending::Abort(why) => writeln!(f, "ABORT {why}"),
        }
    }
}

/// Joint answer distributions for the players asked so far.
pub trait AnswerModel {
    fn map(&self) -> RegisterMap;
    /// Distribution over `asked.slots()`.
    fn joint(&self, asked: &QuestionTuple) -> Result<AnswerDistribution>;
}

impl AnswerModel for Simulator {
    fn map(&self) -> RegisterMap {
        self.map
    }

    /// Completes the tuple (identity for unasked verifier players, the
    /// first message qubit's X for unasked provers), simulates, and keeps
    /// the asked players' marginal.
    fn joint(&self, asked: &QuestionTuple) -> Result<AnswerDistribution> {
        let mut full = asked.clone();
        for i in 0..self.map.k {
            full.prover.entry(i).or_insert(ProverQuestion::Q(0));
        }
        let d = self.answer_distribution(&full)?;
        let keep: Vec<usize> = (0..d.slots.len())
            .filter(|&i| match d.slots[i] {
                Slot::Prover(p) => asked.prover.contains_key(&p),
                Slot::Verifier(..) => true,
            })
            .collect();
        Ok(d.marginal(&keep))
    }
}

impl AnswerModel for HonestOracle {
    fn map(&self) -> RegisterMap {
        self.spec.map
    }

    fn joint(&self, asked: &QuestionTuple) -> Result<AnswerDistribution> {
        self.distribution(asked)
    }
}

/// A model with its distributions cached by tuple.
pub struct Session<'a> {
    pub model: &'a dyn AnswerModel,
    pub input: String,
    cache: HashMap<String, AnswerDistribution>,
}

/// Where a run stands between rounds.
#[derive(Clone, Debug, Default)]
struct RunState {
    line: usize,
    asked: QuestionTuple,
    bits: Vec<bool>,
    answers: AnswerVector,
    rounds: Vec<Round>,
}

enum Next {
    Done(Ending),
    Ask { questions: QuestionTuple, merged: QuestionTuple },
}

fn player_bits(q: &QuestionTuple, a: &AnswerVector) -> Vec<bool> {
    let mut out = Vec::new();
    for p in q.players() {
        match p {
            Player::Verifier(r) => out.extend_from_slice(&a.verifier[&r]),
            Player::Prover(i) => out.push(a.prover[&i]),
        }
    }
    out
}

impl<'a> Session<'a> {
    pub fn new(model: &'a dyn AnswerModel, input: impl Into<String>) -> Session<'a> {
        Session { model, input: input.into(), cache: HashMap::new() }
    }

    fn joint(&mut self, q: &QuestionTuple) -> Result<&AnswerDistribution> {
        let key = q.to_string();
        if !self.cache.contains_key(&key) {
            let d = self.model.joint(q)?;
            self.cache.insert(key.clone(), d);
        }
        Ok(&self.cache[&key])
    }

    /// Advances past skipped lines to the next question or the end.
    fn next(&self, script: &RefereeScript, st: &mut RunState) -> Next {
        while st.line < script.lines.len() {
            let line = &script.lines[st.line];
            st.line += 1;
            let text = match line {
                ScriptLine::Halt => return Next::Done(Ending::Halt),
                ScriptLine::Ask(t) => t,
                ScriptLine::Branch { index, value, ask } => match st.bits.get(*index) {
                    None => return Next::Done(Ending::Abort(format!("a[{}] has not been answered", index + 1))),
                    Some(b) if b == value => ask,
                    Some(_) => continue,
                },
            };
            let questions: QuestionTuple = match text.parse() {
                Ok(q) => q,
                Err(e) => return Next::Done(Ending::Abort(e.to_string())),
            };
            if let Err(e) = questions.check(&self.model.map()) {
                return Next::Done(Ending::Abort(e.to_string()));
            }
            if let Some(p) = questions.players().into_iter().find(|p| st.asked.players().contains(p)) {
                return Next::Done(Ending::Abort(format!("player {p} asked twice")));
            }
            let merged = st.asked.merge(&questions).expect("players are disjoint");
            return Next::Ask { questions, merged };
        }
        Next::Done(Ending::Halt)
    }

    /// Earlier answers laid out on `slots`, and the positions of the new
    /// players' slots.
    fn split(st: &RunState, slots: &[Slot]) -> (Vec<bool>, Vec<usize>) {
        let mut fixed = vec![false; slots.len()];
        let mut free = Vec::new();
        for (i, s) in slots.iter().enumerate() {
            let old = match s.player() {
                Player::Verifier(r) => st.asked.verifier.contains_key(&r),
                Player::Prover(p) => st.asked.prover.contains_key(&p),
            };
            if old {
                fixed[i] = match *s {
                    Slot::Verifier(r, j) => st.answers.verifier[&r][j],
                    Slot::Prover(p) => st.answers.prover[&p],
                };
            } else {
                free.push(i);
            }
        }
        (fixed, free)
    }

    fn record(st: &mut RunState, questions: QuestionTuple, merged: QuestionTuple, slots: &[Slot], bits: &[bool]) {
        let all = AnswerVector::from_slots(&merged, slots, bits);
        let mut answers = AnswerVector::default();
        for &r in questions.verifier.keys() {
            answers.verifier.insert(r, all.verifier[&r]);
        }
        for &i in questions.prover.keys() {
            answers.prover.insert(i, all.prover[&i]);
        }
        st.bits.extend(player_bits(&questions, &answers));
        st.answers = all;
        st.asked = merged;
        st.rounds.push(Round { questions, answers });
    }

    /// Runs the script once, drawing answers one bit at a time.
    pub fn run(&mut self, script: &RefereeScript, seed: u64) -> Result<Transcript> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut st = RunState::default();
        let ending = loop {
            match self.next(script, &mut st) {
                Next::Done(e) => break e,
                Next::Ask { questions, merged } => {
                    let d = self.joint(&merged)?.clone();
                    let (fixed, free) = Self::split(&st, &d.slots);
                    let bits = d
                        .sample_conditional(&fixed, &free, &mut rng)
                        .ok_or_else(|| Error::Internal("earlier answers have probability zero".into()))?;
                    Self::record(&mut st, questions, merged, &d.slots, &bits);
                }
            }
        };
        Ok(Transcript { input: self.input.clone(), seed, rounds: st.rounds, ending })
    }

    /// Every transcript body with its probability.
    pub fn transcript_distribution(&mut self, script: &RefereeScript) -> Result<BTreeMap<String, f64>> {
        let mut out = BTreeMap::new();
        self.explore(script, RunState::default(), 1.0, &mut out)?;
        Ok(out)
    }

    fn explore(&mut self, script: &RefereeScript, mut st: RunState, p: f64, out: &mut BTreeMap<String, f64>) -> Result<()> {
        match self.next(script, &mut st) {
            Next::Done(ending) => {
                let t = Transcript { input: self.input.clone(), seed: 0, rounds: st.rounds, ending };
                *out.entry(t.body()).or_insert(0.0) += p;
                Ok(())
            }
            Next::Ask { questions, merged } => {
                let d = self.joint(&merged)?.clone();
                let (fixed, free) = Self::split(&st, &d.slots);
                let consistent = |x: usize, bits: &[bool]| (0..d.slots.len()).all(|i| free.contains(&i) || (x >> i & 1 == 1) == bits[i]);
                let prior: f64 = (0..d.len()).filter(|&x| consistent(x, &fixed)).map(|x| d.prob_f64(x)).sum();
                for x in 0..d.len() {
                    if !consistent(x, &fixed) {
                        continue;
                    }
                    let q = d.prob_f64(x);
                    if q <= 0.0 {
                        continue;
                    }
                    let bits: Vec<bool> = (0..d.slots.len()).map(|i| x >> i & 1 == 1).collect();
                    let mut next = st.clone();
                    Self::record(&mut next, questions.clone(), merged.clone(), &d.slots, &bits);
                    self.explore(script, next, p * q / prior, out)?;
                }
                Ok(())
            }
        }
    }
}

/// The simulator's transcript for `script` under `seed`.
pub fn simulate_adaptive(sim: &Simulator, script: &RefereeScript, input: &str, seed: u64) -> Result<Transcript> {
    Session::new(sim, input).run(script, seed)
}

/// Total variation distance between two distributions given as maps.
pub fn total_variation(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> f64 {
    let keys: std::collections::BTreeSet<&String> = a.keys().chain(b.keys()).collect();
    keys.into_iter().map(|k| (a.get(k).unwrap_or(&0.0) - b.get(k).unwrap_or(&0.0)).abs()).sum::<f64>() / 2.0
}

/// Number of answer bits a tuple produces.
pub fn answer_bits(q: &QuestionTuple) -> usize {
    q.verifier.len() * VERIFIER_OBSERVABLES + q.prover.len()
}
