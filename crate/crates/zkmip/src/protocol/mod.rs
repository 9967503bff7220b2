//! Protocol circuits: a verifier circuit with phase markers and prover
//! slots, its text format, prover strategies and exact acceptance values.

mod robust;
mod strategy;

use std::fmt;
use std::ops::Range;

pub use robust::{robustify, MicroKind, MicroPhase, ResourceCounts, ResourceKind, RobustifyConfig, Robustified};
pub use strategy::{circuit_value_fixed_strategy, run_with_strategy, ProverStrategy};

use crate::error::{parse_err, Error, Result};
use crate::gates::Gate;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    Resource,
    Vop1,
    CopyQ,
    Prover,
    CopyA,
    Vop2,
    Decode,
}

impl Phase {
    pub const ALL: [Phase; 7] =
        [Phase::Resource, Phase::Vop1, Phase::CopyQ, Phase::Prover, Phase::CopyA, Phase::Vop2, Phase::Decode];

    pub fn name(self) -> &'static str {
        match self {
            Phase::Resource => "RESOURCE",
            Phase::Vop1 => "VOP1",
            Phase::CopyQ => "COPYQ",
            Phase::Prover => "PROVER",
            Phase::CopyA => "COPYA",
            Phase::Vop2 => "VOP2",
            Phase::Decode => "DECODE",
        }
    }

    pub fn from_name(s: &str) -> Option<Phase> {
        Phase::ALL.iter().copied().find(|p| p.name() == s)
    }

    fn is_copy(self) -> bool {
        matches!(self, Phase::CopyQ | Phase::CopyA)
    }
}

/// One timestep: a verifier gate or prover `prover`'s unitary for `round`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    Gate(Gate),
    Prover { prover: usize, round: usize },
}

/// Global qubit order: verifier qubits 0..n, then prover i's message qubit
/// j at n + i*m + j. Prover private qubits live in the strategy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProtocolCircuit {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    /// Verifier qubit read at the end; 1 means accept.
    pub output: usize,
    pub steps: Vec<Step>,
    /// Phase markers with the index of their first step.
    pub phases: Vec<(Phase, usize)>,
}

impl ProtocolCircuit {
    pub fn new(n: usize, m: usize, k: usize) -> ProtocolCircuit {
        ProtocolCircuit { n, m, k, output: n.saturating_sub(1), steps: vec![], phases: vec![] }
    }

    /// Verifier and message qubits.
    pub fn n_qubits(&self) -> usize {
        self.n + self.k * self.m
    }

    pub fn message_qubit(&self, prover: usize, j: usize) -> usize {
        self.n + prover * self.m + j
    }

    /// Verifier qubit holding copy j of prover i's messages.
    pub fn n_qubit(&self, prover: usize, j: usize) -> usize {
        prover * self.m + j
    }

    /// T, the number of timesteps.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn begin_phase(&mut self, p: Phase) {
        self.phases.push((p, self.steps.len()));
    }

    pub fn push(&mut self, s: Step) {
        self.steps.push(s);
    }

    pub fn push_gate(&mut self, g: Gate) {
        self.steps.push(Step::Gate(g));
    }

    /// Phase of step index `s` (0-based), None before the first marker.
    pub fn phase_of(&self, s: usize) -> Option<Phase> {
        self.phases.iter().rev().find(|(_, start)| *start <= s).map(|(p, _)| *p)
    }

    /// Step indices of a phase.
    pub fn phase_range(&self, p: Phase) -> Option<Range<usize>> {
        let i = self.phases.iter().position(|(q, _)| *q == p)?;
        let start = self.phases[i].1;
        let end = self.phases.get(i + 1).map_or(self.steps.len(), |x| x.1);
        Some(start..end)
    }

    /// (prover, round, t) for every prover step, t being the 1-based
    /// timestep at which the prover acts.
    pub fn prover_times(&self) -> Vec<(usize, usize, usize)> {
        self.steps
            .iter()
            .enumerate()
            .filter_map(|(s, st)| match *st {
                Step::Prover { prover, round } => Some((prover, round, s + 1)),
                Step::Gate(_) => None,
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidCircuit { gate: 0, msg: "no verifier qubits".into() });
        }
        if self.output >= self.n {
            return Err(Error::InvalidCircuit { gate: 0, msg: format!("output qubit {} out of range", self.output + 1) });
        }
        for w in self.phases.windows(2) {
            if w[0].0 >= w[1].0 || w[0].1 > w[1].1 {
                return Err(Error::InvalidCircuit {
                    gate: w[1].1 + 1,
                    msg: format!("phase {} after {}", w[1].0.name(), w[0].0.name()),
                });
            }
        }
        let nq = self.n_qubits();
        let mut last_round = vec![0usize; self.k];
        for (s, st) in self.steps.iter().enumerate() {
            let gate = s + 1;
            let phase = self.phase_of(s);
            match *st {
                Step::Prover { prover, round } => {
                    if prover >= self.k {
                        return Err(Error::InvalidCircuit { gate, msg: format!("prover {} of {}", prover + 1, self.k) });
                    }
                    if phase != Some(Phase::Prover) {
                        let at = phase.map_or("before any phase", |p| p.name());
                        return Err(Error::PhaseViolation { gate, msg: at.into() });
                    }
                    if round != last_round[prover] + 1 {
                        return Err(Error::InvalidCircuit {
                            gate,
                            msg: format!("prover {} round {round} out of order", prover + 1),
                        });
                    }
                    last_round[prover] = round;
                }
                Step::Gate(g) => {
                    let qs = g.qubits();
                    for (i, &q) in qs.iter().enumerate() {
                        if q >= nq {
                            return Err(Error::InvalidCircuit { gate, msg: format!("qubit {} out of range", q + 1) });
                        }
                        if qs[..i].contains(&q) {
                            return Err(Error::InvalidCircuit { gate, msg: format!("qubit {} repeated", q + 1) });
                        }
                    }
                    if phase == Some(Phase::Prover) && g != Gate::Id {
                        return Err(Error::PhaseViolation { gate, msg: "verifier gate inside the prover phase".into() });
                    }
                    let touches_m = qs.iter().any(|&q| q >= self.n);
                    if touches_m && !phase.is_some_and(Phase::is_copy) {
                        return Err(Error::PhaseViolation { gate, msg: "message register outside a copy phase".into() });
                    }
                }
            }
        }
        Ok(())
    }

    fn reg_name(&self, q: usize, phase: Option<Phase>) -> String {
        if q >= self.n {
            let r = q - self.n;
            return format!("m{}.{}", r / self.m + 1, r % self.m + 1);
        }
        if phase.is_some_and(Phase::is_copy) && self.m > 0 && q < self.k * self.m {
            return format!("n{}.{}", q / self.m + 1, q % self.m + 1);
        }
        format!("v{}", q + 1)
    }

    fn parse_reg(&self, tok: &str, line: usize) -> Result<usize> {
        let bad = || parse_err(line, format!("bad register {tok:?}"));
        let pair = |s: &str| -> Result<(usize, usize)> {
            let (a, b) = s.split_once('.').ok_or_else(bad)?;
            let a: usize = a.parse().map_err(|_| bad())?;
            let b: usize = b.parse().map_err(|_| bad())?;
            if a == 0 || b == 0 || a > self.k || b > self.m {
                return Err(parse_err(line, format!("register {tok} out of range")));
            }
            Ok((a - 1, b - 1))
        };
        if let Some(r) = tok.strip_prefix('v') {
            let v: usize = r.parse().map_err(|_| bad())?;
            if v == 0 || v > self.n {
                return Err(parse_err(line, format!("register {tok} out of range")));
            }
            Ok(v - 1)
        } else if let Some(r) = tok.strip_prefix('n') {
            let (i, j) = pair(r)?;
            let q = self.n_qubit(i, j);
            if q >= self.n {
                return Err(parse_err(line, format!("register {tok} out of range")));
            }
            Ok(q)
        } else if let Some(r) = tok.strip_prefix('m') {
            let (i, j) = pair(r)?;
            Ok(self.message_qubit(i, j))
        } else {
            Err(bad())
        }
    }

    pub fn parse(text: &str) -> Result<ProtocolCircuit> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hl, header) = lines.next().ok_or_else(|| parse_err(1, "empty circuit file"))?;
        let mut c = parse_header(hl, header)?;
        for (ln, line) in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            match toks[0] {
                "PHASE" => {
                    let [_, name] = toks[..] else { return Err(parse_err(ln, "PHASE takes one name")) };
                    let p = Phase::from_name(name).ok_or_else(|| parse_err(ln, format!("unknown phase {name}")))?;
                    c.begin_phase(p);
                }
                "PROVER" => {
                    let [_, i, r] = toks[..] else { return Err(parse_err(ln, "PROVER takes prover and round")) };
                    let i: usize = i.parse().map_err(|_| parse_err(ln, "bad prover index"))?;
                    let r: usize = r.parse().map_err(|_| parse_err(ln, "bad round"))?;
                    if i == 0 || r == 0 {
                        return Err(parse_err(ln, "prover and round are 1-based"));
                    }
                    c.push(Step::Prover { prover: i - 1, round: r });
                }
                name => {
                    let qs = toks[1..].iter().map(|t| c.parse_reg(t, ln)).collect::<Result<Vec<_>>>()?;
                    let g = Gate::from_name(name, &qs)
                        .ok_or_else(|| parse_err(ln, format!("unknown gate {name} with {} operands", qs.len())))?;
                    c.push_gate(g);
                }
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

fn parse_header(ln: usize, line: &str) -> Result<ProtocolCircuit> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    if toks.first() != Some(&"CIRCUIT") {
        return Err(parse_err(ln, "expected CIRCUIT header"));
    }
    let (mut n, mut m, mut k, mut out) = (None, None, None, None);
    for t in &toks[1..] {
        let (key, v) = t.split_once('=').ok_or_else(|| parse_err(ln, format!("bad header field {t}")))?;
        let v: usize = v.parse().map_err(|_| parse_err(ln, format!("bad value in {t}")))?;
        match key {
            "n" => n = Some(v),
            "m" => m = Some(v),
            "k" => k = Some(v),
            "out" => out = Some(v),
            _ => return Err(parse_err(ln, format!("unknown header field {key}"))),
        }
    }
    let (Some(n), Some(m), Some(k)) = (n, m, k) else {
        return Err(parse_err(ln, "header needs n, m and k"));
    };
    let mut c = ProtocolCircuit::new(n, m, k);
    if let Some(o) = out {
        if o == 0 || o > n {
            return Err(parse_err(ln, format!("out={o} out of range")));
        }
        c.output = o - 1;
    }
    Ok(c)
}

impl fmt::Display for ProtocolCircuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CIRCUIT n={} m={} k={}", self.n, self.m, self.k)?;
        if self.output + 1 != self.n {
            write!(f, " out={}", self.output + 1)?;
        }
        writeln!(f)?;
        let mut next = 0;
        for (s, st) in self.steps.iter().enumerate() {
            while next < self.phases.len() && self.phases[next].1 == s {
                writeln!(f, "PHASE {}", self.phases[next].0.name())?;
                next += 1;
            }
            match *st {
                Step::Prover { prover, round } => writeln!(f, "PROVER {} {round}", prover + 1)?,
                Step::Gate(g) => {
                    let phase = self.phase_of(s);
                    write!(f, "{}", g.name())?;
                    for q in g.qubits() {
                        write!(f, " {}", self.reg_name(q, phase))?;
                    }
                    writeln!(f)?;
                }
            }
        }
        for (p, _) in &self.phases[next..] {
            writeln!(f, "PHASE {}", p.name())?;
        }
        Ok(())
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) const TINY: &str = include_str!("../../fixtures/tiny.zkp");
    pub(crate) const TINY_STRATEGY: &str = include_str!("../../fixtures/tiny_honest.strategy");

    #[test]
    fn tiny_fixture_shape() {
        let c = ProtocolCircuit::parse(TINY).unwrap();
        assert_eq!((c.k, c.n, c.m, c.len()), (1, 2, 1, 9));
        assert_eq!(c.output, 1);
        assert_eq!(c.prover_times(), vec![(0, 1, 4)]);
    }

    #[test]
    fn text_round_trip_is_exact() {
        let c = ProtocolCircuit::parse(TINY).unwrap();
        let canonical = c.to_text();
        assert_eq!(ProtocolCircuit::parse(&canonical).unwrap(), c);
        assert_eq!(ProtocolCircuit::parse(&canonical).unwrap().to_text(), canonical);
        let stripped: String = TINY.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()).map(|l| format!("{l}\n")).collect();
        assert_eq!(canonical, stripped);
    }

    #[test]
    fn empty_circuit_is_valid() {
        let c = ProtocolCircuit::parse("CIRCUIT n=1 m=1 k=1\n").unwrap();
        assert!(c.is_empty());
        assert_eq!(c.to_text(), "CIRCUIT n=1 m=1 k=1\n");
    }

    #[test]
    fn prover_gate_before_copy_phase_is_rejected() {
        let t = "CIRCUIT n=2 m=1 k=1\nPHASE VOP1\nH v1\nPROVER 1 1\n";
        assert!(matches!(ProtocolCircuit::parse(t), Err(Error::PhaseViolation { gate: 2, .. })));
        let t = "CIRCUIT n=2 m=1 k=1\nPROVER 1 1\n";
        assert!(matches!(ProtocolCircuit::parse(t), Err(Error::PhaseViolation { gate: 1, .. })));
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let t = "CIRCUIT n=2 m=1 k=1\nPHASE VOP1\nH v1\nFOO v2\n";
        assert_eq!(ProtocolCircuit::parse(t), Err(Error::Parse { line: 4, msg: "unknown gate FOO with 1 operands".into() }));
        let t = "CIRCUIT n=2 m=1 k=1\nH v3\n";
        assert!(matches!(ProtocolCircuit::parse(t), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(ProtocolCircuit::parse("H v1\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn message_register_only_in_copy_phases() {
        let t = "CIRCUIT n=2 m=1 k=1\nPHASE VOP1\nCNOT v1 m1.1\n";
        assert!(matches!(ProtocolCircuit::parse(t), Err(Error::PhaseViolation { gate: 1, .. })));
    }

    #[test]
    fn repeated_prover_round_is_rejected() {
        let t = "CIRCUIT n=2 m=1 k=1\nPHASE PROVER\nPROVER 1 1\nPROVER 1 1\n";
        assert!(matches!(ProtocolCircuit::parse(t), Err(Error::InvalidCircuit { gate: 2, .. })));
    }

    #[test]
    fn phases_must_be_ordered() {
        let t = "CIRCUIT n=2 m=1 k=1\nPHASE VOP2\nPHASE VOP1\n";
        assert!(matches!(ProtocolCircuit::parse(t), Err(Error::InvalidCircuit { .. })));
    }
}
