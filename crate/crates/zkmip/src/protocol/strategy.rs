//! Prover strategies as explicit circuits, and exact acceptance values.

use std::fmt;

use super::{ProtocolCircuit, Step};
use crate::error::{parse_err, Error, Result};
use crate::gates::Gate;
use crate::oracle::sparse::SparseState;
use crate::ring::Amp;

/// Prover registers in local order: prover i's message qubit j at i*m + j,
/// then each prover's private qubits. The shared initial state is PREP
/// applied to |0...0>.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProverStrategy {
    pub k: usize,
    pub m: usize,
    pub private: Vec<usize>,
    pub prep: Vec<Gate>,
    pub unitaries: Vec<Vec<Gate>>,
}

impl ProverStrategy {
    /// Every prover does nothing.
    pub fn identity(k: usize, m: usize) -> ProverStrategy {
        ProverStrategy { k, m, private: vec![0; k], prep: vec![], unitaries: vec![vec![]; k] }
    }

    pub fn n_qubits(&self) -> usize {
        self.k * self.m + self.private.iter().sum::<usize>()
    }

    pub fn private_qubit(&self, prover: usize, j: usize) -> usize {
        self.k * self.m + self.private[..prover].iter().sum::<usize>() + j
    }

    /// Local qubits owned by prover i.
    pub fn owned(&self, prover: usize) -> Vec<usize> {
        let mut v: Vec<usize> = (0..self.m).map(|j| prover * self.m + j).collect();
        v.extend((0..self.private[prover]).map(|j| self.private_qubit(prover, j)));
        v
    }

    pub fn validate(&self) -> Result<()> {
        if self.private.len() != self.k || self.unitaries.len() != self.k {
            return Err(Error::Format(format!("strategy declares {} provers", self.private.len())));
        }
        let nq = self.n_qubits();
        for g in &self.prep {
            if let Some(&q) = g.qubits().iter().find(|&&q| q >= nq) {
                return Err(Error::IndexOutOfRange(q, nq));
            }
        }
        for (i, u) in self.unitaries.iter().enumerate() {
            let own = self.owned(i);
            for g in u {
                if g.qubits().iter().any(|q| !own.contains(q)) {
                    return Err(Error::Format(format!("unitary of prover {} acts outside its registers: {g}", i + 1)));
                }
            }
        }
        Ok(())
    }

    fn reg_name(&self, q: usize) -> String {
        if q < self.k * self.m {
            return format!("m{}.{}", q / self.m + 1, q % self.m + 1);
        }
        let mut r = q - self.k * self.m;
        for (i, &p) in self.private.iter().enumerate() {
            if r < p {
                return format!("p{}.{}", i + 1, r + 1);
            }
            r -= p;
        }
        format!("?{q}")
    }

    fn parse_reg(&self, tok: &str, ln: usize) -> Result<usize> {
        let bad = || parse_err(ln, format!("bad register {tok:?}"));
        let (kind, rest) = tok.split_at(1);
        let (a, b) = rest.split_once('.').ok_or_else(bad)?;
        let i: usize = a.parse().map_err(|_| bad())?;
        let j: usize = b.parse().map_err(|_| bad())?;
        if i == 0 || j == 0 || i > self.k {
            return Err(bad());
        }
        match kind {
            "m" if j <= self.m => Ok((i - 1) * self.m + j - 1),
            "p" if j <= self.private[i - 1] => Ok(self.private_qubit(i - 1, j - 1)),
            _ => Err(bad()),
        }
    }

    pub fn parse(text: &str) -> Result<ProverStrategy> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty())
            .peekable();
        let (hl, header) = lines.next().ok_or_else(|| parse_err(1, "empty strategy file"))?;
        let toks: Vec<&str> = header.split_whitespace().collect();
        let field = |t: Option<&&str>, key: &str| -> Result<usize> {
            t.and_then(|t| t.strip_prefix(key))
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| parse_err(hl, "expected STRATEGY k=<int> m=<int>"))
        };
        if toks.first() != Some(&"STRATEGY") || toks.len() != 3 {
            return Err(parse_err(hl, "expected STRATEGY k=<int> m=<int>"));
        }
        let k = field(toks.get(1), "k=")?;
        let m = field(toks.get(2), "m=")?;
        let mut s = ProverStrategy { k, m, private: vec![], prep: vec![], unitaries: vec![vec![]; k] };
        while let Some(&(ln, line)) = lines.peek() {
            let Some(rest) = line.strip_prefix("PROVER ") else { break };
            lines.next();
            let (i, d) = rest.split_once(" private=").ok_or_else(|| parse_err(ln, "expected PROVER i private=d"))?;
            let i: usize = i.trim().parse().map_err(|_| parse_err(ln, "bad prover index"))?;
            if i != s.private.len() + 1 {
                return Err(parse_err(ln, "provers must be declared in order"));
            }
            s.private.push(d.trim().parse().map_err(|_| parse_err(ln, "bad private size"))?);
        }
        if s.private.len() != k {
            return Err(parse_err(hl, format!("{} of {k} provers declared", s.private.len())));
        }
        // None = PREP, Some(i) = UNITARY i
        let mut section: Option<Option<usize>> = None;
        for (ln, line) in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            match toks[..] {
                ["PREP"] => section = Some(None),
                ["UNITARY", i] => {
                    let i: usize = i.parse().map_err(|_| parse_err(ln, "bad prover index"))?;
                    if i == 0 || i > k {
                        return Err(parse_err(ln, format!("no prover {i}")));
                    }
                    section = Some(Some(i - 1));
                }
                _ => {
                    let sec = section.ok_or_else(|| parse_err(ln, "gate outside PREP or UNITARY"))?;
                    let qs = toks[1..].iter().map(|t| s.parse_reg(t, ln)).collect::<Result<Vec<_>>>()?;
                    let g = Gate::from_name(toks[0], &qs).ok_or_else(|| parse_err(ln, format!("unknown gate {}", toks[0])))?;
                    match sec {
                        None => s.prep.push(g),
                        Some(i) => s.unitaries[i].push(g),
                    }
                }
            }
        }
        s.validate()?;
        Ok(s)
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }

    /// Gates of prover i's unitary on global qubits, registers placed after
    /// `n_verifier` verifier qubits.
    pub fn unitary_global(&self, prover: usize, n_verifier: usize) -> Vec<Gate> {
        self.unitaries[prover].iter().map(|g| g.remap(|q| q + n_verifier)).collect()
    }

    pub fn prep_global(&self, n_verifier: usize) -> Vec<Gate> {
        self.prep.iter().map(|g| g.remap(|q| q + n_verifier)).collect()
    }

    fn check_against(&self, c: &ProtocolCircuit) -> Result<()> {
        if self.k != c.k || self.m != c.m {
            return Err(Error::InvalidArgument(format!(
                "strategy for k={} m={} used with a circuit with k={} m={}",
                self.k, self.m, c.k, c.m
            )));
        }
        Ok(())
    }
}

impl fmt::Display for ProverStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "STRATEGY k={} m={}", self.k, self.m)?;
        for (i, p) in self.private.iter().enumerate() {
            writeln!(f, "PROVER {} private={p}", i + 1)?;
        }
        let line = |f: &mut fmt::Formatter<'_>, g: &Gate| -> fmt::Result {
            write!(f, "{}", g.name())?;
            for q in g.qubits() {
                write!(f, " {}", self.reg_name(q))?;
            }
            writeln!(f)
        };
        writeln!(f, "PREP")?;
        for g in &self.prep {
            line(f, g)?;
        }
        for (i, u) in self.unitaries.iter().enumerate() {
            writeln!(f, "UNITARY {}", i + 1)?;
            for g in u {
                line(f, g)?;
            }
        }
        Ok(())
    }
}

/// Runs the protocol against a fixed strategy and returns the state after
/// each timestep, starting with the initial one (T+1 states). Qubit order:
/// verifier, messages, private registers.
pub fn run_with_strategy(c: &ProtocolCircuit, s: &ProverStrategy) -> Result<Vec<SparseState>> {
    s.check_against(c)?;
    let mut st = SparseState::zero(c.n + s.n_qubits())?;
    st.run(&s.prep_global(c.n))?;
    let mut out = Vec::with_capacity(c.len() + 1);
    out.push(st.clone());
    for step in &c.steps {
        match *step {
            Step::Gate(g) => st.apply(&g)?,
            Step::Prover { prover, .. } => st.run(&s.unitary_global(prover, c.n))?,
        }
        out.push(st.clone());
    }
    Ok(out)
}

/// Exact probability that the output qubit reads 1.
pub fn circuit_value_fixed_strategy(c: &ProtocolCircuit, s: &ProverStrategy) -> Result<Amp> {
    s.check_against(c)?;
    let mut st = SparseState::zero(c.n + s.n_qubits())?;
    st.run(&s.prep_global(c.n))?;
    for step in &c.steps {
        match *step {
            Step::Gate(g) => st.apply(&g)?,
            Step::Prover { prover, .. } => st.run(&s.unitary_global(prover, c.n))?,
        }
    }
    Ok(st.prob_one(c.output))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::tests::{TINY, TINY_STRATEGY};

    #[test]
    fn strategy_text_round_trip() {
        let s = ProverStrategy::parse(TINY_STRATEGY).unwrap();
        assert_eq!(s.private, vec![1]);
        assert_eq!(s.unitaries[0].len(), 2);
        assert_eq!(ProverStrategy::parse(&s.to_text()).unwrap(), s);
    }

    #[test]
    fn unitary_must_stay_in_own_registers() {
        let t = "STRATEGY k=2 m=1\nPROVER 1 private=0\nPROVER 2 private=0\nUNITARY 1\nCNOT m1.1 m2.1\n";
        assert!(matches!(ProverStrategy::parse(t), Err(Error::Format(_))));
    }

    #[test]
    fn tiny_fixture_values() {
        let c = ProtocolCircuit::parse(TINY).unwrap();
        let honest = ProverStrategy::parse(TINY_STRATEGY).unwrap();
        assert_eq!(circuit_value_fixed_strategy(&c, &honest).unwrap(), Amp::ONE);
        assert_eq!(circuit_value_fixed_strategy(&c, &ProverStrategy::identity(1, 1)).unwrap(), Amp::ZERO);
        let mut half = ProverStrategy::identity(1, 1);
        half.unitaries[0] = vec![Gate::H(0)];
        assert_eq!(circuit_value_fixed_strategy(&c, &half).unwrap(), Amp::half_pow(1));
    }

    #[test]
    fn snapshots_cover_every_timestep() {
        let c = ProtocolCircuit::parse(TINY).unwrap();
        let s = ProverStrategy::parse(TINY_STRATEGY).unwrap();
        let snaps = run_with_strategy(&c, &s).unwrap();
        assert_eq!(snaps.len(), c.len() + 1);
        assert_eq!(snaps.last().unwrap().prob_one(c.output), Amp::ONE);
    }
}
