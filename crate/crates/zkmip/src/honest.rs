//! Question tuples, answer vectors and the honest players' observables.
//!
//! Verifier player r receives six commuting two-qubit Paulis over {I,X,Z}
//! acting on its shares; prover player i receives one of STAR, Q j, QF,
//! A j, AF. Answer bit 0 is the +1 eigenvalue.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::codes::StabilizerCode;
use crate::error::{Error, Result};
use crate::history::{FlagKind, LogicalReg, RegisterMap, VERIFIER_PLAYERS};
use crate::pauli::{Letter, Pauli};
use crate::ring::Amp;

/// Bound on the number of logical registers verifier questions may touch.
pub const SUPPORT_LIMIT: usize = 48;
pub const VERIFIER_OBSERVABLES: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Player {
    Verifier(usize),
    Prover(usize),
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Player::Verifier(r) => write!(f, "PV{}", r + 1),
            Player::Prover(i) => write!(f, "PP{}", i + 1),
        }
    }
}

impl FromStr for Player {
    type Err = Error;
    fn from_str(s: &str) -> Result<Player> {
        let bad = || Error::Format(format!("bad player {s:?}"));
        let (kind, idx) = s.split_at(s.len().min(2));
        let i: usize = idx.parse().map_err(|_| bad())?;
        if i == 0 {
            return Err(bad());
        }
        match kind {
            "PV" => Ok(Player::Verifier(i - 1)),
            "PP" => Ok(Player::Prover(i - 1)),
            _ => Err(bad()),
        }
    }
}

/// A two-qubit Pauli on a verifier player's shares (0-based local qubits).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TwoQubitObs {
    pub letters: [Letter; 2],
    pub qubits: [usize; 2],
}

impl TwoQubitObs {
    pub fn identity() -> TwoQubitObs {
        TwoQubitObs { letters: [Letter::I; 2], qubits: [0, 1] }
    }

    pub fn is_identity(&self) -> bool {
        self.letters == [Letter::I; 2]
    }

    /// Non-identity (qubit, letter) pairs.
    pub fn items(&self) -> impl Iterator<Item = (usize, Letter)> + '_ {
        (0..2).filter(|&i| self.letters[i] != Letter::I).map(|i| (self.qubits[i], self.letters[i]))
    }

    pub fn commutes(&self, o: &TwoQubitObs) -> bool {
        let mut anti = 0;
        for (q, a) in self.items() {
            for (r, b) in o.items() {
                if q == r && a != b {
                    anti += 1;
                }
            }
        }
        anti % 2 == 0
    }
}

impl fmt::Display for TwoQubitObs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..2 {
            write!(f, "{}{}", self.letters[i].to_char(), self.qubits[i] + 1)?;
        }
        Ok(())
    }
}

impl FromStr for TwoQubitObs {
    type Err = Error;
    fn from_str(s: &str) -> Result<TwoQubitObs> {
        let bad = || Error::Format(format!("bad two-qubit observable {s:?}"));
        let mut parts = Vec::new();
        let mut chars = s.trim().chars().peekable();
        while let Some(c) = chars.next() {
            let l = Letter::from_char(c).ok_or_else(bad)?;
            let mut digits = String::new();
            while let Some(d) = chars.peek().filter(|d| d.is_ascii_digit()) {
                digits.push(*d);
                chars.next();
            }
            let q: usize = digits.parse().map_err(|_| bad())?;
            if q == 0 {
                return Err(bad());
            }
            parts.push((l, q - 1));
        }
        let [(a, p), (b, q)] = parts[..] else { return Err(bad()) };
        Ok(TwoQubitObs { letters: [a, b], qubits: [p, q] })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProverQuestion {
    Star,
    /// Message qubit j (0-based) in the X basis.
    Q(usize),
    QF,
    /// Message qubit j in the Z basis.
    A(usize),
    AF,
}

impl fmt::Display for ProverQuestion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProverQuestion::Star => write!(f, "STAR"),
            ProverQuestion::Q(j) => write!(f, "Q{}", j + 1),
            ProverQuestion::QF => write!(f, "QF"),
            ProverQuestion::A(j) => write!(f, "A{}", j + 1),
            ProverQuestion::AF => write!(f, "AF"),
        }
    }
}

impl FromStr for ProverQuestion {
    type Err = Error;
    fn from_str(s: &str) -> Result<ProverQuestion> {
        let s: String = s.split_whitespace().collect();
        let bad = || Error::Format(format!("bad prover question {s:?}"));
        let idx = |r: &str| -> Result<usize> {
            let j: usize = r.parse().map_err(|_| bad())?;
            j.checked_sub(1).ok_or_else(bad)
        };
        match s.as_str() {
            "STAR" => Ok(ProverQuestion::Star),
            "QF" => Ok(ProverQuestion::QF),
            "AF" => Ok(ProverQuestion::AF),
            _ if s.starts_with('Q') => Ok(ProverQuestion::Q(idx(&s[1..])?)),
            _ if s.starts_with('A') => Ok(ProverQuestion::A(idx(&s[1..])?)),
            _ => Err(bad()),
        }
    }
}

/// Answer slot of a non-identity observable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    Verifier(usize, usize),
    Prover(usize),
}

impl Slot {
    pub fn player(&self) -> Player {
        match *self {
            Slot::Verifier(r, _) => Player::Verifier(r),
            Slot::Prover(i) => Player::Prover(i),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct QuestionTuple {
    pub verifier: BTreeMap<usize, [TwoQubitObs; VERIFIER_OBSERVABLES]>,
    pub prover: BTreeMap<usize, ProverQuestion>,
}

/// A Pauli on logical registers with an i^phase factor, and the provers
/// whose reflection P' appears as well.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LogicalTerm {
    pub phase: u8,
    pub paulis: BTreeMap<LogicalReg, Letter>,
    pub stars: Vec<usize>,
}

fn outer() -> &'static StabilizerCode {
    static OUTER: OnceLock<StabilizerCode> = OnceLock::new();
    OUTER.get_or_init(StabilizerCode::outer_code)
}

/// a * b = i^phase * letter
pub fn letter_mul(a: Letter, b: Letter) -> (u8, Letter) {
    let p = Pauli::from_letters(&[a]).mul(&Pauli::from_letters(&[b])).expect("one qubit");
    (p.phase(), p.letter(0))
}

impl QuestionTuple {
    pub fn players(&self) -> Vec<Player> {
        let mut v: Vec<Player> = self.verifier.keys().map(|&r| Player::Verifier(r)).collect();
        v.extend(self.prover.keys().map(|&i| Player::Prover(i)));
        v
    }

    pub fn is_empty(&self) -> bool {
        self.verifier.is_empty() && self.prover.is_empty()
    }

    /// Union of two tuples over disjoint players.
    pub fn merge(&self, o: &QuestionTuple) -> Result<QuestionTuple> {
        let mut out = self.clone();
        for (r, q) in &o.verifier {
            if out.verifier.insert(*r, *q).is_some() {
                return Err(Error::InvalidArgument(format!("player {} asked twice", Player::Verifier(*r))));
            }
        }
        for (i, q) in &o.prover {
            if out.prover.insert(*i, *q).is_some() {
                return Err(Error::InvalidArgument(format!("player {} asked twice", Player::Prover(*i))));
            }
        }
        Ok(out)
    }

    /// Restriction to some players.
    pub fn restrict(&self, players: &[Player]) -> QuestionTuple {
        QuestionTuple {
            verifier: self.verifier.iter().filter(|(r, _)| players.contains(&Player::Verifier(**r))).map(|(r, q)| (*r, *q)).collect(),
            prover: self.prover.iter().filter(|(i, _)| players.contains(&Player::Prover(**i))).map(|(i, q)| (*i, *q)).collect(),
        }
    }

    /// Every problem with the tuple; empty when valid.
    pub fn problems(&self, map: &RegisterMap) -> Vec<String> {
        let mut out = Vec::new();
        for (&r, obs) in &self.verifier {
            let p = Player::Verifier(r);
            if r >= VERIFIER_PLAYERS {
                out.push(format!("{p}: no such verifier player"));
                continue;
            }
            for (j, o) in obs.iter().enumerate() {
                if o.letters.contains(&Letter::Y) {
                    out.push(format!("{p} observable {}: letter Y not allowed", j + 1));
                }
                if o.qubits[0] == o.qubits[1] {
                    out.push(format!("{p} observable {}: repeated qubit", j + 1));
                }
                if let Some(q) = o.qubits.iter().find(|&&q| q >= map.shares()) {
                    out.push(format!("{p} observable {}: qubit {} out of range", j + 1, q + 1));
                }
                for (k, o2) in obs.iter().enumerate().skip(j + 1) {
                    if !o.commutes(o2) {
                        out.push(format!("{p} observables {} and {} anticommute", j + 1, k + 1));
                    }
                }
            }
        }
        for (&i, q) in &self.prover {
            if i >= map.k {
                out.push(format!("{}: no such prover player", Player::Prover(i)));
            }
            if let ProverQuestion::Q(j) | ProverQuestion::A(j) = q {
                if *j >= map.m {
                    out.push(format!("{}: message qubit {} out of range", Player::Prover(i), j + 1));
                }
            }
        }
        if out.is_empty() {
            let support = self.verifier_support(map).len();
            if support > SUPPORT_LIMIT {
                out.push(format!("verifier questions touch {support} registers, limit {SUPPORT_LIMIT}"));
            }
        }
        out
    }

    pub fn check(&self, map: &RegisterMap) -> Result<()> {
        let p = self.problems(map);
        if p.is_empty() {
            Ok(())
        } else {
            Err(Error::Format(p.join("; ")))
        }
    }

    /// Logical clock and verifier registers touched by verifier questions.
    pub fn verifier_support(&self, map: &RegisterMap) -> BTreeSet<LogicalReg> {
        self.verifier
            .values()
            .flat_map(|obs| obs.iter().flat_map(|o| o.items().map(|(q, _)| q)).collect::<Vec<_>>())
            .filter_map(|q| map.verifier_local(q))
            .collect()
    }

    /// S_W: every logical register some observable acts on. Star adds the
    /// P flag; the prover's own registers are not listed.
    pub fn logical_support(&self, map: &RegisterMap) -> BTreeSet<LogicalReg> {
        let mut s = self.verifier_support(map);
        for (&prover, q) in &self.prover {
            s.insert(match *q {
                ProverQuestion::Q(j) | ProverQuestion::A(j) => LogicalReg::Message { prover, j },
                ProverQuestion::QF => LogicalReg::Flag { prover, kind: FlagKind::Q },
                ProverQuestion::AF => LogicalReg::Flag { prover, kind: FlagKind::A },
                ProverQuestion::Star => LogicalReg::Flag { prover, kind: FlagKind::P },
            });
        }
        s
    }

    /// Answer slots of the non-identity observables, in canonical order.
    pub fn slots(&self) -> Vec<Slot> {
        let mut v = Vec::new();
        for (&r, obs) in &self.verifier {
            v.extend((0..VERIFIER_OBSERVABLES).filter(|&j| !obs[j].is_identity()).map(|j| Slot::Verifier(r, j)));
        }
        v.extend(self.prover.keys().map(|&i| Slot::Prover(i)));
        v
    }

    /// The product of the observables selected by `u` (one bit per slot),
    /// pulled back through the outer code. None when the product is
    /// orthogonal to every encoded state. With `destar`, P' is replaced by
    /// sigma_X on the P flag.
    pub fn term(&self, map: &RegisterMap, slots: &[Slot], u: &[bool], destar: bool) -> Option<LogicalTerm> {
        let mut t = LogicalTerm::default();
        // share letters per logical register, one per verifier player
        let mut shares: BTreeMap<usize, [Letter; VERIFIER_PLAYERS]> = BTreeMap::new();
        for (slot, _) in slots.iter().zip(u).filter(|(_, b)| **b) {
            match *slot {
                Slot::Verifier(r, j) => {
                    for (q, l) in self.verifier[&r][j].items() {
                        let cur = &mut shares.entry(q).or_insert([Letter::I; VERIFIER_PLAYERS])[r];
                        let (ph, nl) = letter_mul(*cur, l);
                        t.phase = (t.phase + ph) & 3;
                        *cur = nl;
                    }
                }
                Slot::Prover(prover) => {
                    let (reg, letter) = match self.prover[&prover] {
                        ProverQuestion::Q(j) => (LogicalReg::Message { prover, j }, Letter::X),
                        ProverQuestion::A(j) => (LogicalReg::Message { prover, j }, Letter::Z),
                        ProverQuestion::QF => (LogicalReg::Flag { prover, kind: FlagKind::Q }, Letter::X),
                        ProverQuestion::AF => (LogicalReg::Flag { prover, kind: FlagKind::A }, Letter::X),
                        ProverQuestion::Star if destar => (LogicalReg::Flag { prover, kind: FlagKind::P }, Letter::X),
                        ProverQuestion::Star => {
                            t.stars.push(prover);
                            continue;
                        }
                    };
                    t.paulis.insert(reg, letter);
                }
            }
        }
        for (q, letters) in shares {
            let reg = map.verifier_local(q)?;
            let d = outer().logical_decomposition(&Pauli::from_letters(&letters)).expect("4 shares")?;
            let lp = d.logical_pauli();
            t.phase = (t.phase + lp.phase()) & 3;
            if lp.letter(0) != Letter::I {
                t.paulis.insert(reg, lp.letter(0));
            }
        }
        Some(t)
    }

    /// A random valid tuple touching a few logical registers. Each chosen
    /// register gets a logical X or Z, a stabilizer, or a detectable
    /// single-share error, spread over the verifier players' shares.
    pub fn random(map: &RegisterMap, t_star: &[usize], rng: &mut impl Rng, max_slots: usize) -> QuestionTuple {
        loop {
            let q = Self::random_once(map, t_star, rng);
            if q.slots().len() <= max_slots && q.problems(map).is_empty() {
                return q;
            }
        }
    }

    fn random_once(map: &RegisterMap, t_star: &[usize], rng: &mut impl Rng) -> QuestionTuple {
        let mut regs: Vec<usize> = Vec::new();
        // a window of consecutive clock qubits, often around a prover gate
        let len = rng.gen_range(0..=3usize);
        if len > 0 && map.t > 0 {
            let centre = if !t_star.is_empty() && rng.gen_bool(0.5) {
                *t_star.choose(rng).expect("nonempty")
            } else {
                rng.gen_range(1..=map.t)
            };
            let lo = centre.saturating_sub(rng.gen_range(0..len)).max(1);
            for l in lo..(lo + len).min(map.t + 1) {
                regs.push(l - 1);
            }
        }
        for _ in 0..rng.gen_range(0..=2usize) {
            let v = map.t + rng.gen_range(0..map.n);
            if !regs.contains(&v) {
                regs.push(v);
            }
        }
        let (lx, lz) = StabilizerCode::outer_code_logicals();
        let stabs = ["XXXX", "ZIIZ", "IZZI"];
        let mut items: Vec<Vec<(usize, Letter)>> = vec![vec![]; VERIFIER_PLAYERS];
        for &q in &regs {
            let p: Pauli = match rng.gen_range(0..6) {
                0 | 1 => lx.choose(rng).expect("reps").clone(),
                2 | 3 => lz.choose(rng).expect("reps").clone(),
                4 => stabs.choose(rng).expect("stabs").parse().expect("valid"),
                _ => {
                    let l = *[Letter::X, Letter::Z].choose(rng).expect("letters");
                    Pauli::single(4, rng.gen_range(0..4), l)
                }
            };
            for (r, it) in items.iter_mut().enumerate() {
                if p.letter(r) != Letter::I {
                    it.push((q, p.letter(r)));
                }
            }
        }
        let mut out = QuestionTuple::default();
        for (r, mut it) in items.into_iter().enumerate() {
            if it.is_empty() && rng.gen_bool(0.7) {
                continue;
            }
            it.shuffle(rng);
            let mut obs = [TwoQubitObs::identity(); VERIFIER_OBSERVABLES];
            let mut slot = 0;
            let mut i = 0;
            while i < it.len() && slot < VERIFIER_OBSERVABLES {
                let (a, la) = it[i];
                if i + 1 < it.len() && rng.gen_bool(0.5) {
                    let (b, lb) = it[i + 1];
                    obs[slot] = TwoQubitObs { letters: [la, lb], qubits: [a, b] };
                    i += 2;
                } else {
                    let other = if a == 0 { 1 } else { 0 };
                    obs[slot] = TwoQubitObs { letters: [la, Letter::I], qubits: [a, other] };
                    i += 1;
                }
                slot += 1;
            }
            obs.shuffle(rng);
            out.verifier.insert(r, obs);
        }
        for i in 0..map.k {
            let pick = rng.gen_range(0..7);
            let q = match pick {
                0 | 1 => ProverQuestion::Star,
                2 => ProverQuestion::Q(rng.gen_range(0..map.m.max(1))),
                3 => ProverQuestion::A(rng.gen_range(0..map.m.max(1))),
                4 => ProverQuestion::QF,
                5 => ProverQuestion::AF,
                _ => continue,
            };
            out.prover.insert(i, q);
        }
        out
    }
}

impl fmt::Display for QuestionTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (&r, obs) in &self.verifier {
            let o: Vec<String> = obs.iter().map(|o| o.to_string()).collect();
            parts.push(format!("{}: {}", Player::Verifier(r), o.join(",")));
        }
        for (&i, q) in &self.prover {
            parts.push(format!("{}: {q}", Player::Prover(i)));
        }
        write!(f, "{}", parts.join(" | "))
    }
}

impl FromStr for QuestionTuple {
    type Err = Error;
    fn from_str(s: &str) -> Result<QuestionTuple> {
        let mut out = QuestionTuple::default();
        if s.trim().is_empty() {
            return Ok(out);
        }
        for part in s.split('|') {
            let (who, what) = part.split_once(':').ok_or_else(|| Error::Format(format!("missing ':' in {part:?}")))?;
            match who.trim().parse::<Player>()? {
                Player::Verifier(r) => {
                    let obs: Vec<TwoQubitObs> = what.split(',').map(str::parse).collect::<Result<_>>()?;
                    let obs: [TwoQubitObs; VERIFIER_OBSERVABLES] = obs
                        .try_into()
                        .map_err(|_| Error::Format(format!("{} needs six observables", Player::Verifier(r))))?;
                    if out.verifier.insert(r, obs).is_some() {
                        return Err(Error::Format(format!("{} asked twice", Player::Verifier(r))));
                    }
                }
                Player::Prover(i) => {
                    if out.prover.insert(i, what.parse()?).is_some() {
                        return Err(Error::Format(format!("{} asked twice", Player::Prover(i))));
                    }
                }
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AnswerVector {
    pub verifier: BTreeMap<usize, [bool; VERIFIER_OBSERVABLES]>,
    pub prover: BTreeMap<usize, bool>,
}

impl AnswerVector {
    /// Answers from one bit per slot; identity observables answer 0.
    pub fn from_slots(q: &QuestionTuple, slots: &[Slot], bits: &[bool]) -> AnswerVector {
        let mut a = AnswerVector::default();
        for &r in q.verifier.keys() {
            a.verifier.insert(r, [false; VERIFIER_OBSERVABLES]);
        }
        for (s, &b) in slots.iter().zip(bits) {
            match *s {
                Slot::Verifier(r, j) => a.verifier.get_mut(&r).expect("asked")[j] = b,
                Slot::Prover(i) => {
                    a.prover.insert(i, b);
                }
            }
        }
        a
    }

    /// Bits on the slots, or None when an identity observable answered 1.
    pub fn slot_bits(&self, q: &QuestionTuple, slots: &[Slot]) -> Option<Vec<bool>> {
        for (r, obs) in &q.verifier {
            let ans = self.verifier.get(r)?;
            if (0..VERIFIER_OBSERVABLES).any(|j| obs[j].is_identity() && ans[j]) {
                return None;
            }
        }
        slots
            .iter()
            .map(|s| match *s {
                Slot::Verifier(r, j) => self.verifier.get(&r).map(|a| a[j]),
                Slot::Prover(i) => self.prover.get(&i).copied(),
            })
            .collect()
    }

    /// Answer bit `index` of player `p` (0-based; provers have one bit).
    pub fn bit(&self, p: Player, index: usize) -> Option<bool> {
        match p {
            Player::Verifier(r) => self.verifier.get(&r).and_then(|a| a.get(index).copied()),
            Player::Prover(i) if index == 0 => self.prover.get(&i).copied(),
            Player::Prover(_) => None,
        }
    }
}

impl fmt::Display for AnswerVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (&r, a) in &self.verifier {
            let bits: String = a.iter().map(|b| if *b { '1' } else { '0' }).collect();
            parts.push(format!("{}={bits}", Player::Verifier(r)));
        }
        for (&i, b) in &self.prover {
            parts.push(format!("{}={}", Player::Prover(i), *b as u8));
        }
        write!(f, "{}", parts.join(" "))
    }
}

impl FromStr for AnswerVector {
    type Err = Error;
    fn from_str(s: &str) -> Result<AnswerVector> {
        let mut a = AnswerVector::default();
        for tok in s.split_whitespace() {
            let (who, bits) = tok.split_once('=').ok_or_else(|| Error::Format(format!("bad answer {tok:?}")))?;
            let bits: Vec<bool> = bits
                .chars()
                .map(|c| match c {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    _ => Err(Error::Format(format!("bad answer bits {bits:?}"))),
                })
                .collect::<Result<_>>()?;
            match who.parse::<Player>()? {
                Player::Verifier(r) => {
                    let arr: [bool; VERIFIER_OBSERVABLES] =
                        bits.try_into().map_err(|_| Error::Format(format!("{tok}: six bits expected")))?;
                    a.verifier.insert(r, arr);
                }
                Player::Prover(i) => {
                    let [b] = bits[..] else { return Err(Error::Format(format!("{tok}: one bit expected"))) };
                    a.prover.insert(i, b);
                }
            }
        }
        Ok(a)
    }
}

/// A player's observable on the history state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Observable {
    /// Pauli on verifier player `player`'s shares.
    Share { player: usize, paulis: Vec<(usize, Letter)> },
    Register { reg: LogicalReg, letter: Letter },
    /// P' = |0><1| ⊗ P† + |1><0| ⊗ P on the P flag and the prover's
    /// registers.
    Star { prover: usize },
}

/// The projector (I + (-1)^outcome O)/2.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProjectorFactor {
    pub player: Player,
    pub observable: Observable,
    pub outcome: bool,
}

/// The projector factors of W(a) and of the de-starred W~(a), where STAR
/// is replaced by sigma_X on the P flag.
pub fn projectors_for(q: &QuestionTuple, a: &AnswerVector) -> Result<(Vec<ProjectorFactor>, Vec<ProjectorFactor>)> {
    let mut w = Vec::new();
    let mut wt = Vec::new();
    for (&r, obs) in &q.verifier {
        let ans = a.verifier.get(&r).ok_or_else(|| Error::InvalidArgument(format!("no answer from PV{}", r + 1)))?;
        for (j, o) in obs.iter().enumerate() {
            let f = ProjectorFactor {
                player: Player::Verifier(r),
                observable: Observable::Share { player: r, paulis: o.items().collect() },
                outcome: ans[j],
            };
            w.push(f.clone());
            wt.push(f);
        }
    }
    for (&prover, pq) in &q.prover {
        let outcome = *a.prover.get(&prover).ok_or_else(|| Error::InvalidArgument(format!("no answer from PP{}", prover + 1)))?;
        let player = Player::Prover(prover);
        let reg = |reg, letter| Observable::Register { reg, letter };
        let (o, ot) = match *pq {
            ProverQuestion::Q(j) => (reg(LogicalReg::Message { prover, j }, Letter::X), None),
            ProverQuestion::A(j) => (reg(LogicalReg::Message { prover, j }, Letter::Z), None),
            ProverQuestion::QF => (reg(LogicalReg::Flag { prover, kind: FlagKind::Q }, Letter::X), None),
            ProverQuestion::AF => (reg(LogicalReg::Flag { prover, kind: FlagKind::A }, Letter::X), None),
            ProverQuestion::Star => {
                (Observable::Star { prover }, Some(reg(LogicalReg::Flag { prover, kind: FlagKind::P }, Letter::X)))
            }
        };
        wt.push(ProjectorFactor { player, observable: ot.unwrap_or_else(|| o.clone()), outcome });
        w.push(ProjectorFactor { player, observable: o, outcome });
    }
    Ok((w, wt))
}

/// Exact distribution over the answer bits of a tuple's non-identity
/// observables: probability of index x is `table[x] / denom`, with bit i of
/// x the answer in `slots[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnswerDistribution {
    pub slots: Vec<Slot>,
    pub denom: u64,
    pub table: Vec<Amp>,
}

impl AnswerDistribution {
    /// From the correlators E(u) = denom * Tr(rho prod_{i in u} O_i):
    /// p(x) = 2^-N sum_u (-1)^{x.u} E(u).
    pub fn from_correlators(slots: Vec<Slot>, denom: u64, mut e: Vec<Amp>) -> AnswerDistribution {
        let n = slots.len();
        assert_eq!(e.len(), 1 << n);
        let mut h = 1;
        while h < e.len() {
            for i in (0..e.len()).step_by(2 * h) {
                for j in i..i + h {
                    let (a, b) = (e[j], e[j + h]);
                    e[j] = a + b;
                    e[j + h] = a - b;
                }
            }
            h *= 2;
        }
        let scale = Amp::half_pow(n as u32);
        let table = e.into_iter().map(|x| x * scale).collect();
        AnswerDistribution { slots, denom, table }
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn prob_f64(&self, x: usize) -> f64 {
        self.table[x].to_f64().0 / self.denom as f64
    }

    /// Sum of the numerators; equals `denom` for a normalised state.
    pub fn total(&self) -> Amp {
        self.table.iter().copied().sum()
    }

    /// Probability (numerator) of an answer vector; zero when an identity
    /// observable answered 1.
    pub fn prob(&self, q: &QuestionTuple, a: &AnswerVector) -> Amp {
        match a.slot_bits(q, &self.slots) {
            Some(bits) => self.table[bits_to_index(&bits)],
            None => Amp::ZERO,
        }
    }

    /// Marginal on the slots at positions `keep`, in that order.
    pub fn marginal(&self, keep: &[usize]) -> AnswerDistribution {
        let mut table = vec![Amp::ZERO; 1 << keep.len()];
        for (x, p) in self.table.iter().enumerate() {
            let y: usize = keep.iter().enumerate().map(|(i, &k)| (x >> k & 1) << i).sum();
            table[y] += *p;
        }
        AnswerDistribution { slots: keep.iter().map(|&k| self.slots[k]).collect(), denom: self.denom, table }
    }

    /// Samples the slots in `free` given fixed values for the rest, one
    /// slot at a time from the conditional marginals. `fixed[i]` is used
    /// for slots not in `free`. Returns None when the conditioning event
    /// has probability zero.
    pub fn sample_conditional(&self, fixed: &[bool], free: &[usize], rng: &mut impl Rng) -> Option<Vec<bool>> {
        let n = self.slots.len();
        let mut bits = fixed.to_vec();
        let consistent = |x: usize, bits: &[bool], decided: &[bool]| (0..n).all(|i| !decided[i] || (x >> i & 1 == 1) == bits[i]);
        let mut decided: Vec<bool> = (0..n).map(|i| !free.contains(&i)).collect();
        for &i in free {
            let (mut p0, mut p1) = (0.0, 0.0);
            for x in 0..self.table.len() {
                if consistent(x, &bits, &decided) {
                    let p = self.prob_f64(x).max(0.0);
                    if x >> i & 1 == 1 {
                        p1 += p;
                    } else {
                        p0 += p;
                    }
                }
            }
            if p0 + p1 <= 0.0 {
                return None;
            }
            bits[i] = rng.gen::<f64>() * (p0 + p1) >= p0;
            decided[i] = true;
        }
        Some(bits)
    }
}

pub fn bits_to_index(bits: &[bool]) -> usize {
    bits.iter().enumerate().map(|(i, &b)| (b as usize) << i).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn map() -> RegisterMap {
        RegisterMap { t: 9, n: 2, k: 1, m: 1 }
    }

    #[test]
    fn question_text_round_trip() {
        let s = "PV1: X1X2,Z1Z2,I7Z5,X3Z4,Z3X4,X7I5 | PP1: STAR";
        let q: QuestionTuple = s.parse().unwrap();
        assert_eq!(q.to_string(), s);
        assert!(q.problems(&map()).is_empty(), "{:?}", q.problems(&map()));
        let p: QuestionTuple = "PP1: Q1".parse().unwrap();
        assert_eq!(p.prover[&0], ProverQuestion::Q(0));
        assert_eq!("PP1: Q 1".parse::<QuestionTuple>().unwrap(), p);
    }

    #[test]
    fn anticommuting_and_out_of_range_questions_are_reported() {
        let q: QuestionTuple = "PV2: X1I2,Z1I2,I1I2,I1I2,I1I2,I1I2".parse().unwrap();
        assert_eq!(q.problems(&map()).len(), 1);
        let q: QuestionTuple = "PV2: X12I2,I1I2,I1I2,I1I2,I1I2,I1I2".parse().unwrap();
        assert!(q.problems(&map())[0].contains("out of range"));
        let q: QuestionTuple = "PV1: Y1I2,I1I2,I1I2,I1I2,I1I2,I1I2".parse().unwrap();
        assert!(q.check(&map()).is_err());
        assert!("PV1: X1X2".parse::<QuestionTuple>().is_err());
    }

    #[test]
    fn logical_x_spread_over_two_players() {
        // XIIX on the shares of V1 (local qubit 10) is the logical X
        let q: QuestionTuple = "PV1: X10I1,I1I2,I1I2,I1I2,I1I2,I1I2 | PV4: X10I1,I1I2,I1I2,I1I2,I1I2,I1I2".parse().unwrap();
        let m = map();
        let slots = q.slots();
        assert_eq!(slots, vec![Slot::Verifier(0, 0), Slot::Verifier(3, 0)]);
        let t = q.term(&m, &slots, &[true, true], false).unwrap();
        assert_eq!(t.paulis.get(&LogicalReg::Verifier(0)), Some(&Letter::X));
        assert_eq!(t.phase, 0);
        // a single share is a detectable error
        assert!(q.term(&m, &slots, &[true, false], false).is_none());
        assert_eq!(q.term(&m, &slots, &[false, false], false), Some(LogicalTerm::default()));
    }

    #[test]
    fn star_is_replaced_by_flag_x() {
        let q: QuestionTuple = "PP1: STAR".parse().unwrap();
        let a: AnswerVector = "PP1=1".parse().unwrap();
        let (w, wt) = projectors_for(&q, &a).unwrap();
        assert_eq!(w[0].observable, Observable::Star { prover: 0 });
        assert_eq!(
            wt[0].observable,
            Observable::Register { reg: LogicalReg::Flag { prover: 0, kind: FlagKind::P }, letter: Letter::X }
        );
        let slots = q.slots();
        assert_eq!(q.term(&map(), &slots, &[true], false).unwrap().stars, vec![0]);
        assert!(q.term(&map(), &slots, &[true], true).unwrap().stars.is_empty());
    }

    #[test]
    fn answer_text_round_trip() {
        let a: AnswerVector = "PV1=010011 PP1=1".parse().unwrap();
        assert_eq!(a.to_string(), "PV1=010011 PP1=1");
        assert_eq!(a.bit(Player::Verifier(0), 1), Some(true));
        assert_eq!(a.bit(Player::Prover(0), 0), Some(true));
    }

    #[test]
    fn walsh_transform_of_a_fair_coin_and_a_fixed_bit() {
        let slots = vec![Slot::Prover(0), Slot::Verifier(0, 0)];
        // E(0)=1, E(prover)=0, E(verifier)=-1, E(both)=0: bit 1 always reads 1
        let d = AnswerDistribution::from_correlators(slots, 1, vec![Amp::ONE, Amp::ZERO, -Amp::ONE, Amp::ZERO]);
        assert_eq!(d.table, vec![Amp::ZERO, Amp::ZERO, Amp::half_pow(1), Amp::half_pow(1)]);
        assert_eq!(d.marginal(&[1]).table, vec![Amp::ZERO, Amp::ONE]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = d.sample_conditional(&[false, false], &[0, 1], &mut rng).unwrap();
        assert!(s[1]);
        assert!(d.sample_conditional(&[false, false], &[0], &mut rng).is_none());
    }

    #[test]
    fn random_tuples_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = map();
        for _ in 0..200 {
            let q = QuestionTuple::random(&m, &[4], &mut rng, 10);
            assert!(q.problems(&m).is_empty());
            assert!(q.slots().len() <= 10);
            let round: QuestionTuple = q.to_string().parse().unwrap();
            assert_eq!(round, q);
        }
    }
}
