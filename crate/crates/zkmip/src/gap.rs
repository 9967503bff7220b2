//! One-round games given by explicit tables: anchoring, parallel
//! repetition, and exact classical values.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;

use crate::error::{parse_err, Error, Result};

/// Bound on the number of deterministic strategies `classical_value`
/// enumerates for the players other than the last.
pub const STRATEGY_CAP: u128 = 1 << 22;

/// Questions and answers are indices into per-player alphabets. The
/// predicate lists, for every question tuple with positive probability,
/// the accepted answer tuples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OneRoundGame {
    pub questions: Vec<usize>,
    pub answers: Vec<usize>,
    pub dist: BTreeMap<Vec<usize>, BigRational>,
    pub accept: BTreeMap<Vec<usize>, BTreeSet<Vec<usize>>>,
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// All tuples with entry i below `sizes[i]`, last entry fastest.
fn tuples(sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &s in sizes {
        out = out.into_iter().flat_map(|t| (0..s).map(move |x| [t.clone(), vec![x]].concat())).collect();
    }
    out
}

impl OneRoundGame {
    pub fn players(&self) -> usize {
        self.questions.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.players();
        if self.answers.len() != k || k == 0 {
            return Err(Error::Format("question and answer alphabets per player".into()));
        }
        let mut total = BigRational::zero();
        for (q, p) in &self.dist {
            if q.len() != k || q.iter().zip(&self.questions).any(|(x, s)| x >= s) {
                return Err(Error::Format(format!("bad question tuple {q:?}")));
            }
            if *p < BigRational::zero() {
                return Err(Error::Format(format!("negative probability for {q:?}")));
            }
            total += p;
        }
        if total != BigRational::one() {
            return Err(Error::Format(format!("probabilities sum to {total}")));
        }
        for (q, acc) in &self.accept {
            if !self.dist.contains_key(q) {
                return Err(Error::Format(format!("predicate for unasked question {q:?}")));
            }
            if acc.iter().any(|a| a.len() != k || a.iter().zip(&self.answers).any(|(x, s)| x >= s)) {
                return Err(Error::Format(format!("bad answer tuple for {q:?}")));
            }
        }
        Ok(())
    }

    pub fn accepts(&self, q: &[usize], a: &[usize]) -> bool {
        self.accept.get(q).is_some_and(|s| s.contains(a))
    }

    /// Value of a deterministic strategy, `strategy[i][q_i]` being player
    /// i's answer.
    pub fn strategy_value(&self, strategy: &[Vec<usize>]) -> BigRational {
        let mut v = BigRational::zero();
        for (q, p) in &self.dist {
            let a: Vec<usize> = q.iter().enumerate().map(|(i, &x)| strategy[i][x]).collect();
            if self.accepts(q, &a) {
                v += p;
            }
        }
        v
    }

    /// A random game with `k` players, small alphabets and probabilities
    /// over a small denominator.
    pub fn random(rng: &mut impl Rng, k: usize, questions: usize, answers: usize) -> OneRoundGame {
        let qs = vec![questions; k];
        let all_q = tuples(&qs);
        let weights: Vec<i64> = all_q.iter().map(|_| rng.gen_range(0..4)).collect();
        let total: i64 = weights.iter().sum::<i64>().max(1);
        let mut dist = BTreeMap::new();
        let mut accept = BTreeMap::new();
        for (q, &w) in all_q.iter().zip(&weights) {
            let w = if total == 0 || weights.iter().all(|&x| x == 0) { 1 } else { w };
            if w == 0 {
                continue;
            }
            dist.insert(q.clone(), rat(w, total.max(1)));
            let acc: BTreeSet<Vec<usize>> = tuples(&vec![answers; k]).into_iter().filter(|_| rng.gen_bool(0.5)).collect();
            accept.insert(q.clone(), acc);
        }
        if weights.iter().all(|&x| x == 0) {
            let n = dist.len() as i64;
            for p in dist.values_mut() {
                *p = rat(1, n);
            }
        }
        OneRoundGame { questions: qs, answers: vec![answers; k], dist, accept }
    }

    pub fn parse(text: &str) -> Result<OneRoundGame> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hl, header) = lines.next().ok_or_else(|| parse_err(1, "empty game file"))?;
        let k: usize = header
            .strip_prefix("GAME k=")
            .and_then(|v| v.trim().parse().ok())
            .filter(|&k| k > 0)
            .ok_or_else(|| parse_err(hl, "expected GAME k=<players>"))?;
        let mut sizes = |key: &str| -> Result<Vec<usize>> {
            let (ln, l) = lines.next().ok_or_else(|| parse_err(hl, format!("missing {key}")))?;
            let v: Vec<usize> = l
                .strip_prefix(key)
                .ok_or_else(|| parse_err(ln, format!("expected {key}")))?
                .split_whitespace()
                .map(|x| x.parse().map_err(|_| parse_err(ln, format!("bad size {x:?}"))))
                .collect::<Result<_>>()?;
            if v.len() != k {
                return Err(parse_err(ln, format!("{key} needs {k} sizes")));
            }
            Ok(v)
        };
        let questions = sizes("QUESTIONS")?;
        let answers = sizes("ANSWERS")?;
        let mut g = OneRoundGame { questions, answers, dist: BTreeMap::new(), accept: BTreeMap::new() };
        for (ln, l) in lines {
            let bad = |m: &str| parse_err(ln, m.to_string());
            let rest = l.strip_prefix("Q ").ok_or_else(|| bad("expected Q <questions> P <prob> ACCEPT <answers>..."))?;
            let (q, rest) = rest.split_once(" P ").ok_or_else(|| bad("missing P"))?;
            let (p, acc) = match rest.split_once("ACCEPT") {
                Some((p, a)) => (p, a),
                None => (rest, ""),
            };
            let q: Vec<usize> = q.split_whitespace().map(|x| x.parse().map_err(|_| bad("bad question"))).collect::<Result<_>>()?;
            let p: BigRational = p.trim().parse().map_err(|_| bad("bad probability"))?;
            let acc: BTreeSet<Vec<usize>> = acc
                .split_whitespace()
                .map(|t| t.split(',').map(|x| x.parse().map_err(|_| bad("bad answer tuple"))).collect::<Result<Vec<usize>>>())
                .collect::<Result<_>>()?;
            if g.dist.insert(q.clone(), p).is_some() {
                return Err(bad("question tuple listed twice"));
            }
            g.accept.insert(q, acc);
        }
        g.validate()?;
        Ok(g)
    }
}

impl fmt::Display for OneRoundGame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[usize], sep: &str| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(sep);
        writeln!(f, "GAME k={}", self.players())?;
        writeln!(f, "QUESTIONS {}", join(&self.questions, " "))?;
        writeln!(f, "ANSWERS {}", join(&self.answers, " "))?;
        for (q, p) in &self.dist {
            write!(f, "Q {} P {p} ACCEPT", join(q, " "))?;
            for a in self.accept.get(q).into_iter().flatten() {
                write!(f, " {}", join(a, ","))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Each player's question is independently replaced by a new symbol (the
/// last index of its alphabet) with probability `alpha`; any such symbol
/// makes the referee accept.
pub fn anchor(game: &OneRoundGame, alpha: &BigRational) -> Result<OneRoundGame> {
    if *alpha <= BigRational::zero() || *alpha >= BigRational::one() {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} must lie strictly between 0 and 1")));
    }
    let k = game.players();
    let questions: Vec<usize> = game.questions.iter().map(|q| q + 1).collect();
    let all_answers: BTreeSet<Vec<usize>> = tuples(&game.answers).into_iter().collect();
    let mut dist: BTreeMap<Vec<usize>, BigRational> = BTreeMap::new();
    let mut accept = BTreeMap::new();
    let keep = BigRational::one() - alpha;
    for (q, p) in &game.dist {
        for mask in 0..(1usize << k) {
            let mut w = p.clone();
            let mut nq = q.clone();
            for i in 0..k {
                if mask >> i & 1 == 1 {
                    w *= alpha;
                    nq[i] = game.questions[i];
                } else {
                    w *= &keep;
                }
            }
            let acc = if mask == 0 { game.accept.get(q).cloned().unwrap_or_default() } else { all_answers.clone() };
            accept.insert(nq.clone(), acc);
            *dist.entry(nq).or_insert_with(BigRational::zero) += w;
        }
    }
    Ok(OneRoundGame { questions, answers: game.answers.clone(), dist, accept })
}

fn pack(xs: &[usize], radix: usize) -> usize {
    xs.iter().rev().fold(0, |acc, &x| acc * radix + x)
}

/// m independent copies played at once; the referee accepts when every
/// copy accepts. Player i's question (answer) is the base-|Q_i| (|A_i|)
/// number whose digit c is copy c's question (answer).
pub fn parallel_repeat(game: &OneRoundGame, m: usize) -> Result<OneRoundGame> {
    if m == 0 {
        return Err(Error::InvalidArgument("at least one copy".into()));
    }
    let k = game.players();
    let questions: Vec<usize> = game.questions.iter().map(|&q| q.pow(m as u32)).collect();
    let answers: Vec<usize> = game.answers.iter().map(|&a| a.pow(m as u32)).collect();
    let support: Vec<(&Vec<usize>, &BigRational)> = game.dist.iter().collect();
    let mut dist = BTreeMap::new();
    let mut accept = BTreeMap::new();
    for combo in tuples(&vec![support.len(); m]) {
        let copies: Vec<&Vec<usize>> = combo.iter().map(|&c| support[c].0).collect();
        let p = combo.iter().fold(BigRational::one(), |acc, &c| acc * support[c].1);
        let q: Vec<usize> = (0..k)
            .map(|i| pack(&copies.iter().map(|qc| qc[i]).collect::<Vec<_>>(), game.questions[i]))
            .collect();
        // accepted answer tuples: one accepted tuple per copy
        let per_copy: Vec<Vec<&Vec<usize>>> =
            copies.iter().map(|qc| game.accept.get(*qc).map(|s| s.iter().collect()).unwrap_or_default()).collect();
        let mut acc = BTreeSet::new();
        for pick in tuples(&per_copy.iter().map(Vec::len).collect::<Vec<_>>()) {
            let a: Vec<usize> = (0..k)
                .map(|i| pack(&(0..m).map(|c| per_copy[c][pick[c]][i]).collect::<Vec<_>>(), game.answers[i]))
                .collect();
            acc.insert(a);
        }
        dist.insert(q.clone(), p);
        accept.insert(q, acc);
    }
    Ok(OneRoundGame { questions, answers, dist, accept })
}

/// Whether some deterministic strategy wins on every question tuple with
/// positive probability, by backtracking over answers.
pub fn has_perfect_strategy(game: &OneRoundGame) -> bool {
    let k = game.players();
    let asked: Vec<&Vec<usize>> = game.dist.iter().filter(|(_, p)| !p.is_zero()).map(|(q, _)| q).collect();
    let mut assign: Vec<Vec<Option<usize>>> = game.questions.iter().map(|&q| vec![None; q]).collect();
    fn go(game: &OneRoundGame, asked: &[&Vec<usize>], i: usize, assign: &mut Vec<Vec<Option<usize>>>, k: usize) -> bool {
        let Some(q) = asked.get(i) else { return true };
        let Some(acc) = game.accept.get(*q) else { return false };
        for a in acc {
            let clash = (0..k).any(|p| assign[p][q[p]].is_some_and(|x| x != a[p]));
            if clash {
                continue;
            }
            let fresh: Vec<usize> = (0..k).filter(|&p| assign[p][q[p]].is_none()).collect();
            for &p in &fresh {
                assign[p][q[p]] = Some(a[p]);
            }
            if go(game, asked, i + 1, assign, k) {
                return true;
            }
            for &p in &fresh {
                assign[p][q[p]] = None;
            }
        }
        false
    }
    go(game, &asked, 0, &mut assign, k)
}

/// Exact maximum winning probability over deterministic strategies. The
/// last player best-responds to each enumerated strategy of the others.
pub fn classical_value(game: &OneRoundGame) -> Result<BigRational> {
    game.validate()?;
    if has_perfect_strategy(game) {
        return Ok(BigRational::one());
    }
    let k = game.players();
    let last = k - 1;
    let mut count: u128 = 1;
    for i in 0..last {
        count = count.saturating_mul((game.answers[i] as u128).saturating_pow(game.questions[i] as u32));
    }
    if count > STRATEGY_CAP {
        return Err(Error::CapacityExceeded(format!("{count} strategies to enumerate")));
    }
    // question tuples grouped by the last player's question
    let mut by_last: BTreeMap<usize, Vec<(&Vec<usize>, &BigRational)>> = BTreeMap::new();
    for (q, p) in &game.dist {
        by_last.entry(q[last]).or_default().push((q, p));
    }
    let mut best = BigRational::zero();
    let mut strat: Vec<Vec<usize>> = (0..last).map(|i| vec![0; game.questions[i]]).collect();
    loop {
        let mut v = BigRational::zero();
        for group in by_last.values() {
            let mut top = BigRational::zero();
            for b in 0..game.answers[last] {
                let mut s = BigRational::zero();
                for (q, p) in group {
                    let mut a: Vec<usize> = (0..last).map(|i| strat[i][q[i]]).collect();
                    a.push(b);
                    if game.accepts(q, &a) {
                        s += *p;
                    }
                }
                if s > top {
                    top = s;
                }
            }
            v += top;
        }
        if v > best {
            best = v;
        }
        // next strategy, odometer style
        let mut carried = true;
        'outer: for i in 0..last {
            for x in strat[i].iter_mut() {
                *x += 1;
                if *x < game.answers[i] {
                    carried = false;
                    break 'outer;
                }
                *x = 0;
            }
        }
        if carried {
            break;
        }
    }
    Ok(best)
}

/// (1-alpha)^k v + 1 - (1-alpha)^k
pub fn anchored_value(v: &BigRational, alpha: &BigRational, k: usize) -> BigRational {
    let keep = num_traits::pow::pow(BigRational::one() - alpha, k);
    &keep * v + BigRational::one() - keep
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) const GUESS: &str = include_str!("../fixtures/guess.game");

    #[test]
    fn guessing_game_value_and_anchor() {
        let g = OneRoundGame::parse(GUESS).unwrap();
        assert_eq!(classical_value(&g).unwrap(), rat(1, 2));
        let a = anchor(&g, &rat(1, 2)).unwrap();
        assert_eq!(classical_value(&a).unwrap(), rat(7, 8));
    }

    #[test]
    fn text_round_trip() {
        let g = OneRoundGame::parse(GUESS).unwrap();
        assert_eq!(OneRoundGame::parse(&g.to_string()).unwrap(), g);
        assert!(matches!(OneRoundGame::parse("GAME k=2\nQUESTIONS 2\n"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn trivially_accepting_game_has_value_one() {
        let mut g = OneRoundGame::random(&mut ChaCha8Rng::seed_from_u64(1), 2, 2, 2);
        let all: BTreeSet<Vec<usize>> = tuples(&g.answers).into_iter().collect();
        for acc in g.accept.values_mut() {
            *acc = all.clone();
        }
        assert_eq!(classical_value(&g).unwrap(), BigRational::one());
        assert_eq!(parallel_repeat(&g, 1).unwrap(), g);
    }

    #[test]
    fn alpha_out_of_range() {
        let g = OneRoundGame::parse(GUESS).unwrap();
        assert!(anchor(&g, &BigRational::one()).is_err());
        assert!(anchor(&g, &BigRational::zero()).is_err());
    }

    #[test]
    fn repetition_does_not_help() {
        let g = OneRoundGame::parse(GUESS).unwrap();
        let g2 = parallel_repeat(&g, 2).unwrap();
        g2.validate().unwrap();
        assert!(classical_value(&g2).unwrap() <= classical_value(&g).unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn anchoring_identity_per_strategy(seed in any::<u64>(), a in 0usize..2, s1 in 0usize..4, s2 in 0usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = OneRoundGame::random(&mut rng, 2, 2, 2);
            let alpha = [rat(1, 4), rat(1, 2)][a].clone();
            let an = anchor(&g, &alpha).unwrap();
            an.validate().unwrap();
            let s = vec![vec![s1 & 1, s1 >> 1], vec![s2 & 1, s2 >> 1]];
            // the new symbol can be answered with anything
            let s_an = vec![vec![s1 & 1, s1 >> 1, 0], vec![s2 & 1, s2 >> 1, 1]];
            prop_assert_eq!(an.strategy_value(&s_an), anchored_value(&g.strategy_value(&s), &alpha, 2));
        }

        #[test]
        fn repeated_product_strategy(seed in any::<u64>(), s1 in 0usize..4, s2 in 0usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = OneRoundGame::random(&mut rng, 2, 2, 2);
            let s = vec![vec![s1 & 1, s1 >> 1], vec![s2 & 1, s2 >> 1]];
            let g2 = parallel_repeat(&g, 2).unwrap();
            // copy c's question is digit c, so question x gets answer s(x%2) + 2 s(x/2)
            let s2v: Vec<Vec<usize>> = s.iter().map(|si| (0..4).map(|x| si[x % 2] + 2 * si[x / 2]).collect()).collect();
            let v = g.strategy_value(&s);
            prop_assert_eq!(g2.strategy_value(&s2v), &v * &v);
        }
    }
}
