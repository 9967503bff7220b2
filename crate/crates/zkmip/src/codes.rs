//! Stabilizer codes: Steane, concatenated Steane, product codes and the
//! four-qubit outer code, with exact normalizer classification.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::matrix::DensityMatrix;
use crate::pauli::{Letter, Pauli};
use crate::ring::Amp;

/// Default cap on the concatenation level.
pub const MAX_CONCATENATION: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Membership {
    InStabilizer,
    InNormalizerNotStabilizer,
    OutsideNormalizer,
}

/// Tr(Enc(rho) w). `Known` covers w = i^p s with s in S (value i^p) and
/// w outside N(S) (value 0).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CodewordTrace {
    Known(Amp),
    Undefined,
}

/// w = i^phase * s * L with s in S and L = prod_j Xbar_j^{x_j} Zbar_j^{z_j}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogicalDecomposition {
    pub phase: u8,
    pub x: Vec<bool>,
    pub z: Vec<bool>,
}

impl LogicalDecomposition {
    pub fn is_trivial(&self) -> bool {
        self.x.iter().chain(&self.z).all(|b| !b)
    }

    /// The logical Pauli i^phase X^x Z^z as a k-qubit Pauli.
    pub fn logical_pauli(&self) -> Pauli {
        let k = self.x.len();
        let mut acc = Pauli::identity(k);
        for j in 0..k {
            if self.x[j] {
                acc = acc.mul_unchecked(&Pauli::single(k, j, Letter::X));
            }
            if self.z[j] {
                acc = acc.mul_unchecked(&Pauli::single(k, j, Letter::Z));
            }
        }
        acc.times_i_pow(self.phase)
    }
}

#[derive(Clone, Debug)]
struct Row {
    v: Vec<u64>,
    combo: Vec<u64>,
    pivot: usize,
}

/// Row-reduced symplectic vectors of the generators, with the generator
/// combination that produced each row.
#[derive(Clone, Debug)]
struct Reducer {
    rows: Vec<Row>,
}

fn bit(v: &[u64], i: usize) -> bool {
    v[i / 64] >> (i % 64) & 1 == 1
}

fn xor_into(a: &mut [u64], b: &[u64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x ^= y;
    }
}

fn symplectic(p: &Pauli) -> Vec<u64> {
    let mut v = p.x_words().to_vec();
    v.extend_from_slice(p.z_words());
    v
}

impl Reducer {
    fn new(gens: &[Pauli]) -> (Reducer, usize) {
        let g = gens.len();
        let cw = g.div_ceil(64).max(1);
        let mut rows: Vec<Row> = Vec::new();
        for (i, p) in gens.iter().enumerate() {
            let mut v = symplectic(p);
            let mut combo = vec![0u64; cw];
            combo[i / 64] |= 1 << (i % 64);
            for r in &rows {
                if bit(&v, r.pivot) {
                    xor_into(&mut v, &r.v);
                    xor_into(&mut combo, &r.combo);
                }
            }
            let nbits = v.len() * 64;
            if let Some(pivot) = (0..nbits).find(|&b| bit(&v, b)) {
                for r in rows.iter_mut() {
                    if bit(&r.v, pivot) {
                        xor_into(&mut r.v, &v);
                        xor_into(&mut r.combo, &combo);
                    }
                }
                rows.push(Row { v, combo, pivot });
            }
        }
        let rank = rows.len();
        (Reducer { rows }, rank)
    }

    /// Generator combination reproducing the letters of `p`, if any.
    fn solve(&self, p: &Pauli) -> Option<Vec<u64>> {
        let mut v = symplectic(p);
        let mut combo = vec![0u64; self.rows.first().map_or(1, |r| r.combo.len())];
        for r in &self.rows {
            if bit(&v, r.pivot) {
                xor_into(&mut v, &r.v);
                xor_into(&mut combo, &r.combo);
            }
        }
        v.iter().all(|&w| w == 0).then_some(combo)
    }
}

#[derive(Clone)]
pub struct StabilizerCode {
    pub name: String,
    pub n_physical: usize,
    pub k_logical: usize,
    pub distance: usize,
    pub generators: Vec<Pauli>,
    pub logical_x: Vec<Pauli>,
    pub logical_z: Vec<Pauli>,
    pub degenerate: bool,
    reducer: Reducer,
}

impl fmt::Debug for StabilizerCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [[{},{},{}]]", self.name, self.n_physical, self.k_logical, self.distance)
    }
}

fn parse_all(v: &[&str]) -> Vec<Pauli> {
    v.iter().map(|s| s.parse().expect("static Pauli")).collect()
}

impl StabilizerCode {
    /// Builds and validates a code.
    pub fn new(
        name: &str,
        distance: usize,
        generators: Vec<Pauli>,
        logical_x: Vec<Pauli>,
        logical_z: Vec<Pauli>,
        degenerate: bool,
    ) -> Result<StabilizerCode> {
        let k = logical_x.len();
        let n = logical_x
            .first()
            .or(generators.first())
            .map(|p| p.n_qubits())
            .ok_or_else(|| Error::InvalidCode("no operators".into()))?;
        let bad = |m: String| Err(Error::InvalidCode(m));
        if logical_z.len() != k {
            return bad("logical X and Z counts differ".into());
        }
        for p in generators.iter().chain(&logical_x).chain(&logical_z) {
            if p.n_qubits() != n {
                return bad(format!("operator {p} has wrong length"));
            }
        }
        for g in &generators {
            if g.phase() != 0 {
                return bad(format!("generator {g} must have phase +1"));
            }
        }
        for (i, a) in generators.iter().enumerate() {
            for b in &generators[i + 1..] {
                if !a.commutes_unchecked(b) {
                    return bad(format!("generators {a} and {b} anticommute"));
                }
            }
        }
        if generators.len() + k != n {
            return bad(format!("{} generators for n={n}, k={k}", generators.len()));
        }
        let (reducer, rank) = Reducer::new(&generators);
        if rank != generators.len() {
            return bad(format!("generators are dependent (rank {rank})"));
        }
        for l in logical_x.iter().chain(&logical_z) {
            if generators.iter().any(|g| !g.commutes_unchecked(l)) {
                return bad(format!("logical {l} does not commute with the stabilizer"));
            }
        }
        for i in 0..k {
            for j in 0..k {
                let c = logical_x[i].commutes_unchecked(&logical_z[j]);
                if c == (i == j) {
                    return bad(format!("logical pair ({i},{j}) has wrong commutation"));
                }
                if i < j
                    && (!logical_x[i].commutes_unchecked(&logical_x[j])
                        || !logical_z[i].commutes_unchecked(&logical_z[j]))
                {
                    return bad(format!("logicals {i} and {j} anticommute"));
                }
            }
        }
        Ok(StabilizerCode {
            name: name.to_string(),
            n_physical: n,
            k_logical: k,
            distance,
            generators,
            logical_x,
            logical_z,
            degenerate,
            reducer,
        })
    }

    /// Identity encoding of one qubit.
    pub fn trivial() -> StabilizerCode {
        StabilizerCode::new("trivial", 1, vec![], parse_all(&["X"]), parse_all(&["Z"]), false)
            .unwrap()
    }

    pub fn steane() -> StabilizerCode {
        StabilizerCode::new(
            "steane",
            3,
            parse_all(&["IIIXXXX", "IXXIIXX", "XIXIXIX", "IIIZZZZ", "IZZIIZZ", "ZIZIZIZ"]),
            parse_all(&["XXXXXXX"]),
            parse_all(&["ZZZZZZZ"]),
            false,
        )
        .unwrap()
    }

    /// Steane_K = Steane_{K-1} composed with Steane; 7^{K-1} blocks of 7.
    pub fn concatenated_steane(k: usize) -> Result<StabilizerCode> {
        Self::concatenated_steane_capped(k, MAX_CONCATENATION)
    }

    pub fn concatenated_steane_capped(k: usize, cap: usize) -> Result<StabilizerCode> {
        if k == 0 || k > cap {
            return Err(Error::InvalidArgument(format!("concatenation level {k} outside 1..={cap}")));
        }
        if k == 1 {
            return Ok(StabilizerCode::steane());
        }
        let outer = Self::concatenated_steane_capped(k - 1, cap)?;
        let inner = StabilizerCode::steane();
        let blocks = outer.n_physical;
        let n = 7 * blocks;
        let mut gens = Vec::new();
        for b in 0..blocks {
            let q: Vec<usize> = (7 * b..7 * b + 7).collect();
            for g in &inner.generators {
                gens.push(g.embed(&q, n).unwrap());
            }
        }
        for h in &outer.generators {
            gens.push(lift_to_blocks(h, 7));
        }
        StabilizerCode::new(
            &format!("steane{k}"),
            3usize.pow(k as u32),
            gens,
            vec![Pauli::uniform(n, Letter::X)],
            vec![Pauli::uniform(n, Letter::Z)],
            true,
        )
    }

    /// The [[4,1]] error-detecting outer code.
    pub fn outer_code() -> StabilizerCode {
        StabilizerCode::new(
            "outer4",
            2,
            parse_all(&["XXXX", "ZIIZ", "IZZI"]),
            parse_all(&["XIIX"]),
            parse_all(&["ZZII"]),
            false,
        )
        .unwrap()
    }

    /// Alternative logical representatives of the outer code.
    pub fn outer_code_logicals() -> (Vec<Pauli>, Vec<Pauli>) {
        (parse_all(&["XIIX", "IXXI"]), parse_all(&["ZZII", "IIZZ"]))
    }

    /// S^{⊗m}: block i occupies qubits i*n..(i+1)*n.
    pub fn product_code(&self, m: usize) -> Result<StabilizerCode> {
        if m == 0 {
            return Err(Error::InvalidArgument("product of zero codes".into()));
        }
        if m == 1 {
            return Ok(self.clone());
        }
        let n = self.n_physical;
        let total = n * m;
        let emb = |ps: &[Pauli]| -> Vec<Pauli> {
            (0..m)
                .flat_map(|b| {
                    let q: Vec<usize> = (b * n..(b + 1) * n).collect();
                    ps.iter().map(move |p| p.embed(&q, total).unwrap()).collect::<Vec<_>>()
                })
                .collect()
        };
        StabilizerCode::new(
            &format!("{}^{m}", self.name),
            self.distance,
            emb(&self.generators),
            emb(&self.logical_x),
            emb(&self.logical_z),
            self.degenerate,
        )
    }

    fn check(&self, w: &Pauli) -> Result<()> {
        if w.n_qubits() != self.n_physical {
            return Err(Error::DimensionMismatch(w.n_qubits(), self.n_physical));
        }
        Ok(())
    }

    pub fn in_normalizer(&self, w: &Pauli) -> bool {
        self.generators.iter().all(|g| g.commutes_unchecked(w))
    }

    /// Some(p) iff w = i^p s for some s in S.
    pub fn stabilizer_phase(&self, w: &Pauli) -> Option<u8> {
        let combo = self.reducer.solve(w)?;
        let mut acc = Pauli::identity(self.n_physical);
        for (i, g) in self.generators.iter().enumerate() {
            if bit(&combo, i) {
                acc = acc.mul_unchecked(g);
            }
        }
        debug_assert_eq!(acc.unsigned(), w.unsigned());
        Some((w.phase() + 4 - acc.phase()) & 3)
    }

    pub fn classify_membership(&self, w: &Pauli) -> Result<Membership> {
        self.check(w)?;
        if !self.in_normalizer(w) {
            return Ok(Membership::OutsideNormalizer);
        }
        Ok(match self.stabilizer_phase(w) {
            Some(0) => Membership::InStabilizer,
            _ => Membership::InNormalizerNotStabilizer,
        })
    }

    pub fn codeword_pauli_trace(&self, w: &Pauli) -> Result<CodewordTrace> {
        self.check(w)?;
        if !self.in_normalizer(w) {
            return Ok(CodewordTrace::Known(Amp::ZERO));
        }
        Ok(match self.stabilizer_phase(w) {
            Some(p) => CodewordTrace::Known(Amp::i_pow(p)),
            None => CodewordTrace::Undefined,
        })
    }

    /// Writes a normalizer element as phase * stabilizer * logical Pauli.
    pub fn logical_decomposition(&self, w: &Pauli) -> Result<Option<LogicalDecomposition>> {
        self.check(w)?;
        if !self.in_normalizer(w) {
            return Ok(None);
        }
        let k = self.k_logical;
        let x: Vec<bool> = (0..k).map(|j| !w.commutes_unchecked(&self.logical_z[j])).collect();
        let z: Vec<bool> = (0..k).map(|j| !w.commutes_unchecked(&self.logical_x[j])).collect();
        let mut l = Pauli::identity(self.n_physical);
        for j in 0..k {
            if x[j] {
                l = l.mul_unchecked(&self.logical_x[j]);
            }
            if z[j] {
                l = l.mul_unchecked(&self.logical_z[j]);
            }
        }
        // w L† = i^p s, so w = i^p s L
        let rest = w.mul_unchecked(&l.adjoint());
        let p = self
            .stabilizer_phase(&rest)
            .ok_or_else(|| Error::Internal(format!("{w} in N(S) but not decomposable")))?;
        Ok(Some(LogicalDecomposition { phase: p, x, z }))
    }

    /// Reduced state of any codeword of S^{⊗m} on the 0-based qubits `q`.
    pub fn reduced_codeword_density(&self, m: usize, q: &[usize]) -> Result<DensityMatrix> {
        let n = self.n_physical;
        let total = n * m;
        let mut per_block = vec![0usize; m];
        for &t in q {
            if t >= total {
                return Err(Error::IndexOutOfRange(t, total));
            }
            per_block[t / n] += 1;
        }
        if let Some(&c) = per_block.iter().find(|&&c| c >= self.distance) {
            return Err(Error::InsufficientDistance { q: c, d: self.distance });
        }
        let mut err = None;
        let rho = DensityMatrix::from_pauli_expectations(q.len(), |w| {
            let mut value = Amp::ONE;
            for b in 0..m {
                let mut blk = Pauli::identity(n);
                for (i, &t) in q.iter().enumerate() {
                    if t / n == b {
                        blk.set(t % n, w.letter(i));
                    }
                }
                match self.codeword_pauli_trace(&blk) {
                    Ok(CodewordTrace::Known(v)) => value *= v,
                    _ => {
                        err = Some(Error::Internal(format!("{blk} undefined below distance")));
                        value = Amp::ZERO;
                    }
                }
                if value.is_zero() {
                    break;
                }
            }
            value
        });
        match err {
            Some(e) => Err(e),
            None => Ok(rho),
        }
    }

    /// Support of Enc(|b...b>) as an affine space x0 + span(dirs).
    pub fn codeword_support_space(&self, bits: &[bool]) -> Result<(Vec<bool>, Vec<Vec<bool>>)> {
        let n = self.n_physical;
        if bits.len() != self.k_logical {
            return Err(Error::DimensionMismatch(bits.len(), self.k_logical));
        }
        // stabilizer group of the logical basis state
        let mut group = self.generators.clone();
        for (j, &b) in bits.iter().enumerate() {
            let z = self.logical_z[j].clone();
            group.push(if b { z.negate() } else { z });
        }
        // Gaussian elimination on X parts; rows with zero X part give
        // linear constraints on the support.
        let mut rows: Vec<Pauli> = group;
        let mut dirs: Vec<Vec<bool>> = Vec::new();
        let mut r = 0;
        for col in 0..n {
            let Some(pr) = (r..rows.len()).find(|&i| rows[i].x_bit(col)) else { continue };
            rows.swap(r, pr);
            for i in 0..rows.len() {
                if i != r && rows[i].x_bit(col) {
                    rows[i] = rows[i].mul_unchecked(&rows[r]);
                }
            }
            r += 1;
        }
        for row in rows.iter().take(r) {
            dirs.push((0..n).map(|q| row.x_bit(q)).collect());
        }
        // remaining rows are ±Z^v (phase 0 or 2): v.x = (phase == 2)
        let mut eqs: Vec<(Vec<bool>, bool)> = rows[r..]
            .iter()
            .map(|p| ((0..n).map(|q| p.z_bit(q)).collect(), p.phase() == 2))
            .collect();
        let x0 = solve_gf2(&mut eqs, n)
            .ok_or_else(|| Error::Internal("inconsistent codeword constraints".into()))?;
        Ok((x0, dirs))
    }

    /// All strings of E_b for a single logical qubit, up to 2^cap_log2 of them.
    pub fn codeword_support(&self, b: bool, cap_log2: usize) -> Result<CodewordSupport> {
        let (x0, dirs) = self.codeword_support_space(&vec![b; self.k_logical])?;
        if dirs.len() > cap_log2 {
            return Err(Error::CapacityExceeded(format!("2^{} codeword strings", dirs.len())));
        }
        let mut strings = BTreeSet::new();
        for mask in 0u64..(1u64 << dirs.len()) {
            let mut s = x0.clone();
            for (i, d) in dirs.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    for (a, &c) in s.iter_mut().zip(d) {
                        *a ^= c;
                    }
                }
            }
            strings.insert(s);
        }
        Ok(CodewordSupport { logical_bit: b, strings })
    }

    /// True iff every string of E_b has weight ≡ b (mod r).
    pub fn order_consistent(&self, r: usize) -> Result<bool> {
        if self.k_logical != 1 {
            return Err(Error::InvalidArgument("order consistency needs k = 1".into()));
        }
        for b in [false, true] {
            let (x0, dirs) = self.codeword_support_space(&[b])?;
            let want = b as usize % r;
            if r <= 2 || dirs.len() > 20 {
                if r > 2 {
                    return Err(Error::CapacityExceeded(format!("2^{} strings", dirs.len())));
                }
                // weight parity is linear over GF(2)
                let w0 = x0.iter().filter(|&&c| c).count();
                let ok = (r == 1 || w0 % 2 == want)
                    && dirs.iter().all(|d| r == 1 || d.iter().filter(|&&c| c).count() % 2 == 0);
                if !ok {
                    return Ok(false);
                }
            } else {
                let sup = self.codeword_support(b, 20)?;
                if sup.strings.iter().any(|s| s.iter().filter(|&&c| c).count() % r != want) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Text form: `[[n,k,d]]`, generators, `LOGICAL_X`, `LOGICAL_Z`.
    pub fn to_text(&self) -> String {
        let mut s = format!("[[{},{},{}]]\n", self.n_physical, self.k_logical, self.distance);
        for g in &self.generators {
            s += &format!("{g}\n");
        }
        s += "LOGICAL_X\n";
        for l in &self.logical_x {
            s += &format!("{l}\n");
        }
        s += "LOGICAL_Z\n";
        for l in &self.logical_z {
            s += &format!("{l}\n");
        }
        s
    }

    pub fn parse(text: &str) -> Result<StabilizerCode> {
        use crate::error::parse_err;
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (ln, header) = lines.next().ok_or_else(|| parse_err(1, "missing [[n,k,d]] header"))?;
        let inner = header
            .strip_prefix("[[")
            .and_then(|h| h.strip_suffix("]]"))
            .ok_or_else(|| parse_err(ln, "expected [[n,k,d]]"))?;
        let nums: Vec<usize> = inner
            .split(',')
            .map(|x| x.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| parse_err(ln, "bad [[n,k,d]] numbers"))?;
        let [n, k, d] = nums[..] else { return Err(parse_err(ln, "expected three numbers")) };
        let mut section = 0;
        let (mut gens, mut lx, mut lz) = (Vec::new(), Vec::new(), Vec::new());
        for (ln, l) in lines {
            match l {
                "LOGICAL_X" => section = 1,
                "LOGICAL_Z" => section = 2,
                _ => {
                    let p: Pauli = l.parse().map_err(|e: Error| parse_err(ln, e.to_string()))?;
                    if p.n_qubits() != n {
                        return Err(parse_err(ln, format!("expected {n} letters")));
                    }
                    [&mut gens, &mut lx, &mut lz][section].push(p);
                }
            }
        }
        if lx.len() != k {
            return Err(parse_err(0, format!("expected {k} logical X operators")));
        }
        StabilizerCode::new("file", d, gens, lx, lz, false)
    }
}

/// Replaces each letter W at position i by W on all qubits of block i.
fn lift_to_blocks(h: &Pauli, block: usize) -> Pauli {
    let n = h.n_qubits() * block;
    let mut out = Pauli::identity(n);
    for i in 0..h.n_qubits() {
        let l = h.letter(i);
        for j in 0..block {
            out.set(i * block + j, l);
        }
    }
    out
}

fn solve_gf2(eqs: &mut [(Vec<bool>, bool)], n: usize) -> Option<Vec<bool>> {
    let mut r = 0;
    let mut piv = Vec::new();
    for col in 0..n {
        let Some(p) = (r..eqs.len()).find(|&i| eqs[i].0[col]) else { continue };
        eqs.swap(r, p);
        let (row, rhs) = eqs[r].clone();
        for (i, e) in eqs.iter_mut().enumerate() {
            if i != r && e.0[col] {
                for (a, &b) in e.0.iter_mut().zip(&row) {
                    *a ^= b;
                }
                e.1 ^= rhs;
            }
        }
        piv.push(col);
        r += 1;
    }
    if eqs[r..].iter().any(|e| e.1) {
        return None;
    }
    let mut x = vec![false; n];
    for (i, &c) in piv.iter().enumerate() {
        x[c] = eqs[i].1;
    }
    Some(x)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodewordSupport {
    pub logical_bit: bool,
    pub strings: BTreeSet<Vec<bool>>,
}

pub fn bits_to_string(s: &[bool]) -> String {
    s.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(s: &str) -> Pauli {
        s.parse().unwrap()
    }

    const E0: [&str; 8] = [
        "0000000", "1010101", "0110011", "1100110", "0001111", "1011010", "0111100", "1101001",
    ];

    #[test]
    fn steane_generators_and_support() {
        let c = StabilizerCode::steane();
        assert_eq!(c.generators[0], p("IIIXXXX"));
        let s0: BTreeSet<String> =
            c.codeword_support(false, 10).unwrap().strings.iter().map(|s| bits_to_string(s)).collect();
        let want: BTreeSet<String> = E0.iter().map(|s| s.to_string()).collect();
        assert_eq!(s0, want);
        let s1: BTreeSet<String> =
            c.codeword_support(true, 10).unwrap().strings.iter().map(|s| bits_to_string(s)).collect();
        let comp: BTreeSet<String> = E0
            .iter()
            .map(|s| s.chars().map(|ch| if ch == '0' { '1' } else { '0' }).collect())
            .collect();
        assert_eq!(s1, comp);
    }

    #[test]
    fn concatenation_counts() {
        let c1 = StabilizerCode::concatenated_steane(1).unwrap();
        assert_eq!(c1.generators, StabilizerCode::steane().generators);
        let c2 = StabilizerCode::concatenated_steane(2).unwrap();
        assert_eq!((c2.n_physical, c2.distance, c2.generators.len()), (49, 9, 48));
        assert!(c2.degenerate);
        let w4 = c2.generators.iter().filter(|g| g.weight() == 4).count();
        assert!(w4 > 0);
        assert!(StabilizerCode::concatenated_steane(4).is_err());
        assert!(StabilizerCode::concatenated_steane(0).is_err());
    }

    #[test]
    fn concatenated_level_three_builds() {
        let c3 = StabilizerCode::concatenated_steane(3).unwrap();
        assert_eq!((c3.n_physical, c3.generators.len()), (343, 342));
    }

    #[test]
    fn outer_code_properties() {
        let c = StabilizerCode::outer_code();
        assert_eq!(c.generators, vec![p("XXXX"), p("ZIIZ"), p("IZZI")]);
        let (lx, lz) = StabilizerCode::outer_code_logicals();
        for q in 0..4 {
            assert!(lx.iter().any(|l| l.letter(q) == Letter::I));
            assert!(lz.iter().any(|l| l.letter(q) == Letter::I));
        }
        for l in lx.iter().chain(&lz) {
            assert_eq!(c.classify_membership(l).unwrap(), Membership::InNormalizerNotStabilizer);
        }
        let s1: BTreeSet<String> =
            c.codeword_support(true, 4).unwrap().strings.iter().map(|s| bits_to_string(s)).collect();
        assert_eq!(s1, ["1001", "0110"].iter().map(|s| s.to_string()).collect());
    }

    #[test]
    fn product_code_counts() {
        let s = StabilizerCode::steane();
        assert_eq!(s.product_code(1).unwrap().generators, s.generators);
        let s2 = s.product_code(2).unwrap();
        assert_eq!((s2.generators.len(), s2.n_physical, s2.k_logical), (12, 14, 2));
        let w = s2.generators[0].mul(&s2.generators[8]).unwrap();
        assert_eq!(s2.classify_membership(&w).unwrap(), Membership::InStabilizer);
    }

    #[test]
    fn classification_examples() {
        let s = StabilizerCode::steane();
        assert_eq!(s.classify_membership(&p("IIIXXXX")).unwrap(), Membership::InStabilizer);
        assert_eq!(
            s.classify_membership(&p("XXXXXXX")).unwrap(),
            Membership::InNormalizerNotStabilizer
        );
        assert_eq!(s.classify_membership(&p("XIIIIII")).unwrap(), Membership::OutsideNormalizer);
        assert_eq!(
            s.classify_membership(&p("-IIIXXXX")).unwrap(),
            Membership::InNormalizerNotStabilizer
        );
        assert!(s.classify_membership(&p("XX")).is_err());
    }

    #[test]
    fn codeword_traces() {
        let s = StabilizerCode::steane();
        assert_eq!(s.codeword_pauli_trace(&Pauli::identity(7)).unwrap(), CodewordTrace::Known(Amp::ONE));
        assert_eq!(s.codeword_pauli_trace(&p("ZIIIIII")).unwrap(), CodewordTrace::Known(Amp::ZERO));
        assert_eq!(s.codeword_pauli_trace(&p("XXXXXXX")).unwrap(), CodewordTrace::Undefined);
        assert_eq!(s.codeword_pauli_trace(&p("-IIIZZZZ")).unwrap(), CodewordTrace::Known(-Amp::ONE));
    }

    #[test]
    fn logical_decomposition_of_y() {
        let s = StabilizerCode::steane();
        let y = Pauli::uniform(7, Letter::Y);
        let d = s.logical_decomposition(&y).unwrap().unwrap();
        assert_eq!((d.x.clone(), d.z.clone()), (vec![true], vec![true]));
        // Y^7 = i^7 X^7 Z^7 and the stabilizer part is trivial
        assert_eq!(d.phase, 3);
    }

    #[test]
    fn reduced_density_is_maximally_mixed_below_distance() {
        let s = StabilizerCode::steane();
        let r1 = s.reduced_codeword_density(1, &[2]).unwrap();
        assert_eq!(r1, DensityMatrix::identity(2).scale(Amp::half_pow(1)));
        let r2 = s.reduced_codeword_density(1, &[0, 5]).unwrap();
        assert_eq!(r2, DensityMatrix::identity(4).scale(Amp::half_pow(2)));
        assert_eq!(
            s.reduced_codeword_density(1, &[0, 1, 2]),
            Err(Error::InsufficientDistance { q: 3, d: 3 })
        );
        // two qubits in each of two blocks is fine
        assert!(s.reduced_codeword_density(2, &[0, 1, 7, 8]).is_ok());
    }

    #[test]
    fn order_consistency() {
        assert!(StabilizerCode::steane().order_consistent(2).unwrap());
        assert!(StabilizerCode::trivial().order_consistent(4).unwrap());
        assert!(StabilizerCode::concatenated_steane(2).unwrap().order_consistent(2).unwrap());
        // repetition code with Enc|1> = |11>
        let rep = StabilizerCode::new("rep2", 1, vec![p("ZZ")], vec![p("XX")], vec![p("ZI")], false)
            .unwrap();
        assert!(!rep.order_consistent(4).unwrap());
    }

    #[test]
    fn text_round_trip_and_validation() {
        let s = StabilizerCode::steane();
        let back = StabilizerCode::parse(&s.to_text()).unwrap();
        assert_eq!(back.generators, s.generators);
        let bad = s.to_text().replacen("IIIXXXX", "IIIXXXZ", 1);
        assert!(StabilizerCode::parse(&bad).is_err());
    }

    fn steane_element() -> impl Strategy<Value = Vec<bool>> {
        proptest::collection::vec(any::<bool>(), 6)
    }

    proptest! {
        #[test]
        fn generator_products_are_stabilizers(mask in steane_element()) {
            let s = StabilizerCode::steane();
            let mut acc = Pauli::identity(7);
            for (g, &b) in s.generators.iter().zip(&mask) {
                if b { acc = acc.mul(g).unwrap(); }
            }
            prop_assert_eq!(s.classify_membership(&acc).unwrap(), Membership::InStabilizer);
        }

        #[test]
        fn low_weight_blocks_never_logical(codes in proptest::collection::vec(0usize..4, 14), keep in proptest::collection::vec(0usize..7, 4)) {
            // at most two non-identity letters per block of Steane^{⊗2}
            let s2 = StabilizerCode::steane().product_code(2).unwrap();
            let mut w = Pauli::identity(14);
            for (i, &q) in keep.iter().enumerate() {
                let blk = i / 2;
                w.set(blk * 7 + q, Letter::from_code(codes[i]));
            }
            prop_assert_ne!(s2.classify_membership(&w).unwrap(), Membership::InNormalizerNotStabilizer);
        }
    }
}
