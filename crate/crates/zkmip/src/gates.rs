//! Physical gate set and the local conjugation tables.

use std::fmt;
use std::sync::OnceLock;

use crate::matrix::Matrix;
use crate::pauli::{Letter, Pauli};
use crate::ring::Amp;

/// A physical gate on 0-based qubit indices. Multi-qubit gates list
/// controls first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Gate {
    Id,
    H(usize),
    X(usize),
    Z(usize),
    S(usize),
    Sdg(usize),
    T(usize),
    Tdg(usize),
    Cnot(usize, usize),
    Cz(usize, usize),
    Ch(usize, usize),
    Toffoli(usize, usize, usize),
    Ccz(usize, usize, usize),
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        use Gate::*;
        match *self {
            Id => vec![],
            H(a) | X(a) | Z(a) | S(a) | Sdg(a) | T(a) | Tdg(a) => vec![a],
            Cnot(a, b) | Cz(a, b) | Ch(a, b) => vec![a, b],
            Toffoli(a, b, c) | Ccz(a, b, c) => vec![a, b, c],
        }
    }

    pub fn name(&self) -> &'static str {
        use Gate::*;
        match self {
            Id => "ID",
            H(_) => "H",
            X(_) => "X",
            Z(_) => "Z",
            S(_) => "S",
            Sdg(_) => "SDG",
            T(_) => "T",
            Tdg(_) => "TDG",
            Cnot(..) => "CNOT",
            Cz(..) => "CZ",
            Ch(..) => "CH",
            Toffoli(..) => "TOFFOLI",
            Ccz(..) => "CCZ",
        }
    }

    /// Builds a gate from its name and 0-based qubits.
    pub fn from_name(name: &str, q: &[usize]) -> Option<Gate> {
        use Gate::*;
        Some(match (name, q) {
            ("ID", []) => Id,
            ("H", [a]) => H(*a),
            ("X", [a]) => X(*a),
            ("Z", [a]) => Z(*a),
            ("S", [a]) => S(*a),
            ("SDG", [a]) => Sdg(*a),
            ("T", [a]) => T(*a),
            ("TDG", [a]) => Tdg(*a),
            ("CNOT", [a, b]) => Cnot(*a, *b),
            ("CZ", [a, b]) => Cz(*a, *b),
            ("CH", [a, b]) => Ch(*a, *b),
            ("TOFFOLI", [a, b, c]) => Toffoli(*a, *b, *c),
            ("CCZ", [a, b, c]) => Ccz(*a, *b, *c),
            _ => return None,
        })
    }

    pub fn is_clifford(&self) -> bool {
        use Gate::*;
        matches!(self, Id | H(_) | X(_) | Z(_) | S(_) | Sdg(_) | Cnot(..) | Cz(..))
    }

    /// Gates mapping basis states to phased basis states.
    pub fn is_monomial(&self) -> bool {
        !matches!(self, Gate::H(_) | Gate::Ch(..))
    }

    pub fn inverse(&self) -> Gate {
        use Gate::*;
        match *self {
            S(a) => Sdg(a),
            Sdg(a) => S(a),
            T(a) => Tdg(a),
            Tdg(a) => T(a),
            g => g,
        }
    }

    /// Same gate with qubits renamed.
    pub fn remap(&self, f: impl Fn(usize) -> usize) -> Gate {
        let q: Vec<usize> = self.qubits().into_iter().map(f).collect();
        Gate::from_name(self.name(), &q).expect("arity preserved")
    }

    /// Same kind on local qubits 0..k, used as a table key.
    fn local(&self) -> Gate {
        let k = self.qubits().len();
        let q: Vec<usize> = (0..k).collect();
        Gate::from_name(self.name(), &q).expect("arity preserved")
    }

    /// Unitary on the gate's own qubits; local bit i is `qubits()[i]`.
    pub fn local_matrix(&self) -> Matrix {
        use Gate::*;
        let g = self.local();
        let k = g.qubits().len();
        let dim = 1usize << k;
        let mut m = Matrix::zeros(dim);
        let r = Amp::inv_sqrt2_pow(1);
        for c in 0..dim {
            let b = |i: usize| c >> i & 1 == 1;
            match g {
                Id => m.set(c, c, Amp::ONE),
                H(_) => {
                    m.set(0, c, r);
                    m.set(1, c, if b(0) { -r } else { r });
                }
                X(_) => m.set(c ^ 1, c, Amp::ONE),
                Z(_) => m.set(c, c, if b(0) { -Amp::ONE } else { Amp::ONE }),
                S(_) => m.set(c, c, if b(0) { Amp::I } else { Amp::ONE }),
                Sdg(_) => m.set(c, c, if b(0) { -Amp::I } else { Amp::ONE }),
                T(_) => m.set(c, c, if b(0) { Amp::omega() } else { Amp::ONE }),
                Tdg(_) => m.set(c, c, if b(0) { Amp::omega().conj() } else { Amp::ONE }),
                Cnot(..) => m.set(if b(0) { c ^ 2 } else { c }, c, Amp::ONE),
                Cz(..) => m.set(c, c, if b(0) && b(1) { -Amp::ONE } else { Amp::ONE }),
                Ch(..) => {
                    if b(0) {
                        m.set(1, c, r);
                        m.set(3, c, if b(1) { -r } else { r });
                    } else {
                        m.set(c, c, Amp::ONE);
                    }
                }
                Toffoli(..) => m.set(if b(0) && b(1) { c ^ 4 } else { c }, c, Amp::ONE),
                Ccz(..) => {
                    m.set(c, c, if b(0) && b(1) && b(2) { -Amp::ONE } else { Amp::ONE })
                }
            }
        }
        m
    }

    /// For monomial gates: updates the basis string in place and returns the
    /// phase picked up.
    pub fn basis_action(&self, bits: &mut [bool]) -> Amp {
        use Gate::*;
        match *self {
            Id => Amp::ONE,
            X(a) => {
                bits[a] = !bits[a];
                Amp::ONE
            }
            Z(a) => sign(bits[a]),
            S(a) => if bits[a] { Amp::I } else { Amp::ONE },
            Sdg(a) => if bits[a] { -Amp::I } else { Amp::ONE },
            T(a) => if bits[a] { Amp::omega() } else { Amp::ONE },
            Tdg(a) => if bits[a] { Amp::omega().conj() } else { Amp::ONE },
            Cnot(a, b) => {
                if bits[a] {
                    bits[b] = !bits[b];
                }
                Amp::ONE
            }
            Cz(a, b) => sign(bits[a] && bits[b]),
            Toffoli(a, b, c) => {
                if bits[a] && bits[b] {
                    bits[c] = !bits[c];
                }
                Amp::ONE
            }
            Ccz(a, b, c) => sign(bits[a] && bits[b] && bits[c]),
            H(_) | Ch(..) => panic!("basis_action on a branching gate"),
        }
    }
}

fn sign(neg: bool) -> Amp {
    if neg {
        -Amp::ONE
    } else {
        Amp::ONE
    }
}

/// Text form with 1-based qubits, e.g. `CNOT 3 5`.
impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())?;
        for q in self.qubits() {
            write!(f, " {}", q + 1)?;
        }
        Ok(())
    }
}

fn gen_images(g: &Gate) -> (Vec<Pauli>, Vec<Pauli>) {
    use Gate::*;
    let p = |s: &str| s.parse::<Pauli>().unwrap();
    let (xs, zs): (Vec<&str>, Vec<&str>) = match g.local() {
        Id => (vec![], vec![]),
        H(_) => (vec!["Z"], vec!["X"]),
        S(_) => (vec!["-Y"], vec!["Z"]),
        Sdg(_) => (vec!["Y"], vec!["Z"]),
        X(_) => (vec!["X"], vec!["-Z"]),
        Z(_) => (vec!["-X"], vec!["Z"]),
        Cnot(..) => (vec!["XX", "IX"], vec!["ZI", "ZZ"]),
        Cz(..) => (vec!["XZ", "ZX"], vec!["ZI", "IZ"]),
        _ => unreachable!("not Clifford"),
    };
    (xs.into_iter().map(p).collect(), zs.into_iter().map(p).collect())
}

/// U† L U for a Clifford gate acting on the local Pauli `local` (phase 0).
/// Returns (phase exponent, letters).
pub(crate) fn clifford_local_image(g: &Gate, local: &Pauli) -> (u8, Pauli) {
    let k = local.n_qubits();
    let (xi, zi) = gen_images(g);
    // L = i^{#Y} prod_j X_j^{x_j} Z_j^{z_j}
    let mut acc = Pauli::identity(k);
    let mut ys = 0u8;
    for j in 0..k {
        let l = local.letter(j);
        let (xb, zb) = l.bits();
        if xb && zb {
            ys += 1;
        }
        if xb {
            acc = acc.mul_unchecked(&xi[j]);
        }
        if zb {
            acc = acc.mul_unchecked(&zi[j]);
        }
    }
    let ph = (acc.phase() + ys) & 3;
    (ph, acc.unsigned())
}

type Table = Vec<Vec<(Amp, Pauli)>>;

fn build_table(g: Gate) -> Table {
    let k = g.qubits().len();
    let u = g.local_matrix();
    let ud = u.adjoint();
    let n = 1usize << (2 * k);
    let basis: Vec<Pauli> = (0..n)
        .map(|code| {
            let l: Vec<Letter> = (0..k).map(|i| Letter::from_code(code >> (2 * i) & 3)).collect();
            Pauli::from_letters(&l)
        })
        .collect();
    let mats: Vec<Matrix> = basis.iter().map(Matrix::pauli).collect();
    let norm = Amp::half_pow(k as u32);
    (0..n)
        .map(|code| {
            let m = ud.mul(&mats[code]).mul(&u);
            let mut out = Vec::new();
            for (q, mq) in basis.iter().zip(&mats) {
                let c = mq.mul(&m).trace() * norm;
                if !c.is_zero() {
                    out.push((c, q.clone()));
                }
            }
            out
        })
        .collect()
}

fn table_for(g: &Gate) -> &'static Table {
    static T: OnceLock<Table> = OnceLock::new();
    static TD: OnceLock<Table> = OnceLock::new();
    static CH: OnceLock<Table> = OnceLock::new();
    static TOF: OnceLock<Table> = OnceLock::new();
    static CCZ: OnceLock<Table> = OnceLock::new();
    let cell = match g {
        Gate::T(_) => &T,
        Gate::Tdg(_) => &TD,
        Gate::Ch(..) => &CH,
        Gate::Toffoli(..) => &TOF,
        Gate::Ccz(..) => &CCZ,
        _ => unreachable!("Clifford gates use generator images"),
    };
    cell.get_or_init(|| build_table(g.local()))
}

/// U† L U as an exact Pauli sum, for the non-Clifford gates.
pub(crate) fn nonclifford_local_image(g: &Gate, local: &Pauli) -> Vec<(Amp, Pauli)> {
    let code: usize = (0..local.n_qubits()).map(|i| local.letter(i).code() << (2 * i)).sum();
    table_for(g)[code].clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn local_matrices_are_unitary() {
        for g in [
            Gate::H(0),
            Gate::S(0),
            Gate::T(0),
            Gate::Cnot(0, 1),
            Gate::Cz(0, 1),
            Gate::Ch(0, 1),
            Gate::Toffoli(0, 1, 2),
            Gate::Ccz(0, 1, 2),
        ] {
            let u = g.local_matrix();
            assert!(u.adjoint().mul(&u).is_identity(), "{g:?}");
            assert_eq!(g.inverse().local_matrix().mul(&u).is_identity(), true);
        }
    }

    #[test]
    fn toffoli_conjugates_target_z_into_eight_terms_at_most() {
        let z = Pauli::from_letters(&[Letter::I, Letter::I, Letter::Z]);
        let img = nonclifford_local_image(&Gate::Toffoli(0, 1, 2), &z);
        assert_eq!(img.len(), 4);
    }

    #[test]
    fn display_is_one_based() {
        assert_eq!(Gate::Cnot(2, 4).to_string(), "CNOT 3 5");
        assert_eq!(Gate::from_name("CCZ", &[0, 1, 2]), Some(Gate::Ccz(0, 1, 2)));
        assert_eq!(Gate::from_name("CCZ", &[0, 1]), None);
    }
}
