//! Small dense matrices over the exact ring. Qubit 0 is the least
//! significant bit of a basis index.

use std::fmt;

use crate::gates::Gate;
use crate::pauli::{Letter, Pauli};
use crate::ring::Amp;

#[derive(Clone, PartialEq, Eq)]
pub struct Matrix {
    dim: usize,
    data: Vec<Amp>,
}

pub type DensityMatrix = Matrix;

impl Matrix {
    pub fn zeros(dim: usize) -> Matrix {
        Matrix { dim, data: vec![Amp::ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Matrix {
        let mut m = Matrix::zeros(dim);
        for i in 0..dim {
            m.set(i, i, Amp::ONE);
        }
        m
    }

    /// |i><j|
    pub fn unit(dim: usize, i: usize, j: usize) -> Matrix {
        let mut m = Matrix::zeros(dim);
        m.set(i, j, Amp::ONE);
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_qubits(&self) -> usize {
        self.dim.trailing_zeros() as usize
    }

    pub fn get(&self, r: usize, c: usize) -> Amp {
        self.data[r * self.dim + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Amp) {
        self.data[r * self.dim + c] = v;
    }

    pub fn add_at(&mut self, r: usize, c: usize, v: Amp) {
        self.data[r * self.dim + c] += v;
    }

    pub fn mul(&self, o: &Matrix) -> Matrix {
        assert_eq!(self.dim, o.dim);
        let d = self.dim;
        let mut out = Matrix::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..d {
                    let b = o.get(k, j);
                    if !b.is_zero() {
                        out.data[i * d + j] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn add(&self, o: &Matrix) -> Matrix {
        assert_eq!(self.dim, o.dim);
        Matrix { dim: self.dim, data: self.data.iter().zip(&o.data).map(|(a, b)| *a + *b).collect() }
    }

    pub fn sub(&self, o: &Matrix) -> Matrix {
        self.add(&o.scale(-Amp::ONE))
    }

    pub fn scale(&self, c: Amp) -> Matrix {
        Matrix { dim: self.dim, data: self.data.iter().map(|a| *a * c).collect() }
    }

    pub fn adjoint(&self) -> Matrix {
        let d = self.dim;
        let mut out = Matrix::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    pub fn trace(&self) -> Amp {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Tr(self * o) without forming the product.
    pub fn trace_product(&self, o: &Matrix) -> Amp {
        assert_eq!(self.dim, o.dim);
        let d = self.dim;
        let mut s = Amp::ZERO;
        for i in 0..d {
            for k in 0..d {
                let a = self.get(i, k);
                if !a.is_zero() {
                    let b = o.get(k, i);
                    if !b.is_zero() {
                        s += a * b;
                    }
                }
            }
        }
        s
    }

    /// self ⊗ o, with `o` on the higher qubits.
    pub fn kron_high(&self, o: &Matrix) -> Matrix {
        let (a, b) = (self.dim, o.dim);
        let mut out = Matrix::zeros(a * b);
        for i2 in 0..b {
            for j2 in 0..b {
                let y = o.get(i2, j2);
                if y.is_zero() {
                    continue;
                }
                for i1 in 0..a {
                    for j1 in 0..a {
                        let x = self.get(i1, j1);
                        if !x.is_zero() {
                            out.set(i2 * a + i1, j2 * a + j1, x * y);
                        }
                    }
                }
            }
        }
        out
    }

    pub fn is_identity(&self) -> bool {
        *self == Matrix::identity(self.dim)
    }

    pub fn is_hermitian(&self) -> bool {
        *self == self.adjoint()
    }

    /// Dense matrix of a phased Pauli.
    pub fn pauli(p: &Pauli) -> Matrix {
        let n = p.n_qubits();
        let dim = 1usize << n;
        let (mut xm, mut zm, mut ys) = (0usize, 0usize, 0u8);
        for q in 0..n {
            let (x, z) = p.letter(q).bits();
            xm |= (x as usize) << q;
            zm |= (z as usize) << q;
            if x && z {
                ys += 1;
            }
        }
        let base = Amp::i_pow(p.phase() + ys);
        let mut m = Matrix::zeros(dim);
        for c in 0..dim {
            let v = if (c & zm).count_ones() % 2 == 1 { -base } else { base };
            m.set(c ^ xm, c, v);
        }
        m
    }

    /// Full-register matrix of a gate on `n` qubits.
    pub fn gate(g: &Gate, n: usize) -> Matrix {
        let qs = g.qubits();
        let lm = g.local_matrix();
        let dim = 1usize << n;
        let mut m = Matrix::zeros(dim);
        for c in 0..dim {
            let lc: usize = qs.iter().enumerate().map(|(i, &q)| (c >> q & 1) << i).sum();
            let mut rest = c;
            for &q in &qs {
                rest &= !(1 << q);
            }
            for lr in 0..lm.dim() {
                let v = lm.get(lr, lc);
                if v.is_zero() {
                    continue;
                }
                let r = qs.iter().enumerate().fold(rest, |acc, (i, &q)| acc | ((lr >> i & 1) << q));
                m.set(r, c, v);
            }
        }
        m
    }

    /// Tr(M P) for a Pauli on the same qubits, in O(dim).
    pub fn pauli_expectation(&self, p: &Pauli) -> Amp {
        let n = p.n_qubits();
        assert_eq!(1usize << n, self.dim);
        let (mut xm, mut zm, mut ys) = (0usize, 0usize, 0u8);
        for q in 0..n {
            let (x, z) = p.letter(q).bits();
            xm |= (x as usize) << q;
            zm |= (z as usize) << q;
            if x && z {
                ys += 1;
            }
        }
        let mut s = Amp::ZERO;
        // P|c> = coef |c^xm>, so Tr(M P) = sum_c M[c, c^xm] coef(c)
        for c in 0..self.dim {
            let v = self.get(c, c ^ xm);
            if v.is_zero() {
                continue;
            }
            if (c & zm).count_ones() % 2 == 1 {
                s -= v;
            } else {
                s += v;
            }
        }
        s * Amp::i_pow(p.phase() + ys)
    }

    /// 2^-k sum_w f(w) w over all unsigned k-qubit Paulis, where f(w) = Tr(rho w).
    pub fn from_pauli_expectations(k: usize, mut f: impl FnMut(&Pauli) -> Amp) -> Matrix {
        let dim = 1usize << k;
        let mut m = Matrix::zeros(dim);
        for code in 0..(1usize << (2 * k)) {
            let l: Vec<Letter> = (0..k).map(|i| Letter::from_code(code >> (2 * i) & 3)).collect();
            let w = Pauli::from_letters(&l);
            let e = f(&w);
            if e.is_zero() {
                continue;
            }
            m.add_pauli(&w, e);
        }
        m.scale(Amp::half_pow(k as u32))
    }

    /// self += c * P, in O(dim).
    pub fn add_pauli(&mut self, p: &Pauli, c: Amp) {
        let n = p.n_qubits();
        assert_eq!(1usize << n, self.dim);
        let (mut xm, mut zm, mut ys) = (0usize, 0usize, 0u8);
        for q in 0..n {
            let (x, z) = p.letter(q).bits();
            xm |= (x as usize) << q;
            zm |= (z as usize) << q;
            if x && z {
                ys += 1;
            }
        }
        let base = c * Amp::i_pow(p.phase() + ys);
        for col in 0..self.dim {
            let v = if (col & zm).count_ones() % 2 == 1 { -base } else { base };
            self.add_at(col ^ xm, col, v);
        }
    }

    /// Smallest eigenvalue of a Hermitian matrix, in floating point.
    pub fn min_eigenvalue(&self) -> f64 {
        // real symmetric embedding [[A, -B], [B, A]] has the same spectrum, doubled
        let d = self.dim;
        let n = 2 * d;
        let mut a = vec![0.0f64; n * n];
        for i in 0..d {
            for j in 0..d {
                let (re, im) = self.get(i, j).to_f64();
                a[i * n + j] = re;
                a[(i + d) * n + j + d] = re;
                a[i * n + j + d] = -im;
                a[(i + d) * n + j] = im;
            }
        }
        jacobi_eigenvalues(&mut a, n).into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn is_psd(&self) -> bool {
        self.dim == 0 || self.min_eigenvalue() >= -1e-12
    }
}

fn jacobi_eigenvalues(a: &mut [f64], n: usize) -> Vec<f64> {
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += a[i * n + j] * a[i * n + j];
                }
            }
        }
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).collect()
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.dim {
            let row: Vec<String> = (0..self.dim).map(|c| self.get(r, c).to_string()).collect();
            writeln!(f, "{}", row.join("  "))?;
        }
        Ok(())
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix({})\n{self}", self.dim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_expectation_matches_trace_product() {
        let rho = Matrix::pauli(&"XY".parse().unwrap()).add(&Matrix::identity(4)).scale(Amp::half_pow(2));
        for s in ["XY", "ZI", "-iYX", "II"] {
            let p: Pauli = s.parse().unwrap();
            assert_eq!(rho.pauli_expectation(&p), rho.trace_product(&Matrix::pauli(&p)));
        }
    }

    #[test]
    fn pauli_expansion_reconstructs() {
        let mut rho = Matrix::zeros(4);
        rho.set(0, 0, Amp::half_pow(1));
        rho.set(3, 3, Amp::half_pow(1));
        rho.set(0, 3, Amp::half_pow(1));
        rho.set(3, 0, Amp::half_pow(1));
        let back = Matrix::from_pauli_expectations(2, |w| rho.pauli_expectation(w));
        assert_eq!(back, rho);
        assert!(rho.is_psd());
    }

    #[test]
    fn eigen_check_detects_negative() {
        let m = Matrix::pauli(&"Z".parse().unwrap());
        assert!(m.min_eigenvalue() < -0.99);
    }

    #[test]
    fn kron_places_high() {
        let z = Matrix::pauli(&"Z".parse().unwrap());
        let i = Matrix::identity(2);
        assert_eq!(i.kron_high(&z), Matrix::pauli(&"IZ".parse().unwrap()));
    }
}
