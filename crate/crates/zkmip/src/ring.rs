//! Exact complex numbers in Z[1/sqrt2, i].
//!
//! A value is `(a + b*sqrt2 + i*(c + d*sqrt2)) / sqrt2^e`, kept in the form
//! with the smallest `e`. Every amplitude produced by H, CNOT, Toffoli, CZ,
//! CCZ, X, Z (and T, for random test states) lives in this ring.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Amp {
    a: i128,
    b: i128,
    c: i128,
    d: i128,
    e: u32,
}

#[inline]
fn ck(v: Option<i128>) -> i128 {
    v.expect("exact ring overflow")
}

/// (a + b sqrt2) * sqrt2 = 2b + a sqrt2
#[inline]
fn times_sqrt2(a: i128, b: i128) -> (i128, i128) {
    (ck(b.checked_mul(2)), a)
}

impl Amp {
    pub const ZERO: Amp = Amp { a: 0, b: 0, c: 0, d: 0, e: 0 };
    pub const ONE: Amp = Amp { a: 1, b: 0, c: 0, d: 0, e: 0 };
    pub const I: Amp = Amp { a: 0, b: 0, c: 1, d: 0, e: 0 };

    pub fn new(a: i128, b: i128, c: i128, d: i128, e: u32) -> Amp {
        let mut v = Amp { a, b, c, d, e };
        v.normalize();
        v
    }

    pub fn int(n: i64) -> Amp {
        Amp::new(n as i128, 0, 0, 0, 0)
    }

    /// 1/sqrt2^e
    pub fn inv_sqrt2_pow(e: u32) -> Amp {
        Amp::new(1, 0, 0, 0, e)
    }

    /// 2^-k
    pub fn half_pow(k: u32) -> Amp {
        Amp::inv_sqrt2_pow(2 * k)
    }

    /// e^{i pi/4}
    pub fn omega() -> Amp {
        Amp::new(1, 0, 1, 0, 1)
    }

    /// i^k
    pub fn i_pow(k: u8) -> Amp {
        match k & 3 {
            0 => Amp::ONE,
            1 => Amp::I,
            2 => -Amp::ONE,
            _ => -Amp::I,
        }
    }

    /// Dyadic rational n / 2^k.
    pub fn dyadic(n: i64, k: u32) -> Amp {
        Amp::new(n as i128, 0, 0, 0, 2 * k)
    }

    fn normalize(&mut self) {
        if self.a == 0 && self.b == 0 && self.c == 0 && self.d == 0 {
            self.e = 0;
            return;
        }
        while self.e > 0 && self.a % 2 == 0 && self.c % 2 == 0 {
            let (a, b) = (self.b, self.a / 2);
            let (c, d) = (self.d, self.c / 2);
            self.a = a;
            self.b = b;
            self.c = c;
            self.d = d;
            self.e -= 1;
        }
    }

    fn lifted(&self, e: u32) -> (i128, i128, i128, i128) {
        let (mut a, mut b, mut c, mut d) = (self.a, self.b, self.c, self.d);
        for _ in self.e..e {
            (a, b) = times_sqrt2(a, b);
            (c, d) = times_sqrt2(c, d);
        }
        (a, b, c, d)
    }

    pub fn is_zero(&self) -> bool {
        self.a == 0 && self.b == 0 && self.c == 0 && self.d == 0
    }

    pub fn is_real(&self) -> bool {
        self.c == 0 && self.d == 0
    }

    pub fn conj(&self) -> Amp {
        Amp { c: -self.c, d: -self.d, ..*self }
    }

    pub fn re(&self) -> Amp {
        Amp::new(self.a, self.b, 0, 0, self.e)
    }

    pub fn im(&self) -> Amp {
        Amp::new(self.c, self.d, 0, 0, self.e)
    }

    pub fn mul_i(&self) -> Amp {
        Amp { a: -self.c, b: -self.d, c: self.a, d: self.b, e: self.e }
    }

    pub fn mul_i_pow(&self, k: u8) -> Amp {
        let mut v = *self;
        for _ in 0..(k & 3) {
            v = v.mul_i();
        }
        v
    }

    pub fn div_sqrt2(&self) -> Amp {
        Amp::new(self.a, self.b, self.c, self.d, self.e + 1)
    }

    pub fn div_pow2(&self, k: u32) -> Amp {
        Amp::new(self.a, self.b, self.c, self.d, self.e + 2 * k)
    }

    pub fn scale(&self, n: i64) -> Amp {
        let n = n as i128;
        Amp::new(
            ck(self.a.checked_mul(n)),
            ck(self.b.checked_mul(n)),
            ck(self.c.checked_mul(n)),
            ck(self.d.checked_mul(n)),
            self.e,
        )
    }

    /// |z|^2
    pub fn norm_sqr(&self) -> Amp {
        *self * self.conj()
    }

    /// Sign of the real part, exactly.
    pub fn real_sign(&self) -> Ordering {
        sign_a_plus_b_sqrt2(self.a, self.b)
    }

    /// Compares real parts exactly.
    pub fn cmp_real(&self, other: &Amp) -> Ordering {
        (*self - *other).real_sign()
    }

    pub fn to_f64(&self) -> (f64, f64) {
        let s = std::f64::consts::SQRT_2;
        let den = s.powi(self.e as i32);
        (
            (self.a as f64 + self.b as f64 * s) / den,
            (self.c as f64 + self.d as f64 * s) / den,
        )
    }

    /// Numerator parts and sqrt2 exponent.
    pub fn parts(&self) -> (i128, i128, i128, i128, u32) {
        (self.a, self.b, self.c, self.d, self.e)
    }
}

fn sign_a_plus_b_sqrt2(a: i128, b: i128) -> Ordering {
    let sa = a.cmp(&0);
    let sb = b.cmp(&0);
    if sb == Ordering::Equal {
        return sa;
    }
    if sa == Ordering::Equal || sa == sb {
        return sb;
    }
    // opposite signs: compare a^2 with 2 b^2
    let a2 = ck(a.checked_mul(a));
    let b2 = ck(ck(b.checked_mul(b)).checked_mul(2));
    match a2.cmp(&b2) {
        Ordering::Greater => sa,
        Ordering::Less => sb,
        Ordering::Equal => Ordering::Equal,
    }
}

impl Add for Amp {
    type Output = Amp;
    fn add(self, o: Amp) -> Amp {
        if o.is_zero() {
            return self;
        }
        if self.is_zero() {
            return o;
        }
        let e = self.e.max(o.e);
        let (a1, b1, c1, d1) = self.lifted(e);
        let (a2, b2, c2, d2) = o.lifted(e);
        Amp::new(
            ck(a1.checked_add(a2)),
            ck(b1.checked_add(b2)),
            ck(c1.checked_add(c2)),
            ck(d1.checked_add(d2)),
            e,
        )
    }
}

impl Neg for Amp {
    type Output = Amp;
    fn neg(self) -> Amp {
        Amp { a: -self.a, b: -self.b, c: -self.c, d: -self.d, e: self.e }
    }
}

impl Sub for Amp {
    type Output = Amp;
    fn sub(self, o: Amp) -> Amp {
        self + (-o)
    }
}

fn mul_real(a: i128, b: i128, c: i128, d: i128) -> (i128, i128) {
    // (a + b s)(c + d s) = ac + 2bd + (ad + bc) s
    let ac = ck(a.checked_mul(c));
    let bd2 = ck(ck(b.checked_mul(d)).checked_mul(2));
    let ad = ck(a.checked_mul(d));
    let bc = ck(b.checked_mul(c));
    (ck(ac.checked_add(bd2)), ck(ad.checked_add(bc)))
}

impl Mul for Amp {
    type Output = Amp;
    fn mul(self, o: Amp) -> Amp {
        if self.is_zero() || o.is_zero() {
            return Amp::ZERO;
        }
        let (rr0, rr1) = mul_real(self.a, self.b, o.a, o.b);
        let (ii0, ii1) = mul_real(self.c, self.d, o.c, o.d);
        let (ri0, ri1) = mul_real(self.a, self.b, o.c, o.d);
        let (ir0, ir1) = mul_real(self.c, self.d, o.a, o.b);
        Amp::new(
            ck(rr0.checked_sub(ii0)),
            ck(rr1.checked_sub(ii1)),
            ck(ri0.checked_add(ir0)),
            ck(ri1.checked_add(ir1)),
            self.e + o.e,
        )
    }
}

impl AddAssign for Amp {
    fn add_assign(&mut self, o: Amp) {
        *self = *self + o;
    }
}

impl SubAssign for Amp {
    fn sub_assign(&mut self, o: Amp) {
        *self = *self - o;
    }
}

impl MulAssign for Amp {
    fn mul_assign(&mut self, o: Amp) {
        *self = *self * o;
    }
}

impl std::iter::Sum for Amp {
    fn sum<I: Iterator<Item = Amp>>(iter: I) -> Amp {
        iter.fold(Amp::ZERO, |x, y| x + y)
    }
}

fn fmt_real(f: &mut fmt::Formatter<'_>, a: i128, b: i128) -> fmt::Result {
    match (a, b) {
        (a, 0) => write!(f, "{a}"),
        (0, b) => write!(f, "{b}r2"),
        (a, b) if b < 0 => write!(f, "{a}-{}r2", -b),
        (a, b) => write!(f, "{a}+{b}r2"),
    }
}

/// Exact text form: `re` or `re+i(im)` over `/r2^e`, where r2 is sqrt2.
impl fmt::Display for Amp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let real = self.a != 0 || self.b != 0;
        let imag = self.c != 0 || self.d != 0;
        if !real && !imag {
            return write!(f, "0");
        }
        if real && imag {
            write!(f, "(")?;
        }
        if real {
            fmt_real(f, self.a, self.b)?;
        }
        if imag {
            if real {
                write!(f, " + ")?;
            }
            write!(f, "i(")?;
            fmt_real(f, self.c, self.d)?;
            write!(f, ")")?;
        }
        if real && imag {
            write!(f, ")")?;
        }
        if self.e > 0 {
            write!(f, "/r2^{}", self.e)?;
        }
        Ok(())
    }
}

impl fmt::Debug for Amp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}
