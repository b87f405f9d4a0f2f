//! Modular arithmetic over prime fields, Legendre symbols, roots of unity
//! and quadratic Gauss sums.

use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NumberTheoryError {
    #[error("{0} is not an odd prime")]
    NotOddPrime(u64),
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("the Gauss sum is only defined here for a nonzero quadratic coefficient")]
    ZeroTheta,
}

/// Witnesses that make Miller-Rabin deterministic for every 64-bit input.
const MR_WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

#[inline]
pub fn mul_mod(a: u64, b: u64, n: u64) -> u64 {
    ((a as u128 * b as u128) % n as u128) as u64
}

#[inline]
pub fn add_mod(a: u64, b: u64, n: u64) -> u64 {
    ((a as u128 + b as u128) % n as u128) as u64
}

#[inline]
pub fn sub_mod(a: u64, b: u64, n: u64) -> u64 {
    let (a, b) = (a % n, b % n);
    if a >= b {
        a - b
    } else {
        n - (b - a)
    }
}

pub fn pow_mod(mut base: u64, mut exp: u64, n: u64) -> u64 {
    if n == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= n;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, n);
        }
        base = mul_mod(base, base, n);
        exp >>= 1;
    }
    acc
}

/// Deterministic primality test for the full `u64` range.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &w in &MR_WITNESSES {
        if n.is_multiple_of(w) {
            return n == w;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for &w in &MR_WITNESSES {
        let mut x = pow_mod(w, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Smallest prime `>= n`, or `None` if it does not fit in 64 bits.
pub fn next_prime(n: u64) -> Option<u64> {
    let mut c = n.max(2);
    loop {
        if is_prime(c) {
            return Some(c);
        }
        c = c.checked_add(1)?;
    }
}

/// `exp(2πi x / n)`; `x` is reduced modulo `n` first.
pub fn unit_root(n: u64, x: u64) -> Complex64 {
    let x = x % n;
    // Fold into (-n/2, n/2] so the angle stays small and sin/cos stay accurate.
    let signed = if 2 * (x as u128) > n as u128 {
        -((n - x) as f64)
    } else {
        x as f64
    };
    Complex64::from_polar(1.0, TAU * signed / n as f64)
}

/// An element of `F_p`, always stored reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Residue(u64);

impl Residue {
    pub fn value(self) -> u64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for Residue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A certified odd prime together with the constant `σ_p` of the quadratic
/// Gauss sum (`1` when `p ≡ 1 mod 4`, `i` when `p ≡ 3 mod 4`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimeContext {
    p: u64,
    sigma: Complex64,
}

impl PrimeContext {
    pub fn new(p: u64) -> Result<Self, NumberTheoryError> {
        if p == 2 || !is_prime(p) {
            return Err(NumberTheoryError::NotOddPrime(p));
        }
        let sigma = if p % 4 == 1 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 1.0)
        };
        Ok(Self { p, sigma })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn p_mod_4(&self) -> u64 {
        self.p % 4
    }

    pub fn sigma(&self) -> Complex64 {
        self.sigma
    }

    pub fn sqrt_p(&self) -> f64 {
        (self.p as f64).sqrt()
    }

    pub fn residue(&self, x: u64) -> Residue {
        Residue(x % self.p)
    }

    /// Reduces a signed integer into `[0, p)`.
    pub fn residue_i128(&self, x: i128) -> Residue {
        Residue(x.rem_euclid(self.p as i128) as u64)
    }

    pub fn add(&self, a: Residue, b: Residue) -> Residue {
        Residue(add_mod(a.0, b.0, self.p))
    }

    pub fn sub(&self, a: Residue, b: Residue) -> Residue {
        Residue(sub_mod(a.0, b.0, self.p))
    }

    pub fn mul(&self, a: Residue, b: Residue) -> Residue {
        Residue(mul_mod(a.0, b.0, self.p))
    }

    pub fn neg(&self, a: Residue) -> Residue {
        Residue(sub_mod(0, a.0, self.p))
    }

    /// Legendre symbol by Euler's criterion.
    pub fn legendre(&self, a: Residue) -> i8 {
        if a.0 == 0 {
            return 0;
        }
        if pow_mod(a.0, (self.p - 1) / 2, self.p) == 1 {
            1
        } else {
            -1
        }
    }

    /// Multiplicative inverse by the extended Euclidean algorithm.
    pub fn inverse(&self, a: Residue) -> Result<Residue, NumberTheoryError> {
        if a.0 == 0 {
            return Err(NumberTheoryError::ZeroInverse);
        }
        let (mut r0, mut r1) = (self.p as i128, a.0 as i128);
        let (mut s0, mut s1) = (0i128, 1i128);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (s0, s1) = (s1, s0 - q * s1);
        }
        debug_assert_eq!(r0, 1);
        Ok(self.residue_i128(s0))
    }

    pub fn div(&self, a: Residue, b: Residue) -> Result<Residue, NumberTheoryError> {
        Ok(self.mul(a, self.inverse(b)?))
    }

    /// `e_p(x) = exp(2πi x / p)`.
    pub fn e_p(&self, x: Residue) -> Complex64 {
        unit_root(self.p, x.0)
    }

    /// `Σ_{y ∈ F_p} e_p(θ y²)` by direct summation.
    pub fn gauss_sum(&self, theta: Residue) -> Result<Complex64, NumberTheoryError> {
        if theta.0 == 0 {
            return Err(NumberTheoryError::ZeroTheta);
        }
        Ok((0..self.p)
            .map(|y| {
                let y = Residue(y);
                self.e_p(self.mul(theta, self.mul(y, y)))
            })
            .sum())
    }

    /// Closed form `(θ/p)·σ_p·√p` of the quadratic Gauss sum.
    pub fn gauss_sum_closed(&self, theta: Residue) -> Result<Complex64, NumberTheoryError> {
        if theta.0 == 0 {
            return Err(NumberTheoryError::ZeroTheta);
        }
        Ok(self.sigma * (self.legendre(theta) as f64 * self.sqrt_p()))
    }
}
