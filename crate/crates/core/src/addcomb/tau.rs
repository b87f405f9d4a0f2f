//! Root of `(1/M)^{2τ} + ((M-1)/M)^τ = 1`, the sumset exponent of the cube
//! `{0, …, M-1}^r`.
//!
//! For moderate `M` the equation is solved directly in double precision.
//! Once `1/M` drops below double resolution the quantity that matters is
//! `t = 2τ - 1`, which satisfies the fixed point `t = log₂(2/(1+t)) / log₂ M`
//! up to terms of order `1/M`; that branch is evaluated in big fixed-point
//! arithmetic so it can also hand out certified rational lower bounds.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::AddCombError;

/// `log₂ M` from which on the asymptotic branch is used.
pub const ASYMPTOTIC_LOG2_THRESHOLD: f64 = 50.0;

const GUARD_BITS: u32 = 64;
const MAX_ITERATIONS: usize = 10_000;

/// Solves for `τ ∈ (1/2, 1]` given the cube side `M ≥ 2`.
pub fn solve_tau(side: f64) -> Result<f64, AddCombError> {
    if !(side >= 2.0) || !side.is_finite() {
        return Err(AddCombError::InvalidCube);
    }
    let ln_m = side.ln();
    let ln_q = (-1.0 / side).ln_1p();
    // f(τ) = M^{-2τ} + ((M-1)/M)^τ - 1, written with expm1 so it keeps its
    // relative accuracy when 1/M is tiny. f is strictly decreasing,
    // f(1/2) > 0 and f(1) = 1/M² - 1/M < 0.
    let f = |tau: f64| (-2.0 * tau * ln_m).exp() + (tau * ln_q).exp_m1();
    let df = |tau: f64| -2.0 * ln_m * (-2.0 * tau * ln_m).exp() + ln_q * (tau * ln_q).exp();

    let (mut lo, mut hi) = (0.5f64, 1.0f64);
    let mut tau = 0.75;
    for _ in 0..200 {
        let value = f(tau);
        if value == 0.0 {
            return Ok(tau);
        }
        if value > 0.0 {
            lo = tau;
        } else {
            hi = tau;
        }
        let newton = tau - value / df(tau);
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let converged = (next - tau).abs() <= 2.0 * f64::EPSILON * tau || hi - lo <= f64::EPSILON;
        tau = next;
        if converged {
            break;
        }
    }
    Ok(tau)
}

/// `t = 2τ - 1` by the asymptotic fixed point, for `log₂ M ≥ 50`.
pub fn solve_t_asymptotic(log2_m: f64, precision_bits: u32) -> Result<f64, AddCombError> {
    if !(log2_m >= ASYMPTOTIC_LOG2_THRESHOLD) || !log2_m.is_finite() {
        return Err(AddCombError::BranchMisuse {
            threshold: ASYMPTOTIC_LOG2_THRESHOLD,
            got: log2_m,
        });
    }
    let k = BigRational::from_float(log2_m).expect("finite");
    let fixed = FixedPointSolve::run(&k, precision_bits.max(64));
    Ok(fixed.value().to_f64().unwrap_or(f64::NAN))
}

/// `t = 2τ - 1` for any `log₂ M ≥ 1`, choosing the branch by the threshold.
pub fn solve_t(log2_m: f64) -> Result<f64, AddCombError> {
    if log2_m >= ASYMPTOTIC_LOG2_THRESHOLD {
        solve_t_asymptotic(log2_m, 128)
    } else {
        Ok(2.0 * solve_tau(log2_m.exp2())? - 1.0)
    }
}

/// A rational number not exceeding the asymptotic fixed point `t` for the
/// exact `log₂ M` given, accurate to about `precision_bits` bits.
pub fn solve_t_lower_bound(log2_m: &BigRational, precision_bits: u32) -> Result<BigRational, AddCombError> {
    if log2_m < &BigRational::from_integer(BigInt::from(ASYMPTOTIC_LOG2_THRESHOLD as i64)) {
        return Err(AddCombError::BranchMisuse {
            threshold: ASYMPTOTIC_LOG2_THRESHOLD,
            got: log2_m.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(FixedPointSolve::run(log2_m, precision_bits).lower_bound())
}

/// Binary fixed-point numbers `mantissa · 2^{-bits}`.
struct Fixed {
    bits: u32,
}

impl Fixed {
    fn one(&self) -> BigInt {
        BigInt::one() << self.bits
    }

    fn mul(&self, a: &BigInt, b: &BigInt) -> BigInt {
        (a * b) >> self.bits
    }

    fn div(&self, a: &BigInt, b: &BigInt) -> BigInt {
        (a << self.bits).div_floor(b)
    }

    /// `ln 2 = Σ_{k≥1} 1/(k·2^k)`.
    fn ln2(&self) -> BigInt {
        let mut sum = BigInt::zero();
        let mut k = 1u32;
        loop {
            let term = (self.one() >> k) / BigInt::from(k);
            if term.is_zero() {
                return sum;
            }
            sum += term;
            k += 1;
        }
    }

    /// `ln(1+x) = 2·atanh(x/(2+x))` for `0 ≤ x < 1`.
    fn ln1p(&self, x: &BigInt) -> BigInt {
        let z = self.div(x, &(self.one() * 2 + x));
        let z2 = self.mul(&z, &z);
        let mut power = z.clone();
        let mut sum = BigInt::zero();
        let mut k = 1u32;
        while !power.is_zero() {
            sum += &power / BigInt::from(k);
            power = self.mul(&power, &z2);
            k += 2;
        }
        sum * 2
    }
}

struct FixedPointSolve {
    arith: Fixed,
    t: BigInt,
    /// Bound on `|t - t*|` in units of `2^{-bits}`.
    error_ulps: BigInt,
}

impl FixedPointSolve {
    fn run(log2_m: &BigRational, precision_bits: u32) -> Self {
        let arith = Fixed {
            bits: precision_bits + GUARD_BITS,
        };
        let ln2 = arith.ln2();
        let (k_num, k_den) = (log2_m.numer(), log2_m.denom());
        let step = |t: &BigInt| -> BigInt {
            let log2_1pt = arith.div(&arith.ln1p(t), &ln2);
            ((arith.one() - log2_1pt) * k_den).div_floor(k_num)
        };

        let mut t = (arith.one() * k_den).div_floor(k_num);
        let mut diff = BigInt::zero();
        for _ in 0..MAX_ITERATIONS {
            let next = step(&t);
            diff = (&next - &t).abs();
            t = next;
            if diff <= BigInt::from(4) {
                break;
            }
        }
        // The map contracts by at most 1/(K ln 2) < 0.03, so the distance to
        // the fixed point is below the last step plus accumulated rounding.
        let rounding = BigInt::from(arith.bits) * 64;
        Self {
            arith,
            t,
            error_ulps: diff + rounding,
        }
    }

    fn scale(&self) -> BigInt {
        self.arith.one()
    }

    fn value(&self) -> BigRational {
        BigRational::new(self.t.clone(), self.scale())
    }

    fn lower_bound(&self) -> BigRational {
        let low = &self.t - &self.error_ulps;
        debug_assert_eq!(low.sign(), Sign::Plus);
        BigRational::new(low, self.scale())
    }
}
