//! Exponent optimization for the chirp construction.
//!
//! For an even `m` the index set `𝒜` has size about `p^α` with
//! `α = 1/(2m(4m-1))`, and the cube side `M = 2^{1/α-1}` fixes the sumset
//! exponent `t = 2τ - 1`. What remains is a linear program in
//! `(ε₁, ℓ, γ, α₁, α₂, ε, x, y)` whose supremum of `ε₁` gives the
//! improvement `ε₀ = ε₁/2` over the square-root bottleneck.
//!
//! Constraints are the closures (strict `<` relaxed to `≤`) of
//!
//! ```text
//! (A)  ε₁ + 2ε ≤ α₁ - α - (4/3)x
//! (B)  ℓ ≤ 1/2 + (4/3)x - α₁ + ε/2
//! (D)  ε₁ + 2ε ≤ γ/4 - y/4
//! (E)  α₂ ≥ 9x + ε
//! (F)  c₀y/8 - (α₁/4 + 9α₂/8)/m ≤ x/8 - α/4
//! (G)  ε₁ + ε ≤ c₀y/8 - (α₁/4 + 9α₂/8)/m
//! (H)  my ≤ 1/2 - α₁,  my ≤ 1/2 - α₂
//! (I)  3α₂ - 2α₁ ≤ (2 - c₀)my
//! (ℓγ) t(ℓ - γ) ≥ 10γ
//! ```
//!
//! with every variable nonnegative. There is no constraint (C).

mod simplex;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::addcomb::{self, ASYMPTOTIC_LOG2_THRESHOLD};
use crate::exact::{round_down_significant, to_fraction_string, to_scientific};

pub use simplex::{LinearProgram, LpSolution, LpStatus};

/// Default `c₀`.
pub const DEFAULT_C0: (i64, i64) = (1, 10430);
pub const DEFAULT_PRECISION_DIGITS: u32 = 40;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizerError {
    #[error("m must be a positive even integer, got {0}")]
    OddOrZeroM(u64),
    #[error("c0 must lie strictly between 0 and 1")]
    InvalidC0,
    #[error("precision must be at least 1 significant digit")]
    InvalidPrecision,
    #[error("empty m grid")]
    EmptyGrid,
    #[error(transparent)]
    Tau(#[from] addcomb::AddCombError),
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn int(n: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// The eight decision variables, in column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    Eps1,
    Ell,
    Gamma,
    Alpha1,
    Alpha2,
    Eps,
    X,
    Y,
}

impl Var {
    pub const ALL: [Var; 8] = [
        Var::Eps1,
        Var::Ell,
        Var::Gamma,
        Var::Alpha1,
        Var::Alpha2,
        Var::Eps,
        Var::X,
        Var::Y,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Var::Eps1 => "eps1",
            Var::Ell => "ell",
            Var::Gamma => "gamma",
            Var::Alpha1 => "alpha1",
            Var::Alpha2 => "alpha2",
            Var::Eps => "eps",
            Var::X => "x",
            Var::Y => "y",
        }
    }
}

/// Inputs of the program: `m`, `c₀`, `α(m)` and a rational lower bound on `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct MachineParams {
    pub m: u64,
    pub c0: BigRational,
    pub alpha: BigRational,
    pub t: BigRational,
    pub precision_digits: u32,
}

impl MachineParams {
    pub fn new(m: u64, c0: BigRational, precision_digits: u32) -> Result<Self, OptimizerError> {
        if m == 0 || m % 2 == 1 {
            return Err(OptimizerError::OddOrZeroM(m));
        }
        if !c0.is_positive() || c0 >= BigRational::one() {
            return Err(OptimizerError::InvalidC0);
        }
        if precision_digits == 0 {
            return Err(OptimizerError::InvalidPrecision);
        }
        let denom = 2 * m as u128 * (4 * m as u128 - 1);
        let alpha = BigRational::new(BigInt::one(), BigInt::from(denom));
        let t = t_lower_bound(&alpha, precision_digits)?;
        Ok(Self {
            m,
            c0,
            alpha,
            t,
            precision_digits,
        })
    }

    pub fn with_default_c0(m: u64) -> Result<Self, OptimizerError> {
        Self::new(m, q(DEFAULT_C0.0, DEFAULT_C0.1), DEFAULT_PRECISION_DIGITS)
    }

    /// Same parameters with `t` replaced, used for sensitivity checks.
    pub fn with_t(&self, t: BigRational) -> Self {
        Self { t, ..self.clone() }
    }

    /// `log₂ M = 1/α - 1` for the cube side `M = 2^{1/α-1}`.
    pub fn log2_side(&self) -> BigRational {
        self.alpha.recip() - BigRational::one()
    }
}

/// `t = 2τ - 1` for `M = 2^{1/α - 1}`, rounded down to `digits` significant digits.
fn t_lower_bound(alpha: &BigRational, digits: u32) -> Result<BigRational, OptimizerError> {
    let log2_m = alpha.recip() - BigRational::one();
    let k = log2_m.to_f64().unwrap_or(f64::INFINITY);
    if k >= ASYMPTOTIC_LOG2_THRESHOLD {
        // t ≈ 1/K, so K's bit length on top of the requested relative precision.
        let magnitude = log2_m.numer().bits() as u32;
        let bits = (digits as f64 * std::f64::consts::LOG2_10).ceil() as u32 + magnitude + 32;
        let t = addcomb::solve_t_lower_bound(&log2_m, bits)?;
        Ok(round_down_significant(&t, digits))
    } else {
        // Double precision only carries ~15 digits; shave a relative 1e-12
        // so the rational stays below the true root.
        let t = 2.0 * addcomb::solve_tau(k.exp2())? - 1.0;
        let t = BigRational::from_float(t * (1.0 - 1e-12)).expect("finite");
        Ok(round_down_significant(&t, digits.min(12)))
    }
}

/// One closure inequality `coeffs · v ≤ rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: &'static str,
    pub coeffs: [BigRational; 8],
    pub rhs: BigRational,
}

impl Constraint {
    fn new(name: &'static str, terms: &[(Var, BigRational)], rhs: BigRational) -> Self {
        let mut coeffs: [BigRational; 8] = Default::default();
        for (v, c) in terms {
            coeffs[*v as usize] += c;
        }
        Self { name, coeffs, rhs }
    }

    pub fn slack(&self, values: &[BigRational; 8]) -> BigRational {
        let lhs: BigRational = self.coeffs.iter().zip(values).map(|(c, v)| c * v).sum();
        &self.rhs - lhs
    }
}

/// The ten rows of the closed feasibility region (signs are implicit).
pub fn build_constraints(params: &MachineParams) -> Vec<Constraint> {
    use Var::*;
    let m = int(params.m);
    let c0 = &params.c0;
    let alpha = &params.alpha;
    let one = BigRational::one();
    let a1_over_m = q(1, 4) / &m;
    let a2_over_m = q(9, 8) / &m;
    let c0y = c0 / int(8);

    vec![
        Constraint::new(
            "A",
            &[(Eps1, one.clone()), (Eps, int(2)), (Alpha1, -&one), (X, q(4, 3))],
            -alpha.clone(),
        ),
        Constraint::new(
            "B",
            &[(Ell, one.clone()), (Alpha1, one.clone()), (X, q(-4, 3)), (Eps, q(-1, 2))],
            q(1, 2),
        ),
        Constraint::new(
            "D",
            &[(Eps1, one.clone()), (Eps, int(2)), (Gamma, q(-1, 4)), (Y, q(1, 4))],
            BigRational::zero(),
        ),
        Constraint::new(
            "E",
            &[(Alpha2, -&one), (X, int(9)), (Eps, one.clone())],
            BigRational::zero(),
        ),
        Constraint::new(
            "F",
            &[
                (Y, c0y.clone()),
                (Alpha1, -a1_over_m.clone()),
                (Alpha2, -a2_over_m.clone()),
                (X, q(-1, 8)),
            ],
            -alpha / int(4),
        ),
        Constraint::new(
            "G",
            &[
                (Eps1, one.clone()),
                (Eps, one.clone()),
                (Y, -c0y),
                (Alpha1, a1_over_m),
                (Alpha2, a2_over_m),
            ],
            BigRational::zero(),
        ),
        Constraint::new("H1", &[(Y, m.clone()), (Alpha1, one.clone())], q(1, 2)),
        Constraint::new("H2", &[(Y, m.clone()), (Alpha2, one.clone())], q(1, 2)),
        Constraint::new(
            "I",
            &[(Alpha2, int(3)), (Alpha1, q(-2, 1)), (Y, -(int(2) - c0) * &m)],
            BigRational::zero(),
        ),
        Constraint::new(
            "ell-gamma",
            &[(Ell, -params.t.clone()), (Gamma, &params.t + int(10))],
            BigRational::zero(),
        ),
    ]
}

/// A point of the closed feasibility region.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleTuple {
    pub values: [BigRational; 8],
}

impl FeasibleTuple {
    pub fn get(&self, v: Var) -> &BigRational {
        &self.values[v as usize]
    }

    pub fn set(&mut self, v: Var, value: BigRational) {
        self.values[v as usize] = value;
    }

    pub fn zeros() -> Self {
        Self {
            values: Default::default(),
        }
    }
}

/// Independent re-check of a tuple against the inequalities, written out
/// term by term rather than through [`build_constraints`].
pub fn verify_tuple(params: &MachineParams, tuple: &FeasibleTuple) -> bool {
    let v = |x: Var| tuple.get(x);
    let (e1, ell, g, a1, a2, e, x, y) = (
        v(Var::Eps1),
        v(Var::Ell),
        v(Var::Gamma),
        v(Var::Alpha1),
        v(Var::Alpha2),
        v(Var::Eps),
        v(Var::X),
        v(Var::Y),
    );
    let m = int(params.m);
    let c0 = &params.c0;
    let alpha = &params.alpha;
    let half = q(1, 2);
    let four_thirds = q(4, 3);
    let eps2 = c0 * y / int(8) - (a1 / int(4) + int(9) * a2 / int(8)) / &m;

    let nonneg = tuple.values.iter().all(|x| !x.is_negative());
    let a = e1 + e <= a1 - alpha - &four_thirds * x - e;
    let b = *ell <= &half + &four_thirds * x - a1 + e / int(2);
    let d = e1 + e <= g / int(4) - y / int(4) - e;
    let ee = *a2 >= int(9) * x + e;
    let f = eps2 <= x / int(8) - alpha / int(4);
    let gg = e1 + e <= eps2;
    let my = &m * y;
    let h = my <= &half - a1 && my <= &half - a2;
    let i = int(3) * a2 - int(2) * a1 <= (int(2) - c0) * &my;
    let lg = &params.t * (ell - g) >= int(10) * g;
    nonneg && a && b && d && ee && f && gg && h && i && lg
}

/// Outcome of maximizing `ε₁` for one parameter set.
#[derive(Debug, Clone)]
pub struct LpResult {
    pub params: MachineParams,
    pub status: LpStatus,
    pub optimum: Option<FeasibleTuple>,
    /// Dual multipliers per constraint, certifying optimality.
    pub duals: Vec<BigRational>,
    pub certified: bool,
    pub pivots: usize,
}

impl LpResult {
    pub fn eps1_sup(&self) -> Option<&BigRational> {
        self.optimum.as_ref().map(|t| t.get(Var::Eps1))
    }

    pub fn eps0(&self) -> Option<BigRational> {
        self.eps1_sup().map(|e| e / int(2))
    }

    /// Names of constraints with zero slack at the optimum.
    pub fn binding(&self) -> Vec<&'static str> {
        let Some(opt) = &self.optimum else {
            return Vec::new();
        };
        build_constraints(&self.params)
            .into_iter()
            .filter(|c| c.slack(&opt.values).is_zero())
            .map(|c| c.name)
            .collect()
    }
}

pub fn linear_program(params: &MachineParams) -> LinearProgram {
    let mut objective = vec![BigRational::zero(); 8];
    objective[Var::Eps1 as usize] = BigRational::one();
    LinearProgram {
        objective,
        rows: build_constraints(params)
            .into_iter()
            .map(|c| (c.coeffs.to_vec(), c.rhs))
            .collect(),
    }
}

pub fn maximize_eps1(params: &MachineParams) -> LpResult {
    let lp = linear_program(params);
    let sol = lp.solve();
    let (optimum, certified) = match sol.status {
        LpStatus::Optimal => {
            let values: [BigRational; 8] = sol.x.clone().try_into().expect("eight variables");
            (Some(FeasibleTuple { values }), lp.certifies(&sol.x, &sol.duals))
        }
        _ => (None, false),
    };
    LpResult {
        params: params.clone(),
        status: sol.status,
        optimum,
        duals: sol.duals,
        certified,
        pivots: sol.pivots,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub m: u64,
    pub status: LpStatus,
    #[serde(skip)]
    pub eps1_sup: Option<BigRational>,
}

impl SweepPoint {
    pub fn eps1_f64(&self) -> f64 {
        self.eps1_sup.as_ref().and_then(|e| e.to_f64()).unwrap_or(f64::NAN)
    }
}

/// Solves the program for every `m` of the grid, in parallel.
pub fn sweep_m(ms: &[u64], c0: &BigRational, precision_digits: u32) -> Result<Vec<SweepPoint>, OptimizerError> {
    if ms.is_empty() {
        return Err(OptimizerError::EmptyGrid);
    }
    let params = ms
        .iter()
        .map(|&m| MachineParams::new(m, c0.clone(), precision_digits))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(params
        .par_iter()
        .map(|p| {
            let r = maximize_eps1(p);
            SweepPoint {
                m: p.m,
                status: r.status,
                eps1_sup: r.eps1_sup().cloned(),
            }
        })
        .collect())
}

/// `n` points spaced geometrically over `[start, stop]`, each rounded to
/// the nearest positive even integer.
pub fn log_grid(start: f64, stop: f64, n: usize) -> Vec<u64> {
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![round_even(start)];
    }
    let (ls, le) = (start.ln(), stop.ln());
    (0..n)
        .map(|i| round_even((ls + (le - ls) * i as f64 / (n - 1) as f64).exp()))
        .collect()
}

/// Multiplicative grid `start, start·factor, …` up to `stop` (inclusive,
/// with a little slack for rounding in the factor).
pub fn factor_grid(start: f64, stop: f64, factor: f64) -> Vec<u64> {
    let mut out = Vec::new();
    if !(factor > 1.0) || !(start > 0.0) {
        return out;
    }
    let mut v = start;
    while v <= stop * (1.0 + 1e-9) {
        out.push(round_even(v));
        v *= factor;
    }
    out.dedup();
    out
}

fn round_even(v: f64) -> u64 {
    ((v / 2.0).round() as u64).max(1) * 2
}

/// Index of the peak if the sequence rises (weakly) to it and then falls
/// (weakly); `None` otherwise. The first maximum wins ties. Infeasible grid
/// points can be passed as `None`, which orders below every value.
pub fn unimodal_peak<T: Ord>(values: &[T]) -> Option<usize> {
    let peak = (0..values.len()).max_by(|&i, &j| values[i].cmp(&values[j]).then(j.cmp(&i)))?;
    let rising = values[..=peak].windows(2).all(|w| w[0] <= w[1]);
    let falling = values[peak..].windows(2).all(|w| w[0] >= w[1]);
    (rising && falling).then_some(peak)
}

/// Machine-readable summary of one optimization.
#[derive(Debug, Clone, Serialize)]
pub struct LpReport {
    pub m: u64,
    pub c0: String,
    pub alpha: String,
    pub t: String,
    pub t_decimal: String,
    pub status: LpStatus,
    pub eps1_sup: Option<String>,
    pub eps1_sup_decimal: Option<String>,
    pub eps0: Option<String>,
    pub eps0_decimal: Option<String>,
    /// ε₁ appears in the exponent of `ExRIP[1/2 + ε₁/2]`.
    pub exrip_exponent_decimal: Option<String>,
    pub optimum: Vec<(String, String, String)>,
    pub binding_constraints: Vec<&'static str>,
    pub optimality_certified: bool,
    pub pivots: usize,
}

impl From<&LpResult> for LpReport {
    fn from(r: &LpResult) -> Self {
        let dec = |x: &BigRational| to_scientific(x, 8);
        let optimum = r
            .optimum
            .as_ref()
            .map(|o| {
                Var::ALL
                    .iter()
                    .map(|&v| (v.name().to_string(), to_fraction_string(o.get(v)), dec(o.get(v))))
                    .collect()
            })
            .unwrap_or_default();
        let eps0 = r.eps0();
        LpReport {
            m: r.params.m,
            c0: to_fraction_string(&r.params.c0),
            alpha: to_fraction_string(&r.params.alpha),
            t: to_fraction_string(&r.params.t),
            t_decimal: dec(&r.params.t),
            status: r.status,
            eps1_sup: r.eps1_sup().map(to_fraction_string),
            eps1_sup_decimal: r.eps1_sup().map(dec),
            eps0: eps0.as_ref().map(to_fraction_string),
            eps0_decimal: eps0.as_ref().map(dec),
            exrip_exponent_decimal: eps0.as_ref().map(|e| dec(&(e + q(1, 2)))),
            optimum,
            binding_constraints: r.binding(),
            optimality_certified: r.certified,
            pivots: r.pivots,
        }
    }
}
