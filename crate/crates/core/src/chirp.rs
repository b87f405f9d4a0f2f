//! Chirp vectors `u_{a,b}(x) = e_p(a x² + b x)/√p`, the index sets `𝒜` and
//! `ℬ`, and the Gram entries of the resulting ensembles.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::addcomb::{self, AddCombError, CubeSpec, ResidueSet};
use crate::number_theory::{NumberTheoryError, PrimeContext, Residue};

/// Upper limit on brute-force enumerations.
pub const ENUMERATION_LIMIT: u128 = 100_000_000;
/// Largest `p` for which a dense `p × N` matrix is materialized.
pub const DENSE_LIMIT: u64 = 1 << 14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChirpError {
    #[error("equal chirp rates; the inner product is the Kronecker delta in b")]
    EqualChirpRate,
    #[error("the construction of A collapsed: {0}")]
    DegenerateA(String),
    #[error("enumeration of {0} tuples exceeds the limit")]
    TooLarge(u128),
    #[error("(2M)^r = {span} exceeds p = {p}; the embedding would wrap around")]
    EmbeddingOverflow { span: u64, p: u64 },
    #[error("m must be a positive even integer, got {0}")]
    InvalidM(u64),
    #[error("set lives in Z/{got}Z but the field has p = {p}")]
    WrongField { got: u64, p: u64 },
    #[error("a1 = {0} lies in A2")]
    A1InA2(u64),
    #[error("duplicate column index ({0}, {1})")]
    DuplicateIndex(u64, u64),
    #[error("dense export is limited to p <= {DENSE_LIMIT}")]
    TooLargeForDense,
    #[error(transparent)]
    NumberTheory(#[from] NumberTheoryError),
    #[error(transparent)]
    AddComb(#[from] AddCombError),
}

/// Column label `(a, b)` of the chirp `u_{a,b}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ChirpIndex {
    pub a: u64,
    pub b: u64,
}

impl ChirpIndex {
    pub fn new(a: u64, b: u64) -> Self {
        Self { a, b }
    }
}

/// `u_{a,b}` as a length-`p` vector.
pub fn chirp_column(ctx: &PrimeContext, idx: ChirpIndex) -> Vec<Complex64> {
    let (a, b) = (ctx.residue(idx.a), ctx.residue(idx.b));
    let scale = 1.0 / ctx.sqrt_p();
    (0..ctx.p())
        .map(|x| {
            let x = ctx.residue(x);
            let phase = ctx.add(ctx.mul(a, ctx.mul(x, x)), ctx.mul(b, x));
            ctx.e_p(phase) * scale
        })
        .collect()
}

/// `⟨u, v⟩ = Σ_x u(x)·conj(v(x))`.
pub fn inner(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(x, y)| x * y.conj()).sum()
}

/// `(1/p) Σ_x e_p((a₁-a₂)x² + (b₁-b₂)x)` by direct summation.
pub fn gram_entry_direct(ctx: &PrimeContext, i: ChirpIndex, j: ChirpIndex) -> Complex64 {
    let da = ctx.sub(ctx.residue(i.a), ctx.residue(j.a));
    let db = ctx.sub(ctx.residue(i.b), ctx.residue(j.b));
    let s: Complex64 = (0..ctx.p())
        .map(|x| {
            let x = ctx.residue(x);
            ctx.e_p(ctx.add(ctx.mul(da, ctx.mul(x, x)), ctx.mul(db, x)))
        })
        .sum();
    s / ctx.p() as f64
}

/// `(σ_p/√p)·((a₁-a₂)/p)·e_p(-(b₁-b₂)²/(4(a₁-a₂)))`, valid for `a₁ ≠ a₂`.
pub fn gram_entry_closed(ctx: &PrimeContext, i: ChirpIndex, j: ChirpIndex) -> Result<Complex64, ChirpError> {
    let da = ctx.sub(ctx.residue(i.a), ctx.residue(j.a));
    if da.is_zero() {
        return Err(ChirpError::EqualChirpRate);
    }
    let db = ctx.sub(ctx.residue(i.b), ctx.residue(j.b));
    let four_da = ctx.mul(ctx.residue(4), da);
    let phase = ctx.neg(ctx.div(ctx.mul(db, db), four_da)?);
    Ok(ctx.sigma() * (ctx.legendre(da) as f64 / ctx.sqrt_p()) * ctx.e_p(phase))
}

/// Gram entry from the closed form, with the Kronecker delta when `a₁ = a₂`.
pub fn gram_entry(ctx: &PrimeContext, i: ChirpIndex, j: ChirpIndex) -> Complex64 {
    if ctx.residue(i.a) == ctx.residue(j.a) {
        if ctx.residue(i.b) == ctx.residue(j.b) {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    } else {
        gram_entry_closed(ctx, i, j).expect("distinct chirp rates")
    }
}

/// Parameters of the `x² + Ux` construction of `𝒜`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ASetParams {
    pub m: u64,
    pub p: u64,
    /// `⌊p^{1/(2m(4m-1))}⌋`
    pub l: u64,
    /// `L^{4m-1}`
    pub u: u64,
}

impl ASetParams {
    pub fn new(m: u64, p: u64) -> Result<Self, ChirpError> {
        if m == 0 || m % 2 == 1 {
            return Err(ChirpError::InvalidM(m));
        }
        let root = 2 * m * (4 * m - 1);
        let l = integer_root(p, root);
        if l == 0 {
            return Err(ChirpError::DegenerateA("L = 0".into()));
        }
        let u = u32::try_from(4 * m - 1)
            .ok()
            .and_then(|e| l.checked_pow(e))
            .ok_or_else(|| ChirpError::DegenerateA("U = L^(4m-1) overflows".into()))?;
        Ok(Self { m, p, l, u })
    }

    /// `α = 1/(2m(4m-1))` as a float.
    pub fn alpha(&self) -> f64 {
        1.0 / (2.0 * self.m as f64 * (4.0 * self.m as f64 - 1.0))
    }
}

/// Largest `r` with `r^k ≤ n`.
pub fn integer_root(n: u64, k: u64) -> u64 {
    if k == 1 || n <= 1 {
        return n;
    }
    let fits = |r: u64| -> bool {
        let mut acc: u128 = 1;
        for _ in 0..k {
            acc = acc.saturating_mul(r as u128);
            if acc > n as u128 {
                return false;
            }
        }
        true
    };
    let mut r = ((n as f64).powf(1.0 / k as f64)).round() as u64;
    while r > 0 && !fits(r) {
        r -= 1;
    }
    while fits(r + 1) {
        r += 1;
    }
    r
}

/// `𝒜 = {x² + Ux mod p : 1 ≤ x ≤ L}`.
pub fn build_a(params: &ASetParams) -> Result<ResidueSet, ChirpError> {
    let ctx = PrimeContext::new(params.p)?;
    let u = ctx.residue(params.u);
    let elems: Vec<u64> = (1..=params.l)
        .map(|x| {
            let x = ctx.residue(x);
            ctx.add(ctx.mul(x, x), ctx.mul(u, x)).value()
        })
        .collect();
    let set = ResidueSet::new(params.p, elems.iter().copied())?;
    if set.len() as u64 != params.l {
        return Err(ChirpError::DegenerateA(format!(
            "{} distinct values for L = {}",
            set.len(),
            params.l
        )));
    }
    Ok(set)
}

/// A tuple showing that the reciprocal-sum condition fails.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HypothesisViolation {
    pub a: u64,
    pub left: Vec<u64>,
    pub right: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HypothesisCheck {
    pub holds: bool,
    pub tuples_checked: u128,
    pub counterexample: Option<HypothesisViolation>,
}

fn check_field(set: &ResidueSet, ctx: &PrimeContext) -> Result<(), ChirpError> {
    if set.modulus() != ctx.p() {
        return Err(ChirpError::WrongField {
            got: set.modulus(),
            p: ctx.p(),
        });
    }
    Ok(())
}

/// Odometer over `width`-tuples of `0..base`.
fn for_each_tuple(base: usize, width: usize, mut f: impl FnMut(&[usize]) -> bool) {
    if base == 0 && width > 0 {
        return;
    }
    let mut digits = vec![0usize; width];
    loop {
        if !f(&digits) {
            return;
        }
        let mut pos = 0;
        loop {
            if pos == width {
                return;
            }
            digits[pos] += 1;
            if digits[pos] < base {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
    }
}

/// Exhaustively checks that for every `a ∈ A` and `a₁, …, a₂ₘ ∈ A ∖ {a}`,
/// `Σ_{j≤m} 1/(a-a_j) = Σ_{j>m} 1/(a-a_j)` in `F_p` forces the two halves
/// to be rearrangements of each other.
pub fn verify_hypothesis_a(a_set: &ResidueSet, m: u64, ctx: &PrimeContext) -> Result<HypothesisCheck, ChirpError> {
    if m == 0 || m % 2 == 1 {
        return Err(ChirpError::InvalidM(m));
    }
    check_field(a_set, ctx)?;
    let n = a_set.len();
    let width = 2 * m as usize;
    let per_anchor = (n.saturating_sub(1) as u128).checked_pow(width as u32).unwrap_or(u128::MAX);
    let total = per_anchor.saturating_mul(n as u128);
    if total > ENUMERATION_LIMIT {
        return Err(ChirpError::TooLarge(total));
    }
    let mut counterexample = None;
    for &a in a_set.elements() {
        let others: Vec<u64> = a_set.iter().filter(|&x| x != a).collect();
        let inv: Vec<Residue> = others
            .iter()
            .map(|&x| ctx.inverse(ctx.sub(ctx.residue(a), ctx.residue(x))))
            .collect::<Result<_, _>>()?;
        let half = m as usize;
        for_each_tuple(others.len(), width, |t| {
            let sum = |idx: &[usize]| idx.iter().fold(ctx.residue(0), |s, &i| ctx.add(s, inv[i]));
            if sum(&t[..half]) == sum(&t[half..]) {
                let mut l: Vec<usize> = t[..half].to_vec();
                let mut r: Vec<usize> = t[half..].to_vec();
                l.sort_unstable();
                r.sort_unstable();
                if l != r {
                    counterexample = Some(HypothesisViolation {
                        a,
                        left: t[..half].iter().map(|&i| others[i]).collect(),
                        right: t[half..].iter().map(|&i| others[i]).collect(),
                    });
                    return false;
                }
            }
            true
        });
        if counterexample.is_some() {
            break;
        }
    }
    Ok(HypothesisCheck {
        holds: counterexample.is_none(),
        tuples_checked: total,
        counterexample,
    })
}

/// Number of `m`-tuples from `A₂` with
/// `Σ_{i≤m/2} [1/(a₁-a⁽ⁱ⁾) - 1/(a₁-a⁽ⁱ⁺ᵐᐟ²⁾)] = 0`.
pub fn count_lambda0(a2: &ResidueSet, a1: u64, m: u64, ctx: &PrimeContext) -> Result<u64, ChirpError> {
    if m == 0 || m % 2 == 1 {
        return Err(ChirpError::InvalidM(m));
    }
    check_field(a2, ctx)?;
    let a1 = ctx.residue(a1);
    if a2.contains(a1.value()) {
        return Err(ChirpError::A1InA2(a1.value()));
    }
    let total = (a2.len() as u128).checked_pow(m as u32).unwrap_or(u128::MAX);
    if total > ENUMERATION_LIMIT {
        return Err(ChirpError::TooLarge(total));
    }
    let inv: Vec<Residue> = a2
        .iter()
        .map(|x| ctx.inverse(ctx.sub(a1, ctx.residue(x))))
        .collect::<Result<_, _>>()?;
    let half = m as usize / 2;
    let mut count = 0u64;
    for_each_tuple(a2.len(), m as usize, |t| {
        let s = (0..half).fold(ctx.residue(0), |s, i| ctx.add(s, ctx.sub(inv[t[i]], inv[t[i + half]])));
        if s.is_zero() {
            count += 1;
        }
        true
    });
    Ok(count)
}

/// `(m/2)!·|A₂|^{m/2}`, the count forced by the reciprocal-sum condition.
pub fn lambda0_formula(a2_len: u64, m: u64) -> u128 {
    let half = m / 2;
    let fact: u128 = (1..=half as u128).product();
    fact * (a2_len as u128).pow(half as u32)
}

/// `ℬ = {Σ_j x_j (2M)^{j-1} : 0 ≤ x_j < M}` inside `F_p`.
pub fn build_b(p: u64, side: u64, dim: u32) -> Result<ResidueSet, ChirpError> {
    let spec = CubeSpec::new(side, dim)?;
    let span = spec.span()?;
    if span > p {
        return Err(ChirpError::EmbeddingOverflow { span, p });
    }
    Ok(ResidueSet::new(p, addcomb::cube_embed(spec)?)?)
}

/// A prime together with an explicit list of chirp columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ChirpEnsemble {
    ctx: PrimeContext,
    indices: Vec<ChirpIndex>,
}

impl ChirpEnsemble {
    pub fn new(ctx: PrimeContext, indices: Vec<ChirpIndex>) -> Result<Self, ChirpError> {
        let mut seen = std::collections::HashSet::with_capacity(indices.len());
        let indices: Vec<ChirpIndex> = indices
            .into_iter()
            .map(|i| ChirpIndex::new(i.a % ctx.p(), i.b % ctx.p()))
            .collect();
        for i in &indices {
            if !seen.insert(*i) {
                return Err(ChirpError::DuplicateIndex(i.a, i.b));
            }
        }
        Ok(Self { ctx, indices })
    }

    /// Every `(a, b) ∈ F_p × F_p`.
    pub fn full(ctx: PrimeContext) -> Self {
        let p = ctx.p();
        let indices = (0..p).flat_map(|a| (0..p).map(move |b| ChirpIndex::new(a, b))).collect();
        Self { ctx, indices }
    }

    pub fn ctx(&self) -> &PrimeContext {
        &self.ctx
    }

    pub fn indices(&self) -> &[ChirpIndex] {
        &self.indices
    }

    pub fn num_rows(&self) -> usize {
        self.ctx.p() as usize
    }

    pub fn num_columns(&self) -> usize {
        self.indices.len()
    }

    pub fn column(&self, k: usize) -> Vec<Complex64> {
        chirp_column(&self.ctx, self.indices[k])
    }

    pub fn gram(&self, i: usize, j: usize) -> Complex64 {
        gram_entry(&self.ctx, self.indices[i], self.indices[j])
    }

    /// Sub-ensemble with the listed columns, in the given order.
    pub fn select(&self, columns: &[usize]) -> Self {
        Self {
            ctx: self.ctx,
            indices: columns.iter().map(|&k| self.indices[k]).collect(),
        }
    }

    /// Row-major `p × N` matrix of all columns.
    pub fn dense(&self) -> Result<Vec<Vec<Complex64>>, ChirpError> {
        if self.ctx.p() > DENSE_LIMIT {
            return Err(ChirpError::TooLargeForDense);
        }
        let cols: Vec<Vec<Complex64>> = (0..self.num_columns()).map(|k| self.column(k)).collect();
        Ok((0..self.num_rows())
            .map(|x| cols.iter().map(|c| c[x]).collect())
            .collect())
    }
}

/// Columns `u_{a,b}` for `(a, b) ∈ A × B`, `a` major and `b` minor.
pub fn assemble_ensemble(ctx: PrimeContext, a: &ResidueSet, b: &ResidueSet) -> Result<ChirpEnsemble, ChirpError> {
    check_field(a, &ctx)?;
    check_field(b, &ctx)?;
    let indices = a
        .iter()
        .flat_map(|x| b.iter().map(move |y| ChirpIndex::new(x, y)))
        .collect();
    ChirpEnsemble::new(ctx, indices)
}
