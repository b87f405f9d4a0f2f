//! Restricted isometry constants and related quantities for small
//! ensembles: coherence, exhaustive and sampled RICs, flat and weak flat
//! RIP constants, and the cancellation sums `S` and `T`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::addcomb::{self, AddCombError, ResidueSet};
use crate::chirp::{self, ChirpEnsemble};
use crate::number_theory::{NumberTheoryError, PrimeContext};

pub const MAX_RIC_K: usize = 8;
pub const MAX_SUBSETS: u128 = 1_000_000;
pub const MAX_FLAT_ASSIGNMENTS: u128 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RipError {
    #[error("need at least two columns, got {0}")]
    TooFewColumns(usize),
    #[error("Welch bound needs N > M >= 1, got M = {rows}, N = {cols}")]
    InvalidShape { rows: usize, cols: usize },
    #[error("enumeration too large: {0}")]
    CombinatorialBlowup(String),
    #[error("K must be between 1 and the number of columns, got {0}")]
    InvalidK(usize),
    #[error("A1 and A2 share the element {0}")]
    OverlappingA(u64),
    #[error("a1 = {0} lies in A2")]
    A1InA2(u64),
    #[error("no nonempty b-set given for a = {0}")]
    MissingOmega(u64),
    #[error("theta must be nonzero")]
    ZeroTheta,
    #[error("ragged matrix: row {0} has the wrong length")]
    RaggedMatrix(usize),
    #[error(transparent)]
    NumberTheory(#[from] NumberTheoryError),
    #[error(transparent)]
    AddComb(#[from] AddCombError),
}

/// Anything with an `N × N` Gram matrix.
pub trait GramSource: Sync {
    fn num_columns(&self) -> usize;
    fn entry(&self, i: usize, j: usize) -> Complex64;
}

impl GramSource for ChirpEnsemble {
    fn num_columns(&self) -> usize {
        ChirpEnsemble::num_columns(self)
    }

    fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.gram(i, j)
    }
}

/// Gram matrix of an explicit set of columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseGram {
    n: usize,
    entries: Vec<Complex64>,
}

impl DenseGram {
    pub fn from_columns(columns: &[Vec<Complex64>]) -> Self {
        let n = columns.len();
        let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                entries[i * n + j] = chirp::inner(&columns[i], &columns[j]);
            }
        }
        Self { n, entries }
    }

    /// Columns of a row-major matrix.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self, RipError> {
        let width = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != width) {
            return Err(RipError::RaggedMatrix(bad));
        }
        let columns: Vec<Vec<Complex64>> = (0..width).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
        Ok(Self::from_columns(&columns))
    }

    pub fn from_source<G: GramSource + ?Sized>(g: &G) -> Self {
        let n = g.num_columns();
        let entries = (0..n * n).map(|k| g.entry(k / n, k % n)).collect();
        Self { n, entries }
    }
}

impl GramSource for DenseGram {
    fn num_columns(&self) -> usize {
        self.n
    }

    fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.n + j]
    }
}

/// Largest off-diagonal Gram modulus and the pair attaining it.
pub fn coherence<G: GramSource + ?Sized>(g: &G) -> Result<(f64, (usize, usize)), RipError> {
    let n = g.num_columns();
    if n < 2 {
        return Err(RipError::TooFewColumns(n));
    }
    let best = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| (g.entry(i, j).norm(), (i, j)))
                .fold((f64::NEG_INFINITY, (i, i)), |a, b| if b.0 > a.0 { b } else { a })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((f64::NEG_INFINITY, (0, 0)), |a, b| if b.0 > a.0 { b } else { a });
    Ok(best)
}

/// `√((N-M)/(M(N-1)))`.
pub fn welch_bound(rows: usize, cols: usize) -> Result<f64, RipError> {
    if rows < 1 || cols <= rows {
        return Err(RipError::InvalidShape { rows, cols });
    }
    let (m, n) = (rows as f64, cols as f64);
    Ok(((n - m) / (m * (n - 1.0))).sqrt())
}

/// `(K-1)μ`.
pub fn gershgorin_bound(mu: f64, k: usize) -> f64 {
    (k.saturating_sub(1)) as f64 * mu
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RipMode {
    Exhaustive,
    Sampled { seed: u64, count: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RipReport {
    pub k: usize,
    pub delta: f64,
    pub witness: Vec<usize>,
    pub mode: RipMode,
    /// Sampled reports only bound `δ_K` from below.
    pub lower_bound_only: bool,
    /// Set when no subset was examined.
    pub degenerate: bool,
    pub subsets_examined: u64,
}

/// `max |λ - 1|` over the eigenvalues of the Gram submatrix on `cols`.
pub fn subset_deviation<G: GramSource + ?Sized>(g: &G, cols: &[usize]) -> f64 {
    let k = cols.len();
    let m = DMatrix::from_fn(k, k, |r, c| g.entry(cols[r], cols[c]));
    m.symmetric_eigenvalues()
        .iter()
        .map(|l| (l - 1.0).abs())
        .fold(0.0, f64::max)
}

fn better(a: &(f64, Vec<usize>), b: &(f64, Vec<usize>)) -> bool {
    b.0 > a.0 || (b.0 == a.0 && b.1 < a.1)
}

fn check_k(n: usize, k: usize) -> Result<(), RipError> {
    if k == 0 || k > n {
        return Err(RipError::InvalidK(k));
    }
    Ok(())
}

/// Advances `c` to the next `k`-combination of `0..n` in lexicographic order.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// `δ_K` by enumerating every `K`-subset.
pub fn ric_exhaustive<G: GramSource + ?Sized>(g: &G, k: usize) -> Result<RipReport, RipError> {
    let n = g.num_columns();
    check_k(n, k)?;
    if k > MAX_RIC_K {
        return Err(RipError::CombinatorialBlowup(format!("K = {k} exceeds {MAX_RIC_K}")));
    }
    let total = binomial(n, k);
    if total > MAX_SUBSETS {
        return Err(RipError::CombinatorialBlowup(format!("C({n}, {k}) = {total} subsets")));
    }
    let (delta, witness) = (0..=n - k)
        .into_par_iter()
        .map(|first| {
            let mut best = (f64::NEG_INFINITY, Vec::new());
            let mut rest: Vec<usize> = (first + 1..first + k).collect();
            loop {
                let mut cols = Vec::with_capacity(k);
                cols.push(first);
                cols.extend_from_slice(&rest);
                let cand = (subset_deviation(g, &cols), cols);
                if better(&best, &cand) {
                    best = cand;
                }
                if rest.is_empty() {
                    break;
                }
                // combinations of (first+1..n) of size k-1
                let offset = first + 1;
                let mut shifted: Vec<usize> = rest.iter().map(|&x| x - offset).collect();
                if !next_combination(&mut shifted, n - offset) {
                    break;
                }
                rest = shifted.iter().map(|&x| x + offset).collect();
            }
            best
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((f64::NEG_INFINITY, Vec::new()), |a, b| if better(&a, &b) { b } else { a });
    Ok(RipReport {
        k,
        delta,
        witness,
        mode: RipMode::Exhaustive,
        lower_bound_only: false,
        degenerate: false,
        subsets_examined: total as u64,
    })
}

/// Max deviation over `count` seeded random `K`-subsets; a lower bound on `δ_K`.
pub fn ric_sampled<G: GramSource + ?Sized>(g: &G, k: usize, count: u64, seed: u64) -> Result<RipReport, RipError> {
    let n = g.num_columns();
    check_k(n, k)?;
    if k > MAX_RIC_K {
        return Err(RipError::CombinatorialBlowup(format!("K = {k} exceeds {MAX_RIC_K}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let subsets: Vec<Vec<usize>> = (0..count)
        .map(|_| {
            let mut s = rand::seq::index::sample(&mut rng, n, k).into_vec();
            s.sort_unstable();
            s
        })
        .collect();
    let (delta, witness) = subsets
        .into_par_iter()
        .map(|cols| (subset_deviation(g, &cols), cols))
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0.0, Vec::new()), |a, b| if better(&a, &b) { b } else { a });
    Ok(RipReport {
        k,
        delta,
        witness,
        mode: RipMode::Sampled { seed, count },
        lower_bound_only: true,
        degenerate: count == 0,
        subsets_examined: count,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FlatWitness {
    /// Bitmask of `I`.
    pub i: u64,
    /// Bitmask of `J`.
    pub j: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatRipReport {
    pub k: usize,
    /// `max |⟨Σ_I φ, Σ_J φ⟩| / √(|I||J|)`
    pub theta: f64,
    pub theta_witness: FlatWitness,
    /// `max |⟨Σ_I φ, Σ_J φ⟩| / K`
    pub theta_prime: f64,
    pub theta_prime_witness: FlatWitness,
    pub pairs_examined: u64,
}

#[derive(Clone, Copy)]
struct FlatBest {
    theta: (f64, FlatWitness),
    theta_prime: (f64, FlatWitness),
    pairs: u64,
}

impl FlatBest {
    fn empty() -> Self {
        let w = FlatWitness { i: 0, j: 0 };
        Self {
            theta: (0.0, w),
            theta_prime: (0.0, w),
            pairs: 0,
        }
    }

    fn pick(a: (f64, FlatWitness), b: (f64, FlatWitness)) -> (f64, FlatWitness) {
        if b.0 > a.0 || (b.0 == a.0 && (b.1.i, b.1.j) < (a.1.i, a.1.j)) {
            b
        } else {
            a
        }
    }

    fn merge(self, o: Self) -> Self {
        Self {
            theta: Self::pick(self.theta, o.theta),
            theta_prime: Self::pick(self.theta_prime, o.theta_prime),
            pairs: self.pairs + o.pairs,
        }
    }
}

struct FlatSearch<'a, G: ?Sized> {
    g: &'a G,
    n: usize,
    k: usize,
}

impl<G: GramSource + ?Sized> FlatSearch<'_, G> {
    /// Assigns columns `col..n` to `I`, `J` or neither, carrying the running
    /// inner product.
    fn dfs(&self, col: usize, i_set: &mut Vec<usize>, j_set: &mut Vec<usize>, value: Complex64, best: &mut FlatBest) {
        if col == self.n {
            if !i_set.is_empty() && !j_set.is_empty() {
                let w = FlatWitness {
                    i: i_set.iter().fold(0, |m, &c| m | 1 << c),
                    j: j_set.iter().fold(0, |m, &c| m | 1 << c),
                };
                let v = value.norm();
                best.theta = FlatBest::pick(best.theta, (v / ((i_set.len() * j_set.len()) as f64).sqrt(), w));
                best.theta_prime = FlatBest::pick(best.theta_prime, (v / self.k as f64, w));
                best.pairs += 1;
            }
            return;
        }
        self.dfs(col + 1, i_set, j_set, value, best);
        if i_set.len() < self.k {
            let add: Complex64 = j_set.iter().map(|&j| self.g.entry(col, j)).sum();
            i_set.push(col);
            self.dfs(col + 1, i_set, j_set, value + add, best);
            i_set.pop();
        }
        if j_set.len() < self.k {
            let add: Complex64 = i_set.iter().map(|&i| self.g.entry(i, col)).sum();
            j_set.push(col);
            self.dfs(col + 1, i_set, j_set, value + add, best);
            j_set.pop();
        }
    }
}

/// Flat and weak flat RIP constants over all disjoint nonempty `I, J` with
/// `|I|, |J| ≤ K`.
pub fn flat_rip_exhaustive<G: GramSource + ?Sized>(g: &G, k: usize) -> Result<FlatRipReport, RipError> {
    let n = g.num_columns();
    check_k(n, k)?;
    let total = 3u128.checked_pow(n as u32).unwrap_or(u128::MAX);
    if total > MAX_FLAT_ASSIGNMENTS || n > 64 {
        return Err(RipError::CombinatorialBlowup(format!("3^{n} assignments")));
    }
    let search = FlatSearch { g, n, k };
    let depth = n.min(4);
    let prefixes: Vec<Vec<u8>> = (0..3usize.pow(depth as u32))
        .map(|mut code| {
            (0..depth)
                .map(|_| {
                    let d = (code % 3) as u8;
                    code /= 3;
                    d
                })
                .collect()
        })
        .collect();
    let best = prefixes
        .into_par_iter()
        .map(|prefix| {
            let mut best = FlatBest::empty();
            let (mut i_set, mut j_set) = (Vec::new(), Vec::new());
            let mut value = Complex64::new(0.0, 0.0);
            for (col, &d) in prefix.iter().enumerate() {
                match d {
                    1 => {
                        value += j_set.iter().map(|&j| g.entry(col, j)).sum::<Complex64>();
                        i_set.push(col);
                    }
                    2 => {
                        value += i_set.iter().map(|&i| g.entry(i, col)).sum::<Complex64>();
                        j_set.push(col);
                    }
                    _ => {}
                }
            }
            if i_set.len() <= k && j_set.len() <= k {
                search.dfs(depth, &mut i_set, &mut j_set, value, &mut best);
            }
            best
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(FlatBest::empty(), FlatBest::merge);
    Ok(FlatRipReport {
        k,
        theta: best.theta.0,
        theta_witness: best.theta.1,
        theta_prime: best.theta_prime.0,
        theta_prime_witness: best.theta_prime.1,
        pairs_examined: best.pairs,
    })
}

pub fn mask_to_columns(mask: u64) -> Vec<usize> {
    (0..64).filter(|&c| mask >> c & 1 == 1).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingCheck {
    pub k: usize,
    pub s: usize,
    pub delta_k: f64,
    pub delta_sk: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Checks `δ_{sK} ≤ 2s·δ_K`.
pub fn scaling_bound_check<G: GramSource + ?Sized>(g: &G, k: usize, s: usize) -> Result<ScalingCheck, RipError> {
    if s == 0 {
        return Err(RipError::InvalidK(0));
    }
    let delta_k = ric_exhaustive(g, k)?.delta;
    let delta_sk = ric_exhaustive(g, s * k)?.delta;
    let bound = 2.0 * s as f64 * delta_k;
    Ok(ScalingCheck {
        k,
        s,
        delta_k,
        delta_sk,
        bound,
        holds: delta_sk <= bound + 1e-9,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaACheck {
    pub k: usize,
    pub delta: f64,
    pub theta: f64,
    /// Natural logarithm of `K`.
    pub log_k: f64,
    pub bound_150: f64,
    pub holds_150: bool,
    pub bound_75: f64,
    pub holds_75: bool,
}

/// Compares `δ_K` with `150·θ·ln K` and with `75·θ·ln K`.
pub fn lemma_a_check<G: GramSource + ?Sized>(g: &G, k: usize) -> Result<LemmaACheck, RipError> {
    if k < 2 {
        return Err(RipError::InvalidK(k));
    }
    let delta = ric_exhaustive(g, k)?.delta;
    let theta = flat_rip_exhaustive(g, k)?.theta;
    Ok(lemma_a_from(k, delta, theta))
}

pub fn lemma_a_from(k: usize, delta: f64, theta: f64) -> LemmaACheck {
    let log_k = (k as f64).ln();
    let bound_150 = 150.0 * theta * log_k;
    let bound_75 = 75.0 * theta * log_k;
    LemmaACheck {
        k,
        delta,
        theta,
        log_k,
        bound_150,
        holds_150: delta <= bound_150 + 1e-9,
        bound_75,
        holds_75: delta <= bound_75 + 1e-9,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaBCheck {
    pub k: usize,
    pub mu: f64,
    /// Whether `μK ≤ 1`.
    pub applicable: bool,
    pub theta: f64,
    pub theta_prime: f64,
    pub holds: bool,
}

/// When `μK ≤ 1`, checks `θ ≤ √θ′`.
pub fn lemma_b_check<G: GramSource + ?Sized>(g: &G, k: usize) -> Result<LemmaBCheck, RipError> {
    let (mu, _) = coherence(g)?;
    let flat = flat_rip_exhaustive(g, k)?;
    Ok(lemma_b_from(k, mu, &flat))
}

pub fn lemma_b_from(k: usize, mu: f64, flat: &FlatRipReport) -> LemmaBCheck {
    let applicable = mu * k as f64 <= 1.0;
    LemmaBCheck {
        k,
        mu,
        applicable,
        theta: flat.theta,
        theta_prime: flat.theta_prime,
        holds: !applicable || flat.theta <= flat.theta_prime.sqrt() + 1e-9,
    }
}

/// Map from a chirp rate `a` to its set of `b`.
pub type Omega = BTreeMap<u64, Vec<u64>>;

fn omega_of(omega: &Omega, a: u64) -> Result<&[u64], RipError> {
    omega
        .get(&a)
        .filter(|v| !v.is_empty())
        .map(Vec::as_slice)
        .ok_or(RipError::MissingOmega(a))
}

fn check_disjoint(a1: &ResidueSet, a2: &ResidueSet) -> Result<(), RipError> {
    match a1.iter().find(|&x| a2.contains(x)) {
        Some(x) => Err(RipError::OverlappingA(x)),
        None => Ok(()),
    }
}

/// `Σ ((a₁-a₂)/p) e_p(c·(b₁-b₂)²/(a₁-a₂))` over `a_i ∈ A_i`, `b_i ∈ Ω_i(a_i)`.
fn signed_quadruple_sum(
    ctx: &PrimeContext,
    a1: &ResidueSet,
    a2: &ResidueSet,
    omega1: &Omega,
    omega2: &Omega,
    coefficient: i128,
) -> Result<Complex64, RipError> {
    check_disjoint(a1, a2)?;
    let c = ctx.residue_i128(coefficient);
    let mut total = Complex64::new(0.0, 0.0);
    for x in a1.iter() {
        let bs1 = omega_of(omega1, x)?;
        for y in a2.iter() {
            let bs2 = omega_of(omega2, y)?;
            let da = ctx.sub(ctx.residue(x), ctx.residue(y));
            let scale = ctx.div(c, da)?;
            let chi = ctx.legendre(da) as f64;
            let inner: Complex64 = bs1
                .iter()
                .flat_map(|&b1| bs2.iter().map(move |&b2| (b1, b2)))
                .map(|(b1, b2)| {
                    let db = ctx.sub(ctx.residue(b1), ctx.residue(b2));
                    ctx.e_p(ctx.mul(scale, ctx.mul(db, db)))
                })
                .sum();
            total += inner * chi;
        }
    }
    Ok(total)
}

/// `S(A₁,A₂) = Σ ((a₁-a₂)/p) e_p((b₁-b₂)²/(2(a₁-a₂)))`.
pub fn sum_s(ctx: &PrimeContext, a1: &ResidueSet, a2: &ResidueSet, omega1: &Omega, omega2: &Omega) -> Result<Complex64, RipError> {
    let half = ctx.inverse(ctx.residue(2))?;
    signed_quadruple_sum(ctx, a1, a2, omega1, omega2, half.value() as i128)
}

/// `S′(A₁,A₂) = Σ ((a₁-a₂)/p) e_p(-(b₁-b₂)²/(4(a₁-a₂)))`, so that
/// `⟨Σ_{Ω₁} u, Σ_{Ω₂} u⟩ = (σ_p/√p)·S′`.
pub fn sum_s_gram(ctx: &PrimeContext, a1: &ResidueSet, a2: &ResidueSet, omega1: &Omega, omega2: &Omega) -> Result<Complex64, RipError> {
    let quarter = ctx.neg(ctx.inverse(ctx.residue(4))?);
    signed_quadruple_sum(ctx, a1, a2, omega1, omega2, quarter.value() as i128)
}

/// `⟨Σ_{(a,b)∈Ω₁} u_{a,b}, Σ_{(a,b)∈Ω₂} u_{a,b}⟩` from closed-form Gram entries.
pub fn omega_inner_product(ctx: &PrimeContext, omega1: &Omega, omega2: &Omega) -> Complex64 {
    let mut total = Complex64::new(0.0, 0.0);
    for (&x, bs1) in omega1 {
        for (&y, bs2) in omega2 {
            for &b1 in bs1 {
                for &b2 in bs2 {
                    total += chirp::gram_entry(ctx, chirp::ChirpIndex::new(x, b1), chirp::ChirpIndex::new(y, b2));
                }
            }
        }
    }
    total
}

/// `T_{a₁}(A₂,B) = Σ ((a₁-a₂)/p) e_p((b₁-b₂)²/(4(a₁-a₂)))` over
/// `b₁ ∈ B`, `a₂ ∈ A₂`, `b₂ ∈ Ω₂(a₂)`.
pub fn sum_t(ctx: &PrimeContext, a1: u64, a2: &ResidueSet, b: &ResidueSet, omega2: &Omega) -> Result<Complex64, RipError> {
    let a1 = ctx.residue(a1);
    if a2.contains(a1.value()) {
        return Err(RipError::A1InA2(a1.value()));
    }
    let quarter = ctx.inverse(ctx.residue(4))?;
    let mut total = Complex64::new(0.0, 0.0);
    for y in a2.iter() {
        let bs2 = omega_of(omega2, y)?;
        let da = ctx.sub(a1, ctx.residue(y));
        let scale = ctx.div(quarter, da)?;
        let chi = ctx.legendre(da) as f64;
        for b1 in b.iter() {
            for &b2 in bs2 {
                let db = ctx.sub(ctx.residue(b1), ctx.residue(b2));
                total += ctx.e_p(ctx.mul(scale, ctx.mul(db, db))) * chi;
            }
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma9Check {
    pub theta: u64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `|Σ_{b₁∈B₁, b₂∈B₂} e_p(θ(b₁-b₂)²)|` against
/// `|B₁|^{1/2} E(B₁,B₁)^{1/8} |B₂|^{1/2} E(B₂,B₂)^{1/8} p^{1/8}`.
pub fn lemma9_check(ctx: &PrimeContext, theta: u64, b1: &ResidueSet, b2: &ResidueSet) -> Result<Lemma9Check, RipError> {
    let th = ctx.residue(theta);
    if th.is_zero() {
        return Err(RipError::ZeroTheta);
    }
    let lhs: Complex64 = b1
        .iter()
        .flat_map(|x| b2.iter().map(move |y| (x, y)))
        .map(|(x, y)| {
            let d = ctx.sub(ctx.residue(x), ctx.residue(y));
            ctx.e_p(ctx.mul(th, ctx.mul(d, d)))
        })
        .sum();
    let e1 = addcomb::additive_energy(b1, b1)? as f64;
    let e2 = addcomb::additive_energy(b2, b2)? as f64;
    let rhs = (b1.len() as f64).sqrt() * e1.powf(0.125) * (b2.len() as f64).sqrt() * e2.powf(0.125) * (ctx.p() as f64).powf(0.125);
    let lhs = lhs.norm();
    Ok(Lemma9Check {
        theta: th.value(),
        lhs,
        rhs,
        holds: lhs <= rhs * (1.0 + 1e-12) + 1e-9,
    })
}
