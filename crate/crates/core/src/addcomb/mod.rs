//! Set statistics over `Z/nZ`: sumsets, difference sets, additive energy,
//! Fourier bias, and the cube construction with its carry-free embedding.

mod tau;

use std::collections::HashMap;

use num_complex::Complex64;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::number_theory::{add_mod, sub_mod, unit_root};

pub use tau::{solve_t, solve_t_asymptotic, solve_t_lower_bound, solve_tau, ASYMPTOTIC_LOG2_THRESHOLD};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AddCombError {
    #[error("sets live in different groups (Z/{0}Z vs Z/{1}Z)")]
    ModulusMismatch(u64, u64),
    #[error("modulus must be positive")]
    ZeroModulus,
    #[error("element {element} is not reduced modulo {modulus}")]
    OutOfRange { element: u64, modulus: u64 },
    #[error("operation needs a nonempty set")]
    EmptySet,
    #[error("cube side must be at least 2 and dimension at least 1")]
    InvalidCube,
    #[error("(2M)^r does not fit below 2^63")]
    Overflow,
    #[error("asymptotic branch needs log2(M) >= {threshold}, got {got}")]
    BranchMisuse { threshold: f64, got: f64 },
}

/// Finite subset of `Z/nZ`, kept sorted and duplicate free.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawResidueSet")]
pub struct ResidueSet {
    modulus: u64,
    elements: Vec<u64>,
}

#[derive(Deserialize)]
struct RawResidueSet {
    modulus: u64,
    elements: Vec<u64>,
}

impl TryFrom<RawResidueSet> for ResidueSet {
    type Error = AddCombError;

    fn try_from(raw: RawResidueSet) -> Result<Self, Self::Error> {
        ResidueSet::new(raw.modulus, raw.elements)
    }
}

impl ResidueSet {
    /// Builds a set from already reduced elements; duplicates are merged.
    pub fn new(modulus: u64, elements: impl IntoIterator<Item = u64>) -> Result<Self, AddCombError> {
        if modulus == 0 {
            return Err(AddCombError::ZeroModulus);
        }
        let mut elements: Vec<u64> = elements.into_iter().collect();
        if let Some(&element) = elements.iter().find(|&&e| e >= modulus) {
            return Err(AddCombError::OutOfRange { element, modulus });
        }
        elements.sort_unstable();
        elements.dedup();
        Ok(Self { modulus, elements })
    }

    /// Builds a set reducing every element modulo `modulus`.
    pub fn reduced(modulus: u64, elements: impl IntoIterator<Item = u64>) -> Result<Self, AddCombError> {
        if modulus == 0 {
            return Err(AddCombError::ZeroModulus);
        }
        Self::new(modulus, elements.into_iter().map(|e| e % modulus))
    }

    pub fn full(modulus: u64) -> Result<Self, AddCombError> {
        Self::new(modulus, 0..modulus)
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn elements(&self) -> &[u64] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, x: u64) -> bool {
        self.elements.binary_search(&x).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.elements.iter().copied()
    }

    pub fn translate(&self, shift: u64) -> Self {
        let n = self.modulus;
        Self::new(n, self.iter().map(|a| add_mod(a, shift, n))).expect("reduced by construction")
    }

    /// `{c - a : a ∈ A}`.
    pub fn reflect(&self, c: u64) -> Self {
        let n = self.modulus;
        Self::new(n, self.iter().map(|a| sub_mod(c, a, n))).expect("reduced by construction")
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.modulus == other.modulus && self.iter().all(|a| other.contains(a))
    }

    fn check_same_group(&self, other: &Self) -> Result<(), AddCombError> {
        if self.modulus != other.modulus {
            return Err(AddCombError::ModulusMismatch(self.modulus, other.modulus));
        }
        Ok(())
    }

    /// Counts `λ_x = #{(a, a') ∈ A² : a - a' = x}` for every `x` that occurs.
    pub fn difference_counts(&self) -> HashMap<u64, u64> {
        let n = self.modulus;
        let mut counts = HashMap::with_capacity(self.len() * self.len());
        for &a in &self.elements {
            for &b in &self.elements {
                *counts.entry(sub_mod(a, b, n)).or_insert(0) += 1;
            }
        }
        counts
    }

    /// Normalized Fourier coefficient `(1/n) Σ_{a∈A} e_n(-θ a)`.
    pub fn fourier_coefficient(&self, theta: u64) -> Complex64 {
        let n = self.modulus;
        let neg = sub_mod(0, theta % n, n);
        let s: Complex64 = self
            .iter()
            .map(|a| unit_root(n, crate::number_theory::mul_mod(neg, a, n)))
            .sum();
        s / n as f64
    }
}

pub fn sumset(a: &ResidueSet, b: &ResidueSet) -> Result<ResidueSet, AddCombError> {
    a.check_same_group(b)?;
    let n = a.modulus;
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &x in &a.elements {
        out.extend(b.elements.iter().map(|&y| add_mod(x, y, n)));
    }
    ResidueSet::new(n, out)
}

pub fn difference_set(a: &ResidueSet, b: &ResidueSet) -> Result<ResidueSet, AddCombError> {
    a.check_same_group(b)?;
    let n = a.modulus;
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &x in &a.elements {
        out.extend(b.elements.iter().map(|&y| sub_mod(x, y, n)));
    }
    ResidueSet::new(n, out)
}

/// `E(A, B) = #{(a₁, a₂, b₁, b₂) : a₁ + b₁ = a₂ + b₂}`, computed as
/// `Σ_x λ_x^A λ_x^B` over the difference counts of the two sets.
pub fn additive_energy(a: &ResidueSet, b: &ResidueSet) -> Result<u128, AddCombError> {
    a.check_same_group(b)?;
    let la = a.difference_counts();
    let lb = if a == b { la.clone() } else { b.difference_counts() };
    let (small, large) = if la.len() <= lb.len() { (&la, &lb) } else { (&lb, &la) };
    Ok(small
        .iter()
        .filter_map(|(x, &c)| large.get(x).map(|&d| c as u128 * d as u128))
        .sum())
}

/// Energy together with the trivial bounds
/// `|A|²|B|²/n ≤ E(A,B) ≤ min(|A|,|B|)·|A|·|B|`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EnergyReport {
    pub energy: u128,
    pub lower_bound: Ratio<u128>,
    pub upper_bound: u128,
}

impl EnergyReport {
    pub fn within_bounds(&self) -> bool {
        Ratio::from_integer(self.energy) >= self.lower_bound && self.energy <= self.upper_bound
    }
}

pub fn energy_report(a: &ResidueSet, b: &ResidueSet) -> Result<EnergyReport, AddCombError> {
    let energy = additive_energy(a, b)?;
    let (na, nb) = (a.len() as u128, b.len() as u128);
    Ok(EnergyReport {
        energy,
        lower_bound: Ratio::new(na * na * nb * nb, a.modulus as u128),
        upper_bound: na.min(nb) * na * nb,
    })
}

/// `‖A‖_u = max_{θ≠0} |1̂_A(θ)|` by direct DFT.
pub fn fourier_bias(a: &ResidueSet) -> Result<f64, AddCombError> {
    if a.is_empty() {
        return Err(AddCombError::EmptySet);
    }
    Ok((1..a.modulus)
        .map(|theta| a.fourier_coefficient(theta).norm())
        .fold(0.0, f64::max))
}

/// The three terms of `‖A‖_u⁴ ≤ (E(A,A) - |A|⁴/n)/n³ ≤ (|A|/n)‖A‖_u²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiasSandwich {
    pub bias: f64,
    pub lower: f64,
    pub middle: f64,
    pub upper: f64,
}

impl BiasSandwich {
    /// Both inequalities, up to a relative slack.
    pub fn holds(&self, rel: f64) -> bool {
        let slack = rel * self.middle.abs().max(self.upper).max(f64::MIN_POSITIVE);
        self.lower <= self.middle + slack && self.middle <= self.upper + slack
    }
}

pub fn bias_sandwich(a: &ResidueSet) -> Result<BiasSandwich, AddCombError> {
    let bias = fourier_bias(a)?;
    let n = a.modulus as f64;
    let size = a.len() as f64;
    let energy = additive_energy(a, a)? as f64;
    Ok(BiasSandwich {
        bias,
        lower: bias.powi(4),
        middle: (energy - size.powi(4) / n) / n.powi(3),
        upper: size / n * bias * bias,
    })
}

/// The cube `{0, …, M-1}^r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CubeSpec {
    pub side: u64,
    pub dim: u32,
}

impl CubeSpec {
    pub fn new(side: u64, dim: u32) -> Result<Self, AddCombError> {
        if side < 2 || dim < 1 {
            return Err(AddCombError::InvalidCube);
        }
        Ok(Self { side, dim })
    }

    /// The digit base `2M` of the embedding.
    pub fn base(&self) -> u64 {
        2 * self.side
    }

    /// `(2M)^r`, an exclusive bound on every embedded sum `b + b'`.
    pub fn span(&self) -> Result<u64, AddCombError> {
        self.base()
            .checked_pow(self.dim)
            .filter(|&s| s < 1 << 63)
            .ok_or(AddCombError::Overflow)
    }

    pub fn size(&self) -> Result<u64, AddCombError> {
        self.side.checked_pow(self.dim).ok_or(AddCombError::Overflow)
    }

    /// Encodes a point of the cube (or of `{0, …, 2M-2}^r` for sums) in base `2M`.
    pub fn encode(&self, coords: &[u64]) -> u64 {
        coords.iter().rev().fold(0, |acc, &c| acc * self.base() + c)
    }

    /// Inverse of [`encode`](Self::encode) for any value below `(2M)^r`.
    pub fn decode(&self, mut value: u64) -> Vec<u64> {
        (0..self.dim)
            .map(|_| {
                let d = value % self.base();
                value /= self.base();
                d
            })
            .collect()
    }

    /// `b₀ = Σ_j (M-1)(2M)^{j-1}`, the image of the far corner of the cube.
    pub fn far_corner(&self) -> u64 {
        self.encode(&vec![self.side - 1; self.dim as usize])
    }
}

/// The integers `{Σ_j x_j (2M)^{j-1} : 0 ≤ x_j < M}` in ascending order.
pub fn cube_embed(spec: CubeSpec) -> Result<Vec<u64>, AddCombError> {
    spec.span()?;
    let mut out = vec![0u64];
    let mut place = 1u64;
    for _ in 0..spec.dim {
        out = (0..spec.side)
            .flat_map(|digit| out.iter().map(move |&v| v + digit * place))
            .collect();
        place *= spec.base();
    }
    out.sort_unstable();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(n: u64, xs: &[u64]) -> ResidueSet {
        ResidueSet::new(n, xs.iter().copied()).unwrap()
    }

    /// Quadruple-loop definition of the additive energy.
    fn energy_brute(a: &ResidueSet, b: &ResidueSet) -> u128 {
        let n = a.modulus();
        let mut count = 0;
        for &a1 in a.elements() {
            for &a2 in a.elements() {
                for &b1 in b.elements() {
                    for &b2 in b.elements() {
                        if add_mod(a1, b1, n) == add_mod(a2, b2, n) {
                            count += 1;
                        }
                    }
                }
            }
        }
        count
    }

    #[test]
    fn sumset_examples() {
        assert_eq!(sumset(&set(7, &[0]), &set(7, &[0, 1, 2])).unwrap(), set(7, &[0, 1, 2]));
        let ap = set(100, &[0, 1, 2]);
        assert_eq!(sumset(&ap, &ap).unwrap(), set(100, &[0, 1, 2, 3, 4]));
        let sub = set(8, &[0, 2, 4, 6]);
        assert_eq!(sumset(&sub, &sub).unwrap(), sub);
    }

    #[test]
    fn difference_set_examples() {
        assert_eq!(difference_set(&set(7, &[5]), &set(7, &[5])).unwrap(), set(7, &[0]));
        let ap = set(100, &[0, 1, 2]);
        assert_eq!(difference_set(&ap, &ap).unwrap(), set(100, &[0, 1, 2, 98, 99]));
        let sub = set(12, &[0, 4, 8]);
        assert_eq!(difference_set(&sub, &sub).unwrap(), sub);
    }

    #[test]
    fn modulus_mismatch_is_rejected() {
        let err = sumset(&set(7, &[1]), &set(8, &[1])).unwrap_err();
        assert_eq!(err, AddCombError::ModulusMismatch(7, 8));
        assert!(difference_set(&set(7, &[1]), &set(8, &[1])).is_err());
        assert!(additive_energy(&set(7, &[1]), &set(8, &[1])).is_err());
    }

    #[test]
    fn out_of_range_elements_are_rejected() {
        assert!(matches!(
            ResidueSet::new(5, [1, 5]),
            Err(AddCombError::OutOfRange { element: 5, modulus: 5 })
        ));
        assert_eq!(ResidueSet::reduced(5, [1, 6]).unwrap(), set(5, &[1]));
    }

    #[test]
    fn energy_examples() {
        let single = set(9, &[4]);
        assert_eq!(additive_energy(&single, &single).unwrap(), 1);
        let whole = ResidueSet::full(5).unwrap();
        assert_eq!(additive_energy(&whole, &whole).unwrap(), 125);
        let ap = set(100, &[0, 1, 2]);
        assert_eq!(energy_brute(&ap, &ap), 19);
        assert_eq!(additive_energy(&ap, &ap).unwrap(), 19);
    }

    #[test]
    fn energy_convolution_matches_quadruple_loop() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xB0D1);
        for _ in 0..300 {
            let n = rng.random_range(1..40u64);
            let ka = rng.random_range(0..=8usize.min(n as usize));
            let kb = rng.random_range(0..=8usize.min(n as usize));
            let a = ResidueSet::new(n, (0..ka).map(|_| rng.random_range(0..n))).unwrap();
            let b = ResidueSet::new(n, (0..kb).map(|_| rng.random_range(0..n))).unwrap();
            assert_eq!(additive_energy(&a, &b).unwrap(), energy_brute(&a, &b), "{a:?} {b:?}");
        }
    }

    #[test]
    fn energy_report_bounds_hold_for_distinct_sets() {
        let a = set(31, &[0, 3, 7, 8, 20]);
        let b = set(31, &[1, 2, 30]);
        let r = energy_report(&a, &b).unwrap();
        assert!(r.within_bounds(), "{r:?}");
        assert_eq!(r.upper_bound, 3 * 5 * 3);
    }

    #[test]
    fn fourier_bias_examples() {
        assert!(fourier_bias(&ResidueSet::full(16).unwrap()).unwrap() < 1e-12);
        let n = 10;
        assert!((fourier_bias(&set(n, &[0])).unwrap() - 0.1).abs() < 1e-12);
        // 1̂_A(θ) for A = {0,2,4,6} ⊂ Z/8Z is 1/2 at θ = 4 and vanishes elsewhere.
        let sub = set(8, &[0, 2, 4, 6]);
        assert!((fourier_bias(&sub).unwrap() - 0.5).abs() < 1e-12);
        assert!(sub.fourier_coefficient(1).norm() < 1e-12);
        assert_eq!(fourier_bias(&set(8, &[])), Err(AddCombError::EmptySet));
    }

    #[test]
    fn cube_embed_examples() {
        assert_eq!(cube_embed(CubeSpec::new(2, 1).unwrap()).unwrap(), vec![0, 1]);
        assert_eq!(cube_embed(CubeSpec::new(2, 2).unwrap()).unwrap(), vec![0, 1, 4, 5]);
        assert_eq!(
            cube_embed(CubeSpec::new(3, 2).unwrap()).unwrap(),
            vec![0, 1, 2, 6, 7, 8, 12, 13, 14]
        );
        assert_eq!(cube_embed(CubeSpec::new(2, 62).unwrap()), Err(AddCombError::Overflow));
        assert_eq!(CubeSpec::new(1, 3), Err(AddCombError::InvalidCube));
    }

    #[test]
    fn encode_decode_and_corner() {
        let spec = CubeSpec::new(3, 3).unwrap();
        assert_eq!(spec.far_corner(), 2 + 2 * 6 + 2 * 36);
        for v in cube_embed(spec).unwrap() {
            assert_eq!(spec.encode(&spec.decode(v)), v);
        }
    }
}
