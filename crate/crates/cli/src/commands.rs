use std::fs;
use std::path::Path;

use chirp_rip::addcomb::{self, ResidueSet};
use chirp_rip::chirp::{self, ASetParams, ChirpEnsemble, ChirpError, ChirpIndex};
use chirp_rip::exact::{parse_rational, to_scientific};
use chirp_rip::io::{self, EnsembleSpec};
use chirp_rip::number_theory::{next_prime, PrimeContext};
use chirp_rip::optimizer::{self, LpReport, LpStatus, MachineParams, OptimizerError};
use chirp_rip::rip::{self, DenseGram, GramSource, Omega, RipError};
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::args::{Command, Mode, Source};

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments; exit code 2.
    Usage(String),
    /// Anything else that stops the run; exit code 1.
    Failed(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Failed(m) => write!(f, "error: {m}"),
        }
    }
}

fn failed(e: impl std::fmt::Display) -> CliError {
    CliError::Failed(e.to_string())
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

impl From<RipError> for CliError {
    fn from(e: RipError) -> Self {
        match e {
            RipError::CombinatorialBlowup(_) | RipError::InvalidK(_) | RipError::TooFewColumns(_) => usage(e),
            _ => failed(e),
        }
    }
}

impl From<OptimizerError> for CliError {
    fn from(e: OptimizerError) -> Self {
        match e {
            OptimizerError::Tau(_) => failed(e),
            _ => usage(e),
        }
    }
}

/// Result of one command before it is wrapped into a report.
pub struct Outcome {
    pub result: Value,
    pub passed: bool,
    /// Artifact other than the JSON report, written to `--out` instead of it.
    pub artifact: Option<Vec<u8>>,
}

impl Outcome {
    fn report(result: Value, passed: bool) -> Self {
        Self {
            result,
            passed,
            artifact: None,
        }
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn prime(p: u64) -> Result<PrimeContext, CliError> {
    PrimeContext::new(p).map_err(usage)
}

fn rational(s: &str) -> Result<BigRational, CliError> {
    parse_rational(s).map_err(usage)
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform subset of `0..n` with between 1 and `max_size` elements.
fn random_subset(rng: &mut ChaCha8Rng, n: u64, max_size: usize) -> Vec<u64> {
    let cap = max_size.min(n as usize).max(1);
    let k = rng.random_range(1..=cap);
    let mut v: Vec<u64> = rand::seq::index::sample(rng, n as usize, k).iter().map(|x| x as u64).collect();
    v.sort_unstable();
    v
}

enum Columns {
    Chirp(ChirpEnsemble),
    Dense(DenseGram, usize),
}

impl Columns {
    fn gram(&self) -> &dyn GramSource {
        match self {
            Columns::Chirp(e) => e,
            Columns::Dense(g, _) => g,
        }
    }

    fn rows(&self) -> usize {
        match self {
            Columns::Chirp(e) => e.num_rows(),
            Columns::Dense(_, rows) => *rows,
        }
    }
}

fn load_columns(source: &Source) -> Result<Columns, CliError> {
    let cols = match (&source.input, source.p) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(failed)?;
            if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
                let mut rows = io::matrix_from_csv(&text).map_err(failed)?;
                if let Some(n) = source.columns {
                    rows.iter_mut().for_each(|r| r.truncate(n));
                }
                let height = rows.len();
                return Ok(Columns::Dense(DenseGram::from_rows(&rows)?, height));
            }
            let spec: EnsembleSpec = serde_json::from_str(&text).map_err(failed)?;
            spec.to_ensemble().map_err(failed)?
        }
        (None, Some(p)) => ChirpEnsemble::full(prime(p)?),
        (None, None) => return Err(usage("give --p or --input")),
    };
    Ok(match source.columns {
        Some(n) => Columns::Chirp(cols.select(&(0..n.min(cols.num_columns())).collect::<Vec<_>>())),
        None => Columns::Chirp(cols),
    })
}

pub fn run(cmd: &Command) -> Result<Outcome, CliError> {
    let seed = cmd.common().seed;
    match cmd {
        Command::Build { p, m, side, r, dense, .. } => build(*p, *m, *side, *r, *dense),
        Command::GramCheck { p, count, .. } => gram_check(*p, *count, seed),
        Command::Rip { source, k, mode, count, s, .. } => rip_cmd(source, *k, *mode, *count, *s, seed),
        Command::FlatRip { source, k, .. } => flat_rip(source, *k),
        Command::Energy { input, p, side, r, .. } => energy(input.as_deref(), *p, *side, *r),
        Command::Bias { input, .. } => bias(input),
        Command::Tau { side, .. } => tau(*side),
        Command::VerifyA { m, p, .. } => verify_a(*m, *p),
        Command::Optimize { m, c0, precision, .. } => optimize(*m, c0, *precision),
        Command::Sweep { grid, c0, precision, .. } => sweep(grid.as_deref(), c0, *precision),
        Command::Lemma9Check { p, count, .. } => lemma9(*p, *count, seed),
        Command::Sums { p, count, .. } => sums(*p, *count, seed),
    }
}

fn build(p: u64, m: Option<u64>, side: Option<u64>, r: u32, dense: bool) -> Result<Outcome, CliError> {
    let ctx = prime(p)?;
    let a = match m {
        Some(m) => {
            let params = ASetParams::new(m, p).map_err(usage)?;
            chirp::build_a(&params).map_err(failed)?
        }
        None => ResidueSet::full(p).map_err(failed)?,
    };
    let b = match side {
        Some(side) => chirp::build_b(p, side, r).map_err(|e| match e {
            ChirpError::EmbeddingOverflow { .. } => usage(e),
            e => failed(e),
        })?,
        None => ResidueSet::full(p).map_err(failed)?,
    };
    let ens = chirp::assemble_ensemble(ctx, &a, &b).map_err(failed)?;
    let artifact = if dense {
        io::matrix_to_csv(&ens.dense().map_err(usage)?).map_err(failed)?.into_bytes()
    } else {
        let spec = EnsembleSpec::Product {
            p,
            a: a.elements().to_vec(),
            b: b.elements().to_vec(),
        };
        serde_json::to_vec_pretty(&spec).map_err(failed)?
    };
    Ok(Outcome {
        result: json!({
            "p": p,
            "A_size": a.len(),
            "B_size": b.len(),
            "rows": ens.num_rows(),
            "columns": ens.num_columns(),
            "format": if dense { "csv" } else { "json" },
        }),
        passed: true,
        artifact: Some(artifact),
    })
}

fn gram_check(p: u64, count: u64, seed: u64) -> Result<Outcome, CliError> {
    let ctx = prime(p)?;
    if p < 3 {
        return Err(usage("p must be odd"));
    }
    let mut rng = rng(seed);
    let mut max_closed = 0.0f64;
    for _ in 0..count {
        let a1 = rng.random_range(0..p);
        let a2 = (a1 + rng.random_range(1..p)) % p;
        let i = ChirpIndex::new(a1, rng.random_range(0..p));
        let j = ChirpIndex::new(a2, rng.random_range(0..p));
        let closed = chirp::gram_entry_closed(&ctx, i, j).map_err(failed)?;
        max_closed = max_closed.max((closed - chirp::gram_entry_direct(&ctx, i, j)).norm());
    }
    let mut max_delta = 0.0f64;
    for a in 0..p {
        for b1 in 0..p {
            for b2 in 0..p {
                let g = chirp::gram_entry_direct(&ctx, ChirpIndex::new(a, b1), ChirpIndex::new(a, b2));
                let expected = if b1 == b2 { 1.0 } else { 0.0 };
                max_delta = max_delta.max((g - expected).norm());
            }
        }
    }
    let passed = max_closed < 1e-9 && max_delta < 1e-12;
    Ok(Outcome::report(
        json!({
            "p": p,
            "pairs_sampled": count,
            "max_closed_vs_direct_error": max_closed,
            "equal_rate_pairs": p * p * p,
            "max_equal_rate_error": max_delta,
        }),
        passed,
    ))
}

fn rip_cmd(source: &Source, k: usize, mode: Mode, count: u64, s: Option<usize>, seed: u64) -> Result<Outcome, CliError> {
    let cols = load_columns(source)?;
    let g = cols.gram();
    let (mu, pair) = rip::coherence(g)?;
    let welch = rip::welch_bound(cols.rows(), g.num_columns()).ok();
    let report = match mode {
        Mode::Exhaustive => rip::ric_exhaustive(g, k)?,
        Mode::Sampled => rip::ric_sampled(g, k, count, seed)?,
    };
    let gershgorin = rip::gershgorin_bound(mu, k);
    let scaling = match s {
        Some(s) => Some(rip::scaling_bound_check(g, k, s)?),
        None => None,
    };
    let passed = report.delta <= gershgorin + 1e-9 && scaling.as_ref().is_none_or(|c| c.holds);
    Ok(Outcome::report(
        json!({
            "rows": cols.rows(),
            "columns": g.num_columns(),
            "coherence": mu,
            "coherence_pair": pair,
            "welch_bound": welch,
            "report": report,
            "gershgorin_bound": gershgorin,
            "scaling": scaling,
        }),
        passed,
    ))
}

fn flat_rip(source: &Source, k: usize) -> Result<Outcome, CliError> {
    let cols = load_columns(source)?;
    let g = cols.gram();
    let flat = rip::flat_rip_exhaustive(g, k)?;
    let (mu, _) = rip::coherence(g)?;
    let lemma_b = rip::lemma_b_from(k, mu, &flat);
    let lemma_a = if k >= 2 {
        let delta = rip::ric_exhaustive(g, k)?.delta;
        Some(rip::lemma_a_from(k, delta, flat.theta))
    } else {
        None
    };
    let passed = lemma_b.holds && lemma_a.as_ref().is_none_or(|a| a.holds_150);
    Ok(Outcome::report(
        json!({
            "columns": g.num_columns(),
            "report": flat,
            "theta_columns": [rip::mask_to_columns(flat.theta_witness.i), rip::mask_to_columns(flat.theta_witness.j)],
            "lemma_a": lemma_a,
            "lemma_b": lemma_b,
        }),
        passed,
    ))
}

fn energy(input: Option<&Path>, p: Option<u64>, side: Option<u64>, r: u32) -> Result<Outcome, CliError> {
    let set = match (input, p, side) {
        (Some(path), _, _) => io::parse_residue_set(&fs::read_to_string(path).map_err(failed)?).map_err(failed)?,
        (None, Some(p), Some(side)) => chirp::build_b(p, side, r).map_err(usage)?,
        _ => return Err(usage("give --input, or --p with --M and --r")),
    };
    if set.is_empty() {
        return Err(usage("the set is empty"));
    }
    let sum = addcomb::sumset(&set, &set).map_err(failed)?;
    let diff = addcomb::difference_set(&set, &set).map_err(failed)?;
    let report = addcomb::energy_report(&set, &set).map_err(failed)?;
    let n = set.len();
    let ruzsa = (sum.len() * n) <= diff.len() * diff.len();
    let passed = sum.len() >= n && diff.len() >= n && report.within_bounds() && ruzsa;
    Ok(Outcome::report(
        json!({
            "modulus": set.modulus(),
            "size": n,
            "sumset_size": sum.len(),
            "difference_set_size": diff.len(),
            "energy": report.energy.to_string(),
            "energy_lower_bound": report.lower_bound.to_string(),
            "energy_upper_bound": report.upper_bound.to_string(),
            "sumset_vs_difference_set_holds": ruzsa,
        }),
        passed,
    ))
}

fn bias(input: &Path) -> Result<Outcome, CliError> {
    let set = io::parse_residue_set(&fs::read_to_string(input).map_err(failed)?).map_err(failed)?;
    let s = addcomb::bias_sandwich(&set).map_err(usage)?;
    Ok(Outcome::report(
        json!({
            "modulus": set.modulus(),
            "size": set.len(),
            "bias": s.bias,
            "sandwich": s,
        }),
        s.holds(1e-9),
    ))
}

fn tau(side: f64) -> Result<Outcome, CliError> {
    if !(side >= 2.0) {
        return Err(usage("M must be at least 2"));
    }
    let log2_m = side.log2();
    let asymptotic = log2_m >= addcomb::ASYMPTOTIC_LOG2_THRESHOLD;
    let t = addcomb::solve_t(log2_m).map_err(failed)?;
    let tau = if asymptotic { (1.0 + t) / 2.0 } else { addcomb::solve_tau(side).map_err(failed)? };
    Ok(Outcome::report(
        json!({
            "M": side,
            "log2_M": log2_m,
            "branch": if asymptotic { "asymptotic" } else { "direct" },
            "tau": tau,
            "t": t,
        }),
        true,
    ))
}

fn verify_a(m: u64, p: Option<u64>) -> Result<Outcome, CliError> {
    if m == 0 || m % 2 == 1 {
        return Err(usage(format!("m must be even and positive, got {m}")));
    }
    let p = match p {
        Some(p) => p,
        None => {
            let exponent = u32::try_from(2 * m * (4 * m - 1)).ok().filter(|&e| e <= 40);
            exponent
                .and_then(|e| 3u64.checked_pow(e))
                .and_then(next_prime)
                .ok_or_else(|| usage("3^(2m(4m-1)) does not fit; pass --p"))?
        }
    };
    let ctx = prime(p)?;
    let params = ASetParams::new(m, p).map_err(usage)?;
    let a = chirp::build_a(&params).map_err(failed)?;
    let hypothesis = chirp::verify_hypothesis_a(&a, m, &ctx).map_err(failed)?;
    let lambda = match a.elements().split_first() {
        Some((&a1, rest)) if !rest.is_empty() => {
            let a2 = ResidueSet::new(p, rest.iter().copied()).map_err(failed)?;
            let count = chirp::count_lambda0(&a2, a1, m, &ctx).map_err(failed)?;
            let formula = chirp::lambda0_formula(a2.len() as u64, m);
            Some(json!({ "a1": a1, "A2": rest, "count": count, "formula": formula.to_string(), "matches": count as u128 == formula }))
        }
        _ => None,
    };
    let lambda_ok = lambda.as_ref().is_none_or(|l| l["matches"] == true);
    Ok(Outcome::report(
        json!({
            "m": m,
            "p": p,
            "L": params.l,
            "U": params.u,
            "A": a.elements(),
            "hypothesis": hypothesis,
            "lambda0": lambda,
        }),
        hypothesis.holds && lambda_ok,
    ))
}

fn optimize(m: u64, c0: &str, precision: u32) -> Result<Outcome, CliError> {
    let params = MachineParams::new(m, rational(c0)?, precision)?;
    let r = optimizer::maximize_eps1(&params);
    let passed = r.status != LpStatus::Optimal || r.certified;
    Ok(Outcome::report(to_value(&LpReport::from(&r)), passed))
}

fn parse_grid(grid: &str) -> Result<Vec<u64>, CliError> {
    let parts: Vec<f64> = grid
        .split(':')
        .map(|s| s.trim().parse::<f64>().map_err(|_| usage(format!("bad grid {grid:?}"))))
        .collect::<Result<_, _>>()?;
    let [start, stop, factor] = parts[..] else {
        return Err(usage(format!("grid must be start:stop:factor, got {grid:?}")));
    };
    Ok(optimizer::factor_grid(start, stop, factor))
}

fn sweep(grid: Option<&str>, c0: &str, precision: u32) -> Result<Outcome, CliError> {
    let ms = match grid {
        Some(g) => parse_grid(g)?,
        None => optimizer::log_grid(1e6, 1e9, 30),
    };
    if ms.is_empty() {
        return Err(usage("the grid is empty"));
    }
    let points = optimizer::sweep_m(&ms, &rational(c0)?, precision)?;
    let values: Vec<Option<BigRational>> = points.iter().map(|p| p.eps1_sup.clone()).collect();
    let argmax = (0..values.len()).max_by(|&i, &j| values[i].cmp(&values[j]).then(j.cmp(&i)));
    let unimodal = optimizer::unimodal_peak(&values).is_some();
    let rows: Vec<Value> = points
        .iter()
        .map(|p| {
            json!({
                "m": p.m,
                "status": p.status,
                "eps1_sup_decimal": p.eps1_sup.as_ref().map(|v| to_scientific(v, 10)),
            })
        })
        .collect();
    let peak = argmax.filter(|&i| values[i].is_some()).map(|i| {
        json!({ "m": points[i].m, "eps1_sup_decimal": values[i].as_ref().map(|v| to_scientific(v, 10)) })
    });
    Ok(Outcome {
        result: json!({ "points": rows, "peak": peak, "unimodal": unimodal }),
        passed: unimodal,
        artifact: Some(io::sweep_to_csv(&points).map_err(failed)?.into_bytes()),
    })
}

fn lemma9(p: u64, count: u64, seed: u64) -> Result<Outcome, CliError> {
    let ctx = prime(p)?;
    let mut rng = rng(seed);
    let max_size = (p as usize).min(24);
    let (mut failures, mut worst_ratio) = (0u64, 0.0f64);
    for _ in 0..count {
        let theta = rng.random_range(1..p);
        let b1 = ResidueSet::new(p, random_subset(&mut rng, p, max_size)).map_err(failed)?;
        let b2 = ResidueSet::new(p, random_subset(&mut rng, p, max_size)).map_err(failed)?;
        let c = rip::lemma9_check(&ctx, theta, &b1, &b2)?;
        worst_ratio = worst_ratio.max(c.lhs / c.rhs);
        failures += u64::from(!c.holds);
    }
    Ok(Outcome::report(
        json!({ "p": p, "instances": count, "failures": failures, "max_lhs_over_rhs": worst_ratio }),
        failures == 0,
    ))
}

fn random_omega(rng: &mut ChaCha8Rng, a: &ResidueSet, p: u64) -> Omega {
    a.iter().map(|x| (x, random_subset(rng, p, 4))).collect()
}

fn sums(p: u64, count: u64, seed: u64) -> Result<Outcome, CliError> {
    let ctx = prime(p)?;
    if p < 5 {
        return Err(usage("p must be at least 5"));
    }
    let mut rng = rng(seed);
    let m_half = ctx.neg(ctx.inverse(ctx.residue(2)).map_err(failed)?);
    let (mut gram_err, mut s_err, mut t_excess) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..count {
        let split = rand::seq::index::sample(&mut rng, p as usize, 6).into_vec();
        let k1 = rng.random_range(1..=3);
        let a1 = ResidueSet::new(p, split[..k1].iter().map(|&x| x as u64)).map_err(failed)?;
        let a2 = ResidueSet::new(p, split[k1..].iter().map(|&x| x as u64)).map_err(failed)?;
        let o1 = random_omega(&mut rng, &a1, p);
        let o2 = random_omega(&mut rng, &a2, p);

        let s_prime = rip::sum_s_gram(&ctx, &a1, &a2, &o1, &o2)?;
        let ip = rip::omega_inner_product(&ctx, &o1, &o2);
        gram_err = gram_err.max((ip - ctx.sigma() * s_prime / ctx.sqrt_p()).norm());

        let s = rip::sum_s(&ctx, &a1, &a2, &o1, &o2)?;
        let remap = |o: &Omega| -> Omega { o.iter().map(|(&a, bs)| (ctx.mul(m_half, ctx.residue(a)).value(), bs.clone())).collect() };
        let ip_half = rip::omega_inner_product(&ctx, &remap(&o1), &remap(&o2));
        s_err = s_err.max((s.norm() - ctx.sqrt_p() * ip_half.norm()).abs());

        let first = a1.elements()[0];
        let b = ResidueSet::new(p, o1[&first].iter().copied()).map_err(failed)?;
        let t = rip::sum_t(&ctx, first, &a2, &b, &o2)?;
        let terms: usize = b.len() * o2.values().map(Vec::len).sum::<usize>();
        t_excess = t_excess.max(t.norm() - terms as f64);
    }
    let passed = gram_err < 1e-9 && s_err < 1e-9 && t_excess <= 1e-9;
    Ok(Outcome::report(
        json!({
            "p": p,
            "instances": count,
            "max_gram_identity_error": gram_err,
            "max_s_vs_halved_rates_error": s_err,
            "max_t_over_term_count": t_excess,
        }),
        passed,
    ))
}
