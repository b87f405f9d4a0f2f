use chirp_rip::io;
use chirp_rip::rip::{self, DenseGram, GramSource};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn gaussian(rows: usize, cols: usize, seed: u64) -> Vec<Vec<Complex64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0 / (rows as f64).sqrt()).unwrap();
    (0..rows)
        .map(|_| (0..cols).map(|_| Complex64::new(normal.sample(&mut rng), 0.0)).collect())
        .collect()
}

#[test]
fn gaussian_matrix_scaling_bound() {
    let g = DenseGram::from_rows(&gaussian(8, 12, 0xB0D1)).unwrap();
    let check = rip::scaling_bound_check(&g, 2, 2).unwrap();
    assert!(check.holds, "{check:?}");
    assert!(check.delta_sk > check.delta_k);
}

#[test]
fn gaussian_matrix_gershgorin_and_monotonicity() {
    let g = DenseGram::from_rows(&gaussian(10, 14, 7)).unwrap();
    let (mu, _) = rip::coherence(&g).unwrap();
    let mut previous = 0.0;
    for k in 1..=5 {
        let r = rip::ric_exhaustive(&g, k).unwrap();
        assert!(r.delta + 1e-10 >= previous);
        previous = r.delta;
    }
    // Columns are not normalized, so compare against the shifted bound.
    let diag = (0..g.num_columns()).map(|i| (g.entry(i, i).re - 1.0).abs()).fold(0.0, f64::max);
    let d3 = rip::ric_exhaustive(&g, 3).unwrap().delta;
    assert!(d3 <= diag + 2.0 * mu + 1e-9);
}

#[test]
fn dense_csv_import_preserves_the_gram_matrix() {
    let rows = gaussian(6, 9, 3);
    let text = io::matrix_to_csv(&rows).unwrap();
    let back = DenseGram::from_rows(&io::matrix_from_csv(&text).unwrap()).unwrap();
    let orig = DenseGram::from_rows(&rows).unwrap();
    assert_eq!(back, orig);
}
