// Sanity checks of the scaling harnesses on models with known answers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qploc::lattice::Cube;
use qploc::operator::{assemble_field, spectrum, PotentialField};
use qploc::stats::{minami_from_spectra, wegner_from_spectra};

// i.i.d. uniform potential at strong disorder: locally Poisson spectra
fn iid_spectra(samples: usize, radius: u64, g: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cube = Cube::centered(1, radius);
    (0..samples)
        .map(|_| {
            let values = (0..cube.site_count()).map(|_| rng.random::<f64>()).collect();
            let field = PotentialField::from_values(cube.clone(), values).unwrap();
            spectrum(&assemble_field(&field, g)).unwrap().eigenvalues
        })
        .collect()
}

#[test]
fn minami_harness_recovers_poisson_pairs() {
    // expected counts stay below 0.3 so that P(N >= 2) is still quadratic
    let spectra = iid_spectra(20000, 30, 40.0, 11);
    let grid = [0.02, 0.05, 0.1, 0.2];
    let fit = minami_from_spectra(&spectra, 20.0, 2, &grid).fit.expect("enough events");
    assert!(fit.slope_ci.0 < 2.0 && 2.0 < fit.slope_ci.1, "{fit:?}");
    let single = minami_from_spectra(&spectra, 20.0, 1, &grid).fit.unwrap();
    assert!((single.slope - 1.0).abs() < 0.15, "{single:?}");
}

#[test]
fn wegner_harness_is_linear_for_bounded_density() {
    let spectra = iid_spectra(20000, 30, 40.0, 12);
    let fit = wegner_from_spectra(&spectra, 20.0, &[0.002, 0.005, 0.01, 0.02]).fit.expect("enough events");
    assert!(fit.slope_ci.0 < 1.0 && 1.0 < fit.slope_ci.1, "{fit:?}");
}
