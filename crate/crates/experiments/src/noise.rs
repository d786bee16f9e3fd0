use penopt::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn norm(d: &[Vec<Complex64>]) -> f64 {
    d.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Adds complex Gaussian noise scaled so that `‖η‖ = percent/100 · ‖d‖`
/// over all experiments together. Draws are made experiment by experiment,
/// real part before imaginary part, from a ChaCha8 stream seeded by `seed`.
pub fn add_noise(d: &[Vec<Complex64>], percent: f64, seed: u64) -> Vec<Vec<Complex64>> {
    if percent == 0.0 {
        return d.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eta: Vec<Vec<Complex64>> = d
        .iter()
        .map(|dk| {
            dk.iter()
                .map(|_| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    Complex64::new(re, im)
                })
                .collect()
        })
        .collect();
    let scale = percent / 100.0 * norm(d) / norm(&eta).max(f64::MIN_POSITIVE);
    d.iter().zip(&eta).map(|(dk, ek)| dk.iter().zip(ek).map(|(a, b)| a + b * scale).collect()).collect()
}

/// `‖a − b‖ / ‖b‖` over all experiments.
pub fn relative_difference(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> f64 {
    let diff: Vec<Vec<Complex64>> = a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p - q).collect()).collect();
    norm(&diff) / norm(b)
}
