//! Deterministic fixtures shared by the benchmarks.

use ebic_core::experiment::Setting;
use ebic_core::simgen::{
    covariance_factor, divergence_schedule, generate_replicate, CovarianceKind, CovarianceSpec,
};
use ebic_core::solvers::Standardized;
use ebic_core::{Dataset, StudyConfig};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Gaussian design with a five-feature signal, standardized for the solvers.
pub fn standardized_problem(n: usize, p: usize, seed: u64) -> Standardized {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut y = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    for j in 0..p.min(5) {
        y.axpy(1.0 - 0.15 * j as f64, &x.column(j), 1.0);
    }
    Standardized::new(&x, &y).expect("finite fixture")
}

/// One simulated replicate under the study's defaults for Structure I,
/// `c = 1`.
pub fn study_dataset(n: usize, h: f64, seed: u64) -> Dataset {
    let cfg = StudyConfig::desk();
    let schedule = divergence_schedule(n, 1).expect("valid n");
    let setting = Setting {
        structure: CovarianceKind::PowerDecay,
        c: 1,
        n,
        h,
    };
    let sigma2 = cfg.sigma2(&setting).expect("valid heritability");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = CovarianceSpec::new(CovarianceKind::PowerDecay, schedule.p);
    let factor = covariance_factor(&spec, &mut rng).expect("valid structure");
    generate_replicate(&schedule, &factor, &cfg.beta.with_n_ref(n), sigma2, cfg.placement, &mut rng)
        .expect("valid replicate")
}
