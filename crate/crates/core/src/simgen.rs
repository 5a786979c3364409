//! Synthetic regression data: structured Gaussian covariates, signed
//! tapering coefficients, heritability-calibrated noise and the diverging
//! `(n, p₀, p)` schedule.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};
use statrs::distribution::ContinuousCDF;

use crate::error::{Error, Result};
use crate::support::SupportSet;

/// Correlation families for the covariates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CovarianceKind {
    /// `ρ^{|i−j|}`.
    PowerDecay,
    /// Block diagonal, equal correlation `ρ` within blocks.
    EquiBlock,
    /// Block diagonal, each block a random matrix with spectrum spread over
    /// `[eig_min, eig_max]` rescaled to unit diagonal.
    EigenBlock,
}

impl CovarianceKind {
    pub const ALL: [CovarianceKind; 3] = [
        CovarianceKind::PowerDecay,
        CovarianceKind::EquiBlock,
        CovarianceKind::EigenBlock,
    ];

    /// Roman-numeral label used in tables and config files.
    pub fn label(&self) -> &'static str {
        match self {
            CovarianceKind::PowerDecay => "I",
            CovarianceKind::EquiBlock => "II",
            CovarianceKind::EigenBlock => "III",
        }
    }
}

impl fmt::Display for CovarianceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for CovarianceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "I" | "1" | "power_decay" => Ok(CovarianceKind::PowerDecay),
            "II" | "2" | "equi_block" => Ok(CovarianceKind::EquiBlock),
            "III" | "3" | "eigen_block" => Ok(CovarianceKind::EigenBlock),
            other => Err(Error::config("structures", format!("unknown structure `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSpec {
    pub kind: CovarianceKind,
    pub p: usize,
    pub rho: f64,
    pub block_size: usize,
    pub eig_min: f64,
    pub eig_max: f64,
}

impl CovarianceSpec {
    pub fn new(kind: CovarianceKind, p: usize) -> Self {
        CovarianceSpec {
            kind,
            p,
            rho: 0.5,
            block_size: 50,
            eig_min: 1.0,
            eig_max: 50.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::config("p", "dimension must be positive"));
        }
        if self.kind != CovarianceKind::EigenBlock && !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::config("rho", format!("{} not in (0, 1)", self.rho)));
        }
        if self.kind != CovarianceKind::PowerDecay && self.block_size == 0 {
            return Err(Error::config("block_size", "must be positive"));
        }
        if self.kind == CovarianceKind::EigenBlock
            && !(self.eig_min > 0.0 && self.eig_max >= self.eig_min)
        {
            return Err(Error::config(
                "eig_min",
                format!("need 0 < eig_min <= eig_max, got {} and {}", self.eig_min, self.eig_max),
            ));
        }
        Ok(())
    }
}

/// Block sizes: full blocks of `block_size`, then the remainder if nonzero.
pub fn block_sizes(p: usize, block_size: usize) -> Vec<usize> {
    let mut sizes = vec![block_size; p / block_size];
    if p % block_size != 0 {
        sizes.push(p % block_size);
    }
    sizes
}

/// A realized covariance structure ready for sampling.
#[derive(Debug, Clone)]
pub enum FactorHandle {
    PowerDecay { p: usize, rho: f64 },
    EquiBlock { p: usize, rho: f64, block_size: usize },
    /// Lower Cholesky factors of each block's correlation matrix.
    EigenBlock { p: usize, block_size: usize, blocks: Vec<DMatrix<f64>> },
}

impl FactorHandle {
    pub fn dim(&self) -> usize {
        match self {
            FactorHandle::PowerDecay { p, .. }
            | FactorHandle::EquiBlock { p, .. }
            | FactorHandle::EigenBlock { p, .. } => *p,
        }
    }

    /// Entry `(i, j)` of the implied correlation matrix.
    pub fn correlation(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 1.0;
        }
        match self {
            FactorHandle::PowerDecay { rho, .. } => rho.powi(i.abs_diff(j) as i32),
            FactorHandle::EquiBlock { rho, block_size, .. } => {
                if i / block_size == j / block_size {
                    *rho
                } else {
                    0.0
                }
            }
            FactorHandle::EigenBlock { block_size, blocks, .. } => {
                let (bi, bj) = (i / block_size, j / block_size);
                if bi != bj {
                    return 0.0;
                }
                let l = &blocks[bi];
                let (a, b) = (i % block_size, j % block_size);
                let k = a.min(b);
                (0..=k).map(|t| l[(a, t)] * l[(b, t)]).sum()
            }
        }
    }

    /// The correlation matrix restricted to `indices`.
    pub fn submatrix(&self, indices: &[usize]) -> DMatrix<f64> {
        let k = indices.len();
        DMatrix::from_fn(k, k, |a, b| self.correlation(indices[a], indices[b]))
    }
}

fn eigen_block<R: Rng + ?Sized>(size: usize, lo: f64, hi: f64, rng: &mut R) -> DMatrix<f64> {
    if size == 1 {
        return DMatrix::from_element(1, 1, 1.0);
    }
    loop {
        let g = DMatrix::from_fn(size, size, |_, _| rng.sample::<f64, _>(StandardNormal));
        let qr = g.qr();
        let r = qr.r();
        let mut q = qr.q();
        // Sign-fix so Q is Haar distributed.
        for (k, mut col) in q.column_iter_mut().enumerate() {
            if r[(k, k)] < 0.0 {
                col.neg_mut();
            }
        }
        let mut spectrum = Vec::with_capacity(size);
        spectrum.push(lo);
        spectrum.push(hi);
        if hi > lo {
            let uniform = Uniform::new(lo, hi).expect("lo < hi");
            spectrum.extend((2..size).map(|_| uniform.sample(rng)));
        } else {
            spectrum.extend((2..size).map(|_| lo));
        }
        let lambda = DMatrix::from_diagonal(&DVector::from_vec(spectrum));
        let a = &q * lambda * q.transpose();
        let d = a.diagonal().map(|v| 1.0 / v.sqrt());
        let mut c = DMatrix::from_fn(size, size, |i, j| a[(i, j)] * d[i] * d[j]);
        for i in 0..size {
            c[(i, i)] = 1.0;
            for j in 0..i {
                let m = 0.5 * (c[(i, j)] + c[(j, i)]);
                c[(i, j)] = m;
                c[(j, i)] = m;
            }
        }
        if let Some(chol) = c.cholesky() {
            return chol.l();
        }
    }
}

/// Builds a sampling factor. Only the eigenvalue-block structure consumes
/// randomness.
pub fn covariance_factor<R: Rng + ?Sized>(spec: &CovarianceSpec, rng: &mut R) -> Result<FactorHandle> {
    spec.validate()?;
    Ok(match spec.kind {
        CovarianceKind::PowerDecay => FactorHandle::PowerDecay {
            p: spec.p,
            rho: spec.rho,
        },
        CovarianceKind::EquiBlock => FactorHandle::EquiBlock {
            p: spec.p,
            rho: spec.rho,
            block_size: spec.block_size,
        },
        CovarianceKind::EigenBlock => FactorHandle::EigenBlock {
            p: spec.p,
            block_size: spec.block_size,
            blocks: block_sizes(spec.p, spec.block_size)
                .into_iter()
                .map(|b| eigen_block(b, spec.eig_min, spec.eig_max, rng))
                .collect(),
        },
    })
}

/// Draws `n` i.i.d. rows with the factor's correlation. Rows are generated
/// in order, so a fixed stream yields a fixed matrix.
pub fn sample_design<R: Rng + ?Sized>(factor: &FactorHandle, n: usize, rng: &mut R) -> DMatrix<f64> {
    let p = factor.dim();
    let mut x = DMatrix::zeros(n, p);
    let mut row = vec![0.0; p];
    let mut z = vec![0.0; p];
    for i in 0..n {
        match factor {
            FactorHandle::PowerDecay { rho, .. } => {
                let innov = (1.0 - rho * rho).sqrt();
                let mut prev: f64 = rng.sample(StandardNormal);
                row[0] = prev;
                for slot in row.iter_mut().skip(1) {
                    let e: f64 = rng.sample(StandardNormal);
                    prev = rho * prev + innov * e;
                    *slot = prev;
                }
            }
            FactorHandle::EquiBlock { rho, block_size, .. } => {
                let (shared, own) = (rho.sqrt(), (1.0 - rho).sqrt());
                for chunk in row.chunks_mut(*block_size) {
                    let w: f64 = rng.sample(StandardNormal);
                    for slot in chunk {
                        let e: f64 = rng.sample(StandardNormal);
                        *slot = shared * w + own * e;
                    }
                }
            }
            FactorHandle::EigenBlock { block_size, blocks, .. } => {
                for v in z.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
                for (b, l) in blocks.iter().enumerate() {
                    let start = b * block_size;
                    let size = l.nrows();
                    for a in 0..size {
                        row[start + a] = (0..=a).map(|t| l[(a, t)] * z[start + t]).sum();
                    }
                }
            }
        }
        for (j, v) in row.iter().enumerate() {
            x[(i, j)] = *v;
        }
    }
    x
}

/// Law of the nonzero coefficients: `(−1)^u (n_ref^{−e} + |z|)` with
/// `u ~ Bernoulli(sign_prob)` and `z ~ N(0, σ_z²)`, `P(|z| ≥ t) = q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaSpec {
    pub n_ref: f64,
    pub sign_prob: f64,
    pub floor_exponent: f64,
    pub z_tail_point: f64,
    pub z_tail_prob: f64,
}

impl BetaSpec {
    pub fn for_sample_size(n: usize) -> Self {
        BetaSpec {
            n_ref: n as f64,
            sign_prob: 0.4,
            floor_exponent: 0.1625,
            z_tail_point: 0.1,
            z_tail_prob: 0.25,
        }
    }

    pub fn with_n_ref(self, n: usize) -> Self {
        BetaSpec {
            n_ref: n as f64,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.sign_prob) {
            return Err(Error::config("sign_prob", "must lie in [0, 1]"));
        }
        if !(self.z_tail_prob > 0.0 && self.z_tail_prob < 1.0) || !(self.z_tail_point > 0.0) {
            return Err(Error::config("z_tail_prob", "need tail point > 0 and probability in (0, 1)"));
        }
        if !(self.n_ref > 0.0) {
            return Err(Error::config("n_ref", "must be positive"));
        }
        Ok(())
    }

    /// Smallest possible magnitude, `n_ref^{−e}`.
    pub fn floor(&self) -> f64 {
        self.n_ref.powf(-self.floor_exponent)
    }

    /// `σ_z = t / Φ⁻¹(1 − q/2)`.
    pub fn sigma_z(&self) -> f64 {
        let normal = statrs::distribution::Normal::standard();
        self.z_tail_point / normal.inverse_cdf(1.0 - self.z_tail_prob / 2.0)
    }
}

pub fn sample_beta<R: Rng + ?Sized>(spec: &BetaSpec, p0: usize, rng: &mut R) -> Vec<f64> {
    let floor = spec.floor();
    let z = Normal::new(0.0, spec.sigma_z()).expect("positive sigma_z");
    (0..p0)
        .map(|_| {
            // u = 1 gives a negative sign.
            let negative = rng.random_bool(spec.sign_prob);
            let magnitude = floor + z.sample(rng).abs();
            if negative {
                -magnitude
            } else {
                magnitude
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub n: usize,
    pub c: usize,
    pub p0: usize,
    pub p: usize,
}

const TABULATED: [(usize, usize, usize); 4] = [(100, 150, 4), (200, 595, 6), (500, 6655, 8), (1000, 74622, 9)];

/// `(n, p₀, p) = (n, c·[n^0.325], [exp(n^0.35)])`, with the four published
/// rows taken verbatim.
pub fn divergence_schedule(n: usize, c: usize) -> Result<ScheduleEntry> {
    if n < 2 {
        return Err(Error::config("n_values", format!("sample size {n} must be at least 2")));
    }
    if c == 0 {
        return Err(Error::config("c_values", "multiplier must be positive"));
    }
    if let Some(&(_, p, base)) = TABULATED.iter().find(|row| row.0 == n) {
        return Ok(ScheduleEntry { n, c, p0: c * base, p });
    }
    let nf = n as f64;
    let base = nf.powf(0.325).round() as usize;
    let p = nf.powf(0.35).exp().round() as usize;
    Ok(ScheduleEntry {
        n,
        c,
        p0: c * base.max(1),
        p,
    })
}

/// Where the relevant features sit among the `p` columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// Evenly spaced, centered in `p₀` equal segments.
    #[default]
    Spread,
    /// The first `p₀` columns.
    First,
}

pub fn place_support(p: usize, p0: usize, placement: Placement) -> Result<SupportSet> {
    if p0 > p {
        return Err(Error::InvalidArgument(format!("p0 = {p0} exceeds p = {p}")));
    }
    Ok(match placement {
        Placement::First => SupportSet::from_indices(0..p0),
        Placement::Spread => SupportSet::from_indices((0..p0).map(|i| (2 * i + 1) * p / (2 * p0))),
    })
}

/// Number of coefficient draws used to estimate `E(β*ᵀ Σ β*)`.
pub const CALIBRATION_DRAWS: usize = 100_000;
const CALIBRATION_SEED: u64 = 0x5eed_ca1b_0000_0001;

/// Monte Carlo estimate of `E(β*ᵀ Σ β*)` over the coefficient law, with the
/// relevant positions fixed.
pub fn expected_signal_energy(factor: &FactorHandle, support: &SupportSet, beta: &BetaSpec, draws: usize) -> f64 {
    let sigma = factor.submatrix(support.indices());
    let mut rng = ChaCha8Rng::seed_from_u64(CALIBRATION_SEED);
    let k = support.len();
    let mut total = 0.0;
    for _ in 0..draws {
        let b = DVector::from_vec(sample_beta(beta, k, &mut rng));
        total += (&sigma * &b).dot(&b);
    }
    total / draws as f64
}

/// Noise variance giving heritability `h = E / (E + σ²)` at the reference
/// sample size, where `E = E(β*ᵀ Σ β*)`. `factor` must be the reference
/// design's structure.
pub fn calibrate_sigma2(
    h: f64,
    factor: &FactorHandle,
    beta: &BetaSpec,
    reference: &ScheduleEntry,
    placement: Placement,
) -> Result<f64> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::config("h_values", format!("heritability {h} not in (0, 1)")));
    }
    if factor.dim() != reference.p {
        return Err(Error::InvalidArgument(format!(
            "reference structure has dimension {}, schedule needs {}",
            factor.dim(),
            reference.p
        )));
    }
    let support = place_support(reference.p, reference.p0, placement)?;
    let beta = beta.with_n_ref(reference.n);
    let energy = expected_signal_energy(factor, &support, &beta, CALIBRATION_DRAWS);
    Ok(energy * (1.0 - h) / h)
}

/// Simulated data with its ground truth.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub true_support: SupportSet,
    /// Length `p`, zero off the support.
    pub true_beta: Vec<f64>,
    pub sigma2: f64,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// The noiseless mean `Xβ`.
    pub fn mean(&self) -> DVector<f64> {
        let mut mu = DVector::zeros(self.n());
        for j in self.true_support.iter() {
            mu.axpy(self.true_beta[j], &self.x.column(j), 1.0);
        }
        mu
    }
}

/// Assembles a dataset from given coefficients. Draws the design, then the
/// noise, from `rng`.
pub fn generate_with_beta<R: Rng + ?Sized>(
    n: usize,
    factor: &FactorHandle,
    support: &SupportSet,
    coefficients: &[f64],
    sigma2: f64,
    rng: &mut R,
) -> Result<Dataset> {
    if !(sigma2 >= 0.0) || !sigma2.is_finite() {
        return Err(Error::InvalidArgument(format!("noise variance {sigma2} must be finite and >= 0")));
    }
    if support.len() != coefficients.len() || support.bound() > factor.dim() {
        return Err(Error::InvalidArgument("support and coefficients disagree".into()));
    }
    let p = factor.dim();
    let mut true_beta = vec![0.0; p];
    for (j, b) in support.iter().zip(coefficients) {
        true_beta[j] = *b;
    }
    let x = sample_design(factor, n, rng);
    let mut data = Dataset {
        x,
        y: DVector::zeros(n),
        true_support: support.clone(),
        true_beta,
        sigma2,
    };
    let sd = sigma2.sqrt();
    let mut y = data.mean();
    for v in y.iter_mut() {
        let e: f64 = rng.sample(StandardNormal);
        *v += sd * e;
    }
    data.y = y;
    Ok(data)
}

/// One replicate: coefficients, then design, then noise, all from `rng`.
pub fn generate_replicate<R: Rng + ?Sized>(
    schedule: &ScheduleEntry,
    factor: &FactorHandle,
    beta: &BetaSpec,
    sigma2: f64,
    placement: Placement,
    rng: &mut R,
) -> Result<Dataset> {
    if factor.dim() != schedule.p {
        return Err(Error::InvalidArgument(format!(
            "structure has dimension {}, schedule needs {}",
            factor.dim(),
            schedule.p
        )));
    }
    let support = place_support(schedule.p, schedule.p0, placement)?;
    let coefficients = sample_beta(beta, schedule.p0, rng);
    generate_with_beta(schedule.n, factor, &support, &coefficients, sigma2, rng)
}
