//! (mu/mu_w, lambda)-CMA-ES with cumulative step-size adaptation, rank-one and
//! rank-mu covariance updates, and restarts with doubled population.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CmaConfig {
    /// Offspring per generation; `4 + floor(3 ln n)` when unset.
    pub population: Option<usize>,
    /// Initial step size; placement uses 0.3 times the scene diagonal when unset.
    pub sigma0: Option<f64>,
    /// Generation budget of each run; a run that exhausts it is restarted.
    pub max_generations: usize,
    /// Stop as soon as a candidate reaches this value.
    pub target: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for CmaConfig {
    fn default() -> Self {
        CmaConfig {
            population: None,
            sigma0: None,
            max_generations: 500,
            target: 0.0,
            restarts: 3,
            seed: 0,
        }
    }
}

impl CmaConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(p) = self.population {
            if p < 4 {
                return Err(Error::InvalidArgument(format!("CMA population {p} must be at least 4")));
            }
        }
        if let Some(s) = self.sigma0 {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::InvalidArgument(format!("CMA sigma0 {s} must be positive")));
            }
        }
        Ok(())
    }

    pub fn default_population(n: usize) -> usize {
        4 + (3.0 * (n as f64).ln()).floor() as usize
    }
}

#[derive(Clone, Debug)]
pub struct CmaResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub generations: usize,
    pub evaluations: usize,
    /// Runs started, the first one included.
    pub runs: usize,
    /// Step size after every generation, across runs.
    pub sigma_trace: Vec<f64>,
}

enum RunEnd {
    Target,
    Budget,
    Stalled,
}

/// Minimize `f` from `x0`. Fails when `f(x0)` is not finite.
pub fn cma_minimize<F>(mut f: F, x0: &[f64], cfg: &CmaConfig) -> Result<CmaResult>
where
    F: FnMut(&[f64]) -> f64,
{
    cfg.validate()?;
    let n = x0.len();
    if n == 0 {
        return Err(Error::InvalidArgument("CMA needs at least one variable".into()));
    }
    let f0 = f(x0);
    if !f0.is_finite() {
        return Err(Error::Numerical(format!("objective at the start point is {f0}")));
    }
    let sigma0 = cfg.sigma0.unwrap_or(0.3);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best = CmaResult {
        x: x0.to_vec(),
        value: f0,
        generations: 0,
        evaluations: 1,
        runs: 0,
        sigma_trace: Vec::new(),
    };
    let mut lambda = cfg.population.unwrap_or_else(|| CmaConfig::default_population(n));
    for run in 0..=cfg.restarts {
        if best.value <= cfg.target {
            break;
        }
        best.runs = run + 1;
        let end = run_once(&mut f, x0, sigma0, lambda, cfg, &mut rng, &mut best);
        match end {
            RunEnd::Target => break,
            RunEnd::Budget | RunEnd::Stalled => lambda *= 2,
        }
    }
    Ok(best)
}

fn run_once<F>(
    f: &mut F,
    x0: &[f64],
    sigma0: f64,
    lambda: usize,
    cfg: &CmaConfig,
    rng: &mut ChaCha8Rng,
    best: &mut CmaResult,
) -> RunEnd
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let nf = n as f64;
    let mu = lambda / 2;
    let raw: Vec<f64> = (0..mu).map(|i| (mu as f64 + 0.5).ln() - ((i + 1) as f64).ln()).collect();
    let wsum: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / wsum).collect();
    let mueff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();

    let cs = (mueff + 2.0) / (nf + mueff + 5.0);
    let ds = 1.0 + 2.0 * (((mueff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + cs;
    let cc = (4.0 + mueff / nf) / (nf + 4.0 + 2.0 * mueff / nf);
    let c1 = 2.0 / ((nf + 1.3).powi(2) + mueff);
    let cmu = (1.0 - c1).min(2.0 * (mueff - 2.0 + 1.0 / mueff) / ((nf + 2.0).powi(2) + mueff));
    let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));

    let mut mean = DVector::from_column_slice(x0);
    let mut sigma = sigma0;
    let mut c = DMatrix::<f64>::identity(n, n);
    let mut b = DMatrix::<f64>::identity(n, n);
    let mut d = DVector::<f64>::from_element(n, 1.0);
    let mut ps = DVector::<f64>::zeros(n);
    let mut pc = DVector::<f64>::zeros(n);
    let history_len = 10 + (30.0 * nf / lambda as f64).ceil() as usize;
    let mut history: Vec<f64> = Vec::new();
    let mut gen_in_run = 0usize;

    loop {
        if gen_in_run >= cfg.max_generations {
            return RunEnd::Budget;
        }
        let mut pop: Vec<(f64, DVector<f64>, DVector<f64>)> = Vec::with_capacity(lambda);
        for _ in 0..lambda {
            let z = DVector::<f64>::from_fn(n, |_, _| StandardNormal.sample(rng));
            let y = &b * d.component_mul(&z);
            let x = &mean + &y * sigma;
            let mut fx = f(x.as_slice());
            best.evaluations += 1;
            if fx.is_nan() {
                fx = f64::INFINITY;
            }
            pop.push((fx, x, y));
        }
        // stable sort keeps sample order among ties
        pop.sort_by(|a, b| a.0.total_cmp(&b.0));
        best.generations += 1;
        gen_in_run += 1;
        if pop[0].0 < best.value {
            best.value = pop[0].0;
            best.x = pop[0].1.as_slice().to_vec();
        }

        let old_mean = mean.clone();
        let mut yw = DVector::<f64>::zeros(n);
        for (w, (_, _, y)) in weights.iter().zip(&pop) {
            yw += y * *w;
        }
        mean = &old_mean + &yw * sigma;

        // C^{-1/2} yw = B D^{-1} B^T yw
        let inv_sqrt = &b * DMatrix::from_diagonal(&d.map(|v| 1.0 / v)) * b.transpose();
        ps = &ps * (1.0 - cs) + (&inv_sqrt * &yw) * (cs * (2.0 - cs) * mueff).sqrt();
        let ps_norm = ps.norm();
        let hsig_lhs = ps_norm / (1.0 - (1.0 - cs).powi(2 * gen_in_run as i32)).sqrt() / chi_n;
        let hsig = if hsig_lhs < 1.4 + 2.0 / (nf + 1.0) { 1.0 } else { 0.0 };
        pc = &pc * (1.0 - cc) + &yw * (hsig * (cc * (2.0 - cc) * mueff).sqrt());

        let mut rank_mu = DMatrix::<f64>::zeros(n, n);
        for (w, (_, _, y)) in weights.iter().zip(&pop) {
            rank_mu += (y * y.transpose()) * *w;
        }
        let dh = (1.0 - hsig) * cc * (2.0 - cc);
        c = &c * (1.0 - c1 - cmu) + (&pc * pc.transpose() + &c * dh) * c1 + rank_mu * cmu;
        c = (&c + c.transpose()) * 0.5;

        sigma *= ((cs / ds) * (ps_norm / chi_n - 1.0)).exp();
        // flat fitness: the best and the 70th-percentile candidate tie
        let k = ((0.7 * lambda as f64).ceil() as usize).min(lambda - 1);
        if pop[0].0 == pop[k].0 {
            sigma *= (0.2 + cs / ds).exp();
        }
        if !sigma.is_finite() || sigma > 1e12 * sigma0 {
            return RunEnd::Stalled;
        }
        best.sigma_trace.push(sigma);

        if best.value <= cfg.target {
            return RunEnd::Target;
        }

        let eig = SymmetricEigen::new(c.clone());
        b = eig.eigenvectors;
        d = eig.eigenvalues.map(|v| v.max(1e-300).sqrt());
        let dmax = d.max();
        let dmin = d.min();

        history.push(pop[0].0);
        if history.len() > history_len {
            history.remove(0);
        }
        let spread = |v: &[f64]| {
            let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            hi - lo
        };
        let gen_values: Vec<f64> = pop.iter().map(|p| p.0).collect();
        let flat = history.len() == history_len && spread(&history) == 0.0 && spread(&gen_values) == 0.0;
        let tiny_step = sigma * dmax < 1e-12 * sigma0;
        let ill = dmax / dmin > 1e7;
        if flat || tiny_step || ill || gen_in_run > 100 + 50 * (n + 3) * (n + 3) / lambda.max(1) {
            return RunEnd::Stalled;
        }
    }
}
