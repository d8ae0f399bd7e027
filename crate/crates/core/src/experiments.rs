//! Simulation harness: block maxima, QQ data, the two-analyst disk example
//! and the Monte Carlo comparison of classical and T-method extrapolation.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{ContinuousLaw, DistributionSpec};
use crate::error::{Error, Result};
use crate::fitting::{fit_classical, fit_gumbel, fit_tmethod, FitConfig, FitResult};
use crate::rng::{derive_seed, stream_rng};
use crate::transforms::FamilyKind;

pub const SUMMARY_FORMAT: &str = "tmethod.mc-summary/1";
pub const DISK_FORMAT: &str = "tmethod.disk-report/1";
pub const MAX_FAILURE_FRACTION: f64 = 0.1;
/// Master seed used when none is given.
pub const DEFAULT_SEED: u64 = 2024;

/// `m` maxima of `n` fresh draws each.
pub fn block_maxima<L, R>(law: &L, n: usize, m: usize, rng: &mut R) -> Result<Vec<f64>>
where
    L: ContinuousLaw,
    R: Rng + ?Sized,
{
    if n == 0 || m == 0 {
        return Err(Error::InvalidArgument(
            "block size and number of blocks must be positive".into(),
        ));
    }
    (0..m)
        .map(|_| {
            let block = law.sample(rng, n)?;
            Ok(block.into_iter().fold(f64::NEG_INFINITY, f64::max))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QqPoint {
    pub empirical: f64,
    pub model: f64,
    /// Hazen position `(i - 0.5)/m`.
    pub plotting_position: f64,
    pub exceedance: f64,
}

/// Sorted data against model quantiles at the Hazen plotting positions.
pub fn qq_points(data: &[f64], fit: &FitResult) -> Result<Vec<QqPoint>> {
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, empirical)| {
            let exceedance = (m - i as f64 - 0.5) / m;
            Ok(QqPoint {
                empirical,
                model: fit.model.extrapolate_quantile(exceedance)?,
                plotting_position: (i as f64 + 0.5) / m,
                exceedance,
            })
        })
        .collect()
}

/// Exceedance probability of the block maximum: `1 - F(x)^n`.
pub fn block_exceedance<L: ContinuousLaw + ?Sized>(law: &L, n: usize, x: f64) -> f64 {
    -(n as f64 * law.ln_cdf(x)).exp_m1()
}

/// The `x` with `1 - F(x)^n = p`.
pub fn ideal_quantile<L: ContinuousLaw + ?Sized>(law: &L, n: usize, p: f64) -> Result<f64> {
    crate::distributions::check_probability("exceedance level", p)?;
    law.upper_quantile(-((-p).ln_1p() / n as f64).exp_m1())
}

pub const DISK_BLOCK: usize = 10;
pub const DISK_BOXES: usize = 100;
pub const DISK_PROBE_RADIUS: f64 = 1.91;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiskPoint {
    pub radius: f64,
    pub exact: f64,
    /// GEV fitted to the radii.
    pub radius_fit: Option<f64>,
    /// Gumbel fitted to the areas, read at `π r²`.
    pub area_fit: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiskReport {
    pub format: String,
    pub seed: u64,
    pub radius_fit: Option<FitResult>,
    pub radius_fit_error: Option<String>,
    pub area_fit: Option<FitResult>,
    pub area_fit_error: Option<String>,
    pub points: Vec<DiskPoint>,
}

impl DiskReport {
    pub fn at(&self, radius: f64) -> Option<&DiskPoint> {
        self.points.iter().find(|p| p.radius == radius)
    }
}

/// Radii at which the disk example is reported.
pub fn disk_radius_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (0..=12).map(|i| 0.8 + 0.1 * i as f64).collect();
    grid.push(DISK_PROBE_RADIUS);
    grid.sort_by(f64::total_cmp);
    grid
}

/// Largest of ten unit-mean disk areas in each of a hundred boxes, analysed
/// once as radii with a free-shape GEV and once as areas with a Gumbel law.
pub fn run_disk_example(seed: u64) -> DiskReport {
    let areas_law = DistributionSpec::disk_area();
    let mut rng = stream_rng(seed, 0);
    let config = FitConfig {
        seed: derive_seed(seed, 1),
        ..FitConfig::default()
    };
    let areas = block_maxima(&areas_law, DISK_BLOCK, DISK_BOXES, &mut rng)
        .expect("disk area law samples without error");
    let radii: Vec<f64> = areas.iter().map(|a| (a / PI).sqrt()).collect();

    let (radius_fit, radius_fit_error) = split(fit_classical(&radii, &config));
    let (area_fit, area_fit_error) = split(fit_gumbel(&areas, &config));
    let radius_law = DistributionSpec::disk_radius();
    let points = disk_radius_grid()
        .into_iter()
        .map(|radius| DiskPoint {
            radius,
            exact: block_exceedance(&radius_law, DISK_BLOCK, radius),
            radius_fit: radius_fit.as_ref().map(|f| f.model.exceedance(radius)),
            area_fit: area_fit
                .as_ref()
                .map(|f| f.model.exceedance(PI * radius * radius)),
        })
        .collect();
    DiskReport {
        format: DISK_FORMAT.into(),
        seed,
        radius_fit,
        radius_fit_error,
        area_fit,
        area_fit_error,
        points,
    }
}

fn split(r: Result<FitResult>) -> (Option<FitResult>, Option<String>) {
    match r {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassicalModel {
    /// GEV with free shape.
    Gev,
    /// GEV with the shape pinned at zero.
    Gumbel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dist: DistributionSpec,
    pub block_size_n: usize,
    pub sample_size_m: usize,
    pub mc_runs: usize,
    pub exceedance_levels: Vec<f64>,
    pub family_kind: FamilyKind,
    pub master_seed: u64,
    pub classical_model: ClassicalModel,
    pub fit: FitConfig,
    /// Worker cap; `None` uses the global pool.
    pub threads: Option<usize>,
}

pub const DEFAULT_LEVELS: [f64; 5] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];

impl ExperimentConfig {
    pub fn new(dist: DistributionSpec, family_kind: FamilyKind, master_seed: u64) -> Self {
        Self {
            dist,
            block_size_n: 100,
            sample_size_m: 1000,
            mc_runs: 100,
            exceedance_levels: DEFAULT_LEVELS.to_vec(),
            family_kind,
            master_seed,
            classical_model: ClassicalModel::Gev,
            fit: FitConfig::default(),
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.block_size_n == 0 || self.sample_size_m == 0 || self.mc_runs == 0 {
            return Err(Error::InvalidArgument(
                "block size, sample size and run count must be positive".into(),
            ));
        }
        if self.exceedance_levels.is_empty() {
            return Err(Error::InvalidArgument("no exceedance levels".into()));
        }
        for &p in &self.exceedance_levels {
            crate::distributions::check_probability("exceedance level", p)?;
        }
        if self.exceedance_levels.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidArgument(
                "exceedance levels must be strictly decreasing".into(),
            ));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidArgument("threads must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Classical,
    Tmethod,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Classical => "classical",
            Method::Tmethod => "tmethod",
        }
    }
}

/// Extrapolated quantiles of one run, one entry per level; `None` when the
/// method failed on that run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: usize,
    pub classical: Option<Vec<f64>>,
    pub classical_error: Option<String>,
    pub tmethod: Option<Vec<f64>>,
    pub tmethod_error: Option<String>,
    pub beta: Option<f64>,
}

/// One `(run_id, method, level, quantile)` row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub run_id: usize,
    pub method: Method,
    pub level: f64,
    pub quantile: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodStats {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: f64,
    pub ideal_quantile: f64,
    pub mean_quantile_classical: f64,
    pub std_quantile_classical: f64,
    pub mean_quantile_tmethod: f64,
    pub std_quantile_tmethod: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypicalRun {
    pub run_id: usize,
    pub criterion: String,
    pub classical: Vec<f64>,
    pub tmethod: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub format: String,
    pub dist: String,
    pub block_size_n: usize,
    pub sample_size_m: usize,
    pub mc_runs: usize,
    pub family: FamilyKind,
    pub classical_model: ClassicalModel,
    pub master_seed: u64,
    pub levels: Vec<LevelSummary>,
    /// Runs where both fits failed; these are dropped.
    pub n_failed_fits: usize,
    pub n_failed_classical: usize,
    pub n_failed_tmethod: usize,
    pub beta: Option<MethodStats>,
    pub typical_run: Option<TypicalRun>,
}

impl McSummary {
    pub fn level(&self, level: f64) -> Option<&LevelSummary> {
        self.levels.iter().find(|l| l.level == level)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McOutcome {
    pub summary: McSummary,
    pub runs: Vec<RunRecord>,
}

impl McOutcome {
    pub fn rows(&self, levels: &[f64]) -> Vec<RunRow> {
        let mut rows = Vec::new();
        for run in &self.runs {
            for (method, values) in [
                (Method::Classical, &run.classical),
                (Method::Tmethod, &run.tmethod),
            ] {
                if let Some(values) = values {
                    for (&level, &quantile) in levels.iter().zip(values) {
                        rows.push(RunRow {
                            run_id: run.run_id,
                            method,
                            level,
                            quantile,
                        });
                    }
                }
            }
        }
        rows
    }
}

/// Sample and fit settings of run `run_id`.
fn run_inputs(config: &ExperimentConfig, run_id: usize) -> Result<(Vec<f64>, FitConfig)> {
    let mut rng = stream_rng(config.master_seed, run_id as u64);
    let data = block_maxima(
        &config.dist,
        config.block_size_n,
        config.sample_size_m,
        &mut rng,
    )?;
    let fit_config = FitConfig {
        seed: derive_seed(config.master_seed, run_id as u64),
        ..config.fit
    };
    Ok((data, fit_config))
}

fn classical_fit(config: &ExperimentConfig, data: &[f64], fit: &FitConfig) -> Result<FitResult> {
    match config.classical_model {
        ClassicalModel::Gev => fit_classical(data, fit),
        ClassicalModel::Gumbel => fit_gumbel(data, fit),
    }
}

/// QQ data of both fits for one run, regenerated from the run's seeds.
pub fn run_qq(config: &ExperimentConfig, run_id: usize) -> Result<(Vec<QqPoint>, Vec<QqPoint>)> {
    config.validate()?;
    let (data, fit_config) = run_inputs(config, run_id)?;
    let classical = classical_fit(config, &data, &fit_config)?;
    let tmethod = fit_tmethod(&data, config.family_kind, &fit_config)?;
    Ok((qq_points(&data, &classical)?, qq_points(&data, &tmethod)?))
}

fn one_run(config: &ExperimentConfig, run_id: usize) -> Result<RunRecord> {
    let (data, fit_config) = run_inputs(config, run_id)?;
    let extrapolate =
        |fit: Result<FitResult>| -> (Option<Vec<f64>>, Option<String>, Option<FitResult>) {
            let fit = match fit {
                Ok(f) => f,
                Err(e) => return (None, Some(e.to_string()), None),
            };
            match config
                .exceedance_levels
                .iter()
                .map(|&p| fit.extrapolate_quantile(p))
                .collect::<Result<Vec<f64>>>()
            {
                Ok(q) => (Some(q), None, Some(fit)),
                Err(e) => (None, Some(e.to_string()), None),
            }
        };
    let (classical, classical_error, _) = extrapolate(classical_fit(config, &data, &fit_config));
    let (tmethod, tmethod_error, tfit) =
        extrapolate(fit_tmethod(&data, config.family_kind, &fit_config));
    let beta = tfit
        .and_then(|f| f.model.tmethod().copied())
        .filter(|p| p.family.kind != FamilyKind::Identity)
        .map(|p| p.family.beta);
    Ok(RunRecord {
        run_id,
        classical,
        classical_error,
        tmethod,
        tmethod_error,
        beta,
    })
}

fn stats(values: impl Iterator<Item = f64>) -> MethodStats {
    let values: Vec<f64> = values.collect();
    let count = values.len();
    if count == 0 {
        return MethodStats {
            mean: f64::NAN,
            std: f64::NAN,
            count,
        };
    }
    let mean = values.iter().sum::<f64>() / count as f64;
    let std = if count > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
    } else {
        0.0
    };
    MethodStats { mean, std, count }
}

/// Fits both models to `mc_runs` independent samples and aggregates their
/// extrapolated quantiles per level. Results depend only on the
/// configuration, not on the number of worker threads.
pub fn run_mc_comparison(config: &ExperimentConfig) -> Result<McOutcome> {
    config.validate()?;
    let work = || -> Result<Vec<RunRecord>> {
        (0..config.mc_runs)
            .into_par_iter()
            .map(|run_id| one_run(config, run_id))
            .collect()
    };
    let runs = match config.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Experiment(e.to_string()))?
            .install(work)?,
        None => work()?,
    };

    let n_failed_classical = runs.iter().filter(|r| r.classical.is_none()).count();
    let n_failed_tmethod = runs.iter().filter(|r| r.tmethod.is_none()).count();
    let n_failed_fits = runs
        .iter()
        .filter(|r| r.classical.is_none() && r.tmethod.is_none())
        .count();
    if n_failed_fits as f64 > MAX_FAILURE_FRACTION * config.mc_runs as f64 {
        let first = runs
            .iter()
            .find_map(|r| r.tmethod_error.clone().or(r.classical_error.clone()))
            .unwrap_or_default();
        return Err(Error::Experiment(format!(
            "{n_failed_fits} of {} runs failed both fits (first error: {first})",
            config.mc_runs
        )));
    }

    let mut levels = Vec::with_capacity(config.exceedance_levels.len());
    for (k, &level) in config.exceedance_levels.iter().enumerate() {
        let classical = stats(
            runs.iter()
                .filter_map(|r| r.classical.as_ref().map(|q| q[k])),
        );
        let tmethod = stats(runs.iter().filter_map(|r| r.tmethod.as_ref().map(|q| q[k])));
        levels.push(LevelSummary {
            level,
            ideal_quantile: ideal_quantile(&config.dist, config.block_size_n, level)?,
            mean_quantile_classical: classical.mean,
            std_quantile_classical: classical.std,
            mean_quantile_tmethod: tmethod.mean,
            std_quantile_tmethod: tmethod.std,
        });
    }
    let betas: Vec<f64> = runs.iter().filter_map(|r| r.beta).collect();
    let beta = (!betas.is_empty()).then(|| stats(betas.into_iter()));
    let typical_run = typical_run(&runs, levels.last().map(|l| l.ideal_quantile));

    Ok(McOutcome {
        summary: McSummary {
            format: SUMMARY_FORMAT.into(),
            dist: config.dist.to_string(),
            block_size_n: config.block_size_n,
            sample_size_m: config.sample_size_m,
            mc_runs: config.mc_runs,
            family: config.family_kind,
            classical_model: config.classical_model,
            master_seed: config.master_seed,
            levels,
            n_failed_fits,
            n_failed_classical,
            n_failed_tmethod,
            beta,
            typical_run,
        },
        runs,
    })
}

/// Run whose T-method error at the deepest level is the median among runs
/// where both methods succeeded.
fn typical_run(runs: &[RunRecord], ideal: Option<f64>) -> Option<TypicalRun> {
    let ideal = ideal?;
    let mut complete: Vec<(f64, &RunRecord)> = runs
        .iter()
        .filter_map(|r| {
            let t = r.tmethod.as_ref()?;
            r.classical.as_ref()?;
            Some(((t.last()? - ideal).abs(), r))
        })
        .collect();
    if complete.is_empty() {
        return None;
    }
    complete.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.run_id.cmp(&b.1.run_id)));
    let (_, run) = complete[(complete.len() - 1) / 2];
    Some(TypicalRun {
        run_id: run.run_id,
        criterion: "median absolute T-method error at the deepest level".into(),
        classical: run.classical.clone()?,
        tmethod: run.tmethod.clone()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitting::{FitResult, FittedModel};
    use crate::gev::GevParams;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fake_fit(model: FittedModel) -> FitResult {
        FitResult {
            model,
            loglik: 0.0,
            converged: true,
            iterations: 0,
            n_restarts_used: 1,
            sample_size: 1,
            initial_logliks: vec![],
            warnings: vec![],
        }
    }

    #[test]
    fn block_maxima_of_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = DistributionSpec::exponential();
        let maxima = block_maxima(&d, 100, 10_000, &mut rng).unwrap();
        let harmonic: f64 = (1..=100).map(|k| 1.0 / k as f64).sum();
        let mean = maxima.iter().sum::<f64>() / maxima.len() as f64;
        assert!((harmonic - 5.187_377_517_639_621).abs() < 1e-12);
        assert!((mean - harmonic).abs() < 0.05, "{mean}");

        let mut sorted = maxima.clone();
        sorted.sort_by(f64::total_cmp);
        let m = sorted.len() as f64;
        let ks = sorted
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let c = (100.0 * (-(-x).exp()).ln_1p()).exp();
                (c - i as f64 / m).abs().max(((i + 1) as f64 / m - c).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.02, "{ks}");
    }

    #[test]
    fn block_of_one_is_a_plain_sample() {
        let d = DistributionSpec::normal();
        let a = block_maxima(&d, 1, 50, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = d.sample(&mut ChaCha8Rng::seed_from_u64(4), 50).unwrap();
        assert_eq!(a, b);
        assert!(block_maxima(&d, 0, 5, &mut ChaCha8Rng::seed_from_u64(4)).is_err());
    }

    #[test]
    fn qq_positions() {
        let fit = fake_fit(FittedModel::Classical(GevParams::gumbel(1.0, 0.0).unwrap()));
        let data: Vec<f64> = (0..1000).map(|i| i as f64 / 100.0).collect();
        let qq = qq_points(&data, &fit).unwrap();
        let last = qq.last().unwrap();
        assert!((last.plotting_position - 0.9995).abs() < 1e-15);
        assert!((last.exceedance - 5e-4).abs() < 1e-15);
        let single = qq_points(&[2.0], &fit).unwrap();
        assert_eq!(single[0].plotting_position, 0.5);
        assert!((single[0].model - -(-(0.5f64).ln()).ln()).abs() < 1e-12);
    }

    #[test]
    fn qq_of_model_draws_hugs_the_diagonal() {
        let params = GevParams::gumbel(1.0, 0.0).unwrap();
        let fit = fake_fit(FittedModel::Classical(params));
        let data = DistributionSpec::gumbel()
            .sample(&mut ChaCha8Rng::seed_from_u64(9), 10_000)
            .unwrap();
        let qq = qq_points(&data, &fit).unwrap();
        // Local quantile-density scale at u = 0.999: 1 / (m g(G^{-1}(u))).
        let x = params.quantile(0.999).unwrap();
        let density = params.logpdf(x).exp();
        let scale = (0.999f64 * 0.001 / 10_000.0).sqrt() / density;
        let worst = qq
            .iter()
            .filter(|p| p.plotting_position <= 0.999)
            .map(|p| (p.empirical - p.model).abs())
            .fold(0.0, f64::max);
        assert!(worst < 3.0 * scale, "{worst} vs {scale}");
    }

    #[test]
    fn ideal_quantile_of_exponential_blocks() {
        let d = DistributionSpec::exponential();
        let p: f64 = 1e-3;
        let q = ideal_quantile(&d, 100, p).unwrap();
        let oracle = -(-(1.0 - p).powf(0.01)).ln_1p();
        assert!((q / oracle - 1.0).abs() < 1e-12);
        assert!((block_exceedance(&d, 100, q) - p).abs() < 1e-15);
    }

    #[test]
    fn disk_exact_exceedance() {
        let r = DISK_PROBE_RADIUS;
        let oracle = 1.0 - (1.0 - (-PI * r * r).exp()).powi(10);
        let exact = block_exceedance(&DistributionSpec::disk_radius(), 10, r);
        assert!((exact / oracle - 1.0).abs() < 1e-9);
        assert!((exact / 1e-4 - 1.0).abs() < 0.1);
        assert!(disk_radius_grid().contains(&r));
    }

    #[test]
    fn config_validation() {
        let mut c = ExperimentConfig::new(DistributionSpec::normal(), FamilyKind::Power, 1);
        assert!(c.validate().is_ok());
        c.exceedance_levels = vec![1e-3, 1e-2];
        assert!(c.validate().is_err());
        c.exceedance_levels = vec![1.0];
        assert!(c.validate().is_err());
        c.exceedance_levels = vec![0.1];
        c.mc_runs = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn typical_run_is_the_median() {
        let runs: Vec<RunRecord> = [3.0, 1.0, 2.0]
            .iter()
            .enumerate()
            .map(|(i, &e)| RunRecord {
                run_id: i,
                classical: Some(vec![0.0]),
                classical_error: None,
                tmethod: Some(vec![10.0 + e]),
                tmethod_error: None,
                beta: None,
            })
            .collect();
        assert_eq!(typical_run(&runs, Some(10.0)).unwrap().run_id, 2);
    }

    #[test]
    fn failed_runs_abort_the_experiment() {
        // Negative normal maxima are outside the log-power domain.
        let mut c = ExperimentConfig::new(DistributionSpec::normal(), FamilyKind::LogPower, 3);
        c.block_size_n = 1;
        c.sample_size_m = 30;
        c.mc_runs = 4;
        c.classical_model = ClassicalModel::Gumbel;
        c.fit.max_iterations = 1;
        match run_mc_comparison(&c) {
            Err(Error::Experiment(msg)) => assert!(msg.contains("4 of 4"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
