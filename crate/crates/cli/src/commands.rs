use std::path::Path;

use tmethod::convergence::convergence_report;
use tmethod::experiments::{
    block_maxima, qq_points, run_disk_example, run_mc_comparison, run_qq, ExperimentConfig,
    QqPoint, DEFAULT_LEVELS, DEFAULT_SEED,
};
use tmethod::rng::stream_rng;
use tmethod::{
    fit_classical, fit_gumbel, fit_tmethod, suggest_family, DistributionSpec, Error, FamilyKind,
    FitConfig, FitResult,
};

use crate::data::parse_data_file;
use crate::error::CliError;
use crate::output::{
    cell, write_csv, write_json, CandidateRecord, FitRecord, SuggestionRecord, CONVERGENCE_COLUMNS,
    CONVERGENCE_FORMAT, DISK_COLUMNS, DISK_POINTS_FORMAT, QQ_COLUMNS, QQ_FORMAT, RUNS_COLUMNS,
    RUNS_FORMAT, SUGGESTION_FORMAT,
};
use crate::{
    ConvergenceArgs, ExperimentArgs, FitArgs, FitFamily, FitOptions, Preset, SampleSource,
    SuggestArgs, TableFormat,
};

/// Defaults, then the config file, then individual flags.
fn fit_config(options: &FitOptions, seed: Option<u64>) -> Result<FitConfig, CliError> {
    let mut config = match &options.fit_config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("bad fit config {}: {e}", path.display())))?
        }
        None => FitConfig {
            seed: DEFAULT_SEED,
            ..FitConfig::default()
        },
    };
    if let Some(v) = options.restarts {
        config.restarts = v;
    }
    if let Some(v) = options.tolerance {
        config.tolerance = v;
    }
    if let Some(v) = options.max_iterations {
        config.max_iterations = v;
    }
    if let Some(v) = options.jitter {
        config.jitter = v;
    }
    if let Some(v) = seed {
        config.seed = v;
    }
    Ok(config)
}

fn load_sample(source: &SampleSource, seed: u64) -> Result<(Vec<f64>, String), CliError> {
    match (&source.input, &source.dist) {
        (Some(path), _) => Ok((parse_data_file(path)?, path.display().to_string())),
        (None, Some(dist)) => {
            let data = block_maxima(dist, source.n, source.m, &mut stream_rng(seed, 1))?;
            Ok((
                data,
                format!("{dist} n={} m={} seed={seed}", source.n, source.m),
            ))
        }
        (None, None) => Err(CliError::Usage(
            "a sample is required: pass --input PATH or --dist LAW".into(),
        )),
    }
}

fn check_levels(levels: &[f64]) -> Result<(), CliError> {
    if levels.is_empty() {
        return Err(CliError::Usage("at least one level is required".into()));
    }
    match levels.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
        Some(p) => Err(CliError::Usage(format!(
            "exceedance level {p} is outside (0, 1)"
        ))),
        None => Ok(()),
    }
}

fn fit_one(data: &[f64], family: FitFamily, config: &FitConfig) -> tmethod::Result<FitResult> {
    match family {
        FitFamily::Gev => fit_classical(data, config),
        FitFamily::Gumbel => fit_gumbel(data, config),
        FitFamily::Identity => fit_tmethod(data, FamilyKind::Identity, config),
        FitFamily::Power => fit_tmethod(data, FamilyKind::Power, config),
        FitFamily::LogPower => fit_tmethod(data, FamilyKind::LogPower, config),
        FitFamily::Auto => unreachable!("resolved before fitting"),
    }
}

/// Best successful fit by likelihood; failing that, the best unconverged
/// one as a `NotConverged` error; failing that, the first error.
fn pick(results: Vec<(FamilyKind, tmethod::Result<FitResult>)>) -> tmethod::Result<FitResult> {
    let by_loglik = |a: &FitResult, b: &FitResult| a.loglik.total_cmp(&b.loglik);
    let mut ok: Option<FitResult> = None;
    let mut stalled: Option<FitResult> = None;
    let mut first_error = None;
    for (_, r) in results {
        match r {
            Ok(f) => {
                if ok.as_ref().is_none_or(|b| by_loglik(&f, b).is_gt()) {
                    ok = Some(f);
                }
            }
            Err(Error::NotConverged { best }) => {
                if stalled.as_ref().is_none_or(|b| by_loglik(&best, b).is_gt()) {
                    stalled = Some(*best);
                }
            }
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    match (ok, stalled, first_error) {
        (Some(f), _, _) => Ok(f),
        (None, Some(best), _) => Err(Error::NotConverged {
            best: Box::new(best),
        }),
        (None, None, Some(e)) => Err(e),
        (None, None, None) => Err(Error::NotApplicable("no candidate family".into())),
    }
}

pub fn fit(args: FitArgs) -> Result<(), CliError> {
    check_levels(&args.levels)?;
    let seed = args.seed.value();
    let config = fit_config(&args.options, args.seed.seed)?;
    let (data, source) = load_sample(&args.source, seed)?;

    let (result, suggestion, candidates) = if args.family == FitFamily::Auto {
        let suggestion = suggest_family(&data)?;
        if suggestion.candidates.is_empty() {
            return Err(Error::NotApplicable(format!(
                "the tail looks heavier than any Gumbel-domain law ({:?})",
                suggestion.diagnosis
            ))
            .into());
        }
        let results: Vec<(FamilyKind, tmethod::Result<FitResult>)> = suggestion
            .candidates
            .iter()
            .map(|&k| (k, fit_tmethod(&data, k, &config)))
            .collect();
        let candidates = results
            .iter()
            .map(|(family, r)| match r {
                Ok(f) => CandidateRecord {
                    family: *family,
                    loglik: Some(f.loglik),
                    converged: true,
                    error: None,
                },
                Err(Error::NotConverged { best }) => CandidateRecord {
                    family: *family,
                    loglik: Some(best.loglik),
                    converged: false,
                    error: Some("not converged".into()),
                },
                Err(e) => CandidateRecord {
                    family: *family,
                    loglik: None,
                    converged: false,
                    error: Some(e.to_string()),
                },
            })
            .collect();
        (pick(results), Some(suggestion), Some(candidates))
    } else {
        (fit_one(&data, args.family, &config), None, None)
    };

    let record = |fit: &FitResult| {
        let mut r = FitRecord::new(source.clone(), fit, &args.levels);
        r.suggestion = suggestion.clone();
        r.candidates = candidates.clone();
        r
    };
    match result {
        Ok(fit) => {
            write_json(args.out.as_deref(), &record(&fit))?;
            if let Some(path) = &args.qq {
                let label = if fit.model.gev().is_some() {
                    "classical"
                } else {
                    "tmethod"
                };
                write_qq(path, &[(label, qq_points(&data, &fit)?)])?;
            }
            Ok(())
        }
        Err(Error::NotConverged { best }) => {
            write_json(args.out.as_deref(), &record(&best))?;
            Err(Error::NotConverged { best }.into())
        }
        Err(e) => Err(e.into()),
    }
}

fn write_qq(path: &Path, tables: &[(&str, Vec<QqPoint>)]) -> Result<(), CliError> {
    let rows = tables.iter().flat_map(|(method, points)| {
        points.iter().map(move |p| {
            vec![
                method.to_string(),
                p.empirical.to_string(),
                p.model.to_string(),
                p.plotting_position.to_string(),
                p.exceedance.to_string(),
            ]
        })
    });
    write_csv(Some(path), QQ_FORMAT, &QQ_COLUMNS, rows)
}

pub fn convergence(args: ConvergenceArgs) -> Result<(), CliError> {
    if args.n.is_empty() {
        return Err(CliError::Usage(
            "at least one block size is required".into(),
        ));
    }
    let reports = args
        .n
        .iter()
        .map(|&n| convergence_report(&args.dist, n))
        .collect::<tmethod::Result<Vec<_>>>()?;
    match args.format {
        TableFormat::Json => write_json(
            args.out.as_deref(),
            &serde_json::json!({
                "format": CONVERGENCE_FORMAT,
                "dist": args.dist.to_string(),
                "rows": reports,
            }),
        ),
        TableFormat::Csv => write_csv(
            args.out.as_deref(),
            CONVERGENCE_FORMAT,
            &CONVERGENCE_COLUMNS,
            reports.iter().map(|r| {
                vec![
                    r.n.to_string(),
                    r.a_n.to_string(),
                    r.b_n.to_string(),
                    r.w_n.to_string(),
                    r.d_n.to_string(),
                    cell(r.closed_form_a_n),
                    cell(r.closed_form_b_n),
                    cell(r.closed_form_w_n),
                ]
            }),
        ),
    }
}

fn preset_setup(preset: Preset) -> Option<(DistributionSpec, FamilyKind)> {
    match preset {
        Preset::Fig1Disks => None,
        Preset::Fig2Normal => Some((DistributionSpec::normal(), FamilyKind::Power)),
        Preset::Fig2Lognormal => Some((DistributionSpec::lognormal(), FamilyKind::LogPower)),
        Preset::SuppExponential => Some((DistributionSpec::exponential(), FamilyKind::Power)),
    }
}

pub fn experiment(args: ExperimentArgs) -> Result<(), CliError> {
    let seed = args.seed.value();
    if args.preset == Some(Preset::Fig1Disks) {
        if args.dist.is_some()
            || args.family.is_some()
            || args.n.is_some()
            || args.m.is_some()
            || args.levels.is_some()
            || args.runs_csv.is_some()
        {
            return Err(CliError::Usage(
                "fig1-disks fixes its own law, sizes and grid; only --seed, --out and --table-csv apply"
                    .into(),
            ));
        }
        let report = run_disk_example(seed);
        write_json(args.out.as_deref(), &report)?;
        if let Some(path) = &args.table_csv {
            let rows = report.points.iter().map(|p| {
                vec![
                    p.radius.to_string(),
                    p.exact.to_string(),
                    cell(p.radius_fit),
                    cell(p.area_fit),
                ]
            });
            write_csv(Some(path), DISK_POINTS_FORMAT, &DISK_COLUMNS, rows)?;
        }
        return Ok(());
    }

    let preset = args.preset.and_then(preset_setup);
    let dist = args
        .dist
        .or(preset.map(|p| p.0))
        .ok_or_else(|| CliError::Usage("experiment requires --preset or --dist".into()))?;
    let family = args
        .family
        .map(FamilyKind::from)
        .or(preset.map(|p| p.1))
        .ok_or_else(|| {
            CliError::Usage("--dist needs --family (identity, power, log-power)".into())
        })?;
    let levels = args
        .levels
        .clone()
        .unwrap_or_else(|| DEFAULT_LEVELS.to_vec());
    check_levels(&levels)?;

    let mut config = ExperimentConfig::new(dist, family, seed);
    config.block_size_n = args.n.unwrap_or(100);
    config.sample_size_m = args.m.unwrap_or(1000);
    config.mc_runs = args.runs;
    config.exceedance_levels = levels.clone();
    config.classical_model = args.classical.into();
    config.fit = fit_config(&args.options, None)?;
    config.threads = args.threads;

    let outcome = run_mc_comparison(&config)?;
    write_json(args.out.as_deref(), &outcome.summary)?;
    if let Some(path) = &args.runs_csv {
        let rows = outcome.rows(&levels).into_iter().map(|r| {
            vec![
                r.run_id.to_string(),
                r.method.as_str().to_string(),
                r.level.to_string(),
                r.quantile.to_string(),
            ]
        });
        write_csv(Some(path), RUNS_FORMAT, &RUNS_COLUMNS, rows)?;
    }
    if let Some(path) = &args.table_csv {
        let typical = outcome
            .summary
            .typical_run
            .as_ref()
            .ok_or_else(|| Error::Experiment("no run succeeded with both methods".into()))?;
        let (classical, tmethod) = run_qq(&config, typical.run_id)?;
        write_qq(path, &[("classical", classical), ("tmethod", tmethod)])?;
    }
    Ok(())
}

pub fn suggest(args: SuggestArgs) -> Result<(), CliError> {
    let (data, source) = load_sample(&args.source, args.seed.value())?;
    let record = SuggestionRecord {
        format: SUGGESTION_FORMAT,
        source,
        sample_size: data.len(),
        suggestion: suggest_family(&data)?,
    };
    write_json(args.out.as_deref(), &record)
}
