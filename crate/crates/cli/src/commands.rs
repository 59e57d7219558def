use std::fs;
use std::io::Write;

use modcma::benchmarks::{suite_problem, Problem};
use modcma::configuration::{ConfigurationVector, SearchSpace, NUM_MODULES};
use modcma::es::RunOptions;
use modcma::evaluation::{CachedEvaluator, FitnessSummary, ResultsCache};
use modcma::ga::{ga_run, GAOptions};
use modcma::seed;

use crate::{BruteforceArgs, CliError, ExperimentArgs, GaArgs, RunArgs, SpaceArgs};

const RUN_STREAM: u64 = 1;
const GA_STREAM: u64 = 2;

/// First ES seed of every batch in an experiment; run `i` uses `+ i`.
pub(crate) fn run_seed_base(experiment_seed: u64) -> u64 {
    seed::derive(experiment_seed, &[RUN_STREAM])
}

pub(crate) fn format_ert(ert: Option<f64>) -> String {
    ert.map_or_else(|| "NA".to_string(), |e| e.to_string())
}

pub(crate) fn parse_space(args: &SpaceArgs) -> Result<SearchSpace, CliError> {
    let base = ConfigurationVector::decode(&args.base)?;
    if args.free.is_empty() {
        return Ok(SearchSpace::with_free_genes(
            base,
            &(0..NUM_MODULES).collect::<Vec<_>>(),
        ));
    }
    let mut free = Vec::with_capacity(args.free.len());
    for &p in &args.free {
        if !(1..=NUM_MODULES).contains(&p) {
            return Err(CliError::Usage(format!(
                "--free position {p} is outside 1-{NUM_MODULES}"
            )));
        }
        free.push(p - 1);
    }
    Ok(SearchSpace::with_free_genes(base, &free))
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {jobs} workers: {e}")))
}

fn open_cache(exp: &ExperimentArgs) -> Result<ResultsCache, CliError> {
    Ok(match &exp.cache {
        Some(path) => ResultsCache::open(path)?,
        None => ResultsCache::in_memory(),
    })
}

struct Experiment {
    problem: Problem,
    options: RunOptions,
}

fn experiment(exp: &ExperimentArgs) -> Result<Experiment, CliError> {
    if exp.runs == 0 {
        return Err(CliError::Usage("--runs must be at least 1".into()));
    }
    let problem = suite_problem(exp.seed, &exp.function, exp.dim)?;
    let budget = exp.budget.unwrap_or_else(|| problem.default_budget());
    if budget == 0 {
        return Err(CliError::Usage("--budget must be at least 1".into()));
    }
    let options = RunOptions::new(budget, run_seed_base(exp.seed)).with_target(exp.target);
    Ok(Experiment { problem, options })
}

pub(crate) const SUMMARY_HEADER: &str = "config\tfunction\tdim\truns\tert\tfce\tstd_error";

fn summary_line(cfg: &ConfigurationVector, problem: &Problem, s: &FitnessSummary) -> String {
    format!(
        "{}\t{}\t{}\t{}\t{}\t{:e}\t{:e}",
        cfg,
        problem.function_id,
        problem.dimension,
        s.n,
        format_ert(s.ert),
        s.fce,
        s.std_error
    )
}

pub fn run(args: &RunArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = ConfigurationVector::decode(&args.config)?;
    let exp = experiment(&args.experiment)?;
    let cache = open_cache(&args.experiment)?;
    let pool = thread_pool(args.experiment.jobs)?;
    let evaluator = CachedEvaluator::new(&exp.problem, args.experiment.runs, exp.options, cache);
    let summary = pool.install(|| evaluator.evaluate(&cfg))?;
    writeln!(out, "{SUMMARY_HEADER}")?;
    writeln!(out, "{}", summary_line(&cfg, &exp.problem, &summary))?;
    Ok(())
}

pub fn bruteforce(
    args: &BruteforceArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    let space = parse_space(&args.space)?;
    let exp = experiment(&args.experiment)?;
    let cache = open_cache(&args.experiment)?;
    let runs = args.experiment.runs;
    let (id, dim, seed) = (
        exp.problem.function_id.clone(),
        exp.problem.dimension,
        exp.options.seed,
    );
    if !args.resume {
        let prior = cache
            .records()
            .any(|r| r.function_id == id && r.dimension == dim && space.contains(&r.config));
        if prior {
            return Err(CliError::Usage(
                "the cache already holds runs of this sweep; pass --resume to continue it".into(),
            ));
        }
    }
    let pending: Vec<ConfigurationVector> = space
        .enumerate()
        .filter(|c| !cache.is_complete(c, &id, dim, seed, runs))
        .collect();
    let total = space.size();
    let limit = args.max_configs.unwrap_or(usize::MAX).min(pending.len());

    let pool = thread_pool(args.experiment.jobs)?;
    let evaluator = CachedEvaluator::new(&exp.problem, runs, exp.options, cache);
    writeln!(out, "{SUMMARY_HEADER}")?;
    for cfg in &pending[..limit] {
        let summary = pool.install(|| evaluator.evaluate(cfg))?;
        writeln!(out, "{}", summary_line(cfg, &exp.problem, &summary))?;
    }
    writeln!(
        err,
        "executed {limit} configurations; {} of {total} complete",
        total - pending.len() + limit
    )?;
    Ok(())
}

pub fn ga(args: &GaArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let space = parse_space(&args.space)?;
    let exp = experiment(&args.experiment)?;
    if args.lambda == 0 || args.ga_budget < args.lambda {
        return Err(CliError::Usage(
            "--ga-budget must be at least --lambda (and --lambda at least 1)".into(),
        ));
    }
    let cache = open_cache(&args.experiment)?;
    let pool = thread_pool(args.experiment.jobs)?;
    let evaluator = CachedEvaluator::new(&exp.problem, args.experiment.runs, exp.options, cache);
    fs::create_dir_all(&args.out)?;

    let mut best_lines = String::new();
    for i in 0..args.ga_runs {
        let opts = GAOptions {
            lambda: args.lambda,
            budget: args.ga_budget,
            seed: seed::derive(args.experiment.seed, &[GA_STREAM, i as u64]),
        };
        let trace = pool.install(|| ga_run(&space, &evaluator, &opts));
        let mut text = String::new();
        for entry in &trace.entries {
            text.push_str(&entry.to_string());
            text.push('\n');
        }
        fs::write(args.out.join(format!("trace_{i}.tsv")), text)?;
        let best = trace.best().expect("at least one generation");
        best_lines.push_str(&format!(
            "{i}\t{}\t{}\t{}\t{}\t{:e}\n",
            exp.problem.function_id,
            exp.problem.dimension,
            best.config,
            format_ert(best.fitness.ert),
            best.fitness.fce
        ));
    }
    fs::write(args.out.join("best.tsv"), &best_lines)?;
    out.write_all(best_lines.as_bytes())?;
    writeln!(err, "executed {} new ES runs", evaluator.new_runs())?;
    Ok(())
}
