use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use modcma::benchmarks::Function;
use modcma::configuration::{BaseSampler, ConfigurationVector, ModuleCatalog, RestartRegime};
use modcma::evaluation::{fitness_cmp, FitnessSummary, ResultsCache};

use crate::commands::{format_ert, parse_space, run_seed_base};
use crate::{CliError, GroupBy, ReportCommand};

/// Upper rank bound and label of each rank bucket.
pub const RANK_BUCKETS: [(usize, &str); 7] = [
    (1, "1"),
    (2, "2"),
    (3, "3"),
    (5, "4-5"),
    (9, "6-9"),
    (17, "10-17"),
    (usize::MAX, "18+"),
];

/// 1-based rank of `candidate` among `population`: one plus the number of
/// strictly better members.
pub fn rank_of(candidate: &FitnessSummary, population: &[FitnessSummary]) -> usize {
    1 + population
        .iter()
        .filter(|s| fitness_cmp(s, candidate).is_lt())
        .count()
}

/// Cumulative percentage of `ranks` falling in each bucket or a better one.
pub fn rank_buckets(ranks: &[usize]) -> Vec<(&'static str, f64)> {
    RANK_BUCKETS
        .iter()
        .map(|&(limit, label)| {
            let within = ranks.iter().filter(|&&r| r <= limit).count();
            (label, 100.0 * within as f64 / ranks.len().max(1) as f64)
        })
        .collect()
}

/// One row of a module activation table, in percent.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationRow {
    pub group: String,
    pub count: usize,
    /// Modules 1-9: share of winners with the non-default option.
    pub binary: [f64; 9],
    /// Module 10: Sobol and Halton shares.
    pub sampler: (f64, f64),
    /// Module 11: IPOP and BIPOP shares.
    pub restart: (f64, f64),
}

fn activation_row(group: String, cfgs: &[ConfigurationVector]) -> ActivationRow {
    let n = cfgs.len() as f64;
    let pct = |k: usize| 100.0 * k as f64 / n;
    let mut binary = [0.0; 9];
    for (i, b) in binary.iter_mut().enumerate() {
        *b = pct(cfgs.iter().filter(|c| c.gene(i) != 0).count());
    }
    let count =
        |f: &dyn Fn(&ConfigurationVector) -> bool| pct(cfgs.iter().filter(|c| f(c)).count());
    ActivationRow {
        group,
        count: cfgs.len(),
        binary,
        sampler: (
            count(&|c| c.base_sampler() == BaseSampler::Sobol),
            count(&|c| c.base_sampler() == BaseSampler::Halton),
        ),
        restart: (
            count(&|c| c.restart() == RestartRegime::Ipop),
            count(&|c| c.restart() == RestartRegime::Bipop),
        ),
    }
}

/// Activation percentages per group (ordered by the group's sort key) plus
/// a final "all" row.
pub fn activation_table(
    winners: &[((u64, String), ConfigurationVector)],
) -> Result<Vec<ActivationRow>, CliError> {
    if winners.is_empty() {
        return Err(CliError::Usage(
            "no winning configurations to tabulate".into(),
        ));
    }
    let mut groups: BTreeMap<(u64, String), Vec<ConfigurationVector>> = BTreeMap::new();
    for (key, cfg) in winners {
        groups.entry(key.clone()).or_default().push(*cfg);
    }
    let mut rows: Vec<ActivationRow> = groups
        .into_iter()
        .map(|((_, label), cfgs)| activation_row(label, &cfgs))
        .collect();
    let all: Vec<_> = winners.iter().map(|w| w.1).collect();
    rows.push(activation_row("all".into(), &all));
    Ok(rows)
}

/// Mean best-so-far fitness of several GA traces at one generation.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub generation: usize,
    /// Mean over the traces whose best has an ERT.
    pub mean_ert: Option<f64>,
    pub ert_count: usize,
    pub mean_fce: f64,
    pub traces: usize,
}

/// Per-generation means over traces of `(ert, fce)` entries.
pub fn convergence_series(traces: &[Vec<(Option<f64>, f64)>]) -> Vec<ConvergenceRow> {
    let generations = traces.iter().map(Vec::len).max().unwrap_or(0);
    (0..generations)
        .map(|g| {
            let present: Vec<&(Option<f64>, f64)> =
                traces.iter().filter_map(|t| t.get(g)).collect();
            let erts: Vec<f64> = present.iter().filter_map(|e| e.0).collect();
            ConvergenceRow {
                generation: g,
                mean_ert: (!erts.is_empty()).then(|| erts.iter().sum::<f64>() / erts.len() as f64),
                ert_count: erts.len(),
                mean_fce: present.iter().map(|e| e.1).sum::<f64>() / present.len() as f64,
                traces: present.len(),
            }
        })
        .collect()
}

struct BestLine {
    function_id: String,
    dimension: usize,
    config: ConfigurationVector,
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>, CliError> {
    Ok(fs::read_to_string(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.to_string()))
        .collect())
}

fn malformed(path: &Path, line: usize) -> CliError {
    CliError::Malformed {
        file: path.display().to_string(),
        line,
    }
}

fn read_best(path: &Path) -> Result<Vec<BestLine>, CliError> {
    read_lines(path)?
        .into_iter()
        .map(|(n, line)| {
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 6 {
                return Err(malformed(path, n));
            }
            Ok(BestLine {
                function_id: f[1].to_string(),
                dimension: f[2].parse().map_err(|_| malformed(path, n))?,
                config: f[3].parse().map_err(|_| malformed(path, n))?,
            })
        })
        .collect()
}

fn read_trace(path: &Path) -> Result<Vec<(Option<f64>, f64)>, CliError> {
    read_lines(path)?
        .into_iter()
        .map(|(n, line)| {
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 4 {
                return Err(malformed(path, n));
            }
            let ert = match f[2] {
                "NA" => None,
                v => Some(v.parse().map_err(|_| malformed(path, n))?),
            };
            Ok((ert, f[3].parse().map_err(|_| malformed(path, n))?))
        })
        .collect()
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

pub fn execute(cmd: &ReportCommand, out: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        ReportCommand::Rank {
            cache,
            best,
            runs,
            seed,
            target,
            space,
        } => {
            let space = parse_space(space)?;
            let cache = ResultsCache::read(cache)?;
            let base_seed = run_seed_base(*seed);
            let mut experiments: Vec<((String, usize), Vec<ConfigurationVector>)> = Vec::new();
            for path in best {
                for line in read_best(path)? {
                    let key = (line.function_id, line.dimension);
                    match experiments.iter_mut().find(|e| e.0 == key) {
                        Some(e) => e.1.push(line.config),
                        None => experiments.push((key, vec![line.config])),
                    }
                }
            }
            let mut ranks = Vec::new();
            writeln!(out, "function\tdim\trank\tert\tfce")?;
            for ((id, dim), configs) in &experiments {
                let mut population = Vec::with_capacity(space.size());
                let mut fitness_of = BTreeMap::new();
                let mut missing = 0;
                for cfg in space.enumerate() {
                    match cache.batch(&cfg, id, *dim, base_seed, *runs) {
                        Some(records) => {
                            let s = FitnessSummary::from_runs(records, *target).expect("runs >= 1");
                            fitness_of.insert(cfg.index(), s.clone());
                            population.push(s);
                        }
                        None => missing += 1,
                    }
                }
                if missing > 0 {
                    return Err(CliError::IncompleteCache {
                        missing,
                        total: space.size(),
                    });
                }
                let mut found = Vec::with_capacity(configs.len());
                for cfg in configs {
                    let s = fitness_of.get(&cfg.index()).ok_or_else(|| {
                        CliError::Usage(format!(
                            "GA result {cfg} lies outside the brute-force space"
                        ))
                    })?;
                    found.push(s);
                }
                let ert = found
                    .iter()
                    .map(|s| s.ert)
                    .collect::<Option<Vec<f64>>>()
                    .map(|v| mean(v.into_iter()));
                let aggregate = FitnessSummary::synthetic(ert, mean(found.iter().map(|s| s.fce)));
                let rank = rank_of(&aggregate, &population);
                ranks.push(rank);
                writeln!(
                    out,
                    "{id}\t{dim}\t{rank}\t{}\t{:e}",
                    format_ert(aggregate.ert),
                    aggregate.fce
                )?;
            }
            writeln!(out)?;
            writeln!(out, "bucket\tcumulative_percent")?;
            for (label, pct) in rank_buckets(&ranks) {
                writeln!(out, "{label}\t{pct:.1}")?;
            }
        }
        ReportCommand::Activation { input, group_by } => {
            let mut winners = Vec::new();
            for path in input {
                for line in read_best(path)? {
                    let key = match group_by {
                        GroupBy::Subgroup => {
                            let sub = line.function_id.parse::<Function>()?.subgroup();
                            (sub as u64, sub.to_string())
                        }
                        GroupBy::Dimension => (line.dimension as u64, line.dimension.to_string()),
                    };
                    winners.push((key, line.config));
                }
            }
            let rows = activation_table(&winners)?;
            let names: Vec<&str> = ModuleCatalog::standard()
                .entries()
                .iter()
                .map(|m| m.name)
                .collect();
            write!(out, "group\tcount")?;
            for name in &names[..9] {
                write!(out, "\t{name}")?;
            }
            writeln!(
                out,
                "\t{} (Sobol/Halton)\t{} (IPOP/BIPOP)",
                names[9], names[10]
            )?;
            for r in rows {
                write!(out, "{}\t{}", r.group, r.count)?;
                for v in r.binary {
                    write!(out, "\t{v:.1}")?;
                }
                writeln!(
                    out,
                    "\t{:.1}/{:.1}\t{:.1}/{:.1}",
                    r.sampler.0, r.sampler.1, r.restart.0, r.restart.1
                )?;
            }
        }
        ReportCommand::Convergence { traces } => {
            let traces = traces
                .iter()
                .map(|p| read_trace(p))
                .collect::<Result<Vec<_>, _>>()?;
            writeln!(out, "generation\tmean_ert\tert_traces\tmean_fce\ttraces")?;
            for r in convergence_series(&traces) {
                writeln!(
                    out,
                    "{}\t{}\t{}\t{:e}\t{}",
                    r.generation,
                    format_ert(r.mean_ert),
                    r.ert_count,
                    r.mean_fce,
                    r.traces
                )?;
            }
        }
    }
    Ok(())
}
