use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use rayon::prelude::*;
use thiserror::Error;

use super::{run_seed, FitnessSummary};
use crate::configuration::ConfigurationVector;
use crate::es::{self, EsError, Objective, RunOptions, RunRecord};

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("results cache i/o: {0}")]
    Io(#[from] io::Error),
    #[error(transparent)]
    Es(#[from] EsError),
}

/// Identity of one cached run.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CacheKey {
    pub config: ConfigurationVector,
    pub function_id: String,
    pub dimension: usize,
    pub seed: u64,
}

impl CacheKey {
    pub fn of(record: &RunRecord) -> Self {
        CacheKey {
            config: record.config,
            function_id: record.function_id.clone(),
            dimension: record.dimension,
            seed: record.seed,
        }
    }
}

/// Formats a record as one tab-separated cache line (without newline).
pub fn format_record(r: &RunRecord) -> String {
    let hit = r
        .hit_index
        .map_or_else(|| "NA".to_string(), |h| h.to_string());
    format!(
        "{}\t{}\t{}\t{}\t{}\t{:e}\t{}",
        r.config, r.function_id, r.dimension, r.seed, r.evaluations_used, r.best_error, hit
    )
}

/// Parses one cache line; `None` for malformed or truncated lines.
pub fn parse_record(line: &str) -> Option<RunRecord> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 7 {
        return None;
    }
    let hit_index = match fields[6] {
        "NA" => None,
        h => Some(h.parse().ok()?),
    };
    Some(RunRecord {
        config: fields[0].parse().ok()?,
        function_id: fields[1].to_string(),
        dimension: fields[2].parse().ok()?,
        seed: fields[3].parse().ok()?,
        evaluations_used: fields[4].parse().ok()?,
        best_error: fields[5].parse().ok()?,
        hit_index,
        trajectory: Vec::new(),
    })
}

/// Append-only store of run records, optionally backed by a file.
///
/// Only one process should write a given file. Readers skip malformed lines,
/// so a line cut short by an interrupted write is simply ignored.
#[derive(Debug)]
pub struct ResultsCache {
    path: Option<PathBuf>,
    records: HashMap<CacheKey, RunRecord>,
    writer: Option<BufWriter<File>>,
    skipped: usize,
}

impl ResultsCache {
    pub fn in_memory() -> Self {
        ResultsCache {
            path: None,
            records: HashMap::new(),
            writer: None,
            skipped: 0,
        }
    }

    /// Loads `path` if it exists and opens it for appending.
    pub fn open(path: impl AsRef<Path>) -> io::Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut cache = Self::read(&path)?;
        let mut file = OpenOptions::new().create(true).append(true).open(&path)?;
        let mut text = String::new();
        if let Ok(mut f) = File::open(&path) {
            f.read_to_string(&mut text)?;
        }
        if !text.is_empty() && !text.ends_with('\n') {
            // terminate a truncated trailing line so new records stay intact
            file.write_all(b"\n")?;
        }
        cache.writer = Some(BufWriter::new(file));
        cache.path = Some(path);
        Ok(cache)
    }

    /// Loads `path` read-only; a missing file is an empty cache.
    pub fn read(path: impl AsRef<Path>) -> io::Result<Self> {
        let mut cache = Self::in_memory();
        let text = match std::fs::read_to_string(path.as_ref()) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => String::new(),
            Err(e) => return Err(e),
        };
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            match parse_record(line) {
                Some(r) => {
                    cache.records.entry(CacheKey::of(&r)).or_insert(r);
                }
                None => cache.skipped += 1,
            }
        }
        cache.path = Some(path.as_ref().to_path_buf());
        Ok(cache)
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Lines that could not be parsed while loading.
    pub fn skipped_lines(&self) -> usize {
        self.skipped
    }

    pub fn get(&self, key: &CacheKey) -> Option<&RunRecord> {
        self.records.get(key)
    }

    pub fn records(&self) -> impl Iterator<Item = &RunRecord> {
        self.records.values()
    }

    /// Stores a record and appends it to the backing file. Records already
    /// present are left untouched; returns whether the record was new.
    pub fn insert(&mut self, record: RunRecord) -> io::Result<bool> {
        let key = CacheKey::of(&record);
        if self.records.contains_key(&key) {
            return Ok(false);
        }
        if let Some(w) = self.writer.as_mut() {
            writeln!(w, "{}", format_record(&record))?;
            w.flush()?;
        }
        self.records.insert(key, record);
        Ok(true)
    }

    /// Records of `cfg` for seeds `seed .. seed + runs`, if all are present.
    pub fn batch(
        &self,
        cfg: &ConfigurationVector,
        function_id: &str,
        dimension: usize,
        seed: u64,
        runs: usize,
    ) -> Option<Vec<RunRecord>> {
        (0..runs)
            .map(|i| {
                self.get(&CacheKey {
                    config: *cfg,
                    function_id: function_id.to_string(),
                    dimension,
                    seed: run_seed(seed, i),
                })
                .cloned()
            })
            .collect()
    }

    pub fn is_complete(
        &self,
        cfg: &ConfigurationVector,
        function_id: &str,
        dimension: usize,
        seed: u64,
        runs: usize,
    ) -> bool {
        self.batch(cfg, function_id, dimension, seed, runs)
            .is_some()
    }
}

/// Structure evaluator that reuses cached runs and caches new ones.
pub struct CachedEvaluator<'a, O: ?Sized> {
    problem: &'a O,
    runs: usize,
    options: RunOptions,
    cache: Mutex<ResultsCache>,
    new_runs: AtomicU64,
}

impl<'a, O: Objective + ?Sized> CachedEvaluator<'a, O> {
    pub fn new(problem: &'a O, runs: usize, options: RunOptions, cache: ResultsCache) -> Self {
        CachedEvaluator {
            problem,
            runs: runs.max(1),
            options,
            cache: Mutex::new(cache),
            new_runs: AtomicU64::new(0),
        }
    }

    /// ES runs executed so far (cache hits excluded).
    pub fn new_runs(&self) -> u64 {
        self.new_runs.load(Ordering::Relaxed)
    }

    pub fn runs_per_structure(&self) -> usize {
        self.runs
    }

    pub fn into_cache(self) -> ResultsCache {
        self.cache.into_inner().unwrap_or_else(|e| e.into_inner())
    }

    /// Fitness of `cfg`; missing runs execute in parallel and are appended
    /// to the cache in seed order.
    pub fn evaluate(&self, cfg: &ConfigurationVector) -> Result<FitnessSummary, CacheError> {
        self.evaluate_batch(std::slice::from_ref(cfg))
            .pop()
            .expect("one result per structure")
    }

    /// Fitness of every structure in `cfgs`. All missing runs execute in one
    /// parallel pass; new records are appended in (structure, seed) order so
    /// the cache contents never depend on the thread count.
    pub fn evaluate_batch(
        &self,
        cfgs: &[ConfigurationVector],
    ) -> Vec<Result<FitnessSummary, CacheError>> {
        let id = self.problem.id().to_string();
        let dim = self.problem.dimension();
        let keys: Vec<CacheKey> = cfgs
            .iter()
            .flat_map(|cfg| {
                let id = id.clone();
                (0..self.runs).map(move |i| CacheKey {
                    config: *cfg,
                    function_id: id.clone(),
                    dimension: dim,
                    seed: run_seed(self.options.seed, i),
                })
            })
            .collect();
        let cached: Vec<Option<RunRecord>> = {
            let cache = self.lock();
            keys.iter().map(|k| cache.get(k).cloned()).collect()
        };
        let fresh: Vec<Option<Result<RunRecord, EsError>>> = keys
            .par_iter()
            .zip(&cached)
            .map(|(k, c)| {
                c.is_none().then(|| {
                    let opts = RunOptions {
                        seed: k.seed,
                        ..self.options
                    };
                    es::run(&k.config, self.problem, &opts).map(|mut r| {
                        r.trajectory.clear();
                        r
                    })
                })
            })
            .collect();

        let mut cache = self.lock();
        let mut slots = cached.into_iter().zip(fresh);
        let mut out = Vec::with_capacity(cfgs.len());
        for _ in cfgs {
            let mut runs = Vec::with_capacity(self.runs);
            let mut failure: Option<CacheError> = None;
            let mut new_records = Vec::new();
            for (c, f) in slots.by_ref().take(self.runs) {
                match (c, f) {
                    (Some(r), _) => runs.push(r),
                    (None, Some(Ok(r))) => {
                        self.new_runs.fetch_add(1, Ordering::Relaxed);
                        new_records.push(r.clone());
                        runs.push(r);
                    }
                    (None, Some(Err(e))) => {
                        self.new_runs.fetch_add(1, Ordering::Relaxed);
                        failure.get_or_insert(e.into());
                    }
                    (None, None) => unreachable!("missing runs are always executed"),
                }
            }
            if failure.is_none() {
                for r in new_records {
                    if let Err(e) = cache.insert(r) {
                        failure.get_or_insert(e.into());
                    }
                }
            }
            out.push(match failure {
                Some(e) => Err(e),
                None => {
                    Ok(FitnessSummary::from_runs(runs, self.options.target)
                        .expect("at least one run"))
                }
            });
        }
        out
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, ResultsCache> {
        self.cache.lock().unwrap_or_else(|e| e.into_inner())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunRecord {
        RunRecord {
            config: "10000000021".parse().unwrap(),
            function_id: "sphere".into(),
            dimension: 5,
            seed: 42,
            evaluations_used: 1234,
            best_error: 1.234_567_890_123e-9,
            hit_index: Some(1234),
            trajectory: Vec::new(),
        }
    }

    #[test]
    fn line_round_trip() {
        let r = sample();
        let line = format_record(&r);
        assert_eq!(line.split('\t').count(), 7);
        assert_eq!(parse_record(&line), Some(r.clone()));
        let miss = RunRecord {
            hit_index: None,
            best_error: f64::INFINITY,
            ..r
        };
        let line = format_record(&miss);
        assert!(line.ends_with("\tNA"));
        assert_eq!(parse_record(&line), Some(miss));
        assert_eq!(parse_record("10000000021\tsphere\t5"), None);
    }

    #[test]
    fn truncated_tail_is_ignored_and_repaired() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.tsv");
        let line = format_record(&sample());
        std::fs::write(&path, format!("{line}\n{}", &line[..10])).unwrap();
        let mut cache = ResultsCache::open(&path).unwrap();
        assert_eq!((cache.len(), cache.skipped_lines()), (1, 1));
        let other = RunRecord {
            seed: 43,
            ..sample()
        };
        assert!(cache.insert(other.clone()).unwrap());
        assert!(!cache.insert(other).unwrap());
        drop(cache);
        let reread = ResultsCache::read(&path).unwrap();
        assert_eq!((reread.len(), reread.skipped_lines()), (2, 1));
    }
}
