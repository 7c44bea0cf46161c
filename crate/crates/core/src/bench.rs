//! Aggregator registry and the seeded benchmark harness.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::{IteratorRandom, SliceRandom};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{borda, fas_pivot, insertion_comp, pick_a_perm, spearman_optimal, PickStrategy, DEFAULT_RESTARTS};
use crate::distance::{cumulative, Metric};
use crate::error::{Error, Result};
use crate::io::{import_dataset, parse_rankings, DatasetKind, Format, ImportOptions, JesterMode};
use crate::lca::{aggregate_partial, Bucketing, Rule};
use crate::models::{sample_gmm_batch, sample_mallows_batch, GmmParams, MallowsParams, MetropolisConfig};
use crate::ranking::{PartialRanking, Permutation, Ranking, RankingSample};
use crate::rng::{derive_seed, rng_from_seed};
use crate::tally::PairwiseTally;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    LcMedian,
    LcMode,
    Borda,
    /// Better of randomized pivoting and the best sample member.
    FasPivot,
    InsertionComp,
    Spearman,
    /// The best sample member.
    PickAPerm,
    /// The model centroid; only defined for synthetic samples.
    MostProb,
    /// LP-rounded pivoting. Not implemented; reported as unavailable.
    FaslpPivot,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::LcMedian,
        Method::LcMode,
        Method::Borda,
        Method::FasPivot,
        Method::InsertionComp,
        Method::Spearman,
        Method::PickAPerm,
        Method::MostProb,
        Method::FaslpPivot,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::LcMedian => "lc-median",
            Method::LcMode => "lc-mode",
            Method::Borda => "borda",
            Method::FasPivot => "fas-pivot",
            Method::InsertionComp => "insertion-comp",
            Method::Spearman => "spearman",
            Method::PickAPerm => "pick-a-perm",
            Method::MostProb => "most-prob",
            Method::FaslpPivot => "faslp-pivot",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.name() == s)
    }

    fn stream(self) -> u64 {
        Method::ALL.iter().position(|&m| m == self).expect("registered") as u64 + 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MethodOptions {
    pub seed: u64,
    pub restarts: usize,
    pub bucketing: Bucketing,
}

impl Default for MethodOptions {
    fn default() -> Self {
        MethodOptions { seed: 0, restarts: DEFAULT_RESTARTS, bucketing: Bucketing::None }
    }
}

/// Runs one aggregator. `centroid` feeds `most-prob`. Returns `Ok(None)` for
/// methods that are not available on this input.
pub fn run_method(
    method: Method,
    sample: &RankingSample,
    options: &MethodOptions,
    centroid: Option<&Ranking>,
) -> Result<Option<Ranking>> {
    let sigma = match method {
        Method::LcMedian | Method::LcMode => {
            let rule = if method == Method::LcMedian { Rule::Median } else { Rule::Mode };
            aggregate_partial(sample, rule)?.sigma_hat
        }
        Method::Borda => borda(sample)?,
        Method::FasPivot => {
            let pivot = fas_pivot(sample, options.seed, options.restarts)?;
            let member = pick_a_perm(sample, PickStrategy::Best)?;
            let tally = PairwiseTally::new(sample, Metric::KemenyUnrated);
            let cost = |p: &Permutation| tally.permutation_cost(&p.order().iter().map(|x| x - 1).collect::<Vec<_>>());
            if cost(&member) < cost(&pivot) {
                member
            } else {
                pivot
            }
        }
        Method::InsertionComp => insertion_comp(sample, options.seed, options.restarts)?,
        Method::Spearman => spearman_optimal(sample)?,
        Method::PickAPerm => pick_a_perm(sample, PickStrategy::Best)?,
        Method::MostProb => return Ok(centroid.cloned()),
        Method::FaslpPivot => return Ok(None),
    };
    Ok(Some(match options.bucketing {
        Bucketing::None => Ranking::Full(sigma),
        how => Ranking::Partial(how.apply(&sigma, sample, Metric::KemenyUnrated)?),
    }))
}

/// Where the rankings of each trial come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Source {
    /// `m` Mallows draws around a uniformly random centroid per trial, for
    /// each `lambda` (`phi = exp(-lambda)`) or `phi` in the grid.
    Mallows {
        n: usize,
        m: usize,
        #[serde(default)]
        lambda: Option<Vec<f64>>,
        #[serde(default)]
        phi: Option<Vec<f64>>,
    },
    /// `m` draws of the generalized model around a random weak order with
    /// buckets of `bucket_size` elements.
    Gmm {
        n: usize,
        m: usize,
        phi: Vec<f64>,
        #[serde(default = "default_bucket_size")]
        bucket_size: usize,
    },
    /// A file of rankings. Each trial draws `m` members without replacement
    /// for every `m` in `sizes` (all members when `sizes` is absent).
    Dataset {
        path: PathBuf,
        format: DatasetFormat,
        #[serde(default)]
        sizes: Option<Vec<usize>>,
        #[serde(default)]
        jester_mode: JesterMode,
        #[serde(default = "default_top_movies")]
        top_movies: usize,
        #[serde(default = "default_top_users")]
        top_users: usize,
    },
}

fn default_bucket_size() -> usize {
    2
}

fn default_top_movies() -> usize {
    ImportOptions::default().top_movies
}

fn default_top_users() -> usize {
    ImportOptions::default().top_users
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    Ranks,
    Order,
    Buckets,
    Sushi,
    Jester,
    Movielens,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub methods: Vec<Method>,
    pub metric: Metric,
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    /// Method whose mean `D_av` normalizes the others at each grid point.
    #[serde(default)]
    pub reference: Option<Method>,
    #[serde(default)]
    pub bucketize: Bucketing,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Record wall time per row. Off by default so reports are reproducible
    /// byte for byte.
    #[serde(default)]
    pub timing: bool,
    pub source: Source,
}

fn default_restarts() -> usize {
    DEFAULT_RESTARTS
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(msg.into()));
        if self.trials == 0 {
            return fail("trials must be at least 1");
        }
        if self.methods.is_empty() {
            return fail("methods must not be empty");
        }
        if self.restarts == 0 {
            return fail("restarts must be at least 1");
        }
        match &self.source {
            Source::Mallows { n, m, lambda, phi } => {
                if *n == 0 || *m == 0 {
                    return fail("n and m must be positive");
                }
                match (lambda, phi) {
                    (Some(g), None) | (None, Some(g)) if !g.is_empty() => {}
                    _ => return fail("give exactly one nonempty grid: lambda or phi"),
                }
            }
            Source::Gmm { n, m, phi, bucket_size } => {
                if *n == 0 || *m == 0 || *bucket_size == 0 {
                    return fail("n, m and bucket_size must be positive");
                }
                if phi.is_empty() {
                    return fail("phi grid must not be empty");
                }
            }
            Source::Dataset { sizes, .. } => {
                if sizes.as_ref().is_some_and(|s| s.is_empty() || s.contains(&0)) {
                    return fail("sizes must be nonempty and positive");
                }
            }
        }
        Ok(())
    }
}

/// One CSV row. Statistics are `None` for unavailable methods.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: Method,
    pub grid_value: f64,
    pub trials: usize,
    pub mean_d_av: Option<f64>,
    pub std_d_av: Option<f64>,
    pub normalized_ratio: Option<f64>,
    pub wall_time_s: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub grid_name: String,
    pub rows: Vec<ReportRow>,
}

impl Report {
    pub fn row(&self, method: Method, grid_value: f64) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.method == method && r.grid_value == grid_value)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Format(e.to_string());
        w.write_record(["method", "grid_value", "trials", "mean_d_av", "std_d_av", "normalized_ratio", "wall_time_s"])
            .map_err(io)?;
        let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.6}"));
        for r in &self.rows {
            let mean = if r.method == Method::FaslpPivot { "unavailable".into() } else { opt(r.mean_d_av) };
            w.write_record([
                r.method.name().to_string(),
                r.grid_value.to_string(),
                r.trials.to_string(),
                mean,
                opt(r.std_d_av),
                opt(r.normalized_ratio),
                opt(r.wall_time_s),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

struct GridPoint {
    value: f64,
    kind: GridKind,
}

enum GridKind {
    Lambda(f64),
    Phi(f64),
    Size(usize),
}

/// Runs every method on `trials` seeded samples per grid point. Trial `t`
/// at grid index `g` samples with `derive_seed(derive_seed(seed, g), t)`,
/// so results do not depend on scheduling or thread count.
pub fn run_benchmark(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    let dataset = match &config.source {
        Source::Dataset { path, format, jester_mode, top_movies, top_users, .. } => {
            let options = ImportOptions { jester_mode: *jester_mode, top_movies: *top_movies, top_users: *top_users };
            Some(load_dataset(path, *format, &options)?)
        }
        _ => None,
    };
    let (grid_name, grid) = grid(config, dataset.as_ref());
    let mut rows = Vec::new();
    for (g, point) in grid.iter().enumerate() {
        let grid_seed = derive_seed(config.seed, g as u64);
        let trials: Vec<(RankingSample, Option<Ranking>)> = (0..config.trials as u64)
            .into_par_iter()
            .map(|t| make_trial(config, point, dataset.as_ref(), derive_seed(grid_seed, t)))
            .collect::<Result<_>>()?;
        let mut point_rows = Vec::new();
        for &method in &config.methods {
            let start = Instant::now();
            let values: Vec<Option<f64>> = trials
                .par_iter()
                .enumerate()
                .map(|(t, (sample, centroid))| {
                    let options = MethodOptions {
                        seed: derive_seed(derive_seed(grid_seed, t as u64), method.stream()),
                        restarts: config.restarts,
                        bucketing: config.bucketize,
                    };
                    let out = run_method(method, sample, &options, centroid.as_ref())?;
                    out.map(|r| cumulative(sample, &r, config.metric).map(|c| c.average)).transpose()
                })
                .collect::<Result<_>>()
                .map_err(|e| Error::Config(format!("{} at {grid_name} = {}: {e}", method.name(), point.value)))?;
            let elapsed = start.elapsed().as_secs_f64();
            let values: Option<Vec<f64>> = values.into_iter().collect();
            let (mean, std) = match &values {
                Some(v) => {
                    let (mean, std) = mean_std(v);
                    (Some(mean), Some(std))
                }
                None => (None, None),
            };
            point_rows.push(ReportRow {
                method,
                grid_value: point.value,
                trials: config.trials,
                mean_d_av: mean,
                std_d_av: std,
                normalized_ratio: None,
                wall_time_s: config.timing.then_some(elapsed),
            });
        }
        let reference = config
            .reference
            .and_then(|m| point_rows.iter().find(|r| r.method == m))
            .and_then(|r| r.mean_d_av);
        for r in &mut point_rows {
            r.normalized_ratio = match (r.mean_d_av, reference) {
                (Some(v), Some(base)) if base > 0.0 => Some(v / base),
                _ => None,
            };
        }
        rows.extend(point_rows);
    }
    let report = Report { grid_name: grid_name.into(), rows };
    if let Some(path) = &config.output {
        std::fs::write(path, report.to_csv()?)?;
    }
    Ok(report)
}

fn load_dataset(path: &Path, format: DatasetFormat, options: &ImportOptions) -> Result<RankingSample> {
    match format {
        DatasetFormat::Ranks => parse_rankings(path, Format::Ranks, None),
        DatasetFormat::Order => parse_rankings(path, Format::Order, None),
        DatasetFormat::Buckets => parse_rankings(path, Format::Buckets, None),
        DatasetFormat::Sushi => import_dataset(DatasetKind::Sushi, path, options),
        DatasetFormat::Jester => import_dataset(DatasetKind::Jester, path, options),
        DatasetFormat::Movielens => import_dataset(DatasetKind::Movielens, path, options),
    }
}

fn grid(config: &ExperimentConfig, dataset: Option<&RankingSample>) -> (&'static str, Vec<GridPoint>) {
    match &config.source {
        Source::Mallows { lambda: Some(g), .. } => {
            ("lambda", g.iter().map(|&v| GridPoint { value: v, kind: GridKind::Lambda(v) }).collect())
        }
        Source::Mallows { phi, .. } => (
            "phi",
            phi.iter().flatten().map(|&v| GridPoint { value: v, kind: GridKind::Phi(v) }).collect(),
        ),
        Source::Gmm { phi, .. } => ("phi", phi.iter().map(|&v| GridPoint { value: v, kind: GridKind::Phi(v) }).collect()),
        Source::Dataset { sizes, .. } => {
            let all = dataset.map_or(0, RankingSample::m);
            let sizes = sizes.clone().unwrap_or_else(|| vec![all]);
            ("m", sizes.into_iter().map(|m| GridPoint { value: m as f64, kind: GridKind::Size(m) }).collect())
        }
    }
}

fn make_trial(
    config: &ExperimentConfig,
    point: &GridPoint,
    dataset: Option<&RankingSample>,
    seed: u64,
) -> Result<(RankingSample, Option<Ranking>)> {
    let mut rng = rng_from_seed(derive_seed(seed, 0));
    let data_seed = derive_seed(seed, 1);
    match (&config.source, &point.kind) {
        (Source::Mallows { n, m, .. }, kind) => {
            let mut order: Vec<usize> = (1..=*n).collect();
            order.shuffle(&mut rng);
            let sigma0 = Permutation::from_order(&order)?;
            let params = match kind {
                GridKind::Lambda(l) => MallowsParams::from_lambda(sigma0.clone(), *l)?,
                GridKind::Phi(p) => MallowsParams::new(sigma0.clone(), *p)?,
                GridKind::Size(_) => unreachable!("synthetic grids are lambda or phi"),
            };
            Ok((sample_mallows_batch(&params, *m, data_seed)?, Some(Ranking::Full(sigma0))))
        }
        (Source::Gmm { n, m, bucket_size, .. }, GridKind::Phi(phi)) => {
            let mut order: Vec<usize> = (1..=*n).collect();
            order.shuffle(&mut rng);
            let buckets: Vec<Vec<usize>> = order.chunks(*bucket_size).map(<[usize]>::to_vec).collect();
            let sigma0 = PartialRanking::from_buckets(*n, &buckets, false)?;
            let params = GmmParams::new(sigma0.clone(), *phi)?;
            let sample = sample_gmm_batch(&params, *m, data_seed, MetropolisConfig::default())?;
            Ok((sample, Some(Ranking::Partial(sigma0))))
        }
        (Source::Dataset { .. }, GridKind::Size(m)) => {
            let data = dataset.expect("dataset loaded");
            if *m > data.m() {
                return Err(Error::Config(format!("size {m} exceeds the {} rankings in the dataset", data.m())));
            }
            let mut picked = (0..data.m()).choose_multiple(&mut rng, *m);
            picked.sort_unstable();
            Ok((data.select(&picked)?, None))
        }
        _ => unreachable!("grid points follow the source"),
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(methods: &[Method], trials: usize) -> ExperimentConfig {
        ExperimentConfig {
            methods: methods.to_vec(),
            metric: Metric::Kendall,
            trials,
            seed: 11,
            restarts: 2,
            reference: Some(Method::FasPivot),
            bucketize: Bucketing::None,
            output: None,
            timing: false,
            source: Source::Mallows { n: 6, m: 15, lambda: Some(vec![0.5, 1.0]), phi: None },
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(Method::parse(m.name()), Some(m));
        }
    }

    #[test]
    fn copies_of_one_ranking_cost_nothing() {
        let sigma = Permutation::from_ranks(vec![3, 1, 4, 2, 5]).unwrap();
        let sample = RankingSample::from_permutations(vec![sigma.clone(); 7]).unwrap();
        for method in Method::ALL {
            let out = run_method(method, &sample, &MethodOptions::default(), Some(&Ranking::Full(sigma.clone()))).unwrap();
            if let Some(r) = out {
                assert_eq!(cumulative(&sample, &r, Metric::Kendall).unwrap().average, 0.0, "{}", method.name());
            }
        }
    }

    #[test]
    fn deterministic_csv() {
        let cfg = config(&[Method::LcMedian, Method::FasPivot, Method::InsertionComp, Method::FaslpPivot], 4);
        let a = run_benchmark(&cfg).unwrap().to_csv().unwrap();
        let b = run_benchmark(&cfg).unwrap().to_csv().unwrap();
        assert_eq!(a, b);
        let lines: Vec<&str> = a.lines().collect();
        assert_eq!(lines[0], "method,grid_value,trials,mean_d_av,std_d_av,normalized_ratio,wall_time_s");
        assert_eq!(lines.len(), 1 + 2 * 4);
        assert!(a.contains("faslp-pivot,0.5,4,unavailable"));
        assert!(a.contains("fas-pivot,0.5,4,") && a.contains(",1.000000,-"));
    }

    #[test]
    fn config_from_toml() {
        let text = r#"
            methods = ["lc-median", "borda"]
            metric = "kendall"
            trials = 3
            seed = 5

            [source]
            kind = "mallows"
            n = 5
            m = 10
            phi = [0.3]
        "#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.restarts, DEFAULT_RESTARTS);
        assert_eq!(run_benchmark(&cfg).unwrap().rows.len(), 2);
        assert!(ExperimentConfig::from_toml(&text.replace("trials = 3", "trials = 0")).is_err());
        assert!(ExperimentConfig::from_toml(&text.replace("\"borda\"", "\"nope\"")).is_err());
    }

    #[test]
    fn mean_and_sample_std() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-12);
    }
}
