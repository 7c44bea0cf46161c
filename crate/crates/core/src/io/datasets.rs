use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranking::{PartialRanking, Permutation, Ranking, RankingSample, SampleMeta};

/// Marker for an unrated joke in the Jester score matrix.
pub const JESTER_UNRATED: f64 = 99.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Sushi,
    Jester,
    Movielens,
}

impl DatasetKind {
    pub fn parse(s: &str) -> Option<DatasetKind> {
        match s {
            "sushi" => Some(DatasetKind::Sushi),
            "jester" => Some(DatasetKind::Jester),
            "movielens" => Some(DatasetKind::Movielens),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JesterMode {
    /// Users who rated every joke, scores sorted into a permutation.
    #[default]
    Permutations,
    /// Scores rounded to integers and bucketed; unrated jokes go last.
    Partial,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImportOptions {
    pub jester_mode: JesterMode,
    pub top_movies: usize,
    pub top_users: usize,
}

impl Default for ImportOptions {
    fn default() -> Self {
        ImportOptions {
            jester_mode: JesterMode::Permutations,
            top_movies: 50,
            top_users: 500,
        }
    }
}

pub fn import_dataset(kind: DatasetKind, path: impl AsRef<Path>, options: &ImportOptions) -> Result<RankingSample> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let sample = match kind {
        DatasetKind::Sushi => parse_sushi(&text)?,
        DatasetKind::Jester => parse_jester(&text, options.jester_mode)?,
        DatasetKind::Movielens => parse_movielens(&text, options.top_movies, options.top_users)?,
    };
    Ok(sample.with_meta(SampleMeta {
        source: path.display().to_string(),
        ..SampleMeta::default()
    }))
}

fn format_err(line: usize, message: impl std::fmt::Display) -> Error {
    Error::Format(format!("line {line}: {message}"))
}

/// Sushi `.order` files: a header `<items> <lists>`, then one line per user
/// `<0> <len> <item> ...` with 0-based items from most to least preferred.
pub fn parse_sushi(text: &str) -> Result<RankingSample> {
    let mut perms = Vec::new();
    let mut header = true;
    for (i, line) in text.lines().enumerate() {
        let no = i + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if std::mem::take(&mut header) && fields.len() == 2 {
            continue;
        }
        let values: Vec<usize> = fields
            .iter()
            .map(|f| f.parse().map_err(|_| format_err(no, format!("`{f}` is not an integer"))))
            .collect::<Result<_>>()?;
        let len = *values.get(1).ok_or_else(|| format_err(no, "missing length field"))?;
        let items = &values[2..];
        if items.len() != len {
            return Err(format_err(no, format!("declared {len} items, found {}", items.len())));
        }
        let order: Vec<usize> = items.iter().map(|&x| x + 1).collect();
        perms.push(Permutation::from_order(&order).map_err(|e| format_err(no, e))?);
    }
    if perms.is_empty() {
        return Err(Error::EmptySample);
    }
    RankingSample::from_permutations(perms).map_err(|e| match e {
        Error::SizeMismatch { left, right } => Error::Format(format!("rankings over {left} and {right} items")),
        e => e,
    })
}

/// Jester score matrix as text: one user per line, a leading count of rated
/// jokes, then one score per joke in `[-10, 10]` or `99` for unrated.
/// Commas, tabs and spaces all separate fields.
pub fn parse_jester(text: &str, mode: JesterMode) -> Result<RankingSample> {
    let mut rows: Vec<Vec<Option<f64>>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let no = i + 1;
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        if fields.is_empty() || fields[0].starts_with('#') {
            continue;
        }
        let scores = fields[1..]
            .iter()
            .map(|f| {
                let v: f64 = f.parse().map_err(|_| format_err(no, format!("`{f}` is not a number")))?;
                if v == JESTER_UNRATED {
                    Ok(None)
                } else if (-10.0..=10.0).contains(&v) {
                    Ok(Some(v))
                } else {
                    Err(format_err(no, format!("score {v} outside [-10, 10]")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != scores.len() {
                return Err(Error::InconsistentN { line: no, expected: first.len(), found: scores.len() });
            }
        }
        rows.push(scores);
    }
    let rankings: Vec<Ranking> = match mode {
        JesterMode::Permutations => rows
            .iter()
            .filter_map(|r| r.iter().copied().collect::<Option<Vec<f64>>>())
            .map(|scores| Ranking::Full(sort_scores(&scores)))
            .collect(),
        JesterMode::Partial => rows
            .iter()
            .filter(|r| r.iter().any(Option::is_some))
            .map(|r| {
                let rounded: Vec<Option<i64>> = r.iter().map(|s| s.map(|v| v.round() as i64)).collect();
                bucket_scores(&rounded)
            })
            .collect(),
    };
    if rankings.is_empty() {
        return Err(Error::EmptySample);
    }
    RankingSample::new(rankings)
}

// higher score ranks higher; equal scores by smaller id
fn sort_scores(scores: &[f64]) -> Permutation {
    let mut order: Vec<usize> = (1..=scores.len()).collect();
    order.sort_by(|&a, &b| scores[b - 1].total_cmp(&scores[a - 1]).then(a.cmp(&b)));
    Permutation::from_order(&order).expect("sorted ids form a permutation")
}

/// Buckets by descending integer score; `None` entries form the unrated tail.
fn bucket_scores(scores: &[Option<i64>]) -> Ranking {
    let mut distinct: Vec<i64> = scores.iter().flatten().copied().collect();
    distinct.sort_unstable_by(|a, b| b.cmp(a));
    distinct.dedup();
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); distinct.len()];
    let mut unrated = Vec::new();
    for (i, s) in scores.iter().enumerate() {
        match s {
            Some(v) => buckets[distinct.iter().position(|d| d == v).expect("score is listed")].push(i + 1),
            None => unrated.push(i + 1),
        }
    }
    let tail = !unrated.is_empty();
    if tail {
        buckets.push(unrated);
    }
    let p = PartialRanking::from_buckets(scores.len(), &buckets, tail).expect("buckets partition the items");
    if !tail && p.is_permutation() {
        Ranking::Full(p.tie_broken())
    } else {
        Ranking::Partial(p)
    }
}

/// MovieLens `u.data` (`user item rating timestamp`). Keeps the `top_movies`
/// most rated movies, relabelled `1..=k` by ascending movie id, and the
/// `top_users` users who rated most of them; ties prefer smaller ids.
pub fn parse_movielens(text: &str, top_movies: usize, top_users: usize) -> Result<RankingSample> {
    if top_movies == 0 || top_users == 0 {
        return Err(Error::SelectionInfeasible("top_movies and top_users must be positive".into()));
    }
    let mut ratings: Vec<(u64, u64, i64)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let no = i + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() < 3 {
            return Err(format_err(no, "expected `user item rating [timestamp]`"));
        }
        let int = |f: &str| f.parse::<i64>().map_err(|_| format_err(no, format!("`{f}` is not an integer")));
        let rating = int(fields[2])?;
        if !(1..=5).contains(&rating) {
            return Err(format_err(no, format!("rating {rating} outside 1..=5")));
        }
        ratings.push((int(fields[0])? as u64, int(fields[1])? as u64, rating));
    }

    let mut per_movie: HashMap<u64, usize> = HashMap::new();
    for &(_, movie, _) in &ratings {
        *per_movie.entry(movie).or_default() += 1;
    }
    if per_movie.len() < top_movies {
        return Err(Error::SelectionInfeasible(format!(
            "asked for {top_movies} movies, only {} have ratings",
            per_movie.len()
        )));
    }
    let mut movies: Vec<(u64, usize)> = per_movie.into_iter().collect();
    movies.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut chosen: Vec<u64> = movies[..top_movies].iter().map(|m| m.0).collect();
    chosen.sort_unstable();
    let label: HashMap<u64, usize> = chosen.iter().enumerate().map(|(i, &m)| (m, i)).collect();

    let mut per_user: HashMap<u64, Vec<Option<i64>>> = HashMap::new();
    for &(user, movie, rating) in &ratings {
        if let Some(&i) = label.get(&movie) {
            per_user.entry(user).or_insert_with(|| vec![None; top_movies])[i] = Some(rating);
        }
    }
    if per_user.len() < top_users {
        return Err(Error::SelectionInfeasible(format!(
            "asked for {top_users} users, only {} rated a selected movie",
            per_user.len()
        )));
    }
    let mut users: Vec<(u64, Vec<Option<i64>>)> = per_user.into_iter().collect();
    let coverage = |r: &[Option<i64>]| r.iter().filter(|s| s.is_some()).count();
    users.sort_by(|a, b| coverage(&b.1).cmp(&coverage(&a.1)).then(a.0.cmp(&b.0)));
    users.truncate(top_users);
    users.sort_by_key(|u| u.0);
    RankingSample::new(users.iter().map(|(_, r)| bucket_scores(r)).collect())
}
