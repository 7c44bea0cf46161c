use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranking::{PartialRanking, Permutation, Ranking, RankingSample, SampleMeta};

/// Text layouts for ranking files. One ranking per line; blank lines and
/// lines starting with `#` are skipped.
///
/// - `ranks`: `r(1) r(2) ... r(n)`. A line that is not a permutation is read
///   as bucket labels, smaller label ranked higher, equal labels tied.
/// - `order`: elements from the highest ranked to the lowest.
/// - `buckets`: buckets from highest to lowest separated by `|`, e.g.
///   `1 2 6 | 3 4 7 | 5 8 9`. A final `|*` adds an unrated bottom bucket
///   holding every element not listed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Ranks,
    Order,
    Buckets,
}

impl Format {
    pub fn parse(s: &str) -> Option<Format> {
        match s {
            "ranks" => Some(Format::Ranks),
            "order" => Some(Format::Order),
            "buckets" => Some(Format::Buckets),
            _ => None,
        }
    }
}

/// Reads a ranking file. `n` fixes the number of elements; without it the
/// first ranking sets `n` (for `buckets` lines with `|*`, the largest id in
/// the file does).
pub fn parse_rankings(path: impl AsRef<Path>, format: Format, n: Option<usize>) -> Result<RankingSample> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let sample = parse_str(&text, format, n)?;
    Ok(sample.with_meta(SampleMeta {
        source: path.display().to_string(),
        ..SampleMeta::default()
    }))
}

pub fn parse_str(text: &str, format: Format, n: Option<usize>) -> Result<RankingSample> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect();
    if lines.is_empty() {
        return Err(Error::EmptySample);
    }
    let rankings = match format {
        Format::Ranks | Format::Order => {
            let mut expected = n;
            lines
                .iter()
                .map(|&(no, line)| {
                    let values = numbers(no, line.split_whitespace())?;
                    let want = *expected.get_or_insert(values.len());
                    if values.len() != want {
                        return Err(Error::InconsistentN { line: no, expected: want, found: values.len() });
                    }
                    let at = |e: Error| Error::Parse { line: no, message: e.to_string() };
                    if format == Format::Order {
                        return Permutation::from_order(&values).map(Ranking::Full).map_err(at);
                    }
                    match Permutation::from_ranks(values.clone()) {
                        Ok(p) => Ok(Ranking::Full(p)),
                        Err(_) if !values.contains(&0) => {
                            PartialRanking::from_labels(&values).map(Ranking::Partial).map_err(at)
                        }
                        Err(e) => Err(at(e)),
                    }
                })
                .collect::<Result<Vec<_>>>()?
        }
        Format::Buckets => {
            let parsed: Vec<(usize, Vec<Vec<usize>>, bool)> = lines
                .iter()
                .map(|&(no, line)| parse_bucket_line(no, line).map(|(b, tail)| (no, b, tail)))
                .collect::<Result<_>>()?;
            let n = match n {
                Some(n) => n,
                None if parsed.iter().any(|(_, _, tail)| *tail) => parsed
                    .iter()
                    .flat_map(|(_, b, _)| b.iter().flatten().copied())
                    .max()
                    .unwrap_or(0),
                None => parsed[0].1.iter().map(Vec::len).sum(),
            };
            parsed
                .into_iter()
                .map(|(no, buckets, tail)| bucket_ranking(no, n, buckets, tail))
                .collect::<Result<Vec<_>>>()?
        }
    };
    RankingSample::new(rankings)
}

fn numbers<'a>(line: usize, tokens: impl Iterator<Item = &'a str>) -> Result<Vec<usize>> {
    tokens
        .map(|t| {
            t.parse::<usize>().map_err(|_| Error::Parse {
                line,
                message: format!("`{t}` is not a non-negative integer"),
            })
        })
        .collect()
}

fn parse_bucket_line(no: usize, line: &str) -> Result<(Vec<Vec<usize>>, bool)> {
    let mut parts: Vec<&str> = line.split('|').map(str::trim).collect();
    let tail = parts.last() == Some(&"*");
    if tail {
        parts.pop();
    }
    if parts.iter().any(|p| p.contains('*')) {
        return Err(Error::Parse { line: no, message: "`*` may only appear as the last bucket".into() });
    }
    let buckets = parts
        .into_iter()
        .map(|p| numbers(no, p.split_whitespace()))
        .collect::<Result<Vec<_>>>()?;
    if buckets.iter().any(Vec::is_empty) {
        return Err(Error::Parse { line: no, message: "empty bucket".into() });
    }
    Ok((buckets, tail))
}

fn bucket_ranking(no: usize, n: usize, mut buckets: Vec<Vec<usize>>, tail: bool) -> Result<Ranking> {
    let listed: usize = buckets.iter().map(Vec::len).sum();
    if !tail && listed != n {
        return Err(Error::InconsistentN { line: no, expected: n, found: listed });
    }
    let at = |e: Error| Error::Parse { line: no, message: e.to_string() };
    let mut unrated = false;
    if tail && listed < n {
        let mut seen = vec![false; n + 1];
        for &x in buckets.iter().flatten() {
            if x == 0 || x > n {
                return Err(at(Error::ElementOutOfRange { element: x, n }));
            }
            seen[x] = true;
        }
        buckets.push((1..=n).filter(|&x| !seen[x]).collect());
        unrated = true;
    }
    let partial = PartialRanking::from_buckets(n, &buckets, unrated).map_err(at)?;
    if !unrated && partial.is_permutation() {
        return Ok(Ranking::Full(partial.tie_broken()));
    }
    Ok(Ranking::Partial(partial))
}

/// Renders a sample in `format`. Ties need `ranks` or `buckets`; an unrated
/// tail needs `buckets`.
pub fn write_str(sample: &RankingSample, format: Format) -> Result<String> {
    let mut out = String::new();
    for r in sample.rankings() {
        let line = format_ranking(r, format)?;
        writeln!(out, "{line}").expect("writing to a String");
    }
    Ok(out)
}

pub fn write_rankings(path: impl AsRef<Path>, sample: &RankingSample, format: Format) -> Result<()> {
    std::fs::write(path, write_str(sample, format)?)?;
    Ok(())
}

pub fn format_ranking(r: &Ranking, format: Format) -> Result<String> {
    let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
    match (format, r) {
        (Format::Ranks, Ranking::Full(p)) => Ok(join(p.ranks())),
        (Format::Ranks, Ranking::Partial(p)) if !p.has_unrated_tail() => Ok(join(p.bucket_of())),
        (Format::Order, Ranking::Full(p)) => Ok(join(&p.order())),
        (Format::Buckets, r) => {
            let p = r.as_partial();
            let mut buckets: Vec<String> = p.buckets().iter().map(|b| join(b)).collect();
            if p.has_unrated_tail() {
                buckets.pop();
                buckets.push("*".into());
            }
            Ok(buckets.join(" | "))
        }
        (Format::Ranks, _) => Err(Error::Format("an unrated tail needs the buckets format".into())),
        (Format::Order, _) => Err(Error::Format("ties need the ranks or buckets format".into())),
    }
}
