//! Ranking text formats and dataset importers.

mod datasets;
mod formats;

pub use datasets::{
    import_dataset, parse_jester, parse_movielens, parse_sushi, DatasetKind, ImportOptions, JesterMode, JESTER_UNRATED,
};
pub use formats::{format_ranking, parse_rankings, parse_str, write_rankings, write_str, Format};
