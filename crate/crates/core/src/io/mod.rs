//! Import and export: round CSVs, result and chart JSON, session bundles and
//! the seed catalogs.

mod bundle;
mod catalog;
mod csv_round;
mod export;

pub use bundle::{export_bundle, import_bundle, read_bundle_file, round_to_csv_inputs, write_bundle_file, BundleError};
pub use catalog::{load_seed_catalog, CriteriaCategory, SeedCatalog, SourceCatalogEntry};
pub use csv_round::{
    export_round, import_round, import_votes, matrix_file_name, ImportError, ImportedRound, SCORES_FILE, VOTES_FILE,
};
pub use export::{
    chart_series, chart_series_json, discrepancies_json, import_result, result_json, round_significant, to_stable_json,
    Chart, ChartSeries, Series, SIGNIFICANT_DIGITS,
};
