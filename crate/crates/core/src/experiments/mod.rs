//! Reproducible experiments: genre tradeoff curves on ratings data and
//! exposure under relevance uncertainty.

mod export;
mod movielens;
mod relevance;
mod tradeoff;

pub use export::{
    export_results, format_sig, render, table_from_json, table_to_csv, table_to_json, table_to_svg,
    ExportFormat, CSV_HEADER,
};
pub use movielens::{
    default_synthetic_movielens, load_movielens, load_movielens_dir, parse_items, parse_ratings,
    synthesize_ratings, synthetic_movielens, Rating, RatingsDataset, SyntheticDataset,
    SyntheticItem, GENRES, ML100K_RATING_MARGINALS, SYNTHETIC_CONCENTRATION,
    SYNTHETIC_ITEMS_PER_GENRE, SYNTHETIC_RATINGS_PER_ITEM,
};
pub use relevance::{
    arm_rankings, relevance_experiment, synthetic_scores, ArmExposure, RelevanceConfig,
    RelevanceReport,
};
pub use tradeoff::{
    genre_experiment, genre_run, instance_tradeoff, phi_grid, GenreExperimentConfig, GenreRun,
    TradeoffMetadata, TradeoffRow, TradeoffTable,
};
