//! Brute-force oracles, dataset generators and the scaling experiment.

mod dataset;
mod experiment;
mod oracle;

pub use dataset::{
    format_numbers, gen_dataset, geometric, parse_numbers, perfect_difference_set, read_numbers,
    Dataset, DatasetKind, DatasetParams, DEFAULT_RANDOM_MAX, PDS_MAX_ORDER,
};
pub use experiment::{
    fit_exponent, geometric_sizes, medians, read_rows, row_seed, scaling_experiment, write_rows,
    ExperimentRow,
};
pub use oracle::{energy_by_enumeration, max_bi_sidon_exact, ENUMERATION_LIMIT, ORACLE_LIMIT};
