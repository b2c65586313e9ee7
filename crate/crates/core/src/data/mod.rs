//! Datasets, sufficient statistics and forward sampling.

mod counts;
mod csv_io;
mod dataset;
mod sample;

pub use counts::{family_counts, FamilyCounts};
pub(crate) use counts::family_counts_in;
pub use csv_io::{load_csv, read_csv, save_csv, write_csv};
pub use dataset::Dataset;
pub use sample::{ancestral_sample, ForwardSampler};
