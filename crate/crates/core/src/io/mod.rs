//! File formats: binary matrix and model files, CSV tables, run
//! configuration and SVG plots.

mod bytes;
pub mod config;
pub mod csv;
pub mod matrix_file;
pub mod model_file;
pub mod svg;

pub use config::RunConfig;
pub use csv::{csv_string, format_float, parse_csv, read_csv, read_numeric, write_csv, Cell, CsvTable};
pub use matrix_file::{decode_matrix, encode_matrix, read_matrix, write_matrix};
pub use model_file::{LatentDensity, ModelFile};
pub use svg::LinePlot;
