//! Binary matrix files, CSV tables and model files: write, read back and
//! compare bit for bit. Files go to a directory given as the first argument
//! (default: the system temp dir).
//!
//! cargo run --release --example model_files -- [dir]

use std::collections::BTreeMap;
use std::path::PathBuf;

use luq::density::{ClassConditionalGmm, Gmm};
use luq::io::{read_csv, read_matrix, write_csv, write_matrix, Cell, LatentDensity, ModelFile};
use luq::linalg::pca_fit;
use luq::priors::OutputPrior;
use luq::{FeatureMatrix, Matrix};

fn main() -> luq::Result<()> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(std::env::temp_dir);
    let m = Matrix::from_rows(&[[1.0, -2.5, 1e-300], [f64::MAX, 0.1, 3.0]])?;
    let path = dir.join("example.luq");
    write_matrix(&path, &m)?;
    let back = read_matrix(&path)?;
    println!("{}: {}x{}, identical {}", path.display(), back.rows(), back.cols(), back == m);

    let csv = dir.join("example.csv");
    let rows: Vec<Vec<Cell>> = (0..3).map(|i| vec![Cell::Int(i), Cell::Float(0.1 * i as f64)]).collect();
    write_csv(&csv, &["index", "value"], &rows)?;
    let table = read_csv(&csv)?;
    println!("{}: columns {:?}, values {:?}", csv.display(), table.header, table.column("value").unwrap_or_default());

    let x = FeatureMatrix::from_rows(&[[0.0, 1.0, 2.0], [1.0, 0.5, 2.5], [2.0, 0.0, 3.5], [3.0, 1.5, 1.0]])?;
    let pca = pca_fit(&x, 2, false)?;
    let mut cov = Matrix::identity(2);
    cov.map_inplace(|v| v * 0.5);
    let gmms = ClassConditionalGmm::new(BTreeMap::from([
        (0, Gmm::gaussian(vec![0.0, 0.0], &cov)?),
        (1, Gmm::gaussian(vec![1.0, -1.0], &cov)?),
    ]))?;
    let prior = OutputPrior::categorical(vec![0, 1], &[0.6, 0.4])?;
    let model = ModelFile::new(Some(pca), LatentDensity::ClassGmms(gmms), prior)?;
    let mpath = dir.join("example.luqm");
    model.save(&mpath)?;
    let loaded = ModelFile::load(&mpath)?;
    println!(
        "{}: input dim {}, round trip identical {}",
        mpath.display(),
        loaded.input_dim(),
        loaded.encode() == std::fs::read(&mpath).unwrap()
    );
    Ok(())
}
