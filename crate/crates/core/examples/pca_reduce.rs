//! PCA on correlated 6-D data: spectrum, explained variance and the effect
//! of whitening.
//!
//! cargo run --release --example pca_reduce

use luq::linalg::pca_fit;
use luq::FeatureMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> luq::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    // two latent factors mixed into six columns, plus small noise
    let mix = [[3.0, 0.0], [2.0, 1.0], [0.0, 2.0], [1.0, -1.0], [0.5, 0.5], [-1.0, 0.0]];
    let rows: Vec<Vec<f64>> = (0..1000)
        .map(|_| {
            let f: [f64; 2] = [StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)];
            mix.iter()
                .map(|m| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    m[0] * f[0] + m[1] * f[1] + 0.1 * e
                })
                .collect()
        })
        .collect();
    let x = FeatureMatrix::from_rows(&rows)?;

    let full = pca_fit(&x, 6, false)?;
    let total: f64 = full.eigenvalues.iter().sum();
    let mut acc = 0.0;
    for (i, e) in full.eigenvalues.iter().enumerate() {
        acc += e;
        println!("component {i}: eigenvalue {e:>8.4}  cumulative {:.4}", acc / total);
    }

    for whiten in [false, true] {
        let p = pca_fit(&x, 2, whiten)?;
        let y = p.transform(&x)?;
        let m = y.matrix();
        let var: Vec<f64> = (0..2)
            .map(|j| {
                let col: Vec<f64> = (0..m.rows()).map(|i| m[(i, j)]).collect();
                let mean = col.iter().sum::<f64>() / col.len() as f64;
                col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (col.len() - 1) as f64
            })
            .collect();
        println!("whiten={whiten}: reduced column variances {:.4} {:.4}", var[0], var[1]);
    }
    Ok(())
}
