//! Geometric median of a few univariate Gaussian parameter points, viewed as
//! points of ℝ × ℝ₊ (mean, standard deviation). The outlier at μ = 5 barely
//! moves the median, while it would drag the Fréchet mean substantially.

use geomedian::{
    Error, FactorManifold, FactorPoint, ProductManifold, ProductPoint, SolverConfig,
    WeightedSample,
};
use nalgebra::DVector;

fn main() -> Result<(), Error> {
    let pm = ProductManifold::new(vec![
        FactorManifold::euclidean(1)?,
        FactorManifold::positive_half_line(),
    ])?;
    let gauss = |mu: f64, sigma: f64| {
        ProductPoint::new(vec![
            FactorPoint::Euclidean(DVector::from_column_slice(&[mu])),
            FactorPoint::Positive(sigma),
        ])
    };
    let sample = WeightedSample::uniform(
        &pm,
        vec![gauss(-1.0, 0.7), gauss(-1.2, 0.8), gauss(5.0, 1.5)],
    )?;
    let report = geomedian::solve(&pm, &sample, None, &SolverConfig::default())?;
    let mean = geomedian::product_mean(&pm, &sample)?;
    println!(
        "median: {:?} ({})",
        report.minimizer,
        report.termination.as_str()
    );
    println!("mean:   {mean:?}");
    Ok(())
}
