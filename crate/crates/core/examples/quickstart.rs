//! The README walk-through, runnable end to end:
//! density at a point, an orthant CDF with its error estimate,
//! and a reproducible batch of ratio draws.

use normal_ratio::{exact_cdf, sample_ratios, NormalRatioModel, RatioPoint, Result};

fn main() -> Result<()> {
    let model = NormalRatioModel::from_parts(
        vec![10.0, 0.0, 0.0],
        &[
            vec![1.0, 0.5, 0.5],
            vec![0.5, 1.0, 0.5],
            vec![0.5, 0.5, 1.0],
        ],
    )?;

    // joint density of (x2/x1, x3/x1) at the origin
    let f = model.density(&RatioPoint::new(vec![0.0, 0.0])?)?;
    println!("density at the origin: {f}");

    // P(y1 <= 2, y2 <= 3) with an error estimate, deterministic for a seed
    let p = exact_cdf(&model, &[2.0, 3.0], 1 << 14, 12, 0)?;
    println!("P(y <= (2, 3)): {} +/- {:.2e}", p.value, p.error_estimate);

    // one million reproducible ratio draws
    let batch = sample_ratios(&model, 1_000_000, 42);
    println!(
        "drew {} ratio rows ({} redraws for unusable denominators)",
        batch.n(),
        batch.redraws()
    );

    Ok(())
}
