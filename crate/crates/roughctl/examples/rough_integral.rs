//! Compensated rough integral of `Y = φ(X)` against a two-dimensional driver.
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use roughctl::controlled::{compose, rough_integral_report, ControlledPath};
use roughctl::fixtures::{random_sine_field, random_walk};
use roughctl::gridpath::{SampledPath, TimeGrid};
use roughctl::roughlift::signature_lift;

fn main() -> roughctl::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let grid = TimeGrid::uniform(1.0, 256)?;
    let walk = random_walk(grid, 2, 0.6, &mut rng)?;
    let driver = Arc::new(signature_lift(&walk, 2.5)?);
    let x = ControlledPath::from_trace(driver, &walk)?;
    let phi = random_sine_field(2, 1, 2, 1.0, &mut rng)?;
    let zero = SampledPath::zeros(grid, 1);
    let y = compose(&phi, &x, &zero)?;
    let rep = rough_integral_report(&y, (0, 256))?;
    println!("∫φ(X)dX         = {:?}", rep.value);
    println!("coarsened (2×)  = {:?}", rep.coarse);
    println!("gap             = {:.3e}", rep.gap);
    Ok(())
}
