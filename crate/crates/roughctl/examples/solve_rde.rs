//! Controlled RDE with a fractional control, solved and checked for self-consistency.
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use roughctl::fixtures::{random_driver, random_history, random_sine_field};
use roughctl::gridpath::TimeGrid;
use roughctl::rde::{consistency, solve, RdeProblem, SolveOptions};

fn main() -> roughctl::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let grid = TimeGrid::uniform(1.0, 256)?;
    let driver = random_driver(grid, 2, 0.7, 2.5, &mut rng)?;
    let control = random_history(grid, 0.8, 0.0, &mut rng)?.to_sampled();
    let problem = RdeProblem::new(
        Arc::new(random_sine_field(2, 1, 2, 0.5, &mut rng)?),
        Arc::new(random_sine_field(2, 1, 4, 0.5, &mut rng)?),
        driver,
        control,
        vec![0.3, -0.2],
    )?;
    let sol = solve(&problem, &SolveOptions::default())?;
    let trace = sol.trace();
    for i in (0..=256).step_by(32) {
        println!("t = {:.4}  X = {:?}", grid.time(i), trace.at(i));
    }
    let c = consistency(&problem, &sol);
    println!("windows {}, self-consistency {:.3e}, integral equation {:.3e}", sol.diagnostics.len(), c.self_consistency, c.integral_equation);
    Ok(())
}
