//! Lattice value of a small random problem with its cost decomposition.
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use roughctl::control::{sequence_control, value_function};
use roughctl::fixtures::{random_history, random_problem};
use roughctl::gridpath::TimeGrid;

fn main() -> roughctl::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let grid = TimeGrid::uniform(1.0, 48)?;
    let problem = random_problem(2, 2, grid, 4, &mut rng)?;
    let gamma = random_history(grid, problem.alpha, 0.1, &mut rng)?;
    let v = value_function(&problem, 0, &[0.2, -0.5], &gamma)?;
    let b = v.breakdown;
    println!("value {:.10} at argmin {}", v.value, v.argmin_string());
    println!("running {:.6}  rough {:.6}  penalty {:.6}  terminal {:.6}", b.running, b.rough, b.penalty, b.terminal);
    println!("{} of {} leaves evaluated, {} nodes", v.leaves_evaluated, v.candidates, v.nodes_expanded);
    let u = sequence_control(&problem, 0, &v.argmin)?;
    println!("optimal pseudo-control per cell: {:?}", (0..48).step_by(12).map(|c| u.at(c)[0]).collect::<Vec<_>>());
    Ok(())
}
