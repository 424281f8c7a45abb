//! Dynamic programming identity at every block boundary.
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use roughctl::control::dpp_check;
use roughctl::fixtures::{random_history, random_problem};
use roughctl::gridpath::TimeGrid;

fn main() -> roughctl::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let grid = TimeGrid::uniform(1.0, 24)?;
    let problem = random_problem(1, 2, grid, 4, &mut rng)?;
    let gamma = random_history(grid, problem.alpha, 0.0, &mut rng)?;
    for t in [0, 6, 12, 18, 24] {
        let rep = dpp_check(&problem, 0, &[0.4], &gamma, t)?;
        println!("t = {t:>2}: direct {:.12} recursive {:.12} gap {:.2e}", rep.direct, rep.recursive, rep.gap);
    }
    Ok(())
}
