//! p-variation of a random walk for a range of exponents.
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use roughctl::fixtures::random_walk;
use roughctl::gridpath::{holder_norm, p_variation, TimeGrid};

fn main() -> roughctl::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let walk = random_walk(TimeGrid::uniform(1.0, 400)?, 1, 1.0, &mut rng)?;
    println!("{:>5} {:>12}", "p", "‖x‖_p");
    for p in [1.0, 1.5, 2.0, 2.5, 3.0, 4.0] {
        println!("{p:>5.1} {:>12.6}", p_variation(&walk, p, (0, 400))?);
    }
    println!("1/3-Hölder norm {:.6}", holder_norm(&walk, 1.0 / 3.0)?);
    Ok(())
}
