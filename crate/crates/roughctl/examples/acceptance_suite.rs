//! Runs the eleven acceptance checks and prints one line per check.
fn main() {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20240);
    let mut failed = 0;
    for id in 1..=roughctl::suite::NAMES.len() {
        let t = std::time::Instant::now();
        let c = roughctl::suite::run_criterion(id, seed);
        println!("{c}  ({:.2}s)", t.elapsed().as_secs_f64());
        failed += usize::from(!c.passed);
    }
    std::process::exit(i32::from(failed > 0));
}
