//! Two-sided Mann-Whitney U test on small and large samples.
//!
//! cargo run --example mann_whitney

use rand_distr::{Distribution, Poisson};

use rdw_arena::harness::mann_whitney_u;
use rdw_arena::rng::stream;

fn main() -> rdw_arena::Result<()> {
    // Small samples take the exact distribution.
    let a = [12.0, 15.0, 11.0, 19.0, 14.0];
    let b = [21.0, 18.0, 25.0, 17.0, 23.0, 20.0];
    let (u, p) = mann_whitney_u(&a, &b)?;
    println!("exact:  U = {u}, p = {p:.4}");

    // Reset counts are tie-heavy; with 30 per side the normal approximation applies.
    let mut rng = stream(3, &[]);
    for shift in [0.0, 2.0, 5.0] {
        let base = Poisson::new(40.0).unwrap();
        let moved = Poisson::new(40.0 + shift).unwrap();
        let x: Vec<f64> = (0..30).map(|_| base.sample(&mut rng)).collect();
        let y: Vec<f64> = (0..30).map(|_| moved.sample(&mut rng)).collect();
        let (u, p) = mann_whitney_u(&x, &y)?;
        println!("normal: mean shift {shift:>3}: U = {u:>5.1}, p = {p:.4}");
    }
    Ok(())
}
