//! Fixtures shared by the criterion benches.

use tempo_core::{auto_t, generate, Density, GeneratorSpec, TemporalNetwork, WeightLaw};

/// Seed used by every fixture.
pub const SEED: u64 = 7;

/// A generated network with uniform weights and its admissible `t`.
pub fn fixture(density: Density, n: usize, frames: usize) -> (TemporalNetwork, f64) {
    let mut spec = GeneratorSpec::new(density, n, frames, SEED);
    spec.weights = WeightLaw::Uniform;
    let net = generate(&spec).expect("fixture spec is valid");
    let t = auto_t(&net);
    (net, t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_admissible() {
        let (net, t) = fixture(Density::Sparse, 50, 3);
        assert_eq!((net.n(), net.num_frames()), (50, 3));
        assert!(t > 0.0 && t.is_finite());
    }
}
