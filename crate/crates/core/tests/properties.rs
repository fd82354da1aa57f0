use std::f64::consts::PI;

use proptest::prelude::*;
use qgan_core::noise::{empirical_distribution, sample_counts, tvd};
use qgan_core::state::{expectation, outcome_distribution};
use qgan_core::{
    clements_decompose, distance_up_to_global_phase, fidelity, generate_state, mesh_unitary, projection_phases,
    BasisParams, DiscriminatorParams, GeneratorParams, MeshPhases,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn phases(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0 * PI..2.0 * PI, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mesh_round_trip(flat in phases(15)) {
        let u = mesh_unitary(&MeshPhases::from_slice(&flat).unwrap());
        let rebuilt = mesh_unitary(&clements_decompose(u.matrix()).unwrap());
        prop_assert!(distance_up_to_global_phase(&u, &rebuilt) < 1e-10);
    }

    #[test]
    fn generated_state_is_normalized_and_maximally_entangled(flat in phases(30)) {
        let s = generate_state(&GeneratorParams::from_flat(&flat).unwrap());
        prop_assert!((s.amplitudes().norm() - 1.0).abs() < 1e-12);
        let rho = s.reduced_signal();
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i == j { 0.25 } else { 0.0 };
                prop_assert!((rho[(i, j)].re - expected).abs() < 1e-12 && rho[(i, j)].im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fidelity_is_symmetric_and_bounded(a in phases(30), b in phases(30)) {
        let sa = generate_state(&GeneratorParams::from_flat(&a).unwrap());
        let sb = generate_state(&GeneratorParams::from_flat(&b).unwrap());
        let f = fidelity(&sa, &sb);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&f));
        prop_assert!((f - fidelity(&sb, &sa)).abs() < 1e-12);
        prop_assert!((fidelity(&sa, &sa) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn outcome_distribution_sums_to_one(g in phases(30), ps in phases(14)) {
        let s = generate_state(&GeneratorParams::from_flat(&g).unwrap());
        let signal = projection_phases(&BasisParams::from_array(ps[..7].try_into().unwrap()));
        let idler = projection_phases(&BasisParams::from_array(ps[7..].try_into().unwrap()));
        let d = DiscriminatorParams { signal, idler };
        let dist = outcome_distribution(&s, &d);
        prop_assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(dist.iter().all(|&p| p >= 0.0));
        prop_assert!((expectation(&s, &d) - dist[5]).abs() < 1e-15);
    }

    #[test]
    fn tvd_of_sampled_counts_is_a_distance(seed in any::<u64>(), count in 10.0f64..5000.0) {
        let uniform = [1.0 / 16.0; 16];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let counts = sample_counts(&uniform, count, &mut rng);
        let t = tvd(&uniform, &empirical_distribution(&counts));
        prop_assert!((0.0..=1.0).contains(&t));
        prop_assert_eq!(tvd(&uniform, &uniform), 0.0);
    }
}
