use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ruin_core::{derive_params, ClaimDistribution, ModelParams};

fn claims() -> impl Strategy<Value = ClaimDistribution> {
    prop_oneof![
        (0.1f64..10.0).prop_map(|r| ClaimDistribution::exponential(r).unwrap()),
        (0.5f64..6.0, 0.1f64..5.0).prop_map(|(i, s)| ClaimDistribution::pareto(i, s).unwrap()),
        (-2.0f64..2.0, 0.1f64..2.0).prop_map(|(l, s)| ClaimDistribution::lognormal(l, s).unwrap()),
        (0.1f64..10.0).prop_map(|a| ClaimDistribution::deterministic(a).unwrap()),
        prop::collection::vec(0.01f64..20.0, 1..12)
            .prop_map(|s| ClaimDistribution::empirical(s).unwrap()),
    ]
}

proptest! {
    #[test]
    fn tail_and_cdf_are_complementary(d in claims(), x in 0.0f64..50.0) {
        let t = d.tail(x).unwrap();
        prop_assert!((0.0..=1.0).contains(&t));
        prop_assert!((t + d.cdf(x).unwrap() - 1.0).abs() < 1e-12);
        prop_assert!(d.tail_left_limit(x) >= t);
    }

    #[test]
    fn tail_is_non_increasing(d in claims(), x in 0.0f64..50.0, dx in 0.0f64..10.0) {
        prop_assert!(d.tail(x + dx).unwrap() <= d.tail(x).unwrap());
    }

    #[test]
    fn inverse_tail_inverts_continuous_tails(d in claims(), v in 0.001f64..0.999) {
        prop_assume!(d.atoms().is_empty());
        let x = d.inverse_tail(v);
        prop_assert!((d.tail(x).unwrap() - v).abs() < 1e-9);
    }

    #[test]
    fn samples_are_positive(d in claims(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..32 {
            let x = d.sample(&mut rng);
            prop_assert!(x > 0.0 && x.is_finite());
        }
    }

    /// Measuring money in another unit scales alpha and leaves gamma and mu alone.
    #[test]
    fn currency_change_scales_alpha_only(s in 0.1f64..10.0, c in 0.1f64..5.0, lambda in 0.0f64..5.0) {
        let m = ModelParams { a: 0.1, r: 0.02, kappa: 0.7, sigma: 0.3, c, lambda };
        let scaled = ModelParams { c: s * c, ..m };
        let (p, q) = (derive_params(&m), derive_params(&scaled));
        prop_assert!((q.alpha - s * p.alpha).abs() <= 1e-12 * q.alpha);
        prop_assert_eq!(p.gamma, q.gamma);
        prop_assert_eq!(p.mu, q.mu);
    }
}

#[test]
fn empirical_mean_of_samples() {
    let d = ClaimDistribution::lognormal(-0.5, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 200_000;
    let mean = (0..n).map(|_| d.sample(&mut rng)).sum::<f64>() / n as f64;
    assert!((mean / d.mean().unwrap() - 1.0).abs() < 0.02, "{mean}");
}
