//! Property tests over random parameters, datasets and interval data.

use defcure::data::{CompetingRisksDataset, IntervalObservation};
use defcure::distributions::{DefectiveSurvival, Family, GompertzParams, InverseGaussianParams, LinkedParams};
use defcure::estimation::cure_fractions;
use defcure::likelihood::{dataset_log_likelihood, obs_log_likelihood};
use defcure::simulation::{generate_with_latents, gompertz_reference_params, inverse_gaussian_reference_params, SimScenario};
use defcure::turnbull::{turnbull_fit, TurnbullOptions};
use proptest::prelude::*;

fn shape() -> impl Strategy<Value = f64> {
    (-3.0f64..-0.5).prop_map(|e| -10f64.powf(e))
}

fn scale() -> impl Strategy<Value = f64> {
    (-1.5f64..0.7).prop_map(|e| 10f64.powf(e))
}

fn observation(k: usize) -> impl Strategy<Value = IntervalObservation> {
    (0.0f64..5.0, 0.05f64..4.0, 0..=k, -1.0f64..1.0).prop_map(|(l, w, cause, x)| {
        if cause == 0 {
            IntervalObservation::censored(l, vec![x])
        } else {
            IntervalObservation::event(l, l + w, cause, vec![x])
        }
    })
}

fn params(family: Family) -> impl Strategy<Value = LinkedParams> {
    prop::collection::vec(-0.5f64..0.5, 8).prop_map(move |v| {
        let base = [-0.5, 0.0, -1.0, 0.0, -0.4, 0.0, -1.5, 0.0];
        let values: Vec<f64> = base.iter().zip(&v).map(|(b, d)| b + d).collect();
        LinkedParams::from_vector(family, 2, 1, &values).unwrap()
    })
}

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![Just(Family::Gompertz), Just(Family::InverseGaussian)]
}

fn survival(family: Family, a: f64, b: f64) -> Box<dyn DefectiveSurvival> {
    match family {
        Family::Gompertz => Box::new(GompertzParams::new(a, b).unwrap()),
        Family::InverseGaussian => Box::new(InverseGaussianParams::new(a, b).unwrap()),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn survival_is_monotone_and_bounded(f in family(), a in shape(), b in scale(), t1 in 0.0f64..50.0, dt in 0.0f64..50.0) {
        let s = survival(f, a, b);
        let (s1, s2) = (s.survival(t1), s.survival(t1 + dt));
        let cure = s.cure().unwrap();
        prop_assert!(s2 <= s1 + 1e-15);
        prop_assert!(s2 >= cure - 1e-12 && s1 <= 1.0);
        prop_assert!(s.interval_probability(t1, t1 + dt) >= 0.0);
    }

    #[test]
    fn quantile_round_trip(f in family(), a in shape(), b in scale(), u in 0.001f64..0.999) {
        let s = survival(f, a, b);
        let cure = s.cure().unwrap();
        prop_assume!(1.0 - cure > 1e-6);
        let t = s.conditional_quantile(u).unwrap();
        let back = (1.0 - s.survival(t)) / (1.0 - cure);
        prop_assert!((back - u).abs() < 1e-6, "u={u} t={t} back={back}");
    }

    #[test]
    fn cure_fraction_is_product_of_causes(lp in params(Family::Gompertz), x in -1.0f64..1.0) {
        if let Ok(c) = cure_fractions(&lp, &[x]) {
            prop_assert!(c.overall > 0.0 && c.overall <= 1.0);
            let product: f64 = c.per_cause.iter().product();
            prop_assert!((c.overall - product).abs() < 1e-15);
            let s = lp.overall_survival(1e7, &[x]).unwrap();
            prop_assert!((s - c.overall).abs() < 1e-6);
        }
    }

    #[test]
    fn likelihood_is_sum_of_terms_and_permutation_invariant(
        f in family(),
        obs in prop::collection::vec(observation(2), 1..40),
        seed in any::<u64>(),
        raw in params(Family::Gompertz),
    ) {
        let lp = LinkedParams::from_vector(f, 2, 1, &raw.to_vector()).unwrap();
        let ds = CompetingRisksDataset::new(obs.clone(), 2, 1);
        let total = dataset_log_likelihood(&lp, &ds).unwrap().loglik;
        let sum: f64 = obs.iter().map(|o| obs_log_likelihood(&lp, o).unwrap()).sum();
        prop_assert!((total - sum).abs() <= 1e-9 * sum.abs().max(1.0));
        prop_assert!(total <= 0.0);

        let mut shuffled = obs.clone();
        let mut state = seed;
        for i in (1..shuffled.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (state >> 33) as usize % (i + 1));
        }
        let permuted = dataset_log_likelihood(&lp, &CompetingRisksDataset::new(shuffled, 2, 1)).unwrap().loglik;
        prop_assert!((total - permuted).abs() <= 1e-10 * total.abs().max(1.0));
    }

    #[test]
    fn turnbull_em_is_monotone_and_masses_sum_to_one(
        raw in prop::collection::vec((0u8..20, 1u8..10, prop::bool::weighted(0.2)), 1..30)
    ) {
        let data: Vec<(f64, f64)> = raw
            .iter()
            .map(|&(l, w, censored)| {
                let l = l as f64 * 0.5;
                (l, if censored { f64::INFINITY } else { l + w as f64 * 0.5 })
            })
            .collect();
        let est = turnbull_fit(&data, TurnbullOptions::default()).unwrap();
        for w in est.log_likelihood_trace.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-10);
        }
        prop_assert!((est.finite_mass() + est.residual_mass - 1.0).abs() < 1e-9);
        let mut last = 1.0;
        for &(_, p) in &est.support_intervals {
            let s = est.survival_at(p).value;
            prop_assert!(s <= last + 1e-12);
            last = s;
        }
    }

    #[test]
    fn generated_intervals_bracket_latent_times(seed in any::<u64>(), ig in any::<bool>()) {
        let truth = if ig { inverse_gaussian_reference_params() } else { gompertz_reference_params() };
        let g = generate_with_latents(&SimScenario::new(truth, 60, 1, 0), seed).unwrap();
        for (i, o) in g.dataset.observations.iter().enumerate() {
            if o.right.is_finite() {
                prop_assert!(o.left < g.latent_times[i] && g.latent_times[i] <= o.right);
                prop_assert!(o.cause == 1 || o.cause == 2);
            } else {
                prop_assert_eq!(o.cause, 0);
                prop_assert!(o.left < g.latent_times[i]);
            }
        }
    }
}
