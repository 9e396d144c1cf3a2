mod common;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use triadic::betabin::{log_b, BetaBinParams};
use triadic::em::{e_step, em_known_n, em_unknown_n, log_likelihood, EmConfig};
use triadic::model::{Mode, SupportFloor, TriadicDistribution, TriadicHistogram};
use triadic::pipeline::{run_activities, PipelineConfig};
use triadic::sampler::{calibrate_g0, compute_histogram, sample_window, SamplerConfig};
use triadic::synth::{generate_baseline_stream, StreamConfig};

use common::*;

fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

#[test]
fn overdispersed_kernel_matches_rational_value() {
    // b_12 = 2 p (1 - p) / (1 + a) with p = 27/1000, a = 1/10.
    let want = ratio(2, 1) * ratio(27, 1000) * ratio(973, 1000) / ratio(11, 10);
    let params = BetaBinParams::new(0.027, 0.1).unwrap();
    let got = log_b(1, 2, &params).unwrap().exp();
    assert!((got - want.to_f64().unwrap()).abs() < 1e-14, "{got}");

    // b_33 = p (p + a)(p + 2a) / ((1 + a)(1 + 2a)).
    let p = ratio(27, 1000);
    let a = ratio(1, 10);
    let two = ratio(2, 1);
    let one = ratio(1, 1);
    let want = p.clone() * (p.clone() + a.clone()) * (p + two.clone() * a.clone())
        / ((one.clone() + a.clone()) * (one + two * a));
    let got = log_b(3, 3, &params).unwrap().exp();
    assert!((got - want.to_f64().unwrap()).abs() < 1e-14, "{got}");
}

#[test]
fn log_likelihood_matches_naive_double_loop() {
    let h = calibrate_g0(&TriadicHistogram::from_sparse([(1, 60), (2, 25), (4, 9), (7, 6)], Mode::UserUser), 1000).unwrap();
    let theta =
        TriadicDistribution::from_weights(vec![5.0, 1.0, 0.5, 0.25, 0.5, 0.1, 0.1, 0.2, 0.3, 0.05], SupportFloor::Zero)
            .unwrap();
    for alpha in [0.0, 0.03, 0.7] {
        let params = BetaBinParams::new(0.2, alpha).unwrap();
        let naive: f64 = h
            .sparse()
            .into_iter()
            .map(|(j, g)| {
                let s: f64 = (j..=theta.w())
                    .map(|i| log_b(j, i, &params).unwrap().exp() * theta.prob(i))
                    .sum();
                g as f64 * s.ln()
            })
            .sum();
        let got = log_likelihood(&h, &theta, &params).unwrap();
        assert!((got - naive).abs() <= 1e-10 * naive.abs().max(1.0), "alpha {alpha}: {got} vs {naive}");
    }
}

#[test]
fn e_step_matches_hand_computed_posterior() {
    // W = 2, fair coin, uniform prior: P(i | j=0) = (4, 2, 1)/7 and
    // P(i | j=1) = (0, 1, 1)/2.
    let h = calibrate_g0(&TriadicHistogram::from_sparse([(1, 1)], Mode::UserUser), 3).unwrap();
    let theta = TriadicDistribution::uniform(2, SupportFloor::Zero);
    let params = BetaBinParams::new(0.5, 0.0).unwrap();
    let z = e_step(&h, &theta, &params).unwrap();
    let want = [[8.0 / 7.0, 0.0], [4.0 / 7.0, 0.5], [2.0 / 7.0, 0.5]];
    for (i, row) in want.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            assert!((z.get(i, j) - v).abs() < 1e-12, "z[{i}][{j}] = {}", z.get(i, j));
        }
    }
    assert!((z.total() - 3.0).abs() < 1e-12);
}

#[test]
fn independent_sampling_gives_near_zero_overdispersion() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let theta = [0.5, 0.1, 0.1, 0.1, 0.05, 0.05, 0.05, 0.05];
    let params = BetaBinParams::new(0.4, 0.0).unwrap();
    let h = calibrate_g0(&simulate_histogram(&mut rng, &theta, &params, 50_000), 50_000).unwrap();
    let fit = em_known_n(&h, &params.with_alpha(0.05), &EmConfig::default().with_w(7)).unwrap();
    assert!(fit.alpha <= 0.01, "alpha {}", fit.alpha);
}

#[test]
fn cliques_sampled_by_edges_show_positive_overdispersion() {
    // Triangles of a clique share edges, so their sampling is correlated.
    let n = 10_000;
    let w = 5_000;
    let social = clustered_social(n, 3);
    let planted = clique_family(n, 0.05, w);
    let stream = generate_baseline_stream(&social, &StreamConfig { w, ..StreamConfig::default() }, &planted, 9).unwrap();
    let sampler = SamplerConfig::new(0.3, 1.0, 4, Mode::UserUser).unwrap();
    let g = sample_window(stream.window_activities(0), &stream.window(0), &sampler, None).unwrap();
    let h = calibrate_g0(&compute_histogram(&g), n as u64).unwrap();
    let params = BetaBinParams::new(sampler.p_delta(), 0.01).unwrap();
    let fit = em_known_n(&h, &params, &EmConfig::default().with_w(w)).unwrap();
    assert!(fit.alpha > 0.001 && fit.alpha < 1.0, "alpha {}", fit.alpha);
}

#[test]
fn known_and_unknown_fits_agree_on_the_positive_part() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let theta = [0.6, 0.15, 0.1, 0.08, 0.05, 0.02];
    let params = BetaBinParams::new(0.6, 0.0).unwrap();
    let h = calibrate_g0(&simulate_histogram(&mut rng, &theta, &params, 200_000), 200_000).unwrap();
    let config = EmConfig {
        fit_alpha: false,
        max_iters: 20_000,
        ll_tol: 1e-14,
        ..EmConfig::default()
    }
    .with_w(5);
    let known = em_known_n(&h, &params, &config).unwrap();
    let unknown = em_unknown_n(&h, &params, &config).unwrap();
    let tv = known.theta.positive_part().unwrap().total_variation(&unknown.theta_plus);
    assert!(tv <= 0.03, "tv {tv}");
    let n_plus = 200_000.0 * (1.0 - known.theta.prob(0));
    assert!((unknown.n_plus - n_plus).abs() / n_plus < 0.03, "{} vs {n_plus}", unknown.n_plus);
}

#[test]
fn full_rate_pipeline_reports_the_exact_histogram() {
    let mut config = PipelineConfig::new(Mode::UserUser, 1.0, 100);
    config.n = Some(5);
    config.stream_start = Some(0);
    let (reports, _) = run_activities(&bowtie_activities(), None, &config).unwrap();
    assert_eq!(reports.len(), 1);
    let mut want = bowtie_histogram().sparse();
    want.retain(|&(j, _)| j > 0);
    let mut got = reports[0].histogram.clone();
    got.retain(|&(j, _)| j > 0);
    assert_eq!(got, want);
    let est = reports[0].estimate.as_ref().unwrap();
    let p2 = est.iter().find(|&&(i, _)| i == 2).map(|&(_, p)| p).unwrap();
    assert!((p2 - 0.2).abs() < 1e-6, "{est:?}");

    let (acts, social) = influence_example();
    let mut config = PipelineConfig::new(Mode::UserContent, 1.0, 100);
    config.p_prime = 1.0;
    config.stream_start = Some(0);
    let (reports, _) = run_activities(&acts, Some(&social), &config).unwrap();
    let mut want = influence_histogram().sparse();
    want.retain(|&(j, _)| j > 0);
    assert_eq!(reports[0].histogram.iter().filter(|&&(j, _)| j > 0).copied().collect::<Vec<_>>(), want);
}
