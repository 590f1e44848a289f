mod common;

use cage::data::generators::gen_oracle;
use cage::model::cage::{class_log_scores, log_joint, log_normalizer, posterior};
use cage::model::lf::LfSpec;
use cage::model::params::ModelParams;
use cage::model::potentials::continuous_log_potential;
use cage::training::objective::marginal_log_likelihood;
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn normalizer_and_posteriors_match_enumeration_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let n = rng.random_range(1..=4);
        let k = rng.random_range(2..=3);
        let lfs = random_lfs(&mut rng, n, k);
        let params = random_params(&mut rng, n, k);
        let oracle = enumerated_log_normalizer(&params, &lfs);
        assert!((log_normalizer(&params) - oracle).abs() < 1e-6);
        let (taus, scores) = random_rows(&mut rng, &lfs, 5, 0.5);
        for (tau, score) in taus.iter().zip(&scores) {
            let got = posterior(&params, &lfs, tau, score).unwrap();
            let want = oracle_posterior(&params, &lfs, tau, score);
            for (g, w) in got.probs.iter().zip(&want) {
                assert!((g - w).abs() < 1e-9, "{g} vs {w}");
            }
        }
    }
}

#[test]
fn joint_integrates_to_one_with_a_continuous_lf() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let k = rng.random_range(2..=3);
        let mut lfs =
            vec![LfSpec::continuous("c", rng.random_range(1..=k)).with_guides(0.8, Some(rng.random_range(0.2..0.8)))];
        for j in 0..rng.random_range(0..=2) {
            lfs.push(LfSpec::discrete(format!("d{j}"), rng.random_range(1..=k)));
        }
        let params = random_params(&mut rng, lfs.len(), k);
        let n = lfs.len();
        let mut total = 0.0;
        for y in 1..=k {
            for tau in trigger_configs(&lfs) {
                if tau[0] == 0 {
                    total += log_joint(&params, &lfs, &tau, &vec![0.5; n], y).unwrap().exp();
                } else {
                    let (a, b) = beta_shapes(lfs[0].score_guide(), params.pi(0, y - 1), y == lfs[0].target_class);
                    total += integrate_unit(
                        |s| {
                            let mut score = vec![0.5; n];
                            score[0] = s;
                            log_joint(&params, &lfs, &tau, &score, y).unwrap()
                        },
                        a,
                        b,
                    );
                }
            }
        }
        assert!((total - 1.0).abs() < 1e-6, "total mass {total}");
    }
}

#[test]
fn beta_potential_is_locally_normalized() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..50 {
        // min(α, β) ≥ 0.5; smaller shapes put mass within f64 rounding of s = 0 or 1
        let q_c = rng.random_range(0.1..0.9);
        let rho: f64 = rng.random_range(5f64.ln()..4.0);
        let lf = LfSpec::continuous("c", 1).with_guides(0.9, Some(q_c));
        let mut params = ModelParams::zeros(1, 2);
        params.rho[0] = vec![rho, rho];
        for y in 1..=2 {
            let (a, b) = beta_shapes(q_c, rho.exp(), y == 1);
            let mass = integrate_unit(|s| continuous_log_potential(&params, 0, &lf, 1, s, y).unwrap(), a, b);
            assert!((mass - 1.0).abs() < 1e-6, "q_c {q_c}, rho {rho}, y {y}: {mass}");
        }
    }
}

#[test]
fn log_joint_matches_statrs_density() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let k = 2;
        let lfs = random_lfs(&mut rng, 3, k);
        let params = random_params(&mut rng, 3, k);
        let (taus, scores) = random_rows(&mut rng, &lfs, 4, 0.7);
        for (tau, score) in taus.iter().zip(&scores) {
            for y in 1..=k {
                let mut want = -enumerated_log_normalizer(&params, &lfs);
                for (j, lf) in lfs.iter().enumerate() {
                    if tau[j] != 0 {
                        want += params.theta[j][y - 1];
                        if lf.is_continuous {
                            let (a, b) = beta_shapes(lf.score_guide(), params.pi(j, y - 1), y == lf.target_class);
                            want += statrs_beta_ln_pdf(score[j], a, b);
                        }
                    }
                }
                let got = log_joint(&params, &lfs, tau, score, y).unwrap();
                assert!((got - want).abs() < 1e-6);
            }
        }
    }
}

/// Closed-form log-likelihood for binary oracle data.
fn oracle_closed_form(theta: &[Vec<f64>], lfs: &[LfSpec], gold: &[usize]) -> f64 {
    let mut ll = 0.0;
    for &y in gold {
        let (mut s1, mut s2) = (0.0, 0.0);
        for (j, lf) in lfs.iter().enumerate() {
            if lf.target_class == y {
                s1 += theta[j][0];
                s2 += theta[j][1];
            }
        }
        ll += (s1.exp() + s2.exp()).ln();
    }
    let p1: f64 = theta.iter().map(|t| 1.0 + t[0].exp()).product();
    let p2: f64 = theta.iter().map(|t| 1.0 + t[1].exp()).product();
    ll - gold.len() as f64 * (p1 + p2).ln()
}

#[test]
fn oracle_likelihood_matches_closed_form() {
    let file = gen_oracle(60, 5, 2, &[0.5, 0.5], 4).unwrap();
    let obs = file.to_observations().unwrap();
    let gold = obs.complete_gold().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10 {
        let params = ModelParams {
            theta: (0..5)
                .map(|_| vec![rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)])
                .collect(),
            rho: vec![vec![0.0; 2]; 5],
        };
        let got = marginal_log_likelihood(&params, &file.lfs, &obs).unwrap();
        let want = oracle_closed_form(&params.theta, &file.lfs, &gold);
        assert!((got - want).abs() < 1e-9 * want.abs().max(1.0), "{got} vs {want}");

        let swapped = ModelParams {
            theta: params.theta.iter().map(|t| vec![t[1], t[0]]).collect(),
            rho: params.rho.clone(),
        };
        let ll_swapped = marginal_log_likelihood(&swapped, &file.lfs, &obs).unwrap();
        assert!((got - ll_swapped).abs() < 1e-9 * got.abs().max(1.0));
    }
}

#[test]
fn swapping_columns_keeps_likelihood_but_flips_accuracy() {
    let file = gen_oracle(100, 4, 2, &[0.5, 0.5], 9).unwrap();
    let obs = file.to_observations().unwrap();
    let gold = obs.complete_gold().unwrap();
    let agreeing = ModelParams {
        theta: file
            .lfs
            .iter()
            .map(|lf| {
                if lf.target_class == 1 {
                    vec![1.0, -1.0]
                } else {
                    vec![-1.0, 1.0]
                }
            })
            .collect(),
        rho: vec![vec![0.0; 2]; 4],
    };
    let swapped = ModelParams {
        theta: agreeing.theta.iter().map(|t| vec![t[1], t[0]]).collect(),
        rho: agreeing.rho.clone(),
    };
    let accuracy = |p: &ModelParams| {
        let hits = (0..obs.num_instances())
            .filter(|&i| {
                posterior(p, &file.lfs, obs.tau_row(i), obs.score_row(i))
                    .unwrap()
                    .prediction
                    == gold[i]
            })
            .count();
        hits as f64 / gold.len() as f64
    };
    let ll_a = marginal_log_likelihood(&agreeing, &file.lfs, &obs).unwrap();
    let ll_s = marginal_log_likelihood(&swapped, &file.lfs, &obs).unwrap();
    assert!((ll_a - ll_s).abs() < 1e-9);
    assert_eq!(accuracy(&agreeing), 1.0);
    assert_eq!(accuracy(&swapped), 0.0);
}

#[test]
fn likelihood_matches_enumeration_on_tiny_dataset() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let lfs = random_lfs(&mut rng, 3, 2);
    let params = random_params(&mut rng, 3, 2);
    let obs = random_observations(&mut rng, &lfs, 2, 5);
    let log_z = enumerated_log_normalizer(&params, &lfs);
    let mut want = 0.0;
    for i in 0..5 {
        let scores = class_log_scores(&params, &lfs, obs.tau_row(i), obs.score_row(i)).unwrap();
        want += scores.iter().map(|s| (s - log_z).exp()).sum::<f64>().ln();
    }
    let got = marginal_log_likelihood(&params, &lfs, &obs).unwrap();
    assert!((got - want).abs() < 1e-6);
}

#[test]
fn single_abstaining_lf_gives_minus_log_two() {
    let lfs = vec![LfSpec::discrete("a", 1)];
    let obs = cage::ObservationSet::new(2, &lfs, vec![vec![0]], vec![vec![0.0]], None).unwrap();
    let ll = marginal_log_likelihood(&ModelParams::zeros(1, 2), &lfs, &obs).unwrap();
    assert!((ll + std::f64::consts::LN_2).abs() < 1e-15);
}
