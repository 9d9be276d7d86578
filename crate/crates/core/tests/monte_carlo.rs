//! Seeded Monte-Carlo checks of statistical behaviour. Tolerances are several
//! standard errors wide, so a fixed seed set passes with margin.

use cascade_core::conformal::{conformal_quantile, naive_calibrate, split_calibrate, Method, PredictionInterval};
use cascade_core::datagen::{generate_cohort, GenConfig};
use cascade_core::features::FeatureMatrix;
use cascade_core::harness::{ablate_prepared, prepare, run_method, AblationParam, ConformalParams, ExperimentConfig};
use cascade_core::learners::fit_knn;
use cascade_core::metrics::{
    bootstrap_ci, cascade_ratio, ks_two_sample, marginal_coverage, spearman, youden_threshold, BootstrapConfig,
    Statistic,
};
use cascade_core::rng::rng_from;
use cascade_core::venn_abers::VennAbersCalibrator;
use cascade_core::ExecMode;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn normals(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[test]
fn quantile_of_uniforms_near_nominal() {
    // the 801st of 1000 uniforms is Beta(801, 200): sd 0.0126, so the
    // band [0.78, 0.82] holds with probability about 0.886
    let seeds = 400;
    let mut inside = 0;
    let mut total = 0.0;
    for seed in 0..seeds {
        let mut rng = rng_from(seed);
        let u: Vec<f64> = (0..1000).map(|_| rng.random::<f64>()).collect();
        let q = conformal_quantile(&u, 0.2).unwrap();
        total += q;
        if (0.78..=0.82).contains(&q) {
            inside += 1;
        }
    }
    let rate = f64::from(inside) / seeds as f64;
    assert!((0.84..=0.93).contains(&rate), "{rate}");
    assert!((total / seeds as f64 - 801.0 / 1001.0).abs() < 0.003);
}

#[test]
fn split_coverage_is_nominal_on_average() {
    let (n_cal, n_test, seeds) = (99, 500, 200);
    let mut total = 0.0;
    for seed in 0..seeds {
        let mut rng = rng_from(1000 + seed);
        let cal: Vec<f64> = normals(&mut rng, n_cal).iter().map(|e| e.abs()).collect();
        let s = split_calibrate(&cal, 0.2).unwrap();
        let truth = normals(&mut rng, n_test);
        let ivs: Vec<PredictionInterval> = (0..n_test).map(|_| s.predict("t", 0.0, 0.0)).collect();
        total += marginal_coverage(&ivs, &truth).unwrap();
    }
    // exact expectation is ceil(100 * 0.8) / 100 = 0.8
    let mean = total / seeds as f64;
    assert!((mean - 0.8).abs() < 0.01, "{mean}");
}

fn va_median_u(n_cal: usize, seed: u64) -> f64 {
    let mut rng = rng_from(seed);
    let draw = |rng: &mut cascade_core::rng::Rng, n: usize| -> (Vec<f64>, Vec<u8>) {
        let s = normals(rng, n);
        let l = s
            .iter()
            .map(|&v| u8::from(rng.random::<f64>() < 1.0 / (1.0 + (-2.0 * v).exp())))
            .collect();
        (s, l)
    };
    let (s, l) = draw(&mut rng, n_cal);
    let va = VennAbersCalibrator::new(&s, &l).unwrap();
    let (t, _) = draw(&mut rng, 400);
    let mut u: Vec<f64> = va
        .predict_many(&t, ExecMode::Serial)
        .unwrap()
        .iter()
        .map(|o| o.u)
        .collect();
    median(&mut u)
}

#[test]
fn venn_abers_width_shrinks_with_calibration_size() {
    let mut wins = 0;
    for seed in 0..20 {
        if va_median_u(500, 50 + seed) <= va_median_u(50, 50 + seed) {
            wins += 1;
        }
    }
    assert!(wins >= 18, "{wins}/20");
}

#[test]
fn zero_inflation_rate_matches_decision_model() {
    let cfg = GenConfig {
        n_subjects: 50_000,
        seed: 11,
        ..GenConfig::default()
    };
    let c = generate_cohort(&cfg).unwrap();
    let expected: f64 = c.features.rows().map(|x| cfg.decision_probability(x)).sum::<f64>() / c.len() as f64;
    let observed = c.change_label.iter().filter(|&&l| l == 1).count() as f64 / c.len() as f64;
    assert!((observed - expected).abs() < 0.02, "{observed} vs {expected}");
}

#[test]
fn residuals_increase_with_ambiguity() {
    let cfg = ExperimentConfig::default();
    let p = prepare(&cfg).unwrap();
    let res: Vec<f64> = p.eval_test.iter().map(|&i| (p.y[i] - p.reg_pred[i]).abs()).collect();
    let u: Vec<f64> = p.eval_test.iter().map(|&i| p.u(i)).collect();
    let s = spearman(&u, &res).unwrap();
    assert!(s.rho.unwrap() > 0.1, "{s:?}");
    assert!(s.p.unwrap() < 0.01);
}

#[test]
fn split_scores_are_exchangeable() {
    let mut rejections = 0;
    for seed in 0..40 {
        let mut cfg = ExperimentConfig {
            seed: 300 + seed,
            ..ExperimentConfig::default()
        };
        cfg.data.generator.n_subjects = 2000;
        let p = prepare(&cfg).unwrap();
        let res = |idx: &[usize]| idx.iter().map(|&i| (p.y[i] - p.reg_pred[i]).abs()).collect::<Vec<_>>();
        if ks_two_sample(&res(&p.eval_cal), &res(&p.eval_test)).unwrap().p < 0.05 {
            rejections += 1;
        }
    }
    // about 2 expected under exchangeability
    assert!(rejections <= 7, "{rejections}/40");
}

#[test]
fn bootstrap_interval_brackets_true_rate() {
    let mut hits = 0;
    let mut width = 0.0f64;
    for seed in 0..50 {
        let mut rng = rng_from(700 + seed);
        let v: Vec<f64> = (0..1000)
            .map(|_| f64::from(u8::from(rng.random::<f64>() < 0.8)))
            .collect();
        let cfg = BootstrapConfig {
            replicates: 500,
            level: 0.95,
            seed,
        };
        let (lo, hi) = bootstrap_ci(&v, Statistic::Mean, &cfg, ExecMode::Parallel).unwrap();
        if lo <= 0.8 && 0.8 <= hi {
            hits += 1;
        }
        width += hi - lo;
    }
    assert!(hits >= 45, "{hits}/50");
    // 2 * 1.96 * sqrt(0.16 / 1000) = 0.0496
    let width = width / 50.0;
    assert!((width - 0.0496).abs() < 0.3 * 0.0496, "{width}");
}

#[test]
fn youden_on_noise_is_small() {
    let mut rng = rng_from(91);
    let s = normals(&mut rng, 4000);
    let l: Vec<u8> = (0..4000).map(|_| u8::from(rng.random::<bool>())).collect();
    let cut = youden_threshold(&s, &l).unwrap();
    assert!(cut.j < 0.08, "{}", cut.j);
}

#[test]
fn naive_with_interpolating_regressor_undercovers() {
    let mut rng = rng_from(5);
    let make = |rng: &mut cascade_core::rng::Rng, n: usize| {
        let x = normals(rng, n);
        let y: Vec<f64> = x
            .iter()
            .map(|&v| v + 0.5 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        (FeatureMatrix::new(n, 1, x).unwrap(), y)
    };
    let (xt, yt) = make(&mut rng, 400);
    let (xe, ye) = make(&mut rng, 400);
    let m = fit_knn(&xt, &yt, 1).unwrap();
    let train_res: Vec<f64> = (0..400).map(|i| (yt[i] - m.predict(xt.row(i))).abs()).collect();
    let s = naive_calibrate(&train_res, 0.2).unwrap();
    let ivs: Vec<PredictionInterval> = (0..400).map(|i| s.predict("t", m.predict(xe.row(i)), 0.0)).collect();
    assert!(marginal_coverage(&ivs, &ye).unwrap() < 0.2);
}

#[test]
fn ratio_of_linear_lengths_on_uniform_u() {
    let mut rng = rng_from(13);
    let u: Vec<f64> = (0..60_000).map(|_| rng.random::<f64>()).collect();
    let lengths: Vec<f64> = u.iter().map(|v| 2.0 * v).collect();
    // top-tertile mean 5/6 over bottom-tertile mean 1/6
    let cr = cascade_ratio(&lengths, &u, 3).unwrap().unwrap();
    assert!((cr - 5.0).abs() < 0.1, "{cr}");
}

#[test]
fn beta_ablation_ratio_is_nondecreasing() {
    let cfg = ExperimentConfig::default();
    let p = prepare(&cfg).unwrap();
    let t = ablate_prepared(&cfg, &p, AblationParam::Beta).unwrap();
    let cr: Vec<f64> = t.rows.iter().map(|r| r.cascade_ratio.unwrap()).collect();
    assert!(cr.windows(2).all(|w| w[1] >= w[0] - 1e-12), "{cr:?}");
}

#[test]
fn doubling_k_halves_bin_counts() {
    let mut cfg = ExperimentConfig::default();
    cfg.ablation.k_list = vec![3, 6];
    let p = prepare(&cfg).unwrap();
    let t = ablate_prepared(&cfg, &p, AblationParam::K).unwrap();
    let mean_count = |k: usize| {
        t.rows
            .iter()
            .find(|r| r.k == k && r.method == Method::Mondrian)
            .and_then(|r| r.mean_bin_count)
            .unwrap()
    };
    let ratio = mean_count(3) / mean_count(6);
    assert!((ratio - 2.0).abs() < 0.1, "{ratio}");
}

#[test]
fn cascade_coverage_near_nominal() {
    let mut total = 0.0;
    let seeds = 10;
    for seed in 0..seeds {
        let cfg = ExperimentConfig {
            seed: 900 + seed,
            ..ExperimentConfig::default()
        };
        let p = prepare(&cfg).unwrap();
        let run = run_method(&p, Method::Cascade, &ConformalParams::from_config(&cfg)).unwrap();
        let truths: Vec<f64> = p.eval_test.iter().map(|&i| p.y[i]).collect();
        total += marginal_coverage(&run.intervals, &truths).unwrap();
    }
    let mean = total / seeds as f64;
    assert!((mean - 0.8).abs() < 0.03, "{mean}");
}
