mod support;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use support::npdf;
use uev_core::consistency::{
    check_total_covariance_det, check_total_variance_scalar, PairedDraws, Verdict,
};
use uev_core::density::{Density, Normal, Support};
use uev_core::gaussian::{jeffrey_posterior_gaussian, virtual_posterior_gaussian};
use uev_core::montecarlo::{
    distributional_infer, distributional_pseudo_loglik, jeffrey_mixture_infer, mh, snis,
    virtual_infer,
};
use uev_core::{BallDrop, BaseModel, DistributionalMode, Engine, EngineConfig, GaussianChain};

fn left() -> GaussianChain {
    GaussianChain::from_sds(1.0, 1.0, 0.3).unwrap()
}

/// Moments of `x` from `y ~ N(zeta, sigma_q^2)` then `x ~ p(x | y)`.
fn mixture_oracle(mu: f64, sx: f64, syx: f64, zeta: f64, sq: f64, draws: usize) -> (f64, f64) {
    let mut rng = support::rng(11);
    let prec = 1.0 / (sx * sx) + 1.0 / (syx * syx);
    let (mut s1, mut s2) = (0.0, 0.0);
    for _ in 0..draws {
        let y = zeta + sq * rng.sample::<f64, _>(StandardNormal);
        let m = (mu / (sx * sx) + y / (syx * syx)) / prec;
        let x = m + rng.sample::<f64, _>(StandardNormal) / prec.sqrt();
        s1 += x;
        s2 += x * x;
    }
    let mean = s1 / draws as f64;
    (mean, s2 / draws as f64 - mean * mean)
}

#[test]
fn jeffrey_closed_form_matches_mixture_sampling() {
    for (mu, sx, syx, zeta, sq, mean, var) in [
        (1.0, 1.0, 0.3, 2.0, 1.0, 1.91743, 0.92425),
        (0.0, 5.0, 0.5, 2.0, 0.5, 1.98020, 0.49260),
    ] {
        let closed = jeffrey_posterior_gaussian(&GaussianChain::from_sds(mu, sx, syx).unwrap(), zeta, sq).unwrap();
        let (m, v) = mixture_oracle(mu, sx, syx, zeta, sq, 1_000_000);
        let se = (v / 1e6).sqrt();
        assert!((closed.mean() - m).abs() < 4.0 * se, "{} vs {m}", closed.mean());
        assert!((closed.variance() - v).abs() / v < 0.01);
        assert!((closed.mean() - mean).abs() < 5e-6);
        assert!((closed.variance() - var).abs() < 5e-6);
    }
}

#[test]
fn snis_recovers_shifted_gaussian() {
    let target = |x: &[f64]| npdf(x[0], 1.9174, 0.08257f64.sqrt()).ln();
    let proposal = Normal::new(1.0, 1.0).unwrap();
    for seed in 0..3 {
        let s = snis(&target, &proposal, 100_000, seed).unwrap();
        assert!((s.mean()[0] - 1.9174).abs() < 3.0 * s.standard_error()[0]);
        assert!(s.ess() <= 100_000.0);
    }
}

#[test]
fn mh_standard_normal_moments() {
    let target = |x: &[f64]| -0.5 * x[0] * x[0];
    let run = mh(&target, &[0.0], &EngineConfig::mh(100_000, 2.4, 3)).unwrap();
    let s = run.into_samples(20);
    assert!(s.mean()[0].abs() < 3.0 * s.standard_error()[0]);
    assert!((s.variance()[0] - 1.0).abs() < 0.05);
}

#[test]
fn jeffrey_mixture_example() {
    let model = BaseModel::gaussian_chain(left());
    let q = Normal::new(2.0, 1.0).unwrap();
    let s = jeffrey_mixture_infer(&model, &q, &EngineConfig::snis(4096, 1).with_n_e(256)).unwrap();
    assert!((s.mean()[0] - 1.91743).abs() < 3.0 * s.standard_error()[0]);
    assert!((s.variance()[0] - 0.92425).abs() / 0.92425 < 0.05);
}

#[test]
fn virtual_example_snis_and_mh() {
    let model = BaseModel::gaussian_chain(left());
    let closed = virtual_posterior_gaussian(&left(), 2.0, 1.0).unwrap();
    let lik = |y: &[f64]| npdf(2.0, y[0], 1.0).ln();
    let s = virtual_infer(&model, &lik, &EngineConfig::snis(100_000, 2)).unwrap();
    assert!((s.mean()[0] - closed.mean()).abs() < 3.0 * s.standard_error()[0]);
    assert!((s.variance()[0] - closed.variance()).abs() / closed.variance() < 0.05);
    let m = virtual_infer(&model, &lik, &EngineConfig::mh(100_000, 1.0, 2)).unwrap();
    assert!((m.mean()[0] - closed.mean()).abs() < 3.0 * m.standard_error()[0]);
    assert!((m.variance()[0] - closed.variance()).abs() / closed.variance() < 0.05);
}

#[test]
fn ball_drop_virtual_mh_agrees_with_snis() {
    let model = BaseModel::ball_drop(BallDrop::default()).unwrap();
    let lik = |t: &[f64]| npdf(0.43, t[0], 0.03).ln();
    let a = virtual_infer(&model, &lik, &EngineConfig::snis(100_000, 5)).unwrap();
    let b = virtual_infer(&model, &lik, &EngineConfig::mh(100_000, 2.0, 5)).unwrap();
    let se = (a.standard_error()[0].powi(2) + b.standard_error()[0].powi(2)).sqrt();
    assert!((a.mean()[0] - b.mean()[0]).abs() < 3.0 * se);
    assert!(((a.mean()[0] - 9.81) / a.sd()[0]).abs() < 1.0);
}

#[test]
fn pseudo_loglik_closed_form() {
    let model = BaseModel::gaussian_chain(left());
    let q = Normal::new(2.0, 1.0).unwrap();
    let exact = -(2.0 * std::f64::consts::PI).sqrt().mul_add(0.3, 0.0).ln() - 1.0 / (2.0 * 0.09);
    assert!((exact + 5.27052).abs() < 1e-4);
    let n_e = 100_000;
    let est = distributional_pseudo_loglik(&model, &q, &[2.0], n_e, 8).unwrap();
    // ln p(y | x) = const - (y - x)^2 / (2 s^2) with (y - x)^2 ~ chi^2_1: variance 2 / (4 s^4).
    let se = (2.0 / (4.0 * 0.09 * 0.09) / n_e as f64).sqrt();
    assert!((est - exact).abs() < 3.0 * se);
}

#[test]
fn distributional_example_both_modes() {
    let model = BaseModel::gaussian_chain(left());
    let q = Normal::new(2.0, 1.0).unwrap();
    let zero = |_: &[f64]| 0.0;
    let cfg = EngineConfig::snis(100_000, 4).with_n_e(1000);
    for mode in [DistributionalMode::Pseudo, DistributionalMode::Normalized] {
        let s = distributional_infer(&model, &q, &cfg, mode, Some(&zero)).unwrap();
        assert!((s.mean()[0] - 1.91743).abs() < 3.0 * s.standard_error()[0]);
        assert!((s.variance()[0] - 0.08257).abs() / 0.08257 < 0.05);
    }
}

#[test]
fn ball_drop_distributional_excludes_true_g() {
    let model = BaseModel::ball_drop(BallDrop::default()).unwrap();
    let q = Normal::new(0.43, 0.03).unwrap();
    let cfg = EngineConfig::snis(50_000, 6).with_n_e(1000);
    let s = distributional_infer(&model, &q, &cfg, DistributionalMode::Pseudo, None).unwrap();
    assert!((s.mean()[0] - 10.82).abs() < 0.15);
    assert!((s.sd()[0] - 0.25).abs() < 0.05);
    assert!((s.mean()[0] - 9.81) / s.sd()[0] >= 3.0);
}

#[test]
fn distributional_concentrates_at_predictive_source() {
    let model = BaseModel::gaussian_chain(left());
    // q is p(y | x = 1.5); with many inner draws the posterior sits near 1.5.
    let q = Normal::new(1.5, 0.3).unwrap();
    let cfg = EngineConfig::snis(20_000, 9).with_n_e(10_000).with_batches(4);
    let s = distributional_infer(&model, &q, &cfg, DistributionalMode::Pseudo, None).unwrap();
    assert!((s.mean()[0] - 1.5).abs() < 0.1);
}

/// Independent standard normal components, scaled by `sd`.
#[derive(Debug)]
struct IsoNormal {
    mean: Vec<f64>,
    sd: f64,
}

impl Density for IsoNormal {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn support(&self) -> Support {
        Support::RealLine
    }

    fn log_pdf(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.mean).map(|(x, m)| npdf(*x, *m, self.sd).ln()).sum()
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        self.mean
            .iter()
            .map(|m| m + self.sd * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }
}

fn two_d_draws(cond_sd: f64, seed: u64) -> PairedDraws {
    let base = IsoNormal {
        mean: vec![1.0, 1.0],
        sd: 1.09f64.sqrt(),
    };
    let zeta = IsoNormal {
        mean: vec![1.0, 1.0],
        sd: 0.3,
    };
    let q = move |z: &[f64]| {
        Ok(Box::new(IsoNormal {
            mean: z.to_vec(),
            sd: cond_sd,
        }) as Box<dyn Density>)
    };
    PairedDraws::generate(&|r| base.sample(r), &zeta, &q, 2_000, 50, seed).unwrap()
}

#[test]
fn determinant_check_two_dimensional() {
    let pass = check_total_covariance_det(&two_d_draws(1.0, 1)).unwrap();
    assert_eq!(pass.verdict, Verdict::Pass);
    assert!((pass.det_cov_y - 1.1881).abs() < 0.1);
    assert!((pass.det_expected_cond_cov - 1.0).abs() < 0.05);
    let fail = check_total_covariance_det(&two_d_draws(2.0, 1)).unwrap();
    assert_eq!(fail.verdict, Verdict::Fail);
    assert!((fail.det_expected_cond_cov - 16.0).abs() < 1.0);
}

#[test]
fn ball_drop_default_passes_scalar_check() {
    let cfg = BallDrop::default();
    let model = BaseModel::ball_drop(cfg).unwrap();
    let zeta = Normal::new(0.32, 0.03).unwrap();
    let q = |z: &[f64]| Ok(Box::new(Normal::new(z[0], 0.03)?) as Box<dyn Density>);
    let draws = PairedDraws::from_model(&model, &zeta, &q, 2_000, 50, 3).unwrap();
    let c = check_total_variance_scalar(&draws, 0).unwrap();
    assert_eq!(c.verdict, Verdict::Pass);
    // Quadrature over the truncated prior gives var[t] = 2.80e-3; the delta
    // method gives 2.1e-3. The t = sqrt(2 / g) tail at small g accounts for the gap.
    assert!((c.var_y - 2.80e-3).abs() < 3e-4, "{}", c.var_y);
    assert!((c.expected_cond_var - 9e-4).abs() < 5e-5);
}

#[test]
fn law_of_total_variance_closes() {
    let model = BaseModel::gaussian_chain(left());
    let zeta = Normal::new(1.0, 0.3).unwrap();
    let q = |z: &[f64]| Ok(Box::new(Normal::new(z[0], 1.0)?) as Box<dyn Density>);
    let draws = PairedDraws::from_model(&model, &zeta, &q, 5_000, 100, 2).unwrap();
    let c = check_total_variance_scalar(&draws, 0).unwrap();
    // Witness pair: total variance of q-draws equals the base variance.
    let residual = c.var_y - (c.expected_cond_var + c.var_cond_mean);
    // Sampling error of var[E[y | zeta]] from 5000 outer draws of variance 0.09.
    let se_between = 0.09 * (2.0f64 / 5_000.0).sqrt();
    let se = (c.combined_se.powi(2) + se_between.powi(2)).sqrt();
    assert!(residual.abs() < 3.0 * se, "{residual} vs {se}");
}

#[test]
fn engine_kind_round_trips() {
    for e in ["snis", "mh", "analytic-gaussian", "discrete-exact"] {
        let parsed: Engine = e.parse().unwrap();
        assert_eq!(serde_json::to_string(&parsed).unwrap(), format!("\"{e}\""));
    }
}
