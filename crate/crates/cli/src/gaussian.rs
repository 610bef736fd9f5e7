use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use uev_core::gaussian::{
    distributional_posterior_gaussian, gaussian_kl, jeffrey_posterior_gaussian, virtual_posterior_gaussian,
};
use uev_core::{BaseModel, GaussianChain, GaussianParams, WeightedSamples};

use crate::output::{num, Bundle, Table};
use crate::{infer_method, Budget, CliError, EngineArg, GaussianArgs, GaussianParamArgs, Method, Panel, RunOutput};

#[derive(Debug, Clone, Copy, Serialize)]
pub(crate) struct GaussianSetup {
    pub panel: Panel,
    pub mu_x: f64,
    pub sigma_x: f64,
    pub sigma_yx: f64,
    pub sigma_q: f64,
    pub zeta: f64,
    pub sigma_qzeta: f64,
}

impl GaussianSetup {
    pub fn resolve(a: &GaussianParamArgs) -> Result<Self, CliError> {
        let (mu_x, sigma_x, sigma_yx, sigma_q, zeta) = match a.panel {
            Panel::Left => (1.0, 1.0, 0.3, 1.0, 2.0),
            Panel::Right => (0.0, 5.0, 0.5, 0.5, 2.0),
        };
        let sigma_q = a.sigma_q.unwrap_or(sigma_q);
        let setup = Self {
            panel: a.panel,
            mu_x: a.mu_x.unwrap_or(mu_x),
            sigma_x: a.sigma_x.unwrap_or(sigma_x),
            sigma_yx: a.sigma_yx.unwrap_or(sigma_yx),
            sigma_q,
            zeta: a.zeta.unwrap_or(zeta),
            sigma_qzeta: a.sigma_qzeta.unwrap_or(sigma_q),
        };
        for (name, v) in [
            ("--sigma-x", setup.sigma_x),
            ("--sigma-yx", setup.sigma_yx),
            ("--sigma-q", setup.sigma_q),
            ("--sigma-qzeta", setup.sigma_qzeta),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Config(format!("{name} must be a positive number, got {v}")));
            }
        }
        if !setup.mu_x.is_finite() || !setup.zeta.is_finite() {
            return Err(CliError::Config("--mu-x and --zeta must be finite".into()));
        }
        Ok(setup)
    }

    pub fn chain(&self) -> Result<GaussianChain, CliError> {
        Ok(GaussianChain::from_sds(self.mu_x, self.sigma_x, self.sigma_yx)?)
    }

    fn analytic(&self, method: Method) -> Result<GaussianParams, CliError> {
        let c = self.chain()?;
        Ok(match method {
            Method::Jeffrey => jeffrey_posterior_gaussian(&c, self.zeta, self.sigma_q)?,
            Method::Virtual => virtual_posterior_gaussian(&c, self.zeta, self.sigma_qzeta)?,
            Method::Distributional => distributional_posterior_gaussian(&c, self.zeta, self.sigma_q)?,
            Method::All => unreachable!(),
        })
    }
}

#[derive(Serialize)]
struct GaussianConfig {
    command: &'static str,
    #[serde(flatten)]
    setup: GaussianSetup,
    method: Method,
    mc_check: bool,
    n: usize,
    n_e: usize,
    seed: u64,
}

const GRID_POINTS: usize = 401;

pub fn run_gaussian(a: &GaussianArgs) -> Result<RunOutput, CliError> {
    let setup = GaussianSetup::resolve(&a.params)?;
    let config = GaussianConfig {
        command: "gaussian",
        setup,
        method: a.method,
        mc_check: a.mc_check,
        n: a.n,
        n_e: a.n_e,
        seed: a.seed,
    };
    let methods = a.method.expand();
    let all = Method::All.expand();
    let posteriors = all
        .iter()
        .map(|&m| setup.analytic(m))
        .collect::<Result<Vec<_>, _>>()?;
    let selected: Vec<(Method, GaussianParams)> = all
        .iter()
        .zip(&posteriors)
        .filter(|(m, _)| methods.contains(m))
        .map(|(m, p)| (*m, *p))
        .collect();

    let budget = Budget {
        engine: EngineArg::Snis,
        n: a.n,
        n_e: a.n_e,
        step_scale: 1.0,
    };
    let mc: Vec<Option<WeightedSamples>> = if a.mc_check {
        let model = BaseModel::gaussian_chain(setup.chain()?);
        selected
            .par_iter()
            .map(|(m, _)| {
                infer_method(&model, *m, setup.zeta, setup.sigma_q, setup.sigma_qzeta, &budget, a.seed).map(Some)
            })
            .collect::<Result<Vec<_>, _>>()?
    } else {
        vec![None; selected.len()]
    };

    let mut header = vec!["method", "mean", "sd", "ess", "n", "seed"];
    if a.mc_check {
        header.extend(["mc_mean", "mc_sd", "mc_se"]);
    }
    let mut summary = Table::new(&header);
    let mut text = String::new();
    for ((m, p), s) in selected.iter().zip(&mc) {
        let mut row = vec![m.name().to_string(), num(p.mean()), num(p.sd())];
        match s {
            Some(s) => {
                row.extend([num(s.ess()), s.len().to_string(), a.seed.to_string()]);
                row.extend([num(s.mean()[0]), num(s.sd()[0]), num(s.standard_error()[0])]);
                text += &format!(
                    "{:<15} mean {:.4} sd {:.4} | monte carlo mean {:.4} +/- {:.4}\n",
                    m.name(),
                    p.mean(),
                    p.sd(),
                    s.mean()[0],
                    s.standard_error()[0]
                );
            }
            None => {
                row.extend([String::new(), String::new(), a.seed.to_string()]);
                text += &format!("{:<15} mean {:.4} sd {:.4}\n", m.name(), p.mean(), p.sd());
            }
        }
        summary.push(row);
    }

    let mut kl = Table::new(&["p", "q", "kl"]);
    for i in 0..selected.len() {
        for j in i + 1..selected.len() {
            let (mi, pi) = selected[i];
            let (mj, pj) = selected[j];
            kl.push(vec![mi.name().into(), mj.name().into(), num(gaussian_kl(&pi, &pj))]);
        }
    }

    let lo = posteriors.iter().map(|p| p.mean() - 4.0 * p.sd()).fold(f64::INFINITY, f64::min);
    let hi = posteriors.iter().map(|p| p.mean() + 4.0 * p.sd()).fold(f64::NEG_INFINITY, f64::max);
    let mut density = Table::new(&["x", "jeffrey", "virtual", "distributional"]);
    for i in 0..GRID_POINTS {
        let x = lo + (hi - lo) * i as f64 / (GRID_POINTS - 1) as f64;
        let mut row = vec![num(x)];
        row.extend(posteriors.iter().map(|p| num(p.pdf(x))));
        density.push(row);
    }

    let rows: Vec<_> = selected
        .iter()
        .zip(&mc)
        .map(|((m, p), s)| {
            json!({
                "method": m.name(),
                "mean": p.mean(),
                "sd": p.sd(),
                "monte_carlo": s.as_ref().map(|s| json!({
                    "mean": s.mean()[0],
                    "sd": s.sd()[0],
                    "standard_error": s.standard_error()[0],
                    "ess": s.ess(),
                    "n": s.len(),
                    "seed": s.seed(),
                })),
            })
        })
        .collect();

    let mut bundle = Bundle::new(&config);
    bundle.csv("summary.csv", summary);
    bundle.csv("kl.csv", kl);
    bundle.csv("density.csv", density);
    bundle.json("run.json", &json!({ "posteriors": rows }));
    Ok(RunOutput {
        files: bundle.write(&a.out)?,
        summary: text,
    })
}
