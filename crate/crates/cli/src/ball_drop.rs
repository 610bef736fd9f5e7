use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use uev_core::gaussian::ball_drop_mean_time;
use uev_core::{BallDrop, BaseModel, WeightedSamples};

use crate::consistency::ball_drop_report;
use crate::output::{num, Bundle, Table};
use crate::{infer_method, BallDropArgs, BallDropParamArgs, Budget, CliError, Method, RunOutput};

const G_REF: f64 = 9.81;
const SIDECAR_M: usize = 2_000;
const SIDECAR_K: usize = 50;

impl BallDropParamArgs {
    pub(crate) fn model_config(&self) -> BallDrop {
        BallDrop {
            distance: self.distance,
            sigma_model: self.sigma_model,
            prior_mean: self.prior_mean,
            prior_sd: self.prior_sd,
        }
    }
}

#[derive(Serialize)]
struct BallDropConfig<'a> {
    command: &'static str,
    t_hat: f64,
    sigma_q: f64,
    model: BallDrop,
    method: Method,
    #[serde(flatten)]
    budget: &'a Budget,
    seed: u64,
}

pub fn run_ball_drop(a: &BallDropArgs) -> Result<RunOutput, CliError> {
    let p = &a.params;
    if !(p.sigma_q > 0.0 && p.sigma_q.is_finite()) || !p.t_hat.is_finite() {
        return Err(CliError::Config("--sigma-q must be positive and --t-hat finite".into()));
    }
    let model_cfg = p.model_config();
    let model = BaseModel::ball_drop(model_cfg)?;
    let budget = Budget {
        engine: a.engine,
        n: a.n,
        n_e: a.n_e,
        step_scale: a.step_scale,
    };
    let config = BallDropConfig {
        command: "ball-drop",
        t_hat: p.t_hat,
        sigma_q: p.sigma_q,
        model: model_cfg,
        method: a.method,
        budget: &budget,
        seed: a.seed,
    };
    let methods = a.method.expand();
    let runs: Vec<WeightedSamples> = methods
        .par_iter()
        .map(|&m| infer_method(&model, m, p.t_hat, p.sigma_q, p.sigma_q, &budget, a.seed))
        .collect::<Result<_, _>>()?;
    let predictive_time = ball_drop_mean_time(p.prior_mean, p.distance)?;
    let sidecar = ball_drop_report(&model, p.sigma_q, p.t_hat, SIDECAR_M, SIDECAR_K, a.seed)?;

    let mut summary = Table::new(&["method", "mean", "sd", "ess", "n", "seed", "z_ref"]);
    let mut text = format!("predictive fall time at g = {}: {predictive_time:.4} s\n", p.prior_mean);
    let mut bundle = Bundle::new(&config);
    let mut rows = Vec::new();
    for (m, s) in methods.iter().zip(&runs) {
        let (mean, sd) = (s.mean()[0], s.sd()[0]);
        // A point-mass prior leaves no spread to standardize by.
        let z = if sd > 1e-9 * mean.abs().max(1.0) { (mean - G_REF) / sd } else { f64::NAN };
        summary.push(vec![
            m.name().into(),
            num(mean),
            num(sd),
            num(s.ess()),
            s.len().to_string(),
            a.seed.to_string(),
            if z.is_nan() { String::new() } else { num(z) },
        ]);
        text += &format!("{:<15} g mean {mean:.3} sd {sd:.3} z(9.81) {z:+.2}\n", m.name());
        let mut draws = Table::new(&["g", "log_weight"]);
        for i in 0..s.len() {
            draws.push(vec![num(s.point(i)[0]), num(s.log_weights()[i])]);
        }
        bundle.csv(&format!("draws_{}.csv", m.name()), draws);
        rows.push(json!({
            "method": m.name(),
            "mean": mean,
            "sd": sd,
            "standard_error": s.standard_error()[0],
            "ess": s.ess(),
            "n": s.len(),
            "seed": s.seed(),
            "z_ref": if z.is_nan() { None } else { Some(z) },
            "degenerate": s.is_degenerate(),
        }));
    }
    text += &format!("consistency of q with the model: {:?}\n", sidecar.verdict);
    bundle.csv("summary.csv", summary);
    bundle.json(
        "run.json",
        &json!({ "predictive_time": predictive_time, "g_ref": G_REF, "posteriors": rows }),
    );
    bundle.json("consistency.json", &json!({ "report": sidecar }));
    Ok(RunOutput {
        files: bundle.write(&a.out)?,
        summary: text,
    })
}
