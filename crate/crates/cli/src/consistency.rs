use serde::Serialize;
use serde_json::json;
use uev_core::consistency::{check_factorization_structure, consistency_report, ConsistencyReport, PairedDraws, Verdict};
use uev_core::density::{Density, Normal};
use uev_core::gaussian::consistency_construction;
use uev_core::{BallDrop, BaseModel};

use crate::gaussian::GaussianSetup;
use crate::output::Bundle;
use crate::{CliError, ConsistencyArgs, Experiment, RunOutput};

fn normal_q(sd: f64) -> impl Fn(&[f64]) -> uev_core::Result<Box<dyn Density>> {
    move |z: &[f64]| Ok(Box::new(Normal::new(z[0], sd)?) as Box<dyn Density>)
}

fn one_dimensional() -> uev_core::consistency::StructureCheck {
    check_factorization_structure(&[vec![0]], &[vec![0]], true)
}

/// Draws zeta near the reading itself: only E[var[t | zeta]] enters the check,
/// and for a Gaussian q that does not depend on where zeta falls.
pub(crate) fn ball_drop_report(
    model: &BaseModel,
    sigma_q: f64,
    t_hat: f64,
    m: usize,
    k: usize,
    seed: u64,
) -> Result<ConsistencyReport, CliError> {
    let zeta = Normal::new(t_hat, sigma_q)?;
    let draws = PairedDraws::from_model(model, &zeta, &normal_q(sigma_q), m, k, seed)?;
    Ok(consistency_report(&draws, one_dimensional())?)
}

#[derive(Serialize)]
struct ConsistencyConfig {
    command: &'static str,
    experiment: Experiment,
    #[serde(skip_serializing_if = "Option::is_none")]
    gaussian: Option<GaussianSetup>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ball_drop: Option<BallDrop>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_hat: Option<f64>,
    sigma_q: f64,
    m: usize,
    k: usize,
    seed: u64,
    strict: bool,
}

pub fn run_check_consistency(a: &ConsistencyArgs) -> Result<RunOutput, CliError> {
    let (config, report, witness) = match a.experiment {
        Experiment::Gaussian => {
            let setup = GaussianSetup::resolve(&a.gaussian)?;
            let chain = setup.chain()?;
            let model = BaseModel::gaussian_chain(chain);
            let witness = consistency_construction(&chain, setup.sigma_q, setup.mu_x);
            // p(zeta) is the witness marginal when one exists; otherwise the
            // predictive of y stands in, since no consistent p(zeta) exists.
            let zeta_var = match &witness {
                Ok(w) => w.sigma_zeta_sq,
                Err(_) => chain.predictive_variance(),
            };
            let zeta = Normal::new(setup.mu_x, zeta_var.sqrt())?;
            let draws = PairedDraws::from_model(&model, &zeta, &normal_q(setup.sigma_q), a.m, a.k, a.seed)?;
            let report = consistency_report(&draws, one_dimensional())?;
            let witness = match witness {
                Ok(w) => json!({
                    "exists": true,
                    "at_y": setup.mu_x,
                    "sigma_zeta_sq": w.sigma_zeta_sq,
                    "mu_zeta_given_y": w.mu_zeta_given_y,
                    "sigma_zeta_given_y_sq": w.sigma_zeta_given_y_sq,
                }),
                Err(e) => json!({ "exists": false, "error": e.to_string() }),
            };
            let config = ConsistencyConfig {
                command: "check-consistency",
                experiment: a.experiment,
                gaussian: Some(setup),
                ball_drop: None,
                t_hat: None,
                sigma_q: setup.sigma_q,
                m: a.m,
                k: a.k,
                seed: a.seed,
                strict: a.strict,
            };
            (config, report, Some(witness))
        }
        Experiment::BallDrop => {
            let sigma_q = a.gaussian.sigma_q.unwrap_or(0.03);
            let cfg = BallDrop {
                distance: a.distance,
                sigma_model: a.sigma_model,
                prior_mean: a.prior_mean,
                prior_sd: a.prior_sd,
            };
            let model = BaseModel::ball_drop(cfg)?;
            let report = ball_drop_report(&model, sigma_q, a.t_hat, a.m, a.k, a.seed)?;
            let config = ConsistencyConfig {
                command: "check-consistency",
                experiment: a.experiment,
                gaussian: None,
                ball_drop: Some(cfg),
                t_hat: Some(a.t_hat),
                sigma_q,
                m: a.m,
                k: a.k,
                seed: a.seed,
                strict: a.strict,
            };
            (config, report, None)
        }
    };

    let mut summary = String::new();
    for c in &report.scalar_checks {
        summary += &format!(
            "var[y] = {:.6} (se {:.1e}), E[var[y|zeta]] = {:.6} (se {:.1e}): {:?}{}\n",
            c.var_y,
            c.se_var_y,
            c.expected_cond_var,
            c.se_expected_cond_var,
            c.verdict,
            if c.equality_flagged { ", consistent with equality" } else { "" }
        );
    }
    summary += &format!("overall: {:?}\n", report.verdict);

    let mut bundle = Bundle::new(&config);
    let mut body = json!({ "report": report });
    if let Some(w) = witness {
        body["witness"] = w;
    }
    bundle.json("consistency.json", &body);
    let files = bundle.write(&a.out)?;
    if a.strict && report.verdict == Verdict::Fail {
        return Err(CliError::ConsistencyFailed(format!(
            "see {}",
            files[0].display()
        )));
    }
    Ok(RunOutput { files, summary })
}
