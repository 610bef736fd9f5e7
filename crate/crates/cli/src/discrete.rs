use std::fs;

use serde::Serialize;
use serde_json::json;
use uev_core::discrete::{
    jeffrey_update_table, q_from_ratios, ratios_from_q, sequential_jeffrey, sequential_virtual,
    virtual_update_table,
};
use uev_core::{JointTable, LikelihoodRatios};

use crate::output::{num, Bundle, Table};
use crate::{CliError, DiscreteArgs, RunOutput};

const RUNNING_JOINT: &str = include_str!("../data/running_joint.json");

#[derive(Serialize)]
struct DiscreteConfig<'a> {
    command: &'static str,
    table_source: String,
    table: &'a JointTable,
    q: &'a [f64],
    lambda: &'a [f64],
    q_b: &'a [f64],
    lambda_b: &'a [f64],
}

fn reversed(v: &[f64]) -> Vec<f64> {
    v.iter().rev().cloned().collect()
}

fn row(label: &str, probs: &[f64]) -> Vec<String> {
    std::iter::once(label.to_string()).chain(probs.iter().map(|p| num(*p))).collect()
}

pub fn run_discrete(a: &DiscreteArgs) -> Result<RunOutput, CliError> {
    let (source, text) = match &a.table {
        Some(path) => (
            path.display().to_string(),
            fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
        ),
        None => ("bundled running example".to_string(), RUNNING_JOINT.to_string()),
    };
    let joint: JointTable = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{source}: not a valid joint table: {e}")))?;

    let (q, lambda) = match (&a.q, &a.lambda) {
        (Some(q), Some(l)) => (q.clone(), LikelihoodRatios::new(l.clone())?),
        (Some(q), None) => (q.clone(), ratios_from_q(&joint, q)?),
        (None, Some(l)) => {
            let l = LikelihoodRatios::new(l.clone())?;
            (q_from_ratios(&joint, &l)?, l)
        }
        (None, None) => return Err(CliError::Config("give --q, --lambda or both".into())),
    };
    let q_b = a.q_b.clone().unwrap_or_else(|| reversed(&q));
    let lambda_b = match &a.lambda_b {
        Some(l) => LikelihoodRatios::new(l.clone())?,
        None => LikelihoodRatios::new(reversed(lambda.as_slice()))?,
    };

    let mut header = vec!["update".to_string()];
    header.extend(joint.x_values().iter().map(|x| format!("x={x}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();

    let jeffrey = jeffrey_update_table(&joint, &q)?;
    let virt = virtual_update_table(&joint, &lambda)?;
    let q_equiv = q_from_ratios(&joint, &lambda)?;
    let l_equiv = ratios_from_q(&joint, &q)?;
    let mut posteriors = Table::new(&header);
    posteriors.push(row("prior", &joint.x_marginal()));
    posteriors.push(row("jeffrey(q)", &jeffrey));
    posteriors.push(row("virtual(lambda)", &virt));
    posteriors.push(row("jeffrey(q from lambda)", &jeffrey_update_table(&joint, &q_equiv)?));
    posteriors.push(row("virtual(lambda from q)", &virtual_update_table(&joint, &l_equiv)?));

    let ab_j = sequential_jeffrey(&joint, &[q.clone(), q_b.clone()])?;
    let ba_j = sequential_jeffrey(&joint, &[q_b.clone(), q.clone()])?;
    let ab_v = sequential_virtual(&joint, &[lambda.clone(), lambda_b.clone()])?;
    let ba_v = sequential_virtual(&joint, &[lambda_b.clone(), lambda.clone()])?;
    let mut order = Table::new(&header);
    order.push(row("jeffrey A then B", &ab_j));
    order.push(row("jeffrey B then A", &ba_j));
    order.push(row("virtual A then B", &ab_v));
    order.push(row("virtual B then A", &ba_v));

    let config = DiscreteConfig {
        command: "discrete",
        table_source: source,
        table: &joint,
        q: &q,
        lambda: lambda.as_slice(),
        q_b: &q_b,
        lambda_b: lambda_b.as_slice(),
    };
    let summary = format!(
        "jeffrey(q)      {jeffrey:.4?}\nvirtual(lambda) {virt:.4?}\n\
         jeffrey A then B {ab_j:.4?}, B then A {ba_j:.4?}\n\
         virtual A then B {ab_v:.4?}, B then A {ba_v:.4?}\n"
    );
    let mut bundle = Bundle::new(&config);
    bundle.csv("posteriors.csv", posteriors);
    bundle.csv("commutativity.csv", order);
    bundle.json(
        "run.json",
        &json!({
            "prior": joint.x_marginal(),
            "jeffrey": jeffrey,
            "virtual": virt,
            "q_from_lambda": q_equiv,
            "lambda_from_q": l_equiv,
            "jeffrey_a_then_b": ab_j,
            "jeffrey_b_then_a": ba_j,
            "virtual_a_then_b": ab_v,
            "virtual_b_then_a": ba_v,
        }),
    );
    Ok(RunOutput {
        files: bundle.write(&a.out)?,
        summary,
    })
}
