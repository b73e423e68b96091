//! The `oracle` subcommand: runs the closed-form-vs-brute-force comparison
//! and the first-order step check, emitting a JSON verification report.
//! Exits 3 when any check misses its tolerance.

use std::fs;
use std::path::Path;
use std::process::ExitCode;

use serde::{Deserialize, Serialize};

use gblend_core::fusion::BlendWeights;
use gblend_core::linalg::SquareMatrix;
use gblend_core::oracle::{
    aggregated_ogr, empirical_ogr2, taylor_step_check, verify_closed_form_optimality, AggregatedOgr,
    GradientScenario, Ogr2Estimate, OptimalityReport, TaylorReport, OPTIMALITY_TOLERANCE,
};
use gblend_core::Error;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OracleConfig {
    version: u32,
    trials: usize,
    seed: u64,
    grid_step: f64,
    scenarios: Vec<ScenarioSpec>,
    taylor: TaylorSpec,
    /// Negative control: evaluate these weights in place of the closed form
    /// for the optimality check (a mis-specified vector must fail).
    #[serde(default)]
    inject_weights: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioSpec {
    kind: ScenarioKind,
    estimators: usize,
    dim: usize,
}

#[derive(Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
enum ScenarioKind {
    Uncorrelated,
    Correlated,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TaylorSpec {
    dim: usize,
    eta: f64,
}

#[derive(Serialize)]
struct OracleReport {
    format_version: u32,
    scenarios: Vec<ScenarioResult>,
    taylor: TaylorReport,
    aggregated_ogr: AggregatedOgr,
    pass: bool,
}

#[derive(Serialize)]
struct ScenarioResult {
    kind: String,
    report: OptimalityReport,
    injected_weights_ogr2: Option<Ogr2Estimate>,
    pass: bool,
}

pub fn cmd_oracle(config_path: &Path, out: Option<&Path>) -> Result<ExitCode, Error> {
    let text = fs::read_to_string(config_path)
        .map_err(|e| Error::Config(format!("cannot read {}: {}", config_path.display(), e)))?;
    let config: OracleConfig = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {}", config_path.display(), e)))?;
    if config.version != 1 {
        return Err(Error::Config(format!(
            "unsupported oracle config version {}",
            config.version
        )));
    }
    if config.trials == 0 {
        return Err(Error::Config("trials must be positive".into()));
    }
    if config.scenarios.is_empty() {
        return Err(Error::Config("at least one scenario required".into()));
    }

    let mut results = Vec::new();
    let mut all_pass = true;
    for (idx, spec) in config.scenarios.iter().enumerate() {
        let seed = config.seed.wrapping_add(idx as u64);
        let scenario = match spec.kind {
            ScenarioKind::Uncorrelated => GradientScenario::random_uncorrelated(
                spec.estimators,
                spec.dim,
                config.trials,
                seed,
            ),
            ScenarioKind::Correlated => GradientScenario::random_correlated(
                spec.estimators,
                spec.dim,
                config.trials,
                seed,
            ),
        };
        let report = verify_closed_form_optimality(&scenario, config.grid_step)?;
        let mut pass = report.optimality_pass && report.equal_not_better;
        if spec.kind == ScenarioKind::Correlated {
            pass = pass && report.correlated_dominates;
        }
        let injected = match &config.inject_weights {
            Some(w) if w.len() == spec.estimators => {
                let bank = scenario.realize()?;
                let weights = BlendWeights::new(w.clone())?;
                let est = empirical_ogr2(&bank, &weights)?;
                if est.mean > report.grid_ogr2 + OPTIMALITY_TOLERANCE {
                    pass = false;
                }
                Some(est)
            }
            _ => None,
        };
        all_pass &= pass;
        results.push(ScenarioResult {
            kind: match spec.kind {
                ScenarioKind::Uncorrelated => "uncorrelated".into(),
                ScenarioKind::Correlated => "correlated".into(),
            },
            report,
            injected_weights_ogr2: injected,
            pass,
        });
    }

    // first-order step check on an identity-curvature landscape
    if config.taylor.dim < 2 {
        return Err(Error::Config("taylor.dim must be at least 2".into()));
    }
    let landscape = gblend_core::oracle::QuadraticLandscape {
        curvature: SquareMatrix::identity(config.taylor.dim),
        theta_star: vec![0.0; config.taylor.dim],
        train_shift: (0..config.taylor.dim)
            .map(|i| 0.1 + 0.05 * i as f64)
            .collect(),
    };
    let theta0: Vec<f64> = (0..config.taylor.dim)
        .map(|i| 1.0 - 0.2 * i as f64)
        .collect();
    let ghat: Vec<f64> = landscape.train_grad(&theta0).iter().map(|g| -g).collect();
    let taylor = taylor_step_check(&landscape, &theta0, &ghat, config.taylor.eta)?;
    all_pass &= taylor.pass;
    let aggregated = aggregated_ogr(&landscape, &theta0, config.taylor.eta, 50);

    let report = OracleReport {
        format_version: 1,
        scenarios: results,
        taylor,
        aggregated_ogr: aggregated,
        pass: all_pass,
    };
    let json = serde_json::to_string_pretty(&report)?;
    println!("{}", json);
    if let Some(path) = out {
        fs::write(path, &json)?;
    }
    Ok(if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    })
}
