//! Scenario parameters: defaults < preset < config file < flags.

use std::f64::consts::PI;
use std::path::Path;

use clap::Args;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Every tunable of every scenario. Unset fields fall back to scenario defaults.
#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// qubit splitting
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// longitudinal coupling ratio
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    /// coupling strength
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda2: Option<f64>,
    /// spectral exponent
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_c: Option<f64>,
    /// temperature in units of the splitting
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    /// rotation angle (rad)
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    /// pulse duration (0 = instantaneous)
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_p: Option<f64>,
    /// factorized, markov, instant-dp, pulse, coarse-grained, pure-dephasing
    #[arg(long, value_delimiter = ',')]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocols: Option<Vec<String>>,
    /// duration simulated after the gate
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_after: Option<f64>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_stride: Option<usize>,
    /// schrodinger or interaction
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<String>,
    /// bath coupled this long before the gate
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    /// model or sigma-z
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<String>,
    /// cosine coefficients of a shaped pulse
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fourier: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taus: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thetas: Option<Vec<f64>>,
    /// post-gate probe times
    #[arg(long, value_delimiter = ',')]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_times: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperatures: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_values: Option<Vec<f64>>,
    /// temperature in kelvin (fmo)
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temp_k: Option<f64>,
    /// temperatures in kelvin (fmo)
    #[arg(long, value_delimiter = ',')]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temps_k: Option<Vec<f64>>,
    /// frequencies for bath-table (default: the nine drive frequencies)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omegas: Option<Vec<f64>>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_points: Option<usize>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_theta: Option<usize>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_phi: Option<usize>,
    /// optimiser evaluations per start
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Params {
    /// Fields set in `over` replace those in `self`.
    pub fn merged(&self, over: &Params) -> Result<Params, CliError> {
        let mut base = toml::Table::try_from(self).map_err(|e| CliError::Config(e.to_string()))?;
        let top = toml::Table::try_from(over).map_err(|e| CliError::Config(e.to_string()))?;
        for (k, v) in top {
            base.insert(k, v);
        }
        base.try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Params, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("parameters serialise")
    }
}

pub const PRESETS: &[&str] = &[
    "fig3a", "fig3b", "fig3c", "fig4a", "fig4b", "fig4c", "fig5a", "fig5b", "fig5c", "fig6", "fig7", "fig8", "fig9",
    "fig10", "fig11", "fig12c", "fig12d", "fig13", "relax-transition", "relax-delay",
];

fn base(lambda2: f64, xi: f64, temperature: f64) -> Params {
    Params {
        delta: Some(1.0),
        phi: Some(0.0),
        omega_c: Some(1.0),
        s: Some(1.0),
        lambda2: Some(lambda2),
        xi: Some(xi),
        temperature: Some(temperature),
        ..Params::default()
    }
}

fn strings(v: &[&str]) -> Option<Vec<String>> {
    Some(v.iter().map(|s| s.to_string()).collect())
}

/// Parameter sets taken from the figure captions.
pub fn preset(name: &str) -> Result<Params, CliError> {
    let instant = |mut p: Params, xi_t_after: f64| {
        p.theta = Some(PI / 2.0);
        p.tau_p = Some(0.0);
        p.t_after = Some(xi_t_after);
        p.protocols = strings(&["factorized", "instant-dp", "markov"]);
        p
    };
    let p = match name {
        "fig3a" => instant(base(0.02, 1.0, 0.0), 200.0),
        "fig3b" => instant(base(0.02, 2.0, 0.0), 200.0),
        "fig3c" => instant(base(0.02, 4.0, 0.0), 200.0),
        "fig4a" | "fig4b" | "fig4c" => {
            let tp = match name {
                "fig4a" => 1.0,
                "fig4b" => 30.0,
                _ => 200.0,
            };
            Params {
                theta: Some(PI / 2.0),
                tau_p: Some(tp),
                t_after: Some(2000.0),
                protocols: strings(&["factorized", "pulse", "markov"]),
                ..base(0.002, 4.0, 0.0)
            }
        }
        "fig5a" => instant(base(0.02, 4.0, 0.0025), 200.0),
        "fig5b" => instant(base(0.02, 4.0, 0.005), 200.0),
        "fig5c" => instant(base(0.02, 4.0, 0.01), 200.0),
        "fig6" => Params {
            theta: Some(PI / 2.0),
            taus: Some(vec![0.1, 1.0, 3.0, 5.0, 10.0, 15.0, 20.0, 30.0, 50.0, 100.0, 200.0, 400.0]),
            probe_times: Some(vec![20.0, 40.0, 60.0, 80.0]),
            ..base(0.001, 4.0, 0.0)
        },
        "fig7" => Params { theta: Some(PI / 2.0), tau_p: Some(200.0), ..base(1e-5, 1.0, 0.0) },
        "fig8" => Params {
            tau_p: Some(200.0),
            thetas: Some((0..=32).map(|k| k as f64 * PI / 8.0).collect()),
            ..base(1e-5, 4.0, 0.0)
        },
        "fig9" => Params {
            taus: Some(vec![1.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 400.0]),
            thetas: Some((0..=32).map(|k| k as f64 * PI / 8.0).collect()),
            ..base(1e-5, 2.0, 0.0)
        },
        "fig10" => Params {
            theta: Some(PI / 2.0),
            tau_p: Some(200.0),
            s: Some(0.5),
            coupling: Some("sigma-z".into()),
            ..base(1e-5, 0.0, 0.0)
        },
        "fig11" => Params {
            protocols: strings(&["instant-dp", "coarse-grained", "factorized", "markov"]),
            t_after: Some(1000.0),
            ..instant(base(0.02, 4.0, 0.0), 1000.0)
        },
        "fig12c" => Params { protocols: strings(&["factorized", "instant-dp"]), ..instant(base(0.02, 4.0, 0.0), 600.0) },
        "fig12d" => Params { protocols: strings(&["factorized", "instant-dp"]), ..instant(base(0.02, 4.0, 0.0025), 600.0) },
        "fig13" => Params {
            temps_k: Some(vec![77.0, 300.0]),
            s_values: Some(vec![1.0, 0.9, 0.75, 0.5]),
            ..Params::default()
        },
        "relax-transition" => Params {
            theta: Some(PI),
            tau_p: Some(1.0),
            t_after: Some(300.0),
            protocols: strings(&["factorized", "pulse", "markov"]),
            ..base(0.01, 0.0, 0.0)
        },
        "relax-delay" => Params {
            theta: Some(PI),
            taus: Some(vec![0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 1.0, 1.5, 2.0, 3.0, 5.0, 10.0]),
            ..base(0.001, 0.0, 0.0)
        },
        other => return Err(CliError::Config(format!("unknown preset '{other}'; known: {}", PRESETS.join(", ")))),
    };
    Ok(p)
}
