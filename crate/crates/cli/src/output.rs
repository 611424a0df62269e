//! CSV, JSON and plotting-stub writers. Every float is written with 17 significant digits.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::Params;
use crate::CliError;

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn io(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<OutDir, CliError> {
        fs::create_dir_all(root).map_err(|e| io(root, e))?;
        Ok(OutDir { root: root.to_path_buf() })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    /// Header plus numeric rows.
    pub fn csv(&self, name: &str, header: &[String], rows: &[Vec<f64>]) -> Result<(), CliError> {
        let path = self.root.join(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| io(&path, e))?;
        w.write_record(header).map_err(|e| io(&path, e))?;
        for r in rows {
            w.write_record(r.iter().map(|x| num(*x))).map_err(|e| io(&path, e))?;
        }
        w.flush().map_err(|e| io(&path, e))
    }

    /// Matrix with the column axis in the header row and the row axis in the first column.
    pub fn matrix(&self, name: &str, corner: &str, rows: &[f64], cols: &[f64], values: &[Vec<f64>]) -> Result<(), CliError> {
        let mut header = vec![corner.to_string()];
        header.extend(cols.iter().map(|c| num(*c)));
        let body: Vec<Vec<f64>> = rows
            .iter()
            .zip(values)
            .map(|(r, v)| std::iter::once(*r).chain(v.iter().copied()).collect())
            .collect();
        self.csv(name, &header, &body)
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let path = self.root.join(name);
        let text = serde_json::to_string_pretty(value).map_err(|e| io(&path, e))?;
        fs::write(&path, text + "\n").map_err(|e| io(&path, e))
    }

    pub fn text(&self, name: &str, body: &str) -> Result<(), CliError> {
        let path = self.root.join(name);
        fs::write(&path, body).map_err(|e| io(&path, e))
    }

    /// `<scenario>.json` with the resolved parameters, and `<scenario>.toml` for reruns.
    pub fn sidecar(&self, scenario: &str, params: &Params) -> Result<(), CliError> {
        #[derive(Serialize)]
        struct Sidecar<'a> {
            scenario: &'a str,
            version: &'a str,
            seed: Option<u64>,
            params: &'a Params,
        }
        self.json(
            &format!("{scenario}.json"),
            &Sidecar { scenario, version: env!("CARGO_PKG_VERSION"), seed: params.seed, params },
        )?;
        let head = format!("# gatebath {scenario} --config {scenario}.toml\n");
        self.text(&format!("{scenario}.toml"), &(head + &params.to_toml()))
    }

    /// Plotting script: line plots against the first column, heatmaps for matrix dumps.
    pub fn plot_stub(&self, scenario: &str, files: &[String]) -> Result<(), CliError> {
        let list = files.iter().map(|f| format!("    \"{f}\",")).collect::<Vec<_>>().join("\n");
        let body = format!(
            r#"#!/usr/bin/env python3
# Quick-look plots for `gatebath {scenario}`. Edit freely.
import sys
from pathlib import Path

import matplotlib.pyplot as plt
import pandas as pd

HERE = Path(__file__).resolve().parent
FILES = [
{list}
]

for name in FILES:
    df = pd.read_csv(HERE / name)
    x = df.columns[0]
    fig, ax = plt.subplots()
    if "\\" in x:
        # matrix dump: row axis in the first column, column axis in the header
        rows, cols = x.split("\\")
        mesh = ax.pcolormesh(df.columns[1:].astype(float), df[x], df.iloc[:, 1:].to_numpy(), shading="auto")
        fig.colorbar(mesh, ax=ax)
        ax.set_xlabel(cols)
        ax.set_ylabel(rows)
    else:
        for col in df.columns[1:]:
            ax.plot(df[x], df[col], label=col)
        ax.set_xlabel(x)
        if len(df.columns) <= 10:
            ax.legend()
    ax.set_title(name)
    fig.savefig(HERE / (Path(name).stem + ".png"), dpi=150)

if "--show" in sys.argv:
    plt.show()
"#
        );
        self.text(&format!("plot_{}.py", scenario.replace('-', "_")), &body)
    }
}
