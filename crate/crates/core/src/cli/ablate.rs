use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::commands::train_config;
use super::manifest::{timestamp, RunManifest};
use super::{io_failure, AblateArgs, Failure, Suite, EXIT_DIVERGED, EXIT_INVALID};
use crate::data::dataset::load_dataset;
use crate::data::io::{to_json_bytes, write_atomic};
use crate::training::config::{InitScheme, TrainConfig};
use crate::training::engine::GuideMode;
use crate::training::fit::{fit, TrainError};
use crate::variants::VariantId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: VariantId,
    pub guide_mode: GuideMode,
    pub init: InitScheme,
    /// `ok`, `diverged` or `failed`.
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_objective: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub micro_f1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f1_per_epoch: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub seed: u64,
    pub rows: Vec<AblationRow>,
}

fn suite_triples(suite: Suite) -> Vec<(VariantId, GuideMode, Option<InitScheme>)> {
    match suite {
        Suite::Guides => GuideMode::ALL.into_iter().map(|g| (VariantId::Cage, g, None)).collect(),
        Suite::Potentials => std::iter::once(VariantId::Cage)
            .chain(VariantId::ALT_FORMS)
            .map(|v| (v, GuideMode::KlGuide, None))
            .collect(),
    }
}

fn parse_triple(spec: &str) -> Result<(VariantId, GuideMode, Option<InitScheme>), Failure> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = |msg: String| Failure::invalid(format!("--config {spec:?}: {msg}"));
    if !(2..=3).contains(&parts.len()) {
        return Err(bad("expected variant:guide_mode[:init]".into()));
    }
    let variant = parts[0].parse().map_err(bad)?;
    let guide = parts[1].parse().map_err(bad)?;
    let init = parts.get(2).map(|s| s.parse()).transpose().map_err(bad)?;
    Ok((variant, guide, init))
}

fn run_row(obs: &crate::ObservationSet, lfs: &[crate::LfSpec], config: &TrainConfig) -> AblationRow {
    let mut row = AblationRow {
        variant: config.variant,
        guide_mode: config.guide_mode,
        init: config.init,
        status: "ok".into(),
        error: None,
        final_objective: None,
        accuracy: None,
        f1: None,
        micro_f1: None,
        f1_per_epoch: None,
    };
    let report = match fit(obs, lfs, config) {
        Ok(outcome) => outcome.report,
        Err(e) => {
            row.status = if matches!(e, TrainError::Input(_)) {
                "failed"
            } else {
                "diverged"
            }
            .into();
            row.error = Some(e.to_string());
            return row;
        }
    };
    row.final_objective = report.objective.last().copied();
    if let Some(m) = &report.final_metrics {
        row.accuracy = Some(m.accuracy);
        row.f1 = Some(m.f1());
        row.micro_f1 = Some(m.micro_f1);
    }
    row.f1_per_epoch = report.f1;
    row
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
}

pub fn render_table(table: &AblationTable) -> String {
    let header = [
        "variant",
        "guide_mode",
        "init",
        "status",
        "objective",
        "accuracy",
        "f1",
        "micro_f1",
    ];
    let body: Vec<[String; 8]> = table
        .rows
        .iter()
        .map(|r| {
            [
                r.variant.name().to_string(),
                r.guide_mode.name().to_string(),
                r.init.name().to_string(),
                r.status.clone(),
                r.final_objective.map_or_else(|| "-".into(), |x| format!("{x:.3}")),
                fmt_opt(r.accuracy),
                fmt_opt(r.f1),
                fmt_opt(r.micro_f1),
            ]
        })
        .collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|c| {
            body.iter()
                .map(|r| r[c].len())
                .chain([header[c].len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    let mut line = |cells: &[&str]| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        let _ = writeln!(out, "{}", padded.join("  ").trim_end());
    };
    line(&header);
    for r in &body {
        line(&r.iter().map(String::as_str).collect::<Vec<_>>());
    }
    out
}

pub(super) fn ablate(args: AblateArgs) -> Result<(), Failure> {
    let started = timestamp();
    let triples = match args.suite {
        Some(suite) => suite_triples(suite),
        None => args.configs.iter().map(|s| parse_triple(s)).collect::<Result<_, _>>()?,
    };
    let configs: Vec<TrainConfig> = triples
        .into_iter()
        .map(|(v, g, i)| train_config(v, g, i, &args.training))
        .collect();
    for c in &configs {
        c.validate()?;
    }
    let (obs, lfs) = load_dataset(&args.data)?;
    std::fs::create_dir_all(&args.out).map_err(io_failure(&args.out))?;

    let table = AblationTable {
        seed: args.training.seed,
        rows: configs.iter().map(|c| run_row(&obs, &lfs, c)).collect(),
    };
    let json_path = args.out.join("ablation.json");
    let text_path = args.out.join("ablation.txt");
    let text = render_table(&table);
    write_atomic(&json_path, &to_json_bytes(&table)).map_err(io_failure(&json_path))?;
    write_atomic(&text_path, text.as_bytes()).map_err(io_failure(&text_path))?;
    let _ = std::io::Write::write_all(&mut std::io::stdout(), text.as_bytes());

    let mut manifest = RunManifest::new("ablate", json!(configs), Some(args.training.seed), started);
    manifest.input(&args.data).map_err(io_failure(&args.data))?;
    manifest.output(&json_path).map_err(io_failure(&json_path))?;
    manifest.output(&text_path).map_err(io_failure(&text_path))?;
    let manifest_path = args.out.join("manifest.json");
    manifest.write(&manifest_path).map_err(io_failure(&manifest_path))?;

    if table.rows.iter().any(|r| r.status == "ok") {
        return Ok(());
    }
    let code = if table.rows.iter().any(|r| r.status == "diverged") {
        EXIT_DIVERGED
    } else {
        EXIT_INVALID
    };
    Err(Failure {
        code,
        message: "every ablation row failed".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_enumerate_expected_rows() {
        let guides = suite_triples(Suite::Guides);
        assert_eq!(guides.len(), 4);
        assert!(guides.iter().all(|(v, _, _)| *v == VariantId::Cage));
        let pots = suite_triples(Suite::Potentials);
        assert_eq!(pots.len(), 6);
    }

    #[test]
    fn triple_parsing() {
        let (v, g, i) = parse_triple("snorkel:none:agreeing").unwrap();
        assert_eq!(
            (v, g, i),
            (VariantId::Snorkel, GuideMode::None, Some(InitScheme::Agreeing))
        );
        assert!(parse_triple("cage").is_err());
        assert!(parse_triple("cage:bogus").is_err());
    }
}
