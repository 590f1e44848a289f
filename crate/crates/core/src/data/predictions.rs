//! Predictions CSV: `instance_id,prediction,p_1,...,p_K`.

use std::path::Path;

use crate::data::io::write_atomic;
use crate::error::InputError;
use crate::model::posterior::LabelPosterior;

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub instance_id: usize,
    pub prediction: usize,
    pub probs: Vec<f64>,
}

pub fn predictions_csv(posteriors: &[LabelPosterior]) -> Vec<u8> {
    let k = posteriors.first().map_or(0, |p| p.probs.len());
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["instance_id".to_string(), "prediction".to_string()];
    header.extend((1..=k).map(|c| format!("p_{c}")));
    writer.write_record(&header).expect("in-memory write");
    for (i, post) in posteriors.iter().enumerate() {
        let mut row = vec![i.to_string(), post.prediction.to_string()];
        row.extend(post.probs.iter().map(|p| p.to_string()));
        writer.write_record(&row).expect("in-memory write");
    }
    writer.into_inner().expect("in-memory flush")
}

pub fn write_predictions(path: &Path, posteriors: &[LabelPosterior]) -> std::io::Result<()> {
    write_atomic(path, &predictions_csv(posteriors))
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRow>, InputError> {
    let fail = |line: Option<u64>, msg: String| {
        let at = line.map(|l| format!(" line {l}")).unwrap_or_default();
        InputError::Invalid(format!("{}{at}: {msg}", path.display()))
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| fail(None, e.to_string()))?;
    let header = reader.headers().map_err(|e| fail(None, e.to_string()))?.clone();
    let k = header.len().saturating_sub(2);
    let expected: Vec<String> = ["instance_id".to_string(), "prediction".to_string()]
        .into_iter()
        .chain((1..=k).map(|c| format!("p_{c}")))
        .collect();
    if k < 2 || header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(fail(Some(1), format!("header must be {}", expected.join(","))));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| fail(None, e.to_string()))?;
        let line = record.position().map(|p| p.line());
        let num = |idx: usize| -> Result<f64, InputError> {
            record[idx]
                .parse::<f64>()
                .map_err(|e| fail(line, format!("column {}: {e}", idx + 1)))
        };
        let instance_id = record[0].parse().map_err(|e| fail(line, format!("instance_id: {e}")))?;
        let prediction: usize = record[1].parse().map_err(|e| fail(line, format!("prediction: {e}")))?;
        let probs = (2..2 + k).map(num).collect::<Result<Vec<_>, _>>()?;
        rows.push(PredictionRow {
            instance_id,
            prediction,
            probs,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let posts = vec![
            LabelPosterior::from_probs(vec![0.25, 0.75]),
            LabelPosterior::from_probs(vec![0.5, 0.5]),
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        write_predictions(&path, &posts).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("instance_id,prediction,p_1,p_2\n0,2,0.25,0.75\n"));
        let rows = read_predictions(&path).unwrap();
        assert_eq!(rows[1].prediction, 1);
        assert_eq!(rows[0].probs, vec![0.25, 0.75]);
    }
}
