//! Dataset CSV schema.
//!
//! Header-driven columns: required `t` and `y_factual`; optional
//! `y_cfactual`, `mu0`, `mu1` (the latter two together), and `e` (a 0/1
//! randomized-subset flag); every remaining column must be a covariate named
//! `x_<name>`. A trailing `domain` column (as written by exports with a
//! partition attached) is accepted and ignored on load. Values are plain
//! decimal numbers; missing or non-numeric cells are hard errors naming the
//! row and column. Floats are written in shortest round-trip form, so a
//! save/load cycle reproduces every value bit-exactly.

use std::fs;
use std::path::Path;

use cfrlab_core::data::Dataset;
use cfrlab_core::domains::DomainPartition;
use cfrlab_core::numerics::Matrix;

use crate::error::{io_err, CliError, Result};

struct ColumnLayout {
    t: usize,
    y_factual: usize,
    y_cfactual: Option<usize>,
    mu0: Option<usize>,
    mu1: Option<usize>,
    e: Option<usize>,
    /// (column index in the file, feature name without the x_ prefix)
    features: Vec<(usize, String)>,
}

fn parse_header(headers: &csv::StringRecord) -> Result<ColumnLayout> {
    let mut t = None;
    let mut y_factual = None;
    let mut y_cfactual = None;
    let mut mu0 = None;
    let mut mu1 = None;
    let mut e = None;
    let mut features = Vec::new();
    for (idx, name) in headers.iter().enumerate() {
        match name {
            "t" => t = Some(idx),
            "y_factual" => y_factual = Some(idx),
            "y_cfactual" => y_cfactual = Some(idx),
            "mu0" => mu0 = Some(idx),
            "mu1" => mu1 = Some(idx),
            "e" => e = Some(idx),
            "domain" => {}
            other => {
                if let Some(feature) = other.strip_prefix("x_") {
                    features.push((idx, feature.to_string()));
                } else {
                    return Err(CliError::Data(format!(
                        "unrecognized column {other:?}; covariates must be named x_<name>"
                    )));
                }
            }
        }
    }
    let t = t.ok_or_else(|| CliError::Data("missing required column `t`".into()))?;
    let y_factual =
        y_factual.ok_or_else(|| CliError::Data("missing required column `y_factual`".into()))?;
    if mu0.is_some() != mu1.is_some() {
        return Err(CliError::Data("columns mu0 and mu1 must appear together".into()));
    }
    if features.is_empty() {
        return Err(CliError::Data("no covariate columns (x_<name>) found".into()));
    }
    Ok(ColumnLayout { t, y_factual, y_cfactual, mu0, mu1, e, features })
}

fn parse_cell(record: &csv::StringRecord, row: usize, col: usize, name: &str) -> Result<f64> {
    let raw = record.get(col).unwrap_or("");
    if raw.is_empty() {
        return Err(CliError::Data(format!(
            "missing value at data row {row}, column {name}"
        )));
    }
    raw.parse::<f64>().map_err(|_| {
        CliError::Data(format!(
            "non-numeric value {raw:?} at data row {row}, column {name}"
        ))
    })
}

fn parse_binary(record: &csv::StringRecord, row: usize, col: usize, name: &str) -> Result<bool> {
    let v = parse_cell(record, row, col, name)?;
    if v == 0.0 {
        Ok(false)
    } else if v == 1.0 {
        Ok(true)
    } else {
        Err(CliError::Data(format!(
            "column {name} must be 0 or 1, found {v} at data row {row}"
        )))
    }
}

/// Loads a dataset, resolving the anchor covariate by name (`bw` and `x_bw`
/// both match a column `x_bw`).
pub fn load_csv(path: &Path, anchor_name: &str) -> Result<Dataset> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let layout = parse_header(reader.headers().map_err(|e| CliError::Data(e.to_string()))?)?;

    let anchor_key = anchor_name.strip_prefix("x_").unwrap_or(anchor_name);
    let Some(anchor_index) =
        layout.features.iter().position(|(_, name)| name == anchor_key)
    else {
        let names: Vec<&str> =
            layout.features.iter().map(|(_, name)| name.as_str()).collect();
        return Err(CliError::Data(format!(
            "anchor {anchor_name:?} not found; covariates are {names:?}"
        )));
    };

    let mut t = Vec::new();
    let mut y = Vec::new();
    let mut y_cf = Vec::new();
    let mut mu0 = Vec::new();
    let mut mu1 = Vec::new();
    let mut e_flags = Vec::new();
    let mut x_data = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|err| CliError::Data(err.to_string()))?;
        let row = row_idx + 1;
        t.push(parse_binary(&record, row, layout.t, "t")?);
        y.push(parse_cell(&record, row, layout.y_factual, "y_factual")?);
        if let Some(col) = layout.y_cfactual {
            y_cf.push(parse_cell(&record, row, col, "y_cfactual")?);
        }
        if let (Some(c0), Some(c1)) = (layout.mu0, layout.mu1) {
            mu0.push(parse_cell(&record, row, c0, "mu0")?);
            mu1.push(parse_cell(&record, row, c1, "mu1")?);
        }
        if let Some(col) = layout.e {
            e_flags.push(parse_binary(&record, row, col, "e")?);
        }
        for (col, name) in &layout.features {
            x_data.push(parse_cell(&record, row, *col, &format!("x_{name}"))?);
        }
    }
    let n = t.len();
    let d = layout.features.len();
    let x = Matrix::from_vec(n, d, x_data)?;
    let names: Vec<String> = layout.features.iter().map(|(_, name)| name.clone()).collect();
    let mut dataset = Dataset::new(
        x,
        t,
        y,
        (!mu0.is_empty()).then_some(mu0),
        (!mu1.is_empty()).then_some(mu1),
        anchor_index,
        Some(names),
    )?;
    if !y_cf.is_empty() {
        dataset = dataset.with_y_cfactual(y_cf)?;
    }
    if !e_flags.is_empty() {
        dataset = dataset.with_e_flags(e_flags)?;
    }
    Ok(dataset)
}

/// Serializes a dataset in the schema above, optionally appending a `domain`
/// column from a partition.
pub fn dataset_to_csv(dataset: &Dataset, partition: Option<&DomainPartition>) -> String {
    let mut header = vec!["t".to_string(), "y_factual".to_string()];
    if dataset.y_cfactual().is_some() {
        header.push("y_cfactual".to_string());
    }
    if dataset.mu0().is_some() {
        header.push("mu0".to_string());
        header.push("mu1".to_string());
    }
    if dataset.e_flags().is_some() {
        header.push("e".to_string());
    }
    for name in dataset.feature_names() {
        header.push(format!("x_{name}"));
    }
    if partition.is_some() {
        header.push("domain".to_string());
    }
    let mut out = header.join(",");
    out.push('\n');

    for row in 0..dataset.len() {
        let mut cells: Vec<String> = Vec::with_capacity(header.len());
        cells.push(if dataset.treatment()[row] { "1".into() } else { "0".into() });
        cells.push(format!("{}", dataset.outcome()[row]));
        if let Some(y_cf) = dataset.y_cfactual() {
            cells.push(format!("{}", y_cf[row]));
        }
        if let (Some(m0), Some(m1)) = (dataset.mu0(), dataset.mu1()) {
            cells.push(format!("{}", m0[row]));
            cells.push(format!("{}", m1[row]));
        }
        if let Some(e) = dataset.e_flags() {
            cells.push(if e[row] { "1".into() } else { "0".into() });
        }
        for col in 0..dataset.num_features() {
            cells.push(format!("{}", dataset.covariates().get(row, col)));
        }
        if let Some(p) = partition {
            cells.push(format!("{}", p.labels()[row]));
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::outputs::write_atomic;

    fn write_temp(contents: &str) -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        write_atomic(&dir.path().join("data.csv"), contents).unwrap();
        dir
    }

    #[test]
    fn minimal_two_row_fixture_loads() {
        let dir = write_temp("t,y_factual,x_a,x_b\n1,2.5,0.1,4\n0,1.5,0.2,5\n");
        let ds = load_csv(&dir.path().join("data.csv"), "a").unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.num_features(), 2);
        assert_eq!(ds.anchor_index(), 0);
        assert_eq!(ds.treatment(), &[true, false]);
        assert_eq!(ds.outcome(), &[2.5, 1.5]);
    }

    #[test]
    fn non_binary_treatment_names_row() {
        let dir = write_temp("t,y_factual,x_a\n0,1.0,0.5\n2,2.0,0.25\n");
        let err = load_csv(&dir.path().join("data.csv"), "a").unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("row 2"), "message: {msg}");
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn missing_value_names_row_and_column() {
        let dir = write_temp("t,y_factual,x_a\n0,1.0,0.5\n1,,0.25\n");
        let err = load_csv(&dir.path().join("data.csv"), "a").unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("row 2") && msg.contains("y_factual"), "message: {msg}");
    }

    #[test]
    fn unknown_anchor_and_column_rejected() {
        let dir = write_temp("t,y_factual,x_a\n0,1.0,0.5\n1,2.0,0.25\n");
        assert!(load_csv(&dir.path().join("data.csv"), "zzz").is_err());

        let dir = write_temp("t,y_factual,weird\n0,1.0,0.5\n1,2.0,0.25\n");
        assert!(load_csv(&dir.path().join("data.csv"), "a").is_err());
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        use cfrlab_core::sem::{confounded_benchmark, synth_dataset};
        let dataset = synth_dataset(&confounded_benchmark(), 60, 9).unwrap().dataset;
        let text = dataset_to_csv(&dataset, None);
        let dir = write_temp(&text);
        let back = load_csv(&dir.path().join("data.csv"), dataset.anchor_name()).unwrap();
        assert_eq!(back.outcome(), dataset.outcome());
        assert_eq!(back.treatment(), dataset.treatment());
        assert_eq!(back.mu0(), dataset.mu0());
        assert_eq!(back.mu1(), dataset.mu1());
        assert_eq!(back.covariates(), dataset.covariates());
        assert_eq!(back.feature_names(), dataset.feature_names());
        // And the serialized text itself is stable.
        assert_eq!(dataset_to_csv(&back, None), text);
    }

    #[test]
    fn domain_column_written_and_ignored_on_load() {
        use cfrlab_core::domains::{generate_domains, DomainConfig};
        use cfrlab_core::sem::{confounded_benchmark, synth_dataset};
        let dataset = synth_dataset(&confounded_benchmark(), 40, 2).unwrap().dataset;
        let partition =
            generate_domains(&dataset.anchor_values(), &DomainConfig::new(3, 7)).unwrap();
        let text = dataset_to_csv(&dataset, Some(&partition));
        assert!(text.lines().next().unwrap().ends_with(",domain"));
        let dir = write_temp(&text);
        let back = load_csv(&dir.path().join("data.csv"), dataset.anchor_name()).unwrap();
        assert_eq!(back.num_features(), dataset.num_features());
    }
}
