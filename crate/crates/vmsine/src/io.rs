//! File formats: CSV angle tables and TOML scenario descriptions.
//!
//! Angle tables are comma-separated with an optional single header row and
//! one numeric column of radians per dimension. A column named `outlier`
//! (0/1 mask) is accepted and ignored on load. Values are wrapped to
//! [0, 2pi) when read; radians written by this module use the shortest
//! round-trip decimal form, so a simulate -> load cycle is bit-stable.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::experiments::ScenarioSpec;
use crate::model::SineModelParams;
use crate::sampling::{
    ContaminationMode, ContaminationSpec, DEFAULT_OUTLIER_CONCENTRATION, DEFAULT_OUTLIER_SHIFT,
};
use crate::torus::{Angle, TorusSample};

const DEG_PER_RAD: f64 = 180.0 / std::f64::consts::PI;

fn parse_cell(cell: &str, row: usize, col: usize) -> Result<f64> {
    let trimmed = cell.trim();
    let value: f64 = trimmed
        .parse()
        .map_err(|_| Error::Parse(format!("non-numeric cell '{trimmed}' at row {row}, column {col}")))?;
    if !value.is_finite() {
        return Err(Error::Parse(format!(
            "non-finite cell '{trimmed}' at row {row}, column {col}"
        )));
    }
    Ok(value)
}

/// Loads an angle table. `degrees` converts on the boundary only.
pub fn read_angle_table(path: &Path, degrees: bool) -> Result<TorusSample> {
    let text = fs::read_to_string(path)?;
    read_angle_table_str(&text, degrees)
}

pub fn read_angle_table_str(text: &str, degrees: bool) -> Result<TorusSample> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        if rec.iter().all(|c| c.trim().is_empty()) {
            continue;
        }
        records.push(rec);
    }
    if records.is_empty() {
        return Err(Error::Parse("no rows in angle table".into()));
    }

    // A first row that does not parse as numbers is a header.
    let header_cells: Vec<String> = records[0].iter().map(|c| c.trim().to_string()).collect();
    let has_header = header_cells
        .iter()
        .any(|c| c.parse::<f64>().is_err());
    let mut drop_col: Option<usize> = None;
    let data_start = if has_header {
        if let Some(pos) = header_cells
            .iter()
            .position(|c| c.eq_ignore_ascii_case("outlier"))
        {
            drop_col = Some(pos);
        }
        1
    } else {
        0
    };
    if records.len() <= data_start {
        return Err(Error::Parse("no data rows in angle table".into()));
    }

    let width = records[data_start].len();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(records.len() - data_start);
    for (i, rec) in records.iter().enumerate().skip(data_start) {
        if rec.len() != width {
            return Err(Error::Parse(format!(
                "row {i} has {} cells, expected {width}",
                rec.len()
            )));
        }
        let mut row = Vec::with_capacity(width);
        for (j, cell) in rec.iter().enumerate() {
            if drop_col == Some(j) {
                continue;
            }
            let mut v = parse_cell(cell, i, j)?;
            if degrees {
                v /= DEG_PER_RAD;
            }
            row.push(v);
        }
        rows.push(row);
    }
    TorusSample::from_rows(&rows)
}

/// Writes an angle table; an empty `rows` slice yields a header-only file.
pub fn write_angle_csv<W: Write>(
    mut writer: W,
    p: usize,
    rows: &[Vec<f64>],
    mask: Option<&[bool]>,
    degrees: bool,
) -> Result<()> {
    let mut header: Vec<String> = (1..=p).map(|j| format!("theta{j}")).collect();
    if mask.is_some() {
        header.push("outlier".into());
    }
    writeln!(writer, "{}", header.join(","))?;
    for (i, row) in rows.iter().enumerate() {
        let mut cells: Vec<String> = row
            .iter()
            .map(|&v| format!("{}", if degrees { v * DEG_PER_RAD } else { v }))
            .collect();
        if let Some(m) = mask {
            cells.push(if m[i] { "1" } else { "0" }.into());
        }
        writeln!(writer, "{}", cells.join(","))?;
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    n: usize,
    kappa: Option<Vec<f64>>,
    lambda: Option<Vec<f64>>,
    mu: Option<Vec<f64>>,
    contamination: Option<ContaminationFile>,
    blocks: Option<Vec<BlockFile>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BlockFile {
    kappa: Vec<f64>,
    lambda: Option<Vec<f64>>,
    mu: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ContaminationFile {
    n_outliers: usize,
    mode: Option<String>,
    dims: Option<Vec<usize>>,
    shift: Option<Vec<f64>>,
    concentration: Option<Vec<f64>>,
}

fn params_from_parts(
    kappa: Vec<f64>,
    lambda: Option<Vec<f64>>,
    mu: Option<Vec<f64>>,
) -> Result<SineModelParams> {
    let p = kappa.len();
    let mu = mu.unwrap_or_else(|| vec![0.0; p]);
    if mu.len() != p {
        return Err(Error::Parse(format!(
            "mu has {} entries, expected {p}",
            mu.len()
        )));
    }
    let mu: Vec<Angle> = mu
        .into_iter()
        .map(Angle::wrap)
        .collect::<Result<Vec<_>>>()?;
    let tri = lambda.unwrap_or_else(|| vec![0.0; p * (p - 1) / 2]);
    SineModelParams::from_upper_triangle(mu, kappa, &tri)
}

fn broadcast(values: Option<Vec<f64>>, len: usize, default: f64, what: &str) -> Result<Vec<f64>> {
    match values {
        None => Ok(vec![default; len]),
        Some(v) if v.len() == 1 => Ok(vec![v[0]; len]),
        Some(v) if v.len() == len => Ok(v),
        Some(v) => Err(Error::Parse(format!(
            "{what} has {} entries, expected 1 or {len}",
            v.len()
        ))),
    }
}

fn contamination_from_file(file: ContaminationFile, p: usize) -> Result<ContaminationSpec> {
    let mode = match file.mode.as_deref().unwrap_or("append") {
        "append" => ContaminationMode::Append,
        "replace" => ContaminationMode::ReplaceDims,
        other => {
            return Err(Error::Parse(format!(
                "unknown contamination mode '{other}' (use append or replace)"
            )))
        }
    };
    let dims = file.dims.unwrap_or_else(|| (0..p).collect());
    let k = dims.len();
    let shift = broadcast(file.shift, k, DEFAULT_OUTLIER_SHIFT, "shift")?;
    let concentration = broadcast(
        file.concentration,
        k,
        DEFAULT_OUTLIER_CONCENTRATION,
        "concentration",
    )?;
    Ok(ContaminationSpec {
        n_outliers: file.n_outliers,
        mode,
        contaminated_dims: dims,
        shift,
        concentration,
    })
}

/// Reads a scenario description from TOML.
pub fn read_scenario(path: &Path) -> Result<ScenarioSpec> {
    let text = fs::read_to_string(path)?;
    read_scenario_str(&text)
}

pub fn read_scenario_str(text: &str) -> Result<ScenarioSpec> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let (true_params, blocks) = match (file.blocks, file.kappa) {
        (Some(blocks), None) => {
            let parsed: Vec<SineModelParams> = blocks
                .into_iter()
                .map(|b| params_from_parts(b.kappa, b.lambda, b.mu))
                .collect::<Result<Vec<_>>>()?;
            (SineModelParams::block_diagonal(&parsed)?, Some(parsed))
        }
        (None, Some(kappa)) => (params_from_parts(kappa, file.lambda, file.mu)?, None),
        (Some(_), Some(_)) => {
            return Err(Error::Parse(
                "give either kappa/lambda or blocks, not both".into(),
            ))
        }
        (None, None) => return Err(Error::Parse("scenario needs kappa or blocks".into())),
    };
    let p = true_params.dim();
    let contamination = file
        .contamination
        .map(|c| contamination_from_file(c, p))
        .transpose()?;
    match blocks {
        Some(blocks) => ScenarioSpec::from_blocks(blocks, file.n, contamination),
        None => ScenarioSpec::new(true_params, file.n, contamination),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_detection_and_mask_column() {
        let text = "theta1,theta2,outlier\n0.5,1.5,0\n7.0,2.5,1\n";
        let sample = read_angle_table_str(text, false).unwrap();
        assert_eq!(sample.n(), 2);
        assert_eq!(sample.dim(), 2);
        // 7.0 wraps below 2 pi.
        assert!(sample.row(1)[0] < std::f64::consts::TAU);

        let bare = "0.5,1.5\n1.0,2.0\n";
        let sample = read_angle_table_str(bare, false).unwrap();
        assert_eq!(sample.n(), 2);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(matches!(
            read_angle_table_str("", false),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            read_angle_table_str("theta1,theta2\n", false),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            read_angle_table_str("0.5,abc\n", false),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            read_angle_table_str("0.5,inf\n", false),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            read_angle_table_str("0.5,1.0\n0.3\n", false),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn degrees_convert_on_the_boundary() {
        let sample = read_angle_table_str("90,180\n", true).unwrap();
        assert!((sample.row(0)[0] - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!((sample.row(0)[1] - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn write_then_read_is_bit_stable() {
        let rows = vec![vec![0.123456789012345678, 5.9], vec![3.3, 0.0]];
        let mut buf = Vec::new();
        write_angle_csv(&mut buf, 2, &rows, Some(&[false, true]), false).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let sample = read_angle_table_str(&text, false).unwrap();
        for (i, row) in rows.iter().enumerate() {
            for j in 0..2 {
                assert_eq!(sample.row(i)[j].to_bits(), row[j].to_bits());
            }
        }
        // Header-only write for an empty simulation.
        let mut buf = Vec::new();
        write_angle_csv(&mut buf, 3, &[], None, false).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "theta1,theta2,theta3\n");
    }

    #[test]
    fn scenario_round_trip() {
        let text = r#"
n = 250
kappa = [10.0, 20.0]
lambda = [15.0]

[contamination]
n_outliers = 50
mode = "append"
"#;
        let scenario = read_scenario_str(text).unwrap();
        assert_eq!(scenario.n, 250);
        assert_eq!(scenario.p(), 2);
        assert_eq!(scenario.true_params.lambda()[(0, 1)], 15.0);
        let c = scenario.contamination.unwrap();
        assert_eq!(c.n_outliers, 50);
        assert_eq!(c.contaminated_dims, vec![0, 1]);
        assert_eq!(c.shift, vec![DEFAULT_OUTLIER_SHIFT; 2]);
    }

    #[test]
    fn scenario_blocks() {
        let text = r#"
n = 300
[[blocks]]
kappa = [5.0, 10.0]
lambda = [5.0]
[[blocks]]
kappa = [10.0, 20.0]
lambda = [15.0]
[[blocks]]
kappa = [30.0]

[contamination]
n_outliers = 50
mode = "replace"
dims = [0, 1]
"#;
        let scenario = read_scenario_str(text).unwrap();
        assert_eq!(scenario.p(), 5);
        assert_eq!(scenario.true_params.kappa(), &[5.0, 10.0, 10.0, 20.0, 30.0]);
        let tri = scenario.true_params.lambda_upper_triangle();
        assert_eq!(tri[0], 5.0); // (0,1)
        assert_eq!(tri[7], 15.0); // (2,3)
        assert_eq!(tri.iter().filter(|&&v| v != 0.0).count(), 2);
    }

    #[test]
    fn scenario_errors() {
        assert!(read_scenario_str("n = 10").is_err());
        assert!(read_scenario_str("n = 10\nkappa = [1.0]\nnot_a_field = 3").is_err());
        let both = "n = 10\nkappa = [1.0]\n[[blocks]]\nkappa = [1.0]";
        assert!(read_scenario_str(both).is_err());
    }
}
