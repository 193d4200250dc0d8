use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use crate::checks::{run_check, CheckConfig, CheckResult};
use crate::data::{Dataset, GroupedDataset, IidDataset, TimeSeriesDataset};
use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::rng::SeedSpec;

/// Reads a dataset from CSV with a header row.
///
/// `value` is required. With a `group` column the result is grouped (groups
/// in order of first appearance); with a `time` column it is a time series
/// whose stamps must strictly increase down the file.
pub fn read_dataset<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let value_col =
        col("value").ok_or_else(|| Error::SchemaMismatch(format!("no `value` column in header {headers:?}")))?;
    let group_col = col("group");
    let time_col = col("time");
    if group_col.is_some() && time_col.is_some() {
        return Err(Error::SchemaMismatch("grouped time series are not supported".into()));
    }

    let mut values = Vec::new();
    let mut times = Vec::new();
    let mut group_of = Vec::new();
    let mut group_ids: HashMap<String, usize> = HashMap::new();
    for record in rdr.records() {
        let record = record?;
        // header is line 1
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = |c: usize| {
            record.get(c).ok_or_else(|| Error::Parse {
                line,
                message: format!("missing field {}", headers.get(c).unwrap_or("?")),
            })
        };
        let number = |c: usize| -> Result<f64> {
            let raw = field(c)?;
            raw.parse::<f64>().map_err(|_| Error::Parse { line, message: format!("{:?} is not a number", raw) })
        };
        let v = number(value_col)?;
        if !v.is_finite() {
            return Err(Error::Parse { line, message: format!("non-finite value {v}") });
        }
        values.push(v);
        if let Some(c) = time_col {
            let t = number(c)?;
            if let Some(&prev) = times.last() {
                if !(t > prev) {
                    return Err(Error::Parse { line, message: format!("time {t} does not increase past {prev}") });
                }
            }
            times.push(t);
        }
        if let Some(c) = group_col {
            let next = group_ids.len();
            group_of.push(*group_ids.entry(field(c)?.to_string()).or_insert(next));
        }
    }
    if values.is_empty() {
        return Err(Error::Validation(crate::error::ValidationError::EmptyData));
    }
    if group_col.is_some() {
        let mut groups = vec![Vec::new(); group_ids.len()];
        for (v, g) in values.into_iter().zip(group_of) {
            groups[g].push(v);
        }
        Ok(Dataset::Grouped(GroupedDataset::new(groups)?))
    } else if time_col.is_some() {
        Ok(Dataset::TimeSeries(TimeSeriesDataset::new(values, times)?))
    } else {
        Ok(Dataset::Iid(IidDataset::new(values)?))
    }
}

pub fn read_dataset_path(path: &Path) -> Result<Dataset> {
    read_dataset(std::fs::File::open(path)?)
}

/// Runs a check on data read from a CSV file.
pub fn check_csv(path: &Path, model: &ModelSpec, cfg: &CheckConfig, seed: &SeedSpec) -> Result<CheckResult> {
    let data = read_dataset_path(path)?;
    check_dataset(&data, model, cfg, seed)
}

/// Runs a check after matching the data's shape against the model.
pub fn check_dataset(data: &Dataset, model: &ModelSpec, cfg: &CheckConfig, seed: &SeedSpec) -> Result<CheckResult> {
    let grouped = data.as_grouped().is_some();
    if grouped != model.is_grouped() {
        return Err(Error::SchemaMismatch(if grouped {
            format!("data has a group column but {model} is not a grouped model")
        } else {
            format!("{model} needs a group column")
        }));
    }
    run_check(&model.build()?, data, cfg, None, seed)
}
