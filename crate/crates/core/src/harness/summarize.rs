use std::io::{Read, Write};
use std::path::Path;

use super::run::ResultRow;
use crate::{Error, Result};

/// Aggregate over trials for one (experiment, algorithm, noise) point.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub experiment: String,
    pub algorithm: String,
    pub noise: f64,
    pub trials: usize,
    /// Mean of the per-trial mean returns.
    pub mean_return: f64,
    /// `sqrt(Σ se_i²) / n`, the standard error of that mean.
    pub std_error: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Summary {
    /// Sorted by experiment, noise, then algorithm.
    pub rows: Vec<SummaryRow>,
    /// `(line, reason)` for every row that failed to parse.
    pub malformed: Vec<(u64, String)>,
}

pub fn summarize(path: &Path) -> Result<Summary> {
    summarize_reader(std::fs::File::open(path)?)
}

/// (experiment, algorithm, noise, per-trial (mean, se)).
type Group = (String, String, f64, Vec<(f64, f64)>);

/// Aggregates a results CSV. Malformed rows are collected, not fatal; a file
/// without a single usable row is an error.
pub fn summarize_reader(reader: impl Read) -> Result<Summary> {
    let mut csv = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = csv.headers()?.clone();
    let mut malformed = Vec::new();
    let mut groups: Vec<Group> = Vec::new();
    for record in csv.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                malformed.push((line, e.to_string()));
                continue;
            }
        };
        let line = record.position().map_or(0, |p| p.line());
        let row: ResultRow = match record.deserialize(Some(&headers)) {
            Ok(r) => r,
            Err(e) => {
                malformed.push((line, e.to_string()));
                continue;
            }
        };
        if !(row.mean_return.is_finite() && row.std_error >= 0.0) {
            malformed.push((line, "non-finite return or negative standard error".into()));
            continue;
        }
        let key = |g: &(String, String, f64, Vec<(f64, f64)>)| {
            g.0 == row.experiment && g.1 == row.algorithm && g.2 == row.noise
        };
        match groups.iter_mut().find(|g| key(g)) {
            Some(g) => g.3.push((row.mean_return, row.std_error)),
            None => groups.push((
                row.experiment.clone(),
                row.algorithm.clone(),
                row.noise,
                vec![(row.mean_return, row.std_error)],
            )),
        }
    }
    for (line, reason) in &malformed {
        log::warn!("line {line}: {reason}");
    }
    if groups.is_empty() {
        return Err(Error::NoData("results file has no usable rows".into()));
    }
    let mut rows: Vec<SummaryRow> = groups
        .into_iter()
        .map(|(experiment, algorithm, noise, values)| {
            let n = values.len() as f64;
            SummaryRow {
                experiment,
                algorithm,
                noise,
                trials: values.len(),
                mean_return: values.iter().map(|v| v.0).sum::<f64>() / n,
                std_error: values.iter().map(|v| v.1 * v.1).sum::<f64>().sqrt() / n,
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        a.experiment
            .cmp(&b.experiment)
            .then(a.noise.total_cmp(&b.noise))
            .then(a.algorithm.cmp(&b.algorithm))
    });
    Ok(Summary { rows, malformed })
}

impl Summary {
    /// Algorithms present, sorted.
    pub fn algorithms(&self) -> Vec<String> {
        let mut names: Vec<String> = self.rows.iter().map(|r| r.algorithm.clone()).collect();
        names.sort();
        names.dedup();
        names
    }

    pub fn get(&self, algorithm: &str, noise: f64) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .find(|r| r.algorithm == algorithm && r.noise == noise)
    }

    /// One line per (experiment, noise) with `<alg>_mean,<alg>_se` column pairs.
    pub fn write_wide(&self, writer: impl Write) -> Result<()> {
        let algorithms = self.algorithms();
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["experiment".to_string(), "noise".to_string()];
        for a in &algorithms {
            header.push(format!("{a}_mean"));
            header.push(format!("{a}_se"));
        }
        w.write_record(&header)?;
        let mut i = 0;
        while i < self.rows.len() {
            let (exp, noise) = (&self.rows[i].experiment, self.rows[i].noise);
            let mut j = i;
            while j < self.rows.len()
                && &self.rows[j].experiment == exp
                && self.rows[j].noise == noise
            {
                j += 1;
            }
            let point = &self.rows[i..j];
            let mut record = vec![exp.clone(), noise.to_string()];
            for a in &algorithms {
                match point.iter().find(|r| &r.algorithm == a) {
                    Some(r) => {
                        record.push(r.mean_return.to_string());
                        record.push(r.std_error.to_string());
                    }
                    None => record.extend([String::new(), String::new()]),
                }
            }
            w.write_record(&record)?;
            i = j;
        }
        w.flush()?;
        Ok(())
    }
}
