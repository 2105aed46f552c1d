//! Named series collections and their CSV layouts.
//!
//! Long layout: a header with `series_id`, `step_index` and `value` columns
//! (any order, extra columns ignored), one observation per row. Wide layout:
//! one column per series, one row per step; shorter series end with empty
//! cells.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{self, File};
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use gpfc_core::{Frequency, TimeSeries};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Layout {
    #[default]
    Long,
    Wide,
}

impl FromStr for Layout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "long" => Ok(Layout::Long),
            "wide" => Ok(Layout::Wide),
            other => Err(Error::Invalid(format!(
                "unknown layout `{other}` (long|wide)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadOptions {
    pub layout: Layout,
    pub frequency: Frequency,
    /// Test length for every series; the frequency default when absent.
    pub test_length: Option<usize>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            layout: Layout::Long,
            frequency: Frequency::Monthly,
            test_length: None,
        }
    }
}

impl LoadOptions {
    fn resolved_test_length(&self) -> Result<usize> {
        let len = self
            .test_length
            .unwrap_or_else(|| self.frequency.default_horizon());
        if len == 0 {
            return Err(Error::Invalid("test length must be at least 1".into()));
        }
        Ok(len)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub series: TimeSeries,
    /// Step index of the first observation as written in the source file.
    pub first_step: i64,
    /// Number of trailing observations held out for scoring.
    pub test_len: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    series: Vec<Series>,
}

impl Dataset {
    /// Checks that names are unique and every test length is at least 1.
    pub fn new(series: Vec<Series>) -> Result<Self> {
        let mut seen = HashSet::new();
        for s in &series {
            if !seen.insert(s.name.as_str()) {
                return Err(Error::DuplicateSeries(s.name.clone()));
            }
            if s.test_len == 0 {
                return Err(Error::Invalid(format!(
                    "series `{}` has test length 0",
                    s.name
                )));
            }
        }
        Ok(Dataset { series })
    }

    /// Builds a dataset from plain value vectors starting at step 0.
    pub fn from_values(
        items: Vec<(String, Vec<f64>)>,
        frequency: Frequency,
        test_len: usize,
    ) -> Result<Self> {
        Dataset::new(
            items
                .into_iter()
                .map(|(name, values)| Series {
                    name,
                    series: TimeSeries::new(values, frequency),
                    first_step: 0,
                    test_len,
                })
                .collect(),
        )
    }

    pub fn series(&self) -> &[Series] {
        &self.series
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }

    /// Concatenates datasets, rejecting repeated names.
    pub fn merge(parts: Vec<Dataset>) -> Result<Self> {
        Dataset::new(parts.into_iter().flat_map(|d| d.series).collect())
    }
}

/// Loads a CSV file, or every `*.csv` file of a directory in name order.
pub fn load_csv(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<Dataset> {
    let path = path.as_ref();
    if path.is_dir() {
        let mut files: Vec<_> = fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && p.extension().is_some_and(|ext| ext == "csv"))
            .collect();
        files.sort();
        let parts = files
            .iter()
            .map(|f| load_file(f, opts))
            .collect::<Result<Vec<_>>>()?;
        return Dataset::merge(parts);
    }
    load_file(path, opts)
}

fn load_file(path: &Path, opts: &LoadOptions) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, opts).map_err(|e| match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}

/// Parses CSV text in the given layout.
pub fn read_csv<R: Read>(reader: R, opts: &LoadOptions) -> Result<Dataset> {
    opts.frequency.validate()?;
    let test_len = opts.resolved_test_length()?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let parsed = match opts.layout {
        Layout::Long => read_long(&mut rdr, &header)?,
        Layout::Wide => read_wide(&mut rdr, &header)?,
    };
    Dataset::new(
        parsed
            .into_iter()
            .map(|(name, first_step, values)| Series {
                name,
                series: TimeSeries::new(values, opts.frequency),
                first_step,
                test_len,
            })
            .collect(),
    )
}

fn parse_value(text: &str, line: u64) -> Result<f64> {
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::parse(line, format!("invalid value `{text}`"))),
    }
}

type Parsed = Vec<(String, i64, Vec<f64>)>;

fn read_long<R: Read>(rdr: &mut csv::Reader<R>, header: &csv::StringRecord) -> Result<Parsed> {
    let column = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::parse(1, format!("missing `{name}` column")))
    };
    let (id_col, step_col, value_col) = (
        column("series_id")?,
        column("step_index")?,
        column("value")?,
    );
    let width = id_col.max(step_col).max(value_col) + 1;

    let mut order: Vec<String> = Vec::new();
    let mut rows: HashMap<String, BTreeMap<i64, (f64, u64)>> = HashMap::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() < width {
            return Err(Error::parse(
                line,
                format!("expected at least {width} fields, found {}", record.len()),
            ));
        }
        let name = &record[id_col];
        if name.is_empty() {
            return Err(Error::parse(line, "empty series_id"));
        }
        let step: i64 = record[step_col].parse().map_err(|_| {
            Error::parse(line, format!("invalid step_index `{}`", &record[step_col]))
        })?;
        let value = parse_value(&record[value_col], line)?;
        let steps = rows.entry(name.to_string()).or_insert_with(|| {
            order.push(name.to_string());
            BTreeMap::new()
        });
        if let Some(&(_, first_line)) = steps.get(&step) {
            return Err(Error::DuplicateStep {
                series: name.to_string(),
                step,
                line,
                first_line,
            });
        }
        steps.insert(step, (value, line));
    }

    order
        .into_iter()
        .map(|name| {
            let steps = rows.remove(&name).expect("every ordered name has rows");
            let first = *steps.keys().next().expect("at least one row");
            let mut values = Vec::with_capacity(steps.len());
            for (expected, (step, (value, _))) in (first..).zip(steps) {
                if step != expected {
                    return Err(Error::Gap {
                        series: name,
                        missing: expected,
                    });
                }
                values.push(value);
            }
            Ok((name, first, values))
        })
        .collect()
}

fn read_wide<R: Read>(rdr: &mut csv::Reader<R>, header: &csv::StringRecord) -> Result<Parsed> {
    let names: Vec<String> = header.iter().map(str::to_string).collect();
    if let Some(pos) = names.iter().position(String::is_empty) {
        return Err(Error::parse(
            1,
            format!("column {} has an empty name", pos + 1),
        ));
    }
    let mut seen = HashSet::new();
    for n in &names {
        if !seen.insert(n) {
            return Err(Error::DuplicateSeries(n.clone()));
        }
    }
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    let mut ended = vec![false; names.len()];
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != names.len() {
            return Err(Error::parse(
                line,
                format!("expected {} fields, found {}", names.len(), record.len()),
            ));
        }
        for (j, cell) in record.iter().enumerate() {
            if cell.is_empty() {
                ended[j] = true;
            } else if ended[j] {
                return Err(Error::parse(
                    line,
                    format!("series `{}` continues after an empty cell", names[j]),
                ));
            } else {
                values[j].push(parse_value(cell, line)?);
            }
        }
    }
    names
        .into_iter()
        .zip(values)
        .map(|(name, v)| {
            if v.is_empty() {
                Err(Error::Invalid(format!("series `{name}` has no values")))
            } else {
                Ok((name, 0, v))
            }
        })
        .collect()
}

/// Writes `ds` in the given layout. Values use the shortest representation
/// that parses back to the same bits.
pub fn write_csv<W: Write>(ds: &Dataset, writer: W, layout: Layout) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    match layout {
        Layout::Long => {
            w.write_record(["series_id", "step_index", "value"])?;
            for s in ds.series() {
                for (i, v) in s.series.values.iter().enumerate() {
                    let step = s.first_step + i as i64;
                    w.write_record([s.name.clone(), step.to_string(), v.to_string()])?;
                }
            }
        }
        Layout::Wide => {
            if let Some(s) = ds.series().iter().find(|s| s.first_step != 0) {
                return Err(Error::Invalid(format!(
                    "wide layout cannot represent series `{}` starting at step {}",
                    s.name, s.first_step
                )));
            }
            w.write_record(ds.series().iter().map(|s| s.name.as_str()))?;
            let rows = ds
                .series()
                .iter()
                .map(|s| s.series.len())
                .max()
                .unwrap_or(0);
            for i in 0..rows {
                w.write_record(
                    ds.series()
                        .iter()
                        .map(|s| s.series.values.get(i).map_or(String::new(), f64::to_string)),
                )?;
            }
        }
    }
    w.flush().map_err(|e| Error::io("<output>", e))?;
    Ok(())
}

/// Writes `ds` to a file.
pub fn save_csv(ds: &Dataset, path: impl AsRef<Path>, layout: Layout) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(ds, file, layout)
}
