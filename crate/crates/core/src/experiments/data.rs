use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::transform::{apply_transform, TransformCode};
use crate::error::{Error, Result};

/// A dated panel: one row per period, one column per series.
#[derive(Clone, Debug, PartialEq)]
pub struct Panel {
    pub dates: Vec<String>,
    pub names: Vec<String>,
    pub data: DMatrix<f64>,
}

impl Panel {
    pub fn new(dates: Vec<String>, names: Vec<String>, data: DMatrix<f64>) -> Result<Self> {
        if dates.len() != data.nrows() || names.len() != data.ncols() {
            return Err(Error::shape("panel labels do not match the data"));
        }
        Ok(Self { dates, names, data })
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.names.iter().position(|n| n == name)?;
        Some(self.data.column(j).iter().copied().collect())
    }

    /// Keep the named series, in the given order.
    pub fn select(&self, names: &[String]) -> Result<Panel> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| {
                self.names
                    .iter()
                    .position(|m| m == n)
                    .ok_or_else(|| Error::data(format!("series {n} is not in the panel")))
            })
            .collect::<Result<_>>()?;
        let data = DMatrix::from_fn(self.data.nrows(), idx.len(), |t, j| self.data[(t, idx[j])]);
        Panel::new(self.dates.clone(), names.to_vec(), data)
    }

    pub fn read_csv(path: &Path) -> Result<Panel> {
        let file = std::fs::File::open(path)
            .map_err(|e| Error::usage(format!("cannot open data file {}: {e}", path.display())))?;
        Self::from_reader(file, &path.display().to_string())
    }

    /// First column is the date; every other column is a series.
    pub fn from_reader<R: std::io::Read>(reader: R, source: &str) -> Result<Panel> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr
            .headers()
            .map_err(|e| Error::data(format!("{source}: cannot read header: {e}")))?
            .clone();
        if header.len() < 2 {
            return Err(Error::data(format!("{source}: need a date column and at least one series")));
        }
        let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut dates = Vec::new();
        let mut values = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            // header is line 1
            let line = row + 2;
            let rec = rec.map_err(|e| Error::data(format!("{source}:{line}: {e}")))?;
            if rec.len() != header.len() {
                return Err(Error::data(format!(
                    "{source}:{line}: expected {} fields, found {}",
                    header.len(),
                    rec.len()
                )));
            }
            dates.push(rec[0].to_string());
            for (j, field) in rec.iter().skip(1).enumerate() {
                let v: f64 = field.parse().map_err(|_| {
                    Error::data(format!("{source}:{line}: cannot parse {field:?} in column {}", names[j]))
                })?;
                if !v.is_finite() {
                    return Err(Error::data(format!("{source}:{line}: non-finite value in column {}", names[j])));
                }
                values.push(v);
            }
        }
        if dates.is_empty() {
            return Err(Error::data(format!("{source}: no observations")));
        }
        let data = DMatrix::from_row_slice(dates.len(), names.len(), &values);
        Panel::new(dates, names, data)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        let mut header = vec!["date".to_string()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header).map_err(csv_err)?;
        for (t, d) in self.dates.iter().enumerate() {
            let mut rec = vec![d.clone()];
            rec.extend(self.data.row(t).iter().map(|v| format!("{v:e}")));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::data(format!("{other:?}")),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelSize {
    Small,
    Medium,
    Large,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub name: String,
    pub code: TransformCode,
    #[serde(default)]
    pub sizes: Vec<ModelSize>,
}

/// Series name → transformation code and model-size membership.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub series: Vec<ManifestEntry>,
}

impl Manifest {
    /// JSON (`{"series": [{"name", "code", "sizes"}]}`) or CSV with columns
    /// `name,code,small,medium,large` (membership flags 0/1).
    pub fn load(path: &Path) -> Result<Manifest> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::usage(format!("cannot open manifest {}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        if is_json {
            serde_json::from_str(&text).map_err(|e| Error::data(format!("{}: {e}", path.display())))
        } else {
            Self::from_csv(&text, &path.display().to_string())
        }
    }

    pub fn from_csv(text: &str, source: &str) -> Result<Manifest> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let header = rdr.headers().map_err(|e| Error::data(format!("{source}: {e}")))?.clone();
        let col = |n: &str| header.iter().position(|h| h.eq_ignore_ascii_case(n));
        let (name_i, code_i) = match (col("name"), col("code")) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::data(format!("{source}: manifest needs name and code columns"))),
        };
        let size_cols: Vec<(ModelSize, usize)> = [
            (ModelSize::Small, "small"),
            (ModelSize::Medium, "medium"),
            (ModelSize::Large, "large"),
        ]
        .into_iter()
        .filter_map(|(s, n)| col(n).map(|i| (s, i)))
        .collect();
        let mut series = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let line = row + 2;
            let rec = rec.map_err(|e| Error::data(format!("{source}:{line}: {e}")))?;
            let code: u8 = rec[code_i]
                .parse()
                .map_err(|_| Error::data(format!("{source}:{line}: bad transformation code {:?}", &rec[code_i])))?;
            let sizes = size_cols
                .iter()
                .filter(|(_, i)| matches!(rec.get(*i), Some("1") | Some("x") | Some("X") | Some("true")))
                .map(|(s, _)| *s)
                .collect();
            series.push(ManifestEntry {
                name: rec[name_i].to_string(),
                code: TransformCode::new(code).map_err(|e| Error::data(format!("{source}:{line}: {e}")))?,
                sizes,
            });
        }
        Ok(Manifest { series })
    }

    /// Series in manifest order, optionally restricted to one model size.
    pub fn names(&self, size: Option<ModelSize>) -> Vec<String> {
        self.series
            .iter()
            .filter(|e| size.is_none_or(|s| e.sizes.contains(&s)))
            .map(|e| e.name.clone())
            .collect()
    }

    /// Transform every selected series and align them on the common sample.
    pub fn transform_panel(&self, raw: &Panel, size: Option<ModelSize>) -> Result<Panel> {
        let entries: Vec<&ManifestEntry> = self
            .series
            .iter()
            .filter(|e| size.is_none_or(|s| e.sizes.contains(&s)))
            .collect();
        if entries.is_empty() {
            return Err(Error::usage("no series selected from the manifest"));
        }
        let drop = entries.iter().map(|e| e.code.n_dropped()).max().unwrap_or(0);
        let t_len = raw.data.nrows();
        if t_len <= drop {
            return Err(Error::data("too few observations for the requested transformations"));
        }
        let n_out = t_len - drop;
        let mut data = DMatrix::zeros(n_out, entries.len());
        for (j, e) in entries.iter().enumerate() {
            let col = raw
                .column(&e.name)
                .ok_or_else(|| Error::data(format!("series {} from the manifest is not in the data", e.name)))?;
            let tr = apply_transform(&col, e.code, &e.name)?;
            let offset = tr.len() - n_out;
            for t in 0..n_out {
                data[(t, j)] = tr[offset + t];
            }
        }
        Panel::new(
            raw.dates[drop..].to_vec(),
            entries.iter().map(|e| e.name.clone()).collect(),
            data,
        )
    }
}
