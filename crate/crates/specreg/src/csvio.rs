//! CSV ingestion and emission.

use std::collections::BTreeMap;
use std::path::Path;

use specreg_core::data::transformed_dataset;
use specreg_core::{Dataset, DatasetMeta, Transform};

use crate::error::{Error, Result};

/// Which columns to read and how to transform them.
#[derive(Debug, Clone, Default)]
pub struct ColumnSpec {
    /// Covariate columns, in order. `None` means every column except the response.
    pub x_columns: Option<Vec<String>>,
    /// Response column name.
    pub y_column: String,
    /// Per-column transforms keyed by column name; absent columns use identity.
    pub transforms: BTreeMap<String, Transform>,
}

impl ColumnSpec {
    /// All non-response columns as covariates, response `y`, no transforms.
    pub fn new(y_column: impl Into<String>) -> Self {
        ColumnSpec {
            x_columns: None,
            y_column: y_column.into(),
            transforms: BTreeMap::new(),
        }
    }
}

/// Parses `"col=expbase:1.2;other=log"` into a transform map.
pub fn parse_transforms(spec: &str) -> Result<BTreeMap<String, Transform>> {
    let mut out = BTreeMap::new();
    for item in spec.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let (col, t) = item
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("transform `{item}` is not of the form column=transform")))?;
        let t: Transform = t
            .trim()
            .parse()
            .map_err(|_| Error::Usage(format!("unknown transform `{}` for column `{}`", t.trim(), col.trim())))?;
        out.insert(col.trim().to_string(), t);
    }
    Ok(out)
}

/// Reads a header-first CSV into a dataset.
///
/// Errors name the file, the 1-based line and the column of the offending
/// cell. Rows whose transformed values are not finite are dropped and
/// counted in `meta.dropped_rows`.
pub fn load_csv(path: &Path, spec: &ColumnSpec) -> Result<Dataset> {
    let table = Table::read(path)?;
    let shown = table.path.clone();
    let y_idx = table.column(&spec.y_column)?;
    let x_names: Vec<String> = match &spec.x_columns {
        Some(cols) => cols.clone(),
        None => table.headers.iter().filter(|h| **h != spec.y_column).cloned().collect(),
    };
    let x_idx = x_names.iter().map(|c| table.column(c)).collect::<Result<Vec<_>>>()?;
    for name in spec.transforms.keys() {
        if *name != spec.y_column && !x_names.contains(name) {
            return Err(Error::data(&shown, format!("transform names unused column `{name}`")));
        }
    }

    let d = x_idx.len();
    let mut raw_x = Vec::with_capacity(table.rows.len() * d);
    let mut raw_y = Vec::with_capacity(table.rows.len());
    for r in 0..table.rows.len() {
        for &j in &x_idx {
            raw_x.push(table.value(r, j)?);
        }
        raw_y.push(table.value(r, y_idx)?);
    }

    let tr = |name: &str| spec.transforms.get(name).copied().unwrap_or(Transform::Identity);
    let x_tr: Vec<Transform> = x_names.iter().map(|n| tr(n)).collect();
    let ds = transformed_dataset(d, &raw_x, &raw_y, &x_tr, tr(&spec.y_column)).map_err(|e| match e {
        specreg_core::Error::EmptyDataset => Error::data(&shown, "every row was dropped after transforms"),
        other => Error::Core(other),
    })?;
    let dropped = ds.meta.dropped_rows;
    let description = if spec.transforms.is_empty() {
        format!("x={} y={}", x_names.join(","), spec.y_column)
    } else {
        let t: Vec<String> = spec.transforms.iter().map(|(k, v)| format!("{k}={v:?}")).collect();
        format!("x={} y={} transforms={}", x_names.join(","), spec.y_column, t.join(";"))
    };
    Ok(ds.with_meta(DatasetMeta {
        source: shown,
        description,
        seed: None,
        dropped_rows: dropped,
        normalized: false,
    }))
}

/// Default covariate column names `x1 … xd`.
pub fn default_x_names(d: usize) -> Vec<String> {
    (1..=d).map(|j| format!("x{j}")).collect()
}

/// Writes `dataset` with header `x1,…,xd,y`. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_dataset(path: &Path, dataset: &Dataset) -> Result<()> {
    let mut header = default_x_names(dataset.d());
    header.push("y".to_string());
    write_rows(path, &header, dataset.rows().zip(dataset.y()).map(|(x, &y)| {
        let mut r = x.to_vec();
        r.push(y);
        r
    }))
}

/// Writes numeric rows under `header`.
pub fn write_rows<I>(path: &Path, header: &[String], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::data(path.display(), format!("{other:?}")),
        })?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// A CSV file held as text cells, for passing columns through unchanged.
#[derive(Debug, Clone)]
pub struct Table {
    pub path: String,
    pub headers: Vec<String>,
    /// Cells of each data row, with the 1-based line it came from.
    pub rows: Vec<(u64, Vec<String>)>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Table> {
        let shown = path.display().to_string();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(std::io::BufReader::new(file));
        let headers: Vec<String> = reader
            .headers()
            .map_err(|e| Error::data(&shown, format!("unreadable header: {e}")))?
            .iter()
            .map(str::to_string)
            .collect();
        if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
            return Err(Error::data(&shown, "empty file"));
        }
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::data(&shown, e.to_string()))?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            rows.push((line, record.iter().map(str::to_string).collect()));
        }
        if rows.is_empty() {
            return Err(Error::data(&shown, "no data rows"));
        }
        Ok(Table { path: shown, headers, rows })
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::data(&self.path, format!("missing column `{name}` (header: {})", self.headers.join(",")))
        })
    }

    /// Numeric value of row `r`, column `c`.
    pub fn value(&self, r: usize, c: usize) -> Result<f64> {
        let (line, cells) = &self.rows[r];
        let text = cells.get(c).ok_or_else(|| {
            Error::data(&self.path, format!("line {line}: missing value for column `{}`", self.headers[c]))
        })?;
        text.parse::<f64>().map_err(|_| {
            Error::data(
                &self.path,
                format!("line {line}, column `{}`: non-numeric value `{text}`", self.headers[c]),
            )
        })
    }
}
