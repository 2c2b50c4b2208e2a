//! JSON persistence for fitted pencils.

use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use specreg_core::{BlockSymMatrix, Dataset, Pencil};

use crate::error::{Error, Result};

/// Schema version written by this crate.
pub const MODEL_FORMAT_VERSION: &str = "1";

/// Asymmetry tolerated by the reader before a block is rejected.
pub const SYMMETRY_TOL: f64 = 1e-9;

/// Provenance of the data a model was fit on.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetProvenance {
    pub source: String,
    pub description: String,
    pub seed: Option<u64>,
    pub n: usize,
    pub dropped_rows: usize,
    pub normalized: bool,
}

impl DatasetProvenance {
    pub fn of(ds: &Dataset) -> Self {
        DatasetProvenance {
            source: ds.meta.source.clone(),
            description: ds.meta.description.clone(),
            seed: ds.meta.seed,
            n: ds.n(),
            dropped_rows: ds.meta.dropped_rows,
            normalized: ds.meta.normalized,
        }
    }
}

/// Free-form envelope fields.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub created_by: String,
    pub seed: Option<u64>,
    pub train_rmse: Option<f64>,
    #[serde(default)]
    pub dataset: DatasetProvenance,
    /// Names of the covariate columns, in slope order.
    #[serde(default)]
    pub x_columns: Vec<String>,
}

/// On-disk model: `matrices` holds `A₁ … A_d` followed by the offset `B`
/// unless homogeneous; each matrix is a list of `m/k` blocks and each block
/// a list of `k` rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: String,
    pub d: usize,
    pub m: usize,
    pub k: usize,
    pub homogeneous: bool,
    pub matrices: Vec<Vec<Vec<Vec<f64>>>>,
    pub meta: ModelMeta,
}

fn blocks_of(mat: &BlockSymMatrix) -> Vec<Vec<Vec<f64>>> {
    let k = mat.k();
    (0..mat.n_blocks())
        .map(|b| mat.block(b).chunks(k).map(<[f64]>::to_vec).collect())
        .collect()
}

impl ModelFile {
    /// Envelope for `pencil`.
    pub fn from_pencil(pencil: &Pencil, meta: ModelMeta) -> Self {
        ModelFile {
            format_version: MODEL_FORMAT_VERSION.to_string(),
            d: pencil.d(),
            m: pencil.m(),
            k: pencil.k(),
            homogeneous: pencil.is_homogeneous(),
            matrices: pencil.matrices().map(blocks_of).collect(),
            meta,
        }
    }

    /// Validates shapes and symmetry and rebuilds the pencil. Blocks within
    /// [`SYMMETRY_TOL`] of symmetric are symmetrized.
    pub fn to_pencil(&self) -> Result<Pencil> {
        let bad = |msg: String| Error::ModelFile(msg);
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(bad(format!("unsupported format_version `{}`", self.format_version)));
        }
        let (d, m, k) = (self.d, self.m, self.k);
        if m == 0 || k == 0 || m % k != 0 {
            return Err(bad(format!("block size k = {k} must divide m = {m}")));
        }
        let slots = d + usize::from(!self.homogeneous);
        if slots == 0 {
            return Err(bad("a homogeneous model needs d ≥ 1".to_string()));
        }
        if self.matrices.len() != slots {
            return Err(bad(format!("expected {slots} matrices, found {}", self.matrices.len())));
        }
        let mut mats = Vec::with_capacity(slots);
        for (j, blocks) in self.matrices.iter().enumerate() {
            if blocks.len() != m / k {
                return Err(bad(format!("matrix {j}: expected {} blocks, found {}", m / k, blocks.len())));
            }
            let mut data = Vec::with_capacity(m * k);
            for (b, rows) in blocks.iter().enumerate() {
                if rows.len() != k || rows.iter().any(|r| r.len() != k) {
                    return Err(bad(format!("matrix {j}, block {b}: not {k}×{k}")));
                }
                for r in 0..k {
                    for c in 0..k {
                        let (v, w) = (rows[r][c], rows[c][r]);
                        if !v.is_finite() {
                            return Err(bad(format!("matrix {j}, block {b}: non-finite entry")));
                        }
                        if (v - w).abs() > SYMMETRY_TOL {
                            return Err(bad(format!(
                                "matrix {j}, block {b}: entry ({r},{c}) differs from ({c},{r}) by {}",
                                (v - w).abs()
                            )));
                        }
                    }
                }
                data.extend(rows.iter().flatten());
            }
            mats.push(BlockSymMatrix::symmetrized(m, k, data)?);
        }
        let offset = if self.homogeneous { None } else { mats.pop() };
        Ok(Pencil::new(mats, offset)?)
    }

    /// Serializes with every number at 17 significant digits.
    pub fn to_json(&self) -> Result<String> {
        let mut buf = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, PreciseFormatter::default());
        self.serialize(&mut ser)?;
        buf.push(b'\n');
        Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::ModelFile(e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Pretty-printing JSON formatter that writes floats as `{:.16e}`.
#[derive(Default)]
pub struct PreciseFormatter {
    inner: PrettyFormatter<'static>,
}

impl Formatter for PreciseFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(w, "{value:.16e}")
        } else {
            w.write_all(b"null")
        }
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}
