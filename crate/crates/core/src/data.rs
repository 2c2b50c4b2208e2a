//! Datasets, synthetic generators, splitting and covariate transforms.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::math::{exp, floor, ln, powf, sqrt};
use crate::{Error, Pencil, Result};

/// Exponent used by the `expmodel` generator unless overridden.
pub const DEFAULT_EXP_B: f64 = 1.1394;

/// Provenance attached to a [`Dataset`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetMeta {
    /// Short tag naming the source (`l2norm`, `csv`, …).
    pub source: String,
    /// Generator parameters or file provenance, free-form.
    pub description: String,
    /// Seed used to produce the data, when random.
    pub seed: Option<u64>,
    /// Rows dropped on ingestion because a transformed value was not finite.
    pub dropped_rows: usize,
    /// Rows were rescaled onto the unit sphere.
    pub normalized: bool,
}

/// `n` covariate/response pairs. Covariates are stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    d: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    /// Provenance.
    pub meta: DatasetMeta,
}

impl Dataset {
    /// Builds a dataset from row-major covariates `x` (`n × d`) and responses.
    pub fn new(d: usize, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if x.len() != y.len() * d {
            return Err(Error::DimensionMismatch {
                what: "covariate entries",
                expected: y.len() * d,
                found: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("covariates"));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("responses"));
        }
        Ok(Dataset {
            d,
            x,
            y,
            meta: DatasetMeta::default(),
        })
    }

    /// Same as [`Dataset::new`] with provenance attached.
    pub fn with_meta(mut self, meta: DatasetMeta) -> Self {
        self.meta = meta;
        self
    }

    /// Sample count.
    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Covariate dimension.
    pub fn d(&self) -> usize {
        self.d
    }

    /// Covariates of sample `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    /// Iterator over covariate rows.
    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.n()).map(move |i| self.row(i))
    }

    /// Row-major covariates.
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Responses.
    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// The samples at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let mut x = Vec::with_capacity(indices.len() * self.d);
        let mut y = Vec::with_capacity(indices.len());
        for &i in indices {
            x.extend_from_slice(self.row(i));
            y.push(self.y[i]);
        }
        Ok(Dataset::new(self.d, x, y)?.with_meta(self.meta.clone()))
    }
}

/// Synthetic model families.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    /// `y = ‖x‖₂ + ε`, `x` uniform on `[−1, 1]²`.
    L2Norm,
    /// `y = exp(b·x) + ε`, `x ~ N(0, 1)`.
    ExpModel {
        /// Exponent.
        b: f64,
    },
    /// Log-transformed circuit power model over a box of supply and threshold voltages.
    Circuit {
        /// Range of the supply voltage `V_dd`.
        vdd: (f64, f64),
        /// Range of the threshold voltage `V_th`.
        vth: (f64, f64),
    },
    /// `y = f(x) + ε` with `f` a given pencil and `x ~ N(0, I_d)`.
    CustomPencil(Pencil),
}

impl Model {
    /// The circuit model on its standard domain.
    pub fn circuit() -> Self {
        Model::Circuit {
            vdd: (1.0, 2.0),
            vth: (0.2, 0.4),
        }
    }

    /// Short tag used in files and on the command line.
    pub fn tag(&self) -> &'static str {
        match self {
            Model::L2Norm => "l2norm",
            Model::ExpModel { .. } => "expmodel",
            Model::Circuit { .. } => "circuit",
            Model::CustomPencil(_) => "custom_pencil",
        }
    }

    /// Covariate dimension.
    pub fn dim(&self) -> usize {
        match self {
            Model::L2Norm | Model::Circuit { .. } => 2,
            Model::ExpModel { .. } => 1,
            Model::CustomPencil(p) => p.d(),
        }
    }

    /// Noise-free response at covariates `x`.
    pub fn truth(&self, x: &[f64]) -> Result<f64> {
        match self {
            Model::L2Norm => Ok(sqrt(x.iter().map(|v| v * v).sum())),
            Model::ExpModel { b } => Ok(exp(b * x[0])),
            Model::Circuit { .. } => Ok(ln(circuit_power(exp(x[0]), exp(x[1])))),
            Model::CustomPencil(p) => p.eval(x),
        }
    }

    fn draw_covariates(&self, rng: &mut ChaCha8Rng, out: &mut Vec<f64>) {
        match self {
            Model::L2Norm => {
                for _ in 0..2 {
                    out.push(rng.random_range(-1.0..=1.0));
                }
            }
            Model::ExpModel { .. } => out.push(StandardNormal.sample(rng)),
            Model::Circuit { vdd, vth } => {
                let v_dd: f64 = rng.random_range(vdd.0..=vdd.1);
                let v_th: f64 = rng.random_range(vth.0..=vth.1);
                out.push(ln(v_dd));
                out.push(ln(v_th));
            }
            Model::CustomPencil(p) => {
                for _ in 0..p.d() {
                    out.push(StandardNormal.sample(rng));
                }
            }
        }
    }
}

impl FromStr for Model {
    type Err = Error;

    /// Parses the pencil-free tags; `custom_pencil` needs a pencil and is
    /// constructed directly.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l2norm" => Ok(Model::L2Norm),
            "expmodel" => Ok(Model::ExpModel { b: DEFAULT_EXP_B }),
            "circuit" => Ok(Model::circuit()),
            other => Err(Error::UnknownTag(other.to_string())),
        }
    }
}

/// Dissipated power for supply voltage `vdd` and threshold voltage `vth`.
pub fn circuit_power(vdd: f64, vth: f64) -> f64 {
    vdd * vdd + 30.0 * vdd * exp(-(vth - 0.06 * vdd) / 0.039)
}

/// What to generate.
#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    /// Model family.
    pub model: Model,
    /// Sample count.
    pub n: usize,
    /// Standard deviation of the additive Gaussian noise.
    pub sigma: f64,
    /// RNG seed.
    pub seed: u64,
}

/// Draws a synthetic dataset.
///
/// Covariates are drawn first for each sample, then its noise term, from a
/// single ChaCha8 stream seeded by `spec.seed`.
pub fn generate(spec: &GenSpec) -> Result<Dataset> {
    if spec.n == 0 {
        return Err(Error::EmptyDataset);
    }
    if !(spec.sigma >= 0.0) || !spec.sigma.is_finite() {
        return Err(Error::InvalidConfig("sigma must be finite and nonnegative"));
    }
    if let Model::Circuit { vdd, vth } = &spec.model {
        if !(vdd.0 > 0.0 && vdd.0 <= vdd.1 && vth.0 > 0.0 && vth.0 <= vth.1) {
            return Err(Error::InvalidConfig("circuit voltage ranges must be positive and ordered"));
        }
    }
    let noise = Normal::new(0.0, spec.sigma).map_err(|_| Error::InvalidConfig("sigma"))?;
    let d = spec.model.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut x = Vec::with_capacity(spec.n * d);
    let mut y = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let start = x.len();
        spec.model.draw_covariates(&mut rng, &mut x);
        let f = spec.model.truth(&x[start..]).map_err(|e| e.at_sample(i))?;
        let eps = if spec.sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
        y.push(f + eps);
    }
    let description = match &spec.model {
        Model::ExpModel { b } => format!("n={} sigma={} b={}", spec.n, spec.sigma, b),
        Model::Circuit { vdd, vth } => format!(
            "n={} sigma={} vdd=[{},{}] vth=[{},{}]",
            spec.n, spec.sigma, vdd.0, vdd.1, vth.0, vth.1
        ),
        Model::CustomPencil(p) => format!(
            "n={} sigma={} d={} m={} k={}",
            spec.n,
            spec.sigma,
            p.d(),
            p.m(),
            p.k()
        ),
        Model::L2Norm => format!("n={} sigma={}", spec.n, spec.sigma),
    };
    Ok(Dataset::new(d, x, y)?.with_meta(DatasetMeta {
        source: spec.model.tag().to_string(),
        description,
        seed: Some(spec.seed),
        ..DatasetMeta::default()
    }))
}

/// Sizes `(train, test)` of a hold-out split: the test side gets
/// `⌊n·f⌋` samples, so the training side has `⌈n·(1 − f)⌉`.
pub fn split_sizes(n: usize, test_fraction: f64) -> Result<(usize, usize)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::DegenerateSplit { n, test_fraction });
    }
    let test = floor(n as f64 * test_fraction + 1e-9) as usize;
    let train = n - test.min(n);
    if test == 0 || train == 0 {
        return Err(Error::DegenerateSplit { n, test_fraction });
    }
    Ok((train, test))
}

/// Uniformly random disjoint train/test split, deterministic in `seed`.
pub fn split(dataset: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let n = dataset.n();
    let (train_n, _) = split_sizes(n, test_fraction)?;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let (train_idx, test_idx) = order.split_at(train_n);
    Ok((dataset.subset(train_idx)?, dataset.subset(test_idx)?))
}

/// Rescales every covariate row onto the unit sphere.
///
/// Rows whose norm already rounds to one are left untouched, so the map is
/// exactly idempotent.
pub fn normalize_directions(dataset: &Dataset) -> Result<Dataset> {
    let d = dataset.d();
    let mut x = dataset.x().to_vec();
    for i in 0..dataset.n() {
        let row = &mut x[i * d..(i + 1) * d];
        let norm = sqrt(row.iter().map(|v| v * v).sum());
        if norm == 0.0 {
            return Err(Error::ZeroDirection { index: i });
        }
        if (norm - 1.0).abs() <= 4.0 * f64::EPSILON {
            continue;
        }
        row.iter_mut().for_each(|v| *v /= norm);
    }
    let mut meta = dataset.meta.clone();
    meta.normalized = true;
    Ok(Dataset::new(d, x, dataset.y().to_vec())?.with_meta(meta))
}

/// Per-column map applied on ingestion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transform {
    /// `v`
    Identity,
    /// `ln v`
    Log,
    /// `cᵛ`
    ExpBase(f64),
    /// `a·v + b`
    Affine(f64, f64),
}

impl Transform {
    /// Applies the transform. Out-of-domain inputs give NaN or infinity.
    pub fn apply(&self, v: f64) -> f64 {
        match *self {
            Transform::Identity => v,
            Transform::Log => ln(v),
            Transform::ExpBase(c) => powf(c, v),
            Transform::Affine(a, b) => a * v + b,
        }
    }
}

impl FromStr for Transform {
    type Err = Error;

    /// Accepts `identity`, `log`, `expbase:<c>` and `affine:<a>,<b>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::UnknownTag(s.to_string());
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a)),
            None => (s.trim(), None),
        };
        match (name, arg) {
            ("identity", None) => Ok(Transform::Identity),
            ("log", None) => Ok(Transform::Log),
            ("expbase", Some(a)) => Ok(Transform::ExpBase(num(a)?)),
            ("affine", Some(a)) => {
                let (p, q) = a.split_once(',').ok_or_else(bad)?;
                Ok(Transform::Affine(num(p)?, num(q)?))
            }
            _ => Err(bad()),
        }
    }
}

/// Applies per-column transforms to raw rows and drops rows that become
/// non-finite. Returns the dataset and the number of dropped rows.
///
/// `raw_x` is row-major with `d` columns; `x_transforms` has length `d`.
pub fn transformed_dataset(
    d: usize,
    raw_x: &[f64],
    raw_y: &[f64],
    x_transforms: &[Transform],
    y_transform: Transform,
) -> Result<Dataset> {
    if x_transforms.len() != d {
        return Err(Error::DimensionMismatch {
            what: "transform count",
            expected: d,
            found: x_transforms.len(),
        });
    }
    let mut x = Vec::with_capacity(raw_x.len());
    let mut y = Vec::with_capacity(raw_y.len());
    let mut row = vec![0.0; d];
    let mut dropped = 0;
    for (i, &yv) in raw_y.iter().enumerate() {
        for j in 0..d {
            row[j] = x_transforms[j].apply(raw_x[i * d + j]);
        }
        let ty = y_transform.apply(yv);
        if ty.is_finite() && row.iter().all(|v| v.is_finite()) {
            x.extend_from_slice(&row);
            y.push(ty);
        } else {
            dropped += 1;
        }
    }
    let mut ds = Dataset::new(d, x, y)?;
    ds.meta.dropped_rows = dropped;
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circuit_reference_point() {
        // 1 + 30·exp(−0.14/0.039), evaluated independently in double precision
        let p = circuit_power(1.0, 0.2);
        assert!((p - 1.828162234766503).abs() < 1e-12, "{p}");
        assert!((ln(p) - 0.6033112189661878).abs() < 1e-12);
    }

    #[test]
    fn noiseless_generators_hit_truth() {
        let ds = generate(&GenSpec {
            model: Model::L2Norm,
            n: 50,
            sigma: 0.0,
            seed: 3,
        })
        .unwrap();
        for (x, y) in ds.rows().zip(ds.y()) {
            assert_eq!(*y, sqrt(x[0] * x[0] + x[1] * x[1]));
            assert!(x.iter().all(|v| (-1.0..=1.0).contains(v)));
        }
        assert_eq!(Model::ExpModel { b: DEFAULT_EXP_B }.truth(&[0.0]).unwrap(), 1.0);
    }

    #[test]
    fn circuit_generator_is_reproducible_from_formula() {
        let ds = generate(&GenSpec {
            model: Model::circuit(),
            n: 100,
            sigma: 0.0,
            seed: 11,
        })
        .unwrap();
        for (x, y) in ds.rows().zip(ds.y()) {
            let (vdd, vth) = (exp(x[0]), exp(x[1]));
            assert!((1.0..=2.0).contains(&vdd) || (vdd - 2.0).abs() < 1e-12);
            assert!((0.2 - 1e-12..=0.4 + 1e-12).contains(&vth));
            assert!((ln(circuit_power(vdd, vth)) - y).abs() < 1e-12);
        }
    }

    #[test]
    fn generate_rejects_bad_specs() {
        let spec = GenSpec {
            model: Model::L2Norm,
            n: 0,
            sigma: 0.1,
            seed: 0,
        };
        assert_eq!(generate(&spec).unwrap_err(), Error::EmptyDataset);
        assert!(matches!("plane".parse::<Model>(), Err(Error::UnknownTag(_))));
    }

    #[test]
    fn split_sizes_follow_ceiling_rule() {
        assert_eq!(split_sizes(10, 0.2).unwrap(), (8, 2));
        assert_eq!(split_sizes(25361, 0.2).unwrap(), (20289, 5072));
        assert_eq!(split_sizes(200, 0.2).unwrap(), (160, 40));
        assert!(split_sizes(1, 0.2).is_err());
        assert!(split_sizes(10, 0.0).is_err());
        assert!(split_sizes(10, 1.0).is_err());
    }

    #[test]
    fn split_is_deterministic_and_disjoint() {
        let n = 1000;
        let x: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let ds = Dataset::new(1, x.clone(), x).unwrap();
        let (a1, b1) = split(&ds, 0.2, 5).unwrap();
        let (a2, b2) = split(&ds, 0.2, 5).unwrap();
        assert_eq!((&a1, &b1), (&a2, &b2));
        let (a3, _) = split(&ds, 0.2, 6).unwrap();
        assert_ne!(a1, a3);
        let mut all: Vec<f64> = a1.y().iter().chain(b1.y()).cloned().collect();
        all.sort_by(|p, q| p.partial_cmp(q).unwrap());
        assert_eq!(all, (0..n).map(|i| i as f64).collect::<Vec<_>>());
    }

    #[test]
    fn normalization() {
        let ds = Dataset::new(2, vec![3.0, 4.0, 0.0, 1.0], vec![1.0, 2.0]).unwrap();
        let once = normalize_directions(&ds).unwrap();
        assert_eq!(once.row(0), &[0.6, 0.8]);
        assert_eq!(once.row(1), &[0.0, 1.0]);
        assert_eq!(once.y(), ds.y());
        assert!(once.meta.normalized);
        assert_eq!(normalize_directions(&once).unwrap().x(), once.x());
        let zero = Dataset::new(2, vec![1.0, 0.0, 0.0, 0.0], vec![1.0, 2.0]).unwrap();
        assert_eq!(normalize_directions(&zero).unwrap_err(), Error::ZeroDirection { index: 1 });
    }

    #[test]
    fn transforms() {
        let t: Transform = "expbase:1.2".parse().unwrap();
        assert!((t.apply(12.0) - 8.916100448256).abs() < 1e-9);
        assert_eq!("log".parse::<Transform>().unwrap(), Transform::Log);
        assert_eq!("affine:2,-1".parse::<Transform>().unwrap().apply(3.0), 5.0);
        assert!("expbase".parse::<Transform>().is_err());
        assert!("sqrt".parse::<Transform>().is_err());
    }

    #[test]
    fn transformed_rows_drop_non_finite() {
        let ds = transformed_dataset(
            1,
            &[1.0, -1.0, core::f64::consts::E],
            &[1.0, 2.0, 3.0],
            &[Transform::Log],
            Transform::Identity,
        )
        .unwrap();
        assert_eq!(ds.n(), 2);
        assert_eq!(ds.meta.dropped_rows, 1);
        assert!((ds.row(1)[0] - 1.0).abs() < 1e-15);
    }
}
