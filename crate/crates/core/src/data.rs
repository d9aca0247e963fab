//! Synthetic regression instances, CSV/JSON files and row splits.
//!
//! Synthetic designs have i.i.d. rows drawn from `N(0, Sigma)` with unit variances and
//! all correlations 0.5. A row is sampled as `sqrt(0.5) * (z0 * 1 + z)` with a shared
//! scalar `z0` and an independent vector `z`, which has exactly that covariance.
//!
//! Randomness comes from ChaCha20 seeded with the spec's seed. The design uses stream 0
//! and the noise uses stream 1, so changing the noise law leaves `X` untouched.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Cauchy, Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::Covariance;
use crate::scalar::Scalar;
use crate::solution::SolutionRecord;

/// Correlation between any two synthetic design columns.
pub const DESIGN_CORRELATION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pattern {
    /// `(sqrt 3, sqrt 3, sqrt 3, 0, ...)`
    Sparse3,
    /// Staircase of 25 coefficients from 2 down to 0.25.
    Sparse25,
}

const STAIRCASE: [f64; 25] = [
    2.0, 2.0, 2.0, 2.0, 1.75, 1.75, 1.75, 1.5, 1.5, 1.5, 1.25, 1.25, 1.25, 1.0, 1.0, 1.0, 0.75,
    0.75, 0.75, 0.5, 0.5, 0.5, 0.25, 0.25, 0.25,
];

impl Pattern {
    pub const ALL: [Pattern; 2] = [Pattern::Sparse3, Pattern::Sparse25];

    pub fn support_size(self) -> usize {
        match self {
            Pattern::Sparse3 => 3,
            Pattern::Sparse25 => 25,
        }
    }

    pub fn beta_true(self, p: usize) -> Result<Array1<f64>> {
        if p < self.support_size() {
            return Err(Error::input(format!(
                "pattern {self} needs p >= {}, got {p}",
                self.support_size()
            )));
        }
        let mut beta = Array1::zeros(p);
        match self {
            Pattern::Sparse3 => beta.slice_mut(ndarray::s![..3]).fill(3f64.sqrt()),
            Pattern::Sparse25 => {
                for (i, v) in STAIRCASE.iter().enumerate() {
                    beta[i] = *v;
                }
            }
        }
        Ok(beta)
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pattern::Sparse3 => "sparse3",
            Pattern::Sparse25 => "sparse25",
        })
    }
}

impl FromStr for Pattern {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sparse3" => Ok(Pattern::Sparse3),
            "sparse25" => Ok(Pattern::Sparse25),
            other => Err(Error::input(format!("unknown pattern '{other}' (expected sparse3 or sparse25)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Noise {
    Normal { variance: f64 },
    /// `0.95 N(0, 1) + 0.05 N(0, 100)`
    Mixture,
    /// Student t with 4 degrees of freedom.
    StudentT4,
    /// Standard Cauchy.
    Cauchy,
}

impl Noise {
    /// The six laws of the benchmark matrix, in table order.
    pub const ALL: [Noise; 6] = [
        Noise::Normal { variance: 0.25 },
        Noise::Normal { variance: 1.0 },
        Noise::Normal { variance: 2.0 },
        Noise::Mixture,
        Noise::StudentT4,
        Noise::Cauchy,
    ];

    fn sample<R: Rng>(self, rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        match self {
            Noise::Normal { variance } => variance.sqrt() * z,
            Noise::Mixture => {
                // component chosen first, then the normal draw is scaled
                let heavy = rng.random_bool(0.05);
                if heavy {
                    10.0 * z
                } else {
                    z
                }
            }
            Noise::StudentT4 => StudentT::new(4.0).expect("valid dof").sample(rng),
            Noise::Cauchy => Cauchy::new(0.0, 1.0).expect("valid scale").sample(rng),
        }
    }
}

impl fmt::Display for Noise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Noise::Normal { variance } => write!(f, "normal{variance}"),
            Noise::Mixture => f.write_str("mixture"),
            Noise::StudentT4 => f.write_str("t4"),
            Noise::Cauchy => f.write_str("cauchy"),
        }
    }
}

impl FromStr for Noise {
    type Err = Error;
    /// Accepts `normal<var>` (e.g. `normal0.25`), `mixture`, `t4` and `cauchy`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        match lower.as_str() {
            "mixture" => return Ok(Noise::Mixture),
            "t4" | "student_t4" | "studentt4" => return Ok(Noise::StudentT4),
            "cauchy" => return Ok(Noise::Cauchy),
            _ => {}
        }
        if let Some(rest) = lower.strip_prefix("normal") {
            let var = rest.trim_start_matches([':', '(']).trim_end_matches(')');
            if let Ok(v) = var.parse::<f64>() {
                if v > 0.0 && v.is_finite() {
                    return Ok(Noise::Normal { variance: v });
                }
            }
        }
        Err(Error::input(format!(
            "unknown noise '{s}' (expected normal<variance>, mixture, t4 or cauchy)"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub p: usize,
    pub pattern: Pattern,
    pub noise: Noise,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::input(format!("need n >= 2, got {}", self.n)));
        }
        if self.p < self.pattern.support_size() {
            return Err(Error::input(format!(
                "pattern {} needs p >= {}, got {}",
                self.pattern,
                self.pattern.support_size(),
                self.p
            )));
        }
        if let Noise::Normal { variance } = self.noise {
            if !(variance > 0.0 && variance.is_finite()) {
                return Err(Error::input("normal noise variance must be positive"));
            }
        }
        Ok(())
    }

    /// Short identifier used as the problem name in tables.
    pub fn name(&self) -> String {
        format!("{}-{}-s{}", self.pattern, self.noise, self.seed)
    }

    pub fn covariance(&self) -> Covariance {
        Covariance::CompoundSymmetry(DESIGN_CORRELATION)
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData<F> {
    pub x: Array2<F>,
    pub b: Array1<F>,
    pub beta_true: Array1<F>,
}

pub fn gen_synthetic<F: Scalar>(spec: &SyntheticSpec) -> Result<SyntheticData<F>> {
    spec.validate()?;
    let (n, p) = (spec.n, spec.p);
    let beta = spec.pattern.beta_true(p)?;

    let mut design_rng = ChaCha20Rng::seed_from_u64(spec.seed);
    design_rng.set_stream(0);
    let mut noise_rng = design_rng.clone();
    noise_rng.set_stream(1);

    let scale = DESIGN_CORRELATION.sqrt();
    let mut x = Array2::<f64>::zeros((n, p));
    for mut row in x.rows_mut() {
        let z0: f64 = StandardNormal.sample(&mut design_rng);
        for v in row.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut design_rng);
            *v = scale * z0 + (1.0 - DESIGN_CORRELATION).sqrt() * z;
        }
    }
    let signal = x.dot(&beta);
    let b = signal.mapv(|s| s + spec.noise.sample(&mut noise_rng));
    Ok(SyntheticData {
        x: x.mapv(F::lit),
        b: b.mapv(F::lit),
        beta_true: beta.mapv(F::lit),
    })
}

/// Reads a design and response from CSV with the response in the last column.
pub fn load_matrix_csv<F: Scalar>(path: impl AsRef<Path>, header: bool) -> Result<(Array2<F>, Array1<F>)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_matrix_csv(BufReader::new(file), header)
}

pub fn read_matrix_csv<F: Scalar, R: Read>(reader: R, header: bool) -> Result<(Array2<F>, Array1<F>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(header)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut values: Vec<f64> = Vec::new();
    let mut width: Option<usize> = None;
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::Parse {
                line,
                msg: e.to_string(),
            }
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        match width {
            None if rec.len() < 2 => {
                return Err(Error::input(format!(
                    "line {line}: need at least one feature column and the response"
                )))
            }
            None => width = Some(rec.len()),
            Some(w) if w != rec.len() => {
                return Err(Error::input(format!(
                    "line {line}: expected {w} columns, found {}",
                    rec.len()
                )))
            }
            Some(_) => {}
        }
        for field in rec.iter() {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("'{field}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    msg: format!("non-finite value '{field}'"),
                });
            }
            values.push(v);
        }
        rows += 1;
    }
    let Some(w) = width else {
        return Err(Error::Parse {
            line: 1,
            msg: "no data rows".into(),
        });
    };
    let all = Array2::from_shape_vec((rows, w), values).expect("row lengths checked");
    let x = all.slice(ndarray::s![.., ..w - 1]).mapv(F::lit);
    let b = all.column(w - 1).mapv(F::lit);
    Ok((x, b))
}

/// Writes `[X | b]` as CSV with 17 significant digits, so values reload bit for bit.
pub fn save_matrix_csv<F: Scalar>(path: impl AsRef<Path>, x: &Array2<F>, b: &Array1<F>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_matrix_csv(BufWriter::new(file), x, b).map_err(|e| Error::io(path, e))
}

pub fn write_matrix_csv<F: Scalar, W: Write>(mut w: W, x: &Array2<F>, b: &Array1<F>) -> std::io::Result<()> {
    assert_eq!(x.nrows(), b.len(), "design and response row counts differ");
    let mut line = String::new();
    for (row, bi) in x.rows().into_iter().zip(b.iter()) {
        line.clear();
        for v in row.iter().chain(std::iter::once(bi)) {
            if !line.is_empty() {
                line.push(',');
            }
            line.push_str(&format!("{:.16e}", v.as_f64()));
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    w.flush()
}

pub fn save_solution_json(path: impl AsRef<Path>, record: &SolutionRecord) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, record)?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn load_solution_json(path: impl AsRef<Path>) -> Result<SolutionRecord> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

/// Rows of a data set selected by a split.
#[derive(Debug, Clone)]
pub struct Subset<F> {
    pub x: Array2<F>,
    pub b: Array1<F>,
    pub rows: Vec<usize>,
}

impl<F: Scalar> Subset<F> {
    fn take(x: &Array2<F>, b: &Array1<F>, mut rows: Vec<usize>) -> Self {
        rows.sort_unstable();
        Subset {
            x: x.select(Axis(0), &rows),
            b: b.select(Axis(0), &rows),
            rows,
        }
    }
}

/// Shuffled split with `round(fraction * n)` training rows.
pub fn split<F: Scalar>(
    x: &Array2<F>,
    b: &Array1<F>,
    fraction: f64,
    seed: u64,
) -> Result<(Subset<F>, Subset<F>)> {
    let n = x.nrows();
    if b.len() != n {
        return Err(Error::input("design and response row counts differ"));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::param(format!("split fraction must lie in (0, 1), got {fraction}")));
    }
    let n_train = (fraction * n as f64).round() as usize;
    if n_train < 2 || n - n_train < 2 {
        return Err(Error::input(format!(
            "split of {n} rows at {fraction} leaves fewer than 2 rows on one side"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha20Rng::seed_from_u64(seed));
    let val = idx.split_off(n_train);
    Ok((Subset::take(x, b, idx), Subset::take(x, b, val)))
}

/// `(train, validation)` row sets of a shuffled K-fold partition.
pub fn kfold_indices(n: usize, folds: usize, seed: u64) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    if folds < 2 {
        return Err(Error::param("need at least 2 folds"));
    }
    if n / folds < 2 || n - n.div_ceil(folds) < 2 {
        return Err(Error::input(format!("{n} rows are too few for {folds} folds")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha20Rng::seed_from_u64(seed));
    let mut out = Vec::with_capacity(folds);
    for f in 0..folds {
        let lo = f * n / folds;
        let hi = (f + 1) * n / folds;
        let val: Vec<usize> = idx[lo..hi].to_vec();
        let train: Vec<usize> = idx[..lo].iter().chain(&idx[hi..]).copied().collect();
        out.push((train, val));
    }
    Ok(out)
}

pub fn select_rows<F: Scalar>(x: &Array2<F>, b: &Array1<F>, rows: &[usize]) -> Subset<F> {
    Subset::take(x, b, rows.to_vec())
}

/// Scales every nonzero column to unit root-mean-square; returns the divisors used.
pub fn scale_columns<F: Scalar>(x: &mut Array2<F>) -> Array1<F> {
    let n = F::lit(x.nrows() as f64);
    let mut scales = Array1::from_elem(x.ncols(), F::one());
    for (j, mut col) in x.columns_mut().into_iter().enumerate() {
        let rms = (col.dot(&col) / n).sqrt();
        if rms > F::zero() {
            col.mapv_inplace(|v| v / rms);
            scales[j] = rms;
        }
    }
    scales
}
