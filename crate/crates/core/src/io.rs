//! File formats: angle tables (CSV), parameter and run configuration files
//! (JSON), and posterior draw directories (one CSV per parameter block).

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::circular::AngleVector;
use crate::copula::{ctpn_logpdf, ctpn_sample, CtpnParams};
use crate::dataset::Dataset;
use crate::diagnostics::{PosteriorDraws, Reference, SummaryRow};
use crate::error::{Error, Result};
use crate::gaussian::{CorrelationMatrix, CovarianceMatrix};
use crate::mcmc::{McmcConfig, PriorSpec};
use crate::model::ModelKind;
use crate::tpn::{tpn_logpdf, tpn_sample, TpnParams};
use crate::wishart::TiwPrior;

/// Column header of every draw file.
pub const DRAWS_HEADER: [&str; 3] = ["iteration", "param_name", "value"];
const MISSING_TOKEN: &str = "NA";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AngleUnit {
    #[default]
    Radians,
    Degrees,
}

impl AngleUnit {
    pub fn to_radians(self, x: f64) -> f64 {
        match self {
            AngleUnit::Radians => x,
            AngleUnit::Degrees => x.to_radians(),
        }
    }
}

impl FromStr for AngleUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "radians" | "rad" => Ok(AngleUnit::Radians),
            "degrees" | "deg" => Ok(AngleUnit::Degrees),
            other => Err(Error::domain(format!("unknown angle unit `{other}`"))),
        }
    }
}

fn parse_error(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line: line as usize,
        message: message.into(),
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => parse_error(path, line, format!("{other:?}")),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

/// Reads a table of angles with a header row. Empty cells and `NA` are
/// missing; observed cells are converted from `unit` and wrapped.
pub fn read_csv(path: &Path, unit: AngleUnit) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let columns: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_owned)
        .collect();
    if columns.is_empty() || columns.iter().all(String::is_empty) {
        return Err(parse_error(path, 1, "missing header row"));
    }
    let d = columns.len();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != d {
            return Err(parse_error(
                path,
                line,
                format!("expected {d} cells, found {}", record.len()),
            ));
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(j, cell)| {
                if cell.is_empty() || cell == MISSING_TOKEN {
                    return Ok(None);
                }
                match cell.parse::<f64>() {
                    Ok(x) if x.is_finite() => Ok(Some(unit.to_radians(x))),
                    _ => Err(parse_error(
                        path,
                        line,
                        format!("column `{}`: cannot parse `{cell}` as an angle", columns[j]),
                    )),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let ds = Dataset::new(columns, rows)?;
    if let Some(j) = ds.first_empty_column() {
        return Err(parse_error(
            path,
            1,
            format!("column `{}` has no observed values", ds.columns()[j]),
        ));
    }
    Ok(ds)
}

/// Writes a dataset in radians; missing cells become `NA`.
pub fn write_csv(ds: &Dataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(ds.columns()).map_err(|e| csv_error(path, e))?;
    for i in 0..ds.n() {
        let cells: Vec<String> = ds
            .row(i)
            .into_iter()
            .map(|c| c.map_or_else(|| MISSING_TOKEN.to_owned(), |x| x.to_string()))
            .collect();
        w.write_record(&cells).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Fully observed dataset from an `n × d` matrix of angles.
pub fn dataset_from_matrix(m: &DMatrix<f64>) -> Result<Dataset> {
    let rows: Vec<Vec<f64>> = (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect();
    if rows.is_empty() {
        return Dataset::empty(m.ncols());
    }
    Dataset::from_rows(&rows)
}

pub fn read_json_file<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_json_str(&text)
}

/// Deserialises JSON, reporting failures with the path of the offending
/// field.
pub fn from_json_str<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        Error::config(
            if field == "." { "<root>".to_owned() } else { field },
            e.into_inner().to_string(),
        )
    })
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::io(path, e.into()))?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Model parameters as stored on disk. Exactly one of `kappa` (TPN) and
/// `lambda` (CTPN) is present; `sigma` is the full correlation matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    pub mu: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
    pub sigma: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    Tpn(TpnParams),
    Ctpn(CtpnParams),
}

impl ModelParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::Tpn(_) => ModelKind::Tpn,
            ModelParams::Ctpn(_) => ModelKind::Ctpn,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ModelParams::Tpn(p) => p.dim(),
            ModelParams::Ctpn(p) => p.dim(),
        }
    }

    /// Parameters of the sub-model on the given coordinates.
    pub fn marginal(&self, indices: &[usize]) -> Result<ModelParams> {
        match self {
            ModelParams::Tpn(p) => Ok(ModelParams::Tpn(p.marginal(indices)?)),
            ModelParams::Ctpn(p) => {
                let mu = AngleVector::new(indices.iter().map(|&j| p.mu().as_slice()[j]))?;
                let lambda: Vec<f64> = indices.iter().map(|&j| p.lambda()[j]).collect();
                Ok(ModelParams::Ctpn(CtpnParams::wrapped_cauchy(
                    mu,
                    &lambda,
                    p.sigma().submatrix(indices)?,
                )?))
            }
        }
    }

    /// Parameters of one retained posterior draw.
    pub fn from_draw(kind: ModelKind, mu: &[f64], concentration: &[f64], sigma_upper: &[f64]) -> Result<ModelParams> {
        let sigma = CorrelationMatrix::from_upper(mu.len(), sigma_upper)?;
        let mu = AngleVector::new(mu.iter().copied())?;
        match kind {
            ModelKind::Tpn => Ok(ModelParams::Tpn(TpnParams::new(mu, concentration.to_vec(), sigma)?)),
            ModelKind::Ctpn => Ok(ModelParams::Ctpn(CtpnParams::wrapped_cauchy(mu, concentration, sigma)?)),
        }
    }

    /// `n × d` draws.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<DMatrix<f64>> {
        match self {
            ModelParams::Tpn(p) => Ok(tpn_sample(p, n, rng)?.angles),
            ModelParams::Ctpn(p) => ctpn_sample(p, n, rng),
        }
    }

    /// Log-density at `theta`; `budget` and `rng` are only used for d ≥ 3.
    pub fn logpdf<R: Rng + ?Sized>(&self, theta: &[f64], budget: usize, rng: &mut R) -> Result<f64> {
        match self {
            ModelParams::Tpn(p) => tpn_logpdf(theta, p, budget, rng),
            ModelParams::Ctpn(p) => ctpn_logpdf(theta, p, budget, rng),
        }
    }

    pub fn reference(&self) -> Reference {
        match self {
            ModelParams::Tpn(p) => Reference {
                mu: p.mu().as_slice().to_vec(),
                concentration: p.kappa().to_vec(),
                sigma: p.sigma().upper(),
            },
            ModelParams::Ctpn(p) => Reference {
                mu: p.mu().as_slice().to_vec(),
                concentration: p.lambda(),
                sigma: p.sigma().upper(),
            },
        }
    }

    pub fn to_file(&self) -> ParamsFile {
        let r = self.reference();
        let sigma = match self {
            ModelParams::Tpn(p) => p.sigma().matrix().clone(),
            ModelParams::Ctpn(p) => p.sigma().matrix().clone(),
        };
        let (kappa, lambda) = match self.kind() {
            ModelKind::Tpn => (Some(r.concentration), None),
            ModelKind::Ctpn => (None, Some(r.concentration)),
        };
        ParamsFile {
            mu: r.mu,
            kappa,
            lambda,
            sigma: sigma.row_iter().map(|row| row.iter().copied().collect()).collect(),
        }
    }
}

impl ParamsFile {
    pub fn into_params(self) -> Result<ModelParams> {
        let d = self.mu.len();
        let sigma = CorrelationMatrix::new(square_matrix(&self.sigma, d, "sigma")?)?;
        let mu = AngleVector::new(self.mu)?;
        match (self.kappa, self.lambda) {
            (Some(kappa), None) => Ok(ModelParams::Tpn(TpnParams::new(mu, kappa, sigma)?)),
            (None, Some(lambda)) => Ok(ModelParams::Ctpn(CtpnParams::wrapped_cauchy(mu, &lambda, sigma)?)),
            _ => Err(Error::config(
                "kappa",
                "give exactly one of `kappa` (tpn) and `lambda` (ctpn)",
            )),
        }
    }
}

fn square_matrix(rows: &[Vec<f64>], d: usize, field: &str) -> Result<DMatrix<f64>> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(Error::config(field, format!("expected a {d}×{d} matrix")));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

pub fn read_params(path: &Path) -> Result<ModelParams> {
    read_json_file::<ParamsFile>(path)?.into_params()
}

/// Settings of a `fit` or `score` run. Every field is optional in the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelKind,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub sigma_proposal_df: Option<f64>,
    pub mu_step: f64,
    pub lambda_step: f64,
    pub adapt: bool,
    pub kappa_mean: f64,
    pub kappa_var: f64,
    /// Degrees of freedom `ν`; `d + 2` when absent.
    pub tiw_df: Option<f64>,
    /// Scale `Ψ`; the identity when absent.
    pub tiw_scale: Option<Vec<Vec<f64>>>,
    pub holdout_fraction: f64,
    pub angle_unit: AngleUnit,
    pub data: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    /// Retained draws between two checkpoints of a streaming fit.
    pub checkpoint_every: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let m = McmcConfig::default();
        RunConfig {
            model: ModelKind::Tpn,
            iterations: m.iterations,
            burn_in: m.burn_in,
            thin: m.thin,
            sigma_proposal_df: m.sigma_proposal_df,
            mu_step: m.mu_step,
            lambda_step: m.lambda_step,
            adapt: m.adapt,
            kappa_mean: 0.0,
            kappa_var: 1e5,
            tiw_df: None,
            tiw_scale: None,
            holdout_fraction: 0.1,
            angle_unit: AngleUnit::Radians,
            data: None,
            out_dir: None,
            checkpoint_every: 50,
        }
    }
}

impl RunConfig {
    /// Checks everything that does not depend on the data dimension.
    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 {
            return Err(Error::config("thin", "must be at least 1"));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::config("burn_in", "must be smaller than iterations"));
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return Err(Error::config("holdout_fraction", "must lie in [0, 1)"));
        }
        if !(self.kappa_var > 0.0 && self.kappa_var.is_finite()) {
            return Err(Error::config("kappa_var", "must be positive"));
        }
        if !self.kappa_mean.is_finite() {
            return Err(Error::config("kappa_mean", "must be finite"));
        }
        if self.checkpoint_every == 0 {
            return Err(Error::config("checkpoint_every", "must be at least 1"));
        }
        for (field, p) in [("data", &self.data), ("out_dir", &self.out_dir)] {
            if p.as_ref().is_some_and(|p| p.as_os_str().is_empty()) {
                return Err(Error::config(field, "path must not be empty"));
            }
        }
        Ok(())
    }

    pub fn mcmc(&self, seed: u64) -> McmcConfig {
        McmcConfig {
            iterations: self.iterations,
            burn_in: self.burn_in,
            thin: self.thin,
            sigma_proposal_df: self.sigma_proposal_df,
            mu_step: self.mu_step,
            lambda_step: self.lambda_step,
            seed,
            adapt: self.adapt,
        }
    }

    pub fn priors(&self, d: usize) -> Result<PriorSpec> {
        let df = self.tiw_df.unwrap_or(d as f64 + 2.0);
        let scale = match &self.tiw_scale {
            Some(rows) => CovarianceMatrix::new(square_matrix(rows, d, "tiw_scale")?)
                .map_err(|e| Error::config("tiw_scale", e.to_string()))?,
            None => CovarianceMatrix::identity(d),
        };
        let tiw = TiwPrior::new(df, scale).map_err(|e| Error::config("tiw_df", e.to_string()))?;
        PriorSpec::new(self.kappa_mean, self.kappa_var, tiw)
    }
}

pub fn read_config(path: &Path) -> Result<RunConfig> {
    let cfg: RunConfig = read_json_file(path)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Splits row indices into `(train, holdout)`, both sorted. The split
/// depends only on its arguments.
pub fn holdout_split(seed: u64, n: usize, fraction: f64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::domain(format!("holdout fraction {fraction} outside [0, 1)")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha20Rng::seed_from_u64(seed));
    let k = (fraction * n as f64).round() as usize;
    let mut test = idx[..k].to_vec();
    let mut train = idx[k..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((train, test))
}

/// Names of the files of a draw directory.
fn block_files(kind: ModelKind) -> [String; 4] {
    [
        "mu.csv".into(),
        format!("{}.csv", kind.concentration_name()),
        "sigma.csv".into(),
        "imputed.csv".into(),
    ]
}

fn imputed_name(cell: (usize, usize)) -> String {
    format!("theta[{},{}]", cell.0 + 1, cell.1 + 1)
}

/// Appends draws to the CSV files of a draw directory as they are produced.
pub struct DrawWriter {
    dir: PathBuf,
    names: [Vec<String>; 4],
    writers: Vec<(PathBuf, csv::Writer<BufWriter<File>>)>,
}

impl DrawWriter {
    /// Creates (truncating) the files for draws shaped like `template`.
    pub fn create(dir: &Path, template: &PosteriorDraws) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let all = template.parameter_names();
        let d = template.dim;
        let names = [
            all[..d].to_vec(),
            all[d..2 * d].to_vec(),
            all[2 * d..].to_vec(),
            template.missing_cells.iter().map(|&c| imputed_name(c)).collect(),
        ];
        let files = block_files(template.kind);
        let mut writers = Vec::new();
        for (b, file) in files.iter().enumerate() {
            if b == 3 && template.missing_cells.is_empty() {
                continue;
            }
            let path = dir.join(file);
            let mut w = csv::Writer::from_writer(create(&path)?);
            w.write_record(DRAWS_HEADER).map_err(|e| csv_error(&path, e))?;
            writers.push((path, w));
        }
        Ok(DrawWriter {
            dir: dir.to_path_buf(),
            names,
            writers,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn append(&mut self, iteration: u64, blocks: [&[f64]; 4]) -> Result<()> {
        for ((path, w), (names, values)) in self.writers.iter_mut().zip(self.names.iter().zip(blocks)) {
            if names.len() != values.len() {
                return Err(Error::Dimension {
                    expected: names.len(),
                    got: values.len(),
                });
            }
            let it = iteration.to_string();
            for (name, v) in names.iter().zip(values) {
                w.write_record([it.as_str(), name, &v.to_string()])
                    .map_err(|e| csv_error(path, e))?;
            }
        }
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        for (path, w) in &mut self.writers {
            w.flush().map_err(|e| Error::io(path.as_path(), e))?;
        }
        Ok(())
    }
}

/// Writes every draw to `dir`: `mu.csv`, `kappa.csv` or `lambda.csv`,
/// `sigma.csv` (off-diagonal correlations) and, when cells were imputed,
/// `imputed.csv`.
pub fn write_draws(draws: &PosteriorDraws, dir: &Path) -> Result<()> {
    if draws.is_empty() {
        return Err(Error::domain("no draws to write"));
    }
    draws.validate()?;
    let mut w = DrawWriter::create(dir, draws)?;
    for t in 0..draws.len() {
        w.append(
            draws.iterations[t],
            [
                &draws.mu[t],
                &draws.concentration[t],
                &draws.sigma[t],
                &draws.imputed[t],
            ],
        )?;
    }
    w.flush()
}

struct Row {
    line: u64,
    iteration: u64,
    name: String,
    value: f64,
}

fn read_block(path: &Path) -> Result<Vec<Row>> {
    let mut reader = csv::ReaderBuilder::new()
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let header = reader.headers().map_err(|e| csv_error(path, e))?;
    if header.iter().ne(DRAWS_HEADER) {
        return Err(parse_error(
            path,
            1,
            format!("header must be `{}`", DRAWS_HEADER.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let iteration = record[0]
            .parse()
            .map_err(|_| parse_error(path, line, format!("bad iteration `{}`", &record[0])))?;
        let value = record[2]
            .parse()
            .map_err(|_| parse_error(path, line, format!("bad value `{}`", &record[2])))?;
        rows.push(Row {
            line,
            iteration,
            name: record[1].to_owned(),
            value,
        });
    }
    Ok(rows)
}

/// Splits rows into draws of `names.len()` values, checking names and that
/// each draw has a single iteration.
fn chunk_block(path: &Path, rows: &[Row], names: &[String], draws: usize) -> Result<(Vec<u64>, Vec<Vec<f64>>)> {
    let w = names.len();
    if rows.len() != w * draws {
        return Err(parse_error(
            path,
            rows.last().map_or(1, |r| r.line),
            format!("expected {} rows for {draws} draws, found {}", w * draws, rows.len()),
        ));
    }
    let mut iterations = Vec::with_capacity(draws);
    let mut values = Vec::with_capacity(draws);
    for t in 0..draws {
        let chunk = &rows[t * w..(t + 1) * w];
        for (r, name) in chunk.iter().zip(names) {
            if &r.name != name || r.iteration != chunk[0].iteration {
                return Err(parse_error(
                    path,
                    r.line,
                    format!("expected `{name}` of iteration {}", chunk[0].iteration),
                ));
            }
        }
        iterations.push(chunk.first().map_or(0, |r| r.iteration));
        values.push(chunk.iter().map(|r| r.value).collect());
    }
    Ok((iterations, values))
}

fn parse_imputed_name(name: &str) -> Option<(usize, usize)> {
    let inner = name.strip_prefix("theta[")?.strip_suffix(']')?;
    let (i, j) = inner.split_once(',')?;
    Some((
        i.parse::<usize>().ok()?.checked_sub(1)?,
        j.parse::<usize>().ok()?.checked_sub(1)?,
    ))
}

/// Reads a draw directory written by [`write_draws`] or [`DrawWriter`].
pub fn read_draws(dir: &Path) -> Result<PosteriorDraws> {
    let kind = if dir.join("kappa.csv").exists() {
        ModelKind::Tpn
    } else if dir.join("lambda.csv").exists() {
        ModelKind::Ctpn
    } else {
        return Err(Error::domain(format!(
            "{} holds neither kappa.csv nor lambda.csv",
            dir.display()
        )));
    };
    let files = block_files(kind);
    let mu_path = dir.join(&files[0]);
    let mu_rows = read_block(&mu_path)?;
    let first = mu_rows.first().ok_or_else(|| parse_error(&mu_path, 2, "no draws"))?;
    let d = mu_rows
        .iter()
        .take_while(|r| r.iteration == first.iteration && (r.line == first.line || r.name != first.name))
        .count();
    let imputed_path = dir.join(&files[3]);
    let (missing_cells, imputed_rows) = if imputed_path.exists() {
        let rows = read_block(&imputed_path)?;
        let head = rows.first().ok_or_else(|| parse_error(&imputed_path, 2, "no draws"))?;
        let cells = rows
            .iter()
            .take_while(|r| r.iteration == head.iteration && (r.line == head.line || r.name != head.name))
            .map(|r| {
                parse_imputed_name(&r.name)
                    .ok_or_else(|| parse_error(&imputed_path, r.line, format!("bad cell name `{}`", r.name)))
            })
            .collect::<Result<Vec<_>>>()?;
        (cells, rows)
    } else {
        (Vec::new(), Vec::new())
    };
    let mut draws = PosteriorDraws::new(kind, d, missing_cells);
    let names = draws.parameter_names();
    let n_draws = mu_rows.len() / d;
    let (iterations, mu) = chunk_block(&mu_path, &mu_rows, &names[..d], n_draws)?;
    let conc_path = dir.join(&files[1]);
    let (it_c, concentration) = chunk_block(&conc_path, &read_block(&conc_path)?, &names[d..2 * d], n_draws)?;
    let sigma_path = dir.join(&files[2]);
    let sigma_rows = read_block(&sigma_path)?;
    let (it_s, sigma) = chunk_block(&sigma_path, &sigma_rows, &names[2 * d..], n_draws)?;
    let cell_names: Vec<String> = draws.missing_cells.iter().map(|&c| imputed_name(c)).collect();
    let (it_i, imputed) = chunk_block(&imputed_path, &imputed_rows, &cell_names, n_draws)?;
    for (path, its, width) in [
        (&conc_path, &it_c, d),
        (&sigma_path, &it_s, names.len() - 2 * d),
        (&imputed_path, &it_i, cell_names.len()),
    ] {
        if width > 0 && its != &iterations {
            return Err(parse_error(path, 2, "iterations do not match mu.csv"));
        }
    }
    draws.iterations = iterations;
    draws.mu = mu;
    draws.concentration = concentration;
    draws.sigma = sigma;
    draws.imputed = imputed;
    draws.validate()?;
    Ok(draws)
}

/// Writes the summary table as CSV. Columns without a reference are left
/// empty.
pub fn write_summary<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let opt = |x: Option<f64>| x.map_or_else(String::new, |v| v.to_string());
    let to_err = |e: csv::Error| Error::numerical(format!("writing summary: {e}"));
    w.write_record([
        "name",
        "circular",
        "mean",
        "lower",
        "upper",
        "truth",
        "diff_lower",
        "diff_upper",
        "covers",
    ])
    .map_err(to_err)?;
    for r in rows {
        w.write_record([
            r.name.clone(),
            r.circular.to_string(),
            r.mean.to_string(),
            r.lower.to_string(),
            r.upper.to_string(),
            opt(r.truth),
            opt(r.diff_lower),
            opt(r.diff_upper),
            r.covers_truth().map_or_else(String::new, |c| c.to_string()),
        ])
        .map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::numerical(format!("writing summary: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn csv_examples() {
        let tmp = tempfile::tempdir().unwrap();
        let ds = read_csv(
            &write(tmp.path(), "a.csv", "a,b\n0.0,NA\n1.5,-3.0\n"),
            AngleUnit::Radians,
        )
        .unwrap();
        assert!(ds.is_missing(0, 1));
        assert_eq!(ds.get(1, 1), Some(-3.0));
        let deg = read_csv(&write(tmp.path(), "b.csv", "x\n270\n"), AngleUnit::Degrees).unwrap();
        assert!((deg.get(0, 0).unwrap() + PI / 2.0).abs() < 1e-12);
        let ragged = read_csv(&write(tmp.path(), "c.csv", "a,b\n1,2\n3\n"), AngleUnit::Radians).unwrap_err();
        assert!(matches!(ragged, Error::Parse { line: 3, .. }), "{ragged}");
        let bad = read_csv(&write(tmp.path(), "d.csv", "a,b\n1,2\n3,x\n"), AngleUnit::Radians).unwrap_err();
        assert!(matches!(bad, Error::Parse { line: 3, .. }), "{bad}");
        assert!(read_csv(&write(tmp.path(), "e.csv", "a,b\n1,NA\n2,\n"), AngleUnit::Radians).is_err());
    }

    #[test]
    fn config_defaults_and_errors() {
        let cfg: RunConfig = from_json_str("{}").unwrap();
        cfg.validate().unwrap();
        let p = cfg.priors(6).unwrap();
        assert_eq!(p.tiw.df(), 8.0);
        assert_eq!(p.tiw.scale().matrix(), &DMatrix::<f64>::identity(6, 6));
        assert_eq!((p.kappa_mean, p.kappa_var), (0.0, 1e5));
        assert_eq!((cfg.iterations, cfg.burn_in, cfg.thin), (30_000, 10_000, 10));
        let thin: RunConfig = from_json_str(r#"{"thin": 0}"#).unwrap();
        assert!(matches!(thin.validate(), Err(Error::Config { field, .. }) if field == "thin"));
        match from_json_str::<RunConfig>(r#"{"iterations": "many"}"#) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "iterations"),
            other => panic!("{other:?}"),
        }
        match from_json_str::<RunConfig>(r#"{"burnin": 5}"#) {
            Err(Error::Config { message, .. }) => assert!(message.contains("burnin")),
            other => panic!("{other:?}"),
        }
        let deg: RunConfig = from_json_str(r#"{"angle_unit": "degrees"}"#).unwrap();
        assert_eq!(deg.angle_unit, AngleUnit::Degrees);
    }

    #[test]
    fn params_round_trip() {
        let text = r#"{"mu": [0.5, -1.0], "lambda": [0.3, 0.7], "sigma": [[1, 0.4], [0.4, 1]]}"#;
        let p = from_json_str::<ParamsFile>(text).unwrap().into_params().unwrap();
        assert_eq!(p.kind(), ModelKind::Ctpn);
        let back = p.to_file().into_params().unwrap();
        assert_eq!(back, p);
        let both = r#"{"mu": [0.5], "kappa": [1], "lambda": [0.3], "sigma": [[1]]}"#;
        assert!(from_json_str::<ParamsFile>(both).unwrap().into_params().is_err());
    }

    #[test]
    fn holdout_is_pure() {
        let a = holdout_split(4, 50, 0.1).unwrap();
        assert_eq!(a, holdout_split(4, 50, 0.1).unwrap());
        assert_eq!(a.1.len(), 5);
        assert_eq!(a.0.len() + a.1.len(), 50);
        assert_ne!(a, holdout_split(5, 50, 0.1).unwrap());
    }

    #[test]
    fn single_draw_d1() {
        let tmp = tempfile::tempdir().unwrap();
        let mut draws = PosteriorDraws::new(ModelKind::Tpn, 1, vec![]);
        draws.iterations.push(10);
        draws.mu.push(vec![0.25]);
        draws.concentration.push(vec![1.5]);
        draws.sigma.push(vec![]);
        draws.imputed.push(vec![]);
        write_draws(&draws, tmp.path()).unwrap();
        let count = |f: &str| fs::read_to_string(tmp.path().join(f)).unwrap().lines().count() - 1;
        assert_eq!((count("mu.csv"), count("kappa.csv"), count("sigma.csv")), (1, 1, 0));
        assert!(!tmp.path().join("imputed.csv").exists());
        assert_eq!(read_draws(tmp.path()).unwrap(), draws);
    }
}
