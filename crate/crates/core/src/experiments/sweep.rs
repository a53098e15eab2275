//! Sweep drivers and their CSV output.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::weights::{
    derived_seed, random_hermitian, random_weight_class, random_weight_with_norm, random_weight_with_spectrum,
    rng_from_seed, WClass,
};
use crate::bounds::{bounds_for_spec, BoundReport};
use crate::delaymat::{build_delay_matrix, DelaySpec};
use crate::error::{Error, Result};
use crate::matcore::{spectral_summary, Complex64, ComplexMatrix, SpectralSummary, DEFAULT_RANK_TOL};

/// Largest `m * n` a single cell may request.
pub const MAX_CELL_DIM: usize = 512;

pub const CSV_HEADER: &str = "experiment,m,n,param1_name,param1,param2_name,param2,sample,seed,\
sigma_max,sigma_min,kappa_log10,gen_det_log10,bound_kappa_log10,bound_det_log10,embedding_guaranteed,wall_time_ms";

pub const SV_CSV_HEADER: &str = "class,m,n,sigma_max_target,sample,index,sigma";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    ScalarCond,
    ScalarDet,
    HermGrid,
    Region,
    GeneralCond,
    GeneralDet,
    LagGrowth,
    WClassSpectra,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::ScalarCond,
        Experiment::ScalarDet,
        Experiment::HermGrid,
        Experiment::Region,
        Experiment::GeneralCond,
        Experiment::GeneralDet,
        Experiment::LagGrowth,
        Experiment::WClassSpectra,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::ScalarCond => "scalar-cond",
            Experiment::ScalarDet => "scalar-det",
            Experiment::HermGrid => "herm-grid",
            Experiment::Region => "region",
            Experiment::GeneralCond => "general-cond",
            Experiment::GeneralDet => "general-det",
            Experiment::LagGrowth => "lag-growth",
            Experiment::WClassSpectra => "w-class-spectra",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('_', "-");
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == key || e.name().replace('-', "") == key)
            .ok_or_else(|| Error::Parse(format!("unknown experiment '{s}'")))
    }
}

/// `k` evenly spaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, k: usize) -> Vec<f64> {
    match k {
        0 => vec![],
        1 => vec![a],
        _ => (0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect(),
    }
}

/// Named parameter grids. Which ones an experiment reads is listed on
/// [`Grids::defaults`].
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Grids {
    pub n: Vec<usize>,
    pub m: Vec<usize>,
    pub sigma_max: Vec<f64>,
    pub sigma_min: Vec<f64>,
    pub omega: Vec<f64>,
    pub lambda: Vec<f64>,
    pub classes: Vec<WClass>,
}

impl Grids {
    /// Grids used when a config leaves them empty:
    ///
    /// - scalar-cond, scalar-det: `n`, `omega` (modulus of the scalar weight)
    /// - herm-grid: `n`, `lambda` (both eigenvalues of a 2x2 Hermitian `W`)
    /// - region: `m`, `n`, `sigma_min`, `sigma_max`
    /// - general-cond, general-det, lag-growth: `m`, `n`, `sigma_max`
    /// - w-class-spectra: `classes`, `m`, `n`, `sigma_max`
    pub fn defaults(experiment: Experiment) -> Self {
        let mut g = Grids::default();
        match experiment {
            Experiment::ScalarCond | Experiment::ScalarDet => {
                g.n = vec![4, 8, 16];
                g.omega = linspace(0.0, 2.0, 81);
            }
            Experiment::HermGrid => {
                g.n = vec![2, 8, 32];
                g.lambda = linspace(-2.0, 2.0, 41);
            }
            Experiment::Region => {
                g.m = vec![4];
                g.n = vec![8];
                g.sigma_min = linspace(0.0, 2.0, 21);
                g.sigma_max = linspace(0.0, 2.0, 21);
            }
            Experiment::GeneralCond | Experiment::GeneralDet => {
                g.m = (1..=35).collect();
                g.n = vec![2, 4, 8];
                g.sigma_max = linspace(0.0, 1.0, 35);
            }
            Experiment::LagGrowth => {
                g.m = vec![1, 2, 4, 8];
                g.n = vec![1, 2, 4, 8];
                g.sigma_max = linspace(0.0, 0.5, 100);
            }
            Experiment::WClassSpectra => {
                g.classes = WClass::ALL.to_vec();
                g.m = vec![4];
                g.n = vec![8];
                g.sigma_max = linspace(0.0, 1.0, 11);
            }
        }
        g
    }
}

fn default_samples(experiment: Experiment) -> usize {
    match experiment {
        Experiment::Region => 4,
        Experiment::LagGrowth => 100,
        Experiment::WClassSpectra => 10,
        _ => 1,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub grids: Grids,
    /// 0 means the experiment's default.
    #[serde(default)]
    pub samples_per_cell: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out_path: String,
}

impl SweepConfig {
    /// Config with the experiment's default grids and sample count.
    pub fn new(experiment: Experiment, seed: u64, out_path: impl Into<String>) -> Self {
        let mut cfg = Self {
            experiment,
            grids: Grids::default(),
            samples_per_cell: 0,
            seed,
            out_path: out_path.into(),
        };
        cfg.fill_defaults();
        cfg
    }

    /// Replaces empty grids relevant to the experiment, and a zero sample
    /// count, with the defaults.
    pub fn fill_defaults(&mut self) {
        let d = Grids::defaults(self.experiment);
        let g = &mut self.grids;
        macro_rules! fill {
            ($($f:ident),*) => {$(
                if g.$f.is_empty() {
                    g.$f = d.$f.clone();
                }
            )*};
        }
        fill!(n, m, sigma_max, sigma_min, omega, lambda, classes);
        if self.samples_per_cell == 0 {
            self.samples_per_cell = default_samples(self.experiment);
        }
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grids;
        let need = |ok: bool, what: &str| -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParams(format!("{} sweep needs a non-empty {what} grid", self.experiment)))
            }
        };
        match self.experiment {
            Experiment::ScalarCond | Experiment::ScalarDet => need(!g.omega.is_empty(), "omega")?,
            Experiment::HermGrid => need(!g.lambda.is_empty(), "lambda")?,
            Experiment::Region => {
                need(!g.m.is_empty(), "m")?;
                need(!g.sigma_min.is_empty(), "sigma_min")?;
                need(!g.sigma_max.is_empty(), "sigma_max")?;
            }
            Experiment::GeneralCond | Experiment::GeneralDet | Experiment::LagGrowth => {
                need(!g.m.is_empty(), "m")?;
                need(!g.sigma_max.is_empty(), "sigma_max")?;
            }
            Experiment::WClassSpectra => {
                need(!g.classes.is_empty(), "classes")?;
                need(!g.m.is_empty(), "m")?;
                need(!g.sigma_max.is_empty(), "sigma_max")?;
            }
        }
        need(!g.n.is_empty(), "n")?;
        if self.samples_per_cell == 0 {
            return Err(Error::InvalidParams("samples_per_cell must be at least 1".into()));
        }
        if g.n.contains(&0) || g.m.contains(&0) {
            return Err(Error::InvalidParams("grid values of n and m must be positive".into()));
        }
        let reals = g.sigma_max.iter().chain(&g.sigma_min).chain(&g.omega).chain(&g.lambda);
        if reals.clone().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParams("grid values must be finite".into()));
        }
        if g.sigma_max.iter().chain(&g.sigma_min).any(|&x| x < 0.0) {
            return Err(Error::InvalidParams("singular value grids must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Real(f64),
    Label(String),
    Empty,
}

impl ParamValue {
    pub fn as_real(&self) -> Option<f64> {
        match self {
            ParamValue::Real(x) => Some(*x),
            _ => None,
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Real(x) => write!(f, "{x}"),
            ParamValue::Label(s) => f.write_str(s),
            ParamValue::Empty => Ok(()),
        }
    }
}

/// Coordinates of one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub m: usize,
    pub n: usize,
    pub param1_name: String,
    pub param1: ParamValue,
    pub param2_name: String,
    pub param2: ParamValue,
}

impl Cell {
    fn new(m: usize, n: usize, p1: (&str, ParamValue), p2: (&str, ParamValue)) -> Self {
        Self {
            m,
            n,
            param1_name: p1.0.into(),
            param1: p1.1,
            param2_name: p2.0.into(),
            param2: p2.1,
        }
    }

    fn label(&self) -> String {
        let mut s = format!("m={} n={}", self.m, self.n);
        for (name, v) in [(&self.param1_name, &self.param1), (&self.param2_name, &self.param2)] {
            if !name.is_empty() {
                s.push_str(&format!(" {name}={v}"));
            }
        }
        s
    }
}

fn none() -> (&'static str, ParamValue) {
    ("", ParamValue::Empty)
}

/// Cells of a sweep in the deterministic emission order.
pub fn enumerate_cells(cfg: &SweepConfig) -> Vec<Cell> {
    let g = &cfg.grids;
    let mut cells = Vec::new();
    match cfg.experiment {
        Experiment::ScalarCond | Experiment::ScalarDet => {
            for &n in &g.n {
                for &w in &g.omega {
                    cells.push(Cell::new(1, n, ("omega", ParamValue::Real(w)), none()));
                }
            }
        }
        Experiment::HermGrid => {
            for &n in &g.n {
                for &l1 in &g.lambda {
                    for &l2 in &g.lambda {
                        cells.push(Cell::new(
                            2,
                            n,
                            ("lambda1", ParamValue::Real(l1)),
                            ("lambda2", ParamValue::Real(l2)),
                        ));
                    }
                }
            }
        }
        Experiment::Region => {
            for &m in &g.m {
                for &n in &g.n {
                    for &lo in &g.sigma_min {
                        for &hi in g.sigma_max.iter().filter(|&&hi| hi >= lo) {
                            cells.push(Cell::new(
                                m,
                                n,
                                ("sigma_min", ParamValue::Real(lo)),
                                ("sigma_max", ParamValue::Real(hi)),
                            ));
                        }
                    }
                }
            }
        }
        Experiment::GeneralCond | Experiment::GeneralDet => {
            for &n in &g.n {
                for &m in &g.m {
                    for &s in &g.sigma_max {
                        cells.push(Cell::new(m, n, ("sigma_max", ParamValue::Real(s)), none()));
                    }
                }
            }
        }
        Experiment::LagGrowth => {
            for &m in &g.m {
                for &n in &g.n {
                    for &s in &g.sigma_max {
                        cells.push(Cell::new(m, n, ("sigma_max", ParamValue::Real(s)), none()));
                    }
                }
            }
        }
        Experiment::WClassSpectra => {
            for &class in &g.classes {
                for &m in &g.m {
                    for &n in &g.n {
                        for &s in &g.sigma_max {
                            cells.push(Cell::new(
                                m,
                                n,
                                ("class", ParamValue::Label(class.to_string())),
                                ("sigma_max", ParamValue::Real(s)),
                            ));
                        }
                    }
                }
            }
        }
    }
    cells
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub experiment: Experiment,
    pub cell: Cell,
    pub sample_index: usize,
    pub derived_seed: u64,
    pub measured: SpectralSummary,
    pub bounds: BoundReport,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AggregateKind {
    Mean,
    Var,
}

/// Per-cell mean or population variance over samples. `kappa_log10` is
/// the log of the mean (variance) of kappa; `gen_det_log10` is the mean
/// (variance) of `log10 S`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub cell: Cell,
    pub kind: AggregateKind,
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub kappa_log10: f64,
    pub gen_det_log10: f64,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub experiment: Experiment,
    pub samples_per_cell: usize,
    /// One record per (cell, sample), cell-major.
    pub records: Vec<SweepRecord>,
    /// Mean and variance rows per cell, present when a cell has more than
    /// one sample.
    pub aggregates: Vec<AggregateRow>,
}

fn mean_var(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let k = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / k;
    let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / k;
    (mean, var)
}

fn aggregate(cell: &Cell, recs: &[SweepRecord]) -> [AggregateRow; 2] {
    let (smax_m, smax_v) = mean_var(recs.iter().map(|r| r.measured.sigma_max));
    let (smin_m, smin_v) = mean_var(recs.iter().map(|r| r.measured.sigma_min));
    let (k_m, k_v) = mean_var(recs.iter().map(|r| r.measured.kappa));
    let (d_m, d_v) = mean_var(recs.iter().map(|r| r.measured.gen_det_log / std::f64::consts::LN_10));
    let time: f64 = recs.iter().map(|r| r.wall_time_ms).sum();
    let row = |kind, smax, smin, k: f64, d| AggregateRow {
        cell: cell.clone(),
        kind,
        sigma_max: smax,
        sigma_min: smin,
        kappa_log10: k.log10(),
        gen_det_log10: d,
        wall_time_ms: time,
    };
    [
        row(AggregateKind::Mean, smax_m, smin_m, k_m, d_m),
        row(AggregateKind::Var, smax_v, smin_v, k_v, d_v),
    ]
}

/// The weight matrix a sweep draws for `cell` at a derived seed.
pub fn cell_weight(experiment: Experiment, cell: &Cell, seed: u64) -> Result<ComplexMatrix> {
    let p1 = cell.param1.as_real();
    let p2 = cell.param2.as_real();
    match experiment {
        Experiment::ScalarCond | Experiment::ScalarDet => {
            Ok(ComplexMatrix::scalar(Complex64::new(p1.expect("omega cell"), 0.0)))
        }
        Experiment::HermGrid => random_hermitian(&[p1.expect("lambda1"), p2.expect("lambda2")], false, seed),
        Experiment::Region => {
            let (lo, hi) = (p1.expect("sigma_min"), p2.expect("sigma_max"));
            if cell.m == 1 {
                return random_weight_with_spectrum(&[hi], seed);
            }
            let mut rng = rng_from_seed(seed ^ 0x5DEE_CE66_D1CE_4E5B);
            let mut sig = vec![hi, lo];
            sig.extend((2..cell.m).map(|_| rng.gen_range(lo..=hi)));
            random_weight_with_spectrum(&sig, seed)
        }
        Experiment::GeneralCond | Experiment::GeneralDet | Experiment::LagGrowth => {
            random_weight_with_norm(cell.m, p1.expect("sigma_max"), seed)
        }
        Experiment::WClassSpectra => {
            let class: WClass = cell.param1.to_string().parse()?;
            random_weight_class(cell.m, class, p2.expect("sigma_max"), seed)
        }
    }
}

fn spec_for(experiment: Experiment, cell: &Cell, w: ComplexMatrix) -> Result<DelaySpec> {
    match experiment {
        Experiment::ScalarCond | Experiment::ScalarDet => DelaySpec::scalar(w[(0, 0)], cell.n),
        _ => DelaySpec::infer(cell.n, w),
    }
}

fn run_cell(cfg: &SweepConfig, index: usize, cell: &Cell) -> Result<Vec<SweepRecord>> {
    (0..cfg.samples_per_cell)
        .map(|sample| {
            let start = Instant::now();
            let seed = derived_seed(cfg.seed, index as u64, sample as u64);
            let w = cell_weight(cfg.experiment, cell, seed)?;
            let spec = spec_for(cfg.experiment, cell, w)?;
            let measured = spectral_summary(&build_delay_matrix(&spec), DEFAULT_RANK_TOL)
                .map_err(|e| Error::InvalidParams(format!("cell {}: {e}", cell.label())))?;
            let bounds = bounds_for_spec(&spec)?;
            Ok(SweepRecord {
                experiment: cfg.experiment,
                cell: cell.clone(),
                sample_index: sample,
                derived_seed: seed,
                measured,
                bounds,
                wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
            })
        })
        .collect()
}

/// Runs every cell (in parallel) and gathers records in cell order.
pub fn collect_sweep(cfg: &SweepConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let cells = enumerate_cells(cfg);
    for cell in &cells {
        let dim = cell.m * cell.n;
        if dim > MAX_CELL_DIM {
            return Err(Error::OutOfBudget {
                cell: cell.label(),
                dim,
                limit: MAX_CELL_DIM,
            });
        }
    }
    let per_cell: Vec<Vec<SweepRecord>> = cells
        .par_iter()
        .enumerate()
        .map(|(i, cell)| run_cell(cfg, i, cell))
        .collect::<Result<_>>()?;
    let mut aggregates = Vec::new();
    if cfg.samples_per_cell > 1 {
        for (cell, recs) in cells.iter().zip(&per_cell) {
            aggregates.extend(aggregate(cell, recs));
        }
    }
    Ok(SweepOutput {
        experiment: cfg.experiment,
        samples_per_cell: cfg.samples_per_cell,
        records: per_cell.into_iter().flatten().collect(),
        aggregates,
    })
}

fn log10_or_empty(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        x.log10().to_string()
    }
}

/// Writes the sweep table: each cell's sample rows followed by its
/// aggregate rows.
pub fn write_sweep_csv(out: &SweepOutput, mut w: impl Write) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    let exp = out.experiment;
    let cell_cols = |c: &Cell| format!("{},{},{},{},{},{}", c.m, c.n, c.param1_name, c.param1, c.param2_name, c.param2);
    let per_cell = out.samples_per_cell.max(1);
    for (k, recs) in out.records.chunks(per_cell).enumerate() {
        let cell = cell_cols(&recs[0].cell);
        for r in recs {
            let b = &r.bounds;
            writeln!(
                w,
                "{exp},{cell},{},{},{},{},{},{},{},{},{},{}",
                r.sample_index,
                r.derived_seed,
                r.measured.sigma_max,
                r.measured.sigma_min,
                r.measured.kappa.log10(),
                r.measured.gen_det_log / std::f64::consts::LN_10,
                log10_or_empty(b.kappa_bound),
                b.det_bound_log / std::f64::consts::LN_10,
                b.embedding.guaranteed,
                r.wall_time_ms,
            )?;
        }
        for a in out.aggregates.get(2 * k..2 * k + 2).unwrap_or(&[]) {
            let tag = match a.kind {
                AggregateKind::Mean => "mean",
                AggregateKind::Var => "var",
            };
            writeln!(
                w,
                "{exp},{cell},{tag},,{},{},{},{},,,,{}",
                a.sigma_max, a.sigma_min, a.kappa_log10, a.gen_det_log10, a.wall_time_ms,
            )?;
        }
    }
    Ok(())
}

/// Singular values of every `M` in a w-class-spectra sweep, one per row.
pub fn write_singular_value_csv(out: &SweepOutput, mut w: impl Write) -> Result<()> {
    writeln!(w, "{SV_CSV_HEADER}")?;
    for r in &out.records {
        for (i, s) in r.measured.singular_values.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{},{i},{s}",
                r.cell.param1, r.cell.m, r.cell.n, r.cell.param2, r.sample_index
            )?;
        }
    }
    Ok(())
}

/// `<out>` with its extension replaced.
pub fn sidecar_path(out: &Path, extension: &str) -> PathBuf {
    out.with_extension(extension)
}

fn write_atomic(path: &Path, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    {
        let mut buf = std::io::BufWriter::new(tmp.as_file_mut());
        body(&mut buf)?;
        buf.flush()?;
    }
    tmp.persist(path).map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}

/// Runs the sweep and writes `out_path` (CSV), its `.json` metadata
/// sidecar and, for w-class-spectra, a `.sv.csv` singular-value table.
/// Each file is written to a temporary file and renamed into place.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutput> {
    if cfg.out_path.is_empty() {
        return Err(Error::InvalidParams("sweep needs an output path".into()));
    }
    let out = collect_sweep(cfg)?;
    let path = Path::new(&cfg.out_path);
    write_atomic(path, |w| write_sweep_csv(&out, w))?;
    if cfg.experiment == Experiment::WClassSpectra {
        write_atomic(&sidecar_path(path, "sv.csv"), |w| write_singular_value_csv(&out, w))?;
    }
    let meta = serde_json::json!({
        "config": cfg,
        "version": env!("CARGO_PKG_VERSION"),
        "records": out.records.len(),
        "aggregate_rows": out.aggregates.len(),
    });
    write_atomic(&sidecar_path(path, "json"), |w| {
        serde_json::to_writer_pretty(&mut *w, &meta).map_err(|e| Error::Io(e.to_string()))?;
        writeln!(w)?;
        Ok(())
    })?;
    Ok(out)
}

/// Drops the trailing timing column from every line of a sweep CSV.
pub fn strip_timing(csv: &str) -> String {
    csv.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}
