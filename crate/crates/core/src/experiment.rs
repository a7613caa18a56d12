//! Experiment configuration, the runners behind each CLI subcommand, CSV
//! emission and the run manifest.
//!
//! A run is a pure function of its configuration: every random draw derives
//! from `seed`, reductions happen in a fixed order and floats are printed in
//! shortest round-trip form, so outputs are byte-identical across reruns and
//! worker counts.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complexity::{
    check_h1a, check_h1b, check_h2, check_h3, check_h4_all, corpus, slack_stable, AxiomBounds,
    Backend, HypothesisReport,
};
use crate::ergodic::{validate, AdmissibleSequence, DEFAULT_K_MAX, DEFAULT_L_MIN};
use crate::error::{Error, Result};
use crate::estimators::{
    entropy_trend, sample_for_window, summarise_scan, tau_invariance, trajectory, variational_gap,
    volume_rate, HaloMode, RateParams, VariationalParams,
};
use crate::lattice::{Distribution, MeasureSampler, SystemDefinition};
use crate::window::Window;

/// Tool name and version recorded in every manifest.
pub const VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

pub const MANIFEST: &str = "run.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    Complexity,
    Entropy,
    Variational,
    Axioms,
    ValidateSeq,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Complexity => "complexity",
            Command::Entropy => "entropy",
            Command::Variational => "variational",
            Command::Axioms => "axioms",
            Command::ValidateSeq => "validate-seq",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub l_min: f64,
    /// Multiplicative allowance on the covering refinement ladder.
    pub level_tolerance: f64,
    pub bounds: AxiomBounds,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            l_min: DEFAULT_L_MIN,
            level_tolerance: 1.1,
            bounds: AxiomBounds::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AxiomCorpus {
    pub words: usize,
    pub max_len: usize,
    pub alphabet: u128,
    /// Product words are drawn over `alphabet × alphabet`.
    pub product_max_len: usize,
    /// Exhaustive counting covers every word up to this length.
    pub h4_max_len: usize,
}

impl Default for AxiomCorpus {
    fn default() -> Self {
        AxiomCorpus {
            words: 1000,
            max_len: 1024,
            alphabet: 2,
            product_max_len: 1024,
            h4_max_len: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VariationalBlock {
    /// Word length for the complexity side.
    pub complexity_n: u64,
}

impl Default for VariationalBlock {
    fn default() -> Self {
        VariationalBlock {
            complexity_n: 1 << 14,
        }
    }
}

fn default_eps() -> Vec<f64> {
    vec![0.25]
}

fn default_ensemble() -> usize {
    1024
}

fn default_samples() -> usize {
    4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub system: SystemDefinition,
    #[serde(default)]
    pub distribution: Option<Distribution>,
    /// Strictly decreasing.
    #[serde(default = "default_eps")]
    pub eps: Vec<f64>,
    #[serde(default)]
    pub windows: Vec<Window>,
    #[serde(default)]
    pub sequence: Option<AdmissibleSequence>,
    /// Sequence indices; required with `sequence`.
    #[serde(default)]
    pub k_grid: Vec<u64>,
    /// Strictly increasing coded-step counts.
    pub n_grid: Vec<u64>,
    /// Coding intervals for the τ-invariance table.
    #[serde(default)]
    pub tau: Vec<u64>,
    #[serde(default)]
    pub backend: Backend,
    #[serde(default = "default_ensemble")]
    pub ensemble: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub max_level: u32,
    #[serde(default)]
    pub halo: HaloMode,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub variational: VariationalBlock,
    #[serde(default)]
    pub axioms: AxiomCorpus,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_json_with_seed(text, None)
    }

    /// Parses `text`, with `seed` (when given) replacing or supplying the
    /// top-level seed.
    pub fn from_json_with_seed(text: &str, seed: Option<u64>) -> Result<Self> {
        let mut value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::config(".", e.to_string()))?;
        if let Some(seed) = seed {
            match value.as_object_mut() {
                Some(map) => {
                    map.insert("seed".into(), seed.into());
                }
                None => return Err(Error::config(".", "expected an object")),
            }
        }
        serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().to_string())
        })
    }

    pub fn load(path: &Path, seed: Option<u64>) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        Self::from_json_with_seed(&text, seed)
    }

    pub fn sampler(&self) -> MeasureSampler {
        MeasureSampler::for_system(
            &self.system,
            self.seed,
            self.distribution.unwrap_or(Distribution::ProductUniform),
        )
    }

    /// The observation windows: the sequence at `k_grid` when a sequence is
    /// given, otherwise the explicit list.
    pub fn resolved_windows(&self) -> Result<Vec<Window>> {
        match &self.sequence {
            Some(seq) => self
                .k_grid
                .iter()
                .enumerate()
                .map(|(i, &k)| {
                    seq.window(k)
                        .map_err(|e| Error::config(format!("k_grid[{i}]"), e.to_string()))
                })
                .collect(),
            None => Ok(self.windows.clone()),
        }
    }

    fn rate_params(&self) -> RateParams {
        RateParams {
            n_grid: self.n_grid.clone(),
            max_level: self.max_level,
            halo: self.halo,
            level_tolerance: self.tolerances.level_tolerance,
            l_min: self.tolerances.l_min,
            bounds: self.tolerances.bounds,
        }
    }

    /// Checks the fields `command` reads, reporting the first offending path.
    pub fn validate(&self, command: Command) -> Result<()> {
        self.system
            .validate()
            .map_err(|e| Error::config("system", e.to_string()))?;
        let needs_grids = !matches!(command, Command::Axioms | Command::ValidateSeq);
        if needs_grids {
            strictly(&self.n_grid, "n_grid", |a, b| a < b)?;
            if self.n_grid[0] == 0 {
                return Err(Error::config("n_grid[0]", "must be positive"));
            }
            // counting accepts precisions above the diameter; coverings do not
            let cap = if command == Command::Entropy {
                f64::INFINITY
            } else {
                1.0
            };
            for (i, e) in self.eps.iter().enumerate() {
                if !(*e > 0.0 && *e <= cap) {
                    return Err(Error::config(
                        format!("eps[{i}]"),
                        format!("must lie in (0, {cap}]"),
                    ));
                }
            }
            strictly(&self.eps, "eps", |a, b| a > b)?;
            if self.sequence.is_some() {
                strictly(&self.k_grid, "k_grid", |a, b| a < b)?;
            }
            let windows = self.resolved_windows()?;
            if windows.is_empty() {
                let path = if self.sequence.is_some() {
                    "k_grid"
                } else {
                    "windows"
                };
                return Err(Error::config(path, "no windows given"));
            }
            if self.samples == 0 {
                return Err(Error::config("samples", "must be positive"));
            }
        }
        match command {
            Command::Complexity => {
                if self.sequence.is_none() {
                    return Err(Error::config(
                        "sequence",
                        "complexity runs need an admissible sequence",
                    ));
                }
                if self.n_grid.len() < 4 {
                    return Err(Error::config("n_grid", "needs at least 4 points"));
                }
                if !self.tau.is_empty() {
                    if self.tau.len() < 2 {
                        return Err(Error::config("tau", "needs at least two entries"));
                    }
                    if let Some(i) = self.tau.iter().position(|t| *t == 0) {
                        return Err(Error::config(format!("tau[{i}]"), "must be positive"));
                    }
                }
            }
            Command::Entropy | Command::Variational => {
                let windows = self.resolved_windows()?;
                if windows.windows(2).any(|p| p[1].len() <= p[0].len()) {
                    return Err(Error::config(
                        "windows",
                        "sizes must be strictly increasing",
                    ));
                }
                if self.ensemble < 2 {
                    return Err(Error::config("ensemble", "must be at least 2"));
                }
            }
            Command::Axioms => {
                let a = &self.axioms;
                if a.words == 0 || a.max_len == 0 || a.product_max_len == 0 || a.h4_max_len == 0 {
                    return Err(Error::config("axioms", "corpus sizes must be positive"));
                }
                if a.alphabet < 2 {
                    return Err(Error::config("axioms.alphabet", "must be at least 2"));
                }
            }
            Command::ValidateSeq => {
                if self.sequence.is_none() {
                    return Err(Error::config("sequence", "missing"));
                }
                if !(self.tolerances.l_min > 0.0) {
                    return Err(Error::config("tolerances.l_min", "must be positive"));
                }
            }
            Command::Simulate => {}
        }
        Ok(())
    }
}

fn strictly<T: Copy>(v: &[T], path: &str, ok: impl Fn(T, T) -> bool) -> Result<()> {
    if v.is_empty() {
        return Err(Error::config(path, "must be non-empty"));
    }
    if let Some(i) = v.windows(2).position(|p| !ok(p[0], p[1])) {
        return Err(Error::config(
            format!("{path}[{}]", i + 1),
            "grid is not strictly monotone",
        ));
    }
    Ok(())
}

/// A CSV file produced by a run.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &str, header: &[&'static str]) -> Self {
        Table {
            name: name.to_string(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

macro_rules! row {
    ($($x:expr),* $(,)?) => { vec![$($x.to_string()),*] };
}

fn simulate(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    let sampler = cfg.sampler();
    let n = *cfg.n_grid.last().expect("validated");
    let steps = (n - 1) * cfg.system.tau;
    let windows = cfg.resolved_windows()?;
    let jobs: Vec<(Window, u64)> = windows
        .iter()
        .flat_map(|w| (0..cfg.samples as u64).map(move |j| (*w, j)))
        .collect();
    let trajs = jobs
        .par_iter()
        .map(|(w, j)| {
            let f = sample_for_window(&sampler.nth(*j), &cfg.system, w, steps, cfg.halo);
            trajectory(&f, &cfg.system, w, n)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(
        "trajectories.csv",
        &[
            "system",
            "window_lo",
            "window_hi",
            "sample",
            "t",
            "site",
            "value",
        ],
    );
    let sys = cfg.system.id();
    for ((w, j), traj) in jobs.iter().zip(&trajs) {
        for (i, v) in traj.iter().enumerate() {
            let step = i / w.len();
            let site = w.lo() + (i % w.len()) as i64;
            t.push(row![
                sys,
                w.lo(),
                w.hi(),
                j,
                step as u64 * cfg.system.tau,
                site,
                v
            ]);
        }
    }
    Ok(vec![t])
}

fn complexity_tables(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    let sampler = cfg.sampler();
    let seq = cfg.sequence.clone().expect("validated");
    let params = cfg.rate_params();
    let sys = cfg.system.id();
    let runs = cfg
        .eps
        .par_iter()
        .map(|&eps| {
            volume_rate(
                &sampler,
                &cfg.system,
                eps,
                &cfg.backend,
                &seq,
                &cfg.k_grid,
                cfg.samples,
                &params,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut windows = Table::new(
        "windows.csv",
        &[
            "system",
            "tau",
            "eps",
            "k",
            "window_lo",
            "window_hi",
            "size",
            "mean_rate",
            "std_err",
            "levels_monotone",
            "subadditive",
        ],
    );
    let mut volume = Table::new(
        "volume_rate.csv",
        &[
            "system", "tau", "eps", "sequence", "rate", "residual", "monotone", "samples",
        ],
    );
    for (eps, v) in cfg.eps.iter().zip(&runs) {
        for w in &v.windows {
            windows.push(row![
                sys,
                cfg.system.tau,
                eps,
                w.k,
                w.window.lo(),
                w.window.hi(),
                w.window.len(),
                w.mean,
                w.std_err,
                w.levels_monotone,
                w.subadditive
            ]);
        }
        volume.push(row![
            sys,
            cfg.system.tau,
            eps,
            seq.name(),
            v.rate(),
            v.estimate.residual,
            v.estimate.monotone,
            cfg.samples
        ]);
    }
    let scan = summarise_scan(
        cfg.eps
            .iter()
            .zip(&runs)
            .map(|(e, v)| (*e, v.rate()))
            .collect(),
    );
    let mut eps_table = Table::new(
        "epsilon_scan.csv",
        &[
            "system",
            "tau",
            "eps",
            "rate",
            "monotone",
            "worst_drop",
            "converged",
        ],
    );
    for (eps, rate) in &scan.rows {
        eps_table.push(row![
            sys,
            cfg.system.tau,
            eps,
            rate,
            scan.monotone,
            scan.worst_drop,
            scan.converged
        ]);
    }
    let mut tables = vec![windows, volume, eps_table];
    if !cfg.tau.is_empty() {
        let eps = *cfg.eps.last().expect("validated");
        let report = tau_invariance(
            &sampler,
            &cfg.system,
            eps,
            &cfg.backend,
            &cfg.tau,
            &seq,
            &cfg.k_grid,
            cfg.samples,
            &params,
        )?;
        let mut t = Table::new(
            "tau_invariance.csv",
            &[
                "system",
                "eps",
                "tau",
                "rate",
                "rate_per_tau",
                "max_deviation",
                "pass",
            ],
        );
        for (tau, rate, per) in &report.rows {
            t.push(row![
                sys,
                eps,
                tau,
                rate,
                per,
                report.max_deviation,
                report.pass
            ]);
        }
        tables.push(t);
    }
    Ok(tables)
}

fn entropy_tables(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    let windows = cfg.resolved_windows()?;
    let trend = entropy_trend(
        &cfg.sampler(),
        &cfg.system,
        &cfg.eps,
        &windows,
        &cfg.n_grid,
        cfg.ensemble,
    )?;
    let sys = cfg.system.id();
    let mut counts = Table::new(
        "entropy_counts.csv",
        &[
            "system",
            "eps",
            "window_lo",
            "window_hi",
            "n",
            "log2_lower",
            "log2_upper",
            "saturated",
            "trusted",
        ],
    );
    let mut fits = Table::new(
        "entropy.csv",
        &[
            "system",
            "eps",
            "size",
            "h_window",
            "per_volume",
            "h_eps",
            "ensemble_limited",
            "exact",
        ],
    );
    for e in &trend.estimates {
        for w in &e.windows {
            for c in &w.counts {
                counts.push(row![
                    sys,
                    e.eps,
                    w.window.lo(),
                    w.window.hi(),
                    c.n,
                    c.log2_lower,
                    c.log2_upper,
                    c.saturated,
                    c.trusted
                ]);
            }
            fits.push(row![
                sys,
                e.eps,
                w.window.len(),
                w.h_window.fitted_rate,
                w.h_window.fitted_rate / w.window.len() as f64,
                e.rate(),
                e.ensemble_limited,
                e.exact
            ]);
        }
    }
    let mut tr = Table::new(
        "entropy_trend.csv",
        &["system", "eps", "h_eps", "monotone", "converged"],
    );
    for (eps, h) in &trend.trend.rows {
        tr.push(row![
            sys,
            eps,
            h,
            trend.trend.monotone,
            trend.trend.converged
        ]);
    }
    Ok(vec![counts, fits, tr])
}

fn variational_tables(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    let windows = cfg.resolved_windows()?;
    let params = VariationalParams {
        complexity_n: cfg.variational.complexity_n,
        entropy_n_grid: cfg.n_grid.clone(),
        ensemble: cfg.ensemble,
        samples: cfg.samples,
        halo: cfg.halo,
    };
    let sampler = cfg.sampler();
    let mut t = Table::new(
        "variational.csv",
        &[
            "system",
            "eps",
            "window_lo",
            "window_hi",
            "mean_k_rate",
            "k_std_err",
            "entropy_rate",
            "gap",
            "pass",
            "ensemble_limited",
            "exact_entropy",
        ],
    );
    let sys = cfg.system.id();
    for &eps in &cfg.eps {
        for w in &windows {
            let g = variational_gap(&sampler, &cfg.system, eps, w, &cfg.backend, &params)?;
            t.push(row![
                sys,
                eps,
                w.lo(),
                w.hi(),
                g.mean_k_rate,
                g.k_std_err,
                g.entropy_rate,
                g.gap,
                g.pass,
                g.ensemble_limited,
                g.exact_entropy
            ]);
        }
    }
    Ok(vec![t])
}

/// H1.a, H1.b, H2.a, H2.b and H3 on a random corpus of `words` entries.
pub fn corpus_reports(
    backend: &Backend,
    plan: &AxiomCorpus,
    bounds: &AxiomBounds,
    seed: u64,
    words: usize,
) -> Result<Vec<HypothesisReport>> {
    let pairs = corpus::split_pairs(seed, words, plan.max_len, plan.alphabet);
    let products = corpus::product_samples(
        seed ^ 0x0f0f,
        words,
        plan.product_max_len,
        plan.alphabet,
        plan.alphabet,
    );
    let lists: Vec<(u64, Vec<_>)> = (1..=8u64)
        .map(|n| {
            (
                n,
                corpus::random_words(seed.wrapping_add(n), 1 << n, 64, plan.alphabet),
            )
        })
        .collect();
    let (h2a, h2b) = check_h2(backend, &products, bounds)?;
    Ok(vec![
        check_h1a(backend, &pairs, bounds)?,
        check_h1b(backend, &pairs, bounds)?,
        h2a,
        h2b,
        check_h3(&lists, bounds)?,
    ])
}

fn axiom_tables(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    let plan = &cfg.axioms;
    let bounds = &cfg.tolerances.bounds;
    let base = corpus_reports(&cfg.backend, plan, bounds, cfg.seed, plan.words)?;
    let doubled = corpus_reports(&cfg.backend, plan, bounds, cfg.seed, 2 * plan.words)?;
    let h4 = check_h4_all(&cfg.backend, 2, plan.h4_max_len)?;
    let mut t = Table::new(
        "axioms.csv",
        &[
            "hypothesis",
            "corpus",
            "slack",
            "value",
            "bound",
            "doubled_value",
            "stable",
            "pass",
            "informational",
        ],
    );
    let mut emit = |r: &HypothesisReport, twin: Option<&HypothesisReport>| {
        for (name, value) in &r.slacks {
            let bound = r
                .bounds
                .iter()
                .find(|(b, _)| b == name)
                .map_or(f64::INFINITY, |b| b.1);
            let other = twin.and_then(|d| d.slack(name));
            let stable = other.is_none_or(|o| slack_stable(*value, o));
            t.push(row![
                format!("{:?}", r.hypothesis),
                r.corpus,
                name,
                value,
                bound,
                other.map_or(String::new(), |o| o.to_string()),
                stable,
                r.pass && twin.is_none_or(|d| d.pass),
                r.informational
            ]);
        }
    };
    for (r, d) in base.iter().zip(&doubled) {
        emit(r, Some(d));
    }
    emit(&h4, None);
    Ok(vec![t])
}

fn validation_tables(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    let seq = cfg.sequence.clone().expect("validated");
    let k_max = cfg
        .k_grid
        .iter()
        .copied()
        .max()
        .unwrap_or(0)
        .max(DEFAULT_K_MAX);
    let report = validate(&seq, cfg.tolerances.l_min, k_max)?;
    let mut t = Table::new(
        "validation.csv",
        &[
            "sequence",
            "pass",
            "condition",
            "k",
            "l_a",
            "l_b",
            "k_max",
            "l_min",
        ],
    );
    let (cond, k) = report
        .violation
        .map_or((String::new(), String::new()), |(c, k)| {
            (c.to_string(), k.to_string())
        });
    t.push(row![
        seq.name(),
        report.pass,
        cond,
        k,
        report.l_a,
        report.l_b,
        report.k_max,
        report.l_min
    ]);
    Ok(vec![t])
}

/// Computes the tables for `command` without touching the filesystem.
pub fn tables(command: Command, cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    cfg.validate(command)?;
    log::info!(
        "running {} for {} with seed {}",
        command.name(),
        cfg.system,
        cfg.seed
    );
    match command {
        Command::Simulate => simulate(cfg),
        Command::Complexity => complexity_tables(cfg),
        Command::Entropy => entropy_tables(cfg),
        Command::Variational => variational_tables(cfg),
        Command::Axioms => axiom_tables(cfg),
        Command::ValidateSeq => validation_tables(cfg),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutputFile {
    pub file: String,
    pub rows: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub outputs: Vec<OutputFile>,
}

/// Writes `bytes` through a temporary sibling and a rename.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::domain(format!("{} has no file name", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Runs `command`, writes its CSV files into `out` and finishes with the
/// manifest.
pub fn run(command: Command, cfg: &ExperimentConfig, out: &Path) -> Result<Manifest> {
    let tables = tables(command, cfg)?;
    fs::create_dir_all(out)?;
    let mut outputs = Vec::with_capacity(tables.len());
    for t in &tables {
        write_atomic(&out.join(&t.name), &t.to_csv()?)?;
        log::debug!("wrote {} ({} rows)", t.name, t.rows.len());
        outputs.push(OutputFile {
            file: t.name.clone(),
            rows: t.rows.len(),
        });
    }
    let manifest = Manifest {
        tool: VERSION,
        command: command.name(),
        seed: cfg.seed,
        config: cfg.clone(),
        outputs,
    };
    let mut json = serde_json::to_vec_pretty(&manifest)?;
    json.push(b'\n');
    write_atomic(&out.join(MANIFEST), &json)?;
    Ok(manifest)
}
