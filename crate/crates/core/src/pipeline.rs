//! Config-driven orchestration behind the command-line tool: evidence,
//! frequentist calibration, Bayesian fits, cost-effectiveness and the
//! three-model comparison. Every run ends with a `manifest.json`.

use crate::bayes::{self, Dist, EvidenceData, McmcConfig, Posterior, PosteriorDraws, PriorSet};
use crate::calibrate::{self, CalibrateConfig, CalibrationRun, ScenarioIcers};
use crate::datasim::{self, SimRecipe};
use crate::econ::{self, CeaResult, DrawOutcome, EconConfig};
use crate::engine::{Engine, EngineSettings};
use crate::error::{DataError, PipelineError};
use crate::io::{self, IcerRow};
use crate::model::{CohortState, HealthState, Intervention, ParamId, ParameterSet, Stratum, Trajectory};
use crate::ode::{self, OdeConfig};
use crate::stats;
use crate::svg::{self, Plot, Series, Style};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Simulate,
    CalibrateDode,
    FitBode,
    FitBmm,
    Cea,
    Compare,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::CalibrateDode => "calibrate-dode",
            Command::FitBode => "fit-bode",
            Command::FitBmm => "fit-bmm",
            Command::Cea => "cea",
            Command::Compare => "compare",
        }
    }
}

/// Short model label used in file names and tables.
pub fn model_tag(engine: Engine) -> &'static str {
    match engine {
        Engine::Markov => "bmm",
        Engine::Ode => "bode",
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    /// Read `registry.csv`, `binomial.csv` and `calibration.csv` from here
    /// instead of simulating them.
    pub evidence_dir: Option<PathBuf>,
    pub popsize: usize,
    pub calibration_noise: bool,
    /// Binomial study sizes keyed by parameter name.
    pub binomial_sizes: BTreeMap<String, u64>,
}

impl Default for DataConfig {
    fn default() -> Self {
        let r = SimRecipe::case_study(0);
        DataConfig {
            evidence_dir: None,
            popsize: r.popsize,
            calibration_noise: r.calibration_noise,
            binomial_sizes: r.binomial_sizes.iter().map(|(k, v)| (k.name().to_string(), *v)).collect(),
        }
    }
}

/// Prior replacements keyed by parameter name, per engine.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PriorOverrides {
    pub markov: BTreeMap<String, Dist>,
    pub ode: BTreeMap<String, Dist>,
}

/// One experiment. Every field has a default and the defaults reproduce
/// the case study, so an empty file is a valid config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    /// Seeds data simulation, MCMC and calibration sampling; stage-level
    /// seed fields are overwritten by it.
    pub seed: u64,
    pub data: DataConfig,
    /// Reference values that generate simulated evidence, keyed by
    /// parameter name.
    pub reference: BTreeMap<String, f64>,
    pub priors: PriorOverrides,
    pub mcmc: McmcConfig,
    pub calibrate: CalibrateConfig,
    pub econ: EconConfig,
    pub engine: EngineSettings,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 20_240_601,
            data: DataConfig::default(),
            reference: BTreeMap::new(),
            priors: PriorOverrides::default(),
            mcmc: McmcConfig::default(),
            calibrate: CalibrateConfig::default(),
            econ: EconConfig::default(),
            engine: EngineSettings::default(),
        }
    }
}

fn config_err(field: &str, msg: impl std::fmt::Display) -> PipelineError {
    PipelineError::Config(format!("{field}: {msg}"))
}

fn param(field: &str, name: &str) -> Result<ParamId, PipelineError> {
    ParamId::parse(name).ok_or_else(|| config_err(&format!("{field}.{name}"), "unknown parameter"))
}

impl PipelineConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, PipelineError> {
        let mut cfg: PipelineConfig = toml::from_str(s).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.sync_seeds();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(|e| config_err(&path.display().to_string(), e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            PipelineError::Config(m) => PipelineError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises to TOML")
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.sync_seeds();
        self
    }

    fn sync_seeds(&mut self) {
        self.mcmc.seed = self.seed;
        self.calibrate.seed = self.seed;
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let p = self.reference_params()?;
        p.validate().map_err(|e| config_err("reference", e))?;
        for engine in [Engine::Markov, Engine::Ode] {
            self.priors(engine)?;
        }
        for name in self.data.binomial_sizes.keys() {
            param("data.binomial_sizes", name)?;
        }
        if self.data.popsize == 0 {
            return Err(config_err("data.popsize", "must be at least 1"));
        }
        self.mcmc.validate().map_err(|e| config_err("mcmc", e))?;
        self.econ.validate().map_err(|e| config_err("econ", e))?;
        if self.calibrate.n_samples == 0 {
            return Err(config_err("calibrate.n_samples", "must be at least 1"));
        }
        self.calibrate.ode.validate().map_err(|e| config_err("calibrate.ode", e))?;
        if !(self.engine.ode_step > 0.0 && self.engine.ode_step <= 1.0) {
            return Err(config_err("engine.ode_step", format!("must lie in (0, 1], got {}", self.engine.ode_step)));
        }
        let k = self.engine.markov_cycle_length;
        if !(k > 0.0 && k <= 1.0 && ((1.0 / k) - (1.0 / k).round()).abs() < 1e-9) {
            return Err(config_err("engine.markov_cycle_length", format!("must be 1/n for a whole n, got {k}")));
        }
        Ok(())
    }

    pub fn reference_params(&self) -> Result<ParameterSet, PipelineError> {
        let mut p = ParameterSet::reference();
        for (name, v) in &self.reference {
            p.set(param("reference", name)?, *v);
        }
        Ok(p)
    }

    pub fn priors(&self, engine: Engine) -> Result<PriorSet, PipelineError> {
        let (field, overrides) = match engine {
            Engine::Markov => ("priors.markov", &self.priors.markov),
            Engine::Ode => ("priors.ode", &self.priors.ode),
        };
        let mut set = PriorSet::case_study(engine);
        for (name, dist) in overrides {
            set.set_dist(param(field, name)?, *dist).map_err(|e| config_err(&format!("{field}.{name}"), e))?;
        }
        Ok(set)
    }

    pub fn recipe(&self) -> Result<SimRecipe, PipelineError> {
        let mut r = SimRecipe::case_study(self.seed);
        r.popsize = self.data.popsize;
        r.calibration_noise = self.data.calibration_noise;
        r.reference = self.reference_params()?;
        r.binomial_sizes = self
            .data
            .binomial_sizes
            .iter()
            .map(|(k, v)| Ok((param("data.binomial_sizes", k)?, *v)))
            .collect::<Result<_, PipelineError>>()?;
        Ok(r)
    }

    pub fn posterior(&self, evidence: &EvidenceData, engine: Engine) -> Result<Posterior, PipelineError> {
        let mut post = Posterior::new(self.priors(engine)?, evidence.clone(), engine)
            .map_err(|e| PipelineError::Numeric { stage: "posterior", message: e.to_string() })?;
        post.settings = self.engine;
        Ok(post)
    }

    /// Snapshots per trajectory needed by the economic horizon, minus one.
    pub fn years(&self) -> usize {
        self.econ.horizon.saturating_sub(1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Wall-clock of the two Bayesian samplers at identical draw budgets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuntimeReport {
    pub bmm_seconds: f64,
    pub bode_seconds: f64,
    /// `bode_seconds / bmm_seconds`.
    pub speedup: f64,
    pub draws_per_chain: usize,
    pub chains: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub versions: BTreeMap<String, String>,
    pub stages: Vec<StageTiming>,
    pub outputs: Vec<OutputFile>,
    pub runtime: Option<RuntimeReport>,
    pub warnings: Vec<String>,
    pub effective_config: String,
}

impl RunManifest {
    pub fn output(&self, name: &str) -> Option<&OutputFile> {
        self.outputs.iter().find(|o| o.path == name)
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn numeric(stage: &'static str) -> impl Fn(&dyn std::fmt::Display) -> PipelineError {
    move |e| PipelineError::Numeric { stage, message: e.to_string() }
}

/// Results of the deterministic ODE calibration.
#[derive(Clone, Debug)]
pub struct DodeResult {
    pub run: CalibrationRun,
    pub trajectories: [Trajectory; 2],
    pub outcome: DrawOutcome,
    pub scenarios: ScenarioIcers,
}

#[derive(Clone, Debug)]
pub struct FitResult {
    pub draws: PosteriorDraws,
    pub sampling_seconds: f64,
}

struct Run<'a> {
    cfg: &'a PipelineConfig,
    out: PathBuf,
    stages: Vec<StageTiming>,
    outputs: Vec<PathBuf>,
    warnings: Vec<String>,
    runtime: Option<RuntimeReport>,
}

impl Run<'_> {
    fn timed<T>(
        &mut self,
        stage: &str,
        f: impl FnOnce(&mut Self) -> Result<T, PipelineError>,
    ) -> Result<T, PipelineError> {
        let t = Instant::now();
        let r = f(self)?;
        self.stages.push(StageTiming { stage: stage.into(), seconds: t.elapsed().as_secs_f64() });
        Ok(r)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn record(&mut self, paths: impl IntoIterator<Item = PathBuf>) {
        self.outputs.extend(paths);
    }

    fn write_text(&mut self, name: &str, text: &str) -> Result<(), PipelineError> {
        let p = self.path(name);
        fs::write(&p, text).map_err(|e| PipelineError::Output { path: p.display().to_string(), source: e })?;
        self.record([p]);
        Ok(())
    }

    fn write_rows<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<(), PipelineError> {
        let p = self.path(name);
        io::write_rows(&p, rows)?;
        self.record([p]);
        Ok(())
    }

    fn evidence(&mut self) -> Result<EvidenceData, PipelineError> {
        self.timed("evidence", |run| match &run.cfg.data.evidence_dir {
            Some(dir) => {
                let e = io::read_evidence(dir)?;
                e.validate().map_err(|err| {
                    PipelineError::Data(DataError::Schema {
                        path: dir.display().to_string(),
                        line: 0,
                        detail: err.to_string(),
                    })
                })?;
                Ok(e)
            }
            None => datasim::simulate_evidence(&run.cfg.recipe()?).map_err(|e| numeric("simulate")(&e)),
        })
    }

    fn calibrate_dode(&mut self, evidence: &EvidenceData) -> Result<DodeResult, PipelineError> {
        let cfg = self.cfg;
        let init = CohortState::case_study();
        let run = self.timed("calibrate-dode", |_| {
            let post = cfg.posterior(evidence, Engine::Ode)?;
            let priors = calibrate::sampling_priors_for(&post).map_err(|e| numeric("calibrate-dode")(&e))?;
            calibrate::calibrate(&priors, &evidence.calibration, &init, &cfg.calibrate)
                .map_err(|e| numeric("calibrate-dode")(&e))
        })?;
        if !run.best_score().is_finite() {
            return Err(numeric("calibrate-dode")(&"every calibration sample failed to integrate"));
        }
        let (trajectories, outcome, scenarios) = self.timed("dode-cea", |_| {
            let best = run.best_set();
            let years = cfg.years();
            let ode_cfg = OdeConfig { horizon: years as f64, ..cfg.calibrate.ode };
            let sim = |iv| ode::integrate(&init, best, &ode_cfg, iv).map(|s| s.trajectory);
            let trajectories = [sim(Intervention::StatusQuo), sim(Intervention::Vaccination)];
            let [a, b] = trajectories;
            let trajectories = [a.map_err(|e| numeric("dode-cea")(&e))?, b.map_err(|e| numeric("dode-cea")(&e))?];
            let outcome = DrawOutcome::evaluate(best, &trajectories, &cfg.econ);
            let scenarios = calibrate::scenario_quantiles(&run, &init, &cfg.calibrate.ode, &cfg.econ)
                .map_err(|e| numeric("dode-cea")(&e))?;
            Ok((trajectories, outcome, scenarios))
        })?;
        let p = self.path("calibration_samples.csv");
        io::write_calibration_samples(&p, &run)?;
        self.record([p]);
        self.write_text("dode_best_fit.txt", &run.report())?;
        let rows: Vec<_> = trajectories.iter().flat_map(|t| io::trajectory_rows("dode", t)).collect();
        self.write_rows("trajectory_dode.csv", &rows)?;
        Ok(DodeResult { run, trajectories, outcome, scenarios })
    }

    fn fit(&mut self, evidence: &EvidenceData, engine: Engine) -> Result<FitResult, PipelineError> {
        let cfg = self.cfg;
        let tag = model_tag(engine);
        let post = cfg.posterior(evidence, engine)?;
        let t = Instant::now();
        let mut draws =
            self.timed(&format!("fit-{tag}"), |_| bayes::sample(&cfg.mcmc, &post).map_err(|e| numeric("mcmc")(&e)))?;
        let sampling_seconds = t.elapsed().as_secs_f64();
        self.warnings.extend(draws.warnings.iter().map(|w| format!("{tag}: {w}")));
        self.timed(&format!("trajectories-{tag}"), |_| {
            draws.attach_trajectories(&post.settings, &post.init, cfg.years()).map_err(|e| numeric("trajectories")(&e))
        })?;
        let p = self.path(&format!("posterior_{tag}.csv"));
        io::write_posterior_draws(&p, &draws)?;
        self.record([p]);
        let diag = serde_json::to_string_pretty(&draws.summary()).expect("summary serialises");
        self.write_text(&format!("diagnostics_{tag}.json"), &(diag + "\n"))?;
        self.write_rows(&format!("trajectory_{tag}.csv"), &io::posterior_trajectory_rows(tag, &draws))?;
        Ok(FitResult { draws, sampling_seconds })
    }

    fn cea(&mut self, draws: &PosteriorDraws, tag: &str) -> Result<CeaResult, PipelineError> {
        let cfg = self.cfg;
        let cohort = CohortState::case_study().total();
        let r =
            self.timed(&format!("cea-{tag}"), |_| econ::psa(draws, &cfg.econ, cohort).map_err(|e| numeric("cea")(&e)))?;
        let paths = io::write_cea(&self.out, tag, &r)?;
        self.record(paths);
        Ok(r)
    }

    fn cea_figures(&mut self, results: &[(&str, &CeaResult)], suffix: &str) -> Result<(), PipelineError> {
        let k = self.cfg.econ.wtp_reference;
        self.write_text(&format!("ce_plane{suffix}.svg"), &ce_plane_plot(results, k).render())?;
        self.write_text(&format!("ceac{suffix}.svg"), &ceac_plot(results).render())?;
        self.write_text(&format!("evpi{suffix}.svg"), &evpi_plot(results).render())?;
        Ok(())
    }
}

const COLORS: [(&str, &str); 3] = [("bmm", "#c0392b"), ("bode", "#2c3e80"), ("dode", "#333333")];

fn color(tag: &str) -> &'static str {
    COLORS.iter().find(|c| c.0 == tag).map_or("black", |c| c.1)
}

fn label(tag: &str) -> String {
    tag.to_ascii_uppercase()
}

/// Incremental cost against incremental QALYs per draw, with the
/// willingness-to-pay line and the region under it shaded.
pub fn ce_plane_plot(results: &[(&str, &CeaResult)], k: f64) -> Plot {
    let all_e: Vec<f64> = results.iter().flat_map(|r| r.1.delta_e.iter().copied()).chain([0.0]).collect();
    let all_c: Vec<f64> = results.iter().flat_map(|r| r.1.delta_c.iter().copied()).chain([0.0]).collect();
    let span = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let pad = 0.05 * (hi - lo).max(1.0);
        (lo - pad, hi + pad)
    };
    let (x0, x1) = span(&all_e);
    let (y0, y1) = span(&all_c);
    let mut plot = Plot::new("Cost-effectiveness plane", "incremental QALYs", "incremental cost (GBP)");
    plot.x_range = Some((x0, x1));
    plot.y_range = Some((y0, y1));
    plot = plot
        .with(Series::new("", vec![(x0, k * x0), (x1, k * x1), (x1, y0), (x0, y0)], "#999999", Style::Fill))
        .with(Series::new(format!("k = {k}"), vec![(x0, k * x0), (x1, k * x1)], "#777777", Style::Dashed));
    for (tag, r) in results {
        let pts = r.delta_e.iter().copied().zip(r.delta_c.iter().copied()).collect();
        plot = plot.with(Series::new(label(tag), pts, color(tag), Style::Points));
        plot = plot.with(Series::new("", vec![(r.mean_delta_e, r.mean_delta_c)], "black", Style::Points));
    }
    plot
}

pub fn ceac_plot(results: &[(&str, &CeaResult)]) -> Plot {
    let mut plot = Plot::new("Cost-effectiveness acceptability curve", "willingness to pay (GBP/QALY)", "probability");
    plot.y_range = Some((0.0, 1.02));
    for (tag, r) in results {
        let pts = r.wtp.iter().copied().zip(r.ceac.iter().copied()).collect();
        plot = plot.with(Series::new(label(tag), pts, color(tag), Style::Line));
    }
    plot
}

pub fn evpi_plot(results: &[(&str, &CeaResult)]) -> Plot {
    let mut plot = Plot::new("Population EVPI", "willingness to pay (GBP/QALY)", "EVPI (GBP)");
    for (tag, r) in results {
        let pts = r.evpi.iter().map(|p| (p.k, p.population)).collect();
        plot = plot.with(Series::new(label(tag), pts, color(tag), Style::Line));
    }
    plot
}

/// Four panels, one per alive state of high-risk females under the status
/// quo: the deterministic trajectory and each Bayesian posterior mean with
/// its 95% band.
pub fn comparison_plot(dode: Option<&Trajectory>, fits: &[(&str, &PosteriorDraws)]) -> String {
    let st = Stratum::FEMALE_HIGH;
    let iv = Intervention::StatusQuo;
    let panels: Vec<Plot> = HealthState::ALIVE
        .iter()
        .map(|&hs| {
            let mut plot = Plot::new(format!("High-risk females: {hs}"), "year", "persons");
            for (tag, d) in fits {
                let mean = d.mean_series(iv, st, hs);
                let x: Vec<f64> = (1..=mean.len()).map(|y| y as f64).collect();
                let lo = d.quantile_series(iv, st, hs, 0.025);
                let hi = d.quantile_series(iv, st, hs, 0.975);
                plot = plot.with(Series::band("", &x, &lo, &hi, color(tag)));
                plot =
                    plot.with(Series::new(label(tag), x.iter().copied().zip(mean).collect(), color(tag), Style::Line));
            }
            if let Some(t) = dode {
                let s = t.series(st, hs);
                let pts = s.iter().enumerate().map(|(i, v)| ((i + 1) as f64, *v)).collect();
                plot = plot.with(Series::new("DODE", pts, color("dode"), Style::Dashed));
            }
            plot
        })
        .collect();
    svg::grid(&panels, 2)
}

fn bayes_icer_row(tag: &str, r: &CeaResult) -> IcerRow {
    let ratios: Vec<f64> = r.delta_c.iter().zip(&r.delta_e).map(|(c, e)| c / e).filter(|x| x.is_finite()).collect();
    let q = |p| (!ratios.is_empty()).then(|| stats::quantile(&ratios, p));
    IcerRow {
        model: tag.into(),
        icer: r.icer,
        mean_delta_c: r.mean_delta_c,
        mean_delta_e: r.mean_delta_e,
        lower: q(0.025),
        upper: q(0.975),
    }
}

fn dode_icer_row(d: &DodeResult) -> IcerRow {
    IcerRow {
        model: "dode".into(),
        icer: d.scenarios.point,
        mean_delta_c: d.outcome.delta_c(),
        mean_delta_e: d.outcome.delta_e(),
        lower: d.scenarios.lower,
        upper: d.scenarios.upper,
    }
}

/// Runs `command` and writes its artefacts and `manifest.json` to `out`.
/// `engine` restricts `cea` to one model; other commands ignore it.
pub fn run(
    command: Command,
    cfg: &PipelineConfig,
    out: &Path,
    engine: Option<Engine>,
) -> Result<RunManifest, PipelineError> {
    cfg.validate()?;
    fs::create_dir_all(out).map_err(|e| PipelineError::Output { path: out.display().to_string(), source: e })?;
    let mut run = Run {
        cfg,
        out: out.to_path_buf(),
        stages: Vec::new(),
        outputs: Vec::new(),
        warnings: Vec::new(),
        runtime: None,
    };
    let evidence = run.evidence()?;
    match command {
        Command::Simulate => {
            let paths = io::write_evidence(out, &evidence)?;
            run.record(paths);
        }
        Command::CalibrateDode => {
            let d = run.calibrate_dode(&evidence)?;
            run.write_rows("icer_table.csv", &[dode_icer_row(&d)])?;
        }
        Command::FitBode | Command::FitBmm => {
            let engine = if command == Command::FitBode { Engine::Ode } else { Engine::Markov };
            run.fit(&evidence, engine)?;
        }
        Command::Cea => {
            let engines = engine.map_or(vec![Engine::Markov, Engine::Ode], |e| vec![e]);
            let mut results = Vec::new();
            for e in engines {
                let fit = run.fit(&evidence, e)?;
                let r = run.cea(&fit.draws, model_tag(e))?;
                run.cea_figures(&[(model_tag(e), &r)], &format!("_{}", model_tag(e)))?;
                results.push((model_tag(e), r));
            }
            let rows: Vec<IcerRow> = results.iter().map(|(t, r)| bayes_icer_row(t, r)).collect();
            run.write_rows("icer_table.csv", &rows)?;
        }
        Command::Compare => {
            let dode = run.calibrate_dode(&evidence)?;
            let bmm = run.fit(&evidence, Engine::Markov)?;
            let bode = run.fit(&evidence, Engine::Ode)?;
            run.runtime = Some(RuntimeReport {
                bmm_seconds: bmm.sampling_seconds,
                bode_seconds: bode.sampling_seconds,
                speedup: bode.sampling_seconds / bmm.sampling_seconds,
                draws_per_chain: cfg.mcmc.burn_in + cfg.mcmc.n_keep,
                chains: cfg.mcmc.n_chains,
            });
            let r_bmm = run.cea(&bmm.draws, "bmm")?;
            let r_bode = run.cea(&bode.draws, "bode")?;
            let both = [("bmm", &r_bmm), ("bode", &r_bode)];
            run.cea_figures(&both, "")?;
            let fig = comparison_plot(Some(&dode.trajectories[0]), &[("bmm", &bmm.draws), ("bode", &bode.draws)]);
            run.write_text("trajectories_high_risk_females.svg", &fig)?;
            let rows = vec![dode_icer_row(&dode), bayes_icer_row("bmm", &r_bmm), bayes_icer_row("bode", &r_bode)];
            run.write_rows("icer_table.csv", &rows)?;
        }
    }
    finish(run, command, out)
}

fn finish(run: Run<'_>, command: Command, out: &Path) -> Result<RunManifest, PipelineError> {
    let effective_config = run.cfg.to_toml();
    let mut outputs = Vec::new();
    for p in &run.outputs {
        let bytes = fs::read(p).map_err(|e| PipelineError::Output { path: p.display().to_string(), source: e })?;
        let rel = p.strip_prefix(out).unwrap_or(p).display().to_string();
        outputs.push(OutputFile { path: rel, bytes: bytes.len() as u64, sha256: sha256_hex(&bytes) });
    }
    let version = env!("CARGO_PKG_VERSION").to_string();
    let versions = ["model", "ode", "markov", "bayes", "calibrate", "econ", "datasim", "pipeline"]
        .iter()
        .map(|m| (m.to_string(), version.clone()))
        .collect();
    let manifest = RunManifest {
        command: command.name().into(),
        config_hash: sha256_hex(effective_config.as_bytes()),
        seed: run.cfg.seed,
        versions,
        stages: run.stages,
        outputs,
        runtime: run.runtime,
        warnings: run.warnings,
        effective_config,
    };
    let p = out.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serialises") + "\n";
    fs::write(&p, text).map_err(|e| PipelineError::Output { path: p.display().to_string(), source: e })?;
    Ok(manifest)
}

/// Runs `f` on a thread pool capped at `workers` threads, or on the global
/// pool when `None`.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, PipelineError> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(config_err("--workers", "must be at least 1")),
        Some(n) => {
            let pool =
                rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(|e| config_err("--workers", e))?;
            Ok(pool.install(f))
        }
    }
}
