//! The five subcommands. Each resolves its inputs, runs the harness and
//! writes its outputs under the run's output directory.

use std::io::Write;
use std::path::{Path, PathBuf};

use gftlqr_core::evo::encode_constant_gft;
use gftlqr_core::fuzzy::control_surface;
use gftlqr_core::gft::FIS_NAMES;
use gftlqr_core::harness::robustness::{robustness_mc, RobustnessConfig, RobustnessSummary};
use gftlqr_core::harness::scenario::build_scenarios;
use gftlqr_core::harness::{
    case_cost, evaluate_cases, mean_relative_cost, optimize_baseline, simulate_case, BaselineLaw,
    CaseEvaluation, ControlLaw, GftLaw, HarnessError, StaticLqr,
};
use gftlqr_core::{BaselineStore, ManipulatorParams, ScenarioCase};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::files::{
    load_controller, load_current_baselines, save_controller, to_canonical_json, write_text,
    ControllerFile, CsvText, TrainingMeta, CONTROLLER_FORMAT,
};

pub const BASELINES_FILE: &str = "baselines.json";
pub const CONTROLLER_FILE: &str = "controller.json";
pub const HISTORY_FILE: &str = "history.csv";
pub const ROBUSTNESS_FILE: &str = "robustness.json";
pub const DRAWS_FILE: &str = "robustness_draws.csv";

/// Validated configuration plus everything derived from it.
pub struct Context {
    pub config: RunConfig,
    pub params: ManipulatorParams,
    pub cases: Vec<ScenarioCase>,
    pub digest: String,
    /// Progress and tables go here; tests pass a sink.
    pub log: Box<dyn Write + Send>,
}

impl Context {
    pub fn new(config: RunConfig, log: Box<dyn Write + Send>) -> Result<Self, CliError> {
        config.validate()?;
        Ok(Self {
            params: config.params.params()?,
            cases: config.scenarios.resolve()?,
            digest: config.digest(),
            config,
            log,
        })
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.config.out_dir.join(name)
    }

    fn say(&mut self, line: impl AsRef<str>) {
        // Logging is best effort.
        let _ = writeln!(self.log, "{}", line.as_ref());
    }

    fn baselines(&self, path: Option<&Path>) -> Result<BaselineStore, CliError> {
        let default = self.out(BASELINES_FILE);
        load_current_baselines(path.unwrap_or(&default), &self.digest)
    }
}

fn missing_baseline(err: HarnessError) -> CliError {
    match err {
        HarnessError::MissingBaseline(ids) => {
            CliError::Validation(format!("no cached baseline for case ids {ids:?}"))
        }
        other => CliError::Runtime(other.to_string()),
    }
}

fn deg(pair: (f64, f64)) -> String {
    format!("({:.0}°, {:.0}°)", pair.0, pair.1)
}

/// Optimizes static LQR weights for every selected case.
pub fn cmd_baseline(ctx: &mut Context, force: bool) -> Result<BaselineStore, CliError> {
    let path = ctx.out(BASELINES_FILE);
    if path.exists() && !force {
        return Err(CliError::Validation(format!(
            "{} already exists; pass --force to overwrite",
            path.display()
        )));
    }
    let mut store = BaselineStore {
        config_digest: ctx.digest.clone(),
        seed: ctx.config.seed,
        records: Default::default(),
    };
    ctx.say(format!("{:>4}  {:<14} {:<14} {:>10}  q", "case", "initial", "target", "cost"));
    for case in ctx.cases.clone() {
        let rec = optimize_baseline(&case, &ctx.params, &ctx.config.sim, &ctx.config.baseline_ga)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        ctx.say(format!(
            "{:>4}  {:<14} {:<14} {:>10.5}  [{:.4e}, {:.4e}, {:.4e}, {:.4e}]",
            case.id,
            deg(case.initial_degrees()),
            deg(case.target_degrees()),
            rec.cost,
            rec.q[0],
            rec.q[1],
            rec.q[2],
            rec.q[3]
        ));
        if !rec.cost.is_finite() {
            return Err(CliError::Runtime(format!("case {}: non-finite baseline cost", case.id)));
        }
        store.records.insert(case.id, rec);
    }
    write_text(&path, &to_canonical_json(&store))?;
    ctx.say(format!("wrote {}", path.display()));
    Ok(store)
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub file: ControllerFile,
    pub evaluations: Vec<CaseEvaluation>,
}

/// Trains the fuzzy tree on the selected cases against cached baselines.
///
/// The initial population is seeded with constant-weight trees built from
/// each case's baseline weights, so training starts from the static designs.
pub fn cmd_train(ctx: &mut Context, baselines: Option<&Path>) -> Result<TrainSummary, CliError> {
    let store = ctx.baselines(baselines)?;
    let missing = store.missing(&ctx.cases);
    if !missing.is_empty() {
        return Err(missing_baseline(HarnessError::MissingBaseline(missing)));
    }
    let seeds: Vec<_> = ctx
        .cases
        .iter()
        .filter_map(|c| store.records.get(&c.id))
        .map(|r| encode_constant_gft(r.q))
        .collect();
    let ga = ctx.config.train_ga.clone();
    let mut history = CsvText::new(&ctx.digest, ctx.config.seed, &["generation", "best", "mean"]);
    let outcome = {
        let log = &mut ctx.log;
        gftlqr_core::harness::train_gft(
            &ctx.cases,
            &ctx.params,
            &ctx.config.sim,
            &ga,
            &store,
            &seeds,
            |rec| {
                history.row([rec.generation.to_string(), rec.best_cost.to_string(), rec.mean_cost.to_string()]);
                let _ = writeln!(log, "generation {:>5}  best {:.6}  mean {:.6}", rec.generation, rec.best_cost, rec.mean_cost);
            },
        )
        .map_err(missing_baseline)?
    };

    let law = GftLaw {
        controller: &outcome.controller,
        model: ctx.params,
        limits: ctx.config.sim.limits(&ctx.params),
    };
    let evaluations = evaluate_cases(&law, &ctx.cases, &ctx.params, &ctx.config.sim, &store)
        .map_err(missing_baseline)?;
    let final_cost = mean_relative_cost(&evaluations);

    let file = ControllerFile {
        format: CONTROLLER_FORMAT.into(),
        config_digest: ctx.digest.clone(),
        seed: ctx.config.seed,
        controller: outcome.controller.clone(),
        training: Some(TrainingMeta {
            final_cost,
            generations: ga.n_generations,
            population_size: ga.population_size,
            n_islands: ga.n_islands,
            cases: ctx.cases.iter().map(|c| c.id).collect(),
        }),
    };
    save_controller(&ctx.out(CONTROLLER_FILE), &file)?;
    write_text(&ctx.out(HISTORY_FILE), &history.into_string())?;

    ctx.say(format!("{:>4} {:>10} {:>10} {:>9}  win", "case", "gft", "baseline", "relative"));
    for e in &evaluations {
        ctx.say(format!(
            "{:>4} {:>10.5} {:>10.5} {:>9.4}  {}",
            e.case_id,
            e.cost,
            e.baseline_cost,
            e.relative_cost,
            if e.wins() { "yes" } else { "no" }
        ));
    }
    let wins = evaluations.iter().filter(|e| e.wins()).count();
    ctx.say(format!(
        "mean relative cost {final_cost:.6}; beats baseline on {wins} of {} cases",
        evaluations.len()
    ));
    Ok(TrainSummary { file, evaluations })
}

/// Which controller to run in `simulate`.
#[derive(Debug, Clone, PartialEq)]
pub enum ControllerChoice {
    Baseline,
    File(PathBuf),
}

impl ControllerChoice {
    pub fn parse(s: &str) -> Self {
        if s == "baseline" {
            Self::Baseline
        } else {
            Self::File(PathBuf::from(s))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulateSummary {
    pub case_id: u32,
    pub settled: bool,
    pub settle_time: f64,
    pub iac: [f64; 2],
    pub cost: f64,
    pub rows: usize,
}

/// Simulates one case and writes its trajectory.
pub fn cmd_simulate(
    ctx: &mut Context,
    choice: &ControllerChoice,
    case_id: u32,
    baselines: Option<&Path>,
) -> Result<(PathBuf, SimulateSummary), CliError> {
    let case = build_scenarios()
        .into_iter()
        .find(|c| c.id == case_id)
        .ok_or_else(|| CliError::Validation(format!("unknown case id {case_id} (valid: 0-87)")))?;
    let limits = ctx.config.sim.limits(&ctx.params);
    let (label, result) = match choice {
        ControllerChoice::Baseline => {
            let store = ctx.baselines(baselines)?;
            let rec = store.records.get(&case_id).ok_or_else(|| {
                CliError::Validation(format!("no cached baseline for case ids [{case_id}]"))
            })?;
            let law = StaticLqr {
                gain: rec.gain(),
                limits,
            };
            ("baseline", simulate_case(&law, &case, &ctx.params, &ctx.config.sim))
        }
        ControllerChoice::File(path) => {
            let file = load_controller(path)?;
            let law = GftLaw {
                controller: &file.controller,
                model: ctx.params,
                limits,
            };
            ("gft", simulate_case(&law, &case, &ctx.params, &ctx.config.sim))
        }
    };

    let mut csv = CsvText::new(
        &ctx.digest,
        ctx.config.seed,
        &["t", "theta1", "theta2", "omega1", "omega2", "tau1", "tau2"],
    );
    for s in &result.trajectory {
        let x = s.state;
        csv.row([s.t, x.theta1, x.theta2, x.omega1, x.omega2, s.tau[0], s.tau[1]]);
    }
    let path = ctx.out(&format!("trajectory_case{case_id}_{label}.csv"));
    write_text(&path, &csv.into_string())?;

    let summary = SimulateSummary {
        case_id,
        settled: result.settled,
        settle_time: result.settle_time,
        iac: result.iac,
        cost: case_cost(&result, &ctx.params, &ctx.config.sim),
        rows: result.trajectory.len(),
    };
    ctx.say(format!(
        "case {case_id} [{label}] settled={} T_s={:.4} IAC=({:.4}, {:.4}) cost={:.6}",
        summary.settled, summary.settle_time, summary.iac[0], summary.iac[1], summary.cost
    ));
    Ok((path, summary))
}

/// Samples one FIS of a controller on a square grid.
pub fn cmd_surface(
    ctx: &mut Context,
    controller: &Path,
    fis_name: &str,
    grid_n: usize,
) -> Result<PathBuf, CliError> {
    if grid_n < 2 {
        return Err(CliError::Validation("--grid must be at least 2".into()));
    }
    let file = load_controller(controller)?;
    let fis = file.controller.fis(fis_name).ok_or_else(|| {
        CliError::Validation(format!(
            "unknown FIS `{fis_name}`; valid names: {}",
            FIS_NAMES.join(", ")
        ))
    })?;
    let grid = control_surface(fis, grid_n);
    let mut csv = CsvText::new(&ctx.digest, ctx.config.seed, &["in1", "in2", "out"]);
    for (i, &x) in grid.axis.iter().enumerate() {
        for (j, &y) in grid.axis.iter().enumerate() {
            csv.row([x, y, grid.at(i, j)]);
        }
    }
    let path = ctx.out(&format!("surface_{fis_name}.csv"));
    write_text(&path, &csv.into_string())?;
    let (lo, hi) = grid
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    ctx.say(format!(
        "{fis_name}: bounds [{}, {}], sampled range [{lo}, {hi}] -> {}",
        fis.out_lo,
        fis.out_hi,
        path.display()
    ));
    Ok(path)
}

/// Success rates published for the full-scale experiment, reported for
/// comparison only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FullScaleReference {
    pub draws: usize,
    pub gft_success_rate: f64,
    pub baseline_success_rate: f64,
}

pub const FULL_SCALE_REFERENCE: FullScaleReference = FullScaleReference {
    draws: 1_001_088,
    gft_success_rate: 1.0,
    baseline_success_rate: 0.898,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessFile {
    pub config_digest: String,
    pub seed: u64,
    pub n_per_case: usize,
    pub width: f64,
    pub cases: Vec<u32>,
    /// Controller order used in `summary`.
    pub controllers: [String; 2],
    pub summary: RobustnessSummary,
    pub reference_full_scale: FullScaleReference,
}

/// Monte Carlo comparison of the trained tree and the per-case baselines.
pub fn cmd_robustness(
    ctx: &mut Context,
    controller: &Path,
    baselines: Option<&Path>,
) -> Result<RobustnessFile, CliError> {
    let store = ctx.baselines(baselines)?;
    let missing = store.missing(&ctx.cases);
    if !missing.is_empty() {
        return Err(missing_baseline(HarnessError::MissingBaseline(missing)));
    }
    let file = load_controller(controller)?;
    let limits = ctx.config.sim.limits(&ctx.params);
    let gft = GftLaw {
        controller: &file.controller,
        model: ctx.params,
        limits,
    };
    let baseline = BaselineLaw {
        gains: store.gains(),
        limits,
    };
    let rcfg: RobustnessConfig = ctx.config.robustness;
    let laws: [&dyn ControlLaw; 2] = [&gft, &baseline];
    let report = robustness_mc(laws, &ctx.cases, &ctx.params, &ctx.config.sim, &rcfg);

    let mut csv = CsvText::new(
        &ctx.digest,
        ctx.config.seed,
        &[
            "case_id", "draw", "f_m1", "f_m2", "f_l1", "f_l2", "gft_settled", "gft_ts", "gft_iac1",
            "gft_iac2", "gft_var1", "gft_var2", "lqr_settled", "lqr_ts", "lqr_iac1", "lqr_iac2",
            "lqr_var1", "lqr_var2",
        ],
    );
    for d in &report.draws {
        let mut fields = vec![d.case_id.to_string(), d.draw.to_string()];
        fields.extend(d.factors.iter().map(|f| f.to_string()));
        for o in &d.outcomes {
            fields.push(u8::from(o.settled).to_string());
            fields.extend(
                [o.settle_time, o.iac[0], o.iac[1], o.control_variance[0], o.control_variance[1]]
                    .iter()
                    .map(|v| v.to_string()),
            );
        }
        csv.row(fields);
    }
    write_text(&ctx.out(DRAWS_FILE), &csv.into_string())?;

    let out = RobustnessFile {
        config_digest: ctx.digest.clone(),
        seed: ctx.config.seed,
        n_per_case: rcfg.n_per_case,
        width: rcfg.width,
        cases: ctx.cases.iter().map(|c| c.id).collect(),
        controllers: ["gft".into(), "baseline".into()],
        summary: report.summary,
        reference_full_scale: FULL_SCALE_REFERENCE,
    };
    write_text(&ctx.out(ROBUSTNESS_FILE), &to_canonical_json(&out))?;
    let s = &out.summary;
    ctx.say(format!(
        "{} draws: gft success {:.4}, baseline success {:.4}, mutually successful {}",
        s.total_draws, s.success_rate[0], s.success_rate[1], s.mutual_successes
    ));
    ctx.say(format!(
        "full-scale reference ({} draws): gft {:.3}, baseline {:.3}",
        FULL_SCALE_REFERENCE.draws,
        FULL_SCALE_REFERENCE.gft_success_rate,
        FULL_SCALE_REFERENCE.baseline_success_rate
    ));
    Ok(out)
}
