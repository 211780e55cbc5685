//! Command-line surface. Every command writes its CSV outputs and a
//! `manifest.json` into the output directory.
//!
//! Exit codes: 0 ok, 1 validation failure, 2 input error, 3 numerical error.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sinhrate_core::implied::{effective_variance, effective_variance_libor, implied_hw_vol_with, implied_vol_from_variance, UnitHullWhite};
use sinhrate_core::marketcal::{calibrate, CalibrationOptions, QuoteSurface};
use sinhrate_core::oracle::{McConfig, McPayoff};
use sinhrate_core::pricing::{forward_rate, price, BondOrder, InstrumentSpec};
use sinhrate_core::{DriftOrder, Model, ModelParams, PiecewiseCurve, QuadratureSpec};

use crate::error::{CliError, CliResult};
use crate::io::{self, Cell, Table};
use crate::manifest::Manifest;
use crate::mc::par_mc_price_many;
use crate::validation::{self, ValidationConfig};

#[derive(Debug, Parser)]
#[command(name = "sinhrate", version, about = "Sinh short-rate model: pricing, calibration, surfaces and validation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Price the instruments of a CSV file.
    Price(PriceArgs),
    /// Bootstrap σ, γ, y* from a caplet vol surface.
    Calibrate(CalibrateArgs),
    /// Caplet implied-vol grid.
    Surface(SurfaceArgs),
    /// Forward rates against the factor, with the Hull-White comparison.
    Forwards(ForwardsArgs),
    /// Run the acceptance checks.
    Validate(ValidateArgs),
    /// Re-run the command recorded in a manifest and compare outputs.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftArg {
    /// `R* = R₁*`, consistent with the first-order option formulas.
    First,
    /// `R* = R₁* + R₂*`.
    Second,
}

impl From<DriftArg> for DriftOrder {
    fn from(d: DriftArg) -> Self {
        match d {
            DriftArg::First => DriftOrder::First,
            DriftArg::Second => DriftOrder::Second,
        }
    }
}

/// Quadrature and drift settings shared by the model-building commands.
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ModelArgs {
    /// Installed drift.
    #[arg(long, value_enum, default_value = "first")]
    pub drift_order: DriftArg,
    /// Gauss-Legendre nodes per panel.
    #[arg(long, default_value_t = 16)]
    pub quad_nodes: usize,
    /// Relative tolerance of adaptive quadrature.
    #[arg(long, default_value_t = 1e-10)]
    pub quad_tol: f64,
    /// Longest panel (years) of the kernel and drift tables.
    #[arg(long, default_value_t = 0.5)]
    pub max_panel_width: f64,
}

impl ModelArgs {
    fn spec(&self) -> CliResult<QuadratureSpec> {
        if self.quad_nodes < 2 || !(self.quad_tol > 0.0) || !(self.max_panel_width > 0.0) {
            return Err(CliError::input("quadrature settings must be positive (at least 2 nodes)"));
        }
        Ok(QuadratureSpec {
            nodes_per_piece: self.quad_nodes,
            target_rel_tol: self.quad_tol,
            max_panel_width: self.max_panel_width,
            ..QuadratureSpec::default()
        })
    }

    fn build(&self, params: ModelParams, horizon: f64) -> CliResult<Model> {
        Ok(Model::with_options(params, horizon, self.spec()?, self.drift_order.into())?)
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct McArgs {
    /// Monte Carlo paths.
    #[arg(long, default_value_t = 1_000_000)]
    pub paths: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 365)]
    pub steps_per_year: usize,
}

impl McArgs {
    fn config(&self) -> CliResult<McConfig> {
        if self.paths == 0 || self.steps_per_year == 0 {
            return Err(CliError::input("--paths and --steps-per-year must be positive"));
        }
        Ok(McConfig { paths: self.paths, seed: self.seed, steps_per_year: self.steps_per_year, ..McConfig::default() })
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct PriceArgs {
    /// Model directory (discount.csv, sigma.csv, alpha.csv, gamma.csv, y_star.csv).
    #[arg(long)]
    pub model: PathBuf,
    /// Instrument file `id,kind,T0,...,Tn,strike,δ1,...,δn`.
    #[arg(long)]
    pub instruments: PathBuf,
    #[arg(long, default_value = "sinhrate-out")]
    pub out: PathBuf,
    /// Add Monte Carlo prices and a 3-SE agreement flag.
    #[arg(long)]
    pub mc: bool,
    #[command(flatten)]
    pub mc_args: McArgs,
    #[command(flatten)]
    pub model_args: ModelArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CalibrateArgs {
    /// Quote file `maturity,tenor,strike,implied_vol` (Hull-White normal vols).
    #[arg(long)]
    pub quotes: PathBuf,
    /// Directory holding discount.csv and a constant alpha.csv.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value = "sinhrate-out")]
    pub out: PathBuf,
    /// Stop a bucket once its RMS vol residual is below this.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Fit with the term-rate variance instead of the compounded one.
    #[arg(long)]
    pub term_rate: bool,
    #[arg(long, default_value_t = 1.0)]
    pub gamma_min: f64,
    #[arg(long, default_value_t = 1000.0)]
    pub gamma_max: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iterations: usize,
    #[command(flatten)]
    pub model_args: ModelArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SurfaceArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value = "sinhrate-out")]
    pub out: PathBuf,
    /// Caplet period ends.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,5,7,10")]
    pub maturities: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0,0.005,0.01,0.015,0.02,0.025,0.03,0.035,0.04,0.045,0.05")]
    pub strikes: Vec<f64>,
    /// Caplet period length.
    #[arg(long, default_value_t = 0.5)]
    pub tenor: f64,
    /// Add the term-rate (LIBOR) implied vol column.
    #[arg(long)]
    pub compare_libor: bool,
    #[command(flatten)]
    pub model_args: ModelArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ForwardsArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value = "sinhrate-out")]
    pub out: PathBuf,
    /// Observation dates.
    #[arg(long, value_delimiter = ',', default_value = "1,2,5,10")]
    pub times: Vec<f64>,
    /// Forward date offset: `T = t + tenor`.
    #[arg(long, default_value_t = 0.5)]
    pub tenor: f64,
    /// Factor range in standard deviations of `y_t`.
    #[arg(long, default_value_t = 4.0)]
    pub sd_range: f64,
    #[arg(long, default_value_t = 41)]
    pub points: usize,
    #[command(flatten)]
    pub model_args: ModelArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ValidateArgs {
    /// Replace the built-in smile parameters.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value = "sinhrate-out")]
    pub out: PathBuf,
    /// 10⁵ paths instead of 10⁶.
    #[arg(long)]
    pub quick: bool,
    /// Overrides the path count implied by `--quick`.
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 365)]
    pub steps_per_year: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
}

/// Run a parsed command; `Ok` means exit code 0.
pub fn run(cmd: &Command) -> CliResult<()> {
    match cmd {
        Command::Price(a) => cmd_price(a, cmd),
        Command::Calibrate(a) => cmd_calibrate(a, cmd),
        Command::Surface(a) => cmd_surface(a, cmd),
        Command::Forwards(a) => cmd_forwards(a, cmd),
        Command::Validate(a) => cmd_validate(a, cmd),
        Command::Replay(a) => cmd_replay(a),
    }
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Price(_) => "price",
        Command::Calibrate(_) => "calibrate",
        Command::Surface(_) => "surface",
        Command::Forwards(_) => "forwards",
        Command::Validate(_) => "validate",
        Command::Replay(_) => "replay",
    }
}

fn manifest_for(cmd: &Command) -> Manifest {
    Manifest::new(command_name(cmd), serde_json::to_value(cmd).expect("command serialises"))
}

fn out_dir(p: &Path) -> CliResult<()> {
    std::fs::create_dir_all(p).map_err(|e| CliError::io(p, e))
}

fn add_model_inputs(man: &mut Manifest, dir: &Path) -> CliResult<()> {
    for f in io::MODEL_FILES {
        man.add_input(&dir.join(f))?;
    }
    Ok(())
}

fn record_model(man: &mut Manifest, m: &Model) {
    let s = m.spec();
    man.setting("horizon", m.horizon());
    man.setting("drift_order", format!("{:?}", m.drift_order()).to_lowercase());
    man.setting("quadrature.nodes_per_piece", s.nodes_per_piece);
    man.setting("quadrature.refinement_factor", s.refinement_factor);
    man.setting("quadrature.target_rel_tol", s.target_rel_tol);
    man.setting("quadrature.max_refinements", s.max_refinements);
    man.setting("quadrature.max_panel_width", s.max_panel_width);
}

fn record_mc(man: &mut Manifest, c: &McConfig) {
    man.setting("mc.paths", c.paths);
    man.setting("mc.seed", c.seed);
    man.setting("mc.steps_per_year", c.steps_per_year);
    man.setting("mc.block_pairs", c.block_pairs);
}

fn warn(msg: impl std::fmt::Display) {
    eprintln!("warning: {msg}");
}

pub fn cmd_price(a: &PriceArgs, cmd: &Command) -> CliResult<()> {
    let params = io::read_model_dir(&a.model)?;
    let instruments = io::read_instruments(&a.instruments)?;
    let mc_cfg = a.mc_args.config()?;
    out_dir(&a.out)?;
    let mut man = manifest_for(cmd);
    add_model_inputs(&mut man, &a.model)?;
    man.add_input(&a.instruments)?;

    let mut header = vec!["instrument_id", "pv", "order0", "order1", "effective_variance", "implied_hw_vol"];
    if a.mc {
        header.extend(["mc_pv", "mc_se", "mc_within_3se"]);
    }
    let mut table = Table::new(&header);
    if !instruments.is_empty() {
        let horizon = instruments.iter().map(|i| i.spec.last_date()).fold(1.0, f64::max);
        let m = a.model_args.build(params, horizon)?;
        record_model(&mut man, &m);
        let hw = UnitHullWhite::new(&m)?;
        let mc = if a.mc {
            record_mc(&mut man, &mc_cfg);
            let pay: Vec<McPayoff> = instruments.iter().map(|i| McPayoff::Instrument(i.spec.clone())).collect();
            Some(par_mc_price_many(&m, &pay, mc_cfg)?)
        } else {
            None
        };
        for (i, inst) in instruments.iter().enumerate() {
            let r = price(&m, &inst.spec).map_err(|e| CliError::Numerical(format!("{}: {e}", inst.id)))?;
            let ev = effective_variance(&m, &inst.spec)
                .map_err(|e| warn(format!("{}: no effective variance ({e})", inst.id)))
                .ok();
            let iv = implied_hw_vol_with(&hw, &m, &inst.spec, r.pv)
                .map_err(|e| warn(format!("{}: no implied vol ({e})", inst.id)))
                .ok();
            let mut row: Vec<Cell> = vec![
                inst.id.as_str().into(),
                r.pv.into(),
                r.order0.into(),
                r.order1.into(),
                ev.map(|e| e.total()).into(),
                iv.into(),
            ];
            if let Some(est) = &mc {
                let e = est[i];
                let ok = (e.mean - r.pv).abs() <= 3.0 * e.std_error;
                row.extend([e.mean.into(), e.std_error.into(), if ok { "pass" } else { "fail" }.into()]);
            }
            table.row(&row);
        }
    }
    let path = a.out.join("prices.csv");
    table.write(&path)?;
    man.add_output(&path)?;
    man.write(&a.out)?;
    Ok(())
}

/// The calibration takes a constant mean reversion.
fn constant_alpha(c: &PiecewiseCurve, path: &Path) -> CliResult<f64> {
    let v = c.values()[0];
    if c.values().iter().any(|&x| x != v) {
        return Err(CliError::input(format!("{}: calibration needs a constant alpha", path.display())));
    }
    Ok(v)
}

pub fn cmd_calibrate(a: &CalibrateArgs, cmd: &Command) -> CliResult<()> {
    let discount_path = a.model.join(io::DISCOUNT_FILE);
    let alpha_path = a.model.join(io::ALPHA_FILE);
    let discount = io::read_discount(&discount_path)?;
    let alpha = constant_alpha(&io::read_curve(&alpha_path)?, &alpha_path)?;
    let quotes = io::read_quotes(&a.quotes)?;
    let surface = QuoteSurface::new(quotes)?;
    if !(a.tol > 0.0) {
        return Err(CliError::input("--tol must be positive"));
    }
    let opts = CalibrationOptions {
        compounded: !a.term_rate,
        gamma_min: a.gamma_min,
        gamma_max: a.gamma_max,
        max_iterations: a.max_iterations,
        vol_tolerance: a.tol,
        quadrature: a.model_args.spec()?,
        drift_order: a.model_args.drift_order.into(),
        ..CalibrationOptions::default()
    };
    out_dir(&a.out)?;
    let mut man = manifest_for(cmd);
    man.add_input(&discount_path)?;
    man.add_input(&alpha_path)?;
    man.add_input(&a.quotes)?;
    man.setting("calibration.initial", opts.initial);
    let rep = calibrate(&surface, &discount, alpha, &opts)?;

    let model_dir = a.out.join("model");
    io::write_model_dir(&model_dir, &rep.params)?;
    for f in io::MODEL_FILES {
        man.add_output(&model_dir.join(f))?;
    }
    let mut res = Table::new(&["maturity", "tenor", "strike", "implied_vol", "model_vol", "residual"]);
    for (q, r) in &rep.residuals {
        res.row(&[q.maturity.into(), q.tenor.into(), q.strike.into(), q.implied_vol.into(), (q.implied_vol + r).into(), (*r).into()]);
    }
    let path = a.out.join("residuals.csv");
    res.write(&path)?;
    man.add_output(&path)?;
    let mut fits = Table::new(&["maturity", "sigma", "gamma", "y_star", "gamma_y_star", "converged", "iterations", "objective"]);
    for b in &rep.buckets {
        fits.row(&[
            b.maturity.into(),
            b.sigma.into(),
            b.gamma.into(),
            b.y_star.into(),
            (b.gamma * b.y_star).into(),
            if b.converged { "true" } else { "false" }.into(),
            (b.iterations as f64).into(),
            b.objective_history.last().copied().into(),
        ]);
        if !b.converged {
            warn(format!("bucket {} stopped without reaching --tol", b.maturity));
        }
    }
    let path = a.out.join("buckets.csv");
    fits.write(&path)?;
    man.add_output(&path)?;
    man.write(&a.out)?;
    Ok(())
}

pub fn cmd_surface(a: &SurfaceArgs, cmd: &Command) -> CliResult<()> {
    let params = io::read_model_dir(&a.model)?;
    if !(a.tenor > 0.0) || a.maturities.iter().any(|&t| !(t > a.tenor)) {
        return Err(CliError::input("need --tenor > 0 and every maturity beyond the tenor"));
    }
    if a.strikes.is_empty() || a.strikes.iter().any(|k| !k.is_finite()) {
        return Err(CliError::input("--strikes must be a non-empty list of numbers"));
    }
    let horizon = a.maturities.iter().copied().fold(1.0, f64::max);
    let m = a.model_args.build(params, horizon)?;
    let hw = UnitHullWhite::new(&m)?;
    out_dir(&a.out)?;
    let mut man = manifest_for(cmd);
    add_model_inputs(&mut man, &a.model)?;
    record_model(&mut man, &m);

    let mut header = vec!["maturity", "strike", "implied_vol", "effective_variance", "eps_diagnostic"];
    if a.compare_libor {
        header.push("libor_implied_vol");
    }
    let mut table = Table::new(&header);
    for &t in &a.maturities {
        for &k in &a.strikes {
            let spec = InstrumentSpec::rfr_caplet(t - a.tenor, t, k)?;
            let ev = effective_variance(&m, &spec)?;
            let iv = implied_vol_from_variance(&hw, &spec, ev.total())?;
            let mut row: Vec<Cell> = vec![t.into(), k.into(), iv.into(), ev.total().into(), ev.eps_diagnostic.into()];
            if a.compare_libor {
                let lspec = InstrumentSpec::libor_caplet(t - a.tenor, t, k)?;
                let lev = effective_variance_libor(&m, &lspec)?;
                row.push(implied_vol_from_variance(&hw, &lspec, lev.total())?.into());
            }
            table.row(&row);
        }
    }
    let path = a.out.join("surface.csv");
    table.write(&path)?;
    man.add_output(&path)?;
    man.write(&a.out)?;
    Ok(())
}

pub fn cmd_forwards(a: &ForwardsArgs, cmd: &Command) -> CliResult<()> {
    let params = io::read_model_dir(&a.model)?;
    if !(a.tenor > 0.0) || a.times.iter().any(|&t| !(t >= 0.0)) || a.points < 2 || !(a.sd_range > 0.0) {
        return Err(CliError::input("need --tenor > 0, times ≥ 0, --points ≥ 2 and --sd-range > 0"));
    }
    let horizon = a.times.iter().map(|t| t + a.tenor).fold(1.0, f64::max);
    let hw_params = ModelParams::new(
        params.sigma.clone(),
        params.alpha.clone(),
        PiecewiseCurve::constant(1e-8),
        PiecewiseCurve::constant(0.0),
        params.discount.clone(),
    )?;
    let m = a.model_args.build(params, horizon)?;
    let hw = a.model_args.build(hw_params, horizon)?;
    let order = match m.drift_order() {
        DriftOrder::First => BondOrder::First,
        DriftOrder::Second => BondOrder::Second,
    };
    out_dir(&a.out)?;
    let mut man = manifest_for(cmd);
    add_model_inputs(&mut man, &a.model)?;
    record_model(&mut man, &m);

    let mut table = Table::new(&["t", "y", "forward_rate", "hw_forward_rate"]);
    for &t in &a.times {
        let sd = m.origin_slice().sigma_rr(t).sqrt();
        // at t = 0 the factor is pinned at 0; use the one-year spread for the axis
        let sd = if sd > 0.0 { sd } else { m.origin_slice().sigma_rr(1.0_f64.min(horizon)).sqrt() };
        for i in 0..a.points {
            let y = a.sd_range * sd * (2.0 * i as f64 / (a.points - 1) as f64 - 1.0);
            let f = forward_rate(&m, y, t, t + a.tenor, order)?;
            let fh = forward_rate(&hw, y, t, t + a.tenor, order)?;
            table.row(&[t.into(), y.into(), f.into(), fh.into()]);
        }
    }
    let path = a.out.join("forwards.csv");
    table.write(&path)?;
    man.add_output(&path)?;
    man.write(&a.out)?;
    Ok(())
}

pub fn cmd_validate(a: &ValidateArgs, cmd: &Command) -> CliResult<()> {
    let mut cfg = if a.quick { ValidationConfig::quick() } else { ValidationConfig::default() };
    let mut man = manifest_for(cmd);
    if let Some(dir) = &a.model {
        cfg.smile = io::read_model_dir(dir)?;
        add_model_inputs(&mut man, dir)?;
    }
    if let Some(p) = a.paths {
        cfg.paths = p;
    }
    if cfg.paths == 0 || a.steps_per_year == 0 {
        return Err(CliError::input("--paths and --steps-per-year must be positive"));
    }
    cfg.seed = a.seed;
    cfg.steps_per_year = a.steps_per_year;
    out_dir(&a.out)?;
    man.setting("mc.paths", cfg.paths);
    man.setting("mc.seed", cfg.seed);
    man.setting("mc.steps_per_year", cfg.steps_per_year);

    let results = validation::run_all(&cfg);
    for r in &results {
        r.print();
    }
    let json_path = a.out.join("validation.json");
    let mut s = serde_json::to_string_pretty(&results).expect("results serialise");
    s.push('\n');
    std::fs::write(&json_path, s).map_err(|e| CliError::io(&json_path, e))?;
    let mut table = Table::new(&["id", "name", "passed", "measured", "threshold", "seconds"]);
    for r in &results {
        table.row(&[
            (r.id as f64).into(),
            r.name.as_str().into(),
            if r.passed { "true" } else { "false" }.into(),
            r.measured.into(),
            r.threshold.into(),
            r.seconds.into(),
        ]);
    }
    let csv_path = a.out.join("validation.csv");
    table.write(&csv_path)?;
    // timings make the reports run-dependent, so replay does not compare them
    man.setting("reports", [&csv_path, &json_path]);
    man.write(&a.out)?;
    let failed: Vec<String> = results.iter().filter(|r| !r.passed).map(|r| r.id.to_string()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(format!("criteria {} failed", failed.join(", "))))
    }
}

pub fn cmd_replay(a: &ReplayArgs) -> CliResult<()> {
    let man = Manifest::read(&a.manifest)?;
    let changed = man.changed_inputs()?;
    if !changed.is_empty() {
        let list: Vec<String> = changed.iter().map(|p| p.display().to_string()).collect();
        return Err(CliError::input(format!("inputs changed since the manifest was written: {}", list.join(", "))));
    }
    let cmd: Command = serde_json::from_value(man.invocation.clone())
        .map_err(|e| CliError::input(format!("{}: bad invocation: {e}", a.manifest.display())))?;
    if matches!(cmd, Command::Replay(_)) {
        return Err(CliError::input("a replay manifest cannot be replayed"));
    }
    run(&cmd)?;
    let mut differ = Vec::new();
    for f in &man.outputs {
        if crate::manifest::sha256_file(&f.path)? != f.sha256 {
            differ.push(f.path.display().to_string());
        }
    }
    if differ.is_empty() {
        println!("replay reproduced {} output file(s)", man.outputs.len());
        Ok(())
    } else {
        Err(CliError::Validation(format!("outputs differ from the manifest: {}", differ.join(", "))))
    }
}
