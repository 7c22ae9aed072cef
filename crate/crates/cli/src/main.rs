//! Command-line front end: scenario runs, the reference table, sweeps,
//! parameter inference and simulated tomography.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use pmd_entangle::experiment::{
    evaluate_model, load_config, run_scenario, run_table1_report, select_scenario, sweep,
    write_sweep_csv, ParameterMode, Preset, Scenario, SweepParam, Table1Report, TomographyConfig,
};
use pmd_entangle::measures::infer_effective_parameters;
use pmd_entangle::tomography::{
    read_counts_csv, reconstruct_run, simulate_counts, standard_settings, write_counts_csv,
};
use pmd_entangle::{Error, Result};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "pmd-entangle",
    version,
    about = "Entanglement distribution through correlated PMD channels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Effective,
    Physical,
}

impl From<ModeArg> for ParameterMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Effective => ParameterMode::Effective,
            ModeArg::Physical => ParameterMode::Physical,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ParamArg {
    K,
    Length,
    Pump,
}

impl From<ParamArg> for SweepParam {
    fn from(p: ParamArg) -> Self {
        match p {
            ParamArg::K => SweepParam::K,
            ParamArg::Length => SweepParam::FiberLength,
            ParamArg::Pump => SweepParam::PumpWidth,
        }
    }
}

/// Where the scenario comes from. A config file wins over presets; with a
/// file, `--scenario` picks by name, otherwise it names a preset.
#[derive(clap::Args)]
struct ScenarioArgs {
    /// JSON config holding one scenario or {"scenarios": [...]}.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario name (loc, nl1, nl2 for presets).
    #[arg(long)]
    scenario: Option<String>,
    /// Parameter mode for presets.
    #[arg(long, value_enum, default_value = "effective")]
    mode: ModeArg,
}

impl ScenarioArgs {
    fn resolve(&self, default_preset: Preset) -> Result<Scenario> {
        match &self.config {
            Some(path) => select_scenario(load_config(path)?, self.scenario.as_deref()),
            None => {
                let preset = match &self.scenario {
                    Some(name) => Preset::from_name(name).ok_or_else(|| {
                        Error::config("scenario", format!("unknown preset `{name}`"))
                    })?,
                    None => default_preset,
                };
                Ok(Scenario::preset(preset, self.mode.into()))
            }
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Propagate |Φ+> through one scenario and report the figures of merit.
    Run {
        #[command(flatten)]
        source: ScenarioArgs,
        /// Overrides the tomography seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Write the JSON result here instead of stdout.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Effective-parameter reproduction of the reference table.
    Table1 {
        /// Write JSON here ("-" for stdout) instead of the text table.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Sweep one parameter and emit plot-ready CSV.
    Sweep {
        #[arg(long, value_enum)]
        param: ParamArg,
        #[arg(long, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, allow_negative_numbers = true)]
        to: f64,
        #[arg(long)]
        steps: usize,
        /// Output file; stdout when omitted.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        source: ScenarioArgs,
    },
    /// Infer effective C11τ² and K from one-arm and two-arm entanglement.
    Fit {
        #[arg(long)]
        e_loc: f64,
        #[arg(long)]
        e_nl: f64,
    },
    /// Simulate (or import) tomography counts for a scenario and reconstruct.
    Tomo {
        #[command(flatten)]
        source: ScenarioArgs,
        #[arg(long)]
        seed: Option<u64>,
        /// Export the counts used for reconstruction.
        #[arg(long)]
        counts_out: Option<PathBuf>,
        /// Reconstruct from these counts instead of simulating.
        #[arg(long)]
        counts_in: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f =
        File::create(path).map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
    Ok(BufWriter::new(f))
}

fn emit_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match path {
        Some(p) if p != Path::new("-") => {
            let mut w = create(p)?;
            w.write_all(text.as_bytes())?;
            w.flush()?;
        }
        _ => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn print_table(report: &Table1Report) {
    println!(
        "{:<4} {:>8} {:>8} {:>9} {:>9} {:>8} {:>4} {:>8} {:>8} {:>8}",
        "ch",
        "E(100m)",
        "F(100m)",
        "C11tau2",
        "K_eff",
        "R",
        "R_fl",
        "E_model",
        "F_model",
        "S_model"
    );
    for r in &report.rows {
        let k = r.k_effective.map_or("-".to_string(), |k| format!("{k:.4}"));
        println!(
            "{:<4} {:>8} {:>8} {:>9.4} {:>9} {:>8.3} {:>4} {:>8.4} {:>8.4} {:>8.4}",
            r.channel.name(),
            format!("{:.2}", r.measured.e_100m.value),
            format!("{:.2}", r.measured.f_100m.value),
            r.c11_tau_sq,
            k,
            r.r_from_entanglements,
            r.r_floor,
            r.model_entanglement,
            r.model_fidelity,
            r.model_chsh,
        );
        for n in &r.notes {
            println!("     note: {n}");
        }
    }
    for c in &report.checks {
        println!(
            "[{}] {} ({})",
            if c.passed { "ok" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
}

fn tomography_config(s: &Scenario, seed: Option<u64>) -> TomographyConfig {
    let mut t = s
        .tomography
        .or(Scenario::preset(Preset::Nl2, ParameterMode::Effective).tomography)
        .expect("presets carry a tomography block");
    if let Some(seed) = seed {
        t.seed = seed;
    }
    t
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run { source, seed, json } => {
            let mut s = source.resolve(Preset::Nl2)?;
            if let (Some(seed), Some(t)) = (seed, s.tomography.as_mut()) {
                t.seed = seed;
            }
            let result = run_scenario(&s)?;
            emit_json(&result, json.as_deref())?;
            if json.as_deref().is_some_and(|p| p != Path::new("-")) {
                println!(
                    "{}: E = {:.6}, F = {:.6}, S = {:.6}",
                    result.name,
                    result.entanglement_model,
                    result.fidelity_model,
                    result.chsh_model
                );
            }
        }
        Command::Table1 { json } => {
            let report = run_table1_report()?;
            match json {
                Some(p) => emit_json(&report, Some(&p))?,
                None => print_table(&report),
            }
        }
        Command::Sweep {
            param,
            from,
            to,
            steps,
            csv,
            source,
        } => {
            let base = source.resolve(Preset::Nl2)?;
            base.validate()?;
            let rows = sweep(param.into(), from, to, steps, &base)?;
            match csv {
                Some(p) => write_sweep_csv(create(&p)?, param.into(), &rows)?,
                None => write_sweep_csv(io::stdout().lock(), param.into(), &rows)?,
            }
        }
        Command::Fit { e_loc, e_nl } => {
            emit_json(&infer_effective_parameters(e_loc, e_nl)?, None)?;
        }
        Command::Tomo {
            source,
            seed,
            counts_out,
            counts_in,
            json,
        } => {
            let s = source.resolve(Preset::Nl2)?;
            s.validate()?;
            let t = tomography_config(&s, seed);
            let settings = standard_settings();
            let counts = match &counts_in {
                Some(p) => {
                    let f = File::open(p)
                        .map_err(|e| Error::config(p.display().to_string(), e.to_string()))?;
                    read_counts_csv(f, &settings)?
                }
                None => simulate_counts(
                    &evaluate_model(&s)?.state,
                    &settings,
                    t.n_per_setting,
                    t.seed,
                )?,
            };
            if let Some(p) = &counts_out {
                let labels: Vec<String> = settings.iter().map(|s| s.label.clone()).collect();
                write_counts_csv(create(p)?, &labels, &counts)?;
            }
            let run = reconstruct_run(
                &settings,
                counts,
                t.n_per_setting,
                t.n_resamples,
                t.seed,
                t.estimator,
            )?;
            emit_json(&run, json.as_deref())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 1 } else { 2 })
        }
    }
}
