use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ircost::error::{Error, Result};
use ircost::fixture::load_fixture;
use ircost::harness::{harness, harnesses};
use ircost::model::{check_mapping, load_mapping, load_model};
use ircost::report::{analyze_module, args_report, cfg_report, compare, simulate, solve_system, to_json};
use ircost::{load_crs, load_module};
use ircost_core::energy::{EnergyModel, GroupModel};
use ircost_core::interp::Fixture;
use ircost_core::num::BigInt;
use ircost_core::solver::EvalMode;
use ircost_core::IrModule;

#[derive(Parser)]
#[command(name = "ircost", version, about = "Static energy analysis of mini-IR programs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Worst,
    Deterministic,
}

#[derive(Subcommand)]
enum Cmd {
    /// Derive closed-form energy formulas for every function of a module.
    Analyze {
        file: PathBuf,
        /// Energy model JSON; the unit group model when omitted.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Mapping file pricing individual IR sites; replaces --model.
        #[arg(long)]
        mapping: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Print the inferred block arguments as JSON instead of the report.
        #[arg(long)]
        dump_args: bool,
        /// Also write the cost relations as JSON to this file.
        #[arg(long)]
        emit_crs: Option<PathBuf>,
    },
    /// Solve a cost relation system given as JSON or text.
    Solve {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Evaluate this relation numerically as well.
        #[arg(long)]
        relation: Option<String>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        args: Vec<i64>,
        #[arg(long, value_enum, default_value = "worst")]
        mode: Mode,
    },
    /// Run a function in the reference interpreter.
    Simulate {
        file: PathBuf,
        #[arg(long = "fn")]
        function: String,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        args: Vec<i64>,
        /// Memory fixture JSON.
        #[arg(long)]
        memory: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        mapping: Option<PathBuf>,
        /// Replay the graphs with nested loops extracted.
        #[arg(long)]
        extracted: bool,
        /// Include the full block trace.
        #[arg(long)]
        trace: bool,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Compare a formula with interpreted runs over a parameter sweep.
    Compare {
        file: PathBuf,
        /// Input builder; one of the corpus harnesses.
        #[arg(long)]
        harness: String,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        mapping: Option<PathBuf>,
        /// `NAME=LO..HI`, once per sweep coordinate.
        #[arg(long, required = true)]
        sweep: Vec<String>,
        /// Seeded random inputs per point besides the worst case.
        #[arg(long, default_value_t = 0)]
        random: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Print control-flow graphs and loops.
    DumpCfg {
        file: PathBuf,
        #[arg(long = "fn")]
        function: Option<String>,
        /// Show the graphs after loop extraction.
        #[arg(long)]
        extracted: bool,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

fn pipeline_error(path: &Path) -> impl Fn(ircost_core::PipelineError) -> Error + '_ {
    move |source| Error::Pipeline { path: path.to_path_buf(), source }
}

fn pick_model(module: &IrModule, model: Option<&Path>, mapping: Option<&Path>) -> Result<EnergyModel> {
    if let Some(p) = mapping {
        let m = load_mapping(p)?;
        check_mapping(&m, module).map_err(|e| Error::Model { path: p.to_path_buf(), message: e.0 })?;
        return Ok(EnergyModel::Mapping(m));
    }
    match model {
        Some(p) => {
            let m = load_model(p)?;
            if let EnergyModel::Mapping(mm) = &m {
                check_mapping(mm, module).map_err(|e| Error::Model { path: p.to_path_buf(), message: e.0 })?;
            }
            Ok(m)
        }
        None => Ok(EnergyModel::Group(GroupModel::unit())),
    }
}

fn parse_sweep(specs: &[String], names: &[&str]) -> Result<Vec<Vec<i64>>> {
    let mut ranges = Vec::new();
    for n in names {
        let spec = specs
            .iter()
            .find_map(|s| s.strip_prefix(&format!("{}=", n)))
            .ok_or_else(|| Error::Usage(format!("missing --sweep {}=LO..HI", n)))?;
        let bad = || Error::Usage(format!("bad sweep range `{}`", spec));
        let (lo, hi) = match spec.split_once("..") {
            Some((a, b)) => (a.trim().parse::<i64>().map_err(|_| bad())?, b.trim().parse::<i64>().map_err(|_| bad())?),
            None => {
                let v = spec.trim().parse::<i64>().map_err(|_| bad())?;
                (v, v)
            }
        };
        if lo > hi {
            return Err(bad());
        }
        ranges.push(lo..=hi);
    }
    for s in specs {
        let name = s.split('=').next().unwrap_or("");
        if !names.contains(&name) {
            return Err(Error::Usage(format!("this harness sweeps {}, not `{}`", names.join(", "), name)));
        }
    }
    let mut points: Vec<Vec<i64>> = vec![vec![]];
    for r in ranges {
        points = points.into_iter().flat_map(|p| r.clone().map(move |v| [p.clone(), vec![v]].concat())).collect();
    }
    Ok(points)
}

fn ints(v: &[i64]) -> Vec<BigInt> {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

fn emit(format: Format, text: String, json: String) {
    match format {
        Format::Text => print!("{}", text),
        Format::Json => print!("{}", json),
    }
}

fn run(cli: Cli) -> Result<i32> {
    match cli.cmd {
        Cmd::Analyze { file, model, mapping, format, dump_args, emit_crs } => {
            let module = load_module(&file)?;
            let model = pick_model(&module, model.as_deref(), mapping.as_deref())?;
            let (report, analysis, _) = analyze_module(&module, &model).map_err(pipeline_error(&file))?;
            if let Some(out) = emit_crs {
                let json = to_json(&analysis.crs);
                std::fs::write(&out, json).map_err(|source| Error::Io { path: out.clone(), source })?;
            }
            if dump_args {
                print!("{}", to_json(&args_report(&analysis)));
            } else {
                emit(format, report.to_text(), to_json(&report));
            }
            Ok(report.exit_code())
        }
        Cmd::Solve { file, format, relation, args, mode } => {
            let sys = load_crs(&file)?;
            let mode = match mode {
                Mode::Worst => EvalMode::Worst,
                Mode::Deterministic => EvalMode::Deterministic,
            };
            let args = ints(&args);
            let numeric = relation.as_deref().map(|r| (r, args.as_slice(), mode));
            let report = solve_system(&sys, numeric)?;
            emit(format, report.to_text(), to_json(&report));
            Ok(report.exit_code())
        }
        Cmd::Simulate { file, function, args, memory, model, mapping, extracted, trace, format } => {
            let module = load_module(&file)?;
            let model = pick_model(&module, model.as_deref(), mapping.as_deref())?;
            let fixture = match memory {
                Some(p) => load_fixture(&p)?,
                None => Fixture::default(),
            };
            let programs = if extracted {
                Some(ircost_core::pipeline::structure(&module).map_err(pipeline_error(&file))?.2)
            } else {
                None
            };
            let report = simulate(&module, programs.as_ref(), &function, &ints(&args), &fixture, &model, trace)?;
            emit(format, report.to_text(), to_json(&report));
            Ok(0)
        }
        Cmd::Compare { file, harness: name, model, mapping, sweep, random, seed, format } => {
            let h = harness(&name).ok_or_else(|| {
                let known: Vec<&str> = harnesses().iter().map(|h| h.name).collect();
                Error::Usage(format!("unknown harness `{}`; known: {}", name, known.join(", ")))
            })?;
            let module = load_module(&file)?;
            let model = pick_model(&module, model.as_deref(), mapping.as_deref())?;
            let points = parse_sweep(&sweep, h.sweep)?;
            let report = compare(&module, h, &model, &points, random, seed)?;
            emit(format, report.to_text(), to_json(&report));
            Ok(report.exit_code())
        }
        Cmd::DumpCfg { file, function, extracted, format } => {
            let module = load_module(&file)?;
            if let Some(f) = &function {
                if module.function(f).is_none() {
                    return Err(Error::Usage(format!("no function @{} in {}", f, file.display())));
                }
            }
            let (report, analysis, _) =
                analyze_module(&module, &EnergyModel::Group(GroupModel::unit())).map_err(pipeline_error(&file))?;
            drop(report);
            let r = cfg_report(&analysis, function.as_deref(), extracted);
            emit(format, r.to_dot(), to_json(&r));
            Ok(0)
        }
    }
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
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(1)
        }
    }
}
