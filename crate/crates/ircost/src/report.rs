//! Reports produced by the command-line front end. Every report renders as
//! text or as versioned JSON; the CLI prints exactly what these functions
//! return.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use ircost_core::closed::{ClosedForm, CostExpr, Factor};
use ircost_core::costrel::CostRelationSystem;
use ircost_core::energy::EnergyModel;
use ircost_core::extract::ExtractedProgram;
use ircost_core::interp::{run, run_extracted, Fixture, RunResult};
use ircost_core::ir::Instruction;
use ircost_core::num::{fmt_decimal, BigInt, Rational};
use ircost_core::solver::{evaluate_closed_form, evaluate_numeric, solve, EvalMode, Solution};
use ircost_core::{analyze, Analysis, Cfg, IrModule, LoopForest};
use num_traits::{ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::Harness;

pub const ANALYSIS_SCHEMA: &str = "ircost.analysis/1";
pub const SOLVE_SCHEMA: &str = "ircost.solve/1";
pub const SIMULATE_SCHEMA: &str = "ircost.simulate/1";
pub const COMPARE_SCHEMA: &str = "ircost.compare/1";
pub const CFG_SCHEMA: &str = "ircost.cfg/1";
pub const ARGS_SCHEMA: &str = "ircost.args/1";

pub fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports always serialise");
    s.push('\n');
    s
}

fn approx(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, Serialize)]
pub struct FormulaReport {
    pub params: Vec<String>,
    pub text: String,
    pub ast: CostExpr,
    pub domain: Vec<String>,
}

impl FormulaReport {
    pub fn new(cf: &ClosedForm) -> Self {
        FormulaReport {
            params: cf.params.clone(),
            text: cf.to_string(),
            ast: cf.expr.clone(),
            domain: cf.domain.iter().map(|c| c.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FunctionReport {
    pub name: String,
    pub relation: String,
    pub formula: Option<FormulaReport>,
    pub unsolved: Option<String>,
    pub args: BTreeMap<String, Vec<String>>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub schema: &'static str,
    pub model: &'static str,
    /// Energy charged once per run on top of every formula.
    pub overhead: String,
    pub functions: Vec<FunctionReport>,
    pub unsolved: BTreeMap<String, String>,
    pub warnings: Vec<String>,
    pub crs: String,
}

impl AnalysisReport {
    pub fn exit_code(&self) -> i32 {
        if self.unsolved.is_empty() {
            0
        } else {
            2
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for f in &self.functions {
            let params = f.formula.as_ref().map(|x| x.params.join(", ")).unwrap_or_default();
            match (&f.formula, &f.unsolved) {
                (Some(x), _) => {
                    let _ = writeln!(out, "@{}: E({}) = {}", f.name, params, x.text);
                }
                (None, Some(why)) => {
                    let _ = writeln!(out, "@{}: no closed form: {}", f.name, why);
                }
                (None, None) => {}
            }
            for w in &f.warnings {
                let _ = writeln!(out, "  warning: {}", w);
            }
        }
        if self.overhead != "0" {
            let _ = writeln!(out, "plus {} per run", self.overhead);
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {}", w);
        }
        out
    }
}

/// Blocks where `select` makes up at least half of the non-terminator instructions.
fn select_heavy(f: &ircost_core::Function) -> Vec<String> {
    let mut out = Vec::new();
    for bb in &f.blocks {
        let body: Vec<&Instruction> = bb.insts.iter().filter(|i| !i.is_terminator()).collect();
        let selects = body.iter().filter(|i| i.mnemonic() == "select").count();
        if selects > 0 && 2 * selects >= body.len() {
            out.push(bb.label.clone());
        }
    }
    out
}

/// Blocks of `function` with two or more equations, one of them unguarded.
fn data_dependent(crs: &CostRelationSystem, function: &str) -> Vec<String> {
    let prefix = format!("{}::", function);
    crs.relations
        .iter()
        .filter_map(|(name, r)| {
            let label = name.strip_prefix(&prefix)?;
            let open = r.equations.len() >= 2 && r.equations.iter().any(|e| e.guard.is_empty());
            (open && !label.starts_with('[')).then(|| label.to_string())
        })
        .collect()
}

/// Whether some maximum in `e` is more than a clamp at zero.
fn alternatives_kept(e: &CostExpr) -> bool {
    e.all_factors().iter().any(|f| match f {
        Factor::Max(args) => !args.iter().any(|a| a.is_zero()),
        _ => false,
    })
}

/// Runs the static pipeline and the solver on a module.
pub fn analyze_module(module: &IrModule, model: &EnergyModel) -> std::result::Result<(AnalysisReport, Analysis, Solution), ircost_core::PipelineError> {
    let a = analyze(module, model)?;
    let sol = solve(&a.crs);
    let mut functions = Vec::new();
    for f in &module.functions {
        let Some(rel) = a.crs.entry_of(&f.name) else { continue };
        let mut warnings = Vec::new();
        let (formula, unsolved) = match sol.form(rel) {
            Ok(cf) => {
                if alternatives_kept(&cf.expr) {
                    warnings.push(String::from("the formula keeps a maximum over branch alternatives"));
                }
                (Some(FormulaReport::new(cf)), None)
            }
            Err(e) => (None, Some(format!("{}", e))),
        };
        for b in data_dependent(&a.crs, &f.name) {
            warnings.push(format!("branch in block `{}` depends on data; the costlier side is assumed", b));
        }
        for b in select_heavy(f) {
            warnings.push(format!("block `{}` is dominated by select; predicated work is over-approximated", b));
        }
        if let Some(p) = a.programs.get(&f.name) {
            warnings.extend(p.warnings.iter().cloned());
        }
        let args = a.args.get(&f.name).map(|x| x.args_in.clone()).unwrap_or_default();
        functions.push(FunctionReport { name: f.name.clone(), relation: rel.to_string(), formula, unsolved, args, warnings });
    }
    let unsolved: BTreeMap<String, String> = sol.unsolved.iter().map(|(k, e)| (k.clone(), e.to_string())).collect();
    let mut warnings: Vec<String> = a.crs.warnings.clone();
    if !unsolved.is_empty() {
        warnings.push(format!("{} relation(s) have no closed form; use `ircost solve --relation` to evaluate numerically", unsolved.len()));
    }
    let report = AnalysisReport {
        schema: ANALYSIS_SCHEMA,
        model: model.kind(),
        overhead: fmt_decimal(&a.crs.overhead),
        functions,
        unsolved,
        warnings,
        crs: a.crs.to_string(),
    };
    Ok((report, a, sol))
}

#[derive(Debug, Clone, Serialize)]
pub struct ArgsReport {
    pub schema: &'static str,
    pub functions: BTreeMap<String, BTreeMap<String, Vec<String>>>,
}

pub fn args_report(a: &Analysis) -> ArgsReport {
    ArgsReport { schema: ARGS_SCHEMA, functions: a.args.iter().map(|(k, v)| (k.clone(), v.args_in.clone())).collect() }
}

#[derive(Debug, Clone, Serialize)]
pub struct NumericReport {
    pub relation: String,
    pub args: Vec<String>,
    pub mode: &'static str,
    pub value: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub schema: &'static str,
    pub forms: BTreeMap<String, FormulaReport>,
    pub unsolved: BTreeMap<String, String>,
    pub numeric: Option<NumericReport>,
}

impl SolveReport {
    pub fn exit_code(&self) -> i32 {
        if self.unsolved.is_empty() || self.numeric.is_some() {
            0
        } else {
            2
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (n, f) in &self.forms {
            let _ = writeln!(out, "C_{}({}) = {}", n, f.params.join(", "), f.text);
        }
        for why in self.unsolved.values() {
            let _ = writeln!(out, "# {}", why);
        }
        if let Some(n) = &self.numeric {
            let _ = writeln!(out, "C_{}({}) = {} ({} case, numeric)", n.relation, n.args.join(", "), n.value, n.mode);
        }
        out
    }
}

pub fn solve_system(sys: &CostRelationSystem, numeric: Option<(&str, &[BigInt], EvalMode)>) -> Result<SolveReport> {
    let sol = solve(sys);
    let numeric = match numeric {
        None => None,
        Some((rel, args, mode)) => {
            let v = evaluate_numeric(sys, rel, args, mode)?;
            Some(NumericReport {
                relation: rel.to_string(),
                args: args.iter().map(|a| a.to_string()).collect(),
                mode: match mode {
                    EvalMode::Worst => "worst",
                    EvalMode::Deterministic => "deterministic",
                },
                value: fmt_decimal(&v),
            })
        }
    };
    Ok(SolveReport {
        schema: SOLVE_SCHEMA,
        forms: sol.forms.iter().map(|(k, cf)| (k.clone(), FormulaReport::new(cf))).collect(),
        unsolved: sol.unsolved.iter().map(|(k, e)| (k.clone(), e.to_string())).collect(),
        numeric,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateReport {
    pub schema: &'static str,
    pub function: String,
    pub args: Vec<String>,
    pub extracted: bool,
    pub return_value: Option<String>,
    pub energy: String,
    pub energy_approx: f64,
    pub steps: u64,
    pub trace_len: usize,
    /// Executions per `function:block`.
    pub visits: BTreeMap<String, usize>,
    /// Memory after the run, address to value.
    pub memory: BTreeMap<String, String>,
    pub trace: Option<Vec<String>>,
}

impl SimulateReport {
    pub fn new(function: &str, args: &[BigInt], extracted: bool, r: &RunResult, with_trace: bool) -> Self {
        let mut visits = BTreeMap::new();
        for t in &r.trace {
            *visits.entry(format!("{}:{}", t.function, t.block)).or_insert(0) += 1;
        }
        SimulateReport {
            schema: SIMULATE_SCHEMA,
            function: function.to_string(),
            args: args.iter().map(|a| a.to_string()).collect(),
            extracted,
            return_value: r.return_value.as_ref().map(|v| v.to_string()),
            energy: fmt_decimal(&r.energy),
            energy_approx: approx(&r.energy),
            steps: r.steps,
            trace_len: r.trace.len(),
            visits,
            memory: r.memory.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
            trace: with_trace.then(|| r.trace.iter().map(|t| format!("{}:{}", t.function, t.block)).collect()),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "@{}({})", self.function, self.args.join(", "));
        let _ = writeln!(out, "  returns  {}", self.return_value.as_deref().unwrap_or("-"));
        let _ = writeln!(out, "  energy   {} nJ", self.energy);
        let _ = writeln!(out, "  steps    {}", self.steps);
        let _ = writeln!(out, "  blocks   {}", self.trace_len);
        let w = self.visits.keys().map(|k| k.len()).max().unwrap_or(5).max(5);
        let _ = writeln!(out, "  {:<w$}  visits", "block", w = w);
        for (k, n) in &self.visits {
            let _ = writeln!(out, "  {:<w$}  {:>6}", k, n, w = w);
        }
        if let Some(t) = &self.trace {
            let _ = writeln!(out, "  trace: {}", t.join(" "));
        }
        out
    }
}

pub fn simulate(
    module: &IrModule,
    programs: Option<&BTreeMap<String, ExtractedProgram>>,
    function: &str,
    args: &[BigInt],
    fixture: &Fixture,
    model: &EnergyModel,
    with_trace: bool,
) -> Result<SimulateReport> {
    let r = match programs {
        Some(p) => run_extracted(module, p, function, args, fixture, model)?,
        None => run(module, function, args, fixture, model)?,
    };
    Ok(SimulateReport::new(function, args, programs.is_some(), &r, with_trace))
}

#[derive(Debug, Clone, Serialize)]
pub struct GapRow {
    pub point: BTreeMap<String, i64>,
    /// `worst` for the harness' worst-case input, `random` for seeded inputs.
    pub input: &'static str,
    pub formula: String,
    pub interpreted: String,
    pub abs_gap: String,
    pub rel_gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GapSummary {
    pub points: usize,
    pub min_rel_gap: f64,
    pub max_rel_gap: f64,
    pub mean_rel_gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub schema: &'static str,
    pub harness: String,
    pub model: &'static str,
    pub formula: String,
    pub seed: u64,
    pub rows: Vec<GapRow>,
    pub summary: GapSummary,
    pub upper_bound_holds: bool,
}

impl CompareReport {
    pub fn exit_code(&self) -> i32 {
        if self.upper_bound_holds {
            0
        } else {
            1
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}: E = {}", self.harness, self.formula);
        let _ = writeln!(out, "{:<16} {:<6} {:>14} {:>14} {:>12} {:>9}", "point", "input", "formula", "interpreted", "gap", "rel");
        for r in &self.rows {
            let p: Vec<String> = r.point.iter().map(|(k, v)| format!("{}={}", k, v)).collect();
            let _ = writeln!(
                out,
                "{:<16} {:<6} {:>14} {:>14} {:>12} {:>8.2}%",
                p.join(","),
                r.input,
                r.formula,
                r.interpreted,
                r.abs_gap,
                100.0 * r.rel_gap
            );
        }
        let s = &self.summary;
        let _ = writeln!(
            out,
            "{} points, relative gap min {:.2}% max {:.2}% mean {:.2}%",
            s.points,
            100.0 * s.min_rel_gap,
            100.0 * s.max_rel_gap,
            100.0 * s.mean_rel_gap
        );
        if !self.upper_bound_holds {
            let _ = writeln!(out, "error: the formula is below the interpreter somewhere");
        }
        out
    }
}

/// Formula bindings for a call, by the names of the function's parameters.
pub fn bindings(module: &IrModule, function: &str, args: &[BigInt]) -> BTreeMap<String, Rational> {
    module
        .function(function)
        .map(|f| f.params.iter().cloned().zip(args.iter().map(|a| Rational::from_integer(a.clone()))).collect())
        .unwrap_or_default()
}

/// Compares the closed form of the harness function with interpreted runs
/// at every sweep point: the worst-case input first, then `random` seeded inputs.
pub fn compare(
    module: &IrModule,
    harness: &Harness,
    model: &EnergyModel,
    points: &[Vec<i64>],
    random: usize,
    seed: u64,
) -> Result<CompareReport> {
    let a = analyze(module, model).map_err(|source| Error::Pipeline { path: harness.file.into(), source })?;
    let sol = solve(&a.crs);
    let rel = a
        .crs
        .entry_of(harness.function)
        .ok_or_else(|| Error::Usage(format!("no function @{} in the module", harness.function)))?;
    let cf = sol.form(rel).map_err(|e| Error::Usage(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for p in points {
        if p.len() != harness.sweep.len() {
            return Err(Error::Usage(format!("harness {} sweeps {}", harness.name, harness.sweep.join(", "))));
        }
        let point: BTreeMap<String, i64> = harness.sweep.iter().map(|s| s.to_string()).zip(p.iter().copied()).collect();
        let mut inputs = vec![("worst", harness.worst(p))];
        for _ in 0..random {
            inputs.push(("random", harness.random(p, &mut rng)));
        }
        for (kind, input) in inputs {
            let r = run(module, harness.function, &input.args, &input.fixture, model)?;
            let f = evaluate_closed_form(cf, &bindings(module, harness.function, &input.args))? + &a.crs.overhead;
            let gap = &f - &r.energy;
            let rel_gap = if r.energy.is_zero() { approx(&gap) } else { approx(&(gap.clone() / &r.energy)) };
            rows.push(GapRow {
                point: point.clone(),
                input: kind,
                formula: fmt_decimal(&f),
                interpreted: fmt_decimal(&r.energy),
                abs_gap: fmt_decimal(&gap),
                rel_gap,
            });
        }
    }
    let gaps: Vec<f64> = rows.iter().map(|r| r.rel_gap).collect();
    let (lo, hi) = gaps.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), g| (lo.min(*g), hi.max(*g)));
    let summary = if gaps.is_empty() {
        GapSummary { points: 0, min_rel_gap: 0.0, max_rel_gap: 0.0, mean_rel_gap: 0.0 }
    } else {
        GapSummary { points: gaps.len(), min_rel_gap: lo, max_rel_gap: hi, mean_rel_gap: gaps.iter().sum::<f64>() / gaps.len() as f64 }
    };
    let upper_bound_holds = rows.iter().all(|r| !r.abs_gap.starts_with('-'));
    Ok(CompareReport {
        schema: COMPARE_SCHEMA,
        harness: harness.name.to_string(),
        model: model.kind(),
        formula: cf.to_string(),
        seed,
        rows,
        summary,
        upper_bound_holds,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FunctionGraphs {
    pub cfg: Cfg,
    pub loops: LoopForest,
    pub extracted: Option<ExtractedProgram>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CfgReport {
    pub schema: &'static str,
    pub functions: BTreeMap<String, FunctionGraphs>,
}

impl CfgReport {
    /// Graphviz text for every graph in the report.
    pub fn to_dot(&self) -> String {
        let mut out = String::new();
        for g in self.functions.values() {
            match &g.extracted {
                Some(p) => {
                    for r in &p.regions {
                        out.push_str(&r.cfg.to_dot());
                    }
                }
                None => out.push_str(&g.cfg.to_dot()),
            }
        }
        out
    }
}

pub fn cfg_report(a: &Analysis, only: Option<&str>, extracted: bool) -> CfgReport {
    let functions = a
        .cfgs
        .iter()
        .filter(|(k, _)| only.map_or(true, |o| o == k.as_str()))
        .map(|(k, g)| {
            let graphs = FunctionGraphs {
                cfg: g.clone(),
                loops: a.forests[k].clone(),
                extracted: if extracted { a.programs.get(k).cloned() } else { None },
            };
            (k.clone(), graphs)
        })
        .collect();
    CfgReport { schema: CFG_SCHEMA, functions }
}
