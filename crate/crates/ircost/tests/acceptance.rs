//! Acceptance suite: one PASS/FAIL line per criterion.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use ircost::harness::{harness, harnesses, Harness};
use ircost::model::{check_mapping, load_mapping, load_model, parse_mapping};
use ircost::report::bindings;
use ircost::load_module;
use ircost_core::closed::{ClosedForm, Factor};
use ircost_core::energy::{
    classify, group_energy, tiwari_energy, xs1_energy, xs1_single_thread, EnergyModel, Group, GroupModel,
    InstructionCounts, Site, TiwariModel, Xs1Model,
};
use ircost_core::interp::{run, run_extracted, Fixture};
use ircost_core::ir::{Instruction, Opcode, Operand};
use ircost_core::num::{ratio, BigInt, Rational};
use ircost_core::seval::{seval, Mode};
use ircost_core::solver::{evaluate_numeric, EvalMode};
use ircost_core::{analyze, parse_module, solve, Analysis, Function, IrModule, LinExpr, Solution};
use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn corpus(file: &str) -> IrModule {
    load_module(&root().join("corpus").join(file)).unwrap()
}

fn model(name: &str) -> EnergyModel {
    load_model(&root().join("models").join(name)).unwrap()
}

fn mapping_for(file: &str, module: &IrModule) -> EnergyModel {
    let stem = Path::new(file).file_stem().unwrap().to_str().unwrap();
    let m = load_mapping(&root().join("models/mappings").join(format!("{}.json", stem))).unwrap();
    check_mapping(&m, module).unwrap();
    EnergyModel::Mapping(m)
}

fn ints(v: &[i64]) -> Vec<BigInt> {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

fn solved(module: &IrModule, model: &EnergyModel) -> (Analysis, Solution) {
    let a = analyze(module, model).unwrap();
    let s = solve(&a.crs);
    (a, s)
}

fn entry_form<'a>(a: &Analysis, s: &'a Solution, function: &str) -> Result<&'a ClosedForm, String> {
    let rel = a.crs.entry_of(function).ok_or_else(|| format!("no entry for @{}", function))?;
    s.form(rel).map_err(|e| e.to_string())
}

/// Formula value plus the per-run overhead, at the arguments of one run.
fn bound(module: &IrModule, a: &Analysis, cf: &ClosedForm, function: &str, args: &[BigInt]) -> Rational {
    cf.eval(&bindings(module, function, args)).unwrap() + &a.crs.overhead
}

fn interpreted(module: &IrModule, function: &str, args: &[BigInt], fx: &Fixture, model: &EnergyModel) -> Rational {
    run(module, function, args, fx, model).unwrap().energy
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_group_model(rng: &mut ChaCha8Rng) -> GroupModel {
    let mut pos = || ratio(rng.gen_range(1..=40), rng.gen_range(1..=4));
    let e = [pos(), pos(), pos(), pos()];
    GroupModel {
        e,
        call_arg: ratio(rng.gen_range(0..=3), 2),
        call_ret: ratio(rng.gen_range(0..=3), 2),
        widen_mul: ratio(rng.gen_range(2..=6), 2),
    }
}

fn c1_formula_shapes() -> Check {
    let mut models = vec![GroupModel::unit()];
    if let EnergyModel::Group(g) = model("arm_group.json") {
        models.push(g);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    models.extend((0..8).map(|_| random_group_model(&mut rng)));
    let mac = corpus("mac.mir");
    let sort = corpus("insertion_sort.mir");
    let matmul = corpus("matmul.mir");
    let lev = corpus("levenshtein.mir");
    let b64 = corpus("base64.mir");
    let stride = LinExpr::var("P") - LinExpr::int(1);
    for g in &models {
        let em = EnergyModel::Group(g.clone());
        let shape = |m: &IrModule, f: &str| -> Result<ClosedForm, String> {
            let (a, s) = solved(m, &em);
            entry_form(&a, &s, f).cloned()
        };
        let cf = shape(&mac, "mac")?;
        ensure(cf.degree_in("P") == 1 && cf.expr.degree() == 1, || format!("mac: {}", cf))?;
        let cf = shape(&sort, "sort")?;
        ensure(cf.degree_in("size") == 2 && !cf.expr.contains_log2(), || format!("insertion sort: {}", cf))?;
        let cf = shape(&matmul, "matmul")?;
        ensure(cf.degree_in("P") == 3 && cf.expr.degree() == 3, || format!("matmul: {}", cf))?;
        let cf = shape(&lev, "levenshtein")?;
        ensure(cf.degree_in("A") == 1 && cf.degree_in("B") == 1 && cf.expr.degree() == 2, || {
            format!("levenshtein: {}", cf)
        })?;
        let cf = shape(&b64, "base64")?;
        let has_stride = cf
            .expr
            .all_factors()
            .into_iter()
            .any(|f| matches!(f, Factor::Floor(l, k) if *l == stride && *k == BigInt::from(3)));
        ensure(has_stride, || format!("base64: {}", cf))?;
    }
    Ok(format!("{} group models", models.len()))
}

fn exact_sweep(h: &Harness, range: std::ops::RangeInclusive<i64>, unit: &EnergyModel) -> Result<usize, String> {
    let m = corpus(h.file);
    let (a, s) = solved(&m, unit);
    let cf = entry_form(&a, &s, h.function)?;
    let mut n = 0;
    for p in range {
        let input = h.worst(&[p]);
        let f = bound(&m, &a, cf, h.function, &input.args);
        let r = interpreted(&m, h.function, &input.args, &input.fixture, unit);
        ensure(f == r, || format!("{} at P = {}: formula {} vs interpreter {}", h.name, p, f, r))?;
        n += 1;
    }
    Ok(n)
}

fn c2_oracle_equality() -> Check {
    let unit = model("unit.json");
    let n = exact_sweep(harness("mac").unwrap(), 1..=20, &unit)?
        + exact_sweep(harness("matmul").unwrap(), 1..=6, &unit)?
        + exact_sweep(harness("base64").unwrap(), 1..=30, &unit)?;
    Ok(format!("{} points exact", n))
}

fn c3_worst_case_bound() -> Check {
    let unit = model("unit.json");
    let h = harness("sort").unwrap();
    let m = corpus(h.file);
    let (a, s) = solved(&m, &unit);
    let cf = entry_form(&a, &s, h.function)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut max_gap = Rational::zero();
    for p in 2..=12 {
        let w = h.worst(&[p]);
        let f = bound(&m, &a, cf, h.function, &w.args);
        let r = interpreted(&m, h.function, &w.args, &w.fixture, &unit);
        ensure(f == r, || format!("reverse-sorted P = {}: {} vs {}", p, f, r))?;
        for _ in 0..100 {
            let x = h.random(&[p], &mut rng);
            let r = interpreted(&m, h.function, &x.args, &x.fixture, &unit);
            ensure(f >= r, || format!("random P = {}: formula {} below {}", p, f, r))?;
            let gap = &f - &r;
            if gap > max_gap {
                max_gap = gap;
            }
        }
    }
    Ok(format!("exact on 11 reverse-sorted inputs, 1100 random runs bounded, max gap {}", max_gap))
}

fn random_point(h: &Harness, rng: &mut ChaCha8Rng) -> Vec<i64> {
    let hi = match h.name {
        "matmul" => 4,
        "sortbysimilarity" => 3,
        "gcd" => 64,
        _ => 8,
    };
    h.sweep.iter().map(|_| rng.gen_range(0..=hi)).collect()
}

fn c4_trace_preservation() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut runs = 0;
    for h in harnesses() {
        let m = corpus(h.file);
        let programs = ircost_core::pipeline::structure(&m).map_err(|e| e.to_string())?.2;
        let models = [
            model("unit.json"),
            model("arm_group.json"),
            model("xs1.json"),
            model("tiwari.json"),
            mapping_for(h.file, &m),
        ];
        for _ in 0..50 {
            let p = random_point(h, &mut rng);
            let input = h.random(&p, &mut rng);
            for em in &models {
                let a = run(&m, h.function, &input.args, &input.fixture, em).map_err(|e| e.to_string())?;
                let b = run_extracted(&m, &programs, h.function, &input.args, &input.fixture, em)
                    .map_err(|e| e.to_string())?;
                ensure(a.trace == b.trace, || format!("{} at {:?}: traces differ", h.name, p))?;
                ensure(a.energy == b.energy, || {
                    format!("{} at {:?} under {}: {} vs {}", h.name, p, em.kind(), a.energy, b.energy)
                })?;
                ensure(a.return_value == b.return_value, || format!("{} at {:?}: results differ", h.name, p))?;
                runs += 1;
            }
        }
    }
    Ok(format!("{} paired runs", runs))
}

fn c5_model_arithmetic() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let names = ["add", "mul", "sdiv", "memload", "br", "phi"];
    for case in 0..1000 {
        let threads = rng.gen_range(1..=4);
        let m = Xs1Model {
            p_base: ratio(rng.gen_range(0..=50), 1000),
            t_clk: ratio(1, rng.gen_range(1..=1000) * 1_000_000),
            overhead: ratio(rng.gen_range(1..=8), 4),
            m: (0..threads).map(|_| ratio(rng.gen_range(50..=200), 100)).collect(),
            p: names.iter().map(|n| (n.to_string(), ratio(rng.gen_range(0..=90), 1000))).collect(),
        };
        let len = rng.gen_range(0..40);
        let seq: Vec<&str> = (0..len).map(|_| *names.choose(&mut rng).unwrap()).collect();
        let c = InstructionCounts::from_sequence(seq.iter().copied());
        let two = xs1_energy(&c, &m).map_err(|e| e.to_string())?;
        let three = xs1_single_thread(&c, &m).map_err(|e| e.to_string())?;
        ensure(two == three, || format!("case {}: {} vs {}", case, two, three))?;
    }

    let mut t = TiwariModel::default();
    t.base.insert("add".into(), ratio(2, 1));
    t.externals.push(ratio(5, 1));
    let c = InstructionCounts::from_sequence(["add", "add", "add"]);
    ensure(tiwari_energy(&c, &t).unwrap() == ratio(11, 1), || "tiwari add x3".into())?;
    let mut t = TiwariModel::default();
    t.base.insert("a".into(), ratio(1, 1));
    t.base.insert("b".into(), ratio(2, 1));
    t.overhead.insert(("a".into(), "b".into()), ratio(1, 2));
    t.overhead.insert(("b".into(), "a".into()), ratio(1, 2));
    let c = InstructionCounts::from_sequence(["a", "b", "a"]);
    ensure(tiwari_energy(&c, &t).unwrap() == ratio(5, 1), || "tiwari a,b,a".into())?;

    let idle = Xs1Model {
        p_base: ratio(1, 10),
        t_clk: ratio(1, 100_000_000),
        overhead: ratio(1, 1),
        m: vec![ratio(1, 1)],
        p: [("add".to_string(), ratio(1, 5))].into_iter().collect(),
    };
    let c = InstructionCounts { idle_periods: 10, ..Default::default() };
    ensure(xs1_energy(&c, &idle).unwrap() == ratio(1, 100_000_000), || "xs1 idle".into())?;
    let c = InstructionCounts::from_sequence(std::iter::repeat("add").take(100));
    ensure(xs1_single_thread(&c, &idle).unwrap() == ratio(3, 10_000_000), || "xs1 single thread".into())?;

    let g = GroupModel { e: [ratio(3, 1), ratio(2, 1), ratio(10, 1), ratio(1, 1)], ..GroupModel::unit() };
    let n: BTreeMap<Group, u64> = [(Group::M, 2), (Group::B, 1), (Group::D, 0), (Group::G, 5)].into_iter().collect();
    ensure(group_energy(&n, &g) == ratio(13, 1), || "group energy".into())?;

    let text = "declare @min(%a, %b) cost 0\n\
                define @f(%i.0, %a1, %a, %b) {\n\
                bb:\n  %1 = add %i.0, 1\n  %2 = icmp eq %1, %a1\n  br %2, label %c, label %bb\n\
                c:\n  %m = call @min(%a, %b)\n  ret %m\n}\n";
    let module = parse_module(text).map_err(|e| e.to_string())?;
    let f = module.function("f").unwrap();
    let g = GroupModel { e: [ratio(0, 1), ratio(2, 1), ratio(0, 1), ratio(1, 1)], ..GroupModel::unit() };
    let em = EnergyModel::Group(g.clone());
    let inc = em.block_cost(&module, "f", f.block("bb").unwrap()).unwrap();
    ensure(inc == ratio(4, 1), || format!("loop increment block: {}", inc))?;
    let em = EnergyModel::Group(GroupModel { call_arg: ratio(1, 1), call_ret: ratio(1, 1), ..g });
    let call = &f.block("c").unwrap().insts[0];
    let site = Site { function: "f", block: "c", index: 0 };
    ensure(em.instruction_cost(site, call).unwrap() == ratio(5, 1), || "call @min".into())?;

    let map = parse_mapping(r#"{"sites": [{"fn": "f", "block": "bb", "index": 0, "isa_nj": [1.5, 2.0, 0.5]}]}"#)
        .map_err(|e| e.0)?;
    let key = ("f".to_string(), "bb".to_string(), 0);
    ensure(map.per_ir.get(&key) == Some(&ratio(4, 1)), || "mapping sum".into())?;

    let mut kinds = Vec::new();
    for op in Opcode::ALL {
        let args = vec![Operand::int(1); op.arity()];
        kinds.push((op.mnemonic(), Instruction::Op { dest: "x".into(), opcode: op, args, width: None }));
    }
    kinds.push(("condbr", Instruction::CondBr { pred: Operand::int(1), then_label: "a".into(), else_label: "b".into() }));
    kinds.push(("br", Instruction::Br { target: "a".into() }));
    kinds.push(("phi", Instruction::Phi { dest: "x".into(), incomings: vec![] }));
    kinds.push(("call", Instruction::Call { dest: None, callee: "g".into(), args: vec![] }));
    kinds.push(("memload", Instruction::MemLoad { dest: "x".into(), addr: None }));
    kinds.push(("memstore", Instruction::MemStore { target: None }));
    kinds.push(("ret", Instruction::Ret { value: None }));
    for (name, inst) in &kinds {
        let want = match inst {
            Instruction::CondBr { .. } | Instruction::Br { .. } | Instruction::Call { .. } | Instruction::Ret { .. } => {
                Group::B
            }
            Instruction::MemLoad { .. } | Instruction::MemStore { .. } => Group::M,
            Instruction::Op { opcode: Opcode::SDiv | Opcode::SRem, .. } => Group::D,
            _ => Group::G,
        };
        ensure(classify(inst) == want, || format!("classify {}", name))?;
    }
    Ok(format!("1000 random cases, 8 hand examples, {} instruction kinds classified", kinds.len()))
}

fn vars<'a>(ops: impl IntoIterator<Item = &'a Operand>) -> BTreeSet<String> {
    ops.into_iter().filter_map(|o| o.as_var().map(String::from)).collect()
}

/// Round-robin liveness where phi results count as live on entry of their block.
fn textbook_live_in(f: &Function) -> BTreeMap<String, BTreeSet<String>> {
    let mut uses = BTreeMap::new();
    let mut defs = BTreeMap::new();
    let mut phidefs = BTreeMap::new();
    for bb in &f.blocks {
        let d: BTreeSet<String> = bb.insts.iter().filter_map(|i| i.dest().map(String::from)).collect();
        let p: BTreeSet<String> = bb.insts.iter().filter(|i| i.is_phi()).filter_map(|i| i.dest().map(String::from)).collect();
        let u: BTreeSet<String> = bb
            .insts
            .iter()
            .filter(|i| !i.is_phi())
            .flat_map(|i| vars(i.operands()))
            .filter(|v| !d.contains(v))
            .collect();
        uses.insert(bb.label.clone(), u);
        defs.insert(bb.label.clone(), d);
        phidefs.insert(bb.label.clone(), p);
    }
    let phi_uses = |succ: &str, pred: &str| -> BTreeSet<String> {
        let s = f.block(succ).unwrap();
        let mut out = BTreeSet::new();
        for inst in &s.insts {
            if let Instruction::Phi { incomings, .. } = inst {
                out.extend(vars(incomings.iter().filter(|(l, _)| l == pred).map(|(_, v)| v)));
            }
        }
        out
    };
    let mut live: BTreeMap<String, BTreeSet<String>> = f.blocks.iter().map(|b| (b.label.clone(), BTreeSet::new())).collect();
    loop {
        let mut changed = false;
        for bb in f.blocks.iter().rev() {
            let mut out = BTreeSet::new();
            for s in bb.successors() {
                out.extend(live[s].difference(&phidefs[s]).cloned());
                out.extend(phi_uses(s, &bb.label));
            }
            let mut inn: BTreeSet<String> = out.difference(&defs[&bb.label]).cloned().collect();
            inn.extend(uses[&bb.label].iter().cloned());
            inn.extend(phidefs[&bb.label].iter().cloned());
            if inn != live[&bb.label] {
                live.insert(bb.label.clone(), inn);
                changed = true;
            }
        }
        if !changed {
            return live;
        }
    }
}

fn c6_block_args() -> Check {
    let unit = model("unit.json");
    let mut blocks = 0;
    for h in harnesses() {
        let m = corpus(h.file);
        let a = analyze(&m, &unit).map_err(|e| e.to_string())?;
        for f in &m.functions {
            let live = textbook_live_in(f);
            let args = &a.args[&f.name];
            for bb in &f.blocks {
                let ins: BTreeSet<String> = args.inputs(&bb.label).iter().cloned().collect();
                ensure(ins.is_subset(&live[&bb.label]), || {
                    format!("@{}:{} args {:?} not within live-in {:?}", f.name, bb.label, ins, live[&bb.label])
                })?;
                blocks += 1;
            }
        }
    }
    let m = corpus("proc.mir");
    let a = analyze(&m, &unit).map_err(|e| e.to_string())?;
    let rel = a.crs.relations.get("proc::for").ok_or("no proc::for relation")?;
    ensure(rel.params == ["l", "i"], || format!("proc::for carries {:?}", rel.params))?;
    Ok(format!("{} blocks checked, proc::for(l, i)", blocks))
}

fn c7_composability() -> Check {
    let unit = model("unit.json");
    let h = harness("sortbysimilarity").unwrap();
    let m = corpus(h.file);
    let (a, s) = solved(&m, &unit);
    ensure(s.unsolved.is_empty(), || format!("unsolved: {:?}", s.unsolved.keys().collect::<Vec<_>>()))?;
    let rel = a.crs.entry_of(h.function).unwrap();
    let cf = entry_form(&a, &s, h.function)?;
    let mut equal = 0;
    for x in 1..=4 {
        for y in 1..=4 {
            for z in 1..=4 {
                let args = h.worst(&[x, y, z]).args;
                let f = cf.eval(&bindings(&m, h.function, &args)).unwrap();
                let n = evaluate_numeric(&a.crs, rel, &args, EvalMode::Worst).map_err(|e| e.to_string())?;
                ensure(f >= n, || format!("({}, {}, {}): formula {} below numeric {}", x, y, z, f, n))?;
                if f == n {
                    equal += 1;
                }
            }
        }
    }
    ensure(equal == 64, || format!("formula above worst-mode evaluation at {} points", 64 - equal))?;
    Ok("64 points, formula equals worst-mode evaluation".into())
}

fn c8_gcd() -> Check {
    let unit = model("unit.json");
    let h = harness("gcd").unwrap();
    let m = corpus(h.file);
    let (a, s) = solved(&m, &unit);
    let cf = entry_form(&a, &s, h.function)?;
    let log_vars: BTreeSet<String> = cf
        .expr
        .all_factors()
        .into_iter()
        .filter_map(|f| match f {
            Factor::Log2(l) => Some(l.vars()),
            _ => None,
        })
        .flatten()
        .collect();
    ensure(log_vars.len() == 1 && cf.expr.degree() <= 1, || format!("not logarithmic in one argument: {}", cf))?;
    let mut tight = 0;
    for x in 1..=64 {
        for y in 1..=64 {
            let args = ints(&[x, y]);
            let f = bound(&m, &a, cf, h.function, &args);
            let r = interpreted(&m, h.function, &args, &Fixture::default(), &unit);
            ensure(f >= r, || format!("gcd({}, {}): formula {} below {}", x, y, f, r))?;
            if f == r {
                tight += 1;
            }
        }
    }
    Ok(format!("{} bounded on 4096 inputs, tight at {}", cf, tight))
}

fn random_block(rng: &mut ChaCha8Rng) -> (String, Vec<String>) {
    let mut defined = vec!["%x".to_string(), "%y".to_string(), "%z".to_string()];
    let mut body = String::new();
    let n = rng.gen_range(1..=8);
    let mut dests = Vec::new();
    for k in 0..n {
        let pick = |rng: &mut ChaCha8Rng| -> String {
            if rng.gen_bool(0.25) {
                rng.gen_range(-5..=5).to_string()
            } else {
                defined.choose(rng).unwrap().clone()
            }
        };
        let dest = format!("%v{}", k);
        let line = match rng.gen_range(0..5) {
            0 => format!("{} = select {}, {}, {}", dest, pick(rng), pick(rng), pick(rng)),
            1 => {
                let op = ["shl", "lshr"].choose(rng).unwrap();
                format!("{} = {} {}, {}", dest, op, pick(rng), rng.gen_range(0..=6))
            }
            _ => {
                let ops = [
                    "add", "sub", "mul", "sdiv", "srem", "and", "or", "xor", "icmp eq", "icmp ne", "icmp slt",
                    "icmp sle", "icmp sgt", "icmp sge",
                ];
                format!("{} = {} {}, {}", dest, ops.choose(rng).unwrap(), pick(rng), pick(rng))
            }
        };
        body.push_str("  ");
        body.push_str(&line);
        body.push('\n');
        defined.push(dest.clone());
        dests.push(dest);
    }
    (body, dests)
}

fn c9_seval_fidelity() -> Check {
    let unit = EnergyModel::Group(GroupModel::unit());
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for trial in 0..1000 {
        let (body, dests) = random_block(&mut rng);
        let target = dests.choose(&mut rng).unwrap().clone();
        let text = format!("define @t(%x, %y, %z) {{\nentry:\n{}  ret {}\n}}\n", body, target);
        let module = parse_module(&text).map_err(|e| format!("{}\n{}", e, text))?;
        let bb = &module.function("t").unwrap().blocks[0];
        let env_vals: Vec<i64> = (0..3).map(|_| rng.gen_range(-40..=40)).collect();
        let env: BTreeMap<String, BigInt> =
            ["x", "y", "z"].iter().map(|s| s.to_string()).zip(ints(&env_vals)).collect();
        let sym = seval(bb, target.trim_start_matches('%'), Mode::Exact);
        let concrete = sym.eval(&env);
        let direct = run(&module, "t", &ints(&env_vals), &Fixture::default(), &unit)
            .map_err(|e| format!("trial {}: {}\n{}", trial, e, text))?
            .return_value;
        ensure(concrete.is_some() && concrete == direct, || {
            format!("trial {} at {:?}: seval {:?} ({:?}) vs run {:?}\n{}", trial, env_vals, sym, concrete, direct, text)
        })?;
    }
    Ok("1000 trials".into())
}

#[test]
fn acceptance() {
    type Criterion = (&'static str, Option<u64>, fn() -> Check);
    let criteria: [Criterion; 9] = [
        ("1 formula shapes", Some(10), c1_formula_shapes),
        ("2 oracle equality on deterministic programs", Some(30), c2_oracle_equality),
        ("3 insertion sort worst-case bound", Some(60), c3_worst_case_bound),
        ("4 trace preservation under loop extraction", Some(60), c4_trace_preservation),
        ("5 model arithmetic", None, c5_model_arithmetic),
        ("6 block argument minimality", None, c6_block_args),
        ("7 composability on sortbysimilarity", Some(30), c7_composability),
        ("8 gcd logarithmic bound", Some(10), c8_gcd),
        ("9 seval fidelity", None, c9_seval_fidelity),
    ];
    let mut failed = Vec::new();
    for (name, limit, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let took = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(_), Some(s)) if took > Duration::from_secs(s) => Err(format!("took {:.2?}, limit {} s", took, s)),
            (o, _) => o,
        };
        let budget = limit.map(|s| format!(", limit {} s", s)).unwrap_or_default();
        match outcome {
            Ok(detail) => println!("PASS  {}: {} ({:.2?}{})", name, detail, took, budget),
            Err(why) => {
                println!("FAIL  {}: {} ({:.2?}{})", name, why, took, budget);
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {:?}", failed);
}
