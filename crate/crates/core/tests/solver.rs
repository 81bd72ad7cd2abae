use std::collections::BTreeMap;
use std::path::PathBuf;

use ircost_core::closed::{ClosedForm, ClosedFormError, CostExpr};
use ircost_core::costrel::parse_crs;
use ircost_core::energy::{EnergyModel, GroupModel};
use ircost_core::interp::{run, Fixture};
use ircost_core::num::{rat, BigInt, Rational};
use ircost_core::pipeline::analyze;
use ircost_core::solver::{evaluate_closed_form, evaluate_numeric, solve, EvalMode, SolveError};
use ircost_core::{parse_module, IrModule};

fn load(name: &str) -> IrModule {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name);
    parse_module(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn env(pairs: &[(&str, i64)]) -> BTreeMap<String, Rational> {
    pairs.iter().map(|(k, v)| (k.to_string(), rat(*v))).collect()
}

fn ints(v: &[i64]) -> Vec<BigInt> {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

#[test]
fn proc_system_worst_case() {
    let text = "\
C_proc(l) = 1 + C_for(l, 0)
C_for(l, i) = 1 if i >= l
C_for(l, i) = 1 + C_odd() + C_for(l, i + 1) if i < l
C_for(l, i) = 1 + C_even() + C_for(l, i + 1) if i < l
C_odd() = 0
C_even() = 0
";
    let sys = parse_crs(text).unwrap();
    assert_eq!(evaluate_numeric(&sys, "proc", &ints(&[3]), EvalMode::Worst).unwrap(), rat(5));
    let sol = solve(&sys);
    let cf = sol.form("proc").unwrap();
    for l in 0..20 {
        let num = evaluate_numeric(&sys, "proc", &ints(&[l]), EvalMode::Worst).unwrap();
        assert_eq!(evaluate_closed_form(cf, &env(&[("l", l)])).unwrap(), num);
    }
}

#[test]
fn empty_loop_costs_entry_and_exit() {
    let text = "\
C_proc(l) = 4 + C_for(l, 0)
C_for(l, i) = 9 if i >= l
C_for(l, i) = 1 + C_odd() + C_for(l, i + 1) if i < l
C_odd() = 2
";
    let sys = parse_crs(text).unwrap();
    assert_eq!(evaluate_numeric(&sys, "proc", &ints(&[0]), EvalMode::Worst).unwrap(), rat(4 + 9));
}

#[test]
fn counting_up_loop() {
    let (k2, k3) = (11, 4);
    let sys = parse_crs(&format!("C_f(l, i) = {} if i >= l\nC_f(l, i) = {} + C_f(l, i + 1) if i < l\n", k2, k3)).unwrap();
    let sol = solve(&sys);
    let cf = sol.form("f").unwrap();
    for l in -5..15 {
        for i in -5..15 {
            let want = k3 * (l - i).max(0) + k2;
            assert_eq!(evaluate_closed_form(cf, &env(&[("l", l), ("i", i)])).unwrap(), rat(want));
        }
    }
}

#[test]
fn max_example_matches_the_interpreter() {
    let m = load("max_example.mir");
    let unit = EnergyModel::Group(GroupModel::unit());
    let a = analyze(&m, &unit).unwrap();
    let sol = solve(&a.crs);
    let cf = sol.form(a.crs.entry_of("max_example").unwrap()).unwrap();
    assert!(cf.expr.contains_max(), "{}", cf);
    for x in 0..8 {
        for y in 0..8 {
            let r = run(&m, "max_example", &ints(&[x, y]), &Fixture::default(), &unit).unwrap();
            let f = evaluate_closed_form(cf, &env(&[("A", x), ("B", y)])).unwrap() + &a.crs.overhead;
            // The formula is the worst of both branches.
            assert!(f >= r.energy, "A={} B={}", x, y);
        }
    }
    assert_eq!(cf.degree_in("A"), 1);
    assert_eq!(cf.degree_in("B"), 1);
}

#[test]
fn halving_loop_is_logarithmic() {
    let (k, base) = (6, 2);
    let sys = parse_crs(&format!("C_h(b) = {} if b < 1\nC_h(b) = {} + C_h(1/2*b) if b >= 1\n", base, k)).unwrap();
    let sol = solve(&sys);
    let cf = sol.form("h").unwrap();
    assert!(cf.expr.contains_log2());
    for b in 1..300i64 {
        let mut n = 0;
        let mut x = b;
        while x >= 1 {
            x /= 2;
            n += 1;
        }
        let want = k * n + base;
        assert_eq!(evaluate_closed_form(cf, &env(&[("b", b)])).unwrap(), rat(want), "b={}", b);
        let lg = 63 - (b as u64).leading_zeros() as i64;
        assert_eq!(want, k * (lg + 1) + base);
    }
}

#[test]
fn quadratic_form_evaluates() {
    let p = CostExpr::param("P");
    let e = p.pow(2).scale(&rat(105)).add(&p.scale(&rat(30))).add(&CostExpr::int(75));
    let cf = ClosedForm { params: vec!["P".into()], expr: e, domain: vec![] };
    assert_eq!(cf.to_string(), "105P^2 + 30P + 75");
    assert_eq!(evaluate_closed_form(&cf, &env(&[("P", 4)])).unwrap(), rat(1875));
}

#[test]
fn loop_bounds_have_no_off_by_one() {
    for stride in 1..=4i64 {
        for off in -4..=4i64 {
            for (cmp, neg) in [("<", ">="), ("<=", ">")] {
                let text = format!(
                    "C_f(n, i) = 3 if i {neg} n + {off}\nC_f(n, i) = 5 + C_f(n, i + {stride}) if i {cmp} n + {off}\n"
                );
                let sys = parse_crs(&text).unwrap();
                let sol = solve(&sys);
                let cf = sol.form("f").unwrap_or_else(|e| panic!("{}: {}", text, e));
                for n in -6..12 {
                    for i in -6..12 {
                        let mut count = 0;
                        let mut x = i;
                        while if cmp == "<" { x < n + off } else { x <= n + off } {
                            x += stride;
                            count += 1;
                        }
                        let got = evaluate_closed_form(cf, &env(&[("n", n), ("i", i)])).unwrap();
                        assert_eq!(got, rat(5 * count + 3), "{} n={} i={}", text, n, i);
                    }
                }
            }
        }
    }
}

#[test]
fn down_counting_loop_bounds() {
    for stride in 1..=4i64 {
        for off in -4..=4i64 {
            let text = format!("C_f(i) = 1 if i <= {off}\nC_f(i) = 2 + C_f(i - {stride}) if i > {off}\n");
            let sys = parse_crs(&text).unwrap();
            let sol = solve(&sys);
            let cf = sol.form("f").unwrap();
            for i in -10..20 {
                let mut count = 0;
                let mut x = i;
                while x > off {
                    x -= stride;
                    count += 1;
                }
                assert_eq!(evaluate_closed_form(cf, &env(&[("i", i)])).unwrap(), rat(2 * count + 1), "{} i={}", text, i);
            }
        }
    }
}

#[test]
fn closed_form_rejects_bindings_outside_its_domain() {
    let m = load("mac.mir");
    let a = analyze(&m, &EnergyModel::Group(GroupModel::unit())).unwrap();
    let sol = solve(&a.crs);
    let cf = sol.form(a.crs.entry_of("mac").unwrap()).unwrap();
    let err = evaluate_closed_form(cf, &env(&[("a", 0), ("b", 0), ("P", -1)])).unwrap_err();
    match err {
        ClosedFormError::OutsideDomain(c) => assert!(c.contains('P'), "{}", c),
        other => panic!("{:?}", other),
    }
    let err = evaluate_closed_form(cf, &env(&[("a", 0), ("b", 0)])).unwrap_err();
    assert!(matches!(err, ClosedFormError::Unbound(v) if v == "P"));
}

#[test]
fn insertion_sort_matches_reverse_sorted_run() {
    let m = load("insertion_sort.mir");
    let unit = EnergyModel::Group(GroupModel::unit());
    let a = analyze(&m, &unit).unwrap();
    let sol = solve(&a.crs);
    let rel = a.crs.entry_of("sort").unwrap();
    let cf = sol.form(rel).unwrap();
    assert_eq!(cf.degree_in("size"), 2);
    for p in 0..10i64 {
        let mem = (0..p).map(|k| (BigInt::from(100 + k), BigInt::from(p - k))).collect();
        let fx = Fixture { memory: mem, ..Fixture::default() };
        let r = run(&m, "sort", &ints(&[100, p]), &fx, &unit).unwrap();
        let f = evaluate_closed_form(cf, &env(&[("numbers", 100), ("size", p)])).unwrap() + &a.crs.overhead;
        assert_eq!(f, r.energy, "P={}", p);
        let num = evaluate_numeric(&a.crs, rel, &ints(&[100, p]), EvalMode::Worst).unwrap() + &a.crs.overhead;
        assert_eq!(num, r.energy, "numeric P={}", p);
    }
}

#[test]
fn deterministic_programs_are_exact() {
    let unit = EnergyModel::Group(GroupModel::unit());
    let cases: &[(&str, &str, &[&str], &[i64])] = &[
        ("mac.mir", "mac", &["a", "b", "P"], &[100, 200]),
        ("base64.mir", "base64", &["src", "dst", "P"], &[100, 500]),
        ("matmul.mir", "matmul", &["A", "B", "C", "P"], &[1000, 2000, 3000]),
    ];
    for (file, f, names, fixed) in cases {
        let m = load(file);
        let a = analyze(&m, &unit).unwrap();
        let sol = solve(&a.crs);
        let rel = a.crs.entry_of(f).unwrap();
        let cf = sol.form(rel).unwrap();
        for p in 0..8i64 {
            let mut args = fixed.to_vec();
            args.push(p);
            let r = run(&m, f, &ints(&args), &Fixture::default(), &unit).unwrap();
            let b: BTreeMap<String, Rational> = names.iter().map(|n| n.to_string()).zip(args.iter().map(|&v| rat(v))).collect();
            let got = evaluate_closed_form(cf, &b).unwrap() + &a.crs.overhead;
            assert_eq!(got, r.energy, "{} P={}", f, p);
            let num = evaluate_numeric(&a.crs, rel, &ints(&args), EvalMode::Deterministic).unwrap() + &a.crs.overhead;
            assert_eq!(num, r.energy, "{} numeric P={}", f, p);
        }
    }
}

#[test]
fn gcd_bound_holds() {
    let m = load("gcd.mir");
    let unit = EnergyModel::Group(GroupModel::unit());
    let a = analyze(&m, &unit).unwrap();
    let sol = solve(&a.crs);
    let cf = sol.form(a.crs.entry_of("gcd").unwrap()).unwrap();
    assert!(cf.expr.contains_log2(), "{}", cf);
    for x in 1..=40 {
        for y in 1..=40 {
            let r = run(&m, "gcd", &ints(&[x, y]), &Fixture::default(), &unit).unwrap();
            let f = evaluate_closed_form(cf, &env(&[("a", x), ("b", y)])).unwrap() + &a.crs.overhead;
            assert!(f >= r.energy, "gcd({}, {}): {} < {}", x, y, f, r.energy);
        }
    }
}

#[test]
fn unsupported_recursion_is_reported() {
    let text = "C_f(n) = 1 if n <= 0\nC_f(n) = 1 + C_f(n - 1) + C_f(n - 2) if n > 0\n";
    let sys = parse_crs(text).unwrap();
    let sol = solve(&sys);
    assert!(matches!(sol.form("f"), Err(SolveError::Unsolvable { .. })));
    let mut fib = vec![1i64, 1];
    for k in 1..=5 {
        fib.push(1 + fib[k] + fib[k - 1]);
    }
    assert_eq!(evaluate_numeric(&sys, "f", &ints(&[5]), EvalMode::Worst).unwrap(), rat(fib[6]));
}
