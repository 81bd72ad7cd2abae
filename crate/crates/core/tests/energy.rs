use std::collections::BTreeMap;
use std::path::PathBuf;

use ircost_core::energy::{
    tiwari_energy, xs1_energy, xs1_single_thread, EnergyModel, GroupModel, InstructionCounts, MappingModel,
    TiwariModel, Xs1Model,
};
use ircost_core::interp::{run, Fixture};
use ircost_core::num::{ratio, BigInt, Rational};
use ircost_core::{parse_module, IrModule};
use proptest::prelude::*;

const NAMES: [&str; 5] = ["add", "mul", "sdiv", "memload", "br"];

fn seq() -> impl Strategy<Value = Vec<&'static str>> {
    prop::collection::vec(prop::sample::select(NAMES.to_vec()), 0..30)
}

fn frac(lo: i64, hi: i64, den: i64) -> impl Strategy<Value = Rational> {
    (lo..=hi).prop_map(move |n| ratio(n, den))
}

fn xs1() -> impl Strategy<Value = Xs1Model> {
    (
        frac(0, 50, 1000),
        1i64..1000,
        frac(1, 8, 4),
        prop::collection::vec(frac(50, 200, 100), 1..4),
        prop::collection::vec(frac(0, 90, 1000), NAMES.len()),
    )
        .prop_map(|(p_base, t, overhead, m, p)| Xs1Model {
            p_base,
            t_clk: ratio(1, t * 1_000_000),
            overhead,
            m,
            p: NAMES.iter().map(|s| s.to_string()).zip(p).collect(),
        })
}

fn tiwari() -> impl Strategy<Value = TiwariModel> {
    (
        prop::collection::vec(frac(0, 40, 4), NAMES.len()),
        prop::collection::vec(frac(0, 10, 4), NAMES.len() * NAMES.len()),
        prop::collection::vec(frac(0, 20, 2), 0..3),
    )
        .prop_map(|(b, o, externals)| {
            let mut m = TiwariModel { externals, ..Default::default() };
            for (n, c) in NAMES.iter().zip(b) {
                m.base.insert(n.to_string(), c);
            }
            let pairs = NAMES.iter().flat_map(|a| NAMES.iter().map(move |b| (a.to_string(), b.to_string())));
            m.overhead = pairs.zip(o).collect();
            m
        })
}

fn concat(a: &[&'static str], b: &[&'static str]) -> Vec<&'static str> {
    a.iter().chain(b).copied().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn single_thread_form_is_the_full_form_at_one_thread(m in xs1(), s in seq()) {
        let c = InstructionCounts::from_sequence(s.iter().copied());
        prop_assert_eq!(xs1_energy(&c, &m).unwrap(), xs1_single_thread(&c, &m).unwrap());
    }
}

proptest! {
    #[test]
    fn xs1_is_linear_in_counts(m in xs1(), a in seq(), b in seq()) {
        let whole = InstructionCounts::from_sequence(concat(&a, &b));
        let ca = InstructionCounts::from_sequence(a.iter().copied());
        let cb = InstructionCounts::from_sequence(b.iter().copied());
        let sum = xs1_energy(&ca, &m).unwrap() + xs1_energy(&cb, &m).unwrap();
        prop_assert_eq!(xs1_energy(&whole, &m).unwrap(), sum);
        let twice = InstructionCounts::from_sequence(concat(&a, &a));
        prop_assert_eq!(xs1_single_thread(&twice, &m).unwrap(), xs1_single_thread(&ca, &m).unwrap() * ratio(2, 1));
    }

    #[test]
    fn tiwari_is_linear_up_to_the_junction(m in tiwari(), a in seq(), b in seq()) {
        let whole = InstructionCounts::from_sequence(concat(&a, &b));
        let ca = InstructionCounts::from_sequence(a.iter().copied());
        let cb = InstructionCounts::from_sequence(b.iter().copied());
        let externals: Rational = m.externals.iter().fold(ratio(0, 1), |x, y| x + y);
        let mut expect = tiwari_energy(&ca, &m).unwrap() + tiwari_energy(&cb, &m).unwrap() - externals;
        if let (Some(x), Some(y)) = (a.last(), b.first()) {
            expect += m.pair(x, y);
        }
        prop_assert_eq!(tiwari_energy(&whole, &m).unwrap(), expect);
    }

    #[test]
    fn pair_totals_follow_names(s in seq()) {
        let c = InstructionCounts::from_sequence(s.iter().copied());
        let names: u64 = c.by_name.values().sum();
        let pairs: u64 = c.by_pair.values().sum();
        prop_assert_eq!(pairs, names.saturating_sub(1));
    }
}

fn corpus(name: &str) -> IrModule {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name);
    parse_module(&std::fs::read_to_string(p).unwrap()).unwrap()
}

/// Every site of the module priced at `1 + index / 4`.
fn full_mapping(m: &IrModule) -> MappingModel {
    let mut map = MappingModel { phi_adjust: Some(ratio(1, 2)), ..Default::default() };
    for f in &m.functions {
        for bb in &f.blocks {
            for k in 0..bb.insts.len() {
                map.insert_site(&f.name, &bb.label, k, &[ratio(1, 1), ratio(k as i64, 4)]);
            }
        }
    }
    map
}

#[test]
fn run_energy_is_the_sum_of_block_costs() {
    let m = corpus("levenshtein.mir");
    let mut fx = Fixture::default();
    for (k, v) in [1, 2, 3, 1].into_iter().enumerate() {
        fx.memory.insert(BigInt::from(1000 + k as i64), BigInt::from(v));
    }
    for (k, v) in [2, 3, 1].into_iter().enumerate() {
        fx.memory.insert(BigInt::from(2000 + k as i64), BigInt::from(v));
    }
    let args: Vec<BigInt> = [1000, 2000, 4, 3].iter().map(|&x| BigInt::from(x)).collect();
    let models = [
        EnergyModel::Group(GroupModel::unit()),
        EnergyModel::Group(GroupModel { e: [ratio(16, 5), ratio(21, 10), ratio(19, 2), ratio(1, 1)], ..GroupModel::unit() }),
        EnergyModel::Mapping(full_mapping(&m)),
    ];
    for em in &models {
        let r = run(&m, "levenshtein", &args, &fx, em).unwrap();
        assert_eq!(r.energy, r.block_energy, "{}", em.kind());
    }
    let unit = run(&m, "levenshtein", &args, &fx, &models[0]).unwrap();
    let total: u64 = unit.counts.by_name.values().sum();
    assert_eq!(unit.energy, ratio(total as i64, 1));
}

#[test]
fn mapping_prices_phi_sites_with_the_adjustment() {
    let m = parse_module("define @f(%n) {\nentry:\n  br label %h\nh:\n  %i = phi [0, %entry]\n  ret %i\n}").unwrap();
    let mut map = MappingModel::default();
    map.insert_site("f", "entry", 0, &[ratio(1, 1)]);
    map.insert_site("f", "h", 0, &[ratio(3, 2), ratio(2, 1), ratio(1, 2)]);
    map.insert_site("f", "h", 1, &[]);
    let plain = run(&m, "f", &[BigInt::from(1)], &Fixture::default(), &EnergyModel::Mapping(map.clone())).unwrap();
    assert_eq!(plain.energy, ratio(5, 1));
    map.phi_adjust = Some(ratio(1, 2));
    let adjusted = run(&m, "f", &[BigInt::from(1)], &Fixture::default(), &EnergyModel::Mapping(map)).unwrap();
    assert_eq!(adjusted.energy, ratio(3, 1));
}

#[test]
fn unpriced_instruction_is_an_error() {
    let m = corpus("gcd.mir");
    let t = TiwariModel { base: BTreeMap::new(), ..Default::default() };
    let err = run(&m, "gcd", &[BigInt::from(4), BigInt::from(6)], &Fixture::default(), &EnergyModel::Tiwari(t));
    assert!(err.is_err());
}
