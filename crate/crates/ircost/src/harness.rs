//! Input builders for the corpus programs.
//!
//! Every harness maps a point of its sweep (for example `P = 7`) to the
//! arguments and memory of one run, either a worst case or a seeded random
//! case. Arrays live at fixed, well separated base addresses.

use std::collections::BTreeMap;

use ircost_core::interp::Fixture;
use ircost_core::num::BigInt;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Input {
    pub args: Vec<BigInt>,
    pub fixture: Fixture,
}

pub struct Harness {
    pub name: &'static str,
    /// Corpus file holding the program.
    pub file: &'static str,
    pub function: &'static str,
    /// Names of the sweep coordinates, in order.
    pub sweep: &'static [&'static str],
    worst: fn(&[i64]) -> Input,
    random: fn(&[i64], &mut ChaCha8Rng) -> Input,
}

impl Harness {
    pub fn worst(&self, point: &[i64]) -> Input {
        (self.worst)(point)
    }

    pub fn random(&self, point: &[i64], rng: &mut ChaCha8Rng) -> Input {
        (self.random)(point, rng)
    }
}

fn ints(v: &[i64]) -> Vec<BigInt> {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

fn store(mem: &mut BTreeMap<BigInt, BigInt>, base: i64, vals: &[i64]) {
    for (k, v) in vals.iter().enumerate() {
        mem.insert(BigInt::from(base + k as i64), BigInt::from(*v));
    }
}

fn with_memory(args: &[i64], arrays: &[(i64, Vec<i64>)]) -> Input {
    let mut fx = Fixture::default();
    for (base, vals) in arrays {
        store(&mut fx.memory, *base, vals);
    }
    Input { args: ints(args), fixture: fx }
}

fn randvec(rng: &mut ChaCha8Rng, n: i64, lo: i64, hi: i64) -> Vec<i64> {
    (0..n.max(0)).map(|_| rng.gen_range(lo..=hi)).collect()
}

fn mac_worst(p: &[i64]) -> Input {
    let n = p[0];
    with_memory(&[1000, 2000, n], &[(1000, (1..=n).collect()), (2000, (1..=n).rev().collect())])
}

fn mac_random(p: &[i64], rng: &mut ChaCha8Rng) -> Input {
    let n = p[0];
    with_memory(&[1000, 2000, n], &[(1000, randvec(rng, n, -50, 50)), (2000, randvec(rng, n, -50, 50))])
}

fn matmul_worst(p: &[i64]) -> Input {
    let n = p[0];
    let m: Vec<i64> = (0..n * n).collect();
    with_memory(&[10000, 20000, 30000, n], &[(10000, m.clone()), (20000, m)])
}

fn matmul_random(p: &[i64], rng: &mut ChaCha8Rng) -> Input {
    let n = p[0];
    with_memory(&[10000, 20000, 30000, n], &[(10000, randvec(rng, n * n, -9, 9)), (20000, randvec(rng, n * n, -9, 9))])
}

fn base64_worst(p: &[i64]) -> Input {
    let n = p[0];
    with_memory(&[1000, 5000, n], &[(1000, (0..n).map(|k| (k * 37) % 256).collect())])
}

fn base64_random(p: &[i64], rng: &mut ChaCha8Rng) -> Input {
    let n = p[0];
    with_memory(&[1000, 5000, n], &[(1000, randvec(rng, n, 0, 255))])
}

fn sort_worst(p: &[i64]) -> Input {
    let n = p[0];
    with_memory(&[100, n], &[(100, (1..=n).rev().collect())])
}

fn sort_random(p: &[i64], rng: &mut ChaCha8Rng) -> Input {
    let n = p[0];
    let mut v: Vec<i64> = (1..=n).collect();
    v.shuffle(rng);
    with_memory(&[100, n], &[(100, v)])
}

fn lev_worst(p: &[i64]) -> Input {
    let (a, b) = (p[0], p[1]);
    with_memory(&[1000, 2000, a, b], &[(1000, vec![1; a.max(0) as usize]), (2000, vec![2; b.max(0) as usize])])
}

fn lev_random(p: &[i64], rng: &mut ChaCha8Rng) -> Input {
    let (a, b) = (p[0], p[1]);
    with_memory(&[1000, 2000, a, b], &[(1000, randvec(rng, a, 0, 3)), (2000, randvec(rng, b, 0, 3))])
}

const SBS_WORD: i64 = 1000;
const SBS_DICT: i64 = 2000;
const SBS_WORDS: i64 = 3000;
const SBS_STRIDE: i64 = 100;

fn sbs_input(a: i64, b: i64, word: Vec<i64>, words: Vec<Vec<i64>>) -> Input {
    let c = words.len() as i64;
    let mut arrays = vec![(SBS_WORD, word), (SBS_DICT, (0..c).map(|k| SBS_WORDS + k * SBS_STRIDE).collect())];
    for (k, w) in words.into_iter().enumerate() {
        arrays.push((SBS_WORDS + k as i64 * SBS_STRIDE, w));
    }
    with_memory(&[SBS_WORD, a, SBS_DICT, b, c], &arrays)
}

/// Later dictionary words share longer prefixes with the word, so the
/// distances come out in descending order and the final sort swaps often.
fn sbs_worst(p: &[i64]) -> Input {
    let (a, b, c) = (p[0], p[1], p[2]);
    let word: Vec<i64> = vec![1; a.max(0) as usize];
    let words = (0..c).map(|k| (0..b).map(|j| if j < k { 1 } else { 2 }).collect()).collect();
    sbs_input(a, b, word, words)
}

fn sbs_random(p: &[i64], rng: &mut ChaCha8Rng) -> Input {
    let (a, b, c) = (p[0], p[1], p[2]);
    let word = randvec(rng, a, 0, 3);
    let words = (0..c).map(|_| randvec(rng, b, 0, 3)).collect();
    sbs_input(a, b, word, words)
}

fn gcd_worst(p: &[i64]) -> Input {
    with_memory(&[p[0], p[1]], &[])
}

fn gcd_random(p: &[i64], rng: &mut ChaCha8Rng) -> Input {
    let hi = p[0].max(p[1]).max(1);
    with_memory(&[rng.gen_range(1..=hi), rng.gen_range(1..=hi)], &[])
}

fn proc_worst(p: &[i64]) -> Input {
    let n = p[0];
    with_memory(&[1000, n], &[(1000, vec![1; n.max(0) as usize])])
}

fn proc_random(p: &[i64], rng: &mut ChaCha8Rng) -> Input {
    let n = p[0];
    with_memory(&[1000, n], &[(1000, randvec(rng, n, 0, 9))])
}

fn max_worst(p: &[i64]) -> Input {
    with_memory(&[p[0], p[1]], &[])
}

fn max_random(p: &[i64], rng: &mut ChaCha8Rng) -> Input {
    let hi = p[0].max(p[1]).max(0);
    with_memory(&[rng.gen_range(0..=hi), rng.gen_range(0..=hi)], &[])
}

static HARNESSES: &[Harness] = &[
    Harness { name: "mac", file: "mac.mir", function: "mac", sweep: &["P"], worst: mac_worst, random: mac_random },
    Harness { name: "matmul", file: "matmul.mir", function: "matmul", sweep: &["P"], worst: matmul_worst, random: matmul_random },
    Harness { name: "base64", file: "base64.mir", function: "base64", sweep: &["P"], worst: base64_worst, random: base64_random },
    Harness { name: "sort", file: "insertion_sort.mir", function: "sort", sweep: &["P"], worst: sort_worst, random: sort_random },
    Harness {
        name: "levenshtein",
        file: "levenshtein.mir",
        function: "levenshtein",
        sweep: &["A", "B"],
        worst: lev_worst,
        random: lev_random,
    },
    Harness {
        name: "sortbysimilarity",
        file: "sortbysimilarity.mir",
        function: "sortbysimilarity",
        sweep: &["A", "B", "C"],
        worst: sbs_worst,
        random: sbs_random,
    },
    Harness { name: "gcd", file: "gcd.mir", function: "gcd", sweep: &["a", "b"], worst: gcd_worst, random: gcd_random },
    Harness { name: "proc", file: "proc.mir", function: "proc", sweep: &["l"], worst: proc_worst, random: proc_random },
    Harness {
        name: "max_example",
        file: "max_example.mir",
        function: "max_example",
        sweep: &["A", "B"],
        worst: max_worst,
        random: max_random,
    },
];

pub fn harnesses() -> &'static [Harness] {
    HARNESSES
}

pub fn harness(name: &str) -> Option<&'static Harness> {
    HARNESSES.iter().find(|h| h.name == name)
}
