//! Acceptance suite: one line per criterion, non-zero exit on any failure.
//!
//! Runs with `cargo test -p lumpkit --test acceptance`.

#![allow(clippy::needless_range_loop)]

use std::collections::BTreeSet;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use lumpkit::codec::{build_decoder, encode};
use lumpkit::enumerate::{admissible_pairs, brute_force_sfs2, list_all_sfs2, Objective};
use lumpkit::fixtures::{random_ergodic_adjacency, random_model_on, toy_adjacency, toy_model};
use lumpkit::infotheory::{
    conditional_block_distribution, growth_rate_estimate, lumped_entropy_report, marginal_entropy,
    preimage_count, simulate,
};
use lumpkit::markov::TransitionModel;
use lumpkit::ngram::{experiment_report, preprocess, train_bigram, PreprocessPolicy, Strategy};
use lumpkit::sfs::{satisfies_sfs2, DEFAULT_WORK_BUDGET};
use lumpkit::{AdjacencyStructure, Partition};
use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RANDOM_CHAINS: usize = 60;

/// A test chain together with every SFS(2) lumping found for it.
struct Case {
    name: String,
    model: TransitionModel<f64>,
    lumpings: Vec<Partition>,
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn one_based(blocks: &[Vec<usize>]) -> String {
    blocks
        .iter()
        .map(|b| {
            format!(
                "{{{}}}",
                b.iter()
                    .map(|x| (x + 1).to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            )
        })
        .collect()
}

fn table_two() -> Vec<BTreeSet<Partition>> {
    let p = |blocks: &[&[usize]]| {
        let blocks: Vec<Vec<usize>> = blocks
            .iter()
            .map(|b| b.iter().map(|x| x - 1).collect())
            .collect();
        Partition::from_partial_blocks(6, &blocks).unwrap()
    };
    vec![
        [
            p(&[&[1, 2]]),
            p(&[&[1, 3]]),
            p(&[&[1, 5]]),
            p(&[&[2, 3]]),
            p(&[&[4, 5]]),
        ]
        .into(),
        [
            p(&[&[1, 2, 3]]),
            p(&[&[1, 2], &[4, 5]]),
            p(&[&[1, 3], &[4, 5]]),
            p(&[&[2, 3], &[4, 5]]),
        ]
        .into(),
        [p(&[&[1, 2, 3], &[4, 5]])].into(),
    ]
}

fn criterion_1() -> Result<String, String> {
    let start = Instant::now();
    let adj = toy_adjacency();
    let pairs = admissible_pairs(&adj);
    let levels = list_all_sfs2(&adj);
    let elapsed = start.elapsed();
    let got: Vec<(usize, usize)> = pairs.pairs().iter().map(|&(a, b)| (a + 1, b + 1)).collect();
    check(got == [(1, 2), (1, 3), (1, 5), (2, 3), (4, 5)], || {
        format!("pairs {got:?}")
    })?;
    let got: Vec<BTreeSet<Partition>> = levels
        .iter()
        .map(|l| l.partitions.iter().cloned().collect())
        .collect();
    let expected = table_two();
    if got != expected {
        let show = |ls: &[BTreeSet<Partition>]| {
            ls.iter()
                .map(|l| l.iter().map(|p| one_based(&p.blocks())).collect::<Vec<_>>())
                .collect::<Vec<_>>()
        };
        return Err(format!(
            "levels {:?}, expected {:?}",
            show(&got),
            show(&expected)
        ));
    }
    check(elapsed < Duration::from_secs(1), || {
        format!("took {elapsed:?}")
    })?;
    let sizes: Vec<usize> = got.iter().map(BTreeSet::len).collect();
    Ok(format!(
        "pairs {{1,2}},{{1,3}},{{1,5}},{{2,3}},{{4,5}}; level sizes {sizes:?}; {elapsed:?}"
    ))
}

fn random_cases() -> Vec<(TransitionModel<f64>, Vec<Partition>, BTreeSet<Partition>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5f5);
    (0..RANDOM_CHAINS)
        .map(|_| {
            let n = rng.random_range(4..=8);
            let density = rng.random_range(0.25..=0.6);
            let adj = random_ergodic_adjacency(n, density, &mut rng);
            let model = random_model_on::<f64, _>(&adj, &mut rng);
            let found: Vec<Partition> = list_all_sfs2(&adj)
                .into_iter()
                .flat_map(|l| l.partitions)
                .collect();
            let mut oracle = brute_force_sfs2(&adj, 2).unwrap();
            oracle.remove(&Partition::identity(n));
            (model, found, oracle)
        })
        .collect()
}

fn criterion_2(cases: &mut Vec<Case>) -> Result<String, String> {
    let start = Instant::now();
    let generated = random_cases();
    let elapsed = start.elapsed();
    let mut total = 0;
    for (i, (model, found, oracle)) in generated.into_iter().enumerate() {
        let found_set: BTreeSet<Partition> = found.iter().cloned().collect();
        check(found_set.len() == found.len(), || {
            format!("chain {i}: duplicate partitions")
        })?;
        check(found_set == oracle, || {
            format!(
                "chain {i}: search found {}, brute force {}",
                found_set.len(),
                oracle.len()
            )
        })?;
        total += found.len();
        cases.push(Case {
            name: format!("random chain {i}"),
            model,
            lumpings: found,
        });
    }
    check(elapsed < Duration::from_secs(60), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "{RANDOM_CHAINS} chains, {total} lumpings, all equal to brute force; {elapsed:?}"
    ))
}

fn criterion_3(cases: &[Case]) -> Result<String, String> {
    let mut worst = 0.0f64;
    let mut count = 0;
    for case in cases {
        let mu = case.model.stationary().map_err(|e| e.to_string())?;
        for p in &case.lumpings {
            let r = lumped_entropy_report(&case.model, &mu, p);
            let gap = (r.h_rate_x - r.h_rate_y_order2).abs();
            worst = worst.max(gap);
            count += 1;
            check(gap < 1e-9, || {
                format!("{}: {} gap {gap:e}", case.name, one_based(&p.blocks()))
            })?;
        }
    }
    Ok(format!(
        "{count} lumpings, max |H-rate(X) - H(Y3|Y1Y2)| = {worst:.3e}"
    ))
}

fn criterion_4() -> Result<String, String> {
    let model = toy_model::<f64>();
    let mu = model.stationary().map_err(|e| e.to_string())?;
    let p = lumpkit::fixtures::toy_solution();
    let cond = conditional_block_distribution(&model, &mu, &p);
    let reference = cond.values().next().ok_or("no conditioning pairs")?.clone();
    let mut spread = 0.0f64;
    for dist in cond.values() {
        for (a, b) in dist.iter().zip(&reference) {
            spread = spread.max((a - b).abs());
        }
    }
    check(spread < 1e-12, || {
        format!("conditional distributions differ by {spread:e}")
    })?;
    let log3 = 3f64.log2();
    let h_y = marginal_entropy(&mu, &p);
    let h_rate = model.entropy_rate(&mu);
    check((h_y - log3).abs() < 1e-12, || format!("H(Y) = {h_y}"))?;
    check((h_rate - log3).abs() < 1e-12, || {
        format!("H-rate(X) = {h_rate}")
    })?;
    Ok(format!(
        "{} conditioning pairs, spread {spread:.1e}; H(Y) = H-rate(X) = {h_y:.12} bits",
        cond.len()
    ))
}

fn max_preimage_count(
    model: &TransitionModel<f64>,
    p: &Partition,
    runs: u64,
    len: usize,
) -> Result<u64, String> {
    let mu = model.stationary().map_err(|e| e.to_string())?;
    let mut worst = 0;
    for seed in 0..runs {
        let ys = encode(p, &simulate(model, &mu, len, seed));
        let trace = preimage_count(model.adjacency(), p, &ys, None).map_err(|e| e.to_string())?;
        worst = worst.max(trace.max());
    }
    Ok(worst)
}

fn criterion_5(cases: &[Case]) -> Result<String, String> {
    let toy = &cases[0];
    let mut toy_max = 0;
    for p in &toy.lumpings {
        let m = max_preimage_count(&toy.model, p, 100, 10_000)?;
        check(m <= 36, || {
            format!("toy {}: t_n reached {m}", one_based(&p.blocks()))
        })?;
        toy_max = toy_max.max(m);
    }
    let mut ratio = 0.0f64;
    for case in &cases[1..] {
        let n = case.model.n_states() as u64;
        for p in &case.lumpings {
            let m = max_preimage_count(&case.model, p, 5, 2_000)?;
            check(m <= n * n, || {
                format!("{}: t_n reached {m} > N^2", case.name)
            })?;
            ratio = ratio.max(m as f64 / (n * n) as f64);
        }
    }
    Ok(format!(
        "toy max t_n = {toy_max} (<= 36); random chains max t_n / N^2 = {ratio:.3}"
    ))
}

/// Exact preimage counts by big-integer dynamic programming.
fn exact_counts(adj: &AdjacencyStructure, p: &Partition, ys: &[usize]) -> Vec<BigUint> {
    let n = adj.n_states();
    let mut c: Vec<BigUint> = (0..n)
        .map(|x| BigUint::from(u8::from(p.block_of(x) == ys[0])))
        .collect();
    let mut out = vec![c.iter().sum()];
    for &y in &ys[1..] {
        let mut next = vec![BigUint::zero(); n];
        for x in 0..n {
            for x2 in 0..n {
                if adj.has_edge(x, x2) && p.block_of(x2) == y {
                    next[x2] += &c[x];
                }
            }
        }
        c = next;
        out.push(c.iter().sum());
    }
    out
}

fn criterion_6() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let rows: Vec<Vec<(usize, f64)>> = (0..4)
        .map(|_| {
            let w: Vec<f64> = (0..4).map(|_| rng.random_range(0.1..1.0)).collect();
            let total: f64 = w.iter().sum();
            w.into_iter()
                .enumerate()
                .map(|(j, v)| (j, v / total))
                .collect()
        })
        .collect();
    let model = TransitionModel::new(rows, None).map_err(|e| e.to_string())?;
    let mu = model.stationary().map_err(|e| e.to_string())?;
    let len = 200;
    let mut notes = Vec::new();
    for blocks in [vec![vec![0, 1], vec![2, 3]], vec![vec![0, 1, 2], vec![3]]] {
        let p = Partition::from_blocks(4, &blocks).unwrap();
        let ys = encode(&p, &simulate(&model, &mu, len, 17));
        let trace = preimage_count(model.adjacency(), &p, &ys, None).map_err(|e| e.to_string())?;
        let estimate = growth_rate_estimate(&trace).map_err(|e| e.to_string())?;
        let exact = exact_counts(model.adjacency(), &p, &ys);
        let first = exact[len / 2 - 1].to_f64().unwrap().log2();
        let last = exact[len - 1].to_f64().unwrap().log2();
        let oracle = (last - first) / (len - len / 2) as f64;
        if blocks[0].len() == 2 {
            // every state has exactly two successors in each block
            check((oracle - 1.0).abs() < 1e-12, || {
                format!("2+2 oracle slope {oracle}")
            })?;
        }
        let rel = (estimate - oracle).abs() / oracle;
        check(rel < 0.1, || {
            format!("{blocks:?}: estimate {estimate}, oracle {oracle}")
        })?;
        notes.push(format!(
            "{} -> {estimate:.4} vs {oracle:.4} bits/step",
            one_based(&blocks)
        ));
    }
    Ok(notes.join("; "))
}

fn random_refinement(p: &Partition, rng: &mut ChaCha8Rng) -> Partition {
    let raw: Vec<(usize, usize)> = (0..p.n_states())
        .map(|x| (p.block_of(x), rng.random_range(0..p.n_states())))
        .collect();
    Partition::canonicalize(&raw)
}

fn criterion_7(cases: &[Case]) -> Result<String, String> {
    let all: Vec<(&Case, &Partition)> = cases
        .iter()
        .flat_map(|c| c.lumpings.iter().map(move |p| (c, p)))
        .collect();
    check(!all.is_empty(), || "no lumpings to refine".into())?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut proper = 0;
    for _ in 0..1000 {
        let (case, p) = all[rng.random_range(0..all.len())];
        let r = random_refinement(p, &mut rng);
        check(r.is_refinement_of(p), || {
            "generated partition is not a refinement".into()
        })?;
        if r != *p {
            proper += 1;
        }
        check(satisfies_sfs2(case.model.adjacency(), &r), || {
            format!(
                "{}: refinement {} of {} fails",
                case.name,
                one_based(&r.blocks()),
                one_based(&p.blocks())
            )
        })?;
    }
    Ok(format!("1000 refinements ({proper} proper) all SFS(2)"))
}

fn criterion_8() -> Result<String, String> {
    let model = toy_model::<f64>();
    let mu = model.stationary().map_err(|e| e.to_string())?;
    let p = lumpkit::fixtures::toy_solution();
    let decoder =
        build_decoder(model.adjacency(), &p, 2, DEFAULT_WORK_BUDGET).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for seed in 0..100 {
        let xs = simulate(&model, &mu, 10_000, seed);
        let ys = encode(&p, &xs);
        let whole = decoder.decode(&ys, None).map_err(|e| e.to_string())?;
        check(whole.tail == xs[1..], || {
            format!("seed {seed}: tail differs")
        })?;
        let mut cuts: Vec<usize> = (0..10).map(|_| rng.random_range(0..=ys.len())).collect();
        cuts.sort_unstable();
        let mut stream = decoder.stream();
        let mut out = Vec::new();
        let mut from = 0;
        for &cut in cuts.iter().chain([ys.len()].iter()) {
            out.extend(stream.push_all(&ys[from..cut]).map_err(|e| e.to_string())?);
            from = cut;
        }
        out.extend(stream.finish().map_err(|e| e.to_string())?);
        check(out == whole.tail, || {
            format!("seed {seed}: split stream differs at cuts {cuts:?}")
        })?;
    }
    Ok("100 seeds x 10^4 symbols decoded exactly; split streams agree".into())
}

fn criterion_9(cases: &[Case]) -> Result<String, String> {
    let mut lumpings = 0;
    for case in cases {
        let bounds = case
            .model
            .adjacency()
            .lower_bounds()
            .map_err(|e| e.to_string())?;
        let eps = 1e-8;
        check(bounds.spectral <= bounds.max_degree as f64 + eps, || {
            format!(
                "{}: spectral radius {} > max degree {}",
                case.name, bounds.spectral, bounds.max_degree
            )
        })?;
        check(bounds.spectral >= bounds.min_degree as f64 - eps, || {
            format!(
                "{}: spectral radius {} < min degree {}",
                case.name, bounds.spectral, bounds.min_degree
            )
        })?;
        for p in &case.lumpings {
            lumpings += 1;
            check(p.n_blocks() >= bounds.max_degree, || {
                format!(
                    "{}: M = {} below max degree {}",
                    case.name,
                    p.n_blocks(),
                    bounds.max_degree
                )
            })?;
        }
    }
    Ok(format!(
        "{} chains, {lumpings} lumpings consistent with the degree bounds",
        cases.len()
    ))
}

fn criterion_10() -> Result<String, String> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/moby_dick_ch01-45.txt");
    let raw = std::fs::read(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    check(raw.len() >= 200_000, || {
        format!("corpus has only {} bytes", raw.len())
    })?;
    let start = Instant::now();
    let corpus = preprocess(&raw, PreprocessPolicy::gatsby()).map_err(|e| e.to_string())?;
    let trained = train_bigram::<f64>(&corpus).map_err(|e| e.to_string())?;
    let model = &trained.model;
    let n = model.n_states();
    check((35..=50).contains(&n), || format!("alphabet size {n}"))?;
    let report = experiment_report(model, Strategy::Greedy, Objective::MarginalEntropy)
        .map_err(|e| e.to_string())?;
    let possible = report.admissible_pairs.possible_pairs();
    let admissible = report.admissible_pairs.len();
    check(admissible * 10 < possible, || {
        format!("{admissible} admissible of {possible} pairs")
    })?;
    let before = report.baseline_marginal_entropy_bits;
    let path: Vec<f64> = report
        .records
        .iter()
        .map(|r| r.marginal_entropy_bits)
        .collect();
    let after = *path.last().ok_or("greedy found no lumping")?;
    check(after < before, || {
        format!("greedy marginal entropy {after} not below {before}")
    })?;
    check(path.windows(2).all(|w| w[1] <= w[0]), || {
        format!("greedy path not monotone: {path:?}")
    })?;
    check(report.records.iter().all(|r| r.preserved), || {
        "a greedy lumping loses information".into()
    })?;
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(300), || {
        format!("took {elapsed:?}")
    })?;
    let merged: Vec<String> = report
        .merged_sets(model.labels())
        .iter()
        .map(|b| format!("{{{}}}", b.join(",")))
        .collect();
    println!("    reference points (logged only): 41 symbols, max degree 37, 21 pairs, 4.3100 -> 4.3044 bits");
    println!(
        "    measured: {n} symbols ({} dropped), max degree {}, min degree {}, spectral radius {:.3}",
        trained.dropped.len(),
        report.bounds.max_degree,
        report.bounds.min_degree,
        report.bounds.spectral
    );
    println!(
        "    measured: greedy path length {}, final merged sets {}",
        path.len(),
        merged.join("")
    );
    Ok(format!(
        "N = {n}, {admissible}/{possible} pairs admissible, greedy {before:.4} -> {after:.4} bits; {elapsed:?}"
    ))
}

fn run(id: usize, title: &str, f: impl FnOnce() -> Result<String, String>) -> bool {
    let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        Err(format!("panicked: {msg}"))
    });
    match outcome {
        Ok(detail) => {
            println!("criterion {id:>2} PASS  {title}: {detail}");
            true
        }
        Err(detail) => {
            println!("criterion {id:>2} FAIL  {title}: {detail}");
            false
        }
    }
}

fn main() {
    let toy = toy_model::<f64>();
    let toy_lumpings = list_all_sfs2(toy.adjacency())
        .into_iter()
        .flat_map(|l| l.partitions)
        .collect();
    let mut cases = vec![Case {
        name: "toy".into(),
        model: toy,
        lumpings: toy_lumpings,
    }];

    let mut ok = true;
    ok &= run(1, "toy chain pairs and levels", criterion_1);
    ok &= run(2, "search equals brute force", || criterion_2(&mut cases));
    ok &= run(3, "entropy rate preserved", || criterion_3(&cases));
    ok &= run(4, "toy lumping is iid", criterion_4);
    ok &= run(5, "preimage counts bounded", || criterion_5(&cases));
    ok &= run(6, "preimage growth rate", criterion_6);
    ok &= run(7, "refinement closure", || criterion_7(&cases));
    ok &= run(8, "codec round trip", criterion_8);
    ok &= run(9, "degree bounds", || criterion_9(&cases));
    ok &= run(10, "corpus pipeline", criterion_10);
    if !ok {
        std::process::exit(1);
    }
}
