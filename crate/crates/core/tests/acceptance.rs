//! Acceptance checks, one line per criterion.
//!
//! Criterion 6 runs for about two hours and only when `CARP_SLOW=1`.
//! Criterion 10 needs the EGL-G instance files in `CARP_EGL_G_DIR`.

#![allow(clippy::needless_range_loop)]

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use carp_core::harness::{
    generate_instance, run_experiment, wilcoxon_rank_sum, wilcoxon_rank_sum_normal, Budget, ExperimentSpec, Variant,
};
use carp_core::rco::{average_task_rank, classify_links};
use carp_core::search::{path_scanning, solve, Algorithm, ClockMode, SearchConfig, SearchTrace};
use carp_core::{
    load_instance_file, min_vehicles, rco_split, validate, write_instance, write_solution, Problem, RankMatrix,
    RcoParams, Route, Solution, TaskId,
};
use common::brute_force_optimum;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = fn() -> Verdict;

fn pass_if(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

// Link costs (times four) of the eight-task worked example, tasks in the
// order (v0,v1) (v0,v8) (v0,v10) (v2,v3) (v3,v4) (v5,v6) (v6,v7) (v9,v10).
const EXAMPLE_LINKS: [[i64; 8]; 8] = [
    [0, 4, 4, 18, 16, 8, 12, 8],
    [4, 0, 4, 20, 16, 12, 14, 6],
    [4, 4, 0, 18, 16, 12, 16, 4],
    [18, 20, 18, 0, 4, 24, 28, 22],
    [16, 16, 16, 4, 0, 24, 28, 20],
    [8, 12, 12, 24, 24, 0, 4, 16],
    [12, 14, 16, 28, 28, 4, 0, 18],
    [8, 6, 4, 22, 20, 16, 18, 0],
];

const EXAMPLE_RANKS: [[u32; 8]; 8] = [
    [0, 1, 1, 7, 6, 3, 5, 3],
    [1, 0, 1, 7, 6, 4, 5, 3],
    [1, 1, 0, 7, 5, 4, 5, 1],
    [2, 4, 2, 0, 1, 6, 7, 5],
    [2, 2, 2, 1, 0, 6, 7, 5],
    [2, 3, 3, 6, 6, 0, 1, 5],
    [2, 3, 4, 6, 6, 1, 0, 5],
    [3, 2, 1, 7, 6, 4, 5, 0],
];

fn example_matrix() -> RankMatrix {
    RankMatrix::from_link_numerators(8, EXAMPLE_LINKS.iter().flatten().copied().collect())
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let ranks = example_matrix();
    let took = start.elapsed();
    let mut wrong = Vec::new();
    for a in 0..8 {
        for b in (0..8).filter(|&b| b != a) {
            if ranks.rank(a, b) != EXAMPLE_RANKS[a][b] {
                wrong.push((a, b));
            }
        }
    }
    pass_if(
        wrong.is_empty() && took < Duration::from_millis(1),
        format!("56 entries, mismatches {wrong:?}, {took:?}"),
    )
}

fn criterion_2() -> Verdict {
    let start = Instant::now();
    let ranks = example_matrix();
    let route = |tasks: &[usize]| {
        let mut ids = vec![TaskId::DEPOT];
        ids.extend(tasks.iter().map(|&t| TaskId::forward(t)));
        ids.push(TaskId::DEPOT);
        Route::raw(ids)
    };
    // x1..x3, x4..x6, x7..x8
    let s = Solution::new(vec![route(&[0, 3, 4]), route(&[7, 6, 5]), route(&[1, 2])]);
    let avg = average_task_rank(&s, &ranks);
    let classes: Vec<_> = s.routes().iter().map(|r| classify_links(r, &ranks, avg)).collect();
    // Global link labels: route k, position i separates x_(offset+i) and x_(offset+i+1).
    let offsets = [1, 4, 7];
    let mut good = Vec::new();
    let mut poor = Vec::new();
    for (k, c) in classes.iter().enumerate() {
        good.extend(c.good.iter().map(|&i| (offsets[k] + i, offsets[k] + i + 1)));
        poor.extend(c.poor.iter().map(|&i| (offsets[k] + i, offsets[k] + i + 1)));
    }
    let took = start.elapsed();
    pass_if(
        avg == 3.0 && good == [(2, 3), (5, 6), (7, 8)] && poor == [(1, 2), (4, 5)] && took < Duration::from_millis(1),
        format!("average {avg}, good {good:?}, poor {poor:?}, {took:?}"),
    )
}

fn tiny_instances() -> Vec<carp_core::Instance> {
    (0..20u64)
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let tasks = rng.random_range(3..=6);
            let vertices = rng.random_range(4..=7);
            let capacity = rng.random_range(5..=12);
            generate_instance(vertices, tasks, capacity, seed).expect("small instance")
        })
        .collect()
}

fn criterion_3_and_7() -> (Verdict, Vec<SearchTrace>) {
    let start = Instant::now();
    let mut traces = Vec::new();
    let mut hits: BTreeMap<&str, usize> = BTreeMap::new();
    let mut misses = Vec::new();
    for (i, inst) in tiny_instances().into_iter().enumerate() {
        let problem = Problem::new(inst);
        let optimum = brute_force_optimum(&problem.instance, &problem.dist);
        for algorithm in [Algorithm::SahidRco, Algorithm::ClusterRco] {
            let config = SearchConfig {
                algorithm,
                time_limit: 5.0,
                seed: i as u64,
                stall_limit: Some(300),
                ..SearchConfig::default()
            };
            let out = solve(&problem, &config, SearchTrace::new()).expect("valid config");
            assert!(validate(&out.solution, &problem.instance).is_feasible());
            if out.solution.total_cost() == optimum {
                *hits.entry(algorithm.name()).or_default() += 1;
            } else {
                misses.push((i, algorithm.name(), out.solution.total_cost(), optimum));
            }
            traces.push(out.trace);
        }
    }
    let took = start.elapsed();
    let ok = hits.values().all(|&h| h >= 19) && hits.len() == 2 && took < Duration::from_secs(180);
    (pass_if(ok, format!("optimal runs {hits:?}, misses {misses:?}, {took:.1?}")), traces)
}

fn criterion_4() -> Verdict {
    let start = Instant::now();
    let mut invocations = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for inst_seed in 0..10 {
        let tasks = 10 + 5 * inst_seed as usize;
        let problem = Problem::new(generate_instance(tasks, tasks, 20, inst_seed).unwrap());
        for _ in 0..1000 {
            let s = path_scanning(&problem.instance, &problem.dist, &mut rng);
            let params = RcoParams::new(rng.random(), rng.random()).unwrap();
            let avg = average_task_rank(&s, &problem.ranks);
            let pool = rco_split(&s, &problem.ranks, params, &mut rng);
            invocations += 1;

            let mut before: Vec<TaskId> = s.routes().iter().flat_map(|r| r.interior().to_vec()).collect();
            let mut after: Vec<TaskId> = pool.subroutes.iter().flat_map(|p| p.tasks.clone()).collect();
            before.sort();
            after.sort();
            if before != after {
                return Verdict::Fail(format!("task multiset changed (instance {inst_seed})"));
            }
            for (k, route) in s.routes().iter().enumerate() {
                let pieces: Vec<_> = pool.subroutes.iter().filter(|p| p.origin == k).collect();
                let joined: Vec<TaskId> = pieces.iter().flat_map(|p| p.tasks.clone()).collect();
                let cuts = &pool.cuts[k];
                let classes = classify_links(route, &problem.ranks, avg);
                let good = cuts.iter().filter(|c| classes.good.contains(c)).count();
                let poor = cuts.iter().filter(|c| classes.poor.contains(c)).count();
                let ok = joined == route.interior()
                    && pieces.iter().all(|p| !p.tasks.is_empty() && route.interior()[p.offset..].starts_with(&p.tasks))
                    && pieces.len() == cuts.len() + 1
                    && good <= 1
                    && poor <= 1
                    && good + poor == cuts.len();
                if !ok {
                    return Verdict::Fail(format!("slice/cut budget broken on route {k} (instance {inst_seed})"));
                }
            }
        }
    }

    let mut checked = 0;
    for seed in 0..3 {
        let problem = Problem::new(generate_instance(40, 60, 30, 100 + seed).unwrap());
        for algorithm in Algorithm::ALL {
            let config = SearchConfig {
                algorithm,
                seed,
                time_limit: 0.5,
                clock: ClockMode::Virtual,
                max_cycles: 5,
                ..SearchConfig::default()
            };
            let out = solve(&problem, &config, SearchTrace::new()).unwrap();
            let report = validate(&out.solution, &problem.instance);
            if !report.is_feasible() {
                return Verdict::Fail(format!("{algorithm} produced an infeasible solution: {:?}", report.violations));
            }
            checked += 1;
        }
    }
    let took = start.elapsed();
    pass_if(
        took < Duration::from_secs(60),
        format!("{invocations} splits conserved, {checked} search outputs feasible, {took:.1?}"),
    )
}

fn criterion_5() -> Verdict {
    let start = Instant::now();
    // Eleven tasks in a row; links 0..5 rank 1 (good), links 5..10 rank 5 (poor).
    let n = 11;
    let mut nums = vec![100; n * n];
    for a in 0..n - 1 {
        if a < 5 {
            nums[a * n + a + 1] = 0;
        } else {
            nums[a * n + a + 1] = 50;
            for b in (0..n).filter(|&b| b != a && b != a + 1).take(4) {
                nums[a * n + b] = 10;
            }
        }
    }
    let ranks = RankMatrix::from_link_numerators(n, nums);
    let mut ids = vec![TaskId::DEPOT];
    ids.extend((0..n).map(TaskId::forward));
    ids.push(TaskId::DEPOT);
    let s = Solution::new(vec![Route::raw(ids)]);
    let avg = average_task_rank(&s, &ranks);
    let classes = classify_links(&s.routes()[0], &ranks, avg);
    if classes.good.len() != 5 || classes.poor.len() != 5 {
        return Verdict::Fail(format!("setup: {classes:?}"));
    }
    let params = RcoParams::new(0.3, 0.7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let trials = 100_000;
    let (mut good, mut poor) = (0u32, 0u32);
    for _ in 0..trials {
        let pool = rco_split(&s, &ranks, params, &mut rng);
        good += pool.cuts[0].iter().any(|c| classes.good.contains(c)) as u32;
        poor += pool.cuts[0].iter().any(|c| classes.poor.contains(c)) as u32;
    }
    let (fg, fp) = (good as f64 / trials as f64, poor as f64 / trials as f64);
    let took = start.elapsed();
    pass_if(
        (fg - 0.3).abs() <= 0.01 && (fp - 0.7).abs() <= 0.01 && took < Duration::from_secs(10),
        format!("good {fg:.4} (0.3), poor {fp:.4} (0.7), {took:.1?}"),
    )
}

fn slow_instances() -> Vec<carp_core::Instance> {
    [300, 350, 400, 450, 500]
        .into_iter()
        .enumerate()
        .map(|(i, tasks)| generate_instance(tasks * 3 / 4, tasks, 60, 600 + i as u64).unwrap())
        .collect()
}

fn criterion_6() -> (Verdict, Vec<SearchTrace>) {
    if std::env::var("CARP_SLOW").as_deref() != Ok("1") {
        return (Verdict::Skip("slow suite (about 2 h); set CARP_SLOW=1".into()), Vec::new());
    }
    let start = Instant::now();
    let mut traces = Vec::new();
    let mut wins = 0;
    let mut rows = Vec::new();
    for inst in slow_instances() {
        let problem = Problem::new(inst);
        let mut means = Vec::new();
        for algorithm in [Algorithm::SahidRco, Algorithm::SahidRandom] {
            let mut costs = Vec::new();
            for seed in 0..11 {
                let config = SearchConfig {
                    algorithm,
                    seed,
                    time_limit: 60.0,
                    ..SearchConfig::default()
                };
                let out = solve(&problem, &config, SearchTrace::new()).unwrap();
                assert!(validate(&out.solution, &problem.instance).is_feasible());
                costs.push(out.solution.total_cost() as f64);
                traces.push(out.trace);
            }
            means.push(costs.iter().sum::<f64>() / costs.len() as f64);
        }
        wins += (means[0] <= means[1]) as usize;
        rows.push(format!("{}: {:.1} vs {:.1}", problem.instance.name, means[0], means[1]));
    }
    let took = start.elapsed();
    (
        pass_if(wins >= 4, format!("rco <= random on {wins}/5 [{}], {took:.0?}", rows.join("; "))),
        traces,
    )
}

fn criterion_8() -> Verdict {
    let start = Instant::now();
    let t = wilcoxon_rank_sum(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
    let exact_ok = t.exact && (t.p_value - 0.1).abs() < 1e-12;

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    let mut symmetric = true;
    for _ in 0..2000 {
        let total = rng.random_range(8..=12);
        let na = rng.random_range(3..=total - 3);
        // Distinct values, no ties.
        let mut values: Vec<f64> = (0..total).map(|i| i as f64 + rng.random::<f64>() * 0.5).collect();
        for i in (1..values.len()).rev() {
            values.swap(i, rng.random_range(0..=i));
        }
        let (a, b) = values.split_at(na);
        let exact = wilcoxon_rank_sum(a, b).unwrap();
        let approx = wilcoxon_rank_sum_normal(a, b).unwrap();
        worst = worst.max((exact.p_value - approx.p_value).abs());
        symmetric &= exact.p_value == wilcoxon_rank_sum(b, a).unwrap().p_value;
        symmetric &= approx.p_value == wilcoxon_rank_sum_normal(b, a).unwrap().p_value;
    }
    let took = start.elapsed();
    pass_if(
        exact_ok && worst <= 0.05 && symmetric && took < Duration::from_secs(10),
        format!("p(1,2,3 | 4,5,6) = {}, max |exact - normal| = {worst:.4}, symmetric {symmetric}, {took:.1?}", t.p_value),
    )
}

fn run_text(problem: &Problem, config: &SearchConfig) -> (String, String) {
    let out = solve(problem, config, SearchTrace::new()).unwrap();
    (write_solution(&out.solution, &problem.instance), out.trace.to_csv())
}

fn dir_contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    for sub in ["solutions", "traces"] {
        for entry in fs::read_dir(dir.join(sub)).unwrap() {
            let entry = entry.unwrap();
            files.insert(format!("{sub}/{}", entry.file_name().to_string_lossy()), fs::read(entry.path()).unwrap());
        }
    }
    files
}

fn criterion_9() -> Verdict {
    let start = Instant::now();
    let problem = Problem::new(generate_instance(60, 80, 40, 9).unwrap());
    let many = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let mut differing = Vec::new();
    for algorithm in Algorithm::ALL {
        let config = SearchConfig {
            algorithm,
            seed: 42,
            time_limit: 0.3,
            clock: ClockMode::Virtual,
            max_cycles: 6,
            ..SearchConfig::default()
        };
        let a = many.install(|| run_text(&problem, &config));
        let b = many.install(|| run_text(&problem, &config));
        let c = one.install(|| run_text(&problem, &config));
        if a != b || a != c {
            differing.push(algorithm.name());
        }
    }

    // Whole experiments, through files.
    let tmp = tempfile::tempdir().unwrap();
    let inst_path = tmp.path().join("det.dat");
    fs::write(&inst_path, write_instance(&problem.instance)).unwrap();
    let spec = |out: &str, workers| {
        let mut variants = Vec::new();
        for (label, algorithm) in [("rco", Algorithm::SahidRco), ("clu", Algorithm::ClusterRco)] {
            let mut config = SearchConfig::with_algorithm(algorithm);
            config.clock = ClockMode::Virtual;
            config.max_cycles = 4;
            variants.push(Variant {
                label: label.into(),
                config,
            });
        }
        ExperimentSpec {
            instances: vec![inst_path.clone()],
            variants,
            runs: 2,
            base_seed: 7,
            budget: Budget::Seconds(0.2),
            time_scale: 1.0,
            out_dir: tmp.path().join(out),
            workers,
        }
    };
    run_experiment(&spec("x", 1)).unwrap();
    run_experiment(&spec("y", 3)).unwrap();
    let same_files = dir_contents(&tmp.path().join("x")) == dir_contents(&tmp.path().join("y"));
    let took = start.elapsed();
    pass_if(
        differing.is_empty() && same_files && took < Duration::from_secs(60),
        format!("differing algorithms {differing:?}, experiment files identical {same_files}, {took:.1?}"),
    )
}

fn criterion_10() -> Verdict {
    let Ok(dir) = std::env::var("CARP_EGL_G_DIR") else {
        return Verdict::Skip("EGL-G files not supplied (set CARP_EGL_G_DIR)".into());
    };
    let expected = [("g1-a", 20usize), ("g2-e", 42)];
    let mut found = Vec::new();
    for entry in fs::read_dir(&dir).into_iter().flatten().flatten() {
        let name = entry.file_name().to_string_lossy().to_lowercase();
        for (key, zeta) in expected {
            if name.contains(key) {
                match load_instance_file(entry.path()) {
                    Ok(inst) => found.push((key, min_vehicles(&inst), zeta)),
                    Err(e) => return Verdict::Fail(format!("{name}: {e}")),
                }
            }
        }
    }
    if found.is_empty() {
        return Verdict::Skip(format!("no G1-A / G2-E files in {dir}"));
    }
    pass_if(found.iter().all(|(_, got, want)| got == want), format!("{found:?}"))
}

fn monotone(traces: &[SearchTrace]) -> bool {
    traces.iter().all(|t| t.is_monotone())
}

fn main() -> ExitCode {
    // Respect `cargo test -- --list` and friends without running anything.
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let mut results: Vec<(u32, &str, Verdict)> = Vec::new();
    let simple: [(u32, &str, Check); 3] = [
        (1, "rank matrix golden test", criterion_1),
        (2, "worked RCO example", criterion_2),
        (4, "split conservation and feasibility", criterion_4),
    ];
    for (n, name, f) in simple {
        results.push((n, name, f()));
    }
    let (v3, mut traces) = criterion_3_and_7();
    results.push((3, "oracle optimality on tiny instances", v3));
    results.push((5, "cut probability calibration", criterion_5()));
    let (v6, slow_traces) = criterion_6();
    let slow_ran = !slow_traces.is_empty();
    results.push((6, "ablation direction at scale", v6));
    traces.extend(slow_traces);
    let scope = if slow_ran { "criteria 3 and 6" } else { "criterion 3" };
    results.push((
        7,
        "monotone traces",
        pass_if(monotone(&traces), format!("{} traces from {scope}", traces.len())),
    ));
    results.push((8, "rank-sum test", criterion_8()));
    results.push((9, "determinism", criterion_9()));
    results.push((10, "EGL-G fleet bounds", criterion_10()));
    results.sort_by_key(|r| r.0);

    let mut failed = 0;
    for (n, name, verdict) in &results {
        let (tag, detail) = match verdict {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Verdict::Skip(d) => ("SKIP", d),
        };
        println!("criterion {n:>2} {tag} {name}: {detail}");
    }
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
