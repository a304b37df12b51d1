//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use qsnn::evolve::{rank_probabilities, run_ga, sus_select, GaConfig, GenerationStats, Target};
use qsnn::genome::{decode_chromosome, decode_delay, decode_weight, encode_network, Chromosome};
use qsnn::srm::{simulate_network, Synapse};
use qsnn::tasks::{
    classify_outputs, iris_encode, kfold_split, parse_iris, xor_patterns, CvSummary, GrfConfig,
    IrisClass, LabeledSample, XorVariant, IRIS_DATA,
};
use qsnn::{KernelMode, QuantScheme, QuantizedNetwork, SimParams, SpikeTask, SpikeTrain, Topology};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

// ---------------------------------------------------------------------------
// 1. Quantization tables

fn quantization_tables() -> Outcome {
    let start = Instant::now();
    let delays = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
    let decimal = [2.0, 1.5, 1.0, 0.5, 0.0, -0.5, -1.0, -1.5];
    let integer = [4.0, 3.0, 2.0, 1.0, 0.0, -1.0, -2.0, -3.0];
    let mut rows_ok = 0;
    for g in 0..8u8 {
        rows_ok += usize::from(decode_delay(g).unwrap() == delays[g as usize]);
        rows_ok +=
            usize::from(decode_weight(g, QuantScheme::Decimal).unwrap() == decimal[g as usize]);
        rows_ok +=
            usize::from(decode_weight(g, QuantScheme::Integer).unwrap() == integer[g as usize]);
    }

    // Every 6-bit synapse code survives decode then encode, in both schemes.
    let topo = Topology::new(vec![1, 1]).unwrap();
    let mut round_trips = 0;
    for scheme in QuantScheme::ALL {
        for code in 0..64u8 {
            let bits: Vec<bool> = (0..6).rev().map(|b| code >> b & 1 == 1).collect();
            let c = Chromosome::from_bits(bits);
            let net = decode_chromosome(&c, &topo, scheme).unwrap();
            round_trips += usize::from(encode_network(&net, scheme).unwrap() == c);
        }
    }
    let elapsed = start.elapsed();
    outcome(
        rows_ok == 24 && round_trips == 128 && elapsed < Duration::from_secs(1),
        format!(
            "{rows_ok}/24 table rows, {round_trips}/128 code round trips, {:.3} s (limit 1 s)",
            secs(elapsed)
        ),
    )
}

// ---------------------------------------------------------------------------
// 2. Simulator against a direct evaluation of the membrane equation

/// Spike times as integer grid steps.
type Steps = Vec<i64>;

struct Reference {
    /// Potential of every computing neuron at every grid sample.
    u: Vec<Vec<f64>>,
    spikes: Vec<Steps>,
}

fn eps_direct(t: f64, tau: f64, mode: KernelMode) -> f64 {
    if t <= 0.0 {
        0.0
    } else if mode == KernelMode::Normalized {
        t / tau * (1.0 - t / tau).exp()
    } else {
        t / tau * (-t / tau).exp()
    }
}

fn rho_direct(t: f64, theta: f64, tau_r: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        -4.0 * theta * (-t / tau_r).exp()
    }
}

/// Recomputes every neuron from scratch at every grid sample:
/// `u(t) = sum_i sum_s w_i eps(t - t_s - d_i) + rho(t - t_last)`.
fn reference_network(net: &QuantizedNetwork, inputs: &[Steps], p: &SimParams) -> Reference {
    let n = (p.sim_time_ms / p.dt_ms).round() as i64;
    let mut prev_layer: Vec<Steps> = inputs.to_vec();
    let mut u_all = Vec::new();
    let mut spikes_all = Vec::new();
    for m in net.layers() {
        let mut this_layer = Vec::new();
        for j in 0..m.post() {
            let row: Vec<Synapse> = (0..m.pre()).map(|i| m.get(j, i)).collect();
            let mut u = Vec::with_capacity(n as usize + 1);
            let mut spikes: Steps = Vec::new();
            let mut prev = 0.0;
            for k in 0..=n {
                let mut v = 0.0;
                for (i, syn) in row.iter().enumerate() {
                    if syn.weight == 0.0 {
                        continue;
                    }
                    let d = (syn.delay_ms / p.dt_ms).round() as i64;
                    for &s in &prev_layer[i] {
                        v += syn.weight
                            * eps_direct((k - s - d) as f64 * p.dt_ms, p.tau_ms, p.kernel_mode);
                    }
                }
                if let Some(&f) = spikes.last() {
                    v += rho_direct((k - f) as f64 * p.dt_ms, p.theta, p.tau_r_ms);
                }
                if spikes.len() < p.max_spikes && v >= p.theta && v > prev {
                    spikes.push(k);
                }
                u.push(v);
                prev = v;
            }
            u_all.push(u);
            this_layer.push(spikes);
        }
        spikes_all.extend(this_layer.iter().cloned());
        prev_layer = this_layer;
    }
    Reference {
        u: u_all,
        spikes: spikes_all,
    }
}

fn random_chromosome(rng: &mut ChaCha8Rng, len: usize) -> Chromosome {
    Chromosome::from_bits((0..len).map(|_| rng.random::<bool>()).collect())
}

fn random_network(rng: &mut ChaCha8Rng, topo: &Topology, scheme: QuantScheme) -> QuantizedNetwork {
    let len = qsnn::genome::chromosome_length(topo);
    decode_chromosome(&random_chromosome(rng, len), topo, scheme).unwrap()
}

fn random_small_topology(rng: &mut ChaCha8Rng) -> Topology {
    loop {
        let layers = rng.random_range(2..=4);
        let sizes: Vec<usize> = (0..layers).map(|_| rng.random_range(1..=4)).collect();
        if sizes.iter().sum::<usize>() <= 10 {
            return Topology::new(sizes).unwrap();
        }
    }
}

fn kernel_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let mut cases = 0;
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for case in 0..1000 {
        let dt = if case % 2 == 0 { 1.0 } else { 0.01 };
        let topo = random_small_topology(&mut rng);
        let scheme = QuantScheme::ALL[rng.random_range(0..2)];
        let params = SimParams {
            dt_ms: dt,
            theta: [1.0, 1.5, 3.0][rng.random_range(0..3)],
            kernel_mode: [KernelMode::Normalized, KernelMode::Unscaled][rng.random_range(0..2)],
            ..SimParams::default()
        };
        let net = random_network(&mut rng, &topo, scheme);
        let last = (30.0 / dt) as i64;
        let inputs: Vec<Steps> = (0..topo.inputs())
            .map(|_| {
                let count = rng.random_range(0..=5);
                let mut s: Steps = (0..count).map(|_| rng.random_range(1..=last)).collect();
                s.sort_unstable();
                s.dedup();
                s
            })
            .collect();
        let trains: Vec<SpikeTrain> = inputs
            .iter()
            .map(|s| SpikeTrain::new(s.iter().map(|&k| k as f64 * dt).collect()).unwrap())
            .collect();
        let run = simulate_network(&net, &trains, &params, true).unwrap();
        let reference = reference_network(&net, &inputs, &params);
        let traces: Vec<_> = run.traces.unwrap().into_iter().flatten().collect();
        let mut ok = traces.len() == reference.u.len();
        for (idx, tr) in traces.iter().enumerate() {
            let diff =
                tr.u.iter()
                    .zip(&reference.u[idx])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
            worst = worst.max(diff);
            let steps: Steps = tr
                .spikes
                .times()
                .iter()
                .map(|t| (t / dt).round() as i64)
                .collect();
            ok &= tr.u.len() == reference.u[idx].len()
                && diff <= 1e-9
                && steps == reference.spikes[idx];
        }
        cases += 1;
        if !ok {
            failures.push(case);
        }
    }
    let elapsed = start.elapsed();
    outcome(
        failures.is_empty() && elapsed < Duration::from_secs(30),
        format!(
            "{}/{cases} random networks agree (max |du| = {worst:.1e}, tolerance 1e-9), {:.1} s (limit 30 s){}",
            cases - failures.len(),
            secs(elapsed),
            if failures.is_empty() { String::new() } else { format!(", failing cases {failures:?}") }
        ),
    )
}

// ---------------------------------------------------------------------------
// 3. GA operator laws

fn ga_operator_laws(logged: &[(String, Vec<GenerationStats>)]) -> Outcome {
    let p = rank_probabilities(200, 1.5).unwrap();
    let sum: f64 = p.iter().sum();
    let hand = (p[0] - 0.0075).abs() < 1e-12 && (p[199] - 0.0025).abs() < 1e-12;

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    let mut sus_ok = 0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=60);
        let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
        let total: f64 = raw.iter().sum();
        let probs: Vec<f64> = raw.iter().map(|r| r / total).collect();
        let k = rng.random_range(1..=120);
        let picks = sus_select(&probs, k, &mut rng).unwrap();
        let mut counts = vec![0usize; n];
        for i in picks {
            counts[i] += 1;
        }
        let within = probs.iter().zip(&counts).all(|(p, &c)| {
            let e = p * k as f64;
            (c as f64) >= (e - 1e-9).floor() && (c as f64) <= (e + 1e-9).ceil()
        });
        sus_ok += usize::from(within && counts.iter().sum::<usize>() == k);
    }

    let broken: Vec<_> = logged
        .iter()
        .filter(|(_, h)| h.windows(2).any(|w| w[1].best > w[0].best))
        .map(|(name, _)| name.clone())
        .collect();
    outcome(
        (sum - 1.0).abs() < 1e-12 && hand && sus_ok == 1000 && broken.is_empty(),
        format!(
            "sum p = {sum:.15}, p1 = {:.6}, p200 = {:.6}; SUS bounds {sus_ok}/1000; best MSE non-increasing on {}/{} logged runs",
            p[0],
            p[199],
            logged.len() - broken.len(),
            logged.len()
        ),
    )
}

// ---------------------------------------------------------------------------
// 4-6. XOR

struct SeedRun {
    best: f64,
    generations: usize,
    elapsed: Duration,
    history: Vec<GenerationStats>,
    task: SpikeTask,
    best_net: QuantizedNetwork,
}

fn xor_seeds(
    topology: &[usize],
    scheme: QuantScheme,
    variant: XorVariant,
    params: SimParams,
    ga: GaConfig,
) -> Vec<SeedRun> {
    let task = SpikeTask::new(
        Topology::new(topology.to_vec()).unwrap(),
        scheme,
        params,
        xor_patterns(variant),
        ga.miss_penalty,
    )
    .unwrap();
    (0..10)
        .map(|seed| {
            let start = Instant::now();
            let cfg = GaConfig { seed, ..ga.clone() };
            let out = run_ga(&cfg, task.chromosome_len(), &task).unwrap();
            SeedRun {
                best: out.best().objective,
                generations: out.state.generation,
                elapsed: start.elapsed(),
                history: out.state.history.clone(),
                best_net: task.decode(&out.best().chromosome).unwrap(),
                task: task.clone(),
            }
        })
        .collect()
}

fn summarize(runs: &[SeedRun], hit: impl Fn(&SeedRun) -> bool) -> (usize, String) {
    let n = runs.iter().filter(|r| hit(r)).count();
    let gens: Vec<String> = runs
        .iter()
        .map(|r| {
            if hit(r) {
                r.generations.to_string()
            } else {
                "-".into()
            }
        })
        .collect();
    let slowest = runs.iter().map(|r| r.elapsed).max().unwrap_or_default();
    (
        n,
        format!(
            "{n}/10 seeds (generations: {}), slowest seed {:.1} s",
            gens.join(" "),
            secs(slowest)
        ),
    )
}

fn log_runs(logged: &mut Vec<(String, Vec<GenerationStats>)>, label: &str, runs: &[SeedRun]) {
    for (seed, r) in runs.iter().enumerate() {
        logged.push((format!("{label} seed {seed}"), r.history.clone()));
    }
}

fn xor_standard(logged: &mut Vec<(String, Vec<GenerationStats>)>) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for scheme in QuantScheme::ALL {
        let runs = xor_seeds(
            &[3, 5, 1],
            scheme,
            XorVariant::Standard,
            SimParams::default(),
            GaConfig::default(),
        );
        let (n, text) = summarize(&runs, |r| r.best <= 0.25);
        let slow = runs.iter().any(|r| r.elapsed > Duration::from_secs(300));
        pass &= n >= 6 && !slow;
        parts.push(format!("{scheme}: {text}"));
        log_runs(logged, &format!("xor [3 5 1] {scheme}"), &runs);
    }
    outcome(
        pass,
        format!(
            "need >= 6/10 at MSE <= 0.25 within 500 generations; {}",
            parts.join("; ")
        ),
    )
}

fn xor_reduced(logged: &mut Vec<(String, Vec<GenerationStats>)>) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for scheme in QuantScheme::ALL {
        let ga = GaConfig {
            max_generations: 1000,
            ..GaConfig::default()
        };
        let runs = xor_seeds(
            &[3, 2, 1],
            scheme,
            XorVariant::Standard,
            SimParams::default(),
            ga,
        );
        let (n, text) = summarize(&runs, |r| r.best <= 0.25);
        pass &= n >= 3;
        parts.push(format!("{scheme}: {text}"));
        log_runs(logged, &format!("xor [3 2 1] {scheme}"), &runs);
    }
    outcome(
        pass,
        format!(
            "need >= 3/10 at MSE <= 0.25 within 1000 generations; {}",
            parts.join("; ")
        ),
    )
}

fn xor_one_neuron(logged: &mut Vec<(String, Vec<GenerationStats>)>) -> Outcome {
    let params = SimParams {
        theta: 3.0,
        ..SimParams::default()
    };
    let ga = GaConfig {
        max_generations: 200,
        mse_target: 0.0,
        ..GaConfig::default()
    };
    let runs = xor_seeds(
        &[3, 1],
        QuantScheme::Integer,
        XorVariant::OneNeuron,
        params,
        ga,
    );
    let correct_presence = |r: &SeedRun| {
        let outs = r.task.outputs(&r.best_net).unwrap();
        outs.iter()
            .zip(r.task.targets())
            .all(|(o, t)| o.first().is_some() == matches!(t, Target::Spike(_)))
    };
    let n = runs.iter().filter(|r| correct_presence(r)).count();
    let slowest = runs.iter().map(|r| r.elapsed).max().unwrap_or_default();
    log_runs(logged, "xor [3 1] integer", &runs);
    outcome(
        n >= 7 && slowest < Duration::from_secs(60),
        format!(
            "need >= 7/10 with spikes for {{1,1,7}}, {{1,7,1}} and silence for {{1,1,1}}, {{1,7,7}} within 200 generations; {n}/10 seeds, slowest seed {:.1} s (limit 60 s)",
            secs(slowest)
        ),
    )
}

// ---------------------------------------------------------------------------
// 7. Iris substitutes

fn iris_checks(logged: &mut Vec<(String, Vec<GenerationStats>)>) -> Outcome {
    let samples: Vec<LabeledSample> = parse_iris(IRIS_DATA).unwrap();
    let grf = GrfConfig::default();

    // (a) encoding width and time window
    let mut a = true;
    for dt in [1.0, 0.01] {
        for p in iris_encode(&samples, &grf, dt).unwrap() {
            a &= p.inputs.len() == 33;
            a &= p
                .inputs
                .iter()
                .flatten()
                .all(|&t| t >= dt - 1e-12 && t <= 10.0);
        }
    }

    // (b) the five fold schemes: 30/5, 60/3, 60/2, 75/2, 90/2
    let mut b = true;
    for (total, k) in [(30, 5), (60, 3), (60, 2), (75, 2), (90, 2)] {
        let tpc = total / 3;
        let folds = kfold_split(&samples, tpc, k, None).unwrap();
        b &= folds.len() == k;
        let mut trained = vec![false; samples.len()];
        for f in &folds {
            b &= f.train.len() == total && f.validation.len() == samples.len() - total;
            b &= f.train.iter().all(|i| !f.validation.contains(i));
            let mut all: Vec<_> = f.train.iter().chain(&f.validation).copied().collect();
            all.sort_unstable();
            b &= all == (0..samples.len()).collect::<Vec<_>>();
            for c in IrisClass::ALL {
                b &= f.train.iter().filter(|&&i| samples[i].class == c).count() == tpc;
            }
            for &i in &f.train {
                trained[i] = true;
            }
        }
        if k * tpc >= 50 {
            b &= trained.iter().all(|&t| t);
        }
    }

    // (c) accuracy arithmetic of the printed fold counts
    let s = CvSummary::new(vec![16, 12, 19, 12, 5], 150).unwrap();
    let t = CvSummary::new(vec![3, 5, 6], 150).unwrap();
    let c = (s.mean_errors - 12.8).abs() < 1e-12
        && (s.accuracy_pct - 91.47).abs() <= 0.02
        && (t.accuracy_pct - 96.89).abs() <= 0.02;
    let desired = vec![
        Target::Spike(15.0),
        Target::Spike(20.0),
        Target::Spike(25.0),
    ];
    let brute =
        classify_outputs(&[(vec![Some(17.0), Some(22.5), None], desired)], 2.0, 150).unwrap();
    let c = c && brute.fold_errors == vec![2];

    // (d) reduced training run
    let folds = kfold_split(&samples, 10, 5, None).unwrap();
    let patterns = iris_encode(&samples, &grf, 1.0).unwrap();
    let train: Vec<_> = folds[0]
        .train
        .iter()
        .map(|&i| patterns[i].clone())
        .collect();
    let params = SimParams {
        theta: 3.0,
        ..SimParams::default()
    };
    let task = SpikeTask::new(
        Topology::new(vec![33, 8, 1]).unwrap(),
        QuantScheme::Decimal,
        params,
        train,
        100.0,
    )
    .unwrap();
    let mut improved = 0;
    let mut deltas = Vec::new();
    let start = Instant::now();
    for seed in 0..10 {
        let cfg = GaConfig {
            population_size: 100,
            max_generations: 60,
            seed,
            ..GaConfig::default()
        };
        let out = run_ga(&cfg, task.chromosome_len(), &task).unwrap();
        let h = out.history();
        let (first, last) = (h[0].best, h[h.len() - 1].best);
        improved += usize::from(last < first);
        deltas.push(format!("{first:.1}->{last:.1}"));
        logged.push((format!("iris reduced seed {seed}"), h.to_vec()));
    }
    let d = improved >= 8;
    outcome(
        a && b && c && d,
        format!(
            "(a) 33 inputs, times in [dt, 10]: {}; (b) folds disjoint/stratified/exhaustive: {}; (c) 91.47%/96.89% arithmetic: {}; (d) best MSE improved on {improved}/10 seeds (need 8) [{}] in {:.1} s",
            yes(a),
            yes(b),
            yes(c),
            deltas.join(" "),
            secs(start.elapsed())
        ),
    )
}

fn yes(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAILED"
    }
}

// ---------------------------------------------------------------------------
// 8. Determinism and checkpoint replay through the command-line tool

fn qsnn(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_qsnn"))
        .args(args)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn single_run_dir(parent: &Path) -> PathBuf {
    fs::read_dir(parent)
        .unwrap()
        .next()
        .unwrap()
        .unwrap()
        .path()
}

fn determinism(logged: &mut Vec<(String, Vec<GenerationStats>)>) -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("xor.toml");
    fs::write(
        &cfg,
        "[task]\nkind = \"xor-standard\"\nscheme = \"integer\"\n\n[ga]\nmax_generations = 50\nmse_target_ms2 = 0.0\nseed = 9\n",
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();
    let mut dirs = Vec::new();
    let mut launched = true;
    for (name, extra) in [
        ("a", vec![]),
        ("b", vec![]),
        ("paused", vec!["--stop-after", "10"]),
    ] {
        let out = tmp.path().join(name);
        let mut args = vec!["train", "--config", cfg, "--out", out.to_str().unwrap()];
        args.extend(extra);
        launched &= qsnn(&args);
        dirs.push(if launched { single_run_dir(&out) } else { out });
    }
    if !launched {
        return outcome(false, "qsnn train failed");
    }
    let ckpt = dirs[2].join("checkpoint.txt");
    if !qsnn(&["resume", "--checkpoint", ckpt.to_str().unwrap()]) {
        return outcome(false, "qsnn resume failed");
    }
    let read = |d: &Path, f: &str| fs::read(d.join(f)).unwrap_or_default();
    let same_history = read(&dirs[0], "history.tsv") == read(&dirs[1], "history.tsv");
    let files = [
        "history.tsv",
        "network.txt",
        "manifest.txt",
        "checkpoint.txt",
    ];
    let replay: Vec<_> = files
        .iter()
        .filter(|f| read(&dirs[0], f) != read(&dirs[2], f))
        .collect();
    let history = String::from_utf8(read(&dirs[0], "history.tsv")).unwrap();
    let parsed: Vec<GenerationStats> = history
        .lines()
        .skip(1)
        .map(|l| {
            let v: Vec<&str> = l.split('\t').collect();
            GenerationStats {
                generation: v[0].parse().unwrap(),
                best: v[1].parse().unwrap(),
                mean: v[2].parse().unwrap(),
            }
        })
        .collect();
    let gens = parsed.len();
    logged.push(("cli xor seed 9".into(), parsed));
    outcome(
        same_history && replay.is_empty() && gens > 11,
        format!(
            "two runs byte-identical history: {}; pause at 10 + resume vs straight {} generations: {}",
            yes(same_history),
            gens - 1,
            if replay.is_empty() { "all artifacts identical".to_string() } else { format!("differ in {replay:?}") }
        ),
    )
}

// ---------------------------------------------------------------------------
// 9. Fine grid against the continuous-time crossing rule

/// Continuous potential at `t` from `arrivals` (time, weight), with the
/// refractory term keyed to `last`.
fn potential(arrivals: &[(f64, f64)], last: Option<f64>, t: f64, p: &SimParams) -> f64 {
    let mut v: f64 = arrivals
        .iter()
        .map(|&(a, w)| w * eps_direct(t - a, p.tau_ms, p.kernel_mode))
        .sum();
    if let Some(f) = last {
        v += rho_direct(t - f, p.theta, p.tau_r_ms);
    }
    v
}

/// Upward threshold crossings of the continuous potential driven by
/// `arrivals` (time, weight), located by a fine scan and bisection.
///
/// The refractory term follows the spikes the simulator recorded
/// (`recorded`), so the potential is the one the simulator sampled and each
/// reference crossing is searched for after the previous recorded spike.
fn continuous_spikes(arrivals: &[(f64, f64)], recorded: &[f64], p: &SimParams) -> Vec<f64> {
    let u = |t: f64, last: Option<f64>| potential(arrivals, last, t, p);
    let h = p.dt_ms / 4.0;
    let mut spikes: Vec<f64> = Vec::new();
    let mut last: Option<f64> = None;
    let mut t0 = 0.0;
    while spikes.len() < p.max_spikes {
        let mut u0 = u(t0, last);
        let mut found = None;
        let mut t = t0;
        while t < p.sim_time_ms {
            let t1 = (t + h).min(p.sim_time_ms);
            let u1 = u(t1, last);
            if u0 < p.theta && u1 >= p.theta {
                let (mut lo, mut hi) = (t, t1);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if u(mid, last) >= p.theta {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                found = Some(hi);
                break;
            }
            t = t1;
            u0 = u1;
        }
        let Some(c) = found else { break };
        spikes.push(c);
        // Continue from the simulator's spike when it recorded one here.
        let anchor = recorded.get(spikes.len() - 1).copied().unwrap_or(c);
        last = Some(anchor);
        // Just after the spike, so the refractory term is in effect.
        t0 = anchor + 1e-9;
    }
    spikes
}

fn dt_sensitivity() -> Outcome {
    let params = SimParams {
        dt_ms: 0.01,
        ..SimParams::default()
    };
    let topo = Topology::new(vec![3, 5, 1]).unwrap();
    let patterns = xor_patterns(XorVariant::Standard);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0009);
    let mut agree = 0;
    let mut spikes_checked = 0;
    let mut worst: f64 = 0.0;
    let mut mismatches = Vec::new();
    let mut n_saturated = 0;
    let mut n_tangent = 0;
    for case in 0..100 {
        let scheme = QuantScheme::ALL[case % 2];
        let net = random_network(&mut rng, &topo, scheme);
        let mut ok = true;
        let mut saturated = false;
        let mut tangent = false;
        let mut case_worst: f64 = 0.0;
        for p in &patterns {
            let run = simulate_network(&net, &p.input_trains().unwrap(), &params, false).unwrap();
            for (l, m) in net.layers().iter().enumerate() {
                for j in 0..m.post() {
                    let mut arrivals = Vec::new();
                    for i in 0..m.pre() {
                        let syn = m.get(j, i);
                        for &t in run.trains[l][i].times() {
                            arrivals.push((t + syn.delay_ms, syn.weight));
                        }
                    }
                    let disc = run.trains[l + 1][j].times();
                    let cont = continuous_spikes(&arrivals, disc, &params);
                    spikes_checked += disc.len();
                    if cont.len() != disc.len() {
                        ok = false;
                        // Firing on consecutive samples while u stays above threshold.
                        saturated |= disc.windows(2).any(|w| w[1] - w[0] < 1.5 * params.dt_ms);
                        // u reaching exactly theta at a peak that falls on a grid point.
                        tangent |= disc.iter().enumerate().any(|(n, &t)| {
                            let last = n.checked_sub(1).map(|k| disc[k]);
                            (potential(&arrivals, last, t, &params) - params.theta).abs() < 1e-9
                        });
                        continue;
                    }
                    for (a, b) in disc.iter().zip(&cont) {
                        case_worst = case_worst.max((a - b).abs());
                        ok &= (a - b).abs() <= params.dt_ms + 1e-9;
                    }
                }
            }
        }
        agree += usize::from(ok);
        if ok {
            worst = worst.max(case_worst);
        }
        if !ok {
            mismatches.push(case);
            n_saturated += usize::from(saturated);
            n_tangent += usize::from(tangent && !saturated);
        }
    }
    outcome(
        agree == 100,
        format!(
            "{agree}/100 random [3 5 1] networks within one 0.01 ms step on all 4 XOR patterns ({spikes_checked} spikes, max |dt| on agreeing networks = {worst:.4} ms){}",
            if mismatches.is_empty() {
                String::new()
            } else {
                format!("; mismatching networks {mismatches:?}, {n_saturated} with trains firing on every sample, {n_tangent} with u touching theta at a grid-point peak")
            }
        ),
    )
}

// ---------------------------------------------------------------------------

fn main() {
    let total = Instant::now();
    let mut logged = Vec::new();
    let mut results: Vec<(u8, &str, Outcome)> = vec![
        (1, "quantization golden tables", quantization_tables()),
        (2, "kernel oracle", kernel_oracle()),
    ];
    results.push((4, "XOR standard [3 5 1]", xor_standard(&mut logged)));
    results.push((5, "XOR reduced [3 2 1]", xor_reduced(&mut logged)));
    results.push((6, "one-neuron XOR", xor_one_neuron(&mut logged)));
    results.push((7, "iris substitutes", iris_checks(&mut logged)));
    results.push((8, "determinism and checkpointing", determinism(&mut logged)));
    results.push((3, "GA operator laws", ga_operator_laws(&logged)));
    results.push((9, "dt sensitivity", dt_sensitivity()));
    results.sort_by_key(|r| r.0);

    println!();
    let mut failed = 0;
    for (n, name, o) in &results {
        println!(
            "[{}] {n}. {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {}/{} criteria passed in {:.1} s",
        results.len() - failed,
        results.len(),
        secs(total.elapsed())
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
