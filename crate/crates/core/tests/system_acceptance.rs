//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Runs without the libtest harness so the lines always show.

use std::path::Path;
use std::process::Command as Process;
use std::time::{Duration, Instant};

use clap::Parser;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use polarq::bounds::{self, CurveFamily};
use polarq::channels::{sample_llr, ChannelModel};
use polarq::cli::{sweep_rows, Cli, Command};
use polarq::codec::{erasure_sc_decode, index_to_path, sc_decode, PolarCode, TreePath};
use polarq::density::{evolve_triple, gallager_demo, triple_minus, triple_plus};
use polarq::sim::{genie_bit_errors, DecoderKind};
use polarq::{Trit, TripleDensity};

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn within_budget(elapsed: Duration, budget: Duration) -> (bool, String) {
    (elapsed <= budget, format!("{:.2}s of {}s", elapsed.as_secs_f64(), budget.as_secs()))
}

const BSC_011: TripleDensity = TripleDensity { p: 0.89, e: 0.0, m: 0.11 };

fn golden_bsc_example() -> Outcome {
    let start = Instant::now();
    let s = bounds::bounds_series(&BSC_011, 20).expect("n = 20 is enumerable");
    let (in_time, timing) = within_budget(start.elapsed(), Duration::from_secs(10));
    let expected = [
        ("L0", s.lower[0], -0.361),
        ("U0", s.upper[0], 0.500),
        ("L1", s.lower[1], -0.191),
        ("U1", s.upper[1], 0.500),
        ("L2", s.lower[2], -0.075),
        ("U2", s.upper[2], 0.498),
        ("L10", s.lower[10], 0.264),
        ("U10", s.upper[10], 0.474),
        ("L20", s.lower[20], 0.398),
        ("U20", s.upper[20], 0.465),
    ];
    let misses: Vec<String> = expected
        .iter()
        .filter(|(_, got, want)| (got - want).abs() > 0.0005)
        .map(|(name, got, want)| format!("{name}={got:.6} (want {want:.3})"))
        .collect();
    let pass = misses.is_empty() && in_time;
    let detail = if misses.is_empty() {
        format!("all 10 values within 0.0005; {timing}")
    } else {
        format!("{} of 10 outside 0.0005: {}; {timing}", misses.len(), misses.join(", "))
    };
    outcome(pass, detail)
}

fn bec_exactness() -> Outcome {
    let mut worst: f64 = 0.0;
    for eps in [0.1, 0.3, 0.5, 0.9] {
        let s = bounds::bounds_series(&TripleDensity { p: 1.0 - eps, e: eps, m: 0.0 }, 20).unwrap();
        for n in 0..=20 {
            worst = worst
                .max((s.lower[n] - (1.0 - eps)).abs())
                .max((s.upper[n] - (1.0 - eps)).abs());
        }
    }
    outcome(worst <= 1e-10, format!("largest deviation {worst:.3e} (limit 1e-10)"))
}

#[derive(Default)]
struct Violations {
    mass: usize,
    info: usize,
    lower: usize,
    error: usize,
    z_minus: usize,
    z_plus: usize,
    worst_error: f64,
}

fn check_step(d: &TripleDensity, v: &mut Violations) {
    const SLACK: f64 = 1e-12;
    let (plus, minus) = (triple_plus(d), triple_minus(d));
    if (plus.total() - 1.0).abs() > SLACK || (minus.total() - 1.0).abs() > SLACK {
        v.mass += 1;
    }
    if (plus.capacity() + minus.capacity()) / 2.0 > d.capacity() + SLACK {
        v.info += 1;
    }
    if (plus.lower_functional() + minus.lower_functional()) / 2.0 < d.lower_functional() - SLACK {
        v.lower += 1;
    }
    let gap = ((plus.error_prob() + minus.error_prob()) / 2.0 - d.error_prob()).abs();
    if gap > SLACK {
        v.error += 1;
        v.worst_error = v.worst_error.max(gap);
    }
    let z = d.bhattacharyya();
    if minus.bhattacharyya() > 2.0 * z + SLACK {
        v.z_minus += 1;
    }
    if plus.bhattacharyya() > 2.0 * z.powf(1.5) + SLACK {
        v.z_plus += 1;
    }
}

fn martingale_steps() -> Outcome {
    let start = Instant::now();
    let mut v = Violations::default();
    let mut count = 0usize;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100_000 {
        let (a, b): (f64, f64) = (rng.random(), rng.random());
        let (lo, hi) = (a.min(b), a.max(b));
        check_step(&TripleDensity { p: lo, e: hi - lo, m: 1.0 - hi }, &mut v);
        count += 1;
    }
    for i in 0..=100 {
        for j in 0..=(100 - i) {
            let (p, e) = (i as f64 / 100.0, j as f64 / 100.0);
            check_step(&TripleDensity { p, e, m: (1.0 - p - e).max(0.0) }, &mut v);
            count += 1;
        }
    }
    let (in_time, timing) = within_budget(start.elapsed(), Duration::from_secs(30));
    let total = v.mass + v.info + v.lower + v.error + v.z_minus + v.z_plus;
    outcome(
        total == 0 && in_time,
        format!(
            "{count} triples; violations: mass {}, I-step {}, F-step {}, E-step {} (worst {:.3e}), Z(D-) {}, Z(D+) {}; {timing}",
            v.mass, v.info, v.lower, v.error, v.worst_error, v.z_minus, v.z_plus
        ),
    )
}

fn de_simulation_agreement() -> Outcome {
    let start = Instant::now();
    let n = 8;
    let trials = 100_000u64;
    let code = PolarCode::full(n).unwrap();
    let report = genie_bit_errors(&code, &ChannelModel::Bsc(0.11), DecoderKind::Erasure, trials, 1).unwrap();
    let rates = report.index_rates().unwrap();
    let (mut beyond2, mut beyond3, mut worst) = (0usize, 0usize, 0.0f64);
    for (i, &rate) in rates.iter().enumerate() {
        let p = evolve_triple(&BSC_011, &index_to_path(i, n).unwrap()).error_prob();
        let sd = (p * (1.0 - p) / trials as f64).sqrt();
        let dev = (rate - p).abs();
        let z = if sd > 0.0 { dev / sd } else if dev > 0.0 { f64::INFINITY } else { 0.0 };
        worst = worst.max(z);
        beyond2 += (z > 2.0) as usize;
        beyond3 += (z > 3.0) as usize;
    }
    let (in_time, timing) = within_budget(start.elapsed(), Duration::from_secs(120));
    let limit2 = rates.len() as f64 * 0.02;
    outcome(
        beyond3 == 0 && beyond2 as f64 <= limit2 && in_time,
        format!(
            "{} indices: {beyond3} beyond 3 sd, {beyond2} beyond 2 sd (limit {limit2:.2}), largest {worst:.2} sd; {timing}",
            rates.len()
        ),
    )
}

fn bec_decoder_equivalence() -> Outcome {
    let n = 10;
    let code = PolarCode::full(n).unwrap();
    let channel = ChannelModel::Bec(0.5);
    let mut differing = 0usize;
    for trial in 0..10_000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        rng.set_stream(trial);
        let llrs: Vec<f64> = (0..code.len()).map(|_| sample_llr(&channel, &mut rng)).collect();
        let signs: Vec<Trit> = llrs.iter().map(|&l| Trit::from_llr(l)).collect();
        let mut shared = rng.clone();
        let (exact, _) = sc_decode(&llrs, &code, &mut rng).unwrap();
        let erasure = erasure_sc_decode(&signs, &code, &mut shared).unwrap();
        differing += (exact != erasure) as usize;
    }
    outcome(differing == 0, format!("{differing} of 10000 trials differ (all 1024 indices decided)"))
}

fn capacity_curves() -> Outcome {
    let start = Instant::now();
    let (points, n, e_grid) = (50, 20, 200);
    let rows = |f| bounds::curve(f, points, n, e_grid).unwrap();
    let (bec, bsc, bawgn, uni) = (
        rows(CurveFamily::Bec),
        rows(CurveFamily::Bsc),
        rows(CurveFamily::Bawgn),
        rows(CurveFamily::Universal),
    );
    let mut order_breaks = Vec::new();
    let mut wide = Vec::new();
    for k in 0..points {
        let cap = bec[k].capacity;
        let ok = bec[k].lower == cap
            && bec[k].upper == cap
            && uni[k].lower <= bsc[k].lower.min(bawgn[k].lower) + 1e-12
            && bsc[k].upper <= cap + 1e-12
            && bawgn[k].upper <= cap + 1e-12
            && bsc[k].lower <= bsc[k].upper
            && bawgn[k].lower <= bawgn[k].upper;
        if !ok {
            order_breaks.push(format!("{cap:.2}"));
        }
        for (name, r) in [("bsc", &bsc[k]), ("bawgn", &bawgn[k])] {
            if r.width() > 0.07 {
                wide.push(format!("{name}@{cap:.2}={:.4}", r.width()));
            }
        }
    }
    let high = 0.99;
    let bsc_hi = bounds::bracket_at(&bounds::family_triple(CurveFamily::Bsc, high).unwrap().unwrap(), n).unwrap().0;
    let awgn_hi = bounds::bracket_at(&bounds::family_triple(CurveFamily::Bawgn, high).unwrap().unwrap(), n).unwrap().0;
    let uni_hi = bounds::universal_lower_bound(high, e_grid, n).unwrap();
    let high_ok = bsc_hi > 0.9 && awgn_hi > 0.9 && uni_hi > 0.9;
    let (in_time, timing) = within_budget(start.elapsed(), Duration::from_secs(600));
    let shown: Vec<&String> = wide.iter().take(6).collect();
    outcome(
        order_breaks.is_empty() && wide.is_empty() && high_ok && in_time,
        format!(
            "ordering breaks at {} points; lower bounds at I=0.99: bsc {bsc_hi:.4}, bawgn {awgn_hi:.4}, universal {uni_hi:.4}; {} brackets wider than 0.07{}{}; {timing}",
            order_breaks.len(),
            wide.len(),
            if wide.is_empty() { "" } else { ", e.g. " },
            shown.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(" "),
        ),
    )
}

fn quantizer_sweep() -> Outcome {
    let start = Instant::now();
    let cli = Cli::try_parse_from([
        "polarq", "sweep-q", "--channel", "bsc:0.11", "--n", "10", "--target-sum", "1e-3", "--sizes", "3,5,9,17,33",
    ])
    .unwrap();
    let Command::SweepQ(args) = cli.command else { unreachable!() };
    let rows = sweep_rows(&args).unwrap();
    let (sweep, reference) = rows.split_at(rows.len() - 1);
    let rates: Vec<f64> = sweep.iter().map(|r| r.rate).collect();
    let monotone = rates.windows(2).all(|w| w[1] >= w[0]);
    let gap = reference[0].rate - sweep.last().unwrap().rate;
    outcome(
        monotone && gap.abs() <= 0.02,
        format!(
            "rates {:?} for |Q| = 3,5,9,17,33; reference ({} levels) {:.4}; |Q|=33 gap {gap:.4} (limit 0.02); {:.2}s",
            rates.iter().map(|r| format!("{r:.4}")).collect::<Vec<_>>(),
            reference[0].levels,
            reference[0].rate,
            start.elapsed().as_secs_f64()
        ),
    )
}

fn gallager_threshold() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut paths, mut bad_order, mut stalled, mut at_fixed_point, mut improved) = (0, 0, 0, 0, 0);
    for k in 1..=50 {
        let q0 = k as f64 / 100.0;
        for _ in 0..1000 {
            let bits: Vec<bool> = (0..16).map(|_| rng.random()).collect();
            let t = gallager_demo(q0, &TreePath::new(bits.clone())).unwrap();
            paths += 1;
            for (step, &variable) in bits.iter().enumerate() {
                let (before, after) = (t[step], t[step + 1]);
                if after < before {
                    bad_order += 1;
                }
                if !variable && after <= before {
                    stalled += 1;
                    at_fixed_point += (before == 0.5) as usize;
                }
            }
            if t.iter().any(|&q| q < q0) {
                improved += 1;
            }
        }
    }
    outcome(
        bad_order == 0 && stalled == 0 && improved == 0,
        format!(
            "{paths} paths over q0 = 0.01..0.50: {bad_order} decreases, {improved} paths improving, {stalled} check levels without strict increase ({at_fixed_point} of them at the fixed point 1/2)"
        ),
    )
}

fn run_cli(args: &[&str], out: &Path) -> Vec<u8> {
    let status = Process::new(env!("CARGO_BIN_EXE_polarq"))
        .args(args)
        .arg("--out")
        .arg(out)
        .status()
        .expect("polarq runs");
    assert!(status.success(), "polarq {args:?} failed");
    std::fs::read(out).expect("output written")
}

fn reproducibility() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let code = dir.path().join("code.txt");
    run_cli(
        &["construct", "--channel", "bsc:0.11", "--quantizer", "q:sign", "--n", "8", "--rate", "0.25"],
        &code,
    );
    let code = code.to_str().unwrap().to_string();
    let commands: Vec<Vec<&str>> = vec![
        vec!["simulate", "--code", &code, "--channel", "bsc:0.11", "--decoder", "erasure", "--trials", "5000", "--seed", "9"],
        vec!["simulate", "--code", &code, "--channel", "bawgn:0.8", "--decoder", "q:delta=0.5,M=8", "--trials", "3000", "--seed", "4"],
        vec!["bounds", "--channel", "bsc:0.11", "--n", "16"],
        vec!["bounds", "--channel", "bsc:0.11", "--n", "20", "--samples", "20000", "--seed", "3"],
    ];
    let mut mismatches = Vec::new();
    for (c, args) in commands.iter().enumerate() {
        let mut outputs = Vec::new();
        for (r, threads) in ["1", "1", "2", "4"].iter().enumerate() {
            let out = dir.path().join(format!("out-{c}-{r}.csv"));
            let mut full = vec!["--threads", threads];
            full.extend(args.iter().copied());
            outputs.push(run_cli(&full, &out));
        }
        if outputs.windows(2).any(|w| w[0] != w[1]) {
            mismatches.push(args[0]);
        }
    }
    outcome(
        mismatches.is_empty(),
        format!(
            "{} commands x 4 runs (threads 1,1,2,4): {} with differing bytes {:?}",
            commands.len(),
            mismatches.len(),
            mismatches
        ),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("BSC(0.11) bound sequence golden values", golden_bsc_example),
        ("BEC exactness of L_n = U_n = 1 - eps", bec_exactness),
        ("martingale-step property suite", martingale_steps),
        ("density evolution vs genie-aided simulation", de_simulation_agreement),
        ("BEC erasure/exact decoder equivalence", bec_decoder_equivalence),
        ("capacity-curve ordering and widths", capacity_curves),
        ("achievable rate vs quantizer size", quantizer_sweep),
        ("single-bit decoder never improves", gallager_threshold),
        ("byte-identical reruns across thread counts", reproducibility),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let o = check();
        failed += !o.pass as usize;
        println!("[{}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
