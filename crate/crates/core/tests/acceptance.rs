//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! Run with `cargo test -p skipsense --test acceptance`.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use skipsense::engine::{run_experiment_with, Execution, Simulation};
use skipsense::reporting::write_series_csv;
use skipsense::sensing::Confusion;
use skipsense::skipper::{posterior_after, GammaPrior};
use skipsense::traffic::DutyCycleFamily;
use skipsense::{PolicyId, SimConfig, TrafficModel};

const BASELINES: [PolicyId; 3] = [PolicyId::Ots, PolicyId::Sbla, PolicyId::Ql];

struct Outcome {
    id: &'static str,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn outcome(id: &'static str, title: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome { id, title, pass, detail }
}

#[derive(Debug, Clone, Copy)]
struct Finals {
    sensing: f64,
    tp: f64,
    collision: f64,
}

/// Final cumulative averages per policy over the reference number of runs.
fn compare(traffic: TrafficModel, n_channels: usize, policies: &[PolicyId]) -> BTreeMap<PolicyId, Finals> {
    let base = SimConfig {
        traffic,
        n_channels,
        ..SimConfig::default()
    };
    policies
        .iter()
        .map(|&p| {
            let exp = run_experiment_with(&base.with_policy(p), Execution::Parallel).expect("experiment");
            let (sensing, tp, collision) = exp.mean.final_values().expect("non-empty series");
            (p, Finals { sensing, tp, collision })
        })
        .collect()
}

/// (sensing ratio vs fewest-sensing baseline, throughput gain vs best, collision increase vs lowest).
fn margins(r: &BTreeMap<PolicyId, Finals>) -> (f64, f64, f64) {
    let prop = r[&PolicyId::Proposed];
    let min_sensing = BASELINES.iter().map(|p| r[p].sensing).fold(f64::INFINITY, f64::min);
    let best_tp = BASELINES.iter().map(|p| r[p].tp).fold(f64::NEG_INFINITY, f64::max);
    let min_coll = BASELINES.iter().map(|p| r[p].collision).fold(f64::INFINITY, f64::min);
    (prop.sensing / min_sensing, prop.tp - best_tp, prop.collision - min_coll)
}

fn table(r: &BTreeMap<PolicyId, Finals>) -> String {
    r.iter()
        .map(|(p, f)| format!("{}={:.4}/{:.4}/{:.4}", p.name(), f.sensing, f.tp, f.collision))
        .collect::<Vec<_>>()
        .join(" ")
}

fn gpd_criteria(out: &mut Vec<Outcome>) {
    let r = compare(TrafficModel::Gpd, 5, &[PolicyId::Proposed, PolicyId::Ots, PolicyId::Sbla, PolicyId::Ql]);
    let summary = table(&r);
    let (ratio, gain, coll) = margins(&r);

    let in_band = BASELINES.iter().all(|p| (1.2..=1.9).contains(&r[p].sensing));
    out.push(outcome(
        "AC-1",
        "GPD sensing reduction",
        in_band && ratio <= 0.6,
        format!("baselines in [1.2,1.9]: {in_band}; proposed/min baseline = {ratio:.4} (<= 0.6) [{summary}]"),
    ));
    out.push(outcome(
        "AC-2",
        "GPD throughput gain",
        gain >= 0.05,
        format!("gain = {gain:+.4} (>= +0.05)"),
    ));
    out.push(outcome(
        "AC-3",
        "GPD collision bound",
        coll <= 0.02,
        format!("increase = {coll:+.4} (<= 0.02)"),
    ));
}

fn dtmc_criterion(out: &mut Vec<Outcome>) {
    let mut pass = true;
    let mut parts = Vec::new();
    for t in [TrafficModel::DtmcLow, TrafficModel::DtmcMedium, TrafficModel::DtmcHigh] {
        let r = compare(t, 5, &[PolicyId::Proposed, PolicyId::Ots, PolicyId::Sbla, PolicyId::Ql]);
        let (_, gain, coll) = margins(&r);
        let ok = gain >= 0.04 && coll <= 0.02;
        pass &= ok;
        parts.push(format!(
            "{}: gain {gain:+.4} coll {coll:+.4} {}",
            t.name(),
            if ok { "ok" } else { "miss" }
        ));
    }
    out.push(outcome(
        "AC-4",
        "DTMC gains per intensity",
        pass,
        format!("{} (gain >= +0.04, increase <= 0.02)", parts.join("; ")),
    ));
}

fn exponential_criterion(out: &mut Vec<Outcome>) {
    let r = compare(
        TrafficModel::Exponential,
        5,
        &[PolicyId::Proposed, PolicyId::Ots, PolicyId::Sbla, PolicyId::Ql],
    );
    let (ratio, gain, _) = margins(&r);
    out.push(outcome(
        "AC-5",
        "Exponential traffic",
        ratio <= 0.5 && gain >= 0.025,
        format!("sensing ratio {ratio:.4} (<= 0.5), gain {gain:+.4} (>= +0.025) [{}]", table(&r)),
    ));
}

fn sweep_criterion(out: &mut Vec<Outcome>) {
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [4, 6, 8, 10] {
        let r = compare(TrafficModel::Gpd, n, &[PolicyId::Proposed, PolicyId::Ots, PolicyId::Sbla, PolicyId::Ql]);
        let (ratio, gain, coll) = margins(&r);
        let ok = ratio <= 0.5 && gain >= 0.025 && coll <= 0.02;
        pass &= ok;
        parts.push(format!("N={n}: ratio {ratio:.3} gain {gain:+.4} coll {coll:+.4}"));
    }
    out.push(outcome(
        "AC-6",
        "GPD channel sweep",
        pass,
        format!("{} (ratio <= 0.5, gain >= +0.025, increase <= 0.02)", parts.join("; ")),
    ));
}

fn conjugate_criterion(out: &mut Vec<Outcome>) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cases = 10_000;
    let mut worst_alpha = 0.0f64;
    let mut worst_beta = 0.0f64;
    for _ in 0..cases {
        let prior = GammaPrior::new(rng.random_range(0.5..20.0), rng.random_range(1.0..1e4)).unwrap();
        let n = rng.random_range(0..60);
        let mut xs: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..5e3)).collect();
        let batch = posterior_after(prior, &xs).unwrap();
        let alpha = prior.alpha + n as f64;
        let beta = prior.beta + 2.0 * xs.iter().sum::<f64>();
        xs.shuffle(&mut rng);
        let mut seq = prior;
        for &x in &xs {
            seq.observe(x);
        }
        for got in [batch, seq] {
            worst_alpha = worst_alpha.max((got.alpha - alpha).abs());
            worst_beta = worst_beta.max((got.beta - beta).abs() / beta);
        }
    }
    out.push(outcome(
        "AC-7",
        "Conjugate update exactness",
        worst_alpha <= 1e-12 && worst_beta <= 1e-12,
        format!("{cases} cases: max |d alpha| = {worst_alpha:.2e}, max relative |d beta| = {worst_beta:.2e} (<= 1e-12)"),
    ));
}

fn consistency_criterion(out: &mut Vec<Outcome>) {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut pass = true;
    let mut parts = Vec::new();
    for theta in [1.0 / 100.0, 1.0 / 500.0] {
        let mut p = GammaPrior::new(1.0, 50.0).unwrap();
        for _ in 0..10_000 {
            let off = -(1.0 - rng.random::<f64>()).ln() / theta;
            p.observe(rng.random::<f64>() * off);
        }
        let rel = (p.mean_rate() - theta).abs() / theta;
        pass &= rel <= 0.10;
        parts.push(format!("theta=1/{:.0}: rel err {rel:.4}", 1.0 / theta));
    }
    out.push(outcome(
        "AC-8",
        "Skip-consistency oracle",
        pass,
        format!("{} (<= 0.10)", parts.join("; ")),
    ));
}

fn random_config(rng: &mut ChaCha8Rng) -> SimConfig {
    let n_channels = rng.random_range(1..=10);
    let sense_ms = rng.random_range(0.5..(49.0 / n_channels as f64));
    let pd = rng.random_range(0.5..=1.0);
    SimConfig {
        n_channels,
        sense_ms,
        traffic: TrafficModel::ALL[rng.random_range(0..TrafficModel::ALL.len())],
        duty_cycle: if rng.random::<bool>() {
            DutyCycleFamily::Beta
        } else {
            DutyCycleFamily::Kumaraswamy
        },
        pd,
        pf: rng.random_range(0.0..=(1.0 - pd).min(pd)),
        policy: PolicyId::ALL[rng.random_range(0..PolicyId::ALL.len())],
        channel_error_prob: rng.random_range(0.0..0.2),
        snr_su_db: rng.random_range(0.0..30.0),
        seed: rng.random(),
        n_runs: 1,
        ..SimConfig::default()
    }
}

fn state_machine_criterion(out: &mut Vec<Outcome>) {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let target = 1_000_000usize;
    let mut frames = 0usize;
    let mut violations: BTreeMap<&'static str, usize> = BTreeMap::new();
    let mut total = Confusion::default();
    let (mut expected_busy_given_busy, mut expected_busy_given_idle) = (0.0, 0.0);
    let mut configs = 0;

    while frames < target {
        let cfg = random_config(&mut rng);
        let mut sim = Simulation::new(&cfg, cfg.seed).expect("valid random config");
        let floor = (cfg.frame_ms - cfg.n_channels as f64 * cfg.sense_ms) / cfg.frame_ms;
        while !sim.is_done() {
            let before = sim.confusion().trials(true) + sim.confusion().trials(false);
            let rec = sim.step().expect("step");
            frames += 1;
            let sensed = sim.confusion().trials(true) + sim.confusion().trials(false) - before;
            let mut bad = |what| *violations.entry(what).or_default() += 1;
            if rec.skipped && (rec.k_sensed != 0 || sensed != 0) {
                bad("sensing in skip frame");
            }
            if !rec.skipped && sensed as usize != rec.k_sensed {
                bad("slot count mismatch");
            }
            if let Some(s) = sim.skipper() {
                if s.n_skip() > s.t_skip() {
                    bad("n_skip > t_skip");
                }
            }
            if !rec.skipped {
                let mut order = sim.last_ranking().map(|r| r.as_slice().to_vec()).unwrap_or_default();
                order.sort_unstable();
                if order != (0..cfg.n_channels).collect::<Vec<_>>() {
                    bad("ranking not a permutation");
                }
            }
            let tp = rec.normalized_tp;
            if !(tp == 0.0 || (tp >= floor - 1e-12 && tp <= 1.0 + 1e-12)) {
                bad("throughput out of bounds");
            }
        }
        let c = sim.confusion();
        expected_busy_given_busy += c.trials(true) as f64 * cfg.pd;
        expected_busy_given_idle += c.trials(false) as f64 * cfg.pf;
        total.merge(c);
        configs += 1;
    }

    let dev_busy = (total.counts[1][1] as f64 - expected_busy_given_busy) / total.trials(true) as f64;
    let dev_idle = (total.counts[0][1] as f64 - expected_busy_given_idle) / total.trials(false) as f64;
    let confusion_ok = dev_busy.abs() <= 0.002 && dev_idle.abs() <= 0.002;
    let n_viol: usize = violations.values().sum();
    out.push(outcome(
        "AC-9",
        "State-machine invariants",
        n_viol == 0 && confusion_ok,
        format!(
            "{frames} frames over {configs} configs; violations {violations:?}; detection rate dev {dev_busy:+.5}, false-alarm dev {dev_idle:+.5} (|.| <= 0.002)"
        ),
    ));
}

fn determinism_criterion(out: &mut Vec<Outcome>) {
    let dir = tempfile::tempdir().expect("tempdir");
    let mut pass = true;
    let mut parts = Vec::new();
    for traffic in [TrafficModel::Gpd, TrafficModel::DtmcHigh] {
        for policy in PolicyId::ALL {
            let cfg = SimConfig {
                traffic,
                policy,
                seed: 42,
                n_runs: 24,
                ..SimConfig::default()
            };
            let mut files = Vec::new();
            for (i, exec) in [Execution::Sequential, Execution::Parallel, Execution::Parallel].into_iter().enumerate() {
                let path = dir.path().join(format!("{}_{}_{i}.csv", traffic.name(), policy.name()));
                let exp = run_experiment_with(&cfg, exec).expect("experiment");
                write_series_csv(&exp.mean, &path).expect("write");
                files.push(std::fs::read(&path).expect("read"));
            }
            let same = files.windows(2).all(|w| w[0] == w[1]);
            pass &= same;
            if !same {
                parts.push(format!("{}/{} differs", traffic.name(), policy.name()));
            }
        }
    }
    out.push(outcome(
        "AC-10",
        "Determinism",
        pass,
        if pass {
            "sequential, parallel and repeated runs byte-identical for 10 configs".into()
        } else {
            parts.join("; ")
        },
    ));
}

fn main() -> ExitCode {
    let checks: [fn(&mut Vec<Outcome>); 8] = [
        gpd_criteria,
        dtmc_criterion,
        exponential_criterion,
        sweep_criterion,
        conjugate_criterion,
        consistency_criterion,
        state_machine_criterion,
        determinism_criterion,
    ];
    let mut results = Vec::new();
    for check in checks {
        let t = Instant::now();
        let from = results.len();
        check(&mut results);
        for r in &results[from..] {
            println!(
                "{} {:<6} {:<28} {} ({:.1}s)",
                if r.pass { "PASS" } else { "FAIL" },
                r.id,
                r.title,
                r.detail,
                t.elapsed().as_secs_f64()
            );
        }
    }
    let failed: Vec<_> = results.iter().filter(|r| !r.pass).map(|r| r.id).collect();
    println!(
        "acceptance: {} passed, {} failed{}",
        results.len() - failed.len(),
        failed.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!(" ({})", failed.join(", "))
        }
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
