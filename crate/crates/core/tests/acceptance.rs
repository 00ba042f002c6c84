//! Acceptance suite. Runs every criterion at its pinned tolerance, prints one
//! line per criterion and exits non-zero when any of them fails.

mod common;

use std::sync::OnceLock;
use std::time::Instant;

use rand::Rng;
use serde::Deserialize;
use wsn_powergame::channel::{ber, prr, sinr, ChannelGainMatrix, NoiseFloor, RadioEnv};
use wsn_powergame::experiment::{emit, run_scenario, Mode, OutputFormat, ScenarioConfig, SimulationReport};
use wsn_powergame::packet_sim::{relative_energy, simulate, ReceiverPolicy, TrafficConfig};
use wsn_powergame::quantizer::{quantize, solve_discrete, DiscreteLevelSet};
use wsn_powergame::topology::{is_connected_bfs, is_connected_spectral, AdjacencyMatrix};
use wsn_powergame::{exact_potential_residual, solve, verify_equilibrium, Equilibrium, Profile};

use common::{desk, random_profile, rng, snapshot, CONNECTED_DESK_SEEDS};

type Criterion = (&'static str, fn() -> Outcome);

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

fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}

fn c1_exact_potential() -> Outcome {
    let sc = desk(1);
    let (s_min, s_max) = sc.start.bounds();
    let mut r = rng(101);
    let mut worst = 0.0f64;
    let mut within = 0;
    for _ in 0..1000 {
        let p = random_profile(&mut r, sc.start.len(), s_min, s_max);
        let i = r.random_range(0..p.len());
        let s_prime = r.random_range(s_min..=s_max);
        let res = exact_potential_residual(&p, i, s_prime, &sc.env, &sc.params);
        worst = worst.max(res);
        within += usize::from(res <= 1e-9);
    }
    outcome(
        worst <= 1e-9,
        format!("max residual {worst:.3e} (limit 1e-9), {within}/1000 pairs within"),
    )
}

fn c2_ascent() -> Outcome {
    let mut descending = 0;
    let mut min_delta = f64::INFINITY;
    let mut non_monotone = 0;
    for seed in 1..=20 {
        let sc = desk(seed);
        let eq = solve(&sc.start, &sc.env, &sc.params);
        descending += eq.descending_updates;
        min_delta = min_delta.min(eq.min_update_delta);
        non_monotone += usize::from(!eq.potential_monotone(1e-12));
    }
    outcome(
        descending == 0 && non_monotone == 0,
        format!(
            "{descending} updates below -1e-12 (smallest {min_delta:.3e}), {non_monotone}/20 traces not monotone"
        ),
    )
}

struct ProbeRun {
    seed: u64,
    results: Vec<Equilibrium>,
}

fn uniqueness_runs() -> &'static [ProbeRun] {
    static RUNS: OnceLock<Vec<ProbeRun>> = OnceLock::new();
    RUNS.get_or_init(|| {
        CONNECTED_DESK_SEEDS
            .iter()
            .map(|&seed| {
                let sc = desk(seed);
                let (s_min, s_max) = sc.start.bounds();
                let mut r = rng(1000 + seed);
                let results = (0..20)
                    .map(|_| solve(&random_profile(&mut r, sc.start.len(), s_min, s_max), &sc.env, &sc.params))
                    .collect();
                ProbeRun { seed, results }
            })
            .collect()
    })
}

fn c3_convergence_uniqueness() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    let mut flagged = 0;
    for run in uniqueness_runs() {
        let converged = run.results.iter().filter(|e| e.converged && e.sweeps_used <= 100).count();
        let reference = &run.results[0].profile;
        let spread = run
            .results
            .iter()
            .map(|e| e.profile.max_abs_diff(reference))
            .fold(0.0, f64::max);
        flagged += run.results.iter().map(|e| e.non_unimodal_scans).sum::<usize>();
        pass &= converged == run.results.len() && spread <= 1e-3;
        parts.push(format!("seed {}: {converged}/20 converged, spread {spread:.1e}", run.seed));
    }
    outcome(pass, format!("{}; non-unimodal scans {flagged}", parts.join("; ")))
}

fn c4_certificates() -> Outcome {
    let mut checked = 0;
    let mut failed = 0;
    let mut worst = f64::NEG_INFINITY;
    for run in uniqueness_runs() {
        let sc = desk(run.seed);
        for eq in run.results.iter().filter(|e| e.converged) {
            let check = verify_equilibrium(&eq.profile, &sc.env, &sc.params, 1e-4, 0.05);
            checked += 1;
            failed += usize::from(!check.is_equilibrium);
            worst = worst.max(check.worst_gain);
        }
    }
    outcome(
        failed == 0 && checked > 0,
        format!("{checked} converged profiles checked, {failed} failed, largest deviation gain {worst:.3e}"),
    )
}

#[derive(Deserialize)]
struct BerCase {
    sinr: f64,
    ber: f64,
}

#[derive(Deserialize)]
struct PrrCase {
    ber: f64,
    f_bytes: u32,
    prr: f64,
}

#[derive(Deserialize)]
struct Oracle {
    ber: Vec<BerCase>,
    prr: Vec<PrrCase>,
}

fn c5_formula_oracles() -> Outcome {
    let oracle: Oracle = serde_json::from_str(include_str!("data/formula_oracle.json")).expect("oracle file");
    let ber_err = oracle
        .ber
        .iter()
        .map(|c| rel_err(ber(c.sinr).unwrap(), c.ber))
        .fold(0.0, f64::max);
    let prr_err = oracle
        .prr
        .iter()
        .map(|c| rel_err(prr(c.ber, c.f_bytes), c.prr))
        .fold(0.0, f64::max);

    let mut r = rng(505);
    let mut sinr_err = 0.0f64;
    for _ in 0..200 {
        let n = r.random_range(3..9);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|a| {
                (0..n)
                    .map(|b| if a == b { 0.0 } else { 10f64.powf(r.random_range(-11.0..-4.0)) })
                    .collect()
            })
            .collect();
        let powers: Vec<f64> = (0..n).map(|_| 10f64.powf(r.random_range(-2.5..0.0))).collect();
        let n0 = 10f64.powf(r.random_range(-12.0..-8.0));
        let alpha = r.random_range(0.0..=1.0);
        let h = ChannelGainMatrix::from_rows(rows.clone()).unwrap();
        let noise = NoiseFloor::new(n0).unwrap();
        let env = RadioEnv::new(h.clone(), noise, alpha).unwrap();
        let i = r.random_range(0..n);
        let j = (i + r.random_range(1..n)) % n;
        let mut interference = 0.0;
        for (t, row) in rows.iter().enumerate() {
            if t != i && t != j {
                interference += row[j] * powers[t];
            }
        }
        let full = rows[i][j] * powers[i] / (interference + n0);
        let damped = rows[i][j] * powers[i] / (alpha * interference + n0);
        sinr_err = sinr_err
            .max(rel_err(sinr(i, j, &powers, &h, &noise).unwrap(), full))
            .max(rel_err(env.sinr(i, j, &powers).unwrap(), damped));
    }
    outcome(
        ber_err <= 1e-12 && prr_err <= 1e-12 && sinr_err <= 1e-12,
        format!("max relative error ber {ber_err:.2e}, prr {prr_err:.2e}, sinr {sinr_err:.2e} (limit 1e-12)"),
    )
}

fn c6_quantizer() -> Outcome {
    let levels = DiscreteLevelSet::<f64>::default();
    let mut r = rng(606);
    // strategy range [0.5, 25] is [-24.5, 0] dBm
    let mut xs: Vec<f64> = (0..10_000).map(|_| r.random_range(-24.5..=0.0)).collect();
    let max_err = xs.iter().map(|&x| (quantize(x, &levels) - x).abs()).fold(0.0, f64::max);
    let idempotent = xs
        .iter()
        .all(|&x| quantize(quantize(x, &levels), &levels) == quantize(x, &levels));
    xs.sort_by(f64::total_cmp);
    let monotone = xs.windows(2).all(|w| quantize(w[0], &levels) <= quantize(w[1], &levels));

    let mut solves = 0;
    let mut stuck = 0;
    let mut max_sweeps = 0;
    for &seed in &CONNECTED_DESK_SEEDS {
        let sc = desk(seed);
        let (s_min, s_max) = sc.start.bounds();
        let mut r = rng(2000 + seed);
        let mut starts = vec![sc.start.clone()];
        starts.extend((0..20).map(|_| random_profile(&mut r, sc.start.len(), s_min, s_max)));
        for p0 in starts {
            let eq = solve_discrete(&p0, &sc.env, &sc.params, &levels).unwrap();
            solves += 1;
            stuck += usize::from(!eq.converged);
            max_sweeps = max_sweeps.max(eq.sweeps_used);
        }
    }
    let def = common::scenario(ScenarioConfig::default());
    let eq = solve_discrete(&def.start, &def.env, &def.params, &levels).unwrap();
    solves += 1;
    stuck += usize::from(!eq.converged);
    max_sweeps = max_sweeps.max(eq.sweeps_used);

    outcome(
        max_err <= 0.5 && idempotent && monotone && stuck == 0,
        format!(
            "max |error| {max_err:.4} dB, idempotent {idempotent}, monotone {monotone}; \
             discrete dynamics: {}/{solves} terminated, max sweeps {max_sweeps}",
            solves - stuck
        ),
    )
}

fn default_report() -> &'static SimulationReport {
    static REPORT: OnceLock<SimulationReport> = OnceLock::new();
    REPORT.get_or_init(|| run_scenario(&ScenarioConfig::default()).expect("default scenario runs"))
}

fn c7_prr_ordering() -> Outcome {
    let rep = default_report();
    let full = rep.mode(Mode::FullPower).unwrap();
    let cont = rep.mode(Mode::Continuous).unwrap();
    let post = rep.mode(Mode::DiscretizedPosthoc).unwrap();
    let ordered = full.avg_analytic_prr >= cont.avg_analytic_prr - 0.01;
    let gap_pp = 100.0 * (post.avg_analytic_prr - cont.avg_analytic_prr).abs();
    outcome(
        ordered && gap_pp <= 5.0,
        format!(
            "avg analytic PRR full-power {:.4}, continuous {:.4}, posthoc {:.4} (gap {gap_pp:.2} pp); \
             per-sender {:.4} / {:.4} / {:.4}",
            full.avg_analytic_prr,
            cont.avg_analytic_prr,
            post.avg_analytic_prr,
            full.sender_analytic_prr,
            cont.sender_analytic_prr,
            post.sender_analytic_prr
        ),
    )
}

fn c8_energy() -> Outcome {
    let rep = default_report();
    let full = rep.mode(Mode::FullPower).unwrap().metrics.relative_energy;
    let mut pass = full == 1.0;
    let mut parts = vec![format!("full-power {full}")];
    for mode in [Mode::Continuous, Mode::DiscretizedPosthoc, Mode::DiscretizedGame] {
        let e = rep.mode(mode).unwrap().metrics.relative_energy;
        pass &= e <= full && 1.0 - e >= 0.05;
        parts.push(format!("{mode} {e:.4}"));
    }
    outcome(pass, format!("relative energy {}", parts.join(", ")))
}

fn c9_connectivity() -> Outcome {
    let mut r = rng(909);
    let mut disagreements = 0;
    let mut connected = 0;
    for _ in 0..200 {
        let n = r.random_range(2..=30);
        let density = r.random_range(0.02..0.5);
        let mut adj = AdjacencyMatrix::empty(n);
        for a in 0..n {
            for b in (a + 1)..n {
                adj.set_edge(a, b, r.random_bool(density));
            }
        }
        let bfs = is_connected_bfs(&adj);
        connected += usize::from(bfs);
        disagreements += usize::from(bfs != is_connected_spectral(&adj).connected);
    }
    let mut closed_form_err = 0.0f64;
    for n in 2..=25 {
        let mut path = AdjacencyMatrix::empty(n);
        for a in 0..n - 1 {
            path.set_edge(a, a + 1, true);
        }
        let want = 2.0 - 2.0 * (std::f64::consts::PI / n as f64).cos();
        closed_form_err = closed_form_err.max((is_connected_spectral(&path).lambda2 - want).abs());
        let complete = is_connected_spectral(&AdjacencyMatrix::complete(n)).lambda2;
        closed_form_err = closed_form_err.max((complete - n as f64).abs());
    }
    outcome(
        disagreements == 0 && closed_form_err <= 1e-8,
        format!(
            "{disagreements}/200 disagreements ({connected} connected); max lambda2 error {closed_form_err:.2e}"
        ),
    )
}

fn c10_packet_fidelity() -> Outcome {
    let sc = desk(1);
    let traffic = TrafficConfig {
        messages_per_node: 10_000,
        max_retries: 0,
        receiver_policy: ReceiverPolicy::BestPrr,
        seed: 1010,
        ..TrafficConfig::simulation()
    };
    let eps = sc.params.epsilon_link;
    let continuous = solve(&sc.start, &sc.env, &sc.params).profile;
    let full = Profile::uniform(sc.start.len(), 25.0, 0.5, 25.0).unwrap();
    let mut links = 0;
    let mut outside = 0;
    let mut worst_z = 0.0f64;
    for profile in [&full, &continuous] {
        let analytic = sc.env.prr_matrix(&profile.powers_mw(), traffic.payload_f_bytes);
        let log = simulate(profile, &sc.env, &traffic, eps).unwrap();
        let emp = wsn_powergame::empirical_prr(&log).unwrap();
        for l in &emp.per_link {
            let p = analytic[l.sender][l.receiver];
            let sigma = (p * (1.0 - p) / l.first_attempts as f64).sqrt();
            let z = if sigma == 0.0 { 0.0 } else { (l.prr - p).abs() / sigma };
            links += 1;
            worst_z = worst_z.max(z);
            outside += usize::from(l.first_attempts < 10_000 || (l.prr - p).abs() > 3.0 * sigma);
        }
    }
    let full_log = simulate(&full, &sc.env, &traffic, eps).unwrap();
    let full_energy = relative_energy(&full_log).unwrap();
    outcome(
        outside == 0 && full_energy == 1.0,
        format!("{outside}/{links} links outside 3 sigma (worst {worst_z:.2} sigma); full-power energy {full_energy}"),
    )
}

fn c11_determinism() -> Outcome {
    let mut identical = true;
    let mut files = 0;
    for config in [ScenarioConfig::desk(1), ScenarioConfig::default()] {
        let dirs: Vec<_> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
        for d in &dirs {
            let report = run_scenario(&config).unwrap();
            emit(&report, d.path(), OutputFormat::All).unwrap();
        }
        let a = snapshot(dirs[0].path());
        let b = snapshot(dirs[1].path());
        files += a.len();
        identical &= a == b;
    }
    outcome(identical, format!("{files} files compared byte for byte, identical {identical}"))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("exact potential", c1_exact_potential),
        ("potential ascent", c2_ascent),
        ("convergence and uniqueness", c3_convergence_uniqueness),
        ("equilibrium certificates", c4_certificates),
        ("formula oracles", c5_formula_oracles),
        ("quantizer", c6_quantizer),
        ("PRR ordering", c7_prr_ordering),
        ("energy savings", c8_energy),
        ("spectral connectivity", c9_connectivity),
        ("packet simulation fidelity", c10_packet_fidelity),
        ("determinism", c11_determinism),
    ];
    let total = Instant::now();
    let mut failed = Vec::new();
    for (k, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = run();
        println!(
            "criterion {:>2} {:<27} {}  {} [{:.1}s]",
            k + 1,
            name,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
        if !o.pass {
            failed.push(k + 1);
        }
    }
    println!(
        "acceptance: {}/{} criteria passed in {:.1}s",
        criteria.len() - failed.len(),
        criteria.len(),
        total.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
