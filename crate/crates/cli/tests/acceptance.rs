//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Runs with `cargo test --test acceptance`.

use std::process::Command;
use std::time::{Duration, Instant};

use fovguard_cli::{load_config_traces, simulate_config, sweep_csv, RunConfig};
use fovguard_core::geometry::ring_expand;
use fovguard_core::optimizer::{brute_force_plan, max_resources_rate, optimize_durations, StreamClock};
use fovguard_core::prediction::PredictorKind;
use fovguard_core::privacy::{generate_camouflage, PrivacySpec};
use fovguard_core::resources::{capable_tiles, cc_capability, tile_bits, Rates, VideoConfig, MEBIBIT};
use fovguard_core::simulator::{simulate_traces, SweepSetup};
use fovguard_core::{Error, TileGrid, TileSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fig3_camouflage() -> Check {
    let grid = TileGrid::new(6, 10).unwrap();
    let fov = TileSet::from_indices(grid, (24..=27).chain(34..=37)).unwrap();
    let spec = |n: f64| PrivacySpec::new(n / 52.0).unwrap();
    let start = Instant::now();
    let first = generate_camouflage(&grid, &fov, &spec(16.0), 8).unwrap();
    let second = generate_camouflage(&grid, &fov, &spec(34.0), 8).unwrap();
    let elapsed = start.elapsed();
    let expected: Vec<usize> = (13..=18).chain([23, 28, 33, 38]).chain(43..=48).collect();
    ensure(first.to_vec() == expected, || format!("rho 16/52 gave {first:?}"))?;
    ensure(second.len() == 34, || format!("rho 34/52 gave {} tiles", second.len()))?;
    ensure(first.is_subset(&second), || "second ring output misses the first ring".into())?;
    ensure(ring_expand(&grid, &fov, 16).unwrap() == first, || "ring expansion disagrees".into())?;
    ensure(elapsed < Duration::from_millis(1), || format!("took {elapsed:?}"))?;
    Ok(format!("16-tile ring exact, 34-tile output contains it, {elapsed:?} for both"))
}

fn table3_bits() -> Check {
    let bits = tile_bits(&VideoConfig::reference_4k());
    let cpt = bits.s_cpt / MEBIBIT;
    let com = bits.s_com / MEBIBIT;
    ensure(bits.s_cpt == 14_929_920.0, || format!("s_cpt = {}", bits.s_cpt))?;
    ensure((cpt - 14.2).abs() <= 0.05, || format!("s_cpt = {cpt} Mibit"))?;
    ensure((com - 5.9).abs() <= 0.05, || format!("s_com = {com} Mibit"))?;
    Ok(format!("s_cpt = {} bit ({cpt:.3} Mibit), s_com = {com:.3} Mibit", bits.s_cpt))
}

fn reference_resources_rate() -> Check {
    let r = max_resources_rate(&VideoConfig::reference_4k(), &Rates::reference());
    ensure((0.55..=0.62).contains(&r), || format!("R = {r}"))?;
    Ok(format!("R_cc* = {r:.4}"))
}

fn closed_form_vs_grid_search() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut checked, mut infeasible) = (0, 0);
    while checked < 100 {
        let t_seg = [0.5, 1.0, 2.0][rng.random_range(0..3)];
        let grid = TileGrid::new(rng.random_range(4..=12), rng.random_range(6..=24)).unwrap();
        let video = VideoConfig {
            grid,
            t_seg,
            n_fov: rng.random_range(1..=grid.tile_count() / 3),
            ..VideoConfig::reference_4k()
        };
        let clock = StreamClock::new(rng.random_range(2..=5), t_seg, 60).unwrap();
        let tau = [0.05, 0.1, 0.2, 0.25][rng.random_range(0..4)];
        let spec = PrivacySpec::new(rng.random_range(0.0..=1.0)).unwrap();
        let rates = Rates::reference().scaled(10f64.powf(rng.random_range(-0.5..1.0)));
        let step = tau / 10.0;
        let plan = match optimize_durations(&clock, tau, &spec, &video, &rates) {
            Ok(p) => p,
            Err(Error::Infeasible { .. }) => {
                infeasible += 1;
                continue;
            }
            Err(e) => return Err(e.to_string()),
        };
        checked += 1;
        let grid_plan = brute_force_plan(&clock, tau, &spec, &video, &rates, step).map_err(|e| e.to_string())?;
        let gap = (plan.observation_budget() - grid_plan.observation_budget()).abs();
        ensure(gap <= step + 1e-12, || format!("budget gap {gap} > {step}: {plan:?} vs {grid_plan:?}"))?;
        // flooring to whole samples can jump by tau when the budget sits on a
        // sample boundary; away from it t_obw must agree within a step
        let samples = (clock.t_ps() - plan.t_cc()) / tau;
        if (samples - samples.round()).abs() > step / tau + 1e-9 {
            let d = (plan.t_obw - grid_plan.t_obw).abs();
            ensure(d <= step, || format!("t_obw off by {d}: {plan:?} vs {grid_plan:?}"))?;
        }
        let m = video.tile_count();
        let bits = tile_bits(&video);
        ensure(capable_tiles(plan.t_com, plan.t_cpt, &rates, &bits, m) == plan.n_p as f64, || {
            format!("capability is not exactly N_p = {}", plan.n_p)
        })?;
        ensure(
            cc_capability(plan.t_com, plan.t_cpt, &rates, &bits, m) == plan.n_p as f64 / m as f64,
            || "C_cc differs from N_p / M".into(),
        )?;
        let sum = plan.t_obw + plan.idle_slack + plan.t_com + plan.t_cpt;
        ensure((sum - clock.t_ps()).abs() <= 1e-9, || format!("durations sum to {sum}"))?;
    }
    Ok(format!("100 feasible configs agree within tau/10 ({infeasible} infeasible skipped)"))
}

fn privacy_boundaries() -> Check {
    for predictor in [PredictorKind::TrivialMotion, PredictorKind::LinearExtrapolation] {
        // tau = 0.1 leaves two samples at full privacy, enough for both predictors
        let base = RunConfig {
            trace_count: 20,
            tau: 0.1,
            predictor,
            ..RunConfig::default()
        };
        let (reports, agg) = simulate_config(&RunConfig { rho_s: 1.0, ..base.clone() }).map_err(|e| e.to_string())?;
        ensure(agg.average_qoe == 1.0, || format!("{predictor:?}: rho 1 QoE {}", agg.average_qoe))?;
        ensure(reports.iter().all(|r| r.average_qoe == 1.0), || format!("{predictor:?}: a trace below 1"))?;
        let (reports, agg) = simulate_config(&RunConfig { rho_s: 0.0, ..base }).map_err(|e| e.to_string())?;
        ensure(agg.average_qoe == agg.average_doo, || {
            format!("{predictor:?}: rho 0 QoE {} vs DoO {}", agg.average_qoe, agg.average_doo)
        })?;
        ensure(reports.iter().all(|r| r.average_qoe == r.average_doo), || {
            format!("{predictor:?}: a trace with QoE != DoO")
        })?;
    }
    Ok("20 traces, both predictors: QoE = 1 at rho 1, QoE = DoO at rho 0".into())
}

fn superset_bound(cfg: &RunConfig) -> Check {
    let traces = load_config_traces(cfg).map_err(|e| e.to_string())?;
    let setup = SweepSetup {
        clock: cfg.clock,
        video: cfg.video.clone(),
        base_rates: cfg.resolved_rates().map_err(|e| e.to_string())?,
        tau: cfg.tau,
        fov_diameter_deg: cfg.fov_diameter_deg,
    };
    let (mut segments, mut violations, mut cells) = (0usize, 0usize, 0usize);
    for &rho in &cfg.rho_grid {
        for &rcc in &cfg.rcc_grid {
            let sim = match setup.cell_setup(rho, rcc) {
                Ok(s) => s,
                Err(Error::Infeasible { .. }) => continue,
                Err(e) => return Err(e.to_string()),
            };
            cells += 1;
            let reports = simulate_traces(&traces, &cfg.predictor, &sim).map_err(|e| e.to_string())?;
            for rec in reports.iter().flat_map(|r| &r.records).filter(|r| !r.fallback_triggered) {
                segments += 1;
                if rec.qoe_term < rec.doo_term {
                    violations += 1;
                }
            }
        }
    }
    ensure(violations == 0, || format!("{violations} violations"))?;
    ensure(segments > 0, || "no non-fallback segments".into())?;
    Ok(format!("{segments} segments over {cells} cells, 0 violations"))
}

struct Row {
    rho: f64,
    rcc: f64,
    qoe: f64,
    doo: f64,
    c_cc: f64,
}

fn parse_sweep(csv: &str) -> Result<Vec<Row>, String> {
    let mut lines = csv.lines();
    ensure(lines.next() == Some("rho_s,rcc,avg_qoe,avg_doo,cc_capability,feasible"), || "bad header".into())?;
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 6 || f[5] != "true" {
                return Err(format!("infeasible or malformed cell: {l}"));
            }
            let num = |i: usize| f[i].parse::<f64>().map_err(|e| format!("{l}: {e}"));
            Ok(Row {
                rho: num(0)?,
                rcc: num(1)?,
                qoe: num(2)?,
                doo: num(3)?,
                c_cc: num(4)?,
            })
        })
        .collect()
}

fn fig5_trend(rows: &[Row]) -> Check {
    let col: Vec<&Row> = rows.iter().filter(|r| r.rcc == 0.6).collect();
    ensure(col.len() == 11, || format!("{} cells at R = 0.6", col.len()))?;
    for w in col.windows(2) {
        ensure(w[1].c_cc > w[0].c_cc, || format!("C_cc not increasing at rho {}", w[1].rho))?;
        ensure(w[1].doo <= w[0].doo + 0.02, || {
            format!("DoO rises from {} to {} at rho {}", w[0].doo, w[1].doo, w[1].rho)
        })?;
    }
    let (first, last) = (col[0], col[10]);
    ensure((first.c_cc - 0.165).abs() <= 0.02, || format!("C_cc(0) = {}", first.c_cc))?;
    ensure(last.c_cc == 1.0, || format!("C_cc(1) = {}", last.c_cc))?;
    ensure(last.qoe > first.qoe, || format!("QoE(1) = {} <= QoE(0) = {}", last.qoe, first.qoe))?;
    Ok(format!(
        "C_cc {:.3} -> {:.3}, DoO {:.3} -> {:.3}, QoE {:.3} -> {:.3}",
        first.c_cc, last.c_cc, first.doo, last.doo, first.qoe, last.qoe
    ))
}

fn fig4_trend(rows: &[Row], rcc_grid: &[f64]) -> Check {
    let mut checked = 0;
    for chunk in rows.chunks(rcc_grid.len()) {
        for w in chunk.windows(2) {
            ensure(w[1].qoe >= w[0].qoe, || {
                format!("rho {}: QoE {} at R {} < {} at R {}", w[0].rho, w[1].qoe, w[1].rcc, w[0].qoe, w[0].rcc)
            })?;
            checked += 1;
        }
    }
    Ok(format!("QoE non-decreasing in R_cc* on {} rows ({checked} steps)", rows.len() / rcc_grid.len()))
}

const TABLE_I: [(&str, &str); 12] = [
    ("leaked", "leaked"),
    ("leaked", "leaked"),
    ("protected", "leaked"),
    ("protected", "leaked"),
    ("protected", "leaked"),
    ("protected", "leaked"),
    ("leaked", "leaked"),
    ("leaked", "leaked"),
    ("protected", "leaked"),
    ("protected", "leaked"),
    ("protected", "leaked"),
    ("protected", "leaked"),
];

const TABLE_II: [(&str, &str); 12] = [
    ("protected", "protected"),
    ("protected", "protected"),
    ("protected", "protected"),
    ("protected", "protected"),
    ("protected", "protected"),
    ("protected", "protected"),
    ("leaked", "leaked"),
    ("leaked", "protected"),
    ("protected", "protected"),
    ("protected", "leaked"),
    ("protected", "leaked"),
    ("protected", "protected"),
];

fn fovguard(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_fovguard"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("fovguard {args:?} failed: {}", String::from_utf8_lossy(&out.stderr))
    })?;
    String::from_utf8(out.stdout).map_err(|e| e.to_string())
}

fn deployment_tables() -> Check {
    let mut pairs = 0;
    for (toggle, table) in [("off", &TABLE_I), ("on", &TABLE_II)] {
        let out = fovguard(&["classify", "--all", "--camouflage", toggle])?;
        let rows: Vec<&str> = out.lines().skip(1).collect();
        ensure(rows.len() == 12, || format!("{} rows", rows.len()))?;
        for (i, (row, want)) in rows.iter().zip(table).enumerate() {
            let f: Vec<&str> = row.split(',').collect();
            ensure(f[0] == (i + 1).to_string(), || format!("row {row}"))?;
            ensure((f[5], f[7]) == *want, || format!("camouflage {toggle}, case {}: {row}", i + 1))?;
            pairs += 1;
        }
    }
    Ok(format!("{pairs} verdict pairs match"))
}

fn deterministic_sweep() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        fovguard(&["sweep", "--seed", "42", "--out", p.to_str().unwrap()])?;
    }
    let (a, b) = (std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    ensure(!a.is_empty() && a == b, || "sweep outputs differ".into())?;
    Ok(format!("two runs, {} identical bytes", a.len()))
}

fn main() {
    let cfg = RunConfig::default();
    let started = Instant::now();
    let sweep = sweep_csv(&cfg).map_err(|e| e.to_string()).and_then(|csv| parse_sweep(&csv));
    let sweep_time = started.elapsed();
    let with_sweep = |f: &dyn Fn(&[Row]) -> Check| -> Check {
        match &sweep {
            Ok(rows) => f(rows).map(|s| format!("{s} (sweep {sweep_time:.1?})")),
            Err(e) => Err(e.clone()),
        }
    };

    let results: Vec<(&str, Check)> = vec![
        ("1 camouflage ring expansion", fig3_camouflage()),
        ("2 tile sizes", table3_bits()),
        ("3 maximal resources rate", reference_resources_rate()),
        ("4 closed form vs grid search", closed_form_vs_grid_search()),
        ("5 privacy boundary invariants", privacy_boundaries()),
        ("6 superset bound", superset_bound(&cfg)),
        ("7 QoE, DoO, C_cc vs privacy", with_sweep(&fig5_trend)),
        ("8 QoE vs resources rate", with_sweep(&|rows| fig4_trend(rows, &cfg.rcc_grid))),
        ("9 deployment tables", deployment_tables()),
        ("10 deterministic sweep", deterministic_sweep()),
    ];
    let mut failed = 0;
    for (name, r) in &results {
        match r {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("{}/{} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
