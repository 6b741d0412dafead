use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use adi_core::bounds::{self, LowerWeights, NlpOptions, NlpSolution};
use adi_core::cost::{self, QuadOptions};
use adi_core::feasibility::{self, FeasibilityOptions};
use adi_core::fermat::{discrete_cost, shoot_theta, Weights};
use adi_core::geometry::{Boundary, Polyline};
use adi_core::ode::{integrate, OdeOptions};
use adi_core::optimizer::{self, OptimizerOptions, WINDOW};
use adi_core::oracle;
use adi_core::pipeline::Config;
use adi_core::svg::{LineChart, Series};
use adi_core::{convergence, Error};
use serde::Serialize;
use serde_json::{json, Value};

use crate::{Cli, Command, RunOptions};

/// Reference value of the optimum checked by `verify`.
const OPTIMUM: f64 = 3.5492596;

enum Failure {
    Usage(String),
    Numerical(Error),
    Infeasible(Value),
    Acceptance(Value),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(m) => Failure::Usage(m),
            e => Failure::Numerical(e),
        }
    }
}

struct Sink {
    dir: Option<PathBuf>,
    json: bool,
    csv: bool,
    svg: bool,
}

impl Sink {
    fn new(o: &RunOptions) -> Result<Self, Failure> {
        let mut s = Sink { dir: o.out.clone(), json: false, csv: false, svg: false };
        for f in o.format.split(',').map(str::trim).filter(|f| !f.is_empty()) {
            match f {
                "json" => s.json = true,
                "csv" => s.csv = true,
                "svg" => s.svg = true,
                other => return Err(Failure::Usage(format!("unknown format {other:?}"))),
            }
        }
        if let Some(d) = &s.dir {
            fs::create_dir_all(d).map_err(|e| Failure::Numerical(e.into()))?;
        }
        Ok(s)
    }

    fn path(&self, name: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(name))
    }

    fn write(&self, name: &str, enabled: bool, body: impl FnOnce(&mut dyn Write) -> adi_core::Result<()>) -> Result<(), Failure> {
        if !enabled {
            return Ok(());
        }
        if let Some(p) = self.path(name) {
            let mut f = std::io::BufWriter::new(fs::File::create(&p).map_err(|e| Failure::Numerical(e.into()))?);
            body(&mut f)?;
            f.flush().map_err(|e| Failure::Numerical(e.into()))?;
        }
        Ok(())
    }

    fn json(&self, name: &str, v: &Value) -> Result<(), Failure> {
        self.write(name, self.json, |w| {
            serde_json::to_writer_pretty(&mut *w, v)?;
            writeln!(w)?;
            Ok(())
        })
    }

    fn csv(&self, name: &str, body: impl FnOnce(&mut dyn Write) -> adi_core::Result<()>) -> Result<(), Failure> {
        self.write(name, self.csv, body)
    }

    fn svg(&self, name: &str, chart: &LineChart) -> Result<(), Failure> {
        self.write(name, self.svg, |w| {
            w.write_all(chart.render().as_bytes())?;
            Ok(())
        })
    }
}

fn config(o: &RunOptions) -> Result<Config, Failure> {
    for (name, v) in [
        ("tol-ode", o.tol_ode),
        ("tol-bisect", o.tol_bisect),
        ("tol-brent", o.tol_brent),
        ("tol-quad-rel", o.tol_quad_rel),
        ("tol-quad-abs", o.tol_quad_abs),
        ("x0", o.x0),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Failure::Usage(format!("--{name} must be positive, got {v}")));
        }
    }
    let feasibility = FeasibilityOptions {
        tol_bisect: o.tol_bisect,
        tol_recheck: o.tol_bisect.min(FeasibilityOptions::default().tol_recheck),
        tol_brent: o.tol_brent,
        ..FeasibilityOptions::default()
    };
    Ok(Config {
        ode: OdeOptions { x0: o.x0, rtol: o.tol_ode, atol: o.tol_ode, ..OdeOptions::default() },
        feasibility,
        quad: QuadOptions { rtol: o.tol_quad_rel, atol: o.tol_quad_abs, ..QuadOptions::default() },
    })
}

fn require<T>(v: Option<T>, flag: &str) -> Result<T, Failure> {
    v.ok_or_else(|| Failure::Usage(format!("--{flag} is required for this command")))
}

pub fn run(cli: &Cli) -> ExitCode {
    let result = dispatch(cli);
    let print = |v: &Value| {
        let mut out = std::io::stdout().lock();
        let _ = writeln!(out, "{}", serde_json::to_string_pretty(v).expect("serializable"));
    };
    match result {
        Ok(v) => {
            print(&v);
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(m)) => {
            print(&json!({ "error": { "kind": "Usage", "message": m } }));
            ExitCode::from(1)
        }
        Err(Failure::Numerical(e)) => {
            print(&json!({ "error": { "kind": e.kind(), "message": e.to_string() } }));
            ExitCode::from(2)
        }
        Err(Failure::Infeasible(v)) => {
            print(&v);
            ExitCode::from(2)
        }
        Err(Failure::Acceptance(v)) => {
            print(&v);
            ExitCode::from(3)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<Value, Failure> {
    let o = &cli.opts;
    let cfg = config(o)?;
    let sink = Sink::new(o)?;
    match &cli.command {
        Command::Optimize => optimize(o, &cfg, &sink),
        Command::Trace => trace(o, &cfg, &sink),
        Command::SweepFeasibility => sweep_feasibility(o, &cfg, &sink),
        Command::SweepCost { levels } => sweep_cost(o, &cfg, &sink, *levels),
        Command::LowerBound { weights_k } => lower_bound(o, &sink, *weights_k),
        Command::AngleBounds => angle_bounds(o, &sink),
        Command::Verify => verify(o, &cfg, &sink),
        Command::Converge => converge(o, &sink),
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn optimize(o: &RunOptions, cfg: &Config, sink: &Sink) -> Result<Value, Failure> {
    let opts = OptimizerOptions { config: *cfg, grid: o.grid.unwrap_or(2000), ..OptimizerOptions::default() };
    let sol = optimizer::refine_minimum(WINDOW.0, WINDOW.1, &opts)?;
    let v = json!({
        "command": "optimize",
        "window": [WINDOW.0, WINDOW.1],
        "tau0": sol.tau0_star,
        "xi": sol.xi_star,
        "theta": sol.theta_star,
        "cost": sol.cost_star,
        "clearance": sol.clearance_star,
        "solution": to_value(&sol),
    });
    sink.json("optimize.json", &v)?;
    Ok(v)
}

fn trace(o: &RunOptions, cfg: &Config, sink: &Sink) -> Result<Value, Failure> {
    let tau0 = require(o.tau0, "tau0")?;
    let sol = integrate(tau0, &cfg.ode)?;
    let rows = o.samples.unwrap_or(1000);
    sink.csv("trace.csv", |w| sol.write_csv(w, rows))?;
    let report = feasibility::assess_solution(&sol, &cfg.feasibility)?;
    if !report.feasible {
        return Err(Failure::Infeasible(json!({
            "error": {
                "kind": "Infeasible",
                "message": format!("curve reaches the disk: tau_min = {}", report.tau_min),
            },
            "feasibility": to_value(&report),
        })));
    }
    let cost = cost::total_cost(&sol, report.xi, &cfg.quad)?;
    let v = json!({
        "command": "trace",
        "solution": to_value(&sol.meta()),
        "feasibility": to_value(&report),
        "cost": {
            "tau0": tau0,
            "xi": cost.xi,
            "theta": cost.theta,
            "log_term": cost.log_term,
            "deployment_term": cost.deployment_term,
            "integral": cost.inspection_integral,
            "total": cost.total,
        },
    });
    sink.json("trace.json", &v)?;
    Ok(v)
}

fn sweep_feasibility(o: &RunOptions, cfg: &Config, sink: &Sink) -> Result<Value, Failure> {
    let grid = o.grid.unwrap_or(2000);
    let reports = feasibility::feasibility_sweep(WINDOW.0, WINDOW.1, grid, &cfg.ode, &cfg.feasibility)?;
    sink.csv("sweep_feasibility.csv", |w| feasibility::write_sweep_csv(w, &reports))?;
    let ok: Vec<_> = reports.iter().filter(|r| r.feasible).collect();
    let min = |f: fn(&&feasibility::FeasibilityReport) -> f64| ok.iter().map(f).fold(f64::INFINITY, f64::min);
    let max = |f: fn(&&feasibility::FeasibilityReport) -> f64| ok.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    let xi: Vec<f64> = ok.iter().map(|r| r.xi).collect();
    let monotone = xi.windows(2).all(|w| w[1] <= w[0]) || xi.windows(2).all(|w| w[1] >= w[0]);
    let v = json!({
        "command": "sweep-feasibility",
        "window": [WINDOW.0, WINDOW.1],
        "grid": grid,
        "feasible": ok.len(),
        "infeasible": reports.len() - ok.len(),
        "tau_min_min": min(|r| r.tau_min),
        "theta_min": min(|r| r.theta),
        "theta_max": max(|r| r.theta),
        "xi_selfcheck_gap_max": max(|r| r.xi_selfcheck_gap),
        "xi_monotone": monotone,
    });
    sink.json("sweep_feasibility.json", &v)?;
    let series = |name: &str, f: fn(&feasibility::FeasibilityReport) -> f64| Series {
        name: name.into(),
        points: reports.iter().map(|r| (r.tau0, f(r))).collect(),
    };
    for (file, name, f, hl) in [
        ("sweep_feasibility_xi.svg", "xi", (|r: &feasibility::FeasibilityReport| r.xi) as fn(&_) -> f64, vec![]),
        ("sweep_feasibility_tau_min.svg", "tau_min", |r: &feasibility::FeasibilityReport| r.tau_min, vec![(0.2, "y = 0.2".to_string())]),
        (
            "sweep_feasibility_theta.svg",
            "theta",
            |r: &feasibility::FeasibilityReport| r.theta,
            vec![(bounds::THETA_LO, "0.52".to_string()), (bounds::THETA_HI, "1.148".to_string())],
        ),
    ] {
        let chart = LineChart {
            title: format!("{name} versus tau0"),
            x_label: "tau0".into(),
            y_label: name.into(),
            series: vec![series(name, f)],
            hlines: hl,
        };
        sink.svg(file, &chart)?;
    }
    Ok(v)
}

fn sweep_cost(o: &RunOptions, cfg: &Config, sink: &Sink, levels: usize) -> Result<Value, Failure> {
    let grid = o.grid.unwrap_or(2000);
    let opts = OptimizerOptions { config: *cfg, grid, ..OptimizerOptions::default() };
    let sweeps = optimizer::refined_sweeps(WINDOW.0, WINDOW.1, grid, levels, &opts)?;
    let mut summary = Vec::new();
    for (i, s) in sweeps.iter().enumerate() {
        sink.csv(&format!("sweep_cost_level{i}.csv"), |w| optimizer::write_sweep_csv(w, s))?;
        let j = optimizer::argmin(s);
        let chart = LineChart {
            title: format!("cost versus tau0, level {i}"),
            x_label: "tau0".into(),
            y_label: "cost".into(),
            series: vec![Series { name: "cost".into(), points: s.iter().map(|c| (c.tau0, c.total().unwrap_or(f64::NAN))).collect() }],
            hlines: vec![(3.549259, "3.549259".into()), (3.549260, "3.549260".into())],
        };
        sink.svg(&format!("sweep_cost_level{i}.svg"), &chart)?;
        summary.push(json!({
            "level": i,
            "lo": s.first().map(|c| c.tau0),
            "hi": s.last().map(|c| c.tau0),
            "tau0_min": j.map(|j| s[j].tau0),
            "cost_min": j.and_then(|j| s[j].total()),
            "failures": s.iter().filter(|c| c.cost.is_none()).count(),
            "sign_changes": optimizer::sign_changes(s),
        }));
    }
    let v = json!({ "command": "sweep-cost", "grid": grid, "levels": summary });
    sink.json("sweep_cost.json", &v)?;
    Ok(v)
}

fn lower_bound(o: &RunOptions, sink: &Sink, weights_k: bool) -> Result<Value, Failure> {
    let theta = o.theta.unwrap_or(bounds::THETA_LO);
    let k = o.k.unwrap_or(1000);
    let opts = NlpOptions { weights: if weights_k { LowerWeights::K } else { LowerWeights::KPlusOne }, ..NlpOptions::default() };
    match o.grid {
        None => {
            let s = bounds::nlp_lower_bound(theta, k, &opts)?;
            sink.csv("lower_bound.csv", |w| bounds::write_nlp_csv(w, std::slice::from_ref(&s)))?;
            let v = json!({ "command": "lower-bound", "solution": to_value(&s) });
            sink.json("lower_bound.json", &v)?;
            Ok(v)
        }
        Some(grid) => {
            let rows: Vec<NlpSolution> =
                bounds::nlp_sweep(0.0, theta, grid, k, &opts).into_iter().collect::<Result<_, _>>()?;
            sink.csv("lower_bound.csv", |w| bounds::write_nlp_csv(w, &rows))?;
            let b: Vec<f64> = rows.iter().map(|r| r.composed_bound).collect();
            let chart = LineChart {
                title: format!("composed lower bound, k = {k}"),
                x_label: "theta".into(),
                y_label: "bound".into(),
                series: vec![Series { name: format!("k = {k}"), points: rows.iter().map(|r| (r.theta, r.composed_bound)).collect() }],
                hlines: vec![(3.551, "y = 3.551".into())],
            };
            sink.svg("lower_bound.svg", &chart)?;
            let v = json!({
                "command": "lower-bound",
                "theta_range": [0.0, theta],
                "grid": grid,
                "k": k,
                "strictly_decreasing": b.windows(2).all(|w| w[1] < w[0]),
                "min_bound": b.iter().cloned().fold(f64::INFINITY, f64::min),
                "max_kkt_residual": rows.iter().map(|r| r.kkt_residual).fold(0.0, f64::max),
            });
            sink.json("lower_bound.json", &v)?;
            Ok(v)
        }
    }
}

fn angle_bounds(o: &RunOptions, sink: &Sink) -> Result<Value, Failure> {
    let k = o.k.unwrap_or(1000);
    let w = bounds::theta_window(k, &NlpOptions::default())?;
    let mut v = to_value(&w);
    v["command"] = json!("angle-bounds");
    sink.json("angle_bounds.json", &v)?;
    Ok(v)
}

fn check(name: &str, pass: bool, detail: Value) -> Value {
    json!({ "check": name, "pass": pass, "detail": detail })
}

fn random_pairs(seed: u64, count: usize) -> Vec<(f64, usize)> {
    // SplitMix64, enough for picking test instances reproducibly.
    let mut s = seed;
    let mut next = move || {
        s = s.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = s;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    };
    (0..count)
        .map(|_| {
            let th = 0.2 + 0.9 * (next() >> 11) as f64 / (1u64 << 53) as f64;
            let k = 100 + (next() % 400) as usize;
            (th, k)
        })
        .collect()
}

fn verify(o: &RunOptions, cfg: &Config, sink: &Sink) -> Result<Value, Failure> {
    let m = o.samples.unwrap_or(100_000);
    let tau0 = o.tau0.unwrap_or(1.646_976_860_877_693_6);
    let sol = integrate(tau0, &cfg.ode)?;
    let xi = feasibility::deployment_parameter_at(&sol, cfg.feasibility.grid, 1e-14)?;
    let analytic = cost::total_cost(&sol, xi, &cfg.quad)?.total;
    let traj = oracle::assemble_trajectory(&sol, xi, 10_000)?;
    sink.csv("verify_trajectory.csv", |w| traj.write_csv(w))?;
    let full = oracle::average_cost_full(&traj, m)?;
    let mut checks = vec![
        check(
            "oracle_mean_vs_optimum",
            (full.mean_cost - OPTIMUM).abs() <= 2e-3 && full.never_count == 0,
            json!({ "oracle": full.mean_cost, "analytic": analytic, "reference": OPTIMUM, "samples": m, "never": full.never_count }),
        ),
        check("inspective", oracle::is_inspective(&traj, m), json!({ "resolution": m })),
    ];
    let mut worst: f64 = 0.0;
    let mut pairs = Vec::new();
    for (th, k) in random_pairs(o.seed, 20) {
        let ch = shoot_theta(th, k)?;
        let pl = Polyline::new(ch.traversal())?;
        let angles: Vec<f64> = (0..=k).map(|i| ch.phi(i)).collect();
        let ex = oracle::average_cost_at_angles(&pl, &angles, Boundary::Clockwise);
        let d = (ex.mean_cost - discrete_cost(&ch, Weights::Upper)).abs();
        worst = worst.max(d);
        pairs.push(json!({ "theta": th, "k": k, "gap": d }));
    }
    checks.push(check("exact_angles_vs_chain_cost", worst <= 1e-9, json!({ "max_gap": worst, "instances": pairs })));
    let pass = checks.iter().all(|c| c["pass"] == json!(true));
    let v = json!({ "command": "verify", "seed": o.seed, "pass": pass, "checks": checks });
    sink.json("verify.json", &v)?;
    if pass {
        Ok(v)
    } else {
        Err(Failure::Acceptance(v))
    }
}

fn converge(o: &RunOptions, sink: &Sink) -> Result<Value, Failure> {
    let tau0 = o.tau0.unwrap_or(1.646_976_860_877_693_6);
    let ns = [500, 1000, 2000, 4000];
    let rows = convergence::rate_table(tau0, &ns, 0.1, 0.8)?;
    sink.csv("converge.csv", |w| {
        writeln!(w, "n,sup_psi,sup_tau,ratio_psi,ratio_tau")?;
        for r in &rows {
            let f = |v: Option<f64>| v.map(|x| format!("{x:.17e}")).unwrap_or_default();
            writeln!(w, "{},{:.17e},{:.17e},{},{}", r.n, r.sup_psi, r.sup_tau, f(r.ratio_psi), f(r.ratio_tau))?;
        }
        Ok(())
    })?;
    let v = json!({ "command": "converge", "tau0": tau0, "interval": [0.1, 0.8], "rows": to_value(&rows) });
    sink.json("converge.json", &v)?;
    Ok(v)
}
