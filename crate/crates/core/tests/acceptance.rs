//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

mod common;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use hopfield_md::config::RunConfigFile;
use hopfield_md::experiment::{compare_methods, make_truth, mean_path_distance, AccuracyReport, MethodResult};
use hopfield_md::optim::run_from;
use hopfield_md::{
    covariance, distribution, kl_loss, log_partition, loss_gradient, md_step, moments, ngd_step, run, InitStrategy,
    Method, ParamVector, RunStatus, TargetDistribution,
};

type Outcome = Result<String, String>;

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn load(name: &str) -> RunConfigFile {
    RunConfigFile::load(&config_path(name)).expect("shipped config loads")
}

fn random_case(n: usize, seed: u64) -> (ParamVector, TargetDistribution) {
    let theta = common::random_params(n, 1.0, seed);
    let truth = common::random_params(n, 1.0, seed ^ 0x5eed);
    (theta, TargetDistribution::from_params(&truth))
}

fn within(limit: Duration, start: Instant, detail: String) -> Outcome {
    let took = start.elapsed();
    if took < limit {
        Ok(format!("{detail} in {:.2}s", took.as_secs_f64()))
    } else {
        Err(format!("{detail} but took {:.2}s (limit {}s)", took.as_secs_f64(), limit.as_secs()))
    }
}

fn gradient_oracle() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for case in 0..50u64 {
        let n = 2 + (case as usize % 5);
        let (theta, target) = random_case(n, 10 + case);
        let shape = theta.shape();
        let fd = common::fd_gradient(
            |x: &[f64]| kl_loss(&target, &ParamVector::new(shape, x.to_vec()).unwrap()).unwrap(),
            &theta,
            1e-4,
        );
        let g = loss_gradient(&target, &theta).map_err(|e| e.to_string())?;
        worst = worst.max(common::max_abs_diff(&g, &fd));
    }
    if worst >= 1e-5 {
        return Err(format!("max deviation {worst:.3e} >= 1e-5"));
    }
    within(Duration::from_secs(10), start, format!("50 cases, max deviation {worst:.3e}"))
}

fn hessian_identity() -> Outcome {
    let start = Instant::now();
    let (mut worst_f, mut worst_kl) = (0.0f64, 0.0f64);
    for case in 0..20u64 {
        let n = 1 + (case as usize % 5);
        let (theta, target) = random_case(n, 100 + case);
        let shape = theta.shape();
        let c = covariance(&distribution(&theta));
        let h_f = common::fd_hessian(|x: &[f64]| log_partition(&ParamVector::new(shape, x.to_vec()).unwrap()), &theta, 1e-4);
        let h_kl = common::fd_hessian(
            |x: &[f64]| kl_loss(&target, &ParamVector::new(shape, x.to_vec()).unwrap()).unwrap(),
            &theta,
            1e-4,
        );
        for i in 0..c.dim() {
            for j in 0..c.dim() {
                worst_f = worst_f.max((c.get(i, j) - h_f[i][j]).abs());
                worst_kl = worst_kl.max((c.get(i, j) - h_kl[i][j]).abs());
            }
        }
    }
    if worst_f >= 1e-4 || worst_kl >= 1e-4 {
        return Err(format!("max deviation F {worst_f:.3e}, KL {worst_kl:.3e}"));
    }
    within(
        Duration::from_secs(30),
        start,
        format!("20 cases, max deviation F {worst_f:.3e}, KL {worst_kl:.3e}"),
    )
}

fn md_equals_ngd() -> Outcome {
    let mut worst = 0.0f64;
    for k in 0..100u64 {
        let n = 1 + (k as usize % 6);
        let alpha = 10f64.powf(-4.0 + 3.0 * k as f64 / 99.0);
        let eps = 10f64.powf(-6.0 + 4.0 * ((k * 37) % 100) as f64 / 99.0);
        let (theta, target) = random_case(n, 1000 + k);
        let p = distribution(&theta);
        let c = covariance(&p);
        let g = loss_gradient(&target, &theta).map_err(|e| e.to_string())?;
        let md = md_step(&theta, &moments(&p), &g, &c, alpha, eps).map_err(|e| e.to_string())?.0;
        let ngd = ngd_step(&theta, &g, &c, alpha, eps).map_err(|e| e.to_string())?;
        for (a, b) in md.iter().zip(ngd.iter()) {
            let scale = a.abs().max(b.abs());
            if scale > 0.0 {
                worst = worst.max((a - b).abs() / scale);
            }
        }
    }
    if worst <= 1e-12 {
        Ok(format!("100 configurations, max relative deviation {worst:.3e}"))
    } else {
        Err(format!("max relative deviation {worst:.3e} > 1e-12"))
    }
}

fn find<'a>(results: &'a [MethodResult], label: &str) -> &'a MethodResult {
    results.iter().find(|r| r.label == label).unwrap_or_else(|| panic!("config has `{label}`"))
}

fn fig2_ordering() -> Outcome {
    let start = Instant::now();
    let cfg = load("fig2.config");
    let (truth, target) = make_truth(&cfg.truth).map_err(|e| e.to_string())?;
    let results = compare_methods(&target, &truth, &cfg.method_specs()).map_err(|e| e.to_string())?;
    let md = find(&results, "md-hopfield");
    let gd_hop = find(&results, "gd-hopfield");
    let mut failures = Vec::new();

    // (a) Hopfield starts are better than every random start.
    let hop_l0 = md.trajectory.initial().loss.max(gd_hop.trajectory.initial().loss);
    let rand_l0 = results
        .iter()
        .filter(|r| matches!(r.init, InitStrategy::Random { .. }))
        .map(|r| r.trajectory.initial().loss)
        .fold(f64::INFINITY, f64::min);
    if !(hop_l0 < rand_l0) {
        failures.push(format!("(a) hopfield L0 {hop_l0:.4} vs best random L0 {rand_l0:.4}"));
    }

    // (b) MD at or below GD+Hopfield from iteration 100 on.
    let late = md
        .trajectory
        .records
        .iter()
        .zip(&gd_hop.trajectory.records)
        .skip(100)
        .filter(|(m, g)| !(m.loss <= g.loss))
        .count();
    let compared = md.trajectory.records.len().min(gd_hop.trajectory.records.len());
    if late > 0 || md.trajectory.status == RunStatus::Diverged || compared < 5001 {
        failures.push(format!(
            "(b) {late} iterations with MD above GD+Hopfield ({compared} compared, MD {})",
            md.trajectory.status
        ));
    }

    // (c) MD is the most accurate.
    let hopfield_rmse = AccuracyReport::new(&truth, &target.target_moments().to_params()).rmse;
    let rivals = results
        .iter()
        .filter(|r| matches!(r.trajectory.config.method, Method::Gd | Method::Ngd))
        .map(|r| (r.label.as_str(), r.accuracy.rmse))
        .chain(std::iter::once(("hopfield-solution", hopfield_rmse)));
    let mut best_rival = ("", f64::INFINITY);
    for (label, rmse) in rivals {
        if rmse < best_rival.1 {
            best_rival = (label, rmse);
        }
    }
    if !(md.accuracy.rmse <= best_rival.1) {
        failures.push(format!("(c) MD rmse {:.4} vs {} {:.4}", md.accuracy.rmse, best_rival.0, best_rival.1));
    }

    let detail = format!(
        "L0 hopfield {hop_l0:.3} < random {rand_l0:.3}; MD never above GD+Hopfield after iter 100; \
         rmse MD {:.4} <= best rival {} {:.4}",
        md.accuracy.rmse, best_rival.0, best_rival.1
    );
    if failures.is_empty() {
        within(Duration::from_secs(120), start, detail)
    } else {
        Err(failures.join("; "))
    }
}

fn fig3_protocol() -> Outcome {
    let start = Instant::now();
    let cfg = load("fig3.config");
    let (truth, target) = make_truth(&cfg.truth).map_err(|e| e.to_string())?;
    let results = compare_methods(&target, &truth, &cfg.method_specs()).map_err(|e| e.to_string())?;
    let gd = find(&results, "gd-hopfield");
    if gd.trajectory.last().iter != 5000 {
        return Err(format!("GD stopped at iteration {}", gd.trajectory.last().iter));
    }
    let l_target = gd.trajectory.last().loss;
    let mut failures = Vec::new();
    let mut hits = Vec::new();
    let mut distances = Vec::new();
    for tag in ["1e-6", "1e-5", "1e-4", "1e-3", "1e-2"] {
        let md = find(&results, &format!("md-eps{tag}"));
        let fixed = find(&results, &format!("md-fixed-eps{tag}"));
        let hit_md = md.trajectory.first_iter_reaching(l_target);
        let hit_fixed = fixed.trajectory.first_iter_reaching(l_target);
        let faster = match (hit_md, hit_fixed) {
            (Some(a), Some(b)) => a < b,
            (Some(_), None) => true,
            _ => false,
        };
        if !faster {
            failures.push(format!("eps {tag}: updating {hit_md:?} vs fixed {hit_fixed:?}"));
        }
        hits.push(format!("{tag}: {}/{}", fmt_hit(hit_md), fmt_hit(hit_fixed)));
        distances.push(mean_path_distance(&md.trajectory, &gd.trajectory));
    }
    if let Some(w) = distances.windows(2).position(|w| w[1] > w[0]) {
        failures.push(format!("path distance rises between sweep points {w} and {}: {distances:?}", w + 1));
    }
    let detail = format!(
        "L_target {l_target:.4e}; hits updating/fixed [{}]; distances [{}]",
        hits.join(", "),
        distances.iter().map(|d| format!("{d:.3}")).collect::<Vec<_>>().join(", ")
    );
    if failures.is_empty() {
        within(Duration::from_secs(300), start, detail)
    } else {
        Err(format!("{}; {detail}", failures.join("; ")))
    }
}

fn fmt_hit(hit: Option<usize>) -> String {
    hit.map_or_else(|| "never".into(), |h| h.to_string())
}

fn vanishing_gradient() -> Outcome {
    let cfg = load("fig2.config");
    let (truth, target) = make_truth(&cfg.truth).map_err(|e| e.to_string())?;
    let g = loss_gradient(&target, &truth).map_err(|e| e.to_string())?;
    let g_max = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if g_max >= 1e-10 {
        return Err(format!("gradient max-norm {g_max:.3e} at the truth"));
    }
    let spec = cfg.method_specs().into_iter().find(|s| s.label == "md-hopfield").unwrap();
    let traj = run_from(&target, &spec.config.with_grad_tol(1e-10), truth).map_err(|e| e.to_string())?;
    if traj.status == RunStatus::Converged && traj.records.len() == 1 {
        Ok(format!("gradient max-norm {g_max:.3e}; CONVERGED at iteration 0"))
    } else {
        Err(format!("status {} after {} records", traj.status, traj.records.len()))
    }
}

fn epsilon_limit() -> Outcome {
    let (alpha, eps) = (1e-3, 1e6);
    let mut worst = 0.0f64;
    for case in 0..20u64 {
        let n = 2 + (case as usize % 5);
        let (theta, target) = random_case(n, 5000 + case);
        let p = distribution(&theta);
        let g = loss_gradient(&target, &theta).map_err(|e| e.to_string())?;
        let next = md_step(&theta, &moments(&p), &g, &covariance(&p), alpha, eps).map_err(|e| e.to_string())?.0;
        let direction: Vec<f64> = theta.iter().zip(next.iter()).map(|(t, s)| (t - s) * eps / alpha).collect();
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff: Vec<f64> = direction.iter().zip(&g).map(|(a, b)| a - b).collect();
        worst = worst.max(norm(&diff) / norm(&g));
    }
    if worst < 1e-5 {
        Ok(format!("20 cases, max relative deviation from GD direction {worst:.3e}"))
    } else {
        Err(format!("relative deviation {worst:.3e} >= 1e-5"))
    }
}

fn run_compare(out_dir: &Path) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_hopfield-md"))
        .arg("compare")
        .arg("--config")
        .arg(config_path("fig2.config"))
        .arg("--out-dir")
        .arg(out_dir)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&out.stderr).into_owned())
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_compare(&a)?;
    run_compare(&b)?;
    let mut names: Vec<String> = std::fs::read_dir(&a)
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok().map(|e| e.file_name().to_string_lossy().into_owned()))
        .filter(|n| n.ends_with(".csv"))
        .collect();
    names.sort();
    if names.len() != load("fig2.config").methods.len() {
        return Err(format!("expected one CSV per method, found {names:?}"));
    }
    for name in &names {
        let x = std::fs::read(a.join(name)).map_err(|e| e.to_string())?;
        let y = std::fs::read(b.join(name)).map_err(|e| e.to_string())?;
        if x != y {
            return Err(format!("{name} differs between runs"));
        }
    }
    Ok(format!("{} CSVs byte-identical across two executions", names.len()))
}

fn performance() -> Outcome {
    let cfg = load("fig2.config");
    let (_, target) = make_truth(&cfg.truth).map_err(|e| e.to_string())?;
    let spec = cfg.method_specs().into_iter().find(|s| s.label == "md-hopfield").unwrap();
    let start = Instant::now();
    let traj = run(&target, &spec.config, spec.init).map_err(|e| e.to_string())?;
    if traj.last().iter != 5000 {
        return Err(format!("run stopped at iteration {} ({})", traj.last().iter, traj.status));
    }
    within(Duration::from_secs(60), start, "5000 MD iterations at n = 10".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("gradient matches finite differences", gradient_oracle),
        ("covariance equals Hessian of log-partition and loss", hessian_identity),
        ("MD step equals NGD step", md_equals_ngd),
        ("four-method comparison ordering", fig2_ordering),
        ("updating vs fixed curvature and epsilon sweep", fig3_protocol),
        ("vanishing gradient at the optimum", vanishing_gradient),
        ("large-epsilon limit recovers GD direction", epsilon_limit),
        ("compare output is deterministic", determinism),
        ("performance envelope", performance),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS [{}] {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{}] {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
