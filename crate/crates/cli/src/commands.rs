//! The six subcommands. Each writes its artifacts into the output directory
//! and reports whether the mathematical checks it ran passed.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use radlog_core::diagnostics::{
    boundary_flux, decay_exponent, energy_balance, newtonian_comparison, newtonian_potential, norms,
};
use radlog_core::eigen::refinement_bracket;
use radlog_core::logistic::ExtinctionReason;
use radlog_core::{
    bifurcation_sweep, estimate_big_lambda, lambda_curve, principal_shifted, principal_weighted, solve_entire,
    validate_absorption, validate_potential, BallOutcome, EntireOutcome, Error as CoreError, Pencil, RadialGrid,
    StiffnessForm,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::{read_table, LoadedConfig};
use crate::output::{Cell, OutputDir, Plot};
use crate::UsageError;

pub enum Verdict {
    Pass,
    Fail(String),
}

pub fn validate(cfg: &LoadedConfig, out: &mut OutputDir) -> Result<Verdict> {
    let v = cfg.potential();
    let f = cfg.absorption();
    let grid = cfg.check_grid();
    let pot = validate_potential(v, grid);
    let abs = validate_absorption(&f, v.sup_norm());
    let passed = pot.all_checkable_pass() && abs.all_checkable_pass();
    out.json(
        "validation.json",
        &json!({ "passed": passed, "potential": pot, "absorption": abs }),
    )?;
    let rows = pot.checks.iter().chain(&abs.checks).map(|c| {
        let subject = if pot.checks.iter().any(|p| std::ptr::eq(p, c)) {
            &pot.subject
        } else {
            &abs.subject
        };
        vec![
            Cell::from(subject.as_str()),
            Cell::from(c.name.as_str()),
            Cell::from(serde_json::to_value(c.status)?.as_str().unwrap_or_default()),
            Cell::from(c.witness),
            Cell::from(c.detail.as_str()),
        ]
        .into_iter()
        .map(Ok)
        .collect::<Result<Vec<Cell>>>()
    });
    let rows = rows.collect::<Result<Vec<_>>>()?;
    out.csv(
        "validation.csv",
        &["subject", "check", "status", "witness", "detail"],
        rows,
    )?;
    out.dat("validate.dat", &["r", "V"], grid.points().map(|r| vec![r, v.value(r)]))?;
    out.gnuplot(
        "validate.gp",
        &Plot::new("Potential", "validate.png", "r", "V(r)")
            .logscale("x")
            .line("validate.dat", "1:2", "V"),
    )?;
    let failures: Vec<String> = pot.failures().chain(abs.failures()).map(|c| c.name.clone()).collect();
    println!(
        "validate: {}",
        if passed {
            "all checkable hypotheses pass".into()
        } else {
            format!("failed: {}", failures.join("; "))
        }
    );
    Ok(if passed {
        Verdict::Pass
    } else {
        Verdict::Fail(format!("hypotheses failed: {}", failures.join("; ")))
    })
}

pub fn eig(cfg: &LoadedConfig, out: &mut OutputDir) -> Result<Verdict> {
    let v = cfg.potential();
    let opts = cfg.eigen_options();
    let radius = cfg.ball_radius()?;
    let grid = RadialGrid::with_resolution(cfg.config.dimension, radius, cfg.config.nodes_per_unit)?;
    let res = principal_weighted(&grid, v, opts)?;
    let bracket = refinement_bracket(&grid, v, opts)?;

    // Randomized spot check of Rayleigh optimality around φ₁.
    let pencil = Pencil::new(&grid, v);
    let form = StiffnessForm::new(std::sync::Arc::new(grid.clone()));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.config.seed);
    let top = res.phi1.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let (mut samples, mut worst) = (0, f64::INFINITY);
    for _ in 0..10_000 {
        let t = rng.gen_range(0.0..2.0) * top;
        let x: Vec<f64> = res.phi1.iter().map(|p| p + t * rng.gen_range(-1.0..1.0)).collect();
        let b: f64 = x.iter().zip(pencil.weight()).map(|(p, w)| w * p * p).sum();
        if b > 0.0 {
            worst = worst.min(form.bilinear(&x, &x)? / b / res.lambda1);
            samples += 1;
            if samples == 100 {
                break;
            }
        }
    }
    let rayleigh_pass = worst >= 1.0 - opts.tol;
    let shifted = match cfg.config.lambda {
        Some(lambda) => Some(principal_shifted(&grid, v, lambda, opts)?),
        None => None,
    };
    out.json(
        "eig.json",
        &json!({
            "dimension": cfg.config.dimension,
            "radius": radius,
            "nodes": grid.len(),
            "lambda1": res.lambda1,
            "residual": res.residual,
            "iterations": res.iterations,
            "gap_ratio": res.gap_ratio,
            "refinement": bracket,
            "rayleigh_check": { "seed": cfg.config.seed, "samples": samples, "min_ratio": worst, "pass": rayleigh_pass },
            "shifted": shifted.as_ref().map(|s| json!({
                "lambda": s.lambda, "mu1": s.mu1, "residual": s.residual, "iterations": s.iterations,
            })),
        }),
    )?;
    let r = grid.nodes();
    out.csv(
        "eigenvector.csv",
        &["r", "phi1"],
        r.iter().zip(&res.phi1).map(|(&r, &p)| vec![r.into(), p.into()]),
    )?;
    out.dat(
        "eig.dat",
        &["r", "phi1"],
        r.iter().zip(&res.phi1).map(|(&r, &p)| vec![r, p]),
    )?;
    out.gnuplot(
        "eig.gp",
        &Plot::new(
            &format!("Principal eigenfunction, lambda1 = {:.8}", res.lambda1),
            "eig.png",
            "r",
            "phi_1",
        )
        .line("eig.dat", "1:2", "phi_1"),
    )?;
    println!(
        "eig: lambda1({radius}) = {:.12} (residual {:.2e})",
        res.lambda1, res.residual
    );
    Ok(if rayleigh_pass {
        Verdict::Pass
    } else {
        Verdict::Fail(format!("Rayleigh spot check found ratio {worst} < 1"))
    })
}

pub fn curve(cfg: &LoadedConfig, out: &mut OutputDir) -> Result<Verdict> {
    let curve = lambda_curve(
        cfg.config.dimension,
        cfg.potential(),
        &cfg.config.curve_schedule,
        cfg.config.nodes_per_unit,
        cfg.eigen_options(),
    )?;
    out.csv(
        "curve.csv",
        &["R", "lambda1", "residual"],
        curve
            .entries
            .iter()
            .map(|e| vec![e.radius.into(), e.lambda1.into(), e.residual.into()]),
    )?;
    out.dat(
        "curve.dat",
        &["R", "lambda1"],
        curve.entries.iter().map(|e| vec![e.radius, e.lambda1]),
    )?;
    let estimate = if curve.entries.len() >= 4 {
        Some(estimate_big_lambda(&curve)?)
    } else {
        None
    };
    out.json("lambda_estimate.json", &json!({ "curve": curve, "estimate": estimate }))?;
    let mut plot = Plot::new("lambda1(R)", "curve.png", "R", "lambda1")
        .logscale("x")
        .points("curve.dat", "1:2", "lambda1(R)");
    if let Some(e) = &estimate {
        plot.title = format!(
            "lambda1(R); Lambda_hat = {:.6} in [{:.6}, {:.6}]",
            e.value, e.low, e.high
        );
    }
    out.gnuplot("curve.gp", &plot)?;
    match &estimate {
        Some(e) => println!("curve: Lambda_hat = {:.8} in [{:.8}, {:.8}]", e.value, e.low, e.high),
        None => println!("curve: fewer than 4 radii, no extrapolation"),
    }
    Ok(Verdict::Pass)
}

fn radius_tag(r: f64) -> String {
    format!("{r}")
}

pub fn solve(cfg: &LoadedConfig, out: &mut OutputDir) -> Result<Verdict> {
    let lambda = cfg.lambda()?;
    let schedule = cfg.schedule()?;
    let v = cfg.potential();
    let outcome = solve_entire(
        cfg.config.dimension,
        v,
        &cfg.absorption(),
        lambda,
        schedule,
        &cfg.solve_options(),
    )?;
    let mut plot = Plot::new(
        &format!("Expanding-ball profiles, lambda = {lambda}"),
        "solve.png",
        "r",
        "u(r)",
    );
    match &outcome {
        EntireOutcome::Solution(sol) => {
            let mut stages = Vec::new();
            for stage in &sol.stages {
                match &stage.outcome {
                    BallOutcome::Solution(p) => {
                        let tag = radius_tag(stage.radius);
                        let rows = || p.grid.nodes().iter().zip(&p.values);
                        out.csv(
                            &format!("stages/profile_R{tag}.csv"),
                            &["r", "u"],
                            rows().map(|(&r, &u)| vec![r.into(), u.into()]),
                        )?;
                        out.dat(
                            &format!("solve_R{tag}.dat"),
                            &["r", "u"],
                            rows().map(|(&r, &u)| vec![r, u]),
                        )?;
                        plot = plot.line(&format!("solve_R{tag}.dat"), "1:2", &format!("R = {tag}"));
                        stages.push(json!({
                            "radius": stage.radius, "status": "exists", "delta": stage.delta,
                            "iterations": p.iterations, "sup_norm": p.sup_norm(), "residual": p.residual,
                            "update_norm": p.update_norm, "upper_bound": p.upper_bound,
                            "monotonicity_violations": p.monotonicity_violations,
                        }));
                    }
                    BallOutcome::Extinct(e) => stages.push(json!({
                        "radius": stage.radius, "status": "extinct", "reason": e.reason, "iterations": e.iterations,
                    })),
                }
            }
            let p = &sol.final_profile;
            out.csv(
                "profile.csv",
                &["r", "u"],
                p.grid
                    .nodes()
                    .iter()
                    .zip(&p.values)
                    .map(|(&r, &u)| vec![r.into(), u.into()]),
            )?;
            out.json(
                "solve.json",
                &json!({
                    "lambda": lambda, "status": "exists", "dimension": cfg.config.dimension,
                    "radius": p.radius, "converged": sol.converged, "stages": stages,
                    "deltas": sol.deltas(), "activation_radius": sol.activation_radius(),
                    "sup_norm": p.sup_norm(), "supersolution": sol.supersolution, "decay": sol.decay,
                }),
            )?;
            println!(
                "solve: positive solution, sup norm {:.6e} on B_{} ({} stages, converged: {})",
                p.sup_norm(),
                p.radius,
                sol.stages.len(),
                sol.converged
            );
        }
        EntireOutcome::Extinct(stages) => {
            let last = *schedule.last().expect("nonempty schedule");
            let grid = RadialGrid::with_resolution(cfg.config.dimension, last, cfg.config.nodes_per_unit)?;
            out.csv(
                "profile.csv",
                &["r", "u"],
                grid.nodes().iter().map(|&r| vec![r.into(), 0.0.into()]),
            )?;
            out.dat(
                "solve_extinct.dat",
                &["r", "u"],
                grid.nodes().iter().map(|&r| vec![r, 0.0]),
            )?;
            plot = plot.line("solve_extinct.dat", "1:2", "extinct");
            let summary: Vec<_> = stages
                .iter()
                .map(|e| {
                    let mu1 = match e.reason {
                        ExtinctionReason::NoSubsolution { mu1 } => Some(mu1),
                        ExtinctionReason::Decayed => None,
                    };
                    json!({ "radius": e.radius, "status": "extinct", "reason": e.reason, "mu1": mu1,
                            "iterations": e.iterations, "sup_norms": e.sup_norms })
                })
                .collect();
            out.json(
                "solve.json",
                &json!({ "lambda": lambda, "status": "extinct", "dimension": cfg.config.dimension,
                         "radius": last, "stages": summary }),
            )?;
            println!("solve: extinct on every ball of the schedule");
        }
    }
    out.gnuplot("solve.gp", &plot)?;
    Ok(Verdict::Pass)
}

pub fn sweep(cfg: &LoadedConfig, out: &mut OutputDir) -> Result<Verdict> {
    if cfg.config.lambda_grid.is_empty() {
        return Err(UsageError("sweep needs a nonempty \"lambda_grid\"".into()).into());
    }
    let table = bifurcation_sweep(
        cfg.config.dimension,
        cfg.potential(),
        &cfg.absorption(),
        &cfg.config.lambda_grid,
        cfg.schedule()?,
        &cfg.solve_options(),
    )?;
    out.csv(
        "sweep.csv",
        &["lambda", "exists", "sup_norm", "iterations", "activation_R"],
        table.rows.iter().map(|r| {
            vec![
                r.lambda.into(),
                r.exists.into(),
                r.sup_norm.into(),
                r.iterations.into(),
                r.activation_radius.into(),
            ]
        }),
    )?;
    out.json("sweep.json", &table)?;
    out.dat(
        "sweep.dat",
        &["lambda", "sup_norm", "exists"],
        table
            .rows
            .iter()
            .map(|r| vec![r.lambda, r.sup_norm, if r.exists { 1.0 } else { 0.0 }]),
    )?;
    let mut plot =
        Plot::new("Bifurcation sweep", "sweep.png", "lambda", "sup u").points("sweep.dat", "1:2", "sup norm");
    if let Some(t) = table.empirical_threshold {
        plot.title = format!("Bifurcation sweep, Lambda_emp = {t:.6}");
    }
    out.gnuplot("sweep.gp", &plot)?;
    let flags: Vec<&str> = table
        .rows
        .iter()
        .map(|r| if r.exists { "exists" } else { "extinct" })
        .collect();
    println!(
        "sweep: {} ; Lambda_emp = {:?}",
        flags.join(", "),
        table.empirical_threshold
    );
    Ok(Verdict::Pass)
}

/// Reads a `r,u` profile written by `solve` and rebuilds its grid.
fn read_profile(path: &Path, dim: usize) -> Result<(RadialGrid, Vec<f64>, Vec<u8>)> {
    let bytes = std::fs::read(path).map_err(|e| UsageError(format!("cannot read profile {}: {e}", path.display())))?;
    let (r, u) = read_table(&bytes).with_context(|| format!("profile {}", path.display()))?;
    if r.len() < 3 {
        return Err(UsageError(format!("profile {} has fewer than 3 nodes", path.display())).into());
    }
    let h = r[0];
    let consistent = r
        .iter()
        .enumerate()
        .all(|(i, &x)| (x - (i + 1) as f64 * h).abs() <= 1e-9 * x.max(1.0));
    let positive_step = h.is_finite() && h > 0.0;
    if !positive_step || !consistent {
        return Err(UsageError(format!(
            "profile {} is not on a uniform radial grid r_i = i h",
            path.display()
        ))
        .into());
    }
    let grid = RadialGrid::new(dim, (r.len() + 1) as f64 * h, r.len())?;
    Ok((grid, u, bytes))
}

pub fn verify(
    cfg: &LoadedConfig,
    out: &mut OutputDir,
    profile: Option<PathBuf>,
    inputs: &mut Vec<(PathBuf, Vec<u8>)>,
) -> Result<Verdict> {
    let path = profile.unwrap_or_else(|| out.path("profile.csv"));
    let (grid, u, bytes) = read_profile(&path, cfg.config.dimension)?;
    inputs.push((path, bytes));
    let lambda = cfg.lambda()?;
    let v = cfg.potential();
    let f = cfg.absorption();

    let decay = decay_exponent(&grid, &u);
    let refused = match &decay {
        Err(CoreError::NonPositiveWindow) => {
            Some("decay check refused: profile is not positive on the fit window".to_string())
        }
        Err(e) => return Err(e.clone().into()),
        Ok(_) => None,
    };
    let norm_report = norms(&grid, &u, v, &f)?;
    let flux = boundary_flux(&grid, &u)?;
    let energy = energy_balance(&grid, &u, v, &f, lambda)?;
    let newton = newtonian_potential(&grid, &u, v)?;
    let mut failures = Vec::new();
    let comparison = match newtonian_comparison(&grid, &u, v, lambda) {
        Ok(c) => {
            if !c.holds {
                failures.push(format!("Newtonian comparison fails (margin {:.3e})", c.min_margin));
            }
            json!(c)
        }
        Err(CoreError::NonPositiveWindow) => json!({ "refused": "Newtonian potential vanishes on the window" }),
        Err(e) => return Err(e.into()),
    };
    out.json(
        "verify.json",
        &json!({
            "lambda": lambda,
            "radius": grid.radius(),
            "nodes": grid.len(),
            "decay": match &decay { Ok(d) => json!(d), Err(_) => json!({ "refused": refused }) },
            "norms": norm_report,
            "boundary_flux": flux,
            "energy_balance": energy,
            "newtonian": {
                "residual": newton.residual,
                "boundary_value": newton.boundary_value,
                "tail_bound": newton.tail_bound,
            },
            "newtonian_comparison": comparison,
        }),
    )?;
    let r = grid.nodes();
    out.csv(
        "newtonian.csv",
        &["r", "v"],
        r.iter().zip(&newton.values).map(|(&r, &x)| vec![r.into(), x.into()]),
    )?;
    out.dat(
        "verify.dat",
        &["r", "u", "v"],
        r.iter().zip(&u).zip(&newton.values).map(|((&r, &a), &b)| vec![r, a, b]),
    )?;
    out.gnuplot(
        "verify.gp",
        &Plot::new("Profile and Newtonian potential of V+u", "verify.png", "r", "value")
            .logscale("xy")
            .line("verify.dat", "1:2", "u")
            .line("verify.dat", "1:3", "v"),
    )?;
    match (&decay, refused) {
        (Ok(d), _) => {
            println!(
                "verify: tail slope {:.4} (target {}), energy identity error {:.2e}, flux {:.3e}",
                d.slope, d.target, energy.relative_error, flux
            );
            if !d.pass {
                failures.insert(
                    0,
                    format!("tail slope {:.4} is not within 0.1 of {}", d.slope, d.target),
                );
            }
        }
        (Err(_), Some(msg)) => failures.insert(0, msg),
        (Err(_), None) => unreachable!("decay errors other than refusal return early"),
    }
    Ok(if failures.is_empty() {
        Verdict::Pass
    } else {
        Verdict::Fail(failures.join("; "))
    })
}
