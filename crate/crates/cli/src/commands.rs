use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};

use log::{info, warn};
use serde_json::json;

use offgrid_tv::cheeger::optimality_residual;
use offgrid_tv::geometry::{Point2, SimplePolygon};
use offgrid_tv::grid_solver::{raster_objective, solve_fixed_grid_tv};
use offgrid_tv::io;
use offgrid_tv::operator::{GaussianOperator, Measurements};
use offgrid_tv::phantom::{observe, phantom_function, tau_for_snr};
use offgrid_tv::radial::{
    amplitude_closed_form, disk_ratio, optimal_disk_radius, radial_table, FnProfile, GaussianProfile, RadialProfile,
};
use offgrid_tv::sparse::{cheeger_oracle, frank_wolfe, AtomicFunction};
use offgrid_tv::Error;

use crate::config::{FieldSpec, ProfileSpec, RunConfig};
use crate::{CliError, Context};

fn emit(ctx: &Context, name: &str, write: impl FnOnce(&mut BufWriter<File>) -> offgrid_tv::Result<()>) -> Result<(), CliError> {
    let path = ctx.out_dir.join(name);
    let mut w = BufWriter::new(File::create(&path).map_err(Error::from)?);
    write(&mut w)?;
    w.flush().map_err(Error::from)?;
    info!("wrote {}", path.display());
    Ok(())
}

fn emit_json(ctx: &Context, name: &str, value: &serde_json::Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    emit(ctx, name, |w| Ok(writeln!(w, "{text}")?))
}

struct Observations {
    y: Measurements,
    tau: f64,
}

/// `y = Phi u0 + w` for the configured phantom and noise.
fn observations(cfg: &RunConfig, op: &GaussianOperator, ctx: &Context) -> Result<Observations, CliError> {
    let quad = &cfg.quadrature;
    let u0 = phantom_function(&cfg.phantom)?;
    let tau = match (cfg.noise.tau, cfg.noise.snr_db) {
        (Some(t), _) => t,
        (None, Some(snr)) => tau_for_snr(&op.forward(&u0, quad)?, snr),
        (None, None) => 0.0,
    };
    let seed = match ctx.seed {
        Some(s) => s,
        None if tau > 0.0 => return Err(CliError::config("noise.seed (or --seed) is required when noise is added")),
        None => 0,
    };
    let y = observe(op, &u0, tau, seed, quad)?;
    info!("{} measurements, tau = {tau:.6e}, |y| = {:.6e}", y.len(), y.norm());
    emit(ctx, "phantom.csv", |w| io::write_atoms_csv(w, &u0))?;
    emit(ctx, "measurements.csv", |w| io::write_measurements_csv(w, &y))?;
    Ok(Observations { y, tau })
}

pub fn solve(cfg: &RunConfig, ctx: &Context) -> Result<(), CliError> {
    let op = cfg.operator()?;
    let obs = observations(cfg, &op, ctx)?;
    let lambda = cfg.solver.lambda(op.len(), obs.tau)?;
    info!("lambda = {lambda:.6e}");
    let out = frank_wolfe(&op, &obs.y, &cfg.solver.fw_config(lambda), &cfg.oracle, &cfg.refine, &cfg.quadrature)?;
    info!(
        "stopped by {} after {} iterations: T = {:.9e}, {} atoms",
        out.stop.as_str(),
        out.iterations,
        out.final_objective,
        out.u.len()
    );
    emit_json(ctx, "summary.json", &serde_json::to_value(io::RunSummary::new(lambda, &out)).unwrap())?;
    emit(ctx, "atoms.csv", |w| io::write_atoms_csv(w, &out.u))?;
    emit(ctx, "trace.csv", |w| io::write_fw_trace_csv(w, &out.trace))?;
    let half_width = cfg.operator.map(|o| o.half_width).unwrap_or(1.0);
    let raster = io::rasterize(&out.u, half_width, cfg.raster_n)?;
    emit(ctx, "reconstruction.pgm", |w| io::write_pgm(w, &raster))?;
    emit(ctx, "reconstruction.csv", |w| io::write_grid_csv(w, &raster))
}

pub fn baseline(cfg: &RunConfig, ctx: &Context) -> Result<(), CliError> {
    let op = cfg.operator()?;
    let obs = observations(cfg, &op, ctx)?;
    let lambda = cfg.solver.lambda(op.len(), obs.tau)?;
    let spec = &cfg.baseline;
    let half_width = spec.half_width.or(cfg.operator.map(|o| o.half_width)).unwrap_or(1.0);
    let out = solve_fixed_grid_tv(&op, &obs.y, lambda, half_width, spec.n, &spec.primal_dual)?;
    if !out.converged {
        warn!("fixed-grid solver stopped at max_iters = {}", out.iterations);
    }
    let continuous = raster_objective(&out.u, &op, &obs.y, lambda);
    info!("fixed grid N = {}: discrete T = {:.9e}, continuous T = {continuous:.9e}", spec.n, out.discrete_objective);
    emit_json(
        ctx,
        "baseline.json",
        &json!({
            "lambda": lambda,
            "n": spec.n,
            "half_width": half_width,
            "iterations": out.iterations,
            "converged": out.converged,
            "discrete_objective": out.discrete_objective,
            "continuous_objective": continuous,
        }),
    )?;
    emit(ctx, "baseline.csv", |w| io::write_grid_csv(w, &out.u))?;
    emit(ctx, "baseline.pgm", |w| io::write_pgm(w, &out.u))
}

/// Coefficient of variation of the vertex distances to the vertex centroid.
fn radius_cv(poly: &SimplePolygon, center: Point2) -> f64 {
    let radii: Vec<f64> = poly.vertices().iter().map(|v| v.dist(center)).collect();
    let n = radii.len() as f64;
    let mean = radii.iter().sum::<f64>() / n;
    (radii.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n).sqrt() / mean
}

pub fn cheeger(cfg: &RunConfig, ctx: &Context) -> Result<(), CliError> {
    let spec = cfg.cheeger.as_ref().ok_or_else(|| CliError::config("missing [cheeger] section"))?;
    let (op, coeffs) = match &spec.field {
        FieldSpec::Gaussian { center, sigma } => {
            (GaussianOperator::new(vec![Point2::new(center[0], center[1])], *sigma)?, vec![1.0])
        }
        FieldSpec::Coefficients { values } => (cfg.operator()?, values.clone()),
    };
    let eta = op.dual_field(coeffs)?;
    let half_width = eta.mass_radius(cfg.oracle.mass_fraction)?;
    let result = cheeger_oracle(&eta, half_width, &cfg.oracle, &cfg.refine, &cfg.quadrature)?
        .ok_or(Error::NoContourFound)?;
    if !result.refined {
        warn!("refinement failed; reporting the mesh-stage polygon");
    }
    let residual = match optimality_residual(&result.polygon, &eta, &cfg.quadrature) {
        Ok(r) => Some(r),
        Err(e) => {
            warn!("optimality residual unavailable: {e}");
            None
        }
    };
    let cv = radius_cv(&result.polygon, result.polygon.centroid());
    info!(
        "mesh ratio {:.9}, refined ratio {:.9}, residual {residual:?}, vertex radius CV {cv:.3e}",
        result.mesh_ratio, result.ratio
    );
    emit(ctx, "polygon.csv", |w| io::write_polygons_csv(w, [&result.polygon]))?;
    emit_json(
        ctx,
        "cheeger.json",
        &json!({
            "half_width": half_width,
            "sign": result.sign,
            "mesh_ratio": result.mesh_ratio,
            "refined_ratio": result.ratio,
            "refined": result.refined,
            "optimality_residual": residual,
            "n_vertices": result.polygon.len(),
            "perimeter": result.polygon.perimeter(),
            "area": result.polygon.area(),
            "vertex_radius_cv": cv,
        }),
    )
}

pub fn radial(cfg: &RunConfig, ctx: &Context) -> Result<(), CliError> {
    let spec = cfg.radial.as_ref().ok_or_else(|| CliError::config("missing [radial] section"))?;
    let positive = |v: f64, what: &str| {
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(CliError::config(format!("{what} must be positive, got {v}")))
        }
    };
    let profile: Box<dyn RadialProfile> = match spec.profile {
        ProfileSpec::Gaussian { sigma } => Box::new(GaussianProfile { sigma: positive(sigma, "sigma")? }),
        ProfileSpec::Rational { scale, power } => {
            let scale = positive(scale, "scale")?;
            Box::new(FnProfile { g: move |r: f64| (1.0 + (r / scale).powi(2)).powf(-power), scale })
        }
    };
    if spec.ns.iter().any(|&n| n < 3) {
        return Err(CliError::config("radial.ns entries must be at least 3"));
    }
    let r_star = optimal_disk_radius(profile.as_ref())?;
    let rows = radial_table(profile.as_ref(), &spec.ns)?;
    info!("R* = {r_star:.10}");
    let mut orders = Vec::new();
    for w in rows.windows(2) {
        if w[1].n == 2 * w[0].n && w[1].abs_err_vs_r_star > 0.0 {
            let order = (w[0].abs_err_vs_r_star / w[1].abs_err_vs_r_star).log2();
            info!("|R_n* - R*| order between n = {} and {}: {order:.3}", w[0].n, w[1].n);
            orders.push(json!({"n": w[0].n, "order": order}));
        }
    }
    emit(ctx, "radial_table.csv", |w| io::write_radial_table_csv(w, &rows))?;

    let pipeline = match (spec.pipeline, spec.profile) {
        (None, _) => serde_json::Value::Null,
        (Some(p), ProfileSpec::Gaussian { sigma }) => {
            let op = GaussianOperator::new(vec![Point2::ZERO], sigma)?;
            let y = Measurements::new(vec![p.y]);
            let fw = cfg.solver.fw_config(positive(p.lambda, "pipeline lambda")?);
            let out = frank_wolfe(&op, &y, &fw, &cfg.oracle, &cfg.refine, &cfg.quadrature)?;
            // the optimal disk carries 2 pi R* G(R*) of the kernel mass
            let mass = 2.0 * PI * r_star * disk_ratio(profile.as_ref(), r_star);
            let a_star = amplitude_closed_form(p.y, p.lambda, mass, 2.0 * PI * r_star);
            emit(ctx, "atoms.csv", |w| io::write_atoms_csv(w, &out.u))?;
            pipeline_report(&out.u, a_star, r_star)
        }
        (Some(_), ProfileSpec::Rational { .. }) => {
            return Err(CliError::config("radial.pipeline needs a Gaussian profile"));
        }
    };
    emit_json(
        ctx,
        "radial.json",
        &json!({
            "r_star": r_star,
            "g_r_star": disk_ratio(profile.as_ref(), r_star),
            "rows": rows.iter().map(|r| json!({
                "n": r.n,
                "r_star_n": r.r_star_n,
                "g_n_at_r_star_n": r.g_n_at_r_star_n,
                "abs_err_vs_r_star": r.abs_err_vs_r_star,
            })).collect::<Vec<_>>(),
            "empirical_orders": orders,
            "pipeline": pipeline,
        }),
    )
}

fn pipeline_report(u: &AtomicFunction, a_star: f64, r_star: f64) -> serde_json::Value {
    let Some(atom) = u.atoms().first() else {
        info!("pipeline returned u = 0 (closed-form amplitude {a_star:.9})");
        return json!({"n_atoms": 0, "amplitude_closed_form": a_star});
    };
    let vs = atom.support.vertices();
    let mean_r = vs.iter().map(|v| v.norm()).sum::<f64>() / vs.len() as f64;
    let amp_err = (atom.amplitude - a_star).abs() / a_star.abs();
    let radius_err = (mean_r - r_star).abs() / r_star;
    info!("pipeline: {} atoms, amplitude relative error {amp_err:.3e}, radius relative error {radius_err:.3e}", u.len());
    json!({
        "n_atoms": u.len(),
        "amplitude": atom.amplitude,
        "amplitude_closed_form": a_star,
        "amplitude_rel_err": amp_err,
        "mean_vertex_radius": mean_r,
        "radius_rel_err": radius_err,
    })
}
