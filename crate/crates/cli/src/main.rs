//! Command-line front end: traces, sweeps, interval exchange reductions,
//! level-surface reports, exceptional-set depth maps, tree and foliation
//! experiments. All randomness is seeded; identical configs give
//! byte-identical outputs.

mod render;
mod scene;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use render::SvgBuilder;
use scene::{build_shape, load_scene_file, parse_degrees_list, NumberList, Scene, ShapeDesc};
use serde_json::{json, Value};
use std::path::PathBuf;
use std::process::ExitCode;
use tiling_billiards::analysis::{
    self, parameter_sweep, AnalysisError, ShapeFamily, SimplexPoint, SweepConfig,
};
use tiling_billiards::billiard::{
    parallel_foliation, start_on_chord, trace, TraceOptions, TrajectoryRecord, TrajectoryStatus,
};
use tiling_billiards::geom::{contains_circumcenter, CenterLocation};
use tiling_billiards::helicoid::{
    check_symmetries, euler_genus, period_lattice, rectify, saddles, HelicoidError, HelicoidModel,
};
use tiling_billiards::iet::{first_return_iet, tau_max, IetWithFlips};
use tiling_billiards::{Point2, Rect, Tiling, Vec2};

const EXIT_SINGULAR: u8 = 3;

#[derive(Parser)]
#[command(
    name = "tiling-billiards",
    about = "Refractive billiards in periodic triangle and cyclic-quadrilateral tilings",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ShapeArgs {
    /// Triangle angles in degrees, e.g. 70,60,50
    #[arg(long, value_parser = parse_degrees_list)]
    triangle: Option<NumberList>,
    /// Cyclic quadrilateral circle positions in degrees, counterclockwise,
    /// e.g. -120,-30,60,160
    #[arg(long, value_parser = parse_degrees_list)]
    quad: Option<NumberList>,
    /// JSON config file; flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file for the JSON report (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Trace one trajectory and classify it
    Trace {
        #[command(flatten)]
        shape: ShapeArgs,
        /// Energy of the start chord
        #[arg(long, allow_hyphen_values = true)]
        tau: Option<f64>,
        /// Reference angle of the start chord, degrees
        #[arg(long, allow_hyphen_values = true)]
        theta: Option<f64>,
        /// Explicit start point x,y (overrides tau/theta)
        #[arg(long, value_parser = parse_degrees_list)]
        start: Option<NumberList>,
        /// Start direction in degrees (with --start)
        #[arg(long, allow_hyphen_values = true)]
        dir: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        /// Cap on crossings embedded in the JSON report
        #[arg(long, default_value_t = 10_000)]
        max_crossings: usize,
        /// Also draw the tiling patch and trajectory
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Exit with code 3 when the trajectory hits a vertex
        #[arg(long)]
        strict: bool,
    },
    /// Classify trajectories across random shapes, starts and energies
    Sweep {
        /// triangle or quad
        #[arg(long, default_value = "triangle")]
        family: String,
        #[arg(long, default_value_t = 100)]
        shapes: usize,
        #[arg(long, default_value_t = 10)]
        starts: usize,
        #[arg(long, default_value_t = 1_000_000)]
        steps: usize,
        #[arg(long, default_value_t = 1e-3)]
        tau_min: f64,
        #[arg(long, default_value_t = 0.7)]
        tau_max: f64,
        /// Restrict to circumcenter-containing shapes
        #[arg(long)]
        containing_only: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// First-return interval exchange with flips at a fixed energy
    Iet {
        #[command(flatten)]
        shape: ShapeArgs,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.1)]
        tau: f64,
    },
    /// Period lattice, rectifying map, saddles, genus and symmetries
    Helicoid {
        #[command(flatten)]
        shape: ShapeArgs,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        tau: f64,
        /// On-surface samples for the symmetry report
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Depth map of the subtractive simplex algorithm
    Gasket {
        #[arg(long, default_value_t = 256)]
        grid: usize,
        #[arg(long, default_value_t = 30)]
        depth: usize,
        /// Write the depth map as a binary PGM here
        #[arg(long)]
        pgm: Option<PathBuf>,
        /// Embed the raster rows in the JSON report
        #[arg(long)]
        json_grid: bool,
        /// Monte-Carlo samples for the survivor-fraction estimate
        #[arg(long, default_value_t = 20_000)]
        mc_samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Tree property of sampled periodic orbits
    Treecheck {
        #[command(flatten)]
        shape: ShapeArgs,
        #[arg(long, default_value_t = 100)]
        orbits: usize,
        #[arg(long, default_value_t = 200_000)]
        steps: usize,
        #[arg(long, default_value_t = 0.02)]
        tau_min: f64,
        #[arg(long, default_value_t = 0.6)]
        tau_max: f64,
    },
    /// Parallel foliation of one reference angle inside a window
    Foliation {
        #[command(flatten)]
        shape: ShapeArgs,
        /// Reference angle in degrees
        #[arg(long, allow_hyphen_values = true, default_value_t = 20.0)]
        theta: f64,
        #[arg(long, default_value_t = 24)]
        leaves: usize,
        /// Half-width of the square window around the origin
        #[arg(long, default_value_t = 2.5)]
        window: f64,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("TILING_BILLIARDS_THREADS") {
        if let Ok(n) = threads.trim().parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn resolve_scene(args: &ShapeArgs) -> Result<Scene> {
    let file = load_scene_file(args.config.as_deref())?;
    let triangle = args.triangle.clone().map(|l| l.0).or(file.triangle);
    let quad = args.quad.clone().map(|l| l.0).or(file.quad);
    let (poly, desc) = build_shape(triangle.as_deref(), quad.as_deref())?;
    Ok(Scene {
        tiling: Tiling::new(poly),
        shape_desc: desc,
        tau: file.tau,
        theta: file.theta,
        start: file.start,
        dir: file.dir,
        steps: file.steps,
        seed: if args.seed != 0 {
            args.seed
        } else {
            file.seed.unwrap_or(0)
        },
    })
}

fn emit(out: Option<&PathBuf>, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => std::fs::write(p, text + "\n")
            .with_context(|| format!("cannot write {}", p.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn shape_json(desc: &ShapeDesc) -> Value {
    match desc {
        ShapeDesc::Triangle(a) => json!({"triangle_deg": a}),
        ShapeDesc::Quad(p) => json!({"quad_positions_deg": p}),
    }
}

fn status_json(s: &TrajectoryStatus) -> Value {
    match s {
        TrajectoryStatus::Periodic { period } => json!({"type": "periodic", "period": period}),
        TrajectoryStatus::LinearEscape { period, drift } => json!({
            "type": "linear_escape",
            "period": period,
            "drift": [drift.x, drift.y],
        }),
        TrajectoryStatus::NonLinearCandidate => json!({"type": "nonlinear_candidate"}),
        TrajectoryStatus::Unresolved => json!({"type": "unresolved"}),
        TrajectoryStatus::SingularHit { vertex, step } => json!({
            "type": "singular_hit",
            "vertex": [vertex.x, vertex.y],
            "step": step,
        }),
    }
}

fn iet_json(iet: &IetWithFlips) -> Value {
    json!({
        "intervals": iet.len(),
        "breakpoints": iet.breakpoints,
        "lengths": (0..iet.len()).map(|i| iet.interval_length(i)).collect::<Vec<_>>(),
        "flips": iet.maps.iter().map(|m| m.flip).collect::<Vec<_>>(),
        "offsets": iet.maps.iter().map(|m| m.offset).collect::<Vec<_>>(),
        "exit_sides": iet.maps.iter().map(|m| m.label).collect::<Vec<_>>(),
        "permutation": iet.permutation(),
        "bijectivity_defect": iet.bijectivity_defect(),
    })
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Trace {
            shape,
            tau,
            theta,
            start,
            dir,
            steps,
            max_crossings,
            svg,
            strict,
        } => {
            let scene = resolve_scene(&shape)?;
            let t = &scene.tiling;
            let steps = steps.or(scene.steps).unwrap_or(10_000);
            let (p0, d0) = resolve_start(&scene, tau, theta, start, dir)?;
            let opts = TraceOptions {
                max_steps: steps,
                store_crossings: max_crossings.max(1),
                ..Default::default()
            };
            let rec = trace(t, p0, d0, &opts).map_err(|e| anyhow!("trace failed: {e}"))?;
            if let Some(path) = &svg {
                std::fs::write(path, trace_svg(t, &rec))
                    .with_context(|| format!("cannot write {}", path.display()))?;
            }
            let crossings: Vec<Value> = rec
                .crossings
                .iter()
                .take(max_crossings)
                .map(|c| {
                    json!({
                        "tile": [c.tile.m, c.tile.n, format!("{:?}", c.tile.color)],
                        "side": c.side,
                        "point": [c.point.x, c.point.y],
                        "direction": [c.direction.x, c.direction.y],
                        "s": c.s,
                    })
                })
                .collect();
            let singular = matches!(rec.status, TrajectoryStatus::SingularHit { .. });
            let report = json!({
                "schema": "tiling-billiards/trace/v1",
                "shape": shape_json(&scene.shape_desc),
                "start": {"point": [rec.start_point.x, rec.start_point.y],
                           "direction": [rec.start_dir.x, rec.start_dir.y]},
                "status": status_json(&rec.status),
                "steps": rec.steps,
                "tau": rec.tau,
                "tau_dispersion": rec.tau_dispersion,
                "theta": rec.theta,
                "crossings": crossings,
                "crossings_complete": rec.crossings_complete,
            });
            emit(shape.out.as_ref(), &report)?;
            if strict && singular {
                return Ok(ExitCode::from(EXIT_SINGULAR));
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Sweep {
            family,
            shapes,
            starts,
            steps,
            tau_min,
            tau_max,
            containing_only,
            out,
            seed,
        } => {
            let family = match family.as_str() {
                "triangle" => ShapeFamily::Triangle,
                "quad" => ShapeFamily::CyclicQuad,
                other => bail!("unknown family {other:?}; use triangle or quad"),
            };
            let cfg = SweepConfig {
                family,
                shapes,
                starts_per_shape: starts,
                max_steps: steps,
                seed,
                tau_min,
                tau_max,
                containing_only,
            };
            let table = parameter_sweep(&cfg);
            let report = json!({
                "schema": "tiling-billiards/sweep/v1",
                "table": table,
            });
            emit(out.as_ref(), &report)?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Iet { shape, tau } => {
            let scene = resolve_scene(&shape)?;
            let tau = scene.tau.unwrap_or(tau);
            let poly = scene.tiling.base();
            let (f, t_map) =
                first_return_iet(poly, tau).map_err(|e| anyhow!("no reduction: {e}"))?;
            let report = json!({
                "schema": "tiling-billiards/iet/v1",
                "shape": shape_json(&scene.shape_desc),
                "tau": tau,
                "tau_max": tau_max(poly),
                "step_map": iet_json(&f),
                "first_return": iet_json(&t_map),
            });
            emit(shape.out.as_ref(), &report)?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Helicoid { shape, tau, samples } => {
            let scene = resolve_scene(&shape)?;
            let t = &scene.tiling;
            let tau = scene.tau.unwrap_or(tau);
            let (w1, w2, w3) = period_lattice(t);
            let rect = rectify(t).map_err(|e| anyhow!("{e}"))?;
            let sad = saddles(t, tau);
            let genus = match euler_genus(t, tau) {
                Ok((chi, g)) => json!({"chi": chi, "genus": g}),
                Err(HelicoidError::NonZeroTau) => {
                    json!({"chi": null, "genus": null, "note": "genus is computed at tau = 0 only"})
                }
                Err(e) => json!({"chi": null, "genus": null, "note": format!("{e}")}),
            };
            let model = HelicoidModel::new(t.clone(), tau);
            let sym = check_symmetries(&model, samples, scene.seed.wrapping_add(1));
            let report = json!({
                "schema": "tiling-billiards/helicoid/v1",
                "shape": shape_json(&scene.shape_desc),
                "tau": tau,
                "contains_circumcenter": contains_circumcenter(t.base()) == CenterLocation::Inside,
                "periods": [
                    {"shift": [w1.shift.x, w1.shift.y], "angle": w1.angle},
                    {"shift": [w2.shift.x, w2.shift.y], "angle": w2.angle},
                    {"shift": [w3.shift.x, w3.shift.y], "angle": w3.angle},
                ],
                "rectify": {"matrix": rect.matrix, "covector": rect.covector, "det": rect.det},
                "saddles": sad,
                "topology": genus,
                "symmetries": sym,
            });
            emit(shape.out.as_ref(), &report)?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Gasket {
            grid,
            depth,
            pgm,
            json_grid,
            mc_samples,
            out,
            seed,
        } => {
            if grid < 2 || depth == 0 {
                bail!("grid and depth must be positive");
            }
            let raster = analysis::gasket_grid(grid, depth);
            if let Some(path) = &pgm {
                render::write_pgm(path, grid, grid, &raster)
                    .with_context(|| format!("cannot write {}", path.display()))?;
            }
            let full: usize = raster.iter().filter(|&&v| v == 255).count();
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut survivors = 0usize;
            for _ in 0..mc_samples {
                let x = SimplexPoint::project([rng.gen(), rng.gen(), rng.gen()]).unwrap();
                if analysis::gasket_depth(&x, depth) == depth {
                    survivors += 1;
                }
            }
            let mut report = json!({
                "schema": "tiling-billiards/gasket/v1",
                "grid": grid,
                "depth": depth,
                "full_depth_pixels": full,
                "mc_samples": mc_samples,
                "mc_survivors": survivors,
                "mc_survivor_fraction": survivors as f64 / mc_samples.max(1) as f64,
            });
            if json_grid {
                let rows: Vec<Vec<u8>> = raster.chunks(grid).map(|r| r.to_vec()).collect();
                report["rows"] = json!(rows);
            }
            emit(out.as_ref(), &report)?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Treecheck {
            shape,
            orbits,
            steps,
            tau_min,
            tau_max,
        } => {
            let scene = resolve_scene(&shape)?;
            let t = &scene.tiling;
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(scene.seed);
            let mut found = 0usize;
            let mut failures: Vec<Value> = Vec::new();
            let mut max_vertices = 0usize;
            let mut attempts = 0usize;
            while found < orbits && attempts < orbits * 50 {
                attempts += 1;
                let mag = rng.gen_range(tau_min..tau_max);
                let tau = if rng.gen::<bool>() { mag } else { -mag };
                let theta = rng.gen_range(0.0..std::f64::consts::TAU);
                let along = rng.gen_range(0.1..0.9);
                let Some((p, d)) = start_on_chord(t, tau, theta, along) else {
                    continue;
                };
                let rec = match trace(t, p, d, &TraceOptions::with_max_steps(steps)) {
                    Ok(r) => r,
                    Err(_) => continue,
                };
                if !rec.is_periodic() {
                    continue;
                }
                found += 1;
                match analysis::tree_check(t, &rec) {
                    Ok(check) => {
                        max_vertices = max_vertices.max(check.enclosed_vertices);
                        if !check.is_tree || check.enclosed_tiles > 0 {
                            failures.push(json!({
                                "tau": rec.tau,
                                "theta": rec.theta,
                                "check": check,
                            }));
                        }
                    }
                    Err(AnalysisError::SelfIntersecting) => {
                        failures.push(json!({
                            "tau": rec.tau, "theta": rec.theta,
                            "check": "self-intersecting polyline",
                        }));
                    }
                    Err(e) => bail!("tree check failed: {e}"),
                }
            }
            let report = json!({
                "schema": "tiling-billiards/treecheck/v1",
                "shape": shape_json(&scene.shape_desc),
                "orbits_checked": found,
                "all_tree": failures.is_empty(),
                "max_enclosed_vertices": max_vertices,
                "failures": failures,
            });
            emit(shape.out.as_ref(), &report)?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Foliation {
            shape,
            theta,
            leaves,
            window,
            svg,
        } => {
            let scene = resolve_scene(&shape)?;
            let t = &scene.tiling;
            let theta = scene.theta.unwrap_or(theta).to_radians();
            let region = Rect::new(
                Point2::new(-window, -window),
                Point2::new(window, window),
            );
            let fol = parallel_foliation(t, theta, region, leaves)
                .map_err(|e| anyhow!("foliation failed: {e}"))?;
            if let Some(path) = &svg {
                let mut b = SvgBuilder::new();
                b.tiling_patch(t, region);
                for leaf in &fol.leaves {
                    let color = if leaf.singular { "#d62728" } else { "#1f77b4" };
                    b.polyline(&leaf.polyline, color, if leaf.singular { 0.02 } else { 0.012 });
                    if let Some(v) = leaf.through_vertex {
                        b.circle(v, 0.03, "#d62728");
                    }
                }
                std::fs::write(path, b.finish())
                    .with_context(|| format!("cannot write {}", path.display()))?;
            }
            let report = json!({
                "schema": "tiling-billiards/foliation/v1",
                "shape": shape_json(&scene.shape_desc),
                "theta": fol.theta,
                "leaves": fol.leaves.len(),
                "singular_leaves": fol.leaves.iter().filter(|l| l.singular).count(),
                "taus": fol.leaves.iter().map(|l| l.tau).collect::<Vec<_>>(),
            });
            emit(shape.out.as_ref(), &report)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn resolve_start(
    scene: &Scene,
    tau: Option<f64>,
    theta: Option<f64>,
    start: Option<NumberList>,
    dir: Option<f64>,
) -> Result<(Point2, Vec2)> {
    let start = match start.map(|l| l.0) {
        Some(v) if v.len() == 2 => Some([v[0], v[1]]),
        Some(_) => bail!("--start needs x,y"),
        None => scene.start,
    };
    if let Some([x, y]) = start {
        let dir = dir
            .or(scene.dir)
            .ok_or_else(|| anyhow!("--dir is required with --start"))?;
        return Ok((Point2::new(x, y), Vec2::from_angle(dir.to_radians())));
    }
    let tau = tau
        .or(scene.tau)
        .ok_or_else(|| anyhow!("either --tau or --start/--dir is required"))?;
    if let Some(th) = theta.or(scene.theta) {
        return start_on_chord(&scene.tiling, tau, th.to_radians(), 0.5)
            .ok_or_else(|| anyhow!("the energy-{tau} chord at that angle misses the base tile"));
    }
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(scene.seed);
    analysis::start_at_energy(&scene.tiling, tau, &mut rng)
        .ok_or_else(|| anyhow!("no start found at energy {tau}"))
}

fn trace_svg(t: &Tiling, rec: &TrajectoryRecord) -> String {
    let mut pts: Vec<Point2> = vec![rec.start_point];
    pts.extend(rec.crossings.iter().take(20_000).map(|c| c.point));
    let mut lo = rec.start_point;
    let mut hi = rec.start_point;
    for p in &pts {
        lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let window = Rect::new(lo, hi).expanded(1.0);
    let mut b = SvgBuilder::new();
    b.tiling_patch(t, window);
    let color = match rec.status {
        TrajectoryStatus::Periodic { .. } => "#1f77b4",
        TrajectoryStatus::LinearEscape { .. } => "#d62728",
        TrajectoryStatus::NonLinearCandidate => "#9467bd",
        TrajectoryStatus::Unresolved => "#7f7f7f",
        TrajectoryStatus::SingularHit { .. } => "#ff7f0e",
    };
    if rec.is_periodic() {
        if let Some(mut cycle) = rec.period_polyline() {
            cycle.push(cycle[0]);
            b.polyline(&cycle, color, 0.02);
        } else {
            b.polyline(&pts, color, 0.02);
        }
    } else {
        b.polyline(&pts, color, 0.02);
    }
    b.circle(rec.start_point, 0.03, "#2ca02c");
    b.finish()
}
