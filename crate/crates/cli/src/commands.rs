//! One pipeline per subcommand. Each writes its files into the output
//! directory and returns the list of paths.

use std::f64::consts::PI;
use std::path::PathBuf;

use dynbc_core::carleman::LHS_TERM_NAMES;
use dynbc_core::dynamics::regularity_ratios;
use dynbc_core::operators::Block;
use dynbc_core::{
    assemble_operator, build_eta, build_mesh, carleman_sweep, cost_ratio_study, observability_constant, s_min,
    solve_forward, solve_hum, verify_eta, CarlemanWeights, CgSettings, CostSettings, CoupledField, EtaBump, EtaField,
    HumProblem, Mesh, PowerSettings, SampleRng, SourceSeries, SweepSettings, TimeGrid, Trajectory, WentzellOperator,
};
use nalgebra::DVector;
use serde::Serialize;
use serde_json::json;

use crate::config::{Format, InitialData, RunConfig, SourceData};
use crate::error::CliError;
use crate::report::{num, LinePlot, Meta, Series, Writer};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    MeshInfo,
    VerifyEta,
    Simulate,
    Hum,
    Observability,
    CarlemanSweep,
    Regularity,
    CostStudy,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::MeshInfo => "mesh-info",
            Command::VerifyEta => "verify-eta",
            Command::Simulate => "simulate",
            Command::Hum => "hum",
            Command::Observability => "observability",
            Command::CarlemanSweep => "carleman-sweep",
            Command::Regularity => "regularity",
            Command::CostStudy => "cost-study",
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Outcome {
    pub command: &'static str,
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
}

struct Out<'a> {
    cfg: &'a RunConfig,
    w: Writer,
}

impl Out<'_> {
    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        if self.cfg.wants(Format::Csv) {
            self.w.csv(name, header, rows)?;
        }
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, data: &T) -> Result<(), CliError> {
        if self.cfg.wants(Format::Json) {
            self.w.json(name, data)?;
        }
        Ok(())
    }

    fn svg(&mut self, name: &str, plot: LinePlot) -> Result<(), CliError> {
        if self.cfg.wants(Format::Svg) {
            self.w.svg(name, &plot)?;
        }
        Ok(())
    }
}

pub fn run(cmd: Command, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let meta = Meta::new(cmd.name(), cfg);
    let mut out = Out {
        cfg,
        w: Writer::new(&cfg.out_dir, meta)?,
    };
    match cmd {
        Command::MeshInfo => mesh_info(cfg, &mut out)?,
        Command::VerifyEta => verify(cfg, &mut out)?,
        Command::Simulate => simulate(cfg, &mut out)?,
        Command::Hum => hum(cfg, &mut out)?,
        Command::Observability => observability(cfg, &mut out)?,
        Command::CarlemanSweep => carleman(cfg, &mut out)?,
        Command::Regularity => regularity(cfg, &mut out)?,
        Command::CostStudy => cost(cfg, &mut out)?,
    }
    Ok(Outcome {
        command: cmd.name(),
        out_dir: cfg.out_dir.clone(),
        files: out.w.written().to_vec(),
    })
}

fn operator(cfg: &RunConfig) -> Result<WentzellOperator, CliError> {
    let mesh = build_mesh(&cfg.domain).map_err(CliError::core("mesh construction"))?;
    assemble_operator(&mesh, cfg.d, cfg.delta).map_err(CliError::core("operator assembly"))
}

fn grid(cfg: &RunConfig, t_final: f64) -> Result<TimeGrid, CliError> {
    TimeGrid::new(t_final, cfg.steps, cfg.scheme).map_err(CliError::core("time grid"))
}

fn eta(mesh: &Mesh) -> Result<EtaField, CliError> {
    build_eta(mesh, &EtaBump::default()).map_err(CliError::core("eta construction"))
}

fn mesh_descriptor(mesh: &Mesh) -> serde_json::Value {
    json!({
        "spec": mesh.spec(),
        "nodes": mesh.node_count(),
        "boundary_nodes": mesh.boundary_count(),
        "gamma_nodes": mesh.gamma_mask().iter().filter(|b| **b).count(),
        "gamma0_nodes": mesh.gamma0_mask().iter().filter(|b| **b).count(),
    })
}

fn node_rows(op: &WentzellOperator, eta: &EtaField) -> Vec<Vec<String>> {
    let mesh = op.mesh();
    (0..mesh.node_count())
        .map(|i| {
            let slot = mesh.boundary_slot(i);
            let flag = |mask: &[bool]| slot.map(|s| mask[s]).unwrap_or(false).to_string();
            vec![
                i.to_string(),
                num(mesh.coords()[i][0]),
                num(mesh.coords()[i][1]),
                slot.is_some().to_string(),
                flag(mesh.gamma_mask()),
                flag(mesh.gamma0_mask()),
                num(op.mass()[i]),
                num(eta.values[i]),
            ]
        })
        .collect()
}

const NODE_HEADER: [&str; 8] = ["index", "x", "y", "is_boundary", "in_gamma", "in_gamma0", "w", "eta"];

fn mesh_info(cfg: &RunConfig, out: &mut Out) -> Result<(), CliError> {
    let op = operator(cfg)?;
    let mesh = op.mesh();
    let eta = eta(mesh)?;
    out.csv("mesh.csv", &NODE_HEADER, &node_rows(&op, &eta))?;
    for block in Block::ALL {
        let rows: Vec<Vec<String>> = op
            .block_triplets(block)
            .into_iter()
            .map(|(r, c, v)| vec![r.to_string(), c.to_string(), num(v)])
            .collect();
        out.csv(
            &format!("operator_{}.csv", block.name()),
            &["row", "col", "value"],
            &rows,
        )?;
    }
    let (mu, _) = op.first_nonconstant_mode().map_err(CliError::core("spectral gap"))?;
    out.json(
        "mesh.json",
        &json!({
            "mesh": mesh_descriptor(mesh),
            "volume": mesh.volume(),
            "boundary_measure": mesh.boundary_measure(),
            "d": op.d(),
            "delta": op.delta(),
            "symmetry_defect": op.symmetry_defect(),
            "stiffness_norm_inf": op.stiffness_norm_inf(),
            "spectral_gap": mu,
        }),
    )
}

fn verify(cfg: &RunConfig, out: &mut Out) -> Result<(), CliError> {
    let op = operator(cfg)?;
    let eta = eta(op.mesh())?;
    let report = verify_eta(&eta, op.mesh(), cfg.eta_tol);
    out.csv("eta.csv", &NODE_HEADER, &node_rows(&op, &eta))?;
    out.json("eta_report.json", &report)
}

fn initial_data(cfg: &RunConfig, mesh: &Mesh, rng: &mut SampleRng) -> CoupledField {
    let nodal = match cfg.initial {
        InitialData::Zero => DVector::zeros(mesh.node_count()),
        InitialData::Random => rng.vector(mesh.node_count()),
        InitialData::Cosine => {
            let scale = match mesh.spec() {
                dynbc_core::DomainSpec::Interval { length, .. } => *length,
                dynbc_core::DomainSpec::Disk { radius, .. } => *radius,
            };
            DVector::from_iterator(
                mesh.node_count(),
                mesh.coords().iter().map(|c| (PI * c[0] / scale).cos()),
            )
        }
    };
    CoupledField::from_nodal(mesh, nodal)
}

fn source_data(cfg: &RunConfig, mesh: &Mesh, grid: &TimeGrid, rng: &mut SampleRng) -> Option<SourceSeries> {
    match cfg.sources {
        SourceData::None => None,
        SourceData::Random => Some(SourceSeries::random_smooth(mesh, grid, rng, false)),
    }
}

fn trajectory_rows(traj: &Trajectory, op: &WentzellOperator, extra: Option<&[f64]>) -> Vec<Vec<String>> {
    let norms = traj.norms(op);
    let masses = traj.masses(op);
    (0..norms.len())
        .map(|k| {
            let mut row = vec![k.to_string(), num(traj.grid.time(k)), num(norms[k]), num(masses[k])];
            if let Some(e) = extra {
                row.push(num(e[k]));
            }
            row
        })
        .collect()
}

fn field_rows(traj: &Trajectory) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (k, y) in traj.states.iter().enumerate() {
        for (i, v) in y.iter().enumerate() {
            rows.push(vec![k.to_string(), num(traj.grid.time(k)), i.to_string(), num(*v)]);
        }
    }
    rows
}

fn simulate(cfg: &RunConfig, out: &mut Out) -> Result<(), CliError> {
    let op = operator(cfg)?;
    let grid = grid(cfg, cfg.t_final)?;
    let mut rng = SampleRng::new(cfg.seed);
    let y0 = initial_data(cfg, op.mesh(), &mut rng);
    let sources = source_data(cfg, op.mesh(), &grid, &mut rng);
    let traj = solve_forward(&op, &grid, &y0, sources.as_ref(), None).map_err(CliError::core("forward solve"))?;
    let norms = traj.norms(&op);
    let masses = traj.masses(&op);
    out.csv(
        "trajectory.csv",
        &["k", "t", "norm", "mass"],
        &trajectory_rows(&traj, &op, None),
    )?;
    if cfg.dump_fields {
        out.csv("fields.csv", &["k", "t", "node", "value"], &field_rows(&traj))?;
    }
    let monotone = norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
    let mass_drift = masses.iter().map(|m| (m - masses[0]).abs()).fold(0.0, f64::max);
    out.json(
        "simulate.json",
        &json!({
            "mesh": mesh_descriptor(op.mesh()),
            "T": grid.t_final(),
            "n_t": grid.steps(),
            "scheme": grid.scheme().name(),
            "initial_norm": norms[0],
            "final_norm": norms[norms.len() - 1],
            "initial_mass": masses[0],
            "max_mass_drift": mass_drift,
            "norm_nonincreasing": monotone,
        }),
    )?;
    out.svg(
        "decay.svg",
        LinePlot {
            title: "State norm".into(),
            x_label: "t".into(),
            y_label: "norm".into(),
            log_y: false,
            series: vec![Series {
                name: "|Y(t)|".into(),
                points: grid.times().into_iter().zip(norms).collect(),
            }],
        },
    )
}

fn cg(cfg: &RunConfig) -> CgSettings {
    CgSettings {
        tol: cfg.cg_tol,
        max_iter: cfg.cg_max_iter,
    }
}

fn hum(cfg: &RunConfig, out: &mut Out) -> Result<(), CliError> {
    let op = operator(cfg)?;
    let mesh = op.mesh();
    let grid = grid(cfg, cfg.t_final)?;
    let mut rng = SampleRng::new(cfg.seed);
    let y0 = initial_data(cfg, mesh, &mut rng);
    let sources = source_data(cfg, mesh, &grid, &mut rng);
    let free = solve_forward(&op, &grid, &y0, sources.as_ref(), None).map_err(CliError::core("forward solve"))?;
    let problem = HumProblem {
        op: &op,
        grid,
        y0,
        sources,
        epsilon: cfg.epsilon,
        cg: cg(cfg),
    };
    let res = solve_hum(&problem).map_err(CliError::core("penalized HUM"))?;

    let active: Vec<(usize, usize)> = mesh
        .boundary_nodes()
        .iter()
        .enumerate()
        .filter(|(slot, _)| mesh.gamma0_mask()[*slot])
        .map(|(slot, &node)| (slot, node))
        .collect();
    let times: Vec<f64> = (0..grid.steps())
        .map(|k| dynbc_core::ControlSeries::time(&grid, k))
        .collect();
    let mut rows = Vec::new();
    for (k, v) in res.control.values.iter().enumerate() {
        for &(slot, node) in &active {
            rows.push(vec![num(times[k]), node.to_string(), num(v[slot])]);
        }
    }
    out.csv("control.csv", &["t", "node", "v"], &rows)?;
    let free_norms = free.norms(&op);
    out.csv(
        "trajectory.csv",
        &["k", "t", "norm", "mass", "uncontrolled_norm"],
        &trajectory_rows(&res.trajectory, &op, Some(&free_norms)),
    )?;
    out.json(
        "hum.json",
        &json!({
            "final_norm": res.final_norm,
            "control_norm": res.control_norm,
            "uncontrolled_norm": res.uncontrolled_norm,
            "iterations": res.iterations,
            "cg_residual": res.cg_residual,
            "converged": res.converged,
            "j_epsilon": res.j_epsilon,
            "penalized_bound_holds": res.penalized_bound_holds(),
            "epsilon": res.epsilon,
            "T": grid.t_final(),
            "n_t": grid.steps(),
            "scheme": grid.scheme().name(),
            "mesh": mesh_descriptor(mesh),
        }),
    )?;
    out.svg(
        "decay.svg",
        LinePlot {
            title: "Controlled and free state norms".into(),
            x_label: "t".into(),
            y_label: "norm".into(),
            log_y: true,
            series: vec![
                Series {
                    name: "controlled".into(),
                    points: grid.times().into_iter().zip(res.trajectory.norms(&op)).collect(),
                },
                Series {
                    name: "uncontrolled".into(),
                    points: grid.times().into_iter().zip(free_norms).collect(),
                },
            ],
        },
    )?;
    let stride = (active.len() / 4).max(1);
    let series = active
        .iter()
        .step_by(stride)
        .take(4)
        .map(|&(slot, node)| Series {
            name: format!("node {node}"),
            points: times
                .iter()
                .zip(&res.control.values)
                .map(|(t, v)| (*t, v[slot]))
                .collect(),
        })
        .collect();
    out.svg(
        "control.svg",
        LinePlot {
            title: "Boundary control".into(),
            x_label: "t".into(),
            y_label: "v".into(),
            log_y: false,
            series,
        },
    )
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn observability(cfg: &RunConfig, out: &mut Out) -> Result<(), CliError> {
    let op = operator(cfg)?;
    let power = PowerSettings {
        tol: cfg.power_tol,
        max_iter: cfg.power_max_iter,
        inner_tol: cfg.inner_tol,
        inner_max_iter: cfg.inner_max_iter,
        seed: cfg.seed,
    };
    let mut reports = Vec::new();
    for &t in &cfg.observability_t {
        let g = grid(cfg, t)?;
        reports.push(observability_constant(&op, &g, &power).map_err(CliError::core("observability"))?);
    }
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                num(r.t_final),
                num(r.k_est),
                r.iterations.to_string(),
                r.converged.to_string(),
                r.singular.to_string(),
            ]
        })
        .collect();
    out.csv(
        "observability.csv",
        &["T", "K_est", "iterations", "converged", "singular"],
        &rows,
    )?;
    let mut sorted: Vec<(f64, f64)> = reports.iter().map(|r| (r.t_final, r.k_est)).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let decreasing = sorted.windows(2).all(|w| w[1].1 < w[0].1);
    let slope = if sorted.len() >= 2 {
        let xs: Vec<f64> = sorted.iter().map(|p| 1.0 / p.0).collect();
        let ys: Vec<f64> = sorted.iter().map(|p| p.1.ln()).collect();
        Some(fit_slope(&xs, &ys))
    } else {
        None
    };
    let summary: Vec<serde_json::Value> = reports
        .iter()
        .map(|r| {
            json!({
                "T": r.t_final,
                "K_est": r.k_est,
                "iterations": r.iterations,
                "converged": r.converged,
                "singular": r.singular,
                "quotients": r.quotients,
            })
        })
        .collect();
    out.json(
        "observability.json",
        &json!({
            "mesh": mesh_descriptor(op.mesh()),
            "n_t": cfg.steps,
            "scheme": cfg.scheme.name(),
            "reports": summary,
            "strictly_decreasing_in_T": decreasing,
            "log_k_vs_inverse_t_slope": slope,
        }),
    )?;
    out.svg(
        "k_est.svg",
        LinePlot {
            title: "Observability constant".into(),
            x_label: "T".into(),
            y_label: "K_est".into(),
            log_y: true,
            series: vec![Series {
                name: "K_est".into(),
                points: sorted,
            }],
        },
    )
}

fn carleman(cfg: &RunConfig, out: &mut Out) -> Result<(), CliError> {
    let op = operator(cfg)?;
    let grid = grid(cfg, cfg.t_final)?;
    let eta = eta(op.mesh())?;
    let s1 = s_min(cfg.t_final, cfg.c_s1);
    let base = CarlemanWeights::new(eta.values.clone(), cfg.lambda, s1, cfg.t_final)
        .map_err(CliError::core("carleman weights"))?;
    let settings = SweepSettings {
        samples: cfg.carleman_samples,
        s_values: cfg.s_multipliers.iter().map(|m| m * s1).collect(),
        lambda_values: vec![cfg.lambda],
        c_s1: cfg.c_s1,
        lambda_1: cfg.lambda,
    };
    let mut rng = SampleRng::new(cfg.seed);
    let sweep = carleman_sweep(&op, &grid, &base, &settings, &mut rng).map_err(CliError::core("carleman sweep"))?;

    let mut header = vec!["s".to_string(), "lambda".into(), "T".into(), "sample".into()];
    header.extend((1..=8).map(|i| format!("lhs_term_{i}")));
    header.extend(["rhs", "ratio", "rhs_matched", "ratio_matched"].map(String::from));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<String>> = sweep
        .reports
        .iter()
        .map(|r| {
            let mut row = vec![num(r.s), num(r.lambda), num(r.t_final), r.sample.to_string()];
            row.extend(r.lhs_terms.iter().map(|v| v.to_sci()));
            row.extend([r.rhs, r.ratio, r.rhs_matched, r.ratio_matched].map(|v| v.to_sci()));
            row
        })
        .collect();
    out.csv("carleman.csv", &header, &rows)?;

    let maxima: Vec<_> = sweep.maxima.iter().filter(|m| m.max_ratio.is_finite()).collect();
    let spread = |f: &dyn Fn(&dynbc_core::carleman::SweepMax) -> f64| {
        let logs: Vec<f64> = maxima.iter().map(|m| f(m)).collect();
        let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
        (hi - lo) / std::f64::consts::LN_10
    };
    out.json(
        "carleman.json",
        &json!({
            "mesh": mesh_descriptor(op.mesh()),
            "T": cfg.t_final,
            "n_t": cfg.steps,
            "lambda": cfg.lambda,
            "c_s1": cfg.c_s1,
            "s1": s1,
            "lhs_terms": LHS_TERM_NAMES,
            "maxima": sweep.maxima,
            "skipped": sweep.skipped,
            "max_ratio_spread_decades": spread(&|m| m.max_ratio.ln()),
            "max_ratio_matched_spread_decades": spread(&|m| m.max_ratio_matched.ln()),
        }),
    )?;
    out.svg(
        "ratio.svg",
        LinePlot {
            title: "Largest LHS/RHS ratio (log10)".into(),
            x_label: "s".into(),
            y_label: "log10 ratio".into(),
            log_y: false,
            series: vec![
                Series {
                    name: "as printed".into(),
                    points: sweep.maxima.iter().map(|m| (m.s, m.max_ratio.log10())).collect(),
                },
                Series {
                    name: "matched weight".into(),
                    points: sweep
                        .maxima
                        .iter()
                        .map(|m| (m.s, m.max_ratio_matched.log10()))
                        .collect(),
                },
            ],
        },
    )
}

fn regularity(cfg: &RunConfig, out: &mut Out) -> Result<(), CliError> {
    let op = operator(cfg)?;
    let mesh = op.mesh();
    let mut rng = SampleRng::new(cfg.seed);
    let mut rows = Vec::new();
    let mut per_t = Vec::new();
    for &t in &cfg.regularity_t {
        let g = grid(cfg, t)?;
        let sources: Vec<SourceSeries> = (0..cfg.regularity_samples)
            .map(|_| SourceSeries::random_smooth(mesh, &g, &mut rng, true))
            .collect();
        let (mut r1, mut r2, mut r3) = (0.0f64, 0.0f64, 0.0f64);
        for (i, f) in sources.iter().enumerate() {
            let r = regularity_ratios(&op, &g, f, true).map_err(CliError::core("regularity ratios"))?;
            r1 = r1.max(r.r1);
            r2 = r2.max(r.r2);
            r3 = r3.max(r.r3.unwrap_or(0.0));
            rows.push(vec![
                num(t),
                i.to_string(),
                num(r.r1),
                num(r.r1_energy),
                num(r.r2),
                r.r3.map(num).unwrap_or_default(),
                num(r.source_norm),
            ]);
        }
        // a source that stays on at the final time must be refused for r3
        let live = SourceSeries::random_smooth(mesh, &g, &mut rng, false);
        let refused = matches!(
            regularity_ratios(&op, &g, &live, true),
            Err(dynbc_core::Error::SourceNotVanishing { .. })
        );
        per_t.push(json!({
            "T": t,
            "max_r1": r1,
            "max_r2": r2,
            "max_r3": r3,
            "nonvanishing_source_refused": refused,
        }));
    }
    out.csv(
        "regularity.csv",
        &["T", "sample", "r1", "r1_energy", "r2", "r3", "source_norm"],
        &rows,
    )?;
    out.json(
        "regularity.json",
        &json!({
            "mesh": mesh_descriptor(mesh),
            "n_t": cfg.steps,
            "samples": cfg.regularity_samples,
            "by_T": per_t,
        }),
    )?;
    let pick = |key: &str| -> Vec<(f64, f64)> {
        per_t
            .iter()
            .map(|v| (v["T"].as_f64().unwrap_or(0.0), v[key].as_f64().unwrap_or(f64::NAN)))
            .collect()
    };
    out.svg(
        "regularity.svg",
        LinePlot {
            title: "Largest regularity ratios".into(),
            x_label: "T".into(),
            y_label: "ratio".into(),
            log_y: false,
            series: vec![
                Series {
                    name: "r1".into(),
                    points: pick("max_r1"),
                },
                Series {
                    name: "r2".into(),
                    points: pick("max_r2"),
                },
                Series {
                    name: "r3".into(),
                    points: pick("max_r3"),
                },
            ],
        },
    )
}

fn cost(cfg: &RunConfig, out: &mut Out) -> Result<(), CliError> {
    let op = operator(cfg)?;
    let grid = grid(cfg, cfg.t_final)?;
    let settings = CostSettings {
        epsilon: cfg.epsilon,
        cg: cg(cfg),
        samples: cfg.cost_samples,
        s: cfg.cost_s,
        scale: cfg.cost_scale,
    };
    let mut rng = SampleRng::new(cfg.seed);
    let report = cost_ratio_study(&op, &grid, &settings, &mut rng).map_err(CliError::core("cost study"))?;
    let rows: Vec<Vec<String>> = report
        .samples
        .iter()
        .map(|s| {
            vec![
                s.sample.to_string(),
                s.ratio.map(num).unwrap_or_default(),
                s.note.clone().unwrap_or_default(),
                num(s.state_x_norm),
                num(s.control_norm),
                num(s.y0_norm),
                num(s.f_z_norm),
                num(s.g_z_norm),
                num(s.final_norm),
                s.iterations.to_string(),
                s.converged.to_string(),
            ]
        })
        .collect();
    out.csv(
        "cost.csv",
        &[
            "sample",
            "ratio",
            "note",
            "state_x_norm",
            "control_norm",
            "y0_norm",
            "f_z_norm",
            "g_z_norm",
            "final_norm",
            "iterations",
            "converged",
        ],
        &rows,
    )?;
    out.json(
        "cost.json",
        &json!({
            "mesh": mesh_descriptor(op.mesh()),
            "T": cfg.t_final,
            "n_t": cfg.steps,
            "report": report,
        }),
    )?;
    out.svg(
        "cost.svg",
        LinePlot {
            title: "Cost ratio per sample".into(),
            x_label: "sample".into(),
            y_label: "ratio".into(),
            log_y: true,
            series: vec![Series {
                name: "ratio".into(),
                points: report
                    .samples
                    .iter()
                    .filter_map(|s| s.ratio.map(|r| (s.sample as f64, r)))
                    .collect(),
            }],
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_a_line() {
        let xs = [1.0, 2.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 1.0).collect();
        assert!((fit_slope(&xs, &ys) - 3.0).abs() < 1e-12);
    }
}
