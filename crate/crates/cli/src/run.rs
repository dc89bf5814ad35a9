use std::path::Path;

use lll_phase::duality::{
    dft_conjugation_check, reflection_mismatch, saddle_transmission, symmetrized_zero_modes, zero_mode_reflection,
};
use lll_phase::dynamics::{classical_compare, node_density, node_velocity, track_nodes};
use lll_phase::fixtures::Model;
use lll_phase::hilbert::{build_hamiltonian, diagonalize, HamiltonianSpec, StateVector, TorusGeometry};
use lll_phase::io::{fmt17, to_json, trajectory_csv, transmission_csv, write_atomic, NodeSetRecord};
use lll_phase::torus::{
    clustered_node_set, clustered_packet, find_nodes, husimi_peak, sum_rule, toroidal_delta, wrapped_coherent_state,
    PhasePoint,
};
use num_complex::Complex64 as C64;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{Command, Format, ModelChoice, RunConfig, StateChoice};
use crate::error::CliError;

/// Result of a successful run.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub summary: String,
    pub artifact: Vec<u8>,
}

/// Execute `cfg`, writing the artifact to `--output` when given.
pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let outcome = dispatch(cfg)?;
    if let Some(path) = &cfg.output {
        write_atomic(path, &outcome.artifact)?;
    }
    Ok(outcome)
}

fn dispatch(cfg: &RunConfig) -> Result<Outcome, CliError> {
    match cfg.command {
        Command::Spectrum => spectrum(cfg),
        Command::Nodes => nodes(cfg),
        Command::Evolve => evolve(cfg),
        Command::Velocity => velocity(cfg),
        Command::Duality => duality(cfg),
        Command::Scatter => scatter(cfg),
        Command::Packet => packet(cfg),
        Command::Classical => classical(cfg),
        Command::Density => density(cfg),
    }
}

fn geometry(cfg: &RunConfig) -> Result<TorusGeometry, CliError> { Ok(TorusGeometry::new(cfg.n, cfg.theta1, cfg.theta2)?) }

fn hamiltonian_spec(cfg: &RunConfig, g: &TorusGeometry) -> Result<HamiltonianSpec, CliError> {
    match (cfg.model, &cfg.samples) {
        (ModelChoice::Named(m), _) => Ok(m.spec(g)),
        (ModelChoice::Custom, Some(path)) => {
            let (eps, v) = read_samples(path, g.n())?;
            Ok(HamiltonianSpec::from_samples("custom", eps, v)?)
        }
        (ModelChoice::Custom, None) => Err(CliError::Usage("--model custom needs --samples".into())),
    }
}

/// Two comma-separated columns `ε(k_m), v(x_j)`, exactly `n` rows, no header.
pub fn read_samples(path: &Path, n: usize) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let input = |m: String| CliError::Input(format!("{}: {m}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| input(e.to_string()))?;
    let (mut eps, mut v) = (Vec::new(), Vec::new());
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| input(e.to_string()))?;
        if rec.len() != 2 {
            return Err(input(format!("row {} has {} columns, expected 2", row + 1, rec.len())));
        }
        let parse = |s: &str| match s.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => Err(input(format!("row {}: {s:?} is not a finite number", row + 1))),
        };
        eps.push(parse(&rec[0])?);
        v.push(parse(&rec[1])?);
    }
    if eps.len() != n {
        return Err(input(format!("{} rows, expected N = {n}", eps.len())));
    }
    Ok((eps, v))
}

fn initial_state(cfg: &RunConfig, g: &TorusGeometry, spec: &HamiltonianSpec) -> Result<StateVector, CliError> {
    let level = |k: usize| -> Result<StateVector, CliError> {
        if k >= g.n() {
            return Err(lll_phase::Error::InvalidArgument(format!("level {k} outside 0..{}", g.n())).into());
        }
        let h = build_hamiltonian(spec, g)?;
        Ok(diagonalize(&h)?.eigenstate(k)?)
    };
    Ok(match cfg.effective_state() {
        StateChoice::Eigen(k) => level(k)?,
        StateChoice::Superpose(i, j) => StateVector::superpose(C64::new(1.0, 0.0), &level(i)?, C64::new(1.0, 0.0), &level(j)?)?,
        StateChoice::Random => StateVector::random(*g, &mut ChaCha8Rng::seed_from_u64(cfg.seed)),
        StateChoice::Packet(x, p) => wrapped_coherent_state(x, p, g)?,
    })
}

fn json<T: Serialize + ?Sized>(v: &T) -> Result<Vec<u8>, CliError> { Ok(to_json(v)?.into_bytes()) }

fn csv_rows(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.into_error()))
}

fn spectrum(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let g = geometry(cfg)?;
    let spec = hamiltonian_spec(cfg, &g)?;
    let e = diagonalize(&build_hamiltonian(&spec, &g)?)?.eigenvalues;
    #[derive(Serialize)]
    struct Record<'a> {
        model: &'a str,
        #[serde(rename = "N")]
        n: usize,
        theta: [f64; 2],
        eigenvalues: &'a [f64],
    }
    let artifact = match cfg.effective_format() {
        Format::Json => {
            json(&Record { model: &spec.label, n: g.n(), theta: [g.theta1(), g.theta2()], eigenvalues: &e })?
        }
        Format::Csv => csv_rows(&["index", "E"], e.iter().enumerate().map(|(i, &x)| vec![i.to_string(), fmt17(x)]))?,
    };
    let summary = format!("spectrum: model={} N={} E_min={} E_max={}", spec.label, g.n(), e[0], e[e.len() - 1]);
    Ok(Outcome { summary, artifact })
}

fn nodes(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let g = geometry(cfg)?;
    let spec = hamiltonian_spec(cfg, &g)?;
    let psi = initial_state(cfg, &g, &spec)?;
    let ns = find_nodes(&psi)?;
    let drift = sum_rule(&ns, &g)?;
    let artifact = match cfg.effective_format() {
        Format::Json => json(&NodeSetRecord::from(&ns))?,
        Format::Csv => csv_rows(
            &["node_index", "x", "p", "residual"],
            ns.nodes.iter().zip(&ns.residuals).enumerate().map(|(i, (p, r))| {
                vec![i.to_string(), fmt17(p.x), fmt17(p.p), fmt17(*r)]
            }),
        )?,
    };
    let summary = format!(
        "nodes: N={} count={} certificate={} max_residual={:e} sum_rule={:e}",
        g.n(),
        ns.len(),
        ns.count_certificate,
        ns.max_residual(),
        drift
    );
    Ok(Outcome { summary, artifact })
}

fn tracked(cfg: &RunConfig) -> Result<(TorusGeometry, lll_phase::dynamics::NodeTrajectory), CliError> {
    let g = geometry(cfg)?;
    let spec = hamiltonian_spec(cfg, &g)?;
    let psi = initial_state(cfg, &g, &spec)?;
    let h = build_hamiltonian(&spec, &g)?;
    Ok((g, track_nodes(&h, &psi, cfg.dt, cfg.steps)?))
}

fn evolve(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (g, traj) = tracked(cfg)?;
    let artifact = match cfg.effective_format() {
        Format::Csv => trajectory_csv(&traj, true)?.into_bytes(),
        Format::Json => {
            #[derive(Serialize)]
            struct Record<'a> {
                times: &'a [f64],
                frames: Vec<NodeSetRecord>,
                matching_cost: &'a [f64],
            }
            json(&Record {
                times: &traj.times,
                frames: traj.frames.iter().map(NodeSetRecord::from).collect(),
                matching_cost: &traj.matching_cost,
            })?
        }
    };
    let summary = format!(
        "evolve: N={} frames={} t_end={} max_excursion={:e} centroid_drift={:e}",
        g.n(),
        traj.frames.len(),
        traj.times.last().copied().unwrap_or(0.0),
        traj.max_excursion(),
        traj.centroid_drift()
    );
    Ok(Outcome { summary, artifact })
}

fn velocity(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let g = geometry(cfg)?;
    let spec = hamiltonian_spec(cfg, &g)?;
    let psi = initial_state(cfg, &g, &spec)?;
    let h = build_hamiltonian(&spec, &g)?;
    let v = node_velocity(&h, &psi, cfg.dt)?;
    let rows = || {
        v.nodes.iter().zip(&v.velocities).enumerate().map(|(i, (p, w))| (i, *p, *w))
    };
    let artifact = match cfg.effective_format() {
        Format::Csv => csv_rows(
            &["t", "node_index", "x", "p", "vx", "vp"],
            rows().map(|(i, p, w)| vec![fmt17(0.0), i.to_string(), fmt17(p.x), fmt17(p.p), fmt17(w.0), fmt17(w.1)]),
        )?,
        Format::Json => {
            #[derive(Serialize)]
            struct Record {
                nodes: Vec<[f64; 2]>,
                velocities: Vec<[f64; 2]>,
                richardson_defect: f64,
                flagged: bool,
            }
            json(&Record {
                nodes: rows().map(|(_, p, _)| [p.x, p.p]).collect(),
                velocities: rows().map(|(_, _, w)| [w.0, w.1]).collect(),
                richardson_defect: v.richardson_defect,
                flagged: v.flagged,
            })?
        }
    };
    let summary = format!(
        "velocity: N={} max_speed={:e} richardson_defect={:e} flagged={}",
        g.n(),
        v.max_speed(),
        v.richardson_defect,
        v.flagged
    );
    Ok(Outcome { summary, artifact })
}

fn duality(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let g = geometry(cfg)?;
    let spec = hamiltonian_spec(cfg, &g)?;
    let sign = if cfg.model == ModelChoice::Named(Model::Saddle) { -1 } else { 1 };
    let mut report = dft_conjugation_check(&spec, &g, sign)?;
    if sign == -1 && report.zero_mode_present {
        report.reflection_residual = Some(match zero_mode_reflection(&spec, &g) {
            Ok(Some(z)) => z.residual,
            Ok(None) => unreachable!("zero mode reported present"),
            Err(lll_phase::Error::DegenerateZeroMode(_)) => {
                let mut worst = 0.0f64;
                for m in symmetrized_zero_modes(&spec, &g)? {
                    let ns = find_nodes(&m)?;
                    worst = worst.max(reflection_mismatch(&ns, &ns)?);
                }
                worst
            }
            Err(e) => return Err(e.into()),
        });
    }
    let artifact = json(&report)?;
    let mut summary = format!(
        "duality: model={} N={} sign={:+} symmetry_norm={:e}",
        spec.label,
        g.n(),
        sign,
        report.symmetry_norm
    );
    if sign == -1 {
        summary += &format!(" pairs={} max_pair_residual={:e}", report.pairing.len(), report.max_pairing_residual());
    }
    if let Some(r) = report.reflection_residual {
        summary += &format!(" reflection_residual={r:e}");
    }
    Ok(Outcome { summary, artifact })
}

fn scatter(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let t = saddle_transmission(cfg.energy, cfg.half_window, cfg.step)?;
    let artifact = match cfg.effective_format() {
        Format::Csv => transmission_csv(std::slice::from_ref(&t))?.into_bytes(),
        Format::Json => json(&t)?,
    };
    let summary = format!(
        "scatter: E={} X={} h={} T={} R={} unitarity_defect={:e}",
        t.energy, t.half_window, t.step, t.transmission, t.reflection, t.unitarity_defect
    );
    Ok(Outcome { summary, artifact })
}

fn packet(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let g = geometry(cfg)?;
    let center = PhasePoint::new(cfg.x0, cfg.p0).reduced(&g);
    let psi = clustered_packet(center, &g)?;
    let ns = clustered_node_set(&psi, center)?;
    let peak = husimi_peak(&psi)?;
    let opposite =
        PhasePoint::new(center.x + 0.5 * g.position_period(), center.p + 0.5 * g.momentum_period()).reduced(&g);
    let (dx, dp) = toroidal_delta(&g, opposite, peak);
    #[derive(Serialize)]
    struct Record {
        #[serde(rename = "N")]
        n: usize,
        center: [f64; 2],
        peak: [f64; 2],
        opposite: [f64; 2],
        offset: [f64; 2],
        nodes: NodeSetRecord,
    }
    let record = Record {
        n: g.n(),
        center: [center.x, center.p],
        peak: [peak.x, peak.p],
        opposite: [opposite.x, opposite.p],
        offset: [dx, dp],
        nodes: NodeSetRecord::from(&ns),
    };
    let summary = format!(
        "packet: N={} center=({}, {}) peak=({}, {}) offset=({:e}, {:e})",
        g.n(),
        center.x,
        center.p,
        peak.x,
        peak.p,
        dx,
        dp
    );
    Ok(Outcome { summary, artifact: json(&record)? })
}

fn classical(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let g = TorusGeometry::periodic(cfg.n)?;
    let spec = hamiltonian_spec(cfg, &g)?;
    let c = classical_compare(&spec, PhasePoint::new(cfg.x0, cfg.p0), cfg.dt, cfg.steps, cfg.n)?;
    let artifact = match cfg.effective_format() {
        Format::Json => json(&c)?,
        Format::Csv => csv_rows(
            &["t", "x_classical", "p_classical", "x_peak", "p_peak", "deviation"],
            (0..c.times.len()).map(|k| {
                vec![
                    fmt17(c.times[k]),
                    fmt17(c.classical[k].x),
                    fmt17(c.classical[k].p),
                    fmt17(c.quantum[k].x),
                    fmt17(c.quantum[k].p),
                    fmt17(c.deviations[k]),
                ]
            }),
        )?,
    };
    let summary = format!(
        "classical: model={} N={} t_end={} max_deviation={:e}",
        spec.label,
        cfg.n,
        c.times.last().copied().unwrap_or(0.0),
        c.max_deviation
    );
    Ok(Outcome { summary, artifact })
}

fn density(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (g, traj) = tracked(cfg)?;
    let hist = node_density(&traj.frames, (cfg.bins, cfg.bins))?;
    let artifact = match cfg.effective_format() {
        Format::Json => json(&hist)?,
        Format::Csv => csv_rows(
            &["ix", "ip", "count"],
            (0..hist.bins.0)
                .flat_map(|i| (0..hist.bins.1).map(move |j| (i, j)))
                .map(|(i, j)| vec![i.to_string(), j.to_string(), fmt17(hist.count(i, j))]),
        )?,
    };
    let summary = format!(
        "density: N={} frames={} total={} max_bin={}",
        g.n(),
        hist.frames,
        hist.total,
        hist.max_bin()
    );
    Ok(Outcome { summary, artifact })
}
