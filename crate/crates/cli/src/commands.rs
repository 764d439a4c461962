use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use nalgebra::DVector;
use serde::Serialize;
use zonoid::engine::{synthesize_stream, SynthConfig};
use zonoid::error::EstimatorError;
use zonoid::estimators::{Estimator, Trajectory};
use zonoid::io::{read_json, read_jsonl, write_jsonl, TrajectoryLine, TruthLine};
use zonoid::oracle::{self, OracleStep, Polygon};
use zonoid::{EstimatorConfig, MeasurementRecord, Registry};

/// Bad input: malformed configuration, missing or unreadable files.
pub const EXIT_INPUT: u8 = 2;
/// The estimator aborted (strict mode).
pub const EXIT_ESTIMATOR: u8 = 3;

const CONTAINMENT_TOL: f64 = 1e-7;
const BOUNDARY_DIRECTIONS: usize = 256;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

type CmdResult = Result<(), Failure>;

trait ExitWith<T> {
    fn exit(self, code: u8) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> ExitWith<T> for Result<T, E> {
    fn exit(self, code: u8) -> Result<T, Failure> {
        self.map_err(|e| Failure { code, error: e.into() })
    }
}

fn input_error(msg: String) -> Failure {
    Failure {
        code: EXIT_INPUT,
        error: anyhow!(msg),
    }
}

fn estimator_exit(e: &EstimatorError) -> u8 {
    match e {
        EstimatorError::Config(_) | EstimatorError::UnknownAlgorithm(_) | EstimatorError::Record(_) => EXIT_INPUT,
        _ => EXIT_ESTIMATOR,
    }
}

pub fn synth(config: Option<PathBuf>, seed: Option<u64>, out: &Path, truth: Option<PathBuf>) -> CmdResult {
    let mut cfg: SynthConfig = match &config {
        Some(p) => read_json(p).exit(EXIT_INPUT)?,
        None => SynthConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let output = synthesize_stream(&cfg).exit(EXIT_INPUT)?;
    write_jsonl(out, &output.records).exit(1)?;
    if let Some(path) = truth {
        let lines = output.records.iter().zip(&output.truth).map(|(r, t)| TruthLine {
            k: r.k,
            theta: t.iter().copied().collect(),
        });
        write_jsonl(&path, lines).exit(1)?;
    }
    log::info!("wrote {} records to {}", output.records.len(), out.display());
    Ok(())
}

pub struct EstimateArgs {
    pub config: Option<PathBuf>,
    pub data: PathBuf,
    pub out: PathBuf,
    pub algo: Option<String>,
    pub passes: usize,
    pub dump_lmi: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct PassSummary {
    pass: usize,
    final_volume: Option<f64>,
    wall_time: f64,
}

#[derive(Debug, Serialize)]
struct P2Counts {
    optimal: usize,
    infeasible: usize,
    solver_failure: usize,
}

#[derive(Debug, Serialize)]
struct Summary {
    algorithm: String,
    steps: usize,
    passes: Vec<PassSummary>,
    final_volume: Option<f64>,
    p2: P2Counts,
    wall_time: f64,
    /// `None` without a truth file.
    truth_contained: Option<bool>,
    first_violation: Option<usize>,
}

fn load_config(path: Option<&PathBuf>) -> Result<EstimatorConfig, Failure> {
    match path {
        Some(p) => read_json(p).exit(EXIT_INPUT),
        None => Ok(EstimatorConfig::default()),
    }
}

fn load_truth(path: &Path, steps: usize) -> Result<Vec<DVector<f64>>, Failure> {
    let lines: Vec<TruthLine> = read_jsonl(path).exit(EXIT_INPUT)?;
    if lines.len() != steps {
        return Err(input_error(format!(
            "{}: {} truth lines for {steps} steps",
            path.display(),
            lines.len()
        )));
    }
    Ok(lines.into_iter().map(|l| DVector::from_vec(l.theta)).collect())
}

fn first_violation(t: &Trajectory, truth: &[DVector<f64>]) -> Option<usize> {
    t.steps
        .iter()
        .zip(truth)
        .find(|(s, th)| !s.afss.contains_point(th, CONTAINMENT_TOL))
        .map(|(s, _)| s.k)
}

pub fn estimate(args: EstimateArgs) -> CmdResult {
    let mut cfg = load_config(args.config.as_ref())?;
    if let Some(a) = args.algo {
        cfg.algorithm = a;
    }
    cfg.dump_lmi = args.dump_lmi.is_some();
    if args.passes == 0 {
        return Err(input_error("--passes must be at least 1".into()));
    }
    let stream: Vec<MeasurementRecord> = read_jsonl(&args.data).exit(EXIT_INPUT)?;
    let truth = args
        .truth
        .as_ref()
        .map(|p| load_truth(p, stream.len()))
        .transpose()?;

    let estimator = Estimator::new(cfg, &Registry::default()).map_err(|e| Failure {
        code: estimator_exit(&e),
        error: e.into(),
    })?;
    let passes = estimator.multipass(&stream, args.passes).map_err(|e| Failure {
        code: estimator_exit(&e),
        error: e.into(),
    })?;
    let last = passes.last().expect("at least one pass");

    write_jsonl(&args.out, last.steps.iter().map(TrajectoryLine::from)).exit(1)?;
    if let Some(path) = &args.dump_lmi {
        write_jsonl(path, last.steps.iter().flat_map(|s| &s.lmi)).exit(1)?;
    }

    let mut counts = P2Counts {
        optimal: 0,
        infeasible: 0,
        solver_failure: 0,
    };
    for t in &passes {
        let (o, i, f) = t.p2_counts();
        counts.optimal += o;
        counts.infeasible += i;
        counts.solver_failure += f;
    }
    let violation = truth
        .as_ref()
        .and_then(|th| passes.iter().find_map(|t| first_violation(t, th)));
    let summary = Summary {
        algorithm: estimator.strategy_name().into(),
        steps: stream.len(),
        passes: passes
            .iter()
            .enumerate()
            .map(|(pass, t)| PassSummary {
                pass,
                final_volume: t.final_volume(),
                wall_time: t.wall_time,
            })
            .collect(),
        final_volume: last.final_volume(),
        p2: counts,
        wall_time: passes.iter().map(|t| t.wall_time).sum(),
        truth_contained: truth.as_ref().map(|_| violation.is_none()),
        first_violation: violation,
    };
    let text = serde_json::to_string_pretty(&summary).exit(1)?;
    // A closed pipe (`| head`) is not an error worth a panic.
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e).exit(1),
        _ => {}
    }
    if let Some(path) = &args.summary {
        std::fs::write(path, format!("{text}\n"))
            .with_context(|| path.display().to_string())
            .exit(1)?;
    }
    Ok(())
}

pub fn oracle(config: Option<PathBuf>, data: &Path, out: &Path) -> CmdResult {
    let cfg = load_config(config.as_ref())?;
    let stream: Vec<MeasurementRecord> = read_jsonl(data).exit(EXIT_INPUT)?;
    let initial = cfg.initial.zonotope().exit(EXIT_INPUT)?;
    let poly = Polygon::from_zonotope(&initial).exit(EXIT_INPUT)?;
    let steps = oracle::run(&poly, &stream).exit(EXIT_INPUT)?;
    if let Some(s) = steps.iter().find(|s| s.empty) {
        log::warn!("feasible set empty from step {}", s.k);
    }
    write_jsonl(out, &steps).exit(1)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct BoundaryLine {
    k: usize,
    cazi: Vec<[f64; 2]>,
    pazi: Vec<[f64; 2]>,
    fss: Vec<[f64; 2]>,
}

fn fss_inside(z: &zonoid::Zonotope, fss: &OracleStep) -> bool {
    fss.vertices
        .iter()
        .all(|v| z.contains_point(&DVector::from_column_slice(v), CONTAINMENT_TOL))
}

pub fn report(
    cazi: &Path,
    pazi: &Path,
    fss: &Path,
    truth: Option<PathBuf>,
    out: &Path,
    boundary: Option<PathBuf>,
) -> CmdResult {
    let cazi: Vec<TrajectoryLine> = read_jsonl(cazi).exit(EXIT_INPUT)?;
    let pazi: Vec<TrajectoryLine> = read_jsonl(pazi).exit(EXIT_INPUT)?;
    let fss: Vec<OracleStep> = read_jsonl(fss).exit(EXIT_INPUT)?;
    if cazi.len() != pazi.len() || cazi.len() != fss.len() {
        return Err(input_error(format!(
            "step counts differ: cazi {}, pazi {}, fss {}",
            cazi.len(),
            pazi.len(),
            fss.len()
        )));
    }
    let truth = truth.as_ref().map(|p| load_truth(p, cazi.len())).transpose()?;

    let file = File::create(out).with_context(|| out.display().to_string()).exit(1)?;
    let mut w = BufWriter::new(file);
    let mut header = "k,volume_cazi,volume_pazi,area_fss,fss_in_cazi,fss_in_pazi".to_string();
    if truth.is_some() {
        header.push_str(",truth_in_cazi,truth_in_pazi");
    }
    writeln!(w, "{header}").exit(1)?;
    let mut bounds = Vec::new();
    for (i, ((c, p), f)) in cazi.iter().zip(&pazi).zip(&fss).enumerate() {
        if c.k != p.k || c.k != f.k {
            return Err(input_error(format!("row {i}: step indices {} / {} / {} differ", c.k, p.k, f.k)));
        }
        let zc = c.zonotope().exit(EXIT_INPUT)?;
        let zp = p.zonotope().exit(EXIT_INPUT)?;
        if zc.dim() != 2 || zp.dim() != 2 {
            return Err(input_error(format!("row {i}: report needs planar sets")));
        }
        let vol = |z: &zonoid::Zonotope| z.volume().map(|v| v.to_string()).unwrap_or_default();
        let mut row = format!(
            "{},{},{},{},{},{}",
            c.k,
            vol(&zc),
            vol(&zp),
            f.area,
            fss_inside(&zc, f),
            fss_inside(&zp, f)
        );
        if let Some(th) = &truth {
            row.push_str(&format!(
                ",{},{}",
                zc.contains_point(&th[i], CONTAINMENT_TOL),
                zp.contains_point(&th[i], CONTAINMENT_TOL)
            ));
        }
        writeln!(w, "{row}").exit(1)?;
        if boundary.is_some() {
            bounds.push(BoundaryLine {
                k: c.k,
                cazi: zc.boundary_points(BOUNDARY_DIRECTIONS).exit(EXIT_INPUT)?,
                pazi: zp.boundary_points(BOUNDARY_DIRECTIONS).exit(EXIT_INPUT)?,
                fss: f.vertices.clone(),
            });
        }
    }
    w.flush().exit(1)?;
    if let Some(path) = boundary {
        write_jsonl(&path, &bounds).exit(1)?;
    }
    Ok(())
}
