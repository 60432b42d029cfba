use std::path::{Path, PathBuf};

use clap::ValueEnum;
use hamsfl::analyzer::{gather_evidence, sandwich_from_evidence};
use hamsfl::monodromy::bifurcation_candidates;
use hamsfl::{
    analyze, branch_tangent, eigen_envelope, fundamental_solution, launch_branch, parity, HessianPath,
    ParityEvidence, SflEvidence, TimeGrid,
};
use serde::Serialize;

use crate::error::CliError;
use crate::output::{csv, float, to_json, write_atomic};
use crate::problem::ProblemSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Envelope,
    Monodromy,
    Sfl,
    Parity,
    Analyze,
    Continue,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Success,
    HypothesesViolated,
    Failed,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Success => 0,
            Status::HypothesesViolated => 2,
            Status::Failed => 1,
        }
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub status: Status,
    pub summary: String,
}

fn done(files: Vec<PathBuf>, status: Status, summary: String) -> Result<Outcome, CliError> {
    Ok(Outcome { files, status, summary })
}

pub fn run_command(cmd: Command, problem: &ProblemSpec, out: &Path) -> Result<Outcome, CliError> {
    match cmd {
        Command::Envelope => envelope(problem, out),
        Command::Monodromy => monodromy(problem, out),
        Command::Sfl => sfl(problem, out),
        Command::Parity => parity_cmd(problem, out),
        Command::Analyze => analyze_cmd(problem, out),
        Command::Continue => continue_cmd(problem, out),
    }
}

fn envelope(problem: &ProblemSpec, out: &Path) -> Result<Outcome, CliError> {
    let fam = problem.family()?;
    let rows = problem
        .lambda_grid()
        .into_iter()
        .map(|l| {
            let e = eigen_envelope(&fam.hessian, l, problem.n_t)?;
            Ok(vec![float(l), float(e.alpha), float(e.beta)])
        })
        .collect::<Result<Vec<_>, hamsfl::Error>>()?;
    let file = write_atomic(out, "envelope.csv", &csv(&["lambda", "alpha", "beta"], &rows))?;
    done(vec![file], Status::Success, format!("{} envelope samples", rows.len()))
}

fn monodromy(problem: &ProblemSpec, out: &Path) -> Result<Outcome, CliError> {
    let fam = problem.family()?;
    let cfg = problem.monodromy_config();
    let mut nontrivial = 0;
    let rows = problem
        .lambda_grid()
        .into_iter()
        .map(|l| {
            let r = fundamental_solution(&fam.hessian, l, &cfg)?;
            nontrivial += usize::from(r.kernel_dim > 0);
            Ok(vec![float(l), r.kernel_dim.to_string(), float(r.sigma_min), float(r.symplectic_defect)])
        })
        .collect::<Result<Vec<_>, hamsfl::Error>>()?;
    let header = ["lambda", "kernel_dim", "sigma_min", "symplectic_defect"];
    let file = write_atomic(out, "monodromy.csv", &csv(&header, &rows))?;
    done(vec![file], Status::Success, format!("{nontrivial} of {} grid points with a periodic kernel", rows.len()))
}

fn sfl(problem: &ProblemSpec, out: &Path) -> Result<Outcome, CliError> {
    let fam = problem.family()?;
    let cfg = problem.analyzer_config();
    let ev = gather_evidence(&fam, problem.lambda_minus, problem.lambda_plus, &cfg)?;
    let (evidence, status) = if !ev.admissibility.admissible {
        let reason = "endpoints not admissible".to_string();
        (SflEvidence::Skipped { reason }, Status::HypothesesViolated)
    } else {
        match sandwich_from_evidence(&fam, &ev, &cfg) {
            Ok(c) => (SflEvidence::Computed(c), Status::Success),
            Err(e) => (SflEvidence::Failed { reason: e.to_string() }, Status::Failed),
        }
    };
    let summary = match &evidence {
        SflEvidence::Computed(c) => format!("sfl(M) = {}, sfl(L) = {}, sfl(N) = {}", c.sfl_m, c.sfl_l, c.sfl_n),
        SflEvidence::Skipped { reason } | SflEvidence::Failed { reason } => reason.clone(),
    };
    let file = write_atomic(out, "sfl.json", &to_json(&evidence)?)?;
    done(vec![file], status, summary)
}

fn parity_cmd(problem: &ProblemSpec, out: &Path) -> Result<Outcome, CliError> {
    let fam = problem.family()?;
    let grid = TimeGrid::for_assembly(problem.k, fam.hessian.max_harmonic());
    let path = HessianPath::new(fam.hessian.clone(), problem.k, grid, problem.lambda_minus, problem.lambda_plus)?;
    let (evidence, status) = match parity(&path, &problem.sfl_config()) {
        Ok(p) => (
            ParityEvidence::Computed {
                parity: p.parity,
                sign: p.sign,
                degree_minus: p.degree_a,
                degree_plus: p.degree_b,
                sfl: p.sfl,
            },
            Status::Success,
        ),
        Err(e @ hamsfl::Error::EndpointNotInvertible { .. }) => {
            (ParityEvidence::Skipped { reason: e.to_string() }, Status::HypothesesViolated)
        }
        Err(e) => (ParityEvidence::Failed { reason: e.to_string() }, Status::Failed),
    };
    let summary = match &evidence {
        ParityEvidence::Computed { parity, .. } => format!("parity {parity}"),
        ParityEvidence::Skipped { reason } | ParityEvidence::Failed { reason } => reason.clone(),
    };
    let file = write_atomic(out, "parity.json", &to_json(&evidence)?)?;
    done(vec![file], status, summary)
}

fn analyze_cmd(problem: &ProblemSpec, out: &Path) -> Result<Outcome, CliError> {
    let fam = problem.family()?;
    let report = analyze(&fam, problem.lambda_minus, problem.lambda_plus, &problem.analyzer_config())?;
    let status = if !report.evidence.admissibility.admissible || report.all_hypotheses_violated() {
        Status::HypothesesViolated
    } else {
        Status::Success
    };
    let v = &report.verdicts;
    let summary = format!(
        "part (i) {:?}, part (ii) {:?}, part (iii) {:?}",
        v.verdict_i.status, v.verdict_ii.status, v.verdict_iii.status
    );
    let file = write_atomic(out, "report.json", &to_json(&report)?)?;
    done(vec![file], status, summary)
}

#[derive(Serialize)]
struct BranchSummary {
    lambda_star: f64,
    direction: usize,
    file: String,
    points: usize,
    stop: hamsfl::StopReason,
    stop_label: &'static str,
    max_amplitude: f64,
}

fn continue_cmd(problem: &ProblemSpec, out: &Path) -> Result<Outcome, CliError> {
    let fam = problem.family()?;
    let cfg = problem.continuation_config();
    let stars: Vec<f64> = if problem.continuation.lambda_star.is_empty() {
        bifurcation_candidates(
            &fam.hessian,
            problem.lambda_minus,
            problem.lambda_plus,
            problem.grid,
            &problem.monodromy_config(),
        )?
        .into_iter()
        .map(|c| c.lambda)
        .collect()
    } else {
        problem.continuation.lambda_star.clone()
    };
    if stars.is_empty() {
        return Err(CliError::NoCandidates { lo: problem.lambda_minus, hi: problem.lambda_plus });
    }
    let mut files = Vec::new();
    let mut summaries = Vec::new();
    for &lambda_star in &stars {
        for (j, dir) in branch_tangent(&fam, lambda_star, &cfg)?.iter().enumerate() {
            let branch = launch_branch(&fam, lambda_star, dir, &cfg)?;
            let rows: Vec<Vec<String>> = branch
                .points
                .iter()
                .map(|p| vec![p.step.to_string(), float(p.lambda), float(p.amplitude), float(p.residual_norm)])
                .collect();
            let name = format!("branch_{}.csv", summaries.len());
            files.push(write_atomic(out, &name, &csv(&["step", "lambda", "amplitude", "residual"], &rows))?);
            summaries.push(BranchSummary {
                lambda_star,
                direction: j,
                file: name,
                points: rows.len(),
                stop: branch.stop,
                stop_label: branch.stop.label(),
                max_amplitude: branch.points.iter().map(|p| p.amplitude).fold(0.0, f64::max),
            });
        }
    }
    let summary = summaries
        .iter()
        .map(|s| format!("{}: {} points, {}", s.file, s.points, s.stop_label))
        .collect::<Vec<_>>()
        .join("; ");
    files.push(write_atomic(out, "continue.json", &to_json(&summaries)?)?);
    done(files, Status::Success, summary)
}
