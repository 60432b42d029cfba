//! Decision logic for local and global bifurcation from the envelope data of a
//! Hessian family, with the Galerkin spectral flow certificate behind it.
//!
//! Evidence gathering and verdict derivation are separate steps:
//! [`derive_verdicts`] is a pure function of an [`Evidence`] record, so stored
//! reports can be re-checked without recomputation.

use serde::{Deserialize, Serialize};

use crate::assembly::{ComparisonKind, ComparisonLines, TrigMatrixPath};
use crate::error::{Error, Result};
use crate::family::{comparison_lines, delta, eigen_envelope, near_integer, HamiltonianFamily};
use crate::fourier::TimeGrid;
use crate::monodromy::{endpoint_admissibility, Admissibility, MonodromyConfig};
use crate::paths::{ComparisonPath, HessianPath, HomotopyPath, Side};
use crate::scalar::{max_abs, Real};
use crate::spectral_flow::{parity, sfl_partition, SflConfig};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalyzerConfig {
    /// Galerkin truncation for the spectral flow certificate.
    pub k: usize,
    /// The certificate is repeated at `k + k_offset`.
    pub k_offset: usize,
    pub envelope_nt: usize,
    /// Shift applied to comparison values that sit on an integer.
    pub nudge: f64,
    pub integer_tol: f64,
    pub autonomy_tol: f64,
    /// Evaluate part (iii) from planarity and the `Delta` condition alone.
    pub relax_ii: bool,
    pub sfl: SflConfig,
    pub monodromy: MonodromyConfig,
}

impl Default for AnalyzerConfig {
    fn default() -> Self {
        Self {
            k: 8,
            k_offset: 5,
            envelope_nt: 64,
            nudge: 1e-6,
            integer_tol: 1e-9,
            autonomy_tol: 1e-10,
            relax_ii: false,
            sfl: SflConfig::default(),
            monodromy: MonodromyConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeRecord {
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    pub n_t: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AutonomyCheck {
    pub autonomous: bool,
    /// `max_t |A(lambda_-, t) - A(lambda_-, 0)|` on the envelope grid.
    pub max_deviation: f64,
    pub worst_t: f64,
}

/// Everything the verdicts depend on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub family: String,
    pub n: usize,
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    pub envelope_minus: EnvelopeRecord,
    pub envelope_plus: EnvelopeRecord,
    pub delta_beta_minus_alpha_plus: i64,
    pub delta_alpha_minus_beta_plus: i64,
    pub delta_beta_plus_alpha_minus: i64,
    pub delta_alpha_plus_beta_minus: i64,
    /// Envelope values within the integer tolerance of an integer.
    pub near_integer: Vec<String>,
    pub admissibility: Admissibility,
    pub autonomy: AutonomyCheck,
    pub relax_ii: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictStatus {
    Established,
    NotEstablished,
    HypothesesViolated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: VerdictStatus,
    /// Which disjunct or orientation applied, `"none"` otherwise.
    pub case: String,
    pub mode: String,
    pub reason: String,
    pub tolerance_sensitive: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdicts {
    pub verdict_i: Verdict,
    pub verdict_ii: Verdict,
    pub verdict_iii: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Nudge {
    pub name: String,
    pub original: f64,
    pub nudged: f64,
}

/// Galerkin spectral flows of `L`, `M` and `N` with their consistency checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichCertificate {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "K_check")]
    pub k_check: usize,
    #[serde(rename = "sfl_L")]
    pub sfl_l: i64,
    #[serde(rename = "sfl_L_check")]
    pub sfl_l_check: i64,
    #[serde(rename = "sfl_M")]
    pub sfl_m: i64,
    #[serde(rename = "sfl_N")]
    pub sfl_n: i64,
    /// `2n Delta(beta_-, alpha_+)` on the (possibly nudged) line values.
    pub expected_m: i64,
    /// `2n Delta(alpha_-, beta_+)` on the (possibly nudged) line values.
    pub expected_n: i64,
    /// `"strict"` or `"ordered"`.
    pub sandwich: String,
    #[serde(rename = "sfl_L_odd")]
    pub sfl_l_odd: bool,
    pub nudges: Vec<Nudge>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum SflEvidence {
    Computed(SandwichCertificate),
    Skipped { reason: String },
    Failed { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum ParityEvidence {
    Computed { parity: u8, sign: i8, degree_minus: i8, degree_plus: i8, sfl: i64 },
    Skipped { reason: String },
    Failed { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BifurcationReport {
    #[serde(flatten)]
    pub evidence: Evidence,
    #[serde(flatten)]
    pub verdicts: Verdicts,
    pub sfl: SflEvidence,
    pub parity: ParityEvidence,
}

impl BifurcationReport {
    /// True when every verdict reports violated hypotheses.
    pub fn all_hypotheses_violated(&self) -> bool {
        [&self.verdicts.verdict_i, &self.verdicts.verdict_ii, &self.verdicts.verdict_iii]
            .iter()
            .all(|v| v.status == VerdictStatus::HypothesesViolated)
    }
}

fn record<T: Real>(fam: &TrigMatrixPath<T>, lambda: T, n_t: usize) -> Result<EnvelopeRecord> {
    let e = eigen_envelope(fam, lambda, n_t)?;
    Ok(EnvelopeRecord { lambda: lambda.as_f64(), alpha: e.alpha.as_f64(), beta: e.beta.as_f64(), n_t: e.n_t })
}

fn autonomy<T: Real>(fam: &TrigMatrixPath<T>, lambda: T, n_t: usize, tol: f64) -> Result<AutonomyCheck> {
    let grid = TimeGrid::new(n_t)?;
    let a0 = fam.eval(lambda, T::zero());
    let mut check = AutonomyCheck { autonomous: true, max_deviation: 0.0, worst_t: 0.0 };
    for &t in grid.points() {
        let dev = max_abs((fam.eval(lambda, t) - &a0).iter().copied()).as_f64();
        if dev > check.max_deviation {
            check.max_deviation = dev;
            check.worst_t = t.as_f64();
        }
    }
    check.autonomous = check.max_deviation <= tol;
    Ok(check)
}

/// Envelopes, `Delta` values, endpoint admissibility and the autonomy check.
pub fn gather_evidence<T: Real>(
    fam: &HamiltonianFamily<T>,
    lambda_minus: T,
    lambda_plus: T,
    cfg: &AnalyzerConfig,
) -> Result<Evidence> {
    if !(lambda_minus < lambda_plus) {
        return Err(Error::InvalidArgument(format!(
            "lambda_minus = {lambda_minus} must be below lambda_plus = {lambda_plus}"
        )));
    }
    let h = &fam.hessian;
    let envelope_minus = record(h, lambda_minus, cfg.envelope_nt)?;
    let envelope_plus = record(h, lambda_plus, cfg.envelope_nt)?;
    let (am, bm) = (envelope_minus.alpha, envelope_minus.beta);
    let (ap, bp) = (envelope_plus.alpha, envelope_plus.beta);
    let near_integer = [("alpha_minus", am), ("beta_minus", bm), ("alpha_plus", ap), ("beta_plus", bp)]
        .into_iter()
        .filter(|&(_, v)| near_integer(v, cfg.integer_tol))
        .map(|(name, _)| name.to_string())
        .collect();
    Ok(Evidence {
        family: fam.name.clone(),
        n: fam.n(),
        lambda_minus: lambda_minus.as_f64(),
        lambda_plus: lambda_plus.as_f64(),
        delta_beta_minus_alpha_plus: delta(bm, ap),
        delta_alpha_minus_beta_plus: delta(am, bp),
        delta_beta_plus_alpha_minus: delta(bp, am),
        delta_alpha_plus_beta_minus: delta(ap, bm),
        envelope_minus,
        envelope_plus,
        near_integer,
        admissibility: endpoint_admissibility(h, lambda_minus, lambda_plus, &cfg.monodromy)?,
        autonomy: autonomy(h, lambda_minus, cfg.envelope_nt, cfg.autonomy_tol)?,
        relax_ii: cfg.relax_ii,
    })
}

fn verdict(status: VerdictStatus, case: &str, mode: &str, reason: String, sensitive: bool) -> Verdict {
    Verdict { status, case: case.into(), mode: mode.into(), reason, tolerance_sensitive: sensitive }
}

fn admissibility_reason(adm: &Admissibility) -> String {
    let parts: Vec<String> = adm
        .violations
        .iter()
        .map(|v| format!("{} = {} has a {}-dimensional periodic kernel", v.endpoint, v.lambda, v.kernel_dim))
        .collect();
    parts.join("; ")
}

/// Hypotheses of part (ii) other than the gap condition; `Err` carries the reason.
fn part_ii_hypotheses(ev: &Evidence) -> std::result::Result<(), String> {
    if !ev.admissibility.admissible {
        return Err(admissibility_reason(&ev.admissibility));
    }
    if !ev.autonomy.autonomous {
        return Err(format!(
            "A is not autonomous at lambda_minus: deviation {:e} at t = {}",
            ev.autonomy.max_deviation, ev.autonomy.worst_t
        ));
    }
    let (am, bm) = (ev.envelope_minus.alpha, ev.envelope_minus.beta);
    if !(am < 0.0 && 0.0 < bm) {
        return Err(format!("alpha_minus < 0 < beta_minus fails (alpha_minus = {am}, beta_minus = {bm})"));
    }
    Ok(())
}

/// The gap case of part (ii) that holds, if any.
fn gap_case(ev: &Evidence) -> Option<&'static str> {
    let (am, bm) = (ev.envelope_minus.alpha, ev.envelope_minus.beta);
    let (ap, bp) = (ev.envelope_plus.alpha, ev.envelope_plus.beta);
    if bm < ap {
        Some("beta_minus_below_alpha_plus")
    } else if bp < am {
        Some("beta_plus_below_alpha_minus")
    } else {
        None
    }
}

/// Verdicts of parts (i), (ii) and (iii) from recorded evidence alone.
pub fn derive_verdicts(ev: &Evidence) -> Verdicts {
    use VerdictStatus::*;
    let (am, bm) = (ev.envelope_minus.alpha, ev.envelope_minus.beta);
    let (ap, bp) = (ev.envelope_plus.alpha, ev.envelope_plus.beta);
    let sensitive = !ev.near_integer.is_empty();

    let verdict_i = if !ev.admissibility.admissible {
        verdict(HypothesesViolated, "none", "standard", admissibility_reason(&ev.admissibility), sensitive)
    } else if bm < ap && ev.delta_beta_minus_alpha_plus > 0 {
        verdict(
            Established,
            "beta_minus_below_alpha_plus",
            "standard",
            format!(
                "beta_minus < alpha_plus and Delta(beta_minus, alpha_plus) = {} > 0: bifurcation in the open interval ({}, {})",
                ev.delta_beta_minus_alpha_plus, ev.lambda_minus, ev.lambda_plus
            ),
            sensitive,
        )
    } else if bp < am && ev.delta_alpha_minus_beta_plus < 0 {
        verdict(
            Established,
            "beta_plus_below_alpha_minus",
            "standard",
            format!(
                "beta_plus < alpha_minus and Delta(alpha_minus, beta_plus) = {} < 0: bifurcation in the open interval ({}, {})",
                ev.delta_alpha_minus_beta_plus, ev.lambda_minus, ev.lambda_plus
            ),
            sensitive,
        )
    } else {
        verdict(
            NotEstablished,
            "none",
            "standard",
            format!(
                "neither disjunct holds (Delta(beta_minus, alpha_plus) = {}, Delta(alpha_minus, beta_plus) = {})",
                ev.delta_beta_minus_alpha_plus, ev.delta_alpha_minus_beta_plus
            ),
            sensitive,
        )
    };

    let hyp = part_ii_hypotheses(ev);
    let gap = gap_case(ev);
    let verdict_ii = match (&hyp, gap) {
        (Err(reason), _) => verdict(HypothesesViolated, "none", "standard", reason.clone(), sensitive),
        (Ok(()), Some(case)) => verdict(
            Established,
            case,
            "standard",
            format!("alpha_minus < 0 < beta_minus, A autonomous at lambda_minus and {case}"),
            sensitive,
        ),
        (Ok(()), None) => verdict(
            NotEstablished,
            "none",
            "standard",
            format!("no gap: beta_minus = {bm} >= alpha_plus = {ap} and beta_plus = {bp} >= alpha_minus = {am}"),
            sensitive,
        ),
    };

    let first = ev.delta_alpha_minus_beta_plus - ev.delta_beta_minus_alpha_plus;
    let swapped = ev.delta_beta_plus_alpha_minus - ev.delta_alpha_plus_beta_minus;
    let verdict_iii = if ev.n != 1 {
        verdict(HypothesesViolated, "none", "standard", format!("planar systems only (n = {})", ev.n), sensitive)
    } else if ev.relax_ii {
        let mode = "condition-(Delta)-only";
        if !ev.admissibility.admissible {
            verdict(HypothesesViolated, "none", mode, admissibility_reason(&ev.admissibility), sensitive)
        } else if first == 1 {
            verdict(
                Established,
                "alpha_minus_beta_plus",
                mode,
                "Delta(alpha_minus, beta_plus) - Delta(beta_minus, alpha_plus) = 1".into(),
                sensitive,
            )
        } else if bp < am && swapped == 1 {
            verdict(
                Established,
                "beta_plus_alpha_minus",
                mode,
                "Delta(beta_plus, alpha_minus) - Delta(alpha_plus, beta_minus) = 1".into(),
                sensitive,
            )
        } else {
            verdict(
                NotEstablished,
                "none",
                mode,
                format!("Delta differences are {first} and {swapped}, not 1"),
                sensitive,
            )
        }
    } else {
        let mode = "all-hypotheses";
        match (&hyp, gap) {
            (Err(reason), _) => verdict(HypothesesViolated, "none", mode, reason.clone(), sensitive),
            (Ok(()), None) => verdict(
                HypothesesViolated,
                "none",
                mode,
                "no gap condition holds (beta_minus < alpha_plus or beta_plus < alpha_minus)".into(),
                sensitive,
            ),
            (Ok(()), Some("beta_minus_below_alpha_plus")) => {
                if first == 1 {
                    verdict(
                        Established,
                        "alpha_minus_beta_plus",
                        mode,
                        "Delta(alpha_minus, beta_plus) - Delta(beta_minus, alpha_plus) = 1: global bifurcation from the interval"
                            .into(),
                        sensitive,
                    )
                } else {
                    verdict(
                        NotEstablished,
                        "none",
                        mode,
                        format!("Delta(alpha_minus, beta_plus) - Delta(beta_minus, alpha_plus) = {first}, not 1"),
                        sensitive,
                    )
                }
            }
            (Ok(()), Some(_)) => {
                if swapped == 1 {
                    verdict(
                        Established,
                        "beta_plus_alpha_minus",
                        mode,
                        "Delta(beta_plus, alpha_minus) - Delta(alpha_plus, beta_minus) = 1: global bifurcation from the interval"
                            .into(),
                        sensitive,
                    )
                } else {
                    verdict(
                        NotEstablished,
                        "none",
                        mode,
                        format!("Delta(beta_plus, alpha_minus) - Delta(alpha_plus, beta_minus) = {swapped}, not 1"),
                        sensitive,
                    )
                }
            }
        }
    };
    Verdicts { verdict_i, verdict_ii, verdict_iii }
}

pub fn analyze_part_i<T: Real>(fam: &HamiltonianFamily<T>, lm: T, lp: T, cfg: &AnalyzerConfig) -> Result<Verdict> {
    Ok(derive_verdicts(&gather_evidence(fam, lm, lp, cfg)?).verdict_i)
}

pub fn analyze_part_ii<T: Real>(fam: &HamiltonianFamily<T>, lm: T, lp: T, cfg: &AnalyzerConfig) -> Result<Verdict> {
    Ok(derive_verdicts(&gather_evidence(fam, lm, lp, cfg)?).verdict_ii)
}

pub fn analyze_part_iii<T: Real>(fam: &HamiltonianFamily<T>, lm: T, lp: T, cfg: &AnalyzerConfig) -> Result<Verdict> {
    Ok(derive_verdicts(&gather_evidence(fam, lm, lp, cfg)?).verdict_iii)
}

fn nudge(name: &str, value: f64, toward: f64, cfg: &AnalyzerConfig, log: &mut Vec<Nudge>) -> f64 {
    if !near_integer(value, cfg.integer_tol) {
        return value;
    }
    let nudged = if toward < value { value - cfg.nudge } else { value + cfg.nudge };
    log.push(Nudge { name: name.into(), original: value, nudged });
    nudged
}

/// Comparison lines for recorded envelopes, with integer values shifted toward
/// the interior of their line.
pub fn nudged_lines<T: Real>(ev: &Evidence, cfg: &AnalyzerConfig) -> Result<(ComparisonLines<T>, Vec<Nudge>)> {
    let (am, bm) = (ev.envelope_minus.alpha, ev.envelope_minus.beta);
    let (ap, bp) = (ev.envelope_plus.alpha, ev.envelope_plus.beta);
    let mut log = Vec::new();
    let bm2 = nudge("beta_minus", bm, ap, cfg, &mut log);
    let ap2 = nudge("alpha_plus", ap, bm, cfg, &mut log);
    let am2 = nudge("alpha_minus", am, bp, cfg, &mut log);
    let bp2 = nudge("beta_plus", bp, am, cfg, &mut log);
    let lines = comparison_lines(
        T::lit(am2),
        T::lit(bm2),
        T::lit(ap2),
        T::lit(bp2),
        T::lit(ev.lambda_minus),
        T::lit(ev.lambda_plus),
    )?;
    Ok((lines, log))
}

/// [`sfl_sandwich`] on already gathered evidence.
pub fn sandwich_from_evidence<T: Real>(fam: &HamiltonianFamily<T>, ev: &Evidence, cfg: &AnalyzerConfig) -> Result<SandwichCertificate> {
    if let Some(v) = ev.admissibility.violations.first() {
        return Err(Error::NotAdmissible { lambda: v.lambda, kernel_dim: v.kernel_dim });
    }
    let (lines, nudges) = nudged_lines::<T>(ev, cfg)?;
    let (lm, lp) = (T::lit(ev.lambda_minus), T::lit(ev.lambda_plus));
    let k = cfg.k;
    let k_check = cfg.k + cfg.k_offset;
    let h = &fam.hessian;
    let sfl_at = |kk: usize| -> Result<i64> {
        let grid = TimeGrid::for_assembly(kk, h.max_harmonic());
        sfl_partition(&HessianPath::new(h.clone(), kk, grid, lm, lp)?, &cfg.sfl)
    };
    let sfl_l = sfl_at(k)?;
    let sfl_l_check = sfl_at(k_check)?;
    if sfl_l != sfl_l_check {
        return Err(Error::NotConverged { k, at_k: sfl_l, k_check, at_check: sfl_l_check });
    }
    let n = fam.n();
    let sfl_m = sfl_partition(&ComparisonPath::new(ComparisonKind::M, lines, n, k)?, &cfg.sfl)?;
    let sfl_n = sfl_partition(&ComparisonPath::new(ComparisonKind::N, lines, n, k)?, &cfg.sfl)?;
    let two_n = 2 * n as i64;
    let expected_m = two_n * delta(lines.b.start.as_f64(), lines.b.end.as_f64());
    let expected_n = two_n * delta(lines.c.start.as_f64(), lines.c.end.as_f64());
    if sfl_m != expected_m || sfl_n != expected_n {
        return Err(Error::CertificateFailed(format!(
            "sfl(M) = {sfl_m} (expected {expected_m}), sfl(N) = {sfl_n} (expected {expected_n}) at K = {k}"
        )));
    }
    if !(sfl_m <= sfl_l && sfl_l <= sfl_n) {
        return Err(Error::CertificateFailed(format!(
            "ordering sfl(M) <= sfl(L) <= sfl(N) fails: {sfl_m}, {sfl_l}, {sfl_n}"
        )));
    }
    let strict = sfl_m < sfl_l && sfl_l < sfl_n;
    let am = ev.envelope_minus.alpha;
    let bm = ev.envelope_minus.beta;
    if am < 0.0 && 0.0 < bm && gap_case(ev).is_some() && !strict {
        return Err(Error::CertificateFailed(format!(
            "strict sandwich sfl(M) < sfl(L) < sfl(N) fails under the gap hypotheses: {sfl_m}, {sfl_l}, {sfl_n}"
        )));
    }
    Ok(SandwichCertificate {
        k,
        k_check,
        sfl_l,
        sfl_l_check,
        sfl_m,
        sfl_n,
        expected_m,
        expected_n,
        sandwich: if strict { "strict" } else { "ordered" }.into(),
        sfl_l_odd: sfl_l.rem_euclid(2) == 1,
        nudges,
    })
}

/// Spectral flows of the Galerkin paths `L` (at `K` and `K + offset`), `M` and `N`.
pub fn sfl_sandwich<T: Real>(
    fam: &HamiltonianFamily<T>,
    lambda_minus: T,
    lambda_plus: T,
    cfg: &AnalyzerConfig,
) -> Result<SandwichCertificate> {
    sandwich_from_evidence(fam, &gather_evidence(fam, lambda_minus, lambda_plus, cfg)?, cfg)
}

/// Spectral flows of the four sides of the homotopy rectangle
/// `[0, 1] x [lambda_-, lambda_+]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SquareFlows {
    /// `s = 0`: the Hessian path.
    pub left: i64,
    /// `lambda = lambda_-`, `s` from 0 to 1.
    pub bottom: i64,
    /// `s = 1`: the comparison path.
    pub right: i64,
    /// `lambda = lambda_+`, `s` from 0 to 1.
    pub top: i64,
}

impl SquareFlows {
    /// Spectral flow around the boundary loop; zero by homotopy invariance.
    pub fn signed_sum(&self) -> i64 {
        self.bottom + self.right - self.top - self.left
    }
}

pub fn homotopy_square<T: Real>(
    fam: &TrigMatrixPath<T>,
    lines: ComparisonLines<T>,
    kind: ComparisonKind,
    k: usize,
    cfg: &SflConfig,
) -> Result<SquareFlows> {
    let line = lines.line(kind);
    let (lm, lp) = (line.lambda_minus, line.lambda_plus);
    let grid = TimeGrid::for_assembly(k, fam.max_harmonic());
    let side = |side: Side<T>| -> Result<i64> {
        sfl_partition(&HomotopyPath::new(fam.clone(), lines, kind, k, grid.clone(), side)?, cfg)
    };
    let (zero, one) = (T::zero(), T::one());
    Ok(SquareFlows {
        left: side(Side::FixedS { s: zero, lambda0: lm, lambda1: lp })?,
        bottom: side(Side::FixedLambda { lambda: lm, s0: zero, s1: one })?,
        right: side(Side::FixedS { s: one, lambda0: lm, lambda1: lp })?,
        top: side(Side::FixedLambda { lambda: lp, s0: zero, s1: one })?,
    })
}

/// Full report: evidence, verdicts, spectral flow certificate and the parity of `L`.
pub fn analyze<T: Real>(
    fam: &HamiltonianFamily<T>,
    lambda_minus: T,
    lambda_plus: T,
    cfg: &AnalyzerConfig,
) -> Result<BifurcationReport> {
    let evidence = gather_evidence(fam, lambda_minus, lambda_plus, cfg)?;
    let verdicts = derive_verdicts(&evidence);
    let (sfl, parity_ev) = if evidence.admissibility.admissible {
        let sfl = match sandwich_from_evidence(fam, &evidence, cfg) {
            Ok(c) => SflEvidence::Computed(c),
            Err(e) => SflEvidence::Failed { reason: e.to_string() },
        };
        let grid = TimeGrid::for_assembly(cfg.k, fam.hessian.max_harmonic());
        let par = HessianPath::new(fam.hessian.clone(), cfg.k, grid, lambda_minus, lambda_plus)
            .and_then(|p| parity(&p, &cfg.sfl));
        let par = match par {
            Ok(p) => ParityEvidence::Computed {
                parity: p.parity,
                sign: p.sign,
                degree_minus: p.degree_a,
                degree_plus: p.degree_b,
                sfl: p.sfl,
            },
            Err(e) => ParityEvidence::Failed { reason: e.to_string() },
        };
        (sfl, par)
    } else {
        let reason = format!("endpoints not admissible: {}", admissibility_reason(&evidence.admissibility));
        (SflEvidence::Skipped { reason: reason.clone() }, ParityEvidence::Skipped { reason })
    };
    Ok(BifurcationReport { evidence, verdicts, sfl, parity: parity_ev })
}
