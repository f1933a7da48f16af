//! Built-in invariant battery behind `qclock verify`.

use std::fmt;
use std::time::Instant;

use crate::error::Result;
use crate::exec::Execution;
use crate::scenarios::{self as sc, DegradationPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// Fails for a documented reason; reported but not counted.
    KnownFail,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::KnownFail => "KNOWN-FAIL",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    AtMost,
    AtLeast,
    Above,
}

impl Relation {
    fn holds(self, value: f64, tolerance: f64) -> bool {
        match self {
            Relation::AtMost => value <= tolerance,
            Relation::AtLeast => value >= tolerance,
            Relation::Above => value > tolerance,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
            Relation::Above => ">",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub tolerance: f64,
    pub status: Status,
    pub note: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<10} {:<34} {:>12.4e} {} {:<10.3e}",
            self.status.to_string(),
            self.name,
            self.value,
            self.relation.symbol(),
            self.tolerance
        )?;
        if !self.note.is_empty() {
            write!(f, "  {}", self.note)?;
        }
        Ok(())
    }
}

/// Options for one battery run.
#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    /// Multiplier on the dispersion derivative used for `Lambda` in the
    /// commutator check; anything but 1 is a fault-injection hook.
    pub lambda_scale: f64,
    pub exec: Execution,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            lambda_scale: 1.0,
            exec: Execution::Sequential,
        }
    }
}

struct Battery {
    checks: Vec<Check>,
}

impl Battery {
    fn push(&mut self, name: &str, value: Result<f64>, relation: Relation, tolerance: f64) {
        self.push_with(name, value, relation, tolerance, None);
    }

    fn push_with(&mut self, name: &str, value: Result<f64>, relation: Relation, tolerance: f64, known: Option<&str>) {
        let (value, status, note) = match value {
            Ok(v) if relation.holds(v, tolerance) => (v, Status::Pass, String::new()),
            Ok(v) => match known {
                Some(reason) => (v, Status::KnownFail, reason.to_string()),
                None => (v, Status::Fail, String::new()),
            },
            Err(e) => (f64::NAN, Status::Fail, e.to_string()),
        };
        self.checks.push(Check {
            name: name.to_string(),
            value,
            relation,
            tolerance,
            status,
            note,
        });
    }
}

/// Smallest successive difference of `xs`; negative when the sequence decreases.
fn min_step(xs: &[f64]) -> f64 {
    xs.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

const LINEAR_DEGRADATION_NOTE: &str =
    "linear dispersion translates every engine branch rigidly; excess D is lattice-level only";

/// Runs every check. Errors inside a check mark it failed; the battery continues.
pub fn run_battery(opts: VerifyOptions) -> Vec<Check> {
    let mut b = Battery { checks: Vec::new() };
    let started = Instant::now();

    b.push(
        "oracle_deviation_dt_1e-2",
        sc::oracle_deviation(1e-2),
        Relation::AtMost,
        5e-6,
    );
    let conv = sc::oracle_convergence(&sc::ORACLE_DTS);
    b.push(
        "oracle_order_error",
        conv.as_ref().map(|c| (c.order - 2.0).abs()).map_err(Clone::clone),
        Relation::AtMost,
        0.2,
    );
    let oracle_secs = started.elapsed().as_secs_f64();
    b.push(
        "oracle_norm_drift",
        sc::oracle_case(true).and_then(|case| {
            let s = sc::oracle_strang(&case, 1e-2, sc::ORACLE_DURATION)?;
            Ok((s.norm() - 1.0).abs())
        }),
        Relation::AtMost,
        1e-12,
    );

    b.push(
        "commutator_max_residual",
        sc::commutator_residuals(opts.lambda_scale)
            .map(|r| r.iter().map(|s| s.residual).fold(0.0, f64::max)),
        Relation::AtMost,
        1e-6,
    );

    let law = sc::variance_law();
    b.push(
        "variance_law_rel_deviation",
        law.as_ref().map(|l| l.max_rel_deviation).map_err(Clone::clone),
        Relation::AtMost,
        1e-6,
    );
    b.push(
        "variance_slope_rel_error",
        law.as_ref()
            .map(|l| (l.fit.slope() / l.var_lambda.sqrt() - 1.0).abs())
            .map_err(Clone::clone),
        Relation::AtMost,
        1e-3,
    );
    b.push(
        "free_lambda_hc_conservation",
        law.as_ref()
            .map(|l| {
                let r0 = &l.records[0];
                l.records
                    .iter()
                    .map(|r| {
                        [
                            r.mean_lambda - r0.mean_lambda,
                            r.var_lambda - r0.var_lambda,
                            r.mean_hc - r0.mean_hc,
                            r.var_hc - r0.var_hc,
                        ]
                        .iter()
                        .fold(0.0f64, |m, d| m.max(d.abs()))
                    })
                    .fold(0.0, f64::max)
            })
            .map_err(Clone::clone),
        Relation::AtMost,
        1e-9,
    );

    let dich = sc::dichotomy();
    b.push(
        "dichotomy_linear_q",
        dich.as_ref()
            .map(|d| d.iter().filter(|e| e.linear).map(|e| e.q.abs()).fold(0.0, f64::max))
            .map_err(Clone::clone),
        Relation::AtMost,
        1e-10,
    );
    b.push(
        "dichotomy_nonlinear_min_q",
        dich.as_ref()
            .map(|d| d.iter().filter(|e| !e.linear).map(|e| e.q).fold(f64::INFINITY, f64::min))
            .map_err(Clone::clone),
        Relation::Above,
        1e-8,
    );

    let pauli = sc::pauli_slopes();
    b.push(
        "pauli_linear_slope_error",
        pauli.as_ref().map(|p| (p.linear - 1.0).abs()).map_err(Clone::clone),
        Relation::AtMost,
        1e-6,
    );
    b.push(
        "pauli_massive_slope_error",
        pauli
            .as_ref()
            .map(|p| (p.massive - p.massive_expected).abs())
            .map_err(Clone::clone),
        Relation::AtMost,
        1e-4,
    );

    let margin = (|| -> Result<f64> {
        let mut records = law.clone()?.records;
        for e in dich.clone()? {
            records.extend(e.records);
        }
        records.extend(pauli.clone()?.records);
        Ok(sc::min_uncertainty_margin(&records))
    })();
    b.push("uncertainty_min_margin", margin, Relation::AtLeast, -1e-9);
    b.push("uncertainty_saturation_gap", sc::saturation_gap(), Relation::AtMost, 1e-4);

    let excess = |r: Result<DegradationPair>| r.map(|p| p.excess());
    b.push_with(
        "coupling_degradation_split",
        excess(sc::straddle_degradation_split()),
        Relation::Above,
        1e-5,
        Some(LINEAR_DEGRADATION_NOTE),
    );
    b.push_with(
        "coupling_degradation_oracle",
        excess(sc::straddle_degradation_oracle()),
        Relation::Above,
        1e-5,
        Some(LINEAR_DEGRADATION_NOTE),
    );
    b.push("energy_rel_drift", sc::energy_drift(), Relation::AtMost, 1e-6);

    b.push(
        "dead_window_infidelity",
        sc::dead_window_fidelity().map(|f| 1.0 - f),
        Relation::AtMost,
        1e-8,
    );
    let live = sc::live_window_channel(opts.exec);
    b.push(
        "live_window_f_avg",
        live.clone().map(|l| l.f_avg),
        Relation::AtLeast,
        1.0 - 1e-3,
    );
    b.push(
        "choi_trace_defect",
        live.clone().map(|l| l.trace_defect),
        Relation::AtMost,
        1e-8,
    );
    b.push(
        "choi_min_eigenvalue",
        live.clone().map(|l| l.min_eigenvalue),
        Relation::AtLeast,
        -1e-8,
    );

    let trade = sc::bandwidth_tradeoff(&sc::TRADEOFF_OMEGAS, opts.exec);
    b.push(
        "tradeoff_f_avg_min_step",
        trade
            .as_ref()
            .map(|rows| min_step(&rows.iter().map(|r| r.f_avg).collect::<Vec<_>>()))
            .map_err(Clone::clone),
        Relation::AtLeast,
        -1e-9,
    );
    b.push(
        "tradeoff_final_d_min_step",
        trade
            .as_ref()
            .map(|rows| min_step(&rows.iter().map(|r| r.final_d).collect::<Vec<_>>()))
            .map_err(Clone::clone),
        Relation::AtLeast,
        -1e-9,
    );

    log::info!(
        "oracle checks took {oracle_secs:.2} s; battery took {:.2} s",
        started.elapsed().as_secs_f64()
    );
    b.checks
}

/// True when no check has status [`Status::Fail`].
pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.status != Status::Fail)
}

pub fn format_report(checks: &[Check]) -> String {
    let mut out = String::new();
    for c in checks {
        out.push_str(&c.to_string());
        out.push('\n');
    }
    let failed = checks.iter().filter(|c| c.status == Status::Fail).count();
    let known = checks.iter().filter(|c| c.status == Status::KnownFail).count();
    out.push_str(&format!(
        "{} checks, {} failed, {} known failures\n",
        checks.len(),
        failed,
        known
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relations() {
        assert!(Relation::AtMost.holds(1.0, 1.0));
        assert!(!Relation::Above.holds(1.0, 1.0));
        assert!(Relation::AtLeast.holds(2.0, 1.0));
        assert!(!Relation::AtMost.holds(f64::NAN, 1.0));
    }

    #[test]
    fn errors_fail_the_check() {
        let mut b = Battery { checks: Vec::new() };
        b.push("x", Err(crate::Error::Io("boom".into())), Relation::AtMost, 1.0);
        b.push_with("y", Ok(2.0), Relation::AtMost, 1.0, Some("why"));
        assert_eq!(b.checks[0].status, Status::Fail);
        assert_eq!(b.checks[1].status, Status::KnownFail);
        assert!(!all_pass(&b.checks));
        assert!(all_pass(&b.checks[1..]));
    }

    #[test]
    fn min_step_detects_decrease() {
        assert!(min_step(&[1.0, 2.0, 1.5]) < 0.0);
        assert_eq!(min_step(&[1.0, 2.0, 4.0]), 1.0);
    }
}
