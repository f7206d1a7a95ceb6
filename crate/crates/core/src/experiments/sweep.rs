use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use super::config::SweepConfig;
use super::fmt_f64;
use crate::closedform::{normal_report, FidelityReport};
use crate::codesim::{corrected_fidelity_mc, raw_fidelity_mc, BlockCode, Estimator};
use crate::distributions::{CodeParams, IsotropicDensity};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::sampler::{combined_se, sampling_table, McConfig, McEstimate};

pub const CSV_HEADER: [&str; 19] = [
    "n",
    "m",
    "sigma_c",
    "sigma_u",
    "v_c",
    "v_u",
    "f2_psi",
    "f2_phi_tilde",
    "f2_psi0",
    "lb_psi0",
    "ub_phi_tilde_proof",
    "ub_phi_tilde_printed",
    "cond18",
    "mc_f2_psi",
    "mc_se_psi",
    "mc_f2_phi_tilde",
    "mc_se_phi_tilde",
    "mc_f2_psi0",
    "mc_se_psi0",
];

/// One `(code, σ_c)` cell. Monte Carlo columns are NaN when not sampled.
/// `cond18` holds `E[(1 - cos θ0) cos θ0]`; the condition holds iff it is
/// non-negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: u32,
    pub m: u32,
    pub sigma_c: f64,
    pub sigma_u: f64,
    pub v_c: f64,
    pub v_u: f64,
    pub f2_psi: f64,
    pub f2_phi_tilde: f64,
    pub f2_psi0: f64,
    pub lb_psi0: f64,
    pub ub_phi_tilde_proof: f64,
    pub ub_phi_tilde_printed: f64,
    pub cond18: f64,
    pub mc_f2_psi: f64,
    pub mc_se_psi: f64,
    pub mc_f2_phi_tilde: f64,
    pub mc_se_phi_tilde: f64,
    pub mc_f2_psi0: f64,
    pub mc_se_psi0: f64,
}

impl SweepRow {
    fn from_report(r: &FidelityReport) -> Self {
        SweepRow {
            n: r.params.n,
            m: r.params.m,
            sigma_c: r.sigma_c.unwrap_or(f64::NAN),
            sigma_u: r.sigma_u.unwrap_or(f64::NAN),
            v_c: r.v_c,
            v_u: r.v_u,
            f2_psi: r.f2_psi,
            f2_phi_tilde: r.f2_phi_tilde,
            f2_psi0: r.f2_psi0,
            lb_psi0: r.lb_psi0,
            ub_phi_tilde_proof: r.ub_phi_tilde,
            ub_phi_tilde_printed: r.ub_phi_tilde_printed,
            cond18: r.cond18_value,
            mc_f2_psi: f64::NAN,
            mc_se_psi: f64::NAN,
            mc_f2_phi_tilde: f64::NAN,
            mc_se_phi_tilde: f64::NAN,
            mc_f2_psi0: f64::NAN,
            mc_se_psi0: f64::NAN,
        }
    }

    pub fn params(&self) -> CodeParams {
        CodeParams::new(self.n, self.m).expect("rows are built from valid codes")
    }

    pub fn has_mc(&self) -> bool {
        !self.mc_f2_psi.is_nan()
    }

    pub fn mc_psi(&self) -> McEstimate {
        mc(self.mc_f2_psi, self.mc_se_psi)
    }

    pub fn mc_phi_tilde(&self) -> McEstimate {
        mc(self.mc_f2_phi_tilde, self.mc_se_phi_tilde)
    }

    pub fn mc_psi0(&self) -> McEstimate {
        mc(self.mc_f2_psi0, self.mc_se_psi0)
    }

    fn csv_record(&self) -> Vec<String> {
        let mut out = vec![self.n.to_string(), self.m.to_string()];
        out.extend(
            [
                self.sigma_c,
                self.sigma_u,
                self.v_c,
                self.v_u,
                self.f2_psi,
                self.f2_phi_tilde,
                self.f2_psi0,
                self.lb_psi0,
                self.ub_phi_tilde_proof,
                self.ub_phi_tilde_printed,
                self.cond18,
                self.mc_f2_psi,
                self.mc_se_psi,
                self.mc_f2_phi_tilde,
                self.mc_se_phi_tilde,
                self.mc_f2_psi0,
                self.mc_se_psi0,
            ]
            .map(fmt_f64),
        );
        out
    }
}

fn mc(mean: f64, std_error: f64) -> McEstimate {
    McEstimate {
        mean,
        std_error,
        n_samples: 0,
        seed: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// Closed-form `F(Ψ0) ≥ F(Φ̃) ≥ F(Ψ)` fails (or is not strict for
    /// `0 < σ_c < 1`).
    ClosedFormOrdering,
    /// Monte Carlo columns invert the ordering by more than 3 combined SE.
    McOrdering,
    /// A Monte Carlo column misses its closed form by more than 3 SE.
    McMismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub n: u32,
    pub m: u32,
    pub sigma_c: f64,
    pub kind: ViolationKind,
    pub detail: String,
}

impl Violation {
    /// Ordering failures are verification failures; mismatches are
    /// statistical flags expected at a rate of about 0.3% per comparison.
    pub fn is_ordering(&self) -> bool {
        self.kind != ViolationKind::McMismatch
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub total_seconds: f64,
    pub cells: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub config: SweepConfig,
    pub rows: Vec<SweepRow>,
    pub violations: Vec<Violation>,
    pub timing: Timing,
}

impl SweepReport {
    pub fn ordering_violations(&self) -> usize {
        self.violations.iter().filter(|v| v.is_ordering()).count()
    }
}

/// Closed-form rows for every `(code, σ_c)` pair; Monte Carlo columns NaN.
pub fn closed_form_rows(
    codes: &[CodeParams],
    sigma_grid: &[f64],
    n_steps_override: Option<u32>,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(codes.len() * sigma_grid.len());
    for p in codes {
        for &s in sigma_grid {
            let report = normal_report(s, p, n_steps_override.unwrap_or(p.n))?;
            rows.push(SweepRow::from_report(&report));
        }
    }
    Ok(rows)
}

fn cell_config(base: &McConfig, params: &CodeParams, sigma_c: f64) -> McConfig {
    base.derive(u64::from(params.n) << 32 | u64::from(params.m))
        .derive(sigma_c.to_bits())
}

fn run_cell(row: SweepRow, config: &SweepConfig, exec: Exec) -> Result<SweepRow> {
    let params = row.params();
    let cell = cell_config(&config.mc(), &params, row.sigma_c);
    let coded = sampling_table(&IsotropicDensity::normal(row.sigma_c, params.d as u32)?)?;
    let uncoded = sampling_table(&IsotropicDensity::normal(
        row.sigma_u,
        params.d_prime as u32,
    )?)?;
    let psi = raw_fidelity_mc(&coded, &cell.derive(0), exec)?;
    let phi = corrected_fidelity_mc(
        &coded,
        &BlockCode::new(params),
        &cell.derive(1),
        Estimator::BlockSum,
        exec,
    )?;
    let psi0 = raw_fidelity_mc(&uncoded, &cell.derive(2), exec)?;
    Ok(SweepRow {
        mc_f2_psi: psi.mean,
        mc_se_psi: psi.std_error,
        mc_f2_phi_tilde: phi.mean,
        mc_se_phi_tilde: phi.std_error,
        mc_f2_psi0: psi0.mean,
        mc_se_psi0: psi0.std_error,
        ..row
    })
}

/// Flags ordering failures and 3-SE closed-form/Monte Carlo mismatches.
pub fn check_row(row: &SweepRow, n_steps: u32) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut flag = |kind, detail: String| {
        out.push(Violation {
            n: row.n,
            m: row.m,
            sigma_c: row.sigma_c,
            kind,
            detail,
        })
    };
    let strict = row.sigma_c > 0.0 && row.sigma_c < 1.0 && n_steps > 1;
    let ordered = if strict {
        row.f2_psi0 > row.f2_phi_tilde && row.f2_phi_tilde > row.f2_psi
    } else {
        row.f2_psi0 >= row.f2_phi_tilde && row.f2_phi_tilde >= row.f2_psi
    };
    if !ordered {
        flag(
            ViolationKind::ClosedFormOrdering,
            format!(
                "f2_psi0 = {}, f2_phi_tilde = {}, f2_psi = {}",
                row.f2_psi0, row.f2_phi_tilde, row.f2_psi
            ),
        );
    }
    if !row.has_mc() {
        return out;
    }
    let (psi, phi, psi0) = (row.mc_psi(), row.mc_phi_tilde(), row.mc_psi0());
    for (hi, lo, label) in [
        (psi0, phi, "psi0 < phi_tilde"),
        (phi, psi, "phi_tilde < psi"),
    ] {
        if lo.mean - hi.mean > 3.0 * combined_se(&hi, &lo) {
            flag(
                ViolationKind::McOrdering,
                format!("{label}: {} vs {}", hi.mean, lo.mean),
            );
        }
    }
    for (est, cf, label) in [
        (psi, row.f2_psi, "f2_psi"),
        (phi, row.f2_phi_tilde, "f2_phi_tilde"),
        (psi0, row.f2_psi0, "f2_psi0"),
    ] {
        if !est.within(cf, 3.0) {
            flag(
                ViolationKind::McMismatch,
                format!(
                    "{label}: MC {} ± {} vs closed form {cf} (z = {:.2})",
                    est.mean,
                    est.std_error,
                    est.z_score(cf)
                ),
            );
        }
    }
    out
}

/// Runs every cell of the sweep. Cells run in parallel under `exec`; results
/// are independent of the worker count.
pub fn run_sweep(config: &SweepConfig, exec: Exec) -> Result<SweepReport> {
    config.validate()?;
    let start = Instant::now();
    let rows = closed_form_rows(
        &config.codes()?,
        &config.sigma_grid,
        config.n_steps_override,
    )?;
    let rows = exec
        .map_slice(&rows, |row| run_cell(*row, config, exec))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let violations = rows
        .iter()
        .flat_map(|r| check_row(r, config.n_steps(&r.params())))
        .collect();
    Ok(SweepReport {
        config: config.clone(),
        timing: Timing {
            total_seconds: start.elapsed().as_secs_f64(),
            cells: rows.len(),
        },
        rows,
        violations,
    })
}

pub fn csv_string(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let wrap = |e: csv::Error| Error::Csv {
        path: "<memory>".into(),
        source: e,
    };
    w.write_record(CSV_HEADER).map_err(wrap)?;
    for r in rows {
        w.write_record(r.csv_record()).map_err(wrap)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::io("<memory>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("CSV output is ASCII"))
}

pub fn write_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    std::fs::write(path, csv_string(rows)?).map_err(|e| Error::io(path, e))
}

pub fn write_json_report(report: &SweepReport, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), report).map_err(|e| Error::Json {
        path: path.into(),
        source: e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> SweepConfig {
        SweepConfig {
            code_list: vec![(5, 1)],
            sigma_grid: vec![0.0, 0.5, 0.9],
            n_samples: 20_000,
            seed: 11,
            ..SweepConfig::default()
        }
    }

    #[test]
    fn closed_form_examples() {
        let codes = [
            CodeParams::new(5, 1).unwrap(),
            CodeParams::new(5, 4).unwrap(),
        ];
        let rows = closed_form_rows(&codes, &[0.0, 0.5, 0.9], None).unwrap();
        assert_eq!(rows.len(), 6);
        let r = rows[2];
        assert!((r.f2_psi - 0.8159375).abs() < 1e-15);
        assert!((r.f2_phi_tilde - 0.905).abs() < 1e-15);
        assert!((r.f2_psi0 - 0.979_365_8).abs() < 1e-7);
        let r = rows[3];
        assert_eq!((r.f2_psi, r.f2_phi_tilde), (1.0 / 32.0, 1.0 / 16.0));
        assert!(rows.iter().all(|r| check_row(r, 5).is_empty()));
        assert!(!rows[0].has_mc());
    }

    #[test]
    fn sweep_is_consistent_and_reproducible() {
        let c = small_config();
        let a = run_sweep(&c, Exec::Parallel).unwrap();
        assert_eq!(a.rows.len(), 3);
        assert_eq!(a.ordering_violations(), 0, "{:?}", a.violations);
        let b = run_sweep(&c, Exec::Sequential).unwrap();
        assert_eq!(csv_string(&a.rows).unwrap(), csv_string(&b.rows).unwrap());
    }

    #[test]
    fn csv_layout() {
        let rows = closed_form_rows(&[CodeParams::new(3, 1).unwrap()], &[0.25], None).unwrap();
        let s = csv_string(&rows).unwrap();
        let mut lines = s.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(fields.len(), 19);
        assert_eq!(fields[0], "3");
        assert_eq!(fields[2].parse::<f64>().unwrap(), 0.25);
        assert_eq!(fields[6].parse::<f64>().unwrap(), rows[0].f2_psi);
        assert_eq!(fields[13], "NaN");
    }

    #[test]
    fn flags_inverted_ordering() {
        let mut row = closed_form_rows(&[CodeParams::new(5, 1).unwrap()], &[0.5], None).unwrap()[0];
        row.f2_psi = row.f2_phi_tilde + 0.1;
        let v = check_row(&row, 5);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::ClosedFormOrdering);
    }
}
