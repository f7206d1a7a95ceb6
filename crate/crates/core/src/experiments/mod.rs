//! Sweeps, verification reports and their serialized outputs.

mod config;
mod figure;
mod sweep;
mod verify;

pub use config::{OutputPaths, SweepConfig};
pub use figure::{emit_figure2, figure2_rows, figure2_svg, FIGURE2_CODES};
pub use sweep::{
    check_row, closed_form_rows, csv_string, run_sweep, write_csv, write_json_report, SweepReport,
    SweepRow, Timing, Violation, ViolationKind, CSV_HEADER,
};
pub use verify::{
    suite_densities, verify_appendix, verify_theorems, AppendixReport, CheckStatus, FamilyResult,
    TheoremCheck, TheoremReport, APPENDIX_D, APPENDIX_MAX_K, APPENDIX_SIGMA, INEQUALITY_TOL,
    THEOREM2_D_PRIME,
};

/// Floats in CSV output: 17 significant digits, enough to round-trip.
pub(crate) fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        String::from("NaN")
    } else {
        format!("{x:.16e}")
    }
}
