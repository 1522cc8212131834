//! Bench-test geometry: tether angles at wave trough and crest for the
//! towed system, the same angles for a bench rig with a shortened tether,
//! and a cross-check of a published table of both.
//!
//! Angles are computed in radians and reported in degrees.

use std::fmt::{self, Write as _};

use thiserror::Error;

/// Largest difference, in degrees, for a computed angle to count as
/// matching a tabulated one.
pub const MATCH_TOLERANCE_DEG: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchError {
    #[error("geometry infeasible: arcsin ratio {ratio:.4} is outside [-1, 1]")]
    Infeasible { ratio: f64 },
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("no bench geometry reproduces {angle_deg:.2} deg at bench height {bench_height} m")]
    Unscalable { angle_deg: f64, bench_height: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchGeometry {
    /// Tether length `l`, m.
    pub tether_length: f64,
    /// Height of the payload tray (or bench) above the reference level, m.
    pub bench_height: f64,
    /// Trough depth `h'_min`, m. Only its magnitude enters the trough angle.
    pub wave_trough: f64,
    /// Crest height `h'_max`, m.
    pub wave_crest: f64,
}

impl BenchGeometry {
    pub fn validate(&self) -> Result<(), BenchError> {
        if !(self.tether_length > 0.0) {
            return Err(BenchError::NonPositive("tether length"));
        }
        if !(self.bench_height > 0.0) {
            return Err(BenchError::NonPositive("bench height"));
        }
        Ok(())
    }
}

fn guarded_asin(ratio: f64) -> Result<f64, BenchError> {
    if ratio.is_finite() && (-1.0..=1.0).contains(&ratio) {
        Ok(ratio.asin())
    } else {
        Err(BenchError::Infeasible { ratio })
    }
}

/// Largest tether angle, reached in a wave trough:
/// `asin((H + |h'_min|) / l)`.
pub fn theta_trough(g: &BenchGeometry) -> Result<f64, BenchError> {
    g.validate()?;
    guarded_asin((g.bench_height + g.wave_trough.abs()) / g.tether_length).map(f64::to_degrees)
}

/// Smallest tether angle, reached on a wave crest: `asin((H - h'_max) / l)`.
pub fn theta_crest(g: &BenchGeometry) -> Result<f64, BenchError> {
    g.validate()?;
    guarded_asin((g.bench_height - g.wave_crest) / g.tether_length).map(f64::to_degrees)
}

/// Tether angle on the bench rig with the weight held at height `h_prime`
/// above the floor: `asin((H - h') / l)`.
pub fn theta_experimental(g: &BenchGeometry, h_prime: f64) -> Result<f64, BenchError> {
    g.validate()?;
    guarded_asin((g.bench_height - h_prime) / g.tether_length).map(f64::to_degrees)
}

/// Bench rig that reproduces the trough and crest angles of `real` at
/// bench height `bench_height`.
///
/// The tether is made as long as the bench allows, `l = H / sin(theta_trough)`,
/// which puts the trough weight on the floor; weight heights follow from
/// `h' = H - l sin(theta)`. Angles must lie strictly between 0 and 90
/// degrees so the weight hangs clear with a horizontal offset.
pub fn scale_to_bench(real: &BenchGeometry, bench_height: f64) -> Result<BenchGeometry, BenchError> {
    if !(bench_height > 0.0) {
        return Err(BenchError::NonPositive("bench height"));
    }
    let trough = theta_trough(real)?.to_radians();
    let crest = theta_crest(real)?.to_radians();
    for angle in [trough, crest] {
        if !(angle > 0.0 && angle < std::f64::consts::FRAC_PI_2) {
            return Err(BenchError::Unscalable {
                angle_deg: angle.to_degrees(),
                bench_height,
            });
        }
    }
    let steepest = trough.max(crest);
    let tether_length = bench_height / steepest.sin();
    Ok(BenchGeometry {
        tether_length,
        bench_height,
        wave_trough: (bench_height - tether_length * trough.sin()).max(0.0),
        wave_crest: (bench_height - tether_length * crest.sin()).max(0.0),
    })
}

/// Both columns of a real-vs-bench table plus the angles it lists.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryTable {
    pub real: BenchGeometry,
    pub experimental: BenchGeometry,
    pub tabulated_trough_deg: f64,
    pub tabulated_crest_deg: f64,
}

impl GeometryTable {
    /// Reference geometry; both columns list the same angles.
    pub const REFERENCE: GeometryTable = GeometryTable {
        real: BenchGeometry {
            tether_length: 1.27,
            bench_height: 0.762,
            wave_trough: -0.50,
            wave_crest: 0.50,
        },
        experimental: BenchGeometry {
            tether_length: 0.537,
            bench_height: 0.762,
            wave_trough: 0.152,
            wave_crest: 0.532,
        },
        tabulated_trough_deg: 83.57,
        tabulated_crest_deg: 16.66,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub column: &'static str,
    pub angle: &'static str,
    pub ratio: f64,
    /// `None` when the arcsin argument is out of domain.
    pub computed_deg: Option<f64>,
    pub tabulated_deg: f64,
}

impl ReportRow {
    fn new(column: &'static str, angle: &'static str, ratio: f64, tabulated_deg: f64) -> Self {
        ReportRow {
            column,
            angle,
            ratio,
            computed_deg: guarded_asin(ratio).ok().map(f64::to_degrees),
            tabulated_deg,
        }
    }

    pub fn feasible(&self) -> bool {
        self.computed_deg.is_some()
    }

    pub fn difference(&self) -> Option<f64> {
        self.computed_deg.map(|c| (c - self.tabulated_deg).abs())
    }

    pub fn matches(&self) -> bool {
        self.difference().is_some_and(|d| d <= MATCH_TOLERANCE_DEG)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub rows: Vec<ReportRow>,
    /// Other readings of the same cells, shown for comparison only.
    pub alternatives: Vec<ReportRow>,
}

/// Re-evaluates every angle of `table` and compares it with the listed value.
pub fn consistency_report(table: &GeometryTable) -> ConsistencyReport {
    let r = &table.real;
    let e = &table.experimental;
    let rows = vec![
        ReportRow::new(
            "real-time",
            "theta_trough",
            (r.bench_height + r.wave_trough.abs()) / r.tether_length,
            table.tabulated_trough_deg,
        ),
        ReportRow::new(
            "real-time",
            "theta_crest",
            (r.bench_height - r.wave_crest) / r.tether_length,
            table.tabulated_crest_deg,
        ),
        ReportRow::new(
            "experimental",
            "theta_trough",
            (e.bench_height - e.wave_trough) / e.tether_length,
            table.tabulated_trough_deg,
        ),
        ReportRow::new(
            "experimental",
            "theta_crest",
            (e.bench_height - e.wave_crest) / e.tether_length,
            table.tabulated_crest_deg,
        ),
    ];
    let alternatives = vec![ReportRow::new(
        "real-time (signed trough)",
        "theta_trough",
        (r.bench_height + r.wave_trough) / r.tether_length,
        table.tabulated_trough_deg,
    )];
    ConsistencyReport { rows, alternatives }
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"))
}

fn status(row: &ReportRow) -> &'static str {
    if !row.feasible() {
        "INFEASIBLE"
    } else if row.matches() {
        "match"
    } else {
        "MISMATCH"
    }
}

impl ConsistencyReport {
    pub fn all_match(&self) -> bool {
        self.rows.iter().all(ReportRow::matches)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("column,angle,ratio,computed_deg,tabulated_deg,abs_diff_deg,feasible,status\n");
        for row in self.rows.iter().chain(&self.alternatives) {
            let _ = writeln!(
                out,
                "{},{},{:.4},{},{:.2},{},{},{}",
                row.column,
                row.angle,
                row.ratio,
                row.computed_deg.map_or(String::new(), |v| format!("{v:.2}")),
                row.tabulated_deg,
                row.difference().map_or(String::new(), |v| format!("{v:.2}")),
                row.feasible(),
                status(row),
            );
        }
        out
    }
}

impl fmt::Display for ConsistencyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let header = |f: &mut fmt::Formatter<'_>| {
            writeln!(
                f,
                "{:<26} {:<13} {:>7} {:>9} {:>9} {:>7}  status",
                "column", "angle", "ratio", "computed", "table", "|diff|"
            )
        };
        let line = |f: &mut fmt::Formatter<'_>, row: &ReportRow| {
            writeln!(
                f,
                "{:<26} {:<13} {:>7.4} {:>9} {:>9.2} {:>7}  {}",
                row.column,
                row.angle,
                row.ratio,
                cell(row.computed_deg),
                row.tabulated_deg,
                cell(row.difference()),
                status(row)
            )
        };
        header(f)?;
        for row in &self.rows {
            line(f, row)?;
        }
        if !self.alternatives.is_empty() {
            writeln!(f)?;
            writeln!(f, "alternative readings:")?;
            for row in &self.alternatives {
                line(f, row)?;
            }
        }
        Ok(())
    }
}
