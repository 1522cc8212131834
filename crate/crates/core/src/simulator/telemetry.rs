//! Per-step telemetry and its CSV rendering.
//!
//! Numbers are written with six fixed decimals so identical runs produce
//! byte-identical files.

use std::fmt::Write as _;
use std::io;

use crate::actuator::MechState;

use super::AuvMode;

pub const CSV_HEADER: &str = "t,asv_x,asv_y,asv_speed,auv_x,auv_y,auv_mode,tension_N,taut,mech_state,deployed";

#[derive(Debug, Clone, PartialEq)]
pub struct TelemetryRow {
    pub t: f64,
    pub asv_x: f64,
    pub asv_y: f64,
    pub asv_speed: f64,
    pub auv_x: f64,
    pub auv_y: f64,
    pub auv_mode: AuvMode,
    pub tension: f64,
    pub taut: bool,
    pub mech_state: MechState,
    pub deployed: bool,
}

// Folds -0.0 into 0.0 so the sign of zero never leaks into the output.
fn num(v: f64) -> f64 {
    v + 0.0
}

impl TelemetryRow {
    pub fn write_csv(&self, out: &mut String) {
        let _ = writeln!(
            out,
            "{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{:.6},{},{},{}",
            num(self.t),
            num(self.asv_x),
            num(self.asv_y),
            num(self.asv_speed),
            num(self.auv_x),
            num(self.auv_y),
            self.auv_mode,
            num(self.tension),
            self.taut,
            self.mech_state,
            self.deployed,
        );
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Telemetry {
    pub rows: Vec<TelemetryRow>,
}

impl Telemetry {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(96 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            row.write_csv(&mut out);
        }
        out
    }

    pub fn write_csv<W: io::Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(self.to_csv().as_bytes())
    }
}
