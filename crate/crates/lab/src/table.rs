//! CSV files with header rows and 17-significant-digit decimals.

use std::io::{Read, Write};

use serde::Deserialize;

use semiquantum_core::analysis::{PoincareSection, SectionPoint};
use semiquantum_core::integrator::{CrossingDirection, Trajectory};
use semiquantum_core::model::invariants;
use semiquantum_core::ModelParams;

use crate::error::{LabError, Result};

pub const TRAJECTORY_HEADER: [&str; 8] = ["t", "n1", "ominus", "oplus", "x", "p", "e_eff", "i_inv"];
pub const SECTION_HEADER: [&str; 6] = ["t_cross", "ominus", "oplus", "n1", "p", "direction"];

/// Scientific notation with 16 digits after the point, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub n1: f64,
    pub ominus: f64,
    pub oplus: f64,
    pub x: f64,
    pub p: f64,
    pub e_eff: f64,
    pub i_inv: f64,
}

impl TrajectoryRow {
    fn fields(&self) -> [f64; 8] {
        [self.t, self.n1, self.ominus, self.oplus, self.x, self.p, self.e_eff, self.i_inv]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct SectionRow {
    pub t_cross: f64,
    pub ominus: f64,
    pub oplus: f64,
    pub n1: f64,
    pub p: f64,
    pub direction: i8,
}

impl From<&SectionPoint> for SectionRow {
    fn from(pt: &SectionPoint) -> Self {
        SectionRow {
            t_cross: pt.t_cross,
            ominus: pt.om,
            oplus: pt.op,
            n1: pt.n1,
            p: pt.p,
            direction: pt.direction.sign(),
        }
    }
}

impl SectionRow {
    pub fn crossing_direction(&self) -> Option<CrossingDirection> {
        match self.direction {
            1 => Some(CrossingDirection::Up),
            -1 => Some(CrossingDirection::Down),
            _ => None,
        }
    }
}

pub fn trajectory_rows(traj: &Trajectory, p: &ModelParams) -> Vec<TrajectoryRow> {
    traj.samples
        .iter()
        .map(|s| {
            let inv = invariants(&s.state, p);
            TrajectoryRow {
                t: s.t,
                n1: s.state.n1,
                ominus: s.state.om,
                oplus: s.state.op,
                x: s.state.x,
                p: s.state.p,
                e_eff: inv.e_eff,
                i_inv: inv.i_inv,
            }
        })
        .collect()
}

pub fn section_rows(section: &PoincareSection) -> Vec<SectionRow> {
    section.points.iter().map(SectionRow::from).collect()
}

pub fn write_trajectory<W: Write>(out: W, rows: &[TrajectoryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_HEADER)?;
    for r in rows {
        w.write_record(r.fields().map(fmt_f64))?;
    }
    flush(w)
}

pub fn write_section<W: Write>(out: W, rows: &[SectionRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SECTION_HEADER)?;
    for r in rows {
        let mut rec: Vec<String> = [r.t_cross, r.ominus, r.oplus, r.n1, r.p]
            .into_iter()
            .map(fmt_f64)
            .collect();
        rec.push(r.direction.to_string());
        w.write_record(&rec)?;
    }
    flush(w)
}

pub(crate) fn flush<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush().map_err(|e| LabError::io("cannot write csv", e))
}

fn read_rows<R: Read, T: for<'de> Deserialize<'de>>(input: R, header: &[&str]) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(input);
    let found: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if found != header {
        return Err(LabError::config(format!(
            "unexpected csv header {found:?}, expected {header:?}"
        )));
    }
    r.deserialize().map(|row| Ok(row?)).collect()
}

pub fn read_trajectory<R: Read>(input: R) -> Result<Vec<TrajectoryRow>> {
    read_rows(input, &TRAJECTORY_HEADER)
}

pub fn read_section<R: Read>(input: R) -> Result<Vec<SectionRow>> {
    read_rows(input, &SECTION_HEADER)
}
