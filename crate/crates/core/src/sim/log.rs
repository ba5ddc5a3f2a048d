//! Per-tick simulation records, the CSV writer and the run summary.

use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::geometry::{Point3, Pose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Following,
    /// Zero velocity while a replanned window is computed.
    HoveringReplan,
    Done,
    /// Replanning kept failing; the run ends here.
    Stuck,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Following => "following",
            Mode::HoveringReplan => "hovering-replan",
            Mode::Done => "done",
            Mode::Stuck => "stuck",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickRecord {
    pub time: f64,
    /// Pose at the start of the tick.
    pub pose: Pose,
    pub velocity: Point3,
    pub yaw_rate: f64,
    pub mode: Mode,
    pub replans: usize,
    /// Distance to the closest true obstacle point; infinite when there is none.
    pub min_obstacle_dis: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub scenario: String,
    pub completed: bool,
    pub final_mode: Mode,
    pub ticks: usize,
    pub sim_time_s: f64,
    pub replans: usize,
    pub replan_failures: usize,
    /// `None` when no obstacle was ever present.
    pub min_obstacle_dis: Option<f64>,
    /// Energy ratio of the flown path against the target trajectory.
    pub path_cost: Option<f64>,
    pub flown_length: f64,
    /// Wall-clock planner time per replan attempt.
    pub planner_latency_ms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimLog {
    pub records: Vec<TickRecord>,
    pub summary: SimSummary,
}

impl SimLog {
    pub const CSV_HEADER: &'static str =
        "time,x,y,z,yaw,vx,vy,vz,yaw_rate,mode,replans,min_obstacle_dis";

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for r in &self.records {
            let p = r.pose.position;
            let v = r.velocity;
            writeln!(
                w,
                "{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{},{:.6}",
                r.time, p.x, p.y, p.z, r.pose.yaw, v.x, v.y, v.z, r.yaw_rate, r.mode, r.replans, r.min_obstacle_dis
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }

    pub fn write_summary_json<W: Write>(&self, w: W) -> io::Result<()> {
        serde_json::to_writer_pretty(w, &self.summary).map_err(io::Error::other)
    }

    pub fn positions(&self) -> Vec<Point3> {
        self.records.iter().map(|r| r.pose.position).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_rows_match_header() {
        let rec = TickRecord {
            time: 0.0,
            pose: Pose::at(Point3::new(1.0, 2.0, 3.0)),
            velocity: Point3::ORIGIN,
            yaw_rate: 0.0,
            mode: Mode::HoveringReplan,
            replans: 1,
            min_obstacle_dis: f64::INFINITY,
        };
        let log = SimLog {
            records: vec![rec],
            summary: SimSummary {
                scenario: "t".into(),
                completed: false,
                final_mode: Mode::Stuck,
                ticks: 1,
                sim_time_s: 0.0,
                replans: 1,
                replan_failures: 0,
                min_obstacle_dis: None,
                path_cost: None,
                flown_length: 0.0,
                planner_latency_ms: Vec::new(),
            },
        };
        let csv = log.to_csv_string();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], SimLog::CSV_HEADER);
        assert_eq!(lines[1].split(',').count(), lines[0].split(',').count());
        assert!(lines[1].contains(",hovering-replan,1,inf"));
        let json = serde_json::to_string(&log.summary).unwrap();
        assert!(json.contains("\"final_mode\":\"stuck\""));
    }
}
