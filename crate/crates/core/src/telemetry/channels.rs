use std::io::Write;

use super::{SessionLog, TelemetryError};

pub const CSV_HEADER: [&str; 7] = ["t", "vx", "vy", "wz", "x", "y", "heading"];

/// One exported row: commanded twist and robot pose at a tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelRow {
    pub t: f64,
    pub vx: f64,
    pub vy: f64,
    pub wz: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl ChannelRow {
    fn values(&self) -> [f64; 7] {
        [self.t, self.vx, self.vy, self.wz, self.x, self.y, self.heading]
    }
}

/// Velocity/time channels of a session, one row per tick.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Channels {
    pub rows: Vec<ChannelRow>,
}

impl Channels {
    pub fn from_log(log: &SessionLog) -> Self {
        Channels {
            rows: log
                .records
                .iter()
                .map(|r| ChannelRow {
                    t: r.t,
                    vx: r.cmd.vx,
                    vy: r.cmd.vy,
                    wz: r.cmd.wz,
                    x: r.pose.x,
                    y: r.pose.y,
                    heading: r.pose.heading,
                })
                .collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), TelemetryError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(CSV_HEADER)?;
        for row in &self.rows {
            w.write_record(row.values().iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is ASCII")
    }

    pub fn parse_csv(text: &str) -> Result<Self, TelemetryError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let header = rdr.headers()?.clone();
        if header.iter().ne(CSV_HEADER) {
            return Err(TelemetryError::Parse {
                line: 1,
                reason: format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
            });
        }
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            let mut v = [0.0; 7];
            if rec.len() != 7 {
                return Err(TelemetryError::Parse {
                    line,
                    reason: format!("expected 7 columns, found {}", rec.len()),
                });
            }
            for (slot, field) in v.iter_mut().zip(rec.iter()) {
                *slot = field.parse().map_err(|_| TelemetryError::Parse {
                    line,
                    reason: format!("bad number {field:?}"),
                })?;
            }
            rows.push(ChannelRow {
                t: v[0],
                vx: v[1],
                vy: v[2],
                wz: v[3],
                x: v[4],
                y: v[5],
                heading: v[6],
            });
        }
        Ok(Channels { rows })
    }
}

/// CSV with header `t,vx,vy,wz,x,y,heading`.
pub fn export_channels(log: &SessionLog) -> String {
    Channels::from_log(log).to_csv()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapping::Twist;
    use crate::pose::RudderAttitude;
    use crate::sim::{Circle, Pose2};
    use crate::telemetry::{SessionRecorder, TickRecord};

    fn log(n: usize) -> SessionLog {
        let mut rec = SessionRecorder::new("x", 0.0, Pose2::default(), Circle { cx: 1.0, cy: 0.0, r: 0.5 }, Vec::new());
        for k in 1..=n {
            let t = k as f64 / 50.0;
            rec.record(TickRecord {
                t,
                attitude: RudderAttitude::default(),
                raw: Twist::ZERO,
                cmd: Twist::new(t.sin(), -t / 3.0, 1e-20),
                pose: Pose2 { x: t.exp(), y: -0.0, heading: 3.0 },
                events: vec![],
            })
            .unwrap();
        }
        rec.finalize()
    }

    #[test]
    fn empty_log_exports_header_only() {
        assert_eq!(export_channels(&log(0)), "t,vx,vy,wz,x,y,heading\n");
    }

    #[test]
    fn one_line_per_record() {
        let csv = export_channels(&log(37));
        assert_eq!(csv.lines().count(), 38);
    }

    #[test]
    fn export_parse_export_is_identical() {
        let csv = export_channels(&log(200));
        let parsed = Channels::parse_csv(&csv).unwrap();
        assert_eq!(parsed.rows.len(), 200);
        assert_eq!(parsed.to_csv(), csv);
    }

    #[test]
    fn rejects_foreign_csv() {
        assert!(Channels::parse_csv("a,b\n1,2\n").is_err());
        assert!(Channels::parse_csv("t,vx,vy,wz,x,y,heading\n1,2,3,4,5,6,z\n").is_err());
    }
}
