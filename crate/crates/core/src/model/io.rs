//! JSON-lines task files and CSV travel matrices.

use std::io::{BufRead, Read, Write};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{CustomerId, InterestMap, Location, ModelError, PairRole, Point, Task, TaskId, TravelMatrix};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One line of a task file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskRecord {
    pub customer: String,
    pub task_id: String,
    pub x: f64,
    pub y: f64,
    pub service_s: f64,
    #[serde(default)]
    pub arrival_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deadline_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pickup_of: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dropoff_of: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location_id: Option<String>,
}

impl TaskRecord {
    pub fn into_task(self) -> Result<Task, String> {
        let pair = match (self.pickup_of, self.dropoff_of) {
            (Some(_), Some(_)) => return Err("both pickup_of and dropoff_of are set".into()),
            (Some(d), None) => Some(PairRole::PickupOf(TaskId(d))),
            (None, Some(p)) => Some(PairRole::DropoffOf(TaskId(p))),
            (None, None) => None,
        };
        for (name, v) in [("x", self.x), ("y", self.y), ("arrival_s", self.arrival_s)] {
            if !v.is_finite() {
                return Err(format!("{name} is not finite"));
            }
        }
        let task = Task {
            id: TaskId(self.task_id),
            customer: CustomerId(self.customer),
            location: Location {
                point: Point::new(self.x, self.y),
                id: self.location_id,
            },
            service_time: self.service_s,
            arrival_time: self.arrival_s,
            deadline: self.deadline_s,
            pair,
        };
        task.validate().map_err(|e| e.to_string())?;
        Ok(task)
    }
}

impl From<&Task> for TaskRecord {
    fn from(t: &Task) -> Self {
        let (pickup_of, dropoff_of) = match &t.pair {
            Some(PairRole::PickupOf(d)) => (Some(d.0.clone()), None),
            Some(PairRole::DropoffOf(p)) => (None, Some(p.0.clone())),
            None => (None, None),
        };
        Self {
            customer: t.customer.0.clone(),
            task_id: t.id.0.clone(),
            x: t.location.point.x,
            y: t.location.point.y,
            service_s: t.service_time,
            arrival_s: t.arrival_time,
            deadline_s: t.deadline,
            pickup_of,
            dropoff_of,
            location_id: t.location.id.clone(),
        }
    }
}

/// Parse a JSON-lines task file. Blank lines are skipped.
pub fn read_task_lines(reader: impl BufRead) -> Result<Vec<Task>, ParseError> {
    let mut tasks = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fail = |message: String| ParseError::Line {
            line: i + 1,
            message,
        };
        let rec: TaskRecord = serde_json::from_str(&line).map_err(|e| fail(e.to_string()))?;
        tasks.push(rec.into_task().map_err(fail)?);
    }
    Ok(tasks)
}

pub fn write_task_lines(mut w: impl Write, tasks: &[Task]) -> std::io::Result<()> {
    for t in tasks {
        serde_json::to_writer(&mut w, &TaskRecord::from(t))?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Parse a task file and group it into one interest map per customer, in
/// order of first appearance.
pub fn read_interest_maps(reader: impl BufRead) -> Result<Vec<InterestMap>, ParseError> {
    let mut grouped: IndexMap<CustomerId, Vec<Task>> = IndexMap::new();
    for t in read_task_lines(reader)? {
        grouped.entry(t.customer.clone()).or_default().push(t);
    }
    let maps = grouped
        .into_iter()
        .map(|(customer, tasks)| InterestMap { customer, tasks })
        .collect::<Vec<_>>();
    for m in &maps {
        m.validate()?;
    }
    Ok(maps)
}

/// Parse a travel matrix CSV: a header row of location ids, then one row of
/// seconds per id in header order.
pub fn read_travel_matrix(reader: impl Read) -> Result<TravelMatrix, ParseError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let ids: Vec<String> = rdr
        .headers()
        .map_err(|e| ParseError::Line {
            line: 1,
            message: e.to_string(),
        })?
        .iter()
        .map(str::to_owned)
        .collect();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| ParseError::Line {
            line,
            message: e.to_string(),
        })?;
        let row = rec
            .iter()
            .map(|s| {
                s.parse::<f64>().map_err(|e| ParseError::Line {
                    line,
                    message: format!("{s:?}: {e}"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(TravelMatrix::new(ids, rows)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn task_lines_round_trip() {
        let src = r#"{"customer":"c1","task_id":"a","x":1.0,"y":2.0,"service_s":10.0,"arrival_s":5.0}
{"customer":"c1","task_id":"p","x":0.0,"y":0.0,"service_s":0.0,"pickup_of":"d"}

{"customer":"c1","task_id":"d","x":3.0,"y":0.0,"service_s":0.0,"dropoff_of":"p","deadline_s":100.0}
{"customer":"c2","task_id":"b","x":1.0,"y":2.0,"service_s":10.0}
"#;
        let tasks = read_task_lines(src.as_bytes()).unwrap();
        assert_eq!(tasks.len(), 4);
        assert!(tasks[1].is_pickup());
        assert_eq!(tasks[2].deadline, Some(100.0));
        let mut out = Vec::new();
        write_task_lines(&mut out, &tasks).unwrap();
        assert_eq!(read_task_lines(out.as_slice()).unwrap(), tasks);

        let maps = read_interest_maps(src.as_bytes()).unwrap();
        assert_eq!(maps.len(), 2);
        assert_eq!(maps[0].tasks.len(), 3);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let src = "{\"customer\":\"c1\",\"task_id\":\"a\",\"x\":1,\"y\":2,\"service_s\":1}\nnot json\n";
        match read_task_lines(src.as_bytes()) {
            Err(ParseError::Line { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let src = "\n{\"customer\":\"c1\",\"task_id\":\"a\",\"x\":1,\"y\":2,\"service_s\":-1}\n";
        match read_task_lines(src.as_bytes()) {
            Err(ParseError::Line { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn matrix_csv() {
        let src = "a,b\n0,42\n40,0\n";
        let m = read_travel_matrix(src.as_bytes()).unwrap();
        assert_eq!(m.get(0, 1), 42.0);
        let bad = "a,b\n0,x\n40,0\n";
        match read_travel_matrix(bad.as_bytes()) {
            Err(ParseError::Line { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
