//! Trajectory value types, corpus ingestion/persistence and windowing.
//!
//! Coordinates are kept in the pixel units of the source video. Nothing is
//! normalized on the way in or out, and floats are written in their shortest
//! round-trip form so a save/load cycle is bit-exact.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::{SVector, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A 2-D observation in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dist(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn to_vector(self) -> Vector2<f64> {
        Vector2::new(self.x, self.y)
    }
}

impl From<Vector2<f64>> for Point2 {
    fn from(v: Vector2<f64>) -> Self {
        Point2::new(v[0], v[1])
    }
}

/// One pedestrian track.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    id: String,
    points: Vec<Point2>,
    frames: Option<Vec<i64>>,
}

impl Trajectory {
    pub fn new(id: impl Into<String>, points: Vec<Point2>) -> Result<Self> {
        Self::build(id.into(), points, None)
    }

    pub fn with_frames(id: impl Into<String>, points: Vec<Point2>, frames: Vec<i64>) -> Result<Self> {
        Self::build(id.into(), points, Some(frames))
    }

    fn build(id: String, points: Vec<Point2>, frames: Option<Vec<i64>>) -> Result<Self> {
        let invalid = |message: &str| Error::InvalidTrajectory {
            id: id.clone(),
            message: message.to_string(),
        };
        if points.is_empty() {
            return Err(invalid("trajectory has no points"));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(invalid("non-finite coordinate"));
        }
        if let Some(frames) = &frames {
            if frames.len() != points.len() {
                return Err(invalid("frame count does not match point count"));
            }
            if frames.windows(2).any(|w| w[1] <= w[0]) {
                return Err(invalid("frame indices not strictly increasing"));
            }
        }
        Ok(Self { id, points, frames })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn frames(&self) -> Option<&[i64]> {
        self.frames.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Three successive points `(y_t, y_{t+1}, y_{t+2})` flattened to R⁶.
pub type Window6 = SVector<f64, 6>;

/// Overlapping stride-1 windows: `τ − 2` of them.
pub fn windowize(traj: &Trajectory) -> Result<Vec<Window6>> {
    windowize_points(traj.points())
}

pub fn windowize_points(points: &[Point2]) -> Result<Vec<Window6>> {
    if points.len() < 3 {
        return Err(Error::TooShortToWindow(points.len()));
    }
    Ok(points
        .windows(3)
        .map(|w| Window6::from_column_slice(&[w[0].x, w[0].y, w[1].x, w[1].y, w[2].x, w[2].y]))
        .collect())
}

/// Indices `i ≥ 1` where the label differs from its predecessor.
pub fn segmentation_points_from_labels(labels: &[usize]) -> Vec<usize> {
    (1..labels.len())
        .filter(|&i| labels[i] != labels[i - 1])
        .collect()
}

/// A switch detected at window `i` lands on that window's center point.
pub fn window_to_point_index(window: usize) -> usize {
    window + 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Csv,
    Jsonl,
}

impl CorpusFormat {
    /// Guess from the file extension; anything that is not `.jsonl`/`.json` is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => CorpusFormat::Jsonl,
            _ => CorpusFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub trajectories: Vec<Trajectory>,
    pub source: String,
}

const CSV_HEADER: [&str; 4] = ["id", "frame", "x", "y"];

#[derive(Serialize, Deserialize)]
struct JsonTrajectory {
    id: String,
    points: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    frames: Option<Vec<i64>>,
}

impl Corpus {
    pub fn new(trajectories: Vec<Trajectory>, source: impl Into<String>) -> Result<Self> {
        let mut seen = HashSet::new();
        for t in &trajectories {
            if !seen.insert(t.id()) {
                return Err(Error::DuplicateId(t.id().to_string()));
            }
        }
        Ok(Self {
            trajectories,
            source: source.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Trajectory> {
        self.trajectories.iter().find(|t| t.id() == id)
    }

    pub fn load(path: &Path, format: CorpusFormat) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let source = path.display().to_string();
        match format {
            CorpusFormat::Csv => Self::read_csv(file, source),
            CorpusFormat::Jsonl => Self::read_jsonl(BufReader::new(file), source),
        }
    }

    pub fn save(&self, path: &Path, format: CorpusFormat) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        match format {
            CorpusFormat::Csv => self.write_csv(&mut out),
            CorpusFormat::Jsonl => self.write_jsonl(&mut out),
        }
        .and_then(|_| out.flush().map_err(|e| Error::io(path, e)))
    }

    /// Reads `id,frame,x,y` rows. A leading header row is skipped when present.
    pub fn read_csv<R: std::io::Read>(reader: R, source: String) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);

        let mut trajectories: Vec<Trajectory> = Vec::new();
        let mut seen: HashSet<String> = HashSet::new();
        let mut current: Option<(String, Vec<(i64, Point2)>)> = None;

        let finish = |block: (String, Vec<(i64, Point2)>), out: &mut Vec<Trajectory>| -> Result<()> {
            let (id, mut rows) = block;
            rows.sort_by_key(|(f, _)| *f);
            let (frames, points): (Vec<i64>, Vec<Point2>) = rows.into_iter().unzip();
            out.push(Trajectory::with_frames(id, points, frames)?);
            Ok(())
        };

        for (n, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| Error::Parse {
                line: e.position().map(|p| p.line() as usize).unwrap_or(n + 1),
                message: e.to_string(),
            })?;
            let line = record.position().map(|p| p.line() as usize).unwrap_or(n + 1);
            if n == 0 && record.iter().eq(CSV_HEADER.iter().copied()) {
                continue;
            }
            if record.len() != 4 {
                return Err(Error::Parse {
                    line,
                    message: format!("expected 4 fields (id,frame,x,y), found {}", record.len()),
                });
            }
            let parse_f = |i: usize, name: &str| -> Result<f64> {
                let v: f64 = record[i].parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("field `{name}` is not a number: `{}`", &record[i]),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        line,
                        message: format!("field `{name}` is not finite"),
                    });
                }
                Ok(v)
            };
            let frame: i64 = record[1].parse().map_err(|_| Error::Parse {
                line,
                message: format!("field `frame` is not an integer: `{}`", &record[1]),
            })?;
            let point = Point2::new(parse_f(2, "x")?, parse_f(3, "y")?);
            let id = &record[0];

            match &mut current {
                Some((cur, rows)) if cur == id => rows.push((frame, point)),
                _ => {
                    if !seen.insert(id.to_string()) {
                        return Err(Error::DuplicateId(id.to_string()));
                    }
                    if let Some(block) = current.take() {
                        finish(block, &mut trajectories)?;
                    }
                    current = Some((id.to_string(), vec![(frame, point)]));
                }
            }
        }
        if let Some(block) = current.take() {
            finish(block, &mut trajectories)?;
        }
        Ok(Self {
            trajectories,
            source,
        })
    }

    pub fn read_jsonl<R: BufRead>(reader: R, source: String) -> Result<Self> {
        let mut trajectories = Vec::new();
        let mut seen = HashSet::new();
        for (n, line) in reader.lines().enumerate() {
            let line_no = n + 1;
            let line = line.map_err(|e| Error::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: JsonTrajectory = serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
            if !seen.insert(rec.id.clone()) {
                return Err(Error::DuplicateId(rec.id));
            }
            let points = rec.points.iter().map(|p| Point2::new(p[0], p[1])).collect();
            let traj = match rec.frames {
                Some(frames) => Trajectory::with_frames(rec.id, points, frames),
                None => Trajectory::new(rec.id, points),
            }
            .map_err(|e| Error::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
            trajectories.push(traj);
        }
        Ok(Self {
            trajectories,
            source,
        })
    }

    /// Trajectories without frame indices are written with frames `0..τ`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::Parse {
            line: 0,
            message: e.to_string(),
        };
        wtr.write_record(CSV_HEADER).map_err(csv_err)?;
        for t in &self.trajectories {
            for (i, p) in t.points().iter().enumerate() {
                let frame = t.frames().map_or(i as i64, |f| f[i]);
                wtr.write_record([
                    t.id().to_string(),
                    frame.to_string(),
                    p.x.to_string(),
                    p.y.to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
        wtr.flush().map_err(|e| Error::io(&self.source, e))
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for t in &self.trajectories {
            let rec = JsonTrajectory {
                id: t.id().to_string(),
                points: t.points().iter().map(|p| [p.x, p.y]).collect(),
                frames: t.frames().map(<[i64]>::to_vec),
            };
            let line = serde_json::to_string(&rec).map_err(|e| Error::Parse {
                line: 0,
                message: e.to_string(),
            })?;
            writeln!(out, "{line}").map_err(|e| Error::io(&self.source, e))?;
        }
        Ok(())
    }
}
