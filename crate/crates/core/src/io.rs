//! Text formats: activity streams, social edge lists and JSON-lines reports.
//!
//! Stream lines are `timestamp<TAB>kind<TAB>actor<TAB>target` with kind `U`
//! (user target) or `C` (content target). Edge-list lines are
//! `follower<TAB>followee`. In both, `#` starts a comment line and blank
//! lines are ignored.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Activity, Mode, SocialGraph, Target, UserId};

/// Largest tolerated fraction of malformed lines in an input file.
pub const MAX_MALFORMED_FRACTION: f64 = 0.01;

/// Parses one stream line. `Ok(None)` for comments and blank lines.
pub fn parse_activity_line(line: &str) -> std::result::Result<Option<Activity>, String> {
    let line = line.trim_end_matches(['\r', '\n']);
    if line.trim().is_empty() || line.starts_with('#') {
        return Ok(None);
    }
    let fields: Vec<&str> = line.split('\t').collect();
    let [ts, kind, actor, target] = fields[..] else {
        return Err(format!("expected 4 tab-separated fields, found {}", fields.len()));
    };
    let timestamp = ts.parse().map_err(|_| format!("bad timestamp {ts:?}"))?;
    let actor: UserId = actor.parse().map_err(|_| format!("bad actor id {actor:?}"))?;
    let target_id: u32 = target.parse().map_err(|_| format!("bad target id {target:?}"))?;
    let target = match kind {
        "U" => Target::User(target_id),
        "C" => Target::Content(target_id),
        other => return Err(format!("unknown activity kind {other:?}")),
    };
    Activity::new(actor, target, timestamp)
        .map(Some)
        .map_err(|e| e.to_string())
}

pub fn format_activity(a: &Activity) -> String {
    match a.target {
        Target::User(v) => format!("{}\tU\t{}\t{}", a.timestamp, a.actor, v),
        Target::Content(c) => format!("{}\tC\t{}\t{}", a.timestamp, a.actor, c),
    }
}

/// Tally of skipped lines, checked against [`MAX_MALFORMED_FRACTION`] once
/// the input is exhausted.
#[derive(Clone, Debug, Default)]
struct MalformedTally {
    records: usize,
    malformed: usize,
    first: Option<(usize, String)>,
}

impl MalformedTally {
    fn record(&mut self, line: usize, msg: String) {
        self.malformed += 1;
        log::warn!("line {line}: skipping malformed record: {msg}");
        if self.first.is_none() {
            self.first = Some((line, msg));
        }
    }

    fn check(&self, path: &str) -> Result<()> {
        let total = self.records + self.malformed;
        if total > 0 && self.malformed as f64 > MAX_MALFORMED_FRACTION * total as f64 {
            let (line, msg) = self.first.clone().unwrap_or_default();
            return Err(Error::Parse {
                path: path.to_string(),
                line,
                msg: format!("{} of {total} records malformed, first: {msg}", self.malformed),
            });
        }
        Ok(())
    }
}

/// Streaming reader over an activity file. Yields `(line number, activity)`
/// and, after the last record, an error if too many lines were malformed.
pub struct StreamReader<R> {
    lines: std::io::Lines<R>,
    path: String,
    line_no: usize,
    tally: MalformedTally,
    done: bool,
}

impl StreamReader<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: 0,
            msg: e.to_string(),
        })?;
        Ok(Self::new(BufReader::new(file), path.display().to_string()))
    }
}

impl<R: BufRead> StreamReader<R> {
    pub fn new(reader: R, path: impl Into<String>) -> Self {
        StreamReader {
            lines: reader.lines(),
            path: path.into(),
            line_no: 0,
            tally: MalformedTally::default(),
            done: false,
        }
    }

    pub fn malformed(&self) -> usize {
        self.tally.malformed
    }
}

impl<R: BufRead> Iterator for StreamReader<R> {
    type Item = Result<(usize, Activity)>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        loop {
            let Some(line) = self.lines.next() else {
                self.done = true;
                return self.tally.check(&self.path).err().map(Err);
            };
            self.line_no += 1;
            let line = match line {
                Ok(l) => l,
                Err(e) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
            };
            match parse_activity_line(&line) {
                Ok(None) => {}
                Ok(Some(a)) => {
                    self.tally.records += 1;
                    return Some(Ok((self.line_no, a)));
                }
                Err(msg) => self.tally.record(self.line_no, msg),
            }
        }
    }
}

/// Reads a whole stream file into memory.
pub fn parse_stream_file(path: impl AsRef<Path>) -> Result<Vec<Activity>> {
    StreamReader::open(path)?.map(|r| r.map(|(_, a)| a)).collect()
}

pub fn parse_stream<R: BufRead>(reader: R) -> Result<Vec<Activity>> {
    StreamReader::new(reader, "<input>").map(|r| r.map(|(_, a)| a)).collect()
}

pub fn write_stream<W: Write>(mut out: W, activities: &[Activity]) -> Result<()> {
    for a in activities {
        writeln!(out, "{}", format_activity(a))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_stream_file(path: impl AsRef<Path>, activities: &[Activity]) -> Result<()> {
    let file = File::create(path)?;
    write_stream(std::io::BufWriter::new(file), activities)
}

/// Reads a `follower<TAB>followee` edge list. With `undirected` each line
/// adds both directions.
pub fn read_social_graph<R: BufRead>(reader: R, path: &str, undirected: bool) -> Result<SocialGraph> {
    let mut graph = SocialGraph::new();
    let mut tally = MalformedTally::default();
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed = line
            .split_once('\t')
            .and_then(|(a, b)| Some((a.parse::<UserId>().ok()?, b.trim().parse::<UserId>().ok()?)));
        match parsed {
            Some((a, b)) if a != b => {
                tally.records += 1;
                graph.add_edge(a, b);
                if undirected {
                    graph.add_edge(b, a);
                }
            }
            Some(_) => tally.record(k + 1, "self-loop".into()),
            None => tally.record(k + 1, format!("expected follower<TAB>followee, got {line:?}")),
        }
    }
    tally.check(path)?;
    Ok(graph)
}

pub fn read_social_graph_file(path: impl AsRef<Path>, undirected: bool) -> Result<SocialGraph> {
    let path = path.as_ref();
    let file = File::open(path)?;
    read_social_graph(BufReader::new(file), &path.display().to_string(), undirected)
}

pub fn write_social_graph<W: Write>(mut out: W, graph: &SocialGraph) -> Result<()> {
    for (a, b) in graph.edges() {
        writeln!(out, "{a}\t{b}")?;
    }
    out.flush()?;
    Ok(())
}

/// Outcome class of a window report.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowStatus {
    Ok,
    NoSignal,
}

/// Which distribution a report's estimate describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateKind {
    /// Over all nodes (population known).
    Theta,
    /// Over nodes with at least one triangle.
    ThetaPlus,
}

/// One line of the JSON-lines report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowReport {
    pub window: u64,
    pub start: u64,
    pub mode: Mode,
    pub p: f64,
    pub p_prime: f64,
    pub sampled_activities: usize,
    /// Sparse `[j, count]` pairs over observed nodes.
    pub histogram: Vec<(usize, u64)>,
    pub status: WindowStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate_kind: Option<EstimateKind>,
    /// Sparse `[i, probability]` pairs; `null` when nothing was estimated.
    pub estimate: Option<Vec<(usize, f64)>>,
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_plus: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kl: Option<f64>,
    pub flagged: bool,
    pub base: bool,
    pub em_iterations: Option<usize>,
    pub converged: Option<bool>,
    pub wall_ms: f64,
}

pub fn write_report_line<W: Write>(mut out: W, report: &WindowReport) -> Result<()> {
    serde_json::to_writer(&mut out, report)?;
    out.write_all(b"\n")?;
    Ok(())
}
