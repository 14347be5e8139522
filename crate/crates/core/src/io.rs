//! Artifact files.
//!
//! Structured artifacts are JSON envelopes `{"data", "formatVersion", "kind"}`
//! with sorted keys, two-space indentation and every float written with 17
//! significant digits, so a file read and written again is byte-identical.
//! Traces and per-horizon series are CSV.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::eval::{EpsilonReport, ExPostReport};
use crate::game::{ConvergenceTrace, GameSpec, StrategyProfile, ValueTable};
use crate::hostility::{build_game, HostilityGameParams};
use crate::solver::Solution;

pub const FORMAT_VERSION: u64 = 1;

/// Pretty JSON with floats in `{:.16e}` form.
struct CanonicalFormatter(PrettyFormatter<'static>);

impl Formatter for CanonicalFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Writes any JSON value canonically. Object keys come out sorted because
/// `serde_json::Map` is ordered.
pub fn canonical_json(value: &Value) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, CanonicalFormatter(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArtifactKind {
    HostilityParams,
    Game,
    Profile,
    Values,
    Checkpoint,
    EpsilonReport,
    ExPostReport,
}

impl ArtifactKind {
    pub const ALL: [ArtifactKind; 7] = [
        ArtifactKind::HostilityParams,
        ArtifactKind::Game,
        ArtifactKind::Profile,
        ArtifactKind::Values,
        ArtifactKind::Checkpoint,
        ArtifactKind::EpsilonReport,
        ArtifactKind::ExPostReport,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ArtifactKind::HostilityParams => "hostility-params",
            ArtifactKind::Game => "game",
            ArtifactKind::Profile => "profile",
            ArtifactKind::Values => "values",
            ArtifactKind::Checkpoint => "checkpoint",
            ArtifactKind::EpsilonReport => "epsilon-report",
            ArtifactKind::ExPostReport => "ex-post-report",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// Any artifact this crate writes.
#[derive(Clone, Debug, PartialEq)]
pub enum Artifact {
    HostilityParams(HostilityGameParams),
    Game(GameSpec),
    Profile(StrategyProfile),
    Values(ValueTable),
    Checkpoint(Box<Solution>),
    EpsilonReport(EpsilonReport),
    ExPostReport(ExPostReport),
}

impl Artifact {
    pub fn kind(&self) -> ArtifactKind {
        match self {
            Artifact::HostilityParams(_) => ArtifactKind::HostilityParams,
            Artifact::Game(_) => ArtifactKind::Game,
            Artifact::Profile(_) => ArtifactKind::Profile,
            Artifact::Values(_) => ArtifactKind::Values,
            Artifact::Checkpoint(_) => ArtifactKind::Checkpoint,
            Artifact::EpsilonReport(_) => ArtifactKind::EpsilonReport,
            Artifact::ExPostReport(_) => ArtifactKind::ExPostReport,
        }
    }

    fn data(&self) -> Result<Value> {
        Ok(match self {
            Artifact::HostilityParams(x) => serde_json::to_value(x)?,
            Artifact::Game(x) => serde_json::to_value(x)?,
            Artifact::Profile(x) => serde_json::to_value(x)?,
            Artifact::Values(x) => serde_json::to_value(x)?,
            Artifact::Checkpoint(x) => serde_json::to_value(x)?,
            Artifact::EpsilonReport(x) => serde_json::to_value(x)?,
            Artifact::ExPostReport(x) => serde_json::to_value(x)?,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let mut env = serde_json::Map::new();
        env.insert("data".into(), self.data()?);
        env.insert("formatVersion".into(), Value::from(FORMAT_VERSION));
        env.insert("kind".into(), Value::from(self.kind().name()));
        canonical_json(&Value::Object(env))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut env: serde_json::Map<String, Value> = serde_json::from_str(text)?;
        let version = env.get("formatVersion").and_then(Value::as_u64);
        if version != Some(FORMAT_VERSION) {
            return Err(Error::Format(format!(
                "unsupported formatVersion {:?}; expected {FORMAT_VERSION}",
                env.get("formatVersion")
            )));
        }
        let kind_name = env
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Format("artifact has no kind".into()))?
            .to_string();
        let kind = ArtifactKind::from_name(&kind_name)
            .ok_or_else(|| Error::Format(format!("unknown artifact kind {kind_name:?}")))?;
        let data = env
            .remove("data")
            .ok_or_else(|| Error::Format("artifact has no data".into()))?;
        fn de<T: DeserializeOwned>(v: Value) -> Result<T> {
            Ok(serde_json::from_value(v)?)
        }
        Ok(match kind {
            ArtifactKind::HostilityParams => Artifact::HostilityParams(de(data)?),
            ArtifactKind::Game => Artifact::Game(de(data)?),
            ArtifactKind::Profile => Artifact::Profile(de(data)?),
            ArtifactKind::Values => Artifact::Values(de(data)?),
            ArtifactKind::Checkpoint => Artifact::Checkpoint(Box::new(de(data)?)),
            ArtifactKind::EpsilonReport => Artifact::EpsilonReport(de(data)?),
            ArtifactKind::ExPostReport => Artifact::ExPostReport(de(data)?),
        })
    }
}

pub fn write_artifact(path: &Path, artifact: &Artifact) -> Result<()> {
    let text = artifact.to_json()?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    // Write then rename so an interrupted run never leaves half a checkpoint.
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, text)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_artifact(path: &Path) -> Result<Artifact> {
    Artifact::from_json(&fs::read_to_string(path)?)
}

/// Reads a game from either hostility parameters or an explicit game file.
pub fn read_game(path: &Path) -> Result<GameSpec> {
    match read_artifact(path)? {
        Artifact::HostilityParams(p) => build_game(&p),
        Artifact::Game(g) => Ok(g),
        other => Err(Error::Format(format!(
            "{} holds a {}, not a game",
            path.display(),
            other.kind().name()
        ))),
    }
}

pub fn read_profile(path: &Path) -> Result<StrategyProfile> {
    match read_artifact(path)? {
        Artifact::Profile(p) => Ok(p),
        Artifact::Checkpoint(c) => Ok(c.profile),
        other => Err(Error::Format(format!(
            "{} holds a {}, not a strategy profile",
            path.display(),
            other.kind().name()
        ))),
    }
}

pub fn read_checkpoint(path: &Path) -> Result<Solution> {
    match read_artifact(path)? {
        Artifact::Checkpoint(c) => Ok(*c),
        other => Err(Error::Format(format!(
            "{} holds a {}, not a checkpoint",
            path.display(),
            other.kind().name()
        ))),
    }
}

pub fn trace_csv(trace: &ConvergenceTrace) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if trace.rows.is_empty() {
        w.write_record(["outerIteration", "maxStrategyDelta", "maxValueDelta", "epsilon", "wallSeconds"])?;
    }
    for r in &trace.rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv writes UTF-8"))
}

pub fn read_trace_csv(text: &str) -> Result<ConvergenceTrace> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let rows = r.deserialize().collect::<std::result::Result<_, _>>()?;
    Ok(ConvergenceTrace { rows })
}

/// Per-horizon deviation values, one column per player.
pub fn series_csv(players: &[String], series: &[Vec<f64>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["horizon".to_string()];
    header.extend(players.iter().cloned());
    w.write_record(&header)?;
    for (h, row) in series.iter().enumerate() {
        let mut rec = vec![h.to_string()];
        rec.extend(row.iter().map(|v| format!("{v:.16e}")));
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv writes UTF-8"))
}
