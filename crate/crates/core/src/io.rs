//! File formats: AIMT trajectory files, analysis results, ground truth.
//!
//! Layouts are specified byte for byte in `docs/formats.md`. Result and
//! ground-truth documents are JSON with every float written to 17 significant
//! digits, so a write → read cycle reproduces each `f64` exactly.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::articulation::{AnalysisConfig, Normalization, Part, PartMobilityResult};
use crate::error::{Error, Result};
use crate::geom::{JointParams, JointType, Mat3, RigidTransform, Vec3};
use crate::synth::{GroundTruth, GroundTruthPart, PointLabel};
use crate::trajectory::{TrajectorySet, TIME_MATCH_TOL};

pub const AIMT_MAGIC: &str = "AIMT";
pub const AIMT_VERSION: u32 = 1;
pub const RESULT_SCHEMA_VERSION: u32 = 1;
pub const GROUND_TRUTH_SCHEMA_VERSION: u32 = 1;

/// Ground-truth label codes; parts use their index.
pub const LABEL_BASE: i64 = -1;
pub const LABEL_OUTLIER: i64 = -2;

// ---------------------------------------------------------------------------
// AIMT trajectories

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Encoding {
    Text,
    #[default]
    Binary,
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Encoding::Text => "text",
            Encoding::Binary => "binary",
        })
    }
}

impl FromStr for Encoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(Encoding::Text),
            "binary" => Ok(Encoding::Binary),
            _ => Err(Error::invalid(format!(
                "unknown encoding '{s}' (expected text or binary)"
            ))),
        }
    }
}

/// Serializes `set` as an AIMT file. Ids are not stored: a reader assigns
/// `0..N` in row order.
pub fn encode_trajectories(set: &TrajectorySet, encoding: Encoding) -> Vec<u8> {
    let (n, t) = (set.len(), set.num_frames());
    let mut out = format!(
        "{AIMT_MAGIC} {AIMT_VERSION}\npoints {n}\nframes {t}\nencoding {encoding}\nend_header\n"
    )
    .into_bytes();
    match encoding {
        Encoding::Text => {
            let line = |values: &mut dyn Iterator<Item = f64>| {
                values
                    .map(|v| format!("{v:?}"))
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            out.extend(line(&mut set.timestamps().iter().copied()).bytes());
            out.push(b'\n');
            for i in 0..n {
                let mut coords = set.track(i).iter().flat_map(|p| [p.x, p.y, p.z]);
                out.extend(line(&mut coords).bytes());
                out.push(b'\n');
            }
        }
        Encoding::Binary => {
            out.reserve(8 * (t + 3 * n * t));
            for v in set.timestamps() {
                out.extend_from_slice(&v.to_le_bytes());
            }
            for p in set.positions() {
                for v in [p.x, p.y, p.z] {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
    }
    out
}

/// Parses an AIMT file. `source` names the input in diagnostics.
pub fn decode_trajectories(bytes: &[u8], source: &str) -> Result<TrajectorySet> {
    let header = parse_header(bytes, source)?;
    let body = &bytes[header.body_offset..];
    let (timestamps, positions) = match header.encoding {
        Encoding::Text => parse_text_body(body, &header, source)?,
        Encoding::Binary => parse_binary_body(body, &header, source)?,
    };
    TrajectorySet::new((0..header.points).collect(), timestamps, positions)
}

pub fn write_trajectories(
    set: &TrajectorySet,
    path: impl AsRef<Path>,
    encoding: Encoding,
) -> Result<()> {
    write_bytes(path.as_ref(), &encode_trajectories(set, encoding))
}

pub fn read_trajectories(path: impl AsRef<Path>) -> Result<TrajectorySet> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_trajectories(&bytes, &path.display().to_string())
}

struct Header {
    points: usize,
    frames: usize,
    encoding: Encoding,
    body_offset: usize,
}

fn parse_header(bytes: &[u8], source: &str) -> Result<Header> {
    let mut offset = 0;
    let mut next_line = |number: usize, field: &str| -> Result<String> {
        let rest = &bytes[offset..];
        let Some(len) = rest.iter().position(|&b| b == b'\n') else {
            return Err(Error::format(
                source,
                format!("line {number}"),
                field,
                "header ends before this line",
            ));
        };
        let line = std::str::from_utf8(&rest[..len]).map_err(|_| {
            Error::format(source, format!("line {number}"), field, "not valid UTF-8")
        })?;
        offset += len + 1;
        Ok(line.trim_end_matches('\r').to_owned())
    };

    let magic = next_line(1, "magic")?;
    let mut words = magic.split(' ');
    if words.next() != Some(AIMT_MAGIC) {
        return Err(Error::format(
            source,
            "line 1",
            "magic",
            format!("expected '{AIMT_MAGIC}', found '{magic}'"),
        ));
    }
    match (words.next(), words.next()) {
        (Some(v), None) if v.parse::<u32>() == Ok(AIMT_VERSION) => {}
        _ => {
            return Err(Error::format(
                source,
                "line 1",
                "version",
                format!("expected version {AIMT_VERSION}, found '{magic}'"),
            ))
        }
    }

    let mut count = |number: usize, key: &str| -> Result<usize> {
        let line = next_line(number, key)?;
        let value = keyed(&line, key).and_then(|v| v.parse::<usize>().ok());
        match value {
            Some(v) if v > 0 => Ok(v),
            _ => Err(Error::format(
                source,
                format!("line {number}"),
                key,
                format!("expected '{key} <positive integer>', found '{line}'"),
            )),
        }
    };
    let points = count(2, "points")?;
    let frames = count(3, "frames")?;

    let line = next_line(4, "encoding")?;
    let encoding = keyed(&line, "encoding")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| {
            Error::format(
                source,
                "line 4",
                "encoding",
                format!("expected 'encoding text' or 'encoding binary', found '{line}'"),
            )
        })?;

    let line = next_line(5, "end_header")?;
    if line != "end_header" {
        return Err(Error::format(
            source,
            "line 5",
            "end_header",
            format!("expected 'end_header', found '{line}'"),
        ));
    }
    Ok(Header {
        points,
        frames,
        encoding,
        body_offset: offset,
    })
}

fn keyed<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    line.strip_prefix(key)?.strip_prefix(' ')
}

/// 1-based line number of the first body line.
const BODY_FIRST_LINE: usize = 6;

fn parse_text_body(body: &[u8], header: &Header, source: &str) -> Result<(Vec<f64>, Vec<Vec3>)> {
    let text = std::str::from_utf8(body).map_err(|e| {
        Error::format(
            source,
            format!("byte {}", header.body_offset + e.valid_up_to()),
            "body",
            "not valid UTF-8",
        )
    })?;
    let text = text.strip_suffix('\n').unwrap_or(text);
    let mut lines = text.split('\n').map(|l| l.trim_end_matches('\r'));
    let (n, t) = (header.points, header.frames);

    let line_no = BODY_FIRST_LINE;
    let line = lines.next().unwrap_or("");
    let timestamps = parse_numbers(line, t, source, line_no, |k| format!("timestamp[{k}]"))?;
    check_timestamps(
        &timestamps,
        |k| (format!("line {line_no}"), format!("timestamp[{k}]")),
        source,
    )?;

    let mut positions = Vec::with_capacity(n * t);
    for i in 0..n {
        let line_no = BODY_FIRST_LINE + 1 + i;
        let Some(line) = lines.next() else {
            return Err(Error::format(
                source,
                format!("line {line_no}"),
                format!("point[{i}]"),
                format!("file ends after {i} of {n} points"),
            ));
        };
        let coords = parse_numbers(line, 3 * t, source, line_no, |k| {
            format!("point[{i}].frame[{}].{}", k / 3, ["x", "y", "z"][k % 3])
        })?;
        positions.extend(coords.chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])));
    }
    for (k, line) in lines.enumerate() {
        if !line.trim().is_empty() {
            return Err(Error::format(
                source,
                format!("line {}", BODY_FIRST_LINE + 1 + n + k),
                "trailing data",
                format!("unexpected content after {n} points"),
            ));
        }
    }
    Ok((timestamps, positions))
}

fn parse_numbers(
    line: &str,
    expected: usize,
    source: &str,
    line_no: usize,
    field: impl Fn(usize) -> String,
) -> Result<Vec<f64>> {
    let location = || format!("line {line_no}");
    let mut values = Vec::with_capacity(expected);
    for (k, word) in line.split_ascii_whitespace().enumerate() {
        if k == expected {
            return Err(Error::format(
                source,
                location(),
                field(k),
                format!("more than {expected} values on the line"),
            ));
        }
        let v: f64 = word.parse().map_err(|_| {
            Error::format(
                source,
                location(),
                field(k),
                format!("'{word}' is not a number"),
            )
        })?;
        if !v.is_finite() {
            return Err(Error::format(
                source,
                location(),
                field(k),
                format!("{word} is not finite"),
            ));
        }
        values.push(v);
    }
    if values.len() < expected {
        return Err(Error::format(
            source,
            location(),
            field(values.len()),
            format!("expected {expected} values, found {}", values.len()),
        ));
    }
    Ok(values)
}

/// Locates timestamp `k` as `(location, field)`.
fn check_timestamps(
    ts: &[f64],
    locate: impl Fn(usize) -> (String, String),
    source: &str,
) -> Result<()> {
    let fail = |k: usize, msg: String| {
        let (location, field) = locate(k);
        Err(Error::format(source, location, field, msg))
    };
    for (k, &v) in ts.iter().enumerate() {
        if !v.is_finite() {
            return fail(k, format!("{v} is not finite"));
        }
        if !(0.0..=1.0).contains(&v) {
            return fail(k, format!("{v:?} is outside [0, 1]"));
        }
        if k == 0 && v.abs() > TIME_MATCH_TOL {
            return fail(k, format!("first timestamp must be 0, found {v:?}"));
        }
        if k > 0 && v <= ts[k - 1] {
            return fail(
                k,
                format!(
                    "timestamps must increase strictly: {v:?} follows {:?}",
                    ts[k - 1]
                ),
            );
        }
    }
    Ok(())
}

fn parse_binary_body(body: &[u8], header: &Header, source: &str) -> Result<(Vec<f64>, Vec<Vec3>)> {
    let (n, t) = (header.points, header.frames);
    let values = t + 3 * n * t;
    let field = |k: usize| {
        if k < t {
            format!("timestamp[{k}]")
        } else {
            let j = k - t;
            format!(
                "point[{}].frame[{}].{}",
                j / (3 * t),
                (j / 3) % t,
                ["x", "y", "z"][j % 3]
            )
        }
    };
    let offset = |k: usize| format!("byte {}", header.body_offset + 8 * k);
    let complete = body.len() / 8;
    if complete < values {
        return Err(Error::format(
            source,
            offset(complete),
            field(complete),
            format!(
                "truncated: body holds {} bytes, expected {}",
                body.len(),
                8 * values
            ),
        ));
    }
    if body.len() > 8 * values {
        return Err(Error::format(
            source,
            offset(values),
            "trailing data",
            format!("{} bytes after the last position", body.len() - 8 * values),
        ));
    }
    let data: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    if let Some(k) = data.iter().position(|v| !v.is_finite()) {
        return Err(Error::format(
            source,
            offset(k),
            field(k),
            format!("{} is not finite", data[k]),
        ));
    }
    let (timestamps, coords) = data.split_at(t);
    check_timestamps(timestamps, |k| (offset(k), field(k)), source)?;
    let positions = coords
        .chunks_exact(3)
        .map(|c| Vec3::new(c[0], c[1], c[2]))
        .collect();
    Ok((timestamps.to_vec(), positions))
}

// ---------------------------------------------------------------------------
// JSON documents

/// Pretty JSON layout: one object member per line, arrays inline, floats in
/// 17-significant-digit scientific notation.
#[derive(Default)]
struct DocFormatter {
    indent: usize,
    /// Whether each open object has members yet.
    open: Vec<bool>,
}

impl DocFormatter {
    fn newline<W: ?Sized + std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        w.write_all(b"\n")?;
        for _ in 0..self.indent {
            w.write_all(b"  ")?;
        }
        Ok(())
    }
}

impl serde_json::ser::Formatter for DocFormatter {
    fn write_f64<W: ?Sized + std::io::Write>(&mut self, w: &mut W, v: f64) -> std::io::Result<()> {
        write!(w, "{v:.16e}")
    }

    fn begin_object<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.indent += 1;
        self.open.push(false);
        w.write_all(b"{")
    }

    fn end_object<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.indent -= 1;
        if self.open.pop() == Some(true) {
            self.newline(w)?;
        }
        w.write_all(b"}")
    }

    fn begin_object_key<W: ?Sized + std::io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> std::io::Result<()> {
        if let Some(has) = self.open.last_mut() {
            *has = true;
        }
        if !first {
            w.write_all(b",")?;
        }
        self.newline(w)
    }

    fn begin_object_value<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        w.write_all(b": ")
    }

    fn begin_array_value<W: ?Sized + std::io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> std::io::Result<()> {
        if first {
            Ok(())
        } else {
            w.write_all(b", ")
        }
    }
}

fn to_document<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, DocFormatter::default());
    value
        .serialize(&mut ser)
        .map_err(|e| Error::invalid(format!("cannot serialize document: {e}")))?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serde_json emits UTF-8"))
}

fn from_document<T: DeserializeOwned>(text: &str, source: &str) -> Result<T> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value: T = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let field = match e.path().to_string() {
            p if p == "." => "document".to_owned(),
            p => p,
        };
        let inner = e.into_inner();
        Error::format(
            source,
            format!("line {}, column {}", inner.line(), inner.column()),
            field,
            strip_position(&inner.to_string()),
        )
    })?;
    de.end().map_err(|e| {
        Error::format(
            source,
            format!("line {}, column {}", e.line(), e.column()),
            "document",
            strip_position(&e.to_string()),
        )
    })?;
    Ok(value)
}

/// serde_json appends " at line L column C"; the location is reported separately.
fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_owned(),
        None => msg.to_owned(),
    }
}

fn require_finite(values: impl IntoIterator<Item = f64>, what: &str) -> Result<()> {
    if values.into_iter().all(f64::is_finite) {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "{what} contains a non-finite value"
        )))
    }
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

type Row = [f64; 3];

fn row(v: &Vec3) -> Row {
    [v.x, v.y, v.z]
}

fn vec3(r: &Row) -> Vec3 {
    Vec3::new(r[0], r[1], r[2])
}

/// Row-major rotation, checked for orthonormality and det = +1 on read.
#[derive(Clone, Copy, Serialize, Deserialize)]
#[serde(try_from = "[Row; 3]", into = "[Row; 3]")]
struct RotationDoc([Row; 3]);

impl TryFrom<[Row; 3]> for RotationDoc {
    type Error = String;

    fn try_from(rows: [Row; 3]) -> std::result::Result<Self, String> {
        let doc = RotationDoc(rows);
        RigidTransform::new(doc.matrix(), Vec3::zeros()).map_err(|e| e.to_string())?;
        Ok(doc)
    }
}

impl From<RotationDoc> for [Row; 3] {
    fn from(r: RotationDoc) -> Self {
        r.0
    }
}

impl RotationDoc {
    fn matrix(&self) -> Mat3 {
        Mat3::from_fn(|i, j| self.0[i][j])
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseDoc {
    rotation: RotationDoc,
    translation: Row,
}

impl PoseDoc {
    fn new(t: &RigidTransform) -> Self {
        let r = &t.rotation;
        PoseDoc {
            rotation: RotationDoc([0, 1, 2].map(|i| [r[(i, 0)], r[(i, 1)], r[(i, 2)]])),
            translation: row(&t.translation),
        }
    }

    fn transform(&self) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation.matrix(),
            translation: vec3(&self.translation),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WindowPoseDoc {
    window: [f64; 2],
    rotation: RotationDoc,
    translation: Row,
}

impl WindowPoseDoc {
    fn new(window: (f64, f64), t: &RigidTransform) -> Self {
        let PoseDoc {
            rotation,
            translation,
        } = PoseDoc::new(t);
        WindowPoseDoc {
            window: [window.0, window.1],
            rotation,
            translation,
        }
    }

    fn transform(&self) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation.matrix(),
            translation: vec3(&self.translation),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, try_from = "JointDocRaw")]
struct JointDoc {
    #[serde(rename = "type")]
    joint_type: JointType,
    axis_direction: Row,
    axis_position: Option<Row>,
    angle_deg: f64,
    angle_rad: f64,
    distance: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JointDocRaw {
    #[serde(rename = "type")]
    joint_type: JointType,
    axis_direction: Row,
    axis_position: Option<Row>,
    angle_deg: f64,
    angle_rad: f64,
    distance: f64,
}

impl TryFrom<JointDocRaw> for JointDoc {
    type Error = String;

    fn try_from(r: JointDocRaw) -> std::result::Result<Self, String> {
        let norm = vec3(&r.axis_direction).norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(format!("axis_direction has norm {norm}, expected 1"));
        }
        if r.joint_type == JointType::Revolute && r.axis_position.is_none() {
            return Err("revolute joint needs an axis_position".into());
        }
        if !(r.angle_rad >= 0.0 && r.distance >= 0.0) {
            return Err("angle_rad and distance must be non-negative".into());
        }
        let deg = r.angle_rad.to_degrees();
        if !((r.angle_deg - deg).abs() <= 1e-9 * deg.abs().max(1.0)) {
            return Err(format!(
                "angle_deg {} disagrees with angle_rad {} ({deg} degrees)",
                r.angle_deg, r.angle_rad
            ));
        }
        Ok(JointDoc {
            joint_type: r.joint_type,
            axis_direction: r.axis_direction,
            axis_position: r.axis_position,
            angle_deg: r.angle_deg,
            angle_rad: r.angle_rad,
            distance: r.distance,
        })
    }
}

impl JointDoc {
    fn new(j: &JointParams) -> Self {
        JointDoc {
            joint_type: j.joint_type,
            axis_direction: row(&j.axis_direction),
            axis_position: j.axis_position.as_ref().map(row),
            angle_deg: j.angle.to_degrees(),
            angle_rad: j.angle,
            distance: j.distance,
        }
    }

    fn params(&self) -> JointParams {
        JointParams {
            joint_type: self.joint_type,
            axis_direction: vec3(&self.axis_direction),
            axis_position: self.axis_position.as_ref().map(vec3),
            angle: self.angle_rad,
            distance: self.distance,
        }
    }
}

// ---------------------------------------------------------------------------
// Analysis results

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResultDoc {
    schema_version: u32,
    config: AnalysisConfig,
    normalization: Option<NormalizationDoc>,
    parts: Vec<PartDoc>,
    static_ids: Vec<usize>,
    unassigned_ids: Vec<usize>,
    diagnostics: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NormalizationDoc {
    center: Row,
    scale: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartDoc {
    id: usize,
    member_count: usize,
    member_ids: Vec<usize>,
    mean_residual: f64,
    transforms: Vec<WindowPoseDoc>,
    joint: Option<JointDoc>,
}

/// The result document as text, byte-stable for equal inputs.
pub fn result_to_string(result: &PartMobilityResult) -> Result<String> {
    let windows = &result.config.ransac.windows;
    for p in &result.parts {
        if p.transforms.len() != windows.len() {
            return Err(Error::invalid(format!(
                "part {} has {} transforms for {} windows",
                p.id,
                p.transforms.len(),
                windows.len()
            )));
        }
        require_finite(
            p.transforms
                .iter()
                .flat_map(|t| t.rotation.iter().chain(t.translation.iter()).copied())
                .chain([p.mean_residual]),
            &format!("part {}", p.id),
        )?;
    }
    let doc = ResultDoc {
        schema_version: RESULT_SCHEMA_VERSION,
        config: result.config.clone(),
        normalization: result.normalization.map(|n| NormalizationDoc {
            center: row(&n.center),
            scale: n.scale,
        }),
        parts: result
            .parts
            .iter()
            .map(|p| PartDoc {
                id: p.id,
                member_count: p.member_ids.len(),
                member_ids: p.member_ids.clone(),
                mean_residual: p.mean_residual,
                transforms: windows
                    .iter()
                    .zip(&p.transforms)
                    .map(|(&w, t)| WindowPoseDoc::new(w, t))
                    .collect(),
                joint: p.joint.as_ref().map(JointDoc::new),
            })
            .collect(),
        static_ids: result.static_ids.clone(),
        unassigned_ids: result.unassigned_ids.clone(),
        diagnostics: result.diagnostics.clone(),
    };
    to_document(&doc)
}

pub fn result_from_str(text: &str, source: &str) -> Result<PartMobilityResult> {
    let doc: ResultDoc = from_document(text, source)?;
    let fail = |field: String, msg: String| Error::format(source, "document", field, msg);
    if doc.schema_version != RESULT_SCHEMA_VERSION {
        return Err(fail(
            "schema_version".into(),
            format!(
                "unsupported version {} (expected {RESULT_SCHEMA_VERSION})",
                doc.schema_version
            ),
        ));
    }
    doc.config
        .validate()
        .map_err(|e| fail("config".into(), e.to_string()))?;
    let windows = &doc.config.ransac.windows;
    let mut parts = Vec::with_capacity(doc.parts.len());
    for (k, p) in doc.parts.into_iter().enumerate() {
        if p.member_count != p.member_ids.len() {
            return Err(fail(
                format!("parts[{k}].member_count"),
                format!(
                    "{} does not match {} member_ids",
                    p.member_count,
                    p.member_ids.len()
                ),
            ));
        }
        if p.transforms.len() != windows.len() {
            return Err(fail(
                format!("parts[{k}].transforms"),
                format!(
                    "{} transforms for {} configured windows",
                    p.transforms.len(),
                    windows.len()
                ),
            ));
        }
        for (w, (t, &(a, b))) in p.transforms.iter().zip(windows).enumerate() {
            if t.window != [a, b] {
                return Err(fail(
                    format!("parts[{k}].transforms[{w}].window"),
                    format!(
                        "{:?} does not match configured window {:?}",
                        t.window,
                        [a, b]
                    ),
                ));
            }
        }
        parts.push(Part {
            id: p.id,
            member_ids: p.member_ids,
            transforms: p.transforms.iter().map(WindowPoseDoc::transform).collect(),
            joint: p.joint.as_ref().map(JointDoc::params),
            mean_residual: p.mean_residual,
        });
    }
    Ok(PartMobilityResult {
        parts,
        unassigned_ids: doc.unassigned_ids,
        static_ids: doc.static_ids,
        config: doc.config,
        normalization: doc.normalization.map(|n| Normalization {
            center: vec3(&n.center),
            scale: n.scale,
        }),
        diagnostics: doc.diagnostics,
    })
}

pub fn write_result(result: &PartMobilityResult, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(path.as_ref(), result_to_string(result)?.as_bytes())
}

pub fn read_result(path: impl AsRef<Path>) -> Result<PartMobilityResult> {
    let path = path.as_ref();
    result_from_str(&read_text(path)?, &path.display().to_string())
}

// ---------------------------------------------------------------------------
// Ground truth

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GroundTruthDoc {
    schema_version: u32,
    scene: String,
    timestamps: Vec<f64>,
    labels: Vec<i64>,
    start_positions: Vec<Row>,
    parts: Vec<GroundTruthPartDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GroundTruthPartDoc {
    name: String,
    joint: JointDoc,
    motion_range: [f64; 2],
    poses: Vec<PoseDoc>,
}

fn label_code(label: PointLabel) -> i64 {
    match label {
        PointLabel::Base => LABEL_BASE,
        PointLabel::Outlier => LABEL_OUTLIER,
        PointLabel::Part(k) => k as i64,
    }
}

pub fn ground_truth_to_string(gt: &GroundTruth) -> Result<String> {
    require_finite(
        gt.start_positions.iter().flat_map(|p| p.iter().copied()),
        "start_positions",
    )?;
    let doc = GroundTruthDoc {
        schema_version: GROUND_TRUTH_SCHEMA_VERSION,
        scene: gt.scene.clone(),
        timestamps: gt.timestamps.clone(),
        labels: gt.labels.iter().copied().map(label_code).collect(),
        start_positions: gt.start_positions.iter().map(row).collect(),
        parts: gt
            .parts
            .iter()
            .map(|p| GroundTruthPartDoc {
                name: p.name.clone(),
                joint: JointDoc::new(&p.joint),
                motion_range: [p.motion_range.0, p.motion_range.1],
                poses: p.poses.iter().map(PoseDoc::new).collect(),
            })
            .collect(),
    };
    to_document(&doc)
}

pub fn ground_truth_from_str(text: &str, source: &str) -> Result<GroundTruth> {
    let doc: GroundTruthDoc = from_document(text, source)?;
    let fail = |field: String, msg: String| Error::format(source, "document", field, msg);
    if doc.schema_version != GROUND_TRUTH_SCHEMA_VERSION {
        return Err(fail(
            "schema_version".into(),
            format!(
                "unsupported version {} (expected {GROUND_TRUTH_SCHEMA_VERSION})",
                doc.schema_version
            ),
        ));
    }
    check_timestamps(
        &doc.timestamps,
        |k| ("document".into(), format!("timestamps[{k}]")),
        source,
    )?;
    if doc.labels.len() != doc.start_positions.len() {
        return Err(fail(
            "labels".into(),
            format!(
                "{} labels for {} start positions",
                doc.labels.len(),
                doc.start_positions.len()
            ),
        ));
    }
    let k = doc.parts.len() as i64;
    let labels = doc
        .labels
        .iter()
        .enumerate()
        .map(|(i, &code)| match code {
            LABEL_BASE => Ok(PointLabel::Base),
            LABEL_OUTLIER => Ok(PointLabel::Outlier),
            c if (0..k).contains(&c) => Ok(PointLabel::Part(c as usize)),
            c => Err(fail(
                format!("labels[{i}]"),
                format!("{c} is neither -1, -2 nor a part index below {k}"),
            )),
        })
        .collect::<Result<Vec<_>>>()?;
    let mut parts = Vec::with_capacity(doc.parts.len());
    for (k, p) in doc.parts.into_iter().enumerate() {
        if p.poses.len() != doc.timestamps.len() {
            return Err(fail(
                format!("parts[{k}].poses"),
                format!(
                    "{} poses for {} timestamps",
                    p.poses.len(),
                    doc.timestamps.len()
                ),
            ));
        }
        parts.push(GroundTruthPart {
            name: p.name,
            joint: p.joint.params(),
            motion_range: (p.motion_range[0], p.motion_range[1]),
            poses: p.poses.iter().map(PoseDoc::transform).collect(),
        });
    }
    Ok(GroundTruth {
        scene: doc.scene,
        timestamps: doc.timestamps,
        labels,
        start_positions: doc.start_positions.iter().map(vec3).collect(),
        parts,
    })
}

pub fn write_ground_truth(gt: &GroundTruth, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(path.as_ref(), ground_truth_to_string(gt)?.as_bytes())
}

pub fn read_ground_truth(path: impl AsRef<Path>) -> Result<GroundTruth> {
    let path = path.as_ref();
    ground_truth_from_str(&read_text(path)?, &path.display().to_string())
}

/// Any serde type as a document in the same layout (used for scene specs).
pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(path.as_ref(), to_document(value)?.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    from_document(&read_text(path)?, &path.display().to_string())
}
