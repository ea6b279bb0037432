//! On-disk schema: versioned line-delimited text files.
//!
//! A dataset directory holds `manifest.txt` plus one directory per video:
//!
//! ```text
//! <root>/manifest.txt              vidsum dataset v1
//! <root>/<video_id>/frames.txt     one frame ref per line
//! <root>/<video_id>/captions.txt   one caption per frame (optional)
//! <root>/<video_id>/annotations.txt
//! <root>/<video_id>/change_points.txt  start,end per line (optional)
//! <root>/<video_id>/features.txt   T rows of d reals (optional)
//! ```
//!
//! Every file starts with a `vidsum <kind> v1` version line, then key-value
//! header lines, then a `---` separator, then content. All indices are
//! 0-based. Reals are written in shortest round-trip form, so
//! `load(save(x)) == x` bit-exactly.

use super::{AnnotationMode, AnnotationSet, DatasetError, FoldSplit, VideoRecord};
use crate::backend::EmbeddingPair;
use crate::caption::{CaptionSequence, CaptionSource};
use crate::mat::Mat;
use crate::series::ScoreSeries;
use crate::util::atomic_write;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const MANIFEST_VERSION: &str = "vidsum dataset v1";
pub const FRAMES_VERSION: &str = "vidsum frames v1";
pub const CAPTIONS_VERSION: &str = "vidsum captions v1";
pub const ANNOTATIONS_VERSION: &str = "vidsum annotations v1";
pub const CHANGE_POINTS_VERSION: &str = "vidsum change-points v1";
pub const FEATURES_VERSION: &str = "vidsum features v1";
pub const SCORES_VERSION: &str = "vidsum scores v1";
pub const EMBEDDINGS_VERSION: &str = "vidsum embeddings v1";
pub const FOLDS_VERSION: &str = "vidsum folds v1";
pub const SUMMARY_VERSION: &str = "vidsum summary v1";

const SEPARATOR: &str = "---";

// ---------------------------------------------------------------------------
// line reader with positions for error reporting

struct Reader {
    path: PathBuf,
    lines: Vec<String>,
    pos: usize,
}

impl Reader {
    fn open(path: &Path, version: &str) -> Result<Self, DatasetError> {
        let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let lines: Vec<String> = text.lines().map(|l| l.to_string()).collect();
        let mut reader = Reader {
            path: path.to_path_buf(),
            lines,
            pos: 0,
        };
        let first = reader.next_line("version header")?;
        if first != version {
            return Err(DatasetError::Version {
                path: reader.path,
                expected: version.to_string(),
                found: first,
            });
        }
        Ok(reader)
    }

    fn next_line(&mut self, what: &str) -> Result<String, DatasetError> {
        let line = self
            .lines
            .get(self.pos)
            .cloned()
            .ok_or_else(|| self.err(&format!("unexpected end of file, expected {what}")))?;
        self.pos += 1;
        Ok(line)
    }

    /// Header line `key <rest>`; errors if the key differs.
    fn keyed(&mut self, key: &str) -> Result<String, DatasetError> {
        let line = self.next_line(&format!("header '{key}'"))?;
        match line.split_once(' ') {
            Some((k, rest)) if k == key => Ok(rest.trim().to_string()),
            _ if line == key => Ok(String::new()),
            _ => Err(self.err_at(self.pos, &format!("expected header '{key}', found {line:?}"))),
        }
    }

    /// Optional header `key <rest>`: consumed only when the key matches.
    fn keyed_opt(&mut self, key: &str) -> Option<String> {
        let line = self.lines.get(self.pos)?;
        let rest = line.strip_prefix(key)?;
        if !rest.is_empty() && !rest.starts_with(' ') {
            return None;
        }
        self.pos += 1;
        Some(rest.trim().to_string())
    }

    fn separator(&mut self) -> Result<(), DatasetError> {
        let line = self.next_line("separator")?;
        if line != SEPARATOR {
            return Err(self.err_at(self.pos, &format!("expected '{SEPARATOR}', found {line:?}")));
        }
        Ok(())
    }

    fn parse<T: std::str::FromStr>(&self, s: &str, what: &str) -> Result<T, DatasetError> {
        s.parse()
            .map_err(|_| self.err_at(self.pos, &format!("cannot parse {what} from {s:?}")))
    }

    fn done(&self) -> Result<(), DatasetError> {
        if self.pos < self.lines.len() {
            return Err(self.err_at(
                self.pos + 1,
                &format!("trailing content ({} extra lines)", self.lines.len() - self.pos),
            ));
        }
        Ok(())
    }

    fn err(&self, message: &str) -> DatasetError {
        self.err_at(self.pos, message)
    }

    fn err_at(&self, line: usize, message: &str) -> DatasetError {
        DatasetError::Schema {
            path: self.path.clone(),
            line,
            message: message.to_string(),
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), DatasetError> {
    atomic_write(path, contents.as_bytes()).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_floats(reader: &Reader, line: &str, expected: usize, what: &str) -> Result<Vec<f64>, DatasetError> {
    let values: Result<Vec<f64>, _> = line.split_whitespace().map(|t| t.parse()).collect();
    let values = values.map_err(|_| reader.err(&format!("cannot parse {what} row")))?;
    if values.len() != expected {
        return Err(reader.err(&format!(
            "{what} row has {} values, expected {expected}",
            values.len()
        )));
    }
    Ok(values)
}

fn fmt_floats(values: &[f64]) -> String {
    let mut s = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{v}");
    }
    s
}

// ---------------------------------------------------------------------------
// whole-dataset load/save

/// Load every video listed in `<root>/manifest.txt` and validate all record
/// invariants.
pub fn load_dataset(root: &Path) -> Result<Vec<VideoRecord>, DatasetError> {
    let manifest = root.join("manifest.txt");
    let mut reader = Reader::open(&manifest, MANIFEST_VERSION)?;
    let count: usize = {
        let v = reader.keyed("videos")?;
        reader.parse(&v, "video count")?
    };
    reader.separator()?;
    let mut ids = Vec::with_capacity(count);
    for _ in 0..count {
        let id = reader.next_line("video id")?.trim().to_string();
        if id.is_empty() || id.contains(['/', '\\']) || id.contains(char::is_whitespace) {
            return Err(reader.err(&format!("invalid video id {id:?}")));
        }
        ids.push(id);
    }
    reader.done()?;

    let mut records = Vec::with_capacity(ids.len());
    for id in ids {
        let dir = root.join(&id);
        let frame_refs = load_frames(&dir.join("frames.txt"))?;
        let mut record = VideoRecord::new(id.clone(), frame_refs);

        let captions_path = dir.join("captions.txt");
        if captions_path.exists() {
            record.captions = Some(load_captions(&captions_path)?);
        }
        let cp_path = dir.join("change_points.txt");
        if cp_path.exists() {
            record.change_points = Some(load_change_points(&cp_path)?);
        }
        let features_path = dir.join("features.txt");
        if features_path.exists() {
            record.frame_features = Some(load_features(&features_path)?);
        }
        let ann_path = dir.join("annotations.txt");
        if ann_path.exists() {
            record.annotations = Some(load_annotations(&ann_path, &id)?);
        }
        record.validate()?;
        records.push(record);
    }
    Ok(records)
}

/// Write a complete dataset directory (fixtures, converters, tests).
pub fn save_dataset(root: &Path, records: &[VideoRecord]) -> Result<(), DatasetError> {
    for record in records {
        record.validate()?;
        let dir = root.join(&record.video_id);
        save_frames(&dir.join("frames.txt"), &record.frame_refs)?;
        if let Some(captions) = &record.captions {
            save_captions(&dir.join("captions.txt"), captions)?;
        }
        if let Some(points) = &record.change_points {
            save_change_points(&dir.join("change_points.txt"), points)?;
        }
        if let Some(features) = &record.frame_features {
            save_features(&dir.join("features.txt"), features)?;
        }
        if let Some(ann) = &record.annotations {
            save_annotations(&dir.join("annotations.txt"), ann)?;
        }
    }
    let mut manifest = format!("{MANIFEST_VERSION}\nvideos {}\n{SEPARATOR}\n", records.len());
    for record in records {
        manifest.push_str(&record.video_id);
        manifest.push('\n');
    }
    write_file(&root.join("manifest.txt"), &manifest)
}

// ---------------------------------------------------------------------------
// frames

pub fn save_frames(path: &Path, refs: &[String]) -> Result<(), DatasetError> {
    let mut s = format!("{FRAMES_VERSION}\nframes {}\n{SEPARATOR}\n", refs.len());
    for r in refs {
        s.push_str(r);
        s.push('\n');
    }
    write_file(path, &s)
}

pub fn load_frames(path: &Path) -> Result<Vec<String>, DatasetError> {
    let mut reader = Reader::open(path, FRAMES_VERSION)?;
    let t: usize = {
        let v = reader.keyed("frames")?;
        reader.parse(&v, "frame count")?
    };
    reader.separator()?;
    let mut refs = Vec::with_capacity(t);
    for _ in 0..t {
        refs.push(reader.next_line("frame ref")?);
    }
    reader.done()?;
    Ok(refs)
}

// ---------------------------------------------------------------------------
// captions

pub fn save_captions(path: &Path, captions: &CaptionSequence) -> Result<(), DatasetError> {
    let source = match captions.source() {
        CaptionSource::Generated => "generated",
        CaptionSource::Loaded => "loaded",
    };
    let mut s = format!(
        "{CAPTIONS_VERSION}\nsource {source}\nframes {}\ncap {}\n{SEPARATOR}\n",
        captions.len(),
        captions.token_cap()
    );
    for c in captions.captions() {
        s.push_str(c);
        s.push('\n');
    }
    write_file(path, &s)
}

pub fn load_captions(path: &Path) -> Result<CaptionSequence, DatasetError> {
    let mut reader = Reader::open(path, CAPTIONS_VERSION)?;
    let source = match reader.keyed("source")?.as_str() {
        "generated" => CaptionSource::Generated,
        "loaded" => CaptionSource::Loaded,
        other => return Err(reader.err(&format!("unknown caption source {other:?}"))),
    };
    let t: usize = {
        let v = reader.keyed("frames")?;
        reader.parse(&v, "frame count")?
    };
    let cap: usize = {
        let v = reader.keyed("cap")?;
        reader.parse(&v, "token cap")?
    };
    reader.separator()?;
    let mut captions = Vec::with_capacity(t);
    for _ in 0..t {
        captions.push(reader.next_line("caption")?);
    }
    reader.done()?;
    CaptionSequence::new(captions, source, cap).map_err(|e| DatasetError::Schema {
        path: path.to_path_buf(),
        line: 0,
        message: e.to_string(),
    })
}

// ---------------------------------------------------------------------------
// annotations

/// Values are written normalized with an identity `scale 0 1` header, so a
/// saved file re-loads to exactly the same annotation set.
pub fn save_annotations(path: &Path, ann: &AnnotationSet) -> Result<(), DatasetError> {
    let mut s = format!("{ANNOTATIONS_VERSION}\nmode {}\n", ann.mode().name());
    match ann {
        AnnotationSet::PerUserScores { user_scores, .. } => {
            let _ = writeln!(s, "users {}", user_scores.len());
            let _ = writeln!(s, "frames {}", user_scores[0].len());
            let _ = writeln!(s, "scale 0 1");
            s.push_str(SEPARATOR);
            s.push('\n');
            for row in user_scores {
                s.push_str(&fmt_floats(row));
                s.push('\n');
            }
        }
        AnnotationSet::AveragedSummary {
            averaged_summary, ..
        } => {
            let _ = writeln!(s, "frames {}", averaged_summary.len());
            let _ = writeln!(s, "scale 0 1");
            s.push_str(SEPARATOR);
            s.push('\n');
            s.push_str(&fmt_floats(averaged_summary));
            s.push('\n');
        }
    }
    write_file(path, &s)
}

pub fn load_annotations(path: &Path, video_id: &str) -> Result<AnnotationSet, DatasetError> {
    let mut reader = Reader::open(path, ANNOTATIONS_VERSION)?;
    let mode_name = reader.keyed("mode")?;
    let mode = AnnotationMode::parse(&mode_name)
        .ok_or_else(|| reader.err(&format!("unknown annotation mode {mode_name:?}")))?;
    let users: Option<usize> = match mode {
        AnnotationMode::PerUserScores => {
            let v = reader.keyed("users")?;
            Some(reader.parse(&v, "user count")?)
        }
        AnnotationMode::AveragedSummary => None,
    };
    let t: usize = {
        let v = reader.keyed("frames")?;
        reader.parse(&v, "frame count")?
    };
    let scale = match reader.keyed_opt("scale") {
        Some(rest) => {
            let parts: Vec<&str> = rest.split_whitespace().collect();
            if parts.len() != 2 {
                return Err(reader.err("scale header needs two bounds"));
            }
            let lo: f64 = reader.parse(parts[0], "scale lower bound")?;
            let hi: f64 = reader.parse(parts[1], "scale upper bound")?;
            (lo, hi)
        }
        None => (0.0, 1.0),
    };
    reader.separator()?;

    match mode {
        AnnotationMode::PerUserScores => {
            let users = users.unwrap();
            if users == 0 {
                return Err(reader.err("user count must be at least 1"));
            }
            let mut rows = Vec::with_capacity(users);
            for _ in 0..users {
                let line = reader.next_line("user score row")?;
                rows.push(parse_floats(&reader, &line, t, "user score")?);
            }
            reader.done()?;
            AnnotationSet::per_user_from_raw(video_id, rows, scale)
        }
        AnnotationMode::AveragedSummary => {
            let line = reader.next_line("summary row")?;
            let summary = parse_floats(&reader, &line, t, "summary")?;
            reader.done()?;
            AnnotationSet::averaged_from_raw(video_id, summary, scale)
        }
    }
}

// ---------------------------------------------------------------------------
// change points

pub fn save_change_points(path: &Path, points: &[(usize, usize)]) -> Result<(), DatasetError> {
    let mut s = format!("{CHANGE_POINTS_VERSION}\nshots {}\n{SEPARATOR}\n", points.len());
    for (start, end) in points {
        let _ = writeln!(s, "{start},{end}");
    }
    write_file(path, &s)
}

pub fn load_change_points(path: &Path) -> Result<Vec<(usize, usize)>, DatasetError> {
    let mut reader = Reader::open(path, CHANGE_POINTS_VERSION)?;
    let n: usize = {
        let v = reader.keyed("shots")?;
        reader.parse(&v, "shot count")?
    };
    reader.separator()?;
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let line = reader.next_line("change point")?;
        let (a, b) = line
            .split_once(',')
            .ok_or_else(|| reader.err(&format!("expected start,end, found {line:?}")))?;
        let start: usize = reader.parse(a.trim(), "shot start")?;
        let end: usize = reader.parse(b.trim(), "shot end")?;
        points.push((start, end));
    }
    reader.done()?;
    Ok(points)
}

// ---------------------------------------------------------------------------
// features

pub fn save_features(path: &Path, features: &Mat) -> Result<(), DatasetError> {
    let mut s = format!(
        "{FEATURES_VERSION}\nframes {}\ndim {}\n{SEPARATOR}\n",
        features.rows(),
        features.cols()
    );
    for r in 0..features.rows() {
        s.push_str(&fmt_floats(features.row(r)));
        s.push('\n');
    }
    write_file(path, &s)
}

pub fn load_features(path: &Path) -> Result<Mat, DatasetError> {
    let mut reader = Reader::open(path, FEATURES_VERSION)?;
    let t: usize = {
        let v = reader.keyed("frames")?;
        reader.parse(&v, "frame count")?
    };
    let d: usize = {
        let v = reader.keyed("dim")?;
        reader.parse(&v, "feature dim")?
    };
    reader.separator()?;
    let mut rows = Vec::with_capacity(t);
    for _ in 0..t {
        let line = reader.next_line("feature row")?;
        rows.push(parse_floats(&reader, &line, d, "feature")?);
    }
    reader.done()?;
    Mat::from_rows(&rows).ok_or_else(|| reader.err("ragged feature rows"))
}

// ---------------------------------------------------------------------------
// scores

pub fn save_scores(path: &Path, scores: &ScoreSeries, filled: &[usize]) -> Result<(), DatasetError> {
    let mut s = format!("{SCORES_VERSION}\nframes {}\n", scores.len());
    if !filled.is_empty() {
        let list: Vec<String> = filled.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(s, "filled {}", list.join(","));
    }
    s.push_str(SEPARATOR);
    s.push('\n');
    for v in scores.values() {
        let _ = writeln!(s, "{v}");
    }
    write_file(path, &s)
}

pub fn load_scores(path: &Path) -> Result<(ScoreSeries, Vec<usize>), DatasetError> {
    let mut reader = Reader::open(path, SCORES_VERSION)?;
    let t: usize = {
        let v = reader.keyed("frames")?;
        reader.parse(&v, "frame count")?
    };
    let filled: Vec<usize> = match reader.keyed_opt("filled") {
        Some(rest) => rest
            .split(',')
            .filter(|s| !s.is_empty())
            .map(|s| reader.parse(s.trim(), "filled index"))
            .collect::<Result<_, _>>()?,
        None => Vec::new(),
    };
    reader.separator()?;
    let mut values = Vec::with_capacity(t);
    for _ in 0..t {
        let line = reader.next_line("score")?;
        values.push(reader.parse::<f64>(line.trim(), "score")?);
    }
    reader.done()?;
    Ok((ScoreSeries::new(values), filled))
}

// ---------------------------------------------------------------------------
// embeddings

pub fn save_embeddings(path: &Path, pairs: &[EmbeddingPair]) -> Result<(), DatasetError> {
    let width = pairs.first().map(|p| p.hidden_width()).unwrap_or(0);
    let mut s = format!(
        "{EMBEDDINGS_VERSION}\nframes {}\nwidth {width}\n{SEPARATOR}\n",
        pairs.len()
    );
    for pair in pairs {
        let _ = writeln!(s, "pair {} {}", pair.query_len(), pair.answer_len());
        for r in 0..pair.query_len() {
            s.push_str(&fmt_floats(pair.q().row(r)));
            s.push('\n');
        }
        for r in 0..pair.answer_len() {
            s.push_str(&fmt_floats(pair.a().row(r)));
            s.push('\n');
        }
    }
    write_file(path, &s)
}

pub fn load_embeddings(path: &Path) -> Result<Vec<EmbeddingPair>, DatasetError> {
    let mut reader = Reader::open(path, EMBEDDINGS_VERSION)?;
    let t: usize = {
        let v = reader.keyed("frames")?;
        reader.parse(&v, "frame count")?
    };
    let width: usize = {
        let v = reader.keyed("width")?;
        reader.parse(&v, "hidden width")?
    };
    reader.separator()?;
    let mut pairs = Vec::with_capacity(t);
    for _ in 0..t {
        let header = reader.keyed("pair")?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 2 {
            return Err(reader.err("pair header needs query and answer lengths"));
        }
        let l_q: usize = reader.parse(parts[0], "query length")?;
        let l_a: usize = reader.parse(parts[1], "answer length")?;
        let mut read_block = |len: usize, what: &str| -> Result<Mat, DatasetError> {
            let mut rows = Vec::with_capacity(len);
            for _ in 0..len {
                let line = reader.next_line(what)?;
                rows.push(parse_floats(&reader, &line, width, what)?);
            }
            Mat::from_rows(&rows).ok_or_else(|| reader.err("ragged embedding rows"))
        };
        let q = read_block(l_q, "query embedding row")?;
        let a = read_block(l_a, "answer embedding row")?;
        let pair = EmbeddingPair::new(q, a).map_err(|e| DatasetError::Schema {
            path: path.to_path_buf(),
            line: 0,
            message: e.to_string(),
        })?;
        pairs.push(pair);
    }
    reader.done()?;
    Ok(pairs)
}

// ---------------------------------------------------------------------------
// folds

pub fn save_folds(path: &Path, split: &FoldSplit) -> Result<(), DatasetError> {
    let mut s = format!("{FOLDS_VERSION}\nk {}\n{SEPARATOR}\n", split.k);
    for (id, fold) in &split.assignments {
        let _ = writeln!(s, "{id} {fold}");
    }
    write_file(path, &s)
}

pub fn load_folds(path: &Path) -> Result<FoldSplit, DatasetError> {
    let mut reader = Reader::open(path, FOLDS_VERSION)?;
    let k: usize = {
        let v = reader.keyed("k")?;
        reader.parse(&v, "fold count")?
    };
    reader.separator()?;
    let mut assignments = BTreeMap::new();
    while reader.pos < reader.lines.len() {
        let line = reader.next_line("fold assignment")?;
        let (id, fold) = line
            .rsplit_once(' ')
            .ok_or_else(|| reader.err(&format!("expected 'video_id fold', found {line:?}")))?;
        let fold: usize = reader.parse(fold, "fold index")?;
        if assignments.insert(id.to_string(), fold).is_some() {
            return Err(reader.err(&format!("duplicate video id {id:?}")));
        }
    }
    let split = FoldSplit { k, assignments };
    split.validate()?;
    Ok(split)
}

// ---------------------------------------------------------------------------
// summary masks

pub fn save_summary(path: &Path, mask: &[bool], budget_frames: usize) -> Result<(), DatasetError> {
    let mut s = format!(
        "{SUMMARY_VERSION}\nframes {}\nbudget {budget_frames}\n{SEPARATOR}\n",
        mask.len()
    );
    for &m in mask {
        s.push_str(if m { "1\n" } else { "0\n" });
    }
    write_file(path, &s)
}

pub fn load_summary(path: &Path) -> Result<(Vec<bool>, usize), DatasetError> {
    let mut reader = Reader::open(path, SUMMARY_VERSION)?;
    let t: usize = {
        let v = reader.keyed("frames")?;
        reader.parse(&v, "frame count")?
    };
    let budget: usize = {
        let v = reader.keyed("budget")?;
        reader.parse(&v, "budget")?
    };
    reader.separator()?;
    let mut mask = Vec::with_capacity(t);
    for _ in 0..t {
        match reader.next_line("mask bit")?.trim() {
            "0" => mask.push(false),
            "1" => mask.push(true),
            other => return Err(reader.err(&format!("expected 0 or 1, found {other:?}"))),
        }
    }
    reader.done()?;
    Ok((mask, budget))
}
