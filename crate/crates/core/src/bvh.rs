//! BVH motion-capture parsing, emission, forward kinematics and
//! motion-derived activity estimation.
//!
//! The parser accepts the standard HIERARCHY/MOTION layout. Rotations are
//! Euler angles in degrees, composed intrinsically in the order the file
//! declares per joint; offsets and root positions are meters.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Channel {
    Xposition,
    Yposition,
    Zposition,
    Xrotation,
    Yrotation,
    Zrotation,
}

impl Channel {
    fn parse(s: &str) -> Option<Channel> {
        match s {
            "Xposition" => Some(Channel::Xposition),
            "Yposition" => Some(Channel::Yposition),
            "Zposition" => Some(Channel::Zposition),
            "Xrotation" => Some(Channel::Xrotation),
            "Yrotation" => Some(Channel::Yrotation),
            "Zrotation" => Some(Channel::Zrotation),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Channel::Xposition => "Xposition",
            Channel::Yposition => "Yposition",
            Channel::Zposition => "Zposition",
            Channel::Xrotation => "Xrotation",
            Channel::Yrotation => "Yrotation",
            Channel::Zrotation => "Zrotation",
        }
    }

    pub fn is_position(self) -> bool {
        matches!(self, Channel::Xposition | Channel::Yposition | Channel::Zposition)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Joint {
    pub name: String,
    /// Offset from the parent joint, meters.
    pub offset: [f64; 3],
    pub channels: Vec<Channel>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// End-site offset for leaf joints that declare one.
    pub end_site: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skeleton {
    /// Joints in file order; parents always precede children.
    pub joints: Vec<Joint>,
}

impl Skeleton {
    pub fn joint_count(&self) -> usize {
        self.joints.len()
    }

    pub fn channel_count(&self) -> usize {
        self.joints.iter().map(|j| j.channels.len()).sum()
    }

    /// True when the two skeletons have identical joint names, hierarchy and
    /// channel layouts (offsets may differ).
    pub fn layout_matches(&self, other: &Skeleton) -> bool {
        self.joints.len() == other.joints.len()
            && self.joints.iter().zip(&other.joints).all(|(a, b)| {
                a.name == b.name && a.channels == b.channels && a.parent == b.parent
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionClip {
    pub skeleton: Skeleton,
    /// Seconds between frames.
    pub frame_time: f64,
    /// One row per frame; row length equals the skeleton channel count.
    pub frames: Vec<Vec<f64>>,
}

impl MotionClip {
    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn duration_s(&self) -> f64 {
        self.frames.len() as f64 * self.frame_time
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum BvhError {
    #[error("line {line}, col {col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("line {line}: frame has {got} values but the skeleton declares {expected} channels")]
    ChannelMismatch {
        line: usize,
        expected: usize,
        got: usize,
    },
    #[error("missing {0} section")]
    MissingSection(&'static str),
    #[error("joint {joint:?}: unsupported channel set (need 3 rotations, root may add 3 positions)")]
    UnsupportedChannels { joint: String },
    #[error("frame index {index} out of range ({count} frames)")]
    Index { index: usize, count: usize },
    #[error("clip too short: {0}")]
    TooShort(String),
    #[error("unknown action label {0:?}")]
    UnknownAction(String),
}

// ── Parsing ────────────────────────────────────────────────────────────────

struct Lines<'a> {
    tokens: Vec<(usize, Vec<&'a str>)>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let tokens = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split_whitespace().collect::<Vec<_>>()))
            .filter(|(_, t)| !t.is_empty())
            .collect();
        Lines { tokens, pos: 0 }
    }

    fn peek(&self) -> Option<&(usize, Vec<&'a str>)> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<&(usize, Vec<&'a str>)> {
        let item = self.tokens.get(self.pos);
        if item.is_some() {
            self.pos += 1;
        }
        item
    }

    fn current_line(&self) -> usize {
        self.tokens
            .get(self.pos.saturating_sub(1))
            .map_or(0, |(l, _)| *l)
    }
}

fn syntax(line: usize, col: usize, message: impl Into<String>) -> BvhError {
    BvhError::Syntax {
        line,
        col,
        message: message.into(),
    }
}

fn parse_f64(tok: &str, line: usize, col: usize) -> Result<f64, BvhError> {
    tok.parse::<f64>()
        .map_err(|_| syntax(line, col, format!("expected a number, got {tok:?}")))
}

/// Parse a BVH document into a [`MotionClip`].
pub fn parse_bvh(text: &str) -> Result<MotionClip, BvhError> {
    let mut lines = Lines::new(text);

    match lines.next() {
        Some((_, t)) if t[0] == "HIERARCHY" => {}
        _ => return Err(BvhError::MissingSection("HIERARCHY")),
    }

    let mut joints: Vec<Joint> = Vec::new();
    parse_root(&mut lines, &mut joints)?;

    for joint in &joints {
        check_channels(joint)?;
    }

    match lines.next() {
        Some((_, t)) if t[0] == "MOTION" => {}
        _ => return Err(BvhError::MissingSection("MOTION")),
    }

    let (frame_count, _) = {
        let (line, t) = lines
            .next()
            .ok_or(BvhError::MissingSection("MOTION"))?;
        if t.len() < 2 || t[0] != "Frames:" {
            return Err(syntax(*line, 1, "expected 'Frames: <count>'"));
        }
        let count: usize = t[1]
            .parse()
            .map_err(|_| syntax(*line, 2, format!("bad frame count {:?}", t[1])))?;
        (count, *line)
    };

    let frame_time = {
        let (line, t) = lines
            .next()
            .ok_or(BvhError::MissingSection("MOTION"))?;
        if t.len() < 3 || t[0] != "Frame" || t[1] != "Time:" {
            return Err(syntax(*line, 1, "expected 'Frame Time: <seconds>'"));
        }
        let ft = parse_f64(t[2], *line, 3)?;
        if ft <= 0.0 {
            return Err(syntax(*line, 3, "frame time must be positive"));
        }
        ft
    };

    let channel_count: usize = joints.iter().map(|j| j.channels.len()).sum();
    let mut frames = Vec::with_capacity(frame_count);
    for _ in 0..frame_count {
        let (line, t) = match lines.next() {
            Some(v) => (v.0, v.1.clone()),
            None => {
                return Err(BvhError::ChannelMismatch {
                    line: lines.current_line(),
                    expected: channel_count,
                    got: 0,
                })
            }
        };
        if t.len() != channel_count {
            return Err(BvhError::ChannelMismatch {
                line,
                expected: channel_count,
                got: t.len(),
            });
        }
        let mut row = Vec::with_capacity(channel_count);
        for (col, tok) in t.iter().enumerate() {
            row.push(parse_f64(tok, line, col + 1)?);
        }
        frames.push(row);
    }

    Ok(MotionClip {
        skeleton: Skeleton { joints },
        frame_time,
        frames,
    })
}

fn check_channels(joint: &Joint) -> Result<(), BvhError> {
    let rotations: Vec<Channel> = joint.channels.iter().copied().filter(|c| !c.is_position()).collect();
    let positions: Vec<Channel> = joint.channels.iter().copied().filter(|c| c.is_position()).collect();
    let rot_ok = rotations.len() == 3
        && rotations.contains(&Channel::Xrotation)
        && rotations.contains(&Channel::Yrotation)
        && rotations.contains(&Channel::Zrotation);
    let pos_ok = if joint.parent.is_none() {
        positions.is_empty()
            || (positions.len() == 3
                && positions.contains(&Channel::Xposition)
                && positions.contains(&Channel::Yposition)
                && positions.contains(&Channel::Zposition))
    } else {
        positions.is_empty()
    };
    if rot_ok && pos_ok {
        Ok(())
    } else {
        Err(BvhError::UnsupportedChannels {
            joint: joint.name.clone(),
        })
    }
}

fn parse_root(lines: &mut Lines, joints: &mut Vec<Joint>) -> Result<(), BvhError> {
    let (line, t) = lines
        .next()
        .ok_or(BvhError::MissingSection("HIERARCHY"))?;
    if t[0] != "ROOT" || t.len() < 2 {
        return Err(syntax(*line, 1, "expected 'ROOT <name>'"));
    }
    let name = t[1].to_string();
    let line = *line;
    parse_joint_body(lines, joints, name, None, line)?;
    if let Some((line, t)) = lines.peek() {
        if t[0] == "ROOT" {
            return Err(syntax(*line, 1, "multiple ROOT joints are not supported"));
        }
    }
    Ok(())
}

fn parse_joint_body(
    lines: &mut Lines,
    joints: &mut Vec<Joint>,
    name: String,
    parent: Option<usize>,
    decl_line: usize,
) -> Result<(), BvhError> {
    match lines.next() {
        Some((_, t)) if t[0] == "{" => {}
        _ => return Err(syntax(decl_line, 1, format!("expected '{{' after joint {name:?}"))),
    }

    let index = joints.len();
    joints.push(Joint {
        name,
        offset: [0.0; 3],
        channels: Vec::new(),
        parent,
        children: Vec::new(),
        end_site: None,
    });
    if let Some(p) = parent {
        joints[p].children.push(index);
    }

    loop {
        let (line, t) = match lines.next() {
            Some(v) => (v.0, v.1.clone()),
            None => return Err(syntax(0, 1, "unexpected end of file inside joint block")),
        };
        match t[0] {
            "OFFSET" => {
                if t.len() != 4 {
                    return Err(syntax(line, 1, "OFFSET needs exactly 3 values"));
                }
                for (axis, tok) in t[1..].iter().enumerate() {
                    joints[index].offset[axis] = parse_f64(tok, line, axis + 2)?;
                }
            }
            "CHANNELS" => {
                if t.len() < 2 {
                    return Err(syntax(line, 1, "CHANNELS needs a count"));
                }
                let n: usize = t[1]
                    .parse()
                    .map_err(|_| syntax(line, 2, format!("bad channel count {:?}", t[1])))?;
                if t.len() != n + 2 {
                    return Err(syntax(line, 2, format!("CHANNELS declares {n} but lists {}", t.len() - 2)));
                }
                let mut channels = Vec::with_capacity(n);
                for (i, tok) in t[2..].iter().enumerate() {
                    channels.push(
                        Channel::parse(tok)
                            .ok_or_else(|| syntax(line, i + 3, format!("unknown channel {tok:?}")))?,
                    );
                }
                joints[index].channels = channels;
            }
            "JOINT" => {
                if t.len() < 2 {
                    return Err(syntax(line, 1, "JOINT needs a name"));
                }
                let child = t[1].to_string();
                parse_joint_body(lines, joints, child, Some(index), line)?;
            }
            "End" => {
                // "End Site" block: a braced OFFSET
                match lines.next() {
                    Some((_, t)) if t[0] == "{" => {}
                    _ => return Err(syntax(line, 1, "expected '{' after End Site")),
                }
                let (oline, ot) = match lines.next() {
                    Some(v) => (v.0, v.1.clone()),
                    None => return Err(syntax(line, 1, "unterminated End Site")),
                };
                if ot[0] != "OFFSET" || ot.len() != 4 {
                    return Err(syntax(oline, 1, "End Site must contain an OFFSET"));
                }
                let mut off = [0.0; 3];
                for (axis, tok) in ot[1..].iter().enumerate() {
                    off[axis] = parse_f64(tok, oline, axis + 2)?;
                }
                joints[index].end_site = Some(off);
                match lines.next() {
                    Some((_, t)) if t[0] == "}" => {}
                    _ => return Err(syntax(oline, 1, "expected '}' closing End Site")),
                }
            }
            "}" => return Ok(()),
            other => return Err(syntax(line, 1, format!("unexpected token {other:?}"))),
        }
    }
}

// ── Writing ────────────────────────────────────────────────────────────────

/// Emit a clip as standard BVH text (tab-indented, six decimal places).
pub fn write_bvh(clip: &MotionClip) -> String {
    let mut out = String::new();
    out.push_str("HIERARCHY\n");
    if let Some(root) = clip.skeleton.joints.iter().position(|j| j.parent.is_none()) {
        write_joint(&clip.skeleton, root, 0, &mut out);
    }
    out.push_str("MOTION\n");
    let _ = writeln!(out, "Frames: {}", clip.frames.len());
    let _ = writeln!(out, "Frame Time: {:.6}", clip.frame_time);
    for frame in &clip.frames {
        let row: Vec<String> = frame.iter().map(|v| format!("{v:.6}")).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

fn write_joint(skeleton: &Skeleton, index: usize, depth: usize, out: &mut String) {
    let joint = &skeleton.joints[index];
    let indent = "\t".repeat(depth);
    let keyword = if joint.parent.is_none() { "ROOT" } else { "JOINT" };
    let _ = writeln!(out, "{indent}{keyword} {}", joint.name);
    let _ = writeln!(out, "{indent}{{");
    let inner = "\t".repeat(depth + 1);
    let _ = writeln!(
        out,
        "{inner}OFFSET {:.6} {:.6} {:.6}",
        joint.offset[0], joint.offset[1], joint.offset[2]
    );
    let names: Vec<&str> = joint.channels.iter().map(|c| c.name()).collect();
    let _ = writeln!(out, "{inner}CHANNELS {} {}", names.len(), names.join(" "));
    for &child in &joint.children {
        write_joint(skeleton, child, depth + 1, out);
    }
    if let Some(end) = joint.end_site {
        let _ = writeln!(out, "{inner}End Site");
        let _ = writeln!(out, "{inner}{{");
        let _ = writeln!(
            out,
            "{inner}\tOFFSET {:.6} {:.6} {:.6}",
            end[0], end[1], end[2]
        );
        let _ = writeln!(out, "{inner}}}");
    }
    let _ = writeln!(out, "{indent}}}");
}

// ── Forward kinematics ─────────────────────────────────────────────────────

type Mat3 = [[f64; 3]; 3];

const IDENTITY: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut m = [[0.0; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    m
}

fn mat_apply(m: &Mat3, v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

fn axis_rotation(channel: Channel, degrees: f64) -> Mat3 {
    let r = degrees.to_radians();
    let (s, c) = r.sin_cos();
    match channel {
        Channel::Xrotation => [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]],
        Channel::Yrotation => [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]],
        Channel::Zrotation => [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]],
        _ => IDENTITY,
    }
}

/// Global joint positions (meters) for one frame, in joint order.
pub fn forward_kinematics(clip: &MotionClip, frame_index: usize) -> Result<Vec<[f64; 3]>, BvhError> {
    if frame_index >= clip.frames.len() {
        return Err(BvhError::Index {
            index: frame_index,
            count: clip.frames.len(),
        });
    }
    let frame = &clip.frames[frame_index];
    let joints = &clip.skeleton.joints;
    let mut rotations: Vec<Mat3> = Vec::with_capacity(joints.len());
    let mut positions: Vec<[f64; 3]> = Vec::with_capacity(joints.len());

    let mut channel_base = 0;
    for joint in joints {
        let mut local_rot = IDENTITY;
        let mut local_trans = joint.offset;
        for (k, &ch) in joint.channels.iter().enumerate() {
            let value = frame[channel_base + k];
            match ch {
                Channel::Xposition => local_trans[0] += value,
                Channel::Yposition => local_trans[1] += value,
                Channel::Zposition => local_trans[2] += value,
                _ => local_rot = mat_mul(&local_rot, &axis_rotation(ch, value)),
            }
        }
        channel_base += joint.channels.len();

        let (global_rot, global_pos) = match joint.parent {
            Some(p) => {
                let rot = mat_mul(&rotations[p], &local_rot);
                let off = mat_apply(&rotations[p], local_trans);
                (
                    rot,
                    [
                        positions[p][0] + off[0],
                        positions[p][1] + off[1],
                        positions[p][2] + off[2],
                    ],
                )
            }
            None => (local_rot, local_trans),
        };
        rotations.push(global_rot);
        positions.push(global_pos);
    }
    Ok(positions)
}

/// Mean speed of all joints per non-overlapping window.
///
/// Speeds come from finite differences of consecutive-frame joint
/// positions, averaged over joints and over the frames in each window.
pub fn mean_joint_speed(clip: &MotionClip, window_s: f64) -> Result<Vec<f64>, BvhError> {
    if window_s < 2.0 * clip.frame_time {
        return Err(BvhError::TooShort(format!(
            "window {window_s} s is below two frame times ({})",
            2.0 * clip.frame_time
        )));
    }
    let frames_per_window = (window_s / clip.frame_time).round().max(1.0) as usize;
    if clip.frames.len() < frames_per_window + 1 {
        return Err(BvhError::TooShort(format!(
            "clip has {} frames, need at least {}",
            clip.frames.len(),
            frames_per_window + 1
        )));
    }

    let n_joints = clip.skeleton.joint_count() as f64;
    let dt = clip.frame_time;
    let mut prev = forward_kinematics(clip, 0)?;
    let mut speeds = Vec::with_capacity(clip.frames.len() - 1);
    for f in 1..clip.frames.len() {
        let cur = forward_kinematics(clip, f)?;
        let mut acc = 0.0;
        for (a, b) in prev.iter().zip(&cur) {
            let d = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
            acc += (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        }
        speeds.push(acc / (n_joints * dt));
        prev = cur;
    }

    Ok(speeds
        .chunks_exact(frames_per_window)
        .map(|w| w.iter().sum::<f64>() / w.len() as f64)
        .collect())
}

// ── MET lookup ─────────────────────────────────────────────────────────────

/// Action label to MET mapping. Shipped values are editable configuration,
/// not ground truth; fill them from a MET compendium for serious use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MetTable {
    pub entries: BTreeMap<String, f64>,
}

impl MetTable {
    pub fn validate(&self) -> Result<(), BvhError> {
        for (label, &met) in &self.entries {
            if met < 0.9 {
                return Err(BvhError::UnknownAction(format!(
                    "{label} maps to MET {met} below the 0.9 floor"
                )));
            }
        }
        Ok(())
    }

    pub fn met_for_label(&self, label: &str) -> Option<f64> {
        self.entries.get(label).copied()
    }
}

/// Either a table lookup key or a measured speed.
#[derive(Debug, Clone, PartialEq)]
pub enum MetQuery {
    Label(String),
    /// Meters per second.
    Velocity(f64),
}

/// Resolve an action to a MET value: labels through the table, velocities
/// through the inverse of the scenario walking-speed proxy (rest floor 1.0).
pub fn met_for_action(query: &MetQuery, table: &MetTable) -> Result<f64, BvhError> {
    match query {
        MetQuery::Label(label) => table
            .met_for_label(label)
            .ok_or_else(|| BvhError::UnknownAction(label.clone())),
        MetQuery::Velocity(v) => Ok(1.0 + v.max(0.0) / crate::scenario::MET_TO_VELOCITY),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TWO_JOINT: &str = "\
HIERARCHY
ROOT Hips
{
\tOFFSET 0.000000 0.000000 0.000000
\tCHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation
\tJOINT Chest
\t{
\t\tOFFSET 0.000000 0.200000 0.000000
\t\tCHANNELS 3 Zrotation Xrotation Yrotation
\t\tEnd Site
\t\t{
\t\t\tOFFSET 0.000000 0.300000 0.000000
\t\t}
\t}
}
MOTION
Frames: 1
Frame Time: 0.008333
1.000000 2.000000 3.000000 0.000000 0.000000 0.000000 0.000000 0.000000 0.000000
";

    fn two_joint_clip() -> MotionClip {
        parse_bvh(TWO_JOINT).unwrap()
    }

    #[test]
    fn parses_minimal_two_joint_file() {
        let clip = two_joint_clip();
        assert_eq!(clip.skeleton.joint_count(), 2);
        assert_eq!(clip.frames.len(), 1);
        assert_eq!(clip.skeleton.joints[0].name, "Hips");
        assert_eq!(clip.skeleton.joints[1].name, "Chest");
        assert_eq!(clip.skeleton.joints[1].parent, Some(0));
        assert_eq!(clip.skeleton.joints[1].end_site, Some([0.0, 0.3, 0.0]));
        assert!((clip.frame_time - 0.008333).abs() < 1e-9);
    }

    #[test]
    fn frame_value_count_mismatch_errors() {
        let bad = TWO_JOINT.replace(
            "1.000000 2.000000 3.000000 0.000000 0.000000 0.000000 0.000000 0.000000 0.000000",
            "1.0 2.0 3.0",
        );
        match parse_bvh(&bad) {
            Err(BvhError::ChannelMismatch { expected: 9, got: 3, .. }) => {}
            other => panic!("expected ChannelMismatch, got {other:?}"),
        }
    }

    #[test]
    fn missing_sections_error() {
        assert_eq!(
            parse_bvh("MOTION\nFrames: 0\n"),
            Err(BvhError::MissingSection("HIERARCHY"))
        );
        let no_motion = TWO_JOINT.split("MOTION").next().unwrap();
        assert_eq!(parse_bvh(no_motion), Err(BvhError::MissingSection("MOTION")));
    }

    #[test]
    fn bad_channel_set_rejected() {
        let bad = TWO_JOINT.replace(
            "CHANNELS 3 Zrotation Xrotation Yrotation",
            "CHANNELS 3 Zrotation Xrotation Xrotation",
        );
        assert!(matches!(
            parse_bvh(&bad),
            Err(BvhError::UnsupportedChannels { .. })
        ));
    }

    #[test]
    fn write_then_parse_round_trips() {
        let clip = two_joint_clip();
        let text = write_bvh(&clip);
        let back = parse_bvh(&text).unwrap();
        assert_eq!(back.skeleton, clip.skeleton);
        for (a, b) in clip.frames.iter().flatten().zip(back.frames.iter().flatten()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn empty_frames_written_as_zero() {
        let mut clip = two_joint_clip();
        clip.frames.clear();
        let text = write_bvh(&clip);
        assert!(text.contains("Frames: 0"));
        assert_eq!(parse_bvh(&text).unwrap().frames.len(), 0);
    }

    #[test]
    fn frame_time_formatting() {
        let mut clip = two_joint_clip();
        clip.frame_time = 1.0 / 120.0;
        let text = write_bvh(&clip);
        assert!(text.contains("Frame Time: 0.008333"), "{text}");
    }

    #[test]
    fn fk_zero_rotations_accumulates_offsets() {
        let clip = two_joint_clip();
        let pos = forward_kinematics(&clip, 0).unwrap();
        // root translated by (1,2,3); child offset (0,0.2,0) on top
        assert_eq!(pos[0], [1.0, 2.0, 3.0]);
        assert_eq!(pos[1], [1.0, 2.2, 3.0]);
    }

    #[test]
    fn fk_rigid_translation_moves_all_joints() {
        let mut clip = two_joint_clip();
        clip.frames[0][0] += 5.0;
        let pos = forward_kinematics(&clip, 0).unwrap();
        assert_eq!(pos[0], [6.0, 2.0, 3.0]);
        assert_eq!(pos[1], [6.0, 2.2, 3.0]);
    }

    #[test]
    fn fk_rotation_matches_hand_matrix() {
        // 90 degrees about Z on the root turns the child's +Y offset into -X
        let mut clip = two_joint_clip();
        clip.frames[0] = vec![0.0, 0.0, 0.0, 90.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let pos = forward_kinematics(&clip, 0).unwrap();
        assert!((pos[1][0] - (-0.2)).abs() < 1e-12, "{:?}", pos[1]);
        assert!(pos[1][1].abs() < 1e-12);
        assert!(pos[1][2].abs() < 1e-12);
    }

    #[test]
    fn fk_index_out_of_range() {
        let clip = two_joint_clip();
        assert!(matches!(
            forward_kinematics(&clip, 5),
            Err(BvhError::Index { index: 5, count: 1 })
        ));
    }

    fn clip_with_frames(frames: Vec<Vec<f64>>, frame_time: f64) -> MotionClip {
        let mut clip = two_joint_clip();
        clip.frame_time = frame_time;
        clip.frames = frames;
        clip
    }

    #[test]
    fn static_pose_has_zero_speed() {
        let frame = vec![0.0; 9];
        let clip = clip_with_frames(vec![frame; 120], 1.0 / 120.0);
        let speeds = mean_joint_speed(&clip, 0.25).unwrap();
        assert!(!speeds.is_empty());
        assert!(speeds.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rigid_translation_speed_is_exact() {
        // root moving +X at 1 m/s
        let ft = 1.0 / 120.0;
        let frames: Vec<Vec<f64>> = (0..240)
            .map(|i| vec![i as f64 * ft, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])
            .collect();
        let clip = clip_with_frames(frames, ft);
        for v in mean_joint_speed(&clip, 0.5).unwrap() {
            assert!((v - 1.0).abs() < 1e-9, "{v}");
        }
    }

    #[test]
    fn oscillating_joint_matches_finite_difference_oracle() {
        // child rotates sinusoidally about Z; oracle recomputes the same
        // finite differences from raw positions
        let ft = 1.0 / 120.0;
        let frames: Vec<Vec<f64>> = (0..120)
            .map(|i| {
                let angle = 30.0 * (2.0 * std::f64::consts::PI * i as f64 * ft).sin();
                vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, angle, 0.0, 0.0]
            })
            .collect();
        let clip = clip_with_frames(frames, ft);
        let speeds = mean_joint_speed(&clip, 0.25).unwrap();

        let positions: Vec<Vec<[f64; 3]>> = (0..clip.frames.len())
            .map(|f| forward_kinematics(&clip, f).unwrap())
            .collect();
        let per_step: Vec<f64> = positions
            .windows(2)
            .map(|w| {
                let mut acc = 0.0;
                for (a, b) in w[0].iter().zip(&w[1]) {
                    let d = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
                    acc += (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                }
                acc / (2.0 * ft)
            })
            .collect();
        let k = (0.25 / ft).round() as usize;
        for (w, expect) in speeds.iter().zip(per_step.chunks_exact(k)) {
            let oracle = expect.iter().sum::<f64>() / expect.len() as f64;
            assert!((w - oracle).abs() < 1e-6, "{w} vs {oracle}");
        }
    }

    #[test]
    fn window_below_two_frames_rejected() {
        let clip = two_joint_clip();
        assert!(matches!(
            mean_joint_speed(&clip, 0.001),
            Err(BvhError::TooShort(_))
        ));
    }

    #[test]
    fn met_lookup_and_fallback() {
        let table = MetTable {
            entries: [("sitting".to_string(), 1.0)].into_iter().collect(),
        };
        assert_eq!(
            met_for_action(&MetQuery::Label("sitting".into()), &table).unwrap(),
            1.0
        );
        assert!(matches!(
            met_for_action(&MetQuery::Label("flying".into()), &table),
            Err(BvhError::UnknownAction(_))
        ));
        assert_eq!(met_for_action(&MetQuery::Velocity(0.0), &table).unwrap(), 1.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        // parse(write(clip)) preserves channel data to 1e-6
        #[test]
        fn round_trip_preserves_channels(
            seed_values in proptest::collection::vec(-180.0f64..180.0, 9 * 4),
        ) {
            let frames: Vec<Vec<f64>> = seed_values.chunks(9).map(|c| c.to_vec()).collect();
            let clip = clip_with_frames(frames, 1.0 / 120.0);
            let back = parse_bvh(&write_bvh(&clip)).unwrap();
            prop_assert_eq!(back.frames.len(), clip.frames.len());
            for (a, b) in clip.frames.iter().flatten().zip(back.frames.iter().flatten()) {
                prop_assert!((a - b).abs() < 1e-6);
            }
        }

        // FK of a frame is unaffected by appending more frames
        #[test]
        fn fk_is_pure_per_frame(extra in 1usize..5) {
            let base = vec![vec![0.5, 0.1, -0.2, 10.0, 20.0, 30.0, 5.0, -5.0, 15.0]];
            let clip = clip_with_frames(base.clone(), 1.0 / 120.0);
            let mut longer_frames = base;
            for i in 0..extra {
                longer_frames.push(vec![i as f64; 9]);
            }
            let longer = clip_with_frames(longer_frames, 1.0 / 120.0);
            prop_assert_eq!(
                forward_kinematics(&clip, 0).unwrap(),
                forward_kinematics(&longer, 0).unwrap()
            );
        }

        // mean speed is nonnegative, zero iff all frames in window identical
        #[test]
        fn speed_nonnegative(angles in proptest::collection::vec(-45.0f64..45.0, 25)) {
            let frames: Vec<Vec<f64>> = angles
                .iter()
                .map(|&a| vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, a, 0.0, 0.0])
                .collect();
            let identical = frames.windows(2).all(|w| w[0] == w[1]);
            let clip = clip_with_frames(frames, 1.0 / 120.0);
            let speeds = mean_joint_speed(&clip, 24.0 / 120.0).unwrap();
            for v in &speeds {
                prop_assert!(*v >= 0.0);
                if identical {
                    prop_assert_eq!(*v, 0.0);
                }
            }
        }
    }
}
