//! Line-oriented scene files.
//!
//! A document is a sequence of sections: `[room]`, `[surface]`,
//! `[occluder]`, `[unit]` and optionally `[receiver]`. Each section holds
//! `key = values` lines; values are whitespace-separated numbers. `#` starts
//! a comment. Lengths are metres, powers watts, frequencies hertz.
//!
//! ```text
//! [room]
//! dims = 4 8 3
//! comm_floor = 1
//!
//! [unit]
//! pos = 1 1 3
//! power_w = 1.9
//! lambert_n = 0.65
//! tone_hz = 500e6
//! ```

use super::{LightUnit, Occluder, ReflectingSurface, Scene, SceneError, ToneConfig};
use crate::geom::{Aabb, Point3, Rect, Vec3};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SceneParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("invalid scene: {0}")]
    Semantic(#[from] SceneError),
}

fn syntax(line: usize, msg: impl Into<String>) -> SceneParseError {
    SceneParseError::Syntax {
        line,
        msg: msg.into(),
    }
}

/// Optional receiver configuration carried alongside the geometry.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReceiverOverrides {
    pub pos: Option<Point3>,
    /// (rows, cols) of the pixel grid.
    pub grid: Option<(usize, usize)>,
    pub eps_r: Option<f64>,
    pub load_ohm: Option<f64>,
    pub responsivity: Option<f64>,
    pub fov_deg: Option<f64>,
}

/// A parsed document: the scene plus any receiver overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneDocument {
    pub scene: Scene,
    pub receiver: ReceiverOverrides,
}

/// Parse a scene document, returning only the geometry.
pub fn parse_scene(text: &str) -> Result<Scene, SceneParseError> {
    parse_document(text).map(|d| d.scene)
}

/// Parse a scene document including the `[receiver]` section.
pub fn parse_document(text: &str) -> Result<SceneDocument, SceneParseError> {
    #[derive(PartialEq, Clone, Copy)]
    enum Section {
        Room,
        Surface,
        Occluder,
        Unit,
        Receiver,
        Tones,
    }

    struct Block {
        section: Section,
        line: usize,
        keys: BTreeMap<String, (usize, Vec<f64>)>,
    }

    let mut blocks: Vec<Block> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| syntax(line_no, "unterminated section header"))?;
            let section = match name {
                "room" => Section::Room,
                "surface" => Section::Surface,
                "occluder" => Section::Occluder,
                "unit" => Section::Unit,
                "receiver" => Section::Receiver,
                "tones" => Section::Tones,
                other => return Err(syntax(line_no, format!("unknown section [{other}]"))),
            };
            blocks.push(Block {
                section,
                line: line_no,
                keys: BTreeMap::new(),
            });
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| syntax(line_no, "expected `key = values`"))?;
        let key = key.trim().to_string();
        let mut values = Vec::new();
        for tok in value.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| syntax(line_no, format!("`{tok}` is not a number")))?;
            values.push(v);
        }
        let block = blocks
            .last_mut()
            .ok_or_else(|| syntax(line_no, "key outside any section"))?;
        block.keys.insert(key, (line_no, values));
    }

    if blocks.is_empty() {
        return Err(syntax(0, "empty document, expected a [room] section"));
    }

    let take = |block: &Block, key: &str, n: usize| -> Result<Vec<f64>, SceneParseError> {
        match block.keys.get(key) {
            Some((line, vals)) if vals.len() == n => Ok(vals.clone()),
            Some((line, vals)) => Err(syntax(
                *line,
                format!("key `{key}` needs {n} values, got {}", vals.len()),
            )),
            None => Err(syntax(
                block.line,
                format!("section is missing key `{key}`"),
            )),
        }
    };
    let take_opt =
        |block: &Block, key: &str, n: usize| -> Result<Option<Vec<f64>>, SceneParseError> {
            match block.keys.get(key) {
                None => Ok(None),
                Some(_) => take(block, key, n).map(Some),
            }
        };

    let mut room: Option<(f64, f64, f64, f64)> = None;
    let mut surfaces = Vec::new();
    let mut occluders = Vec::new();
    let mut units = Vec::new();
    let mut receiver = ReceiverOverrides::default();
    let mut tone_plan: Vec<(usize, f64, usize)> = Vec::new();

    for block in &blocks {
        match block.section {
            Section::Room => {
                let dims = take(block, "dims", 3)?;
                let floor = take_opt(block, "comm_floor", 1)?
                    .map(|v| v[0])
                    .unwrap_or(1.0);
                room = Some((dims[0], dims[1], dims[2], floor));
            }
            Section::Surface => {
                let o = take(block, "origin", 3)?;
                let e = take(block, "edges", 6)?;
                let rho = take(block, "rho", 1)?[0];
                let boundary = take_opt(block, "boundary", 1)?
                    .map(|v| v[0] != 0.0)
                    .unwrap_or(true);
                surfaces.push(ReflectingSurface {
                    rect: Rect::new(
                        Point3::new(o[0], o[1], o[2]),
                        Vec3::new(e[0], e[1], e[2]),
                        Vec3::new(e[3], e[4], e[5]),
                    ),
                    rho,
                    boundary,
                });
            }
            Section::Occluder => {
                let lo = take(block, "min", 3)?;
                let hi = take(block, "max", 3)?;
                if !(lo[0] < hi[0] && lo[1] < hi[1] && lo[2] < hi[2]) {
                    return Err(SceneError::BadOccluder.into());
                }
                occluders.push(Occluder {
                    aabb: Aabb::new(
                        Point3::new(lo[0], lo[1], lo[2]),
                        Point3::new(hi[0], hi[1], hi[2]),
                    ),
                });
            }
            Section::Unit => {
                let id = units.len() + 1;
                let pos = take(block, "pos", 3)?;
                let power = take_opt(block, "power_w", 1)?.map(|v| v[0]).unwrap_or(1.9);
                let order = take_opt(block, "lambert_n", 1)?
                    .map(|v| v[0])
                    .unwrap_or(0.65);
                let mut tone = ToneConfig::default_for_unit(id);
                if let Some(v) = take_opt(block, "tone_hz", 1)? {
                    tone.frequency_hz = v[0];
                }
                if let Some(v) = take_opt(block, "tone_amp", 1)? {
                    tone.amplitude = v[0];
                }
                units.push(LightUnit {
                    id,
                    center: Point3::new(pos[0], pos[1], pos[2]),
                    power_per_emitter_w: power,
                    lambert_order: order,
                    tone,
                });
            }
            Section::Tones => {
                // Tone plan: `unit_id = frequency_hz` lines.
                for (key, (line, vals)) in &block.keys {
                    let id: usize = key
                        .parse()
                        .map_err(|_| syntax(*line, format!("tone key `{key}` is not a unit id")))?;
                    if vals.len() != 1 {
                        return Err(syntax(*line, "tone entries take a single frequency"));
                    }
                    tone_plan.push((id, vals[0], *line));
                }
            }
            Section::Receiver => {
                if let Some(v) = take_opt(block, "pos", 3)? {
                    receiver.pos = Some(Point3::new(v[0], v[1], v[2]));
                }
                if let Some(v) = take_opt(block, "grid", 2)? {
                    receiver.grid = Some((v[0] as usize, v[1] as usize));
                }
                receiver.eps_r = take_opt(block, "eps_r", 1)?.map(|v| v[0]);
                receiver.load_ohm = take_opt(block, "load_ohm", 1)?.map(|v| v[0]);
                receiver.responsivity = take_opt(block, "responsivity", 1)?.map(|v| v[0]);
                receiver.fov_deg = take_opt(block, "fov_deg", 1)?.map(|v| v[0]);
            }
        }
    }

    for (id, freq, line) in tone_plan {
        let unit = units
            .get_mut(id.wrapping_sub(1))
            .ok_or_else(|| syntax(line, format!("tone plan names unknown unit {id}")))?;
        unit.tone.frequency_hz = freq;
    }

    let (width, length, height, comm_floor) =
        room.ok_or_else(|| syntax(0, "document has no [room] section"))?;
    let scene = Scene {
        width_m: width,
        length_m: length,
        height_m: height,
        surfaces,
        occluders,
        units,
        comm_floor_z: comm_floor,
    };
    scene.validate()?;
    Ok(SceneDocument { scene, receiver })
}

fn push_floats(out: &mut String, vals: &[f64]) {
    for (i, v) in vals.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{v:?}");
    }
    out.push('\n');
}

/// Serialize a scene so that `parse_scene(serialize_scene(s)) == s`.
pub fn serialize_scene(scene: &Scene) -> String {
    let mut out = String::new();
    out.push_str("[room]\ndims = ");
    push_floats(&mut out, &[scene.width_m, scene.length_m, scene.height_m]);
    out.push_str("comm_floor = ");
    push_floats(&mut out, &[scene.comm_floor_z]);
    for s in &scene.surfaces {
        out.push_str("\n[surface]\norigin = ");
        push_floats(
            &mut out,
            &[s.rect.origin.x, s.rect.origin.y, s.rect.origin.z],
        );
        out.push_str("edges = ");
        push_floats(
            &mut out,
            &[
                s.rect.edge_u.x,
                s.rect.edge_u.y,
                s.rect.edge_u.z,
                s.rect.edge_v.x,
                s.rect.edge_v.y,
                s.rect.edge_v.z,
            ],
        );
        out.push_str("rho = ");
        push_floats(&mut out, &[s.rho]);
        out.push_str("boundary = ");
        push_floats(&mut out, &[if s.boundary { 1.0 } else { 0.0 }]);
    }
    for o in &scene.occluders {
        out.push_str("\n[occluder]\nmin = ");
        push_floats(&mut out, &[o.aabb.min.x, o.aabb.min.y, o.aabb.min.z]);
        out.push_str("max = ");
        push_floats(&mut out, &[o.aabb.max.x, o.aabb.max.y, o.aabb.max.z]);
    }
    for u in &scene.units {
        out.push_str("\n[unit]\npos = ");
        push_floats(&mut out, &[u.center.x, u.center.y, u.center.z]);
        out.push_str("power_w = ");
        push_floats(&mut out, &[u.power_per_emitter_w]);
        out.push_str("lambert_n = ");
        push_floats(&mut out, &[u.lambert_order]);
        out.push_str("tone_hz = ");
        push_floats(&mut out, &[u.tone.frequency_hz]);
        out.push_str("tone_amp = ");
        push_floats(&mut out, &[u.tone.amplitude]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::{build_room_a, build_room_b};
    use super::*;

    #[test]
    fn round_trips_both_presets() {
        for scene in [build_room_a(), build_room_b()] {
            let text = serialize_scene(&scene);
            let parsed = parse_scene(&text).unwrap();
            assert_eq!(parsed, scene);
        }
    }

    #[test]
    fn empty_text_is_a_syntax_error() {
        match parse_scene("") {
            Err(SceneParseError::Syntax { .. }) => {}
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn rho_out_of_range_is_semantic() {
        let text =
            "[room]\ndims = 4 8 3\n\n[surface]\norigin = 0 0 0\nedges = 1 0 0 0 1 0\nrho = 1.2\n";
        match parse_scene(text) {
            Err(SceneParseError::Semantic(SceneError::RhoOutOfRange(r))) => {
                assert!((r - 1.2).abs() < 1e-12)
            }
            other => panic!("expected semantic error, got {other:?}"),
        }
    }

    #[test]
    fn unit_outside_room_is_semantic() {
        let text = "[room]\ndims = 4 8 3\n\n[unit]\npos = 9 1 3\n";
        match parse_scene(text) {
            Err(SceneParseError::Semantic(SceneError::UnitOutsideRoom(1))) => {}
            other => panic!("expected semantic error, got {other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let text = "[room]\ndims = 4 8 three\n";
        match parse_scene(text) {
            Err(SceneParseError::Syntax { line: 2, .. }) => {}
            other => panic!("expected line-2 syntax error, got {other:?}"),
        }
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let text = "# a scene\n[room]\n dims = 4 8 3  # metres\n\ncomm_floor = 1\n";
        let scene = parse_scene(text).unwrap();
        assert_eq!(scene.width_m, 4.0);
        assert_eq!(scene.comm_floor_z, 1.0);
    }

    #[test]
    fn tone_plan_overrides_unit_frequencies() {
        let text = "[room]\ndims = 4 8 3\n\n[unit]\npos = 1 1 3\n\n[unit]\npos = 3 1 3\n\n[tones]\n1 = 700e6\n2 = 760e6\n";
        let scene = parse_scene(text).unwrap();
        assert_eq!(scene.units[0].tone.frequency_hz, 700e6);
        assert_eq!(scene.units[1].tone.frequency_hz, 760e6);
        let bad = "[room]\ndims = 4 8 3\n\n[unit]\npos = 1 1 3\n\n[tones]\n5 = 700e6\n";
        assert!(parse_scene(bad).is_err());
    }

    #[test]
    fn receiver_section_is_captured() {
        let text = "[room]\ndims = 4 8 3\n\n[receiver]\npos = 2 4 1\ngrid = 16 18\neps_r = 11.68\n";
        let doc = parse_document(text).unwrap();
        assert_eq!(doc.receiver.pos, Some(Point3::new(2.0, 4.0, 1.0)));
        assert_eq!(doc.receiver.grid, Some((16, 18)));
        assert_eq!(doc.receiver.eps_r, Some(11.68));
    }
}
