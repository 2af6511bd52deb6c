//! Pose-track text files.
//!
//! One frame per line, whitespace separated:
//!
//! ```text
//! person_id frame_index x_min y_min x_max y_max crop_relpath j0x j0y j0c ... j16x j16y j16c
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Crop paths are
//! relative to the directory holding the track file and point at PNG files
//! whose size must equal [`BoundingBox::raster_dims`] of the frame's box.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{BoundingBox, CropFrame, Frame, Keypoint, Pose, PoseSequence, Track, TrackCrops, NUM_JOINTS};
use crate::error::{GrarError, Result};

const FIXED_FIELDS: usize = 7;
const FIELD_NAMES: [&str; FIXED_FIELDS] = [
    "person_id",
    "frame_index",
    "x_min",
    "y_min",
    "x_max",
    "y_max",
    "crop_relpath",
];

#[derive(Debug, Clone, Copy)]
pub struct LoadOptions {
    /// Decode crop images. When false, `TrackCrops` are returned empty.
    pub load_crops: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions { load_crops: true }
    }
}

pub fn load_tracks(path: &Path) -> Result<Vec<Track>> {
    load_tracks_with_options(path, LoadOptions::default())
}

pub fn load_tracks_with_options(path: &Path, opts: LoadOptions) -> Result<Vec<Track>> {
    let text = fs::read_to_string(path).map_err(|e| GrarError::io(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();

    let mut order: Vec<String> = Vec::new();
    let mut by_person: HashMap<String, (Vec<Frame>, Vec<CropFrame>)> = HashMap::new();

    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let record = parse_record(path, line_no, trimmed)?;
        let entry = by_person.entry(record.person_id.clone()).or_insert_with(|| {
            order.push(record.person_id.clone());
            (Vec::new(), Vec::new())
        });
        if opts.load_crops {
            let crop_path = base.join(&record.crop_relpath);
            let image = image::open(&crop_path)
                .map_err(|e| match e {
                    image::ImageError::IoError(io) => GrarError::io(&crop_path, io),
                    other => GrarError::image(&crop_path, other),
                })?
                .to_rgb8();
            let expected = record.frame.bbox.raster_dims();
            if image.dimensions() != expected {
                return Err(GrarError::CropDimensions {
                    person_id: record.person_id,
                    frame_index: record.frame.frame_index,
                    expected,
                    actual: image.dimensions(),
                });
            }
            entry.1.push(CropFrame {
                frame_index: record.frame.frame_index,
                image,
            });
        }
        entry.0.push(record.frame);
    }

    order
        .into_iter()
        .map(|person_id| {
            let (frames, crops) = by_person.remove(&person_id).unwrap_or_default();
            Ok(Track {
                poses: PoseSequence::new(person_id.clone(), frames)?,
                crops: TrackCrops {
                    person_id,
                    frames: crops,
                },
            })
        })
        .collect()
}

struct Record {
    person_id: String,
    crop_relpath: String,
    frame: Frame,
}

fn parse_record(path: &Path, line: usize, text: &str) -> Result<Record> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let parse_err = |field: &str, message: String| GrarError::Parse {
        path: path.to_path_buf(),
        line,
        field: field.to_string(),
        message,
    };

    if tokens.len() < FIXED_FIELDS {
        return Err(parse_err(
            FIELD_NAMES[tokens.len()],
            format!("missing field (line has {} tokens)", tokens.len()),
        ));
    }
    let joint_tokens = tokens.len() - FIXED_FIELDS;
    if !joint_tokens.is_multiple_of(3) {
        return Err(parse_err(
            "joints",
            format!("{joint_tokens} joint values is not a multiple of 3"),
        ));
    }
    if joint_tokens / 3 != NUM_JOINTS {
        return Err(GrarError::JointCount {
            path: path.to_path_buf(),
            line,
            expected: NUM_JOINTS,
            found: joint_tokens / 3,
        });
    }

    let float = |idx: usize, name: &str| -> Result<f64> {
        let v: f64 = tokens[idx]
            .parse()
            .map_err(|_| parse_err(name, format!("`{}` is not a number", tokens[idx])))?;
        if !v.is_finite() {
            return Err(parse_err(name, format!("`{}` is not finite", tokens[idx])));
        }
        Ok(v)
    };

    let frame_index: u32 = tokens[1]
        .parse()
        .map_err(|_| parse_err("frame_index", format!("`{}` is not a non-negative integer", tokens[1])))?;
    let bbox = BoundingBox::new(
        float(2, "x_min")?,
        float(3, "y_min")?,
        float(4, "x_max")?,
        float(5, "y_max")?,
    )
    .map_err(|e| parse_err("bbox", e.to_string()))?;

    let mut joints = [Keypoint::default(); NUM_JOINTS];
    for (j, joint) in joints.iter_mut().enumerate() {
        let base = FIXED_FIELDS + 3 * j;
        let x = float(base, &format!("j{j}x"))?;
        let y = float(base + 1, &format!("j{j}y"))?;
        let c = float(base + 2, &format!("j{j}c"))?;
        *joint = Keypoint::new(x, y, c).map_err(|e| parse_err(&format!("j{j}c"), e.to_string()))?;
    }

    Ok(Record {
        person_id: tokens[0].to_string(),
        crop_relpath: tokens[6].to_string(),
        frame: Frame {
            frame_index,
            pose: Pose::new(joints),
            bbox,
        },
    })
}

/// Relative path under which a crop is stored next to its track file.
pub fn crop_relpath(person_id: &str, frame_index: u32) -> PathBuf {
    PathBuf::from("crops")
        .join(person_id)
        .join(format!("{frame_index:06}.png"))
}

/// Write tracks to `path`, storing crops as PNG files under
/// `crops/<person_id>/` beside it. Tracks without crops for a frame are
/// rejected, since the file format requires a crop path per line.
pub fn write_tracks(path: &Path, tracks: &[Track]) -> Result<()> {
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut out = String::new();
    for track in tracks {
        let seq = &track.poses;
        if seq.person_id.is_empty() || seq.person_id.chars().any(char::is_whitespace) {
            return Err(GrarError::InvalidTrack(format!(
                "person id `{}` must be non-empty without whitespace",
                seq.person_id
            )));
        }
        for frame in &seq.frames {
            let crop = track
                .crops
                .get(frame.frame_index)
                .ok_or(GrarError::MissingCrop(frame.frame_index))?;
            let rel = crop_relpath(&seq.person_id, frame.frame_index);
            let full = base.join(&rel);
            if let Some(dir) = full.parent() {
                fs::create_dir_all(dir).map_err(|e| GrarError::io(dir, e))?;
            }
            crop.save_with_format(&full, image::ImageFormat::Png)
                .map_err(|e| GrarError::image(&full, e))?;

            let b = &frame.bbox;
            let _ = write!(
                out,
                "{} {} {} {} {} {} {}",
                seq.person_id,
                frame.frame_index,
                b.x_min,
                b.y_min,
                b.x_max,
                b.y_max,
                rel.to_string_lossy().replace('\\', "/")
            );
            for j in &frame.pose.joints {
                let _ = write!(out, " {} {} {}", j.x, j.y, j.confidence);
            }
            out.push('\n');
        }
    }
    fs::write(path, out).map_err(|e| GrarError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pose::fixtures;
    use image::RgbImage;

    fn track(n: u32) -> Track {
        let poses = fixtures::sequence(n);
        let (w, h) = fixtures::standing_box().raster_dims();
        let frames = (0..n)
            .map(|i| CropFrame {
                frame_index: i,
                image: RgbImage::from_fn(w, h, |x, y| image::Rgb([x as u8, y as u8, i as u8])),
            })
            .collect();
        Track {
            crops: TrackCrops {
                person_id: poses.person_id.clone(),
                frames,
            },
            poses,
        }
    }

    #[test]
    fn three_frame_track_loads() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tracks.txt");
        write_tracks(&path, &[track(3)]).unwrap();
        let loaded = load_tracks(&path).unwrap();
        assert_eq!(loaded.len(), 1);
        assert_eq!(loaded[0].poses.len(), 3);
        assert_eq!(loaded[0], track(3));
    }

    #[test]
    fn empty_file_is_empty_list() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tracks.txt");
        fs::write(&path, "").unwrap();
        assert!(load_tracks(&path).unwrap().is_empty());
    }

    #[test]
    fn wrong_crop_dimensions_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tracks.txt");
        write_tracks(&path, &[track(2)]).unwrap();
        RgbImage::new(10, 10)
            .save(dir.path().join(crop_relpath("p0", 1)))
            .unwrap();
        let err = load_tracks(&path).unwrap_err();
        assert!(
            matches!(
                err,
                GrarError::CropDimensions {
                    frame_index: 1,
                    actual: (10, 10),
                    ..
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn missing_crop_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tracks.txt");
        write_tracks(&path, &[track(2)]).unwrap();
        fs::remove_file(dir.path().join(crop_relpath("p0", 0))).unwrap();
        assert!(matches!(load_tracks(&path), Err(GrarError::Io { .. })));
    }

    #[test]
    fn malformed_number_names_line_and_field() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tracks.txt");
        let mut line = String::from("p 0 0 0 10 10 c.png");
        for j in 0..NUM_JOINTS {
            if j == 4 {
                line.push_str(" 1 oops 1");
            } else {
                line.push_str(" 1 1 1");
            }
        }
        fs::write(&path, format!("# header\n{line}\n")).unwrap();
        let err = load_tracks_with_options(&path, LoadOptions { load_crops: false }).unwrap_err();
        match err {
            GrarError::Parse { line, field, .. } => {
                assert_eq!(line, 2);
                assert_eq!(field, "j4y");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn wrong_joint_count_is_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tracks.txt");
        let mut line = String::from("p 0 0 0 10 10 c.png");
        for _ in 0..16 {
            line.push_str(" 1 1 1");
        }
        fs::write(&path, line).unwrap();
        let err = load_tracks_with_options(&path, LoadOptions { load_crops: false }).unwrap_err();
        assert!(matches!(err, GrarError::JointCount { found: 16, .. }));
    }
}
