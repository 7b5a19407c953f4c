//! Optional N-Caltech101 runs. The dataset is never bundled: point the
//! `HULKSMASH_NCALTECH` variable at the extracted root (the directory holding
//! `Faces_easy/`, `airplanes/`, ...) to enable them.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::metrics::{Aggregation, MetricsReport};
use super::runners::judge;
use super::scenarios::OCCLUSION_LEVELS;
use crate::event_io::{
    buffer, composite, read_aer_with, AerOptions, EventStream, Placement, SceneComposition, SequenceBuffer,
};
use crate::pipeline::Pipeline;
use crate::smash::BoundingBox;
use crate::{Error, Result};

pub const DATASET_ENV: &str = "HULKSMASH_NCALTECH";
pub const FACE_CATEGORY: &str = "Faces_easy";

/// Dataset root from the environment, if it names an existing directory.
pub fn dataset_root() -> Option<PathBuf> {
    let root = PathBuf::from(std::env::var_os(DATASET_ENV)?);
    root.is_dir().then_some(root)
}

/// Sorted `.bin` recordings of one category.
pub fn list_recordings(root: &Path, category: &str) -> Result<Vec<PathBuf>> {
    let dir = root.join(category);
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .map_err(|e| Error::path(&dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "bin"))
        .collect();
    files.sort();
    Ok(files)
}

pub fn load_recording(path: &Path) -> Result<EventStream> {
    let bytes = std::fs::read(path).map_err(|e| Error::path(path, e))?;
    read_aer_with(
        &bytes,
        &AerOptions {
            regression_tolerance_us: 1_000,
            geometry: None,
        },
    )
}

/// Five recordings on a 3 x 3 grid: `faces[0..3]` top-right, bottom-left and
/// centre, `others[0..2]` top-left and bottom-right. With `pct > 0` the
/// centre is shifted onto the bottom-left tile to cover `pct` percent of it.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordingScene {
    pub composition: SceneComposition,
    pub stream: EventStream,
    /// Placement indices holding faces.
    pub faces: Vec<usize>,
    pub tile: (u16, u16),
}

pub fn recording_grid(faces: &[EventStream; 3], others: &[EventStream; 2], pct: u32) -> Result<RecordingScene> {
    if !OCCLUSION_LEVELS.contains(&pct) {
        return Err(Error::Experiment(format!(
            "occlusion level {pct}% not in {OCCLUSION_LEVELS:?}"
        )));
    }
    let inputs: Vec<EventStream> = faces.iter().chain(others).cloned().collect();
    let tw = inputs.iter().map(|s| s.width).max().unwrap_or(1);
    let th = inputs.iter().map(|s| s.height).max().unwrap_or(1);
    let gap = (tw.min(th) / 4).max(1);
    let (sx, sy) = (i32::from(tw + gap), i32::from(th + gap));
    let fraction = (f64::from(pct) / 100.0).sqrt();
    let (ax, ay) = if pct == 0 {
        (0, 0)
    } else {
        (
            i32::from(gap) + (f64::from(tw) * fraction).round() as i32,
            i32::from(gap) + (f64::from(th) * fraction).round() as i32,
        )
    };
    let origins = [(2 * sx, 0), (0, 2 * sy), (sx - ax, sy + ay), (0, 0), (2 * sx, 2 * sy)];
    let mut comp = SceneComposition::new(2 * (tw + gap) + tw, 2 * (th + gap) + th);
    for (i, &(x, y)) in origins.iter().enumerate() {
        let mut p = Placement::at(i, x, y);
        if pct > 0 {
            p = p.with_z(i32::from(i == 2));
        }
        comp = comp.place(p);
    }
    let stream = composite(&comp, &inputs)?;
    Ok(RecordingScene {
        composition: comp,
        stream,
        faces: vec![0, 1, 2],
        tile: (tw, th),
    })
}

/// Per-buffer face counts over recording scenes; one sequence per scene.
pub fn run_recording_detection(
    pipeline: &Pipeline,
    name: &str,
    scenes: &[RecordingScene],
    window_us: u64,
    aggregation: Aggregation,
) -> Result<MetricsReport> {
    let per_scene = scenes
        .par_iter()
        .enumerate()
        .map(|(seq, scene)| {
            let segs = pipeline.segment_all(&buffer(&scene.stream, window_us))?;
            let truth: Vec<BoundingBox> = scene
                .faces
                .iter()
                .map(|&i| {
                    let p = &scene.composition.placements[i];
                    let (x, y) = (p.x as u16, p.y as u16);
                    BoundingBox::new(x, y, x + scene.tile.0 - 1, y + scene.tile.1 - 1)
                })
                .collect();
            Ok(segs.iter().map(|s| judge(s, &truth, seq)).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricsReport::from_detection(
        name.into(),
        per_scene.concat(),
        aggregation,
    ))
}

/// Categories other than faces and background, sorted.
pub fn distractor_categories(root: &Path) -> Result<Vec<String>> {
    let mut names: Vec<String> = std::fs::read_dir(root)
        .map_err(|e| Error::path(root, e))?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .filter_map(|e| e.file_name().into_string().ok())
        .filter(|n| !n.starts_with("Faces") && !n.starts_with("BACKGROUND"))
        .collect();
    names.sort();
    Ok(names)
}

/// First `count` face recordings, buffered, for training.
pub fn face_training_set(root: &Path, count: usize, window_us: u64) -> Result<Vec<SequenceBuffer>> {
    let files = list_recordings(root, FACE_CATEGORY)?;
    if files.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut out = Vec::new();
    for f in files.iter().take(count) {
        out.extend(buffer(&load_recording(f)?, window_us));
    }
    Ok(out)
}

/// `count` grid scenes built from face recordings after the first `skip`
/// (held out from training) and recordings of the first two distractor
/// categories.
pub fn recording_scenes(root: &Path, skip: usize, count: usize, pct: u32) -> Result<Vec<RecordingScene>> {
    let faces = list_recordings(root, FACE_CATEGORY)?;
    let cats = distractor_categories(root)?;
    if cats.len() < 2 {
        return Err(Error::Experiment(format!(
            "{} needs two non-face categories",
            root.display()
        )));
    }
    let (a, b) = (list_recordings(root, &cats[0])?, list_recordings(root, &cats[1])?);
    (0..count)
        .map(|i| {
            let f = |k: usize| -> Result<EventStream> {
                let path = faces
                    .get(skip + 3 * i + k)
                    .ok_or_else(|| Error::Experiment(format!("not enough face recordings for scene {i}")))?;
                load_recording(path)
            };
            let other = |list: &[PathBuf]| -> Result<EventStream> {
                load_recording(list.get(i % list.len().max(1)).ok_or(Error::EmptyDataset)?)
            };
            recording_grid(&[f(0)?, f(1)?, f(2)?], &[other(&a)?, other(&b)?], pct)
        })
        .collect()
}
