//! Frame renders and feature atlases: PGM for masks and accumulated input,
//! PNG for id-coloured overlays.

use std::path::{Path, PathBuf};

use image::{GrayImage, Luma, Rgb, RgbImage};

use crate::pipeline::{Frame, Segmentation};
use crate::scnn::{LayerConfig, Network};
use crate::smash::BoundingBox;
use crate::{Error, Result, SequenceBuffer};

/// Pixels touched by any event of the buffer, white on black.
pub fn input_image(buffer: &SequenceBuffer) -> GrayImage {
    let mut img = GrayImage::new(u32::from(buffer.width), u32::from(buffer.height));
    for e in &buffer.events {
        if e.x < buffer.width && e.y < buffer.height {
            img.put_pixel(u32::from(e.x), u32::from(e.y), Luma([255]));
        }
    }
    img
}

/// Semantic mask with class `c` drawn at grey level `255 - 32 * c`.
pub fn mask_image(seg: &Segmentation) -> GrayImage {
    let m = &seg.mask;
    let mut img = GrayImage::new(u32::from(m.width), u32::from(m.height));
    for (c, pixels) in m.classes.iter().enumerate() {
        let level = 255u8.saturating_sub((32 * c).min(255) as u8).max(1);
        for &(x, y) in pixels {
            img.put_pixel(u32::from(x), u32::from(y), Luma([level]));
        }
    }
    img
}

/// Stable, well separated colour for an id.
pub fn id_colour(id: u64) -> Rgb<u8> {
    let hue = (id as f64 * 0.618_033_988_749_895).fract() * 6.0;
    let f = hue.fract();
    let (hi, lo, up, down) = (255.0, 60.0, 60.0 + 195.0 * f, 255.0 - 195.0 * f);
    let (r, g, b) = match hue as u32 {
        0 => (hi, up, lo),
        1 => (down, hi, lo),
        2 => (lo, hi, up),
        3 => (lo, down, hi),
        4 => (up, lo, hi),
        _ => (hi, lo, down),
    };
    Rgb([r as u8, g as u8, b as u8])
}

fn canvas(seg: &Segmentation) -> RgbImage {
    RgbImage::new(u32::from(seg.mask.width), u32::from(seg.mask.height))
}

fn paint(img: &mut RgbImage, pixels: &[(u16, u16)], colour: Rgb<u8>) {
    for &(x, y) in pixels {
        if u32::from(x) < img.width() && u32::from(y) < img.height() {
            img.put_pixel(u32::from(x), u32::from(y), colour);
        }
    }
}

fn outline(img: &mut RgbImage, b: &BoundingBox, colour: Rgb<u8>) {
    let (w, h) = (img.width(), img.height());
    if w == 0 || h == 0 {
        return;
    }
    let (x0, y0) = (u32::from(b.x_min).min(w - 1), u32::from(b.y_min).min(h - 1));
    let (x1, y1) = (u32::from(b.x_max).min(w - 1), u32::from(b.y_max).min(h - 1));
    for x in x0..=x1 {
        img.put_pixel(x, y0, colour);
        img.put_pixel(x, y1, colour);
    }
    for y in y0..=y1 {
        img.put_pixel(x0, y, colour);
        img.put_pixel(x1, y, colour);
    }
}

/// Each instance trace in its own colour.
pub fn instances_image(seg: &Segmentation) -> RgbImage {
    let mut img = canvas(seg);
    for t in &seg.instances {
        paint(&mut img, &t.pixels, id_colour(t.id as u64));
    }
    img
}

/// Pixels of each grouped object in one colour, with its bounding box.
pub fn objects_image(seg: &Segmentation) -> RgbImage {
    let mut img = canvas(seg);
    for o in &seg.grouping.objects {
        let colour = id_colour(o.id as u64);
        for &m in &o.members {
            if let Some(t) = seg.instances.get(m) {
                paint(&mut img, &t.pixels, colour);
            }
        }
        outline(&mut img, &o.bbox, colour);
    }
    img
}

/// Object pixels and boxes coloured by persistent track id.
pub fn track_image(seg: &Segmentation, frame: &Frame) -> RgbImage {
    let mut img = canvas(seg);
    for o in &frame.objects {
        let colour = id_colour(o.id);
        for &m in &o.members {
            if let Some(t) = seg.instances.get(m) {
                paint(&mut img, &t.pixels, colour);
            }
        }
        outline(&mut img, &o.bbox, colour);
    }
    img
}

fn save_gray(img: &GrayImage, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::path(dir, e))?;
    }
    Ok(img.save(path)?)
}

fn save_rgb(img: &RgbImage, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::path(dir, e))?;
    }
    Ok(img.save(path)?)
}

/// Writes `input`, `mask`, `instances` and `objects` renders for one buffer
/// into `dir` and returns the paths in that order.
pub fn write_stage_frames(dir: &Path, buffer: &SequenceBuffer, seg: &Segmentation) -> Result<Vec<PathBuf>> {
    let stem = format!("{:05}", seg.index);
    let paths = [
        dir.join(format!("{stem}_input.pgm")),
        dir.join(format!("{stem}_mask.pgm")),
        dir.join(format!("{stem}_instances.png")),
        dir.join(format!("{stem}_objects.png")),
    ];
    save_gray(&input_image(buffer), &paths[0])?;
    save_gray(&mask_image(seg), &paths[1])?;
    save_rgb(&instances_image(seg), &paths[2])?;
    save_rgb(&objects_image(seg), &paths[3])?;
    Ok(paths.to_vec())
}

pub fn write_track_frame(dir: &Path, seg: &Segmentation, frame: &Frame) -> Result<PathBuf> {
    let path = dir.join(format!("{:05}_track.png", frame.index));
    save_rgb(&track_image(seg, frame), &path)?;
    Ok(path)
}

/// A feature map projected to pixel space.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTile {
    pub layer: String,
    pub feature: u16,
    pub size: u16,
    /// Pixel distance between neighbouring locations of the tile's layer.
    pub jump: u16,
    /// Row-major, `size * size`.
    pub values: Vec<f32>,
}

impl FeatureTile {
    /// Values min-max scaled to `0..=255`; a constant tile renders black.
    pub fn to_image(&self) -> GrayImage {
        let (lo, hi) = self
            .values
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let span = hi - lo;
        let s = u32::from(self.size);
        GrayImage::from_fn(s, s, |x, y| {
            let v = self.values[(y * s + x) as usize];
            Luma([if span > 0.0 {
                ((v - lo) / span * 255.0).round() as u8
            } else {
                0
            }])
        })
    }
}

/// Every conv feature map back-projected through the layers below it.
///
/// A conv output is the weighted sum of its input projections shifted by the
/// kernel offset; a pooling output is the sum over its window. Tiles grow
/// with the receptive field.
pub fn feature_atlas(network: &Network) -> Vec<FeatureTile> {
    // Projections of the current stage's features, their side and the pixel
    // distance between neighbouring stage locations.
    let mut proj: Vec<Vec<f32>> = vec![vec![1.0]];
    let (mut size, mut jump) = (1usize, 1usize);
    let mut tiles = Vec::new();
    for (i, layer) in network.config.layers.iter().enumerate() {
        let (k, step, weights) = match layer {
            LayerConfig::Pool(p) => (usize::from(p.size), usize::from(p.size), None),
            LayerConfig::Conv(c) => (
                usize::from(c.kernel),
                usize::from(c.stride),
                network.kernels[i].as_ref(),
            ),
        };
        let new_size = size + (k - 1) * jump;
        let outputs = weights.map_or(proj.len(), |w| usize::from(w.out_features));
        let mut next = vec![vec![0.0f32; new_size * new_size]; outputs];
        for (o, out) in next.iter_mut().enumerate() {
            for (f, src) in proj.iter().enumerate() {
                if weights.is_none() && f != o {
                    continue;
                }
                for ky in 0..k {
                    for kx in 0..k {
                        let w = weights.map_or(1.0, |w| w.get(o as u16, f as u16, ky as u16, kx as u16));
                        if w == 0.0 {
                            continue;
                        }
                        let (oy, ox) = (ky * jump, kx * jump);
                        for y in 0..size {
                            for x in 0..size {
                                out[(oy + y) * new_size + ox + x] += w * src[y * size + x];
                            }
                        }
                    }
                }
            }
        }
        proj = next;
        size = new_size;
        if let LayerConfig::Conv(c) = layer {
            tiles.extend(proj.iter().enumerate().map(|(f, v)| FeatureTile {
                layer: c.name.clone(),
                feature: f as u16,
                size: size as u16,
                jump: (jump * step) as u16,
                values: v.clone(),
            }));
        }
        jump *= step;
    }
    tiles
}

/// Tiles of one layer side by side with a one pixel gap.
pub fn atlas_strip(tiles: &[&FeatureTile]) -> GrayImage {
    let side = tiles.iter().map(|t| u32::from(t.size)).max().unwrap_or(0);
    let cols = (tiles.len() as f64).sqrt().ceil().max(1.0) as u32;
    let rows = (tiles.len() as u32).div_ceil(cols);
    let mut img = GrayImage::new(cols * (side + 1), rows * (side + 1));
    for (n, t) in tiles.iter().enumerate() {
        let (cx, cy) = (n as u32 % cols, n as u32 / cols);
        image::imageops::replace(
            &mut img,
            &t.to_image(),
            i64::from(cx * (side + 1)),
            i64::from(cy * (side + 1)),
        );
    }
    img
}

/// Writes one PGM per tile and one atlas per layer; returns the tile paths.
pub fn write_atlas(dir: &Path, tiles: &[FeatureTile]) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::with_capacity(tiles.len());
    let mut layers: Vec<&str> = Vec::new();
    for t in tiles {
        let path = dir.join(format!("{}_{:03}.pgm", t.layer, t.feature));
        save_gray(&t.to_image(), &path)?;
        paths.push(path);
        if !layers.contains(&t.layer.as_str()) {
            layers.push(&t.layer);
        }
    }
    for layer in layers {
        let members: Vec<&FeatureTile> = tiles.iter().filter(|t| t.layer == layer).collect();
        save_gray(&atlas_strip(&members), &dir.join(format!("atlas_{layer}.pgm")))?;
    }
    Ok(paths)
}

/// `tile` drawn over `frame` with its top-left corner at `at`, keeping the
/// brighter value per pixel.
pub fn overlay_tile(frame: &GrayImage, tile: &GrayImage, at: (u32, u32)) -> GrayImage {
    let mut out = frame.clone();
    for (x, y, p) in tile.enumerate_pixels() {
        let (fx, fy) = (at.0 + x, at.1 + y);
        if fx < out.width() && fy < out.height() {
            let q = out.get_pixel_mut(fx, fy);
            q.0[0] = q.0[0].max(p.0[0]);
        }
    }
    out
}

/// Input frame with the class-layer tile of every classification spike
/// drawn over the pixels it covers.
pub fn class_overlay(network: &Network, tiles: &[FeatureTile], buffer: &SequenceBuffer) -> Result<GrayImage> {
    let class_name = match network.config.layers.last() {
        Some(LayerConfig::Conv(c)) => c.name.as_str(),
        _ => return Err(Error::Config("network must end in a conv layer".into())),
    };
    let activity = network.encode(buffer)?;
    let mut frame = input_image(buffer);
    for s in &activity.classification().spikes {
        let Some(tile) = tiles.iter().find(|t| t.layer == class_name && t.feature == s.feature) else {
            continue;
        };
        let j = u32::from(tile.jump);
        let centre = |v: u16| u32::from(v) * j + j / 2;
        let half = u32::from(tile.size) / 2;
        let at = (centre(s.x).saturating_sub(half), centre(s.y).saturating_sub(half));
        frame = overlay_tile(&frame, &tile.to_image(), at);
    }
    Ok(frame)
}
