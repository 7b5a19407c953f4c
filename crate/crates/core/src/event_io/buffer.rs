use serde::{Deserialize, Serialize};

use super::{Event, EventStream};

pub const DEFAULT_WINDOW_US: u64 = 10_000;

/// Events falling in `[window_start, window_start + window_duration)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceBuffer {
    pub index: usize,
    pub width: u16,
    pub height: u16,
    pub window_start: u64,
    pub window_duration: u64,
    pub events: Vec<Event>,
}

impl SequenceBuffer {
    pub fn empty(index: usize, width: u16, height: u16, window_start: u64, window_duration: u64) -> Self {
        Self {
            index,
            width,
            height,
            window_start,
            window_duration,
            events: Vec::new(),
        }
    }

    pub fn window_end(&self) -> u64 {
        self.window_start + self.window_duration
    }

    /// Quantise an event timestamp into one of `ticks` equal slices of the window.
    pub fn tick_of(&self, t: u64, ticks: u32) -> u32 {
        let offset = t.saturating_sub(self.window_start).min(self.window_duration - 1);
        ((offset * u64::from(ticks)) / self.window_duration) as u32
    }
}

/// Split a stream into contiguous windows covering `[0, last event]`.
///
/// # Panics
///
/// If `window_duration` is zero.
pub fn buffer(stream: &EventStream, window_duration: u64) -> Vec<SequenceBuffer> {
    assert!(window_duration > 0, "window duration must be positive");
    let Some(end) = stream.end_time() else {
        return Vec::new();
    };
    let count = (end / window_duration + 1) as usize;
    let mut out: Vec<SequenceBuffer> = (0..count)
        .map(|i| {
            SequenceBuffer::empty(
                i,
                stream.width,
                stream.height,
                i as u64 * window_duration,
                window_duration,
            )
        })
        .collect();
    for e in &stream.events {
        out[(e.t / window_duration) as usize].events.push(*e);
    }
    out
}
