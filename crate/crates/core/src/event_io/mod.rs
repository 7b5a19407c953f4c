//! Address-event streams: file codec, synthetic generation, scene
//! compositing, noise injection and fixed-window buffering.

mod aer;
mod buffer;
mod noise;
mod scene;
mod synth;

pub use aer::{read_aer, read_aer_with, write_aer, AerOptions, AER_RECORD_BYTES, MAX_TIMESTAMP_US};
pub use buffer::{buffer, SequenceBuffer, DEFAULT_WINDOW_US};
pub use noise::{inject_noise, inject_noise_over};
pub use scene::{composite, Placement, SceneComposition, Waypoint};
pub use synth::{synthesize_stream, SynthConfig, Template, Trajectory};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarity {
    Off,
    On,
}

/// One address-event. `t` is microseconds since the start of the stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Event {
    pub x: u16,
    pub y: u16,
    pub polarity: Polarity,
    pub t: u64,
}

impl Event {
    pub fn new(x: u16, y: u16, polarity: Polarity, t: u64) -> Self {
        Self { x, y, polarity, t }
    }
}

/// Time-ordered events on a `width` x `height` sensor.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EventStream {
    pub width: u16,
    pub height: u16,
    pub events: Vec<Event>,
}

impl EventStream {
    pub fn new(width: u16, height: u16, events: Vec<Event>) -> Self {
        Self { width, height, events }
    }

    pub fn empty(width: u16, height: u16) -> Self {
        Self::new(width, height, Vec::new())
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Timestamp of the last event, if any.
    pub fn end_time(&self) -> Option<u64> {
        self.events.last().map(|e| e.t)
    }

    /// Checks sortedness and that every event lies on the sensor.
    pub fn validate(&self) -> crate::Result<()> {
        let mut previous = 0;
        for (index, e) in self.events.iter().enumerate() {
            if e.x >= self.width || e.y >= self.height {
                return Err(crate::Error::Geometry(format!(
                    "event {index} at ({}, {}) outside {}x{} sensor",
                    e.x, e.y, self.width, self.height
                )));
            }
            if e.t < previous {
                return Err(crate::Error::Ordering {
                    index,
                    previous,
                    current: e.t,
                });
            }
            previous = e.t;
        }
        Ok(())
    }
}
