//! N-Caltech style 40-bit address-event records.
//!
//! Each record is five bytes:
//!
//! | byte | content                                     |
//! |------|---------------------------------------------|
//! | 0    | x                                           |
//! | 1    | y                                           |
//! | 2    | bit 7: polarity (1 = ON), bits 6..0: t[22..16] |
//! | 3    | t[15..8]                                    |
//! | 4    | t[7..0]                                     |

use super::{Event, EventStream, Polarity};
use crate::{Error, Result};

pub const AER_RECORD_BYTES: usize = 5;
/// Exclusive upper bound of the 23-bit timestamp field.
pub const MAX_TIMESTAMP_US: u64 = 1 << 23;

#[derive(Debug, Clone, Copy, Default)]
pub struct AerOptions {
    /// Largest tolerated backwards jump in microseconds. Jittered events
    /// within the tolerance are re-sorted by timestamp.
    pub regression_tolerance_us: u64,
    /// Sensor geometry; inferred from the largest coordinates when `None`.
    pub geometry: Option<(u16, u16)>,
}

pub fn read_aer(bytes: &[u8]) -> Result<EventStream> {
    read_aer_with(bytes, &AerOptions::default())
}

pub fn read_aer_with(bytes: &[u8], options: &AerOptions) -> Result<EventStream> {
    if bytes.len() % AER_RECORD_BYTES != 0 {
        let offset = bytes.len() - bytes.len() % AER_RECORD_BYTES;
        return Err(Error::Format {
            offset,
            reason: format!("truncated record: {} trailing byte(s)", bytes.len() - offset),
        });
    }

    let mut events = Vec::with_capacity(bytes.len() / AER_RECORD_BYTES);
    let mut latest = 0u64;
    let mut jittered = false;
    for (index, record) in bytes.chunks_exact(AER_RECORD_BYTES).enumerate() {
        let polarity = if record[2] & 0x80 != 0 {
            Polarity::On
        } else {
            Polarity::Off
        };
        let t = (u64::from(record[2] & 0x7f) << 16) | (u64::from(record[3]) << 8) | u64::from(record[4]);
        if t < latest {
            if latest - t > options.regression_tolerance_us {
                return Err(Error::Ordering {
                    index,
                    previous: latest,
                    current: t,
                });
            }
            jittered = true;
        }
        latest = latest.max(t);
        events.push(Event::new(record[0].into(), record[1].into(), polarity, t));
    }
    if jittered {
        events.sort_by_key(|e| e.t);
    }

    let (width, height) = match options.geometry {
        Some((w, h)) => {
            if let Some(e) = events.iter().find(|e| e.x >= w || e.y >= h) {
                return Err(Error::Geometry(format!(
                    "event at ({}, {}) outside declared {w}x{h} sensor",
                    e.x, e.y
                )));
            }
            (w, h)
        }
        None => (
            events.iter().map(|e| e.x + 1).max().unwrap_or(0),
            events.iter().map(|e| e.y + 1).max().unwrap_or(0),
        ),
    };
    Ok(EventStream::new(width, height, events))
}

pub fn write_aer(stream: &EventStream) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(stream.len() * AER_RECORD_BYTES);
    for (index, e) in stream.events.iter().enumerate() {
        if e.x > 255 {
            return Err(Error::Encode {
                index,
                field: "x",
                value: e.x.into(),
            });
        }
        if e.y > 255 {
            return Err(Error::Encode {
                index,
                field: "y",
                value: e.y.into(),
            });
        }
        if e.t >= MAX_TIMESTAMP_US {
            return Err(Error::Encode {
                index,
                field: "t",
                value: e.t,
            });
        }
        let pol = if e.polarity == Polarity::On { 0x80 } else { 0 };
        out.extend_from_slice(&[
            e.x as u8,
            e.y as u8,
            pol | ((e.t >> 16) as u8 & 0x7f),
            (e.t >> 8) as u8,
            e.t as u8,
        ]);
    }
    Ok(out)
}
