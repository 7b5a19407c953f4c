//! Spiking encoder-decoder instance segmentation and tracking for
//! address-event streams.
//!
//! Buffers of events are encoded by a spiking convolutional network, every
//! classification spike is decoded back to pixels on its own, the decoded
//! traces are hashed into binary feature x tick matrices and merged by
//! similarity x box overlap, and the resulting objects are tracked across
//! buffers by binary Jaccard matching.

pub mod decoder;
pub mod error;
pub mod eval;
pub mod event_io;
pub mod hulk;
pub mod pipeline;
pub mod render;
pub mod scnn;
pub mod smash;
pub mod tracker;

pub use decoder::{decode_semantic, record_provenance, DecodeNode, DecodePath, DecodeTree, SemanticMask};
pub use error::{Error, Result};
pub use event_io::{buffer, Event, EventStream, Polarity, SequenceBuffer};
pub use hulk::{unravel, unravel_all, InstanceTrace};
pub use pipeline::{track_segmented, Frame, Pipeline, Segmentation, TrackEntry};
pub use scnn::{Network, NetworkConfig, SpikeRecord, SpikeTensor};
pub use smash::{AshMatrix, BoundingBox, ClassObject};
pub use tracker::{Registry, TrackerConfig};
