//! Benchmark fixtures.

use hulksmash::eval::{self, StreamParams};
use hulksmash::scnn::{train, TrainConfig};
use hulksmash::smash::Instance;
use hulksmash::{AshMatrix, BoundingBox, Pipeline, SequenceBuffer};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const ASH_ROWS: usize = 41;
pub const ASH_COLS: usize = 10;

/// Face network trained on the default synthetic corpus.
pub fn trained_pipeline() -> Pipeline {
    let corpus = eval::training_corpus(&[0, 1, 2], &StreamParams::default()).expect("corpus");
    let tc = TrainConfig {
        epochs: 5,
        seed: 0,
        shuffle: true,
    };
    let trained = train(eval::synthetic_network_config(), &corpus, &tc).expect("training");
    Pipeline::new(trained.network)
}

/// Buffers of the three-stream scene.
pub fn multistream_buffers(seed: u64) -> Vec<SequenceBuffer> {
    eval::multistream(seed, &StreamParams::default())
        .expect("scene")
        .buffers()
}

/// Signature with roughly `density` of its bits set.
pub fn random_ash(rng: &mut ChaCha8Rng, density: f64) -> AshMatrix {
    let mut m = AshMatrix::new(ASH_ROWS, ASH_COLS);
    for r in 0..ASH_ROWS {
        for c in 0..ASH_COLS {
            if rng.random_bool(density) {
                m.set(r, c);
            }
        }
    }
    m
}

/// `n` overlapping instances of one class inside a 128 px frame.
pub fn random_instances(seed: u64, n: usize) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let (x, y) = (rng.random_range(0..96u16), rng.random_range(0..96u16));
            let (w, h) = (rng.random_range(8..32u16), rng.random_range(8..32u16));
            Instance {
                class: 0,
                ash: random_ash(&mut rng, 0.2),
                bbox: BoundingBox::new(x, y, x + w, y + h),
            }
        })
        .collect()
}
