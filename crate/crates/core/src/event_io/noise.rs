use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use super::{Event, EventStream, Polarity};

/// Add uniform background noise at `rate` events per pixel per second over
/// the stream's own span `[0, last event]`.
pub fn inject_noise(stream: &EventStream, rate: f64, seed: u64) -> EventStream {
    let duration = stream.end_time().map_or(0, |t| t + 1);
    inject_noise_over(stream, rate, duration, seed)
}

/// Add uniform background noise over `[0, duration_us)` and the full canvas.
/// Original events keep their relative order.
pub fn inject_noise_over(stream: &EventStream, rate: f64, duration_us: u64, seed: u64) -> EventStream {
    let area = f64::from(stream.width) * f64::from(stream.height);
    let mean = rate.max(0.0) * area * duration_us as f64 / 1e6;
    if mean <= 0.0 || duration_us == 0 {
        return stream.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = Poisson::new(mean).map(|p| p.sample(&mut rng) as usize).unwrap_or(0);
    let mut noise: Vec<Event> = (0..count)
        .map(|_| {
            Event::new(
                rng.random_range(0..stream.width),
                rng.random_range(0..stream.height),
                if rng.random_bool(0.5) {
                    Polarity::On
                } else {
                    Polarity::Off
                },
                rng.random_range(0..duration_us),
            )
        })
        .collect();
    noise.sort_by_key(|e| e.t);

    let mut merged = Vec::with_capacity(stream.len() + noise.len());
    let (mut i, mut j) = (0, 0);
    while i < stream.len() || j < noise.len() {
        let take_original = j >= noise.len() || (i < stream.len() && stream.events[i].t <= noise[j].t);
        if take_original {
            merged.push(stream.events[i]);
            i += 1;
        } else {
            merged.push(noise[j]);
            j += 1;
        }
    }
    EventStream::new(stream.width, stream.height, merged)
}
