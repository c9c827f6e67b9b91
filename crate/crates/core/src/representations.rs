//! Image-like representations built from events or frames: binary event
//! slices, exponential time surfaces, speed-invariant time surfaces and
//! histogram-equalized frames.

use crate::dataset_io::{Event, EventStream, IntensityFrame, SensorSize};
use crate::{Error, Result};

pub const DEFAULT_SLICE_EVENTS: usize = 15_000;
pub const DEFAULT_TAU: f64 = 0.05;
pub const DEFAULT_SITS_RADIUS: usize = 3;

/// Binary mask of the pixels hit by a fixed number of consecutive events.
#[derive(Clone, Debug, PartialEq)]
pub struct EventSlice {
    pub width: u32,
    pub height: u32,
    /// Row-major, every entry 0 or 1.
    pub grid: Vec<u8>,
    pub t_start: f64,
    pub t_end: f64,
    /// Number of events aggregated.
    pub n_events: usize,
    /// Index of the first aggregated event in its stream.
    pub start_index: usize,
    /// Fewer than the requested number of events were available.
    pub short: bool,
}

impl EventSlice {
    pub fn empty(size: SensorSize) -> Self {
        Self {
            width: size.width,
            height: size.height,
            grid: vec![0; size.pixel_count()],
            t_start: 0.0,
            t_end: 0.0,
            n_events: 0,
            start_index: 0,
            short: true,
        }
    }

    pub fn set_pixels(&self) -> usize {
        self.grid.iter().filter(|&&v| v == 1).count()
    }

    fn from_events(size: SensorSize, events: &[Event], start_index: usize, short: bool) -> Self {
        let mut grid = vec![0u8; size.pixel_count()];
        // Polarity is deliberately ignored: any event sets its pixel.
        for e in events {
            grid[e.y as usize * size.width as usize + e.x as usize] = 1;
        }
        Self {
            width: size.width,
            height: size.height,
            grid,
            t_start: events.first().map_or(0.0, |e| e.t),
            t_end: events.last().map_or(0.0, |e| e.t),
            n_events: events.len(),
            start_index,
            short,
        }
    }
}

/// Aggregate events `[start_index, start_index + n)` into a binary slice.
pub fn aggregate_slice(stream: &EventStream, start_index: usize, n: usize) -> Result<EventSlice> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "slice size must be at least 1".into(),
        ));
    }
    let end = start_index
        .checked_add(n)
        .filter(|&end| end <= stream.len())
        .ok_or_else(|| {
            Error::InsufficientEvents(format!(
                "slice [{start_index}, {start_index}+{n}) exceeds stream of {} events",
                stream.len()
            ))
        })?;
    Ok(EventSlice::from_events(
        stream.size(),
        &stream.events()[start_index..end],
        start_index,
        false,
    ))
}

/// The slice aggregated from the first `n` events at or after `frame_t`.
///
/// When fewer than `n` events remain, all of them are used and the slice is
/// flagged as short.
pub fn slice_for_frame(stream: &EventStream, frame_t: f64, n: usize) -> Result<EventSlice> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "slice size must be at least 1".into(),
        ));
    }
    let start = stream.lower_bound(frame_t);
    let remaining = stream.len() - start;
    if remaining == 0 {
        return Err(Error::InsufficientEvents(format!(
            "no events at or after t={frame_t}"
        )));
    }
    let take = n.min(remaining);
    Ok(EventSlice::from_events(
        stream.size(),
        &stream.events()[start..start + take],
        start,
        take < n,
    ))
}

/// Exponentially decayed recency of the last event at each pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSurfaceMap {
    pub width: u32,
    pub height: u32,
    pub values: Vec<f64>,
    pub t_ref: f64,
    pub tau: f64,
}

/// Incremental time-surface state: the latest event time per pixel.
#[derive(Clone, Debug)]
pub struct TimeSurfaceBuilder {
    size: SensorSize,
    last: Vec<f64>,
    consumed: usize,
}

impl TimeSurfaceBuilder {
    pub fn new(size: SensorSize) -> Self {
        Self {
            size,
            last: vec![f64::NEG_INFINITY; size.pixel_count()],
            consumed: 0,
        }
    }

    /// Consume events up to (excluding) `index`. Going backwards is a no-op.
    pub fn advance_to(&mut self, stream: &EventStream, index: usize) {
        let index = index.min(stream.len());
        for e in stream.events().get(self.consumed..index).unwrap_or(&[]) {
            let k = e.y as usize * self.size.width as usize + e.x as usize;
            self.last[k] = self.last[k].max(e.t);
        }
        self.consumed = self.consumed.max(index);
    }

    pub fn snapshot(&self, t_ref: f64, tau: f64) -> Result<TimeSurfaceMap> {
        if !(tau > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tau must be positive, got {tau}"
            )));
        }
        let values = self
            .last
            .iter()
            .map(|&t| {
                if t == f64::NEG_INFINITY {
                    0.0
                } else {
                    (-(t_ref - t).max(0.0) / tau).exp()
                }
            })
            .collect();
        Ok(TimeSurfaceMap {
            width: self.size.width,
            height: self.size.height,
            values,
            t_ref,
            tau,
        })
    }
}

/// Time surface over events `[0, up_to_index)` evaluated at `t_ref`.
pub fn time_surface(
    stream: &EventStream,
    up_to_index: usize,
    t_ref: f64,
    tau: f64,
) -> Result<TimeSurfaceMap> {
    let mut b = TimeSurfaceBuilder::new(stream.size());
    b.advance_to(stream, up_to_index);
    b.snapshot(t_ref, tau)
}

/// Speed-invariant time surface: a rank-like map that only depends on the
/// order of events, never on their timestamps.
#[derive(Clone, Debug, PartialEq)]
pub struct SitsMap {
    pub width: u32,
    pub height: u32,
    pub radius: usize,
    pub values: Vec<u32>,
}

impl SitsMap {
    pub fn max_value(&self) -> u32 {
        let side = 2 * self.radius as u32 + 1;
        side * side
    }
}

/// Stateful SITS builder; not meant to be shared mid-build.
#[derive(Clone, Debug)]
pub struct SitsBuilder {
    map: SitsMap,
    consumed: usize,
}

impl SitsBuilder {
    pub fn new(size: SensorSize, radius: usize) -> Result<Self> {
        if radius == 0 {
            return Err(Error::InvalidArgument(
                "sits radius must be at least 1".into(),
            ));
        }
        Ok(Self {
            map: SitsMap {
                width: size.width,
                height: size.height,
                radius,
                values: vec![0; size.pixel_count()],
            },
            consumed: 0,
        })
    }

    pub fn push(&mut self, x: usize, y: usize) {
        let w = self.map.width as usize;
        let h = self.map.height as usize;
        let r = self.map.radius;
        let center = self.map.values[y * w + x];
        for ny in y.saturating_sub(r)..=(y + r).min(h - 1) {
            for nx in x.saturating_sub(r)..=(x + r).min(w - 1) {
                let v = &mut self.map.values[ny * w + nx];
                if *v > center {
                    *v -= 1;
                }
            }
        }
        let max = self.map.max_value();
        self.map.values[y * w + x] = max;
    }

    pub fn advance_to(&mut self, stream: &EventStream, index: usize) {
        let index = index.min(stream.len());
        if index > self.consumed {
            for e in &stream.events()[self.consumed..index] {
                self.push(e.x as usize, e.y as usize);
            }
            self.consumed = index;
        }
    }

    pub fn map(&self) -> &SitsMap {
        &self.map
    }
}

/// SITS over events `[0, up_to_index)`.
pub fn sits(stream: &EventStream, up_to_index: usize, radius: usize) -> Result<SitsMap> {
    let mut b = SitsBuilder::new(stream.size(), radius)?;
    b.advance_to(stream, up_to_index);
    Ok(b.map)
}

/// Global histogram equalization. A frame with a single intensity value is
/// returned unchanged.
pub fn histogram_equalize(frame: &IntensityFrame) -> IntensityFrame {
    let mut hist = [0u64; 256];
    for &p in &frame.pixels {
        hist[p as usize] += 1;
    }
    let total = frame.pixels.len() as u64;
    let mut cdf = [0u64; 256];
    let mut acc = 0;
    for (c, h) in cdf.iter_mut().zip(hist) {
        acc += h;
        *c = acc;
    }
    let cdf_min = hist
        .iter()
        .zip(&cdf)
        .find(|(h, _)| **h > 0)
        .map_or(0, |(_, c)| *c);
    if total == cdf_min {
        return frame.clone();
    }
    let denom = (total - cdf_min) as f64;
    let mut lut = [0u8; 256];
    for (v, slot) in lut.iter_mut().enumerate() {
        let num = cdf[v].saturating_sub(cdf_min) as f64;
        *slot = (255.0 * num / denom).round().clamp(0.0, 255.0) as u8;
    }
    IntensityFrame {
        t: frame.t,
        width: frame.width,
        height: frame.height,
        pixels: frame.pixels.iter().map(|&p| lut[p as usize]).collect(),
    }
}

/// Linear rendering of a representation into an 8-bit frame.
pub trait Render {
    fn render(&self, t: f64) -> IntensityFrame;
}

impl Render for EventSlice {
    fn render(&self, t: f64) -> IntensityFrame {
        IntensityFrame {
            t,
            width: self.width,
            height: self.height,
            pixels: self
                .grid
                .iter()
                .map(|&v| if v > 0 { 255 } else { 0 })
                .collect(),
        }
    }
}

impl Render for TimeSurfaceMap {
    fn render(&self, t: f64) -> IntensityFrame {
        IntensityFrame {
            t,
            width: self.width,
            height: self.height,
            pixels: self
                .values
                .iter()
                .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
                .collect(),
        }
    }
}

impl Render for SitsMap {
    fn render(&self, t: f64) -> IntensityFrame {
        let scale = 255.0 / self.max_value() as f64;
        IntensityFrame {
            t,
            width: self.width,
            height: self.height,
            pixels: self
                .values
                .iter()
                .map(|&v| (v as f64 * scale).round().clamp(0.0, 255.0) as u8)
                .collect(),
        }
    }
}

pub fn render_representation(map: &impl Render, t: f64) -> IntensityFrame {
    map.render(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset_io::Polarity;
    use proptest::prelude::*;
    use std::collections::HashSet;

    const SIZE: SensorSize = SensorSize {
        width: 16,
        height: 12,
    };

    fn ev(t: f64, x: u16, y: u16, on: bool) -> Event {
        Event {
            t,
            x,
            y,
            polarity: if on { Polarity::On } else { Polarity::Off },
        }
    }

    fn stream(events: Vec<Event>) -> EventStream {
        EventStream::new(events, SIZE).unwrap()
    }

    fn set_coords(s: &EventSlice) -> HashSet<(u32, u32)> {
        (0..s.height)
            .flat_map(|y| (0..s.width).map(move |x| (x, y)))
            .filter(|&(x, y)| s.grid[(y * s.width + x) as usize] == 1)
            .collect()
    }

    #[test]
    fn slice_ignores_polarity_and_duplicates() {
        let s = stream(vec![
            ev(0.0, 1, 1, true),
            ev(0.1, 1, 1, false),
            ev(0.2, 2, 2, true),
        ]);
        let slice = aggregate_slice(&s, 0, 3).unwrap();
        assert_eq!(set_coords(&slice), HashSet::from([(1, 1), (2, 2)]));
        assert_eq!((slice.t_start, slice.t_end, slice.n_events), (0.0, 0.2, 3));
    }

    #[test]
    fn single_event_slice() {
        let s = stream(vec![ev(0.0, 0, 0, true)]);
        assert_eq!(aggregate_slice(&s, 0, 1).unwrap().set_pixels(), 1);
    }

    #[test]
    fn slice_bounds_are_checked() {
        let s = stream(vec![ev(0.0, 0, 0, true), ev(0.1, 0, 0, true)]);
        assert!(matches!(
            aggregate_slice(&s, 1, 2),
            Err(Error::InsufficientEvents(_))
        ));
        assert!(aggregate_slice(&s, 0, 0).is_err());
    }

    #[test]
    fn slice_for_frame_positions() {
        let s = stream(
            (0..10)
                .map(|i| ev(0.1 * i as f64 + 0.1, i as u16, 0, true))
                .collect(),
        );
        assert_eq!(
            slice_for_frame(&s, 0.0, 3).unwrap(),
            aggregate_slice(&s, 0, 3).unwrap()
        );
        assert!(slice_for_frame(&s, 5.0, 3).is_err());
        let mid = slice_for_frame(&s, 0.45, 3).unwrap();
        let linear = s.events().iter().position(|e| e.t >= 0.45).unwrap();
        assert_eq!(mid.start_index, linear);
        assert!(!mid.short);
        let tail = slice_for_frame(&s, 0.95, 3).unwrap();
        assert!(tail.short);
        assert_eq!(tail.n_events, 1);
    }

    #[test]
    fn time_surface_values() {
        let s = stream(vec![ev(0.5, 1, 1, true), ev(1.0, 2, 2, true)]);
        let ts = time_surface(&s, 2, 1.0, 0.5).unwrap();
        assert_eq!(ts.values[2 * 16 + 2], 1.0);
        assert!((ts.values[16 + 1] - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(ts.values[0], 0.0);
        assert!(time_surface(&s, 2, 1.0, 0.0).is_err());
    }

    #[test]
    fn time_surface_decays_monotonically() {
        let s = stream(vec![ev(0.5, 1, 1, true), ev(1.0, 2, 2, true)]);
        let a = time_surface(&s, 2, 1.0, 0.1).unwrap();
        let b = time_surface(&s, 2, 1.2, 0.1).unwrap();
        for (va, vb) in a.values.iter().zip(&b.values) {
            if *va > 0.0 {
                assert!(vb < va);
            }
        }
    }

    #[test]
    fn sits_single_and_repeated_event() {
        let one = stream(vec![ev(0.0, 5, 5, true)]);
        let m = sits(&one, 1, 2).unwrap();
        assert_eq!(m.values[5 * 16 + 5], 25);
        assert_eq!(m.values.iter().filter(|&&v| v != 0).count(), 1);

        let two = stream(vec![ev(0.0, 5, 5, true), ev(0.1, 5, 5, false)]);
        let m = sits(&two, 2, 2).unwrap();
        assert_eq!(m.values[5 * 16 + 5], 25);
        assert!(sits(&two, 2, 0).is_err());
    }

    // Straightforward replay of the update rule over a dense 2-D array.
    fn sits_replay(events: &[Event], w: usize, h: usize, r: usize) -> Vec<u32> {
        let mut s = vec![vec![0i64; w]; h];
        let full = ((2 * r + 1) * (2 * r + 1)) as i64;
        for e in events {
            let (x, y) = (e.x as i64, e.y as i64);
            let c = s[y as usize][x as usize];
            for dy in -(r as i64)..=(r as i64) {
                for dx in -(r as i64)..=(r as i64) {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let v = &mut s[ny as usize][nx as usize];
                    if *v > c {
                        *v = (*v - 1).max(0);
                    }
                }
            }
            s[y as usize][x as usize] = full;
        }
        s.into_iter().flatten().map(|v| v as u32).collect()
    }

    #[test]
    fn sits_matches_replay_on_dense_stream() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let events: Vec<Event> = (0..1000)
            .map(|i| {
                ev(
                    i as f64 * 1e-4,
                    rng.random_range(0..16),
                    rng.random_range(0..12),
                    rng.random(),
                )
            })
            .collect();
        let s = stream(events.clone());
        for r in 1..=3 {
            let m = sits(&s, 1000, r).unwrap();
            assert_eq!(m.values, sits_replay(&events, 16, 12, r));
            assert!(m.values.iter().all(|&v| v <= m.max_value()));
        }
    }

    #[test]
    fn incremental_builders_match_from_scratch() {
        let events: Vec<Event> = (0..200)
            .map(|i| {
                ev(
                    i as f64 * 0.01,
                    (i * 7 % 16) as u16,
                    (i * 5 % 12) as u16,
                    i % 3 == 0,
                )
            })
            .collect();
        let s = stream(events);
        let mut ts = TimeSurfaceBuilder::new(SIZE);
        let mut sb = SitsBuilder::new(SIZE, 2).unwrap();
        for cut in [0, 17, 90, 200] {
            ts.advance_to(&s, cut);
            sb.advance_to(&s, cut);
            assert_eq!(
                ts.snapshot(2.0, 0.3).unwrap(),
                time_surface(&s, cut, 2.0, 0.3).unwrap()
            );
            assert_eq!(sb.map(), &sits(&s, cut, 2).unwrap());
        }
    }

    #[test]
    fn equalize_degenerate_and_full_range() {
        let c = IntensityFrame::filled(1.5, 4, 4, 40);
        assert_eq!(histogram_equalize(&c), c);
        let f = IntensityFrame::new(0.0, 2, 1, vec![0, 255]).unwrap();
        assert_eq!(histogram_equalize(&f).pixels, vec![0, 255]);
    }

    #[test]
    fn equalize_hand_computed() {
        // cdf: 52 -> 2, 154 -> 3, 200 -> 4; cdf_min = 2, total = 4.
        // 52 -> 0, 154 -> round(255 * 1 / 2) = 128, 200 -> 255.
        let f = IntensityFrame::new(3.0, 4, 1, vec![52, 52, 154, 200]).unwrap();
        let e = histogram_equalize(&f);
        assert_eq!(e.pixels, vec![0, 0, 128, 255]);
        assert_eq!(e.t, 3.0);
    }

    #[test]
    fn renders_scale_linearly() {
        let s = stream(vec![ev(0.0, 1, 1, true)]);
        let r = aggregate_slice(&s, 0, 1).unwrap().render(0.0);
        assert_eq!(r.pixels[16 + 1], 255);
        assert_eq!(r.pixels.iter().filter(|&&p| p == 0).count(), 16 * 12 - 1);
        let m = sits(&s, 1, 1).unwrap().render(0.0);
        assert_eq!(m.pixels[16 + 1], 255);
    }

    fn arb_events() -> impl Strategy<Value = Vec<Event>> {
        prop::collection::vec((0u16..16, 0u16..12, any::<bool>()), 1..300).prop_map(|v| {
            v.into_iter()
                .enumerate()
                .map(|(i, (x, y, p))| ev(i as f64 * 1e-3, x, y, p))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn slice_is_polarity_invariant(events in arb_events()) {
            let n = events.len();
            let flipped: Vec<Event> = events
                .iter()
                .map(|e| Event { polarity: e.polarity.flipped(), ..*e })
                .collect();
            let a = aggregate_slice(&stream(events), 0, n).unwrap();
            let b = aggregate_slice(&stream(flipped), 0, n).unwrap();
            prop_assert_eq!(a.grid, b.grid);
        }

        #[test]
        fn slice_invariants(events in arb_events()) {
            let n = events.len();
            let s = aggregate_slice(&stream(events), 0, n).unwrap();
            prop_assert!(s.grid.iter().all(|&v| v <= 1));
            prop_assert!(s.set_pixels() <= s.n_events);
            prop_assert!(s.t_start <= s.t_end);
        }

        #[test]
        fn slice_idempotent_under_duplication(events in arb_events()) {
            let n = events.len();
            let doubled: Vec<Event> = events
                .iter()
                .flat_map(|e| [*e, *e])
                .collect();
            let a = aggregate_slice(&stream(events), 0, n).unwrap();
            let b = aggregate_slice(&stream(doubled), 0, 2 * n).unwrap();
            prop_assert_eq!(a.grid, b.grid);
        }

        #[test]
        fn sits_ignores_timestamps(events in arb_events(), scale in 0.01f64..100.0) {
            let n = events.len();
            let rescaled: Vec<Event> = events.iter().map(|e| Event { t: e.t * scale, ..*e }).collect();
            prop_assert_eq!(
                sits(&stream(events), n, 2).unwrap(),
                sits(&stream(rescaled), n, 2).unwrap()
            );
        }

        #[test]
        fn equalize_is_order_preserving(pixels in prop::collection::vec(any::<u8>(), 1..200)) {
            let f = IntensityFrame::new(0.0, pixels.len() as u32, 1, pixels.clone()).unwrap();
            let e = histogram_equalize(&f);
            for i in 0..pixels.len() {
                for j in 0..pixels.len() {
                    if pixels[i] <= pixels[j] {
                        prop_assert!(e.pixels[i] <= e.pixels[j]);
                    }
                }
            }
        }
    }
}
