//! Numerical bounds of `index / VUF` over a box of voltage magnitudes and
//! phase-angle deviations, restricted to samples whose VUF lies in a band.
//!
//! Phase a is pinned at 0° (every index is rotation invariant), leaving a
//! five-dimensional search space: three magnitudes and the deviations of
//! phases b and c from -120° and +120°. The grid is reduced in parallel with
//! a total order (ratio, then grid position), so the result does not depend
//! on how rayon splits the work. With refinement on, a polish starts from
//! the best grid point of each magnitude ordering, not only the overall one.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{BoundsError, MetricError};
use crate::metrics::{self, Metric};
use crate::phasor::{normalize_degrees, PhasorTriple};

pub const DEFAULT_RESOLUTION: usize = 25;

/// Relative improvement a refinement step must beat to be accepted.
const IMPROVEMENT_EPS: f64 = 1e-12;
const MIN_STEP: f64 = 1e-10;
const MAX_EVALUATIONS: usize = 2_000_000;
const RANDOM_DIRECTIONS: usize = 32;
const POLL_SEED: u64 = 0x5eed_b0d5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeBox {
    pub mag_lo: f64,
    pub mag_hi: f64,
    pub angle_dev: f64,
}

impl Default for EnvelopeBox {
    /// 0.94–1.10 p.u. and ±5°.
    fn default() -> Self {
        Self {
            mag_lo: 0.94,
            mag_hi: 1.10,
            angle_dev: 5.0,
        }
    }
}

impl EnvelopeBox {
    pub fn new(mag_lo: f64, mag_hi: f64, angle_dev: f64) -> Result<Self, BoundsError> {
        let b = Self {
            mag_lo,
            mag_hi,
            angle_dev,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), BoundsError> {
        let finite = [self.mag_lo, self.mag_hi, self.angle_dev]
            .iter()
            .all(|v| v.is_finite());
        if !finite || !(0.0 < self.mag_lo && self.mag_lo <= self.mag_hi) {
            return Err(BoundsError::InvalidQuery(format!(
                "magnitude range must satisfy 0 < lo <= hi, got [{}, {}]",
                self.mag_lo, self.mag_hi
            )));
        }
        if self.angle_dev < 0.0 {
            return Err(BoundsError::InvalidQuery(format!(
                "angle deviation must be >= 0, got {}",
                self.angle_dev
            )));
        }
        Ok(())
    }

    fn contains(&self, p: &SearchPoint) -> bool {
        let tol = 1e-12;
        p.mags
            .iter()
            .all(|m| *m >= self.mag_lo - tol && *m <= self.mag_hi + tol)
            && p.devs.iter().all(|d| d.abs() <= self.angle_dev + tol)
    }
}

/// Closed VUF interval in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VufBand {
    pub lo: f64,
    pub hi: f64,
}

impl VufBand {
    pub fn new(lo: f64, hi: f64) -> Result<Self, BoundsError> {
        if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo < hi) {
            return Err(BoundsError::InvalidQuery(format!(
                "VUF band must satisfy 0 <= lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, vuf: f64) -> bool {
        vuf >= self.lo && vuf <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsQuery {
    pub index: Metric,
    pub band: VufBand,
    pub envelope: EnvelopeBox,
    pub resolution: usize,
    pub refine: bool,
}

impl BoundsQuery {
    pub fn validate(&self) -> Result<(), BoundsError> {
        if self.index == Metric::Vuf {
            return Err(BoundsError::InvalidQuery(
                "VUF/VUF is not a relative index".into(),
            ));
        }
        VufBand::new(self.band.lo, self.band.hi)?;
        self.envelope.validate()?;
        if self.resolution < 2 {
            return Err(BoundsError::InvalidQuery(format!(
                "resolution must be >= 2, got {}",
                self.resolution
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Min,
    Max,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsResult {
    pub index: Metric,
    pub band: VufBand,
    pub lower: f64,
    pub upper: f64,
    pub arg_lower: PhasorTriple,
    pub arg_upper: PhasorTriple,
    pub samples_in_band: u64,
}

/// A point of the reduced search space.
#[derive(Debug, Clone, Copy, PartialEq)]
struct SearchPoint {
    mags: [f64; 3],
    devs: [f64; 2],
}

impl SearchPoint {
    fn triple(&self) -> Result<PhasorTriple, MetricError> {
        PhasorTriple::from_polar(self.mags, [0.0, -120.0 + self.devs[0], 120.0 + self.devs[1]])
    }

    /// Rotates a triple so phase a sits at 0° and reads off the coordinates.
    fn from_triple(t: &PhasorTriple) -> Self {
        let [a, b, c] = t.phasors();
        Self {
            mags: t.magnitudes(),
            devs: [
                normalize_degrees(b.angle_deg() - a.angle_deg() + 120.0),
                normalize_degrees(c.angle_deg() - a.angle_deg() - 120.0),
            ],
        }
    }

    fn coords(&self) -> [f64; 5] {
        [self.mags[0], self.mags[1], self.mags[2], self.devs[0], self.devs[1]]
    }

    fn from_coords(x: [f64; 5]) -> Self {
        Self {
            mags: [x[0], x[1], x[2]],
            devs: [x[3], x[4]],
        }
    }
}

/// Ratio `index / VUF` and the VUF itself, or `None` when undefined.
fn evaluate(index: Metric, p: &SearchPoint) -> Option<(f64, f64)> {
    let t = p.triple().ok()?;
    let vuf = metrics::vuf(&t).ok()?.value;
    if vuf <= 0.0 {
        return None;
    }
    let value = index.evaluate(&t).ok()?.value;
    Some((value / vuf, vuf))
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    ratio: f64,
    key: [usize; 5],
    point: SearchPoint,
}

impl Candidate {
    /// True when `self` should replace `other` as the extremum.
    fn beats(&self, other: &Candidate, dir: Direction) -> bool {
        match dir {
            Direction::Min if self.ratio != other.ratio => self.ratio < other.ratio,
            Direction::Max if self.ratio != other.ratio => self.ratio > other.ratio,
            _ => self.key < other.key,
        }
    }
}

/// Number of magnitude orderings; grid extrema are kept per ordering so
/// refinement can start from every basin the grid saw.
const CLASSES: usize = 6;

/// Which of the six orderings of the three magnitudes `mags` falls in.
fn ordering_class(mags: [f64; 3]) -> usize {
    let [a, b, c] = mags;
    match (a >= b, b >= c, a >= c) {
        (true, true, _) => 0,
        (true, false, true) => 1,
        (true, false, false) => 2,
        (false, true, true) => 3,
        (false, true, false) => 4,
        (false, false, _) => 5,
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Extrema {
    min: [Option<Candidate>; CLASSES],
    max: [Option<Candidate>; CLASSES],
    count: u64,
}

fn pick(a: Option<Candidate>, b: Option<Candidate>, dir: Direction) -> Option<Candidate> {
    match (a, b) {
        (Some(x), Some(y)) => Some(if y.beats(&x, dir) { y } else { x }),
        (x, None) => x,
        (None, y) => y,
    }
}

impl Extrema {
    fn push(mut self, c: Candidate) -> Self {
        let k = ordering_class(c.point.mags);
        self.count += 1;
        self.min[k] = pick(self.min[k], Some(c), Direction::Min);
        self.max[k] = pick(self.max[k], Some(c), Direction::Max);
        self
    }

    fn merge(mut self, other: Self) -> Self {
        for k in 0..CLASSES {
            self.min[k] = pick(self.min[k], other.min[k], Direction::Min);
            self.max[k] = pick(self.max[k], other.max[k], Direction::Max);
        }
        self.count += other.count;
        self
    }

    fn best(&self, dir: Direction) -> Option<Candidate> {
        let all = match dir {
            Direction::Min => &self.min,
            Direction::Max => &self.max,
        };
        all.iter().fold(None, |acc, c| pick(acc, *c, dir))
    }

    fn starts(&self, dir: Direction) -> impl Iterator<Item = Candidate> + '_ {
        match dir {
            Direction::Min => self.min.iter(),
            Direction::Max => self.max.iter(),
        }
        .flatten()
        .copied()
    }
}

/// One grid pass that tracks the extrema of several indices at once.
fn grid_extrema(indices: &[Metric], band: VufBand, env: EnvelopeBox, r: usize) -> Vec<Extrema> {
    let mags = linspace(env.mag_lo, env.mag_hi, r);
    let devs = linspace(-env.angle_dev, env.angle_dev, r);
    let unit_b: Vec<Complex64> = devs
        .iter()
        .map(|d| Complex64::from_polar(1.0, (-120.0 + d).to_radians()))
        .collect();
    let unit_c: Vec<Complex64> = devs
        .iter()
        .map(|d| Complex64::from_polar(1.0, (120.0 + d).to_radians()))
        .collect();
    let total = r.pow(5);
    let empty = || vec![Extrema::default(); indices.len()];
    (0..total)
        .into_par_iter()
        .fold(empty, |mut acc, flat| {
            let mut rest = flat;
            let mut key = [0usize; 5];
            for slot in key.iter_mut().rev() {
                *slot = rest % r;
                rest /= r;
            }
            let values = [
                Complex64::new(mags[key[0]], 0.0),
                mags[key[1]] * unit_b[key[3]],
                mags[key[2]] * unit_c[key[4]],
            ];
            let Ok(t) = PhasorTriple::from_complex(values) else {
                return acc;
            };
            let Ok(vuf) = metrics::vuf(&t).map(|d| d.value) else {
                return acc;
            };
            if vuf <= 0.0 || !band.contains(vuf) {
                return acc;
            }
            let point = SearchPoint {
                mags: [mags[key[0]], mags[key[1]], mags[key[2]]],
                devs: [devs[key[3]], devs[key[4]]],
            };
            for (slot, index) in acc.iter_mut().zip(indices) {
                if let Ok(d) = index.evaluate(&t) {
                    *slot = slot.push(Candidate {
                        ratio: d.value / vuf,
                        key,
                        point,
                    });
                }
            }
            acc
        })
        .reduce(empty, |a, b| a.into_iter().zip(b).map(|(x, y)| x.merge(y)).collect())
}

/// Grid sweep (and optional polish) of the ratio bounds for one index.
pub fn sweep_ratio_bounds(q: &BoundsQuery) -> Result<BoundsResult, BoundsError> {
    sweep_many(&[q.index], q.band, q.envelope, q.resolution, q.refine)
        .pop()
        .expect("one result per index")
}

fn sweep_many(
    indices: &[Metric],
    band: VufBand,
    envelope: EnvelopeBox,
    resolution: usize,
    refine: bool,
) -> Vec<Result<BoundsResult, BoundsError>> {
    let queries: Vec<BoundsQuery> = indices
        .iter()
        .map(|&index| BoundsQuery {
            index,
            band,
            envelope,
            resolution,
            refine,
        })
        .collect();
    if let Some(err) = queries.iter().find_map(|q| q.validate().err()) {
        return vec![Err(err); indices.len()];
    }
    let extrema = grid_extrema(indices, band, envelope, resolution);
    queries
        .iter()
        .zip(extrema)
        .map(|(q, ext)| finish(q, ext))
        .collect()
}

fn finish(q: &BoundsQuery, ext: Extrema) -> Result<BoundsResult, BoundsError> {
    let (Some(min), Some(max)) = (ext.best(Direction::Min), ext.best(Direction::Max)) else {
        return Err(BoundsError::EmptyBand {
            lo: q.band.lo,
            hi: q.band.hi,
        });
    };
    let to_triple = |p: &SearchPoint| p.triple().expect("grid points are valid triples");
    let (mut arg_lower, mut arg_upper) = (to_triple(&min.point), to_triple(&max.point));
    let (mut lower, mut upper) = (min.ratio, max.ratio);
    if q.refine {
        let ratio = |t: &PhasorTriple| {
            evaluate(q.index, &SearchPoint::from_triple(t))
                .map(|(r, _)| r)
                .expect("refined points stay evaluable")
        };
        let lows: Vec<PhasorTriple> = ext.starts(Direction::Min).map(|c| to_triple(&c.point)).collect();
        let highs: Vec<PhasorTriple> = ext.starts(Direction::Max).map(|c| to_triple(&c.point)).collect();
        let polished_lows: Vec<PhasorTriple> =
            lows.par_iter().map(|t| refine_extremum(t, q, Direction::Min)).collect();
        let polished_highs: Vec<PhasorTriple> =
            highs.par_iter().map(|t| refine_extremum(t, q, Direction::Max)).collect();
        for polished in polished_lows {
            let r = ratio(&polished);
            if r < lower {
                lower = r;
                arg_lower = polished;
            }
        }
        for polished in polished_highs {
            let r = ratio(&polished);
            if r > upper {
                upper = r;
                arg_upper = polished;
            }
        }
    }
    Ok(BoundsResult {
        index: q.index,
        band: q.band,
        lower,
        upper,
        arg_lower,
        arg_upper,
        samples_in_band: ext.count,
    })
}

/// Derivative-free polish of an extremum.
///
/// Mesh-adaptive pattern search: each poll tries the compass and pairwise
/// diagonal directions plus a batch of pseudo-random unit directions from a
/// fixed-seed generator, projects onto the box, and rejects points whose VUF
/// leaves the band. The step halves when a poll finds no improvement. The
/// random directions let the search slide along the curved band boundary,
/// where axis-aligned moves stall.
///
/// Returns `start` unchanged when nothing better is found.
pub fn refine_extremum(start: &PhasorTriple, q: &BoundsQuery, direction: Direction) -> PhasorTriple {
    let env = q.envelope;
    let origin = SearchPoint::from_triple(start);
    let Some((mut best, _)) = evaluate(q.index, &origin) else {
        return *start;
    };
    let mut x = origin.coords();

    let lo = [env.mag_lo, env.mag_lo, env.mag_lo, -env.angle_dev, -env.angle_dev];
    let hi = [env.mag_hi, env.mag_hi, env.mag_hi, env.angle_dev, env.angle_dev];
    let span: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| h - l).collect();

    let mut fixed: Vec<[f64; 5]> = Vec::new();
    for i in 0..5 {
        for s in [1.0, -1.0] {
            let mut d = [0.0; 5];
            d[i] = s;
            fixed.push(d);
        }
    }
    for i in 0..5 {
        for j in (i + 1)..5 {
            for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let mut d = [0.0; 5];
                d[i] = si;
                d[j] = sj;
                fixed.push(d);
            }
        }
    }
    let active = |d: &[f64; 5]| d.iter().zip(&span).all(|(c, s)| *c == 0.0 || *s > 0.0);
    fixed.retain(|d| active(d));

    let better = |cand: f64, cur: f64| match direction {
        Direction::Min => cand < cur - IMPROVEMENT_EPS * cur.abs(),
        Direction::Max => cand > cur + IMPROVEMENT_EPS * cur.abs(),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(POLL_SEED);
    let mut step = 1.0 / (q.resolution.max(2) - 1) as f64;
    let mut evaluations = 0usize;
    let mut moved = false;
    while step >= MIN_STEP && evaluations < MAX_EVALUATIONS {
        let mut dirs = fixed.clone();
        for _ in 0..RANDOM_DIRECTIONS {
            let mut d = [0.0; 5];
            for (k, c) in d.iter_mut().enumerate() {
                if span[k] > 0.0 {
                    *c = rng.gen_range(-1.0..=1.0);
                }
            }
            let norm = d.iter().map(|c| c * c).sum::<f64>().sqrt();
            if norm > 1e-3 {
                dirs.push(d.map(|c| c / norm));
            }
        }
        let mut winner: Option<([f64; 5], f64)> = None;
        for d in &dirs {
            let mut y = x;
            for k in 0..5 {
                y[k] = (y[k] + d[k] * step * span[k]).clamp(lo[k], hi[k]);
            }
            if y == x {
                continue;
            }
            evaluations += 1;
            let p = SearchPoint::from_coords(y);
            let Some((mut ratio, vuf)) = evaluate(q.index, &p) else {
                continue;
            };
            if !q.band.contains(vuf) {
                let margin = 1e-10 * (q.band.hi - q.band.lo);
                let target = if vuf < q.band.lo {
                    q.band.lo + margin
                } else {
                    q.band.hi - margin
                };
                let Some((z, r, used)) = restore(q.index, y, target, q.band, &lo, &hi, step) else {
                    evaluations += RESTORE_BUDGET;
                    continue;
                };
                evaluations += used;
                y = z;
                ratio = r;
            }
            let reference = winner.map_or(best, |w| w.1);
            if better(ratio, reference) {
                winner = Some((y, ratio));
            }
        }
        match winner {
            Some((y, ratio)) => {
                x = y;
                best = ratio;
                moved = true;
            }
            None => step *= 0.5,
        }
    }

    if !moved {
        return *start;
    }
    let p = SearchPoint::from_coords(x);
    debug_assert!(env.contains(&p));
    p.triple().unwrap_or(*start)
}

const RESTORE_BUDGET: usize = 4 * 6;

/// Pulls an out-of-band point back onto the band edge `target` with a few
/// Newton steps on VUF (forward-difference gradient, box-projected).
/// Returns the restored point, its ratio and the evaluations used.
fn restore(
    index: Metric,
    mut y: [f64; 5],
    target: f64,
    band: VufBand,
    lo: &[f64; 5],
    hi: &[f64; 5],
    step: f64,
) -> Option<([f64; 5], f64, usize)> {
    let vuf_at = |x: [f64; 5]| {
        let t = SearchPoint::from_coords(x).triple().ok()?;
        metrics::vuf(&t).ok().map(|d| d.value)
    };
    let mut used = 0;
    for _ in 0..4 {
        let v = vuf_at(y)?;
        used += 1;
        if band.contains(v) {
            let (ratio, _) = evaluate(index, &SearchPoint::from_coords(y))?;
            return Some((y, ratio, used));
        }
        let mut g = [0.0; 5];
        for k in 0..5 {
            let h = 1e-3 * step.max(1e-6) * (hi[k] - lo[k]);
            if h == 0.0 {
                continue;
            }
            let mut z = y;
            z[k] = if y[k] + h <= hi[k] { y[k] + h } else { y[k] - h };
            g[k] = (vuf_at(z)? - v) / (z[k] - y[k]);
            used += 1;
        }
        // Freeze coordinates pinned at a bound that the step would push out.
        let delta = target - v;
        for k in 0..5 {
            let dir = g[k] * delta;
            if (y[k] >= hi[k] && dir > 0.0) || (y[k] <= lo[k] && dir < 0.0) {
                g[k] = 0.0;
            }
        }
        let norm2: f64 = g.iter().map(|c| c * c).sum();
        if norm2 == 0.0 {
            return None;
        }
        for k in 0..5 {
            y[k] = (y[k] + delta * g[k] / norm2).clamp(lo[k], hi[k]);
        }
    }
    let v = vuf_at(y)?;
    if band.contains(v) {
        let (ratio, _) = evaluate(index, &SearchPoint::from_coords(y))?;
        return Some((y, ratio, used + 1));
    }
    None
}

/// One row of a band report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsCell {
    pub index: Metric,
    pub band: VufBand,
    pub result: Option<BoundsResult>,
    pub error: Option<String>,
}

/// Bounds for every relative index in every band, band-major.
pub fn band_report(
    bands: &[VufBand],
    envelope: EnvelopeBox,
    resolution: usize,
    refine: bool,
) -> Result<Vec<BoundsCell>, BoundsError> {
    for b in bands {
        VufBand::new(b.lo, b.hi)?;
    }
    let mut sorted: Vec<VufBand> = bands.to_vec();
    sorted.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    if sorted.windows(2).any(|w| w[0].hi > w[1].lo) {
        return Err(BoundsError::InvalidQuery("VUF bands overlap".into()));
    }
    let mut cells = Vec::with_capacity(bands.len() * Metric::RELATIVE.len());
    for band in bands {
        let results = sweep_many(&Metric::RELATIVE, *band, envelope, resolution, refine);
        for (index, outcome) in Metric::RELATIVE.into_iter().zip(results) {
            let (result, error) = match outcome {
                Ok(r) => (Some(r), None),
                Err(e @ BoundsError::EmptyBand { .. }) => (None, Some(e.to_string())),
                Err(e) => return Err(e),
            };
            cells.push(BoundsCell {
                index,
                band: *band,
                result,
                error,
            });
        }
    }
    Ok(cells)
}
