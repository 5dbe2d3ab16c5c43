//! Deterministic escape-time rendering of dynamical and parameter planes.
//!
//! A render is a pure per-pixel sweep: the verdict of a pixel depends only
//! on its center coordinate, so the output is byte-identical for any worker
//! count. Rows are sharded over a fixed pool (rayon when the `parallel`
//! feature is on, a plain loop otherwise) and reassembled in index order.
//! The canonical artifact is binary PPM; PNG emission rides the `png`
//! feature. Every render also produces a machine-readable stats record.

use crate::cx::Cx;
use crate::error::{Error, Result};
use crate::family::{BuiltSystem, FamilySpec, ParamVerdict};
use crate::schwarz::PointClass;
use num_complex::Complex64;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

pub const STATS_SCHEMA: &str = "render-stats/1";

/// Largest accepted pixel count (either side).
pub const MAX_SIDE: usize = 16384;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderConfig {
    /// Window center in the plane being rendered.
    pub center: [f64; 2],
    /// Window width; the height follows from the aspect ratio (square
    /// pixels).
    pub width: f64,
    pub width_px: usize,
    pub height_px: usize,
    pub max_iter: usize,
    /// Worker count for the row shards; 0 picks the machine default.
    pub workers: usize,
}

impl Default for RenderConfig {
    fn default() -> RenderConfig {
        RenderConfig {
            center: [0.0, 0.0],
            width: 4.0,
            width_px: 512,
            height_px: 512,
            max_iter: 200,
            workers: 0,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width_px == 0 || self.height_px == 0 {
            return Err(Error::InvalidConfig("resolution must be positive".into()));
        }
        if self.width_px > MAX_SIDE || self.height_px > MAX_SIDE {
            return Err(Error::InvalidConfig(format!(
                "resolution exceeds {MAX_SIDE} pixels per side"
            )));
        }
        if !(self.width > 0.0 && self.width.is_finite()) || !self.center.iter().all(|c| c.is_finite())
        {
            return Err(Error::InvalidConfig("window must be finite".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be positive".into()));
        }
        Ok(())
    }

    fn step(&self) -> f64 {
        self.width / self.width_px as f64
    }

    /// The plane coordinate of the center of pixel `(col, row)`; row 0 is the
    /// top of the window.
    pub fn pixel_center(&self, col: usize, row: usize) -> Complex64 {
        let s = self.step();
        let x = self.center[0] - self.width / 2.0 + (col as f64 + 0.5) * s;
        let half_h = self.height_px as f64 / 2.0 * s;
        let y = self.center[1] + half_h - (row as f64 + 0.5) * s;
        Complex64::new(x, y)
    }
}

/// Per-pixel verdict shared by both planes. Dynamical renders use the first
/// three cases; parameter renders additionally mark parameters whose system
/// fails to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PixelVerdict {
    /// Escaped (dynamical: the orbit reached the fundamental tile at this
    /// rank; parameter: a critical orbit escaped at this rank).
    Escaping(usize),
    /// Certified trapped (dynamical: the orbit hit an exact fixed point;
    /// parameter: every critical orbit stayed → connected).
    NonEscaping,
    /// No verdict within the budget.
    Undecided,
    /// The parameter yields no valid system.
    Invalid,
}

/// Fixed palette: rank hue ramp, black for trapped, a loud sentinel for
/// undecided, near-white for invalid parameters.
pub fn verdict_color(v: PixelVerdict) -> [u8; 3] {
    match v {
        PixelVerdict::Escaping(n) => hue_ramp(n),
        PixelVerdict::NonEscaping => [0, 0, 0],
        PixelVerdict::Undecided => [255, 0, 255],
        PixelVerdict::Invalid => [245, 245, 245],
    }
}

/// Golden-step hue ramp: distinct neighbouring ranks, rank 0 pure red.
fn hue_ramp(rank: usize) -> [u8; 3] {
    let h = (rank as f64 * 0.618_033_988_749_895).fract() * 6.0;
    let sector = h.floor() as usize % 6;
    let f = h.fract();
    let (v, p) = (255.0, 255.0 * 0.15);
    let q = v - (v - p) * f;
    let t = p + (v - p) * f;
    let (r, g, b) = match sector {
        0 => (v, t, p),
        1 => (q, v, p),
        2 => (p, v, t),
        3 => (p, q, v),
        4 => (t, p, v),
        _ => (v, p, q),
    };
    [r.round() as u8, g.round() as u8, b.round() as u8]
}

/// A rendered RGB8 image, row-major from the top-left.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl Image {
    /// Binary PPM (`P6`) encoding — the canonical, dependency-free artifact.
    pub fn ppm_bytes(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn write_ppm(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.ppm_bytes())?;
        Ok(())
    }

    #[cfg(feature = "png")]
    pub fn write_png(&self, path: &Path) -> Result<()> {
        image::save_buffer(
            path,
            &self.pixels,
            self.width as u32,
            self.height as u32,
            image::ExtendedColorType::Rgb8,
        )
        .map_err(|e| Error::InvalidConfig(format!("png encoding: {e}")))
    }
}

/// Sidecar record of a render: class counts, the escape-rank histogram and
/// the fraction of pixels left without a verdict.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RenderStats {
    pub schema: String,
    pub width_px: usize,
    pub height_px: usize,
    pub max_iter: usize,
    pub escaping: usize,
    pub non_escaping: usize,
    pub undecided: usize,
    pub invalid: usize,
    pub max_rank: usize,
    pub undecided_fraction: f64,
    /// Pixel count per escape rank, index = rank.
    pub rank_histogram: Vec<usize>,
}

impl RenderStats {
    fn tally(cfg: &RenderConfig, verdicts: impl Iterator<Item = PixelVerdict>) -> RenderStats {
        let mut s = RenderStats {
            schema: STATS_SCHEMA.into(),
            width_px: cfg.width_px,
            height_px: cfg.height_px,
            max_iter: cfg.max_iter,
            escaping: 0,
            non_escaping: 0,
            undecided: 0,
            invalid: 0,
            max_rank: 0,
            undecided_fraction: 0.0,
            rank_histogram: Vec::new(),
        };
        let mut total = 0usize;
        for v in verdicts {
            total += 1;
            match v {
                PixelVerdict::Escaping(n) => {
                    s.escaping += 1;
                    s.max_rank = s.max_rank.max(n);
                    if s.rank_histogram.len() <= n {
                        s.rank_histogram.resize(n + 1, 0);
                    }
                    s.rank_histogram[n] += 1;
                }
                PixelVerdict::NonEscaping => s.non_escaping += 1,
                PixelVerdict::Undecided => s.undecided += 1,
                PixelVerdict::Invalid => s.invalid += 1,
            }
        }
        if total > 0 {
            s.undecided_fraction = s.undecided as f64 / total as f64;
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("stats serialize")
    }
}

fn paint(cfg: &RenderConfig, rows: Vec<Vec<PixelVerdict>>) -> (Image, RenderStats) {
    let stats = RenderStats::tally(cfg, rows.iter().flatten().copied());
    let mut pixels = Vec::with_capacity(cfg.width_px * cfg.height_px * 3);
    for row in &rows {
        for &v in row {
            pixels.extend_from_slice(&verdict_color(v));
        }
    }
    (
        Image {
            width: cfg.width_px,
            height: cfg.height_px,
            pixels,
        },
        stats,
    )
}

fn render_row<F>(cfg: &RenderConfig, row: usize, classify: &F) -> Vec<PixelVerdict>
where
    F: Fn(Complex64) -> PixelVerdict + Sync,
{
    (0..cfg.width_px)
        .map(|col| classify(cfg.pixel_center(col, row)))
        .collect()
}

#[cfg(feature = "parallel")]
fn sweep<F>(cfg: &RenderConfig, classify: &F) -> Result<Vec<Vec<PixelVerdict>>>
where
    F: Fn(Complex64) -> PixelVerdict + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
    Ok(pool.install(|| {
        (0..cfg.height_px)
            .into_par_iter()
            .map(|row| render_row(cfg, row, classify))
            .collect()
    }))
}

#[cfg(not(feature = "parallel"))]
fn sweep<F>(cfg: &RenderConfig, classify: &F) -> Result<Vec<Vec<PixelVerdict>>>
where
    F: Fn(Complex64) -> PixelVerdict + Sync,
{
    Ok((0..cfg.height_px)
        .map(|row| render_row(cfg, row, classify))
        .collect())
}

/// Runs one pure per-pixel classifier over the window. The classifier sees
/// pixel-center coordinates; the sweep is row-sharded and reassembled in row
/// order, so the result does not depend on the worker count.
pub fn render_grid<F>(cfg: &RenderConfig, classify: F) -> Result<(Image, RenderStats)>
where
    F: Fn(Complex64) -> PixelVerdict + Sync,
{
    cfg.validate()?;
    let rows = sweep(cfg, &classify)?;
    Ok(paint(cfg, rows))
}

/// The dynamical-plane pixel test: budgeted orbit classification, with
/// budget survivors reported as undecided (only an exact-fixed-point hit
/// certifies trapping).
pub fn dynamical_verdict(sys: &BuiltSystem, z: Cx, max_iter: usize) -> PixelVerdict {
    match sys.classify(z, max_iter) {
        PointClass::Escaping(n) => PixelVerdict::Escaping(n),
        PointClass::NonEscaping(n) if n < max_iter => PixelVerdict::NonEscaping,
        PointClass::NonEscaping(_) | PointClass::Undecided(_) => PixelVerdict::Undecided,
    }
}

pub fn render_dynamical(sys: &BuiltSystem, cfg: &RenderConfig) -> Result<(Image, RenderStats)> {
    render_grid(cfg, |z| dynamical_verdict(sys, Cx::from(z), cfg.max_iter))
}

fn param_pixel(v: ParamVerdict) -> PixelVerdict {
    match v {
        ParamVerdict::Invalid => PixelVerdict::Invalid,
        ParamVerdict::Connected => PixelVerdict::NonEscaping,
        ParamVerdict::Disconnected(rank) => PixelVerdict::Escaping(rank),
        ParamVerdict::Undecided => PixelVerdict::Undecided,
    }
}

pub fn render_parameter(fam: &FamilySpec, cfg: &RenderConfig) -> Result<(Image, RenderStats)> {
    render_grid(cfg, |t| param_pixel(fam.verdict(t, cfg.max_iter)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn deltoid_system() -> BuiltSystem {
        let fam = FamilySpec::builtin("deltoid").unwrap();
        BuiltSystem::Reflection(fam.build(Complex64::new(0.5, 0.0)).unwrap())
    }

    #[test]
    fn tile_windows_render_monochrome_rank_zero() {
        let sys = deltoid_system();
        let cfg = RenderConfig {
            center: [0.0, 0.0],
            width: 0.5,
            width_px: 16,
            height_px: 12,
            max_iter: 20,
            workers: 1,
        };
        let (img, stats) = render_dynamical(&sys, &cfg).unwrap();
        assert_eq!(stats.escaping, 16 * 12);
        assert_eq!(stats.max_rank, 0);
        assert_eq!(stats.rank_histogram, vec![16 * 12]);
        assert_eq!(stats.undecided_fraction, 0.0);
        let first = &img.pixels[0..3];
        assert!(img.pixels.chunks(3).all(|c| c == first));
        let ppm = img.ppm_bytes();
        assert!(ppm.starts_with(b"P6\n16 12\n255\n"));
        assert_eq!(ppm.len(), 13 + 16 * 12 * 3);
    }

    #[test]
    fn renders_are_byte_identical_across_worker_counts() {
        let sys = deltoid_system();
        let mk = |workers| RenderConfig {
            center: [0.9, 0.2],
            width: 3.0,
            width_px: 24,
            height_px: 24,
            max_iter: 60,
            workers,
        };
        let (a, _) = render_dynamical(&sys, &mk(1)).unwrap();
        let (b, _) = render_dynamical(&sys, &mk(2)).unwrap();
        let (c, _) = render_dynamical(&sys, &mk(2)).unwrap();
        assert_eq!(a.ppm_bytes(), b.ppm_bytes());
        assert_eq!(b.ppm_bytes(), c.ppm_bytes());
    }

    #[test]
    fn budget_sweep_shrinks_the_undecided_set() {
        // window hugging a boundary cusp of the cusped hypocycloid, where
        // escape times blow up and verdicts arrive late
        let sys = deltoid_system();
        let mk = |max_iter| RenderConfig {
            center: [1.4995, 0.0],
            width: 2e-3,
            width_px: 24,
            height_px: 24,
            max_iter,
            workers: 1,
        };
        let (_, coarse) = render_dynamical(&sys, &mk(100)).unwrap();
        let (_, fine) = render_dynamical(&sys, &mk(10_000)).unwrap();
        assert!(
            coarse.undecided_fraction > 0.0,
            "no undecided pixels at the small budget"
        );
        assert!(
            fine.undecided_fraction < coarse.undecided_fraction,
            "undecided fraction did not decrease: {} -> {}",
            coarse.undecided_fraction,
            fine.undecided_fraction
        );
    }

    #[test]
    fn parameter_windows_mark_invalid_and_connected_regions() {
        let fam = FamilySpec::builtin("cardioid").unwrap();
        let cfg = RenderConfig {
            center: [3.0, 0.0],
            width: 0.5,
            width_px: 6,
            height_px: 6,
            max_iter: 30,
            workers: 1,
        };
        let (img, stats) = render_parameter(&fam, &cfg).unwrap();
        assert_eq!(stats.invalid, 36);
        assert!(img
            .pixels
            .chunks(3)
            .all(|c| c == verdict_color(PixelVerdict::Invalid)));

        // the hypocycloid family center is a connected parameter; the window
        // width is dyadic so the middle pixel hits it exactly
        let fam = FamilySpec::builtin("deltoid").unwrap();
        let cfg = RenderConfig {
            center: [0.5, 0.0],
            width: 5.0 / 128.0,
            width_px: 5,
            height_px: 5,
            max_iter: 48,
            workers: 1,
        };
        assert_eq!(cfg.pixel_center(2, 2), Complex64::new(0.5, 0.0));
        let (_, stats) = render_parameter(&fam, &cfg).unwrap();
        assert!(stats.non_escaping >= 1, "center parameter not connected");
    }

    #[test]
    fn stats_records_round_trip_and_carry_the_schema() {
        let sys = deltoid_system();
        let cfg = RenderConfig {
            center: [0.0, 0.0],
            width: 4.0,
            width_px: 8,
            height_px: 8,
            max_iter: 40,
            workers: 1,
        };
        let (_, stats) = render_dynamical(&sys, &cfg).unwrap();
        let text = stats.to_json();
        let back: RenderStats = serde_json::from_str(&text).unwrap();
        assert_eq!(back.schema, STATS_SCHEMA);
        assert_eq!(
            back.escaping + back.non_escaping + back.undecided + back.invalid,
            64
        );
    }

    #[test]
    fn config_validation_rejects_degenerate_windows() {
        let mut cfg = RenderConfig::default();
        cfg.width_px = 0;
        assert!(cfg.validate().is_err());
        cfg.width_px = MAX_SIDE + 1;
        assert!(cfg.validate().is_err());
        cfg.width_px = 64;
        cfg.width = 0.0;
        assert!(cfg.validate().is_err());
        cfg.width = 2.0;
        cfg.max_iter = 0;
        assert!(cfg.validate().is_err());
        cfg.max_iter = 10;
        assert!(cfg.validate().is_ok());
    }

    #[cfg(feature = "png")]
    #[test]
    fn png_files_are_emitted_when_enabled() {
        let sys = deltoid_system();
        let cfg = RenderConfig {
            center: [0.0, 0.0],
            width: 0.5,
            width_px: 8,
            height_px: 8,
            max_iter: 10,
            workers: 1,
        };
        let (img, _) = render_dynamical(&sys, &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.png");
        img.write_png(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert!(bytes.starts_with(&[0x89, b'P', b'N', b'G']));
    }
}
