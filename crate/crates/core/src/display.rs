//! Raster-scan display geometry and timing.
//!
//! A stimulus sitting at grid cell `(i, j)` is mapped to a screen position
//! (fractions of width and height), then to a fraction `h` of the scan
//! extent, then to the time the raster needs to reach and switch it:
//! `scr(h) = a·h + b`. Latency differences between cells only depend on the
//! scan-axis coordinate, so everything downstream works with
//! [`ms_per_step`] along that axis.

use crate::error::{check_fraction, check_range, Error, Result};

/// Scan direction of the panel relative to the displayed image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Orientation {
    /// Top-to-bottom scan along the displayed height.
    #[default]
    Normal,
    /// Panel turned by 90 degrees; the scan runs along the displayed width
    /// (smartphone-based VR headsets).
    Turned90,
}

impl Orientation {
    pub fn as_str(self) -> &'static str {
        match self {
            Orientation::Normal => "normal",
            Orientation::Turned90 => "turned_90",
        }
    }
}

impl std::str::FromStr for Orientation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal" => Ok(Orientation::Normal),
            "turned_90" | "turned90" => Ok(Orientation::Turned90),
            other => Err(Error::Parameter(format!(
                "unknown orientation '{other}' (expected normal or turned_90)"
            ))),
        }
    }
}

/// Timing parameters of a raster-scanned display.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScreenModel {
    refresh_rate_hz: f64,
    scan_time_a_ms: f64,
    pixel_response_b_ms: f64,
    width_px: f64,
    height_px: f64,
    orientation: Orientation,
}

/// Pixel colour-switch time used when default timing is requested.
pub const DEFAULT_PIXEL_RESPONSE_MS: f64 = 6.0;

impl ScreenModel {
    pub fn new(
        refresh_rate_hz: f64,
        scan_time_a_ms: f64,
        pixel_response_b_ms: f64,
        width_px: f64,
        height_px: f64,
        orientation: Orientation,
    ) -> Result<Self> {
        check_range(
            "refresh_rate_hz",
            refresh_rate_hz,
            refresh_rate_hz > 0.0,
            "> 0",
        )?;
        check_range(
            "scan_time_a_ms",
            scan_time_a_ms,
            scan_time_a_ms > 0.0,
            "> 0",
        )?;
        check_range(
            "pixel_response_b_ms",
            pixel_response_b_ms,
            pixel_response_b_ms >= 0.0,
            ">= 0",
        )?;
        check_range("width_px", width_px, width_px > 0.0, "> 0")?;
        check_range("height_px", height_px, height_px > 0.0, "> 0")?;
        let period = 1000.0 / refresh_rate_hz;
        // relative slack so a = 1000/RR computed elsewhere is accepted
        if scan_time_a_ms > period * (1.0 + 1e-12) {
            return Err(Error::Range {
                name: "scan_time_a_ms",
                value: scan_time_a_ms,
                expected: "<= 1000 / refresh_rate_hz",
            });
        }
        Ok(Self {
            refresh_rate_hz,
            scan_time_a_ms,
            pixel_response_b_ms,
            width_px,
            height_px,
            orientation,
        })
    }

    /// Screen with the measured defaults: `a` is the refresh period floored
    /// to whole milliseconds (16 ms at 60 Hz) and `b` is 6 ms.
    pub fn with_default_timing(
        refresh_rate_hz: f64,
        width_px: f64,
        height_px: f64,
        orientation: Orientation,
    ) -> Result<Self> {
        check_range(
            "refresh_rate_hz",
            refresh_rate_hz,
            refresh_rate_hz > 0.0 && refresh_rate_hz <= 1000.0,
            "0 < value <= 1000",
        )?;
        let a = (1000.0 / refresh_rate_hz).floor();
        Self::new(
            refresh_rate_hz,
            a,
            DEFAULT_PIXEL_RESPONSE_MS,
            width_px,
            height_px,
            orientation,
        )
    }

    pub fn refresh_rate_hz(&self) -> f64 {
        self.refresh_rate_hz
    }

    /// Full refresh period `1000 / RR` in milliseconds.
    pub fn refresh_period_ms(&self) -> f64 {
        1000.0 / self.refresh_rate_hz
    }

    pub fn scan_time_a_ms(&self) -> f64 {
        self.scan_time_a_ms
    }

    pub fn pixel_response_b_ms(&self) -> f64 {
        self.pixel_response_b_ms
    }

    pub fn width_px(&self) -> f64 {
        self.width_px
    }

    pub fn height_px(&self) -> f64 {
        self.height_px
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    /// Screen extent along the scan axis in pixels.
    pub fn scan_extent_px(&self) -> f64 {
        match self.orientation {
            Orientation::Normal => self.height_px,
            Orientation::Turned90 => self.width_px,
        }
    }
}

/// Geometry of an `I x J` grid of stimuli. Margins are measured to the
/// centre of the first stimulus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StimulusMatrix {
    rows: usize,
    cols: usize,
    pitch_ui_px: f64,
    pitch_uj_px: f64,
    margin_mi_px: f64,
    margin_mj_px: f64,
}

impl StimulusMatrix {
    pub fn new(
        rows: usize,
        cols: usize,
        pitch_ui_px: f64,
        pitch_uj_px: f64,
        margin_mi_px: f64,
        margin_mj_px: f64,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Geometry(format!(
                "matrix must have at least one row and column, got {rows}x{cols}"
            )));
        }
        check_range("pitch_ui_px", pitch_ui_px, pitch_ui_px > 0.0, "> 0")?;
        check_range("pitch_uj_px", pitch_uj_px, pitch_uj_px > 0.0, "> 0")?;
        check_range("margin_mi_px", margin_mi_px, margin_mi_px >= 0.0, ">= 0")?;
        check_range("margin_mj_px", margin_mj_px, margin_mj_px >= 0.0, ">= 0")?;
        Ok(Self {
            rows,
            cols,
            pitch_ui_px,
            pitch_uj_px,
            margin_mi_px,
            margin_mj_px,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn pitch_ui_px(&self) -> f64 {
        self.pitch_ui_px
    }

    pub fn pitch_uj_px(&self) -> f64 {
        self.pitch_uj_px
    }

    pub fn margin_mi_px(&self) -> f64 {
        self.margin_mi_px
    }

    pub fn margin_mj_px(&self) -> f64 {
        self.margin_mj_px
    }

    /// Checks that every stimulus centre lies on `screen`.
    pub fn check_fits(&self, screen: &ScreenModel) -> Result<()> {
        let bottom = self.margin_mi_px + (self.rows - 1) as f64 * self.pitch_ui_px;
        let right = self.margin_mj_px + (self.cols - 1) as f64 * self.pitch_uj_px;
        if bottom >= screen.height_px() {
            return Err(Error::Geometry(format!(
                "last row centre at {bottom} px does not fit in screen height {} px",
                screen.height_px()
            )));
        }
        if right >= screen.width_px() {
            return Err(Error::Geometry(format!(
                "last column centre at {right} px does not fit in screen width {} px",
                screen.width_px()
            )));
        }
        Ok(())
    }

    pub fn check_index(&self, idx: GridIndex) -> Result<()> {
        if idx.i < self.rows && idx.j < self.cols {
            Ok(())
        } else {
            Err(Error::Index {
                i: idx.i,
                j: idx.j,
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    /// Row-major iterator over every cell.
    pub fn cells(&self) -> impl Iterator<Item = GridIndex> + '_ {
        (0..self.rows).flat_map(move |i| (0..self.cols).map(move |j| GridIndex { i, j }))
    }

    /// Cell at row-major position `k`.
    pub fn cell(&self, k: usize) -> GridIndex {
        GridIndex {
            i: k / self.cols,
            j: k % self.cols,
        }
    }

    /// Centre of the full grid, `((I-1)/2, (J-1)/2)`.
    pub fn centre(&self) -> GridPoint {
        GridPoint {
            i: (self.rows - 1) as f64 / 2.0,
            j: (self.cols - 1) as f64 / 2.0,
        }
    }

    fn check_point(&self, p: GridPoint) -> Result<()> {
        check_range(
            "row coordinate",
            p.i,
            p.i >= 0.0 && p.i <= (self.rows - 1) as f64,
            "0 <= i <= rows - 1",
        )?;
        check_range(
            "column coordinate",
            p.j,
            p.j >= 0.0 && p.j <= (self.cols - 1) as f64,
            "0 <= j <= cols - 1",
        )
    }
}

/// Zero-based cell of a stimulus matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridIndex {
    pub i: usize,
    pub j: usize,
}

impl GridIndex {
    pub const fn new(i: usize, j: usize) -> Self {
        Self { i, j }
    }
}

/// A fractional position in grid coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub i: f64,
    pub j: f64,
}

/// Mean grid position of a set of displayed stimuli.
pub type Barycentre = GridPoint;

impl From<GridIndex> for GridPoint {
    fn from(idx: GridIndex) -> Self {
        Self {
            i: idx.i as f64,
            j: idx.j as f64,
        }
    }
}

/// Screen position `(x, y)` of a cell centre as fractions of width and height.
pub fn position(
    matrix: &StimulusMatrix,
    screen: &ScreenModel,
    idx: GridIndex,
) -> Result<(f64, f64)> {
    matrix.check_index(idx)?;
    point_position(matrix, screen, idx.into())
}

/// [`position`] for a fractional grid coordinate.
pub fn point_position(
    matrix: &StimulusMatrix,
    screen: &ScreenModel,
    p: GridPoint,
) -> Result<(f64, f64)> {
    matrix.check_fits(screen)?;
    matrix.check_point(p)?;
    let x = (matrix.margin_mj_px + p.j * matrix.pitch_uj_px) / screen.width_px;
    let y = (matrix.margin_mi_px + p.i * matrix.pitch_ui_px) / screen.height_px;
    Ok((x, y))
}

/// Fraction of the scan extent for a screen position.
pub fn height(x: f64, y: f64, screen: &ScreenModel) -> Result<f64> {
    check_fraction("x", x)?;
    check_fraction("y", y)?;
    Ok(match screen.orientation {
        Orientation::Normal => y,
        Orientation::Turned90 => x,
    })
}

/// Screen rendering time `a·h + b` for a stimulus at scan fraction `h`.
pub fn scr(screen: &ScreenModel, h: f64) -> Result<f64> {
    check_fraction("h", h)?;
    Ok(screen.scan_time_a_ms * h + screen.pixel_response_b_ms)
}

/// Scan height of a cell: `H ∘ P`.
pub fn cell_height(matrix: &StimulusMatrix, screen: &ScreenModel, idx: GridIndex) -> Result<f64> {
    let (x, y) = position(matrix, screen, idx)?;
    height(x, y, screen)
}

/// Milliseconds between two adjacent stimuli along the scan axis.
pub fn ms_per_step(matrix: &StimulusMatrix, screen: &ScreenModel) -> f64 {
    match screen.orientation {
        Orientation::Normal => screen.scan_time_a_ms * matrix.pitch_ui_px / screen.height_px,
        Orientation::Turned90 => screen.scan_time_a_ms * matrix.pitch_uj_px / screen.width_px,
    }
}

/// Grid coordinate along the scan axis.
pub fn scan_coordinate(screen: &ScreenModel, p: GridPoint) -> f64 {
    match screen.orientation {
        Orientation::Normal => p.i,
        Orientation::Turned90 => p.j,
    }
}

/// Latency difference between two stimuli, valid when every camera's
/// content reaches the screen within one frame (single-pass rendering, or
/// first-appearance latencies).
pub fn delta_latency(
    matrix: &StimulusMatrix,
    screen: &ScreenModel,
    idx0: GridIndex,
    idx1: GridIndex,
) -> Result<f64> {
    matrix.check_index(idx0)?;
    matrix.check_index(idx1)?;
    let steps = scan_coordinate(screen, idx1.into()) - scan_coordinate(screen, idx0.into());
    Ok(ms_per_step(matrix, screen) * steps.abs())
}

/// Component-wise mean of a non-empty set of cells.
pub fn barycentre(stimuli: &[GridIndex]) -> Result<Barycentre> {
    if stimuli.is_empty() {
        return Err(Error::EmptyInput("barycentre needs at least one stimulus"));
    }
    let (si, sj) = stimuli.iter().fold((0u64, 0u64), |(si, sj), s| {
        (si + s.i as u64, sj + s.j as u64)
    });
    let n = stimuli.len() as f64;
    Ok(GridPoint {
        i: si as f64 / n,
        j: sj as f64 / n,
    })
}

/// Latency between a barycentre and a reference cell along the scan axis.
pub fn barycentre_offset(
    matrix: &StimulusMatrix,
    screen: &ScreenModel,
    bary: Barycentre,
    ref_idx: GridIndex,
) -> Result<f64> {
    matrix.check_index(ref_idx)?;
    point_offset(matrix, screen, bary, ref_idx.into())
}

/// Latency between two fractional grid positions along the scan axis.
pub fn point_offset(
    matrix: &StimulusMatrix,
    screen: &ScreenModel,
    a: GridPoint,
    b: GridPoint,
) -> Result<f64> {
    matrix.check_point(a)?;
    matrix.check_point(b)?;
    let steps = scan_coordinate(screen, a) - scan_coordinate(screen, b);
    Ok(ms_per_step(matrix, screen) * steps.abs())
}

/// Largest latency difference between any two cells of the matrix.
pub fn max_latency_spread(matrix: &StimulusMatrix, screen: &ScreenModel) -> f64 {
    let n = match screen.orientation {
        Orientation::Normal => matrix.rows,
        Orientation::Turned90 => matrix.cols,
    };
    ms_per_step(matrix, screen) * (n - 1) as f64
}
