//! Grid scans of the renormalized-coordinate plane.
//!
//! With the first moments `u` fixed, every grid point `(v1, v2)` fixes
//! `v = (v1, v2, 1 - v1 - v2)` and a moment matrix in standard form. Each
//! point is tested for membership in the inner set `R` (PPT), the exact set
//! `S_j` and the outer set `T_j` (`tau_j >= 0`). The cheap tests run first;
//! the SDP only runs where they disagree, since `R ⊆ S_j ⊆ T_j`.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::feasibility::{exact_test_direct_with_band, outer_test_state, BOUNDARY_BAND};
use crate::matcore::PSD_TOL;
use crate::reduction::{
    moments_from_coords, ppt_inner_test_with_tol, reconstruct_rho, RenormalizedCoords, ReductionOperators,
};
use crate::spinalg::SpinNumber;

/// Largest accepted grid resolution per axis.
pub const MAX_GRID: usize = 1024;

/// Which sets a scan evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SetSelection {
    pub inner: bool,
    pub exact: bool,
    pub outer: bool,
}

impl SetSelection {
    pub const ALL: Self = Self {
        inner: true,
        exact: true,
        outer: true,
    };

    /// Parses a comma-separated list of `R`, `S`, `T` (also `Sj`, `Tj`).
    pub fn parse(s: &str) -> Result<Self> {
        let mut out = Self {
            inner: false,
            exact: false,
            outer: false,
        };
        for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            match item.to_ascii_uppercase().as_str() {
                "R" => out.inner = true,
                "S" | "SJ" => out.exact = true,
                "T" | "TJ" => out.outer = true,
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "unknown set '{other}' (expected R, S or T)"
                    )))
                }
            }
        }
        if !(out.inner || out.exact || out.outer) {
            return Err(Error::InvalidArgument("no sets selected".into()));
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanSpec {
    pub j: SpinNumber,
    pub u: [f64; 3],
    /// Points per axis; both endpoints are included.
    pub grid: usize,
    pub v_min: f64,
    pub v_max: f64,
    pub sets: SetSelection,
}

impl ScanSpec {
    pub fn new(j: SpinNumber, u: [f64; 3], grid: usize) -> Self {
        Self {
            j,
            u,
            grid,
            v_min: -0.2,
            v_max: 1.0,
            sets: SetSelection::ALL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.j.two_j() < 2 {
            return Err(Error::SpinTooSmall("scans use the two-qubit reduction"));
        }
        if self.grid < 2 || self.grid > MAX_GRID {
            return Err(Error::InvalidArgument(format!(
                "grid must be between 2 and {MAX_GRID}, got {}",
                self.grid
            )));
        }
        if !self.v_min.is_finite() || !self.v_max.is_finite() || self.v_min >= self.v_max {
            return Err(Error::InvalidArgument("need v_min < v_max".into()));
        }
        if self.u.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(())
    }

    /// Coordinate of grid index `i` along either axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        self.v_min + (self.v_max - self.v_min) * i as f64 / (self.grid - 1) as f64
    }

    pub fn cell_area(&self) -> f64 {
        let h = (self.v_max - self.v_min) / (self.grid - 1) as f64;
        h * h
    }

    pub fn u_norm(&self) -> f64 {
        self.u.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Membership flags of one grid point; `None` when not computed.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanPoint {
    pub i1: usize,
    pub i2: usize,
    pub v1: f64,
    pub v2: f64,
    pub in_r: Option<bool>,
    pub in_s: Option<bool>,
    pub in_t: Option<bool>,
    /// Whether the SDP ran at this point.
    pub solved: bool,
    pub error: Option<String>,
    pub elapsed: Duration,
}

impl ScanPoint {
    /// `R => S => T` on the computed flags.
    pub fn is_nested(&self) -> bool {
        let implies = |a: Option<bool>, b: Option<bool>| !matches!((a, b), (Some(true), Some(false)));
        implies(self.in_r, self.in_s) && implies(self.in_s, self.in_t) && implies(self.in_r, self.in_t)
    }
}

#[derive(Clone, Debug)]
pub struct ScanResult {
    pub spec: ScanSpec,
    /// Row-major: `points[i2 * grid + i1]`, `v2` indexing rows.
    pub points: Vec<ScanPoint>,
    pub elapsed: Duration,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SetKind {
    Inner,
    Exact,
    Outer,
}

impl ScanResult {
    pub fn point(&self, i1: usize, i2: usize) -> &ScanPoint {
        &self.points[i2 * self.spec.grid + i1]
    }

    pub fn count(&self, set: SetKind) -> usize {
        self.points
            .iter()
            .filter(|p| match set {
                SetKind::Inner => p.in_r == Some(true),
                SetKind::Exact => p.in_s == Some(true),
                SetKind::Outer => p.in_t == Some(true),
            })
            .count()
    }

    /// Grid area (points times cell area).
    pub fn area(&self, set: SetKind) -> f64 {
        self.count(set) as f64 * self.spec.cell_area()
    }

    pub fn nesting_violations(&self) -> usize {
        self.points.iter().filter(|p| !p.is_nested()).count()
    }

    pub fn sdp_solves(&self) -> usize {
        self.points.iter().filter(|p| p.solved).count()
    }

    pub fn errors(&self) -> usize {
        self.points.iter().filter(|p| p.error.is_some()).count()
    }
}

/// Membership flags at one point of the plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PointFlags {
    pub in_r: Option<bool>,
    pub in_s: Option<bool>,
    pub in_t: Option<bool>,
    /// Whether the SDP ran.
    pub solved: bool,
}

/// Tests `v = (v1, v2, 1 - v1 - v2)` for the sets selected in `spec`.
pub fn classify_point(spec: &ScanSpec, ops: &ReductionOperators, v1: f64, v2: f64) -> Result<PointFlags> {
    let coords = RenormalizedCoords::new(spec.j, spec.u, [v1, v2, 1.0 - v1 - v2])?;
    let m = moments_from_coords(&coords)?;
    let rho = reconstruct_rho(&m, ops)?;
    let in_r = ppt_inner_test_with_tol(&rho, PSD_TOL);
    let in_t = outer_test_state(&rho, ops, PSD_TOL);
    let mut flags = PointFlags {
        in_r: spec.sets.inner.then_some(in_r),
        in_s: None,
        in_t: spec.sets.outer.then_some(in_t),
        solved: false,
    };
    if spec.sets.exact {
        flags.in_s = Some(if in_r {
            true
        } else if !in_t {
            false
        } else {
            flags.solved = true;
            exact_test_direct_with_band(&m, BOUNDARY_BAND)?.status.accepts()
        });
    }
    Ok(flags)
}

/// Evaluates grid point `(i1, i2)`.
pub fn evaluate_point(spec: &ScanSpec, ops: &ReductionOperators, i1: usize, i2: usize) -> ScanPoint {
    let start = Instant::now();
    let v1 = spec.coordinate(i1);
    let v2 = spec.coordinate(i2);
    let (flags, error) = match classify_point(spec, ops, v1, v2) {
        Ok(f) => (f, None),
        Err(e) => (
            PointFlags {
                in_r: None,
                in_s: None,
                in_t: None,
                solved: false,
            },
            Some(e.to_string()),
        ),
    };
    ScanPoint {
        i1,
        i2,
        v1,
        v2,
        in_r: flags.in_r,
        in_s: flags.in_s,
        in_t: flags.in_t,
        solved: flags.solved,
        error,
        elapsed: start.elapsed(),
    }
}

/// Runs the scan on the current rayon pool.
pub fn scan(spec: &ScanSpec) -> Result<ScanResult> {
    spec.validate()?;
    let ops = ReductionOperators::new(spec.j)?;
    let start = Instant::now();
    let n = spec.grid;
    let points: Vec<ScanPoint> = (0..n * n)
        .into_par_iter()
        .map(|k| evaluate_point(spec, &ops, k % n, k / n))
        .collect();
    Ok(ScanResult {
        spec: spec.clone(),
        points,
        elapsed: start.elapsed(),
    })
}

/// Runs the scan on a dedicated pool with at most `threads` workers.
pub fn scan_with_threads(spec: &ScanSpec, threads: usize) -> Result<ScanResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| scan(spec))
}

pub const FILL_INNER: &str = "#1b7837";
pub const FILL_EXACT: &str = "#7fbf7b";
pub const FILL_OUTER: &str = "#d9f0d3";
pub const FILL_NONE: &str = "#ffffff";

/// Fill color of a point: the innermost set containing it.
pub fn point_fill(p: &ScanPoint) -> &'static str {
    if p.in_r == Some(true) {
        FILL_INNER
    } else if p.in_s == Some(true) {
        FILL_EXACT
    } else if p.in_t == Some(true) {
        FILL_OUTER
    } else {
        FILL_NONE
    }
}

/// SVG 1.1 rendering: one square per grid point, colored by the innermost
/// set containing it. `v1` grows to the right and `v2` upwards.
pub fn render_svg(result: &ScanResult) -> String {
    let spec = &result.spec;
    let n = spec.grid;
    let cell = (800 / n).max(1);
    let size = cell * n;
    let margin = 40;
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = size + 2 * margin + 160,
        h = size + 2 * margin
    );
    let _ = writeln!(
        s,
        r#"<title>j = {}, u = ({}, {}, {}), v1, v2 in [{}, {}]</title>"#,
        spec.j, spec.u[0], spec.u[1], spec.u[2], spec.v_min, spec.v_max
    );
    let _ = writeln!(s, r#"<g id="cells" transform="translate({margin},{margin})" shape-rendering="crispEdges">"#);
    for p in &result.points {
        let fill = point_fill(p);
        if fill == FILL_NONE {
            continue;
        }
        let x = p.i1 * cell;
        let y = (n - 1 - p.i2) * cell;
        let _ = writeln!(
            s,
            r#"<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="{fill}"/>"#
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<rect x="{margin}" y="{margin}" width="{size}" height="{size}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="14" text-anchor="middle">v1</text>"#,
        margin + size / 2,
        size + margin + 28
    );
    let _ = writeln!(
        s,
        r#"<text x="12" y="{}" font-size="14" text-anchor="middle">v2</text>"#,
        margin + size / 2
    );
    let legend = [(FILL_INNER, "R"), (FILL_EXACT, "S_j"), (FILL_OUTER, "T_j")];
    for (k, (fill, label)) in legend.iter().enumerate() {
        let y = margin + 20 * k;
        let x = size + margin + 20;
        let _ = writeln!(
            s,
            r#"<rect class="legend" x="{x}" y="{y}" width="14" height="14" fill="{fill}" stroke="black"/><text x="{}" y="{}" font-size="13">{label}</text>"#,
            x + 20,
            y + 12
        );
    }
    let _ = writeln!(s, "</svg>");
    s
}
