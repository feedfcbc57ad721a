//! Piece-wise linear functions on `[0, 1]`, the uniform grid they live on,
//! and the known-index bookkeeping used by the tax-design loop.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PwlError {
    #[error("abscissa {0} outside [0, 1]")]
    OutOfDomain(f64),
    #[error("breakpoints must be finite, strictly increasing, and span [0, 1]")]
    InvalidBreakpoints,
    #[error("update at x = {0} would break the monotone flag")]
    MonotoneViolation(f64),
    #[error("no set member on the requested side of {0}")]
    EmptyBracket(f64),
    #[error("clip bounds inverted: l = {l} > r = {r}")]
    InvertedClip { l: f64, r: f64 },
    #[error("{0} is not a point of the grid")]
    NotAGridPoint(f64),
    #[error("grid resolution must be at least 1")]
    ZeroResolution,
}

/// `clip(a, l, r) = min(max(a, l), r)`.
pub fn clip(a: f64, l: f64, r: f64) -> Result<f64, PwlError> {
    if l > r {
        return Err(PwlError::InvertedClip { l, r });
    }
    Ok(a.max(l).min(r))
}

/// The uniform grid `{0, Δ, 2Δ, …, KΔ = 1}` with spacing `Δ = 1/K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    k: u32,
}

impl Grid {
    /// Loads within `SNAP_REL · Δ` of a grid point are treated as exactly on
    /// it; the equilibrium solver returns approximate loads and the
    /// known-facility test needs exact grid comparisons.
    pub const SNAP_REL: f64 = 1e-6;

    pub fn new(resolution: u32) -> Result<Self, PwlError> {
        if resolution == 0 {
            return Err(PwlError::ZeroResolution);
        }
        Ok(Grid { k: resolution })
    }

    pub fn resolution(&self) -> u32 {
        self.k
    }

    pub fn spacing(&self) -> f64 {
        1.0 / f64::from(self.k)
    }

    /// Number of grid points, `K + 1`.
    pub fn len(&self) -> usize {
        self.k as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, index: u32) -> f64 {
        debug_assert!(index <= self.k);
        f64::from(index) / f64::from(self.k)
    }

    fn check_domain(x: f64) -> Result<(), PwlError> {
        if !(0.0..=1.0).contains(&x) || !x.is_finite() {
            return Err(PwlError::OutOfDomain(x));
        }
        Ok(())
    }

    /// Index of the grid point `x` sits on, if `x` is within snap tolerance
    /// of one.
    pub fn snap_index(&self, x: f64) -> Option<u32> {
        if !x.is_finite() {
            return None;
        }
        let t = x * f64::from(self.k);
        let near = t.round();
        if (t - near).abs() <= Self::SNAP_REL && (0.0..=f64::from(self.k)).contains(&near) {
            Some(near as u32)
        } else {
            None
        }
    }

    /// `x` snapped to the nearest grid point when within tolerance,
    /// otherwise `x` unchanged.
    pub fn snap(&self, x: f64) -> f64 {
        match self.snap_index(x) {
            Some(i) => self.point(i),
            None => x,
        }
    }

    pub fn floor_index(&self, x: f64) -> Result<u32, PwlError> {
        Self::check_domain(x)?;
        if let Some(i) = self.snap_index(x) {
            return Ok(i);
        }
        Ok((x * f64::from(self.k)).floor() as u32)
    }

    pub fn ceil_index(&self, x: f64) -> Result<u32, PwlError> {
        Self::check_domain(x)?;
        if let Some(i) = self.snap_index(x) {
            return Ok(i);
        }
        Ok((x * f64::from(self.k)).ceil() as u32)
    }

    /// `[x]⁻`: the largest grid point `≤ x` (after snapping).
    pub fn floor(&self, x: f64) -> Result<f64, PwlError> {
        Ok(self.point(self.floor_index(x)?))
    }

    /// `[x]⁺`: the smallest grid point `≥ x` (after snapping).
    pub fn ceil(&self, x: f64) -> Result<f64, PwlError> {
        Ok(self.point(self.ceil_index(x)?))
    }
}

/// A piece-wise linear function on `[0, 1]` stored as strictly increasing
/// breakpoints `(x_i, y_i)` with `x_1 = 0` and `x_n = 1`. Values between
/// breakpoints are linear interpolations of the bracketing pair.
///
/// Instances are immutable; [`PiecewiseLinear::update`] returns a new
/// function. When the `monotone` flag is set, every construction and update
/// checks that ordinates are non-decreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    points: Vec<(f64, f64)>,
    monotone: bool,
}

impl PiecewiseLinear {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, PwlError> {
        Self::with_flag(points, false)
    }

    /// Like [`PiecewiseLinear::new`] but flags the function monotone;
    /// ordinates must be non-decreasing now and after every update.
    pub fn monotone(points: Vec<(f64, f64)>) -> Result<Self, PwlError> {
        Self::with_flag(points, true)
    }

    fn with_flag(points: Vec<(f64, f64)>, monotone: bool) -> Result<Self, PwlError> {
        if points.len() < 2 {
            return Err(PwlError::InvalidBreakpoints);
        }
        let first = points.first().unwrap().0;
        let last = points.last().unwrap().0;
        if first != 0.0 || last != 1.0 {
            return Err(PwlError::InvalidBreakpoints);
        }
        for pair in points.windows(2) {
            if pair[0].0 >= pair[1].0 {
                return Err(PwlError::InvalidBreakpoints);
            }
        }
        if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(PwlError::InvalidBreakpoints);
        }
        if monotone {
            for pair in points.windows(2) {
                if pair[1].1 < pair[0].1 {
                    return Err(PwlError::MonotoneViolation(pair[1].0));
                }
            }
        }
        Ok(PiecewiseLinear { points, monotone })
    }

    /// The constant function `u ↦ v`.
    pub fn constant(v: f64) -> Self {
        PiecewiseLinear {
            points: vec![(0.0, v), (1.0, v)],
            monotone: false,
        }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn is_monotone_flagged(&self) -> bool {
        self.monotone
    }

    /// Index of the segment `[x_i, x_{i+1}]` containing `x`; when `x` hits a
    /// breakpoint exactly, returns `Ok(i)` with `points[i].0 == x`.
    fn locate(&self, x: f64) -> Result<Result<usize, usize>, PwlError> {
        Grid::check_domain(x)?;
        match self
            .points
            .binary_search_by(|(px, _)| px.partial_cmp(&x).unwrap())
        {
            Ok(i) => Ok(Ok(i)),
            Err(i) => Ok(Err(i - 1)), // x in (points[i-1].0, points[i].0)
        }
    }

    /// Evaluate at `x ∈ [0, 1]`; exact at breakpoints, `O(log n)` lookup.
    pub fn eval(&self, x: f64) -> Result<f64, PwlError> {
        match self.locate(x)? {
            Ok(i) => Ok(self.points[i].1),
            Err(i) => {
                let (xi, yi) = self.points[i];
                let (xj, yj) = self.points[i + 1];
                // Two-point interpolation, kept in this exact form so golden
                // files are stable bit for bit.
                Ok((x - xj) / (xi - xj) * yi + (xi - x) / (xi - xj) * yj)
            }
        }
    }

    /// `d ⋃ (x, y)`: replace the ordinate if `x` is an existing abscissa,
    /// otherwise insert a new breakpoint. The original is untouched.
    pub fn update(&self, x: f64, y: f64) -> Result<Self, PwlError> {
        let mut points = self.points.clone();
        match self.locate(x)? {
            Ok(i) => points[i].1 = y,
            Err(i) => points.insert(i + 1, (x, y)),
        }
        Self::with_flag(points, self.monotone)
    }

    /// Exact `∫₀ˣ d(u) du` via per-segment trapezoids.
    pub fn integral(&self, x: f64) -> Result<f64, PwlError> {
        Grid::check_domain(x)?;
        let mut acc = 0.0;
        for pair in self.points.windows(2) {
            let (x0, y0) = pair[0];
            let (x1, y1) = pair[1];
            if x <= x0 {
                break;
            }
            if x >= x1 {
                acc += 0.5 * (y0 + y1) * (x1 - x0);
            } else {
                let yx = self.eval(x)?;
                acc += 0.5 * (y0 + yx) * (x - x0);
                break;
            }
        }
        Ok(acc)
    }

    /// Smallest per-segment slope.
    pub fn min_slope(&self) -> f64 {
        self.points
            .windows(2)
            .map(|p| (p[1].1 - p[0].1) / (p[1].0 - p[0].0))
            .fold(f64::INFINITY, f64::min)
    }

    /// The function `u ↦ d(u) + slope·u`, sharing this function's
    /// breakpoints. Exact because adding a linear term keeps abscissas.
    pub fn add_linear(&self, slope: f64) -> Self {
        PiecewiseLinear {
            points: self
                .points
                .iter()
                .map(|&(x, y)| (x, y + slope * x))
                .collect(),
            monotone: false,
        }
    }

    /// CSV rows `x,y` in abscissa order, with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y\n");
        for &(x, y) in &self.points {
            let _ = writeln!(out, "{},{}", crate::io::fmt_sig(x), crate::io::fmt_sig(y));
        }
        out
    }
}

/// The set `K_f ⊆ ℒ` of grid indices where the learned tax is trusted.
/// Always contains 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnownIndexSet {
    grid: Grid,
    members: BTreeSet<u32>,
}

impl KnownIndexSet {
    pub fn new(grid: Grid) -> Self {
        let mut members = BTreeSet::new();
        members.insert(0);
        KnownIndexSet { grid, members }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        false // 0 is always a member
    }

    pub fn insert_index(&mut self, index: u32) -> bool {
        debug_assert!(index <= self.grid.resolution());
        self.members.insert(index)
    }

    /// Insert the grid point `x`; errors if `x` is not on the grid.
    pub fn insert_value(&mut self, x: f64) -> Result<bool, PwlError> {
        let i = self
            .grid
            .snap_index(x)
            .ok_or(PwlError::NotAGridPoint(x))?;
        Ok(self.insert_index(i))
    }

    pub fn contains_index(&self, index: u32) -> bool {
        self.members.contains(&index)
    }

    pub fn contains_value(&self, x: f64) -> bool {
        match self.grid.snap_index(x) {
            Some(i) => self.contains_index(i),
            None => false,
        }
    }

    pub fn indices(&self) -> impl Iterator<Item = u32> + '_ {
        self.members.iter().copied()
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.members.iter().map(move |&i| self.grid.point(i))
    }

    /// `[x]⁻_K`: the largest member `≤ x` (after grid snapping).
    pub fn floor(&self, x: f64) -> Result<f64, PwlError> {
        let hi = self.grid.floor_index(x)?;
        match self.members.range(..=hi).next_back() {
            Some(&i) => Ok(self.grid.point(i)),
            None => Err(PwlError::EmptyBracket(x)),
        }
    }

    /// `[x]⁺_K`: the smallest member `≥ x`.
    pub fn ceil(&self, x: f64) -> Result<f64, PwlError> {
        let lo = self.grid.ceil_index(x)?;
        match self.members.range(lo..).next() {
            Some(&i) => Ok(self.grid.point(i)),
            None => Err(PwlError::EmptyBracket(x)),
        }
    }

    /// `[x]⁺_{K ∪ {1}}`: ceiling over the set augmented with the right
    /// endpoint, which the update rules use before 1 becomes known.
    pub fn ceil_with_one(&self, x: f64) -> Result<f64, PwlError> {
        let lo = self.grid.ceil_index(x)?;
        match self.members.range(lo..).next() {
            Some(&i) => Ok(self.grid.point(i)),
            None => Ok(1.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pwl(points: &[(f64, f64)]) -> PiecewiseLinear {
        PiecewiseLinear::new(points.to_vec()).unwrap()
    }

    #[test]
    fn eval_midpoint_of_line() {
        let d = pwl(&[(0.0, 0.0), (1.0, 1.1)]);
        assert!((d.eval(0.5).unwrap() - 0.55).abs() < 1e-15);
    }

    #[test]
    fn eval_interpolates_between_breakpoints() {
        let d = pwl(&[(0.0, 0.0), (0.5, 1.0), (1.0, 1.0)]);
        assert!((d.eval(0.25).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn eval_initial_tax_left_endpoint() {
        // Initial applied tax {(0,0),(1,β+ε)} with β = 1, ε = 0.1.
        let d = pwl(&[(0.0, 0.0), (1.0, 1.1)]);
        assert_eq!(d.eval(0.0).unwrap(), 0.0);
        assert_eq!(d.eval(1.0).unwrap(), 1.1);
    }

    #[test]
    fn eval_rejects_out_of_domain() {
        let d = pwl(&[(0.0, 0.0), (1.0, 1.0)]);
        assert!(matches!(d.eval(-0.1), Err(PwlError::OutOfDomain(_))));
        assert!(matches!(d.eval(1.5), Err(PwlError::OutOfDomain(_))));
    }

    #[test]
    fn update_inserts_new_breakpoint() {
        let d = pwl(&[(0.0, 0.0), (1.0, 1.0)]).update(0.5, 0.2).unwrap();
        assert_eq!(d.points(), &[(0.0, 0.0), (0.5, 0.2), (1.0, 1.0)]);
    }

    #[test]
    fn update_replaces_existing_ordinate() {
        let d = pwl(&[(0.0, 0.0), (0.5, 0.2), (1.0, 1.0)])
            .update(0.5, 0.3)
            .unwrap();
        assert_eq!(d.eval(0.5).unwrap(), 0.3);
        assert_eq!(d.points().len(), 3);
    }

    #[test]
    fn update_reinserting_a_point_is_idempotent() {
        let d = pwl(&[(0.0, 0.0), (1.0, 1.0)]);
        let e = d.update(0.0, 0.0).unwrap();
        assert_eq!(d, e);
    }

    #[test]
    fn monotone_flag_rejects_decreasing_update() {
        let d = PiecewiseLinear::monotone(vec![(0.0, 0.0), (1.0, 1.0)]).unwrap();
        assert!(matches!(
            d.update(0.5, -0.1),
            Err(PwlError::MonotoneViolation(_))
        ));
        assert!(d.update(0.5, 0.5).is_ok());
    }

    #[test]
    fn grid_floor_ceil() {
        let g = Grid::new(4).unwrap();
        assert_eq!(g.floor(0.3).unwrap(), 0.25);
        assert_eq!(g.ceil(0.3).unwrap(), 0.5);
        assert_eq!(g.floor(0.25).unwrap(), 0.25);
        assert_eq!(g.ceil(0.25).unwrap(), 0.25);
    }

    #[test]
    fn grid_snaps_near_points() {
        let g = Grid::new(4).unwrap();
        let just_below = 0.25 - 1e-9;
        assert_eq!(g.floor(just_below).unwrap(), 0.25);
        assert_eq!(g.ceil(just_below).unwrap(), 0.25);
        assert_eq!(g.snap(0.3), 0.3);
    }

    #[test]
    fn known_set_floor_and_augmented_ceil() {
        let g = Grid::new(4).unwrap();
        let k = KnownIndexSet::new(g);
        // K = {0}: floor over K is 0; ceil over K ∪ {1} is 1.
        assert_eq!(k.floor(0.3).unwrap(), 0.0);
        assert_eq!(k.ceil_with_one(0.3).unwrap(), 1.0);
        assert!(matches!(k.ceil(0.3), Err(PwlError::EmptyBracket(_))));
    }

    #[test]
    fn known_set_insert_and_bracket() {
        let g = Grid::new(4).unwrap();
        let mut k = KnownIndexSet::new(g);
        k.insert_value(0.25).unwrap();
        k.insert_value(0.5).unwrap();
        assert_eq!(k.floor(0.3).unwrap(), 0.25);
        assert_eq!(k.ceil(0.3).unwrap(), 0.5);
        assert_eq!(k.len(), 3);
        assert!(k.insert_value(0.3).is_err());
    }

    #[test]
    fn clip_examples() {
        assert_eq!(clip(0.95, 0.0, 0.5).unwrap(), 0.5);
        assert_eq!(clip(0.3, 0.0, 0.5).unwrap(), 0.3);
        assert_eq!(clip(-1.0, 0.0, 0.5).unwrap(), 0.0);
        assert!(clip(0.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn integral_of_segments_is_exact() {
        // Rectangle + triangle: ∫₀¹ of {(0,0),(1,1)} is 0.5.
        let d = pwl(&[(0.0, 0.0), (1.0, 1.0)]);
        assert!((d.integral(1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((d.integral(0.5).unwrap() - 0.125).abs() < 1e-15);
        let c = PiecewiseLinear::constant(0.2);
        assert!((c.integral(0.7).unwrap() - 0.14).abs() < 1e-15);
    }

    #[test]
    fn add_linear_shifts_ordinates() {
        let d = pwl(&[(0.0, 0.0), (0.5, 0.2), (1.0, 1.0)]).add_linear(0.1);
        assert_eq!(d.points(), &[(0.0, 0.0), (0.5, 0.25), (1.0, 1.1)]);
    }

    #[test]
    fn csv_roundtrip_shape() {
        let d = pwl(&[(0.0, 0.0), (0.5, 0.2), (1.0, 1.0)]);
        let csv = d.to_csv();
        assert!(csv.starts_with("x,y\n"));
        assert_eq!(csv.lines().count(), 4);
    }

    proptest! {
        #[test]
        fn update_then_eval_returns_the_new_value(
            x in 0.0f64..=1.0,
            y in -2.0f64..2.0,
        ) {
            let d = pwl(&[(0.0, 0.0), (0.37, 0.5), (1.0, 1.0)]);
            let u = d.update(x, y).unwrap();
            prop_assert!((u.eval(x).unwrap() - y).abs() < 1e-12);
        }

        #[test]
        fn eval_exact_at_breakpoints(v in proptest::collection::vec(0.0f64..1.0, 3)) {
            let mut xs: Vec<f64> = v.clone();
            xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            xs.dedup();
            let mut points = vec![(0.0, 0.3)];
            for (i, x) in xs.iter().enumerate() {
                if *x > 0.0 && *x < 1.0 {
                    points.push((*x, i as f64));
                }
            }
            points.push((1.0, 9.0));
            let d = PiecewiseLinear::new(points.clone()).unwrap();
            for (x, y) in points {
                prop_assert_eq!(d.eval(x).unwrap(), y);
            }
        }

        #[test]
        fn monotone_breakpoints_give_monotone_eval(
            ys in proptest::collection::vec(0.0f64..1.0, 4),
            a in 0.0f64..=1.0,
            b in 0.0f64..=1.0,
        ) {
            let mut sorted = ys.clone();
            sorted.sort_by(|p, q| p.partial_cmp(q).unwrap());
            let d = PiecewiseLinear::monotone(vec![
                (0.0, sorted[0]),
                (0.25, sorted[1]),
                (0.75, sorted[2]),
                (1.0, sorted[3]),
            ]).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(d.eval(lo).unwrap() <= d.eval(hi).unwrap() + 1e-12);
        }

        #[test]
        fn grid_brackets_contain_x(k in 1u32..64, x in 0.0f64..=1.0) {
            let g = Grid::new(k).unwrap();
            let lo = g.floor(x).unwrap();
            let hi = g.ceil(x).unwrap();
            prop_assert!(lo <= x + g.spacing() * Grid::SNAP_REL);
            prop_assert!(hi >= x - g.spacing() * Grid::SNAP_REL);
            prop_assert!(g.snap_index(lo).is_some());
            prop_assert!(g.snap_index(hi).is_some());
        }
    }
}
