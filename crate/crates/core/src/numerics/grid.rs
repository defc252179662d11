use super::NumericsError;

/// Minimum number of intervals a grid must have.
pub const MIN_INTERVALS: usize = 500;

/// Strictly increasing radial sample points starting just off the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialGrid {
    points: Vec<f64>,
}

impl RadialGrid {
    pub fn new(points: Vec<f64>) -> Result<Self, NumericsError> {
        if points.len() < MIN_INTERVALS + 1 {
            return Err(NumericsError::InvalidGrid(format!(
                "{} points, need at least {}",
                points.len(),
                MIN_INTERVALS + 1
            )));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(NumericsError::InvalidGrid("non-finite point".into()));
        }
        if let Some(w) = points.windows(2).position(|w| w[1] <= w[0]) {
            return Err(NumericsError::InvalidGrid(format!("not strictly increasing at index {}", w + 1)));
        }
        let (x_min, r_max) = (points[0], points[points.len() - 1]);
        if x_min <= 0.0 {
            return Err(NumericsError::InvalidGrid("x_min must be positive".into()));
        }
        if x_min > 1e-3 * r_max {
            return Err(NumericsError::InvalidGrid(format!("x_min = {x_min} exceeds 1e-3 R_max")));
        }
        Ok(Self { points })
    }

    /// `intervals + 1` equally spaced points on [x_min, r_max].
    pub fn uniform(x_min: f64, r_max: f64, intervals: usize) -> Result<Self, NumericsError> {
        let h = (r_max - x_min) / intervals as f64;
        let mut pts: Vec<f64> = (0..=intervals).map(|i| x_min + h * i as f64).collect();
        if let Some(last) = pts.last_mut() {
            *last = r_max;
        }
        Self::new(pts)
    }

    /// Geometric spacing from `x_min` up to `spacing`, then uniform steps of
    /// `spacing` to `r_max`. Resolves the power-law region near the origin
    /// without paying for a fine mesh everywhere.
    pub fn origin_refined(x_min: f64, r_max: f64, spacing: f64, per_decade: usize) -> Result<Self, NumericsError> {
        if !(x_min > 0.0 && spacing > x_min && r_max > spacing && per_decade > 0) {
            return Err(NumericsError::InvalidGrid(format!(
                "bad refined grid: x_min={x_min} spacing={spacing} r_max={r_max}"
            )));
        }
        let decades = (spacing / x_min).log10();
        let n_log = (decades * per_decade as f64).ceil().max(1.0) as usize;
        let ratio = (spacing / x_min).powf(1.0 / n_log as f64);
        let mut pts: Vec<f64> = (0..n_log).map(|i| x_min * ratio.powi(i as i32)).collect();
        let n_uni = ((r_max - spacing) / spacing).round().max(1.0) as usize;
        let h = (r_max - spacing) / n_uni as f64;
        pts.extend((0..=n_uni).map(|i| spacing + h * i as f64));
        if let Some(last) = pts.last_mut() {
            *last = r_max;
        }
        Self::new(pts)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn x_min(&self) -> f64 {
        self.points[0]
    }

    pub fn r_max(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    /// Index of the node nearest to `x` (clamped to the grid).
    pub fn nearest(&self, x: f64) -> usize {
        let i = self.points.partition_point(|&p| p < x);
        if i == 0 {
            0
        } else if i == self.points.len() {
            i - 1
        } else if (self.points[i] - x) < (x - self.points[i - 1]) {
            i
        } else {
            i - 1
        }
    }

    /// Index i with x_i ≤ x < x_{i+1}, clamped to a valid interval.
    pub fn interval(&self, x: f64) -> usize {
        let i = self.points.partition_point(|&p| p <= x);
        i.saturating_sub(1).min(self.points.len() - 2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(RadialGrid::uniform(1e-3, 40.0, 100).is_err());
        assert!(RadialGrid::uniform(1.0, 40.0, 1000).is_err());
        let mut p: Vec<f64> = (1..=600).map(|i| i as f64 * 0.01).collect();
        p[0] = 0.0;
        assert!(RadialGrid::new(p).is_err());
    }

    #[test]
    fn refined_grid_is_monotone_and_hits_ends() {
        let g = RadialGrid::origin_refined(1e-6, 40.0, 0.01, 20).unwrap();
        assert_eq!(g.x_min(), 1e-6);
        assert_eq!(g.r_max(), 40.0);
        let p = g.points();
        let i = g.nearest(0.01);
        assert!((p[i] - 0.01).abs() < 1e-12);
        assert!((p[i + 1] - p[i] - 0.01).abs() < 1e-9);
    }

    #[test]
    fn lookup() {
        let g = RadialGrid::uniform(0.01, 10.0, 999).unwrap();
        assert_eq!(g.nearest(0.0), 0);
        assert_eq!(g.nearest(1e9), 999);
        let i = g.interval(5.0);
        assert!(g.points()[i] <= 5.0 && 5.0 < g.points()[i + 1]);
        assert_eq!(g.interval(10.0), 998);
    }

    proptest! {
        #[test]
        fn refined_grid_is_increasing_and_nearest_is_closest(
            x_min in 1e-7f64..1e-3, r_max in 20.0f64..200.0, q in 0.0f64..1.0,
        ) {
            let g = RadialGrid::origin_refined(x_min, r_max, 0.02, 10).unwrap();
            let p = g.points();
            prop_assert!(p.windows(2).all(|w| w[1] > w[0]));
            prop_assert_eq!(p[0], x_min);
            prop_assert_eq!(*p.last().unwrap(), r_max);
            let x = x_min + q * (r_max - x_min);
            let i = g.nearest(x);
            let best = p.iter().map(|y| (y - x).abs()).fold(f64::INFINITY, f64::min);
            prop_assert_eq!((p[i] - x).abs(), best);
        }
    }
}
