use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use super::nnls::least_distance;
use super::norm::Norm;
use crate::error::{check_len, invalid, Error, Result};
use crate::math;
use crate::solvers::lp::{LinearProgram, LpStatus, Relation};

const FW_TOL: f64 = 1e-14;
const FW_MAX_ITERS: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub enum SetShape {
    /// Just the bounding box.
    Box,
    /// `{x in the box : normals · x ≤ offsets}`; one halfspace per row of `normals`.
    Halfspaces { normals: DMatrix<f64>, offsets: DVector<f64> },
    /// Convex hull of the columns of `points`.
    Vertices { points: DMatrix<f64> },
}

/// A nonempty compact convex subset of `[0, 1]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexSet {
    shape: SetShape,
    lower: DVector<f64>,
    upper: DVector<f64>,
    downward_closed: bool,
}

impl ConvexSet {
    pub fn cube(d: usize) -> Self {
        Self {
            shape: SetShape::Box,
            lower: DVector::zeros(d),
            upper: DVector::from_element(d, 1.0),
            downward_closed: true,
        }
    }

    /// The box `[lower, upper]`, clipped to the unit cube.
    pub fn boxed(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self> {
        check_len(lower.len(), upper.len())?;
        let lower = lower.map(math::clamp01);
        let upper = upper.map(math::clamp01);
        if lower.iter().zip(upper.iter()).any(|(l, u)| l > u) {
            return Err(Error::EmptySet);
        }
        let downward_closed = lower.iter().all(|&l| l == 0.0);
        Ok(Self { shape: SetShape::Box, lower, upper, downward_closed })
    }

    /// `{x ∈ [0,1]^d : normals · x ≤ offsets}`.
    pub fn halfspaces(normals: DMatrix<f64>, offsets: DVector<f64>) -> Result<Self> {
        let d = normals.ncols();
        Self::halfspaces_in_box(normals, offsets, DVector::zeros(d), DVector::from_element(d, 1.0))
    }

    pub fn halfspaces_in_box(
        normals: DMatrix<f64>,
        offsets: DVector<f64>,
        lower: DVector<f64>,
        upper: DVector<f64>,
    ) -> Result<Self> {
        check_len(normals.nrows(), offsets.len())?;
        check_len(normals.ncols(), lower.len())?;
        let mut set = Self::boxed(lower, upper)?;
        if normals.iter().chain(offsets.iter()).any(|v| !v.is_finite()) {
            return Err(invalid("halfspace data must be finite"));
        }
        set.downward_closed &= normals.iter().all(|&a| a >= 0.0);
        set.shape = SetShape::Halfspaces { normals, offsets };
        if set.feasible_point().is_none() {
            return Err(Error::EmptySet);
        }
        Ok(set)
    }

    /// Convex hull of the columns of `points` (clipped to the unit cube).
    pub fn polytope(points: DMatrix<f64>) -> Result<Self> {
        if points.ncols() == 0 {
            return Err(Error::EmptySet);
        }
        let points = points.map(math::clamp01);
        let d = points.nrows();
        let lower = DVector::from_fn(d, |j, _| points.row(j).min());
        let upper = DVector::from_fn(d, |j, _| points.row(j).max());
        Ok(Self { shape: SetShape::Vertices { points }, lower, upper, downward_closed: false })
    }

    /// Declares (or revokes) downward-closedness, which `shrink` relies on.
    pub fn with_downward_closed(mut self, flag: bool) -> Self {
        self.downward_closed = flag;
        self
    }

    pub fn is_downward_closed(&self) -> bool {
        self.downward_closed
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn shape(&self) -> &SetShape {
        &self.shape
    }

    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &DVector<f64> {
        &self.upper
    }

    /// `max_{s ∈ S} θ·s`.
    pub fn support(&self, theta: &DVector<f64>) -> f64 {
        theta.dot(&self.support_point(theta))
    }

    /// A maximizer of `θ·s` over the set.
    pub fn support_point(&self, theta: &DVector<f64>) -> DVector<f64> {
        match &self.shape {
            SetShape::Box => self.box_support_point(theta),
            SetShape::Vertices { points } => {
                let best = math::argmax(points.column_iter().map(|c| c.dot(theta))).unwrap_or(0);
                points.column(best).into_owned()
            }
            SetShape::Halfspaces { .. } => {
                let mut lp = self.halfspace_lp(0);
                lp.maximize(theta.iter().copied().collect());
                match lp.solve() {
                    LpStatus::Optimal { x, .. } => DVector::from_vec(x),
                    // Nonempty and bounded by construction.
                    _ => self.box_support_point(theta),
                }
            }
        }
    }

    fn box_support_point(&self, theta: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.dim(), |j, _| if theta[j] > 0.0 { self.upper[j] } else { self.lower[j] })
    }

    /// LP over `(x, extra)` with `x ∈ S`; the first `d` variables are the point.
    fn halfspace_lp(&self, extra: usize) -> LinearProgram {
        let mut lp = LinearProgram::new(self.dim() + extra);
        self.push_membership(&mut lp, 0);
        lp
    }

    /// Adds `x ∈ S` for the `d` variables starting at `offset` (box or halfspace shapes).
    fn push_membership(&self, lp: &mut LinearProgram, offset: usize) {
        let d = self.dim();
        let total = lp.vars();
        if let SetShape::Halfspaces { normals, offsets } = &self.shape {
            for (k, a) in normals.row_iter().enumerate() {
                let mut row = vec![0.0; total];
                for j in 0..d {
                    row[offset + j] = a[j];
                }
                lp.constrain(row, Relation::Le, offsets[k]);
            }
        }
        push_box(lp, offset, &self.lower, &self.upper);
    }

    fn feasible_point(&self) -> Option<DVector<f64>> {
        match &self.shape {
            SetShape::Box => Some(self.lower.clone()),
            SetShape::Vertices { points } => Some(points.column(0).into_owned()),
            SetShape::Halfspaces { .. } => match self.halfspace_lp(0).solve() {
                LpStatus::Optimal { x, .. } => Some(DVector::from_vec(x)),
                _ => None,
            },
        }
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match &self.shape {
            SetShape::Vertices { .. } => self.distance(x, Norm::LInf) <= tol,
            SetShape::Box | SetShape::Halfspaces { .. } => {
                let in_box = (0..self.dim()).all(|j| x[j] >= self.lower[j] - tol && x[j] <= self.upper[j] + tol);
                in_box
                    && match &self.shape {
                        SetShape::Halfspaces { normals, offsets } => {
                            (normals * x).iter().zip(offsets.iter()).all(|(a, b)| *a <= b + tol)
                        }
                        _ => true,
                    }
            }
        }
    }

    /// Closest point of the set to `x` under `norm`.
    pub fn project(&self, x: &DVector<f64>, norm: Norm) -> DVector<f64> {
        match (&self.shape, norm) {
            // Clamping minimizes every coordinate gap at once, so it is optimal for all three norms.
            (SetShape::Box, _) => self.clamp(x),
            (SetShape::Halfspaces { .. }, Norm::L2) => self.project_halfspaces_l2(x),
            (SetShape::Vertices { points }, Norm::L2) => points * project_hull(points, x),
            _ => self.project_lp(x, norm),
        }
    }

    pub fn distance(&self, x: &DVector<f64>, norm: Norm) -> f64 {
        norm.of(&(x - self.project(x, norm)))
    }

    fn clamp(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.dim(), |j, _| x[j].clamp(self.lower[j], self.upper[j]))
    }

    fn project_halfspaces_l2(&self, x: &DVector<f64>) -> DVector<f64> {
        let SetShape::Halfspaces { normals, offsets } = &self.shape else { unreachable!() };
        if self.contains(x, 0.0) {
            return x.clone();
        }
        // Shift so that x is the origin: minimize ‖y‖ subject to G y ≤ h − G x.
        let d = self.dim();
        let k = normals.nrows();
        let mut g = DMatrix::zeros(k + 2 * d, d);
        let mut h = DVector::zeros(k + 2 * d);
        g.rows_mut(0, k).copy_from(normals);
        h.rows_mut(0, k).copy_from(offsets);
        for j in 0..d {
            g[(k + j, j)] = 1.0;
            h[k + j] = self.upper[j];
            g[(k + d + j, j)] = -1.0;
            h[k + d + j] = -self.lower[j];
        }
        let rhs = &h - &g * x;
        match least_distance(&g, &rhs) {
            Some(y) => self.polish(x + y),
            // Nonempty by construction; fall back to the exact LP route.
            None => self.project_lp(x, Norm::L2),
        }
    }

    /// Removes round-off outside the box.
    fn polish(&self, x: DVector<f64>) -> DVector<f64> {
        self.clamp(&x)
    }

    /// Exact projection for polyhedral norms via a linear program.
    fn project_lp(&self, x: &DVector<f64>, norm: Norm) -> DVector<f64> {
        match self.gap_lp(x, x, norm) {
            Some((_, _, point)) => self.polish(point),
            None => self.feasible_point().unwrap_or_else(|| self.lower.clone()),
        }
    }

    /// Minimizes `‖x − s‖` over `x ∈ [lo, hi]` and `s ∈ S` for a polyhedral norm.
    /// Returns the gap, the box point and the set point.
    fn gap_lp(
        &self,
        lo: &DVector<f64>,
        hi: &DVector<f64>,
        norm: Norm,
    ) -> Option<(f64, DVector<f64>, DVector<f64>)> {
        let d = self.dim();
        let point_vars = match &self.shape {
            SetShape::Vertices { points } => points.ncols(),
            _ => d,
        };
        let gaps = if norm == Norm::L1 { d } else { 1 };
        let (x_at, p_at, g_at) = (0, d, d + point_vars);
        let total = d + point_vars + gaps;
        let mut lp = LinearProgram::new(total);
        push_box(&mut lp, x_at, lo, hi);
        match &self.shape {
            SetShape::Vertices { .. } => {
                let mut ones = vec![0.0; total];
                ones[p_at..g_at].fill(1.0);
                lp.constrain(ones, Relation::Eq, 1.0);
            }
            _ => self.push_membership(&mut lp, p_at),
        }
        for j in 0..d {
            // ±(x_j − s_j) − gap ≤ 0
            let mut row = vec![0.0; total];
            row[x_at + j] = 1.0;
            match &self.shape {
                SetShape::Vertices { points } => {
                    for k in 0..point_vars {
                        row[p_at + k] = -points[(j, k)];
                    }
                }
                _ => row[p_at + j] = -1.0,
            }
            let gap = g_at + if norm == Norm::L1 { j } else { 0 };
            let mut neg: Vec<f64> = row.iter().map(|v| -v).collect();
            row[gap] = -1.0;
            neg[gap] = -1.0;
            lp.constrain(row, Relation::Le, 0.0);
            lp.constrain(neg, Relation::Le, 0.0);
        }
        let mut cost = vec![0.0; total];
        cost[g_at..].fill(-1.0);
        lp.maximize(cost);
        let LpStatus::Optimal { x: sol, value } = lp.solve() else { return None };
        let x = DVector::from_column_slice(&sol[x_at..p_at]);
        let point = match &self.shape {
            SetShape::Vertices { points } => points * DVector::from_column_slice(&sol[p_at..g_at]),
            _ => DVector::from_column_slice(&sol[p_at..g_at]),
        };
        Some((-value, x, point))
    }

    /// `{(1−ε) x : x ∈ S}`, defined for downward-closed sets.
    pub fn shrink(&self, eps: f64) -> Result<ConvexSet> {
        if !(0.0..=1.0).contains(&eps) {
            return Err(invalid(format!("shrink parameter {eps} outside [0, 1]")));
        }
        if !self.downward_closed {
            return Err(Error::Unsupported("shrinking a set that is not downward closed".into()));
        }
        let s = 1.0 - eps;
        let shape = match &self.shape {
            SetShape::Box => SetShape::Box,
            SetShape::Halfspaces { normals, offsets } => {
                SetShape::Halfspaces { normals: normals.clone(), offsets: offsets * s }
            }
            SetShape::Vertices { points } => SetShape::Vertices { points: points * s },
        };
        Ok(Self { shape, lower: &self.lower * s, upper: &self.upper * s, downward_closed: true })
    }

    /// `min dist(x, S)` over the box `[lo, hi]` under `norm`, with a minimizing box point.
    pub fn closest_in_box(&self, lo: &DVector<f64>, hi: &DVector<f64>, norm: Norm) -> (f64, DVector<f64>) {
        if let SetShape::Box = self.shape {
            // Coordinatewise interval gaps are simultaneously minimal, hence optimal for every norm.
            let x = DVector::from_fn(self.dim(), |j, _| {
                if hi[j] < self.lower[j] {
                    hi[j]
                } else if lo[j] > self.upper[j] {
                    lo[j]
                } else {
                    lo[j].max(self.lower[j])
                }
            });
            return (self.distance(&x, norm), x);
        }
        match norm {
            Norm::L2 => self.closest_in_box_l2(lo, hi),
            _ => match self.gap_lp(lo, hi, norm) {
                Some((gap, x, _)) => (gap.max(0.0), x),
                None => (f64::INFINITY, lo.clone()),
            },
        }
    }

    /// Alternating projections between the box and the set; converges to a closest pair.
    fn closest_in_box_l2(&self, lo: &DVector<f64>, hi: &DVector<f64>) -> (f64, DVector<f64>) {
        let clamp_box = |v: &DVector<f64>| DVector::from_fn(v.len(), |j, _| v[j].clamp(lo[j], hi[j]));
        let mut x = clamp_box(&((lo + hi) * 0.5));
        let mut s = self.project(&x, Norm::L2);
        for _ in 0..20_000 {
            let nx = clamp_box(&s);
            let ns = self.project(&nx, Norm::L2);
            let moved = math::norm2(&(&nx - &x)) + math::norm2(&(&ns - &s));
            x = nx;
            s = ns;
            if moved < 1e-14 {
                break;
            }
        }
        (math::norm2(&(&x - s)), x)
    }
}

/// `lo ≤ x ≤ hi` for the variables starting at `offset`.
fn push_box(lp: &mut LinearProgram, offset: usize, lo: &DVector<f64>, hi: &DVector<f64>) {
    let total = lp.vars();
    for j in 0..lo.len() {
        let mut e = vec![0.0; total];
        e[offset + j] = 1.0;
        lp.constrain(e.clone(), Relation::Le, hi[j]);
        if lo[j] > 0.0 {
            lp.constrain(e, Relation::Ge, lo[j]);
        }
    }
}

/// Hull weights of the Euclidean projection of `x` onto `conv(points)` (away-step Frank-Wolfe).
fn project_hull(points: &DMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    let k = points.ncols();
    let start = math::argmin(points.column_iter().map(|c| (c - x).norm_squared())).unwrap_or(0);
    let mut weights = DVector::zeros(k);
    weights[start] = 1.0;
    let mut y: DVector<f64> = points.column(start).into_owned();
    for _ in 0..FW_MAX_ITERS {
        let grad = &y - x;
        let scores: Vec<f64> = points.column_iter().map(|c| c.dot(&grad)).collect();
        let gy = grad.dot(&y);
        let toward = math::argmin(scores.iter().copied()).unwrap_or(0);
        let fw_gap = gy - scores[toward];
        if fw_gap <= FW_TOL {
            break;
        }
        let away = (0..k)
            .filter(|&i| weights[i] > 0.0)
            .max_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(b.cmp(&a)))
            .unwrap_or(toward);
        let away_gap = scores[away] - gy;
        let (dir, max_step, is_away) = if fw_gap >= away_gap {
            (points.column(toward) - &y, 1.0, false)
        } else {
            let wa = weights[away];
            (&y - points.column(away), wa / (1.0 - wa), true)
        };
        let dd = dir.norm_squared();
        if dd <= 0.0 {
            break;
        }
        let step = (-grad.dot(&dir) / dd).clamp(0.0, max_step);
        if is_away {
            weights *= 1.0 + step;
            weights[away] -= step;
            if step >= max_step {
                weights[away] = 0.0;
            }
        } else {
            weights *= 1.0 - step;
            weights[toward] += step;
        }
        y += dir * step;
    }
    weights
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    fn triangle() -> ConvexSet {
        ConvexSet::polytope(dmatrix![0.0, 1.0, 0.0; 0.0, 0.0, 1.0]).unwrap()
    }

    #[test]
    fn box_support() {
        assert_eq!(ConvexSet::cube(2).support(&dvector![1.0, -1.0]), 1.0);
    }

    #[test]
    fn vertex_support() {
        assert_eq!(triangle().support(&dvector![2.0, 1.0]), 2.0);
    }

    #[test]
    fn halfspace_support_matches_vertices() {
        let hs = ConvexSet::halfspaces(dmatrix![1.0, 1.0], dvector![1.0]).unwrap();
        for theta in [dvector![2.0, 1.0], dvector![-1.0, 3.0], dvector![-1.0, -1.0]] {
            assert!((hs.support(&theta) - triangle().support(&theta)).abs() < 1e-12);
        }
    }

    #[test]
    fn halfspace_clip_1d() {
        let s = ConvexSet::halfspaces(dmatrix![1.0], dvector![0.5]).unwrap();
        let p = s.project(&dvector![0.8], Norm::L2);
        assert!((p[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn triangle_projection() {
        let p = triangle().project(&dvector![1.0, 1.0], Norm::L2);
        assert!((p - dvector![0.5, 0.5]).norm() < 1e-6);
        assert!((triangle().distance(&dvector![1.0, 1.0], Norm::L2) - libm::sqrt(0.5)).abs() < 1e-6);
        let hs = ConvexSet::halfspaces(dmatrix![1.0, 1.0], dvector![1.0]).unwrap();
        assert!((hs.project(&dvector![1.0, 1.0], Norm::L2) - dvector![0.5, 0.5]).norm() < 1e-12);
    }

    #[test]
    fn polyhedral_norm_projection() {
        let hs = ConvexSet::halfspaces(dmatrix![1.0, 1.0], dvector![1.0]).unwrap();
        let x = dvector![1.0, 0.6];
        assert!((hs.distance(&x, Norm::LInf) - 0.3).abs() < 1e-12);
        assert!((hs.distance(&x, Norm::L1) - 0.6).abs() < 1e-12);
        assert!((triangle().distance(&x, Norm::LInf) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn projection_is_idempotent_inside() {
        let x = dvector![0.2, 0.3];
        assert_eq!(ConvexSet::cube(2).project(&x, Norm::L2), x);
        assert!((triangle().project(&x, Norm::L2) - &x).norm() < 1e-9);
    }

    #[test]
    fn halfspace_distance_closed_form() {
        let a = dvector![0.6, 0.8];
        let s = ConvexSet::halfspaces(dmatrix![0.6, 0.8], dvector![0.5]).unwrap();
        let x = dvector![0.9, 0.7];
        let expected = (a.dot(&x) - 0.5f64).max(0.0);
        assert!((s.distance(&x, Norm::L2) - expected).abs() < 1e-12);
    }

    #[test]
    fn shrink_examples() {
        let b = ConvexSet::boxed(dvector![0.0, 0.0], dvector![0.5, 0.5]).unwrap();
        assert_eq!(b.shrink(0.0).unwrap(), b);
        assert_eq!(b.shrink(0.1).unwrap().upper(), &dvector![0.45, 0.45]);
        let hs = ConvexSet::halfspaces(dmatrix![1.0, 1.0], dvector![1.0]).unwrap();
        let shrunk = hs.shrink(0.5).unwrap();
        assert!((shrunk.support(&dvector![1.0, 1.0]) - 0.5).abs() < 1e-12);
        assert!(triangle().shrink(0.1).is_err());
        assert!(triangle().with_downward_closed(true).shrink(0.1).is_ok());
    }

    #[test]
    fn empty_halfspaces_rejected() {
        assert_eq!(
            ConvexSet::halfspaces(dmatrix![-1.0, -1.0], dvector![-3.0]),
            Err(Error::EmptySet)
        );
    }

    #[test]
    fn distance_between_box_and_set() {
        let s = ConvexSet::halfspaces(dmatrix![1.0, 1.0], dvector![0.5]).unwrap();
        let (lo, hi) = (dvector![0.5, 0.5], dvector![1.0, 1.0]);
        let (d, x) = s.closest_in_box(&lo, &hi, Norm::L2);
        assert!((d - 0.5 / libm::sqrt(2.0)).abs() < 1e-9);
        assert!((x - &lo).norm() < 1e-9);
        assert!((s.closest_in_box(&lo, &hi, Norm::LInf).0 - 0.25).abs() < 1e-12);
        assert!((s.closest_in_box(&lo, &hi, Norm::L1).0 - 0.5).abs() < 1e-12);
        assert!(s.closest_in_box(&dvector![0.1, 0.1], &hi, Norm::L2).0 < 1e-12);
    }
}
