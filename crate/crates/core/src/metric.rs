//! Finite metric spaces, their summary statistics and exhaustive verifiers.
//!
//! A [`MetricSpace`] is either a Euclidean point cloud or an explicit
//! distance matrix. Points are addressed by their index in `0..n`.

use crate::error::{invalid, Error, Result};

/// Absolute tolerance used by the invariant checkers.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;
/// Largest space accepted by [`verify_metric_axioms`] by default.
pub const DEFAULT_AXIOM_CAP: usize = 2000;
/// Largest explicit matrix accepted by [`MetricSpace::from_matrix`].
pub const MATRIX_CAP: usize = 20_000;

#[derive(Clone, Debug, PartialEq)]
enum Repr {
    Euclidean { dim: usize, coords: Vec<f64> },
    Explicit { matrix: Vec<f64> },
}

/// A finite metric space addressed by point ids `0..n`.
///
/// Immutable after construction, so it can be shared freely across threads.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricSpace {
    n: usize,
    repr: Repr,
}

/// A query against a space: either one of its own points or a free
/// coordinate vector (Euclidean spaces only).
#[derive(Clone, Copy, Debug)]
pub enum Query<'a> {
    Id(usize),
    Point(&'a [f64]),
}

impl MetricSpace {
    /// Euclidean space from rows of coordinates. All rows must share one
    /// dimension and hold finite values.
    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return invalid(format!(
                    "point {i} has dimension {}, expected {dim}",
                    p.len()
                ));
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(dim, coords)
    }

    /// Euclidean space from a row-major coordinate buffer.
    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 && !coords.is_empty() {
            return invalid("dimension must be positive");
        }
        if dim > 0 && !coords.len().is_multiple_of(dim) {
            return invalid("coordinate buffer is not a multiple of the dimension");
        }
        if let Some(v) = coords.iter().find(|v| !v.is_finite()) {
            return invalid(format!("non-finite coordinate {v}"));
        }
        let n = coords.len().checked_div(dim).unwrap_or(0);
        Ok(Self {
            n,
            repr: Repr::Euclidean { dim, coords },
        })
    }

    /// Explicit space from a square matrix of finite, non-negative values.
    ///
    /// Symmetry and the triangle inequality are not enforced here; see
    /// [`verify_metric_axioms`] and [`MetricSpace::check_symmetric`].
    pub fn from_matrix(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n > MATRIX_CAP {
            return Err(Error::SizeLimit {
                what: "distance matrix",
                got: n,
                limit: MATRIX_CAP,
            });
        }
        let mut matrix = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return invalid(format!(
                    "matrix row {i} has {} entries, expected {n}",
                    row.len()
                ));
            }
            for &v in row {
                if !v.is_finite() || v < 0.0 {
                    return invalid(format!(
                        "matrix entry {v} in row {i} is not a finite non-negative number"
                    ));
                }
            }
            matrix.extend_from_slice(row);
        }
        Ok(Self {
            n,
            repr: Repr::Explicit { matrix },
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(self.repr, Repr::Euclidean { .. })
    }

    /// Coordinate dimension, or `None` for explicit spaces.
    pub fn dim(&self) -> Option<usize> {
        match &self.repr {
            Repr::Euclidean { dim, .. } => Some(*dim),
            Repr::Explicit { .. } => None,
        }
    }

    /// Coordinates of point `a` (Euclidean spaces only).
    pub fn point(&self, a: usize) -> Option<&[f64]> {
        match &self.repr {
            Repr::Euclidean { dim, coords } if a < self.n => Some(&coords[a * dim..(a + 1) * dim]),
            _ => None,
        }
    }

    /// Distance between two ids. Panics on out-of-range ids; use
    /// [`MetricSpace::try_distance`] for checked access.
    #[inline]
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        match &self.repr {
            Repr::Euclidean { dim, coords } => euclidean(
                &coords[a * dim..(a + 1) * dim],
                &coords[b * dim..(b + 1) * dim],
            ),
            Repr::Explicit { matrix } => {
                assert!(a < self.n && b < self.n, "point id out of range");
                matrix[a * self.n + b]
            }
        }
    }

    pub fn try_distance(&self, a: usize, b: usize) -> Result<f64> {
        if a >= self.n || b >= self.n {
            return invalid(format!(
                "point id out of range: ({a}, {b}) with n = {}",
                self.n
            ));
        }
        Ok(self.distance(a, b))
    }

    /// Rejects queries that do not belong to this space.
    pub fn check_query(&self, q: Query<'_>) -> Result<()> {
        match (q, &self.repr) {
            (Query::Id(a), _) if a >= self.n => invalid(format!("query id {a} out of range")),
            (Query::Id(_), _) => Ok(()),
            (Query::Point(p), Repr::Euclidean { dim, .. }) if p.len() == *dim => Ok(()),
            (Query::Point(p), Repr::Euclidean { dim, .. }) => {
                invalid(format!("query has dimension {}, expected {dim}", p.len()))
            }
            (Query::Point(_), Repr::Explicit { .. }) => {
                invalid("coordinate queries need a Euclidean space; query by point id instead")
            }
        }
    }

    /// Distance from a query to point `b`. The query must pass
    /// [`MetricSpace::check_query`].
    #[inline]
    pub fn query_distance(&self, q: Query<'_>, b: usize) -> f64 {
        match q {
            Query::Id(a) => self.distance(a, b),
            Query::Point(p) => match &self.repr {
                Repr::Euclidean { dim, coords } => euclidean(p, &coords[b * dim..(b + 1) * dim]),
                Repr::Explicit { .. } => unreachable!("checked by check_query"),
            },
        }
    }

    /// Checks that an explicit matrix is symmetric with a zero diagonal.
    /// Euclidean spaces always pass.
    pub fn check_symmetric(&self, tol: f64) -> Result<()> {
        if let Repr::Explicit { matrix } = &self.repr {
            let n = self.n;
            for a in 0..n {
                if matrix[a * n + a].abs() > tol {
                    return invalid(format!("matrix diagonal entry {a} is non-zero"));
                }
                for b in a + 1..n {
                    if (matrix[a * n + b] - matrix[b * n + a]).abs() > tol {
                        return invalid(format!("matrix is asymmetric at ({a}, {b})"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Row-major dump of all pairwise distances.
    pub fn to_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|a| (0..self.n).map(|b| self.distance(a, b)).collect())
            .collect()
    }
}

/// L2 distance between two coordinate slices of equal length.
#[inline]
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Outcome of [`verify_metric_axioms`].
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct AxiomReport {
    pub symmetry_ok: bool,
    pub identity_ok: bool,
    pub triangle_ok: bool,
    /// Largest `d(x,z) - d(x,y) - d(y,z)` over all triples.
    pub worst_violation: f64,
}

impl AxiomReport {
    pub fn all_ok(&self) -> bool {
        self.symmetry_ok && self.identity_ok && self.triangle_ok
    }
}

/// Exhaustive check of symmetry, identity of indiscernibles and the
/// triangle inequality. Cubic in `n`, so spaces above `cap` are refused.
pub fn verify_metric_axioms(space: &MetricSpace, cap: usize, tol: f64) -> Result<AxiomReport> {
    let n = space.len();
    if n > cap {
        return Err(Error::SizeLimit {
            what: "metric space",
            got: n,
            limit: cap,
        });
    }
    let d = space.to_matrix();
    let mut symmetry_ok = true;
    let mut identity_ok = true;
    for a in 0..n {
        if d[a][a].abs() > tol {
            identity_ok = false;
        }
        for b in a + 1..n {
            if (d[a][b] - d[b][a]).abs() > tol {
                symmetry_ok = false;
            }
            if d[a][b] <= tol || d[b][a] <= tol {
                identity_ok = false;
            }
        }
    }
    let mut worst = if n == 0 { 0.0 } else { f64::NEG_INFINITY };
    for x in 0..n {
        for y in 0..n {
            let dxy = d[x][y];
            let row_y = &d[y];
            for (z, &dxz) in d[x].iter().enumerate() {
                let v = dxz - dxy - row_y[z];
                if v > worst {
                    worst = v;
                }
            }
        }
    }
    Ok(AxiomReport {
        symmetry_ok,
        identity_ok,
        triangle_ok: worst <= tol,
        worst_violation: worst,
    })
}

/// Summary statistics of a space with at least two points.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct MetricStats {
    pub n: usize,
    pub d_min: f64,
    pub diameter: f64,
    pub aspect_ratio: f64,
    pub expansion_constant: f64,
}

/// Smallest positive distance and largest distance over all pairs.
pub fn extent(space: &MetricSpace) -> Result<(f64, f64)> {
    let n = space.len();
    if n < 2 {
        return invalid("extent needs at least two points");
    }
    let mut d_min = f64::INFINITY;
    let mut diam: f64 = 0.0;
    for a in 0..n {
        for b in a + 1..n {
            let d = space.distance(a, b);
            if d > 0.0 && d < d_min {
                d_min = d;
            }
            diam = diam.max(d);
        }
    }
    if !d_min.is_finite() {
        return invalid("all points coincide");
    }
    Ok((d_min, diam))
}

pub fn stats(space: &MetricSpace) -> Result<MetricStats> {
    let (d_min, diameter) = extent(space)?;
    Ok(MetricStats {
        n: space.len(),
        d_min,
        diameter,
        aspect_ratio: diameter / d_min,
        expansion_constant: expansion_constant(space)?,
    })
}

/// Expansion constant `max(2, max |B(x,2r)| / |B(x,r)|)` over centers `x`
/// and radii `r` drawn from the realized pairwise distances. Balls are
/// closed.
pub fn expansion_constant(space: &MetricSpace) -> Result<f64> {
    let n = space.len();
    if n == 0 {
        return Err(Error::EmptyStructure(
            "expansion constant of an empty space".into(),
        ));
    }
    let mut radii: Vec<f64> = Vec::with_capacity(n * (n - 1) / 2);
    for a in 0..n {
        for b in a + 1..n {
            let d = space.distance(a, b);
            if d > 0.0 {
                radii.push(d);
            }
        }
    }
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    let mut best: f64 = 2.0;
    if radii.is_empty() {
        return Ok(best);
    }
    let mut row = vec![0.0; n];
    let mut breaks = Vec::with_capacity(2 * n);
    for x in 0..n {
        for (y, slot) in row.iter_mut().enumerate() {
            *slot = space.distance(x, y);
        }
        row.sort_by(f64::total_cmp);
        let ball = |r: f64| row.partition_point(|&d| d <= r);
        // Both ball sizes are step functions of r that only jump at d or d/2,
        // so the ratio is constant between consecutive breakpoints and one
        // realized radius per interval suffices.
        breaks.clear();
        breaks.push(0.0);
        for &d in &row {
            if d > 0.0 {
                breaks.push(d);
                breaks.push(d / 2.0);
            }
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        for &b in &breaks {
            let idx = radii.partition_point(|&r| r < b);
            if let Some(&r) = radii.get(idx) {
                let ratio = ball(2.0 * r) as f64 / ball(r) as f64;
                best = best.max(ratio);
            }
        }
    }
    Ok(best)
}

fn check_set(space: &MetricSpace, set: &[usize], name: &str) -> Result<()> {
    if set.is_empty() {
        return invalid(format!("{name} must be non-empty"));
    }
    if let Some(&a) = set.iter().find(|&&a| a >= space.len()) {
        return invalid(format!("{name} contains out-of-range id {a}"));
    }
    Ok(())
}

fn directed(space: &MetricSpace, from: &[usize], to: &[usize]) -> f64 {
    from.iter()
        .map(|&a| {
            to.iter()
                .map(|&b| space.distance(a, b))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Hausdorff distance between two non-empty id sets.
pub fn hausdorff(space: &MetricSpace, a: &[usize], b: &[usize]) -> Result<f64> {
    check_set(space, a, "first set")?;
    check_set(space, b, "second set")?;
    Ok(directed(space, a, b).max(directed(space, b, a)))
}

/// True iff every distinct pair of `set` is at distance at least `delta`.
pub fn is_delta_sparse(space: &MetricSpace, set: &[usize], delta: f64) -> bool {
    set.iter().enumerate().all(|(i, &a)| {
        set[i + 1..]
            .iter()
            .all(|&b| a == b || space.distance(a, b) >= delta)
    })
}
