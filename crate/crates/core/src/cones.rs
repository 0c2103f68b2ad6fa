//! Polyhedral cones `C = {α : Rα ≥ r}`, their boundary spaces
//! `M = {α : Rα = r}`, and projections under the norm `‖·‖_{V⁻¹}`.
//!
//! Cone projections are exact: every one of the `2^k` candidate active sets
//! is solved in closed form and the KKT-consistent candidate with the
//! smallest objective wins (ties go to the lexicographically smallest active
//! set).

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};

/// Largest number of constraint rows handled by active-set enumeration.
pub const MAX_CONSTRAINTS: usize = 20;
/// Candidate factorizations are cached up to this many rows.
const CACHE_LIMIT: usize = 10;
const RANK_TOL: f64 = 1e-10;
const DUAL_TOL: f64 = 1e-10;
const PRIMAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeKind {
    Nonnegative,
    Monotone,
    /// `α₁ + … + α_d ≤ bound`.
    SumBound,
    Custom,
}

/// Shapes produced by [`builtin_cone`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BuiltinCone {
    Nonnegative,
    /// `α₁ ≤ α₂ ≤ … ≤ α_d`.
    Monotone,
    /// `α₁ + … + α_d ≤ bound`.
    Sum { bound: f64 },
}

fn validate_rows(r: &Matrix, offset: &Vector, what: &str) -> Result<()> {
    let (k, d) = r.shape();
    if k == 0 || d == 0 {
        return Err(Error::input(format!("{what} needs at least one constraint row")));
    }
    if offset.len() != k {
        return Err(Error::input(format!(
            "{what}: offset has length {}, expected {k}",
            offset.len()
        )));
    }
    if !linalg::all_finite(r) || offset.iter().any(|v| !v.is_finite()) {
        return Err(Error::input(format!("{what} has non-finite entries")));
    }
    if k > d || linalg::rank(r, RANK_TOL) != k {
        return Err(Error::input(format!(
            "{what}: constraint matrix ({k}x{d}) must have full row rank"
        )));
    }
    Ok(())
}

/// `{α : Rα ≥ r}` with `R` of full row rank.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeSpec {
    r_mat: Matrix,
    offset: Vector,
    kind: ConeKind,
}

impl ConeSpec {
    pub fn new(r_mat: Matrix, offset: Vector, kind: ConeKind) -> Result<Self> {
        validate_rows(&r_mat, &offset, "cone")?;
        Ok(Self { r_mat, offset, kind })
    }

    pub fn r_mat(&self) -> &Matrix {
        &self.r_mat
    }

    pub fn offset(&self) -> &Vector {
        &self.offset
    }

    pub fn kind(&self) -> ConeKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.r_mat.ncols()
    }

    /// Number of constraint rows `k`.
    pub fn k(&self) -> usize {
        self.r_mat.nrows()
    }

    /// The binding face `{α : Rα = r}`.
    pub fn face(&self) -> LinearSpace {
        LinearSpace {
            r_mat: self.r_mat.clone(),
            offset: self.offset.clone(),
        }
    }

    /// Same rows with the origin as apex.
    pub fn centered(&self) -> Self {
        Self {
            r_mat: self.r_mat.clone(),
            offset: Vector::zeros(self.k()),
            kind: self.kind,
        }
    }

    pub fn contains(&self, alpha: &Vector, tol: f64) -> bool {
        let slack = &self.r_mat * alpha - &self.offset;
        slack.iter().all(|&s| s >= -tol)
    }

    /// Remove one constraint row, enlarging the cone.
    pub fn without_row(&self, row: usize) -> Result<Self> {
        if self.k() <= 1 || row >= self.k() {
            return Err(Error::input("cannot drop that constraint row"));
        }
        let keep: Vec<usize> = (0..self.k()).filter(|&i| i != row).collect();
        Self::new(
            linalg::select_rows(&self.r_mat, &keep),
            linalg::select(&self.offset, &keep),
            ConeKind::Custom,
        )
    }
}

/// `{α : Rα = r}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSpace {
    r_mat: Matrix,
    offset: Vector,
}

impl LinearSpace {
    pub fn new(r_mat: Matrix, offset: Vector) -> Result<Self> {
        validate_rows(&r_mat, &offset, "linear space")?;
        Ok(Self { r_mat, offset })
    }

    pub fn r_mat(&self) -> &Matrix {
        &self.r_mat
    }

    pub fn offset(&self) -> &Vector {
        &self.offset
    }

    pub fn dim(&self) -> usize {
        self.r_mat.ncols()
    }

    pub fn k(&self) -> usize {
        self.r_mat.nrows()
    }

    pub fn contains(&self, alpha: &Vector, tol: f64) -> bool {
        (&self.r_mat * alpha - &self.offset).amax() <= tol
    }
}

/// Built-in constraint shapes of dimension `d`, with their boundary space.
pub fn builtin_cone(shape: BuiltinCone, d: usize) -> Result<(ConeSpec, LinearSpace)> {
    if d == 0 {
        return Err(Error::input("cone dimension must be at least 1"));
    }
    let cone = match shape {
        BuiltinCone::Nonnegative => {
            ConeSpec::new(Matrix::identity(d, d), Vector::zeros(d), ConeKind::Nonnegative)?
        }
        BuiltinCone::Monotone => {
            if d < 2 {
                return Err(Error::input("monotone cone needs d >= 2"));
            }
            let r = Matrix::from_fn(d - 1, d, |i, j| {
                if j == i {
                    -1.0
                } else if j == i + 1 {
                    1.0
                } else {
                    0.0
                }
            });
            ConeSpec::new(r, Vector::zeros(d - 1), ConeKind::Monotone)?
        }
        BuiltinCone::Sum { bound } => ConeSpec::new(
            Matrix::from_element(1, d, -1.0),
            Vector::from_element(1, -bound),
            ConeKind::SumBound,
        )?,
    };
    let face = cone.face();
    Ok((cone, face))
}

/// Minimizer of `(y − η)ᵀV⁻¹(y − η)` over a region.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub point: Vector,
    pub value: f64,
    /// Constraint rows binding at the minimizer.
    pub active_set: Vec<usize>,
}

/// Closed convex regions that projections can target.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Cone(ConeSpec),
    Space(LinearSpace),
    /// All of `ℝ^d`.
    Whole(usize),
}

impl Region {
    pub fn dim(&self) -> usize {
        match self {
            Region::Cone(c) => c.dim(),
            Region::Space(m) => m.dim(),
            Region::Whole(d) => *d,
        }
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    rows: Vec<usize>,
    /// `V R_Sᵀ`.
    vrt: Matrix,
    /// `R_S V R_Sᵀ`.
    gram: Matrix,
    /// `(R_S V R_Sᵀ)⁻¹`.
    inv: Matrix,
}

fn prepare(v: &Matrix, r_mat: &Matrix, rows: Vec<usize>) -> Result<Candidate> {
    let rs = linalg::select_rows(r_mat, &rows);
    let vrt = v * rs.transpose();
    let gram = linalg::symmetrize(&(&rs * &vrt));
    let inv = linalg::spd_inverse(&gram, "R V Rᵀ").map_err(|_| {
        Error::degenerate("R V Rᵀ is singular; constraint rows must have full row rank")
    })?;
    Ok(Candidate { rows, vrt, gram, inv })
}

fn rows_of(mask: u32, k: usize) -> Vec<usize> {
    (0..k).filter(|&i| mask & (1 << i) != 0).collect()
}

/// Projection operator for a fixed `V` and region, with the per-active-set
/// factorizations computed once.
#[derive(Debug, Clone)]
pub struct Projector {
    region: Region,
    v: Matrix,
    cached: Vec<Candidate>,
}

impl Projector {
    pub fn new(v: &Matrix, region: &Region) -> Result<Self> {
        let d = region.dim();
        if v.shape() != (d, d) {
            return Err(Error::input(format!(
                "V is {}x{}, region has dimension {d}",
                v.nrows(),
                v.ncols()
            )));
        }
        linalg::require_pd(v, 0.0, "V")?;
        let mut cached = Vec::new();
        match region {
            Region::Whole(_) => {}
            Region::Space(m) => cached.push(prepare(v, m.r_mat(), (0..m.k()).collect())?),
            Region::Cone(c) => {
                if c.k() > MAX_CONSTRAINTS {
                    return Err(Error::Capability(format!(
                        "cone has {} constraint rows; exact projection supports at most {MAX_CONSTRAINTS}",
                        c.k()
                    )));
                }
                if c.k() <= CACHE_LIMIT {
                    for mask in 1u32..(1 << c.k()) {
                        cached.push(prepare(v, c.r_mat(), rows_of(mask, c.k()))?);
                    }
                }
            }
        }
        Ok(Self {
            region: region.clone(),
            v: v.clone(),
            cached,
        })
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn project(&self, y: &Vector) -> Result<Projection> {
        if y.len() != self.region.dim() {
            return Err(Error::input(format!(
                "point has length {}, expected {}",
                y.len(),
                self.region.dim()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("point contains non-finite values"));
        }
        match &self.region {
            Region::Whole(_) => Ok(Projection {
                point: y.clone(),
                value: 0.0,
                active_set: Vec::new(),
            }),
            Region::Space(m) => {
                let c = &self.cached[0];
                let (point, mult) = solve_candidate(c, m.r_mat(), m.offset(), y);
                Ok(Projection {
                    value: quad_value(c, &mult),
                    point,
                    active_set: c.rows.clone(),
                })
            }
            Region::Cone(cone) => self.project_cone(cone, y),
        }
    }

    fn project_cone(&self, cone: &ConeSpec, y: &Vector) -> Result<Projection> {
        let k = cone.k();
        let scale = 1.0 + y.amax() + cone.offset().amax();
        let slack = cone.r_mat() * y - cone.offset();
        let mut best: Option<Projection> = None;
        if slack.iter().all(|&s| s >= -PRIMAL_TOL * scale) {
            best = Some(Projection {
                point: y.clone(),
                value: 0.0,
                active_set: Vec::new(),
            });
        }
        let mut consider = |c: &Candidate| {
            let (point, mult) = solve_candidate(c, cone.r_mat(), cone.offset(), y);
            // η = y + V R_Sᵀ ν with ν = −mult must have ν ≥ 0.
            let dual_ok = mult.iter().all(|&m| -m >= -DUAL_TOL * (1.0 + mult.amax()));
            if !dual_ok {
                return;
            }
            let resid = cone.r_mat() * &point - cone.offset();
            if resid.iter().any(|&s| s < -PRIMAL_TOL * scale) {
                return;
            }
            let value = quad_value(c, &mult);
            let replace = match &best {
                None => true,
                Some(b) => {
                    let tie = 1e-12 * (1.0 + b.value.abs());
                    value < b.value - tie
                        || (value <= b.value + tie && c.rows < b.active_set)
                }
            };
            if replace {
                best = Some(Projection {
                    point,
                    value,
                    active_set: c.rows.clone(),
                });
            }
        };
        if self.cached.is_empty() && k > 0 {
            for mask in 1u32..(1 << k) {
                let c = prepare(&self.v, cone.r_mat(), rows_of(mask, k))?;
                consider(&c);
            }
        } else {
            for c in &self.cached {
                consider(c);
            }
        }
        best.ok_or_else(|| {
            Error::Internal(format!(
                "no KKT-consistent active set found for cone projection of {:?}",
                y.as_slice()
            ))
        })
    }
}

/// Returns `(η, μ)` with `μ = (R_S V R_Sᵀ)⁻¹(R_S y − r_S)` and `η = y − V R_Sᵀ μ`.
fn solve_candidate(c: &Candidate, r_mat: &Matrix, offset: &Vector, y: &Vector) -> (Vector, Vector) {
    let mut viol = Vector::zeros(c.rows.len());
    for (i, &row) in c.rows.iter().enumerate() {
        viol[i] = r_mat.row(row).transpose().dot(y) - offset[row];
    }
    let mult = &c.inv * viol;
    let point = y - &c.vrt * &mult;
    (point, mult)
}

fn quad_value(c: &Candidate, mult: &Vector) -> f64 {
    // (y − η)ᵀV⁻¹(y − η) = μᵀ(R_S V R_Sᵀ)μ.
    mult.dot(&(&c.gram * mult)).max(0.0)
}

/// Projection onto `M` under `‖·‖_{V⁻¹}`.
pub fn project_space(y: &Vector, v: &Matrix, space: &LinearSpace) -> Result<Projection> {
    Projector::new(v, &Region::Space(space.clone()))?.project(y)
}

/// Exact projection onto `C` under `‖·‖_{V⁻¹}`.
pub fn project_cone(y: &Vector, v: &Matrix, cone: &ConeSpec) -> Result<Projection> {
    Projector::new(v, &Region::Cone(cone.clone()))?.project(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn v2(a: f64, b: f64) -> Vector {
        Vector::from_vec(vec![a, b])
    }

    #[test]
    fn builtin_shapes() {
        let (c, _) = builtin_cone(BuiltinCone::Nonnegative, 2).unwrap();
        assert_eq!(c.r_mat(), &Matrix::identity(2, 2));
        assert_eq!(c.offset(), &Vector::zeros(2));
        let (m, _) = builtin_cone(BuiltinCone::Monotone, 3).unwrap();
        assert_eq!(
            m.r_mat(),
            &Matrix::from_row_slice(2, 3, &[-1.0, 1.0, 0.0, 0.0, -1.0, 1.0])
        );
        let (s, face) = builtin_cone(BuiltinCone::Sum { bound: -2.0 }, 2).unwrap();
        assert_eq!(s.r_mat(), &Matrix::from_row_slice(1, 2, &[-1.0, -1.0]));
        assert_eq!(s.offset()[0], 2.0);
        assert!(face.contains(&v2(-1.0, -1.0), 1e-15));
        assert!(builtin_cone(BuiltinCone::Monotone, 1).is_err());
    }

    #[test]
    fn rank_deficient_rows_rejected() {
        let r = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 2.0]);
        assert!(ConeSpec::new(r, Vector::zeros(2), ConeKind::Custom).is_err());
    }

    #[test]
    fn orthant_clipping_and_pooling() {
        let id = Matrix::identity(2, 2);
        let (orth, _) = builtin_cone(BuiltinCone::Nonnegative, 2).unwrap();
        let p = project_cone(&v2(-1.0, 2.0), &id, &orth).unwrap();
        assert!((p.point - v2(0.0, 2.0)).amax() < 1e-15);
        assert!((p.value - 1.0).abs() < 1e-15);
        assert_eq!(p.active_set, vec![0]);

        let (mono, face) = builtin_cone(BuiltinCone::Monotone, 2).unwrap();
        let p = project_cone(&v2(2.0, 1.0), &id, &mono).unwrap();
        assert!((p.point - v2(1.5, 1.5)).amax() < 1e-15);
        assert!((p.value - 0.5).abs() < 1e-15);

        let s = project_space(&v2(2.0, 0.0), &id, &face).unwrap();
        assert!((s.point - v2(1.0, 1.0)).amax() < 1e-15);
        assert!((s.value - 2.0).abs() < 1e-15);

        let inside = project_space(&v2(0.3, 0.3), &id, &face).unwrap();
        assert!(inside.value < 1e-30);
    }

    #[test]
    fn whole_space_is_identity() {
        let pr = Projector::new(&Matrix::identity(3, 3), &Region::Whole(3)).unwrap();
        let y = Vector::from_vec(vec![1.0, -2.0, 3.0]);
        let p = pr.project(&y).unwrap();
        assert_eq!(p.point, y);
        assert_eq!(p.value, 0.0);
    }

    #[test]
    fn capability_limit() {
        let d = 21;
        let cone = ConeSpec::new(Matrix::identity(d, d), Vector::zeros(d), ConeKind::Nonnegative).unwrap();
        assert!(matches!(
            Projector::new(&Matrix::identity(d, d), &Region::Cone(cone)),
            Err(Error::Capability(_))
        ));
    }
}
