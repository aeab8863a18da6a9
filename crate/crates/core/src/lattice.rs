//! Grid geometry, field containers and the forward-difference operators the
//! discrete energy is built from.
//!
//! Sites are stored x-fastest: site `(i, j, k)` lives at `i + n * (j + n * k)`.
//! The outermost shell holds Dirichlet values. Differences that step past the
//! far face read a ghost value equal to the boundary value, so a field is
//! effectively extended to all of space by its boundary value.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::vec3::{self, Vec3};

/// Target-sphere vacuum used unless a caller overrides it.
pub const DEFAULT_VACUUM: Vec3 = [0.0, 0.0, 1.0];

/// Tolerance for the unit-norm invariant of director fields.
pub const UNIT_NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSpec {
    pub n_points: usize,
    pub spacing: f64,
    /// Coordinates of site `(0, 0, 0)`.
    pub origin: Vec3,
}

impl LatticeSpec {
    pub fn new(n_points: usize, spacing: f64, origin: Vec3) -> Result<Self> {
        if n_points < 4 {
            return Err(invalid(format!("n_points must be >= 4, got {n_points}")));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(invalid(format!("spacing must be positive, got {spacing}")));
        }
        Ok(LatticeSpec { n_points, spacing, origin })
    }

    /// Cubic box centred on the origin.
    pub fn centered(n_points: usize, spacing: f64) -> Result<Self> {
        let half = 0.5 * (n_points as f64 - 1.0) * spacing;
        Self::new(n_points, spacing, [-half; 3])
    }

    /// Box of edge `edge` centred on the origin, with spacing `edge / (n - 1)`.
    pub fn with_edge(n_points: usize, edge: f64) -> Result<Self> {
        Self::centered(n_points, edge / (n_points as f64 - 1.0))
    }

    pub fn n(&self) -> usize {
        self.n_points
    }

    pub fn h(&self) -> f64 {
        self.spacing
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(3)
    }

    pub fn edge(&self) -> f64 {
        (self.n_points as f64 - 1.0) * self.spacing
    }

    pub fn num_sites(&self) -> usize {
        self.n_points.pow(3)
    }

    /// Index stride along axis `a` (0-based).
    #[inline]
    pub fn stride(&self, a: usize) -> usize {
        match a {
            0 => 1,
            1 => self.n_points,
            _ => self.n_points * self.n_points,
        }
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n_points * (j + self.n_points * k)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let n = self.n_points;
        [idx % n, (idx / n) % n, idx / (n * n)]
    }

    #[inline]
    pub fn position(&self, idx: usize) -> Vec3 {
        let c = self.coords(idx);
        [
            self.origin[0] + c[0] as f64 * self.spacing,
            self.origin[1] + c[1] as f64 * self.spacing,
            self.origin[2] + c[2] as f64 * self.spacing,
        ]
    }

    #[inline]
    pub fn is_boundary(&self, idx: usize) -> bool {
        let last = self.n_points - 1;
        self.coords(idx).iter().any(|&c| c == 0 || c == last)
    }

    /// Whether site `idx` has no forward neighbour along axis `a`.
    #[inline]
    pub fn on_far_face(&self, idx: usize, a: usize) -> bool {
        self.coords(idx)[a] == self.n_points - 1
    }

    pub fn check_len(&self, len: usize) -> Result<()> {
        if len != self.num_sites() {
            let found = (len as f64).cbrt().round() as usize;
            return Err(Error::ShapeMismatch { expected: self.n_points, found });
        }
        Ok(())
    }
}

/// Per-site 3-vectors: the common storage of every field on the lattice.
pub type SiteVectors = Vec<Vec3>;

/// The map into the unit sphere, with its value at infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectorField {
    spec: LatticeSpec,
    values: SiteVectors,
    vacuum: Vec3,
}

impl DirectorField {
    pub fn uniform(spec: LatticeSpec, vacuum: Vec3) -> Result<Self> {
        if (vec3::norm(vacuum) - 1.0).abs() > UNIT_NORM_TOL {
            return Err(invalid("vacuum must be a unit vector"));
        }
        Ok(DirectorField { spec, values: vec![vacuum; spec.num_sites()], vacuum })
    }

    /// Builds a field from raw values. Every value is renormalised and the
    /// boundary shell is overwritten with `vacuum`.
    pub fn from_values(spec: LatticeSpec, values: SiteVectors, vacuum: Vec3) -> Result<Self> {
        spec.check_len(values.len())?;
        let mut field = Self::uniform(spec, vacuum)?;
        field.values = values;
        field.enforce();
        for (idx, v) in field.values.iter().enumerate() {
            if !v.iter().all(|x| x.is_finite()) {
                return Err(Error::NonFinite { quantity: "director", site: spec.coords(idx) });
            }
        }
        Ok(field)
    }

    /// Loads values verbatim; used by checkpoint restore where bit-exactness matters.
    pub(crate) fn from_raw(spec: LatticeSpec, values: SiteVectors, vacuum: Vec3) -> Result<Self> {
        spec.check_len(values.len())?;
        Ok(DirectorField { spec, values, vacuum })
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn vacuum(&self) -> Vec3 {
        self.vacuum
    }

    pub fn values(&self) -> &[Vec3] {
        &self.values
    }

    /// Mutable access for callers that restore invariants afterwards via
    /// [`DirectorField::enforce`].
    pub fn values_mut(&mut self) -> &mut [Vec3] {
        &mut self.values
    }

    /// Renormalises every site and clamps the boundary shell to the vacuum.
    pub fn enforce(&mut self) {
        let spec = self.spec;
        let vacuum = self.vacuum;
        self.values.par_iter_mut().enumerate().for_each(|(idx, v)| {
            if spec.is_boundary(idx) {
                *v = vacuum;
            } else {
                *v = vec3::normalize(*v);
            }
        });
    }

    /// Applies a rotation of the target sphere to every value and to the vacuum.
    pub fn rotated(&self, rot: &[[f64; 3]; 3]) -> Self {
        DirectorField {
            spec: self.spec,
            values: self.values.iter().map(|&v| vec3::mat_vec(rot, v)).collect(),
            vacuum: vec3::mat_vec(rot, self.vacuum),
        }
    }

    /// Largest deviation of `|phi|` from one.
    pub fn max_norm_defect(&self) -> f64 {
        self.values.iter().map(|&v| (vec3::norm(v) - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn boundary_is_vacuum(&self, tol: f64) -> bool {
        self.values
            .iter()
            .enumerate()
            .filter(|(idx, _)| self.spec.is_boundary(*idx))
            .all(|(_, &v)| vec3::norm(vec3::sub(v, self.vacuum)) <= tol)
    }
}

/// The supercurrent one-form, one 3-vector `(C1, C2, C3)` per site.
#[derive(Debug, Clone, PartialEq)]
pub struct OneFormField {
    spec: LatticeSpec,
    values: SiteVectors,
}

impl OneFormField {
    pub fn zeros(spec: LatticeSpec) -> Self {
        OneFormField { spec, values: vec![vec3::ZERO; spec.num_sites()] }
    }

    /// Builds a field from raw values; the boundary shell is zeroed.
    pub fn from_values(spec: LatticeSpec, values: SiteVectors) -> Result<Self> {
        spec.check_len(values.len())?;
        let mut field = OneFormField { spec, values };
        field.enforce();
        Ok(field)
    }

    pub(crate) fn from_raw(spec: LatticeSpec, values: SiteVectors) -> Result<Self> {
        spec.check_len(values.len())?;
        Ok(OneFormField { spec, values })
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn values(&self) -> &[Vec3] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Vec3] {
        &mut self.values
    }

    pub fn enforce(&mut self) {
        let spec = self.spec;
        self.values.par_iter_mut().enumerate().for_each(|(idx, v)| {
            if spec.is_boundary(idx) {
                *v = vec3::ZERO;
            }
        });
    }
}

/// An antisymmetric two-form stored by its dual vector `(F23, F31, F12)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoFormField {
    spec: LatticeSpec,
    values: SiteVectors,
}

impl TwoFormField {
    pub fn zeros(spec: LatticeSpec) -> Self {
        TwoFormField { spec, values: vec![vec3::ZERO; spec.num_sites()] }
    }

    pub fn from_values(spec: LatticeSpec, values: SiteVectors) -> Result<Self> {
        spec.check_len(values.len())?;
        Ok(TwoFormField { spec, values })
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn values(&self) -> &[Vec3] {
        &self.values
    }

    pub fn into_values(self) -> SiteVectors {
        self.values
    }

    /// Pointwise `self + s * other`.
    pub fn axpy(&self, s: f64, other: &TwoFormField) -> Result<TwoFormField> {
        check_same(&self.spec, &other.spec)?;
        let values = self
            .values
            .par_iter()
            .zip(other.values.par_iter())
            .map(|(&a, &b)| vec3::axpy(a, s, b))
            .collect();
        Ok(TwoFormField { spec: self.spec, values })
    }
}

/// Anything stored as one 3-vector per site; lets [`l2_inner`] and
/// [`forward_diff`] accept every field kind.
pub trait SiteField {
    fn lattice(&self) -> &LatticeSpec;
    fn site_values(&self) -> &[Vec3];
    /// Value read by a difference that steps past the far boundary.
    fn ghost(&self) -> Vec3;
}

impl SiteField for DirectorField {
    fn lattice(&self) -> &LatticeSpec {
        &self.spec
    }
    fn site_values(&self) -> &[Vec3] {
        &self.values
    }
    fn ghost(&self) -> Vec3 {
        self.vacuum
    }
}

impl SiteField for OneFormField {
    fn lattice(&self) -> &LatticeSpec {
        &self.spec
    }
    fn site_values(&self) -> &[Vec3] {
        &self.values
    }
    fn ghost(&self) -> Vec3 {
        vec3::ZERO
    }
}

impl SiteField for TwoFormField {
    fn lattice(&self) -> &LatticeSpec {
        &self.spec
    }
    fn site_values(&self) -> &[Vec3] {
        &self.values
    }
    fn ghost(&self) -> Vec3 {
        vec3::ZERO
    }
}

fn check_same(a: &LatticeSpec, b: &LatticeSpec) -> Result<()> {
    if a.n_points != b.n_points {
        return Err(Error::ShapeMismatch { expected: a.n_points, found: b.n_points });
    }
    Ok(())
}

/// Forward difference of `values` along `axis` at site `idx`, reading `ghost`
/// past the far face.
#[inline]
pub(crate) fn diff_at(spec: &LatticeSpec, values: &[Vec3], ghost: Vec3, idx: usize, axis: usize) -> Vec3 {
    let next = if spec.on_far_face(idx, axis) { ghost } else { values[idx + spec.stride(axis)] };
    vec3::scale(vec3::sub(next, values[idx]), 1.0 / spec.spacing)
}

/// All three forward differences at one site.
#[inline]
pub(crate) fn jacobian_at(spec: &LatticeSpec, values: &[Vec3], ghost: Vec3, idx: usize) -> [Vec3; 3] {
    [
        diff_at(spec, values, ghost, idx, 0),
        diff_at(spec, values, ghost, idx, 1),
        diff_at(spec, values, ghost, idx, 2),
    ]
}

/// `(f(x + h e_axis) - f(x)) / h` at every site; `axis` is 1-based.
pub fn forward_diff<F: SiteField>(field: &F, axis: usize) -> Result<SiteVectors> {
    if !(1..=3).contains(&axis) {
        return Err(invalid(format!("axis must be in 1..=3, got {axis}")));
    }
    let spec = *field.lattice();
    let values = field.site_values();
    spec.check_len(values.len())?;
    let ghost = field.ghost();
    Ok((0..values.len())
        .into_par_iter()
        .map(|idx| diff_at(&spec, values, ghost, idx, axis - 1))
        .collect())
}

/// Dual components of `phi . (d_i phi x d_j phi)` given the site value and
/// its three forward differences.
#[inline]
pub(crate) fn pullback_at(phi: Vec3, d: &[Vec3; 3]) -> Vec3 {
    [
        vec3::dot(phi, vec3::cross(d[1], d[2])),
        vec3::dot(phi, vec3::cross(d[2], d[0])),
        vec3::dot(phi, vec3::cross(d[0], d[1])),
    ]
}

/// Dual components of `d_i C_j - d_j C_i`, i.e. the discrete curl.
#[inline]
pub(crate) fn curl_at(d: &[Vec3; 3]) -> Vec3 {
    [d[1][2] - d[2][1], d[2][0] - d[0][2], d[0][1] - d[1][0]]
}

/// Pull-back of the sphere's area form, `phi . (d_i phi x d_j phi)`.
pub fn pullback_two_form(phi: &DirectorField) -> TwoFormField {
    let spec = phi.spec;
    let values = (0..spec.num_sites())
        .into_par_iter()
        .map(|idx| pullback_at(phi.values[idx], &jacobian_at(&spec, &phi.values, phi.vacuum, idx)))
        .collect();
    TwoFormField { spec, values }
}

/// Exterior derivative of a one-form, with zero ghost values.
pub fn exterior_derivative(c: &OneFormField) -> TwoFormField {
    let spec = c.spec;
    let values = (0..spec.num_sites())
        .into_par_iter()
        .map(|idx| curl_at(&jacobian_at(&spec, &c.values, vec3::ZERO, idx)))
        .collect();
    TwoFormField { spec, values }
}

/// Sums `f(idx)` over all sites in a fixed order: each z-plane is summed
/// sequentially, then plane totals are added in plane order. The result is
/// independent of the thread count.
pub fn ordered_site_sum<F>(spec: &LatticeSpec, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let plane = spec.n_points * spec.n_points;
    let partials: Vec<f64> = (0..spec.n_points)
        .into_par_iter()
        .map(|k| (k * plane..(k + 1) * plane).map(&f).sum::<f64>())
        .collect();
    partials.iter().sum()
}

/// Discrete L2 inner product `sum_sites a . b * h^3`.
pub fn l2_inner<F: SiteField>(a: &F, b: &F) -> Result<f64> {
    check_same(a.lattice(), b.lattice())?;
    let spec = *a.lattice();
    let (av, bv) = (a.site_values(), b.site_values());
    spec.check_len(av.len())?;
    spec.check_len(bv.len())?;
    Ok(ordered_site_sum(&spec, |idx| vec3::dot(av[idx], bv[idx])) * spec.cell_volume())
}

/// Squared discrete L2 norm.
pub fn l2_norm_sq<F: SiteField>(a: &F) -> f64 {
    let spec = *a.lattice();
    let av = a.site_values();
    ordered_site_sum(&spec, |idx| vec3::norm_sq(av[idx])) * spec.cell_volume()
}
