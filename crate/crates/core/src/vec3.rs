//! Small helpers for fixed-size 3-vectors stored as `[f64; 3]`.

pub type Vec3 = [f64; 3];

pub const ZERO: Vec3 = [0.0; 3];

#[inline]
pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// `a + s * b`
#[inline]
pub fn axpy(a: Vec3, s: f64, b: Vec3) -> Vec3 {
    [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]]
}

#[inline]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm_sq(a: Vec3) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn normalize(a: Vec3) -> Vec3 {
    scale(a, 1.0 / norm(a))
}

/// Component of `v` orthogonal to the unit vector `n`.
#[inline]
pub fn reject(v: Vec3, n: Vec3) -> Vec3 {
    axpy(v, -dot(v, n), n)
}

/// Unit vector along lattice axis `a` (0-based).
#[inline]
pub fn unit(a: usize) -> Vec3 {
    let mut e = ZERO;
    e[a] = 1.0;
    e
}

/// Row-major 3x3 matrix applied to a vector.
#[inline]
pub fn mat_vec(m: &[[f64; 3]; 3], v: Vec3) -> Vec3 {
    [dot(m[0], v), dot(m[1], v), dot(m[2], v)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_is_right_handed() {
        assert_eq!(cross(unit(0), unit(1)), unit(2));
        assert_eq!(cross(unit(1), unit(2)), unit(0));
        assert_eq!(cross(unit(2), unit(0)), unit(1));
    }

    #[test]
    fn reject_removes_normal_part() {
        let n = normalize([1.0, 2.0, 2.0]);
        let v = reject([0.3, -1.0, 4.0], n);
        assert!(dot(v, n).abs() < 1e-15);
    }
}
