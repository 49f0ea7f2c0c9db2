//! Small helpers for 3-vectors stored as `[f64; 3]`.

#[inline]
pub fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm_sq(a: [f64; 3]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: [f64; 3]) -> f64 {
    norm_sq(a).sqrt()
}
