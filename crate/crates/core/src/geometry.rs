//! Small fixed-size geometry on `[f64; 3]` points.

pub type Point = [f64; 3];

#[inline]
pub fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: &Point, b: &Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(a: &Point, s: f64) -> Point {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: &Point, b: &Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm(a: &Point) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist(a: &Point, b: &Point) -> f64 {
    norm(&sub(a, b))
}

#[inline]
pub fn midpoint(a: &Point, b: &Point) -> Point {
    [
        0.5 * (a[0] + b[0]),
        0.5 * (a[1] + b[1]),
        0.5 * (a[2] + b[2]),
    ]
}

/// Six times the signed volume of `(a, b, c, d)`.
#[inline]
pub fn det6(a: &Point, b: &Point, c: &Point, d: &Point) -> f64 {
    dot(&sub(b, a), &cross(&sub(c, a), &sub(d, a)))
}

pub fn signed_volume(a: &Point, b: &Point, c: &Point, d: &Point) -> f64 {
    det6(a, b, c, d) / 6.0
}

pub fn barycenter(pts: &[Point]) -> Point {
    let n = pts.len() as f64;
    let mut s = [0.0; 3];
    for p in pts {
        s = add(&s, p);
    }
    scale(&s, 1.0 / n)
}

/// Local vertex pairs of the six tetrahedron edges.
pub const TET_EDGES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Local faces; face `i` is opposite vertex `i`.
pub const TET_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

/// Element diameter: longest edge.
pub fn diameter(pts: &[Point]) -> f64 {
    let mut h: f64 = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            h = h.max(dist(&pts[i], &pts[j]));
        }
    }
    h
}

pub fn triangle_area(a: &Point, b: &Point, c: &Point) -> f64 {
    0.5 * norm(&cross(&sub(b, a), &sub(c, a)))
}

/// Gradients of the four P1 barycentric basis functions of a tetrahedron
/// together with its signed volume.
pub fn p1_gradients(v: &[Point; 4]) -> ([Point; 4], f64) {
    let e1 = sub(&v[1], &v[0]);
    let e2 = sub(&v[2], &v[0]);
    let e3 = sub(&v[3], &v[0]);
    let det = dot(&e1, &cross(&e2, &e3));
    // rows of the inverse Jacobian transpose
    let g1 = scale(&cross(&e2, &e3), 1.0 / det);
    let g2 = scale(&cross(&e3, &e1), 1.0 / det);
    let g3 = scale(&cross(&e1, &e2), 1.0 / det);
    let g0 = scale(&add(&add(&g1, &g2), &g3), -1.0);
    ([g0, g1, g2, g3], det / 6.0)
}

/// Axis-aligned box, used for region predicates and the computational domain.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Aabb {
    pub min: Point,
    pub max: Point,
}

impl Aabb {
    pub fn new(min: Point, max: Point) -> Self {
        Self { min, max }
    }

    /// Centered cube `[-r, r]^3`.
    pub fn cube(r: f64) -> Self {
        Self::new([-r; 3], [r; 3])
    }

    /// Strict interior membership.
    pub fn contains_open(&self, x: &Point) -> bool {
        (0..3).all(|i| x[i] > self.min[i] && x[i] < self.max[i])
    }

    pub fn contains_closed(&self, x: &Point, tol: f64) -> bool {
        (0..3).all(|i| x[i] >= self.min[i] - tol && x[i] <= self.max[i] + tol)
    }

    pub fn extent(&self) -> Point {
        sub(&self.max, &self.min)
    }

    pub fn volume(&self) -> f64 {
        let e = self.extent();
        e[0] * e[1] * e[2]
    }

    /// Whether `x` lies on the boundary of the box (within `tol`).
    pub fn on_boundary(&self, x: &Point, tol: f64) -> bool {
        self.contains_closed(x, tol)
            && (0..3).any(|i| (x[i] - self.min[i]).abs() <= tol || (x[i] - self.max[i]).abs() <= tol)
    }
}
