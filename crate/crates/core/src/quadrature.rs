//! Quadrature rules in barycentric coordinates; weights sum to one and are
//! scaled by the element measure at the call site.

use std::sync::OnceLock;

#[derive(Debug, Clone)]
pub struct TetRule {
    pub points: Vec<[f64; 4]>,
    pub weights: Vec<f64>,
    pub degree: u32,
}

#[derive(Debug, Clone)]
pub struct TriRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: u32,
}

/// Four-point rule, exact for quadratics.
pub fn tet_degree2() -> &'static TetRule {
    static RULE: OnceLock<TetRule> = OnceLock::new();
    RULE.get_or_init(|| {
        let a = (5.0 + 3.0 * 5f64.sqrt()) / 20.0;
        let b = (5.0 - 5f64.sqrt()) / 20.0;
        TetRule {
            points: perms_1_3(a, b),
            weights: vec![0.25; 4],
            degree: 2,
        }
    })
}

/// Keast's eleven-point rule, exact for quartics (one negative weight).
pub fn tet_degree4() -> &'static TetRule {
    static RULE: OnceLock<TetRule> = OnceLock::new();
    RULE.get_or_init(|| {
        let mut points = vec![[0.25; 4]];
        let mut weights = vec![-148.0 / 1875.0];
        for p in perms_1_3(11.0 / 14.0, 1.0 / 14.0) {
            points.push(p);
            weights.push(343.0 / 7500.0);
        }
        let s = (5.0f64 / 14.0).sqrt();
        let a = (1.0 + s) / 4.0;
        let b = (1.0 - s) / 4.0;
        for p in perms_2_2(a, b) {
            points.push(p);
            weights.push(56.0 / 375.0);
        }
        TetRule {
            points,
            weights,
            degree: 4,
        }
    })
}

/// Three interior points, exact for quadratics.
pub fn tri_degree2() -> &'static TriRule {
    static RULE: OnceLock<TriRule> = OnceLock::new();
    RULE.get_or_init(|| {
        let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
        TriRule {
            points: vec![[a, b, b], [b, a, b], [b, b, a]],
            weights: vec![1.0 / 3.0; 3],
            degree: 2,
        }
    })
}

/// Seven-point Dunavant rule, exact for quintics.
pub fn tri_degree5() -> &'static TriRule {
    static RULE: OnceLock<TriRule> = OnceLock::new();
    RULE.get_or_init(|| {
        let r = 15f64.sqrt();
        let a1 = (6.0 - r) / 21.0;
        let a2 = (6.0 + r) / 21.0;
        let w1 = (155.0 - r) / 1200.0;
        let w2 = (155.0 + r) / 1200.0;
        let mut points = vec![[1.0 / 3.0; 3]];
        let mut weights = vec![9.0 / 40.0];
        for (a, w) in [(a1, w1), (a2, w2)] {
            let c = 1.0 - 2.0 * a;
            points.extend([[c, a, a], [a, c, a], [a, a, c]]);
            weights.extend([w; 3]);
        }
        TriRule {
            points,
            weights,
            degree: 5,
        }
    })
}

fn perms_1_3(a: f64, b: f64) -> Vec<[f64; 4]> {
    vec![[a, b, b, b], [b, a, b, b], [b, b, a, b], [b, b, b, a]]
}

fn perms_2_2(a: f64, b: f64) -> Vec<[f64; 4]> {
    vec![
        [a, a, b, b],
        [a, b, a, b],
        [a, b, b, a],
        [b, a, a, b],
        [b, a, b, a],
        [b, b, a, a],
    ]
}

/// Map barycentric coordinates to a physical point.
#[inline]
pub fn tet_point(v: &[[f64; 3]; 4], l: &[f64; 4]) -> [f64; 3] {
    let mut x = [0.0; 3];
    for k in 0..4 {
        for d in 0..3 {
            x[d] += l[k] * v[k][d];
        }
    }
    x
}

#[inline]
pub fn tri_point(v: &[[f64; 3]; 3], l: &[f64; 3]) -> [f64; 3] {
    let mut x = [0.0; 3];
    for k in 0..3 {
        for d in 0..3 {
            x[d] += l[k] * v[k][d];
        }
    }
    x
}
