//! Geometry in the upper half-space model.
//!
//! A word maps the standard ideal triple `(0, i, ∞)` to another boundary
//! triple; the geodesic plane through that triple, its hyperbolic distance
//! from the base plane, and the half-space nesting of successive images are
//! what drive the pruned enumeration of word classes.
//!
//! Circles and lines on the boundary are handled uniformly through their
//! inversive coordinates `(α, β, γ, δ)` (the coefficients of
//! `α|z|² + βx + γy + δ = 0`, normalised to `β² + γ² − 4αδ = 1`). The
//! bilinear form `⟨v, w⟩ = β₁β₂ + γ₁γ₂ − 2(α₁δ₂ + δ₁α₂)` equals `±cosh` of
//! the distance between disjoint planes and has modulus ≤ 1 when they meet.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};

use crate::exactalg::{big_to_f64, word_matrix, GaussInt, Mat2, Word};
use crate::{Error, Result};

/// `arccosh(3)`, the plane distance realised by the two-letter hyperbolic
/// words.
pub fn acosh3() -> f64 {
    3f64.acosh()
}

/// A point of the boundary sphere `C ∪ {∞}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundaryPoint {
    Finite(Complex64),
    Infinity,
}

impl BoundaryPoint {
    pub fn finite(re: f64, im: f64) -> Self {
        BoundaryPoint::Finite(Complex64::new(re, im))
    }
}

/// Three pairwise distinct boundary points spanning a geodesic plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdealTriple(pub [BoundaryPoint; 3]);

/// A geodesic plane, described by its boundary circle or line.
#[derive(Clone, Copy, Debug)]
pub enum Plane {
    Line {
        point: Complex64,
        direction: Complex64,
    },
    Circle {
        center: Complex64,
        radius: f64,
    },
}

/// The base plane spanned by `(0, i, ∞)`: the vertical plane over the
/// imaginary axis.
pub fn base_plane() -> Plane {
    Plane::Line {
        point: Complex64::new(0.0, 0.0),
        direction: Complex64::new(0.0, 1.0),
    }
}

fn ratio_to_f64(n: &BigInt, d: &BigInt) -> f64 {
    debug_assert!(!d.is_zero());
    let nf = n.to_f64().unwrap_or(f64::NAN);
    let df = d.to_f64().unwrap_or(f64::NAN);
    if nf.is_finite() && df.is_finite() && df != 0.0 {
        return nf / df;
    }
    // Align both operands to ~60 bits and divide; sign-safe arithmetic shift.
    let shift = (n.bits().max(d.bits()) as i64 - 60).max(0) as u64;
    let ns = big_to_f64(&(n >> shift));
    let ds = big_to_f64(&(d >> shift));
    ns / ds
}

fn gauss_ratio(num: &GaussInt, den: &GaussInt) -> Complex64 {
    let w = num * &den.conj();
    let q = den.norm_sqr();
    Complex64::new(ratio_to_f64(&w.re, &q), ratio_to_f64(&w.im, &q))
}

fn apply_exact(m: &Mat2, num: &GaussInt, den: &GaussInt) -> BoundaryPoint {
    // image of num/den under m, with the pole detected exactly
    let top = &(&m.a * num) + &(&m.b * den);
    let bottom = &(&m.c * num) + &(&m.d * den);
    if bottom.is_zero() {
        BoundaryPoint::Infinity
    } else {
        BoundaryPoint::Finite(gauss_ratio(&top, &bottom))
    }
}

/// Image of the standard triple `(0, i, ∞)` under the word's Möbius map.
/// Poles and the point at infinity are decided exactly on the Gaussian
/// integers.
pub fn image_triple(word: &Word) -> IdealTriple {
    let m = word_matrix(word);
    let zero = GaussInt::zero();
    let one = GaussInt::one();
    let i = GaussInt::new(0, 1);
    IdealTriple([
        apply_exact(&m, &zero, &one),
        apply_exact(&m, &i, &one),
        apply_exact(&m, &one, &zero),
    ])
}

/// Inversive coordinates of the circle/line through a triple, normalised to
/// `β² + γ² − 4αδ = 1`. `None` when the points are numerically coincident.
fn triple_vector(t: &IdealTriple) -> Option<[f64; 4]> {
    let finites: Vec<Complex64> = t
        .0
        .iter()
        .filter_map(|p| match p {
            BoundaryPoint::Finite(z) => Some(*z),
            BoundaryPoint::Infinity => None,
        })
        .collect();
    if finites.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return None;
    }
    let raw = match finites.len() {
        3 => {
            let [z1, z2, z3] = [finites[0], finites[1], finites[2]];
            let (s1, s2, s3) = (z1.norm_sqr(), z2.norm_sqr(), z3.norm_sqr());
            let det3 = |m: [[f64; 3]; 3]| -> f64 {
                m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                    - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                    + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
            };
            let alpha = det3([[z1.re, z1.im, 1.0], [z2.re, z2.im, 1.0], [z3.re, z3.im, 1.0]]);
            let beta = -det3([[s1, z1.im, 1.0], [s2, z2.im, 1.0], [s3, z3.im, 1.0]]);
            let gamma = det3([[s1, z1.re, 1.0], [s2, z2.re, 1.0], [s3, z3.re, 1.0]]);
            let delta = -det3([
                [s1, z1.re, z1.im],
                [s2, z2.re, z2.im],
                [s3, z3.re, z3.im],
            ]);
            [alpha, beta, gamma, delta]
        }
        2 => {
            // circle through ∞: the line through the two finite points
            let (z1, z2) = (finites[0], finites[1]);
            let beta = -(z2.im - z1.im);
            let gamma = z2.re - z1.re;
            let delta = -(beta * z1.re + gamma * z1.im);
            [0.0, beta, gamma, delta]
        }
        _ => return None, // two infinities: coincident points
    };
    let q = raw[1] * raw[1] + raw[2] * raw[2] - 4.0 * raw[0] * raw[3];
    let scale: f64 = finites
        .iter()
        .map(|z| z.norm_sqr())
        .fold(1.0f64, f64::max);
    if !(q > 1e-24 * scale * scale) {
        return None;
    }
    let inv = q.sqrt().recip();
    Some(raw.map(|x| x * inv))
}

fn plane_vector(p: &Plane) -> [f64; 4] {
    match *p {
        Plane::Circle { center, radius } => {
            let inv = (2.0 * radius).recip();
            [
                inv,
                -2.0 * center.re * inv,
                -2.0 * center.im * inv,
                (center.norm_sqr() - radius * radius) * inv,
            ]
        }
        Plane::Line { point, direction } => {
            let n = Complex64::new(-direction.im, direction.re) / direction.norm();
            [0.0, n.re, n.im, -(n.re * point.re + n.im * point.im)]
        }
    }
}

fn vector_to_plane(v: [f64; 4]) -> Plane {
    let [alpha, beta, gamma, delta] = v;
    if alpha.abs() < 1e-12 {
        let n = Complex64::new(beta, gamma);
        let n = n / n.norm();
        Plane::Line {
            point: -delta * n,
            direction: Complex64::new(-n.im, n.re),
        }
    } else {
        Plane::Circle {
            center: Complex64::new(-beta / (2.0 * alpha), -gamma / (2.0 * alpha)),
            radius: (2.0 * alpha.abs()).recip(),
        }
    }
}

/// The geodesic plane through three boundary points.
pub fn plane_through(t: &IdealTriple) -> Result<Plane> {
    triple_vector(t)
        .map(vector_to_plane)
        .ok_or(Error::DegenerateTriple)
}

/// Planes whose inversive product is within this margin of 1 are treated as
/// tangent (distance 0). Tangencies arise exactly (shared ideal points of
/// adjacent faces) but are evaluated in floating point; the margin must
/// swallow that noise. Genuine positive plane distances in this geometry are
/// bounded below by arccosh(3), so collapsing products below `1 + 1e-9` to
/// zero cannot misclassify a real gap.
const TANGENT_EPS: f64 = 1e-9;

fn distance_from_vectors(v: &[f64; 4], w: &[f64; 4]) -> f64 {
    let b = v[1] * w[1] + v[2] * w[2] - 2.0 * (v[0] * w[3] + v[3] * w[0]);
    let b = b.abs();
    if b <= 1.0 + TANGENT_EPS {
        0.0
    } else {
        (b + (b * b - 1.0).sqrt()).ln()
    }
}

/// Hyperbolic distance between two geodesic planes; 0 when they intersect,
/// are tangent, or share an ideal boundary point.
pub fn plane_distance(p1: &Plane, p2: &Plane) -> f64 {
    distance_from_vectors(&plane_vector(p1), &plane_vector(p2))
}

/// Distance from the base plane to the word's image plane.
pub fn word_plane_distance(word: &Word) -> f64 {
    match triple_vector(&image_triple(word)) {
        // base plane vector is (0, 1, 0, 0), so the product reduces to β
        Some(v) => {
            let b = v[1].abs();
            if b <= 1.0 + TANGENT_EPS {
                0.0
            } else {
                (b + (b * b - 1.0).sqrt()).ln()
            }
        }
        None => 0.0,
    }
}

/// Does the word map the open half-space on the positive-real side of the
/// base plane into itself?
///
/// Checked on the boundary: the image circle must lie in the closed right
/// half-plane and the image of a reference interior point must land inside
/// it.
pub fn halfspace_nested(word: &Word) -> bool {
    const EPS: f64 = 1e-9;
    let m = word_matrix(word);
    // reference points in {Re > 0}; at most one of them is the pole
    let one = GaussInt::one();
    let two = GaussInt::new(2, 0);
    let test = [
        apply_exact(&m, &one, &one),
        apply_exact(&m, &two, &one),
    ]
    .into_iter()
    .find_map(|p| match p {
        BoundaryPoint::Finite(z) => Some(z),
        BoundaryPoint::Infinity => None,
    });
    let plane = match plane_through(&image_triple(word)) {
        Ok(p) => p,
        Err(_) => return false,
    };
    match plane {
        Plane::Circle { center, radius } => {
            let Some(z) = test else {
                // image side contains ∞, i.e. the circle exterior
                return false;
            };
            center.re >= radius - EPS && (z - center).norm() < radius
        }
        Plane::Line { point, direction } => {
            // must be a vertical line x = x0 with x0 ≥ 0
            if direction.re.abs() > EPS * direction.norm() {
                return false;
            }
            let x0 = point.re;
            if x0 < -EPS {
                return false;
            }
            match test {
                Some(z) => z.re > x0 - EPS,
                // vertical half-plane side containing ∞ is fine either way
                // only if it is the right side; without a finite witness the
                // map fixed ∞ and 1 ↦ ∞ cannot happen (one pole), so this
                // branch is unreachable for genuine words
                None => false,
            }
        }
    }
}

/// Right-hand side constant of the length lower bound: the implicit equation
/// is `(cosh J − 1)(2J + arccosh 3) = 2·arccosh(3)·r`.
fn j_equation_lhs(j: f64) -> f64 {
    (j.cosh() - 1.0) * (2.0 * j + acosh3())
}

/// Lower bound `J(r)` on the translation length of hyperbolic words of
/// length `r`, the unique positive root of the implicit equation.
pub fn j_of_r(r: f64) -> f64 {
    assert!(r > 0.0 && r.is_finite(), "word length must be positive");
    let target = 2.0 * acosh3() * r;
    // seed bracket from the logarithmic asymptotics, then widen until it
    // actually brackets (the seed is too narrow for very small and very
    // large r)
    let mut lo = ((2.0 * r).ln() - 2.0).max(0.0);
    let mut hi = ((2.0 * r).ln() + 2.0).max(1.0);
    if j_equation_lhs(lo) - target > 0.0 {
        lo = 0.0;
    }
    while j_equation_lhs(hi) - target < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..90 {
        let mid = 0.5 * (lo + hi);
        if j_equation_lhs(mid) - target < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi.max(1.0) {
            break;
        }
    }
    // Newton polish
    let mut j = 0.5 * (lo + hi);
    for _ in 0..6 {
        let f = j_equation_lhs(j) - target;
        let df = j.sinh() * (2.0 * j + acosh3()) + 2.0 * (j.cosh() - 1.0);
        if df <= 0.0 {
            break;
        }
        let step = f / df;
        let next = j - step;
        if next > 0.0 {
            j = next;
        }
        if step.abs() <= 1e-16 * j.max(1.0) {
            break;
        }
    }
    j
}

/// Closed-form inverse of [`j_of_r`]: the word length at which the lower
/// bound reaches `j`.
pub fn r_of_j(j: f64) -> f64 {
    assert!(j >= 0.0, "length bound must be nonnegative");
    j_equation_lhs(j) / (2.0 * acosh3())
}

/// Fast path used by the enumerator: incremental normalised complex products
/// and the base-plane distance read off the inversive β coefficient.
pub(crate) mod fast {
    use super::*;
    use crate::exactalg::{letter_matrix, Letter};

    pub(crate) type CMat = [Complex64; 4];

    pub(crate) const C_IDENTITY: CMat = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(1.0, 0.0),
    ];

    pub(crate) fn letter_cmat(l: Letter) -> CMat {
        letter_matrix(l).to_complex()
    }

    /// Multiply and rescale so the largest entry has modulus 1; Möbius maps
    /// are scale-invariant, so this loses nothing and never overflows.
    pub(crate) fn mul_normalized(m: &CMat, g: &CMat) -> CMat {
        let p = [
            m[0] * g[0] + m[1] * g[2],
            m[0] * g[1] + m[1] * g[3],
            m[2] * g[0] + m[3] * g[2],
            m[2] * g[1] + m[3] * g[3],
        ];
        let norm = p
            .iter()
            .map(|z| z.re.abs().max(z.im.abs()))
            .fold(0.0f64, f64::max);
        if norm == 0.0 {
            return p;
        }
        let inv = norm.recip();
        [p[0] * inv, p[1] * inv, p[2] * inv, p[3] * inv]
    }

    fn apply(m: &CMat, num: Complex64, den: Complex64) -> BoundaryPoint {
        let top = m[0] * num + m[1] * den;
        let bottom = m[2] * num + m[3] * den;
        if bottom.norm() <= 1e-13 {
            BoundaryPoint::Infinity
        } else {
            BoundaryPoint::Finite(top / bottom)
        }
    }

    /// Distance from the base plane to the image plane of a normalised
    /// matrix. Degenerate readings collapse to 0, which can only make the
    /// prune more conservative.
    pub(crate) fn base_distance(m: &CMat) -> f64 {
        let triple = IdealTriple([
            apply(m, Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)),
            apply(m, Complex64::new(0.0, 1.0), Complex64::new(1.0, 0.0)),
            apply(m, Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)),
        ]);
        match triple_vector(&triple) {
            Some(v) => {
                let b = v[1].abs();
                if b <= 1.0 + TANGENT_EPS {
                    0.0
                } else {
                    (b + (b * b - 1.0).sqrt()).ln()
                }
            }
            None => 0.0,
        }
    }
}
