//! Exact arithmetic for the nine gluing isometries.
//!
//! The gluing moves of the octahedral complex are Möbius transformations with
//! Gaussian-integer matrix entries. Everything here is computed exactly in
//! `SL(2, Z[i])`; floating point only enters when a translation length is
//! finally evaluated from an exact trace.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// Gaussian integer `re + im·i` with arbitrary-precision components.
///
/// Word products grow exponentially in the word length, so the public type is
/// backed by big integers. Products of up to 40 letters stay on an internal
/// 128-bit fast path (checked, promoted on overflow).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GaussInt {
    pub re: BigInt,
    pub im: BigInt,
}

impl GaussInt {
    pub fn new(re: i64, im: i64) -> Self {
        GaussInt {
            re: BigInt::from(re),
            im: BigInt::from(im),
        }
    }

    pub fn zero() -> Self {
        GaussInt::new(0, 0)
    }

    pub fn one() -> Self {
        GaussInt::new(1, 0)
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    /// Multiplication by `i` (rotation by a quarter turn).
    pub fn times_i(&self) -> Self {
        GaussInt {
            re: -self.im.clone(),
            im: self.re.clone(),
        }
    }

    pub fn conj(&self) -> Self {
        GaussInt {
            re: self.re.clone(),
            im: -self.im.clone(),
        }
    }

    /// Squared modulus `re² + im²`.
    pub fn norm_sqr(&self) -> BigInt {
        &self.re * &self.re + &self.im * &self.im
    }

    /// Nearest-f64 complex value; overflows saturate to signed infinity.
    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(big_to_f64(&self.re), big_to_f64(&self.im))
    }
}

pub(crate) fn big_to_f64(x: &BigInt) -> f64 {
    x.to_f64().unwrap_or(if x.is_negative() {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    })
}

impl Add for &GaussInt {
    type Output = GaussInt;
    fn add(self, rhs: &GaussInt) -> GaussInt {
        GaussInt {
            re: &self.re + &rhs.re,
            im: &self.im + &rhs.im,
        }
    }
}

impl Sub for &GaussInt {
    type Output = GaussInt;
    fn sub(self, rhs: &GaussInt) -> GaussInt {
        GaussInt {
            re: &self.re - &rhs.re,
            im: &self.im - &rhs.im,
        }
    }
}

impl Mul for &GaussInt {
    type Output = GaussInt;
    fn mul(self, rhs: &GaussInt) -> GaussInt {
        GaussInt {
            re: &self.re * &rhs.re - &self.im * &rhs.im,
            im: &self.re * &rhs.im + &self.im * &rhs.re,
        }
    }
}

impl Neg for &GaussInt {
    type Output = GaussInt;
    fn neg(self) -> GaussInt {
        GaussInt {
            re: -self.re.clone(),
            im: -self.im.clone(),
        }
    }
}

impl fmt::Display for GaussInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            return write!(f, "{}", self.re);
        }
        let im_part = if self.im == BigInt::one() {
            "i".to_string()
        } else if self.im == -BigInt::one() {
            "-i".to_string()
        } else {
            format!("{}i", self.im)
        };
        if self.re.is_zero() {
            write!(f, "{im_part}")
        } else if self.im.is_negative() {
            write!(f, "{}{}", self.re, im_part)
        } else {
            write!(f, "{}+{}", self.re, im_part)
        }
    }
}

/// Row-major 2×2 matrix over the Gaussian integers, determinant 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mat2 {
    pub a: GaussInt,
    pub b: GaussInt,
    pub c: GaussInt,
    pub d: GaussInt,
}

impl Mat2 {
    pub fn identity() -> Self {
        Mat2 {
            a: GaussInt::one(),
            b: GaussInt::zero(),
            c: GaussInt::zero(),
            d: GaussInt::one(),
        }
    }

    fn from_i64(rows: [[(i64, i64); 2]; 2]) -> Self {
        Mat2 {
            a: GaussInt::new(rows[0][0].0, rows[0][0].1),
            b: GaussInt::new(rows[0][1].0, rows[0][1].1),
            c: GaussInt::new(rows[1][0].0, rows[1][0].1),
            d: GaussInt::new(rows[1][1].0, rows[1][1].1),
        }
    }

    pub fn mul(&self, rhs: &Mat2) -> Mat2 {
        Mat2 {
            a: &(&self.a * &rhs.a) + &(&self.b * &rhs.c),
            b: &(&self.a * &rhs.b) + &(&self.b * &rhs.d),
            c: &(&self.c * &rhs.a) + &(&self.d * &rhs.c),
            d: &(&self.c * &rhs.b) + &(&self.d * &rhs.d),
        }
    }

    pub fn det(&self) -> GaussInt {
        &(&self.a * &self.d) - &(&self.b * &self.c)
    }

    pub fn is_plus_minus_identity(&self) -> bool {
        let id = Mat2::identity();
        *self == id
            || (self.a == -&id.a && self.d == -&id.d && self.b.is_zero() && self.c.is_zero())
    }

    pub fn to_complex(&self) -> [Complex64; 4] {
        [
            self.a.to_complex(),
            self.b.to_complex(),
            self.c.to_complex(),
            self.d.to_complex(),
        ]
    }
}

/// Sum of the diagonal entries.
pub fn trace(m: &Mat2) -> GaussInt {
    &m.a + &m.d
}

/// Turning direction at an octahedron: straight, right or left.
///
/// The declaration order fixes the canonical letter order `S < R < L`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    S,
    R,
    L,
}

impl Direction {
    pub const ALL: [Direction; 3] = [Direction::S, Direction::R, Direction::L];

    /// Position in the coordinate-change cycle `(R S L)`.
    fn cycle_pos(self) -> u8 {
        match self {
            Direction::R => 0,
            Direction::S => 1,
            Direction::L => 2,
        }
    }

    fn from_cycle_pos(pos: u8) -> Self {
        match pos % 3 {
            0 => Direction::R,
            1 => Direction::S,
            _ => Direction::L,
        }
    }

    /// Advance `steps` times along the cycle `R → S → L → R`.
    pub fn advanced(self, steps: u8) -> Self {
        Direction::from_cycle_pos(self.cycle_pos() + steps % 3)
    }

    pub fn as_char(self) -> char {
        match self {
            Direction::S => 'S',
            Direction::R => 'R',
            Direction::L => 'L',
        }
    }
}

/// One movement of a closed path: a direction plus the gluing orientation
/// exponent (`twist` is the power of the order-three rotation).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub direction: Direction,
    pub twist: u8,
}

impl Letter {
    pub fn new(direction: Direction, twist: u8) -> Self {
        assert!(twist < 3, "twist exponent must be 0, 1 or 2");
        Letter { direction, twist }
    }

    /// All nine letters in canonical order.
    pub fn all() -> impl Iterator<Item = Letter> {
        Direction::ALL
            .into_iter()
            .flat_map(|d| (0..3u8).map(move |t| Letter::new(d, t)))
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.direction.as_char())?;
        if self.twist > 0 {
            write!(f, "{}", self.twist)?;
        }
        Ok(())
    }
}

/// A nonempty sequence of letters describing a closed path.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn new(letters: Vec<Letter>) -> Self {
        assert!(!letters.is_empty(), "words are nonempty");
        Word(letters)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.0 {
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    /// Parses compact words like `"RLRR"` or `"SR1L2"`; an omitted twist
    /// digit means twist 0.
    fn from_str(s: &str) -> Result<Word> {
        let mut letters = Vec::new();
        let mut chars = s.chars().peekable();
        while let Some(ch) = chars.next() {
            let direction = match ch {
                'S' => Direction::S,
                'R' => Direction::R,
                'L' => Direction::L,
                other => {
                    return Err(Error::WordParse {
                        input: s.to_string(),
                        offending: other,
                    })
                }
            };
            let twist = match chars.peek() {
                Some(d @ '0'..='2') => {
                    let t = *d as u8 - b'0';
                    chars.next();
                    t
                }
                _ => 0,
            };
            letters.push(Letter::new(direction, twist));
        }
        if letters.is_empty() {
            return Err(Error::WordParse {
                input: s.to_string(),
                offending: ' ',
            });
        }
        Ok(Word(letters))
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Word, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The nine generator matrices, indexed as `[direction cycle: S, R, L][twist]`.
///
/// These are the fixed `SL(2, Z[i])` representatives; each has determinant 1
/// exactly.
fn generator(direction: Direction, twist: u8) -> Mat2 {
    match (direction, twist) {
        (Direction::S, 0) => Mat2::from_i64([[(1, 0), (1, 0)], [(0, 0), (1, 0)]]),
        (Direction::S, 1) => Mat2::from_i64([[(0, 1), (1, 1)], [(0, 1), (1, 0)]]),
        (Direction::S, 2) => Mat2::from_i64([[(-1, 1), (0, 1)], [(0, 1), (0, 0)]]),
        (Direction::R, 0) => Mat2::from_i64([[(-1, 0), (0, 1)], [(-1, 1), (0, 1)]]),
        (Direction::R, 1) => Mat2::from_i64([[(1, 0), (0, 0)], [(1, 0), (1, 0)]]),
        (Direction::R, 2) => Mat2::from_i64([[(0, 0), (0, 1)], [(0, 1), (1, 1)]]),
        (Direction::L, 0) => Mat2::from_i64([[(0, 1), (0, 1)], [(1, 1), (1, 0)]]),
        (Direction::L, 1) => Mat2::from_i64([[(-1, 0), (-1, 1)], [(0, 1), (0, 1)]]),
        (Direction::L, 2) => Mat2::from_i64([[(1, 1), (1, 0)], [(1, 0), (1, -1)]]),
        _ => unreachable!("twist checked on construction"),
    }
}

/// Exact matrix of a single letter.
pub fn letter_matrix(letter: Letter) -> Mat2 {
    generator(letter.direction, letter.twist)
}

/// Exact matrix of a word.
///
/// Composition convention: letters compose left to right, `M(w) = M(w₁)·M(w₂)⋯M(w_k)`,
/// so as a Möbius map the last letter acts first and prefixes of the letter
/// sequence correspond to partial products. This is the one place the
/// convention is fixed; everything else (plane distances, pruning, cycle
/// readout) inherits it.
pub fn word_matrix(word: &Word) -> Mat2 {
    if let Some(m) = small::word_matrix_i128(word.letters()) {
        return m.to_mat2();
    }
    word.letters()
        .iter()
        .fold(Mat2::identity(), |acc, &l| acc.mul(&letter_matrix(l)))
}

/// Plain floating-point product of the letter matrices (no renormalisation);
/// used to cross-check the exact path.
pub fn word_matrix_f64(word: &Word) -> [Complex64; 4] {
    let mut m = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(1.0, 0.0),
    ];
    for &l in word.letters() {
        let g = letter_matrix(l).to_complex();
        m = [
            m[0] * g[0] + m[1] * g[2],
            m[0] * g[1] + m[1] * g[3],
            m[2] * g[0] + m[3] * g[2],
            m[2] * g[1] + m[3] * g[3],
        ];
    }
    m
}

/// Translation length of an isometry with trace `t`:
/// `2·|Re arccosh(t/2)|`, which is 0 exactly when `t` lies in the real
/// interval `[-2, 2]`.
///
/// The two values `z ± sqrt(z² - 1)` are reciprocal, so taking the one of
/// modulus ≥ 1 realises the principal branch with nonnegative real part and
/// is insensitive to the matrix sign.
pub fn translation_length(t: Complex64) -> f64 {
    if t.im == 0.0 && t.re.abs() <= 2.0 {
        return 0.0;
    }
    let z = t / 2.0;
    let s = (z * z - Complex64::new(1.0, 0.0)).sqrt();
    let m = (z + s).norm().max((z - s).norm());
    2.0 * m.ln()
}

/// Translation length from an exact trace. The elliptic/parabolic window is
/// decided exactly on the integers before any rounding.
pub fn translation_length_of_trace(t: &GaussInt) -> f64 {
    if t.im.is_zero() && t.re.abs() <= BigInt::from(2) {
        return 0.0;
    }
    translation_length(t.to_complex())
}

/// Isometry type of a determinant-1 matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IsometryKind {
    Identity,
    Parabolic,
    Loxodromic,
}

impl fmt::Display for IsometryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IsometryKind::Identity => write!(f, "identity"),
            IsometryKind::Parabolic => write!(f, "parabolic"),
            IsometryKind::Loxodromic => write!(f, "loxodromic"),
        }
    }
}

/// Classify a determinant-1 matrix: `±Id`, parabolic (trace exactly `±2`),
/// or loxodromic.
pub fn classify_isometry(m: &Mat2) -> IsometryKind {
    if m.is_plus_minus_identity() {
        return IsometryKind::Identity;
    }
    let t = trace(m);
    if t.im.is_zero() && t.re.abs() == BigInt::from(2) {
        IsometryKind::Parabolic
    } else {
        IsometryKind::Loxodromic
    }
}

/// Checked 128-bit fast path for word products. Words of length ≤ 40 fit
/// comfortably; anything that would overflow reports `None` and the caller
/// falls back to big integers.
pub(crate) mod small {
    use super::{Direction, Letter};
    use num_bigint::BigInt;

    #[derive(Clone, Copy, Debug)]
    pub(crate) struct Gi {
        pub re: i128,
        pub im: i128,
    }

    impl Gi {
        const fn new(re: i128, im: i128) -> Self {
            Gi { re, im }
        }

        fn mul(self, rhs: Gi) -> Option<Gi> {
            let rr = self.re.checked_mul(rhs.re)?;
            let ii = self.im.checked_mul(rhs.im)?;
            let ri = self.re.checked_mul(rhs.im)?;
            let ir = self.im.checked_mul(rhs.re)?;
            Some(Gi {
                re: rr.checked_sub(ii)?,
                im: ri.checked_add(ir)?,
            })
        }

        fn add(self, rhs: Gi) -> Option<Gi> {
            Some(Gi {
                re: self.re.checked_add(rhs.re)?,
                im: self.im.checked_add(rhs.im)?,
            })
        }
    }

    #[derive(Clone, Copy, Debug)]
    pub(crate) struct Mat {
        pub a: Gi,
        pub b: Gi,
        pub c: Gi,
        pub d: Gi,
    }

    impl Mat {
        pub(crate) const IDENTITY: Mat = Mat {
            a: Gi::new(1, 0),
            b: Gi::new(0, 0),
            c: Gi::new(0, 0),
            d: Gi::new(1, 0),
        };

        pub(crate) fn mul(&self, rhs: &Mat) -> Option<Mat> {
            Some(Mat {
                a: self.a.mul(rhs.a)?.add(self.b.mul(rhs.c)?)?,
                b: self.a.mul(rhs.b)?.add(self.b.mul(rhs.d)?)?,
                c: self.c.mul(rhs.a)?.add(self.d.mul(rhs.c)?)?,
                d: self.c.mul(rhs.b)?.add(self.d.mul(rhs.d)?)?,
            })
        }

        pub(crate) fn trace(&self) -> Gi {
            Gi {
                re: self.a.re + self.d.re,
                im: self.a.im + self.d.im,
            }
        }

        pub(crate) fn to_mat2(self) -> super::Mat2 {
            let g = |x: Gi| super::GaussInt {
                re: BigInt::from(x.re),
                im: BigInt::from(x.im),
            };
            super::Mat2 {
                a: g(self.a),
                b: g(self.b),
                c: g(self.c),
                d: g(self.d),
            }
        }
    }

    pub(crate) fn letter_mat(l: Letter) -> Mat {
        const fn m(a: (i128, i128), b: (i128, i128), c: (i128, i128), d: (i128, i128)) -> Mat {
            Mat {
                a: Gi::new(a.0, a.1),
                b: Gi::new(b.0, b.1),
                c: Gi::new(c.0, c.1),
                d: Gi::new(d.0, d.1),
            }
        }
        match (l.direction, l.twist) {
            (Direction::S, 0) => m((1, 0), (1, 0), (0, 0), (1, 0)),
            (Direction::S, 1) => m((0, 1), (1, 1), (0, 1), (1, 0)),
            (Direction::S, 2) => m((-1, 1), (0, 1), (0, 1), (0, 0)),
            (Direction::R, 0) => m((-1, 0), (0, 1), (-1, 1), (0, 1)),
            (Direction::R, 1) => m((1, 0), (0, 0), (1, 0), (1, 0)),
            (Direction::R, 2) => m((0, 0), (0, 1), (0, 1), (1, 1)),
            (Direction::L, 0) => m((0, 1), (0, 1), (1, 1), (1, 0)),
            (Direction::L, 1) => m((-1, 0), (-1, 1), (0, 1), (0, 1)),
            (Direction::L, 2) => m((1, 1), (1, 0), (1, 0), (1, -1)),
            _ => unreachable!(),
        }
    }

    pub(crate) fn word_matrix_i128(letters: &[Letter]) -> Option<Mat> {
        let mut acc = Mat::IDENTITY;
        for &l in letters {
            acc = acc.mul(&letter_mat(l))?;
        }
        Some(acc)
    }
}
