//! The word equivalence calculus.
//!
//! Two words label the same closed curve when they differ by
//! (A) a change of the cyclic vertex identification at any octahedron — the
//! twists on both adjacent gluings advance and the direction letter steps
//! through the cycle `(R S L)` — or
//! (B) a change of start point or travel direction: a cyclic rotation of the
//! letters, or the reversal `w*` which reads the word backwards while each
//! letter picks up the preceding letter's twist.
//!
//! The `(A)` moves at the `k` sites commute and act freely, so the full
//! equivalence class is a single orbit of `(Z₃)^k ⋊ D_k` of size
//! `2k·3^k / |stabiliser|`. Class sizes and canonical forms are computed
//! from that structure in `O(k²)` without materialising orbits; the explicit
//! closure [`orbit`] exists for inspection and as the oracle the fast path
//! is tested against.

use std::collections::{BTreeSet, HashSet, VecDeque};

use num_bigint::BigInt;
use num_complex::Complex64;

use crate::exactalg::{
    small, trace, translation_length, translation_length_of_trace, word_matrix, Direction,
    GaussInt, Letter, Word,
};
use crate::hypgeo::{fast, r_of_j};
use crate::{Error, Result};

/// An equivalence class of words: canonical representative, class size,
/// exact trace of the canonical word and its translation length.
#[derive(Clone, Debug, PartialEq)]
pub struct WordClass {
    pub canonical: Word,
    pub orbit_size: u128,
    pub length: usize,
    pub trace: GaussInt,
    pub translation_length: f64,
}

/// One line of the limiting length spectrum: a word class together with its
/// Poisson intensity contribution.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralLine {
    pub word_class: WordClass,
    pub intensity: f64,
}

/// Coordinate change at `site` (1-based, cyclic): the twists of the gluing
/// entering and leaving that octahedron advance by one and the direction
/// letter steps along `(R S L)`.
pub fn a_transform(word: &Word, site: usize) -> Word {
    let k = word.len();
    assert!((1..=k).contains(&site), "site out of range");
    let mut letters = word.letters().to_vec();
    let i = site - 1;
    let prev = (i + k - 1) % k;
    letters[prev].twist = (letters[prev].twist + 1) % 3;
    letters[i].twist = (letters[i].twist + 1) % 3;
    letters[i].direction = letters[i].direction.advanced(1);
    Word::new(letters)
}

/// Cyclic rotation moving the start point forward by `steps` letters.
pub fn rotated(word: &Word, steps: usize) -> Word {
    let mut letters = word.letters().to_vec();
    let k = letters.len();
    letters.rotate_left(steps % k);
    Word::new(letters)
}

/// Reversal: read the word backwards, each letter taking the twist of the
/// letter before it (`w*₍ⱼ₎ = w₍ₖ₊₁₋ⱼ₎ Θ₍ₖ₋ⱼ₎`, indices cyclic).
pub fn star(word: &Word) -> Word {
    let input = word.letters();
    let k = input.len();
    let letters = (0..k)
        .map(|j| Letter {
            direction: input[k - 1 - j].direction,
            twist: input[(2 * k - 2 - j) % k].twist,
        })
        .collect();
    Word::new(letters)
}

fn dir_steps(from: Direction, to: Direction) -> u8 {
    (0..3).find(|&c| from.advanced(c) == to).unwrap()
}

/// Apply the commuting coordinate changes described by `c` (one step count
/// per site).
fn apply_coordinate_changes(letters: &[Letter], c: &[u8]) -> Vec<Letter> {
    let k = letters.len();
    (0..k)
        .map(|i| Letter {
            direction: letters[i].direction.advanced(c[i]),
            twist: (letters[i].twist + c[i] + c[(i + 1) % k]) % 3,
        })
        .collect()
}

/// The unique coordinate-change vector carrying `from` to `to`, if any.
fn coordinate_change_between(from: &[Letter], to: &[Letter]) -> Option<Vec<u8>> {
    let k = from.len();
    debug_assert_eq!(k, to.len());
    let c: Vec<u8> = (0..k)
        .map(|i| dir_steps(from[i].direction, to[i].direction))
        .collect();
    let consistent = (0..k)
        .all(|i| (from[i].twist + c[i] + c[(i + 1) % k]) % 3 == to[i].twist);
    consistent.then_some(c)
}

/// Lexicographic minimum over the coordinate-change orbit of `letters`:
/// greedily force the first direction to `S` and zero out every twist the
/// remaining freedom can reach. Each choice is the unique letterwise
/// minimum, so the result is the exact orbit minimum.
fn coordinate_minimum(letters: &[Letter]) -> Vec<Letter> {
    let k = letters.len();
    let mut c = vec![0u8; k];
    c[0] = dir_steps(letters[0].direction, Direction::S);
    for i in 0..k.saturating_sub(1) {
        c[i + 1] = (6 - letters[i].twist - c[i]) % 3;
    }
    apply_coordinate_changes(letters, &c)
}

fn start_and_direction_images(word: &Word) -> impl Iterator<Item = Word> + '_ {
    let k = word.len();
    let reversed = star(word);
    (0..k)
        .map(move |j| rotated(word, j))
        .chain((0..k).map(move |j| rotated(&reversed, j)))
}

/// Canonical representative: the lexicographic minimum of the equivalence
/// class under the letter order `S < R < L`, twist `0 < 1 < 2`.
pub fn canonical(word: &Word) -> Word {
    start_and_direction_images(word)
        .map(|img| Word::new(coordinate_minimum(img.letters())))
        .min()
        .expect("words are nonempty")
}

/// Number of start/direction symmetries fixing the word modulo coordinate
/// changes; the class size is `2k·3^k` divided by this.
fn stabilizer_order(word: &Word) -> u128 {
    start_and_direction_images(word)
        .filter(|img| coordinate_change_between(img.letters(), word.letters()).is_some())
        .count() as u128
}

const DEFAULT_ORBIT_CAP: u128 = 10_000_000;

/// The full equivalence class, materialised by breadth-first closure under
/// coordinate changes, rotations and reversal.
///
/// Classes grow like `2k·3^k`; materialisation is refused past a cap
/// (the class *size* is still available through [`class_of`]).
pub fn orbit(word: &Word) -> Result<BTreeSet<Word>> {
    let k = word.len();
    let bound = (2 * k as u128).saturating_mul(3u128.saturating_pow(k as u32));
    if bound > DEFAULT_ORBIT_CAP {
        return Err(Error::OrbitTooLarge {
            len: k,
            bound,
            cap: DEFAULT_ORBIT_CAP,
        });
    }
    let mut seen: HashSet<Word> = HashSet::new();
    let mut queue: VecDeque<Word> = VecDeque::new();
    seen.insert(word.clone());
    queue.push_back(word.clone());
    while let Some(current) = queue.pop_front() {
        let mut neighbours: Vec<Word> = (1..=k).map(|s| a_transform(&current, s)).collect();
        neighbours.push(rotated(&current, 1));
        neighbours.push(star(&current));
        for n in neighbours {
            if seen.insert(n.clone()) {
                queue.push_back(n);
            }
        }
    }
    Ok(seen.into_iter().collect())
}

fn class_size(word: &Word) -> Result<u128> {
    let k = word.len() as u32;
    let total = 3u128
        .checked_pow(k)
        .and_then(|p| p.checked_mul(2 * k as u128))
        .ok_or(Error::OrbitSizeOverflow { len: word.len() })?;
    Ok(total / stabilizer_order(word))
}

/// Assemble the class data for any representative word.
pub fn class_of(word: &Word) -> Result<WordClass> {
    let canon = canonical(word);
    let orbit_size = class_size(word)?;
    let t = trace(&word_matrix(&canon));
    let translation_length = translation_length_of_trace(&t);
    // translation length is a class invariant; spot-check a few members
    for member in [star(&canon), rotated(&canon, 1), a_transform(&canon, 1)] {
        let l = translation_length_of_trace(&trace(&word_matrix(&member)));
        debug_assert!(
            (l - translation_length).abs() < 1e-9,
            "length not constant on class of {canon}: {l} vs {translation_length}"
        );
    }
    Ok(WordClass {
        length: canon.len(),
        canonical: canon,
        orbit_size,
        trace: t,
        translation_length,
    })
}

/// Hyperbolicity test used to select spectrum classes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum HyperbolicityFilter {
    /// Positive translation length (trace outside the real segment `[-2, 2]`).
    #[default]
    PositiveLength,
    /// Strict trace modulus `|tr| > 2`. Complex traces of modulus ≤ 2 can
    /// still have positive length; classes where the two tests disagree are
    /// reported separately.
    StrictTrace,
}

#[derive(Clone, Debug)]
pub struct EnumerationOptions {
    pub filter: HyperbolicityFilter,
    /// Upper bound accepted for the interval end; enumeration cost grows
    /// steeply with it.
    pub feasibility_ceiling: f64,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        EnumerationOptions {
            filter: HyperbolicityFilter::PositiveLength,
            feasibility_ceiling: 6.0,
        }
    }
}

/// Result of an interval enumeration.
#[derive(Clone, Debug)]
pub struct Enumeration {
    pub lines: Vec<SpectralLine>,
    /// Classes with positive translation length but trace modulus ≤ 2 (the
    /// two hyperbolicity tests disagree on these).
    pub filter_disagreements: Vec<WordClass>,
    /// Hard word-length cap `⌊r(b)⌋` used by the search.
    pub word_length_cap: u32,
}

/// Boundary tolerance for interval membership of translation lengths.
const LENGTH_EPS: f64 = 1e-9;

/// Pruning margin on the fast plane-distance path; generously above its
/// numerical error so no admissible prefix is ever cut.
const PRUNE_MARGIN: f64 = 1e-6;

/// All word classes with `|w| > 2`, hyperbolic type, and translation length
/// in `[a, b]`, one spectral line per class, sorted by translation length.
///
/// Termination: every word of length `r` has translation length at least
/// `J(r)`, so the search never goes past `⌊r(b)⌋` letters. Feasibility:
/// a prefix's plane distance is a lower bound for the full word's
/// translation length (half-space nesting), so branches whose prefix
/// distance exceeds `b` are cut.
pub fn enumerate_classes(a: f64, b: f64) -> Result<Vec<SpectralLine>> {
    enumerate_classes_opts(a, b, &EnumerationOptions::default()).map(|e| e.lines)
}

pub fn enumerate_classes_opts(
    a: f64,
    b: f64,
    opts: &EnumerationOptions,
) -> Result<Enumeration> {
    if !(a.is_finite() && b.is_finite() && 0.0 <= a && a <= b) {
        return Err(Error::InvalidInterval { a, b });
    }
    if b > opts.feasibility_ceiling {
        return Err(Error::IntervalCeiling {
            b,
            ceiling: opts.feasibility_ceiling,
        });
    }
    let word_length_cap = r_of_j(b).floor() as usize;
    // |tr| ≤ 2·cosh(l/2) for any isometry of length l, so traces with a
    // larger modulus cannot land in the window; this integer test skips the
    // arccosh on most of the tree
    let trace_norm_bound = {
        let m = 2.0 * (b / 2.0).cosh() + 1e-6;
        m * m
    };
    let mut search = Search {
        a,
        b,
        filter: opts.filter,
        trace_norm_bound,
        cap: word_length_cap,
        letters: Vec::new(),
        float_mats: vec![fast::C_IDENTITY],
        small_mats: vec![Some(small::Mat::IDENTITY)],
        seen: HashSet::new(),
        lines: Vec::new(),
        disagreements: Vec::new(),
    };
    if word_length_cap >= 3 {
        search.descend()?;
    }
    let mut lines = search.lines;
    lines.sort_by(|x, y| {
        x.word_class
            .translation_length
            .total_cmp(&y.word_class.translation_length)
            .then_with(|| x.word_class.length.cmp(&y.word_class.length))
            .then_with(|| x.word_class.canonical.cmp(&y.word_class.canonical))
    });
    let mut disagreements = search.disagreements;
    disagreements.sort_by(|x, y| {
        x.length
            .cmp(&y.length)
            .then_with(|| x.canonical.cmp(&y.canonical))
    });
    Ok(Enumeration {
        lines,
        filter_disagreements: disagreements,
        word_length_cap: word_length_cap as u32,
    })
}

struct Search {
    a: f64,
    b: f64,
    filter: HyperbolicityFilter,
    trace_norm_bound: f64,
    cap: usize,
    letters: Vec<Letter>,
    float_mats: Vec<fast::CMat>,
    small_mats: Vec<Option<small::Mat>>,
    seen: HashSet<Word>,
    lines: Vec<SpectralLine>,
    disagreements: Vec<WordClass>,
}

impl Search {
    /// Every class contains an *aligned* representative whose twists all
    /// vanish except possibly on the final letter (zero them greedily with
    /// coordinate changes). The search therefore only descends through
    /// twist-0 letters — a 3-ary tree over direction patterns — and closes
    /// each branch with the three possible final twists. Prefixes of an
    /// aligned word are themselves twist-0 words with plane distance at most
    /// the class length, so the pruning never cuts a reachable class.
    fn descend(&mut self) -> Result<()> {
        for direction in Direction::ALL {
            if self.letters.len() + 1 >= 3 {
                for twist in 0..3u8 {
                    self.consider_candidate(Letter::new(direction, twist))?;
                }
            }
            let child = Letter::new(direction, 0);
            if self.letters.len() + 1 >= self.cap {
                continue;
            }
            let fm =
                fast::mul_normalized(self.float_mats.last().unwrap(), &fast::letter_cmat(child));
            if fast::base_distance(&fm) > self.b + PRUNE_MARGIN {
                continue;
            }
            let sm = self
                .small_mats
                .last()
                .unwrap()
                .and_then(|m| m.mul(&small::letter_mat(child)));
            self.letters.push(child);
            self.float_mats.push(fm);
            self.small_mats.push(sm);
            self.descend()?;
            self.letters.pop();
            self.float_mats.pop();
            self.small_mats.pop();
        }
        Ok(())
    }

    fn consider_candidate(&mut self, last: Letter) -> Result<()> {
        // exact trace of prefix·last, from the 128-bit stack when it fits
        let final_small = self
            .small_mats
            .last()
            .unwrap()
            .and_then(|m| m.mul(&small::letter_mat(last)));
        let (length, strict_trace): (f64, bool) = match final_small {
            Some(m) => {
                let t = m.trace();
                let norm_sqr = (t.re as f64) * (t.re as f64) + (t.im as f64) * (t.im as f64);
                if norm_sqr > self.trace_norm_bound {
                    return Ok(());
                }
                let l = if t.im == 0 && t.re.abs() <= 2 {
                    0.0
                } else {
                    translation_length(Complex64::new(t.re as f64, t.im as f64))
                };
                let strict = t
                    .re
                    .checked_mul(t.re)
                    .zip(t.im.checked_mul(t.im))
                    .map(|(rr, ii)| rr.saturating_add(ii) > 4)
                    .unwrap_or(true);
                (l, strict)
            }
            None => {
                let mut letters = self.letters.clone();
                letters.push(last);
                let t = trace(&word_matrix(&Word::new(letters)));
                (
                    translation_length_of_trace(&t),
                    t.norm_sqr() > BigInt::from(4),
                )
            }
        };
        if length <= 0.0 || length < self.a - LENGTH_EPS || length > self.b + LENGTH_EPS {
            return Ok(());
        }
        let mut letters = self.letters.clone();
        letters.push(last);
        let word = Word::new(letters);
        let canon = canonical(&word);
        if !self.seen.insert(canon.clone()) {
            return Ok(());
        }
        let class = class_of(&canon)?;
        if !strict_trace {
            self.disagreements.push(class.clone());
        }
        let keep = match self.filter {
            HyperbolicityFilter::PositiveLength => true,
            HyperbolicityFilter::StrictTrace => strict_trace,
        };
        if keep {
            let intensity = crate::intensity::class_intensity(&class);
            self.lines.push(SpectralLine {
                word_class: class,
                intensity,
            });
        }
        Ok(())
    }
}
