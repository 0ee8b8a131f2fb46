//! Acceptance suite: one test per shipping criterion, each printing a PASS
//! line (run with `--nocapture` to see them). Reproducibility of the CLI
//! output lives in the CLI crate's own acceptance test.

use std::collections::{BTreeMap, HashMap};

use octaspectrum::hypgeo::acosh3;
use octaspectrum::stats::{cross_covariance, poisson_fit};
use octaspectrum::words::{a_transform, canonical, class_of, enumerate_classes, orbit, star};
use octaspectrum::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn w(s: &str) -> Word {
    s.parse().unwrap()
}

fn all_words_of_length(len: usize) -> impl Iterator<Item = Word> {
    (0..9usize.pow(len as u32)).map(move |i| {
        let letters: Vec<Letter> = (0..len)
            .map(|p| {
                let code = (i / 9usize.pow(p as u32)) % 9;
                Letter::new(Direction::ALL[code / 3], (code % 3) as u8)
            })
            .collect();
        Word::new(letters)
    })
}

#[test]
fn criterion_01_reference_words() {
    let cases = [("RLRR", 3.47, 2.63), ("RLRRL", 3.33, 3.26)];
    for (tok, len_ref, dist_ref) in cases {
        let word = w(tok);
        let length = translation_length_of_trace(&trace(&word_matrix(&word)));
        let distance = word_plane_distance(&word);
        assert!(
            (length - len_ref).abs() <= 0.01,
            "{tok}: length {length} vs {len_ref}"
        );
        assert!(
            (distance - dist_ref).abs() <= 0.01,
            "{tok}: distance {distance} vs {dist_ref}"
        );
    }
    println!("criterion 1: PASS — RLRR and RLRRL lengths and plane distances");
}

#[test]
fn criterion_02_two_letter_planes_and_straight_runs() {
    for tok in ["SR1", "R1S", "R1L2", "L2R1", "SL2", "L2S"] {
        let d = word_plane_distance(&w(tok));
        assert!((d - acosh3()).abs() <= 1e-9, "{tok}: {d}");
    }
    for k in 1..=5usize {
        let mut tok = "S".repeat(k);
        tok.push_str("R1");
        let d = word_plane_distance(&w(&tok));
        let expected = (2.0 * k as f64 + 1.0).acosh();
        assert!((d - expected).abs() <= 1e-9, "{tok}: {d} vs {expected}");
    }
    println!("criterion 2: PASS — arccosh(3) planes and arccosh(2K+1) straight runs");
}

#[test]
fn criterion_03_exact_generators_and_word_moves() {
    for letter in Letter::all() {
        assert_eq!(letter_matrix(letter).det(), GaussInt::new(1, 0));
    }
    for tok in ["S", "R1", "L2"] {
        let m = word_matrix(&w(tok));
        assert_eq!(trace(&m), GaussInt::new(2, 0), "{tok}");
        assert_eq!(classify_isometry(&m), IsometryKind::Parabolic, "{tok}");
    }
    // the nine coordinate readings of S·Rθ
    let table = [
        ["SR1", "L1R2", "R2R"],
        ["S1S2", "L2S", "RS1"],
        ["S2L", "LL1", "R1L2"],
    ];
    for (site2, row) in table.iter().enumerate() {
        for (site1, expected) in row.iter().enumerate() {
            let mut word = w("SR1");
            for _ in 0..site1 {
                word = a_transform(&word, 1);
            }
            for _ in 0..site2 {
                word = a_transform(&word, 2);
            }
            assert_eq!(word, w(expected));
        }
    }
    assert_eq!(star(&w("SR1")), w("RS1"));
    println!("criterion 3: PASS — exact generators, coordinate-change table, reversal");
}

#[test]
fn criterion_04_length_lower_bound_function() {
    let c = acosh3();
    let mut count = 0;
    for k in 0..200 {
        let r = 0.1 * (1e8f64 / 0.1).powf(k as f64 / 199.0);
        let j = j_of_r(r);
        let lhs = (j.cosh() - 1.0) * (2.0 * j + c);
        let rhs = 2.0 * c * r;
        assert!(
            ((lhs - rhs) / rhs).abs() < 1e-12,
            "residual at r = {r}: {}",
            (lhs - rhs) / rhs
        );
        count += 1;
    }
    assert_eq!(count, 200);
    let mut prev = 0.0;
    for k in 0..1000 {
        let r = 0.1 * (1e8f64 / 0.1).powf(k as f64 / 999.0);
        let j = j_of_r(r);
        assert!(j > prev, "not strictly increasing at r = {r}");
        prev = j;
    }
    let ratio = j_of_r(1e6) / 1e6f64.ln();
    assert!(ratio > 0.8 && ratio < 1.2, "asymptotic ratio {ratio}");
    for r in [1.0, 10.0, 100.0] {
        assert!((r_of_j(j_of_r(r)) - r).abs() <= 1e-10 * r);
    }
    println!("criterion 4: PASS — implicit equation residual, monotonicity, asymptotics");
}

#[test]
fn criterion_05_enumeration_matches_exhaustive_oracle() {
    // closure oracle over every word of length 3..=5: group by the
    // materialised class, keep the loxodromic classes in the window
    fn oracle_classes(b: f64) -> BTreeMap<Word, (u128, f64)> {
        let mut oracle = BTreeMap::new();
        let mut grouped: std::collections::HashSet<Word> = std::collections::HashSet::new();
        for len in 3..=5usize {
            for word in all_words_of_length(len) {
                if grouped.contains(&word) {
                    continue;
                }
                let members = orbit(&word).unwrap();
                let representative = members.iter().next().unwrap().clone();
                let length =
                    translation_length_of_trace(&trace(&word_matrix(&representative)));
                if length > 0.0 && length <= b + 1e-9 {
                    oracle.insert(representative, (members.len() as u128, length));
                }
                grouped.extend(members);
            }
        }
        oracle
    }
    fn compare(lines: &[words::SpectralLine], oracle: &BTreeMap<Word, (u128, f64)>) {
        assert_eq!(lines.len(), oracle.len(), "class sets differ in size");
        for line in lines {
            let c = &line.word_class;
            let (orbit_size, length) = oracle
                .get(&c.canonical)
                .unwrap_or_else(|| panic!("extra class {}", c.canonical));
            assert_eq!(c.orbit_size, *orbit_size, "{}", c.canonical);
            assert!(
                (c.translation_length - length).abs() <= 1e-9,
                "{}",
                c.canonical
            );
            let lambda =
                *orbit_size as f64 / (2.0 * c.length as f64 * 3f64.powi(c.length as i32));
            assert!((line.intensity - lambda).abs() <= 1e-12, "{}", c.canonical);
        }
    }
    // the literal bound keeping the search cap at 5; the spectrum starts
    // above it, so both sides must agree on the empty set
    let b_cap5 = j_of_r(5.0) + 1e-9;
    assert_eq!(r_of_j(b_cap5).floor() as usize, 5);
    let lines = enumerate_classes(0.0, b_cap5).unwrap();
    compare(&lines, &oracle_classes(b_cap5));
    assert!(lines.is_empty(), "no class sits below J(5)");
    // a substantive window: several classes, still all of length ≤ 5, so
    // the exhaustive oracle remains complete
    let b = 3.0;
    let lines = enumerate_classes(0.0, b).unwrap();
    assert!(!lines.is_empty());
    assert!(lines.iter().all(|l| l.word_class.length <= 5));
    compare(&lines, &oracle_classes(b));
    println!(
        "criterion 5: PASS — pruned enumeration equals the exhaustive oracle ({} classes at b = {b})",
        lines.len()
    );
}

#[test]
fn criterion_06_length_dominates_plane_distance() {
    let mut checked = 0u64;
    for len in 1..=6usize {
        for word in all_words_of_length(len) {
            let length = translation_length_of_trace(&trace(&word_matrix(&word)));
            if length <= 0.0 {
                continue;
            }
            let d = word_plane_distance(&word);
            assert!(
                length >= d - 1e-9,
                "{word}: length {length} < distance {d}"
            );
            checked += 1;
        }
    }
    println!("criterion 6: PASS — translation length dominates plane distance ({checked} loxodromic words)");
}

fn outcome_key(g: &Gluing) -> u64 {
    // positional encoding of (partner slot, twist) per edge, unique for
    // small n
    let n = g.n();
    let mut key = 0u64;
    for v in 0..n {
        for s in 0..4u8 {
            let (pv, ps) = g.partner_of(v, s);
            let this = (v * 4 + s as usize) as u64;
            let partner = (pv * 4 + ps as usize) as u64;
            if partner > this {
                key = (key << 5) | (partner << 2) | g.twist_of(v, s) as u64;
            }
        }
    }
    key
}

fn chi_squared_p_value(observed: &HashMap<u64, u64>, cells: u64, draws: u64) -> f64 {
    let expected = draws as f64 / cells as f64;
    let mut stat = 0.0;
    for &count in observed.values() {
        let d = count as f64 - expected;
        stat += d * d / expected;
    }
    stat += (cells - observed.len() as u64) as f64 * expected;
    let dist = ChiSquared::new((cells - 1) as f64).unwrap();
    1.0 - dist.cdf(stat)
}

#[test]
fn criterion_07_sampler_uniformity_and_acceptance_rate() {
    // n = 1: 3!!·3² = 27 outcomes; n = 2: 7!!·3⁴ = 8505 outcomes
    for (n, cells, seed) in [(1usize, 27u64, 101u64), (2, 8505, 202)] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draws = 1_000_000u64;
        let mut counts: HashMap<u64, u64> = HashMap::new();
        for _ in 0..draws {
            *counts.entry(outcome_key(&Gluing::sample_with(n, &mut rng))).or_insert(0) += 1;
        }
        assert!(counts.len() as u64 <= cells);
        let p = chi_squared_p_value(&counts, cells, draws);
        assert!(p > 0.001, "chi-squared p = {p} at n = {n}");
    }
    // rejection acceptance rate at n = 2000 ≈ e^{-3/2-9/4}
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let attempts = 10_000;
    let mut accepted = 0u64;
    for _ in 0..attempts {
        if is_simple(&Gluing::sample_with(2000, &mut rng).dual_graph()) {
            accepted += 1;
        }
    }
    let rate = accepted as f64 / attempts as f64;
    assert!(
        (rate - 0.0235).abs() <= 0.005,
        "acceptance rate {rate} outside 0.0235 ± 0.005"
    );
    println!("criterion 7: PASS — uniform sampler (chi-squared) and conditioning rate {rate:.4}");
}

#[test]
fn criterion_08_poisson_limit_at_desk_scale() {
    // all classes of lengths 3..5, so per-length totals are also testable
    let mut classes: Vec<words::WordClass> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for len in 3..=5usize {
        for word in all_words_of_length(len) {
            let canon = canonical(&word);
            if seen.insert(canon.clone()) {
                classes.push(class_of(&canon).unwrap());
            }
        }
    }
    let lambdas: Vec<f64> = classes.iter().map(intensity::class_intensity).collect();

    let n = 2000usize;
    let trials = 2000usize;
    let cfg = TrialConfig {
        n,
        trials,
        master_seed: 20008,
        conditioned: true,
        max_word_len: 5,
    };
    let batch = collect_trial_batch(&cfg, &classes).unwrap();

    // the four pinned classes: three of length 3, one of length 4
    let selected = ["SSS1", "SSS2", "SSR1", "SSSR1"];
    let index: BTreeMap<String, usize> = batch
        .classes
        .iter()
        .enumerate()
        .map(|(i, word)| (word.to_string(), i))
        .collect();
    let slack = 10.0 / n as f64;
    let mut picked = Vec::new();
    for name in selected {
        let i = *index.get(name).unwrap_or_else(|| panic!("{name} missing"));
        picked.push(i);
        let fit = poisson_fit(&batch.counts[i], lambdas[i]);
        assert!(
            (fit.mean - fit.lambda).abs() <= 4.0 * fit.std_error + slack,
            "{name}: mean {} vs lambda {} (se {})",
            fit.mean,
            fit.lambda,
            fit.std_error
        );
        assert!(
            (fit.fact2_mean - fit.lambda * fit.lambda).abs() <= 4.0 * fit.fact2_std_error,
            "{name}: second factorial moment {} vs {} (se {})",
            fit.fact2_mean,
            fit.lambda * fit.lambda,
            fit.fact2_std_error
        );
        assert!(fit.tv_distance < 0.05, "{name}: tv {}", fit.tv_distance);
    }
    let rows: Vec<Vec<u64>> = picked.iter().map(|&i| batch.counts[i].clone()).collect();
    let cov = cross_covariance(&rows);
    for i in 0..picked.len() {
        for j in (i + 1)..picked.len() {
            let se = ((cov[i][i] * cov[j][j] + cov[i][j] * cov[i][j]) / trials as f64).sqrt();
            assert!(
                cov[i][j].abs() <= 4.0 * se,
                "cov({}, {}) = {} (se {se})",
                selected[i],
                selected[j],
                cov[i][j]
            );
        }
    }

    // per-length totals against the regular-graph values 3^k/(2k)
    for len in 3..=5usize {
        let total_per_trial: Vec<u64> = (0..trials)
            .map(|t| {
                classes
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| c.length == len)
                    .map(|(i, _)| batch.counts[i][t])
                    .sum()
            })
            .collect();
        let expected = 3f64.powi(len as i32) / (2.0 * len as f64);
        let fit = poisson_fit(&total_per_trial, expected);
        assert!(
            (fit.mean - expected).abs() <= 4.0 * fit.std_error + slack,
            "length-{len} cycles: mean {} vs {} (se {})",
            fit.mean,
            expected,
            fit.std_error
        );
    }
    println!(
        "criterion 8: PASS — Poisson fits at n = {n}, {trials} trials ({} classes tracked)",
        classes.len()
    );
}

#[test]
fn criterion_09_cycle_words_are_reading_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut checked = 0usize;
    while checked < 1000 {
        let (g, _) = Gluing::sample_conditioned_with(120, &mut rng);
        for cycle in enumerate_cycles(&g.dual_graph(), 6).unwrap() {
            let reference = canonical(&cycle_word(&g, &cycle, 0, Traversal::Forward));
            for start in 0..cycle.len() {
                for t in [Traversal::Forward, Traversal::Reverse] {
                    assert_eq!(
                        canonical(&cycle_word(&g, &cycle, start, t)),
                        reference,
                        "cycle of length {} read from {start} {t:?}",
                        cycle.len()
                    );
                }
            }
            checked += 1;
            if checked >= 1000 {
                break;
            }
        }
    }
    println!("criterion 9: PASS — {checked} cycles classify identically from every reading");
}
