//! Parallel majority-vote combination of classifier outputs.
//!
//! Both combiners are ordered rule cascades, not symmetric votes: the
//! first matching rule in listed order decides, and when no inputs agree
//! the second input wins because position 2 is reserved for the quadratic
//! classifier, the strongest individual discriminant.

/// Majority of three: agreement of any pair, checked in order (1,2),
/// (1,3), (2,3); otherwise input 2.
pub fn majority3(i1: usize, i2: usize, i3: usize) -> usize {
    if i1 == i2 {
        i1
    } else if i1 == i3 {
        i1
    } else if i2 == i3 {
        i2
    } else {
        i2
    }
}

/// Majority of five: the ten triple-agreement tests in listed order, then
/// the ten pair tests in listed order, otherwise input 2.
pub fn majority5(i1: usize, i2: usize, i3: usize, i4: usize, i5: usize) -> usize {
    // triples
    if (i1 == i2 && i2 == i3)
        || (i1 == i2 && i2 == i4)
        || (i1 == i2 && i2 == i5)
        || (i1 == i3 && i3 == i4)
        || (i1 == i3 && i3 == i5)
        || (i1 == i4 && i4 == i5)
    {
        i1
    } else if (i2 == i3 && i3 == i4) || (i2 == i3 && i3 == i5) || (i2 == i4 && i4 == i5) {
        i2
    } else if i3 == i4 && i4 == i5 {
        i3
    // pairs
    } else if i1 == i2 || i1 == i3 || i1 == i4 || i1 == i5 {
        i1
    } else if i2 == i3 || i2 == i4 || i2 == i5 {
        i2
    } else if i3 == i4 || i3 == i5 {
        i3
    } else if i4 == i5 {
        i4
    } else {
        i2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn majority3_cascade_cases() {
        assert_eq!(majority3(7, 7, 2), 7); // first pair
        assert_eq!(majority3(4, 9, 9), 9); // last pair
        assert_eq!(majority3(1, 5, 8), 5); // no agreement: quadratic wins
    }

    #[test]
    fn majority5_cascade_cases() {
        assert_eq!(majority5(3, 3, 3, 1, 2), 3); // triple
        assert_eq!(majority5(0, 1, 2, 9, 9), 9); // last pair rule
        assert_eq!(majority5(0, 1, 2, 3, 4), 1); // all distinct
        // i1 = i3 pair fires before any i2 pair rule
        assert_eq!(majority5(5, 6, 5, 6, 7), 5);
    }

    /// Brute-force oracle: most frequent label, falling back to input 2 on
    /// a tie or when no pair agrees.
    fn mode_with_i2_fallback(inputs: &[usize]) -> usize {
        let mut counts = [0usize; 10];
        for &i in inputs {
            counts[i] += 1;
        }
        let max = *counts.iter().max().unwrap();
        if max < 2 {
            return inputs[1];
        }
        let winners: Vec<usize> = (0..10).filter(|&l| counts[l] == max).collect();
        if winners.len() == 1 {
            winners[0]
        } else {
            inputs[1]
        }
    }

    #[test]
    fn majority3_exhaustive_against_oracle() {
        for i1 in 0..10 {
            for i2 in 0..10 {
                for i3 in 0..10 {
                    let out = majority3(i1, i2, i3);
                    assert!([i1, i2, i3].contains(&out));
                    // a 3-way vote never ties between two distinct pairs,
                    // so the mode oracle must agree exactly
                    assert_eq!(
                        out,
                        mode_with_i2_fallback(&[i1, i2, i3]),
                        "({i1},{i2},{i3})"
                    );
                }
            }
        }
    }

    #[test]
    fn majority5_exhaustive_properties() {
        let mut agreement_pattern_counts = std::collections::BTreeMap::new();
        for i1 in 0..10 {
            for i2 in 0..10 {
                for i3 in 0..10 {
                    for i4 in 0..10 {
                        for i5 in 0..10 {
                            let inputs = [i1, i2, i3, i4, i5];
                            let out = majority5(i1, i2, i3, i4, i5);
                            assert!(inputs.contains(&out));
                            let mut counts = [0usize; 10];
                            for &i in &inputs {
                                counts[i] += 1;
                            }
                            // a strict majority always wins
                            if let Some(l) = (0..10).find(|&l| counts[l] >= 3) {
                                assert_eq!(out, l, "{inputs:?}");
                            }
                            // unanimous input trivially included above, but
                            // check the max-multiplicity partition counts
                            let mut sig: Vec<usize> =
                                counts.iter().copied().filter(|&c| c > 0).collect();
                            sig.sort_unstable_by(|a, b| b.cmp(a));
                            *agreement_pattern_counts.entry(sig).or_insert(0usize) += 1;
                        }
                    }
                }
            }
        }
        // nC r case analysis over the 10^5 table: multiplicity patterns and
        // their input counts (10 choose the distinct labels, times the
        // multinomial arrangements)
        let get = |sig: &[usize]| agreement_pattern_counts.get(sig).copied().unwrap_or(0);
        assert_eq!(get(&[5]), 10); // all five equal
        assert_eq!(get(&[4, 1]), 10 * 9 * 5); // 5C4 arrangements
        assert_eq!(get(&[3, 2]), 10 * 9 * 10); // 5C3 arrangements
        assert_eq!(get(&[3, 1, 1]), 10 * (9 * 8 / 2) * 10 * 2);
        assert_eq!(get(&[2, 2, 1]), 10 * 9 * 8 / 2 * 15 * 2);
        assert_eq!(get(&[2, 1, 1, 1]), 10 * (9 * 8 * 7 / 6) * 10 * 6);
        assert_eq!(
            get(&[1, 1, 1, 1, 1]),
            10 * 9 * 8 * 7 * 6
        );
    }

    #[test]
    fn unanimous_inputs_pass_through() {
        for x in 0..10 {
            assert_eq!(majority3(x, x, x), x);
            assert_eq!(majority5(x, x, x, x, x), x);
        }
    }
}
