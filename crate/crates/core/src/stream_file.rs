//! Plain-text sample and bit streams used by the command-line tool.
//!
//! A samples file holds real numbers separated by any whitespace; lines
//! starting with `#` are ignored. A bits file holds the characters `0` and
//! `1`; whitespace and `#` comment lines are ignored. Writers emit one
//! sample per line and 64 bits per line.

use std::fmt::Write as _;

use crate::{Bit, Error, Result};

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub fn parse_samples(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (ln, l) in content_lines(text) {
        for tok in l.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| Error::Parse {
                line: ln,
                msg: format!("'{tok}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!("non-finite sample '{tok}'"),
                });
            }
            out.push(v);
        }
    }
    Ok(out)
}

pub fn format_samples(samples: &[f64]) -> String {
    let mut out = String::with_capacity(samples.len() * 24);
    for s in samples {
        writeln!(out, "{s:.16e}").unwrap();
    }
    out
}

pub fn parse_bits(text: &str) -> Result<Vec<Bit>> {
    let mut out = Vec::new();
    for (ln, l) in content_lines(text) {
        for c in l.chars().filter(|c| !c.is_whitespace()) {
            match c {
                '0' => out.push(0),
                '1' => out.push(1),
                other => {
                    return Err(Error::Parse {
                        line: ln,
                        msg: format!("'{other}' is not a bit"),
                    })
                }
            }
        }
    }
    Ok(out)
}

pub fn format_bits(bits: &[Bit]) -> String {
    let mut out = String::with_capacity(bits.len() + bits.len() / 64 + 1);
    for chunk in bits.chunks(64) {
        out.extend(chunk.iter().map(|&b| if b == 0 { '0' } else { '1' }));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn comments_and_spacing() {
        assert_eq!(
            parse_samples("# hdr\n1.5 -2\n\n  3e-1\n").unwrap(),
            vec![1.5, -2.0, 0.3]
        );
        assert_eq!(parse_bits("# x\n01 1\n0\n").unwrap(), vec![0, 1, 1, 0]);
        assert!(parse_samples("1 two").is_err());
        assert!(parse_samples("nan").is_err());
        assert!(parse_bits("012").is_err());
    }

    #[test]
    fn bit_lines_wrap() {
        let text = format_bits(&[1; 130]);
        let lens: Vec<usize> = text.lines().map(str::len).collect();
        assert_eq!(lens, vec![64, 64, 2]);
        assert_eq!(format_bits(&[]), "");
    }

    proptest! {
        #[test]
        fn samples_round_trip(v in proptest::collection::vec(-1e6f64..1e6, 0..50)) {
            prop_assert_eq!(parse_samples(&format_samples(&v)).unwrap(), v);
        }

        #[test]
        fn bits_round_trip(v in proptest::collection::vec(0u8..2, 0..300)) {
            prop_assert_eq!(parse_bits(&format_bits(&v)).unwrap(), v);
        }
    }
}
