//! Line-oriented text format for triangulations.
//!
//! ```text
//! tqft-tri v1
//! tets 2
//! signs +1 -1
//! glue 0 0 1 2
//! gamma 1
//! angles 0 1/3 1/3 1/3
//! ```
//!
//! `#` starts a comment. Angles are in units of π and may be written as
//! decimals or fractions; both are read exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed};
use thiserror::Error;

use super::{build_triangulation, FaceSlot, MeshError, Sign, Triangulation};
use crate::scalar::parse_rational;
use crate::Rational;

pub const HEADER: &str = "tqft-tri v1";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodecError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{0}")]
    Semantic(#[from] MeshError),
}

/// A parsed file: the complex plus any per-tetrahedron angle triples.
#[derive(Clone, Debug, PartialEq)]
pub struct TriFile {
    pub triangulation: Triangulation,
    pub angles: BTreeMap<usize, [Rational; 3]>,
}

impl TriFile {
    pub fn new(triangulation: Triangulation) -> Self {
        TriFile { triangulation, angles: BTreeMap::new() }
    }
}

struct Tok<'a> {
    text: &'a str,
    column: usize,
}

fn tokens(line: &str) -> Vec<Tok<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Tok { text: &line[s..i], column: line[..s].chars().count() + 1 });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Tok { text: &line[s..], column: line[..s].chars().count() + 1 });
    }
    out
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> CodecError {
    CodecError::Syntax { line, column, message: message.into() }
}

fn int(line: usize, t: &Tok<'_>) -> Result<usize, CodecError> {
    t.text.parse().map_err(|_| syntax(line, t.column, format!("expected a non-negative integer, found `{}`", t.text)))
}

pub fn parse(text: &str) -> Result<TriFile, CodecError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("")))
        .filter(|(_, l)| !l.trim().is_empty());

    let (ln, l) = lines.next().ok_or_else(|| syntax(1, 1, "empty document"))?;
    if tokens(l).iter().map(|t| t.text).collect::<Vec<_>>() != ["tqft-tri", "v1"] {
        return Err(syntax(ln, 1, format!("expected header `{HEADER}`")));
    }

    let (ln, l) = lines.next().ok_or_else(|| syntax(ln + 1, 1, "missing `tets` line"))?;
    let toks = tokens(l);
    if toks.len() != 2 || toks[0].text != "tets" {
        return Err(syntax(ln, 1, "expected `tets <n>`"));
    }
    let n = int(ln, &toks[1])?;

    let (ln, l) = lines.next().ok_or_else(|| syntax(ln + 1, 1, "missing `signs` line"))?;
    let toks = tokens(l);
    if toks.first().map(|t| t.text) != Some("signs") {
        return Err(syntax(ln, 1, "expected `signs`"));
    }
    if toks.len() != n + 1 {
        let col = toks.get(n + 1).map_or(l.len() + 1, |t| t.column);
        return Err(syntax(ln, col, format!("expected {n} signs, found {}", toks.len() - 1)));
    }
    let mut signs = Vec::with_capacity(n);
    for t in &toks[1..] {
        signs.push(match t.text {
            "+1" | "1" | "+" => Sign::Positive,
            "-1" | "-" => Sign::Negative,
            other => return Err(syntax(ln, t.column, format!("sign must be +1 or -1, found `{other}`"))),
        });
    }

    let mut gluings = Vec::new();
    let mut gamma = Vec::new();
    let mut angles = BTreeMap::new();
    for (ln, l) in lines {
        let toks = tokens(l);
        match toks[0].text {
            "glue" => {
                if toks.len() != 5 {
                    return Err(syntax(ln, toks[0].column, "expected `glue <t> <f> <t'> <f'>`"));
                }
                let v: Vec<usize> = toks[1..].iter().map(|t| int(ln, t)).collect::<Result<_, _>>()?;
                for (k, &f) in [v[1], v[3]].iter().enumerate() {
                    if f > 3 {
                        return Err(syntax(ln, toks[2 + 2 * k].column, "face index must be 0..3"));
                    }
                }
                gluings.push((FaceSlot::new(v[0], v[1] as u8), FaceSlot::new(v[2], v[3] as u8)));
            }
            "gamma" => {
                for t in &toks[1..] {
                    gamma.push(int(ln, t)?);
                }
            }
            "angles" => {
                if toks.len() != 5 {
                    return Err(syntax(ln, toks[0].column, "expected `angles <t> <a> <b> <c>`"));
                }
                let t = int(ln, &toks[1])?;
                let mut triple = Vec::with_capacity(3);
                for tok in &toks[2..] {
                    triple.push(
                        parse_rational(tok.text)
                            .ok_or_else(|| syntax(ln, tok.column, format!("bad angle `{}`", tok.text)))?,
                    );
                }
                if t >= n {
                    return Err(MeshError::InvalidIndex(format!("angles for tetrahedron {t} of {n}")).into());
                }
                if angles.insert(t, [triple[0].clone(), triple[1].clone(), triple[2].clone()]).is_some() {
                    return Err(syntax(ln, toks[1].column, format!("angles for tetrahedron {t} given twice")));
                }
            }
            other => return Err(syntax(ln, toks[0].column, format!("unknown directive `{other}`"))),
        }
    }
    let triangulation = build_triangulation(&signs, &gluings, &gamma)?;
    Ok(TriFile { triangulation, angles })
}

/// Exact decimal when the denominator divides a power of ten, `p/q` otherwise.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        return r.numer().to_string();
    }
    let mut d = r.denom().clone();
    let (mut twos, mut fives) = (0u32, 0u32);
    let (two, five) = (BigInt::from(2), BigInt::from(5));
    while d.is_multiple_of(&two) {
        d /= &two;
        twos += 1;
    }
    while d.is_multiple_of(&five) {
        d /= &five;
        fives += 1;
    }
    if !d.is_one() {
        return format!("{}/{}", r.numer(), r.denom());
    }
    let digits = twos.max(fives);
    let scaled = (r.abs() * Rational::from_integer(num_traits::pow(BigInt::from(10), digits as usize))).to_integer();
    let s = format!("{:0>width$}", scaled.to_string(), width = digits as usize + 1);
    let (ip, fp) = s.split_at(s.len() - digits as usize);
    let sign = if r.is_negative() { "-" } else { "" };
    let fp = fp.trim_end_matches('0');
    if fp.is_empty() {
        format!("{sign}{ip}")
    } else {
        format!("{sign}{ip}.{fp}")
    }
}

pub fn serialize(file: &TriFile) -> String {
    let tri = &file.triangulation;
    let mut out = String::new();
    writeln!(out, "{HEADER}").unwrap();
    writeln!(out, "tets {}", tri.num_tets()).unwrap();
    let signs: Vec<&str> = tri.tets().iter().map(|t| if t.sign == Sign::Positive { "+1" } else { "-1" }).collect();
    if signs.is_empty() {
        writeln!(out, "signs").unwrap();
    } else {
        writeln!(out, "signs {}", signs.join(" ")).unwrap();
    }
    for (a, b) in tri.gluings() {
        writeln!(out, "glue {} {} {} {}", a.tet, a.face, b.tet, b.face).unwrap();
    }
    if !tri.gamma().is_empty() {
        let ids: Vec<String> = tri.gamma().iter().map(ToString::to_string).collect();
        writeln!(out, "gamma {}", ids.join(" ")).unwrap();
    }
    for (t, [a, b, c]) in &file.angles {
        writeln!(out, "angles {t} {} {} {}", format_rational(a), format_rational(b), format_rational(c)).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Scalar;

    #[test]
    fn rational_formatting() {
        let q = |n, d| Rational::from_ratio(n, d);
        assert_eq!(format_rational(&q(1, 8)), "0.125");
        assert_eq!(format_rational(&q(-3, 20)), "-0.15");
        assert_eq!(format_rational(&q(1, 3)), "1/3");
        assert_eq!(format_rational(&q(5, 1)), "5");
        assert_eq!(format_rational(&q(1, 100)), "0.01");
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = parse("tqft-tri v1\ntets 2\nsigns +1 -1\nglue 0 x 1 1\n").unwrap_err();
        assert_eq!(err, syntax(4, 8, "expected a non-negative integer, found `x`"));
        let err = parse("tqft-tri v1\ntets 1\nsigns +2\n").unwrap_err();
        assert!(matches!(err, CodecError::Syntax { line: 3, column: 7, .. }));
        assert!(matches!(parse("hello\n"), Err(CodecError::Syntax { line: 1, .. })));
    }

    #[test]
    fn semantic_error_for_out_of_range() {
        let err = parse("tqft-tri v1\ntets 2\nsigns +1 +1\nglue 7 0 0 1\n").unwrap_err();
        assert!(matches!(err, CodecError::Semantic(MeshError::InvalidIndex(_))));
    }

    #[test]
    fn empty_gluing_round_trip() {
        let text = "tqft-tri v1\ntets 1\nsigns +1\n";
        assert_eq!(serialize(&parse(text).unwrap()), text);
    }
}
