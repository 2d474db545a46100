//! Structured-text serialization for operators.
//!
//! The format is line-oriented: a header `<kind> <dim>` followed by the
//! payload. Full matrices (`hermitian`, `density`) list row-major entries as
//! `(re,im)` pairs, one row per line. Densities also accept two shorthands:
//! `diagonal` (a probability list) and `pure` (state-vector amplitudes as
//! `(re,im)` pairs). Numbers are written with 17 significant digits and a
//! lowercase exponent so that writes are bit-reproducible.

use num_complex::Complex64 as C64;

use crate::density::DensityOperator;
use crate::error::{Error, Result};
use crate::operator::HermitianOperator;

/// 17-significant-digit float formatting shared by all text output.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_pair(z: C64) -> String {
    format!("({},{})", fmt_f64(z.re), fmt_f64(z.im))
}

pub fn write_hermitian(op: &HermitianOperator) -> String {
    write_matrix("hermitian", op)
}

pub fn write_density(rho: &DensityOperator) -> String {
    write_matrix("density", rho.matrix())
}

fn write_matrix(kind: &str, op: &HermitianOperator) -> String {
    let n = op.dim();
    let mut out = format!("{kind} {n}\n");
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| fmt_pair(op.entries()[[i, j]])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_diagonal(probs: &[f64]) -> String {
    let mut out = format!("diagonal {}\n", probs.len());
    let row: Vec<String> = probs.iter().map(|&p| fmt_f64(p)).collect();
    out.push_str(&row.join(" "));
    out.push('\n');
    out
}

pub fn write_pure(amplitudes: &[C64]) -> String {
    let mut out = format!("pure {}\n", amplitudes.len());
    let row: Vec<String> = amplitudes.iter().map(|&z| fmt_pair(z)).collect();
    out.push_str(&row.join(" "));
    out.push('\n');
    out
}

/// Any operator the text format can describe.
#[derive(Debug, Clone)]
pub enum ParsedOperator {
    Hermitian(HermitianOperator),
    Density(DensityOperator),
}

impl ParsedOperator {
    pub fn into_hermitian(self) -> HermitianOperator {
        match self {
            ParsedOperator::Hermitian(h) => h,
            ParsedOperator::Density(d) => d.matrix().clone(),
        }
    }

    pub fn into_density(self) -> Result<DensityOperator> {
        match self {
            ParsedOperator::Hermitian(h) => DensityOperator::from_operator(h),
            ParsedOperator::Density(d) => Ok(d),
        }
    }
}

pub fn parse_operator(text: &str) -> Result<ParsedOperator> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (line_no, header) = lines.next().ok_or_else(|| Error::Parse {
        line: 0,
        message: "empty operator text".into(),
    })?;
    let mut parts = header.split_whitespace();
    let kind = parts.next().unwrap_or_default().to_ascii_lowercase();
    let dim: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .filter(|&d| d > 0)
        .ok_or_else(|| Error::Parse {
            line: line_no,
            message: format!("header must be '<kind> <dim>', got '{header}'"),
        })?;
    if parts.next().is_some() {
        return Err(Error::Parse {
            line: line_no,
            message: "trailing tokens after header".into(),
        });
    }

    match kind.as_str() {
        "hermitian" | "density" => {
            let m = parse_rows(dim, &mut lines)?;
            let op = HermitianOperator::new(m)?;
            if kind == "density" {
                Ok(ParsedOperator::Density(DensityOperator::from_operator(op)?))
            } else {
                Ok(ParsedOperator::Hermitian(op))
            }
        }
        "diagonal" => {
            let (line_no, payload) = lines.next().ok_or_else(|| Error::Parse {
                line: line_no,
                message: "missing diagonal payload".into(),
            })?;
            let vals = parse_reals(line_no, payload, dim)?;
            Ok(ParsedOperator::Density(DensityOperator::from_probabilities(
                &vals,
            )?))
        }
        "pure" => {
            let (line_no, payload) = lines.next().ok_or_else(|| Error::Parse {
                line: line_no,
                message: "missing pure-state payload".into(),
            })?;
            let amps = parse_pairs(line_no, payload, dim)?;
            Ok(ParsedOperator::Density(DensityOperator::pure(&amps)?))
        }
        other => Err(Error::Parse {
            line: line_no,
            message: format!("unknown operator kind '{other}'"),
        }),
    }
}

fn parse_rows<'a, I>(dim: usize, lines: &mut I) -> Result<ndarray::Array2<C64>>
where
    I: Iterator<Item = (usize, &'a str)>,
{
    let mut m = ndarray::Array2::zeros((dim, dim));
    for i in 0..dim {
        let (line_no, row) = lines.next().ok_or_else(|| Error::Parse {
            line: 0,
            message: format!("expected {dim} rows, got {i}"),
        })?;
        let pairs = parse_pairs(line_no, row, dim)?;
        for (j, z) in pairs.into_iter().enumerate() {
            m[[i, j]] = z;
        }
    }
    Ok(m)
}

fn parse_reals(line: usize, payload: &str, want: usize) -> Result<Vec<f64>> {
    let vals: Vec<f64> = payload
        .split_whitespace()
        .map(|t| {
            t.parse::<f64>().map_err(|_| Error::Parse {
                line,
                message: format!("invalid number '{t}'"),
            })
        })
        .collect::<Result<_>>()?;
    if vals.len() != want {
        return Err(Error::Parse {
            line,
            message: format!("expected {want} values, got {}", vals.len()),
        });
    }
    Ok(vals)
}

fn parse_pairs(line: usize, payload: &str, want: usize) -> Result<Vec<C64>> {
    let mut out = Vec::with_capacity(want);
    for token in payload.split_whitespace() {
        let inner = token
            .strip_prefix('(')
            .and_then(|t| t.strip_suffix(')'))
            .ok_or_else(|| Error::Parse {
                line,
                message: format!("expected '(re,im)' pair, got '{token}'"),
            })?;
        let (re, im) = inner.split_once(',').ok_or_else(|| Error::Parse {
            line,
            message: format!("expected '(re,im)' pair, got '{token}'"),
        })?;
        let re: f64 = re.trim().parse().map_err(|_| Error::Parse {
            line,
            message: format!("invalid real part '{re}'"),
        })?;
        let im: f64 = im.trim().parse().map_err(|_| Error::Parse {
            line,
            message: format!("invalid imaginary part '{im}'"),
        })?;
        out.push(C64::new(re, im));
    }
    if out.len() != want {
        return Err(Error::Parse {
            line,
            message: format!("expected {want} pairs, got {}", out.len()),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn hermitian_roundtrip() {
        let op = HermitianOperator::new(array![
            [C64::new(1.0, 0.0), C64::new(0.25, -0.125)],
            [C64::new(0.25, 0.125), C64::new(-0.5, 0.0)]
        ])
        .unwrap();
        let text = write_hermitian(&op);
        let back = parse_operator(&text).unwrap().into_hermitian();
        assert_eq!(op.entries(), back.entries());
    }

    #[test]
    fn density_shorthands() {
        let rho = parse_operator("diagonal 3\n0.5 0.25 0.25\n")
            .unwrap()
            .into_density()
            .unwrap();
        assert_eq!(rho.support_dim(), 3);
        assert!((rho.eigenvalues()[0] - 0.5).abs() < 1e-15);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let text = format!("pure 2\n({s},0) (0,{s})\n");
        let rho = parse_operator(&text).unwrap().into_density().unwrap();
        assert!(rho.is_projector());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_operator("hermitian 2\n(1,0) (0,0)\n(0,0) nope\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other:?}"),
        }
        assert!(parse_operator("wobble 2\n").is_err());
        assert!(parse_operator("diagonal 2\n0.5 0.6\n").is_err()); // trace
    }

    #[test]
    fn formatting_is_deterministic() {
        let rho = DensityOperator::from_probabilities(&[2.0 / 3.0, 1.0 / 3.0]).unwrap();
        assert_eq!(write_density(&rho), write_density(&rho));
        assert_eq!(fmt_f64(0.005), "5.0000000000000001e-3");
    }
}
