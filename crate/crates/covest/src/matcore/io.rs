//! Plain-text matrix serialization.
//!
//! Format: a header line `sym p` / `herm p` / `toep p`, then the values
//! row-major and whitespace-separated (complex entries as `re,im`). Float
//! formatting uses the shortest representation that parses back to the
//! identical bits, so round trips are exact.

use super::{HermMatrix, MatError, SymMatrix, ToeplitzCol};
use num_complex::Complex64;
use std::fmt;
use std::io::{BufRead, Write};

#[derive(Debug)]
pub enum IoError {
    Io(std::io::Error),
    Parse(String),
    /// Parsed values violate a construction invariant (symmetry, range).
    Invalid(MatError),
}

impl fmt::Display for IoError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IoError::Io(e) => write!(f, "io error: {e}"),
            IoError::Parse(msg) => write!(f, "parse error: {msg}"),
            IoError::Invalid(e) => write!(f, "invalid matrix data: {e}"),
        }
    }
}

impl std::error::Error for IoError {}

impl From<std::io::Error> for IoError {
    fn from(e: std::io::Error) -> Self {
        IoError::Io(e)
    }
}

pub fn write_sym<W: Write>(w: &mut W, a: &SymMatrix) -> Result<(), IoError> {
    writeln!(w, "sym {}", a.dim())?;
    for i in 0..a.dim() {
        let row: Vec<String> = (0..a.dim()).map(|j| format!("{}", a.get(i, j))).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

pub fn write_herm<W: Write>(w: &mut W, a: &HermMatrix) -> Result<(), IoError> {
    writeln!(w, "herm {}", a.dim())?;
    for i in 0..a.dim() {
        let row: Vec<String> = (0..a.dim())
            .map(|j| {
                let v = a.get(i, j);
                format!("{},{}", v.re, v.im)
            })
            .collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

pub fn write_toep<W: Write>(w: &mut W, t: &ToeplitzCol) -> Result<(), IoError> {
    writeln!(w, "toep {}", t.dim())?;
    let vals: Vec<String> = t.col().iter().map(|v| format!("{v}")).collect();
    writeln!(w, "{}", vals.join(" "))?;
    Ok(())
}

fn read_header<R: BufRead>(r: &mut R, expect: &str) -> Result<usize, IoError> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    let mut it = line.split_whitespace();
    let tag = it.next().ok_or_else(|| IoError::Parse("empty header".into()))?;
    if tag != expect {
        return Err(IoError::Parse(format!("expected header '{expect}', got '{tag}'")));
    }
    let dim: usize = it
        .next()
        .ok_or_else(|| IoError::Parse("missing dimension".into()))?
        .parse()
        .map_err(|e| IoError::Parse(format!("bad dimension: {e}")))?;
    if dim == 0 {
        return Err(IoError::Parse("dimension must be at least 1".into()));
    }
    Ok(dim)
}

fn read_floats<R: BufRead>(r: &mut R, count: usize) -> Result<Vec<f64>, IoError> {
    let mut vals = Vec::with_capacity(count);
    let mut line = String::new();
    while vals.len() < count {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Err(IoError::Parse(format!("expected {count} values, found {}", vals.len())));
        }
        for tok in line.split_whitespace() {
            let v: f64 =
                tok.parse().map_err(|e| IoError::Parse(format!("bad value '{tok}': {e}")))?;
            vals.push(v);
        }
    }
    if vals.len() != count {
        return Err(IoError::Parse(format!("expected {count} values, found {}", vals.len())));
    }
    Ok(vals)
}

fn read_complexes<R: BufRead>(r: &mut R, count: usize) -> Result<Vec<Complex64>, IoError> {
    let mut vals = Vec::with_capacity(count);
    let mut line = String::new();
    while vals.len() < count {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Err(IoError::Parse(format!("expected {count} values, found {}", vals.len())));
        }
        for tok in line.split_whitespace() {
            let (re_s, im_s) = tok
                .split_once(',')
                .ok_or_else(|| IoError::Parse(format!("complex value '{tok}' missing comma")))?;
            let re: f64 =
                re_s.parse().map_err(|e| IoError::Parse(format!("bad value '{re_s}': {e}")))?;
            let im: f64 =
                im_s.parse().map_err(|e| IoError::Parse(format!("bad value '{im_s}': {e}")))?;
            vals.push(Complex64::new(re, im));
        }
    }
    if vals.len() != count {
        return Err(IoError::Parse(format!("expected {count} values, found {}", vals.len())));
    }
    Ok(vals)
}

pub fn read_sym<R: BufRead>(r: &mut R) -> Result<SymMatrix, IoError> {
    let p = read_header(r, "sym")?;
    let vals = read_floats(r, p * p)?;
    let rows: Vec<Vec<f64>> = (0..p).map(|i| vals[i * p..(i + 1) * p].to_vec()).collect();
    SymMatrix::from_rows(&rows).map_err(IoError::Invalid)
}

pub fn read_herm<R: BufRead>(r: &mut R) -> Result<HermMatrix, IoError> {
    let m = read_header(r, "herm")?;
    let vals = read_complexes(r, m * m)?;
    for i in 0..m {
        if vals[i * m + i].im != 0.0 {
            return Err(IoError::Parse("diagonal imaginary parts must be zero".into()));
        }
        for j in 0..i {
            if vals[i * m + j] != vals[j * m + i].conj() {
                return Err(IoError::Parse("matrix is not hermitian".into()));
            }
        }
    }
    Ok(HermMatrix::from_fn_lower(m, |i, j| vals[i * m + j]))
}

pub fn read_toep<R: BufRead>(r: &mut R) -> Result<ToeplitzCol, IoError> {
    let p = read_header(r, "toep")?;
    let vals = read_floats(r, p)?;
    Ok(ToeplitzCol::new(vals))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sym_round_trip_is_bit_exact() {
        let a = SymMatrix::from_fn_lower(4, |i, j| {
            // awkward 17-significant-digit values
            (1.0 / 3.0) * (i as f64 + 1.0) - 0.12345678901234567 * (j as f64)
        });
        let mut buf = Vec::new();
        write_sym(&mut buf, &a).unwrap();
        let back = read_sym(&mut buf.as_slice()).unwrap();
        assert_eq!(a, back);
    }

    #[test]
    fn herm_round_trip_is_bit_exact() {
        let a = HermMatrix::from_fn_lower(3, |i, j| {
            Complex64::new(0.1 * (i as f64) + 1.0 / 7.0, if i == j { 0.0 } else { -2.0 / 3.0 })
        });
        let mut buf = Vec::new();
        write_herm(&mut buf, &a).unwrap();
        let back = read_herm(&mut buf.as_slice()).unwrap();
        assert_eq!(a, back);
    }

    #[test]
    fn toep_round_trip_is_bit_exact() {
        let t = ToeplitzCol::new(vec![1.0, -0.333333333333333314829616256247, 1e-17]);
        let mut buf = Vec::new();
        write_toep(&mut buf, &t).unwrap();
        let back = read_toep(&mut buf.as_slice()).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn rejects_wrong_header_and_asymmetry() {
        let t = ToeplitzCol::new(vec![1.0]);
        let mut buf = Vec::new();
        write_toep(&mut buf, &t).unwrap();
        assert!(read_sym(&mut buf.as_slice()).is_err());

        let bad = b"sym 2\n1 2\n3 4\n";
        assert!(matches!(read_sym(&mut bad.as_slice()), Err(IoError::Invalid(_))));
    }
}
