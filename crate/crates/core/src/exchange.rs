//! Text exchange format for matrices, used by tests and external oracles.
//!
//! UTF-8, first line `dims: d1 d2 ...`, then one row per line with entries
//! `re+imj` separated by single spaces (`j` marks the imaginary unit).

use crate::error::{QdError, Result};
use crate::linalg::{C64, CMatrix};

pub fn format_complex(c: C64) -> String {
    if c.im >= 0.0 || c.im.is_nan() {
        format!("{}+{}j", c.re, c.im)
    } else {
        format!("{}-{}j", c.re, -c.im)
    }
}

pub fn parse_complex(s: &str) -> Result<C64> {
    let s = s.trim();
    let body = s
        .strip_suffix('j')
        .ok_or_else(|| QdError::Parse(format!("complex entry `{s}` missing j suffix")))?;
    // split at the sign that separates real and imaginary parts; skip the
    // leading sign and any exponent sign
    let mut split = None;
    let bytes = body.as_bytes();
    for (i, &b) in bytes.iter().enumerate().skip(1) {
        if (b == b'+' || b == b'-') && bytes[i - 1] != b'e' && bytes[i - 1] != b'E' {
            split = Some(i);
        }
    }
    let i = split.ok_or_else(|| QdError::Parse(format!("complex entry `{s}` has no imaginary part")))?;
    let re: f64 = body[..i]
        .parse()
        .map_err(|_| QdError::Parse(format!("bad real part in `{s}`")))?;
    let im_str = &body[i..];
    let im: f64 = if im_str == "+" || im_str == "-" {
        return Err(QdError::Parse(format!("bad imaginary part in `{s}`")));
    } else {
        im_str
            .parse()
            .map_err(|_| QdError::Parse(format!("bad imaginary part in `{s}`")))?
    };
    Ok(C64::new(re, im))
}

pub fn render_matrix(dims: &[usize], matrix: &CMatrix) -> String {
    let mut out = String::from("dims:");
    for d in dims {
        out.push_str(&format!(" {d}"));
    }
    out.push('\n');
    for i in 0..matrix.nrows() {
        let row: Vec<String> = (0..matrix.ncols())
            .map(|j| format_complex(matrix[(i, j)]))
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_matrix(text: &str) -> Result<(Vec<usize>, CMatrix)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| QdError::Parse("empty matrix document".into()))?;
    let header = header
        .strip_prefix("dims:")
        .ok_or_else(|| QdError::Parse("first line must start with `dims:`".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| QdError::Parse(format!("bad dimension `{t}`"))))
        .collect::<Result<_>>()?;
    if dims.is_empty() {
        return Err(QdError::Parse("no dimensions listed".into()));
    }
    let side: usize = dims.iter().product();
    let mut entries = Vec::with_capacity(side * side);
    let mut rows = 0usize;
    for line in lines {
        let row: Vec<C64> = line
            .split_whitespace()
            .map(parse_complex)
            .collect::<Result<_>>()?;
        if row.len() != side {
            return Err(QdError::Parse(format!(
                "row {} has {} entries, expected {}",
                rows + 1,
                row.len(),
                side
            )));
        }
        entries.extend(row);
        rows += 1;
    }
    if rows != side {
        return Err(QdError::Parse(format!("{rows} rows, expected {side}")));
    }
    Ok((dims, CMatrix::from_row_slice(side, side, &entries)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sigma_y;

    #[test]
    fn complex_round_trip() {
        for c in [
            C64::new(1.0, 0.0),
            C64::new(-0.5, -0.25),
            C64::new(0.0, 1e-9),
            C64::new(1.5e-300, -2.0),
        ] {
            assert_eq!(parse_complex(&format_complex(c)).unwrap(), c);
        }
    }

    #[test]
    fn matrix_round_trip() {
        let m = sigma_y();
        let text = render_matrix(m.dims(), m.matrix());
        let (dims, parsed) = parse_matrix(&text).unwrap();
        assert_eq!(dims, vec![2]);
        assert_eq!(&parsed, m.matrix());
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(parse_matrix("rows: 2").is_err());
        assert!(parse_matrix("dims: 2\n1+0j\n0+0j 1+0j\n").is_err());
        assert!(parse_complex("1.0").is_err());
        assert!(parse_complex("j").is_err());
    }
}
