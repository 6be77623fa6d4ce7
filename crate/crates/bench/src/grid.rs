//! Parameter grids such as `ell=1,2;t=0..3;c=1..2;n=1..4`.

use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("bad grid spec: {0}")]
pub struct GridError(String);

/// Values for each swept parameter. `t` is the number of constrained
/// slots, `c` the number of projected columns, `n` the number of
/// messages per amortized ciphertext.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grid {
    pub ell: Vec<usize>,
    pub t: Vec<usize>,
    pub c: Vec<usize>,
    pub n: Vec<usize>,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            ell: vec![2, 4, 6],
            t: (0..=6).collect(),
            c: vec![1, 2],
            n: vec![1, 4],
        }
    }
}

fn parse_values(s: &str) -> Result<Vec<usize>, GridError> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim) {
        let num = |x: &str| {
            x.trim()
                .parse::<usize>()
                .map_err(|_| GridError(format!("`{x}` is not a count")))
        };
        if let Some((a, b)) = part.split_once("..") {
            let (a, b) = (num(a)?, num(b)?);
            if a > b {
                return Err(GridError(format!("empty range `{part}`")));
            }
            out.extend(a..=b);
        } else {
            out.push(num(part)?);
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

impl FromStr for Grid {
    type Err = GridError;

    /// Unspecified parameters keep their defaults; ranges are inclusive.
    fn from_str(s: &str) -> Result<Self, GridError> {
        let mut g = Grid::default();
        for item in s.split(';').map(str::trim).filter(|i| !i.is_empty()) {
            let (key, vals) = item
                .split_once('=')
                .ok_or_else(|| GridError(format!("`{item}` is not key=values")))?;
            let vals = parse_values(vals)?;
            match key.trim() {
                "ell" | "l" => g.ell = vals,
                "t" => g.t = vals,
                "c" => g.c = vals,
                "n" => g.n = vals,
                other => return Err(GridError(format!("unknown parameter `{other}`"))),
            }
        }
        if g.ell.contains(&0) || g.c.contains(&0) || g.n.contains(&0) {
            return Err(GridError("ell, c and n must be positive".into()));
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lists_and_ranges() {
        let g: Grid = "ell=1,2;t=0..3;c=1..2;n=1..4".parse().unwrap();
        assert_eq!(g.ell, [1, 2]);
        assert_eq!(g.t, [0, 1, 2, 3]);
        assert_eq!(g.c, [1, 2]);
        assert_eq!(g.n, [1, 2, 3, 4]);
        let g: Grid = " t = 3 ; ell=4,2,4".parse().unwrap();
        assert_eq!(g.ell, [2, 4]);
        assert_eq!(g.t, [3]);
        assert_eq!(g.c, Grid::default().c);
    }

    #[test]
    fn rejects_bad_specs() {
        for bad in ["ell", "x=1", "t=3..1", "ell=0", "t=a", "c=1,,2"] {
            assert!(bad.parse::<Grid>().is_err(), "{bad}");
        }
    }
}
