//! `plmap v1` text format: a header `plmap v1 <dlo> <dhi> <clo> <chi>`
//! followed by one `x y` node per line, all rationals as `p/q`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::rational::Rational;

use super::PLMap;

pub fn write_plmap(f: &PLMap) -> String {
    let mut s = String::with_capacity(32 * f.node_count());
    let _ = writeln!(s, "plmap v1 {} {} {} {}", f.domain_lo(), f.domain_hi(), f.codomain_lo(), f.codomain_hi());
    for (x, y) in f.nodes() {
        let _ = writeln!(s, "{x} {y}");
    }
    s
}

pub fn read_plmap(text: &str) -> Result<PLMap> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::Parse("empty plmap file".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 6 || fields[0] != "plmap" || fields[1] != "v1" {
        return Err(Error::Parse(format!("bad plmap header {header:?}")));
    }
    let parse = |s: &str| s.parse::<Rational>();
    let (dlo, dhi, clo, chi) = (parse(fields[2])?, parse(fields[3])?, parse(fields[4])?, parse(fields[5])?);
    let mut nodes = Vec::new();
    for (no, line) in lines {
        let mut it = line.split_whitespace();
        let (Some(x), Some(y), None) = (it.next(), it.next(), it.next()) else {
            return Err(Error::Parse(format!("line {}: expected `x y`", no + 1)));
        };
        nodes.push((parse(x)?, parse(y)?));
    }
    let map = PLMap::new(nodes, clo, chi)?;
    if *map.domain_lo() != dlo || *map.domain_hi() != dhi {
        return Err(Error::Parse(format!("nodes span [{}, {}] but header declares [{dlo}, {dhi}]", map.domain_lo(), map.domain_hi())));
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn round_trip_tent() {
        let t = PLMap::tent();
        let s = write_plmap(&t);
        assert_eq!(s, "plmap v1 0/1 1/1 0/1 1/1\n0/1 0/1\n1/2 1/1\n1/1 0/1\n");
        assert_eq!(read_plmap(&s).unwrap(), t);
        assert_eq!(write_plmap(&read_plmap(&s).unwrap()), s);
    }

    #[test]
    fn rejects_malformed() {
        assert!(read_plmap("").is_err());
        assert!(read_plmap("plmap v2 0 1 0 1\n0 0\n1 1\n").is_err());
        assert!(read_plmap("plmap v1 0 1 0 1\n0 0\n1\n").is_err());
        assert!(read_plmap("plmap v1 0 2 0 1\n0 0\n1 1\n").is_err());
        let f = read_plmap("plmap v1 0 1 0 1\n0 0\n0.5 1\n1 0\n").unwrap();
        assert_eq!(f.eval(&q(1, 4)).unwrap(), q(1, 2));
    }
}
