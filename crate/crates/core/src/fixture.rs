//! Plain-text fixture format.
//!
//! ```text
//! <rank> <n>
//! <n lines of integer coordinates>
//! deg <coefficients>
//! triangulation <label>
//! <one maximal cone per line, 1-based indices>
//! ```
//!
//! Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::toric::{validate_toric_data, ToricData, Triangulation};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fixture {
    pub name: String,
    pub data: ToricData,
    pub triangulations: Vec<Triangulation>,
}

const CONIFOLD: &str = include_str!("../fixtures/conifold.txt");
const A1: &str = include_str!("../fixtures/a1.txt");

impl Fixture {
    pub fn conifold() -> Fixture {
        Fixture::parse("conifold", CONIFOLD).expect("bundled fixture")
    }

    pub fn a1() -> Fixture {
        Fixture::parse("a1", A1).expect("bundled fixture")
    }

    /// Bundled fixture by name.
    pub fn bundled(name: &str) -> Option<Fixture> {
        match name {
            "conifold" => Some(Fixture::conifold()),
            "a1" => Some(Fixture::a1()),
            _ => None,
        }
    }

    pub fn bundled_text(name: &str) -> Option<&'static str> {
        match name {
            "conifold" => Some(CONIFOLD),
            "a1" => Some(A1),
            _ => None,
        }
    }

    pub fn triangulation(&self, label: &str) -> Result<&Triangulation> {
        self.triangulations
            .iter()
            .find(|t| t.label == label)
            .ok_or_else(|| Error::InvalidInput(format!("no triangulation labelled '{label}'")))
    }

    pub fn plus(&self) -> &Triangulation {
        self.triangulation("plus").expect("fixture has a 'plus' triangulation")
    }

    pub fn minus(&self) -> &Triangulation {
        self.triangulation("minus").expect("fixture has a 'minus' triangulation")
    }

    pub fn parse(name: &str, text: &str) -> Result<Fixture> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (ln, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty fixture".into() })?;
        let head = parse_ints(ln, header)?;
        if head.len() != 2 || head[0] <= 0 || head[1] <= 0 {
            return Err(Error::Parse { line: ln, msg: "expected header '<rank> <n>'".into() });
        }
        let (rank, n) = (head[0] as usize, head[1] as usize);
        let mut points = Vec::with_capacity(n);
        for _ in 0..n {
            let (ln, l) = lines
                .next()
                .ok_or(Error::Parse { line: ln, msg: "missing point lines".into() })?;
            let p = parse_ints(ln, l)?;
            if p.len() != rank {
                return Err(Error::Parse { line: ln, msg: format!("expected {rank} coordinates") });
            }
            points.push(p);
        }
        let (ln, l) = lines.next().ok_or(Error::Parse { line: ln, msg: "missing deg line".into() })?;
        let Some(rest) = l.strip_prefix("deg") else {
            return Err(Error::Parse { line: ln, msg: "missing deg line".into() });
        };
        let deg = parse_ints(ln, rest)?;
        if deg.len() != rank {
            return Err(Error::Parse { line: ln, msg: format!("deg needs {rank} coefficients") });
        }
        let mut triangulations: Vec<(String, Vec<Vec<usize>>)> = Vec::new();
        for (ln, l) in lines {
            if let Some(label) = l.strip_prefix("triangulation") {
                let label = label.trim();
                if label.is_empty() {
                    return Err(Error::Parse { line: ln, msg: "triangulation without label".into() });
                }
                triangulations.push((label.to_string(), Vec::new()));
                continue;
            }
            let Some(cur) = triangulations.last_mut() else {
                return Err(Error::Parse { line: ln, msg: "cone outside a triangulation block".into() });
            };
            let idx = parse_ints(ln, l)?;
            let mut cone = Vec::with_capacity(idx.len());
            for i in idx {
                if i < 1 || i as usize > n {
                    return Err(Error::Parse { line: ln, msg: format!("index {i} out of range") });
                }
                cone.push(i as usize - 1);
            }
            cur.1.push(cone);
        }
        let data = validate_toric_data(points, deg)?;
        let triangulations = triangulations
            .into_iter()
            .map(|(label, cones)| Triangulation::new(label, cones))
            .collect();
        Ok(Fixture { name: name.to_string(), data, triangulations })
    }

    /// Canonical text form; `parse(to_text())` reproduces the fixture.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {}", self.data.rank, self.data.n());
        for p in &self.data.points {
            let _ = writeln!(s, "{}", join(p.iter()));
        }
        let _ = writeln!(s, "deg {}", join(self.data.deg.iter()));
        for t in &self.triangulations {
            let _ = writeln!(s, "triangulation {}", t.label);
            for c in &t.maximal_cones {
                let _ = writeln!(s, "{}", join(c.iter().map(|i| i + 1)));
            }
        }
        s
    }
}

fn join<T: ToString>(it: impl Iterator<Item = T>) -> String {
    it.map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn parse_ints(line: usize, s: &str) -> Result<Vec<i64>> {
    s.split_whitespace()
        .map(|t| {
            t.parse::<i64>()
                .map_err(|_| Error::Parse { line, msg: format!("not an integer: '{t}'") })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_round_trip() {
        for name in ["conifold", "a1"] {
            let f = Fixture::bundled(name).unwrap();
            assert_eq!(f.to_text(), Fixture::bundled_text(name).unwrap());
            assert_eq!(Fixture::parse(name, &f.to_text()).unwrap(), f);
        }
    }

    #[test]
    fn missing_deg_line() {
        let e = Fixture::parse("x", "2 2\n0 1\n1 1\ntriangulation plus\n1 2\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 4, .. }));
    }

    #[test]
    fn bad_index() {
        let e = Fixture::parse("x", "2 2\n0 1\n1 1\ndeg 0 1\ntriangulation t\n1 3\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 6, .. }));
    }
}
