//! Plain-text point sets: one `x y z` triple per line, `#` starts a comment.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Configuration, UnitVector};

/// Points whose norm is further than this from 1 are rejected.
pub const NORM_TOLERANCE: f64 = 1e-6;

pub fn parse(text: &str) -> Result<Configuration> {
    read(text.as_bytes())
}

pub fn read<R: BufRead>(reader: R) -> Result<Configuration> {
    let mut points = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let body = match line.find('#') {
            Some(k) => &line[..k],
            None => &line[..],
        };
        let body = body.trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected 3 fields, found {}", fields.len()),
            });
        }
        let mut xyz = [0.0f64; 3];
        for (slot, field) in xyz.iter_mut().zip(&fields) {
            *slot = field.parse().map_err(|e| Error::Parse {
                line: lineno,
                msg: format!("bad number {field:?}: {e}"),
            })?;
        }
        let n = (xyz[0] * xyz[0] + xyz[1] * xyz[1] + xyz[2] * xyz[2]).sqrt();
        if !((n - 1.0).abs() <= NORM_TOLERANCE) {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("norm {n} deviates from 1 by more than {NORM_TOLERANCE}"),
            });
        }
        points.push(UnitVector::new(xyz[0], xyz[1], xyz[2])?);
    }
    Configuration::new(points)
}

pub fn load(path: impl AsRef<Path>) -> Result<Configuration> {
    let file = std::fs::File::open(path)?;
    read(std::io::BufReader::new(file))
}

/// Renders each coordinate with 17 significant digits.
pub fn format(cfg: &Configuration, header: &[&str]) -> String {
    let mut out = String::new();
    for h in header {
        let _ = writeln!(out, "# {h}");
    }
    for p in cfg.points() {
        let _ = writeln!(out, "{:.16e} {:.16e} {:.16e}", p.x(), p.y(), p.z());
    }
    out
}

pub fn save(path: impl AsRef<Path>, cfg: &Configuration, header: &[&str]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(format(cfg, header).as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn comments_and_blank_lines() {
        let cfg = parse("# octahedron half\n1 0 0\n\n0 1 0 # trailing\n  0 0 1\n").unwrap();
        assert_eq!(cfg.len(), 3);
        assert_eq!(cfg.points()[1], UnitVector::E2);
    }

    #[test]
    fn renormalizes_small_deviation() {
        let cfg = parse("1.0000005 0 0\n").unwrap();
        assert_eq!(cfg.points()[0].x(), 1.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(parse("1.1 0 0\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse("1 0 0\n0 1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse("1 0 x\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(
            parse("1 0 0\n1 0 0\n"),
            Err(Error::CoincidentPoints { .. })
        ));
        assert!(parse("# nothing\n").is_err());
    }

    proptest! {
        #[test]
        fn reload_round_trips(coords in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 1..20)) {
            let pts: Vec<_> = coords.iter().filter_map(|&(x, y, z)| {
                if x * x + y * y + z * z < 1e-6 { None } else { UnitVector::new(x, y, z).ok() }
            }).collect();
            prop_assume!(!pts.is_empty());
            let Ok(cfg) = Configuration::new(pts) else { return Ok(()); };
            let text = format(&cfg, &["roundtrip"]);
            let back = parse(&text).unwrap();
            for (a, b) in cfg.points().iter().zip(back.points()) {
                // renormalization on load may move the last bit
                prop_assert!((a.x() - b.x()).abs() <= 1e-15);
                prop_assert!((a.y() - b.y()).abs() <= 1e-15);
                prop_assert!((a.z() - b.z()).abs() <= 1e-15);
            }
        }
    }
}
