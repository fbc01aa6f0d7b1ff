//! Reader/writer for the subset of TSPLIB95 used here: symmetric `TSP`
//! instances with `EDGE_WEIGHT_TYPE` `EUC_2D` or `EXPLICIT` + `FULL_MATRIX`.

use std::fmt::Write as _;
use std::path::Path;

use super::instance::{DistanceMatrix, TspInstance};
use crate::error::{Error, Result};

/// TSPLIB `nint`: round half away from zero.
pub fn nint(x: f64) -> f64 {
    (x + 0.5).floor()
}

pub fn parse_tsplib(path: impl AsRef<Path>) -> Result<TspInstance> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let fallback = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_tsplib_str(&text, &fallback)
}

#[derive(Clone, Copy, PartialEq)]
enum WeightType {
    Euc2d,
    Explicit,
}

pub fn parse_tsplib_str(text: &str, default_name: &str) -> Result<TspInstance> {
    let mut name = default_name.to_string();
    let mut dimension: Option<usize> = None;
    let mut weight_type: Option<WeightType> = None;
    let mut weight_format: Option<String> = None;
    let mut lines = text.lines().enumerate().peekable();

    let mut coords: Vec<(f64, f64)> = Vec::new();
    let mut explicit: Vec<f64> = Vec::new();

    while let Some((lineno, raw)) = lines.next() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line == "EOF" {
            break;
        }
        if line.starts_with("NODE_COORD_SECTION") || line.starts_with("EDGE_WEIGHT_SECTION") {
            let n = dimension.ok_or_else(|| Error::Malformed("data section before DIMENSION".into()))?;
            let is_coords = line.starts_with("NODE_COORD_SECTION");
            // consume numeric lines until the next keyword
            while let Some(&(ln, next)) = lines.peek() {
                let t = next.trim();
                if t.is_empty() {
                    lines.next();
                    continue;
                }
                if t.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) {
                    break;
                }
                lines.next();
                let fields: Vec<&str> = t.split_whitespace().collect();
                if is_coords {
                    if fields.len() != 3 {
                        return Err(Error::Parse {
                            line: ln + 1,
                            message: format!("expected `id x y`, found `{t}`"),
                        });
                    }
                    let num = |s: &str| {
                        s.parse::<f64>().map_err(|_| Error::Parse {
                            line: ln + 1,
                            message: format!("bad number `{s}`"),
                        })
                    };
                    coords.push((num(fields[1])?, num(fields[2])?));
                } else {
                    for f in fields {
                        explicit.push(f.parse::<f64>().map_err(|_| Error::Parse {
                            line: ln + 1,
                            message: format!("bad number `{f}`"),
                        })?);
                    }
                }
            }
            if is_coords && coords.len() != n {
                return Err(Error::Malformed(format!(
                    "DIMENSION is {n} but {} coordinate records found",
                    coords.len()
                )));
            }
            continue;
        }
        let (key, value) = line.split_once(':').ok_or_else(|| Error::Parse {
            line: lineno + 1,
            message: format!("expected `KEY : VALUE`, found `{line}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "NAME" => name = value.to_string(),
            "TYPE" => {
                if value != "TSP" {
                    return Err(Error::UnsupportedFormat(format!("TYPE {value}")));
                }
            }
            "DIMENSION" => {
                dimension = Some(value.parse().map_err(|_| Error::Parse {
                    line: lineno + 1,
                    message: format!("bad DIMENSION `{value}`"),
                })?)
            }
            "EDGE_WEIGHT_TYPE" => {
                weight_type = Some(match value {
                    "EUC_2D" => WeightType::Euc2d,
                    "EXPLICIT" => WeightType::Explicit,
                    other => return Err(Error::UnsupportedFormat(format!("EDGE_WEIGHT_TYPE {other}"))),
                })
            }
            "EDGE_WEIGHT_FORMAT" => {
                if value != "FULL_MATRIX" {
                    return Err(Error::UnsupportedFormat(format!("EDGE_WEIGHT_FORMAT {value}")));
                }
                weight_format = Some(value.to_string());
            }
            "COMMENT" | "DISPLAY_DATA_TYPE" | "NODE_COORD_TYPE" => {}
            other => {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: format!("unknown keyword `{other}`"),
                })
            }
        }
    }

    let n = dimension.ok_or_else(|| Error::Malformed("missing DIMENSION".into()))?;
    match weight_type.ok_or_else(|| Error::Malformed("missing EDGE_WEIGHT_TYPE".into()))? {
        WeightType::Euc2d => {
            if coords.len() != n {
                return Err(Error::Malformed(format!(
                    "DIMENSION is {n} but {} coordinate records found",
                    coords.len()
                )));
            }
            let dist = DistanceMatrix::from_fn(n, |i, j| {
                let (dx, dy) = (coords[i].0 - coords[j].0, coords[i].1 - coords[j].1);
                nint((dx * dx + dy * dy).sqrt())
            });
            TspInstance::new(name, Some(coords), dist)
        }
        WeightType::Explicit => {
            if weight_format.is_none() {
                return Err(Error::Malformed("EXPLICIT weights need EDGE_WEIGHT_FORMAT".into()));
            }
            if explicit.len() != n * n {
                return Err(Error::Malformed(format!(
                    "FULL_MATRIX needs {} entries, found {}",
                    n * n,
                    explicit.len()
                )));
            }
            let dist = DistanceMatrix::from_fn(n, |i, j| explicit[i * n + j]);
            let coords = (!coords.is_empty()).then_some(coords);
            TspInstance::new(name, coords, dist)
        }
    }
}

/// Writes the instance as `EXPLICIT` / `FULL_MATRIX`.
pub fn write_full_matrix(instance: &TspInstance) -> String {
    let n = instance.n_cities();
    let mut out = String::new();
    let _ = writeln!(out, "NAME : {}", instance.name());
    let _ = writeln!(out, "TYPE : TSP");
    let _ = writeln!(out, "DIMENSION : {n}");
    let _ = writeln!(out, "EDGE_WEIGHT_TYPE : EXPLICIT");
    let _ = writeln!(out, "EDGE_WEIGHT_FORMAT : FULL_MATRIX");
    let _ = writeln!(out, "EDGE_WEIGHT_SECTION");
    for row in instance.dist_original().rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        let _ = writeln!(out, "{}", cells.join(" "));
    }
    out.push_str("EOF\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRIANGLE: &str = "NAME : tri\nTYPE : TSP\nCOMMENT : 3-4-5\nDIMENSION : 3\nEDGE_WEIGHT_TYPE : EUC_2D\nNODE_COORD_SECTION\n1 0 0\n2 3 0\n3 0 4\nEOF\n";

    #[test]
    fn euc2d_triangle() {
        let inst = parse_tsplib_str(TRIANGLE, "x").unwrap();
        assert_eq!(inst.name(), "tri");
        let d = inst.dist_original();
        assert_eq!(d.get(0, 1), 3.0);
        assert_eq!(d.get(0, 2), 4.0);
        assert_eq!(d.get(1, 2), 5.0);
        assert!(inst.outside_benchmark_size_range());
    }

    #[test]
    fn euc2d_rounds_to_nearest() {
        let text = "NAME : r\nTYPE : TSP\nDIMENSION : 3\nEDGE_WEIGHT_TYPE : EUC_2D\nNODE_COORD_SECTION\n1 0 0\n2 1 1\n3 2.5 0\nEOF\n";
        let inst = parse_tsplib_str(text, "r").unwrap();
        // sqrt(2) = 1.414 -> 1, 2.5 -> 3 (half away from zero), sqrt(3.25) = 1.80 -> 2
        assert_eq!(inst.dist_original().get(0, 1), 1.0);
        assert_eq!(inst.dist_original().get(0, 2), 3.0);
        assert_eq!(inst.dist_original().get(1, 2), 2.0);
    }

    #[test]
    fn missing_coordinate_is_malformed() {
        let text = "NAME : bad\nTYPE : TSP\nDIMENSION : 3\nEDGE_WEIGHT_TYPE : EUC_2D\nNODE_COORD_SECTION\n1 0 0\n2 3 0\nEOF\n";
        assert!(matches!(parse_tsplib_str(text, "b"), Err(Error::Malformed(_))));
    }

    #[test]
    fn unsupported_weight_type() {
        let text = TRIANGLE.replace("EUC_2D", "GEO");
        assert!(matches!(parse_tsplib_str(&text, "g"), Err(Error::UnsupportedFormat(_))));
    }

    #[test]
    fn malformed_header() {
        let text = "NAME tri\nDIMENSION : 3\n";
        assert!(matches!(parse_tsplib_str(text, "m"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn full_matrix_round_trip() {
        let text = "NAME : m\nTYPE : TSP\nDIMENSION : 3\nEDGE_WEIGHT_TYPE : EXPLICIT\nEDGE_WEIGHT_FORMAT : FULL_MATRIX\nEDGE_WEIGHT_SECTION\n0 2 9\n2 0 6\n9 6 0\nEOF\n";
        let inst = parse_tsplib_str(text, "m").unwrap();
        assert_eq!(inst.dist_original().rows(), vec![vec![0.0, 2.0, 9.0], vec![2.0, 0.0, 6.0], vec![9.0, 6.0, 0.0]]);
        let again = parse_tsplib_str(&write_full_matrix(&inst), "m").unwrap();
        assert_eq!(again, inst);
    }
}
