//! Plain-text landmark files: one `x y` pair per line, `#` comments and
//! blank lines allowed. This is the minimal format published baseline
//! outputs tend to use, so they can be evaluated without adapters.

use std::fs;
use std::path::Path;

use seamtrace_core::{Error, Point, Result};

pub fn read_landmarks(path: impl AsRef<Path>) -> Result<Vec<Point>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let parse = |tok: Option<&str>| -> Result<f64> {
            tok.and_then(|t| t.parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    Error::Annotation(format!(
                        "{}: malformed landmark on line {}: {raw:?}",
                        path.display(),
                        lineno + 1
                    ))
                })
        };
        let x = parse(it.next())?;
        let y = parse(it.next())?;
        if it.next().is_some() {
            return Err(Error::Annotation(format!(
                "{}: malformed landmark on line {}: {raw:?}",
                path.display(),
                lineno + 1
            )));
        }
        out.push(Point::new(x, y));
    }
    if out.len() < 2 {
        return Err(Error::Annotation(format!(
            "{}: need at least 2 landmarks, got {}",
            path.display(),
            out.len()
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn parses_landmarks_with_comments() {
        let f = write_tmp("# header\n1.5 2.5\n\n3 4 # trailing note\n");
        let lms = read_landmarks(f.path()).unwrap();
        assert_eq!(lms, vec![Point::new(1.5, 2.5), Point::new(3.0, 4.0)]);
    }

    #[test]
    fn malformed_line_is_named() {
        let f = write_tmp("1 2\nbogus line\n3 4\n");
        let err = read_landmarks(f.path()).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn too_few_landmarks_error() {
        let f = write_tmp("1 2\n");
        assert!(read_landmarks(f.path()).is_err());
    }
}
