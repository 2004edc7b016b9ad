//! JSON-lines shape dump: one `{"layer":n,"rect":[x_ll,y_ll,x_ur,y_ur]}`
//! object per line, coordinates in nm.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{DbUnit, GeomError, LayerId, Rect, Shape};

#[derive(Debug, Error)]
pub enum JsonlError {
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("line {line}: {source}")]
    Geom { line: usize, source: GeomError },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Row {
    layer: LayerId,
    rect: [DbUnit; 4],
}

pub fn write_shapes<W: Write>(shapes: &[Shape], mut sink: W) -> std::io::Result<()> {
    for s in shapes {
        let row = Row { layer: s.layer, rect: s.rect.coords() };
        serde_json::to_writer(&mut sink, &row)?;
        sink.write_all(b"\n")?;
    }
    sink.flush()
}

/// Reads shapes back; blank lines are skipped.
pub fn read_shapes<R: BufRead>(source: R) -> Result<Vec<Shape>, JsonlError> {
    let mut shapes = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Row = serde_json::from_str(&line).map_err(|source| JsonlError::Json { line: i + 1, source })?;
        let [a, b, c, d] = row.rect;
        let rect = Rect::new(a, b, c, d).map_err(|source| JsonlError::Geom { line: i + 1, source })?;
        shapes.push(Shape { layer: row.layer, rect });
    }
    Ok(shapes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_format() {
        let s = Shape { layer: 2, rect: Rect::new(0, 10, 70, 80).unwrap() };
        let mut buf = Vec::new();
        write_shapes(&[s], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "{\"layer\":2,\"rect\":[0,10,70,80]}\n");
        assert_eq!(read_shapes(&buf[..]).unwrap(), vec![s]);
    }

    #[test]
    fn bad_line_reported() {
        let text = "{\"layer\":1,\"rect\":[0,0,1,1]}\n{\"layer\":1,\"rect\":[5,0,1,1]}\n";
        assert!(matches!(read_shapes(text.as_bytes()), Err(JsonlError::Geom { line: 2, .. })));
    }
}
