use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One recommendation in an exported episode trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub item_id: usize,
    pub category: usize,
    pub click: u8,
    pub true_p: f64,
}

pub fn write_trace_csv(path: &Path, rows: &[TraceRow]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_has_expected_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let rows = [TraceRow {
            step: 0,
            item_id: 3,
            category: 1,
            click: 1,
            true_p: 0.25,
        }];
        write_trace_csv(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "step,item_id,category,click,true_p\n0,3,1,1,0.25\n");
    }
}
