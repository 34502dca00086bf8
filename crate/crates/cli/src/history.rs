//! Training-curve CSV files.

use std::path::Path;

use noisim::rl::HistoryRow;

use crate::error::{CliError, Result};

pub fn write_history(path: &Path, rows: &[HistoryRow]) -> Result<()> {
    let data = |e: csv::Error| CliError::Data(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(data)?;
    for r in rows {
        w.serialize(r).map_err(data)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_history(path: &Path) -> Result<Vec<HistoryRow>> {
    let data = |e: csv::Error| CliError::Data(format!("{}: {e}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(data)?;
    let rows = r.deserialize().collect::<std::result::Result<Vec<HistoryRow>, _>>().map_err(data)?;
    if rows.windows(2).any(|w| w[0].episode >= w[1].episode) {
        return Err(CliError::Data(format!("{}: episode column is not increasing", path.display())));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.csv");
        let row = |episode| HistoryRow {
            episode,
            train_fid: 0.9,
            train_fid_std: 0.01,
            test_fid: 0.8,
            test_fid_std: 0.02,
            train_td: 0.1,
            train_td_std: 0.0,
            test_td: 0.2,
            test_td_std: 0.03,
        };
        let rows = vec![row(0), row(1000)];
        write_history(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("episode,train_fid,train_fid_std,test_fid,test_fid_std,train_td,train_td_std,test_td,test_td_std\n"));
        assert_eq!(read_history(&path).unwrap(), rows);
        write_history(&path, &[row(5), row(5)]).unwrap();
        assert!(read_history(&path).is_err());
    }
}
