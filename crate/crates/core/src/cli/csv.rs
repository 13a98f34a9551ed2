use std::fs;
use std::io;
use std::path::Path;

use crate::report::Table;

/// Header row, then one row per record; values in `{:.16e}` (17 significant digits).
pub fn table_to_csv(table: &Table) -> String {
    let mut out = table.columns.join(",");
    out.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn emit_csv(table: &Table, path: &Path) -> io::Result<()> {
    fs::write(path, table_to_csv(table))
}
