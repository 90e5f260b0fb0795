use std::io::Write;

use crate::error::Result;

/// A materialized output table; `None` is a null cell.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DataTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Option<String>>>,
}

impl DataTable {
    pub fn new(headers: Vec<String>) -> Self {
        DataTable {
            headers,
            rows: Vec::new(),
        }
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn col_count(&self) -> usize {
        self.headers.len()
    }

    /// Append the rows of `other`, which must have identical headers.
    pub fn append(&mut self, other: DataTable) {
        assert_eq!(self.headers, other.headers, "header mismatch");
        self.rows.extend(other.rows);
    }

    /// CSV with the null cell written as the empty string.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        self.write_csv_with_prefix(out, None)
    }

    /// Like [`DataTable::write_csv`] with an extra leading column.
    pub fn write_csv_with_prefix<W: Write>(
        &self,
        out: W,
        prefix: Option<(&str, &[String])>,
    ) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = Vec::with_capacity(self.headers.len() + 1);
        if let Some((name, _)) = prefix {
            header.push(name);
        }
        header.extend(self.headers.iter().map(String::as_str));
        writer.write_record(&header)?;
        for (i, row) in self.rows.iter().enumerate() {
            let mut record: Vec<&str> = Vec::with_capacity(row.len() + 1);
            if let Some((_, values)) = prefix {
                record.push(values[i].as_str());
            }
            record.extend(row.iter().map(|c| c.as_deref().unwrap_or("")));
            writer.write_record(&record)?;
        }
        writer.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("utf-8 input")
    }
}
