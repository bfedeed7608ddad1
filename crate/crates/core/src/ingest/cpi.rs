use std::collections::BTreeMap;
use std::io::Read;

use super::Table;
use crate::error::{Error, Result};
use crate::quarter::Quarter;

/// Monthly price index with the quarter whose prices real fares are
/// expressed in. Quarters are deflated by their last month.
#[derive(Debug, Clone, PartialEq)]
pub struct CpiSeries {
    index: BTreeMap<(i32, u32), f64>,
    pub base_quarter: Quarter,
}

impl CpiSeries {
    pub fn new(
        entries: impl IntoIterator<Item = ((i32, u32), f64)>,
        base_quarter: Quarter,
    ) -> Result<Self> {
        let mut index = BTreeMap::new();
        for ((year, month), value) in entries {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidCpi { year, month, value });
            }
            index.insert((year, month), value);
        }
        Ok(CpiSeries {
            index,
            base_quarter,
        })
    }

    /// Parse a `YEAR,MONTH,INDEX` file. Any bad row is fatal: a deflator
    /// with holes would silently bias every fare.
    pub fn from_csv<R: Read>(reader: R, base_quarter: Quarter) -> Result<Self> {
        let mut table = Table::new("cpi", reader, &["YEAR", "MONTH", "INDEX"], &[])?;
        let mut entries = Vec::new();
        for row in table.rows() {
            let row = row.map_err(|e| Error::Parse(format!("cpi {e}")))?;
            let parsed = (|| {
                Ok::<_, super::RowError>((
                    (row.parse::<i32>(0, "YEAR")?, row.parse::<u32>(1, "MONTH")?),
                    row.parse::<f64>(2, "INDEX")?,
                ))
            })()
            .map_err(|e| Error::Parse(format!("cpi {e}")))?;
            entries.push(parsed);
        }
        CpiSeries::new(entries, base_quarter)
    }

    pub fn month(&self, year: i32, month: u32) -> Result<f64> {
        self.index
            .get(&(year, month))
            .copied()
            .ok_or(Error::MissingCpi { year, month })
    }

    /// Index of the last month of `q`.
    pub fn quarter_index(&self, q: Quarter) -> Result<f64> {
        self.month(q.year(), q.last_month())
    }

    /// Multiplier converting `from`-quarter dollars to `to`-quarter dollars.
    pub fn ratio(&self, from: Quarter, to: Quarter) -> Result<f64> {
        Ok(self.quarter_index(to)? / self.quarter_index(from)?)
    }
}

/// Express a nominal fare from `quarter` in base-quarter dollars.
pub fn deflate(nominal: f64, quarter: Quarter, cpi: &CpiSeries) -> Result<f64> {
    Ok(nominal * cpi.ratio(quarter, cpi.base_quarter)?)
}
