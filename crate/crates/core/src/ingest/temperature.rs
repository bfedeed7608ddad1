use std::collections::BTreeMap;
use std::io::Read;

use super::Table;
use crate::error::{Error, Result};
use crate::route::Route;

/// Airport to state lookup.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AirportStates(pub BTreeMap<String, String>);

impl AirportStates {
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut table = Table::new("airport-state", reader, &["AIRPORT", "STATE"], &[])?;
        let mut map = BTreeMap::new();
        for row in table.rows() {
            let row = row.map_err(|e| Error::Parse(format!("airport-state {e}")))?;
            map.insert(row.get(0).to_string(), row.get(1).to_string());
        }
        Ok(AirportStates(map))
    }

    pub fn state(&self, airport: &str) -> Option<&str> {
        self.0.get(airport).map(String::as_str)
    }
}

/// January average temperature (Fahrenheit) by state and year.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StateTemperatures(pub BTreeMap<(String, i32), f64>);

impl StateTemperatures {
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut table = Table::new("temperature", reader, &["STATE", "YEAR", "JAN_AVG_F"], &[])?;
        let mut map = BTreeMap::new();
        for row in table.rows() {
            let row = row.map_err(|e| Error::Parse(format!("temperature {e}")))?;
            let year: i32 = row
                .parse(1, "YEAR")
                .map_err(|e| Error::Parse(format!("temperature {e}")))?;
            let temp: f64 = row
                .parse(2, "JAN_AVG_F")
                .map_err(|e| Error::Parse(format!("temperature {e}")))?;
            map.insert((row.get(0).to_string(), year), temp);
        }
        Ok(StateTemperatures(map))
    }

    pub fn get(&self, state: &str, year: i32) -> Option<f64> {
        self.0.get(&(state.to_string(), year)).copied()
    }
}

/// Absolute difference in January average temperature between the states
/// of the two endpoints. `None` when either state or state-year is unknown.
pub fn temp_differential(
    route: &Route,
    year: i32,
    airports: &AirportStates,
    temps: &StateTemperatures,
) -> Option<f64> {
    let a = temps.get(airports.state(route.first())?, year)?;
    let b = temps.get(airports.state(route.second())?, year)?;
    Some((a - b).abs())
}
