use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// Unordered airport pair. The endpoints are stored in lexicographic order so
/// `Route::new("SNA", "DEN") == Route::new("DEN", "SNA")`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Route {
    a: String,
    b: String,
}

impl Route {
    pub fn new(x: impl Into<String>, y: impl Into<String>) -> Self {
        let (x, y) = (x.into(), y.into());
        if x <= y {
            Route { a: x, b: y }
        } else {
            Route { a: y, b: x }
        }
    }

    pub fn first(&self) -> &str {
        &self.a
    }

    pub fn second(&self) -> &str {
        &self.b
    }

    pub fn contains(&self, airport: &str) -> bool {
        self.a == airport || self.b == airport
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.a, self.b)
    }
}

impl FromStr for Route {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once('-') {
            Some((a, b)) if !a.is_empty() && !b.is_empty() => Ok(Route::new(a, b)),
            _ => Err(Error::Parse(format!("invalid route {s:?}, expected A-B"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_are_unordered() {
        assert_eq!(Route::new("SNA", "DEN"), Route::new("DEN", "SNA"));
        assert_eq!(Route::new("SNA", "DEN").to_string(), "DEN-SNA");
        assert_eq!("SNA-DEN".parse::<Route>().unwrap(), Route::new("DEN", "SNA"));
        assert!("DEN".parse::<Route>().is_err());
    }
}
