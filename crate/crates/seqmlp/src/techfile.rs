// SPDX-License-Identifier: Apache-2.0

//! Technology files: flat `key = value` lines, `#` comments. Keys not set
//! keep their default value.

use std::path::Path;

use seqmlp_core::cost::TechLibrary;

use crate::error::{self, Error, Result};

pub fn parse_tech(text: &str, origin: &Path) -> Result<TechLibrary> {
    let table: toml::Table = text.parse().map_err(|e| Error::parse(origin, e))?;
    let mut tech = TechLibrary::default();
    for (key, value) in &table {
        let v = match value {
            toml::Value::Float(f) => *f,
            toml::Value::Integer(i) => *i as f64,
            other => return Err(Error::parse(origin, format!("`{key}` must be a number, got {other}"))),
        };
        tech.set(key, v).map_err(|e| Error::parse(origin, e))?;
    }
    tech.validate().map_err(|e| Error::parse(origin, e))?;
    Ok(tech)
}

pub fn load_tech(path: &Path) -> Result<TechLibrary> {
    parse_tech(&error::read_to_string(path)?, path)
}

/// Render `tech` in the file format, every key present.
pub fn format_tech(tech: &TechLibrary) -> String {
    let mut s = String::new();
    for key in TechLibrary::KEYS {
        s.push_str(&format!("{key} = {:?}\n", tech.get(key).unwrap()));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let t = parse_tech("# cells\ndff_area = 8\nmux2_power = 0.5\n", Path::new("t")).unwrap();
        assert_eq!(t.dff.area, 8.0);
        assert_eq!(t.mux2.power, 0.5);
        assert_eq!(t.mux2.area, TechLibrary::default().mux2.area);
    }

    #[test]
    fn round_trip() {
        let mut t = TechLibrary::default();
        t.set("clock_period_s", 0.12).unwrap();
        assert_eq!(parse_tech(&format_tech(&t), Path::new("t")).unwrap(), t);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_tech("nand_area = 1", Path::new("t")).is_err());
        assert!(parse_tech("dff_area = \"big\"", Path::new("t")).is_err());
        assert!(parse_tech("dff_area = -1", Path::new("t")).is_err());
        assert!(parse_tech("dff_area 1", Path::new("t")).is_err());
    }
}
