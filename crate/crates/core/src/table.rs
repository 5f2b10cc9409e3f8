//! Result records, their JSON/CSV/text renderings, and the on-disk number cache.
//!
//! A record is `{kind, genus, exponents: [[index, multiplicity], ...], value: "a/b"}`.
//! The cache file is the line `kappa-forge-cache v1` followed by one JSON record per line.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::algebra::{format_rational, parse_rational, Monomial, Rational};
use crate::error::{Error, Result};
use crate::kappa::KappaKey;
use crate::psi::PsiKey;

pub const CACHE_HEADER: &str = "kappa-forge-cache v1";
const CACHE_MAGIC: &str = "kappa-forge-cache ";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Psi,
    Kappa,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Psi => "psi",
            Kind::Kappa => "kappa",
        })
    }
}

impl FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "psi" => Ok(Kind::Psi),
            "kappa" => Ok(Kind::Kappa),
            other => Err(Error::Parse(format!("unknown record kind {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Text,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "text" => Ok(Format::Text),
            other => Err(Error::Parse(format!("unknown format {other:?}"))),
        }
    }
}

/// One computed number.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub kind: Kind,
    pub genus: u32,
    /// `(index, multiplicity)` pairs, ascending by index.
    pub exponents: Vec<(u32, u32)>,
    pub value: String,
}

impl ResultRecord {
    pub fn new(kind: Kind, genus: u32, exponents: Vec<(u32, u32)>, value: &Rational) -> Self {
        Self {
            kind,
            genus,
            exponents,
            value: format_rational(value),
        }
    }

    pub fn kappa(key: &KappaKey, value: &Rational) -> Self {
        let mut exponents = Vec::new();
        if key.kappa0_power > 0 {
            exponents.push((0, key.kappa0_power));
        }
        exponents.extend_from_slice(key.monomial.pairs());
        Self::new(Kind::Kappa, key.genus, exponents, value)
    }

    pub fn psi(key: &PsiKey, value: &Rational) -> Self {
        Self::new(
            Kind::Psi,
            key.genus(),
            key.monomial().pairs().to_vec(),
            value,
        )
    }

    pub fn rational(&self) -> Result<Rational> {
        parse_rational(&self.value)
    }

    pub fn monomial(&self) -> Monomial {
        Monomial::from_pairs(self.exponents.iter().copied())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("records always serialize")
    }

    pub fn from_json(line: &str) -> Result<Self> {
        let record: Self = serde_json::from_str(line).map_err(|e| Error::Parse(e.to_string()))?;
        record.validate()
    }

    /// Exponents as `i^m`, space-joined.
    pub fn exponents_csv(&self) -> String {
        self.exponents
            .iter()
            .map(|(i, m)| format!("{i}^{m}"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn validate(self) -> Result<Self> {
        if !self.exponents.windows(2).all(|w| w[0].0 < w[1].0)
            || self.exponents.iter().any(|p| p.1 == 0)
        {
            return Err(Error::Parse(format!(
                "exponents {:?} are not canonical",
                self.exponents
            )));
        }
        self.rational()?;
        Ok(self)
    }

    /// Canonical ordering key: kind, genus, then the monomial order.
    fn sort_key(&self) -> (Kind, u32, Monomial) {
        (self.kind, self.genus, self.monomial())
    }
}

pub const CSV_HEADER: [&str; 4] = ["kind", "genus", "exponents", "value"];

/// Renders records in the requested format. JSON is one record per line; text
/// prints the bare value when there is a single record.
pub fn render(records: &[ResultRecord], format: Format) -> String {
    match format {
        Format::Json => records.iter().map(|r| r.to_json() + "\n").collect(),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(CSV_HEADER).expect("in-memory write");
            for r in records {
                w.write_record([
                    r.kind.to_string(),
                    r.genus.to_string(),
                    r.exponents_csv(),
                    r.value.clone(),
                ])
                .expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
        }
        Format::Text => {
            if let [single] = records {
                return format!("{}\n", single.value);
            }
            records
                .iter()
                .map(|r| {
                    let mon = r.exponents_csv();
                    let sym = if r.kind == Kind::Kappa {
                        "kappa"
                    } else {
                        "tau"
                    };
                    format!("{} g={} {}[{}] = {}\n", r.kind, r.genus, sym, mon, r.value)
                })
                .collect()
        }
    }
}

/// Parses CSV produced by [`render`].
pub fn parse_csv(text: &str) -> Result<Vec<ResultRecord>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::Parse(e.to_string()))?;
        if row.len() != 4 {
            return Err(Error::Parse(format!(
                "expected 4 CSV columns, got {}",
                row.len()
            )));
        }
        let genus = row[1]
            .parse()
            .map_err(|_| Error::Parse(format!("bad genus {:?}", &row[1])))?;
        let mut exponents = Vec::new();
        for pair in row[2].split_whitespace() {
            let (i, m) = pair
                .split_once('^')
                .ok_or_else(|| Error::Parse(format!("bad exponent {pair:?}")))?;
            let parse = |s: &str| {
                s.parse::<u32>()
                    .map_err(|_| Error::Parse(format!("bad exponent {pair:?}")))
            };
            exponents.push((parse(i)?, parse(m)?));
        }
        let record = ResultRecord {
            kind: row[0].parse()?,
            genus,
            exponents,
            value: row[3].to_string(),
        };
        out.push(record.validate()?);
    }
    Ok(out)
}

/// Parses JSON lines produced by [`render`].
pub fn parse_json_lines(text: &str) -> Result<Vec<ResultRecord>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(ResultRecord::from_json)
        .collect()
}

/// Persistent store of computed numbers.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Cache {
    records: BTreeMap<(Kind, u32, Monomial), ResultRecord>,
}

impl Cache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Reads a cache file. A missing file is an empty cache; a file with another
    /// header is rejected.
    pub fn load(path: &Path) -> Result<Self> {
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Self::new()),
            Err(e) => return Err(e.into()),
        };
        let mut lines = text.lines();
        match lines.next() {
            Some(CACHE_HEADER) => {}
            Some(h) if h.starts_with(CACHE_MAGIC) => {
                return Err(Error::Cache(format!(
                    "unsupported cache version {:?}",
                    &h[CACHE_MAGIC.len()..]
                )))
            }
            _ => {
                return Err(Error::Cache(format!(
                    "{} is not a kappa-forge cache",
                    path.display()
                )))
            }
        }
        let mut cache = Self::new();
        for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let record = ResultRecord::from_json(line)
                .map_err(|e| Error::Cache(format!("line {}: {e}", n + 2)))?;
            cache.insert(record);
        }
        Ok(cache)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        writeln!(out, "{CACHE_HEADER}")?;
        for r in self.records.values() {
            writeln!(out, "{}", r.to_json())?;
        }
        fs::write(path, out)?;
        Ok(())
    }

    pub fn insert(&mut self, record: ResultRecord) {
        self.records.insert(record.sort_key(), record);
    }

    pub fn get(&self, kind: Kind, genus: u32, monomial: &Monomial) -> Option<&ResultRecord> {
        self.records.get(&(kind, genus, monomial.clone()))
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = &ResultRecord> {
        self.records.values()
    }

    /// Kappa-free kappa values of one genus, keyed as the kappa engine stores them.
    pub fn kappa_values(&self, genus: u32) -> Result<BTreeMap<(u32, Monomial), Rational>> {
        self.records
            .values()
            .filter(|r| {
                r.kind == Kind::Kappa
                    && r.genus == genus
                    && r.exponents.first().is_none_or(|p| p.0 != 0)
            })
            .map(|r| Ok(((genus, r.monomial()), r.rational()?)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::ratio;

    #[test]
    fn json_shape() {
        let key = KappaKey::new(2, &[(3, 1)]);
        let r = ResultRecord::kappa(&key, &ratio(1, 1152));
        assert_eq!(
            r.to_json(),
            r#"{"kind":"kappa","genus":2,"exponents":[[3,1]],"value":"1/1152"}"#
        );
        assert_eq!(ResultRecord::from_json(&r.to_json()).unwrap(), r);
        assert!(ResultRecord::from_json(
            r#"{"kind":"kappa","genus":2,"exponents":[[3,1],[1,1]],"value":"1"}"#
        )
        .is_err());
    }

    #[test]
    fn csv_round_trip() {
        let records = vec![
            ResultRecord::kappa(&KappaKey::new(2, &[(2, 1), (1, 1)]), &ratio(1, 240)),
            ResultRecord::psi(&PsiKey::new(1, [1]), &ratio(1, 24)),
        ];
        let text = render(&records, Format::Csv);
        assert!(text.starts_with("kind,genus,exponents,value\n"));
        assert!(text.contains("kappa,2,1^1 2^1,1/240"));
        assert_eq!(parse_csv(&text).unwrap(), records);
        assert_eq!(
            parse_json_lines(&render(&records, Format::Json)).unwrap(),
            records
        );
        assert_eq!(render(&records[..1], Format::Text), "1/240\n");
    }
}
