use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Arms2, Cfh, Cohort, Drusen, Endpoint, EyeGrade, Genotype, Outcome, Participant, Pigment, Smoking};
use crate::error::{Error, Result};

/// Number of deep features per participant (128 per grading model per eye).
pub const FEATURE_DIM: usize = 512;

const REQUIRED: [&str; 7] = ["id", "age", "smoking", "drusen_le", "drusen_re", "pig_le", "pig_re"];

/// Maps canonical column names onto the headers used by a particular file.
///
/// Columns not listed keep their canonical name. Usually loaded from a JSON
/// sidecar such as `{"id": "PID", "age": "AGE_BL"}`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ColumnMap {
    pub rename: BTreeMap<String, String>,
}

impl ColumnMap {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn header<'a>(&'a self, canonical: &'a str) -> &'a str {
        self.rename.get(canonical).map(String::as_str).unwrap_or(canonical)
    }
}

struct Columns {
    index: HashMap<String, usize>,
}

impl Columns {
    fn find(&self, map: &ColumnMap, canonical: &str) -> Option<usize> {
        self.index.get(map.header(canonical)).copied()
    }

    fn require(&self, map: &ColumnMap, canonical: &str) -> Result<usize> {
        self.find(map, canonical).ok_or_else(|| Error::MissingColumn {
            column: map.header(canonical).to_string(),
        })
    }
}

struct Row<'a> {
    number: usize,
    record: &'a csv::StringRecord,
}

impl Row<'_> {
    fn cell(&self, idx: usize) -> &str {
        self.record.get(idx).unwrap_or("").trim()
    }

    fn bad(&self, column: &str, message: impl Into<String>) -> Error {
        Error::OutOfRangeValue {
            row: self.number,
            column: column.to_string(),
            message: message.into(),
        }
    }

    fn parse<T: FromStr<Err = String>>(&self, idx: usize, column: &str) -> Result<T> {
        self.cell(idx).parse().map_err(|e| self.bad(column, e))
    }

    fn optional<T: FromStr<Err = String>>(&self, idx: Option<usize>, column: &str) -> Result<Option<T>> {
        match idx.map(|i| self.cell(i)) {
            None => Ok(None),
            Some(s) if is_missing(s) => Ok(None),
            Some(s) => s.parse().map(Some).map_err(|e| self.bad(column, e)),
        }
    }

    fn real(&self, idx: usize, column: &str) -> Result<f64> {
        let s = self.cell(idx);
        let v: f64 = s
            .parse()
            .map_err(|_| self.bad(column, format!("`{s}` is not a number")))?;
        if !v.is_finite() {
            return Err(self.bad(column, format!("`{s}` is not finite")));
        }
        Ok(v)
    }

    fn flag(&self, idx: usize, column: &str) -> Result<bool> {
        match self.cell(idx).to_ascii_lowercase().as_str() {
            "1" | "true" => Ok(true),
            "0" | "false" => Ok(false),
            other => Err(self.bad(column, format!("`{other}` is not an event flag (0/1)"))),
        }
    }
}

fn is_missing(s: &str) -> bool {
    s.is_empty() || s.eq_ignore_ascii_case("na") || s.eq_ignore_ascii_case("nan")
}

/// Parses cohort CSV text.
///
/// Required columns: `id,age,smoking,drusen_le,drusen_re,pig_le,pig_re`.
/// Genotype columns (`cfh,arms2,grs`) are individually optional, the
/// feature block `f0..f511` is optional as a whole, and each endpoint's
/// `time_*`/`event_*` pair is optional as a pair. Row numbers in errors
/// count data rows from 1.
pub fn parse_cohort(csv_text: &str, map: &ColumnMap) -> Result<Cohort> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(csv_text.as_bytes());
    let headers = reader.headers()?.clone();
    let cols = Columns {
        index: headers.iter().enumerate().map(|(i, h)| (h.to_string(), i)).collect(),
    };

    let req: Vec<usize> = REQUIRED.iter().map(|c| cols.require(map, c)).collect::<Result<_>>()?;
    let cfh_col = cols.find(map, "cfh");
    let arms2_col = cols.find(map, "arms2");
    let grs_col = cols.find(map, "grs");

    let feature_cols = match cols.find(map, "f0") {
        None => None,
        Some(_) => Some(
            (0..FEATURE_DIM)
                .map(|k| cols.require(map, &format!("f{k}")))
                .collect::<Result<Vec<_>>>()?,
        ),
    };

    let mut outcome_cols = Vec::new();
    for endpoint in Endpoint::ALL {
        let time = format!("time_{}", endpoint.column_suffix());
        let event = format!("event_{}", endpoint.column_suffix());
        match (cols.find(map, &time), cols.find(map, &event)) {
            (Some(t), Some(e)) => outcome_cols.push((endpoint, t, e, time, event)),
            (None, None) => {}
            (Some(_), None) => {
                return Err(Error::MissingColumn {
                    column: map.header(&event).to_string(),
                })
            }
            (None, Some(_)) => {
                return Err(Error::MissingColumn {
                    column: map.header(&time).to_string(),
                })
            }
        }
    }

    let mut participants = Vec::new();
    let mut seen = HashSet::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = Row {
            number: i + 1,
            record: &record,
        };

        let id = row.cell(req[0]).to_string();
        if id.is_empty() {
            return Err(row.bad("id", "empty participant id"));
        }
        let age = row.real(req[1], "age")?;
        if !(0.0..=130.0).contains(&age) {
            return Err(row.bad("age", format!("{age} is outside 0..130 years")));
        }
        let smoking: Smoking = row.parse(req[2], "smoking")?;
        let left_eye = EyeGrade::new(
            row.parse::<Drusen>(req[3], "drusen_le")?,
            row.parse::<Pigment>(req[5], "pig_le")?,
        );
        let right_eye = EyeGrade::new(
            row.parse::<Drusen>(req[4], "drusen_re")?,
            row.parse::<Pigment>(req[6], "pig_re")?,
        );

        let grs = match grs_col.map(|c| row.cell(c)) {
            Some(s) if !is_missing(s) => Some(row.real(grs_col.unwrap(), "grs")?),
            _ => None,
        };
        let genotype = Genotype {
            cfh: row.optional::<Cfh>(cfh_col, "cfh")?,
            arms2: row.optional::<Arms2>(arms2_col, "arms2")?,
            grs,
        };

        let deep_features = match &feature_cols {
            None => None,
            Some(fc) => Some(
                fc.iter()
                    .enumerate()
                    .map(|(k, &c)| row.real(c, &format!("f{k}")))
                    .collect::<Result<Vec<_>>>()?,
            ),
        };

        let mut outcomes = BTreeMap::new();
        for (endpoint, t, e, tname, ename) in &outcome_cols {
            let time = row.real(*t, tname)?;
            if time <= 0.0 {
                return Err(row.bad(tname, format!("{time} is not a positive time in years")));
            }
            let event = row.flag(*e, ename)?;
            outcomes.insert(*endpoint, Outcome::new(time, event));
        }

        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId { id, row: row.number });
        }
        participants.push(Participant {
            id,
            age,
            smoking,
            genotype,
            left_eye,
            right_eye,
            deep_features,
            outcomes,
        });
    }
    Cohort::new(participants)
}

/// Reads a cohort CSV from disk, with an optional JSON column-map sidecar.
pub fn read_cohort(path: &Path, column_map: Option<&Path>) -> Result<Cohort> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let map = match column_map {
        Some(p) => ColumnMap::from_json(&std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?)?,
        None => ColumnMap::default(),
    };
    parse_cohort(&text, &map)
}

impl Cohort {
    /// Canonical CSV form: canonical headers, genotype columns always
    /// present (blank when unknown), named categorical levels and
    /// shortest round-trip decimal reals.
    pub fn to_csv(&self) -> String {
        let mut header: Vec<String> = [
            "id",
            "age",
            "smoking",
            "cfh",
            "arms2",
            "grs",
            "drusen_le",
            "drusen_re",
            "pig_le",
            "pig_re",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        let dim = self.feature_dim();
        if let Some(d) = dim {
            header.extend((0..d).map(|k| format!("f{k}")));
        }
        let endpoints = self.endpoints();
        for e in &endpoints {
            header.push(format!("time_{}", e.column_suffix()));
            header.push(format!("event_{}", e.column_suffix()));
        }

        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(&header).expect("in-memory write");
        for p in self.participants() {
            let mut rec = vec![
                p.id.clone(),
                p.age.to_string(),
                p.smoking.name().to_string(),
                p.genotype.cfh.map(|g| g.name().to_string()).unwrap_or_default(),
                p.genotype.arms2.map(|g| g.name().to_string()).unwrap_or_default(),
                p.genotype.grs.map(|g| g.to_string()).unwrap_or_default(),
                p.left_eye.drusen.name().to_string(),
                p.right_eye.drusen.name().to_string(),
                p.left_eye.pigment.name().to_string(),
                p.right_eye.pigment.name().to_string(),
            ];
            if let Some(f) = &p.deep_features {
                rec.extend(f.iter().map(|v| v.to_string()));
            }
            for e in &endpoints {
                let o = p.outcomes[e];
                rec.push(o.time_years.to_string());
                rec.push(if o.event { "1" } else { "0" }.to_string());
            }
            writer.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }
}
