use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::datagen::{csv_err, parse_finite};
use crate::error::{CascadeError, Result};
use crate::numfmt::{sci, DATA_DIGITS};

pub const PREDICTION_HEADER: [&str; 6] = ["id", "split", "y", "change_label", "reg_pred", "clf_score"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Train,
    Cal,
    Test,
}

impl SplitTag {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitTag::Train => "train",
            SplitTag::Cal => "cal",
            SplitTag::Test => "test",
        }
    }
}

impl fmt::Display for SplitTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SplitTag {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "train" => Ok(SplitTag::Train),
            "cal" => Ok(SplitTag::Cal),
            "test" => Ok(SplitTag::Test),
            other => Err(format!("unknown split tag {other:?} (expected train, cal or test)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub id: String,
    pub split: SplitTag,
    pub y: f64,
    pub change_label: u8,
    pub reg_pred: f64,
    /// Raw monotone classifier score (pre-sigmoid for logistic models).
    pub clf_score: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PredictionTable {
    pub rows: Vec<PredictionRow>,
}

impl PredictionTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn indices(&self, tag: SplitTag) -> Vec<usize> {
        (0..self.rows.len()).filter(|&i| self.rows[i].split == tag).collect()
    }

    /// Ensures the table can drive a conformal run.
    pub fn require_splits(&self) -> Result<()> {
        for tag in [SplitTag::Cal, SplitTag::Test] {
            if !self.rows.iter().any(|r| r.split == tag) {
                return Err(CascadeError::config(
                    "data.path",
                    format!("prediction table has no `{tag}` rows"),
                ));
            }
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<PredictionTable> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let headers = rdr
            .headers()
            .map_err(|e| CascadeError::parse(1, e.to_string()))?
            .clone();
        for (j, name) in PREDICTION_HEADER.iter().enumerate() {
            match headers.get(j) {
                Some(h) if h == *name => {}
                Some(h) => {
                    return Err(CascadeError::parse(
                        1,
                        format!("column {} is `{h}`, expected `{name}`", j + 1),
                    ))
                }
                None => return Err(CascadeError::parse(1, format!("missing column `{name}`"))),
            }
        }
        if headers.len() != PREDICTION_HEADER.len() {
            return Err(CascadeError::parse(
                1,
                format!("expected {} columns, found {}", PREDICTION_HEADER.len(), headers.len()),
            ));
        }
        let mut rows = Vec::new();
        let mut seen = HashSet::new();
        for (i, rec) in rdr.records().enumerate() {
            let row = i + 2;
            let rec = rec.map_err(|e| CascadeError::parse(row, e.to_string()))?;
            let id = rec[0].to_string();
            if !seen.insert(id.clone()) {
                return Err(CascadeError::parse(row, format!("duplicate id {id:?}")));
            }
            let split = rec[1].parse::<SplitTag>().map_err(|m| CascadeError::parse(row, m))?;
            let change_label = match &rec[3] {
                "0" => 0,
                "1" => 1,
                other => return Err(CascadeError::parse(row, format!("change_label {other:?} is not 0/1"))),
            };
            rows.push(PredictionRow {
                id,
                split,
                y: parse_finite(&rec[2], row, "y")?,
                change_label,
                reg_pred: parse_finite(&rec[4], row, "reg_pred")?,
                clf_score: parse_finite(&rec[5], row, "clf_score")?,
            });
        }
        Ok(PredictionTable { rows })
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        out.write_record(PREDICTION_HEADER).map_err(csv_err)?;
        for r in &self.rows {
            out.write_record([
                r.id.clone(),
                r.split.to_string(),
                sci(r.y, DATA_DIGITS),
                r.change_label.to_string(),
                sci(r.reg_pred, DATA_DIGITS),
                sci(r.clf_score, DATA_DIGITS),
            ])
            .map_err(csv_err)?;
        }
        out.flush().map_err(|e| CascadeError::io("<csv stream>", e))?;
        Ok(())
    }
}

pub fn load_predictions(path: impl AsRef<Path>) -> Result<PredictionTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| CascadeError::io(path, e))?;
    PredictionTable::read_csv(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = "id,split,y,change_label,reg_pred,clf_score
a,train,0.1,1,0.12,2.5
b,cal,0,0,0.01,-1.0
c,cal,-0.2,1,-0.15,0.3
d,test,0.05,1,0.04,1.1
e,test,0.0,0,0.02,-3
";

    #[test]
    fn parses_well_formed_file() {
        let t = PredictionTable::read_csv(GOOD.as_bytes()).unwrap();
        assert_eq!(t.len(), 5);
        assert_eq!(t.rows[2].split, SplitTag::Cal);
        assert_eq!(t.rows[4].clf_score, -3.0);
        t.require_splits().unwrap();
    }

    #[test]
    fn unknown_split_names_row() {
        let bad = GOOD.replace("d,test", "d,validation");
        match PredictionTable::read_csv(bad.as_bytes()) {
            Err(CascadeError::Parse { row, message }) => {
                assert_eq!(row, 5);
                assert!(message.contains("validation"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicates_nonfinite_and_missing_columns() {
        let dup = GOOD.replace("e,test", "a,test");
        assert!(matches!(
            PredictionTable::read_csv(dup.as_bytes()),
            Err(CascadeError::Parse { row: 6, .. })
        ));
        let nan = GOOD.replace("0.04,1.1", "NaN,1.1");
        assert!(matches!(
            PredictionTable::read_csv(nan.as_bytes()),
            Err(CascadeError::Parse { row: 5, .. })
        ));
        let inf = GOOD.replace("-1.0", "inf");
        assert!(matches!(
            PredictionTable::read_csv(inf.as_bytes()),
            Err(CascadeError::Parse { row: 3, .. })
        ));
        let missing = "id,split,y,change_label,reg_pred\na,cal,0,0,0\n";
        match PredictionTable::read_csv(missing.as_bytes()) {
            Err(CascadeError::Parse { row: 1, message }) => assert!(message.contains("clf_score")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_test_split_is_config_error() {
        let only_cal = "id,split,y,change_label,reg_pred,clf_score\na,cal,0,0,0,0\n";
        let t = PredictionTable::read_csv(only_cal.as_bytes()).unwrap();
        assert!(matches!(t.require_splits(), Err(CascadeError::Config { .. })));
    }
}
