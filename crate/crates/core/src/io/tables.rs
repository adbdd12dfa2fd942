use std::path::Path;
use std::str::FromStr;

use csv::{ReaderBuilder, StringRecord, Trim, WriterBuilder};

use crate::levels::ObservedTransition;
use crate::pulse::Spectrum1D;
use crate::spin::TransitionTable;
use crate::zcosy::{Connection, ConnectivityMatrix, Peak2D, PeakList2D};

use super::{sig9_str, IoError};

const PEAK_HEADER: [&str; 6] = [
    "omega1_hz",
    "omega2_hz",
    "t1_id",
    "t2_id",
    "amplitude",
    "species",
];
const TRANSITION_HEADER: [&str; 3] = ["id", "freq_hz", "species"];
const CONNECTIVITY_HEADER: [&str; 3] = ["i", "j", "type"];
const SPECTRUM_HEADER: [&str; 4] = ["freq_hz", "amplitude", "transition_id", "species"];
const TRACE_HEADER: [&str; 2] = ["freq_hz", "amplitude"];

fn read_text(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.to_path_buf(),
        source,
    })
}

struct Row {
    line: u64,
    record: StringRecord,
}

impl Row {
    fn text(&self) -> String {
        self.record.iter().collect::<Vec<_>>().join(",")
    }

    fn error(&self, message: impl Into<String>) -> IoError {
        IoError::Row {
            line: self.line,
            message: message.into(),
            text: self.text(),
        }
    }

    fn field<T: FromStr>(&self, k: usize, name: &str) -> Result<T, IoError> {
        self.record[k]
            .parse()
            .map_err(|_| self.error(format!("bad {name} `{}`", &self.record[k])))
    }

    fn finite(&self, k: usize, name: &str) -> Result<f64, IoError> {
        let v: f64 = self.field(k, name)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.error(format!("{name} is not finite")))
        }
    }
}

/// Rows of a headed CSV table; `#` starts a comment line. Blank input
/// yields no rows.
fn read_rows(text: &str, header: &[&str]) -> Result<Vec<Row>, IoError> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut reader = ReaderBuilder::new()
        .trim(Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(text.as_bytes());
    let expected = header.join(",");
    let found = reader.headers().map_err(|_| IoError::Header {
        expected: expected.clone(),
    })?;
    if found.iter().ne(header.iter().copied()) {
        return Err(IoError::Header { expected });
    }
    let mut rows = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| IoError::Row {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
            text: String::new(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let row = Row { line, record };
        if row.record.len() != header.len() {
            return Err(row.error(format!(
                "expected {} fields, found {}",
                header.len(),
                row.record.len()
            )));
        }
        rows.push(row);
    }
    Ok(rows)
}

fn write_table<I>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = WriterBuilder::new().from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV output is UTF-8")
}

pub fn peaklist_to_csv(peaks: &PeakList2D) -> String {
    write_table(
        &PEAK_HEADER,
        peaks.iter().map(|p| {
            vec![
                sig9_str(p.omega1_hz),
                sig9_str(p.omega2_hz),
                p.t1_id.to_string(),
                p.t2_id.to_string(),
                sig9_str(p.amplitude),
                p.species.to_string(),
            ]
        }),
    )
}

pub fn parse_peaklist_str(text: &str) -> Result<PeakList2D, IoError> {
    let mut list = PeakList2D::new();
    for row in read_rows(text, &PEAK_HEADER)? {
        let peak = Peak2D {
            omega1_hz: row.finite(0, "omega1_hz")?,
            omega2_hz: row.finite(1, "omega2_hz")?,
            t1_id: row.field(2, "t1_id")?,
            t2_id: row.field(3, "t2_id")?,
            amplitude: row.finite(4, "amplitude")?,
            species: row.record[5].into(),
        };
        list.insert(peak).map_err(|e| row.error(e.to_string()))?;
    }
    Ok(list)
}

/// Reads a 2D peak list; an empty file gives an empty list.
pub fn parse_peaklist(path: &Path) -> Result<PeakList2D, IoError> {
    let list = parse_peaklist_str(&read_text(path)?)?;
    if list.is_empty() {
        log::warn!("{}: peak list is empty", path.display());
    }
    Ok(list)
}

pub fn transitions_to_csv(table: &TransitionTable) -> String {
    write_table(
        &TRANSITION_HEADER,
        table
            .iter()
            .map(|t| vec![t.id.to_string(), sig9_str(t.freq_hz), t.species.to_string()]),
    )
}

pub fn parse_transitions_str(text: &str) -> Result<Vec<ObservedTransition>, IoError> {
    read_rows(text, &TRANSITION_HEADER)?
        .iter()
        .map(|row| {
            Ok(ObservedTransition {
                id: row.field(0, "id")?,
                freq_hz: row.finite(1, "freq_hz")?,
                species: row.record[2].into(),
            })
        })
        .collect()
}

pub fn parse_transitions(path: &Path) -> Result<Vec<ObservedTransition>, IoError> {
    parse_transitions_str(&read_text(path)?)
}

pub fn connectivity_to_csv(conn: &ConnectivityMatrix) -> String {
    write_table(
        &CONNECTIVITY_HEADER,
        conn.pairs()
            .map(|(i, j, k)| vec![i.to_string(), j.to_string(), k.to_string()]),
    )
}

pub fn parse_connectivity_str(text: &str) -> Result<ConnectivityMatrix, IoError> {
    let mut m = ConnectivityMatrix::default();
    for row in read_rows(text, &CONNECTIVITY_HEADER)? {
        let i = row.field(0, "i")?;
        let j = row.field(1, "j")?;
        let kind: Connection = row.record[2].parse().map_err(|e: String| row.error(e))?;
        m.set(i, j, kind).map_err(|e| row.error(e.to_string()))?;
    }
    Ok(m)
}

pub fn parse_connectivity(path: &Path) -> Result<ConnectivityMatrix, IoError> {
    parse_connectivity_str(&read_text(path)?)
}

pub fn spectrum_to_csv(spectrum: &Spectrum1D) -> String {
    write_table(
        &SPECTRUM_HEADER,
        spectrum.lines.iter().map(|l| {
            vec![
                sig9_str(l.freq_hz),
                sig9_str(l.amplitude),
                l.transition_id.to_string(),
                l.species.to_string(),
            ]
        }),
    )
}

/// Sampled lineshape as (frequency, amplitude) rows.
pub fn trace_to_csv(trace: &[(f64, f64)]) -> String {
    write_table(
        &TRACE_HEADER,
        trace.iter().map(|&(f, a)| vec![sig9_str(f), sig9_str(a)]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peaklist_round_trip() {
        let list: PeakList2D = [
            Peak2D {
                t1_id: 1,
                t2_id: 1,
                omega1_hz: 1234.5,
                omega2_hz: 1234.5,
                amplitude: -0.25,
                species: "H".into(),
            },
            Peak2D {
                t1_id: 1,
                t2_id: 3,
                omega1_hz: 1234.5,
                omega2_hz: -17.0,
                amplitude: 1.0 / 3.0,
                species: "F".into(),
            },
        ]
        .into_iter()
        .collect();
        let text = peaklist_to_csv(&list);
        assert!(text.starts_with("omega1_hz,omega2_hz,t1_id,t2_id,amplitude,species\n"));
        let back = parse_peaklist_str(&text).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(peaklist_to_csv(&back), text);
        assert_eq!(back.get(1, 3).unwrap().amplitude, 0.333333333);
    }

    #[test]
    fn empty_input() {
        assert!(parse_peaklist_str("").unwrap().is_empty());
        assert!(
            parse_peaklist_str("omega1_hz,omega2_hz,t1_id,t2_id,amplitude,species\n")
                .unwrap()
                .is_empty()
        );
    }

    #[test]
    fn malformed_row_is_echoed() {
        let text = "id,freq_hz,species\n1,100.0,H\n2,abc,H\n";
        match parse_transitions_str(text) {
            Err(IoError::Row { line, text, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(text, "2,abc,H");
            }
            other => panic!("{other:?}"),
        }
        match parse_transitions_str("id,freq_hz,species\n1,2\n") {
            Err(IoError::Row { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wrong_header() {
        assert!(matches!(
            parse_connectivity_str("a,b,c\n1,2,progressive\n"),
            Err(IoError::Header { .. })
        ));
    }

    #[test]
    fn connectivity_round_trip() {
        let text = "i,j,type\n1,2,progressive\n# note\n2,5,regressive\n";
        let m = parse_connectivity_str(text).unwrap();
        assert_eq!(m.get(5, 2), Some(Connection::Regressive));
        assert_eq!(
            connectivity_to_csv(&m),
            "i,j,type\n1,2,progressive\n2,5,regressive\n"
        );
        assert!(parse_connectivity_str("i,j,type\n1,2,sideways\n").is_err());
    }
}
