use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::{DataError, DriveCycle, DriveCycleRecord};

/// Column header written by [`write_csv`]. The `soc` column is optional on input.
pub const CSV_HEADER: &str = "time_s,voltage_v,current_a,temperature_c,soc";

const REQUIRED: [&str; 4] = ["time_s", "voltage_v", "current_a", "temperature_c"];

/// Reads a drive cycle; the cycle is named after the file stem.
pub fn load_csv(path: impl AsRef<Path>) -> Result<DriveCycle, DataError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    let mut cycle = read_csv(file, &path.display().to_string())?;
    cycle.name = name;
    Ok(cycle)
}

/// Parses CSV text. Columns may come in any order; unknown columns are
/// rejected. Empty `soc` fields stay unlabeled.
pub fn read_csv<R: Read>(reader: R, source_name: &str) -> Result<DriveCycle, DataError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let parse_err = |line: u64, record: u64, message: String| DataError::Parse {
        source_name: source_name.to_string(),
        line,
        record,
        message,
    };
    let headers = rdr.headers().map_err(|e| parse_err(1, 0, e.to_string()))?.clone();
    let mut index = [usize::MAX; 5];
    for (i, h) in headers.iter().enumerate() {
        let slot = match h {
            "time_s" => 0,
            "voltage_v" => 1,
            "current_a" => 2,
            "temperature_c" => 3,
            "soc" => 4,
            other => {
                return Err(DataError::UnknownColumn {
                    source_name: source_name.to_string(),
                    column: other.to_string(),
                })
            }
        };
        index[slot] = i;
    }
    for (slot, name) in REQUIRED.iter().enumerate() {
        if index[slot] == usize::MAX {
            return Err(DataError::MissingColumn {
                source_name: source_name.to_string(),
                column: name,
            });
        }
    }

    let mut records = Vec::new();
    let mut previous: Option<f64> = None;
    for (row, result) in rdr.records().enumerate() {
        let record_no = row as u64 + 1;
        let fallback_line = record_no + 1;
        let rec = result.map_err(|e| {
            let line = e.position().map_or(fallback_line, |p| p.line());
            parse_err(line, record_no, e.to_string())
        })?;
        let line = rec.position().map_or(fallback_line, |p| p.line());
        let field = |slot: usize| -> Result<f64, DataError> {
            let raw = rec.get(index[slot]).unwrap_or("");
            let v: f64 = raw
                .parse()
                .map_err(|_| parse_err(line, record_no, format!("cannot parse `{raw}` as a number")))?;
            if !v.is_finite() {
                return Err(parse_err(line, record_no, format!("non-finite value `{raw}`")));
            }
            Ok(v)
        };
        let time_s = field(0)?;
        if let Some(prev) = previous {
            if time_s <= prev {
                return Err(DataError::NonMonotoneTime {
                    source_name: source_name.to_string(),
                    line,
                    record: record_no,
                    time: time_s,
                    previous: prev,
                });
            }
        }
        previous = Some(time_s);
        let soc = if index[4] == usize::MAX || rec.get(index[4]).is_none_or(str::is_empty) {
            None
        } else {
            Some(field(4)?)
        };
        records.push(DriveCycleRecord {
            time_s,
            voltage_v: field(1)?,
            current_a: field(2)?,
            temperature_c: field(3)?,
            soc,
        });
    }
    Ok(DriveCycle::new(source_name, records))
}

/// Writes the cycle with the five-column header when every record is labeled,
/// otherwise without the `soc` column.
pub fn write_csv(cycle: &DriveCycle, path: impl AsRef<Path>) -> Result<(), DataError> {
    let path = path.as_ref();
    let io_err = |source| DataError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    write_csv_to(cycle, &mut w).map_err(io_err)?;
    w.flush().map_err(io_err)
}

pub fn write_csv_to<W: Write>(cycle: &DriveCycle, w: &mut W) -> std::io::Result<()> {
    let labeled = cycle.is_labeled();
    if labeled {
        writeln!(w, "{CSV_HEADER}")?;
    } else {
        writeln!(w, "{}", REQUIRED.join(","))?;
    }
    for r in &cycle.records {
        write!(w, "{},{},{},{}", r.time_s, r.voltage_v, r.current_a, r.temperature_c)?;
        match r.soc {
            Some(soc) if labeled => writeln!(w, ",{soc}")?,
            _ => writeln!(w)?,
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_well_formed_rows() {
        let text = "time_s,voltage_v,current_a,temperature_c,soc\n0,4.1,1.0,25,0.9\n0.1,4.0,1.2,25.1,0.89\n0.2,3.9,-0.5,25.2,0.891\n";
        let cycle = read_csv(text.as_bytes(), "mem").unwrap();
        assert_eq!(cycle.len(), 3);
        assert_eq!(cycle.records[2].current_a, -0.5);
        assert_eq!(cycle.records[1].soc, Some(0.89));
    }

    #[test]
    fn soc_column_is_optional() {
        let text = "time_s,voltage_v,current_a,temperature_c\n0,4.1,1.0,25\n1,4.0,1.0,25\n";
        let cycle = read_csv(text.as_bytes(), "mem").unwrap();
        assert!(!cycle.is_labeled());
        assert!(cycle.soc_labels().is_err());
    }

    #[test]
    fn repeated_timestamp_names_the_row() {
        let text = "time_s,voltage_v,current_a,temperature_c,soc\n0,4,1,25,1\n1,4,1,25,1\n1,4,1,25,1\n";
        let err = read_csv(text.as_bytes(), "mem").unwrap_err();
        match &err {
            DataError::NonMonotoneTime { line, record, .. } => {
                assert_eq!(*record, 3);
                assert_eq!(*line, 4);
            }
            other => panic!("unexpected {other}"),
        }
        assert!(err.to_string().contains("record 3"));
    }

    #[test]
    fn missing_column_is_named() {
        let text = "time_s,voltage_v,temperature_c\n0,4,25\n";
        let err = read_csv(text.as_bytes(), "mem").unwrap_err();
        assert!(matches!(err, DataError::MissingColumn { column: "current_a", .. }));
    }

    #[test]
    fn unknown_column_rejected() {
        let text = "time_s,voltage_v,current_a,temperature_c,speed\n";
        assert!(matches!(read_csv(text.as_bytes(), "mem"), Err(DataError::UnknownColumn { .. })));
    }

    #[test]
    fn bad_number_reports_line() {
        let text = "time_s,voltage_v,current_a,temperature_c\n0,4,1,25\n1,four,1,25\n";
        let err = read_csv(text.as_bytes(), "mem").unwrap_err();
        assert!(matches!(err, DataError::Parse { line: 3, record: 2, .. }), "{err}");
    }

    #[test]
    fn written_text_reads_back_exactly() {
        let cycle = DriveCycle::new(
            "x",
            (0..5)
                .map(|i| DriveCycleRecord {
                    time_s: i as f64 * 0.1,
                    voltage_v: 3.7 + i as f64 / 3.0,
                    current_a: -1.0 / 7.0,
                    temperature_c: 25.0,
                    soc: Some(0.9 - i as f64 * 1e-5),
                })
                .collect(),
        );
        let mut buf = Vec::new();
        write_csv_to(&cycle, &mut buf).unwrap();
        assert!(buf.starts_with(CSV_HEADER.as_bytes()));
        let back = read_csv(buf.as_slice(), "x").unwrap();
        assert_eq!(back.records, cycle.records);
    }
}
