//! CSV ingestion and serialization.
//!
//! Input files need the columns `traj_id`, `DateTime`, `lat`, `lon` plus an
//! optional label column; everything else rides along as per-point extras.
//! Rows for one trajectory may be scattered through the file; grouping
//! happens at load, followed by full validation.
//!
//! Output is deterministic: trajectories grouped with synthetics right
//! after their original, rows time-ordered within a trajectory, coordinates
//! printed with 9 decimal places so sub-meter displacements survive a
//! round-trip.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDateTime;
use indexmap::IndexSet;

use crate::error::{Error, Result};
use crate::model::{
    validate_dataset, GeoPoint, Trajectory, TrajectoryDataset, TrajectoryPoint,
};
use crate::modification::split_synthetic_id;
use crate::selection::CandidateSet;

const TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H:%M:%S%.f";

fn parse_timestamp(raw: &str) -> Option<NaiveDateTime> {
    NaiveDateTime::parse_from_str(raw, TIMESTAMP_FORMAT).ok()
}

/// Loads and validates a trajectory dataset from a CSV file.
pub fn load_csv(path: impl AsRef<Path>, label_column: Option<&str>) -> Result<TrajectoryDataset> {
    let file = std::fs::File::open(path)?;
    read_csv(file, label_column)
}

/// Same as [`load_csv`] over any reader.
pub fn read_csv(reader: impl Read, label_column: Option<&str>) -> Result<TrajectoryDataset> {
    let mut csv_reader = csv::ReaderBuilder::new().from_reader(reader);
    let headers = csv_reader.headers()?.clone();
    let column_index = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let id_col = column_index("traj_id")?;
    let time_col = column_index("DateTime")?;
    let lat_col = column_index("lat")?;
    let lon_col = column_index("lon")?;
    let label_col = label_column.map(column_index).transpose()?;

    let mut structural = vec![id_col, time_col, lat_col, lon_col];
    structural.extend(label_col);
    let extra_columns: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| !structural.contains(i))
        .map(|(i, name)| (i, name.to_string()))
        .collect();

    let mut points: BTreeMap<String, Vec<TrajectoryPoint>> = BTreeMap::new();
    let mut labels: BTreeMap<String, String> = BTreeMap::new();
    for record in csv_reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |col: usize| record.get(col).unwrap_or("");
        let parse_failure = |column: &str, message: String| Error::ParseError {
            line,
            column: column.to_string(),
            message,
        };

        let traj_id = field(id_col);
        if traj_id.is_empty() {
            return Err(parse_failure("traj_id", "empty trajectory id".into()));
        }
        let timestamp = parse_timestamp(field(time_col)).ok_or_else(|| {
            parse_failure(
                "DateTime",
                format!("expected YYYY-MM-DD HH:MM:SS, got {:?}", field(time_col)),
            )
        })?;
        let lat: f64 = field(lat_col)
            .parse()
            .map_err(|_| parse_failure("lat", format!("not a number: {:?}", field(lat_col))))?;
        let lon: f64 = field(lon_col)
            .parse()
            .map_err(|_| parse_failure("lon", format!("not a number: {:?}", field(lon_col))))?;

        if let Some(col) = label_col {
            let label = field(col).to_string();
            match labels.get(traj_id) {
                Some(existing) if *existing != label => {
                    return Err(Error::InconsistentLabel {
                        traj_id: traj_id.to_string(),
                    });
                }
                Some(_) => {}
                None => {
                    labels.insert(traj_id.to_string(), label);
                }
            }
        }

        let mut point = TrajectoryPoint::new(timestamp, GeoPoint { lat, lon });
        for (i, name) in &extra_columns {
            point.extras.insert(name.clone(), field(*i).to_string());
        }
        points.entry(traj_id.to_string()).or_default().push(point);
    }

    let mut ds = TrajectoryDataset::new(label_column.map(String::from));
    for (id, traj_points) in points {
        let mut traj = Trajectory::new(id.clone(), traj_points);
        traj.label = labels.remove(&id);
        ds.insert(traj)?;
    }
    validate_dataset(ds)
}

fn format_timestamp(t: NaiveDateTime) -> String {
    t.format(TIMESTAMP_FORMAT).to_string()
}

/// Writes a dataset as CSV to a file. See [`write_csv_to`].
pub fn write_csv(ds: &TrajectoryDataset, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv_to(ds, file)
}

/// Writes a dataset as CSV: columns `traj_id, DateTime, lat, lon`, then the
/// label column if any, then extras in first-seen order. Trajectories are
/// grouped so synthetics follow their original, in copy order.
pub fn write_csv_to(ds: &TrajectoryDataset, writer: impl Write) -> Result<()> {
    // output order: (base id, copy index, full id)
    let mut order: Vec<(&str, u64, &str)> = ds
        .ids()
        .map(|id| {
            let (base, k) = split_synthetic_id(id);
            (base, k, id)
        })
        .collect();
    order.sort();

    let mut extra_names: IndexSet<&str> = IndexSet::new();
    for (_, _, id) in &order {
        for point in &ds.get(id).expect("id comes from the dataset").points {
            for key in point.extras.keys() {
                extra_names.insert(key.as_str());
            }
        }
    }

    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = vec!["traj_id", "DateTime", "lat", "lon"];
    header.extend(ds.label_column());
    header.extend(extra_names.iter());
    w.write_record(&header)?;

    for (_, _, id) in order {
        let traj = ds.get(id).expect("id comes from the dataset");
        let mut rows: Vec<&TrajectoryPoint> = traj.points.iter().collect();
        rows.sort_by_key(|p| p.timestamp);
        for point in rows {
            let mut record = vec![
                traj.id.clone(),
                format_timestamp(point.timestamp),
                format!("{:.9}", point.position.lat),
                format!("{:.9}", point.position.lon),
            ];
            if ds.label_column().is_some() {
                record.push(traj.label.clone().unwrap_or_default());
            }
            for name in &extra_names {
                record.push(point.extras.get(*name).cloned().unwrap_or_default());
            }
            w.write_record(&record)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes a candidate set as a newline-delimited id list.
pub fn write_candidates(set: &CandidateSet, mut writer: impl Write) -> Result<()> {
    for id in &set.traj_ids {
        writeln!(writer, "{id}")?;
    }
    Ok(())
}

/// Writes segment-feature rows as CSV:
/// `traj_id[,<label column>],10%_Distance,...,std_Jerk`.
pub fn write_features_to(
    rows: &[crate::kinematics::SegmentFeatureRow],
    label_column: Option<&str>,
    writer: impl Write,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = vec!["traj_id".to_string()];
    header.extend(label_column.map(String::from));
    header.extend(crate::kinematics::feature_columns());
    w.write_record(&header)?;
    for row in rows {
        let mut record = vec![row.traj_id.clone()];
        if label_column.is_some() {
            record.push(row.label.clone().unwrap_or_default());
        }
        record.extend(row.values.iter().map(|v| format!("{v}")));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a line-oriented `key=value` config file; later keys win. Blank
/// lines and `#` comments are ignored.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::ParseError {
            line: lineno as u64 + 1,
            column: "config".into(),
            message: format!("expected key=value, got {line:?}"),
        })?;
        out.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(out)
}
