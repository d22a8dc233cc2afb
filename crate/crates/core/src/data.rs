//! Loading and validating UJIIndoorLoc-format fingerprint files.
//!
//! Each row carries 520 WAP intensities followed by nine metadata columns.
//! Intensities lie in [-104, 0] dBm; the raw value 100 marks a WAP that was
//! not detected and is replaced by a sentinel strength so that every feature
//! stays ordinal.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub type Label = i64;

pub const WAP_COUNT: usize = 520;
pub const METADATA_COLUMNS: [&str; 9] = [
    "LONGITUDE",
    "LATITUDE",
    "FLOOR",
    "BUILDINGID",
    "SPACEID",
    "RELATIVEPOSITION",
    "USERID",
    "PHONEID",
    "TIMESTAMP",
];
pub const RSSI_MIN: i64 = -104;
pub const RSSI_MAX: i64 = 0;
pub const NOT_DETECTED: i64 = 100;
pub const DEFAULT_SENTINEL: f64 = -105.0;

pub const FLOORS: [Label; 5] = [0, 1, 2, 3, 4];
pub const BUILDINGS: [Label; 3] = [0, 1, 2];
/// Raw RELATIVEPOSITION codes: 1 = inside the space, 2 = outside (in front of the door).
pub const RELATIVE_POSITIONS: [Label; 2] = [1, 2];

/// The full header, in order.
pub fn expected_header() -> Vec<String> {
    (1..=WAP_COUNT)
        .map(|i| format!("WAP{i:03}"))
        .chain(METADATA_COLUMNS.iter().map(|s| s.to_string()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Floor,
    Region,
}

impl Task {
    pub const ALL: [Task; 2] = [Task::Floor, Task::Region];

    pub fn target(self, record: &FingerprintRecord) -> Label {
        match self {
            Task::Floor => record.floor,
            Task::Region => record.relative_position,
        }
    }

    /// Classes every report lists, whether or not they occur in the data.
    pub fn global_catalog(self) -> &'static [Label] {
        match self {
            Task::Floor => &FLOORS,
            Task::Region => &RELATIVE_POSITIONS,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Task::Floor => "floor",
            Task::Region => "region",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "floor" => Ok(Task::Floor),
            "region" => Ok(Task::Region),
            other => Err(Error::InvalidArgument(format!(
                "unknown task `{other}` (expected floor or region)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UserSelector {
    Specific(i64),
    Average,
}

impl fmt::Display for UserSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UserSelector::Specific(id) => write!(f, "{id}"),
            UserSelector::Average => f.write_str("average"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FingerprintRecord {
    /// Raw readings: dBm in [-104, 0] or the not-detected marker 100.
    pub rssi: Vec<i16>,
    pub longitude: f64,
    pub latitude: f64,
    pub floor: Label,
    pub building_id: Label,
    pub space_id: Label,
    pub relative_position: Label,
    pub user_id: i64,
    pub phone_id: i64,
    pub timestamp: i64,
    /// The nine metadata fields exactly as they appeared in the file.
    raw_metadata: Vec<String>,
}

impl FingerprintRecord {
    /// Raw metadata columns joined by commas, byte-identical to the input.
    pub fn metadata_line(&self) -> String {
        self.raw_metadata.join(",")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IngestConfig {
    /// Feature value substituted for the not-detected marker.
    pub sentinel: f64,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            sentinel: DEFAULT_SENTINEL,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub records: Vec<FingerprintRecord>,
    /// rows x 520, sentinel already substituted.
    pub encoded: Matrix,
    /// Distinct observed labels per task, ascending.
    pub target_catalog: BTreeMap<Task, Vec<Label>>,
}

/// Labels for one prediction task over a feature matrix.
#[derive(Debug, Clone)]
pub struct TaskView<'a> {
    pub task: Task,
    pub features: &'a Matrix,
    pub labels: Vec<Label>,
    /// Classes to report on: the task's global catalog plus anything observed.
    pub catalog: Vec<Label>,
}

pub fn encode_rssi(raw: i64, sentinel: f64) -> Result<f64> {
    match raw {
        NOT_DETECTED => Ok(sentinel),
        RSSI_MIN..=RSSI_MAX => Ok(raw as f64),
        _ => Err(Error::InvalidArgument(format!(
            "RSSI reading {raw} is neither in [{RSSI_MIN}, {RSSI_MAX}] nor the marker {NOT_DETECTED}"
        ))),
    }
}

fn parse_int(field: &str, row: usize, column: &str) -> Result<i64> {
    field.trim().parse::<i64>().map_err(|e| Error::Parse {
        row,
        column: column.to_string(),
        message: format!("`{field}` is not an integer ({e})"),
    })
}

fn parse_real(field: &str, row: usize, column: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Parse {
            row,
            column: column.to_string(),
            message: format!("`{field}` is not a finite number"),
        })
}

fn check_domain(value: Label, allowed: &[Label], row: usize, column: &str) -> Result<()> {
    if allowed.contains(&value) {
        Ok(())
    } else {
        Err(Error::Validation {
            row,
            message: format!("{column}={value} is outside {allowed:?}"),
        })
    }
}

fn observed_catalog(records: &[FingerprintRecord]) -> BTreeMap<Task, Vec<Label>> {
    Task::ALL
        .iter()
        .map(|&task| {
            let labels: BTreeSet<Label> = records.iter().map(|r| task.target(r)).collect();
            (task, labels.into_iter().collect())
        })
        .collect()
}

impl Dataset {
    pub fn from_records(records: Vec<FingerprintRecord>, config: &IngestConfig) -> Result<Self> {
        let mut data = Vec::with_capacity(records.len() * WAP_COUNT);
        for (i, record) in records.iter().enumerate() {
            if record.rssi.len() != WAP_COUNT {
                return Err(Error::DimensionMismatch(format!(
                    "record {i} has {} readings, expected {WAP_COUNT}",
                    record.rssi.len()
                )));
            }
            for &raw in &record.rssi {
                data.push(encode_rssi(raw as i64, config.sentinel).map_err(|e| {
                    Error::Validation {
                        row: i + 1,
                        message: e.to_string(),
                    }
                })?);
            }
        }
        Ok(Dataset {
            encoded: Matrix::new(records.len(), WAP_COUNT, data)?,
            target_catalog: observed_catalog(&records),
            records,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn user_ids(&self) -> Vec<i64> {
        let ids: BTreeSet<i64> = self.records.iter().map(|r| r.user_id).collect();
        ids.into_iter().collect()
    }

    /// Row indices selected by `user`, in file order.
    pub fn user_rows(&self, user: UserSelector) -> Result<Vec<usize>> {
        match user {
            UserSelector::Average => Ok((0..self.len()).collect()),
            UserSelector::Specific(id) => {
                let rows: Vec<usize> = (0..self.len())
                    .filter(|&i| self.records[i].user_id == id)
                    .collect();
                if rows.is_empty() {
                    Err(Error::UnknownUser {
                        id,
                        valid: self.user_ids(),
                    })
                } else {
                    Ok(rows)
                }
            }
        }
    }

    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let records: Vec<FingerprintRecord> =
            rows.iter().map(|&i| self.records[i].clone()).collect();
        Dataset {
            encoded: self.encoded.select_rows(rows),
            target_catalog: observed_catalog(&records),
            records,
        }
    }

    pub fn task_view(&self, task: Task) -> TaskView<'_> {
        let labels: Vec<Label> = self.records.iter().map(|r| task.target(r)).collect();
        let catalog: BTreeSet<Label> = task
            .global_catalog()
            .iter()
            .copied()
            .chain(labels.iter().copied())
            .collect();
        TaskView {
            task,
            features: &self.encoded,
            labels,
            catalog: catalog.into_iter().collect(),
        }
    }

    /// Write the metadata columns of every record back out, one line per record.
    pub fn write_metadata<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", METADATA_COLUMNS.join(","))?;
        for record in &self.records {
            writeln!(out, "{}", record.metadata_line())?;
        }
        Ok(())
    }
}

/// Parse a fingerprint file. Row numbers in errors are 1-based data rows
/// (the header is not counted).
pub fn load(path: &Path, config: &IngestConfig) -> Result<Dataset> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(csv_err)?;

    let expected = expected_header();
    let header = reader.headers().map_err(csv_err)?.clone();
    for (position, name) in expected.iter().enumerate() {
        match header.get(position).map(str::trim) {
            Some(found) if found == name => {}
            found => {
                return Err(Error::Schema {
                    expected: name.clone(),
                    position,
                    found: found.map_or_else(|| "end of header".to_string(), |f| format!("`{f}`")),
                })
            }
        }
    }
    if header.len() > expected.len() {
        return Err(Error::Schema {
            expected: "end of header".into(),
            position: expected.len(),
            found: format!("`{}`", &header[expected.len()]),
        });
    }

    let mut records = Vec::new();
    let mut features = Vec::new();
    let mut row = csv::StringRecord::new();
    while reader.read_record(&mut row).map_err(csv_err)? {
        let line = records.len() + 1;
        if row.len() != expected.len() {
            return Err(Error::Validation {
                row: line,
                message: format!("{} fields, expected {}", row.len(), expected.len()),
            });
        }
        let mut rssi = Vec::with_capacity(WAP_COUNT);
        for (j, field) in row.iter().take(WAP_COUNT).enumerate() {
            let raw = parse_int(field, line, &expected[j])?;
            let value = encode_rssi(raw, config.sentinel).map_err(|_| Error::Validation {
                row: line,
                message: format!(
                    "{} reading {raw} is outside [{RSSI_MIN}, {RSSI_MAX}] and is not the marker {NOT_DETECTED}",
                    expected[j]
                ),
            })?;
            features.push(value);
            rssi.push(raw as i16);
        }
        let meta: Vec<&str> = row.iter().skip(WAP_COUNT).collect();
        let int = |k: usize| parse_int(meta[k], line, METADATA_COLUMNS[k]);
        let record = FingerprintRecord {
            rssi,
            longitude: parse_real(meta[0], line, METADATA_COLUMNS[0])?,
            latitude: parse_real(meta[1], line, METADATA_COLUMNS[1])?,
            floor: int(2)?,
            building_id: int(3)?,
            space_id: int(4)?,
            relative_position: int(5)?,
            user_id: int(6)?,
            phone_id: int(7)?,
            timestamp: int(8)?,
            raw_metadata: meta.iter().map(|s| s.to_string()).collect(),
        };
        check_domain(record.floor, &FLOORS, line, "FLOOR")?;
        check_domain(record.building_id, &BUILDINGS, line, "BUILDINGID")?;
        check_domain(
            record.relative_position,
            &RELATIVE_POSITIONS,
            line,
            "RELATIVEPOSITION",
        )?;
        records.push(record);
    }

    Ok(Dataset {
        encoded: Matrix::new(records.len(), WAP_COUNT, features)?,
        target_catalog: observed_catalog(&records),
        records,
    })
}

pub fn partition_by_user(ds: &Dataset, user: UserSelector) -> Result<Dataset> {
    match user {
        UserSelector::Average => Ok(ds.clone()),
        specific => Ok(ds.subset(&ds.user_rows(specific)?)),
    }
}

/// Row count per class of `task`; catalog classes absent from `ds` appear with 0.
pub fn class_presence(ds: &Dataset, task: Task) -> Vec<(Label, usize)> {
    let mut counts: BTreeMap<Label, usize> =
        task.global_catalog().iter().map(|&c| (c, 0)).collect();
    for record in &ds.records {
        *counts.entry(task.target(record)).or_insert(0) += 1;
    }
    counts.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupAttr {
    BuildingId,
    Floor,
    SpaceId,
    RelativePosition,
}

impl GroupAttr {
    pub const ALL: [GroupAttr; 4] = [
        GroupAttr::BuildingId,
        GroupAttr::Floor,
        GroupAttr::SpaceId,
        GroupAttr::RelativePosition,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GroupAttr::BuildingId => "building_id",
            GroupAttr::Floor => "floor",
            GroupAttr::SpaceId => "space_id",
            GroupAttr::RelativePosition => "relative_position",
        }
    }

    pub fn value(self, record: &FingerprintRecord) -> Label {
        match self {
            GroupAttr::BuildingId => record.building_id,
            GroupAttr::Floor => record.floor,
            GroupAttr::SpaceId => record.space_id,
            GroupAttr::RelativePosition => record.relative_position,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupCount {
    pub user_id: i64,
    pub value: Label,
    pub count: usize,
}

/// Rows per (user, attribute value), ordered by user then value.
pub fn grouped_counts(ds: &Dataset, attr: GroupAttr) -> Vec<GroupCount> {
    let mut counts: BTreeMap<(i64, Label), usize> = BTreeMap::new();
    for record in &ds.records {
        *counts
            .entry((record.user_id, attr.value(record)))
            .or_insert(0) += 1;
    }
    counts
        .into_iter()
        .map(|((user_id, value), count)| GroupCount {
            user_id,
            value,
            count,
        })
        .collect()
}

pub fn write_grouped_counts<W: Write>(
    mut out: W,
    attr: GroupAttr,
    counts: &[GroupCount],
) -> std::io::Result<()> {
    writeln!(out, "user_id,group_attr,group_value,count")?;
    for c in counts {
        writeln!(out, "{},{},{},{}", c.user_id, attr.name(), c.value, c.count)?;
    }
    Ok(())
}
