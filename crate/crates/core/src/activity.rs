//! Complex-activity decomposition and variant counting.
//!
//! A complex activity is a sequence of weighted atomic activities, each paired
//! with a weighted context attribute. The core units are the heavily weighted
//! ones; the start and end units are the positional extremes of the sequence.
//! Every subset of the atomic activities is one way of performing the
//! activity; a subset reaches the end goal iff it contains every core atomic
//! activity.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

/// Largest exponent whose power of two is counted in a `u64` here.
pub const MAX_ATOMIC_COUNT: u32 = 62;

pub const DEFAULT_CORE_THRESHOLD: f64 = 0.20;
pub const DEFAULT_BOUNDARY_WIDTH: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitKind {
    AtomicActivity,
    ContextAttribute,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct AtomicUnit {
    pub kind: UnitKind,
    pub label: String,
    pub weight: f64,
    pub sequence_index: usize,
}

impl AtomicUnit {
    pub fn new(
        kind: UnitKind,
        label: impl Into<String>,
        weight: f64,
        sequence_index: usize,
    ) -> Self {
        AtomicUnit {
            kind,
            label: label.into(),
            weight,
            sequence_index,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileParams {
    pub core_threshold: f64,
    pub boundary_width: usize,
}

impl Default for ProfileParams {
    fn default() -> Self {
        ProfileParams {
            core_threshold: DEFAULT_CORE_THRESHOLD,
            boundary_width: DEFAULT_BOUNDARY_WIDTH,
        }
    }
}

/// Index sets refer to positions in `atomic_activities` / `context_attributes`,
/// which are kept sorted by `sequence_index`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexActivityProfile {
    pub atomic_activities: Vec<AtomicUnit>,
    pub context_attributes: Vec<AtomicUnit>,
    pub start_atomic: Vec<usize>,
    pub start_context: Vec<usize>,
    pub end_atomic: Vec<usize>,
    pub end_context: Vec<usize>,
    pub core_atomic: Vec<usize>,
    pub core_context: Vec<usize>,
    /// All ways of performing the activity.
    pub zeta: u64,
    /// Ways that always reach the end goal.
    pub theta: u64,
    /// Ways that never reach the end goal.
    pub psi: u64,
}

impl ComplexActivityProfile {
    /// Number of atomic activities (η).
    pub fn eta(&self) -> usize {
        self.atomic_activities.len()
    }

    /// Number of context attributes (μ).
    pub fn mu(&self) -> usize {
        self.context_attributes.len()
    }

    /// Number of core atomic activities (q).
    pub fn q(&self) -> usize {
        self.core_atomic.len()
    }

    /// Number of core context attributes (ω).
    pub fn omega(&self) -> usize {
        self.core_context.len()
    }
}

fn check_counts(eta: u32, q: u32) -> Result<()> {
    if eta > MAX_ATOMIC_COUNT {
        return Err(Error::Overflow(format!(
            "2^{eta} does not fit the counting range (eta <= {MAX_ATOMIC_COUNT})"
        )));
    }
    if q > eta {
        return Err(Error::InvalidArgument(format!(
            "core count q={q} exceeds atomic count eta={eta}"
        )));
    }
    Ok(())
}

/// ζ = 2^η.
pub fn count_all_ways(eta: u32) -> Result<u64> {
    check_counts(eta, 0)?;
    Ok(1u64 << eta)
}

/// Θ = 2^(η − q): subsets that contain every core atomic activity.
pub fn count_goal_reaching(eta: u32, q: u32) -> Result<u64> {
    check_counts(eta, q)?;
    Ok(1u64 << (eta - q))
}

/// Ψ = 2^η − 2^(η − q) = 2^(η − q)·(2^q − 1).
pub fn count_never_reaching(eta: u32, q: u32) -> Result<u64> {
    check_counts(eta, q)?;
    let difference = (1u64 << eta) - (1u64 << (eta - q));
    let factored = (1u64 << (eta - q)) * ((1u64 << q) - 1);
    assert_eq!(
        difference, factored,
        "closed forms of the failing-variant count disagree for eta={eta}, q={q}"
    );
    Ok(difference)
}

fn sorted_units(units: &[AtomicUnit], kind: UnitKind) -> Result<Vec<AtomicUnit>> {
    if units.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no {kind:?} units supplied"
        )));
    }
    let mut sorted = units.to_vec();
    sorted.sort_by_key(|u| u.sequence_index);
    for pair in sorted.windows(2) {
        if pair[0].sequence_index == pair[1].sequence_index {
            return Err(Error::InvalidArgument(format!(
                "duplicate sequence_index {} among {kind:?} units",
                pair[0].sequence_index
            )));
        }
    }
    for unit in &sorted {
        if unit.kind != kind {
            return Err(Error::InvalidArgument(format!(
                "unit `{}` is a {:?}, expected {kind:?}",
                unit.label, unit.kind
            )));
        }
        if !(0.0..=1.0).contains(&unit.weight) {
            return Err(Error::InvalidArgument(format!(
                "weight {} of unit `{}` is outside [0, 1]",
                unit.weight, unit.label
            )));
        }
    }
    Ok(sorted)
}

struct Selection {
    start: Vec<usize>,
    end: Vec<usize>,
    core: Vec<usize>,
}

fn select(units: &[AtomicUnit], params: &ProfileParams) -> Result<Selection> {
    let n = units.len();
    if params.boundary_width > n {
        return Err(Error::InvalidArgument(format!(
            "boundary width {} exceeds the {n} available units",
            params.boundary_width
        )));
    }
    Ok(Selection {
        start: (0..params.boundary_width).collect(),
        end: (n - params.boundary_width..n).collect(),
        core: (0..n)
            .filter(|&i| units[i].weight >= params.core_threshold)
            .collect(),
    })
}

/// Classify units into start / end / core sets and fill in ζ, Θ, Ψ from the
/// atomic activities. Units may be given in any order; they are arranged by
/// `sequence_index`.
pub fn derive_profile(
    atomic: &[AtomicUnit],
    context: &[AtomicUnit],
    params: &ProfileParams,
) -> Result<ComplexActivityProfile> {
    if !(0.0..=1.0).contains(&params.core_threshold) {
        return Err(Error::InvalidArgument(format!(
            "core threshold {} is outside [0, 1]",
            params.core_threshold
        )));
    }
    if params.boundary_width == 0 {
        return Err(Error::InvalidArgument(
            "boundary width must be positive".into(),
        ));
    }
    let atomic = sorted_units(atomic, UnitKind::AtomicActivity)?;
    let context = sorted_units(context, UnitKind::ContextAttribute)?;
    let a = select(&atomic, params)?;
    let c = select(&context, params)?;

    let eta = u32::try_from(atomic.len()).unwrap_or(u32::MAX);
    let q = a.core.len() as u32;
    Ok(ComplexActivityProfile {
        zeta: count_all_ways(eta)?,
        theta: count_goal_reaching(eta, q)?,
        psi: count_never_reaching(eta, q)?,
        atomic_activities: atomic,
        context_attributes: context,
        start_atomic: a.start,
        start_context: c.start,
        end_atomic: a.end,
        end_context: c.end,
        core_atomic: a.core,
        core_context: c.core,
    })
}

/// Read units from a comma-separated file with header
/// `kind,label,weight,sequence_index`. Returns `(atomic, context)`.
pub fn load_units(path: &Path) -> Result<(Vec<AtomicUnit>, Vec<AtomicUnit>)> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
    let mut atomic = Vec::new();
    let mut context = Vec::new();
    for unit in reader.deserialize::<AtomicUnit>() {
        let unit = unit.map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        match unit.kind {
            UnitKind::AtomicActivity => atomic.push(unit),
            UnitKind::ContextAttribute => context.push(unit),
        }
    }
    Ok((atomic, context))
}
