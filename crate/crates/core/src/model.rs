//! Solver-agnostic sparse MILP representation.
//!
//! Every row carries the [`ConstraintFamily`] it encodes so model audits and
//! diagnostics can be grouped by constraint type. Objective sense is always
//! minimization.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintFamily {
    FlowContinuity,
    Demand,
    VirtualEdge,
    DepartureCap,
    ChargeGate,
    NoChargeVirtual,
    ChargeLimit,
    AircraftEnergy,
    AircraftEnergyInitial,
    AircraftEnergyBounds,
    AircraftEnergyFinal,
    ApronSum,
    ApronLimit,
    ApronOffOps,
    PowerSplit,
    BessCharge,
    BessDischarge,
    BessBounds,
    BessPowerLimit,
    BessPeriodicity,
    BessOpsFloor,
    SolarCap,
    GridNonNegative,
    FixedSchedule,
    SymmetryBreaking,
    Objective,
}

impl ConstraintFamily {
    pub fn tag(self) -> &'static str {
        match self {
            Self::FlowContinuity => "flow_continuity",
            Self::Demand => "demand",
            Self::VirtualEdge => "virtual_edge",
            Self::DepartureCap => "departure_cap",
            Self::ChargeGate => "charge_gate",
            Self::NoChargeVirtual => "no_charge_virtual",
            Self::ChargeLimit => "charge_limit",
            Self::AircraftEnergy => "aircraft_energy",
            Self::AircraftEnergyInitial => "aircraft_energy_initial",
            Self::AircraftEnergyBounds => "aircraft_energy_bounds",
            Self::AircraftEnergyFinal => "aircraft_energy_final",
            Self::ApronSum => "apron_sum",
            Self::ApronLimit => "apron_limit",
            Self::ApronOffOps => "apron_off_ops",
            Self::PowerSplit => "power_split",
            Self::BessCharge => "bess_charge",
            Self::BessDischarge => "bess_discharge",
            Self::BessBounds => "bess_bounds",
            Self::BessPowerLimit => "bess_power_limit",
            Self::BessPeriodicity => "bess_periodicity",
            Self::BessOpsFloor => "bess_ops_floor",
            Self::SolarCap => "solar_cap",
            Self::GridNonNegative => "grid_non_negative",
            Self::FixedSchedule => "fixed_schedule",
            Self::SymmetryBreaking => "symmetry_breaking",
            Self::Objective => "objective",
        }
    }
}

impl fmt::Display for ConstraintFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub integer: bool,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub family: ConstraintFamily,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(c, a)| a * values[c]).sum()
    }

    /// Amount by which `values` violate the row, zero when satisfied.
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.activity(values);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("row `{0}` has no terms")]
    EmptyRow(String),
    #[error("row `{row}` references column {column} of {columns}")]
    UnknownColumn {
        row: String,
        column: usize,
        columns: usize,
    },
    #[error("column `{name}` has empty bounds [{lower}, {upper}]")]
    EmptyBounds { name: String, lower: f64, upper: f64 },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelIr {
    pub columns: Vec<Column>,
    pub rows: Vec<Row>,
}

impl ModelIr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_column(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        integer: bool,
        cost: f64,
    ) -> usize {
        self.columns.push(Column {
            name: name.into(),
            lower,
            upper,
            integer,
            cost,
        });
        self.columns.len() - 1
    }

    pub fn add_row(
        &mut self,
        family: ConstraintFamily,
        name: impl Into<String>,
        terms: Vec<(usize, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> Result<usize, ModelError> {
        let name = name.into();
        if terms.is_empty() {
            return Err(ModelError::EmptyRow(name));
        }
        if let Some(&(column, _)) = terms.iter().find(|(c, _)| *c >= self.columns.len()) {
            return Err(ModelError::UnknownColumn {
                row: name,
                column,
                columns: self.columns.len(),
            });
        }
        self.rows.push(Row {
            name,
            family,
            terms,
            sense,
            rhs,
        });
        Ok(self.rows.len() - 1)
    }

    pub fn fix_column(&mut self, column: usize, value: f64) {
        let c = &mut self.columns[column];
        c.lower = value;
        c.upper = value;
    }

    /// Copy with every integrality requirement dropped.
    pub fn relaxed(&self) -> ModelIr {
        let mut m = self.clone();
        m.columns.iter_mut().for_each(|c| c.integer = false);
        m
    }

    /// Integer columns whose bounds still leave a choice.
    pub fn num_free_integers(&self) -> usize {
        self.columns
            .iter()
            .filter(|c| c.integer && c.lower != c.upper)
            .count()
    }

    pub fn is_pure_lp(&self) -> bool {
        self.num_free_integers() == 0
    }

    pub fn check_bounds(&self) -> Result<(), ModelError> {
        match self.columns.iter().find(|c| !(c.lower <= c.upper)) {
            Some(c) => Err(ModelError::EmptyBounds {
                name: c.name.clone(),
                lower: c.lower,
                upper: c.upper,
            }),
            None => Ok(()),
        }
    }

    pub fn objective(&self, values: &[f64]) -> f64 {
        self.columns.iter().zip(values).map(|(c, v)| c.cost * v).sum()
    }

    /// Largest row or bound violation of `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let rows = self.rows.iter().map(|r| r.violation(values)).fold(0.0, f64::max);
        let bounds = self
            .columns
            .iter()
            .zip(values)
            .map(|(c, &v)| (c.lower - v).max(v - c.upper).max(0.0))
            .fold(0.0, f64::max);
        rows.max(bounds)
    }

    pub fn rows_by_family(&self) -> BTreeMap<ConstraintFamily, usize> {
        let mut counts = BTreeMap::new();
        for r in &self.rows {
            *counts.entry(r.family).or_insert(0) += 1;
        }
        counts
    }

    /// Export in CPLEX LP text format.
    pub fn write_lp(&self, mut out: impl Write) -> io::Result<()> {
        writeln!(out, "\\ {} columns, {} rows", self.columns.len(), self.rows.len())?;
        writeln!(out, "Minimize")?;
        let objective: Vec<(usize, f64)> = self
            .columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.cost != 0.0)
            .map(|(i, c)| (i, c.cost))
            .collect();
        write!(out, " obj:")?;
        if objective.is_empty() {
            match self.columns.first() {
                Some(c) => write!(out, " 0 {}", c.name)?,
                None => write!(out, " 0")?,
            }
        } else {
            self.write_terms(&mut out, &objective)?;
        }
        writeln!(out)?;

        writeln!(out, "Subject To")?;
        for r in &self.rows {
            write!(out, " {}:", r.name)?;
            self.write_terms(&mut out, &r.terms)?;
            writeln!(out, " {} {}", r.sense.symbol(), lp_number(r.rhs))?;
        }

        writeln!(out, "Bounds")?;
        for c in &self.columns {
            if c.integer && c.lower == 0.0 && c.upper == 1.0 {
                continue;
            }
            match (c.lower.is_finite(), c.upper.is_finite()) {
                (false, false) => writeln!(out, " {} free", c.name)?,
                (true, false) => writeln!(out, " {} >= {}", c.name, lp_number(c.lower))?,
                (false, true) => writeln!(out, " -inf <= {} <= {}", c.name, lp_number(c.upper))?,
                (true, true) if c.lower == c.upper => writeln!(out, " {} = {}", c.name, lp_number(c.lower))?,
                (true, true) => writeln!(
                    out,
                    " {} <= {} <= {}",
                    lp_number(c.lower),
                    c.name,
                    lp_number(c.upper)
                )?,
            }
        }

        let binaries: Vec<&str> = self
            .columns
            .iter()
            .filter(|c| c.integer && c.lower == 0.0 && c.upper == 1.0)
            .map(|c| c.name.as_str())
            .collect();
        let generals: Vec<&str> = self
            .columns
            .iter()
            .filter(|c| c.integer && !(c.lower == 0.0 && c.upper == 1.0))
            .map(|c| c.name.as_str())
            .collect();
        for (header, names) in [("Binaries", binaries), ("Generals", generals)] {
            if names.is_empty() {
                continue;
            }
            writeln!(out, "{header}")?;
            for chunk in names.chunks(8) {
                writeln!(out, " {}", chunk.join(" "))?;
            }
        }
        writeln!(out, "End")
    }

    fn write_terms(&self, out: &mut impl Write, terms: &[(usize, f64)]) -> io::Result<()> {
        for (i, &(col, coef)) in terms.iter().enumerate() {
            if i > 0 && i % 8 == 0 {
                write!(out, "\n   ")?;
            }
            let sign = if coef < 0.0 { "-" } else { "+" };
            if i == 0 && coef >= 0.0 {
                write!(out, " {} {}", lp_number(coef), self.columns[col].name)?;
            } else {
                write!(
                    out,
                    " {sign} {} {}",
                    lp_number(coef.abs()),
                    self.columns[col].name
                )?;
            }
        }
        Ok(())
    }
}

fn lp_number(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v}")
    }
}
