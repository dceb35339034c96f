//! Parameter grids over the extraction game, rendered as CSV or JSON.
//!
//! Cells are solved in parallel and emitted in axis1-major order. Numbers are
//! rounded to 9 significant digits before printing so output is stable
//! across platforms.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::equilibrium::{
    limits, symmetric_equilibrium, EquilibriumRecord, EquilibriumResult, GameInstance,
};
use crate::error::{Error, Result};
use crate::game::Policy;

/// The M values of the large-M table.
pub const LIMIT_TABLE_MS: [usize; 6] = [1, 2, 5, 10, 100, 1000];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Param {
    #[serde(rename = "dSP0")]
    DSp0,
    #[serde(rename = "dRT0")]
    DRt0,
    #[serde(rename = "dTR1")]
    DTr1,
    #[serde(rename = "dPS1")]
    DPs1,
    #[serde(rename = "alpha")]
    Alpha,
    #[serde(rename = "theta")]
    Theta,
    #[serde(rename = "M")]
    M,
}

impl Param {
    pub const ALL: [Param; 7] = [
        Param::DSp0,
        Param::DRt0,
        Param::DTr1,
        Param::DPs1,
        Param::Alpha,
        Param::Theta,
        Param::M,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Param::DSp0 => "dSP0",
            Param::DRt0 => "dRT0",
            Param::DTr1 => "dTR1",
            Param::DPs1 => "dPS1",
            Param::Alpha => "alpha",
            Param::Theta => "theta",
            Param::M => "M",
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Param {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Param::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::Sweep(format!("unknown parameter '{s}'")))
    }
}

/// One swept parameter: `steps` evenly spaced values from `min` to `max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub param: Param,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Axis {
    pub fn new(param: Param, min: f64, max: f64, steps: usize) -> Result<Self> {
        if steps < 2 {
            return Err(Error::Sweep(format!(
                "axis {param} needs at least 2 steps, got {steps}"
            )));
        }
        if !(min.is_finite() && max.is_finite() && min <= max) {
            return Err(Error::Sweep(format!(
                "axis {param} has bad range [{min}, {max}]"
            )));
        }
        Ok(Axis {
            param,
            min,
            max,
            steps,
        })
    }

    /// Values along the axis. `M` values are rounded to integers.
    pub fn values(&self) -> Vec<f64> {
        let span = self.max - self.min;
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|k| {
                let v = if k + 1 == self.steps {
                    self.max
                } else {
                    self.min + span * k as f64 / last
                };
                if self.param == Param::M {
                    v.round()
                } else {
                    v
                }
            })
            .collect()
    }
}

impl FromStr for Axis {
    type Err = Error;

    /// `name:min:max:steps`
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [name, min, max, steps] = parts[..] else {
            return Err(Error::Sweep(format!(
                "axis '{s}' is not name:min:max:steps"
            )));
        };
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Sweep(format!("bad number '{t}' in axis '{s}'")))
        };
        let steps = steps
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::Sweep(format!("bad step count '{steps}' in axis '{s}'")))?;
        Axis::new(name.trim().parse()?, num(min)?, num(max)?, steps)
    }
}

/// A full parameter assignment for one game instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    #[serde(rename = "dSP0")]
    pub d_sp0: f64,
    #[serde(rename = "dRT0")]
    pub d_rt0: f64,
    #[serde(rename = "dTR1")]
    pub d_tr1: f64,
    #[serde(rename = "dPS1")]
    pub d_ps1: f64,
    pub alpha: f64,
    pub theta: f64,
    #[serde(rename = "M")]
    pub m: usize,
}

impl Default for Params {
    /// The reference family: `theta = 1`, `alpha = 0.4`, `dTR1 = 2.1`,
    /// `dPS1 = 2`, `dSP0 = 2`, with `dRT0 = 0.2` and a single agent.
    fn default() -> Self {
        Params {
            d_sp0: 2.0,
            d_rt0: 0.2,
            d_tr1: 2.1,
            d_ps1: 2.0,
            alpha: 0.4,
            theta: 1.0,
            m: 1,
        }
    }
}

impl Params {
    pub fn get(&self, p: Param) -> f64 {
        match p {
            Param::DSp0 => self.d_sp0,
            Param::DRt0 => self.d_rt0,
            Param::DTr1 => self.d_tr1,
            Param::DPs1 => self.d_ps1,
            Param::Alpha => self.alpha,
            Param::Theta => self.theta,
            Param::M => self.m as f64,
        }
    }

    /// Sets a parameter; `M` must be a non-negative integer.
    pub fn set(&mut self, p: Param, v: f64) -> Result<()> {
        match p {
            Param::DSp0 => self.d_sp0 = v,
            Param::DRt0 => self.d_rt0 = v,
            Param::DTr1 => self.d_tr1 = v,
            Param::DPs1 => self.d_ps1 = v,
            Param::Alpha => self.alpha = v,
            Param::Theta => self.theta = v,
            Param::M => {
                if !(v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64) {
                    return Err(Error::Domain {
                        name: "M",
                        value: v,
                        domain: "{1, 2, ...}",
                    });
                }
                self.m = v as usize;
            }
        }
        Ok(())
    }

    pub fn policy(&self) -> Result<Policy> {
        Policy::new(self.d_sp0, self.d_rt0, self.d_tr1, self.d_ps1)
    }

    pub fn game(&self) -> Result<GameInstance> {
        GameInstance::new(self.m, self.policy()?, self.alpha, self.theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::Sweep(format!(
                "unknown format '{s}' (expected csv or json)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis1: Axis,
    pub axis2: Option<Axis>,
    pub fixed: Params,
}

impl SweepSpec {
    pub fn new(axis1: Axis, axis2: Option<Axis>, fixed: Params) -> Result<Self> {
        if let Some(a2) = &axis2 {
            if a2.param == axis1.param {
                return Err(Error::Sweep(format!("both axes sweep {}", axis1.param)));
            }
        }
        Ok(SweepSpec {
            axis1,
            axis2,
            fixed,
        })
    }

    pub fn axes(&self) -> Vec<Axis> {
        std::iter::once(self.axis1).chain(self.axis2).collect()
    }

    /// Parameter assignments of every cell, axis1-major.
    pub fn cells(&self) -> Result<Vec<Params>> {
        let v1 = self.axis1.values();
        let v2 = self.axis2.map(|a| a.values());
        let mut out = Vec::with_capacity(v1.len() * v2.as_ref().map_or(1, Vec::len));
        for &a in &v1 {
            let mut p = self.fixed;
            p.set(self.axis1.param, a)?;
            match (&self.axis2, &v2) {
                (Some(ax2), Some(v2)) => {
                    for &b in v2 {
                        let mut q = p;
                        q.set(ax2.param, b)?;
                        out.push(q);
                    }
                }
                _ => out.push(p),
            }
        }
        Ok(out)
    }
}

/// One solved cell. `result` is `None` where the parameters do not define a
/// valid game (outside the responsible region, `M = 0`, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub params: Params,
    pub result: Option<EquilibriumResult>,
}

impl SweepRow {
    pub fn regime(&self) -> &'static str {
        self.result
            .as_ref()
            .map_or("invalid", |r| r.regime.as_str())
    }
}

/// Solves one parameter assignment.
pub fn solve_cell(params: Params) -> Result<SweepRow> {
    let result = match params.game() {
        Ok(game) => Some(symmetric_equilibrium(&game)?),
        Err(_) => None,
    };
    Ok(SweepRow { params, result })
}

pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.cells()?.into_par_iter().map(solve_cell).collect()
}

/// `M`-sweep over `ms` with the other parameters held at `fixed`.
pub fn m_sweep(fixed: Params, ms: impl IntoIterator<Item = usize>) -> Result<Vec<SweepRow>> {
    let cells: Vec<Params> = ms.into_iter().map(|m| Params { m, ..fixed }).collect();
    cells.into_par_iter().map(solve_cell).collect()
}

/// Rounds to 9 significant digits.
pub fn round9(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().unwrap_or(x)
}

/// 9 significant digits, `.` decimal point, shortest form; exponent
/// notation outside `[1e-4, 1e15)`.
pub fn fmt_num(x: f64) -> String {
    let r = round9(x);
    if r == 0.0 {
        // Avoid "-0".
        "0".to_string()
    } else if r.abs() < 1e-4 || r.abs() >= 1e15 {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

const RESULT_COLUMNS: [&str; 4] = ["regime", "alpha_star", "R_star", "utility_star"];

fn row_cells(row: &SweepRow, axes: &[Param]) -> Vec<String> {
    let mut cells: Vec<String> = axes.iter().map(|&p| fmt_num(row.params.get(p))).collect();
    cells.push(row.regime().to_string());
    match &row.result {
        Some(r) => cells.extend([r.alpha_star, r.r_star, r.utility_star].map(fmt_num)),
        None => cells.extend(std::iter::repeat_n(String::new(), 3)),
    }
    cells
}

pub fn render_csv(axes: &[Param], rows: &[SweepRow]) -> String {
    let mut out = String::new();
    let header: Vec<&str> = axes
        .iter()
        .map(Param::as_str)
        .chain(RESULT_COLUMNS)
        .collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row_cells(row, axes).join(","));
        out.push('\n');
    }
    out
}

fn num_value(x: f64) -> Value {
    json!(round9(x))
}

fn row_json(row: &SweepRow, axes: &[Param]) -> Value {
    let mut obj = Map::new();
    for &p in axes {
        obj.insert(p.as_str().to_string(), num_value(row.params.get(p)));
    }
    obj.insert("regime".into(), json!(row.regime()));
    let (a, r, u) = match &row.result {
        Some(e) => (
            num_value(e.alpha_star),
            num_value(e.r_star),
            num_value(e.utility_star),
        ),
        None => (Value::Null, Value::Null, Value::Null),
    };
    obj.insert("alpha_star".into(), a);
    obj.insert("R_star".into(), r);
    obj.insert("utility_star".into(), u);
    Value::Object(obj)
}

/// A JSON array of row objects; invalid cells carry `null` numerics.
pub fn render_json(axes: &[Param], rows: &[SweepRow]) -> String {
    let arr: Vec<Value> = rows.iter().map(|r| row_json(r, axes)).collect();
    let mut s = serde_json::to_string_pretty(&Value::Array(arr)).unwrap_or_default();
    s.push('\n');
    s
}

pub fn render(format: Format, axes: &[Param], rows: &[SweepRow]) -> String {
    match format {
        Format::Csv => render_csv(axes, rows),
        Format::Json => render_json(axes, rows),
    }
}

/// Solves and renders a sweep.
pub fn sweep_output(spec: &SweepSpec, format: Format) -> Result<String> {
    let rows = run_sweep(spec)?;
    let axes: Vec<Param> = spec.axes().iter().map(|a| a.param).collect();
    Ok(render(format, &axes, &rows))
}

/// A single solved instance: header plus one row, or a JSON object.
pub fn render_record(format: Format, rec: &EquilibriumRecord) -> String {
    let mut v = serde_json::to_value(rec).unwrap_or(Value::Null);
    if let Value::Object(obj) = &mut v {
        for x in obj.values_mut() {
            if let Some(f) = x.as_f64().filter(|_| !x.is_u64()) {
                *x = num_value(f);
            }
        }
    }
    match format {
        Format::Csv => {
            let cells: Vec<String> = EquilibriumRecord::HEADER
                .iter()
                .map(|k| match &v[*k] {
                    Value::String(s) => s.clone(),
                    Value::Number(n) if n.is_u64() => n.to_string(),
                    Value::Number(n) => fmt_num(n.as_f64().unwrap_or(f64::NAN)),
                    _ => String::new(),
                })
                .collect();
            format!(
                "{}\n{}\n",
                EquilibriumRecord::HEADER.join(","),
                cells.join(",")
            )
        }
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&v).unwrap_or_default();
            s.push('\n');
            s
        }
    }
}

/// Large-`M` limits with the finite-`M` equilibria for comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitsTable {
    pub abar_inf: f64,
    #[serde(rename = "R_inf")]
    pub r_inf: f64,
    pub rows: Vec<(usize, EquilibriumResult)>,
}

pub fn limits_table(params: Params, ms: &[usize]) -> Result<LimitsTable> {
    let policy = params.policy()?;
    let (abar_inf, r_inf) = limits(&policy, params.alpha, params.theta)?;
    let game = params.game()?;
    let rows = ms
        .par_iter()
        .map(|&m| Ok((m, symmetric_equilibrium(&game.with_m(m)?)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(LimitsTable {
        abar_inf,
        r_inf,
        rows,
    })
}

impl LimitsTable {
    /// Columns `M,regime,alpha_star,abar_star,R_star`; the last row has
    /// `M = inf` and holds the limits.
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut out = String::from("M,regime,alpha_star,abar_star,R_star\n");
                for (m, e) in &self.rows {
                    out.push_str(&format!(
                        "{m},{},{},{},{}\n",
                        e.regime,
                        fmt_num(e.alpha_star),
                        fmt_num(e.abar_star),
                        fmt_num(e.r_star)
                    ));
                }
                out.push_str(&format!(
                    "inf,limit,0,{},{}\n",
                    fmt_num(self.abar_inf),
                    fmt_num(self.r_inf)
                ));
                out
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|(m, e)| {
                        json!({
                            "M": m,
                            "regime": e.regime.as_str(),
                            "alpha_star": round9(e.alpha_star),
                            "abar_star": round9(e.abar_star),
                            "R_star": round9(e.r_star),
                        })
                    })
                    .collect();
                let v = json!({
                    "abar_inf": round9(self.abar_inf),
                    "R_inf": round9(self.r_inf),
                    "table": rows,
                });
                let mut s = serde_json::to_string_pretty(&v).unwrap_or_default();
                s.push('\n');
                s
            }
        }
    }
}
