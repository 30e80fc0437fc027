//! Problem model: the continuous-time LP instance, its dual counterpart,
//! trajectories, serialization, and pointwise feasibility diagnostics.
//!
//! An instance is the triple `(A(t), b(t), c(t))` of piecewise-polynomial
//! data over a shared breakpoint partition of `[0, T]`, defining
//!
//! ```text
//! minimize  F(z) = integral_0^T c(t)' z(t) dt
//! s.t.      A(t) z(t) <= b(t)   a.e. in [0, T]
//! ```
//!
//! Everything stated "almost everywhere" is checked at grid nodes only;
//! trajectories may carry two rows at an interior breakpoint to represent
//! the one-sided limits of a jump.

use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, DenseMatrix};
use crate::timefunc::{refine_grid, Breakpoints, GridNode, PiecewiseFn, Poly, TimeGrid};
use serde_json::{json, Map, Value};

const AUDIT_NODES_PER_INTERVAL: usize = 33;

/// The primal continuous-time LP instance.
#[derive(Debug, Clone)]
pub struct CTLPInstance {
    horizon: f64,
    m: usize,
    n: usize,
    breakpoints: Breakpoints,
    a: Vec<Vec<PiecewiseFn>>,
    b: Vec<PiecewiseFn>,
    c: Vec<PiecewiseFn>,
    data_bound: f64,
}

impl CTLPInstance {
    /// Build an instance; entries may come with different breakpoint sets,
    /// which are merged (losslessly) into one shared partition.
    pub fn new(a: Vec<Vec<PiecewiseFn>>, b: Vec<PiecewiseFn>, c: Vec<PiecewiseFn>) -> Result<Self> {
        let m = a.len();
        if m == 0 || a[0].is_empty() {
            return Err(Error::input("instance needs at least one row and column"));
        }
        let n = a[0].len();
        if a.iter().any(|row| row.len() != n) {
            return Err(Error::input("ragged constraint matrix"));
        }
        if b.len() != m || c.len() != n {
            return Err(Error::input(format!(
                "dimension mismatch: A is {m}x{n}, |b| = {}, |c| = {}",
                b.len(),
                c.len()
            )));
        }

        let mut merged = a[0][0].breakpoints().clone();
        for f in a.iter().flatten().chain(b.iter()).chain(c.iter()) {
            merged = merged.merge(f.breakpoints())?;
        }
        let a: Vec<Vec<PiecewiseFn>> = a
            .into_iter()
            .map(|row| row.into_iter().map(|f| f.subdivide(&merged)).collect())
            .collect::<Result<_>>()?;
        let b: Vec<PiecewiseFn> = b
            .into_iter()
            .map(|f| f.subdivide(&merged))
            .collect::<Result<_>>()?;
        let c: Vec<PiecewiseFn> = c
            .into_iter()
            .map(|f| f.subdivide(&merged))
            .collect::<Result<_>>()?;

        let mut inst = CTLPInstance {
            horizon: merged.horizon(),
            m,
            n,
            breakpoints: merged,
            a,
            b,
            c,
            data_bound: 0.0,
        };
        inst.data_bound = inst.compute_data_bound()?;
        Ok(inst)
    }

    fn compute_data_bound(&self) -> Result<f64> {
        let grid = refine_grid(&self.breakpoints, AUDIT_NODES_PER_INTERVAL)?;
        let mut k: f64 = 0.0;
        for node in grid.nodes() {
            let (a, b, c) = self.eval_at_node(node);
            k = k.max(spectral_norm(&a)?);
            k = k.max(b.iter().map(|v| v * v).sum::<f64>().sqrt());
            k = k.max(c.iter().map(|v| v * v).sum::<f64>().sqrt());
        }
        Ok(k)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn num_rows(&self) -> usize {
        self.m
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn breakpoints(&self) -> &Breakpoints {
        &self.breakpoints
    }

    /// Uniform bound on `||A(t)||`, `||b(t)||`, `||c(t)||` sampled on a dense
    /// audit grid.
    pub fn data_bound(&self) -> f64 {
        self.data_bound
    }

    pub fn a_entry(&self, i: usize, j: usize) -> &PiecewiseFn {
        &self.a[i][j]
    }

    pub fn b_entry(&self, i: usize) -> &PiecewiseFn {
        &self.b[i]
    }

    pub fn c_entry(&self, j: usize) -> &PiecewiseFn {
        &self.c[j]
    }

    /// Pointwise data snapshot with the piece chosen right-continuously.
    pub fn eval_at(&self, t: f64) -> Result<(DenseMatrix, Vec<f64>, Vec<f64>)> {
        let piece = self.breakpoints.interval_of(t)?;
        Ok(self.eval_piece(piece, t))
    }

    /// Pointwise data snapshot from an explicit piece (for one-sided limits
    /// at breakpoints).
    pub fn eval_piece(&self, piece: usize, t: f64) -> (DenseMatrix, Vec<f64>, Vec<f64>) {
        let mut a = DenseMatrix::zeros(self.m, self.n);
        for i in 0..self.m {
            for j in 0..self.n {
                a.set(i, j, self.a[i][j].eval_piece(piece, t));
            }
        }
        let b = (0..self.m)
            .map(|i| self.b[i].eval_piece(piece, t))
            .collect();
        let c = (0..self.n)
            .map(|j| self.c[j].eval_piece(piece, t))
            .collect();
        (a, b, c)
    }

    pub fn eval_at_node(&self, node: &GridNode) -> (DenseMatrix, Vec<f64>, Vec<f64>) {
        self.eval_piece(node.interval, node.t)
    }

    /// Sup over the trajectory's nodes of the positive part of the largest
    /// constraint violation. Zero (at grid resolution) means feasible.
    pub fn feasibility_residual(&self, z: &Trajectory) -> Result<f64> {
        if z.dim() != self.n {
            return Err(Error::input(format!(
                "trajectory dimension {} does not match n = {}",
                z.dim(),
                self.n
            )));
        }
        let pieces = z.row_pieces(&self.breakpoints)?;
        let mut worst: f64 = 0.0;
        for (k, piece) in pieces.iter().enumerate() {
            let t = z.times()[k];
            let (a, b, _) = self.eval_piece(*piece, t);
            let az = a.mul_vec(z.row(k))?;
            for i in 0..self.m {
                worst = worst.max(az[i] - b[i]);
            }
        }
        Ok(worst.max(0.0))
    }

    /// Desk-scale boundedness diagnostic: at every grid node, maximizes
    /// `+z_j` and `-z_j` over the pointwise polyhedron.
    pub fn boundedness_probe(&self, grid: &TimeGrid) -> Result<BoundednessVerdict> {
        use crate::simplex::{solve_lp, FiniteLP, LpStatus};
        for node in grid.nodes() {
            let (a, b, _) = self.eval_at_node(node);
            for j in 0..self.n {
                for sign in [1.0, -1.0] {
                    let mut c = vec![0.0; self.n];
                    c[j] = -sign; // minimize -sign*z_j == maximize sign*z_j
                    let lp = FiniteLP::new(a.clone(), b.clone(), c)?;
                    match solve_lp(&lp)?.status() {
                        LpStatus::Optimal => {}
                        LpStatus::Infeasible => {
                            return Ok(BoundednessVerdict::InfeasibleAt { t: node.t });
                        }
                        LpStatus::Unbounded => {
                            let mut direction = vec![0.0; self.n];
                            direction[j] = sign;
                            return Ok(BoundednessVerdict::UnboundedAt {
                                t: node.t,
                                direction,
                            });
                        }
                    }
                }
            }
        }
        Ok(BoundednessVerdict::Bounded)
    }
}

/// Outcome of the pointwise boundedness probe.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundednessVerdict {
    Bounded,
    UnboundedAt { t: f64, direction: Vec<f64> },
    InfeasibleAt { t: f64 },
}

/// The dual problem over the same data:
/// maximize `integral b(t)' w(t) dt` s.t. `A(t)' w(t) = c(t)`, `w(t) <= 0`.
#[derive(Debug, Clone)]
pub struct CDPInstance {
    primal: CTLPInstance,
}

impl CDPInstance {
    pub fn from_primal(primal: CTLPInstance) -> Self {
        CDPInstance { primal }
    }

    pub fn primal(&self) -> &CTLPInstance {
        &self.primal
    }

    /// Dual variables: one per primal constraint.
    pub fn num_vars(&self) -> usize {
        self.primal.m
    }

    /// Dual equality rows: one per primal variable.
    pub fn num_eq_rows(&self) -> usize {
        self.primal.n
    }

    pub fn horizon(&self) -> f64 {
        self.primal.horizon
    }

    pub fn breakpoints(&self) -> &Breakpoints {
        &self.primal.breakpoints
    }
}

/// Interpolation convention between trajectory rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    #[default]
    PiecewiseLinear,
    PiecewiseConstantRight,
}

/// A vector-valued function of time sampled at grid rows.
///
/// Rows are sorted by time. Two rows may share the time of an interior
/// breakpoint; they then carry the left and right limits of a jump, in that
/// order, and the zero-length segment between them is ignored by quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
    interpolation: Interpolation,
}

impl Trajectory {
    pub fn new(
        times: Vec<f64>,
        values: Vec<Vec<f64>>,
        interpolation: Interpolation,
    ) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::input(
                "trajectory needs one value row per time, at least one row",
            ));
        }
        let dim = values[0].len();
        if dim == 0 || values.iter().any(|v| v.len() != dim) {
            return Err(Error::input(
                "trajectory value rows must share one dimension",
            ));
        }
        if times.iter().any(|t| !t.is_finite()) || values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::input("trajectory entries must be finite"));
        }
        if times.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::input("trajectory times must be sorted"));
        }
        Ok(Trajectory {
            times,
            values,
            interpolation,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k]
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    /// Map each row to the breakpoint interval owning it. Duplicate times are
    /// allowed only at interior breakpoints and mean (left piece, right
    /// piece) in row order.
    pub fn row_pieces(&self, bp: &Breakpoints) -> Result<Vec<usize>> {
        let horizon = bp.horizon();
        let mut out = Vec::with_capacity(self.len());
        let mut k = 0;
        while k < self.len() {
            let t = self.times[k];
            if !(0.0..=horizon).contains(&t) {
                return Err(Error::domain(format!(
                    "trajectory time {t} outside [0, {horizon}]"
                )));
            }
            let mut dup = 1;
            while k + dup < self.len() && self.times[k + dup] == t {
                dup += 1;
            }
            match dup {
                1 => out.push(bp.interval_of(t)?),
                2 => {
                    let pos = bp.position_of(t).ok_or_else(|| {
                        Error::input(format!("repeated trajectory time {t} is not a breakpoint"))
                    })?;
                    if pos == 0 || pos == bp.points().len() - 1 {
                        return Err(Error::input(format!(
                            "repeated trajectory time {t} at the domain boundary"
                        )));
                    }
                    out.push(pos - 1); // left limit
                    out.push(pos); // right limit
                }
                _ => {
                    return Err(Error::input(format!(
                        "trajectory time {t} appears {dup} times; at most two rows per time"
                    )))
                }
            }
            k += dup;
        }
        Ok(out)
    }

    /// Negated copy (used to turn multipliers into dual trajectories).
    pub fn negated(&self) -> Trajectory {
        Trajectory {
            times: self.times.clone(),
            values: self
                .values
                .iter()
                .map(|row| row.iter().map(|v| -v).collect())
                .collect(),
            interpolation: self.interpolation,
        }
    }

    /// CSV with header `t,v1,...,vk` and 17 significant digits per value.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for j in 1..=self.dim() {
            out.push_str(&format!(",v{j}"));
        }
        out.push('\n');
        for (t, row) in self.times.iter().zip(&self.values) {
            out.push_str(&format!("{t:.16e}"));
            for v in row {
                out.push_str(&format!(",{v:.16e}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Trajectory> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::load("csv", "empty trajectory file"))?;
        if !header.trim_start().starts_with('t') {
            return Err(Error::load(
                "csv header",
                "expected header starting with `t`",
            ));
        }
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let mut fields = line.split(',');
            let path = format!("csv row {}", lineno + 1);
            let t: f64 = fields
                .next()
                .ok_or_else(|| Error::load(path.clone(), "missing time"))?
                .trim()
                .parse()
                .map_err(|e| Error::load(path.clone(), format!("bad time: {e}")))?;
            let row: Vec<f64> = fields
                .map(|f| {
                    f.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::load(path.clone(), format!("bad value: {e}")))
                })
                .collect::<Result<_>>()?;
            if row.is_empty() {
                return Err(Error::load(path, "row has no values"));
            }
            times.push(t);
            values.push(row);
        }
        Trajectory::new(times, values, Interpolation::PiecewiseLinear)
    }
}

// ---------------------------------------------------------------------------
// JSON (de)serialization. Coefficients travel as decimal strings so saved
// instances round-trip bit-exactly and diff cleanly.
// ---------------------------------------------------------------------------

fn parse_number_string(v: &Value, path: &str) -> Result<f64> {
    let s = v
        .as_str()
        .ok_or_else(|| Error::load(path, "expected a decimal string"))?;
    let x: f64 = s
        .trim()
        .parse()
        .map_err(|e| Error::load(path, format!("bad decimal `{s}`: {e}")))?;
    if !x.is_finite() {
        return Err(Error::load(path, format!("non-finite coefficient `{s}`")));
    }
    Ok(x)
}

fn parse_piecewise(v: &Value, path: &str, bp: &Breakpoints) -> Result<PiecewiseFn> {
    let pieces_json = v
        .as_array()
        .ok_or_else(|| Error::load(path, "expected an array of pieces"))?;
    if pieces_json.len() != bp.interval_count() {
        return Err(Error::load(
            path,
            format!(
                "expected {} pieces (one per interval), got {}",
                bp.interval_count(),
                pieces_json.len()
            ),
        ));
    }
    let mut pieces = Vec::with_capacity(pieces_json.len());
    for (pi, piece) in pieces_json.iter().enumerate() {
        let ppath = format!("{path}[{pi}]");
        let coeffs_json = piece
            .as_array()
            .ok_or_else(|| Error::load(&*ppath, "expected an array of coefficients"))?;
        if coeffs_json.is_empty() {
            return Err(Error::load(&*ppath, "piece needs at least one coefficient"));
        }
        let mut coeffs = Vec::with_capacity(coeffs_json.len());
        for (ci, cv) in coeffs_json.iter().enumerate() {
            coeffs.push(parse_number_string(cv, &format!("{ppath}[{ci}]"))?);
        }
        pieces.push(Poly::new(coeffs));
    }
    PiecewiseFn::new(bp.clone(), pieces).map_err(|e| Error::load(path, e.to_string()))
}

/// Parse an instance document (see the schema in the README).
pub fn load_instance(text: &str) -> Result<CTLPInstance> {
    let root: Value = serde_json::from_str(text)
        .map_err(|e| Error::load("document", format!("invalid JSON: {e}")))?;
    let obj = root
        .as_object()
        .ok_or_else(|| Error::load("document", "expected a JSON object"))?;

    if let Some(sense) = obj.get("sense") {
        if sense.as_str() != Some("primal") {
            return Err(Error::load(
                "sense",
                "only primal instances can be loaded here; the dual of a dual \
                 (the bidual) is not defined by this toolkit",
            ));
        }
    }

    let horizon = obj
        .get("T")
        .and_then(Value::as_f64)
        .ok_or_else(|| Error::load("T", "expected a number"))?;
    let m = obj
        .get("m")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::load("m", "expected a positive integer"))? as usize;
    let n = obj
        .get("n")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::load("n", "expected a positive integer"))? as usize;
    if m == 0 || n == 0 {
        return Err(Error::load("m/n", "dimensions must be positive"));
    }

    let bp_json = obj
        .get("breakpoints")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::load("breakpoints", "expected an array"))?;
    let mut points = Vec::with_capacity(bp_json.len());
    for (i, p) in bp_json.iter().enumerate() {
        points.push(parse_number_string(p, &format!("breakpoints[{i}]"))?);
    }
    let bp = Breakpoints::new(points).map_err(|e| Error::load("breakpoints", e.to_string()))?;
    if bp.horizon() != horizon {
        return Err(Error::load(
            "breakpoints",
            format!("last breakpoint {} must equal T = {horizon}", bp.horizon()),
        ));
    }

    let a_json = obj
        .get("A")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::load("A", "expected an array of rows"))?;
    if a_json.len() != m {
        return Err(Error::load(
            "A",
            format!("expected {m} rows, got {}", a_json.len()),
        ));
    }
    let mut a = Vec::with_capacity(m);
    for (i, row) in a_json.iter().enumerate() {
        let row_json = row
            .as_array()
            .ok_or_else(|| Error::load(format!("A[{i}]"), "expected an array of entries"))?;
        if row_json.len() != n {
            return Err(Error::load(
                format!("A[{i}]"),
                format!("expected {n} entries, got {}", row_json.len()),
            ));
        }
        let mut out_row = Vec::with_capacity(n);
        for (j, entry) in row_json.iter().enumerate() {
            out_row.push(parse_piecewise(entry, &format!("A[{i}][{j}]"), &bp)?);
        }
        a.push(out_row);
    }

    let parse_vec = |key: &str, len: usize| -> Result<Vec<PiecewiseFn>> {
        let arr = obj
            .get(key)
            .and_then(Value::as_array)
            .ok_or_else(|| Error::load(key, "expected an array"))?;
        if arr.len() != len {
            return Err(Error::load(
                key,
                format!("expected {len} entries, got {}", arr.len()),
            ));
        }
        arr.iter()
            .enumerate()
            .map(|(i, v)| parse_piecewise(v, &format!("{key}[{i}]"), &bp))
            .collect()
    };
    let b = parse_vec("b", m)?;
    let c = parse_vec("c", n)?;

    CTLPInstance::new(a, b, c)
}

fn piecewise_to_json(f: &PiecewiseFn) -> Value {
    Value::Array(
        f.pieces()
            .iter()
            .map(|p| {
                Value::Array(
                    p.coeffs()
                        .iter()
                        .map(|c| Value::String(format!("{c}")))
                        .collect(),
                )
            })
            .collect(),
    )
}

fn instance_to_json(inst: &CTLPInstance, sense: &str) -> Value {
    let mut obj = Map::new();
    obj.insert("schema".into(), json!(1));
    obj.insert("sense".into(), json!(sense));
    obj.insert("T".into(), json!(inst.horizon));
    obj.insert("m".into(), json!(inst.m));
    obj.insert("n".into(), json!(inst.n));
    obj.insert(
        "breakpoints".into(),
        Value::Array(
            inst.breakpoints
                .points()
                .iter()
                .map(|p| Value::String(format!("{p}")))
                .collect(),
        ),
    );
    obj.insert(
        "A".into(),
        Value::Array(
            inst.a
                .iter()
                .map(|row| Value::Array(row.iter().map(piecewise_to_json).collect()))
                .collect(),
        ),
    );
    obj.insert(
        "b".into(),
        Value::Array(inst.b.iter().map(piecewise_to_json).collect()),
    );
    obj.insert(
        "c".into(),
        Value::Array(inst.c.iter().map(piecewise_to_json).collect()),
    );
    Value::Object(obj)
}

/// Serialize an instance with coefficients as shortest round-trip decimal
/// strings.
pub fn save_instance(inst: &CTLPInstance) -> String {
    serde_json::to_string_pretty(&instance_to_json(inst, "primal")).unwrap()
}

/// Serialize the dual: same data, `"sense": "dual"` marker. The constraints
/// read `A(t)' w(t) = c(t)`, `w(t) <= 0`, objective maximize
/// `integral b(t)' w(t) dt`.
pub fn save_dual(dual: &CDPInstance) -> String {
    serde_json::to_string_pretty(&instance_to_json(dual.primal(), "dual")).unwrap()
}

/// The bundled two-piece example instance (5 constraints, 2 variables,
/// horizon 2).
pub fn example1() -> CTLPInstance {
    load_instance(include_str!("../data/example1.json")).expect("bundled instance parses")
}
