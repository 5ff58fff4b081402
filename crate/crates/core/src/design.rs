//! Approximate designs, standardized information, c-criterion, efficiencies, products and
//! rounding to exact designs.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{in_range, kron, quad, sym_pinv, symmetrize};
use crate::model::{ProductModel, Region, Regression};

/// Support points closer than this (infinity norm) are merged.
pub const MERGE_TOL: f64 = 1e-9;
/// Allowed deviation of the weight sum from one.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Finitely supported probability measure on a design region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDesign", into = "RawDesign")]
pub struct ApproximateDesign {
    support: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDesign {
    support: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl TryFrom<RawDesign> for ApproximateDesign {
    type Error = Error;

    fn try_from(r: RawDesign) -> Result<Self> {
        ApproximateDesign::new(r.support, r.weights)
    }
}

impl From<ApproximateDesign> for RawDesign {
    fn from(d: ApproximateDesign) -> Self {
        RawDesign {
            support: d.support,
            weights: d.weights,
        }
    }
}

impl ApproximateDesign {
    /// Validates positivity and the unit sum, merging coincident support points.
    pub fn new(support: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if support.len() != weights.len() {
            return Err(Error::InvalidInput(format!(
                "{} support points but {} weights",
                support.len(),
                weights.len()
            )));
        }
        if support.is_empty() {
            return Err(Error::InvalidInput("design has no support points".into()));
        }
        let d = support[0].len();
        if d == 0 || support.iter().any(|x| x.len() != d) {
            return Err(Error::InvalidInput("support points must share a positive dimension".into()));
        }
        if support.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("support points must be finite".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidInput(format!("weight {w} is not positive")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidInput(format!("weights sum to {sum}, not 1")));
        }
        Ok(merge(support, weights))
    }

    /// Drops non-positive weights and rescales the rest to sum to one.
    pub fn normalized(support: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if support.len() != weights.len() {
            return Err(Error::InvalidInput("support and weights differ in length".into()));
        }
        let (s, w): (Vec<_>, Vec<_>) = support
            .into_iter()
            .zip(weights)
            .filter(|(_, w)| *w > 0.0 && w.is_finite())
            .unzip();
        let total: f64 = w.iter().sum();
        if s.is_empty() || total <= 0.0 {
            return Err(Error::InvalidInput("no positive weights".into()));
        }
        let w: Vec<f64> = w.iter().map(|v| v / total).collect();
        let sum: f64 = w.iter().sum();
        Self::new(s, fix_sum(w, sum))
    }

    pub fn one_point(x: Vec<f64>) -> Self {
        Self::new(vec![x], vec![1.0]).expect("single point design")
    }

    /// Equal weights on the given points.
    pub fn uniform(points: Vec<Vec<f64>>) -> Result<Self> {
        let m = points.len();
        Self::normalized(points, vec![1.0; m])
    }

    pub fn support(&self) -> &[Vec<f64>] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Dimension of the support points.
    pub fn dim(&self) -> usize {
        self.support[0].len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.support.iter().map(|x| x.as_slice()).zip(self.weights.iter().copied())
    }

    /// Weight at `x`, zero when `x` is not a support point.
    pub fn weight_at(&self, x: &[f64]) -> f64 {
        self.iter()
            .find(|(s, _)| inf_dist(s, x) < MERGE_TOL)
            .map_or(0.0, |(_, w)| w)
    }

    /// `Σ w_i f(x_i) f(x_i)ᵀ`.
    pub fn information<R: Regression + ?Sized>(&self, reg: &R) -> DMatrix<f64> {
        let p = reg.dim();
        let mut m = DMatrix::zeros(p, p);
        for (x, w) in self.iter() {
            let f = reg.features(x);
            m.ger(w, &f, &f, 1.0);
        }
        symmetrize(&m)
    }

    pub fn within(&self, region: &Region) -> bool {
        self.support.iter().all(|x| region.contains(x))
    }

    /// Support points sorted lexicographically with their weights; useful for comparisons.
    pub fn sorted(&self) -> Self {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| {
            self.support[a]
                .iter()
                .zip(&self.support[b])
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        Self {
            support: idx.iter().map(|&i| self.support[i].clone()).collect(),
            weights: idx.iter().map(|&i| self.weights[i]).collect(),
        }
    }

    /// Writes `x1,...,xd,weight` rows with a header.
    pub fn write_csv<W: Write>(&self, out: W, coord_names: &[String]) -> Result<()> {
        let names: Vec<String> = if coord_names.len() == self.dim() {
            coord_names.to_vec()
        } else {
            (1..=self.dim()).map(|i| format!("x{i}")).collect()
        };
        let mut w = csv::Writer::from_writer(out);
        let mut header = names;
        header.push("weight".into());
        w.write_record(&header).map_err(csv_err)?;
        for (x, wt) in self.iter() {
            let mut rec: Vec<String> = x.iter().map(|v| fmt_num(*v)).collect();
            rec.push(fmt_num(wt));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the CSV layout produced by [`write_csv`](Self::write_csv); the last column is the weight.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let mut support = Vec::new();
        let mut weights = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(csv_err)?;
            let vals = rec
                .iter()
                .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            let (w, x) = vals
                .split_last()
                .ok_or_else(|| Error::Parse("empty design row".into()))?;
            support.push(x.to_vec());
            weights.push(*w);
        }
        let sum: f64 = weights.iter().sum();
        // CSV values are rounded for display; accept them if they sum to one up to that rounding
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("design weights sum to {sum}")));
        }
        Self::normalized(support, weights)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Rounds to 12 significant digits for text output.
pub fn fmt_num(v: f64) -> String {
    format!("{}", round_sig(v, 12))
}

/// Rounds `v` to `digits` significant digits (decimal, correctly rounded).
pub fn round_sig(v: f64, digits: usize) -> f64 {
    if v == 0.0 || !v.is_finite() || digits == 0 {
        return v;
    }
    format!("{:.*e}", digits - 1, v).parse().unwrap_or(v)
}

fn fix_sum(mut w: Vec<f64>, sum: f64) -> Vec<f64> {
    if let Some(i) = (0..w.len()).max_by(|&a, &b| w[a].total_cmp(&w[b])) {
        w[i] += 1.0 - sum;
    }
    w
}

fn inf_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn merge(support: Vec<Vec<f64>>, weights: Vec<f64>) -> ApproximateDesign {
    let mut s: Vec<Vec<f64>> = Vec::with_capacity(support.len());
    let mut w: Vec<f64> = Vec::with_capacity(weights.len());
    for (x, wx) in support.into_iter().zip(weights) {
        match s.iter().position(|y| inf_dist(y, &x) < MERGE_TOL) {
            Some(i) => w[i] += wx,
            None => {
                s.push(x);
                w.push(wx);
            }
        }
    }
    ApproximateDesign { support: s, weights: w }
}

/// Information matrix with its numerical rank.
#[derive(Debug, Clone)]
pub struct Information {
    pub matrix: DMatrix<f64>,
    pub rank: usize,
}

/// Standardized stress information `M1(ξ)`.
pub fn stress_info(design: &ApproximateDesign, model: &ProductModel) -> Result<Information> {
    if design.dim() != model.stress_input_dim() {
        return Err(Error::Domain(format!(
            "design points have {} coordinates, stress model takes {}",
            design.dim(),
            model.stress_input_dim()
        )));
    }
    let region = model.stress().region();
    if !design.within(&region) {
        return Err(Error::Domain("design support leaves the stress region".into()));
    }
    let matrix = design.information(model.stress());
    let rank = sym_pinv(&matrix).1;
    Ok(Information { matrix, rank })
}

/// Value of `cᵀ M⁻ c` with feasibility and rank flags.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriterionValue {
    /// `+∞` when `c` is not estimable.
    pub value: f64,
    pub feasible: bool,
    /// True when `M` is singular; the full model then cannot be fitted by ML from this design.
    pub non_estimable_full_model: bool,
}

/// `cᵀ M⁻ c` for a symmetric PSD information matrix.
pub fn c_value(m: &DMatrix<f64>, c: &DVector<f64>) -> CriterionValue {
    let (pinv, rank) = sym_pinv(m);
    let singular = rank < m.nrows();
    if singular && !in_range(m, &pinv, c) {
        return CriterionValue {
            value: f64::INFINITY,
            feasible: false,
            non_estimable_full_model: true,
        };
    }
    CriterionValue {
        value: quad(&pinv, c).max(0.0),
        feasible: true,
        non_estimable_full_model: singular,
    }
}

/// `Φ_c(ξ) = cᵀ M(ξ)⁻ c`.
pub fn c_criterion<R: Regression + ?Sized>(design: &ApproximateDesign, reg: &R, c: &DVector<f64>) -> CriterionValue {
    c_value(&design.information(reg), c)
}

/// Efficiency of a candidate against a reference design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Efficiency {
    pub value: f64,
    /// False when `c` is not estimable under the candidate; `value` is then 0.
    pub feasible: bool,
}

/// `Φ_c(reference) / Φ_c(candidate)`.
pub fn efficiency<R: Regression + ?Sized>(
    candidate: &ApproximateDesign,
    reference: &ApproximateDesign,
    reg: &R,
    c: &DVector<f64>,
) -> Result<Efficiency> {
    let r = c_criterion(reference, reg, c);
    if !r.feasible {
        return Err(Error::Infeasible("reference design cannot estimate c".into()));
    }
    Ok(efficiency_from_values(r.value, c_criterion(candidate, reg, c)))
}

pub(crate) fn efficiency_from_values(reference: f64, candidate: CriterionValue) -> Efficiency {
    if !candidate.feasible {
        return Efficiency {
            value: 0.0,
            feasible: false,
        };
    }
    Efficiency {
        value: if candidate.value > 0.0 { reference / candidate.value } else { 1.0 },
        feasible: true,
    }
}

/// Equivalence-theorem gap `max_x (f(x)ᵀ M⁻¹ c)² / (cᵀ M⁻¹ c) − 1` over candidate points.
///
/// Non-positive (up to rounding) exactly when the design is c-optimal on the candidate set.
/// For singular `M` the Moore-Penrose inverse is not the right generalized inverse for this
/// check; the gap is then `Φ_c(ξ) / Φ_c* − 1` with `Φ_c*` from the Elfving LP on the same
/// candidates, which is zero exactly at the optimum as well.
pub fn certificate_gap<R: Regression + ?Sized>(
    design: &ApproximateDesign,
    reg: &R,
    c: &DVector<f64>,
    candidates: &[Vec<f64>],
) -> f64 {
    let m = design.information(reg);
    let (pinv, rank) = sym_pinv(&m);
    if rank < m.nrows() {
        let cv = c_value(&m, c);
        if !cv.feasible {
            return f64::INFINITY;
        }
        let f: Vec<DVector<f64>> = candidates.iter().map(|x| reg.features(x)).collect();
        return match crate::lp::elfving_lp(&f, c) {
            Ok(lp) => cv.value / (lp.value * lp.value) - 1.0,
            Err(_) => f64::INFINITY,
        };
    }
    let mc = &pinv * c;
    let denom = c.dot(&mc);
    if !(denom > 0.0) {
        return f64::INFINITY;
    }
    candidates
        .iter()
        .map(|x| {
            let v = reg.features(x).dot(&mc);
            v * v / denom - 1.0
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Product measure; support in lexicographic order with `a` outermost.
pub fn product_design(a: &ApproximateDesign, b: &ApproximateDesign) -> ApproximateDesign {
    let mut support = Vec::with_capacity(a.len() * b.len());
    let mut weights = Vec::with_capacity(a.len() * b.len());
    for (x, wa) in a.iter() {
        for (y, wb) in b.iter() {
            let mut z = x.to_vec();
            z.extend_from_slice(y);
            support.push(z);
            weights.push(wa * wb);
        }
    }
    let sum: f64 = weights.iter().sum();
    ApproximateDesign::new(support, fix_sum(weights, sum)).expect("product of valid designs is valid")
}

/// `M(ξ ⊗ τ) = M1(ξ) ⊗ M2(τ)` for a product regression.
pub fn product_information(m1: &DMatrix<f64>, m2: &DMatrix<f64>) -> DMatrix<f64> {
    kron(m1, m2)
}

/// Equal weights on the equidistant grid with `m` points per axis.
pub fn uniform_grid_design(m: usize, region: &Region) -> Result<ApproximateDesign> {
    if m < 2 {
        return Err(Error::InvalidInput(format!("uniform grid needs m >= 2, got {m}")));
    }
    ApproximateDesign::uniform(region.grid(m))
}

/// Number of grid points of a uniform design; `Continuous` is the limit `m → ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridSize {
    Points(usize),
    Continuous,
}

/// `a_m = 3(m−1)/(m+1)`, with `a_∞ = 3`.
pub fn uniform_grid_a(m: GridSize) -> f64 {
    match m {
        GridSize::Points(m) => 3.0 * (m as f64 - 1.0) / (m as f64 + 1.0),
        GridSize::Continuous => 3.0,
    }
}

/// Closed-form `Φ_c(ξ̄_m) = 1 + a_m (1 + 2|x_u|)²` for straight-line extrapolation to `x_u ≤ 0`
/// from `[0, 1]`.
pub fn uniform_grid_criterion(m: GridSize, x_u: f64) -> f64 {
    let s = 1.0 + 2.0 * x_u.abs();
    1.0 + uniform_grid_a(m) * s * s
}

/// Closed-form efficiency of `ξ̄_m`; `x_u = −∞` gives the limit `1/a_m`.
pub fn uniform_grid_efficiency(m: GridSize, x_u: f64) -> f64 {
    let a = uniform_grid_a(m);
    if x_u.is_infinite() {
        return 1.0 / a;
    }
    let s = 1.0 + 2.0 * x_u.abs();
    let s2 = s * s;
    s2 / (1.0 + a * s2)
}

/// Largest-remainder apportionment of `n_units` to the support points.
///
/// Ties in the remainder go to the larger weight, then to the earlier point.
pub fn round_to_exact(design: &ApproximateDesign, n_units: usize) -> Result<Vec<usize>> {
    let m = design.len();
    if n_units < m {
        return Err(Error::TooFewUnits { n_units, support: m });
    }
    let quotas: Vec<f64> = design.weights().iter().map(|w| w * n_units as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra)
            .then(design.weights()[b].total_cmp(&design.weights()[a]))
            .then(a.cmp(&b))
    });
    for &i in order.iter().take(n_units.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    Ok(counts)
}

/// Design produced by an optimizer, with its criterion and diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct DesignReport {
    pub design: ApproximateDesign,
    pub criterion: CriterionValue,
    /// Against the best available reference; 1 for a certified optimum.
    pub efficiency: f64,
    pub certificate_gap: f64,
    pub benchmarks: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

/// Criterion value and efficiency of a candidate with benchmark comparisons.
#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub criterion_value: f64,
    pub efficiency: f64,
    pub certificate_gap: f64,
    pub benchmark_values: BTreeMap<String, f64>,
    pub flags: Vec<String>,
}
