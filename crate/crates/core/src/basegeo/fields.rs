use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{GeometryError, MAX_CHART_DIM};
use crate::fieldexpr::FieldProvider;
use crate::liealg::LieAlgebraSpec;

/// Evaluation points on a chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointSet {
    List(Vec<Vec<f64>>),
    /// `steps[i]` points per axis, evenly spaced from `min[i]` to `max[i]`.
    Lattice {
        min: Vec<f64>,
        max: Vec<f64>,
        steps: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartSpec {
    pub n: usize,
    pub names: Vec<String>,
    pub points: PointSet,
}

impl ChartSpec {
    pub fn new(n: usize, points: PointSet) -> Result<Self, GeometryError> {
        let names = (1..=n).map(|i| format!("x{i}")).collect();
        let chart = Self { n, names, points };
        chart.check()?;
        Ok(chart)
    }

    fn check(&self) -> Result<(), GeometryError> {
        if !(2..=MAX_CHART_DIM).contains(&self.n) {
            return Err(GeometryError::ChartDimension(self.n));
        }
        if self.names.len() != self.n {
            return Err(GeometryError::Shape(format!("{} names for a {}-dimensional chart", self.names.len(), self.n)));
        }
        match &self.points {
            PointSet::List(pts) => {
                for p in pts {
                    if p.len() != self.n {
                        return Err(GeometryError::Shape(format!("point {p:?} has {} coordinates", p.len())));
                    }
                    if p.iter().any(|x| !x.is_finite()) {
                        return Err(GeometryError::Shape(format!("point {p:?} is not finite")));
                    }
                }
            }
            PointSet::Lattice { min, max, steps } => {
                if min.len() != self.n || max.len() != self.n || steps.len() != self.n {
                    return Err(GeometryError::Shape("lattice bounds do not match the chart".into()));
                }
                if steps.contains(&0) {
                    return Err(GeometryError::Shape("lattice needs at least one step per axis".into()));
                }
                if min.iter().chain(max).any(|x| !x.is_finite()) {
                    return Err(GeometryError::Shape("lattice bounds are not finite".into()));
                }
            }
        }
        Ok(())
    }

    /// All points, lattice points in row-major order.
    pub fn points(&self) -> Vec<Vec<f64>> {
        match &self.points {
            PointSet::List(p) => p.clone(),
            PointSet::Lattice { min, max, steps } => {
                let mut out = vec![Vec::new()];
                for i in 0..self.n {
                    let axis: Vec<f64> = (0..steps[i])
                        .map(|j| {
                            if steps[i] == 1 {
                                min[i]
                            } else {
                                min[i] + (max[i] - min[i]) * j as f64 / (steps[i] - 1) as f64
                            }
                        })
                        .collect();
                    out = out
                        .into_iter()
                        .flat_map(|p| {
                            axis.iter().map(move |&x| {
                                let mut q = p.clone();
                                q.push(x);
                                q
                            })
                        })
                        .collect();
                }
                out
            }
        }
    }
}

/// `e^a = e^a_μ dx^μ` with the block metric `b`.
#[derive(Debug, Clone)]
pub struct CoframeField {
    n: usize,
    entries: Vec<FieldProvider>,
    b: DMatrix<f64>,
}

impl CoframeField {
    /// `entries` row-major: index `a·n + μ` holds `e^a_μ`.
    pub fn new(entries: Vec<FieldProvider>, b: DMatrix<f64>) -> Result<Self, GeometryError> {
        let n = b.nrows();
        if !(2..=MAX_CHART_DIM).contains(&n) {
            return Err(GeometryError::ChartDimension(n));
        }
        if entries.len() != n * n || !b.is_square() {
            return Err(GeometryError::Shape(format!("coframe needs {n}×{n} entries, found {}", entries.len())));
        }
        if let Some(bad) = entries.iter().find(|f| f.dim() != n) {
            return Err(GeometryError::Shape(format!("coframe entry on a {}-dimensional chart", bad.dim())));
        }
        Ok(Self { n, entries, b })
    }

    pub fn from_text(
        rows: &[Vec<String>],
        b: DMatrix<f64>,
        params: &BTreeMap<String, f64>,
    ) -> Result<Self, GeometryError> {
        let n = b.nrows();
        Self::new(parse_grid(rows, n, n, params, "coframe")?, b)
    }

    /// `e^a = dx^a`.
    pub fn identity(b: DMatrix<f64>) -> Result<Self, GeometryError> {
        let n = b.nrows();
        let entries = (0..n * n).map(|k| FieldProvider::constant(if k / n == k % n { 1.0 } else { 0.0 }, n)).collect();
        Self::new(entries, b)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn entry(&self, a: usize, mu: usize) -> &FieldProvider {
        &self.entries[a * self.n + mu]
    }
}

/// `A^α = A^α_μ dx^μ`.
#[derive(Debug, Clone)]
pub struct GaugeField {
    r: usize,
    n: usize,
    entries: Vec<FieldProvider>,
}

impl GaugeField {
    /// `entries` row-major: index `α·n + μ` holds `A^α_μ`.
    pub fn new(r: usize, n: usize, entries: Vec<FieldProvider>) -> Result<Self, GeometryError> {
        if entries.len() != r * n {
            return Err(GeometryError::Shape(format!("gauge field needs {r}×{n} entries, found {}", entries.len())));
        }
        if let Some(bad) = entries.iter().find(|f| f.dim() != n) {
            return Err(GeometryError::Shape(format!("gauge entry on a {}-dimensional chart", bad.dim())));
        }
        Ok(Self { r, n, entries })
    }

    pub fn from_text(rows: &[Vec<String>], n: usize, params: &BTreeMap<String, f64>) -> Result<Self, GeometryError> {
        let r = rows.len();
        Self::new(r, n, parse_grid(rows, r, n, params, "gauge")?)
    }

    pub fn zero(r: usize, n: usize) -> Self {
        Self { r, n, entries: (0..r * n).map(|_| FieldProvider::constant(0.0, n)).collect() }
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entry(&self, alpha: usize, mu: usize) -> &FieldProvider {
        &self.entries[alpha * self.n + mu]
    }
}

fn parse_grid(
    rows: &[Vec<String>],
    nrows: usize,
    ncols: usize,
    params: &BTreeMap<String, f64>,
    what: &str,
) -> Result<Vec<FieldProvider>, GeometryError> {
    if rows.len() != nrows {
        return Err(GeometryError::Shape(format!("{what} needs {nrows} rows, found {}", rows.len())));
    }
    let mut out = Vec::with_capacity(nrows * ncols);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != ncols {
            return Err(GeometryError::Shape(format!(
                "{what} row {} needs {ncols} entries, found {}",
                i + 1,
                row.len()
            )));
        }
        for (j, text) in row.iter().enumerate() {
            let f = FieldProvider::from_text(text, ncols, params)
                .map_err(|source| GeometryError::Field { location: format!("{what}[{}][{}]", i + 1, j + 1), source })?;
            out.push(f);
        }
    }
    Ok(out)
}

/// Coframe and gauge potential on one chart.
#[derive(Debug, Clone)]
pub struct Fields {
    pub coframe: CoframeField,
    pub gauge: GaugeField,
}

impl Fields {
    pub fn new(coframe: CoframeField, gauge: GaugeField) -> Result<Self, GeometryError> {
        if gauge.n() != coframe.n() {
            return Err(GeometryError::Shape(format!(
                "gauge field on a {}-dimensional chart, coframe on {}",
                gauge.n(),
                coframe.n()
            )));
        }
        Ok(Self { coframe, gauge })
    }

    pub fn n(&self) -> usize {
        self.coframe.n()
    }

    /// Check block sizes against an algebra.
    pub fn check_against(&self, spec: &LieAlgebraSpec) -> Result<(), GeometryError> {
        if spec.n() != self.n() {
            return Err(GeometryError::Shape(format!("algebra has n = {}, chart has n = {}", spec.n(), self.n())));
        }
        if spec.r() != self.gauge.r() {
            return Err(GeometryError::Shape(format!(
                "algebra has r = {}, gauge field has {} rows",
                spec.r(),
                self.gauge.r()
            )));
        }
        if (self.coframe.b() - spec.b()).amax() > 0.0 {
            return Err(GeometryError::Shape("coframe metric differs from the algebra's b block".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartJson {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub names: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeJson {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub steps: Vec<usize>,
}

/// Wire format for a chart with its fields and evaluation points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldFile {
    pub chart: ChartJson,
    pub coframe: Vec<Vec<String>>,
    #[serde(default)]
    pub gauge: Vec<Vec<String>>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<LatticeJson>,
}

impl FieldFile {
    pub fn chart(&self) -> Result<ChartSpec, GeometryError> {
        let points = match (&self.points, &self.lattice) {
            (Some(p), None) => PointSet::List(p.clone()),
            (None, Some(l)) => PointSet::Lattice { min: l.min.clone(), max: l.max.clone(), steps: l.steps.clone() },
            (None, None) => return Err(GeometryError::Shape("field file needs `points` or `lattice`".into())),
            (Some(_), Some(_)) => {
                return Err(GeometryError::Shape("field file has both `points` and `lattice`".into()))
            }
        };
        let mut chart = ChartSpec::new(self.chart.n, points)?;
        if let Some(names) = &self.chart.names {
            chart.names = names.clone();
            chart.check()?;
        }
        Ok(chart)
    }

    /// Parse the fields against `spec`; an empty gauge list means `A = 0`.
    pub fn fields(&self, spec: &LieAlgebraSpec) -> Result<Fields, GeometryError> {
        let n = self.chart.n;
        if spec.n() != n {
            return Err(GeometryError::Shape(format!("algebra has n = {}, chart has n = {n}", spec.n())));
        }
        let coframe = CoframeField::from_text(&self.coframe, spec.b(), &self.params)?;
        let gauge = if self.gauge.is_empty() {
            GaugeField::zero(spec.r(), n)
        } else {
            GaugeField::from_text(&self.gauge, n, &self.params)?
        };
        let fields = Fields::new(coframe, gauge)?;
        fields.check_against(spec)?;
        Ok(fields)
    }
}
