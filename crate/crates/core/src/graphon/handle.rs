use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::analytic::{off_levels, AnalyticGraphon};
use super::grid::GridGraphon;
use super::{discretize, Discretization};
use crate::error::{Error, Result};
use crate::numeric::{cell_of, UnitPoint, GAUSS4_NODES, GAUSS4_WEIGHTS};
use crate::transform::MeasurePreservingMap;

/// How `eval` answers point queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum EvalMode {
    /// Point values of the underlying representation.
    #[default]
    Exact,
    /// Value of the cell-averaged `n`-block discretization.
    CellAverage { n: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Representation {
    Analytic(AnalyticGraphon),
    Grid(GridGraphon),
    /// `(x, y) ↦ base(φ(x), φ(y))`, evaluated lazily.
    Pullback {
        base: Box<GraphonHandle>,
        map: MeasurePreservingMap,
    },
}

/// A graphon together with its evaluation mode.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphonHandle {
    repr: Representation,
    mode: EvalMode,
}

impl From<AnalyticGraphon> for GraphonHandle {
    fn from(a: AnalyticGraphon) -> Self {
        GraphonHandle::analytic(a)
    }
}

impl From<GridGraphon> for GraphonHandle {
    fn from(g: GridGraphon) -> Self {
        GraphonHandle::grid(g)
    }
}

impl GraphonHandle {
    pub fn analytic(a: AnalyticGraphon) -> Self {
        Self {
            repr: Representation::Analytic(a),
            mode: EvalMode::Exact,
        }
    }

    pub fn grid(g: GridGraphon) -> Self {
        Self {
            repr: Representation::Grid(g),
            mode: EvalMode::Exact,
        }
    }

    pub fn counterexample() -> Self {
        Self::analytic(AnalyticGraphon::Counterexample)
    }

    pub(crate) fn lazy_pullback(base: GraphonHandle, map: MeasurePreservingMap) -> Self {
        Self {
            repr: Representation::Pullback {
                base: Box::new(base),
                map,
            },
            mode: EvalMode::Exact,
        }
    }

    pub fn with_mode(mut self, mode: EvalMode) -> Result<Self> {
        if let EvalMode::CellAverage { n } = mode {
            if n == 0 {
                return Err(Error::domain("cell-average mode needs n >= 1"));
            }
        }
        self.mode = mode;
        Ok(self)
    }

    pub fn mode(&self) -> EvalMode {
        self.mode
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    pub fn as_analytic(&self) -> Option<&AnalyticGraphon> {
        match &self.repr {
            Representation::Analytic(a) => Some(a),
            _ => None,
        }
    }

    pub fn as_grid(&self) -> Option<&GridGraphon> {
        match &self.repr {
            Representation::Grid(g) => Some(g),
            _ => None,
        }
    }

    pub fn describe(&self) -> String {
        let body = match &self.repr {
            Representation::Analytic(a) => a.describe(),
            Representation::Grid(g) => format!("grid(n={})", g.n()),
            Representation::Pullback { base, map } => {
                format!("pullback({}, {})", base.describe(), map.describe())
            }
        };
        match self.mode {
            EvalMode::Exact => body,
            EvalMode::CellAverage { n } => format!("{body}@cell-average({n})"),
        }
    }

    /// `W(x, y)` for `x, y ∈ [0, 1]`, honoring the evaluation mode.
    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        for (name, v) in [("x", x), ("y", y)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::domain(format!("{name}={v} outside [0,1]")));
            }
        }
        Ok(match self.mode {
            EvalMode::Exact => self.value(x, y),
            EvalMode::CellAverage { n } => self.cell_average(cell_of(x, n), cell_of(y, n), n),
        })
    }

    /// Point value of the representation; ignores the mode, no checks.
    pub fn value(&self, x: f64, y: f64) -> f64 {
        match &self.repr {
            Representation::Analytic(a) => a.value(x, y),
            Representation::Grid(g) => g.value(x, y),
            Representation::Pullback { base, map } => base.value(map.apply(x), map.apply(y)),
        }
    }

    /// 4×4 tensor Gauss average over cell `(i, j)` of the `n`-grid.
    pub fn cell_average(&self, i: usize, j: usize, n: usize) -> f64 {
        let h = 1.0 / n as f64;
        let (x0, y0) = (i as f64 * h, j as f64 * h);
        let mut acc = 0.0;
        for (nx, wx) in GAUSS4_NODES.iter().zip(GAUSS4_WEIGHTS.iter()) {
            let x = x0 + nx * h;
            let mut inner = 0.0;
            for (ny, wy) in GAUSS4_NODES.iter().zip(GAUSS4_WEIGHTS.iter()) {
                inner += wy * self.value(x, y0 + ny * h);
            }
            acc += wx * inner;
        }
        acc
    }

    /// Points of (0, 1) where `y ↦ W(x, y)` may fail to be polynomial.
    pub fn row_breakpoints(&self, x: f64) -> Vec<f64> {
        match &self.repr {
            Representation::Analytic(a) => a.row_breakpoints(x),
            Representation::Grid(g) => {
                let n = g.n();
                (1..n).map(|j| j as f64 / n as f64).collect()
            }
            Representation::Pullback { base, map } => {
                let mut out = map.discontinuities();
                for b in base.row_breakpoints(map.apply(x)) {
                    out.extend(map.preimages(b));
                }
                out.sort_by(f64::total_cmp);
                out.dedup();
                out
            }
        }
    }

    /// Degrees at exact points through the closed-form route: the analytic
    /// formula, grid row means, or `D_base(φ(x))` for pull-backs.
    pub fn degrees_at(&self, pts: &[UnitPoint]) -> Vec<f64> {
        match &self.repr {
            Representation::Analytic(a) => pts.par_iter().map(|p| a.degree(p.to_f64())).collect(),
            Representation::Grid(g) => {
                let blocks = g.block_degrees();
                pts.iter().map(|p| blocks[p.cell(g.n())]).collect()
            }
            Representation::Pullback { base, map } => {
                let mapped: Vec<UnitPoint> = pts.par_iter().map(|&p| map.apply_exact(p)).collect();
                base.degrees_at(&mapped)
            }
        }
    }

    pub fn degree_at(&self, p: UnitPoint) -> f64 {
        self.degrees_at(&[p])[0]
    }

    /// Level functional at exact points through the closed-form route.
    pub fn levels_at(&self, pts: &[UnitPoint], eta: f64) -> Vec<f64> {
        match &self.repr {
            Representation::Analytic(a) => {
                pts.par_iter().map(|p| a.level(p.to_f64(), eta)).collect()
            }
            Representation::Grid(g) => {
                let n = g.n();
                let blocks: Vec<f64> = (0..n)
                    .map(|i| {
                        let count = g.row(i).iter().filter(|&&v| off_levels(v, eta)).count();
                        count as f64 / n as f64
                    })
                    .collect();
                pts.iter().map(|p| blocks[p.cell(n)]).collect()
            }
            Representation::Pullback { base, map } => {
                let mapped: Vec<UnitPoint> = pts.par_iter().map(|&p| map.apply_exact(p)).collect();
                base.levels_at(&mapped, eta)
            }
        }
    }

    pub fn level_at(&self, p: UnitPoint, eta: f64) -> f64 {
        self.levels_at(&[p], eta)[0]
    }

    /// The handle the functionals should operate on: cell-average mode is
    /// materialized as its grid, everything else is returned as is.
    pub fn resolved(&self) -> Result<GraphonHandle> {
        match self.mode {
            EvalMode::Exact => Ok(self.clone()),
            EvalMode::CellAverage { n } => {
                let exact = self.clone().with_mode(EvalMode::Exact)?;
                Ok(GraphonHandle::grid(discretize(
                    &exact,
                    n,
                    Discretization::CellAverage,
                )?))
            }
        }
    }

    /// Default tolerance for the level functional: 0 for closed forms,
    /// 1e-6 once cell averaging is involved.
    pub fn default_eta(&self) -> f64 {
        match (&self.repr, self.mode) {
            (_, EvalMode::CellAverage { .. }) => 1e-6,
            (Representation::Analytic(_), _) => 0.0,
            (Representation::Grid(_), _) => 1e-6,
            (Representation::Pullback { base, .. }, _) => base.default_eta(),
        }
    }
}
