use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::coarse::build_coarse_space;
use crate::ddm::{
    reference_solution, run_with_context, CoarseContext, Initialization, LocalProblem, Method,
    RunConfig, RunContext,
};
use crate::error::{Error, Result};
use crate::fvcore::ProblemSpec;
use crate::mesh::{Decomposition, DecompositionSpec};

/// Grid of runs: every method × layout × p × q × seed.
#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    /// Subdomains per side.
    pub layouts: Vec<usize>,
    /// Cells per subdomain per side.
    pub cells: usize,
    pub iterations: usize,
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    pub domain_side: f64,
    pub problem: ProblemSpec,
    pub init: Initialization,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            p: (0..39).map(|k| 1.0 + 0.5 * k as f64).collect(),
            q: [1.0, 2.0, 4.0, 8.0, 10.0, 20.0, 40.0, 80.0].to_vec(),
            layouts: vec![2, 4, 6, 8],
            cells: 20,
            iterations: 50,
            seeds: vec![0],
            methods: vec![Method::Osm, Method::DcsRjmin],
            domain_side: 4.0,
            problem: ProblemSpec::default(),
            init: Initialization::RandomRobin,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        let lists = [
            ("p", self.p.is_empty()),
            ("q", self.q.is_empty()),
            ("layout", self.layouts.is_empty()),
            ("seeds", self.seeds.is_empty()),
            ("method", self.methods.is_empty()),
        ];
        if let Some((key, _)) = lists.iter().find(|(_, empty)| *empty) {
            return Err(Error::parameter(key, "list must not be empty"));
        }
        if let Some(p) = self.p.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::parameter("p", format!("p must be > 0, got {p}")));
        }
        if let Some(q) = self.q.iter().find(|q| !(q.is_finite() && **q > 0.0)) {
            return Err(Error::parameter("q", format!("q must be > 0, got {q}")));
        }
        if self.cells == 0 {
            return Err(Error::parameter("cells", "must be at least 1"));
        }
        if self.layouts.contains(&0) {
            return Err(Error::parameter("layout", "must be at least 1"));
        }
        if !(self.domain_side.is_finite() && self.domain_side > 0.0) {
            return Err(Error::parameter("domain_side", "must be > 0"));
        }
        self.problem.validate()
    }

    fn decomposition(&self, layout: usize) -> DecompositionSpec {
        DecompositionSpec::square(layout, self.cells).with_side(self.domain_side)
    }

    /// The single-run configuration of one sweep cell. One-level runs use
    /// `q = p` for the (unreported) q-functional.
    pub fn run_config(&self, method: Method, layout: usize, p: f64, q: Option<f64>, seed: u64) -> RunConfig {
        RunConfig {
            decomposition: self.decomposition(layout),
            problem: self.problem.clone(),
            p,
            q: q.unwrap_or(p),
            iterations: self.iterations,
            seed,
            method,
            init: self.init,
        }
    }

    /// Cells in output order. One-level rows carry no `q`.
    pub fn cells(&self) -> Vec<(Method, usize, f64, Option<f64>, u64)> {
        let mut out = Vec::new();
        for &method in &self.methods {
            for &layout in &self.layouts {
                for &p in &self.p {
                    let qs: Vec<Option<f64>> = match method {
                        Method::Osm => vec![None],
                        Method::DcsRjmin => self.q.iter().map(|&q| Some(q)).collect(),
                    };
                    for q in qs {
                        for &seed in &self.seeds {
                            out.push((method, layout, p, q, seed));
                        }
                    }
                }
            }
        }
        dedup_sorted(out)
    }
}

fn dedup_sorted(mut cells: Vec<(Method, usize, f64, Option<f64>, u64)>) -> Vec<(Method, usize, f64, Option<f64>, u64)> {
    cells.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then(a.1.cmp(&b.1))
            .then(a.2.total_cmp(&b.2))
            .then(a.3.unwrap_or(0.0).total_cmp(&b.3.unwrap_or(0.0)))
            .then(a.4.cmp(&b.4))
    });
    cells.dedup_by(|a, b| {
        a.0 == b.0 && a.1 == b.1 && a.2 == b.2 && a.3 == b.3 && a.4 == b.4
    });
    cells
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub method: Method,
    pub layout: usize,
    pub p: f64,
    pub q: Option<f64>,
    pub seed: u64,
    pub log_ratio: f64,
    pub j_p_final: f64,
    pub j_q_final: Option<f64>,
    pub diverged: bool,
    /// Iterations actually performed.
    pub iters: usize,
    pub wall_seconds: f64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn find(&self, method: Method, layout: usize, p: f64, q: Option<f64>) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.layout == layout && r.p == p && r.q == q)
    }
}

/// Seed-independent pieces shared by the runs of one layout.
struct LayoutCache {
    locals: HashMap<u64, Arc<LocalProblem>>,
    coarse: HashMap<u64, CoarseContext>,
    reference: Option<Arc<Vec<crate::fvcore::CellField>>>,
}

fn prepare_layout(spec: &SweepSpec, layout: usize, cells: &[(Method, usize, f64, Option<f64>, u64)]) -> Result<LayoutCache> {
    let decomposition = Arc::new(Decomposition::build(&spec.decomposition(layout))?);
    let mine: Vec<_> = cells.iter().filter(|c| c.1 == layout).collect();

    let mut ps: Vec<f64> = mine.iter().map(|c| c.2).collect();
    ps.sort_by(f64::total_cmp);
    ps.dedup();
    let locals = ps
        .par_iter()
        .map(|&p| {
            LocalProblem::new(decomposition.clone(), &spec.problem, p)
                .map(|l| (p.to_bits(), Arc::new(l)))
        })
        .collect::<Result<HashMap<_, _>>>()?;

    let mut qs: Vec<f64> = mine.iter().filter_map(|c| c.3).collect();
    qs.sort_by(f64::total_cmp);
    qs.dedup();
    let coarse = if qs.is_empty() {
        HashMap::new()
    } else {
        let space = Arc::new(build_coarse_space(spec.problem.eta, &decomposition)?);
        qs.par_iter()
            .map(|&q| CoarseContext::new(space.clone(), &decomposition, q).map(|c| (q.to_bits(), c)))
            .collect::<Result<HashMap<_, _>>>()?
    };

    Ok(LayoutCache {
        locals,
        coarse,
        reference: reference_solution(&spec.problem, &decomposition)?,
    })
}

/// Runs every cell of the sweep. Local operators are shared across `q`, the
/// coarse space across `p` and `q`, and the jump systems across `p`. Failed
/// runs are recorded in their row and the sweep continues.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepTable> {
    spec.validate()?;
    let cells = spec.cells();
    let mut rows = Vec::with_capacity(cells.len());
    let mut layouts = spec.layouts.clone();
    layouts.sort_unstable();
    layouts.dedup();
    for layout in layouts {
        let cache = prepare_layout(spec, layout, &cells)?;
        let layout_rows: Vec<SweepRow> = cells
            .par_iter()
            .filter(|c| c.1 == layout)
            .map(|&(method, layout, p, q, seed)| {
                let config = spec.run_config(method, layout, p, q, seed);
                let ctx = RunContext {
                    local: cache.locals[&p.to_bits()].clone(),
                    coarse: q.map(|q| cache.coarse[&q.to_bits()].clone()),
                    reference: cache.reference.clone(),
                };
                let start = Instant::now();
                let result = run_with_context(&config, &ctx);
                let wall_seconds = start.elapsed().as_secs_f64();
                match result {
                    Ok(out) => {
                        let last = out.last();
                        SweepRow {
                            method,
                            layout,
                            p,
                            q,
                            seed,
                            log_ratio: out.log_ratio,
                            j_p_final: last.j_p,
                            j_q_final: q.map(|_| last.j_q),
                            diverged: out.diverged,
                            iters: last.iteration,
                            wall_seconds,
                            error: None,
                        }
                    }
                    Err(e) => SweepRow {
                        method,
                        layout,
                        p,
                        q,
                        seed,
                        log_ratio: f64::NAN,
                        j_p_final: f64::NAN,
                        j_q_final: q.map(|_| f64::NAN),
                        diverged: false,
                        iters: 0,
                        wall_seconds,
                        error: Some(e.to_string()),
                    },
                }
            })
            .collect();
        rows.extend(layout_rows);
    }
    Ok(SweepTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_row_count() {
        let spec = SweepSpec::default();
        assert_eq!(spec.p.len(), 39);
        assert_eq!(spec.p[0], 1.0);
        assert_eq!(spec.p[38], 20.0);
        let cells = spec.cells();
        let osm = cells.iter().filter(|c| c.0 == Method::Osm).count();
        let dcs = cells.iter().filter(|c| c.0 == Method::DcsRjmin).count();
        assert_eq!(osm, 39 * 4);
        assert_eq!(dcs, 39 * 8 * 4);
    }

    #[test]
    fn single_cell_sweep() {
        let spec = SweepSpec {
            p: vec![3.0],
            q: vec![3.0],
            layouts: vec![2],
            cells: 5,
            iterations: 5,
            methods: vec![Method::DcsRjmin],
            ..SweepSpec::default()
        };
        let t1 = run_sweep(&spec).unwrap();
        assert_eq!(t1.rows.len(), 1);
        assert!(t1.rows[0].error.is_none());
        assert_eq!(t1.rows[0].iters, 5);
        let t2 = run_sweep(&spec).unwrap();
        let strip = |t: &SweepTable| -> Vec<SweepRow> {
            t.rows.iter().map(|r| SweepRow { wall_seconds: 0.0, ..r.clone() }).collect()
        };
        assert_eq!(strip(&t1), strip(&t2));
    }

    #[test]
    fn osm_rows_ignore_q() {
        let spec = SweepSpec {
            p: vec![2.0, 4.0],
            q: vec![1.0, 8.0],
            layouts: vec![2],
            cells: 4,
            iterations: 4,
            ..SweepSpec::default()
        };
        let table = run_sweep(&spec).unwrap();
        assert_eq!(table.rows.len(), 2 + 4);
        for r in &table.rows {
            assert_eq!(r.q.is_none(), r.method == Method::Osm);
        }
        // OSM is the same run whatever q the two-level rows use
        let single = crate::ddm::run(&spec.run_config(Method::Osm, 2, 4.0, Some(80.0), 0)).unwrap();
        let row = table.find(Method::Osm, 2, 4.0, None).unwrap();
        assert_eq!(row.log_ratio, single.log_ratio);
    }

    #[test]
    fn validation_names_keys() {
        let spec = SweepSpec { p: vec![], ..SweepSpec::default() };
        assert!(matches!(spec.validate(), Err(Error::Parameter { ref key, .. }) if key == "p"));
        let spec = SweepSpec { q: vec![1.0, -2.0], ..SweepSpec::default() };
        assert!(matches!(spec.validate(), Err(Error::Parameter { ref key, .. }) if key == "q"));
    }
}
