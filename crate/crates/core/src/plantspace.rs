//! Structured plant families.
//!
//! A family fixes the subsystem partition, the plant graph (which blocks of
//! `A` and `B` may be nonzero), the design graph (which block rows each
//! subcontroller knows), and a per-entry specification of the model matrices:
//! a fixed constant, a free interval, or a graph-forced zero.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matlin::{is_positive_definite, stab_detect_check, sym_inv_sqrt, sym_sqrt, Mat};

/// Maximum consecutive rejected draws before sampling gives up.
pub const MAX_REJECTIONS: usize = 1000;

/// Subsystem partition plus plant and design graphs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoStructure {
    pub state_dims: Vec<usize>,
    pub input_dims: Vec<usize>,
    /// `plant_adj[i][j] = 0` forces the `(i, j)` blocks of `A` and `B` to zero.
    pub plant_adj: Vec<Vec<u8>>,
    /// `design_adj[i][j] != 0` lets subcontroller `i` use block row `j` of the model.
    pub design_adj: Vec<Vec<u8>>,
}

impl InfoStructure {
    /// Builds and validates the structure. Every subcontroller is made aware of
    /// its own subsystem (`design_adj[i][i] = 1`).
    pub fn new(
        state_dims: Vec<usize>,
        input_dims: Vec<usize>,
        plant_adj: Vec<Vec<u8>>,
        mut design_adj: Vec<Vec<u8>>,
    ) -> Result<Self> {
        for (i, row) in design_adj.iter_mut().enumerate() {
            if let Some(d) = row.get_mut(i) {
                *d = 1;
            }
        }
        Self::new_raw(state_dims, input_dims, plant_adj, design_adj)
    }

    /// Like [`InfoStructure::new`] but keeps the design diagonal as given.
    /// Only meant for experiments where a subcontroller ignores even its own
    /// parameters (e.g. a single-subsystem centralized learner).
    pub fn new_raw(
        state_dims: Vec<usize>,
        input_dims: Vec<usize>,
        plant_adj: Vec<Vec<u8>>,
        design_adj: Vec<Vec<u8>>,
    ) -> Result<Self> {
        let n = state_dims.len();
        let bad = |what: &str| Err(Error::InvalidFamily(what.to_string()));
        if n == 0 {
            return bad("at least one subsystem is required");
        }
        if input_dims.len() != n {
            return bad("state_dims and input_dims lengths differ");
        }
        if state_dims.contains(&0) {
            return bad("every subsystem needs at least one state");
        }
        for adj in [&plant_adj, &design_adj] {
            if adj.len() != n || adj.iter().any(|r| r.len() != n) {
                return bad("adjacency matrices must be N x N");
            }
            if adj.iter().flatten().any(|&v| v > 1) {
                return bad("adjacency entries must be 0 or 1");
            }
        }
        Ok(InfoStructure {
            state_dims,
            input_dims,
            plant_adj,
            design_adj,
        })
    }

    /// Single subsystem, full knowledge.
    pub fn single(n: usize, m: usize) -> Self {
        InfoStructure {
            state_dims: vec![n],
            input_dims: vec![m],
            plant_adj: vec![vec![1]],
            design_adj: vec![vec![1]],
        }
    }

    pub fn n_subsystems(&self) -> usize {
        self.state_dims.len()
    }

    pub fn n(&self) -> usize {
        self.state_dims.iter().sum()
    }

    pub fn m(&self) -> usize {
        self.input_dims.iter().sum()
    }

    pub fn state_offset(&self, i: usize) -> usize {
        self.state_dims[..i].iter().sum()
    }

    pub fn input_offset(&self, i: usize) -> usize {
        self.input_dims[..i].iter().sum()
    }

    /// Subsystem owning state index `row`.
    pub fn state_owner(&self, row: usize) -> usize {
        owner(&self.state_dims, row)
    }

    /// Subsystem owning input index `col`.
    pub fn input_owner(&self, col: usize) -> usize {
        owner(&self.input_dims, col)
    }

    fn block_allowed(&self, i: usize, j: usize) -> bool {
        self.plant_adj[i][j] != 0
    }

    /// Whether entry `(row, col)` of `A` lies in a block the plant graph allows.
    pub fn a_entry_allowed(&self, row: usize, col: usize) -> bool {
        self.block_allowed(self.state_owner(row), self.state_owner(col))
    }

    pub fn b_entry_allowed(&self, row: usize, col: usize) -> bool {
        self.block_allowed(self.state_owner(row), self.input_owner(col))
    }

    /// Checks that `a`, `b` have the right shape and respect the plant graph.
    pub fn check_sparsity(&self, a: &Mat, b: &Mat) -> Result<()> {
        let (n, m) = (self.n(), self.m());
        if a.shape() != (n, n) || b.shape() != (n, m) {
            return Err(Error::DimensionMismatch(format!(
                "expected A {n}x{n} and B {n}x{m}, got {:?} and {:?}",
                a.shape(),
                b.shape()
            )));
        }
        for r in 0..n {
            for c in 0..n {
                if a[(r, c)] != 0.0 && !self.a_entry_allowed(r, c) {
                    return Err(Error::InvalidFamily(format!(
                        "A[{r}][{c}] is nonzero in a block removed by the plant graph"
                    )));
                }
            }
            for c in 0..m {
                if b[(r, c)] != 0.0 && !self.b_entry_allowed(r, c) {
                    return Err(Error::InvalidFamily(format!(
                        "B[{r}][{c}] is nonzero in a block removed by the plant graph"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn owner(dims: &[usize], idx: usize) -> usize {
    let mut acc = 0;
    for (i, &d) in dims.iter().enumerate() {
        acc += d;
        if idx < acc {
            return i;
        }
    }
    dims.len()
}

/// Specification of one model-matrix entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntrySpec {
    Fixed(f64),
    Free([f64; 2]),
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    A,
    B,
}

/// A free entry of the family together with its interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeEntry {
    pub matrix: Which,
    pub row: usize,
    pub col: usize,
    pub lo: f64,
    pub hi: f64,
}

impl FreeEntry {
    pub fn label(&self) -> String {
        let m = match self.matrix {
            Which::A => "a",
            Which::B => "b",
        };
        format!("{m}{}{}", self.row + 1, self.col + 1)
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Piecewise-linear density of one free entry: `knots` are relative weights at
/// equally spaced points spanning `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryDensity {
    pub matrix: Which,
    pub row: usize,
    pub col: usize,
    pub knots: Vec<f64>,
}

impl EntryDensity {
    /// Density relative to the uniform one on `[lo, hi]` (integrates to 1
    /// against the uniform measure).
    fn relative_density(&self, lo: f64, hi: f64, v: f64) -> f64 {
        let k = &self.knots;
        if k.len() == 1 {
            return 1.0;
        }
        let segs = (k.len() - 1) as f64;
        // trapezoid integral over [0, 1]
        let area: f64 = k.windows(2).map(|w| 0.5 * (w[0] + w[1])).sum::<f64>() / segs;
        let t = ((v - lo) / (hi - lo)).clamp(0.0, 1.0) * segs;
        let i = (t.floor() as usize).min(k.len() - 2);
        let frac = t - i as f64;
        (k[i] * (1.0 - frac) + k[i + 1] * frac) / area
    }
}

/// Importance density over the parameter box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Density {
    #[default]
    Uniform,
    /// Listed entries follow their piecewise-linear density; the rest are uniform.
    PiecewiseLinear(Vec<EntryDensity>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantFamily {
    pub info: InfoStructure,
    pub a_spec: Vec<Vec<EntrySpec>>,
    pub b_spec: Vec<Vec<EntrySpec>>,
    pub q: Mat,
    pub r: Mat,
    #[serde(default)]
    pub density: Density,
}

/// JSON document describing a family. Entry specs are `{"fixed": v}`,
/// `{"free": [lo, hi]}` or `"zero"`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyDoc {
    pub state_dims: Vec<usize>,
    pub input_dims: Vec<usize>,
    pub plant_adj: Vec<Vec<u8>>,
    #[serde(default)]
    pub design_adj: Option<Vec<Vec<u8>>>,
    pub a: Vec<Vec<EntrySpec>>,
    pub b: Vec<Vec<EntrySpec>>,
    pub q: Mat,
    pub r: Mat,
    #[serde(default)]
    pub density: Density,
    /// Defaults to true: each subcontroller knows its own block row.
    #[serde(default)]
    pub force_self_knowledge: Option<bool>,
}

impl PlantFamily {
    pub fn new(
        info: InfoStructure,
        a_spec: Vec<Vec<EntrySpec>>,
        b_spec: Vec<Vec<EntrySpec>>,
        q: Mat,
        r: Mat,
        density: Density,
    ) -> Result<Self> {
        let fam = PlantFamily {
            info,
            a_spec,
            b_spec,
            q,
            r,
            density,
        };
        fam.validate()?;
        Ok(fam)
    }

    pub fn from_doc(doc: FamilyDoc) -> Result<Self> {
        let n = doc.state_dims.len();
        let design = doc.design_adj.unwrap_or_else(|| {
            (0..n)
                .map(|i| (0..n).map(|j| u8::from(i == j)).collect())
                .collect()
        });
        let info = if doc.force_self_knowledge.unwrap_or(true) {
            InfoStructure::new(doc.state_dims, doc.input_dims, doc.plant_adj, design)?
        } else {
            InfoStructure::new_raw(doc.state_dims, doc.input_dims, doc.plant_adj, design)?
        };
        PlantFamily::new(info, doc.a, doc.b, doc.q, doc.r, doc.density)
    }

    pub fn to_doc(&self) -> FamilyDoc {
        FamilyDoc {
            state_dims: self.info.state_dims.clone(),
            input_dims: self.info.input_dims.clone(),
            plant_adj: self.info.plant_adj.clone(),
            design_adj: Some(self.info.design_adj.clone()),
            a: self.a_spec.clone(),
            b: self.b_spec.clone(),
            q: self.q.clone(),
            r: self.r.clone(),
            density: self.density.clone(),
            force_self_knowledge: Some(false),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: FamilyDoc =
            serde_json::from_str(text).map_err(|e| Error::InvalidFamily(e.to_string()))?;
        PlantFamily::from_doc(doc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("family serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let (n, m) = (self.info.n(), self.info.m());
        let bad = |s: String| Err(Error::InvalidFamily(s));
        if self.a_spec.len() != n || self.a_spec.iter().any(|r| r.len() != n) {
            return bad(format!("A spec must be {n}x{n}"));
        }
        if self.b_spec.len() != n || self.b_spec.iter().any(|r| r.len() != m) {
            return bad(format!("B spec must be {n}x{m}"));
        }
        if self.q.shape() != (n, n) || !self.q.is_symmetric(1e-12) {
            return bad("Q must be symmetric n x n".into());
        }
        if matches!(crate::matlin::min_sym_eigenvalue(&self.q), Ok(v) if v < -1e-12) {
            return bad("Q must be positive semidefinite".into());
        }
        if self.r.shape() != (m, m) || !is_positive_definite(&self.r) {
            return bad("R must be symmetric positive definite m x m".into());
        }
        for (which, spec) in [(Which::A, &self.a_spec), (Which::B, &self.b_spec)] {
            for (r, row) in spec.iter().enumerate() {
                for (c, e) in row.iter().enumerate() {
                    let allowed = match which {
                        Which::A => self.info.a_entry_allowed(r, c),
                        Which::B => self.info.b_entry_allowed(r, c),
                    };
                    match *e {
                        EntrySpec::Free([lo, hi]) => {
                            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                                return bad(format!(
                                    "{which:?}[{r}][{c}]: free interval needs finite lo < hi"
                                ));
                            }
                            if !allowed {
                                return bad(format!(
                                    "{which:?}[{r}][{c}] must be \"zero\" by the plant graph"
                                ));
                            }
                        }
                        EntrySpec::Fixed(v) => {
                            if !v.is_finite() {
                                return bad(format!(
                                    "{which:?}[{r}][{c}]: fixed value must be finite"
                                ));
                            }
                            if !allowed {
                                return bad(format!(
                                    "{which:?}[{r}][{c}] must be \"zero\" by the plant graph"
                                ));
                            }
                        }
                        EntrySpec::Zero => {}
                    }
                }
            }
        }
        if let Density::PiecewiseLinear(list) = &self.density {
            let free = self.free_entries();
            for d in list {
                if !free
                    .iter()
                    .any(|f| f.matrix == d.matrix && f.row == d.row && f.col == d.col)
                {
                    return bad(format!(
                        "density given for non-free entry {:?}[{}][{}]",
                        d.matrix, d.row, d.col
                    ));
                }
                if d.knots.is_empty()
                    || d.knots.iter().any(|k| !k.is_finite() || *k < 0.0)
                    || d.knots.iter().all(|k| *k == 0.0)
                {
                    return bad("density knots must be nonnegative and not all zero".into());
                }
            }
        }
        Ok(())
    }

    /// Free entries in row-major order, `A` before `B`.
    pub fn free_entries(&self) -> Vec<FreeEntry> {
        let mut out = Vec::new();
        for (which, spec) in [(Which::A, &self.a_spec), (Which::B, &self.b_spec)] {
            for (row, r) in spec.iter().enumerate() {
                for (col, e) in r.iter().enumerate() {
                    if let EntrySpec::Free([lo, hi]) = *e {
                        out.push(FreeEntry {
                            matrix: which,
                            row,
                            col,
                            lo,
                            hi,
                        });
                    }
                }
            }
        }
        out
    }

    pub fn spec(&self, which: Which, row: usize, col: usize) -> EntrySpec {
        match which {
            Which::A => self.a_spec[row][col],
            Which::B => self.b_spec[row][col],
        }
    }

    /// Model matrices with the free entries set to `values` (in
    /// [`PlantFamily::free_entries`] order). No feasibility checks.
    pub fn assemble(&self, values: &[f64]) -> Result<(Mat, Mat)> {
        let free = self.free_entries();
        if values.len() != free.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} free entries",
                values.len(),
                free.len()
            )));
        }
        let (n, m) = (self.info.n(), self.info.m());
        let mut a = Mat::zeros(n, n);
        let mut b = Mat::zeros(n, m);
        for (mat, spec) in [(&mut a, &self.a_spec), (&mut b, &self.b_spec)] {
            for (r, row) in spec.iter().enumerate() {
                for (c, e) in row.iter().enumerate() {
                    if let EntrySpec::Fixed(v) = *e {
                        mat[(r, c)] = v;
                    }
                }
            }
        }
        for (f, &v) in free.iter().zip(values) {
            match f.matrix {
                Which::A => a[(f.row, f.col)] = v,
                Which::B => b[(f.row, f.col)] = v,
            }
        }
        Ok((a, b))
    }

    /// Validated plant with the free entries set to `values`.
    pub fn instance(&self, values: &[f64]) -> Result<PlantInstance> {
        let free = self.free_entries();
        if let Some(f) = free
            .iter()
            .zip(values)
            .find(|(f, &v)| !(f.lo..=f.hi).contains(&v))
        {
            return Err(Error::InvalidFamily(format!(
                "value {} for {} lies outside [{}, {}]",
                f.1,
                f.0.label(),
                f.0.lo,
                f.0.hi
            )));
        }
        let (a, b) = self.assemble(values)?;
        let mut p = PlantInstance::new(a, b, self.q.clone(), self.r.clone(), self.info.clone())?;
        p.weight = self.density_weight(values);
        Ok(p)
    }

    /// Values of the free entries of a concrete plant.
    pub fn free_values(&self, plant: &PlantInstance) -> Vec<f64> {
        self.free_entries()
            .iter()
            .map(|f| match f.matrix {
                Which::A => plant.a[(f.row, f.col)],
                Which::B => plant.b[(f.row, f.col)],
            })
            .collect()
    }

    /// Density at `values` relative to the uniform density on the box.
    pub fn density_weight(&self, values: &[f64]) -> f64 {
        match &self.density {
            Density::Uniform => 1.0,
            Density::PiecewiseLinear(list) => {
                let free = self.free_entries();
                list.iter()
                    .map(|d| {
                        let (idx, f) = free
                            .iter()
                            .enumerate()
                            .find(|(_, f)| f.matrix == d.matrix && f.row == d.row && f.col == d.col)
                            .expect("validated density entry");
                        d.relative_density(f.lo, f.hi, values[idx])
                    })
                    .product()
            }
        }
    }
}

/// A concrete plant `(A, B)` with its cost weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantInstance {
    pub a: Mat,
    pub b: Mat,
    pub q: Mat,
    pub r: Mat,
    pub info: InfoStructure,
    /// Importance weight `f / uniform` of this plant within its family.
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

impl PlantInstance {
    /// Validates shapes, graph sparsity, and stabilizability/detectability.
    pub fn new(a: Mat, b: Mat, q: Mat, r: Mat, info: InfoStructure) -> Result<Self> {
        info.check_sparsity(&a, &b)?;
        if q.shape() != a.shape() || r.shape() != (b.cols(), b.cols()) {
            return Err(Error::DimensionMismatch("Q/R shape".into()));
        }
        if !is_positive_definite(&r) {
            return Err(Error::SingularR);
        }
        let flags = stab_detect_check(&a, &b, &q)?;
        if !flags.stabilizable {
            return Err(Error::NotStabilizable);
        }
        if !flags.detectable {
            return Err(Error::NotDetectable);
        }
        Ok(PlantInstance {
            a,
            b,
            q,
            r,
            info,
            weight: 1.0,
        })
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn m(&self) -> usize {
        self.b.cols()
    }
}

/// Per-subsystem disturbance covariances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    #[default]
    UnitCovariance,
    Covariances(Vec<Mat>),
}

impl NoiseModel {
    fn check(&self, info: &InfoStructure) -> Result<()> {
        if let NoiseModel::Covariances(hs) = self {
            if hs.len() != info.n_subsystems() {
                return Err(Error::DimensionMismatch(
                    "one covariance per subsystem".into(),
                ));
            }
            for (h, &d) in hs.iter().zip(&info.state_dims) {
                if h.shape() != (d, d) {
                    return Err(Error::DimensionMismatch("covariance block size".into()));
                }
                if !is_positive_definite(h) {
                    return Err(Error::NotPositiveDefinite);
                }
            }
        }
        Ok(())
    }

    /// Block-diagonal `diag(f(H_i))`, or `None` for unit covariance.
    fn block_diag(
        &self,
        info: &InfoStructure,
        f: impl Fn(&Mat) -> Result<Mat>,
    ) -> Result<Option<Mat>> {
        self.check(info)?;
        let NoiseModel::Covariances(hs) = self else {
            return Ok(None);
        };
        let mut d = Mat::zeros(info.n(), info.n());
        for (i, h) in hs.iter().enumerate() {
            d.set_block(info.state_offset(i), info.state_offset(i), &f(h)?);
        }
        Ok(Some(d))
    }

    /// `blockdiag(H_i^{1/2})`, the factor that colours unit noise.
    pub fn sqrt_factor(&self, info: &InfoStructure) -> Result<Option<Mat>> {
        self.block_diag(info, sym_sqrt)
    }
}

/// Change of variables `x̄_i = H_i^{-1/2} x_i` that turns the disturbance into
/// unit covariance while leaving the quadratic cost unchanged.
pub fn whiten(plant: &PlantInstance, noise: &NoiseModel) -> Result<PlantInstance> {
    let (Some(d), Some(d_inv)) = (
        noise.block_diag(&plant.info, sym_sqrt)?,
        noise.block_diag(&plant.info, sym_inv_sqrt)?,
    ) else {
        return Ok(plant.clone());
    };
    Ok(transform(plant, &d, &d_inv))
}

/// Inverse of [`whiten`].
pub fn unwhiten(plant: &PlantInstance, noise: &NoiseModel) -> Result<PlantInstance> {
    let (Some(d), Some(d_inv)) = (
        noise.block_diag(&plant.info, sym_sqrt)?,
        noise.block_diag(&plant.info, sym_inv_sqrt)?,
    ) else {
        return Ok(plant.clone());
    };
    Ok(transform(plant, &d_inv, &d))
}

/// `Ā = D⁻¹AD`, `B̄ = D⁻¹B`, `Q̄ = DQD`.
fn transform(plant: &PlantInstance, d: &Mat, d_inv: &Mat) -> PlantInstance {
    PlantInstance {
        a: &(d_inv * &plant.a) * d,
        b: d_inv * &plant.b,
        q: (&(d * &plant.q) * d).symmetrized(),
        r: plant.r.clone(),
        info: plant.info.clone(),
        weight: plant.weight,
    }
}

/// Draws a plant from the family's box. Draws failing the
/// stabilizability/detectability checks are discarded and redrawn.
pub fn sample_plant(family: &PlantFamily, seed: u64) -> Result<PlantInstance> {
    family.validate()?;
    let free = family.free_entries();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_REJECTIONS {
        let values: Vec<f64> = free.iter().map(|f| rng.random_range(f.lo..f.hi)).collect();
        match family.instance(&values) {
            Ok(p) => return Ok(p),
            Err(Error::NotStabilizable | Error::NotDetectable) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::RejectionLimitExceeded(MAX_REJECTIONS))
}

/// Role of an entry in one subcontroller's estimation problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EntryRole {
    /// Value is available to the estimator (family constant or known block row).
    Known,
    /// Decision variable of the estimator.
    Free,
    /// Pinned to zero by the plant graph.
    ZeroByGraph,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryMask {
    pub a: Vec<Vec<EntryRole>>,
    pub b: Vec<Vec<EntryRole>>,
}

impl EntryMask {
    pub fn role(&self, which: Which, row: usize, col: usize) -> EntryRole {
        match which {
            Which::A => self.a[row][col],
            Which::B => self.b[row][col],
        }
    }

    /// Family free entries that stay decision variables under this mask.
    pub fn free_entries(&self, family: &PlantFamily) -> Vec<FreeEntry> {
        family
            .free_entries()
            .into_iter()
            .filter(|f| self.role(f.matrix, f.row, f.col) == EntryRole::Free)
            .collect()
    }

    pub fn count(&self, role: EntryRole) -> usize {
        self.a
            .iter()
            .chain(&self.b)
            .flatten()
            .filter(|&&r| r == role)
            .count()
    }
}

fn build_mask(family: &PlantFamily, knows_row: impl Fn(usize) -> bool) -> EntryMask {
    let role = |spec: &EntrySpec, row: usize| match spec {
        EntrySpec::Zero => EntryRole::ZeroByGraph,
        EntrySpec::Fixed(_) => EntryRole::Known,
        EntrySpec::Free(_) if knows_row(row) => EntryRole::Known,
        EntrySpec::Free(_) => EntryRole::Free,
    };
    let map = |spec: &Vec<Vec<EntrySpec>>| {
        spec.iter()
            .enumerate()
            .map(|(r, row)| row.iter().map(|e| role(e, r)).collect())
            .collect()
    };
    EntryMask {
        a: map(&family.a_spec),
        b: map(&family.b_spec),
    }
}

/// What subcontroller `subsystem` knows: block row `j` of `(A, B)` is known
/// iff `design_adj[subsystem][j] != 0`.
pub fn known_mask(family: &PlantFamily, subsystem: usize) -> Result<EntryMask> {
    let n_sub = family.info.n_subsystems();
    if subsystem >= n_sub {
        return Err(Error::IndexOutOfRange {
            index: subsystem,
            limit: n_sub,
        });
    }
    let info = &family.info;
    Ok(build_mask(family, |row| {
        info.design_adj[subsystem][info.state_owner(row)] != 0
    }))
}

/// Mask of a centralized learner that uses none of the block-row knowledge:
/// every free entry of the family is a decision variable.
pub fn centralized_mask(family: &PlantFamily) -> EntryMask {
    build_mask(family, |_| false)
}
