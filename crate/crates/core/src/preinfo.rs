//! Static per-pair link characterisation: fidelity `F_ij` and per-step
//! success probability `R_ij`.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use entsched_qmcs::BkResult;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::rng::stream;

#[derive(Debug, Clone, PartialEq)]
pub struct PreInfo {
    pub fidelity: Grid<f64>,
    pub success_prob: Grid<f64>,
}

impl PreInfo {
    /// Build from symmetric matrices, checking shape, symmetry and range.
    pub fn new(fidelity: Grid<f64>, success_prob: Grid<f64>) -> Result<Self> {
        if fidelity.n() != success_prob.n() {
            return Err(Error::Dimension { expected: fidelity.n(), actual: success_prob.n() });
        }
        let p = Self { fidelity, success_prob };
        p.validate()?;
        Ok(p)
    }

    /// Every pair with the same `(F, R)`.
    pub fn homogeneous(n: usize, fidelity: f64, success_prob: f64) -> Result<Self> {
        Self::new(Grid::filled(n, fidelity), Grid::filled(n, success_prob))
    }

    pub fn n_qubits(&self) -> usize {
        self.fidelity.n()
    }

    pub fn f(&self, i: usize, j: usize) -> f64 {
        self.fidelity.get(i, j)
    }

    pub fn r(&self, i: usize, j: usize) -> f64 {
        self.success_prob.get(i, j)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, m) in [("fidelity", &self.fidelity), ("success_prob", &self.success_prob)] {
            if let Some((i, j)) = m.asymmetry() {
                return Err(Error::Load(format!("{name} is not symmetric at ({i},{j})")));
            }
            for i in 0..m.n() {
                for j in 0..m.n() {
                    let v = m.get(i, j);
                    if i != j && !(v > 0.0 && v <= 1.0) {
                        return Err(Error::Load(format!("{name}[{i}][{j}] = {v} outside (0, 1]")));
                    }
                }
            }
        }
        Ok(())
    }

    /// CSV with header `i,j,fidelity,success_prob`, one row per pair `i < j`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["i", "j", "fidelity", "success_prob"])?;
        let n = self.n_qubits();
        for i in 0..n {
            for j in i + 1..n {
                out.serialize((i, j, self.f(i, j), self.r(i, j)))?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn read_csv<R: std::io::Read>(r: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            i: usize,
            j: usize,
            fidelity: f64,
            success_prob: f64,
        }
        let mut rows = Vec::new();
        let mut reader = csv::Reader::from_reader(r);
        for (line, rec) in reader.deserialize::<Row>().enumerate() {
            let row = rec.map_err(|e| Error::Load(format!("row {}: {e}", line + 1)))?;
            rows.push(row);
        }
        let n = rows.iter().map(|r| r.i.max(r.j) + 1).max().unwrap_or(0);
        if n < 2 {
            return Err(Error::Load("pre-information needs at least two qubits".into()));
        }
        let mut f = Grid::filled(n, f64::NAN);
        let mut p = Grid::filled(n, f64::NAN);
        for r in rows {
            if r.i == r.j {
                return Err(Error::Load(format!("diagonal entry ({},{})", r.i, r.j)));
            }
            let (a, b) = (r.i.min(r.j), r.i.max(r.j));
            for (m, v) in [(&mut f, r.fidelity), (&mut p, r.success_prob)] {
                let existing = m.get(a, b);
                if !existing.is_nan() && existing != v {
                    return Err(Error::Load(format!("asymmetric entry at ({a},{b})")));
                }
                m.set_sym(a, b, v);
            }
        }
        for i in 0..n {
            f.set(i, i, 1.0);
            p.set(i, i, 1.0);
            for j in 0..n {
                if i != j && f.get(i, j).is_nan() {
                    return Err(Error::Load(format!("missing pair ({},{})", i.min(j), i.max(j))));
                }
            }
        }
        Self::new(f, p)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// Parameters of the Gaussian pre-information generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenParams {
    pub mean_fidelity: f64,
    pub sigma_fidelity: f64,
    pub max_fidelity: f64,
    pub min_fidelity: f64,
    pub mean_rate: f64,
    pub sigma_rate: f64,
    pub min_rate: f64,
    pub rng_seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            mean_fidelity: 0.98,
            sigma_fidelity: 0.09,
            max_fidelity: 0.9999,
            min_fidelity: 0.5,
            mean_rate: 0.10,
            sigma_rate: 0.02,
            min_rate: 0.01,
            rng_seed: 0,
        }
    }
}

impl GenParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.min_fidelity >= 0.0
            && self.min_fidelity < self.mean_fidelity
            && self.mean_fidelity < self.max_fidelity
            && self.max_fidelity <= 1.0
            && self.sigma_fidelity >= 0.0
            && self.min_rate > 0.0
            && self.min_rate <= self.mean_rate
            && self.mean_rate <= 1.0
            && self.sigma_rate >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid generator parameters {self:?}")))
        }
    }
}

fn sample(rng: &mut impl Rng, mean: f64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        mean
    } else {
        Normal::new(mean, sigma).expect("sigma is finite and positive").sample(rng)
    }
}

/// Sample `F_ij` and `R_ij` once per pair `i < j` in row-major order, with
/// clipping to `[min_fidelity, max_fidelity]` and `[min_rate, 1]`.
pub fn generate_preinfo(params: &GenParams, n_qubits: usize) -> Result<PreInfo> {
    params.validate()?;
    if n_qubits < 2 {
        return Err(Error::Config(format!("need at least 2 qubits, got {n_qubits}")));
    }
    let mut rng = stream(params.rng_seed, "preinfo", n_qubits as u64);
    let mut f = Grid::filled(n_qubits, 1.0);
    let mut r = Grid::filled(n_qubits, 1.0);
    for i in 0..n_qubits {
        for j in i + 1..n_qubits {
            let fv = sample(&mut rng, params.mean_fidelity, params.sigma_fidelity);
            let rv = sample(&mut rng, params.mean_rate, params.sigma_rate);
            f.set_sym(i, j, fv.clamp(params.min_fidelity, params.max_fidelity));
            r.set_sym(i, j, rv.clamp(params.min_rate, 1.0));
        }
    }
    PreInfo::new(f, r)
}

/// Take `(F, R)` of the chosen branch for every simulated pair and sample
/// the rest.
pub fn preinfo_from_qmcs(results: &BTreeMap<(usize, usize), BkResult>, n_qubits: usize, fill: &GenParams) -> Result<PreInfo> {
    let base = generate_preinfo(fill, n_qubits)?;
    let (mut f, mut r) = (base.fidelity, base.success_prob);
    for (&(i, j), res) in results {
        if i >= n_qubits || j >= n_qubits || i == j {
            return Err(Error::Config(format!("pair ({i},{j}) out of range for {n_qubits} qubits")));
        }
        f.set_sym(i, j, res.fidelity());
        r.set_sym(i, j, res.rate());
    }
    PreInfo::new(f, r)
}

/// Map an `i,j,F,R,C,branch` table back to pre-information.
pub fn preinfo_from_qmcs_csv<R: std::io::Read>(r: R, n_qubits: usize, fill: &GenParams) -> Result<PreInfo> {
    let base = generate_preinfo(fill, n_qubits)?;
    let (mut f, mut p) = (base.fidelity, base.success_prob);
    let mut reader = csv::Reader::from_reader(r);
    for rec in reader.deserialize::<(usize, usize, f64, f64, f64, usize)>() {
        let (i, j, fv, rv, _, _) = rec?;
        if i >= n_qubits || j >= n_qubits || i == j {
            return Err(Error::Config(format!("pair ({i},{j}) out of range for {n_qubits} qubits")));
        }
        f.set_sym(i, j, fv);
        p.set_sym(i, j, rv);
    }
    PreInfo::new(f, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_sigma_is_exact_mean() {
        let p = GenParams { sigma_fidelity: 0.0, sigma_rate: 0.0, ..GenParams::default() };
        let pre = generate_preinfo(&p, 6).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                if i != j {
                    assert_eq!(pre.f(i, j), 0.98);
                    assert_eq!(pre.r(i, j), 0.10);
                }
            }
        }
    }

    #[test]
    fn clipping_holds() {
        let p = GenParams { sigma_fidelity: 0.5, sigma_rate: 0.5, ..GenParams::default() };
        let pre = generate_preinfo(&p, 20).unwrap();
        for i in 0..20 {
            for j in 0..20 {
                if i != j {
                    assert!((0.5..=0.9999).contains(&pre.f(i, j)));
                    assert!((0.01..=1.0).contains(&pre.r(i, j)));
                }
            }
        }
    }
}
