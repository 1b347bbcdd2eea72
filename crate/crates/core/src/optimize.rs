//! Length-pair optimization of the two-ligament device.
//!
//! The mode-conversion quality of a device with ligament half-lengths
//! `(l_minus, l_plus)` is scored by the cost
//!
//! `J = ln(|R_N - T_N| + |R_D - T_D|)`,
//!
//! where `R_N`, `R_D` are the computed half-problem reflection matrices,
//! `T_N`, `T_D` the targets of the chosen convention, and `|.|` the
//! entrywise max-modulus distance. The landscape is evaluated on a
//! rectangular grid of length pairs, every point requiring one Neumann and
//! one Dirichlet half-domain solve, and the grid argmin is polished by
//! coordinate-alternating golden-section descent, which suits the nearly
//! separable structure of `J`: the Neumann distance is driven by `l_minus`
//! and the Dirichlet distance by `l_plus`.
//!
//! The located optimum quantifies the width correction of the design
//! recipe: the optimal lengths fall short of the critical resonance lengths
//! by approximately `epsilon (|ln epsilon|/pi + C_Xi + Re Gamma)`, and
//! [`compare_to_prediction`] reports the observed-to-predicted ratio of the
//! two deficits.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{length_correction, DesignSpec};
use crate::error::{Error, Result};
use crate::geometry::{Bend, LigamentSpec, WaveguideGeometry, GAP_HALFWIDTH};
use crate::mesh::MeshParams;
use crate::scattering::solve_half_pair;

/// Floor under the summed distances before taking the log.
const COST_FLOOR: f64 = 1e-300;
/// Length tolerance of the golden-section polish.
const REFINE_TOL: f64 = 1e-5;
/// Coordinate-alternation rounds of the polish.
const REFINE_ROUNDS: usize = 2;

/// Target convention for the half-problem reflection matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Targets {
    /// Mode exchange: `T_N` antidiagonal `(1, 1)`, `T_D` antidiagonal
    /// `(-1, -1)`. The composed device then transmits mode 1 into mode 2
    /// with no reflection.
    Antidiagonal,
    /// Mode preservation with symmetry-split phases: `T_N = I`,
    /// `T_D = -I`.
    Identity,
}

impl Targets {
    /// The pair `(T_N, T_D)` of target matrices.
    pub fn matrices(self) -> ([[Complex64; 2]; 2], [[Complex64; 2]; 2]) {
        let o = Complex64::new(0.0, 0.0);
        let u = Complex64::new(1.0, 0.0);
        match self {
            Targets::Antidiagonal => ([[o, u], [u, o]], [[o, -u], [-u, o]]),
            Targets::Identity => ([[u, o], [o, u]], [[-u, o], [o, -u]]),
        }
    }
}

/// Entrywise max-modulus distance between a computed reflection matrix and
/// a 2x2 target.
pub fn matrix_distance(m: &[Vec<Complex64>], target: &[[Complex64; 2]; 2]) -> f64 {
    let mut d = 0.0f64;
    for (j, row) in target.iter().enumerate() {
        for (i, t) in row.iter().enumerate() {
            d = d.max((m[j][i] - t).norm());
        }
    }
    d
}

/// The two summands of the cost, `(|R_N - T_N|, |R_D - T_D|)`.
pub fn distances(
    r_n: &[Vec<Complex64>],
    r_d: &[Vec<Complex64>],
    targets: Targets,
) -> (f64, f64) {
    let (t_n, t_d) = targets.matrices();
    (matrix_distance(r_n, &t_n), matrix_distance(r_d, &t_d))
}

/// Log-distance cost of a pair of half-problem reflection matrices.
pub fn cost(r_n: &[Vec<Complex64>], r_d: &[Vec<Complex64>], targets: Targets) -> f64 {
    let (d_n, d_d) = distances(r_n, r_d, targets);
    (d_n + d_d).max(COST_FLOOR).ln()
}

/// Inclusive linearly spaced sample range.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RangeSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl RangeSpec {
    /// Symmetric range of `count` points centered on `center`.
    pub fn around(center: f64, halfwidth: f64, count: usize) -> Self {
        Self {
            start: center - halfwidth,
            stop: center + halfwidth,
            count,
        }
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        if self.count == 0 {
            return Err(Error::Config("empty sample range".into()));
        }
        if !(self.stop >= self.start) {
            return Err(Error::Config(format!(
                "range [{}, {}] is reversed",
                self.start, self.stop
            )));
        }
        if self.count == 1 {
            return Ok(vec![0.5 * (self.start + self.stop)]);
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        Ok((0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    self.stop
                } else {
                    self.start + step * i as f64
                }
            })
            .collect())
    }

    fn step(&self) -> f64 {
        if self.count < 2 {
            0.5 * (self.stop - self.start).max(1e-3)
        } else {
            (self.stop - self.start) / (self.count - 1) as f64
        }
    }
}

/// Full description of one landscape sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    pub omega: f64,
    /// Ligament width; also the tube width of every sweep point.
    pub epsilon: f64,
    pub y_minus: f64,
    pub y_plus: f64,
    pub range_minus: RangeSpec,
    pub range_plus: RangeSpec,
    pub mesh: MeshParams,
    pub truncation: f64,
    pub n_terms: usize,
    pub targets: Targets,
    /// Polish the grid argmin by golden-section descent.
    pub refine: bool,
}

/// One evaluated landscape point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPoint {
    pub ell_minus: f64,
    pub ell_plus: f64,
    pub cost: f64,
    #[serde(with = "crate::report::complex_mat")]
    pub r_n: Vec<Vec<Complex64>>,
    #[serde(with = "crate::report::complex_mat")]
    pub r_d: Vec<Vec<Complex64>>,
}

/// A sweep point whose solve failed, kept for the log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepFailure {
    pub ell_minus: f64,
    pub ell_plus: f64,
    pub reason: String,
}

/// Landscape, argmin, and optional polished optimum of one sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepOutcome {
    /// Valid points in grid order (`ell_minus` outer, `ell_plus` inner).
    pub points: Vec<SweepPoint>,
    pub failures: Vec<SweepFailure>,
    /// Grid argmin (first of equal minima).
    pub best: SweepPoint,
    /// Golden-section polish of the argmin, when requested.
    pub refined: Option<SweepPoint>,
}

impl SweepOutcome {
    /// The located optimum: the polished point when present, else the grid
    /// argmin.
    pub fn optimum(&self) -> &SweepPoint {
        self.refined.as_ref().unwrap_or(&self.best)
    }
}

fn bend_for(y: f64) -> Bend {
    if y >= 0.5 {
        Bend::Up
    } else {
        Bend::Down
    }
}

/// Evaluates one length pair: two half-domain solves and the cost.
pub fn evaluate_point(cfg: &SweepConfig, ell_minus: f64, ell_plus: f64) -> Result<SweepPoint> {
    let minus = LigamentSpec {
        y_attach: cfg.y_minus,
        length: ell_minus,
        width: cfg.epsilon,
        bend: bend_for(cfg.y_minus),
    };
    let plus = LigamentSpec {
        y_attach: cfg.y_plus,
        length: ell_plus,
        width: cfg.epsilon,
        bend: bend_for(cfg.y_plus),
    };
    let geom = WaveguideGeometry::with_ligaments(minus, plus, cfg.truncation)?;
    let (neumann, dirichlet) = solve_half_pair(&geom, &cfg.mesh, cfg.omega, cfg.n_terms)?;
    let j = cost(&neumann.reflection, &dirichlet.reflection, cfg.targets);
    Ok(SweepPoint {
        ell_minus,
        ell_plus,
        cost: j,
        r_n: neumann.reflection,
        r_d: dirichlet.reflection,
    })
}

/// Evaluates the full landscape and locates the optimum.
///
/// Points are solved independently in parallel and reported in grid order,
/// so identical configurations produce identical outcomes. A point whose
/// solve fails is excluded from the argmin and recorded in `failures`.
pub fn sweep(cfg: &SweepConfig) -> Result<SweepOutcome> {
    cfg.mesh.validate()?;
    let lm = cfg.range_minus.values()?;
    let lp = cfg.range_plus.values()?;
    let grid: Vec<(f64, f64)> = lm
        .iter()
        .flat_map(|&a| lp.iter().map(move |&b| (a, b)))
        .collect();
    let solved: Vec<(f64, f64, Result<SweepPoint>)> = grid
        .par_iter()
        .map(|&(a, b)| (a, b, evaluate_point(cfg, a, b)))
        .collect();

    let mut points = Vec::with_capacity(solved.len());
    let mut failures = Vec::new();
    for (a, b, r) in solved {
        match r {
            Ok(p) => points.push(p),
            Err(e) => failures.push(SweepFailure {
                ell_minus: a,
                ell_plus: b,
                reason: e.to_string(),
            }),
        }
    }
    let best = points
        .iter()
        .min_by(|p, q| p.cost.partial_cmp(&q.cost).expect("finite costs"))
        .ok_or_else(|| Error::Config("every sweep point failed to solve".into()))?
        .clone();

    let refined = if cfg.refine {
        Some(refine(cfg, &best, cfg.range_minus.step(), cfg.range_plus.step())?)
    } else {
        None
    };
    Ok(SweepOutcome {
        points,
        failures,
        best,
        refined,
    })
}

/// Golden-section minimization of a unimodal scalar function on `[a, b]` to
/// abscissa tolerance `tol`; returns the best sampled `(x, f(x))`.
pub fn golden_min(
    f: &mut dyn FnMut(f64) -> Result<f64>,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    const INVPHI2: f64 = 1.0 - INVPHI;
    let (mut a, mut b) = (a, b);
    let mut c = a + INVPHI2 * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = a + INVPHI2 * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc <= fd { (c, fc) } else { (d, fd) })
}

/// Polishes a grid argmin by alternating golden-section descents in the two
/// lengths, each bracketed by one grid step around the current iterate.
pub fn refine(
    cfg: &SweepConfig,
    seed: &SweepPoint,
    step_minus: f64,
    step_plus: f64,
) -> Result<SweepPoint> {
    let floor = GAP_HALFWIDTH + 0.02;
    let mut lm = seed.ell_minus;
    let mut lp = seed.ell_plus;
    let mut sm = step_minus;
    let mut sp = step_plus;
    for _ in 0..REFINE_ROUNDS {
        let (x, _) = golden_min(
            &mut |l| Ok(evaluate_point(cfg, l, lp)?.cost),
            (lm - sm).max(floor),
            lm + sm,
            REFINE_TOL,
        )?;
        lm = x;
        let (x, _) = golden_min(
            &mut |l| Ok(evaluate_point(cfg, lm, l)?.cost),
            (lp - sp).max(floor),
            lp + sp,
            REFINE_TOL,
        )?;
        lp = x;
        sm *= 0.25;
        sp *= 0.25;
    }
    evaluate_point(cfg, lm, lp)
}

/// Observed-vs-predicted width corrections at a located optimum.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeficitReport {
    pub epsilon: f64,
    pub ell_minus_star: f64,
    pub ell_plus_star: f64,
    /// `ell_critical - ell_star`, the length deficit the sweep found.
    pub observed_minus: f64,
    pub observed_plus: f64,
    /// `epsilon (|ln epsilon|/pi + C_Xi + Re Gamma)`.
    pub predicted_minus: f64,
    pub predicted_plus: f64,
    pub ratio_minus: f64,
    pub ratio_plus: f64,
}

/// Compares a sweep optimum against the corrected lengths of the design
/// recipe.
pub fn compare_to_prediction(optimum: &SweepPoint, design: &DesignSpec) -> DeficitReport {
    let predicted_minus = length_correction(
        design.epsilon,
        design.constants.c_xi,
        design.constants.re_gamma_minus,
    );
    let predicted_plus = length_correction(
        design.epsilon,
        design.constants.c_xi,
        design.constants.re_gamma_plus,
    );
    let observed_minus = design.ell_minus - optimum.ell_minus;
    let observed_plus = design.ell_plus - optimum.ell_plus;
    DeficitReport {
        epsilon: design.epsilon,
        ell_minus_star: optimum.ell_minus,
        ell_plus_star: optimum.ell_plus,
        observed_minus,
        observed_plus,
        predicted_minus,
        predicted_plus,
        ratio_minus: observed_minus / predicted_minus,
        ratio_plus: observed_plus / predicted_plus,
    }
}

/// Column names of the landscape table.
pub const LANDSCAPE_HEADER: [&str; 19] = [
    "ell_minus",
    "ell_plus",
    "cost",
    "rn11_re",
    "rn11_im",
    "rn12_re",
    "rn12_im",
    "rn21_re",
    "rn21_im",
    "rn22_re",
    "rn22_im",
    "rd11_re",
    "rd11_im",
    "rd12_re",
    "rd12_im",
    "rd21_re",
    "rd21_im",
    "rd22_re",
    "rd22_im",
];

/// One landscape table row, matching [`LANDSCAPE_HEADER`].
pub fn landscape_row(p: &SweepPoint) -> Vec<f64> {
    let mut row = vec![p.ell_minus, p.ell_plus, p.cost];
    for m in [&p.r_n, &p.r_d] {
        for j in 0..2 {
            for i in 0..2 {
                row.push(m[j][i].re);
                row.push(m[j][i].im);
            }
        }
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const OMEGA: f64 = 3.0 * std::f64::consts::PI / 2.0;

    fn antidiag(sign: f64) -> Vec<Vec<Complex64>> {
        let o = Complex64::new(0.0, 0.0);
        let s = Complex64::new(sign, 0.0);
        vec![vec![o, s], vec![s, o]]
    }

    fn diag(sign: f64) -> Vec<Vec<Complex64>> {
        let o = Complex64::new(0.0, 0.0);
        let s = Complex64::new(sign, 0.0);
        vec![vec![s, o], vec![o, s]]
    }

    #[test]
    fn cost_scores_both_target_conventions() {
        let hit = cost(&antidiag(1.0), &antidiag(-1.0), Targets::Antidiagonal);
        assert!(hit <= -600.0, "exact hit scored {hit}");
        let swapped = cost(&diag(1.0), &diag(-1.0), Targets::Antidiagonal);
        assert_relative_eq!(swapped, 2.0f64.ln(), epsilon = 1e-12);
        let other = cost(&antidiag(1.0), &antidiag(-1.0), Targets::Identity);
        assert_relative_eq!(other, 2.0f64.ln(), epsilon = 1e-12);
        let hit_id = cost(&diag(1.0), &diag(-1.0), Targets::Identity);
        assert!(hit_id <= -600.0);
    }

    #[test]
    fn distance_picks_the_largest_entry_defect() {
        let mut m = antidiag(1.0);
        m[0][0] = Complex64::new(0.02, 0.0);
        m[1][1] = Complex64::new(0.0, -0.07);
        let (t_n, _) = Targets::Antidiagonal.matrices();
        assert_relative_eq!(matrix_distance(&m, &t_n), 0.07, epsilon = 1e-15);
    }

    #[test]
    fn ranges_are_inclusive_and_validated() {
        let r = RangeSpec {
            start: 1.0,
            stop: 2.0,
            count: 5,
        };
        let v = r.values().unwrap();
        assert_eq!(v.len(), 5);
        assert_eq!(v[0], 1.0);
        assert_eq!(v[4], 2.0);
        assert_relative_eq!(v[2], 1.5, epsilon = 1e-15);

        let single = RangeSpec {
            start: 1.0,
            stop: 1.2,
            count: 1,
        };
        assert_eq!(single.values().unwrap(), vec![1.1]);

        assert!(RangeSpec {
            start: 1.0,
            stop: 2.0,
            count: 0
        }
        .values()
        .is_err());
        assert!(RangeSpec {
            start: 2.0,
            stop: 1.0,
            count: 3
        }
        .values()
        .is_err());
    }

    #[test]
    fn golden_section_locates_an_analytic_minimum() {
        let mut f = |x: f64| Ok((x - 1.3) * (x - 1.3) + 0.7);
        let (x, fx) = golden_min(&mut f, 0.0, 2.0, 1e-7).unwrap();
        assert_relative_eq!(x, 1.3, epsilon = 1e-5);
        assert_relative_eq!(fx, 0.7, epsilon = 1e-9);

        let mut fails = |_: f64| -> Result<f64> { Err(Error::Config("boom".into())) };
        assert!(golden_min(&mut fails, 0.0, 1.0, 1e-3).is_err());
    }

    #[test]
    fn deficit_report_recovers_the_design_correction() {
        let constants = crate::design::DesignConstants {
            c_xi: 0.3,
            re_gamma_minus: -0.1,
            re_gamma_plus: 0.2,
        };
        let design = DesignSpec::new(OMEGA, 0.01, 1, 2, constants).unwrap();
        let optimum = SweepPoint {
            ell_minus: design.ell_minus_eps,
            ell_plus: design.ell_plus_eps,
            cost: -5.0,
            r_n: antidiag(1.0),
            r_d: antidiag(-1.0),
        };
        let report = compare_to_prediction(&optimum, &design);
        assert_relative_eq!(report.ratio_minus, 1.0, epsilon = 1e-12);
        assert_relative_eq!(report.ratio_plus, 1.0, epsilon = 1e-12);
        assert_relative_eq!(
            report.predicted_minus,
            length_correction(0.01, 0.3, -0.1),
            epsilon = 1e-15
        );
        assert!(report.observed_minus > 0.0);
    }

    #[test]
    fn landscape_rows_match_the_header() {
        let p = SweepPoint {
            ell_minus: 1.0,
            ell_plus: 4.0 / 3.0,
            cost: -2.0,
            r_n: antidiag(1.0),
            r_d: antidiag(-1.0),
        };
        let row = landscape_row(&p);
        assert_eq!(row.len(), LANDSCAPE_HEADER.len());
        assert_eq!(row[0], 1.0);
        assert_eq!(row[2], -2.0);
        assert_eq!(row[5], 1.0);
        assert_eq!(row[13], -1.0);
    }

    #[test]
    fn coarse_sweep_is_deterministic_and_nearly_separable() {
        let cfg = SweepConfig {
            omega: OMEGA,
            epsilon: 0.1,
            y_minus: 0.709_020_9,
            y_plus: 0.290_979_1,
            range_minus: RangeSpec {
                start: 0.93,
                stop: 0.97,
                count: 2,
            },
            range_plus: RangeSpec {
                start: 1.24,
                stop: 1.28,
                count: 2,
            },
            mesh: MeshParams {
                h: 0.12,
                ..MeshParams::default()
            },
            truncation: 1.0,
            n_terms: 8,
            targets: Targets::Antidiagonal,
            refine: false,
        };
        let first = sweep(&cfg).unwrap();
        assert_eq!(first.points.len(), 4);
        assert!(first.failures.is_empty());
        assert!(first.points.iter().all(|p| p.cost.is_finite()));
        let min = first
            .points
            .iter()
            .map(|p| p.cost)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(first.best.cost, min);

        let second = sweep(&cfg).unwrap();
        for (p, q) in first.points.iter().zip(&second.points) {
            assert_eq!(p.cost, q.cost);
            assert_eq!(p.r_n[0][1], q.r_n[0][1]);
        }

        // Moving only the Dirichlet-resonant length barely moves the
        // Neumann distance: the two cost summands separate.
        let (p0, p1) = (&first.points[0], &first.points[1]);
        assert_eq!(p0.ell_minus, p1.ell_minus);
        let (n0, d0) = distances(&p0.r_n, &p0.r_d, cfg.targets);
        let (n1, d1) = distances(&p1.r_n, &p1.r_d, cfg.targets);
        assert!(
            (n1 - n0).abs() < 0.5 * (d1 - d0).abs(),
            "cross-sensitivity {} vs direct {}",
            (n1 - n0).abs(),
            (d1 - d0).abs()
        );
    }
}
