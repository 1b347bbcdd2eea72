//! The five pipeline commands behind the `modeconv` binary: constants,
//! design, solve, sweep, verify. Each one reads the resolved [`Ctx`],
//! prints a human summary, and writes machine-readable artifacts into the
//! output directory.

use std::path::{Path, PathBuf};

use num_complex::Complex64;

use modeconv::constants::{
    energy_identity_residual, predicted_far_field, AsymptoticConstants, ConstantsCache,
};
use modeconv::design::{coupling_ratio, DesignSpec};
use modeconv::geometry::WaveguideGeometry;
use modeconv::optimize::{
    self, landscape_row, DeficitReport, RangeSpec, SweepConfig, SweepPoint, Targets,
    LANDSCAPE_HEADER,
};
use modeconv::report::{complex_fields, write_csv, write_vtk};
use modeconv::scattering::{
    matrix_inf_norm, solve_full, solve_half, solve_half_pair, verify_decomposition, FieldExport,
    SymmetryBc,
};
use modeconv::{Error, Result};

use crate::config::{AbcChoice, Ligaments, RunConfig, TargetChoice};

/// Row-sum tolerance of the energy conservation audit.
pub const ENERGY_TOL: f64 = 1e-3;
/// Residual tolerance of the mirror decomposition identity.
pub const DECOMPOSITION_TOL: f64 = 1e-3;
/// Reflection and transmission-defect budget of the straight-duct check.
pub const DUCT_TOL: f64 = 1e-4;
/// Tolerance on the symmetry of the off-diagonal scattering entries.
pub const RECIPROCITY_TOL: f64 = 1e-3;

/// Command failure modes, separated for the process exit code.
#[derive(Debug)]
pub enum Failure {
    /// A physical invariant check failed (exit code 2).
    Invariant(String),
    /// A propagated library error (exit code 3 or 4 by kind).
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

pub type CmdResult = std::result::Result<(), Failure>;

/// Resolved invocation context: validated configuration plus the output
/// directory every artifact lands in.
pub struct Ctx {
    pub config: RunConfig,
    pub out_dir: PathBuf,
}

impl Ctx {
    fn cache_path(&self) -> PathBuf {
        self.out_dir.join("constants_cache.json")
    }

    /// Loads or computes the asymptotic constants through the on-disk
    /// cache, announcing which of the two happened.
    fn constants(&self) -> Result<AsymptoticConstants> {
        let path = self.cache_path();
        let mut cache = ConstantsCache::load(&path)?;
        let (constants, hit) = cache.asymptotic(self.config.omega, &self.config.constants)?;
        cache.save(&path)?;
        println!(
            "constants: {} ({})",
            if hit { "cache hit" } else { "computed" },
            path.display()
        );
        Ok(constants)
    }

    fn design(&self) -> Result<DesignSpec> {
        let constants = self.constants()?;
        DesignSpec::new(
            self.config.omega,
            self.config.epsilon,
            self.config.m_minus,
            self.config.m_plus,
            constants.design_constants(),
        )
    }

    /// Geometry for `solve` and `verify`: the design recipe, or the two
    /// explicit attachments from the configuration.
    fn geometry(&self) -> Result<WaveguideGeometry> {
        let (minus, plus) = match self.config.ligaments {
            Ligaments::Auto(_) => self.design()?.ligaments(),
            Ligaments::Explicit { minus, plus } => (minus, plus),
        };
        WaveguideGeometry::with_ligaments(minus, plus, self.config.truncation)
    }

    fn write_json<T: serde::Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let path = self.out_dir.join(name);
        std::fs::write(&path, serde_json::to_string_pretty(value)?)?;
        Ok(path)
    }
}

/// Computes the junction and wall Green's constants and reports the
/// identities that validate them.
pub fn cmd_constants(ctx: &Ctx) -> CmdResult {
    let constants = ctx.constants()?;
    let junction = &constants.junction;
    println!(
        "junction constant C_Xi = {:.6} (extrapolation spread {:.2e})",
        junction.value, junction.estimated_error
    );
    for gc in [&constants.gamma_minus, &constants.gamma_plus] {
        let k = coupling_ratio(gc.omega, gc.y_attach)?;
        let predicted = predicted_far_field(gc.omega, gc.y_attach)?;
        let far_defect = gc
            .far_field
            .iter()
            .zip(predicted.iter())
            .map(|(got, want)| (got - want).norm())
            .fold(0.0, f64::max);
        println!(
            "Gamma({:.7}) = {:.6} {:+.6}i: Im(omega Gamma) = {:.4} vs 1 + K = {:.4} \
             (residual {:.2e}), far-field defect {:.2e}",
            gc.y_attach,
            gc.gamma.re,
            gc.gamma.im,
            (gc.omega * gc.gamma).im,
            1.0 + k,
            energy_identity_residual(gc),
            far_defect
        );
    }
    let path = ctx.write_json("constants.json", &constants)?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Evaluates the design recipe and writes the resulting specification.
pub fn cmd_design(ctx: &Ctx) -> CmdResult {
    let spec = ctx.design()?;
    println!(
        "attachments: y_minus = {:.7}, y_plus = {:.7}",
        spec.y_minus, spec.y_plus
    );
    println!(
        "critical lengths: ell_minus = {:.7}, ell_plus = {:.7}",
        spec.ell_minus, spec.ell_plus
    );
    println!(
        "corrected lengths at width {}: {:.7}, {:.7}",
        spec.epsilon, spec.ell_minus_eps, spec.ell_plus_eps
    );
    if spec.asymptotic_warning {
        println!("warning: a length correction consumes a large fraction of its critical length");
    }
    let path = ctx.write_json("design.json", &spec)?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Solves the configured geometry and exports matrices, a run report, and
/// the solution fields.
pub fn cmd_solve(ctx: &Ctx, abc: Option<AbcChoice>) -> CmdResult {
    let geom = ctx.geometry()?;
    match abc.or(ctx.config.abc) {
        Some(choice) => solve_one_half(ctx, &geom, choice.into()),
        None => solve_mirrored(ctx, &geom),
    }
}

fn solve_mirrored(ctx: &Ctx, geom: &WaveguideGeometry) -> CmdResult {
    let config = &ctx.config;
    let run = solve_full(geom, &config.mesh, config.omega, config.dtn_terms, true)?;
    println!("R = {}", fmt_matrix(&run.reflection));
    println!("T = {}", fmt_matrix(&run.transmission));
    let mut rows = Vec::new();
    for j in 0..run.n_propagating {
        for i in 0..run.n_propagating {
            rows.push(vec![
                (j + 1) as f64,
                (i + 1) as f64,
                run.reflection[j][i].re,
                run.reflection[j][i].im,
                run.transmission[j][i].re,
                run.transmission[j][i].im,
            ]);
        }
    }
    let matrices = ctx.out_dir.join("matrices.csv");
    write_csv(
        &matrices,
        &["row", "col", "r_re", "r_im", "t_re", "t_im"],
        &rows,
    )?;
    if let Some(export) = &run.export {
        let fields = ctx.out_dir.join("fields.vtk");
        write_fields(&fields, export)?;
        println!("wrote {}", fields.display());
    }
    let report = ctx.write_json("report.json", &run)?;
    println!("wrote {} and {}", matrices.display(), report.display());
    energy_gate(&run.energy_defect)
}

fn solve_one_half(ctx: &Ctx, geom: &WaveguideGeometry, bc: SymmetryBc) -> CmdResult {
    let config = &ctx.config;
    let run = solve_half(geom, &config.mesh, config.omega, config.dtn_terms, bc)?;
    println!("R_{} = {}", bc_letter(bc), fmt_matrix(&run.reflection));
    let mut rows = Vec::new();
    for j in 0..run.n_propagating {
        for i in 0..run.n_propagating {
            rows.push(vec![
                (j + 1) as f64,
                (i + 1) as f64,
                run.reflection[j][i].re,
                run.reflection[j][i].im,
            ]);
        }
    }
    let matrices = ctx.out_dir.join("matrices.csv");
    write_csv(&matrices, &["row", "col", "r_re", "r_im"], &rows)?;
    let report = ctx.write_json("report.json", &run)?;
    println!("wrote {} and {}", matrices.display(), report.display());
    energy_gate(&run.energy_defect)
}

/// Maps the cost landscape over the two ligament lengths and compares the
/// optimum against the length-correction prediction when one exists.
pub fn cmd_sweep(ctx: &Ctx, grid: Option<&str>, targets: Option<TargetChoice>) -> CmdResult {
    let config = &ctx.config;
    let targets = targets.map(Targets::from).unwrap_or(config.targets);
    let grid = grid.map(crate::config::parse_grid).transpose()?;

    let (y_minus, y_plus, epsilon, center_minus, center_plus, design) = match config.ligaments {
        Ligaments::Auto(_) => {
            let spec = ctx.design()?;
            (
                spec.y_minus,
                spec.y_plus,
                spec.epsilon,
                spec.ell_minus_eps,
                spec.ell_plus_eps,
                Some(spec),
            )
        }
        Ligaments::Explicit { minus, plus } => {
            if minus.width != plus.width {
                return Err(Failure::Core(Error::Config(format!(
                    "a length sweep needs one common tube width, got {} and {}",
                    minus.width, plus.width
                ))));
            }
            (
                minus.y_attach,
                plus.y_attach,
                minus.width,
                minus.length,
                plus.length,
                None,
            )
        }
    };

    let halfwidth = config.sweep.halfwidth_factor * epsilon;
    let count = config.sweep.grid_points;
    let (range_minus, range_plus) = match grid {
        Some(ranges) => ranges,
        None => (
            config
                .sweep
                .range_minus
                .unwrap_or_else(|| RangeSpec::around(center_minus, halfwidth, count)),
            config
                .sweep
                .range_plus
                .unwrap_or_else(|| RangeSpec::around(center_plus, halfwidth, count)),
        ),
    };

    let sweep_config = SweepConfig {
        omega: config.omega,
        epsilon,
        y_minus,
        y_plus,
        range_minus,
        range_plus,
        mesh: config.mesh,
        truncation: config.truncation,
        n_terms: config.dtn_terms,
        targets,
        refine: config.sweep.refine,
    };
    let outcome = optimize::sweep(&sweep_config)?;
    for failure in &outcome.failures {
        eprintln!(
            "sweep point (ell_minus = {:.6}, ell_plus = {:.6}) failed: {}",
            failure.ell_minus, failure.ell_plus, failure.reason
        );
    }

    let landscape = ctx.out_dir.join("landscape.csv");
    let rows: Vec<Vec<f64>> = outcome.points.iter().map(landscape_row).collect();
    write_csv(&landscape, &LANDSCAPE_HEADER, &rows)?;

    let optimum = outcome.optimum();
    println!(
        "optimum: ell_minus = {:.6}, ell_plus = {:.6}, cost = {:.3}",
        optimum.ell_minus, optimum.ell_plus, optimum.cost
    );
    let deficit = design.as_ref().map(|spec| {
        let report = optimize::compare_to_prediction(optimum, spec);
        println!(
            "length deficit, upper ligament: observed {:.6} vs predicted {:.6} (ratio {:.3})",
            report.observed_minus, report.predicted_minus, report.ratio_minus
        );
        println!(
            "length deficit, lower ligament: observed {:.6} vs predicted {:.6} (ratio {:.3})",
            report.observed_plus, report.predicted_plus, report.ratio_plus
        );
        report
    });

    #[derive(serde::Serialize)]
    struct ArgminReport<'a> {
        optimum: &'a SweepPoint,
        grid_best: &'a SweepPoint,
        refined: bool,
        n_points: usize,
        n_failures: usize,
        targets: Targets,
        deficit: Option<DeficitReport>,
    }
    let report = ArgminReport {
        optimum,
        grid_best: &outcome.best,
        refined: outcome.refined.is_some(),
        n_points: outcome.points.len(),
        n_failures: outcome.failures.len(),
        targets,
        deficit,
    };
    let path = ctx.write_json("argmin.json", &report)?;
    println!("wrote {} and {}", landscape.display(), path.display());
    Ok(())
}

#[derive(serde::Serialize)]
struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

impl Check {
    fn new(name: &'static str, pass: bool, detail: String) -> Self {
        Self { name, pass, detail }
    }
}

/// Runs the physical-invariant battery: duct transparency, the mirror
/// decomposition identity, energy conservation, reciprocity, and the
/// guard that rejects comparisons across different discretizations.
pub fn cmd_verify(ctx: &Ctx) -> CmdResult {
    let config = &ctx.config;
    let mut checks = Vec::new();

    let duct = WaveguideGeometry::straight_duct(config.truncation)?;
    let duct_run = solve_full(&duct, &config.mesh, config.omega, config.dtn_terms, false)?;
    let r_norm = matrix_inf_norm(&duct_run.reflection);
    let t_defect = (0..duct_run.n_propagating)
        .map(|i| (duct_run.transmission[i][i] - Complex64::new(1.0, 0.0)).norm())
        .fold(0.0, f64::max);
    checks.push(Check::new(
        "duct transparency",
        r_norm <= DUCT_TOL && t_defect <= DUCT_TOL,
        format!("|R| = {r_norm:.2e}, diagonal |T - 1| = {t_defect:.2e} (tol {DUCT_TOL:.0e})"),
    ));

    let geom = ctx.geometry()?;
    let full = solve_full(&geom, &config.mesh, config.omega, config.dtn_terms, false)?;
    let (neumann, dirichlet) =
        solve_half_pair(&geom, &config.mesh, config.omega, config.dtn_terms)?;
    let decomposition = verify_decomposition(&full, &neumann, &dirichlet)?;
    let residual = decomposition.max_residual();
    checks.push(Check::new(
        "mirror decomposition",
        residual <= DECOMPOSITION_TOL,
        format!("residual {residual:.2e} (tol {DECOMPOSITION_TOL:.0e})"),
    ));

    let worst_energy = duct_run
        .energy_defect
        .iter()
        .chain(&full.energy_defect)
        .chain(&neumann.energy_defect)
        .chain(&dirichlet.energy_defect)
        .fold(0.0f64, |acc, &d| acc.max(d));
    checks.push(Check::new(
        "energy conservation",
        worst_energy <= ENERGY_TOL,
        format!("worst row-sum defect {worst_energy:.2e} (tol {ENERGY_TOL:.0e})"),
    ));

    if full.n_propagating >= 2 {
        let splitting = (full.transmission[0][1] - full.transmission[1][0])
            .norm()
            .max((full.reflection[0][1] - full.reflection[1][0]).norm());
        checks.push(Check::new(
            "reciprocity",
            splitting <= RECIPROCITY_TOL,
            format!("off-diagonal splitting {splitting:.2e} (tol {RECIPROCITY_TOL:.0e})"),
        ));
    }

    let far_duct = WaveguideGeometry::straight_duct(config.truncation + 0.5)?;
    let (far_neumann, far_dirichlet) =
        solve_half_pair(&far_duct, &config.mesh, config.omega, config.dtn_terms)?;
    let (guard_pass, guard_detail) =
        match verify_decomposition(&duct_run, &far_neumann, &far_dirichlet) {
            Err(Error::IncomparableRuns(_)) => (true, "mismatched runs rejected".to_string()),
            Err(e) => (false, format!("unexpected error: {e}")),
            Ok(_) => (false, "mismatched runs were not rejected".to_string()),
        };
    checks.push(Check::new("incomparable-run guard", guard_pass, guard_detail));

    let mut all_pass = true;
    for check in &checks {
        println!(
            "[{}] {}: {}",
            if check.pass { "PASS" } else { "FAIL" },
            check.name,
            check.detail
        );
        all_pass &= check.pass;
    }
    let path = ctx.write_json("verify.json", &checks)?;
    println!("wrote {}", path.display());
    if !all_pass {
        return Err(Failure::Invariant("verification suite failed".into()));
    }
    Ok(())
}

/// Prints the row-sum energy audit and fails the run past the tolerance.
fn energy_gate(defects: &[f64]) -> CmdResult {
    let mut worst = 0.0f64;
    for (i, defect) in defects.iter().enumerate() {
        worst = worst.max(*defect);
        println!(
            "energy row sum, incident mode {}: defect {:.2e} {} (tol {:.0e})",
            i + 1,
            defect,
            if *defect <= ENERGY_TOL { "PASS" } else { "FAIL" },
            ENERGY_TOL
        );
    }
    if worst > ENERGY_TOL {
        return Err(Failure::Invariant(format!(
            "energy conservation defect {worst:.2e} exceeds {ENERGY_TOL:.0e}"
        )));
    }
    Ok(())
}

/// Exports the solution fields, real and imaginary parts as separate
/// scalars per incident mode.
fn write_fields(path: &Path, export: &FieldExport) -> Result<()> {
    let mut named: Vec<(String, Vec<f64>)> = Vec::new();
    for (name, values) in &export.fields {
        let (re, im, abs) = complex_fields(values);
        named.push((format!("{name}_re"), re));
        named.push((format!("{name}_im"), im));
        named.push((format!("{name}_abs"), abs));
    }
    let fields: Vec<(&str, &[f64])> = named
        .iter()
        .map(|(name, data)| (name.as_str(), data.as_slice()))
        .collect();
    write_vtk(path, &export.points, &export.triangles, &fields)
}

fn fmt_matrix(m: &[Vec<Complex64>]) -> String {
    let rows: Vec<String> = m
        .iter()
        .map(|row| {
            row.iter()
                .map(|z| format!("{:+.5}{:+.5}i", z.re, z.im))
                .collect::<Vec<_>>()
                .join("  ")
        })
        .collect();
    format!("[ {} ]", rows.join(" ; "))
}

fn bc_letter(bc: SymmetryBc) -> &'static str {
    match bc {
        SymmetryBc::Neumann => "N",
        SymmetryBc::Dirichlet => "D",
    }
}
