use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use detour::yield_analysis::{monte_carlo_yield, tolerance_curve, write_curve_csv, CurvePoint};
use detour::{
    effective_layout, embed_target, embed_unitary, matrix_io, plan_defects, transfer, verify_settings, CountModel,
    Error, Mesh, MeshDocument, MeshLayout, MeshSettings, RoutingPlan, YieldQuery,
};

mod grid;

#[derive(Parser)]
#[command(
    name = "detour",
    version,
    about = "Compile and verify unitaries on MZI meshes with defects"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose a unitary onto a rectangular mesh.
    Decompose {
        /// Square unitary as JSON `[[[re, im], ...], ...]` or CSV rows of `re,im,...`.
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Route around the defects listed in a mesh document.
    Plan {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Program a defective mesh to implement a target on its effective layout.
    Compile {
        #[arg(long)]
        mesh: PathBuf,
        /// A unitary matrix file, or a mesh document holding effective settings.
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a compiled document and print the report as JSON.
    Verify {
        #[arg(long)]
        mesh: PathBuf,
    },
    /// Largest mesh with better-than-even yield over a grid of defect probabilities.
    Yield {
        /// `log:a:b:k`, `lin:a:b:k` or a comma-separated list.
        #[arg(long = "epsilon-grid")]
        epsilon_grid: String,
        /// Spare-mode ratios; one CSV is written per value.
        #[arg(long, value_delimiter = ',', default_value = "0")]
        overhead: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Model::Approximate)]
        model: Model,
        /// Also estimate each yield by Monte Carlo with this seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 10_000, requires = "seed")]
        trials: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Approximate,
    Exact,
}

impl From<Model> for CountModel {
    fn from(m: Model) -> Self {
        match m {
            Model::Approximate => CountModel::Approximate,
            Model::Exact => CountModel::Exact,
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn validation(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) => 3,
            Error::Unsalvageable(_) | Error::TemplateMismatch(_) | Error::PlanConflict(_) => 4,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type Outcome = Result<ExitCode, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Decompose { matrix, out } => decompose(&matrix, &out),
        Command::Plan { mesh, out } => plan(&mesh, &out),
        Command::Compile { mesh, target, out } => compile(&mesh, &target, &out),
        Command::Verify { mesh } => verify(&mesh),
        Command::Yield {
            epsilon_grid,
            overhead,
            out,
            model,
            seed,
            trials,
        } => tolerance(&epsilon_grid, &overhead, &out, model.into(), seed.map(|s| (s, trials))),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure {
        code: 3,
        message: format!("{}: {e}", path.display()),
    })
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure {
        code: 3,
        message: format!("{}: {e}", path.display()),
    })
}

fn load_document(path: &Path) -> Result<MeshDocument, Failure> {
    let doc = MeshDocument::parse(&read(path)?)?;
    for w in &doc.warnings {
        eprintln!("warning: {}: {w}", path.display());
    }
    Ok(doc)
}

fn save_document(path: &Path, doc: &MeshDocument) -> Result<(), Failure> {
    write(path, &doc.to_json()?)
}

/// The stored plan, or a fresh one for the listed defects.
fn plan_of(doc: &MeshDocument) -> Result<(RoutingPlan, MeshLayout), Failure> {
    let mesh = doc.mesh()?;
    let plan = match &doc.plan {
        Some(p) => p.clone(),
        None => plan_defects(&mesh, &doc.defects)?,
    };
    let layout = effective_layout(&mesh, &plan)?.layout();
    Ok((plan, layout))
}

fn decompose(matrix: &Path, out: &Path) -> Outcome {
    let u = matrix_io::parse_matrix(&read(matrix)?)?;
    let layout = MeshLayout::rectangular(u.nrows());
    let settings = detour::decompose(&u, layout)?;
    let mut doc = MeshDocument::with_settings(layout, settings);
    doc.target = Some(u);
    save_document(out, &doc)?;
    Ok(ExitCode::SUCCESS)
}

fn plan(mesh: &Path, out: &Path) -> Outcome {
    let mut doc = load_document(mesh)?;
    let plan = plan_defects(&doc.mesh()?, &doc.defects)?;
    let layout = effective_layout(&doc.mesh()?, &plan)?.layout();
    eprintln!("effective layout: {layout}");
    doc.plan = Some(plan);
    doc.effective_layout = Some(layout);
    save_document(out, &doc)?;
    Ok(ExitCode::SUCCESS)
}

fn compile(mesh: &Path, target: &Path, out: &Path) -> Outcome {
    let mut doc = load_document(mesh)?;
    let physical = doc.mesh()?;
    let (plan, layout) = plan_of(&doc)?;
    let text = read(target)?;
    let settings = if text.trim_start().starts_with('{') {
        let t = MeshDocument::parse(&text)?;
        if t.layout != layout {
            return Err(Failure::validation(format!(
                "target document is laid out as {}, but the effective layout is {layout}",
                t.layout
            )));
        }
        let effective: MeshSettings = t
            .settings
            .ok_or_else(|| Failure::validation("target document has no settings"))?;
        doc.target = Some(transfer(&Mesh::new(layout)?, &effective, &[])?);
        embed_target(&physical, &plan, &effective)?
    } else {
        let u = matrix_io::parse_matrix(&text)?;
        let settings = embed_unitary(&physical, &plan, &u)?;
        doc.target = Some(u);
        settings
    };
    doc.settings = Some(settings);
    doc.plan = Some(plan);
    doc.effective_layout = Some(layout);
    doc.report = None;
    save_document(out, &doc)?;
    Ok(ExitCode::SUCCESS)
}

fn verify(mesh: &Path) -> Outcome {
    let doc = load_document(mesh)?;
    let settings = doc
        .settings
        .as_ref()
        .ok_or_else(|| Failure::validation("document has no settings to verify"))?;
    let (plan, _) = plan_of(&doc)?;
    let report = verify_settings(&doc.mesh()?, &plan, &doc.defects, settings, doc.target.as_ref())?;
    println!("{}", serde_json::to_string_pretty(&report).map_err(Error::from)?);
    Ok(if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn tolerance(spec: &str, overheads: &[f64], out: &Path, model: CountModel, monte_carlo: Option<(u64, u64)>) -> Outcome {
    let grid = grid::parse_grid(spec).map_err(Failure::validation)?;
    if overheads.is_empty() {
        return Err(Failure::validation("no overhead values given"));
    }
    for &r in overheads {
        let curve = tolerance_curve(r, &grid, model)?;
        let path = if overheads.len() == 1 {
            out.to_path_buf()
        } else {
            suffixed(out, &format!("_r{r}"))
        };
        let mut csv = Vec::new();
        write_curve_csv(&mut csv, &curve)?;
        write(&path, &String::from_utf8_lossy(&csv))?;
        if let Some((seed, trials)) = monte_carlo {
            write(
                &suffixed(&path, "_mc"),
                &monte_carlo_table(&curve, r, model, seed, trials)?,
            )?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Analytic and sampled yield at each curve point's largest mesh.
fn monte_carlo_table(
    curve: &[CurvePoint],
    r: f64,
    model: CountModel,
    seed: u64,
    trials: u64,
) -> Result<String, Failure> {
    let mut out = String::from("epsilon,max_n,p_analytic,p_monte_carlo,std_error\n");
    for (i, point) in curve.iter().enumerate() {
        let q = YieldQuery::with_overhead(point.max_n, r, point.epsilon, model);
        let analytic = q.success_probability()?;
        let mc = monte_carlo_yield(q.components(), q.m, point.epsilon, trials, seed.wrapping_add(i as u64))?;
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            point.epsilon, point.max_n, analytic, mc.estimate, mc.std_error
        ));
    }
    Ok(out)
}

fn suffixed(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}{suffix}.{}", ext.to_string_lossy()),
        None => format!("{stem}{suffix}"),
    };
    path.with_file_name(name)
}
