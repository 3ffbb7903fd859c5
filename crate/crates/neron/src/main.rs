//! Command-line front end: modular-curve pipelines for X₀(pM) and X₀(p²),
//! generic fibres from JSON, cusps and Hecke operators, Brandt matrices,
//! and a self-test suite. Exit codes: 0 success, 1 internal error,
//! 2 invalid input.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_traits::Zero;
use serde_json::json;

use neron::abelian::{smith_normal_form, FGAbGroup, IntMatrix};
use neron::modular::{
    self, CuspidalDivisor, GeometricCusp, ModularError,
};
use neron::neron::{
    component_group_j, component_group_jm, tori_component_group, validate_fibre,
    ModulusIncidence, NeronError, SpecialFibre, SpecialFibreJson, ModulusIncidenceJson,
};
use neron::supersingular::{self, SupersingularError};

#[derive(Parser)]
#[command(name = "neron", version, about = "Component and character groups of Néron models of generalized Jacobians")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Component groups for the minimal regular model of X₀(pM), p ∤ M
    #[command(name = "x0pM")]
    X0pM {
        #[arg(long)]
        p: u64,
        #[arg(long = "M", default_value_t = 1)]
        m: u64,
        /// "infty0", "full", or a comma-separated list of modulus point labels
        #[arg(long, default_value = "infty0")]
        modulus: String,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Component groups for the minimal regular model of X₀(p²)
    #[command(name = "x0p2")]
    X0p2 {
        #[arg(long)]
        p: u64,
        /// "full" (all cusps), "infty0", or a comma-separated label list
        #[arg(long, default_value = "full")]
        modulus: String,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Component groups for a generic special fibre given as JSON
    Fibre {
        #[arg(long)]
        input: PathBuf,
        #[arg(long = "modulus-input")]
        modulus_input: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Character group of the X₀(pM) Jacobian with modulus (∞) + (0)
    Char {
        #[arg(long)]
        p: u64,
        #[arg(long = "M", default_value_t = 1)]
        m: u64,
        /// Print the matrix of ᵗT_ℓ in the γ-basis (requires M = 1)
        #[arg(long)]
        hecke: Option<u64>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Cusps of X₀(N) and the Hecke action ᵗT_ℓ on cuspidal divisors
    Cusps {
        #[arg(long = "N")]
        n: u64,
        #[arg(long)]
        hecke: Option<u64>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Brandt matrix B(ℓ) on the supersingular points in characteristic p
    Brandt {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        ell: u64,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Component-group sweep over X₀(pM) for p ≤ pmax
    Sweep {
        #[arg(long, default_value_t = 97)]
        pmax: u64,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Run the internal consistency oracles
    Selftest,
}

struct CliError {
    code: u8,
    msg: String,
}

fn input_err(msg: impl Into<String>) -> CliError {
    CliError { code: 2, msg: msg.into() }
}

fn internal_err(msg: impl Into<String>) -> CliError {
    CliError { code: 1, msg: msg.into() }
}

impl From<ModularError> for CliError {
    fn from(e: ModularError) -> Self {
        let code = match &e {
            ModularError::HeckeMismatch(_) => 1,
            ModularError::Neron(NeronError::RestrictionError)
            | ModularError::Neron(NeronError::Abelian(_)) => 1,
            _ => 2,
        };
        CliError { code, msg: e.to_string() }
    }
}

impl From<SupersingularError> for CliError {
    fn from(e: SupersingularError) -> Self {
        match &e {
            SupersingularError::UnsupportedEll(l) => input_err(format!("unsupported ell: {l}")),
            SupersingularError::BadPrime(_)
            | SupersingularError::NotCoprime(_, _)
            | SupersingularError::SingularCurve => input_err(e.to_string()),
            _ => internal_err(e.to_string()),
        }
    }
}

impl From<NeronError> for CliError {
    fn from(e: NeronError) -> Self {
        match &e {
            NeronError::RestrictionError | NeronError::Abelian(_) => internal_err(e.to_string()),
            _ => input_err(e.to_string()),
        }
    }
}

fn mat_rows(m: &IntMatrix) -> Vec<Vec<i128>> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| i128::try_from(&m[(i, j)]).expect("entry fits i128")).collect())
        .collect()
}

fn print_matrix(m: &IntMatrix, indent: &str) {
    for row in mat_rows(m) {
        let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        println!("{indent}[{}]", cells.join(", "));
    }
}

/// Nonzero diagonal of the Smith normal form.
fn snf_diagonal(m: &IntMatrix) -> Vec<i128> {
    smith_normal_form(m)
        .diagonal()
        .iter()
        .filter(|d| !d.is_zero())
        .map(|d| i128::try_from(d).expect("fits i128"))
        .collect()
}

fn select_incidence(
    full: &ModulusIncidence,
    selector: &str,
    default_labels: &[&str],
) -> Result<ModulusIncidence, CliError> {
    let wanted: Vec<String> = match selector {
        "full" => full.points.iter().map(|z| z.label.clone()).collect(),
        "infty0" => default_labels.iter().map(|s| s.to_string()).collect(),
        list => list.split(',').map(|s| s.trim().to_string()).collect(),
    };
    if wanted.is_empty() {
        return Err(input_err("empty modulus selection"));
    }
    let mut rows = Vec::new();
    let mut points = Vec::new();
    for label in &wanted {
        let idx = full
            .points
            .iter()
            .position(|z| z.label == *label)
            .ok_or_else(|| input_err(format!("unknown modulus point `{label}`")))?;
        if points.iter().any(|z: &neron::neron::ModulusPointData| z.label == *label) {
            return Err(input_err(format!("duplicate modulus point `{label}`")));
        }
        points.push(full.points[idx].clone());
        rows.push(idx);
    }
    let h = IntMatrix::from_fn(rows.len(), full.h.cols(), |i, j| full.h[(rows[i], j)].clone());
    Ok(ModulusIncidence { points, h })
}

/// Shared Φ(J_𝔪) / Φ(J) / Φ(T_𝔪) report for a validated fibre + modulus.
fn report_component_groups(
    fibre: &SpecialFibre,
    incidence: Option<&ModulusIncidence>,
    header: serde_json::Map<String, serde_json::Value>,
    format: Format,
) -> Result<(), CliError> {
    let (phi_j, _) = component_group_j(fibre)?;
    let mut out = header;
    out.insert("phi_j".into(), json!(phi_j.to_string()));

    let mut table_lines = vec![format!("Phi(J) = {phi_j}")];
    if let Some(inc) = incidence {
        let jm = component_group_jm(fibre, inc)?;
        let phi_t = tori_component_group(
            &inc.points.iter().map(|z| z.e).collect::<Vec<_>>(),
        );
        let quotient = jm.quotient_by_torus();
        let image_snf = snf_diagonal(&jm.torus_images);
        out.insert("modulus".into(), json!(inc.points.iter().map(|z| json!({"label": z.label, "e": z.e})).collect::<Vec<_>>()));
        out.insert("phi_jm".into(), json!(jm.group.to_string()));
        out.insert("phi_tm".into(), json!(phi_t.to_string()));
        out.insert("torus_images".into(), json!(mat_rows(&jm.torus_images)));
        out.insert("image_snf".into(), json!(image_snf));
        out.insert("phi_jm_mod_torus".into(), json!(quotient.to_string()));

        let labels: Vec<String> = inc.points.iter().map(|z| z.label.clone()).collect();
        table_lines.insert(0, format!("modulus points: {}", labels.join(", ")));
        table_lines.insert(1, format!("Phi(Jm) = {}", jm.group));
        table_lines.insert(2, format!("Phi(Tm) = {phi_t}"));
        table_lines.push("torus generator images (columns = V_i):".into());
        table_lines.push("__MATRIX__".into());
        let snf_str: Vec<String> = image_snf.iter().map(|d| d.to_string()).collect();
        table_lines.push(format!("image SNF: ({})", snf_str.join(", ")));
        table_lines.push(format!("Phi(Jm)/torus = {quotient}"));

        if format == Format::Table {
            for line in &table_lines {
                if line == "__MATRIX__" {
                    print_matrix(&jm.torus_images, "  ");
                } else {
                    println!("{line}");
                }
            }
            return Ok(());
        }
    } else if format == Format::Table {
        for line in &table_lines {
            println!("{line}");
        }
        return Ok(());
    }
    println!("{}", serde_json::Value::Object(out));
    Ok(())
}

fn cmd_x0pm(p: u64, m: u64, modulus: &str, format: Format) -> Result<(), CliError> {
    let counts = supersingular::counts(p, m)?;
    let (fibre, incidence, _) = modular::x0pm_fibre(p, m, counts)?;
    let inc = select_incidence(&incidence, modulus, &["infty", "0"])?;
    let mut header = serde_json::Map::new();
    header.insert("curve".into(), json!(format!("X0({})", p * m)));
    header.insert("p".into(), json!(p));
    header.insert("M".into(), json!(m));
    header.insert("counts".into(), json!([counts.0, counts.1, counts.2]));
    if format == Format::Table {
        println!("X0({}) at p = {}, M = {}", p * m, p, m);
        println!("counts (n, e2, e3) = ({}, {}, {})", counts.0, counts.1, counts.2);
    }
    report_component_groups(&fibre, Some(&inc), header, format)
}

fn cmd_x0p2(p: u64, modulus: &str, format: Format) -> Result<(), CliError> {
    let (fibre, full, infty0) = modular::x0p2_fibre(p)?;
    let inc = match modulus {
        "infty0" => infty0,
        other => select_incidence(&full, other, &["z1", "zp2"])?,
    };
    let mut header = serde_json::Map::new();
    header.insert("curve".into(), json!(format!("X0({})", p * p)));
    header.insert("p".into(), json!(p));
    if format == Format::Table {
        println!("X0({}) at p = {}", p * p, p);
    }
    report_component_groups(&fibre, Some(&inc), header, format)
}

fn cmd_fibre(
    input: &PathBuf,
    modulus_input: Option<&PathBuf>,
    format: Format,
) -> Result<(), CliError> {
    let text = std::fs::read_to_string(input)
        .map_err(|e| input_err(format!("cannot read {}: {e}", input.display())))?;
    let fibre_json: SpecialFibreJson =
        serde_json::from_str(&text).map_err(|e| input_err(format!("bad fibre JSON: {e}")))?;
    let fibre = fibre_json.into_fibre().map_err(input_err)?;
    let incidence = match modulus_input {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| input_err(format!("cannot read {}: {e}", path.display())))?;
            let inc_json: ModulusIncidenceJson = serde_json::from_str(&text)
                .map_err(|e| input_err(format!("bad modulus JSON: {e}")))?;
            Some(inc_json.into_incidence().map_err(input_err)?)
        }
        None => None,
    };
    let report = validate_fibre(&fibre, incidence.as_ref());
    if !report.is_empty() {
        return Err(input_err(format!("invalid fibre:\n  {}", report.join("\n  "))));
    }
    let mut header = serde_json::Map::new();
    header.insert("p".into(), json!(fibre.p));
    header.insert(
        "components".into(),
        json!(fibre.components.iter().map(|c| c.label.clone()).collect::<Vec<_>>()),
    );
    report_component_groups(&fibre, incidence.as_ref(), header, format)
}

fn cmd_char(p: u64, m: u64, hecke: Option<u64>, format: Format) -> Result<(), CliError> {
    let counts = supersingular::counts(p, m)?;
    let (_, _, graph) = modular::x0pm_fibre(p, m, counts)?;
    let (rank, basis, labels) = neron::neron::character_group_jm(&graph);
    let hecke_matrix = match hecke {
        Some(ell) => {
            if m != 1 {
                return Err(input_err("--hecke requires M = 1"));
            }
            Some(supersingular::hecke_on_char_x0p(p, ell)?)
        }
        None => None,
    };
    match format {
        Format::Table => {
            println!("X0({}) character group with modulus (infty) + (0)", p * m);
            println!("rank = {rank}");
            println!("cycle basis (rows = edges, columns = basis cycles):");
            for (i, label) in labels.iter().enumerate() {
                let row: Vec<String> =
                    (0..basis.cols()).map(|j| basis[(i, j)].to_string()).collect();
                println!("  {label}: [{}]", row.join(", "));
            }
            if let Some(t) = &hecke_matrix {
                println!("tT_{} in the gamma basis:", hecke.unwrap());
                print_matrix(t, "  ");
            }
        }
        Format::Json => {
            let mut out = serde_json::Map::new();
            out.insert("curve".into(), json!(format!("X0({})", p * m)));
            out.insert("rank".into(), json!(rank));
            out.insert("edge_labels".into(), json!(labels));
            out.insert("basis".into(), json!(mat_rows(&basis)));
            if let Some(t) = &hecke_matrix {
                out.insert("hecke_ell".into(), json!(hecke.unwrap()));
                out.insert("hecke_matrix".into(), json!(mat_rows(t)));
            }
            println!("{}", serde_json::Value::Object(out));
        }
    }
    Ok(())
}

fn cusp_name(c: &GeometricCusp) -> String {
    format!("(d={}, c={}, m={})", c.d, c.c, c.m())
}

fn cmd_cusps(n: u64, hecke: Option<u64>, format: Format) -> Result<(), CliError> {
    if n == 0 {
        return Err(input_err("N must be >= 1"));
    }
    let orbits = modular::cusps(n);
    let flat: Vec<GeometricCusp> = orbits.iter().flatten().copied().collect();
    let matrix = match hecke {
        Some(ell) => {
            let mut t = IntMatrix::zero(flat.len(), flat.len());
            for (j, cusp) in flat.iter().enumerate() {
                let image =
                    modular::hecke_transpose_cusps(&CuspidalDivisor::term(n, *cusp, 1), ell)?;
                for (target, coeff) in image.terms() {
                    let i = flat.iter().position(|x| x == target).expect("cusp in list");
                    t[(i, j)] = BigInt::from(*coeff);
                }
            }
            Some(t)
        }
        None => None,
    };
    match format {
        Format::Table => {
            println!("X0({n}): {} cusps in {} closed points", flat.len(), orbits.len());
            for cusp in &flat {
                println!("  {}", cusp_name(cusp));
            }
            if let Some(t) = &matrix {
                println!("tT_{} on Z[cusps] (columns = images of basis cusps):", hecke.unwrap());
                print_matrix(t, "  ");
            }
        }
        Format::Json => {
            let mut out = serde_json::Map::new();
            out.insert("N".into(), json!(n));
            out.insert(
                "cusps".into(),
                json!(flat.iter().map(|c| json!({"d": c.d, "c": c.c, "m": c.m()})).collect::<Vec<_>>()),
            );
            if let Some(t) = &matrix {
                out.insert("hecke_ell".into(), json!(hecke.unwrap()));
                out.insert("hecke_matrix".into(), json!(mat_rows(t)));
            }
            println!("{}", serde_json::Value::Object(out));
        }
    }
    Ok(())
}

fn cmd_brandt(p: u64, ell: u64, format: Format) -> Result<(), CliError> {
    let ss = supersingular::supersingular_js(p)?;
    let b = supersingular::brandt(p, ell)?;
    match format {
        Format::Table => {
            println!("B({ell}) at p = {p}, h = {}", ss.h());
            for (j, w) in ss.points.iter().zip(&ss.weights) {
                println!("  j = {j}, w = {w}");
            }
            print_matrix(&b, "  ");
        }
        Format::Json => {
            let mut out = serde_json::Map::new();
            out.insert("p".into(), json!(p));
            out.insert("ell".into(), json!(ell));
            out.insert(
                "j_invariants".into(),
                json!(ss.points.iter().map(|j| json!([j.u, j.v])).collect::<Vec<_>>()),
            );
            out.insert("weights".into(), json!(ss.weights));
            out.insert("matrix".into(), json!(mat_rows(&b)));
            println!("{}", serde_json::Value::Object(out));
        }
    }
    Ok(())
}

fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn cmd_sweep(pmax: u64, format: Format) -> Result<(), CliError> {
    let ms = [1u64, 2, 3, 5, 6, 7, 10];
    let mut rows = Vec::new();
    for p in (5..=pmax).filter(|&p| is_prime_u64(p)) {
        for &m in &ms {
            if m % p == 0 {
                continue;
            }
            let counts = supersingular::counts(p, m)?;
            let jm = modular::x0pm_component_group(p, m, counts)?;
            let quotient = jm.quotient_by_torus();
            rows.push((p, m, counts, jm.group.clone(), quotient));
        }
    }
    match format {
        Format::Table => {
            println!("{:>4} {:>3} {:>5} {:>3} {:>3}  {:<24} {}", "p", "M", "n", "e2", "e3", "Phi(Jm)", "Phi(J)");
            for (p, m, (n, e2, e3), g, q) in &rows {
                println!("{p:>4} {m:>3} {n:>5} {e2:>3} {e3:>3}  {:<24} {}", g.to_string(), q);
            }
        }
        Format::Json => {
            let objs: Vec<_> = rows
                .iter()
                .map(|(p, m, (n, e2, e3), g, q)| {
                    json!({"p": p, "M": m, "counts": [n, e2, e3],
                           "phi_jm": g.to_string(), "phi_j": q.to_string()})
                })
                .collect();
            println!("{}", serde_json::Value::Array(objs));
        }
    }
    Ok(())
}

fn cmd_selftest() -> Result<(), CliError> {
    let step = |name: &str, res: Result<(), CliError>| -> Result<(), CliError> {
        match res {
            Ok(()) => {
                println!("ok - {name}");
                Ok(())
            }
            Err(e) => {
                println!("FAIL - {name}: {}", e.msg);
                Err(internal_err(format!("selftest `{name}` failed")))
            }
        }
    };

    step("point-count oracle (p <= 50)", {
        (|| {
            for p in (5u64..=50).filter(|&p| is_prime_u64(p)) {
                supersingular::point_count_check(p)?;
            }
            Ok(())
        })()
    })?;

    step("modular polynomials (symmetry, Kronecker)", {
        (|| {
            for ell in [2u64, 3, 5, 7] {
                supersingular::modular_polynomial(ell)?;
            }
            Ok(())
        })()
    })?;

    step("Brandt vs Vélu (ell = 2, 3)", {
        (|| {
            for p in [11u64, 13, 23] {
                for ell in [2u64, 3] {
                    if supersingular::brandt_velu(p, ell)? != supersingular::brandt(p, ell)? {
                        return Err(internal_err(format!("mismatch at p={p}, ell={ell}")));
                    }
                }
            }
            Ok(())
        })()
    })?;

    step("Brandt involution and commutativity", {
        (|| {
            for p in [11u64, 23, 37] {
                let bp = supersingular::brandt(p, p)?;
                if bp.mul(&bp) != IntMatrix::identity(bp.rows()) {
                    return Err(internal_err(format!("B({p})² != I")));
                }
                let b2 = supersingular::brandt(p, 2)?;
                let b3 = supersingular::brandt(p, 3)?;
                if b2.mul(&b3) != b3.mul(&b2) {
                    return Err(internal_err(format!("B(2)B(3) != B(3)B(2) at p={p}")));
                }
            }
            Ok(())
        })()
    })?;

    step("graph-side T_p = -W_p vs tB(p)", {
        (|| {
            for p in [11u64, 23, 37] {
                supersingular::hecke_on_char_x0p(p, p)?;
            }
            Ok(())
        })()
    })?;

    step("Hecke on cusps (tT_2 D = 3D, tT_p D = D)", {
        (|| {
            let d = CuspidalDivisor::standard_d(11);
            if modular::hecke_transpose_cusps(&d, 2)? != d.scaled(3) {
                return Err(internal_err("tT_2 D != 3D on X0(11)"));
            }
            for p in [11u64, 13] {
                let d = CuspidalDivisor::standard_d(p);
                if modular::hecke_transpose_cusps(&d, p)? != d {
                    return Err(internal_err(format!("tT_p D != D on X0({p})")));
                }
            }
            Ok(())
        })()
    })?;

    step("closed forms and duality on X0(p)", {
        (|| {
            for p in [11u64, 37] {
                let counts = supersingular::counts(p, 1)?;
                let jm = modular::x0pm_component_group(p, 1, counts)?;
                let cf = modular::closed_form_x0pm(p, 1, counts)?;
                if jm.group != cf.group {
                    return Err(internal_err(format!("closed form mismatch at p={p}")));
                }
                let phi_j = modular::closed_form_phij(p, 1, counts)?;
                if jm.quotient_by_torus() != phi_j {
                    return Err(internal_err(format!("Phi(J) mismatch at p={p}")));
                }
                let (fibre, inc, _) = modular::x0pm_fibre(p, 1, counts)?;
                if neron::neron::duality_check(&fibre, &inc)? != jm.group {
                    return Err(internal_err(format!("duality mismatch at p={p}")));
                }
            }
            Ok(())
        })()
    })?;

    step("X0(p^2) structure", {
        (|| {
            for p in [5u64, 13] {
                let cf = modular::x0p2_closed_form(p)?;
                let expected = FGAbGroup { invariant_factors: vec![], free_rank: 2 };
                if cf.group != expected {
                    return Err(internal_err(format!("Phi(Jm) != Z^2 at p={p}")));
                }
            }
            Ok(())
        })()
    })?;

    println!("all self-tests passed");
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::X0pM { p, m, modulus, format } => cmd_x0pm(p, m, &modulus, format),
        Command::X0p2 { p, modulus, format } => cmd_x0p2(p, &modulus, format),
        Command::Fibre { input, modulus_input, format } => {
            cmd_fibre(&input, modulus_input.as_ref(), format)
        }
        Command::Char { p, m, hecke, format } => cmd_char(p, m, hecke, format),
        Command::Cusps { n, hecke, format } => cmd_cusps(n, hecke, format),
        Command::Brandt { p, ell, format } => cmd_brandt(p, ell, format),
        Command::Sweep { pmax, format } => cmd_sweep(pmax, format),
        Command::Selftest => cmd_selftest(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.msg);
            ExitCode::from(e.code)
        }
    }
}
