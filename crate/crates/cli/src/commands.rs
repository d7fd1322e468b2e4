use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use mzkit::diagnostics::{
    carleson_ratio, density_report, diagnose, separation_constant, CarlesonResult, DiagnoseOptions,
    DiscreteMeasure, PointFamily, VolumeReference,
};
use mzkit::generators::{generate_family, FamilyKind, GeneratorParams};
use mzkit::geometry::{interior_grid, Metric, MetricBall, Region};
use mzkit::localized::{
    decay_profile, diagonal_sandwich_violation, integral_estimate_check, LocalizedKernel,
};
use mzkit::measures::MeasureSpec;
use mzkit::polyspace::diagonal_estimate_ratio;
use mzkit::report::{fmt_f64, fmt_point, json_document, to_json_string, CsvTable, RunHeader};
use mzkit::scaling::{bessel_zero_distance_test, orthogonality_residual_search_with_cap, scaling_error};
use mzkit::transport::{interpolation_transport_gap, offdiag_second_moment, transport_csv, TransportRow};
use mzkit::{gauss_nodes_1d, BasisOptions, BasisPath, Measure, PolySpace, Precision};

use crate::klist::parse_klist;
use crate::{
    BasisArgs, BasisCmd, CliError, Command, DensityCmd, DiagCmd, FamilyCmd, Format, GenerateCmd,
    KernelCmd, LocalizedCmd, MeasureArgs, OutArgs, PathArg, ScalingCmd, ScalingMode, TransportCmd,
};

type CliResult<T> = Result<T, CliError>;

pub fn run(cmd: &Command) -> CliResult<()> {
    match cmd {
        Command::Basis(c) => basis(cmd, c),
        Command::Kernel(c) => kernel(cmd, c),
        Command::Diag(c) => diag(cmd, c),
        Command::Carleson(c) => carleson(cmd, c),
        Command::Separation(c) => separation(cmd, c),
        Command::Density(c) => density(cmd, c),
        Command::Localized(c) => localized(cmd, c),
        Command::Transport(c) => transport(cmd, c),
        Command::Scaling(c) => scaling(cmd, c),
        Command::Generate(c) => generate(cmd, c),
    }
}

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

fn klist(s: &str) -> CliResult<Vec<usize>> {
    parse_klist(s).map_err(CliError::Input)
}

fn measure(args: &MeasureArgs) -> CliResult<Measure> {
    let list = |s: &str, what: &str| -> CliResult<Vec<f64>> {
        s.split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| input(format!("--{what}: '{t}' is not a number")))
            })
            .collect()
    };
    let bounds = match &args.bounds {
        None => None,
        Some(s) => Some(
            s.split(',')
                .map(|pair| {
                    let (lo, hi) = pair
                        .split_once(':')
                        .ok_or_else(|| input(format!("--bounds: expected lo:hi, got '{pair}'")))?;
                    let v = list(&format!("{lo},{hi}"), "bounds")?;
                    Ok([v[0], v[1]])
                })
                .collect::<CliResult<Vec<[f64; 2]>>>()?,
        ),
    };
    let semiaxes = args.semiaxes.as_deref().map(|s| list(s, "semiaxes")).transpose()?;
    let spec = MeasureSpec {
        kind: args.kind.clone(),
        n: args.n,
        a: args.a,
        bounds,
        semiaxes,
    };
    Ok(Measure::try_from(spec)?)
}

fn precision(args: &BasisArgs) -> CliResult<Precision> {
    let raw = match &args.precision {
        Some(p) => p.clone(),
        None => match std::env::var("MZKIT_PRECISION") {
            Ok(v) if !v.trim().is_empty() => v,
            _ => return Ok(Precision::Double),
        },
    };
    raw.parse::<Precision>().map_err(|e| input(e.to_string()))
}

fn basis_options(args: &BasisArgs) -> CliResult<BasisOptions> {
    Ok(BasisOptions {
        precision: precision(args)?,
        path: match args.path {
            PathArg::Auto => BasisPath::Auto,
            PathArg::Monomial => BasisPath::Monomial,
            PathArg::Recurrence => BasisPath::Recurrence,
        },
        degree_cap: args.degree_cap,
    })
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn read_family(path: &Path) -> CliResult<PointFamily> {
    PointFamily::from_json(&read_text(path)?)
        .map_err(|e| input(format!("{}: {e}", path.display())))
}

fn read_points(path: &Path) -> CliResult<Vec<Vec<f64>>> {
    serde_json::from_str(&read_text(path)?)
        .map_err(|e| input(format!("{}: expected a JSON array of points: {e}", path.display())))
}

/// `euclid:c1,..,cn:r` or `rho:c1,..,cn:r`.
fn region(spec: &str, n: usize) -> CliResult<Region> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(input(format!("region '{spec}': expected kind:center:radius")));
    }
    let center: Vec<f64> = parts[1]
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| input(format!("region '{spec}': bad centre")))?;
    if center.len() != n {
        return Err(input(format!("region '{spec}': centre needs {n} coordinates")));
    }
    let radius: f64 = parts[2]
        .trim()
        .parse()
        .map_err(|_| input(format!("region '{spec}': bad radius")))?;
    match parts[0] {
        "euclid" => Ok(Region::euclidean(center, radius)),
        "rho" => Ok(Region::Metric(MetricBall::new(center, radius, Metric::RhoBall)?)),
        other => Err(input(format!("region kind '{other}' (expected euclid or rho)"))),
    }
}

fn header(cmd: &Command, opts: Option<&BasisOptions>, seeds: Vec<u64>, tolerances: Value) -> RunHeader {
    let mut config = serde_json::to_value(cmd).unwrap_or(Value::Null);
    if let (Some(o), Value::Object(map)) = (opts, &mut config) {
        map.insert("effective_precision".into(), json!(o.precision.to_string()));
    }
    RunHeader::new(cmd.name())
        .with_config(config)
        .with_seeds(seeds)
        .with_tolerances(tolerances)
}

fn format_of(out: &OutArgs, default: Format) -> Format {
    out.format.unwrap_or_else(|| match out.out.as_ref().and_then(|p| p.extension()) {
        Some(e) if e == "csv" => Format::Csv,
        Some(e) if e == "json" => Format::Json,
        _ => default,
    })
}

fn emit(out: Option<&PathBuf>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| input(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_report<T: Serialize>(
    out: &OutArgs,
    default: Format,
    header: &RunHeader,
    key: &str,
    body: &T,
    csv: impl FnOnce() -> CsvTable,
) -> CliResult<()> {
    let text = match format_of(out, default) {
        Format::Json => json_document(header, key, body),
        Format::Csv => csv().render(Some(header)),
    };
    emit(out.out.as_ref(), &text)
}

fn basis(cmd: &Command, c: &BasisCmd) -> CliResult<()> {
    let m = measure(&c.measure)?;
    let opts = basis_options(&c.basis)?;
    let ps = PolySpace::new(&m, c.k, opts)?;
    let defect = ps.orthonormality_defect()?;
    let h = header(
        cmd,
        Some(&opts),
        vec![],
        json!({
            "pivot_ratio": ps.pivot_ratio(),
            "orthonormality_defect": defect,
            "assembled_precision": ps.precision().to_string(),
            "assembled_path": ps.path(),
        }),
    );
    let head = to_json_string(&h).map_err(|e| input(e.to_string()))?;
    emit(c.out.as_ref(), &format!("# header: {}\n{}", head.trim_end(), ps.to_csv()))
}

#[derive(Serialize)]
struct KernelMatrix {
    k: usize,
    matrix: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct KernelReport {
    points: Vec<Vec<f64>>,
    diagonal: mzkit::polyspace::DiagonalTable,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    kernels: Vec<KernelMatrix>,
}

fn kernel(cmd: &Command, c: &KernelCmd) -> CliResult<()> {
    let m = measure(&c.measure)?;
    let opts = basis_options(&c.basis)?;
    let ks = klist(&c.k)?;
    let points = match &c.points {
        Some(p) => read_points(p)?,
        None => interior_grid(&m, c.grid),
    };
    let spaces = ks
        .iter()
        .map(|&k| PolySpace::new(&m, k, opts))
        .collect::<Result<Vec<_>, _>>()?;
    let diagonal = diagonal_estimate_ratio(&spaces, &points)?;
    let kernels = if c.matrix {
        spaces
            .iter()
            .map(|ps| KernelMatrix {
                k: ps.degree(),
                matrix: ps.kernel_matrix(&points, &points),
            })
            .collect()
    } else {
        Vec::new()
    };
    let h = header(cmd, Some(&opts), vec![], json!({}));
    let report = KernelReport {
        points,
        diagonal,
        kernels,
    };
    emit_report(&c.output, Format::Json, &h, "kernel", &report, || {
        let mut t = CsvTable::new(&["k", "x", "boundary_distance", "beta", "reference", "ratio"]);
        for r in &report.diagonal.rows {
            t.push(vec![
                r.k.to_string(),
                fmt_point(&r.x),
                fmt_f64(r.boundary_distance),
                fmt_f64(r.beta),
                fmt_f64(r.reference),
                fmt_f64(r.ratio),
            ]);
        }
        t
    })
}

fn reference(s: &str) -> CliResult<VolumeReference> {
    s.parse::<VolumeReference>().map_err(|e| input(e.to_string()))
}

fn diag(cmd: &Command, c: &DiagCmd) -> CliResult<()> {
    let m = measure(&c.measure)?;
    let fam = read_family(&c.family)?;
    let opts = DiagnoseOptions {
        basis: basis_options(&c.basis)?,
        reference: reference(&c.reference)?,
        net_budget: c.net_budget,
        regions: c.regions.iter().map(|r| region(r, m.n())).collect::<CliResult<_>>()?,
        carleson: !c.no_carleson,
    };
    let report = diagnose(&fam, &m, &opts)?;
    let h = header(
        cmd,
        Some(&opts.basis),
        vec![],
        json!({
            "frame_rank_tol": mzkit::diagnostics::RANK_TOL,
            "dual_eigmin": mzkit::diagnostics::DUAL_EIGMIN,
        }),
    );
    emit_report(&c.output, Format::Json, &h, "report", &report, || report.to_csv())
}

fn carleson(cmd: &Command, c: &FamilyCmd) -> CliResult<()> {
    let m = measure(&c.measure)?;
    let opts = basis_options(&c.basis)?;
    let fam = read_family(&c.family)?;
    fam.validate(&m)?;
    let reference = reference(&c.reference)?;
    let mut rows: Vec<CarlesonResult> = Vec::new();
    for level in &fam.levels {
        let ps = PolySpace::new(&m, level.k, opts)?;
        let mu = DiscreteMeasure::from_level(&ps, &level.points);
        rows.push(carleson_ratio(&mu, level.k, &m, reference, c.net_budget)?);
    }
    let h = header(cmd, Some(&opts), vec![], json!({}));
    emit_report(&c.output, Format::Json, &h, "carleson", &rows, || {
        let mut t = CsvTable::new(&["k", "sup_ratio", "witness", "net_size", "net_spacing", "ball_radius"]);
        for r in &rows {
            t.push(vec![
                r.k.to_string(),
                fmt_f64(r.sup_ratio),
                r.witness.as_deref().map_or(String::new(), fmt_point),
                r.net_size.to_string(),
                fmt_f64(r.net_spacing),
                fmt_f64(r.ball_radius),
            ]);
        }
        t
    })
}

#[derive(Serialize)]
struct SeparationRow {
    k: usize,
    count: usize,
    separation: Option<f64>,
}

fn separation(cmd: &Command, c: &FamilyCmd) -> CliResult<()> {
    let m = measure(&c.measure)?;
    let fam = read_family(&c.family)?;
    fam.validate(&m)?;
    let rows: Vec<SeparationRow> = fam
        .levels
        .iter()
        .map(|l| SeparationRow {
            k: l.k,
            count: l.points.len(),
            separation: separation_constant(&m, l.k, &l.points),
        })
        .collect();
    let h = header(cmd, None, vec![], json!({}));
    emit_report(&c.output, Format::Json, &h, "separation", &rows, || {
        let mut t = CsvTable::new(&["k", "count", "separation"]);
        for r in &rows {
            t.push(vec![
                r.k.to_string(),
                r.count.to_string(),
                r.separation.map_or(String::new(), fmt_f64),
            ]);
        }
        t
    })
}

fn density(cmd: &Command, c: &DensityCmd) -> CliResult<()> {
    let m = measure(&c.measure)?;
    let fam = read_family(&c.family)?;
    let regions: Vec<Region> = c.regions.iter().map(|r| region(r, m.n())).collect::<CliResult<_>>()?;
    let table = density_report(&fam, &m, &regions)?;
    let h = header(cmd, None, vec![], json!({}));
    emit_report(&c.output, Format::Json, &h, "density", &table, || table.to_csv())
}

#[derive(Serialize)]
struct LocalizedLevel {
    k: usize,
    normalization: f64,
    sandwich_violation: f64,
    decay_exponent: Option<f64>,
    decay_fit_range: Option<(f64, f64)>,
}

#[derive(Serialize)]
struct LocalizedReport {
    levels: Vec<LocalizedLevel>,
    integral: mzkit::localized::IntegralTable,
}

/// Decay fit range: `k rho` in `[2, 20]`, shortened to stay inside the ray.
fn decay_range(k: usize) -> Option<(f64, f64)> {
    let hi = (0.95 * k as f64 * std::f64::consts::FRAC_PI_2).min(20.0);
    (hi > 4.0).then_some((2.0, hi))
}

fn localized(cmd: &Command, c: &LocalizedCmd) -> CliResult<()> {
    let m = measure(&c.measure)?;
    let opts = basis_options(&c.basis)?;
    let ks = klist(&c.k)?;
    let grid = interior_grid(&m, c.grid);
    let mut levels = Vec::new();
    for &k in &ks {
        let lk = LocalizedKernel::new(&m, k, opts)?;
        let (mut exponent, mut range) = (None, None);
        if c.decay && m.n() == 1 {
            if let Some(r) = decay_range(k) {
                let p = decay_profile(&lk, &[0.0], &[1.0], c.decay_samples, r)?;
                exponent = Some(p.exponent);
                range = Some(r);
            }
        }
        levels.push(LocalizedLevel {
            k,
            normalization: lk.normalization(),
            sandwich_violation: diagonal_sandwich_violation(&lk, &grid),
            decay_exponent: exponent,
            decay_fit_range: range,
        });
    }
    let integral = integral_estimate_check(&m, &ks, c.alpha, c.gamma, &grid, opts)?;
    let h = header(cmd, Some(&opts), vec![], json!({ "integral_agreement": 0.01 }));
    let report = LocalizedReport { levels, integral };
    emit_report(&c.output, Format::Json, &h, "localized", &report, || report.integral.to_csv())
}

fn transport(cmd: &Command, c: &TransportCmd) -> CliResult<()> {
    let m = measure(&c.measure)?;
    let opts = basis_options(&c.basis)?;
    let ks = klist(&c.k)?;
    if c.quad_factor < 2 {
        return Err(input("--quad-factor must be at least 2"));
    }
    let fam = c.family.as_deref().map(read_family).transpose()?;
    if let Some(f) = &fam {
        f.validate(&m)?;
    }
    let a = match (&fam, m.ball_exponent()) {
        (None, Some(a)) if m.n() == 1 => a,
        (None, _) => return Err(input("without --family the measure must be the 1D ball")),
        (Some(_), _) => 0.0,
    };
    let mut rows = Vec::new();
    for &k in &ks {
        let ps = PolySpace::new(&m, k, opts)?;
        let points: Option<Vec<Vec<f64>>> = match &fam {
            Some(f) => f.level(k).map(|l| l.points.clone()),
            None => Some(gauss_nodes_1d(k + 1, a)?.nodes.into_iter().map(|x| vec![x]).collect()),
        };
        let gap = match points {
            Some(p) if !p.is_empty() => {
                Some(interpolation_transport_gap(&ps, &p, (c.quad_factor * k).max(1))?)
            }
            _ => None,
        };
        let moment = if c.no_moment {
            None
        } else {
            Some(k as f64 * offdiag_second_moment(&ps, 2 * k + 2)?)
        };
        rows.push(TransportRow {
            k,
            w1: gap.as_ref().map(|g| g.w1),
            mesh: gap.as_ref().map(|g| g.mesh),
            k_moment: moment,
        });
    }
    let h = header(cmd, Some(&opts), vec![], json!({ "mass_tol": mzkit::transport::MASS_TOL }));
    emit_report(&c.output, Format::Csv, &h, "transport", &rows, || transport_csv(&rows))
}

fn scaling(cmd: &Command, c: &ScalingCmd) -> CliResult<()> {
    let opts = basis_options(&c.basis)?;
    match c.mode {
        ScalingMode::Limit => {
            let m = Measure::ball(c.n, c.a)?;
            let spaces = klist(&c.k)?
                .into_iter()
                .map(|k| PolySpace::new(&m, k, opts))
                .collect::<Result<Vec<_>, _>>()?;
            let table = scaling_error(&spaces, c.radius, c.grid)?;
            let h = header(cmd, Some(&opts), vec![], json!({}));
            emit_report(&c.output, Format::Csv, &h, "scaling", &table, || table.to_csv())
        }
        ScalingMode::Zeros => {
            let path = c.points.as_deref().ok_or_else(|| input("--mode zeros needs --points"))?;
            let points = read_points(path)?;
            let nu = c.nu.unwrap_or(c.n as f64 / 2.0);
            let report = bessel_zero_distance_test(&points, nu, c.tol)?;
            let h = header(cmd, None, vec![], json!({ "tol": c.tol }));
            emit_report(&c.output, Format::Json, &h, "zeros", &report, || {
                let mut t = CsvTable::new(&["i", "j", "distance", "nearest_zero", "gap"]);
                for p in &report.pairs {
                    t.push(vec![
                        p.i.to_string(),
                        p.j.to_string(),
                        fmt_f64(p.distance),
                        p.nearest_zero.map_or(String::new(), fmt_f64),
                        fmt_f64(p.gap),
                    ]);
                }
                t
            })
        }
        ScalingMode::Search => {
            let ks = klist(&c.k)?;
            let [k] = ks[..] else {
                return Err(input("--mode search takes a single degree"));
            };
            let m = c.m.ok_or_else(|| input("--mode search needs --m"))?;
            let ledger =
                orthogonality_residual_search_with_cap(c.n, c.a, k, m, c.seed, c.restarts, c.iteration_cap)?;
            if !ledger.converged {
                eprintln!("warning: best restart hit the iteration cap; best-so-far reported");
            }
            let h = header(cmd, Some(&opts), vec![c.seed], json!({}));
            emit(c.output.out.as_ref(), &json_document(&h, "ledger", &ledger))
        }
    }
}

fn generate(cmd: &Command, c: &GenerateCmd) -> CliResult<()> {
    let kind: FamilyKind = c.kind.parse().map_err(|e: mzkit::Error| input(e.to_string()))?;
    let params = GeneratorParams {
        kind,
        n: c.n,
        a: c.a,
        ks: klist(&c.k)?,
        epsilon: c.epsilon,
        target: c.target,
        seed: c.seed,
    };
    let generated = generate_family(&params)?;
    if !generated.saturated.is_empty() {
        eprintln!(
            "warning: saturated before the target count at k = {:?}",
            generated.saturated
        );
    }
    let h = header(cmd, None, vec![c.seed], json!({}));
    let mut doc = serde_json::to_value(&generated.family).map_err(|e| input(e.to_string()))?;
    if let Value::Object(map) = &mut doc {
        map.insert("header".into(), serde_json::to_value(&h).map_err(|e| input(e.to_string()))?);
        map.insert("saturated".into(), json!(generated.saturated));
    }
    emit(c.out.as_ref(), &to_json_string(&doc).map_err(|e| input(e.to_string()))?)
}
