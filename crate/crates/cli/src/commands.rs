use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use tqft::angles::{balanced_space, default_targets, maximize_volume, solve_shape};
use tqft::mesh::codec::{format_rational, parse, serialize, CodecError, TriFile};
use tqft::mesh::{homology_h2_truncated, vertex_links, FaceSlot, MeshError, Triangulation};
use tqft::pachner::{apply_23, apply_32, MoveResult};
use tqft::qdilog::{QDilog, QDilogParams};
use tqft::state::{assemble, chi_41, chi_52, fit_volume_rate, ChiConfig, StateConfig};
use tqft::wgz::{g_section, section_grid, PsiConfig, PsiFamily, PsiParams, Truncation};
use tqft::{ExactShape, Rational, Shape};

use crate::config::{Format, RunConfig};
use crate::error::{exit, CliError};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Writes to `--out` when given, stdout otherwise.
pub fn emit(cfg: &RunConfig, text: &str) -> Result<(), CliError> {
    match &cfg.out {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn json_text(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn from_mesh(e: MeshError) -> CliError {
    CodecError::Semantic(e).into()
}

pub fn load(path: &Path) -> Result<TriFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::new(exit::IO, format!("{}: {e}", path.display())))?;
    parse(&text).map_err(|e| {
        let err: CliError = e.into();
        CliError::new(err.code, format!("{}: {}", path.display(), err.message))
    })
}

/// The file's angles, or the max-min-slack positive shape when it has none.
fn exact_shape(file: &TriFile) -> Result<ExactShape, CliError> {
    match ExactShape::from_file(file) {
        Some(s) => Ok(s?),
        None if file.angles.is_empty() => {
            let tri = &file.triangulation;
            Ok(solve_shape(tri, &default_targets(tri))?)
        }
        None => Err(CliError::new(exit::SEMANTIC, "angles are given for some tetrahedra but not all")),
    }
}

/// The file's angles, or the volume maximizer when it has none.
fn float_shape(file: &TriFile) -> Result<Shape, CliError> {
    match ExactShape::from_file(file) {
        Some(s) => Ok(s?.to_f64()),
        None if file.angles.is_empty() => Ok(maximize_volume(&file.triangulation)?.argmax),
        None => Err(CliError::new(exit::SEMANTIC, "angles are given for some tetrahedra but not all")),
    }
}

#[derive(Serialize)]
struct Boundary {
    positive: usize,
    negative: usize,
}

#[derive(Serialize)]
struct InfoReport {
    tets: usize,
    edges: usize,
    vertices: usize,
    valences: Vec<usize>,
    gamma: Vec<usize>,
    closed: bool,
    consistently_oriented: bool,
    boundary: Boundary,
    /// Common surface type of the vertex links, or "mixed".
    link: String,
    links: Vec<String>,
    h2_rank: usize,
    h2_torsion: Vec<String>,
    positive_shape: bool,
    admissible: bool,
    balanced_dim: Option<usize>,
}

pub fn info(cfg: &RunConfig, path: &Path) -> Result<(), CliError> {
    let file = load(path)?;
    let tri = &file.triangulation;
    let links = vertex_links(tri).map_err(from_mesh)?;
    let kinds: Vec<String> = links.links.iter().map(|l| l.kind()).collect();
    let link = match kinds.first() {
        Some(k) if kinds.iter().all(|x| x == k) => k.clone(),
        Some(_) => "mixed".into(),
        None => "none".into(),
    };
    let h2 = homology_h2_truncated(tri);
    let targets = default_targets(tri);
    let positive_shape = solve_shape(tri, &targets).is_ok();
    let (pos, neg) = tri.boundary_split();
    let report = InfoReport {
        tets: tri.num_tets(),
        edges: tri.num_edges(),
        vertices: tri.cells().vertices.len(),
        valences: tri.cells().valences(),
        gamma: tri.gamma().iter().copied().collect(),
        closed: tri.is_closed(),
        consistently_oriented: tri.is_consistently_oriented(),
        boundary: Boundary { positive: pos.len(), negative: neg.len() },
        link,
        links: kinds,
        h2_rank: h2.rank,
        h2_torsion: h2.torsion.clone(),
        positive_shape,
        admissible: tri.is_closed()
            && tri.is_consistently_oriented()
            && h2.is_admissible_topology
            && links.all_tori()
            && positive_shape,
        balanced_dim: balanced_space(tri, &targets).ok().map(|s| s.dim()),
    };
    require_json(cfg)?;
    emit(cfg, &json_text(&report))
}

fn require_json(cfg: &RunConfig) -> Result<(), CliError> {
    match cfg.format_or(Format::Json) {
        Format::Json => Ok(()),
        Format::Csv => Err(CliError::usage("this output is JSON only")),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Function {
    Chi41,
    Chi52,
    Partition,
}

impl Function {
    fn name(self) -> &'static str {
        match self {
            Function::Chi41 => "chi41",
            Function::Chi52 => "chi52",
            Function::Partition => "partition",
        }
    }
}

/// Picks χ₄₁ for two-tetrahedron complexes and χ₅₂ for three-tetrahedron ones.
fn infer_function(tri: &Triangulation) -> Result<Function, CliError> {
    match tri.num_tets() {
        2 => Ok(Function::Chi41),
        3 => Ok(Function::Chi52),
        n => Err(CliError::usage(format!("no default function for a {n}-tetrahedron complex; pass --of"))),
    }
}

fn chi_config(cfg: &RunConfig) -> ChiConfig {
    let mut c = ChiConfig::default();
    if let Some(t) = cfg.tol {
        c.quad.rel_tol = t;
    }
    c
}

fn state_config(cfg: &RunConfig) -> StateConfig {
    let mut c = StateConfig::default();
    if let Some(t) = cfg.tol {
        c.rel_tol = t;
    }
    c
}

fn evaluate(
    cfg: &RunConfig,
    f: Function,
    params: QDilogParams,
    x: f64,
    lambda: f64,
    file: Option<&TriFile>,
) -> Result<Complex64, CliError> {
    let q = QDilog::new(params);
    match f {
        Function::Chi41 => Ok(chi_41(&q, x, &chi_config(cfg))?.value),
        Function::Chi52 => Ok(chi_52(&q, Complex64::new(x, 0.0), lambda, &chi_config(cfg))?.value),
        Function::Partition => {
            let file = file.ok_or_else(|| CliError::usage("partition needs a triangulation file"))?;
            let shape = float_shape(file)?;
            Ok(assemble(&file.triangulation, &shape, &params)?.evaluate(&q, &state_config(cfg))?.z)
        }
    }
}

#[derive(Serialize)]
struct SweepRow {
    hbar: f64,
    re: f64,
    im: f64,
    abs: f64,
    log_abs: f64,
    /// −2πħ log|J|, which tends to the volume as ħ → 0.
    rate: f64,
}

fn sweep_rows(cfg: &RunConfig, f: Function, x: f64, lambda: f64, file: Option<&TriFile>) -> Result<Vec<SweepRow>, CliError> {
    cfg.grid
        .iter()
        .map(|&h| {
            let params = tqft::qdilog::params_from_hbar(h)?;
            let v = evaluate(cfg, f, params, x, lambda, file)?;
            let abs = v.norm();
            Ok(SweepRow { hbar: h, re: v.re, im: v.im, abs, log_abs: abs.ln(), rate: -2.0 * PI * h * abs.ln() })
        })
        .collect()
}

/// Shortest round-trip form, in exponent notation away from [1e-4, 1e15).
fn num(x: f64) -> String {
    if x != 0.0 && x.is_finite() && !(1e-4..1e15).contains(&x.abs()) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

pub const SWEEP_HEADER: &str = "hbar,re,im,abs,log_abs,rate";

fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let cols = [r.hbar, r.re, r.im, r.abs, r.log_abs, r.rate].map(num);
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum What {
    Volume,
    Partition,
    Chi41,
    Chi52,
    Sweep,
    Volfit,
}

pub struct ComputeArgs<'a> {
    pub what: What,
    pub path: Option<&'a Path>,
    /// Function swept by `sweep` and `volfit`; inferred when absent.
    pub of: Option<Function>,
    pub x: f64,
    pub lambda: f64,
}

pub fn compute(cfg: &RunConfig, args: ComputeArgs<'_>) -> Result<(), CliError> {
    let file = args.path.map(load).transpose()?;
    let need_file = || file.as_ref().ok_or_else(|| CliError::usage("this computation needs a triangulation file"));
    match args.what {
        What::Volume => {
            require_json(cfg)?;
            let r = maximize_volume(&need_file()?.triangulation)?;
            emit(cfg, &json_text(&r))
        }
        What::Partition => {
            require_json(cfg)?;
            let params = cfg.params()?;
            let file = need_file()?;
            let shape = float_shape(file)?;
            let q = QDilog::new(params);
            let v = assemble(&file.triangulation, &shape, &params)?.evaluate(&q, &state_config(cfg))?;
            let mut out = serde_json::to_value(&v).expect("serializable");
            out["b"] = json!(params.b);
            emit(cfg, &json_text(&out))
        }
        What::Chi41 | What::Chi52 => {
            require_json(cfg)?;
            let params = cfg.params()?;
            let q = QDilog::new(params);
            let v = if args.what == What::Chi41 {
                chi_41(&q, args.x, &chi_config(cfg))?
            } else {
                chi_52(&q, Complex64::new(args.x, 0.0), args.lambda, &chi_config(cfg))?
            };
            let mut out = serde_json::to_value(&v).expect("serializable");
            out["b"] = json!(params.b);
            out["hbar"] = json!(params.hbar);
            out["x"] = json!(args.x);
            emit(cfg, &json_text(&out))
        }
        What::Sweep => {
            let f = match args.of {
                Some(f) => f,
                None => infer_function(&need_file()?.triangulation)?,
            };
            let rows = sweep_rows(cfg, f, args.x, args.lambda, file.as_ref())?;
            match cfg.format_or(Format::Csv) {
                Format::Csv => emit(cfg, &sweep_csv(&rows)),
                Format::Json => emit(cfg, &json_text(&rows)),
            }
        }
        What::Volfit => {
            require_json(cfg)?;
            let file = need_file()?;
            let f = match args.of {
                Some(f) => f,
                None => infer_function(&file.triangulation)?,
            };
            let target = maximize_volume(&file.triangulation)?.volume;
            let rows = sweep_rows(cfg, f, args.x, args.lambda, Some(file))?;
            let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.hbar, r.abs)).collect();
            let fit = fit_volume_rate(&pairs)?;
            let out = json!({
                "function": f.name(),
                "volume": fit.volume,
                "target_volume": target,
                "deviation": ((fit.volume - target) / target).abs(),
                "fit": fit,
            });
            emit(cfg, &json_text(&out))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Move {
    ThreeTwo { edge: usize },
    TwoThree { tet: usize, face: u8 },
}

fn rationals(v: &[Rational; 3]) -> Vec<String> {
    v.iter().map(format_rational).collect()
}

fn diff_json(name: &str, r: &MoveResult<Rational>) -> Value {
    let angle_map: Vec<Value> = r
        .new_tets
        .iter()
        .map(|&t| json!({ "tet": t, "angles": rationals(&r.shape.angles[t]) }))
        .collect();
    json!({
        "move": name,
        "removed_edges": r.removed_edges,
        "added_edges": r.added_edges,
        "edge_map": r.edge_map,
        "angle_map": angle_map,
    })
}

/// Applies a move; the new file goes to `--out` (the diff then goes to
/// stdout), or both go to stdout as one JSON object.
pub fn pachner(cfg: &RunConfig, path: &Path, mv: Move) -> Result<(), CliError> {
    let file = load(path)?;
    let shape = exact_shape(&file)?;
    let tri = &file.triangulation;
    let (name, result) = match mv {
        Move::ThreeTwo { edge } => {
            if edge >= tri.num_edges() {
                return Err(CliError::new(exit::INVALID_SITE, format!("edge {edge} does not exist")));
            }
            ("3-2", apply_32(tri, &shape, edge)?)
        }
        Move::TwoThree { tet, face } => ("2-3", apply_23(tri, &shape, FaceSlot::new(tet, face))?),
    };
    let mut new_file = TriFile::new(result.triangulation.clone());
    new_file.angles = result.shape.angles.iter().cloned().enumerate().collect();
    let text = serialize(&new_file);
    let diff = diff_json(name, &result);
    match &cfg.out {
        Some(p) => {
            std::fs::write(p, text)?;
            std::io::stdout().write_all(json_text(&diff).as_bytes())?;
        }
        None => {
            let out = json!({ "triangulation": text, "diff": diff });
            std::io::stdout().write_all(json_text(&out).as_bytes())?;
        }
    }
    Ok(())
}

fn parse_complex(s: &str) -> Result<Complex64, CliError> {
    s.replace(' ', "").parse().map_err(|_| CliError::usage(format!("cannot read `{s}` as a complex number")))
}

/// Φ_b at one point, or the largest residuals of the functional equations
/// and of unitarity over random sample points.
pub fn qdilog(cfg: &RunConfig, z: Option<&str>, samples: Option<usize>) -> Result<(), CliError> {
    require_json(cfg)?;
    let params = cfg.params()?;
    let q = QDilog::new(params);
    if let Some(z) = z {
        let v = q.phi(parse_complex(z)?)?;
        return emit(cfg, &json_text(&json!({ "re": v.re, "im": v.im })));
    }
    let n = samples.ok_or_else(|| CliError::usage("give --z or --samples"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let h = params.h;
    let (mut fe, mut fe_inv, mut unit) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..n {
        let z = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-0.4 * h..0.4 * h));
        for (bb, acc) in [(params.b, &mut fe), (1.0 / params.b, &mut fe_inv)] {
            let lower = q.phi(z - 0.5 * I * bb)?;
            let upper = q.phi(z + 0.5 * I * bb)?;
            let r = (lower - (1.0 + (2.0 * PI * bb * z).exp()) * upper).norm() / lower.norm();
            *acc = acc.max(r);
        }
        let x = rng.gen_range(-4.0..4.0);
        unit = unit.max((q.phi(Complex64::new(x, 0.0))?.norm() - 1.0).abs());
    }
    let out = json!({
        "b": params.b,
        "samples": n,
        "seed": cfg.seed,
        "functional_equation_b": fe,
        "functional_equation_inv_b": fe_inv,
        "unitarity": unit,
    });
    emit(cfg, &json_text(&out))
}

/// |g_{a,c}| on the n × n grid of [0,1)².
pub fn wgz_grid(cfg: &RunConfig, a: f64, c: f64, n: usize, order: usize) -> Result<(), CliError> {
    let params = cfg.params()?;
    let fam = PsiFamily::new(PsiParams::new(a, c, params.b)?, &PsiConfig::default())?;
    let g = g_section(&fam, &Truncation { order, tolerance: cfg.tol.unwrap_or(1e-10) })?;
    let grid = section_grid(&g, n);
    match cfg.format_or(Format::Csv) {
        Format::Csv => {
            let mut out = String::from("x,y,abs\n");
            for (x, y, v) in grid {
                out.push_str(&format!("{},{},{}\n", num(x), num(y), num(v)));
            }
            emit(cfg, &out)
        }
        Format::Json => {
            let rows: Vec<Value> = grid.into_iter().map(|(x, y, v)| json!({ "x": x, "y": y, "abs": v })).collect();
            emit(cfg, &json_text(&rows))
        }
    }
}
