//! Problem definition and the line-oriented problem-file format.
//!
//! ```text
//! [mesh] 3 3 3 1.0 1.0 1.0
//! [bc] vacuum vacuum vacuum vacuum reflect reflect
//! [quadrature] 4
//! [material 0]
//! total 0 1.0
//! scatter 0 0 0.45        # into group 0 from group 0
//! [cells] fill 0
//! [source] group 0 1.0
//! [solver] tol=1e-6 max_iters=1000 block=upscatter sets=1
//! [mge] enabled=true weight=1 relax=2 vcycles=2 depth=auto sn=same
//! [eigen] enabled=false ktol=1e-6 k0=1 l2tol=1 linftol=0.01
//! ```
//!
//! Text after a section header on the same line is read as the section's
//! first content line.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::config::{EigenConfig, SolverConfig, SourceSpec};
use crate::error::{Error, Result};
use crate::material::{synth_upscatter_fixture, validate_material, MaterialCrossSections};
use crate::mesh::{BoundaryCondition, CartesianMesh};
use crate::quadrature::SUPPORTED_ORDERS;

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub mesh: CartesianMesh,
    pub materials: Vec<MaterialCrossSections>,
    pub source: SourceSpec,
    pub quadrature_order: usize,
    pub solver: SolverConfig,
    pub eigen: EigenConfig,
}

impl ProblemSpec {
    pub fn num_groups(&self) -> usize {
        self.materials.first().map_or(0, |m| m.num_groups())
    }

    /// Checks every invariant of the problem data.
    pub fn validate(&self) -> Result<()> {
        if self.materials.is_empty() {
            return Err(Error::InvalidProblem("no materials defined".into()));
        }
        let g = self.num_groups();
        if g == 0 {
            return Err(Error::InvalidProblem("materials have no groups".into()));
        }
        for (id, m) in self.materials.iter().enumerate() {
            if m.num_groups() != g {
                return Err(Error::InvalidProblem(format!(
                    "material {id} has {} groups, expected {g}",
                    m.num_groups()
                )));
            }
            if let Some(v) = validate_material(m).first() {
                return Err(Error::InvalidProblem(format!("material {id}: {v}")));
            }
        }
        self.mesh.validate(self.materials.len())?;
        if !SUPPORTED_ORDERS.contains(&self.quadrature_order) {
            return Err(Error::InvalidProblem(format!(
                "unsupported order S{}",
                self.quadrature_order
            )));
        }
        self.source.validate(g, self.mesh.num_cells())?;
        self.solver.validate()?;
        self.eigen.validate()?;
        Ok(())
    }

    /// Serializes the problem in the problem-file format. Floats are written
    /// in shortest round-trip form so parsing the output reproduces `self`.
    pub fn to_problem_file(&self) -> String {
        let mut out = String::new();
        let m = &self.mesh;
        let _ = writeln!(
            out,
            "[mesh] {} {} {} {} {} {}",
            m.nx, m.ny, m.nz, m.dx, m.dy, m.dz
        );
        let bc: Vec<String> = m.boundary.iter().map(|b| b.to_string()).collect();
        let _ = writeln!(out, "[bc] {}", bc.join(" "));
        let _ = writeln!(out, "[quadrature] {}", self.quadrature_order);
        for (id, xs) in self.materials.iter().enumerate() {
            let _ = writeln!(out, "[material {id}]");
            for (g, v) in xs.sigma_t.iter().enumerate() {
                let _ = writeln!(out, "total {g} {v}");
            }
            for (g, row) in xs.sigma_s.iter().enumerate() {
                for (gp, v) in row.iter().enumerate() {
                    if *v != 0.0 {
                        let _ = writeln!(out, "scatter {g} {gp} {v}");
                    }
                }
            }
            for (g, v) in xs.nu_sigma_f.iter().enumerate() {
                if *v != 0.0 {
                    let _ = writeln!(out, "nufission {g} {v}");
                }
            }
            for (g, v) in xs.chi.iter().enumerate() {
                if *v != 0.0 {
                    let _ = writeln!(out, "chi {g} {v}");
                }
            }
        }
        let first = m.material_id.first().copied().unwrap_or(0);
        if m.material_id.iter().all(|&id| id == first) {
            let _ = writeln!(out, "[cells] fill {first}");
        } else {
            let _ = writeln!(out, "[cells]");
            for (cell, id) in m.material_id.iter().enumerate() {
                let (i, j, k) = m.cell_coords(cell);
                let _ = writeln!(out, "cell {i} {j} {k} {id}");
            }
        }
        let _ = writeln!(out, "[source]");
        match &self.source {
            SourceSpec::UniformByGroup(q) => {
                for (g, v) in q.iter().enumerate() {
                    if *v != 0.0 {
                        let _ = writeln!(out, "group {g} {v}");
                    }
                }
            }
            SourceSpec::PerCell(q) => {
                for (g, row) in q.iter().enumerate() {
                    for (cell, v) in row.iter().enumerate() {
                        if *v != 0.0 {
                            let (i, j, k) = m.cell_coords(cell);
                            let _ = writeln!(out, "cell {i} {j} {k} {g} {v}");
                        }
                    }
                }
            }
        }
        let s = &self.solver;
        let restart = s.restart.map_or("none".to_string(), |r| r.to_string());
        let _ = writeln!(
            out,
            "[solver] tol={} max_iters={} restart={} block={} sets={}",
            s.tol, s.max_iters, restart, s.block_mode, s.num_sets
        );
        let _ = writeln!(
            out,
            "[mge] enabled={} weight={} relax={} vcycles={} depth={} sn={}",
            s.precond_enabled, s.weight, s.relaxations, s.vcycles, s.depth, s.pc_quadrature
        );
        let e = &self.eigen;
        let _ = writeln!(
            out,
            "[eigen] enabled={} ktol={} k0={} l2tol={} linftol={} max_outer={}",
            e.enabled, e.k_tol, e.k0, e.l2_tol, e.linf_tol, e.max_outer
        );
        out
    }
}

/// The 3x3x3 single-material test problem built on
/// [`synth_upscatter_fixture`]: unit cells, the given boundary on every face,
/// and a unit isotropic source in the three highest groups.
pub fn fixture_problem(
    num_groups: usize,
    num_upscatter: usize,
    boundary: BoundaryCondition,
    quadrature_order: usize,
) -> ProblemSpec {
    let mut q = vec![0.0; num_groups];
    q.iter_mut().take(3).for_each(|v| *v = 1.0);
    ProblemSpec {
        mesh: CartesianMesh::uniform([3, 3, 3], [1.0; 3], [boundary; 6])
            .expect("fixture mesh is valid"),
        materials: vec![synth_upscatter_fixture(num_groups, num_upscatter)],
        source: SourceSpec::UniformByGroup(q),
        quadrature_order,
        solver: SolverConfig::default(),
        eigen: EigenConfig::default(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Mesh,
    Bc,
    Quadrature,
    Material(usize),
    Cells,
    Source,
    Solver,
    Mge,
    Eigen,
}

#[derive(Default)]
struct MaterialLines {
    total: BTreeMap<usize, f64>,
    scatter: Vec<(usize, usize, f64, usize)>,
    nufission: Vec<(usize, f64, usize)>,
    chi: Vec<(usize, f64, usize)>,
}

enum CellAssignment {
    Fill(usize, usize),
    Cell([usize; 3], usize, usize),
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn num<T: FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| parse_err(line, format!("invalid {what} '{tok}'")))
}

fn expect_tokens(toks: &[&str], n: usize, line: usize, form: &str) -> Result<()> {
    if toks.len() != n {
        return Err(parse_err(line, format!("expected '{form}'")));
    }
    Ok(())
}

fn key_values(toks: &[&str], line: usize) -> Result<Vec<(String, String)>> {
    toks.iter()
        .map(|t| {
            t.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| parse_err(line, format!("expected key=value, got '{t}'")))
        })
        .collect()
}

fn parse_bool(v: &str, line: usize) -> Result<bool> {
    match v {
        "true" | "on" | "yes" => Ok(true),
        "false" | "off" | "no" => Ok(false),
        _ => Err(parse_err(line, format!("expected true|false, got '{v}'"))),
    }
}

fn parse_section(header: &str, line: usize) -> Result<Section> {
    let toks: Vec<&str> = header.split_whitespace().collect();
    match toks.as_slice() {
        ["mesh"] => Ok(Section::Mesh),
        ["bc"] => Ok(Section::Bc),
        ["quadrature"] => Ok(Section::Quadrature),
        ["material", id] => Ok(Section::Material(num(id, line, "material id")?)),
        ["cells"] => Ok(Section::Cells),
        ["source"] => Ok(Section::Source),
        ["solver"] => Ok(Section::Solver),
        ["mge"] => Ok(Section::Mge),
        ["eigen"] => Ok(Section::Eigen),
        _ => Err(parse_err(line, format!("unknown section [{header}]"))),
    }
}

/// Parses and validates a problem file.
pub fn parse_problem_file(text: &str) -> Result<ProblemSpec> {
    let mut section: Option<Section> = None;
    let mut mesh_line: Option<(usize, [usize; 3], [f64; 3])> = None;
    let mut boundary = [BoundaryCondition::Vacuum; 6];
    let mut order: Option<usize> = None;
    let mut materials: BTreeMap<usize, MaterialLines> = BTreeMap::new();
    let mut cells: Vec<CellAssignment> = Vec::new();
    let mut uniform_source: Vec<(usize, f64, usize)> = Vec::new();
    let mut cell_source: Vec<([usize; 3], usize, f64, usize)> = Vec::new();
    let mut solver = SolverConfig::default();
    let mut eigen = EigenConfig::default();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let mut content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let (header, tail) = rest
                .split_once(']')
                .ok_or_else(|| parse_err(line_no, "unterminated section header"))?;
            let s = parse_section(header.trim(), line_no)?;
            if let Section::Material(id) = s {
                if materials.contains_key(&id) {
                    return Err(parse_err(line_no, format!("material {id} defined twice")));
                }
                materials.insert(id, MaterialLines::default());
            }
            section = Some(s);
            content = tail.trim();
            if content.is_empty() {
                continue;
            }
        }
        let toks: Vec<&str> = content.split_whitespace().collect();
        let Some(s) = section else {
            return Err(parse_err(line_no, "content before the first section header"));
        };
        match s {
            Section::Mesh => {
                expect_tokens(&toks, 6, line_no, "nx ny nz dx dy dz")?;
                let dims = [
                    num(toks[0], line_no, "cell count")?,
                    num(toks[1], line_no, "cell count")?,
                    num(toks[2], line_no, "cell count")?,
                ];
                let widths = [
                    num(toks[3], line_no, "cell width")?,
                    num(toks[4], line_no, "cell width")?,
                    num(toks[5], line_no, "cell width")?,
                ];
                mesh_line = Some((line_no, dims, widths));
            }
            Section::Bc => {
                expect_tokens(&toks, 6, line_no, "xlo xhi ylo yhi zlo zhi")?;
                for (b, t) in boundary.iter_mut().zip(&toks) {
                    *b = t.parse().map_err(|e: String| parse_err(line_no, e))?;
                }
            }
            Section::Quadrature => {
                expect_tokens(&toks, 1, line_no, "N")?;
                order = Some(num(toks[0], line_no, "quadrature order")?);
            }
            Section::Material(id) => {
                let m = materials.get_mut(&id).expect("material section registered");
                match toks[0] {
                    "total" => {
                        expect_tokens(&toks, 3, line_no, "total g v")?;
                        let g = num(toks[1], line_no, "group")?;
                        if m.total.insert(g, num(toks[2], line_no, "value")?).is_some() {
                            return Err(parse_err(line_no, format!("total for group {g} given twice")));
                        }
                    }
                    "scatter" => {
                        expect_tokens(&toks, 4, line_no, "scatter g gprime v")?;
                        m.scatter.push((
                            num(toks[1], line_no, "group")?,
                            num(toks[2], line_no, "group")?,
                            num(toks[3], line_no, "value")?,
                            line_no,
                        ));
                    }
                    "nufission" => {
                        expect_tokens(&toks, 3, line_no, "nufission g v")?;
                        m.nufission.push((
                            num(toks[1], line_no, "group")?,
                            num(toks[2], line_no, "value")?,
                            line_no,
                        ));
                    }
                    "chi" => {
                        expect_tokens(&toks, 3, line_no, "chi g v")?;
                        m.chi.push((
                            num(toks[1], line_no, "group")?,
                            num(toks[2], line_no, "value")?,
                            line_no,
                        ));
                    }
                    other => {
                        return Err(parse_err(line_no, format!("unknown material entry '{other}'")))
                    }
                }
            }
            Section::Cells => match toks[0] {
                "fill" => {
                    expect_tokens(&toks, 2, line_no, "fill id")?;
                    cells.push(CellAssignment::Fill(num(toks[1], line_no, "material id")?, line_no));
                }
                "cell" => {
                    expect_tokens(&toks, 5, line_no, "cell i j k id")?;
                    cells.push(CellAssignment::Cell(
                        [
                            num(toks[1], line_no, "index")?,
                            num(toks[2], line_no, "index")?,
                            num(toks[3], line_no, "index")?,
                        ],
                        num(toks[4], line_no, "material id")?,
                        line_no,
                    ));
                }
                other => return Err(parse_err(line_no, format!("unknown cells entry '{other}'"))),
            },
            Section::Source => match toks[0] {
                "group" => {
                    expect_tokens(&toks, 3, line_no, "group g v")?;
                    uniform_source.push((
                        num(toks[1], line_no, "group")?,
                        num(toks[2], line_no, "value")?,
                        line_no,
                    ));
                }
                "cell" => {
                    expect_tokens(&toks, 6, line_no, "cell i j k g v")?;
                    cell_source.push((
                        [
                            num(toks[1], line_no, "index")?,
                            num(toks[2], line_no, "index")?,
                            num(toks[3], line_no, "index")?,
                        ],
                        num(toks[4], line_no, "group")?,
                        num(toks[5], line_no, "value")?,
                        line_no,
                    ));
                }
                other => return Err(parse_err(line_no, format!("unknown source entry '{other}'"))),
            },
            Section::Solver => {
                for (k, v) in key_values(&toks, line_no)? {
                    match k.as_str() {
                        "tol" => solver.tol = num(&v, line_no, "tol")?,
                        "max_iters" => solver.max_iters = num(&v, line_no, "max_iters")?,
                        "restart" => {
                            solver.restart = if v == "none" {
                                None
                            } else {
                                Some(num(&v, line_no, "restart")?)
                            }
                        }
                        "block" => {
                            solver.block_mode = v.parse().map_err(|e: String| parse_err(line_no, e))?
                        }
                        "sets" => solver.num_sets = num(&v, line_no, "sets")?,
                        _ => return Err(parse_err(line_no, format!("unknown solver key '{k}'"))),
                    }
                }
            }
            Section::Mge => {
                for (k, v) in key_values(&toks, line_no)? {
                    match k.as_str() {
                        "enabled" => solver.precond_enabled = parse_bool(&v, line_no)?,
                        "weight" => solver.weight = num(&v, line_no, "weight")?,
                        "relax" => solver.relaxations = num(&v, line_no, "relax")?,
                        "vcycles" => solver.vcycles = num(&v, line_no, "vcycles")?,
                        "depth" => {
                            solver.depth = v.parse().map_err(|e: String| parse_err(line_no, e))?
                        }
                        "sn" => {
                            solver.pc_quadrature =
                                v.parse().map_err(|e: String| parse_err(line_no, e))?
                        }
                        _ => return Err(parse_err(line_no, format!("unknown mge key '{k}'"))),
                    }
                }
            }
            Section::Eigen => {
                for (k, v) in key_values(&toks, line_no)? {
                    match k.as_str() {
                        "enabled" => eigen.enabled = parse_bool(&v, line_no)?,
                        "ktol" => eigen.k_tol = num(&v, line_no, "ktol")?,
                        "k0" => eigen.k0 = num(&v, line_no, "k0")?,
                        "l2tol" => eigen.l2_tol = num(&v, line_no, "l2tol")?,
                        "linftol" => eigen.linf_tol = num(&v, line_no, "linftol")?,
                        "max_outer" => eigen.max_outer = num(&v, line_no, "max_outer")?,
                        _ => return Err(parse_err(line_no, format!("unknown eigen key '{k}'"))),
                    }
                }
            }
        }
    }

    let (_, dims, widths) =
        mesh_line.ok_or_else(|| Error::InvalidProblem("missing [mesh] section".into()))?;
    let order = order.ok_or_else(|| Error::InvalidProblem("missing [quadrature] section".into()))?;
    if materials.is_empty() {
        return Err(Error::InvalidProblem("no [material] sections".into()));
    }

    let num_groups = materials
        .values()
        .map(|m| m.total.keys().next_back().map_or(0, |g| g + 1))
        .max()
        .unwrap_or(0);
    let index_of: BTreeMap<usize, usize> =
        materials.keys().enumerate().map(|(i, &id)| (id, i)).collect();

    let mut built = Vec::with_capacity(materials.len());
    for (&id, lines) in &materials {
        let mut xs = MaterialCrossSections::zeros(num_groups);
        for g in 0..num_groups {
            xs.sigma_t[g] = *lines.total.get(&g).ok_or_else(|| {
                Error::InvalidProblem(format!("material {id}: missing total for group {g}"))
            })?;
        }
        let check = |g: usize, line: usize| {
            if g >= num_groups {
                Err(parse_err(line, format!("group {g} out of range (G = {num_groups})")))
            } else {
                Ok(())
            }
        };
        for &(g, gp, v, line) in &lines.scatter {
            check(g, line)?;
            check(gp, line)?;
            xs.sigma_s[g][gp] = v;
        }
        for &(g, v, line) in &lines.nufission {
            check(g, line)?;
            xs.nu_sigma_f[g] = v;
        }
        for &(g, v, line) in &lines.chi {
            check(g, line)?;
            xs.chi[g] = v;
        }
        built.push(xs);
    }

    let mut mesh = CartesianMesh {
        nx: dims[0],
        ny: dims[1],
        nz: dims[2],
        dx: widths[0],
        dy: widths[1],
        dz: widths[2],
        material_id: Vec::new(),
        boundary,
    };
    let num_cells = dims.iter().product::<usize>();
    let lookup = |id: usize, line: usize| {
        index_of
            .get(&id)
            .copied()
            .ok_or_else(|| parse_err(line, format!("unknown material {id}")))
    };
    let mut assigned: Vec<Option<usize>> = vec![None; num_cells];
    if cells.is_empty() && built.len() == 1 {
        assigned.fill(Some(0));
    }
    for c in &cells {
        match *c {
            CellAssignment::Fill(id, line) => assigned.fill(Some(lookup(id, line)?)),
            CellAssignment::Cell([i, j, k], id, line) => {
                if i >= dims[0] || j >= dims[1] || k >= dims[2] {
                    return Err(parse_err(line, format!("cell ({i}, {j}, {k}) outside the mesh")));
                }
                let cell = i + dims[0] * (j + dims[1] * k);
                assigned[cell] = Some(lookup(id, line)?);
            }
        }
    }
    mesh.material_id = assigned
        .iter()
        .enumerate()
        .map(|(cell, id)| {
            id.ok_or_else(|| Error::InvalidProblem(format!("cell {cell} has no material")))
        })
        .collect::<Result<_>>()?;

    let source = if cell_source.is_empty() {
        let mut q = vec![0.0; num_groups];
        for &(g, v, line) in &uniform_source {
            if g >= num_groups {
                return Err(parse_err(line, format!("source group {g} out of range")));
            }
            q[g] = v;
        }
        SourceSpec::UniformByGroup(q)
    } else {
        let mut q = vec![vec![0.0; num_cells]; num_groups];
        for &(g, v, line) in &uniform_source {
            if g >= num_groups {
                return Err(parse_err(line, format!("source group {g} out of range")));
            }
            q[g].fill(v);
        }
        for &([i, j, k], g, v, line) in &cell_source {
            if g >= num_groups || i >= dims[0] || j >= dims[1] || k >= dims[2] {
                return Err(parse_err(line, "source entry outside the mesh or group range"));
            }
            q[g][i + dims[0] * (j + dims[1] * k)] = v;
        }
        SourceSpec::PerCell(q)
    };

    let spec = ProblemSpec {
        mesh,
        materials: built,
        source,
        quadrature_order: order,
        solver,
        eigen,
    };
    spec.validate()?;
    Ok(spec)
}
