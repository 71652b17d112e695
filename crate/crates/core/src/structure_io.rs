//! Crystal structure input: a small CIF subset, the energy-targets CSV and
//! a deterministic generator of synthetic structures with analytic energies.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use nalgebra::{Matrix3, Vector3};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::element::Element;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LatticeError {
    #[error("cell length {name} = {value} must be positive and finite")]
    BadLength { name: &'static str, value: f64 },
    #[error("cell angle {name} = {value} must lie strictly between 0 and 180 degrees")]
    BadAngle { name: &'static str, value: f64 },
    #[error("cell angles do not describe a parallelepiped with positive volume")]
    NonPositiveVolume,
}

/// Unit cell parameters. Lengths in Å, angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Lattice {
    pub fn new(a: f64, b: f64, c: f64, alpha: f64, beta: f64, gamma: f64) -> Result<Self, LatticeError> {
        let lattice = Lattice { a, b, c, alpha, beta, gamma };
        lattice.validate()?;
        Ok(lattice)
    }

    pub fn cubic(a: f64) -> Result<Self, LatticeError> {
        Self::new(a, a, a, 90.0, 90.0, 90.0)
    }

    pub fn validate(&self) -> Result<(), LatticeError> {
        for (name, value) in [("a", self.a), ("b", self.b), ("c", self.c)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(LatticeError::BadLength { name, value });
            }
        }
        for (name, value) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(value.is_finite() && value > 0.0 && value < 180.0) {
                return Err(LatticeError::BadAngle { name, value });
            }
        }
        if self.volume().is_nan() || self.volume() <= 0.0 {
            return Err(LatticeError::NonPositiveVolume);
        }
        Ok(())
    }

    /// Cell matrix whose columns are the lattice vectors, with **a** along x
    /// and **b** in the x-y plane. Cartesian = matrix * fractional.
    pub fn matrix(&self) -> Matrix3<f64> {
        let (ca, cb, cg) = (self.alpha.to_radians().cos(), self.beta.to_radians().cos(), self.gamma.to_radians().cos());
        let sg = self.gamma.to_radians().sin();
        let cy = (ca - cb * cg) / sg;
        let cz = (1.0 - cb * cb - cy * cy).max(0.0).sqrt();
        Matrix3::new(self.a, self.b * cg, self.c * cb, 0.0, self.b * sg, self.c * cy, 0.0, 0.0, self.c * cz)
    }

    pub fn volume(&self) -> f64 {
        let (ca, cb, cg) = (self.alpha.to_radians().cos(), self.beta.to_radians().cos(), self.gamma.to_radians().cos());
        let f = 1.0 - ca * ca - cb * cb - cg * cg + 2.0 * ca * cb * cg;
        if f <= 0.0 {
            return 0.0;
        }
        self.a * self.b * self.c * f.sqrt()
    }

    /// Distance between opposite faces of the cell, per lattice axis.
    pub fn perpendicular_heights(&self) -> [f64; 3] {
        let m = self.matrix();
        let (va, vb, vc) = (m.column(0).into_owned(), m.column(1).into_owned(), m.column(2).into_owned());
        let volume = va.dot(&vb.cross(&vc)).abs();
        [volume / vb.cross(&vc).norm(), volume / vc.cross(&va).norm(), volume / va.cross(&vb).norm()]
    }

    pub fn to_cartesian(&self, frac: [f64; 3]) -> Vector3<f64> {
        self.matrix() * Vector3::from(frac)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomSite {
    pub element: Element,
    pub frac: [f64; 3],
}

/// One unit cell: lattice plus element-tagged fractional sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrystalStructure {
    pub id: String,
    pub lattice: Lattice,
    pub sites: Vec<AtomSite>,
}

/// The four regression targets for one structure, in targets-file column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub id: String,
    pub single_point: f64,
    pub ewald: f64,
    pub lattice_energy: f64,
    pub mbd: f64,
}

impl EnergyRecord {
    pub const TASKS: [&'static str; 4] = ["single_point", "ewald", "lattice", "mbd"];

    pub fn values(&self) -> [f64; 4] {
        [self.single_point, self.ewald, self.lattice_energy, self.mbd]
    }
}

// ---------------------------------------------------------------------------
// CIF

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CifError {
    #[error("missing cell parameter `{0}`")]
    MissingCellParameter(&'static str),
    #[error("missing atom_site loop: {0}")]
    MissingAtomLoop(String),
    #[error("line {line}: element `{symbol}` is not in the allowed set")]
    UnknownElement { symbol: String, line: usize },
    #[error("line {line}: malformed number `{value}` for `{tag}`")]
    MalformedNumber { tag: String, value: String, line: usize },
    #[error("line {line}: loop has {values} values for {columns} columns")]
    RaggedLoop { line: usize, values: usize, columns: usize },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

#[derive(Debug, Clone)]
pub struct CifOptions {
    pub allowed: Vec<Element>,
}

impl Default for CifOptions {
    fn default() -> Self {
        CifOptions { allowed: Element::ORGANIC.to_vec() }
    }
}

const CELL_TAGS: [&str; 6] = [
    "_cell_length_a",
    "_cell_length_b",
    "_cell_length_c",
    "_cell_angle_alpha",
    "_cell_angle_beta",
    "_cell_angle_gamma",
];

#[derive(Debug, Clone)]
struct Token {
    text: String,
    line: usize,
    quoted: bool,
}

fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut lines = text.lines().enumerate().peekable();
    while let Some((idx, line)) = lines.next() {
        let line_no = idx + 1;
        if let Some(rest) = line.strip_prefix(';') {
            // semicolon-delimited text field
            let mut field = rest.to_string();
            for (_, next) in lines.by_ref() {
                if next.starts_with(';') {
                    break;
                }
                field.push('\n');
                field.push_str(next);
            }
            tokens.push(Token { text: field, line: line_no, quoted: true });
            continue;
        }
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let ch = chars[i];
            if ch.is_whitespace() {
                i += 1;
            } else if ch == '#' {
                break;
            } else if ch == '\'' || ch == '"' {
                // a closing quote only counts when followed by whitespace or EOL
                let mut j = i + 1;
                while j < chars.len() && !(chars[j] == ch && chars.get(j + 1).is_none_or(|c| c.is_whitespace())) {
                    j += 1;
                }
                tokens.push(Token {
                    text: chars[i + 1..j.min(chars.len())].iter().collect(),
                    line: line_no,
                    quoted: true,
                });
                i = j + 1;
            } else {
                let start = i;
                while i < chars.len() && !chars[i].is_whitespace() {
                    i += 1;
                }
                tokens.push(Token { text: chars[start..i].iter().collect(), line: line_no, quoted: false });
            }
        }
    }
    tokens
}

fn is_keyword(tok: &Token) -> bool {
    if tok.quoted {
        return false;
    }
    let lower = tok.text.to_ascii_lowercase();
    lower.starts_with('_')
        || lower == "loop_"
        || lower.starts_with("data_")
        || lower.starts_with("save_")
        || lower == "global_"
}

/// Parses a CIF numeric value, dropping a trailing standard uncertainty such as `(5)`.
pub fn parse_cif_number(raw: &str) -> Option<f64> {
    let body = match raw.find('(') {
        Some(open) if raw.ends_with(')') && raw[open + 1..raw.len() - 1].chars().all(|c| c.is_ascii_digit()) => {
            &raw[..open]
        }
        Some(_) => return None,
        None => raw,
    };
    let lower = body.to_ascii_lowercase();
    if lower.contains("inf") || lower.contains("nan") {
        return None;
    }
    body.parse::<f64>().ok().filter(|v| v.is_finite())
}

struct Loop {
    tags: Vec<String>,
    rows: Vec<Vec<Token>>,
}

/// Parses a CIF with the default organic element set.
pub fn parse_cif(text: &str) -> Result<CrystalStructure, CifError> {
    parse_cif_with(text, &CifOptions::default())
}

/// Parses the first data block of a CIF. Only P1 coordinates are read;
/// symmetry operations are ignored.
pub fn parse_cif_with(text: &str, options: &CifOptions) -> Result<CrystalStructure, CifError> {
    let tokens = tokenize(text);
    let mut id = String::from("structure");
    let mut seen_block = false;
    let mut items: BTreeMap<String, Token> = BTreeMap::new();
    let mut loops: Vec<Loop> = Vec::new();

    let mut i = 0;
    while i < tokens.len() {
        let tok = &tokens[i];
        let lower = tok.text.to_ascii_lowercase();
        if !tok.quoted && lower.starts_with("data_") {
            if seen_block {
                break;
            }
            seen_block = true;
            id = tok.text[5..].to_string();
            i += 1;
        } else if !tok.quoted && lower == "loop_" {
            i += 1;
            let mut tags = Vec::new();
            while i < tokens.len() && !tokens[i].quoted && tokens[i].text.starts_with('_') {
                tags.push(tokens[i].text.to_ascii_lowercase());
                i += 1;
            }
            let mut values = Vec::new();
            while i < tokens.len() && !is_keyword(&tokens[i]) {
                values.push(tokens[i].clone());
                i += 1;
            }
            if tags.is_empty() {
                continue;
            }
            if values.len() % tags.len() != 0 {
                let line = values.last().map_or(0, |t| t.line);
                return Err(CifError::RaggedLoop { line, values: values.len(), columns: tags.len() });
            }
            let rows = values.chunks(tags.len()).map(|c| c.to_vec()).collect();
            loops.push(Loop { tags, rows });
        } else if !tok.quoted && lower.starts_with('_') {
            if let Some(value) = tokens.get(i + 1) {
                items.insert(lower, value.clone());
            }
            i += 2;
        } else {
            i += 1;
        }
    }

    let mut cell = [0.0; 6];
    for (slot, tag) in cell.iter_mut().zip(CELL_TAGS) {
        let tok = items.get(tag).ok_or(CifError::MissingCellParameter(tag))?;
        *slot = parse_cif_number(&tok.text).ok_or_else(|| CifError::MalformedNumber {
            tag: tag.to_string(),
            value: tok.text.clone(),
            line: tok.line,
        })?;
    }
    let lattice = Lattice::new(cell[0], cell[1], cell[2], cell[3], cell[4], cell[5])?;

    let atom_loop = loops
        .iter()
        .find(|l| l.tags.iter().any(|t| t == "_atom_site_fract_x"))
        .ok_or_else(|| CifError::MissingAtomLoop("no loop with _atom_site_fract_x".into()))?;
    let column = |name: &str| atom_loop.tags.iter().position(|t| t == name);
    let coords = ["_atom_site_fract_x", "_atom_site_fract_y", "_atom_site_fract_z"];
    let mut coord_cols = [0usize; 3];
    for (slot, name) in coord_cols.iter_mut().zip(coords) {
        *slot = column(name).ok_or_else(|| CifError::MissingAtomLoop(format!("atom loop lacks {name}")))?;
    }
    let (symbol_col, from_label) = match (column("_atom_site_type_symbol"), column("_atom_site_label")) {
        (Some(c), _) => (c, false),
        (None, Some(c)) => (c, true),
        (None, None) => {
            return Err(CifError::MissingAtomLoop("atom loop lacks _atom_site_type_symbol and _atom_site_label".into()))
        }
    };
    if atom_loop.rows.is_empty() {
        return Err(CifError::MissingAtomLoop("atom loop has no rows".into()));
    }

    let mut sites = Vec::with_capacity(atom_loop.rows.len());
    for row in &atom_loop.rows {
        let sym_tok = &row[symbol_col];
        let element = element_from_cif(&sym_tok.text, from_label, &options.allowed)
            .ok_or_else(|| CifError::UnknownElement { symbol: sym_tok.text.clone(), line: sym_tok.line })?;
        let mut frac = [0.0; 3];
        for (k, &col) in coord_cols.iter().enumerate() {
            let tok = &row[col];
            frac[k] = parse_cif_number(&tok.text).ok_or_else(|| CifError::MalformedNumber {
                tag: coords[k].to_string(),
                value: tok.text.clone(),
                line: tok.line,
            })?;
        }
        sites.push(AtomSite { element, frac });
    }

    Ok(CrystalStructure { id, lattice, sites })
}

/// Resolves a type symbol ("O", "O2-") or a label ("C12", "H1A") to an element.
fn element_from_cif(text: &str, from_label: bool, allowed: &[Element]) -> Option<Element> {
    let letters: String = text.chars().take_while(|c| c.is_ascii_alphabetic()).collect();
    let lookup = |s: &str| s.parse::<Element>().ok().filter(|e| allowed.contains(e));
    if !from_label {
        return lookup(&letters);
    }
    // labels may carry suffix letters after the symbol ("H1A" is handled by
    // take_while, "HA" is not); prefer a two-letter symbol, then one letter
    if letters.len() >= 2 {
        if let Some(e) = lookup(&letters[..2]) {
            return Some(e);
        }
    }
    letters.get(..1).and_then(lookup)
}

/// Serializes a structure as a P1 CIF readable by [`parse_cif`].
pub fn write_cif(s: &CrystalStructure) -> String {
    let mut out = String::new();
    let l = &s.lattice;
    let _ = writeln!(out, "data_{}", s.id);
    let _ = writeln!(out, "_symmetry_space_group_name_H-M 'P 1'");
    for (tag, value) in CELL_TAGS.iter().zip([l.a, l.b, l.c, l.alpha, l.beta, l.gamma]) {
        let _ = writeln!(out, "{tag} {value:?}");
    }
    out.push_str(
        "loop_\n_atom_site_label\n_atom_site_type_symbol\n_atom_site_fract_x\n_atom_site_fract_y\n_atom_site_fract_z\n",
    );
    for (n, site) in s.sites.iter().enumerate() {
        let _ = writeln!(
            out,
            "{sym}{idx} {sym} {:?} {:?} {:?}",
            site.frac[0],
            site.frac[1],
            site.frac[2],
            sym = site.element,
            idx = n + 1
        );
    }
    out
}

// ---------------------------------------------------------------------------
// Targets CSV

pub const TARGETS_HEADER: [&str; 5] = ["id", "single_point", "ewald", "lattice", "mbd"];

#[derive(Debug, Error)]
pub enum TargetsError {
    #[error("header must be exactly `id,single_point,ewald,lattice,mbd`, found `{0}`")]
    HeaderMismatch(String),
    #[error("line {line}: field `{column}` is not numeric: `{value}`")]
    NonNumericField { line: u64, column: &'static str, value: String },
    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { line: u64, id: String },
    #[error("malformed targets file: {0}")]
    Csv(#[from] csv::Error),
}

pub fn load_targets(text: &str) -> Result<Vec<EnergyRecord>, TargetsError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(text.as_bytes());
    let mut records = reader.records();
    let header = match records.next() {
        Some(h) => h?,
        None => return Err(TargetsError::HeaderMismatch(String::new())),
    };
    if header.iter().ne(TARGETS_HEADER.iter().copied()) {
        return Err(TargetsError::HeaderMismatch(header.iter().collect::<Vec<_>>().join(",")));
    }

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for row in records {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let id = row[0].to_string();
        let mut values = [0.0; 4];
        for (k, value) in values.iter_mut().enumerate() {
            let raw = &row[k + 1];
            *value = raw.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                TargetsError::NonNumericField { line, column: TARGETS_HEADER[k + 1], value: raw.to_string() }
            })?;
        }
        if !seen.insert(id.clone()) {
            return Err(TargetsError::DuplicateId { line, id });
        }
        out.push(EnergyRecord {
            id,
            single_point: values[0],
            ewald: values[1],
            lattice_energy: values[2],
            mbd: values[3],
        });
    }
    Ok(out)
}

pub fn write_targets(records: &[EnergyRecord]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(TARGETS_HEADER).expect("in-memory write");
    for r in records {
        writer
            .write_record([
                r.id.clone(),
                format!("{:?}", r.single_point),
                format!("{:?}", r.ewald),
                format!("{:?}", r.lattice_energy),
                format!("{:?}", r.mbd),
            ])
            .expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

// ---------------------------------------------------------------------------
// Synthetic data

/// Closest allowed approach between generated atoms, periodic images included.
pub const SYNTHETIC_MIN_DISTANCE: f64 = 0.7;

/// Generates `n_structures` random organic-like cells with `sites_per_cell`
/// atoms each, together with energies that are closed-form functions of the
/// cell contents:
///
/// * single point: `-(10 ΣZ + 0.05 Σ ZᵢZⱼ/rᵢⱼ)`
/// * Ewald: `-Σ ZᵢZⱼ/rᵢⱼ`
/// * lattice: `-Σ wᵢ - 0.5 Σ exp(-rᵢⱼ)` with per-element weights
/// * MBD: `-Σ αᵢ - 2 Σ √(αᵢαⱼ)/(1 + rᵢⱼ⁶)` with per-element polarizabilities
///
/// Pair sums run over distinct sites inside the cell (Cartesian distances).
///
/// # Panics
/// If `n_structures == 0` or `sites_per_cell` is outside `1..=64`.
pub fn generate_synthetic(
    seed: u64,
    n_structures: usize,
    sites_per_cell: usize,
) -> Vec<(CrystalStructure, EnergyRecord)> {
    assert!(n_structures >= 1, "n_structures must be at least 1");
    assert!((1..=64).contains(&sites_per_cell), "sites_per_cell must be in 1..=64");

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_structures)
        .map(|n| {
            let id = format!("synth-{seed}-{n:04}");
            let structure = random_structure(&mut rng, id, sites_per_cell);
            let energies = analytic_energies(&structure);
            (structure, energies)
        })
        .collect()
}

fn random_structure(rng: &mut ChaCha8Rng, id: String, sites: usize) -> CrystalStructure {
    let mut present: Vec<Element> = Vec::new();
    while present.is_empty() {
        present = Element::ORGANIC.iter().copied().filter(|_| rng.gen_bool(0.6)).collect();
    }

    let volume_per_atom = rng.gen_range(14.0..24.0);
    let (alpha, beta, gamma): (f64, f64, f64) =
        (rng.gen_range(75.0..105.0), rng.gen_range(75.0..105.0), rng.gen_range(75.0..105.0));
    let (rb, rc): (f64, f64) = (rng.gen_range(0.8..1.25), rng.gen_range(0.8..1.25));
    let shape = Lattice { a: 1.0, b: rb, c: rc, alpha, beta, gamma }.volume();

    let mut volume = volume_per_atom * sites as f64;
    loop {
        let a = (volume / shape).cbrt();
        let lattice = Lattice::new(a, a * rb, a * rc, alpha, beta, gamma).expect("generated lattice is valid");
        if let Some(fracs) = place_sites(rng, &lattice, sites) {
            let sites = fracs
                .into_iter()
                .map(|frac| AtomSite { element: *present.choose(rng).expect("non-empty"), frac })
                .collect();
            return CrystalStructure { id, lattice, sites };
        }
        volume *= 1.2;
    }
}

fn place_sites(rng: &mut ChaCha8Rng, lattice: &Lattice, sites: usize) -> Option<Vec<[f64; 3]>> {
    let m = lattice.matrix();
    let images: Vec<Vector3<f64>> = (-1..=1)
        .flat_map(|i| (-1..=1).flat_map(move |j| (-1..=1).map(move |k| Vector3::new(i as f64, j as f64, k as f64))))
        .collect();
    let shortest = images.iter().filter(|n| n.norm() > 0.0).map(|n| (m * n).norm()).fold(f64::INFINITY, f64::min);
    if shortest < SYNTHETIC_MIN_DISTANCE {
        return None;
    }

    let mut placed: Vec<[f64; 3]> = Vec::with_capacity(sites);
    for _ in 0..sites {
        let mut ok = false;
        for _ in 0..2000 {
            let cand = [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()];
            let clear = placed.iter().all(|p| {
                let d = Vector3::new(cand[0] - p[0], cand[1] - p[1], cand[2] - p[2]);
                let d = d.map(|x| x - x.round());
                images.iter().all(|n| (m * (d + n)).norm() >= SYNTHETIC_MIN_DISTANCE)
            });
            if clear {
                placed.push(cand);
                ok = true;
                break;
            }
        }
        if !ok {
            return None;
        }
    }
    Some(placed)
}

fn lattice_weight(e: Element) -> f64 {
    match e {
        Element::H => 1.5,
        Element::C => 4.0,
        Element::N => 3.2,
        Element::O => 3.6,
        _ => 4.0,
    }
}

fn polarizability(e: Element) -> f64 {
    match e {
        Element::H => 4.5,
        Element::C => 12.0,
        Element::N => 7.4,
        Element::O => 5.4,
        _ => 10.0,
    }
}

fn analytic_energies(s: &CrystalStructure) -> EnergyRecord {
    let pos: Vec<Vector3<f64>> = s.sites.iter().map(|site| s.lattice.to_cartesian(site.frac)).collect();
    let z: Vec<f64> = s.sites.iter().map(|site| f64::from(site.element.atomic_number())).collect();
    let pol: Vec<f64> = s.sites.iter().map(|site| polarizability(site.element)).collect();

    let mut coulomb = 0.0;
    let mut overlap = 0.0;
    let mut dispersion = 0.0;
    for i in 0..pos.len() {
        for j in i + 1..pos.len() {
            let r = (pos[i] - pos[j]).norm();
            coulomb += z[i] * z[j] / r;
            overlap += (-r).exp();
            dispersion += (pol[i] * pol[j]).sqrt() / (1.0 + r.powi(6));
        }
    }
    let z_sum: f64 = z.iter().sum();
    let weight_sum: f64 = s.sites.iter().map(|site| lattice_weight(site.element)).sum();
    let pol_sum: f64 = pol.iter().sum();

    EnergyRecord {
        id: s.id.clone(),
        single_point: -(10.0 * z_sum + 0.05 * coulomb),
        ewald: -coulomb,
        lattice_energy: -weight_sum - 0.5 * overlap,
        mbd: -pol_sum - 2.0 * dispersion,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const WATER: &str = "\
data_water
_cell_length_a 10
_cell_length_b 10
_cell_length_c 10
_cell_angle_alpha 90
_cell_angle_beta 90
_cell_angle_gamma 90
loop_
_atom_site_label
_atom_site_fract_x
_atom_site_fract_y
_atom_site_fract_z
O1 0.5 0.5 0.5
H1 0.596 0.5 0.5
H2A 0.476 0.593 0.5
";

    #[test]
    fn cubic_single_site() {
        let text = "data_c\n_cell_length_a 10\n_cell_length_b 10\n_cell_length_c 10\n\
                    _cell_angle_alpha 90\n_cell_angle_beta 90\n_cell_angle_gamma 90\n\
                    loop_\n_atom_site_type_symbol\n_atom_site_fract_x\n_atom_site_fract_y\n_atom_site_fract_z\n\
                    C 0.5 0.5 0.5\n";
        let s = parse_cif(text).unwrap();
        assert_eq!(s.id, "c");
        assert_eq!(s.lattice, Lattice::cubic(10.0).unwrap());
        assert_eq!(s.sites, vec![AtomSite { element: Element::C, frac: [0.5, 0.5, 0.5] }]);
    }

    #[test]
    fn labels_with_suffixes() {
        let s = parse_cif(WATER).unwrap();
        let elements: Vec<_> = s.sites.iter().map(|a| a.element).collect();
        assert_eq!(elements, vec![Element::O, Element::H, Element::H]);
    }

    #[test]
    fn uncertainty_is_stripped() {
        assert_eq!(parse_cif_number("5.432(1)"), Some(5.432));
        assert_eq!(parse_cif_number("1.234(56)"), Some(1.234));
        assert_eq!(parse_cif_number("7"), Some(7.0));
        assert_eq!(parse_cif_number("?"), None);
        assert_eq!(parse_cif_number("1.2(a)"), None);
        let text = WATER.replace("_cell_length_a 10", "_cell_length_a 5.432(1)");
        assert_eq!(parse_cif(&text).unwrap().lattice.a, 5.432);
    }

    #[test]
    fn missing_pieces_are_named() {
        let no_loop = WATER.split("loop_").next().unwrap();
        assert!(matches!(parse_cif(no_loop), Err(CifError::MissingAtomLoop(_))));

        let no_gamma = WATER.replace("_cell_angle_gamma 90\n", "");
        assert_eq!(parse_cif(&no_gamma), Err(CifError::MissingCellParameter("_cell_angle_gamma")));

        let bad = WATER.replace("O1 0.5 0.5 0.5", "O1 0.5 x 0.5");
        match parse_cif(&bad) {
            Err(CifError::MalformedNumber { tag, line, .. }) => {
                assert_eq!(tag, "_atom_site_fract_y");
                assert_eq!(line, 13);
            }
            other => panic!("unexpected {other:?}"),
        }

        let fe = WATER.replace("O1 0.5", "Fe1 0.5");
        assert!(matches!(parse_cif(&fe), Err(CifError::UnknownElement { ref symbol, .. }) if symbol == "Fe1"));
    }

    #[test]
    fn allowed_set_is_configurable() {
        let text = WATER.replace("O1 0.5", "S1 0.5");
        assert!(parse_cif(&text).is_err());
        let opts = CifOptions { allowed: vec![Element::H, Element::S] };
        assert_eq!(parse_cif_with(&text, &opts).unwrap().sites[0].element, Element::S);
    }

    #[test]
    fn comments_and_quoted_values() {
        let text = format!("# header comment\n{WATER}_chemical_name_common 'some water'\n");
        let text = text.replace("_cell_length_b 10", "_cell_length_b 10 # b axis");
        let s = parse_cif(&text).unwrap();
        assert_eq!(s.lattice.b, 10.0);
        assert_eq!(s.sites.len(), 3);
    }

    #[test]
    fn lattice_matrix_orthorhombic_diagonal() {
        let l = Lattice::new(3.0, 4.0, 5.0, 90.0, 90.0, 90.0).unwrap();
        let v = l.to_cartesian([1.0, 1.0, 1.0]);
        assert!((v - Vector3::new(3.0, 4.0, 5.0)).norm() < 1e-12);
        assert!((l.volume() - 60.0).abs() < 1e-9);
        assert!(l.matrix().determinant() > 0.0);
    }

    #[test]
    fn invalid_lattices_rejected() {
        assert!(Lattice::new(0.0, 1.0, 1.0, 90.0, 90.0, 90.0).is_err());
        assert!(Lattice::new(1.0, 1.0, 1.0, 180.0, 90.0, 90.0).is_err());
        assert_eq!(Lattice::new(1.0, 1.0, 1.0, 10.0, 10.0, 120.0), Err(LatticeError::NonPositiveVolume));
    }

    #[test]
    fn targets_basic() {
        let recs = load_targets("id,single_point,ewald,lattice,mbd\nX,-1.0,-2.0,-3.0,-4.0").unwrap();
        assert_eq!(
            recs,
            vec![EnergyRecord { id: "X".into(), single_point: -1.0, ewald: -2.0, lattice_energy: -3.0, mbd: -4.0 }]
        );
        let sci = load_targets("id,single_point,ewald,lattice,mbd\nX,1e3,2,3,4\n").unwrap();
        assert_eq!(sci[0].single_point, 1000.0);
    }

    #[test]
    fn targets_errors() {
        assert!(matches!(
            load_targets("id,single_point,ewald,lattice_energy,mbd\n"),
            Err(TargetsError::HeaderMismatch(_))
        ));
        assert!(matches!(
            load_targets("id,single_point,ewald,lattice,mbd\nX,1,2,3,4\nX,1,2,3,4\n"),
            Err(TargetsError::DuplicateId { line: 3, .. })
        ));
        assert!(matches!(
            load_targets("id,single_point,ewald,lattice,mbd\nX,1,two,3,4\n"),
            Err(TargetsError::NonNumericField { column: "ewald", .. })
        ));
        assert!(load_targets("id,single_point,ewald,lattice,mbd\nX,1,2,3\n").is_err());
    }

    #[test]
    fn synthetic_is_deterministic_and_seed_dependent() {
        let render = |seed| {
            generate_synthetic(seed, 2, 4)
                .iter()
                .map(|(s, e)| write_cif(s) + &write_targets(std::slice::from_ref(e)))
                .collect::<String>()
        };
        assert_eq!(render(1), render(1));
        assert_ne!(render(1), render(2));
    }

    #[test]
    fn synthetic_respects_minimum_distance() {
        for (s, _) in generate_synthetic(7, 20, 12) {
            let m = s.lattice.matrix();
            for (i, a) in s.sites.iter().enumerate() {
                for b in &s.sites[i + 1..] {
                    // brute force over a 5x5x5 image block
                    for n0 in -2..=2 {
                        for n1 in -2..=2 {
                            for n2 in -2..=2 {
                                let d = Vector3::new(
                                    b.frac[0] - a.frac[0] + n0 as f64,
                                    b.frac[1] - a.frac[1] + n1 as f64,
                                    b.frac[2] - a.frac[2] + n2 as f64,
                                );
                                assert!((m * d).norm() >= SYNTHETIC_MIN_DISTANCE);
                            }
                        }
                    }
                }
            }
        }
    }
}
