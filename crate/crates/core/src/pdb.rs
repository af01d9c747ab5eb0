//! Fixed-column PDB reading and writing.
//!
//! Only the coordinate section is modelled: `ATOM`/`HETATM` records become
//! [`Atom`]s grouped into [`Residue`]s and [`Chain`]s, `TER` closes a chain and
//! `END` closes the file. Every other record is carried verbatim in
//! [`Structure::header`] and re-emitted ahead of the coordinates.
//!
//! Atom names are stored without their column alignment; the writer restores
//! it from the element (one-letter elements start in column 14, everything
//! else in column 13).

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::Vec3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PdbError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: duplicate atom {chain}/{res_seq}/{name}")]
    DuplicateAtom {
        line: usize,
        chain: char,
        res_seq: i32,
        name: String,
    },
    #[error("cannot emit {what}: {message}")]
    Emit { what: String, message: String },
    #[error("malformed atom selector `{0}` (expected CHAIN.RESNAMESEQ.ATOM, e.g. A.ALA3.CB)")]
    Selector(String),
    #[error("no atom matches selector {0}")]
    NotFound(AtomSelector),
    #[error("selector {selector} names {expected} but residue {res_seq} of chain {chain} is {found}")]
    ResidueMismatch {
        selector: AtomSelector,
        chain: char,
        res_seq: i32,
        expected: String,
        found: String,
    },
}

pub type Result<T> = std::result::Result<T, PdbError>;

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub serial: u32,
    /// Atom name with PDB alignment stripped, e.g. `CB`.
    pub name: String,
    /// `' '` or `'A'`.
    pub alt_loc: char,
    /// Cartesian position in Å.
    pub position: Vec3,
    pub occupancy: f64,
    pub temp_factor: f64,
    pub element: String,
    /// Emitted as `HETATM` rather than `ATOM`.
    pub hetero: bool,
}

impl Atom {
    /// A plain `ATOM` record with occupancy 1 and zero B-factor; the element
    /// is taken from the first letter of the name.
    pub fn new(name: &str, position: Vec3) -> Self {
        Atom {
            serial: 1,
            name: name.to_string(),
            alt_loc: ' ',
            position,
            occupancy: 1.0,
            temp_factor: 0.0,
            element: infer_element(name),
            hetero: false,
        }
    }

    pub fn is_backbone(&self) -> bool {
        BACKBONE.contains(&self.name.as_str())
    }
}

/// Main-chain atom names; everything else in an amino-acid residue is side chain.
pub const BACKBONE: [&str; 4] = ["N", "CA", "C", "O"];

#[derive(Debug, Clone, PartialEq)]
pub struct Residue {
    pub res_seq: i32,
    pub res_name: String,
    pub atoms: Vec<Atom>,
}

impl Residue {
    pub fn atom(&self, name: &str) -> Option<&Atom> {
        self.atoms.iter().find(|a| a.name == name)
    }

    pub fn atom_mut(&mut self, name: &str) -> Option<&mut Atom> {
        self.atoms.iter_mut().find(|a| a.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub id: char,
    pub residues: Vec<Residue>,
}

impl Chain {
    pub fn residue(&self, res_seq: i32) -> Option<&Residue> {
        self.residues.iter().find(|r| r.res_seq == res_seq)
    }

    pub fn residue_mut(&mut self, res_seq: i32) -> Option<&mut Residue> {
        self.residues.iter_mut().find(|r| r.res_seq == res_seq)
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.residues.iter().flat_map(|r| r.atoms.iter())
    }

    pub fn atom_count(&self) -> usize {
        self.residues.iter().map(|r| r.atoms.len()).sum()
    }

    /// One-letter-free sequence as residue names, in order.
    pub fn sequence(&self) -> Vec<&str> {
        self.residues.iter().map(|r| r.res_name.as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Structure {
    /// Non-coordinate records, verbatim and in input order.
    pub header: Vec<String>,
    pub chains: Vec<Chain>,
}

impl Structure {
    pub fn chain(&self, id: char) -> Option<&Chain> {
        self.chains.iter().find(|c| c.id == id)
    }

    pub fn chain_mut(&mut self, id: char) -> Option<&mut Chain> {
        self.chains.iter_mut().find(|c| c.id == id)
    }

    pub fn chain_ids(&self) -> Vec<char> {
        self.chains.iter().map(|c| c.id).collect()
    }

    pub fn atom_count(&self) -> usize {
        self.chains.iter().map(Chain::atom_count).sum()
    }

    /// Iterates `(chain, residue, atom)` over the whole structure in file order.
    pub fn atoms(&self) -> impl Iterator<Item = AtomRef<'_>> {
        self.chains.iter().flat_map(|chain| {
            chain.residues.iter().flat_map(move |residue| {
                residue.atoms.iter().map(move |atom| AtomRef {
                    chain: chain.id,
                    residue,
                    atom,
                })
            })
        })
    }

    /// Drops `HETATM` atoms (waters, ligands) and any residue left empty.
    pub fn without_hetero(&self) -> Structure {
        let mut out = self.clone();
        for chain in &mut out.chains {
            for residue in &mut chain.residues {
                residue.atoms.retain(|a| !a.hetero);
            }
            chain.residues.retain(|r| !r.atoms.is_empty());
        }
        out.chains.retain(|c| !c.residues.is_empty());
        out
    }

    /// Assigns serial numbers exactly as [`write_pdb`] emits them: atoms are
    /// numbered consecutively and every `TER` consumes one number.
    pub fn renumber_serials(&mut self) {
        let mut serial = 1u32;
        for chain in &mut self.chains {
            for residue in &mut chain.residues {
                for atom in &mut residue.atoms {
                    atom.serial = serial;
                    serial += 1;
                }
            }
            serial += 1;
        }
    }
}

/// Borrowed view of one atom together with its residue and chain.
#[derive(Debug, Clone, Copy)]
pub struct AtomRef<'a> {
    pub chain: char,
    pub residue: &'a Residue,
    pub atom: &'a Atom,
}

impl AtomRef<'_> {
    pub fn selector(&self) -> AtomSelector {
        AtomSelector::new(
            self.chain,
            &self.residue.res_name,
            self.residue.res_seq,
            &self.atom.name,
        )
    }

    pub fn label(&self) -> String {
        format!(
            "{}.{}{}.{}",
            self.chain, self.residue.res_name, self.residue.res_seq, self.atom.name
        )
    }
}

/// Addresses a single atom as `CHAIN.RESNAMESEQ.ATOM`, e.g. `A.ALA3.CB`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomSelector {
    pub chain_id: char,
    pub res_name: String,
    pub res_seq: i32,
    pub atom_name: String,
}

impl AtomSelector {
    pub fn new(chain_id: char, res_name: &str, res_seq: i32, atom_name: &str) -> Self {
        AtomSelector {
            chain_id,
            res_name: res_name.to_string(),
            res_seq,
            atom_name: atom_name.to_string(),
        }
    }
}

impl fmt::Display for AtomSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}.{}{}.{}",
            self.chain_id, self.res_name, self.res_seq, self.atom_name
        )
    }
}

impl FromStr for AtomSelector {
    type Err = PdbError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || PdbError::Selector(s.to_string());
        let mut parts = s.split('.');
        let (chain, residue, atom) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
            (Some(c), Some(r), Some(a), None) => (c, r, a),
            _ => return Err(bad()),
        };
        let mut chain_chars = chain.chars();
        let chain_id = match (chain_chars.next(), chain_chars.next()) {
            (Some(c), None) if c.is_ascii_alphanumeric() => c,
            _ => return Err(bad()),
        };
        if residue.len() < 4 || !residue.is_char_boundary(3) {
            return Err(bad());
        }
        let (res_name, seq) = residue.split_at(3);
        if !res_name.chars().all(|c| c.is_ascii_alphanumeric()) {
            return Err(bad());
        }
        let res_seq: i32 = seq.parse().map_err(|_| bad())?;
        if res_seq < 1 {
            return Err(bad());
        }
        if atom.is_empty() || atom.len() > 4 || !atom.chars().all(|c| c.is_ascii_graphic()) {
            return Err(bad());
        }
        Ok(AtomSelector {
            chain_id,
            res_name: res_name.to_ascii_uppercase(),
            res_seq,
            atom_name: atom.to_string(),
        })
    }
}

impl serde::Serialize for AtomSelector {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for AtomSelector {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Resolves a selector to the unique matching atom.
pub fn select_atom<'a>(s: &'a Structure, sel: &AtomSelector) -> Result<AtomRef<'a>> {
    let chain = s.chain(sel.chain_id).ok_or_else(|| PdbError::NotFound(sel.clone()))?;
    let residue = chain
        .residue(sel.res_seq)
        .ok_or_else(|| PdbError::NotFound(sel.clone()))?;
    if residue.res_name != sel.res_name {
        return Err(PdbError::ResidueMismatch {
            selector: sel.clone(),
            chain: chain.id,
            res_seq: residue.res_seq,
            expected: sel.res_name.clone(),
            found: residue.res_name.clone(),
        });
    }
    let atom = residue
        .atom(&sel.atom_name)
        .ok_or_else(|| PdbError::NotFound(sel.clone()))?;
    Ok(AtomRef {
        chain: chain.id,
        residue,
        atom,
    })
}

fn infer_element(name: &str) -> String {
    name.chars()
        .find(|c| c.is_ascii_alphabetic())
        .map(|c| c.to_ascii_uppercase().to_string())
        .unwrap_or_default()
}

/// 1-based inclusive column range, tolerant of short lines.
fn columns(line: &str, first: usize, last: usize) -> &str {
    let start = (first - 1).min(line.len());
    let end = last.min(line.len());
    line.get(start..end).unwrap_or("")
}

fn parse_real(line: &str, lineno: usize, first: usize, last: usize, what: &str) -> Result<f64> {
    let field = columns(line, first, last).trim();
    let value: f64 = field.parse().map_err(|_| PdbError::Parse {
        line: lineno,
        message: format!("bad {what} field `{field}` in columns {first}-{last}"),
    })?;
    if !value.is_finite() {
        return Err(PdbError::Parse {
            line: lineno,
            message: format!("non-finite {what} `{field}`"),
        });
    }
    Ok(value)
}

fn parse_optional_real(line: &str, lineno: usize, first: usize, last: usize, what: &str, default: f64) -> Result<f64> {
    if columns(line, first, last).trim().is_empty() {
        Ok(default)
    } else {
        parse_real(line, lineno, first, last, what)
    }
}

struct AtomRecord {
    chain: char,
    res_seq: i32,
    res_name: String,
    atom: Atom,
}

fn parse_atom_line(line: &str, lineno: usize, hetero: bool) -> Result<AtomRecord> {
    let err = |message: String| PdbError::Parse { line: lineno, message };
    if !line.is_ascii() {
        return Err(err("non-ASCII characters in coordinate record".into()));
    }
    if line.len() < 54 {
        return Err(err(format!(
            "truncated coordinate record ({} columns, need at least 54)",
            line.len()
        )));
    }
    let serial_field = columns(line, 7, 11).trim();
    let serial: u32 = serial_field
        .parse()
        .map_err(|_| err(format!("bad serial `{serial_field}`")))?;
    if serial == 0 {
        return Err(err("serial must be at least 1".into()));
    }
    let name = columns(line, 13, 16).trim().to_string();
    if name.is_empty() {
        return Err(err("empty atom name".into()));
    }
    let alt_loc = columns(line, 17, 17).chars().next().unwrap_or(' ');
    if alt_loc != ' ' && alt_loc != 'A' {
        return Err(err(format!("unsupported alternate location `{alt_loc}`")));
    }
    let res_name = columns(line, 18, 20).trim().to_string();
    if res_name.is_empty() {
        return Err(err("empty residue name".into()));
    }
    let chain = columns(line, 22, 22).chars().next().unwrap_or(' ');
    let seq_field = columns(line, 23, 26).trim();
    let res_seq: i32 = seq_field
        .parse()
        .map_err(|_| err(format!("bad residue number `{seq_field}`")))?;
    let icode = columns(line, 27, 27).trim();
    if !icode.is_empty() {
        return Err(err(format!("insertion code `{icode}` is not supported")));
    }
    let x = parse_real(line, lineno, 31, 38, "x coordinate")?;
    let y = parse_real(line, lineno, 39, 46, "y coordinate")?;
    let z = parse_real(line, lineno, 47, 54, "z coordinate")?;
    let occupancy = parse_optional_real(line, lineno, 55, 60, "occupancy", 1.0)?;
    let temp_factor = parse_optional_real(line, lineno, 61, 66, "temperature factor", 0.0)?;
    let element = match columns(line, 77, 78).trim() {
        "" => infer_element(&name),
        e => e.to_ascii_uppercase(),
    };
    Ok(AtomRecord {
        chain,
        res_seq,
        res_name,
        atom: Atom {
            serial,
            name,
            alt_loc,
            position: Vec3::new(x, y, z),
            occupancy,
            temp_factor,
            element,
            hetero,
        },
    })
}

/// Parses PDB text into a [`Structure`].
///
/// Atoms for a chain id that reappears after its `TER` (waters, ligands) are
/// appended to the existing chain; residue numbers must keep increasing.
pub fn parse_pdb(text: &str) -> Result<Structure> {
    let mut structure = Structure::default();
    // index of the chain currently receiving atoms; cleared by TER
    let mut open: Option<usize> = None;
    let mut ended = false;

    for (idx, raw) in text.split('\n').enumerate() {
        let lineno = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if ended {
            if line.trim().is_empty() {
                continue;
            }
            return Err(PdbError::Parse {
                line: lineno,
                message: "content after END record".into(),
            });
        }
        let record = columns(line, 1, 6).trim_end();
        match record {
            "ATOM" | "HETATM" => {
                let rec = parse_atom_line(line, lineno, record == "HETATM")?;
                let ci = match open {
                    Some(ci) if structure.chains[ci].id == rec.chain => ci,
                    _ => match structure.chains.iter().position(|c| c.id == rec.chain) {
                        Some(ci) => ci,
                        None => {
                            structure.chains.push(Chain {
                                id: rec.chain,
                                residues: Vec::new(),
                            });
                            structure.chains.len() - 1
                        }
                    },
                };
                open = Some(ci);
                let chain = &mut structure.chains[ci];
                match chain.residues.last_mut() {
                    Some(last) if last.res_seq == rec.res_seq => {
                        if last.res_name != rec.res_name {
                            return Err(PdbError::Parse {
                                line: lineno,
                                message: format!(
                                    "residue {} of chain {} is named both {} and {}",
                                    rec.res_seq, rec.chain, last.res_name, rec.res_name
                                ),
                            });
                        }
                        if last.atoms.iter().any(|a| a.name == rec.atom.name) {
                            return Err(PdbError::DuplicateAtom {
                                line: lineno,
                                chain: rec.chain,
                                res_seq: rec.res_seq,
                                name: rec.atom.name,
                            });
                        }
                        last.atoms.push(rec.atom);
                    }
                    last => {
                        if let Some(prev_seq) = last.map(|r| r.res_seq) {
                            if rec.res_seq < prev_seq {
                                let duplicate = chain.residues.iter().any(|r| r.res_seq == rec.res_seq);
                                return Err(PdbError::Parse {
                                    line: lineno,
                                    message: if duplicate {
                                        format!(
                                            "residue {} of chain {} is split across the file",
                                            rec.res_seq, rec.chain
                                        )
                                    } else {
                                        format!(
                                            "residue number {} follows {} in chain {}",
                                            rec.res_seq, prev_seq, rec.chain
                                        )
                                    },
                                });
                            }
                        }
                        chain.residues.push(Residue {
                            res_seq: rec.res_seq,
                            res_name: rec.res_name,
                            atoms: vec![rec.atom],
                        });
                    }
                }
            }
            "TER" => open = None,
            "END" => ended = true,
            _ if line.trim().is_empty() => {}
            _ => structure.header.push(line.to_string()),
        }
    }
    Ok(structure)
}

/// Formats `value` as a fixed-point field of `width` columns with `decimals`
/// places, rounding half away from zero on the shortest decimal representation
/// of the value (so `4.7765` becomes `4.777`).
pub fn format_fixed(value: f64, width: usize, decimals: usize) -> Option<String> {
    if !value.is_finite() {
        return None;
    }
    let text = round_half_away(value, decimals);
    if text.len() > width {
        return None;
    }
    Some(format!("{text:>width$}"))
}

fn round_half_away(value: f64, decimals: usize) -> String {
    // `Display` for f64 prints the shortest round-tripping decimal and never
    // switches to exponent notation, so this is exact string arithmetic.
    let repr = format!("{}", value.abs());
    let (int_part, frac_part) = match repr.split_once('.') {
        Some((i, f)) => (i.to_string(), f.to_string()),
        None => (repr.clone(), String::new()),
    };
    let mut digits: Vec<u8> = int_part
        .bytes()
        .chain(frac_part.bytes().chain(std::iter::repeat(b'0')).take(decimals))
        .map(|b| b - b'0')
        .collect();
    let round_up = frac_part.as_bytes().get(decimals).is_some_and(|&b| b >= b'5');
    if round_up {
        let mut i = digits.len();
        loop {
            if i == 0 {
                digits.insert(0, 1);
                break;
            }
            i -= 1;
            if digits[i] == 9 {
                digits[i] = 0;
            } else {
                digits[i] += 1;
                break;
            }
        }
    }
    let int_len = digits.len() - decimals;
    let mut out = String::with_capacity(digits.len() + 2);
    let is_zero = digits.iter().all(|&d| d == 0);
    if value.is_sign_negative() && !is_zero {
        out.push('-');
    }
    out.extend(digits[..int_len].iter().map(|d| (b'0' + d) as char));
    if decimals > 0 {
        out.push('.');
        out.extend(digits[int_len..].iter().map(|d| (b'0' + d) as char));
    }
    out
}

fn aligned_name(name: &str, element: &str) -> String {
    if element.len() == 1 && name.len() < 4 {
        format!(" {name:<3}")
    } else {
        format!("{name:<4}")
    }
}

/// Emits a structure as PDB text: header records, then coordinates with
/// sequential serials, `TER` after each chain and a final `END`.
pub fn write_pdb(s: &Structure) -> Result<String> {
    let mut out = String::new();
    for line in &s.header {
        out.push_str(line);
        out.push('\n');
    }
    let mut serial = 1u32;
    for chain in &s.chains {
        let mut last: Option<&Residue> = None;
        for residue in &chain.residues {
            for atom in &residue.atoms {
                let label = || format!("{}.{}{}.{}", chain.id, residue.res_name, residue.res_seq, atom.name);
                let field = |v: f64, width: usize, decimals: usize, what: &str| {
                    format_fixed(v, width, decimals).ok_or_else(|| PdbError::Emit {
                        what: label(),
                        message: format!("{what} {v} does not fit F{width}.{decimals}"),
                    })
                };
                if serial > 99_999 {
                    return Err(PdbError::Emit {
                        what: label(),
                        message: "more than 99999 serial numbers".into(),
                    });
                }
                if atom.name.is_empty() || atom.name.len() > 4 {
                    return Err(PdbError::Emit {
                        what: label(),
                        message: "atom name must be 1-4 characters".into(),
                    });
                }
                let record = if atom.hetero { "HETATM" } else { "ATOM  " };
                out.push_str(&format!(
                    "{record}{serial:>5} {name}{alt}{res:>3} {chain}{seq:>4}    {x}{y}{z}{occ}{b}          {el:>2}\n",
                    name = aligned_name(&atom.name, &atom.element),
                    alt = atom.alt_loc,
                    res = residue.res_name,
                    chain = chain.id,
                    seq = residue.res_seq,
                    x = field(atom.position.x, 8, 3, "x coordinate")?,
                    y = field(atom.position.y, 8, 3, "y coordinate")?,
                    z = field(atom.position.z, 8, 3, "z coordinate")?,
                    occ = field(atom.occupancy, 6, 2, "occupancy")?,
                    b = field(atom.temp_factor, 6, 2, "temperature factor")?,
                    el = atom.element,
                ));
                serial += 1;
            }
            last = Some(residue);
        }
        if let Some(res) = last {
            out.push_str(&format!(
                "TER   {serial:>5}      {:>3} {}{:>4}\n",
                res.res_name, chain.id, res.res_seq
            ));
            serial += 1;
        }
    }
    out.push_str("END\n");
    Ok(out)
}
