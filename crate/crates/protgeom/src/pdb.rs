//! Cα traces from PDB-format coordinate files.

use std::fmt::Write as _;

use protgeom_core::PointCloud;
use thiserror::Error;

/// The twenty standard amino-acid residue names.
pub const STANDARD_RESIDUES: [&str; 20] = [
    "ALA", "ARG", "ASN", "ASP", "CYS", "GLN", "GLU", "GLY", "HIS", "ILE", "LEU", "LYS", "MET",
    "PHE", "PRO", "SER", "THR", "TRP", "TYR", "VAL",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PdbError {
    #[error("line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("no ATOM records found")]
    NoAtoms,
    #[error("chain {chain:?} has {residues} residue(s), at least 2 are needed")]
    TooShort { chain: char, residues: usize },
    #[error("chain {requested:?} not found, available chains: {}", format_chains(.available))]
    ChainNotFound {
        requested: char,
        available: Vec<char>,
    },
}

fn format_chains(chains: &[char]) -> String {
    chains
        .iter()
        .map(|c| format!("{c:?}"))
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Residue {
    pub seq_number: i32,
    pub insertion_code: Option<char>,
    pub name: String,
    /// Cα coordinates in Ångström.
    pub ca_position: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub chain_id: char,
    /// Sorted by sequence number, then insertion code.
    pub residues: Vec<Residue>,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }
}

/// 1-based inclusive PDB columns `from..=to` of `line`, if present.
fn columns(line: &[u8], from: usize, to: usize) -> Option<&[u8]> {
    line.get(from - 1..to.min(line.len()))
}

fn column_char(line: &[u8], col: usize) -> Option<char> {
    line.get(col - 1).map(|&b| b as char)
}

fn trimmed(bytes: &[u8]) -> &str {
    std::str::from_utf8(bytes).map(str::trim).unwrap_or("")
}

fn record_name(line: &[u8]) -> &[u8] {
    let end = line.len().min(6);
    let name = &line[..end];
    let last = name.iter().rposition(|&b| b != b' ').map_or(0, |i| i + 1);
    &name[..last]
}

fn coordinate(line: &[u8], from: usize, number: usize, axis: &str) -> Result<f64, PdbError> {
    let malformed = |reason: String| PdbError::MalformedRecord {
        line: number,
        reason,
    };
    let field = columns(line, from, from + 7)
        .ok_or_else(|| malformed(format!("missing {axis} coordinate")))?;
    let text = std::str::from_utf8(field)
        .map_err(|_| malformed(format!("{axis} coordinate is not text")))?;
    let value: f64 = text.trim().parse().map_err(|_| {
        malformed(format!(
            "{axis} coordinate {:?} is not a number",
            text.trim()
        ))
    })?;
    if !value.is_finite() {
        return Err(malformed(format!("{axis} coordinate is not finite")));
    }
    Ok(value)
}

/// Parses PDB text into chains of Cα residues.
///
/// Only `ATOM` records of the first model are read. Each residue keeps the
/// first Cα whose alternate location is blank or `A`; residues outside the
/// twenty standard amino acids are skipped.
pub fn parse_pdb(text: impl AsRef<[u8]>) -> Result<Vec<Chain>, PdbError> {
    let mut chains: Vec<Chain> = Vec::new();
    let mut saw_atom = false;
    let mut skipped = 0usize;

    for (index, raw) in text.as_ref().split(|&b| b == b'\n').enumerate() {
        let number = index + 1;
        let line = raw.strip_suffix(b"\r").unwrap_or(raw);
        match record_name(line) {
            b"ENDMDL" | b"END" => break,
            b"ATOM" => {}
            _ => continue,
        }
        saw_atom = true;
        if line.len() < 54 {
            return Err(PdbError::MalformedRecord {
                line: number,
                reason: format!(
                    "ATOM record has {} columns, coordinates need 54",
                    line.len()
                ),
            });
        }
        let position = [
            coordinate(line, 31, number, "x")?,
            coordinate(line, 39, number, "y")?,
            coordinate(line, 47, number, "z")?,
        ];

        if trimmed(&line[12..16]) != "CA" || !matches!(line[16], b' ' | b'A') {
            continue;
        }
        let name = trimmed(&line[17..20]);
        if !STANDARD_RESIDUES.contains(&name) {
            log::debug!("line {number}: skipping non-standard residue {name:?}");
            skipped += 1;
            continue;
        }
        let seq_number: i32 =
            trimmed(&line[22..26])
                .parse()
                .map_err(|_| PdbError::MalformedRecord {
                    line: number,
                    reason: format!(
                        "residue number {:?} is not an integer",
                        trimmed(&line[22..26])
                    ),
                })?;
        let chain_id = column_char(line, 22).unwrap_or(' ');
        let insertion_code = column_char(line, 27).filter(|c| *c != ' ');

        let residue = Residue {
            seq_number,
            insertion_code,
            name: name.to_string(),
            ca_position: position,
        };
        match chains.iter_mut().find(|c| c.chain_id == chain_id) {
            Some(chain) => chain.residues.push(residue),
            None => chains.push(Chain {
                chain_id,
                residues: vec![residue],
            }),
        }
    }

    if !saw_atom {
        return Err(PdbError::NoAtoms);
    }
    if skipped > 0 {
        log::warn!("skipped {skipped} Cα atom(s) of non-standard residues");
    }
    for chain in &mut chains {
        // Stable sort, so the first record of a repeated residue comes first.
        chain
            .residues
            .sort_by_key(|r| (r.seq_number, r.insertion_code));
        chain
            .residues
            .dedup_by_key(|r| (r.seq_number, r.insertion_code));
    }
    Ok(chains)
}

/// Picks `requested` from `chains`, or the first chain when `None`.
pub fn select_chain(chains: &[Chain], requested: Option<char>) -> Result<&Chain, PdbError> {
    let available = || chains.iter().map(|c| c.chain_id).collect();
    match requested {
        Some(id) => {
            chains
                .iter()
                .find(|c| c.chain_id == id)
                .ok_or_else(|| PdbError::ChainNotFound {
                    requested: id,
                    available: available(),
                })
        }
        None => chains.first().ok_or(PdbError::NoAtoms),
    }
}

/// The `L x 3` matrix of Cα positions in chain order.
pub fn extract_point_cloud(chain: &Chain) -> Result<PointCloud, PdbError> {
    if chain.residues.len() < 2 {
        return Err(PdbError::TooShort {
            chain: chain.chain_id,
            residues: chain.residues.len(),
        });
    }
    let rows: Vec<[f64; 3]> = chain.residues.iter().map(|r| r.ca_position).collect();
    Ok(PointCloud::from_rows(&rows).expect("finite coordinates of at least two residues"))
}

/// Minimal `ATOM` records for the Cα atoms of `chains`, ending with `END`.
pub fn write_ca_records(chains: &[Chain]) -> String {
    let mut out = String::new();
    let mut serial = 1;
    for chain in chains {
        for r in &chain.residues {
            let [x, y, z] = r.ca_position;
            let _ = writeln!(
                out,
                "ATOM  {:>5}  CA  {:>3} {}{:>4}{}   {:>8.3}{:>8.3}{:>8.3}{:>6.2}{:>6.2}           C",
                serial % 100_000,
                r.name,
                chain.chain_id,
                r.seq_number,
                r.insertion_code.unwrap_or(' '),
                x,
                y,
                z,
                1.0,
                0.0,
            );
            serial += 1;
        }
    }
    out.push_str("END\n");
    out
}
