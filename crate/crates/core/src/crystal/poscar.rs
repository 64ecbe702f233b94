//! VASP-5 POSCAR reading and writing.

use super::elements;
use super::lattice::{Lattice, Mat3};
use super::structure::{AtomSite, CrystalStructure};
use super::CrystalError;

fn syntax(line: usize, msg: impl Into<String>) -> CrystalError {
    CrystalError::Syntax { line, msg: msg.into() }
}

fn parse_floats(line: &str, lineno: usize, n: usize) -> Result<Vec<f64>, CrystalError> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    if toks.len() < n {
        return Err(syntax(lineno, format!("expected {n} numbers, found {}", toks.len())));
    }
    toks[..n]
        .iter()
        .map(|t| t.parse::<f64>().map_err(|_| syntax(lineno, format!("invalid number {t:?}"))))
        .collect()
}

// Strips POTCAR decorations such as `Mg_pv` or `O/abc123`.
fn clean_symbol(tok: &str) -> &str {
    tok.split(['_', '/']).next().unwrap_or(tok)
}

/// Parses VASP-5 POSCAR text (species-symbols line required).
pub fn parse_poscar(text: &str) -> Result<CrystalStructure, CrystalError> {
    let lines: Vec<&str> = text.lines().map(|l| l.trim_end_matches('\r')).collect();
    let get = |i: usize| lines.get(i).copied().ok_or_else(|| syntax(i + 1, "unexpected end of file"));

    let comment = get(0)?.trim().to_string();
    let scale = parse_floats(get(1)?, 2, 1)?[0];
    if !(scale > 0.0) {
        return Err(syntax(2, "scale factor must be positive"));
    }
    let mut vectors: Mat3 = [[0.0; 3]; 3];
    for (r, row) in vectors.iter_mut().enumerate() {
        let v = parse_floats(get(2 + r)?, 3 + r, 3)?;
        for k in 0..3 {
            row[k] = v[k] * scale;
        }
    }
    let lattice = Lattice::new(vectors).map_err(|_| syntax(3, "degenerate or left-handed lattice"))?;

    let symbols: Vec<&str> = get(5)?.split_whitespace().collect();
    if symbols.is_empty() {
        return Err(syntax(6, "missing species line"));
    }
    if symbols[0].parse::<f64>().is_ok() {
        return Err(syntax(6, "species symbols line missing (VASP-4 format is not supported)"));
    }
    let symbols: Vec<&str> = symbols.into_iter().map(clean_symbol).collect();
    if let Some(bad) = symbols.iter().find(|s| !elements::is_element(s)) {
        return Err(CrystalError::UnknownElement(bad.to_string()));
    }
    let counts: Vec<usize> = get(6)?
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|_| syntax(7, format!("invalid count {t:?}"))))
        .collect::<Result<_, _>>()?;
    if counts.len() != symbols.len() {
        return Err(syntax(7, format!("{} counts for {} species", counts.len(), symbols.len())));
    }
    let total: usize = counts.iter().sum();

    let mut idx = 7;
    let mut mode = get(idx)?.trim_start();
    if mode.starts_with(['S', 's']) {
        idx += 1;
        mode = get(idx)?.trim_start();
    }
    let cartesian = match mode.chars().next() {
        Some('D' | 'd') => false,
        Some('C' | 'c' | 'K' | 'k') => true,
        _ => return Err(syntax(idx + 1, format!("unknown coordinate mode {mode:?}"))),
    };
    let first = idx + 1;

    let coord_lines: Vec<(usize, &str)> = lines
        .iter()
        .enumerate()
        .skip(first)
        .take(total)
        .take_while(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i, *l))
        .collect();
    if coord_lines.len() != total {
        return Err(CrystalError::CountMismatch { expected: total, found: coord_lines.len() });
    }

    let mut sites = Vec::with_capacity(total);
    let species_iter = symbols.iter().zip(&counts).flat_map(|(s, &n)| std::iter::repeat_n(*s, n));
    for ((i, line), sp) in coord_lines.into_iter().zip(species_iter) {
        let v = parse_floats(line, i + 1, 3)?;
        let mut p = [v[0], v[1], v[2]];
        if cartesian {
            p = lattice.to_fractional(&[p[0] * scale, p[1] * scale, p[2] * scale]);
        }
        sites.push(AtomSite::new(sp, p));
    }
    CrystalStructure::new(lattice, sites, comment)
}

/// Emits Direct-mode VASP-5 text with scale 1.0. Sites are grouped by species
/// in first-appearance order.
pub fn write_poscar(s: &CrystalStructure) -> String {
    let mut out = String::new();
    let comment = if s.comment.is_empty() { s.reduced_formula() } else { s.comment.replace('\n', " ") };
    out.push_str(&comment);
    out.push('\n');
    out.push_str("1.0\n");
    for row in s.lattice.vectors() {
        out.push_str(&format!("  {:?} {:?} {:?}\n", row[0], row[1], row[2]));
    }
    let species = s.species();
    out.push_str(&species.join(" "));
    out.push('\n');
    let counts: Vec<String> = species
        .iter()
        .map(|sp| s.sites().iter().filter(|x| &x.species == sp).count().to_string())
        .collect();
    out.push_str(&counts.join(" "));
    out.push('\n');
    out.push_str("Direct\n");
    for sp in &species {
        for site in s.sites().iter().filter(|x| &x.species == sp) {
            let f = site.frac();
            out.push_str(&format!("  {:?} {:?} {:?}\n", f[0], f[1], f[2]));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{mgmno3, MGMNO3_POSCAR};
    use proptest::prelude::*;

    #[test]
    fn parses_mgmno3() {
        let s = parse_poscar(MGMNO3_POSCAR).unwrap();
        let expected = mgmno3();
        assert_eq!(s.len(), 5);
        for (a, b) in s.sites().iter().zip(expected.sites()) {
            assert_eq!(a.species, b.species);
            assert_eq!(a.frac(), b.frac());
        }
        assert_eq!(s.lattice.lengths(), [3.75; 3]);
    }

    #[test]
    fn writes_species_line() {
        let text = write_poscar(&mgmno3());
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[5], "Mg Mn O");
        assert_eq!(lines[6], "1 1 3");
        assert_eq!(lines[7], "Direct");
    }

    #[test]
    fn single_atom_file() {
        let s = CrystalStructure::new(Lattice::cubic(1.0).unwrap(), vec![AtomSite::new("H", [0.0; 3])], "H").unwrap();
        let text = write_poscar(&s);
        assert_eq!(text.lines().count(), 9);
        assert_eq!(text.lines().nth(7), Some("Direct"));
        assert_eq!(parse_poscar(&text).unwrap(), s);
    }

    #[test]
    fn count_mismatch() {
        let text = "x\n1.0\n3 0 0\n0 3 0\n0 0 3\nMg Mn O\n1 1 3\nDirect\n0 0 0\n0.5 0.5 0.5\n0 0.5 0.5\n0.5 0 0.5\n";
        assert!(matches!(parse_poscar(text), Err(CrystalError::CountMismatch { expected: 5, found: 4 })));
    }

    #[test]
    fn errors() {
        let vasp4 = "x\n1.0\n3 0 0\n0 3 0\n0 0 3\n1 1\nDirect\n0 0 0\n0.5 0.5 0.5\n";
        assert!(matches!(parse_poscar(vasp4), Err(CrystalError::Syntax { line: 6, .. })));
        let unknown = "x\n1.0\n3 0 0\n0 3 0\n0 0 3\nQq\n1\nDirect\n0 0 0\n";
        assert!(matches!(parse_poscar(unknown), Err(CrystalError::UnknownElement(_))));
        let bad_num = "x\n1.0\n3 0 0\n0 3 zz\n0 0 3\nH\n1\nDirect\n0 0 0\n";
        assert!(matches!(parse_poscar(bad_num), Err(CrystalError::Syntax { line: 4, .. })));
        let bad_mode = "x\n1.0\n3 0 0\n0 3 0\n0 0 3\nH\n1\nFoo\n0 0 0\n";
        assert!(matches!(parse_poscar(bad_mode), Err(CrystalError::Syntax { line: 8, .. })));
        assert!(matches!(parse_poscar("x\n"), Err(CrystalError::Syntax { line: 2, .. })));
    }

    #[test]
    fn cartesian_crlf_and_scale() {
        let text = "cart\r\n2.0\r\n2 0 0\r\n0 2 0\r\n0 0 2\r\nNa Cl\r\n1 1\r\nCartesian\r\n0 0 0\r\n1 1 1\r\n";
        let s = parse_poscar(text).unwrap();
        assert_eq!(s.lattice.lengths(), [4.0; 3]);
        assert_eq!(s.sites()[1].frac(), &[0.5, 0.5, 0.5]);
        assert_eq!(s.sites()[1].species, "Cl");
    }

    #[test]
    fn selective_dynamics_and_decorated_symbols() {
        let text = "sd\n1.0\n3 0 0\n0 3 0\n0 0 3\nMg_pv O\n1 1\nSelective dynamics\nDirect\n0 0 0 T T T\n0.5 0.5 0.5 F F F\n";
        let s = parse_poscar(text).unwrap();
        assert_eq!(s.species(), vec!["Mg", "O"]);
    }

    fn arb_structure() -> impl Strategy<Value = CrystalStructure> {
        (
            2.0f64..14.0,
            2.0f64..14.0,
            2.0f64..14.0,
            1.2f64..1.9,
            1.2f64..1.9,
            1.2f64..1.9,
            prop::collection::vec((0usize..3, prop::array::uniform3(0.0f64..1.0)), 1..16),
        )
            .prop_filter_map("valid cell", |(a, b, c, al, be, ga, sites)| {
                let p = crate::crystal::LatticeParams { a, b, c, alpha: al, beta: be, gamma: ga };
                let lattice = crate::crystal::lattice_from_parameters(&p).ok()?;
                let names = ["Ba", "Ti", "O"];
                // grouped by species so the writer preserves site order
                let mut sites: Vec<_> = sites.into_iter().collect();
                sites.sort_by_key(|(k, _)| *k);
                let sites = sites.into_iter().map(|(k, f)| AtomSite::new(names[k], f)).collect();
                CrystalStructure::new(lattice, sites, "random").ok()
            })
    }

    proptest! {
        #[test]
        fn round_trip(s in arb_structure()) {
            let back = parse_poscar(&write_poscar(&s)).unwrap();
            prop_assert_eq!(back.len(), s.len());
            prop_assert_eq!(&back.comment, &s.comment);
            for (x, y) in back.sites().iter().zip(s.sites()) {
                prop_assert_eq!(&x.species, &y.species);
                for k in 0..3 {
                    let d = crate::crystal::min_image_delta(x.frac(), y.frac());
                    prop_assert!(d[k].abs() < 1e-12);
                }
            }
            for i in 0..3 {
                for j in 0..3 {
                    prop_assert!((back.lattice.vectors()[i][j] - s.lattice.vectors()[i][j]).abs() < 1e-12);
                }
            }
        }
    }
}
