//! Parse a CIF block, inspect the cell, and write it back out.

use sfcm::structure_io::{parse_cif, write_cif};

const UREA: &str = "\
data_urea
_cell_length_a 5.565
_cell_length_b 5.565
_cell_length_c 4.684
_cell_angle_alpha 90
_cell_angle_beta 90
_cell_angle_gamma 90
loop_
_atom_site_label
_atom_site_type_symbol
_atom_site_fract_x
_atom_site_fract_y
_atom_site_fract_z
C1 C 0.0000 0.5000 0.3260(3)
O1 O 0.0000 0.5000 0.5953
N1 N 0.1459 0.6459 0.1766
H1 H 0.2575 0.7575 0.2827
H2 H 0.1441 0.6441 -0.0380
";

fn main() {
    let cell = parse_cif(UREA).expect("valid CIF");
    let l = &cell.lattice;
    println!("{}: a={} b={} c={} volume={:.3} Å³", cell.id, l.a, l.b, l.c, l.volume());
    for site in &cell.sites {
        let p = l.to_cartesian(site.frac);
        println!("  {:<2} frac {:?} -> cart ({:.3}, {:.3}, {:.3})", site.element, site.frac, p.x, p.y, p.z);
    }
    let text = write_cif(&cell);
    assert_eq!(parse_cif(&text).unwrap(), cell);
    println!("\nround-tripped CIF:\n{text}");
}
