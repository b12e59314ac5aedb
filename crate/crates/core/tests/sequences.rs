use std::path::PathBuf;

use lds_core::lds::{build_niederreiter_nut, GeneratorId, Order};
use lds_core::tvalue::pair_t_table;

fn jk08() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/new-joe-kuo-6.21201")
}

// First 16 points of scipy's unscrambled 12-dimensional Sobol' sequence
// (same direction numbers), scaled by 2^32. scipy emits them in Gray-code
// order.
const SCIPY_SOBOL_12: [[u32; 12]; 16] = [
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [
        2147483648, 2147483648, 2147483648, 2147483648, 2147483648, 2147483648, 2147483648,
        2147483648, 2147483648, 2147483648, 2147483648, 2147483648,
    ],
    [
        3221225472, 1073741824, 1073741824, 1073741824, 3221225472, 3221225472, 1073741824,
        3221225472, 3221225472, 3221225472, 3221225472, 3221225472,
    ],
    [
        1073741824, 3221225472, 3221225472, 3221225472, 1073741824, 1073741824, 3221225472,
        1073741824, 1073741824, 1073741824, 1073741824, 1073741824,
    ],
    [
        1610612736, 1610612736, 2684354560, 3758096384, 1610612736, 536870912, 1610612736,
        3758096384, 3758096384, 2684354560, 3758096384, 1610612736,
    ],
    [
        3758096384, 3758096384, 536870912, 1610612736, 3758096384, 2684354560, 3758096384,
        1610612736, 1610612736, 536870912, 1610612736, 3758096384,
    ],
    [
        2684354560, 536870912, 3758096384, 2684354560, 2684354560, 3758096384, 536870912,
        536870912, 536870912, 1610612736, 536870912, 2684354560,
    ],
    [
        536870912, 2684354560, 1610612736, 536870912, 536870912, 1610612736, 2684354560,
        2684354560, 2684354560, 3758096384, 2684354560, 536870912,
    ],
    [
        805306368, 1342177280, 4026531840, 1879048192, 2415919104, 1342177280, 1879048192,
        4026531840, 4026531840, 1342177280, 2952790016, 268435456,
    ],
    [
        2952790016, 3489660928, 1879048192, 4026531840, 268435456, 3489660928, 4026531840,
        1879048192, 1879048192, 3489660928, 805306368, 2415919104,
    ],
    [
        4026531840, 268435456, 2952790016, 805306368, 1342177280, 2415919104, 805306368, 805306368,
        805306368, 2415919104, 1879048192, 3489660928,
    ],
    [
        1879048192, 2415919104, 805306368, 2952790016, 3489660928, 268435456, 2952790016,
        2952790016, 2952790016, 268435456, 4026531840, 1342177280,
    ],
    [
        1342177280, 805306368, 1342177280, 2415919104, 4026531840, 1879048192, 268435456,
        268435456, 268435456, 4026531840, 1342177280, 1879048192,
    ],
    [
        3489660928, 2952790016, 3489660928, 268435456, 1879048192, 4026531840, 2415919104,
        2415919104, 2415919104, 1879048192, 3489660928, 4026531840,
    ],
    [
        2415919104, 1879048192, 268435456, 3489660928, 805306368, 2952790016, 1342177280,
        3489660928, 3489660928, 805306368, 2415919104, 2952790016,
    ],
    [
        268435456, 4026531840, 2415919104, 1342177280, 2952790016, 805306368, 3489660928,
        1342177280, 1342177280, 2952790016, 268435456, 805306368,
    ],
];

#[test]
fn sobol_matches_scipy_in_gray_order() {
    let g = GeneratorId::SobolJoeKuo08
        .build(12, 32, Some(&jk08()))
        .unwrap();
    for (k, want) in SCIPY_SOBOL_12.iter().enumerate() {
        let n = (k ^ (k >> 1)) as u64;
        assert_eq!(g.raw_point(n).unwrap(), want.to_vec(), "k={k}");
    }
    let gray: Vec<Vec<u32>> = {
        let mut b = g.block(4, Order::Gray).unwrap();
        let mut v = Vec::new();
        while b.advance().is_some() {
            v.push(b.raw().to_vec());
        }
        v
    };
    let want: Vec<Vec<u32>> = SCIPY_SOBOL_12.iter().map(|r| r.to_vec()).collect();
    assert_eq!(gray, want);
}

#[test]
fn full_direction_file_loads() {
    let g = GeneratorId::SobolJoeKuo08
        .build(21_201, 32, Some(&jk08()))
        .unwrap();
    assert_eq!(g.dim(), 21_201);
    assert!(g.matrices().iter().all(|c| c.is_nut()));
}

#[test]
fn nut_reaches_the_largest_dimension() {
    let g = build_niederreiter_nut(21_201, 32).unwrap();
    assert_eq!(g.degree(21_200), Some(18));
    assert!(g.matrices().iter().all(|c| c.is_nut()));
}

#[test]
fn nut_first_table_row() {
    let g = build_niederreiter_nut(360, 32).unwrap();
    let t = pair_t_table(&g, 10, 360).unwrap();
    assert_eq!(
        t.trimmed_histogram(),
        &[163, 11321, 23097, 16270, 7947, 3495, 1472, 576, 231, 48]
    );
    assert_eq!(t.total(), 64_620);
}

#[test]
fn joekuo08_first_table_row() {
    let g = GeneratorId::SobolJoeKuo08
        .build(360, 32, Some(&jk08()))
        .unwrap();
    let t = pair_t_table(&g, 10, 360).unwrap();
    assert_eq!(
        t.trimmed_histogram(),
        &[214, 8201, 20243, 18004, 10275, 4819, 1924, 777, 163]
    );
}

#[test]
fn largest_nut_table_tail() {
    let g = build_niederreiter_nut(1024, 32).unwrap();
    let t = pair_t_table(&g, 20, 1024).unwrap();
    assert_eq!(t.trimmed_histogram().len(), 14);
    assert_eq!(t.histogram[13], 3);
    assert_eq!(t.total(), 523_776);
}

#[test]
fn pair_dump_agrees_with_histogram() {
    let g = build_niederreiter_nut(40, 32).unwrap();
    let t = pair_t_table(&g, 12, 40).unwrap();
    let mut h = vec![0u64; 13];
    for (i, s, v) in t.pairs() {
        assert!(i < s);
        h[v as usize] += 1;
    }
    assert_eq!(h, t.histogram);
}
