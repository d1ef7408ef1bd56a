use proptest::prelude::*;
use rainfield::grid::{DayLabel, GridManifest, GridSpec, LocationEntry, RainfallField};
use rainfield::io::{load_dataset, read_field, write_field, write_manifest};

fn masked(rows: usize, cols: usize, mask: &[bool]) -> Option<GridManifest> {
    let mut entries = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if mask[r * cols + c] {
                entries.push(LocationEntry {
                    id: entries.len(),
                    row: r,
                    col: c,
                });
            }
        }
    }
    if entries.is_empty() {
        return None;
    }
    let grid = GridSpec {
        rows,
        cols,
        lat0: 6.5,
        lon0: 66.5,
        dlat: 1.0,
        dlon: 1.0,
    };
    Some(GridManifest::new(grid, &entries).unwrap())
}

fn cells() -> impl Strategy<Value = (usize, usize, Vec<bool>)> {
    (1usize..7, 1usize..7).prop_flat_map(|(r, c)| (Just(r), Just(c), proptest::collection::vec(any::<bool>(), r * c)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn neighbours_are_symmetric_land_cells((rows, cols, mask) in cells()) {
        let Some(m) = masked(rows, cols, &mask) else { return Ok(()) };
        let nb = m.neighbor_sets();
        let locs = m.locations();
        for s in 0..m.n_locations() {
            prop_assert!(nb.of(s).len() <= 4);
            for &o in nb.of(s) {
                prop_assert!(nb.of(o).contains(&s));
                prop_assert_eq!(locs[s].row.abs_diff(locs[o].row) + locs[s].col.abs_diff(locs[o].col), 1);
            }
            let adjacent = locs.iter().filter(|l| l.row.abs_diff(locs[s].row) + l.col.abs_diff(locs[s].col) == 1).count();
            prop_assert_eq!(adjacent, nb.of(s).len());
        }
    }

    #[test]
    fn field_files_round_trip_bit_exactly(
        n in 1usize..5,
        values in proptest::collection::vec(0.0f64..500.0, 1..40),
    ) {
        let days = values.len();
        let all: Vec<f64> = (0..n).flat_map(|s| values.iter().map(move |v| v * (s + 1) as f64 / 3.0)).collect();
        let field = RainfallField::new(n, DayLabel::monsoon_sequence(1951, days), all).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("field.csv");
        write_field(&path, &field).unwrap();
        let back = read_field::<f64>(&path, n).unwrap();
        prop_assert_eq!(back.values(), field.values());
        prop_assert_eq!(back.days(), field.days());
    }

    #[test]
    fn aggregate_recovers_a_known_total(parts in proptest::collection::vec(proptest::collection::vec(0.0f64..100.0, 5), 1..8)) {
        let field = RainfallField::from_series(&parts, DayLabel::monsoon_sequence(2000, 5)).unwrap();
        let y = field.aggregate();
        for t in 0..5 {
            let total: f64 = parts.iter().map(|p| p[t]).sum();
            prop_assert!((y.values()[t] - total).abs() <= 1e-9 * total.max(1.0));
        }
    }
}

#[test]
fn dataset_loads_from_manifest_and_field_files() {
    let m = masked(2, 3, &[true, true, false, true, true, true]).unwrap();
    let field = RainfallField::from_series(
        &[vec![1.0, 2.5], vec![0.0, 3.0], vec![7.25, 0.5], vec![4.0, 4.0], vec![0.1, 12.0]],
        DayLabel::monsoon_sequence(1990, 2),
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_manifest(&dir.path().join("m.json"), &m).unwrap();
    write_field(&dir.path().join("x.csv"), &field).unwrap();
    let (m2, f2) = load_dataset::<f64>(&dir.path().join("m.json"), &dir.path().join("x.csv")).unwrap();
    assert_eq!(m2, m);
    assert_eq!(f2.values(), field.values());
    assert_eq!(m2.neighbor_sets().of(4), &[3]);
}
