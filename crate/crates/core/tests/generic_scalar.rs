use calderon::forward::{solve_semilinear, SolveOptions};
use calderon::{CoefficientField, FieldVector, FractionalOrder, Grid, GridF32, NonlocalOperator, OperatorF32};

#[test]
fn single_precision_pipeline_tracks_double() {
    let g32: GridF32 = Grid::from_physical(4.0, 65, (-1.0, 1.0), (1.25, 3.0), (-3.0, -1.25), None).unwrap();
    let g64 = Grid::from_physical(4.0, 65, (-1.0, 1.0), (1.25, 3.0), (-3.0, -1.25), None).unwrap();
    let op32: OperatorF32 = NonlocalOperator::assemble(&g32, FractionalOrder::new(0.5f32).unwrap()).unwrap();
    let op64 = NonlocalOperator::assemble(&g64, FractionalOrder::new(0.5).unwrap()).unwrap();
    let m = g64.omega().len();
    let c32 = CoefficientField::new(&g32, vec![vec![1.0f32; m], vec![2.0; m]]).unwrap();
    let c64 = CoefficientField::new(&g64, vec![vec![1.0f64; m], vec![2.0; m]]).unwrap();
    let f32_in = FieldVector::supported_on(&g32, g32.w1(), |x| 1e-2 * (x - 1.25) * (3.0 - x));
    let f64_in = FieldVector::supported_on(&g64, g64.w1(), |x| 1e-2 * (x - 1.25) * (3.0 - x));
    let u32 = solve_semilinear(&op32, &c32, &f32_in, &SolveOptions::with_tol(1e-7)).unwrap().solution;
    let u64 = solve_semilinear(&op64, &c64, &f64_in, &SolveOptions::default()).unwrap().solution;
    let scale = u64.max_norm();
    for i in 0..u64.len() {
        assert!((u32[i] as f64 - u64[i]).abs() <= 1e-4 * scale, "node {i}");
    }
}
