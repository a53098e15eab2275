//! Seeded random weights, sweep drivers and admissible-region tables.

mod region;
mod sweep;
mod weights;

pub use region::{region_curves, write_region_csv, RegionRow};
pub use sweep::{
    cell_weight, collect_sweep, enumerate_cells, linspace, run_sweep, sidecar_path, strip_timing, write_singular_value_csv,
    write_sweep_csv, AggregateKind, AggregateRow, Cell, Experiment, Grids, ParamValue, SweepConfig, SweepOutput,
    SweepRecord, CSV_HEADER, MAX_CELL_DIM, SV_CSV_HEADER,
};
pub use weights::{
    derived_seed, random_hermitian, random_unitary, random_weight_class, random_weight_with_norm,
    random_weight_with_spectrum, rng_from_seed, WClass,
};
