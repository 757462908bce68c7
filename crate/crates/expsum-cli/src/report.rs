//! Report shapes emitted by the harness. Everything numeric is exact:
//! polygons serialize as `num/den` strings, flags are recomputed from the
//! embedded polygons and never free-set.

use serde::Serialize;

use expsum::charsum::{EmbeddingRecord, LCoefficient};
use expsum::gnp::GnpReport;
use expsum::polygon::Polygon;

#[derive(Serialize)]
pub struct RunReport {
    pub d: usize,
    pub p: u64,
    pub a: usize,
    /// the coefficients actually used (a_0 dropped), echoed back
    pub coeffs: Vec<String>,
    /// set when a constant term was accepted and discarded
    pub notice: Option<String>,
    pub precision: u32,
    pub embedding: EmbeddingRecord,
    pub oracle_l_coefficients: Vec<LCoefficient>,
    pub oracle_polygon: Polygon,
    pub dwork_polygon: Polygon,
    pub hodge_polygon: Polygon,
    pub generic_polygon: Option<GnpReport>,
    pub flags: RunFlags,
    pub timings_ms: Timings,
}

#[derive(Serialize)]
pub struct RunFlags {
    pub trace_formula_match: bool,
    pub np_equals_hodge: bool,
    pub np_equals_generic: bool,
    pub contraction_hypothesis: bool,
}

#[derive(Serialize)]
pub struct Timings {
    pub oracle_ms: u128,
    pub dwork_ms: u128,
    pub total_ms: u128,
}

#[derive(Serialize)]
pub struct CounterexampleReport {
    pub d: usize,
    pub p: u64,
    pub reduction: String,
    pub oracle_polygon: Polygon,
    pub all_slopes_half: bool,
    pub zero_vector_in_w: bool,
}

#[derive(Serialize)]
pub struct MembershipReport {
    pub d: usize,
    pub r: usize,
    pub coeffs: Vec<String>,
    pub in_x: bool,
    pub in_y: bool,
    pub in_w: bool,
}

#[derive(Serialize)]
pub struct TriangularizeReport {
    pub m: usize,
    pub p: u64,
    pub a: usize,
    pub delta_scaled: i64,
    pub eta_scaled: i64,
    pub iterations: usize,
    pub minor_vals_scaled: Vec<i64>,
    pub np_twisted_power: Polygon,
    pub np_single: Polygon,
    pub minor_hull: Polygon,
    pub polygons_equal: bool,
    pub findings: Vec<String>,
}

#[derive(Serialize)]
pub struct ScanRow {
    pub p: u64,
    pub r: u64,
    pub obs_slopes: String,
    pub gnp_slopes: String,
    pub hp_slopes: String,
    pub eq_obs_gnp: bool,
    pub eq_obs_hp: bool,
    pub n_attaining: usize,
    pub runtime_ms: u128,
}

#[derive(Serialize)]
pub struct ScanReport {
    pub d: usize,
    pub mode: String,
    /// sampled mode only bounds the infimum from above
    pub caveat: Option<String>,
    pub rows: Vec<ScanRow>,
}
