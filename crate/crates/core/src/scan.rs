//! Grid engines: region maps over the symmetric family, fidelity surfaces
//! over `(t_A, t_B)`, gain sweeps and best-gain robustness maps.
//!
//! Every grid is row-major with the first axis outer. Cells are evaluated
//! in parallel and collected in index order, so output does not depend on
//! scheduling.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fidelity::{cft, mean_fidelity, Gain};
use crate::gaussian::{make_state, ppt_entangled, Block2, ChannelParams, TwoModeState};
use crate::symmetry::canonicalize;
use crate::witness::{classify, max_fidelity_ratio, w_prod, w_rob, w_sum, RegionLabel};
use crate::{EPS_W, TOOLKIT_VERSION};

/// `A = B = diag(Q, P)`, `C = diag(K_Q, K_P)`, scanned over the normalized
/// correlations `K̄_Q = K_Q / Q` and `K̄_P = K_P / P`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SymmetricFamilyParams {
    pub q: f64,
    pub p: f64,
}

impl SymmetricFamilyParams {
    pub fn new(q: f64, p: f64) -> Result<Self> {
        if !(q.is_finite() && p.is_finite() && q > 0.0 && p > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "family variances must be positive, got Q={q}, P={p}"
            )));
        }
        Ok(SymmetricFamilyParams { q, p })
    }

    pub fn state(&self, kq_bar: f64, kp_bar: f64) -> TwoModeState {
        let d = Block2::new(self.q, 0.0, 0.0, self.p);
        make_state(&d, &d, &Block2::new(kq_bar * self.q, 0.0, 0.0, kp_bar * self.p))
            .expect("diagonal blocks are symmetric")
    }
}

/// `steps` evenly spaced values from `min` to `max` inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, steps: usize) -> Result<Self> {
        if steps < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 steps, got {steps}")));
        }
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(Error::InvalidGrid(format!(
                "axis bounds must increase, got [{min}, {max}]"
            )));
        }
        Ok(Axis { min, max, steps })
    }

    /// `1/n, 2/n, …, 1`: the unit interval without the total-loss point.
    pub fn open_unit(steps: usize) -> Result<Self> {
        if steps < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 steps, got {steps}")));
        }
        Ok(Axis {
            min: 1.0 / steps as f64,
            max: 1.0,
            steps,
        })
    }

    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.steps {
            return self.max;
        }
        self.min + (self.max - self.min) * i as f64 / (self.steps - 1) as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.steps).map(|i| self.value(i)).collect()
    }
}

/// Channel realizing `g t_A / t_B = ratio` for given `g` and `t_B`.
pub fn channel_for_ratio(ratio: f64, g: Gain, tb: f64) -> Result<ChannelParams> {
    if g.value() == 0.0 {
        return Err(Error::InvalidGain(0.0));
    }
    if !(ratio.is_finite() && ratio >= 0.0) {
        return Err(Error::InvalidGrid(format!("ratio must be non-negative, got {ratio}")));
    }
    ChannelParams::new(ratio * tb / g.value(), tb)
}

fn grid2<T: Send>(rows: usize, cols: usize, f: impl Fn(usize, usize) -> T + Sync) -> Vec<T> {
    (0..rows * cols)
        .into_par_iter()
        .map(|k| f(k / cols, k % cols))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegionCell {
    pub kq_bar: f64,
    pub kp_bar: f64,
    pub label: RegionLabel,
    pub w_sum: f64,
    pub w_rob: f64,
    /// In the canonical basis.
    pub w_prod: f64,
    /// `false` for unphysical cells.
    pub ppt_entangled: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegionGrid {
    pub family: SymmetricFamilyParams,
    pub channel: ChannelParams,
    pub g: f64,
    pub kq_axis: Axis,
    pub kp_axis: Axis,
    pub cells: Vec<RegionCell>,
}

impl RegionGrid {
    pub fn cell(&self, i: usize, j: usize) -> &RegionCell {
        &self.cells[i * self.kp_axis.steps + j]
    }

    /// Every pair of horizontally or vertically adjacent cells, as
    /// `((i, j), (i', j'))` index pairs.
    pub fn adjacent_pairs(&self) -> Vec<((usize, usize), (usize, usize))> {
        let (n, m) = (self.kq_axis.steps, self.kp_axis.steps);
        let mut out = Vec::with_capacity(2 * n * m);
        for i in 0..n {
            for j in 0..m {
                if i + 1 < n {
                    out.push(((i, j), (i + 1, j)));
                }
                if j + 1 < m {
                    out.push(((i, j), (i, j + 1)));
                }
            }
        }
        out
    }

    pub fn count(&self, label: RegionLabel) -> usize {
        self.cells.iter().filter(|c| c.label == label).count()
    }
}

fn region_cell(state: &TwoModeState, ch: &ChannelParams, g: Gain, kq_bar: f64, kp_bar: f64) -> RegionCell {
    let label = classify(state, ch, g).unwrap_or(RegionLabel::Unphysical);
    let ppt = label != RegionLabel::Unphysical && ppt_entangled(state).unwrap_or(false);
    let w_prod = canonicalize(state, ch, g)
        .map(|c| w_prod(&c.rotated, ch, g))
        .unwrap_or(f64::NAN);
    RegionCell {
        kq_bar,
        kp_bar,
        label,
        w_sum: w_sum(state, ch, g),
        w_rob: w_rob(state),
        w_prod,
        ppt_entangled: ppt,
    }
}

/// Classifies the symmetric family on an `n × n` grid over
/// `K̄_Q, K̄_P ∈ [−1, 1]`. Unphysical cells are labelled, not skipped.
pub fn region_scan(fam: &SymmetricFamilyParams, ch: &ChannelParams, g: Gain, n: usize) -> Result<RegionGrid> {
    let axis = Axis::new(-1.0, 1.0, n)?;
    let cells = grid2(n, n, |i, j| {
        let (kq, kp) = (axis.value(i), axis.value(j));
        region_cell(&fam.state(kq, kp), ch, g, kq, kp)
    });
    Ok(RegionGrid {
        family: *fam,
        channel: *ch,
        g: g.value(),
        kq_axis: axis,
        kp_axis: axis,
        cells,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SurfaceCell {
    pub ta: f64,
    pub tb: f64,
    /// `NaN` when `det E ≤ 0` (unphysical input).
    pub fidelity: f64,
    pub cft: f64,
    pub quantum: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SurfaceGrid {
    pub g: f64,
    pub ta_axis: Axis,
    pub tb_axis: Axis,
    pub cells: Vec<SurfaceCell>,
}

impl SurfaceGrid {
    pub fn cell(&self, i: usize, j: usize) -> &SurfaceCell {
        &self.cells[i * self.tb_axis.steps + j]
    }
}

/// `F̄` over `t_A, t_B ∈ {1/n, …, 1}` at fixed gain.
pub fn fidelity_surface(state: &TwoModeState, g: Gain, n: usize) -> Result<SurfaceGrid> {
    let axis = Axis::open_unit(n)?;
    let threshold = cft(g);
    let cells = grid2(n, n, |i, j| {
        let (ta, tb) = (axis.value(i), axis.value(j));
        let ch = ChannelParams::new(ta, tb).expect("axis lies in (0, 1]");
        let fidelity = mean_fidelity(state, &ch, g).unwrap_or(f64::NAN);
        SurfaceCell {
            ta,
            tb,
            fidelity,
            cft: threshold,
            quantum: fidelity > threshold + EPS_W,
        }
    });
    Ok(SurfaceGrid {
        g: g.value(),
        ta_axis: axis,
        tb_axis: axis,
        cells,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GainPoint {
    pub g: f64,
    pub fidelity: f64,
    pub cft: f64,
    pub w_sum: f64,
    pub quantum: bool,
}

/// `F̄`, `F_CFT` and `W_sum` for `g` on `steps` points of `[0, g_max]`.
pub fn gain_sweep(state: &TwoModeState, ch: &ChannelParams, g_max: f64, steps: usize) -> Result<Vec<GainPoint>> {
    if !(g_max.is_finite() && g_max > 0.0) {
        return Err(Error::InvalidGain(g_max));
    }
    let axis = Axis::new(0.0, g_max, steps)?;
    Ok((0..steps)
        .into_par_iter()
        .map(|i| {
            let g = Gain::new(axis.value(i)).expect("axis is non-negative");
            let fidelity = mean_fidelity(state, ch, g).unwrap_or(f64::NAN);
            let threshold = cft(g);
            GainPoint {
                g: g.value(),
                fidelity,
                cft: threshold,
                w_sum: w_sum(state, ch, g),
                quantum: fidelity > threshold + EPS_W,
            }
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RobustnessCell {
    pub ta: f64,
    pub tb: f64,
    pub best_g: f64,
    /// `max_g F̄ / F_CFT`.
    pub ratio: f64,
    pub quantum: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RobustnessGrid {
    pub ta_axis: Axis,
    pub tb_axis: Axis,
    pub cells: Vec<RobustnessCell>,
}

impl RobustnessGrid {
    pub fn cell(&self, i: usize, j: usize) -> &RobustnessCell {
        &self.cells[i * self.tb_axis.steps + j]
    }
}

/// Best-gain quantum flag over `t_A, t_B ∈ {1/n, …, 1}`.
pub fn robustness_sweep(state: &TwoModeState, n: usize) -> Result<RobustnessGrid> {
    let axis = Axis::open_unit(n)?;
    let cells = grid2(n, n, |i, j| {
        let (ta, tb) = (axis.value(i), axis.value(j));
        robustness_cell(state, ta, tb)
    });
    Ok(RobustnessGrid {
        ta_axis: axis,
        tb_axis: axis,
        cells,
    })
}

pub fn robustness_cell(state: &TwoModeState, ta: f64, tb: f64) -> RobustnessCell {
    let ch = ChannelParams::new(ta, tb).expect("transmissibility in [0, 1]");
    let best = max_fidelity_ratio(state, &ch);
    RobustnessCell {
        ta,
        tb,
        best_g: best.g,
        ratio: best.ratio,
        quantum: best.quantum(),
    }
}

/// Nine significant digits; integers and zero stay short.
pub fn format_sig9(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x.fract() == 0.0 && x.abs() < 1e15 {
        return format!("{}", x as i64);
    }
    let magnitude = x.abs().log10().floor() as i32;
    if (-5..9).contains(&magnitude) {
        let decimals = (8 - magnitude).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.8e}")
    }
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

pub const REGION_HEADER: [&str; 3] = ["kq_bar", "kp_bar", "region"];
pub const SURFACE_HEADER: [&str; 5] = ["ta", "tb", "fidelity", "cft", "quantum"];
pub const ROBUSTNESS_HEADER: [&str; 5] = ["ta", "tb", "best_g", "ratio", "quantum"];
pub const GAIN_HEADER: [&str; 5] = ["g", "fidelity", "cft", "w_sum", "quantum"];

pub fn write_region_csv<W: Write>(grid: &RegionGrid, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REGION_HEADER)?;
    for c in &grid.cells {
        w.write_record([format_sig9(c.kq_bar), format_sig9(c.kp_bar), c.label.code().to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_surface_csv<W: Write>(grid: &SurfaceGrid, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SURFACE_HEADER)?;
    for c in &grid.cells {
        w.write_record([
            format_sig9(c.ta),
            format_sig9(c.tb),
            format_sig9(c.fidelity),
            format_sig9(c.cft),
            flag(c.quantum).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_robustness_csv<W: Write>(grid: &RobustnessGrid, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ROBUSTNESS_HEADER)?;
    for c in &grid.cells {
        w.write_record([
            format_sig9(c.ta),
            format_sig9(c.tb),
            format_sig9(c.best_g),
            format_sig9(c.ratio),
            flag(c.quantum).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_gain_csv<W: Write>(points: &[GainPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(GAIN_HEADER)?;
    for p in points {
        w.write_record([
            format_sig9(p.g),
            format_sig9(p.fidelity),
            format_sig9(p.cft),
            format_sig9(p.w_sum),
            flag(p.quantum).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// JSON sidecar written next to every scan CSV.
#[derive(Clone, Debug, Serialize)]
pub struct ScanMetadata {
    pub toolkit_version: &'static str,
    /// `region`, `surface`, `robustness` or `gain`.
    pub kind: String,
    /// Covariance matrix for state-based scans.
    #[serde(rename = "V", skip_serializing_if = "Option::is_none")]
    pub v: Option<[[f64; 4]; 4]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<SymmetricFamilyParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelParams>,
    /// Axis name and definition, outer axis first.
    pub axes: Vec<(String, Axis)>,
    pub columns: Vec<String>,
    pub rows: usize,
    /// Cells per region label, for region scans.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label_counts: Option<BTreeMap<&'static str, usize>>,
    /// Free-form echo of the invoking configuration.
    pub config: serde_json::Value,
}

impl ScanMetadata {
    pub fn new(kind: &str, columns: &[&str], rows: usize) -> Self {
        ScanMetadata {
            toolkit_version: TOOLKIT_VERSION,
            kind: kind.to_string(),
            v: None,
            family: None,
            g: None,
            channel: None,
            axes: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows,
            label_counts: None,
            config: serde_json::Value::Null,
        }
    }

    pub fn for_region(grid: &RegionGrid) -> Self {
        let mut m = Self::new("region", &REGION_HEADER, grid.cells.len());
        m.family = Some(grid.family);
        m.g = Some(grid.g);
        m.channel = Some(grid.channel);
        m.axes = vec![("kq_bar".into(), grid.kq_axis), ("kp_bar".into(), grid.kp_axis)];
        let mut counts = BTreeMap::new();
        for c in &grid.cells {
            *counts.entry(c.label.code()).or_insert(0) += 1;
        }
        m.label_counts = Some(counts);
        m
    }

    pub fn for_surface(state: &TwoModeState, grid: &SurfaceGrid) -> Self {
        let mut m = Self::new("surface", &SURFACE_HEADER, grid.cells.len());
        m.v = Some(state.to_rows());
        m.g = Some(grid.g);
        m.axes = vec![("ta".into(), grid.ta_axis), ("tb".into(), grid.tb_axis)];
        m
    }

    pub fn for_robustness(state: &TwoModeState, grid: &RobustnessGrid) -> Self {
        let mut m = Self::new("robustness", &ROBUSTNESS_HEADER, grid.cells.len());
        m.v = Some(state.to_rows());
        m.axes = vec![("ta".into(), grid.ta_axis), ("tb".into(), grid.tb_axis)];
        m
    }

    pub fn for_gain(state: &TwoModeState, ch: &ChannelParams, g_axis: Axis, points: &[GainPoint]) -> Self {
        let mut m = Self::new("gain", &GAIN_HEADER, points.len());
        m.v = Some(state.to_rows());
        m.channel = Some(*ch);
        m.axes = vec![("g".into(), g_axis)];
        m
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }
}

/// `out.csv` → `out.json`.
pub fn sidecar_path(csv_path: &Path) -> std::path::PathBuf {
    csv_path.with_extension("json")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::asymmetric_fixture;

    fn family() -> SymmetricFamilyParams {
        SymmetricFamilyParams::new(2.0, 2.0).unwrap()
    }

    fn nearest(axis: &Axis, x: f64) -> usize {
        (0..axis.steps)
            .min_by(|&a, &b| (axis.value(a) - x).abs().total_cmp(&(axis.value(b) - x).abs()))
            .unwrap()
    }

    #[test]
    fn axis_values() {
        let a = Axis::new(-1.0, 1.0, 5).unwrap();
        assert_eq!(a.values(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        let u = Axis::open_unit(10).unwrap();
        assert!((u.value(0) - 0.1).abs() < 1e-15);
        assert_eq!(u.value(9), 1.0);
        assert!((u.value(1) - 0.2).abs() < 1e-15);
        assert!(Axis::new(0.0, 1.0, 1).is_err());
        assert!(Axis::new(1.0, 0.0, 4).is_err());
        assert!(Axis::open_unit(1).is_err());
    }

    #[test]
    fn region_examples() {
        let grid = region_scan(&family(), &ChannelParams::IDENTITY, Gain::UNITY, 9).unwrap();
        // Axis step 0.25: (0.75, −0.75) is index (7, 1).
        assert_eq!(grid.cell(7, 1).label, RegionLabel::RobustQuantum);
        assert_eq!(grid.cell(8, 8).label, RegionLabel::Unphysical);
        // 41 points put ±0.3 and 0.9 on the grid.
        let fine = region_scan(&family(), &ChannelParams::IDENTITY, Gain::UNITY, 41).unwrap();
        let (i, j) = (nearest(&fine.kq_axis, 0.3), nearest(&fine.kp_axis, -0.3));
        assert_eq!(fine.cell(i, j).label, RegionLabel::Separable);
        let k = nearest(&fine.kq_axis, 0.9);
        assert_eq!(fine.cell(k, k).label, RegionLabel::Unphysical);
        assert!(!fine.cell(k, k).ppt_entangled);
    }

    #[test]
    fn region_scan_is_schedule_independent() {
        let a = region_scan(&family(), &ChannelParams::IDENTITY, Gain::UNITY, 31).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| region_scan(&family(), &ChannelParams::IDENTITY, Gain::UNITY, 31).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn surface_examples() {
        let grid = fidelity_surface(&TwoModeState::tmss(1.0), Gain::UNITY, 10).unwrap();
        let top = grid.cell(9, 9);
        assert!((top.fidelity - 0.8807971).abs() < 1e-7 && top.quantum);
        let half = grid.cell(4, 9);
        assert!((half.ta - 0.5).abs() < 1e-15);
        assert!((half.fidelity - 0.5227549744).abs() < 1e-9 && half.quantum);
        let low = grid.cell(1, 9);
        assert!((low.fidelity - 0.3688717023).abs() < 1e-9 && !low.quantum);
    }

    #[test]
    fn gain_sweep_examples() {
        let tmss = TwoModeState::tmss(1.0);
        let pts = gain_sweep(&tmss, &ChannelParams::IDENTITY, 3.0, 3001).unwrap();
        let best = pts.iter().min_by(|a, b| a.w_sum.total_cmp(&b.w_sum)).unwrap();
        assert!((best.g - 1.0f64 / 1.0f64.tanh()).abs() <= 1e-3);

        let half = ChannelParams::new(0.5, 1.0).unwrap();
        let pts = gain_sweep(&tmss, &half, 4.0, 4001).unwrap();
        let near = pts
            .iter()
            .min_by(|a, b| (a.g - 2.6261).abs().total_cmp(&(b.g - 2.6261).abs()))
            .unwrap();
        assert!(near.quantum);

        let vac = gain_sweep(&TwoModeState::vacuum(), &ChannelParams::IDENTITY, 5.0, 501).unwrap();
        assert!(vac.iter().all(|p| !p.quantum));
        assert!(vac.iter().all(|p| (p.fidelity - p.cft).abs() < 1e-12));
    }

    #[test]
    fn robustness_examples() {
        let grid = robustness_sweep(&TwoModeState::tmss(1.0), 20).unwrap();
        assert!(grid.cells.iter().all(|c| c.quantum));
        let cell = robustness_cell(&asymmetric_fixture(), 1.0, 0.3);
        assert!(!cell.quantum && cell.ratio < 1.0);
        let sep = robustness_sweep(&TwoModeState::vacuum(), 6).unwrap();
        assert!(sep.cells.iter().all(|c| !c.quantum));
    }

    #[test]
    fn ratio_channel() {
        let c = channel_for_ratio(0.65, Gain::UNITY, 1.0).unwrap();
        assert!((c.ta() - 0.65).abs() < 1e-15 && c.tb() == 1.0);
        assert!(channel_for_ratio(1.5, Gain::UNITY, 1.0).is_err());
        assert!(channel_for_ratio(1.0, Gain::new(0.0).unwrap(), 1.0).is_err());
    }

    #[test]
    fn csv_layout() {
        let grid = fidelity_surface(&TwoModeState::tmss(1.0), Gain::UNITY, 2).unwrap();
        let mut buf = Vec::new();
        write_surface_csv(&grid, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "ta,tb,fidelity,cft,quantum");
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[4], "1,1,0.880797078,0.500000000,1");

        let regions = region_scan(&family(), &ChannelParams::IDENTITY, Gain::UNITY, 3).unwrap();
        let mut buf = Vec::new();
        write_region_csv(&regions, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("kq_bar,kp_bar,region\n-1,-1,UNPHYS\n"));
    }

    #[test]
    fn sig9_formatting() {
        assert_eq!(format_sig9(0.0), "0");
        assert_eq!(format_sig9(1.0), "1");
        assert_eq!(format_sig9(-1.0), "-1");
        assert_eq!(format_sig9(0.8807970779778823), "0.880797078");
        assert_eq!(format_sig9(1.3130352854993312), "1.31303529");
        assert_eq!(format_sig9(-10.84405517855216), "-10.8440552");
        assert_eq!(format_sig9(1.5e-7), "1.50000000e-7");
        assert_eq!(format_sig9(f64::NAN), "nan");
    }
}
