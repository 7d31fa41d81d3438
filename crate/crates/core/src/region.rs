//! ISAC performance regions: grid sweeps over the four precoder parameters
//! and Pareto-boundary extraction over (sum throughput, sensing metric).

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::comms::throughput;
use crate::error::{IsacError, Result};
use crate::model::{streams, ChannelSet, Rng, ScenarioConfig};
use crate::precoder::{build_precoders, classify_special_case, Family, ParameterPoint, SpecialCase};
use crate::radar::{crb_from_profile, expected_profile, radar_trials};
use crate::scalar::{to_db, Real};

/// Sensing axis of the region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    /// Broadside gain `G_0`.
    #[serde(rename = "G0")]
    G0,
    /// Monte Carlo post-processing radar SNR.
    #[serde(rename = "SNR_RAD")]
    SnrRad,
}

impl FromStr for Metric {
    type Err = IsacError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "g0" => Ok(Metric::G0),
            "snr" | "snr_rad" => Ok(Metric::SnrRad),
            _ => Err(IsacError::InvalidConfig(format!("unknown metric `{s}` (expected g0 or snr)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub grid_step: f64,
    pub families: Vec<Family>,
    pub metric: Metric,
    /// Cases kept in the region; empty keeps everything.
    pub include_cases: Vec<SpecialCase>,
    pub monte_carlo_trials: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            grid_step: 0.1,
            families: vec![Family::Mrt, Family::Zf],
            metric: Metric::G0,
            include_cases: Vec::new(),
            monte_carlo_trials: 20,
        }
    }
}

impl SweepSpec {
    /// Number of grid intervals `1 / grid_step`.
    pub fn divisions(&self) -> Result<usize> {
        if !(self.grid_step > 0.0 && self.grid_step <= 0.5) {
            return Err(IsacError::InvalidConfig(format!("grid_step must lie in (0, 0.5], got {}", self.grid_step)));
        }
        let n = (1.0 / self.grid_step).round();
        if ((1.0 / self.grid_step) - n).abs() > 1e-9 * n {
            return Err(IsacError::InvalidConfig(format!("1 / grid_step must be an integer, got {}", 1.0 / self.grid_step)));
        }
        Ok(n as usize)
    }

    pub fn validate(&self) -> Result<()> {
        self.divisions()?;
        if self.families.is_empty() {
            return Err(IsacError::InvalidConfig("at least one precoder family is required".into()));
        }
        Ok(())
    }

    /// Distinct grid points, degenerate axes collapsed, ordered by
    /// [`ParameterPoint::order_key`].
    ///
    /// Axes without power are pinned: `t_comms = 0` pins everything,
    /// `t_p = 1` pins `alpha_c = 0`, `t_p = 0` pins `alpha_p = 0`. Points
    /// without private power do not depend on the family and appear once.
    pub fn grid(&self) -> Result<Vec<ParameterPoint>> {
        self.validate()?;
        let n = self.divisions()?;
        let v = |i: usize| i as f64 / n as f64;
        let mut families = self.families.clone();
        families.sort();
        families.dedup();
        let first = families[0];

        let mut out = vec![ParameterPoint { t_comms: 0.0, t_p: 1.0, alpha_c: 0.0, alpha_p: 0.0, family: first }];
        for ic in 1..=n {
            let t_comms = v(ic);
            for ip in 0..=n {
                let t_p = v(ip);
                let alpha_c: Vec<f64> = if ip == n { vec![0.0] } else { (0..=n).map(v).collect() };
                let alpha_p: Vec<f64> = if ip == 0 { vec![0.0] } else { (0..=n).map(v).collect() };
                let fams: &[Family] = if ip == 0 { &families[..1] } else { &families };
                for &ac in &alpha_c {
                    for &ap in &alpha_p {
                        for &family in fams {
                            out.push(ParameterPoint { t_comms, t_p, alpha_c: ac, alpha_p: ap, family });
                        }
                    }
                }
            }
        }
        out.sort_by_key(ParameterPoint::order_key);
        Ok(out)
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsacPoint {
    pub params: ParameterPoint,
    pub t_sum_bps: f64,
    /// Symbol-averaged broadside gain.
    pub g0: f64,
    pub snr_rad_db: Option<f64>,
    pub crb_bins2: f64,
    pub case: SpecialCase,
    pub collapsed: bool,
    /// MCS indices for `[common, private 1, private 2]`.
    pub mcs: [Option<usize>; 3],
}

impl IsacPoint {
    /// The private streams carry power, so the family matters.
    pub fn family_dependent(&self) -> bool {
        self.params.private_fraction() > 0.0
    }

    /// Whether this point belongs to the region of `family`.
    pub fn in_family(&self, family: Family) -> bool {
        !self.family_dependent() || self.params.family == family
    }

    /// Sensing coordinate for `metric` (linear).
    pub fn sensing(&self, metric: Metric) -> f64 {
        match metric {
            Metric::G0 => self.g0,
            Metric::SnrRad => self.snr_rad_db.map_or(f64::NEG_INFINITY, crate::scalar::from_db),
        }
    }
}

/// Evaluate a single parameter point.
pub fn evaluate_point<T: Real>(
    pp: &ParameterPoint,
    channels: &ChannelSet<T>,
    cfg: &ScenarioConfig,
    metric: Metric,
    trials: usize,
    rng: &Rng,
) -> Result<IsacPoint> {
    let precoders = build_precoders(pp, channels, cfg)?;
    let report = throughput(channels, &precoders, cfg);
    let profile = expected_profile(&precoders);
    let g0 = profile.iter().sum();
    let beta = cfg.target_attenuation;
    let crb_bins2 = crb_from_profile(&profile, beta, cfg.radar_noise_per_subcarrier()).unwrap_or(f64::INFINITY);
    let snr_rad_db = match metric {
        Metric::G0 => None,
        Metric::SnrRad if trials == 0 => None,
        Metric::SnrRad => {
            let stats = radar_trials(&precoders, cfg, cfg.target_delay_bins, beta, trials, rng, true)?;
            Some(to_db(stats.mean_snr))
        }
    };
    Ok(IsacPoint {
        params: *pp,
        t_sum_bps: report.t_sum,
        g0,
        snr_rad_db,
        crb_bins2,
        case: classify_special_case(pp),
        collapsed: report.collapsed,
        mcs: report.mcs_chosen.map(|l| l.map(|l| l.index)),
    })
}

/// Points that failed numerically and were left out of the region.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedPoint {
    pub params: ParameterPoint,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionResult {
    pub metric: Metric,
    pub points: Vec<IsacPoint>,
    pub boundary: Vec<IsacPoint>,
    pub per_case_boundaries: BTreeMap<SpecialCase, Vec<IsacPoint>>,
    pub skipped: Vec<SkippedPoint>,
}

/// Sweep the grid of `spec`, in parallel, and extract the boundaries.
pub fn sweep<T: Real>(spec: &SweepSpec, channels: &ChannelSet<T>, cfg: &ScenarioConfig) -> Result<RegionResult> {
    let grid = spec.grid()?;
    let base = Rng::new(cfg.seed, 0).child(streams::SWEEP_POINT);
    let evaluated: Vec<(ParameterPoint, Result<IsacPoint>)> = grid
        .par_iter()
        .enumerate()
        .map(|(i, pp)| (*pp, evaluate_point(pp, channels, cfg, spec.metric, spec.monte_carlo_trials, &base.child(i as u64))))
        .collect();

    let mut points = Vec::with_capacity(evaluated.len());
    let mut skipped = Vec::new();
    let mut first_error = None;
    for (params, res) in evaluated {
        match res {
            Ok(p) => {
                if spec.include_cases.is_empty() || spec.include_cases.contains(&p.case) {
                    points.push(p);
                }
            }
            Err(e) if e.is_numeric() => {
                skipped.push(SkippedPoint { params, reason: e.to_string() });
                first_error.get_or_insert(e);
            }
            Err(e) => return Err(e),
        }
    }
    if points.is_empty() {
        if let Some(e) = first_error {
            return Err(e);
        }
    }
    Ok(RegionResult::new(spec.metric, points, skipped))
}

impl RegionResult {
    pub fn new(metric: Metric, points: Vec<IsacPoint>, skipped: Vec<SkippedPoint>) -> Self {
        let all: Vec<&IsacPoint> = points.iter().collect();
        let boundary = frontier_of(&all, metric);
        let mut per_case_boundaries = BTreeMap::new();
        for case in SpecialCase::ALL {
            let members: Vec<&IsacPoint> = points.iter().filter(|p| p.case == case).collect();
            if !members.is_empty() {
                per_case_boundaries.insert(case, frontier_of(&members, metric));
            }
        }
        Self { metric, points, boundary, per_case_boundaries, skipped }
    }

    /// Pareto boundary of the points accepted by `filter`.
    pub fn frontier(&self, filter: &RegionFilter) -> Vec<IsacPoint> {
        let members: Vec<&IsacPoint> = self.points.iter().filter(|p| filter.accepts(p)).collect();
        frontier_of(&members, self.metric)
    }

    pub fn filtered(&self, filter: &RegionFilter) -> Vec<&IsacPoint> {
        self.points.iter().filter(|p| filter.accepts(p)).collect()
    }
}

/// Subsets of the region used for boundary extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaseFilter {
    All,
    /// No common stream: `t_p = 1` (includes the sensing-only point).
    Sdma,
    /// No dedicated sensing signal: `t_comms = 1`.
    RsmaNoSense,
    Case(SpecialCase),
}

impl fmt::Display for CaseFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CaseFilter::All => f.write_str("all"),
            CaseFilter::Sdma => f.write_str("sdma"),
            CaseFilter::RsmaNoSense => f.write_str("rsma_nosense"),
            CaseFilter::Case(c) => write!(f, "{c}"),
        }
    }
}

impl FromStr for CaseFilter {
    type Err = IsacError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "all" | "rsma" => Ok(CaseFilter::All),
            "sdma" => Ok(CaseFilter::Sdma),
            "rsma_nosense" => Ok(CaseFilter::RsmaNoSense),
            _ => s.parse().map(CaseFilter::Case),
        }
    }
}

fn unit_eq(v: f64, target: f64) -> bool {
    (v - target).abs() <= 1e-9
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RegionFilter {
    pub case: CaseFilter,
    pub family: Option<Family>,
}

impl RegionFilter {
    pub const ALL: RegionFilter = RegionFilter { case: CaseFilter::All, family: None };

    pub fn new(case: CaseFilter, family: Option<Family>) -> Self {
        Self { case, family }
    }

    pub fn accepts(&self, p: &IsacPoint) -> bool {
        let case_ok = match self.case {
            CaseFilter::All => true,
            CaseFilter::Sdma => unit_eq(p.params.t_p, 1.0),
            CaseFilter::RsmaNoSense => unit_eq(p.params.t_comms, 1.0),
            CaseFilter::Case(c) => p.case == c,
        };
        case_ok && self.family.is_none_or(|f| p.in_family(f))
    }
}

/// Indices of the Pareto-optimal points (maximizing both coordinates),
/// sorted by `x` ascending. Among identical coordinates the lowest index is
/// kept.
pub fn pareto_frontier(points: &[(f64, f64)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (points[a], points[b]);
        pb.0.total_cmp(&pa.0).then(pb.1.total_cmp(&pa.1)).then(a.cmp(&b))
    });
    let mut best_y = f64::NEG_INFINITY;
    let mut keep = Vec::new();
    for i in order {
        if points[i].1 > best_y {
            best_y = points[i].1;
            keep.push(i);
        }
    }
    keep.reverse();
    keep
}

/// Merge values that agree to a relative `1e-9` onto the smallest member of
/// their cluster, so rounding noise does not create spurious optima.
pub fn snap(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = values.to_vec();
    let mut anchor = f64::NAN;
    for i in order {
        let v = values[i];
        if anchor.is_finite() && (v - anchor).abs() <= 1e-9 * anchor.abs().max(v.abs()) {
            out[i] = anchor;
        } else {
            anchor = v;
        }
    }
    out
}

fn frontier_of(points: &[&IsacPoint], metric: Metric) -> Vec<IsacPoint> {
    if points.is_empty() {
        return Vec::new();
    }
    let mut sorted: Vec<&IsacPoint> = points.to_vec();
    sorted.sort_by_key(|p| p.params.order_key());
    let xs = snap(&sorted.iter().map(|p| p.t_sum_bps).collect::<Vec<_>>());
    let ys = snap(&sorted.iter().map(|p| p.sensing(metric)).collect::<Vec<_>>());
    let coords: Vec<(f64, f64)> = xs.into_iter().zip(ys).collect();
    pareto_frontier(&coords).into_iter().map(|i| sorted[i].clone()).collect()
}

/// One row of the boundary parameter table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryRow {
    pub index: usize,
    pub params: ParameterPoint,
    pub mcs: [Option<usize>; 3],
    pub t_sum_bps: f64,
    pub g0: f64,
}

/// Parameters and MCS levels behind each boundary point of `filter`,
/// ordered by increasing throughput.
pub fn boundary_params(result: &RegionResult, filter: &RegionFilter) -> Result<Vec<BoundaryRow>> {
    let frontier = result.frontier(filter);
    if frontier.is_empty() {
        return Err(IsacError::InvalidConfig(format!("no region points pass the `{}` filter", filter.case)));
    }
    Ok(frontier
        .into_iter()
        .enumerate()
        .map(|(index, p)| BoundaryRow { index, params: p.params, mcs: p.mcs, t_sum_bps: p.t_sum_bps, g0: p.g0 })
        .collect())
}

#[derive(Serialize)]
struct PointRecord {
    t_comms: f64,
    t_p: f64,
    alpha_c: f64,
    alpha_p: f64,
    family: Family,
    case: SpecialCase,
    t_sum_mbps: f64,
    g0: f64,
    snr_rad_db: Option<f64>,
    crb: f64,
    collapsed: bool,
}

/// Write `points` with one row per point.
pub fn write_points_csv<W: Write>(out: W, points: &[IsacPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(PointRecord {
            t_comms: p.params.t_comms,
            t_p: p.params.t_p,
            alpha_c: p.params.alpha_c,
            alpha_p: p.params.alpha_p,
            family: p.params.family,
            case: p.case,
            t_sum_mbps: p.t_sum_bps / 1e6,
            g0: p.g0,
            snr_rad_db: p.snr_rad_db,
            crb: p.crb_bins2,
            collapsed: p.collapsed,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
pub struct BoundaryRecord {
    pub index: usize,
    pub t_comms: f64,
    pub t_p: f64,
    pub alpha_c: f64,
    pub alpha_p: f64,
    pub mcs_c: Option<usize>,
    pub mcs_1: Option<usize>,
    pub mcs_2: Option<usize>,
    pub family: Family,
}

impl BoundaryRecord {
    pub fn params(&self) -> Result<ParameterPoint> {
        ParameterPoint::new(self.t_comms, self.t_p, self.alpha_c, self.alpha_p, self.family)
    }
}

pub fn write_boundary_params_csv<W: Write>(out: W, rows: &[BoundaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(BoundaryRecord {
            index: r.index,
            t_comms: r.params.t_comms,
            t_p: r.params.t_p,
            alpha_c: r.params.alpha_c,
            alpha_p: r.params.alpha_p,
            mcs_c: r.mcs[0],
            mcs_1: r.mcs[1],
            mcs_2: r.mcs[2],
            family: r.params.family,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_boundary_params_csv<R: std::io::Read>(input: R) -> Result<Vec<BoundaryRecord>> {
    csv::Reader::from_reader(input).deserialize().map(|r| r.map_err(IsacError::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_channels, scenario_preset, ArrayGeometry};

    #[test]
    fn frontier_example() {
        let pts = [(1.0, 3.0), (2.0, 2.0), (3.0, 1.0), (1.0, 1.0)];
        assert_eq!(pareto_frontier(&pts), vec![0, 1, 2]);
        assert_eq!(pareto_frontier(&[(4.0, 2.0)]), vec![0]);
    }

    #[test]
    fn duplicates_keep_lowest_index() {
        let pts = [(1.0, 1.0), (2.0, 2.0), (2.0, 2.0), (0.5, 3.0)];
        assert_eq!(pareto_frontier(&pts), vec![3, 1]);
    }

    #[test]
    fn snapping_merges_rounding_noise() {
        let v = snap(&[1.0, 1.0 + 1e-13, 2.0, 1.0 - 1e-13]);
        assert_eq!(v, vec![1.0 - 1e-13, 1.0 - 1e-13, 2.0, 1.0 - 1e-13]);
    }

    #[test]
    fn spec_validation() {
        let bad = |s: f64| SweepSpec { grid_step: s, ..SweepSpec::default() }.validate().is_err();
        assert!(bad(0.0));
        assert!(bad(0.6));
        assert!(bad(0.3));
        assert!(!bad(0.25));
        assert!(!bad(0.1));
    }

    #[test]
    fn grid_cardinality() {
        let spec = SweepSpec { grid_step: 0.5, families: vec![Family::Mrt], ..SweepSpec::default() };
        let g = spec.grid().unwrap();
        assert!(g.len() <= 81);
        // 1 + 2 t_comms × (3 + 3 + 9).
        assert_eq!(g.len(), 31);
        let spec = SweepSpec { grid_step: 0.1, ..SweepSpec::default() };
        let g = spec.grid().unwrap();
        assert_eq!(g.len(), 1 + 10 * (11 + 2 * 11 + 2 * 9 * 121));
    }

    #[test]
    fn small_sweep_properties() {
        let cfg = scenario_preset("S2").unwrap().with_subcarriers(16);
        let ch: ChannelSet<f64> = generate_channels(&cfg, &ArrayGeometry::default(), &Rng::new(cfg.seed, 0)).unwrap();
        let spec = SweepSpec { grid_step: 0.25, ..SweepSpec::default() };
        let res = sweep(&spec, &ch, &cfg).unwrap();
        assert!(res.skipped.is_empty());
        assert!(res.points.iter().all(|p| !p.collapsed || p.t_sum_bps == 0.0));
        for b in &res.boundary {
            assert!(res.points.contains(b));
            assert!(!res.points.iter().any(|p| p.t_sum_bps >= b.t_sum_bps
                && p.g0 >= b.g0
                && (p.t_sum_bps > b.t_sum_bps * (1.0 + 1e-9) || p.g0 > b.g0 * (1.0 + 1e-9))));
        }
        let again = sweep(&spec, &ch, &cfg).unwrap();
        assert_eq!(res, again);
        let rows = boundary_params(&res, &RegionFilter::new(CaseFilter::RsmaNoSense, None)).unwrap();
        assert!(rows.iter().all(|r| r.params.t_comms == 1.0));
    }

    #[test]
    fn csv_round_trip() {
        let pp = ParameterPoint::new(0.6, 1.0, 0.0, 1.0, Family::Zf).unwrap();
        let rows = vec![BoundaryRow { index: 0, params: pp, mcs: [None, Some(3), Some(4)], t_sum_bps: 1.0, g0: 2.0 }];
        let mut buf = Vec::new();
        write_boundary_params_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("index,t_comms,t_p,alpha_c,alpha_p,mcs_c,mcs_1,mcs_2,family\n"));
        let back = read_boundary_params_csv(buf.as_slice()).unwrap();
        assert_eq!(back[0].params().unwrap(), pp);
        assert_eq!(back[0].mcs_c, None);
    }
}
