//! Configuration ingestion, validation, and the built-in network cases.
//!
//! Scenarios load from a TOML document (schema below) or from the three
//! built-in layouts. Units in the config are explicit per field: powers as
//! `*_dbm` or `*_w`, thresholds as `*_db` or `*_ratio`, and array
//! orientation as either `axis_deg` (direction of the element line, the
//! convention the layout figures quote) or `boresight_deg` (outward array
//! normal); the two differ by 90 degrees.
//!
//! ```toml
//! schema_version = 1
//! case = 3                 # optional: start from a built-in case, then override
//!
//! [params]
//! carrier_frequency_hz = 2.4e9
//! rcs_magnitude = 1.0
//! eh_efficiency = 0.7
//! noise_comm_dbm = -50.0
//! noise_sense_dbm = -97.0
//! power_budget_dbm = 27.0
//! false_alarm = 1e-4
//!
//! [[bs]]
//! center = [0.0, 0.0]
//! axis_deg = 120.0
//! elements = 64
//! spacing_m = 0.0625
//!
//! [[cu]]
//! position = [7.93, 8.32]
//! sinr_threshold_db = 10.0
//! cu_type = "type_i"       # type_i | type_ii | type_iii
//!
//! [[er]]
//! center = [3.75, 37.5]
//! harvest_threshold_dbm = -30.0
//! region = { kind = "disc", radius_m = 1.0 }
//!
//! [sensing]
//! center = [20.0, 24.0]
//! side_m = 3.0
//! points = 5               # or explicit: points = [[x, y], ...]
//! ```

use crate::covariance::UncertaintyRegion;
use crate::geometry::{wavelength_from_frequency, ArrayGeometry, FieldRegion, Point2D};
use crate::numerics::{db_to_linear, dbm_to_watt, linear_to_db, watt_to_dbm};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Receiver classes by dual-purpose interference cancellation capability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CuType {
    /// No cancellation: intra- and inter-cell dual-purpose interference.
    TypeI,
    /// Cancels intra-cell dual-purpose interference only.
    TypeII,
    /// Cancels all dual-purpose interference.
    TypeIII,
}

impl CuType {
    pub const ALL: [CuType; 3] = [CuType::TypeI, CuType::TypeII, CuType::TypeIII];

    pub fn label(&self) -> &'static str {
        match self {
            CuType::TypeI => "type_i",
            CuType::TypeII => "type_ii",
            CuType::TypeIII => "type_iii",
        }
    }
}

impl std::str::FromStr for CuType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "type_i" | "i" | "1" => Ok(CuType::TypeI),
            "type_ii" | "ii" | "2" => Ok(CuType::TypeII),
            "type_iii" | "iii" | "3" => Ok(CuType::TypeIII),
            other => Err(Error::Parse(format!("unknown CU type `{other}`"))),
        }
    }
}

/// Physical constants of the network; all powers in watts, ratios linear.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    pub carrier_frequency: f64,
    pub rcs_magnitude: f64,
    pub eh_efficiency: f64,
    pub noise_comm: f64,
    pub noise_sense: f64,
    pub power_budget: f64,
    pub false_alarm: f64,
}

impl Default for SystemParams {
    /// Table defaults: 2.4 GHz, unit RCS, 70% conversion, -50/-97 dBm
    /// noise, 27 dBm budget, 1e-4 false alarm.
    fn default() -> Self {
        Self {
            carrier_frequency: 2.4e9,
            rcs_magnitude: 1.0,
            eh_efficiency: 0.7,
            noise_comm: dbm_to_watt(-50.0),
            noise_sense: dbm_to_watt(-97.0),
            power_budget: dbm_to_watt(27.0),
            false_alarm: 1e-4,
        }
    }
}

impl SystemParams {
    pub fn wavelength(&self) -> f64 {
        wavelength_from_frequency(self.carrier_frequency)
    }

    fn validate(&self) -> Result<()> {
        let positive = [
            ("params.carrier_frequency_hz", self.carrier_frequency),
            ("params.rcs_magnitude", self.rcs_magnitude),
            ("params.eh_efficiency", self.eh_efficiency),
            ("params.noise_comm", self.noise_comm),
            ("params.noise_sense", self.noise_sense),
            ("params.power_budget", self.power_budget),
            ("params.false_alarm", self.false_alarm),
        ];
        for (field, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::validation(field, format!("must be positive, got {v}")));
            }
        }
        if self.eh_efficiency > 1.0 {
            return Err(Error::validation("params.eh_efficiency", "must be <= 1"));
        }
        if self.false_alarm >= 1.0 {
            return Err(Error::validation("params.false_alarm", "must be < 1"));
        }
        Ok(())
    }
}

/// One communication user: position, linear SINR threshold, receiver class.
#[derive(Debug, Clone, PartialEq)]
pub struct CuSpec {
    pub position: Point2D,
    pub sinr_threshold: f64,
    pub cu_type: CuType,
}

/// One energy receiver: uncertainty region and harvest floor in watts.
#[derive(Debug, Clone, PartialEq)]
pub struct ErSpec {
    pub region: UncertaintyRegion,
    pub harvest_threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensingArea {
    pub center: Point2D,
    pub side_length: f64,
    pub sample_points: Vec<Point2D>,
}

/// Square sensing-area discretization. `m = 1` gives the center; `m = 5`
/// gives the center plus the four half-diagonal points `(+-side/4, +-side/4)`.
/// Other counts must come in as explicit point lists through the config.
pub fn discretize_sensing_area(center: Point2D, side: f64, m: usize) -> Result<Vec<Point2D>> {
    if !(side > 0.0) {
        return Err(Error::validation("sensing.side_m", "side must be > 0"));
    }
    match m {
        1 => Ok(vec![center]),
        5 => {
            let o = side / 4.0;
            Ok(vec![
                center,
                Point2D::new(center.x - o, center.y - o),
                Point2D::new(center.x + o, center.y - o),
                Point2D::new(center.x - o, center.y + o),
                Point2D::new(center.x + o, center.y + o),
            ])
        }
        other => Err(Error::validation(
            "sensing.points",
            format!("point count {other} has no built-in placement; list the points explicitly"),
        )),
    }
}

/// A complete problem instance: per-index association of BS k with CU k
/// and ER k.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub params: SystemParams,
    pub bs: Vec<ArrayGeometry>,
    pub cus: Vec<CuSpec>,
    pub ers: Vec<ErSpec>,
    pub sensing: SensingArea,
}

impl Scenario {
    pub fn cell_count(&self) -> usize {
        self.bs.len()
    }

    pub fn sample_count(&self) -> usize {
        self.sensing.sample_points.len()
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let k = self.bs.len();
        if k == 0 {
            return Err(Error::validation("bs", "at least one BS required"));
        }
        if self.cus.len() != k {
            return Err(Error::validation(
                "cu",
                format!("BS/CU count mismatch: {k} BSs but {} CUs", self.cus.len()),
            ));
        }
        if self.ers.len() != k {
            return Err(Error::validation(
                "er",
                format!("BS/ER count mismatch: {k} BSs but {} ERs", self.ers.len()),
            ));
        }
        if self.sensing.sample_points.is_empty() {
            return Err(Error::validation("sensing.points", "at least one sample point"));
        }
        let half = self.sensing.side_length / 2.0 + 1e-9;
        for (i, p) in self.sensing.sample_points.iter().enumerate() {
            if (p.x - self.sensing.center.x).abs() > half
                || (p.y - self.sensing.center.y).abs() > half
            {
                return Err(Error::validation(
                    "sensing.points",
                    format!("sample point {i} lies outside the square"),
                ));
            }
        }
        for (i, cu) in self.cus.iter().enumerate() {
            if !(cu.sinr_threshold > 0.0) {
                return Err(Error::validation(
                    format!("cu[{i}].sinr_threshold"),
                    "must be > 0",
                ));
            }
            if !cu.position.is_finite() {
                return Err(Error::validation(format!("cu[{i}].position"), "non-finite"));
            }
        }
        for (i, er) in self.ers.iter().enumerate() {
            if !(er.harvest_threshold > 0.0) {
                return Err(Error::validation(
                    format!("er[{i}].harvest_threshold"),
                    "must be > 0",
                ));
            }
            er.region.validate().map_err(|e| {
                Error::validation(format!("er[{i}].region"), e.to_string())
            })?;
        }
        Ok(())
    }

    /// Orientation of BS `k`'s element line, degrees CCW from +x.
    pub fn axis_deg(&self, k: usize) -> f64 {
        (self.bs[k].boresight_angle.to_degrees() + 90.0).rem_euclid(360.0)
    }

    // Override helpers used by the sweep driver and the desk-scale tests.

    pub fn with_elements(mut self, n: usize) -> Self {
        for g in &mut self.bs {
            g.element_count = n;
        }
        self
    }

    pub fn with_sinr_db(mut self, db: f64) -> Self {
        for cu in &mut self.cus {
            cu.sinr_threshold = db_to_linear(db);
        }
        self
    }

    pub fn with_harvest_dbm(mut self, dbm: f64) -> Self {
        for er in &mut self.ers {
            er.harvest_threshold = dbm_to_watt(dbm);
        }
        self
    }

    /// Set every ER region to a uniform disc of the given area (m^2);
    /// zero area degenerates to a point.
    pub fn with_uncertainty_area(mut self, area_m2: f64) -> Self {
        for er in &mut self.ers {
            let center = er.region.center();
            er.region = if area_m2 <= 0.0 {
                UncertaintyRegion::Point { center }
            } else {
                UncertaintyRegion::UniformDisc {
                    center,
                    radius: (area_m2 / std::f64::consts::PI).sqrt(),
                }
            };
        }
        self
    }

    pub fn with_power_budget_dbm(mut self, dbm: f64) -> Self {
        self.params.power_budget = dbm_to_watt(dbm);
        self
    }

    pub fn with_false_alarm(mut self, pfa: f64) -> Self {
        self.params.false_alarm = pfa;
        self
    }

    pub fn with_cu_type(mut self, t: CuType) -> Self {
        for cu in &mut self.cus {
            cu.cu_type = t;
        }
        self
    }
}

/// The three built-in layouts. The shared geometry is the triangle of BSs
/// at (0,0), (45, 45*sqrt(3)), (90,0) with element lines along 120, 0 and
/// 60 degrees, ER regions centered at (3.75, 37.5), (22.5, 60.0) and
/// (85.5, 37.5), and a 3 m sensing square with five sample points.
///
/// CU coordinates are approximate, digitized from the layout figures:
/// case 1 places CUs far from the sensing area, case 2 at moderate
/// distance, case 3 in close proximity.
pub fn builtin_case(id: u32) -> Result<Scenario> {
    let cu_positions: [[(f64, f64); 3]; 3] = [
        // Case 1: far from the sensing area.
        [(-12.0, 0.0), (40.0, 89.0), (100.1, 6.5)],
        // Case 2: moderate distance.
        [(-6.55, 10.05), (53.9, 69.8), (83.45, -10.05)],
        // Case 3: close to the sensing area.
        [(7.93, 8.32), (43.8, 65.94), (79.12, 3.73)],
    ];
    let idx = match id {
        1 | 2 | 3 => (id - 1) as usize,
        other => {
            return Err(Error::validation(
                "case",
                format!("unknown built-in case {other}; valid ids are 1, 2, 3"),
            ))
        }
    };

    let params = SystemParams::default();
    let lambda = params.wavelength();
    let axes_deg = [120.0, 0.0, 60.0];
    let centers = [
        Point2D::new(0.0, 0.0),
        Point2D::new(45.0, 45.0 * 3.0_f64.sqrt()),
        Point2D::new(90.0, 0.0),
    ];
    let bs = centers
        .iter()
        .zip(axes_deg)
        .map(|(c, axis)| {
            ArrayGeometry::new(*c, (axis - 90.0_f64).to_radians(), 64, 0.0625, lambda)
        })
        .collect::<Result<Vec<_>>>()?;

    let cus = cu_positions[idx]
        .iter()
        .map(|&(x, y)| CuSpec {
            position: Point2D::new(x, y),
            sinr_threshold: db_to_linear(10.0),
            cu_type: CuType::TypeI,
        })
        .collect();

    let er_centers = [(3.75, 37.5), (22.5, 60.0), (85.5, 37.5)];
    let ers = er_centers
        .iter()
        .map(|&(x, y)| ErSpec {
            region: UncertaintyRegion::Point {
                center: Point2D::new(x, y),
            },
            harvest_threshold: dbm_to_watt(-30.0),
        })
        .collect();

    let sensing_center = Point2D::new(20.0, 24.0);
    let sensing = SensingArea {
        center: sensing_center,
        side_length: 3.0,
        sample_points: discretize_sensing_area(sensing_center, 3.0, 5)?,
    };

    let scenario = Scenario {
        params,
        bs,
        cus,
        ers,
        sensing,
    };
    scenario.validate()?;
    Ok(scenario)
}

// ---------------------------------------------------------------------------
// Config document (serde) and the conversion into a validated Scenario.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDoc {
    #[serde(default)]
    schema_version: Option<u32>,
    #[serde(default)]
    case: Option<u32>,
    #[serde(default)]
    params: Option<ParamsDoc>,
    #[serde(default)]
    bs: Option<Vec<BsDoc>>,
    #[serde(default)]
    cu: Option<Vec<CuDoc>>,
    #[serde(default)]
    er: Option<Vec<ErDoc>>,
    #[serde(default)]
    sensing: Option<SensingDoc>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsDoc {
    carrier_frequency_hz: Option<f64>,
    rcs_magnitude: Option<f64>,
    eh_efficiency: Option<f64>,
    noise_comm_dbm: Option<f64>,
    noise_comm_w: Option<f64>,
    noise_sense_dbm: Option<f64>,
    noise_sense_w: Option<f64>,
    power_budget_dbm: Option<f64>,
    power_budget_w: Option<f64>,
    false_alarm: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BsDoc {
    center: [f64; 2],
    /// Direction of the element line, degrees CCW from +x.
    axis_deg: Option<f64>,
    /// Outward array normal, degrees CCW from +x (= axis - 90).
    boresight_deg: Option<f64>,
    elements: Option<usize>,
    spacing_m: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CuDoc {
    position: [f64; 2],
    sinr_threshold_db: Option<f64>,
    sinr_threshold_ratio: Option<f64>,
    cu_type: Option<CuType>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ErDoc {
    center: Option<[f64; 2]>,
    harvest_threshold_dbm: Option<f64>,
    harvest_threshold_w: Option<f64>,
    region: Option<RegionDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionDoc {
    kind: String,
    #[serde(default)]
    center: Option<[f64; 2]>,
    #[serde(default)]
    radius_m: Option<f64>,
    #[serde(default)]
    cov: Option<[[f64; 2]; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SensingDoc {
    center: [f64; 2],
    side_m: f64,
    #[serde(default)]
    points: Option<toml::Value>,
}

fn pick_unit(
    field: &str,
    dbm: Option<f64>,
    watt: Option<f64>,
    to_linear: impl Fn(f64) -> f64,
    default: f64,
) -> Result<f64> {
    match (dbm, watt) {
        (Some(_), Some(_)) => Err(Error::validation(
            field,
            "give the value in exactly one unit, not both",
        )),
        (Some(d), None) => Ok(to_linear(d)),
        (None, Some(w)) => Ok(w),
        (None, None) => Ok(default),
    }
}

/// Parse and validate a scenario config document (TOML text).
///
/// A `case = N` key seeds the built-in layout; any sections present
/// override it. Missing parameters fall back to the table defaults.
pub fn load_scenario(document: &str) -> Result<Scenario> {
    let doc: ConfigDoc = toml::from_str(document).map_err(|e| Error::Parse(e.to_string()))?;
    if let Some(v) = doc.schema_version {
        if v != SCHEMA_VERSION {
            return Err(Error::validation(
                "schema_version",
                format!("unsupported version {v}; this build reads {SCHEMA_VERSION}"),
            ));
        }
    }

    let base = match doc.case {
        Some(id) => Some(builtin_case(id)?),
        None => None,
    };

    let defaults = SystemParams::default();
    let params = match (&doc.params, &base) {
        (None, Some(b)) => b.params.clone(),
        (p, _) => {
            let p = p.clone().unwrap_or_default();
            SystemParams {
                carrier_frequency: p
                    .carrier_frequency_hz
                    .unwrap_or(defaults.carrier_frequency),
                rcs_magnitude: p.rcs_magnitude.unwrap_or(defaults.rcs_magnitude),
                eh_efficiency: p.eh_efficiency.unwrap_or(defaults.eh_efficiency),
                noise_comm: pick_unit(
                    "params.noise_comm",
                    p.noise_comm_dbm,
                    p.noise_comm_w,
                    dbm_to_watt,
                    defaults.noise_comm,
                )?,
                noise_sense: pick_unit(
                    "params.noise_sense",
                    p.noise_sense_dbm,
                    p.noise_sense_w,
                    dbm_to_watt,
                    defaults.noise_sense,
                )?,
                power_budget: pick_unit(
                    "params.power_budget",
                    p.power_budget_dbm,
                    p.power_budget_w,
                    dbm_to_watt,
                    defaults.power_budget,
                )?,
                false_alarm: p.false_alarm.unwrap_or(defaults.false_alarm),
            }
        }
    };
    let lambda = params.wavelength();

    let bs = match (&doc.bs, &base) {
        (Some(list), _) => list
            .iter()
            .map(|b| {
                let boresight = match (b.axis_deg, b.boresight_deg) {
                    (Some(_), Some(_)) => {
                        return Err(Error::validation(
                            "bs",
                            "give either axis_deg or boresight_deg, not both",
                        ))
                    }
                    (Some(axis), None) => (axis - 90.0).to_radians(),
                    (None, Some(normal)) => normal.to_radians(),
                    (None, None) => {
                        return Err(Error::validation(
                            "bs",
                            "orientation missing: set axis_deg or boresight_deg",
                        ))
                    }
                };
                ArrayGeometry::new(
                    Point2D::new(b.center[0], b.center[1]),
                    boresight,
                    b.elements.unwrap_or(64),
                    b.spacing_m.unwrap_or(0.0625),
                    lambda,
                )
            })
            .collect::<Result<Vec<_>>>()?,
        (None, Some(b)) => b.bs.clone(),
        (None, None) => return Err(Error::validation("bs", "no BS list and no built-in case")),
    };

    let cus = match (&doc.cu, &base) {
        (Some(list), _) => list
            .iter()
            .map(|c| {
                let sinr = match (c.sinr_threshold_db, c.sinr_threshold_ratio) {
                    (Some(_), Some(_)) => {
                        return Err(Error::validation(
                            "cu.sinr_threshold",
                            "give either dB or ratio, not both",
                        ))
                    }
                    (Some(db), None) => db_to_linear(db),
                    (None, Some(r)) => r,
                    (None, None) => db_to_linear(10.0),
                };
                Ok(CuSpec {
                    position: Point2D::new(c.position[0], c.position[1]),
                    sinr_threshold: sinr,
                    cu_type: c.cu_type.unwrap_or(CuType::TypeI),
                })
            })
            .collect::<Result<Vec<_>>>()?,
        (None, Some(b)) => b.cus.clone(),
        (None, None) => return Err(Error::validation("cu", "no CU list and no built-in case")),
    };

    let ers = match (&doc.er, &base) {
        (Some(list), _) => list
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let threshold = pick_unit(
                    "er.harvest_threshold",
                    e.harvest_threshold_dbm,
                    e.harvest_threshold_w,
                    dbm_to_watt,
                    dbm_to_watt(-30.0),
                )?;
                let region = parse_region(i, e)?;
                Ok(ErSpec {
                    region,
                    harvest_threshold: threshold,
                })
            })
            .collect::<Result<Vec<_>>>()?,
        (None, Some(b)) => b.ers.clone(),
        (None, None) => return Err(Error::validation("er", "no ER list and no built-in case")),
    };

    let sensing = match (&doc.sensing, &base) {
        (Some(s), _) => {
            let center = Point2D::new(s.center[0], s.center[1]);
            let sample_points = match &s.points {
                None => discretize_sensing_area(center, s.side_m, 5)?,
                Some(toml::Value::Integer(m)) => {
                    discretize_sensing_area(center, s.side_m, *m as usize)?
                }
                Some(toml::Value::Array(pts)) => pts
                    .iter()
                    .map(|v| match v {
                        toml::Value::Array(xy) if xy.len() == 2 => {
                            let x = xy[0].as_float().ok_or_else(|| {
                                Error::validation("sensing.points", "non-numeric coordinate")
                            })?;
                            let y = xy[1].as_float().ok_or_else(|| {
                                Error::validation("sensing.points", "non-numeric coordinate")
                            })?;
                            Ok(Point2D::new(x, y))
                        }
                        _ => Err(Error::validation(
                            "sensing.points",
                            "each point must be a [x, y] pair",
                        )),
                    })
                    .collect::<Result<Vec<_>>>()?,
                Some(_) => {
                    return Err(Error::validation(
                        "sensing.points",
                        "must be a count or a list of [x, y] pairs",
                    ))
                }
            };
            SensingArea {
                center,
                side_length: s.side_m,
                sample_points,
            }
        }
        (None, Some(b)) => b.sensing.clone(),
        (None, None) => {
            return Err(Error::validation(
                "sensing",
                "no sensing section and no built-in case",
            ))
        }
    };

    let scenario = Scenario {
        params,
        bs,
        cus,
        ers,
        sensing,
    };
    scenario.validate()?;
    Ok(scenario)
}

fn parse_region(i: usize, e: &ErDoc) -> Result<UncertaintyRegion> {
    let top_center = e.center.map(|c| Point2D::new(c[0], c[1]));
    match &e.region {
        None => {
            let center = top_center.ok_or_else(|| {
                Error::validation(format!("er[{i}]"), "missing center for point region")
            })?;
            Ok(UncertaintyRegion::Point { center })
        }
        Some(r) => {
            let center = r
                .center
                .map(|c| Point2D::new(c[0], c[1]))
                .or(top_center)
                .ok_or_else(|| Error::validation(format!("er[{i}].region"), "missing center"))?;
            match r.kind.as_str() {
                "point" => Ok(UncertaintyRegion::Point { center }),
                "disc" => {
                    let radius = r.radius_m.ok_or_else(|| {
                        Error::validation(format!("er[{i}].region"), "disc needs radius_m")
                    })?;
                    Ok(UncertaintyRegion::UniformDisc { center, radius })
                }
                "gaussian" => {
                    let cov = r.cov.ok_or_else(|| {
                        Error::validation(format!("er[{i}].region"), "gaussian needs cov")
                    })?;
                    Ok(UncertaintyRegion::Gaussian { center, cov })
                }
                other => Err(Error::validation(
                    format!("er[{i}].region.kind"),
                    format!("unknown kind `{other}`"),
                )),
            }
        }
    }
}

/// Serialize a scenario back to the config schema; `load_scenario` on the
/// output reproduces the scenario exactly (watt/ratio units, full float
/// precision).
pub fn scenario_to_toml(s: &Scenario) -> String {
    let doc = ConfigDoc {
        schema_version: Some(SCHEMA_VERSION),
        case: None,
        params: Some(ParamsDoc {
            carrier_frequency_hz: Some(s.params.carrier_frequency),
            rcs_magnitude: Some(s.params.rcs_magnitude),
            eh_efficiency: Some(s.params.eh_efficiency),
            noise_comm_dbm: None,
            noise_comm_w: Some(s.params.noise_comm),
            noise_sense_dbm: None,
            noise_sense_w: Some(s.params.noise_sense),
            power_budget_dbm: None,
            power_budget_w: Some(s.params.power_budget),
            false_alarm: Some(s.params.false_alarm),
        }),
        bs: Some(
            s.bs.iter()
                .map(|g| BsDoc {
                    center: [g.reference_center.x, g.reference_center.y],
                    axis_deg: None,
                    boresight_deg: Some(g.boresight_angle.to_degrees()),
                    elements: Some(g.element_count),
                    spacing_m: Some(g.spacing),
                })
                .collect(),
        ),
        cu: Some(
            s.cus
                .iter()
                .map(|c| CuDoc {
                    position: [c.position.x, c.position.y],
                    sinr_threshold_db: None,
                    sinr_threshold_ratio: Some(c.sinr_threshold),
                    cu_type: Some(c.cu_type),
                })
                .collect(),
        ),
        er: Some(
            s.ers
                .iter()
                .map(|e| {
                    let (kind, center, radius_m, cov) = match &e.region {
                        UncertaintyRegion::Point { center } => {
                            ("point", *center, None, None)
                        }
                        UncertaintyRegion::UniformDisc { center, radius } => {
                            ("disc", *center, Some(*radius), None)
                        }
                        UncertaintyRegion::Gaussian { center, cov } => {
                            ("gaussian", *center, None, Some(*cov))
                        }
                    };
                    ErDoc {
                        center: None,
                        harvest_threshold_dbm: None,
                        harvest_threshold_w: Some(e.harvest_threshold),
                        region: Some(RegionDoc {
                            kind: kind.to_string(),
                            center: Some([center.x, center.y]),
                            radius_m,
                            cov,
                        }),
                    }
                })
                .collect(),
        ),
        sensing: Some(SensingDoc {
            center: [s.sensing.center.x, s.sensing.center.y],
            side_m: s.sensing.side_length,
            points: Some(toml::Value::Array(
                s.sensing
                    .sample_points
                    .iter()
                    .map(|p| {
                        toml::Value::Array(vec![
                            toml::Value::Float(p.x),
                            toml::Value::Float(p.y),
                        ])
                    })
                    .collect(),
            )),
        }),
    };
    toml::to_string(&doc).expect("scenario serialization cannot fail")
}

/// True when every CU, ER region center, and sensing sample point lies in
/// the radiative near field of every BS.
pub fn all_points_in_radiative_near_field(s: &Scenario) -> bool {
    let mut points: Vec<Point2D> = Vec::new();
    points.extend(s.cus.iter().map(|c| c.position));
    points.extend(s.ers.iter().map(|e| e.region.center()));
    points.extend(s.sensing.sample_points.iter().copied());
    s.bs.iter().all(|g| {
        points
            .iter()
            .all(|p| g.field_region(p) == FieldRegion::RadiativeNear)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn case_only_document_builds_full_scenario() {
        let s = load_scenario("case = 3").unwrap();
        assert_eq!(s.cell_count(), 3);
        assert_relative_eq!(s.params.power_budget, 0.50119, max_relative = 1e-4);
        assert_relative_eq!(s.params.eh_efficiency, 0.7);
        assert_relative_eq!(s.bs[0].reference_center.x, 0.0);
        assert_relative_eq!(s.bs[1].reference_center.x, 45.0);
        assert_relative_eq!(s.bs[1].reference_center.y, 77.94228634059948, epsilon = 1e-9);
        assert_relative_eq!(s.bs[2].reference_center.x, 90.0);
        // Orientations as the layout figures quote them (element lines).
        assert_relative_eq!(s.axis_deg(0), 120.0, epsilon = 1e-9);
        assert_relative_eq!(s.axis_deg(1), 0.0, epsilon = 1e-9);
        assert_relative_eq!(s.axis_deg(2), 60.0, epsilon = 1e-9);
        let er_centers: Vec<_> = s.ers.iter().map(|e| e.region.center()).collect();
        assert_relative_eq!(er_centers[0].x, 3.75);
        assert_relative_eq!(er_centers[0].y, 37.5);
        assert_relative_eq!(er_centers[1].x, 22.5);
        assert_relative_eq!(er_centers[1].y, 60.0);
        assert_relative_eq!(er_centers[2].x, 85.5);
        assert_relative_eq!(er_centers[2].y, 37.5);
    }

    #[test]
    fn omitted_efficiency_defaults() {
        let doc = r#"
case = 1
[params]
noise_comm_dbm = -50.0
"#;
        let s = load_scenario(doc).unwrap();
        assert_relative_eq!(s.params.eh_efficiency, 0.7);
    }

    #[test]
    fn count_mismatch_rejected() {
        let doc = r#"
[params]
false_alarm = 1e-4
[[bs]]
center = [0.0, 0.0]
axis_deg = 120.0
[[bs]]
center = [45.0, 77.94]
axis_deg = 0.0
[[bs]]
center = [90.0, 0.0]
axis_deg = 60.0
[[cu]]
position = [10.0, 10.0]
[[cu]]
position = [40.0, 60.0]
[[er]]
center = [3.75, 37.5]
[[er]]
center = [22.5, 60.0]
[[er]]
center = [85.5, 37.5]
[sensing]
center = [20.0, 24.0]
side_m = 3.0
"#;
        let err = load_scenario(doc).unwrap_err();
        assert!(matches!(err, Error::Validation { .. }), "{err}");
        assert!(err.to_string().contains("mismatch"));
    }

    #[test]
    fn nonpositive_parameter_names_field() {
        let doc = r#"
case = 3
[params]
eh_efficiency = -0.5
"#;
        let err = load_scenario(doc).unwrap_err();
        assert!(err.to_string().contains("eh_efficiency"), "{err}");
    }

    #[test]
    fn discretize_center_only() {
        let pts = discretize_sensing_area(Point2D::new(0.0, 0.0), 3.0, 1).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0], Point2D::new(0.0, 0.0));
    }

    #[test]
    fn discretize_five_symmetric() {
        let pts = discretize_sensing_area(Point2D::new(0.0, 0.0), 3.0, 5).unwrap();
        assert_eq!(pts.len(), 5);
        assert_eq!(pts[0], Point2D::new(0.0, 0.0));
        for corner in &pts[1..] {
            assert_relative_eq!(corner.x.abs(), 0.75);
            assert_relative_eq!(corner.y.abs(), 0.75);
        }
        // Translation equivariance.
        let shifted = discretize_sensing_area(Point2D::new(10.0, 10.0), 3.0, 5).unwrap();
        for (a, b) in pts.iter().zip(&shifted) {
            assert_relative_eq!(a.x + 10.0, b.x);
            assert_relative_eq!(a.y + 10.0, b.y);
        }
    }

    #[test]
    fn discretize_unsupported_count() {
        assert!(discretize_sensing_area(Point2D::new(0.0, 0.0), 3.0, 7).is_err());
    }

    #[test]
    fn builtin_cases_share_everything_but_cus() {
        let a = builtin_case(1).unwrap();
        let b = builtin_case(2).unwrap();
        assert_eq!(a.bs, b.bs);
        assert_eq!(a.ers, b.ers);
        assert_eq!(a.sensing, b.sensing);
        assert_ne!(
            a.cus.iter().map(|c| c.position).collect::<Vec<_>>(),
            b.cus.iter().map(|c| c.position).collect::<Vec<_>>()
        );
        assert!(builtin_case(4).is_err());
    }

    #[test]
    fn builtin_points_in_radiative_near_field() {
        for id in 1..=3 {
            let s = builtin_case(id).unwrap();
            assert!(
                all_points_in_radiative_near_field(&s),
                "case {id} has a point outside the radiative near field"
            );
        }
    }

    #[test]
    fn serialize_reload_round_trip() {
        let s = builtin_case(3)
            .unwrap()
            .with_uncertainty_area(std::f64::consts::PI);
        let text = scenario_to_toml(&s);
        let back = load_scenario(&text).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn case_distance_ordering_to_sensing_area() {
        // Case 1 far, case 2 moderate, case 3 close; per CU index.
        let center = builtin_case(1).unwrap().sensing.center;
        let d = |id: u32| -> Vec<f64> {
            builtin_case(id)
                .unwrap()
                .cus
                .iter()
                .map(|c| c.position.distance(&center))
                .collect()
        };
        let (d1, d2, d3) = (d(1), d(2), d(3));
        for k in 0..3 {
            assert!(
                d3[k] < d2[k] && d2[k] < d1[k],
                "cu {k}: case distances {} / {} / {}",
                d1[k],
                d2[k],
                d3[k]
            );
        }
    }
}
