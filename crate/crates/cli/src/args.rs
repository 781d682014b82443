use clap::{Args, Parser, Subcommand, ValueEnum};
use rangetap_core::auction::RangeCheckMode;
use rangetap_core::geometry::Point;
use rangetap_core::sim::{MapKind, Method};
use std::path::PathBuf;

/// Parses `X,Y` into a point. Both coordinates must be finite.
pub fn parse_point(s: &str) -> Result<Point, String> {
    let mut parts = s.split(',');
    let (Some(x), Some(y), None) = (parts.next(), parts.next(), parts.next()) else {
        return Err(format!("expected X,Y, got '{s}'"));
    };
    let coord = |t: &str| -> Result<f64, String> {
        let v: f64 = t.trim().parse().map_err(|_| format!("'{}' is not a number", t.trim()))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("'{}' is not finite", t.trim()))
        }
    };
    Ok(Point::new(coord(x)?, coord(y)?))
}

#[derive(Debug, Parser)]
#[command(name = "rangetap", version, about = "Range-constrained multi-robot task allocation and path planning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Plan one path on a scenario or a generated map.
    Plan(PlanArgs),
    /// Allocate a scenario's tasks to its robots.
    Allocate(AllocateArgs),
    /// Allocate, then replay the mission and report remaining range.
    Simulate(SimulateArgs),
    /// Run a benchmark suite.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlannerKind {
    Gos,
    Astar,
    Visgraph,
}

impl PlannerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PlannerKind::Gos => "gos",
            PlannerKind::Astar => "astar",
            PlannerKind::Visgraph => "visgraph",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Table1,
    Fig6,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Scenario file supplying obstacles and bounds.
    #[arg(long, required_unless_present = "map", conflicts_with = "map")]
    pub scenario: Option<PathBuf>,
    /// Generate a map instead: small, medium, large or random.
    #[arg(long)]
    pub map: Option<MapKind>,
    /// Seed for --map.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub from: Point,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub to: Point,
    #[arg(long, value_enum, default_value_t = PlannerKind::Gos)]
    pub planner: PlannerKind,
    /// Robot radius used to inflate obstacles, in meters.
    #[arg(long, default_value_t = 0.0)]
    pub radius: f64,
    /// Grid cell size for astar, in meters.
    #[arg(long, default_value_t = 1.0)]
    pub resolution: f64,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Directory for report.json and metrics.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AllocateArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value_t = Method::RangeTap)]
    pub mode: Method,
    /// Overrides the scenario's range check.
    #[arg(long)]
    pub range_check: Option<RangeCheckMode>,
    /// Recompute every robot's bids each round.
    #[arg(long)]
    pub eager: bool,
    /// Directory for allocation.json and metrics.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value_t = Method::RangeTap)]
    pub mode: Method,
    #[arg(long)]
    pub range_check: Option<RangeCheckMode>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Directory for report.json and metrics.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = "bench-out")]
    pub out: PathBuf,
}
