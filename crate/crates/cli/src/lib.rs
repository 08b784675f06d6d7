//! Command-line front end: parameter sweeps written as CSV tables.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hinfty::convexset::{
    continuity_curve, hull_sample, orbit_coradius, sample_boundary, ContinuityConfig, CoradiusConfig, KleinCloud,
};
use hinfty::embed::{
    boundary_direction, curvature, embed_dist, pairing_iu_minus_one, fitted_kl_slope, kl_slope, l2_divergence_diag,
    renorm_ratio, speed, speed_fit, EmbedParams,
};
use hinfty::harmonics::dim_hk;
use hinfty::hypgroup::{
    boost, iwasawa, iwasawa_jacobian_residual, polar, random_orthogonal, random_word, rotation, sigma_relation,
};
use hinfty::par::par_map;
use hinfty::quadspace::acosh_one_plus;
use hinfty::prinseries::{lambda_k, signature_index, SeriesParams, WeightVector};
use hinfty::simcocycle::{
    affine_residual, cnorm_power_law, cocycle_residual, primitive_divergence_at_origin, Field, RadialGrid, Similarity,
};
use hinfty::treerep::{tree_embed, MetricTree};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "hinfty", version, about = "Numerics for exotic representations of Isom(H^n) on infinite-dimensional hyperbolic space")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Opts,
}

#[derive(Debug, Clone, Args)]
pub struct Opts {
    /// Dimension of the hyperbolic space H^n.
    #[arg(long, global = true, default_value_t = 2)]
    pub n: usize,
    /// Deformation parameter t.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub t: Option<f64>,
    /// Comma-separated list of t values.
    #[arg(long = "t-list", global = true, value_delimiter = ',', allow_negative_numbers = true)]
    pub t_list: Option<Vec<f64>>,
    /// Harmonic truncation degree K.
    #[arg(long = "K", global = true)]
    pub k: Option<usize>,
    /// Sphere quadrature degree (jacobian integral in `relation`).
    #[arg(long, global = true)]
    pub quad: Option<usize>,
    /// Displacement grid "start:stop:step" or a comma-separated list.
    #[arg(long = "u-grid", global = true)]
    pub u_grid: Option<String>,
    /// Single displacement u (shorthand for a one-point grid).
    #[arg(long, global = true)]
    pub u: Option<f64>,
    /// Tolerance of the subcommand's invariant check.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Output CSV path (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Index of the form B_t over a t grid: columns n, t, K, index, parity_rule, binomial_rule, positive_degrees, negative_degrees.
    Signature,
    /// Intertwiner eigenvalues: columns n, t, k, lambda_k, block_dim.
    Lambda,
    /// Orbit distances: columns t, u, i_u, exp_tu, dist (arccosh I_u), t_u, defect (dist − t u).
    Dist,
    /// Pullback speed: columns n, t, closed, fitted, abs_diff, curvature, curvature_speed_sq.
    Speed,
    /// Boundary direction decay: columns t, k, block_dim, a_bar, lambda_k, plain_partial, weighted_partial.
    Boundary {
        /// Largest displacement of the extrapolation.
        #[arg(long = "u-max", default_value_t = 30.0)]
        u_max: f64,
        /// Also write the boundary Klein cloud (m directions) to this path.
        #[arg(long)]
        cloud: Option<PathBuf>,
        #[arg(long, default_value_t = 64)]
        m: usize,
    },
    /// Hull continuity proxy: columns t, hausdorff, equivariance, center[, coradius].
    Continuity {
        #[arg(long, default_value_t = 1.0)]
        t0: f64,
        /// Ball radius R (hyperbolic).
        #[arg(long, default_value_t = 3.0)]
        radius: f64,
        /// Boundary net size.
        #[arg(long, default_value_t = 64)]
        m: usize,
        /// Midpoint closure iterations.
        #[arg(long, default_value_t = 3)]
        iters: usize,
        /// Add the sampled coradius of the orbit in the hull.
        #[arg(long)]
        coradius: bool,
        #[arg(long = "orbit-directions", default_value_t = 256)]
        orbit_directions: usize,
        #[arg(long = "orbit-step", default_value_t = 0.05)]
        orbit_step: f64,
        /// Also write the hull clouds (one block per t) to this path.
        #[arg(long)]
        cloud: Option<PathBuf>,
    },
    /// Small-t regime: columns t, u, dist, dist_over_sqrt_t, kl_slope, fitted_slope.
    Renorm,
    /// Similarity cocycle: columns l, t, pairs, cocycle_residual, affine_residual, power_slope, expected_slope, primitive_diverges.
    Cocycle {
        /// Comma-separated space dimensions l.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        l: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        pairs: usize,
    },
    /// Tree realizations: columns tree, m, lambda, positive_eigenvalues, top_eigenvalue, max_distance_error, max_gram_error.
    Tree {
        /// Edge-list file, one "u v" per line, 0-indexed (random trees when absent).
        #[arg(long)]
        edges: Option<PathBuf>,
        /// Comma-separated λ values (> 1).
        #[arg(long, value_delimiter = ',', default_value = "1.5,3")]
        lam: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long = "max-m", default_value_t = 12)]
        max_m: usize,
    },
    /// Group identities: columns sample, lambda, mu, v, sigma_residual, iwasawa_residual, polar_residual, jacobian_residual, jacobian_integral.
    Relation {
        #[arg(long, default_value_t = 50)]
        samples: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Config(String),
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Invariant(_) => EXIT_INVARIANT,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Invariant(m) => write!(f, "invariant failure: {m}"),
        }
    }
}

impl From<hinfty::Error> for CliError {
    fn from(e: hinfty::Error) -> Self {
        if e.is_config() {
            CliError::Config(e.to_string())
        } else {
            CliError::Invariant(e.to_string())
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn to_csv(&self) -> CliResult<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Config(format!("csv: {e}"));
        w.write_record(&self.header).map_err(io)?;
        for row in &self.rows {
            w.write_record(row).map_err(io)?;
        }
        w.into_inner().map_err(|e| CliError::Config(format!("csv: {e}")))
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let idx = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[idx].as_str()).collect())
    }
}

/// Result of a run: the table, extra files and an optional failed invariant detected after
/// the table was complete (the table is still written).
#[derive(Debug, Clone)]
pub struct Outcome {
    pub table: Table,
    pub extra: Vec<(PathBuf, Table)>,
    pub failure: Option<String>,
}

impl Outcome {
    fn ok(table: Table) -> Self {
        Self { table, extra: Vec::new(), failure: None }
    }
}

fn t_values(opts: &Opts) -> CliResult<Vec<f64>> {
    match (&opts.t_list, opts.t) {
        (Some(list), _) if !list.is_empty() => Ok(list.clone()),
        (_, Some(t)) => Ok(vec![t]),
        _ => Err(CliError::Config("this subcommand needs --t or --t-list".into())),
    }
}

fn require_embedding_t(ts: &[f64]) -> CliResult<()> {
    for &t in ts {
        if !(t > 0.0 && t <= 1.0) {
            return Err(CliError::Config(format!("t = {t} must lie in (0, 1]")));
        }
    }
    Ok(())
}

fn k_value(opts: &Opts, default: usize) -> CliResult<usize> {
    let k = opts.k.unwrap_or(default);
    if k < 4 {
        return Err(CliError::Config(format!("K = {k} must be at least 4")));
    }
    Ok(k)
}

fn check_n(n: usize) -> CliResult<()> {
    if n < 2 {
        return Err(CliError::Config(format!("n = {n} must be at least 2")));
    }
    Ok(())
}

/// Parses "start:stop:step" (inclusive of stop within rounding) or a comma list.
pub fn parse_u_grid(spec: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::Config(format!("cannot parse u grid '{spec}'"));
    if spec.contains(':') {
        let parts: Vec<f64> = spec.split(':').map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
        if parts.len() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0] {
            return Err(bad());
        }
        let count = ((parts[1] - parts[0]) / parts[2] + 1e-9).floor() as usize;
        Ok((0..=count).map(|i| parts[0] + i as f64 * parts[2]).collect())
    } else {
        let list: Vec<f64> = spec.split(',').map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
        if list.is_empty() {
            return Err(bad());
        }
        Ok(list)
    }
}

fn u_values(opts: &Opts, default: &str) -> CliResult<Vec<f64>> {
    match (&opts.u_grid, opts.u) {
        (Some(g), _) => parse_u_grid(g),
        (None, Some(u)) => Ok(vec![u]),
        (None, None) => parse_u_grid(default),
    }
}

fn collect<T>(items: Vec<CliResult<T>>) -> CliResult<Vec<T>> {
    items.into_iter().collect()
}

fn signature(opts: &Opts) -> CliResult<Outcome> {
    check_n(opts.n)?;
    let ts = t_values(opts)?;
    let k = k_value(opts, 20)?;
    let reports = collect(par_map(ts.len(), |i| -> CliResult<_> {
        let params = SeriesParams::new(opts.n, ts[i])?;
        Ok(signature_index(&params, k)?)
    }))?;
    let mut table = Table::new(&[
        "n",
        "t",
        "K",
        "index",
        "parity_rule",
        "binomial_rule",
        "positive_degrees",
        "negative_degrees",
    ]);
    let mut failure = None;
    for (t, r) in ts.iter().zip(&reports) {
        if r.index != r.binomial_rule || r.index != r.parity_rule {
            failure = Some(format!(
                "index law at t = {t}: index {} vs parity rule {} vs binomial rule {}",
                r.index, r.parity_rule, r.binomial_rule
            ));
        }
        table.rows.push(vec![
            opts.n.to_string(),
            fmt_f64(*t),
            k.to_string(),
            r.index.to_string(),
            r.parity_rule.to_string(),
            r.binomial_rule.to_string(),
            r.positive_blocks.len().to_string(),
            r.negative_blocks.len().to_string(),
        ]);
    }
    Ok(Outcome { table, extra: Vec::new(), failure })
}

fn lambda(opts: &Opts) -> CliResult<Outcome> {
    check_n(opts.n)?;
    let ts = t_values(opts)?;
    let k = k_value(opts, 20)?;
    let mut table = Table::new(&["n", "t", "k", "lambda_k", "block_dim"]);
    for &t in &ts {
        let params = SeriesParams::new(opts.n, t)?;
        for kk in 0..=k {
            table.rows.push(vec![
                opts.n.to_string(),
                fmt_f64(t),
                kk.to_string(),
                fmt_f64(lambda_k(&params, kk)),
                dim_hk(opts.n, kk).to_string(),
            ]);
        }
    }
    Ok(Outcome::ok(table))
}

fn dist(opts: &Opts) -> CliResult<Outcome> {
    check_n(opts.n)?;
    let ts = t_values(opts)?;
    require_embedding_t(&ts)?;
    let us = u_values(opts, "0:40:1")?;
    let tol = opts.tol.unwrap_or(1e-9);
    let mut table = Table::new(&["t", "u", "i_u", "exp_tu", "dist", "t_u", "defect"]);
    let mut failure = None;
    for &t in &ts {
        let params = SeriesParams::new(opts.n, t)?;
        let excess = collect(par_map(us.len(), |i| pairing_iu_minus_one(&params, us[i]).map_err(CliError::from)))?;
        for (&u, &m1) in us.iter().zip(&excess) {
            let iu = 1.0 + m1;
            let bound = (t * u).exp();
            // Relative slack: the bound grows like e^{tu}.
            if iu > bound * (1.0 + tol) {
                failure = Some(format!("upper bound I_u <= e^(t u) at t = {t}, u = {u}: ratio {}", iu / bound));
            }
            let d = acosh_one_plus(m1)?;
            table.rows.push(vec![
                fmt_f64(t),
                fmt_f64(u),
                fmt_f64(iu),
                fmt_f64(bound),
                fmt_f64(d),
                fmt_f64(t * u),
                fmt_f64(d - t * u),
            ]);
        }
    }
    Ok(Outcome { table, extra: Vec::new(), failure })
}

fn speed_cmd(opts: &Opts) -> CliResult<Outcome> {
    check_n(opts.n)?;
    let ts = t_values(opts)?;
    require_embedding_t(&ts)?;
    let tol = opts.tol.unwrap_or(1e-4);
    let mut table = Table::new(&["n", "t", "closed", "fitted", "abs_diff", "curvature", "curvature_speed_sq"]);
    let mut failure = None;
    for &t in &ts {
        let params = SeriesParams::new(opts.n, t)?;
        let closed = speed(&params);
        let fitted = speed_fit(&params)?;
        let kappa = curvature(&params);
        let diff = (fitted - closed).abs();
        if diff > tol {
            failure = Some(format!("fitted speed at t = {t} differs from the closed form by {diff}"));
        }
        table.rows.push(vec![
            opts.n.to_string(),
            fmt_f64(t),
            fmt_f64(closed),
            fmt_f64(fitted),
            fmt_f64(diff),
            fmt_f64(kappa),
            fmt_f64(kappa * closed * closed),
        ]);
    }
    Ok(Outcome { table, extra: Vec::new(), failure })
}

fn cloud_table(clouds: &[&KleinCloud]) -> Table {
    let dim = clouds.iter().map(|c| c.dim()).max().unwrap_or(0);
    let mut header = vec!["t".to_string(), "K".to_string(), "provenance".to_string()];
    header.extend((1..=dim).map(|i| format!("x{i}")));
    let mut rows = Vec::new();
    for cloud in clouds {
        for p in &cloud.points {
            let mut row = vec![fmt_f64(cloud.t), cloud.k_max.to_string(), cloud.provenance.as_str().to_string()];
            row.extend(p.iter().map(|v| fmt_f64(*v)));
            rows.push(row);
        }
    }
    Table { header, rows }
}

fn boundary(opts: &Opts, u_max: f64, cloud: &Option<PathBuf>, m: usize) -> CliResult<Outcome> {
    check_n(opts.n)?;
    let ts = t_values(opts)?;
    let k = k_value(opts, 96)?;
    let tol = opts.tol.unwrap_or(1e-6);
    let mut table = Table::new(&["t", "k", "block_dim", "a_bar", "lambda_k", "plain_partial", "weighted_partial"]);
    let mut failure = None;
    let mut clouds = Vec::new();
    for &t in &ts {
        let ep = EmbedParams::new(opts.n, t, k)?;
        let dir = boundary_direction(&ep, u_max, tol)?;
        let bar = dir.pole_normalized();
        let weights = WeightVector::new(ep.params, k);
        let k_list: Vec<usize> = (1..=k).collect();
        let diag = l2_divergence_diag(&bar, opts.n, &weights, &k_list, f64::INFINITY)?;
        if !(diag.plain_increasing && diag.exponent > 0.0) {
            failure = Some(format!("plain partial sums at t = {t} do not grow (exponent {})", diag.exponent));
        }
        let mut plain = 0.0;
        let mut weighted = 0.0;
        for kk in 0..=k {
            let term = dim_hk(opts.n, kk) as f64 * bar[kk] * bar[kk];
            plain += term;
            weighted += weights.lam[kk].abs() * term;
            table.rows.push(vec![
                fmt_f64(t),
                kk.to_string(),
                dim_hk(opts.n, kk).to_string(),
                fmt_f64(bar[kk]),
                fmt_f64(weights.lam[kk]),
                fmt_f64(plain),
                fmt_f64(weighted),
            ]);
        }
        if cloud.is_some() {
            clouds.push(sample_boundary(&ep.params, k, m)?);
        }
    }
    let mut extra = Vec::new();
    if let Some(path) = cloud {
        extra.push((path.clone(), cloud_table(&clouds.iter().collect::<Vec<_>>())));
    }
    Ok(Outcome { table, extra, failure })
}

#[allow(clippy::too_many_arguments)]
fn continuity(
    opts: &Opts,
    t0: f64,
    radius: f64,
    m: usize,
    iters: usize,
    with_coradius: bool,
    orbit_directions: usize,
    orbit_step: f64,
    cloud: &Option<PathBuf>,
) -> CliResult<Outcome> {
    check_n(opts.n)?;
    let ts = opts.t_list.clone().unwrap_or_else(|| vec![0.9, 0.95, 0.99]);
    require_embedding_t(&ts)?;
    require_embedding_t(&[t0])?;
    let k = k_value(opts, 16)?;
    let cfg = ContinuityConfig { n: opts.n, t0, radius, k_max: k, m, iters, seed: opts.seed };
    let rows = continuity_curve(&cfg, &ts)?;
    let mut header = vec!["t", "hausdorff", "equivariance", "center"];
    if with_coradius {
        header.push("coradius");
    }
    let mut table = Table::new(&header);
    let coradii = if with_coradius {
        let ccfg = CoradiusConfig { n: opts.n, radius, k_max: k, m, iters, seed: opts.seed, orbit_directions, orbit_step };
        collect(ts.iter().map(|&t| orbit_coradius(&ccfg, t).map_err(CliError::from)).collect())?
    } else {
        Vec::new()
    };
    for (i, r) in rows.iter().enumerate() {
        let mut row = vec![fmt_f64(r.t), fmt_f64(r.hausdorff), fmt_f64(r.equivariance), fmt_f64(r.center)];
        if with_coradius {
            row.push(fmt_f64(coradii[i]));
        }
        table.rows.push(row);
    }
    let mut extra = Vec::new();
    if let Some(path) = cloud {
        let mut hulls = Vec::new();
        for &t in std::iter::once(&t0).chain(ts.iter()) {
            let params = SeriesParams::new(opts.n, t)?;
            hulls.push(hull_sample(&sample_boundary(&params, k, m)?, iters, opts.seed)?.0);
        }
        extra.push((path.clone(), cloud_table(&hulls.iter().collect::<Vec<_>>())));
    }
    Ok(Outcome { table, extra, failure: None })
}

fn renorm(opts: &Opts) -> CliResult<Outcome> {
    check_n(opts.n)?;
    let ts = opts.t_list.clone().unwrap_or_else(|| vec![0.02, 0.01, 0.005]);
    require_embedding_t(&ts)?;
    let u = opts.u.unwrap_or(1.0);
    let g = boost(opts.n, u)?;
    let slope = kl_slope(opts.n, &g)?;
    let fitted = fitted_kl_slope(opts.n, &g, &ts)?;
    let mut table = Table::new(&["t", "u", "dist", "dist_over_sqrt_t", "kl_slope", "fitted_slope"]);
    for &t in &ts {
        let params = SeriesParams::new(opts.n, t)?;
        let d = embed_dist(&params, &g)?;
        let ratio = renorm_ratio(&params, &g)?;
        table.rows.push(vec![fmt_f64(t), fmt_f64(u), fmt_f64(d), fmt_f64(ratio), fmt_f64(slope.a1), fmt_f64(fitted)]);
    }
    let failure = if !slope.degenerate && !(slope.a1 > 0.0) {
        Some(format!("KL slope a1 = {} is not positive", slope.a1))
    } else {
        None
    };
    Ok(Outcome { table, extra: Vec::new(), failure })
}

fn random_similarity(l: usize, rng: &mut ChaCha8Rng) -> CliResult<Similarity> {
    let v: Vec<f64> = (0..l).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let lambda = rng.gen_range(-1.0f64..1.0).exp();
    Ok(Similarity::new(lambda, &v, random_orthogonal(l, rng))?)
}

fn cocycle(opts: &Opts, dims: &[usize], pairs: usize) -> CliResult<Outcome> {
    let t = opts.t.unwrap_or(0.5);
    let tol = opts.tol.unwrap_or(1e-8);
    let mut table = Table::new(&[
        "l",
        "t",
        "pairs",
        "cocycle_residual",
        "affine_residual",
        "power_slope",
        "expected_slope",
        "primitive_diverges",
    ]);
    let mut failure = None;
    for &l in dims {
        let grid = RadialGrid::new(l, 1e-4, 1e4, 2, 8)?;
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ ((l as u64) << 32));
        let sims = (0..2 * pairs).map(|_| random_similarity(l, &mut rng)).collect::<CliResult<Vec<_>>>()?;
        let probe = Field::analytic(move |y| {
            let r2 = y.norm_squared();
            hinfty::simcocycle::Complex64::new((-r2).exp(), 0.3 * y[0] * (-r2).exp())
        });
        let residuals = collect(par_map(pairs, |i| -> CliResult<(f64, f64)> {
            let (a, b) = (&sims[2 * i], &sims[2 * i + 1]);
            Ok((cocycle_residual(l, t, a, b, &grid)?, affine_residual(l, t, a, b, &probe, &grid)?))
        }))?;
        let coc = residuals.iter().map(|r| r.0).fold(0.0, f64::max);
        let aff = residuals.iter().map(|r| r.1).fold(0.0, f64::max);
        let dir: Vec<f64> = (0..l).map(|i| 1.0 + i as f64).collect();
        let slope = cnorm_power_law(l, t, &dir, &[0.25, 0.5, 1.0, 2.0, 4.0])?;
        let diverges = primitive_divergence_at_origin(l, t)?.diverges;
        if coc > tol || aff > tol {
            failure = Some(format!("cocycle identity at l = {l}: residuals {coc:e}, {aff:e} exceed {tol:e}"));
        }
        table.rows.push(vec![
            l.to_string(),
            fmt_f64(t),
            pairs.to_string(),
            fmt_f64(coc),
            fmt_f64(aff),
            fmt_f64(slope),
            fmt_f64(2.0 * t),
            diverges.to_string(),
        ]);
    }
    Ok(Outcome { table, extra: Vec::new(), failure })
}

fn tree(opts: &Opts, edges: &Option<PathBuf>, lams: &[f64], samples: usize, max_m: usize) -> CliResult<Outcome> {
    let tol = opts.tol.unwrap_or(1e-8);
    let trees = match edges {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            vec![MetricTree::parse_edge_list(&text)?]
        }
        None => {
            if max_m == 0 {
                return Err(CliError::Config("max-m must be at least 1".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            (0..samples)
                .map(|_| {
                    let m = rng.gen_range(1..=max_m);
                    MetricTree::random(m, &mut rng).map_err(CliError::from)
                })
                .collect::<CliResult<Vec<_>>>()?
        }
    };
    let jobs: Vec<(usize, f64)> = (0..trees.len()).flat_map(|i| lams.iter().map(move |&l| (i, l))).collect();
    let embeddings = collect(par_map(jobs.len(), |j| tree_embed(&trees[jobs[j].0], jobs[j].1).map_err(CliError::from)))?;
    let mut table = Table::new(&[
        "tree",
        "m",
        "lambda",
        "positive_eigenvalues",
        "top_eigenvalue",
        "max_distance_error",
        "max_gram_error",
    ]);
    let mut failure = None;
    for ((i, lam), emb) in jobs.iter().zip(&embeddings) {
        if emb.max_distance_error > tol {
            failure = Some(format!("tree {i} at λ = {lam}: distance error {:e}", emb.max_distance_error));
        }
        table.rows.push(vec![
            i.to_string(),
            trees[*i].m.to_string(),
            fmt_f64(*lam),
            emb.positive_count.to_string(),
            fmt_f64(emb.eigenvalues[0]),
            fmt_f64(emb.max_distance_error),
            fmt_f64(emb.max_gram_error),
        ]);
    }
    Ok(Outcome { table, extra: Vec::new(), failure })
}

fn relation(opts: &Opts, samples: usize) -> CliResult<Outcome> {
    check_n(opts.n)?;
    let n = opts.n;
    let tol = opts.tol.unwrap_or(1e-8);
    let quad = opts.quad.unwrap_or(200);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut table = Table::new(&[
        "sample",
        "lambda",
        "mu",
        "v",
        "sigma_residual",
        "iwasawa_residual",
        "polar_residual",
        "jacobian_residual",
        "jacobian_integral",
    ]);
    let mut failure = None;
    for i in 0..samples {
        let lambda = rng.gen_range(-1.0f64..1.0).exp();
        let mu = rng.gen_range(-1.0f64..1.0).exp();
        let v: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let rel = sigma_relation(n, lambda, mu, &v)?;
        let g = random_word(n, 4, &mut rng)?;
        let iw = iwasawa(&g)?;
        let pd = polar(&g)?;
        let k = rotation(n, &random_orthogonal(n, &mut rng))?;
        let s = rng.gen_range(-0.5..0.5);
        let jac = iwasawa_jacobian_residual(&g, k.matrix(), s)?;
        let integral = if n <= 3 { hinfty::hypgroup::jacobian_integral(&boost(n, 1.0)?, quad)? } else { f64::NAN };
        let scale = g.matrix().amax().max(1.0);
        if rel.residual > 1e-10 || iw.residual > 1e-10 * scale || pd.residual > 1e-10 * scale || jac > tol {
            failure = Some(format!(
                "group identities at sample {i}: sigma {:e}, iwasawa {:e}, polar {:e}, jacobian {:e}",
                rel.residual, iw.residual, pd.residual, jac
            ));
        }
        if n <= 3 && (integral - 1.0).abs() > tol {
            failure = Some(format!("jacobian integral {integral} differs from 1"));
        }
        table.rows.push(vec![
            i.to_string(),
            fmt_f64(lambda),
            fmt_f64(mu),
            v.iter().map(|c| fmt_f64(*c)).collect::<Vec<_>>().join(";"),
            fmt_f64(rel.residual),
            fmt_f64(iw.residual),
            fmt_f64(pd.residual),
            fmt_f64(jac),
            fmt_f64(integral),
        ]);
    }
    Ok(Outcome { table, extra: Vec::new(), failure })
}

/// Runs a parsed command; never touches the filesystem except to read tree input.
pub fn run(cli: &Cli) -> CliResult<Outcome> {
    let o = &cli.opts;
    match &cli.command {
        Command::Signature => signature(o),
        Command::Lambda => lambda(o),
        Command::Dist => dist(o),
        Command::Speed => speed_cmd(o),
        Command::Boundary { u_max, cloud, m } => boundary(o, *u_max, cloud, *m),
        Command::Continuity { t0, radius, m, iters, coradius, orbit_directions, orbit_step, cloud } => {
            continuity(o, *t0, *radius, *m, *iters, *coradius, *orbit_directions, *orbit_step, cloud)
        }
        Command::Renorm => renorm(o),
        Command::Cocycle { l, pairs } => cocycle(o, l, *pairs),
        Command::Tree { edges, lam, samples, max_m } => tree(o, edges, lam, *samples, *max_m),
        Command::Relation { samples } => relation(o, *samples),
    }
}

/// Applies HINFTY_THREADS.
pub fn configure_threads(value: Option<String>) -> CliResult<()> {
    if let Some(v) = value {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("HINFTY_THREADS = '{v}' is not a thread count")))?;
        if n == 0 {
            return Err(CliError::Config("HINFTY_THREADS must be at least 1".into()));
        }
        hinfty::par::set_max_threads(n);
    }
    Ok(())
}

fn write_bytes(path: &Option<PathBuf>, bytes: &[u8]) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::Config(format!("cannot write {}: {e}", p.display()))),
        None => std::io::stdout().write_all(bytes).map_err(|e| CliError::Config(format!("stdout: {e}"))),
    }
}

/// Parses, runs, writes outputs and returns the process exit code.
pub fn main_with(cli: &Cli) -> i32 {
    let result = configure_threads(std::env::var("HINFTY_THREADS").ok()).and_then(|_| run(cli)).and_then(|outcome| {
        write_bytes(&cli.opts.out, &outcome.table.to_csv()?)?;
        for (path, table) in &outcome.extra {
            write_bytes(&Some(path.clone()), &table.to_csv()?)?;
        }
        match outcome.failure {
            Some(msg) => Err(CliError::Invariant(msg)),
            None => Ok(()),
        }
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("hinfty: {e}");
            e.exit_code()
        }
    }
}
