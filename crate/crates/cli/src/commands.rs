//! Subcommand implementations. Each command produces a [`RunReport`]; the
//! results of its last step are the command's primary artifact.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use orbitlet_core::admissibility::{
    check_admissible, default_probe_grid, piece_region, synthesize_nonunimodular, synthesize_unimodular,
    synthesize_weakly_admissible, AdmissibilityReport, AdmissibilityVerdict, TilingOptions,
};
use orbitlet_core::expr::Expr;
use orbitlet_core::groups::{GroupChart, TruncationSpec};
use orbitlet_core::linalg::{ChartPoint, Freq};
use orbitlet_core::orbits::verify_semi_invariance;
use orbitlet_core::orbits::{classify_point, quotient_measure, OrbitAtlas, Region, Verdict};
use orbitlet_core::plancherel::{
    identify_plancherel_density, random_quasi_samples, verify_quasi_invariance, verify_scaling_law, CandidateDensity,
};
use orbitlet_core::profile::FrequencyProfile;
use orbitlet_core::transform::{analyze, h_nodes, l2g_norm, random_band_limited, synthesize, HNodeSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::cli::{
    CheckArgs, ClassifyArgs, Cli, Command, GroupArgs, MakeWaveletArgs, PlancherelArgs, PlancherelCheck, TransformArgs,
};
use crate::config::{
    hnode_spec, parse_chart_point, parse_csv, parse_freq, parse_group, parse_range, parse_region, parse_wavelet,
    PipelineConfig, RoundTripSpec,
};
use crate::defaults::{default_contraction, default_wavelet, scaling_regions};
use crate::io::{self, json_arg};
use crate::report::{CliError, Outcome, RunReport, Status};
use crate::verify::{parse_groups, verify_suite};

/// Tolerance on scaling exponents and on quasi- against semi-invariance.
pub const IDENTITY_TOL: f64 = 1e-10;

/// Shared command state: seed, output directory and optional configuration
/// defaults.
pub struct Context {
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub config: Option<PipelineConfig>,
}

pub(crate) fn to_json<T: Serialize>(x: &T) -> Result<Value, CliError> {
    serde_json::to_value(x).map_err(|e| CliError::Numerical(e.to_string()))
}

fn verdict_label<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(Value::String(s)) => s,
        _ => "UNKNOWN".into(),
    }
}

impl Context {
    pub fn new(cli: &Cli) -> Result<Self, CliError> {
        let config = match &cli.config {
            Some(p) => Some(load_config(p)?),
            None => None,
        };
        Ok(Self {
            seed: cli.seed,
            out_dir: cli.out_dir.clone(),
            config,
        })
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    fn chart(&self, g: &GroupArgs) -> Result<GroupChart, CliError> {
        match (&g.group, &self.config) {
            (Some(arg), _) => parse_group(arg)?.chart(),
            (None, Some(c)) => c.group.chart(),
            (None, None) => Err(CliError::Config("--group is required".into())),
        }
    }

    fn region(&self, arg: &Option<String>, chart: &GroupChart) -> Result<Region, CliError> {
        match (arg, &self.config) {
            (Some(a), _) => parse_region(a)?.resolve(chart),
            (None, Some(c)) => c.region.resolve(chart),
            (None, None) => crate::config::RegionSpec::default().resolve(chart),
        }
    }

    fn wavelet(&self, arg: &Option<String>) -> Result<Option<FrequencyProfile>, CliError> {
        match (arg, &self.config) {
            (Some(a), _) => parse_wavelet(a).map(Some),
            (None, Some(c)) => c.wavelet.as_ref().map(|w| w.load()).transpose(),
            (None, None) => Ok(None),
        }
    }

    fn tolerance(&self, arg: Option<f64>) -> Result<f64, CliError> {
        let t = arg.or(self.config.as_ref().map(|c| c.tolerance)).unwrap_or(1e-6);
        if t > 0.0 && t.is_finite() {
            Ok(t)
        } else {
            Err(CliError::Config(format!("tolerance must be positive, got {t}")))
        }
    }

    fn truncation(&self, chart: &GroupChart) -> TruncationSpec {
        self.config
            .as_ref()
            .and_then(|c| c.truncation.clone())
            .unwrap_or_else(|| TruncationSpec::default_for(chart))
    }

    /// Write a CSV file into the output directory, if there is one.
    pub fn write_csv(&self, name: &str, header: &str, rows: &[Vec<f64>]) -> Result<(), CliError> {
        let Some(dir) = &self.out_dir else {
            return Ok(());
        };
        let mut text = String::from(header);
        text.push('\n');
        for r in rows {
            let line: Vec<String> = r.iter().map(|x| x.to_string()).collect();
            let _ = writeln!(text, "{}", line.join(","));
        }
        std::fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("{}: {e}", dir.display())))?;
        io::write(&dir.join(name), text.as_bytes())
    }
}

pub fn load_config(path: &Path) -> Result<PipelineConfig, CliError> {
    let c: PipelineConfig = json_arg(&path.to_string_lossy(), "configuration")?;
    c.validate()?;
    Ok(c)
}

/// Result of a command: the report plus extra places to write it.
pub struct Execution {
    pub report: RunReport,
    pub report_paths: Vec<PathBuf>,
    /// Print the whole report rather than the last step's results.
    pub print_report: bool,
}

impl Execution {
    /// The JSON printed on stdout.
    pub fn artifact(&self) -> Option<Value> {
        if self.print_report {
            return serde_json::to_value(&self.report).ok();
        }
        self.report
            .steps
            .last()
            .filter(|s| matches!(s.status, Status::Pass | Status::Fail))
            .map(|s| s.results.clone())
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Classify(_) => "classify",
        Command::Atlas(_) => "atlas",
        Command::MakeWavelet(_) => "make-wavelet",
        Command::Check(_) => "check",
        Command::Analyze(_) => "analyze",
        Command::Synthesize(_) => "synthesize",
        Command::Plancherel(_) => "plancherel",
        Command::Verify(_) => "verify",
        Command::Pipeline(_) => "pipeline",
    }
}

pub fn run(cli: &Cli) -> Execution {
    let name = command_name(&cli.command);
    let print_report = matches!(cli.command, Command::Verify(_) | Command::Pipeline(_));
    let done = |report| Execution {
        report,
        report_paths: vec![],
        print_report,
    };
    let ctx = match Context::new(cli) {
        Ok(c) => c,
        Err(e) => {
            let mut r = RunReport::new(name);
            r.run("config", || Err(e));
            return done(r);
        }
    };
    match &cli.command {
        Command::Classify(a) => done(classify(&ctx, a)),
        Command::Atlas(a) => done(atlas(&ctx, a)),
        Command::MakeWavelet(a) => done(make_wavelet(&ctx, a)),
        Command::Check(a) => done(check(&ctx, a)),
        Command::Analyze(a) => done(analyze_cmd(&ctx, a)),
        Command::Synthesize(a) => done(synthesize_cmd(&ctx, a)),
        Command::Plancherel(a) => done(plancherel(&ctx, a)),
        Command::Verify(a) => {
            let mut r = RunReport::new(name);
            match parse_groups(&a.groups) {
                Ok(ids) => verify_suite(&ctx, &ids, a.level, &mut r),
                Err(e) => {
                    r.run("groups", || Err(e));
                }
            }
            done(r)
        }
        Command::Pipeline(a) => {
            let cfg = match (&a.config, ctx.config.clone()) {
                (Some(p), _) => load_config(p),
                (None, Some(c)) => Ok(c),
                (None, None) => Err(CliError::Config("pipeline needs a configuration file".into())),
            };
            match cfg {
                Ok(cfg) => Execution {
                    report: pipeline(&ctx, &cfg),
                    report_paths: cfg.outputs.report.clone().into_iter().collect(),
                    print_report,
                },
                Err(e) => {
                    let mut r = RunReport::new(name);
                    r.run("config", || Err(e));
                    done(r)
                }
            }
        }
    }
}

fn classify(ctx: &Context, a: &ClassifyArgs) -> RunReport {
    let mut r = RunReport::new("classify");
    r.run("classify", || {
        let chart = ctx.chart(&a.group)?;
        let w = parse_freq(&a.point)?;
        let eps = a.epsilons.as_deref().map(parse_csv).transpose()?;
        let c = classify_point(&chart, &w, eps.as_deref())?;
        Ok(Outcome::judged(true, c.verdict.to_string(), to_json(&c)?))
    });
    r
}

fn atlas_json(chart: &GroupChart, region: Option<&Region>) -> Result<Value, CliError> {
    let atlas = OrbitAtlas::for_chart(chart)?;
    let whole = Region::everything(&atlas);
    let parts: Vec<Value> = (0..atlas.transversal.len())
        .map(|i| {
            let dims = atlas.transversal[i].dims();
            let piece = piece_region(i, vec![orbitlet_core::orbits::Interval::all(); dims]);
            Ok(json!(quotient_measure(&atlas, &piece)?))
        })
        .collect::<Result<_, CliError>>()?;
    let mut v = json!({
        "group": chart.name(),
        "unimodular": chart.is_unimodular(),
        "atlas": to_json(&atlas)?,
        "part_measures": parts,
        "quotient_measure": quotient_measure(&atlas, &whole)?,
    });
    if let Some(reg) = region {
        v["region"] = to_json(reg)?;
        v["region_measure"] = json!(quotient_measure(&atlas, reg)?);
    }
    Ok(v)
}

fn atlas(ctx: &Context, a: &GroupArgs) -> RunReport {
    let mut r = RunReport::new("atlas");
    r.run("atlas", || Ok(Outcome::pass(atlas_json(&ctx.chart(a)?, None)?)));
    r
}

/// Synthesis for a region: weak fallback, unimodular normalization, or the
/// tiling construction. Returns the profile and a short description.
fn build_wavelet(
    chart: &GroupChart,
    region: &Region,
    h0: Option<&[f64]>,
    weak: bool,
) -> Result<(FrequencyProfile, String), CliError> {
    if weak {
        return Ok((
            synthesize_weakly_admissible(chart, region)?,
            "weakly admissible window".into(),
        ));
    }
    if chart.is_unimodular() {
        return Ok((synthesize_unimodular(chart, region)?, "normalized window".into()));
    }
    let h0 = match h0 {
        Some(c) => ChartPoint::new(c).map_err(|e| CliError::Config(e.to_string()))?,
        None => default_contraction(chart)?,
    };
    let syn = synthesize_nonunimodular(chart, region, &h0, &TilingOptions::default_for(chart))?;
    let desc = format!(
        "tiling with contraction {:?}, modular value {}",
        syn.contraction.as_slice(),
        syn.contraction_modular
    );
    Ok((syn.profile, desc))
}

fn make_wavelet(ctx: &Context, a: &MakeWaveletArgs) -> RunReport {
    let mut r = RunReport::new("make-wavelet");
    r.run("synthesize", || {
        let chart = ctx.chart(&a.group)?;
        let region = ctx.region(&a.region, &chart)?;
        let h0 = match &a.h0 {
            Some(s) => Some(parse_chart_point(s)?.as_slice().to_vec()),
            None => ctx.config.as_ref().and_then(|c| c.synthesis.h0.clone()),
        };
        let weak = a.weak || ctx.config.as_ref().is_some_and(|c| c.synthesis.weak);
        let (profile, desc) = build_wavelet(&chart, &region, h0.as_deref(), weak)?;
        let v = to_json(&profile)?;
        if let Some(p) = &a.out {
            io::write(p, serde_json::to_string_pretty(&v).unwrap_or_default().as_bytes())?;
        }
        Ok(Outcome::pass(v).with_message(desc))
    });
    r
}

fn probe_points(points: &[String]) -> Result<Vec<Freq>, CliError> {
    points.iter().map(|p| parse_freq(p)).collect()
}

fn t_profile_rows(probes: &[Freq], rep: &AdmissibilityReport) -> Vec<Vec<f64>> {
    probes
        .iter()
        .zip(&rep.values)
        .enumerate()
        .map(|(i, (w, t))| {
            let mut row = vec![i as f64];
            row.extend_from_slice(w.as_slice());
            row.push(*t);
            row
        })
        .collect()
}

fn t_profile_header(dim: usize) -> &'static str {
    if dim == 1 {
        "probe,omega1,t"
    } else {
        "probe,omega1,omega2,t"
    }
}

fn admissibility_outcome(rep: &AdmissibilityReport, accept_weak: bool) -> Result<Outcome, CliError> {
    let pass = rep.verdict == AdmissibilityVerdict::Admissible
        || (accept_weak && rep.verdict == AdmissibilityVerdict::WeaklyAdmissible);
    Ok(Outcome::judged(pass, verdict_label(&rep.verdict), to_json(rep)?).with_error(rep.quadrature_error))
}

fn check(ctx: &Context, a: &CheckArgs) -> RunReport {
    let mut r = RunReport::new("check");
    r.run("check", || {
        let chart = ctx.chart(&a.group)?;
        let profile = ctx
            .wavelet(&a.wavelet)?
            .ok_or_else(|| CliError::Config("--wavelet is required".into()))?;
        let tol = ctx.tolerance(a.tol)?;
        let cfg_probes = ctx.config.as_ref().map(|c| c.probes.clone()).unwrap_or_default();
        let probes = if !a.at.is_empty() {
            probe_points(&a.at)?
        } else if !cfg_probes.points.is_empty() && a.probes.is_none() {
            cfg_probes
                .points
                .iter()
                .map(|p| Freq::new(p).map_err(CliError::from))
                .collect::<Result<_, _>>()?
        } else {
            let region = ctx.region(&a.region, &chart)?;
            let orbits = a.probes.unwrap_or(cfg_probes.orbits);
            let dups = a.duplicates.unwrap_or(cfg_probes.duplicates);
            default_probe_grid(&chart, &region, orbits, dups, &mut ctx.rng())?
        };
        let rep = check_admissible(&chart, &profile, &probes, tol, &ctx.truncation(&chart))?;
        ctx.write_csv(
            "t_profile.csv",
            t_profile_header(chart.ambient_dim()),
            &t_profile_rows(&probes, &rep),
        )?;
        let weak = a.weak || ctx.config.as_ref().is_some_and(|c| c.synthesis.weak);
        admissibility_outcome(&rep, weak)
    });
    r
}

fn analyze_cmd(ctx: &Context, a: &TransformArgs) -> RunReport {
    let mut r = RunReport::new("analyze");
    r.run("analyze", || {
        let chart = ctx.chart(&a.group)?;
        let profile = ctx
            .wavelet(&a.wavelet)?
            .ok_or_else(|| CliError::Config("--wavelet is required".into()))?;
        let signal = io::read_signal(&a.input)?;
        let range = a.hrange.as_deref().map(parse_range).transpose()?;
        let nodes = h_nodes(&chart, &hnode_spec(&chart, a.hnodes, range)?)?;
        let field = analyze(&signal, &profile, &chart, &nodes)?;
        io::write(&a.out, &io::encode_coefficients(&field, &chart.name(), &profile)?)?;
        let (e, c) = (signal.norm_sq(), l2g_norm(&field));
        Ok(Outcome::pass(json!({
            "nodes": field.nodes.len(),
            "grid_points": field.grid.len(),
            "signal_norm_sq": e,
            "coefficient_norm_sq": c,
            "ratio": c / e,
        })))
    });
    r
}

fn synthesize_cmd(ctx: &Context, a: &TransformArgs) -> RunReport {
    let mut r = RunReport::new("synthesize");
    r.run("synthesize", || {
        let (field, manifest) = io::read_coefficients(&a.input)?;
        let chart = match (&a.group.group, &ctx.config) {
            (None, None) => parse_group(&manifest.group)?.chart()?,
            _ => ctx.chart(&a.group)?,
        };
        if chart.name() != manifest.group {
            return Err(CliError::Config(format!(
                "coefficients were computed for {}, not {}",
                manifest.group,
                chart.name()
            )));
        }
        let profile = ctx.wavelet(&a.wavelet)?.unwrap_or(manifest.wavelet);
        let signal = synthesize(&field, &profile, &chart)?;
        io::write(&a.out, &io::encode_signal(&signal))?;
        Ok(Outcome::pass(json!({
            "nodes": field.nodes.len(),
            "grid_points": field.grid.len(),
            "norm_sq": signal.norm_sq(),
        })))
    });
    r
}

fn parse_candidate(arg: &str) -> Result<CandidateDensity, CliError> {
    let t = arg.trim_start();
    if t.starts_with('{') || Path::new(arg).is_file() {
        return json_arg(arg, "candidate density");
    }
    Ok(CandidateDensity::Expr {
        density: Expr::parse(arg)?,
    })
}

fn plancherel(ctx: &Context, a: &PlancherelArgs) -> RunReport {
    let mut r = RunReport::new("plancherel");
    match a.check {
        PlancherelCheck::QuasiInvariance => {
            r.run("quasi_invariance", || {
                let chart = ctx.chart(&a.group)?;
                let tol = a.tol.unwrap_or(IDENTITY_TOL);
                let samples = random_quasi_samples(&chart, a.samples, &mut ctx.rng())?;
                let quasi = verify_quasi_invariance(&chart, &samples)?;
                let pairs: Vec<_> = samples.iter().map(|s| (s.gamma, s.h)).collect();
                let semi = verify_semi_invariance(&chart, &pairs)?;
                let pass = quasi < tol && (quasi - semi).abs() <= 1e-12;
                Ok(Outcome::judged(
                    pass,
                    if pass { "HOLDS" } else { "VIOLATED" },
                    json!({"samples": samples.len(), "quasi_invariance_error": quasi, "semi_invariance_error": semi}),
                ))
            });
        }
        PlancherelCheck::Scaling => {
            r.run("scaling", || {
                let chart = ctx.chart(&a.group)?;
                let atlas = OrbitAtlas::for_chart(&chart)?;
                let regions = match &a.region {
                    Some(s) => vec![parse_region(s)?.resolve(&chart)?],
                    None => scaling_regions(&atlas),
                };
                if regions.is_empty() {
                    return Err(CliError::Config(format!(
                        "no default scaling regions for {}",
                        chart.name()
                    )));
                }
                let factors = if a.a.is_empty() {
                    vec![0.5, 2.0, 3.0]
                } else {
                    a.a.clone()
                };
                let tol = a.tol.unwrap_or(IDENTITY_TOL);
                let k = chart.ambient_dim() as f64;
                let mut worst: f64 = 0.0;
                let mut reports = vec![];
                for f in factors {
                    let rep = verify_scaling_law(&chart, f, &regions)?;
                    for e in &rep.exponents {
                        worst = worst.max((e - k).abs());
                    }
                    reports.push(to_json(&rep)?);
                }
                let pass = worst <= tol;
                Ok(Outcome::judged(
                    pass,
                    if pass { "HOLDS" } else { "VIOLATED" },
                    json!({"dimension": chart.ambient_dim(), "max_exponent_deviation": worst, "reports": reports}),
                ))
            });
        }
        PlancherelCheck::Density => {
            r.run("density", || {
                let chart = ctx.chart(&a.group)?;
                let tol = ctx.tolerance(a.tol)?;
                let candidate = match &a.candidate {
                    Some(c) => parse_candidate(c)?,
                    None => CandidateDensity::Canonical { factor: 1.0 },
                };
                let (profile, region) = match ctx.wavelet(&a.wavelet)? {
                    Some(p) => (p, ctx.region(&a.region, &chart)?),
                    None => default_wavelet(&chart)?,
                };
                let probes = default_probe_grid(&chart, &region, 16, 0, &mut ctx.rng())?;
                let cmp = identify_plancherel_density(&chart, &candidate, &profile, &probes, tol)?;
                let canonical = cmp.max_deviation <= tol;
                let mut v = to_json(&cmp)?;
                v["canonical"] = json!(canonical);
                Ok(Outcome::judged(
                    true,
                    if canonical { "CANONICAL" } else { "RESCALED" },
                    v,
                ))
            });
        }
    }
    r
}

/// Steps 1 to 6 plus the optional round trip.
pub fn pipeline(ctx: &Context, cfg: &PipelineConfig) -> RunReport {
    let mut r = RunReport::new("pipeline");
    let mut rng = ctx.rng();
    let stop = |r: &mut RunReport, rest: &[&str]| {
        for s in rest {
            r.skip(s, "an earlier step did not pass");
        }
    };
    const STEPS: [&str; 5] = ["classify", "atlas", "wavelet", "check", "round_trip"];

    let Some((chart, region)) = r.step("config", || {
        let chart = cfg.group.chart()?;
        let region = match chart.catalog_id() {
            Some(_) => cfg.region.resolve(&chart)?,
            None => Region::default(),
        };
        let v = json!({
            "group": chart.name(),
            "ambient_dim": chart.ambient_dim(),
            "chart_dim": chart.chart_dim(),
            "unimodular": chart.is_unimodular(),
        });
        Ok((Outcome::pass(v), (chart, region)))
    }) else {
        stop(&mut r, &STEPS);
        return r;
    };
    let explicit: Vec<Freq> = match cfg.probes.points.iter().map(|p| Freq::new(p)).collect() {
        Ok(v) => v,
        Err(e) => {
            r.run("classify", || Err(e.into()));
            stop(&mut r, &STEPS[1..]);
            return r;
        }
    };

    let classified = r.step("classify", || {
        let reps = if explicit.is_empty() {
            default_probe_grid(&chart, &region, cfg.probes.orbits, 0, &mut rng)?
        } else {
            explicit.clone()
        };
        let custom = chart.catalog_id().is_none();
        let mut counts = std::collections::BTreeMap::<String, usize>::new();
        let mut bad = vec![];
        for w in &reps {
            let v = classify_point(&chart, w, None)?.verdict;
            *counts.entry(v.to_string()).or_default() += 1;
            let ok = v == Verdict::Rc || (custom && v == Verdict::Unknown);
            if !ok && bad.len() < 8 {
                bad.push(w.as_slice().to_vec());
            }
        }
        let pass = bad.is_empty();
        let o = Outcome::judged(
            pass,
            if pass { "RC" } else { "NOT_RC" },
            json!({"representatives": reps.len(), "verdicts": counts, "irregular": bad}),
        );
        Ok((o, ()))
    });
    if classified.is_none() {
        stop(&mut r, &STEPS[1..]);
        return r;
    }

    if chart.catalog_id().is_some() {
        let ok = r.run("atlas", || Ok(Outcome::pass(atlas_json(&chart, Some(&region))?)));
        if ok.is_none() {
            stop(&mut r, &STEPS[2..]);
            return r;
        }
    } else {
        r.skip("atlas", "custom chart: no closed-form transversal");
    }

    let Some(profile) = r.step("wavelet", || {
        let (profile, desc) = match &cfg.wavelet {
            Some(w) => (w.load()?, "loaded".to_string()),
            None => build_wavelet(&chart, &region, cfg.synthesis.h0.as_deref(), cfg.synthesis.weak)?,
        };
        let v = to_json(&profile)?;
        if let Some(p) = &cfg.outputs.profile {
            io::write(p, serde_json::to_string_pretty(&v).unwrap_or_default().as_bytes())?;
        }
        Ok((Outcome::pass(v).with_message(desc), profile))
    }) else {
        stop(&mut r, &STEPS[3..]);
        return r;
    };

    let trunc = cfg
        .truncation
        .clone()
        .unwrap_or_else(|| TruncationSpec::default_for(&chart));
    let checked = r.step("check", || {
        let probes = if explicit.is_empty() {
            default_probe_grid(&chart, &region, cfg.probes.orbits, cfg.probes.duplicates, &mut rng)?
        } else {
            explicit.clone()
        };
        let rep = check_admissible(&chart, &profile, &probes, cfg.tolerance, &trunc)?;
        ctx.write_csv(
            "t_profile.csv",
            t_profile_header(chart.ambient_dim()),
            &t_profile_rows(&probes, &rep),
        )?;
        Ok((admissibility_outcome(&rep, cfg.synthesis.weak)?, ()))
    });

    match (&cfg.round_trip, checked) {
        (None, _) => {}
        (Some(_), None) => stop(&mut r, &STEPS[4..]),
        (Some(rt), Some(())) => {
            r.run("round_trip", || round_trip(ctx, &chart, &profile, rt, &mut rng));
        }
    }
    r
}

fn round_trip(
    ctx: &Context,
    chart: &GroupChart,
    profile: &FrequencyProfile,
    rt: &RoundTripSpec,
    rng: &mut ChaCha8Rng,
) -> Result<Outcome, CliError> {
    let grid = rt.grid.build(chart.ambient_dim())?;
    let spec = rt.hnodes.clone().unwrap_or_else(|| HNodeSpec::default_for(chart));
    let nodes = h_nodes(chart, &spec)?;
    let mut ratios = vec![];
    let mut errors = vec![];
    for _ in 0..rt.signals {
        let f = random_band_limited(&grid, &rt.band, rng)?;
        let field = analyze(&f, profile, chart, &nodes)?;
        ratios.push(l2g_norm(&field) / f.norm_sq());
        errors.push(synthesize(&field, profile, chart)?.relative_error(&f));
    }
    let dev = ratios.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max);
    let worst = ratios
        .iter()
        .copied()
        .max_by(|a, b| (a - 1.0).abs().total_cmp(&(b - 1.0).abs()))
        .unwrap_or(f64::NAN);
    let err = errors.iter().copied().fold(0.0, f64::max);
    let rows: Vec<Vec<f64>> = ratios
        .iter()
        .zip(&errors)
        .enumerate()
        .map(|(i, (a, b))| vec![i as f64, *a, *b])
        .collect();
    ctx.write_csv("round_trip.csv", "signal,isometry,reconstruction_error", &rows)?;
    let pass = dev <= rt.isometry_tol && err <= rt.reconstruction_tol;
    Ok(Outcome::judged(
        pass,
        if pass { "ISOMETRIC" } else { "NOT_ISOMETRIC" },
        json!({
            "nodes": nodes.len(),
            "signals": rt.signals,
            "isometry": worst,
            "isometry_per_signal": ratios,
            "max_isometry_deviation": dev,
            "reconstruction_error": err,
            "reconstruction_error_per_signal": errors,
        }),
    ))
}
