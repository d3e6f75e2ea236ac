use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde_json::{json, Map, Value};
use tnperm::experiments::{
    csv_name, emit_outputs, format_g, parse_csv, success_curves_with, write_csv, BaselineTolerance, ExperimentMode,
    SuccessCurve, TrialConfig,
};
use tnperm::oracle::{make_exact_oracle, make_noisy_oracle, query_stats};
use tnperm::recover::{
    order_four_tr_detailed, order_three_tt_detailed, recover_ring_traced, recover_train_traced, RankMode,
    RecoveryConfig,
};
use tnperm::seed::{derive_seed, rng_from};
use tnperm::tensor_core::{check_assumptions, sample_cores, BondDims, CoreStack, Mode, Permutation, PhysicalDims, Profile};

use crate::{CheckArgs, ExperimentArgs, OrderArgs, RecoverArgs, SampleArgs};

/// Stream tags for seeds the CLI derives itself.
const NOISE_STREAM: u64 = 0x10;
const PERM_STREAM: u64 = 0x11;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or input files.
    Usage(String),
    Run(tnperm::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Run(e) => write!(f, "{e}"),
        }
    }
}

impl From<tnperm::Error> for CliError {
    fn from(e: tnperm::Error) -> Self {
        CliError::Run(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage(e: impl fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn parse_flag<T: FromStr>(flag: &str, s: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    s.parse().map_err(|e| CliError::Usage(format!("--{flag}: {e}")))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| CliError::Run(tnperm::Error::Io { path: path.to_path_buf(), source }))
}

fn emit(out: Option<&Path>, value: &Value) -> Result<()> {
    let text = serde_json::to_string(value).expect("json value");
    match out {
        Some(p) => write_text(p, &format!("{text}\n")),
        None => print_line(&text),
    }
}

/// Print to stdout, treating a closed pipe as success.
fn print_line(text: &str) -> Result<()> {
    use std::io::Write;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
            Err(CliError::Run(tnperm::Error::Io { path: "<stdout>".into(), source: e }))
        }
        _ => Ok(()),
    }
}

fn load_stack(path: &Path) -> Result<CoreStack> {
    CoreStack::from_json(&read_text(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn recovery_config(rank: usize, voters: usize, seed: u64, rank_mode: Option<&str>) -> Result<RecoveryConfig> {
    let mut cfg = RecoveryConfig::new(rank, voters, seed).map_err(usage)?;
    if let Some(m) = rank_mode {
        cfg = cfg.with_rank_mode(parse_flag::<RankMode>("rank-mode", m)?);
    }
    Ok(cfg)
}

fn one_based_perm(images: &[usize]) -> Result<Permutation> {
    Permutation::from_one_based(images).map_err(|e| CliError::Usage(format!("--perm: {e}")))
}

pub fn recover(a: RecoverArgs, mode: Mode) -> Result<()> {
    let stack = load_stack(&a.cores)?;
    if stack.mode() != mode {
        return Err(CliError::Usage(format!("{} holds a {:?} stack", a.cores.display(), stack.mode())));
    }
    let cfg = recovery_config(a.rank, a.voters, a.seed, a.rank_mode.as_deref())?;
    let oracle =
        make_noisy_oracle(make_exact_oracle(stack), a.sigma, derive_seed(a.seed, NOISE_STREAM, 0)).map_err(usage)?;
    let got = match mode {
        Mode::Ring => recover_ring_traced(&oracle, &cfg)?,
        Mode::Train => recover_train_traced(&oracle, &cfg)?,
    };
    let witnesses: Vec<Vec<usize>> = got.perm.class_members(mode).iter().map(|p| p.one_based()).collect();
    let stats = query_stats(&oracle);
    emit(
        a.out.as_deref(),
        &json!({
            "perm": got.perm.one_based(),
            "class_witnesses": witnesses,
            "order_calls": got.order_calls,
            "queries": stats.count,
        }),
    )
}

pub fn order(a: OrderArgs, k: usize) -> Result<()> {
    if a.probes.len() != k {
        return Err(CliError::Usage(format!("--probes: expected {k} axes, got {}", a.probes.len())));
    }
    if a.probes.contains(&0) {
        return Err(usage("--probes: axes are 1-based"));
    }
    let p: Vec<usize> = a.probes.iter().map(|i| i - 1).collect();
    let stack = load_stack(&a.cores)?;
    let cfg = recovery_config(a.rank, a.voters, a.seed, a.rank_mode.as_deref())?;
    let oracle =
        make_noisy_oracle(make_exact_oracle(stack), a.sigma, derive_seed(a.seed, NOISE_STREAM, 0)).map_err(usage)?;
    let plus = |v: &[usize]| v.iter().map(|i| i + 1).collect::<Vec<_>>();
    let value = if k == 4 {
        let rec = order_four_tr_detailed(&oracle, [p[0], p[1], p[2], p[3]], &cfg)?;
        let votes: Vec<Option<Vec<usize>>> = rec.votes.iter().map(|v| v.map(|o| plus(&o.as_array()))).collect();
        json!({"order": plus(&rec.decision.as_array()), "votes": votes, "scores": rec.scores})
    } else {
        let rec = order_three_tt_detailed(&oracle, [p[0], p[1], p[2]], &cfg)?;
        let votes: Vec<Option<Vec<usize>>> = rec.votes.iter().map(|v| v.map(|o| plus(&o.as_array()))).collect();
        json!({"order": plus(&rec.decision.as_array()), "votes": votes, "scores": rec.scores})
    };
    emit(None, &value)
}

pub fn check(a: CheckArgs) -> Result<()> {
    let mode: Mode = parse_flag("mode", &a.mode)?;
    let dims = if a.n.len() == 1 { PhysicalDims::uniform(a.d, a.n[0]) } else { PhysicalDims::new(a.n.clone()) }
        .map_err(|e| CliError::Usage(format!("--n: {e}")))?;
    if dims.len() != a.d {
        return Err(CliError::Usage(format!("--n: {} sizes for d = {}", dims.len(), a.d)));
    }
    let bonds = BondDims::uniform(a.d, a.r, mode).map_err(|e| CliError::Usage(format!("--r: {e}")))?;
    let perm = a.perm.as_deref().map(one_based_perm).transpose()?;
    println!("{}", check_assumptions(&dims, &bonds, a.rank, mode, perm.as_ref()));
    Ok(())
}

pub fn sample(a: SampleArgs) -> Result<()> {
    let mode: Mode = parse_flag("mode", &a.mode)?;
    let profile: Profile = parse_flag("profile", &a.profile)?;
    let dims = if a.n.len() == 1 { PhysicalDims::uniform(a.d, a.n[0]) } else { PhysicalDims::new(a.n.clone()) }
        .map_err(|e| CliError::Usage(format!("--n: {e}")))?;
    let bonds = BondDims::uniform(a.d, a.r, mode).map_err(|e| CliError::Usage(format!("--r: {e}")))?;
    let perm = match a.perm.as_deref() {
        Some(p) => one_based_perm(p)?,
        None => Permutation::random(a.d, &mut rng_from(derive_seed(a.seed, PERM_STREAM, 0))),
    };
    let stack = sample_cores(&dims, &bonds, &perm, mode, profile, a.seed).map_err(usage)?;
    let text = stack.to_json()?;
    match a.out {
        Some(p) => write_text(&p, &format!("{text}\n")),
        None => print_line(&text),
    }
}

/// Desk defaults for the mode, then the config file, then the flags.
fn merged_config(a: &ExperimentArgs, fixed: Option<&str>) -> Result<TrialConfig> {
    let file: Map<String, Value> = match &a.config {
        None => Map::new(),
        Some(p) => match serde_json::from_str::<Value>(&read_text(p)?) {
            Ok(Value::Object(m)) => m,
            Ok(_) => return Err(CliError::Usage(format!("{}: expected a JSON object", p.display()))),
            Err(e) => return Err(CliError::Usage(format!("{}: {e}", p.display()))),
        },
    };
    let source = a.config.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "flags".into());

    let file_mode = match file.get("mode") {
        None => None,
        Some(Value::String(s)) => Some(s.as_str()),
        Some(other) => return Err(CliError::Usage(format!("{source}: field `mode`: expected a string, got {other}"))),
    };
    let mode_text = match (fixed, a.mode.as_deref()) {
        (Some(f), Some(m)) if parse_flag::<ExperimentMode>("mode", m)? != parse_flag::<ExperimentMode>("mode", f)? => {
            return Err(CliError::Usage(format!("--mode {m} conflicts with the {f} subcommand")));
        }
        (Some(f), _) => f,
        (None, Some(m)) => m,
        (None, None) => file_mode.unwrap_or("ring"),
    };
    let mode: ExperimentMode = parse_flag("mode", mode_text)?;
    if let (Some(f), Some(m)) = (fixed, file_mode) {
        if parse_flag::<ExperimentMode>("mode", m).ok() != Some(mode) {
            return Err(CliError::Usage(format!("{source}: field `mode` is {m:?} but the subcommand is {f}")));
        }
    }

    let desk = match serde_json::to_value(TrialConfig::desk(mode)).expect("serializable") {
        Value::Object(m) => m,
        _ => unreachable!(),
    };
    let mut merged = desk.clone();
    for (k, v) in &file {
        merged.insert(k.clone(), v.clone());
    }

    let mut flags = Map::new();
    let mut set = |k: &str, v: Value| {
        flags.insert(k.to_string(), v);
    };
    set("mode", json!(mode));
    if let Some(d) = a.d {
        set("d", json!(d));
    }
    if let Some(n) = &a.n {
        set("n", json!(n));
    }
    if let Some(r) = a.r {
        set("r", json!(r));
    }
    if let Some(rank) = a.rank {
        set("R", json!(rank));
    }
    if let Some(v) = a.voters {
        set("voters", json!(v));
    }
    if let Some(s) = &a.sigma {
        set("sigma", json!(s));
    }
    if let Some(t) = a.trials {
        set("trials", json!(t));
    }
    if let Some(s) = a.seed {
        set("seed", json!(s));
    }
    if a.entropy {
        set("seed", json!(fresh_seed()));
    }
    if let Some(p) = &a.profile {
        set("profile", json!(parse_flag::<Profile>("profile", p)?));
    }
    if let Some(m) = &a.rank_mode {
        set("rank_mode", json!(parse_flag::<RankMode>("rank-mode", m)?));
    }
    if let Some(b) = a.beta {
        set("beta", json!(b));
    }
    if let Some(t) = &a.baseline_tol {
        set("baseline_tol", json!(parse_flag::<BaselineTolerance>("baseline-tol", t)?));
    }
    for (k, v) in flags {
        merged.insert(k, v);
    }

    let cfg: TrialConfig = match serde_json::from_value(Value::Object(merged)) {
        Ok(c) => c,
        Err(e) => {
            // serde reports type errors without the key; find it by trying the file's keys one at a time
            let bad = file.iter().find(|(k, v)| {
                let mut probe = desk.clone();
                probe.insert((*k).clone(), (*v).clone());
                serde_json::from_value::<TrialConfig>(Value::Object(probe)).is_err()
            });
            return Err(match bad {
                Some((k, _)) if !e.to_string().contains("unknown field") => {
                    CliError::Usage(format!("{source}: field `{k}`: {e}"))
                }
                _ => CliError::Usage(format!("{source}: {e}")),
            });
        }
    };
    cfg.validate().map_err(|e| CliError::Usage(format!("{source}: {e}")))?;
    Ok(cfg)
}

fn fresh_seed() -> u64 {
    use std::hash::BuildHasher;
    let seed = std::collections::hash_map::RandomState::new().hash_one(std::time::SystemTime::now());
    eprintln!("master seed {seed}");
    seed
}

fn mode_name(mode: ExperimentMode) -> String {
    json!(mode).as_str().expect("unit variant").to_string()
}

/// Series already on disk for an identical config.
fn resumed_curves(cfg: &TrialConfig, dir: &Path, stem: &str) -> Result<Vec<SuccessCurve>> {
    let path = dir.join("config.json");
    if !path.exists() {
        return Ok(Vec::new());
    }
    let old = TrialConfig::from_json(&read_text(&path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    if old != *cfg {
        return Err(CliError::Usage(format!(
            "{} holds a different config; pick another --out or drop --resume",
            path.display()
        )));
    }
    let labels = cfg.labels();
    let mut done = Vec::new();
    for l in &labels {
        let csv = dir.join(csv_name(labels.len(), stem, l));
        if csv.exists() {
            done.push(parse_csv(&read_text(&csv)?, l)?);
        }
    }
    Ok(done)
}

pub fn experiment(a: ExperimentArgs, fixed: Option<&str>) -> Result<()> {
    let cfg = merged_config(&a, fixed)?;
    let stem = mode_name(cfg.mode);
    let dir: PathBuf = a.out.clone();
    fs::create_dir_all(&dir).map_err(|source| CliError::Run(tnperm::Error::Io { path: dir.clone(), source }))?;

    let done = if a.resume { resumed_curves(&cfg, &dir, &stem)? } else { Vec::new() };
    write_text(&dir.join("config.json"), &format!("{}\n", cfg.to_json()?))?;

    let n_series = cfg.labels().len();
    let curves = success_curves_with(&cfg, &done, |si, curves| {
        for c in curves {
            let path = dir.join(csv_name(n_series, &stem, &c.label));
            fs::write(&path, write_csv(c)).map_err(|source| tnperm::Error::Io { path, source })?;
        }
        let rates: Vec<String> = curves.iter().map(|c| format_g(c.points[si].rate)).collect();
        eprintln!("sigma_e {} ({}/{}): {}", format_g(cfg.sigma[si]), si + 1, cfg.sigma.len(), rates.join(" "));
        Ok(())
    })?;
    for p in emit_outputs(&curves, &dir, &stem)? {
        println!("{}", p.display());
    }
    Ok(())
}
