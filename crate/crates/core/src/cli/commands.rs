use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use super::{log, Command, DiffArgs, EvalArgs, Failure, FormatArgs, HeatmapArgs, SampleArgs};
use crate::arch_map::RuleTable;
use crate::corpus::{
    export_raw_split, export_split, format_pairs, load_kg, sample_few_shot, sample_few_shot_with_pool, FewShotSpec,
    FormatMode, Formatter, PromptInventory,
};
use crate::drift::{diff_checkpoint_files, diff_checkpoints, DiffReport};
use crate::gen_eval::{build_records, evaluate_runs, load_generations, load_references, score_corpus, Metric};
use crate::report::{aggregate_reports, export_csv, render_heatmap, ColorScale, HeatmapSpec, Measure};
use crate::tensor_io::load_checkpoint;

fn data<E: Display>(e: E) -> Failure {
    Failure::Data(e.to_string())
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn require_file(flag: &str, path: &Path) -> Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(usage(format!("{flag} {}: no such file", path.display())))
    }
}

fn require_parent(flag: &str, path: &Path) -> Result<(), Failure> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() && !p.is_dir() => {
            Err(usage(format!("{flag} {}: directory {} does not exist", path.display(), p.display())))
        }
        _ => Ok(()),
    }
}

/// Files written by a command; removed again unless the command commits.
struct Outputs {
    written: Vec<PathBuf>,
    created_dir: Option<PathBuf>,
    committed: bool,
}

impl Outputs {
    fn new() -> Self {
        Self { written: Vec::new(), created_dir: None, committed: false }
    }

    fn create_dir(&mut self, dir: &Path) -> Result<(), Failure> {
        if !dir.exists() {
            fs::create_dir_all(dir).map_err(|e| data(format!("{}: {e}", dir.display())))?;
            self.created_dir = Some(dir.to_owned());
        }
        Ok(())
    }

    fn write(&mut self, path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), Failure> {
        self.written.push(path.to_owned());
        fs::write(path, bytes).map_err(|e| data(format!("{}: {e}", path.display())))
    }

    fn track(&mut self, paths: impl IntoIterator<Item = PathBuf>) {
        self.written.extend(paths);
    }

    fn commit(mut self) {
        self.committed = true;
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
        if let Some(d) = &self.created_dir {
            let _ = fs::remove_dir(d);
        }
    }
}

pub(super) fn execute(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Diff(a) => diff(a),
        Command::Heatmap(a) => heatmap(a),
        Command::Sample(a) => sample(a),
        Command::Format(a) => format(a),
        Command::Eval(a) => eval(a),
    }
}

fn diff(a: DiffArgs) -> Result<(), Failure> {
    require_file("--before", &a.before)?;
    require_file("--after", &a.after)?;
    if let Some(r) = &a.rules {
        require_file("--rules", r)?;
    }
    require_parent("--out", &a.out)?;
    if let Some(c) = &a.csv {
        require_parent("--csv", c)?;
    }
    if !(a.quantum.is_finite() && a.quantum > 0.0) {
        return Err(usage(format!("--quantum must be a positive number, got {}", a.quantum)));
    }

    let rules = match &a.rules {
        Some(p) => RuleTable::load(p).map_err(data)?,
        None => RuleTable::t5_default(),
    };
    let report = if a.in_memory {
        let before = load_checkpoint(&a.before).map_err(data)?;
        let after = load_checkpoint(&a.after).map_err(data)?;
        diff_checkpoints(&before, &after, &rules, a.quantum).map_err(data)?
    } else {
        diff_checkpoint_files(&a.before, &a.after, &rules, a.quantum).map_err(data)?
    };
    log(&[
        ("event", &"diffed"),
        ("cells", &report.cells.len()),
        ("unclassified", &report.unclassified.len()),
    ]);

    let mut out = Outputs::new();
    out.write(&a.out, report.to_json())?;
    if let Some(c) = &a.csv {
        out.write(c, export_csv(&report))?;
    }
    out.commit();
    Ok(())
}

fn heatmap(a: HeatmapArgs) -> Result<(), Failure> {
    for r in &a.reports {
        require_file("--report", r)?;
    }
    require_parent("--out", &a.out)?;
    let measure: Measure = a.measure.parse().map_err(usage)?;
    let color_scale: ColorScale = a.scale.parse().map_err(usage)?;
    let expected_labels = if a.aggregate { 1 } else { a.reports.len() };
    if !a.labels.is_empty() && a.labels.len() != expected_labels {
        return Err(usage(format!("{} --label values given for {expected_labels} panel(s)", a.labels.len())));
    }

    let mut reports = a.reports.iter().map(DiffReport::read_json).collect::<Result<Vec<_>, _>>().map_err(data)?;
    if a.aggregate {
        reports = vec![aggregate_reports(&reports).map_err(data)?];
    }
    let spec = HeatmapSpec {
        measure,
        color_scale,
        panel_labels: a.labels,
        precision: (!a.no_values).then_some(a.precision),
    };
    let svg = render_heatmap(&reports, &spec).map_err(data)?;
    let mut out = Outputs::new();
    out.write(&a.out, svg)?;
    out.commit();
    Ok(())
}

fn parse_mode(mode: &str, shuffle_seed: Option<u64>) -> Result<FormatMode, Failure> {
    let mode: FormatMode = mode.parse().map_err(usage)?;
    match (mode, shuffle_seed) {
        (FormatMode::Shuffled { .. }, Some(seed)) => Ok(FormatMode::Shuffled { seed }),
        (_, Some(_)) => Err(usage("--shuffle-seed only applies to --mode shuffled")),
        (m, None) => Ok(m),
    }
}

fn inventory_for(mode: FormatMode, prompts: Option<&Path>) -> Result<PromptInventory, Failure> {
    match prompts {
        Some(p) => PromptInventory::load(p).map_err(data),
        None if mode == FormatMode::Paraphrase => Ok(PromptInventory::paraphrase()),
        None => Ok(PromptInventory::natural()),
    }
}

fn sample(a: SampleArgs) -> Result<(), Failure> {
    require_file("--kg", &a.kg)?;
    if let Some(p) = &a.validation_pool {
        require_file("--validation-pool", p)?;
    }
    if let Some(p) = &a.prompts {
        require_file("--prompts", p)?;
    }
    if a.out_dir.is_file() {
        return Err(usage(format!("--out-dir {} is a file", a.out_dir.display())));
    }
    let mode = match &a.mode {
        Some(m) => Some(parse_mode(m, a.shuffle_seed)?),
        None if a.shuffle_seed.is_some() => return Err(usage("--shuffle-seed needs --mode shuffled")),
        None => None,
    };

    let kg = load_kg(&a.kg).map_err(data)?;
    let mut spec = FewShotSpec::new(a.n, a.seed).with_holdout(a.holdout.iter().cloned());
    spec.validation = a.validation;
    let split = match &a.validation_pool {
        Some(p) => sample_few_shot_with_pool(&kg, &load_kg(p).map_err(data)?, &spec),
        None => sample_few_shot(&kg, &spec),
    }
    .map_err(data)?;
    let formatter = match mode {
        Some(m) => Some(Formatter::new(&inventory_for(m, a.prompts.as_deref())?, m).map_err(data)?),
        None => None,
    };
    log(&[
        ("event", &"sampled"),
        ("train", &split.train.len()),
        ("valid", &split.validation.len()),
        ("pretrain", &split.pretrain.len()),
    ]);

    let mut out = Outputs::new();
    out.create_dir(&a.out_dir)?;
    let written = match &formatter {
        Some(f) => export_split(&split, f, &a.out_dir),
        None => export_raw_split(&split, &a.out_dir),
    };
    match written {
        Ok(paths) => out.track(paths),
        Err(e) => {
            // anything the exporter managed to create goes too
            out.track(["train.tsv", "valid.tsv", "pretrain.tsv", "manifest.json"].map(|f| a.out_dir.join(f)));
            return Err(data(e));
        }
    }
    out.commit();
    Ok(())
}

fn format(a: FormatArgs) -> Result<(), Failure> {
    require_file("--split", &a.split)?;
    if let Some(p) = &a.prompts {
        require_file("--prompts", p)?;
    }
    require_parent("--out", &a.out)?;
    let mode = parse_mode(&a.mode, a.shuffle_seed)?;

    let tuples = load_kg(&a.split).map_err(data)?;
    let formatter = Formatter::new(&inventory_for(mode, a.prompts.as_deref())?, mode).map_err(data)?;
    let text = format_pairs(&tuples, &formatter).map_err(data)?;
    log(&[("event", &"formatted"), ("lines", &tuples.len()), ("mode", &mode)]);
    let mut out = Outputs::new();
    out.write(&a.out, text)?;
    out.commit();
    Ok(())
}

fn eval(a: EvalArgs) -> Result<(), Failure> {
    for g in &a.generations {
        require_file("--generations", g)?;
    }
    require_file("--references", &a.references)?;
    require_parent("--out", &a.out)?;
    let metrics = Metric::parse_list(&a.metrics).map_err(|e| usage(e.to_string()))?;
    if metrics.is_empty() {
        return Err(usage("--metrics names no metric"));
    }

    let refs = load_references(&a.references).map_err(data)?;
    let mut runs = Vec::new();
    for g in &a.generations {
        let gens = load_generations(g).map_err(|e| data(format!("{}: {e}", g.display())))?;
        let records = build_records(&gens, &refs).map_err(|e| data(format!("{}: {e}", g.display())))?;
        let scores = score_corpus(&records, &metrics).map_err(|e| data(format!("{}: {e}", g.display())))?;
        log(&[("event", &"scored"), ("run", &(runs.len() + 1)), ("records", &scores.records)]);
        runs.push(scores);
    }
    let report = evaluate_runs(&runs).map_err(data)?;
    if report.single_run {
        log(&[("event", &"warning"), ("msg", &"one run: std reported as 0 by convention")]);
    }
    let mut out = Outputs::new();
    out.write(&a.out, report.to_json())?;
    out.commit();
    Ok(())
}
