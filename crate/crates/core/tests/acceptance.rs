//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use schema_align::evaluation::{usability, weight_gap_analysis, wilcoxon_signed_rank};
use schema_align::fd::{cluster_columns, integrate_fd, TokenTypeProvider};
use schema_align::ingest::{parse_date, parse_numeric, ColumnProfile, Document};
use schema_align::matcher::{assign, build_matrix, greedy_assign, project_table, ScoreMatrix, WeightConfig};
use schema_align::metrics::{compute_all, ks_statistic, sim_ks, sim_levenshtein, MetricId};
use schema_align::optimizer::{evaluate_config, grid_search_weights, precompute_tensor, GridSpec, SearchMode};
use schema_align::schema::{bundled_schema, AttributeSpec, DataType, TargetSchema};
use schema_align::synth::{builtin_layouts, generate_dataset, Dataset, TypedValue};
use schema_align::table::DataTable;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn names(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn fixture() -> (Dataset, Vec<Document>, TargetSchema) {
    let data = generate_dataset(&builtin_layouts(), 4, 25, 42).expect("fixture generation");
    let docs = data.load_documents().expect("fixture ingest");
    (data, docs, bundled_schema())
}

fn criterion_1() -> Outcome {
    let matrix = ScoreMatrix::from_scores(
        names(&["Total", "Rent", "Start"]),
        names(&["Office Area", "Annual Rent", "Commencement"]),
        vec![0.95, 0.94, 0.12, 0.93, 0.60, 0.17, 0.20, 0.30, 0.98],
        0.5,
    );
    let started = Instant::now();
    let best = assign(&matrix);
    let elapsed = started.elapsed();
    let greedy = greedy_assign(&matrix);
    let pairs: Vec<(&str, &str)> = best
        .pairs
        .iter()
        .map(|p| (p.source_column.as_str(), p.target_attribute.as_str()))
        .collect();
    let expected = [("Total", "Annual Rent"), ("Rent", "Office Area"), ("Start", "Commencement")];
    // 2.85 and 2.53 are not representable; compare with the same three addends
    let total_ok = best.total_score() == 0.94 + 0.93 + 0.98;
    let greedy_ok = greedy.total_score() == 0.95 + 0.60 + 0.98;
    let pass = pairs == expected && total_ok && greedy_ok && elapsed < Duration::from_millis(1);
    outcome(
        pass,
        format!(
            "assign total {:.2}, greedy total {:.2}, pairs {:?}, {:?}",
            best.total_score(),
            greedy.total_score(),
            pairs,
            elapsed
        ),
    )
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let perms = permutations(5);
    let started = Instant::now();
    let mut failures = 0;
    for _ in 0..200 {
        let scores: Vec<f64> = (0..25).map(|_| rng.gen::<f64>()).collect();
        let matrix = ScoreMatrix::from_scores(
            names(&["c0", "c1", "c2", "c3", "c4"]),
            names(&["a0", "a1", "a2", "a3", "a4"]),
            scores.clone(),
            0.0,
        );
        let brute = perms
            .iter()
            .map(|p| p.iter().enumerate().map(|(c, &a)| scores[c * 5 + a]).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        let got = assign(&matrix).total_score();
        if got != brute || got < greedy_assign(&matrix).total_score() {
            failures += 1;
        }
    }
    let elapsed = started.elapsed();
    outcome(
        failures == 0 && elapsed < Duration::from_secs(5),
        format!("{failures}/200 mismatches against brute force, {elapsed:?}"),
    )
}

fn dp_levenshtein(a: &[char], b: &[char]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

fn random_word(rng: &mut ChaCha8Rng, alphabet: &[char], max_len: usize) -> String {
    let len = rng.gen_range(1..=max_len);
    (0..len).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect()
}

fn random_cell(rng: &mut ChaCha8Rng) -> String {
    match rng.gen_range(0..6) {
        0 => format!("{:.2}", rng.gen_range(-1e6..1e7)),
        1 => format!("{}-{}-20{:02}", rng.gen_range(1..29), rng.gen_range(1..13), rng.gen_range(0..40)),
        2 => "-".to_string(),
        3 => String::new(),
        4 => format!("€ {}", rng.gen_range(0..5_000_000)),
        _ => random_word(rng, &['a', 'b', ' ', '1', ',', '.', '%', 'x'], 12),
    }
}

fn criterion_3() -> Outcome {
    let schema = bundled_schema();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let alphabet: Vec<char> = "abcdefghij rent area date ".chars().collect();

    let mut out_of_range = 0;
    for _ in 0..10_000 {
        let header = random_word(&mut rng, &alphabet, 24);
        let n = rng.gen_range(0..15);
        let cells: Vec<String> = (0..n).map(|_| random_cell(&mut rng)).collect();
        let profile = ColumnProfile::from_values(&header, &cells);
        let attr = &schema.attributes[rng.gen_range(0..schema.len())];
        let values = compute_all(&profile, attr);
        if MetricId::ALL.iter().any(|&m| !(0.0..=1.0).contains(&values[m])) {
            out_of_range += 1;
        }
    }

    let mut lev_mismatch = 0;
    for _ in 0..100 {
        let a = random_word(&mut rng, &['a', 'b', 'c', 'd'], 12);
        let b = random_word(&mut rng, &['a', 'b', 'c', 'd'], 12);
        let attr = string_attribute(&b);
        let (ac, bc): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
        let expected = 1.0 - dp_levenshtein(&ac, &bc) as f64 / ac.len().max(bc.len()) as f64;
        let profile = ColumnProfile::from_values::<&str>(&a, &[]);
        if sim_levenshtein(&profile, &attr) != expected {
            lev_mismatch += 1;
        }
    }

    let area = schema.attribute("office_area").expect("office_area");
    let target = area.numeric_profile.expect("decimal profile");
    let normal = Normal::new(target.mean, target.sigma()).expect("normal");
    let mut ks_mismatch = 0;
    for _ in 0..50 {
        let n = rng.gen_range(1..=20);
        let sample: Vec<f64> = (0..n)
            .map(|_| (rng.gen_range(0.0..6000.0_f64)).round())
            .collect();
        let brute = sample
            .iter()
            .map(|&x| {
                let le = sample.iter().filter(|&&y| y <= x).count() as f64 / n as f64;
                let lt = sample.iter().filter(|&&y| y < x).count() as f64 / n as f64;
                let f = normal.cdf(x);
                (le - f).abs().max((lt - f).abs())
            })
            .fold(0.0, f64::max);
        let cells: Vec<String> = sample.iter().map(|x| format!("{x}")).collect();
        let profile = ColumnProfile::from_values("area", &cells);
        let got = sim_ks(&profile, area);
        let direct = ks_statistic(&sample, |x| normal.cdf(x));
        if (got - (1.0 - brute)).abs() > 1e-9 || (direct - brute).abs() > 1e-9 {
            ks_mismatch += 1;
        }
    }

    outcome(
        out_of_range == 0 && lev_mismatch == 0 && ks_mismatch == 0,
        format!(
            "{out_of_range}/10000 out of [0,1], {lev_mismatch}/100 Levenshtein mismatches, {ks_mismatch}/50 KS mismatches"
        ),
    )
}

/// A STRING attribute whose only candidate is `name`.
fn string_attribute(name: &str) -> AttributeSpec {
    AttributeSpec {
        name: name.to_string(),
        data_type: DataType::String,
        synonyms: Vec::new(),
        numeric_profile: None,
        date_profile: None,
    }
}

struct Tuning {
    default_f1: f64,
    tuned: WeightConfig,
    tuned_f1: f64,
    elapsed: Duration,
}

fn tune(docs: &[Document], data: &Dataset, schema: &TargetSchema) -> Tuning {
    let started = Instant::now();
    let tensor = precompute_tensor(docs, schema);
    let default_f1 = evaluate_config(&tensor, &data.ground_truth, &WeightConfig::default())
        .expect("default evaluation")
        .f1;
    let grid = GridSpec::new(4, SearchMode::WeightsOnly).expect("grid");
    let search = grid_search_weights(&tensor, &data.ground_truth, &grid, 0.5, 0.5).expect("weight search");
    Tuning {
        default_f1,
        tuned_f1: search.score.f1,
        tuned: search.config,
        elapsed: started.elapsed(),
    }
}

fn criterion_4(t: &Tuning) -> Outcome {
    let pass = t.tuned_f1 > t.default_f1
        && t.default_f1 >= 0.70
        && t.tuned_f1 >= t.default_f1 + 0.03
        && t.elapsed <= Duration::from_secs(15 * 60);
    outcome(
        pass,
        format!("default F1 {:.4}, tuned F1 {:.4}, {:.1?}", t.default_f1, t.tuned_f1, t.elapsed),
    )
}

fn hybrid_output(docs: &[Document], schema: &TargetSchema, config: &WeightConfig) -> DataTable {
    let mut combined = DataTable::new(schema.names().map(str::to_string).collect());
    for doc in docs {
        let matrix = build_matrix(&doc.table, schema, config).expect("matrix");
        combined.append(project_table(&doc.table, schema, &assign(&matrix)).table);
    }
    combined
}

fn criterion_5(docs: &[Document], schema: &TargetSchema, t: &Tuning) -> Outcome {
    let fd = integrate_fd(docs, &cluster_columns(docs, 0.7, &TokenTypeProvider));
    let fd_use = usability(&fd.table);
    let mut pass = fd_use.column_count > 17;
    let mut detail = format!(
        "FD {} columns, {:.1}% null",
        fd_use.column_count,
        100.0 * fd_use.null_fraction
    );
    for (label, config) in [("default", WeightConfig::default()), ("tuned", t.tuned.clone())] {
        let h = usability(&hybrid_output(docs, schema, &config));
        pass &= h.column_count == 17 && fd_use.null_fraction > h.null_fraction;
        detail += &format!(
            "; hybrid {label} {} columns, {:.1}% null",
            h.column_count,
            100.0 * h.null_fraction
        );
    }
    outcome(pass, detail)
}

fn criterion_6(schema: &TargetSchema, t: &Tuning) -> Outcome {
    let gaps = weight_gap_analysis(&t.tuned, schema).expect("gap analysis");
    let gap = |dt: DataType| gaps.get(&dt).and_then(|g| g.gap);
    let (decimal, date) = (gap(DataType::Decimal), gap(DataType::Date));
    let pass = decimal.is_some_and(|g| g > 0.0) && date.is_some_and(|g| g > 0.0);
    let show = |g: Option<f64>| g.map_or("n/a".to_string(), |g| format!("{g:+.4}"));
    outcome(pass, format!("DECIMAL gap {}, DATE gap {}", show(decimal), show(date)))
}

/// Average ranks of |d|, then the two-sided p over every sign vector.
fn wilcoxon_oracle(diffs: &[f64]) -> (f64, f64, f64) {
    let d: Vec<f64> = diffs.iter().copied().filter(|x| *x != 0.0).collect();
    let n = d.len();
    let ranks: Vec<f64> = d
        .iter()
        .map(|x| {
            let below = d.iter().filter(|y| y.abs() < x.abs()).count() as f64;
            let equal = d.iter().filter(|y| y.abs() == x.abs()).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect();
    let plus: f64 = d.iter().zip(&ranks).filter(|(x, _)| **x > 0.0).map(|(_, r)| r).sum();
    let total: f64 = ranks.iter().sum();
    let w = plus.min(total - plus);
    let mut hits = 0u64;
    for mask in 0u64..(1 << n) {
        let p: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if p.min(total - p) <= w {
            hits += 1;
        }
    }
    (plus, total - plus, (hits as f64 / (1u64 << n) as f64).min(1.0))
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut p_mismatch = 0;
    let mut identity_fail = 0;
    let mut tested = 0;
    while tested < 50 {
        let n = rng.gen_range(1..=10);
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-5..=5) as f64).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-5..=5) as f64).collect();
        let Ok(r) = wilcoxon_signed_rank(&a, &b) else { continue };
        tested += 1;
        let diffs: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        let (plus, minus, p) = wilcoxon_oracle(&diffs);
        if r.p_value != p || r.w_plus != plus || r.w_minus != minus {
            p_mismatch += 1;
        }
        let m = r.n_effective as f64;
        if r.w_plus + r.w_minus != m * (m + 1.0) / 2.0 {
            identity_fail += 1;
        }
    }
    outcome(
        p_mismatch == 0 && identity_fail == 0,
        format!("{p_mismatch}/50 p-value mismatches, {identity_fail} rank-sum identity failures"),
    )
}

fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).expect("read_dir") {
            let path = entry.expect("entry").path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).expect("prefix").to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&path).expect("read")));
            }
        }
    }
    out.sort();
    out
}

fn criterion_8() -> Outcome {
    let root = tempfile::tempdir().expect("tempdir");
    let corpus = root.path().join("corpus");
    let run = |args: &[&str]| schema_align::cli::run(args.iter().copied());
    if let Err(e) = run(&["schema-align", "generate", "--out", corpus.to_str().unwrap(), "--docs-per-layout", "2"]) {
        return outcome(false, format!("generate failed: {e:#}"));
    }
    let p = |name: &str| corpus.join(name).to_string_lossy().into_owned();
    let (manifest, truth, clusters) = (p("manifest.yaml"), p("truth.csv"), p("clusters.csv"));

    let commands: Vec<(&str, Vec<String>)> = vec![
        ("generate", names(&["--docs-per-layout", "2", "--seed", "9"])),
        ("match", names(&["--manifest", &manifest])),
        ("optimize", names(&["--manifest", &manifest, "--truth", &truth, "--mode", "both", "--grid", "2"])),
        ("integrate-fd", names(&["--manifest", &manifest, "--clusters", &clusters])),
        (
            "evaluate",
            names(&["--manifest", &manifest, "--truth", &truth, "--clusters", &clusters, "--grid", "2"]),
        ),
        ("report", names(&["--manifest", &manifest, "--truth", &truth, "--clusters", &clusters])),
    ];
    let mut differing = Vec::new();
    for (cmd, args) in &commands {
        let mut trees = Vec::new();
        for attempt in 0..2 {
            let out = root.path().join(format!("{cmd}-{attempt}"));
            let mut argv = vec!["schema-align".to_string(), cmd.to_string(), "--out".into()];
            argv.push(out.to_string_lossy().into_owned());
            argv.extend(args.iter().cloned());
            if let Err(e) = schema_align::cli::run(&argv) {
                return outcome(false, format!("{cmd} failed: {e:#}"));
            }
            trees.push(read_tree(&out));
        }
        if trees[0] != trees[1] || trees[0].is_empty() {
            differing.push(*cmd);
        }
    }
    outcome(
        differing.is_empty(),
        format!("{} subcommands run twice, differing: {:?}", commands.len(), differing),
    )
}

fn criterion_9(data: &Dataset, docs: &[Document]) -> Outcome {
    let (mut total, mut failed) = (0, 0);
    let mut formats = std::collections::BTreeSet::new();
    for (generated, doc) in data.documents.iter().zip(docs) {
        for cell in &generated.typed_cells {
            total += 1;
            let text = &doc.table.cells[cell.row][cell.column];
            let ok = match cell.value {
                TypedValue::Number(v, tol) => parse_numeric(text).is_some_and(|x| (x - v).abs() <= tol),
                TypedValue::Date(d) => parse_date(text) == Some(d),
            };
            if ok {
                formats.insert(generated.format_id.clone());
            } else {
                failed += 1;
            }
        }
    }
    let styles = ["€ 1,177,924", "156178,19", "1.409", "6-3-2013", "1-jan-2016"];
    let styles_ok = styles.iter().all(|s| parse_numeric(s).is_some() || parse_date(s).is_some());
    outcome(
        failed == 0 && total > 0 && formats.len() == 5 && styles_ok,
        format!("{}/{total} cells round-trip across {} layouts", total - failed, formats.len()),
    )
}

fn main() {
    let (data, docs, schema) = fixture();
    let tuning = tune(&docs, &data, &schema);
    let results = [
        ("1 worked assignment example", criterion_1()),
        ("2 Hungarian optimality", criterion_2()),
        ("3 metric formulas", criterion_3()),
        ("4 monotone tuning", criterion_4(&tuning)),
        ("5 usability direction", criterion_5(&docs, &schema, &tuning)),
        ("6 instance-over-schema weight gap", criterion_6(&schema, &tuning)),
        ("7 Wilcoxon correctness", criterion_7()),
        ("8 CLI determinism", criterion_8()),
        ("9 ingest round-trip", criterion_9(&data, &docs)),
    ];
    let mut failed = 0;
    for (name, r) in &results {
        println!("criterion {name}: {} ({})", if r.pass { "PASS" } else { "FAIL" }, r.detail);
        failed += usize::from(!r.pass);
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
