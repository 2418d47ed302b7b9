use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use proptest::prelude::*;

use super::*;
use crate::corpus::fixtures::session;
use crate::corpus::{Partition, Split};
use crate::metrics::roc_curve;
use crate::rng::SplitMix64;

struct Fixture {
    corpus: Corpus,
    partition: Partition,
    scores: Vec<ModelScores>,
}

/// Single-session speakers. Test categories of `state`: A=200, B=180, C=140
/// sessions, D=160 all Dep-. Train holds 50 sessions per state.
fn fixture(seed: u64) -> Fixture {
    let mut rng = SplitMix64::new(seed);
    let mut sessions = Vec::new();
    let mut assignment = BTreeMap::new();
    let mut acoustic = BTreeMap::new();
    let mut text = BTreeMap::new();
    let mut n = 0;
    for (state, test_n) in [("A", 200), ("B", 180), ("C", 140), ("D", 160)] {
        for i in 0..test_n + 50 {
            let id = format!("s{n:05}");
            let phq = if state == "D" { rng.below(10) as u8 } else { rng.below(25) as u8 };
            let day = 1 + (n % 28) as u8;
            let mut s = session(&id, &format!("p{n:05}"), phq, &format!("2019-03-{day:02}T{:02}:00:00", n % 24));
            s.metadata.insert("state".into(), state.into());
            if n % 10 != 0 {
                s.metadata.insert("gender".into(), if n % 3 == 0 { "male" } else { "female" }.into());
            }
            let pos = phq >= 10;
            acoustic.insert(id.clone(), (rng.normal() + if pos { 1.0 } else { 0.0 }).clamp(-5.0, 5.0) / 10.0 + 0.5);
            text.insert(id.clone(), rng.next_f64());
            assignment.insert(id.clone(), if i < test_n { Split::Test } else { Split::Train });
            sessions.push(s);
            n += 1;
        }
    }
    Fixture {
        corpus: Corpus::new(sessions).unwrap(),
        partition: Partition::from_assignment(assignment),
        scores: vec![
            ModelScores {
                name: "Acous.".into(),
                scores: acoustic,
            },
            ModelScores {
                name: "NLP".into(),
                scores: text,
            },
        ],
    }
}

fn report(f: &Fixture, keys: &[&str]) -> SubsetReport {
    subset_auc_report(&f.scores, &f.corpus, &f.partition, keys, &ReportOptions::default()).unwrap()
}

#[test]
fn no_keys_gives_base_row_only() {
    let f = fixture(1);
    let r = report(&f, &[]);
    assert!(r.rows.is_empty());
    assert_eq!(r.base_row.test_count, 680);
    assert_eq!(r.base_row.train_count, 200);
    let tsv = render_report(&r, ReportFormat::Tsv);
    assert_eq!(tsv.lines().count(), 2);
    assert!(tsv.lines().nth(1).unwrap().starts_with("Base performance over all test set\t\t200\t680\t"));
}

#[test]
fn small_and_single_class_categories_left_out() {
    let f = fixture(2);
    let r = report(&f, &["state"]);
    let cats: Vec<&str> = r.rows.iter().map(|x| x.category.as_str()).collect();
    assert_eq!(cats, vec!["A", "B"]);
    assert_eq!(r.skipped.len(), 1);
    assert_eq!(r.skipped[0].category, "D");
    let tsv = render_report(&r, ReportFormat::Tsv);
    assert!(!tsv.contains("\tC\t"));
    assert!(tsv.ends_with("\nSkipped\tstate\tD\tsingle class in test data\n"));
}

#[test]
fn rows_follow_key_order_then_test_count() {
    let f = fixture(3);
    let r = report(&f, &["state", "gender"]);
    let keys: Vec<&str> = r.rows.iter().map(|x| x.metadata_key.as_str()).collect();
    let first_gender = keys.iter().position(|k| *k == "gender").unwrap();
    assert!(keys[..first_gender].iter().all(|k| *k == "state"));
    assert!(keys[first_gender..].iter().all(|k| *k == "gender"));
    for w in r.rows.windows(2) {
        if w[0].metadata_key == w[1].metadata_key {
            assert!(w[0].test_count >= w[1].test_count);
        }
    }
    // missing values are dropped, not bucketed
    let gender_total: usize = r.rows[first_gender..].iter().map(|x| x.test_count).sum();
    assert!(gender_total < r.base_row.test_count);
}

#[test]
fn aucs_and_rates_match_independent_filtering() {
    let f = fixture(4);
    let r = report(&f, &["state", "gender"]);
    for row in &r.rows {
        let members: Vec<&Session> = f
            .corpus
            .sessions()
            .iter()
            .filter(|s| f.partition.split_of(&s.session_id) == Some(Split::Test))
            .filter(|s| s.metadata.get(&row.metadata_key) == Some(&row.category))
            .collect();
        assert_eq!(members.len(), row.test_count);
        let pos = members
            .iter()
            .filter(|s| crate::corpus::binarize_phq(s.phq8_total as i64).unwrap().is_positive())
            .count();
        assert_eq!(row.depression_rate, pos as f64 / members.len() as f64);
        for m in &f.scores {
            let samples: Vec<ScoredSample> = members
                .iter()
                .map(|s| ScoredSample::new(m.scores[&s.session_id], s.phq8_total >= 10))
                .collect();
            assert_eq!(row.auc_per_model[&m.name], auc(&samples).unwrap().auc);
        }
    }
}

#[test]
fn missing_scores_are_listed() {
    let mut f = fixture(5);
    let test_id = f
        .partition
        .assignment()
        .iter()
        .find(|(_, s)| **s == Split::Test)
        .map(|(id, _)| id.clone())
        .unwrap();
    f.scores[1].scores.remove(&test_id);
    let err = subset_auc_report(&f.scores, &f.corpus, &f.partition, &[], &ReportOptions::default()).unwrap_err();
    assert_eq!(
        err,
        RobustnessError::MissingScores {
            model: "NLP".into(),
            missing: vec![test_id]
        }
    );
}

#[test]
fn unknown_key_rejected() {
    let f = fixture(6);
    let err = subset_auc_report(&f.scores, &f.corpus, &f.partition, &["shoe_size"], &ReportOptions::default());
    assert!(matches!(err, Err(RobustnessError::Corpus(_))));
}

fn random_samples(rng: &mut SplitMix64, n: usize, signal: f64) -> Vec<ScoredSample> {
    (0..n)
        .map(|_| {
            let pos = rng.bernoulli(0.3);
            ScoredSample::new(rng.normal() + if pos { signal } else { 0.0 }, pos)
        })
        .collect()
}

#[test]
fn identical_categories_not_flagged() {
    let mut rng = SplitMix64::new(7);
    let s = random_samples(&mut rng, 200, 1.0);
    let group: BTreeMap<String, Vec<ScoredSample>> =
        [("x".to_string(), s.clone()), ("y".to_string(), s)].into_iter().collect();
    for mode in [ComparisonMode::OneVsRest, ComparisonMode::AllPairs] {
        let out = significance_mark(&group, mode);
        assert!(out.marks.values().all(|m| !m.flagged && m.p == 1.0));
    }
}

#[test]
fn flag_threshold_is_strict() {
    assert!(crate::metrics::is_significant(0.04));
    assert!(!crate::metrics::is_significant(0.05));
    assert!(!crate::metrics::is_significant(0.06));
}

#[test]
fn degraded_category_is_flagged() {
    let mut rng = SplitMix64::new(8);
    let mut group = BTreeMap::new();
    for c in ["a", "b", "c"] {
        group.insert(c.to_string(), random_samples(&mut rng, 400, 2.0));
    }
    let mut bad = random_samples(&mut rng, 400, 2.0);
    let mut labels: Vec<_> = bad.iter().map(|s| s.label).collect();
    rng.shuffle(&mut labels);
    bad.iter_mut().zip(labels).for_each(|(s, l)| s.label = l);
    group.insert("d".to_string(), bad);
    let out = significance_mark(&group, ComparisonMode::OneVsRest);
    assert!(out.marks["d"].flagged);
    assert!(out.marks["d"].p < 1e-6);
}

#[test]
fn untestable_categories_skipped_with_reason() {
    let mut rng = SplitMix64::new(9);
    let mut group = BTreeMap::new();
    group.insert("ok1".to_string(), random_samples(&mut rng, 100, 1.0));
    group.insert("ok2".to_string(), random_samples(&mut rng, 100, 1.0));
    group.insert("neg".to_string(), vec![ScoredSample::new(0.1, false); 5]);
    let out = significance_mark(&group, ComparisonMode::OneVsRest);
    assert_eq!(out.marks.len(), 2);
    assert_eq!(out.skipped.len(), 1);
    assert_eq!(out.skipped[0].0, "neg");
    // one usable category: nothing to compare against
    group.remove("ok2");
    assert!(significance_mark(&group, ComparisonMode::OneVsRest).marks.is_empty());
}

fn row(key: &str, cat: &str, train: usize, test: usize, rate: f64, phq: f64, aucs: &[(&str, f64, bool)]) -> SubsetRow {
    SubsetRow {
        metadata_key: key.into(),
        category: cat.into(),
        train_count: train,
        test_count: test,
        depression_rate: rate,
        mean_phq_first_session: phq,
        auc_per_model: aucs.iter().map(|(m, a, _)| (m.to_string(), *a)).collect(),
        significant_per_model: aucs.iter().map(|(m, _, f)| (m.to_string(), *f)).collect(),
    }
}

#[test]
fn flagged_cell_rendering() {
    let r = SubsetReport {
        models: vec!["Acous.".into(), "NLP".into()],
        base_row: row(BASE_ROW_LABEL, "", 11215, 3080, 0.257, 5.93, &[("Acous.", 0.779, false), ("NLP", 0.825, false)]),
        rows: vec![row(
            "US States (selected)",
            "Florida",
            831,
            253,
            0.262,
            6.41,
            &[("Acous.", 0.842, true), ("NLP", 0.875, true)],
        )],
        skipped: vec![],
        p_values: BTreeMap::new(),
    };
    let tsv = render_report(&r, ReportFormat::Tsv);
    assert_eq!(
        tsv,
        "Metadata\tCategory\tTrain Sess. Count\tTest Sess. Count\tDepression Rate\tMean PHQ\tAcous. AUC\tNLP AUC\n\
         Base performance over all test set\t\t11215\t3080\t25.7%\t5.93\t0.779\t0.825\n\
         US States (selected)\tFlorida\t831\t253\t26.2%\t6.41\t0.842*\t0.875*\n"
    );
    let md = render_report(&r, ReportFormat::Markdown);
    assert!(md.starts_with("| Metadata | Category | Train Sess. Count |"));
    assert!(md.contains("| US States (selected) | Florida | 831 | 253 | 26.2% | 6.41 | 0.842* | 0.875* |"));
    assert_eq!(parse_tsv_report(&tsv).unwrap(), r.at_display_precision());
}

#[test]
fn report_rendering_is_deterministic() {
    let f = fixture(10);
    let a = render_report(&report(&f, &["state", "gender", "time_of_day"]), ReportFormat::Tsv);
    let b = render_report(&report(&f, &["state", "gender", "time_of_day"]), ReportFormat::Tsv);
    assert_eq!(a, b);
}

#[test]
fn parse_rejects_malformed() {
    assert!(parse_tsv_report("").is_err());
    assert!(parse_tsv_report("a\tb\n").is_err());
    let head = "Metadata\tCategory\tTrain Sess. Count\tTest Sess. Count\tDepression Rate\tMean PHQ\tX AUC\n";
    assert!(parse_tsv_report(&format!("{head}k\tc\t1\t2\t3.0%\t1.00\t0.5\n")).is_err());
    assert!(parse_tsv_report(&format!("{head}{BASE_ROW_LABEL}\t\t1\t2\t3%\t1.00\t0.5\n")).is_err());
}

fn arb_row(models: usize) -> impl Strategy<Value = (String, String, usize, usize, u32, f64, Vec<(f64, bool)>)> {
    (
        "[a-z]{1,6}",
        "[A-Za-z ]{1,10}",
        0usize..20000,
        1usize..5000,
        0u32..=1000,
        0.0f64..24.0,
        prop::collection::vec((0.0f64..=1.0, any::<bool>()), models),
    )
}

proptest! {
    #[test]
    fn tsv_round_trip(
        base in arb_row(2),
        rows in prop::collection::vec(arb_row(2), 0..12),
        skipped in prop::collection::vec(("[a-z]{1,5}", "[a-z]{1,5}", "[a-z ]{1,20}"), 0..3),
    ) {
        let models = vec!["m one".to_string(), "m2".to_string()];
        let to_row = |r: &(String, String, usize, usize, u32, f64, Vec<(f64, bool)>), key: &str, cat: &str| SubsetRow {
            metadata_key: key.into(),
            category: cat.into(),
            train_count: r.2,
            test_count: r.3,
            depression_rate: r.4 as f64 / 1000.0,
            mean_phq_first_session: r.5,
            auc_per_model: models.iter().cloned().zip(r.6.iter().map(|x| x.0)).collect(),
            significant_per_model: models.iter().cloned().zip(r.6.iter().map(|x| x.1)).collect(),
        };
        let mut base_row = to_row(&base, BASE_ROW_LABEL, "");
        base_row.significant_per_model.values_mut().for_each(|f| *f = false);
        let report = SubsetReport {
            models: models.clone(),
            base_row,
            rows: rows.iter().map(|r| to_row(r, &r.0, &r.1)).collect(),
            skipped: skipped
                .iter()
                .map(|(k, c, why)| SkippedCategory { metadata_key: k.clone(), category: c.clone(), reason: why.clone() })
                .collect(),
            p_values: BTreeMap::new(),
        };
        let text = render_report(&report, ReportFormat::Tsv);
        let parsed = parse_tsv_report(&text).unwrap();
        prop_assert_eq!(&parsed, &report.at_display_precision());
        prop_assert_eq!(render_report(&parsed, ReportFormat::Tsv), text);
    }
}

#[test]
fn overlay_without_references() {
    let mut rng = SplitMix64::new(11);
    let a = roc_curve(&random_samples(&mut rng, 100, 1.0)).unwrap();
    let b = roc_curve(&random_samples(&mut rng, 100, 0.5)).unwrap();
    let bundle = roc_overlay_export(&[("acoustic".into(), a.clone()), ("nlp model".into(), b)], &[]);
    let names: Vec<&str> = bundle.files.iter().map(|f| f.name.as_str()).collect();
    assert_eq!(names, vec!["roc_acoustic.csv", "eer_acoustic.csv", "roc_nlp_model.csv", "eer_nlp_model.csv"]);
    assert!(bundle.files[0].contents.starts_with("threshold,fpr,tpr\ninf,0,0\n"));
    assert_eq!(bundle.files[0].contents.lines().count(), a.points.len() + 1);
}

#[test]
fn overlay_references_and_eer_on_curve() {
    let mut rng = SplitMix64::new(12);
    let c = roc_curve(&random_samples(&mut rng, 300, 1.0)).unwrap();
    let refs = vec![ReferencePoint {
        sensitivity: 0.5,
        specificity: 0.9,
        label: "PCP, study 1".into(),
    }];
    let bundle = roc_overlay_export(&[("m".into(), c.clone())], &refs);
    assert_eq!(bundle.files[2].name, "references.csv");
    assert!(bundle.files[2].contents.contains("\"PCP, study 1\",0.5,0.9,"));
    let (_, e) = bundle.eer_points[0];
    // the marker lies on a segment of the curve
    let on_curve = c.points.windows(2).any(|w| {
        let (p, q) = (w[0], w[1]);
        let within = p.fpr <= e.fpr + 1e-12 && e.fpr <= q.fpr + 1e-12 && p.tpr <= e.tpr + 1e-12 && e.tpr <= q.tpr + 1e-12;
        let cross = (q.fpr - p.fpr) * (e.tpr - p.tpr) - (q.tpr - p.tpr) * (e.fpr - p.fpr);
        within && cross.abs() < 1e-9
    });
    assert!(on_curve);
}
