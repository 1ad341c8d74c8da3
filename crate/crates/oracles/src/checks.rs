//! One function per acceptance property. Each returns an [`Outcome`] rather
//! than panicking so a runner can report every property.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;

use xdw::cube::{build_cube, roll_up, switch, Aggregate, AxisSpec};
use xdw::documents::{parse_dimension, parse_model, serialize_model, serialize_warehouse};
use xdw::evolution::{apply_ruleset, parse_rules, validate_ruleset};
use xdw::fixtures::generate_fixture;
use xdw::mining::mca::{arrange, build_indicator_matrix, homogeneity, mca_axes, test_values};
use xdw::mining::opac::{ahc_cluster, cut_partition, partition_quality, Linkage, MemberVector};
use xdw::mining::rules::{derive_rules, mine_frequent, MetaRule, SupportAggregate};
use xdw::Warehouse;

use crate::ahc::{as_sets, inertia, naive_ahc};
use crate::apriori::{brute_frequent, brute_rules, classic_apriori, transactions, ItemSet};
use crate::cube::{brute_cells, close};
use crate::gen::{random_grouping_rules, random_warehouse, rng, Shape};
use crate::golden;
use crate::mca::{reference_homogeneity, reference_mca};

#[derive(Debug, Clone)]
pub struct Outcome {
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl Outcome {
    fn from(result: Result<String, String>, start: Instant) -> Self {
        let elapsed = start.elapsed();
        match result {
            Ok(detail) => Outcome {
                passed: true,
                detail,
                elapsed,
            },
            Err(detail) => Outcome {
                passed: false,
                detail,
                elapsed,
            },
        }
    }

    /// Fails a passing outcome that ran longer than `limit`.
    pub fn within(mut self, limit: Duration) -> Self {
        if self.passed && self.elapsed > limit {
            self.passed = false;
            self.detail = format!("{} but took {:?} (limit {:?})", self.detail, self.elapsed, limit);
        }
        self
    }
}

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)*) => {
        if !$cond {
            return Err(format!($($fmt)*));
        }
    };
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

/// The reference schema parses to the expected shape and reserializes to
/// the same text with a terminated prologue.
pub fn model_round_trip() -> Outcome {
    let start = Instant::now();
    Outcome::from(model_round_trip_inner(), start)
}

fn model_round_trip_inner() -> Result<String, String> {
    let model = parse_model(golden::MODEL_DOC).map_err(e)?;
    let shape: Vec<(&str, usize)> = model.dimensions.iter().map(|d| (d.id.as_str(), d.levels.len())).collect();
    ensure!(
        shape == [("time-d", 1), ("speaker-d", 1), ("transcription-d", 2)],
        "unexpected dimensions {:?}",
        shape
    );
    ensure!(
        model.facts.id == "facts" && model.facts.measures.len() == 1 && model.facts.dimension_refs.len() == 3,
        "unexpected fact spec {:?}",
        model.facts
    );
    let text = serialize_model(&model);
    let again = parse_model(&text).map_err(e)?;
    ensure!(again == model, "reparsed model differs");
    let expected = golden::MODEL_DOC.replacen("encoding=\"utf-8\">", "encoding=\"utf-8\"?>", 1);
    ensure!(
        text.trim_end() == expected.trim_end(),
        "serialized text differs from the source document"
    );
    Ok("3 dimensions, structurally and textually identical after round trip".into())
}

/// The grouping rules applied to the example warehouse give the reference
/// evolved schema and time dimension; output bytes are stable.
pub fn evolution_golden() -> Outcome {
    let start = Instant::now();
    Outcome::from(evolution_golden_inner(), start)
}

fn evolution_golden_inner() -> Result<String, String> {
    let w = golden::clapi_warehouse();
    let rules = parse_rules(golden::GROUPING_RULES).map_err(e)?;
    let report = validate_ruleset(&rules, &w);
    ensure!(report.is_ok(), "rules rejected: {:?}", report.findings);
    let (evolved, _) = apply_ruleset(&w, &rules).map_err(e)?;
    let expected_model = parse_model(golden::EVOLVED_MODEL_DOC).map_err(e)?;
    ensure!(evolved.model == expected_model, "evolved model differs from the reference one");
    let time = evolved.dimension_data("time-d").ok_or("time-d missing")?;
    ensure!(
        *time == golden::expected_time_dimension(),
        "evolved time dimension differs: {:?}",
        time
    );
    // Against the reference document: same levels, instances and links,
    // apart from the coarse `middle`'s self roll-up and missing child list.
    let spec = expected_model.dimension("time-d").unwrap();
    let reference = parse_dimension(golden::EVOLVED_TIME_DOC, spec).map_err(e)?;
    for (got, want) in time.levels.iter().zip(&reference.levels) {
        ensure!(got.level_id == want.level_id, "level order differs");
        for (a, b) in got.instances.iter().zip(&want.instances) {
            ensure!(a.id == b.id && a.attributes == b.attributes, "instance {} differs", a.id);
            let self_link = b.roll_up.as_deref() == Some(b.id.as_str()) && got.level_id != "location-in-transcription";
            ensure!(self_link || a.roll_up == b.roll_up, "roll-up of {} differs", a.id);
            ensure!(b.drill_down.is_none() || a.drill_down == b.drill_down, "drill-down of {} differs", a.id);
        }
    }
    let first = serialize_warehouse(&evolved);
    let second = serialize_warehouse(&apply_ruleset(&w, &rules).map_err(e)?.0);
    ensure!(first == second, "serialized output differs between runs");
    Ok("schema and time dimension match; output byte-stable".into())
}

fn compare_cells(
    got: &xdw::cube::Cube,
    want: &BTreeMap<Vec<String>, f64>,
    exact: bool,
    what: &str,
) -> Result<(), String> {
    let keys: BTreeSet<&Vec<String>> = got.cells.keys().collect();
    let expected: BTreeSet<&Vec<String>> = want.keys().collect();
    ensure!(keys == expected, "{}: non-empty cells differ", what);
    for (k, v) in want {
        let g = got.cells[k].value;
        let ok = if exact { g == *v } else { close(g, *v) };
        ensure!(ok, "{}: cell {:?} is {} expected {}", what, k, g, v);
    }
    Ok(())
}

/// Every cell of built and rolled-up cubes equals a fact scan, for every
/// aggregate, on `cases` random warehouses.
pub fn aggregation_oracle(cases: u64) -> Outcome {
    let start = Instant::now();
    Outcome::from(aggregation_oracle_inner(cases), start)
}

fn aggregation_oracle_inner(cases: u64) -> Result<String, String> {
    let mut cubes = 0usize;
    let mut cells = 0usize;
    for seed in 0..cases {
        let w = random_warehouse(seed, Shape::default());
        let mut r = rng(seed ^ 0x5eed);
        let axes: Vec<AxisSpec> = w
            .model
            .dimensions
            .iter()
            .filter(|_| r.gen_bool(0.7))
            .map(|d| AxisSpec::new(d.id.clone(), d.levels[0].id.clone()))
            .collect();
        for measure in ["qty", "amount"] {
            for agg in Aggregate::ALL {
                // AVG divides, and real sums depend on order: allow 1e-9.
                let exact = measure == "qty" && agg != Aggregate::Avg;
                let cube = build_cube(&w, &axes, measure, agg).map_err(e)?;
                let pairs: Vec<(String, String)> = axes.iter().map(|a| (a.dim_id.clone(), a.level_id.clone())).collect();
                let want = brute_cells(&w, &pairs, measure, agg, &|_| true);
                compare_cells(&cube, &want, exact, &format!("seed {} {} {:?}", seed, measure, agg))?;
                cubes += 1;
                cells += want.len();
                for (i, a) in axes.iter().enumerate() {
                    let spec = w.model.dimension(&a.dim_id).unwrap();
                    for target in &spec.levels[1..] {
                        let rolled = roll_up(&cube, &w, &a.dim_id, &target.id).map_err(e)?;
                        let mut at = pairs.clone();
                        at[i].1 = target.id.clone();
                        let want = brute_cells(&w, &at, measure, agg, &|_| true);
                        let what = format!("seed {} {} {:?} roll-up {}", seed, measure, agg, target.id);
                        compare_cells(&rolled, &want, exact, &what)?;
                        let rebuilt = build_cube(
                            &w,
                            &at.iter().map(|(d, l)| AxisSpec::new(d.clone(), l.clone())).collect::<Vec<_>>(),
                            measure,
                            agg,
                        )
                        .map_err(e)?;
                        ensure!(
                            rebuilt.cells.keys().eq(rolled.cells.keys())
                                && rebuilt.cells.values().zip(rolled.cells.values()).all(|(a, b)| close(a.value, b.value)),
                            "{}: roll-up differs from recomputation",
                            what
                        );
                        cubes += 1;
                        cells += want.len();
                    }
                }
            }
        }
    }
    Ok(format!("{} warehouses, {} cubes, {} cells checked", cases, cubes, cells))
}

/// Totals before evolution equal totals after rolling up to the new level.
pub fn conservation(cases: u64) -> Outcome {
    let start = Instant::now();
    Outcome::from(conservation_inner(cases), start)
}

fn conservation_inner(cases: u64) -> Result<String, String> {
    let mut levels_inserted = 0;
    for seed in 0..cases {
        let w = random_warehouse(seed, Shape::default());
        let (text, dim) = random_grouping_rules(&w, seed);
        let rules = parse_rules(&text).map_err(e)?;
        let report = validate_ruleset(&rules, &w);
        ensure!(report.is_ok(), "seed {}: generated rules rejected: {:?}", seed, report.findings);
        let (evolved, summary) = apply_ruleset(&w, &rules).map_err(e)?;
        if summary.inserted_below.is_some() {
            levels_inserted += 1;
        }
        let source = AxisSpec::new(dim.clone(), rules.structure.source_level.clone());
        for agg in [Aggregate::Sum, Aggregate::Count] {
            let before = build_cube(&w, &[source.clone()], "qty", agg).map_err(e)?;
            let fine = build_cube(&evolved, &[source.clone()], "qty", agg).map_err(e)?;
            let after = roll_up(&fine, &evolved, &dim, &rules.structure.target_level).map_err(e)?;
            let (tb, ta) = (before.total(), after.total());
            ensure!(
                tb.map(|c| (c.sum, c.count)) == ta.map(|c| (c.sum, c.count)),
                "seed {}: {:?} total changed from {:?} to {:?}",
                seed,
                agg,
                tb,
                ta
            );
            // Each new instance holds exactly its children's facts.
            for (coord, cell) in &after.cells {
                let children = &evolved
                    .dimension_data(&dim)
                    .unwrap()
                    .level(&rules.structure.target_level)
                    .unwrap()
                    .instance(&coord[0])
                    .unwrap()
                    .children()
                    .to_vec();
                let sum: f64 = children.iter().filter_map(|c| before.cells.get(&vec![c.clone()])).map(|c| c.sum).sum();
                ensure!(sum == cell.sum, "seed {}: group {} sum {} != {}", seed, coord[0], cell.sum, sum);
            }
        }
    }
    Ok(format!(
        "{} rule sets applied ({} inserted between levels); SUM and COUNT totals identical",
        cases, levels_inserted
    ))
}

fn random_points(seed: u64) -> (Vec<Vec<f64>>, Vec<String>) {
    let mut r = rng(seed);
    let n = r.gen_range(2..=12);
    let d = r.gen_range(1..=4);
    let grid = seed % 2 == 0;
    let points: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..d)
                .map(|_| if grid { r.gen_range(0..4) as f64 } else { r.gen_range(0.0..1.0) })
                .collect()
        })
        .collect();
    let mut labels: Vec<usize> = (0..n).collect();
    labels.shuffle(&mut r);
    let ids = labels.iter().map(|l| format!("m{:02}", l)).collect();
    (points, ids)
}

/// Dendrograms equal the reference agglomerator; heights are monotone and
/// every cut satisfies the Huygens decomposition.
pub fn ahc_oracle(cases: u64) -> Outcome {
    let start = Instant::now();
    Outcome::from(ahc_oracle_inner(cases), start)
}

fn ahc_oracle_inner(cases: u64) -> Result<String, String> {
    let mut worst_huygens: f64 = 0.0;
    for seed in 0..cases {
        let (points, ids) = random_points(seed);
        let vectors: Vec<MemberVector> = points
            .iter()
            .zip(&ids)
            .map(|(p, id)| MemberVector {
                member: id.clone(),
                features: p.clone(),
                descriptors: vec![],
            })
            .collect();
        for linkage in Linkage::ALL {
            let dendro = ahc_cluster(&vectors, linkage).map_err(e)?;
            let got = as_sets(&dendro);
            let want = naive_ahc(&points, &ids, linkage);
            ensure!(got.len() == want.len(), "seed {} {:?}: merge count differs", seed, linkage);
            for (k, (g, w)) in got.iter().zip(&want).enumerate() {
                ensure!(
                    g.left == w.left && g.right == w.right && close(g.height, w.height),
                    "seed {} {:?} merge {}: got {:?} expected {:?}",
                    seed,
                    linkage,
                    k,
                    g,
                    w
                );
            }
            for pair in dendro.merges.windows(2) {
                ensure!(
                    pair[1].height >= pair[0].height - 1e-9,
                    "seed {} {:?}: heights decrease",
                    seed,
                    linkage
                );
            }
            for k in 1..=points.len() {
                let partition = cut_partition(&dendro, k).map_err(e)?;
                let q = partition_quality(&partition, &vectors).map_err(e)?;
                let gap = (q.within + q.between - q.total).abs();
                worst_huygens = worst_huygens.max(gap);
                ensure!(gap <= 1e-9, "seed {} {:?} k={}: Huygens gap {}", seed, linkage, k, gap);
                let index = |m: &String| ids.iter().position(|i| i == m).unwrap();
                let within: f64 = partition
                    .clusters
                    .iter()
                    .map(|c| inertia(&points, &c.iter().map(index).collect::<Vec<_>>()))
                    .sum();
                ensure!((within - q.within).abs() <= 1e-9, "seed {} k={}: within inertia differs", seed, k);
            }
        }
    }
    Ok(format!(
        "{} point sets x 4 linkages match; max Huygens gap {:.1e}",
        cases, worst_huygens
    ))
}

fn mca_variables(w: &Warehouse, seed: u64) -> Vec<AxisSpec> {
    let mut r = rng(seed ^ 0xca);
    w.model
        .dimensions
        .iter()
        .map(|d| AxisSpec::new(d.id.clone(), d.levels[r.gen_range(0..d.levels.len())].id.clone()))
        .collect()
}

/// Eigenvalue-sum identity, centering and test-values against the Burt
/// route reference on random instances.
pub fn mca_identities(cases: usize) -> Outcome {
    let start = Instant::now();
    Outcome::from(mca_identities_inner(cases), start)
}

fn mca_identities_inner(cases: usize) -> Result<String, String> {
    let shape = Shape {
        max_dims: 3,
        max_levels: 2,
        max_facts: 50,
        fan_out: 3,
        allow_negative: false,
    };
    let mut done = 0;
    let mut seed = 0u64;
    let mut compared_tv = 0;
    let mut worst: f64 = 0.0;
    while done < cases {
        seed += 1;
        ensure!(seed < 100 * cases as u64, "too few usable random instances");
        let w = random_warehouse(seed, shape);
        let vars = mca_variables(&w, seed);
        let ind = build_indicator_matrix(&w, &vars).map_err(e)?;
        let active = ind.column_sums.iter().filter(|&&c| c > 0).count();
        if ind.n() < 2 || active > 12 {
            continue;
        }
        let Ok(result) = mca_axes(&ind) else { continue };
        done += 1;
        let q = ind.q() as f64;
        let expected = (active as f64 - q) / q;
        let gap = (result.total_inertia() - expected).abs();
        worst = worst.max(gap);
        ensure!(gap <= 1e-9, "seed {}: eigenvalue sum {} expected {}", seed, result.total_inertia(), expected);
        for a in 0..result.eigenvalues.len() {
            let mean: f64 = result.fact_coordinates.iter().map(|f| f[a]).sum::<f64>() / ind.n() as f64;
            ensure!(mean.abs() <= 1e-9, "seed {}: axis {} mean {}", seed, a, mean);
        }
        let pairs: Vec<(String, String)> = vars.iter().map(|v| (v.dim_id.clone(), v.level_id.clone())).collect();
        let reference = reference_mca(&w, &pairs);
        ensure!(
            reference.eigenvalues.len() == result.eigenvalues.len()
                && reference.eigenvalues.iter().zip(&result.eigenvalues).all(|(a, b)| (a - b).abs() <= 1e-9),
            "seed {}: eigenvalues {:?} vs reference {:?}",
            seed,
            result.eigenvalues,
            reference.eigenvalues
        );
        let tv = test_values(&result, &ind);
        let want = reference.test_values();
        let axes = reference.separated_axes();
        for row in &tv.rows {
            let Some(expected) = want.get(&(row.dim.clone(), row.member.clone())) else {
                ensure!(row.values.is_none(), "seed {}: {} has no facts but a test-value", seed, row.member);
                continue;
            };
            match (&row.values, expected) {
                (None, None) => {}
                (Some(got), Some(exp)) => {
                    for &a in &axes {
                        ensure!(
                            (got[a] - exp[a]).abs() <= 1e-7 * exp[a].abs().max(1.0),
                            "seed {}: test-value of {} on axis {}: {} vs {}",
                            seed,
                            row.member,
                            a,
                            got[a],
                            exp[a]
                        );
                        compared_tv += 1;
                    }
                }
                _ => return Err(format!("seed {}: testability of {} differs", seed, row.member)),
            }
        }
    }
    Ok(format!(
        "{} instances; max eigenvalue-sum gap {:.1e}; {} test-values match",
        cases, worst, compared_tv
    ))
}

/// Test-value arrangement of the block fixture raises homogeneity and only
/// permutes members.
pub fn arrangement_property(seed: u64) -> Outcome {
    let start = Instant::now();
    Outcome::from(arrangement_property_inner(seed), start)
}

pub fn lexicographic_block_cube(w: &Warehouse) -> Result<xdw::cube::Cube, String> {
    let axes = [
        AxisSpec::new("transcription-d", "token"),
        AxisSpec::new("time-d", "location-in-transcription"),
    ];
    let mut cube = build_cube(w, &axes, "frequency", Aggregate::Sum).map_err(e)?;
    for a in axes {
        let mut order = cube.axis(&a.dim_id).unwrap().members.clone();
        order.sort();
        cube = switch(&cube, &a.dim_id, &order).map_err(e)?;
    }
    Ok(cube)
}

fn arrangement_property_inner(seed: u64) -> Result<String, String> {
    let w = generate_fixture("figure5-blocks", seed).map_err(e)?;
    let initial = lexicographic_block_cube(&w)?;
    let arranged = arrange(&w, &initial).map_err(e)?;
    let (before, after) = (arranged.before.value, arranged.after.value);
    ensure!(
        (before - reference_homogeneity(&initial)).abs() <= 1e-12
            && (after - reference_homogeneity(&arranged.cube)).abs() <= 1e-12,
        "homogeneity differs from the reference"
    );
    ensure!(homogeneity(&initial).map_err(e)?.value == before, "score not reproducible");
    ensure!(arranged.cube.cells == initial.cells, "arrangement changed cell contents");
    for (a, b) in arranged.cube.axes.iter().zip(&initial.axes) {
        let (mut x, mut y) = (a.members.clone(), b.members.clone());
        x.sort();
        y.sort();
        ensure!(x == y, "arrangement changed the members of {}", a.dim_id);
    }
    ensure!(after > before, "homogeneity {:.4} -> {:.4} did not increase", before, after);
    Ok(format!(
        "homogeneity {:.4} -> {:.4}; {} cells unchanged",
        before,
        after,
        initial.cells.len()
    ))
}

fn rules_demo_meta(aggregate: SupportAggregate) -> MetaRule {
    MetaRule {
        context: vec![],
        antecedent: vec![
            AxisSpec::new("transcription-d", "token"),
            AxisSpec::new("time-d", "location-in-transcription"),
        ],
        consequent: vec![AxisSpec::new("speaker-d", "sex")],
        measure: "frequency".into(),
        aggregate,
    }
}

fn item_set(items: &[xdw::mining::rules::Item]) -> ItemSet {
    items.iter().map(|i| (i.dim.clone(), i.member.clone())).collect()
}

fn compare_mining(w: &Warehouse, meta: &MetaRule, minsup: f64, minconf: f64, label: &str) -> Result<usize, String> {
    let frequent = mine_frequent(w, meta, minsup).map_err(e)?;
    let got: BTreeMap<ItemSet, f64> = frequent.iter().map(|f| (item_set(&f.items), f.support)).collect();
    let want = brute_frequent(w, meta, minsup);
    ensure!(
        got.keys().eq(want.keys()),
        "{}: frequent sets differ ({} vs {} expected)",
        label,
        got.len(),
        want.len()
    );
    for (k, v) in &want {
        ensure!((got[k] - v).abs() <= 1e-12, "{}: support of {:?} differs", label, k);
    }
    for (z, s) in &got {
        for drop in z {
            let mut sub = z.clone();
            sub.remove(drop);
            if !sub.is_empty() {
                ensure!(
                    got.get(&sub).is_some_and(|t| *t >= *s - 1e-12),
                    "{}: anti-monotonicity fails at {:?}",
                    label,
                    z
                );
            }
        }
    }
    if meta.aggregate == SupportAggregate::Count {
        let classic = classic_apriori(&transactions(w, meta), minsup);
        let mapped: BTreeMap<BTreeSet<String>, f64> = got
            .iter()
            .map(|(k, v)| (k.iter().map(|(d, m)| format!("{}={}", d, m)).collect(), *v))
            .collect();
        ensure!(
            mapped.keys().eq(classic.keys())
                && mapped.values().zip(classic.values()).all(|(a, b)| (a - b).abs() <= 1e-12),
            "{}: differs from classical Apriori",
            label
        );
    }
    let rules = derive_rules(&frequent, meta, minconf);
    let want_rules = brute_rules(w, meta, minsup, minconf);
    ensure!(rules.len() == want_rules.len(), "{}: {} rules vs {} expected", label, rules.len(), want_rules.len());
    for r in &rules {
        let (x, y) = (item_set(&r.antecedent), item_set(&r.consequent));
        let m = want_rules
            .iter()
            .find(|b| b.antecedent == x && b.consequent == y)
            .ok_or_else(|| format!("{}: unexpected rule {}", label, r.render()))?;
        let same_lo = match (r.loevinger, m.loevinger) {
            (None, None) => true,
            (Some(a), Some(b)) => close(a, b),
            _ => false,
        };
        ensure!(
            close(r.support, m.support) && close(r.confidence, m.confidence) && close(r.lift, m.lift) && same_lo,
            "{}: measures of {} differ",
            label,
            r.render()
        );
        ensure!(
            close(r.confidence, got[&item_set(&[r.antecedent.clone(), r.consequent.clone()].concat())] / got[&x]),
            "{}: confidence identity fails",
            label
        );
    }
    Ok(rules.len())
}

/// Mining equals exhaustive enumeration and, under COUNT, classical Apriori.
pub fn apriori_oracle(cases: u64) -> Outcome {
    let start = Instant::now();
    Outcome::from(apriori_oracle_inner(cases), start)
}

fn apriori_oracle_inner(cases: u64) -> Result<String, String> {
    let demo = generate_fixture("rules-demo", 1).map_err(e)?;
    let mut rules = 0;
    for agg in [SupportAggregate::Count, SupportAggregate::Sum] {
        for (minsup, minconf) in [(0.2, 0.6), (0.05, 0.3), (0.01, 0.0)] {
            rules += compare_mining(&demo, &rules_demo_meta(agg), minsup, minconf, &format!("rules-demo {:?}", agg))?;
        }
    }
    let shape = Shape {
        max_dims: 3,
        max_levels: 2,
        max_facts: 100,
        fan_out: 3,
        allow_negative: false,
    };
    let mut done = 0;
    let mut seed = 0;
    while done < cases {
        seed += 1;
        let w = random_warehouse(seed, shape);
        if w.model.dimensions.len() < 3 || w.facts.rows.is_empty() {
            continue;
        }
        done += 1;
        let mut r = rng(seed);
        let slot = |d: usize, r: &mut rand_chacha::ChaCha8Rng| {
            let spec = &w.model.dimensions[d];
            AxisSpec::new(spec.id.clone(), spec.levels[r.gen_range(0..spec.levels.len())].id.clone())
        };
        let agg = if seed % 2 == 0 { SupportAggregate::Count } else { SupportAggregate::Sum };
        if agg == SupportAggregate::Sum && w.facts.rows.iter().all(|f| f.measures["qty"] == 0.0) {
            continue;
        }
        let meta = MetaRule {
            context: vec![],
            antecedent: vec![slot(0, &mut r), slot(1, &mut r)],
            consequent: vec![slot(2, &mut r)],
            measure: "qty".into(),
            aggregate: agg,
        };
        let minsup = r.gen_range(0.02..0.3);
        let minconf = r.gen_range(0.0..0.8);
        rules += compare_mining(&w, &meta, minsup, minconf, &format!("seed {}", seed))?;
    }
    Ok(format!("rules-demo plus {} random fixtures agree; {} rules compared", cases, rules))
}
