use xdw::cube::{build_cube, roll_up, switch, Aggregate, Axis, AxisSpec, CellValue, Cube, Provenance};
use xdw::documents::parse_model;
use xdw::evolution::{apply_ruleset, parse_rules, validate_ruleset};
use xdw::fixtures::generate_fixture;
use xdw::ingest::WarehouseBuilder;
use xdw::mining::mca::{
    arrange, arrange_cube, build_indicator_matrix, homogeneity, mca_axes, test_values,
};
use xdw::mining::opac::{
    ahc_cluster, cut_partition, extract_member_vectors, opac, partition_quality, partition_to_rules, Linkage,
    MemberVector, OpacParams,
};
use xdw::mining::rules::{export_rules, mine_frequent, mine_rules, MetaRule, RuleFormat, SupportAggregate};
use xdw::{Error, Warehouse};
use xdw_oracles::golden;

fn points(values: &[f64]) -> Vec<MemberVector> {
    values
        .iter()
        .map(|v| MemberVector {
            member: format!("p{}", v),
            features: vec![*v],
            descriptors: vec![],
        })
        .collect()
}

fn line_cube(values: &[Option<f64>]) -> Cube {
    let members: Vec<String> = (0..values.len()).map(|i| format!("m{}", i)).collect();
    let cells = members
        .iter()
        .zip(values)
        .filter_map(|(m, v)| v.map(|v| (vec![m.clone()], CellValue::from_measure(v, Aggregate::Sum))))
        .collect();
    Cube {
        axes: vec![Axis {
            dim_id: "d".into(),
            level_id: "l".into(),
            members,
            synthetic: false,
        }],
        pushed: vec![],
        measure_id: "m".into(),
        aggregate: Aggregate::Sum,
        cells,
        provenance: Provenance::default(),
    }
}

/// The example warehouse with begin and end alike and middle far away.
fn separated_locations() -> Warehouse {
    let mut w = golden::clapi_warehouse();
    for row in &mut w.facts.rows {
        let v = match row.members["time-d"].as_str() {
            "middle" => 20.0,
            "end" => 5.0,
            _ => row.measures["frequency"],
        };
        row.measures.insert("frequency".into(), v);
    }
    w
}

#[test]
fn single_linkage_on_four_points() {
    let d = ahc_cluster(&points(&[0.0, 1.0, 10.0, 11.0]), Linkage::Single).unwrap();
    let heights: Vec<f64> = d.merges.iter().map(|m| m.height).collect();
    assert_eq!(heights, [1.0, 1.0, 9.0]);
    let p = cut_partition(&d, 2).unwrap();
    assert_eq!(p.clusters, [vec!["p0", "p1"], vec!["p10", "p11"]]);
    assert_eq!(cut_partition(&d, 1).unwrap().k(), 1);
    assert_eq!(cut_partition(&d, 4).unwrap().clusters.iter().map(Vec::len).max(), Some(1));
    assert!(cut_partition(&d, 0).is_err());
    assert!(cut_partition(&d, 5).is_err());

    let q = partition_quality(&p, &points(&[0.0, 1.0, 10.0, 11.0])).unwrap();
    assert!((q.within - 1.0).abs() < 1e-12);
    assert!((q.total - 101.0).abs() < 1e-12);
    assert!((q.ratio - 100.0 / 101.0).abs() < 1e-12);
}

#[test]
fn identical_vectors_merge_at_zero() {
    let mut v = points(&[3.0, 3.0]);
    v[1].member = "q".into();
    let d = ahc_cluster(&v, Linkage::Average).unwrap();
    assert_eq!(d.merges[0].height, 0.0);
    assert!(ahc_cluster(&v[..1], Linkage::Ward).is_err());
}

#[test]
fn member_vectors_follow_other_axes() {
    let w = golden::clapi_warehouse();
    let axes = [AxisSpec::new("time-d", "location-in-transcription"), AxisSpec::new("speaker-d", "speaker")];
    let cube = build_cube(&w, &axes, "frequency", Aggregate::Sum).unwrap();
    let v = extract_member_vectors(&cube, "time-d", None).unwrap();
    assert_eq!(v.columns, [vec!["spk1"], vec!["spk2"]]);
    assert_eq!(v.vectors[0].features, [5.0, 0.0]);
    assert!(matches!(extract_member_vectors(&cube, "transcription-d", None), Err(Error::NotAnAxis(_))));
}

#[test]
fn partition_becomes_the_grouping_rules() {
    let w = separated_locations();
    let cube = build_cube(&w, &[AxisSpec::new("time-d", "location-in-transcription")], "frequency", Aggregate::Sum)
        .unwrap();
    let result = opac(&cube, "time-d", Some(&w), &OpacParams::default()).unwrap();
    let partition = cut_partition(&result.dendrogram, 2).unwrap();
    assert_eq!(partition.clusters, [vec!["begin", "end"], vec!["middle"]]);
    let names = ["extreme".to_string(), "middle".to_string()];
    let rules = partition_to_rules(
        &partition,
        &cube,
        &w,
        "time-d",
        "group-of-location-in-transcription",
        "location-group",
        &names,
    )
    .unwrap();
    let expected = parse_rules(golden::GROUPING_RULES).unwrap();
    assert_eq!(
        validate_ruleset(&rules, &w).groups,
        validate_ruleset(&expected, &w).groups
    );
    let (ours, _) = apply_ruleset(&w, &rules).unwrap();
    let (theirs, _) = apply_ruleset(&w, &expected).unwrap();
    assert_eq!(ours, theirs);

    let up = roll_up(&build_cube(&ours, &[AxisSpec::new("time-d", "location-in-transcription")], "frequency", Aggregate::Sum).unwrap(), &ours, "time-d", "group-of-location-in-transcription").unwrap();
    assert_eq!(up.value(&["extreme"]), Some(10.0));
    assert_eq!(up.value(&["middle"]), Some(20.0));

    let clash = ["x".to_string(), "x".to_string()];
    assert!(partition_to_rules(&partition, &cube, &w, "time-d", "g", "name", &clash).is_err());
    assert!(partition_to_rules(&partition, &cube, &w, "time-d", "g", "name", &names[..1]).is_err());
}

#[test]
fn perfect_association_has_unit_eigenvalue() {
    let mut b = WarehouseBuilder::new(parse_model(golden::MODEL_DOC).unwrap());
    for l in ["begin", "end"] {
        b.member("time-d", "location-in-transcription", l, &[("location", l)], None).unwrap();
    }
    b.member("speaker-d", "speaker", "spk1", &[("sex", "true")], None).unwrap();
    b.member("speaker-d", "speaker", "spk2", &[("sex", "false")], None).unwrap();
    b.member("transcription-d", "transcription", "t1", &[("transcription-name", "x")], None).unwrap();
    b.member("transcription-d", "token", "tok1", &[("term", "euh")], Some("t1")).unwrap();
    for (l, s) in [("begin", "spk1"), ("begin", "spk1"), ("end", "spk2"), ("end", "spk2"), ("end", "spk2")] {
        b.fact(&[("time-d", l), ("speaker-d", s), ("transcription-d", "tok1")], &[("frequency", 1.0)]);
    }
    let w = b.build().unwrap();
    let vars = [AxisSpec::new("time-d", "location-in-transcription"), AxisSpec::new("speaker-d", "speaker")];
    let ind = build_indicator_matrix(&w, &vars).unwrap();
    assert!(ind.dense().iter().all(|r| r.iter().map(|&x| x as usize).sum::<usize>() == 2));
    let result = mca_axes(&ind).unwrap();
    assert_eq!(result.eigenvalues.len(), 1);
    assert!((result.eigenvalues[0] - 1.0).abs() < 1e-12);
    assert!((result.total_inertia() - 1.0).abs() < 1e-12);

    let tv = test_values(&result, &ind);
    let begin = tv.get("time-d", "begin").unwrap().values.as_ref().unwrap()[0];
    let end = tv.get("time-d", "end").unwrap().values.as_ref().unwrap()[0];
    assert!(begin * end < 0.0);
}

#[test]
fn single_occupied_member_is_degenerate() {
    let w = golden::clapi_warehouse();
    let vars = [AxisSpec::new("time-d", "location-in-transcription"), AxisSpec::new("speaker-d", "speaker")];
    let ind = build_indicator_matrix(&w, &vars).unwrap();
    assert_eq!(ind.zero_columns.len(), 1);
    assert!(matches!(mca_axes(&ind), Err(Error::Degenerate(_))));
}

#[test]
fn homogeneity_examples() {
    let two_thirds = homogeneity(&line_cube(&[Some(1.0), Some(1.0), None])).unwrap();
    assert!((two_thirds.value - 2.0 / 3.0).abs() < 1e-12);
    assert_eq!((two_thirds.cell_count, two_thirds.full_cell_count), (3, 2));
    let checker = homogeneity(&line_cube(&[Some(1.0), None, Some(4.0), None])).unwrap();
    assert_eq!(checker.value, 0.0);
    let flat = homogeneity(&line_cube(&[Some(2.0), Some(2.0), Some(2.0)])).unwrap();
    assert_eq!(flat.value, 1.0);
    assert_eq!(homogeneity(&line_cube(&[None, None])).unwrap().value, 0.0);
}

#[test]
fn arrangement_is_a_member_permutation() {
    let w = generate_fixture("figure5-blocks", 1).unwrap();
    let initial = xdw_oracles::checks::lexicographic_block_cube(&w).unwrap();
    let a = arrange(&w, &initial).unwrap();
    assert!(a.after.value > a.before.value, "{} -> {}", a.before.value, a.after.value);
    assert_eq!(a.cube.cells, initial.cells);
    let again = arrange_cube(&a.cube, &a.test_values).unwrap();
    assert_eq!(again, a.cube);

    let mut reversed = a.cube.clone();
    for axis in 0..reversed.axes.len() {
        let dim = reversed.axes[axis].dim_id.clone();
        let mut order = reversed.axes[axis].members.clone();
        order.reverse();
        reversed = switch(&reversed, &dim, &order).unwrap();
    }
    assert_eq!(arrange_cube(&reversed, &a.test_values).unwrap(), a.cube);
}

fn demo_meta(aggregate: SupportAggregate) -> MetaRule {
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

#[test]
fn bye_at_the_end_points_to_women() {
    let w = generate_fixture("rules-demo", 1).unwrap();
    let mining = mine_rules(&w, &demo_meta(SupportAggregate::Count), 0.05, 0.5).unwrap();
    let rule = mining
        .rules
        .iter()
        .find(|r| r.render() == "{token=bye, location-in-transcription=end} -> {sex=f}")
        .expect("the planted rule is mined");
    assert!(rule.lift > 1.0 && rule.loevinger.unwrap() > 0.0, "{:?}", rule);
    assert_eq!(mining.rules[0].render(), rule.render());
}

#[test]
fn count_support_of_one_member() {
    let w = golden::clapi_warehouse();
    let meta = MetaRule {
        context: vec![],
        antecedent: vec![AxisSpec::new("time-d", "location-in-transcription")],
        consequent: vec![AxisSpec::new("speaker-d", "speaker")],
        measure: "frequency".into(),
        aggregate: SupportAggregate::Count,
    };
    let frequent = mine_frequent(&w, &meta, 0.25).unwrap();
    let begin = frequent.iter().find(|f| f.items.len() == 1 && f.items[0].member == "begin").unwrap();
    assert_eq!(begin.support, 0.5);
    let all = mine_frequent(&w, &meta, 1.0).unwrap();
    assert!(all.iter().all(|f| f.items.len() == 1 && f.items[0].member == "spk1"));
    assert!(mine_frequent(&w, &meta, 0.0).is_err());

    let mut negative = w.clone();
    negative.facts.rows[0].measures.insert("frequency".into(), -1.0);
    let sum = MetaRule {
        aggregate: SupportAggregate::Sum,
        ..meta
    };
    assert!(mine_frequent(&negative, &sum, 0.1).is_err());
}

#[test]
fn rule_export_is_deterministic() {
    let w = generate_fixture("rules-demo", 2).unwrap();
    let a = mine_rules(&w, &demo_meta(SupportAggregate::Sum), 0.02, 0.3).unwrap();
    let b = mine_rules(&w, &demo_meta(SupportAggregate::Sum), 0.02, 0.3).unwrap();
    let table = export_rules(&a.rules, RuleFormat::Table);
    assert_eq!(table, export_rules(&b.rules, RuleFormat::Table));
    assert_eq!(table.lines().count(), a.rules.len() + 1);
    assert_eq!(export_rules(&[], RuleFormat::Table).lines().count(), 1);
    let json: serde_json::Value = serde_json::from_str(&export_rules(&a.rules[..1], RuleFormat::Json)).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 1);
}
