//! End-to-end acceptance checks. Runs without the libtest harness and prints
//! one PASS/FAIL line per criterion; exits non-zero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use chrono::{DateTime, TimeZone, Utc};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use evoarch_core::delta::{
    apply_delta, compute_delta, derive_high_level, invert_delta, ChangeOp, Payload, VersionView,
};
use evoarch_core::ingest::{
    export_canonical, ingest_text, map_rdf, map_relational, parse_csv, parse_ntriples, ColumnSpec, CubeColumn,
    CubeConfig, CubeRole, RelationalConfig, SourceConfig,
};
use evoarch_core::model::{
    mint_identifier, DataType, DatasetInstantiation, Fact, IdKind, Identifier, Interval, Literal, Object,
    ProvenanceInfo, Range, RecordSet, SchemaObject, SchemaVersion, SourceConstruct, SourceModel, TemporalAnnotation,
};
use evoarch_core::query::{
    changes_query, longitudinal_query, mixed_query, snapshot_query, MixedCriteria, PartSelector, TypeFilter,
    VersionSelector,
};
use evoarch_core::resource::{
    evaluate_resource, resource_diff, Condition, ConditionValue, DiachronicResource, PredicateFilter,
    ResourceDefinition, ResourceDescription, ResourceIdentification,
};
use evoarch_core::store::{Archive, ListFilter};
use evoarch_core::Error;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("1 mapping cardinalities", mapping_cardinalities),
        ("2 round-trip reproduction", round_trip),
        ("3 delta algebra", delta_algebra),
        ("4 high-level derivation", high_level_derivation),
        ("5 resource laws", resource_laws),
        ("6 query taxonomy", query_taxonomy),
        ("7 temporal resolution", temporal_resolution),
        ("8 archive integrity", archive_integrity),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let started = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {name}: PASS ({detail}; {secs:.2}s)"),
            Err(detail) => {
                failed += 1;
                println!("criterion {name}: FAIL ({detail}; {secs:.2}s)");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------- fixtures

fn ds(slug: &str) -> Identifier {
    mint_identifier(IdKind::DiachronicDataset, &[slug]).unwrap()
}

fn t(secs: i64) -> DateTime<Utc> {
    Utc.timestamp_opt(1_500_000_000 + secs, 0).unwrap()
}

fn prov(agent: &str) -> ProvenanceInfo {
    ProvenanceInfo {
        agent: agent.into(),
        process: "acceptance".into(),
        source: "generated".into(),
        recorded_at: t(0),
        annotation: None,
    }
}

fn ex(s: impl std::fmt::Display) -> Identifier {
    Identifier::uri(&format!("http://ex/{s}")).unwrap()
}

/// A random lexical form, deliberately non-canonical at times.
fn random_value(rng: &mut StdRng, dt: DataType) -> String {
    match dt {
        DataType::Integer => match rng.gen_range(0..4) {
            0 => format!("{:03}", rng.gen_range(0..500)),
            1 => format!("+{}", rng.gen_range(0..500)),
            _ => rng.gen_range(-500..500i64).to_string(),
        },
        DataType::Decimal => match rng.gen_range(0..3) {
            0 => format!("{}.{}0", rng.gen_range(-99..99), rng.gen_range(0..10)),
            1 => format!(".{}", rng.gen_range(1..99)),
            _ => format!("{}", rng.gen_range(0..1000)),
        },
        DataType::Boolean => ["true", "FALSE", "1", "0"].choose(rng).unwrap().to_string(),
        DataType::String => {
            let pieces = ["a", "b c", "Zoë", "x,y", "say \"hi\"", "tab\there", "line\nbreak", "back\\slash", " lead"];
            let n = rng.gen_range(1..3);
            (0..n).map(|_| *pieces.choose(rng).unwrap()).collect::<Vec<_>>().join("")
        }
        DataType::Datetime => {
            let secs = rng.gen_range(0..1_000_000_000i64);
            let base = Utc.timestamp_opt(secs, 0).unwrap();
            match rng.gen_range(0..3) {
                0 => base.format("%Y-%m-%dT%H:%M:%SZ").to_string(),
                1 => base.with_timezone(&chrono::FixedOffset::east_opt(7200).unwrap()).to_rfc3339(),
                _ => base.format("%Y-%m-%dT%H:%M:%S").to_string(),
            }
        }
        DataType::UriRef => format!("http://ex/u{}", rng.gen_range(0..20)),
    }
}

fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn nt_escape(s: &str) -> String {
    let mut out = String::new();
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            _ => out.push(c),
        }
    }
    out
}

struct Table {
    config: RelationalConfig,
    rows: Vec<Vec<Option<String>>>,
}

impl Table {
    fn csv(&self) -> String {
        let mut out = self.config.columns.iter().map(|c| c.name.clone()).collect::<Vec<_>>().join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| c.as_deref().map_or(String::new(), csv_cell)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

const DATATYPES: [DataType; 6] = [
    DataType::Integer,
    DataType::Decimal,
    DataType::Boolean,
    DataType::String,
    DataType::Datetime,
    DataType::UriRef,
];

fn random_table(rng: &mut StdRng, max_rows: usize) -> Table {
    let ncols = rng.gen_range(1..6);
    let mut columns = vec![ColumnSpec { name: "id".into(), datatype: DataType::Integer }];
    for i in 0..ncols {
        columns.push(ColumnSpec { name: format!("c{i}"), datatype: *DATATYPES.choose(rng).unwrap() });
    }
    let nrows = rng.gen_range(0..=max_rows);
    let mut ids: Vec<i64> = (0..(nrows as i64 * 3 + 1)).collect();
    ids.shuffle(rng);
    let rows = ids[..nrows]
        .iter()
        .map(|id| {
            let mut row = vec![Some(id.to_string())];
            for col in &columns[1..] {
                row.push(rng.gen_bool(0.75).then(|| random_value(rng, col.datatype)));
            }
            row
        })
        .collect();
    Table {
        config: RelationalConfig { table_name: "t".into(), columns, primary_key: vec!["id".into()] },
        rows,
    }
}

fn random_cube(rng: &mut StdRng) -> (CubeConfig, String) {
    let col = |name: &str, role, datatype| CubeColumn { name: name.into(), role, datatype };
    let config = CubeConfig {
        columns: vec![
            col("year", CubeRole::Dimension, DataType::Integer),
            col("region", CubeRole::Dimension, DataType::String),
            col("value", CubeRole::Measure, DataType::Decimal),
            col("flag", CubeRole::Attribute, DataType::Boolean),
        ],
    };
    let mut text = "year,region,value,flag\n".to_string();
    let regions = ["EU", "US, east", "Åland", "\"quoted\""];
    let mut keys: Vec<(i32, &str)> = (2000..2010).flat_map(|y| regions.iter().map(move |r| (y, *r))).collect();
    keys.shuffle(rng);
    for (year, region) in keys.into_iter().take(rng.gen_range(0..30)) {
        let value = if rng.gen_bool(0.9) { random_value(rng, DataType::Decimal) } else { String::new() };
        let flag = if rng.gen_bool(0.5) { random_value(rng, DataType::Boolean) } else { String::new() };
        text.push_str(&format!("{year},{},{value},{flag}\n", csv_cell(region)));
    }
    (config, text)
}

/// A triple as the generator sees it: subject, predicate, and either a
/// reference or a (canonical lexical, datatype) literal.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Term {
    Iri(String),
    Blank(String),
    Lit(String, Option<&'static str>),
}

fn term_text(term: &Term) -> String {
    match term {
        Term::Iri(i) => format!("<{i}>"),
        Term::Blank(b) => format!("_:{b}"),
        Term::Lit(l, None) => format!("\"{}\"", nt_escape(l)),
        Term::Lit(l, Some(dt)) => format!("\"{}\"^^<http://www.w3.org/2001/XMLSchema#{dt}>", nt_escape(l)),
    }
}

fn random_triples(rng: &mut StdRng, max: usize) -> Vec<(Term, Term, Term)> {
    let n = rng.gen_range(0..=max);
    let subjects = rng.gen_range(1..=(n / 3 + 1));
    (0..n)
        .map(|_| {
            let s = if rng.gen_bool(0.1) {
                Term::Blank(format!("b{}", rng.gen_range(0..subjects)))
            } else {
                Term::Iri(format!("http://ex/s{}", rng.gen_range(0..subjects)))
            };
            let p = Term::Iri(format!("http://ex/p{}", rng.gen_range(0..6)));
            let o = match rng.gen_range(0..5) {
                0 => Term::Iri(format!("http://ex/s{}", rng.gen_range(0..subjects))),
                1 => Term::Lit(rng.gen_range(0..40).to_string(), Some("integer")),
                2 => Term::Lit(format!("v{}\n\"{}\"", rng.gen_range(0..40), rng.gen_range(0..3)), None),
                3 => Term::Lit(["true", "false"].choose(rng).unwrap().to_string(), Some("boolean")),
                _ => Term::Lit(format!("w{}", rng.gen_range(0..40)), Some("string")),
            };
            (s, p, o)
        })
        .collect()
}

fn nt_text(triples: &[(Term, Term, Term)]) -> String {
    triples
        .iter()
        .map(|(s, p, o)| format!("{} {} {} .\n", term_text(s), term_text(p), term_text(o)))
        .collect()
}

// ---------------------------------------------------------------- 1

fn mapping_cardinalities() -> Outcome {
    let mut rng = StdRng::seed_from_u64(1);
    let started = Instant::now();
    for case in 0..100 {
        let triples = random_triples(&mut rng, 1000);
        let (_, rs) = map_rdf(&parse_ntriples(&nt_text(&triples)).map_err(|e| e.to_string())?, &ds("rdf"))
            .map_err(|e| e.to_string())?;
        // Explicit ^^xsd:string and plain literals denote the same value.
        let normalized: BTreeSet<(Term, Term, Term)> = triples
            .iter()
            .map(|(s, p, o)| {
                let o = match o {
                    Term::Lit(l, Some("string")) => Term::Lit(l.clone(), None),
                    other => other.clone(),
                };
                (s.clone(), p.clone(), o)
            })
            .collect();
        let subjects: BTreeSet<&Term> = normalized.iter().map(|(s, _, _)| s).collect();
        check(rs.len() == subjects.len(), || format!("rdf case {case}: {} records vs {} subjects", rs.len(), subjects.len()))?;
        check(rs.fact_count() == normalized.len(), || {
            format!("rdf case {case}: {} attributes vs {} triples", rs.fact_count(), normalized.len())
        })?;
    }
    for case in 0..100 {
        let table = random_table(&mut rng, 60);
        let rows = parse_csv(&table.csv(), &table.config.columns.iter().map(|c| c.name.as_str()).collect::<Vec<_>>())
            .map_err(|e| e.to_string())?;
        let (_, rs) = map_relational(&rows, &table.config, &ds("rel")).map_err(|e| e.to_string())?;
        check(rs.len() == table.rows.len(), || format!("relational case {case}: record count"))?;
        let id_prop = mint_identifier(IdKind::SchemaObject, &["rel", "t", "id"]).unwrap();
        let by_key: BTreeMap<String, usize> = rs
            .records()
            .map(|r| {
                let key = r
                    .attributes
                    .iter()
                    .find(|a| a.predicate == id_prop)
                    .and_then(|a| match &a.object {
                        Object::Literal(l) => Some(l.lexical().to_string()),
                        Object::Ref(_) => None,
                    })
                    .unwrap_or_default();
                (key, r.attributes.len())
            })
            .collect();
        for row in &table.rows {
            let expected = row.iter().filter(|c| c.is_some()).count() + 1;
            let got = by_key.get(row[0].as_ref().unwrap()).copied();
            check(got == Some(expected), || format!("relational case {case}: {got:?} attributes, expected {expected}"))?;
        }
    }
    let elapsed = started.elapsed();
    check(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    Ok(format!("200 cases exact in {:.2}s", elapsed.as_secs_f64()))
}

// ---------------------------------------------------------------- 2

fn round_trip() -> Outcome {
    let mut rng = StdRng::seed_from_u64(2);
    let dir = tempfile::tempdir().unwrap();
    let archive = Archive::init(dir.path().join("a")).unwrap();
    let mut checked = 0;
    for (title, model) in [("rel", SourceModel::Relational), ("cube", SourceModel::Multidimensional), ("rdf", SourceModel::Rdf)] {
        let dataset = archive.register_dataset(title, model).unwrap().diachronic_id;
        for i in 0..20 {
            let (config, text) = match model {
                SourceModel::Relational => {
                    let table = random_table(&mut rng, 40);
                    (SourceConfig::Relational(table.config.clone()), table.csv())
                }
                SourceModel::Multidimensional => {
                    let (cfg, text) = random_cube(&mut rng);
                    (SourceConfig::Multidimensional(cfg), text)
                }
                SourceModel::Rdf => (SourceConfig::Rdf, nt_text(&random_triples(&mut rng, 200))),
            };
            let inst = archive
                .ingest(&dataset, &config, &text, TemporalAnnotation::starting(t(i)), prov("a"))
                .map_err(|e| format!("{title} fixture {i}: {e}"))?;
            let exported = export_canonical(&archive, &dataset, &inst.version_id).map_err(|e| e.to_string())?;
            let (_, again) = ingest_text(&config, &exported, &dataset).map_err(|e| format!("{title} {i} re-ingest: {e}"))?;
            check(again.content_hash() == inst.record_set_hash, || {
                format!("{title} fixture {i}: hash differs after export\n{exported}")
            })?;
            checked += 1;
        }
    }
    Ok(format!("{checked} fixtures hash-equal"))
}

// ---------------------------------------------------------------- 3

fn schema_for(dataset: &Identifier, rng: &mut StdRng) -> SchemaVersion {
    let objects = (0..rng.gen_range(0..6)).map(|i| {
        let dt = *DATATYPES.choose(rng).unwrap();
        SchemaObject::property(ex(format!("p{i}")), None, Range::Datatype(dt), SourceConstruct::RdfProperty)
    });
    SchemaVersion::new(dataset, objects).unwrap()
}

fn random_facts(rng: &mut StdRng, n: usize, subjects: usize) -> BTreeSet<Fact> {
    (0..n)
        .map(|_| {
            let s = ex(format!("s{}", rng.gen_range(0..subjects)));
            let p = ex(format!("p{}", rng.gen_range(0..8)));
            let o = if rng.gen_bool(0.2) {
                Object::Ref(ex(format!("s{}", rng.gen_range(0..subjects))))
            } else {
                Object::Literal(Literal::string(format!("{}", rng.gen_range(0..10))))
            };
            Fact::new(s, p, o)
        })
        .collect()
}

fn perturb(rng: &mut StdRng, facts: &BTreeSet<Fact>, subjects: usize, rate: f64) -> BTreeSet<Fact> {
    let mut out: BTreeSet<Fact> = facts.iter().filter(|_| !rng.gen_bool(rate)).cloned().collect();
    let extra = (facts.len() as f64 * rate) as usize + 1;
    out.extend(random_facts(rng, extra, subjects + subjects / 10 + 1));
    out
}

fn delta_algebra() -> Outcome {
    let mut rng = StdRng::seed_from_u64(3);
    let dataset = ds("algebra");
    let (v1, v2) = (
        mint_identifier(IdKind::Version, &["algebra", "v0001"]).unwrap(),
        mint_identifier(IdKind::Version, &["algebra", "v0002"]).unwrap(),
    );
    let mut slowest = Duration::ZERO;
    let mut largest = 0;
    for trial in 0..500 {
        let size = if trial % 50 == 0 { 10_000 } else { rng.gen_range(0..2_000) };
        let subjects = size / 4 + 1;
        let a = random_facts(&mut rng, size, subjects);
        let rate = rng.gen_range(0.0..0.3);
        let b = perturb(&mut rng, &a, subjects, rate);
        largest = largest.max(a.len().max(b.len()));
        let (ra, rb) = (RecordSet::from_facts(a.clone()), RecordSet::from_facts(b.clone()));
        let (sa, sb) = (schema_for(&dataset, &mut rng), schema_for(&dataset, &mut rng));
        let va = VersionView { dataset_id: &dataset, version_id: &v1, schema: &sa, records: &ra };
        let vb = VersionView { dataset_id: &dataset, version_id: &v2, schema: &sb, records: &rb };

        let same = compute_delta(va, va).map_err(|e| e.to_string())?;
        check(same.is_empty(), || format!("trial {trial}: delta(v,v) not empty"))?;

        let started = Instant::now();
        let cs = compute_delta(va, vb).map_err(|e| e.to_string())?;
        slowest = slowest.max(started.elapsed());

        let added = cs.added_facts();
        let deleted = cs.deleted_facts();
        check(added.is_disjoint(&deleted), || format!("trial {trial}: adds and deletes overlap"))?;
        check(added == b.difference(&a).cloned().collect(), || format!("trial {trial}: adds differ from b \\ a"))?;
        check(deleted == a.difference(&b).cloned().collect(), || format!("trial {trial}: deletes differ from a \\ b"))?;

        let (s2, r2) = apply_delta(&sa, &ra, &cs).map_err(|e| e.to_string())?;
        check(r2.content_hash() == rb.content_hash() && s2 == sb, || format!("trial {trial}: apply does not reach v2"))?;
        let (s1, r1) = apply_delta(&sb, &rb, &invert_delta(&cs)).map_err(|e| e.to_string())?;
        check(r1.content_hash() == ra.content_hash() && s1 == sa, || format!("trial {trial}: inverse does not restore v1"))?;
    }
    check(slowest < Duration::from_secs(1), || format!("slowest diff {slowest:?}"))?;
    Ok(format!("500 trials, up to {largest} facts, slowest diff {:.1}ms", slowest.as_secs_f64() * 1e3))
}

// ---------------------------------------------------------------- 4

/// Largest number of disjoint (delete, add) pairs with differing objects,
/// by trying every assignment.
fn exhaustive_pairs(deletes: &[&Object], adds: &[&Object]) -> usize {
    fn go(i: usize, deletes: &[&Object], adds: &[&Object], used: &mut [bool]) -> usize {
        if i == deletes.len() {
            return 0;
        }
        let mut best = go(i + 1, deletes, adds, used);
        for j in 0..adds.len() {
            if !used[j] && deletes[i] != adds[j] {
                used[j] = true;
                best = best.max(1 + go(i + 1, deletes, adds, used));
                used[j] = false;
            }
        }
        best
    }
    go(0, deletes, adds, &mut vec![false; adds.len()])
}

fn high_level_derivation() -> Outcome {
    let mut rng = StdRng::seed_from_u64(4);
    let dataset = ds("hl");
    let (v1, v2) = (
        mint_identifier(IdKind::Version, &["hl", "v0001"]).unwrap(),
        mint_identifier(IdKind::Version, &["hl", "v0002"]).unwrap(),
    );
    let schema = SchemaVersion::new(&dataset, []).unwrap();
    let anchor = ex("anchor");
    let mut cases = 0;
    let mut instances = 0;
    while cases < 300 {
        let subjects = rng.gen_range(1..5);
        let multi = rng.gen_bool(0.3);
        let side = |rng: &mut StdRng| {
            let mut facts = BTreeSet::new();
            for s in 0..subjects {
                facts.insert(Fact::new(ex(format!("s{s}")), anchor.clone(), Object::Literal(Literal::string("x"))));
                for p in 0..3 {
                    let count = if multi { rng.gen_range(0..3) } else { rng.gen_range(0..2) };
                    for _ in 0..count {
                        let o = Object::Literal(Literal::string(rng.gen_range(0..4).to_string()));
                        facts.insert(Fact::new(ex(format!("s{s}")), ex(format!("p{p}")), o));
                    }
                }
            }
            facts
        };
        let (a, b) = (side(&mut rng), side(&mut rng));
        let (ra, rb) = (RecordSet::from_facts(a), RecordSet::from_facts(b));
        let cs = compute_delta(
            VersionView { dataset_id: &dataset, version_id: &v1, schema: &schema, records: &ra },
            VersionView { dataset_id: &dataset, version_id: &v2, schema: &schema, records: &rb },
        )
        .map_err(|e| e.to_string())?;
        if cs.low_level.is_empty() || cs.low_level.len() > 50 {
            continue;
        }
        cases += 1;

        let mut expected: BTreeMap<(Identifier, Identifier), (Vec<Object>, Vec<Object>)> = BTreeMap::new();
        for change in &cs.low_level {
            for fact in change.facts() {
                let entry = expected.entry((fact.subject.clone(), fact.predicate().clone())).or_default();
                if change.is_add() {
                    entry.1.push(fact.object().clone());
                } else {
                    entry.0.push(fact.object().clone());
                }
            }
        }
        let derived = derive_high_level(cs.clone(), &[]);
        let mut found: BTreeMap<(Identifier, Identifier), usize> = BTreeMap::new();
        let mut used = BTreeSet::new();
        for hl in derived.high_level.iter().filter(|h| h.name == "value-update") {
            check(hl.constituents.len() == 2, || "value-update with wrong arity".into())?;
            let (d, a) = (&hl.constituents[0], &hl.constituents[1]);
            let (Payload::Attribute(da), Payload::Attribute(aa)) = (&d.payload, &a.payload) else {
                return Err("value-update over non-attribute changes".into());
            };
            check(
                d.op == ChangeOp::DeleteAttribute
                    && a.op == ChangeOp::AddAttribute
                    && d.subject == a.subject
                    && da.predicate == aa.predicate
                    && da.object != aa.object,
                || "malformed value-update instance".into(),
            )?;
            check(used.insert(d.clone()) && used.insert(a.clone()), || "a change joined two instances".into())?;
            *found.entry((d.subject.clone(), da.predicate.clone())).or_default() += 1;
            instances += 1;
        }
        for (key, (dels, adds)) in &expected {
            let want = exhaustive_pairs(&dels.iter().collect::<Vec<_>>(), &adds.iter().collect::<Vec<_>>());
            let got = found.get(key).copied().unwrap_or(0);
            check(got == want, || format!("({}, {}): {got} instances, oracle {want}", key.0, key.1))?;
            if !multi && !dels.is_empty() && !adds.is_empty() {
                check(got == 1, || "single-valued pair did not fire exactly once".into())?;
            }
        }
        check(found.keys().all(|k| expected.contains_key(k)), || "instance outside any pair".into())?;
    }
    Ok(format!("{cases} deltas of <= 50 changes, {instances} instances match the oracle"))
}

// ---------------------------------------------------------------- 5

fn rdf_fixture(rng: &mut StdRng, facts: usize) -> String {
    let subjects = facts / 5 + 1;
    let mut lines = BTreeSet::new();
    for _ in 0..facts {
        let s = rng.gen_range(0..subjects);
        let p = rng.gen_range(0..5);
        let o = if rng.gen_bool(0.35) {
            format!("<http://ex/s{}>", rng.gen_range(0..subjects + 3))
        } else {
            format!("\"{}\"", rng.gen_range(0..6))
        };
        lines.insert(format!("<http://ex/s{s}> <http://ex/p{p}> {o} .\n"));
    }
    lines.into_iter().collect()
}

fn mutate_rdf(rng: &mut StdRng, text: &str) -> String {
    let mut out = String::new();
    for line in text.lines() {
        match rng.gen_range(0..10) {
            0 => {}
            1 => out.push_str(&format!("{} \"{}\" .\n", line.rsplitn(3, ' ').nth(2).unwrap(), rng.gen_range(0..6))),
            _ => {
                out.push_str(line);
                out.push('\n');
            }
        }
    }
    out
}

/// Brute-force context over a plain fact set.
fn oracle_context(def: &ResourceDefinition, facts: &BTreeSet<Fact>) -> BTreeSet<Fact> {
    let subjects: BTreeSet<&Identifier> = facts.iter().map(|f| &f.subject).collect();
    let passes = |f: &Fact| match &def.description.predicates {
        PredicateFilter::All => true,
        PredicateFilter::Whitelist(list) => list.contains(f.predicate()),
    };
    let mut frontier: BTreeSet<Identifier> = match &def.identification {
        ResourceIdentification::ExplicitSubjects { subjects: list } => {
            list.iter().filter(|s| subjects.contains(s)).cloned().collect()
        }
        ResourceIdentification::PredicateValueCondition { condition } => {
            let object = condition.object.to_object().unwrap();
            facts
                .iter()
                .filter(|f| f.predicate() == &condition.predicate && f.object() == &object)
                .map(|f| f.subject.clone())
                .collect()
        }
    };
    let mut out = BTreeSet::new();
    let mut seen = BTreeSet::new();
    for level in 0..=def.description.depth {
        let mut next = BTreeSet::new();
        for s in &frontier {
            if !seen.insert(s.clone()) {
                continue;
            }
            for f in facts.iter().filter(|f| &f.subject == s && passes(f)) {
                out.insert(f.clone());
                if level < def.description.depth {
                    if let Object::Ref(target) = f.object() {
                        if subjects.contains(target) {
                            next.insert(target.clone());
                        }
                    }
                }
            }
        }
        frontier = next;
    }
    out
}

fn random_definition(rng: &mut StdRng, dataset: &Identifier, facts: &BTreeSet<Fact>, n: usize) -> ResourceDefinition {
    let all: Vec<&Fact> = facts.iter().collect();
    let identification = if rng.gen_bool(0.5) || all.is_empty() {
        let subjects = (0..rng.gen_range(1..4)).map(|_| ex(format!("s{}", rng.gen_range(0..120)))).collect();
        ResourceIdentification::ExplicitSubjects { subjects }
    } else {
        let f = all.choose(rng).unwrap();
        let object = match f.object() {
            Object::Ref(id) => ConditionValue::Ref(id.clone()),
            Object::Literal(l) => ConditionValue::Lit { lexical: l.lexical().to_string(), datatype: l.datatype() },
        };
        ResourceIdentification::PredicateValueCondition {
            condition: Condition { predicate: f.predicate().clone(), object },
        }
    };
    let predicates = if rng.gen_bool(0.5) {
        PredicateFilter::All
    } else {
        PredicateFilter::Whitelist((0..5).filter(|_| rng.gen_bool(0.5)).map(|p| ex(format!("p{p}"))).collect())
    };
    ResourceDefinition {
        name: format!("r{n}"),
        dataset: dataset.clone(),
        identification,
        description: ResourceDescription { predicates, depth: rng.gen_range(0..=3) },
    }
}

fn resource_laws() -> Outcome {
    let mut rng = StdRng::seed_from_u64(5);
    let dir = tempfile::tempdir().unwrap();
    let archive = Archive::init(dir.path().join("a")).unwrap();
    let mut definitions = 0;
    let mut largest = 0;
    for fixture in 0..10 {
        let dataset = archive.register_dataset(&format!("res{fixture}"), SourceModel::Rdf).unwrap().diachronic_id;
        let size = rng.gen_range(50..=500);
        let first = rdf_fixture(&mut rng, size);
        let second = mutate_rdf(&mut rng, &first);
        let mut versions = Vec::new();
        for (i, text) in [first, second].iter().enumerate() {
            let inst = archive
                .ingest(&dataset, &SourceConfig::Rdf, text, TemporalAnnotation::starting(t(i as i64)), prov("a"))
                .map_err(|e| e.to_string())?;
            let facts = archive.get_version(&dataset, &inst.version_id).unwrap().records.fact_set();
            largest = largest.max(facts.len());
            versions.push((inst.version_id, facts));
        }
        let (va, fa) = &versions[0];
        let (vb, fb) = &versions[1];
        check(fa.len() <= 500, || "fixture too large".into())?;
        for _ in 0..10 {
            let def = random_definition(&mut rng, &dataset, fa, definitions);
            definitions += 1;
            let resource = DiachronicResource::from_definition(def.clone()).map_err(|e| e.to_string())?;
            let mut contexts = Vec::new();
            for (v, facts) in &versions {
                let ctx = evaluate_resource(&archive, &resource, v).map_err(|e| e.to_string())?;
                check(ctx.facts.is_subset(facts), || format!("{}: context escapes the version", def.name))?;
                check(ctx.facts == oracle_context(&def, facts), || format!("{}: context differs from oracle", def.name))?;
                let mut previous = BTreeSet::new();
                for depth in 0..=3 {
                    let mut deeper = def.clone();
                    deeper.description.depth = depth;
                    let ctx_k = DiachronicResource::from_definition(deeper)
                        .unwrap()
                        .evaluate_records(v, &archive.get_version(&dataset, v).unwrap().records)
                        .unwrap();
                    check(previous.is_subset(&ctx_k.facts), || format!("{}: depth {depth} shrinks", def.name))?;
                    previous = ctx_k.facts;
                }
                if let PredicateFilter::Whitelist(_) = def.description.predicates {
                    let mut wide = def.clone();
                    wide.description.predicates = PredicateFilter::All;
                    let all = oracle_context(&wide, facts);
                    check(ctx.facts.is_subset(&all), || format!("{}: widening shrinks", def.name))?;
                }
                contexts.push(ctx.facts);
            }
            let union: BTreeSet<&Fact> = contexts[0].iter().chain(&contexts[1]).collect();
            let cs = resource_diff(&archive, &resource, va, vb, &[]).map_err(|e| e.to_string())?;
            let want_added: BTreeSet<Fact> = fb.difference(fa).filter(|f| union.contains(f)).cloned().collect();
            let want_deleted: BTreeSet<Fact> = fa.difference(fb).filter(|f| union.contains(f)).cloned().collect();
            check(cs.added_facts() == want_added && cs.deleted_facts() == want_deleted, || {
                format!("{}: resource diff is not the restricted delta", def.name)
            })?;
            check(cs.high_level.iter().all(|h| h.context.contains(&resource.resource_id)), || {
                "high-level change without the resource in its context".into()
            })?;
        }
    }
    Ok(format!("{definitions} definitions over fixtures of up to {largest} facts"))
}

// ---------------------------------------------------------------- 6

struct Committed {
    dataset: Identifier,
    model: SourceModel,
    agent: String,
    instantiation: DatasetInstantiation,
    schema: SchemaVersion,
    facts: BTreeSet<Fact>,
}

fn query_taxonomy() -> Outcome {
    let mut rng = StdRng::seed_from_u64(6);
    let dir = tempfile::tempdir().unwrap();
    let archive = Archive::init(dir.path().join("a")).unwrap();
    let mut committed: Vec<Committed> = Vec::new();
    let mut clock = 0;
    let mut commit = |archive: &Archive, dataset: &Identifier, model, config: &SourceConfig, text: &str, agent: &str| {
        clock += 100;
        let inst = archive
            .ingest(dataset, config, text, TemporalAnnotation::starting(t(clock)), prov(agent))
            .unwrap();
        let (schema, records) = ingest_text(config, text, dataset).unwrap();
        committed.push(Committed {
            dataset: dataset.clone(),
            model,
            agent: agent.to_string(),
            instantiation: inst,
            schema,
            facts: records.fact_set(),
        });
    };

    let people = archive.register_dataset("people", SourceModel::Relational).unwrap().diachronic_id;
    let genes = archive.register_dataset("genes", SourceModel::Rdf).unwrap().diachronic_id;
    let cube = archive.register_dataset("population", SourceModel::Multidimensional).unwrap().diachronic_id;
    archive.register_dataset("empty", SourceModel::Rdf).unwrap();
    let mut table = random_table(&mut rng, 30);
    while table.config.columns.len() < 3 {
        table = random_table(&mut rng, 30);
    }
    let mut gene_text = rdf_fixture(&mut rng, 150);
    let (cube_cfg, cube_text) = random_cube(&mut rng);
    for round in 0..4 {
        let agent = if round % 2 == 0 { "alice" } else { "bob" };
        if round == 3 {
            // Drop the last column: a schema deletion.
            table.config.columns.pop();
            for row in &mut table.rows {
                row.pop();
            }
        }
        for row in table.rows.iter_mut() {
            if rng.gen_bool(0.3) {
                let i = rng.gen_range(1..row.len());
                row[i] = Some(random_value(&mut rng, table.config.columns[i].datatype));
            }
        }
        let rel = SourceConfig::Relational(table.config.clone());
        commit(&archive, &people, SourceModel::Relational, &rel, &table.csv(), agent);
        commit(&archive, &genes, SourceModel::Rdf, &SourceConfig::Rdf, &gene_text, "carol");
        gene_text = mutate_rdf(&mut rng, &gene_text);
        if round < 2 {
            let cfg = SourceConfig::Multidimensional(cube_cfg.clone());
            commit(&archive, &cube, SourceModel::Multidimensional, &cfg, &cube_text, agent);
        }
    }

    let versions_of = |d: &Identifier| committed.iter().filter(|c| &c.dataset == d).collect::<Vec<_>>();
    let tx_interval = |c: &Committed| {
        let same: Vec<_> = versions_of(&c.dataset);
        let pos = same.iter().position(|x| x.instantiation.version_id == c.instantiation.version_id).unwrap();
        let end = same.get(pos + 1).map(|n| n.instantiation.temporal.transaction_time.start);
        Interval::new(c.instantiation.temporal.transaction_time.start, end).unwrap()
    };
    let mut passed = Vec::new();

    // Dataset listing.
    let windows = [None, Some(Interval::new(t(0), Some(t(250))).unwrap()), Some(Interval::new(t(900), None).unwrap())];
    for model in [None, Some(SourceModel::Rdf), Some(SourceModel::Multidimensional)] {
        for agent in [None, Some("alice"), Some("carol"), Some("nobody")] {
            for window in &windows {
                let filter = ListFilter { source_model: model, agent: agent.map(String::from), overlaps: *window };
                let got: Vec<Identifier> =
                    archive.list_datasets(&filter).unwrap().into_iter().map(|d| d.diachronic_id).collect();
                let mut all: BTreeSet<Identifier> =
                    ["people", "genes", "population", "empty"].iter().map(|s| ds(s)).collect();
                all.retain(|d| {
                    let vs = versions_of(d);
                    let m = if d == &ds("empty") { SourceModel::Rdf } else { vs[0].model };
                    model.map_or(true, |x| x == m)
                        && (agent.is_none() && window.is_none()
                            || vs.iter().any(|c| {
                                agent.map_or(true, |a| a == c.agent)
                                    && window.as_ref().map_or(true, |w| tx_interval(c).overlaps(w))
                            }))
                });
                check(got.iter().cloned().collect::<BTreeSet<_>>() == all, || {
                    format!("dataset listing {model:?} {agent:?} {window:?}")
                })?;
            }
        }
    }
    passed.push("dataset listing");

    // Version listing.
    for d in [&people, &genes, &cube] {
        for agent in [None, Some("alice"), Some("bob")] {
            for window in &windows {
                let filter = ListFilter { source_model: None, agent: agent.map(String::from), overlaps: *window };
                let got: Vec<Identifier> =
                    archive.list_versions(d, &filter).unwrap().into_iter().map(|i| i.version_id).collect();
                let want: Vec<Identifier> = versions_of(d)
                    .into_iter()
                    .filter(|c| agent.map_or(true, |a| a == c.agent))
                    .filter(|c| window.as_ref().map_or(true, |w| tx_interval(c).overlaps(w)))
                    .map(|c| c.instantiation.version_id.clone())
                    .collect();
                check(got == want, || format!("version listing {d} {agent:?}"))?;
            }
        }
    }
    passed.push("version listing");

    // Complete snapshots, by id, by time and latest.
    for c in &committed {
        let v = &c.instantiation.version_id;
        let by_id = snapshot_query(&archive, &c.dataset, &VersionSelector::Version(v.clone()), None).unwrap();
        check(by_id == c.facts, || format!("snapshot of {v}"))?;
        let start = c.instantiation.temporal.transaction_time.start;
        for at in [start, start + chrono::Duration::seconds(50)] {
            let by_time = snapshot_query(&archive, &c.dataset, &VersionSelector::AtTime(at), None).unwrap();
            let want = versions_of(&c.dataset).into_iter().filter(|x| tx_interval(x).contains(at)).last().unwrap();
            check(by_time == want.facts, || format!("snapshot at {at}"))?;
        }
    }
    for d in [&people, &genes, &cube] {
        let latest = snapshot_query(&archive, d, &VersionSelector::Latest, None).unwrap();
        check(latest == versions_of(d).last().unwrap().facts, || format!("latest of {d}"))?;
    }
    passed.push("complete");

    // Partial snapshots and longitudinal timelines, checked for coherence.
    let mut parts = Vec::new();
    for c in committed.iter().filter(|c| c.dataset == genes).take(1) {
        let subjects: Vec<Identifier> = c.facts.iter().map(|f| f.subject.clone()).collect::<BTreeSet<_>>().into_iter().take(3).collect();
        parts.push((genes.clone(), PartSelector::Subjects(subjects)));
        parts.push((genes.clone(), PartSelector::Predicates(vec![ex("p1"), ex("p3")])));
        parts.push((genes.clone(), PartSelector::Subjects(vec![ex("nobody")])));
    }
    let name_prop = mint_identifier(IdKind::SchemaObject, &["people", "t", "c0"]).unwrap();
    parts.push((people.clone(), PartSelector::Predicates(vec![name_prop])));
    let select = |facts: &BTreeSet<Fact>, part: &PartSelector| -> BTreeSet<Fact> {
        facts
            .iter()
            .filter(|f| match part {
                PartSelector::Subjects(s) => s.contains(&f.subject),
                PartSelector::Predicates(p) => p.contains(f.predicate()),
                PartSelector::Resource(_) => unreachable!(),
            })
            .cloned()
            .collect()
    };
    for (d, part) in &parts {
        for c in versions_of(d) {
            let got = snapshot_query(&archive, d, &VersionSelector::Version(c.instantiation.version_id.clone()), Some(part)).unwrap();
            check(got == select(&c.facts, part), || format!("partial {part:?}"))?;
        }
    }
    passed.push("partial");

    for (d, part) in &parts {
        for window in &windows {
            let timeline = longitudinal_query(&archive, d, part, window.as_ref()).unwrap();
            let want: Vec<(Identifier, BTreeSet<Fact>)> = versions_of(d)
                .into_iter()
                .filter(|c| window.as_ref().map_or(true, |w| tx_interval(c).overlaps(w)))
                .map(|c| (c.instantiation.version_id.clone(), select(&c.facts, part)))
                .collect();
            let got: Vec<(Identifier, BTreeSet<Fact>)> =
                timeline.entries.iter().map(|e| (e.version_id.clone(), e.facts.clone())).collect();
            check(got == want, || format!("timeline {part:?} {window:?}"))?;
            for entry in &timeline.entries {
                let snap = snapshot_query(&archive, d, &VersionSelector::Version(entry.version_id.clone()), Some(part)).unwrap();
                check(snap == entry.facts, || "snapshot/longitudinal incoherent".into())?;
            }
        }
    }
    passed.push("longitudinal");

    // Changes between every ordered pair, against set differences and composition.
    for d in [&people, &genes, &cube] {
        let vs = versions_of(d);
        for i in 0..vs.len() {
            for j in i..vs.len() {
                let (a, b) = (&vs[i], &vs[j]);
                let cs = changes_query(
                    &archive,
                    d,
                    &a.instantiation.version_id,
                    &b.instantiation.version_id,
                    &[],
                    &TypeFilter::default(),
                    None,
                )
                .unwrap();
                check(cs.added_facts() == b.facts.difference(&a.facts).cloned().collect(), || "changes: adds".into())?;
                check(cs.deleted_facts() == a.facts.difference(&b.facts).cloned().collect(), || "changes: deletes".into())?;
                let want_schema: BTreeSet<&SchemaObject> = a.schema.objects().filter(|o| b.schema.get(&o.id) != Some(o)).collect();
                check(cs.deleted_schema() == want_schema, || "changes: schema deletes".into())?;
                if j == i + 1 {
                    let cached = archive
                        .cached_change_set(d, &a.instantiation.version_id, &b.instantiation.version_id)
                        .unwrap()
                        .unwrap();
                    check(cached.to_cs_string() == cs.to_cs_string(), || "adjacent change set differs from cache".into())?;
                }
                if j >= i + 2 {
                    let mid = &vs[i + 1];
                    let compose = |x: &BTreeSet<Fact>, y: &BTreeSet<Fact>, z: &BTreeSet<Fact>| {
                        let mut added: BTreeSet<Fact> = y.difference(x).cloned().collect();
                        let mut deleted: BTreeSet<Fact> = x.difference(y).cloned().collect();
                        for f in z.difference(y) {
                            if !deleted.remove(f) {
                                added.insert(f.clone());
                            }
                        }
                        for f in y.difference(z) {
                            if !added.remove(f) {
                                deleted.insert(f.clone());
                            }
                        }
                        (added, deleted)
                    };
                    let (ca, cd) = compose(&a.facts, &mid.facts, &vs[i + 2].facts);
                    if j == i + 2 {
                        check(cs.added_facts() == ca && cs.deleted_facts() == cd, || "composition mismatch".into())?;
                    }
                }
            }
        }
        if vs.len() > 1 {
            let reversed = changes_query(
                &archive,
                d,
                &vs[1].instantiation.version_id,
                &vs[0].instantiation.version_id,
                &[],
                &TypeFilter::default(),
                None,
            );
            check(matches!(reversed, Err(Error::VersionOrder { .. })), || "reversed order accepted".into())?;
        }
    }
    passed.push("changes");

    // Mixed queries against a scan of the in-memory versions.
    for (types, subjects) in [
        ("delete-schema-object", None),
        ("value-update", None),
        ("add-record,delete-record", None),
        ("value-update", Some(vec![ex("s1"), ex("s2")])),
    ] {
        for window in [None, Some(Interval::new(t(0), Some(t(250))).unwrap())] {
            let criteria = MixedCriteria {
                types: TypeFilter::parse(types),
                interval: window,
                subjects: subjects.clone().map(BTreeSet::from_iter),
            };
            let got: BTreeMap<Identifier, (BTreeSet<Identifier>, BTreeSet<Identifier>)> = mixed_query(&archive, &criteria)
                .unwrap()
                .into_iter()
                .map(|a| (a.dataset_id, (a.subjects, a.schema_objects)))
                .collect();
            let mut want: BTreeMap<Identifier, (BTreeSet<Identifier>, BTreeSet<Identifier>)> = BTreeMap::new();
            for d in [&people, &genes, &cube] {
                for pair in versions_of(d).windows(2) {
                    let (a, b) = (pair[0], pair[1]);
                    if window.as_ref().is_some_and(|w| !w.contains(b.instantiation.temporal.transaction_time.start)) {
                        continue;
                    }
                    let keep = |s: &Identifier| subjects.as_ref().map_or(true, |list| list.contains(s));
                    let mut subj = BTreeSet::new();
                    let mut schema = BTreeSet::new();
                    let a_subjects: BTreeSet<&Identifier> = a.facts.iter().map(|f| &f.subject).collect();
                    let b_subjects: BTreeSet<&Identifier> = b.facts.iter().map(|f| &f.subject).collect();
                    for kind in types.split(',') {
                        match kind {
                            "delete-schema-object" => schema.extend(
                                a.schema.objects().filter(|o| b.schema.get(&o.id) != Some(*o)).map(|o| o.id.clone()),
                            ),
                            "add-record" => subj.extend(b_subjects.difference(&a_subjects).map(|s| (*s).clone())),
                            "delete-record" => subj.extend(a_subjects.difference(&b_subjects).map(|s| (*s).clone())),
                            "value-update" => {
                                for del in a.facts.difference(&b.facts) {
                                    let replaced = b.facts.difference(&a.facts).any(|add| {
                                        add.subject == del.subject
                                            && add.predicate() == del.predicate()
                                            && a_subjects.contains(&add.subject)
                                            && b_subjects.contains(&add.subject)
                                    });
                                    if replaced {
                                        subj.insert(del.subject.clone());
                                    }
                                }
                            }
                            other => unreachable!("{other}"),
                        }
                    }
                    subj.retain(|s| keep(s));
                    schema.retain(|s| keep(s));
                    if !subj.is_empty() || !schema.is_empty() {
                        let entry = want.entry((*d).clone()).or_default();
                        entry.0.extend(subj);
                        entry.1.extend(schema);
                    }
                }
            }
            check(got == want, || format!("mixed {types} {window:?}: {got:?} vs {want:?}"))?;
        }
    }
    passed.push("mixed");

    Ok(format!("{} query types on {} versions: {}", passed.len(), committed.len(), passed.join(", ")))
}

// ---------------------------------------------------------------- 7

fn temporal_resolution() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    let dir = tempfile::tempdir().unwrap();
    let archive = Archive::init(dir.path().join("a")).unwrap();
    let dataset = archive.register_dataset("timeline", SourceModel::Rdf).unwrap().diachronic_id;
    let mut starts = Vec::new();
    let mut clock = 0;
    for i in 0..10 {
        clock += rng.gen_range(1..10_000);
        let text = format!("<http://ex/a> <http://ex/p> \"{i}\" .\n");
        let inst = archive
            .ingest(&dataset, &SourceConfig::Rdf, &text, TemporalAnnotation::starting(t(clock)), prov("a"))
            .map_err(|e| e.to_string())?;
        starts.push((t(clock), inst.version_id));
    }
    let oracle = |at: DateTime<Utc>| {
        (0..starts.len())
            .find(|&i| starts[i].0 <= at && starts.get(i + 1).map_or(true, |next| at < next.0))
            .map(|i| starts[i].1.clone())
    };
    let mut probes: Vec<DateTime<Utc>> = Vec::new();
    for (start, _) in &starts {
        for delta in [-1, 0, 1] {
            probes.push(*start + chrono::Duration::seconds(delta));
        }
        probes.push(*start - chrono::Duration::nanoseconds(1));
    }
    while probes.len() < 1000 {
        probes.push(t(rng.gen_range(-1000..clock + 1000)));
    }
    for at in &probes {
        let got = match archive.resolve_version_at(&dataset, *at) {
            Ok(v) => Some(v),
            Err(Error::NoVersionAtTime { .. }) => None,
            Err(e) => return Err(e.to_string()),
        };
        check(got == oracle(*at), || format!("at {at}: {got:?} vs {:?}", oracle(*at)))?;
    }
    Ok(format!("{} probes incl. every boundary", probes.len()))
}

// ---------------------------------------------------------------- 8

fn archive_integrity() -> Outcome {
    let mut rng = StdRng::seed_from_u64(8);
    let dir = tempfile::tempdir().unwrap();
    let archive = Archive::init(dir.path().join("a")).unwrap();
    let dataset = archive.register_dataset("fragile", SourceModel::Rdf).unwrap().diachronic_id;
    let mut versions = Vec::new();
    for i in 0..5 {
        let text = rdf_fixture(&mut rng, 40 + i * 10);
        versions.push(
            archive
                .ingest(&dataset, &SourceConfig::Rdf, &text, TemporalAnnotation::starting(t(i as i64)), prov("a"))
                .map_err(|e| e.to_string())?,
        );
    }
    for flip in 0..100 {
        let inst = versions.choose(&mut rng).unwrap();
        let path = dir.path().join("a/blobs").join(format!("{}.facts", inst.record_set_hash));
        let original = std::fs::read(&path).unwrap();
        let mut bytes = original.clone();
        let at = rng.gen_range(0..bytes.len());
        bytes[at] ^= rng.gen_range(1..=255u8);
        std::fs::write(&path, &bytes).unwrap();
        let result = archive.get_version(&dataset, &inst.version_id);
        std::fs::write(&path, &original).unwrap();
        check(matches!(result, Err(Error::CorruptArchive(_))), || {
            format!("flip {flip} at byte {at} of {} not detected", path.display())
        })?;
        check(archive.get_version(&dataset, &inst.version_id).is_ok(), || "restored blob unreadable".into())?;
    }
    Ok("100 of 100 byte flips detected".into())
}
