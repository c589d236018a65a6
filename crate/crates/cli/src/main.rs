mod output;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};

use evoarch_core::delta::{ChangeRule, ChangeSet};
use evoarch_core::ingest::{export_canonical, SourceConfig};
use evoarch_core::model::{parse_timestamp, DataType, Identifier, Interval, ProvenanceInfo, SourceModel, TemporalAnnotation};
use evoarch_core::query::{
    changes_query, longitudinal_query, mixed_query, resolve_selector, snapshot_query, MixedCriteria,
    PartSelector, TypeFilter, VersionSelector,
};
use evoarch_core::resource::{
    define_resource, evaluate_resource, list_resources, load_resource, resource_diff, Condition,
    ConditionValue, PredicateFilter, ResourceDefinition, ResourceDescription, ResourceIdentification,
};
use evoarch_core::store::{Archive, ListFilter};
use evoarch_core::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "evoarch", version, about = "Versioned archive for evolving datasets")]
struct Cli {
    /// Archive root directory
    #[arg(long, global = true, env = "EVOARCH_ROOT")]
    archive: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Create an empty archive
    Init { dir: PathBuf },
    /// Register a diachronic dataset
    Register {
        #[arg(long)]
        title: String,
        #[arg(long, value_parser = parse_model)]
        model: SourceModel,
    },
    /// Map a source file and commit it as the dataset's next version
    Ingest(IngestArgs),
    /// List datasets or the versions of one dataset
    List {
        #[command(subcommand)]
        what: ListCommand,
    },
    /// Print the facts of one version
    Show {
        dataset: String,
        #[command(flatten)]
        at: VersionArgs,
        #[command(flatten)]
        part: PartArgs,
        #[arg(long, value_enum, default_value_t = Format::Facts)]
        format: Format,
    },
    /// Print the change set between two versions
    Diff {
        dataset: String,
        from: String,
        to: String,
        /// Include the high-level section
        #[arg(long)]
        high_level: bool,
        /// Additional change rules
        #[arg(long)]
        rules: Option<PathBuf>,
        /// Comma-separated change kinds and rule names
        #[arg(long = "type")]
        types: Option<String>,
        /// subjects:<ids> | predicates:<ids> | resource:<name>
        #[arg(long, value_parser = parse_part)]
        part: Option<PartSelector>,
        #[arg(long, value_enum, default_value_t = Format::Cs)]
        format: Format,
    },
    /// Define, evaluate and diff diachronic resources
    Resource {
        #[command(subcommand)]
        action: ResourceCommand,
    },
    /// Longitudinal and mixed queries
    Query {
        #[command(subcommand)]
        kind: QueryCommand,
    },
    /// Write a version in its source model's canonical form
    Export {
        dataset: String,
        #[arg(long)]
        version: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// Dataset slug or title; registered if absent
    #[arg(long)]
    dataset: String,
    #[arg(long, value_parser = parse_model)]
    model: SourceModel,
    /// JSON mapping configuration (not needed for rdf)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Transaction start; defaults to now
    #[arg(long, value_parser = parse_time)]
    tx_time: Option<DateTime<Utc>>,
    #[arg(long, value_parser = parse_time)]
    valid_from: Option<DateTime<Utc>>,
    #[arg(long, value_parser = parse_time, requires = "valid_from")]
    valid_to: Option<DateTime<Utc>>,
    #[arg(long, default_value = "evoarch")]
    agent: String,
    /// Source description; defaults to the input path
    #[arg(long)]
    source: Option<String>,
    #[arg(long)]
    note: Option<String>,
    file: PathBuf,
}

#[derive(Debug, Subcommand)]
enum ListCommand {
    Datasets(ListArgs),
    Versions {
        dataset: String,
        #[command(flatten)]
        filter: ListArgs,
    },
}

#[derive(Debug, Args)]
struct ListArgs {
    #[arg(long, value_parser = parse_model)]
    model: Option<SourceModel>,
    #[arg(long)]
    agent: Option<String>,
    #[arg(long, value_parser = parse_time)]
    from: Option<DateTime<Utc>>,
    #[arg(long, value_parser = parse_time, requires = "from")]
    to: Option<DateTime<Utc>>,
}

#[derive(Debug, Args)]
struct VersionArgs {
    #[arg(long, conflicts_with = "at")]
    version: Option<String>,
    #[arg(long, value_parser = parse_time)]
    at: Option<DateTime<Utc>>,
}

#[derive(Debug, Args)]
#[group(multiple = false)]
struct PartArgs {
    #[arg(long, value_delimiter = ',')]
    subjects: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    predicates: Option<Vec<String>>,
    #[arg(long)]
    resource: Option<String>,
}

#[derive(Debug, Subcommand)]
enum ResourceCommand {
    /// Define a resource from flags or from a definition file
    Define(DefineArgs),
    /// Print a resource's context in one version
    Eval {
        name: String,
        #[command(flatten)]
        at: VersionArgs,
        #[arg(long, value_enum, default_value_t = Format::Facts)]
        format: Format,
    },
    /// Print the resource-scoped change set between two versions
    Diff {
        name: String,
        from: String,
        to: String,
        #[arg(long)]
        rules: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Cs)]
        format: Format,
    },
    List,
}

#[derive(Debug, Args)]
struct DefineArgs {
    name: Option<String>,
    /// A `.def` JSON file; replaces all other flags
    #[arg(long, conflicts_with_all = ["dataset", "subjects", "condition_predicate"])]
    file: Option<PathBuf>,
    #[arg(long, required_unless_present = "file")]
    dataset: Option<String>,
    #[arg(long, value_delimiter = ',', conflicts_with = "condition_predicate")]
    subjects: Option<Vec<String>>,
    #[arg(long)]
    condition_predicate: Option<String>,
    /// Condition object: an identifier with --condition-ref, else a literal
    #[arg(long, requires = "condition_predicate")]
    condition_value: Option<String>,
    #[arg(long, requires = "condition_value")]
    condition_ref: bool,
    #[arg(long, value_parser = parse_datatype, default_value = "string")]
    condition_type: DataType,
    /// Whitelisted predicates; all when absent
    #[arg(long, value_delimiter = ',')]
    predicates: Option<Vec<String>>,
    #[arg(long, default_value_t = 0)]
    depth: u32,
}

#[derive(Debug, Subcommand)]
enum QueryCommand {
    /// Part-selected facts of every version
    Timeline {
        dataset: String,
        #[arg(long, value_parser = parse_part)]
        part: PartSelector,
        #[arg(long, value_parser = parse_time)]
        from: Option<DateTime<Utc>>,
        #[arg(long, value_parser = parse_time, requires = "from")]
        to: Option<DateTime<Utc>>,
        #[arg(long, value_enum, default_value_t = Format::Facts)]
        format: Format,
    },
    /// Datasets and parts affected by kinds of change
    Mixed {
        #[arg(long = "type")]
        types: Option<String>,
        #[arg(long, value_parser = parse_time)]
        from: Option<DateTime<Utc>>,
        #[arg(long, value_parser = parse_time, requires = "from")]
        to: Option<DateTime<Utc>>,
        #[arg(long, value_delimiter = ',')]
        subjects: Option<Vec<String>>,
        #[arg(long, value_enum, default_value_t = Format::Facts)]
        format: Format,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Facts,
    Cs,
    Json,
}

fn parse_model(s: &str) -> std::result::Result<SourceModel, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_time(s: &str) -> std::result::Result<DateTime<Utc>, String> {
    parse_timestamp(s).map_err(|e| e.to_string())
}

fn parse_datatype(s: &str) -> std::result::Result<DataType, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_part(s: &str) -> std::result::Result<PartSelector, String> {
    let (kind, rest) = s
        .split_once(':')
        .ok_or("expected subjects:<ids>, predicates:<ids> or resource:<name>")?;
    let ids = || -> std::result::Result<Vec<Identifier>, String> {
        rest.split(',').map(|i| Identifier::parse(i).map_err(|e| e.to_string())).collect()
    };
    match kind {
        "subjects" => Ok(PartSelector::Subjects(ids()?)),
        "predicates" => Ok(PartSelector::Predicates(ids()?)),
        "resource" => Ok(PartSelector::Resource(rest.to_string())),
        other => Err(format!("unknown part kind `{other}`")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("E{:03}: {e}", e.code());
            ExitCode::from(1)
        }
    }
}

fn open(root: Option<&Path>) -> Result<Archive> {
    match root {
        Some(root) => Archive::open(root),
        None => Err(Error::NotAnArchive(PathBuf::from("(set --archive or EVOARCH_ROOT)"))),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn ids(list: &[String]) -> Result<Vec<Identifier>> {
    list.iter().map(|s| Identifier::parse(s)).collect()
}

fn rules(path: Option<&Path>) -> Result<Vec<ChangeRule>> {
    path.map_or(Ok(Vec::new()), |p| ChangeRule::parse_file(&read(p)?))
}

fn interval(from: Option<DateTime<Utc>>, to: Option<DateTime<Utc>>) -> Result<Option<Interval>> {
    from.map(|f| Interval::new(f, to)).transpose()
}

fn selector(archive: &Archive, dataset: &Identifier, at: &VersionArgs) -> Result<VersionSelector> {
    Ok(match (&at.version, at.at) {
        (Some(v), _) => VersionSelector::Version(archive.resolve_version(dataset, v)?),
        (None, Some(t)) => VersionSelector::AtTime(t),
        (None, None) => VersionSelector::Latest,
    })
}

fn part(args: &PartArgs) -> Result<Option<PartSelector>> {
    Ok(if let Some(s) = &args.subjects {
        Some(PartSelector::Subjects(ids(s)?))
    } else if let Some(p) = &args.predicates {
        Some(PartSelector::Predicates(ids(p)?))
    } else {
        args.resource.clone().map(PartSelector::Resource)
    })
}

fn emit_change_set(cs: &ChangeSet, format: Format) {
    match format {
        Format::Json => println!("{}", output::change_set_json(cs)),
        _ => print!("{}", cs.to_cs_string()),
    }
}

fn run(cli: Cli) -> Result<()> {
    let root = cli.archive.as_deref();
    match cli.command {
        Command::Init { dir } => {
            let dir = cli.archive.unwrap_or(dir);
            Archive::init(&dir)?;
            println!("{}", dir.display());
        }
        Command::Register { title, model } => {
            let dataset = open(root)?.register_dataset(&title, model)?;
            println!("{}", dataset.diachronic_id);
        }
        Command::Ingest(args) => ingest(&open(root)?, args)?,
        Command::List { what } => {
            let archive = open(root)?;
            match what {
                ListCommand::Datasets(filter) => {
                    for ds in archive.list_datasets(&list_filter(filter)?)? {
                        println!(
                            "{}\t{}\t{}\t{}",
                            ds.diachronic_id,
                            ds.source_model,
                            ds.version_ids.len(),
                            ds.title
                        );
                    }
                }
                ListCommand::Versions { dataset, filter } => {
                    let dataset = archive.resolve_dataset(&dataset)?;
                    for inst in archive.list_versions(&dataset, &list_filter(filter)?)? {
                        println!("{}", output::version_line(&inst));
                    }
                }
            }
        }
        Command::Show {
            dataset,
            at,
            part: part_args,
            format,
        } => {
            let archive = open(root)?;
            let dataset = archive.resolve_dataset(&dataset)?;
            let sel = selector(&archive, &dataset, &at)?;
            let facts = snapshot_query(&archive, &dataset, &sel, part(&part_args)?.as_ref())?;
            output::print_facts(&facts, format);
        }
        Command::Diff {
            dataset,
            from,
            to,
            high_level,
            rules: rule_file,
            types,
            part,
            format,
        } => {
            let archive = open(root)?;
            let dataset = archive.resolve_dataset(&dataset)?;
            let from = archive.resolve_version(&dataset, &from)?;
            let to = archive.resolve_version(&dataset, &to)?;
            let types = types.as_deref().map(TypeFilter::parse).unwrap_or_default();
            let mut cs = changes_query(
                &archive,
                &dataset,
                &from,
                &to,
                &rules(rule_file.as_deref())?,
                &types,
                part.as_ref(),
            )?;
            if !high_level {
                cs.high_level.clear();
            }
            emit_change_set(&cs, format);
        }
        Command::Resource { action } => resource(&open(root)?, action)?,
        Command::Query { kind } => {
            let archive = open(root)?;
            match kind {
                QueryCommand::Timeline {
                    dataset,
                    part,
                    from,
                    to,
                    format,
                } => {
                    let dataset = archive.resolve_dataset(&dataset)?;
                    let timeline = longitudinal_query(&archive, &dataset, &part, interval(from, to)?.as_ref())?;
                    output::print_timeline(&timeline, format);
                }
                QueryCommand::Mixed {
                    types,
                    from,
                    to,
                    subjects,
                    format,
                } => {
                    let criteria = MixedCriteria {
                        types: types.as_deref().map(TypeFilter::parse).unwrap_or_default(),
                        interval: interval(from, to)?,
                        subjects: subjects.map(|s| ids(&s)).transpose()?.map(BTreeSet::from_iter),
                    };
                    output::print_affected(&mixed_query(&archive, &criteria)?, format);
                }
            }
        }
        Command::Export {
            dataset,
            version,
            output,
        } => {
            let archive = open(root)?;
            let dataset = archive.resolve_dataset(&dataset)?;
            let version = archive.resolve_version(&dataset, &version)?;
            let text = export_canonical(&archive, &dataset, &version)?;
            match output {
                Some(path) => fs::write(&path, text).map_err(|e| Error::io(&path, e))?,
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}

fn list_filter(args: ListArgs) -> Result<ListFilter> {
    Ok(ListFilter {
        source_model: args.model,
        agent: args.agent,
        overlaps: interval(args.from, args.to)?,
    })
}

/// Builds the mapping configuration: the JSON file with its `model` field
/// filled in from `--model`.
fn source_config(model: SourceModel, path: Option<&Path>) -> Result<SourceConfig> {
    let mut value = match path {
        Some(p) => serde_json::from_str::<serde_json::Value>(&read(p)?).map_err(|e| Error::json(p, e))?,
        None => serde_json::json!({}),
    };
    let object = value
        .as_object_mut()
        .ok_or_else(|| Error::InvalidConfig("configuration must be a JSON object".into()))?;
    let tag = serde_json::Value::String(model.as_str().to_string());
    match object.get("model") {
        Some(given) if given != &tag => {
            return Err(Error::ConfigMismatch(format!(
                "configuration is for {given}, --model is {model}"
            )))
        }
        _ => {
            object.insert("model".into(), tag);
        }
    }
    serde_json::from_value(value).map_err(|e| Error::InvalidConfig(e.to_string()))
}

fn ingest(archive: &Archive, args: IngestArgs) -> Result<()> {
    let config = source_config(args.model, args.config.as_deref())?;
    let text = read(&args.file)?;
    let dataset = match archive.resolve_dataset(&args.dataset) {
        Ok(id) => id,
        Err(Error::DatasetNotFound(_)) => archive.register_dataset(&args.dataset, args.model)?.diachronic_id,
        Err(e) => return Err(e),
    };
    let now = Utc::now();
    let temporal = TemporalAnnotation {
        transaction_time: Interval::open(args.tx_time.unwrap_or(now)),
        valid_time: interval(args.valid_from, args.valid_to)?,
    };
    let provenance = ProvenanceInfo {
        agent: args.agent,
        process: format!("evoarch ingest --model {}", args.model),
        source: args.source.unwrap_or_else(|| args.file.display().to_string()),
        recorded_at: now,
        annotation: args.note,
    };
    let inst = archive.ingest(&dataset, &config, &text, temporal, provenance)?;
    println!("{}", inst.version_id);
    Ok(())
}

fn resource(archive: &Archive, action: ResourceCommand) -> Result<()> {
    match action {
        ResourceCommand::Define(args) => {
            let resource = match &args.file {
                Some(path) => {
                    let def: ResourceDefinition =
                        serde_json::from_str(&read(path)?).map_err(|e| Error::InvalidResource(e.to_string()))?;
                    let name = args.name.clone().unwrap_or_else(|| def.name.clone());
                    let dataset = archive.resolve_dataset(def.dataset.as_str())?;
                    define_resource(archive, &dataset, def.identification, def.description, &name)?
                }
                None => {
                    let (name, dataset, identification, description) = define_from_flags(archive, &args)?;
                    define_resource(archive, &dataset, identification, description, &name)?
                }
            };
            println!("{}", resource.resource_id);
        }
        ResourceCommand::Eval { name, at, format } => {
            let resource = load_resource(archive, &name)?;
            let version = resolve_selector(archive, &resource.dataset_id, &selector(archive, &resource.dataset_id, &at)?)?;
            let context = evaluate_resource(archive, &resource, &version)?;
            output::print_facts(&context.facts, format);
        }
        ResourceCommand::Diff {
            name,
            from,
            to,
            rules: rule_file,
            format,
        } => {
            let resource = load_resource(archive, &name)?;
            let from = archive.resolve_version(&resource.dataset_id, &from)?;
            let to = archive.resolve_version(&resource.dataset_id, &to)?;
            let cs = resource_diff(archive, &resource, &from, &to, &rules(rule_file.as_deref())?)?;
            emit_change_set(&cs, format);
        }
        ResourceCommand::List => {
            for name in list_resources(archive)? {
                println!("{name}");
            }
        }
    }
    Ok(())
}

fn define_from_flags(
    archive: &Archive,
    args: &DefineArgs,
) -> Result<(String, Identifier, ResourceIdentification, ResourceDescription)> {
    let name = args
        .name
        .clone()
        .ok_or_else(|| Error::InvalidResource("a resource name is required".into()))?;
    let dataset = archive.resolve_dataset(args.dataset.as_deref().unwrap_or_default())?;
    let identification = match (&args.subjects, &args.condition_predicate) {
        (Some(subjects), None) => ResourceIdentification::ExplicitSubjects { subjects: ids(subjects)? },
        (None, Some(predicate)) => {
            let value = args
                .condition_value
                .clone()
                .ok_or_else(|| Error::InvalidResource("--condition-value is required".into()))?;
            let object = if args.condition_ref {
                ConditionValue::Ref(Identifier::parse(&value)?)
            } else {
                ConditionValue::Lit {
                    lexical: value,
                    datatype: args.condition_type,
                }
            };
            ResourceIdentification::PredicateValueCondition {
                condition: Condition {
                    predicate: Identifier::parse(predicate)?,
                    object,
                },
            }
        }
        _ => {
            return Err(Error::InvalidResource(
                "give either --subjects or --condition-predicate".into(),
            ))
        }
    };
    let predicates = match &args.predicates {
        Some(list) => PredicateFilter::Whitelist(ids(list)?),
        None => PredicateFilter::All,
    };
    Ok((
        name,
        dataset,
        identification,
        ResourceDescription {
            predicates,
            depth: args.depth,
        },
    ))
}
