//! Command-line front end for `walktensor`.
//!
//! A [`Session`] owns one loaded graph and builds its pseudoinverse on first
//! use; every later query in the session reuses it.

use std::cell::{OnceCell, RefCell};
use std::ffi::OsString;
use std::fs::File;
use std::io::{Read, Write};
use std::rc::Rc;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use walktensor::measures::{
    betweenness, closeness, commute_centrality, commute_time, conditional_hitting_time, hitting_time,
    passage_probability, passage_probability_avoiding,
};
use walktensor::oracle::{simulate_walks, WalkStats};
use walktensor::trust::EVAPORATION_LABEL;
use walktensor::{
    augment_evaporation, load_graph, rw_laplacian_pinv, transition_matrix, Digraph64, Error, FundamentalTensor,
    GraphFormat, LaplacianPinv64, Matrix64, Partition, TransitionMatrix64, TrustNetwork64,
};

pub const DEFAULT_WALKS: usize = 100_000;

#[derive(Parser, Debug)]
#[command(
    name = "walktensor",
    version,
    about = "Random-walk measures from one pseudoinverse of the random-walk Laplacian",
    arg_required_else_help = true
)]
pub struct Cli {
    /// Graph file, or `-` for stdin.
    #[arg(long, global = true, default_value = "-")]
    pub input: String,

    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,

    #[arg(long = "graph-format", global = true, value_enum, default_value_t = InputFormat::EdgeList)]
    pub graph_format: InputFormat,

    /// Cross-check against seeded Monte Carlo walks: `mc` or `mc:WALKS`.
    #[arg(long, global = true, value_parser = parse_verify)]
    pub verify: Option<usize>,

    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Significant digits, or `full` for shortest round-trip output.
    #[arg(long, global = true, default_value = "6", value_parser = parse_precision)]
    pub precision: Precision,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Pseudoinverse of the random-walk Laplacian.
    Pinv {
        /// Also emit the pseudoinverse of I − P.
        #[arg(long)]
        normalized: bool,
    },
    /// Expected visit counts before reaching a target.
    Tensor {
        #[arg(long, required_unless_present = "full")]
        target: Option<String>,
        /// Every slice; memory grows as n³.
        #[arg(long, conflicts_with = "avoid")]
        full: bool,
        #[arg(long, value_delimiter = ',')]
        avoid: Vec<String>,
    },
    /// Expected steps from one node to another.
    Hitting {
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long, value_delimiter = ',')]
        avoid: Vec<String>,
    },
    /// Expected round-trip steps between two nodes.
    Commute {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
    },
    Centrality {
        #[arg(long)]
        node: String,
        #[arg(long, value_enum, default_value_t = CentralityKind::Commute)]
        kind: CentralityKind,
        /// Skip terms whose source equals the target (betweenness only).
        #[arg(long)]
        exclude_diagonal: bool,
    },
    /// Probability of passing a node before reaching the target.
    Passage {
        #[arg(long)]
        from: String,
        #[arg(long)]
        via: String,
        #[arg(long)]
        to: String,
        #[arg(long, value_delimiter = ',')]
        avoid: Vec<String>,
    },
    /// Personalized-hitting-time trust ranking.
    Trust {
        #[arg(long)]
        viewpoint: String,
        #[arg(long, value_delimiter = ',')]
        avoid: Vec<String>,
        #[arg(long, default_value_t = 0.15)]
        evaporation: f64,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Pinv { .. } => "pinv",
            Command::Tensor { .. } => "tensor",
            Command::Hitting { .. } => "hitting",
            Command::Commute { .. } => "commute",
            Command::Centrality { .. } => "centrality",
            Command::Passage { .. } => "passage",
            Command::Trust { .. } => "trust",
        }
    }

    fn verifiable(&self) -> bool {
        !matches!(self, Command::Pinv { .. } | Command::Tensor { .. })
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum InputFormat {
    EdgeList,
    Dense,
}

impl From<InputFormat> for GraphFormat {
    fn from(f: InputFormat) -> Self {
        match f {
            InputFormat::EdgeList => GraphFormat::EdgeList,
            InputFormat::Dense => GraphFormat::DenseMatrix,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum CentralityKind {
    Commute,
    Closeness,
    Betweenness,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Precision {
    Digits(usize),
    Full,
}

impl Precision {
    fn to_json(self) -> Value {
        match self {
            Precision::Digits(d) => json!(d),
            Precision::Full => json!("full"),
        }
    }
}

fn parse_precision(s: &str) -> Result<Precision, String> {
    if s == "full" {
        return Ok(Precision::Full);
    }
    match s.parse::<usize>() {
        Ok(d) if (1..=17).contains(&d) => Ok(Precision::Digits(d)),
        _ => Err(format!("expected 1..=17 or `full`, got {s:?}")),
    }
}

fn parse_verify(s: &str) -> Result<usize, String> {
    let walks = match s.split_once(':') {
        None if s == "mc" => DEFAULT_WALKS,
        Some(("mc", w)) => w.parse().map_err(|_| format!("invalid walk count {w:?}"))?,
        _ => return Err(format!("expected `mc` or `mc:WALKS`, got {s:?}")),
    };
    if walks == 0 {
        return Err("walk count must be positive".into());
    }
    Ok(walks)
}

#[derive(Clone, Copy, Debug)]
pub struct Options {
    pub format: OutputFormat,
    pub precision: Precision,
    pub verify: Option<usize>,
    pub seed: u64,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            format: OutputFormat::Json,
            precision: Precision::Digits(6),
            verify: None,
            seed: 0,
        }
    }
}

/// Result of one subcommand before formatting.
#[derive(Clone, Debug)]
pub struct Report {
    pub query: Map<String, Value>,
    pub value: Payload,
    pub flags: Map<String, Value>,
    pub verification: Option<Verification>,
}

#[derive(Clone, Debug)]
pub enum Payload {
    Number(f64),
    /// Named square matrices over a shared label set.
    Matrices {
        labels: Vec<String>,
        matrices: Vec<(String, Matrix64)>,
    },
    /// Visit counts restricted to the allowed nodes.
    Avoidance {
        labels: Vec<String>,
        counts: Matrix64,
        reachable: Vec<bool>,
        absorption: Vec<f64>,
    },
    Ranking(Vec<(String, f64)>),
}

/// Monte Carlo estimates aligned with the scalar value or the ranking entries.
#[derive(Clone, Debug)]
pub struct Verification {
    pub walks: usize,
    pub attempted: usize,
    pub seed: u64,
    pub estimates: Vec<Estimate>,
}

#[derive(Clone, Copy, Debug)]
pub struct Estimate {
    pub closed_form: f64,
    pub estimate: f64,
    pub stderr: f64,
}

impl Estimate {
    /// `None` when the estimate has no spread but misses the closed form.
    pub fn z_score(&self) -> Option<f64> {
        let diff = self.closed_form - self.estimate;
        if self.stderr > 0.0 {
            Some(diff / self.stderr)
        } else if diff.abs() <= 1e-9 {
            Some(0.0)
        } else {
            None
        }
    }
}

/// Independent Monte Carlo runs summed into one estimate.
#[derive(Default)]
struct McSum {
    estimate: f64,
    variance: f64,
    walks: usize,
    attempted: usize,
}

impl McSum {
    fn add(&mut self, mean: f64, stderr: f64, stats: &WalkStats) {
        self.estimate += mean;
        self.variance += stderr * stderr;
        self.walks += stats.walks;
        self.attempted += stats.attempted;
    }
}

pub enum Failure {
    Usage(String),
    Domain(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

/// One graph plus its lazily built pseudoinverse and trust networks.
pub struct Session {
    graph: Digraph64,
    options: Options,
    pinv: OnceCell<LaplacianPinv64>,
    trust: RefCell<Vec<Rc<TrustNetwork64>>>,
}

impl Session {
    pub fn new(graph: Digraph64, options: Options) -> Self {
        Session {
            graph,
            options,
            pinv: OnceCell::new(),
            trust: RefCell::new(Vec::new()),
        }
    }

    pub fn graph(&self) -> &Digraph64 {
        &self.graph
    }

    pub fn options(&self) -> &Options {
        &self.options
    }

    /// Builds the pseudoinverse on first call.
    pub fn pinv(&self) -> Result<&LaplacianPinv64, Error> {
        if let Some(p) = self.pinv.get() {
            return Ok(p);
        }
        let built = rw_laplacian_pinv(&transition_matrix(&self.graph)?)?;
        Ok(self.pinv.get_or_init(|| built))
    }

    fn trust_network(&self, rate: f64) -> Result<Rc<TrustNetwork64>, Error> {
        if let Some(net) = self.trust.borrow().iter().find(|t| t.evaporation_rate() == rate) {
            return Ok(Rc::clone(net));
        }
        let net = Rc::new(augment_evaporation(&self.graph, rate)?);
        self.trust.borrow_mut().push(Rc::clone(&net));
        Ok(net)
    }

    /// Label for an index of the base graph; one past the end is the
    /// evaporation node of a trust network.
    pub fn label(&self, i: usize) -> String {
        if i < self.graph.n() {
            self.graph.label(i).to_string()
        } else if i == self.graph.n() {
            EVAPORATION_LABEL.to_string()
        } else {
            i.to_string()
        }
    }

    fn node(&self, label: &str) -> Result<usize, Error> {
        self.graph.index_of(label)
    }

    fn nodes(&self, labels: &[String]) -> Result<Vec<usize>, Error> {
        let mut out: Vec<usize> = labels.iter().map(|l| self.node(l)).collect::<Result<_, _>>()?;
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    fn round(&self, x: f64) -> f64 {
        match self.options.precision {
            Precision::Full => x,
            Precision::Digits(d) if x.is_finite() && x != 0.0 => {
                format!("{:.*e}", d - 1, x).parse().unwrap_or(x)
            }
            Precision::Digits(_) => x,
        }
    }

    pub fn execute(&self, cmd: &Command) -> Result<Report, Failure> {
        if self.options.verify.is_some() && !cmd.verifiable() {
            return Err(Failure::Usage(format!(
                "--verify applies to measure subcommands, not `{}`",
                cmd.name()
            )));
        }
        let mut query = Map::new();
        query.insert("command".into(), json!(cmd.name()));
        let mut flags = Map::new();
        flags.insert("precision".into(), self.options.precision.to_json());
        let mut verification = None;

        let value = match cmd {
            Command::Pinv { normalized } => {
                let pinv = self.pinv()?;
                let mut matrices = vec![("pinv".to_string(), pinv.matrix().clone())];
                if *normalized {
                    matrices.push(("normalized_pinv".to_string(), pinv.normalized_pinv()));
                }
                flags.insert("normalized".into(), json!(normalized));
                Payload::Matrices {
                    labels: self.graph.labels().to_vec(),
                    matrices,
                }
            }
            Command::Tensor { target, full, avoid } => {
                let t = FundamentalTensor::new(self.pinv()?);
                flags.insert("full".into(), json!(full));
                if *full {
                    let matrices = (0..t.n()).map(|k| (self.label(k), t.slice(k))).collect();
                    Payload::Matrices {
                        labels: self.graph.labels().to_vec(),
                        matrices,
                    }
                } else {
                    let label = target.as_deref().expect("clap requires --target without --full");
                    let k = self.node(label)?;
                    query.insert("target".into(), json!(label));
                    if avoid.is_empty() {
                        Payload::Matrices {
                            labels: self.graph.labels().to_vec(),
                            matrices: vec![(self.label(k), t.slice(k))],
                        }
                    } else {
                        let gamma = self.nodes(avoid)?;
                        flags.insert("avoid".into(), json!(avoid));
                        let part = Partition::avoiding(t.n(), k, &gamma)?;
                        let counts = t.visits_avoiding(&part)?;
                        Payload::Avoidance {
                            labels: part.beta().iter().map(|&i| self.label(i)).collect(),
                            counts: counts.counts,
                            reachable: counts.reachable,
                            absorption: counts.absorbed,
                        }
                    }
                }
            }
            Command::Hitting { from, to, avoid } => {
                let (i, k) = (self.node(from)?, self.node(to)?);
                query.insert("from".into(), json!(from));
                query.insert("to".into(), json!(to));
                flags.insert("avoid".into(), json!(avoid));
                let t = FundamentalTensor::new(self.pinv()?);
                let gamma = self.nodes(avoid)?;
                let h = if gamma.is_empty() {
                    hitting_time(&t, i, k)
                } else {
                    conditional_hitting_time(&t, i, &Partition::avoiding(t.n(), k, &gamma)?)?
                };
                if let Some(walks) = self.options.verify {
                    let mut sum = McSum::default();
                    let s = simulate_walks(t.pinv().transition(), i, k, &gamma, walks, self.options.seed)?;
                    sum.add(s.hit_time_mean, s.hit_time_stderr, &s);
                    verification = Some(self.verification(sum, h));
                }
                Payload::Number(h)
            }
            Command::Commute { a, b } => {
                let (i, k) = (self.node(a)?, self.node(b)?);
                query.insert("a".into(), json!(a));
                query.insert("b".into(), json!(b));
                let t = FundamentalTensor::new(self.pinv()?);
                let c = commute_time(&t, i, k);
                if let Some(walks) = self.options.verify {
                    let p = t.pinv().transition();
                    let mut sum = McSum::default();
                    if i != k {
                        for (idx, (x, y)) in [(i, k), (k, i)].into_iter().enumerate() {
                            let s = simulate_walks(p, x, y, &[], walks, self.sub_seed(idx))?;
                            sum.add(s.hit_time_mean, s.hit_time_stderr, &s);
                        }
                    }
                    verification = Some(self.verification(sum, c));
                }
                Payload::Number(c)
            }
            Command::Centrality {
                node,
                kind,
                exclude_diagonal,
            } => {
                let k = self.node(node)?;
                query.insert("node".into(), json!(node));
                flags.insert(
                    "kind".into(),
                    json!(kind.to_possible_value().expect("no skipped variants").get_name()),
                );
                flags.insert("exclude_diagonal".into(), json!(exclude_diagonal));
                let t = FundamentalTensor::new(self.pinv()?);
                let v = match kind {
                    CentralityKind::Commute => commute_centrality(&t, k),
                    CentralityKind::Closeness => closeness(&t, k),
                    CentralityKind::Betweenness => betweenness(&t, k, *exclude_diagonal),
                };
                if let Some(walks) = self.options.verify {
                    let sum = self.centrality_mc(&t, k, *kind, *exclude_diagonal, walks)?;
                    verification = Some(self.verification(sum, v));
                }
                Payload::Number(v)
            }
            Command::Passage { from, via, to, avoid } => {
                let (i, j, k) = (self.node(from)?, self.node(via)?, self.node(to)?);
                query.insert("from".into(), json!(from));
                query.insert("via".into(), json!(via));
                query.insert("to".into(), json!(to));
                flags.insert("avoid".into(), json!(avoid));
                let t = FundamentalTensor::new(self.pinv()?);
                let gamma = self.nodes(avoid)?;
                let pr = if gamma.is_empty() || i == k || j == k {
                    passage_probability(&t, i, j, k)?
                } else {
                    passage_probability_avoiding(&t, i, j, &Partition::avoiding(t.n(), k, &gamma)?)?
                };
                if let Some(walks) = self.options.verify {
                    let mut sum = McSum::default();
                    if i != k {
                        let s = simulate_walks(t.pinv().transition(), i, k, &gamma, walks, self.options.seed)?;
                        sum.add(s.passage_freq[j], s.passage_stderr[j], &s);
                    }
                    verification = Some(self.verification(sum, pr));
                }
                Payload::Number(pr)
            }
            Command::Trust {
                viewpoint,
                avoid,
                evaporation,
            } => {
                let i = self.node(viewpoint)?;
                query.insert("viewpoint".into(), json!(viewpoint));
                flags.insert("avoid".into(), json!(avoid));
                flags.insert("evaporation".into(), json!(evaporation));
                let gamma = self.nodes(avoid)?;
                let net = self.trust_network(*evaporation)?;
                let ranking = net.ranking(i, &gamma)?;
                if let Some(walks) = self.options.verify {
                    let s = simulate_walks(net.augmented(), i, net.evaporation_node(), &gamma, walks, self.options.seed)?;
                    // Walks touching an avoided node are killed, not rejected.
                    let (freq, se) = if gamma.is_empty() {
                        (&s.passage_freq, &s.passage_stderr)
                    } else {
                        (&s.first_exit_passage_freq, &s.first_exit_passage_stderr)
                    };
                    verification = Some(Verification {
                        walks: s.walks,
                        attempted: s.attempted,
                        seed: self.options.seed,
                        estimates: ranking
                            .iter()
                            .map(|&(j, score)| Estimate {
                                closed_form: score,
                                estimate: freq[j],
                                stderr: se[j],
                            })
                            .collect(),
                    });
                }
                Payload::Ranking(ranking.into_iter().map(|(j, s)| (self.label(j), s)).collect())
            }
        };
        Ok(Report {
            query,
            value,
            flags,
            verification,
        })
    }

    fn sub_seed(&self, idx: usize) -> u64 {
        self.options.seed.wrapping_add(idx as u64)
    }

    fn verification(&self, sum: McSum, closed_form: f64) -> Verification {
        Verification {
            walks: sum.walks,
            attempted: sum.attempted,
            seed: self.options.seed,
            estimates: vec![Estimate {
                closed_form,
                estimate: sum.estimate,
                stderr: sum.variance.sqrt(),
            }],
        }
    }

    fn centrality_mc(
        &self,
        t: &FundamentalTensor<'_, f64>,
        k: usize,
        kind: CentralityKind,
        exclude_diagonal: bool,
        walks: usize,
    ) -> Result<McSum, Error> {
        let p: &TransitionMatrix64 = t.pinv().transition();
        let n = t.n();
        let mut sum = McSum::default();
        let mut idx = 0;
        let mut run = |from: usize, to: usize| {
            idx += 1;
            simulate_walks(p, from, to, &[], walks, self.sub_seed(idx - 1))
        };
        match kind {
            CentralityKind::Closeness | CentralityKind::Commute => {
                let scale = match kind {
                    CentralityKind::Commute => 1.0 / n as f64,
                    _ => 1.0,
                };
                for i in (0..n).filter(|&i| i != k) {
                    let mut pairs = vec![(i, k)];
                    if kind == CentralityKind::Commute {
                        pairs.push((k, i));
                    }
                    for (x, y) in pairs {
                        let s = run(x, y)?;
                        sum.add(s.hit_time_mean * scale, s.hit_time_stderr * scale, &s);
                    }
                }
            }
            CentralityKind::Betweenness => {
                // Terms with source equal to target are zero either way.
                let _ = exclude_diagonal;
                for target in (0..n).filter(|&x| x != k) {
                    for i in (0..n).filter(|&i| i != k && i != target) {
                        let s = run(i, target)?;
                        sum.add(s.passage_freq[k], s.passage_stderr[k], &s);
                    }
                }
            }
        }
        Ok(sum)
    }

    pub fn render(&self, report: &Report) -> String {
        match self.options.format {
            OutputFormat::Json => {
                let mut s = serde_json::to_string_pretty(&self.to_json(report)).expect("JSON values serialize");
                s.push('\n');
                s
            }
            OutputFormat::Csv => self.to_csv(report),
        }
    }

    fn number(&self, x: f64) -> Value {
        let x = self.round(x);
        if x.is_finite() && x.fract() == 0.0 && x.abs() < 1e15 {
            json!(x as i64)
        } else {
            serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
        }
    }

    fn rows(&self, m: &Matrix64) -> Value {
        Value::Array(
            (0..m.rows())
                .map(|i| Value::Array(m.row(i).iter().map(|&x| self.number(x)).collect()))
                .collect(),
        )
    }

    pub fn to_json(&self, report: &Report) -> Value {
        let value = match &report.value {
            Payload::Number(x) => self.number(*x),
            Payload::Matrices { labels, matrices } => {
                let named: Map<String, Value> = matrices.iter().map(|(name, m)| (name.clone(), self.rows(m))).collect();
                json!({ "labels": labels, "matrices": named })
            }
            Payload::Avoidance {
                labels,
                counts,
                reachable,
                absorption,
            } => json!({
                "labels": labels,
                "counts": self.rows(counts),
                "reachable": labels.iter().zip(reachable).map(|(l, &r)| (l.clone(), json!(r))).collect::<Map<_, _>>(),
                "absorption": labels.iter().zip(absorption).map(|(l, &a)| (l.clone(), self.number(a))).collect::<Map<_, _>>(),
            }),
            Payload::Ranking(entries) => Value::Array(
                entries
                    .iter()
                    .map(|(l, s)| json!({ "subject": l, "score": self.number(*s) }))
                    .collect(),
            ),
        };
        let mut out = json!({ "query": report.query, "value": value, "flags": report.flags });
        if let Some(v) = &report.verification {
            let estimates: Vec<Value> = v
                .estimates
                .iter()
                .map(|e| {
                    json!({
                        "closed_form": self.number(e.closed_form),
                        "estimate": self.number(e.estimate),
                        "stderr": self.number(e.stderr),
                        "z": e.z_score().map_or(Value::Null, |z| self.number(z)),
                    })
                })
                .collect();
            let mut body = json!({ "method": "mc", "seed": v.seed, "walks": v.walks, "attempted": v.attempted });
            match &report.value {
                Payload::Ranking(_) => body["estimates"] = Value::Array(estimates),
                _ => {
                    for (key, val) in estimates[0].as_object().expect("object literal") {
                        body[key] = val.clone();
                    }
                }
            }
            out["verification"] = body;
        }
        out
    }

    fn cell(&self, x: f64) -> String {
        self.number(x).to_string()
    }

    pub fn to_csv(&self, report: &Report) -> String {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
        let mut write = |rec: Vec<String>| w.write_record(&rec).expect("writing to memory");
        let query: Vec<String> = report.query.keys().cloned().collect();
        let query_vals: Vec<String> = report
            .query
            .values()
            .map(|v| v.as_str().map_or_else(|| v.to_string(), str::to_string))
            .collect();
        let verify_header = ["estimate", "stderr", "z"].map(String::from);
        let verify_cells = |e: &Estimate| {
            vec![
                self.cell(e.estimate),
                self.cell(e.stderr),
                e.z_score().map_or_else(String::new, |z| self.cell(z)),
            ]
        };
        match &report.value {
            Payload::Number(x) => {
                let mut header = query.clone();
                header.push("value".into());
                let mut row = query_vals.clone();
                row.push(self.cell(*x));
                if let Some(v) = &report.verification {
                    header.extend(verify_header.iter().cloned());
                    row.extend(verify_cells(&v.estimates[0]));
                }
                write(header);
                write(row);
            }
            Payload::Matrices { labels, matrices } => {
                let mut header = vec!["matrix".to_string(), "node".to_string()];
                header.extend(labels.iter().cloned());
                write(header);
                for (name, m) in matrices {
                    for (i, l) in labels.iter().enumerate() {
                        let mut row = vec![name.clone(), l.clone()];
                        row.extend(m.row(i).iter().map(|&x| self.cell(x)));
                        write(row);
                    }
                }
            }
            Payload::Avoidance {
                labels,
                counts,
                reachable,
                absorption,
            } => {
                let mut header = vec!["node".to_string()];
                header.extend(labels.iter().cloned());
                header.push("reachable".into());
                header.push("absorption".into());
                write(header);
                for (i, l) in labels.iter().enumerate() {
                    let mut row = vec![l.clone()];
                    row.extend(counts.row(i).iter().map(|&x| self.cell(x)));
                    row.push(reachable[i].to_string());
                    row.push(self.cell(absorption[i]));
                    write(row);
                }
            }
            Payload::Ranking(entries) => {
                let mut header = vec!["rank".to_string(), "subject".to_string(), "score".to_string()];
                if report.verification.is_some() {
                    header.extend(verify_header.iter().cloned());
                }
                write(header);
                for (r, (l, s)) in entries.iter().enumerate() {
                    let mut row = vec![(r + 1).to_string(), l.clone(), self.cell(*s)];
                    if let Some(v) = &report.verification {
                        row.extend(verify_cells(&v.estimates[r]));
                    }
                    write(row);
                }
            }
        }
        String::from_utf8(w.into_inner().expect("flushing to memory")).expect("CSV of UTF-8 fields")
    }

    pub fn error_json(&self, e: &Error) -> Value {
        let nodes: Vec<String> = match e {
            Error::UnknownNode(label) => vec![label.clone()],
            _ => e.nodes().into_iter().map(|i| self.label(i)).collect(),
        };
        json!({ "error": { "code": e.code(), "message": e.to_string(), "nodes": nodes } })
    }
}

fn read_input(path: &str, stdin: &mut dyn Read) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    let res = if path == "-" {
        stdin.read_to_end(&mut buf)
    } else {
        File::open(path).and_then(|mut f| f.read_to_end(&mut buf))
    };
    res.map_err(|e| Failure::Io(format!("{path}: {e}")))?;
    Ok(buf)
}

fn write_error(err: &mut dyn Write, code: &str, message: &str, nodes: Vec<String>) {
    let v = json!({ "error": { "code": code, "message": message, "nodes": nodes } });
    let _ = writeln!(err, "{}", serde_json::to_string(&v).expect("JSON values serialize"));
}

/// Parses `args` (program name first), runs one subcommand and returns the
/// exit status: 0 on success, 1 on domain errors, 2 on usage errors.
pub fn run<I, S>(args: I, stdin: &mut dyn Read, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return e.exit_code();
        }
    };
    let options = Options {
        format: cli.format,
        precision: cli.precision,
        verify: cli.verify,
        seed: cli.seed,
    };

    let bytes = match read_input(&cli.input, stdin) {
        Ok(b) => b,
        Err(Failure::Io(msg)) => {
            write_error(err, "io", &msg, Vec::new());
            return 1;
        }
        Err(_) => unreachable!("reading input only fails with I/O errors"),
    };
    let graph = match load_graph::<f64, _>(bytes.as_slice(), cli.graph_format.into()) {
        Ok(g) => g,
        Err(e) => {
            let nodes = match &e {
                Error::UnknownNode(l) => vec![l.clone()],
                Error::ZeroOutDegree { label, .. } => vec![label.clone()],
                _ => Vec::new(),
            };
            write_error(err, e.code(), &e.to_string(), nodes);
            return 1;
        }
    };

    let session = Session::new(graph, options);
    if let Command::Tensor { full: true, .. } = cli.command {
        if let Ok(pinv) = session.pinv() {
            let bytes = FundamentalTensor::new(pinv).materialized_bytes();
            let _ = writeln!(
                err,
                "materializing {n} slices of {n}x{n}: about {bytes} bytes",
                n = pinv.n()
            );
        }
    }
    match session.execute(&cli.command) {
        Ok(report) => {
            let _ = out.write_all(session.render(&report).as_bytes());
            0
        }
        Err(Failure::Domain(e)) => {
            let v = session.error_json(&e);
            let _ = writeln!(err, "{}", serde_json::to_string(&v).expect("JSON values serialize"));
            1
        }
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
        Err(Failure::Io(msg)) => {
            write_error(err, "io", &msg, Vec::new());
            1
        }
    }
}
