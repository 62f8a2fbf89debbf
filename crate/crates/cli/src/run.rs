use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use widewalk::amplify::{self, CheckReport, DpMethod, MomentReport, Verdict};
use widewalk::code::{self, AmplifiedCode, LinearCode};
use widewalk::config::{self, LoadedConfig, SystemConfig};
use widewalk::graphs::{self, CayleyGraph, SpectralReport, BOUND_SLACK};
use widewalk::hitting::{self, HittingInstance};
use widewalk::report::{csv_header, Envelope};
use widewalk::walks::{self, stream_rng, DistributionCheck, ReplacementSystem};
use widewalk::Error;

use crate::{Cli, CodeCmd, Command, Format, GraphCmd, Method, VerifyCmd, WalkCmd};

const PASS: u8 = 0;
const VIOLATION: u8 = 1;
const INVALID: u8 = 2;
const BUDGET: u8 = 3;
const UNMET: u8 = 4;

pub fn exit_code_for(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::BudgetExceeded { .. }) | Some(Error::SearchExhausted { .. }) => BUDGET,
        _ => INVALID,
    }
}

/// What a command produced: a serializable result, its CSV rendering and
/// the exit code.
struct Output {
    result: Value,
    csv: String,
    code: u8,
}

impl Output {
    fn new<T: Serialize>(result: &T, csv: String, code: u8) -> Result<Self> {
        Ok(Self {
            result: serde_json::to_value(result)?,
            csv,
            code,
        })
    }
}

struct Ctx<'a> {
    cli: &'a Cli,
    loaded: Option<LoadedConfig>,
}

impl Ctx<'_> {
    fn loaded(&self) -> Result<&LoadedConfig> {
        self.loaded.as_ref().context("this command needs --config")
    }

    fn system(&self) -> Result<ReplacementSystem> {
        let l = self.loaded()?;
        Ok(l.config.build(&l.base_dir)?)
    }

    fn system_and_f(&self) -> Result<(ReplacementSystem, amplify::SignedFn)> {
        let l = self.loaded()?;
        let sys = l.config.build(&l.base_dir)?;
        let f = l.config.assignment(&l.base_dir, sys.outer_size())?;
        Ok((sys, f))
    }

    fn base_dir(&self) -> &Path {
        self.loaded.as_ref().map_or(Path::new("."), |l| l.base_dir.as_path())
    }

    /// `path` if given, else the outer graph of the config.
    fn graph(&self, path: Option<&Path>) -> Result<CayleyGraph> {
        match path {
            Some(p) => Ok(config::load_graph(p).with_context(|| format!("reading {}", p.display()))?),
            None => Ok(self.system()?.outer().clone()),
        }
    }
}

pub fn run(cli: &Cli) -> Result<u8> {
    let loaded = match &cli.config {
        Some(p) => Some(SystemConfig::load(p).with_context(|| format!("reading {}", p.display()))?),
        None => None,
    };
    let echo = json!({
        "args": cli,
        "system": loaded.as_ref().map(|l| &l.config),
    });
    let ctx = Ctx { cli, loaded };
    let name = command_name(&cli.command);

    if let Command::Code(CodeCmd::Encode { raw: true, .. }) = &cli.command {
        return encode_raw(&ctx);
    }
    let out = match &cli.command {
        Command::Graph(g) => graph(&ctx, g)?,
        Command::Walk(w) => walk(&ctx, w)?,
        Command::Verify(v) => verify(&ctx, v)?,
        Command::Code(c) => code_cmd(&ctx, c)?,
    };
    let text = match cli.format {
        Format::Json => Envelope::new(&name, cli.seed, &echo, &out.result).to_json(),
        Format::Csv => csv_header(&name, cli.seed, &echo) + &out.csv,
    };
    write_text(cli.out.as_deref(), &text)?;
    Ok(out.code)
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn command_name(c: &Command) -> String {
    let (group, sub) = match c {
        Command::Graph(g) => (
            "graph",
            match g {
                GraphCmd::Aghp { .. } => "aghp",
                GraphCmd::Complete { .. } => "complete",
                GraphCmd::Spectrum { .. } => "spectrum",
            },
        ),
        Command::Walk(WalkCmd::Sample { .. }) => ("walk", "sample"),
        Command::Verify(v) => (
            "verify",
            match v {
                VerifyCmd::Pseudorandomness { .. } => "pseudorandomness",
                VerifyCmd::Uniformity { .. } => "uniformity",
                VerifyCmd::BaseCase => "base-case",
                VerifyCmd::Induction { .. } => "induction",
                VerifyCmd::BiasLemma { .. } => "bias-lemma",
                VerifyCmd::FirstStep { .. } => "first-step",
                VerifyCmd::MiddleStart { .. } => "middle-start",
                VerifyCmd::RandomWalk { .. } => "random-walk",
                VerifyCmd::Arithmetic { .. } => "arithmetic",
                VerifyCmd::Hitting { .. } => "hitting",
            },
        ),
        Command::Code(c) => (
            "code",
            match c {
                CodeCmd::GenBase { .. } => "gen-base",
                CodeCmd::Encode { .. } => "encode",
                CodeCmd::Report { .. } => "report",
            },
        ),
    };
    format!("{group} {sub}")
}

fn graph_output(g: &CayleyGraph) -> Result<Output> {
    let mut csv = String::from("index,generator\n");
    for (i, h) in g.to_file().generators.iter().enumerate() {
        csv.push_str(&format!("{i},{h}\n"));
    }
    Output::new(&g.to_file(), csv, PASS)
}

#[derive(Serialize)]
struct SpectrumOut {
    name: String,
    dim: u32,
    degree: usize,
    lambda: f64,
    method: graphs::SpectralMethod,
    argmax_character: Option<String>,
}

fn graph(ctx: &Ctx, cmd: &GraphCmd) -> Result<Output> {
    match cmd {
        GraphCmd::Aghp { r, ell } => graph_output(&graphs::build_aghp(*r, *ell)?),
        GraphCmd::Complete { m, no_selfloop, dim } => {
            let g = match dim {
                Some(_) if *no_selfloop => bail!(Error::InvalidParameter("--dim tiles always include the zero generator".into())),
                Some(d) => graphs::build_complete_tiled(*m, *d)?,
                None => graphs::build_complete(*m, !no_selfloop)?,
            };
            graph_output(&g)
        }
        GraphCmd::Spectrum { path, dense, samples } => {
            let g = ctx.graph(Some(path))?;
            let rep: SpectralReport = match (dense, samples) {
                (true, Some(_)) => bail!(Error::InvalidParameter("--dense and --samples are exclusive".into())),
                (true, None) => graphs::spectrum_dense(&g)?,
                (false, Some(n)) => graphs::spectrum_sampled(&g, *n, &mut stream_rng(ctx.cli.seed, 0))?,
                (false, None) => graphs::spectrum(&g)?,
            };
            let out = SpectrumOut {
                name: g.name().into(),
                dim: g.dim(),
                degree: g.degree(),
                lambda: rep.lambda,
                method: rep.method,
                argmax_character: rep.argmax_character.map(|w| w.to_hex()),
            };
            let csv = format!(
                "name,dim,degree,lambda,argmax_character\n{},{},{},{:e},{}\n",
                out.name,
                out.dim,
                out.degree,
                out.lambda,
                out.argmax_character.as_deref().unwrap_or("")
            );
            Output::new(&out, csv, PASS)
        }
    }
}

#[derive(Serialize)]
struct WalkOut {
    seed: walks::WalkSeed,
    a: Vec<String>,
    b: Vec<String>,
}

fn walk(ctx: &Ctx, cmd: &WalkCmd) -> Result<Output> {
    let WalkCmd::Sample { count, t, pivot } = cmd;
    let sys = ctx.system()?;
    let t = t.unwrap_or(sys.params().t);
    // One stream per walk, so walk i does not depend on how many were drawn.
    let sampled = (0..*count)
        .map(|i| {
            let mut rng = stream_rng(ctx.cli.seed, i as u64);
            if *pivot == 0 {
                walks::sample_swalk(&sys, t, &mut rng, None)
            } else {
                walks::middle_start_sample(&sys, t, *pivot, &mut rng)
            }
        })
        .collect::<widewalk::Result<Vec<_>>>()?;
    let hex = |v: u64, dim: u32| format!("{v:0width$x}", width = (dim as usize).div_ceil(4).max(1));
    let json: Vec<WalkOut> = sampled
        .iter()
        .map(|w| WalkOut {
            seed: w.seed.clone(),
            a: w.a_vertices.iter().map(|&a| hex(a, sys.outer().dim())).collect(),
            b: w.b_vertices.iter().map(|&b| hex(b, sys.inner().dim())).collect(),
        })
        .collect();
    Output::new(&json, walks::walks_to_csv(&sys, &sampled), PASS)
}

fn moment_output(rep: &MomentReport) -> Result<Output> {
    let code = match rep.verdict() {
        Verdict::Pass => PASS,
        Verdict::Fail => VIOLATION,
        Verdict::HypothesesUnmet => UNMET,
    };
    Output::new(rep, rep.to_csv(), code)
}

fn check_output(rep: &CheckReport) -> Result<Output> {
    Output::new(rep, rep.to_csv(), if rep.passed() { PASS } else { VIOLATION })
}

fn distribution_output(checks: &[DistributionCheck], column: &str) -> Result<Output> {
    let mut csv = format!("{column},distance,equal\n");
    for c in checks {
        csv.push_str(&format!("{},{:e},{}\n", c.steps, c.distance, c.equal));
    }
    let code = if checks.iter().all(|c| c.equal) { PASS } else { VIOLATION };
    Output::new(&checks, csv, code)
}

fn verify(ctx: &Ctx, cmd: &VerifyCmd) -> Result<Output> {
    let budget = ctx.cli.budget;
    match cmd {
        VerifyCmd::Pseudorandomness { steps } => {
            let sys = ctx.system()?;
            let range = match steps {
                Some(k) => *k..=*k,
                None => 0..=sys.params().s as usize,
            };
            let checks = range
                .map(|k| walks::check_pseudorandomness(&sys, k, budget))
                .collect::<widewalk::Result<Vec<_>>>()?;
            distribution_output(&checks, "steps")
        }
        VerifyCmd::Uniformity { k } => {
            let sys = ctx.system()?;
            let range = match k {
                Some(k) => *k..=*k,
                None => 1..=sys.params().s as usize,
            };
            let checks = range
                .map(|k| walks::check_first_coord_uniform(&sys, k, budget))
                .collect::<widewalk::Result<Vec<_>>>()?;
            distribution_output(&checks, "k")
        }
        VerifyCmd::BaseCase => {
            let (sys, f) = ctx.system_and_f()?;
            moment_output(&amplify::check_base_case(&sys, &f, budget)?)
        }
        VerifyCmd::Induction { kmax } => {
            let (sys, f) = ctx.system_and_f()?;
            let kmax = kmax.unwrap_or(3 * sys.params().s as usize);
            moment_output(&amplify::check_induction_step(&sys, &f, kmax, budget)?)
        }
        VerifyCmd::BiasLemma { t } => {
            let (sys, f) = ctx.system_and_f()?;
            let t = t.unwrap_or(sys.params().t);
            moment_output(&amplify::check_bias_reduction_lemma(&sys, &f, t, budget)?)
        }
        VerifyCmd::FirstStep { kmax } => {
            let (sys, f) = ctx.system_and_f()?;
            let kmax = kmax.unwrap_or(2 * sys.params().s as usize);
            check_output(&amplify::check_first_step_trick(&sys, &f, kmax, budget)?)
        }
        VerifyCmd::MiddleStart { kmax } => {
            let (sys, f) = ctx.system_and_f()?;
            let kmax = kmax.unwrap_or(2 * sys.params().s as usize);
            check_output(&amplify::check_middle_start_identity(&sys, &f, kmax, budget)?)
        }
        VerifyCmd::RandomWalk { graph, f, kmax } => {
            let g = ctx.graph(graph.as_deref())?;
            let f = config::parse_assignment(f, ctx.base_dir(), g.vertex_count())?;
            moment_output(&amplify::check_random_walk_claim(&g, &f, *kmax)?)
        }
        VerifyCmd::Arithmetic { lambdas, s_values, kmax } => {
            let rep = amplify::verify_induction_arithmetic(lambdas, s_values, *kmax);
            let code = if rep.passed() { PASS } else { VIOLATION };
            Output::new(&rep, rep.to_csv(), code)
        }
        VerifyCmd::Hitting { graph, set, tmax } => {
            let g = ctx.graph(graph.as_deref())?;
            let vertices = hitting::parse_vertex_set(set, g.dim())?;
            let inst = HittingInstance::new(g, &vertices)?;
            let rep = hitting::check_hitting(&inst, *tmax, budget)?;
            Output::new(&rep, rep.to_csv(), if rep.passed() { PASS } else { VIOLATION })
        }
    }
}

fn load_base(path: &Path) -> Result<LinearCode> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(LinearCode::from_json(&text)?)
}

fn amplified(ctx: &Ctx, base: &Path, t: Option<usize>) -> Result<AmplifiedCode> {
    let sys = ctx.system()?;
    let t = t.unwrap_or(sys.params().t);
    Ok(AmplifiedCode::new(load_base(base)?, sys, t)?)
}

fn parse_message(hex: &str, k: usize) -> Result<u64> {
    let msg = u64::from_str_radix(hex, 16).map_err(|_| Error::Parse(format!("bad message {hex:?}")))?;
    if k < 64 && msg >> k != 0 {
        bail!(Error::InvalidParameter(format!("message {hex} has more than k = {k} bits")));
    }
    Ok(msg)
}

#[derive(Serialize)]
struct EncodeOut {
    message: String,
    length: u128,
    /// Bit j is walk seed j in enumeration order (a, b, steps).
    codeword: String,
}

#[derive(Serialize)]
struct CodeReport {
    k: usize,
    n0: usize,
    t: usize,
    base_bias: f64,
    /// Max over nonzero messages of the bias of the embedded assignment.
    embedded_bias: f64,
    lambda_outer: f64,
    lambda_inner: f64,
    bias: f64,
    argmax_message: String,
    bound: f64,
    bound_vacuous: bool,
    distance_lower_bound: f64,
    /// Decimal string; lengths overflow JSON integers.
    length: String,
    rate: String,
    hypotheses: amplify::Hypotheses,
    verdict: Verdict,
}

fn code_cmd(ctx: &Ctx, cmd: &CodeCmd) -> Result<Output> {
    match cmd {
        CodeCmd::GenBase { k, n0, target, max_tries } => {
            let mut rng = stream_rng(ctx.cli.seed, 0);
            let file = code::gen_base_code(*k, *n0, *target, &mut rng, *max_tries)?.to_file();
            let mut csv = format!("# k: {}\n# n0: {}\n# bias: {}\nrow,hex\n", file.k, file.n0, file.bias);
            for (i, r) in file.rows.iter().enumerate() {
                csv.push_str(&format!("{i},{r}\n"));
            }
            Output::new(&file, csv, PASS)
        }
        CodeCmd::Encode { base, message, t, .. } => {
            let amp = amplified(ctx, base, *t)?;
            let msg = parse_message(message, amp.base().k())?;
            let word = amp.encode(msg, ctx.cli.budget)?;
            let out = EncodeOut {
                message: format!("{msg:x}"),
                length: amp.length(),
                codeword: word.to_hex(),
            };
            let csv = format!("message,length,codeword\n{},{},{}\n", out.message, out.length, out.codeword);
            Output::new(&out, csv, PASS)
        }
        CodeCmd::Report { base, t, method } => {
            let amp = amplified(ctx, base, *t)?;
            let sys = amp.system();
            let method = match method {
                Method::Direct => DpMethod::Direct,
                Method::Spectral => DpMethod::Spectral,
            };
            let cb = amp.code_bias(method, ctx.cli.budget)?;
            let mut worst = amp.message_fn(1)?;
            for msg in 2u64..(1 << amp.base().k()) {
                let f = amp.message_fn(msg)?;
                if f.bias() > worst.bias() {
                    worst = f;
                }
            }
            let hyp = amplify::hypotheses(sys, &worst);
            let s = sys.params().s as f64;
            let exponent = amp.steps() as f64 * (1.0 - 4.0 / s);
            let bound = (2.0 * sys.lambda_inner()).powf(exponent);
            let verdict = if !hyp.hold() {
                Verdict::HypothesesUnmet
            } else if cb.bias <= bound + BOUND_SLACK {
                Verdict::Pass
            } else {
                Verdict::Fail
            };
            let rate = amp.rate();
            let rep = CodeReport {
                k: amp.base().k(),
                n0: amp.base().n0(),
                t: amp.steps(),
                base_bias: amp.base().bias(),
                embedded_bias: worst.bias(),
                lambda_outer: sys.lambda_outer(),
                lambda_inner: sys.lambda_inner(),
                bias: cb.bias,
                argmax_message: format!("{:x}", cb.argmax),
                bound,
                bound_vacuous: bound >= 1.0 || exponent <= 0.0,
                distance_lower_bound: (1.0 - cb.bias) / 2.0,
                length: amp.exact_length().to_string(),
                rate: format!("{}/{}", rate.numer(), rate.denom()),
                hypotheses: hyp,
                verdict,
            };
            let csv = format!(
                "k,n0,t,base_bias,bias,bound,distance_lower_bound,length,rate,verdict\n{},{},{},{:e},{:e},{:e},{:e},{},{},{}\n",
                rep.k,
                rep.n0,
                rep.t,
                rep.base_bias,
                rep.bias,
                rep.bound,
                rep.distance_lower_bound,
                rep.length,
                rep.rate,
                serde_json::to_value(verdict)?.as_str().unwrap_or_default()
            );
            let code = match verdict {
                Verdict::Pass => PASS,
                Verdict::Fail => VIOLATION,
                Verdict::HypothesesUnmet => UNMET,
            };
            Output::new(&rep, csv, code)
        }
    }
}

/// Packed codeword bytes, streamed to --out or stdout.
fn encode_raw(ctx: &Ctx) -> Result<u8> {
    let Command::Code(CodeCmd::Encode { base, message, t, .. }) = &ctx.cli.command else {
        unreachable!("dispatched on encode --raw")
    };
    let amp = amplified(ctx, base, *t)?;
    let msg = parse_message(message, amp.base().k())?;
    let length = amp.length();
    if length > ctx.cli.budget {
        bail!(Error::BudgetExceeded {
            needed: length,
            budget: ctx.cli.budget
        });
    }
    let sink: Box<dyn Write> = match &ctx.cli.out {
        Some(p) => Box::new(File::create(p).with_context(|| format!("writing {}", p.display()))?),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = BufWriter::new(sink);
    amp.encode_to(msg, &mut w)?;
    w.flush()?;
    Ok(PASS)
}
