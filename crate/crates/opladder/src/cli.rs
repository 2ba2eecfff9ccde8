//! Command-line front end: load weight configs, build recurrence tables, run
//! verification campaigns, and dump ladder/RHP/Hankel data as JSON or CSV.
//!
//! Exit codes: 0 pass, 1 verification failure, 2 usage/config error,
//! 3 numerical failure.

use crate::error::{Error, Result};
use crate::ladder::{self, LadderEngine};
use crate::opcore::{self, RecurrenceTable};
use crate::precision::{format_at, CFloat, Ctx};
use crate::rhp::{self, RhpEngine};
use crate::verify::{self, Campaign, CheckKind, Tolerances};
use crate::weights::WeightSpec;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(
    name = "opladder",
    about = "High-precision ladder-operator and Riemann-Hilbert identity checks \
             for Laguerre-, Jacobi-, and shifted-Jacobi-type orthogonal polynomials",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
pub struct CommonArgs {
    /// Weight configuration (JSON).
    #[arg(long)]
    pub weight: PathBuf,
    /// Highest polynomial degree exercised.
    #[arg(long, default_value_t = 8)]
    pub n_max: usize,
    /// Working mantissa bits.
    #[arg(long, default_value_t = 256)]
    pub precision_bits: u32,
    /// Quadrature nodes per segment.
    #[arg(long, default_value_t = 200)]
    pub nodes: usize,
    /// Seed for z-sampling.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Output path (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Tolerance override, repeatable: `<check>=<float>`.
    #[arg(long = "tol", value_parser = parse_tol)]
    pub tol: Vec<(String, f64)>,
    /// Laguerre truncation override (0 = automatic).
    #[arg(long, default_value_t = 0.0)]
    pub trunc: f64,
}

fn parse_tol(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected <check>=<float>, got {s}"))?;
    let v: f64 = v.parse().map_err(|e| format!("bad tolerance {v}: {e}"))?;
    Ok((k.to_string(), v))
}

fn parse_z(s: &str) -> std::result::Result<(f64, f64), String> {
    match s.split_once(',') {
        Some((re, im)) => Ok((
            re.trim().parse().map_err(|e| format!("bad re: {e}"))?,
            im.trim().parse().map_err(|e| format!("bad im: {e}"))?,
        )),
        None => Ok((s.trim().parse().map_err(|e| format!("bad z: {e}"))?, 0.0)),
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build the recurrence table and dump n, alpha, beta, h, p1.
    Recurrence {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run a verification campaign and write the report; exit 0 iff pass.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated subset of
        /// orthogonality,ladder,compat,rhp,oracle,diff_t,kernel_oracle.
        #[arg(long)]
        checks: Option<String>,
        /// Testing aid: perturb a beta entry, `<idx>=<delta>`.
        #[arg(long)]
        perturb_beta: Option<String>,
        /// Number of z samples.
        #[arg(long, default_value_t = 20)]
        z_count: usize,
    },
    /// Dump A_n(z), B_n(z) with the parts breakdown over a z list, or the
    /// full residual report with --residuals.
    Ladder {
        #[command(flatten)]
        common: CommonArgs,
        /// Degree for the A/B dump.
        #[arg(long, default_value_t = 3)]
        n: usize,
        /// Evaluation points, repeatable: "re" or "re,im".
        #[arg(long = "z", value_parser = parse_z, allow_hyphen_values = true)]
        z: Vec<(f64, f64)>,
        /// Emit lowering/raising/S1/S2/S2' residuals for n = 1..n_max
        /// instead of the A/B dump.
        #[arg(long)]
        residuals: bool,
    },
    /// Riemann-Hilbert frame residuals (det Y, trace R, R formulas, jump).
    Rhp {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long = "z", value_parser = parse_z, allow_hyphen_values = true)]
        z: Vec<(f64, f64)>,
    },
    /// Hankel determinants D_1..D_n (with the Gamma-product oracle for the
    /// classical Laguerre weight).
    Hankel {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// t-differential identity residuals for the catalogued families.
    DiffCheck {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 1e-12)]
        step: f64,
    },
}

pub fn main_with(cli: Cli) -> i32 {
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    code
}

fn load_weight(path: &PathBuf) -> Result<WeightSpec> {
    let data = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let w: WeightSpec =
        serde_json::from_str(&data).map_err(|e| Error::Config(format!("bad weight JSON: {e}")))?;
    Ok(w)
}

fn write_output(common: &CommonArgs, data: &str) -> Result<()> {
    match &common.out {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(data.as_bytes())?;
            if !data.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
            Ok(())
        }
        Some(p) => {
            if let Some(dir) = p.parent() {
                if !dir.as_os_str().is_empty() && !dir.exists() {
                    return Err(Error::Config(format!(
                        "output directory {} does not exist",
                        dir.display()
                    )));
                }
            }
            std::fs::write(p, data)?;
            Ok(())
        }
    }
}

fn table_for(common: &CommonArgs, w: &WeightSpec, cap: usize) -> Result<RecurrenceTable> {
    let ctx = Ctx::new(common.precision_bits);
    let (tab, _) = opcore::recurrence_stieltjes(ctx, w, cap, common.nodes)?;
    Ok(tab)
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Recurrence { common } => cmd_recurrence(&common),
        Command::Verify {
            common,
            checks,
            perturb_beta,
            z_count,
        } => cmd_verify(&common, checks.as_deref(), perturb_beta.as_deref(), z_count),
        Command::Ladder {
            common,
            n,
            z,
            residuals,
        } => cmd_ladder(&common, n, &z, residuals),
        Command::Rhp { common, z } => cmd_rhp(&common, &z),
        Command::Hankel { common } => cmd_hankel(&common),
        Command::DiffCheck { common, step } => cmd_diff_check(&common, step),
    }
}

fn cmd_recurrence(common: &CommonArgs) -> Result<i32> {
    let w = load_weight(&common.weight)?;
    let ctx = Ctx::new(common.precision_bits);
    let tab = table_for(common, &w, common.n_max.max(1))?;
    let out = match common.format {
        Format::Csv => {
            let mut s = String::from("n,alpha,beta,h,p1\n");
            for n in 0..tab.cap {
                s.push_str(&format!(
                    "{n},{},{},{},{}\n",
                    format_at(ctx, &tab.alpha[n]),
                    format_at(ctx, &tab.beta[n]),
                    format_at(ctx, &tab.h[n]),
                    format_at(ctx, &tab.p1[n]),
                ));
            }
            s
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Row {
                n: usize,
                alpha: String,
                beta: String,
                h: String,
                p1: String,
            }
            #[derive(Serialize)]
            struct Out {
                weight: WeightSpec,
                precision_bits: u32,
                nodes: usize,
                rows: Vec<Row>,
            }
            let rows = (0..tab.cap)
                .map(|n| Row {
                    n,
                    alpha: format_at(ctx, &tab.alpha[n]),
                    beta: format_at(ctx, &tab.beta[n]),
                    h: format_at(ctx, &tab.h[n]),
                    p1: format_at(ctx, &tab.p1[n]),
                })
                .collect();
            serde_json::to_string_pretty(&Out {
                weight: w.clone(),
                precision_bits: common.precision_bits,
                nodes: common.nodes,
                rows,
            })?
        }
    };
    write_output(common, &out)?;
    Ok(0)
}

fn cmd_verify(
    common: &CommonArgs,
    checks: Option<&str>,
    perturb_beta: Option<&str>,
    z_count: usize,
) -> Result<i32> {
    let w = load_weight(&common.weight)?;
    let mut campaign = Campaign::new(w.clone(), common.n_max);
    campaign.precision_bits = common.precision_bits;
    campaign.node_count = common.nodes;
    campaign.seed = common.seed;
    campaign.z_samples = verify::default_z_samples(&w, z_count, common.seed);
    campaign.checks = match checks {
        Some(list) => list
            .split(',')
            .map(|s| {
                CheckKind::from_name(s.trim())
                    .ok_or_else(|| Error::Config(format!("unknown check {s}")))
            })
            .collect::<Result<Vec<_>>>()?,
        None => {
            // all checks that apply to this weight
            let mut v = vec![
                CheckKind::Orthogonality,
                CheckKind::Ladder,
                CheckKind::Compat,
                CheckKind::Rhp,
                CheckKind::Oracle,
            ];
            if verify::diff_family(&w).is_some() {
                v.push(CheckKind::DiffT);
            }
            if verify::named_family(&w).is_some() {
                v.push(CheckKind::KernelOracle);
            }
            v
        }
    };
    if let Some(pb) = perturb_beta {
        let (idx, delta) = pb
            .split_once('=')
            .ok_or_else(|| Error::Config("expected --perturb-beta <idx>=<delta>".into()))?;
        campaign.perturb_beta = Some((
            idx.parse()
                .map_err(|e| Error::Config(format!("bad index: {e}")))?,
            delta
                .parse()
                .map_err(|e| Error::Config(format!("bad delta: {e}")))?,
        ));
    }
    let mut tol = Tolerances::default();
    for (k, v) in &common.tol {
        tol.overrides.insert(k.clone(), *v);
    }
    let started = std::time::Instant::now();
    let report = verify::run_campaign(&campaign, &tol)?;
    eprintln!("campaign finished in {} ms", started.elapsed().as_millis());
    write_output(common, &report.to_json()?)?;
    Ok(if report.pass() { 0 } else { 1 })
}

fn cmd_ladder(common: &CommonArgs, n: usize, z: &[(f64, f64)], residuals: bool) -> Result<i32> {
    let w = load_weight(&common.weight)?;
    let ctx = Ctx::new(common.precision_bits);
    let cap = common.n_max.max(n) + 2;
    let tab = table_for(common, &w, cap)?;
    let engine = LadderEngine::new(ctx, &w, &tab, common.nodes)?;
    let zs: Vec<(f64, f64)> = if z.is_empty() {
        verify::default_z_samples(&w, 4, common.seed)
            .into_iter()
            .map(|p| (p[0], p[1]))
            .collect()
    } else {
        z.to_vec()
    };

    if residuals {
        #[derive(Serialize)]
        struct Entry {
            n: usize,
            z: [f64; 2],
            lowering: String,
            raising: String,
            s1: String,
            s2: String,
            s2p: Option<String>,
        }
        let mut entries = Vec::new();
        for &(re, im) in &zs {
            let zc = ctx.cx(re, im);
            let at = engine.at(&zc, common.n_max)?;
            for k in 1..=common.n_max {
                let lo = ladder::lowering_residual(&engine, &at, k)?;
                let ra = ladder::raising_residual(&engine, &at, k)?;
                let (s1, s2, s2p) = if k < common.n_max {
                    let (a, b, c) = ladder::compat_residuals(&engine, &at, k)?;
                    (
                        format_at(ctx, &a),
                        format_at(ctx, &b),
                        c.map(|v| format_at(ctx, &v)),
                    )
                } else {
                    ("".to_string(), "".to_string(), None)
                };
                entries.push(Entry {
                    n: k,
                    z: [re, im],
                    lowering: format_at(ctx, &lo),
                    raising: format_at(ctx, &ra),
                    s1,
                    s2,
                    s2p,
                });
            }
        }
        let out = match common.format {
            Format::Json => {
                #[derive(Serialize)]
                struct Out {
                    weight: WeightSpec,
                    precision_bits: u32,
                    nodes: usize,
                    entries: Vec<Entry>,
                }
                serde_json::to_string_pretty(&Out {
                    weight: w.clone(),
                    precision_bits: common.precision_bits,
                    nodes: common.nodes,
                    entries,
                })?
            }
            Format::Csv => {
                let mut s = String::from("n,z_re,z_im,lowering,raising,s1,s2,s2p\n");
                for e in entries {
                    s.push_str(&format!(
                        "{},{},{},{},{},{},{},{}\n",
                        e.n,
                        e.z[0],
                        e.z[1],
                        e.lowering,
                        e.raising,
                        e.s1,
                        e.s2,
                        e.s2p.unwrap_or_default()
                    ));
                }
                s
            }
        };
        write_output(common, &out)?;
        return Ok(0);
    }

    let fmt_cx = |v: &CFloat| (format_at(ctx, &v.re), format_at(ctx, &v.im));
    #[derive(Serialize)]
    struct PairRow {
        n: usize,
        z: [f64; 2],
        a_re: String,
        a_im: String,
        b_re: String,
        b_im: String,
        a_smooth: [String; 2],
        a_counting: [String; 2],
        a_jumps: Vec<[String; 2]>,
        a_fh: [String; 2],
        b_smooth: [String; 2],
        b_counting: [String; 2],
        b_jumps: Vec<[String; 2]>,
        b_fh: [String; 2],
    }
    let mut rows = Vec::new();
    for &(re, im) in &zs {
        let zc = ctx.cx(re, im);
        let at = engine.at(&zc, n)?;
        let p = &at.pairs[n];
        let (a_re, a_im) = fmt_cx(&p.a);
        let (b_re, b_im) = fmt_cx(&p.b);
        let pack = |v: &CFloat| -> [String; 2] {
            let (r, i) = fmt_cx(v);
            [r, i]
        };
        rows.push(PairRow {
            n,
            z: [re, im],
            a_re,
            a_im,
            b_re,
            b_im,
            a_smooth: pack(&p.a_parts.smooth_integral),
            a_counting: pack(&p.a_parts.counting_term),
            a_jumps: p.a_parts.jump_residues.iter().map(pack).collect(),
            a_fh: pack(&p.a_parts.fh_term),
            b_smooth: pack(&p.b_parts.smooth_integral),
            b_counting: pack(&p.b_parts.counting_term),
            b_jumps: p.b_parts.jump_residues.iter().map(pack).collect(),
            b_fh: pack(&p.b_parts.fh_term),
        });
    }
    let out = match common.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Out {
                weight: WeightSpec,
                precision_bits: u32,
                nodes: usize,
                rows: Vec<PairRow>,
            }
            serde_json::to_string_pretty(&Out {
                weight: w.clone(),
                precision_bits: common.precision_bits,
                nodes: common.nodes,
                rows,
            })?
        }
        Format::Csv => {
            let mut s = String::from(
                "n,z_re,z_im,a_re,a_im,b_re,b_im,a_smooth_re,a_smooth_im,a_counting_re,\
                 a_counting_im,a_fh_re,a_fh_im,b_smooth_re,b_smooth_im,b_counting_re,\
                 b_counting_im,b_fh_re,b_fh_im\n",
            );
            for r in rows {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                    r.n,
                    r.z[0],
                    r.z[1],
                    r.a_re,
                    r.a_im,
                    r.b_re,
                    r.b_im,
                    r.a_smooth[0],
                    r.a_smooth[1],
                    r.a_counting[0],
                    r.a_counting[1],
                    r.a_fh[0],
                    r.a_fh[1],
                    r.b_smooth[0],
                    r.b_smooth[1],
                    r.b_counting[0],
                    r.b_counting[1],
                    r.b_fh[0],
                    r.b_fh[1],
                ));
            }
            s
        }
    };
    write_output(common, &out)?;
    Ok(0)
}

fn cmd_rhp(common: &CommonArgs, z: &[(f64, f64)]) -> Result<i32> {
    let w = load_weight(&common.weight)?;
    let ctx = Ctx::new(common.precision_bits);
    let tab = table_for(common, &w, common.n_max + 2)?;
    let engine = RhpEngine::new(ctx, &w, &tab, common.nodes)?;
    let zs: Vec<(f64, f64)> = if z.is_empty() {
        verify::default_z_samples(&w, 4, common.seed)
            .into_iter()
            .map(|p| (p[0], p[1]))
            .collect()
    } else {
        z.to_vec()
    };
    let smooth = w.jumps().is_none() && w.fh().is_none();

    #[derive(Serialize)]
    struct Entry {
        n: usize,
        z: [f64; 2],
        dety_residual: String,
        trace_residual: String,
        r_residuals: Option<[[String; 2]; 2]>,
        jump_residual: Option<String>,
    }
    let mut entries = Vec::new();
    // one boundary-limit check shared by the report
    let jump_residual = {
        let x0 = jump_check_point(&w);
        match x0 {
            Some(x0) => Some(format_at(
                ctx,
                &rhp::plemelj_residual(ctx, &w, &tab, 2.min(tab.cap - 1), x0, 1e-8, common.nodes)?,
            )),
            None => None,
        }
    };
    for (idx, &(re, im)) in zs.iter().enumerate() {
        let zc = ctx.cx(re, im);
        for n in 1..=common.n_max.min(tab.cap - 1) {
            let frame = engine.y_frame(n, &zc)?;
            let rr = if smooth {
                let r = engine.r_elements_residual(n, &zc)?;
                Some([
                    [format_at(ctx, &r[0][0]), format_at(ctx, &r[0][1])],
                    [format_at(ctx, &r[1][0]), format_at(ctx, &r[1][1])],
                ])
            } else {
                None
            };
            entries.push(Entry {
                n,
                z: [re, im],
                dety_residual: format_at(ctx, &frame.dety_residual()),
                trace_residual: format_at(ctx, &frame.trace_residual()),
                r_residuals: rr,
                jump_residual: if idx == 0 && n == 2.min(tab.cap - 1) {
                    jump_residual.clone()
                } else {
                    None
                },
            });
        }
    }
    let out = match common.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Out {
                weight: WeightSpec,
                precision_bits: u32,
                nodes: usize,
                entries: Vec<Entry>,
            }
            serde_json::to_string_pretty(&Out {
                weight: w.clone(),
                precision_bits: common.precision_bits,
                nodes: common.nodes,
                entries,
            })?
        }
        Format::Csv => {
            let mut s =
                String::from("n,z_re,z_im,dety_residual,trace_residual,r11,r12,r21,r22,jump\n");
            for e in entries {
                let rr = e.r_residuals.as_ref();
                s.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{}\n",
                    e.n,
                    e.z[0],
                    e.z[1],
                    e.dety_residual,
                    e.trace_residual,
                    rr.map(|r| r[0][0].clone()).unwrap_or_default(),
                    rr.map(|r| r[0][1].clone()).unwrap_or_default(),
                    rr.map(|r| r[1][0].clone()).unwrap_or_default(),
                    rr.map(|r| r[1][1].clone()).unwrap_or_default(),
                    e.jump_residual.unwrap_or_default(),
                ));
            }
            s
        }
    };
    write_output(common, &out)?;
    Ok(0)
}

fn jump_check_point(w: &WeightSpec) -> Option<f64> {
    let (lo, hi) = w.support();
    let candidates: Vec<f64> = if hi.is_finite() {
        vec![lo + 0.37 * (hi - lo), lo + 0.61 * (hi - lo)]
    } else {
        vec![0.7, 1.3]
    };
    let mut avoid = w.z_poles();
    avoid.extend(w.singular_points());
    candidates
        .into_iter()
        .find(|x| avoid.iter().all(|p| (p - x).abs() > 0.05))
}

fn cmd_hankel(common: &CommonArgs) -> Result<i32> {
    let w = load_weight(&common.weight)?;
    let ctx = Ctx::new(common.precision_bits);
    let tab = table_for(common, &w, common.n_max.max(1))?;
    let dets = opcore::hankel_dets(&tab);
    let is_classical_laguerre = matches!(
        verify::named_family(&w),
        Some(crate::closedforms::NamedFamily::ClassicalLaguerre)
    );
    let mut rows: Vec<BTreeMap<String, String>> = Vec::new();
    for (i, d) in dets.iter().enumerate() {
        let n = i + 1;
        let mut row = BTreeMap::new();
        row.insert("n".to_string(), n.to_string());
        row.insert("d_n".to_string(), format_at(ctx, d));
        if is_classical_laguerre {
            let lambda = w.lambda().unwrap();
            let oracle = crate::closedforms::barnes_g_hankel(ctx, n, lambda)?;
            row.insert("gamma_product".to_string(), format_at(ctx, &oracle));
        }
        rows.push(row);
    }
    let out = match common.format {
        Format::Json => serde_json::to_string_pretty(&rows)?,
        Format::Csv => {
            let mut s = if is_classical_laguerre {
                String::from("n,d_n,gamma_product\n")
            } else {
                String::from("n,d_n\n")
            };
            for row in rows {
                let mut fields = vec![row["n"].clone(), row["d_n"].clone()];
                if let Some(g) = row.get("gamma_product") {
                    fields.push(g.clone());
                }
                s.push_str(&fields.join(","));
                s.push('\n');
            }
            s
        }
    };
    write_output(common, &out)?;
    Ok(0)
}

fn cmd_diff_check(common: &CommonArgs, step: f64) -> Result<i32> {
    let w = load_weight(&common.weight)?;
    let ctx = Ctx::new(common.precision_bits);
    let fam = verify::diff_family(&w).ok_or_else(|| {
        Error::Config("weight carries no catalogued t-differential identities".to_string())
    })?;
    let mut rows: Vec<BTreeMap<String, String>> = Vec::new();
    for n in 1..=common.n_max.min(5) {
        let res = ladder::diff_identity_residuals(ctx, &w, fam, n, common.nodes, step)?;
        for (k, v) in res {
            let mut row = BTreeMap::new();
            row.insert("n".to_string(), n.to_string());
            row.insert("identity".to_string(), k);
            row.insert("residual".to_string(), format_at(ctx, &v));
            rows.push(row);
        }
    }
    let out = match common.format {
        Format::Json => serde_json::to_string_pretty(&rows)?,
        Format::Csv => {
            let mut s = String::from("n,identity,residual\n");
            for row in rows {
                s.push_str(&format!(
                    "{},{},{}\n",
                    row["n"], row["identity"], row["residual"]
                ));
            }
            s
        }
    };
    write_output(common, &out)?;
    Ok(0)
}
