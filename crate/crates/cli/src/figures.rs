//! Data behind each figure, written as comma-separated files with an
//! optional SVG rendering next to each.

use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;

use rayon::prelude::*;

use coboson::bell::{chsh_correlators, BellSetting, OccupationSource, CLASSICAL_BOUND, TSIRELSON_BOUND};
use coboson::ensemble::{occupation_approx, occupation_curve, Ensemble, OccupationPoint};
use coboson::numeric::{ln_binomial, ln_factorial};
use coboson::spectrum::{preset, SchmidtSpectrum, PRESET_NAMES};
use coboson::splitting::{alpha_coeffs_with, half_binomial, joint_count_distribution, purity_from_table, Precision};
use coboson::sympoly::{chi_table, ChiTable};

use crate::commands::{log_spaced, purity_rows, PurityRow};
use crate::error::CliError;
use crate::output::{create_file, num, Header, Table};
use crate::svg::{render, Plot, Series};
use crate::{FigureName, FiguresArgs};

const TREND_STEP: usize = 20;
const TREND_MAX: usize = 360;
const SWEEP_PAIRS: usize = 100;
const LAMBDA_STATES: usize = 60;
const COUNT_PAIRS: usize = 1000;
const WINDOW: usize = 56;
const POPULATION_WINDOWS: usize = 200;
/// Preset and shells followed in the occupation and CHSH sweeps.
const SWEEP_PRESET: &str = "0.5";
const SWEEP_SHELLS: [u32; 5] = [0, 1, 2, 3, 4];
const SWEEP_FROM: usize = 10;
const SWEEP_STEPS: usize = 60;
/// Largest table order any figure needs from the preset spectra.
const TABLE_ORDER: usize = COUNT_PAIRS;

struct PresetData {
    name: &'static str,
    inv_kfa: f64,
    spectrum: SchmidtSpectrum,
    table: OnceLock<ChiTable>,
}

impl PresetData {
    fn table(&self) -> Result<ChiTable, CliError> {
        if let Some(t) = self.table.get() {
            return Ok(t.clone());
        }
        let t = chi_table(self.spectrum.weights(), TABLE_ORDER)?;
        Ok(self.table.get_or_init(|| t).clone())
    }

    fn ensemble(&self, n: usize) -> Result<Ensemble<'_>, CliError> {
        Ok(Ensemble::with_table(&self.spectrum, n, self.table()?)?)
    }
}

/// One state followed through the occupation sweep.
struct Tracked {
    j: usize,
    shell_n: u32,
    lambda: f64,
    curve: Vec<OccupationPoint>,
}

struct Context {
    precision: Precision,
    n_max: usize,
    presets: Vec<PresetData>,
    tracked: OnceLock<Vec<Tracked>>,
}

struct Dataset {
    name: &'static str,
    header: Header,
    table: Table,
    plot: Plot,
}

impl Context {
    fn new(precision: Precision, n_max: usize) -> Result<Self, CliError> {
        let presets = PRESET_NAMES
            .iter()
            .map(|name| {
                let p = preset(name)?;
                Ok(PresetData {
                    name: p.name,
                    inv_kfa: p.inv_kfa(),
                    spectrum: p.spectrum()?,
                    table: OnceLock::new(),
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        Ok(Context {
            precision,
            n_max,
            presets,
            tracked: OnceLock::new(),
        })
    }

    fn header(&self, figure: &str) -> Header {
        let mut h = Header::new("figures");
        h.set("figure", figure);
        for p in &self.presets {
            h.set(&format!("preset_{}_fingerprint", p.name), p.spectrum.fingerprint());
        }
        h
    }

    fn sweep_preset(&self) -> &PresetData {
        self.presets.iter().find(|p| p.name == SWEEP_PRESET).expect("sweep preset is shipped")
    }

    fn sweep_ns(&self) -> Result<Vec<usize>, CliError> {
        log_spaced(SWEEP_FROM, self.n_max, SWEEP_STEPS)
    }

    fn tracked(&self) -> Result<&[Tracked], CliError> {
        if let Some(t) = self.tracked.get() {
            return Ok(t);
        }
        let spec = &self.sweep_preset().spectrum;
        if self.n_max > spec.rank() {
            return Err(CliError::Usage(format!(
                "--n-max {} exceeds the rank {} of preset {SWEEP_PRESET}",
                self.n_max,
                spec.rank()
            )));
        }
        let ns = self.sweep_ns()?;
        let table = chi_table(spec.weights(), self.n_max)?;
        let offsets = spec.shell_offsets();
        let states: Vec<(usize, u32)> = SWEEP_SHELLS
            .iter()
            .filter_map(|&n| {
                let i = spec.shells().iter().position(|s| s.l == 0 && s.n == n)?;
                Some((offsets[i], n))
            })
            .collect();
        let tracked = states
            .par_iter()
            .map(|&(j, shell_n)| {
                Ok(Tracked {
                    j,
                    shell_n,
                    lambda: spec.weights()[j],
                    curve: occupation_curve(spec, &table, j, &ns)?,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        Ok(self.tracked.get_or_init(|| tracked))
    }
}

pub fn run(args: &FiguresArgs, precision: Precision, force: bool) -> Result<(), CliError> {
    if args.n_max < SWEEP_FROM {
        return Err(CliError::Usage(format!("--n-max must be at least {SWEEP_FROM}")));
    }
    let ctx = Context::new(precision, args.n_max)?;
    let wanted: Vec<FigureName> = match args.figure {
        FigureName::All => vec![
            FigureName::Fig1a,
            FigureName::Fig1b,
            FigureName::Fig1c,
            FigureName::Fig2,
            FigureName::Fig3,
            FigureName::Fig4,
            FigureName::Fig5,
        ],
        f => vec![f],
    };
    std::fs::create_dir_all(&args.out_dir)?;
    for f in wanted {
        let sets = match f {
            FigureName::Fig1a => vec![fig1a(&ctx)?],
            FigureName::Fig1b => vec![fig1b(&ctx)?],
            FigureName::Fig1c => vec![fig1c(&ctx)],
            FigureName::Fig2 => vec![fig2a(&ctx)?, fig2b(&ctx)?],
            FigureName::Fig3 => vec![fig3(&ctx)?],
            FigureName::Fig4 => vec![fig4(&ctx)?],
            FigureName::Fig5 => vec![fig5(&ctx)?],
            FigureName::All => unreachable!("expanded above"),
        };
        for d in &sets {
            write_dataset(d, &args.out_dir, args.svg, force)?;
        }
    }
    Ok(())
}

fn write_dataset(d: &Dataset, dir: &Path, svg: bool, force: bool) -> Result<(), CliError> {
    let mut w = create_file(&dir.join(format!("{}.csv", d.name)), force)?;
    d.header.write(&mut w)?;
    d.table.write(&mut w)?;
    w.flush()?;
    if svg {
        let mut w = create_file(&dir.join(format!("{}.svg", d.name)), force)?;
        w.write_all(render(&d.plot).as_bytes())?;
        w.flush()?;
    }
    log::info!("wrote {} ({} rows)", d.name, d.table.len());
    Ok(())
}

fn log10(ln: f64) -> f64 {
    ln / std::f64::consts::LN_10
}

fn purity_cells(r: &PurityRow) -> [String; 4] {
    [
        num(r.ln_value.exp()),
        num(log10(r.ln_value)),
        num(r.ln_lower_bound.exp()),
        num(log10(r.ln_lower_bound)),
    ]
}

/// Purity at `M = N/2` against `N`, one curve per preset.
fn fig1a(ctx: &Context) -> Result<Dataset, CliError> {
    let ns: Vec<usize> = (TREND_STEP..=TREND_MAX).step_by(TREND_STEP).collect();
    let mut h = ctx.header("fig1a");
    h.set("m", "N/2").set("precision", ctx.precision);
    let mut t = Table::new(&[
        "invkfa",
        "N",
        "M",
        "purity",
        "log10_purity",
        "lower_bound",
        "log10_lower_bound",
    ]);
    let mut plot = Plot::new("Purity at M = N/2", "N", "P1").log_y();
    let mut bound = Vec::new();
    for p in &ctx.presets {
        let table = p.table()?;
        let rows = ns
            .par_iter()
            .map(|&n| {
                let ens = Ensemble::with_table(&p.spectrum, n, table.clone())?;
                let alpha = alpha_coeffs_with(n, n / 2, ctx.precision)?;
                let pur = purity_from_table(ens.table(), &alpha)?;
                Ok((n, pur))
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let mut pts = Vec::new();
        for (n, pur) in &rows {
            let r = PurityRow {
                m: n / 2,
                ln_value: pur.ln_value,
                ln_lower_bound: pur.ln_lower_bound,
            };
            let mut row = vec![num(p.inv_kfa), n.to_string(), r.m.to_string()];
            row.extend(purity_cells(&r));
            t.push(row);
            pts.push((*n as f64, r.ln_value.exp()));
            if bound.len() < rows.len() {
                bound.push((*n as f64, r.ln_lower_bound.exp()));
            }
        }
        plot = plot.with(Series::line(format!("(kFa)^-1 = {}", p.name), pts));
    }
    plot = plot.with(Series::line("1/C(N,M)", bound).dashed());
    Ok(Dataset {
        name: "fig1a",
        header: h,
        table: t,
        plot,
    })
}

/// Purity against the imbalance `1 − 2M/N` at fixed `N`.
fn fig1b(ctx: &Context) -> Result<Dataset, CliError> {
    let mut h = ctx.header("fig1b");
    h.set("n", SWEEP_PAIRS).set("precision", ctx.precision);
    let mut t = Table::new(&[
        "invkfa",
        "M",
        "x",
        "purity",
        "log10_purity",
        "lower_bound",
        "log10_lower_bound",
    ]);
    let mut plot = Plot::new(&format!("Purity at N = {SWEEP_PAIRS}"), "x = 1 - 2M/N", "P1").log_y();
    let ms: Vec<usize> = (0..=SWEEP_PAIRS).collect();
    let x = |m: usize| 1.0 - 2.0 * m as f64 / SWEEP_PAIRS as f64;
    let mut bound = Vec::new();
    for p in &ctx.presets {
        let ens = p.ensemble(SWEEP_PAIRS)?;
        let rows = purity_rows(&ens, &ms, ctx.precision)?;
        let mut pts = Vec::new();
        for r in &rows {
            let mut row = vec![num(p.inv_kfa), r.m.to_string(), num(x(r.m))];
            row.extend(purity_cells(r));
            t.push(row);
            pts.push((x(r.m), r.ln_value.exp()));
        }
        if bound.is_empty() {
            bound = rows.iter().map(|r| (x(r.m), r.ln_lower_bound.exp())).collect();
        }
        plot = plot.with(Series::line(format!("(kFa)^-1 = {}", p.name), pts));
    }
    plot = plot.with(Series::line("1/C(N,M)", bound).dashed());
    Ok(Dataset {
        name: "fig1b",
        header: h,
        table: t,
        plot,
    })
}

/// Leading Schmidt coefficients in energy order.
fn fig1c(ctx: &Context) -> Dataset {
    let mut h = ctx.header("fig1c");
    h.set("states", LAMBDA_STATES);
    let mut t = Table::new(&["invkfa", "j", "n", "l", "lambda"]);
    let mut plot = Plot::new("Schmidt coefficients", "j", "lambda_j").log_y();
    for p in &ctx.presets {
        let spec = &p.spectrum;
        let mut pts = Vec::new();
        for (j, st) in spec.states().iter().enumerate().take(LAMBDA_STATES) {
            let sh = &spec.shells()[st.shell];
            t.push(vec![
                num(p.inv_kfa),
                (j + 1).to_string(),
                sh.n.to_string(),
                sh.l.to_string(),
                num(sh.lambda),
            ]);
            pts.push(((j + 1) as f64, sh.lambda));
        }
        plot = plot.with(Series::line(format!("(kFa)^-1 = {}", p.name), pts).markers());
    }
    h.set("order", "increasing single-particle energy");
    Dataset {
        name: "fig1c",
        header: h,
        table: t,
        plot,
    }
}

/// Mean population of the `t` lowest states.
fn fig2a(ctx: &Context) -> Result<Dataset, CliError> {
    let mut h = ctx.header("fig2a");
    h.set("n", COUNT_PAIRS);
    let mut t = Table::new(&["invkfa", "t", "mean_population"]);
    let mut plot = Plot::new(&format!("Mean population, N = {COUNT_PAIRS}"), "t", "<N_t>");
    for p in &ctx.presets {
        let ens = p.ensemble(COUNT_PAIRS)?;
        let top = POPULATION_WINDOWS.min(p.spectrum.rank());
        let mut pts = Vec::new();
        for w in 1..=top {
            let mean = ens.mean_population(w)?;
            t.push(vec![num(p.inv_kfa), w.to_string(), num(mean)]);
            pts.push((w as f64, mean));
        }
        plot = plot.with(Series::line(format!("(kFa)^-1 = {}", p.name), pts));
    }
    Ok(Dataset {
        name: "fig2a",
        header: h,
        table: t,
        plot,
    })
}

fn poisson_pmf(mean: f64, k: usize) -> f64 {
    (k as f64 * mean.ln() - mean - ln_factorial(k as u64)).exp()
}

fn binomial_pmf(t: usize, p: f64, k: usize) -> f64 {
    (ln_binomial(t as u64, k as u64) + k as f64 * p.ln() + (t - k) as f64 * (1.0 - p).ln()).exp()
}

/// Counting distribution of the window with equal-mean references.
fn fig2b(ctx: &Context) -> Result<Dataset, CliError> {
    let mut h = ctx.header("fig2b");
    h.set("n", COUNT_PAIRS).set("t", WINDOW);
    let mut t = Table::new(&["invkfa", "n", "P_n", "poisson", "binomial"]);
    let mut plot = Plot::new(&format!("Counts in the {WINDOW} lowest states"), "n", "P(n)");
    for p in &ctx.presets {
        let ens = p.ensemble(COUNT_PAIRS)?;
        let window = ens.window(WINDOW)?;
        let dist = ens.count_distribution(&window)?;
        let r = ens.window_report(&window)?;
        h.set(&format!("preset_{}_mean", p.name), num(r.mean))
            .set(&format!("preset_{}_variance", p.name), num(r.variance))
            .set(&format!("preset_{}_fano", p.name), num(r.fano()));
        let q = r.mean / WINDOW as f64;
        let (mut data, mut pois) = (Vec::new(), Vec::new());
        for (k, pk) in dist.iter().enumerate() {
            let (po, bi) = (poisson_pmf(r.mean, k), binomial_pmf(WINDOW, q, k));
            t.push(vec![num(p.inv_kfa), k.to_string(), num(*pk), num(po), num(bi)]);
            data.push((k as f64, *pk));
            pois.push((k as f64, po));
        }
        plot = plot
            .with(Series::line(format!("(kFa)^-1 = {}", p.name), data))
            .with(Series::line(format!("Poisson, {}", p.name), pois).dashed());
    }
    Ok(Dataset {
        name: "fig2b",
        header: h,
        table: t,
        plot,
    })
}

/// Split counting distribution of mode 1 against Bin(t, 1/2).
fn fig3(ctx: &Context) -> Result<Dataset, CliError> {
    let m = COUNT_PAIRS / 2;
    let mut h = ctx.header("fig3");
    h.set("n", COUNT_PAIRS).set("m", m).set("t", WINDOW);
    let mut t = Table::new(&["invkfa", "n1", "P1", "binomial"]);
    let reference = half_binomial(WINDOW);
    let mut plot = Plot::new(&format!("Mode-1 counts, N = {COUNT_PAIRS}, M = {m}"), "n1", "P1(n1)");
    for p in &ctx.presets {
        let ens = p.ensemble(COUNT_PAIRS)?;
        let window = ens.window(WINDOW)?;
        let marginal = joint_count_distribution(&ens, m, &window)?.marginal();
        let mut pts = Vec::new();
        for (k, pk) in marginal.iter().enumerate() {
            t.push(vec![num(p.inv_kfa), k.to_string(), num(*pk), num(reference[k])]);
            pts.push((k as f64, *pk));
        }
        plot = plot.with(Series::line(format!("(kFa)^-1 = {}", p.name), pts));
    }
    let pts = reference.iter().enumerate().map(|(k, q)| (k as f64, *q)).collect();
    plot = plot.with(Series::line(format!("Bin({WINDOW}, 1/2)"), pts).dashed());
    Ok(Dataset {
        name: "fig3",
        header: h,
        table: t,
        plot,
    })
}

/// Balanced-split CHSH value of the tracked states against `N`.
fn fig4(ctx: &Context) -> Result<Dataset, CliError> {
    let mut h = ctx.header("fig4");
    h.set("preset", SWEEP_PRESET)
        .set("m", "floor(N/2)")
        .set("n_from", SWEEP_FROM)
        .set("n_to", ctx.n_max)
        .set("log_steps", SWEEP_STEPS);
    let mut t = Table::new(&["j", "shell_n", "N", "M", "NDj", "chsh", "source"]);
    let mut plot = Plot::new("CHSH value, balanced split", "N", "<M>").log_x();
    for tr in ctx.tracked()? {
        let mut pts = Vec::new();
        for p in &tr.curve {
            let mut s = BellSetting::new(tr.j, p.n, p.n / 2, p.d, OccupationSource::Exact)?;
            s.vacancy = p.vacancy;
            let chsh = chsh_correlators(&s)?.chsh();
            t.push(vec![
                (tr.j + 1).to_string(),
                tr.shell_n.to_string(),
                p.n.to_string(),
                s.m.to_string(),
                num(s.nd()),
                num(chsh),
                s.source.to_string(),
            ]);
            pts.push((p.n as f64, chsh));
        }
        plot = plot.with(Series::line(format!("j = {} (n = {}, l = 0)", tr.j + 1, tr.shell_n), pts));
    }
    let ends = [SWEEP_FROM, ctx.n_max];
    for (name, value) in [("classical", CLASSICAL_BOUND), ("tsirelson", TSIRELSON_BOUND)] {
        for n in ends {
            t.push(vec![
                String::new(),
                String::new(),
                n.to_string(),
                String::new(),
                String::new(),
                num(value),
                format!("{name}-bound"),
            ]);
        }
        let pts = ends.iter().map(|&n| (n as f64, value)).collect();
        plot = plot.with(Series::line(format!("{name} bound"), pts).dashed());
    }
    Ok(Dataset {
        name: "fig4",
        header: h,
        table: t,
        plot,
    })
}

/// `D_j/λ_j` against the smooth approximation `1/(1 + λ_j(N − 1))`.
fn fig5(ctx: &Context) -> Result<Dataset, CliError> {
    let mut h = ctx.header("fig5");
    h.set("preset", SWEEP_PRESET)
        .set("n_from", SWEEP_FROM)
        .set("n_to", ctx.n_max)
        .set("log_steps", SWEEP_STEPS);
    let mut t = Table::new(&["j", "shell_n", "lambda", "N", "D_over_lambda", "approx", "relative_deviation"]);
    let mut plot = Plot::new("Occupation over coefficient", "N", "D_j / lambda_j").log_x().log_y();
    for tr in ctx.tracked()? {
        let (mut data, mut fit) = (Vec::new(), Vec::new());
        for p in &tr.curve {
            let exact = p.d / tr.lambda;
            let approx = occupation_approx(tr.lambda, p.n) / tr.lambda;
            t.push(vec![
                (tr.j + 1).to_string(),
                tr.shell_n.to_string(),
                num(tr.lambda),
                p.n.to_string(),
                num(exact),
                num(approx),
                num((approx - exact) / exact),
            ]);
            data.push((p.n as f64, exact));
            fit.push((p.n as f64, approx));
        }
        plot = plot
            .with(Series::line(format!("j = {}", tr.j + 1), data).markers())
            .with(Series::line(format!("fit, j = {}", tr.j + 1), fit).dashed());
    }
    Ok(Dataset {
        name: "fig5",
        header: h,
        table: t,
        plot,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_pmfs_normalized() {
        let s: f64 = (0..200).map(|k| poisson_pmf(7.5, k)).sum();
        assert!((s - 1.0).abs() < 1e-12);
        let b: f64 = (0..=WINDOW).map(|k| binomial_pmf(WINDOW, 0.3, k)).sum();
        assert!((b - 1.0).abs() < 1e-12);
    }
}
