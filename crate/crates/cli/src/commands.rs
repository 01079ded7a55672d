use anyhow::{bail, Context, Result};
use hybridqf::instruments::{self, Box as Region, ConditioningSettings, PROBABILITY_THRESHOLD};
use hybridqf::linalg::vnorm;
use hybridqf::model::modelfile::{model_file_string, parse_model_file, ModelSpec};
use hybridqf::model::reduce_classical;
use hybridqf::propagation::{capital_psi, mean_evolution, propagator, quadratic_form_at_zero, CumulantField, EquilibriumField};
use hybridqf::sampler::{sample_ou_paths, InitialLaw};
use hybridqf::states::{default_grid_count, quantum_admissibility, twisted_pd_min_eigenvalue, wigner_from_cf, GridAxis, GridCF};
use hybridqf::{Example, GaussianHybridState, HybridModel};
use nalgebra::{Complex, DMatrix, DVector};

use crate::config::{BoxSpec, RunConfig};

/// `−ln |χ|` targeted on the edge of an automatic Wigner grid.
const EDGE_DECAY: f64 = 23.0;

pub struct Outcome {
    pub text: String,
    pub pass: bool,
    /// Human-readable lines for stderr.
    pub notes: Vec<String>,
}

fn f(x: f64) -> String {
    format!("{:.16e}", x + 0.0)
}

fn join(xs: impl IntoIterator<Item = f64>) -> String {
    xs.into_iter().map(f).collect::<Vec<_>>().join(",")
}

fn header_block(cfg: &RunConfig, command: &str) -> String {
    cfg.header(command).iter().map(|l| format!("# {l}\n")).collect()
}

fn columns(prefix: &str, n: usize) -> String {
    (1..=n).map(|i| format!("{prefix}{i}")).collect::<Vec<_>>().join(",")
}

pub fn model_spec(cfg: &RunConfig) -> Result<ModelSpec> {
    match (&cfg.model.path, &cfg.model.example) {
        (Some(p), None) => {
            if !cfg.model.params.is_empty() {
                bail!("model.params only applies to built-in examples");
            }
            let text = std::fs::read_to_string(p).with_context(|| format!("reading model {p}"))?;
            Ok(parse_model_file(&text).with_context(|| format!("model {p}"))?)
        }
        (None, Some(name)) => {
            let ex = Example::from_name(name)?;
            let params: Vec<(String, f64)> = cfg.model.params.iter().map(|(k, v)| (k.clone(), *v)).collect();
            Ok(ModelSpec::from_model(&ex.build_with::<f64>(&params)?))
        }
        (Some(_), Some(_)) => bail!("give either a model file or an example, not both"),
        (None, None) => bail!("no model: pass --model PATH or --example NAME"),
    }
}

fn tol(cfg: &RunConfig) -> f64 {
    cfg.model.tol.unwrap_or(1e-10)
}

fn load_model(cfg: &RunConfig) -> Result<HybridModel<f64>> {
    let mut m = model_spec(cfg)?.to_unchecked::<f64>()?;
    m.validate(tol(cfg))?;
    Ok(m)
}

fn matrix(key: &str, rows: &[Vec<f64>], d: usize) -> Result<DMatrix<f64>> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        bail!("{key}: expected a {d}×{d} matrix");
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

fn vector(key: &str, x: &[f64], d: usize) -> Result<DVector<f64>> {
    if x.len() != d {
        bail!("{key}: {} entries, expected {d}", x.len());
    }
    Ok(DVector::from_column_slice(x))
}

/// State from `[state]`, vacuum ⊕ unit-variance classical part by default.
fn resolve_state(cfg: &mut RunConfig, model: &HybridModel<f64>) -> Result<GaussianHybridState<f64>> {
    let d = model.d();
    let vac = GaussianHybridState::vacuum(model.dims, 1.0);
    let mean = match &cfg.state.mean {
        Some(m) => vector("state.mean", m, d)?,
        None => vac.mean.clone(),
    };
    let cov = match &cfg.state.cov {
        Some(c) => matrix("state.cov", c, d)?,
        None => vac.cov.clone(),
    };
    cfg.state.mean = Some(mean.iter().copied().collect());
    cfg.state.cov = Some((0..d).map(|i| cov.row(i).iter().copied().collect()).collect());
    Ok(GaussianHybridState::admissible(mean, cov, model.dims)?)
}

/// Origin followed by sweeps along each axis, or the explicit points.
fn resolve_probes(cfg: &mut RunConfig, d: usize, default_half_width: f64) -> Result<Vec<DVector<f64>>> {
    if let Some(pts) = &cfg.grid.points {
        return pts.iter().enumerate().map(|(i, p)| vector(&format!("grid.points[{i}]"), p, d)).collect();
    }
    let count = *cfg.grid.count.get_or_insert(21);
    if count < 2 {
        bail!("grid.count must be at least 2");
    }
    let hw = cfg.grid.half_width.get_or_insert_with(|| vec![default_half_width; d]).clone();
    if hw.len() != d {
        bail!("grid.half_width: {} entries, expected {d}", hw.len());
    }
    let mut out = vec![DVector::zeros(d)];
    for (i, w) in hw.iter().enumerate() {
        for j in 0..count {
            let v = -w + 2.0 * w * j as f64 / (count - 1) as f64;
            if v != 0.0 {
                let mut p = DVector::zeros(d);
                p[i] = v;
                out.push(p);
            }
        }
    }
    Ok(out)
}

fn resolve_times(cfg: &mut RunConfig, default: &[f64]) -> Result<Vec<f64>> {
    let t = cfg.time.times.get_or_insert_with(|| default.to_vec()).clone();
    if t.is_empty() || t.iter().any(|x| !(*x >= 0.0)) {
        bail!("time.times must be non-negative and non-empty");
    }
    Ok(t)
}

pub fn validate(cfg: &RunConfig) -> Result<Outcome> {
    let tolerance = tol(cfg);
    let mut cfg = cfg.clone();
    cfg.model.tol = Some(tolerance);
    let m = model_spec(&cfg)?.to_unchecked::<f64>()?;
    let r = m.diagnose(tolerance)?;
    let pass = r.passed();
    let mut out = header_block(&cfg, "validate");
    out.push_str("key,value\n");
    out.push_str(&format!("result,{}\n", if pass { "PASS" } else { "FAIL" }));
    out.push_str(&format!("n,{}\ns,{}\n", m.dims.n, m.dims.s));
    out.push_str(&format!("positivity,{}\n", if r.positivity.pass { "PASS" } else { "FAIL" }));
    out.push_str(&format!("min_eigenvalue,{}\n", f(r.positivity.min_eigenvalue)));
    for i in 0..m.d() {
        out.push_str(&format!("B[{}],{}\n", i + 1, join(r.positivity.b.row(i).iter().copied())));
    }
    out.push_str(&format!("levy_ok,{}\n", r.levy.ok));
    out.push_str(&format!("levy_small_ball_second_moment,{}\n", f(r.levy.small_ball_second_moment)));
    out.push_str(&format!("levy_tail_mass,{}\n", f(r.levy.tail_mass)));
    for p in &r.levy.problems {
        out.push_str(&format!("levy_problem,\"{}\"\n", p.replace('"', "'")));
    }
    let k = r.interactions;
    out.push_str(&format!("K1_classical_drives_quantum,{}\n", k.k1));
    out.push_str(&format!("K2_quantum_informs_classical,{}\n", k.k2));
    out.push_str(&format!("K3_correlated_noise,{}\n", k.k3));
    out.push_str(&format!("K4_mixed_jumps,{}\n", k.k4));
    let mut notes = vec![format!(
        "{}: min eigenvalue of A + iB = {:.3e}",
        if pass { "PASS" } else { "FAIL" },
        r.positivity.min_eigenvalue
    )];
    notes.extend(r.levy.problems.iter().cloned());
    Ok(Outcome { text: out, pass, notes })
}

pub fn propagate(cfg: &RunConfig) -> Result<Outcome> {
    let mut cfg = cfg.clone();
    let model = load_model(&cfg)?;
    let state = resolve_state(&mut cfg, &model)?;
    let times = resolve_times(&mut cfg, &[1.0])?;
    let probes = resolve_probes(&mut cfg, model.d(), 4.0)?;
    let radius = probes.iter().map(vnorm).fold(0.0, f64::max);
    let mut out = header_block(&cfg, "propagate");
    out.push_str(&format!("t,{},re,im\n", columns("xi", model.d())));
    let mut pass = true;
    let mut notes = Vec::new();
    for &t in &times {
        let field = CumulantField::new(&model, t, radius)?;
        let chi = |xi: &DVector<f64>| field.f(xi) * state.cf(&field.transport(xi));
        let mut worst: f64 = 0.0;
        for xi in &probes {
            let v = chi(xi);
            worst = worst.max(v.norm());
            out.push_str(&format!("{},{},{},{}\n", f(t), join(xi.iter().copied()), f(v.re), f(v.im)));
        }
        let origin = chi(&DVector::zeros(model.d()));
        let pd_points: Vec<_> = probes.iter().take(24).cloned().collect();
        let pd = twisted_pd_min_eigenvalue(chi, &pd_points, model.dims);
        let ok = (origin - Complex::new(1.0, 0.0)).norm() <= 1e-12 && worst <= 1.0 + 1e-12 && pd >= -1e-8;
        notes.push(format!("t = {t}: χ(0) = {:.3e}{:+.3e}i, max|χ| = {worst:.6}, twisted PD min eigenvalue = {pd:.3e}", origin.re, origin.im));
        pass &= ok;
    }
    Ok(Outcome { text: out, pass, notes })
}

pub fn wigner(cfg: &RunConfig) -> Result<Outcome> {
    let mut cfg = cfg.clone();
    let model = load_model(&cfg)?;
    let state = resolve_state(&mut cfg, &model)?;
    let times = resolve_times(&mut cfg, &[1.0])?;
    if times.len() != 1 {
        bail!("wigner takes a single time");
    }
    let t = times[0];
    let d = model.d();
    let count = *cfg.grid.count.get_or_insert(default_grid_count(d));
    if cfg.grid.points.is_some() {
        bail!("grid.points does not apply to wigner; use grid.count and grid.half_width");
    }
    let hw = match &cfg.grid.half_width {
        Some(h) => h.clone(),
        None => {
            // Only the Gaussian noise makes χ decay; jumps bound it by 1.
            let probe = CumulantField::new(&model.gaussian_part(), t, 1.0)?;
            let log_chi = |xi: &DVector<f64>| probe.psi(xi) + state.log_cf(&probe.transport(xi));
            let c = quadratic_form_at_zero(log_chi, d, 1e-3);
            let Some(cinv) = c.clone().try_inverse() else {
                bail!("degenerate law; set grid.half_width");
            };
            let mut hw = Vec::with_capacity(d);
            for i in 0..d {
                if !(c[(i, i)] > 0.0 && cinv[(i, i)] > 0.0) {
                    bail!("no spread along axis {}; set grid.half_width", i + 1);
                }
                // The maximum of a Gaussian over the face ξ_i = w.
                let mut w = (2.0 * EDGE_DECAY * cinv[(i, i)]).sqrt();
                for _ in 0..12 {
                    let far = CumulantField::new(&model, t, w)?;
                    let mut e = DVector::zeros(d);
                    e[i] = w;
                    if (far.psi(&e) + state.log_cf(&far.transport(&e))).re <= -EDGE_DECAY {
                        break;
                    }
                    w *= 1.25;
                }
                // The last point of the axis sits at (N/2 − 1)·step.
                hw.push(w * count as f64 / (count as f64 - 2.0).max(1.0));
            }
            hw
        }
    };
    if hw.len() != d {
        bail!("grid.half_width: {} entries, expected {d}", hw.len());
    }
    cfg.grid.half_width = Some(hw.clone());
    let axes: Vec<GridAxis<f64>> = hw.iter().map(|w| GridAxis::spanning(*w, count)).collect();
    let center = mean_evolution(&model, &state.mean, t)?;
    let radius = axes.iter().fold(0.0f64, |r, a| r.hypot(a.step * (a.count / 2) as f64));
    let field = CumulantField::new(&model, t, radius)?;
    let cf = GridCF::sample(axes, |xi| field.f(xi) * state.cf(&field.transport(xi)))?;
    let w = wigner_from_cf(&cf, center.as_slice())?;
    let integral = w.integral();
    let peak = w.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let boundary = w.boundary_max() / peak;
    let pass = w.warnings.is_empty() && (integral - 1.0).abs() <= 1e-6 && boundary <= 1e-6;
    let mut notes = vec![format!(
        "integral = {integral:.12}, min = {:.3e}, negative mass = {:.3e}, edge |χ| = {:.3e}, boundary/peak = {boundary:.3e}",
        w.min_value(),
        w.negative_mass(),
        w.edge_magnitude
    )];
    notes.extend(w.warnings.iter().cloned());
    if boundary > 1e-6 {
        notes.push("density has not decayed on the grid boundary; increase grid.count".into());
    }
    let text = w.to_csv(&cfg.header("wigner"));
    Ok(Outcome { text, pass, notes })
}

pub fn equilibrium(cfg: &RunConfig) -> Result<Outcome> {
    let mut cfg = cfg.clone();
    let model = load_model(&cfg)?;
    let d = model.d();
    let probes = resolve_probes(&mut cfg, d, 4.0)?;
    let radius = probes.iter().map(vnorm).fold(1.0, f64::max);
    let field = EquilibriumField::new(&model, radius)?;
    let gauss = EquilibriumField::new(&model.gaussian_part(), 1.0)?;
    let cov = quadratic_form_at_zero(|xi| gauss.psi(xi), d, 1.0);
    let mut out = header_block(&cfg, "equilibrium");
    for i in 0..d {
        out.push_str(&format!("# gaussian covariance row {}: {}\n", i + 1, join(cov.row(i).iter().copied())));
    }
    let adm = quantum_admissibility(&cov, &model.sigma, 1e-8);
    out.push_str(&format!("# uncertainty min eigenvalue: {}\n", f(adm.min_eigenvalue)));
    out.push_str(&format!("{},re_psi,im_psi,re_cf,im_cf\n", columns("xi", d)));
    let mut worst: f64 = 0.0;
    for xi in &probes {
        let p = field.psi(xi);
        let c = p.exp();
        worst = worst.max(p.re);
        out.push_str(&format!("{},{},{},{},{}\n", join(xi.iter().copied()), f(p.re), f(p.im), f(c.re), f(c.im)));
    }
    let pass = adm.pass && worst <= 1e-12;
    let notes = vec![format!("max Re Ψ∞ = {worst:.3e}, uncertainty min eigenvalue = {:.3e}", adm.min_eigenvalue)];
    Ok(Outcome { text: out, pass, notes })
}

pub fn sample(cfg: &RunConfig, seed_flag: Option<u64>) -> Result<Outcome> {
    let mut cfg = cfg.clone();
    let model = load_model(&cfg)?;
    let cl = if model.dims.n > 0 { reduce_classical(&model)? } else { model.clone() };
    let s = cl.dims.s;
    let sp = &mut cfg.sampler;
    if let Some(seed) = seed_flag {
        sp.seed = Some(seed);
    }
    let seed = *sp.seed.get_or_insert(0);
    let npaths = *sp.npaths.get_or_insert(10_000);
    let nsteps = *sp.nsteps.get_or_insert(100);
    let t_final = *sp.t_final.get_or_insert(1.0);
    let npoints = *sp.ecf_points.get_or_insert(9);
    let khw = *sp.ecf_half_width.get_or_insert(1.0);
    let mean = match &sp.initial_mean {
        Some(m) => vector("sampler.initial_mean", m, s)?,
        None => DVector::zeros(s),
    };
    let initial = match &sp.initial_cov {
        Some(c) => InitialLaw::Gaussian { mean, cov: matrix("sampler.initial_cov", c, s)? },
        None => InitialLaw::Point(mean),
    };
    if npaths == 0 || nsteps == 0 || !(t_final > 0.0) || npoints < 2 {
        bail!("sampler needs npaths, nsteps ≥ 1, t_final > 0 and ecf_points ≥ 2");
    }
    let ens = sample_ou_paths(&cl, &initial, t_final, nsteps, npaths, seed)?;
    let header = cfg.header("sample");
    if let Some(p) = &cfg.sampler.paths_csv {
        std::fs::write(p, ens.to_csv(&header)).with_context(|| format!("writing {p}"))?;
    }
    if let Some(p) = &cfg.sampler.paths_bin {
        let file = std::fs::File::create(p).with_context(|| format!("writing {p}"))?;
        ens.write_binary(std::io::BufWriter::new(file))?;
    }
    let last = ens.ntimes - 1;
    let st = propagator(&cl.z, t_final);
    let dt = t_final / nsteps as f64;
    let threshold = 5.0 / (npaths as f64).sqrt() + 2.0 * dt * cl.triplet.nu.total_mass();
    let mut out = header_block(&cfg, "sample");
    out.push_str(&format!("# threshold: {}\n", f(threshold)));
    out.push_str(&format!("{},re_ecf,im_ecf,re_exact,im_exact,abs_err\n", columns("k", s)));
    let mut worst: f64 = 0.0;
    let mut ks = vec![DVector::zeros(s)];
    for i in 0..s {
        for j in 0..npoints {
            let v = -khw + 2.0 * khw * j as f64 / (npoints - 1) as f64;
            if v != 0.0 {
                let mut k = DVector::zeros(s);
                k[i] = v;
                ks.push(k);
            }
        }
    }
    for k in &ks {
        let e = ens.empirical_cf(last, k)?;
        let exact = capital_psi(&cl, t_final, k)?.exp() * initial.cf(&(&st * k));
        let err = (e - exact).norm();
        worst = worst.max(err);
        out.push_str(&format!("{},{},{},{},{},{}\n", join(k.iter().copied()), f(e.re), f(e.im), f(exact.re), f(exact.im), f(err)));
    }
    out.push_str(&format!("# max_abs_err: {}\n", f(worst)));
    let pass = worst <= threshold;
    let notes = vec![format!(
        "{}: max |ECF − exact| = {worst:.3e} against {threshold:.3e} ({npaths} paths, {nsteps} steps)",
        if pass { "PASS" } else { "FAIL" }
    )];
    Ok(Outcome { text: out, pass, notes })
}

fn region(b: &BoxSpec, s: usize) -> Result<Region<f64>> {
    Ok(Region::new(vector("instrument.boxes.lower", &b.lower, s)?, vector("instrument.boxes.upper", &b.upper, s)?)?)
}

pub fn instrument(cfg: &RunConfig) -> Result<Outcome> {
    let mut cfg = cfg.clone();
    let model = load_model(&cfg)?;
    let dims = model.dims;
    if dims.n == 0 || dims.s == 0 {
        bail!("instrument needs both a quantum and a classical component");
    }
    let (q, s) = (dims.q(), dims.s);
    let state = resolve_state(&mut cfg, &model)?;
    let ins = &mut cfg.instrument;
    let times = ins.times.get_or_insert_with(|| vec![0.5, 1.0]).clone();
    let ks_raw = ins.ks.get_or_insert_with(|| vec![vec![0.5; s]; times.len()]).clone();
    let zeta = vector("instrument.zeta", ins.zeta.get_or_insert_with(|| vec![0.0; q]), q)?;
    let t = *ins.t.get_or_insert(*times.last().unwrap());
    let x = vector("instrument.x", ins.x.get_or_insert_with(|| state.mean.rows(q, s).iter().copied().collect()), s)?;
    if ins.boxes.is_empty() {
        ins.boxes.push(BoxSpec { lower: x.iter().map(|v| v - 1.0).collect(), upper: x.iter().map(|v| v + 1.0).collect() });
    }
    let zetas_raw = ins.zetas.get_or_insert_with(|| vec![vec![0.0; q]]).clone();
    let ks = ks_raw.iter().enumerate().map(|(i, k)| vector(&format!("instrument.ks[{i}]"), k, s)).collect::<Result<Vec<_>>>()?;
    let zetas = zetas_raw.iter().enumerate().map(|(i, z)| vector(&format!("instrument.zetas[{i}]"), z, q)).collect::<Result<Vec<_>>>()?;
    let boxes = cfg.instrument.boxes.iter().map(|b| region(b, s)).collect::<Result<Vec<_>>>()?;

    let mut out = header_block(&cfg, "instrument");
    let mut notes = Vec::new();
    let mut pass = true;

    let mt = instruments::multi_time_cf(&model, &state, &times, &ks, &zeta)?;
    out.push_str(&format!("# multi_time_cf: {},{}\n", f(mt.re), f(mt.im)));
    let probe_ks: Vec<_> = ks.iter().cloned().chain(std::iter::once(DVector::zeros(s))).collect();
    let comp = instruments::composition_check(&model, times[0], t, &probe_ks, &zeta)?;
    out.push_str(&format!("# composition_residual: {}\n", f(comp)));
    notes.push(format!("multi-time CF = {:.6}{:+.6}i, |Γ_t∘Γ_t' − Γ_(t+t')| = {comp:.3e}", mt.re, mt.im));
    pass &= comp <= 1e-9 && mt.norm() <= 1.0 + 1e-12;

    let rho0 = state.quantum_marginal(dims);
    let settings = ConditioningSettings::default();
    out.push_str(&format!("box,{},{},probability,raw,edge\n", columns("lower", s), columns("upper", s)));
    let mut probs = Vec::new();
    for (i, b) in boxes.iter().enumerate() {
        let p = instruments::conditional_probability(&model, &rho0, t, b, &x, &settings)?;
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            i + 1,
            join(b.lower.iter().copied()),
            join(b.upper.iter().copied()),
            f(p.value),
            f(p.raw),
            f(p.edge_magnitude)
        ));
        pass &= p.raw >= -1e-8 && p.raw <= 1.0 + 1e-8;
        notes.push(format!("box {}: P = {:.10}", i + 1, p.value));
        probs.push(p.value);
    }
    out.push_str(&format!("box,{},re,im\n", columns("zeta", q)));
    for (i, b) in boxes.iter().enumerate() {
        if probs[i] < PROBABILITY_THRESHOLD {
            notes.push(format!("box {}: probability below {PROBABILITY_THRESHOLD:e}, conditional state skipped", i + 1));
            continue;
        }
        let vals = instruments::conditional_state_cfs(&model, &rho0, t, b, &x, &zetas, &settings)?;
        for (z, v) in zetas.iter().zip(vals) {
            out.push_str(&format!("{},{},{},{}\n", i + 1, join(z.iter().copied()), f(v.re), f(v.im)));
            pass &= v.norm() <= 1.0 + 1e-6;
            if z.iter().all(|c| *c == 0.0) {
                pass &= (v - Complex::new(1.0, 0.0)).norm() <= 1e-8;
            }
        }
    }
    Ok(Outcome { text: out, pass, notes })
}

pub fn export(cfg: &RunConfig) -> Result<Outcome> {
    let spec = model_spec(cfg)?;
    let text = model_file_string(&spec)?;
    let back = parse_model_file(&text)?;
    let pass = back == spec;
    let mut head = header_block(cfg, "export");
    head.push_str(&text);
    Ok(Outcome { text: head, pass, notes: vec![format!("model n = {}, s = {}", spec.n, spec.s)] })
}
