use std::f64::consts::TAU;
use std::sync::Arc;

use serde_json::json;

use super::{num, svg, BudgetArgs, Command, CurveArgs, Outcome, SamplingArgs, SpaceArgs, Table, TorusArgs};
use crate::cycle_spectra::{bisect_balls, volume_spectrum_scaling, zero_set_length, Ball, BisectParams, FunctionBasis, ScalingParams};
use crate::error::{invalid, Error, Result};
use crate::extremal::{exact_oracle_1d, max_packing_radius, packing_constant_fit, Budget};
use crate::geometry::{
    crossing_linking_number, equator, ff_project, gauss_linking_integral, gauss_map_degree, gehring_check, linking_number, read_polylines,
    sweepout_waist_upper, tube_volume, Polyline, TubeAmbient, WaistParams,
};
use crate::laplace::{arcs_from_lengths, laplace_spectrum, localization_check, random_arc_partition, weyl_fit};
use crate::model_spaces::{loewner_ratio, reduced_form_minimum, torus_systole, FlatTorus, ModelSpace, Point};
use crate::packing::separation;
use crate::rng;
use crate::spectra::{packing_spectrum, spectral_surface, SpectrumParams, TrackedClass};

fn floats(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<f64>().map_err(|e| Error::InvalidInput(format!("{t:?}: {e}"))))
        .collect()
}

fn counts(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<usize>().map_err(|e| Error::InvalidInput(format!("{t:?}: {e}"))))
        .collect()
}

pub(super) fn build_space(a: &SpaceArgs) -> Result<ModelSpace> {
    match a.space.as_str() {
        "circle" => ModelSpace::circle(a.len),
        "interval" => ModelSpace::interval(a.len),
        "hex" => ModelSpace::hexagonal_torus(a.area),
        "torus" => match &a.basis {
            Some(b) => ModelSpace::torus(b.split(';').map(floats).collect::<Result<Vec<_>>>()?),
            None => Ok(ModelSpace::FlatTorus(FlatTorus::rectangular(&floats(&a.sides)?)?)),
        },
        "box" => ModelSpace::cube(floats(&a.sides)?),
        "sphere" => ModelSpace::sphere(a.sphere_dim),
        other => invalid(format!("unknown space {other}")),
    }
}

fn torus_of(a: &TorusArgs) -> Result<FlatTorus> {
    if a.space != "torus" && a.space != "hex" {
        return invalid(format!("expected torus or hex, got {}", a.space));
    }
    let full = SpaceArgs { space: a.space.clone(), len: 1.0, sides: a.sides.clone(), basis: a.basis.clone(), area: a.area, sphere_dim: 2 };
    match build_space(&full)? {
        ModelSpace::FlatTorus(t) if t.dim() == 2 => Ok(t),
        other => invalid(format!("needs a flat 2-torus, got {}", other.name())),
    }
}

fn spectrum_params(s: &SamplingArgs, seed: u64) -> SpectrumParams {
    SpectrumParams {
        samples: s.samples,
        mcmc_steps: s.mcmc_steps,
        landmarks: s.landmarks,
        eps_factor: s.eps_factor,
        max_dim: s.max_dim,
        hard_core: s.hard_core,
        hard_core_frac: s.hard_core_frac,
        seed,
    }
}

fn budget(b: &BudgetArgs) -> Budget {
    Budget { restarts: b.restarts, iterations: b.iterations }
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<serde_json::Value> {
    serde_json::to_value(v).map_err(|e| Error::InvalidInput(e.to_string()))
}

fn link_pair(c: &CurveArgs) -> Result<(Polyline, Polyline)> {
    let mut w = read_polylines(&c.w)?;
    match &c.wprime {
        Some(p) => {
            let mut wp = read_polylines(p)?;
            if w.len() != 1 || wp.len() != 1 {
                return invalid("each curve file must hold one component");
            }
            Ok((w.remove(0), wp.remove(0)))
        }
        None if w.len() == 2 => {
            let b = w.remove(1);
            Ok((w.remove(0), b))
        }
        None => invalid("give --wprime or a file with exactly two components"),
    }
}

/// A bisection that misses its residual tolerance is a failed check, not bad
/// input: report it with exit code 2.
fn tolerance_miss(r: Result<Outcome>) -> Result<Outcome> {
    match r {
        Err(Error::SearchFailure(msg)) => Ok(Outcome {
            summary: msg.clone(),
            results: json!({ "error": msg.clone() }),
            failure: Some(msg),
            ..Default::default()
        }),
        other => other,
    }
}

pub(super) fn execute(cmd: &Command) -> Result<Outcome> {
    match cmd {
        Command::Zerosets { .. } | Command::Bisect { .. } => tolerance_miss(run_command(cmd)),
        _ => run_command(cmd),
    }
}

fn run_command(cmd: &Command) -> Result<Outcome> {
    match cmd {
        Command::Spectra { space, sampling, n, quotient, common } => {
            let sp = Arc::new(build_space(space)?);
            let r = packing_spectrum(&sp, *n, *quotient, &spectrum_params(sampling, common.seed))?;
            let mut bars = Table::new("barcode", &["dim", "birth", "death"]);
            for iv in &r.barcode.intervals {
                bars.rows.push(vec![iv.dim.to_string(), num(iv.birth), num(iv.death)]);
            }
            let mut spec = Table::new("spectrum", &["energy", "radius"]);
            for (e, rad) in r.spectrum.iter().zip(&r.radii) {
                spec.rows.push(vec![num(*e), num(*rad)]);
            }
            let births: Vec<String> = (0..sampling.max_dim)
                .map(|d| {
                    let radii: Vec<String> = r.essential_births(d).iter().map(|b| format!("{:.4}", -b / 2.0)).collect();
                    format!("H{d} [{}]", radii.join(", "))
                })
                .collect();
            Ok(Outcome {
                summary: format!("{} intervals; essential births as packing radii: {}", r.barcode.intervals.len(), births.join(", ")),
                figures: vec![("barcode".into(), svg::barcode(&r.barcode, "barcode of the packing energy"))],
                results: to_json(&r)?,
                tables: vec![bars, spec],
                failure: None,
            })
        }
        Command::Surface { space, sampling, n, pairs, class, lo, hi, steps, common } => {
            let sp = Arc::new(build_space(space)?);
            let pairs: Vec<(usize, usize)> = pairs
                .split(',')
                .map(|p| {
                    let (a, b) = p.trim().split_once('-').ok_or_else(|| Error::InvalidInput(format!("pair {p:?}: expected a-b")))?;
                    let parse = |x: &str| x.trim().parse::<usize>().map_err(|e| Error::InvalidInput(format!("pair {p:?}: {e}")));
                    Ok((parse(a)?, parse(b)?))
                })
                .collect::<Result<_>>()?;
            let parts: Vec<&str> = class.split(':').collect();
            let parse = |x: &str| x.parse::<usize>().map_err(|e| Error::InvalidInput(format!("class {class:?}: {e}")));
            let tracked = match parts.as_slice() {
                ["all", d] => TrackedClass::AllEssential { dim: parse(d)? },
                ["essential", d, i] => TrackedClass::Essential { dim: parse(d)?, index: parse(i)? },
                _ => return invalid(format!("class {class:?}: expected all:DIM or essential:DIM:INDEX")),
            };
            if *steps < 2 || !(lo < hi) {
                return invalid("need lo < hi and at least two steps");
            }
            let axis: Vec<f64> = (0..*steps).map(|k| lo + (hi - lo) * k as f64 / (*steps - 1) as f64).collect();
            let axes = vec![axis; pairs.len()];
            let g = spectral_surface(&sp, *n, &pairs, tracked, &axes, &spectrum_params(sampling, common.seed))?;
            let mut header: Vec<String> = (0..pairs.len()).map(|k| format!("e{k}")).collect();
            header.push("vanishes".into());
            let mut t = Table { name: "surface".into(), header, rows: Vec::new() };
            let shape = g.shape();
            let total: usize = shape.iter().product();
            for flat in 0..total {
                let mut idx = vec![0; shape.len()];
                let mut rest = flat;
                for k in (0..shape.len()).rev() {
                    idx[k] = rest % shape[k];
                    rest /= shape[k];
                }
                let mut row: Vec<String> = idx.iter().zip(&g.axes).map(|(&i, ax)| num(ax[i])).collect();
                row.push(u8::from(g.get(&idx)).to_string());
                t.rows.push(row);
            }
            let crossing = g.diagonal_crossing();
            let mut figures = Vec::new();
            if let Some(s) = svg::surface_heatmap(&g, "vanishing region of the tracked class") {
                figures.push(("surface".into(), s));
            }
            Ok(Outcome {
                summary: format!("{} grid points, diagonal crossing {:?}", total, crossing),
                results: json!({ "grid": to_json(&g)?, "diagonal_crossing": crossing }),
                tables: vec![t],
                figures,
                failure: None,
            })
        }
        Command::Rmax { space, n, budget: b, common } => {
            let sp = Arc::new(build_space(space)?);
            let r = max_packing_radius(&sp, *n, budget(b), common.seed)?;
            let oracle = exact_oracle_1d(&sp, *n).ok();
            let mut pts = Table::new("centres", &["index", "coordinates"]);
            for (i, p) in r.config.points().iter().enumerate() {
                pts.rows.push(vec![i.to_string(), p.coords().iter().map(|x| num(*x)).collect::<Vec<_>>().join(" ")]);
            }
            let mut trace = Table::new("restarts", &["restart", "radius", "best_so_far"]);
            for (k, (r1, b1)) in r.trace.per_restart.iter().zip(&r.trace.best_so_far).enumerate() {
                trace.rows.push(vec![k.to_string(), num(*r1), num(*b1)]);
            }
            Ok(Outcome {
                summary: format!("r_max({}, N={n}) = {:.12}{}", sp.name(), r.radius, oracle.map_or(String::new(), |o| format!(" (exact {o:.12})"))),
                results: json!({
                    "radius": r.radius,
                    "separation": separation(&r.config)?,
                    "exact": oracle,
                    "centres": r.config.points().iter().map(Point::coords).collect::<Vec<_>>(),
                    "trace": to_json(&r.trace)?,
                }),
                tables: vec![pts, trace],
                figures: Vec::new(),
                failure: None,
            })
        }
        Command::Packconst { space, ns, budget: b, common } => {
            let sp = Arc::new(build_space(space)?);
            let fit = packing_constant_fit(&sp, &counts(ns)?, budget(b), common.seed)?;
            let mut t = Table::new("packing", &["n", "radius", "normalized"]);
            for row in &fit.table {
                t.rows.push(vec![row.n.to_string(), num(row.radius), num(row.normalized)]);
            }
            let pts: Vec<(f64, f64)> = fit.table.iter().map(|r| (r.n as f64, r.radius)).collect();
            let dim = sp.dim() as f64;
            let pref = (fit.constant * sp.volume()).powf(1.0 / dim);
            Ok(Outcome {
                summary: format!("packing constant {:.6} (monotone radii: {})", fit.constant, fit.monotone),
                figures: vec![("packing".into(), svg::loglog(&pts, -1.0 / dim, pref, "r_max against N", "N", "r"))],
                results: to_json(&fit)?,
                tables: vec![t],
                failure: None,
            })
        }
        Command::Zerosets { space, ns, grid, budget: b, tol, starts, common } => {
            let torus = torus_of(space)?;
            let params = ScalingParams { grid: *grid, budget: budget(b), bisect: BisectParams { tol: *tol, starts: *starts, seed: 0 }, seed: common.seed };
            let vs = volume_spectrum_scaling(&torus, &counts(ns)?, &params)?;
            let mut t = Table::new("zerosets", &["n", "k", "ball_radius", "length", "waist_bound", "normalized", "max_residual"]);
            for r in &vs.rows {
                t.rows.push(vec![
                    r.n.to_string(),
                    r.k.to_string(),
                    num(r.ball_radius),
                    num(r.length),
                    num(r.waist_bound),
                    num(r.normalized),
                    num(r.max_residual),
                ]);
            }
            let worst = vs.rows.iter().map(|r| r.max_residual).fold(0.0, f64::max);
            let pts: Vec<(f64, f64)> = vs.rows.iter().map(|r| (r.n as f64, r.length)).collect();
            Ok(Outcome {
                summary: format!("exponent {:.4}, prefactor {:.4}, worst residual {worst:.2e}", vs.exponent, vs.prefactor),
                figures: vec![("zerosets".into(), svg::loglog(&pts, vs.exponent, vs.prefactor, "zero-set length against N", "N", "length"))],
                results: to_json(&vs)?,
                tables: vec![t],
                failure: (worst > *tol).then(|| format!("bisection residual {worst:.3e} above {tol}")),
            })
        }
        Command::Bisect { space, n, grid, budget: b, tol, starts, common } => {
            let torus = torus_of(space)?;
            let sp = Arc::new(ModelSpace::FlatTorus(torus.clone()));
            let balls: Vec<Ball> = if *n == 1 {
                vec![Ball { center: Point::new(vec![0.0, 0.0]), radius: sp.injectivity_radius() }]
            } else {
                let p = max_packing_radius(&sp, *n, budget(b), rng::child_seed(common.seed, "bisect/packing", 0))?;
                p.config.points().iter().map(|c| Ball { center: c.clone(), radius: p.radius }).collect()
            };
            let basis = FunctionBasis::trigonometric(torus, n + 1, *grid)?;
            let params = BisectParams { tol: *tol, starts: *starts, seed: rng::child_seed(common.seed, "bisect/search", 0) };
            let cut = bisect_balls(&basis, &balls, &params)?;
            let length = zero_set_length(&basis.combine(&cut.coeffs)?)?;
            let mut t = Table::new("balls", &["index", "center_0", "center_1", "radius", "residual"]);
            for (i, (bl, r)) in balls.iter().zip(&cut.residuals).enumerate() {
                let c = bl.center.coords();
                t.rows.push(vec![i.to_string(), num(c[0]), num(c[1]), num(bl.radius), num(*r)]);
            }
            let worst = cut.max_residual();
            Ok(Outcome {
                summary: format!("zero-set length {length:.6}, worst residual {worst:.2e}"),
                results: json!({ "length": length, "bisection": to_json(&cut)?, "balls": to_json(&balls)? }),
                tables: vec![t],
                figures: Vec::new(),
                failure: (worst > *tol).then(|| format!("bisection residual {worst:.3e} above {tol}")),
            })
        }
        Command::Laplace { space, m, k, .. } => {
            let sp = build_space(space)?;
            let s = laplace_spectrum(&sp, *m, *k)?;
            let mut t = Table::new("eigenvalues", &["index", "eigenvalue"]);
            for (i, e) in s.eigenvalues.iter().enumerate() {
                t.rows.push(vec![i.to_string(), num(*e)]);
            }
            Ok(Outcome {
                summary: format!("first eigenvalues {:?}", &s.eigenvalues[..s.eigenvalues.len().min(6)]),
                results: to_json(&s)?,
                tables: vec![t],
                figures: Vec::new(),
                failure: None,
            })
        }
        Command::Localize { len, m, lengths, partitions, max_pieces, common } => {
            let sp = ModelSpace::circle(*len)?;
            let parts = match lengths {
                Some(l) => vec![arcs_from_lengths(*len, *m, &floats(l)?)?],
                None => {
                    if *max_pieces < 2 {
                        return invalid("max-pieces must be at least 2");
                    }
                    let mut r = rng::stream(common.seed, "localize", 0);
                    (0..*partitions).map(|k| random_arc_partition(*m, 2 + k % (max_pieces - 1), &mut r)).collect::<Result<Vec<_>>>()?
                }
            };
            let mut t = Table::new("localization", &["partition", "n", "e_n", "min_e1", "ratio", "pass"]);
            let mut reports = Vec::new();
            for (k, p) in parts.iter().enumerate() {
                let rep = localization_check(&sp, *m, p)?;
                t.rows.push(vec![k.to_string(), rep.n.to_string(), num(rep.e_n), num(rep.min_e1), num(rep.e_n / rep.min_e1), u8::from(rep.pass).to_string()]);
                reports.push(rep);
            }
            let failed = reports.iter().filter(|r| !r.pass).count();
            Ok(Outcome {
                summary: format!("{} partitions, {failed} failing", reports.len()),
                results: json!({ "reports": to_json(&reports)?, "failures": failed }),
                tables: vec![t],
                figures: Vec::new(),
                failure: (failed > 0).then(|| format!("{failed} partitions violate e_N >= min e_1")),
            })
        }
        Command::Weyl { space, m, e_lo, e_hi, .. } => {
            let sp = build_space(space)?;
            let fit = weyl_fit(&sp, *m, *e_lo, *e_hi)?;
            let mut t = Table::new("counts", &["e", "count"]);
            for (e, c) in &fit.counts {
                t.rows.push(vec![num(*e), c.to_string()]);
            }
            let pts: Vec<(f64, f64)> = fit.counts.iter().filter(|c| c.1 > 0).map(|&(e, c)| (e, c as f64)).collect();
            let n = sp.dim() as f64;
            Ok(Outcome {
                summary: format!("exponent {:.4} (Weyl {:.1}), prefactor {:.5} (Weyl {:.5})", fit.exponent, n / 2.0, fit.prefactor, fit.weyl_prefactor),
                figures: vec![("weyl".into(), svg::loglog(&pts, n / 2.0, fit.prefactor, "eigenvalue counting function", "e", "N(e)"))],
                results: to_json(&fit)?,
                tables: vec![t],
                failure: None,
            })
        }
        Command::Linking { curves, .. } => {
            let (w, wp) = link_pair(curves)?;
            let lk = linking_number(&w, &wp)?;
            let results = json!({
                "linking_number": lk,
                "gauss_integral": gauss_linking_integral(&w, &wp),
                "crossing_count": crossing_linking_number(&w, &wp)?,
                "gauss_map_degree": gauss_map_degree(&w, &wp)?,
            });
            let degree = results["gauss_map_degree"].as_i64();
            Ok(Outcome {
                summary: format!("linking number {lk}, Gauss map degree {}", degree.unwrap_or_default()),
                failure: (degree != Some(lk)).then(|| "Gauss map degree differs from the linking number".to_string()),
                results,
                ..Default::default()
            })
        }
        Command::Gehring { curves, .. } => {
            let (w, wp) = link_pair(curves)?;
            let rep = gehring_check(&w, &wp)?;
            Ok(Outcome {
                summary: format!("length {:.6} vs 2 pi d = {:.6} (tolerance {:.2e}): {}", rep.length, rep.bound, rep.tolerance, if rep.pass { "pass" } else { "FAIL" }),
                failure: (!rep.pass).then(|| format!("length {} below 2 pi d = {}", rep.length, rep.bound)),
                results: to_json(&rep)?,
                ..Default::default()
            })
        }
        Command::Ff { curve, cell, cell_factor, .. } => {
            let curves = read_polylines(curve)?;
            let length: f64 = curves.iter().map(Polyline::length).sum();
            let cell = cell.unwrap_or(cell_factor * length);
            let p = ff_project(&curves, cell)?;
            let mut t = Table::new("image", &["component", "x", "y"]);
            for (k, path) in p.paths.iter().enumerate() {
                for q in path {
                    t.rows.push(vec![k.to_string(), num(q[0]), num(q[1])]);
                }
            }
            let original: Vec<Vec<[f64; 2]>> = curves.iter().map(|c| c.vertices().iter().map(|v| [v[0], v[1]]).collect()).collect();
            Ok(Outcome {
                summary: format!("sup displacement {:.6} = {:.4} x length, {} cells", p.sup_displacement, p.ratio, p.cells_touched),
                figures: vec![("ff".into(), svg::curves(&original, &p.paths, cell, "curve and its grid image"))],
                results: to_json(&p)?,
                tables: vec![t],
                failure: None,
            })
        }
        Command::Tubes { curve, preset, ambient, deltas, samples, common } => {
            let (y, default_ambient) = match curve {
                Some(path) => {
                    let mut c = read_polylines(path)?;
                    if c.len() != 1 {
                        return invalid("tube curve file must hold one component");
                    }
                    (c.remove(0), TubeAmbient::Euclidean)
                }
                None => match preset.as_str() {
                    "equator" => (equator(8)?, TubeAmbient::Sphere),
                    "circle" => (crate::geometry::polyline::circle_polygon([0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 1.0, 256)?, TubeAmbient::Euclidean),
                    other => return invalid(format!("unknown preset {other}")),
                },
            };
            let amb = match ambient.as_deref() {
                None => default_ambient,
                Some("sphere") => TubeAmbient::Sphere,
                Some("euclidean") => TubeAmbient::Euclidean,
                Some(other) => return invalid(format!("unknown ambient {other}")),
            };
            let mut t = Table::new("tubes", &["delta", "volume", "std_error", "mink", "mink_std_error"]);
            let mut est = Vec::new();
            for (k, d) in floats(deltas)?.into_iter().enumerate() {
                let e = tube_volume(&y, amb, d, *samples, rng::child_seed(common.seed, "tubes", k as u64))?;
                t.rows.push(vec![num(e.delta), num(e.volume), num(e.std_error), num(e.mink), num(e.mink_std_error)]);
                est.push(e);
            }
            Ok(Outcome {
                summary: est.iter().map(|e| format!("delta {}: vol {:.6} +- {:.1e}, Mink {:.6}", e.delta, e.volume, e.std_error, e.mink)).collect::<Vec<_>>().join("\n"),
                results: to_json(&est)?,
                tables: vec![t],
                ..Default::default()
            })
        }
        Command::Waist { search_level, mesh_level, restarts, radius, iterations, common } => {
            let params = WaistParams { search_level: *search_level, mesh_level: *mesh_level, restarts: *restarts, radius: *radius, iterations: *iterations, seed: common.seed };
            let w = sweepout_waist_upper(&params)?;
            let lower = TAU - 0.02;
            Ok(Outcome {
                summary: format!("min-max level length {:.6} = {:.5} x 2 pi", w.min_max, w.ratio),
                failure: (w.min_max < lower).then(|| format!("min-max {} below 2 pi - 0.02", w.min_max)),
                results: to_json(&w)?,
                ..Default::default()
            })
        }
        Command::Systole { space, gram, .. } => {
            let sp = ModelSpace::FlatTorus(torus_of(space)?);
            let sys = torus_systole(&sp)?;
            let ratio = loewner_ratio(&sp)?;
            let exact = match gram {
                Some(g) => {
                    let v: Vec<i64> = g
                        .split(',')
                        .map(|t| t.trim().parse::<i64>().map_err(|e| Error::InvalidInput(format!("gram {t:?}: {e}"))))
                        .collect::<Result<_>>()?;
                    let [a, b, c] = v[..] else { return invalid("gram needs three integers a,b,c") };
                    let (min, det) = reduced_form_minimum(a, b, c)?;
                    Some(json!({ "min": min.to_string(), "det": det.to_string(), "ratio_squared": format!("{}/{}", min * min, det), "ratio": (min as f64) / (det as f64).sqrt() }))
                }
                None => None,
            };
            Ok(Outcome {
                summary: format!("systole {sys:.15}, systole^2/area {ratio:.15} (hexagonal optimum {:.15})", 2.0 / 3f64.sqrt()),
                results: json!({ "systole": sys, "area": sp.volume(), "ratio": ratio, "hexagonal_optimum": 2.0 / 3f64.sqrt(), "exact": exact }),
                ..Default::default()
            })
        }
    }
}
