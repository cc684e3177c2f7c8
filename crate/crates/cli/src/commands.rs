use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rdseg_core::study::{STUDY_GAMMA, STUDY_GT_MAX_OUTER, STUDY_LAMBDA, STUDY_THETA};
use rdseg_core::{
    chan_vese_fitting, distance_selective_fitting, estimate_constants, generate, l2_difference,
    make_ground_truth, normalize_fitting, partition, run_sweep, solve_with_partition, tanimoto,
    threshold_indicator, time_saving, BinaryMask, GrayImage, IntensityPair, MarkerSet, ScalarField,
    SelectiveParams, SolverParams, SweepMode, SweepWriter, SynthKind, SynthSpec,
};

use crate::config::{FittingKind, RunConfig};
use crate::Failure;

pub struct SynthRequest {
    pub kind: SynthKind,
    pub width: usize,
    pub height: usize,
    pub noise_sigma: f64,
    pub seed: u64,
    pub out: PathBuf,
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Failure::Io(format!("cannot create {}: {e}", dir.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text)
        .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
}

fn write_pgm(path: &Path, width: usize, height: usize, pixels: Vec<u8>) -> Result<(), Failure> {
    GrayImage::new(width, height, pixels)?
        .write(path)
        .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
}

fn read_pgm(path: &Path) -> Result<GrayImage, Failure> {
    GrayImage::read(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

/// Image, truth mask, markers (concave only) and a config that runs the
/// synthetic study settings on them.
pub fn synth(req: &SynthRequest) -> Result<(), Failure> {
    let img = generate(&SynthSpec {
        kind: req.kind,
        width: req.width,
        height: req.height,
        noise_sigma: req.noise_sigma,
        seed: req.seed,
    })?;
    create_dir(&req.out)?;
    let name = req.kind.name();
    let image = format!("{name}.pgm");
    write_pgm(
        &req.out.join(&image),
        req.width,
        req.height,
        img.image.pixels.clone(),
    )?;
    write_pgm(
        &req.out.join(format!("{name}_truth.pgm")),
        req.width,
        req.height,
        img.truth.to_gray(),
    )?;

    let mut conf = String::new();
    writeln!(
        conf,
        "# {name}, {}x{}, noise {}, seed {}",
        req.width, req.height, req.noise_sigma, req.seed
    )
    .unwrap();
    writeln!(conf, "image = {image}").unwrap();
    writeln!(conf, "c1 = {}", f64::from(img.hi) / 255.0).unwrap();
    writeln!(conf, "c2 = {}", f64::from(img.lo) / 255.0).unwrap();
    if let Some(markers) = &img.markers {
        let file = format!("{name}_markers.txt");
        write_text(&req.out.join(&file), &markers.to_text())?;
        writeln!(
            conf,
            "fitting = selective\nmarkers = {file}\ngamma = {STUDY_GAMMA}"
        )
        .unwrap();
    }
    writeln!(
        conf,
        "lambda = {STUDY_LAMBDA}\ntheta = {STUDY_THETA}\ngt_max_outer = {STUDY_GT_MAX_OUTER}"
    )
    .unwrap();
    write_text(&req.out.join(format!("{name}.conf")), &conf)?;
    println!(
        "wrote {name}.pgm, {name}_truth.pgm{} and {name}.conf to {}",
        if img.markers.is_some() {
            format!(", {name}_markers.txt")
        } else {
            String::new()
        },
        req.out.display()
    );
    Ok(())
}

fn fitting_term(cfg: &RunConfig) -> Result<ScalarField, Failure> {
    let image = read_pgm(&cfg.image_path)?;
    let z = image.to_field();
    let constants = match (cfg.constants, &cfg.mask_path) {
        (Some((c1, c2)), _) => IntensityPair::new(c1, c2)?,
        (None, Some(path)) => {
            let mask = read_mask(path)?;
            if (mask.width(), mask.height()) != (z.width(), z.height()) {
                return Err(Failure::Usage(format!(
                    "mask {} is {}x{}, image is {}x{}",
                    path.display(),
                    mask.width(),
                    mask.height(),
                    z.width(),
                    z.height()
                )));
            }
            estimate_constants(&z, &mask.to_field())?
        }
        (None, None) => unreachable!("config validation requires constants or a mask"),
    };
    let f = match cfg.fitting_kind {
        FittingKind::ChanVese => chan_vese_fitting(&z, constants),
        FittingKind::Selective => {
            let path = cfg.markers_path.as_ref().expect("validated");
            let markers = MarkerSet::read(path, z.width(), z.height())
                .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            distance_selective_fitting(&z, constants, &markers, SelectiveParams::new(cfg.gamma)?)?
        }
    };
    Ok(if cfg.normalize {
        normalize_fitting(&f)
    } else {
        f
    })
}

/// A 0/maxval PGM as a mask.
fn read_mask(path: &Path) -> Result<BinaryMask, Failure> {
    let img = read_pgm(path)?;
    if let Some(p) = img.pixels.iter().find(|&&p| p != 0 && p != img.maxval) {
        return Err(Failure::Usage(format!(
            "{} is not a binary mask (sample {p}, maxval {})",
            path.display(),
            img.maxval
        )));
    }
    Ok(BinaryMask::new(
        img.width,
        img.height,
        img.pixels.iter().map(|&p| p != 0).collect(),
    )?)
}

pub fn segment(cfg: &RunConfig, strict: bool) -> Result<(), Failure> {
    let f = fitting_term(cfg)?;
    create_dir(&cfg.output_dir)?;
    let start = Instant::now();
    let part = partition(&f, cfg.q)?;
    let (state, report) = solve_with_partition(&f, &cfg.params, &part)?;
    let wall = start.elapsed().as_secs_f64();

    let (w, h) = (f.width(), f.height());
    write_pgm(
        &cfg.output("u.pgm"),
        w,
        h,
        GrayImage::from_unit_field(&state.u).pixels,
    )?;
    let mask = threshold_indicator(&state.u, cfg.params.epsilon);
    write_pgm(&cfg.output("mask.pgm"), w, h, mask.to_gray())?;
    write_pgm(&cfg.output("partition.pgm"), w, h, part.to_gray())?;

    let mut text = String::new();
    writeln!(text, "image {}", cfg.image_path.display()).unwrap();
    writeln!(text, "size {w}x{h}").unwrap();
    writeln!(text, "q {}", cfg.q).unwrap();
    writeln!(text, "q_hat {}", part.q_hat()).unwrap();
    writeln!(text, "rd_fraction {}", part.rd_fraction()).unwrap();
    writeln!(text, "outer_iterations {}", report.outer_iterations).unwrap();
    writeln!(text, "final_residual {:e}", report.final_residual).unwrap();
    writeln!(text, "wall_time_s {wall:.6}").unwrap();
    writeln!(text, "energy {}", report.energy).unwrap();
    writeln!(text, "foreground_pixels {}", mask.count()).unwrap();
    writeln!(text, "converged {}", report.converged).unwrap();
    write_text(&cfg.output("report.txt"), &text)?;
    print!("{text}");

    if strict && !report.converged {
        return Err(Failure::NotConverged(format!(
            "no convergence within {} iterations (residual {:e})",
            cfg.params.max_outer, report.final_residual
        )));
    }
    Ok(())
}

pub fn sweep(cfg: &RunConfig, mode: SweepMode, strict: bool) -> Result<(), Failure> {
    let f = fitting_term(cfg)?;
    create_dir(&cfg.output_dir)?;
    let gt = make_ground_truth(
        &f,
        &SolverParams {
            max_outer: cfg.gt_max_outer,
            ..cfg.params.clone()
        },
    )?;
    println!(
        "ground truth: {} iterations, residual {:e}, converged {}",
        gt.report.outer_iterations, gt.report.final_residual, gt.report.converged
    );
    let csv_path = cfg.output("sweep.csv");
    let mut writer = SweepWriter::create(&csv_path)
        .map_err(|e| Failure::Io(format!("cannot write {}: {e}", csv_path.display())))?;
    println!("q      rd      E1        E2          t(s)      iters");
    let records = run_sweep(&f, &cfg.params, &gt, &cfg.q_list, mode, cfg.repeats, |r| {
        println!(
            "{:<6} {:<7.4} {:<9.6} {:<11.4e} {:<9.4} {}{}",
            r.q,
            r.rd_fraction,
            r.e1,
            r.e2,
            r.wall_time_s,
            r.outer_iterations,
            if r.converged { "" } else { " (not converged)" }
        );
        writer.write(r)
    })?;

    let saving = time_saving(&records);
    let mut text = String::new();
    writeln!(text, "image {}", cfg.image_path.display()).unwrap();
    writeln!(
        text,
        "mode {}",
        if mode == SweepMode::Serial {
            "serial"
        } else {
            "parallel"
        }
    )
    .unwrap();
    writeln!(text, "repeats {}", cfg.repeats).unwrap();
    writeln!(text, "gt_outer_iterations {}", gt.report.outer_iterations).unwrap();
    writeln!(text, "gt_final_residual {:e}", gt.report.final_residual).unwrap();
    writeln!(text, "gt_converged {}", gt.report.converged).unwrap();
    match saving {
        Some(s) => writeln!(text, "time_saving {s:.4}").unwrap(),
        None => writeln!(text, "time_saving n/a").unwrap(),
    }
    write_text(&cfg.output("summary.txt"), &text)?;
    match saving {
        Some(s) => println!(
            "time saving {:.1}% (accurate restricted runs vs q = 1)",
            100.0 * s
        ),
        None => println!("time saving n/a (needs q = 1 and accurate restricted rows)"),
    }

    let stalled: Vec<f64> = records
        .iter()
        .filter(|r| !r.converged)
        .map(|r| r.q)
        .collect();
    if strict && !stalled.is_empty() {
        return Err(Failure::NotConverged(format!(
            "no convergence at q = {stalled:?}"
        )));
    }
    Ok(())
}

pub fn metrics(e1: bool, a: &Path, b: &Path) -> Result<(), Failure> {
    let value = if e1 {
        tanimoto(&read_mask(a)?, &read_mask(b)?)?
    } else {
        l2_difference(&read_pgm(a)?.to_field(), &read_pgm(b)?.to_field())?
    };
    println!("{}", six_significant(value));
    Ok(())
}

/// Fixed notation with six digits after the point for values in [0, 1],
/// otherwise six significant digits.
fn six_significant(v: f64) -> String {
    if (0.0..=1.0).contains(&v) {
        format!("{v:.6}")
    } else {
        format!("{v:.5e}")
    }
}
