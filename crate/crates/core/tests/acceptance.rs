//! Acceptance run: one line per criterion, non-zero exit if any fails.

use std::process::ExitCode;
use std::time::Instant;

use widthlab::experiments::*;
use widthlab::Result;

struct Line {
    id: usize,
    title: &'static str,
    passed: bool,
    measured: String,
}

fn from_outcome(id: usize, title: &'static str, o: Result<Outcome>, extra: Option<(bool, String)>) -> Line {
    match o {
        Ok(o) => {
            let mut passed = o.passed();
            let mut parts: Vec<String> = o.checks.iter().map(|c| format!("{}: {}", c.name, c.measured)).collect();
            if let Some((ok, what)) = extra {
                passed &= ok;
                parts.push(what);
            }
            Line {
                id,
                title,
                passed,
                measured: parts.join("; "),
            }
        }
        Err(e) => Line {
            id,
            title,
            passed: false,
            measured: format!("error: {e}"),
        },
    }
}

fn only(o: &Result<Outcome>, prefix: &str) -> Result<Outcome> {
    o.clone().map(|mut o| {
        o.checks.retain(|c| c.name.starts_with(prefix));
        o
    })
}

fn criterion_10() -> Line {
    let run = || -> Result<(bool, String)> {
        let curves = synthetic_class()?;
        let mut distances = Vec::new();
        for a in 0..curves.len() {
            for b in a + 1..curves.len() {
                distances.push(curves[a].sup_distance(&curves[b])?);
            }
        }
        distances.sort_by(f64::total_cmp);
        // every pairwise distance, its midpoints and half values probe each cover regime
        let mut radii: Vec<f64> = distances.iter().flat_map(|&d| [0.25 * d, 0.5 * d, d]).collect();
        radii.push(1e-3);
        let rows = entropy_identity(&curves, &radii)?;
        let mut ok = true;
        let mut worst_identity: f64 = 0.0;
        for r in &rows {
            worst_identity = worst_identity.max((r.codebook_error - r.radius).abs());
            ok &= r.codebook_error == r.radius && r.packing_at_double <= r.cover_size && r.radius <= r.eps;
        }
        let sizes: Vec<usize> = rows.iter().map(|r| r.cover_size).collect();
        Ok((
            ok,
            format!(
                "{} radii, max |decoder error - radius| = {worst_identity:e}, cover sizes {}..{}",
                rows.len(),
                sizes.iter().min().unwrap_or(&0),
                sizes.iter().max().unwrap_or(&0)
            ),
        ))
    };
    match run() {
        Ok((passed, measured)) => Line {
            id: 10,
            title: "entropy-lemma identity",
            passed,
            measured,
        },
        Err(e) => Line {
            id: 10,
            title: "entropy-lemma identity",
            passed: false,
            measured: format!("error: {e}"),
        },
    }
}

fn main() -> ExitCode {
    let mut lines = Vec::new();

    // 1 and 2 share one single-threaded fixed-b run
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().expect("thread pool");
    let start = Instant::now();
    let fixed = single.install(|| fixed_b(&FixedBConfig::default()));
    let secs = start.elapsed().as_secs_f64();
    lines.push(from_outcome(
        1,
        "fixed-b entropy rate",
        only(&fixed, "entropy rate"),
        Some((secs < 60.0, format!("single-threaded {secs:.1}s (< 60s)"))),
    ));
    let sep = fixed.clone().map(|mut o| {
        o.checks.retain(|c| c.name.starts_with("separation") || c.name.starts_with("certificate"));
        o
    });
    lines.push(from_outcome(2, "separation structure", sep, None));

    let start = Instant::now();
    let var = variable_b(&VariableBConfig::default());
    let secs = start.elapsed().as_secs_f64();
    lines.push(from_outcome(
        3,
        "variable-b product structure",
        var,
        Some((secs < 300.0, format!("{secs:.1}s (< 300s)"))),
    ));

    lines.push(from_outcome(4, "smoothness ceiling", upper_bound(&UpperBoundConfig::default()), None));
    lines.push(from_outcome(5, "rhs invariance", rhs_invariance(&RhsInvarianceConfig::default()), None));
    lines.push(from_outcome(6, "oracle equivalences", convolution(&ConvolutionConfig::default()), None));
    lines.push(from_outcome(7, "riemann recovery", riemann(&RiemannConfig::default()), None));

    let rb = rb_elliptic(&RbEllipticConfig::default());
    let rb8 = rb.clone().map(|mut o| {
        o.checks
            .retain(|c| c.name.starts_with("offline/online") || c.name.starts_with("geometric"));
        o
    });
    lines.push(from_outcome(8, "rb offline/online", rb8, None));
    lines.push(from_outcome(9, "linear-width contrast", svd_transport(&SvdTransportConfig::default()), None));
    lines.push(criterion_10());

    let mut failed = 0;
    for l in &lines {
        println!(
            "criterion {:>2} {:<30} {} (measured {})",
            l.id,
            l.title,
            if l.passed { "PASS" } else { "FAIL" },
            l.measured
        );
        failed += usize::from(!l.passed);
    }
    println!("{} of {} criteria passed", lines.len() - failed, lines.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
