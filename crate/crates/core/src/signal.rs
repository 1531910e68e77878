//! Sampled signals: loading from disk and closed-form Gaussian test signals.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default number of samples of the synthesis lattice.
pub const DEFAULT_LENGTH: usize = 512;
/// Default sample spacing of the synthesis lattice.
pub const DEFAULT_DT: f64 = 1.0 / 16.0;

/// A finite, uniformly sampled complex signal; sample `k` sits at `t0 + k * dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<Complex64>,
    dt: f64,
    t0: f64,
}

impl Signal {
    pub fn new(samples: Vec<Complex64>, dt: f64, t0: f64) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidSignal(format!(
                "need at least 2 samples, got {}",
                samples.len()
            )));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidSignal(format!("sample spacing must be positive, got {dt}")));
        }
        if !t0.is_finite() {
            return Err(Error::InvalidSignal("non-finite start time".into()));
        }
        if let Some(k) = samples.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidSignal(format!("non-finite sample at index {k}")));
        }
        Ok(Signal { samples, dt, t0 })
    }

    pub fn from_real(samples: &[f64], dt: f64, t0: f64) -> Result<Self> {
        Signal::new(samples.iter().map(|&x| Complex64::new(x, 0.0)).collect(), dt, t0)
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.len() - 1)
    }

    /// Σ|f|²·dt.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.dt
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Multiplies every sample by `e^{iα}`.
    pub fn rotated(&self, alpha: f64) -> Signal {
        let u = Complex64::from_polar(1.0, alpha);
        Signal {
            samples: self.samples.iter().map(|&z| z * u).collect(),
            dt: self.dt,
            t0: self.t0,
        }
    }

    pub fn scaled(&self, factor: f64) -> Signal {
        Signal {
            samples: self.samples.iter().map(|&z| z * factor).collect(),
            dt: self.dt,
            t0: self.t0,
        }
    }

    /// Rescales so the largest modulus is 1; zero signals are returned unchanged.
    pub fn normalized(&self) -> Signal {
        let peak = self.peak();
        if peak > 0.0 {
            self.scaled(1.0 / peak)
        } else {
            self.clone()
        }
    }

    /// Linear interpolation at time `t`; zero outside the sampled window.
    pub fn value_at(&self, t: f64) -> Complex64 {
        let pos = (t - self.t0) / self.dt;
        if pos < 0.0 || pos > (self.len() - 1) as f64 {
            return Complex64::new(0.0, 0.0);
        }
        let k = pos.floor() as usize;
        if k + 1 >= self.len() {
            return self.samples[self.len() - 1];
        }
        let frac = pos - k as f64;
        self.samples[k] * (1.0 - frac) + self.samples[k + 1] * frac
    }
}

/// Start time of the centered lattice: sample `n / 2` sits at t = 0.
pub fn centered_t0(n: usize, dt: f64) -> f64 {
    -((n / 2) as f64) * dt
}

/// The Gaussian window `e^{-πt²}`.
pub fn gaussian(t: f64) -> f64 {
    (-PI * t * t).exp()
}

/// One term `amplitude · φ(t − shift) · e^{2πi·modulation·t}` of a Gaussian mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianAtom {
    pub amplitude: Complex64,
    pub shift: f64,
    pub modulation: f64,
}

impl GaussianAtom {
    pub fn new(amplitude: Complex64, shift: f64, modulation: f64) -> Self {
        GaussianAtom {
            amplitude,
            shift,
            modulation,
        }
    }

    pub fn real(amplitude: f64, shift: f64) -> Self {
        GaussianAtom::new(Complex64::new(amplitude, 0.0), shift, 0.0)
    }

    pub fn value(&self, t: f64) -> Complex64 {
        self.amplitude * gaussian(t - self.shift) * Complex64::from_polar(1.0, 2.0 * PI * self.modulation * t)
    }
}

/// Samples a Gaussian mixture on the centered lattice of length `n` and spacing `dt`.
pub fn sample_mixture(atoms: &[GaussianAtom], n: usize, dt: f64) -> Result<Signal> {
    let t0 = centered_t0(n, dt);
    let samples = (0..n)
        .map(|k| {
            let t = t0 + k as f64 * dt;
            atoms.iter().map(|a| a.value(t)).sum()
        })
        .collect();
    Signal::new(samples, dt, t0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    Gaussian,
    GaussianPairPlus,
    GaussianPairMinus,
    ModulatedGaussian,
}

impl std::str::FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(SynthKind::Gaussian),
            "gaussian_pair_plus" => Ok(SynthKind::GaussianPairPlus),
            "gaussian_pair_minus" => Ok(SynthKind::GaussianPairMinus),
            "modulated_gaussian" => Ok(SynthKind::ModulatedGaussian),
            other => Err(Error::Parse(format!("unknown signal kind '{other}'"))),
        }
    }
}

/// Shift `a` and modulation frequency `b` of the synthesized signals.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SynthParams {
    pub a: f64,
    pub b: f64,
}

impl SynthKind {
    /// Mixture representation of the closed-form signal.
    pub fn atoms(self, params: SynthParams) -> Vec<GaussianAtom> {
        let SynthParams { a, b } = params;
        match self {
            SynthKind::Gaussian => vec![GaussianAtom::real(1.0, 0.0)],
            SynthKind::GaussianPairPlus => vec![GaussianAtom::real(1.0, -a), GaussianAtom::real(1.0, a)],
            SynthKind::GaussianPairMinus => vec![GaussianAtom::real(1.0, -a), GaussianAtom::real(-1.0, a)],
            SynthKind::ModulatedGaussian => vec![GaussianAtom::new(Complex64::new(1.0, 0.0), a, b)],
        }
    }
}

/// True when the lattice covers `[-|a|-5, |a|+5]`, beyond which the Gaussian tails are below 1e-34.
pub fn covers_support(params: SynthParams, n: usize, dt: f64) -> bool {
    let half = params.a.abs() + 5.0;
    let t0 = centered_t0(n, dt);
    let t_end = t0 + (n as f64 - 1.0) * dt;
    t0 <= -half && t_end >= half
}

/// Samples one of the closed-form test signals on the centered lattice.
///
/// A lattice too short to hold the Gaussian tails is allowed but logged as a warning.
pub fn synthesize(kind: SynthKind, params: SynthParams, n: usize, dt: f64) -> Result<Signal> {
    if n < 16 {
        return Err(Error::InvalidParameter(format!("synthesis length must be >= 16, got {n}")));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!("sample spacing must be positive, got {dt}")));
    }
    if !covers_support(params, n, dt) {
        log::warn!(
            "lattice of {n} samples at dt={dt} does not cover [-{h}, {h}]; tails are truncated",
            h = params.a.abs() + 5.0
        );
    }
    sample_mixture(&kind.atoms(params), n, dt)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalFormat {
    Wav,
    Csv,
}

impl SignalFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "wav" => Some(SignalFormat::Wav),
            "csv" | "txt" => Some(SignalFormat::Csv),
            _ => None,
        }
    }
}

pub fn load_signal(path: &Path, format: SignalFormat, normalize: bool) -> Result<Signal> {
    let signal = match format {
        SignalFormat::Wav => read_wav(path)?,
        SignalFormat::Csv => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            parse_csv(&text)?
        }
    };
    Ok(if normalize { signal.normalized() } else { signal })
}

/// Reads a mono 16-bit PCM WAV file, mapping samples to [-1, 1).
pub fn read_wav(path: &Path) -> Result<Signal> {
    let reader = hound::WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::UnsupportedWav(other.to_string()),
    })?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::UnsupportedWav(format!(
            "expected mono, found {} channels",
            spec.channels
        )));
    }
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::UnsupportedWav(format!(
            "expected 16-bit PCM, found {} bits ({:?})",
            spec.bits_per_sample, spec.sample_format
        )));
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| {
            s.map(|v| Complex64::new(v as f64 / 32768.0, 0.0))
                .map_err(|e| Error::UnsupportedWav(e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    Signal::new(samples, 1.0 / spec.sample_rate as f64, 0.0)
}

/// Writes a mono 16-bit PCM WAV file; samples are clipped to [-1, 1).
pub fn write_wav(path: &Path, signal: &Signal) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: (1.0 / signal.dt()).round() as u32,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let to_err = |e: hound::Error| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::UnsupportedWav(other.to_string()),
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(to_err)?;
    for z in signal.samples() {
        let v = (z.re * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        writer.write_sample(v).map_err(to_err)?;
    }
    writer.finalize().map_err(to_err)
}

/// Parses the CSV signal format: optional `dt=<float>` / `t0=<float>` header lines, then one
/// `re` or `re,im` sample per line.
pub fn parse_csv(text: &str) -> Result<Signal> {
    let mut dt = 1.0;
    let mut t0 = 0.0;
    let mut samples = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(v) = line.strip_prefix("dt=") {
            dt = parse_number(v, line_no)?;
            continue;
        }
        if let Some(v) = line.strip_prefix("t0=") {
            t0 = parse_number(v, line_no)?;
            continue;
        }
        let mut parts = line.split(',').map(str::trim);
        let re = parse_number(parts.next().unwrap_or(""), line_no)?;
        let im = match parts.next() {
            Some(s) => parse_number(s, line_no)?,
            None => 0.0,
        };
        if parts.next().is_some() {
            return Err(Error::Parse(format!("line {line_no}: expected 're' or 're,im'")));
        }
        if !(re.is_finite() && im.is_finite()) {
            return Err(Error::NonFiniteSample(line_no));
        }
        samples.push(Complex64::new(re, im));
    }
    Signal::new(samples, dt, t0)
}

fn parse_number(s: &str, line_no: usize) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("line {line_no}: cannot parse '{}'", s.trim())))
}

/// Serializes to the CSV signal format (`dt`, `t0` header, then `re,im` per line).
pub fn to_csv(signal: &Signal) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "dt={:e}", signal.dt());
    let _ = writeln!(out, "t0={:e}", signal.t0());
    for z in signal.samples() {
        let _ = writeln!(out, "{:e},{:e}", z.re, z.im);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_direct_parse() {
        let s = parse_csv("0\n1\n0\n").unwrap();
        assert_eq!(s.dt(), 1.0);
        let re: Vec<f64> = s.samples().iter().map(|z| z.re).collect();
        assert_eq!(re, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn csv_header_and_complex_pairs() {
        let s = parse_csv("dt=0.5\n1,2\n3,-4\n").unwrap();
        assert_eq!(s.dt(), 0.5);
        assert_eq!(s.samples()[1], Complex64::new(3.0, -4.0));
    }

    #[test]
    fn csv_rejects_nan_with_line_number() {
        let err = parse_csv("dt=1\n0\nNaN\n1\n").unwrap_err();
        assert_eq!(err.to_string(), "non-finite sample at line 3");
        assert!(matches!(parse_csv("0\ninf\n"), Err(Error::NonFiniteSample(2))));
    }

    #[test]
    fn csv_round_trip() {
        let s = synthesize(SynthKind::ModulatedGaussian, SynthParams { a: 0.0, b: 1.0 }, 64, 0.25).unwrap();
        let back = parse_csv(&to_csv(&s)).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn signal_rejects_short_or_bad_spacing() {
        assert!(Signal::from_real(&[1.0], 1.0, 0.0).is_err());
        assert!(Signal::from_real(&[1.0, 2.0], 0.0, 0.0).is_err());
    }

    #[test]
    fn gaussian_has_unit_peak_at_origin() {
        let s = synthesize(SynthKind::Gaussian, SynthParams::default(), 257, 1.0 / 16.0).unwrap();
        assert_eq!(s.time(128), 0.0);
        assert_eq!(s.samples()[128], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn pair_values_match_closed_form() {
        let p = SynthParams { a: 2.0, b: 0.0 };
        let plus = synthesize(SynthKind::GaussianPairPlus, p, 512, 1.0 / 16.0).unwrap();
        let minus = synthesize(SynthKind::GaussianPairMinus, p, 512, 1.0 / 16.0).unwrap();
        // t = 2 is sample 256 + 32
        assert_eq!(plus.time(288), 2.0);
        let expected = 1.0 + (-16.0 * PI).exp();
        assert!((plus.samples()[288].re - expected).abs() < 1e-15);
        assert_eq!(minus.samples()[256], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn pair_sum_is_twice_left_atom() {
        let p = SynthParams { a: 1.3, b: 0.0 };
        let plus = synthesize(SynthKind::GaussianPairPlus, p, 512, 1.0 / 16.0).unwrap();
        let minus = synthesize(SynthKind::GaussianPairMinus, p, 512, 1.0 / 16.0).unwrap();
        for k in 0..plus.len() {
            let t = plus.time(k);
            let want = 2.0 * gaussian(t + 1.3);
            assert!((plus.samples()[k] + minus.samples()[k] - want).norm() <= 4.0 * f64::EPSILON);
        }
    }

    #[test]
    fn gaussian_energy_matches_integral() {
        let s = synthesize(SynthKind::Gaussian, SynthParams::default(), 512, 1.0 / 16.0).unwrap();
        let want = 0.5f64.sqrt();
        assert!((s.energy() - want).abs() / want < 1e-8);
    }

    #[test]
    fn support_coverage() {
        assert!(covers_support(SynthParams { a: 3.0, b: 0.0 }, 512, 1.0 / 16.0));
        assert!(!covers_support(SynthParams { a: 3.0, b: 0.0 }, 64, 1.0 / 16.0));
        // short lattices still synthesize
        assert!(synthesize(SynthKind::Gaussian, SynthParams::default(), 16, 0.1).is_ok());
        assert!(synthesize(SynthKind::Gaussian, SynthParams::default(), 8, 0.1).is_err());
    }
}
