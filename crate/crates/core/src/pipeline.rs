//! Stage orchestration (checker, spectral, SIS, fronts, entire), result
//! files, profile caching and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cache::{cache_key, CachedProfile, ProfileCache};
use crate::checker::{verify_assumptions, AssumptionSuite};
use crate::config::{build_model, ExperimentConfig};
use crate::entire::{construct_unchecked, verify_qualitative, EntireProfiles, MIN_SPEED_RATIO};
use crate::error::{Error, Result};
use crate::front::{compute_front_with, normalize_phase, verify_front, FrontOptions, FrontProfile};
use crate::model::{EnvelopePair, ModelSpec};
use crate::sis::{compute_gamma_with, verify_gamma, Profile, SisOptions};
use crate::spectral::{compute_cstar, spectral_table, SpectralData, Structure};

pub const MANIFEST_FORMAT: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    /// Hypothesis or assumption failure.
    AssumptionFail,
    /// Numerical verification failure.
    NumericalFail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub seconds: f64,
    pub verdict: Verdict,
    pub cache_hits: usize,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub manifest_format: u32,
    pub crate_version: String,
    pub config_hash: String,
    pub model: String,
    pub seed: u64,
    pub stages: Vec<StageRecord>,
    pub files: Vec<FileRecord>,
    pub passed: bool,
    pub exit_code: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Spectral,
    Sis,
    Front,
    Entire,
    VerifyAssumptions,
    Pipeline,
}

#[derive(Serialize)]
struct SpectralSummary<'a> {
    c_star: f64,
    lambda_star: f64,
    growth_rate: f64,
    v_star: &'a [f64],
    structure: Structure,
    scan_unimodal: bool,
    cooperative: bool,
    k: &'a [f64],
    k_minus: Option<&'a [f64]>,
    k_plus: Option<&'a [f64]>,
}

/// One experiment: model, output directory, cache and accumulated records.
pub struct Session {
    pub cfg: ExperimentConfig,
    pub out_dir: PathBuf,
    pub model: ModelSpec,
    pub envelopes: Option<EnvelopePair>,
    pub cache: ProfileCache,
    pub stages: Vec<StageRecord>,
    pub files: Vec<FileRecord>,
    spectral: Option<SpectralData>,
}

fn digest_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

impl Session {
    pub fn new(cfg: ExperimentConfig) -> Result<Self> {
        let (model, envelopes) = build_model(&cfg.model).map_err(|e| e.in_stage("model"))?;
        let out_dir = PathBuf::from(cfg.out.clone().unwrap_or_else(|| "out".into()));
        fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
        let cache = ProfileCache::new(out_dir.join("cache"));
        Ok(Session {
            cfg,
            out_dir,
            model,
            envelopes,
            cache,
            stages: Vec::new(),
            files: Vec::new(),
            spectral: None,
        })
    }

    /// System generating fronts and the spatially independent solution
    /// (the lower envelope for non-cooperative models).
    pub fn lower_model(&self) -> &ModelSpec {
        self.envelopes.as_ref().map_or(&self.model, |e| &e.lower)
    }

    pub fn spectral(&mut self) -> Result<&SpectralData> {
        if self.spectral.is_none() {
            self.spectral = Some(compute_cstar(&self.model).map_err(|e| e.in_stage("spectral"))?);
        }
        Ok(self.spectral.as_ref().expect("just set"))
    }

    fn record(&mut self, name: &str, start: Instant, verdict: Verdict, cache_hits: usize, detail: String) {
        log::info!("stage {name}: {verdict:?} {detail}");
        self.stages.push(StageRecord {
            name: name.into(),
            seconds: start.elapsed().as_secs_f64(),
            verdict,
            cache_hits,
            detail,
        });
    }

    fn write_file(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.out_dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.register(name)
    }

    fn register(&mut self, name: &str) -> Result<()> {
        let sha256 = digest_file(&self.out_dir.join(name))?;
        self.files.retain(|f| f.path != name);
        self.files.push(FileRecord {
            path: name.into(),
            sha256,
        });
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let s = serde_json::to_string_pretty(value).map_err(|e| Error::Serialize(e.to_string()))?;
        self.write_file(name, s.as_bytes())
    }

    fn write_csv(&mut self, name: &str, header: &[String], rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
        let path = self.out_dir.join(name);
        let ser = |e: csv::Error| Error::Serialize(e.to_string());
        let mut w = csv::Writer::from_path(&path).map_err(ser)?;
        w.write_record(header).map_err(ser)?;
        for row in rows {
            w.write_record(row.into_iter().map(fmt)).map_err(ser)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        drop(w);
        self.register(name)
    }

    fn component_header(&self, lead: &[&str]) -> Vec<String> {
        lead.iter()
            .map(|s| s.to_string())
            .chain((1..=self.model.m()).map(|i| format!("u{i}")))
            .collect()
    }

    /// All speeds the run will use, checked against `1.05 c*`.
    fn speeds(&mut self, include_front_section: bool) -> Result<Vec<f64>> {
        let mut speeds: Vec<f64> = Vec::new();
        if let Some(e) = &self.cfg.entire {
            speeds.extend(e.active_waves().map(|(_, w)| w.c));
        }
        if include_front_section {
            speeds.extend(self.cfg.front.speeds.iter().copied());
        }
        speeds.sort_by(|a, b| a.partial_cmp(b).expect("finite speed"));
        speeds.dedup();
        let c_star = self.spectral()?.c_star;
        if let Some(&c) = speeds.iter().find(|&&c| c < MIN_SPEED_RATIO * c_star) {
            return Err(Error::SpeedBelowCritical { c, c_star }.in_stage("spectral"));
        }
        Ok(speeds)
    }

    pub fn stage_spectral(&mut self) -> Result<Verdict> {
        let start = Instant::now();
        let spectral = self.spectral()?.clone();
        self.speeds(true)?;
        let env = self.envelopes.clone();
        let k = self.model.k.clone();
        let summary = SpectralSummary {
            c_star: spectral.c_star,
            lambda_star: spectral.lambda_star,
            growth_rate: spectral.growth_rate,
            v_star: &spectral.v_star,
            structure: spectral.structure,
            scan_unimodal: spectral.scan_unimodal,
            cooperative: self.model.cooperative,
            k: &k,
            k_minus: env.as_ref().map(|e| e.k_minus()),
            k_plus: env.as_ref().map(|e| e.k_plus()),
        };
        self.write_json("spectral.json", &summary)?;
        let pts = self.cfg.spectral.table_points.max(2);
        let span = self.cfg.spectral.table_span * spectral.lambda_star;
        let lambdas: Vec<f64> = (0..pts).map(|i| span * i as f64 / (pts - 1) as f64).collect();
        let rows = spectral_table(&spectral, &lambdas).map_err(|e| e.in_stage("spectral"))?;
        let mut header = vec!["lambda".to_string(), "m".to_string(), "m_over_lambda".to_string()];
        header.extend((1..=self.model.m()).map(|i| format!("v{i}")));
        self.write_csv(
            "spectral_table.csv",
            &header,
            rows.into_iter().map(|r| {
                let mut row = vec![r.lambda, r.m, if r.lambda > 0.0 { r.m / r.lambda } else { f64::INFINITY }];
                row.extend(r.v);
                row
            }),
        )?;
        let detail = format!(
            "c* = {:.10}, lambda* = {:.10}, s(f'(0)) = {:.10}",
            spectral.c_star, spectral.lambda_star, spectral.growth_rate
        );
        self.record("spectral", start, Verdict::Pass, 0, detail);
        Ok(Verdict::Pass)
    }

    pub fn stage_assumptions(&mut self) -> Result<(Verdict, AssumptionSuite)> {
        let start = Instant::now();
        let suite = verify_assumptions(
            &self.model,
            self.envelopes.as_ref(),
            self.cfg.checker.samples,
            self.cfg.seed,
        );
        self.write_json("assumptions.json", &suite)?;
        let table = suite.table();
        self.write_file("assumptions.txt", table.as_bytes())?;
        let verdict = if suite.passed() {
            Verdict::Pass
        } else {
            Verdict::AssumptionFail
        };
        let failed: Vec<String> = suite.hard_failures().iter().map(|r| r.name.clone()).collect();
        let detail = if failed.is_empty() {
            format!("{} checks", suite.reports.len())
        } else {
            format!("failed: {}", failed.join(", "))
        };
        self.record("verify-assumptions", start, verdict, 0, detail);
        Ok((verdict, suite))
    }

    fn sis_options(&self) -> SisOptions {
        SisOptions {
            tol: self.cfg.sis.tol,
            dt: self.cfg.sis.dt,
            t_left: self.cfg.sis.t_left,
            ..SisOptions::default()
        }
    }

    fn front_options(&self) -> FrontOptions {
        FrontOptions {
            tol: self.cfg.front.tol,
            dxi: self.cfg.front.dxi,
            ..FrontOptions::default()
        }
    }

    /// Cached spatially independent solution of the lower system.
    pub fn gamma(&mut self) -> Result<(Profile, bool)> {
        let spectral = self.spectral()?.clone();
        let opts = self.sis_options();
        let key = cache_key(&[
            env!("CARGO_PKG_VERSION"),
            "gamma",
            &self.lower_model().fingerprint(),
            &serde_json::to_string(&opts).map_err(|e| Error::Serialize(e.to_string()))?,
        ]);
        let lower = self.lower_model().clone();
        let (p, hit) = self
            .cache
            .get_or_compute(&key, || {
                Ok(CachedProfile::Gamma(compute_gamma_with(&lower, &spectral, &opts)?.0))
            })
            .map_err(|e| e.in_stage("sis"))?;
        match p {
            CachedProfile::Gamma(g) => Ok((g, hit)),
            CachedProfile::Front(_) => Err(Error::Serialize("cache entry has the wrong kind".into())),
        }
    }

    /// Cached, phase-normalized front of the lower system.
    pub fn front(&mut self, c: f64) -> Result<(FrontProfile, bool)> {
        let spectral = self.spectral()?.clone();
        let opts = self.front_options();
        let key = cache_key(&[
            env!("CARGO_PKG_VERSION"),
            "front",
            &self.lower_model().fingerprint(),
            &format!("{:016x}", c.to_bits()),
            &serde_json::to_string(&opts).map_err(|e| Error::Serialize(e.to_string()))?,
        ]);
        let lower = self.lower_model().clone();
        let (p, hit) = self
            .cache
            .get_or_compute(&key, || {
                let f = compute_front_with(&lower, &spectral, c, &opts)?;
                Ok(CachedProfile::Front(normalize_phase(&f)?))
            })
            .map_err(|e| e.in_stage("front"))?;
        match p {
            CachedProfile::Front(f) => Ok((f, hit)),
            CachedProfile::Gamma(_) => Err(Error::Serialize("cache entry has the wrong kind".into())),
        }
    }

    pub fn stage_sis(&mut self) -> Result<Verdict> {
        let start = Instant::now();
        let (g, hit) = self.gamma()?;
        let report = verify_gamma(self.lower_model(), &g);
        let header = self.component_header(&["t"]);
        self.write_csv(
            "gamma.csv",
            &header,
            (0..g.len()).map(|i| {
                let mut row = vec![g.t(i)];
                row.extend(g.values.row(i).iter().copied());
                row
            }),
        )?;
        self.write_json("gamma_report.json", &report)?;
        let verdict = if report.passed() {
            Verdict::Pass
        } else {
            Verdict::NumericalFail
        };
        let detail = format!(
            "residual {:.3e}, monotone {}, bound {}, tail {}",
            report.residual_max, report.monotone_ok, report.bound_ok, report.tail_ok
        );
        self.record("sis", start, verdict, hit as usize, detail);
        Ok(verdict)
    }

    pub fn stage_fronts(&mut self) -> Result<Verdict> {
        let start = Instant::now();
        let speeds = self.speeds(true)?;
        if speeds.is_empty() {
            return Err(Error::Config("no front speeds: set [front] speeds or [entire] waves".into()));
        }
        let mut hits = 0;
        let mut reports = Vec::new();
        let mut verdict = Verdict::Pass;
        for c in speeds {
            let (f, hit) = self.front(c)?;
            hits += hit as usize;
            let report = verify_front(self.lower_model(), &f);
            if !report.passed() {
                verdict = Verdict::NumericalFail;
            }
            let header = self.component_header(&["xi"]);
            let p = &f.profile;
            self.write_csv(
                &format!("front_c{c}.csv"),
                &header,
                (0..p.len()).map(|i| {
                    let mut row = vec![p.t(i)];
                    row.extend(p.values.row(i).iter().copied());
                    row
                }),
            )?;
            reports.push(serde_json::json!({
                "c": c,
                "lambda1": f.lambda1,
                "lambda2": f.lambda2,
                "v1": f.v1,
                "fit": f.fit,
                "relax": f.relax,
                "report": report,
                "passed": report.passed(),
            }));
        }
        let n = reports.len();
        self.write_json("fronts.json", &reports)?;
        self.record("front", start, verdict, hits, format!("{n} speeds"));
        Ok(verdict)
    }

    pub fn stage_entire(&mut self) -> Result<Verdict> {
        let start = Instant::now();
        let config = self
            .cfg
            .entire
            .clone()
            .ok_or_else(|| Error::Config("missing [entire] section".into()))?;
        self.speeds(false)?;
        let mut hits = 0;
        let mut fronts = Vec::with_capacity(config.l());
        for (i, w) in config.waves.iter().enumerate() {
            if config.chi[i] == 1 {
                let (f, hit) = self.front(w.c)?;
                hits += hit as usize;
                fronts.push(Some(f));
            } else {
                fronts.push(None);
            }
        }
        let gamma = if config.sis_active() {
            let (g, hit) = self.gamma()?;
            hits += hit as usize;
            Some(g)
        } else {
            None
        };
        let profiles = EntireProfiles { fronts, gamma };
        let spectral = self.spectral()?.clone();
        let run = construct_unchecked(&config, &self.model, self.envelopes.as_ref(), &profiles, &spectral)
            .map_err(|e| e.in_stage("entire"))?;
        let qual = verify_qualitative(&run, &config, &spectral);
        let header = self.component_header(&["t", "x"]);
        let tr = &run.trajectory;
        let rows = tr.snapshots.iter().flat_map(|s| {
            (0..s.values.nrows()).map(move |j| {
                let mut row = vec![s.t, tr.x(j)];
                row.extend(s.values.row(j).iter().copied());
                row
            })
        });
        let rows: Vec<Vec<f64>> = rows.collect();
        self.write_csv("entire_snapshots.csv", &header, rows.into_iter())?;
        self.write_json("sandwich_report.json", &run.report)?;
        self.write_json("qualitative_report.json", &qual)?;
        let verdict = if run.report.passed() {
            Verdict::Pass
        } else {
            Verdict::NumericalFail
        };
        let detail = format!(
            "n = {}, lower margin {:.3e}, upper margin {:.3e}, monotone in n {}",
            run.n, run.report.lower_margin.value, run.report.upper_margin.value, run.report.monotone_in_n_ok
        );
        self.record("entire", start, verdict, hits, detail);
        Ok(verdict)
    }

    pub fn manifest(&self) -> Result<RunManifest> {
        let exit_code = self
            .stages
            .iter()
            .map(|s| match s.verdict {
                Verdict::Pass => 0,
                Verdict::AssumptionFail => 2,
                Verdict::NumericalFail => 3,
            })
            .find(|&c| c != 0)
            .unwrap_or(0);
        Ok(RunManifest {
            manifest_format: MANIFEST_FORMAT,
            crate_version: env!("CARGO_PKG_VERSION").into(),
            config_hash: self.cfg.hash()?,
            model: self.model.name.clone(),
            seed: self.cfg.seed,
            stages: self.stages.clone(),
            files: self.files.clone(),
            passed: exit_code == 0,
            exit_code,
        })
    }

    pub fn write_manifest(&self) -> Result<RunManifest> {
        let m = self.manifest()?;
        let path = self.out_dir.join("manifest.json");
        let s = serde_json::to_string_pretty(&m).map_err(|e| Error::Serialize(e.to_string()))?;
        fs::write(&path, s).map_err(|e| Error::io(&path, e))?;
        Ok(m)
    }
}

/// Runs one subcommand and writes the manifest. Stage errors propagate;
/// verification failures are reported through the manifest exit code.
pub fn run_command(cmd: Command, cfg: ExperimentConfig) -> Result<RunManifest> {
    let mut s = Session::new(cfg)?;
    let proceed = |v: Verdict| v == Verdict::Pass;
    match cmd {
        Command::Spectral => {
            s.stage_spectral()?;
        }
        Command::VerifyAssumptions => {
            s.stage_assumptions()?;
        }
        Command::Sis => {
            s.stage_sis()?;
        }
        Command::Front => {
            s.stage_fronts()?;
        }
        Command::Entire => {
            if proceed(s.stage_assumptions()?.0) {
                s.stage_entire()?;
            }
        }
        Command::Pipeline => run_stages(&mut s)?,
    }
    s.write_manifest()
}

fn run_stages(s: &mut Session) -> Result<()> {
    if s.stage_assumptions()?.0 != Verdict::Pass {
        return Ok(());
    }
    if s.stage_spectral()? != Verdict::Pass {
        return Ok(());
    }
    if s.cfg.entire.as_ref().is_none_or(|e| e.sis_active()) && s.stage_sis()? != Verdict::Pass {
        return Ok(());
    }
    let has_fronts = !s.cfg.front.speeds.is_empty()
        || s.cfg.entire.as_ref().is_some_and(|e| e.active_waves().next().is_some());
    if has_fronts && s.stage_fronts()? != Verdict::Pass {
        return Ok(());
    }
    if s.cfg.entire.is_some() {
        s.stage_entire()?;
    }
    Ok(())
}

/// Convenience wrapper for the full pipeline.
pub fn run_pipeline(cfg: ExperimentConfig) -> Result<RunManifest> {
    run_command(Command::Pipeline, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn fisher_cfg(dir: &Path) -> ExperimentConfig {
        let text = format!(
            r#"
out = "{}"
seed = 3
[model]
kind = "fisher"
[checker]
samples = 200
[front]
speeds = [2.5]
"#,
            dir.display()
        );
        parse_config(&text).unwrap()
    }

    #[test]
    fn spectral_and_front_stages_with_cache() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = fisher_cfg(dir.path());
        let m = run_command(Command::Front, cfg.clone()).unwrap();
        assert!(m.passed, "{m:?}");
        assert_eq!(m.stages[0].cache_hits, 0);
        let again = run_command(Command::Front, cfg).unwrap();
        assert_eq!(again.stages[0].cache_hits, 1);
        assert_eq!(m.files, again.files);
    }

    #[test]
    fn below_critical_refused_at_spectral() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = fisher_cfg(dir.path());
        cfg.front.speeds = vec![1.9];
        let err = run_command(Command::Spectral, cfg).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().starts_with("stage spectral"), "{err}");
    }
}
