//! Batched attack evaluation: consistency (CR) and success rate (SR) per kind.

use super::{apply_attack, enumerate_attack_sites, AttackKind};
use crate::corpus::{Dataset, Document};
use crate::{Error, Result};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::io::Write;

/// Which enumerated sites the suite actually attacks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiteSelection {
    /// Every site of every document.
    All,
    /// Up to `per_doc` sites per document and kind, drawn without replacement
    /// from a generator derived from `seed`, the document id, and the kind —
    /// reproducible and independent of evaluation order.
    Sampled { per_doc: usize, seed: u64 },
}

/// One attacked (document, site) pair and whether the thresholded prediction
/// set changed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteOutcome {
    pub doc_id: String,
    pub kind: AttackKind,
    pub site: usize,
    pub changed: bool,
}

/// Aggregates for one attack kind. `cr`/`sr` are percentages; `None` means
/// the kind had no applicable site anywhere in the corpus (reported as n/a,
/// deliberately distinct from 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindReport {
    pub kind: AttackKind,
    pub n_sites: usize,
    pub n_consistent: usize,
    pub cr: Option<f64>,
    pub sr: Option<f64>,
    /// Mean of per-document CR over documents with at least one site.
    pub cr_doc_avg: Option<f64>,
    pub sr_doc_avg: Option<f64>,
}

/// Full suite output: one row per requested kind plus the per-site detail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub kinds: Vec<KindReport>,
    pub details: Vec<SiteOutcome>,
}

impl RobustnessReport {
    /// Mean CR over kinds that had sites; `None` when none did. This is the
    /// robustness term of checkpoint selection.
    pub fn mean_cr(&self) -> Option<f64> {
        let crs: Vec<f64> = self.kinds.iter().filter_map(|k| k.cr).collect();
        if crs.is_empty() {
            None
        } else {
            Some(crs.iter().sum::<f64>() / crs.len() as f64)
        }
    }
}

fn fnv1a(s: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h
}

fn select_sites(
    mut sites: Vec<super::AttackInstance>,
    kind_idx: usize,
    doc_id: &str,
    selection: SiteSelection,
) -> Vec<super::AttackInstance> {
    match selection {
        SiteSelection::All => sites,
        SiteSelection::Sampled { per_doc, seed } => {
            if sites.len() <= per_doc {
                return sites;
            }
            let derived = seed
                ^ fnv1a(doc_id)
                ^ (kind_idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            let mut rng = ChaCha8Rng::seed_from_u64(derived);
            let mut picked: Vec<usize> =
                rand::seq::index::sample(&mut rng, sites.len(), per_doc).into_vec();
            picked.sort_unstable();
            let mut chosen = Vec::with_capacity(per_doc);
            for (removed, idx) in picked.into_iter().enumerate() {
                chosen.push(sites.remove(idx - removed));
            }
            chosen
        }
    }
}

/// Runs every requested attack kind over the dataset and scores prediction
/// consistency. A pair counts as consistent iff the thresholded label sets
/// before and after the attack are equal — wrong but unchanged predictions
/// are consistent by design.
///
/// `predict` maps a document to its thresholded label set; it must be pure,
/// since documents are evaluated in parallel.
pub fn attack_suite<F>(
    predict: F,
    dataset: &Dataset,
    kinds: &[AttackKind],
    selection: SiteSelection,
) -> Result<RobustnessReport>
where
    F: Fn(&Document) -> Result<BTreeSet<usize>> + Sync,
{
    if dataset.is_empty() {
        return Err(Error::invalid("attack suite needs a non-empty dataset"));
    }
    if let SiteSelection::Sampled { per_doc: 0, .. } = selection {
        return Err(Error::config("sampled site selection needs per_doc >= 1"));
    }

    // Per document: the clean prediction once, then every (kind, site) probe.
    let per_doc: Vec<Vec<Vec<SiteOutcome>>> = dataset
        .documents
        .par_iter()
        .map(|doc| -> Result<Vec<Vec<SiteOutcome>>> {
            let before = predict(doc)?;
            let mut by_kind = Vec::with_capacity(kinds.len());
            for (kind_idx, &kind) in kinds.iter().enumerate() {
                let sites = select_sites(
                    enumerate_attack_sites(doc, kind),
                    kind_idx,
                    &doc.doc_id,
                    selection,
                );
                let mut outcomes = Vec::with_capacity(sites.len());
                for instance in &sites {
                    let attacked = apply_attack(doc, instance)?;
                    debug_assert_eq!(attacked.labels, doc.labels);
                    let after = predict(&attacked)?;
                    outcomes.push(SiteOutcome {
                        doc_id: doc.doc_id.clone(),
                        kind,
                        site: instance.site,
                        changed: after != before,
                    });
                }
                by_kind.push(outcomes);
            }
            Ok(by_kind)
        })
        .collect::<Result<_>>()?;

    let mut kind_reports = Vec::with_capacity(kinds.len());
    for (kind_idx, &kind) in kinds.iter().enumerate() {
        let mut n_sites = 0usize;
        let mut n_consistent = 0usize;
        let mut doc_crs = Vec::new();
        for doc_outcomes in &per_doc {
            let outcomes = &doc_outcomes[kind_idx];
            if outcomes.is_empty() {
                continue;
            }
            let consistent = outcomes.iter().filter(|o| !o.changed).count();
            n_sites += outcomes.len();
            n_consistent += consistent;
            doc_crs.push(100.0 * consistent as f64 / outcomes.len() as f64);
        }
        let (cr, sr) = if n_sites == 0 {
            (None, None)
        } else {
            let cr = 100.0 * n_consistent as f64 / n_sites as f64;
            (Some(cr), Some(100.0 - cr))
        };
        let cr_doc_avg = if doc_crs.is_empty() {
            None
        } else {
            Some(doc_crs.iter().sum::<f64>() / doc_crs.len() as f64)
        };
        kind_reports.push(KindReport {
            kind,
            n_sites,
            n_consistent,
            cr,
            sr,
            cr_doc_avg,
            sr_doc_avg: cr_doc_avg.map(|v| 100.0 - v),
        });
    }

    // Detail rows in dataset order, kinds in requested order within each doc.
    let details = per_doc.into_iter().flatten().flatten().collect();
    Ok(RobustnessReport { kinds: kind_reports, details })
}

fn fmt_pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.4}"))
}

/// Writes the per-kind summary as CSV.
pub fn write_report_csv<W: Write>(report: &RobustnessReport, w: &mut W) -> Result<()> {
    writeln!(w, "attack_kind,n_sites,n_consistent,cr,sr,cr_doc_avg,sr_doc_avg")?;
    for k in &report.kinds {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            k.kind,
            k.n_sites,
            k.n_consistent,
            fmt_pct(k.cr),
            fmt_pct(k.sr),
            fmt_pct(k.cr_doc_avg),
            fmt_pct(k.sr_doc_avg)
        )?;
    }
    Ok(())
}

/// Writes the per-site detail as JSON lines.
pub fn write_detail_jsonl<W: Write>(report: &RobustnessReport, w: &mut W) -> Result<()> {
    for outcome in &report.details {
        let line = serde_json::to_string(outcome)
            .map_err(|e| Error::invalid(format!("detail serialization failed: {e}")))?;
        writeln!(w, "{line}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_doc_dataset() -> Dataset {
        let docs = vec![
            Document::new("d0", "a car", BTreeSet::from([0])),
            Document::new("d1", "a cab", BTreeSet::from([1])),
        ];
        Dataset::new(docs, vec!["l0".into(), "l1".into()], "test").unwrap()
    }

    /// Predicts {0} when any token reads "car", {1} otherwise.
    fn car_detector(doc: &Document) -> Result<BTreeSet<usize>> {
        let has_car = doc.tokens.iter().any(|t| t.surface == "car");
        Ok(BTreeSet::from([usize::from(!has_car)]))
    }

    #[test]
    fn constant_model_is_fully_consistent() {
        let data = two_doc_dataset();
        let report = attack_suite(
            |_| Ok(BTreeSet::from([0])),
            &data,
            &AttackKind::ALL,
            SiteSelection::All,
        )
        .unwrap();
        for k in &report.kinds {
            if k.n_sites > 0 {
                assert_eq!(k.cr, Some(100.0), "{}", k.kind);
                assert_eq!(k.sr, Some(0.0), "{}", k.kind);
            } else {
                assert_eq!(k.cr, None, "{} should be n/a", k.kind);
            }
        }
        assert_eq!(report.mean_cr(), Some(100.0));
    }

    #[test]
    fn three_of_four_consistent_sites_give_cr_75() {
        let data = two_doc_dataset();
        let report = attack_suite(
            car_detector,
            &data,
            &[AttackKind::WordLevel],
            SiteSelection::All,
        )
        .unwrap();
        let k = &report.kinds[0];
        assert_eq!((k.n_sites, k.n_consistent), (4, 3));
        assert_eq!(k.cr, Some(75.0));
        assert_eq!(k.sr, Some(25.0));
        // d0: 1/2 consistent, d1: 2/2 → doc average (50 + 100) / 2.
        assert_eq!(k.cr_doc_avg, Some(75.0));
        assert_eq!(report.details.len(), 4);
        let changed: Vec<bool> = report.details.iter().map(|o| o.changed).collect();
        assert_eq!(changed, [false, true, false, false]);
    }

    #[test]
    fn cr_and_sr_always_sum_to_one_hundred() {
        let data = two_doc_dataset();
        let report =
            attack_suite(car_detector, &data, &AttackKind::ALL, SiteSelection::All).unwrap();
        for k in &report.kinds {
            if let (Some(cr), Some(sr)) = (k.cr, k.sr) {
                assert!((cr + sr - 100.0).abs() < 1e-9, "{}", k.kind);
            }
        }
    }

    #[test]
    fn zero_site_kinds_report_not_applicable() {
        let data = two_doc_dataset();
        let report = attack_suite(
            car_detector,
            &data,
            &[AttackKind::SeqNumber, AttackKind::Punctuation],
            SiteSelection::All,
        )
        .unwrap();
        assert!(report.kinds.iter().all(|k| k.cr.is_none() && k.n_sites == 0));
        assert_eq!(report.mean_cr(), None);
        assert!(report.details.is_empty());
    }

    #[test]
    fn sampling_is_reproducible_and_bounded() {
        let docs = vec![
            Document::new("d0", "the quick brown fox jumps over the lazy dog", BTreeSet::new()),
            Document::new("d1", "a stitch in time saves nine lives", BTreeSet::new()),
        ];
        let data = Dataset::new(docs, vec!["l0".into()], "test").unwrap();
        let sel = SiteSelection::Sampled { per_doc: 2, seed: 11 };
        let run = || {
            attack_suite(|_| Ok(BTreeSet::new()), &data, &[AttackKind::WordLevel], sel).unwrap()
        };
        let a = run();
        assert_eq!(a, run());
        assert_eq!(a.kinds[0].n_sites, 4, "two per doc");
        let other = attack_suite(
            |_| Ok(BTreeSet::new()),
            &data,
            &[AttackKind::WordLevel],
            SiteSelection::Sampled { per_doc: 2, seed: 12 },
        )
        .unwrap();
        let sites = |r: &RobustnessReport| r.details.iter().map(|o| o.site).collect::<Vec<_>>();
        assert_ne!(sites(&a), sites(&other), "a different seed should move the sample");
    }

    #[test]
    fn csv_and_jsonl_formats_are_stable() {
        let data = two_doc_dataset();
        let report = attack_suite(
            car_detector,
            &data,
            &[AttackKind::WordLevel, AttackKind::SeqNumber],
            SiteSelection::All,
        )
        .unwrap();
        let mut csv = Vec::new();
        write_report_csv(&report, &mut csv).unwrap();
        let csv = String::from_utf8(csv).unwrap();
        assert_eq!(
            csv,
            "attack_kind,n_sites,n_consistent,cr,sr,cr_doc_avg,sr_doc_avg\n\
             word_level,4,3,75.0000,25.0000,75.0000,25.0000\n\
             seq_number,0,0,n/a,n/a,n/a,n/a\n"
        );
        let mut jsonl = Vec::new();
        write_detail_jsonl(&report, &mut jsonl).unwrap();
        let jsonl = String::from_utf8(jsonl).unwrap();
        let first = jsonl.lines().next().unwrap();
        assert_eq!(first, r#"{"doc_id":"d0","kind":"word_level","site":0,"changed":false}"#);
        for line in jsonl.lines() {
            let parsed: SiteOutcome = serde_json::from_str(line).unwrap();
            assert!(report.details.contains(&parsed));
        }
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let data = Dataset::new(vec![], vec!["l0".into()], "test").unwrap();
        assert!(attack_suite(car_detector, &data, &AttackKind::ALL, SiteSelection::All).is_err());
    }
}
