use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::{Error, Result};

/// A scored sequence with its routed cluster and ground-truth label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredSequence {
    pub cluster: usize,
    pub score: f64,
    pub label: Label,
}

/// One point of the ROC sweep. A sequence is flagged novel when its score is
/// at least `threshold`; the leading point has no threshold and flags nothing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdPolicy {
    /// One threshold maximizing Youden's J on the pooled validation scores.
    #[default]
    YoudenGlobal,
    /// Youden's J per routed cluster, falling back to the pooled threshold
    /// for clusters whose validation scores lack a class.
    YoudenPerCluster,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub cluster: usize,
    pub size: usize,
    pub normal: usize,
    pub novel: usize,
    /// `None` when the cluster's test sequences lack a class.
    pub auc: Option<f64>,
    /// AUC of the global model on the same sequences, when supplied.
    #[serde(default)]
    pub global_auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub normal: usize,
    pub novel: usize,
    pub roc: Vec<RocPoint>,
    pub auc: f64,
    pub threshold_policy: ThresholdPolicy,
    pub threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_thresholds: Option<BTreeMap<usize, f64>>,
    pub sensitivity: f64,
    pub specificity: f64,
    pub per_cluster: Vec<ClusterReport>,
}

fn split_labels(scores: &[f64], novel: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != novel.len() {
        return Err(Error::LengthMismatch {
            what: "scores vs labels",
            left: scores.len(),
            right: novel.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(Error::invalid(format!("score {i} is NaN")));
    }
    let pos = novel.iter().filter(|&&b| b).count();
    let neg = novel.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass {
            normal: neg,
            novel: pos,
        });
    }
    Ok((pos, neg))
}

/// Cumulative (false, true) positive counts after each group of tied scores,
/// highest score first.
fn sweep(scores: &[f64], novel: &[bool]) -> Vec<(u64, u64, f64)> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut out = Vec::new();
    let (mut fp, mut tp) = (0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if novel[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        out.push((fp, tp, s));
    }
    out
}

/// ROC curve with novel as the positive class, from (0, 0) to (1, 1).
pub fn roc_curve(scores: &[f64], novel: &[bool]) -> Result<Vec<RocPoint>> {
    let (pos, neg) = split_labels(scores, novel)?;
    let mut roc = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: None,
    }];
    roc.extend(sweep(scores, novel).into_iter().map(|(fp, tp, s)| RocPoint {
        fpr: fp as f64 / neg as f64,
        tpr: tp as f64 / pos as f64,
        threshold: Some(s),
    }));
    Ok(roc)
}

/// Area under the ROC curve by the trapezoid rule.
///
/// The area is accumulated in integer units of `1 / (2 * pos * neg)`, so the
/// result is exactly the fraction of (novel, normal) pairs ordered correctly,
/// with ties counting one half.
pub fn auc(scores: &[f64], novel: &[bool]) -> Result<f64> {
    let (pos, neg) = split_labels(scores, novel)?;
    let mut area2: u128 = 0;
    let (mut fp0, mut tp0) = (0u64, 0u64);
    for (fp, tp, _) in sweep(scores, novel) {
        area2 += (fp - fp0) as u128 * (tp + tp0) as u128;
        fp0 = fp;
        tp0 = tp;
    }
    Ok(area2 as f64 / (2 * pos as u128 * neg as u128) as f64)
}

/// Threshold maximizing `tpr - fpr`; ties go to the highest threshold.
pub fn youden_threshold(scores: &[f64], novel: &[bool]) -> Result<f64> {
    let roc = roc_curve(scores, novel)?;
    let mut best = (f64::NEG_INFINITY, f64::INFINITY);
    for p in &roc {
        if let Some(t) = p.threshold {
            let j = p.tpr - p.fpr;
            if j > best.0 {
                best = (j, t);
            }
        }
    }
    Ok(best.1)
}

fn labeled(xs: &[ScoredSequence]) -> (Vec<f64>, Vec<bool>) {
    xs.iter()
        .filter(|x| x.label != Label::Unlabeled)
        .map(|x| (x.score, x.label == Label::Novel))
        .unzip()
}

fn cluster_reports(test: &[ScoredSequence]) -> Vec<ClusterReport> {
    let mut groups: BTreeMap<usize, Vec<ScoredSequence>> = BTreeMap::new();
    for x in test {
        groups.entry(x.cluster).or_default().push(*x);
    }
    groups
        .into_iter()
        .map(|(cluster, xs)| {
            let (s, l) = labeled(&xs);
            let novel = l.iter().filter(|&&b| b).count();
            ClusterReport {
                cluster,
                size: xs.len(),
                normal: l.len() - novel,
                novel,
                auc: auc(&s, &l).ok(),
                global_auc: None,
            }
        })
        .collect()
}

/// Scores test sequences against a threshold chosen on validation scores.
///
/// Unlabeled sequences are ignored except in per-cluster sizes.
pub fn evaluate(
    method: impl Into<String>,
    test: &[ScoredSequence],
    validation: &[ScoredSequence],
    policy: ThresholdPolicy,
) -> Result<EvalReport> {
    let (scores, novel) = labeled(test);
    let roc = roc_curve(&scores, &novel)?;
    let area = auc(&scores, &novel)?;
    let (vs, vl) = labeled(validation);
    let threshold = youden_threshold(&vs, &vl)?;

    let cluster_thresholds = match policy {
        ThresholdPolicy::YoudenGlobal => None,
        ThresholdPolicy::YoudenPerCluster => {
            let mut map = BTreeMap::new();
            let clusters: std::collections::BTreeSet<usize> =
                test.iter().chain(validation).map(|x| x.cluster).collect();
            for c in clusters {
                let sub: Vec<ScoredSequence> =
                    validation.iter().filter(|x| x.cluster == c).copied().collect();
                let (s, l) = labeled(&sub);
                map.insert(c, youden_threshold(&s, &l).unwrap_or(threshold));
            }
            Some(map)
        }
    };
    let threshold_for = |c: usize| {
        cluster_thresholds
            .as_ref()
            .and_then(|m| m.get(&c).copied())
            .unwrap_or(threshold)
    };

    let (mut tp, mut tn, mut pos, mut neg) = (0usize, 0usize, 0usize, 0usize);
    for x in test.iter().filter(|x| x.label != Label::Unlabeled) {
        let flagged = x.score >= threshold_for(x.cluster);
        if x.label == Label::Novel {
            pos += 1;
            tp += flagged as usize;
        } else {
            neg += 1;
            tn += !flagged as usize;
        }
    }
    Ok(EvalReport {
        method: method.into(),
        normal: neg,
        novel: pos,
        roc,
        auc: area,
        threshold_policy: policy,
        threshold,
        cluster_thresholds,
        sensitivity: tp as f64 / pos as f64,
        specificity: tn as f64 / neg as f64,
        per_cluster: cluster_reports(test),
    })
}

/// Per-cluster AUCs of a decomposed detector next to those of a global model
/// scored on the same test sequences (index-aligned).
pub fn per_cluster_report(
    detector: &[ScoredSequence],
    global: &[f64],
) -> Result<Vec<ClusterReport>> {
    if detector.len() != global.len() {
        return Err(Error::LengthMismatch {
            what: "detector vs global scores",
            left: detector.len(),
            right: global.len(),
        });
    }
    let mut reports = cluster_reports(detector);
    for r in reports.iter_mut() {
        let sub: Vec<ScoredSequence> = detector
            .iter()
            .zip(global)
            .filter(|(x, _)| x.cluster == r.cluster)
            .map(|(x, &g)| ScoredSequence { score: g, ..*x })
            .collect();
        let (s, l) = labeled(&sub);
        r.global_auc = auc(&s, &l).ok();
    }
    Ok(reports)
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.3}")).unwrap_or_else(|| "undefined".into())
}

/// Plain-text results table: one row per method, then per-cluster rows.
pub fn format_table(reports: &[EvalReport]) -> String {
    let width = reports
        .iter()
        .map(|r| r.method.len())
        .chain([6])
        .max()
        .unwrap_or(6);
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}  {:>6}  {:>6}  {:>6}", "Method", "AUC", "Sens.", "Spec.");
    for r in reports {
        let _ = writeln!(
            out,
            "{:<width$}  {:>6.3}  {:>6.3}  {:>6.3}",
            r.method, r.auc, r.sensitivity, r.specificity
        );
    }
    for r in reports.iter().filter(|r| r.per_cluster.len() > 1) {
        let _ = writeln!(out, "\n{} per cluster", r.method);
        let _ = writeln!(out, "{:>7}  {:>6}  {:>9}  {:>9}", "Cluster", "Size", "AUC", "Global");
        for c in &r.per_cluster {
            let _ = writeln!(
                out,
                "{:>7}  {:>6}  {:>9}  {:>9}",
                c.cluster,
                c.size,
                fmt_opt(c.auc),
                c.global_auc.map(|g| format!("{g:.3}")).unwrap_or_else(|| "-".into())
            );
        }
    }
    out
}
