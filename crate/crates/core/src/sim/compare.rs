//! Cross-algorithm comparison of simulation reports.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{mean, Algorithm, SimReport, UserReport};
use crate::error::{Error, Result};

/// Point of an empirical CDF: the fraction of samples `<= value`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CdfPoint {
    pub value: f64,
    pub fraction: f64,
}

/// Step points of the empirical CDF, one per distinct value.
pub fn ecdf(values: &[f64]) -> Vec<CdfPoint> {
    let mut sorted: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
    sorted.sort_by(f64::total_cmp);
    let total = sorted.len() as f64;
    let mut out: Vec<CdfPoint> = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        let fraction = (i + 1) as f64 / total;
        match out.last_mut() {
            Some(last) if last.value == v => last.fraction = fraction,
            _ => out.push(CdfPoint { value: v, fraction }),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum UserGroup {
    Heavy,
    Light,
}

impl UserGroup {
    pub const fn name(self) -> &'static str {
        match self {
            UserGroup::Heavy => "heavy",
            UserGroup::Light => "light",
        }
    }
}

/// Baseline over reference, per user. `None` when the reference is 0 and
/// the baseline is not.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UserRatio {
    pub user: String,
    pub group: UserGroup,
    pub utility: Option<f64>,
    pub spend: Option<f64>,
    pub offloaded: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AlgorithmComparison {
    pub algorithm: Algorithm,
    pub ratios: Vec<UserRatio>,
    pub cdf_utility: Vec<CdfPoint>,
    pub cdf_spend: Vec<CdfPoint>,
    pub cdf_offload: Vec<CdfPoint>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroupMean {
    pub algorithm: Algorithm,
    pub group: UserGroup,
    pub users: usize,
    pub utility: f64,
    pub spend: f64,
    pub offloaded: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Comparison {
    pub reference: Algorithm,
    pub baselines: Vec<AlgorithmComparison>,
    pub group_means: Vec<GroupMean>,
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    if den != 0.0 {
        Some(num / den)
    } else if num == 0.0 {
        Some(1.0)
    } else {
        None
    }
}

/// Lower half of users by total demand (ties by name) is light, the rest heavy.
fn split_groups(users: &[UserReport]) -> Vec<UserGroup> {
    let mut order: Vec<usize> = (0..users.len()).collect();
    order.sort_by(|&a, &b| users[a].demand.total_cmp(&users[b].demand).then_with(|| users[a].user.cmp(&users[b].user)));
    let mut groups = alloc::vec![UserGroup::Heavy; users.len()];
    for &i in &order[..users.len() / 2] {
        groups[i] = UserGroup::Light;
    }
    groups
}

/// Relative metrics of every report against the AMUSE report (or the first
/// report when there is none).
pub fn compare(reports: &[SimReport]) -> Result<Comparison> {
    if reports.len() < 2 {
        return Err(Error::InvalidArgument(format!("comparison needs at least 2 reports, got {}", reports.len())));
    }
    let reference = reports.iter().find(|r| r.algorithm == Algorithm::Amuse).unwrap_or(&reports[0]);
    let names: BTreeSet<&str> = reference.users.iter().map(|u| u.user.as_str()).collect();
    if names.len() != reference.users.len() {
        return Err(Error::Validation(format!("{} report lists a user twice", reference.algorithm)));
    }
    for r in reports {
        let other: BTreeSet<&str> = r.users.iter().map(|u| u.user.as_str()).collect();
        if other != names || r.users.len() != names.len() {
            return Err(Error::Mismatch(format!(
                "{} and {} reports cover different users",
                reference.algorithm, r.algorithm
            )));
        }
    }
    let groups = split_groups(&reference.users);
    let group_of = |user: &str| {
        let i = reference.users.iter().position(|u| u.user == user).expect("user sets match");
        groups[i]
    };

    let mut baselines = Vec::new();
    for r in reports.iter().filter(|r| !core::ptr::eq(*r, reference)) {
        let ratios: Vec<UserRatio> = reference
            .users
            .iter()
            .map(|base| {
                let u = r.users.iter().find(|u| u.user == base.user).expect("user sets match");
                UserRatio {
                    user: base.user.clone(),
                    group: group_of(&base.user),
                    utility: ratio(u.utility, base.utility),
                    spend: ratio(u.spend, base.spend),
                    offloaded: ratio(u.offloaded, base.offloaded),
                }
            })
            .collect();
        let column = |f: fn(&UserRatio) -> Option<f64>| ecdf(&ratios.iter().filter_map(f).collect::<Vec<_>>());
        baselines.push(AlgorithmComparison {
            algorithm: r.algorithm,
            cdf_utility: column(|x| x.utility),
            cdf_spend: column(|x| x.spend),
            cdf_offload: column(|x| x.offloaded),
            ratios,
        });
    }

    let mut group_means = Vec::new();
    for r in reports {
        for group in [UserGroup::Heavy, UserGroup::Light] {
            let members: Vec<&UserReport> = r.users.iter().filter(|u| group_of(&u.user) == group).collect();
            group_means.push(GroupMean {
                algorithm: r.algorithm,
                group,
                users: members.len(),
                utility: mean(members.iter().map(|u| u.utility)),
                spend: mean(members.iter().map(|u| u.spend)),
                offloaded: mean(members.iter().map(|u| u.offloaded)),
            });
        }
    }
    Ok(Comparison { reference: reference.algorithm, baselines, group_means })
}
