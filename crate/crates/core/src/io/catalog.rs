//! Starter catalogs for brainstorming criteria and requirements sources.

use serde::{Deserialize, Serialize};

use crate::model::SourceCategory;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriteriaCategory {
    pub category: String,
    pub high_level: String,
    pub examples: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceCatalogEntry {
    pub category: String,
    pub kind: SourceCategory,
    pub high_level: Vec<String>,
    pub examples: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedCatalog {
    pub criteria: Vec<CriteriaCategory>,
    pub sources: Vec<SourceCatalogEntry>,
}

impl SeedCatalog {
    pub fn criteria_category(&self, name: &str) -> Option<&CriteriaCategory> {
        self.criteria.iter().find(|c| c.category == name)
    }

    pub fn source_category(&self, name: &str) -> Option<&SourceCatalogEntry> {
        self.sources.iter().find(|c| c.category == name)
    }
}

const CRITERIA: &[(&str, &str, &str)] = &[
    (
        "Benefits in terms of knowledge",
        "Level, type of knowledge",
        "Domain, customer needs, and wishes, product technologies or features, business processes, laws, regulations, standards",
    ),
    (
        "Benefits in terms of experience",
        "The amount, type of experience",
        "The product, similar products, specific market segments, domain, product technologies",
    ),
    (
        "Benefits in terms of financial value",
        "Revenue, potential revenue, profit",
        "Customer lifetime value, price per purchase",
    ),
    ("Costs", "Associated costs, indirect costs", "Access, establishing access, maintaining access"),
    (
        "Penalties",
        "Opportunity cost",
        "Business, market, technical, financial, reputation, the dissatisfaction of other stakeholders",
    ),
    (
        "Risks",
        "Generic risk",
        "Human errors, technical risks, implementation risks, volatility, business risks, time, budget, project scope, dependencies, reputation, legitimacy",
    ),
    ("Temporal context", "Timing", "Lead time, time to access, timeliness of data, frequency of access"),
    (
        "Suitability for use",
        "Ease of use",
        "Ease of access, mutual trust, understandability, granularity, analyzability, accuracy, overhead",
    ),
    (
        "Behavioral",
        "Suitability for collaboration",
        "Availability, interest to contribute, commitment, volatility, trustworthiness, willingness to experiment, capacity volunteer resources for collaboration, power, leverage",
    ),
];

const SOURCES: &[(&str, SourceCategory, &str, &str)] = &[
    (
        "Internal stakeholders",
        SourceCategory::InternalStakeholder,
        "Engineers, Product managers, business stakeholders",
        "Product engineers, architects, customer service representatives, sales representatives, managers, company executives",
    ),
    (
        "External stakeholders",
        SourceCategory::ExternalStakeholder,
        "Users",
        "Premium customers, freemium customers, prospects, end-users, partners, competitors, suppliers, lawmakers, regulators",
    ),
    ("Analytics", SourceCategory::Analytics, "Product usage data", "Telemetry data, user data, user behavior analysis"),
    (
        "Reports",
        SourceCategory::Report,
        "Market research",
        "Market analysis, public surveys, trends, analysis of similar products",
    ),
    (
        "Environment",
        SourceCategory::Environment,
        "Domain knowledge",
        "Domain experts, Technology standards, laws, regulations, industry conventions, opinion leaders",
    ),
];

fn split(list: &str) -> Vec<String> {
    list.split(", ").map(str::to_owned).collect()
}

pub fn load_seed_catalog() -> SeedCatalog {
    SeedCatalog {
        criteria: CRITERIA
            .iter()
            .map(|(category, high_level, examples)| CriteriaCategory {
                category: (*category).into(),
                high_level: (*high_level).into(),
                examples: split(examples),
            })
            .collect(),
        sources: SOURCES
            .iter()
            .map(|(category, kind, high_level, examples)| SourceCatalogEntry {
                category: (*category).into(),
                kind: *kind,
                high_level: split(high_level),
                examples: split(examples),
            })
            .collect(),
    }
}
