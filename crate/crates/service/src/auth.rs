//! Bearer tokens scoped to one session. Only SHA-256 digests of the secrets
//! are kept, in `<data-dir>/tokens/<session_id>.json`.

use std::collections::HashMap;
use std::fs;
use std::path::PathBuf;
use std::sync::Mutex;

use dsrank_core::{AnalystId, SessionId};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Facilitator,
    Analyst,
}

/// A freshly issued token; the secret is only ever shown here.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiSessionToken {
    pub session_id: SessionId,
    pub role: Role,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analyst_id: Option<AnalystId>,
    pub secret: String,
}

/// What a verified token grants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grant {
    pub role: Role,
    pub analyst_id: Option<AnalystId>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TokenRecord {
    role: Role,
    analyst_id: Option<AnalystId>,
    digest: String,
}

#[derive(Debug)]
pub struct TokenRegistry {
    dir: PathBuf,
    cache: Mutex<HashMap<SessionId, Vec<TokenRecord>>>,
}

fn digest(secret: &str) -> String {
    hex::encode(Sha256::digest(secret.as_bytes()))
}

impl TokenRegistry {
    pub fn open(data_dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = data_dir.into().join("tokens");
        fs::create_dir_all(&dir)?;
        Ok(Self { dir, cache: Mutex::new(HashMap::new()) })
    }

    fn path(&self, session: &SessionId) -> PathBuf {
        self.dir.join(format!("{session}.json"))
    }

    fn records(&self, cache: &mut HashMap<SessionId, Vec<TokenRecord>>, session: &SessionId) -> Vec<TokenRecord> {
        cache
            .entry(session.clone())
            .or_insert_with(|| {
                fs::read(self.path(session)).ok().and_then(|b| serde_json::from_slice(&b).ok()).unwrap_or_default()
            })
            .clone()
    }

    pub fn issue(&self, session: &SessionId, role: Role, analyst_id: Option<AnalystId>) -> std::io::Result<ApiSessionToken> {
        let mut bytes = [0u8; 16];
        rand::thread_rng().fill_bytes(&mut bytes);
        let secret = hex::encode(bytes);

        let mut cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
        let mut records = self.records(&mut cache, session);
        records.push(TokenRecord { role, analyst_id: analyst_id.clone(), digest: digest(&secret) });
        let tmp = self.dir.join(format!("{session}.json.tmp"));
        fs::write(&tmp, serde_json::to_vec_pretty(&records)?)?;
        fs::rename(&tmp, self.path(session))?;
        cache.insert(session.clone(), records);

        Ok(ApiSessionToken { session_id: session.clone(), role, analyst_id, secret })
    }

    pub fn verify(&self, session: &SessionId, secret: &str) -> Option<Grant> {
        let d = digest(secret);
        let mut cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
        self.records(&mut cache, session)
            .into_iter()
            .find(|r| r.digest == d)
            .map(|r| Grant { role: r.role, analyst_id: r.analyst_id })
    }
}
