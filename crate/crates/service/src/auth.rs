//! Password records and bearer-token sessions.
//!
//! `users.auth` holds one `user:<id> sha256$<salt>$<digest>` line per user,
//! where the digest is SHA-256 over `salt:password` in hex.

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use sha2::{Digest, Sha256};

pub const DEFAULT_TOKEN_TTL: Duration = Duration::from_secs(24 * 60 * 60);

fn digest(salt: &str, password: &str) -> String {
    let mut h = Sha256::new();
    h.update(salt.as_bytes());
    h.update(b":");
    h.update(password.as_bytes());
    hex::encode(h.finalize())
}

/// A password record with a fresh random salt.
pub fn hash_password(password: &str) -> String {
    let salt = format!("{:016x}", rand::random::<u64>());
    format!("sha256${salt}${}", digest(&salt, password))
}

pub fn verify_password(record: &str, password: &str) -> bool {
    let mut parts = record.splitn(3, '$');
    match (parts.next(), parts.next(), parts.next()) {
        (Some("sha256"), Some(salt), Some(hex)) => digest(salt, password) == hex,
        _ => false,
    }
}

#[derive(Debug, Clone, Default)]
pub struct Users {
    records: BTreeMap<String, String>,
}

impl Users {
    /// Parses `users.auth`; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Users, String> {
        let mut records = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            match (it.next(), it.next(), it.next()) {
                (Some(user), Some(record), None) if record.starts_with("sha256$") => match user.strip_prefix("user:") {
                    Some(id) if !id.is_empty() => {
                        records.insert(id.to_owned(), record.to_owned());
                    }
                    _ => return Err(format!("users.auth line {}: expected 'user:<id>'", i + 1)),
                },
                _ => return Err(format!("users.auth line {}: expected 'user:<id> sha256$<salt>$<digest>'", i + 1)),
            }
        }
        Ok(Users { records })
    }

    pub fn set(&mut self, user: &str, password: &str) {
        self.records.insert(user.to_owned(), hash_password(password));
    }

    pub fn verify(&self, user: &str, password: &str) -> bool {
        self.records.get(user).is_some_and(|r| verify_password(r, password))
    }

    pub fn to_text(&self) -> String {
        self.records.iter().map(|(u, r)| format!("user:{u} {r}\n")).collect()
    }
}

/// Opaque 128-bit tokens that expire after a period without use.
#[derive(Debug)]
pub struct Sessions {
    ttl: Duration,
    live: Mutex<HashMap<String, (String, Instant)>>,
}

impl Sessions {
    pub fn new(ttl: Duration) -> Sessions {
        Sessions { ttl, live: Mutex::new(HashMap::new()) }
    }

    pub fn issue(&self, user: &str) -> String {
        let token = format!("{:032x}", rand::random::<u128>());
        let mut live = self.live.lock().expect("session lock");
        let now = Instant::now();
        live.retain(|_, (_, seen)| now.duration_since(*seen) < self.ttl);
        live.insert(token.clone(), (user.to_owned(), now));
        token
    }

    /// The user behind a live token; each use restarts the idle timer.
    pub fn resolve(&self, token: &str) -> Option<String> {
        let mut live = self.live.lock().expect("session lock");
        let now = Instant::now();
        let (user, seen) = live.get_mut(token)?;
        if now.duration_since(*seen) >= self.ttl {
            live.remove(token);
            return None;
        }
        *seen = now;
        Some(user.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_verify() {
        let rec = hash_password("s3cret");
        assert!(verify_password(&rec, "s3cret"));
        assert!(!verify_password(&rec, "S3cret"));
        assert_ne!(hash_password("s3cret"), rec);
        let users = Users::parse(&format!("# users\nuser:alice {rec}\n")).unwrap();
        assert!(users.verify("alice", "s3cret"));
        assert!(!users.verify("bob", "s3cret"));
        assert!(Users::parse(&users.to_text()).unwrap().verify("alice", "s3cret"));
        assert!(Users::parse("user:alice plain").is_err());
        assert!(Users::parse(&format!("alice {rec}")).is_err());
    }

    #[test]
    fn tokens_expire_when_idle() {
        let s = Sessions::new(Duration::from_millis(30));
        let t = s.issue("alice");
        assert_eq!(t.len(), 32);
        assert_eq!(s.resolve(&t).as_deref(), Some("alice"));
        std::thread::sleep(Duration::from_millis(40));
        assert_eq!(s.resolve(&t), None);
        assert_eq!(s.resolve("nope"), None);
    }
}
