//! Access control lists.
//!
//! ```text
//! user alice groups editors,specialists
//! allow group:editors edit namespace:Main
//! deny user:bob edit page:Main:Secret
//! default read allow
//! ```
//!
//! Rules that match a request are grouped by resource specificity (page,
//! then namespace, then `*`). The most specific non-empty group decides,
//! and inside it a deny beats any allow. With no matching rule the
//! per-action default applies, which is deny unless configured.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::rdf::decode_segment;

pub const ANONYMOUS: &str = "anonymous";

/// Role presets: readers read; contributors also edit and annotate;
/// specialists also query; admins may do everything.
pub const PRESET_ACL: &str = "\
# Role presets
allow group:readers read *
allow group:contributors read *
allow group:contributors edit *
allow group:contributors annotate *
allow group:specialists read *
allow group:specialists edit *
allow group:specialists annotate *
allow group:specialists query *
allow group:admins read *
allow group:admins edit *
allow group:admins annotate *
allow group:admins query *
allow group:admins admin *
";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Read,
    Edit,
    Annotate,
    Query,
    Admin,
}

impl Action {
    pub const ALL: [Action; 5] = [Action::Read, Action::Edit, Action::Annotate, Action::Query, Action::Admin];

    pub fn name(self) -> &'static str {
        match self {
            Action::Read => "read",
            Action::Edit => "edit",
            Action::Annotate => "annotate",
            Action::Query => "query",
            Action::Admin => "admin",
        }
    }
}

impl FromStr for Action {
    type Err = ();

    fn from_str(s: &str) -> Result<Action, ()> {
        Action::ALL.into_iter().find(|a| a.name() == s).ok_or(())
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Effect {
    Allow,
    Deny,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Who {
    User(String),
    Group(String),
    Anyone,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ResourcePattern {
    Page { namespace: String, title: String },
    Namespace(String),
    Any,
}

impl ResourcePattern {
    pub fn specificity(&self) -> u8 {
        match self {
            ResourcePattern::Page { .. } => 2,
            ResourcePattern::Namespace(_) => 1,
            ResourcePattern::Any => 0,
        }
    }

    pub fn matches(&self, resource: &Resource) -> bool {
        match (self, resource) {
            (ResourcePattern::Any, _) => true,
            (ResourcePattern::Namespace(n), Resource::Page { namespace, .. }) => n == namespace,
            (ResourcePattern::Page { namespace: n, title: t }, Resource::Page { namespace, title }) => {
                n == namespace && t == title
            }
            _ => false,
        }
    }
}

/// What a request touches: one page, or something wiki-wide (queries,
/// the ontology) that only `*` rules cover.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Resource {
    Page { namespace: String, title: String },
    Global,
}

impl Resource {
    pub fn page(namespace: &str, title: &str) -> Resource {
        Resource::Page { namespace: namespace.to_owned(), title: title.to_owned() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AclRule {
    pub effect: Effect,
    pub who: Who,
    pub action: Action,
    pub resource: ResourcePattern,
    /// 1-based line in the source file; 0 for rules built in code.
    pub line: usize,
    pub text: String,
}

impl AclRule {
    pub fn applies_to(&self, principal: &Principal, action: Action, resource: &Resource) -> bool {
        self.action == action
            && self.resource.matches(resource)
            && match &self.who {
                Who::Anyone => true,
                Who::User(u) => *u == principal.user,
                Who::Group(g) => principal.groups.contains(g),
            }
    }
}

impl fmt::Display for AclRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "line {}: {}", self.line, self.text)
        } else {
            f.write_str(&self.text)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Principal {
    pub user: String,
    pub groups: BTreeSet<String>,
}

impl Principal {
    pub fn new(user: &str, groups: &[&str]) -> Principal {
        Principal { user: user.to_owned(), groups: groups.iter().map(|g| g.to_string()).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decision {
    pub effect: Effect,
    /// The deciding rule; `None` when the default applied.
    pub matched_rule: Option<AclRule>,
}

impl Decision {
    pub fn allowed(&self) -> bool {
        self.effect == Effect::Allow
    }

    pub fn describe(&self) -> String {
        match &self.matched_rule {
            Some(r) => r.to_string(),
            None => "default policy".to_owned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AclError {
    #[error("acl line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("acl line {line}: unknown action '{action}'")]
    UnknownAction { line: usize, action: String },
}

impl AclError {
    pub fn line(&self) -> usize {
        match self {
            AclError::Syntax { line, .. } | AclError::UnknownAction { line, .. } => *line,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Acl {
    pub rules: Vec<AclRule>,
    pub memberships: BTreeMap<String, BTreeSet<String>>,
    pub defaults: BTreeMap<Action, Effect>,
}

fn parse_who(s: &str) -> Option<Who> {
    if s == "*" {
        return Some(Who::Anyone);
    }
    let (kind, name) = s.split_once(':')?;
    if name.is_empty() {
        return None;
    }
    match kind {
        "user" => Some(Who::User(name.to_owned())),
        "group" => Some(Who::Group(name.to_owned())),
        _ => None,
    }
}

fn parse_resource(s: &str) -> Option<ResourcePattern> {
    if s == "*" {
        return Some(ResourcePattern::Any);
    }
    let (kind, rest) = s.split_once(':')?;
    match kind {
        "namespace" if !rest.is_empty() => Some(ResourcePattern::Namespace(decode_segment(rest))),
        "page" => {
            let (ns, title) = rest.split_once(':')?;
            (!ns.is_empty() && !title.is_empty())
                .then(|| ResourcePattern::Page { namespace: decode_segment(ns), title: decode_segment(title) })
        }
        _ => None,
    }
}

/// Parses an ACL file. Rules keep file order.
pub fn load_acl(text: &str) -> Result<Acl, AclError> {
    let mut acl = Acl::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or_default().trim();
        if content.is_empty() {
            continue;
        }
        let syntax = |message: String| AclError::Syntax { line, message };
        let action = |s: &str| s.parse::<Action>().map_err(|_| AclError::UnknownAction { line, action: s.to_owned() });
        let tokens: Vec<&str> = content.split_whitespace().collect();
        match tokens.as_slice() {
            [effect @ ("allow" | "deny"), who, act, resource] => {
                let rule = AclRule {
                    effect: if *effect == "allow" { Effect::Allow } else { Effect::Deny },
                    who: parse_who(who).ok_or_else(|| syntax(format!("bad principal '{who}'")))?,
                    action: action(act)?,
                    resource: parse_resource(resource).ok_or_else(|| syntax(format!("bad resource '{resource}'")))?,
                    line,
                    text: content.to_owned(),
                };
                acl.rules.push(rule);
            }
            ["user", id, "groups", rest @ ..] => {
                let groups: BTreeSet<String> =
                    rest.join(" ").split(',').map(str::trim).filter(|g| !g.is_empty()).map(str::to_owned).collect();
                acl.memberships.entry(id.to_string()).or_default().extend(groups);
            }
            ["default", act, effect @ ("allow" | "deny")] => {
                let effect = if *effect == "allow" { Effect::Allow } else { Effect::Deny };
                if *act == "*" {
                    for a in Action::ALL {
                        acl.defaults.insert(a, effect);
                    }
                } else {
                    acl.defaults.insert(action(act)?, effect);
                }
            }
            [first, ..] if !matches!(*first, "allow" | "deny" | "user" | "default") => {
                return Err(syntax(format!("unknown keyword '{first}'")));
            }
            _ => return Err(syntax(format!("malformed line {content:?}"))),
        }
    }
    Ok(acl)
}

/// The stratified decision procedure over an explicit rule list.
pub fn authorize(
    principal: &Principal,
    action: Action,
    resource: &Resource,
    rules: &[AclRule],
    defaults: &BTreeMap<Action, Effect>,
) -> Decision {
    let matching: Vec<&AclRule> = rules.iter().filter(|r| r.applies_to(principal, action, resource)).collect();
    let Some(top) = matching.iter().map(|r| r.resource.specificity()).max() else {
        return Decision { effect: defaults.get(&action).copied().unwrap_or(Effect::Deny), matched_rule: None };
    };
    let stratum: Vec<&AclRule> = matching.into_iter().filter(|r| r.resource.specificity() == top).collect();
    let decider = stratum
        .iter()
        .find(|r| r.effect == Effect::Deny)
        .or_else(|| stratum.first())
        .expect("stratum is nonempty");
    Decision { effect: decider.effect, matched_rule: Some((*decider).clone()) }
}

impl Acl {
    /// The principal for `user` with the groups the file assigns it.
    pub fn principal(&self, user: &str) -> Principal {
        Principal { user: user.to_owned(), groups: self.memberships.get(user).cloned().unwrap_or_default() }
    }

    pub fn authorize(&self, principal: &Principal, action: Action, resource: &Resource) -> Decision {
        authorize(principal, action, resource, &self.rules, &self.defaults)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_rule_and_specificity() {
        let acl = load_acl("allow group:editors edit page:Main:StMartin").unwrap();
        assert_eq!(acl.rules.len(), 1);
        assert_eq!(acl.rules[0].resource.specificity(), 2);
    }

    #[test]
    fn syntax_errors() {
        assert_eq!(load_acl("permit bob edit *").unwrap_err().line(), 1);
        assert!(matches!(
            load_acl("# c\nallow user:x fly *").unwrap_err(),
            AclError::UnknownAction { line: 2, .. }
        ));
        assert!(load_acl("allow bob edit *").is_err());
        assert!(load_acl("allow user:bob edit page:Main").is_err());
    }

    #[test]
    fn empty_file_denies_everything() {
        let acl = load_acl("").unwrap();
        let p = Principal::new("x", &[]);
        for a in Action::ALL {
            assert!(!acl.authorize(&p, a, &Resource::Global).allowed());
        }
        let acl = load_acl("default read allow").unwrap();
        assert!(acl.authorize(&p, Action::Read, &Resource::page("Main", "A")).allowed());
        assert!(!acl.authorize(&p, Action::Edit, &Resource::page("Main", "A")).allowed());
    }

    #[test]
    fn group_membership() {
        let acl = load_acl("user alice groups editors, other\nallow group:editors edit page:Main:StMartin").unwrap();
        let alice = acl.principal("alice");
        let d = acl.authorize(&alice, Action::Edit, &Resource::page("Main", "StMartin"));
        assert!(d.allowed());
        assert_eq!(d.matched_rule.unwrap().line, 2);
    }

    #[test]
    fn page_beats_namespace() {
        let acl = load_acl("allow user:bob edit namespace:Main\ndeny user:bob edit page:Main:Secret").unwrap();
        let bob = acl.principal("bob");
        let d = acl.authorize(&bob, Action::Edit, &Resource::page("Main", "Secret"));
        assert_eq!(d.effect, Effect::Deny);
        assert_eq!(d.matched_rule.as_ref().unwrap().line, 2);
        assert!(acl.authorize(&bob, Action::Edit, &Resource::page("Main", "Other")).allowed());
    }

    #[test]
    fn deny_wins_within_stratum_and_global_needs_star() {
        let acl = load_acl("allow * query *\ndeny group:g query *\nallow user:u read namespace:Main").unwrap();
        assert!(!acl.authorize(&Principal::new("u", &["g"]), Action::Query, &Resource::Global).allowed());
        assert!(acl.authorize(&Principal::new("v", &[]), Action::Query, &Resource::Global).allowed());
        assert!(!acl.authorize(&Principal::new("u", &[]), Action::Read, &Resource::Global).allowed());
    }

    #[test]
    fn presets() {
        let acl = load_acl(PRESET_ACL).unwrap();
        let readers = Principal::new("r", &["readers"]);
        let page = Resource::page("Main", "X");
        assert!(acl.authorize(&readers, Action::Read, &page).allowed());
        assert!(!acl.authorize(&readers, Action::Query, &Resource::Global).allowed());
        let spec = Principal::new("s", &["specialists"]);
        assert!(acl.authorize(&spec, Action::Query, &Resource::Global).allowed());
        assert!(!acl.authorize(&spec, Action::Admin, &Resource::Global).allowed());
    }

    #[test]
    fn encoded_titles() {
        let acl = load_acl("deny * read page:Main:St%20Martin").unwrap();
        assert_eq!(
            acl.rules[0].resource,
            ResourcePattern::Page { namespace: "Main".into(), title: "St Martin".into() }
        );
    }
}
