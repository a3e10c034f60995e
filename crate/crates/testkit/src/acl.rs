//! The ACL decision table universe and a brute-force decision oracle.

use wikibridge_core::acl::{Action, AclRule, Effect, Principal, Resource, ResourcePattern, Who};

pub const USERS: [&str; 2] = ["ann", "bert"];
pub const GROUPS: [&str; 3] = ["readers", "editors", "curators"];

/// `ann` is a reader and editor, `bert` an editor and curator.
pub fn principals() -> Vec<Principal> {
    vec![Principal::new("ann", &["readers", "editors"]), Principal::new("bert", &["editors", "curators"])]
}

/// The principal patterns rules can name.
pub fn whos() -> Vec<Who> {
    let mut v: Vec<Who> = USERS.iter().map(|u| Who::User(u.to_string())).collect();
    v.extend(GROUPS.iter().map(|g| Who::Group(g.to_string())));
    v
}

/// One resource pattern per specificity, all covering `Main:Target`.
pub fn patterns() -> [ResourcePattern; 3] {
    [
        ResourcePattern::Page { namespace: "Main".into(), title: "Target".into() },
        ResourcePattern::Namespace("Main".into()),
        ResourcePattern::Any,
    ]
}

/// Requests: the target page, a sibling in the same namespace, a page in
/// another namespace, and a wiki-wide request.
pub fn resources() -> Vec<Resource> {
    vec![
        Resource::page("Main", "Target"),
        Resource::page("Main", "Other"),
        Resource::page("Talk", "Target"),
        Resource::Global,
    ]
}

/// Every rule over users and groups, actions, specificities and effects.
pub fn rule_universe() -> Vec<AclRule> {
    let mut out = Vec::new();
    for who in whos() {
        for action in Action::ALL {
            for resource in patterns() {
                for effect in [Effect::Allow, Effect::Deny] {
                    let text = format!("{effect:?} {who:?} {action} {resource:?}");
                    out.push(AclRule { effect, who: who.clone(), action, resource: resource.clone(), line: 0, text });
                }
            }
        }
    }
    out
}

fn covers(p: &ResourcePattern, r: &Resource) -> bool {
    match (p, r) {
        (ResourcePattern::Any, _) => true,
        (ResourcePattern::Namespace(n), Resource::Page { namespace, .. }) => n == namespace,
        (ResourcePattern::Page { namespace: n, title: t }, Resource::Page { namespace, title }) => {
            n == namespace && t == title
        }
        _ => false,
    }
}

fn names(who: &Who, p: &Principal) -> bool {
    match who {
        Who::Anyone => true,
        Who::User(u) => *u == p.user,
        Who::Group(g) => p.groups.contains(g),
    }
}

/// Walks the strata from page rules down to `*` rules; the first stratum
/// with any applicable rule decides, deny first.
pub fn oracle(rules: &[AclRule], default: Effect, p: &Principal, action: Action, r: &Resource) -> Effect {
    for level in [2u8, 1, 0] {
        let applicable: Vec<&AclRule> = rules
            .iter()
            .filter(|rule| {
                let spec = match rule.resource {
                    ResourcePattern::Page { .. } => 2,
                    ResourcePattern::Namespace(_) => 1,
                    ResourcePattern::Any => 0,
                };
                spec == level && rule.action == action && names(&rule.who, p) && covers(&rule.resource, r)
            })
            .collect();
        if applicable.iter().any(|r| r.effect == Effect::Deny) {
            return Effect::Deny;
        }
        if !applicable.is_empty() {
            return Effect::Allow;
        }
    }
    default
}
