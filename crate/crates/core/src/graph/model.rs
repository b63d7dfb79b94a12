use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::GraphError;

pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
pub const RDF_PROPERTY: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#Property";
pub const RDFS_LABEL: &str = "http://www.w3.org/2000/01/rdf-schema#label";
pub const RDFS_CLASS: &str = "http://www.w3.org/2000/01/rdf-schema#Class";
pub const SKOS_ALT_LABEL: &str = "http://www.w3.org/2004/02/skos/core#altLabel";
pub const OWL_CLASS: &str = "http://www.w3.org/2002/07/owl#Class";
pub const OWL_OBJECT_PROPERTY: &str = "http://www.w3.org/2002/07/owl#ObjectProperty";
pub const OWL_DATATYPE_PROPERTY: &str = "http://www.w3.org/2002/07/owl#DatatypeProperty";
pub const OWL_ANNOTATION_PROPERTY: &str = "http://www.w3.org/2002/07/owl#AnnotationProperty";

/// An absolute IRI, stored without the enclosing angle brackets.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Iri(String);

impl Iri {
    pub fn new(value: impl Into<String>) -> Result<Self, GraphError> {
        let value = value.into();
        validate_iri(&value).map_err(|reason| GraphError::InvalidIri { iri: value.clone(), reason })?;
        Ok(Iri(value))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Fragment after the last `/` or `#`, with underscores read as spaces.
    pub fn local_name(&self) -> String {
        let trimmed = self.0.trim_end_matches(['/', '#']);
        let start = trimmed.rfind(['/', '#']).map_or(0, |i| i + 1);
        let mut name = &trimmed[start..];
        if name.is_empty() {
            name = trimmed;
        }
        name.replace('_', " ")
    }
}

fn validate_iri(value: &str) -> Result<(), &'static str> {
    if value.is_empty() {
        return Err("empty");
    }
    if let Some(c) = value
        .chars()
        .find(|c| c.is_whitespace() || matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\'))
    {
        return Err(if c.is_whitespace() { "contains whitespace" } else { "contains a character not allowed in IRIs" });
    }
    let colon = value.find(':').ok_or("not absolute: missing scheme")?;
    let scheme = &value[..colon];
    let mut chars = scheme.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return Err("not absolute: invalid scheme"),
    }
    if !chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.')) {
        return Err("not absolute: invalid scheme");
    }
    Ok(())
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.0)
    }
}

impl TryFrom<String> for Iri {
    type Error = GraphError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        Iri::new(value)
    }
}

impl From<Iri> for String {
    fn from(iri: Iri) -> String {
        iri.0
    }
}

impl AsRef<str> for Iri {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl std::borrow::Borrow<str> for Iri {
    fn borrow(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Literal {
    lexical: String,
    language: Option<String>,
    datatype: Option<Iri>,
}

impl Literal {
    pub fn plain(lexical: impl Into<String>) -> Self {
        Literal { lexical: lexical.into(), language: None, datatype: None }
    }

    pub fn with_language(lexical: impl Into<String>, language: impl Into<String>) -> Self {
        Literal { lexical: lexical.into(), language: Some(language.into()), datatype: None }
    }

    pub fn typed(lexical: impl Into<String>, datatype: Iri) -> Self {
        Literal { lexical: lexical.into(), language: None, datatype: Some(datatype) }
    }

    pub fn lexical(&self) -> &str {
        &self.lexical
    }

    pub fn language(&self) -> Option<&str> {
        self.language.as_deref()
    }

    pub fn datatype(&self) -> Option<&Iri> {
        self.datatype.as_ref()
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("\"")?;
        for c in self.lexical.chars() {
            match c {
                '"' => f.write_str("\\\"")?,
                '\\' => f.write_str("\\\\")?,
                '\n' => f.write_str("\\n")?,
                '\r' => f.write_str("\\r")?,
                c => write!(f, "{c}")?,
            }
        }
        f.write_str("\"")?;
        if let Some(lang) = &self.language {
            write!(f, "@{lang}")?;
        } else if let Some(dt) = &self.datatype {
            write!(f, "^^{dt}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Object {
    Iri(Iri),
    Literal(Literal),
}

impl Object {
    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            Object::Iri(iri) => Some(iri),
            Object::Literal(_) => None,
        }
    }

    /// Display text for entity cards: the IRI or the literal's lexical form.
    pub fn text(&self) -> &str {
        match self {
            Object::Iri(iri) => iri.as_str(),
            Object::Literal(lit) => lit.lexical(),
        }
    }
}

impl fmt::Display for Object {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Object::Iri(iri) => iri.fmt(f),
            Object::Literal(lit) => lit.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Triple {
    pub subject: Iri,
    pub predicate: Iri,
    pub object: Object,
}

impl Triple {
    pub fn new(subject: Iri, predicate: Iri, object: impl Into<Object>) -> Self {
        Triple { subject, predicate, object: object.into() }
    }
}

impl From<Iri> for Object {
    fn from(iri: Iri) -> Self {
        Object::Iri(iri)
    }
}

impl From<Literal> for Object {
    fn from(lit: Literal) -> Self {
        Object::Literal(lit)
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.subject, self.predicate, self.object)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EntityKind {
    Class,
    Property,
    Instance,
}

impl EntityKind {
    pub const ALL: [EntityKind; 3] = [EntityKind::Class, EntityKind::Property, EntityKind::Instance];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Class => "class",
            EntityKind::Property => "property",
            EntityKind::Instance => "instance",
        }
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for EntityKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "class" => Ok(EntityKind::Class),
            "property" => Ok(EntityKind::Property),
            "instance" => Ok(EntityKind::Instance),
            other => Err(format!("unknown entity kind '{other}'")),
        }
    }
}

/// Predicates and marker IRIs that drive kind assignment and label harvesting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractionConfig {
    pub typing_predicate: String,
    pub label_predicate: String,
    pub alt_label_predicate: String,
    pub class_markers: Vec<String>,
    pub property_markers: Vec<String>,
    /// Property-value pairs retained per entity for display cards.
    pub card_facts: usize,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        ExtractionConfig {
            typing_predicate: RDF_TYPE.to_owned(),
            label_predicate: RDFS_LABEL.to_owned(),
            alt_label_predicate: SKOS_ALT_LABEL.to_owned(),
            class_markers: vec![OWL_CLASS.to_owned(), RDFS_CLASS.to_owned()],
            property_markers: vec![
                RDF_PROPERTY.to_owned(),
                OWL_OBJECT_PROPERTY.to_owned(),
                OWL_DATATYPE_PROPERTY.to_owned(),
                OWL_ANNOTATION_PROPERTY.to_owned(),
            ],
            card_facts: 25,
        }
    }
}

impl ExtractionConfig {
    /// Reads a `key = value` config file; absent keys keep their defaults.
    pub fn from_file(path: &Path) -> Result<Self, GraphError> {
        let text = std::fs::read_to_string(path).map_err(|e| GraphError::Io { path: path.display().to_string(), source: e })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, GraphError> {
        toml::from_str(text).map_err(|e| GraphError::Config(e.to_string()))
    }
}

/// An IRI that was typed both as a class and as a property.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KindConflict {
    pub iri: Iri,
    pub resolved: EntityKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntityId(pub(crate) u32);

impl EntityId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Typed entity store for one knowledge graph.
///
/// Entities are interned; labels, alt-labels and retained facts are held in
/// parallel vectors indexed by [`EntityId`]. A finished graph is immutable.
#[derive(Debug, Clone)]
pub struct KnowledgeGraph {
    id: String,
    iris: Vec<Iri>,
    lookup: HashMap<Iri, EntityId>,
    kinds: Vec<EntityKind>,
    labels: Vec<Vec<String>>,
    alt_labels: Vec<Vec<String>>,
    facts: Vec<Vec<(u32, Object)>>,
    predicates: Vec<Iri>,
    triple_count: u64,
    conflicts: Vec<KindConflict>,
}

impl KnowledgeGraph {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn len(&self) -> usize {
        self.iris.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iris.is_empty()
    }

    pub fn triple_count(&self) -> u64 {
        self.triple_count
    }

    pub fn conflicts(&self) -> &[KindConflict] {
        &self.conflicts
    }

    pub fn entity(&self, iri: &str) -> Option<EntityId> {
        self.lookup.get(iri).copied()
    }

    pub fn contains(&self, iri: &str) -> bool {
        self.lookup.contains_key(iri)
    }

    pub fn entity_ids(&self) -> impl ExactSizeIterator<Item = EntityId> + '_ {
        (0..self.iris.len() as u32).map(EntityId)
    }

    pub fn iri(&self, id: EntityId) -> &Iri {
        &self.iris[id.index()]
    }

    pub fn kind(&self, id: EntityId) -> EntityKind {
        self.kinds[id.index()]
    }

    pub fn kind_of(&self, iri: &str) -> Option<EntityKind> {
        self.entity(iri).map(|id| self.kind(id))
    }

    /// Primary labels, including the local-name fallback for unlabeled entities.
    pub fn labels(&self, id: EntityId) -> &[String] {
        &self.labels[id.index()]
    }

    pub fn alt_labels(&self, id: EntityId) -> &[String] {
        &self.alt_labels[id.index()]
    }

    /// Retained property-value pairs (at most `card_facts` per entity).
    pub fn facts(&self, id: EntityId) -> impl Iterator<Item = (&Iri, &Object)> + '_ {
        self.facts[id.index()].iter().map(|(p, o)| (&self.predicates[*p as usize], o))
    }

    pub fn count_by_kind(&self, kind: EntityKind) -> usize {
        self.kinds.iter().filter(|k| **k == kind).count()
    }
}

const SUBJECT: u8 = 1;
const TYPED_PROPERTY: u8 = 2;
const TYPED_CLASS: u8 = 4;
const TYPE_OBJECT: u8 = 8;

/// Single-writer accumulator turning a triple stream into a [`KnowledgeGraph`].
pub struct GraphBuilder {
    id: String,
    config: ExtractionConfig,
    iris: Vec<Iri>,
    lookup: HashMap<Iri, EntityId>,
    evidence: Vec<u8>,
    labels: Vec<Vec<String>>,
    alt_labels: Vec<Vec<String>>,
    facts: Vec<Vec<(u32, Object)>>,
    predicates: Vec<Iri>,
    predicate_lookup: HashMap<Iri, u32>,
    triple_count: u64,
}

impl GraphBuilder {
    pub fn new(id: impl Into<String>, config: ExtractionConfig) -> Self {
        GraphBuilder {
            id: id.into(),
            config,
            iris: Vec::new(),
            lookup: HashMap::new(),
            evidence: Vec::new(),
            labels: Vec::new(),
            alt_labels: Vec::new(),
            facts: Vec::new(),
            predicates: Vec::new(),
            predicate_lookup: HashMap::new(),
            triple_count: 0,
        }
    }

    fn intern(&mut self, iri: &Iri) -> EntityId {
        if let Some(id) = self.lookup.get(iri) {
            return *id;
        }
        let id = EntityId(self.iris.len() as u32);
        self.iris.push(iri.clone());
        self.lookup.insert(iri.clone(), id);
        self.evidence.push(0);
        self.labels.push(Vec::new());
        self.alt_labels.push(Vec::new());
        self.facts.push(Vec::new());
        id
    }

    fn is_marker(&self, iri: &str) -> bool {
        self.config.class_markers.iter().any(|m| m == iri) || self.config.property_markers.iter().any(|m| m == iri)
    }

    pub fn push(&mut self, triple: Triple) {
        self.triple_count += 1;
        let subject = self.intern(&triple.subject);
        self.evidence[subject.index()] |= SUBJECT;
        let predicate = triple.predicate.as_str();

        if predicate == self.config.typing_predicate {
            if let Object::Iri(ty) = &triple.object {
                if self.config.property_markers.iter().any(|m| m == ty.as_str()) {
                    self.evidence[subject.index()] |= TYPED_PROPERTY;
                } else if self.config.class_markers.iter().any(|m| m == ty.as_str()) {
                    self.evidence[subject.index()] |= TYPED_CLASS;
                } else if !self.is_marker(ty.as_str()) {
                    let class = self.intern(ty);
                    self.evidence[class.index()] |= TYPE_OBJECT;
                }
            }
        } else if predicate == self.config.label_predicate {
            if let Object::Literal(lit) = &triple.object {
                push_unique(&mut self.labels[subject.index()], lit.lexical());
                return;
            }
        } else if predicate == self.config.alt_label_predicate {
            if let Object::Literal(lit) = &triple.object {
                push_unique(&mut self.alt_labels[subject.index()], lit.lexical());
                return;
            }
        }

        if self.facts[subject.index()].len() < self.config.card_facts {
            let p = match self.predicate_lookup.get(&triple.predicate) {
                Some(p) => *p,
                None => {
                    let p = self.predicates.len() as u32;
                    self.predicates.push(triple.predicate.clone());
                    self.predicate_lookup.insert(triple.predicate, p);
                    p
                }
            };
            self.facts[subject.index()].push((p, triple.object));
        }
    }

    pub fn finish(self) -> KnowledgeGraph {
        let mut conflicts = Vec::new();
        let kinds: Vec<EntityKind> = self
            .evidence
            .iter()
            .enumerate()
            .map(|(i, &ev)| {
                let class_evidence = ev & (TYPED_CLASS | TYPE_OBJECT) != 0;
                if ev & TYPED_PROPERTY != 0 {
                    if class_evidence {
                        conflicts.push(KindConflict { iri: self.iris[i].clone(), resolved: EntityKind::Property });
                    }
                    EntityKind::Property
                } else if class_evidence {
                    EntityKind::Class
                } else {
                    EntityKind::Instance
                }
            })
            .collect();

        let mut labels = self.labels;
        for (i, l) in labels.iter_mut().enumerate() {
            if l.is_empty() {
                l.push(self.iris[i].local_name());
            }
        }

        KnowledgeGraph {
            id: self.id,
            iris: self.iris,
            lookup: self.lookup,
            kinds,
            labels,
            alt_labels: self.alt_labels,
            facts: self.facts,
            predicates: self.predicates,
            triple_count: self.triple_count,
            conflicts,
        }
    }
}

fn push_unique(values: &mut Vec<String>, value: &str) {
    if !values.iter().any(|v| v == value) {
        values.push(value.to_owned());
    }
}

/// Builds a graph from an in-memory triple sequence.
pub fn build_graph(id: impl Into<String>, triples: impl IntoIterator<Item = Triple>, config: &ExtractionConfig) -> KnowledgeGraph {
    let mut builder = GraphBuilder::new(id, config.clone());
    for t in triples {
        builder.push(t);
    }
    builder.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iri(s: &str) -> Iri {
        Iri::new(s).unwrap()
    }

    #[test]
    fn iri_validation() {
        assert!(Iri::new("").is_err());
        assert!(Iri::new("http://x/a b").is_err());
        assert!(Iri::new("relative/path").is_err());
        assert!(Iri::new("1http://x").is_err());
        assert_eq!(iri("http://x/a").to_string(), "<http://x/a>");
    }

    #[test]
    fn local_name_fallback() {
        assert_eq!(iri("http://x/Kathryn_Janeway").local_name(), "Kathryn Janeway");
        assert_eq!(iri("http://x/onto#Song").local_name(), "Song");
        assert_eq!(iri("http://x/dir/").local_name(), "dir");
    }

    #[test]
    fn property_marker_assigns_property_kind() {
        let g = build_graph("g", [Triple::new(iri("http://x/p"), iri(RDF_TYPE), iri(RDF_PROPERTY))], &ExtractionConfig::default());
        assert_eq!(g.kind_of("http://x/p"), Some(EntityKind::Property));
        // markers never become entities themselves
        assert!(!g.contains(RDF_PROPERTY));
        assert_eq!(g.len(), 1);
    }

    #[test]
    fn typing_object_becomes_class() {
        let g = build_graph("g", [Triple::new(iri("http://x/a"), iri(RDF_TYPE), iri("http://x/C"))], &ExtractionConfig::default());
        assert_eq!(g.kind_of("http://x/C"), Some(EntityKind::Class));
        assert_eq!(g.kind_of("http://x/a"), Some(EntityKind::Instance));
    }

    #[test]
    fn unlabeled_entity_gets_local_name() {
        let g = build_graph(
            "g",
            [Triple::new(iri("http://x/Kathryn_Janeway"), iri("http://x/rank"), Literal::plain("Captain"))],
            &ExtractionConfig::default(),
        );
        let id = g.entity("http://x/Kathryn_Janeway").unwrap();
        assert_eq!(g.labels(id), ["Kathryn Janeway".to_owned()]);
        assert_eq!(g.facts(id).count(), 1);
    }

    #[test]
    fn class_and_property_conflict_resolves_to_property() {
        let p = iri("http://x/thing");
        let g = build_graph(
            "g",
            [
                Triple::new(p.clone(), iri(RDF_TYPE), iri(OWL_CLASS)),
                Triple::new(p.clone(), iri(RDF_TYPE), iri(RDF_PROPERTY)),
            ],
            &ExtractionConfig::default(),
        );
        assert_eq!(g.kind_of(p.as_str()), Some(EntityKind::Property));
        assert_eq!(g.conflicts().len(), 1);
    }

    #[test]
    fn labels_and_alt_labels_collected() {
        let a = iri("http://x/Kathryn_Janeway");
        let g = build_graph(
            "g",
            [
                Triple::new(a.clone(), iri(RDFS_LABEL), Literal::with_language("Kathryn Janeway", "en")),
                Triple::new(a.clone(), iri(SKOS_ALT_LABEL), Literal::plain("Catarina")),
                Triple::new(a.clone(), iri(SKOS_ALT_LABEL), Literal::plain("Catarina")),
            ],
            &ExtractionConfig::default(),
        );
        let id = g.entity(a.as_str()).unwrap();
        assert_eq!(g.labels(id), ["Kathryn Janeway".to_owned()]);
        assert_eq!(g.alt_labels(id), ["Catarina".to_owned()]);
        assert_eq!(g.triple_count(), 3);
    }

    #[test]
    fn config_file_overrides_defaults() {
        let cfg = ExtractionConfig::parse("label_predicate = \"http://xmlns.com/foaf/0.1/name\"\ncard_facts = 3\n").unwrap();
        assert_eq!(cfg.label_predicate, "http://xmlns.com/foaf/0.1/name");
        assert_eq!(cfg.typing_predicate, RDF_TYPE);
        assert_eq!(cfg.card_facts, 3);
        assert!(ExtractionConfig::parse("bogus = 1").is_err());
    }
}
