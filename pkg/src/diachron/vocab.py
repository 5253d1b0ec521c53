"""Vocabulary constants: model namespace, builtin prefixes, schema partition."""

from __future__ import annotations

from .terms import RDF_NS, XSD_NS, Term, iri

DIACHRON_NS = "http://diachron.org/model#"
RDFS_NS = "http://www.w3.org/2000/01/rdf-schema#"
OWL_NS = "http://www.w3.org/2002/07/owl#"
DCTERMS_NS = "http://purl.org/dc/terms/"
EFO_NS = "http://www.ebi.ac.uk/efo/"
CO_NS = "http://diachron.org/co#"

DICTIONARY_GRAPH = iri("urn:diachron:dictionary")

RDF_TYPE = iri(RDF_NS + "type")
RDFS_LABEL = iri(RDFS_NS + "label")
DCT_DATE = iri(DCTERMS_NS + "date")
DCT_CREATOR = iri(DCTERMS_NS + "creator")
XSD_DATE_T = XSD_NS + "date"

# Model classes
DIACHRONIC_DATASET = iri(DIACHRON_NS + "DiachronicDataset")
DATASET = iri(DIACHRON_NS + "Dataset")
RECORD_SET = iri(DIACHRON_NS + "RecordSet")
SCHEMA_SET = iri(DIACHRON_NS + "SchemaSet")
RECORD = iri(DIACHRON_NS + "Record")
SCHEMA_OBJECT = iri(DIACHRON_NS + "SchemaObject")
RECORD_ATTRIBUTE = iri(DIACHRON_NS + "RecordAttribute")
CHANGE_SET = iri(DIACHRON_NS + "ChangeSet")
DIACHRONIC_RESOURCE = iri(DIACHRON_NS + "DiachronicResource")

# Change types
ADD_ATTRIBUTE = iri(DIACHRON_NS + "AddAttributeChange")
DELETE_ATTRIBUTE = iri(DIACHRON_NS + "DeleteAttributeChange")
LABEL_MODIFICATION = iri(DIACHRON_NS + "LabelModificationChange")

# Model properties
HAS_INSTANTIATION = iri(DIACHRON_NS + "hasInstantiation")
HAS_RECORD_SET = iri(DIACHRON_NS + "hasRecordSet")
HAS_SCHEMA_SET = iri(DIACHRON_NS + "hasSchemaSet")
HAS_RECORD = iri(DIACHRON_NS + "hasRecord")
HAS_SCHEMA_OBJECT = iri(DIACHRON_NS + "hasSchemaObject")
HAS_RECORD_ATTRIBUTE = iri(DIACHRON_NS + "hasRecordAttribute")
SUBJECT = iri(DIACHRON_NS + "subject")
PREDICATE = iri(DIACHRON_NS + "predicate")
OBJECT = iri(DIACHRON_NS + "object")
HAS_CHANGE_SET = iri(DIACHRON_NS + "hasChangeSet")
OLD_VERSION = iri(DIACHRON_NS + "oldVersion")
NEW_VERSION = iri(DIACHRON_NS + "newVersion")
HAS_CHANGE = iri(DIACHRON_NS + "hasChange")
PARAMETER_1 = iri(DIACHRON_NS + "parameter1")
PARAMETER_2 = iri(DIACHRON_NS + "parameter2")
VERSION_ORDINAL = iri(DIACHRON_NS + "versionOrdinal")
STORAGE_POLICY = iri(DIACHRON_NS + "storagePolicy")
RECORD_COUNT = iri(DIACHRON_NS + "recordCount")
ATTRIBUTE_COUNT = iri(DIACHRON_NS + "attributeCount")
DESCRIPTION_QUERY = iri(DIACHRON_NS + "descriptionQuery")

BUILTIN_PREFIXES: dict[str, str] = {
    "rdf": RDF_NS,
    "rdfs": RDFS_NS,
    "owl": OWL_NS,
    "xsd": XSD_NS,
    "dcterms": DCTERMS_NS,
    "diachron": DIACHRON_NS,
    "efo": EFO_NS,
    "co": CO_NS,
}

# Predicates whose statements describe schema rather than instance data.
# rdf:type joins them only when the object looks like a schema class.
_SCHEMA_PREDICATES = frozenset(
    {
        RDFS_NS + "subClassOf",
        RDFS_NS + "subPropertyOf",
        RDFS_NS + "domain",
        RDFS_NS + "range",
        OWL_NS + "equivalentClass",
        OWL_NS + "equivalentProperty",
        OWL_NS + "disjointWith",
        OWL_NS + "inverseOf",
    }
)

_SCHEMA_CLASSES = frozenset(
    {
        RDFS_NS + "Class",
        OWL_NS + "Class",
        OWL_NS + "ObjectProperty",
        OWL_NS + "DatatypeProperty",
        OWL_NS + "AnnotationProperty",
        OWL_NS + "TransitiveProperty",
        OWL_NS + "FunctionalProperty",
        RDF_NS + "Property",
        OWL_NS + "Ontology",
        OWL_NS + "Restriction",
    }
)


def is_schema_statement(p: Term, o: Term) -> bool:
    """Partition rule: schema statements become schema objects, the rest records."""
    if p.value in _SCHEMA_PREDICATES:
        return True
    return p == RDF_TYPE and o.is_iri and o.value in _SCHEMA_CLASSES
