#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace ebind::cli {

struct SchemaIssue {
    std::string path;  // JSON pointer into the document
    std::string message;
};

// The published run-spec schema, compiled in from schema/runspec.schema.json.
const nlohmann::json& runspec_schema();

// Draft-07 subset: $ref to local definitions, type, enum, required, properties,
// additionalProperties (boolean), items, min/maxItems, minimum, maximum,
// exclusiveMinimum, exclusiveMaximum.
std::vector<SchemaIssue> validate(const nlohmann::json& schema, const nlohmann::json& doc);

inline std::vector<SchemaIssue> validate_runspec(const nlohmann::json& doc) {
    return validate(runspec_schema(), doc);
}

}  // namespace ebind::cli
