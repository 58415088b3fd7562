#pragma once

#include <optional>
#include <string>
#include <vector>

#include "biopepad/model.hpp"

namespace biopepad {

struct ModelSource {
    std::string text;
    std::string origin = "<inline>";
};

struct ParseDiagnostic {
    enum class Severity { Error, Warning };
    int line = 1;
    int column = 1;
    std::string message;
    Severity severity = Severity::Error;
};

struct ParseResult {
    std::optional<SystemSpec> spec;
    std::vector<ParseDiagnostic> diagnostics;

    bool ok() const { return spec.has_value(); }
    bool has_errors() const;
    std::vector<const ParseDiagnostic*> warnings() const;
};

/// Parses the textual model format. Any byte sequence yields either a spec
/// (possibly with warnings) or error diagnostics; it never throws on input.
ParseResult parse_model(const ModelSource& src);
ParseResult parse_model(std::string_view text, std::string_view origin = "<inline>");

/// Canonical text form; parsing it back yields a structurally equal spec.
std::string serialize_model(const SystemSpec& spec);

std::string format_diagnostic(const ParseDiagnostic& d, std::string_view origin);

}  // namespace biopepad
