#pragma once

// JSON documents for specs, fields and reports; CSV tables.

#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "isrm/complex_bridge.hpp"
#include "isrm/simulation.hpp"

namespace isrm {

inline constexpr int kSchemaVersion = 1;

/// Builds a spec from its JSON document; throws SpecError on schema violations.
/// The result has been validated on the probe grid.
IsrmSpec spec_from_json(const nlohmann::json& doc, const QuadratureConfig& cfg = {});
IsrmSpec load_spec(const std::string& path, const QuadratureConfig& cfg = {});

/// Real or complex matrix field.
using AnyField = std::variant<MatrixField, ComplexMatrixField>;

AnyField field_from_json(const nlohmann::json& doc, int base_dim);
AnyField load_field(const std::string& path, int base_dim);

Domain domain_from_json(const nlohmann::json& j);
/// A list of boxes, each a list of [lo, hi] pairs.
MeasurableSet set_from_json(const nlohmann::json& j, int dim);

/// "lo:hi" per axis joined by 'x', boxes joined by '+': "0:0.5x0:1+0.5:1x0:0.5".
MeasurableSet parse_set(const std::string& text, int dim);

/// Probe grid from "tmin:tmax:steps" per axis (one spec reused for every axis).
std::vector<Vec> parse_grid(const std::vector<std::string>& axes, int m);
/// Probes from "a,b;c,d" (points separated by ';', coordinates by ',').
std::vector<Vec> parse_points(const std::string& text, int m);
Vec parse_vector(const std::string& text, int m);

nlohmann::json report_to_json(const IntegrabilityReport& rep);
nlohmann::json report_to_json(const ValidationReport& rep);

/// Shortest round-trip representation ("%.17g").
std::string format_number(double x);
void write_csv_header(std::ostream& os, const std::vector<std::string>& columns);
void write_csv_row(std::ostream& os, const std::vector<double>& values);
void write_samples_csv(std::ostream& os, const Mat& samples);

}  // namespace isrm
