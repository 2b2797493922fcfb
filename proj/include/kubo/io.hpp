#pragma once

// Matrix CSV files and measure JSON.
//
// Measure JSON:
//   {"atoms": [[t, a], ...],
//    "ac": {"id": "lebesgue"|"geometric"|"log_mean", "w": w, "alpha": α}   (or an array of these)
//    "sc": {"id": "cantor", "w": w} | {"maps": [[r, b], ...], "probs": [...], "weight": w}   (or an array)
//    "tail": mass of omitted atoms}
// Every field is optional. Emitted "ac" entries also carry "exponents": [p, q].

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "kubo/measure.hpp"
#include "kubo/spd.hpp"

namespace kubo {

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double x);

/// Rows per line, comma-separated, no header. Symmetrizes; writes a warning
/// to `warn` (if given) when the asymmetry exceeds 1e-8·‖A‖.
/// Throws UsageError on malformed numbers and ShapeError on ragged or non-square input.
SymMatrix parse_matrix_csv(std::istream& in, std::ostream* warn = nullptr, const std::string& name = "matrix");
SymMatrix read_matrix_csv(const std::string& path, std::ostream* warn = nullptr);
void write_matrix_csv(std::ostream& out, const Matrix& m);

nlohmann::json measure_to_json(const UnitMeasure& m);
/// Throws UsageError on malformed input (unknown ids, bad shapes, invalid parameters).
UnitMeasure measure_from_json(const nlohmann::json& j);
UnitMeasure parse_measure_json(const std::string& text);

}  // namespace kubo
