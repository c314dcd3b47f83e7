#pragma once

#include "cloaksim/experiments.hpp"

#include <iosfwd>
#include <json.hpp>
#include <string>
#include <vector>

namespace cloaksim {

enum class ReportFormat { Csv, Json, GnuplotDat };

/// "csv", "json", "gnuplot-dat" (also "dat").
ReportFormat parse_report_format(const std::string& text);
std::string extension(ReportFormat format);

/// Header line, one line per row, then "# slope ..." footer lines. Numbers use %.12g.
void write_csv(std::ostream& out, const DecayReport& report);
/// Whitespace-separated columns; metadata and fitted slopes on lines starting with '#'.
void write_gnuplot(std::ostream& out, const DecayReport& report);
/// NaN is written as null and ±∞ as the strings "inf" / "-inf"; read_json inverts this exactly.
void write_json(std::ostream& out, const DecayReport& report);
DecayReport read_json(std::istream& in);

nlohmann::json to_json(const DecayReport& report);
DecayReport report_from_json(const nlohmann::json& j);

/// Writes <stem>.<ext> for each format and returns the paths.
/// Throws PreconditionError for an empty report and IoError when a file cannot be written.
std::vector<std::string> emit_report(const DecayReport& report, const std::vector<ReportFormat>& formats,
                                     const std::string& stem);

}  // namespace cloaksim
