#include "cloaksim/report.hpp"

#include "cloaksim/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

namespace cloaksim {

using nlohmann::json;

namespace {

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

json real(double v) {
    if (std::isnan(v)) return nullptr;
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

double real(const json& j) {
    if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return INFINITY;
        if (s == "-inf") return -INFINITY;
        throw IoError("report JSON: bad number '" + s + "'");
    }
    return j.get<double>();
}

void slope_lines(std::ostream& out, const DecayReport& report) {
    for (const auto& f : report.fits) {
        out << "# slope " << f.quantity << " vs " << report.scale << " = " << num(f.slope)
            << " R2 = " << num(f.r_squared) << " residual = " << num(f.residual) << " points = " << f.points;
        if (f.flagged) out << " FLAGGED";
        if (!f.note.empty()) out << " (" << f.note << ")";
        out << '\n';
    }
}

void require_rows(const DecayReport& report) {
    if (report.rows.empty()) throw PreconditionError("report has no rows");
}

const char* const kColumns =
    "parameter,scale,h,vertices,h1_error,l2_error,dn_difference,neumann_error,iterations,converged";

}  // namespace

ReportFormat parse_report_format(const std::string& text) {
    if (text == "csv") return ReportFormat::Csv;
    if (text == "json") return ReportFormat::Json;
    if (text == "gnuplot-dat" || text == "dat") return ReportFormat::GnuplotDat;
    throw PreconditionError("unknown report format '" + text + "'");
}

std::string extension(ReportFormat format) {
    switch (format) {
    case ReportFormat::Csv: return "csv";
    case ReportFormat::Json: return "json";
    case ReportFormat::GnuplotDat: return "dat";
    }
    return "txt";
}

void write_csv(std::ostream& out, const DecayReport& report) {
    require_rows(report);
    out << kColumns << '\n';
    for (const auto& r : report.rows)
        out << num(r.parameter) << ',' << num(r.scale) << ',' << num(r.h) << ',' << r.vertices << ','
            << num(r.h1_error) << ',' << num(r.l2_error) << ',' << num(r.dn_difference) << ','
            << num(r.neumann_error) << ',' << r.iterations << ',' << (r.converged ? 1 : 0) << '\n';
    slope_lines(out, report);
}

void write_gnuplot(std::ostream& out, const DecayReport& report) {
    require_rows(report);
    out << "# experiment " << report.experiment << ", parameter " << report.parameter << '\n';
    out << "# columns:";
    std::stringstream cols(kColumns);
    std::string c;
    while (std::getline(cols, c, ',')) out << ' ' << c;
    out << '\n';
    for (const auto& r : report.rows)
        out << num(r.parameter) << ' ' << num(r.scale) << ' ' << num(r.h) << ' ' << r.vertices << ' '
            << num(r.h1_error) << ' ' << num(r.l2_error) << ' ' << num(r.dn_difference) << ' '
            << num(r.neumann_error) << ' ' << r.iterations << ' ' << (r.converged ? 1 : 0) << '\n';
    slope_lines(out, report);
    for (const auto& [k, v] : report.summary) out << "# " << k << " = " << num(v) << '\n';
    for (const auto& n : report.notes) out << "# note: " << n << '\n';
}

json to_json(const DecayReport& report) {
    json rows = json::array();
    for (const auto& r : report.rows)
        rows.push_back({{"parameter", real(r.parameter)},
                        {"scale", real(r.scale)},
                        {"h", real(r.h)},
                        {"vertices", r.vertices},
                        {"h1_error", real(r.h1_error)},
                        {"l2_error", real(r.l2_error)},
                        {"dn_difference", real(r.dn_difference)},
                        {"neumann_error", real(r.neumann_error)},
                        {"iterations", r.iterations},
                        {"converged", r.converged},
                        {"note", r.note}});
    json fits = json::array();
    for (const auto& f : report.fits)
        fits.push_back({{"quantity", f.quantity},
                        {"slope", real(f.slope)},
                        {"intercept", real(f.intercept)},
                        {"r_squared", real(f.r_squared)},
                        {"residual", real(f.residual)},
                        {"points", f.points},
                        {"excluded", f.excluded},
                        {"flagged", f.flagged},
                        {"note", f.note}});
    json summary = json::object();
    for (const auto& [k, v] : report.summary) summary[k] = real(v);
    return {{"experiment", report.experiment}, {"parameter", report.parameter}, {"scale", report.scale},
            {"rows", rows},       {"fits", fits},         {"summary", summary},
            {"notes", report.notes}};
}

DecayReport report_from_json(const json& j) {
    try {
        DecayReport r;
        r.experiment = j.at("experiment").get<std::string>();
        r.parameter = j.at("parameter").get<std::string>();
        r.scale = j.at("scale").get<std::string>();
        for (const auto& x : j.at("rows")) {
            DecayRow row;
            row.parameter = real(x.at("parameter"));
            row.scale = real(x.at("scale"));
            row.h = real(x.at("h"));
            row.vertices = x.at("vertices").get<long>();
            row.h1_error = real(x.at("h1_error"));
            row.l2_error = real(x.at("l2_error"));
            row.dn_difference = real(x.at("dn_difference"));
            row.neumann_error = real(x.at("neumann_error"));
            row.iterations = x.at("iterations").get<int>();
            row.converged = x.at("converged").get<bool>();
            row.note = x.at("note").get<std::string>();
            r.rows.push_back(row);
        }
        for (const auto& x : j.at("fits")) {
            SlopeFit f;
            f.quantity = x.at("quantity").get<std::string>();
            f.slope = real(x.at("slope"));
            f.intercept = real(x.at("intercept"));
            f.r_squared = real(x.at("r_squared"));
            f.residual = real(x.at("residual"));
            f.points = x.at("points").get<int>();
            f.excluded = x.at("excluded").get<int>();
            f.flagged = x.at("flagged").get<bool>();
            f.note = x.at("note").get<std::string>();
            r.fits.push_back(f);
        }
        for (const auto& [k, v] : j.at("summary").items()) r.summary[k] = real(v);
        r.notes = j.at("notes").get<std::vector<std::string>>();
        return r;
    } catch (const json::exception& e) {
        throw IoError(std::string("report JSON: ") + e.what());
    }
}

void write_json(std::ostream& out, const DecayReport& report) {
    require_rows(report);
    out << to_json(report).dump(2) << '\n';
}

DecayReport read_json(std::istream& in) {
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError(std::string("report JSON: ") + e.what());
    }
    return report_from_json(j);
}

std::vector<std::string> emit_report(const DecayReport& report, const std::vector<ReportFormat>& formats,
                                     const std::string& stem) {
    require_rows(report);
    std::vector<std::string> paths;
    for (ReportFormat f : formats) {
        const std::string path = stem + "." + extension(f);
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot write " + path);
        switch (f) {
        case ReportFormat::Csv: write_csv(out, report); break;
        case ReportFormat::Json: write_json(out, report); break;
        case ReportFormat::GnuplotDat: write_gnuplot(out, report); break;
        }
        if (!out) throw IoError("write failed: " + path);
        paths.push_back(path);
    }
    return paths;
}

}  // namespace cloaksim
