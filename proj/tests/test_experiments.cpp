#include "cloaksim/errors.hpp"
#include "cloaksim/experiments.hpp"
#include "cloaksim/report.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace cloaksim;

namespace {

DecayReport sample_report() {
    DecayReport r;
    r.experiment = "regular-cloak";
    r.parameter = "r";
    r.scale = "r";
    for (double x : {0.4, 0.2, 0.1, 0.05}) {
        DecayRow row;
        row.parameter = row.scale = x;
        row.h = 0.05;
        row.vertices = 1000;
        row.h1_error = 0.3 * x;
        row.l2_error = 0.1 * x * x;
        row.dn_difference = 1.0 / 3.0 * x;
        row.neumann_error = std::nan("");
        row.iterations = 1;
        row.converged = true;
        r.rows.push_back(row);
    }
    r.fits.push_back(fit_slope("h1_error", {0.4, 0.2, 0.1, 0.05}, r.column("h1_error")));
    r.summary["worst_increase"] = -0.5;
    r.summary["extra"] = INFINITY;
    r.notes.push_back("synthetic");
    return r;
}

}  // namespace

TEST_CASE("slope fits") {
    const std::vector<double> x{1, 2, 4, 8};
    const auto f = fit_slope("q", x, {3, 12, 48, 192});
    CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(f.r_squared == doctest::Approx(1.0));
    CHECK_FALSE(f.flagged);
    const auto few = fit_slope("q", {1, 2, 4}, {1, 2, 4});
    CHECK(few.flagged);
    CHECK(std::isnan(few.slope));
    const auto skip = fit_slope("q", {1, 2, 4, 8, 16}, {1, 2, 4, 8, 16}, {true, true, false, true, true});
    CHECK(skip.points == 4);
    CHECK(skip.excluded == 1);
    CHECK(skip.note.find("excluded") != std::string::npos);
    const auto noisy = fit_slope("q", {1, 2, 3, 4, 5}, {1, 5, 1, 5, 1});
    CHECK(noisy.flagged);
    CHECK(noisy.r_squared < 0.9);
}

TEST_CASE("worst increase") {
    CHECK(worst_increase({4, 2, 1}) == doctest::Approx(-0.5));
    CHECK(worst_increase({4, 2, 2.2}) == doctest::Approx(0.1));
    CHECK(std::isnan(worst_increase({1})));
}

TEST_CASE("config validation") {
    ExperimentConfig c;
    CHECK_THROWS_AS(c.check(), PreconditionError);
    c.schedule = {0.4, 0.1, 0.2};
    CHECK_THROWS_AS(c.check(), PreconditionError);
    c.schedule = {0.4, 0.2, 0.1, 0.05};
    CHECK_NOTHROW(c.check());
    c.grading = 0.0;
    c.h = 0.05;
    CHECK_THROWS_AS(c.check(), PreconditionError);
    c.kind = ExperimentKind::TruncatedSingular;
    c.schedule = {1.5, 1.2};
    c.layer_elements = 4;
    CHECK_THROWS_AS(c.check(), PreconditionError);
    CHECK(parse_experiment_kind("homogenization") == ExperimentKind::Homogenization);
    CHECK_THROWS_AS(parse_experiment_kind("nope"), PreconditionError);
}

TEST_CASE("cloaking nothing gives zero error") {
    ExperimentConfig c;
    c.schedule = {0.4, 0.3, 0.2, 0.1};
    c.h = 0.2;
    c.modes = 2;
    c.inclusion = "identity";
    const auto r = run_regular_cloak_sweep(c);
    REQUIRE(r.rows.size() == 4);
    for (const auto& row : r.rows) {
        CHECK(row.converged);
        CHECK(row.h1_error < 1e-10);
        CHECK(row.dn_difference < 1e-10);
        CHECK(row.neumann_error < 1e-10);
    }
}

TEST_CASE("identity map leaves the DN map unchanged exactly") {
    ExperimentConfig c;
    c.kind = ExperimentKind::DiffeoInvariance;
    c.schedule = {0.3, 0.2};
    c.modes = 2;
    c.coefficient = "isotropic-sin";
    c.inclusion = "identity";
    c.map = "identity";
    const auto r = run_diffeo_invariance(c);
    for (const auto& row : r.rows) CHECK(row.dn_difference == 0.0);
}

TEST_CASE("under-resolved microstructure is refused") {
    ExperimentConfig c;
    c.kind = ExperimentKind::Homogenization;
    c.schedule = {1, 2};
    c.elements_per_period = 4;
    const auto r = run_homogenization_sweep(c);
    for (const auto& row : r.rows) {
        CHECK_FALSE(row.converged);
        CHECK(row.note.find("refused") != std::string::npos);
    }
}

TEST_CASE("report formats") {
    const auto r = sample_report();
    std::stringstream csv;
    write_csv(csv, r);
    std::vector<std::string> lines;
    for (std::string l; std::getline(csv, l);) lines.push_back(l);
    REQUIRE(lines.size() == 6);
    CHECK(lines[0].rfind("parameter,", 0) == 0);
    CHECK(lines[1].rfind("0.4,0.4,0.05,1000,", 0) == 0);
    CHECK(lines[5].rfind("# slope h1_error vs r = 1 ", 0) == 0);

    std::stringstream dat;
    write_gnuplot(dat, r);
    CHECK(dat.str().find("# slope h1_error") != std::string::npos);
    for (std::string l; std::getline(dat, l);)
        if (!l.empty() && l[0] != '#') CHECK(std::count(l.begin(), l.end(), ' ') == 9);

    std::stringstream js;
    write_json(js, r);
    const auto back = read_json(js);
    CHECK(back == r);
    std::stringstream again;
    write_json(again, back);
    std::stringstream first;
    write_json(first, r);
    CHECK(again.str() == first.str());

    DecayReport empty;
    std::stringstream sink;
    CHECK_THROWS_AS(write_csv(sink, empty), PreconditionError);
    CHECK_THROWS_AS(emit_report(empty, {ReportFormat::Csv}, "/tmp/x"), PreconditionError);
    CHECK_THROWS_AS(emit_report(r, {ReportFormat::Csv}, "/nonexistent/dir/x"), IoError);
    CHECK(parse_report_format("gnuplot-dat") == ReportFormat::GnuplotDat);
    CHECK_THROWS_AS(parse_report_format("xml"), PreconditionError);
}

TEST_CASE("sweeps are deterministic across thread counts") {
    ExperimentConfig c;
    c.kind = ExperimentKind::TruncatedSingular;
    c.schedule = {1.6, 1.3};
    c.h = 0.2;
    c.layer_elements = 8;
    c.modes = 2;
    c.inclusion = "sin5";
    const auto a = run_truncated_singular_sweep(c);
    c.threads = 2;
    const auto b = run_truncated_singular_sweep(c);
    std::stringstream sa, sb;
    write_json(sa, a);
    write_json(sb, b);
    CHECK(sa.str() == sb.str());
}
